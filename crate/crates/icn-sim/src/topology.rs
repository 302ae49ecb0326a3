//! Scale-free topology: Barabási–Albert preferential attachment over the
//! cache routers, exact Brandes betweenness to pick publisher attachment
//! points, and static shortest-path next-hop tables over the full node graph
//! (routers + publisher nodes + the subscription manager).

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::TopologyCfg;

pub const NO_HOP: u16 = u16::MAX;

#[derive(Clone, Debug)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    pub capacity_bps: u64,
    pub prop_delay_ns: u64,
}

#[derive(Clone, Debug)]
pub struct Topology {
    pub n_routers: usize,
    pub n_publishers: usize,
    /// Adjacency over all nodes (routers, then publisher nodes, then the
    /// manager node).
    pub adj: Vec<Vec<usize>>,
    pub links: Vec<Link>,
    /// (min(a,b), max(a,b)) -> link index, ordered for lookup.
    link_lookup: Vec<Vec<(usize, usize)>>,
    /// Router betweenness centrality (router indices only).
    pub betweenness: Vec<f64>,
    /// Router each publisher attaches to.
    pub pub_attach: Vec<usize>,
    pub gateways: Vec<usize>,
    /// next_hop[dest][node] = next node toward dest.
    pub next_hop: Vec<Vec<u16>>,
    /// dist[dest][node] = hop count toward dest.
    pub dist: Vec<Vec<u16>>,
}

impl Topology {
    pub fn n_nodes(&self) -> usize {
        self.n_routers + self.n_publishers + 1
    }

    pub fn publisher_node(&self, p: usize) -> usize {
        self.n_routers + p
    }

    pub fn manager_node(&self) -> usize {
        self.n_routers + self.n_publishers
    }

    pub fn is_router(&self, node: usize) -> bool {
        node < self.n_routers
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<usize> {
        self.link_lookup[a].iter().find(|(n, _)| *n == b).map(|(_, l)| *l)
    }

    pub fn hops(&self, from: usize, to: usize) -> u16 {
        self.dist[to][from]
    }
}

/// Barabási–Albert graph: a (m+1)-clique seed, then each new node attaches
/// `m` edges to distinct existing nodes with probability proportional to
/// degree.
pub fn barabasi_albert(n: usize, m: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    assert!(n > m && m >= 1);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    // Endpoint list: each node appears once per incident edge.
    let mut endpoints: Vec<usize> = Vec::new();
    let seed = m + 1;
    for a in 0..seed {
        for b in (a + 1)..seed {
            adj[a].push(b);
            adj[b].push(a);
            endpoints.push(a);
            endpoints.push(b);
        }
    }
    for v in seed..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m);
        while targets.len() < m {
            let t = endpoints[rng.gen_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            adj[v].push(t);
            adj[t].push(v);
            endpoints.push(v);
            endpoints.push(t);
        }
    }
    adj
}

/// Exact betweenness centrality (Brandes): BFS from every source, then
/// back-propagate dependency scores along shortest paths.
pub fn betweenness_centrality(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut centrality = vec![0.0f64; n];
    for s in 0..n {
        let mut stack: Vec<usize> = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // Undirected graph: each pair counted twice.
    for c in &mut centrality {
        *c /= 2.0;
    }
    centrality
}

/// Builds the full topology: BA core, publishers at the top-betweenness
/// routers, the manager beside the single highest-betweenness router, and
/// gateways drawn uniformly from the remaining routers.
pub fn generate(cfg: &TopologyCfg, rng: &mut impl Rng) -> Topology {
    let n_r = cfg.n_routers;
    let n_p = cfg.n_publishers;
    let router_adj = barabasi_albert(n_r, cfg.ba_m, rng);
    let betweenness = betweenness_centrality(&router_adj);

    // Publishers go to the top-n routers by betweenness (ties by id).
    let mut order: Vec<usize> = (0..n_r).collect();
    order.sort_by(|&a, &b| {
        betweenness[b]
            .partial_cmp(&betweenness[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let pub_attach: Vec<usize> = order[..n_p].to_vec();

    // Gateways: uniform sample from the remaining routers.
    let mut remaining: Vec<usize> = order[n_p..].to_vec();
    remaining.sort_unstable();
    let gateways: Vec<usize> = {
        let mut g = remaining
            .choose_multiple(rng, cfg.n_gateways)
            .copied()
            .collect::<Vec<_>>();
        g.sort_unstable();
        g
    };

    // Full node graph: routers + one node per publisher + the manager, each
    // attached by one link.
    let n_nodes = n_r + n_p + 1;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (v, neighbors) in router_adj.iter().enumerate() {
        adj[v] = neighbors.clone();
    }
    for (p, &attach) in pub_attach.iter().enumerate() {
        let node = n_r + p;
        adj[node].push(attach);
        adj[attach].push(node);
    }
    let mgr = n_r + n_p;
    adj[mgr].push(order[0]);
    adj[order[0]].push(mgr);

    // Deterministic neighbor order for BFS tie-breaking.
    for list in &mut adj {
        list.sort_unstable();
    }

    let prop_ns = (cfg.prop_delay_ms * 1e6) as u64;
    let mut links = Vec::new();
    let mut link_lookup: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_nodes];
    for a in 0..n_nodes {
        for &b in &adj[a] {
            if a < b {
                let idx = links.len();
                links.push(Link {
                    a,
                    b,
                    capacity_bps: cfg.link_bps,
                    prop_delay_ns: prop_ns,
                });
                link_lookup[a].push((b, idx));
                link_lookup[b].push((a, idx));
            }
        }
    }

    // Per-destination BFS trees give next hops; parent = first discoverer
    // with sorted adjacency, so routing is deterministic.
    let mut next_hop = vec![vec![NO_HOP; n_nodes]; n_nodes];
    let mut dist = vec![vec![NO_HOP; n_nodes]; n_nodes];
    for dest in 0..n_nodes {
        let nh = &mut next_hop[dest];
        let d = &mut dist[dest];
        d[dest] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(dest);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if d[w] == NO_HOP {
                    d[w] = d[v] + 1;
                    nh[w] = v as u16;
                    queue.push_back(w);
                }
            }
        }
    }

    Topology {
        n_routers: n_r,
        n_publishers: n_p,
        adj,
        links,
        link_lookup,
        betweenness,
        pub_attach,
        gateways,
        next_hop,
        dist,
    }
}
