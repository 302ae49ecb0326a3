//! The deterministic discrete-event simulator: routers with content stores
//! and PITs, store-and-forward links with FIFO queueing, protocol-driving
//! consumers at gateways, publishers and the subscription manager as nodes,
//! plus per-scheme request logic.
//!
//! Determinism: one event loop, integer nanosecond clock, ties broken by a
//! monotone sequence number, and every random draw comes from seed-derived
//! streams consumed in event order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use sdpc_core::crypto::{hash_parts, sym_encrypt, SecretNumber, SymmetricKey};
use sdpc_core::naming::{segment_name, NameKind, ObjectId, Prefix, SdpcName};
use sdpc_core::protocol::{
    Consumer as SdpcConsumer, ConsumerId, Manager, ManagerCounters, Profile, ProtocolMsg,
    Publisher as SdpcPublisher, PublisherCounters, PublisherId, PublisherInfo,
};

use crate::adversary::{Adversary, Injection};
use crate::cache::{ContentStore, PolicyKind};
use crate::config::{SchemeKind, SimConfig, Weaken};
use crate::metrics::{Resolution, RouterCounters, RunMetrics};
use crate::packet::{
    transmission_ns, CacheRule, Data, DataBody, Directed, Face, Interest, McacLabel, NameBytes,
    NameRef, Origin, Packet, CONTROL_BYTES, INTEREST_BYTES,
};
use crate::topology::{self, Topology, NO_HOP};
use crate::workload::{self, Arrival, ChurnEvent, Zipf};

const PIT_TTL_NS: u64 = 60_000_000_000;
const PIT_SWEEP_NS: u64 = 30_000_000_000;

#[derive(Clone, Debug)]
enum Event {
    Arrival(usize),
    Packet {
        node: usize,
        from: Face,
        packet: Packet,
    },
    SegTimeout {
        instance: u64,
        attempt: u32,
    },
    HandshakeTimeout {
        consumer: u32,
        publisher: usize,
        attempt: u32,
    },
    KeyReqTimeout {
        consumer: u32,
        object: usize,
        attempt: u32,
    },
    PubDeadline {
        publisher: usize,
        rid: u64,
    },
    Churn(usize),
    PitSweep,
}

struct Scheduled {
    at: u64,
    seq: u64,
    ev: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

struct PitEntry {
    faces: Vec<Face>,
    expiry: u64,
}

struct Router {
    cs: ContentStore,
    pit: HashMap<(NameBytes, bool), PitEntry>,
    is_gateway: bool,
    counters: RouterCounters,
}

#[derive(Clone, Debug)]
struct CatalogObject {
    id: ObjectId,
    publisher: usize,
    label: McacLabel,
}

struct ReqState {
    consumer: u32,
    object: usize,
    issued_ns: u64,
    segments_pending: u32,
    failed: bool,
    completed: bool,
}

struct InstState {
    req: u64,
    name: NameBytes,
    attempt: u32,
    resolution: Resolution,
    reached_pub: bool,
    timeout_base: u64,
    interest: Interest,
}

struct SimConsumer {
    gateway: usize,
    /// Outstanding segment names -> instance ids.
    outstanding: HashMap<NameBytes, Vec<u64>>,
}

struct PendingHandshake {
    crid: u64,
    name: NameBytes,
    payload: Arc<Vec<u8>>,
    dest: usize,
    anchor: u64,
    waiters: Vec<u64>,
    attempt: u32,
    proto_instance: u64,
}

struct KeyPending {
    name: NameBytes,
    anchor: u64,
    waiters: Vec<u64>,
    attempt: u32,
    proto_instance: u64,
}

struct SdpcState {
    publishers: Vec<SdpcPublisher>,
    manager: Manager,
    directory: Vec<PublisherInfo>,
    consumers: Vec<SdpcConsumer>,
    pending: HashMap<(u32, usize), PendingHandshake>,
    handshake_names: HashMap<NameBytes, (u32, usize)>,
    plain_segment_names: bool,
    plain_payloads: bool,
}

struct GroupKeyState {
    epoch: Vec<u32>,
    join_epoch: Vec<Vec<u32>>,
    rekey_tree: Vec<Vec<(usize, usize)>>,
}

struct EuReState {
    /// Revocation epoch per object: a leave rotates the keys of every object
    /// the leaver held, leaving cached copies stale under the same name.
    epoch: Vec<u32>,
    key_epoch: HashMap<(u32, usize), u32>,
    pending: HashMap<(u32, usize), KeyPending>,
    keyreq_names: HashMap<NameBytes, (u32, usize)>,
}

enum SchemeState {
    Sdpc(Box<SdpcState>),
    Plain,
    E2e,
    GroupKey(GroupKeyState),
    Mcac,
    EuRe(EuReState),
}

pub struct RunOutput {
    pub metrics: RunMetrics,
    pub manager_counters: Option<ManagerCounters>,
    pub publisher_counters: Vec<PublisherCounters>,
    pub adversary: Option<Adversary>,
    /// Ground truth for monitoring evaluation: content interest name ->
    /// catalog object (collected only when an adversary is present).
    pub name_truth: HashMap<Vec<u8>, usize>,
}

pub struct Simulation {
    cfg: SimConfig,
    topo: Topology,
    catalog: Vec<CatalogObject>,
    name_to_obj: HashMap<String, usize>,

    now: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,

    routers: Vec<Router>,
    link_busy: Vec<[u64; 2]>,
    pub_cpu: Vec<u64>,
    mgr_cpu: u64,

    consumers: Vec<SimConsumer>,
    requests: Vec<ReqState>,
    instances: Vec<InstState>,
    open_requests: u64,
    arrivals: Vec<Arrival>,
    churn: Vec<ChurnEvent>,

    scheme: SchemeState,
    rng: ChaCha8Rng,
    next_rid: u64,

    metrics: RunMetrics,
    download_sum_s: f64,
    proto_reached: Vec<bool>,

    adversary: Option<Adversary>,
    name_truth: HashMap<Vec<u8>, usize>,
    run_to_quiescence: bool,

    sym_cost_ns: u64,
    asym_cost_ns: u64,
    reencrypt_ns: u64,
    tcb_ns: u64,
    stolen_deadline_ns: u64,
    horizon_ns: u64,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Simulation {
        Self::with_adversary(cfg, None)
    }

    /// Attaches an adversary after construction (so attack drivers can read
    /// scheme state, e.g. leaked names, before arming it).
    pub fn attach_adversary(&mut self, mut adversary: Adversary) {
        for inj in adversary.initial_injections() {
            let Injection { at_ns, router, packet } = inj;
            self.schedule(
                at_ns,
                Event::Packet {
                    node: router,
                    from: Face::Adversary,
                    packet,
                },
            );
        }
        self.adversary = Some(adversary);
        self.run_to_quiescence = true;
    }

    pub fn with_adversary(cfg: SimConfig, adversary: Option<Adversary>) -> Simulation {
        cfg.validate().expect("validated config");
        let topo = topology::generate(&cfg.topology, &mut workload::stream_rng(cfg.seed, "topo"));

        // Catalog: ranks round-robin across publishers.
        let n_items = cfg.topology.n_publishers * cfg.catalog.items_per_publisher;
        let mut catalog = Vec::with_capacity(n_items);
        let mut name_to_obj = HashMap::new();
        for idx in 0..n_items {
            let id = ObjectId::new(format!("obj{idx}.dat"), 1);
            name_to_obj.insert(id.name.clone(), idx);
            catalog.push(CatalogObject {
                id,
                publisher: idx % cfg.topology.n_publishers,
                label: workload::mcac_label(cfg.seed, idx, cfg.scheme_params.h_fraction),
            });
        }

        let zipf = Zipf::new(n_items, cfg.catalog.zipf_alpha);
        let arrivals = workload::generate_arrivals(&cfg, &zipf);
        let churn = match cfg.scheme {
            SchemeKind::NdnGroupKey | SchemeKind::EuRe => workload::generate_churn(&cfg),
            _ => Vec::new(),
        };

        let policy = PolicyKind::parse(&cfg.cache.policy).expect("validated policy");
        let routers: Vec<Router> = (0..cfg.topology.n_routers)
            .map(|r| Router {
                cs: ContentStore::new(
                    cfg.cache.capacity_bytes,
                    policy,
                    cfg.cache.privileged_fraction,
                ),
                pit: HashMap::new(),
                is_gateway: topo.gateways.contains(&r),
                counters: RouterCounters::default(),
            })
            .collect();

        let n_consumers = cfg.topology.n_gateways * cfg.workload.consumers_per_gateway;
        let consumers: Vec<SimConsumer> = (0..n_consumers)
            .map(|c| SimConsumer {
                gateway: topo.gateways[c / cfg.workload.consumers_per_gateway],
                outstanding: HashMap::new(),
            })
            .collect();

        let scheme = Self::build_scheme(&cfg, &topo, &catalog, n_consumers);

        let sym_cost_ns = (cfg.scheme_params.sym_op_cost_us * 1e3) as u64;
        let asym_cost_ns = (cfg.scheme_params.sym_op_cost_us * cfg.scheme_params.asym_cost_ratio
            * 1e3) as u64;
        let mut sim = Simulation {
            link_busy: vec![[0, 0]; topo.links.len()],
            pub_cpu: vec![0; cfg.topology.n_publishers],
            mgr_cpu: 0,
            routers,
            consumers,
            requests: Vec::new(),
            instances: Vec::new(),
            open_requests: 0,
            arrivals,
            churn,
            scheme,
            rng: workload::stream_rng(cfg.seed, "protocol"),
            next_rid: 0,
            metrics: RunMetrics::default(),
            download_sum_s: 0.0,
            proto_reached: Vec::new(),
            run_to_quiescence: adversary.is_some(),
            adversary,
            name_truth: HashMap::new(),
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            name_to_obj,
            catalog,
            reencrypt_ns: (cfg.scheme_params.reencrypt_delay_ms * 1e6) as u64,
            tcb_ns: (cfg.scheme_params.tcb_delay_ms * 1e6) as u64,
            stolen_deadline_ns: (cfg.scheme_params.stolen_ticket_deadline_s * 1e9) as u64,
            horizon_ns: (cfg.workload.horizon_s * 1e9) as u64,
            sym_cost_ns,
            asym_cost_ns,
            topo,
            cfg,
        };
        sim.schedule_initial();
        sim
    }

    fn build_scheme(
        cfg: &SimConfig,
        topo: &Topology,
        catalog: &[CatalogObject],
        n_consumers: usize,
    ) -> SchemeState {
        match cfg.scheme {
            SchemeKind::Sdpc => {
                let mut crypto_rng = workload::stream_rng(cfg.seed, "sdpc-crypto");
                let mut manager = Manager::new();
                manager.linear_scan = cfg.weaken == Weaken::LinearRegistry;
                let mut publishers = Vec::new();
                let mut directory = Vec::new();
                for p in 0..cfg.topology.n_publishers {
                    let id = PublisherId(p as u32);
                    let keypair =
                        sdpc_core::crypto::PublisherKeyPair::generate(&mut crypto_rng);
                    let prefix = Prefix::new(vec![format!("pub{p}")]);
                    let publisher = SdpcPublisher::new(id, prefix.clone(), keypair);
                    manager.register_publisher(id, publisher.public_key().clone());
                    directory.push(PublisherInfo {
                        id,
                        public_key: publisher.public_key().clone(),
                        prefix,
                    });
                    publishers.push(publisher);
                }
                for (idx, obj) in catalog.iter().enumerate() {
                    let p = obj.publisher;
                    let published = publishers[p]
                        .publish_object(
                            obj.id.clone(),
                            idx as u64,
                            cfg.catalog.segments_per_item,
                            &mut crypto_rng,
                        )
                        .expect("publish");
                    manager.escrow_grant(PublisherId(p as u32), published.grant.clone());
                }
                let mut consumers = Vec::with_capacity(n_consumers);
                for c in 0..n_consumers {
                    let n_s = SecretNumber::fresh(&mut crypto_rng);
                    manager.register_consumer(ConsumerId(c as u64), n_s, Profile::active());
                    consumers.push(SdpcConsumer::new(ConsumerId(c as u64), n_s));
                }
                SchemeState::Sdpc(Box::new(SdpcState {
                    publishers,
                    manager,
                    directory,
                    consumers,
                    pending: HashMap::new(),
                    handshake_names: HashMap::new(),
                    plain_segment_names: cfg.weaken == Weaken::PlainNames,
                    plain_payloads: cfg.weaken == Weaken::PlainPayloads,
                }))
            }
            SchemeKind::NdnPlain => SchemeState::Plain,
            SchemeKind::NdnE2e => SchemeState::E2e,
            SchemeKind::Mcac => SchemeState::Mcac,
            SchemeKind::NdnGroupKey => {
                let n_p = cfg.topology.n_publishers;
                // Rekey multicast tree: union of shortest paths from the
                // publisher node to every gateway.
                let mut rekey_tree = Vec::with_capacity(n_p);
                for p in 0..n_p {
                    let pub_node = topo.publisher_node(p);
                    let mut edges: Vec<(usize, usize)> = Vec::new();
                    for &gw in &topo.gateways {
                        let mut cur = pub_node;
                        while cur != gw {
                            let next = topo.next_hop[gw][cur] as usize;
                            if !edges.contains(&(cur, next)) {
                                edges.push((cur, next));
                            }
                            cur = next;
                        }
                    }
                    rekey_tree.push(edges);
                }
                SchemeState::GroupKey(GroupKeyState {
                    epoch: vec![0; n_p],
                    join_epoch: vec![vec![0; n_p]; n_consumers],
                    rekey_tree,
                })
            }
            SchemeKind::EuRe => SchemeState::EuRe(EuReState {
                epoch: vec![0; catalog.len()],
                key_epoch: HashMap::new(),
                pending: HashMap::new(),
                keyreq_names: HashMap::new(),
            }),
        }
    }

    fn schedule_initial(&mut self) {
        for i in 0..self.arrivals.len() {
            let at = self.arrivals[i].t_ns;
            self.schedule(at, Event::Arrival(i));
        }
        for i in 0..self.churn.len() {
            let at = self.churn[i].t_ns;
            self.schedule(at, Event::Churn(i));
        }
        self.schedule(PIT_SWEEP_NS, Event::PitSweep);
        if let Some(adv) = &mut self.adversary {
            for inj in adv.initial_injections() {
                let Injection { at_ns, router, packet } = inj;
                self.schedule(
                    at_ns,
                    Event::Packet {
                        node: router,
                        from: Face::Adversary,
                        packet,
                    },
                );
            }
        }
    }

    fn schedule(&mut self, at: u64, ev: Event) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            at,
            seq: self.seq,
            ev,
        }));
    }

    fn fresh_rid(&mut self) -> u64 {
        self.next_rid += 1;
        self.next_rid
    }

    // ---- link layer ----

    fn observe(&mut self, pkt: &Packet) {
        if let Some(adv) = &mut self.adversary {
            let injections = adv.observe(self.now, pkt);
            for inj in injections {
                let Injection { at_ns, router, packet } = inj;
                self.schedule(
                    at_ns.max(self.now),
                    Event::Packet {
                        node: router,
                        from: Face::Adversary,
                        packet,
                    },
                );
            }
        }
    }

    fn observe_at_router(&mut self, router: usize, pkt: &Packet) {
        if let Some(adv) = &self.adversary {
            if adv.vantage.covers_router(router) {
                self.observe(pkt);
            }
        }
    }

    /// Store-and-forward send with FIFO queueing per link direction.
    fn send_at(&mut self, from: usize, to: usize, packet: Packet, earliest: u64) {
        let Some(link_id) = self.topo.link_between(from, to) else {
            // No route: account at the sending router when possible.
            if self.topo.is_router(from) {
                self.routers[from].counters.drops_no_route += 1;
            }
            return;
        };
        let link = &self.topo.links[link_id];
        let dir = if from == link.a { 0 } else { 1 };
        let tx_ns = transmission_ns(packet.wire_bytes(), link.capacity_bps);
        let start = earliest.max(self.link_busy[link_id][dir]);
        self.link_busy[link_id][dir] = start + tx_ns;
        let mut arrive = start + tx_ns + link.prop_delay_ns;
        // TCB processing at receiving routers for labeled traffic.
        if self.cfg.scheme == SchemeKind::Mcac
            && self.topo.is_router(to)
            && packet.label().map(|l| l.tcb_charged()).unwrap_or(false)
        {
            arrive += self.tcb_ns;
        }
        // Edge-router re-encryption work in the re-encryption baseline.
        if self.cfg.scheme == SchemeKind::EuRe
            && self.topo.is_router(to)
            && self.routers[to].is_gateway
        {
            if let Packet::Data(d) = &packet {
                if d.body.epoch.is_some() {
                    arrive += self.reencrypt_ns;
                }
            }
        }
        if let Some(adv) = &self.adversary {
            if adv.vantage.covers_link(from, to) {
                let cloned = packet.clone();
                self.observe(&cloned);
            }
        }
        self.schedule(
            arrive,
            Event::Packet {
                node: to,
                from: Face::Link(from),
                packet,
            },
        );
    }

    fn send(&mut self, from: usize, to: usize, packet: Packet) {
        self.send_at(from, to, packet, self.now);
    }

    // ---- main loop ----

    pub fn run(mut self) -> RunOutput {
        let mut arrivals_left = self.arrivals.len() as u64;
        while let Some(Reverse(sch)) = self.queue.pop() {
            if sch.at > self.horizon_ns {
                break;
            }
            self.now = sch.at;
            if let Event::Arrival(_) = sch.ev {
                arrivals_left -= 1;
            }
            self.dispatch(sch.ev);
            if !self.run_to_quiescence && arrivals_left == 0 && self.open_requests == 0 {
                break;
            }
        }
        self.finalize()
    }

    fn dispatch(&mut self, ev: Event) {
        match ev {
            Event::Arrival(i) => {
                let a = self.arrivals[i];
                self.start_request(a);
            }
            Event::Packet { node, from, packet } => self.node_receive(node, from, packet),
            Event::SegTimeout { instance, attempt } => self.seg_timeout(instance, attempt),
            Event::HandshakeTimeout {
                consumer,
                publisher,
                attempt,
            } => self.handshake_timeout(consumer, publisher, attempt),
            Event::KeyReqTimeout {
                consumer,
                object,
                attempt,
            } => self.keyreq_timeout(consumer, object, attempt),
            Event::PubDeadline { publisher, rid } => self.pub_deadline(publisher, rid),
            Event::Churn(i) => {
                let ev = self.churn[i];
                self.churn_event(ev);
            }
            Event::PitSweep => {
                for r in &mut self.routers {
                    let now = self.now;
                    r.pit.retain(|_, e| e.expiry > now);
                }
                let next = self.now + PIT_SWEEP_NS;
                if next <= self.horizon_ns {
                    self.schedule(next, Event::PitSweep);
                }
            }
        }
    }

    // ---- request driver ----

    fn start_request(&mut self, a: Arrival) {
        let req_id = self.requests.len() as u64;
        self.requests.push(ReqState {
            consumer: a.consumer,
            object: a.object,
            issued_ns: self.now,
            segments_pending: self.cfg.catalog.segments_per_item,
            failed: false,
            completed: false,
        });
        self.open_requests += 1;
        self.metrics.requests_total += 1;
        self.dispatch_request(req_id);
    }

    /// Decides what a request needs next: a handshake, a key request, or
    /// straight segment fetching.
    fn dispatch_request(&mut self, req_id: u64) {
        let req = &self.requests[req_id as usize];
        let (c, obj_idx) = (req.consumer, req.object);
        let publisher = self.catalog[obj_idx].publisher;
        match &mut self.scheme {
            SchemeState::Sdpc(state) => {
                let object_id = self.catalog[obj_idx].id.clone();
                if state.consumers[c as usize].chain_for(&object_id).is_some() {
                    self.begin_fetch(req_id);
                    return;
                }
                if let Some(pending) = state.pending.get_mut(&(c, publisher)) {
                    pending.waiters.push(req_id);
                    return;
                }
                self.start_handshake(c, publisher, req_id);
            }
            SchemeState::EuRe(state) => {
                let current = state.epoch[obj_idx];
                if state.key_epoch.get(&(c, obj_idx)) == Some(&current) {
                    self.begin_fetch(req_id);
                    return;
                }
                if let Some(pending) = state.pending.get_mut(&(c, obj_idx)) {
                    pending.waiters.push(req_id);
                    return;
                }
                self.start_keyreq(c, obj_idx, req_id);
            }
            _ => self.begin_fetch(req_id),
        }
    }

    fn start_handshake(&mut self, c: u32, publisher: usize, anchor: u64) {
        let crid = self.fresh_rid();
        let obj_idx = self.requests[anchor as usize].object;
        let object_id = self.catalog[obj_idx].id.clone();
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            unreachable!("handshakes are an sdpc concern")
        };
        let dir = state.directory[publisher].clone();
        let consumer = &mut state.consumers[c as usize];
        let pid = PublisherId(publisher as u32);
        let started = if consumer.has_session_with(pid) {
            consumer
                .start_apsub(crid, &dir, &object_id, &mut self.rng)
                .map(|(n, req)| (n, ProtocolMsg::AccessReq(req)))
        } else if let Some(home) = consumer.any_session_issuer() {
            consumer
                .start_apsub3(crid, &dir, home, &object_id, &mut self.rng)
                .map(|(n, req)| (n, ProtocolMsg::AccessReq(req)))
        } else {
            consumer
                .start_subp(crid, &dir, &object_id, &mut self.rng)
                .map(|(n, m1)| (n, ProtocolMsg::SubpM1(m1)))
        };
        let (name, msg) = match started {
            Ok(v) => v,
            Err(_) => {
                self.fail_request(anchor);
                return;
            }
        };
        let name_bytes: NameBytes = Arc::new(name.encode());
        let payload = Arc::new(msg.to_bytes());
        let dest = self.topo.publisher_node(publisher);
        let proto_instance = self.proto_reached.len() as u64;
        self.proto_reached.push(false);
        self.metrics.protocol_instances += 1;
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            unreachable!()
        };
        state.pending.insert(
            (c, publisher),
            PendingHandshake {
                crid,
                name: name_bytes.clone(),
                payload: payload.clone(),
                dest,
                anchor,
                waiters: Vec::new(),
                attempt: 0,
                proto_instance,
            },
        );
        state.handshake_names.insert(name_bytes.clone(), (c, publisher));
        self.metrics.protocol_runs_started += 1;
        self.issue_protocol_interest(c, name_bytes, payload, dest, Some(proto_instance));
        let to = self.protocol_timeout_base(c, publisher);
        self.schedule(
            self.now + to,
            Event::HandshakeTimeout {
                consumer: c,
                publisher,
                attempt: 0,
            },
        );
    }

    fn start_keyreq(&mut self, c: u32, obj_idx: usize, anchor: u64) {
        let publisher = self.catalog[obj_idx].publisher;
        let SchemeState::EuRe(state) = &mut self.scheme else {
            unreachable!()
        };
        let epoch = state.epoch[obj_idx];
        let name = SdpcName::plain(vec![
            format!("pub{publisher}"),
            "keyreq".to_string(),
            format!("c{c}"),
            self.catalog[obj_idx].id.name.clone(),
            format!("e{epoch}"),
        ]);
        let name_bytes: NameBytes = Arc::new(name.encode());
        let proto_instance = self.proto_reached.len() as u64;
        self.proto_reached.push(false);
        self.metrics.protocol_instances += 1;
        let SchemeState::EuRe(state) = &mut self.scheme else {
            unreachable!()
        };
        state.pending.insert(
            (c, obj_idx),
            KeyPending {
                name: name_bytes.clone(),
                anchor,
                waiters: Vec::new(),
                attempt: 0,
                proto_instance,
            },
        );
        state.keyreq_names.insert(name_bytes.clone(), (c, obj_idx));
        self.metrics.key_requests += 1;
        let dest = self.topo.publisher_node(publisher);
        self.issue_protocol_interest(c, name_bytes, Arc::new(Vec::new()), dest, Some(proto_instance));
        let to = self.protocol_timeout_base(c, publisher);
        self.schedule(
            self.now + to,
            Event::KeyReqTimeout {
                consumer: c,
                object: obj_idx,
                attempt: 0,
            },
        );
    }

    fn issue_protocol_interest(
        &mut self,
        c: u32,
        name: NameBytes,
        payload: Arc<Vec<u8>>,
        dest: usize,
        proto_instance: Option<u64>,
    ) {
        let gw = self.consumers[c as usize].gateway;
        let interest = Interest {
            name: NameRef::from_bytes(name.as_ref().clone()),
            payload: if payload.is_empty() { None } else { Some(payload) },
            wire_bytes: INTEREST_BYTES,
            dest,
            instance: None,
            proto_instance,
            fresh: false,
            label: None,
            from_adversary: false,
        };
        self.metrics.interest_packets += 1;
        self.router_interest(gw, Face::Consumer(c), interest);
    }

    /// Issues all segment interests of a request at once.
    fn begin_fetch(&mut self, req_id: u64) {
        let req = &self.requests[req_id as usize];
        let (c, obj_idx) = (req.consumer, req.object);
        let segments = self.cfg.catalog.segments_per_item;
        let publisher = self.catalog[obj_idx].publisher;
        let pub_node = self.topo.publisher_node(publisher);
        let gw = self.consumers[c as usize].gateway;
        let timeout_base = self.content_timeout_base(gw, pub_node);
        for seg in 0..segments {
            let name: NameBytes = Arc::new(self.segment_name_for(c, obj_idx, seg));
            let inst_id = self.instances.len() as u64;
            let label = if self.cfg.scheme == SchemeKind::Mcac {
                Some(self.catalog[obj_idx].label)
            } else {
                None
            };
            let interest = Interest {
                name: NameRef::from_bytes(name.as_ref().clone()),
                payload: None,
                wire_bytes: INTEREST_BYTES,
                dest: pub_node,
                instance: Some(inst_id),
                proto_instance: None,
                fresh: false,
                label,
                from_adversary: false,
            };
            self.instances.push(InstState {
                req: req_id,
                name: name.clone(),
                attempt: 0,
                resolution: Resolution::Pending,
                reached_pub: false,
                timeout_base,
                interest: interest.clone(),
            });
            self.metrics.content_instances += 1;
            if self.adversary.is_some() {
                self.name_truth.insert(name.as_ref().clone(), obj_idx);
            }
            self.consumers[c as usize]
                .outstanding
                .entry(name)
                .or_default()
                .push(inst_id);
            self.metrics.interest_packets += 1;
            self.router_interest(gw, Face::Consumer(c), interest);
            self.schedule(
                self.now + timeout_base,
                Event::SegTimeout {
                    instance: inst_id,
                    attempt: 0,
                },
            );
        }
    }

    fn segment_name_for(&self, c: u32, obj_idx: usize, seg: u32) -> Vec<u8> {
        let obj = &self.catalog[obj_idx];
        let p = obj.publisher;
        match &self.scheme {
            SchemeState::Sdpc(state) => {
                if state.plain_segment_names {
                    shared_plain_name(p, &obj.id, seg)
                } else {
                    let consumer = &state.consumers[c as usize];
                    let chain = consumer
                        .chain_for(&obj.id)
                        .expect("fetch starts only after the grant");
                    let prefix = &state.directory[p].prefix;
                    segment_name(prefix, &chain.key_msg, chain, &obj.id, seg as usize)
                        .expect("segment index within chain")
                        .encode()
                }
            }
            SchemeState::E2e => {
                let mut comps = plain_name_components(p, &obj.id, seg);
                comps.push(format!("c{c}"));
                SdpcName::plain(comps).encode()
            }
            _ => shared_plain_name(p, &obj.id, seg),
        }
    }

    fn content_timeout_base(&self, gw: usize, pub_node: usize) -> u64 {
        let hops = self.topo.hops(gw, pub_node) as u64;
        let prop = (self.cfg.topology.prop_delay_ms * 1e6) as u64;
        let seg_tx = transmission_ns(self.cfg.catalog.segment_bytes, self.cfg.topology.link_bps);
        let int_tx = transmission_ns(INTEREST_BYTES, self.cfg.topology.link_bps);
        let rtt = 2 * hops * prop + hops * (seg_tx + int_tx);
        (4 * rtt).max((self.cfg.workload.timeout_floor_s * 1e9) as u64)
    }

    fn protocol_timeout_base(&self, c: u32, publisher: usize) -> u64 {
        let gw = self.consumers[c as usize].gateway;
        let pub_node = self.topo.publisher_node(publisher);
        let hops = self.topo.hops(gw, pub_node) as u64;
        let prop = (self.cfg.topology.prop_delay_ms * 1e6) as u64;
        let ctl_tx = transmission_ns(CONTROL_BYTES, self.cfg.topology.link_bps);
        let rtt = 2 * hops * (prop + ctl_tx);
        (4 * rtt).max((self.cfg.workload.timeout_floor_s * 1e9) as u64)
    }

    // ---- timeouts ----

    fn seg_timeout(&mut self, instance: u64, attempt: u32) {
        let inst = &self.instances[instance as usize];
        if inst.resolution != Resolution::Pending || inst.attempt != attempt {
            return;
        }
        if attempt + 1 > self.cfg.workload.max_retransmissions {
            let req_id = inst.req;
            self.instances[instance as usize].resolution = Resolution::Failed;
            self.metrics.instances_failed += 1;
            let name = self.instances[instance as usize].name.clone();
            let c = self.requests[req_id as usize].consumer;
            remove_outstanding(&mut self.consumers[c as usize].outstanding, &name, instance);
            self.fail_request(req_id);
            return;
        }
        let inst = &mut self.instances[instance as usize];
        inst.attempt += 1;
        let interest = inst.interest.clone();
        let base = inst.timeout_base;
        let next_attempt = inst.attempt;
        let req_id = inst.req;
        self.metrics.timeout_events += 1;
        self.metrics.interest_packets += 1;
        let gw = self.consumers[self.requests[req_id as usize].consumer as usize].gateway;
        let c = self.requests[req_id as usize].consumer;
        self.router_interest(gw, Face::Consumer(c), interest);
        // Exponential backoff: 4x per retry.
        let delay = base.saturating_mul(4u64.saturating_pow(next_attempt));
        self.schedule(
            self.now + delay,
            Event::SegTimeout {
                instance,
                attempt: next_attempt,
            },
        );
    }

    fn handshake_timeout(&mut self, c: u32, publisher: usize, attempt: u32) {
        let base = self.protocol_timeout_base(c, publisher);
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            return;
        };
        let Some(pending) = state.pending.get_mut(&(c, publisher)) else {
            return;
        };
        if pending.attempt != attempt {
            return;
        }
        if attempt + 1 > self.cfg.workload.max_retransmissions {
            let pending = state.pending.remove(&(c, publisher)).unwrap();
            state.handshake_names.remove(&pending.name);
            state.consumers[c as usize].abort_run(pending.crid);
            let mut requests = pending.waiters;
            requests.push(pending.anchor);
            for r in requests {
                self.fail_request(r);
            }
            return;
        }
        pending.attempt += 1;
        let name = pending.name.clone();
        let payload = pending.payload.clone();
        let dest = pending.dest;
        let next = pending.attempt;
        let pi = pending.proto_instance;
        self.metrics.timeout_events += 1;
        self.issue_protocol_interest(c, name, payload, dest, Some(pi));
        let delay = base.saturating_mul(4u64.saturating_pow(next));
        self.schedule(
            self.now + delay,
            Event::HandshakeTimeout {
                consumer: c,
                publisher,
                attempt: next,
            },
        );
    }

    fn keyreq_timeout(&mut self, c: u32, obj_idx: usize, attempt: u32) {
        let publisher = self.catalog[obj_idx].publisher;
        let SchemeState::EuRe(state) = &mut self.scheme else {
            return;
        };
        let Some(pending) = state.pending.get_mut(&(c, obj_idx)) else {
            return;
        };
        if pending.attempt != attempt {
            return;
        }
        if attempt + 1 > self.cfg.workload.max_retransmissions {
            let pending = state.pending.remove(&(c, obj_idx)).unwrap();
            state.keyreq_names.remove(&pending.name);
            let mut requests = pending.waiters;
            requests.push(pending.anchor);
            for r in requests {
                self.fail_request(r);
            }
            return;
        }
        pending.attempt += 1;
        let name = pending.name.clone();
        let next = pending.attempt;
        let pi = pending.proto_instance;
        self.metrics.timeout_events += 1;
        let dest = self.topo.publisher_node(publisher);
        self.issue_protocol_interest(c, name, Arc::new(Vec::new()), dest, Some(pi));
        let base = self.protocol_timeout_base(c, publisher);
        let delay = base.saturating_mul(4u64.saturating_pow(next));
        self.schedule(
            self.now + delay,
            Event::KeyReqTimeout {
                consumer: c,
                object: obj_idx,
                attempt: next,
            },
        );
    }

    fn fail_request(&mut self, req_id: u64) {
        let req = &mut self.requests[req_id as usize];
        if !req.failed && !req.completed {
            req.failed = true;
            self.metrics.requests_failed += 1;
            self.open_requests -= 1;
        }
    }

    // ---- node receive ----

    fn node_receive(&mut self, node: usize, from: Face, packet: Packet) {
        if self.topo.is_router(node) {
            match packet {
                Packet::Interest(int) => self.router_interest(node, from, int),
                Packet::Data(data) => self.router_data(node, data),
                Packet::Directed(msg) => self.router_directed(node, msg),
            }
        } else if node == self.topo.manager_node() {
            if let Packet::Directed(msg) = packet {
                self.manager_receive(msg);
            }
        } else {
            let p = node - self.topo.n_routers;
            match packet {
                Packet::Interest(int) => self.publisher_interest(p, int),
                Packet::Directed(msg) => self.publisher_directed(p, msg),
                Packet::Data(_) => {}
            }
        }
    }

    fn router_directed(&mut self, node: usize, msg: Directed) {
        if msg.dest == node {
            return; // control messages terminate at publisher/manager nodes
        }
        let next = self.topo.next_hop[msg.dest][node];
        if next == NO_HOP {
            self.routers[node].counters.drops_no_route += 1;
            return;
        }
        self.send(node, next as usize, Packet::Directed(msg));
    }

    fn router_interest(&mut self, node: usize, from: Face, int: Interest) {
        self.observe_at_router(node, &Packet::Interest(int.clone()));
        let r = &mut self.routers[node];
        r.counters.interests_in += 1;
        let Some(parsed) = int.name.parsed.clone() else {
            // Malformed framing never creates PIT state.
            r.counters.drops_malformed += 1;
            return;
        };
        if !int.fresh {
            if let Some(body) = r.cs.get(&int.name.bytes) {
                r.counters.cs_hits += 1;
                self.metrics.cache_hit_count += 1;
                if parsed.kind() == NameKind::FirstInterest {
                    self.metrics.first_interest_cache_hits += 1;
                }
                let data = Data {
                    name: int.name.clone(),
                    body,
                    origin: Origin::Cache,
                };
                self.emit_data_to_face(node, from, data);
                return;
            }
        }
        let key = (int.name.bytes.clone(), int.fresh);
        if let Some(entry) = self.routers[node].pit.get_mut(&key) {
            if entry.expiry > self.now {
                if !entry.faces.contains(&from) {
                    entry.faces.push(from);
                }
                entry.expiry = self.now + PIT_TTL_NS;
                self.routers[node].counters.pit_aggregations += 1;
                return;
            }
        }
        self.routers[node].pit.insert(
            key,
            PitEntry {
                faces: vec![from],
                expiry: self.now + PIT_TTL_NS,
            },
        );
        let next = self.topo.next_hop[int.dest][node];
        if next == NO_HOP {
            self.routers[node].counters.drops_no_route += 1;
            return;
        }
        self.send(node, next as usize, Packet::Interest(int));
    }

    fn router_data(&mut self, node: usize, data: Data) {
        let r = &mut self.routers[node];
        r.counters.data_in += 1;
        let mut faces: Vec<Face> = Vec::new();
        for fresh in [false, true] {
            if let Some(entry) = r.pit.remove(&(data.name.bytes.clone(), fresh)) {
                if entry.expiry > self.now {
                    faces.extend(entry.faces);
                }
            }
        }
        if faces.is_empty() {
            r.counters.drops_unsolicited += 1;
            return;
        }
        let admit = match data.body.cache_rule {
            CacheRule::Anywhere => true,
            CacheRule::Never => false,
            CacheRule::GatewayOnly => r.is_gateway,
        };
        if admit {
            let before = r.cs.evictions;
            if r.cs.insert(data.name.bytes.clone(), data.body.clone()) {
                r.counters.cs_insertions += 1;
            }
            r.counters.cs_evictions += r.cs.evictions - before;
        }
        for face in faces {
            self.emit_data_to_face(node, face, data.clone());
        }
    }

    fn emit_data_to_face(&mut self, node: usize, face: Face, data: Data) {
        match face {
            Face::Link(n) => self.send(node, n, Packet::Data(data)),
            Face::Consumer(c) => {
                self.observe_at_router(node, &Packet::Data(data.clone()));
                self.consumer_data(c, data);
            }
            Face::Adversary => {
                if let Some(adv) = &mut self.adversary {
                    adv.receive_data(self.now, &data);
                }
            }
        }
    }

    // ---- publisher node ----

    fn charge_pub_cpu(&mut self, p: usize, cost: u64) -> u64 {
        let start = self.pub_cpu[p].max(self.now);
        self.pub_cpu[p] = start + cost;
        self.pub_cpu[p]
    }

    fn charge_mgr_cpu(&mut self, cost: u64) -> u64 {
        let start = self.mgr_cpu.max(self.now);
        self.mgr_cpu = start + cost;
        self.mgr_cpu
    }

    fn publisher_interest(&mut self, p: usize, int: Interest) {
        let Some(parsed) = int.name.parsed.clone() else {
            return;
        };
        if !int.from_adversary {
            if let Some(inst) = int.instance {
                let i = &mut self.instances[inst as usize];
                if !i.reached_pub {
                    i.reached_pub = true;
                    self.metrics.instances_reached_publisher += 1;
                }
            }
            if let Some(pi) = int.proto_instance {
                if !self.proto_reached[pi as usize] {
                    self.proto_reached[pi as usize] = true;
                    self.metrics.protocol_instances_reached += 1;
                }
            }
        }
        match parsed.kind() {
            NameKind::FirstInterest => self.sdpc_protocol_interest(p, &int),
            NameKind::SharedSegment => self.sdpc_segment_interest(p, &int),
            NameKind::Plain => self.plain_interest(p, &int, &parsed),
        }
    }

    fn sdpc_protocol_interest(&mut self, p: usize, int: &Interest) {
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            return;
        };
        let Some(payload) = &int.payload else { return };
        let Ok(msg) = ProtocolMsg::from_bytes(payload) else {
            return;
        };
        let rid = {
            self.next_rid += 1;
            self.next_rid
        };
        match msg {
            ProtocolMsg::SubpM1(m1) => {
                let publisher = &mut state.publishers[p];
                if let Ok(m2) = publisher.handle_m1(rid, &int.name.bytes, &m1, &mut self.rng) {
                    let bytes = ProtocolMsg::SubpM2(m2).to_bytes();
                    let mgr = self.topo.manager_node();
                    let pub_node = self.topo.publisher_node(p);
                    let attach = self.topo.pub_attach[p];
                    self.send(
                        pub_node,
                        attach,
                        Packet::Directed(Directed {
                            dest: mgr,
                            payload: Arc::new(bytes),
                            wire_bytes: CONTROL_BYTES,
                        }),
                    );
                }
            }
            ProtocolMsg::AccessReq(req) => {
                let publisher = &mut state.publishers[p];
                let opens_before = publisher.counters.opens;
                match publisher.handle_a1(
                    rid,
                    &req,
                    self.now,
                    self.stolen_deadline_ns,
                    &mut self.rng,
                ) {
                    Ok((a2, deadline)) => {
                        let ops = publisher.counters.opens - opens_before;
                        let ready = self.charge_pub_cpu(p, ops * self.asym_cost_ns);
                        let bytes = ProtocolMsg::ApsubA2(a2).to_bytes();
                        self.reply_protocol_data(p, int.name.bytes.clone(), bytes, ready);
                        self.schedule(deadline, Event::PubDeadline { publisher: p, rid });
                    }
                    Err(sdpc_core::protocol::ProtocolError::Crypto(_)) => {
                        // Foreign ticket: third-party flow, forward to the
                        // manager.
                        let publisher = match &mut self.scheme {
                            SchemeState::Sdpc(s) => &mut s.publishers[p],
                            _ => unreachable!(),
                        };
                        if let Ok(t2) =
                            publisher.handle_t1(rid, &int.name.bytes, &req, &mut self.rng)
                        {
                            let ready = self.charge_pub_cpu(p, self.asym_cost_ns);
                            let bytes = ProtocolMsg::Apsub3T2(t2).to_bytes();
                            let mgr = self.topo.manager_node();
                            let pub_node = self.topo.publisher_node(p);
                            let attach = self.topo.pub_attach[p];
                            self.send_at(
                                pub_node,
                                attach,
                                Packet::Directed(Directed {
                                    dest: mgr,
                                    payload: Arc::new(bytes),
                                    wire_bytes: CONTROL_BYTES,
                                }),
                                ready,
                            );
                        }
                    }
                    Err(_) => {} // silent rejection
                }
            }
            _ => {}
        }
    }

    fn sdpc_segment_interest(&mut self, p: usize, int: &Interest) {
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            return;
        };
        let Some((published, seg)) = state.publishers[p].lookup_segment(&int.name.bytes) else {
            return; // unknown name, silently dropped
        };
        let payload = if state.plain_payloads {
            published.object.segment_path(seg).to_string().into_bytes()
        } else {
            published.segments[seg as usize].clone()
        };
        let body = Arc::new(DataBody {
            payload: Arc::new(payload),
            wire_bytes: self.cfg.catalog.segment_bytes,
            cache_rule: CacheRule::Anywhere,
            epoch: None,
            label: None,
        });
        let ready = self.charge_pub_cpu(p, self.sym_cost_ns);
        self.reply_data(p, int.name.bytes.clone(), body, ready);
    }

    fn plain_interest(&mut self, p: usize, int: &Interest, parsed: &SdpcName) {
        let comps: Vec<String> = parsed
            .prefix_components()
            .iter()
            .map(|s| s.to_string())
            .collect();
        if comps.len() >= 5 && comps[1] == "keyreq" {
            // Key request round trip (re-encryption baseline).
            let ready = self.charge_pub_cpu(p, self.asym_cost_ns);
            let body = Arc::new(DataBody {
                payload: Arc::new(b"key-response".to_vec()),
                wire_bytes: CONTROL_BYTES,
                cache_rule: CacheRule::Never,
                epoch: None,
                label: None,
            });
            self.reply_data(p, int.name.bytes.clone(), body, ready);
            return;
        }
        if comps.len() < 4 {
            return;
        }
        let Some(&obj_idx) = self.name_to_obj.get(&comps[1]) else {
            return;
        };
        let Ok(seg) = comps[3].trim_start_matches("_s").parse::<u32>() else {
            return;
        };
        if seg >= self.cfg.catalog.segments_per_item || self.catalog[obj_idx].publisher != p {
            return;
        }
        let obj = &self.catalog[obj_idx];
        let marker = obj.id.segment_path(seg).to_string();
        let seed = self.cfg.seed;
        let (payload, cache_rule, epoch, label) = match &self.scheme {
            SchemeState::Plain => (
                marker.clone().into_bytes(),
                CacheRule::Anywhere,
                None,
                None,
            ),
            SchemeState::Sdpc(state) => {
                // Weakened variant: plaintext names, payloads still under the
                // per-segment chain keys (or plaintext when both are leaked).
                if !state.plain_segment_names {
                    return;
                }
                let Some(published) = state.publishers[p].object(&obj.id) else {
                    return;
                };
                let payload = if state.plain_payloads {
                    marker.clone().into_bytes()
                } else {
                    published.segments[seg as usize].clone()
                };
                (payload, CacheRule::Anywhere, None, None)
            }
            SchemeState::E2e => {
                // comps[4] = consumer component; encrypted per consumer.
                let ckey = derive_key(&[b"e2e", &seed.to_be_bytes(), comps[4].as_bytes()]);
                (
                    sym_encrypt(&ckey, marker.as_bytes(), &mut self.rng),
                    CacheRule::Anywhere,
                    None,
                    None,
                )
            }
            SchemeState::GroupKey(gk) => {
                let e = gk.epoch[p];
                let key = derive_key(&[
                    b"groupkey",
                    &seed.to_be_bytes(),
                    &(p as u64).to_be_bytes(),
                    &(e as u64).to_be_bytes(),
                ]);
                (
                    sym_encrypt(&key, marker.as_bytes(), &mut self.rng),
                    CacheRule::Anywhere,
                    Some(e),
                    None,
                )
            }
            SchemeState::Mcac => {
                let label = obj.label;
                let payload = match label {
                    McacLabel::H => {
                        let key = derive_key(&[b"tcb", &seed.to_be_bytes()]);
                        sym_encrypt(&key, marker.as_bytes(), &mut self.rng)
                    }
                    _ => marker.clone().into_bytes(),
                };
                (payload, label.cache_rule(), None, Some(label))
            }
            SchemeState::EuRe(st) => {
                let e = st.epoch[obj_idx];
                let key = derive_key(&[
                    b"eure",
                    &seed.to_be_bytes(),
                    &(obj_idx as u64).to_be_bytes(),
                    &(e as u64).to_be_bytes(),
                ]);
                (
                    sym_encrypt(&key, marker.as_bytes(), &mut self.rng),
                    CacheRule::Anywhere,
                    Some(e),
                    None,
                )
            }
        };
        let body = Arc::new(DataBody {
            payload: Arc::new(payload),
            wire_bytes: self.cfg.catalog.segment_bytes,
            cache_rule,
            epoch,
            label,
        });
        let ready = self.charge_pub_cpu(p, self.sym_cost_ns);
        self.reply_data(p, int.name.bytes.clone(), body, ready);
    }

    fn reply_protocol_data(&mut self, p: usize, name: NameBytes, msg_bytes: Vec<u8>, ready: u64) {
        let body = Arc::new(DataBody {
            payload: Arc::new(msg_bytes),
            wire_bytes: CONTROL_BYTES,
            cache_rule: CacheRule::Never,
            epoch: None,
            label: None,
        });
        self.reply_data(p, name, body, ready);
    }

    fn reply_data(&mut self, p: usize, name: NameBytes, body: Arc<DataBody>, ready: u64) {
        let data = Data {
            name: NameRef::from_bytes(name.as_ref().clone()),
            body,
            origin: Origin::Publisher,
        };
        let pub_node = self.topo.publisher_node(p);
        let attach = self.topo.pub_attach[p];
        self.send_at(pub_node, attach, Packet::Data(data), ready);
    }

    fn publisher_directed(&mut self, p: usize, msg: Directed) {
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            return;
        };
        let Ok(parsed) = ProtocolMsg::from_bytes(&msg.payload) else {
            return;
        };
        match parsed {
            ProtocolMsg::SubpM3(m3) => {
                let opens_before = state.publishers[p].counters.opens;
                if let Ok(out) = state.publishers[p].handle_m3(
                    &m3,
                    self.now,
                    self.stolen_deadline_ns,
                    &mut self.rng,
                ) {
                    let rid = m3.rid;
                    let ops = {
                        let SchemeState::Sdpc(s) = &self.scheme else { unreachable!() };
                        s.publishers[p].counters.opens - opens_before
                    };
                    let ready = self.charge_pub_cpu(p, ops * self.asym_cost_ns);
                    let m4 = ProtocolMsg::SubpM4(out.m4).to_bytes();
                    self.reply_protocol_data(p, Arc::new(out.reply_name), m4, ready);
                    let m5 = ProtocolMsg::SubpM5(out.m5).to_bytes();
                    let mgr = self.topo.manager_node();
                    let pub_node = self.topo.publisher_node(p);
                    let attach = self.topo.pub_attach[p];
                    self.send_at(
                        pub_node,
                        attach,
                        Packet::Directed(Directed {
                            dest: mgr,
                            payload: Arc::new(m5),
                            wire_bytes: CONTROL_BYTES,
                        }),
                        ready,
                    );
                    self.schedule(out.deadline, Event::PubDeadline { publisher: p, rid });
                }
            }
            ProtocolMsg::SubpM6(m6) => {
                let _ = state.publishers[p].handle_m6(&m6);
            }
            ProtocolMsg::ApsubA3(a3) => {
                let _ = state.publishers[p].handle_a3(&a3);
            }
            ProtocolMsg::Apsub3T3(t3) => {
                if let Ok(out) = state.publishers[p].handle_t3(
                    &t3,
                    self.now,
                    self.stolen_deadline_ns,
                    &mut self.rng,
                ) {
                    let rid = t3.rid;
                    let ready = self.charge_pub_cpu(p, self.asym_cost_ns);
                    let t4 = ProtocolMsg::Apsub3T4(out.t4).to_bytes();
                    self.reply_protocol_data(p, Arc::new(out.reply_name), t4, ready);
                    self.schedule(out.deadline, Event::PubDeadline { publisher: p, rid });
                }
            }
            ProtocolMsg::Apsub3T5(t5) => {
                if let Ok((t6, _consumer)) = state.publishers[p].handle_t5(&t5, &mut self.rng) {
                    let bytes = ProtocolMsg::Apsub3T6(t6).to_bytes();
                    let mgr = self.topo.manager_node();
                    let pub_node = self.topo.publisher_node(p);
                    let attach = self.topo.pub_attach[p];
                    self.send(
                        pub_node,
                        attach,
                        Packet::Directed(Directed {
                            dest: mgr,
                            payload: Arc::new(bytes),
                            wire_bytes: CONTROL_BYTES,
                        }),
                    );
                }
            }
            ProtocolMsg::StolenNotice(notice) => {
                state.publishers[p].mark_stolen(notice.ticket_digest);
            }
            _ => {}
        }
    }

    fn pub_deadline(&mut self, p: usize, rid: u64) {
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            return;
        };
        if let Some(notice) = state.publishers[p].deadline_fired(rid) {
            let bytes = ProtocolMsg::StolenNotice(notice).to_bytes();
            let mgr = self.topo.manager_node();
            let pub_node = self.topo.publisher_node(p);
            let attach = self.topo.pub_attach[p];
            self.send(
                pub_node,
                attach,
                Packet::Directed(Directed {
                    dest: mgr,
                    payload: Arc::new(bytes),
                    wire_bytes: CONTROL_BYTES,
                }),
            );
        }
    }

    // ---- manager node ----

    fn manager_receive(&mut self, msg: Directed) {
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            return;
        };
        let Ok(parsed) = ProtocolMsg::from_bytes(&msg.payload) else {
            return;
        };
        let mgr_node = self.topo.manager_node();
        let mgr_attach = self.topo.adj[mgr_node][0];
        match parsed {
            ProtocolMsg::SubpM2(m2) => {
                let pub_node = self.topo.publisher_node(m2.publisher.0 as usize);
                if let Ok(m3) = state.manager.handle_m2(&m2, self.now, &mut self.rng) {
                    // Two seals: the ticket and the publisher-bound part.
                    let ready = self.charge_mgr_cpu(2 * self.asym_cost_ns);
                    let bytes = ProtocolMsg::SubpM3(m3).to_bytes();
                    self.send_at(
                        mgr_node,
                        mgr_attach,
                        Packet::Directed(Directed {
                            dest: pub_node,
                            payload: Arc::new(bytes),
                            wire_bytes: CONTROL_BYTES,
                        }),
                        ready,
                    );
                }
            }
            ProtocolMsg::Apsub3T2(t2) => {
                let pub_node = self.topo.publisher_node(t2.publisher.0 as usize);
                if let Ok(t3) = state.manager.handle_t2(&t2, &mut self.rng) {
                    let ready = self.charge_mgr_cpu(self.asym_cost_ns);
                    let bytes = ProtocolMsg::Apsub3T3(t3).to_bytes();
                    self.send_at(
                        mgr_node,
                        mgr_attach,
                        Packet::Directed(Directed {
                            dest: pub_node,
                            payload: Arc::new(bytes),
                            wire_bytes: CONTROL_BYTES,
                        }),
                        ready,
                    );
                }
            }
            ProtocolMsg::SubpM5(m5) => {
                let _ = state.manager.handle_m5(&m5);
            }
            ProtocolMsg::Apsub3T6(t6) => {
                let _ = state.manager.handle_t6(&t6);
            }
            ProtocolMsg::StolenNotice(notice) => {
                if let Some(issuer) = state.manager.handle_stolen(&notice) {
                    let pub_node = self.topo.publisher_node(issuer.0 as usize);
                    let bytes = ProtocolMsg::StolenNotice(notice).to_bytes();
                    self.send(
                        mgr_node,
                        mgr_attach,
                        Packet::Directed(Directed {
                            dest: pub_node,
                            payload: Arc::new(bytes),
                            wire_bytes: CONTROL_BYTES,
                        }),
                    );
                }
            }
            _ => {}
        }
    }

    // ---- consumer driver ----

    fn consumer_data(&mut self, c: u32, data: Data) {
        // Protocol response?
        let key = data.name.bytes.clone();
        let is_handshake = matches!(&self.scheme, SchemeState::Sdpc(s) if s.handshake_names.contains_key(&key));
        if is_handshake {
            self.sdpc_handshake_data(c, data);
            return;
        }
        let is_keyreq = matches!(&self.scheme, SchemeState::EuRe(s) if s.keyreq_names.contains_key(&key));
        if is_keyreq {
            self.eure_key_response(data);
            return;
        }
        // Content segment.
        let Some(instances) = self.consumers[c as usize].outstanding.get(&key) else {
            return; // stale or duplicate
        };
        // Epoch checks: a copy encrypted under a key epoch this consumer does
        // not hold is undecryptable and forces a refetch from the publisher.
        let stale = match (&self.scheme, data.body.epoch) {
            (SchemeState::GroupKey(gk), Some(e)) => {
                let req = self.instances[instances[0] as usize].req;
                let obj_idx = self.requests[req as usize].object;
                let p = self.catalog[obj_idx].publisher;
                e < gk.join_epoch[c as usize][p]
            }
            (SchemeState::EuRe(st), Some(e)) => {
                // Revocation is decoupled from the content version, so stale
                // copies linger in caches under the same name.
                let req = self.instances[instances[0] as usize].req;
                let obj_idx = self.requests[req as usize].object;
                e < *st.key_epoch.get(&(c, obj_idx)).unwrap_or(&0)
            }
            _ => false,
        };
        if stale {
            self.metrics.epoch_refetches += 1;
            self.metrics.interest_packets += 1;
            let inst_id = instances[0];
            let mut interest = self.instances[inst_id as usize].interest.clone();
            interest.fresh = true;
            let gw = self.consumers[c as usize].gateway;
            self.router_interest(gw, Face::Consumer(c), interest);
            return;
        }
        let instances = self.consumers[c as usize]
            .outstanding
            .remove(&key)
            .unwrap();
        for inst_id in instances {
            self.resolve_instance(inst_id, data.origin);
        }
    }

    fn resolve_instance(&mut self, inst_id: u64, origin: Origin) {
        let inst = &mut self.instances[inst_id as usize];
        if inst.resolution != Resolution::Pending {
            return;
        }
        inst.resolution = match origin {
            Origin::Cache => Resolution::FromCache,
            Origin::Publisher => Resolution::FromPublisher,
        };
        match origin {
            Origin::Cache => self.metrics.instances_from_cache += 1,
            Origin::Publisher => self.metrics.instances_from_publisher += 1,
        }
        let req_id = inst.req;
        let req = &mut self.requests[req_id as usize];
        req.segments_pending -= 1;
        if req.segments_pending == 0 && !req.failed && !req.completed {
            req.completed = true;
            self.metrics.requests_completed += 1;
            self.download_sum_s += (self.now - req.issued_ns) as f64 / 1e9;
            self.open_requests -= 1;
        }
    }

    fn sdpc_handshake_data(&mut self, c: u32, data: Data) {
        let SchemeState::Sdpc(state) = &mut self.scheme else {
            return;
        };
        let Some(&(owner, publisher)) = state.handshake_names.get(&data.name.bytes) else {
            return;
        };
        if owner != c {
            return;
        }
        let Some(pending) = state.pending.get(&(c, publisher)) else {
            return;
        };
        let crid = pending.crid;
        let Ok(msg) = ProtocolMsg::from_bytes(&data.body.payload) else {
            return;
        };
        let consumer = &mut state.consumers[c as usize];
        let response = match msg {
            ProtocolMsg::SubpM4(m4) => consumer
                .handle_m4(crid, &m4, &mut self.rng)
                .map(|(m6, _)| ProtocolMsg::SubpM6(m6)),
            ProtocolMsg::ApsubA2(a2) => consumer
                .handle_a2(crid, &a2, &mut self.rng)
                .map(|(a3, _)| ProtocolMsg::ApsubA3(a3)),
            ProtocolMsg::Apsub3T4(t4) => consumer
                .handle_t4(crid, &t4, &mut self.rng)
                .map(|(t5, _)| ProtocolMsg::Apsub3T5(t5)),
            _ => return,
        };
        match response {
            Ok(reply) => {
                let pending = state.pending.remove(&(c, publisher)).unwrap();
                state.handshake_names.remove(&pending.name);
                self.metrics.protocol_runs_completed += 1;
                // Final challenge response travels as a control message from
                // the gateway to the publisher node.
                let gw = self.consumers[c as usize].gateway;
                let dest = self.topo.publisher_node(publisher);
                let bytes = reply.to_bytes();
                self.send(
                    gw,
                    self.topo.next_hop[dest][gw] as usize,
                    Packet::Directed(Directed {
                        dest,
                        payload: Arc::new(bytes),
                        wire_bytes: CONTROL_BYTES,
                    }),
                );
                // Anchor and waiters proceed (waiters may need their own
                // handshakes for other objects).
                self.begin_fetch(pending.anchor);
                for w in pending.waiters {
                    self.dispatch_request(w);
                }
            }
            Err(_) => {
                // Verification failure aborts the run silently; retransmit
                // timers deal with recovery.
            }
        }
    }

    fn eure_key_response(&mut self, data: Data) {
        let SchemeState::EuRe(state) = &mut self.scheme else {
            return;
        };
        let Some(&(c, obj_idx)) = state.keyreq_names.get(&data.name.bytes) else {
            return;
        };
        let epoch = state.epoch[obj_idx];
        state.key_epoch.insert((c, obj_idx), epoch);
        let Some(pending) = state.pending.remove(&(c, obj_idx)) else {
            return;
        };
        state.keyreq_names.remove(&pending.name);
        self.begin_fetch(pending.anchor);
        for w in pending.waiters {
            self.dispatch_request(w);
        }
    }

    // ---- churn ----

    fn churn_event(&mut self, ev: ChurnEvent) {
        match &mut self.scheme {
            SchemeState::GroupKey(gk) => {
                let p = ev.publisher;
                gk.epoch[p] += 1;
                gk.join_epoch[ev.consumer as usize][p] = gk.epoch[p];
                // Rekey distribution: one multicast tree traversal.
                let edges = gk.rekey_tree[p].clone();
                self.metrics.rekey_messages += edges.len() as u64;
                for (a, b) in edges {
                    if let Some(link_id) = self.topo.link_between(a, b) {
                        let link = &self.topo.links[link_id];
                        let dir = if a == link.a { 0 } else { 1 };
                        let tx = transmission_ns(CONTROL_BYTES, link.capacity_bps);
                        let start = self.now.max(self.link_busy[link_id][dir]);
                        self.link_busy[link_id][dir] = start + tx;
                    }
                }
            }
            SchemeState::EuRe(st) => {
                // Key revocation decoupled from content version: a leave
                // rotates the keys of every object the departing consumer
                // held, stranding stale copies in caches (the content
                // version, and hence the name, does not change).
                if ev.is_leave {
                    let held: Vec<usize> = st
                        .key_epoch
                        .iter()
                        .filter(|((cc, _), _)| *cc == ev.consumer)
                        .map(|((_, o), _)| *o)
                        .collect();
                    for o in held {
                        st.epoch[o] += 1;
                        st.key_epoch.remove(&(ev.consumer, o));
                    }
                }
            }
            _ => {}
        }
    }

    // ---- finalize ----

    fn finalize(mut self) -> RunOutput {
        for inst in &self.instances {
            if inst.resolution == Resolution::Pending {
                self.metrics.instances_pending += 1;
            }
        }
        for req in &self.requests {
            if !req.completed && !req.failed {
                self.metrics.requests_pending += 1;
            }
        }
        self.metrics.per_router = self
            .routers
            .iter()
            .map(|r| {
                let mut c = r.counters.clone();
                c.cs_insertions = r.cs.insertions;
                c.cs_evictions = r.cs.evictions;
                c
            })
            .collect();
        let download_sum = self.download_sum_s;
        self.metrics.finalize(&self.cfg, download_sum);
        debug_assert!(self.metrics.conservation_holds());
        let (manager_counters, publisher_counters) = match &self.scheme {
            SchemeState::Sdpc(state) => (
                Some(state.manager.counters.clone()),
                state.publishers.iter().map(|p| p.counters.clone()).collect(),
            ),
            _ => (None, Vec::new()),
        };
        RunOutput {
            metrics: self.metrics,
            manager_counters,
            publisher_counters,
            adversary: self.adversary,
            name_truth: self.name_truth,
        }
    }

    /// Read-only access for attack drivers that need real names (controls).
    pub fn sdpc_grant_names(&self, obj_idx: usize) -> Option<Vec<Vec<u8>>> {
        let SchemeState::Sdpc(state) = &self.scheme else {
            return None;
        };
        let obj = &self.catalog[obj_idx];
        let published = state.publishers[obj.publisher].object(&obj.id)?;
        Some(published.segment_names.clone())
    }

    pub fn catalog_len(&self) -> usize {
        self.catalog.len()
    }

    pub fn object_name(&self, obj_idx: usize) -> &str {
        &self.catalog[obj_idx].id.name
    }

    pub fn gateway_router(&self, slot: usize) -> usize {
        self.topo.gateways[slot]
    }

    pub fn publisher_dest(&self, p: usize) -> usize {
        self.topo.publisher_node(p)
    }
}

fn remove_outstanding(
    outstanding: &mut HashMap<NameBytes, Vec<u64>>,
    name: &NameBytes,
    inst: u64,
) {
    if let Some(list) = outstanding.get_mut(name) {
        list.retain(|&i| i != inst);
        if list.is_empty() {
            outstanding.remove(name);
        }
    }
}

fn derive_key(parts: &[&[u8]]) -> SymmetricKey {
    SymmetricKey(hash_parts(parts).0)
}

fn plain_name_components(p: usize, id: &ObjectId, seg: u32) -> Vec<String> {
    vec![
        format!("pub{p}"),
        id.name.clone(),
        format!("_v{}", id.version),
        format!("_s{seg}"),
    ]
}

fn shared_plain_name(p: usize, id: &ObjectId, seg: u32) -> Vec<u8> {
    SdpcName::plain(plain_name_components(p, id, seg)).encode()
}

/// Convenience wrapper: build, run, and return the output.
pub fn run(cfg: SimConfig) -> RunOutput {
    Simulation::new(cfg).run()
}
