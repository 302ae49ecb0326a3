//! Content store with pluggable replacement: the two-partition
//! least-frequently-and-recently-used policy the experiments use, plus plain
//! LRU and windowed LFU alternates behind the same interface.
//!
//! LFRU semantics implemented here: new entries land in the unprivileged
//! partition, which runs a windowed LFU approximation; a repeat hit promotes
//! an entry into the privileged partition, which is LRU-ordered and capped at
//! a fraction of capacity (promotion demotes privileged LRU tails back to
//! unprivileged). Space is reclaimed from the unprivileged LFU victim first,
//! then from the privileged LRU tail.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::packet::{DataBody, NameBytes};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    Lfru,
    Lru,
    Lfu,
}

impl PolicyKind {
    pub fn parse(s: &str) -> Option<PolicyKind> {
        Some(match s {
            "lfru" => PolicyKind::Lfru,
            "lru" => PolicyKind::Lru,
            "lfu" => PolicyKind::Lfu,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Partition {
    Privileged,
    Unprivileged,
}

struct Entry {
    body: Arc<DataBody>,
    size: u64,
    partition: Partition,
    freq: u32,
    seq: u64,
}

/// Halve unprivileged frequencies every this many operations (the "window").
const AGING_WINDOW: u64 = 4096;

pub struct ContentStore {
    capacity: u64,
    privileged_cap: u64,
    policy: PolicyKind,
    used: u64,
    priv_used: u64,
    entries: HashMap<NameBytes, Entry>,
    /// Privileged partition order: seq -> name (LRU victim = smallest seq).
    lru_index: BTreeMap<u64, NameBytes>,
    /// Unprivileged partition order: (freq, seq) -> name (LFU victim =
    /// smallest).
    lfu_index: BTreeMap<(u32, u64), NameBytes>,
    seq: u64,
    ops: u64,
    pub insertions: u64,
    pub evictions: u64,
}

impl ContentStore {
    pub fn new(capacity: u64, policy: PolicyKind, privileged_fraction: f64) -> Self {
        ContentStore {
            capacity,
            privileged_cap: (capacity as f64 * privileged_fraction) as u64,
            policy,
            used: 0,
            priv_used: 0,
            entries: HashMap::new(),
            lru_index: BTreeMap::new(),
            lfu_index: BTreeMap::new(),
            seq: 0,
            ops: 0,
            insertions: 0,
            evictions: 0,
        }
    }

    pub fn used_bytes(&self) -> u64 {
        self.used
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &NameBytes) -> bool {
        self.entries.contains_key(name)
    }

    #[cfg(test)]
    fn freq_of(&self, name: &NameBytes) -> Option<u32> {
        self.entries.get(name).map(|e| e.freq)
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn bump_ops(&mut self) {
        self.ops += 1;
        if self.policy != PolicyKind::Lru && self.ops % AGING_WINDOW == 0 {
            // Window boundary: halve all unprivileged frequencies.
            let names: Vec<NameBytes> = self.lfu_index.values().cloned().collect();
            self.lfu_index.clear();
            for name in names {
                let e = self.entries.get_mut(&name).unwrap();
                e.freq /= 2;
                self.lfu_index.insert((e.freq, e.seq), name);
            }
        }
    }

    /// Exact-match lookup; a hit updates recency/frequency state and may
    /// promote the entry.
    pub fn get(&mut self, name: &NameBytes) -> Option<Arc<DataBody>> {
        if !self.entries.contains_key(name) {
            return None;
        }
        self.bump_ops();
        let key: NameBytes = name.clone();
        let seq = self.next_seq();
        let e = self.entries.get_mut(&key).unwrap();
        let body = e.body.clone();
        match (self.policy, e.partition) {
            (PolicyKind::Lru, _) => {
                self.lru_index.remove(&e.seq);
                e.seq = seq;
                self.lru_index.insert(seq, key);
            }
            (PolicyKind::Lfu, _) => {
                self.lfu_index.remove(&(e.freq, e.seq));
                e.freq += 1;
                e.seq = seq;
                self.lfu_index.insert((e.freq, e.seq), key);
            }
            (PolicyKind::Lfru, Partition::Privileged) => {
                self.lru_index.remove(&e.seq);
                e.seq = seq;
                e.freq += 1;
                self.lru_index.insert(seq, key);
            }
            (PolicyKind::Lfru, Partition::Unprivileged) => {
                // Repeat hit: promote into the privileged partition.
                self.lfu_index.remove(&(e.freq, e.seq));
                e.freq += 1;
                e.seq = seq;
                e.partition = Partition::Privileged;
                let size = e.size;
                self.lru_index.insert(seq, key);
                self.priv_used += size;
                self.shrink_privileged();
            }
        }
        Some(body)
    }

    /// Demote privileged LRU tails until the partition fits its cap again
    /// (the just-promoted entry is the freshest, so it survives).
    fn shrink_privileged(&mut self) {
        while self.priv_used > self.privileged_cap && self.lru_index.len() > 1 {
            let (&seq, name) = self.lru_index.iter().next().unwrap();
            let name = name.clone();
            self.lru_index.remove(&seq);
            let e = self.entries.get_mut(&name).unwrap();
            e.partition = Partition::Unprivileged;
            self.priv_used -= e.size;
            self.lfu_index.insert((e.freq, e.seq), name);
        }
    }

    /// Inserts (or refreshes) an entry, evicting per policy. Entries larger
    /// than capacity pass through uncached.
    pub fn insert(&mut self, name: NameBytes, body: Arc<DataBody>) -> bool {
        let size = body.wire_bytes;
        if size > self.capacity || self.capacity == 0 {
            return false;
        }
        if let Some(e) = self.entries.get_mut(&name) {
            // Repeated identical insert: refresh the copy, count no new bytes.
            e.body = body;
            return true;
        }
        self.bump_ops();
        while self.used + size > self.capacity {
            if !self.evict_one() {
                return false;
            }
        }
        let seq = self.next_seq();
        if self.policy == PolicyKind::Lru {
            self.lru_index.insert(seq, name.clone());
            self.priv_used += size;
        } else {
            self.lfu_index.insert((1, seq), name.clone());
        }
        self.entries.insert(
            name,
            Entry {
                body,
                size,
                partition: if self.policy == PolicyKind::Lru {
                    Partition::Privileged
                } else {
                    Partition::Unprivileged
                },
                freq: 1,
                seq,
            },
        );
        self.used += size;
        self.insertions += 1;
        true
    }

    fn evict_one(&mut self) -> bool {
        // Unprivileged LFU victim first, then privileged LRU tail.
        let victim = if let Some((&key, name)) = self.lfu_index.iter().next() {
            let name = name.clone();
            self.lfu_index.remove(&key);
            Some(name)
        } else if let Some((&seq, name)) = self.lru_index.iter().next() {
            let name = name.clone();
            self.lru_index.remove(&seq);
            Some(name)
        } else {
            None
        };
        match victim {
            Some(name) => {
                let e = self.entries.remove(&name).unwrap();
                self.used -= e.size;
                if e.partition == Partition::Privileged {
                    self.priv_used -= e.size;
                }
                self.evictions += 1;
                true
            }
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::CacheRule;

    fn name(s: &str) -> NameBytes {
        Arc::new(s.as_bytes().to_vec())
    }

    fn body(size: u64) -> Arc<DataBody> {
        Arc::new(DataBody {
            payload: Arc::new(vec![0u8; 4]),
            wire_bytes: size,
            cache_rule: CacheRule::Anywhere,
            epoch: None,
            label: None,
        })
    }

    #[test]
    fn lfru_promotion_protects_hot_entry() {
        // Capacity of two unit entries: insert A, B, hit A, insert C.
        // A was promoted, so the unprivileged LFU victim is B.
        let mut cs = ContentStore::new(2, PolicyKind::Lfru, 0.5);
        assert!(cs.insert(name("A"), body(1)));
        assert!(cs.insert(name("B"), body(1)));
        assert!(cs.get(&name("A")).is_some());
        assert!(cs.insert(name("C"), body(1)));
        assert!(cs.contains(&name("A")), "promoted entry must survive");
        assert!(!cs.contains(&name("B")), "unprivileged LFU victim evicted first");
        assert!(cs.contains(&name("C")));
        assert_eq!(cs.evictions, 1);
    }

    #[test]
    fn zero_capacity_caches_nothing() {
        let mut cs = ContentStore::new(0, PolicyKind::Lfru, 0.5);
        assert!(!cs.insert(name("A"), body(1)));
        assert!(cs.get(&name("A")).is_none());
        assert_eq!(cs.used_bytes(), 0);
    }

    #[test]
    fn oversized_entry_passes_through() {
        let mut cs = ContentStore::new(10, PolicyKind::Lfru, 0.5);
        assert!(!cs.insert(name("big"), body(11)));
        assert!(cs.is_empty());
    }

    #[test]
    fn repeated_insert_counts_bytes_once() {
        let mut cs = ContentStore::new(10, PolicyKind::Lfru, 0.5);
        assert!(cs.insert(name("A"), body(4)));
        assert!(cs.insert(name("A"), body(4)));
        assert_eq!(cs.used_bytes(), 4);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs.insertions, 1);
    }

    #[test]
    fn capacity_never_exceeded_and_priv_accounting_holds() {
        let mut cs = ContentStore::new(10, PolicyKind::Lfru, 0.5);
        for i in 0..200 {
            cs.insert(name(&format!("n{i}")), body(1 + (i % 3) as u64));
            if i % 2 == 0 {
                cs.get(&name(&format!("n{}", i / 2)));
            }
            assert!(cs.used_bytes() <= 10);
            assert!(cs.priv_used <= cs.used);
        }
    }

    #[test]
    fn lru_evicts_least_recent() {
        let mut cs = ContentStore::new(2, PolicyKind::Lru, 0.5);
        cs.insert(name("A"), body(1));
        cs.insert(name("B"), body(1));
        cs.get(&name("A"));
        cs.insert(name("C"), body(1));
        assert!(cs.contains(&name("A")));
        assert!(!cs.contains(&name("B")));
    }

    #[test]
    fn lfu_evicts_least_frequent() {
        let mut cs = ContentStore::new(2, PolicyKind::Lfu, 0.5);
        cs.insert(name("A"), body(1));
        cs.insert(name("B"), body(1));
        cs.get(&name("A"));
        cs.get(&name("A"));
        cs.get(&name("B"));
        cs.insert(name("C"), body(1));
        assert!(cs.contains(&name("A")));
        assert!(!cs.contains(&name("B")), "lower-frequency entry evicted");
    }

    #[test]
    fn aging_window_halves_frequencies() {
        let mut cs = ContentStore::new(AGING_WINDOW * 2, PolicyKind::Lfu, 0.5);
        cs.insert(name("hot"), body(1));
        for _ in 0..40 {
            cs.get(&name("hot"));
        }
        let before = cs.freq_of(&name("hot")).unwrap();
        // Distinct inserts each count as an operation; cross the boundary.
        for i in 0..AGING_WINDOW {
            cs.insert(name(&format!("filler{i}")), body(1));
        }
        let after = cs.freq_of(&name("hot")).unwrap();
        assert!(after < before, "window aging must halve frequencies");
    }
}
