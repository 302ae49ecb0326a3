//! Simulated NDN PDUs. Payload bytes are real (small representative
//! markers, actually encrypted where the scheme encrypts); wire sizes are
//! modeled separately so multi-megabyte segments don't have to exist in
//! memory.

use std::sync::Arc;

use sdpc_core::naming::SdpcName;

/// Encoded name bytes; cache and PIT keys are exactly these bytes.
pub type NameBytes = Arc<Vec<u8>>;

/// A name as it travels: raw bytes plus the parse result (None = malformed,
/// e.g. adversarial probes).
#[derive(Clone, Debug)]
pub struct NameRef {
    pub bytes: NameBytes,
    pub parsed: Option<Arc<SdpcName>>,
}

impl NameRef {
    pub fn from_name(name: &SdpcName) -> Self {
        NameRef {
            bytes: Arc::new(name.encode()),
            parsed: Some(Arc::new(name.clone())),
        }
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let parsed = SdpcName::parse(&bytes).ok().map(Arc::new);
        NameRef {
            bytes: Arc::new(bytes),
            parsed,
        }
    }
}

/// Where a Data packet may be cached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheRule {
    /// Multi-level caching (d/p labels, shared segments).
    Anywhere,
    /// Never cached (h label, protocol traffic, key responses).
    Never,
    /// Cached only at gateway (edge) routers — the 1-level policy.
    GatewayOnly,
}

/// Content labels of the label-based flow-control baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McacLabel {
    H,
    N,
    D,
    P,
}

impl McacLabel {
    pub fn cache_rule(&self) -> CacheRule {
        match self {
            McacLabel::H => CacheRule::Never,
            McacLabel::N => CacheRule::GatewayOnly,
            McacLabel::D | McacLabel::P => CacheRule::Anywhere,
        }
    }

    /// h/n packets pay TCB processing at every router.
    pub fn tcb_charged(&self) -> bool {
        matches!(self, McacLabel::H | McacLabel::N)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Publisher,
    Cache,
}

/// Immutable Data content shared between cache entries and in-flight copies.
#[derive(Clone, Debug)]
pub struct DataBody {
    pub payload: Arc<Vec<u8>>,
    pub wire_bytes: u64,
    pub cache_rule: CacheRule,
    /// Group-key epoch that encrypted this copy.
    pub epoch: Option<u32>,
    pub label: Option<McacLabel>,
}

#[derive(Clone, Debug)]
pub struct Interest {
    pub name: NameRef,
    /// Protocol payloads ride on interests (subscription requests etc).
    pub payload: Option<Arc<Vec<u8>>>,
    pub wire_bytes: u64,
    /// Routing target node.
    pub dest: usize,
    /// Content instance id for metric attribution; None for protocol
    /// interests and adversarial probes.
    pub instance: Option<u64>,
    /// Protocol request instance (handshake / key request round trips).
    pub proto_instance: Option<u64>,
    /// Bypass content stores (refetch after an undecryptable cached copy).
    pub fresh: bool,
    pub label: Option<McacLabel>,
    pub from_adversary: bool,
}

#[derive(Clone, Debug)]
pub struct Data {
    pub name: NameRef,
    pub body: Arc<DataBody>,
    pub origin: Origin,
}

/// Point-to-point control message routed over the same links (manager
/// channel, final challenge responses, stolen notices).
#[derive(Clone, Debug)]
pub struct Directed {
    pub dest: usize,
    pub payload: Arc<Vec<u8>>,
    pub wire_bytes: u64,
}

#[derive(Clone, Debug)]
pub enum Packet {
    Interest(Interest),
    Data(Data),
    Directed(Directed),
}

impl Packet {
    pub fn wire_bytes(&self) -> u64 {
        match self {
            Packet::Interest(i) => i.wire_bytes,
            Packet::Data(d) => d.body.wire_bytes,
            Packet::Directed(m) => m.wire_bytes,
        }
    }

    pub fn label(&self) -> Option<McacLabel> {
        match self {
            Packet::Interest(i) => i.label,
            Packet::Data(d) => d.body.label,
            Packet::Directed(_) => None,
        }
    }
}

/// Downstream face recorded in PIT entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Face {
    Link(usize),
    Consumer(u32),
    Adversary,
}

/// Standard interest and control packet size.
pub const INTEREST_BYTES: u64 = 1024;
pub const CONTROL_BYTES: u64 = 1024;

/// Serialization time of a packet on a link, nanoseconds.
pub fn transmission_ns(wire_bytes: u64, capacity_bps: u64) -> u64 {
    (wire_bytes as u128 * 8 * 1_000_000_000 / capacity_bps as u128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmission_time_arithmetic() {
        // A 100 MB segment over a 1 Gbps link serializes in 0.8 s.
        assert_eq!(transmission_ns(100_000_000, 1_000_000_000), 800_000_000);
        assert_eq!(transmission_ns(1_000_000, 1_000_000_000), 8_000_000);
        assert_eq!(transmission_ns(INTEREST_BYTES, 1_000_000_000), 8_192);
    }
}
