//! In-simulation adversary: a vantage over links and routers, byte-level
//! observation, and injection of forged or replayed packets.
//!
//! Everything the adversary emits is assembled through [`Forge`], which tags
//! every byte-string part as observed traffic, own randomness, or public
//! template structure. That makes the knowledge-closure property checkable:
//! no role-internal secret can flow into an injection because there is no
//! constructor for it.

use std::collections::HashMap;
use std::sync::Arc;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use sdpc_core::crypto::Digest256;
use sdpc_core::naming::{NameKind, Prefix, SdpcName};
use sdpc_core::protocol::{ProtocolMsg, SubpM1};

use crate::packet::{Data, Interest, NameRef, Packet, INTEREST_BYTES};
use crate::workload::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vantage {
    /// Control over every communication link and cache router.
    AllLinks,
    /// Control of one router and its incident links (edge-router attacks).
    RouterIncident(usize),
}

impl Vantage {
    pub fn covers_link(&self, a: usize, b: usize) -> bool {
        match self {
            Vantage::AllLinks => true,
            Vantage::RouterIncident(r) => a == *r || b == *r,
        }
    }

    pub fn covers_router(&self, r: usize) -> bool {
        match self {
            Vantage::AllLinks => true,
            Vantage::RouterIncident(v) => r == *v,
        }
    }
}

/// Provenance tag for one part of an injected packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartTag {
    /// Bytes captured from traffic crossing the vantage.
    Observed,
    /// Bytes drawn from the adversary's own randomness.
    Random,
    /// Fixed public structure (component framing, routable prefixes,
    /// message type tags).
    Template,
}

/// A byte-string with its provenance.
#[derive(Clone, Debug)]
pub enum Sourced {
    Observed(Vec<u8>),
    Random(Vec<u8>),
    Template(Vec<u8>),
}

impl Sourced {
    pub fn bytes(&self) -> &[u8] {
        match self {
            Sourced::Observed(b) | Sourced::Random(b) | Sourced::Template(b) => b,
        }
    }

    pub fn tag(&self) -> PartTag {
        match self {
            Sourced::Observed(_) => PartTag::Observed,
            Sourced::Random(_) => PartTag::Random,
            Sourced::Template(_) => PartTag::Template,
        }
    }
}

/// The only path from adversary intent to packet bytes; records provenance
/// per injection.
pub struct Forge {
    rng: ChaCha8Rng,
    pub records: Vec<Vec<PartTag>>,
}

impl Forge {
    pub fn new(seed: u64) -> Self {
        Forge {
            rng: stream_rng(seed, "adversary"),
            records: Vec::new(),
        }
    }

    pub fn random(&mut self, n: usize) -> Sourced {
        let mut b = vec![0u8; n];
        self.rng.fill_bytes(&mut b);
        Sourced::Random(b)
    }

    pub fn random_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Builds a consumer-name-space interest name from tagged parts.
    pub fn first_interest_name(&mut self, prefix: &str, digest: Sourced, sealed: Sourced) -> Vec<u8> {
        let d: [u8; 32] = digest.bytes().try_into().expect("digest part is 32 bytes");
        let name = SdpcName::protected_from_parts(
            &Prefix::new(vec![prefix.to_string()]),
            NameKind::FirstInterest,
            Digest256(d),
            sealed.bytes().to_vec(),
        );
        self.records
            .push(vec![PartTag::Template, digest.tag(), sealed.tag()]);
        name.encode()
    }

    /// Builds a shared-name-space probe from tagged parts.
    pub fn segment_probe_name(&mut self, prefix: &str, digest: Sourced, sealed: Sourced) -> Vec<u8> {
        let d: [u8; 32] = digest.bytes().try_into().expect("digest part is 32 bytes");
        let name = SdpcName::protected_from_parts(
            &Prefix::new(vec![prefix.to_string()]),
            NameKind::SharedSegment,
            Digest256(d),
            sealed.bytes().to_vec(),
        );
        self.records
            .push(vec![PartTag::Template, digest.tag(), sealed.tag()]);
        name.encode()
    }

    /// A subscription-shaped payload around an arbitrary ciphertext part.
    pub fn m1_payload(&mut self, enc_n0: Sourced) -> Vec<u8> {
        let bytes = ProtocolMsg::SubpM1(SubpM1 {
            enc_n0: enc_n0.bytes().to_vec(),
        })
        .to_bytes();
        self.records.push(vec![PartTag::Template, enc_n0.tag()]);
        bytes
    }

    /// Replays captured bytes verbatim.
    pub fn replay(&mut self, observed: &Arc<Vec<u8>>) -> Vec<u8> {
        self.records.push(vec![PartTag::Observed]);
        observed.as_ref().clone()
    }

    /// Raw malformed bytes (random, never parse as a name).
    pub fn garbage(&mut self, n: usize) -> Vec<u8> {
        let mut b = vec![0xFFu8; n];
        self.rng.fill_bytes(&mut b[1..]);
        b[0] = 0xFF; // invalid component tag
        self.records.push(vec![PartTag::Random]);
        b
    }
}

#[derive(Clone, Debug)]
pub struct Injection {
    pub at_ns: u64,
    pub router: usize,
    pub packet: Packet,
}

/// Attack-specific behavior and evidence.
pub enum Mode {
    /// Watchlist / sniffing: match needles against observed names and
    /// payloads; never injects.
    Passive {
        watchlist: Vec<Vec<u8>>,
        name_matches: u64,
        payload_matches: u64,
        prefix_only_matches: u64,
    },
    /// Edge-router traffic monitoring: map observed content names to catalog
    /// objects.
    Monitor {
        /// Public catalog listing: object name -> index.
        catalog: HashMap<String, usize>,
        items_per_publisher: usize,
        n_publishers: usize,
        /// name bytes -> guessed object index.
        guesses: HashMap<Vec<u8>, usize>,
        /// Repeated consumer-name-space digests (linkability evidence).
        digest_sightings: HashMap<[u8; 32], u32>,
    },
    /// Interest flooding with subscription-shaped fakes.
    Ddos {
        target_prefix: String,
        publisher_dest: usize,
        inject_router: usize,
        start_ns: u64,
        gap_ns: u64,
        random_fakes: u32,
        replay_fakes: u32,
        /// Registered digest captured from a real subscription interest;
        /// replayed-digest fakes reuse it with fresh random ciphertexts.
        captured_digest: Option<Arc<Vec<u8>>>,
        emitted_replay: bool,
    },
    /// Cache-timing probes: forged shared-segment names against warm caches.
    TimeProbe {
        inject_router: usize,
        at_ns: u64,
        target_prefix: String,
        publisher_dest: usize,
        random_probes: u32,
        malformed_probes: u32,
        /// Control only: valid names derived from a leaked grant.
        leaked_names: Vec<Vec<u8>>,
    },
    /// Replay captured subscription and access requests.
    Replay {
        inject_router: usize,
        replay_at_ns: u64,
        captured_m1: Option<(Arc<Vec<u8>>, Arc<Vec<u8>>, usize)>,
        captured_access: Option<(Arc<Vec<u8>>, Arc<Vec<u8>>, usize)>,
        emitted: bool,
    },
}

pub struct Adversary {
    pub vantage: Vantage,
    pub forge: Forge,
    pub mode: Mode,
    pub packets_observed: u64,
    pub datas_received: u64,
    pub injections_emitted: u64,
}

impl Adversary {
    pub fn new(seed: u64, vantage: Vantage, mode: Mode) -> Self {
        Adversary {
            vantage,
            forge: Forge::new(seed),
            mode,
            packets_observed: 0,
            datas_received: 0,
            injections_emitted: 0,
        }
    }

    /// Injections that exist before any observation (probes, random fakes).
    pub fn initial_injections(&mut self) -> Vec<Injection> {
        let mut out = Vec::new();
        match &mut self.mode {
            Mode::Ddos {
                target_prefix,
                publisher_dest,
                inject_router,
                start_ns,
                gap_ns,
                random_fakes,
                ..
            } => {
                let (prefix, dest, router, start, gap, n) = (
                    target_prefix.clone(),
                    *publisher_dest,
                    *inject_router,
                    *start_ns,
                    *gap_ns,
                    *random_fakes,
                );
                for i in 0..n {
                    let digest = self.forge.random(32);
                    let sealed = self.forge.random(33);
                    let name = self.forge.first_interest_name(&prefix, digest, sealed);
                    let enc = self.forge.random(49);
                    let payload = self.forge.m1_payload(enc);
                    out.push(Injection {
                        at_ns: start + i as u64 * gap,
                        router,
                        packet: Packet::Interest(Interest {
                            name: NameRef::from_bytes(name),
                            payload: Some(Arc::new(payload)),
                            wire_bytes: INTEREST_BYTES,
                            dest,
                            instance: None,
                            proto_instance: None,
                            fresh: false,
                            label: None,
                            from_adversary: true,
                        }),
                    });
                }
            }
            Mode::TimeProbe {
                inject_router,
                at_ns,
                target_prefix,
                publisher_dest,
                random_probes,
                malformed_probes,
                leaked_names,
            } => {
                let (router, at, prefix, dest, nr, nm) = (
                    *inject_router,
                    *at_ns,
                    target_prefix.clone(),
                    *publisher_dest,
                    *random_probes,
                    *malformed_probes,
                );
                let leaked = leaked_names.clone();
                let push = |out: &mut Vec<Injection>, i: u64, name_bytes: Vec<u8>| {
                    out.push(Injection {
                        at_ns: at + i * 1_000,
                        router,
                        packet: Packet::Interest(Interest {
                            name: NameRef::from_bytes(name_bytes),
                            payload: None,
                            wire_bytes: INTEREST_BYTES,
                            dest,
                            instance: None,
                            proto_instance: None,
                            fresh: false,
                            label: None,
                            from_adversary: true,
                        }),
                    });
                };
                let mut i = 0u64;
                for name in leaked {
                    push(&mut out, i, name);
                    i += 1;
                }
                for _ in 0..nr {
                    let digest = self.forge.random(32);
                    let sealed = self.forge.random(33);
                    let name = self.forge.segment_probe_name(&prefix, digest, sealed);
                    push(&mut out, i, name);
                    i += 1;
                }
                for _ in 0..nm {
                    let garbage = self.forge.garbage(40);
                    push(&mut out, i, garbage);
                    i += 1;
                }
            }
            _ => {}
        }
        self.injections_emitted += out.len() as u64;
        out
    }

    /// Called for every packet crossing the vantage; may return injections.
    pub fn observe(&mut self, now: u64, pkt: &Packet) -> Vec<Injection> {
        self.packets_observed += 1;
        let mut out = Vec::new();
        match &mut self.mode {
            Mode::Passive {
                watchlist,
                name_matches,
                payload_matches,
                prefix_only_matches,
            } => {
                let (name, payload) = packet_bytes(pkt);
                for needle in watchlist.iter() {
                    if let Some((bytes, parsed)) = name {
                        if contains(bytes, needle) {
                            let in_prefix_only = parsed
                                .map(|p| {
                                    p.route_key()
                                        .map(|rk| contains(rk.as_bytes(), needle))
                                        .unwrap_or(false)
                                        && !non_prefix_contains(p, needle)
                                })
                                .unwrap_or(false);
                            if in_prefix_only {
                                *prefix_only_matches += 1;
                            } else {
                                *name_matches += 1;
                            }
                        }
                    }
                    if let Some(p) = payload {
                        if contains(p, needle) {
                            *payload_matches += 1;
                        }
                    }
                }
            }
            Mode::Monitor {
                catalog,
                items_per_publisher,
                n_publishers,
                guesses,
                digest_sightings,
            } => {
                if let Packet::Interest(int) = pkt {
                    if let Some(parsed) = &int.name.parsed {
                        match parsed.kind() {
                            NameKind::SharedSegment => {
                                guesses.entry(int.name.bytes.as_ref().clone()).or_insert_with(
                                    || {
                                        guess_object(
                                            parsed,
                                            *items_per_publisher,
                                            *n_publishers,
                                            &mut self.forge,
                                        )
                                    },
                                );
                            }
                            NameKind::Plain => {
                                // Plaintext names map straight onto the
                                // public catalog.
                                let comps = parsed.prefix_components();
                                if comps.len() >= 2 {
                                    if let Some(&obj) = catalog.get(comps[1]) {
                                        guesses
                                            .entry(int.name.bytes.as_ref().clone())
                                            .or_insert(obj);
                                    }
                                }
                            }
                            NameKind::FirstInterest => {
                                // Identical digests across runs are linkable
                                // even though the consumer stays unidentified.
                                if let Some(d) = parsed.digest() {
                                    *digest_sightings.entry(d.0).or_insert(0) += 1;
                                }
                            }
                        }
                    }
                }
            }
            Mode::Ddos {
                target_prefix,
                publisher_dest,
                inject_router,
                start_ns,
                gap_ns,
                replay_fakes,
                captured_digest,
                emitted_replay,
                ..
            } => {
                if captured_digest.is_none() {
                    if let Packet::Interest(int) = pkt {
                        if !int.from_adversary
                            && int.name.parsed.as_deref().map(|p| p.kind())
                                == Some(NameKind::FirstInterest)
                            && int
                                .name
                                .parsed
                                .as_deref()
                                .and_then(|p| p.route_key())
                                .map(|rk| rk == target_prefix)
                                .unwrap_or(false)
                        {
                            let digest = int.name.parsed.as_deref().unwrap().digest().unwrap();
                            *captured_digest = Some(Arc::new(digest.0.to_vec()));
                        }
                    }
                }
                if let (Some(captured), false) = (captured_digest.clone(), *emitted_replay) {
                    *emitted_replay = true;
                    let (prefix, dest, router, start, gap, n) = (
                        target_prefix.clone(),
                        *publisher_dest,
                        *inject_router,
                        (*start_ns).max(now),
                        *gap_ns,
                        *replay_fakes,
                    );
                    for i in 0..n {
                        // Replayed registered digest, fresh random ciphertext
                        // (distinct names defeat PIT aggregation): costs the
                        // manager exactly one lookup plus one failed decrypt.
                        let digest = Sourced::Observed(captured.as_ref().clone());
                        let sealed = self.forge.random(33);
                        let name = self.forge.first_interest_name(&prefix, digest, sealed);
                        let enc = self.forge.random(49);
                        let payload = self.forge.m1_payload(enc);
                        out.push(Injection {
                            at_ns: start + i as u64 * gap,
                            router,
                            packet: Packet::Interest(Interest {
                                name: NameRef::from_bytes(name),
                                payload: Some(Arc::new(payload)),
                                wire_bytes: INTEREST_BYTES,
                                dest,
                                instance: None,
                                proto_instance: None,
                                fresh: false,
                                label: None,
                                from_adversary: true,
                            }),
                        });
                    }
                }
            }
            Mode::Replay {
                inject_router,
                replay_at_ns,
                captured_m1,
                captured_access,
                emitted,
            } => {
                if let Packet::Interest(int) = pkt {
                    if !int.from_adversary {
                        if let (Some(parsed), Some(payload)) = (&int.name.parsed, &int.payload) {
                            if parsed.kind() == NameKind::FirstInterest {
                                let is_m1 = matches!(
                                    ProtocolMsg::from_bytes(payload),
                                    Ok(ProtocolMsg::SubpM1(_))
                                );
                                let slot = if is_m1 { &mut *captured_m1 } else { &mut *captured_access };
                                if slot.is_none() {
                                    *slot =
                                        Some((int.name.bytes.clone(), payload.clone(), int.dest));
                                }
                            }
                        }
                    }
                }
                if !*emitted && captured_m1.is_some() && captured_access.is_some() {
                    *emitted = true;
                    let at = (*replay_at_ns).max(now + 1_000_000);
                    let router = *inject_router;
                    for (name, payload, dest) in
                        [captured_m1.clone().unwrap(), captured_access.clone().unwrap()]
                    {
                        let n = self.forge.replay(&name);
                        let p = self.forge.replay(&payload);
                        out.push(Injection {
                            at_ns: at,
                            router,
                            packet: Packet::Interest(Interest {
                                name: NameRef::from_bytes(n),
                                payload: Some(Arc::new(p)),
                                wire_bytes: INTEREST_BYTES,
                                dest,
                                instance: None,
                                proto_instance: None,
                                fresh: false,
                                label: None,
                                from_adversary: true,
                            }),
                        });
                    }
                }
            }
            Mode::TimeProbe { .. } => {}
        }
        self.injections_emitted += out.len() as u64;
        out
    }

    /// Data delivered to the adversary's own face.
    pub fn receive_data(&mut self, _now: u64, _data: &Data) {
        self.datas_received += 1;
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// True when the needle appears outside the leading routable component.
fn non_prefix_contains(name: &SdpcName, needle: &[u8]) -> bool {
    let comps = name.prefix_components();
    for (i, c) in comps.iter().enumerate() {
        if i == 0 {
            continue;
        }
        if contains(c.as_bytes(), needle) {
            return true;
        }
    }
    if let Some(sp) = name.sealed_path() {
        if contains(sp, needle) {
            return true;
        }
    }
    if let Some(d) = name.digest() {
        if contains(&d.0, needle) {
            return true;
        }
    }
    false
}

/// Best-effort mapping of a protected name: the prefix reveals the
/// publisher, nothing else; guess uniformly inside that publisher's catalog.
fn guess_object(
    name: &SdpcName,
    items_per_publisher: usize,
    n_publishers: usize,
    forge: &mut Forge,
) -> usize {
    let pub_idx = name
        .route_key()
        .and_then(|rk| rk.strip_prefix("pub"))
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(0);
    let item = forge.random_u64() as usize % items_per_publisher;
    // Objects round-robin across publishers: index = item * P + p.
    (item * n_publishers + pub_idx).min(items_per_publisher * n_publishers - 1)
}

fn packet_bytes(pkt: &Packet) -> (Option<(&[u8], Option<&SdpcName>)>, Option<&[u8]>) {
    match pkt {
        Packet::Interest(i) => (
            Some((i.name.bytes.as_slice(), i.name.parsed.as_deref())),
            i.payload.as_deref().map(|v| v.as_slice()),
        ),
        Packet::Data(d) => (
            Some((d.name.bytes.as_slice(), d.name.parsed.as_deref())),
            Some(d.body.payload.as_slice()),
        ),
        Packet::Directed(m) => (None, Some(m.payload.as_slice())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forge_records_provenance_for_every_build() {
        let mut f = Forge::new(1);
        let d = f.random(32);
        let s = f.random(16);
        let _ = f.first_interest_name("pub0", d, s);
        let obs = Arc::new(vec![1u8, 2, 3]);
        let _ = f.replay(&obs);
        let _ = f.garbage(10);
        assert_eq!(f.records.len(), 3);
        assert_eq!(
            f.records[0],
            vec![PartTag::Template, PartTag::Random, PartTag::Random]
        );
        assert_eq!(f.records[1], vec![PartTag::Observed]);
        assert_eq!(f.records[2], vec![PartTag::Random]);
        // Closure: no tag other than the three legal provenances exists, so
        // any injected value decomposes into observed bytes, randomness, and
        // public structure.
        for rec in &f.records {
            assert!(rec
                .iter()
                .all(|t| matches!(t, PartTag::Observed | PartTag::Random | PartTag::Template)));
        }
    }

    #[test]
    fn forged_probe_names_parse_with_expected_kind() {
        let mut f = Forge::new(2);
        let d = f.random(32);
        let s = f.random(20);
        let bytes = f.segment_probe_name("pub3", d, s);
        let parsed = SdpcName::parse(&bytes).unwrap();
        assert_eq!(parsed.kind(), NameKind::SharedSegment);
        let g = f.garbage(32);
        assert!(SdpcName::parse(&g).is_err());
    }
}
