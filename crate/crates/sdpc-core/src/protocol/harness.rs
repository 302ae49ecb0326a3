//! In-memory conformance driver for the protocol suite.
//!
//! Runs flows over a perfect channel at the byte level so adversarial
//! transcript mutations (byte flips, truncation, replay, reordering, withheld
//! responses) exercise exactly the parsing and verification paths a network
//! attacker can reach. The discrete-event simulator uses the same role types;
//! this driver exists so protocol properties can be checked without a
//! network.

use std::collections::HashMap;

use rand::RngCore;

use crate::crypto::SecretNumber;
use crate::naming::ObjectId;
use crate::wire::{Reader, Writer};

use super::messages::*;
use super::transcript::{Transcript, Verdict};
use super::{
    Consumer, ConsumerId, ConsumerRunReport, FlowKind, Manager, Profile, ProtocolError, Publisher,
    PublisherId, PublisherInfo,
};

/// Byte-level record of one run, one envelope per delivered step.
#[derive(Clone, Debug, Default)]
pub struct RecordedRun {
    pub steps: Vec<Vec<u8>>,
}

/// A transcript mutation applied at delivery time. Step indices follow the
/// message order of the flow (SubP: M1..M6, APSub: A1..A3, APSub3: T1..T6).
#[derive(Clone, Copy, Debug)]
pub enum Mutation {
    None,
    /// Flip one bit of the step's bytes (index taken modulo length).
    FlipByte { step: usize, index: usize },
    /// Truncate the step's bytes to half length.
    Truncate { step: usize },
    /// Substitute the same step recorded in a previous run of the same shape.
    Replay { step: usize },
    /// Deliver the bytes of a different (earlier) step in place of this one.
    Swap { step: usize, with: usize },
    /// Withhold the final consumer challenge response and let the
    /// stolen-ticket deadline fire.
    DropFinal,
}

impl Mutation {
    fn targets(&self, step: usize) -> bool {
        match self {
            Mutation::FlipByte { step: s, .. }
            | Mutation::Truncate { step: s }
            | Mutation::Replay { step: s }
            | Mutation::Swap { step: s, .. } => *s == step,
            _ => false,
        }
    }
}

/// Outcome of one driven run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub flow: FlowKind,
    pub completed: bool,
    pub rejected_at: Option<&'static str>,
    pub report: Option<ConsumerRunReport>,
    /// The publisher verified the consumer's final challenge response.
    pub publisher_confirmed: bool,
    /// The manager verified the run confirmation.
    pub manager_confirmed: bool,
    pub stolen_marked: bool,
    /// Envelope bytes as delivered (after mutation), for leak scans.
    pub delivered: Vec<Vec<u8>>,
}

impl RunResult {
    fn fresh(flow: FlowKind) -> Self {
        RunResult {
            flow,
            completed: false,
            rejected_at: None,
            report: None,
            publisher_confirmed: false,
            manager_confirmed: false,
            stolen_marked: false,
            delivered: Vec::new(),
        }
    }

    /// True when any byte needle appears in the delivered traffic.
    pub fn traffic_contains(&self, needle: &[u8]) -> bool {
        self.delivered
            .iter()
            .any(|step| step.windows(needle.len()).any(|w| w == needle))
    }
}

fn envelope(name: &[u8], msg: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_bytes(name).put_bytes(msg);
    w.finish()
}

fn open_envelope(bytes: &[u8]) -> Result<(Vec<u8>, ProtocolMsg), ProtocolError> {
    let mut r = Reader::new(bytes);
    let name = r.take_bytes()?.to_vec();
    let msg = ProtocolMsg::from_bytes(r.take_bytes()?)?;
    r.expect_end()?;
    Ok((name, msg))
}

pub struct World {
    pub consumers: Vec<Consumer>,
    pub publishers: Vec<Publisher>,
    pub manager: Manager,
    pub directory: Vec<PublisherInfo>,
    pub transcript: Transcript,
    pub now: u64,
    pub stolen_deadline: u64,
    next_rid: u64,
    rng: Box<dyn RngCore>,
}

impl World {
    /// Builds a fully registered world: every consumer is in the manager's
    /// registration table, every publisher has published
    /// `objects_per_publisher` four-segment objects and escrowed the grants.
    pub fn new(
        mut rng: Box<dyn RngCore>,
        n_consumers: usize,
        n_publishers: usize,
        objects_per_publisher: usize,
    ) -> Self {
        let mut manager = Manager::new();
        let mut publishers = Vec::new();
        let mut directory = Vec::new();
        for p in 0..n_publishers {
            let id = PublisherId(p as u32);
            let keypair = crate::crypto::PublisherKeyPair::generate(rng.as_mut());
            let prefix = crate::naming::Prefix::new(vec![format!("pub{p}"), "content".to_string()]);
            let mut publisher = Publisher::new(id, prefix.clone(), keypair);
            manager.register_publisher(id, publisher.public_key().clone());
            for i in 0..objects_per_publisher {
                let object = ObjectId::new(format!("obj{p}x{i}.dat"), 1);
                let published = publisher
                    .publish_object(object, 1_000 + i as u64, 4, rng.as_mut())
                    .expect("publish");
                manager.escrow_grant(id, published.grant.clone());
            }
            directory.push(PublisherInfo {
                id,
                public_key: publisher.public_key().clone(),
                prefix,
            });
            publishers.push(publisher);
        }
        let mut consumers = Vec::new();
        for c in 0..n_consumers {
            let id = ConsumerId(c as u64);
            let n_s = SecretNumber::fresh(rng.as_mut());
            manager.register_consumer(id, n_s, Profile::active());
            consumers.push(Consumer::new(id, n_s));
        }
        World {
            consumers,
            publishers,
            manager,
            directory,
            transcript: Transcript::new(),
            now: 0,
            stolen_deadline: 5_000_000_000,
            next_rid: 1,
            rng,
        }
    }

    pub fn object_of(&self, publisher: usize, index: usize) -> ObjectId {
        ObjectId::new(format!("obj{publisher}x{index}.dat"), 1)
    }

    fn rid(&mut self) -> u64 {
        self.next_rid += 1;
        self.next_rid
    }

    fn tick(&mut self) {
        self.now += 1_000_000; // 1 ms per message
    }

    /// Key agreement check: consumer-side regenerated segment keys equal the
    /// publisher's, for every segment.
    pub fn keys_agree(&self, consumer: usize, publisher: usize, object: &ObjectId) -> bool {
        let (Some(cc), Some(po)) = (
            self.consumers[consumer].chain_for(object),
            self.publishers[publisher].object(object),
        ) else {
            return false;
        };
        cc.segment_keys == po.chain.segment_keys && cc.generators == po.chain.generators
    }

    fn mutate(
        &mut self,
        bytes: Vec<u8>,
        step: usize,
        mutation: Mutation,
        source: Option<&RecordedRun>,
        own: &RecordedRun,
    ) -> Vec<u8> {
        if !mutation.targets(step) {
            return bytes;
        }
        match mutation {
            Mutation::FlipByte { index, .. } => {
                let mut b = bytes;
                if !b.is_empty() {
                    let i = index % b.len();
                    b[i] ^= 0x40;
                }
                b
            }
            Mutation::Truncate { .. } => {
                let mut b = bytes;
                b.truncate(b.len() / 2);
                b
            }
            Mutation::Replay { step } => source
                .and_then(|r| r.steps.get(step).cloned())
                .unwrap_or(bytes),
            Mutation::Swap { with, .. } => {
                if let Some(b) = own.steps.get(with) {
                    b.clone()
                } else if let Some(b) = source.and_then(|r| r.steps.get(with)) {
                    b.clone()
                } else {
                    bytes
                }
            }
            _ => bytes,
        }
    }

    /// Drives one SubP run, applying `mutation` (with `source` as the replay
    /// donor run where needed).
    pub fn run_subp(
        &mut self,
        c: usize,
        p: usize,
        object: &ObjectId,
        mutation: Mutation,
        source: Option<&RecordedRun>,
    ) -> (RunResult, RecordedRun) {
        let flow = FlowKind::SubP;
        let mut result = RunResult::fresh(flow);
        let mut record = RecordedRun::default();
        let crid = self.rid();
        let prid = self.rid();
        let consumer_name = self.consumers[c].id.to_string();
        let publisher_name = self.directory[p].id.to_string();

        macro_rules! reject {
            ($step:expr, $bytes:expr, $recv:expr, $err:expr) => {{
                self.transcript.record(
                    prid,
                    flow,
                    $step,
                    "adversary-channel",
                    $recv,
                    &$bytes,
                    Verdict::Rejected($err.to_string()),
                );
                result.rejected_at = Some($step);
                return (result, record);
            }};
        }

        // Step 0: M1 consumer → publisher.
        self.tick();
        let dir = self.directory[p].clone();
        let (name, m1) = match self.consumers[c].start_subp(crid, &dir, object, self.rng.as_mut())
        {
            Ok(v) => v,
            Err(e) => reject!("M1", Vec::new(), publisher_name, e),
        };
        let name_enc = name.encode();
        let mut name_map: HashMap<Vec<u8>, u64> = HashMap::new();
        name_map.insert(name_enc.clone(), crid);
        let bytes = envelope(&name_enc, &ProtocolMsg::SubpM1(m1).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 0, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let (nb, msg) = match open_envelope(&bytes) {
            Ok(v) => v,
            Err(e) => reject!("M1", bytes, &publisher_name, e),
        };
        let ProtocolMsg::SubpM1(m1) = msg else {
            reject!("M1", bytes, &publisher_name, ProtocolError::BadState)
        };
        let m2 = match self.publishers[p].handle_m1(prid, &nb, &m1, self.rng.as_mut()) {
            Ok(v) => v,
            Err(e) => reject!("M1", bytes, &publisher_name, e),
        };
        self.transcript
            .record(prid, flow, "M1", &consumer_name, &publisher_name, &bytes, Verdict::Accepted);

        // Step 1: M2 publisher → manager.
        self.tick();
        let bytes = envelope(&[], &ProtocolMsg::SubpM2(m2).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 1, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let m3 = match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::SubpM2(m2))) => {
                match self.manager.handle_m2(&m2, self.now, self.rng.as_mut()) {
                    Ok(v) => v,
                    Err(e) => reject!("M2", bytes, "manager", e),
                }
            }
            Ok(_) => reject!("M2", bytes, "manager", ProtocolError::BadState),
            Err(e) => reject!("M2", bytes, "manager", e),
        };
        self.transcript
            .record(prid, flow, "M2", &publisher_name, "manager", &bytes, Verdict::Accepted);

        // Step 2: M3 manager → publisher.
        self.tick();
        let bytes = envelope(&[], &ProtocolMsg::SubpM3(m3).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 2, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let out = match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::SubpM3(m3))) => {
                match self.publishers[p].handle_m3(&m3, self.now, self.stolen_deadline, self.rng.as_mut()) {
                    Ok(v) => v,
                    Err(e) => reject!("M3", bytes, &publisher_name, e),
                }
            }
            Ok(_) => reject!("M3", bytes, &publisher_name, ProtocolError::BadState),
            Err(e) => reject!("M3", bytes, &publisher_name, e),
        };
        self.transcript
            .record(prid, flow, "M3", "manager", &publisher_name, &bytes, Verdict::Accepted);

        // Step 3: M4 publisher → consumer (data reply keyed by name).
        self.tick();
        let bytes = envelope(&out.reply_name, &ProtocolMsg::SubpM4(out.m4).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 3, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let (m6, report) = match open_envelope(&bytes) {
            Ok((nb, ProtocolMsg::SubpM4(m4))) => {
                let Some(&crid) = name_map.get(&nb) else {
                    reject!("M4", bytes, &consumer_name, ProtocolError::BadState)
                };
                match self.consumers[c].handle_m4(crid, &m4, self.rng.as_mut()) {
                    Ok(v) => v,
                    Err(e) => reject!("M4", bytes, &consumer_name, e),
                }
            }
            Ok(_) => reject!("M4", bytes, &consumer_name, ProtocolError::BadState),
            Err(e) => reject!("M4", bytes, &consumer_name, e),
        };
        self.transcript
            .record(prid, flow, "M4", &publisher_name, &consumer_name, &bytes, Verdict::Accepted);
        result.report = Some(report);

        // Step 4: M5 publisher → manager.
        self.tick();
        let bytes = envelope(&[], &ProtocolMsg::SubpM5(out.m5).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 4, mutation, source, &record);
        result.delivered.push(bytes.clone());
        match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::SubpM5(m5))) => match self.manager.handle_m5(&m5) {
                Ok(()) => result.manager_confirmed = true,
                Err(e) => reject!("M5", bytes, "manager", e),
            },
            Ok(_) => reject!("M5", bytes, "manager", ProtocolError::BadState),
            Err(e) => reject!("M5", bytes, "manager", e),
        }
        self.transcript
            .record(prid, flow, "M5", &publisher_name, "manager", &bytes, Verdict::Accepted);

        // Step 5: M6 consumer → publisher (or withheld).
        self.tick();
        if matches!(mutation, Mutation::DropFinal) {
            self.now += self.stolen_deadline + 1;
            if let Some(notice) = self.publishers[p].deadline_fired(prid) {
                self.manager.handle_stolen(&notice);
                result.stolen_marked = true;
                self.transcript.record(
                    prid,
                    flow,
                    "M6",
                    &consumer_name,
                    &publisher_name,
                    &[],
                    Verdict::Rejected("deadline expired, ticket marked stolen".into()),
                );
            }
            return (result, record);
        }
        let bytes = envelope(&[], &ProtocolMsg::SubpM6(m6).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 5, mutation, source, &record);
        result.delivered.push(bytes.clone());
        match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::SubpM6(m6))) => match self.publishers[p].handle_m6(&m6) {
                Ok(_) => result.publisher_confirmed = true,
                Err(e) => reject!("M6", bytes, &publisher_name, e),
            },
            Ok(_) => reject!("M6", bytes, &publisher_name, ProtocolError::BadState),
            Err(e) => reject!("M6", bytes, &publisher_name, e),
        }
        self.transcript
            .record(prid, flow, "M6", &consumer_name, &publisher_name, &bytes, Verdict::Accepted);

        result.completed = result.publisher_confirmed && result.manager_confirmed;
        (result, record)
    }

    /// Drives one APSub run (requires a prior SubP with the same publisher).
    pub fn run_apsub(
        &mut self,
        c: usize,
        p: usize,
        object: &ObjectId,
        mutation: Mutation,
        source: Option<&RecordedRun>,
    ) -> (RunResult, RecordedRun) {
        let flow = FlowKind::APSub;
        let mut result = RunResult::fresh(flow);
        let mut record = RecordedRun::default();
        let crid = self.rid();
        let prid = self.rid();
        let consumer_name = self.consumers[c].id.to_string();
        let publisher_name = self.directory[p].id.to_string();

        macro_rules! reject {
            ($step:expr, $bytes:expr, $recv:expr, $err:expr) => {{
                self.transcript.record(
                    prid,
                    flow,
                    $step,
                    "adversary-channel",
                    $recv,
                    &$bytes,
                    Verdict::Rejected($err.to_string()),
                );
                result.rejected_at = Some($step);
                return (result, record);
            }};
        }

        // Step 0: A1.
        self.tick();
        let dir = self.directory[p].clone();
        let (name, req) = match self.consumers[c].start_apsub(crid, &dir, object, self.rng.as_mut())
        {
            Ok(v) => v,
            Err(e) => reject!("A1", Vec::new(), publisher_name, e),
        };
        let name_enc = name.encode();
        let bytes = envelope(&name_enc, &ProtocolMsg::AccessReq(req).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 0, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let (reply_name, (a2, _deadline)) = match open_envelope(&bytes) {
            Ok((nb, ProtocolMsg::AccessReq(req))) => {
                match self.publishers[p].handle_a1(
                    prid,
                    &req,
                    self.now,
                    self.stolen_deadline,
                    self.rng.as_mut(),
                ) {
                    Ok(v) => (nb, v),
                    Err(e) => reject!("A1", bytes, &publisher_name, e),
                }
            }
            Ok(_) => reject!("A1", bytes, &publisher_name, ProtocolError::BadState),
            Err(e) => reject!("A1", bytes, &publisher_name, e),
        };
        self.transcript
            .record(prid, flow, "A1", &consumer_name, &publisher_name, &bytes, Verdict::Accepted);

        // Step 1: A2 publisher → consumer, named after the interest as the
        // publisher saw it.
        self.tick();
        let bytes = envelope(&reply_name, &ProtocolMsg::ApsubA2(a2).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 1, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let (a3, report) = match open_envelope(&bytes) {
            Ok((nb, ProtocolMsg::ApsubA2(a2))) => {
                if nb != name_enc {
                    reject!("A2", bytes, &consumer_name, ProtocolError::BadState)
                }
                match self.consumers[c].handle_a2(crid, &a2, self.rng.as_mut()) {
                    Ok(v) => v,
                    Err(e) => reject!("A2", bytes, &consumer_name, e),
                }
            }
            Ok(_) => reject!("A2", bytes, &consumer_name, ProtocolError::BadState),
            Err(e) => reject!("A2", bytes, &consumer_name, e),
        };
        self.transcript
            .record(prid, flow, "A2", &publisher_name, &consumer_name, &bytes, Verdict::Accepted);
        result.report = Some(report);

        // Step 2: A3 consumer → publisher (or withheld).
        self.tick();
        if matches!(mutation, Mutation::DropFinal) {
            self.now += self.stolen_deadline + 1;
            if let Some(notice) = self.publishers[p].deadline_fired(prid) {
                self.manager.handle_stolen(&notice);
                result.stolen_marked = true;
            }
            return (result, record);
        }
        let bytes = envelope(&[], &ProtocolMsg::ApsubA3(a3).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 2, mutation, source, &record);
        result.delivered.push(bytes.clone());
        match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::ApsubA3(a3))) => match self.publishers[p].handle_a3(&a3) {
                Ok(()) => result.publisher_confirmed = true,
                Err(e) => reject!("A3", bytes, &publisher_name, e),
            },
            Ok(_) => reject!("A3", bytes, &publisher_name, ProtocolError::BadState),
            Err(e) => reject!("A3", bytes, &publisher_name, e),
        }
        self.transcript
            .record(prid, flow, "A3", &consumer_name, &publisher_name, &bytes, Verdict::Accepted);

        result.manager_confirmed = true; // no manager involvement in APSub
        result.completed = result.publisher_confirmed;
        (result, record)
    }

    /// Drives one APSub3 run: ticket from `home`, content at `third`.
    pub fn run_apsub3(
        &mut self,
        c: usize,
        third: usize,
        home: usize,
        object: &ObjectId,
        mutation: Mutation,
        source: Option<&RecordedRun>,
    ) -> (RunResult, RecordedRun) {
        let flow = FlowKind::APSub3;
        let mut result = RunResult::fresh(flow);
        let mut record = RecordedRun::default();
        let crid = self.rid();
        let prid = self.rid();
        let consumer_name = self.consumers[c].id.to_string();
        let publisher_name = self.directory[third].id.to_string();

        macro_rules! reject {
            ($step:expr, $bytes:expr, $recv:expr, $err:expr) => {{
                self.transcript.record(
                    prid,
                    flow,
                    $step,
                    "adversary-channel",
                    $recv,
                    &$bytes,
                    Verdict::Rejected($err.to_string()),
                );
                result.rejected_at = Some($step);
                return (result, record);
            }};
        }

        // Step 0: T1.
        self.tick();
        let dir = self.directory[third].clone();
        let home_id = self.directory[home].id;
        let (name, req) =
            match self.consumers[c].start_apsub3(crid, &dir, home_id, object, self.rng.as_mut()) {
                Ok(v) => v,
                Err(e) => reject!("T1", Vec::new(), publisher_name, e),
            };
        let name_enc = name.encode();
        let bytes = envelope(&name_enc, &ProtocolMsg::AccessReq(req).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 0, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let t2 = match open_envelope(&bytes) {
            Ok((nb, ProtocolMsg::AccessReq(req))) => {
                match self.publishers[third].handle_t1(prid, &nb, &req, self.rng.as_mut()) {
                    Ok(v) => v,
                    Err(e) => reject!("T1", bytes, &publisher_name, e),
                }
            }
            Ok(_) => reject!("T1", bytes, &publisher_name, ProtocolError::BadState),
            Err(e) => reject!("T1", bytes, &publisher_name, e),
        };
        self.transcript
            .record(prid, flow, "T1", &consumer_name, &publisher_name, &bytes, Verdict::Accepted);

        // Step 1: T2 publisher → manager.
        self.tick();
        let bytes = envelope(&[], &ProtocolMsg::Apsub3T2(t2).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 1, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let t3 = match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::Apsub3T2(t2))) => {
                match self.manager.handle_t2(&t2, self.rng.as_mut()) {
                    Ok(v) => v,
                    Err(e) => reject!("T2", bytes, "manager", e),
                }
            }
            Ok(_) => reject!("T2", bytes, "manager", ProtocolError::BadState),
            Err(e) => reject!("T2", bytes, "manager", e),
        };
        self.transcript
            .record(prid, flow, "T2", &publisher_name, "manager", &bytes, Verdict::Accepted);

        // Step 2: T3 manager → publisher.
        self.tick();
        let bytes = envelope(&[], &ProtocolMsg::Apsub3T3(t3).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 2, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let out = match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::Apsub3T3(t3))) => {
                match self.publishers[third].handle_t3(
                    &t3,
                    self.now,
                    self.stolen_deadline,
                    self.rng.as_mut(),
                ) {
                    Ok(v) => v,
                    Err(e) => reject!("T3", bytes, &publisher_name, e),
                }
            }
            Ok(_) => reject!("T3", bytes, &publisher_name, ProtocolError::BadState),
            Err(e) => reject!("T3", bytes, &publisher_name, e),
        };
        self.transcript
            .record(prid, flow, "T3", "manager", &publisher_name, &bytes, Verdict::Accepted);

        // Step 3: T4 publisher → consumer.
        self.tick();
        let bytes = envelope(&out.reply_name, &ProtocolMsg::Apsub3T4(out.t4).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 3, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let (t5, report) = match open_envelope(&bytes) {
            Ok((nb, ProtocolMsg::Apsub3T4(t4))) => {
                if nb != name_enc {
                    reject!("T4", bytes, &consumer_name, ProtocolError::BadState)
                }
                match self.consumers[c].handle_t4(crid, &t4, self.rng.as_mut()) {
                    Ok(v) => v,
                    Err(e) => reject!("T4", bytes, &consumer_name, e),
                }
            }
            Ok(_) => reject!("T4", bytes, &consumer_name, ProtocolError::BadState),
            Err(e) => reject!("T4", bytes, &consumer_name, e),
        };
        self.transcript
            .record(prid, flow, "T4", &publisher_name, &consumer_name, &bytes, Verdict::Accepted);
        result.report = Some(report);

        // Step 4: T5 consumer → publisher (or withheld).
        self.tick();
        if matches!(mutation, Mutation::DropFinal) {
            self.now += self.stolen_deadline + 1;
            if let Some(notice) = self.publishers[third].deadline_fired(prid) {
                if let Some(issuer) = self.manager.handle_stolen(&notice) {
                    // Propagate to the issuing publisher so the ticket is
                    // refused everywhere.
                    if let Some(pub_idx) =
                        self.directory.iter().position(|d| d.id == issuer)
                    {
                        self.publishers[pub_idx].mark_stolen(notice.ticket_digest);
                    }
                }
                result.stolen_marked = true;
            }
            return (result, record);
        }
        let bytes = envelope(&[], &ProtocolMsg::Apsub3T5(t5).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 4, mutation, source, &record);
        result.delivered.push(bytes.clone());
        let t6 = match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::Apsub3T5(t5))) => {
                match self.publishers[third].handle_t5(&t5, self.rng.as_mut()) {
                    Ok((confirm, _consumer)) => {
                        result.publisher_confirmed = true;
                        confirm
                    }
                    Err(e) => reject!("T5", bytes, &publisher_name, e),
                }
            }
            Ok(_) => reject!("T5", bytes, &publisher_name, ProtocolError::BadState),
            Err(e) => reject!("T5", bytes, &publisher_name, e),
        };
        self.transcript
            .record(prid, flow, "T5", &consumer_name, &publisher_name, &bytes, Verdict::Accepted);

        // Step 5: T6 publisher → manager.
        self.tick();
        let bytes = envelope(&[], &ProtocolMsg::Apsub3T6(t6).to_bytes());
        record.steps.push(bytes.clone());
        let bytes = self.mutate(bytes, 5, mutation, source, &record);
        result.delivered.push(bytes.clone());
        match open_envelope(&bytes) {
            Ok((_, ProtocolMsg::Apsub3T6(t6))) => match self.manager.handle_t6(&t6) {
                Ok(()) => result.manager_confirmed = true,
                Err(e) => reject!("T6", bytes, "manager", e),
            },
            Ok(_) => reject!("T6", bytes, "manager", ProtocolError::BadState),
            Err(e) => reject!("T6", bytes, "manager", e),
        }
        self.transcript
            .record(prid, flow, "T6", &publisher_name, "manager", &bytes, Verdict::Accepted);

        result.completed = result.publisher_confirmed && result.manager_confirmed;
        (result, record)
    }
}
