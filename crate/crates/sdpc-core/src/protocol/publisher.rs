//! Publisher role: publishes objects under per-segment key chains, relays
//! subscription runs to the manager, serves APSub directly from tickets it
//! issued, and arms the stolen-ticket deadline on every run awaiting a final
//! challenge response.

use std::collections::{HashMap, HashSet};

use rand::RngCore;

use crate::crypto::{
    build_chain, commitment_generator, open, sym_decrypt, sym_encrypt, Digest256, KeyChain, Nonce,
    PublisherKeyPair, SymmetricKey,
};
use crate::naming::{segment_name, NameKind, ObjectId, ObjectPath, Prefix, SdpcName};
use crate::wire::Writer;

use super::messages::*;
use super::{
    ticket_digest, ConsumerId, Grant, ProtocolError, PublisherId, RunId, TicketContents,
};

/// Everything `handle_m3` produces: the data reply toward the consumer, the
/// manager confirmation, the stolen-ticket deadline, and the interest name
/// the data reply must carry.
#[derive(Debug)]
pub struct SubpM3Out {
    pub m4: SubpM4,
    pub m5: RunConfirm,
    pub deadline: u64,
    pub reply_name: Vec<u8>,
}

#[derive(Debug)]
pub struct T3Out {
    pub t4: Apsub3T4,
    pub deadline: u64,
    pub reply_name: Vec<u8>,
}

/// A published object: chain, grant, shared segment names, and the encrypted
/// segment payloads.
#[derive(Clone, Debug)]
pub struct PublishedObject {
    pub object: ObjectId,
    pub chain: KeyChain,
    pub grant: Grant,
    /// Encoded shared-segment names, index = segment.
    pub segment_names: Vec<Vec<u8>>,
    /// Encrypted payload markers, index = segment.
    pub segments: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, Default)]
pub struct PublisherCounters {
    pub seals: u64,
    pub opens: u64,
    pub m2_forwarded: u64,
    pub grants_issued: u64,
    pub runs_completed: u64,
    pub tickets_marked_stolen: u64,
    pub silent_rejects: u64,
}

#[derive(Debug)]
enum RunState {
    AwaitM3 {
        n2: Nonce,
        reply_name: Vec<u8>,
    },
    AwaitM6 {
        n1: Nonce,
        k_s: SymmetricKey,
        consumer: ConsumerId,
        ticket_digest: Digest256,
    },
    AwaitA3 {
        n1: Nonce,
        k_s: SymmetricKey,
        ticket_digest: Digest256,
    },
    AwaitT3 {
        n2: Nonce,
        ticket_digest: Digest256,
        reply_name: Vec<u8>,
    },
    AwaitT5 {
        n1: Nonce,
        temp_kts: SymmetricKey,
        consumer: ConsumerId,
        ticket_digest: Digest256,
    },
}

#[derive(Debug)]
struct PubRun {
    state: RunState,
}

#[derive(Debug)]
pub struct Publisher {
    pub id: PublisherId,
    pub prefix: Prefix,
    keypair: PublisherKeyPair,
    objects: HashMap<ObjectId, PublishedObject>,
    /// Encoded shared-segment name → (object, segment).
    name_index: HashMap<Vec<u8>, (ObjectId, u32)>,
    runs: HashMap<RunId, PubRun>,
    /// Post-SubP consumer registry ("optionally register N_i": on by
    /// default, APSub leans on it).
    registered: HashMap<ConsumerId, SymmetricKey>,
    /// Opened-ticket cache; an opened ticket is deterministic in its bytes.
    ticket_cache: HashMap<Digest256, TicketContents>,
    stolen: HashSet<Digest256>,
    pub counters: PublisherCounters,
}

impl Publisher {
    pub fn new(id: PublisherId, prefix: Prefix, keypair: PublisherKeyPair) -> Self {
        Publisher {
            id,
            prefix,
            keypair,
            objects: HashMap::new(),
            name_index: HashMap::new(),
            runs: HashMap::new(),
            registered: HashMap::new(),
            ticket_cache: HashMap::new(),
            stolen: HashSet::new(),
            counters: PublisherCounters::default(),
        }
    }

    pub fn public_key(&self) -> &crate::crypto::PublicKey {
        self.keypair.public()
    }

    pub fn private_key(&self) -> &crate::crypto::PrivateKey {
        self.keypair.private()
    }

    pub fn is_registered(&self, consumer: ConsumerId) -> bool {
        self.registered.contains_key(&consumer)
    }

    pub fn session_key_of(&self, consumer: ConsumerId) -> Option<&SymmetricKey> {
        self.registered.get(&consumer)
    }

    pub fn is_stolen(&self, td: &Digest256) -> bool {
        self.stolen.contains(td)
    }

    pub fn object(&self, id: &ObjectId) -> Option<&PublishedObject> {
        self.objects.get(id)
    }

    pub fn objects(&self) -> impl Iterator<Item = &PublishedObject> {
        self.objects.values()
    }

    /// Looks a shared-segment name up in the content index.
    pub fn lookup_segment(&self, encoded_name: &[u8]) -> Option<(&PublishedObject, u32)> {
        let (oid, seg) = self.name_index.get(encoded_name)?;
        Some((&self.objects[oid], *seg))
    }

    /// Cuts an object into `segments` equal pieces, derives the chain, and
    /// encrypts each segment under its own key. The payload marker carries
    /// the plaintext path so payload-scanning attacks have something real to
    /// look for.
    pub fn publish_object(
        &mut self,
        object: ObjectId,
        publish_time: u64,
        segments: u32,
        rng: &mut dyn RngCore,
    ) -> Result<&PublishedObject, ProtocolError> {
        let zeta0 = commitment_generator(publish_time, &object.canonical())?;
        let chain = build_chain(
            zeta0,
            segments as usize,
            self.keypair.public(),
            &object.canonical(),
            publish_time,
        )?;
        let grant = Grant {
            object: object.clone(),
            publish_time,
            zeta0,
            key_msg: chain.key_msg,
            segments,
        };
        let mut segment_names = Vec::with_capacity(segments as usize);
        let mut payloads = Vec::with_capacity(segments as usize);
        for l in 0..segments {
            let name =
                segment_name(&self.prefix, &chain.key_msg, &chain, &object, l as usize)?;
            let enc = name.encode();
            self.name_index.insert(enc.clone(), (object.clone(), l));
            segment_names.push(enc);
            let marker = object.segment_path(l).to_string();
            payloads.push(sym_encrypt(
                chain.segment_key(l as usize)?,
                marker.as_bytes(),
                rng,
            ));
        }
        let published = PublishedObject {
            object: object.clone(),
            chain,
            grant,
            segment_names,
            segments: payloads,
        };
        Ok(self.objects.entry(object).or_insert(published))
    }

    /// SubP step 2: forward the opaque subscription interest to the manager
    /// together with our identity and a fresh challenge.
    pub fn handle_m1(
        &mut self,
        rid: RunId,
        interest_name: &[u8],
        m1: &SubpM1,
        rng: &mut dyn RngCore,
    ) -> Result<SubpM2, ProtocolError> {
        let name = SdpcName::parse(interest_name)?;
        if name.kind() != NameKind::FirstInterest {
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::NotFirstInterest);
        }
        let n2 = Nonce::fresh(rng);
        self.runs.insert(
            rid,
            PubRun {
                state: RunState::AwaitM3 {
                    n2,
                    reply_name: interest_name.to_vec(),
                },
            },
        );
        self.counters.m2_forwarded += 1;
        Ok(SubpM2 {
            rid,
            interest_name: interest_name.to_vec(),
            enc_n0: m1.enc_n0.clone(),
            publisher: self.id,
            n2,
        })
    }

    /// SubP steps 3–5 (publisher side): verify the manager's challenge
    /// response, open the ticket, release the grant toward the consumer, and
    /// confirm to the manager. The returned deadline is when the pending
    /// ticket must be declared stolen absent an M6.
    pub fn handle_m3(
        &mut self,
        m3: &SubpM3,
        now: u64,
        stolen_deadline: u64,
        rng: &mut dyn RngCore,
    ) -> Result<SubpM3Out, ProtocolError> {
        let run = self.runs.get(&m3.rid).ok_or(ProtocolError::BadState)?;
        let RunState::AwaitM3 { n2, reply_name } = &run.state else {
            return Err(ProtocolError::BadState);
        };
        let (n2, reply_name) = (*n2, reply_name.clone());
        self.counters.opens += 1;
        let part = decode_subp_pub_part(&open(self.keypair.private(), &m3.publisher_part)?)?;
        if part.n2_resp != n2.response() {
            self.runs.remove(&m3.rid);
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::NonceMismatch);
        }
        self.counters.opens += 1;
        let ticket = decode_ticket_body(&open(self.keypair.private(), &m3.ticket)?)?;
        if ticket.consumer != part.consumer {
            self.runs.remove(&m3.rid);
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::IdentityMismatch);
        }
        let path = ObjectPath::parse(&part.object_path)?;
        let grant = self
            .objects
            .get(&path.object_id())
            .map(|o| o.grant.clone())
            .ok_or(ProtocolError::UnknownObject)?;
        let td = ticket_digest(&m3.ticket);
        let enc_grant = sym_encrypt(&ticket.k_s, &encode_grant(&grant), rng);
        let m4 = SubpM4 {
            rid: m3.rid,
            u0: m3.u0.clone(),
            enc_grant,
        };
        let m5 = RunConfirm {
            ticket_digest: td,
            enc_response: sym_encrypt(&ticket.k_s, &encode_nonce(&part.n1.response()), rng),
        };
        self.ticket_cache.insert(td, ticket.clone());
        self.counters.grants_issued += 1;
        let deadline = now + stolen_deadline;
        self.runs.insert(
            m3.rid,
            PubRun {
                state: RunState::AwaitM6 {
                    n1: part.n1,
                    k_s: ticket.k_s,
                    consumer: ticket.consumer,
                    ticket_digest: td,
                },
            },
        );
        Ok(SubpM3Out {
            m4,
            m5,
            deadline,
            reply_name,
        })
    }

    /// SubP step 5 (consumer confirmation): verify `n₁+1` and register the
    /// consumer.
    pub fn handle_m6(&mut self, m6: &SubpM6) -> Result<ConsumerId, ProtocolError> {
        let run = self.runs.get(&m6.rid).ok_or(ProtocolError::BadState)?;
        let RunState::AwaitM6 { n1, k_s, consumer, .. } = &run.state else {
            return Err(ProtocolError::BadState);
        };
        let (n1, k_s, consumer) = (*n1, *k_s, *consumer);
        let resp = decode_nonce(&sym_decrypt(&k_s, &m6.enc_response)?)?;
        if resp != n1.response() {
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::NonceMismatch);
        }
        self.runs.remove(&m6.rid);
        self.registered.insert(consumer, k_s);
        self.counters.runs_completed += 1;
        Ok(consumer)
    }

    /// APSub step 1-2: open the ticket (we issued it), check the claimed
    /// identity against the ticket, and release the grant under the session
    /// key together with a fresh challenge.
    pub fn handle_a1(
        &mut self,
        rid: RunId,
        req: &AccessReq,
        now: u64,
        stolen_deadline: u64,
        rng: &mut dyn RngCore,
    ) -> Result<(ApsubA2, u64), ProtocolError> {
        let td = ticket_digest(&req.ticket);
        if self.stolen.contains(&td) {
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::TicketStolen);
        }
        let ticket = match self.ticket_cache.get(&td) {
            Some(t) => t.clone(),
            None => {
                self.counters.opens += 1;
                let t = decode_ticket_body(&open(self.keypair.private(), &req.ticket)?)?;
                self.ticket_cache.insert(td, t.clone());
                t
            }
        };
        let body = decode_access_body(&sym_decrypt(&ticket.k_s, &req.enc)?)?;
        if body.consumer != ticket.consumer {
            // "will ignore the request"
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::IdentityMismatch);
        }
        let path = ObjectPath::parse(&body.object_path)?;
        let grant = self
            .objects
            .get(&path.object_id())
            .map(|o| o.grant.clone())
            .ok_or(ProtocolError::UnknownObject)?;
        let n1 = Nonce::fresh(rng);
        let enc = sym_encrypt(&ticket.k_s, &encode_access_reply(body.n0.response(), n1, &grant), rng);
        self.counters.grants_issued += 1;
        self.runs.insert(
            rid,
            PubRun {
                state: RunState::AwaitA3 {
                    n1,
                    k_s: ticket.k_s,
                    ticket_digest: td,
                },
            },
        );
        Ok((ApsubA2 { rid, enc }, now + stolen_deadline))
    }

    pub fn handle_a3(&mut self, resp: &ChallengeResp) -> Result<(), ProtocolError> {
        let run = self.runs.get(&resp.rid).ok_or(ProtocolError::BadState)?;
        let RunState::AwaitA3 { n1, k_s, .. } = &run.state else {
            return Err(ProtocolError::BadState);
        };
        let (n1, k_s) = (*n1, *k_s);
        let got = decode_nonce(&sym_decrypt(&k_s, &resp.enc_response)?)?;
        if got != n1.response() {
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::NonceMismatch);
        }
        self.runs.remove(&resp.rid);
        self.counters.runs_completed += 1;
        Ok(())
    }

    /// APSub3 step 2: we cannot open a foreign ticket, so forward to the
    /// manager with our identity and challenge.
    pub fn handle_t1(
        &mut self,
        rid: RunId,
        interest_name: &[u8],
        req: &AccessReq,
        rng: &mut dyn RngCore,
    ) -> Result<Apsub3T2, ProtocolError> {
        let td = ticket_digest(&req.ticket);
        if self.stolen.contains(&td) {
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::TicketStolen);
        }
        let n2 = Nonce::fresh(rng);
        self.runs.insert(
            rid,
            PubRun {
                state: RunState::AwaitT3 {
                    n2,
                    ticket_digest: td,
                    reply_name: interest_name.to_vec(),
                },
            },
        );
        self.counters.m2_forwarded += 1;
        Ok(Apsub3T2 {
            rid,
            access: req.clone(),
            publisher: self.id,
            n2,
        })
    }

    /// APSub3 step 4: verify the manager's challenge response, adopt the
    /// temporary session key, and forward the sealed grant with our identity
    /// echo.
    pub fn handle_t3(
        &mut self,
        t3: &Apsub3T3,
        now: u64,
        stolen_deadline: u64,
        rng: &mut dyn RngCore,
    ) -> Result<T3Out, ProtocolError> {
        let run = self.runs.get(&t3.rid).ok_or(ProtocolError::BadState)?;
        let RunState::AwaitT3 { n2, ticket_digest: td, reply_name } = &run.state else {
            return Err(ProtocolError::BadState);
        };
        let (n2, td, reply_name) = (*n2, *td, reply_name.clone());
        self.counters.opens += 1;
        let part = decode_t3_pub_part(&open(self.keypair.private(), &t3.publisher_part)?)?;
        if part.n2_resp != n2.response() {
            self.runs.remove(&t3.rid);
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::NonceMismatch);
        }
        let path = ObjectPath::parse(&part.object_path)?;
        if !self.objects.contains_key(&path.object_id()) {
            self.runs.remove(&t3.rid);
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::UnknownObject);
        }
        let mut w = Writer::new();
        w.put_u32(self.id.0);
        let enc_publisher = sym_encrypt(&part.temp_kts, &w.finish(), rng);
        let t4 = Apsub3T4 {
            rid: t3.rid,
            u0: t3.u0.clone(),
            enc_publisher,
        };
        self.runs.insert(
            t3.rid,
            PubRun {
                state: RunState::AwaitT5 {
                    n1: part.n1,
                    temp_kts: part.temp_kts,
                    consumer: part.consumer,
                    ticket_digest: td,
                },
            },
        );
        Ok(T3Out {
            t4,
            deadline: now + stolen_deadline,
            reply_name,
        })
    }

    /// APSub3 steps 5–6: verify the consumer's challenge response and
    /// confirm the run to the manager.
    pub fn handle_t5(
        &mut self,
        resp: &ChallengeResp,
        rng: &mut dyn RngCore,
    ) -> Result<(RunConfirm, ConsumerId), ProtocolError> {
        let run = self.runs.get(&resp.rid).ok_or(ProtocolError::BadState)?;
        let RunState::AwaitT5 { n1, temp_kts, consumer, ticket_digest: td } = &run.state else {
            return Err(ProtocolError::BadState);
        };
        let (n1, temp_kts, consumer, td) = (*n1, *temp_kts, *consumer, *td);
        let got = decode_nonce(&sym_decrypt(&temp_kts, &resp.enc_response)?)?;
        if got != n1.response() {
            self.counters.silent_rejects += 1;
            return Err(ProtocolError::NonceMismatch);
        }
        self.runs.remove(&resp.rid);
        self.counters.runs_completed += 1;
        Ok((
            RunConfirm {
                ticket_digest: td,
                enc_response: sym_encrypt(&temp_kts, &encode_nonce(&n1.response()), rng),
            },
            consumer,
        ))
    }

    /// Fires a stolen-ticket deadline: if the run is still awaiting its final
    /// challenge response, the ticket is marked stolen and refused from then
    /// on. Returns the notice for the manager.
    pub fn deadline_fired(&mut self, rid: RunId) -> Option<StolenNotice> {
        let run = self.runs.get(&rid)?;
        let td = match &run.state {
            RunState::AwaitM6 { ticket_digest, .. }
            | RunState::AwaitA3 { ticket_digest, .. }
            | RunState::AwaitT5 { ticket_digest, .. } => *ticket_digest,
            _ => return None,
        };
        self.runs.remove(&rid);
        self.stolen.insert(td);
        self.counters.tickets_marked_stolen += 1;
        Some(StolenNotice { ticket_digest: td })
    }

    /// Manager-propagated stolen marking (e.g. a third party armed the
    /// deadline).
    pub fn mark_stolen(&mut self, td: Digest256) {
        self.stolen.insert(td);
    }
}
