//! Subscription manager role: holds the registration hash table keyed by
//! `Hash(n_S)`, authenticates subscription requests, and issues session keys
//! and publisher-sealed tickets. Unknown digests are rejected after a single
//! table lookup, which is the whole DDoS defense.

use std::collections::HashMap;

use rand::RngCore;

use crate::crypto::{
    seal, session_key, subscription_key, sym_decrypt, sym_encrypt, temporary_subscription_key,
    Digest256, Nonce, PublicKey, SecretNumber, SymmetricKey,
};
use crate::naming::{open_sealed_path, ObjectId, SdpcName};

use super::messages::*;
use super::{
    ticket_digest, ConsumerId, Grant, Profile, ProtocolError, PublisherId, TicketContents,
};

/// One registration database entry.
#[derive(Clone, Debug)]
pub struct RegEntry {
    pub consumer: ConsumerId,
    pub n_s: SecretNumber,
    pub profile: Profile,
}

#[derive(Clone, Debug)]
struct MgrSession {
    consumer: ConsumerId,
    k_s: SymmetricKey,
    profile: Profile,
    issuer: PublisherId,
    last_n1: Option<Nonce>,
    temp_kts: Option<SymmetricKey>,
    stolen: bool,
}

/// Work counters; the DDoS analysis reads these.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ManagerCounters {
    /// Registration-table lookups performed (subscription path).
    pub lookups: u64,
    /// Lookup work units: 1 per hash-table probe, or the scan length when the
    /// weakened linear registry is enabled.
    pub lookup_work: u64,
    /// Registration-path decryptions attempted / failed.
    pub decrypt_attempts: u64,
    pub decrypt_failures: u64,
    /// Ticket-session lookups and decryptions (third-party access path).
    pub session_lookups: u64,
    pub session_decrypts: u64,
    pub tickets_issued: u64,
    pub grants_released: u64,
    pub rejects: u64,
}

#[derive(Debug, Default)]
pub struct Manager {
    registration: HashMap<Digest256, RegEntry>,
    publishers: HashMap<PublisherId, PublicKey>,
    /// Ticket-digest keyed session records for tickets this manager issued.
    sessions: HashMap<Digest256, MgrSession>,
    /// Per-object grants deposited by publishers so third-party access can be
    /// served without involving the content owner.
    escrow: HashMap<(PublisherId, ObjectId), Grant>,
    pub counters: ManagerCounters,
    /// Weaken knob: replace the hash table by a linear scan (DDoS control).
    pub linear_scan: bool,
}

impl Manager {
    pub fn new() -> Self {
        Manager::default()
    }

    pub fn register_consumer(&mut self, consumer: ConsumerId, n_s: SecretNumber, profile: Profile) {
        self.registration
            .insert(n_s.digest(), RegEntry { consumer, n_s, profile });
    }

    pub fn register_publisher(&mut self, id: PublisherId, key: PublicKey) {
        self.publishers.insert(id, key);
    }

    pub fn escrow_grant(&mut self, publisher: PublisherId, grant: Grant) {
        self.escrow.insert((publisher, grant.object.clone()), grant);
    }

    pub fn registration_len(&self) -> usize {
        self.registration.len()
    }

    pub fn session_is_stolen(&self, td: &Digest256) -> bool {
        self.sessions.get(td).map(|s| s.stolen).unwrap_or(false)
    }

    fn lookup(&mut self, digest: &Digest256) -> Option<RegEntry> {
        self.counters.lookups += 1;
        if self.linear_scan {
            self.counters.lookup_work += self.registration.len() as u64;
            self.registration
                .iter()
                .find(|(d, _)| *d == digest)
                .map(|(_, e)| e.clone())
        } else {
            self.counters.lookup_work += 1;
            self.registration.get(digest).cloned()
        }
    }

    /// SubP step 3: authenticate the consumer behind a forwarded
    /// subscription interest and issue `K_S`, `n₁`, and the ticket.
    pub fn handle_m2(
        &mut self,
        m2: &SubpM2,
        now: u64,
        rng: &mut dyn RngCore,
    ) -> Result<SubpM3, ProtocolError> {
        let name = SdpcName::parse(&m2.interest_name)?;
        let digest = *name.digest().ok_or(ProtocolError::NotFirstInterest)?;
        let Some(entry) = self.lookup(&digest) else {
            self.counters.rejects += 1;
            return Err(ProtocolError::UnknownDigest);
        };
        if !entry.profile.is_active() {
            self.counters.rejects += 1;
            return Err(ProtocolError::UnknownDigest);
        }
        let publisher_key = self
            .publishers
            .get(&m2.publisher)
            .cloned()
            .ok_or(ProtocolError::UnknownPublisher)?;
        let k_ts = subscription_key(&publisher_key, &entry.n_s);
        self.counters.decrypt_attempts += 1;
        let n0 = match sym_decrypt(&k_ts, &m2.enc_n0) {
            Ok(b) => decode_nonce(&b)?,
            Err(e) => {
                self.counters.decrypt_failures += 1;
                self.counters.rejects += 1;
                return Err(e.into());
            }
        };
        let path = open_sealed_path(&name, &k_ts)?;
        let k_s = session_key(now, &entry.n_s);
        let n1 = Nonce::fresh(rng);
        let ticket_body = encode_ticket_body(&TicketContents {
            consumer: entry.consumer,
            k_s,
            profile: entry.profile.clone(),
        });
        let ticket = seal(&publisher_key, &ticket_body, rng);
        self.counters.tickets_issued += 1;
        let u0 = sym_encrypt(&k_ts, &encode_u0(n0.response(), n1, &ticket, &k_s), rng);
        let publisher_part = seal(
            &publisher_key,
            &encode_subp_pub_part(m2.n2.response(), n1, entry.consumer, &path.to_string()),
            rng,
        );
        self.sessions.insert(
            ticket_digest(&ticket),
            MgrSession {
                consumer: entry.consumer,
                k_s,
                profile: entry.profile,
                issuer: m2.publisher,
                last_n1: Some(n1),
                temp_kts: None,
                stolen: false,
            },
        );
        Ok(SubpM3 {
            rid: m2.rid,
            u0,
            ticket,
            publisher_part,
        })
    }

    /// SubP step 5: publisher's run confirmation.
    pub fn handle_m5(&mut self, m5: &RunConfirm) -> Result<(), ProtocolError> {
        let session = self
            .sessions
            .get(&m5.ticket_digest)
            .ok_or(ProtocolError::UnknownTicket)?;
        let expected = session.last_n1.ok_or(ProtocolError::BadState)?;
        let got = decode_nonce(&sym_decrypt(&session.k_s, &m5.enc_response)?)?;
        if got != expected.response() {
            self.counters.rejects += 1;
            return Err(ProtocolError::NonceMismatch);
        }
        // Each challenge response verifies at most once.
        self.sessions.get_mut(&m5.ticket_digest).unwrap().last_n1 = None;
        Ok(())
    }

    /// APSub3 step 3: validate a ticket we issued, derive the temporary key
    /// `K_TS = H(K_p^j ⊕ n₀)`, and release the escrowed grant sealed under
    /// the consumer's session key so the third party never sees it.
    pub fn handle_t2(
        &mut self,
        t2: &Apsub3T2,
        rng: &mut dyn RngCore,
    ) -> Result<Apsub3T3, ProtocolError> {
        let td = ticket_digest(&t2.access.ticket);
        self.counters.session_lookups += 1;
        let Some(session) = self.sessions.get(&td).cloned() else {
            self.counters.rejects += 1;
            return Err(ProtocolError::UnknownTicket);
        };
        if session.stolen {
            self.counters.rejects += 1;
            return Err(ProtocolError::TicketStolen);
        }
        if !session.profile.is_active() {
            self.counters.rejects += 1;
            return Err(ProtocolError::UnknownTicket);
        }
        self.counters.session_decrypts += 1;
        let body = match sym_decrypt(&session.k_s, &t2.access.enc) {
            Ok(b) => decode_access_body(&b)?,
            Err(e) => {
                self.counters.rejects += 1;
                return Err(e.into());
            }
        };
        if body.consumer != session.consumer {
            self.counters.rejects += 1;
            return Err(ProtocolError::IdentityMismatch);
        }
        let publisher_key = self
            .publishers
            .get(&t2.publisher)
            .cloned()
            .ok_or(ProtocolError::UnknownPublisher)?;
        let path = crate::naming::ObjectPath::parse(&body.object_path)?;
        let grant = self
            .escrow
            .get(&(t2.publisher, path.object_id()))
            .cloned()
            .ok_or(ProtocolError::UnknownObject)?;
        let temp_kts = temporary_subscription_key(&publisher_key, &body.n0);
        let n1 = Nonce::fresh(rng);
        let u0 = sym_encrypt(
            &session.k_s,
            &encode_access_reply(body.n0.response(), n1, &grant),
            rng,
        );
        let publisher_part = seal(
            &publisher_key,
            &encode_t3_pub_part(t2.n2.response(), n1, &temp_kts, session.consumer, &body.object_path),
            rng,
        );
        self.counters.grants_released += 1;
        let s = self.sessions.get_mut(&td).unwrap();
        s.last_n1 = Some(n1);
        s.temp_kts = Some(temp_kts);
        Ok(Apsub3T3 {
            rid: t2.rid,
            u0,
            publisher_part,
        })
    }

    /// APSub3 step 6: third-party publisher's run confirmation, protected by
    /// the temporary key the manager itself derived.
    pub fn handle_t6(&mut self, resp: &RunConfirm) -> Result<(), ProtocolError> {
        let session = self
            .sessions
            .get(&resp.ticket_digest)
            .ok_or(ProtocolError::UnknownTicket)?;
        let temp_kts = session.temp_kts.ok_or(ProtocolError::BadState)?;
        let expected = session.last_n1.ok_or(ProtocolError::BadState)?;
        let got = decode_nonce(&sym_decrypt(&temp_kts, &resp.enc_response)?)?;
        if got != expected.response() {
            self.counters.rejects += 1;
            return Err(ProtocolError::NonceMismatch);
        }
        let s = self.sessions.get_mut(&resp.ticket_digest).unwrap();
        s.last_n1 = None;
        s.temp_kts = None;
        Ok(())
    }

    /// A publisher reported a ticket stolen; refuse it in all later runs.
    pub fn handle_stolen(&mut self, notice: &StolenNotice) -> Option<PublisherId> {
        if let Some(s) = self.sessions.get_mut(&notice.ticket_digest) {
            s.stolen = true;
            Some(s.issuer)
        } else {
            None
        }
    }
}
