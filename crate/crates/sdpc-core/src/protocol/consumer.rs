//! Consumer role: initiates SubP / APSub / APSub3 runs, verifies challenge
//! responses, and regenerates the per-segment key chain from a grant.

use std::collections::HashMap;

use rand::RngCore;

use crate::crypto::{
    build_chain, sym_decrypt, sym_encrypt, subscription_key, temporary_subscription_key,
    hash_parts, KeyChain, Nonce, SecretNumber, SymmetricKey,
};
use crate::naming::{first_interest_name, ObjectId, SdpcName};
use crate::wire::Reader;

use super::messages::*;
use super::{
    ConsumerId, FlowKind, Grant, ProtocolError, PublisherId, PublisherInfo, RunId,
};

#[derive(Clone, Debug)]
struct Session {
    ticket: Vec<u8>,
    k_s: SymmetricKey,
    issuer: PublisherId,
}

#[derive(Clone, Debug)]
struct ActiveRun {
    flow: FlowKind,
    target: PublisherId,
    target_key: crate::crypto::PublicKey,
    object: ObjectId,
    n0: Nonce,
    /// K_TS for SubP; the home session key protects APSub/APSub3 traffic.
    k_ts: Option<SymmetricKey>,
    /// Issuer of the session used for APSub/APSub3.
    via: Option<PublisherId>,
}

/// Observable result of a completed consumer run, used by trace assertions.
#[derive(Clone, Debug)]
pub struct ConsumerRunReport {
    pub flow: FlowKind,
    pub publisher: PublisherId,
    pub object: ObjectId,
    pub n0: Nonce,
    /// The fresh-challenge response `n₀+1` arrived and verified.
    pub n0_response_verified: bool,
    pub n1: Nonce,
    pub k_s: SymmetricKey,
}

#[derive(Debug)]
pub struct Consumer {
    pub id: ConsumerId,
    pub n_s: SecretNumber,
    sessions: HashMap<PublisherId, Session>,
    grants: HashMap<ObjectId, (Grant, KeyChain)>,
    runs: HashMap<RunId, ActiveRun>,
}

impl Consumer {
    pub fn new(id: ConsumerId, n_s: SecretNumber) -> Self {
        Consumer {
            id,
            n_s,
            sessions: HashMap::new(),
            grants: HashMap::new(),
            runs: HashMap::new(),
        }
    }

    pub fn has_session_with(&self, publisher: PublisherId) -> bool {
        self.sessions.contains_key(&publisher)
    }

    /// Any publisher this consumer holds a ticket from.
    pub fn any_session_issuer(&self) -> Option<PublisherId> {
        let mut issuers: Vec<_> = self.sessions.keys().copied().collect();
        issuers.sort();
        issuers.first().copied()
    }

    pub fn session_key_with(&self, publisher: PublisherId) -> Option<&SymmetricKey> {
        self.sessions.get(&publisher).map(|s| &s.k_s)
    }

    pub fn grant_for(&self, object: &ObjectId) -> Option<&Grant> {
        self.grants.get(object).map(|(g, _)| g)
    }

    pub fn chain_for(&self, object: &ObjectId) -> Option<&KeyChain> {
        self.grants.get(object).map(|(_, c)| c)
    }

    pub fn drop_keys_for(&mut self, object: &ObjectId) {
        self.grants.remove(object);
    }

    pub fn abort_run(&mut self, rid: RunId) {
        self.runs.remove(&rid);
    }

    /// Starts a subscription run toward `publisher` for `object`. Returns the
    /// first-interest name and the M1 payload.
    pub fn start_subp(
        &mut self,
        rid: RunId,
        publisher: &PublisherInfo,
        object: &ObjectId,
        rng: &mut dyn RngCore,
    ) -> Result<(SdpcName, SubpM1), ProtocolError> {
        let k_ts = subscription_key(&publisher.public_key, &self.n_s);
        let n0 = Nonce::fresh(rng);
        let path = object.segment_path(0).to_string();
        let name = first_interest_name(&publisher.prefix, &self.n_s, &k_ts, &path)?;
        let enc_n0 = sym_encrypt(&k_ts, &encode_nonce(&n0), rng);
        self.runs.insert(
            rid,
            ActiveRun {
                flow: FlowKind::SubP,
                target: publisher.id,
                target_key: publisher.public_key.clone(),
                object: object.clone(),
                n0,
                k_ts: Some(k_ts),
                via: None,
            },
        );
        Ok((name, SubpM1 { enc_n0 }))
    }

    /// Handles the subscription reply: verifies `n₀+1`, stores the ticket and
    /// session key, rebuilds the key chain, and answers the `n₁` challenge.
    pub fn handle_m4(
        &mut self,
        rid: RunId,
        m4: &SubpM4,
        rng: &mut dyn RngCore,
    ) -> Result<(SubpM6, ConsumerRunReport), ProtocolError> {
        let run = self.runs.get(&rid).ok_or(ProtocolError::BadState)?;
        if run.flow != FlowKind::SubP {
            return Err(ProtocolError::BadState);
        }
        let k_ts = run.k_ts.as_ref().expect("subp run has k_ts");
        let u0 = decode_u0(&sym_decrypt(k_ts, &m4.u0)?)?;
        if u0.n0_resp != run.n0.response() {
            self.runs.remove(&rid);
            return Err(ProtocolError::NonceMismatch);
        }
        let grant = decode_grant(&sym_decrypt(&u0.k_s, &m4.enc_grant)?)?;
        let run = self.runs.remove(&rid).unwrap();
        self.accept_grant(&grant, &run)?;
        self.sessions.insert(
            run.target,
            Session {
                ticket: u0.ticket,
                k_s: u0.k_s,
                issuer: run.target,
            },
        );
        let m6 = SubpM6 {
            rid: m4.rid,
            enc_response: sym_encrypt(&u0.k_s, &encode_nonce(&u0.n1.response()), rng),
        };
        Ok((
            m6,
            ConsumerRunReport {
                flow: FlowKind::SubP,
                publisher: run.target,
                object: run.object,
                n0: run.n0,
                n0_response_verified: true,
                n1: u0.n1,
                k_s: u0.k_s,
            },
        ))
    }

    /// Starts an APSub run with a publisher this consumer already holds a
    /// ticket from.
    pub fn start_apsub(
        &mut self,
        rid: RunId,
        publisher: &PublisherInfo,
        object: &ObjectId,
        rng: &mut dyn RngCore,
    ) -> Result<(SdpcName, AccessReq), ProtocolError> {
        let session = self
            .sessions
            .get(&publisher.id)
            .filter(|s| s.issuer == publisher.id)
            .ok_or(ProtocolError::NoSession)?;
        let n0 = Nonce::fresh(rng);
        let path = object.segment_path(0).to_string();
        let k_ts = subscription_key(&publisher.public_key, &self.n_s);
        let name = first_interest_name(&publisher.prefix, &self.n_s, &k_ts, &path)?;
        let enc = sym_encrypt(&session.k_s, &encode_access_body(self.id, n0, &path), rng);
        let req = AccessReq {
            enc,
            ticket: session.ticket.clone(),
        };
        self.runs.insert(
            rid,
            ActiveRun {
                flow: FlowKind::APSub,
                target: publisher.id,
                target_key: publisher.public_key.clone(),
                object: object.clone(),
                n0,
                k_ts: None,
                via: Some(publisher.id),
            },
        );
        Ok((name, req))
    }

    pub fn handle_a2(
        &mut self,
        rid: RunId,
        a2: &ApsubA2,
        rng: &mut dyn RngCore,
    ) -> Result<(ChallengeResp, ConsumerRunReport), ProtocolError> {
        let run = self.runs.get(&rid).ok_or(ProtocolError::BadState)?;
        if run.flow != FlowKind::APSub {
            return Err(ProtocolError::BadState);
        }
        let k_s = self.sessions[&run.via.unwrap()].k_s;
        let reply = decode_access_reply(&sym_decrypt(&k_s, &a2.enc)?)?;
        if reply.n0_resp != run.n0.response() {
            self.runs.remove(&rid);
            return Err(ProtocolError::NonceMismatch);
        }
        let run = self.runs.remove(&rid).unwrap();
        self.accept_grant(&reply.grant, &run)?;
        let resp = ChallengeResp {
            rid: a2.rid,
            enc_response: sym_encrypt(&k_s, &encode_nonce(&reply.n1.response()), rng),
        };
        Ok((
            resp,
            ConsumerRunReport {
                flow: FlowKind::APSub,
                publisher: run.target,
                object: run.object,
                n0: run.n0,
                n0_response_verified: true,
                n1: reply.n1,
                k_s,
            },
        ))
    }

    /// Starts a third-party access run: the ticket was issued by `home`, the
    /// content belongs to `third`.
    pub fn start_apsub3(
        &mut self,
        rid: RunId,
        third: &PublisherInfo,
        home: PublisherId,
        object: &ObjectId,
        rng: &mut dyn RngCore,
    ) -> Result<(SdpcName, AccessReq), ProtocolError> {
        let session = self
            .sessions
            .get(&home)
            .filter(|s| s.issuer == home)
            .ok_or(ProtocolError::NoSession)?;
        let n0 = Nonce::fresh(rng);
        let path = object.segment_path(0).to_string();
        let k_ts = subscription_key(&third.public_key, &self.n_s);
        let name = first_interest_name(&third.prefix, &self.n_s, &k_ts, &path)?;
        let enc = sym_encrypt(&session.k_s, &encode_access_body(self.id, n0, &path), rng);
        let req = AccessReq {
            enc,
            ticket: session.ticket.clone(),
        };
        self.runs.insert(
            rid,
            ActiveRun {
                flow: FlowKind::APSub3,
                target: third.id,
                target_key: third.public_key.clone(),
                object: object.clone(),
                n0,
                k_ts: None,
                via: Some(home),
            },
        );
        Ok((name, req))
    }

    pub fn handle_t4(
        &mut self,
        rid: RunId,
        t4: &Apsub3T4,
        rng: &mut dyn RngCore,
    ) -> Result<(ChallengeResp, ConsumerRunReport), ProtocolError> {
        let run = self.runs.get(&rid).ok_or(ProtocolError::BadState)?;
        if run.flow != FlowKind::APSub3 {
            return Err(ProtocolError::BadState);
        }
        let k_s = self.sessions[&run.via.unwrap()].k_s;
        let reply = decode_access_reply(&sym_decrypt(&k_s, &t4.u0)?)?;
        if reply.n0_resp != run.n0.response() {
            self.runs.remove(&rid);
            return Err(ProtocolError::NonceMismatch);
        }
        // Temporary session key with the third party, derived from our own
        // fresh nonce; verifies the publisher identity echo.
        let temp_kts = temporary_subscription_key(&run.target_key, &run.n0);
        let pid_bytes = sym_decrypt(&temp_kts, &t4.enc_publisher)?;
        let mut r = Reader::new(&pid_bytes);
        let claimed = PublisherId(r.take_u32()?);
        r.expect_end()?;
        if claimed != run.target {
            self.runs.remove(&rid);
            return Err(ProtocolError::IdentityMismatch);
        }
        let run = self.runs.remove(&rid).unwrap();
        self.accept_grant(&reply.grant, &run)?;
        let resp = ChallengeResp {
            rid: t4.rid,
            enc_response: sym_encrypt(&temp_kts, &encode_nonce(&reply.n1.response()), rng),
        };
        Ok((
            resp,
            ConsumerRunReport {
                flow: FlowKind::APSub3,
                publisher: run.target,
                object: run.object,
                n0: run.n0,
                n0_response_verified: true,
                n1: reply.n1,
                k_s,
            },
        ))
    }

    /// Verifies self-certification (`KEY_MSG = H(ζ₀, K_p)` for the expected
    /// publisher key) and rebuilds the segment key chain.
    fn accept_grant(&mut self, grant: &Grant, run: &ActiveRun) -> Result<(), ProtocolError> {
        if grant.object != run.object || grant.segments == 0 {
            return Err(ProtocolError::GrantMismatch);
        }
        let pk = run.target_key.canonical_bytes();
        let expect = hash_parts(&[grant.zeta0.as_bytes(), &pk]);
        if expect != grant.key_msg {
            return Err(ProtocolError::GrantMismatch);
        }
        let chain = build_chain(
            grant.zeta0,
            grant.segments as usize,
            &run.target_key,
            &grant.object.canonical(),
            grant.publish_time,
        )?;
        self.grants.insert(grant.object.clone(), (grant.clone(), chain));
        Ok(())
    }
}
