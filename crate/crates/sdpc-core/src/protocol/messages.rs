//! Wire formats for protocol messages and the plaintext layouts that live
//! inside their encrypted fields.

use crate::crypto::{Digest256, Nonce, SymmetricKey};
use crate::naming::ObjectId;
use crate::wire::{Reader, Writer};

use super::{ConsumerId, Grant, Profile, ProtocolError, PublisherId, TicketContents};

/// Subscription interest payload: `E_{K_TS}(n₀)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubpM1 {
    pub enc_n0: Vec<u8>,
}

/// Publisher → manager forward: the untouched M1 material plus the
/// publisher's identity and its challenge `n₂`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubpM2 {
    pub rid: u64,
    pub interest_name: Vec<u8>,
    pub enc_n0: Vec<u8>,
    pub publisher: PublisherId,
    pub n2: Nonce,
}

/// Manager → publisher: `u₀ = E_{K_TS}(n₀+1 ‖ n₁ ‖ T_k ‖ K_S)`, the ticket
/// for the publisher to open, and the publisher-sealed response part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubpM3 {
    pub rid: u64,
    pub u0: Vec<u8>,
    pub ticket: Vec<u8>,
    pub publisher_part: Vec<u8>,
}

/// Publisher → consumer data: `u₀` forwarded untouched plus the key
/// generation information sealed under the fresh session key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubpM4 {
    pub rid: u64,
    pub u0: Vec<u8>,
    pub enc_grant: Vec<u8>,
}

/// Publisher → manager run confirmation, correlated by ticket digest:
/// `E(n₁+1)` under the session key (SubP) or the temporary key (APSub3).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfirm {
    pub ticket_digest: Digest256,
    pub enc_response: Vec<u8>,
}

/// Consumer → publisher final challenge response: `E_{K_S}(n₁+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubpM6 {
    pub rid: u64,
    pub enc_response: Vec<u8>,
}

/// `Access_req = E_{K_S}(N_i ‖ n₀ ‖ path) ‖ T_k` — the first message of both
/// APSub and APSub3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessReq {
    pub enc: Vec<u8>,
    pub ticket: Vec<u8>,
}

/// Publisher → consumer: `E_{K_S}(n₀+1 ‖ n₁ ‖ grant)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApsubA2 {
    pub rid: u64,
    pub enc: Vec<u8>,
}

/// A bare encrypted challenge response used by APSub step 3 and APSub3
/// steps 5/6.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChallengeResp {
    pub rid: u64,
    pub enc_response: Vec<u8>,
}

/// Third-party publisher → manager forward of an access request.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Apsub3T2 {
    pub rid: u64,
    pub access: AccessReq,
    pub publisher: PublisherId,
    pub n2: Nonce,
}

/// Manager → third-party publisher: `u₀ = E_{K_S}(n₀+1 ‖ n₁ ‖ grant)` (opaque
/// to the publisher) plus the publisher-sealed part carrying the temporary
/// session key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Apsub3T3 {
    pub rid: u64,
    pub u0: Vec<u8>,
    pub publisher_part: Vec<u8>,
}

/// Third-party publisher → consumer: `u₀ ‖ E_{K_TS}(P_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Apsub3T4 {
    pub rid: u64,
    pub u0: Vec<u8>,
    pub enc_publisher: Vec<u8>,
}

/// Publisher → manager confirmation that a ticket failed its final challenge
/// and is now considered stolen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StolenNotice {
    pub ticket_digest: Digest256,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProtocolMsg {
    SubpM1(SubpM1),
    SubpM2(SubpM2),
    SubpM3(SubpM3),
    SubpM4(SubpM4),
    SubpM5(RunConfirm),
    SubpM6(SubpM6),
    AccessReq(AccessReq),
    ApsubA2(ApsubA2),
    ApsubA3(ChallengeResp),
    Apsub3T2(Apsub3T2),
    Apsub3T3(Apsub3T3),
    Apsub3T4(Apsub3T4),
    Apsub3T5(ChallengeResp),
    Apsub3T6(RunConfirm),
    StolenNotice(StolenNotice),
}

impl ProtocolMsg {
    pub fn step_name(&self) -> &'static str {
        match self {
            ProtocolMsg::SubpM1(_) => "M1",
            ProtocolMsg::SubpM2(_) => "M2",
            ProtocolMsg::SubpM3(_) => "M3",
            ProtocolMsg::SubpM4(_) => "M4",
            ProtocolMsg::SubpM5(_) => "M5",
            ProtocolMsg::SubpM6(_) => "M6",
            ProtocolMsg::AccessReq(_) => "A1",
            ProtocolMsg::ApsubA2(_) => "A2",
            ProtocolMsg::ApsubA3(_) => "A3",
            ProtocolMsg::Apsub3T2(_) => "T2",
            ProtocolMsg::Apsub3T3(_) => "T3",
            ProtocolMsg::Apsub3T4(_) => "T4",
            ProtocolMsg::Apsub3T5(_) => "T5",
            ProtocolMsg::Apsub3T6(_) => "T6",
            ProtocolMsg::StolenNotice(_) => "stolen",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        match self {
            ProtocolMsg::SubpM1(m) => {
                w.put_u8(1).put_bytes(&m.enc_n0);
            }
            ProtocolMsg::SubpM2(m) => {
                w.put_u8(2)
                    .put_u64(m.rid)
                    .put_bytes(&m.interest_name)
                    .put_bytes(&m.enc_n0)
                    .put_u32(m.publisher.0)
                    .put_u128(m.n2.0);
            }
            ProtocolMsg::SubpM3(m) => {
                w.put_u8(3)
                    .put_u64(m.rid)
                    .put_bytes(&m.u0)
                    .put_bytes(&m.ticket)
                    .put_bytes(&m.publisher_part);
            }
            ProtocolMsg::SubpM4(m) => {
                w.put_u8(4)
                    .put_u64(m.rid)
                    .put_bytes(&m.u0)
                    .put_bytes(&m.enc_grant);
            }
            ProtocolMsg::SubpM5(m) => {
                w.put_u8(5)
                    .put_raw(m.ticket_digest.as_bytes())
                    .put_bytes(&m.enc_response);
            }
            ProtocolMsg::SubpM6(m) => {
                w.put_u8(6).put_u64(m.rid).put_bytes(&m.enc_response);
            }
            ProtocolMsg::AccessReq(m) => {
                w.put_u8(7).put_bytes(&m.enc).put_bytes(&m.ticket);
            }
            ProtocolMsg::ApsubA2(m) => {
                w.put_u8(8).put_u64(m.rid).put_bytes(&m.enc);
            }
            ProtocolMsg::ApsubA3(m) => {
                w.put_u8(9).put_u64(m.rid).put_bytes(&m.enc_response);
            }
            ProtocolMsg::Apsub3T2(m) => {
                w.put_u8(10)
                    .put_u64(m.rid)
                    .put_bytes(&m.access.enc)
                    .put_bytes(&m.access.ticket)
                    .put_u32(m.publisher.0)
                    .put_u128(m.n2.0);
            }
            ProtocolMsg::Apsub3T3(m) => {
                w.put_u8(11)
                    .put_u64(m.rid)
                    .put_bytes(&m.u0)
                    .put_bytes(&m.publisher_part);
            }
            ProtocolMsg::Apsub3T4(m) => {
                w.put_u8(12)
                    .put_u64(m.rid)
                    .put_bytes(&m.u0)
                    .put_bytes(&m.enc_publisher);
            }
            ProtocolMsg::Apsub3T5(m) => {
                w.put_u8(13).put_u64(m.rid).put_bytes(&m.enc_response);
            }
            ProtocolMsg::Apsub3T6(m) => {
                w.put_u8(14)
                    .put_raw(m.ticket_digest.as_bytes())
                    .put_bytes(&m.enc_response);
            }
            ProtocolMsg::StolenNotice(m) => {
                w.put_u8(15).put_raw(m.ticket_digest.as_bytes());
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ProtocolMsg, ProtocolError> {
        let mut r = Reader::new(bytes);
        let tag = r.take_u8()?;
        let msg = match tag {
            1 => ProtocolMsg::SubpM1(SubpM1 {
                enc_n0: r.take_bytes()?.to_vec(),
            }),
            2 => ProtocolMsg::SubpM2(SubpM2 {
                rid: r.take_u64()?,
                interest_name: r.take_bytes()?.to_vec(),
                enc_n0: r.take_bytes()?.to_vec(),
                publisher: PublisherId(r.take_u32()?),
                n2: Nonce(r.take_u128()?),
            }),
            3 => ProtocolMsg::SubpM3(SubpM3 {
                rid: r.take_u64()?,
                u0: r.take_bytes()?.to_vec(),
                ticket: r.take_bytes()?.to_vec(),
                publisher_part: r.take_bytes()?.to_vec(),
            }),
            4 => ProtocolMsg::SubpM4(SubpM4 {
                rid: r.take_u64()?,
                u0: r.take_bytes()?.to_vec(),
                enc_grant: r.take_bytes()?.to_vec(),
            }),
            5 => ProtocolMsg::SubpM5(RunConfirm {
                ticket_digest: take_digest(&mut r)?,
                enc_response: r.take_bytes()?.to_vec(),
            }),
            6 => ProtocolMsg::SubpM6(SubpM6 {
                rid: r.take_u64()?,
                enc_response: r.take_bytes()?.to_vec(),
            }),
            7 => ProtocolMsg::AccessReq(AccessReq {
                enc: r.take_bytes()?.to_vec(),
                ticket: r.take_bytes()?.to_vec(),
            }),
            8 => ProtocolMsg::ApsubA2(ApsubA2 {
                rid: r.take_u64()?,
                enc: r.take_bytes()?.to_vec(),
            }),
            9 => ProtocolMsg::ApsubA3(ChallengeResp {
                rid: r.take_u64()?,
                enc_response: r.take_bytes()?.to_vec(),
            }),
            10 => ProtocolMsg::Apsub3T2(Apsub3T2 {
                rid: r.take_u64()?,
                access: AccessReq {
                    enc: r.take_bytes()?.to_vec(),
                    ticket: r.take_bytes()?.to_vec(),
                },
                publisher: PublisherId(r.take_u32()?),
                n2: Nonce(r.take_u128()?),
            }),
            11 => ProtocolMsg::Apsub3T3(Apsub3T3 {
                rid: r.take_u64()?,
                u0: r.take_bytes()?.to_vec(),
                publisher_part: r.take_bytes()?.to_vec(),
            }),
            12 => ProtocolMsg::Apsub3T4(Apsub3T4 {
                rid: r.take_u64()?,
                u0: r.take_bytes()?.to_vec(),
                enc_publisher: r.take_bytes()?.to_vec(),
            }),
            13 => ProtocolMsg::Apsub3T5(ChallengeResp {
                rid: r.take_u64()?,
                enc_response: r.take_bytes()?.to_vec(),
            }),
            14 => ProtocolMsg::Apsub3T6(RunConfirm {
                ticket_digest: take_digest(&mut r)?,
                enc_response: r.take_bytes()?.to_vec(),
            }),
            15 => ProtocolMsg::StolenNotice(StolenNotice {
                ticket_digest: take_digest(&mut r)?,
            }),
            _ => return Err(ProtocolError::BadState),
        };
        r.expect_end()?;
        Ok(msg)
    }
}

fn take_digest(r: &mut Reader) -> Result<Digest256, ProtocolError> {
    let b: [u8; 32] = r.take_raw(32)?.try_into().unwrap();
    Ok(Digest256(b))
}

// ---- plaintext layouts inside encrypted fields ----

pub(crate) fn encode_nonce(n: &Nonce) -> Vec<u8> {
    n.0.to_be_bytes().to_vec()
}

pub(crate) fn decode_nonce(b: &[u8]) -> Result<Nonce, ProtocolError> {
    let mut r = Reader::new(b);
    let n = Nonce(r.take_u128()?);
    r.expect_end()?;
    Ok(n)
}

pub(crate) fn encode_u0(n0_resp: Nonce, n1: Nonce, ticket: &[u8], k_s: &SymmetricKey) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u128(n0_resp.0)
        .put_u128(n1.0)
        .put_bytes(ticket)
        .put_raw(&k_s.0);
    w.finish()
}

pub(crate) struct U0Fields {
    pub n0_resp: Nonce,
    pub n1: Nonce,
    pub ticket: Vec<u8>,
    pub k_s: SymmetricKey,
}

pub(crate) fn decode_u0(b: &[u8]) -> Result<U0Fields, ProtocolError> {
    let mut r = Reader::new(b);
    let n0_resp = Nonce(r.take_u128()?);
    let n1 = Nonce(r.take_u128()?);
    let ticket = r.take_bytes()?.to_vec();
    let k_s = SymmetricKey(r.take_raw(32)?.try_into().unwrap());
    r.expect_end()?;
    Ok(U0Fields {
        n0_resp,
        n1,
        ticket,
        k_s,
    })
}

pub(crate) fn encode_ticket_body(c: &TicketContents) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u64(c.consumer.0).put_raw(&c.k_s.0).put_bytes(&c.profile.0);
    w.finish()
}

pub(crate) fn decode_ticket_body(b: &[u8]) -> Result<TicketContents, ProtocolError> {
    let mut r = Reader::new(b);
    let consumer = ConsumerId(r.take_u64()?);
    let k_s = SymmetricKey(r.take_raw(32)?.try_into().unwrap());
    let profile = Profile(r.take_bytes()?.to_vec());
    r.expect_end()?;
    Ok(TicketContents {
        consumer,
        k_s,
        profile,
    })
}

pub(crate) fn encode_subp_pub_part(
    n2_resp: Nonce,
    n1: Nonce,
    consumer: ConsumerId,
    object_path: &str,
) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u128(n2_resp.0)
        .put_u128(n1.0)
        .put_u64(consumer.0)
        .put_str(object_path);
    w.finish()
}

pub(crate) struct SubpPubPart {
    pub n2_resp: Nonce,
    pub n1: Nonce,
    pub consumer: ConsumerId,
    pub object_path: String,
}

pub(crate) fn decode_subp_pub_part(b: &[u8]) -> Result<SubpPubPart, ProtocolError> {
    let mut r = Reader::new(b);
    let n2_resp = Nonce(r.take_u128()?);
    let n1 = Nonce(r.take_u128()?);
    let consumer = ConsumerId(r.take_u64()?);
    let object_path = r.take_str()?;
    r.expect_end()?;
    Ok(SubpPubPart {
        n2_resp,
        n1,
        consumer,
        object_path,
    })
}

pub(crate) fn encode_grant(g: &Grant) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_str(&g.object.name)
        .put_u32(g.object.version)
        .put_u64(g.publish_time)
        .put_raw(g.zeta0.as_bytes())
        .put_raw(g.key_msg.as_bytes())
        .put_u32(g.segments);
    w.finish()
}

pub(crate) fn decode_grant(b: &[u8]) -> Result<Grant, ProtocolError> {
    let mut r = Reader::new(b);
    let name = r.take_str()?;
    let version = r.take_u32()?;
    let publish_time = r.take_u64()?;
    let zeta0 = Digest256(r.take_raw(32)?.try_into().unwrap());
    let key_msg = Digest256(r.take_raw(32)?.try_into().unwrap());
    let segments = r.take_u32()?;
    r.expect_end()?;
    Ok(Grant {
        object: ObjectId::new(name, version),
        publish_time,
        zeta0,
        key_msg,
        segments,
    })
}

pub(crate) fn encode_access_body(consumer: ConsumerId, n0: Nonce, object_path: &str) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u64(consumer.0).put_u128(n0.0).put_str(object_path);
    w.finish()
}

pub(crate) struct AccessBody {
    pub consumer: ConsumerId,
    pub n0: Nonce,
    pub object_path: String,
}

pub(crate) fn decode_access_body(b: &[u8]) -> Result<AccessBody, ProtocolError> {
    let mut r = Reader::new(b);
    let consumer = ConsumerId(r.take_u64()?);
    let n0 = Nonce(r.take_u128()?);
    let object_path = r.take_str()?;
    r.expect_end()?;
    Ok(AccessBody {
        consumer,
        n0,
        object_path,
    })
}

pub(crate) fn encode_access_reply(n0_resp: Nonce, n1: Nonce, grant: &Grant) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u128(n0_resp.0)
        .put_u128(n1.0)
        .put_bytes(&encode_grant(grant));
    w.finish()
}

pub(crate) struct AccessReply {
    pub n0_resp: Nonce,
    pub n1: Nonce,
    pub grant: Grant,
}

pub(crate) fn decode_access_reply(b: &[u8]) -> Result<AccessReply, ProtocolError> {
    let mut r = Reader::new(b);
    let n0_resp = Nonce(r.take_u128()?);
    let n1 = Nonce(r.take_u128()?);
    let grant = decode_grant(r.take_bytes()?)?;
    r.expect_end()?;
    Ok(AccessReply {
        n0_resp,
        n1,
        grant,
    })
}

pub(crate) fn encode_t3_pub_part(
    n2_resp: Nonce,
    n1: Nonce,
    temp_kts: &SymmetricKey,
    consumer: ConsumerId,
    object_path: &str,
) -> Vec<u8> {
    let mut w = Writer::new();
    w.put_u128(n2_resp.0)
        .put_u128(n1.0)
        .put_raw(&temp_kts.0)
        .put_u64(consumer.0)
        .put_str(object_path);
    w.finish()
}

pub(crate) struct T3PubPart {
    pub n2_resp: Nonce,
    pub n1: Nonce,
    pub temp_kts: SymmetricKey,
    pub consumer: ConsumerId,
    pub object_path: String,
}

pub(crate) fn decode_t3_pub_part(b: &[u8]) -> Result<T3PubPart, ProtocolError> {
    let mut r = Reader::new(b);
    let n2_resp = Nonce(r.take_u128()?);
    let n1 = Nonce(r.take_u128()?);
    let temp_kts = SymmetricKey(r.take_raw(32)?.try_into().unwrap());
    let consumer = ConsumerId(r.take_u64()?);
    let object_path = r.take_str()?;
    r.expect_end()?;
    Ok(T3PubPart {
        n2_resp,
        n1,
        temp_kts,
        consumer,
        object_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_msg_codec_round_trip() {
        let msgs = vec![
            ProtocolMsg::SubpM1(SubpM1 { enc_n0: vec![1, 2, 3] }),
            ProtocolMsg::SubpM2(SubpM2 {
                rid: 7,
                interest_name: vec![9; 4],
                enc_n0: vec![1],
                publisher: PublisherId(3),
                n2: Nonce(12345),
            }),
            ProtocolMsg::SubpM5(RunConfirm {
                ticket_digest: Digest256([8; 32]),
                enc_response: vec![0, 1],
            }),
            ProtocolMsg::AccessReq(AccessReq {
                enc: vec![5; 10],
                ticket: vec![6; 20],
            }),
            ProtocolMsg::StolenNotice(StolenNotice {
                ticket_digest: Digest256([2; 32]),
            }),
        ];
        for m in msgs {
            let b = m.to_bytes();
            assert_eq!(ProtocolMsg::from_bytes(&b).unwrap(), m);
        }
    }

    #[test]
    fn trailing_garbage_rejected() {
        let mut b = ProtocolMsg::SubpM1(SubpM1 { enc_n0: vec![1] }).to_bytes();
        b.push(0);
        assert!(ProtocolMsg::from_bytes(&b).is_err());
        assert!(ProtocolMsg::from_bytes(&[99]).is_err());
    }
}
