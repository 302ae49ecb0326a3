//! Role state machines for the subscription and content-access protocol
//! suite.
//!
//! Three flows share the same building blocks:
//!
//! * SubP — six messages. The consumer authenticates to the subscription
//!   manager via its registered secret number, the manager issues a session
//!   key and a publisher-sealed ticket, and the publisher releases the key
//!   generation information for the requested object.
//! * APSub — three messages. A ticket holder re-authenticates directly to the
//!   issuing publisher, no manager involved.
//! * APSub3 — six messages. A ticket issued by one publisher is used to
//!   access content of another; the manager validates the ticket and the key
//!   generation information stays sealed end-to-end so the third party never
//!   sees it.
//!
//! Every handler is a pure state transition that either returns the next
//! outbound message(s) or an error; callers treat errors as silent rejection
//! (the DDoS rationale: failed authentication gets no reply). Challenge
//! nonces use the `n → n + 1` response convention throughout.

mod consumer;
mod manager;
mod messages;
mod publisher;
pub mod transcript;
pub mod harness;

pub use consumer::{Consumer, ConsumerRunReport};
pub use manager::{Manager, ManagerCounters, RegEntry};
pub use messages::*;
pub use publisher::{PublishedObject, Publisher, PublisherCounters};

use std::fmt;

use thiserror::Error;

use crate::crypto::{CryptoError, Digest256, SymmetricKey};
use crate::naming::{NameError, ObjectId, Prefix};
use crate::wire::WireError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("interest name is not in the consumer name space")]
    NotFirstInterest,
    #[error("unknown registration digest")]
    UnknownDigest,
    #[error("unknown ticket")]
    UnknownTicket,
    #[error("unknown publisher")]
    UnknownPublisher,
    #[error("unknown object")]
    UnknownObject,
    #[error("no run in the expected state")]
    BadState,
    #[error("challenge response mismatch")]
    NonceMismatch,
    #[error("claimed identity does not match ticket")]
    IdentityMismatch,
    #[error("ticket is marked stolen")]
    TicketStolen,
    #[error("no session with this publisher")]
    NoSession,
    #[error("grant fails self-certification check")]
    GrantMismatch,
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Name(#[from] NameError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConsumerId(pub u64);

impl fmt::Display for ConsumerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublisherId(pub u32);

impl fmt::Display for PublisherId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// Correlation handle for one protocol run; unique per simulation.
pub type RunId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlowKind {
    SubP,
    APSub,
    APSub3,
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowKind::SubP => write!(f, "subp"),
            FlowKind::APSub => write!(f, "apsub"),
            FlowKind::APSub3 => write!(f, "apsub3"),
        }
    }
}

/// Opaque subscription profile; first byte is the active flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile(pub Vec<u8>);

impl Profile {
    pub fn active() -> Self {
        Profile(vec![1])
    }

    pub fn is_active(&self) -> bool {
        self.0.first() == Some(&1)
    }
}

/// What the consumer needs to know about a publisher up front: identity,
/// public key, and routable prefix. All public directory data.
#[derive(Clone, Debug)]
pub struct PublisherInfo {
    pub id: PublisherId,
    pub public_key: crate::crypto::PublicKey,
    pub prefix: Prefix,
}

/// Key generation information released after a successful run. `zeta0` is
/// the chain seed the consumer regenerates all segment keys from; `key_msg`
/// is the shared name-space value `H(ζ₀, K_p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grant {
    pub object: ObjectId,
    pub publish_time: u64,
    pub zeta0: Digest256,
    pub key_msg: Digest256,
    pub segments: u32,
}

/// Contents of an opened ticket `T_k = E_P(N_i ‖ K_S ‖ profile)`.
#[derive(Clone, Debug)]
pub struct TicketContents {
    pub consumer: ConsumerId,
    pub k_s: SymmetricKey,
    pub profile: Profile,
}

/// Digest of the encoded ticket bytes; the handle stolen-ticket state is
/// keyed on.
pub fn ticket_digest(ticket: &[u8]) -> Digest256 {
    crate::crypto::hash(ticket)
}
