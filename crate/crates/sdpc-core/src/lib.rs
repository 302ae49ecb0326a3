//! Core building blocks for secure distribution of protected content over NDN:
//! deterministic key-generation primitives, the hybrid naming scheme, and the
//! subscription / content-access protocol state machines.
//!
//! Everything here is pure computation over explicit inputs (plus a caller
//! supplied RNG handle), so the types can be driven either by unit tests or by
//! a discrete-event simulator.

pub mod crypto;
pub mod naming;
pub mod oracle;
pub mod protocol;
pub mod wire;

pub use crypto::{
    build_chain, commitment_generator, hash, hash_parts, session_key, subscription_key,
    CryptoError, Digest256, KeyChain, Nonce, PublisherKeyPair, SecretNumber, SymmetricKey,
};
pub use naming::{NameError, NameKind, ObjectId, ObjectPath, Prefix, SdpcName};
