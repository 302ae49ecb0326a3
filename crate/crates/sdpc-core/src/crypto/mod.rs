//! Deterministic key-generation primitives.
//!
//! One content object gets one commitment generator `ζ₀ = H(T_P, O_j)`, a
//! hash chain `ζ_{l} = H(ζ_{l-1})`, and per-segment 256-bit keys
//! `K_k = H(ζ_k, K_p)` that bind the publisher's public key into every
//! content key (self-certification without per-packet signatures).
//! `KEY_MSG = H(ζ₀, K_p)` doubles as the shared name-space digest.
//!
//! Multi-argument hashes use length-prefixed framing so `H(a, b)` can never
//! collide with `H(a', b')` for a different split of the same concatenation.

mod cipher;
mod seal;

pub use cipher::{sym_decrypt, sym_encrypt, sym_encrypt_deterministic};
pub use seal::{open, seal, PrivateKey, PublicKey, PublisherKeyPair};

use std::fmt;

use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CryptoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("authenticated decryption failed")]
    AuthFailed,
    #[error("malformed ciphertext")]
    Malformed,
}

/// Output of the one-way hash `H(·)`. Equality is byte equality.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest256(pub [u8; 32]);

impl Digest256 {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", &self.to_hex()[..8])
    }
}

/// 256-bit symmetric key.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymmetricKey(pub [u8; 32]);

impl SymmetricKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymmetricKey(..)")
    }
}

/// Per-consumer registered secret number `n_S` (256 bits).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecretNumber(pub [u8; 32]);

impl SecretNumber {
    pub fn fresh(rng: &mut dyn RngCore) -> Self {
        let mut b = [0u8; 32];
        rng.fill_bytes(&mut b);
        SecretNumber(b)
    }

    pub fn digest(&self) -> Digest256 {
        hash(&self.0)
    }
}

impl fmt::Debug for SecretNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretNumber(..)")
    }
}

/// 128-bit challenge nonce. The expected response to `n` is `n + 1`
/// (wrapping).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Nonce(pub u128);

impl Nonce {
    pub fn fresh(rng: &mut dyn RngCore) -> Self {
        let mut b = [0u8; 16];
        rng.fill_bytes(&mut b);
        Nonce(u128::from_be_bytes(b))
    }

    pub fn response(&self) -> Nonce {
        Nonce(self.0.wrapping_add(1))
    }

    /// Zero-extended 256-bit big-endian form, used when a nonce feeds an XOR
    /// key derivation.
    pub fn widened(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out[16..].copy_from_slice(&self.0.to_be_bytes());
        out
    }
}

/// Plain `H(data)`.
pub fn hash(data: &[u8]) -> Digest256 {
    let mut h = Sha256::new();
    h.update(data);
    Digest256(h.finalize().into())
}

/// Multi-argument `H(a, b, ...)` over length-prefixed framing:
/// `len(a) ‖ a ‖ len(b) ‖ b ‖ ...` with u64 big-endian lengths.
pub fn hash_parts(parts: &[&[u8]]) -> Digest256 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p);
    }
    Digest256(h.finalize().into())
}

/// The framed preimage that `hash_parts` digests, exposed so test vectors can
/// record the exact input bytes.
pub fn frame_parts(parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(&(p.len() as u64).to_be_bytes());
        out.extend_from_slice(p);
    }
    out
}

fn xor32(a: &[u8; 32], b: &[u8; 32]) -> [u8; 32] {
    let mut out = [0u8; 32];
    for i in 0..32 {
        out[i] = a[i] ^ b[i];
    }
    out
}

/// Timestamps feeding key derivations are encoded as 256-bit big-endian
/// integers (nanoseconds of simulated time in practice).
pub fn widen_time(t: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    out[24..].copy_from_slice(&t.to_be_bytes());
    out
}

/// Commitment key generator `ζ₀ = H(T_P, O_j)`, unique per object name,
/// version, and publish time.
pub fn commitment_generator(publish_time: u64, object_id: &str) -> Result<Digest256, CryptoError> {
    if object_id.is_empty() {
        return Err(CryptoError::InvalidArgument("empty object id"));
    }
    Ok(hash_parts(&[&widen_time(publish_time), object_id.as_bytes()]))
}

/// The full per-object key material: generator chain plus derived keys.
#[derive(Clone, Debug)]
pub struct KeyChain {
    /// Content name + version string `O_j`.
    pub object_id: String,
    /// Publish time `T_P`.
    pub publish_time: u64,
    /// `ζ₀ … ζ_L` (length L+1).
    pub generators: Vec<Digest256>,
    /// `K_0 … K_L`, where `K_k = H(ζ_k, K_p)` (length L+1).
    pub segment_keys: Vec<SymmetricKey>,
    /// `KEY_MSG = H(ζ₀, K_p)`; equal to `K_0` by construction.
    pub key_msg: Digest256,
    /// Segment count L.
    pub length: usize,
}

impl KeyChain {
    pub fn segment_key(&self, k: usize) -> Result<&SymmetricKey, CryptoError> {
        self.segment_keys
            .get(k)
            .ok_or(CryptoError::InvalidArgument("segment index out of range"))
    }
}

/// Builds the generator chain of length `L` from `ζ₀` and derives the
/// per-segment keys against the publisher's public key.
pub fn build_chain(
    zeta0: Digest256,
    length: usize,
    publisher_key: &PublicKey,
    object_id: &str,
    publish_time: u64,
) -> Result<KeyChain, CryptoError> {
    if length == 0 {
        return Err(CryptoError::InvalidArgument("chain length must be >= 1"));
    }
    let pk = publisher_key.canonical_bytes();
    let mut generators = Vec::with_capacity(length + 1);
    generators.push(zeta0);
    for l in 1..=length {
        generators.push(hash(generators[l - 1].as_bytes()));
    }
    let segment_keys: Vec<SymmetricKey> = generators
        .iter()
        .map(|g| SymmetricKey(hash_parts(&[g.as_bytes(), &pk]).0))
        .collect();
    let key_msg = hash_parts(&[zeta0.as_bytes(), &pk]);
    Ok(KeyChain {
        object_id: object_id.to_string(),
        publish_time,
        generators,
        segment_keys,
        key_msg,
        length,
    })
}

/// Segment count for an object of `size` bytes cut into `segment_size` pieces.
pub fn segment_count(size: u64, segment_size: u64) -> Result<usize, CryptoError> {
    if size == 0 || segment_size == 0 {
        return Err(CryptoError::InvalidArgument("size and segment size must be > 0"));
    }
    Ok(size.div_ceil(segment_size) as usize)
}

/// Subscription key `K_TS = H(K_p ⊕ n_S)`. The public key is first
/// compressed to 256 bits by hashing its canonical encoding.
pub fn subscription_key(publisher_key: &PublicKey, n_s: &SecretNumber) -> SymmetricKey {
    let compressed = hash(&publisher_key.canonical_bytes());
    SymmetricKey(hash(&xor32(compressed.as_bytes(), &n_s.0)).0)
}

/// Session key `K_S = H(T_M ⊕ n_S)` for issuing time `T_M`.
pub fn session_key(issue_time: u64, n_s: &SecretNumber) -> SymmetricKey {
    SymmetricKey(hash(&xor32(&widen_time(issue_time), &n_s.0)).0)
}

/// Temporary third-party session key `K_TS = H(K_p^j ⊕ n₀)` used by the
/// cross-publisher access flow.
pub fn temporary_subscription_key(publisher_key: &PublicKey, n0: &Nonce) -> SymmetricKey {
    let compressed = hash(&publisher_key.canonical_bytes());
    SymmetricKey(hash(&xor32(compressed.as_bytes(), &n0.widened())).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn hash_is_deterministic() {
        assert_eq!(hash(b"x"), hash(b"x"));
        assert_ne!(hash(b"x"), hash(b"y"));
    }

    #[test]
    fn empty_hash_matches_standard_digest() {
        // SHA-256 of the empty string, a published constant.
        assert_eq!(
            hash(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn framing_kills_concatenation_ambiguity() {
        assert_ne!(hash_parts(&[b"ab", b"c"]), hash_parts(&[b"a", b"bc"]));
        assert_ne!(hash_parts(&[b"ab", b"c"]), hash(b"abc"));
    }

    #[test]
    fn commitment_separates_versions() {
        let a = commitment_generator(0, "obj/_v1").unwrap();
        let b = commitment_generator(0, "obj/_v2").unwrap();
        let c = commitment_generator(1, "obj/_v1").unwrap();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, commitment_generator(0, "obj/_v1").unwrap());
        assert!(commitment_generator(0, "").is_err());
    }

    #[test]
    fn chain_definition_unrolls() {
        let mut r = rng(1);
        let kp = PublisherKeyPair::generate(&mut r);
        let z0 = commitment_generator(0, "test.doc/_v1").unwrap();
        let chain = build_chain(z0, 1, kp.public(), "test.doc/_v1", 0).unwrap();
        assert_eq!(chain.generators.len(), 2);
        assert_eq!(chain.generators[0], z0);
        assert_eq!(chain.generators[1], hash(z0.as_bytes()));
        let pk = kp.public().canonical_bytes();
        assert_eq!(
            chain.segment_keys[0].0,
            hash_parts(&[z0.as_bytes(), &pk]).0
        );
        assert_eq!(
            chain.segment_keys[1].0,
            hash_parts(&[chain.generators[1].as_bytes(), &pk]).0
        );
        // KEY_MSG coincides with K_0 by formula; the protocol uses it only as
        // a grant / name-space value, never directly as a payload key.
        assert_eq!(chain.key_msg.0, chain.segment_keys[0].0);
        assert!(build_chain(z0, 0, kp.public(), "o", 0).is_err());
    }

    #[test]
    fn ten_segments_for_a_ten_segment_object() {
        // 1 GB object at 100 MB segments.
        assert_eq!(segment_count(1_000_000_000, 100_000_000).unwrap(), 10);
        assert_eq!(segment_count(1_000_000_001, 100_000_000).unwrap(), 11);
    }

    #[test]
    fn version_isolation() {
        let mut r = rng(2);
        let kp = PublisherKeyPair::generate(&mut r);
        let c1 = build_chain(
            commitment_generator(7, "obj/_v1").unwrap(),
            8,
            kp.public(),
            "obj/_v1",
            7,
        )
        .unwrap();
        let c2 = build_chain(
            commitment_generator(7, "obj/_v2").unwrap(),
            8,
            kp.public(),
            "obj/_v2",
            7,
        )
        .unwrap();
        let g1: HashSet<_> = c1.generators.iter().collect();
        assert!(c2.generators.iter().all(|g| !g1.contains(g)));
        let k1: HashSet<_> = c1.segment_keys.iter().map(|k| k.0).collect();
        assert!(c2.segment_keys.iter().all(|k| !k1.contains(&k.0)));
    }

    #[test]
    fn subscription_key_xor_identity() {
        let mut r = rng(3);
        let kp = PublisherKeyPair::generate(&mut r);
        let zero = SecretNumber([0u8; 32]);
        let expect = hash(hash(&kp.public().canonical_bytes()).as_bytes());
        assert_eq!(subscription_key(kp.public(), &zero).0, expect.0);
    }

    #[test]
    fn session_key_xor_identity() {
        let n_s = SecretNumber([9u8; 32]);
        assert_eq!(session_key(0, &n_s).0, hash(&n_s.0).0);
        assert_ne!(session_key(1, &n_s), session_key(2, &n_s));
    }

    #[test]
    fn key_separation_over_random_derivations() {
        // K_TS, K_S, KEY_MSG and segment keys at indices >= 1 must never
        // collide. KEY_MSG equals segment key 0 by construction, so index 0
        // is identified with KEY_MSG in the collision set.
        let mut r = rng(4);
        let kp = PublisherKeyPair::generate(&mut r);
        let mut seen: HashSet<[u8; 32]> = HashSet::new();
        let mut count = 0usize;
        let mut i = 0u64;
        while count < 10_000 {
            let n_s = SecretNumber::fresh(&mut r);
            let z0 = commitment_generator(i, &format!("obj{i}/_v1")).unwrap();
            let chain = build_chain(z0, 3, kp.public(), "o", i).unwrap();
            let mut insert = |k: [u8; 32]| {
                assert!(seen.insert(k), "collision after {count} derivations");
            };
            insert(subscription_key(kp.public(), &n_s).0);
            insert(session_key(i, &n_s).0);
            insert(chain.key_msg.0);
            for k in &chain.segment_keys[1..] {
                insert(k.0);
            }
            count += 6;
            i += 1;
        }
    }
}
