//! Authenticated symmetric cipher over the 256-bit keys produced by the
//! keying protocol.
//!
//! Two modes share one wire format (`mode ‖ iv ‖ ct [‖ tag]`):
//!
//! * deterministic — the IV is a synthetic value `H(key, plaintext)` that also
//!   authenticates the message, so identical `(key, plaintext)` pairs yield
//!   byte-identical ciphertext. Required for encrypted name components, where
//!   cache matching is byte-exact.
//! * randomized — a fresh random IV plus a separate MAC tag, used for payload
//!   segments where determinism is not wanted.
//!
//! The keystream is hash-counter based. This is a simulator-grade cipher: it
//! honours the authenticated-encryption contract but is not hardened for
//! production use.

use rand::RngCore;

use super::{hash_parts, CryptoError, SymmetricKey};

const MODE_DETERMINISTIC: u8 = 0;
const MODE_RANDOMIZED: u8 = 1;
const IV_LEN: usize = 16;
const TAG_LEN: usize = 16;

const DOM_STREAM: &[u8] = b"sdpc.cipher.stream";
const DOM_SIV: &[u8] = b"sdpc.cipher.siv";
const DOM_MAC: &[u8] = b"sdpc.cipher.mac";

fn apply_keystream(key: &SymmetricKey, iv: &[u8], data: &mut [u8]) {
    let mut block = 0u64;
    let mut off = 0;
    while off < data.len() {
        let ks = hash_parts(&[DOM_STREAM, &key.0, iv, &block.to_be_bytes()]);
        let n = (data.len() - off).min(32);
        for i in 0..n {
            data[off + i] ^= ks.0[i];
        }
        off += n;
        block += 1;
    }
}

/// Deterministic authenticated encryption: same `(key, plaintext)` always
/// yields the same bytes.
pub fn sym_encrypt_deterministic(key: &SymmetricKey, plaintext: &[u8]) -> Vec<u8> {
    let siv = hash_parts(&[DOM_SIV, &key.0, plaintext]);
    let iv = &siv.0[..IV_LEN];
    let mut ct = plaintext.to_vec();
    apply_keystream(key, iv, &mut ct);
    let mut out = Vec::with_capacity(1 + IV_LEN + ct.len());
    out.push(MODE_DETERMINISTIC);
    out.extend_from_slice(iv);
    out.extend_from_slice(&ct);
    out
}

/// Randomized authenticated encryption with a fresh IV per call.
pub fn sym_encrypt(key: &SymmetricKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Vec<u8> {
    let mut iv = [0u8; IV_LEN];
    rng.fill_bytes(&mut iv);
    let mut ct = plaintext.to_vec();
    apply_keystream(key, &iv, &mut ct);
    let tag = hash_parts(&[DOM_MAC, &key.0, &iv, &ct]);
    let mut out = Vec::with_capacity(1 + IV_LEN + ct.len() + TAG_LEN);
    out.push(MODE_RANDOMIZED);
    out.extend_from_slice(&iv);
    out.extend_from_slice(&ct);
    out.extend_from_slice(&tag.0[..TAG_LEN]);
    out
}

/// Decrypts either mode, failing with [`CryptoError::AuthFailed`] on a wrong
/// key or any ciphertext tampering.
pub fn sym_decrypt(key: &SymmetricKey, blob: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if blob.is_empty() {
        return Err(CryptoError::Malformed);
    }
    match blob[0] {
        MODE_DETERMINISTIC => {
            if blob.len() < 1 + IV_LEN {
                return Err(CryptoError::Malformed);
            }
            let iv = &blob[1..1 + IV_LEN];
            let mut pt = blob[1 + IV_LEN..].to_vec();
            apply_keystream(key, iv, &mut pt);
            let siv = hash_parts(&[DOM_SIV, &key.0, &pt]);
            if siv.0[..IV_LEN] != *iv {
                return Err(CryptoError::AuthFailed);
            }
            Ok(pt)
        }
        MODE_RANDOMIZED => {
            if blob.len() < 1 + IV_LEN + TAG_LEN {
                return Err(CryptoError::Malformed);
            }
            let iv = &blob[1..1 + IV_LEN];
            let body = &blob[1 + IV_LEN..blob.len() - TAG_LEN];
            let tag = &blob[blob.len() - TAG_LEN..];
            let expect = hash_parts(&[DOM_MAC, &key.0, iv, body]);
            if expect.0[..TAG_LEN] != *tag {
                return Err(CryptoError::AuthFailed);
            }
            let mut pt = body.to_vec();
            apply_keystream(key, iv, &mut pt);
            Ok(pt)
        }
        _ => Err(CryptoError::Malformed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn key(b: u8) -> SymmetricKey {
        SymmetricKey([b; 32])
    }

    #[test]
    fn deterministic_mode_is_stable() {
        let k = key(1);
        let a = sym_encrypt_deterministic(&k, b"test.doc/_v1/_s1");
        let b = sym_encrypt_deterministic(&k, b"test.doc/_v1/_s1");
        assert_eq!(a, b);
        assert_eq!(sym_decrypt(&k, &a).unwrap(), b"test.doc/_v1/_s1");
    }

    #[test]
    fn randomized_mode_differs_per_call() {
        let k = key(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = sym_encrypt(&k, b"payload", &mut rng);
        let b = sym_encrypt(&k, b"payload", &mut rng);
        assert_ne!(a, b);
        assert_eq!(sym_decrypt(&k, &a).unwrap(), b"payload");
        assert_eq!(sym_decrypt(&k, &b).unwrap(), b"payload");
    }

    #[test]
    fn wrong_key_is_a_distinguishable_error() {
        let a = sym_encrypt_deterministic(&key(3), b"m");
        assert_eq!(sym_decrypt(&key(4), &a), Err(CryptoError::AuthFailed));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = sym_encrypt(&key(3), b"m", &mut rng);
        assert_eq!(sym_decrypt(&key(4), &b), Err(CryptoError::AuthFailed));
    }

    #[test]
    fn truncated_blob_is_malformed() {
        assert_eq!(sym_decrypt(&key(1), &[]), Err(CryptoError::Malformed));
        assert_eq!(sym_decrypt(&key(1), &[0, 1, 2]), Err(CryptoError::Malformed));
        assert_eq!(sym_decrypt(&key(1), &[7; 40]), Err(CryptoError::Malformed));
    }

    proptest! {
        #[test]
        fn round_trip_any_message(msg in proptest::collection::vec(any::<u8>(), 0..512), kb in any::<u8>(), seed in any::<u64>()) {
            let k = key(kb);
            let det = sym_encrypt_deterministic(&k, &msg);
            prop_assert_eq!(sym_decrypt(&k, &det).unwrap(), msg.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rnd = sym_encrypt(&k, &msg, &mut rng);
            prop_assert_eq!(sym_decrypt(&k, &rnd).unwrap(), msg);
        }

        #[test]
        fn tampering_is_rejected(msg in proptest::collection::vec(any::<u8>(), 1..128), pos in any::<usize>(), bit in 0u8..8) {
            let k = key(9);
            let mut blob = sym_encrypt_deterministic(&k, &msg);
            let idx = 1 + pos % (blob.len() - 1); // keep the mode byte
            blob[idx] ^= 1 << bit;
            prop_assert!(sym_decrypt(&k, &blob).is_err());
        }
    }
}
