//! Toy public-key sealing for tickets and manager-to-publisher fields.
//!
//! Textbook RSA (256-bit modulus, e = 65537, no padding) wrapping a random
//! session secret, which keys the symmetric cipher for the body. Deliberately
//! small and unpadded: the simulator needs the open/seal access-control
//! semantics and a stable canonical public-key encoding (which still exceeds
//! 256 bits, so key-derivation XOR requires the compression step), not
//! production security.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::RngCore;

use super::{hash_parts, sym_decrypt, sym_encrypt, CryptoError, SymmetricKey};
use crate::wire::{Reader, Writer};

const PRIME_BITS: u64 = 128;
const MODULUS_BYTES: usize = 32;
const DOM_SEAL: &[u8] = b"sdpc.seal.kdf";

/// Publisher public key `K_p` with a stable canonical byte encoding (the
/// encoding is what key derivations hash).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    e: BigUint,
}

impl PublicKey {
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.put_bytes(&self.n.to_bytes_be());
        w.put_bytes(&self.e.to_bytes_be());
        w.finish()
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let mut r = Reader::new(bytes);
        let n = r.take_bytes().map_err(|_| CryptoError::Malformed)?;
        let e = r.take_bytes().map_err(|_| CryptoError::Malformed)?;
        r.expect_end().map_err(|_| CryptoError::Malformed)?;
        Ok(PublicKey {
            n: BigUint::from_bytes_be(n),
            e: BigUint::from_bytes_be(e),
        })
    }
}

/// Sealing secret held by the publisher alone.
#[derive(Clone)]
pub struct PrivateKey {
    n: BigUint,
    d: BigUint,
}

impl std::fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PrivateKey(..)")
    }
}

#[derive(Clone, Debug)]
pub struct PublisherKeyPair {
    public: PublicKey,
    private: PrivateKey,
}

impl PublisherKeyPair {
    pub fn generate(rng: &mut dyn RngCore) -> Self {
        loop {
            let p = gen_prime(rng);
            let q = gen_prime(rng);
            if p == q {
                continue;
            }
            let n = &p * &q;
            let phi = (&p - 1u32) * (&q - 1u32);
            let e = BigUint::from(65537u32);
            if phi.gcd(&e) != BigUint::one() {
                continue;
            }
            let Some(d) = mod_inverse(&e, &phi) else {
                continue;
            };
            return PublisherKeyPair {
                public: PublicKey { n: n.clone(), e },
                private: PrivateKey { n, d },
            };
        }
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn private(&self) -> &PrivateKey {
        &self.private
    }
}

fn random_below(rng: &mut dyn RngCore, bound: &BigUint) -> BigUint {
    let bytes = (bound.bits() as usize).div_ceil(8) + 8;
    let mut buf = vec![0u8; bytes];
    rng.fill_bytes(&mut buf);
    BigUint::from_bytes_be(&buf) % bound
}

fn gen_prime(rng: &mut dyn RngCore) -> BigUint {
    let bytes = (PRIME_BITS / 8) as usize;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        buf[0] |= 0x80; // full bit length
        buf[bytes - 1] |= 1; // odd
        let cand = BigUint::from_bytes_be(&buf);
        if is_probable_prime(&cand, rng) {
            return cand;
        }
    }
}

fn is_probable_prime(n: &BigUint, rng: &mut dyn RngCore) -> bool {
    let one = BigUint::one();
    let two = &one + &one;
    if n < &two {
        return false;
    }
    // Quick trial division by small primes.
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let bp = BigUint::from(p);
        if n == &bp {
            return true;
        }
        if (n % &bp).is_zero() {
            return false;
        }
    }
    // Miller-Rabin with 20 random witnesses.
    let n_minus_1 = n - &one;
    let mut d = n_minus_1.clone();
    let mut s = 0u32;
    while (&d % &two).is_zero() {
        d >>= 1;
        s += 1;
    }
    'witness: for _ in 0..20 {
        let a = random_below(rng, &(n - &two - &one)) + &two;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a.clone());
    let m = BigInt::from(m.clone());
    let ext = a.extended_gcd(&m);
    if ext.gcd != BigInt::one() {
        return None;
    }
    let mut x = ext.x % &m;
    if x.is_negative() {
        x += &m;
    }
    x.to_biguint()
}

/// Seals `plaintext` so only the matching private key can open it.
pub fn seal(public: &PublicKey, plaintext: &[u8], rng: &mut dyn RngCore) -> Vec<u8> {
    // Random session secret in [2, n).
    let s = loop {
        let s = random_below(rng, &public.n);
        if s > BigUint::one() {
            break s;
        }
    };
    let c1 = s.modpow(&public.e, &public.n);
    let key = session_secret_key(&s);
    let body = sym_encrypt(&key, plaintext, rng);
    let mut w = Writer::new();
    w.put_bytes(&c1.to_bytes_be());
    w.put_bytes(&body);
    w.finish()
}

/// Opens a sealed blob; fails for any key other than the sealing target.
pub fn open(private: &PrivateKey, blob: &[u8]) -> Result<Vec<u8>, CryptoError> {
    let mut r = Reader::new(blob);
    let c1 = r.take_bytes().map_err(|_| CryptoError::Malformed)?;
    let body = r.take_bytes().map_err(|_| CryptoError::Malformed)?;
    r.expect_end().map_err(|_| CryptoError::Malformed)?;
    let c1 = BigUint::from_bytes_be(c1);
    if c1 >= private.n {
        return Err(CryptoError::Malformed);
    }
    let s = c1.modpow(&private.d, &private.n);
    let key = session_secret_key(&s);
    sym_decrypt(&key, body)
}

fn session_secret_key(s: &BigUint) -> SymmetricKey {
    let mut padded = vec![0u8; MODULUS_BYTES];
    let raw = s.to_bytes_be();
    let off = MODULUS_BYTES.saturating_sub(raw.len());
    padded[off..].copy_from_slice(&raw[raw.len().saturating_sub(MODULUS_BYTES)..]);
    SymmetricKey(hash_parts(&[DOM_SEAL, &padded]).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seal_open_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let kp = PublisherKeyPair::generate(&mut rng);
        let blob = seal(kp.public(), b"ticket body", &mut rng);
        assert_eq!(open(kp.private(), &blob).unwrap(), b"ticket body");
    }

    #[test]
    fn wrong_private_key_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kp_j = PublisherKeyPair::generate(&mut rng);
        let kp_k = PublisherKeyPair::generate(&mut rng);
        let blob = seal(kp_j.public(), b"for j only", &mut rng);
        assert!(open(kp_k.private(), &blob).is_err());
    }

    #[test]
    fn canonical_encoding_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let kp = PublisherKeyPair::generate(&mut rng);
        let enc = kp.public().canonical_bytes();
        // Canonical form must exceed 256 bits so the XOR compression step in
        // the subscription key derivation is actually required.
        assert!(enc.len() > 32);
        assert_eq!(&PublicKey::from_canonical_bytes(&enc).unwrap(), kp.public());
    }

    #[test]
    fn deterministic_keygen_per_seed() {
        let a = PublisherKeyPair::generate(&mut ChaCha8Rng::seed_from_u64(13));
        let b = PublisherKeyPair::generate(&mut ChaCha8Rng::seed_from_u64(13));
        assert_eq!(a.public(), b.public());
    }
}
