//! Independent reference implementations backing the test-vector files under
//! `vectors/`.
//!
//! The hash here is written from the FIPS 180-4 description and shares no
//! code with the `sha2`-backed implementation in [`crate::crypto`]; the chain
//! and framing walkers are likewise reimplemented. Test suites compare the
//! two routes, and `src/bin/gen_vectors.rs` regenerates the vector files from
//! this side only. Keep this module free of `crate::crypto` imports.

/// Reference SHA-256.
pub fn ref_sha256(data: &[u8]) -> [u8; 32] {
    const K: [u32; 64] = [
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2,
    ];
    let mut h: [u32; 8] = [
        0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab,
        0x5be0cd19,
    ];

    // Padding: 0x80, zeros, 64-bit bit length.
    let bit_len = (data.len() as u64).wrapping_mul(8);
    let mut msg = data.to_vec();
    msg.push(0x80);
    while msg.len() % 64 != 56 {
        msg.push(0);
    }
    msg.extend_from_slice(&bit_len.to_be_bytes());

    for chunk in msg.chunks_exact(64) {
        let mut w = [0u32; 64];
        for (i, word) in chunk.chunks_exact(4).enumerate() {
            w[i] = u32::from_be_bytes(word.try_into().unwrap());
        }
        for i in 16..64 {
            let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
            let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16]
                .wrapping_add(s0)
                .wrapping_add(w[i - 7])
                .wrapping_add(s1);
        }
        let (mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh) =
            (h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7]);
        for i in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh
                .wrapping_add(s1)
                .wrapping_add(ch)
                .wrapping_add(K[i])
                .wrapping_add(w[i]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        h[0] = h[0].wrapping_add(a);
        h[1] = h[1].wrapping_add(b);
        h[2] = h[2].wrapping_add(c);
        h[3] = h[3].wrapping_add(d);
        h[4] = h[4].wrapping_add(e);
        h[5] = h[5].wrapping_add(f);
        h[6] = h[6].wrapping_add(g);
        h[7] = h[7].wrapping_add(hh);
    }

    let mut out = [0u8; 32];
    for (i, word) in h.iter().enumerate() {
        out[i * 4..i * 4 + 4].copy_from_slice(&word.to_be_bytes());
    }
    out
}

/// Reference framing for multi-argument hashing: u64 big-endian length before
/// each part.
pub fn ref_frame(parts: &[&[u8]]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(&(p.len() as u64).to_be_bytes());
        out.extend_from_slice(p);
    }
    out
}

pub fn ref_hash_parts(parts: &[&[u8]]) -> [u8; 32] {
    ref_sha256(&ref_frame(parts))
}

/// `l`-fold application of the hash, the independent route for chain checks.
pub fn ref_iterate(seed: [u8; 32], l: usize) -> [u8; 32] {
    let mut cur = seed;
    for _ in 0..l {
        cur = ref_sha256(&cur);
    }
    cur
}

/// One parsed `input-hex → digest-hex` test-vector record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorRecord {
    pub input: Vec<u8>,
    pub digest: [u8; 32],
}

pub const VECTOR_SEPARATOR: &str = " → ";

pub fn format_record(input: &[u8], digest: &[u8; 32]) -> String {
    format!("{}{}{}", hex::encode(input), VECTOR_SEPARATOR, hex::encode(digest))
}

pub fn parse_records(text: &str) -> Result<Vec<VectorRecord>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        // Only trim the end: an empty-input record starts with the separator.
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (input, digest) = line
            .split_once(VECTOR_SEPARATOR)
            .ok_or_else(|| format!("line {}: missing separator", lineno + 1))?;
        let input = hex::decode(input.trim()).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let digest = hex::decode(digest.trim()).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let digest: [u8; 32] = digest
            .try_into()
            .map_err(|_| format!("line {}: digest is not 32 bytes", lineno + 1))?;
        out.push(VectorRecord { input, digest });
    }
    Ok(out)
}

/// Deterministic pseudo-random inputs for vector generation; a tiny LCG so
/// the oracle side does not depend on the same RNG crates as the
/// implementation.
pub fn lcg_bytes(seed: u64, len: usize) -> Vec<u8> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        out.push((state >> 33) as u8);
    }
    out
}

/// The hash vector set: plain inputs plus framed multi-argument cases.
pub fn hash_vector_lines() -> Vec<String> {
    let mut lines = vec![
        "# hash test vectors: input-hex → digest-hex (empty input on first line)".to_string(),
    ];
    let mut push = |input: &[u8]| {
        lines.push(format_record(input, &ref_sha256(input)));
    };
    push(b"");
    push(b"abc");
    push(b"test.doc/_v1/_s0");
    // Framing pair that must not collide: H("ab","c") vs H("a","bc").
    push(&ref_frame(&[b"ab", b"c"]));
    push(&ref_frame(&[b"a", b"bc"]));
    for i in 0..16u64 {
        push(&lcg_bytes(i, 3 + (i as usize * 7) % 61));
    }
    lines
}

/// The chain vector set: 64 steps of the generator recurrence from a fixed
/// seed, one record per step (input = ζ_l, digest = ζ_{l+1}).
pub fn chain_vector_lines() -> Vec<String> {
    let mut lines =
        vec!["# generator chain vectors: each line is one step ζ_l → ζ_l+1".to_string()];
    let mut cur = ref_sha256(b"sdpc chain vector seed");
    for _ in 0..64 {
        let next = ref_sha256(&cur);
        lines.push(format_record(&cur, &next));
        cur = next;
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_known_sha256_vectors() {
        // FIPS 180-4 example digests.
        assert_eq!(
            hex::encode(ref_sha256(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            hex::encode(ref_sha256(b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hex::encode(ref_sha256(
                b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"
            )),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"
        );
    }

    #[test]
    fn record_format_round_trips() {
        let rec = format_record(b"abc", &ref_sha256(b"abc"));
        let parsed = parse_records(&rec).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].input, b"abc");
        assert_eq!(parsed[0].digest, ref_sha256(b"abc"));
    }
}
