//! The hybrid naming scheme.
//!
//! Two protected name forms share one component encoding:
//!
//! * first-interest names `prefix / Hash(n_S) / E_{K_TS}(path)` — unique per
//!   (consumer, publisher), so the subscription interest always reaches the
//!   publisher with no cache hit;
//! * shared segment names `prefix / Hash(KEY_MSG) / E_{K_l}(path)` — byte
//!   identical for every authorized consumer, so cached segments are shared.
//!
//! The routable prefix stays plaintext for FIB forwarding; everything after
//! it reveals nothing about the object. Encoding is a tagged, length-prefixed
//! component sequence and equality is byte equality of the full encoding,
//! which is exactly what content-store lookup keys on.

use std::fmt;

use thiserror::Error;

use crate::crypto::{
    hash, sym_decrypt, sym_encrypt_deterministic, CryptoError, Digest256, KeyChain, SecretNumber,
    SymmetricKey,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NameError {
    #[error("invalid object path: {0}")]
    InvalidObjectPath(String),
    #[error("segment index out of range")]
    SegmentOutOfRange,
    #[error("name parse error: {0}")]
    Parse(&'static str),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

const TAG_TEXT: u8 = 0x01;
const TAG_CONSUMER_DIGEST: u8 = 0x02;
const TAG_KEYMSG_DIGEST: u8 = 0x03;
const TAG_SEALED_PATH: u8 = 0x04;

/// Routable human-readable prefix components, e.g. `["korea.ac.kr", "~fil"]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prefix(pub Vec<String>);

impl Prefix {
    pub fn new<S: Into<String>>(components: Vec<S>) -> Self {
        Prefix(components.into_iter().map(Into::into).collect())
    }

    pub fn first(&self) -> Option<&str> {
        self.0.first().map(|s| s.as_str())
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join("/"))
    }
}

/// Content object identity: name plus version (`O_j`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId {
    pub name: String,
    pub version: u32,
}

impl ObjectId {
    pub fn new<S: Into<String>>(name: S, version: u32) -> Self {
        ObjectId {
            name: name.into(),
            version,
        }
    }

    /// Canonical `name/_v<version>` string hashed into the commitment.
    pub fn canonical(&self) -> String {
        format!("{}/_v{}", self.name, self.version)
    }

    pub fn segment_path(&self, segment: u32) -> ObjectPath {
        ObjectPath {
            object: self.name.clone(),
            version: self.version,
            segment,
        }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical())
    }
}

/// A fully qualified segment path `<object>/_v<d>/_s<d>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObjectPath {
    pub object: String,
    pub version: u32,
    pub segment: u32,
}

impl ObjectPath {
    pub fn parse(s: &str) -> Result<Self, NameError> {
        let err = || NameError::InvalidObjectPath(s.to_string());
        let (rest, seg) = s.rsplit_once("/_s").ok_or_else(err)?;
        let (object, ver) = rest.rsplit_once("/_v").ok_or_else(err)?;
        if object.is_empty() {
            return Err(err());
        }
        let segment: u32 = seg.parse().map_err(|_| err())?;
        let version: u32 = ver.parse().map_err(|_| err())?;
        Ok(ObjectPath {
            object: object.to_string(),
            version,
            segment,
        })
    }

    pub fn object_id(&self) -> ObjectId {
        ObjectId::new(self.object.clone(), self.version)
    }
}

impl fmt::Display for ObjectPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/_v{}/_s{}", self.object, self.version, self.segment)
    }
}

/// Structural classification of a parsed name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NameKind {
    /// Consumer name space: unique between one consumer and the publisher,
    /// used only for acquiring key material.
    FirstInterest,
    /// Shared authoritative name space: identical for all authorized
    /// consumers, enabling cache hits.
    SharedSegment,
    /// Legacy / native NDN name with plaintext components only.
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Component {
    Text(String),
    ConsumerDigest(Digest256),
    KeyMsgDigest(Digest256),
    SealedPath(Vec<u8>),
}

/// A content name. Equality of two names is byte equality of their
/// encodings.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SdpcName {
    components: Vec<Component>,
    kind: NameKind,
}

impl SdpcName {
    pub fn kind(&self) -> NameKind {
        self.kind
    }

    /// The plaintext digest component, if any.
    pub fn digest(&self) -> Option<&Digest256> {
        self.components.iter().find_map(|c| match c {
            Component::ConsumerDigest(d) | Component::KeyMsgDigest(d) => Some(d),
            _ => None,
        })
    }

    /// The encrypted path component, if any.
    pub fn sealed_path(&self) -> Option<&[u8]> {
        self.components.iter().find_map(|c| match c {
            Component::SealedPath(b) => Some(b.as_slice()),
            _ => None,
        })
    }

    /// Leading plaintext components.
    pub fn prefix_components(&self) -> Vec<&str> {
        self.components
            .iter()
            .map_while(|c| match c {
                Component::Text(t) => Some(t.as_str()),
                _ => None,
            })
            .collect()
    }

    /// First plaintext component, the FIB routing key.
    pub fn route_key(&self) -> Option<&str> {
        self.components.iter().find_map(|c| match c {
            Component::Text(t) => Some(t.as_str()),
            _ => None,
        })
    }

    /// Byte-exact encoded form used for cache and PIT matching.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.components {
            match c {
                Component::Text(t) => {
                    out.push(TAG_TEXT);
                    out.extend_from_slice(&(t.len() as u32).to_be_bytes());
                    out.extend_from_slice(t.as_bytes());
                }
                Component::ConsumerDigest(d) => {
                    out.push(TAG_CONSUMER_DIGEST);
                    out.extend_from_slice(&32u32.to_be_bytes());
                    out.extend_from_slice(d.as_bytes());
                }
                Component::KeyMsgDigest(d) => {
                    out.push(TAG_KEYMSG_DIGEST);
                    out.extend_from_slice(&32u32.to_be_bytes());
                    out.extend_from_slice(d.as_bytes());
                }
                Component::SealedPath(b) => {
                    out.push(TAG_SEALED_PATH);
                    out.extend_from_slice(&(b.len() as u32).to_be_bytes());
                    out.extend_from_slice(b);
                }
            }
        }
        out
    }

    /// Parses and classifies an encoded name. Classification is purely
    /// structural; nothing is decrypted.
    pub fn parse(encoded: &[u8]) -> Result<SdpcName, NameError> {
        if encoded.is_empty() {
            return Err(NameError::Parse("empty name"));
        }
        let mut components = Vec::new();
        let mut pos = 0usize;
        while pos < encoded.len() {
            if pos + 5 > encoded.len() {
                return Err(NameError::Parse("truncated component header"));
            }
            let tag = encoded[pos];
            let len =
                u32::from_be_bytes(encoded[pos + 1..pos + 5].try_into().unwrap()) as usize;
            pos += 5;
            if pos + len > encoded.len() {
                return Err(NameError::Parse("truncated component body"));
            }
            let body = &encoded[pos..pos + len];
            pos += len;
            let comp = match tag {
                TAG_TEXT => Component::Text(
                    String::from_utf8(body.to_vec())
                        .map_err(|_| NameError::Parse("text component not utf-8"))?,
                ),
                TAG_CONSUMER_DIGEST => {
                    let d: [u8; 32] = body
                        .try_into()
                        .map_err(|_| NameError::Parse("digest component must be 32 bytes"))?;
                    Component::ConsumerDigest(Digest256(d))
                }
                TAG_KEYMSG_DIGEST => {
                    let d: [u8; 32] = body
                        .try_into()
                        .map_err(|_| NameError::Parse("digest component must be 32 bytes"))?;
                    Component::KeyMsgDigest(Digest256(d))
                }
                TAG_SEALED_PATH => Component::SealedPath(body.to_vec()),
                _ => return Err(NameError::Parse("unknown component tag")),
            };
            components.push(comp);
        }
        let kind = classify(&components)?;
        Ok(SdpcName { components, kind })
    }

    fn protected(
        prefix: &Prefix,
        digest: Component,
        sealed: Vec<u8>,
        kind: NameKind,
    ) -> SdpcName {
        let mut components: Vec<Component> =
            prefix.0.iter().map(|t| Component::Text(t.clone())).collect();
        components.push(digest);
        components.push(Component::SealedPath(sealed));
        SdpcName { components, kind }
    }

    /// Assembles a protected-shape name from raw parts. This is the
    /// structure any observer can produce (component framing is public);
    /// holding a *valid* digest and ciphertext is the hard part.
    pub fn protected_from_parts(
        prefix: &Prefix,
        kind: NameKind,
        digest: Digest256,
        sealed_path: Vec<u8>,
    ) -> SdpcName {
        let digest = match kind {
            NameKind::SharedSegment => Component::KeyMsgDigest(digest),
            _ => Component::ConsumerDigest(digest),
        };
        let kind = match digest {
            Component::KeyMsgDigest(_) => NameKind::SharedSegment,
            _ => NameKind::FirstInterest,
        };
        SdpcName::protected(prefix, digest, sealed_path, kind)
    }

    /// A plaintext legacy name from raw components.
    pub fn plain<S: Into<String>>(components: Vec<S>) -> SdpcName {
        SdpcName {
            components: components
                .into_iter()
                .map(|s| Component::Text(s.into()))
                .collect(),
            kind: NameKind::Plain,
        }
    }
}

fn classify(components: &[Component]) -> Result<NameKind, NameError> {
    let n = components.len();
    let texts = components
        .iter()
        .take_while(|c| matches!(c, Component::Text(_)))
        .count();
    if texts == n {
        if n == 0 {
            return Err(NameError::Parse("empty name"));
        }
        return Ok(NameKind::Plain);
    }
    // Protected shape: text+ digest sealed-path, nothing else.
    if texts + 2 != n {
        return Err(NameError::Parse("unexpected component layout"));
    }
    let kind = match (&components[texts], &components[texts + 1]) {
        (Component::ConsumerDigest(_), Component::SealedPath(_)) => NameKind::FirstInterest,
        (Component::KeyMsgDigest(_), Component::SealedPath(_)) => NameKind::SharedSegment,
        _ => return Err(NameError::Parse("unexpected component layout")),
    };
    if texts == 0 {
        return Err(NameError::Parse("protected name lacks routable prefix"));
    }
    Ok(kind)
}

/// Consumer-unique name for the first (subscription) interest:
/// `prefix / Hash(n_S) / E_{K_TS}(object_path)`.
pub fn first_interest_name(
    prefix: &Prefix,
    n_s: &SecretNumber,
    k_ts: &SymmetricKey,
    object_path: &str,
) -> Result<SdpcName, NameError> {
    let path = ObjectPath::parse(object_path)?;
    let sealed = sym_encrypt_deterministic(k_ts, path.to_string().as_bytes());
    Ok(SdpcName::protected(
        prefix,
        Component::ConsumerDigest(n_s.digest()),
        sealed,
        NameKind::FirstInterest,
    ))
}

/// Shared authoritative name for one content segment:
/// `prefix / Hash(KEY_MSG) / E_{K_l}(object_path with _s<l>)`.
pub fn segment_name(
    prefix: &Prefix,
    key_msg: &Digest256,
    chain: &KeyChain,
    object: &ObjectId,
    segment_index: usize,
) -> Result<SdpcName, NameError> {
    if segment_index > chain.length {
        return Err(NameError::SegmentOutOfRange);
    }
    let key = chain.segment_key(segment_index)?;
    let path = object.segment_path(segment_index as u32);
    let sealed = sym_encrypt_deterministic(key, path.to_string().as_bytes());
    Ok(SdpcName::protected(
        prefix,
        Component::KeyMsgDigest(hash(key_msg.as_bytes())),
        sealed,
        NameKind::SharedSegment,
    ))
}

/// Recovers the object path from a protected name given the right key (the
/// publisher or manager side of a first interest, or any key-holder for a
/// segment name).
pub fn open_sealed_path(name: &SdpcName, key: &SymmetricKey) -> Result<ObjectPath, NameError> {
    let sealed = name
        .sealed_path()
        .ok_or(NameError::Parse("name has no sealed path"))?;
    let pt = sym_decrypt(key, sealed)?;
    let s = String::from_utf8(pt).map_err(|_| NameError::Parse("sealed path not utf-8"))?;
    ObjectPath::parse(&s)
}

impl fmt::Display for SdpcName {
    /// Debug rendering: `prefix/#<hex8>/enc:<hex...>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in &self.components {
            if !first {
                write!(f, "/")?;
            }
            first = false;
            match c {
                Component::Text(t) => write!(f, "{t}")?,
                Component::ConsumerDigest(d) | Component::KeyMsgDigest(d) => {
                    write!(f, "#{}", &d.to_hex()[..8])?
                }
                Component::SealedPath(b) => write!(f, "enc:{}", hex::encode(b))?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{
        build_chain, commitment_generator, subscription_key, PublisherKeyPair,
    };
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (PublisherKeyPair, Prefix) {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (
            PublisherKeyPair::generate(&mut rng),
            Prefix::new(vec!["korea.ac.kr", "~fil"]),
        )
    }

    #[test]
    fn distinct_consumers_get_distinct_first_interest_names() {
        let (kp, prefix) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = SecretNumber::fresh(&mut rng);
        let b = SecretNumber::fresh(&mut rng);
        let ka = subscription_key(kp.public(), &a);
        let kb = subscription_key(kp.public(), &b);
        let na = first_interest_name(&prefix, &a, &ka, "test.doc/_v1/_s0").unwrap();
        let nb = first_interest_name(&prefix, &b, &kb, "test.doc/_v1/_s0").unwrap();
        assert_ne!(na.encode(), nb.encode());
        // Same consumer twice: identical bytes.
        let na2 = first_interest_name(&prefix, &a, &ka, "test.doc/_v1/_s0").unwrap();
        assert_eq!(na.encode(), na2.encode());
    }

    #[test]
    fn publisher_side_recovers_the_path() {
        let (kp, prefix) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n_s = SecretNumber::fresh(&mut rng);
        let k_ts = subscription_key(kp.public(), &n_s);
        let name = first_interest_name(&prefix, &n_s, &k_ts, "test.doc/_v1/_s0").unwrap();
        let path = open_sealed_path(&name, &k_ts).unwrap();
        assert_eq!(path.to_string(), "test.doc/_v1/_s0");
    }

    #[test]
    fn malformed_object_path_rejected() {
        let (kp, prefix) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n_s = SecretNumber::fresh(&mut rng);
        let k_ts = subscription_key(kp.public(), &n_s);
        for bad in ["test.doc", "test.doc/_v1", "/_v1/_s0", "test.doc/_vx/_s0"] {
            assert!(first_interest_name(&prefix, &n_s, &k_ts, bad).is_err());
        }
    }

    #[test]
    fn shared_segment_names_are_byte_identical_across_holders() {
        let (kp, prefix) = setup();
        let object = ObjectId::new("test.doc", 1);
        let z0 = commitment_generator(0, &object.canonical()).unwrap();
        let chain = build_chain(z0, 10, kp.public(), &object.canonical(), 0).unwrap();
        // Consumers A and B both hold the chain material.
        let a = segment_name(&prefix, &chain.key_msg, &chain, &object, 1).unwrap();
        let b = segment_name(&prefix, &chain.key_msg, &chain, &object, 1).unwrap();
        assert_eq!(a.encode(), b.encode());
        let s2 = segment_name(&prefix, &chain.key_msg, &chain, &object, 2).unwrap();
        assert_ne!(a.encode(), s2.encode());
        assert!(segment_name(&prefix, &chain.key_msg, &chain, &object, 11).is_err());
    }

    #[test]
    fn outsider_cannot_predict_segment_names() {
        let (kp, prefix) = setup();
        let object = ObjectId::new("test.doc", 1);
        let z0 = commitment_generator(0, &object.canonical()).unwrap();
        let chain = build_chain(z0, 10, kp.public(), &object.canonical(), 0).unwrap();
        let real: std::collections::HashSet<Vec<u8>> = (0..=10)
            .map(|i| {
                segment_name(&prefix, &chain.key_msg, &chain, &object, i)
                    .unwrap()
                    .encode()
            })
            .collect();
        // Brute-force trial: outsider guesses digests and keys at random.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut hits = 0;
        for _ in 0..10_000 {
            let fake_keymsg = Digest256(SecretNumber::fresh(&mut rng).0);
            let fake_key = SymmetricKey(SecretNumber::fresh(&mut rng).0);
            let sealed = sym_encrypt_deterministic(&fake_key, b"test.doc/_v1/_s1");
            let guess = SdpcName::protected(
                &prefix,
                Component::KeyMsgDigest(hash(fake_keymsg.as_bytes())),
                sealed,
                NameKind::SharedSegment,
            );
            if real.contains(&guess.encode()) {
                hits += 1;
            }
        }
        assert_eq!(hits, 0);
    }

    #[test]
    fn parse_round_trip_and_classification() {
        let (kp, prefix) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n_s = SecretNumber::fresh(&mut rng);
        let k_ts = subscription_key(kp.public(), &n_s);
        let fi = first_interest_name(&prefix, &n_s, &k_ts, "test.doc/_v1/_s0").unwrap();
        let parsed = SdpcName::parse(&fi.encode()).unwrap();
        assert_eq!(parsed.kind(), NameKind::FirstInterest);
        assert_eq!(parsed, fi);

        let plain = SdpcName::plain(vec!["a", "b", "c"]);
        let parsed = SdpcName::parse(&plain.encode()).unwrap();
        assert_eq!(parsed.kind(), NameKind::Plain);

        let enc = fi.encode();
        assert!(SdpcName::parse(&enc[..enc.len() - 3]).is_err());
        assert!(SdpcName::parse(&[0xff, 0, 0, 0, 1, 7]).is_err());
    }

    #[test]
    fn encoded_name_hides_the_object_path() {
        let (kp, prefix) = setup();
        let object = ObjectId::new("secret-report.pdf", 3);
        let z0 = commitment_generator(0, &object.canonical()).unwrap();
        let chain = build_chain(z0, 4, kp.public(), &object.canonical(), 0).unwrap();
        let name = segment_name(&prefix, &chain.key_msg, &chain, &object, 0)
            .unwrap()
            .encode();
        for needle in ["secret-report", "_v3", "_s0", ".pdf"] {
            assert!(
                !name
                    .windows(needle.len())
                    .any(|w| w == needle.as_bytes()),
                "plaintext {needle:?} leaked into encoded name"
            );
        }
    }

    #[test]
    fn debug_rendering_shape() {
        let (kp, prefix) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n_s = SecretNumber::fresh(&mut rng);
        let k_ts = subscription_key(kp.public(), &n_s);
        let name = first_interest_name(&prefix, &n_s, &k_ts, "test.doc/_v1/_s0").unwrap();
        let s = name.to_string();
        assert!(s.starts_with("korea.ac.kr/~fil/#"));
        assert!(s.contains("/enc:"));
    }

    proptest! {
        // Injectivity at desk scale: distinct (consumer, object) pairs never
        // collide in encoded first-interest names.
        #[test]
        fn first_interest_names_injective(seed in any::<u64>()) {
            let (kp, prefix) = setup();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seen = std::collections::HashMap::new();
            for i in 0..200u32 {
                let n_s = SecretNumber::fresh(&mut rng);
                let k_ts = subscription_key(kp.public(), &n_s);
                for obj in 0..5u32 {
                    let path = format!("obj{obj}/_v1/_s0");
                    let name = first_interest_name(&prefix, &n_s, &k_ts, &path).unwrap().encode();
                    if let Some(prev) = seen.insert(name, (i, obj)) {
                        prop_assert_eq!(prev, (i, obj));
                    }
                }
            }
        }

        #[test]
        fn object_path_display_parse_round_trip(obj in "[a-z][a-z0-9.]{0,12}", v in 0u32..100, s in 0u32..1000) {
            let p = ObjectPath { object: obj, version: v, segment: s };
            prop_assert_eq!(ObjectPath::parse(&p.to_string()).unwrap(), p);
        }
    }
}
