use sha2::{Digest, Sha256};

/// Deterministic 64-bit value derived from a seed and a tag; never zero.
pub fn mix(seed: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    let d = h.finalize();
    let v = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
    v.max(1)
}
