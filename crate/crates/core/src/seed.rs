//! Stable seed derivation. Sub-seeds depend only on their inputs, never on
//! scheduling, so concurrent agents reproduce sequential results.

use std::hash::Hasher;

use fnv::FnvHasher;

/// FNV-1a over the base seed and each part, with a separator between parts.
pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&base.to_le_bytes());
    for p in parts {
        h.write(p.as_bytes());
        h.write_u8(0xff);
    }
    h.finish()
}
