//! Counter-based random streams.
//!
//! A run is identified by a 64-bit key derived from `(seed, run index)`.
//! Every draw inside the run is a pure function of the key and a counter, so
//! results do not depend on how runs are scheduled across threads.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub const fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of stream `index` under `seed`.
#[inline]
pub const fn stream_key(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(index.wrapping_mul(GOLDEN) ^ 0xA076_1D64_78BD_642F))
}

/// The `counter`-th 64-bit word of stream `key`.
#[inline]
pub const fn word(key: u64, counter: u64) -> u64 {
    mix64(key ^ mix64(counter.wrapping_add(0xE703_7ED1_A0B4_28DB)))
}

/// Uniform in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..len` (multiply-shift; the bias is below 2^-32 for
/// `len < 2^32`).
#[inline]
pub fn index(bits: u64, len: usize) -> usize {
    ((u128::from(bits) * len as u128) >> 64) as usize
}
