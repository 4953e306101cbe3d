//! Seed plumbing: label-derived child seeds and counter-based per-index
//! generators.
//!
//! Every stochastic routine in the crate draws from a generator keyed by
//! `(seed, index)` rather than from one shared stream, so results are
//! identical no matter how work is split across threads. Subsystems derive
//! their seeds from a single top-level seed through fixed labels, which keeps
//! partial reruns stable.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; full-avalanche mix of a 64-bit word.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed for a named subsystem from a top-level seed.
pub fn child_seed(seed: u64, label: &str) -> u64 {
    let mut h = splitmix64(seed);
    for &b in label.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h
}

/// Counter-based generator for item `index` of the stream named by `seed`.
///
/// Deterministic in `(seed, index)` alone, so a loop over indices may be
/// split across threads in any way without changing the output.
pub fn indexed_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)))
}
