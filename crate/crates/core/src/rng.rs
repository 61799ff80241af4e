//! Counter-style deterministic PRNG and seed derivation.
//!
//! Reproducibility contract: every random quantity in this crate is a pure
//! function of a 64-bit seed, and child seeds are derived as
//! `derive_seed(parent, child_index)` so that samplers, model
//! initializations, and ensemble members can be reproduced independently of
//! execution order.

/// Golden-ratio increment used by the SplitMix64 sequence.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective 64-bit mix.
#[inline]
pub fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed-derivation rule: `child = mix(parent XOR mix(index + 1))`.
///
/// The `+ 1` keeps `derive_seed(s, 0)` distinct from `mix(s)` itself.
pub fn derive_seed(parent: u64, child_index: u64) -> u64 {
    mix(parent ^ mix(child_index.wrapping_add(1)))
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform sign, +1.0 or -1.0.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Index in `[0, n)`, via rejection-free scaling (fine for small n).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let u = self.next_f64();
        let i = (u * n as f64) as usize;
        if i >= n {
            n - 1
        } else {
            i
        }
    }
}
