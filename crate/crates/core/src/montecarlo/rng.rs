//! SplitMix64, pinned so that simulation output is portable.
//!
//! The generator state advances by the golden-ratio increment
//! `0x9E3779B97F4A7C15` and each output is the state passed through the
//! 64-bit finalizer [`mix64`]. Trial `t` of a batch with master seed `m`
//! uses seed [`trial_seed`]`(m, t) = mix64(m + (t + 1) * gamma)`, which is
//! the `(t + 1)`-th output of `SplitMix64::new(m)`.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stafford's "Mix13" avalanche finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `t` under `master`.
#[inline]
pub fn trial_seed(master: u64, t: u64) -> u64 {
    mix64(master.wrapping_add(t.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
