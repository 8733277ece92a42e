//! Deterministic pseudo-random numbers for frozen white-noise coefficients.
//!
//! The generator is SplitMix64 (Steele, Lea, Flood; the `java.util.SplittableRandom`
//! finalizer), chosen because it is tiny, fast, passes BigCrush on its output
//! stream, and is trivially version-pinned: the constants below are the whole
//! algorithm. Identical seeds reproduce identical streams on every platform,
//! which the run manifests rely on.

/// SplitMix64 stream. One `u64` of state, one multiply-shift-xor finalizer per draw.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
