use std::collections::VecDeque;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A uniform draw in `[0, 1)` with 32-bit resolution: `raw / 2^32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prn(u32);

impl Prn {
    pub fn from_raw(raw: u32) -> Self {
        Self(raw)
    }

    /// Nearest-below 32-bit draw for `x` in `[0, 1)`; values outside are clamped.
    pub fn from_f64(x: f64) -> Self {
        let scaled = (x.clamp(0.0, 1.0) * 4_294_967_296.0).floor();
        Self(scaled.min(u32::MAX as f64) as u32)
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    /// Exact in `f64`.
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 4_294_967_296.0
    }
}

/// Seeded pseudorandom stream shared by the engine and the reference
/// simulator. Forced values, when queued, are consumed first.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
    forced: VecDeque<Prn>,
    drawn: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed), forced: VecDeque::new(), drawn: 0 }
    }

    /// Seeded stream that first replays `forced`.
    pub fn with_forced(seed: u64, forced: impl IntoIterator<Item = Prn>) -> Self {
        let mut s = Self::new(seed);
        s.forced.extend(forced);
        s
    }

    pub fn force(&mut self, prn: Prn) {
        self.forced.push_back(prn);
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of values handed out so far.
    pub fn drawn(&self) -> u64 {
        self.drawn
    }

    pub fn next_prn(&mut self) -> Prn {
        self.drawn += 1;
        self.forced.pop_front().unwrap_or_else(|| Prn(self.rng.next_u32()))
    }
}

/// SplitMix64 finalizer over `(seed, index)`: independent, individually
/// replayable per-trial seeds.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
