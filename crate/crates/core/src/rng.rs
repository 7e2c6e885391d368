//! Seed arithmetic and random streams.
//!
//! Every stream in a run derives from one 64-bit root seed. Replication and
//! network streams use `root + index`; sub-streams inside one run are split
//! off by mixing a fixed tag into the seed so that, e.g., seeding choices and
//! media shocks never share draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Seed of the `index`-th replication or network derived from a base seed.
pub fn derive(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

pub fn stream(seed: u64, tag: u64) -> SimRng {
    SimRng::seed_from_u64(mix64(seed ^ mix64(tag)))
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based uniforms keyed by `(week, agent)`.
///
/// The infection coin of agent `i` in week `t` depends only on the run seed,
/// `t` and `i`, never on how many draws happened before it. Two runs that
/// share a seed therefore see the same coins (common random numbers), which
/// makes coupled comparisons across parameter values pathwise.
#[derive(Debug, Clone, Copy)]
pub struct AgentCoins {
    key: u64,
}

impl AgentCoins {
    pub fn new(seed: u64) -> Self {
        AgentCoins {
            key: mix64(seed ^ 0xC01D_C0FF_EE00_0001),
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&self, week: u32, agent: u32) -> f64 {
        let x = mix64(self.key ^ mix64(((week as u64) << 32) | agent as u64));
        (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub(crate) mod tags {
    pub const PLACEMENT: u64 = 1;
    pub const DEGREES: u64 = 2;
    pub const MATCHING: u64 = 3;
    pub const SEEDING: u64 = 4;
    pub const SHOCKS: u64 = 5;
    pub const LAYOUT: u64 = 6;
}
