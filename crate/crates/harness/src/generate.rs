//! Seeded random instances.

use std::fmt;
use std::str::FromStr;

use flowpack::model::{int, rat, Instance, Job, Rational};
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    /// `a, b` uniform on `{1/100, ..., 50/100}`, `p` uniform on `1..=100`.
    Uniform,
    /// Profit tracks the total workload `100 (a + b)` plus noise in `-10..=10`.
    Correlated,
    /// Every `b = 0`: a plain knapsack.
    KnapsackDegenerate,
    /// Workloads near `1 / (2m + 1)` so about `2m` jobs fit per flowshop.
    Tight,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Uniform, Profile::Correlated, Profile::KnapsackDegenerate, Profile::Tight];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Uniform => "uniform",
            Profile::Correlated => "correlated",
            Profile::KnapsackDegenerate => "knapsack-degenerate",
            Profile::Tight => "tight",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HarnessError::InvalidProfile(s.to_string()))
    }
}

/// Deterministic in `(n, m, seed, profile)`. Job ids are `1..=n`, the bound is 1.
pub fn generate_instance(n: usize, m: usize, seed: u64, profile: Profile) -> Result<Instance, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(n);
    for id in 1..=n as u64 {
        let (a, b, p) = match profile {
            Profile::Uniform => {
                let a = rat(rng.gen_range(1..=50), 100);
                let b = rat(rng.gen_range(1..=50), 100);
                (a, b, int(rng.gen_range(1..=100)))
            }
            Profile::Correlated => {
                let ka: i64 = rng.gen_range(1..=50);
                let kb: i64 = rng.gen_range(1..=50);
                let noise: i64 = rng.gen_range(-10..=10);
                (rat(ka, 100), rat(kb, 100), int((ka + kb + noise).max(1)))
            }
            Profile::KnapsackDegenerate => {
                let a = rat(rng.gen_range(1..=50), 100);
                (a, Rational::zero(), int(rng.gen_range(1..=100)))
            }
            Profile::Tight => {
                let scale = 100 * (2 * m as i64 + 1);
                let a = rat(rng.gen_range(80..=100), scale);
                let b = rat(rng.gen_range(80..=100), scale);
                (a, b, int(rng.gen_range(1..=100)))
            }
        };
        jobs.push(Job::new(id, a, b, p));
    }
    Ok(Instance::unit(m, jobs)?)
}
