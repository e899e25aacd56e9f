#![allow(dead_code)]

use flowpack::model::{rat, Instance, Job, Rational};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn job_list(max_jobs: usize, knapsack: bool) -> impl Strategy<Value = Vec<Job>> {
    prop::collection::vec((1..=50i64, 0..=50i64, 1..=60i64), 0..=max_jobs).prop_map(move |raw| {
        raw.into_iter()
            .enumerate()
            .map(|(i, (a, b, p))| {
                let b = if knapsack { Rational::zero() } else { rat(b, 100) };
                Job::new(i as u64 + 1, rat(a, 100), b, rat(p, 1))
            })
            .collect()
    })
}

pub fn instance(m: usize, max_jobs: usize) -> impl Strategy<Value = Instance> {
    job_list(max_jobs, false).prop_map(move |jobs| Instance::unit(m, jobs).unwrap())
}

/// Deterministic instance for loops that are not worth shrinking.
pub fn seeded(seed: u64, n: usize, m: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs = (1..=n as u64)
        .map(|id| Job::new(id, rat(rng.gen_range(1..=50), 100), rat(rng.gen_range(1..=50), 100), rat(rng.gen_range(1..=100), 1)))
        .collect();
    Instance::unit(m, jobs).unwrap()
}

pub fn recomputed_profit(instance: &Instance, solution: &flowpack::Solution) -> Rational {
    solution.job_ids().map(|id| instance.job(id).unwrap().p.clone()).sum()
}
