//! Exponential-time exact solvers used as ground truth.
//!
//! Every search has a hard size budget and refuses outright rather than
//! truncating.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::johnson::{johnson_cmp, makespan_closed_form, schedule_groups, simulate_makespan};
use crate::model::{Instance, Job, Rational, Solution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what} exceeds the oracle budget ({size} > {limit})")]
    BudgetExceeded { what: &'static str, size: String, limit: String },
    #[error("profits are not nonnegative integers after scaling")]
    NonIntegralProfit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    /// Largest job count for a single flowshop.
    pub max_jobs_single: usize,
    /// Largest `(m + 1)^n` for several flowshops.
    pub max_assignments: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        // n <= 14 for m = 1, n <= 12 for m = 2
        OracleBudget { max_jobs_single: 14, max_assignments: 3u64.pow(12) }
    }
}

impl OracleBudget {
    pub fn check(&self, n: usize, m: usize) -> Result<(), OracleError> {
        if m == 1 && n > self.max_jobs_single {
            return Err(OracleError::BudgetExceeded {
                what: "job count",
                size: n.to_string(),
                limit: self.max_jobs_single.to_string(),
            });
        }
        let space = BigInt::from(m + 1).pow(n as u32);
        if m >= 2 && space > BigInt::from(self.max_assignments) {
            return Err(OracleError::BudgetExceeded {
                what: "assignment space",
                size: space.to_string(),
                limit: self.max_assignments.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    pub budget: OracleBudget,
    /// Cut subtrees that cannot beat the incumbent or already overflow a flowshop.
    pub prune: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { budget: OracleBudget::default(), prune: true }
    }
}

/// Maximum-profit feasible schedule over all maps jobs -> {unselected, F_1..F_m}.
///
/// Ties go to the lexicographically smallest assignment vector (job order as
/// in the instance, 0 = unselected, `j` = flowshop `j`).
pub fn exact_opt(instance: &Instance) -> Result<Solution, OracleError> {
    exact_opt_with(instance, &ExactOptions::default())
}

pub fn exact_opt_with(instance: &Instance, options: &ExactOptions) -> Result<Solution, OracleError> {
    options.budget.check(instance.n(), instance.m)?;
    let mut search = Search {
        jobs: &instance.jobs,
        bound: instance.makespan_bound.clone(),
        prune: options.prune,
        groups: vec![Vec::new(); instance.m],
        suffix_profit: suffix_sums(&instance.jobs),
        best: None,
    };
    search.descend(0, Rational::zero());
    let groups = search.best.map(|(_, g)| g).unwrap_or_else(|| vec![Vec::new(); instance.m]);
    let groups: Vec<Vec<&Job>> = groups.iter().map(|g| g.iter().map(|&i| &instance.jobs[i]).collect()).collect();
    let mut solution = schedule_groups(&groups);
    solution.feasible = solution.per_flowshop_makespan.iter().all(|c| *c <= instance.makespan_bound);
    Ok(solution)
}

fn suffix_sums(jobs: &[Job]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); jobs.len() + 1];
    for i in (0..jobs.len()).rev() {
        out[i] = &out[i + 1] + &jobs[i].p;
    }
    out
}

struct Search<'a> {
    jobs: &'a [Job],
    bound: Rational,
    prune: bool,
    groups: Vec<Vec<usize>>,
    suffix_profit: Vec<Rational>,
    best: Option<(Rational, Vec<Vec<usize>>)>,
}

impl Search<'_> {
    fn fits(&self, group: &[usize]) -> bool {
        let mut seq: Vec<&Job> = group.iter().map(|&i| &self.jobs[i]).collect();
        seq.sort_by(|x, y| johnson_cmp(x, y));
        makespan_closed_form(&seq).makespan <= self.bound
    }

    fn descend(&mut self, idx: usize, profit: Rational) {
        if self.prune {
            if let Some((best, _)) = &self.best {
                if &profit + &self.suffix_profit[idx] <= *best {
                    return;
                }
            }
        }
        if idx == self.jobs.len() {
            if !self.prune && !self.groups.iter().all(|g| self.fits(g)) {
                return;
            }
            if self.best.as_ref().is_none_or(|(best, _)| profit > *best) {
                self.best = Some((profit, self.groups.clone()));
            }
            return;
        }
        self.descend(idx + 1, profit.clone());
        for j in 0..self.groups.len() {
            self.groups[j].push(idx);
            if !self.prune || self.fits(&self.groups[j]) {
                self.descend(idx + 1, &profit + &self.jobs[idx].p);
            }
            self.groups[j].pop();
        }
    }
}

pub const PERMUTATION_LIMIT: usize = 8;

/// Minimum makespan over all `n!` orders, by simulation.
pub fn brute_force_min_makespan(jobs: &[Job]) -> Result<Rational, OracleError> {
    if jobs.len() > PERMUTATION_LIMIT {
        return Err(OracleError::BudgetExceeded {
            what: "permutation length",
            size: jobs.len().to_string(),
            limit: PERMUTATION_LIMIT.to_string(),
        });
    }
    let mut order: Vec<&Job> = jobs.iter().collect();
    let mut best = simulate_makespan(&order);
    permute(&mut order, 0, &mut best);
    Ok(best)
}

fn permute(order: &mut Vec<&Job>, k: usize, best: &mut Rational) {
    if k == order.len() {
        let value = simulate_makespan(order);
        if value < *best {
            *best = value;
        }
        return;
    }
    for i in k..order.len() {
        order.swap(k, i);
        permute(order, k + 1, best);
        order.swap(k, i);
    }
}

/// Largest total profit the knapsack DP will index.
pub const KNAPSACK_PROFIT_LIMIT: u64 = 2_000_000;

/// Exact 0/1 knapsack optimum by profit-indexed DP: `min_weight[P]` is the
/// lightest subset reaching profit exactly `P`.
pub fn knapsack_dp_opt(profits: &[u64], weights: &[Rational], capacity: &Rational) -> Result<Rational, OracleError> {
    let total: u64 = profits.iter().sum();
    if total > KNAPSACK_PROFIT_LIMIT {
        return Err(OracleError::BudgetExceeded {
            what: "profit sum",
            size: total.to_string(),
            limit: KNAPSACK_PROFIT_LIMIT.to_string(),
        });
    }
    let total = total as usize;
    let mut min_weight: Vec<Option<Rational>> = vec![None; total + 1];
    min_weight[0] = Some(Rational::zero());
    for (&p, w) in profits.iter().zip(weights) {
        let p = p as usize;
        for target in (p..=total).rev() {
            if let Some(base) = &min_weight[target - p] {
                let candidate = base + w;
                if min_weight[target].as_ref().is_none_or(|cur| candidate < *cur) {
                    min_weight[target] = Some(candidate);
                }
            }
        }
    }
    let best = (0..=total)
        .rev()
        .find(|&t| min_weight[t].as_ref().is_some_and(|w| w <= capacity))
        .unwrap_or(0);
    Ok(Rational::from_integer(BigInt::from(best)))
}

/// Scales rational profits to integers by the lcm of their denominators;
/// returns the integer profits and the scale.
pub fn integral_profits(profits: &[Rational]) -> Result<(Vec<u64>, BigInt), OracleError> {
    let scale = profits.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
    let scaled = profits
        .iter()
        .map(|p| (p * Rational::from_integer(scale.clone())).to_integer().to_u64())
        .collect::<Option<Vec<u64>>>()
        .ok_or(OracleError::NonIntegralProfit)?;
    Ok((scaled, scale))
}

/// Single-flowshop optimum of an instance whose second-stage workloads are
/// all zero, via [`knapsack_dp_opt`] on the first-stage workloads.
pub fn knapsack_opt_of(instance: &Instance) -> Result<Rational, OracleError> {
    let profits: Vec<Rational> = instance.jobs.iter().map(|j| j.p.clone()).collect();
    let weights: Vec<Rational> = instance.jobs.iter().map(|j| j.a.clone()).collect();
    let (scaled, scale) = integral_profits(&profits)?;
    let best = knapsack_dp_opt(&scaled, &weights, &instance.makespan_bound)?;
    Ok(best / Rational::from_integer(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{int, rat, JobId};

    fn job(id: u64, a: (i64, i64), b: (i64, i64), p: i64) -> Job {
        Job::new(id, rat(a.0, a.1), rat(b.0, b.1), int(p))
    }

    fn example() -> Instance {
        Instance::unit(
            1,
            vec![job(1, (5, 10), (3, 10), 10), job(2, (3, 10), (5, 10), 10), job(3, (2, 10), (2, 10), 5)],
        )
        .unwrap()
    }

    #[test]
    fn three_job_example() {
        let sol = exact_opt(&example()).unwrap();
        assert_eq!(sol.total_profit, int(15));
        assert!(sol.feasible);
        // lexicographically smallest maximizer leaves J1 out: {J2, J3}
        assert_eq!(sol.per_flowshop, vec![vec![JobId(3), JobId(2)]]);
        let unpruned = exact_opt_with(&example(), &ExactOptions { prune: false, ..Default::default() }).unwrap();
        assert_eq!(unpruned, sol);
    }

    #[test]
    fn empty_and_oversized() {
        assert_eq!(exact_opt(&Instance::unit(2, vec![]).unwrap()).unwrap(), Solution::empty(2));
        let big = Instance::unit(1, vec![job(1, (7, 10), (7, 10), 9)]).unwrap();
        let sol = exact_opt(&big).unwrap();
        assert_eq!(sol.total_profit, int(0));
        assert!(sol.feasible);
    }

    #[test]
    fn refuses_oversized_searches() {
        let jobs: Vec<Job> = (0..15).map(|i| job(i, (1, 100), (1, 100), 1)).collect();
        assert!(matches!(
            exact_opt(&Instance::unit(1, jobs.clone()).unwrap()),
            Err(OracleError::BudgetExceeded { .. })
        ));
        assert!(exact_opt(&Instance::unit(2, jobs[..12].to_vec()).unwrap()).is_ok());
        assert!(matches!(
            exact_opt(&Instance::unit(2, jobs[..13].to_vec()).unwrap()),
            Err(OracleError::BudgetExceeded { .. })
        ));
        assert!(matches!(brute_force_min_makespan(&jobs[..9]), Err(OracleError::BudgetExceeded { .. })));
    }

    #[test]
    fn brute_force_permutations() {
        let two = [job(1, (5, 10), (3, 10), 0), job(2, (3, 10), (5, 10), 0)];
        assert_eq!(brute_force_min_makespan(&two).unwrap(), rat(11, 10));
        assert_eq!(brute_force_min_makespan(&two[..1]).unwrap(), rat(8, 10));
        let flat = [job(1, (1, 10), (0, 1), 0), job(2, (3, 10), (0, 1), 0), job(3, (1, 5), (0, 1), 0)];
        assert_eq!(brute_force_min_makespan(&flat).unwrap(), rat(6, 10));
        assert_eq!(brute_force_min_makespan(&[]).unwrap(), int(0));
    }

    #[test]
    fn knapsack_dp() {
        let w = [rat(1, 2), rat(3, 10), rat(1, 5)];
        assert_eq!(knapsack_dp_opt(&[10, 10, 5], &w, &int(1)).unwrap(), int(25));
        assert_eq!(knapsack_dp_opt(&[10, 10, 5], &w, &int(0)).unwrap(), int(0));
        assert_eq!(knapsack_dp_opt(&[7], &[rat(1, 2)], &int(1)).unwrap(), int(7));
        assert_eq!(knapsack_dp_opt(&[10, 10, 5], &w, &rat(7, 10)).unwrap(), int(15));
        assert!(knapsack_dp_opt(&[KNAPSACK_PROFIT_LIMIT, 1], &w[..2], &int(1)).is_err());
    }

    #[test]
    fn rational_profits_scale() {
        let (scaled, scale) = integral_profits(&[rat(1, 2), rat(2, 3), int(2)]).unwrap();
        assert_eq!((scaled, scale), (vec![3, 4, 12], BigInt::from(6)));
        let inst = Instance::unit(
            1,
            vec![job(1, (1, 2), (0, 1), 10), job(2, (3, 10), (0, 1), 10), job(3, (1, 5), (0, 1), 5)],
        )
        .unwrap();
        assert_eq!(knapsack_opt_of(&inst).unwrap(), int(25));
        assert_eq!(exact_opt(&inst).unwrap().total_profit, int(25));
    }
}
