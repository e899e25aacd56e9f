//! Approximation schemes for selecting and scheduling jobs on one or `m`
//! identical two-stage flowshops under a unit makespan bound.
//!
//! Both schemes build a candidate collection from
//!
//! * every assignment of at most `K` jobs, and
//! * for every guess of the `K` most profitable selected jobs (plus, for `m`
//!   flowshops, their distribution and one critical job per flowshop), the
//!   integral part of an optimal vertex of a linear relaxation,
//!
//! and return the most profitable candidate whose Johnson schedules all fit.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::johnson::{johnson_cmp, makespan_closed_form, schedule_groups};
use crate::lp::{solve_to_vertex, BasicSolution, LinearProgram, LpError, Relation};
use crate::model::{Instance, Job, JobId, Rational, Solution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PtasError {
    #[error("epsilon must lie strictly between 0 and 1")]
    InvalidEpsilon,
    #[error("profitable-subset size {0} does not fit in memory")]
    SubsetTooLarge(String),
    #[error("single-flowshop scheme called with {0} flowshops")]
    NotSingleFlowshop(usize),
    #[error("instance is not normalized to a unit makespan bound")]
    NotNormalized,
    #[error("job {0} is not in the cheap pool")]
    NotInPool(JobId),
    #[error("critical job {0} conflicts with the guessed distribution")]
    InconsistentGuess(JobId),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// The profitable-subset size `K = ceil((1 + eps) / eps)` and the accuracy
/// `1 / (K - 1)` it actually delivers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonParameter {
    pub requested_epsilon: Rational,
    pub k: usize,
    pub effective_epsilon: Rational,
}

pub fn compute_k(epsilon: &Rational) -> Result<EpsilonParameter, PtasError> {
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(PtasError::InvalidEpsilon);
    }
    let ratio = (Rational::one() + epsilon) / epsilon;
    let k_big: BigInt = ratio.ceil().to_integer();
    let k = k_big.to_usize().ok_or_else(|| PtasError::SubsetTooLarge(k_big.to_string()))?;
    Ok(EpsilonParameter {
        requested_epsilon: epsilon.clone(),
        k,
        effective_epsilon: Rational::new(BigInt::one(), BigInt::from(k - 1)),
    })
}

/// Whether assignments that differ only by a relabeling of the (identical)
/// flowshops are enumerated once or separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Symmetry {
    #[default]
    Canonical,
    Labeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PtasOptions {
    /// For `m >= 2`, run with `eps / (m + 1)` so the `(m + 1)`-fold rounding
    /// loss still leaves a `1 - eps` guarantee.
    pub scale_epsilon: bool,
    pub symmetry: Symmetry,
    /// Record one [`GuessTrace`] per solved relaxation.
    pub trace: bool,
}

impl Default for PtasOptions {
    fn default() -> Self {
        PtasOptions { scale_epsilon: true, symmetry: Symmetry::Canonical, trace: false }
    }
}

impl PtasOptions {
    pub fn raw() -> Self {
        PtasOptions { scale_epsilon: false, ..Self::default() }
    }

    pub fn traced(self) -> Self {
        PtasOptions { trace: true, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CandidateSource {
    SmallSubset,
    LpRounding,
}

/// A member of the candidate collection. Membership says nothing about
/// feasibility; that is checked at selection time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub assignment: BTreeMap<JobId, usize>,
    pub source: CandidateSource,
    pub profit: Rational,
}

/// A guessed substructure of an optimal solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guess {
    pub profitable: BTreeSet<JobId>,
    pub distribution: BTreeMap<JobId, usize>,
    pub criticals: Vec<JobId>,
    pub p_min: Rational,
    pub cheap_pool: BTreeSet<JobId>,
}

/// `p_min` and `J' = {J : p(J) <= p_min} ∪ profitable`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheapPool {
    pub p_min: Rational,
    pub pool: BTreeSet<JobId>,
}

/// Returns `None` when `profitable` is empty or names no job in `jobs`.
pub fn cheap_pool(jobs: &[Job], profitable: &BTreeSet<JobId>) -> Option<CheapPool> {
    let p_min = jobs.iter().filter(|j| profitable.contains(&j.id)).map(|j| &j.p).min()?.clone();
    let pool = jobs
        .iter()
        .filter(|j| j.p <= p_min || profitable.contains(&j.id))
        .map(|j| j.id)
        .collect();
    Some(CheapPool { p_min, pool })
}

/// Flowshop labels for `k` items in ascending order: all `m^k` functions, or
/// one restricted-growth representative per relabeling orbit.
pub fn distribution_labels(k: usize, m: usize, symmetry: Symmetry) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: usize, k: usize, m: usize, sym: Symmetry, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        let limit = match sym {
            Symmetry::Labeled => m,
            Symmetry::Canonical => (used + 1).min(m),
        };
        for label in 0..limit {
            prefix.push(label);
            extend(prefix, used.max(label + 1), k, m, sym, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        extend(&mut Vec::with_capacity(k), 0, k, m, symmetry, &mut out);
    }
    out
}

/// All distributions of `profitable` over `m` flowshops, keyed by job id.
pub fn enumerate_distributions(
    profitable: &BTreeSet<JobId>,
    m: usize,
    symmetry: Symmetry,
) -> Vec<BTreeMap<JobId, usize>> {
    distribution_labels(profitable.len(), m, symmetry)
        .into_iter()
        .map(|labels| profitable.iter().copied().zip(labels).collect())
        .collect()
}

/// Every assignment of at most `k` jobs to the `m` flowshops (the empty one
/// included), with profits; no feasibility filtering.
pub fn enumerate_small_candidates(jobs: &[Job], k: usize, m: usize, symmetry: Symmetry) -> Vec<Candidate> {
    let by_id = ids_ascending(jobs);
    let mut out = Vec::new();
    let mut groups = vec![Vec::new(); m];
    visit_small(&by_id, k, symmetry, &mut groups, 0, 0, &mut |_, _| true, &mut |groups| {
        let mut assignment = BTreeMap::new();
        let mut profit = Rational::zero();
        for (label, group) in groups.iter().enumerate() {
            for &idx in group {
                assignment.insert(jobs[idx].id, label);
                profit += &jobs[idx].p;
            }
        }
        out.push(Candidate { assignment, source: CandidateSource::SmallSubset, profit });
    });
    out
}

fn ids_ascending(jobs: &[Job]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by_key(|&i| jobs[i].id);
    order
}

/// Depth-first walk over assignments of `order[pos..]`; `keep` may cut
/// subtrees after a job is placed (it sees the updated group).
#[allow(clippy::too_many_arguments)]
fn visit_small(
    order: &[usize],
    k: usize,
    symmetry: Symmetry,
    groups: &mut Vec<Vec<usize>>,
    pos: usize,
    used: usize,
    keep: &mut dyn FnMut(&[Vec<usize>], usize) -> bool,
    visit: &mut dyn FnMut(&[Vec<usize>]),
) {
    if pos == order.len() {
        visit(groups);
        return;
    }
    visit_small(order, k, symmetry, groups, pos + 1, used, keep, visit);
    let placed: usize = groups.iter().map(Vec::len).sum();
    if placed == k {
        return;
    }
    let m = groups.len();
    let limit = match symmetry {
        Symmetry::Labeled => m,
        Symmetry::Canonical => (used + 1).min(m),
    };
    for label in 0..limit {
        groups[label].push(order[pos]);
        if keep(groups, label) {
            visit_small(order, k, symmetry, groups, pos + 1, used.max(label + 1), keep, visit);
        }
        groups[label].pop();
    }
}

/// Relaxation for one flowshop: `pool` is `J'` in Johnson order; the single
/// row evaluates the makespan expression at the critical job's position.
/// Variables are labeled by job id.
pub fn build_lp_single(
    pool: &[&Job],
    profitable: &BTreeSet<JobId>,
    critical: JobId,
) -> Result<LinearProgram<JobId>, PtasError> {
    let s = pool.iter().position(|j| j.id == critical).ok_or(PtasError::NotInPool(critical))?;
    let mut lp = LinearProgram::with_unit_variables(pool.iter().map(|j| j.id).collect());
    let mut row = Vec::with_capacity(pool.len());
    for (i, job) in pool.iter().enumerate() {
        lp.objective[i] = job.p.clone();
        row.push(makespan_coefficient(job, i, s));
        if profitable.contains(&job.id) || i == s {
            lp.fix(i, Rational::one());
        }
    }
    lp.add_row(row, Relation::Le, Rational::one());
    Ok(lp)
}

fn makespan_coefficient(job: &Job, position: usize, critical: usize) -> Rational {
    use std::cmp::Ordering::*;
    match position.cmp(&critical) {
        Less => job.a.clone(),
        Equal => job.load(),
        Greater => job.b.clone(),
    }
}

/// Variable tag of the multi-flowshop relaxation; `flowshop == m` is the
/// dummy flowshop that absorbs unselected jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Placement {
    pub job: JobId,
    pub flowshop: usize,
}

/// Relaxation for `m` flowshops plus a dummy one with capacity `a(J) + b(J)`.
///
/// Variables are `x[i][j]` for every pool job `i` (Johnson order) and
/// `j in 0..=m`, laid out job-major. Rows: one makespan row per real flowshop
/// at its critical position, one dummy capacity row (critical position fixed
/// to the last pool job, which makes the row independent of the guess), and
/// one assignment equality per unguessed job. Guessed jobs are pinned by
/// bounds.
pub fn build_lp_multi(
    pool: &[&Job],
    distribution: &BTreeMap<JobId, usize>,
    criticals: &[JobId],
    instance: &Instance,
) -> Result<LinearProgram<Placement>, PtasError> {
    let m = instance.m;
    assert_eq!(criticals.len(), m, "one critical job per real flowshop");
    let width = m + 1;
    let var = |i: usize, j: usize| i * width + j;

    let mut pinned: BTreeMap<JobId, usize> = distribution.clone();
    for (j, &c) in criticals.iter().enumerate() {
        if !pool.iter().any(|job| job.id == c) {
            return Err(PtasError::NotInPool(c));
        }
        if pinned.insert(c, j).is_some_and(|prev| prev != j) {
            return Err(PtasError::InconsistentGuess(c));
        }
    }

    let labels = pool
        .iter()
        .flat_map(|job| (0..width).map(move |flowshop| Placement { job: job.id, flowshop }))
        .collect();
    let mut lp = LinearProgram::with_unit_variables(labels);
    let positions: Vec<usize> = criticals
        .iter()
        .map(|c| pool.iter().position(|job| job.id == *c).expect("checked above"))
        .collect();
    let last = pool.len().saturating_sub(1);
    let mut rows = vec![vec![Rational::zero(); lp.num_vars()]; width];
    for (i, job) in pool.iter().enumerate() {
        for j in 0..m {
            lp.objective[var(i, j)] = job.p.clone();
            rows[j][var(i, j)] = makespan_coefficient(job, i, positions[j]);
        }
        rows[m][var(i, m)] = makespan_coefficient(job, i, last);
        match pinned.get(&job.id) {
            Some(&home) => {
                for j in 0..width {
                    lp.fix(var(i, j), if j == home { Rational::one() } else { Rational::zero() });
                }
            }
            None => {
                let mut assign = vec![Rational::zero(); lp.num_vars()];
                for j in 0..width {
                    assign[var(i, j)] = Rational::one();
                }
                lp.add_row(assign, Relation::Eq, Rational::one());
            }
        }
    }
    let capacities = std::iter::repeat_n(Rational::one(), m).chain([instance.total_load()]);
    for (j, (row, rhs)) in rows.into_iter().zip(capacities).enumerate() {
        lp.rows.insert(j, crate::lp::Row { coefficients: row, relation: Relation::Le, rhs });
    }
    Ok(lp)
}

/// Maps a relaxation variable to a job and, for real flowshops, its index.
pub trait AssignmentLabel {
    fn job(&self) -> JobId;
    /// `None` for the dummy flowshop.
    fn real_flowshop(&self, m: usize) -> Option<usize>;
}

impl AssignmentLabel for JobId {
    fn job(&self) -> JobId {
        *self
    }

    fn real_flowshop(&self, _m: usize) -> Option<usize> {
        Some(0)
    }
}

impl AssignmentLabel for Placement {
    fn job(&self) -> JobId {
        self.job
    }

    fn real_flowshop(&self, m: usize) -> Option<usize> {
        (self.flowshop < m).then_some(self.flowshop)
    }
}

/// Keeps exactly the real-flowshop variables equal to 1; everything
/// fractional is dropped.
pub fn round_solution<L: AssignmentLabel>(basic: &BasicSolution, lp: &LinearProgram<L>, m: usize) -> Candidate {
    let mut assignment = BTreeMap::new();
    let mut profit = Rational::zero();
    for ((label, value), p) in lp.labels.iter().zip(&basic.values).zip(&lp.objective) {
        if let (true, Some(j)) = (value.is_one(), label.real_flowshop(m)) {
            assignment.insert(label.job(), j);
            profit += p;
        }
    }
    Candidate { assignment, source: CandidateSource::LpRounding, profit }
}

/// Jobs whose every nonzero variable is strictly fractional.
pub fn fractional_jobs<L: AssignmentLabel>(basic: &BasicSolution, lp: &LinearProgram<L>) -> usize {
    let mut status: BTreeMap<JobId, (bool, bool)> = BTreeMap::new();
    for (label, value) in lp.labels.iter().zip(&basic.values) {
        let entry = status.entry(label.job()).or_default();
        entry.0 |= value.is_one();
        entry.1 |= value.is_positive() && *value < Rational::one();
    }
    status.values().filter(|(integral, fractional)| *fractional && !integral).count()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PtasStats {
    pub k: usize,
    pub effective_epsilon: Rational,
    /// Feasible assignments of at most `K` jobs.
    pub small_candidates: u64,
    pub subset_guesses: u64,
    pub distribution_guesses: u64,
    pub critical_guesses: u64,
    pub lp_solves: u64,
    pub lp_infeasible: u64,
    /// Distinct rounded candidates and how many of them fail the makespan check.
    pub rounded_candidates: u64,
    pub rounded_infeasible: u64,
}

impl PtasStats {
    fn absorb(&mut self, other: &PtasStats) {
        self.small_candidates += other.small_candidates;
        self.subset_guesses += other.subset_guesses;
        self.distribution_guesses += other.distribution_guesses;
        self.critical_guesses += other.critical_guesses;
        self.lp_solves += other.lp_solves;
        self.lp_infeasible += other.lp_infeasible;
    }
}

/// One solved relaxation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessTrace {
    pub profitable: Vec<JobId>,
    pub distribution: Vec<usize>,
    pub criticals: Vec<JobId>,
    pub rows: usize,
    pub lp_objective: Rational,
    pub strictly_fractional_vars: usize,
    pub fractional_jobs: usize,
    pub rounded_profit: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtasRun {
    pub solution: Solution,
    pub stats: PtasStats,
    pub trace: Vec<GuessTrace>,
}

impl PtasRun {
    /// Largest relaxation optimum seen, if any relaxation was feasible.
    pub fn lp_upper_bound(&self) -> Option<&Rational> {
        self.trace.iter().map(|t| &t.lp_objective).max()
    }
}

/// Canonical assignment: `(job id, flowshop)` sorted by id, flowshops
/// relabeled in order of first appearance.
type AssignmentKey = Vec<(JobId, usize)>;

fn canonical_key(pairs: impl IntoIterator<Item = (JobId, usize)>) -> AssignmentKey {
    let mut pairs: Vec<(JobId, usize)> = pairs.into_iter().collect();
    pairs.sort();
    let mut relabel: Vec<Option<usize>> = Vec::new();
    let mut next = 0;
    for (_, label) in pairs.iter_mut() {
        if relabel.len() <= *label {
            relabel.resize(*label + 1, None);
        }
        let new = *relabel[*label].get_or_insert_with(|| {
            next += 1;
            next - 1
        });
        *label = new;
    }
    pairs
}

/// Feasible candidates reduce to the most profitable one, ties going to the
/// smallest canonical key, so the result does not depend on visiting order.
#[derive(Debug, Default)]
struct Best {
    best: Option<(Rational, AssignmentKey)>,
}

impl Best {
    fn offer(&mut self, profit: Rational, key: AssignmentKey) {
        let better = match &self.best {
            None => true,
            Some((p, k)) => profit > *p || (profit == *p && key < *k),
        };
        if better {
            self.best = Some((profit, key));
        }
    }

    fn merge(&mut self, other: Best) {
        if let Some((p, k)) = other.best {
            self.offer(p, k);
        }
    }
}

struct Workspace<'a> {
    instance: &'a Instance,
    rank: Vec<usize>,
}

impl<'a> Workspace<'a> {
    fn new(instance: &'a Instance) -> Self {
        let jobs = &instance.jobs;
        let mut order: Vec<usize> = (0..jobs.len()).collect();
        order.sort_by(|&x, &y| johnson_cmp(&jobs[x], &jobs[y]));
        let mut rank = vec![0; jobs.len()];
        for (r, &idx) in order.iter().enumerate() {
            rank[idx] = r;
        }
        Workspace { instance, rank }
    }

    fn jobs(&self) -> &'a [Job] {
        &self.instance.jobs
    }

    fn fits(&self, group: &[usize]) -> bool {
        let mut seq: Vec<usize> = group.to_vec();
        seq.sort_by_key(|&i| self.rank[i]);
        let seq: Vec<&Job> = seq.iter().map(|&i| &self.jobs()[i]).collect();
        makespan_closed_form(&seq).makespan <= Rational::one()
    }

    fn small_candidates(&self, k: usize, symmetry: Symmetry) -> (Best, u64) {
        let by_id = ids_ascending(self.jobs());
        let mut best = Best::default();
        let mut count = 0;
        let mut groups = vec![Vec::new(); self.instance.m];
        let jobs = self.jobs();
        // Prune on infeasible groups: adding jobs never shortens a makespan.
        visit_small(&by_id, k, symmetry, &mut groups, 0, 0, &mut |g, label| self.fits(&g[label]), &mut |g| {
            count += 1;
            let profit = g.iter().flatten().map(|&i| &jobs[i].p).sum();
            let key = canonical_key(
                g.iter().enumerate().flat_map(|(label, group)| group.iter().map(move |&i| (jobs[i].id, label))),
            );
            best.offer(profit, key);
        });
        (best, count)
    }

    fn pool(&self, subset: &[usize]) -> (Rational, Vec<usize>) {
        let jobs = self.jobs();
        let p_min = subset.iter().map(|&i| &jobs[i].p).min().expect("nonempty subset").clone();
        let mut pool: Vec<usize> = (0..jobs.len()).filter(|&i| jobs[i].p <= p_min || subset.contains(&i)).collect();
        pool.sort_by_key(|&i| self.rank[i]);
        (p_min, pool)
    }

    fn candidate_groups(&self, candidate: &Candidate) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.instance.m];
        for (id, &j) in &candidate.assignment {
            let idx = self.instance.position(*id).expect("candidate jobs come from the instance");
            groups[j].push(idx);
        }
        groups
    }

    fn solution(&self, key: &AssignmentKey) -> Solution {
        let mut groups: Vec<Vec<&Job>> = vec![Vec::new(); self.instance.m];
        for (id, label) in key {
            groups[*label].push(self.instance.job(*id).expect("key jobs come from the instance"));
        }
        schedule_groups(&groups)
    }
}

/// Result of evaluating every guess built on one profitable subset.
#[derive(Default)]
struct SubsetOutcome {
    stats: PtasStats,
    rounded: BTreeMap<AssignmentKey, Rational>,
    trace: Vec<GuessTrace>,
}

/// Subset, distribution labels, criticals and the job table for one trace entry.
type TraceContext<'a> = (&'a [usize], Vec<usize>, Vec<JobId>, &'a [Job]);

impl SubsetOutcome {
    fn record<L: AssignmentLabel>(
        &mut self,
        lp: &LinearProgram<L>,
        m: usize,
        trace: Option<TraceContext<'_>>,
    ) -> Result<(), PtasError> {
        self.stats.lp_solves += 1;
        let basic = solve_to_vertex(lp)?;
        if !basic.is_optimal() {
            self.stats.lp_infeasible += 1;
            return Ok(());
        }
        let candidate = round_solution(&basic, lp, m);
        if let Some((subset, distribution, criticals, jobs)) = trace {
            self.trace.push(GuessTrace {
                profitable: subset.iter().map(|&i| jobs[i].id).collect(),
                distribution,
                criticals,
                rows: lp.rows.len(),
                lp_objective: basic.objective_value.clone(),
                strictly_fractional_vars: lp.strictly_fractional(&basic.values),
                fractional_jobs: fractional_jobs(&basic, lp),
                rounded_profit: candidate.profit.clone(),
            });
        }
        let key = canonical_key(candidate.assignment.iter().map(|(id, j)| (*id, *j)));
        self.rounded.entry(key).or_insert(candidate.profit);
        Ok(())
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=(n - (k - cur.len())) {
            cur.push(i);
            extend(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        extend(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn check_instance(instance: &Instance) -> Result<(), PtasError> {
    if !instance.makespan_bound.is_one() {
        return Err(PtasError::NotNormalized);
    }
    Ok(())
}

/// Single-flowshop scheme. The returned schedule always fits; its profit is
/// at least `(1 - effective_epsilon)` times the optimum.
pub fn ptas_single(instance: &Instance, epsilon: &Rational, options: &PtasOptions) -> Result<PtasRun, PtasError> {
    if instance.m != 1 {
        return Err(PtasError::NotSingleFlowshop(instance.m));
    }
    check_instance(instance)?;
    let params = compute_k(epsilon)?;
    run_scheme(instance, params, options, Relaxation::Single)
}

/// Scheme for `m` flowshops. In raw mode the profit is at least
/// `1 - effective_epsilon * (m + 1)` times the optimum; with `scale_epsilon`
/// (the default) at least `1 - epsilon`.
pub fn ptas_multi(instance: &Instance, epsilon: &Rational, options: &PtasOptions) -> Result<PtasRun, PtasError> {
    check_instance(instance)?;
    let params = compute_k(&internal_epsilon(epsilon, instance.m, options)?)?;
    run_scheme(instance, params, options, Relaxation::Multi)
}

/// Dispatches to the single-flowshop scheme when `m = 1`.
pub fn solve(instance: &Instance, epsilon: &Rational, options: &PtasOptions) -> Result<PtasRun, PtasError> {
    if instance.m == 1 {
        ptas_single(instance, epsilon, options)
    } else {
        ptas_multi(instance, epsilon, options)
    }
}

/// The epsilon the guesses are sized for.
pub fn internal_epsilon(epsilon: &Rational, m: usize, options: &PtasOptions) -> Result<Rational, PtasError> {
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(PtasError::InvalidEpsilon);
    }
    Ok(if options.scale_epsilon && m >= 2 {
        epsilon / Rational::from_integer(BigInt::from(m + 1))
    } else {
        epsilon.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Relaxation {
    Single,
    Multi,
}

fn run_scheme(
    instance: &Instance,
    params: EpsilonParameter,
    options: &PtasOptions,
    relaxation: Relaxation,
) -> Result<PtasRun, PtasError> {
    let ws = Workspace::new(instance);
    let k = params.k;
    let (mut best, small) = ws.small_candidates(k, options.symmetry);
    let mut stats = PtasStats {
        k,
        effective_epsilon: params.effective_epsilon.clone(),
        small_candidates: small,
        ..PtasStats::default()
    };

    let mut trace = Vec::new();
    if instance.n() > k {
        let outcomes: Vec<Result<SubsetOutcome, PtasError>> = subsets(instance.n(), k)
            .par_iter()
            .map(|subset| match relaxation {
                Relaxation::Single => guesses_single(&ws, subset, options),
                Relaxation::Multi => guesses_multi(&ws, subset, options),
            })
            .collect();
        let mut rounded: BTreeMap<AssignmentKey, Rational> = BTreeMap::new();
        for outcome in outcomes {
            let outcome = outcome?;
            stats.absorb(&outcome.stats);
            trace.extend(outcome.trace);
            rounded.extend(outcome.rounded);
        }
        stats.rounded_candidates = rounded.len() as u64;
        for (key, profit) in rounded {
            let candidate = Candidate {
                assignment: key.iter().copied().collect(),
                source: CandidateSource::LpRounding,
                profit: profit.clone(),
            };
            if ws.candidate_groups(&candidate).iter().all(|g| ws.fits(g)) {
                let mut one = Best::default();
                one.offer(profit, key);
                best.merge(one);
            } else {
                stats.rounded_infeasible += 1;
            }
        }
    }

    let solution = match &best.best {
        Some((_, key)) => ws.solution(key),
        None => Solution::empty(instance.m),
    };
    debug_assert!(solution.feasible);
    Ok(PtasRun { solution, stats, trace })
}

fn guesses_single(ws: &Workspace, subset: &[usize], options: &PtasOptions) -> Result<SubsetOutcome, PtasError> {
    let jobs = ws.jobs();
    let mut out = SubsetOutcome::default();
    out.stats.subset_guesses = 1;
    out.stats.distribution_guesses = 1;
    let (_, pool) = ws.pool(subset);
    let pool_jobs: Vec<&Job> = pool.iter().map(|&i| &jobs[i]).collect();
    let profitable: BTreeSet<JobId> = subset.iter().map(|&i| jobs[i].id).collect();
    for &critical in &pool {
        out.stats.critical_guesses += 1;
        let lp = build_lp_single(&pool_jobs, &profitable, jobs[critical].id)?;
        let trace = options.trace.then(|| (subset, vec![0; subset.len()], vec![jobs[critical].id], jobs));
        out.record(&lp, 1, trace)?;
    }
    Ok(out)
}

fn guesses_multi(ws: &Workspace, subset: &[usize], options: &PtasOptions) -> Result<SubsetOutcome, PtasError> {
    let jobs = ws.jobs();
    let m = ws.instance.m;
    let mut out = SubsetOutcome::default();
    out.stats.subset_guesses = 1;
    let (_, pool) = ws.pool(subset);
    let pool_jobs: Vec<&Job> = pool.iter().map(|&i| &jobs[i]).collect();

    // Distributions are over the subset in ascending id order.
    let mut by_id: Vec<usize> = subset.to_vec();
    by_id.sort_by_key(|&i| jobs[i].id);
    let home_of = |labels: &[usize], idx: usize| by_id.iter().position(|&i| i == idx).map(|p| labels[p]);

    for labels in distribution_labels(subset.len(), m, options.symmetry) {
        out.stats.distribution_guesses += 1;
        let distribution: BTreeMap<JobId, usize> = by_id.iter().map(|&i| jobs[i].id).zip(labels.iter().copied()).collect();
        let mut choice = vec![0usize; m];
        'combos: loop {
            let consistent = (0..m).all(|j| {
                let c = pool[choice[j]];
                choice[..j].iter().all(|&other| other != choice[j])
                    && home_of(&labels, c).is_none_or(|home| home == j)
            });
            if consistent {
                out.stats.critical_guesses += 1;
                let criticals: Vec<JobId> = choice.iter().map(|&c| jobs[pool[c]].id).collect();
                let lp = build_lp_multi(&pool_jobs, &distribution, &criticals, ws.instance)?;
                let trace = options.trace.then(|| (subset, labels.clone(), criticals.clone(), jobs));
                out.record(&lp, m, trace)?;
            }
            // odometer over pool^m
            for j in (0..m).rev() {
                choice[j] += 1;
                if choice[j] < pool.len() {
                    continue 'combos;
                }
                choice[j] = 0;
            }
            break;
        }
    }
    Ok(out)
}

/// Canonical class count `sum_{k <= min(m, K)} S(K, k)` via the Stirling
/// recurrence; used to cross-check [`distribution_labels`].
pub fn canonical_distribution_count(k: usize, m: usize) -> u64 {
    let mut s = vec![vec![0u64; k + 1]; k + 1];
    s[0][0] = 1;
    for n in 1..=k {
        for b in 1..=n {
            s[n][b] = b as u64 * s[n - 1][b] + s[n - 1][b - 1];
        }
    }
    (0..=k.min(m)).map(|b| s[k][b]).sum()
}

/// Upper bound `(1/2) h^(2/eps) (2 m e^2 / eps)^h` with `h = min(m, K)` on
/// the number of distributions of `K` profitable jobs.
pub fn distribution_count_bound(k: usize, m: usize, epsilon: f64) -> f64 {
    let h = m.min(k) as f64;
    0.5 * h.powf(2.0 / epsilon) * (2.0 * m as f64 * std::f64::consts::E.powi(2) / epsilon).powf(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{int, rat};

    fn job(id: u64, a: (i64, i64), b: (i64, i64), p: i64) -> Job {
        Job::new(id, rat(a.0, a.1), rat(b.0, b.1), int(p))
    }

    fn ids(xs: &[u64]) -> BTreeSet<JobId> {
        xs.iter().map(|&x| JobId(x)).collect()
    }

    #[test]
    fn k_from_epsilon() {
        let p = compute_k(&rat(1, 2)).unwrap();
        assert_eq!((p.k, p.effective_epsilon), (3, rat(1, 2)));
        let p = compute_k(&rat(2, 5)).unwrap();
        assert_eq!((p.k, p.effective_epsilon.clone()), (4, rat(1, 3)));
        assert!(p.effective_epsilon <= p.requested_epsilon);
        let p = compute_k(&rat(1, 3)).unwrap();
        assert_eq!((p.k, p.effective_epsilon), (4, rat(1, 3)));
        for bad in [int(0), int(1), rat(-1, 2), rat(3, 2)] {
            assert_eq!(compute_k(&bad), Err(PtasError::InvalidEpsilon));
        }
    }

    #[test]
    fn effective_epsilon_reproduces_k() {
        for (n, d) in [(1, 2), (2, 5), (1, 7), (3, 10), (99, 100), (1, 1000)] {
            let p = compute_k(&rat(n, d)).unwrap();
            let e = &p.effective_epsilon;
            assert_eq!((Rational::one() + e) / e, Rational::from_integer(BigInt::from(p.k)));
            assert!(p.k >= 2 && *e <= p.requested_epsilon);
        }
    }

    #[test]
    fn small_candidate_counts() {
        let two = vec![job(1, (1, 10), (1, 10), 1), job(2, (1, 10), (1, 10), 1)];
        assert_eq!(enumerate_small_candidates(&two, 3, 1, Symmetry::Canonical).len(), 4);
        let labeled = enumerate_small_candidates(&two, 1, 2, Symmetry::Labeled);
        assert_eq!(labeled.len(), 5);
        let maps: BTreeSet<Vec<(u64, usize)>> =
            labeled.iter().map(|c| c.assignment.iter().map(|(id, j)| (id.0, *j)).collect()).collect();
        let expected: BTreeSet<Vec<(u64, usize)>> =
            [vec![], vec![(1, 0)], vec![(1, 1)], vec![(2, 0)], vec![(2, 1)]].into_iter().collect();
        assert_eq!(maps, expected);
        assert_eq!(enumerate_small_candidates(&two, 1, 2, Symmetry::Canonical).len(), 3);

        let five: Vec<Job> = (1..=5).map(|i| job(i, (1, 10), (1, 10), 1)).collect();
        assert_eq!(enumerate_small_candidates(&five, 3, 1, Symmetry::Canonical).len(), 1 + 5 + 10 + 10);
    }

    #[test]
    fn cheap_pool_threshold() {
        let jobs = vec![job(1, (0, 1), (0, 1), 10), job(2, (0, 1), (0, 1), 10), job(3, (0, 1), (0, 1), 5), job(4, (0, 1), (0, 1), 3)];
        let pool = cheap_pool(&jobs, &ids(&[1, 2])).unwrap();
        assert_eq!(pool.p_min, int(10));
        assert_eq!(pool.pool, ids(&[1, 2, 3, 4]));
        assert_eq!(cheap_pool(&jobs, &ids(&[1, 2, 3, 4])).unwrap().pool, ids(&[1, 2, 3, 4]));

        let jobs = vec![job(1, (0, 1), (0, 1), 10), job(2, (0, 1), (0, 1), 8), job(3, (0, 1), (0, 1), 9), job(4, (0, 1), (0, 1), 12)];
        let pool = cheap_pool(&jobs, &ids(&[1])).unwrap();
        assert_eq!(pool.pool, ids(&[1, 2, 3]));
        let pool = cheap_pool(&jobs, &ids(&[2])).unwrap();
        assert_eq!((pool.p_min, pool.pool), (int(8), ids(&[2])));
        assert!(cheap_pool(&jobs, &BTreeSet::new()).is_none());
    }

    #[test]
    fn distribution_counts() {
        assert_eq!(distribution_labels(3, 2, Symmetry::Labeled).len(), 8);
        assert_eq!(
            distribution_labels(3, 2, Symmetry::Canonical),
            vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1]]
        );
        assert_eq!(distribution_labels(1, 4, Symmetry::Canonical).len(), 1);
        assert_eq!(distribution_labels(2, 3, Symmetry::Labeled).len(), 9);
        assert_eq!(distribution_labels(2, 3, Symmetry::Canonical).len(), 2);
        assert_eq!(canonical_distribution_count(3, 2), 4);
        assert_eq!(canonical_distribution_count(5, 2), 16);
        let maps = enumerate_distributions(&ids(&[4, 9]), 2, Symmetry::Canonical);
        assert_eq!(maps[1], [(JobId(4), 0), (JobId(9), 1)].into_iter().collect());
    }

    #[test]
    fn single_lp_with_one_fixed_job() {
        let j = job(1, (3, 10), (2, 10), 4);
        let lp = build_lp_single(&[&j], &ids(&[1]), JobId(1)).unwrap();
        assert_eq!(lp.rows[0].coefficients, vec![rat(1, 2)]);
        let sol = solve_to_vertex(&lp).unwrap();
        assert_eq!(sol.objective_value, int(4));
        let cand = round_solution(&sol, &lp, 1);
        assert_eq!(cand.assignment.keys().copied().collect::<Vec<_>>(), vec![JobId(1)]);
        assert_eq!(cand.profit, int(4));
    }

    #[test]
    fn single_lp_row_uses_critical_position() {
        let jobs = [job(1, (2, 10), (5, 10), 1), job(2, (4, 10), (3, 10), 1), job(3, (3, 10), (1, 10), 1)];
        let pool: Vec<&Job> = jobs.iter().collect();
        let lp = build_lp_single(&pool, &ids(&[1]), JobId(2)).unwrap();
        assert_eq!(lp.rows[0].coefficients, vec![rat(2, 10), rat(7, 10), rat(1, 10)]);
        assert!(lp.bounds[0].is_fixed() && lp.bounds[1].is_fixed() && !lp.bounds[2].is_fixed());
        assert_eq!(build_lp_single(&pool, &ids(&[1]), JobId(7)), Err(PtasError::NotInPool(JobId(7))));
    }

    #[test]
    fn overpacked_guess_is_infeasible() {
        // a-sum alone is 11/10
        let jobs = [job(1, (6, 10), (1, 10), 5), job(2, (5, 10), (1, 10), 5)];
        let pool: Vec<&Job> = jobs.iter().collect();
        let lp = build_lp_single(&pool, &ids(&[1, 2]), JobId(2)).unwrap();
        assert!(!solve_to_vertex(&lp).unwrap().is_optimal());
    }

    #[test]
    fn rounding_keeps_only_ones() {
        let mut lp = LinearProgram::with_unit_variables(vec![JobId(1), JobId(2), JobId(3)]);
        lp.objective = vec![int(5), int(6), int(7)];
        let basic = BasicSolution {
            status: crate::lp::LpStatus::Optimal,
            values: vec![int(1), rat(1, 2), int(0)],
            objective_value: int(8),
            pivots: 0,
        };
        let cand = round_solution(&basic, &lp, 1);
        assert_eq!(cand.assignment, [(JobId(1), 0)].into_iter().collect());
        assert_eq!(cand.profit, int(5));
        assert_eq!(fractional_jobs(&basic, &lp), 1);
    }

    #[test]
    fn multi_lp_shape() {
        let jobs = vec![job(1, (1, 10), (1, 10), 9), job(2, (1, 10), (1, 10), 8), job(3, (1, 10), (1, 10), 7)];
        let inst = Instance::unit(2, jobs.clone()).unwrap();
        let pool: Vec<&Job> = jobs.iter().collect();
        let dist: BTreeMap<JobId, usize> = [(JobId(1), 0)].into_iter().collect();
        let lp = build_lp_multi(&pool, &dist, &[JobId(1), JobId(2)], &inst).unwrap();
        assert_eq!(lp.num_vars(), 9);
        // 2 makespan rows, dummy row, one equality for job 3
        assert_eq!(lp.rows.len(), 4);
        assert_eq!(lp.rows[2].rhs, rat(6, 10));
        assert_eq!(lp.objective[2], int(0));
        let sol = solve_to_vertex(&lp).unwrap();
        assert_eq!(sol.objective_value, int(24));

        assert_eq!(
            build_lp_multi(&pool, &dist, &[JobId(2), JobId(1)], &inst),
            Err(PtasError::InconsistentGuess(JobId(1)))
        );
        assert_eq!(
            build_lp_multi(&pool, &dist, &[JobId(2), JobId(2)], &inst),
            Err(PtasError::InconsistentGuess(JobId(2)))
        );
    }

    #[test]
    fn multi_lp_routes_leftovers_to_dummy() {
        // both flowshops are full after their guessed jobs; three cheap jobs remain
        let mut jobs = vec![job(1, (1, 2), (1, 2), 10), job(2, (1, 2), (1, 2), 10)];
        jobs.extend((3..=5).map(|i| job(i, (1, 5), (1, 5), 1)));
        let inst = Instance::unit(2, jobs.clone()).unwrap();
        let mut pool: Vec<&Job> = jobs.iter().collect();
        pool.sort_by(|x, y| johnson_cmp(x, y));
        let dist: BTreeMap<JobId, usize> = [(JobId(1), 0), (JobId(2), 1)].into_iter().collect();
        let lp = build_lp_multi(&pool, &dist, &[JobId(1), JobId(2)], &inst).unwrap();
        let sol = solve_to_vertex(&lp).unwrap();
        assert_eq!(sol.objective_value, int(20));
        let cand = round_solution(&sol, &lp, 2);
        assert_eq!(cand.profit, int(20));
        assert_eq!(fractional_jobs(&sol, &lp), 0);
    }

    #[test]
    fn three_job_single_flowshop_example() {
        let inst = Instance::unit(
            1,
            vec![job(1, (5, 10), (3, 10), 10), job(2, (3, 10), (5, 10), 10), job(3, (2, 10), (2, 10), 5)],
        )
        .unwrap();
        let run = ptas_single(&inst, &rat(1, 2), &PtasOptions::default()).unwrap();
        assert_eq!(run.solution.total_profit, int(15));
        assert!(run.solution.feasible);
        assert_eq!(run.solution.per_flowshop_makespan, vec![int(1)]);
    }

    #[test]
    fn single_job_and_empty() {
        let inst = Instance::unit(1, vec![job(1, (4, 10), (4, 10), 7)]).unwrap();
        assert_eq!(ptas_single(&inst, &rat(1, 2), &PtasOptions::default()).unwrap().solution.total_profit, int(7));
        let empty = Instance::unit(2, vec![]).unwrap();
        let run = ptas_multi(&empty, &rat(1, 2), &PtasOptions::default()).unwrap();
        assert_eq!(run.solution, Solution::empty(2));
    }

    #[test]
    fn two_flowshops_take_one_big_job_each() {
        let jobs = (1..=3).map(|i| job(i, (1, 2), (1, 2), 10)).collect();
        let inst = Instance::unit(2, jobs).unwrap();
        for options in [PtasOptions::default(), PtasOptions::raw()] {
            let run = ptas_multi(&inst, &rat(1, 2), &options).unwrap();
            assert_eq!(run.solution.total_profit, int(20));
            assert!(run.solution.feasible);
        }
    }

    #[test]
    fn rejects_wrong_shapes() {
        let inst = Instance::unit(2, vec![]).unwrap();
        assert_eq!(ptas_single(&inst, &rat(1, 2), &PtasOptions::default()), Err(PtasError::NotSingleFlowshop(2)));
        let raw = Instance::new(1, vec![], int(2)).unwrap();
        assert_eq!(ptas_single(&raw, &rat(1, 2), &PtasOptions::default()), Err(PtasError::NotNormalized));
        let inst = Instance::unit(1, vec![]).unwrap();
        assert_eq!(ptas_single(&inst, &int(1), &PtasOptions::default()), Err(PtasError::InvalidEpsilon));
    }

    #[test]
    fn canonical_keys_relabel_by_first_appearance() {
        let key = canonical_key([(JobId(5), 1), (JobId(2), 3), (JobId(9), 3)]);
        assert_eq!(key, vec![(JobId(2), 0), (JobId(5), 1), (JobId(9), 0)]);
    }

    #[test]
    fn scaled_epsilon() {
        let e = internal_epsilon(&rat(3, 4), 2, &PtasOptions::default()).unwrap();
        assert_eq!(e, rat(1, 4));
        assert_eq!(internal_epsilon(&rat(3, 4), 2, &PtasOptions::raw()).unwrap(), rat(3, 4));
        assert_eq!(internal_epsilon(&rat(3, 4), 1, &PtasOptions::default()).unwrap(), rat(3, 4));
    }
}
