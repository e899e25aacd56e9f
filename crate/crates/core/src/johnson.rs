//! Johnson's rule for the two-machine flowshop and the closed-form makespan
//! of a permutation schedule.

use std::borrow::Borrow;
use std::cmp::Ordering;

use num_traits::Zero;

use crate::model::{Job, Rational, Solution};

/// Jobs in Johnson order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedSequence {
    pub jobs: Vec<Job>,
}

impl OrderedSequence {
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MakespanReport {
    pub makespan: Rational,
    /// Smallest 1-based `s` attaining the maximum; `None` for an empty sequence.
    pub critical_position: Option<usize>,
}

/// Total order realizing Johnson's rule: jobs with `a <= b` by ascending `a`,
/// then jobs with `a > b` by descending `b`, ties by ascending id.
pub fn johnson_cmp(x: &Job, y: &Job) -> Ordering {
    let x_head = x.a <= x.b;
    let y_head = y.a <= y.b;
    let by_key = match (x_head, y_head) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => x.a.cmp(&y.a),
        (false, false) => y.b.cmp(&x.b),
    };
    by_key.then_with(|| x.id.cmp(&y.id))
}

/// The pairwise precedence condition `min{a_i, b_j} <= min{a_j, b_i}`.
pub fn may_precede(first: &Job, second: &Job) -> bool {
    std::cmp::min(&first.a, &second.b) <= std::cmp::min(&second.a, &first.b)
}

pub fn johnson_order(jobs: &[Job]) -> OrderedSequence {
    let mut jobs = jobs.to_vec();
    jobs.sort_by(johnson_cmp);
    OrderedSequence { jobs }
}

/// `max_s { a_1 + .. + a_s + b_s + .. + b_n }` in one pass.
pub fn makespan_closed_form<J: Borrow<Job>>(seq: &[J]) -> MakespanReport {
    if seq.is_empty() {
        return MakespanReport { makespan: Rational::zero(), critical_position: None };
    }
    // suffix b-sums are folded in by tracking prefix(a) - prefix(b) before s.
    let total_b: Rational = seq.iter().map(|j| &j.borrow().b).sum();
    let mut prefix_a = Rational::zero();
    let mut prefix_b = Rational::zero();
    let mut best: Option<(Rational, usize)> = None;
    for (idx, job) in seq.iter().enumerate() {
        let job = job.borrow();
        prefix_a += &job.a;
        let value = &prefix_a + &total_b - &prefix_b;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, idx + 1));
        }
        prefix_b += &job.b;
    }
    let (makespan, s) = best.expect("nonempty sequence");
    MakespanReport { makespan, critical_position: Some(s) }
}

/// Event simulation of the two machines; independent of the closed form.
pub fn simulate_makespan<J: Borrow<Job>>(seq: &[J]) -> Rational {
    let mut first = Rational::zero();
    let mut second = Rational::zero();
    for job in seq {
        let job = job.borrow();
        first += &job.a;
        second = std::cmp::max(second, first.clone()) + &job.b;
    }
    second
}

pub fn min_makespan_schedule(jobs: &[Job]) -> (OrderedSequence, MakespanReport) {
    let seq = johnson_order(jobs);
    let report = makespan_closed_form(&seq.jobs);
    (seq, report)
}

/// Johnson-schedules each flowshop's job group and assembles a [`Solution`]
/// checked against a unit makespan bound.
pub fn schedule_groups<J: Borrow<Job>>(groups: &[Vec<J>]) -> Solution {
    let mut per_flowshop = Vec::with_capacity(groups.len());
    let mut per_flowshop_makespan = Vec::with_capacity(groups.len());
    let mut total_profit = Rational::zero();
    for group in groups {
        let mut seq: Vec<&Job> = group.iter().map(Borrow::borrow).collect();
        seq.sort_by(|x, y| johnson_cmp(x, y));
        total_profit += seq.iter().map(|j| &j.p).sum::<Rational>();
        per_flowshop_makespan.push(makespan_closed_form(&seq).makespan);
        per_flowshop.push(seq.iter().map(|j| j.id).collect());
    }
    let one = num_traits::One::one();
    let feasible = per_flowshop_makespan.iter().all(|c| *c <= one);
    Solution { per_flowshop, total_profit, per_flowshop_makespan, feasible }
}
