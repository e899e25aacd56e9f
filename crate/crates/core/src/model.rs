//! Domain types shared by every solver component: exact rationals, jobs,
//! instances and solutions.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty number")]
    Empty,
    #[error("malformed number {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses `"3"`, `"-0.25"`, `".5"` or `"3/10"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let malformed = || ParseRationalError::Malformed(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_signed_integer(num.trim()).ok_or_else(malformed)?;
        let den = parse_signed_integer(den.trim()).ok_or_else(malformed)?;
        if den.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(malformed());
    }
    if !whole.bytes().chain(frac.bytes()).all(|c| c.is_ascii_digit()) {
        return Err(malformed());
    }
    let digits = format!("{whole}{frac}");
    let numer = BigInt::from_str(&digits).map_err(|_| malformed())?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

fn parse_signed_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    BigInt::from_str(s.strip_prefix('+').unwrap_or(s)).ok()
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J{}", self.0)
    }
}

/// A two-stage job: `a` on the first machine, then `b` on the second, worth `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub id: JobId,
    pub a: Rational,
    pub b: Rational,
    pub p: Rational,
}

impl Job {
    pub fn new(id: u64, a: Rational, b: Rational, p: Rational) -> Self {
        Job { id: JobId(id), a, b, p }
    }

    pub fn load(&self) -> Rational {
        &self.a + &self.b
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("number of flowshops must be positive")]
    NoFlowshops,
    #[error("makespan bound must be positive, got {0}")]
    NonPositiveBound(String),
    #[error("duplicate job id {0}")]
    DuplicateId(JobId),
    #[error("job {id} has negative {field}")]
    Negative { id: JobId, field: &'static str },
}

/// `m` identical two-stage flowshops and the jobs competing for them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub m: usize,
    pub jobs: Vec<Job>,
    pub makespan_bound: Rational,
}

impl Instance {
    /// Builds an instance, checking ids, signs and the bound.
    pub fn new(m: usize, jobs: Vec<Job>, makespan_bound: Rational) -> Result<Self, InstanceError> {
        if m == 0 {
            return Err(InstanceError::NoFlowshops);
        }
        if !makespan_bound.is_positive() {
            return Err(InstanceError::NonPositiveBound(format_rational(&makespan_bound)));
        }
        let mut seen = HashSet::with_capacity(jobs.len());
        for job in &jobs {
            if !seen.insert(job.id) {
                return Err(InstanceError::DuplicateId(job.id));
            }
            for (field, value) in [("a", &job.a), ("b", &job.b), ("p", &job.p)] {
                if value.is_negative() {
                    return Err(InstanceError::Negative { id: job.id, field });
                }
            }
        }
        Ok(Instance { m, jobs, makespan_bound })
    }

    /// Instance with unit makespan bound.
    pub fn unit(m: usize, jobs: Vec<Job>) -> Result<Self, InstanceError> {
        Instance::new(m, jobs, Rational::one())
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    pub fn job(&self, id: JobId) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn position(&self, id: JobId) -> Option<usize> {
        self.jobs.iter().position(|j| j.id == id)
    }

    pub fn with_flowshops(&self, m: usize) -> Self {
        Instance { m, ..self.clone() }
    }

    /// a(J) + b(J) over all jobs.
    pub fn total_load(&self) -> Rational {
        self.jobs.iter().map(Job::load).sum()
    }
}

/// Result of [`normalize_instance`]: the scaled instance and the ids of jobs
/// that could never be scheduled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub instance: Instance,
    pub dropped: Vec<JobId>,
}

/// Scales workloads so the makespan bound becomes 1 and removes jobs with
/// `a + b > 1`, which no feasible schedule can contain.
pub fn normalize_instance(raw: &Instance) -> Result<Normalized, InstanceError> {
    // Re-validate: fields are public and may have been edited after `new`.
    let checked = Instance::new(raw.m, raw.jobs.clone(), raw.makespan_bound.clone())?;
    let bound = checked.makespan_bound;
    let mut jobs = Vec::with_capacity(checked.jobs.len());
    let mut dropped = Vec::new();
    for job in checked.jobs {
        let scaled = Job {
            id: job.id,
            a: &job.a / &bound,
            b: &job.b / &bound,
            p: job.p,
        };
        if scaled.load() > Rational::one() {
            dropped.push(scaled.id);
        } else {
            jobs.push(scaled);
        }
    }
    Ok(Normalized {
        instance: Instance { m: checked.m, jobs, makespan_bound: Rational::one() },
        dropped,
    })
}

/// A schedule: one ordered job sequence per flowshop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub per_flowshop: Vec<Vec<JobId>>,
    pub total_profit: Rational,
    pub per_flowshop_makespan: Vec<Rational>,
    pub feasible: bool,
}

impl Solution {
    pub fn empty(m: usize) -> Self {
        Solution {
            per_flowshop: vec![Vec::new(); m],
            total_profit: Rational::zero(),
            per_flowshop_makespan: vec![Rational::zero(); m],
            feasible: true,
        }
    }

    pub fn job_count(&self) -> usize {
        self.per_flowshop.iter().map(Vec::len).sum()
    }

    pub fn job_ids(&self) -> impl Iterator<Item = JobId> + '_ {
        self.per_flowshop.iter().flatten().copied()
    }
}
