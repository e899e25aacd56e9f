//! JSON instance and solution files. Every number travels as a string
//! (`"0.3"` or `"3/10"`) so values survive the file boundary exactly.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use flowpack::johnson::{makespan_closed_form, simulate_makespan};
use flowpack::model::{format_rational, normalize_instance, parse_rational, Instance, Job, JobId, Rational, Solution};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

pub const INSTANCE_VERSION: u32 = 1;
pub const SOLUTION_VERSION: u32 = 1;

fn default_version() -> u32 {
    INSTANCE_VERSION
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub m: usize,
    pub makespan_bound: String,
    pub jobs: Vec<JobRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRecord {
    pub id: u64,
    pub a: String,
    pub b: String,
    pub p: String,
}

/// A parsed, normalized instance plus the ids of jobs that were too large to
/// ever fit and were dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedInstance {
    pub instance: Instance,
    pub dropped: Vec<JobId>,
}

fn number(field: &str, text: &str) -> Result<Rational, HarnessError> {
    parse_rational(text).map_err(|source| HarnessError::BadNumber { field: field.to_string(), source })
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> Self {
        InstanceFile {
            version: INSTANCE_VERSION,
            m: instance.m,
            makespan_bound: format_rational(&instance.makespan_bound),
            jobs: instance
                .jobs
                .iter()
                .map(|j| JobRecord {
                    id: j.id.0,
                    a: format_rational(&j.a),
                    b: format_rational(&j.b),
                    p: format_rational(&j.p),
                })
                .collect(),
        }
    }

    /// The raw instance, before normalization.
    pub fn to_instance(&self) -> Result<Instance, HarnessError> {
        if self.version != INSTANCE_VERSION {
            return Err(HarnessError::UnsupportedVersion(self.version));
        }
        let bound = number("makespan_bound", &self.makespan_bound)?;
        let jobs = self
            .jobs
            .iter()
            .map(|r| {
                Ok(Job::new(
                    r.id,
                    number(&format!("jobs[{}].a", r.id), &r.a)?,
                    number(&format!("jobs[{}].b", r.id), &r.b)?,
                    number(&format!("jobs[{}].p", r.id), &r.p)?,
                ))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        Ok(Instance::new(self.m, jobs, bound)?)
    }
}

/// Reads an instance file and normalizes it to a unit makespan bound.
pub fn parse_instance(reader: impl Read) -> Result<ParsedInstance, HarnessError> {
    let file: InstanceFile = serde_json::from_reader(reader).map_err(HarnessError::Json)?;
    let normalized = normalize_instance(&file.to_instance()?)?;
    Ok(ParsedInstance { instance: normalized.instance, dropped: normalized.dropped })
}

pub fn read_instance(path: &Path) -> Result<ParsedInstance, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_instance(std::io::BufReader::new(file))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    text
}

pub fn write_instance(instance: &Instance) -> String {
    to_pretty_json(&InstanceFile::from_instance(instance))
}

/// SHA-256 of the canonical instance text.
pub fn instance_digest(instance: &Instance) -> String {
    hex::encode(Sha256::digest(write_instance(instance).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub version: u32,
    pub instance_digest: String,
    pub algorithm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
    pub total_profit: String,
    pub feasible: bool,
    pub flowshops: Vec<FlowshopRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowshopRecord {
    pub jobs: Vec<u64>,
    pub makespan: String,
}

impl SolutionFile {
    pub fn new(instance: &Instance, solution: &Solution, algorithm: &str, epsilon: Option<&Rational>) -> Self {
        SolutionFile {
            version: SOLUTION_VERSION,
            instance_digest: instance_digest(instance),
            algorithm: algorithm.to_string(),
            epsilon: epsilon.map(format_rational),
            total_profit: format_rational(&solution.total_profit),
            feasible: solution.feasible,
            flowshops: solution
                .per_flowshop
                .iter()
                .zip(&solution.per_flowshop_makespan)
                .map(|(jobs, makespan)| FlowshopRecord {
                    jobs: jobs.iter().map(|id| id.0).collect(),
                    makespan: format_rational(makespan),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        to_pretty_json(self)
    }
}

pub fn read_solution(path: &Path) -> Result<SolutionFile, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(HarnessError::Json)
}

/// Recomputes everything a solution file claims. Empty means valid.
pub fn verify(instance: &Instance, solution: &SolutionFile) -> Vec<String> {
    let mut violations = Vec::new();
    if solution.instance_digest != instance_digest(instance) {
        violations.push("solution was produced for a different instance".to_string());
    }
    if solution.flowshops.len() != instance.m {
        violations.push(format!("{} flowshops listed, instance has {}", solution.flowshops.len(), instance.m));
    }
    let mut seen = HashSet::new();
    let mut profit = Rational::zero();
    let mut all_fit = true;
    for (j, shop) in solution.flowshops.iter().enumerate() {
        let mut seq = Vec::with_capacity(shop.jobs.len());
        for &id in &shop.jobs {
            if !seen.insert(id) {
                violations.push(format!("job {id} scheduled more than once"));
            }
            match instance.job(JobId(id)) {
                Some(job) => {
                    profit += &job.p;
                    seq.push(job);
                }
                None => violations.push(format!("job {id} is not in the instance")),
            }
        }
        let simulated = simulate_makespan(&seq);
        debug_assert_eq!(simulated, makespan_closed_form(&seq).makespan);
        if simulated > Rational::one() {
            all_fit = false;
            violations.push(format!("flowshop {} finishes at {}", j + 1, format_rational(&simulated)));
        }
        match parse_rational(&shop.makespan) {
            Ok(claimed) if claimed == simulated => {}
            _ => violations.push(format!(
                "flowshop {} claims makespan {:?}, recomputed {}",
                j + 1,
                shop.makespan,
                format_rational(&simulated)
            )),
        }
    }
    match parse_rational(&solution.total_profit) {
        Ok(claimed) if claimed == profit => {}
        _ => violations.push(format!(
            "claimed profit {:?}, recomputed {}",
            solution.total_profit,
            format_rational(&profit)
        )),
    }
    if solution.feasible != all_fit {
        violations.push(format!("feasible flag {} disagrees with the makespans", solution.feasible));
    }
    violations
}
