//! Runs the scheme and the exact oracle over a directory of instance files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use flowpack::model::{format_rational, Rational};
use flowpack::oracle::{exact_opt, OracleError};
use flowpack::ptas::{self, PtasOptions};
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::files::read_instance;
use crate::HarnessError;

pub const CSV_HEADER: &str =
    "instance,n,m,epsilon,algorithm,profit,opt,ratio,feasible,ms,subset_guesses,distribution_guesses,critical_guesses,lp_solves";

#[derive(Debug, Clone, Default)]
pub struct BenchOptions {
    pub epsilons: Vec<Rational>,
    pub raw_epsilon: bool,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
    /// Leave the `ms` column empty so output is reproducible byte for byte.
    pub no_timing: bool,
}

/// One CSV line. Numbers are exact fraction strings; empty cells are `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchmarkRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub epsilon: Option<String>,
    pub algorithm: &'static str,
    pub profit: String,
    pub opt: Option<String>,
    pub ratio: Option<String>,
    pub feasible: bool,
    pub ms: Option<u128>,
    pub subset_guesses: Option<u64>,
    pub distribution_guesses: Option<u64>,
    pub critical_guesses: Option<u64>,
    pub lp_solves: Option<u64>,
}

fn instance_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| HarnessError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn ratio(profit: &Rational, opt: Option<&Rational>) -> Option<String> {
    opt.filter(|o| !o.is_zero()).map(|o| format_rational(&(profit / o)))
}

fn bench_instance(path: &Path, options: &BenchOptions) -> Result<Vec<BenchmarkRow>, HarnessError> {
    let instance = read_instance(path)?.instance;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (n, m) = (instance.n(), instance.m);
    let elapsed = |start: Instant| (!options.no_timing).then(|| start.elapsed().as_millis());

    let mut rows = Vec::new();
    let start = Instant::now();
    let opt = match exact_opt(&instance) {
        Ok(sol) => {
            rows.push(BenchmarkRow {
                instance: id.clone(),
                n,
                m,
                epsilon: None,
                algorithm: "exact",
                profit: format_rational(&sol.total_profit),
                opt: Some(format_rational(&sol.total_profit)),
                ratio: ratio(&sol.total_profit, Some(&sol.total_profit)),
                feasible: sol.feasible,
                ms: elapsed(start),
                subset_guesses: None,
                distribution_guesses: None,
                critical_guesses: None,
                lp_solves: None,
            });
            Some(sol.total_profit)
        }
        Err(OracleError::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let ptas_options = if options.raw_epsilon { PtasOptions::raw() } else { PtasOptions::default() };
    for eps in &options.epsilons {
        let start = Instant::now();
        let run = ptas::solve(&instance, eps, &ptas_options)?;
        rows.push(BenchmarkRow {
            instance: id.clone(),
            n,
            m,
            epsilon: Some(format_rational(eps)),
            algorithm: "ptas",
            profit: format_rational(&run.solution.total_profit),
            opt: opt.as_ref().map(format_rational),
            ratio: ratio(&run.solution.total_profit, opt.as_ref()),
            feasible: run.solution.feasible,
            ms: elapsed(start),
            subset_guesses: Some(run.stats.subset_guesses),
            distribution_guesses: Some(run.stats.distribution_guesses),
            critical_guesses: Some(run.stats.critical_guesses),
            lp_solves: Some(run.stats.lp_solves),
        });
    }
    Ok(rows)
}

/// Benchmarks every `*.json` file in `dir`. Rows are grouped by instance id
/// (the file stem) in sorted order, so the result does not depend on threading.
pub fn run_bench(dir: &Path, options: &BenchOptions) -> Result<Vec<BenchmarkRow>, HarnessError> {
    let files = instance_files(dir)?;
    let work = || -> Result<Vec<Vec<BenchmarkRow>>, HarnessError> {
        files.par_iter().map(|path| bench_instance(path, options)).collect()
    };
    let groups = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| HarnessError::Usage(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut rows: Vec<BenchmarkRow> = groups.into_iter().flatten().collect();
    rows.sort_by(|x, y| x.instance.cmp(&y.instance));
    Ok(rows)
}

pub fn to_csv(rows: &[BenchmarkRow]) -> String {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("in-memory write");
    }
    let body = String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    format!("{CSV_HEADER}\n{body}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::files::write_instance;
    use crate::generate::{generate_instance, Profile};
    use flowpack::model::rat;

    #[test]
    fn empty_directory_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let rows = run_bench(dir.path(), &BenchOptions { epsilons: vec![rat(1, 2)], ..Default::default() }).unwrap();
        assert_eq!(to_csv(&rows), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn rows_follow_instance_order() {
        let dir = tempfile::tempdir().unwrap();
        for (name, seed) in [("b", 1), ("a", 2), ("c", 3)] {
            let inst = generate_instance(5, 1, seed, Profile::Uniform).unwrap();
            std::fs::write(dir.path().join(format!("{name}.json")), write_instance(&inst)).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let options = BenchOptions { epsilons: vec![rat(1, 2), rat(1, 3)], no_timing: true, ..Default::default() };
        let rows = run_bench(dir.path(), &options).unwrap();
        let order: Vec<(&str, &str)> = rows.iter().map(|r| (r.instance.as_str(), r.algorithm)).collect();
        assert_eq!(order[..3], [("a", "exact"), ("a", "ptas"), ("a", "ptas")]);
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().all(|r| r.feasible && r.ms.is_none()));
        let csv = to_csv(&rows);
        assert!(csv.lines().nth(1).unwrap().starts_with("a,5,1,,exact,"));
    }

    #[test]
    fn oracle_refusal_leaves_ratio_empty() {
        let dir = tempfile::tempdir().unwrap();
        let inst = generate_instance(15, 1, 9, Profile::KnapsackDegenerate).unwrap();
        std::fs::write(dir.path().join("big.json"), write_instance(&inst)).unwrap();
        let options = BenchOptions { epsilons: vec![rat(1, 2)], no_timing: true, ..Default::default() };
        let rows = run_bench(dir.path(), &options).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].opt.as_deref(), rows[0].ratio.as_deref()), (None, None));
        assert!(to_csv(&rows).contains(",,,true,,"));
    }
}
