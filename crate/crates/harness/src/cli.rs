use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use flowpack::model::{parse_rational, Rational};
use flowpack::oracle::exact_opt;
use flowpack::ptas::{self, PtasOptions};

use crate::bench::{run_bench, to_csv, BenchOptions};
use crate::files::{read_instance, read_solution, verify, write_instance, ParsedInstance, SolutionFile};
use crate::generate::{generate_instance, Profile};
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "flowpack", version, about = "Select and schedule two-stage jobs on identical flowshops")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Ptas,
    Exact,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and write a solution file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Accuracy in (0, 1), decimal or fraction. Required for the scheme.
        #[arg(long, value_parser = parse_epsilon)]
        epsilon: Option<Rational>,
        #[arg(long, value_enum, default_value = "ptas")]
        algorithm: Algorithm,
        /// Use epsilon as given instead of dividing by m + 1.
        #[arg(long)]
        raw_epsilon: bool,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute makespans and profit of a solution file.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Write a seeded random instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "uniform")]
        profile: Profile,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the scheme with the exact optimum on every *.json in a directory.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_epsilon)]
        epsilons: Vec<Rational>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        raw_epsilon: bool,
        #[arg(long)]
        threads: Option<usize>,
        /// Leave the ms column empty.
        #[arg(long)]
        no_timing: bool,
    },
}

fn parse_epsilon(text: &str) -> Result<Rational, String> {
    let eps = parse_rational(text).map_err(|e| e.to_string())?;
    ptas::compute_k(&eps).map_err(|e| e.to_string())?;
    Ok(eps)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => stdout.write_all(text.as_bytes()).map_err(|e| HarnessError::io(Path::new("<stdout>"), e)),
    }
}

fn load(path: &Path, stderr: &mut dyn Write) -> Result<ParsedInstance, HarnessError> {
    let parsed = read_instance(path)?;
    for id in &parsed.dropped {
        let _ = writeln!(stderr, "warning: {id} cannot fit on any flowshop and was dropped");
    }
    Ok(parsed)
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), HarnessError> {
    match cli.command {
        Command::Solve { instance, epsilon, algorithm, raw_epsilon, out } => {
            let instance = load(&instance, stderr)?.instance;
            let (solution, name) = match algorithm {
                Algorithm::Exact => (exact_opt(&instance)?, "exact"),
                Algorithm::Ptas => {
                    let eps = epsilon
                        .as_ref()
                        .ok_or_else(|| HarnessError::Usage("--epsilon is required with --algorithm ptas".into()))?;
                    let options = if raw_epsilon { PtasOptions::raw() } else { PtasOptions::default() };
                    (ptas::solve(&instance, eps, &options)?.solution, "ptas")
                }
            };
            assert!(solution.feasible, "the empty selection always fits");
            let file = SolutionFile::new(&instance, &solution, name, epsilon.as_ref());
            emit(out.as_deref(), &file.to_json(), stdout)
        }
        Command::Verify { instance, solution } => {
            let instance = load(&instance, stderr)?.instance;
            let violations = verify(&instance, &read_solution(&solution)?);
            if violations.is_empty() {
                let _ = writeln!(stdout, "ok");
                Ok(())
            } else {
                Err(HarnessError::Violations(violations))
            }
        }
        Command::Gen { n, m, seed, profile, out } => {
            let instance = generate_instance(n, m, seed, profile)?;
            emit(out.as_deref(), &write_instance(&instance), stdout)
        }
        Command::Bench { dir, epsilons, csv, raw_epsilon, threads, no_timing } => {
            let rows = run_bench(&dir, &BenchOptions { epsilons, raw_epsilon, threads, no_timing })?;
            emit(csv.as_deref(), &to_csv(&rows), stdout)
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("flowpack").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    const THREE_JOBS: &str = r#"{"m":1,"makespan_bound":"1","jobs":[
        {"id":1,"a":"0.5","b":"0.3","p":"10"},
        {"id":2,"a":"0.3","b":"0.5","p":"10"},
        {"id":3,"a":"0.2","b":"0.2","p":"5"}]}"#;

    #[test]
    fn solve_then_verify() {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("three.json");
        let sol = dir.path().join("three.sol.json");
        std::fs::write(&inst, THREE_JOBS).unwrap();
        let (code, _, err) = call(&["solve", "--instance", inst.to_str().unwrap(), "--epsilon", "0.5", "--out", sol.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let file: SolutionFile = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
        assert_eq!(file.total_profit, "15");
        assert_eq!(file.flowshops[0].makespan, "1");
        let (code, out, _) = call(&["verify", "--instance", inst.to_str().unwrap(), "--solution", sol.to_str().unwrap()]);
        assert_eq!((code, out.as_str()), (0, "ok\n"));
    }

    #[test]
    fn tampered_solution_fails_verification() {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("three.json");
        let sol = dir.path().join("sol.json");
        std::fs::write(&inst, THREE_JOBS).unwrap();
        call(&["solve", "--instance", inst.to_str().unwrap(), "--epsilon", "1/2", "--out", sol.to_str().unwrap()]);
        let mut file: SolutionFile = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
        file.flowshops[0].jobs.push(1);
        std::fs::write(&sol, file.to_json()).unwrap();
        let (code, _, err) = call(&["verify", "--instance", inst.to_str().unwrap(), "--solution", sol.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("finishes at"), "{err}");
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.json");
        assert_eq!(call(&["solve", "--instance", missing.to_str().unwrap(), "--epsilon", "0.5"]).0, 2);
        assert_eq!(call(&["solve", "--instance", "x.json", "--epsilon", "1.5"]).0, 2);
        assert_eq!(call(&["gen", "--n", "3", "--m", "1", "--seed", "1", "--profile", "gaussian"]).0, 2);

        let big = dir.path().join("big.json");
        std::fs::write(&big, write_instance(&generate_instance(20, 1, 1, Profile::Uniform).unwrap())).unwrap();
        assert_eq!(call(&["solve", "--instance", big.to_str().unwrap(), "--algorithm", "exact"]).0, 3);
        assert_eq!(call(&["solve", "--instance", big.to_str().unwrap()]).0, 2);
    }

    #[test]
    fn gen_prints_a_parsable_instance() {
        let (code, out, _) = call(&["gen", "--n", "4", "--m", "2", "--seed", "3", "--profile", "tight"]);
        assert_eq!(code, 0);
        let parsed = crate::files::parse_instance(out.as_bytes()).unwrap();
        assert_eq!(parsed.instance, generate_instance(4, 2, 3, Profile::Tight).unwrap());
    }

    #[test]
    fn bench_on_empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, _) = call(&["bench", "--dir", dir.path().to_str().unwrap(), "--epsilons", "1/2,1/3"]);
        assert_eq!(code, 0);
        assert_eq!(out, format!("{}\n", crate::CSV_HEADER));
    }
}
