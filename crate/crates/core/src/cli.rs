//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 2 for input errors, 3 for estimation domain errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::counts::{self, CountPair, MultiplicityTable};
use crate::error::{Error, Result};
use crate::estimators::{estimate, Divergence, Estimator};
use crate::experiment::{self, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dirmix",
    version,
    about = "Bayesian estimators of KL and squared Hellinger divergences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a divergence from two count files, or from one n,m CSV.
    Estimate(EstimateArgs),
    /// Run a convergence benchmark and write one CSV row per estimate.
    Convergence(ExperimentArgs),
    /// Compute N*/K scores over a grid of true concentration parameters.
    Nstar(ExperimentArgs),
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// `category<TAB>count` file of the first sample, or an `n,m` CSV when
    /// no second file is given.
    file1: PathBuf,
    /// Count file of the second sample.
    file2: Option<PathBuf>,
    #[arg(long, default_value = "dpm")]
    estimator: String,
    #[arg(long, default_value = "kl")]
    divergence: String,
    /// Number of categories; overrides `#K=` headers.
    #[arg(long)]
    k: Option<u64>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// `key=value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// dirichlet or markov.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated true α values for nstar scans.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long)]
    beta_grid: Option<String>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    gram_length: Option<u32>,
    #[arg(long)]
    chain_seed_q: Option<u64>,
    #[arg(long)]
    chain_seed_t: Option<u64>,
    /// Comma-separated sample sizes, strictly increasing.
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated subset of dpm,dp,naive,jeffreys,trybula,perks,zhang.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    divergence: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Draw the ladder as nested subsamples of one parent sample.
    #[arg(long)]
    nested_subsample: bool,
    #[arg(long)]
    parent_size: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut map = match &self.config {
            Some(p) => experiment::parse_kv(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let mut set = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(key.to_string(), v);
            }
        };
        set("generator", self.generator.clone());
        set("k", self.k.map(|v| v.to_string()));
        set("alpha_true", self.alpha.map(|v| v.to_string()));
        set("beta_true", self.beta.map(|v| v.to_string()));
        set("alpha_grid", self.alpha_grid.clone());
        set("beta_grid", self.beta_grid.clone());
        set("states", self.states.map(|v| v.to_string()));
        set("gram_length", self.gram_length.map(|v| v.to_string()));
        set("chain_seed_q", self.chain_seed_q.map(|v| v.to_string()));
        set("chain_seed_t", self.chain_seed_t.map(|v| v.to_string()));
        set("size_ladder", self.ladder.clone());
        set("repetitions", self.reps.map(|v| v.to_string()));
        set("estimators", self.estimator.clone());
        set("divergence", self.divergence.clone());
        set("master_seed", self.seed.map(|v| v.to_string()));
        set("nested_subsample", self.nested_subsample.then(|| "true".to_string()));
        set("parent_size", self.parent_size.map(|v| v.to_string()));
        set("threads", self.threads.map(|v| v.to_string()));
        // flags and file may spell a key differently; keep the flag's value
        for (alias, key) in [
            ("alpha", "alpha_true"),
            ("beta", "beta_true"),
            ("ladder", "size_ladder"),
            ("reps", "repetitions"),
            ("estimator", "estimators"),
            ("seed", "master_seed"),
        ] {
            if let Some(v) = map.remove(alias) {
                map.entry(key.to_string()).or_insert(v);
            }
        }
        ExperimentConfig::from_map(&map)
    }
}

fn write_output(
    out: Option<&Path>,
    stdout: &mut dyn Write,
    f: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(p) => {
            let mut file = std::io::BufWriter::new(fs::File::create(p)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

fn load_table(args: &EstimateArgs) -> Result<MultiplicityTable> {
    match &args.file2 {
        Some(f2) => counts::read_pair_files(&args.file1, f2, args.k),
        None => {
            let table = counts::read_pair_csv(&args.file1)?;
            match args.k {
                Some(k) if k != table.k() => {
                    let pairs: Vec<CountPair> = table
                        .entries()
                        .iter()
                        .filter(|(p, _)| *p != CountPair::ZERO)
                        .flat_map(|&(p, nu)| std::iter::repeat_n(p, nu as usize))
                        .collect();
                    MultiplicityTable::from_pairs(pairs, k)
                }
                _ => Ok(table),
            }
        }
    }
}

fn cmd_estimate(args: &EstimateArgs, stdout: &mut dyn Write) -> Result<()> {
    let estimator: Estimator = args.estimator.parse()?;
    let divergence: Divergence = args.divergence.parse()?;
    let table = load_table(args)?;
    let report = estimate(&table, estimator, divergence)?;
    let mut obj = serde_json::json!({
        "estimator": estimator.name(),
        "divergence": divergence.name(),
        "value": report.value,
        "diagnostics": report.diagnostics,
    });
    if let Some(s) = report.posterior_std {
        obj["posterior_std"] = serde_json::json!(s);
    }
    writeln!(stdout, "{obj}")?;
    Ok(())
}

fn cmd_convergence(args: &ExperimentArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.config()?;
    let rows = experiment::run_convergence(&cfg)?;
    write_output(args.out.as_deref(), stdout, |w| {
        experiment::write_convergence_csv(&rows, w)
    })
}

fn cmd_nstar(args: &ExperimentArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.config()?;
    let rows = experiment::run_nstar(&cfg)?;
    write_output(args.out.as_deref(), stdout, |w| experiment::write_nstar_csv(&rows, w))
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_DOMAIN
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, stdout),
        Command::Convergence(a) => cmd_convergence(a, stdout),
        Command::Nstar(a) => cmd_nstar(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("dirmix").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["estimate"]).0, EXIT_INPUT);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        fs::write(&path, "k=50\nreps=4\nladder=10,20\nseed=9\n").unwrap();
        let cli = Cli::try_parse_from([
            "dirmix",
            "convergence",
            "--config",
            path.to_str().unwrap(),
            "--reps",
            "2",
            "--ladder",
            "5,7,9",
        ])
        .unwrap();
        let Command::Convergence(a) = cli.command else { panic!() };
        let c = a.config().unwrap();
        assert_eq!((c.k, c.repetitions, c.master_seed), (50, 2, 9));
        assert_eq!(c.size_ladder, vec![5, 7, 9]);
    }
}
