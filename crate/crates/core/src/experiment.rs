//! Convergence benchmarks on synthetic data with known divergences.
//!
//! Every repetition draws from its own generator, seeded from the master
//! seed by a counter (`stream = cell << 32 | rep`), so results do not depend
//! on scheduling or thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::MultiplicityTable;
use crate::error::{Error, Result};
use crate::estimators::{estimate, Divergence, Estimator};
use crate::synth::{self, MarkovChainSpec, ProbabilityVector};

/// Relative error that counts as converged.
pub const CONVERGENCE_TOL: f64 = 0.05;

pub const DEFAULT_LADDER: [u64; 9] = [25, 50, 100, 200, 400, 1_000, 4_000, 10_000, 40_000];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Dirichlet,
    Markov,
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(GeneratorKind::Dirichlet),
            "markov" => Ok(GeneratorKind::Markov),
            _ => Err(Error::Config(format!(
                "unknown generator {s:?} (expected dirichlet or markov)"
            ))),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Dirichlet => "dirichlet",
            GeneratorKind::Markov => "markov",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub generator: GeneratorKind,
    /// Categories of the Dirichlet generator.
    pub k: u64,
    pub alpha_true: f64,
    pub beta_true: f64,
    /// `(α, β)` grid for N* scans; defaults to the single true pair.
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub states: usize,
    pub gram_length: u32,
    /// Fixed chain seeds; when absent each repetition draws new chains.
    pub chain_seed_q: Option<u64>,
    pub chain_seed_t: Option<u64>,
    /// Sample sizes, used for both samples.
    pub size_ladder: Vec<u64>,
    pub repetitions: usize,
    pub estimators: Vec<Estimator>,
    pub divergence: Divergence,
    pub master_seed: u64,
    /// Draw every ladder size as a nested subsample of one parent sample
    /// instead of fresh multinomial draws.
    pub nested_subsample: bool,
    pub parent_size: u64,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            generator: GeneratorKind::Dirichlet,
            k: 400,
            alpha_true: 1.0,
            beta_true: 1.0,
            alpha_grid: Vec::new(),
            beta_grid: Vec::new(),
            states: 20,
            gram_length: 2,
            chain_seed_q: None,
            chain_seed_t: None,
            size_ladder: DEFAULT_LADDER.to_vec(),
            repetitions: 10,
            estimators: Estimator::ALL.to_vec(),
            divergence: Divergence::Kl,
            master_seed: 0,
            nested_subsample: false,
            parent_size: 20_000_000,
            threads: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("invalid value {v:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {v:?} for {key}"))),
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", idx + 1)))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Builds a config from `key=value` pairs on top of the defaults.
    /// Unknown keys are errors.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut estimators_set = false;
        for (key, v) in map {
            match key.as_str() {
                "generator" => c.generator = parse_value(key, v)?,
                "k" => c.k = parse_value(key, v)?,
                "alpha" | "alpha_true" => c.alpha_true = parse_value(key, v)?,
                "beta" | "beta_true" => c.beta_true = parse_value(key, v)?,
                "alpha_grid" => c.alpha_grid = parse_list(key, v)?,
                "beta_grid" => c.beta_grid = parse_list(key, v)?,
                "states" => c.states = parse_value(key, v)?,
                "gram_length" => c.gram_length = parse_value(key, v)?,
                "chain_seed_q" => c.chain_seed_q = Some(parse_value(key, v)?),
                "chain_seed_t" => c.chain_seed_t = Some(parse_value(key, v)?),
                "ladder" | "size_ladder" => c.size_ladder = parse_list(key, v)?,
                "reps" | "repetitions" => c.repetitions = parse_value(key, v)?,
                "estimators" | "estimator" => {
                    c.estimators = parse_list(key, v)?;
                    estimators_set = true;
                }
                "divergence" => c.divergence = parse_value(key, v)?,
                "seed" | "master_seed" => c.master_seed = parse_value(key, v)?,
                "nested_subsample" => c.nested_subsample = parse_bool(key, v)?,
                "parent_size" => c.parent_size = parse_value(key, v)?,
                "threads" => c.threads = Some(parse_value(key, v)?),
                _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
            }
        }
        if !estimators_set {
            c.estimators.retain(|e| e.supports(c.divergence));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.size_ladder.is_empty() {
            return bad("size ladder is empty".into());
        }
        if self.size_ladder[0] == 0 || self.size_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "size ladder must be positive and strictly increasing: {:?}",
                self.size_ladder
            ));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("no estimators selected".into());
        }
        if let Some(e) = self.estimators.iter().find(|e| !e.supports(self.divergence)) {
            return bad(format!("estimator {e} does not support {}", self.divergence));
        }
        match self.generator {
            GeneratorKind::Dirichlet => {
                if self.k < 2 {
                    return bad(format!("K must be at least 2, got {}", self.k));
                }
                let all = [self.alpha_true, self.beta_true];
                if all
                    .iter()
                    .chain(&self.alpha_grid)
                    .chain(&self.beta_grid)
                    .any(|a| !(*a > 0.0 && a.is_finite()))
                {
                    return bad("concentration parameters must be finite and positive".into());
                }
            }
            GeneratorKind::Markov => {
                if self.states < 2 || self.gram_length < 1 {
                    return bad("markov generator needs states >= 2 and gram_length >= 1".into());
                }
                if (self.states as u64).checked_pow(self.gram_length).is_none() {
                    return bad("states^gram_length overflows".into());
                }
            }
        }
        if self.nested_subsample && self.parent_size < *self.size_ladder.last().unwrap() {
            return bad("parent_size must be at least the largest ladder size".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    /// Number of categories the estimators see.
    pub fn categories(&self) -> u64 {
        match self.generator {
            GeneratorKind::Dirichlet => self.k,
            GeneratorKind::Markov => (self.states as u64).pow(self.gram_length),
        }
    }

    fn rng(&self, cell: u64, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream((cell << 32) | rep as u64);
        rng
    }

    fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(e.to_string()))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(with = "estimator_name")]
    pub estimator: Estimator,
    #[serde(rename = "N")]
    pub n: u64,
    pub rep: usize,
    pub estimate: f64,
    pub true_value: f64,
    pub posterior_std: Option<f64>,
}

mod estimator_name {
    use super::Estimator;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(e: &Estimator, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(e.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Estimator, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// The two true distributions of one repetition.
struct Truth {
    q: ProbabilityVector,
    t: ProbabilityVector,
    chains: Option<(MarkovChainSpec, MarkovChainSpec)>,
    value: f64,
}

fn truth_value(q: &ProbabilityVector, t: &ProbabilityVector, div: Divergence) -> Result<f64> {
    match div {
        Divergence::Kl => synth::exact_dkl(q, t),
        Divergence::HellingerSq => synth::exact_hellinger_sq(q, t),
    }
}

fn draw_truth(cfg: &ExperimentConfig, alpha: f64, beta: f64, rng: &mut ChaCha8Rng) -> Result<Truth> {
    match cfg.generator {
        GeneratorKind::Dirichlet => {
            let q = synth::sample_dirichlet(cfg.k as usize, alpha, rng)?;
            let t = synth::sample_dirichlet(cfg.k as usize, beta, rng)?;
            let value = truth_value(&q, &t, cfg.divergence)?;
            Ok(Truth {
                q,
                t,
                chains: None,
                value,
            })
        }
        GeneratorKind::Markov => {
            let chain = |seed: Option<u64>, rng: &mut ChaCha8Rng| match seed {
                Some(s) => synth::build_markov_spec(cfg.states, cfg.gram_length, &mut ChaCha8Rng::seed_from_u64(s)),
                None => synth::build_markov_spec(cfg.states, cfg.gram_length, rng),
            };
            let a = chain(cfg.chain_seed_q, rng)?;
            let b = chain(cfg.chain_seed_t, rng)?;
            let q = a.lgram_probabilities()?;
            let t = b.lgram_probabilities()?;
            let value = match cfg.divergence {
                Divergence::Kl => synth::markov_crossentropy(&a, &b)? - synth::markov_entropy(&a),
                Divergence::HellingerSq => synth::exact_hellinger_sq(&q, &t)?,
            };
            Ok(Truth {
                q,
                t,
                chains: Some((a, b)),
                value,
            })
        }
    }
}

fn draw_counts(truth: &Truth, first: bool, n: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    match &truth.chains {
        Some((a, b)) => synth::sample_lgrams(if first { a } else { b }, n, rng),
        None => synth::sample_multinomial(if first { &truth.q } else { &truth.t }, n, rng),
    }
}

/// Samples for every ladder size, in ladder order.
fn ladder_samples(cfg: &ExperimentConfig, truth: &Truth, rng: &mut ChaCha8Rng) -> Result<Vec<(Vec<u64>, Vec<u64>)>> {
    if !cfg.nested_subsample {
        return Ok(cfg
            .size_ladder
            .iter()
            .map(|&n| {
                let a = draw_counts(truth, true, n, rng);
                let b = draw_counts(truth, false, n, rng);
                (a, b)
            })
            .collect());
    }
    let mut parent = (
        draw_counts(truth, true, cfg.parent_size, rng),
        draw_counts(truth, false, cfg.parent_size, rng),
    );
    let mut out = Vec::with_capacity(cfg.size_ladder.len());
    for &n in cfg.size_ladder.iter().rev() {
        let a = synth::subsample_counts(&parent.0, n, rng)?;
        let b = synth::subsample_counts(&parent.1, n, rng)?;
        parent = (a, b);
        out.push(parent.clone());
    }
    out.reverse();
    Ok(out)
}

fn run_cell(cfg: &ExperimentConfig, cell: u64, alpha: f64, beta: f64) -> Result<Vec<ConvergenceRow>> {
    let k = cfg.categories();
    let per_rep: Vec<Result<Vec<ConvergenceRow>>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = cfg.rng(cell, rep);
            let truth = draw_truth(cfg, alpha, beta, &mut rng)?;
            let samples = ladder_samples(cfg, &truth, &mut rng)?;
            let mut rows = Vec::new();
            for (&n, (a, b)) in cfg.size_ladder.iter().zip(&samples) {
                let table = MultiplicityTable::from_counts(a, b, k)?;
                for &e in &cfg.estimators {
                    let r = estimate(&table, e, cfg.divergence)?;
                    rows.push(ConvergenceRow {
                        estimator: e,
                        n,
                        rep,
                        estimate: r.value,
                        true_value: truth.value,
                        posterior_std: r.posterior_std,
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    let order = |e: &Estimator| cfg.estimators.iter().position(|x| x == e).unwrap_or(usize::MAX);
    rows.sort_by_key(|a| (order(&a.estimator), a.n, a.rep));
    Ok(rows)
}

/// One row per (estimator, ladder size, repetition), sorted in that order.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    cfg.validate()?;
    cfg.in_pool(|| run_cell(cfg, 0, cfg.alpha_true, cfg.beta_true))?
}

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["estimator", "N", "rep", "estimate", "true_value", "posterior_std"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_convergence_csv(path: impl AsRef<Path>) -> Result<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Averages over repetitions at one ladder size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub estimator: Estimator,
    pub n: u64,
    pub mean_estimate: f64,
    pub mean_true: f64,
    /// Mean of `estimate / true_value` over repetitions.
    pub mean_normalized: f64,
    pub mean_posterior_std: Option<f64>,
    pub relative_error: f64,
}

/// How the relative error of a mean curve is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `|mean(est) − mean(true)| / mean(true)`
    PlainMean,
    /// `|mean(est / true) − 1|`
    PerRepetition,
}

impl Normalization {
    pub fn for_generator(g: GeneratorKind) -> Self {
        match g {
            GeneratorKind::Dirichlet => Normalization::PlainMean,
            GeneratorKind::Markov => Normalization::PerRepetition,
        }
    }
}

/// Mean curves, ordered by first appearance of each estimator and then by N.
pub fn summarize(rows: &[ConvergenceRow], norm: Normalization) -> Vec<CurvePoint> {
    let mut groups: Vec<((Estimator, u64), Vec<&ConvergenceRow>)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|(key, _)| *key == (r.estimator, r.n)) {
            Some((_, g)) => g.push(r),
            None => groups.push(((r.estimator, r.n), vec![r])),
        }
    }
    let first_seen: Vec<Estimator> = groups.iter().fold(Vec::new(), |mut v, ((e, _), _)| {
        if !v.contains(e) {
            v.push(*e);
        }
        v
    });
    groups.sort_by_key(|((e, n), _)| (first_seen.iter().position(|x| x == e), *n));
    groups
        .into_iter()
        .map(|((estimator, n), g)| {
            let len = g.len() as f64;
            let mean_estimate = g.iter().map(|r| r.estimate).sum::<f64>() / len;
            let mean_true = g.iter().map(|r| r.true_value).sum::<f64>() / len;
            let mean_normalized = g.iter().map(|r| r.estimate / r.true_value).sum::<f64>() / len;
            let stds: Vec<f64> = g.iter().filter_map(|r| r.posterior_std).collect();
            let mean_posterior_std = (stds.len() == g.len()).then(|| stds.iter().sum::<f64>() / len);
            let relative_error = match norm {
                Normalization::PlainMean => (mean_estimate - mean_true).abs() / mean_true,
                Normalization::PerRepetition => (mean_normalized - 1.0).abs(),
            };
            CurvePoint {
                estimator,
                n,
                mean_estimate,
                mean_true,
                mean_normalized,
                mean_posterior_std,
                relative_error: if relative_error.is_nan() {
                    f64::INFINITY
                } else {
                    relative_error
                },
            }
        })
        .collect()
}

/// Smallest ladder size from which the relative error stays below `tol`
/// for every larger size; `None` if the last size is not below `tol`.
/// `curve` must be sorted by size.
pub fn nstar(curve: &[(u64, f64)], tol: f64) -> Option<u64> {
    let mut first = None;
    for &(n, err) in curve.iter().rev() {
        if err < tol {
            first = Some(n);
        } else {
            break;
        }
    }
    first
}

/// N* of every estimator present in a summary.
pub fn nstar_by_estimator(points: &[CurvePoint], tol: f64) -> Vec<(Estimator, Option<u64>)> {
    let mut out: Vec<(Estimator, Vec<(u64, f64)>)> = Vec::new();
    for p in points {
        match out.iter_mut().find(|(e, _)| *e == p.estimator) {
            Some((_, c)) => c.push((p.n, p.relative_error)),
            None => out.push((p.estimator, vec![(p.n, p.relative_error)])),
        }
    }
    out.into_iter()
        .map(|(e, mut c)| {
            c.sort_by_key(|x| x.0);
            (e, nstar(&c, tol))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NstarRow {
    pub alpha_true: f64,
    pub beta_true: f64,
    #[serde(serialize_with = "estimator_name::serialize")]
    pub estimator: Estimator,
    pub nstar_over_k: Option<f64>,
}

/// N*/K for every estimator at every `(α, β)` of the grid.
pub fn run_nstar(cfg: &ExperimentConfig) -> Result<Vec<NstarRow>> {
    cfg.validate()?;
    if cfg.generator != GeneratorKind::Dirichlet {
        return Err(Error::Config("nstar scans require the dirichlet generator".into()));
    }
    let alphas = if cfg.alpha_grid.is_empty() {
        vec![cfg.alpha_true]
    } else {
        cfg.alpha_grid.clone()
    };
    let betas = if cfg.beta_grid.is_empty() {
        vec![cfg.beta_true]
    } else {
        cfg.beta_grid.clone()
    };
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| (a, b)))
        .collect();
    let k = cfg.k as f64;
    let per_cell: Vec<Result<Vec<NstarRow>>> = cfg.in_pool(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(cell, &(a, b))| {
                let rows = run_cell(cfg, cell as u64, a, b)?;
                let points = summarize(&rows, Normalization::PlainMean);
                Ok(nstar_by_estimator(&points, CONVERGENCE_TOL)
                    .into_iter()
                    .map(|(estimator, ns)| NstarRow {
                        alpha_true: a,
                        beta_true: b,
                        estimator,
                        nstar_over_k: ns.map(|n| n as f64 / k),
                    })
                    .collect())
            })
            .collect()
    })?;
    let mut out = Vec::new();
    for c in per_cell {
        out.extend(c?);
    }
    Ok(out)
}

pub fn write_nstar_csv<W: Write>(rows: &[NstarRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["alpha_true", "beta_true", "estimator", "nstar_over_k"])?;
    }
    w.flush()?;
    Ok(())
}
