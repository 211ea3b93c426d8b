//! Estimators that integrate over the concentration parameters: the
//! maximizer of the log posterior over `(ln α, ln β)` and the trapezoidal
//! quadrature around it.

use rayon::prelude::*;
use serde::Serialize;

use super::optimize::{self, OptimOptions};
use super::{Diagnostics, EstimateReport};
use crate::counts::{MultiplicityTable, Sample};
use crate::error::{Error, Result};
use crate::hyperprior::{self, AxisTerm, HyperPriorKind, HyperPriorSpec};
use crate::posterior::{self, FirstSampleTerms, HyperParams, SecondSampleTerms};

/// Bounds of `ln α` and `ln β`.
pub const LOG_CONCENTRATION_MIN: f64 = -13.815_510_557_964_274; // ln 1e-6
pub const LOG_CONCENTRATION_MAX: f64 = 13.815_510_557_964_274;

const START_POINTS: [f64; 5] = [1e-4, 1e-2, 1.0, 1e2, 1e4];
const HESSIAN_STEP: f64 = 0.05;
const GRADIENT_STEP: f64 = 1e-3;
const WINDOW_SIGMAS: f64 = 3.0;
const FALLBACK_HALF_WIDTH: f64 = 3.0;
const BOUNDARY_TOL: f64 = 1e-6;
const MIN_BINS: f64 = 20.0;
const MAX_BINS: f64 = 2000.0;

/// Written into the diagnostics of grid-integrated estimates.
pub const MEASURE: &str = "rho(alpha,beta) dalpha dbeta on a ln-grid with jacobian alpha*beta";

/// Which log posterior over the concentration parameters to maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Sum of the two log evidences.
    Dp,
    /// Log evidences plus the log hyper-prior and the log-grid Jacobian.
    Dpm(HyperPriorKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorMaximum {
    pub alpha: f64,
    pub beta: f64,
    /// Gaussian-approximation standard deviations of `ln α`, `ln β`; `None`
    /// when the Hessian at the maximum is not negative definite.
    pub std_log_alpha: Option<f64>,
    pub std_log_beta: Option<f64>,
    pub log_objective: f64,
    /// `log_evidence(n|α*) + log_evidence(m|β*)`
    pub log_evidence: f64,
    pub at_boundary: bool,
    /// Some axis had no data, so its objective was constant.
    pub flat: bool,
    pub converged: bool,
}

fn near_edge(u: f64) -> bool {
    u - LOG_CONCENTRATION_MIN < BOUNDARY_TOL || LOG_CONCENTRATION_MAX - u < BOUNDARY_TOL
}

fn check_table(table: &MultiplicityTable) -> Result<()> {
    if table.k() < 2 {
        return Err(Error::domain(format!("K must be at least 2, got {}", table.k())));
    }
    Ok(())
}

struct AxisMax {
    u: f64,
    value: f64,
    std: Option<f64>,
    flat: bool,
    converged: bool,
}

/// Maximizes a smooth function of one log concentration over the box.
fn maximize_axis<F, G>(f: F, grad: G) -> AxisMax
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let lo = [LOG_CONCENTRATION_MIN];
    let hi = [LOG_CONCENTRATION_MAX];
    let mut best: Option<optimize::OptimResult> = None;
    for a0 in START_POINTS {
        let r = optimize::maximize(
            |x: &[f64]| f(x[0]),
            |x: &[f64]| vec![grad(x[0])],
            &[a0.ln()],
            &lo,
            &hi,
            OptimOptions::default(),
        );
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start point");
    let u = best.x[0];
    let h = optimize::central_hessian(&|x: &[f64]| f(x[0]), &[u], HESSIAN_STEP)[0][0];
    AxisMax {
        u,
        value: best.value,
        std: (h < 0.0 && h.is_finite()).then(|| (-1.0 / h).sqrt()),
        flat: false,
        converged: best.converged,
    }
}

fn dp_axis(table: &MultiplicityTable, which: Sample) -> AxisMax {
    if table.total(which) == 0 {
        return AxisMax {
            u: 0.0,
            value: 0.0,
            std: None,
            flat: true,
            converged: true,
        };
    }
    maximize_axis(
        |u| posterior::log_evidence_unchecked(table, u.exp(), which),
        |u| posterior::log_evidence_dlog(table, u.exp(), which),
    )
}

/// Log of the DPM integrand on the `(ln α, ln β)` grid, up to a constant.
fn dpm_log_objective(table: &MultiplicityTable, spec: &HyperPriorSpec, u: f64, v: f64) -> f64 {
    let (a, b) = (u.exp(), v.exp());
    posterior::log_evidence_unchecked(table, a, Sample::First)
        + posterior::log_evidence_unchecked(table, b, Sample::Second)
        + spec.combine(&spec.first_axis(a), &spec.second_axis(b))
        + u
        + v
}

/// Finds the maximizer of the chosen log posterior over
/// `(ln α, ln β) ∈ [ln 1e-6, ln 1e6]²`.
pub fn maximize_log_posterior(table: &MultiplicityTable, objective: Objective) -> Result<PosteriorMaximum> {
    check_table(table)?;
    let (u, v, log_objective, std_u, std_v, flat, converged) = match objective {
        Objective::Dp => {
            let a = dp_axis(table, Sample::First);
            let b = dp_axis(table, Sample::Second);
            (
                a.u,
                b.u,
                a.value + b.value,
                a.std,
                b.std,
                a.flat || b.flat,
                a.converged && b.converged,
            )
        }
        Objective::Dpm(kind) => {
            let spec = HyperPriorSpec::new(kind, table.k())?;
            let f = |x: &[f64]| dpm_log_objective(table, &spec, x[0], x[1]);
            let prior_part = |x: &[f64]| {
                let (a, b) = (x[0].exp(), x[1].exp());
                spec.combine(&spec.first_axis(a), &spec.second_axis(b))
            };
            let grad = |x: &[f64]| {
                let gp = optimize::central_gradient(&prior_part, x, GRADIENT_STEP);
                vec![
                    posterior::log_evidence_dlog(table, x[0].exp(), Sample::First) + gp[0] + 1.0,
                    posterior::log_evidence_dlog(table, x[1].exp(), Sample::Second) + gp[1] + 1.0,
                ]
            };
            let lo = [LOG_CONCENTRATION_MIN; 2];
            let hi = [LOG_CONCENTRATION_MAX; 2];
            let mut best: Option<optimize::OptimResult> = None;
            for a0 in START_POINTS {
                let s = a0.ln();
                let r = optimize::maximize(f, grad, &[s, s], &lo, &hi, OptimOptions::default());
                if best.as_ref().is_none_or(|b| r.value > b.value) {
                    best = Some(r);
                }
            }
            let best = best.expect("at least one start point");
            let hess = optimize::central_hessian(&f, &best.x, HESSIAN_STEP);
            let (std_u, std_v) = gaussian_stds(&hess);
            (best.x[0], best.x[1], best.value, std_u, std_v, false, best.converged)
        }
    };
    let (alpha, beta) = (u.exp(), v.exp());
    Ok(PosteriorMaximum {
        alpha,
        beta,
        std_log_alpha: std_u,
        std_log_beta: std_v,
        log_objective,
        log_evidence: posterior::log_evidence_unchecked(table, alpha, Sample::First)
            + posterior::log_evidence_unchecked(table, beta, Sample::Second),
        at_boundary: flat || near_edge(u) || near_edge(v),
        flat,
        converged,
    })
}

/// Marginal standard deviations from `Σ = −H⁻¹` of a 2×2 Hessian.
fn gaussian_stds(h: &[Vec<f64>]) -> (Option<f64>, Option<f64>) {
    let (a, b, d) = (h[0][0], h[0][1], h[1][1]);
    let det = a * d - b * b;
    if !(a < 0.0 && d < 0.0 && det > 0.0 && det.is_finite()) {
        return (None, None);
    }
    let var_u = -d / det;
    let var_v = -a / det;
    (Some(var_u.sqrt()), Some(var_v.sqrt()))
}

/// Bins per axis for a sample of `total` draws:
/// `10 (K/N)²` clamped to `[20, 2000]`.
pub fn bins_per_axis(k: u64, total: u64) -> usize {
    if total == 0 {
        return MAX_BINS as usize;
    }
    let r = k as f64 / total as f64;
    (10.0 * r * r).clamp(MIN_BINS, MAX_BINS).round() as usize
}

/// Trapezoid nodes in `ln α` and `ln β`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub log_alpha: Vec<f64>,
    pub log_beta: Vec<f64>,
}

fn axis_nodes(center: f64, std: Option<f64>, bins: usize) -> Vec<f64> {
    let half = std.map_or(FALLBACK_HALF_WIDTH, |s| WINDOW_SIGMAS * s);
    let lo = (center - half).max(LOG_CONCENTRATION_MIN);
    let hi = (center + half).min(LOG_CONCENTRATION_MAX);
    if !(hi > lo) {
        return vec![center];
    }
    let step = (hi - lo) / bins as f64;
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + step * i as f64 })
        .collect()
}

impl QuadratureGrid {
    /// Window of ±3 standard deviations around the maximum (±3 log-units
    /// where the Hessian gave none), clipped to the box.
    pub fn around(max: &PosteriorMaximum, bins_alpha: usize, bins_beta: usize) -> Self {
        QuadratureGrid {
            log_alpha: axis_nodes(max.alpha.ln(), max.std_log_alpha, bins_alpha.max(1)),
            log_beta: axis_nodes(max.beta.ln(), max.std_log_beta, bins_beta.max(1)),
        }
    }

    pub fn bins_alpha(&self) -> usize {
        self.log_alpha.len().saturating_sub(1)
    }

    pub fn bins_beta(&self) -> usize {
        self.log_beta.len().saturating_sub(1)
    }
}

fn trapezoid_weight(i: usize, len: usize) -> f64 {
    if i == 0 || i + 1 == len {
        0.5
    } else {
        1.0
    }
}

/// Compensated running sum so that row-wise reductions do not depend on the
/// magnitude ordering of their terms.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Weighted sums `Σw`, `Σw·f₁`, `Σw·f₂` over one grid.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    w: Neumaier,
    m1: Neumaier,
    m2: Neumaier,
}

impl Moments {
    fn merge(&mut self, o: &Moments) {
        self.w.add(o.w.value());
        self.m1.add(o.m1.value());
        self.m2.add(o.m2.value());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct QuadratureOutcome {
    pub mean: f64,
    pub second: f64,
    pub collapsed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Integrand {
    DklMoments,
    HellingerSq,
}

/// Trapezoidal integration of the DPM posterior over `grid`. The log
/// weights are shifted by their maximum over the grid before
/// exponentiation; `log_offset` is added to every log weight.
pub(crate) fn integrate(
    table: &MultiplicityTable,
    spec: &HyperPriorSpec,
    grid: &QuadratureGrid,
    integrand: Integrand,
    log_offset: f64,
) -> Option<QuadratureOutcome> {
    struct Axis<T> {
        terms: T,
        prior: AxisTerm,
        log_base: f64,
    }
    let first: Vec<Axis<FirstSampleTerms>> = grid
        .log_alpha
        .par_iter()
        .map(|&u| {
            let a = u.exp();
            Axis {
                terms: FirstSampleTerms::new(table, a),
                prior: spec.first_axis(a),
                log_base: posterior::log_evidence_unchecked(table, a, Sample::First) + u,
            }
        })
        .collect();
    let second: Vec<Axis<SecondSampleTerms>> = grid
        .log_beta
        .par_iter()
        .map(|&v| {
            let b = v.exp();
            Axis {
                terms: SecondSampleTerms::new(table, b),
                prior: spec.second_axis(b),
                log_base: posterior::log_evidence_unchecked(table, b, Sample::Second) + v,
            }
        })
        .collect();

    let log_w = |i: usize, j: usize| {
        first[i].log_base + second[j].log_base + spec.combine(&first[i].prior, &second[j].prior) + log_offset
    };
    let peak = (0..first.len())
        .into_par_iter()
        .map(|i| (0..second.len()).map(|j| log_w(i, j)).fold(f64::NEG_INFINITY, f64::max))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return None;
    }

    let (na, nb) = (first.len(), second.len());
    let rows: Vec<Moments> = (0..na)
        .into_par_iter()
        .map(|i| {
            let mut acc = Moments::default();
            for j in 0..nb {
                let w = trapezoid_weight(i, na) * trapezoid_weight(j, nb) * (log_w(i, j) - peak).exp();
                if w == 0.0 {
                    continue;
                }
                let (f1, f2) = match integrand {
                    Integrand::DklMoments => first[i].terms.dkl_moments(&second[j].terms, table),
                    Integrand::HellingerSq => {
                        let h = 1.0 - first[i].terms.bhattacharyya(&second[j].terms, table);
                        (h, h * h)
                    }
                };
                acc.w.add(w);
                acc.m1.add(w * f1);
                acc.m2.add(w * f2);
            }
            acc
        })
        .collect();
    let mut total = Moments::default();
    for r in &rows {
        total.merge(r);
    }
    let z = total.w.value();
    let mean = total.m1.value() / z;
    let second = total.m2.value() / z;
    (z > 0.0 && mean.is_finite() && second.is_finite()).then_some(QuadratureOutcome {
        mean,
        second,
        collapsed: false,
    })
}

/// Grid-size controls for the DPM estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpmOptions {
    /// Multiplies the heuristic bin count of each axis.
    pub bin_scale: f64,
}

impl Default for DpmOptions {
    fn default() -> Self {
        DpmOptions { bin_scale: 1.0 }
    }
}

fn scaled_bins(k: u64, total: u64, scale: f64) -> usize {
    ((bins_per_axis(k, total) as f64 * scale).round() as usize).max(1)
}

fn diagnostics(max: &PosteriorMaximum, grid: Option<&QuadratureGrid>, collapsed: bool) -> Diagnostics {
    Diagnostics {
        alpha_star: max.alpha,
        beta_star: Some(max.beta),
        grid_bins_alpha: grid.map_or(0, QuadratureGrid::bins_alpha),
        grid_bins_beta: grid.map_or(0, QuadratureGrid::bins_beta),
        log_evidence_at_max: max.log_evidence,
        at_boundary: max.at_boundary,
        flat: max.flat,
        collapsed,
        converged: max.converged,
        measure: grid.map(|_| MEASURE),
    }
}

pub(crate) fn dpm_with_offset(
    table: &MultiplicityTable,
    kind: HyperPriorKind,
    opts: DpmOptions,
    log_offset: f64,
) -> Result<EstimateReport> {
    check_table(table)?;
    let max = maximize_log_posterior(table, Objective::Dpm(kind))?;
    let spec = HyperPriorSpec::new(kind, table.k())?;
    let grid = QuadratureGrid::around(
        &max,
        scaled_bins(table.k(), table.n_total(), opts.bin_scale),
        scaled_bins(table.k(), table.m_total(), opts.bin_scale),
    );
    let integrand = match kind {
        HyperPriorKind::Kl => Integrand::DklMoments,
        HyperPriorKind::HellingerSq => Integrand::HellingerSq,
    };
    let hp = HyperParams::new(max.alpha, max.beta, table.k())?;
    let outcome = integrate(table, &spec, &grid, integrand, log_offset).unwrap_or_else(|| {
        // collapse to the point estimate at the maximizer
        let (mean, second) = match kind {
            HyperPriorKind::Kl => {
                let m = posterior::posterior_dkl(table, hp).unwrap_or(f64::NAN);
                (m, m * m)
            }
            HyperPriorKind::HellingerSq => {
                let h = posterior::posterior_hellinger_sq(table, hp).unwrap_or(f64::NAN);
                (h, h * h)
            }
        };
        QuadratureOutcome {
            mean,
            second,
            collapsed: true,
        }
    });
    if !outcome.mean.is_finite() {
        return Err(Error::domain("DPM estimate is not finite"));
    }
    let posterior_std = match kind {
        HyperPriorKind::Kl => Some((outcome.second - outcome.mean * outcome.mean).max(0.0).sqrt()),
        HyperPriorKind::HellingerSq => None,
    };
    Ok(EstimateReport {
        value: outcome.mean,
        posterior_std,
        diagnostics: Some(diagnostics(&max, Some(&grid), outcome.collapsed)),
    })
}

/// DPM estimate of `D_KL(q‖t)` with its posterior standard deviation.
pub fn estimate_dkl_dpm(table: &MultiplicityTable) -> Result<EstimateReport> {
    dpm_with_offset(table, HyperPriorKind::Kl, DpmOptions::default(), 0.0)
}

pub fn estimate_dkl_dpm_with(table: &MultiplicityTable, opts: DpmOptions) -> Result<EstimateReport> {
    dpm_with_offset(table, HyperPriorKind::Kl, opts, 0.0)
}

/// DPM estimate of the squared Hellinger divergence.
pub fn estimate_hellinger_dpm(table: &MultiplicityTable) -> Result<EstimateReport> {
    dpm_with_offset(table, HyperPriorKind::HellingerSq, DpmOptions::default(), 0.0)
}

pub fn estimate_hellinger_dpm_with(table: &MultiplicityTable, opts: DpmOptions) -> Result<EstimateReport> {
    dpm_with_offset(table, HyperPriorKind::HellingerSq, opts, 0.0)
}

fn dp_report(table: &MultiplicityTable, value: impl Fn(HyperParams) -> Result<f64>) -> Result<EstimateReport> {
    let max = maximize_log_posterior(table, Objective::Dp)?;
    let hp = HyperParams::new(max.alpha, max.beta, table.k())?;
    Ok(EstimateReport {
        value: value(hp)?,
        posterior_std: None,
        diagnostics: Some(diagnostics(&max, None, false)),
    })
}

/// Posterior mean of `D_KL` at the maximum-likelihood `(α, β)`.
pub fn estimate_dkl_dp(table: &MultiplicityTable) -> Result<EstimateReport> {
    dp_report(table, |hp| posterior::posterior_dkl(table, hp))
}

/// Posterior mean of the squared Hellinger divergence at the
/// maximum-likelihood `(α, β)`.
pub fn estimate_hellinger_dp(table: &MultiplicityTable) -> Result<EstimateReport> {
    dp_report(table, |hp| posterior::posterior_hellinger_sq(table, hp))
}

/// Entropy of the first sample under a mixture of symmetric Dirichlet
/// priors that makes the a-priori entropy uniform.
pub fn estimate_entropy_nsb(table: &MultiplicityTable) -> Result<EstimateReport> {
    check_table(table)?;
    let k = table.k();
    let log_w = |u: f64| {
        let a = u.exp();
        posterior::log_evidence_unchecked(table, a, Sample::First)
            + hyperprior::prior_mean_entropy_derivative(a, k).ln()
            + u
    };
    let jac = |u: f64| hyperprior::prior_mean_entropy_derivative(u.exp(), k).ln();
    let axis = maximize_axis(log_w, |u| {
        posterior::log_evidence_dlog(table, u.exp(), Sample::First)
            + optimize::central_gradient(&|x: &[f64]| jac(x[0]), &[u], GRADIENT_STEP)[0]
            + 1.0
    });
    let nodes = axis_nodes(axis.u, axis.std, bins_per_axis(k, table.n_total()));
    let logs: Vec<f64> = nodes.iter().map(|&u| log_w(u)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = Neumaier::default();
    let mut s = Neumaier::default();
    for (i, (&u, &lw)) in nodes.iter().zip(&logs).enumerate() {
        let w = trapezoid_weight(i, nodes.len()) * (lw - peak).exp();
        if w == 0.0 {
            continue;
        }
        z.add(w);
        s.add(w * posterior::posterior_entropy(table, u.exp(), Sample::First)?);
    }
    let alpha_star = axis.u.exp();
    let (value, collapsed) = if z.value() > 0.0 && (s.value() / z.value()).is_finite() {
        (s.value() / z.value(), false)
    } else {
        (posterior::posterior_entropy(table, alpha_star, Sample::First)?, true)
    };
    Ok(EstimateReport {
        value,
        posterior_std: None,
        diagnostics: Some(Diagnostics {
            alpha_star,
            beta_star: None,
            grid_bins_alpha: nodes.len().saturating_sub(1),
            grid_bins_beta: 0,
            log_evidence_at_max: posterior::log_evidence_unchecked(table, alpha_star, Sample::First),
            at_boundary: near_edge(axis.u),
            flat: false,
            collapsed,
            converged: axis.converged,
            measure: Some("rho(alpha) dalpha on a ln-grid with jacobian alpha"),
        }),
    })
}
