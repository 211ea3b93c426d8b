//! Expectations under symmetric Dirichlet posteriors at fixed concentration
//! parameters.
//!
//! With `q ~ Dir(n + α)` and `t ~ Dir(m + β)` independent, write
//! `x_i = n_i + α`, `X = N + Kα`, `y_i = m_i + β`, `Y = M + Kβ`. Every
//! expectation used by the estimators reduces to digamma and trigamma
//! differences of these shifted coordinates.

use serde::Serialize;

use crate::counts::{MultiplicityTable, Sample};
use crate::error::{Error, Result};
use crate::specfun::raw;

/// Concentration parameters of the two symmetric Dirichlet priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: u64,
}

impl HyperParams {
    pub fn new(alpha: f64, beta: f64, k: u64) -> Result<Self> {
        check_concentration(alpha)?;
        check_concentration(beta)?;
        if k < 2 {
            return Err(Error::domain(format!("K must be at least 2, got {k}")));
        }
        Ok(HyperParams { alpha, beta, k })
    }

    fn check_table(&self, table: &MultiplicityTable) -> Result<()> {
        if table.k() != self.k {
            return Err(Error::Inconsistent(format!(
                "table has K={} but hyper-parameters have K={}",
                table.k(),
                self.k
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_concentration(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "concentration parameter must be finite and positive, got {a}"
        )))
    }
}

fn check_k(k: u64) -> Result<()> {
    if k >= 2 {
        Ok(())
    } else {
        Err(Error::domain(format!("K must be at least 2, got {k}")))
    }
}

/// ln Γ(a + c) − ln Γ(a).
fn ln_rising(a: f64, c: u64) -> f64 {
    if c == 0 {
        0.0
    } else if c <= 32 {
        (0..c).map(|j| (a + j as f64).ln()).sum()
    } else {
        raw::ln_gamma(a + c as f64) - raw::ln_gamma(a)
    }
}

/// ψ(a + c) − ψ(a).
fn psi_rising(a: f64, c: u64) -> f64 {
    if c == 0 {
        0.0
    } else if c <= 64 {
        (0..c).rev().map(|j| 1.0 / (a + j as f64)).sum()
    } else {
        raw::delta_psi(a + c as f64, a)
    }
}

/// Log marginal likelihood of one sample under a symmetric Dirichlet prior,
/// without the α-independent multinomial coefficient.
pub fn log_evidence(table: &MultiplicityTable, alpha: f64, which: Sample) -> Result<f64> {
    check_concentration(alpha)?;
    Ok(log_evidence_unchecked(table, alpha, which))
}

pub(crate) fn log_evidence_unchecked(table: &MultiplicityTable, alpha: f64, which: Sample) -> f64 {
    let k = table.k() as f64;
    let total = table.total(which);
    let mut acc = 0.0;
    for &(pair, nu) in table.entries() {
        acc += nu as f64 * ln_rising(alpha, pair.get(which));
    }
    acc - ln_rising(k * alpha, total)
}

/// Derivative of [`log_evidence`] with respect to ln α.
pub(crate) fn log_evidence_dlog(table: &MultiplicityTable, alpha: f64, which: Sample) -> f64 {
    let k = table.k() as f64;
    let total = table.total(which);
    let mut acc = 0.0;
    for &(pair, nu) in table.entries() {
        acc += nu as f64 * psi_rising(alpha, pair.get(which));
    }
    alpha * (acc - k * psi_rising(k * alpha, total))
}

/// A-priori expected Shannon entropy of `q ~ Dir(α)`: `ψ(Kα+1) − ψ(α+1)`.
pub fn prior_mean_entropy(alpha: f64, k: u64) -> Result<f64> {
    check_concentration(alpha)?;
    check_k(k)?;
    Ok(raw::delta_psi(k as f64 * alpha + 1.0, alpha + 1.0))
}

/// A-priori expected cross-entropy `−Σ q_i ln t_i` with `t ~ Dir(β)`:
/// `ψ(Kβ) − ψ(β)`.
pub fn prior_mean_crossentropy(beta: f64, k: u64) -> Result<f64> {
    check_concentration(beta)?;
    check_k(k)?;
    Ok(raw::delta_psi(k as f64 * beta, beta))
}

/// Posterior expected Shannon entropy of one sample's distribution.
pub fn posterior_entropy(table: &MultiplicityTable, alpha: f64, which: Sample) -> Result<f64> {
    check_concentration(alpha)?;
    check_k(table.k())?;
    let big_x = table.total(which) as f64 + table.k() as f64 * alpha;
    Ok(table.sum_over_categories(|p| {
        let x = p.get(which) as f64 + alpha;
        x / big_x * raw::delta_psi(big_x + 1.0, x + 1.0)
    }))
}

/// Posterior expected cross-entropy `−Σ q_i ln t_i`.
pub fn posterior_crossentropy(table: &MultiplicityTable, hp: HyperParams) -> Result<f64> {
    hp.check_table(table)?;
    let (big_x, big_y) = shifted_totals(table, hp);
    Ok(table.sum_over_categories(|p| {
        let x = p.n as f64 + hp.alpha;
        let y = p.m as f64 + hp.beta;
        x / big_x * raw::delta_psi(big_y, y)
    }))
}

fn shifted_totals(table: &MultiplicityTable, hp: HyperParams) -> (f64, f64) {
    let k = hp.k as f64;
    (
        table.n_total() as f64 + k * hp.alpha,
        table.m_total() as f64 + k * hp.beta,
    )
}

/// Posterior expected Kullback-Leibler divergence `⟨Σ q_i ln(q_i/t_i)⟩`.
pub fn posterior_dkl(table: &MultiplicityTable, hp: HyperParams) -> Result<f64> {
    hp.check_table(table)?;
    let (big_x, big_y) = shifted_totals(table, hp);
    let value = table.sum_over_categories(|p| {
        let x = p.n as f64 + hp.alpha;
        let y = p.m as f64 + hp.beta;
        x / big_x * (raw::delta_psi(big_y, y) - raw::delta_psi(big_x + 1.0, x + 1.0))
    });
    Ok(value)
}

/// Posterior expected squared Kullback-Leibler divergence.
pub fn posterior_dkl_squared(table: &MultiplicityTable, hp: HyperParams) -> Result<f64> {
    hp.check_table(table)?;
    let first = FirstSampleTerms::new(table, hp.alpha);
    let second = SecondSampleTerms::new(table, hp.beta);
    Ok(first.dkl_moments(&second, table).1)
}

/// Posterior expected squared Hellinger divergence `⟨1 − Σ √(q_i t_i)⟩`.
pub fn posterior_hellinger_sq(table: &MultiplicityTable, hp: HyperParams) -> Result<f64> {
    hp.check_table(table)?;
    let (big_x, big_y) = shifted_totals(table, hp);
    let head = raw::ln_beta_half(big_x) + raw::ln_beta_half(big_y);
    let bc = table.sum_over_categories(|p| {
        let x = p.n as f64 + hp.alpha;
        let y = p.m as f64 + hp.beta;
        (head - raw::ln_beta_half(x) - raw::ln_beta_half(y)).exp()
    });
    Ok(1.0 - bc)
}

/// Quantities that depend only on the first sample and α, indexed like the
/// table's entries. Combined with [`SecondSampleTerms`] they give the
/// posterior moments at `(α, β)` in one pass over the distinct pairs, which
/// is how the mixture estimators evaluate their grids.
#[derive(Debug, Clone)]
pub(crate) struct FirstSampleTerms {
    /// `x_i / X`
    share: Vec<f64>,
    /// `x_i (x_i + 1) / (X (X + 1))`
    share2: Vec<f64>,
    /// `ψ(x_i+1) − ψ(X+1)`
    log_q: Vec<f64>,
    /// `ψ(x_i+1) − ψ(X+2)`
    log_q_pair: Vec<f64>,
    /// `ψ(x_i+2) − ψ(X+2)`
    log_q_diag: Vec<f64>,
    /// `ψ₁(x_i+2)`
    tri_diag: Vec<f64>,
    /// `ψ₁(X+2)`
    tri_total: f64,
    /// `X / (X + 1)`
    pair_norm: f64,
    /// `⟨√q_i⟩ = B(1/2, X) / B(1/2, x_i)`
    sqrt_mean: Vec<f64>,
}

impl FirstSampleTerms {
    pub fn new(table: &MultiplicityTable, alpha: f64) -> Self {
        let big_x = table.n_total() as f64 + table.k() as f64 * alpha;
        let psi_x1 = raw::digamma(big_x + 1.0);
        let psi_x2 = psi_x1 + 1.0 / (big_x + 1.0);
        let lb_total = raw::ln_beta_half(big_x);
        let u = table.unique_pairs();
        let mut t = FirstSampleTerms {
            share: Vec::with_capacity(u),
            share2: Vec::with_capacity(u),
            log_q: Vec::with_capacity(u),
            log_q_pair: Vec::with_capacity(u),
            log_q_diag: Vec::with_capacity(u),
            tri_diag: Vec::with_capacity(u),
            tri_total: raw::trigamma(big_x + 2.0),
            pair_norm: big_x / (big_x + 1.0),
            sqrt_mean: Vec::with_capacity(u),
        };
        for &(p, _) in table.entries() {
            let x = p.n as f64 + alpha;
            let psi_1 = raw::digamma(x + 1.0);
            t.share.push(x / big_x);
            t.share2.push(x * (x + 1.0) / (big_x * (big_x + 1.0)));
            t.log_q.push(psi_1 - psi_x1);
            t.log_q_pair.push(psi_1 - psi_x2);
            t.log_q_diag.push(psi_1 + 1.0 / (x + 1.0) - psi_x2);
            t.tri_diag.push(raw::trigamma(x + 2.0));
            t.sqrt_mean.push((lb_total - raw::ln_beta_half(x)).exp());
        }
        t
    }

    /// `(⟨D_KL⟩, ⟨D_KL²⟩)` at the parameters the two term sets were built
    /// with.
    pub fn dkl_moments(&self, second: &SecondSampleTerms, table: &MultiplicityTable) -> (f64, f64) {
        let tri = self.tri_total + second.tri_total;
        let mut mean = 0.0;
        let mut s_d = 0.0;
        let mut off_self = 0.0;
        let mut share_sq = 0.0;
        let mut diag = 0.0;
        for (i, &(_, nu)) in table.entries().iter().enumerate() {
            let nu = nu as f64;
            let w = self.share[i];
            let lt = second.log_t[i];
            mean += nu * w * (self.log_q[i] - lt);
            let d = self.log_q_pair[i] - lt;
            s_d += nu * w * d;
            off_self += nu * w * w * d * d;
            share_sq += nu * w * w;
            let c = self.log_q_diag[i] - lt;
            diag += nu * self.share2[i] * (c * c + self.tri_diag[i] + second.tri_diag[i] - tri);
        }
        // Σ_{i≠j} over pairs, in units of X²: (Σ w d)² − Σ w²d² − tri (1 − Σ w²)
        let off = s_d * s_d - off_self - tri * (1.0 - share_sq);
        (mean, off * self.pair_norm + diag)
    }

    /// `⟨Σ √(q_i t_i)⟩`.
    pub fn bhattacharyya(&self, second: &SecondSampleTerms, table: &MultiplicityTable) -> f64 {
        table
            .entries()
            .iter()
            .enumerate()
            .map(|(i, &(_, nu))| nu as f64 * self.sqrt_mean[i] * second.sqrt_mean[i])
            .sum()
    }
}

/// Second-sample counterpart of [`FirstSampleTerms`].
#[derive(Debug, Clone)]
pub(crate) struct SecondSampleTerms {
    /// `ψ(y_i) − ψ(Y)`
    log_t: Vec<f64>,
    /// `ψ₁(y_i)`
    tri_diag: Vec<f64>,
    /// `ψ₁(Y)`
    tri_total: f64,
    /// `⟨√t_i⟩`
    sqrt_mean: Vec<f64>,
}

impl SecondSampleTerms {
    pub fn new(table: &MultiplicityTable, beta: f64) -> Self {
        let big_y = table.m_total() as f64 + table.k() as f64 * beta;
        let psi_y = raw::digamma(big_y);
        let lb_total = raw::ln_beta_half(big_y);
        let mut t = SecondSampleTerms {
            log_t: Vec::with_capacity(table.unique_pairs()),
            tri_diag: Vec::with_capacity(table.unique_pairs()),
            tri_total: raw::trigamma(big_y),
            sqrt_mean: Vec::with_capacity(table.unique_pairs()),
        };
        for &(p, _) in table.entries() {
            let y = p.m as f64 + beta;
            t.log_t.push(raw::digamma(y) - psi_y);
            t.tri_diag.push(raw::trigamma(y));
            t.sqrt_mean.push((lb_total - raw::ln_beta_half(y)).exp());
        }
        t
    }
}
