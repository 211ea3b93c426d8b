//! Hyper-priors over the concentration parameters `(α, β)` chosen so that
//! the a-priori divergence is log-uniformly distributed.
//!
//! For the KL divergence the prior means `A(α) = ⟨S|α⟩` and
//! `B(β) = ⟨H|β⟩` are used as coordinates; the weight is
//! `|A'(α)| |B'(β)| φ(B − A)` with `φ(z) = ρ(z) / min(z, ln K)` and
//! `ρ(z) ∝ 1/z`. For the squared Hellinger divergence the coordinates are
//! `g(α)`, `g(β)` with `g(x) = √K B(1/2, Kx) / B(1/2, x)`, the a-priori
//! divergence is `z = 1 − g(α) g(β)` and `φ_H(z) = ρ(z) (1−z)² / (z (2−z))`.
//!
//! All weights are densities in `(α, β)`, defined up to a global constant
//! and returned as logarithms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::posterior::check_concentration;
use crate::specfun::raw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HyperPriorKind {
    Kl,
    HellingerSq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperPriorSpec {
    pub kind: HyperPriorKind,
    pub k: u64,
}

impl HyperPriorSpec {
    pub fn new(kind: HyperPriorKind, k: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::domain(format!("K must be at least 2, got {k}")));
        }
        Ok(HyperPriorSpec { kind, k })
    }

    pub fn log_weight(&self, alpha: f64, beta: f64) -> Result<f64> {
        match self.kind {
            HyperPriorKind::Kl => log_weight_kl(alpha, beta, self.k),
            HyperPriorKind::HellingerSq => log_weight_hellinger(alpha, beta, self.k),
        }
    }

    /// Per-axis part of the weight for the first concentration parameter:
    /// `(coordinate, ln |d coordinate / dα|)`.
    pub(crate) fn first_axis(&self, alpha: f64) -> AxisTerm {
        match self.kind {
            HyperPriorKind::Kl => entropy_axis(alpha, self.k),
            HyperPriorKind::HellingerSq => overlap_axis(alpha, self.k),
        }
    }

    pub(crate) fn second_axis(&self, beta: f64) -> AxisTerm {
        match self.kind {
            HyperPriorKind::Kl => crossentropy_axis(beta, self.k),
            HyperPriorKind::HellingerSq => overlap_axis(beta, self.k),
        }
    }

    /// `ln φ` of the a-priori divergence formed from the two axis
    /// coordinates.
    pub(crate) fn log_phi(&self, first: &AxisTerm, second: &AxisTerm) -> f64 {
        match self.kind {
            HyperPriorKind::Kl => log_phi_kl(second.coord - first.coord, self.k),
            HyperPriorKind::HellingerSq => log_phi_hellinger_from_ln_overlap(first.coord + second.coord),
        }
    }

    /// The full log weight assembled from precomputed axis terms.
    pub(crate) fn combine(&self, first: &AxisTerm, second: &AxisTerm) -> f64 {
        first.log_jacobian + second.log_jacobian + self.log_phi(first, second)
    }
}

/// One concentration parameter mapped to its hyper-prior coordinate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisTerm {
    /// `A(α)`, `B(β)`, or `ln g(x)` depending on the kind.
    pub coord: f64,
    pub log_jacobian: f64,
}

/// `A'(α) = K ψ₁(Kα+1) − ψ₁(α+1)`.
pub fn prior_mean_entropy_derivative(alpha: f64, k: u64) -> f64 {
    let k = k as f64;
    k * raw::trigamma(k * alpha + 1.0) - raw::trigamma(alpha + 1.0)
}

/// `B'(β) = K ψ₁(Kβ) − ψ₁(β)`, which is negative.
pub fn prior_mean_crossentropy_derivative(beta: f64, k: u64) -> f64 {
    let k = k as f64;
    k * raw::trigamma(k * beta) - raw::trigamma(beta)
}

fn entropy_axis(alpha: f64, k: u64) -> AxisTerm {
    let kf = k as f64;
    AxisTerm {
        coord: raw::delta_psi(kf * alpha + 1.0, alpha + 1.0),
        log_jacobian: prior_mean_entropy_derivative(alpha, k).abs().ln(),
    }
}

fn crossentropy_axis(beta: f64, k: u64) -> AxisTerm {
    let kf = k as f64;
    AxisTerm {
        coord: raw::delta_psi(kf * beta, beta),
        log_jacobian: prior_mean_crossentropy_derivative(beta, k).abs().ln(),
    }
}

/// `ln g(x)` for `g(x) = √K B(1/2, Kx) / B(1/2, x)`, the a-priori
/// `K ⟨√q_i⟩` factor of the Bhattacharyya coefficient.
pub fn hellinger_log_g(x: f64, k: u64) -> f64 {
    let kf = k as f64;
    0.5 * kf.ln() + raw::ln_beta_half(kf * x) - raw::ln_beta_half(x)
}

/// `g'(x) / g(x) = [ψ(x+1/2) − ψ(x)] − K [ψ(Kx+1/2) − ψ(Kx)]`.
pub fn hellinger_log_g_derivative(x: f64, k: u64) -> f64 {
    let kf = k as f64;
    raw::delta_psi(x + 0.5, x) - kf * raw::delta_psi(kf * x + 0.5, kf * x)
}

fn overlap_axis(x: f64, k: u64) -> AxisTerm {
    let ln_g = hellinger_log_g(x, k);
    AxisTerm {
        coord: ln_g,
        log_jacobian: ln_g + hellinger_log_g_derivative(x, k).abs().ln(),
    }
}

/// `ln φ(z)` for the KL hyper-prior with a log-uniform target.
pub fn log_phi_kl(z: f64, k: u64) -> f64 {
    debug_assert!(z > 0.0, "a-priori KL divergence must be positive, got {z}");
    let ln_k = (k as f64).ln();
    if z < ln_k {
        -2.0 * z.ln()
    } else {
        -z.ln() - ln_k.ln()
    }
}

/// `ln φ_H(z)` with `z = 1 − exp(ln_overlap)`.
fn log_phi_hellinger_from_ln_overlap(ln_overlap: f64) -> f64 {
    let z = -ln_overlap.exp_m1();
    debug_assert!(z > 0.0 && z < 1.0, "a-priori Hellinger divergence out of (0,1): {z}");
    // ρ(z)(1−z)²/(z(2−z)) with ρ ∝ 1/z
    2.0 * ln_overlap - 2.0 * z.ln() - (2.0 - z).ln()
}

/// `ln φ_H(z)` for the squared-Hellinger hyper-prior.
pub fn log_phi_hellinger(z: f64) -> f64 {
    log_phi_hellinger_from_ln_overlap((-z).ln_1p())
}

/// `ln ρ(α, β)` of the KL hyper-prior.
pub fn log_weight_kl(alpha: f64, beta: f64, k: u64) -> Result<f64> {
    check_concentration(alpha)?;
    check_concentration(beta)?;
    let spec = HyperPriorSpec::new(HyperPriorKind::Kl, k)?;
    Ok(spec.combine(&spec.first_axis(alpha), &spec.second_axis(beta)))
}

/// `ln ρ_H(α, β)` of the squared-Hellinger hyper-prior.
pub fn log_weight_hellinger(alpha: f64, beta: f64, k: u64) -> Result<f64> {
    check_concentration(alpha)?;
    check_concentration(beta)?;
    let spec = HyperPriorSpec::new(HyperPriorKind::HellingerSq, k)?;
    Ok(spec.combine(&spec.first_axis(alpha), &spec.second_axis(beta)))
}

/// Weighted histogram of `ln z` for `(α, β)` drawn from the discretized
/// KL hyper-prior on a square log grid. Returns `(bin_edges, densities)`
/// with the densities normalized to integrate to one.
pub fn kl_log_divergence_histogram(
    k: u64,
    log_range: (f64, f64),
    grid_nodes: usize,
    bins: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = HyperPriorSpec::new(HyperPriorKind::Kl, k)?;
    if grid_nodes < 2 || bins == 0 || log_range.0 >= log_range.1 {
        return Err(Error::domain("degenerate histogram grid"));
    }
    let step = (log_range.1 - log_range.0) / (grid_nodes - 1) as f64;
    let nodes: Vec<f64> = (0..grid_nodes).map(|i| log_range.0 + step * i as f64).collect();
    let first: Vec<AxisTerm> = nodes.iter().map(|u| spec.first_axis(u.exp())).collect();
    let second: Vec<AxisTerm> = nodes.iter().map(|v| spec.second_axis(v.exp())).collect();

    let mut samples = Vec::with_capacity(grid_nodes * grid_nodes);
    for (a, u) in first.iter().zip(&nodes) {
        for (b, v) in second.iter().zip(&nodes) {
            let z = b.coord - a.coord;
            // density in (ln α, ln β) carries the jacobian αβ
            let lw = spec.combine(a, b) + u + v;
            samples.push((z.ln(), lw));
        }
    }
    let max_lw = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut mass = vec![0.0; bins];
    for (lz, lw) in samples {
        let idx = (((lz - lo) / width) as usize).min(bins - 1);
        mass[idx] += (lw - max_lw).exp();
    }
    let total: f64 = mass.iter().sum();
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let density = mass.iter().map(|m| m / (total * width)).collect();
    Ok((edges, density))
}
