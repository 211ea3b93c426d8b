//! Ground-truth generators: Dirichlet draws, multinomial sampling, Markov
//! chain L-grams, and exact divergences of known distributions.
//!
//! Samplers take an explicit generator so callers control seeding.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Open01};

use crate::error::{Error, Result};

mod markov;

pub use markov::{
    build_markov_spec, markov_crossentropy, markov_entropy, sample_lgrams, uniform_markov_spec, MarkovChainSpec,
};

const SIMPLEX_TOL: f64 = 1e-12;

/// A distribution over `K` categories.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Validates non-negativity and normalization to within 1e-12.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Shape("probability vector is empty".into()));
        }
        if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::domain(format!("invalid probability {x}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("probabilities sum to {s}, not 1")));
        }
        Ok(ProbabilityVector(p))
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(w: Vec<f64>) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::domain("weights must have a positive finite sum"));
        }
        ProbabilityVector::new(w.into_iter().map(|x| x / s).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Draws from the symmetric Dirichlet of concentration `alpha` over `k`
/// categories. For `alpha < 1` the Gamma draws are formed in log space as
/// `ln G(α+1) + ln U / α`, which keeps very sparse draws from underflowing
/// to an all-zero vector.
pub fn sample_dirichlet<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Result<ProbabilityVector> {
    if k < 2 {
        return Err(Error::domain(format!("K must be at least 2, got {k}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be finite and positive, got {alpha}")));
    }
    let log_g: Vec<f64> = if alpha < 1.0 {
        let g = Gamma::new(alpha + 1.0, 1.0).map_err(|e| Error::domain(e.to_string()))?;
        (0..k)
            .map(|_| {
                let u: f64 = Open01.sample(rng);
                g.sample(rng).ln() + u.ln() / alpha
            })
            .collect()
    } else {
        let g = Gamma::new(alpha, 1.0).map_err(|e| Error::domain(e.to_string()))?;
        (0..k).map(|_| g.sample(rng).ln()).collect()
    };
    let top = log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_g.iter().map(|l| (l - top).exp()).collect();
    ProbabilityVector::from_weights(w)
}

/// `n` draws from `p`, via a chain of conditional binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(p: &ProbabilityVector, n: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; p.len()];
    let mut left = n;
    let mut mass = 1.0f64;
    for (i, &pi) in p.as_slice().iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() {
            counts[i] = left;
            break;
        }
        let prob = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 1.0 };
        let x = if prob == 0.0 {
            0
        } else if prob == 1.0 {
            left
        } else {
            Binomial::new(left, prob).expect("probability in (0,1)").sample(rng)
        };
        counts[i] = x;
        left -= x;
        mass -= pi;
    }
    counts
}

/// Draws `n` items without replacement from a population given as category
/// counts.
pub fn subsample_counts<R: Rng + ?Sized>(counts: &[u64], n: u64, rng: &mut R) -> Result<Vec<u64>> {
    let pool: u64 = counts.iter().sum();
    if n > pool {
        return Err(Error::domain(format!("cannot draw {n} items from a sample of {pool}")));
    }
    if n == pool {
        return Ok(counts.to_vec());
    }
    let pool = usize::try_from(pool).map_err(|_| Error::domain("population too large"))?;
    let cumulative: Vec<u64> = counts
        .iter()
        .scan(0u64, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let mut out = vec![0u64; counts.len()];
    for item in index::sample(rng, pool, n as usize) {
        let cat = cumulative.partition_point(|&c| c <= item as u64);
        out[cat] += 1;
    }
    Ok(out)
}

fn check_same_len(q: &ProbabilityVector, t: &ProbabilityVector) -> Result<()> {
    if q.len() != t.len() {
        return Err(Error::Shape(format!(
            "distributions have {} and {} categories",
            q.len(),
            t.len()
        )));
    }
    Ok(())
}

/// Shannon entropy `−Σ q ln q` in nats.
pub fn exact_entropy(q: &ProbabilityVector) -> f64 {
    -q.as_slice()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

/// `−Σ q_i ln t_i`; requires `t_i > 0` wherever `q_i > 0`.
pub fn exact_crossentropy(q: &ProbabilityVector, t: &ProbabilityVector) -> Result<f64> {
    check_same_len(q, t)?;
    let mut acc = 0.0;
    for (&qi, &ti) in q.as_slice().iter().zip(t.as_slice()) {
        if qi > 0.0 {
            if ti <= 0.0 {
                return Err(Error::domain("t vanishes where q does not"));
            }
            acc -= qi * ti.ln();
        }
    }
    Ok(acc)
}

/// `Σ q_i ln(q_i / t_i)`; requires `t_i > 0` wherever `q_i > 0`.
pub fn exact_dkl(q: &ProbabilityVector, t: &ProbabilityVector) -> Result<f64> {
    check_same_len(q, t)?;
    let mut acc = 0.0;
    for (&qi, &ti) in q.as_slice().iter().zip(t.as_slice()) {
        if qi > 0.0 {
            if ti <= 0.0 {
                return Err(Error::domain("t vanishes where q does not"));
            }
            acc += qi * (qi / ti).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// `1 − Σ √(q_i t_i)`.
pub fn exact_hellinger_sq(q: &ProbabilityVector, t: &ProbabilityVector) -> Result<f64> {
    check_same_len(q, t)?;
    let bc: f64 = q.as_slice().iter().zip(t.as_slice()).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((1.0 - bc).clamp(0.0, 1.0))
}
