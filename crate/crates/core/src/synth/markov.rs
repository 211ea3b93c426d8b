use rand::Rng;
use rand_distr::{Distribution, Open01, WeightedAliasIndex};

use super::ProbabilityVector;
use crate::error::{Error, Result};

const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 100_000;
/// Largest `S^L` for which the L-gram distribution is enumerated.
const MAX_ENUMERATED: u64 = 1 << 26;

/// A Markov chain on `S` states observed through length-`L` words.
///
/// `W[ν][μ]` is the probability of moving from `μ` to `ν`, so every column
/// sums to one. L-gram `(x₁, …, x_L)` has index `Σ x_k S^(k−1)` with
/// zero-based states, and probability `π_{x₁} W_{x₂x₁} ⋯ W_{x_L x_{L−1}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChainSpec {
    states: usize,
    gram_length: u32,
    /// Row-major `S × S`.
    w: Vec<f64>,
    pi: Vec<f64>,
}

impl MarkovChainSpec {
    /// Builds a spec from a column-stochastic matrix given row by row.
    pub fn from_matrix(states: usize, gram_length: u32, w: Vec<f64>) -> Result<Self> {
        if states < 2 {
            return Err(Error::domain(format!("need at least 2 states, got {states}")));
        }
        if gram_length < 1 {
            return Err(Error::domain("gram length must be at least 1"));
        }
        if w.len() != states * states {
            return Err(Error::Shape(format!(
                "transition matrix has {} entries, expected {}",
                w.len(),
                states * states
            )));
        }
        if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::domain("transition probabilities must be positive"));
        }
        for mu in 0..states {
            let s: f64 = (0..states).map(|nu| w[nu * states + mu]).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::domain(format!("column {mu} sums to {s}")));
            }
        }
        states
            .checked_pow(gram_length)
            .ok_or_else(|| Error::domain("S^L overflows"))?;
        let pi = stationary(states, &w);
        Ok(MarkovChainSpec {
            states,
            gram_length,
            w,
            pi,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn gram_length(&self) -> u32 {
        self.gram_length
    }

    /// Number of L-gram categories, `S^L`.
    pub fn k(&self) -> u64 {
        (self.states as u64).pow(self.gram_length)
    }

    /// Probability of the move `from → to`.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.w[to * self.states + from]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// `‖Wπ − π‖₁`
    pub fn stationarity_residual(&self) -> f64 {
        residual(self.states, &self.w, &self.pi)
    }

    /// The full L-gram distribution, enumerated in index order.
    pub fn lgram_probabilities(&self) -> Result<ProbabilityVector> {
        let k = self.k();
        if k > MAX_ENUMERATED {
            return Err(Error::domain(format!("{k} L-grams are too many to enumerate")));
        }
        let s = self.states;
        // grow the words one position at a time; index = x₁ + S x₂ + …
        let mut probs = self.pi.clone();
        let mut stride = s;
        for _ in 1..self.gram_length {
            let mut next = vec![0.0; probs.len() * s];
            for (idx, &p) in probs.iter().enumerate() {
                let last = idx / (stride / s);
                for x in 0..s {
                    next[idx + x * stride] = p * self.transition(last, x);
                }
            }
            probs = next;
            stride *= s;
        }
        let total: f64 = probs.iter().sum();
        ProbabilityVector::new(probs.into_iter().map(|p| p / total).collect())
    }

    fn check_compatible(&self, other: &MarkovChainSpec) -> Result<()> {
        if self.states != other.states || self.gram_length != other.gram_length {
            return Err(Error::domain(format!(
                "chains differ in shape: S={}, L={} vs S={}, L={}",
                self.states, self.gram_length, other.states, other.gram_length
            )));
        }
        Ok(())
    }
}

fn apply(states: usize, w: &[f64], pi: &[f64]) -> Vec<f64> {
    (0..states)
        .map(|nu| (0..states).map(|mu| w[nu * states + mu] * pi[mu]).sum())
        .collect()
}

fn residual(states: usize, w: &[f64], pi: &[f64]) -> f64 {
    apply(states, w, pi).iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

/// Power iteration from the uniform vector.
fn stationary(states: usize, w: &[f64]) -> Vec<f64> {
    let mut pi = vec![1.0 / states as f64; states];
    for _ in 0..STATIONARY_MAX_ITER {
        let mut next = apply(states, w, &pi);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let delta: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if delta <= STATIONARY_TOL * 0.1 {
            break;
        }
    }
    pi
}

/// Random chain with every transition weight uniform in (0,1) before column
/// normalization.
pub fn build_markov_spec<R: Rng + ?Sized>(states: usize, gram_length: u32, rng: &mut R) -> Result<MarkovChainSpec> {
    if states < 2 {
        return Err(Error::domain(format!("need at least 2 states, got {states}")));
    }
    let mut w: Vec<f64> = (0..states * states).map(|_| Open01.sample(rng)).collect();
    for mu in 0..states {
        let s: f64 = (0..states).map(|nu| w[nu * states + mu]).sum();
        for nu in 0..states {
            w[nu * states + mu] /= s;
        }
    }
    MarkovChainSpec::from_matrix(states, gram_length, w)
}

/// Chain with every transition equal to `1/S`; its L-grams are uniform.
pub fn uniform_markov_spec(states: usize, gram_length: u32) -> Result<MarkovChainSpec> {
    if states < 2 {
        return Err(Error::domain(format!("need at least 2 states, got {states}")));
    }
    MarkovChainSpec::from_matrix(states, gram_length, vec![1.0 / states as f64; states * states])
}

fn stationary_entropy(pi: &[f64]) -> f64 {
    -pi.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// Entropy of the stationary L-gram distribution:
/// `S(π) − (L−1) Σ_{μν} W_{νμ} π_μ ln W_{νμ}`.
pub fn markov_entropy(spec: &MarkovChainSpec) -> f64 {
    let s = spec.states;
    let mut rate = 0.0;
    for mu in 0..s {
        for nu in 0..s {
            let w = spec.transition(mu, nu);
            rate -= w * spec.pi[mu] * w.ln();
        }
    }
    stationary_entropy(&spec.pi) + (spec.gram_length - 1) as f64 * rate
}

/// Cross-entropy `−Σ q ln t` between the L-gram distributions of two
/// chains: `H(π‖σ) − (L−1) Σ_{μν} W_{νμ} π_μ ln V_{νμ}`.
pub fn markov_crossentropy(spec_q: &MarkovChainSpec, spec_t: &MarkovChainSpec) -> Result<f64> {
    spec_q.check_compatible(spec_t)?;
    let s = spec_q.states;
    let head: f64 = -spec_q.pi.iter().zip(&spec_t.pi).map(|(p, q)| p * q.ln()).sum::<f64>();
    let mut rate = 0.0;
    for mu in 0..s {
        for nu in 0..s {
            rate -= spec_q.transition(mu, nu) * spec_q.pi[mu] * spec_t.transition(mu, nu).ln();
        }
    }
    Ok(head + (spec_q.gram_length - 1) as f64 * rate)
}

/// Histogram of `n` independent L-grams, each started from `π` and
/// continued along the chain.
pub fn sample_lgrams<R: Rng + ?Sized>(spec: &MarkovChainSpec, n: u64, rng: &mut R) -> Vec<u64> {
    let s = spec.states;
    let mut counts = vec![0u64; spec.k() as usize];
    if n == 0 {
        return counts;
    }
    let start = WeightedAliasIndex::new(spec.pi.clone()).expect("positive stationary vector");
    let steps: Vec<WeightedAliasIndex<f64>> = (0..s)
        .map(|from| {
            WeightedAliasIndex::new((0..s).map(|to| spec.transition(from, to)).collect())
                .expect("positive transition column")
        })
        .collect();
    for _ in 0..n {
        let mut x = start.sample(rng);
        let mut idx = x;
        let mut stride = s;
        for _ in 1..spec.gram_length {
            x = steps[x].sample(rng);
            idx += x * stride;
            stride *= s;
        }
        counts[idx] += 1;
    }
    counts
}
