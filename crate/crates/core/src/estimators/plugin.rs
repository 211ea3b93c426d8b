//! Pseudo-count plugin estimators.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::counts::{MultiplicityTable, Sample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PluginScheme {
    /// Raw frequencies; cross-entropy terms with `m_i = 0` are dropped.
    Naive,
    /// One half per category.
    Jeffreys,
    /// `√N / K` and `√M / K`.
    Trybula,
    /// One over the number of observed categories of each sample.
    Perks,
}

impl PluginScheme {
    pub const ALL: [PluginScheme; 4] = [Self::Naive, Self::Jeffreys, Self::Trybula, Self::Perks];

    pub fn name(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Jeffreys => "jeffreys",
            Self::Trybula => "trybula",
            Self::Perks => "perks",
        }
    }

    fn pseudo_count(self, table: &MultiplicityTable, which: Sample) -> f64 {
        let k = table.k() as f64;
        match self {
            Self::Naive => 0.0,
            Self::Jeffreys => 0.5,
            Self::Trybula => (table.total(which) as f64).sqrt() / k,
            Self::Perks => match table.observed(which) {
                0 => 0.0,
                obs => 1.0 / obs as f64,
            },
        }
    }

    /// `(a, b)` for the two samples.
    pub fn pseudo_counts(self, table: &MultiplicityTable) -> (f64, f64) {
        (
            self.pseudo_count(table, Sample::First),
            self.pseudo_count(table, Sample::Second),
        )
    }
}

impl fmt::Display for PluginScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PluginScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown plugin scheme {s:?}")))
    }
}

/// Smoothed frequencies `(n_i + a)/(N + Ka)` and `(m_i + b)/(M + Kb)` per
/// distinct pair, with their multiplicities.
fn smoothed(table: &MultiplicityTable, scheme: PluginScheme) -> Result<Vec<(f64, f64, f64)>> {
    let (a, b) = scheme.pseudo_counts(table);
    let k = table.k() as f64;
    let nx = table.n_total() as f64 + k * a;
    let my = table.m_total() as f64 + k * b;
    if nx <= 0.0 {
        return Err(Error::domain(format!(
            "{scheme} plugin is undefined for an empty first sample"
        )));
    }
    if my <= 0.0 {
        return Err(Error::domain(format!(
            "{scheme} plugin is undefined for an empty second sample"
        )));
    }
    Ok(table
        .entries()
        .iter()
        .map(|&(p, nu)| ((p.n as f64 + a) / nx, (p.m as f64 + b) / my, nu as f64))
        .collect())
}

/// `Σ q̂_i ln(q̂_i / t̂_i)` with pseudo-count smoothing.
pub fn estimate_dkl_plugin(table: &MultiplicityTable, scheme: PluginScheme) -> Result<f64> {
    Ok(smoothed(table, scheme)?
        .into_iter()
        .filter(|&(q, t, _)| q > 0.0 && t > 0.0)
        .map(|(q, t, nu)| nu * q * (q / t).ln())
        .sum::<f64>()
        + 0.0)
}

/// `1 − Σ √(q̂_i t̂_i)`, clamped into `[0, 1]`.
pub fn estimate_hellinger_plugin(table: &MultiplicityTable, scheme: PluginScheme) -> Result<f64> {
    let bc: f64 = smoothed(table, scheme)?
        .into_iter()
        .map(|(q, t, nu)| nu * (q * t).sqrt())
        .sum();
    Ok((1.0 - bc).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(n: &[u64], m: &[u64]) -> MultiplicityTable {
        MultiplicityTable::from_counts(n, m, n.len() as u64).unwrap()
    }

    #[test]
    fn jeffreys_examples() {
        let t = table(&[1, 0], &[0, 1]);
        let d = estimate_dkl_plugin(&t, PluginScheme::Jeffreys).unwrap();
        assert!((d - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert!((d - 0.549306).abs() < 1e-6);
        let h = estimate_hellinger_plugin(&t, PluginScheme::Jeffreys).unwrap();
        assert!((h - (1.0 - 3f64.sqrt() / 2.0)).abs() < 1e-12);
        assert!((h - 0.133975).abs() < 1e-6);
    }

    #[test]
    fn identical_samples_give_zero() {
        let t = table(&[4, 0, 2, 7], &[4, 0, 2, 7]);
        for s in PluginScheme::ALL {
            assert!(estimate_dkl_plugin(&t, s).unwrap().abs() < 1e-14, "{s}");
            assert!(estimate_hellinger_plugin(&t, s).unwrap().abs() < 1e-14, "{s}");
        }
    }

    #[test]
    fn perks_uses_each_samples_observed_count() {
        let t = MultiplicityTable::from_counts(&[2, 1, 0], &[1, 0, 0], 3).unwrap();
        assert_eq!(PluginScheme::Perks.pseudo_counts(&t), (0.5, 1.0));
        let t = table(&[9, 0, 0, 0], &[1, 1, 1, 1]);
        let (a, b) = PluginScheme::Trybula.pseudo_counts(&t);
        assert_eq!((a, b), (0.75, 0.5));
    }

    #[test]
    fn naive_drops_unseen_second_sample_terms() {
        let t = table(&[2, 2], &[4, 0]);
        let d = estimate_dkl_plugin(&t, PluginScheme::Naive).unwrap();
        assert!((d - 0.5 * 0.5f64.ln()).abs() < 1e-15);
        let h = estimate_hellinger_plugin(&table(&[3, 0], &[0, 5]), PluginScheme::Naive).unwrap();
        assert_eq!(h, 1.0);
    }

    #[test]
    fn empty_samples_are_domain_errors() {
        let t = table(&[0, 0], &[1, 0]);
        for s in [PluginScheme::Naive, PluginScheme::Trybula, PluginScheme::Perks] {
            assert!(matches!(estimate_dkl_plugin(&t, s), Err(Error::Domain(_))), "{s}");
        }
        assert!(estimate_dkl_plugin(&t, PluginScheme::Jeffreys).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for s in PluginScheme::ALL {
            assert_eq!(s.name().parse::<PluginScheme>().unwrap(), s);
        }
        assert!("laplace".parse::<PluginScheme>().is_err());
    }
}
