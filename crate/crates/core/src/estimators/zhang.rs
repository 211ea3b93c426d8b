//! Bias-corrected Z-estimator of the KL divergence in its resummed form.

use crate::counts::MultiplicityTable;
use crate::error::{Error, Result};
use crate::specfun::raw;

/// `Σ (n_i/N) [Δψ(M+1, m_i+1) − Δψ(N, n_i)]`; categories with `n_i = 0`
/// contribute nothing.
pub fn estimate_dkl_zhang(table: &MultiplicityTable) -> Result<f64> {
    let n_total = table.n_total();
    if n_total == 0 {
        return Err(Error::domain("Z-estimator needs at least one draw in the first sample"));
    }
    let (nf, mf) = (n_total as f64, table.m_total() as f64);
    Ok(table
        .entries()
        .iter()
        .filter(|(p, _)| p.n > 0)
        .map(|&(p, nu)| {
            let (n, m) = (p.n as f64, p.m as f64);
            nu as f64 * (n / nf) * (raw::delta_psi(mf + 1.0, m + 1.0) - raw::delta_psi(nf, n))
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::Sample;
    use crate::posterior::{posterior_dkl, HyperParams};
    use proptest::prelude::*;

    /// The original double-series form, summed term by term.
    fn zhang_series(n: &[u64], m: &[u64]) -> f64 {
        let nn: u64 = n.iter().sum();
        let mm: u64 = m.iter().sum();
        let mut total = 0.0;
        for (&ni, &mi) in n.iter().zip(m) {
            if ni == 0 {
                continue;
            }
            let mut cross = 0.0;
            let mut prod = 1.0;
            for v in 1..=(mm - mi) {
                prod *= 1.0 - mi as f64 / (mm - v + 1) as f64;
                cross += prod / v as f64;
            }
            let mut ent = 0.0;
            let mut prod = 1.0;
            for v in 1..=(nn - ni) {
                prod *= 1.0 - (ni as f64 - 1.0) / (nn - v) as f64;
                ent += prod / v as f64;
            }
            total += ni as f64 / nn as f64 * (cross - ent);
        }
        total
    }

    fn table(n: &[u64], m: &[u64]) -> MultiplicityTable {
        MultiplicityTable::from_counts(n, m, n.len() as u64).unwrap()
    }

    #[test]
    fn identical_samples() {
        let t = MultiplicityTable::from_counts(&[2, 1, 0], &[2, 1, 0], 3).unwrap();
        assert!((estimate_dkl_zhang(&t).unwrap() + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn empty_first_sample_is_domain_error() {
        let t = table(&[0, 0], &[1, 2]);
        assert!(matches!(estimate_dkl_zhang(&t), Err(Error::Domain(_))));
    }

    #[test]
    fn dp_limit_with_full_support() {
        // α → 0, β = 1: ⟨D_KL⟩ − [Δψ(M+K, M+1) + (K−1)/N] tends to Ẑ
        let n = [3, 1, 4, 1, 5, 9];
        let m = [2, 6, 0, 5, 3, 5];
        let t = table(&n, &m);
        let (nf, mf, k) = (23.0, 21.0, 6.0);
        let dp = posterior_dkl(&t, HyperParams::new(1e-8, 1.0, 6).unwrap()).unwrap();
        let shift = raw::delta_psi(mf + k, mf + 1.0) + (k - 1.0) / nf;
        assert!((dp - shift - estimate_dkl_zhang(&t).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn dp_limit_counts_observed_categories() {
        let n = [3, 0, 4, 0, 5, 9];
        let m = [2, 6, 0, 5, 3, 5];
        let t = table(&n, &m);
        let (nf, mf, k) = (21.0, 21.0, 6.0);
        let k_obs = t.observed(Sample::First) as f64;
        let dp = posterior_dkl(&t, HyperParams::new(1e-10, 1.0, 6).unwrap()).unwrap();
        let shift = raw::delta_psi(mf + k, mf + 1.0) + (k_obs - 1.0) / nf;
        assert!((dp - shift - estimate_dkl_zhang(&t).unwrap()).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn closed_form_matches_series(
            (n, m) in (2usize..=10).prop_flat_map(|k| (
                proptest::collection::vec(0u64..=15, k),
                proptest::collection::vec(0u64..=15, k),
            )).prop_filter("N ≥ 1", |(n, _)| n.iter().sum::<u64>() > 0)
        ) {
            let z = estimate_dkl_zhang(&table(&n, &m)).unwrap();
            let s = zhang_series(&n, &m);
            prop_assert!((z - s).abs() < 1e-10, "{} vs {}", z, s);
        }
    }
}
