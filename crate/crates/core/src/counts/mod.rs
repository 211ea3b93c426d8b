//! Paired count samples compressed into multiplicities of count pairs.
//!
//! Categories sharing the same pair `(n, m)` are stored once together with
//! their number ν. Unobserved categories are kept as an explicit `(0, 0)`
//! entry so that the table always carries K.

mod io;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub use io::{read_count_file, read_pair_csv, read_pair_files, CountFile};

/// Counts of one category in the two samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CountPair {
    pub n: u64,
    pub m: u64,
}

impl CountPair {
    pub const ZERO: CountPair = CountPair { n: 0, m: 0 };

    pub fn new(n: u64, m: u64) -> Self {
        CountPair { n, m }
    }

    pub fn get(self, which: Sample) -> u64 {
        match which {
            Sample::First => self.n,
            Sample::Second => self.m,
        }
    }
}

/// Selects one of the two samples of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sample {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityTable {
    entries: Vec<(CountPair, u64)>,
    k: u64,
    n_total: u64,
    m_total: u64,
}

impl MultiplicityTable {
    /// Groups two per-category count vectors. Categories beyond
    /// `counts1.len()` up to `k` are unobserved in both samples.
    pub fn from_counts(counts1: &[u64], counts2: &[u64], k: u64) -> Result<Self> {
        if counts1.len() != counts2.len() {
            return Err(Error::Shape(format!(
                "count vectors have lengths {} and {}",
                counts1.len(),
                counts2.len()
            )));
        }
        Self::from_pairs(counts1.iter().zip(counts2).map(|(&n, &m)| CountPair::new(n, m)), k)
    }

    /// Same as [`from_counts`](Self::from_counts) for signed input, which is
    /// rejected if any count is negative.
    pub fn from_signed_counts(counts1: &[i64], counts2: &[i64], k: u64) -> Result<Self> {
        let to_unsigned = |v: &[i64]| -> Result<Vec<u64>> {
            v.iter()
                .map(|&c| u64::try_from(c).map_err(|_| Error::domain(format!("negative count {c}"))))
                .collect()
        };
        Self::from_counts(&to_unsigned(counts1)?, &to_unsigned(counts2)?, k)
    }

    /// A table whose second sample is empty, for single-sample estimators.
    pub fn single(counts: &[u64], k: u64) -> Result<Self> {
        Self::from_pairs(counts.iter().map(|&n| CountPair::new(n, 0)), k)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = CountPair>, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("number of categories must be at least 1"));
        }
        let mut grouped: BTreeMap<CountPair, u64> = BTreeMap::new();
        let mut listed = 0u64;
        for pair in pairs {
            *grouped.entry(pair).or_default() += 1;
            listed += 1;
        }
        if listed > k {
            return Err(Error::Inconsistent(format!("{listed} categories listed but K = {k}")));
        }
        if listed < k {
            *grouped.entry(CountPair::ZERO).or_default() += k - listed;
        }
        let entries: Vec<_> = grouped.into_iter().collect();
        let n_total = entries.iter().map(|(p, nu)| p.n * nu).sum();
        let m_total = entries.iter().map(|(p, nu)| p.m * nu).sum();
        Ok(MultiplicityTable {
            entries,
            k,
            n_total,
            m_total,
        })
    }

    /// Distinct count pairs with their multiplicities, ordered by pair.
    pub fn entries(&self) -> &[(CountPair, u64)] {
        &self.entries
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Size N of the first sample.
    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    /// Size M of the second sample.
    pub fn m_total(&self) -> u64 {
        self.m_total
    }

    pub fn total(&self, which: Sample) -> u64 {
        match which {
            Sample::First => self.n_total,
            Sample::Second => self.m_total,
        }
    }

    /// Number of categories with a nonzero count in the given sample.
    pub fn observed(&self, which: Sample) -> u64 {
        self.entries
            .iter()
            .filter(|(p, _)| p.get(which) > 0)
            .map(|(_, nu)| nu)
            .sum()
    }

    /// Number of distinct count pairs.
    pub fn unique_pairs(&self) -> usize {
        self.entries.len()
    }

    /// The counts of one sample grouped by value: `(count, multiplicity)`.
    pub fn marginal(&self, which: Sample) -> Vec<(u64, u64)> {
        let mut grouped: BTreeMap<u64, u64> = BTreeMap::new();
        for &(p, nu) in &self.entries {
            *grouped.entry(p.get(which)).or_default() += nu;
        }
        grouped.into_iter().collect()
    }

    /// The same categories with the two samples exchanged.
    pub fn swapped(&self) -> Self {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(p, nu)| (CountPair::new(p.m, p.n), nu))
            .collect();
        entries.sort_unstable();
        MultiplicityTable {
            entries,
            k: self.k,
            n_total: self.m_total,
            m_total: self.n_total,
        }
    }

    /// Expands the table back to per-category vectors in entry order.
    pub fn expand(&self) -> (Vec<u64>, Vec<u64>) {
        let mut n = Vec::with_capacity(self.k as usize);
        let mut m = Vec::with_capacity(self.k as usize);
        for &(p, nu) in &self.entries {
            for _ in 0..nu {
                n.push(p.n);
                m.push(p.m);
            }
        }
        (n, m)
    }

    /// `Σ_i f(n_i, m_i)` over all K categories.
    pub fn sum_over_categories<F>(&self, mut f: F) -> f64
    where
        F: FnMut(CountPair) -> f64,
    {
        self.entries.iter().map(|&(p, nu)| nu as f64 * f(p)).sum()
    }

    /// `Σ_{i,j}` of a function split into its diagonal part (`i = j`) and
    /// its off-diagonal part (`i ≠ j`). Categories sharing a count pair
    /// contribute `ν(ν − 1)` off-diagonal terms among themselves.
    pub fn double_sum_over_categories<D, O>(&self, mut f_diag: D, mut f_off: O) -> f64
    where
        D: FnMut(CountPair) -> f64,
        O: FnMut(CountPair, CountPair) -> f64,
    {
        let mut total = 0.0;
        for &(p, nu) in &self.entries {
            total += nu as f64 * f_diag(p);
            for &(p2, nu2) in &self.entries {
                let pairs = if p == p2 { nu * (nu2 - 1) } else { nu * nu2 };
                if pairs > 0 {
                    total += pairs as f64 * f_off(p, p2);
                }
            }
        }
        total
    }
}
