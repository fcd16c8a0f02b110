//! Counting criteria over the admissible configurations: alternating index
//! sums, the degree, and the existence verdicts with Morse-index and
//! multiplicity bounds.
//!
//! With `S_k = Σ_{ι(τ) ≤ k-1} (-1)^ι(τ)`, an index `k` is admissible when
//! `S_k != 1` and no admissible configuration has index exactly `k`. The
//! smallest admissible `k` bounds the Morse index of a solution, and for
//! generic K there are at least `|1 - S_k|` solutions of index at most `k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::interaction::F1Set;

/// `p - 1 + Σ (4 - m(K, y_i))` for the configuration `members`.
pub fn iota(members: &[CriticalPoint]) -> i64 {
    iota_from_morse(members.iter().map(|m| m.morse_index))
}

pub fn iota_from_morse(morse: impl IntoIterator<Item = usize>) -> i64 {
    let (p, defect) = morse.into_iter().fold((0i64, 0i64), |(p, d), m| (p + 1, d + 4 - m as i64));
    p - 1 + defect
}

fn parity(i: i64) -> i64 {
    if i.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingSums {
    #[serde(rename = "histogram")]
    pub index_histogram: BTreeMap<i64, u64>,
    pub total_sum: i64,
    /// `1 - total_sum`.
    pub degree: i64,
    /// Largest index, `-1` when there are no admissible configurations.
    pub l_sharp: i64,
    /// `S_k` for `k = 0..=l_sharp + 1`.
    pub partial_sums: Vec<i64>,
}

impl CountingSums {
    pub fn from_indices(indices: impl IntoIterator<Item = i64>) -> Self {
        let mut index_histogram = BTreeMap::new();
        for i in indices {
            *index_histogram.entry(i).or_insert(0u64) += 1;
        }
        Self::from_histogram(index_histogram)
    }

    pub fn from_histogram(index_histogram: BTreeMap<i64, u64>) -> Self {
        let total_sum = index_histogram.iter().map(|(&i, &n)| parity(i) * n as i64).sum();
        let l_sharp = index_histogram.keys().next_back().copied().unwrap_or(-1);
        let mut sums =
            CountingSums { index_histogram, total_sum, degree: 1 - total_sum, l_sharp, partial_sums: Vec::new() };
        sums.partial_sums = (0..=l_sharp + 1).map(|k| sums.partial_sum(k)).collect();
        sums
    }

    /// `S_k`; equals `total_sum` for every `k > l_sharp`.
    pub fn partial_sum(&self, k: i64) -> i64 {
        self.index_histogram.range(..k).map(|(&i, &n)| parity(i) * n as i64).sum()
    }

    pub fn count_with_index(&self, k: i64) -> u64 {
        self.index_histogram.get(&k).copied().unwrap_or(0)
    }
}

pub fn counting_sums(f1: &F1Set) -> CountingSums {
    CountingSums::from_indices(f1.admissible().map(|c| c.iota))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Verdict {
    ExistenceWithBound {
        k: i64,
        /// A solution exists with Morse index at most this value.
        morse_bound: i64,
        /// Generic lower bound on solutions with Morse index `<= k`.
        multiplicity: u64,
        /// Set when the index-`k` configurations were cleared by asserted
        /// intersection numbers instead of being absent.
        conditional: bool,
    },
    ExistenceByCorollary {
        multiplicity: u64,
    },
    NoConclusion,
}

impl Verdict {
    pub fn is_existence(&self) -> bool {
        !matches!(self, Verdict::NoConclusion)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremOutcome {
    pub admissible_k: Vec<i64>,
    pub verdict: Verdict,
}

/// Asserted mod-2 intersection number for one admissible configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuAssertion {
    pub subset: Vec<String>,
    pub value: u8,
}

fn verdict_for(sums: &CountingSums, admissible: &[(i64, bool)]) -> Verdict {
    if sums.index_histogram.is_empty() {
        // Nothing at infinity: the degree is 1.
        return Verdict::ExistenceByCorollary { multiplicity: (1 - sums.total_sum).unsigned_abs() };
    }
    match admissible.first() {
        Some(&(k, conditional)) => Verdict::ExistenceWithBound {
            k,
            morse_bound: k,
            multiplicity: (1 - sums.partial_sum(k)).unsigned_abs(),
            conditional,
        },
        None => Verdict::NoConclusion,
    }
}

/// Scans `k = 0..=l_sharp + 1`; larger `k` repeat the `l_sharp + 1` case.
pub fn evaluate_theorem_main(sums: &CountingSums) -> TheoremOutcome {
    let admissible: Vec<(i64, bool)> = (0..=sums.l_sharp + 1)
        .filter(|&k| sums.partial_sum(k) != 1 && sums.count_with_index(k) == 0)
        .map(|k| (k, false))
        .collect();
    TheoremOutcome { admissible_k: admissible.iter().map(|a| a.0).collect(), verdict: verdict_for(sums, &admissible) }
}

fn key(names: &[String]) -> Vec<String> {
    let mut v = names.to_vec();
    v.sort();
    v
}

/// Same scan as [`evaluate_theorem_main`], but an index `k` that is present
/// is still admissible when every index-`k` configuration carries an
/// asserted `mu = 0`. An index with no assertions at all is treated as in
/// the main criterion; partial coverage of an index that passes the sum
/// condition is an error.
///
/// `candidates` lists the admissible configurations as (names, index).
pub fn evaluate_theorem_general(
    sums: &CountingSums,
    candidates: &[(Vec<String>, i64)],
    mu: &[MuAssertion],
) -> Result<TheoremOutcome> {
    let mut asserted: BTreeMap<Vec<String>, u8> = BTreeMap::new();
    for a in mu {
        if a.value > 1 {
            return Err(Error::InvalidMuAssertion {
                subset: a.subset.clone(),
                reason: format!("value {} is not 0 or 1", a.value),
            });
        }
        let k = key(&a.subset);
        if !candidates.iter().any(|(names, _)| key(names) == k) {
            return Err(Error::InvalidMuAssertion {
                subset: a.subset.clone(),
                reason: "not an admissible configuration".into(),
            });
        }
        if asserted.insert(k, a.value).is_some() {
            return Err(Error::InvalidMuAssertion { subset: a.subset.clone(), reason: "asserted twice".into() });
        }
    }

    let mut admissible = Vec::new();
    for k in 0..=sums.l_sharp + 1 {
        if sums.partial_sum(k) == 1 {
            continue;
        }
        let at_k: Vec<&Vec<String>> = candidates.iter().filter(|(_, i)| *i == k).map(|(n, _)| n).collect();
        if at_k.is_empty() {
            admissible.push((k, false));
            continue;
        }
        let values: Vec<Option<u8>> = at_k.iter().map(|n| asserted.get(&key(n)).copied()).collect();
        if values.iter().all(Option::is_none) {
            continue;
        }
        if let Some(pos) = values.iter().position(Option::is_none) {
            return Err(Error::MissingMuAssertion { subset: at_k[pos].clone() });
        }
        if values.iter().all(|v| *v == Some(0)) {
            admissible.push((k, true));
        }
    }
    Ok(TheoremOutcome {
        admissible_k: admissible.iter().map(|a| a.0).collect(),
        verdict: verdict_for(sums, &admissible),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(flatten)]
    pub sums: CountingSums,
    pub admissible_k: Vec<i64>,
    pub verdict: Verdict,
    pub mu_assertions: Vec<MuAssertion>,
}

/// Sums plus the verdict, using the intersection-number criterion when
/// assertions are supplied.
pub fn certify(f1: &F1Set, mu: &[MuAssertion]) -> Result<Certificate> {
    let sums = counting_sums(f1);
    let outcome = if mu.is_empty() {
        evaluate_theorem_main(&sums)
    } else {
        let cands: Vec<(Vec<String>, i64)> = f1.admissible().map(|c| (c.names.clone(), c.iota)).collect();
        evaluate_theorem_general(&sums, &cands, mu)?
    };
    Ok(Certificate { sums, admissible_k: outcome.admissible_k, verdict: outcome.verdict, mu_assertions: mu.to_vec() })
}
