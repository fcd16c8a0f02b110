//! Interaction matrices of concentration configurations, their least
//! eigenvalues, and the enumeration of admissible configurations.
//!
//! For points `y_1..y_p` of positive beta the matrix is
//!
//! ```text
//! M_ii = beta(y_i) / K(y_i)
//! M_ij = -2 G(y_i, y_j) / sqrt(K(y_i) K(y_j))      (i != j)
//! ```
//!
//! and a configuration is admissible when `M` is positive definite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::iota;
use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;
use crate::linalg::{least_eigenvalue, sylvester_positive_definite, SymMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InteractionConfig {
    /// `|rho|` at or below this counts as zero.
    pub rho_tol: f64,
    pub max_kplus: usize,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        InteractionConfig { rho_tol: 1e-9, max_kplus: 20 }
    }
}

/// Interaction matrix of `members` in the given order.
pub fn build_matrix(members: &[CriticalPoint], model: &dyn ManifoldModel) -> Result<SymMatrix> {
    let mut m = SymMatrix::zeros(members.len());
    for (i, yi) in members.iter().enumerate() {
        m.set(i, i, yi.beta / yi.k_value);
        for (j, yj) in members.iter().enumerate().skip(i + 1) {
            let g = model.green(&yi.location, &yj.location)?;
            m.set(i, j, -2.0 * g / (yi.k_value * yj.k_value).sqrt());
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpiCandidate {
    /// Positions in the positive-beta list, ascending.
    pub members: Vec<usize>,
    pub names: Vec<String>,
    pub matrix: SymMatrix,
    pub rho: f64,
    pub in_f1: bool,
    pub iota: i64,
    /// Positive definiteness by leading principal minors.
    pub sylvester_pd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F1Set {
    /// All nonempty subsets, by size and then lexicographically.
    pub candidates: Vec<CpiCandidate>,
    pub h1_ok: bool,
    /// `min |rho|` over all subsets; `None` when there are none.
    pub h1_min_margin: Option<f64>,
    /// Same test restricted to pairs.
    pub h1_pairs_ok: bool,
    /// Pairs `(subset, superset)` with `rho(superset) > rho(subset)`.
    pub interlacing_violations: Vec<(Vec<String>, Vec<String>)>,
    /// Subsets whose `rho` sign disagrees with Sylvester's criterion while
    /// `|rho|` exceeds the tolerance.
    pub sylvester_disagreements: Vec<Vec<String>>,
}

impl F1Set {
    pub fn admissible(&self) -> impl Iterator<Item = &CpiCandidate> {
        self.candidates.iter().filter(|c| c.in_f1)
    }

    pub fn find(&self, names: &[&str]) -> Option<&CpiCandidate> {
        let mut want: Vec<&str> = names.to_vec();
        want.sort_unstable();
        self.candidates.iter().find(|c| {
            let mut have: Vec<&str> = c.names.iter().map(String::as_str).collect();
            have.sort_unstable();
            have == want
        })
    }
}

fn subset_order(n: usize) -> Vec<u32> {
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    let members = |m: u32| (0..n).filter(|&i| m & (1 << i) != 0).collect::<Vec<_>>();
    masks.sort_by_cached_key(|&m| (m.count_ones(), members(m)));
    masks
}

/// Evaluates every nonempty subset of `kplus`.
pub fn enumerate_candidates(
    kplus: &[CriticalPoint],
    model: &dyn ManifoldModel,
    cfg: &InteractionConfig,
) -> Result<F1Set> {
    let n = kplus.len();
    if n > cfg.max_kplus || n > 30 {
        return Err(Error::TooManyPeaks { count: n, max: cfg.max_kplus.min(30) });
    }
    let full = build_matrix(kplus, model)?;
    let masks = subset_order(n);

    let candidates: Vec<CpiCandidate> = masks
        .par_iter()
        .map(|&mask| {
            let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let matrix = full.submatrix(&members);
            let rho = least_eigenvalue(&matrix);
            let chosen: Vec<CriticalPoint> = members.iter().map(|&i| kplus[i].clone()).collect();
            CpiCandidate {
                names: chosen.iter().map(|p| p.name.clone()).collect(),
                iota: iota(&chosen),
                sylvester_pd: sylvester_positive_definite(&matrix),
                in_f1: rho > 0.0,
                members,
                matrix,
                rho,
            }
        })
        .collect();

    let mut rho_by_mask = vec![f64::INFINITY; 1usize << n];
    for (c, &mask) in candidates.iter().zip(&masks) {
        rho_by_mask[mask as usize] = c.rho;
    }
    let slack = 1e-12 * (1.0 + full.frobenius_norm());
    let mut interlacing_violations = Vec::new();
    for (c, &mask) in candidates.iter().zip(&masks) {
        if mask.count_ones() < 2 {
            continue;
        }
        for &i in &c.members {
            let sub = mask & !(1 << i);
            let sub_rho = rho_by_mask[sub as usize];
            if c.rho > sub_rho + slack || (c.in_f1 && sub_rho <= 0.0) {
                let names = (0..n).filter(|&k| sub & (1 << k) != 0).map(|k| kplus[k].name.clone()).collect();
                interlacing_violations.push((names, c.names.clone()));
            }
        }
    }

    let sylvester_disagreements = candidates
        .iter()
        .filter(|c| c.rho.abs() > cfg.rho_tol && c.sylvester_pd != c.in_f1)
        .map(|c| c.names.clone())
        .collect();

    let h1_min_margin = candidates.iter().map(|c| c.rho.abs()).reduce(f64::min);
    let h1_ok = h1_min_margin.is_none_or(|m| m > cfg.rho_tol);
    let h1_pairs_ok = candidates.iter().filter(|c| c.members.len() == 2).all(|c| c.rho.abs() > cfg.rho_tol);

    Ok(F1Set { candidates, h1_ok, h1_min_margin, h1_pairs_ok, interlacing_violations, sylvester_disagreements })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H1Report {
    pub pass: bool,
    pub min_margin: Option<f64>,
    /// Subset attaining the smallest `|rho|`.
    pub witness: Option<Vec<String>>,
    pub failing: Vec<Vec<String>>,
    /// Verdict under the literal reading that only pairs are tested.
    pub pairs_only_pass: bool,
}

/// Passes iff `|rho| > rho_tol` for every enumerated subset.
pub fn check_h1(f1: &F1Set, rho_tol: f64) -> H1Report {
    let witness = f1.candidates.iter().min_by(|a, b| a.rho.abs().total_cmp(&b.rho.abs())).map(|c| c.names.clone());
    let failing: Vec<Vec<String>> =
        f1.candidates.iter().filter(|c| c.rho.abs() <= rho_tol).map(|c| c.names.clone()).collect();
    H1Report {
        pass: failing.is_empty(),
        min_margin: f1.candidates.iter().map(|c| c.rho.abs()).reduce(f64::min),
        witness,
        failing,
        pairs_only_pass: f1.candidates.iter().filter(|c| c.members.len() == 2).all(|c| c.rho.abs() > rho_tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{find_critical_points, kplus, SearchConfig};
    use crate::field::parse_field;
    use crate::geometry::{RoundSphere, SpherePoint};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const QUADRIC_5: &str = "3 + x5^2 + 0.5*x4^2 + 0.25*x3^2 + 0.125*x2^2 + 0.0625*x1^2";

    fn kplus_of(src: &str) -> Vec<CriticalPoint> {
        let f = parse_field(src).unwrap();
        let cfg = SearchConfig { starts: 512, ..SearchConfig::default() };
        kplus(&find_critical_points(&f, &RoundSphere, &cfg).unwrap())
    }

    #[test]
    fn singleton_matrix_of_affine_field() {
        let kp = kplus_of("2 + x5");
        let m = build_matrix(&kp, &RoundSphere).unwrap();
        assert_eq!(m.dim(), 1);
        assert_relative_eq!(m.get(0, 0), 4.0 / 27.0, epsilon = 1e-12);
    }

    #[test]
    fn antipodal_pair_of_quadric() {
        let kp = kplus_of(QUADRIC_5);
        let pair: Vec<_> = kp.iter().filter(|p| p.name == "north" || p.name == "south").cloned().collect();
        let m = build_matrix(&pair, &RoundSphere).unwrap();
        let want = -2.0 / (16.0 * PI * PI) / 4.0;
        assert_relative_eq!(m.get(0, 1), want, max_relative = 1e-12);
        assert_relative_eq!(want, -3.166e-3, max_relative = 1e-3);
        assert_eq!(m.get(0, 1), m.get(1, 0));
    }

    #[test]
    fn coincident_members_fail() {
        let kp = kplus_of("2 + x5");
        let twice = vec![kp[0].clone(), kp[0].clone()];
        assert!(matches!(build_matrix(&twice, &RoundSphere), Err(Error::PoleCoincidence { .. })));
    }

    #[test]
    fn enumerate_affine() {
        let kp = kplus_of("2 + x5");
        let f1 = enumerate_candidates(&kp, &RoundSphere, &InteractionConfig::default()).unwrap();
        assert_eq!(f1.candidates.len(), 1);
        let c = &f1.candidates[0];
        assert_relative_eq!(c.rho, 4.0 / 27.0, epsilon = 1e-12);
        assert_eq!(c.iota, 0);
        assert!(c.in_f1);
        let h1 = check_h1(&f1, 1e-9);
        assert!(h1.pass);
        assert_relative_eq!(h1.min_margin.unwrap(), 4.0 / 27.0, epsilon = 1e-12);
    }

    #[test]
    fn enumerate_quadric() {
        let kp = kplus_of(QUADRIC_5);
        let f1 = enumerate_candidates(&kp, &RoundSphere, &InteractionConfig::default()).unwrap();
        assert_eq!(f1.candidates.len(), 15);
        assert!(f1.candidates.iter().all(|c| c.in_f1 && c.sylvester_pd));
        let mut hist = std::collections::BTreeMap::new();
        for c in &f1.candidates {
            *hist.entry(c.iota).or_insert(0) += 1;
        }
        assert_eq!(hist.into_iter().collect::<Vec<_>>(), vec![(0, 2), (1, 3), (2, 4), (3, 3), (4, 2), (5, 1)]);
        assert!(f1.interlacing_violations.is_empty());
        assert!(f1.sylvester_disagreements.is_empty());
        // Sizes are nondecreasing along the canonical order.
        assert!(f1.candidates.windows(2).all(|w| w[0].members.len() <= w[1].members.len()));
        let singleton_min =
            f1.candidates.iter().filter(|c| c.members.len() == 1).map(|c| c.rho).fold(f64::INFINITY, f64::min);
        let h1 = check_h1(&f1, 1e-9);
        assert!(h1.pass && h1.pairs_only_pass);
        assert!(h1.min_margin.unwrap() <= singleton_min);
        assert!(h1.min_margin.unwrap() > 0.0);
    }

    #[test]
    fn empty_kplus_is_vacuous() {
        let f1 = enumerate_candidates(&[], &RoundSphere, &InteractionConfig::default()).unwrap();
        assert!(f1.candidates.is_empty());
        assert!(f1.h1_ok);
        assert!(check_h1(&f1, 1e-9).pass);
    }

    #[test]
    fn zero_rho_fails_h1_with_name() {
        let kp = kplus_of("2 + x5");
        let mut f1 = enumerate_candidates(&kp, &RoundSphere, &InteractionConfig::default()).unwrap();
        f1.candidates[0].rho = 0.0;
        let h1 = check_h1(&f1, 1e-9);
        assert!(!h1.pass);
        assert_eq!(h1.failing, vec![vec!["north".to_string()]]);
    }

    #[test]
    fn too_many_peaks() {
        let p = kplus_of("2 + x5").remove(0);
        let many: Vec<_> = (0..21)
            .map(|k| CriticalPoint { location: SpherePoint::new([k as f64, 1.0, 0.0, 0.0, 0.0]).unwrap(), ..p.clone() })
            .collect();
        assert!(matches!(
            enumerate_candidates(&many, &RoundSphere, &InteractionConfig::default()),
            Err(Error::TooManyPeaks { count: 21, max: 20 })
        ));
    }
}
