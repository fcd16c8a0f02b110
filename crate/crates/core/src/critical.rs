//! Multi-start search for the critical points of K on S^4, Morse
//! classification and the nondegeneracy hypothesis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{exp_map, geodesic_distance, tangent_frame, ManifoldModel, SpherePoint};
use crate::linalg::{jacobi_eigen, SymMatrix};
use crate::sampling::sphere_points;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub starts: usize,
    /// Taken from the run configuration rather than the tolerance block.
    #[serde(skip)]
    pub seed: u64,
    pub grad_tol: f64,
    pub merge_tol: f64,
    pub nondegeneracy_tol: f64,
    pub beta_tol: f64,
    pub max_newton_iters: usize,
    /// Each restart doubles the number of starts and bumps the seed.
    pub max_restarts: usize,
    /// Longest geodesic step a single Newton iteration may take.
    pub max_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 4096,
            seed: 0,
            grad_tol: 1e-9,
            merge_tol: 1e-5,
            nondegeneracy_tol: 1e-7,
            beta_tol: 1e-9,
            max_newton_iters: 100,
            max_restarts: 3,
            max_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub name: String,
    pub location: SpherePoint,
    pub k_value: f64,
    pub morse_index: usize,
    pub laplacian: f64,
    pub mass: f64,
    /// `-ΔK(y) / (3 K(y)) - 2 A_y`.
    pub beta: f64,
    /// Intrinsic Hessian eigenvalues, ascending.
    pub hess_eigenvalues: [f64; 4],
    pub grad_norm: f64,
}

impl CriticalPoint {
    /// Evaluates every classification field of `K` at `location`.
    pub fn classify(f: &ScalarField, model: &dyn ManifoldModel, location: SpherePoint, name: String) -> Result<Self> {
        let frame = tangent_frame(&location);
        let d = f.intrinsic_derivatives(&location, &frame)?;
        let hess = SymMatrix::from_upper(4, |i, j| d.hess[i][j]);
        let eig = jacobi_eigen(&hess);
        let hess_eigenvalues: [f64; 4] = std::array::from_fn(|k| eig.values[k]);
        let mass = model.mass(&location)?;
        let beta = -d.laplace_beltrami / (3.0 * d.value) - 2.0 * mass;
        Ok(CriticalPoint {
            name,
            location,
            k_value: d.value,
            morse_index: hess_eigenvalues.iter().filter(|&&l| l < 0.0).count(),
            laplacian: d.laplace_beltrami,
            mass,
            beta,
            hess_eigenvalues,
            grad_norm: d.grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        })
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.hess_eigenvalues.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSet {
    /// Descending `k_value`, ties by lexicographic coordinates.
    pub points: Vec<CriticalPoint>,
    /// Indices into `points` with positive beta.
    pub kplus_indices: Vec<usize>,
    /// `Σ (-1)^m` over `points`.
    pub euler_sum: i64,
    pub starts_used: usize,
    pub restarts: usize,
}

impl CriticalSet {
    /// Wraps an explicit list of points, applying the canonical ordering.
    pub fn from_points(mut points: Vec<CriticalPoint>) -> Self {
        canonical_sort(&mut points);
        let kplus_indices = (0..points.len()).filter(|&i| points[i].beta > 0.0).collect();
        let euler_sum = points.iter().map(|p| sign(p.morse_index)).sum();
        CriticalSet { points, kplus_indices, euler_sum, starts_used: 0, restarts: 0 }
    }

    pub fn find(&self, name: &str) -> Option<&CriticalPoint> {
        self.points.iter().find(|p| p.name == name)
    }
}

fn sign(m: usize) -> i64 {
    if m.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

const ORDER_QUANTUM: f64 = 1e-9;

fn order_key(p: &CriticalPoint) -> (i64, [i64; 5]) {
    let q = |x: f64| (x / ORDER_QUANTUM).round() as i64;
    (-q(p.k_value), p.location.coords().map(q))
}

fn canonical_sort(points: &mut [CriticalPoint]) {
    points.sort_by_key(order_key);
}

/// Display name of a critical point: the provider's name when it has one,
/// `north`/`south` for `±e5`, `+eI`/`-eI` for other coordinate axes, and
/// `yN` (position in canonical order, one based) otherwise.
pub fn point_label(model: &dyn ManifoldModel, p: &SpherePoint, position: usize) -> String {
    if let Some(name) = model.point_name(p) {
        return name;
    }
    for axis in 0..5 {
        for sign in [1.0, -1.0] {
            if geodesic_distance(p, &SpherePoint::axis(axis, sign)) < 1e-6 {
                return match (axis, sign > 0.0) {
                    (4, true) => "north".to_string(),
                    (4, false) => "south".to_string(),
                    (_, true) => format!("+e{}", axis + 1),
                    (_, false) => format!("-e{}", axis + 1),
                };
            }
        }
    }
    format!("y{}", position + 1)
}

/// Damped Newton iteration for `∇K = 0` in normal coordinates, retracting
/// by the exponential map. Near-singular Hessians fall back to a gradient
/// step. Returns `None` when the iteration does not converge.
fn newton(f: &ScalarField, start: SpherePoint, cfg: &SearchConfig) -> Option<SpherePoint> {
    let mut p = start;
    for _ in 0..=cfg.max_newton_iters {
        let frame = tangent_frame(&p);
        let d = f.intrinsic_derivatives(&p, &frame).ok()?;
        let gnorm = d.grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !gnorm.is_finite() {
            return None;
        }
        if gnorm < cfg.grad_tol {
            return Some(p);
        }
        let eig = jacobi_eigen(&SymMatrix::from_upper(4, |i, j| d.hess[i][j]));
        let scale = eig.values.iter().map(|l| l.abs()).fold(1.0, f64::max);
        let singular = eig.values.iter().any(|l| l.abs() <= 1e-12 * scale);

        let mut step = [0.0; 4];
        if singular {
            step = d.grad.map(|g| -g);
        } else {
            for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
                let c = (0..4).map(|i| v[i] * d.grad[i]).sum::<f64>() / lambda;
                for i in 0..4 {
                    step[i] -= c * v[i];
                }
            }
        }
        let len = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        if len > cfg.max_step {
            step = step.map(|s| s * cfg.max_step / len);
        }
        p = exp_map(&p, &frame.ambient(&step)).ok()?;
    }
    None
}

fn converge_all(f: &ScalarField, starts: &[SpherePoint], cfg: &SearchConfig) -> Vec<SpherePoint> {
    starts.par_iter().map(|&s| newton(f, s, cfg)).collect::<Vec<_>>().into_iter().flatten().collect()
}

fn merge_into(unique: &mut Vec<SpherePoint>, found: Vec<SpherePoint>, tol: f64) {
    for p in found {
        if !unique.iter().any(|q| geodesic_distance(q, &p) < tol) {
            unique.push(p);
        }
    }
}

/// Locates the critical points of `f` and classifies them.
///
/// Completeness is only heuristic: the alternating index sum must equal
/// `χ(S^4) = 2`, otherwise the search is repeated with more starts. A
/// cancelling pair of missed critical points is not detectable.
pub fn find_critical_points(f: &ScalarField, model: &dyn ManifoldModel, cfg: &SearchConfig) -> Result<CriticalSet> {
    if cfg.starts == 0 {
        return Err(Error::Config("starts must be positive".into()));
    }
    let mut unique = Vec::new();
    let mut starts_used = 0;
    let mut restarts = 0;
    loop {
        let count = cfg.starts << restarts;
        let starts = sphere_points(count, cfg.seed.wrapping_add(restarts as u64));
        starts_used += count;
        merge_into(&mut unique, converge_all(f, &starts, cfg), cfg.merge_tol);

        let mut points = Vec::with_capacity(unique.len());
        for &p in &unique {
            let cp = CriticalPoint::classify(f, model, p, String::new())?;
            if cp.min_abs_eigenvalue() <= cfg.nondegeneracy_tol {
                return Err(Error::DegenerateCriticalPoint {
                    location: *p.coords(),
                    eigenvalue: cp.min_abs_eigenvalue(),
                });
            }
            points.push(cp);
        }
        let mut set = CriticalSet::from_points(points);
        if set.euler_sum == 2 {
            for i in 0..set.points.len() {
                let label = point_label(model, &set.points[i].location, i);
                set.points[i].name = label;
            }
            set.starts_used = starts_used;
            set.restarts = restarts;
            return Ok(set);
        }
        if restarts >= cfg.max_restarts {
            return Err(Error::IncompleteSearch { euler_sum: set.euler_sum, found: set.points.len() });
        }
        restarts += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum H0Clause {
    DegenerateHessian,
    VanishingBeta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H0Violation {
    pub point: String,
    pub clause: H0Clause,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H0Report {
    pub pass: bool,
    /// Smallest `|Hessian eigenvalue|` over all points.
    pub min_abs_eigenvalue: f64,
    pub min_abs_beta: f64,
    pub violations: Vec<H0Violation>,
}

/// Checks nondegeneracy and `beta != 0` at every critical point.
pub fn verify_h0(cs: &CriticalSet, cfg: &SearchConfig) -> H0Report {
    let mut violations = Vec::new();
    let mut min_abs_eigenvalue = f64::INFINITY;
    let mut min_abs_beta = f64::INFINITY;
    for p in &cs.points {
        let e = p.min_abs_eigenvalue();
        min_abs_eigenvalue = min_abs_eigenvalue.min(e);
        min_abs_beta = min_abs_beta.min(p.beta.abs());
        if e <= cfg.nondegeneracy_tol {
            violations.push(H0Violation {
                point: p.name.clone(),
                clause: H0Clause::DegenerateHessian,
                value: e,
                tolerance: cfg.nondegeneracy_tol,
            });
        }
        if p.beta.abs() <= cfg.beta_tol {
            violations.push(H0Violation {
                point: p.name.clone(),
                clause: H0Clause::VanishingBeta,
                value: p.beta,
                tolerance: cfg.beta_tol,
            });
        }
    }
    H0Report { pass: violations.is_empty(), min_abs_eigenvalue, min_abs_beta, violations }
}

/// Critical points with positive beta, in canonical order.
pub fn kplus(cs: &CriticalSet) -> Vec<CriticalPoint> {
    cs.kplus_indices.iter().map(|&i| cs.points[i].clone()).collect()
}
