//! Geometry of the round unit 4-sphere in R^5 and the manifold providers
//! used to evaluate Green's functions and masses.
//!
//! The conformal Laplacian on the unit round S^4 is `-Δ + 2`. Its Green's
//! function is normalized by `L G(a, ·) = δ_a`, which gives the closed form
//! `G(a, x) = 1 / (8π² (1 - cos d(a, x)))` and the leading singularity
//! `1 / (4π² d²)` at the pole, the flat fundamental solution of `-Δ` in R^4.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec5 = [f64; 5];

/// Points closer than this are treated as coincident by the Green's function.
pub const POLE_TOL: f64 = 1e-9;
/// Largest admissible `<v, a>` for a tangent vector `v` at `a`.
pub const TANGENT_TOL: f64 = 1e-10;
/// Distance from the antipode below which `log_map` refuses to answer.
pub const CUT_LOCUS_TOL: f64 = 1e-6;
/// Zero-order coefficient of the conformal Laplacian on the unit round S^4 (R/6 with R = 12).
pub const ROUND_SCALAR_COEFF: f64 = 2.0;

pub fn dot(a: &Vec5, b: &Vec5) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &Vec5) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &Vec5, b: &Vec5) -> Vec5 {
    std::array::from_fn(|i| a[i] - b[i])
}

fn add(a: &Vec5, b: &Vec5) -> Vec5 {
    std::array::from_fn(|i| a[i] + b[i])
}

fn scale(a: &Vec5, s: f64) -> Vec5 {
    a.map(|x| x * s)
}

/// Unit vector of R^5, a point of S^4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vec5);

impl Serialize for SpherePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl SpherePoint {
    /// Projects `coords` radially onto the sphere.
    pub fn new(coords: Vec5) -> Result<Self> {
        let n = norm(&coords);
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::Config(format!("cannot project {coords:?} onto the sphere")));
        }
        Ok(SpherePoint(scale(&coords, 1.0 / n)))
    }

    /// Signed coordinate axis `sign * e_{axis+1}`.
    pub fn axis(axis: usize, sign: f64) -> Self {
        let mut c = [0.0; 5];
        c[axis] = sign.signum();
        SpherePoint(c)
    }

    pub fn north() -> Self {
        Self::axis(4, 1.0)
    }

    pub fn south() -> Self {
        Self::axis(4, -1.0)
    }

    pub fn coords(&self) -> &Vec5 {
        &self.0
    }

    pub fn antipode(&self) -> Self {
        SpherePoint(scale(&self.0, -1.0))
    }

    /// Applies an orthogonal 5x5 matrix given row-major.
    pub fn rotated(&self, q: &[[f64; 5]; 5]) -> Self {
        let c: Vec5 = std::array::from_fn(|i| dot(&q[i], &self.0));
        // Re-normalize to absorb rounding in `q`.
        SpherePoint::new(c).expect("rotation of a unit vector is nonzero")
    }

    /// Tangent projection `v - <v, a> a`.
    pub fn project_tangent(&self, v: &Vec5) -> Vec5 {
        sub(v, &scale(&self.0, dot(v, &self.0)))
    }
}

/// Great-circle distance, in `[0, π]`.
///
/// Uses `2 atan2(|a - x|, |a + x|)`, which equals `arccos <a, x>` but stays
/// accurate for nearly coincident and nearly antipodal pairs.
pub fn geodesic_distance(a: &SpherePoint, x: &SpherePoint) -> f64 {
    let d = 2.0 * norm(&sub(&a.0, &x.0)).atan2(norm(&add(&a.0, &x.0)));
    d.clamp(0.0, PI)
}

/// Green's function of `-Δ + 2` on the unit round S^4.
pub fn green_round_sphere(a: &SpherePoint, x: &SpherePoint) -> Result<f64> {
    let d = geodesic_distance(a, x);
    if d <= POLE_TOL {
        return Err(Error::PoleCoincidence { distance: d });
    }
    // 1 - cos d equals half the squared chordal distance.
    let chord2 = dot(&sub(&a.0, &x.0), &sub(&a.0, &x.0));
    Ok(1.0 / (4.0 * PI * PI * chord2))
}

/// Green's function as a function of geodesic distance.
pub fn green_radial(d: f64) -> f64 {
    1.0 / (8.0 * PI * PI * (1.0 - d.cos()))
}

/// Regular part of the round-sphere Green's function at its pole, in
/// conformal normal coordinates. Stereographic projection from the antipode
/// maps `G(a, ·)` to the flat fundamental solution, which has no constant term.
pub fn mass_round_sphere(_a: &SpherePoint) -> f64 {
    0.0
}

/// Orthonormal basis of the tangent space at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    pub base: SpherePoint,
    pub vectors: [Vec5; 4],
}

impl TangentFrame {
    /// Ambient vector with frame components `c`.
    pub fn ambient(&self, c: &[f64; 4]) -> Vec5 {
        let mut v = [0.0; 5];
        for (k, vk) in self.vectors.iter().enumerate() {
            for i in 0..5 {
                v[i] += c[k] * vk[i];
            }
        }
        v
    }

    /// Frame components of an ambient vector (tangential part only).
    pub fn components(&self, v: &Vec5) -> [f64; 4] {
        std::array::from_fn(|k| dot(&self.vectors[k], v))
    }
}

/// Deterministic frame: Gram–Schmidt on the four coordinate axes least
/// aligned with `a`, ties broken by the lower axis index.
pub fn tangent_frame(a: &SpherePoint) -> TangentFrame {
    let mut axes: Vec<usize> = (0..5).collect();
    axes.sort_by(|&i, &j| a.0[i].abs().total_cmp(&a.0[j].abs()).then(i.cmp(&j)));

    let mut basis: Vec<Vec5> = vec![a.0];
    let mut vectors = [[0.0; 5]; 4];
    for (k, &axis) in axes[..4].iter().enumerate() {
        let mut v = [0.0; 5];
        v[axis] = 1.0;
        // Two Gram–Schmidt passes keep the Gram matrix at rounding level.
        for _ in 0..2 {
            for b in &basis {
                v = sub(&v, &scale(b, dot(&v, b)));
            }
        }
        let n = norm(&v);
        v = scale(&v, 1.0 / n);
        basis.push(v);
        vectors[k] = v;
    }
    TangentFrame { base: *a, vectors }
}

/// Riemannian exponential map.
pub fn exp_map(a: &SpherePoint, v: &Vec5) -> Result<SpherePoint> {
    let inner = dot(v, &a.0);
    if inner.abs() > TANGENT_TOL {
        return Err(Error::NotTangent { inner });
    }
    let t = norm(v);
    if t < 1e-14 {
        return Ok(*a);
    }
    let c: Vec5 = std::array::from_fn(|i| t.cos() * a.0[i] + t.sin() * v[i] / t);
    SpherePoint::new(c)
}

/// Inverse of [`exp_map`] away from the cut locus.
pub fn log_map(a: &SpherePoint, x: &SpherePoint) -> Result<Vec5> {
    let d = geodesic_distance(a, x);
    if d >= PI - CUT_LOCUS_TOL {
        return Err(Error::CutLocus { distance: d });
    }
    let w = a.project_tangent(&x.0);
    let n = norm(&w);
    if n < 1e-300 {
        return Ok([0.0; 5]);
    }
    Ok(scale(&w, d / n))
}

/// Geometry provider behind the interaction matrix.
pub trait ManifoldModel: Sync {
    fn green(&self, a: &SpherePoint, x: &SpherePoint) -> Result<f64>;

    /// Regular part `A_a` of the Green's function at its pole.
    fn mass(&self, a: &SpherePoint) -> Result<f64>;

    /// Zero-order coefficient of the conformal Laplacian.
    fn scalar_coeff(&self) -> f64;

    fn distance(&self, a: &SpherePoint, x: &SpherePoint) -> f64 {
        geodesic_distance(a, x)
    }

    /// Short description embedded in reports.
    fn describe(&self) -> String;

    /// Name the provider attaches to a point, if any.
    fn point_name(&self, _a: &SpherePoint) -> Option<String> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RoundSphere;

impl ManifoldModel for RoundSphere {
    fn green(&self, a: &SpherePoint, x: &SpherePoint) -> Result<f64> {
        green_round_sphere(a, x)
    }

    fn mass(&self, a: &SpherePoint) -> Result<f64> {
        Ok(mass_round_sphere(a))
    }

    fn scalar_coeff(&self) -> f64 {
        ROUND_SCALAR_COEFF
    }

    fn describe(&self) -> String {
        "round_s4".to_string()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    points: Vec<RawPoint>,
    green: Vec<RawGreen>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    name: String,
    #[serde(default)]
    coords: Option<Vec5>,
    #[serde(rename = "A")]
    mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGreen {
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Debug, Clone)]
pub struct TablePoint {
    pub name: String,
    pub coords: Option<SpherePoint>,
    pub mass: f64,
}

/// Manifold data supplied as a table of points, pairwise Green's function
/// values and per-point masses. Only listed points can be queried.
#[derive(Debug, Clone)]
pub struct TableManifold {
    points: Vec<TablePoint>,
    green: HashMap<(usize, usize), f64>,
    source: String,
}

/// Tolerance used to match a query point against tabulated coordinates.
pub const TABLE_MATCH_TOL: f64 = 1e-6;
/// Largest accepted asymmetry `|G(i,j) - G(j,i)|`.
pub const TABLE_SYMMETRY_TOL: f64 = 1e-9;

impl TableManifold {
    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        let raw: RawTable = serde_json::from_str(text).map_err(|e| Error::Schema {
            location: format!("{source}:{}:{}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let schema = |location: String, message: String| Error::Schema { location, message };

        let mut points = Vec::with_capacity(raw.points.len());
        for (k, p) in raw.points.into_iter().enumerate() {
            if !p.mass.is_finite() {
                return Err(schema(format!("points[{k}].A"), "mass must be finite".into()));
            }
            if points.iter().any(|q: &TablePoint| q.name == p.name) {
                return Err(schema(format!("points[{k}].name"), format!("duplicate name {}", p.name)));
            }
            let coords = match p.coords {
                Some(c) => {
                    let n = norm(&c);
                    if (n - 1.0).abs() > 1e-9 {
                        return Err(schema(format!("points[{k}].coords"), format!("not a unit vector (norm {n})")));
                    }
                    Some(SpherePoint::new(c)?)
                }
                None => None,
            };
            points.push(TablePoint { name: p.name, coords, mass: p.mass });
        }

        let mut green = HashMap::new();
        for (k, g) in raw.green.iter().enumerate() {
            let loc = format!("green[{k}]");
            if g.i >= points.len() || g.j >= points.len() {
                return Err(schema(loc, format!("index ({}, {}) out of range", g.i, g.j)));
            }
            if g.i == g.j {
                return Err(schema(loc, "diagonal entries are not allowed".into()));
            }
            if !(g.value.is_finite() && g.value > 0.0) {
                return Err(schema(loc, format!("value {} is not positive", g.value)));
            }
            if green.insert((g.i, g.j), g.value).is_some() {
                return Err(schema(loc, format!("duplicate entry ({}, {})", g.i, g.j)));
            }
        }
        for (&(i, j), &v) in &green {
            match green.get(&(j, i)) {
                None => {
                    return Err(schema("green".into(), format!("entry ({i}, {j}) has no symmetric entry ({j}, {i})")))
                }
                Some(&w) if (v - w).abs() > TABLE_SYMMETRY_TOL => {
                    return Err(schema("green".into(), format!("G({i},{j}) = {v} differs from G({j},{i}) = {w}")))
                }
                _ => {}
            }
        }
        Ok(TableManifold { points, green, source: source.to_string() })
    }

    pub fn points(&self) -> &[TablePoint] {
        &self.points
    }

    pub fn index_of_name(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p.name == name)
    }

    pub fn green_by_index(&self, i: usize, j: usize) -> Result<f64> {
        self.green
            .get(&(i, j))
            .copied()
            .ok_or_else(|| Error::NotTabulated(format!("pair ({}, {})", self.points[i].name, self.points[j].name)))
    }

    fn locate(&self, a: &SpherePoint) -> Result<usize> {
        self.points
            .iter()
            .position(|p| p.coords.is_some_and(|c| geodesic_distance(&c, a) <= TABLE_MATCH_TOL))
            .ok_or_else(|| Error::NotTabulated(format!("{:?}", a.coords())))
    }
}

impl ManifoldModel for TableManifold {
    fn green(&self, a: &SpherePoint, x: &SpherePoint) -> Result<f64> {
        let (i, j) = (self.locate(a)?, self.locate(x)?);
        if i == j {
            return Err(Error::PoleCoincidence { distance: geodesic_distance(a, x) });
        }
        self.green_by_index(i, j)
    }

    fn mass(&self, a: &SpherePoint) -> Result<f64> {
        Ok(self.points[self.locate(a)?].mass)
    }

    fn scalar_coeff(&self) -> f64 {
        ROUND_SCALAR_COEFF
    }

    fn describe(&self) -> String {
        format!("table:{}", self.source)
    }

    fn point_name(&self, a: &SpherePoint) -> Option<String> {
        self.locate(a).ok().map(|i| self.points[i].name.clone())
    }
}
