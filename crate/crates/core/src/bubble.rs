//! Standard bubbles `δ_{a,λ}(x) = c0 λ / (1 + λ²|x - a|²)` on flat R^4,
//! their interaction coefficient, and the two expansion constants.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Normalization making `-Δδ = δ³` on R^4.
pub const C0: f64 = 2.0 * SQRT_2;
/// Volume of the unit 3-sphere.
pub const OMEGA3: f64 = 2.0 * PI * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bubble {
    pub center: [f64; 4],
    pub lambda: f64,
    pub c0: f64,
}

impl Bubble {
    pub fn new(center: [f64; 4], lambda: f64) -> Self {
        assert!(lambda > 0.0, "bubble scale must be positive");
        Bubble { center, lambda, c0: C0 }
    }

    pub fn value(&self, x: &[f64; 4]) -> f64 {
        bubble_value(self, x)
    }

    /// Value as a function of `r = |x - a|`.
    pub fn profile(&self, r: f64) -> f64 {
        self.c0 * self.lambda / (1.0 + self.lambda * self.lambda * r * r)
    }

    pub fn radius(&self, x: &[f64; 4]) -> f64 {
        x.iter().zip(&self.center).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    }
}

pub fn bubble_value(b: &Bubble, x: &[f64; 4]) -> f64 {
    b.profile(b.radius(x))
}

/// `-Δu - u³` for `u = c / (1 + r²)`, in closed form.
pub fn radial_residual(c: f64, r: f64) -> f64 {
    (8.0 * c - c * c * c) / (1.0 + r * r).powi(3)
}

// twofloat's own division is only correct to f64 precision, so reciprocals
// take one Newton step from the f64 estimate instead.
fn recip(z: TwoFloat) -> TwoFloat {
    let q0 = TwoFloat::from(1.0 / z.hi());
    q0 + q0 * (TwoFloat::from(1.0) - z * q0)
}

fn profile_dd(c0: f64, lambda: f64, r: TwoFloat) -> TwoFloat {
    let lr = r * lambda;
    recip(lr * lr + 1.0) * (c0 * lambda)
}

/// `|-Δδ - δ³| / δ³` at distance `r` from the center, with the radial
/// Laplacian `u'' + 3u'/r` replaced by fourth-order central differences.
///
/// The stencil runs in double-double arithmetic: far from the center the
/// dominant `1/r²` part of `δ` is harmonic and cancels in the Laplacian,
/// leaving a result many orders of magnitude below the individual terms.
pub fn fd_relative_residual(b: &Bubble, r: f64) -> f64 {
    let h = 1e-4 * (r + 1.0 / b.lambda);
    let u = |s: f64| profile_dd(b.c0, b.lambda, TwoFloat::from(r) + s * h);
    let (m2, m1, z, p1, p2) = (u(-2.0), u(-1.0), u(0.0), u(1.0), u(2.0));
    let h = TwoFloat::from(h);
    let second = (-(m2 + p2) + (m1 + p1) * 16.0 - z * 30.0) * recip(h * h * 12.0);
    let lap = if r == 0.0 {
        // u is even in r, so Δu(0) = 4u''(0).
        second * 4.0
    } else {
        let first = (m2 - p2 + (p1 - m1) * 8.0) * recip(h * 12.0);
        second + first * 3.0 * recip(TwoFloat::from(r))
    };
    let cube = z * z * z;
    (f64::from(-lap - cube) / f64::from(cube)).abs()
}

/// Finds the `c` for which `c / (1 + r²)` solves `u'' + 3u'/r + u³ = 0` by
/// shooting: integrate from `u(0) = c, u'(0) = 0` and match `u(1) = c / 2`.
pub fn derive_c0() -> f64 {
    let miss = |c: f64| shoot(c, 1.0) - 0.5 * c;
    let (mut lo, mut hi) = (2.0, 4.0);
    let mut f_lo = miss(lo);
    debug_assert!(f_lo * miss(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = miss(mid);
        if f_mid == 0.0 || hi - lo < 1e-14 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `u(r_end)` for the radial solution with `u(0) = c`, by classical RK4
/// started from the series `u ≈ c - c³r²/8` near the origin.
pub fn shoot(c: f64, r_end: f64) -> f64 {
    let r0 = 1e-4;
    let steps = 20_000;
    let h = (r_end - r0) / steps as f64;
    let rhs = |r: f64, y: [f64; 2]| [y[1], -3.0 * y[1] / r - y[0].powi(3)];
    let c3 = c * c * c;
    let mut y = [c - c3 * r0 * r0 / 8.0, -c3 * r0 / 4.0];
    let mut r = r0;
    for _ in 0..steps {
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
    }
    y[0]
}

/// `(λi/λj + λj/λi + λiλj d²)⁻¹`.
pub fn epsilon_ij(lambda_i: f64, lambda_j: f64, d: f64) -> f64 {
    1.0 / (lambda_i / lambda_j + lambda_j / lambda_i + lambda_i * lambda_j * d * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticConstants {
    pub s4: f64,
    pub c2: f64,
    pub omega3: f64,
    pub c0: f64,
}

impl AnalyticConstants {
    pub fn closed_form() -> Self {
        AnalyticConstants { s4: 32.0 * PI * PI / 3.0, c2: 32.0 * PI * PI, omega3: OMEGA3, c0: C0 }
    }
}

/// `∫_0^∞ r³ (1 + r²)^{-q} dr` on `[0, 1)` via `r = t / (1 - t)`.
pub fn radial_moment(q: i32, rel_tol: f64) -> Result<f64> {
    let g = |t: f64| {
        let s = 1.0 - t;
        let r = t / s;
        r.powi(3) * (1.0 + r * r).powi(-q) / (s * s)
    };
    // The moments are O(0.1), so this absolute target is a relative one.
    let target = 0.01 * rel_tol;
    let out = quadrature::double_exponential::integrate(g, 0.0, 1.0, target);
    if !(out.integral.is_finite() && out.error_estimate <= target) {
        return Err(Error::QuadratureNotConverged { estimate: out.integral, error: out.error_estimate });
    }
    Ok(out.integral)
}

/// `S4 = c0⁴ ω3 ∫ r³(1+r²)⁻⁴` and `c2 = c0⁴ ω3 ∫ r³(1+r²)⁻³`.
pub fn compute_constants(cfg: &QuadratureConfig) -> Result<AnalyticConstants> {
    let scale = C0.powi(4) * OMEGA3;
    Ok(AnalyticConstants {
        s4: scale * radial_moment(4, cfg.rel_tol)?,
        c2: scale * radial_moment(3, cfg.rel_tol)?,
        omega3: OMEGA3,
        c0: C0,
    })
}
