//! Closed-form scalar fields on S^4 given over the ambient coordinates, with
//! structurally derived gradients and Hessians.

mod expr;
mod parser;

pub use expr::Expr;

use crate::error::{Error, Result};
use crate::geometry::{dot, exp_map, tangent_frame, SpherePoint, TangentFrame, Vec5};
use crate::sampling::sphere_points;

/// Parsed expression together with its first and second partial derivatives.
#[derive(Debug, Clone)]
pub struct ScalarField {
    source: String,
    expr: Expr,
    grad: [Expr; 5],
    // Upper triangle, row-major: (0,0), (0,1), ..., (4,4).
    hess: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmbientDerivatives {
    pub value: f64,
    pub grad: Vec5,
    pub hess: [[f64; 5]; 5],
}

/// Derivatives along the sphere expressed in a tangent frame.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicDerivatives {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
    pub laplace_beltrami: f64,
}

pub fn parse_field(src: &str) -> Result<ScalarField> {
    ScalarField::from_expr(parser::parse_expr(src)?, src.to_string())
}

impl ScalarField {
    fn from_expr(expr: Expr, source: String) -> Result<Self> {
        let grad: [Expr; 5] = std::array::from_fn(|k| expr.derivative(k));
        let mut hess = Vec::with_capacity(15);
        for i in 0..5 {
            for j in i..5 {
                hess.push(grad[i].derivative(j));
            }
        }
        Ok(ScalarField { source, expr, grad, hess })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// True when every second partial folds to zero, i.e. K is the
    /// restriction of an affine function of the ambient coordinates.
    pub fn is_affine(&self) -> bool {
        self.hess.iter().all(|h| matches!(h, Expr::Const(c) if *c == 0.0))
    }

    /// `c * K`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let e = Expr::mul(Expr::Const(c), self.expr.clone());
        let src = format!("{c:?} * ({})", self.source);
        Self::from_expr(e, src)
    }

    /// `x ↦ K(Qᵀ x)` for a 5x5 matrix `q` given row-major, so that critical
    /// points of the result are `Q y` for critical points `y` of `K`.
    pub fn rotated(&self, q: &[[f64; 5]; 5]) -> Result<Self> {
        let subs: [Expr; 5] = std::array::from_fn(|i| {
            (0..5).fold(Expr::Const(0.0), |acc, j| Expr::add(acc, Expr::mul(Expr::Const(q[j][i]), Expr::Var(j))))
        });
        let e = self.expr.substitute(&subs);
        let src = e.to_string();
        Self::from_expr(e, src)
    }

    pub fn value(&self, p: &Vec5) -> Result<f64> {
        finite(self.expr.eval(p)?, "value")
    }

    pub fn ambient_gradient(&self, p: &Vec5) -> Result<Vec5> {
        let mut g = [0.0; 5];
        for (k, e) in self.grad.iter().enumerate() {
            g[k] = finite(e.eval(p)?, "gradient")?;
        }
        Ok(g)
    }

    pub fn ambient_derivatives(&self, p: &Vec5) -> Result<AmbientDerivatives> {
        let value = self.value(p)?;
        let grad = self.ambient_gradient(p)?;
        let mut hess = [[0.0; 5]; 5];
        let mut k = 0;
        for i in 0..5 {
            for j in i..5 {
                let h = finite(self.hess[k].eval(p)?, "Hessian")?;
                hess[i][j] = h;
                hess[j][i] = h;
                k += 1;
            }
        }
        Ok(AmbientDerivatives { value, grad, hess })
    }

    /// Riemannian gradient as an ambient tangent vector at `a`.
    pub fn projected_gradient(&self, a: &SpherePoint) -> Result<Vec5> {
        Ok(a.project_tangent(&self.ambient_gradient(a.coords())?))
    }

    /// Intrinsic gradient and Hessian on the unit sphere. The Hessian is the
    /// ambient Hessian restricted to the tangent space, corrected by the
    /// second fundamental form: `H(v_i, v_j) - <∇f, a> δ_ij`.
    pub fn intrinsic_derivatives(&self, a: &SpherePoint, frame: &TangentFrame) -> Result<IntrinsicDerivatives> {
        let amb = self.ambient_derivatives(a.coords())?;
        let radial = dot(&amb.grad, a.coords());
        let grad = frame.components(&amb.grad);
        let mut hess = [[0.0; 4]; 4];
        for i in 0..4 {
            let hv: Vec5 = std::array::from_fn(|r| dot(&amb.hess[r], &frame.vectors[i]));
            for j in 0..=i {
                let mut h = dot(&hv, &frame.vectors[j]);
                if i == j {
                    h -= radial;
                }
                hess[i][j] = h;
                hess[j][i] = h;
            }
        }
        let laplace_beltrami = (0..4).map(|i| hess[i][i]).sum();
        Ok(IntrinsicDerivatives { value: amb.value, grad, hess, laplace_beltrami })
    }

    pub fn laplace_beltrami(&self, a: &SpherePoint) -> Result<f64> {
        Ok(self.intrinsic_derivatives(a, &tangent_frame(a))?.laplace_beltrami)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::EvaluationDomain(format!("non-finite {what}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub min_value: f64,
    pub location: SpherePoint,
    pub samples: usize,
}

/// Number of worst samples that get polished by local descent.
pub const POSITIVITY_POLISH: usize = 32;

/// Estimates `min K` over the sphere: a low-discrepancy sample followed by
/// Riemannian gradient descent from the worst samples.
pub fn validate_positivity(f: &ScalarField, samples: usize) -> Result<PositivityReport> {
    let samples = samples.max(1);
    let mut scored: Vec<(f64, SpherePoint)> = Vec::with_capacity(samples);
    for p in sphere_points(samples, 0) {
        scored.push((f.value(p.coords())?, p));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = scored[0];
    for &(v0, p0) in scored.iter().take(POSITIVITY_POLISH) {
        let (v, p) = descend(f, v0, p0)?;
        if v < best.0 {
            best = (v, p);
        }
    }
    if best.0 <= 0.0 {
        return Err(Error::NotPositive { min: best.0, witness: *best.1.coords() });
    }
    Ok(PositivityReport { min_value: best.0, location: best.1, samples })
}

fn descend(f: &ScalarField, mut v: f64, mut p: SpherePoint) -> Result<(f64, SpherePoint)> {
    for _ in 0..500 {
        let g = f.projected_gradient(&p)?;
        let gn2 = dot(&g, &g);
        if gn2.sqrt() < 1e-12 {
            break;
        }
        let mut step = 1.0;
        let mut moved = false;
        while step > 1e-12 {
            let trial = exp_map(&p, &g.map(|x| -step * x))?;
            let tv = f.value(trial.coords())?;
            if tv <= v - 1e-4 * step * gn2 {
                p = trial;
                v = tv;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((v, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic_distance;
    use approx::assert_relative_eq;

    #[test]
    fn parse_examples() {
        let f = parse_field("2 + x5").unwrap();
        assert_eq!(f.value(SpherePoint::north().coords()).unwrap(), 3.0);
        let f = parse_field("x5^2 + 0.5*x4^2").unwrap();
        assert_eq!(f.value(SpherePoint::axis(3, 1.0).coords()).unwrap(), 0.5);
        assert!(matches!(parse_field("2 + y1"), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn ambient_examples() {
        let f = parse_field("x5").unwrap();
        let d = f.ambient_derivatives(SpherePoint::north().coords()).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.grad, [0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.hess, [[0.0; 5]; 5]);

        let f = parse_field("x4*x5").unwrap();
        let d = f.ambient_derivatives(&[0.3, -0.2, 0.1, 0.7, 0.4]).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if (i, j) == (3, 4) || (i, j) == (4, 3) { 1.0 } else { 0.0 };
                assert_eq!(d.hess[i][j], want);
            }
        }
    }

    #[test]
    fn intrinsic_coordinate_function_at_north() {
        let f = parse_field("x5").unwrap();
        let n = SpherePoint::north();
        let d = f.intrinsic_derivatives(&n, &tangent_frame(&n)).unwrap();
        assert_eq!(d.grad, [0.0; 4]);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d.hess[i][j], if i == j { -1.0 } else { 0.0 });
            }
        }
        assert_eq!(d.laplace_beltrami, -4.0);
    }

    #[test]
    fn intrinsic_constant_and_square() {
        let n = SpherePoint::north();
        let d = parse_field("3").unwrap().intrinsic_derivatives(&n, &tangent_frame(&n)).unwrap();
        assert_eq!((d.grad, d.hess, d.laplace_beltrami), ([0.0; 4], [[0.0; 4]; 4], 0.0));
        assert_eq!(parse_field("x5^2").unwrap().laplace_beltrami(&n).unwrap(), -8.0);
    }

    #[test]
    fn finite_differences_along_great_circle() {
        // Second derivative of t ↦ f(exp_a(t v)) at 0 equals the intrinsic Hessian in direction v.
        let f = parse_field("x5^2 + 0.5*x4^2 + x1*x3 + exp(x2)").unwrap();
        let a = SpherePoint::new([0.2, -0.4, 0.1, 0.5, 0.7]).unwrap();
        let frame = tangent_frame(&a);
        let d = f.intrinsic_derivatives(&a, &frame).unwrap();
        let h = 1e-4;
        for k in 0..4 {
            let v = frame.vectors[k];
            let at = |t: f64| f.value(exp_map(&a, &v.map(|x| x * t)).unwrap().coords()).unwrap();
            let second = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
            let first = (at(h) - at(-h)) / (2.0 * h);
            assert_relative_eq!(second, d.hess[k][k], epsilon = 1e-6);
            assert_relative_eq!(first, d.grad[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn spherical_harmonics_are_eigenfunctions() {
        // Restrictions of harmonic homogeneous polynomials of degree l satisfy Δf = -l(l+3)f.
        let cases = [("x1", 1), ("x2*x5", 2), ("x1^2 - x3^2", 2), ("x1*x2*x4", 3), ("x5^3 - 3*x5*x1^2", 3)];
        let a = SpherePoint::new([0.3, -0.5, 0.4, 0.2, 0.6]).unwrap();
        for (src, l) in cases {
            let f = parse_field(src).unwrap();
            let want = -((l * (l + 3)) as f64) * f.value(a.coords()).unwrap();
            assert_relative_eq!(f.laplace_beltrami(&a).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        // Sum of second derivatives along the geodesics of an orthonormal frame.
        let f = parse_field("3 + x5^2 + 0.5*x4^2 + x1*x3 + sin(x2)").unwrap();
        let a = SpherePoint::new([0.1, 0.6, -0.3, 0.5, -0.4]).unwrap();
        let frame = tangent_frame(&a);
        let h = 1e-4;
        let mut lap = 0.0;
        for v in frame.vectors {
            let at = |t: f64| f.value(exp_map(&a, &v.map(|x| x * t)).unwrap().coords()).unwrap();
            lap += (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
        }
        assert_relative_eq!(f.laplace_beltrami(&a).unwrap(), lap, epsilon = 1e-6);
    }

    #[test]
    fn scaled_and_rotated_fields() {
        let f = parse_field("2 + x5").unwrap();
        let g = f.scaled(5.0).unwrap();
        assert_eq!(g.value(SpherePoint::north().coords()).unwrap(), 15.0);
        // Swap x1 and x5.
        let mut q = [[0.0; 5]; 5];
        q[0][4] = 1.0;
        q[4][0] = 1.0;
        for i in 1..4 {
            q[i][i] = 1.0;
        }
        let r = f.rotated(&q).unwrap();
        assert_eq!(r.value(SpherePoint::axis(0, 1.0).coords()).unwrap(), 3.0);
        assert!(parse_field(r.source()).is_ok());
    }

    #[test]
    fn positivity_affine() {
        let r = validate_positivity(&parse_field("2 + x5").unwrap(), 2048).unwrap();
        assert_relative_eq!(r.min_value, 1.0, epsilon = 1e-10);
        assert!(geodesic_distance(&r.location, &SpherePoint::south()) < 1e-4);
    }

    #[test]
    fn positivity_failure_and_constant() {
        match validate_positivity(&parse_field("x5").unwrap(), 2048) {
            Err(Error::NotPositive { min, witness }) => {
                assert_relative_eq!(min, -1.0, epsilon = 1e-10);
                assert!(witness[4] < -0.999);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(validate_positivity(&parse_field("3").unwrap(), 16).unwrap().min_value, 3.0);
    }
}
