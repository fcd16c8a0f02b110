//! A finite-dimensional model of the concentration dynamics near a
//! configuration of critical points.
//!
//! The state holds one point `a_i`, inverse scale `s_i = 1/λ_i` and weight
//! `α_i` per bubble, evolving by
//!
//! ```text
//! ds/dt    = -M(a) s
//! da_i/dt  = s_i P_{a_i} ∇K(a_i)
//! dα_i/dt  = -(α_i² K(a_i) - mean_j α_j² K(a_j)) α_i
//! ```
//!
//! so the linearization at the critical points is `ds/dt = -M s`. These are
//! model dynamics chosen for that property, not a reduction of the
//! variational flow.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::critical::CriticalPoint;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::{geodesic_distance, norm, ManifoldModel, SpherePoint};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    /// Local error tolerance per accepted step.
    pub local_tol: f64,
    pub initial_dt: f64,
    pub min_dt: f64,
    pub max_dt: f64,
    pub horizon: f64,
    pub max_steps: usize,
    /// Concentration when `|s| < concentrate_ratio |s0|`.
    pub concentrate_ratio: f64,
    /// Escape when `|s| > escape_ratio |s0|`.
    pub escape_ratio: f64,
    /// Escape when a point moves farther than this from its start.
    pub basin_radius: f64,
    /// Allowed band for `α_i / α_i*` around the balanced weights.
    pub weight_band: [f64; 2],
    pub initial_inv_scale: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            local_tol: 1e-8,
            initial_dt: 1e-2,
            min_dt: 1e-12,
            max_dt: 10.0,
            horizon: 2000.0,
            max_steps: 1_000_000,
            concentrate_ratio: 1e-6,
            escape_ratio: 10.0,
            basin_radius: 0.5,
            weight_band: [0.1, 10.0],
            initial_inv_scale: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub points: Vec<SpherePoint>,
    pub inv_scales: Vec<f64>,
    pub weights: Vec<f64>,
    pub t: f64,
}

impl FlowState {
    /// Bubbles sitting at `members` with common inverse scale `s0` and
    /// balanced weights `1/sqrt(K)`.
    pub fn at_points(members: &[CriticalPoint], s0: f64) -> Self {
        FlowState {
            points: members.iter().map(|m| m.location).collect(),
            inv_scales: vec![s0; members.len()],
            weights: members.iter().map(|m| 1.0 / m.k_value.sqrt()).collect(),
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn inv_scale_norm(&self) -> f64 {
        self.inv_scales.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    fn pack(&self) -> Vec<f64> {
        let mut y = self.inv_scales.clone();
        for p in &self.points {
            y.extend_from_slice(p.coords());
        }
        y.extend_from_slice(&self.weights);
        y
    }

    fn unpack(y: &[f64], p: usize, t: f64) -> Result<Self> {
        let points =
            (0..p).map(|i| SpherePoint::new(std::array::from_fn(|k| y[p + 5 * i + k]))).collect::<Result<Vec<_>>>()?;
        Ok(FlowState { points, inv_scales: y[..p].to_vec(), weights: y[6 * p..].to_vec(), t })
    }
}

/// How the interaction matrix and curvature values are obtained.
pub enum Dynamics<'a> {
    /// Points held fixed, constant matrix and curvature values.
    Frozen { matrix: SymMatrix, k_values: Vec<f64> },
    /// Points move along the projected gradient and the matrix is
    /// re-evaluated at the current points.
    Coupled { field: &'a ScalarField, model: &'a dyn ManifoldModel },
}

impl Dynamics<'_> {
    pub fn frozen_at(members: &[CriticalPoint], model: &dyn ManifoldModel) -> Result<Dynamics<'static>> {
        Ok(Dynamics::Frozen {
            matrix: crate::interaction::build_matrix(members, model)?,
            k_values: members.iter().map(|m| m.k_value).collect(),
        })
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self, Dynamics::Frozen { .. })
    }

    /// Interaction matrix at `points`.
    pub fn matrix_at(&self, points: &[SpherePoint]) -> Result<SymMatrix> {
        match self {
            Dynamics::Frozen { matrix, .. } => Ok(matrix.clone()),
            Dynamics::Coupled { field, model } => {
                let k = self.k_values(points)?;
                let mut m = SymMatrix::zeros(points.len());
                for (i, a) in points.iter().enumerate() {
                    let beta = -field.laplace_beltrami(a)? / (3.0 * k[i]) - 2.0 * model.mass(a)?;
                    m.set(i, i, beta / k[i]);
                    for j in i + 1..points.len() {
                        let g = model.green(a, &points[j])?;
                        m.set(i, j, -2.0 * g / (k[i] * k[j]).sqrt());
                    }
                }
                Ok(m)
            }
        }
    }

    fn k_values(&self, points: &[SpherePoint]) -> Result<Vec<f64>> {
        match self {
            Dynamics::Frozen { k_values, .. } => Ok(k_values.clone()),
            Dynamics::Coupled { field, .. } => points.iter().map(|a| field.value(a.coords())).collect(),
        }
    }

    fn rhs(&self, y: &[f64], p: usize) -> Result<Vec<f64>> {
        // Stage states need not lie on the sphere; normalize for evaluation.
        let points =
            (0..p).map(|i| SpherePoint::new(std::array::from_fn(|k| y[p + 5 * i + k]))).collect::<Result<Vec<_>>>()?;
        let s = &y[..p];
        let alpha = &y[6 * p..];
        let m = self.matrix_at(&points)?;
        let k = self.k_values(&points)?;
        let mut dy = vec![0.0; y.len()];
        for (i, v) in m.mul_vec(s).into_iter().enumerate() {
            dy[i] = -v;
        }
        if let Dynamics::Coupled { field, .. } = self {
            for (i, a) in points.iter().enumerate() {
                let g = field.projected_gradient(a)?;
                for c in 0..5 {
                    dy[p + 5 * i + c] = s[i] * g[c];
                }
            }
        }
        let energy: Vec<f64> = (0..p).map(|i| alpha[i] * alpha[i] * k[i]).collect();
        let mean = energy.iter().sum::<f64>() / p as f64;
        for i in 0..p {
            dy[6 * p + i] = -(energy[i] - mean) * alpha[i];
        }
        Ok(dy)
    }

    fn check_weights(&self, state: &FlowState, band: [f64; 2]) -> Result<()> {
        let k = self.k_values(&state.points)?;
        let p = state.len() as f64;
        let mean = state.weights.iter().zip(&k).map(|(a, k)| a * a * k).sum::<f64>() / p;
        for (a, k) in state.weights.iter().zip(&k) {
            let ratio = a / (mean / k).sqrt();
            if !(band[0]..=band[1]).contains(&ratio) {
                return Err(Error::DivergedWeights { t: state.t });
            }
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau; the system is autonomous so stage times are
// not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: FlowState,
    pub dt_used: f64,
    /// Suggested size for the next step.
    pub dt_next: f64,
}

/// One accepted adaptive step starting with trial size `dt`. Trial steps
/// with local error above tolerance, or that would make some `s_i`
/// nonpositive, are retried with a smaller size.
pub fn step_flow(state: &FlowState, dynamics: &Dynamics<'_>, dt: f64, cfg: &FlowConfig) -> Result<StepOutcome> {
    assert!(dt > 0.0, "step size must be positive");
    let p = state.len();
    let y0 = state.pack();
    let k1 = dynamics.rhs(&y0, p)?;
    let mut h = dt.min(cfg.max_dt);
    loop {
        if h < cfg.min_dt {
            return Err(Error::StepUnderflow { t: state.t });
        }
        let mut ks = vec![k1.clone()];
        let mut y5 = y0.clone();
        for stage in 1..7 {
            let ys: Vec<f64> =
                (0..y0.len()).map(|n| y0[n] + h * (0..stage).map(|j| A[stage][j] * ks[j][n]).sum::<f64>()).collect();
            if stage == 6 {
                y5 = ys.clone();
            }
            ks.push(dynamics.rhs(&ys, p)?);
        }
        let mut err = 0.0f64;
        for n in 0..y0.len() {
            let e = h * (0..7).map(|j| (B5[j] - B4[j]) * ks[j][n]).sum::<f64>();
            // Inverse scales are judged relative to themselves since they
            // are followed down through many orders of magnitude.
            let scale = if n < p {
                cfg.local_tol * y0[n].abs().max(y5[n].abs())
            } else {
                cfg.local_tol * (1.0 + y0[n].abs().max(y5[n].abs()))
            };
            err = err.max(e.abs() / scale);
        }
        let positive = y5[..p].iter().all(|&s| s > 0.0);
        if !err.is_finite() || !positive {
            h *= 0.5;
            continue;
        }
        if err <= 1.0 {
            let next = state.t + h;
            let new_state = FlowState::unpack(&y5, p, next)?;
            dynamics.check_weights(&new_state, cfg.weight_band)?;
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            return Ok(StepOutcome { state: new_state, dt_used: h, dt_next: (h * grow).min(cfg.max_dt) });
        }
        h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowVerdict {
    Concentrates,
    Escapes,
    Undecided,
}

impl FlowVerdict {
    pub fn label(self) -> &'static str {
        match self {
            FlowVerdict::Concentrates => "concentrates",
            FlowVerdict::Escapes => "escapes",
            FlowVerdict::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub verdict: FlowVerdict,
    /// Initial state followed by every accepted step.
    pub trajectory: Vec<FlowState>,
    /// Least eigenvalue of the interaction matrix seen along the trajectory.
    pub min_rho: f64,
}

impl FlowRun {
    pub fn final_state(&self) -> &FlowState {
        self.trajectory.last().expect("trajectory holds the initial state")
    }
}

/// Integrates from `state` until the inverse scales collapse, grow, a point
/// leaves its basin, or `horizon` time units pass.
pub fn run_to_verdict(state: &FlowState, dynamics: &Dynamics<'_>, horizon: f64, cfg: &FlowConfig) -> Result<FlowRun> {
    let s0 = state.inv_scale_norm();
    let start = state.points.clone();
    let mut min_rho = crate::linalg::least_eigenvalue(&dynamics.matrix_at(&state.points)?);
    let mut trajectory = vec![state.clone()];
    let mut dt = cfg.initial_dt;
    let mut verdict = FlowVerdict::Undecided;
    for _ in 0..cfg.max_steps {
        let cur = trajectory.last().expect("nonempty");
        if cur.t >= horizon {
            break;
        }
        let out = step_flow(cur, dynamics, dt.min(horizon - cur.t), cfg)?;
        dt = out.dt_next;
        let next = out.state;
        if !dynamics.is_frozen() {
            min_rho = min_rho.min(crate::linalg::least_eigenvalue(&dynamics.matrix_at(&next.points)?));
        }
        let s = next.inv_scale_norm();
        let left_basin = next.points.iter().zip(&start).any(|(a, b)| geodesic_distance(a, b) > cfg.basin_radius);
        trajectory.push(next);
        if s < cfg.concentrate_ratio * s0 {
            verdict = FlowVerdict::Concentrates;
            break;
        }
        if s > cfg.escape_ratio * s0 || left_basin {
            verdict = FlowVerdict::Escapes;
            break;
        }
    }
    Ok(FlowRun { verdict, trajectory, min_rho })
}

/// CSV rows `t,s1..sp,a1_1..ap_5,alpha1..alphap`.
pub fn trajectory_csv(trajectory: &[FlowState]) -> String {
    let p = trajectory.first().map_or(0, FlowState::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=p).map(|i| format!("s{i}")));
    for i in 1..=p {
        header.extend((1..=5).map(|c| format!("a{i}_{c}")));
    }
    header.extend((1..=p).map(|i| format!("alpha{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for st in trajectory {
        let mut row = vec![st.t];
        row.extend(&st.inv_scales);
        for a in &st.points {
            row.extend(a.coords());
        }
        row.extend(&st.weights);
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", cells.join(",")).expect("writing to a String");
    }
    out
}

/// Largest distance of any point from where it started.
pub fn max_displacement(trajectory: &[FlowState]) -> f64 {
    let Some(first) = trajectory.first() else { return 0.0 };
    trajectory
        .iter()
        .flat_map(|st| {
            st.points
                .iter()
                .zip(&first.points)
                .map(|(a, b)| norm(&std::array::from_fn(|k| a.coords()[k] - b.coords()[k])))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::{find_critical_points, kplus, SearchConfig};
    use crate::field::parse_field;
    use crate::geometry::RoundSphere;
    use crate::linalg::least_eigenvalue;

    const QUADRIC_5: &str = "3 + x5^2 + 0.5*x4^2 + 0.25*x3^2 + 0.125*x2^2 + 0.0625*x1^2";

    fn frozen_state(s0: &[f64]) -> FlowState {
        FlowState {
            points: (0..s0.len()).map(|i| SpherePoint::axis(i, 1.0)).collect(),
            inv_scales: s0.to_vec(),
            weights: vec![1.0; s0.len()],
            t: 0.0,
        }
    }

    fn integrate_to(state: &FlowState, dynamics: &Dynamics<'_>, t_end: f64) -> FlowState {
        let cfg = FlowConfig::default();
        let mut st = state.clone();
        let mut dt = cfg.initial_dt;
        while st.t < t_end - 1e-15 {
            let out = step_flow(&st, dynamics, dt.min(t_end - st.t), &cfg).unwrap();
            st = out.state;
            dt = out.dt_next;
        }
        st
    }

    #[test]
    fn diagonal_linear_decay() {
        let dynamics = Dynamics::Frozen { matrix: SymMatrix::diagonal(&[1.0, 2.0]), k_values: vec![1.0, 1.0] };
        let end = integrate_to(&frozen_state(&[1.0, 1.0]), &dynamics, 1.0);
        assert!((end.inv_scales[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert!((end.inv_scales[1] - (-2.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn negative_eigenvalue_escapes() {
        let mut m = SymMatrix::diagonal(&[0.5, 0.5]);
        m.set(0, 1, -1.0);
        assert!(least_eigenvalue(&m) < 0.0);
        let dynamics = Dynamics::Frozen { matrix: m, k_values: vec![1.0, 1.0] };
        let run = run_to_verdict(&frozen_state(&[0.05, 0.05]), &dynamics, 100.0, &FlowConfig::default()).unwrap();
        assert_eq!(run.verdict, FlowVerdict::Escapes);
        assert!(run.final_state().t < 100.0);
    }

    #[test]
    fn zero_horizon_is_undecided() {
        let dynamics = Dynamics::Frozen { matrix: SymMatrix::diagonal(&[1.0]), k_values: vec![1.0] };
        let run = run_to_verdict(&frozen_state(&[0.05]), &dynamics, 0.0, &FlowConfig::default()).unwrap();
        assert_eq!(run.verdict, FlowVerdict::Undecided);
        assert_eq!(run.trajectory.len(), 1);
    }

    #[test]
    fn frozen_run_obeys_lyapunov_bound() {
        let mut m = SymMatrix::diagonal(&[1.0, 0.8, 1.5]);
        m.set(0, 1, -0.3);
        m.set(1, 2, -0.2);
        let rho = least_eigenvalue(&m);
        let dynamics = Dynamics::Frozen { matrix: m, k_values: vec![1.0, 2.0, 3.0] };
        let mut st = frozen_state(&[0.05, 0.02, 0.04]);
        st.weights = vec![1.0, 1.0 / 2f64.sqrt(), 1.0 / 3f64.sqrt()];
        let run = run_to_verdict(&st, &dynamics, 100.0, &FlowConfig::default()).unwrap();
        assert_eq!(run.verdict, FlowVerdict::Concentrates);
        let s0 = st.inv_scale_norm();
        for x in &run.trajectory {
            assert!(x.inv_scale_norm() <= s0 * (-rho * x.t).exp() + 1e-6 * s0);
        }
    }

    #[test]
    fn unbalanced_weights_relax() {
        let dynamics = Dynamics::Frozen { matrix: SymMatrix::diagonal(&[1.0, 1.0]), k_values: vec![1.0, 4.0] };
        let mut st = frozen_state(&[0.05, 0.05]);
        st.weights = vec![1.0, 1.0];
        let end = integrate_to(&st, &dynamics, 20.0);
        let e: Vec<f64> = end.weights.iter().zip([1.0, 4.0]).map(|(a, k)| a * a * k).collect();
        assert!((e[0] - e[1]).abs() < 1e-6);
    }

    #[test]
    fn weights_outside_band_are_reported() {
        let dynamics = Dynamics::Frozen { matrix: SymMatrix::diagonal(&[1.0, 1.0]), k_values: vec![1.0, 1.0] };
        let mut st = frozen_state(&[0.05, 0.05]);
        st.weights = vec![1.0, 50.0];
        assert!(matches!(step_flow(&st, &dynamics, 1e-3, &FlowConfig::default()), Err(Error::DivergedWeights { .. })));
    }

    #[test]
    fn quadric_antipodal_pair_concentrates_in_place() {
        let f = parse_field(QUADRIC_5).unwrap();
        let cs =
            find_critical_points(&f, &RoundSphere, &SearchConfig { starts: 512, ..SearchConfig::default() }).unwrap();
        let pair = [cs.find("north").unwrap().clone(), cs.find("south").unwrap().clone()];
        let dynamics = Dynamics::Coupled { field: &f, model: &RoundSphere };
        let st = FlowState::at_points(&pair, 0.1);
        let run = run_to_verdict(&st, &dynamics, 2000.0, &FlowConfig::default()).unwrap();
        assert_eq!(run.verdict, FlowVerdict::Concentrates);
        assert!(run.trajectory.windows(2).all(|w| w[1].inv_scale_norm() < w[0].inv_scale_norm()));
        assert!(max_displacement(&run.trajectory) < 1e-9);
    }

    #[test]
    fn every_quadric_candidate_concentrates() {
        let f = parse_field(QUADRIC_5).unwrap();
        let cs =
            find_critical_points(&f, &RoundSphere, &SearchConfig { starts: 512, ..SearchConfig::default() }).unwrap();
        let kp = kplus(&cs);
        let cfg = FlowConfig::default();
        for mask in 1u32..(1 << kp.len()) {
            let members: Vec<CriticalPoint> =
                kp.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, c)| c.clone()).collect();
            let rho = least_eigenvalue(&crate::interaction::build_matrix(&members, &RoundSphere).unwrap());
            let dynamics = Dynamics::Coupled { field: &f, model: &RoundSphere };
            let run =
                run_to_verdict(&FlowState::at_points(&members, cfg.initial_inv_scale), &dynamics, cfg.horizon, &cfg)
                    .unwrap();
            assert_eq!(run.verdict == FlowVerdict::Concentrates, rho > 0.0, "mask {mask:b}");
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let dynamics = Dynamics::Frozen { matrix: SymMatrix::diagonal(&[1.0, 1.0]), k_values: vec![1.0, 1.0] };
        let run = run_to_verdict(&frozen_state(&[0.05, 0.05]), &dynamics, 0.5, &FlowConfig::default()).unwrap();
        let csv = trajectory_csv(&run.trajectory);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("t,s1,s2,a1_1,a1_2"));
        assert!(header.ends_with("a2_5,alpha1,alpha2"));
        assert_eq!(header.split(',').count(), 1 + 2 + 10 + 2);
        assert_eq!(lines.count(), run.trajectory.len());
    }
}
