//! End-to-end orchestration: positivity, critical points, the two
//! hypotheses, enumeration and the certificate.

use crate::bubble::{compute_constants, derive_c0, AnalyticConstants};
use crate::certificate::{certify, iota, Certificate};
use crate::config::{load_manifold, RunConfig};
use crate::critical::{find_critical_points, kplus, verify_h0, CriticalPoint, CriticalSet, H0Report};
use crate::error::{Error, Result};
use crate::field::{parse_field, validate_positivity, PositivityReport, ScalarField};
use crate::geometry::ManifoldModel;
use crate::interaction::{build_matrix, check_h1, enumerate_candidates, F1Set, H1Report};
use crate::linalg::{least_eigenvalue, sylvester_positive_definite, SymMatrix};
use crate::shadow_flow::{run_to_verdict, Dynamics, FlowRun, FlowState};

pub const EXIT_EXISTENCE: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NO_CONCLUSION: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_INCOMPLETE: i32 = 4;

/// Process exit code for a run that stopped with `err`.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NotPositive { .. } | Error::DegenerateCriticalPoint { .. } => EXIT_HYPOTHESIS,
        Error::IncompleteSearch { .. } => EXIT_INCOMPLETE,
        _ => EXIT_USAGE,
    }
}

/// Everything up to and including the set of positive-beta critical points.
pub struct Prepared {
    pub config: RunConfig,
    pub field: ScalarField,
    pub model: Box<dyn ManifoldModel>,
    pub positivity: PositivityReport,
    pub critical: CriticalSet,
    pub h0: H0Report,
    pub kplus: Vec<CriticalPoint>,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let field = parse_field(&config.field)?;
    let model = load_manifold(&config.manifold)?;
    let positivity = validate_positivity(&field, config.tolerances.positivity.samples)?;
    let search = config.search();
    let critical = find_critical_points(&field, model.as_ref(), &search)?;
    let h0 = verify_h0(&critical, &search);
    let kplus = kplus(&critical);
    Ok(Prepared { config: config.clone(), field, model, positivity, critical, h0, kplus })
}

impl Prepared {
    /// Positive-beta points named in `names`, in canonical order.
    pub fn resolve_subset(&self, names: &[String]) -> Result<Vec<CriticalPoint>> {
        let mut picked = vec![false; self.kplus.len()];
        for name in names {
            let pos =
                self.kplus.iter().position(|c| &c.name == name).ok_or_else(|| Error::UnknownSubset(name.clone()))?;
            if picked[pos] {
                return Err(Error::Config(format!("point {name} listed twice")));
            }
            picked[pos] = true;
        }
        if names.is_empty() {
            return Err(Error::Config("empty subset".into()));
        }
        Ok(self.kplus.iter().zip(&picked).filter(|(_, &p)| p).map(|(c, _)| c.clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Existence,
    NoConclusion,
    HypothesisFailure(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Existence => EXIT_EXISTENCE,
            Outcome::NoConclusion => EXIT_NO_CONCLUSION,
            Outcome::HypothesisFailure(_) => EXIT_HYPOTHESIS,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Existence => "existence",
            Outcome::NoConclusion => "no_conclusion",
            Outcome::HypothesisFailure(_) => "hypothesis_failure",
        }
    }
}

pub struct Analysis {
    pub prepared: Prepared,
    /// Absent when the nondegeneracy hypothesis fails.
    pub f1: Option<F1Set>,
    pub h1: Option<H1Report>,
    /// Absent when either hypothesis fails.
    pub certificate: Option<Certificate>,
    pub outcome: Outcome,
}

pub fn analyze(config: &RunConfig) -> Result<Analysis> {
    let prepared = prepare(config)?;
    if !prepared.h0.pass {
        let names: Vec<&str> = prepared.h0.violations.iter().map(|v| v.point.as_str()).collect();
        let why = format!("nondegeneracy fails at {}", names.join(", "));
        return Ok(Analysis {
            prepared,
            f1: None,
            h1: None,
            certificate: None,
            outcome: Outcome::HypothesisFailure(why),
        });
    }
    let f1 = enumerate_candidates(&prepared.kplus, prepared.model.as_ref(), &config.tolerances.interaction)?;
    let h1 = check_h1(&f1, config.tolerances.interaction.rho_tol);
    if !h1.pass {
        let names: Vec<String> = h1.failing.iter().map(|s| s.join(",")).collect();
        let why = format!("least eigenvalue vanishes for {}", names.join("; "));
        return Ok(Analysis {
            prepared,
            f1: Some(f1),
            h1: Some(h1),
            certificate: None,
            outcome: Outcome::HypothesisFailure(why),
        });
    }
    let certificate = certify(&f1, &config.mu)?;
    let outcome = if certificate.verdict.is_existence() { Outcome::Existence } else { Outcome::NoConclusion };
    Ok(Analysis { prepared, f1: Some(f1), h1: Some(h1), certificate: Some(certificate), outcome })
}

/// Interaction data of one subset of the positive-beta points.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetMatrix {
    pub names: Vec<String>,
    pub matrix: SymMatrix,
    pub rho: f64,
    pub iota: i64,
    pub in_f1: bool,
    pub sylvester_pd: bool,
}

pub fn subset_matrix(prepared: &Prepared, names: &[String]) -> Result<SubsetMatrix> {
    let members = prepared.resolve_subset(names)?;
    let matrix = build_matrix(&members, prepared.model.as_ref())?;
    let rho = least_eigenvalue(&matrix);
    Ok(SubsetMatrix {
        names: members.iter().map(|m| m.name.clone()).collect(),
        sylvester_pd: sylvester_positive_definite(&matrix),
        in_f1: rho > 0.0,
        iota: iota(&members),
        rho,
        matrix,
    })
}

/// Runs the coupled model dynamics from the named critical points.
pub fn subset_flow(prepared: &Prepared, names: &[String]) -> Result<(Vec<String>, FlowRun)> {
    let members = prepared.resolve_subset(names)?;
    let cfg = &prepared.config.tolerances.flow;
    let state = FlowState::at_points(&members, cfg.initial_inv_scale);
    let dynamics = Dynamics::Coupled { field: &prepared.field, model: prepared.model.as_ref() };
    let run = run_to_verdict(&state, &dynamics, cfg.horizon, cfg)?;
    Ok((members.into_iter().map(|m| m.name).collect(), run))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsCheck {
    pub computed: AnalyticConstants,
    pub closed_form: AnalyticConstants,
    pub shooting_c0: f64,
}

pub fn constants(config: &RunConfig) -> Result<ConstantsCheck> {
    Ok(ConstantsCheck {
        computed: compute_constants(&config.tolerances.quadrature)?,
        closed_form: AnalyticConstants::closed_form(),
        shooting_c0: derive_c0(),
    })
}
