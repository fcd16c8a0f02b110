//! Machine-readable reports and their text renderings.
//!
//! Every report embeds the tool version and the fully resolved
//! configuration, so a report can be reproduced from itself.

use std::fmt::Write as _;

use serde::Serialize;

use crate::certificate::{Certificate, Verdict};
use crate::config::RunConfig;
use crate::critical::{CriticalPoint, H0Report};
use crate::geometry::SpherePoint;
use crate::interaction::H1Report;
use crate::pipeline::{Analysis, ConstantsCheck, Outcome, Prepared, SubsetMatrix};
use crate::shadow_flow::{FlowRun, FlowVerdict};

pub const TOOL_NAME: &str = "curvcert";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CAVEAT_NORMALIZATION: &str = "Green's function of the conformal Laplacian -Δ + 2 on the unit S^4, normalized so that G(a,x) ~ 1/(4π² d²) near the pole; the regular part A vanishes on the round sphere. Interaction entries -2G/sqrt(K_i K_j) depend on this normalization.";
pub const CAVEAT_COMPLETENESS: &str = "Completeness of the critical set is heuristic: it rests on the Poincaré–Hopf sum and restart escalation. A missed pair of cancelling critical points cannot be detected.";
pub const CAVEAT_H1_READING: &str = "The least-eigenvalue hypothesis is checked for configurations of every size; the result restricted to pairs is reported separately as h1.pairs_only_pass.";
pub const CAVEAT_GENERICITY: &str = "Multiplicity bounds assume K is generic; genericity is assumed, not checked.";
pub const CAVEAT_MU: &str = "Intersection numbers mu are taken as user assertions; stable and unstable manifolds at infinity are never computed, so their labelling in the definition of mu is not checked either.";
pub const CAVEAT_CONDITIONAL: &str = "The verdict is conditional on the asserted intersection numbers.";
pub const CAVEAT_AFFINE: &str = "K is the restriction of an affine function. By the Kazdan–Warner obstruction no conformal metric with this curvature exists on the round sphere; degree 0 and no conclusion are consistent with that.";
pub const MODEL_DYNAMICS_LABEL: &str = "model dynamics, not the variational gradient flow";

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

fn tool() -> ToolInfo {
    ToolInfo { name: TOOL_NAME, version: TOOL_VERSION }
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivitySection {
    pub min_value: f64,
    pub location: SpherePoint,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSection {
    pub points: usize,
    pub euler_sum: i64,
    pub starts_used: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRow {
    pub name: String,
    pub location: SpherePoint,
    pub k_value: f64,
    pub morse_index: usize,
    pub laplacian: f64,
    pub mass: f64,
    pub beta: f64,
    pub hess_eigenvalues: [f64; 4],
    pub grad_norm: f64,
}

impl From<&CriticalPoint> for PointRow {
    fn from(c: &CriticalPoint) -> Self {
        PointRow {
            name: c.name.clone(),
            location: c.location,
            k_value: c.k_value,
            morse_index: c.morse_index,
            laplacian: c.laplacian,
            mass: c.mass,
            beta: c.beta,
            hess_eigenvalues: c.hess_eigenvalues,
            grad_norm: c.grad_norm,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRow {
    pub members: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub rho: f64,
    pub iota: i64,
    pub in_f1: bool,
    pub sylvester_pd: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypotheses {
    pub h0: H0Report,
    pub h1: Option<H1Report>,
}

/// Distances of the measured quantities from their thresholds.
#[derive(Debug, Clone, Serialize)]
pub struct Margins {
    pub min_k: f64,
    pub max_grad_norm: f64,
    pub grad_tol: f64,
    pub min_abs_hess_eigenvalue: f64,
    pub nondegeneracy_tol: f64,
    pub min_abs_beta: f64,
    pub beta_tol: f64,
    pub min_abs_rho: Option<f64>,
    pub rho_tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeSection {
    pub status: &'static str,
    pub exit_code: i32,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub inputs: RunConfig,
    pub outcome: OutcomeSection,
    pub positivity: PositivitySection,
    pub search: SearchSection,
    pub hypotheses: Hypotheses,
    pub margins: Margins,
    pub critical_points: Vec<PointRow>,
    pub kplus: Vec<String>,
    pub candidates: Vec<CandidateRow>,
    pub interlacing_violations: usize,
    pub sylvester_disagreements: usize,
    pub certificate: Option<Certificate>,
    pub caveats: Vec<String>,
}

fn positivity_section(p: &Prepared) -> PositivitySection {
    PositivitySection {
        min_value: p.positivity.min_value,
        location: p.positivity.location,
        samples: p.positivity.samples,
    }
}

fn search_section(p: &Prepared) -> SearchSection {
    SearchSection {
        points: p.critical.points.len(),
        euler_sum: p.critical.euler_sum,
        starts_used: p.critical.starts_used,
        restarts: p.critical.restarts,
    }
}

fn base_caveats(p: &Prepared) -> Vec<String> {
    let mut c = vec![CAVEAT_NORMALIZATION.to_string(), CAVEAT_COMPLETENESS.to_string()];
    if p.field.is_affine() {
        c.push(CAVEAT_AFFINE.to_string());
    }
    c
}

pub fn analysis_report(a: &Analysis) -> Report {
    let p = &a.prepared;
    let search = p.config.search();
    let candidates =
        a.f1.iter()
            .flat_map(|f1| &f1.candidates)
            .map(|c| CandidateRow {
                members: c.names.clone(),
                matrix: c.matrix.rows(),
                rho: c.rho,
                iota: c.iota,
                in_f1: c.in_f1,
                sylvester_pd: c.sylvester_pd,
            })
            .collect();
    let mut caveats = base_caveats(p);
    caveats.push(CAVEAT_H1_READING.to_string());
    caveats.push(CAVEAT_GENERICITY.to_string());
    caveats.push(CAVEAT_MU.to_string());
    if let Some(Verdict::ExistenceWithBound { conditional: true, .. }) = a.certificate.as_ref().map(|c| &c.verdict) {
        caveats.push(CAVEAT_CONDITIONAL.to_string());
    }
    Report {
        tool: tool(),
        inputs: p.config.clone(),
        outcome: OutcomeSection {
            status: a.outcome.label(),
            exit_code: a.outcome.exit_code(),
            detail: match &a.outcome {
                Outcome::HypothesisFailure(why) => Some(why.clone()),
                _ => None,
            },
        },
        positivity: positivity_section(p),
        search: search_section(p),
        hypotheses: Hypotheses { h0: p.h0.clone(), h1: a.h1.clone() },
        margins: Margins {
            min_k: p.positivity.min_value,
            max_grad_norm: p.critical.points.iter().map(|c| c.grad_norm).fold(0.0, f64::max),
            grad_tol: search.grad_tol,
            min_abs_hess_eigenvalue: p.h0.min_abs_eigenvalue,
            nondegeneracy_tol: search.nondegeneracy_tol,
            min_abs_beta: p.h0.min_abs_beta,
            beta_tol: search.beta_tol,
            min_abs_rho: a.h1.as_ref().and_then(|h| h.min_margin),
            rho_tol: p.config.tolerances.interaction.rho_tol,
        },
        critical_points: p.critical.points.iter().map(PointRow::from).collect(),
        kplus: p.kplus.iter().map(|c| c.name.clone()).collect(),
        candidates,
        interlacing_violations: a.f1.as_ref().map_or(0, |f| f.interlacing_violations.len()),
        sylvester_disagreements: a.f1.as_ref().map_or(0, |f| f.sylvester_disagreements.len()),
        certificate: a.certificate.clone(),
        caveats,
    }
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

fn coords(p: &SpherePoint) -> String {
    // Round-off below the printed precision would otherwise show as -0.000000.
    let c: Vec<String> =
        p.coords().iter().map(|&v| if v.abs() < 5e-7 { 0.0 } else { v }).map(|v| format!("{v:+.6}")).collect();
    format!("({})", c.join(", "))
}

fn names(v: &[String]) -> String {
    format!("{{{}}}", v.join(", "))
}

pub fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::ExistenceWithBound { k, morse_bound, multiplicity, conditional } => format!(
            "existence: a solution with Morse index <= {morse_bound} exists (k = {k}); generically at least {multiplicity}{}",
            if *conditional { " [conditional on asserted mu]" } else { "" }
        ),
        Verdict::ExistenceByCorollary { multiplicity } => {
            format!("existence: nonzero degree; generically at least {multiplicity} solution(s)")
        }
        Verdict::NoConclusion => "no conclusion".to_string(),
    }
}

fn point_table(out: &mut String, rows: &[PointRow], kplus: &[String]) {
    writeln!(out, "{:<8} {:>12} {:>5} {:>13} {:>13}  {:<5} location", "name", "K", "index", "laplacian", "beta", "K+")
        .unwrap();
    for r in rows {
        let plus = if kplus.contains(&r.name) { "yes" } else { "" };
        writeln!(
            out,
            "{:<8} {:>12.8} {:>5} {:>13.6e} {:>13.6e}  {:<5} {}",
            r.name,
            r.k_value,
            r.morse_index,
            r.laplacian,
            r.beta,
            plus,
            coords(&r.location)
        )
        .unwrap();
    }
}

fn caveat_list(out: &mut String, caveats: &[String]) {
    writeln!(out, "\nCaveats").unwrap();
    for c in caveats {
        writeln!(out, "  - {c}").unwrap();
    }
}

pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", r.tool.name, r.tool.version).unwrap();
    writeln!(out, "field:    {}", r.inputs.field).unwrap();
    writeln!(out, "manifold: {}", serde_json::to_string(&r.inputs.manifold).unwrap()).unwrap();
    writeln!(out, "seed:     {}", r.inputs.seed).unwrap();
    writeln!(out, "outcome:  {} (exit {})", r.outcome.status, r.outcome.exit_code).unwrap();
    if let Some(d) = &r.outcome.detail {
        writeln!(out, "          {d}").unwrap();
    }

    writeln!(out, "\nPositivity").unwrap();
    writeln!(
        out,
        "  min K ~ {:.10} at {} ({} samples)",
        r.positivity.min_value,
        coords(&r.positivity.location),
        r.positivity.samples
    )
    .unwrap();

    writeln!(out, "\nCritical points ({}; Poincaré–Hopf sum {})", r.search.points, r.search.euler_sum).unwrap();
    point_table(&mut out, &r.critical_points, &r.kplus);

    let m = &r.margins;
    writeln!(out, "\nHypotheses").unwrap();
    writeln!(
        out,
        "  H0 {}: min |hess eig| {:.3e} (tol {:.1e}), min |beta| {:.3e} (tol {:.1e})",
        pass(r.hypotheses.h0.pass),
        m.min_abs_hess_eigenvalue,
        m.nondegeneracy_tol,
        m.min_abs_beta,
        m.beta_tol
    )
    .unwrap();
    for v in &r.hypotheses.h0.violations {
        writeln!(out, "     violation at {}: {:?} value {:.3e} tol {:.1e}", v.point, v.clause, v.value, v.tolerance)
            .unwrap();
    }
    if let Some(h1) = &r.hypotheses.h1 {
        let margin = h1.min_margin.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        writeln!(
            out,
            "  H1 {}: min |rho| {} (tol {:.1e}); pairs only: {}",
            pass(h1.pass),
            margin,
            m.rho_tol,
            pass(h1.pairs_only_pass)
        )
        .unwrap();
        for f in &h1.failing {
            writeln!(out, "     vanishing rho at {}", names(f)).unwrap();
        }
    }

    if !r.candidates.is_empty() {
        writeln!(out, "\nCandidates ({})", r.candidates.len()).unwrap();
        writeln!(out, "  {:<40} {:>14} {:>5}  in_F1", "members", "rho", "iota").unwrap();
        for c in &r.candidates {
            writeln!(out, "  {:<40} {:>14.6e} {:>5}  {}", names(&c.members), c.rho, c.iota, c.in_f1).unwrap();
        }
    }

    if let Some(cert) = &r.certificate {
        certificate_lines(&mut out, cert);
    }
    caveat_list(&mut out, &r.caveats);
    out
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub tool: ToolInfo,
    pub inputs: RunConfig,
    pub outcome: OutcomeSection,
    pub certificate: Option<Certificate>,
    pub caveats: Vec<String>,
}

pub fn certificate_report(a: &Analysis) -> CertificateReport {
    let full = analysis_report(a);
    CertificateReport {
        tool: full.tool,
        inputs: full.inputs,
        outcome: full.outcome,
        certificate: full.certificate,
        caveats: full.caveats,
    }
}

pub fn render_certificate_text(r: &CertificateReport) -> String {
    let mut out = String::new();
    writeln!(out, "outcome: {} (exit {})", r.outcome.status, r.outcome.exit_code).unwrap();
    if let Some(d) = &r.outcome.detail {
        writeln!(out, "         {d}").unwrap();
    }
    if let Some(cert) = &r.certificate {
        certificate_lines(&mut out, cert);
    }
    caveat_list(&mut out, &r.caveats);
    out
}

fn certificate_lines(out: &mut String, cert: &Certificate) {
    writeln!(out, "\nCertificate").unwrap();
    let hist: Vec<String> = cert.sums.index_histogram.iter().map(|(i, n)| format!("{i}:{n}")).collect();
    writeln!(out, "  index histogram  {{{}}}", hist.join(", ")).unwrap();
    writeln!(out, "  total sum        {}", cert.sums.total_sum).unwrap();
    writeln!(out, "  degree           {}", cert.sums.degree).unwrap();
    writeln!(out, "  partial sums S_k {:?}", cert.sums.partial_sums).unwrap();
    writeln!(out, "  admissible k     {:?}", cert.admissible_k).unwrap();
    writeln!(out, "  verdict          {}", verdict_text(&cert.verdict)).unwrap();
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointsReport {
    pub tool: ToolInfo,
    pub inputs: RunConfig,
    pub positivity: PositivitySection,
    pub search: SearchSection,
    pub h0: H0Report,
    pub critical_points: Vec<PointRow>,
    pub kplus: Vec<String>,
    pub caveats: Vec<String>,
}

pub fn critical_points_report(p: &Prepared) -> CriticalPointsReport {
    CriticalPointsReport {
        tool: tool(),
        inputs: p.config.clone(),
        positivity: positivity_section(p),
        search: search_section(p),
        h0: p.h0.clone(),
        critical_points: p.critical.points.iter().map(PointRow::from).collect(),
        kplus: p.kplus.iter().map(|c| c.name.clone()).collect(),
        caveats: base_caveats(p),
    }
}

pub fn render_critical_points_text(r: &CriticalPointsReport) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", r.tool.name, r.tool.version).unwrap();
    writeln!(out, "field: {}", r.inputs.field).unwrap();
    writeln!(out, "min K ~ {:.10}", r.positivity.min_value).unwrap();
    writeln!(out, "\nCritical points ({}; Poincaré–Hopf sum {})", r.search.points, r.search.euler_sum).unwrap();
    point_table(&mut out, &r.critical_points, &r.kplus);
    writeln!(
        out,
        "\nH0 {}: min |hess eig| {:.3e}, min |beta| {:.3e}",
        pass(r.h0.pass),
        r.h0.min_abs_eigenvalue,
        r.h0.min_abs_beta
    )
    .unwrap();
    caveat_list(&mut out, &r.caveats);
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixReport {
    pub tool: ToolInfo,
    pub inputs: RunConfig,
    pub members: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub rho: f64,
    pub iota: i64,
    pub in_f1: bool,
    pub sylvester_pd: bool,
    pub caveats: Vec<String>,
}

pub fn matrix_report(p: &Prepared, m: &SubsetMatrix) -> MatrixReport {
    MatrixReport {
        tool: tool(),
        inputs: p.config.clone(),
        members: m.names.clone(),
        matrix: m.matrix.rows(),
        rho: m.rho,
        iota: m.iota,
        in_f1: m.in_f1,
        sylvester_pd: m.sylvester_pd,
        caveats: vec![CAVEAT_NORMALIZATION.to_string()],
    }
}

pub fn render_matrix_text(r: &MatrixReport) -> String {
    let mut out = String::new();
    writeln!(out, "interaction matrix of {}", names(&r.members)).unwrap();
    for row in &r.matrix {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>15.8e}")).collect();
        writeln!(out, "  {}", cells.join(" ")).unwrap();
    }
    writeln!(out, "rho   {:.10e}", r.rho).unwrap();
    writeln!(out, "iota  {}", r.iota).unwrap();
    writeln!(out, "in F1 {}", r.in_f1).unwrap();
    caveat_list(&mut out, &r.caveats);
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantRow {
    pub name: &'static str,
    pub computed: f64,
    pub closed_form: f64,
    pub rel_error: f64,
    pub method: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub tool: ToolInfo,
    pub constants: Vec<ConstantRow>,
}

pub fn constants_report(c: &ConstantsCheck) -> ConstantsReport {
    let row = |name, computed: f64, closed_form: f64, method| ConstantRow {
        name,
        computed,
        closed_form,
        rel_error: (computed / closed_form - 1.0).abs(),
        method,
    };
    ConstantsReport {
        tool: tool(),
        constants: vec![
            row("c0", c.shooting_c0, c.closed_form.c0, "shooting on u'' + 3u'/r + u^3 = 0; closed form 2*sqrt(2)"),
            row(
                "S4",
                c.computed.s4,
                c.closed_form.s4,
                "c0^4 omega3 int r^3 (1+r^2)^-4 dr by quadrature; closed form 32 pi^2 / 3",
            ),
            row(
                "c2",
                c.computed.c2,
                c.closed_form.c2,
                "c0^4 omega3 int r^3 (1+r^2)^-3 dr by quadrature; closed form 32 pi^2",
            ),
            row("omega3", c.computed.omega3, c.closed_form.omega3, "volume of the unit 3-sphere, 2 pi^2"),
        ],
    }
}

pub fn render_constants_text(r: &ConstantsReport) -> String {
    let mut out = String::new();
    writeln!(out, "{:<7} {:>22} {:>22} {:>10}  method", "name", "computed", "closed form", "rel err").unwrap();
    for c in &r.constants {
        writeln!(
            out,
            "{:<7} {:>22.15} {:>22.15} {:>10.2e}  {}",
            c.name, c.computed, c.closed_form, c.rel_error, c.method
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub tool: ToolInfo,
    pub inputs: RunConfig,
    pub label: &'static str,
    pub members: Vec<String>,
    pub verdict: FlowVerdict,
    pub final_time: f64,
    pub steps: usize,
    pub initial_inv_scale_norm: f64,
    pub final_inv_scale_norm: f64,
    pub min_rho: f64,
}

pub fn flow_report(p: &Prepared, members: &[String], run: &FlowRun) -> FlowReport {
    let first = &run.trajectory[0];
    let last = run.final_state();
    FlowReport {
        tool: tool(),
        inputs: p.config.clone(),
        label: MODEL_DYNAMICS_LABEL,
        members: members.to_vec(),
        verdict: run.verdict,
        final_time: last.t,
        steps: run.trajectory.len() - 1,
        initial_inv_scale_norm: first.inv_scale_norm(),
        final_inv_scale_norm: last.inv_scale_norm(),
        min_rho: run.min_rho,
    }
}

pub fn render_flow_text(r: &FlowReport) -> String {
    let mut out = String::new();
    writeln!(out, "flow from {} ({})", names(&r.members), r.label).unwrap();
    writeln!(out, "verdict  {}", r.verdict.label()).unwrap();
    writeln!(out, "time     {:.6}", r.final_time).unwrap();
    writeln!(out, "steps    {}", r.steps).unwrap();
    writeln!(out, "|s|      {:.6e} -> {:.6e}", r.initial_inv_scale_norm, r.final_inv_scale_norm).unwrap();
    writeln!(out, "min rho  {:.6e}", r.min_rho).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::analyze;

    fn quick(field: &str) -> RunConfig {
        let mut cfg = RunConfig::new(field);
        cfg.tolerances.search.starts = 512;
        cfg.tolerances.positivity.samples = 2000;
        cfg
    }

    #[test]
    fn affine_report_carries_caveats() {
        let r = analysis_report(&analyze(&quick("2 + x5")).unwrap());
        assert!(r.caveats.iter().any(|c| c.contains("Kazdan–Warner")));
        assert!(r.caveats.iter().any(|c| c.contains("normalized")));
        assert!(r.caveats.iter().any(|c| c.contains("Poincaré–Hopf")));
        assert_eq!(r.outcome.exit_code, 2);
        let json: serde_json::Value = serde_json::from_str(&to_json(&r)).unwrap();
        for key in ["inputs", "critical_points", "kplus", "candidates", "certificate", "caveats"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let cert = &json["certificate"];
        for key in ["histogram", "total_sum", "degree", "partial_sums", "admissible_k", "verdict"] {
            assert!(cert.get(key).is_some(), "{key}");
        }
        assert_eq!(json["tool"]["version"], TOOL_VERSION);
        assert_eq!(json["inputs"]["tolerances"]["search"]["grad_tol"], 1e-9);
        let text = render_text(&r);
        assert!(text.contains("no conclusion"));
        assert!(text.contains("degree           0"));
    }

    #[test]
    fn quadric_report_is_not_flagged_affine() {
        let r =
            analysis_report(&analyze(&quick("3 + x5^2 + 0.5*x4^2 + 0.25*x3^2 + 0.125*x2^2 + 0.0625*x1^2")).unwrap());
        assert!(!r.caveats.iter().any(|c| c.contains("Kazdan–Warner")));
        assert_eq!(r.candidates.len(), 15);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = to_json(&analysis_report(&analyze(&quick("2 + x5 + 0.3*x1*x2")).unwrap()));
        let b = to_json(&analysis_report(&analyze(&quick("2 + x5 + 0.3*x1*x2")).unwrap()));
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_verdict_text() {
        let v = Verdict::ExistenceWithBound { k: 1, morse_bound: 1, multiplicity: 1, conditional: false };
        assert!(verdict_text(&v).contains("Morse index <= 1"));
        assert!(verdict_text(&Verdict::ExistenceByCorollary { multiplicity: 1 }).contains("at least 1"));
    }
}
