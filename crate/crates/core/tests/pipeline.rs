use curvcert_core::certificate::Verdict;
use curvcert_core::{analyze, Error, ManifoldSpec, MuAssertion, Outcome, RunConfig};

const QUADRIC_5: &str = "3 + x5^2 + 0.5*x4^2 + 0.25*x3^2 + 0.125*x2^2 + 0.0625*x1^2";

fn quick(field: &str) -> RunConfig {
    let mut cfg = RunConfig::new(field);
    cfg.tolerances.search.starts = 1024;
    cfg.tolerances.positivity.samples = 2000;
    cfg
}

fn mu(names: &[&str], value: u8) -> MuAssertion {
    MuAssertion { subset: names.iter().map(|s| s.to_string()).collect(), value }
}

#[test]
fn quadric_histogram_and_verdict() {
    let a = analyze(&quick(QUADRIC_5)).unwrap();
    let cert = a.certificate.unwrap();
    let hist: Vec<(i64, u64)> = cert.sums.index_histogram.into_iter().collect();
    assert_eq!(hist, [(0, 2), (1, 3), (2, 4), (3, 3), (4, 2), (5, 1)]);
    assert_eq!(cert.verdict, Verdict::NoConclusion);
    assert_eq!(a.outcome, Outcome::NoConclusion);
}

#[test]
fn mu_assertions_on_affine_field() {
    let mut cfg = quick("2 + x5");
    cfg.mu = vec![mu(&["north"], 0)];
    let a = analyze(&cfg).unwrap();
    assert!(matches!(a.certificate.unwrap().verdict, Verdict::ExistenceWithBound { k: 0, conditional: true, .. }));

    cfg.mu = vec![mu(&["north"], 1)];
    assert_eq!(analyze(&cfg).unwrap().outcome, Outcome::NoConclusion);

    cfg.mu = vec![mu(&["north"], 2)];
    assert!(matches!(analyze(&cfg), Err(Error::InvalidMuAssertion { .. })));

    cfg.mu = vec![mu(&["north"], 0), mu(&["north"], 0)];
    assert!(matches!(analyze(&cfg), Err(Error::InvalidMuAssertion { .. })));
}

#[test]
fn partial_mu_assertions_are_reported() {
    // S_1 = 2, so k = 1 passes the sum test, but two of its three candidates are unasserted.
    let mut cfg = quick(QUADRIC_5);
    cfg.mu = vec![mu(&["south", "north"], 0)];
    match analyze(&cfg) {
        Err(Error::MissingMuAssertion { subset }) => assert_ne!(subset, ["south", "north"]),
        other => panic!("{:?}", other.map(|a| a.outcome)),
    }
}

#[test]
fn missing_table_is_an_io_error() {
    let mut cfg = quick("2 + x5");
    cfg.manifold = ManifoldSpec::Table { path: "/nonexistent/table.json".into() };
    assert!(matches!(analyze(&cfg), Err(Error::Io(_))));
}

#[test]
fn config_json_round_trip_preserves_analysis() {
    let cfg = quick("2 + x5");
    let back = RunConfig::from_json(&cfg.to_json()).unwrap();
    let (a, b) = (analyze(&cfg).unwrap(), analyze(&back).unwrap());
    assert_eq!(a.certificate, b.certificate);
}
