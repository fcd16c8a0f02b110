//! Benchmark fixtures.

use curvcert_core::critical::{find_critical_points, kplus, CriticalPoint, SearchConfig};
use curvcert_core::{parse_field, RoundSphere};

pub const AFFINE: &str = "2 + x5";
pub const QUADRIC_5: &str = "3 + x5^2 + 0.5*x4^2 + 0.25*x3^2 + 0.125*x2^2 + 0.0625*x1^2";

/// Search settings used by the benchmarks.
pub fn search(starts: usize) -> SearchConfig {
    SearchConfig { starts, ..SearchConfig::default() }
}

/// Positive-beta critical points of `field` on the round sphere.
pub fn positive_points(field: &str) -> Vec<CriticalPoint> {
    let f = parse_field(field).expect("fixture parses");
    let set = find_critical_points(&f, &RoundSphere, &search(1024)).expect("fixture search");
    kplus(&set)
}
