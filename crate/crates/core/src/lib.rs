//! Existence certificates for prescribed scalar curvature on S^4 from the
//! critical points of K and their interaction matrices, together with
//! bubble constants and a model concentration flow.

// Index loops mirror the matrix formulas they implement.
#![allow(clippy::needless_range_loop)]

pub mod bubble;
pub mod certificate;
pub mod config;
pub mod critical;
pub mod error;
pub mod field;
pub mod geometry;
pub mod interaction;
pub mod linalg;
pub mod pipeline;
pub mod report;
pub mod sampling;
pub mod shadow_flow;

pub use bubble::{AnalyticConstants, Bubble};
pub use certificate::{Certificate, CountingSums, MuAssertion, Verdict};
pub use config::{ManifoldSpec, RunConfig, Tolerances};
pub use critical::{CriticalPoint, CriticalSet, SearchConfig};
pub use error::{Error, Result};
pub use field::{parse_field, ScalarField};
pub use geometry::{ManifoldModel, RoundSphere, SpherePoint, TableManifold};
pub use interaction::{CpiCandidate, F1Set, InteractionConfig};
pub use linalg::SymMatrix;
pub use pipeline::{analyze, prepare, Analysis, Outcome, Prepared};
pub use shadow_flow::{FlowConfig, FlowState, FlowVerdict};
