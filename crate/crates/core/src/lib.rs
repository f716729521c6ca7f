//! Weighted signed Wald tests for intersections of one-sided hypotheses,
//! closed testing over the hypothesis family, and supporting estimators.

pub mod bahadur;
pub mod cone;
pub mod dist;
pub mod error;
pub mod estimands;
pub mod intersection;
pub mod io;
pub mod linalg;
pub mod multtest;
pub mod rng;

pub use error::{Error, Result};
pub use estimands::{CovarianceKind, EstimateSet, ScenarioConfig, TrialRecord};
pub use intersection::{HypothesisSpec, McConfig, Method, MinpMode, PValueRule, TestResult};
pub use linalg::SymMatrix;
pub use multtest::{ClosedMethod, ClosedTestReport};
