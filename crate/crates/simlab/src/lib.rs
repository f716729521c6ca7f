//! Simulation studies: two-hypothesis power against min-p, type-1 error of
//! intersection tests, and closed-testing power on a simulated landmark
//! trial.

pub mod config;
pub mod critical;
pub mod study1;
pub mod study2;
pub mod study3;
pub mod table;
pub mod trial;

pub use config::{Scale, SimulationConfig};
pub use critical::{critical_value_two, minp_critical_two, minp_power_two, shift_for_minp_power};
pub use study1::{run_study1, Study1Config};
pub use study2::{run_study2, Study2Config, WeightSet};
pub use study3::{run_study3, Strategy, Study3Config};
pub use table::{Proportion, StudyResultTable, StudyRow};
pub use trial::simulate_trial;
