//! Stationary problem: level graphs, cycle gaps, semidistances and the
//! critical value.

pub mod cycles;
pub mod distance;
pub mod level;

pub use cycles::{min_cycle_gap, CycleGap};
pub use distance::SemiDistance;
pub use level::{ArcLevel, Edge, LevelGraph};
pub mod aubry;

pub use aubry::{
    aubry, check_subsolution, critical_value, critical_value_with, predicted_limit, solve_eikonal, AubryData,
    CriticalValue, Prediction, Regime, StaticAnalysis, StaticClass, SubsolutionViolation, LEVEL_TOL,
};
