//! Synthetic benchmark harness: seeded city and description generation,
//! baseline prior wiring, trial execution, and suite reports.

mod citygen;
mod langgen;
mod suite;
mod trial;

pub use citygen::{generate_city, generate_city_with, CityGenConfig};
pub use langgen::{generate_language, target_vocabulary, GeneratedLanguage, ORACLE_BASE_SEED};
pub use suite::{
    mean_ci, paired_mean_ci, run_suite, ConditionStats, PrepositionStats, SuiteConfig,
    SuiteReport, TrialFailure,
};
pub use trial::{
    build_prior, harness_vocabulary, run_trial, run_trial_configured, run_trial_logged,
    TrialResult,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Map(#[from] crate::gridmap::MapError),
    #[error(transparent)]
    Parse(#[from] crate::langparse::ParseError),
    #[error(transparent)]
    Spatial(#[from] crate::spatial::SpatialError),
    #[error(transparent)]
    Mos(#[from] crate::mos::MosError),
    #[error(transparent)]
    Planner(#[from] crate::planner::PlannerError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid suite config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("city generation needs at least 20x20 cells, got {width}x{height}")]
    MapTooSmall { width: u32, height: u32 },
    #[error("map {0} has no buildings to describe")]
    NoBuildings(String),
    #[error("suite config: {0}")]
    BadSuite(&'static str),
}
