//! Spatial-language object search on city grid maps.
//!
//! Pipeline: parse a description into (figure, relation, ground) tuples,
//! turn them into a probability field over map cells, seed a search
//! belief with the field, and plan detection actions with Monte Carlo
//! tree search over the filtered belief.

pub mod foref;
pub mod geometry;
pub mod gridmap;
pub mod harness;
pub mod langparse;
pub mod mos;
pub mod planner;
pub mod plot;
pub mod seeding;
pub mod spatial;

pub use geometry::Point;
pub use harness::{
    generate_city, generate_city_with, generate_language, run_suite, run_trial, CityGenConfig,
    HarnessError, SuiteConfig, SuiteReport, TrialResult,
};
pub use gridmap::{GridMap, Landmark, LandmarkKind, MapError};
pub use langparse::{
    extract_tuples, ForKind, RelationLexicon, SpatialLanguageObservation, SpatialTuple,
    Vocabulary,
};
pub use mos::{
    Action, Belief, MosPomdp, MosState, PriorMode, RobotPose, SensorConfig, SensorObservation,
    Sighting, TrialConfig,
};
pub use planner::{run_episode, EpisodeLog, Planner, PlannerConfig};
pub use spatial::{
    language_likelihood_field, relation_likelihood, DotMode, Field, ForProvider,
    FrameOfReference, SpatialModelConfig,
};
