//! Shared fixtures for the criterion benches: deterministic maps, beliefs,
//! and models sized like the ones the end-to-end suite uses.

use citysearch_core::foref::{ForefModel, ModelKind};
use citysearch_core::mos::RobotPose;
use citysearch_core::{generate_city, Belief, GridMap, MosPomdp, SensorConfig};

/// A mid-sized generated city, the same shape the end-to-end suite uses.
pub fn bench_map() -> GridMap {
    generate_city(11, 41, 41).expect("bench map generates")
}

/// Uniform single-target belief over the bench map.
pub fn bench_belief(map: &GridMap) -> Belief {
    Belief::uniform(map, &["T".to_string()], RobotPose::new(2, 2, 0))
}

/// One-target problem on the bench map with a depth-3 fan sensor.
pub fn bench_pomdp(map: &GridMap) -> MosPomdp {
    MosPomdp::new(map.clone(), SensorConfig::with_depth(3), vec!["T".to_string()])
        .expect("bench pomdp builds")
}

/// Randomly initialized regressor; forward cost does not depend on weights.
pub fn bench_model() -> ForefModel {
    ForefModel::new(ModelKind::Front, 7)
}
