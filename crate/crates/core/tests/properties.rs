//! Randomized invariant checks across the public API: angle arithmetic,
//! field normalization, sensor geometry, belief filtering, parsing
//! robustness, and serialization round trips.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use citysearch_core::foref::OracleForProvider;
use citysearch_core::geometry::{signed_angle_diff, wrap_angle};
use citysearch_core::mos::{RobotPose, TrialConfig, TrialTarget};
use citysearch_core::{
    extract_tuples, generate_city, language_likelihood_field, Belief, GridMap, MosPomdp,
    SensorConfig, SpatialModelConfig, SpatialTuple, Vocabulary,
};

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

fn demo_vocabulary() -> Vocabulary {
    Vocabulary::new(BTreeMap::from([
        ("RedCar".to_string(), vec!["red car".to_string(), "red honda".to_string()]),
        ("BlueTruck".to_string(), vec!["blue truck".to_string()]),
    ]))
}

proptest! {
    #[test]
    fn wrap_angle_lands_in_unit_circle(theta in -1e6f64..1e6) {
        let w = wrap_angle(theta);
        prop_assert!((0.0..TAU).contains(&w), "wrap_angle({theta}) = {w}");
        // wrapping changes the angle by an exact multiple of a full turn
        let turns = (theta - w) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-6);
    }

    #[test]
    fn signed_angle_diff_is_minimal_residual(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let d = signed_angle_diff(a, b);
        prop_assert!((-PI..PI).contains(&d) || d == -PI);
        // adding the difference back to b recovers a up to whole turns
        prop_assert!((wrap_angle(b + d) - wrap_angle(a)).abs() < 1e-6);
    }

    #[test]
    fn signed_angle_diff_ignores_whole_turns(a in 0.0f64..TAU, b in 0.0f64..TAU, k in -3i32..=3) {
        let base = signed_angle_diff(a, b);
        let shifted = signed_angle_diff(a + f64::from(k) * TAU, b);
        prop_assert!((base - shifted).abs() < 1e-6);
    }
}

fn arb_relation() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "near", "front", "behind", "left", "right", "north", "south", "east", "west", "beside",
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn language_fields_normalize_on_generated_cities(
        seed in 0u64..1000,
        rel_a in arb_relation(),
        rel_b in arb_relation(),
        ground_pick in 0usize..8,
    ) {
        let map = generate_city(seed, 25, 25).unwrap();
        let buildings: Vec<_> = map
            .landmarks()
            .filter(|l| l.kind == citysearch_core::LandmarkKind::Building)
            .collect();
        let ga = buildings[ground_pick % buildings.len()].id.clone();
        let gb = buildings[(ground_pick + 1) % buildings.len()].id.clone();
        let tuples = vec![
            SpatialTuple::new("T", rel_a, ga),
            SpatialTuple::new("T", rel_b, gb),
        ];
        let provider = OracleForProvider { base_seed: 7 };
        let field =
            language_likelihood_field(&tuples, &map, &provider, &SpatialModelConfig::default())
                .unwrap();
        let mass: f64 = field.iter().sum();
        prop_assert!((mass - 1.0).abs() < 1e-9, "field mass {mass}");
        prop_assert!(field.iter().all(|p| *p >= 0.0 && p.is_finite()));
    }

    #[test]
    fn fov_grows_with_depth_and_respects_geometry(
        seed in 0u64..500,
        x in 3i32..22,
        y in 3i32..22,
        heading in 0u8..8,
    ) {
        let map = generate_city(seed, 25, 25).unwrap();
        let shallow =
            MosPomdp::new(map.clone(), SensorConfig::with_depth(3), vec!["T".into()]).unwrap();
        let deep =
            MosPomdp::new(map.clone(), SensorConfig::with_depth(5), vec!["T".into()]).unwrap();
        let pose = RobotPose::new(x, y, heading);
        let near = shallow.fov_at(&pose);
        let far = deep.fov_at(&pose);
        for cell in near {
            prop_assert!(far.binary_search(cell).is_ok(), "depth-5 fan lost {cell:?}");
        }
        for &(cx, cy) in far {
            let dx = f64::from(cx - x);
            let dy = f64::from(cy - y);
            prop_assert!((dx * dx + dy * dy).sqrt() <= 5.0 + 1e-9);
            prop_assert!((cx, cy) != (x, y), "fan contains the robot cell");
            let bearing = signed_angle_diff(dy.atan2(dx), pose.heading_radians());
            prop_assert!(bearing.abs() <= std::f64::consts::FRAC_PI_8 + 1e-8);
        }
    }

    #[test]
    fn belief_stays_normalized_under_random_play(
        seed in 0u64..10_000,
        epsilon in 0.0f64..0.5,
    ) {
        let map = generate_city(seed % 40, 22, 22).unwrap();
        let sensor = SensorConfig { epsilon, ..SensorConfig::with_depth(3) };
        let pomdp =
            MosPomdp::new(map.clone(), sensor, vec!["A".into(), "B".into()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut belief =
            Belief::uniform(&map, &["A".into(), "B".into()], RobotPose::new(10, 10, 0));
        let mut state = belief.sampler().unwrap().sample(&mut rng);
        let mut prev_found = state.found.len();
        for _ in 0..12 {
            let actions = pomdp.legal_actions();
            let action = actions[rng.random_range(0..actions.len())].clone();
            let (next, obs, _) = pomdp.step(&state, &action, &mut rng);
            belief = pomdp.belief_update(&belief, &action, &obs);
            prop_assert!(belief.is_normalized(1e-9));
            prop_assert!(next.found.len() >= prev_found, "found set shrank");
            prop_assert_eq!(belief.robot(), next.robot);
            prev_found = next.found.len();
            state = next;
        }
    }

    #[test]
    fn generated_maps_round_trip_through_json(seed in 0u64..2000) {
        let map = generate_city(seed, 21, 28).unwrap();
        let restored = GridMap::from_json(&map.to_json()).unwrap();
        prop_assert_eq!(&map, &restored);
    }

    #[test]
    fn parser_never_panics_and_stays_in_vocabulary(text in "\\PC{0,80}") {
        let map = generate_city(3, 25, 25).unwrap();
        let vocab = demo_vocabulary();
        let obs = extract_tuples(&text, &map, &vocab);
        for tuple in obs.tuples() {
            prop_assert!(vocab.ids().any(|id| id == tuple.figure));
            prop_assert!(map.landmark(&tuple.ground).is_some());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trial_configs_round_trip_through_json(
        seed in 0u64..u64::MAX,
        x in 0i32..40,
        y in 0i32..40,
        heading in 0u8..8,
        depth in prop::sample::select(vec![3u32, 4, 5]),
    ) {
        let config = TrialConfig {
            map: format!("city-{seed}"),
            targets: vec![TrialTarget { id: "T".to_string(), cell: (x, y) }],
            robot: (x, y, heading),
            sensor_depth: depth,
            epsilon: 0.25,
            prior: citysearch_core::mos::PriorMode::Keyword,
            language: "the red car is near the depot".to_string(),
            seed,
            max_steps: 120,
        };
        let restored = TrialConfig::from_json(&config.to_json()).unwrap();
        prop_assert_eq!(config, restored);
    }
}
