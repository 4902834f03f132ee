//! Seeded synthetic city maps: street corridors plus named rectangular
//! buildings, none overlapping.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::gridmap::{GridMap, Landmark, LandmarkKind};
use crate::seeding::derive_seed;

use super::HarnessError;

/// Names avoid every relation keyword so generated sentences parse back
/// to exactly the tuples they were built from.
const BUILDING_POOL: &[(&str, &[&str])] = &[
    ("Belmont", &["belmont apartments"]),
    ("HiLo", &["hi-lo", "hilo market"]),
    ("Walmart", &["walmart supercenter"]),
    ("KwikStop", &["kwik stop"]),
    ("Orpheum", &["orpheum theater"]),
    ("Lakeview", &["lakeview condos"]),
    ("Greyhound", &["greyhound station"]),
    ("CityHall", &["city hall"]),
    ("Marina", &["marina tower"]),
    ("Pemberton", &["pemberton library"]),
    ("Vogue", &["vogue cinema"]),
    ("Harborview", &["harborview clinic"]),
    ("Falcon", &["falcon garage"]),
    ("Maplewood", &["maplewood school"]),
    ("Stellar", &["stellar gym"]),
    ("Rosetta", &["rosetta bakery"]),
    ("Quarry", &["quarry works"]),
    ("IvyFlorist", &["ivy florist"]),
    ("Bluebird", &["bluebird diner"]),
    ("Cascade", &["cascade laundry"]),
    ("Drummond", &["drummond hotel"]),
    ("Fairbanks", &["fairbanks museum"]),
    ("Juniper", &["juniper lofts"]),
    ("Orchard", &["orchard foods"]),
];

const STREET_POOL: &[(&str, &str)] = &[
    ("MainSt", "main street"),
    ("OakAve", "oak avenue"),
    ("ElmSt", "elm street"),
    ("PineAve", "pine avenue"),
    ("CedarSt", "cedar street"),
    ("RiverRd", "river road"),
    ("LakeDr", "lake drive"),
    ("MillLn", "mill lane"),
];

const MIN_SIDE: u32 = 20;
const MAX_BUILDING_ATTEMPTS: usize = 400;

/// Landmark density knobs for [`generate_city_with`]. Street counts are
/// capped by the street name pool and building counts by the building
/// name pool.
#[derive(Debug, Clone)]
pub struct CityGenConfig {
    pub width: u32,
    pub height: u32,
    pub min_streets: usize,
    pub max_streets: usize,
    pub min_buildings: usize,
    pub max_buildings: usize,
}

impl CityGenConfig {
    /// The default density: 2..=4 streets and 8..=15 buildings.
    pub fn standard(width: u32, height: u32) -> Self {
        CityGenConfig {
            width,
            height,
            min_streets: 2,
            max_streets: 4,
            min_buildings: 8,
            max_buildings: 15,
        }
    }

    /// Street-rich density for frame-of-reference training data: every
    /// building ends up near a visible street corridor.
    pub fn dense(width: u32, height: u32) -> Self {
        CityGenConfig {
            width,
            height,
            min_streets: 4,
            max_streets: 5,
            min_buildings: 18,
            max_buildings: 24,
        }
    }
}

/// Generates a deterministic synthetic city: 2..=4 axis-aligned street
/// corridors (1..=2 cells wide) and 8..=15 non-overlapping buildings
/// (2x2 to 5x5), all named from fixed pools. Identical seeds produce
/// byte-identical maps.
pub fn generate_city(seed: u64, width: u32, height: u32) -> Result<GridMap, HarnessError> {
    generate_city_with(seed, &CityGenConfig::standard(width, height))
}

/// [`generate_city`] with configurable landmark density.
pub fn generate_city_with(seed: u64, config: &CityGenConfig) -> Result<GridMap, HarnessError> {
    let (width, height) = (config.width, config.height);
    if width < MIN_SIDE || height < MIN_SIDE {
        return Err(HarnessError::MapTooSmall { width, height });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["citygen"]));
    let (w, h) = (width as i32, height as i32);
    let mut occupied = vec![false; (width * height) as usize];
    let mut landmarks = Vec::new();

    let mut street_names: Vec<usize> = (0..STREET_POOL.len()).collect();
    street_names.shuffle(&mut rng);
    let n_streets =
        rng.random_range(config.min_streets..=config.max_streets.min(STREET_POOL.len()));
    let mut used_lines: Vec<(bool, i32, i32)> = Vec::new();
    for &name_idx in street_names.iter().take(n_streets) {
        let horizontal = rng.random::<bool>();
        let span = rng.random_range(1..=2i32);
        let limit = if horizontal { h } else { w };
        // retry a few times to avoid stacking corridors on the same rows
        let mut start = rng.random_range(2..limit - 1 - span);
        for _ in 0..8 {
            let clash = used_lines.iter().any(|&(o, s, sp)| {
                o == horizontal && start < s + sp + 1 && s < start + span + 1
            });
            if !clash {
                break;
            }
            start = rng.random_range(2..limit - 1 - span);
        }
        used_lines.push((horizontal, start, span));
        let mut cells = Vec::new();
        for k in 0..span {
            for t in 0..if horizontal { w } else { h } {
                let (x, y) = if horizontal { (t, start + k) } else { (start + k, t) };
                cells.push((x, y));
                occupied[(y * w + x) as usize] = true;
            }
        }
        let (id, synonym) = STREET_POOL[name_idx];
        landmarks.push(Landmark::new(id, LandmarkKind::Street, vec![synonym.to_string()], cells)?);
    }

    let mut building_names: Vec<usize> = (0..BUILDING_POOL.len()).collect();
    building_names.shuffle(&mut rng);
    let n_buildings =
        rng.random_range(config.min_buildings..=config.max_buildings.min(BUILDING_POOL.len()));
    let mut placed = 0;
    for &name_idx in building_names.iter() {
        if placed == n_buildings {
            break;
        }
        let mut footprint: Option<Vec<(i32, i32)>> = None;
        for attempt in 0..MAX_BUILDING_ATTEMPTS {
            // late attempts shrink toward 2x2, which always fits somewhere
            let cap = if attempt < MAX_BUILDING_ATTEMPTS / 2 { 5 } else { 2 };
            let bw = rng.random_range(2..=cap);
            let bh = rng.random_range(2..=cap);
            let x0 = rng.random_range(1..w - bw);
            let y0 = rng.random_range(1..h - bh);
            let cells: Vec<(i32, i32)> =
                (0..bh).flat_map(|dy| (0..bw).map(move |dx| (x0 + dx, y0 + dy))).collect();
            if cells.iter().all(|&(x, y)| !occupied[(y * w + x) as usize]) {
                footprint = Some(cells);
                break;
            }
        }
        let Some(cells) = footprint else { continue };
        for &(x, y) in &cells {
            occupied[(y * w + x) as usize] = true;
        }
        let (id, synonyms) = BUILDING_POOL[name_idx];
        let synonyms = synonyms.iter().map(|s| s.to_string()).collect();
        landmarks.push(Landmark::new(id, LandmarkKind::Building, synonyms, cells)?);
        placed += 1;
    }

    Ok(GridMap::new(format!("city-{seed}"), width, height, 1.0, landmarks)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn same_seed_gives_byte_identical_json() {
        let a = generate_city(12, 41, 41).unwrap();
        let b = generate_city(12, 41, 41).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn five_seeds_give_pairwise_distinct_landmark_sets() {
        let sets: Vec<BTreeSet<String>> = (0..5)
            .map(|seed| {
                generate_city(seed, 41, 41)
                    .unwrap()
                    .landmarks()
                    .map(|lm| format!("{}@{:?}", lm.id, lm.cells()[0]))
                    .collect()
            })
            .collect();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                assert_ne!(sets[i], sets[j], "seeds {i} and {j} collide");
            }
        }
    }

    #[test]
    fn generated_cities_respect_the_placement_contract() {
        for seed in 0..10 {
            let map = generate_city(seed, 41, 41).unwrap();
            let streets: Vec<_> =
                map.landmarks().filter(|lm| lm.kind == LandmarkKind::Street).collect();
            let buildings: Vec<_> = map.buildings().collect();
            assert!((2..=4).contains(&streets.len()), "seed {seed}: {} streets", streets.len());
            assert!(
                (8..=15).contains(&buildings.len()),
                "seed {seed}: {} buildings",
                buildings.len()
            );
            for b in &buildings {
                let xs: BTreeSet<i32> = b.cells().iter().map(|c| c.0).collect();
                let ys: BTreeSet<i32> = b.cells().iter().map(|c| c.1).collect();
                let (bw, bh) = (xs.len(), ys.len());
                assert!((2..=5).contains(&bw) && (2..=5).contains(&bh));
                assert_eq!(b.cells().len(), bw * bh, "seed {seed}: {} not a rectangle", b.id);
            }
            // buildings never share a cell with each other or a street
            let mut seen: BTreeSet<(i32, i32)> = BTreeSet::new();
            for lm in streets.iter() {
                seen.extend(lm.cells().iter().copied());
            }
            for b in &buildings {
                for cell in b.cells() {
                    assert!(seen.insert(*cell), "seed {seed}: overlap at {cell:?}");
                }
            }
        }
    }

    #[test]
    fn dense_config_raises_landmark_counts() {
        for seed in 0..5 {
            let map = generate_city_with(seed, &CityGenConfig::dense(41, 41)).unwrap();
            let streets = map.landmarks().filter(|lm| lm.kind == LandmarkKind::Street).count();
            let buildings = map.buildings().count();
            assert!((4..=5).contains(&streets), "seed {seed}: {streets} streets");
            assert!((18..=24).contains(&buildings), "seed {seed}: {buildings} buildings");
        }
    }

    #[test]
    fn standard_config_matches_the_two_arg_form() {
        let a = generate_city(9, 31, 31).unwrap();
        let b = generate_city_with(9, &CityGenConfig::standard(31, 31)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn tiny_dimensions_are_rejected() {
        assert!(matches!(
            generate_city(0, 10, 41),
            Err(HarnessError::MapTooSmall { width: 10, height: 41 })
        ));
    }
}
