//! Throwaway diagnostic: street visibility inside the 28x28 egocentric
//! crop for the crossval city seeds.

use citysearch_core::foref::synth_annotate_base;
use citysearch_core::foref::ModelKind;
use citysearch_core::gridmap::LandmarkKind;
use citysearch_core::harness::{generate_city_with, CityGenConfig};
use citysearch_core::seeding::derive_seed;

fn main() {
    for c in 0..5u32 {
        let seed = derive_seed(0, &["city", &c.to_string()]);
        let map = generate_city_with(seed, &CityGenConfig::dense(41, 41)).unwrap();
        let streets: Vec<(i32, i32)> = map
            .landmarks()
            .filter(|lm| lm.kind == LandmarkKind::Street)
            .flat_map(|lm| lm.cells().iter().copied())
            .collect();
        let n_streets = map.landmarks().filter(|lm| lm.kind == LandmarkKind::Street).count();
        let mut dists: Vec<f64> = Vec::new();
        let mut edge_crops = 0usize;
        for b in map.buildings() {
            let com = b.center_of_mass();
            let d = streets
                .iter()
                .map(|&(x, y)| ((x as f64 - com.x).powi(2) + (y as f64 - com.y).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            dists.push(d);
            let cx = com.x.round() as i32;
            let cy = com.y.round() as i32;
            if cx < 14 || cy < 14 || cx + 13 >= 41 || cy + 13 >= 41 {
                edge_crops += 1;
            }
            let base = synth_annotate_base(&map, &b.id, ModelKind::Front).unwrap();
            if d > 12.0 {
                println!(
                    "  city {c} building {} nearest street {:.1} cells, base {:.2} rad",
                    b.id, d, base
                );
            }
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = dists.len();
        println!(
            "city {c}: {} buildings, {} streets, nearest-street dist median {:.1} max {:.1}, >12: {}, crops touching edge: {}/{}",
            n,
            n_streets,
            dists[n / 2],
            dists[n - 1],
            dists.iter().filter(|&&d| d > 12.0).count(),
            edge_crops,
            n
        );
    }
}
