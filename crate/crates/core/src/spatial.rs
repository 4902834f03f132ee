//! Spatial relation likelihoods: turns extracted tuples plus reference
//! directions into a normalized probability field over map cells.
//!
//! Per-cell weight for one tuple is dot_factor * exp(-dist^2 / (2 sigma^2)),
//! where dist is measured to the ground's closest cell and sigma scales
//! with the ground's footprint. A figure's tuples multiply cell-wise and
//! the product is normalized, then blended with a uniform floor.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{unit_vector, wrap_angle, Point};
use crate::gridmap::{GridMap, Landmark, MapError};
use crate::langparse::{ForKind, ParseError, RelationLexicon, SpatialTuple};

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("relation {0:?} carries no direction")]
    NonDirectional(String),
    #[error("relation {0:?} needs a frame of reference but none was supplied")]
    MissingFrame(String),
    #[error("relation {0:?} is not absolute")]
    NotAbsolute(String),
    #[error("frame-of-reference provider failed for ({kind:?}, {ground:?}): {message}")]
    Provider { kind: &'static str, ground: String, message: String },
    #[error("tuples must share one figure, found {0:?} and {1:?}")]
    MixedFigures(String, String),
}

/// Reference origin and direction for interpreting a directional relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOfReference {
    pub origin: Point,
    /// Radians in [0, 2pi).
    pub theta: f64,
}

impl FrameOfReference {
    pub fn new(origin: Point, theta: f64) -> Self {
        FrameOfReference { origin, theta: wrap_angle(theta) }
    }
}

/// How the directional factor treats the sign of u . v.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DotMode {
    /// |u . v| with u from the cell toward the ground's closest cell.
    /// Antonyms produce identical fields in this mode.
    Abs,
    /// max(0, u . v) with u from the ground's center of mass toward the
    /// cell, so antonym half-planes are disjoint.
    #[default]
    Rectified,
}

/// Tuning for the per-relation weight computation.
#[derive(Debug, Clone)]
pub struct SpatialModelConfig {
    pub dot_mode: DotMode,
    /// Weight on the normalized product field; the rest spreads uniformly.
    pub mixture_weight: f64,
    /// Overrides of the per-relation falloff multipliers; relations not
    /// listed use the lexicon defaults.
    pub sigma_multipliers: BTreeMap<String, f64>,
}

impl Default for SpatialModelConfig {
    fn default() -> Self {
        SpatialModelConfig {
            dot_mode: DotMode::default(),
            mixture_weight: 0.9,
            sigma_multipliers: BTreeMap::new(),
        }
    }
}

impl SpatialModelConfig {
    pub fn sigma_multiplier(&self, relation: &str) -> Result<f64, SpatialError> {
        if let Some(&m) = self.sigma_multipliers.get(relation) {
            return Ok(m);
        }
        Ok(RelationLexicon::standard().sigma_multiplier(relation)?)
    }

    /// Falloff width for `relation` against `ground`, in cell units:
    /// multiplier * (1 + sqrt(ground area)).
    pub fn base_sigma(&self, relation: &str, ground: &Landmark) -> Result<f64, SpatialError> {
        let mult = self.sigma_multiplier(relation)?;
        Ok(mult * (1.0 + (ground.cells().len() as f64).sqrt()))
    }
}

/// Intermediate quantities of one weight evaluation, for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct RelationWeightTrace {
    pub u: Option<(f64, f64)>,
    pub v: Option<(f64, f64)>,
    pub dist: f64,
    pub gaussian: f64,
    pub dot_factor: f64,
}

/// Supplies predicted frames of reference for relative relations.
/// Absolute relations never consult the provider.
pub trait ForProvider {
    fn frame_for(
        &self,
        kind: ForKind,
        ground: &str,
        map: &GridMap,
    ) -> Result<FrameOfReference, SpatialError>;
}

/// Fixed lookup table of frames, keyed by (kind, ground id).
#[derive(Debug, Default, Clone)]
pub struct FixedForProvider {
    frames: BTreeMap<(&'static str, String), FrameOfReference>,
}

impl FixedForProvider {
    pub fn insert(&mut self, kind: ForKind, ground: impl Into<String>, frame: FrameOfReference) {
        self.frames.insert((kind_tag(kind), ground.into()), frame);
    }
}

impl ForProvider for FixedForProvider {
    fn frame_for(
        &self,
        kind: ForKind,
        ground: &str,
        _map: &GridMap,
    ) -> Result<FrameOfReference, SpatialError> {
        self.frames.get(&(kind_tag(kind), ground.to_string())).copied().ok_or_else(|| {
            SpatialError::Provider {
                kind: kind_tag(kind),
                ground: ground.to_string(),
                message: "no frame registered".to_string(),
            }
        })
    }
}

fn kind_tag(kind: ForKind) -> &'static str {
    match kind {
        ForKind::RelativeFront => "front",
        ForKind::RelativeLeft => "left",
        ForKind::Absolute => "absolute",
        ForKind::None => "none",
    }
}

/// Unit vector encoding the semantics of a directional relation. Relative
/// relations read the supplied frame; absolute ones use the cardinal
/// table. Antonyms (behind, right) rotate their partner's direction by pi.
pub fn relation_direction(
    relation: &str,
    frame: Option<&FrameOfReference>,
) -> Result<(f64, f64), SpatialError> {
    let lex = RelationLexicon::standard();
    let info = lex
        .info(relation)
        .ok_or_else(|| ParseError::UnknownRelation(relation.to_string()))
        .map_err(SpatialError::from)?;
    if !info.requires_for {
        return Err(SpatialError::NonDirectional(relation.to_string()));
    }
    let theta = match info.for_kind {
        ForKind::Absolute => info.absolute_theta.expect("absolute relations carry an angle"),
        ForKind::RelativeFront | ForKind::RelativeLeft => {
            let frame = frame.ok_or_else(|| SpatialError::MissingFrame(relation.to_string()))?;
            // The models predict the "front" / "left" direction; the
            // antonym in each pair points the opposite way.
            if matches!(relation, "behind" | "right") {
                frame.theta + std::f64::consts::PI
            } else {
                frame.theta
            }
        }
        ForKind::None => unreachable!("requires_for implies a direction source"),
    };
    Ok((theta.cos(), theta.sin()))
}

/// Origin (ground center of mass) and fixed angle for an absolute relation.
pub fn absolute_for(
    relation: &str,
    ground: &str,
    map: &GridMap,
) -> Result<FrameOfReference, SpatialError> {
    let lex = RelationLexicon::standard();
    let info = lex
        .info(relation)
        .ok_or_else(|| ParseError::UnknownRelation(relation.to_string()))
        .map_err(SpatialError::from)?;
    let theta = match info.for_kind {
        ForKind::Absolute => info.absolute_theta.expect("absolute relations carry an angle"),
        _ => return Err(SpatialError::NotAbsolute(relation.to_string())),
    };
    let lm = map.require_landmark(ground)?;
    Ok(FrameOfReference::new(lm.center_of_mass(), theta))
}

/// Likelihood weight in [0, 1] of `cell` under one tuple, with the
/// intermediate quantities. Cells inside the ground (dist 0) skip the
/// directional factor.
pub fn relation_likelihood(
    tuple: &SpatialTuple,
    frame: Option<&FrameOfReference>,
    cell: (i32, i32),
    map: &GridMap,
    config: &SpatialModelConfig,
) -> Result<(f64, RelationWeightTrace), SpatialError> {
    let lex = RelationLexicon::standard();
    let info = lex
        .info(&tuple.relation)
        .ok_or_else(|| ParseError::UnknownRelation(tuple.relation.clone()))
        .map_err(SpatialError::from)?;
    let ground = map.require_landmark(&tuple.ground)?;
    let here = Point::new(cell.0 as f64, cell.1 as f64);
    let (closest, dist) = ground.closest_cell(here);
    let sigma = config.base_sigma(&tuple.relation, ground)?;
    let gaussian = (-dist * dist / (2.0 * sigma * sigma)).exp();

    let mut trace = RelationWeightTrace { u: None, v: None, dist, gaussian, dot_factor: 1.0 };
    if info.requires_for && dist > 0.0 {
        let v = relation_direction(&tuple.relation, frame)?;
        trace.v = Some(v);
        let u = match config.dot_mode {
            DotMode::Abs => {
                unit_vector(here, Point::new(closest.0 as f64, closest.1 as f64))
            }
            DotMode::Rectified => unit_vector(ground.center_of_mass(), here),
        };
        match u {
            Some(u) => {
                trace.u = Some(u);
                let dot = u.0 * v.0 + u.1 * v.1;
                trace.dot_factor = match config.dot_mode {
                    DotMode::Abs => dot.abs(),
                    DotMode::Rectified => dot.max(0.0),
                };
            }
            // Degenerate geometry (cell at the reference point): treat as
            // inside the ground.
            None => trace.dot_factor = 1.0,
        }
    }
    Ok((trace.dot_factor * gaussian, trace))
}

/// Normalized probability field over all map cells, row-major.
pub type Field = Vec<f64>;

pub fn uniform_field(map: &GridMap) -> Field {
    vec![1.0 / map.cell_count() as f64; map.cell_count()]
}

/// Resolves the frame for one tuple: none for proximity relations, the
/// cardinal table for absolute ones, the provider otherwise.
pub fn frame_for_tuple(
    tuple: &SpatialTuple,
    map: &GridMap,
    provider: &dyn ForProvider,
) -> Result<Option<FrameOfReference>, SpatialError> {
    let (requires, kind) = RelationLexicon::standard().requires_for(&tuple.relation)?;
    if !requires {
        return Ok(None);
    }
    match kind {
        ForKind::Absolute => Ok(Some(absolute_for(&tuple.relation, &tuple.ground, map)?)),
        ForKind::RelativeFront | ForKind::RelativeLeft => {
            Ok(Some(provider.frame_for(kind, &tuple.ground, map)?))
        }
        ForKind::None => unreachable!("requires_for implies a direction source"),
    }
}

/// Combines one figure's tuples into a normalized field: cell-wise product
/// of tuple weights, normalized, then mixed with a uniform floor. A
/// vanishing product (or no tuples) yields the uniform field.
pub fn language_likelihood_field(
    tuples: &[SpatialTuple],
    map: &GridMap,
    provider: &dyn ForProvider,
    config: &SpatialModelConfig,
) -> Result<Field, SpatialError> {
    if let Some(first) = tuples.first() {
        if let Some(other) = tuples.iter().find(|t| t.figure != first.figure) {
            return Err(SpatialError::MixedFigures(first.figure.clone(), other.figure.clone()));
        }
    }
    let n = map.cell_count();
    let mut raw = vec![1.0_f64; n];
    for tuple in tuples {
        let frame = frame_for_tuple(tuple, map, provider)?;
        for idx in 0..n {
            let cell = map.index_cell(idx);
            let (w, _) = relation_likelihood(tuple, frame.as_ref(), cell, map, config)?;
            raw[idx] *= w;
        }
    }
    let total: f64 = raw.iter().sum();
    let lambda = config.mixture_weight;
    let floor = (1.0 - lambda) / n as f64;
    let field = if total < 1e-12 {
        uniform_field(map)
    } else {
        raw.into_iter().map(|w| lambda * w / total + floor).collect()
    };
    Ok(field)
}

/// Writes a field as `x,y,probability` CSV rows (row-major order, header
/// included), with 12 significant digits.
pub fn field_to_csv(field: &Field, map: &GridMap) -> String {
    let mut out = String::from("x,y,probability\n");
    for (idx, p) in field.iter().enumerate() {
        let (x, y) = map.index_cell(idx);
        out.push_str(&format!("{x},{y},{p:.12e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{Landmark, LandmarkKind};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn map_with(cells: Vec<(i32, i32)>) -> GridMap {
        let lm = Landmark::new(
            "G",
            LandmarkKind::Building,
            vec!["g".to_string()],
            cells,
        )
        .unwrap();
        GridMap::new("t", 21, 21, 5.0, vec![lm]).unwrap()
    }

    fn near(ground: &str) -> SpatialTuple {
        SpatialTuple::new("F", "near", ground)
    }

    #[test]
    fn direction_examples() {
        let (x, y) = relation_direction("north", None).unwrap();
        assert!(x.abs() < 1e-12 && (y - 1.0).abs() < 1e-12);

        let frame = FrameOfReference::new(Point::new(0.0, 0.0), 0.0);
        let (x, y) = relation_direction("behind", Some(&frame)).unwrap();
        assert!((x + 1.0).abs() < 1e-12 && y.abs() < 1e-12);

        let (x, y) = relation_direction("southeast", None).unwrap();
        let r = 2.0_f64.sqrt() / 2.0;
        assert!((x - r).abs() < 1e-12 && (y + r).abs() < 1e-12);

        assert!(matches!(
            relation_direction("near", None),
            Err(SpatialError::NonDirectional(_))
        ));
        assert!(matches!(
            relation_direction("front", None),
            Err(SpatialError::MissingFrame(_))
        ));
    }

    #[test]
    fn absolute_for_examples() {
        let map = map_with(vec![(5, 5)]);
        let f = absolute_for("north", "G", &map).unwrap();
        assert_eq!(f.origin, Point::new(5.0, 5.0));
        assert!((f.theta - FRAC_PI_2).abs() < 1e-12);
        assert!((absolute_for("west", "G", &map).unwrap().theta - PI).abs() < 1e-12);
        assert!(
            (absolute_for("northeast", "G", &map).unwrap().theta - PI / 4.0).abs() < 1e-12
        );
        assert!(matches!(
            absolute_for("front", "G", &map),
            Err(SpatialError::NotAbsolute(_))
        ));
    }

    #[test]
    fn proximity_weight_matches_closed_form() {
        let map = map_with(vec![(5, 5)]);
        let config = SpatialModelConfig::default();
        let ground = map.landmark("G").unwrap();
        let sigma = config.base_sigma("near", ground).unwrap();
        assert!((sigma - 2.0).abs() < 1e-12);

        let (w, _) = relation_likelihood(&near("G"), None, (5, 5), &map, &config).unwrap();
        assert!((w - 1.0).abs() < 1e-12);

        // a cell exactly sigma away
        let (w, trace) =
            relation_likelihood(&near("G"), None, (7, 5), &map, &config).unwrap();
        assert!((trace.dist - sigma).abs() < 1e-12);
        assert!((w - (-0.5_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rectified_behind_splits_half_planes() {
        // 2x2 ground, COM (5.5, 5.5); sigma = 2 * (1 + 2) = 6
        let map = map_with(vec![(5, 5), (6, 5), (5, 6), (6, 6)]);
        let config = SpatialModelConfig::default();
        let frame = FrameOfReference::new(Point::new(5.5, 5.5), 0.0);
        let tuple = SpatialTuple::new("F", "behind", "G");

        // due west of the COM: aligned with "behind" of a frame facing east
        let (w_west, tr) =
            relation_likelihood(&tuple, Some(&frame), (1, 5), &map, &config).unwrap();
        assert!(tr.dot_factor > 0.9);
        assert!(w_west > 0.0);

        let (w_east, tr) =
            relation_likelihood(&tuple, Some(&frame), (10, 5), &map, &config).unwrap();
        assert_eq!(tr.dot_factor, 0.0);
        assert_eq!(w_east, 0.0);
    }

    #[test]
    fn rectified_weight_at_sigma_due_west() {
        // single-cell ground so COM = closest cell = (5, 5), sigma = 4
        let map = map_with(vec![(5, 5)]);
        let config = SpatialModelConfig::default();
        let ground = map.landmark("G").unwrap();
        let sigma = config.base_sigma("behind", ground).unwrap();
        assert!((sigma - 4.0).abs() < 1e-12);
        let frame = FrameOfReference::new(Point::new(5.0, 5.0), 0.0);
        let tuple = SpatialTuple::new("F", "behind", "G");
        let (w, _) =
            relation_likelihood(&tuple, Some(&frame), (1, 5), &map, &config).unwrap();
        assert!((w - (-0.5_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn abs_mode_antonyms_agree_everywhere() {
        let map = map_with(vec![(5, 5), (6, 5)]);
        let config =
            SpatialModelConfig { dot_mode: DotMode::Abs, ..SpatialModelConfig::default() };
        let frame = FrameOfReference::new(Point::new(5.5, 5.0), 1.1);
        let front = SpatialTuple::new("F", "front", "G");
        let behind = SpatialTuple::new("F", "behind", "G");
        for idx in 0..map.cell_count() {
            let cell = map.index_cell(idx);
            let (wf, _) = relation_likelihood(&front, Some(&frame), cell, &map, &config).unwrap();
            let (wb, _) =
                relation_likelihood(&behind, Some(&frame), cell, &map, &config).unwrap();
            assert!((wf - wb).abs() < 1e-12, "cell {cell:?}: {wf} vs {wb}");
        }
    }

    #[test]
    fn rectified_antonyms_are_complementary() {
        let map = map_with(vec![(5, 5)]);
        let config = SpatialModelConfig::default();
        let frame = FrameOfReference::new(Point::new(5.0, 5.0), 0.7);
        let front = SpatialTuple::new("F", "front", "G");
        let behind = SpatialTuple::new("F", "behind", "G");
        for idx in 0..map.cell_count() {
            let cell = map.index_cell(idx);
            let (_, tf) = relation_likelihood(&front, Some(&frame), cell, &map, &config).unwrap();
            let (_, tb) =
                relation_likelihood(&behind, Some(&frame), cell, &map, &config).unwrap();
            if tf.dist == 0.0 {
                continue;
            }
            if tf.dot_factor > 0.0 {
                assert_eq!(tb.dot_factor, 0.0, "cell {cell:?}");
            }
            if tb.dot_factor > 0.0 {
                assert_eq!(tf.dot_factor, 0.0, "cell {cell:?}");
            }
        }
    }

    #[test]
    fn weight_decreases_with_distance() {
        let map = map_with(vec![(0, 10)]);
        let config = SpatialModelConfig::default();
        let mut last = f64::INFINITY;
        for x in 1..20 {
            let (w, _) = relation_likelihood(&near("G"), None, (x, 10), &map, &config).unwrap();
            assert!(w < last, "weight must strictly decrease, x={x}");
            last = w;
        }
    }

    #[test]
    fn empty_tuple_list_gives_uniform_field() {
        let map = map_with(vec![(5, 5)]);
        let provider = FixedForProvider::default();
        let field = language_likelihood_field(
            &[],
            &map,
            &provider,
            &SpatialModelConfig::default(),
        )
        .unwrap();
        let expected = 1.0 / map.cell_count() as f64;
        assert!(field.iter().all(|&p| (p - expected).abs() < 1e-12));
    }

    #[test]
    fn field_normalizes_and_respects_floor() {
        let map = map_with(vec![(5, 5)]);
        let provider = FixedForProvider::default();
        let config = SpatialModelConfig::default();
        let field =
            language_likelihood_field(&[near("G")], &map, &provider, &config).unwrap();
        let sum: f64 = field.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let floor = (1.0 - config.mixture_weight) / map.cell_count() as f64;
        assert!(field.iter().all(|&p| p >= floor - 1e-15));
    }

    #[test]
    fn pure_product_peaks_inside_ground() {
        let map = map_with(vec![(5, 5), (6, 5)]);
        let provider = FixedForProvider::default();
        let config = SpatialModelConfig { mixture_weight: 1.0, ..Default::default() };
        let field =
            language_likelihood_field(&[near("G")], &map, &provider, &config).unwrap();
        let argmax = field
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| map.index_cell(i))
            .unwrap();
        assert!(map.landmark("G").unwrap().contains_cell(argmax));
    }

    #[test]
    fn product_field_matches_brute_force() {
        // independent cell-by-cell recomputation with explicit loops
        let lm_a = Landmark::new("A", LandmarkKind::Building, vec!["a".into()], vec![(2, 2)])
            .unwrap();
        let lm_b = Landmark::new("B", LandmarkKind::Building, vec!["b".into()], vec![(7, 6)])
            .unwrap();
        let map = GridMap::new("t", 10, 10, 5.0, vec![lm_a, lm_b]).unwrap();
        let provider = FixedForProvider::default();
        let config = SpatialModelConfig::default();
        let tuples = vec![near("A"), near("B")];
        let field = language_likelihood_field(&tuples, &map, &provider, &config).unwrap();

        let sigma_a = 2.0; // 1.0 * (1 + sqrt(1))
        let sigma_b = 2.0;
        let mut raw = Vec::new();
        for y in 0..10 {
            for x in 0..10 {
                let da2 = ((x - 2) * (x - 2) + (y - 2) * (y - 2)) as f64;
                let db2 = ((x - 7) * (x - 7) + (y - 6) * (y - 6)) as f64;
                raw.push(
                    (-da2 / (2.0 * sigma_a * sigma_a)).exp()
                        * (-db2 / (2.0 * sigma_b * sigma_b)).exp(),
                );
            }
        }
        let total: f64 = raw.iter().sum();
        for (idx, (&got, &r)) in field.iter().zip(&raw).enumerate() {
            let want = 0.9 * r / total + 0.1 / 100.0;
            assert!((got - want).abs() < 1e-9, "cell {:?}", map.index_cell(idx));
        }
    }

    #[test]
    fn rotation_equivariance_under_quarter_turns() {
        // asymmetric ground so closest-cell ties cannot occur
        let map = map_with(vec![(4, 5), (5, 5), (5, 6)]);
        let config = SpatialModelConfig::default();
        let tuple = SpatialTuple::new("F", "front", "G");
        let theta0 = 0.3;
        let frame0 = FrameOfReference::new(
            map.landmark("G").unwrap().center_of_mass(),
            theta0,
        );
        for q in 1..4u32 {
            let rotated = map.rotated_quarters(q);
            let frame_q = FrameOfReference::new(
                rotated.landmark("G").unwrap().center_of_mass(),
                theta0 + q as f64 * FRAC_PI_2,
            );
            let h = map.height as i32;
            let w = map.width as i32;
            for idx in 0..map.cell_count() {
                let (x, y) = map.index_cell(idx);
                let cell_q = match q {
                    1 => (h - 1 - y, x),
                    2 => (w - 1 - x, h - 1 - y),
                    _ => (y, w - 1 - x),
                };
                let (w0, _) =
                    relation_likelihood(&tuple, Some(&frame0), (x, y), &map, &config).unwrap();
                let (wq, _) =
                    relation_likelihood(&tuple, Some(&frame_q), cell_q, &rotated, &config)
                        .unwrap();
                assert!((w0 - wq).abs() < 1e-9, "q={q} cell=({x},{y}): {w0} vs {wq}");
            }
        }
    }

    #[test]
    fn field_csv_has_header_and_all_cells() {
        let map = map_with(vec![(5, 5)]);
        let field = uniform_field(&map);
        let csv = field_to_csv(&field, &map);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,probability"));
        assert_eq!(lines.count(), map.cell_count());
    }
}
