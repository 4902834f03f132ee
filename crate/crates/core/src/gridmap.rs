//! Discrete city map: named landmarks on a rectangular cell grid, with
//! JSON load/save. Maps are immutable once loaded; every other module
//! reads from them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("failed to read map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse map JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("map dimensions must be positive, got {width}x{height}")]
    BadDimensions { width: i64, height: i64 },
    #[error("duplicate landmark id {0:?}")]
    DuplicateLandmark(String),
    #[error("landmark {id:?} has cell ({x}, {y}) outside {width}x{height} map")]
    CellOutOfBounds { id: String, x: i64, y: i64, width: u32, height: u32 },
    #[error("landmark {id:?} has duplicate cell ({x}, {y})")]
    DuplicateCell { id: String, x: i64, y: i64 },
    #[error("landmark {0:?} has no cells")]
    EmptyLandmark(String),
    #[error("landmark {id:?} synonym {synonym:?} is not lowercase")]
    SynonymNotLowercase { id: String, synonym: String },
    #[error("unknown landmark {0:?}")]
    UnknownLandmark(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandmarkKind {
    Building,
    Street,
}

/// A named map feature occupying one or more grid cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Landmark {
    pub id: String,
    pub kind: LandmarkKind,
    pub synonyms: Vec<String>,
    /// Sorted, deduplicated (x, y) cells.
    cells: Vec<(i32, i32)>,
}

impl Landmark {
    pub fn new(
        id: impl Into<String>,
        kind: LandmarkKind,
        synonyms: Vec<String>,
        mut cells: Vec<(i32, i32)>,
    ) -> Result<Self, MapError> {
        let id = id.into();
        if cells.is_empty() {
            return Err(MapError::EmptyLandmark(id));
        }
        cells.sort_unstable();
        for w in cells.windows(2) {
            if w[0] == w[1] {
                return Err(MapError::DuplicateCell { id, x: w[0].0 as i64, y: w[0].1 as i64 });
            }
        }
        Ok(Landmark { id, kind, synonyms, cells })
    }

    pub fn cells(&self) -> &[(i32, i32)] {
        &self.cells
    }

    pub fn contains_cell(&self, cell: (i32, i32)) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    /// Arithmetic mean of the landmark's cell coordinates.
    pub fn center_of_mass(&self) -> Point {
        let n = self.cells.len() as f64;
        let (sx, sy) = self
            .cells
            .iter()
            .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x as f64, ay + y as f64));
        Point::new(sx / n, sy / n)
    }

    /// Cell of this landmark closest to `p` in Euclidean distance, together
    /// with that distance. Ties break toward the lexicographically smallest
    /// (x, y) cell, which is the first match in the sorted cell list.
    pub fn closest_cell(&self, p: Point) -> ((i32, i32), f64) {
        let mut best = self.cells[0];
        let mut best_d2 = f64::INFINITY;
        for &(x, y) in &self.cells {
            let d2 = (x as f64 - p.x).powi(2) + (y as f64 - p.y).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = (x, y);
            }
        }
        (best, best_d2.sqrt())
    }
}

/// Discrete 2D city map with named landmarks.
///
/// Immutable after load; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub cell_size_m: f64,
    landmarks: BTreeMap<String, Landmark>,
}

pub const DEFAULT_MAP_SIDE: u32 = 41;
pub const DEFAULT_CELL_SIZE_M: f64 = 5.0;

impl GridMap {
    pub fn new(
        name: impl Into<String>,
        width: u32,
        height: u32,
        cell_size_m: f64,
        landmarks: Vec<Landmark>,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::BadDimensions { width: width as i64, height: height as i64 });
        }
        let mut by_id = BTreeMap::new();
        for lm in landmarks {
            for &(x, y) in lm.cells() {
                if x < 0 || y < 0 || x as u32 >= width || y as u32 >= height {
                    return Err(MapError::CellOutOfBounds {
                        id: lm.id.clone(),
                        x: x as i64,
                        y: y as i64,
                        width,
                        height,
                    });
                }
            }
            for syn in &lm.synonyms {
                if syn.chars().any(|c| c.is_uppercase()) {
                    return Err(MapError::SynonymNotLowercase {
                        id: lm.id.clone(),
                        synonym: syn.clone(),
                    });
                }
            }
            let id = lm.id.clone();
            if by_id.insert(id.clone(), lm).is_some() {
                return Err(MapError::DuplicateLandmark(id));
            }
        }
        Ok(GridMap { name: name.into(), width, height, cell_size_m, landmarks: by_id })
    }

    pub fn landmarks(&self) -> impl Iterator<Item = &Landmark> {
        self.landmarks.values()
    }

    pub fn landmark(&self, id: &str) -> Option<&Landmark> {
        self.landmarks.get(id)
    }

    pub fn require_landmark(&self, id: &str) -> Result<&Landmark, MapError> {
        self.landmark(id).ok_or_else(|| MapError::UnknownLandmark(id.to_string()))
    }

    pub fn landmark_count(&self) -> usize {
        self.landmarks.len()
    }

    pub fn in_bounds(&self, cell: (i32, i32)) -> bool {
        cell.0 >= 0 && cell.1 >= 0 && (cell.0 as u32) < self.width && (cell.1 as u32) < self.height
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Flat index of an in-bounds cell, row-major.
    pub fn cell_index(&self, cell: (i32, i32)) -> usize {
        debug_assert!(self.in_bounds(cell));
        cell.1 as usize * self.width as usize + cell.0 as usize
    }

    pub fn index_cell(&self, idx: usize) -> (i32, i32) {
        ((idx % self.width as usize) as i32, (idx / self.width as usize) as i32)
    }

    /// Union of all street-landmark cells, sorted.
    pub fn street_cells(&self) -> Vec<(i32, i32)> {
        let mut cells: Vec<(i32, i32)> = self
            .landmarks
            .values()
            .filter(|lm| lm.kind == LandmarkKind::Street)
            .flat_map(|lm| lm.cells().iter().copied())
            .collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }

    pub fn buildings(&self) -> impl Iterator<Item = &Landmark> {
        self.landmarks.values().filter(|lm| lm.kind == LandmarkKind::Building)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MapError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, MapError> {
        let file: MapFile = serde_json::from_str(text)?;
        file.into_map()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MapError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = MapFile::from_map(self);
        serde_json::to_string_pretty(&file).expect("map serialization cannot fail")
    }

    /// Rotate the map counterclockwise by `quarters` × 90° about the grid.
    /// Used for exact right-angle training augmentation.
    pub fn rotated_quarters(&self, quarters: u32) -> GridMap {
        let q = quarters % 4;
        if q == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as i32, self.height as i32);
        let rot = |(x, y): (i32, i32)| -> (i32, i32) {
            match q {
                1 => (h - 1 - y, x),
                2 => (w - 1 - x, h - 1 - y),
                _ => (y, w - 1 - x),
            }
        };
        let landmarks = self
            .landmarks
            .values()
            .map(|lm| {
                let cells = lm.cells().iter().map(|&c| rot(c)).collect();
                Landmark::new(lm.id.clone(), lm.kind, lm.synonyms.clone(), cells)
                    .expect("rotation preserves landmark validity")
            })
            .collect();
        let (nw, nh) = if q % 2 == 1 { (self.height, self.width) } else { (self.width, self.height) };
        GridMap::new(format!("{}#rot{}", self.name, q * 90), nw, nh, self.cell_size_m, landmarks)
            .expect("rotation preserves map validity")
    }
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    name: String,
    width: u32,
    height: u32,
    cell_size_m: f64,
    landmarks: Vec<LandmarkFile>,
}

#[derive(Serialize, Deserialize)]
struct LandmarkFile {
    id: String,
    kind: LandmarkKind,
    synonyms: Vec<String>,
    cells: Vec<(i32, i32)>,
}

impl MapFile {
    fn into_map(self) -> Result<GridMap, MapError> {
        let landmarks = self
            .landmarks
            .into_iter()
            .map(|lm| Landmark::new(lm.id, lm.kind, lm.synonyms, lm.cells))
            .collect::<Result<Vec<_>, _>>()?;
        GridMap::new(self.name, self.width, self.height, self.cell_size_m, landmarks)
    }

    fn from_map(map: &GridMap) -> Self {
        MapFile {
            name: map.name.clone(),
            width: map.width,
            height: map.height,
            cell_size_m: map.cell_size_m,
            landmarks: map
                .landmarks
                .values()
                .map(|lm| LandmarkFile {
                    id: lm.id.clone(),
                    kind: lm.kind,
                    synonyms: lm.synonyms.clone(),
                    cells: lm.cells().to_vec(),
                })
                .collect(),
        }
    }
}
