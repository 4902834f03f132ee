//! Rasterization of map context around a ground landmark into the 28x28
//! intensity images the angle regressor consumes.

use crate::gridmap::{GridMap, LandmarkKind};

use super::{ContextImage, ForefError, ImageVariant};

/// Image side length in pixels; one pixel per map cell.
pub const IMAGE_SIDE: usize = 28;
/// Pixel row/column the ground's center of mass lands on in egocentric
/// variants.
pub const CENTER_PIXEL: usize = 14;

pub const INTENSITY_BACKGROUND: f64 = 1.0;
pub const INTENSITY_GROUND: f64 = 0.6;
pub const INTENSITY_BUILDING: f64 = 0.3;
pub const INTENSITY_STREET: f64 = 0.1;
/// Off-map cells blend into empty ground; a darker sentinel would mimic
/// street intensity in every crop that touches a map edge.
pub const INTENSITY_OFF_MAP: f64 = INTENSITY_BACKGROUND;

/// Renders the context image for `ground_id`.
///
/// Egocentric variants shift the raster so the ground's center of mass
/// sits at pixel (14, 14); CTX crops the central window of the unshifted
/// raster. EGO draws only the ground. Cells outside the map render as
/// background.
pub fn render_context(
    map: &GridMap,
    ground_id: &str,
    variant: ImageVariant,
) -> Result<ContextImage, ForefError> {
    let ground = map.require_landmark(ground_id)?;
    let ground_only = variant == ImageVariant::Ego;

    let w = map.width as i32;
    let h = map.height as i32;
    let mut raster = vec![INTENSITY_BACKGROUND; (w * h) as usize];
    let mut paint = |cells: &[(i32, i32)], intensity: f64| {
        for &(x, y) in cells {
            raster[(y * w + x) as usize] = intensity;
        }
    };
    if !ground_only {
        for lm in map.landmarks() {
            if lm.id == ground_id {
                continue;
            }
            let intensity = match lm.kind {
                LandmarkKind::Street => INTENSITY_STREET,
                LandmarkKind::Building => INTENSITY_BUILDING,
            };
            paint(lm.cells(), intensity);
        }
    }
    paint(ground.cells(), INTENSITY_GROUND);

    let (ox, oy) = match variant {
        ImageVariant::EgoCtx | ImageVariant::Ego => {
            let com = ground.center_of_mass();
            (
                com.x.round() as i32 - CENTER_PIXEL as i32,
                com.y.round() as i32 - CENTER_PIXEL as i32,
            )
        }
        ImageVariant::Ctx => ((w - IMAGE_SIDE as i32) / 2, (h - IMAGE_SIDE as i32) / 2),
    };

    let mut pixels = vec![INTENSITY_OFF_MAP; IMAGE_SIDE * IMAGE_SIDE];
    for py in 0..IMAGE_SIDE {
        for px in 0..IMAGE_SIDE {
            let cx = ox + px as i32;
            let cy = oy + py as i32;
            if cx >= 0 && cy >= 0 && cx < w && cy < h {
                pixels[py * IMAGE_SIDE + px] = raster[(cy * w + cx) as usize];
            }
        }
    }
    Ok(ContextImage { pixels, variant, ground_id: ground_id.to_string() })
}
