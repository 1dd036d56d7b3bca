//! Synthetic imagery: the top-down field view the mapper consumes, and
//! close-range soil images the estimator consumes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use super::field::MoistureField;
use super::geometry::{Point, RhombusPath, Subfield};
use crate::calibration::{invert_calibration, CalibrationError, PolynomialModel};
use crate::raster::{luma, BinaryRaster, RgbRaster};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("EmptyRegion: the region covers no pixels")]
    EmptyRegion,
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

pub const AERIAL_MARGIN_PX: usize = 12;
pub const AERIAL_FRAME_PX: usize = 2;
pub const SOIL_DARK: [u8; 3] = [60, 40, 25];
pub const PATH_WHITE: [u8; 3] = [245, 245, 245];
const GROUND: [u8; 3] = [200, 200, 190];

fn jitter(rng: &mut ChaCha8Rng, base: [u8; 3], amount: i32) -> [u8; 3] {
    let d = rng.random_range(-amount..=amount);
    base.map(|c| (c as i32 + d).clamp(0, 255) as u8)
}

/// Top-down view: light surroundings, a black frame on the field's
/// outermost pixels, dark soil and the white path. The field spans
/// `width_cm / cm_per_px` by `height_cm / cm_per_px` pixels.
pub fn render_aerial(width_cm: f64, height_cm: f64, path: &RhombusPath, cm_per_px: f64, seed: u64) -> RgbRaster {
    let fw = (width_cm / cm_per_px).round() as usize;
    let fh = (height_cm / cm_per_px).round() as usize;
    let m = AERIAL_MARGIN_PX;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbRaster::from_fn(fw + 2 * m, fh + 2 * m, |x, y| {
        if x < m || y < m || x >= fw + m || y >= fh + m {
            return jitter(&mut rng, GROUND, 4);
        }
        let (fx, fy) = (x - m, y - m);
        let f = AERIAL_FRAME_PX;
        if fx < f || fy < f || fx >= fw - f || fy >= fh - f {
            return [0, 0, 0];
        }
        let p = ((fx as f64 + 0.5) * cm_per_px, (fy as f64 + 0.5) * cm_per_px);
        if path.covers(p) {
            jitter(&mut rng, PATH_WHITE, 6)
        } else {
            jitter(&mut rng, SOIL_DARK, 6)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoilRenderParams {
    /// Gaussian gray-level noise added before encoding.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Must match the estimator's normalization target.
    pub target_v: f64,
    pub leaves: usize,
    pub px_per_cm: f64,
}

impl Default for SoilRenderParams {
    fn default() -> Self {
        Self { noise_sigma: 0.0, seed: 0, target_v: 0.5, leaves: 3, px_per_cm: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SoilImage {
    pub image: RgbRaster,
    /// Field position of the top-left pixel corner, cm.
    pub origin: Point,
    pub region: BinaryRaster,
    pub region_pixels: usize,
    /// Mean ground truth over the region's pixel centers.
    pub truth_mean: f64,
}

// Luma of an RGB pixel with R maximal, hue 30 degrees and B = R (1 - s),
// divided by R, is LUMA_AT_S0 - LUMA_PER_S * s.
const LUMA_AT_S0: f64 = 1.0;
const LUMA_PER_S: f64 = 0.4075;

/// Renders `inside` over the `bounds` rectangle `(x0, y0, x1, y1)`.
///
/// Each soil pixel has a random brightness R and a sandy hue; its
/// saturation is chosen so that luma / R encodes the gray level the
/// calibration model maps to the local moisture. Brightness normalization
/// then recovers that gray level. Luma rounding error is diffused along the
/// raster so the regional mean is preserved. Pixels outside the region are
/// neutral gray and green leaves are scattered on top; the sand mask drops
/// both.
pub fn render_soil(
    field: &MoistureField,
    bounds: (f64, f64, f64, f64),
    inside: impl Fn(Point) -> bool,
    model: &PolynomialModel,
    params: &SoilRenderParams,
) -> Result<SoilImage, RenderError> {
    if !(params.target_v > 0.0 && params.target_v <= 1.0) {
        return Err(RenderError::InvalidParams(format!("target_v must be in (0, 1], got {}", params.target_v)));
    }
    if !(params.noise_sigma >= 0.0 && params.noise_sigma.is_finite()) {
        return Err(RenderError::InvalidParams(format!("noise_sigma must be >= 0, got {}", params.noise_sigma)));
    }
    if !(params.px_per_cm > 0.0) {
        return Err(RenderError::InvalidParams("px_per_cm must be positive".into()));
    }
    let (x0, y0, x1, y1) = bounds;
    let w = ((x1 - x0) * params.px_per_cm).ceil().max(0.0) as usize;
    let h = ((y1 - y0) * params.px_per_cm).ceil().max(0.0) as usize;
    let center = |x: usize, y: usize| -> Point {
        (x0 + (x as f64 + 0.5) / params.px_per_cm, y0 + (y as f64 + 0.5) / params.px_per_cm)
    };
    if w == 0 || h == 0 {
        return Err(RenderError::EmptyRegion);
    }
    let region = BinaryRaster::from_fn(w, h, |x, y| inside(center(x, y)));
    let region_pixels = region.count_true();
    if region_pixels == 0 {
        return Err(RenderError::EmptyRegion);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let noise = Normal::new(0.0, params.noise_sigma).expect("sigma checked");
    let full_scale = 255.0 * params.target_v;

    let mut truth_sum = 0.0;
    let mut carry = 0.0;
    let mut img = RgbRaster::filled(w, h, [0, 0, 0]);
    for y in 0..h {
        for x in 0..w {
            if !region.get(x, y) {
                let v = rng.random_range(140..=160);
                img.set(x, y, [v, v, v]);
                continue;
            }
            let (px, py) = center(x, y);
            let m = field.eval(px, py);
            truth_sum += m;
            let mut gray = invert_calibration(model, m)?;
            if params.noise_sigma > 0.0 {
                gray += noise.sample(&mut rng);
            }
            let gray = gray.clamp(0.0, 255.0);
            let r = rng.random_range(100u8..=156);
            let rf = r as f64;
            let ratio = gray / full_scale;
            let want = ratio * rf + carry;
            let s = ((LUMA_AT_S0 - ratio) / LUMA_PER_S).clamp(0.0, 1.0);
            let b = (rf * (1.0 - s)).round().clamp(0.0, rf);
            let g = ((want - 0.299 * rf - 0.114 * b) / 0.587).round().clamp(b, rf);
            let px = [r, g as u8, b as u8];
            carry = (want - luma(px)).clamp(-rf, rf);
            img.set(x, y, px);
        }
    }

    for _ in 0..params.leaves {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let rad = rng.random_range(3.0..6.0) * params.px_per_cm;
        let color = [rng.random_range(40..=70), rng.random_range(110..=150), rng.random_range(30..=50)];
        for y in 0..h {
            for x in 0..w {
                if (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= rad * rad {
                    img.set(x, y, color);
                }
            }
        }
    }

    Ok(SoilImage {
        image: img,
        origin: (x0, y0),
        region,
        region_pixels,
        truth_mean: truth_sum / region_pixels as f64,
    })
}

/// Soil image of one subfield, framed by the subfield's bounding box.
pub fn render_subfield_image(
    field: &MoistureField,
    subfield: &Subfield,
    path: &RhombusPath,
    model: &PolynomialModel,
    params: &SoilRenderParams,
) -> Result<SoilImage, RenderError> {
    let (x0, y0, x1, y1) = subfield.polygon.bounds();
    render_soil(field, (x0, y0, x1, y1), |p| subfield.contains(path, p), model, params)
}
