//! Moisture estimation from a close-range soil image.
//!
//! 1. mask out everything that is not sand (HSV window),
//! 2. scale brightness so the kept pixels have a fixed mean V,
//! 3. average the grayscale of the kept pixels,
//! 4. look the average up in the calibration model.
//!
//! "Luminosity" is taken to be the HSV value channel. Scaling all three
//! channels by the same factor changes V while holding H and S fixed.

use thiserror::Error;

use crate::calibration::{predict_moisture, CalibrationError, PolynomialModel};
use crate::raster::{luma, rgb_to_hsv, BinaryRaster, HsvPixel, RgbRaster};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("AllMasked: no pixel survived the sand mask")]
    AllMasked,
    #[error("ZeroLuminosity: kept pixels are all black")]
    ZeroLuminosity,
    #[error("InsufficientSoilPixels: kept fraction {kept:.3} is below {required:.3}")]
    InsufficientSoilPixels { kept: f64, required: f64 },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("DimensionMismatch: mask is {mask_w}x{mask_h}, image is {img_w}x{img_h}")]
    DimensionMismatch { mask_w: usize, mask_h: usize, img_w: usize, img_h: usize },
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Inclusive HSV window. When `h_lo > h_hi` the hue interval wraps through 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvRange {
    pub h_lo: f64,
    pub h_hi: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Default for HsvRange {
    /// Dry-to-wet sandy soil. Soil specific; override per site.
    fn default() -> Self {
        Self { h_lo: 10.0, h_hi: 50.0, s_lo: 0.05, s_hi: 0.8, v_lo: 0.15, v_hi: 1.0 }
    }
}

impl HsvRange {
    /// Keeps every pixel.
    pub fn full() -> Self {
        Self { h_lo: 0.0, h_hi: 360.0, s_lo: 0.0, s_hi: 1.0, v_lo: 0.0, v_hi: 1.0 }
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let deg = |x: f64| (0.0..=360.0).contains(&x);
        if !(deg(self.h_lo) && deg(self.h_hi)) {
            return Err(EstimateError::InvalidConfig("hue bounds must lie in [0, 360]".into()));
        }
        if !(unit(self.s_lo) && unit(self.s_hi) && unit(self.v_lo) && unit(self.v_hi)) {
            return Err(EstimateError::InvalidConfig("saturation and value bounds must lie in [0, 1]".into()));
        }
        if self.s_lo > self.s_hi || self.v_lo > self.v_hi {
            return Err(EstimateError::InvalidConfig("lower bound exceeds upper bound".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: HsvPixel) -> bool {
        let hue_ok = if self.h_lo <= self.h_hi {
            p.h >= self.h_lo && p.h <= self.h_hi
        } else {
            p.h >= self.h_lo || p.h <= self.h_hi
        };
        hue_ok && (self.s_lo..=self.s_hi).contains(&p.s) && (self.v_lo..=self.v_hi).contains(&p.v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub range: HsvRange,
    /// Mean V of kept pixels after normalization.
    pub target_v: f64,
    pub min_kept_fraction: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { range: HsvRange::default(), target_v: 0.5, min_kept_fraction: 0.10 }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimateError> {
        self.range.validate()?;
        if !(self.target_v > 0.0 && self.target_v <= 1.0) {
            return Err(EstimateError::InvalidConfig(format!("target_v must be in (0, 1], got {}", self.target_v)));
        }
        if !(0.0..=1.0).contains(&self.min_kept_fraction) {
            return Err(EstimateError::InvalidConfig(format!(
                "min_kept_fraction must be in [0, 1], got {}",
                self.min_kept_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoistureEstimate {
    pub moisture: f64,
    pub avg_gray: f64,
    pub kept_fraction: f64,
    pub clamped: bool,
}

/// `true` where the pixel's HSV lies inside `range`. The image itself is
/// left untouched.
pub fn mask_sand(img: &RgbRaster, range: &HsvRange) -> BinaryRaster {
    let keep = img.pixels().iter().map(|&p| range.contains(rgb_to_hsv(p))).collect();
    BinaryRaster::new(img.width(), img.height(), keep).expect("same dimensions")
}

fn check_mask(img: &RgbRaster, mask: &BinaryRaster) -> Result<(), EstimateError> {
    if (img.width(), img.height()) != (mask.width(), mask.height()) {
        return Err(EstimateError::DimensionMismatch {
            mask_w: mask.width(),
            mask_h: mask.height(),
            img_w: img.width(),
            img_h: img.height(),
        });
    }
    Ok(())
}

/// Global brightness gain `target_v / mean V` over kept pixels.
fn luminosity_gain(img: &RgbRaster, mask: &BinaryRaster, target_v: f64) -> Result<f64, EstimateError> {
    check_mask(img, mask)?;
    if !(target_v > 0.0 && target_v <= 1.0) {
        return Err(EstimateError::InvalidConfig(format!("target_v must be in (0, 1], got {target_v}")));
    }
    let (mut sum_v, mut kept) = (0.0, 0usize);
    for (p, &k) in img.pixels().iter().zip(mask.pixels()) {
        if k {
            sum_v += p.iter().copied().max().unwrap() as f64 / 255.0;
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(EstimateError::AllMasked);
    }
    if sum_v == 0.0 {
        return Err(EstimateError::ZeroLuminosity);
    }
    Ok(target_v / (sum_v / kept as f64))
}

/// Per-pixel gain: the global gain, capped so V does not exceed 1 (which
/// would shift hue and saturation).
#[inline]
fn pixel_gain(p: [u8; 3], gain: f64) -> f64 {
    let max = p.iter().copied().max().unwrap();
    if max == 0 {
        gain
    } else {
        gain.min(255.0 / max as f64)
    }
}

/// Scales the V channel of kept pixels so their mean equals `target_v`.
/// Excluded pixels are copied through.
pub fn normalize_luminosity(img: &RgbRaster, mask: &BinaryRaster, target_v: f64) -> Result<RgbRaster, EstimateError> {
    let gain = luminosity_gain(img, mask, target_v)?;
    let pixels = img
        .pixels()
        .iter()
        .zip(mask.pixels())
        .map(|(&p, &k)| {
            if !k {
                return p;
            }
            let g = pixel_gain(p, gain);
            p.map(|c| (c as f64 * g).round().clamp(0.0, 255.0) as u8)
        })
        .collect();
    Ok(RgbRaster::new(img.width(), img.height(), pixels).expect("same dimensions"))
}

/// Runs mask -> normalize -> grayscale -> mean -> calibration.
///
/// Normalization and grayscale conversion are fused and evaluated in
/// floating point, so no intermediate 8-bit rounding biases the mean.
pub fn estimate_moisture(img: &RgbRaster, model: &PolynomialModel, cfg: &EstimatorConfig) -> Result<MoistureEstimate, EstimateError> {
    cfg.validate()?;
    let mask = mask_sand(img, &cfg.range);
    let kept = mask.count_true();
    let kept_fraction = kept as f64 / mask.pixels().len() as f64;
    if kept_fraction < cfg.min_kept_fraction {
        return Err(EstimateError::InsufficientSoilPixels { kept: kept_fraction, required: cfg.min_kept_fraction });
    }
    let gain = luminosity_gain(img, &mask, cfg.target_v)?;
    let total: f64 = img
        .pixels()
        .iter()
        .zip(mask.pixels())
        .filter(|(_, &k)| k)
        .map(|(&p, _)| luma(p) * pixel_gain(p, gain))
        .sum();
    let avg_gray = total / kept as f64;
    let prediction = predict_moisture(model, avg_gray)?;
    Ok(MoistureEstimate {
        moisture: prediction.moisture,
        avg_gray,
        kept_fraction,
        clamped: prediction.clamped,
    })
}
