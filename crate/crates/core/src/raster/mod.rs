//! Minimal 8-bit raster toolkit.
//!
//! Three pixel formats are supported: packed RGB, 8-bit gray and boolean
//! masks. All rasters are row-major and immutable once built; every
//! operation in this module returns a fresh raster.

mod blur;
mod color;
mod components;
mod pnm;
mod resize;
mod threshold;

pub use blur::{default_radius, gaussian_blur, gaussian_kernel};
pub use color::{hsv_to_rgb, luma, rgb_to_hsv, to_grayscale, HsvPixel};
pub use components::{connected_components, crop_largest_dark_region, BoundingBox, Component, Components};
pub use pnm::{read_pixmap, write_pgm, write_ppm, Pixmap};
pub use resize::{resize_gray, resize_rgb};
pub use threshold::{binarize, otsu_threshold, Binarized, Threshold};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RasterError {
    #[error("InvalidDimensions: {width}x{height} raster needs {expected} pixels, got {actual}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("NoFieldFound: image contains no pixel darker than {threshold}")]
    NoFieldFound { threshold: u8 },
    #[error("CodecError: {0}")]
    Codec(String),
}

fn check_dims(width: usize, height: usize, actual: usize) -> Result<(), RasterError> {
    let expected = width.checked_mul(height).unwrap_or(usize::MAX);
    if width == 0 || height == 0 || expected != actual {
        return Err(RasterError::InvalidDimensions {
            width,
            height,
            expected,
            actual,
        });
    }
    Ok(())
}

macro_rules! raster_type {
    ($(#[$meta:meta])* $name:ident, $pixel:ty) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct $name {
            width: usize,
            height: usize,
            pixels: Vec<$pixel>,
        }

        impl $name {
            pub fn new(width: usize, height: usize, pixels: Vec<$pixel>) -> Result<Self, RasterError> {
                check_dims(width, height, pixels.len())?;
                Ok(Self { width, height, pixels })
            }

            /// Raster of the given size with every pixel set to `value`.
            ///
            /// Panics if either dimension is zero.
            pub fn filled(width: usize, height: usize, value: $pixel) -> Self {
                assert!(width > 0 && height > 0, "raster dimensions must be positive");
                Self { width, height, pixels: vec![value; width * height] }
            }

            pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> $pixel) -> Self {
                assert!(width > 0 && height > 0, "raster dimensions must be positive");
                let mut pixels = Vec::with_capacity(width * height);
                for y in 0..height {
                    for x in 0..width {
                        pixels.push(f(x, y));
                    }
                }
                Self { width, height, pixels }
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.width
            }

            #[inline]
            pub fn height(&self) -> usize {
                self.height
            }

            #[inline]
            pub fn pixels(&self) -> &[$pixel] {
                &self.pixels
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> $pixel {
                self.pixels[y * self.width + x]
            }

            #[inline]
            pub fn set(&mut self, x: usize, y: usize, value: $pixel) {
                self.pixels[y * self.width + x] = value;
            }

            pub fn into_pixels(self) -> Vec<$pixel> {
                self.pixels
            }

            /// Copy of the inclusive rectangle `[x0, x1] x [y0, y1]`.
            pub fn crop(&self, bbox: BoundingBox) -> Self {
                let w = bbox.max_x - bbox.min_x + 1;
                let h = bbox.max_y - bbox.min_y + 1;
                Self::from_fn(w, h, |x, y| self.get(bbox.min_x + x, bbox.min_y + y))
            }
        }
    };
}

raster_type!(
    /// Row-major RGB image, one `[r, g, b]` triple per pixel.
    RgbRaster,
    [u8; 3]
);
raster_type!(
    /// Row-major 8-bit intensity image.
    GrayRaster,
    u8
);
raster_type!(
    /// Row-major mask; `true` is white (free space or foreground).
    BinaryRaster,
    bool
);

impl BinaryRaster {
    pub fn count_true(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }
}

impl GrayRaster {
    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }

    /// Neutral RGB copy (R = G = B).
    pub fn to_rgb(&self) -> RgbRaster {
        RgbRaster {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }
}

impl From<&BinaryRaster> for GrayRaster {
    fn from(mask: &BinaryRaster) -> Self {
        GrayRaster {
            width: mask.width,
            height: mask.height,
            pixels: mask.pixels.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}
