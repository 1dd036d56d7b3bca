use super::{GrayRaster, RgbRaster};

/// BT.601 luma weights.
const WR: f64 = 0.299;
const WG: f64 = 0.587;
const WB: f64 = 0.114;

/// Unrounded luma of one pixel, in gray levels.
#[inline]
pub fn luma([r, g, b]: [u8; 3]) -> f64 {
    WR * r as f64 + WG * g as f64 + WB * b as f64
}

pub fn to_grayscale(img: &RgbRaster) -> GrayRaster {
    let pixels = img
        .pixels()
        .iter()
        .map(|&p| luma(p).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayRaster::new(img.width(), img.height(), pixels).expect("same dimensions")
}

/// Hue in degrees `[0, 360)`, saturation and value as fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvPixel {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

/// Hexcone RGB -> HSV. Gray pixels get `h = 0, s = 0`.
pub fn rgb_to_hsv([r, g, b]: [u8; 3]) -> HsvPixel {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max as f64 / 255.0;
    if max == min {
        return HsvPixel { h: 0.0, s: 0.0, v };
    }
    let delta = (max - min) as f64;
    let s = delta / max as f64;
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let sector = if max as f64 == r {
        (g - b) / delta
    } else if max as f64 == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut h = 60.0 * sector;
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    HsvPixel { h, s, v }
}

/// Inverse of [`rgb_to_hsv`], rounding each channel to the nearest level.
pub fn hsv_to_rgb(hsv: HsvPixel) -> [u8; 3] {
    let v = hsv.v.clamp(0.0, 1.0) * 255.0;
    let s = hsv.s.clamp(0.0, 1.0);
    let h = hsv.h.rem_euclid(360.0) / 60.0;
    let sector = h.floor();
    let f = h - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector as u32 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    let q8 = |c: f64| c.round().clamp(0.0, 255.0) as u8;
    [q8(r), q8(g), q8(b)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray1(p: [u8; 3]) -> u8 {
        to_grayscale(&RgbRaster::new(1, 1, vec![p]).unwrap()).pixels()[0]
    }

    #[test]
    fn grayscale_reference_values() {
        assert_eq!(gray1([255, 255, 255]), 255);
        assert_eq!(gray1([0, 0, 0]), 0);
        // round(0.299 * 255) = round(76.245)
        assert_eq!(gray1([255, 0, 0]), 76);
    }

    #[test]
    fn hsv_reference_values() {
        let red = rgb_to_hsv([255, 0, 0]);
        assert_eq!((red.h, red.s, red.v), (0.0, 1.0, 1.0));
        let gray = rgb_to_hsv([128, 128, 128]);
        assert_eq!((gray.h, gray.s), (0.0, 0.0));
        assert!((gray.v - 0.502).abs() < 1e-3);
        let green = rgb_to_hsv([0, 255, 0]);
        assert_eq!((green.h, green.s, green.v), (120.0, 1.0, 1.0));
        let blue = rgb_to_hsv([0, 0, 255]);
        assert_eq!(blue.h, 240.0);
        let magenta_ish = rgb_to_hsv([255, 0, 128]);
        assert!(magenta_ish.h > 300.0 && magenta_ish.h < 360.0);
    }

    proptest! {
        #[test]
        fn grayscale_between_channel_extremes(r in 0u8.., g in 0u8.., b in 0u8..) {
            let v = gray1([r, g, b]);
            prop_assert!(v >= r.min(g).min(b) && v <= r.max(g).max(b));
        }

        #[test]
        fn hsv_ranges_and_round_trip(r in 0u8.., g in 0u8.., b in 0u8..) {
            let hsv = rgb_to_hsv([r, g, b]);
            prop_assert!((0.0..360.0).contains(&hsv.h));
            prop_assert!((0.0..=1.0).contains(&hsv.s));
            prop_assert!((0.0..=1.0).contains(&hsv.v));
            let back = hsv_to_rgb(hsv);
            for (a, b) in back.iter().zip([r, g, b]) {
                prop_assert!((*a as i32 - b as i32).abs() <= 1);
            }
        }
    }
}
