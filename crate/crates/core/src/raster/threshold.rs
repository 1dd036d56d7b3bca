use std::cmp::Ordering;

use super::{BinaryRaster, GrayRaster};

/// Binarization rule. A pixel is white iff `intensity >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threshold {
    Fixed(u8),
    #[default]
    Otsu,
}

/// Threshold used when Otsu sees a single-valued histogram.
pub const OTSU_FALLBACK: u8 = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binarized {
    pub raster: BinaryRaster,
    pub threshold: u8,
    /// Set when Otsu was requested on a degenerate histogram and the fixed
    /// fallback threshold was used instead.
    pub fallback: bool,
}

pub fn binarize(img: &GrayRaster, method: Threshold) -> Binarized {
    let (threshold, fallback) = match method {
        Threshold::Fixed(t) => (t, false),
        Threshold::Otsu => match otsu_threshold(img) {
            Some(t) => (t, false),
            None => (OTSU_FALLBACK, true),
        },
    };
    let pixels = img.pixels().iter().map(|&p| p >= threshold).collect();
    Binarized {
        raster: BinaryRaster::new(img.width(), img.height(), pixels).expect("same dimensions"),
        threshold,
        fallback,
    }
}

/// Otsu's threshold: the `t` in `0..=255` maximizing between-class variance
/// of `{p < t}` vs `{p >= t}`. Returns `None` for single-valued images.
///
/// Variances are compared as exact rationals so ties always resolve to the
/// lowest threshold.
pub fn otsu_threshold(img: &GrayRaster) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let n: u64 = hist.iter().sum();
    let total: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    // sigma_b^2 * n^2 = (total * n0 - n * sum0)^2 / (n0 * n1)
    let mut best: Option<(u8, u128, u128)> = None;
    let (mut n0, mut sum0) = (0u64, 0u64);
    for t in 0..=255usize {
        if t > 0 {
            n0 += hist[t - 1];
            sum0 += (t as u64 - 1) * hist[t - 1];
        }
        let n1 = n - n0;
        let (num, den) = if n0 == 0 || n1 == 0 {
            (0u128, 1u128)
        } else {
            let diff = (total as i128 * n0 as i128 - n as i128 * sum0 as i128).unsigned_abs();
            (diff * diff, n0 as u128 * n1 as u128)
        };
        let better = match best {
            None => true,
            Some((_, bn, bd)) => cmp_fraction(num, den, bn, bd) == Ordering::Greater,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

/// Compares `an/ad` with `bn/bd` exactly, without overflowing, by expanding
/// both as continued fractions.
fn cmp_fraction(an: u128, ad: u128, bn: u128, bd: u128) -> Ordering {
    let (qa, ra) = (an / ad, an % ad);
    let (qb, rb) = (bn / bd, bn % bd);
    if qa != qb {
        return qa.cmp(&qb);
    }
    match (ra == 0, rb == 0) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        // ra/ad vs rb/bd  <=>  bd/rb vs ad/ra
        (false, false) => cmp_fraction(bd, rb, ad, ra),
    }
}
