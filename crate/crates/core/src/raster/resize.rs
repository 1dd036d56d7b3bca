use super::{GrayRaster, RgbRaster};

/// Source sample positions for one axis: `(lower index, upper index, weight of upper)`.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            // half-pixel centers
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, s - lo as f64)
        })
        .collect()
}

fn resize_channels<const C: usize>(
    src: &[[u8; C]],
    src_w: usize,
    src_h: usize,
    dst_w: usize,
    dst_h: usize,
) -> Vec<[u8; C]> {
    assert!(dst_w >= 1 && dst_h >= 1, "resize target must be at least 1x1");
    let xs = axis_taps(src_w, dst_w);
    let ys = axis_taps(src_h, dst_h);
    let mut out = Vec::with_capacity(dst_w * dst_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p00 = src[y0 * src_w + x0];
            let p01 = src[y0 * src_w + x1];
            let p10 = src[y1 * src_w + x0];
            let p11 = src[y1 * src_w + x1];
            let mut px = [0u8; C];
            for c in 0..C {
                let top = p00[c] as f64 * (1.0 - fx) + p01[c] as f64 * fx;
                let bottom = p10[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                px[c] = v.round().clamp(0.0, 255.0) as u8;
            }
            out.push(px);
        }
    }
    out
}

/// Bilinear resize with half-pixel-center alignment.
pub fn resize_rgb(img: &RgbRaster, out_w: usize, out_h: usize) -> RgbRaster {
    if (out_w, out_h) == (img.width(), img.height()) {
        return img.clone();
    }
    let px = resize_channels(img.pixels(), img.width(), img.height(), out_w, out_h);
    RgbRaster::new(out_w, out_h, px).expect("dimensions computed")
}

/// Bilinear resize with half-pixel-center alignment.
pub fn resize_gray(img: &GrayRaster, out_w: usize, out_h: usize) -> GrayRaster {
    if (out_w, out_h) == (img.width(), img.height()) {
        return img.clone();
    }
    let src: Vec<[u8; 1]> = img.pixels().iter().map(|&p| [p]).collect();
    let px = resize_channels(&src, img.width(), img.height(), out_w, out_h);
    GrayRaster::new(out_w, out_h, px.into_iter().map(|[p]| p).collect()).expect("dimensions computed")
}
