use super::GrayRaster;

/// Kernel half-width used when the caller does not pick one: `ceil(3 sigma)`.
pub fn default_radius(sigma: f64) -> usize {
    ((3.0 * sigma).ceil() as usize).max(1)
}

/// Unit-sum 1-D Gaussian of length `2 * radius + 1`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Separable Gaussian blur with replicated borders.
///
/// Both passes accumulate in `f64`; the result is rounded once at the end.
pub fn gaussian_blur(img: &GrayRaster, sigma: f64, radius: usize) -> GrayRaster {
    assert!(radius >= 1, "blur radius must be at least 1");
    let kernel = gaussian_kernel(sigma, radius);
    let (w, h) = (img.width(), img.height());
    let r = radius as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut horizontal = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &img.pixels()[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sx = clamp(x as isize + k as isize - r, w);
                acc += weight * row[sx] as f64;
            }
            horizontal[y * w + x] = acc;
        }
    }

    GrayRaster::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (k, weight) in kernel.iter().enumerate() {
            let sy = clamp(y as isize + k as isize - r, h);
            acc += weight * horizontal[sy * w + x];
        }
        acc.round().clamp(0.0, 255.0) as u8
    })
}
