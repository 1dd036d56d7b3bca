use super::{to_grayscale, BinaryRaster, RasterError, RgbRaster};

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

impl BoundingBox {
    pub fn width(&self) -> usize {
        self.max_x - self.min_x + 1
    }

    pub fn height(&self) -> usize {
        self.max_y - self.min_y + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: u32,
    pub area: usize,
    pub bbox: BoundingBox,
}

/// 4-connected labeling result. Label 0 is background; component `i` of
/// `components` carries label `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl Components {
    pub fn label_at(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Largest component by area; ties go to the lowest label.
    pub fn largest(&self) -> Option<&Component> {
        self.components
            .iter()
            .fold(None, |best: Option<&Component>, c| match best {
                Some(b) if b.area >= c.area => Some(b),
                _ => Some(c),
            })
    }
}

/// Labels the 4-connected regions of pixels equal to `polarity`, numbering
/// them densely from 1 in raster-scan order of their first pixel.
pub fn connected_components(img: &BinaryRaster, polarity: bool) -> Components {
    let (w, h) = (img.width(), img.height());
    let px = img.pixels();
    let mut labels = vec![0u32; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();

    for start in 0..w * h {
        if px[start] != polarity || labels[start] != 0 {
            continue;
        }
        let label = components.len() as u32 + 1;
        let (sx, sy) = (start % w, start / w);
        let mut bbox = BoundingBox { min_x: sx, min_y: sy, max_x: sx, max_y: sy };
        let mut area = 0;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            area += 1;
            bbox.min_x = bbox.min_x.min(x);
            bbox.max_x = bbox.max_x.max(x);
            bbox.min_y = bbox.min_y.min(y);
            bbox.max_y = bbox.max_y.max(y);
            let mut visit = |j: usize| {
                if px[j] == polarity && labels[j] == 0 {
                    labels[j] = label;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        components.push(Component { label, area, bbox });
    }

    Components { width: w, height: h, labels, components }
}

/// Isolates the field: the largest 4-connected region of pixels whose
/// grayscale is below `dark_threshold`, cropped to its bounding box from
/// the original color image.
pub fn crop_largest_dark_region(img: &RgbRaster, dark_threshold: u8) -> Result<RgbRaster, RasterError> {
    let gray = to_grayscale(img);
    let dark = BinaryRaster::new(
        gray.width(),
        gray.height(),
        gray.pixels().iter().map(|&p| p < dark_threshold).collect(),
    )?;
    let comps = connected_components(&dark, true);
    let largest = comps
        .largest()
        .ok_or(RasterError::NoFieldFound { threshold: dark_threshold })?;
    Ok(img.crop(largest.bbox))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn mask(w: usize, h: usize, on: &[(usize, usize)]) -> BinaryRaster {
        BinaryRaster::from_fn(w, h, |x, y| on.contains(&(x, y)))
    }

    /// Recursive flood fill oracle.
    fn flood_oracle(img: &BinaryRaster) -> Vec<u32> {
        fn fill(img: &BinaryRaster, labels: &mut [u32], x: isize, y: isize, l: u32) {
            let (w, h) = (img.width() as isize, img.height() as isize);
            if x < 0 || y < 0 || x >= w || y >= h {
                return;
            }
            let i = (y * w + x) as usize;
            if !img.pixels()[i] || labels[i] != 0 {
                return;
            }
            labels[i] = l;
            fill(img, labels, x + 1, y, l);
            fill(img, labels, x - 1, y, l);
            fill(img, labels, x, y + 1, l);
            fill(img, labels, x, y - 1, l);
        }
        let mut labels = vec![0; img.pixels().len()];
        let mut next = 0;
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.get(x, y) && labels[y * img.width() + x] == 0 {
                    next += 1;
                    fill(img, &mut labels, x as isize, y as isize, next);
                }
            }
        }
        labels
    }

    /// True when the two labelings induce the same partition.
    fn same_partition(a: &[u32], b: &[u32]) -> bool {
        let mut ab = HashMap::new();
        let mut ba = HashMap::new();
        a.iter().zip(b).all(|(&x, &y)| {
            (x == 0) == (y == 0) && *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x
        })
    }

    #[test]
    fn single_pixel() {
        let c = connected_components(&mask(3, 3, &[(1, 1)]), true);
        assert_eq!(c.components.len(), 1);
        assert_eq!(c.components[0].area, 1);
        assert_eq!(c.label_at(1, 1), 1);
        assert_eq!(c.label_at(0, 0), 0);
    }

    #[test]
    fn diagonal_pixels_are_separate() {
        let c = connected_components(&mask(2, 2, &[(0, 0), (1, 1)]), true);
        assert_eq!(c.components.len(), 2);
        let bg = connected_components(&mask(2, 2, &[(0, 0), (1, 1)]), false);
        assert_eq!(bg.components.len(), 2);
    }

    fn frame(img: &mut RgbRaster, b: BoundingBox) {
        for x in b.min_x..=b.max_x {
            img.set(x, b.min_y, [0, 0, 0]);
            img.set(x, b.max_y, [0, 0, 0]);
        }
        for y in b.min_y..=b.max_y {
            img.set(b.min_x, y, [0, 0, 0]);
            img.set(b.max_x, y, [0, 0, 0]);
        }
    }

    #[test]
    fn crop_selects_outline_box() {
        let mut img = RgbRaster::filled(30, 20, [255, 255, 255]);
        let b = BoundingBox { min_x: 4, min_y: 3, max_x: 21, max_y: 15 };
        frame(&mut img, b);
        let out = crop_largest_dark_region(&img, 64).unwrap();
        assert_eq!(out, img.crop(b));
        assert_eq!((out.width(), out.height()), (18, 13));
    }

    #[test]
    fn nested_frames_pick_outer() {
        let mut img = RgbRaster::filled(40, 40, [250, 250, 250]);
        let outer = BoundingBox { min_x: 2, min_y: 2, max_x: 37, max_y: 36 };
        let inner = BoundingBox { min_x: 10, min_y: 10, max_x: 20, max_y: 20 };
        frame(&mut img, outer);
        frame(&mut img, inner);
        let out = crop_largest_dark_region(&img, 64).unwrap();
        assert_eq!((out.width(), out.height()), (outer.width(), outer.height()));
    }

    #[test]
    fn all_white_has_no_field() {
        let img = RgbRaster::filled(5, 5, [255, 255, 255]);
        assert_eq!(
            crop_largest_dark_region(&img, 64),
            Err(RasterError::NoFieldFound { threshold: 64 })
        );
    }

    proptest! {
        #[test]
        fn labels_match_flood_fill(bits in proptest::collection::vec(proptest::bool::ANY, 12 * 12)) {
            let img = BinaryRaster::new(12, 12, bits).unwrap();
            let c = connected_components(&img, true);
            prop_assert!(same_partition(&c.labels, &flood_oracle(&img)));
            let total: usize = c.components.iter().map(|c| c.area).sum();
            prop_assert_eq!(total, img.count_true());
            // dense labels from 1
            let max = c.labels.iter().copied().max().unwrap_or(0);
            prop_assert_eq!(max as usize, c.components.len());
        }

        #[test]
        fn labeling_commutes_with_transposition(bits in proptest::collection::vec(proptest::bool::ANY, 9 * 7)) {
            let img = BinaryRaster::new(9, 7, bits).unwrap();
            let t = BinaryRaster::from_fn(7, 9, |x, y| img.get(y, x));
            let a = connected_components(&img, true);
            let b = connected_components(&t, true);
            let b_back: Vec<u32> = (0..7).flat_map(|y| (0..9).map(move |x| (x, y)))
                .map(|(x, y)| b.label_at(y, x))
                .collect();
            prop_assert!(same_partition(&a.labels, &b_back));
        }
    }
}
