//! Path drawing on the processed field image.

use fieldbot_core::mapper::GridSpec;
use fieldbot_core::planner::{Cell, GridPath};
use fieldbot_core::raster::RgbRaster;

const TINT: [u8; 3] = [255, 210, 0];
const LINE: [u8; 3] = [20, 40, 200];
const SOURCE: [u8; 3] = [0, 200, 0];
const DEST: [u8; 3] = [220, 0, 0];

fn blend(a: [u8; 3], b: [u8; 3]) -> [u8; 3] {
    [0, 1, 2].map(|i| ((a[i] as u16 + b[i] as u16) / 2) as u8)
}

fn cell_px_bounds(spec: &GridSpec, cell: Cell) -> (usize, usize, usize, usize) {
    let k = spec.cell_px;
    (cell.col * k, cell.row * k, (cell.col + 1) * k, (cell.row + 1) * k)
}

fn fill(img: &mut RgbRaster, spec: &GridSpec, cell: Cell, inset: usize, f: impl Fn([u8; 3]) -> [u8; 3]) {
    let (x0, y0, x1, y1) = cell_px_bounds(spec, cell);
    for y in (y0 + inset)..(y1 - inset).min(img.height()) {
        for x in (x0 + inset)..(x1 - inset).min(img.width()) {
            img.set(x, y, f(img.get(x, y)));
        }
    }
}

/// Tints every path cell, draws a line through consecutive cell centers and
/// marks the source green and the destination red. Pixels outside the path
/// cells are left untouched.
pub fn draw_path(base: &RgbRaster, spec: &GridSpec, path: &GridPath) -> RgbRaster {
    let mut img = base.clone();
    for &cell in path.cells() {
        fill(&mut img, spec, cell, 0, |p| blend(p, TINT));
    }
    let center = |c: Cell| {
        let k = spec.cell_px as isize;
        (c.col as isize * k + k / 2, c.row as isize * k + k / 2)
    };
    for w in path.cells().windows(2) {
        let (a, b) = (center(w[0]), center(w[1]));
        let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs());
        for i in 0..=steps {
            let x = a.0 + (b.0 - a.0) * i / steps.max(1);
            let y = a.1 + (b.1 - a.1) * i / steps.max(1);
            if (0..img.width() as isize).contains(&x) && (0..img.height() as isize).contains(&y) {
                img.set(x as usize, y as usize, LINE);
            }
        }
    }
    let inset = spec.cell_px / 4;
    fill(&mut img, spec, path.destination(), inset, |_| DEST);
    fill(&mut img, spec, path.source(), inset, |_| SOURCE);
    img
}
