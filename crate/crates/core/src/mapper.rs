//! Aerial field raster -> navigable occupancy grid.
//!
//! The pipeline is crop -> resize -> grayscale -> blur -> binarize ->
//! per-cell white-area filter. Grid division is pure bookkeeping: no grid
//! lines are painted into the raster.

use thiserror::Error;

use crate::planner::Cell;
use crate::raster::{
    binarize, crop_largest_dark_region, default_radius, gaussian_blur, resize_rgb, to_grayscale,
    BinaryRaster, GrayRaster, RasterError, RgbRaster, Threshold,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapperError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Cell layout of a processed raster. Cells are addressed `(row, col)` from
/// the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub cell_px: usize,
    pub cm_per_px: f64,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, cell_px: usize, cm_per_px: f64) -> Result<Self, MapperError> {
        if rows == 0 || cols == 0 || cell_px == 0 {
            return Err(MapperError::InvalidConfig("rows, cols and cell_px must be >= 1".into()));
        }
        if !(cm_per_px > 0.0 && cm_per_px.is_finite()) {
            return Err(MapperError::InvalidConfig(format!("cm_per_px must be > 0, got {cm_per_px}")));
        }
        Ok(Self { rows, cols, cell_px, cm_per_px })
    }

    /// Side length of one cell in the field, in centimeters.
    pub fn cell_cm(&self) -> f64 {
        self.cell_px as f64 * self.cm_per_px
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    /// Center of `cell` in field centimeters, `(x, y)` with y growing downwards.
    pub fn cell_center_cm(&self, cell: Cell) -> (f64, f64) {
        let s = self.cell_cm();
        ((cell.col as f64 + 0.5) * s, (cell.row as f64 + 0.5) * s)
    }

    pub fn px_width(&self) -> usize {
        self.cols * self.cell_px
    }

    pub fn px_height(&self) -> usize {
        self.rows * self.cell_px
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    spec: GridSpec,
    white_threshold: f64,
    white_counts: Vec<u32>,
    navigable: Vec<bool>,
}

impl OccupancyGrid {
    /// Grid from an explicit navigability mask (row-major). White fractions
    /// are 1 for navigable cells and 0 otherwise.
    pub fn from_mask(spec: GridSpec, navigable: Vec<bool>) -> Result<Self, MapperError> {
        if navigable.len() != spec.rows * spec.cols {
            return Err(MapperError::DimensionMismatch(format!(
                "{}x{} grid needs {} cells, got {}",
                spec.rows,
                spec.cols,
                spec.rows * spec.cols,
                navigable.len()
            )));
        }
        let full = (spec.cell_px * spec.cell_px) as u32;
        let white_counts = navigable.iter().map(|&n| if n { full } else { 0 }).collect();
        Ok(Self { spec, white_threshold: 0.5, white_counts, navigable })
    }

    /// Unit-scale grid parsed from rows of `.` (free) and `#` (blocked).
    pub fn from_ascii(rows: &[&str]) -> Result<Self, MapperError> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MapperError::DimensionMismatch("ragged ascii grid".into()));
        }
        let spec = GridSpec::new(rows.len(), cols, 1, 1.0)?;
        let mask = rows.iter().flat_map(|r| r.bytes().map(|b| b != b'#')).collect();
        Self::from_mask(spec, mask)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn rows(&self) -> usize {
        self.spec.rows
    }

    pub fn cols(&self) -> usize {
        self.spec.cols
    }

    pub fn white_threshold(&self) -> f64 {
        self.white_threshold
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.spec.contains(cell)
    }

    fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.row * self.spec.cols + cell.col
    }

    /// False for out-of-bounds cells.
    pub fn is_navigable(&self, cell: Cell) -> bool {
        self.contains(cell) && self.navigable[self.index(cell)]
    }

    /// White pixels in the cell; the fraction is this over `cell_px^2`.
    pub fn white_count(&self, cell: Cell) -> u32 {
        self.white_counts[self.index(cell)]
    }

    pub fn white_fraction(&self, cell: Cell) -> f64 {
        self.white_count(cell) as f64 / (self.spec.cell_px * self.spec.cell_px) as f64
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.spec.rows).flat_map(move |row| (0..self.spec.cols).map(move |col| Cell { row, col }))
    }

    pub fn navigable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(|&c| self.is_navigable(c))
    }

    pub fn navigable_count(&self) -> usize {
        self.navigable.iter().filter(|&&n| n).count()
    }

    /// Rows of `.`/`#`, one line per grid row.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity(self.spec.rows * (self.spec.cols + 1));
        for row in 0..self.spec.rows {
            for col in 0..self.spec.cols {
                s.push(if self.is_navigable(Cell { row, col }) { '.' } else { '#' });
            }
            s.push('\n');
        }
        s
    }
}

/// Counts white pixels per cell and marks cells whose white fraction reaches
/// `white_threshold` as navigable.
pub fn build_occupancy(img: &BinaryRaster, spec: GridSpec, white_threshold: f64) -> Result<OccupancyGrid, MapperError> {
    if !(white_threshold > 0.0 && white_threshold <= 1.0) {
        return Err(MapperError::InvalidConfig(format!(
            "white_threshold must be in (0, 1], got {white_threshold}"
        )));
    }
    if img.width() != spec.px_width() || img.height() != spec.px_height() {
        return Err(MapperError::DimensionMismatch(format!(
            "raster is {}x{} px but a {}x{} grid of {} px cells needs {}x{}",
            img.width(),
            img.height(),
            spec.rows,
            spec.cols,
            spec.cell_px,
            spec.px_width(),
            spec.px_height()
        )));
    }
    let mut white_counts = vec![0u32; spec.rows * spec.cols];
    for y in 0..img.height() {
        let row = y / spec.cell_px;
        for x in 0..img.width() {
            if img.get(x, y) {
                white_counts[row * spec.cols + x / spec.cell_px] += 1;
            }
        }
    }
    let area = (spec.cell_px * spec.cell_px) as f64;
    let navigable = white_counts
        .iter()
        .map(|&count| count as f64 / area >= white_threshold)
        .collect();
    Ok(OccupancyGrid { spec, white_threshold, white_counts, navigable })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapperConfig {
    /// Gray level below which a pixel counts as part of the dark field boundary.
    pub dark_threshold: u8,
    pub resize_w: usize,
    pub resize_h: usize,
    pub cell_px: usize,
    /// Calibrated scale of the processed (resized) raster.
    pub cm_per_px: f64,
    pub sigma: f64,
    /// Kernel half-width; `None` means `ceil(3 sigma)`.
    pub blur_radius: Option<usize>,
    pub binarize: Threshold,
    pub white_threshold: f64,
    pub robot_footprint_cm: f64,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            dark_threshold: 64,
            resize_w: 400,
            resize_h: 320,
            cell_px: 20,
            cm_per_px: 0.5,
            sigma: 1.0,
            blur_radius: None,
            binarize: Threshold::Otsu,
            white_threshold: 0.5,
            robot_footprint_cm: 10.0,
        }
    }
}

/// Non-fatal configuration findings.
#[derive(Debug, Clone, PartialEq)]
pub enum MapperWarning {
    /// Cells smaller than the robot may admit paths it cannot follow.
    CellSmallerThanRobot { cell_cm: f64, footprint_cm: f64 },
}

impl std::fmt::Display for MapperWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MapperWarning::CellSmallerThanRobot { cell_cm, footprint_cm } => write!(
                f,
                "cell side {cell_cm:.3} cm is smaller than the robot footprint {footprint_cm:.3} cm"
            ),
        }
    }
}

impl MapperConfig {
    pub fn grid_spec(&self) -> Result<GridSpec, MapperError> {
        if self.cell_px == 0 || self.resize_w % self.cell_px != 0 || self.resize_h % self.cell_px != 0 {
            return Err(MapperError::DimensionMismatch(format!(
                "resize target {}x{} is not a multiple of cell_px {}",
                self.resize_w, self.resize_h, self.cell_px
            )));
        }
        GridSpec::new(self.resize_h / self.cell_px, self.resize_w / self.cell_px, self.cell_px, self.cm_per_px)
    }

    pub fn validate(&self) -> Result<(), MapperError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(MapperError::InvalidConfig(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.blur_radius == Some(0) {
            return Err(MapperError::InvalidConfig("blur radius must be >= 1".into()));
        }
        if !(self.white_threshold > 0.0 && self.white_threshold <= 1.0) {
            return Err(MapperError::InvalidConfig(format!(
                "white_threshold must be in (0, 1], got {}",
                self.white_threshold
            )));
        }
        self.grid_spec().map(|_| ())
    }

    pub fn warnings(&self) -> Vec<MapperWarning> {
        let cell_cm = self.cell_px as f64 * self.cm_per_px;
        let mut out = Vec::new();
        if cell_cm < self.robot_footprint_cm {
            out.push(MapperWarning::CellSmallerThanRobot { cell_cm, footprint_cm: self.robot_footprint_cm });
        }
        out
    }

    pub fn blur_radius(&self) -> usize {
        self.blur_radius.unwrap_or_else(|| default_radius(self.sigma))
    }
}

/// Every intermediate of [`preprocess_field`], kept for overlays and debugging.
#[derive(Debug, Clone)]
pub struct MappedField {
    /// Cropped and resized color image; grid cell `(r, c)` covers pixels
    /// `[c*cell_px, (c+1)*cell_px) x [r*cell_px, (r+1)*cell_px)`.
    pub field: RgbRaster,
    pub blurred: GrayRaster,
    pub binary: BinaryRaster,
    pub threshold: u8,
    pub otsu_fallback: bool,
    pub grid: OccupancyGrid,
}

pub fn map_field(img: &RgbRaster, cfg: &MapperConfig) -> Result<MappedField, MapperError> {
    cfg.validate()?;
    let spec = cfg.grid_spec()?;
    let cropped = crop_largest_dark_region(img, cfg.dark_threshold)?;
    let field = resize_rgb(&cropped, cfg.resize_w, cfg.resize_h);
    let gray = to_grayscale(&field);
    let blurred = gaussian_blur(&gray, cfg.sigma, cfg.blur_radius());
    let bin = binarize(&blurred, cfg.binarize);
    let grid = build_occupancy(&bin.raster, spec, cfg.white_threshold)?;
    Ok(MappedField {
        field,
        blurred,
        binary: bin.raster,
        threshold: bin.threshold,
        otsu_fallback: bin.fallback,
        grid,
    })
}

pub fn preprocess_field(img: &RgbRaster, cfg: &MapperConfig) -> Result<OccupancyGrid, MapperError> {
    map_field(img, cfg).map(|m| m.grid)
}
