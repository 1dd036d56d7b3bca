//! Net-distance labeling and shortest-path extraction on an occupancy grid.
//!
//! Every move costs one step, so the labeling is a breadth-first frontier
//! expansion from the source. The path is recovered by walking back from
//! the destination through neighbors whose net distance is exactly one
//! less, trying directions clockwise from north.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::mapper::OccupancyGrid;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("SourceBlocked: source cell {0} is not navigable")]
    SourceBlocked(Cell),
    #[error("Unreachable: destination cell {0} cannot be reached")]
    Unreachable(Cell),
    #[error("OutOfBounds: cell {cell} is outside the {rows}x{cols} grid")]
    OutOfBounds { cell: Cell, rows: usize, cols: usize },
    #[error("ParseError: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    fn offset(self, (dr, dc): (isize, isize)) -> Option<Cell> {
        Some(Cell {
            row: self.row.checked_add_signed(dr)?,
            col: self.col.checked_add_signed(dc)?,
        })
    }

    /// `max(|drow|, |dcol|)`.
    pub fn chebyshev(self, other: Cell) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

impl FromStr for Cell {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PlanError::Parse(format!("expected \"row,col\", got {s:?}"));
        let (r, c) = s.trim().split_once(',').ok_or_else(bad)?;
        Ok(Cell {
            row: r.trim().parse().map_err(|_| bad())?,
            col: c.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// Neighbor offsets `(drow, dcol)` clockwise from north: N, NE, E, SE, S, SW, W, NW.
pub const EIGHT_NEIGHBORS: [(isize, isize); 8] =
    [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];
/// N, E, S, W.
pub const FOUR_NEIGHBORS: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub connectivity: Connectivity,
    /// Allow a diagonal step whose two flanking orthogonal cells are both blocked.
    pub corner_cutting: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { connectivity: Connectivity::Eight, corner_cutting: true }
    }
}

impl PlannerConfig {
    fn offsets(&self) -> &'static [(isize, isize)] {
        match self.connectivity {
            Connectivity::Four => &FOUR_NEIGHBORS,
            Connectivity::Eight => &EIGHT_NEIGHBORS,
        }
    }

    /// Whether the robot may move from `from` by `delta`.
    fn step(&self, grid: &OccupancyGrid, from: Cell, delta: (isize, isize)) -> Option<Cell> {
        let to = from.offset(delta)?;
        if !grid.is_navigable(to) {
            return None;
        }
        if !self.corner_cutting && delta.0 != 0 && delta.1 != 0 {
            let side_a = from.offset((delta.0, 0)).is_some_and(|c| grid.is_navigable(c));
            let side_b = from.offset((0, delta.1)).is_some_and(|c| grid.is_navigable(c));
            if !side_a && !side_b {
                return None;
            }
        }
        Some(to)
    }

    /// Navigable neighbors of `cell` in tie-break order.
    pub fn neighbors<'a>(&'a self, grid: &'a OccupancyGrid, cell: Cell) -> impl Iterator<Item = Cell> + 'a {
        self.offsets().iter().filter_map(move |&d| self.step(grid, cell, d))
    }
}

/// Per-cell step counts from a source; `None` is unreached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetDistanceField {
    source: Cell,
    rows: usize,
    cols: usize,
    dist: Vec<Option<u32>>,
    config: PlannerConfig,
}

impl NetDistanceField {
    pub fn source(&self) -> Cell {
        self.source
    }

    pub fn config(&self) -> PlannerConfig {
        self.config
    }

    pub fn get(&self, cell: Cell) -> Option<u32> {
        if cell.row < self.rows && cell.col < self.cols {
            self.dist[cell.row * self.cols + cell.col]
        } else {
            None
        }
    }

    pub fn reached_count(&self) -> usize {
        self.dist.iter().filter(|d| d.is_some()).count()
    }
}

/// Grid of distances, unreached cells printed as `-`.
impl fmt::Display for NetDistanceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|col| match self.get(Cell { row, col }) {
                    Some(d) => d.to_string(),
                    None => "-".to_string(),
                })
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Ordered cells from source to destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPath {
    cells: Vec<Cell>,
}

impl GridPath {
    /// Accepts any non-empty list of pairwise 8-adjacent cells.
    pub fn new(cells: Vec<Cell>) -> Result<Self, PlanError> {
        if cells.is_empty() {
            return Err(PlanError::Parse("empty path".into()));
        }
        for w in cells.windows(2) {
            if w[0].chebyshev(w[1]) != 1 {
                return Err(PlanError::Parse(format!("cells {} and {} are not adjacent", w[0], w[1])));
            }
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Number of moves, one less than the cell count.
    pub fn steps(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn source(&self) -> Cell {
        self.cells[0]
    }

    pub fn destination(&self) -> Cell {
        *self.cells.last().expect("non-empty")
    }
}

/// `r,c->r,c->...`
impl fmt::Display for GridPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                f.write_str("->")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for GridPath {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cells = s.trim().split("->").map(str::parse).collect::<Result<Vec<Cell>, _>>()?;
        GridPath::new(cells)
    }
}

/// Planner bound to one connectivity configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Planner {
    pub config: PlannerConfig,
}

impl Planner {
    pub fn new(config: PlannerConfig) -> Self {
        Self { config }
    }

    fn check_bounds(grid: &OccupancyGrid, cell: Cell) -> Result<(), PlanError> {
        if grid.contains(cell) {
            Ok(())
        } else {
            Err(PlanError::OutOfBounds { cell, rows: grid.rows(), cols: grid.cols() })
        }
    }

    pub fn label_net_distances(&self, grid: &OccupancyGrid, source: Cell) -> Result<NetDistanceField, PlanError> {
        Self::check_bounds(grid, source)?;
        if !grid.is_navigable(source) {
            return Err(PlanError::SourceBlocked(source));
        }
        let cols = grid.cols();
        let mut dist = vec![None; grid.rows() * cols];
        let mut frontier = VecDeque::new();
        dist[source.row * cols + source.col] = Some(0);
        frontier.push_back(source);
        while let Some(cell) = frontier.pop_front() {
            let d = dist[cell.row * cols + cell.col].expect("queued cells are labeled");
            for next in self.config.neighbors(grid, cell) {
                let slot = &mut dist[next.row * cols + next.col];
                if slot.is_none() {
                    *slot = Some(d + 1);
                    frontier.push_back(next);
                }
            }
        }
        Ok(NetDistanceField { source, rows: grid.rows(), cols, dist, config: self.config })
    }

    pub fn backtrack_path(&self, field: &NetDistanceField, grid: &OccupancyGrid, dest: Cell) -> Result<GridPath, PlanError> {
        Self::check_bounds(grid, dest)?;
        let mut d = field.get(dest).ok_or(PlanError::Unreachable(dest))?;
        let mut cells = vec![dest];
        let mut at = dest;
        while d > 0 {
            // Moves are symmetric, so a predecessor is any cell we could step to.
            at = self
                .config
                .neighbors(grid, at)
                .find(|&n| field.get(n) == Some(d - 1))
                .expect("a labeled cell always has a predecessor");
            cells.push(at);
            d -= 1;
        }
        cells.reverse();
        Ok(GridPath { cells })
    }

    pub fn shortest_path(&self, grid: &OccupancyGrid, src: Cell, dst: Cell) -> Result<GridPath, PlanError> {
        Self::check_bounds(grid, dst)?;
        let field = self.label_net_distances(grid, src)?;
        self.backtrack_path(&field, grid, dst)
    }
}

pub fn label_net_distances(grid: &OccupancyGrid, source: Cell) -> Result<NetDistanceField, PlanError> {
    Planner::default().label_net_distances(grid, source)
}

pub fn backtrack_path(field: &NetDistanceField, grid: &OccupancyGrid, dest: Cell) -> Result<GridPath, PlanError> {
    Planner::new(field.config()).backtrack_path(field, grid, dest)
}

pub fn shortest_path(grid: &OccupancyGrid, src: Cell, dst: Cell) -> Result<GridPath, PlanError> {
    Planner::default().shortest_path(grid, src, dst)
}
