//! Grid path -> rotate / forward commands, and a dead-reckoning executor
//! used to check them.
//!
//! Headings are in degrees, 0 = north (decreasing row), clockwise positive.
//! Waypoints are cell centers.

use std::fmt;

use thiserror::Error;

use crate::mapper::GridSpec;
use crate::planner::{Cell, GridPath};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("StartMismatch: robot is at {pose} but the path starts at {path_start}")]
    StartMismatch { pose: Cell, path_start: Cell },
    #[error("InvalidPath: {0}")]
    InvalidPath(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub cell: Cell,
    heading: f64,
}

impl Pose {
    pub fn new(cell: Cell, heading_deg: f64) -> Self {
        Self { cell, heading: normalize_heading(heading_deg) }
    }

    /// Heading in `[0, 360)`.
    pub fn heading(&self) -> f64 {
        self.heading
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavCommand {
    /// Signed turn in `(-180, 180]`, clockwise positive. Never zero.
    Rotate(f64),
    /// Straight travel in centimeters, always positive.
    Forward(f64),
}

/// `ROTATE <deg>` / `FORWARD <cm>`, three decimals.
impl fmt::Display for NavCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NavCommand::Rotate(deg) => write!(f, "ROTATE {deg:.3}"),
            NavCommand::Forward(cm) => write!(f, "FORWARD {cm:.3}"),
        }
    }
}

pub fn format_commands(cmds: &[NavCommand]) -> String {
    cmds.iter().map(|c| format!("{c}\n")).collect()
}

pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Minimal signed turn from `from` to `to`, in `(-180, 180]`.
pub fn minimal_turn(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Bearing of a unit grid step. The slope between successive cells only
/// takes the eight compass values, so they are tabulated exactly.
fn step_bearing(from: Cell, to: Cell) -> Option<(f64, bool)> {
    let dr = to.row as isize - from.row as isize;
    let dc = to.col as isize - from.col as isize;
    let bearing = match (dr, dc) {
        (-1, 0) => 0.0,
        (-1, 1) => 45.0,
        (0, 1) => 90.0,
        (1, 1) => 135.0,
        (1, 0) => 180.0,
        (1, -1) => 225.0,
        (0, -1) => 270.0,
        (-1, -1) => 315.0,
        _ => return None,
    };
    Some((bearing, dr != 0 && dc != 0))
}

/// Compiles a path into alternating turns and straight runs. Collinear
/// steps are merged into a single `Forward`. Paths of fewer than two cells
/// compile to an empty list.
pub fn compile_commands(path: &GridPath, spec: &GridSpec, start: Pose) -> Result<Vec<NavCommand>, NavError> {
    let cells = path.cells();
    if cells[0] != start.cell {
        return Err(NavError::StartMismatch { pose: start.cell, path_start: cells[0] });
    }
    let cell_cm = spec.cell_cm();
    let mut cmds = Vec::new();
    let mut heading = start.heading;
    // current straight run: (bearing, axis steps, diagonal steps)
    let mut run: Option<(f64, usize, usize)> = None;

    let flush = |cmds: &mut Vec<NavCommand>, run: (f64, usize, usize)| {
        let (_, axis, diag) = run;
        cmds.push(NavCommand::Forward(axis as f64 * cell_cm + diag as f64 * cell_cm * std::f64::consts::SQRT_2));
    };

    for w in cells.windows(2) {
        let (bearing, diagonal) = step_bearing(w[0], w[1])
            .ok_or_else(|| NavError::InvalidPath(format!("cells {} and {} are not adjacent", w[0], w[1])))?;
        match run {
            Some((b, ref mut axis, ref mut diag)) if b == bearing => {
                if diagonal {
                    *diag += 1;
                } else {
                    *axis += 1;
                }
            }
            _ => {
                if let Some(r) = run.take() {
                    flush(&mut cmds, r);
                }
                let turn = minimal_turn(heading, bearing);
                if turn != 0.0 {
                    cmds.push(NavCommand::Rotate(turn));
                }
                heading = bearing;
                run = Some((bearing, usize::from(!diagonal), usize::from(diagonal)));
            }
        }
    }
    if let Some(r) = run {
        flush(&mut cmds, r);
    }
    Ok(cmds)
}

/// Heading after executing `cmds` from `start`.
pub fn final_heading(cmds: &[NavCommand], start: Pose) -> f64 {
    cmds.iter().fold(start.heading, |h, c| match c {
        NavCommand::Rotate(d) => normalize_heading(h + d),
        NavCommand::Forward(_) => h,
    })
}

/// Exact-kinematics dead reckoning from the start cell's center. Returns the
/// start position followed by the position after every `Forward`, in field
/// centimeters `(x, y)` with y growing with row index.
pub fn simulate_execution(cmds: &[NavCommand], start: Pose, spec: &GridSpec) -> Vec<(f64, f64)> {
    let (mut x, mut y) = spec.cell_center_cm(start.cell);
    let mut heading = start.heading;
    let mut visited = vec![(x, y)];
    for cmd in cmds {
        match *cmd {
            NavCommand::Rotate(deg) => heading = normalize_heading(heading + deg),
            NavCommand::Forward(cm) => {
                let rad = heading.to_radians();
                x += cm * rad.sin();
                y -= cm * rad.cos();
                visited.push((x, y));
            }
        }
    }
    visited
}
