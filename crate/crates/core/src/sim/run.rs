//! The monitor / alarm / dispatch / inspect loop.
//!
//! Per tick every sensor reports over the simulated link. A sensor whose
//! reading is below the threshold raises ALARM until its subfield has been
//! inspected; afterwards it stays quiet until the reading recovers. At most
//! one subfield is dispatched per tick (single robot): the lowest reading,
//! ties to the lowest sensor id.

use std::fmt;

use super::geometry::Subfield;
use super::render::{render_aerial, render_subfield_image, SoilImage, SoilRenderParams};
use super::scenario::Scenario;
use super::SimError;
use crate::estimator::{estimate_moisture, MoistureEstimate};
use crate::link::{decode_frame, encode_frame};
use crate::mapper::{map_field, MappedField, OccupancyGrid};
use crate::nav::{compile_commands, final_heading, NavCommand, Pose};
use crate::planner::{Cell, GridPath, PlanError, Planner};
use crate::raster::RgbRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Sample,
    Alarm,
    Dispatch,
    Path,
    Inspect,
    Estimate,
    Report,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Sample => "SAMPLE",
            EventKind::Alarm => "ALARM",
            EventKind::Dispatch => "DISPATCH",
            EventKind::Path => "PATH",
            EventKind::Inspect => "INSPECT",
            EventKind::Estimate => "ESTIMATE",
            EventKind::Report => "REPORT",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub tick: u32,
    pub kind: EventKind,
    pub fields: Vec<(&'static str, String)>,
}

impl Event {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tick={} kind={}", self.tick, self.kind)?;
        for (k, v) in &self.fields {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.of_kind(kind).count()
    }

    fn push(&mut self, tick: u32, kind: EventKind, fields: Vec<(&'static str, String)>) {
        self.events.push(Event { tick, kind, fields });
    }
}

/// One event per line, newline terminated.
impl fmt::Display for EventLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Dispatch {
    pub tick: u32,
    pub subfield: usize,
    pub target: Cell,
    /// `None` when the target was unreachable.
    pub path: Option<GridPath>,
    pub commands: Vec<NavCommand>,
    pub soil: Option<SoilImage>,
    pub estimate: Option<MoistureEstimate>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: EventLog,
    pub dispatches: Vec<Dispatch>,
    pub aerial: RgbRaster,
    pub mapped: MappedField,
    pub inspection_cells: Vec<Cell>,
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

/// Navigable cell whose center is nearest the subfield centroid; ties go to
/// the lowest (row, col).
pub fn inspection_cell(grid: &OccupancyGrid, subfield: &Subfield) -> Option<Cell> {
    let (cx, cy) = subfield.centroid();
    let mut best: Option<(f64, Cell)> = None;
    for cell in grid.navigable_cells() {
        let (x, y) = grid.spec().cell_center_cm(cell);
        let d = (x - cx).powi(2) + (y - cy).powi(2);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, cell));
        }
    }
    best.map(|(_, c)| c)
}

fn render_seed(seed: u64, tick: u32, subfield: usize) -> u64 {
    seed ^ ((tick as u64) << 20) ^ ((subfield as u64 + 1) << 52)
}

/// Runs `ticks` ticks. Scenario problems are reported before tick 0.
pub fn run(scenario: &Scenario, ticks: u32) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    scenario.check_renderable(ticks)?;
    let subfields = scenario.subfields();
    let path_geom = scenario.path();

    let aerial = render_aerial(
        scenario.field.width,
        scenario.field.height,
        &path_geom,
        scenario.mapper.cm_per_px,
        scenario.seed,
    );
    let mapped = map_field(&aerial, &scenario.mapper)?;
    let grid = &mapped.grid;
    if !grid.is_navigable(scenario.robot_start) {
        return Err(SimError::InvalidScenario(format!(
            "robot start {} is not a navigable cell",
            scenario.robot_start
        )));
    }
    let inspection_cells = subfields
        .iter()
        .map(|s| {
            inspection_cell(grid, s)
                .ok_or_else(|| SimError::InvalidScenario("the aerial map has no navigable cells".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let planner = Planner::new(scenario.planner);
    let mut robot = Pose::new(scenario.robot_start, scenario.robot_heading);
    let mut latched = vec![false; scenario.sensors.len()];
    let mut log = EventLog::default();
    let mut dispatches = Vec::new();

    for tick in 0..ticks {
        let field = scenario.field_at(tick);

        let mut readings = Vec::with_capacity(scenario.sensors.len());
        for (id, sensor) in scenario.sensors.iter().enumerate() {
            let truth = field.eval(sensor.position.0, sensor.position.1);
            let volts = scenario.moisture_map.moisture_to_voltage(truth).clamp(0.0, scenario.adc.v_sensor_max);
            let frame = encode_frame(&scenario.adc, id as u8, tick as u16, volts)?;
            let reading = decode_frame(&scenario.adc, &scenario.moisture_map, frame.bytes())?;
            log.push(
                tick,
                EventKind::Sample,
                vec![
                    ("sensor", id.to_string()),
                    ("seq", reading.sequence.to_string()),
                    ("code", reading.code.to_string()),
                    ("voltage", f3(reading.voltage)),
                    ("moisture", f3(reading.moisture)),
                    ("truth", f3(truth)),
                    ("frame", format!("\"{}\"", frame.to_hex())),
                ],
            );
            readings.push(reading.moisture);
        }

        let mut alarmed = Vec::new();
        for (id, &m) in readings.iter().enumerate() {
            if m >= scenario.alarm_threshold {
                latched[id] = false;
            } else if !latched[id] {
                log.push(
                    tick,
                    EventKind::Alarm,
                    vec![
                        ("sensor", id.to_string()),
                        ("moisture", f3(m)),
                        ("threshold", f3(scenario.alarm_threshold)),
                    ],
                );
                alarmed.push(id);
            }
        }

        // lowest reading first; ids are ascending so min_by keeps the first tie
        let Some(&id) = alarmed.iter().min_by(|&&a, &&b| readings[a].total_cmp(&readings[b])) else {
            continue;
        };
        latched[id] = true;
        let sub = &subfields[id];
        let target = inspection_cells[id];
        log.push(
            tick,
            EventKind::Dispatch,
            vec![
                ("sensor", id.to_string()),
                ("subfield", sub.name.to_string()),
                ("from", robot.cell.to_string()),
                ("to", target.to_string()),
            ],
        );

        let path = match planner.shortest_path(grid, robot.cell, target) {
            Ok(p) => p,
            Err(PlanError::Unreachable(_)) => {
                log.push(
                    tick,
                    EventKind::Report,
                    vec![("subfield", sub.name.to_string()), ("status", "unreachable".into())],
                );
                dispatches.push(Dispatch {
                    tick,
                    subfield: id,
                    target,
                    path: None,
                    commands: Vec::new(),
                    soil: None,
                    estimate: None,
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let commands = compile_commands(&path, grid.spec(), robot)?;
        let route: Vec<String> = path.cells().iter().map(Cell::to_string).collect();
        log.push(
            tick,
            EventKind::Path,
            vec![
                ("cells", path.len().to_string()),
                ("commands", commands.len().to_string()),
                ("route", route.join("->")),
            ],
        );
        robot = Pose::new(target, final_heading(&commands, robot));

        let params = SoilRenderParams {
            noise_sigma: scenario.image_sigma,
            seed: render_seed(scenario.seed, tick, id),
            target_v: scenario.estimator.target_v,
            leaves: scenario.leaves,
            px_per_cm: 1.0,
        };
        let soil = render_subfield_image(&field, sub, &path_geom, &scenario.model, &params)?;
        log.push(
            tick,
            EventKind::Inspect,
            vec![
                ("subfield", sub.name.to_string()),
                ("cell", target.to_string()),
                ("pixels", soil.region_pixels.to_string()),
                ("truth_mean", f3(soil.truth_mean)),
            ],
        );

        let estimate = match estimate_moisture(&soil.image, &scenario.model, &scenario.estimator) {
            Ok(est) => {
                log.push(
                    tick,
                    EventKind::Estimate,
                    vec![
                        ("subfield", sub.name.to_string()),
                        ("moisture", f3(est.moisture)),
                        ("avg_gray", f3(est.avg_gray)),
                        ("kept_fraction", f3(est.kept_fraction)),
                        ("clamped", est.clamped.to_string()),
                    ],
                );
                let verdict = if est.moisture < scenario.alarm_threshold { "confirmed_dry" } else { "false_alarm" };
                log.push(
                    tick,
                    EventKind::Report,
                    vec![
                        ("subfield", sub.name.to_string()),
                        ("status", "ok".into()),
                        ("estimate", f3(est.moisture)),
                        ("threshold", f3(scenario.alarm_threshold)),
                        ("verdict", verdict.into()),
                    ],
                );
                Some(est)
            }
            Err(e) => {
                let msg = e.to_string();
                let name = msg.split(':').next().unwrap_or("EstimateError").to_string();
                log.push(
                    tick,
                    EventKind::Report,
                    vec![
                        ("subfield", sub.name.to_string()),
                        ("status", "estimate_failed".into()),
                        ("error", name),
                    ],
                );
                None
            }
        };
        dispatches.push(Dispatch { tick, subfield: id, target, path: Some(path), commands, soil: Some(soil), estimate });
    }

    Ok(RunOutput { log, dispatches, aerial, mapped, inspection_cells })
}
