//! Scenario definition and its `key = value` file form.
//!
//! ```text
//! seed = 7
//! [field]
//! width = 200
//! height = 160
//! base = 40
//! path_width = 25
//! bump = 60, 40, -10, 30            # cx, cy, amplitude, radius
//! random_bumps = 0
//! event = 3, -, 166.7, 26.7, -25, 40 # from tick, until tick (exclusive, - = never), bump
//! [sensors]
//! sensor = 1, 160, 30               # subfield id, x, y
//! [robot]
//! start = 8,0
//! heading = 0
//! connectivity = 8
//! corner_cutting = true
//! [alarm]
//! threshold = 25
//! [mapper]  [estimator]  [link]     # see config
//! [noise]
//! image_sigma = 0
//! leaves = 3
//! ```

use std::path::Path;
use std::str::FromStr;

use super::field::{synth_field, Bump, FieldParams, MoistureField};
use super::geometry::{default_subfields, Point, RhombusPath, Subfield};
use super::SimError;
use crate::calibration::{invertible_range, published_model, PolynomialModel};
use crate::config::{
    apply_estimator, apply_link, apply_mapper, apply_planner, parse_cell, parse_list, ConfigError, Document,
    PLANNER_KEYS,
};
use crate::estimator::EstimatorConfig;
use crate::link::{AdcModel, MoistureMap};
use crate::mapper::MapperConfig;
use crate::planner::{Cell, PlannerConfig};

/// A bump active for ticks in `[from, until)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptedEvent {
    pub from: u32,
    pub until: Option<u32>,
    pub bump: Bump,
}

impl ScriptedEvent {
    pub fn active(&self, tick: u32) -> bool {
        tick >= self.from && self.until.is_none_or(|u| tick < u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPlacement {
    pub subfield: usize,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub field: FieldParams,
    pub path_width: f64,
    pub events: Vec<ScriptedEvent>,
    /// One per subfield; the sensor id is the index.
    pub sensors: Vec<SensorPlacement>,
    pub robot_start: Cell,
    pub robot_heading: f64,
    pub planner: PlannerConfig,
    pub alarm_threshold: f64,
    pub mapper: MapperConfig,
    pub estimator: EstimatorConfig,
    pub model: PolynomialModel,
    pub adc: AdcModel,
    pub moisture_map: MoistureMap,
    pub image_sigma: f64,
    pub leaves: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        let field = FieldParams::default();
        let sensors = default_subfields(field.width, field.height)
            .iter()
            .map(|s| SensorPlacement { subfield: s.id, position: s.centroid() })
            .collect();
        Self {
            seed: 0,
            field,
            path_width: 25.0,
            events: Vec::new(),
            sensors,
            robot_start: Cell::new(8, 0),
            robot_heading: 0.0,
            planner: PlannerConfig::default(),
            alarm_threshold: 25.0,
            mapper: MapperConfig::default(),
            estimator: EstimatorConfig::default(),
            model: published_model(),
            adc: AdcModel::default(),
            moisture_map: MoistureMap::default(),
            image_sigma: 0.0,
            leaves: 3,
        }
    }
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidScenario(msg.into())
}

impl Scenario {
    pub fn subfields(&self) -> Vec<Subfield> {
        default_subfields(self.field.width, self.field.height)
    }

    pub fn path(&self) -> RhombusPath {
        RhombusPath::new(self.field.width, self.field.height, self.path_width)
    }

    /// Field without scripted events.
    pub fn base_field(&self) -> MoistureField {
        synth_field(&FieldParams { seed: self.seed, ..self.field.clone() })
    }

    pub fn field_at(&self, tick: u32) -> MoistureField {
        let mut f = self.base_field();
        f.bumps.extend(self.events.iter().filter(|e| e.active(tick)).map(|e| e.bump));
        f
    }

    /// Checks that need no aerial map.
    pub fn validate(&self) -> Result<(), SimError> {
        let f = &self.field;
        if !(f.width > 0.0 && f.height > 0.0) {
            return Err(invalid("field dimensions must be positive"));
        }
        if !(0.0..=100.0).contains(&f.base) {
            return Err(invalid(format!("base moisture {} is outside [0, 100]", f.base)));
        }
        if !(self.path_width > 0.0 && self.path_width < f.width.min(f.height) / 2.0) {
            return Err(invalid(format!("path width {} does not fit the field", self.path_width)));
        }
        if !(self.alarm_threshold > 0.0 && self.alarm_threshold < 100.0) {
            return Err(invalid(format!("alarm threshold {} is outside (0, 100)", self.alarm_threshold)));
        }
        if !(self.image_sigma >= 0.0 && self.image_sigma.is_finite()) {
            return Err(invalid("image_sigma must be >= 0"));
        }
        let bumps = f.bumps.iter().chain(self.events.iter().map(|e| &e.bump));
        if bumps.into_iter().any(|b| !(b.radius > 0.0)) {
            return Err(invalid("bump radii must be positive"));
        }
        for e in &self.events {
            if e.until.is_some_and(|u| u <= e.from) {
                return Err(invalid(format!("event ends at {} before it starts at {}", e.until.unwrap(), e.from)));
            }
        }
        let subs = self.subfields();
        let path = self.path();
        if self.sensors.len() != subs.len() {
            return Err(invalid(format!("{} sensors for {} subfields", self.sensors.len(), subs.len())));
        }
        for (id, s) in self.sensors.iter().enumerate() {
            if s.subfield != id {
                return Err(invalid(format!("sensor {id} is assigned to subfield {}", s.subfield)));
            }
            if !subs[id].contains(&path, s.position) {
                return Err(invalid(format!(
                    "sensor {id} at ({:.3}, {:.3}) is outside subfield {}",
                    s.position.0, s.position.1, subs[id].name
                )));
            }
        }
        self.mapper.validate()?;
        self.estimator.validate()?;
        self.adc.validate()?;
        self.moisture_map.validate()?;
        Ok(())
    }

    /// Ticks in `[0, ticks)` where the active event set changes.
    pub fn change_ticks(&self, ticks: u32) -> Vec<u32> {
        let mut out: Vec<u32> = std::iter::once(0)
            .chain(self.events.iter().flat_map(|e| std::iter::once(e.from).chain(e.until)))
            .filter(|&t| t < ticks)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Every soil pixel center (1 px/cm) must map to a gray level the
    /// calibration can invert, at every event configuration the run visits.
    pub fn check_renderable(&self, ticks: u32) -> Result<(), SimError> {
        let (lo, hi) = invertible_range(&self.model);
        let path = self.path();
        let subs = self.subfields();
        let (w, h) = (self.field.width.ceil() as usize, self.field.height.ceil() as usize);
        for t in self.change_ticks(ticks) {
            let field = self.field_at(t);
            for y in 0..h {
                for x in 0..w {
                    let p = (x as f64 + 0.5, y as f64 + 0.5);
                    if path.covers(p) || !subs.iter().any(|s| s.polygon.contains(p)) {
                        continue;
                    }
                    let m = field.eval(p.0, p.1);
                    if !(lo..=hi).contains(&m) {
                        return Err(invalid(format!(
                            "moisture {m:.3} at ({:.1}, {:.1}) tick {t} is outside the invertible range [{lo:.3}, {hi:.3}]",
                            p.0, p.1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses a scenario file. A `model` path in `[estimator]` is resolved
    /// against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, SimError> {
        let doc = Document::parse(text)?;
        doc.check_sections(&["field", "sensors", "robot", "alarm", "mapper", "estimator", "link", "noise"])?;
        let mut sc = Scenario::default();
        let root = doc.root();
        root.check_keys(&["seed"])?;
        root.set("seed", &mut sc.seed)?;

        if let Some(s) = doc.section("field") {
            s.check_keys(&["width", "height", "base", "path_width", "bump", "random_bumps", "event"])?;
            s.set("width", &mut sc.field.width)?;
            s.set("height", &mut sc.field.height)?;
            s.set("base", &mut sc.field.base)?;
            s.set("path_width", &mut sc.path_width)?;
            s.set("random_bumps", &mut sc.field.random_bumps)?;
            for e in s.all("bump") {
                let v = parse_list(e, 4)?;
                sc.field.bumps.push(Bump::new(v[0], v[1], v[2], v[3]));
            }
            for e in s.all("event") {
                sc.events.push(parse_event(e)?);
            }
        }

        // placements default to centroids of the (possibly resized) layout
        let subs = sc.subfields();
        sc.sensors = subs.iter().map(|s| SensorPlacement { subfield: s.id, position: s.centroid() }).collect();
        if let Some(s) = doc.section("sensors") {
            s.check_keys(&["sensor"])?;
            let mut seen = vec![false; subs.len()];
            for e in s.all("sensor") {
                let v = parse_list(e, 3)?;
                let id = v[0] as usize;
                if v[0] < 0.0 || v[0].fract() != 0.0 || id >= subs.len() {
                    return Err(ConfigError::new(e.line, format!("no subfield {}", v[0])).into());
                }
                if std::mem::replace(&mut seen[id], true) {
                    return Err(ConfigError::new(e.line, format!("subfield {id} already has a sensor")).into());
                }
                sc.sensors[id].position = (v[1], v[2]);
            }
        }

        if let Some(s) = doc.section("robot") {
            let mut keys = vec!["start", "heading"];
            keys.extend_from_slice(PLANNER_KEYS);
            s.check_keys(&keys)?;
            if let Some(e) = s.one("start")? {
                sc.robot_start = parse_cell(e)?;
            }
            s.set("heading", &mut sc.robot_heading)?;
            apply_planner(s, &mut sc.planner)?;
        }
        if let Some(s) = doc.section("alarm") {
            s.check_keys(&["threshold"])?;
            s.set("threshold", &mut sc.alarm_threshold)?;
        }
        if let Some(s) = doc.section("mapper") {
            apply_mapper(s, &mut sc.mapper)?;
        }
        if let Some(s) = doc.section("estimator") {
            if let Some(p) = apply_estimator(s, &mut sc.estimator)? {
                let full = base_dir.map_or_else(|| Path::new(&p).to_path_buf(), |b| b.join(&p));
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| invalid(format!("cannot read model {}: {e}", full.display())))?;
                sc.model = text.parse()?;
            }
        }
        if let Some(s) = doc.section("link") {
            apply_link(s, &mut sc.adc, &mut sc.moisture_map)?;
        }
        if let Some(s) = doc.section("noise") {
            s.check_keys(&["image_sigma", "leaves"])?;
            s.set("image_sigma", &mut sc.image_sigma)?;
            s.set("leaves", &mut sc.leaves)?;
        }
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }
}

impl FromStr for Scenario {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, None)
    }
}

fn parse_event(e: &crate::config::Entry) -> Result<ScriptedEvent, ConfigError> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    let bad = || ConfigError::new(e.line, format!("event needs from, until|-, cx, cy, amplitude, radius; got {:?}", e.value));
    if parts.len() != 6 {
        return Err(bad());
    }
    let from = parts[0].parse().map_err(|_| bad())?;
    let until = match parts[1] {
        "-" => None,
        u => Some(u.parse().map_err(|_| bad())?),
    };
    let nums: Vec<f64> = parts[2..].iter().map(|p| p.parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
    Ok(ScriptedEvent { from, until, bump: Bump::new(nums[0], nums[1], nums[2], nums[3]) })
}
