//! Line-based `key = value` files with `[section]` headers.
//!
//! ```text
//! seed = 7
//! [mapper]
//! cell_px = 20        # trailing comments are allowed
//! [field]
//! bump = 40, 30, -20, 25
//! bump = 160, 120, 10, 30
//! ```
//!
//! Keys before the first header belong to the root section `""`. Keys may
//! repeat where the reader asks for a list; otherwise a repeat is an error,
//! as is any key the reader does not know.

use std::collections::BTreeSet;
use std::str::FromStr;

use thiserror::Error;

use crate::estimator::{EstimatorConfig, HsvRange};
use crate::link::{AdcModel, MoistureMap};
use crate::mapper::MapperConfig;
use crate::planner::{Cell, Connectivity, PlannerConfig};
use crate::raster::Threshold;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("ConfigError: line {line}: {msg}")]
pub struct ConfigError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub msg: String,
}

impl ConfigError {
    pub fn new(line: usize, msg: impl Into<String>) -> Self {
        Self { line, msg: msg.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    fn new(name: &str, line: usize) -> Self {
        Self { name: name.to_string(), line, entries: Vec::new() }
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    /// The single entry for `key`, if present.
    pub fn one<'a>(&'a self, key: &'a str) -> Result<Option<&'a Entry>, ConfigError> {
        let mut it = self.all(key);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(ConfigError::new(dup.line, format!("[{}] {key} given more than once", self.name)));
        }
        Ok(first)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.one(key)? {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::new(e.line, format!("bad value {:?} for {key}", e.value))),
        }
    }

    /// Overwrites `slot` when `key` is present.
    pub fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(ConfigError::new(e.line, format!("unknown key {:?} in [{}]", e.key, self.name))),
            None => Ok(()),
        }
    }
}

/// Comma-separated floats with an exact arity.
pub fn parse_list(entry: &Entry, n: usize) -> Result<Vec<f64>, ConfigError> {
    let vals: Vec<f64> = entry
        .value
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ConfigError::new(entry.line, format!("bad number list {:?}", entry.value)))?;
    if vals.len() != n {
        return Err(ConfigError::new(entry.line, format!("{} expects {n} values, got {}", entry.key, vals.len())));
    }
    Ok(vals)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections = vec![Section::new("", 0)];
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| ConfigError::new(n, format!("malformed section header {line:?}")))?;
                if !seen.insert(name.to_string()) {
                    return Err(ConfigError::new(n, format!("section [{name}] appears twice")));
                }
                sections.push(Section::new(name, n));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(n, format!("expected key = value, got {line:?}")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::new(n, "empty key"));
            }
            sections.last_mut().unwrap().entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line: n,
            });
        }
        Ok(Self { sections })
    }

    pub fn root(&self) -> &Section {
        &self.sections[0]
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().skip(1).find(|s| s.name == name)
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().skip(1).map(|s| s.name.as_str())
    }

    /// Rejects sections outside `allowed`.
    pub fn check_sections(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.sections.iter().skip(1).find(|s| !allowed.contains(&s.name.as_str())) {
            Some(s) => Err(ConfigError::new(s.line, format!("unknown section [{}]", s.name))),
            None => Ok(()),
        }
    }
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => Err(ConfigError::new(e.line, format!("expected true or false, got {v:?}"))),
    }
}

pub const MAPPER_KEYS: &[&str] = &[
    "dark_threshold",
    "resize_w",
    "resize_h",
    "cell_px",
    "cm_per_px",
    "sigma",
    "blur_radius",
    "binarize",
    "white_threshold",
    "robot_footprint_cm",
];

/// `binarize` is `otsu` or a fixed gray level.
pub fn apply_mapper(sec: &Section, cfg: &mut MapperConfig) -> Result<(), ConfigError> {
    sec.check_keys(MAPPER_KEYS)?;
    sec.set("dark_threshold", &mut cfg.dark_threshold)?;
    sec.set("resize_w", &mut cfg.resize_w)?;
    sec.set("resize_h", &mut cfg.resize_h)?;
    sec.set("cell_px", &mut cfg.cell_px)?;
    sec.set("cm_per_px", &mut cfg.cm_per_px)?;
    sec.set("sigma", &mut cfg.sigma)?;
    if let Some(r) = sec.get::<usize>("blur_radius")? {
        cfg.blur_radius = Some(r);
    }
    if let Some(e) = sec.one("binarize")? {
        cfg.binarize = match e.value.as_str() {
            "otsu" => Threshold::Otsu,
            v => Threshold::Fixed(
                v.parse()
                    .map_err(|_| ConfigError::new(e.line, format!("binarize must be otsu or 0..=255, got {v:?}")))?,
            ),
        };
    }
    sec.set("white_threshold", &mut cfg.white_threshold)?;
    sec.set("robot_footprint_cm", &mut cfg.robot_footprint_cm)?;
    Ok(())
}

pub const ESTIMATOR_KEYS: &[&str] =
    &["h_lo", "h_hi", "s_lo", "s_hi", "v_lo", "v_hi", "target_v", "min_kept_fraction", "model"];

/// Applies estimator keys and returns the `model` path, if given.
pub fn apply_estimator(sec: &Section, cfg: &mut EstimatorConfig) -> Result<Option<String>, ConfigError> {
    sec.check_keys(ESTIMATOR_KEYS)?;
    let r: &mut HsvRange = &mut cfg.range;
    sec.set("h_lo", &mut r.h_lo)?;
    sec.set("h_hi", &mut r.h_hi)?;
    sec.set("s_lo", &mut r.s_lo)?;
    sec.set("s_hi", &mut r.s_hi)?;
    sec.set("v_lo", &mut r.v_lo)?;
    sec.set("v_hi", &mut r.v_hi)?;
    sec.set("target_v", &mut cfg.target_v)?;
    sec.set("min_kept_fraction", &mut cfg.min_kept_fraction)?;
    Ok(sec.one("model")?.map(|e| e.value.clone()))
}

pub const LINK_KEYS: &[&str] = &["v_ref", "bits", "v_sensor_max", "divider_ratio", "v_dry", "v_wet"];

pub fn apply_link(sec: &Section, adc: &mut AdcModel, map: &mut MoistureMap) -> Result<(), ConfigError> {
    sec.check_keys(LINK_KEYS)?;
    sec.set("v_ref", &mut adc.v_ref)?;
    sec.set("bits", &mut adc.bits)?;
    sec.set("v_sensor_max", &mut adc.v_sensor_max)?;
    sec.set("divider_ratio", &mut adc.divider_ratio)?;
    sec.set("v_dry", &mut map.v_dry)?;
    sec.set("v_wet", &mut map.v_wet)?;
    Ok(())
}

pub const PLANNER_KEYS: &[&str] = &["connectivity", "corner_cutting"];

/// `connectivity` is 4 or 8.
pub fn apply_planner(sec: &Section, cfg: &mut PlannerConfig) -> Result<(), ConfigError> {
    if let Some(e) = sec.one("connectivity")? {
        cfg.connectivity = match e.value.as_str() {
            "4" => Connectivity::Four,
            "8" => Connectivity::Eight,
            v => return Err(ConfigError::new(e.line, format!("connectivity must be 4 or 8, got {v:?}"))),
        };
    }
    if let Some(e) = sec.one("corner_cutting")? {
        cfg.corner_cutting = parse_bool(e)?;
    }
    Ok(())
}

pub fn parse_cell(e: &Entry) -> Result<Cell, ConfigError> {
    e.value
        .parse()
        .map_err(|_| ConfigError::new(e.line, format!("expected row,col, got {:?}", e.value)))
}

/// Settings for the single-stage commands: `[mapper]`, `[robot]` (planner
/// keys only) and `[estimator]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineConfig {
    pub mapper: MapperConfig,
    pub planner: PlannerConfig,
    pub estimator: EstimatorConfig,
    pub model_path: Option<String>,
}

impl FromStr for PipelineConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let doc = Document::parse(text)?;
        doc.check_sections(&["mapper", "robot", "estimator"])?;
        doc.root().check_keys(&[])?;
        let mut cfg = PipelineConfig::default();
        if let Some(s) = doc.section("mapper") {
            apply_mapper(s, &mut cfg.mapper)?;
        }
        if let Some(s) = doc.section("robot") {
            s.check_keys(PLANNER_KEYS)?;
            apply_planner(s, &mut cfg.planner)?;
        }
        if let Some(s) = doc.section("estimator") {
            cfg.model_path = apply_estimator(s, &mut cfg.estimator)?;
        }
        Ok(cfg)
    }
}
