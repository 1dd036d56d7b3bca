//! Ground truth, synthetic imagery and the closed-loop simulation.

mod field;
mod geometry;
mod render;
mod run;
mod scenario;

use thiserror::Error;

pub use field::{synth_field, Bump, FieldParams, MoistureField};
pub use geometry::{default_subfields, segment_distance, Point, Polygon, RhombusPath, Subfield};
pub use render::{
    render_aerial, render_soil, render_subfield_image, RenderError, SoilImage, SoilRenderParams, AERIAL_FRAME_PX,
    AERIAL_MARGIN_PX, PATH_WHITE, SOIL_DARK,
};
pub use run::{inspection_cell, run, Dispatch, Event, EventKind, EventLog, RunOutput};
pub use scenario::{Scenario, ScriptedEvent, SensorPlacement};

use crate::calibration::CalibrationError;
use crate::config::ConfigError;
use crate::estimator::EstimateError;
use crate::link::LinkError;
use crate::mapper::MapperError;
use crate::nav::NavError;
use crate::planner::PlanError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("InvalidScenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Mapper(#[from] MapperError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Link(#[from] LinkError),
}
