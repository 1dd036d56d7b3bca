use thiserror::Error;

use crate::calibration::CalibrationError;
use crate::config::ConfigError;
use crate::estimator::EstimateError;
use crate::link::LinkError;
use crate::mapper::MapperError;
use crate::nav::NavError;
use crate::planner::PlanError;
use crate::raster::RasterError;
use crate::sim::{RenderError, SimError};

/// Any error the crate produces. Every message starts with the name of the
/// condition, e.g. `Unreachable: ...`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Mapper(#[from] MapperError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl Error {
    /// Condition name, the text before the first colon.
    pub fn condition(&self) -> String {
        let msg = self.to_string();
        msg.split(':').next().unwrap_or_default().trim().to_string()
    }
}
