//! Sensor-triggered field inspection.
//!
//! Stationary moisture sensors report over a simulated radio link; a dry
//! reading sends a ground robot along the shortest path on an occupancy grid
//! (mapped from a top-down image) to photograph the soil, and the photo is
//! turned into a moisture estimate through a grayscale calibration curve.
//!
//! Modules, bottom up: [`raster`], [`mapper`], [`planner`], [`nav`],
//! [`calibration`], [`estimator`], [`link`], [`sim`]. [`config`] reads the
//! shared `key = value` file format.

pub mod calibration;
pub mod config;
pub mod estimator;
pub mod link;
pub mod mapper;
pub mod nav;
pub mod planner;
pub mod raster;
pub mod sim;

mod error;

pub use error::Error;
