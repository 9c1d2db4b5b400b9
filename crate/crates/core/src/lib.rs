//! Scenario-driven GUI test generation engine.
//!
//! The engine runs an observe / decide / execute / verify / record loop over a
//! pluggable LLM provider and a pluggable device backend. A deterministic
//! scripted provider and an in-process simulated app make whole runs
//! reproducible on a desk, while the same contracts drive a real device
//! bridge and an HTTP chat-completions provider.

pub mod font;
pub mod geometry;
pub mod raster;
pub mod util;

pub mod memory;
pub mod perception;

pub mod gateway;

pub mod decider;
pub mod device;
pub mod supervisor;

pub mod metrics;
pub mod recorder;

pub mod orchestrator;

pub mod fixtures;

pub use geometry::{BoundingBox, Direction, Point};
pub use raster::RasterImage;
