//! Network fundamental diagrams from loop-detector counts.
//!
//! The pipeline runs in stages, each a module:
//!
//! - [`ingest`] reads hourly detector CSVs and keeps complete weekdays.
//! - [`network`] loads an OSM-derived road network and lane statistics.
//! - [`conflation`] matches detector geometries to ways and zones.
//! - [`nfd`] turns occupancy and flow into zone states, and calibrates the
//!   effective vehicle length `s`.
//! - [`resampling`] builds the re-sampled state cloud and its envelope.
//! - [`metrics`] derives capacity, critical density and free-flow speed and
//!   compares periods.
//! - [`synthlab`] generates synthetic studies with a known ground truth.
//! - [`pipeline`] runs a whole study from a [`config::StudyConfig`].
//!
//! Runnable walkthroughs live in `examples/`, one per stage.

pub mod config;
pub mod conflation;
pub mod error;
pub mod geo;
mod geojson;
pub mod ingest;
pub mod metrics;
pub mod network;
pub mod nfd;
pub mod pipeline;
pub mod resampling;
pub mod synthlab;

pub use config::StudyConfig;
pub use error::{Error, Result};
pub use metrics::NfdMetrics;
pub use nfd::CalibrationScalar;
pub use synthlab::{SynthScenario, TriangularFD};
