//! Forest-fire risk classification on temperature, humidity and oxygen
//! readings, a simulated sensor edge with adaptive-threshold alerting, and an
//! HTTP prediction service.

pub mod cli;
pub mod dataset;
pub mod edge;
pub mod json;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod service;
