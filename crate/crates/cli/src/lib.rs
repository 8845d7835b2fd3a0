//! Command-line pipeline around the `semiclassical` crate.

pub mod app;
pub mod manifest;
pub mod orbit_file;
pub mod policy;
pub mod render;
pub mod table1;
