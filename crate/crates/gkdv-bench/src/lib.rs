//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use gkdv_core::{Field, ModelParams, Sign, SpectralGrid};

/// The default production grid: n = 1024 on [-32 pi, 32 pi).
pub fn default_grid() -> Arc<SpectralGrid> {
    SpectralGrid::new(1024, 32.0 * std::f64::consts::PI).expect("default grid is valid")
}

pub fn default_params() -> ModelParams {
    ModelParams::new(0.5, Sign::Plus, 0.1, 1e9).expect("default params are valid")
}

/// Smooth sech-type payload with unit-scale amplitude.
pub fn sech_field(grid: &Arc<SpectralGrid>) -> Field {
    Field::from_real_fn(grid, |x| 1.2 / (0.5 * x).cosh().powi(2))
}
