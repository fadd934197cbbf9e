//! The bundled four-patch star instance used by the `star-example` command
//! and throughout the test suite: hub degrees a = (1, 2, 3), return degrees
//! b = (1, 1, 1), transmission beta = (3, 4, 1, 1), recovery
//! gamma = (1, 1, 2, 3), total population 100.
//!
//! Its Perron vector is exactly (1/7, 1/7, 2/7, 3/7); patches 1 and 2 are
//! high-risk, 3 and 4 low-risk. The reproduction number falls from 4 to 4/5
//! across the dispersal range and crosses 1 near d_I ~ 8.476; the profile
//! switch sits near d_I ~ 0.549.

use crate::patch_graph::{star_alpha, star_graph, ConnectivityMatrix};
use crate::reproduction::EpidemicParameters;

pub const HUB_OUT: [f64; 3] = [1.0, 2.0, 3.0];
pub const SPOKE_BACK: [f64; 3] = [1.0, 1.0, 1.0];
pub const BETA: [f64; 4] = [3.0, 4.0, 1.0, 1.0];
pub const GAMMA: [f64; 4] = [1.0, 1.0, 2.0, 3.0];
pub const POPULATION: f64 = 100.0;

pub fn graph() -> ConnectivityMatrix {
    star_graph(&HUB_OUT, &SPOKE_BACK).expect("star fixture is valid")
}

/// Closed-form Perron vector (1/7, 1/7, 2/7, 3/7).
pub fn alpha() -> Vec<f64> {
    star_alpha(&HUB_OUT, &SPOKE_BACK)
}

pub fn parameters(d_s: f64, d_i: f64) -> EpidemicParameters {
    EpidemicParameters::new(BETA.to_vec(), GAMMA.to_vec(), d_s, d_i, POPULATION)
        .expect("star fixture parameters are valid")
}
