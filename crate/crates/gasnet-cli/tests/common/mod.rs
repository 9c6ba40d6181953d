//! Fixtures shared by the acceptance criteria.

#![allow(dead_code)]

use std::path::PathBuf;

use gasnet::components::{PipeParams, TankParams};
use gasnet::GasProperties;
use nalgebra::{Complex, DMatrix};

/// Gas with c_p - c_v = R_s so thermal equilibria are exact.
pub fn gas() -> GasProperties {
    GasProperties::new(500.0, 300.0, 0.9, 2000.0, 1500.0, 9.81).unwrap()
}

pub fn pipe(length: f64, p_left: f64, q: f64) -> PipeParams {
    PipeParams {
        area: 0.1,
        length,
        diameter: 0.5,
        lambda: 0.01,
        elevation: 0.0,
        gas: gas(),
        nominal_p_left: p_left,
        nominal_q: q,
    }
}

pub fn tank(p: f64, outlets: usize) -> TankParams {
    TankParams {
        volume: 12.0,
        gas: gas(),
        n_inlets: 1,
        n_outlets: outlets,
        nominal_p: p,
        nominal_t: 300.0,
    }
}

pub fn network_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("networks")
        .join(name)
}

pub fn log_frequencies(points: usize) -> Vec<f64> {
    gasnet::sim::log_spaced(1e-4, 1e1, points)
}

pub fn max_rel_deviation(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let scale = b[(i, j)].norm().max(1e-9);
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm() / scale);
        }
    }
    worst
}
