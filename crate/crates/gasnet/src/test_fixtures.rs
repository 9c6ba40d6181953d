//! Shared parameter sets for unit tests.

use crate::components::{
    Compressor, CompressorParams, OrificeParams, PipeParams, QuadraticCompressorMap, TankParams,
};
use crate::gas::GasProperties;

/// Gas with R_s*T_0*z_0 = 135000 used throughout the component examples;
/// c_p - c_v = R_s keeps thermal equilibria exact.
pub(crate) fn test_gas() -> GasProperties {
    GasProperties::new(500.0, 300.0, 0.9, 2000.0, 1500.0, 9.81).unwrap()
}

pub(crate) fn test_pipe() -> PipeParams {
    PipeParams {
        area: 0.1,
        length: 1000.0,
        diameter: 0.5,
        lambda: 0.01,
        elevation: 0.0,
        gas: test_gas(),
        nominal_p_left: 5e6,
        nominal_q: 10.0,
    }
}

/// Orifice whose gas has mu = 1.4 for round pressure-ratio exponents.
pub(crate) fn test_orifice() -> OrificeParams {
    OrificeParams {
        c_d: 0.8,
        d0: 0.05,
        d1: 0.1,
        gas: GasProperties::new(500.0, 300.0, 0.9, 2100.0, 1500.0, 9.81).unwrap(),
        a_o_max: std::f64::consts::PI * 0.025 * 0.025,
        tau: 0.5,
    }
}

pub(crate) fn test_tank() -> TankParams {
    TankParams {
        volume: 10.0,
        gas: test_gas(),
        n_inlets: 1,
        n_outlets: 1,
        nominal_p: 5e6,
        nominal_t: 300.0,
    }
}

pub(crate) fn test_compressor() -> Compressor {
    Compressor::new(
        "c",
        CompressorParams {
            plenum_volume: 2.0,
            duct_area: 0.05,
            duct_length: 4.0,
            eta: 1.4,
            gas: test_gas(),
            map: Box::new(QuadraticCompressorMap {
                c_speed: 0.5,
                c_flow: 1000.0,
                q_range: (0.0, 60.0),
                omega_range: (100.0, 4000.0),
            }),
        },
    )
    .unwrap()
}
