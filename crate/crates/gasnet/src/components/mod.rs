//! Constructors for the component model catalog: pipes, branching and
//! joining pipe geometries, valves, tanks, compressors and heat exchangers,
//! plus the nonlinear right-hand sides and a generic linearizer.

mod compressor;
mod heat_exchanger;
mod junction;
mod linearize;
mod manifold;
mod pipe;
mod tank;
mod valve;

pub use compressor::{
    static_compressor, Compressor, CompressorMap, CompressorParams, QuadraticCompressorMap,
};
pub use heat_exchanger::{HeatExchanger, HeatExchangerParams};
pub use junction::{branch, internal_flow_weights, joint, star_junction};
pub use linearize::{linearize, Jacobians, Linearization, LinearizeWarning, NonlinearDynamics};
pub use manifold::{
    valve_manifold, valve_manifold_with_entrances, EntranceCoeffs, ManifoldNominal,
};
pub use pipe::{pipe_coefficients, single_pipe, PipeCoefficients, PipeParams};
pub use tank::{isothermal_tank, NonisothermalTank, TankParams};
pub use valve::{
    dynamic_valve, orifice_flow, orifice_linearization, static_valve, OrificeLinearization,
    OrificeParams,
};

use thiserror::Error;

/// Errors shared across the component catalog.
#[derive(Debug, Error)]
pub enum ComponentError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate junction: the sum of pressure-coefficient products vanishes")]
    DegenerateJunction,
    #[error(
        "orifice model covers forward subsonic flow only (p_left = {p_left}, p_right = {p_right})"
    )]
    InvalidPressureRatio { p_left: f64, p_right: f64 },
    #[error("degenerate operating point: {0}")]
    DegenerateOperatingPoint(String),
    #[error("non-physical state: {0}")]
    NonPhysicalState(String),
    #[error("operating point (q = {q}, omega = {omega}) outside the compressor map domain")]
    MapDomain { q: f64, omega: f64 },
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Connect(#[from] crate::interconnect::ConnectError),
}
