//! Control-oriented linear state-space models of gas transport networks.
//!
//! The crate builds labeled LTI models for the standard catalog of gas-network
//! equipment (pipes, branching and joining pipe geometries, valves, tanks,
//! compressors, heat exchangers), interconnects them into whole-network models
//! through typed pressure/flow ports, and provides the verification and
//! simulation machinery needed to trust the result: conservation-of-mass
//! checks at DC, finite-difference Jacobian cross-checks, exact
//! zero-order-hold simulation of linear models and fixed-step RK4 for the
//! nonlinear component dynamics.

// Parameter guards are written `!(x > 0.0)` so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod components;
pub mod gas;
pub mod interconnect;
pub mod label;
pub mod model;
pub mod sim;
pub mod verify;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use gas::GasProperties;
pub use label::{SignalDirection, SignalId, SignalKind, SignalLabel};
pub use model::{LabeledLinearModel, ModelError};
