//! Two-state lumped model of isothermal flow through a single pipe.
//!
//! The pipe is discretized to one pressure node at the right end and one flow
//! node at the left end. With boundary conditions p_l (given pressure) and
//! q_r (given flow), the deviation dynamics around the nominal operating
//! point (p̄_l, q̄) are
//!
//! ```text
//! d/dt p_r = alpha   * (q_r - q_l)
//! d/dt q_l = beta_pr * p_r + beta_pl * p_l + gamma * q_l
//! ```

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::ComponentError;
use crate::gas::GasProperties;
use crate::label::{SignalDirection, SignalKind, SignalLabel};
use crate::model::LabeledLinearModel;

/// Geometry, friction and nominal operating point of one pipe segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeParams {
    /// Cross-sectional area \[m²\]
    pub area: f64,
    /// Length \[m\]
    pub length: f64,
    /// Inside diameter \[m\]
    pub diameter: f64,
    /// Darcy-Weisbach friction factor \[1\]
    pub lambda: f64,
    /// Elevation change from left to right end \[m\]
    pub elevation: f64,
    pub gas: GasProperties,
    /// Nominal pressure at the left end \[Pa\]
    pub nominal_p_left: f64,
    /// Nominal mass flow \[kg/s\]
    pub nominal_q: f64,
}

impl PipeParams {
    fn validate(&self) -> Result<(), ComponentError> {
        let positives = [
            ("area", self.area),
            ("length", self.length),
            ("diameter", self.diameter),
            ("nominal_p_left", self.nominal_p_left),
        ];
        for (name, value) in positives {
            if !(value > 0.0) {
                return Err(ComponentError::InvalidParams(format!(
                    "pipe {name} must be strictly positive, got {value}"
                )));
            }
        }
        if self.lambda < 0.0 {
            return Err(ComponentError::InvalidParams(format!(
                "pipe lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// The four coefficients of the lumped pipe dynamics, all SI-consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipeCoefficients {
    /// Pressure-node coefficient alpha = -R_s T_0 z_0 / (A X) \[Pa/kg\]
    pub alpha: f64,
    /// Flow response to the right-end pressure, -A/X \[m\]
    pub beta_pr: f64,
    /// Flow response to left pressure (includes friction and elevation terms)
    pub beta_pl: f64,
    /// Flow damping from friction, zero at zero nominal flow
    pub gamma: f64,
}

/// Evaluates the closed-form pipe coefficients at the nominal operating
/// point. The elevation term enters `beta_pl` with a minus sign.
pub fn pipe_coefficients(p: &PipeParams) -> Result<PipeCoefficients, ComponentError> {
    p.validate()?;
    let rtz = p.gas.rtz();
    let alpha = -rtz / (p.area * p.length);
    let beta_pr = -p.area / p.length;
    let q = p.nominal_q;
    let pl = p.nominal_p_left;
    let beta_pl = p.area / p.length
        + (p.lambda * rtz / (2.0 * p.diameter * p.area)) * (q * q.abs()) / (pl * pl)
        - p.area * p.gas.g * p.elevation / (rtz * p.length);
    let gamma = -(p.lambda * rtz / (p.diameter * p.area)) * q.abs() / pl;
    Ok(PipeCoefficients {
        alpha,
        beta_pr,
        beta_pl,
        gamma,
    })
}

/// Builds the two-state single-pipe model with x = y = (p_r, q_l) and
/// u = (p_l, q_r). The nominal map carries the steady operating point, with
/// the right pressure solved from the steady flow balance.
pub fn single_pipe(id: &str, p: &PipeParams) -> Result<LabeledLinearModel, ComponentError> {
    let k = pipe_coefficients(p)?;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, -k.alpha, k.beta_pr, k.gamma]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, k.alpha, k.beta_pl, 0.0]);
    let c = DMatrix::identity(2, 2);
    let d = DMatrix::zeros(2, 2);

    let state = |name: &str, kind| SignalLabel::new(id, name, kind, SignalDirection::State);
    let input = |name: &str, kind| SignalLabel::new(id, name, kind, SignalDirection::Input);
    let output = |name: &str, kind| SignalLabel::new(id, name, kind, SignalDirection::Output);

    let model = LabeledLinearModel::new(
        a,
        b,
        c,
        d,
        vec![
            state("p_r", SignalKind::Pressure),
            state("q_l", SignalKind::MassFlow),
        ],
        vec![
            input("p_l", SignalKind::Pressure),
            input("q_r", SignalKind::MassFlow),
        ],
        vec![
            output("p_r", SignalKind::Pressure),
            output("q_l", SignalKind::MassFlow),
        ],
    )?;

    // Steady right pressure from beta_pr*p_r + beta_pl*p_l + gamma*q = 0.
    let p_r_nominal = -(k.beta_pl * p.nominal_p_left + k.gamma * p.nominal_q) / k.beta_pr;
    let mut nominal = BTreeMap::new();
    nominal.insert(crate::label::SignalId::new(id, "p_l"), p.nominal_p_left);
    nominal.insert(crate::label::SignalId::new(id, "p_r"), p_r_nominal);
    nominal.insert(crate::label::SignalId::new(id, "q_l"), p.nominal_q);
    nominal.insert(crate::label::SignalId::new(id, "q_r"), p.nominal_q);
    Ok(model.with_nominal(nominal))
}
