//! Control valves: a static pressure gain and a dynamic model built from the
//! compressible orifice equation with a first-order actuator.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::ComponentError;
use crate::gas::GasProperties;
use crate::label::{SignalDirection, SignalId, SignalKind, SignalLabel};
use crate::model::LabeledLinearModel;

/// Bracket threshold below which the orifice linearization blows up (the
/// pressure-ratio term vanishes as p_right -> p_left).
const ORIFICE_BRACKET_MIN: f64 = 1e-12;

/// Static valve: pressure gain k_v in (0, 1), flow passed through unchanged.
/// y = (p_r, q_l), u = (p_l, q_r), D = [[k_v, 0], [0, 1]].
pub fn static_valve(id: &str, k_v: f64) -> Result<LabeledLinearModel, ComponentError> {
    if !(k_v > 0.0 && k_v < 1.0) {
        return Err(ComponentError::InvalidParams(format!(
            "valve gain must lie in the open interval (0, 1), got {k_v}"
        )));
    }
    static_gain(id, k_v)
}

pub(crate) fn static_gain(id: &str, gain: f64) -> Result<LabeledLinearModel, ComponentError> {
    let d = DMatrix::from_row_slice(2, 2, &[gain, 0.0, 0.0, 1.0]);
    Ok(LabeledLinearModel::new_static(
        d,
        vec![
            SignalLabel::new(id, "p_l", SignalKind::Pressure, SignalDirection::Input),
            SignalLabel::new(id, "q_r", SignalKind::MassFlow, SignalDirection::Input),
        ],
        vec![
            SignalLabel::new(id, "p_r", SignalKind::Pressure, SignalDirection::Output),
            SignalLabel::new(id, "q_l", SignalKind::MassFlow, SignalDirection::Output),
        ],
    )?)
}

/// Orifice geometry, gas and actuator constants for the dynamic valve.
#[derive(Debug, Clone, PartialEq)]
pub struct OrificeParams {
    /// Discharge coefficient \[1\]
    pub c_d: f64,
    /// Orifice diameter \[m\]
    pub d0: f64,
    /// Pipe diameter \[m\]
    pub d1: f64,
    pub gas: GasProperties,
    /// Fully-open cross-sectional area \[m²\]; also the actuator gain
    pub a_o_max: f64,
    /// Actuator time constant \[s\]
    pub tau: f64,
}

impl OrificeParams {
    fn validate(&self) -> Result<(), ComponentError> {
        if !(self.d0 > 0.0 && self.d0 < self.d1) {
            return Err(ComponentError::InvalidParams(format!(
                "orifice diameters must satisfy 0 < d0 < d1, got d0 = {}, d1 = {}",
                self.d0, self.d1
            )));
        }
        if !(self.c_d > 0.0 && self.c_d <= 1.0) {
            return Err(ComponentError::InvalidParams(format!(
                "discharge coefficient must lie in (0, 1], got {}",
                self.c_d
            )));
        }
        if !(self.tau > 0.0) {
            return Err(ComponentError::InvalidParams(format!(
                "actuator time constant must be positive, got {}",
                self.tau
            )));
        }
        if !(self.a_o_max > 0.0) {
            return Err(ComponentError::InvalidParams(format!(
                "maximum orifice area must be positive, got {}",
                self.a_o_max
            )));
        }
        Ok(())
    }

    /// Head-loss corrected flow coefficient C = C_d / sqrt(1 - (d0/d1)^4).
    pub fn flow_coefficient(&self) -> f64 {
        let ratio = self.d0 / self.d1;
        self.c_d / (1.0 - ratio.powi(4)).sqrt()
    }
}

fn bracket(p_left: f64, p_right: f64, mu: f64) -> f64 {
    let r = p_right / p_left;
    r.powf(2.0 / mu) - r.powf((mu + 1.0) / mu)
}

/// Mass flow through an orifice under isentropic expansion:
///
/// ```text
/// q_o = C p_l A_o sqrt( 2/(R_s T_0 z_0) * mu/(mu-1) * [ (p_r/p_l)^(2/mu) - (p_r/p_l)^((mu+1)/mu) ] )
/// ```
///
/// Covers forward subsonic flow only: 0 < p_right <= p_left.
pub fn orifice_flow(
    a_o: f64,
    p_left: f64,
    p_right: f64,
    o: &OrificeParams,
) -> Result<f64, ComponentError> {
    o.validate()?;
    if !(a_o > 0.0) {
        return Err(ComponentError::InvalidParams(format!(
            "orifice area must be positive, got {a_o}"
        )));
    }
    if !(p_right > 0.0) || !(p_left > 0.0) || p_right > p_left {
        return Err(ComponentError::InvalidPressureRatio { p_left, p_right });
    }
    let mu = o.gas.mu();
    let c0 = 2.0 / o.gas.rtz() * mu / (mu - 1.0);
    // The bracket is nonnegative for 0 < r <= 1; clamp rounding residue.
    let br = bracket(p_left, p_right, mu).max(0.0);
    Ok(o.flow_coefficient() * p_left * a_o * (c0 * br).sqrt())
}

/// The orifice flow linearized at an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrificeLinearization {
    /// Flow per unit orifice area, g_o/A_o \[kg/(s·m²)\]
    pub gain_area: f64,
    /// Partial derivative of the flow with respect to the upstream pressure \[kg/(s·Pa)\]
    pub zeta: f64,
    /// Partial derivative of the flow with respect to the downstream pressure \[kg/(s·Pa)\]
    pub xi: f64,
}

/// Analytic partial derivatives of [`orifice_flow`] at a strictly forward
/// operating point (p_right < p_left). Fails with a degenerate-operating-point
/// error once the pressure-ratio bracket drops below 1e-12, where the
/// downstream derivative diverges.
pub fn orifice_linearization(
    a_o: f64,
    p_left: f64,
    p_right: f64,
    o: &OrificeParams,
) -> Result<OrificeLinearization, ComponentError> {
    o.validate()?;
    if !(a_o > 0.0) {
        return Err(ComponentError::InvalidParams(format!(
            "orifice area must be positive, got {a_o}"
        )));
    }
    if !(p_right > 0.0) || !(p_left > 0.0) || p_right >= p_left {
        return Err(ComponentError::InvalidPressureRatio { p_left, p_right });
    }
    let mu = o.gas.mu();
    let br = bracket(p_left, p_right, mu);
    if br <= ORIFICE_BRACKET_MIN {
        return Err(ComponentError::DegenerateOperatingPoint(format!(
            "pressure ratio {} leaves no expansion margin (bracket = {br:.3e})",
            p_right / p_left
        )));
    }
    let c = o.flow_coefficient();
    let c0 = 2.0 / o.gas.rtz() * mu / (mu - 1.0);
    let r = p_right / p_left;
    // d(bracket)/dr
    let dbr = (2.0 / mu) * r.powf(2.0 / mu - 1.0) - ((mu + 1.0) / mu) * r.powf(1.0 / mu);
    let sqrt_term = (c0 * br).sqrt();
    let gain_area = c * p_left * sqrt_term;
    // xi = dq/dp_r at fixed p_l; r depends on p_r through 1/p_l.
    let xi = a_o * c * c0 * dbr / (2.0 * sqrt_term);
    // zeta = dq/dp_l = q/p_l - r * xi.
    let zeta = a_o * gain_area / p_left - r * xi;
    Ok(OrificeLinearization {
        gain_area,
        zeta,
        xi,
    })
}

/// Dynamic valve: a first-order actuator driving the orifice area, with the
/// orifice flow linearized at the nominal point.
///
/// x = (A_o), u = (u_v, p_l, p_r), y = (q_v):
/// A = \[-1/tau\], B = \[K/tau, 0, 0\], C = \[g_o/A_o\], D = \[0, zeta, xi\]
/// where K = A_o_max. Conservation of mass does not apply to this model;
/// it has no flow inputs.
pub fn dynamic_valve(
    id: &str,
    o: &OrificeParams,
    nominal_a_o: f64,
    nominal_p_left: f64,
    nominal_p_right: f64,
) -> Result<LabeledLinearModel, ComponentError> {
    let lin = orifice_linearization(nominal_a_o, nominal_p_left, nominal_p_right, o)?;
    let a = DMatrix::from_row_slice(1, 1, &[-1.0 / o.tau]);
    let b = DMatrix::from_row_slice(1, 3, &[o.a_o_max / o.tau, 0.0, 0.0]);
    let c = DMatrix::from_row_slice(1, 1, &[lin.gain_area]);
    let d = DMatrix::from_row_slice(1, 3, &[0.0, lin.zeta, lin.xi]);
    let model = LabeledLinearModel::new(
        a,
        b,
        c,
        d,
        vec![SignalLabel::new(
            id,
            "A_o",
            SignalKind::Area,
            SignalDirection::State,
        )],
        vec![
            SignalLabel::new(id, "u_v", SignalKind::Command, SignalDirection::Input),
            SignalLabel::new(id, "p_l", SignalKind::Pressure, SignalDirection::Input),
            SignalLabel::new(id, "p_r", SignalKind::Pressure, SignalDirection::Input),
        ],
        vec![SignalLabel::new(
            id,
            "q_v",
            SignalKind::MassFlow,
            SignalDirection::Output,
        )],
    )?;
    let mut nominal = BTreeMap::new();
    nominal.insert(SignalId::new(id, "A_o"), nominal_a_o);
    nominal.insert(SignalId::new(id, "p_l"), nominal_p_left);
    nominal.insert(SignalId::new(id, "p_r"), nominal_p_right);
    Ok(model.with_nominal(nominal))
}
