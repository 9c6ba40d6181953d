//! Generic linearization of nonlinear component dynamics around a nominal
//! operating point.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::ComponentError;
use crate::label::{SignalDirection, SignalLabel};
use crate::model::LabeledLinearModel;
use crate::verify::finite_difference_jacobian;

/// Relative finite-difference step used when no analytic Jacobian is
/// available, applied as `step * max(1, |value|)` per coordinate.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Relative residual above which the nominal point is flagged as non-steady.
const STEADY_RESIDUAL_REL: f64 = 1e-6;

/// The four Jacobian blocks of dynamics and output map.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobians {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// Nonlinear dynamics ẋ = f(x, u) with output map y = g(x, u).
///
/// Implementations must be stateless: `rhs` and `output` are pure functions
/// of their arguments so concurrent evaluation is safe.
pub trait NonlinearDynamics {
    fn state_labels(&self) -> Vec<SignalLabel>;
    fn input_labels(&self) -> Vec<SignalLabel>;

    /// Output labels; defaults to the states re-labeled as outputs.
    fn output_labels(&self) -> Vec<SignalLabel> {
        self.state_labels()
            .iter()
            .map(|l| l.with_direction(SignalDirection::Output))
            .collect()
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ComponentError>;

    /// Output map; defaults to y = x.
    fn output(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Result<DVector<f64>, ComponentError> {
        Ok(x.clone())
    }

    /// Analytic Jacobians at a point, when the component provides them.
    fn analytic_jacobians(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
    ) -> Option<Result<Jacobians, ComponentError>> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearizeWarning {
    /// The right-hand side does not vanish at the nominal point; the
    /// linearization is produced anyway and describes deviations around a
    /// drifting trajectory.
    NonSteadyNominal { residual_norm: f64 },
}

/// A linearized model together with diagnostics about the nominal point.
#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub model: LabeledLinearModel,
    /// ‖f(x̄, ū)‖ at the nominal point.
    pub residual_norm: f64,
    pub warnings: Vec<LinearizeWarning>,
}

/// Linearizes `sys` at (x̄, ū): analytic Jacobians where provided, central
/// finite differences otherwise. Deviation-variable labels inherit the
/// nominal values. A non-steady nominal produces a warning, not an error.
pub fn linearize(
    sys: &dyn NonlinearDynamics,
    x_nominal: &DVector<f64>,
    u_nominal: &DVector<f64>,
) -> Result<Linearization, ComponentError> {
    let f0 = sys.rhs(x_nominal, u_nominal)?;
    let residual_norm = f0.norm();

    let jac = match sys.analytic_jacobians(x_nominal, u_nominal) {
        Some(result) => result?,
        None => fd_jacobians(sys, x_nominal, u_nominal)?,
    };

    let states = sys.state_labels();
    let inputs = sys.input_labels();
    let outputs = sys.output_labels();
    let y0 = sys.output(x_nominal, u_nominal)?;

    let model = LabeledLinearModel::new(jac.a, jac.b, jac.c, jac.d, states, inputs, outputs)?;
    let mut nominal = BTreeMap::new();
    for (label, value) in model.states.iter().zip(x_nominal.iter()) {
        nominal.insert(label.id.clone(), *value);
    }
    for (label, value) in model.inputs.iter().zip(u_nominal.iter()) {
        nominal.insert(label.id.clone(), *value);
    }
    for (label, value) in model.outputs.iter().zip(y0.iter()) {
        nominal.entry(label.id.clone()).or_insert(*value);
    }
    let model = model.with_nominal(nominal);

    // Characteristic scale: one state magnitude (floored at 1) per second.
    let scale = x_nominal.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut warnings = Vec::new();
    if residual_norm > STEADY_RESIDUAL_REL * scale {
        warnings.push(LinearizeWarning::NonSteadyNominal { residual_norm });
    }

    Ok(Linearization {
        model,
        residual_norm,
        warnings,
    })
}

fn fd_jacobians(
    sys: &dyn NonlinearDynamics,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<Jacobians, ComponentError> {
    let wrap = |e: crate::verify::VerifyError| {
        ComponentError::InvalidParams(format!("finite-difference evaluation failed: {e}"))
    };
    let a = finite_difference_jacobian(|xv: &DVector<f64>| sys.rhs(xv, u), x, DEFAULT_FD_STEP)
        .map_err(wrap)?;
    let b = finite_difference_jacobian(|uv: &DVector<f64>| sys.rhs(x, uv), u, DEFAULT_FD_STEP)
        .map_err(wrap)?;
    let c = finite_difference_jacobian(|xv: &DVector<f64>| sys.output(xv, u), x, DEFAULT_FD_STEP)
        .map_err(wrap)?;
    let d = finite_difference_jacobian(|uv: &DVector<f64>| sys.output(x, uv), u, DEFAULT_FD_STEP)
        .map_err(wrap)?;
    Ok(Jacobians { a, b, c, d })
}
