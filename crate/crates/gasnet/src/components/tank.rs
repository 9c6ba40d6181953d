//! Constant-volume tanks: an isothermal integrator model and the nonlinear
//! pressure/temperature dynamics of the non-isothermal tank.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::linearize::{Jacobians, NonlinearDynamics};
use super::ComponentError;
use crate::gas::GasProperties;
use crate::label::{SignalDirection, SignalId, SignalKind, SignalLabel};
use crate::model::LabeledLinearModel;

/// Volume, gas and port counts of a tank.
#[derive(Debug, Clone, PartialEq)]
pub struct TankParams {
    /// Constant volume \[m³\]
    pub volume: f64,
    pub gas: GasProperties,
    pub n_inlets: usize,
    pub n_outlets: usize,
    /// Nominal tank pressure \[Pa\]
    pub nominal_p: f64,
    /// Nominal tank temperature \[K\]
    pub nominal_t: f64,
}

impl TankParams {
    fn validate(&self) -> Result<(), ComponentError> {
        if !(self.volume > 0.0) {
            return Err(ComponentError::InvalidParams(format!(
                "tank volume must be positive, got {}",
                self.volume
            )));
        }
        if self.n_inlets == 0 || self.n_outlets == 0 {
            return Err(ComponentError::InvalidParams(
                "a tank needs at least one inlet and one outlet".to_string(),
            ));
        }
        Ok(())
    }

    /// The integrator coefficient R_s z_0 T_0 / V \[Pa/kg\].
    pub fn pressure_rate(&self) -> f64 {
        self.gas.rtz() / self.volume
    }
}

fn flow_name(prefix: &str, count: usize, index: usize) -> String {
    if count == 1 {
        prefix.to_string()
    } else {
        format!("{prefix}{}", index + 1)
    }
}

/// Isothermal tank: a single pressure state integrating the net mass flow,
/// ṗ = (R_s z_0 T_0 / V)(Σ inflows − Σ outflows), y = p.
///
/// The inlet and outlet flows are all model inputs, so this component cannot
/// connect directly to pipe ports; it is the building block for composite
/// models that wrap its entrances with orifices.
pub fn isothermal_tank(id: &str, t: &TankParams) -> Result<LabeledLinearModel, ComponentError> {
    t.validate()?;
    let rate = t.pressure_rate();
    let n_u = t.n_inlets + t.n_outlets;
    let mut b = DMatrix::zeros(1, n_u);
    let mut inputs = Vec::with_capacity(n_u);
    for i in 0..t.n_inlets {
        b[(0, i)] = rate;
        inputs.push(SignalLabel::new(
            id,
            flow_name("q_l", t.n_inlets, i),
            SignalKind::MassFlow,
            SignalDirection::Input,
        ));
    }
    for k in 0..t.n_outlets {
        b[(0, t.n_inlets + k)] = -rate;
        inputs.push(SignalLabel::new(
            id,
            flow_name("q_r", t.n_outlets, k),
            SignalKind::MassFlow,
            SignalDirection::Input,
        ));
    }
    let model = LabeledLinearModel::new(
        DMatrix::zeros(1, 1),
        b,
        DMatrix::identity(1, 1),
        DMatrix::zeros(1, n_u),
        vec![SignalLabel::new(
            id,
            "p",
            SignalKind::Pressure,
            SignalDirection::State,
        )],
        inputs,
        vec![SignalLabel::new(
            id,
            "p",
            SignalKind::Pressure,
            SignalDirection::Output,
        )],
    )?;
    let mut nominal = BTreeMap::new();
    nominal.insert(SignalId::new(id, "p"), t.nominal_p);
    Ok(model.with_nominal(nominal))
}

/// Non-isothermal tank with states (p, T) and inputs
/// (q_in_1, T_in_1, ..., q_in_n, T_in_n, q_out_1, ..., q_out_m):
///
/// ```text
/// ṗ = (R_s z_0 μ / V) (Σ q_in,j T_in,j − T Σ q_out,k)
/// Ṫ = (R_s T z_0 / (p V c_v)) [ Σ q_in,j (c_p T_in,j − c_v T) − R_s T Σ q_out,k ]
/// ```
///
/// The heat flux to the environment is taken as zero.
#[derive(Debug, Clone)]
pub struct NonisothermalTank {
    pub id: String,
    pub params: TankParams,
}

impl NonisothermalTank {
    pub fn new(id: impl Into<String>, params: TankParams) -> Result<Self, ComponentError> {
        params.validate()?;
        Ok(Self {
            id: id.into(),
            params,
        })
    }

    fn split_inputs<'a>(&self, u: &'a DVector<f64>) -> (Vec<(f64, f64)>, &'a [f64]) {
        let n = self.params.n_inlets;
        let inflows: Vec<(f64, f64)> = (0..n).map(|j| (u[2 * j], u[2 * j + 1])).collect();
        let outflows = &u.as_slice()[2 * n..];
        (inflows, outflows)
    }
}

impl NonlinearDynamics for NonisothermalTank {
    fn state_labels(&self) -> Vec<SignalLabel> {
        vec![
            SignalLabel::new(&self.id, "p", SignalKind::Pressure, SignalDirection::State),
            SignalLabel::new(
                &self.id,
                "T",
                SignalKind::Temperature,
                SignalDirection::State,
            ),
        ]
    }

    fn input_labels(&self) -> Vec<SignalLabel> {
        let t = &self.params;
        let mut labels = Vec::with_capacity(2 * t.n_inlets + t.n_outlets);
        for j in 0..t.n_inlets {
            labels.push(SignalLabel::new(
                &self.id,
                flow_name("q_l", t.n_inlets, j),
                SignalKind::MassFlow,
                SignalDirection::Input,
            ));
            labels.push(SignalLabel::new(
                &self.id,
                flow_name("T_l", t.n_inlets, j),
                SignalKind::Temperature,
                SignalDirection::Input,
            ));
        }
        for k in 0..t.n_outlets {
            labels.push(SignalLabel::new(
                &self.id,
                flow_name("q_r", t.n_outlets, k),
                SignalKind::MassFlow,
                SignalDirection::Input,
            ));
        }
        labels
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ComponentError> {
        let (p, t) = (x[0], x[1]);
        if !(p > 0.0) || !(t > 0.0) {
            return Err(ComponentError::NonPhysicalState(format!(
                "tank requires p > 0 and T > 0, got p = {p}, T = {t}"
            )));
        }
        let gas = &self.params.gas;
        let (inflows, outflows) = self.split_inputs(u);
        let q_out: f64 = outflows.iter().sum();
        let enthalpy_in: f64 = inflows.iter().map(|(q, t_in)| q * t_in).sum();

        let p_dot = gas.r_s * gas.z_0 * gas.mu() / self.params.volume * (enthalpy_in - q_out * t);

        let energy: f64 = inflows
            .iter()
            .map(|(q, t_in)| q * (gas.c_p * t_in - gas.c_v * t))
            .sum::<f64>()
            - gas.r_s * t * q_out;
        let t_dot = gas.r_s * t * gas.z_0 / (p * self.params.volume * gas.c_v) * energy;

        Ok(DVector::from_row_slice(&[p_dot, t_dot]))
    }

    fn analytic_jacobians(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Option<Result<Jacobians, ComponentError>> {
        let (p, t) = (x[0], x[1]);
        if !(p > 0.0) || !(t > 0.0) {
            return Some(Err(ComponentError::NonPhysicalState(format!(
                "tank requires p > 0 and T > 0, got p = {p}, T = {t}"
            ))));
        }
        let gas = &self.params.gas;
        let v = self.params.volume;
        let (inflows, outflows) = self.split_inputs(u);
        let q_out: f64 = outflows.iter().sum();
        let q_in: f64 = inflows.iter().map(|(q, _)| q).sum();
        let energy: f64 = inflows
            .iter()
            .map(|(q, t_in)| q * (gas.c_p * t_in - gas.c_v * t))
            .sum::<f64>()
            - gas.r_s * t * q_out;

        let c1 = gas.r_s * gas.z_0 * gas.mu() / v;
        let c2 = gas.r_s * gas.z_0 / (v * gas.c_v);
        let n_u = u.len();
        let n_in = self.params.n_inlets;

        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = -c1 * q_out;
        a[(1, 0)] = -c2 * t / (p * p) * energy;
        a[(1, 1)] = c2 / p * energy + c2 * t / p * (-gas.c_v * q_in - gas.r_s * q_out);

        let mut b = DMatrix::zeros(2, n_u);
        for (j, (q, t_in)) in inflows.iter().enumerate() {
            b[(0, 2 * j)] = c1 * t_in;
            b[(0, 2 * j + 1)] = c1 * q;
            b[(1, 2 * j)] = c2 * t / p * (gas.c_p * t_in - gas.c_v * t);
            b[(1, 2 * j + 1)] = c2 * t / p * gas.c_p * q;
        }
        for k in 0..outflows.len() {
            b[(0, 2 * n_in + k)] = -c1 * t;
            b[(1, 2 * n_in + k)] = -c2 * t / p * gas.r_s * t;
        }

        Some(Ok(Jacobians {
            a,
            b,
            c: DMatrix::identity(2, 2),
            d: DMatrix::zeros(2, n_u),
        }))
    }
}
