//! Heat exchanger: a single non-isothermal pipe surrogate whose radial heat
//! transfer coefficient and friction factor parametrize the exchanger design.

use nalgebra::{DMatrix, DVector};

use super::linearize::{Jacobians, NonlinearDynamics};
use super::pipe::PipeParams;
use super::ComponentError;
use crate::label::{SignalDirection, SignalKind, SignalLabel};

/// Pipe surrogate plus radial heat-transfer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatExchangerParams {
    /// Pipe geometry; its length plays the role of the exchanger length and
    /// its elevation fixes the slope dh/dx = elevation/length.
    pub pipe: PipeParams,
    /// Radial heat transfer coefficient \[W/(m²K)\]
    pub k_rad: f64,
    /// Outside diameter \[m\]
    pub d_o: f64,
    /// Ambient temperature \[K\]
    pub t_amb: f64,
    /// Nominal inlet temperature \[K\]
    pub nominal_t_left: f64,
    /// Nominal outlet temperature \[K\]
    pub nominal_t_right: f64,
}

impl HeatExchangerParams {
    fn validate(&self) -> Result<(), ComponentError> {
        if self.k_rad < 0.0 {
            return Err(ComponentError::InvalidParams(format!(
                "heat transfer coefficient must be nonnegative, got {}",
                self.k_rad
            )));
        }
        if self.d_o < self.pipe.diameter {
            return Err(ComponentError::InvalidParams(format!(
                "outside diameter {} is smaller than the pipe diameter {}",
                self.d_o, self.pipe.diameter
            )));
        }
        for (name, value) in [
            ("t_amb", self.t_amb),
            ("nominal_t_left", self.nominal_t_left),
            ("nominal_t_right", self.nominal_t_right),
        ] {
            if !(value > 0.0) {
                return Err(ComponentError::InvalidParams(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Non-isothermal pipe flow with states (p_r, q_l, T_r) and inputs
/// (p_l, q_r, T_l). The three coupled ODEs balance radial heat exchange,
/// convective transport, expansion work and friction heating.
pub struct HeatExchanger {
    pub id: String,
    pub params: HeatExchangerParams,
}

/// Intermediate quantities shared by the rhs and the analytic Jacobians.
struct Terms {
    /// R_s z_0 / (A c_v)
    prefactor: f64,
    /// c_v + R_s z_0
    energy_coeff: f64,
    /// lambda R_s² z_0² / (2 D A²)
    friction_coeff: f64,
    /// k_rad π D_o
    radial_coeff: f64,
}

impl HeatExchanger {
    pub fn new(id: impl Into<String>, params: HeatExchangerParams) -> Result<Self, ComponentError> {
        params.validate()?;
        Ok(Self {
            id: id.into(),
            params,
        })
    }

    fn terms(&self) -> Terms {
        let p = &self.params.pipe;
        let gas = &p.gas;
        let rz = gas.r_s * gas.z_0;
        Terms {
            prefactor: rz / (p.area * gas.c_v),
            energy_coeff: gas.c_v + rz,
            friction_coeff: p.lambda * rz * rz / (2.0 * p.diameter * p.area * p.area),
            radial_coeff: self.params.k_rad * std::f64::consts::PI * self.params.d_o,
        }
    }

    fn check_physical(x: &DVector<f64>, u: &DVector<f64>) -> Result<(), ComponentError> {
        let (p_r, t_r) = (x[0], x[2]);
        let (p_l, t_l) = (u[0], u[2]);
        if !(p_r > 0.0 && p_l > 0.0 && t_r > 0.0 && t_l > 0.0) {
            return Err(ComponentError::NonPhysicalState(format!(
                "pressures and temperatures must be positive, got p_r = {p_r}, p_l = {p_l}, T_r = {t_r}, T_l = {t_l}"
            )));
        }
        Ok(())
    }
}

impl NonlinearDynamics for HeatExchanger {
    fn state_labels(&self) -> Vec<SignalLabel> {
        vec![
            SignalLabel::new(
                &self.id,
                "p_r",
                SignalKind::Pressure,
                SignalDirection::State,
            ),
            SignalLabel::new(
                &self.id,
                "q_l",
                SignalKind::MassFlow,
                SignalDirection::State,
            ),
            SignalLabel::new(
                &self.id,
                "T_r",
                SignalKind::Temperature,
                SignalDirection::State,
            ),
        ]
    }

    fn input_labels(&self) -> Vec<SignalLabel> {
        vec![
            SignalLabel::new(
                &self.id,
                "p_l",
                SignalKind::Pressure,
                SignalDirection::Input,
            ),
            SignalLabel::new(
                &self.id,
                "q_r",
                SignalKind::MassFlow,
                SignalDirection::Input,
            ),
            SignalLabel::new(
                &self.id,
                "T_l",
                SignalKind::Temperature,
                SignalDirection::Input,
            ),
        ]
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ComponentError> {
        Self::check_physical(x, u)?;
        let (p_r, q_l, t_r) = (x[0], x[1], x[2]);
        let (p_l, q_r, t_l) = (u[0], u[1], u[2]);
        let pipe = &self.params.pipe;
        let gas = &pipe.gas;
        let t = self.terms();
        let length = pipe.length;
        let slope = pipe.elevation / pipe.length;
        let rz = gas.r_s * gas.z_0;

        let radial = t.radial_coeff * (self.params.t_amb - t_r);
        let expansion = (p_r - p_l) / length * rz * t_r * q_r / p_r;
        let convection = (t_r - t_l) / length * q_r * t.energy_coeff;
        let friction_heat = t.friction_coeff * t_r * t_r * q_r * q_r * q_r.abs() / (p_r * p_r);

        let p_dot = t.prefactor
            * (radial - (q_r - q_l) / length * t_r * t.energy_coeff + expansion - convection
                + friction_heat);

        let q_dot = -pipe.area * (p_r - p_l) / length
            - pipe.lambda * gas.r_s * t_l * gas.z_0 / (2.0 * pipe.diameter * pipe.area)
                * q_l
                * q_l.abs()
                / p_l
            - pipe.area * gas.g / (gas.r_s * t_l * gas.z_0) * slope * p_l;

        let t_dot = t.prefactor * t_r / p_r
            * (radial - (q_r - q_l) / length * t_r * rz + expansion - convection + friction_heat);

        Ok(DVector::from_row_slice(&[p_dot, q_dot, t_dot]))
    }

    fn analytic_jacobians(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Option<Result<Jacobians, ComponentError>> {
        if let Err(e) = Self::check_physical(x, u) {
            return Some(Err(e));
        }
        let (p_r, q_l, t_r) = (x[0], x[1], x[2]);
        let (p_l, q_r, t_l) = (u[0], u[1], u[2]);
        let pipe = &self.params.pipe;
        let gas = &pipe.gas;
        let t = self.terms();
        let length = pipe.length;
        let slope = pipe.elevation / pipe.length;
        let rz = gas.r_s * gas.z_0;
        let w = t.energy_coeff;

        // Shared sub-expressions and their partials.
        let friction = t.friction_coeff * t_r * t_r * q_r * q_r * q_r.abs() / (p_r * p_r);
        let d_friction_dpr = -2.0 * friction / p_r;
        let d_friction_dtr = 2.0 * t.friction_coeff * t_r * q_r * q_r * q_r.abs() / (p_r * p_r);
        let d_friction_dqr = 3.0 * t.friction_coeff * t_r * t_r * q_r * q_r.abs() / (p_r * p_r);

        let expansion = (p_r - p_l) / length * rz * t_r * q_r / p_r;
        let d_expansion_dpr = rz * t_r * q_r / length * p_l / (p_r * p_r);
        let d_expansion_dpl = -rz * t_r * q_r / (length * p_r);
        let d_expansion_dtr = (p_r - p_l) * rz * q_r / (length * p_r);
        let d_expansion_dqr = (p_r - p_l) * rz * t_r / (length * p_r);

        // Inner brackets of the pressure and temperature equations; they
        // differ only in the mass-imbalance coefficient (w vs rz).
        let bracket = |mass_coeff: f64| {
            t.radial_coeff * (self.params.t_amb - t_r) - (q_r - q_l) / length * t_r * mass_coeff
                + expansion
                - (t_r - t_l) / length * q_r * w
                + friction
        };
        let e_t = bracket(rz);

        // Partials of the brackets, parametrized by the mass coefficient.
        let de_dpr = d_expansion_dpr + d_friction_dpr;
        let de_dpl = d_expansion_dpl;
        let de_dtl = q_r * w / length;
        let de_dql = |mass_coeff: f64| t_r * mass_coeff / length;
        let de_dtr = |mass_coeff: f64| {
            -t.radial_coeff - (q_r - q_l) / length * mass_coeff + d_expansion_dtr - q_r * w / length
                + d_friction_dtr
        };
        let de_dqr = |mass_coeff: f64| {
            -t_r * mass_coeff / length + d_expansion_dqr - (t_r - t_l) / length * w + d_friction_dqr
        };

        let mut a = DMatrix::zeros(3, 3);
        let mut b = DMatrix::zeros(3, 3);

        // Pressure equation.
        a[(0, 0)] = t.prefactor * de_dpr;
        a[(0, 1)] = t.prefactor * de_dql(w);
        a[(0, 2)] = t.prefactor * de_dtr(w);
        b[(0, 0)] = t.prefactor * de_dpl;
        b[(0, 1)] = t.prefactor * de_dqr(w);
        b[(0, 2)] = t.prefactor * de_dtl;

        // Flow equation.
        let fric_q = pipe.lambda * gas.r_s * t_l * gas.z_0 / (2.0 * pipe.diameter * pipe.area);
        a[(1, 0)] = -pipe.area / length;
        a[(1, 1)] = -fric_q * 2.0 * q_l.abs() / p_l;
        b[(1, 0)] = pipe.area / length + fric_q * q_l * q_l.abs() / (p_l * p_l)
            - pipe.area * gas.g / (gas.r_s * t_l * gas.z_0) * slope;
        b[(1, 2)] =
            -pipe.lambda * gas.r_s * gas.z_0 / (2.0 * pipe.diameter * pipe.area) * q_l * q_l.abs()
                / p_l
                + pipe.area * gas.g / (gas.r_s * t_l * t_l * gas.z_0) * slope * p_l;

        // Temperature equation: d/dx [ c (T_r/p_r) E_T ].
        let ct = t.prefactor;
        a[(2, 0)] = ct * (-t_r / (p_r * p_r) * e_t + t_r / p_r * de_dpr);
        a[(2, 1)] = ct * t_r / p_r * de_dql(rz);
        a[(2, 2)] = ct * (e_t / p_r + t_r / p_r * de_dtr(rz));
        b[(2, 0)] = ct * t_r / p_r * de_dpl;
        b[(2, 1)] = ct * t_r / p_r * de_dqr(rz);
        b[(2, 2)] = ct * t_r / p_r * de_dtl;

        Some(Ok(Jacobians {
            a,
            b,
            c: DMatrix::identity(3, 3),
            d: DMatrix::zeros(3, 3),
        }))
    }
}
