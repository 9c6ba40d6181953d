//! Compressors: a static pressure gain and the nonlinear plenum/duct model
//! with an isentropic temperature map.

use nalgebra::{DMatrix, DVector};

use super::linearize::{Jacobians, NonlinearDynamics};
use super::valve::static_gain;
use super::ComponentError;
use crate::gas::GasProperties;
use crate::label::{SignalDirection, SignalKind, SignalLabel};
use crate::model::LabeledLinearModel;

/// Static compressor: pressure gain k_c > 1, flow passed through unchanged.
pub fn static_compressor(id: &str, k_c: f64) -> Result<LabeledLinearModel, ComponentError> {
    if !(k_c > 1.0) {
        return Err(ComponentError::InvalidParams(format!(
            "compressor gain must exceed 1, got {k_c}"
        )));
    }
    static_gain(id, k_c)
}

/// Static discharge-pressure map Φ(q, ω) with its partial derivatives.
///
/// Implementations must be stateless so concurrent evaluation is safe. The
/// derivatives must agree with central finite differences of `pressure`.
pub trait CompressorMap: Send + Sync {
    /// Discharge pressure \[Pa\] at mass flow q \[kg/s\] and speed ω \[rad/s\].
    fn pressure(&self, q: f64, omega: f64) -> Result<f64, ComponentError>;
    /// ∂Φ/∂q
    fn d_dq(&self, q: f64, omega: f64) -> Result<f64, ComponentError>;
    /// ∂Φ/∂ω
    fn d_domega(&self, q: f64, omega: f64) -> Result<f64, ComponentError>;
}

/// Sample map Φ(q, ω) = c_speed ω² − c_flow q², valid on a rectangular
/// domain where it stays positive. A stand-in for empirically fitted maps;
/// real applications supply their own [`CompressorMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCompressorMap {
    /// Speed coefficient \[Pa·s²/rad²\]
    pub c_speed: f64,
    /// Flow droop coefficient \[Pa·s²/kg²\]
    pub c_flow: f64,
    /// Admissible flow range \[kg/s\]
    pub q_range: (f64, f64),
    /// Admissible speed range \[rad/s\]
    pub omega_range: (f64, f64),
}

impl QuadraticCompressorMap {
    fn check_domain(&self, q: f64, omega: f64) -> Result<(), ComponentError> {
        let inside = q >= self.q_range.0
            && q <= self.q_range.1
            && omega >= self.omega_range.0
            && omega <= self.omega_range.1;
        if !inside {
            return Err(ComponentError::MapDomain { q, omega });
        }
        Ok(())
    }
}

impl CompressorMap for QuadraticCompressorMap {
    fn pressure(&self, q: f64, omega: f64) -> Result<f64, ComponentError> {
        self.check_domain(q, omega)?;
        let p = self.c_speed * omega * omega - self.c_flow * q * q;
        if !(p > 0.0) {
            return Err(ComponentError::MapDomain { q, omega });
        }
        Ok(p)
    }

    fn d_dq(&self, q: f64, omega: f64) -> Result<f64, ComponentError> {
        self.check_domain(q, omega)?;
        Ok(-2.0 * self.c_flow * q)
    }

    fn d_domega(&self, q: f64, omega: f64) -> Result<f64, ComponentError> {
        self.check_domain(q, omega)?;
        Ok(2.0 * self.c_speed * omega)
    }
}

/// Plenum volume, duct geometry, isentropic coefficient and map of a
/// compressor system.
pub struct CompressorParams {
    /// Plenum volume \[m³\]
    pub plenum_volume: f64,
    /// Duct cross-sectional area \[m²\]
    pub duct_area: f64,
    /// Duct length \[m\]
    pub duct_length: f64,
    /// Isentropic coefficient \[1\], > 1
    pub eta: f64,
    pub gas: GasProperties,
    pub map: Box<dyn CompressorMap>,
}

impl CompressorParams {
    fn validate(&self) -> Result<(), ComponentError> {
        let positives = [
            ("plenum_volume", self.plenum_volume),
            ("duct_area", self.duct_area),
            ("duct_length", self.duct_length),
        ];
        for (name, value) in positives {
            if !(value > 0.0) {
                return Err(ComponentError::InvalidParams(format!(
                    "compressor {name} must be positive, got {value}"
                )));
            }
        }
        if !(self.eta > 1.0) {
            return Err(ComponentError::InvalidParams(format!(
                "isentropic coefficient must exceed 1, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Compressor system: isentropic compression into a frictionless duct and an
/// isothermal plenum.
///
/// States x = (p_3, q_2) (plenum pressure, duct flow), inputs
/// u = (p_1, q_{3,r}, T_1, ω), outputs y = (p_3, q_2, T_3):
///
/// ```text
/// ṗ_3 = (R_s T_2 z_0 / V_p)(q_2 − q_{3,r})
/// q̇_2 = (A_2 / L_2)(Φ(q_2, ω) − p_3)
/// T_3 = T_1 (Φ(q_2, ω)/p_1)^((η−1)/η)
/// ```
///
/// The duct and plenum share the post-compression temperature, T_2 = T_3.
pub struct Compressor {
    pub id: String,
    pub params: CompressorParams,
}

impl Compressor {
    pub fn new(id: impl Into<String>, params: CompressorParams) -> Result<Self, ComponentError> {
        params.validate()?;
        Ok(Self {
            id: id.into(),
            params,
        })
    }

    fn discharge_temperature(&self, phi: f64, p_1: f64, t_1: f64) -> Result<f64, ComponentError> {
        if !(p_1 > 0.0) || !(t_1 > 0.0) {
            return Err(ComponentError::NonPhysicalState(format!(
                "compressor requires p_1 > 0 and T_1 > 0, got p_1 = {p_1}, T_1 = {t_1}"
            )));
        }
        let kappa = (self.params.eta - 1.0) / self.params.eta;
        Ok(t_1 * (phi / p_1).powf(kappa))
    }
}

impl NonlinearDynamics for Compressor {
    fn state_labels(&self) -> Vec<SignalLabel> {
        vec![
            SignalLabel::new(
                &self.id,
                "p_3",
                SignalKind::Pressure,
                SignalDirection::State,
            ),
            SignalLabel::new(
                &self.id,
                "q_2",
                SignalKind::MassFlow,
                SignalDirection::State,
            ),
        ]
    }

    fn input_labels(&self) -> Vec<SignalLabel> {
        vec![
            SignalLabel::new(
                &self.id,
                "p_1",
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
                "T_1",
                SignalKind::Temperature,
                SignalDirection::Input,
            ),
            SignalLabel::new(
                &self.id,
                "omega",
                SignalKind::Command,
                SignalDirection::Input,
            ),
        ]
    }

    fn output_labels(&self) -> Vec<SignalLabel> {
        vec![
            SignalLabel::new(
                &self.id,
                "p_3",
                SignalKind::Pressure,
                SignalDirection::Output,
            ),
            SignalLabel::new(
                &self.id,
                "q_2",
                SignalKind::MassFlow,
                SignalDirection::Output,
            ),
            SignalLabel::new(
                &self.id,
                "T_3",
                SignalKind::Temperature,
                SignalDirection::Output,
            ),
        ]
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ComponentError> {
        let (p_3, q_2) = (x[0], x[1]);
        let (p_1, q_3r, t_1, omega) = (u[0], u[1], u[2], u[3]);
        if !(p_3 > 0.0) {
            return Err(ComponentError::NonPhysicalState(format!(
                "plenum pressure must be positive, got {p_3}"
            )));
        }
        let phi = self.params.map.pressure(q_2, omega)?;
        let t_2 = self.discharge_temperature(phi, p_1, t_1)?;
        let p_3_dot = self.params.gas.r_s * t_2 * self.params.gas.z_0 / self.params.plenum_volume
            * (q_2 - q_3r);
        let q_2_dot = self.params.duct_area / self.params.duct_length * (phi - p_3);
        Ok(DVector::from_row_slice(&[p_3_dot, q_2_dot]))
    }

    fn output(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ComponentError> {
        let phi = self.params.map.pressure(x[1], u[3])?;
        let t_3 = self.discharge_temperature(phi, u[0], u[2])?;
        Ok(DVector::from_row_slice(&[x[0], x[1], t_3]))
    }

    fn analytic_jacobians(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Option<Result<Jacobians, ComponentError>> {
        Some(self.jacobians_at(x, u))
    }
}

impl Compressor {
    fn jacobians_at(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
    ) -> Result<Jacobians, ComponentError> {
        let q_2 = x[1];
        let (p_1, q_3r, t_1, omega) = (u[0], u[1], u[2], u[3]);
        let gas = &self.params.gas;
        let map = self.params.map.as_ref();

        let phi = map.pressure(q_2, omega)?;
        let phi_q = map.d_dq(q_2, omega)?;
        let phi_w = map.d_domega(q_2, omega)?;
        let kappa = (self.params.eta - 1.0) / self.params.eta;
        let t_3 = self.discharge_temperature(phi, p_1, t_1)?;

        // Partial derivatives of T_3 = T_1 (phi/p_1)^kappa.
        let dt3_dq = kappa * t_3 * phi_q / phi;
        let dt3_dw = kappa * t_3 * phi_w / phi;
        let dt3_dp1 = -kappa * t_3 / p_1;
        let dt3_dt1 = t_3 / t_1;

        let c_plenum = gas.r_s * gas.z_0 / self.params.plenum_volume;
        let c_duct = self.params.duct_area / self.params.duct_length;
        let dq = q_2 - q_3r;

        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = c_plenum * (dt3_dq * dq + t_3);
        a[(1, 0)] = -c_duct;
        a[(1, 1)] = c_duct * phi_q;

        let mut b = DMatrix::zeros(2, 4);
        b[(0, 0)] = c_plenum * dq * dt3_dp1;
        b[(0, 1)] = -c_plenum * t_3;
        b[(0, 2)] = c_plenum * dq * dt3_dt1;
        b[(0, 3)] = c_plenum * dq * dt3_dw;
        b[(1, 3)] = c_duct * phi_w;

        let mut c = DMatrix::zeros(3, 2);
        c[(0, 0)] = 1.0;
        c[(1, 1)] = 1.0;
        c[(2, 1)] = dt3_dq;

        let mut d = DMatrix::zeros(3, 4);
        d[(2, 0)] = dt3_dp1;
        d[(2, 2)] = dt3_dt1;
        d[(2, 3)] = dt3_dw;

        Ok(Jacobians { a, b, c, d })
    }

    /// A flow/speed point balancing the map against a plenum pressure:
    /// Φ(q, ω) = p_3 and q_2 = q_{3,r} make the dynamics steady.
    pub fn steady_state(&self, q: f64, omega: f64) -> Result<(DVector<f64>, f64), ComponentError> {
        let p_3 = self.params.map.pressure(q, omega)?;
        Ok((DVector::from_row_slice(&[p_3, q]), p_3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_fixtures::test_compressor;
    use crate::verify::finite_difference_jacobian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_map() -> QuadraticCompressorMap {
        QuadraticCompressorMap {
            c_speed: 0.5,
            c_flow: 1000.0,
            q_range: (0.0, 60.0),
            omega_range: (100.0, 4000.0),
        }
    }

    #[test]
    fn static_compressor_gain_and_boundary() {
        let c = static_compressor("c", 4.0).unwrap();
        let u = nalgebra::DVector::from_row_slice(&[1e5, 2.0]);
        let y = &c.d * u;
        assert!((y[0] - 4e5).abs() < 1e-9);
        assert!((y[1] - 2.0).abs() < 1e-12);
        assert!(static_compressor("c", 1.0).is_err());
    }

    #[test]
    fn map_balanced_point_is_steady() {
        let comp = test_compressor();
        let (x, p_3) = comp.steady_state(10.0, 1000.0).unwrap();
        assert!((p_3 - (0.5 * 1e6 - 1000.0 * 100.0)).abs() < 1e-9);
        let u = DVector::from_row_slice(&[1e5, 10.0, 290.0, 1000.0]);
        let f = comp.rhs(&x, &u).unwrap();
        assert!(f[0].abs() < 1e-9);
        assert!(f[1].abs() < 1e-12);
    }

    #[test]
    fn unit_pressure_ratio_passes_temperature_through() {
        let comp = test_compressor();
        let phi = comp.params.map.pressure(10.0, 1000.0).unwrap();
        let u = DVector::from_row_slice(&[phi, 10.0, 290.0, 1000.0]);
        let y = comp
            .output(&DVector::from_row_slice(&[phi, 10.0]), &u)
            .unwrap();
        assert!((y[2] - 290.0).abs() < 1e-12);
    }

    #[test]
    fn map_domain_is_enforced() {
        let comp = test_compressor();
        let u = DVector::from_row_slice(&[1e5, 10.0, 290.0, 50.0]);
        assert!(matches!(
            comp.rhs(&DVector::from_row_slice(&[4e5, 10.0]), &u),
            Err(ComponentError::MapDomain { .. })
        ));
    }

    #[test]
    fn quadratic_map_derivatives_match_finite_differences() {
        let map = sample_map();
        let (q, w) = (12.0, 1500.0);
        let h = 1e-4;
        let fd_q = (map.pressure(q + h, w).unwrap() - map.pressure(q - h, w).unwrap()) / (2.0 * h);
        let fd_w = (map.pressure(q, w + h).unwrap() - map.pressure(q, w - h).unwrap()) / (2.0 * h);
        assert!((map.d_dq(q, w).unwrap() - fd_q).abs() < 1e-6 * fd_q.abs());
        assert!((map.d_domega(q, w).unwrap() - fd_w).abs() < 1e-6 * fd_w.abs());
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let comp = test_compressor();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let q = rng.random_range(5.0..25.0);
            let w = rng.random_range(800.0..2000.0);
            let x = DVector::from_row_slice(&[rng.random_range(1e5..4e5), q]);
            let u = DVector::from_row_slice(&[
                rng.random_range(0.8e5..1.5e5),
                rng.random_range(5.0..25.0),
                rng.random_range(270.0..320.0),
                w,
            ]);
            let jac = comp.analytic_jacobians(&x, &u).unwrap().unwrap();
            let fd_a = finite_difference_jacobian(|xv| comp.rhs(xv, &u), &x, 1e-6).unwrap();
            let fd_b = finite_difference_jacobian(|uv| comp.rhs(&x, uv), &u, 1e-6).unwrap();
            let fd_c = finite_difference_jacobian(|xv| comp.output(xv, &u), &x, 1e-6).unwrap();
            let fd_d = finite_difference_jacobian(|uv| comp.output(&x, uv), &u, 1e-6).unwrap();
            let pairs = [
                (&jac.a, &fd_a, "A"),
                (&jac.b, &fd_b, "B"),
                (&jac.c, &fd_c, "C"),
                (&jac.d, &fd_d, "D"),
            ];
            for (got, want, name) in pairs {
                for i in 0..got.nrows() {
                    for j in 0..got.ncols() {
                        let scale = want[(i, j)].abs().max(1.0);
                        assert!(
                            (got[(i, j)] - want[(i, j)]).abs() <= 1e-6 * scale,
                            "{name}[{i},{j}]: {} vs {}",
                            got[(i, j)],
                            want[(i, j)]
                        );
                    }
                }
            }
        }
    }
}
