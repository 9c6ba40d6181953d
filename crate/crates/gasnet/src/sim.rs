//! Time-domain simulation and frequency sweeps.
//!
//! Linear models advance through the exact zero-order-hold discretization
//! (matrix exponential of the augmented system); nonlinear component
//! dynamics integrate with fixed-step RK4 plus automatic step halving.

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::components::{ComponentError, NonlinearDynamics};
use crate::label::{SignalDirection, SignalId, SignalLabel};
use crate::model::{LabeledLinearModel, ModelError};

/// Maximum number of automatic step halvings before giving up.
const MAX_REFINEMENTS: usize = 4;

/// Per-step relative state change that triggers a halving.
const STEP_CHANGE_LIMIT: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("state became non-physical at t = {t}: {source}")]
    NonPhysical { t: f64, source: ComponentError },
    #[error("right-hand side failed at t = {t}: {source}")]
    Evaluation { t: f64, source: ComponentError },
    #[error("step-size refinement exhausted after {0} halvings")]
    StepLimit(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Uniform time grid \[t0, t1\] with step dt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Result<Self, SimError> {
        if !(t1 > t0) {
            return Err(SimError::InvalidGrid(format!(
                "t1 must exceed t0, got t0 = {t0}, t1 = {t1}"
            )));
        }
        if !(dt > 0.0) {
            return Err(SimError::InvalidGrid(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if (t1 - t0) / dt > 1e7 {
            return Err(SimError::InvalidGrid(format!(
                "grid would contain {} steps; the limit is 1e7",
                (t1 - t0) / dt
            )));
        }
        Ok(Self { t0, t1, dt })
    }

    /// Number of steps; sample points are t0 + k·dt for k = 0..=steps.
    pub fn steps(&self) -> usize {
        ((self.t1 - self.t0) / self.dt + 1e-9).floor() as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps())
            .map(|k| self.t0 + k as f64 * self.dt)
            .collect()
    }
}

/// Sampled signals keyed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub columns: Vec<(SignalLabel, Vec<f64>)>,
}

impl Trajectory {
    pub fn get(&self, id: &SignalId) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(l, _)| &l.id == id)
            .map(|(_, v)| v.as_slice())
    }
}

/// Matrix exponential via nalgebra's scaling-and-squaring Padé approximation.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}

/// Exact zero-order-hold discretization: returns (A_d, B_d) with
/// x_{k+1} = A_d x_k + B_d u_k for inputs held constant over each step.
pub fn discretize_zoh(model: &LabeledLinearModel, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = model.n_states();
    let m = model.n_inputs();
    if n == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, m));
    }
    let mut augmented = DMatrix::zeros(n + m, n + m);
    augmented.view_mut((0, 0), (n, n)).copy_from(&model.a);
    augmented.view_mut((0, n), (n, m)).copy_from(&model.b);
    let phi = expm(&(augmented * dt));
    (
        phi.view((0, 0), (n, n)).into_owned(),
        phi.view((0, n), (n, m)).into_owned(),
    )
}

fn output_columns(model: &LabeledLinearModel) -> Vec<SignalLabel> {
    // Outputs first, then states not already present as outputs.
    let mut labels: Vec<SignalLabel> = model.outputs.clone();
    for s in &model.states {
        if !labels.iter().any(|l| l.id == s.id) {
            labels.push(s.clone());
        }
    }
    labels
}

/// Simulates a linear model with zero-order-hold inputs sampled from
/// `input_fn` at each grid point. Emits outputs and states.
pub fn simulate_linear<F>(
    model: &LabeledLinearModel,
    input_fn: F,
    x0: &DVector<f64>,
    grid: &TimeGrid,
) -> Result<Trajectory, SimError>
where
    F: Fn(f64) -> DVector<f64>,
{
    if x0.len() != model.n_states() {
        return Err(SimError::Dimension(format!(
            "x0 has length {}, model has {} states",
            x0.len(),
            model.n_states()
        )));
    }
    let (a_d, b_d) = discretize_zoh(model, grid.dt);
    let times = grid.times();
    let labels = output_columns(model);
    let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); labels.len()];

    let mut x = x0.clone();
    for (k, &t) in times.iter().enumerate() {
        let u = input_fn(t);
        if u.len() != model.n_inputs() {
            return Err(SimError::Dimension(format!(
                "input function returned {} values, model has {} inputs",
                u.len(),
                model.n_inputs()
            )));
        }
        let y = &model.c * &x + &model.d * &u;
        record(&mut data, model, &labels, &x, &y);
        if k + 1 < times.len() {
            x = &a_d * &x + &b_d * &u;
        }
    }

    Ok(Trajectory {
        times,
        columns: labels.into_iter().zip(data).collect(),
    })
}

fn record(
    data: &mut [Vec<f64>],
    model: &LabeledLinearModel,
    labels: &[SignalLabel],
    x: &DVector<f64>,
    y: &DVector<f64>,
) {
    for (col, label) in labels.iter().enumerate() {
        let value = match label.direction {
            SignalDirection::Output => y[model.output_index(&label.id).unwrap()],
            _ => x[model.state_index(&label.id).unwrap()],
        };
        data[col].push(value);
    }
}

/// Fixed-step RK4 for nonlinear dynamics with zero-order-hold inputs.
///
/// If any internal step changes the state by more than 10% of the state
/// magnitude (the running peak of ‖x‖∞, so zero crossings of individual
/// states do not misfire), the whole run restarts with the step halved, up
/// to four times; the output grid is unchanged. An identically zero
/// trajectory skips the check.
pub fn simulate_nonlinear<F>(
    sys: &dyn NonlinearDynamics,
    input_fn: F,
    x0: &DVector<f64>,
    grid: &TimeGrid,
) -> Result<Trajectory, SimError>
where
    F: Fn(f64) -> DVector<f64>,
{
    let n_states = sys.state_labels().len();
    if x0.len() != n_states {
        return Err(SimError::Dimension(format!(
            "x0 has length {}, system has {n_states} states",
            x0.len()
        )));
    }

    'refine: for refinement in 0..=MAX_REFINEMENTS {
        let substeps = 1usize << refinement;
        let dt = grid.dt / substeps as f64;
        let times = grid.times();

        let state_labels = sys.state_labels();
        let output_labels = sys.output_labels();
        let mut labels: Vec<SignalLabel> = output_labels.clone();
        for s in &state_labels {
            if !labels.iter().any(|l| l.id == s.id) {
                labels.push(s.clone());
            }
        }
        let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); labels.len()];

        let mut x = x0.clone();
        let mut peak = x.amax();
        for (k, &t) in times.iter().enumerate() {
            let u = input_fn(t);
            let y = sys
                .output(&x, &u)
                .map_err(|source| to_sim_error(t, source))?;
            for (col, label) in labels.iter().enumerate() {
                let value = if let Some(i) = output_labels.iter().position(|l| l.id == label.id) {
                    y[i]
                } else {
                    let i = state_labels.iter().position(|l| l.id == label.id).unwrap();
                    x[i]
                };
                data[col].push(value);
            }
            if k + 1 == times.len() {
                break;
            }
            for sub in 0..substeps {
                let t_sub = t + sub as f64 * dt;
                // Input held constant across the full grid step.
                let next =
                    rk4_step(sys, &x, &u, dt).map_err(|source| to_sim_error(t_sub, source))?;
                if peak > 0.0 {
                    let change = (&next - &x).amax();
                    if change > STEP_CHANGE_LIMIT * peak {
                        if refinement == MAX_REFINEMENTS {
                            return Err(SimError::StepLimit(MAX_REFINEMENTS));
                        }
                        continue 'refine;
                    }
                }
                x = next;
                peak = peak.max(x.amax());
            }
        }

        return Ok(Trajectory {
            times,
            columns: labels.into_iter().zip(data).collect(),
        });
    }
    Err(SimError::StepLimit(MAX_REFINEMENTS))
}

fn to_sim_error(t: f64, source: ComponentError) -> SimError {
    match source {
        ComponentError::NonPhysicalState(_) => SimError::NonPhysical { t, source },
        other => SimError::Evaluation { t, source: other },
    }
}

fn rk4_step(
    sys: &dyn NonlinearDynamics,
    x: &DVector<f64>,
    u: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>, ComponentError> {
    let k1 = sys.rhs(x, u)?;
    let k2 = sys.rhs(&(x + 0.5 * dt * &k1), u)?;
    let k3 = sys.rhs(&(x + 0.5 * dt * &k2), u)?;
    let k4 = sys.rhs(&(x + dt * &k3), u)?;
    Ok(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// A linear model viewed as nonlinear dynamics, for integrator comparisons.
pub struct LinearDynamics<'a>(pub &'a LabeledLinearModel);

impl NonlinearDynamics for LinearDynamics<'_> {
    fn state_labels(&self) -> Vec<SignalLabel> {
        self.0.states.clone()
    }

    fn input_labels(&self) -> Vec<SignalLabel> {
        self.0.inputs.clone()
    }

    fn output_labels(&self) -> Vec<SignalLabel> {
        self.0.outputs.clone()
    }

    fn rhs(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ComponentError> {
        Ok(&self.0.a * x + &self.0.b * u)
    }

    fn output(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>, ComponentError> {
        Ok(&self.0.c * x + &self.0.d * u)
    }
}

/// Frequency response tabulated at s = iω per requested ω. Points where the
/// resolvent is singular are skipped and flagged.
#[derive(Debug, Clone)]
pub struct FrequencySweep {
    pub omegas: Vec<f64>,
    /// One complex gain matrix per frequency; `None` where skipped.
    pub responses: Vec<Option<DMatrix<Complex<f64>>>>,
    /// (index, explanation) per skipped frequency.
    pub skipped: Vec<(usize, String)>,
}

pub fn frequency_sweep(model: &LabeledLinearModel, omegas: &[f64]) -> FrequencySweep {
    let mut responses = Vec::with_capacity(omegas.len());
    let mut skipped = Vec::new();
    for (i, &omega) in omegas.iter().enumerate() {
        match model.frequency_response(Complex::new(0.0, omega)) {
            Ok(resp) => responses.push(Some(resp)),
            Err(e) => {
                skipped.push((i, e.to_string()));
                responses.push(None);
            }
        }
    }
    FrequencySweep {
        omegas: omegas.to_vec(),
        responses,
        skipped,
    }
}

/// Logarithmically spaced frequencies, inclusive of both endpoints.
pub fn log_spaced(omega_min: f64, omega_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && omega_min > 0.0 && omega_max > omega_min);
    let (lo, hi) = (omega_min.log10(), omega_max.log10());
    (0..points)
        .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (points - 1) as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::components::{
        dynamic_valve, isothermal_tank, single_pipe, static_valve, TankParams,
    };
    use crate::label::SignalId;
    use crate::test_fixtures::test_pipe;

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 0.01).is_ok());
        assert!(TimeGrid::new(1.0, 0.0, 0.01).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1).is_err());
        assert!(TimeGrid::new(0.0, 1e9, 1e-2).is_err());
    }

    #[test]
    fn expm_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0]);
        let e = expm(&m);
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - 2.0f64.exp()).abs() < 1e-13);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn zero_input_zero_state_stays_zero() {
        let model = single_pipe("p", &test_pipe()).unwrap();
        let grid = TimeGrid::new(0.0, 10.0, 0.1).unwrap();
        let traj =
            simulate_linear(&model, |_| DVector::zeros(2), &DVector::zeros(2), &grid).unwrap();
        for (_, column) in &traj.columns {
            assert!(column.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn pipe_step_settles_to_dc_gain() {
        let model = single_pipe("p", &test_pipe()).unwrap();
        let dc = model.dc_gain().unwrap();
        // Slowest eigenvalue: |Re| = 0.027 -> tau = 37 s; run 10 tau.
        let tau = 37.04;
        let grid = TimeGrid::new(0.0, 10.0 * tau, 0.05).unwrap();
        let step = 1000.0;
        let traj = simulate_linear(
            &model,
            |_| DVector::from_row_slice(&[step, 0.0]),
            &DVector::zeros(2),
            &grid,
        )
        .unwrap();
        let p_r = traj.get(&SignalId::new("p", "p_r")).unwrap();
        let expected = dc[(0, 0)] * step;
        let last = *p_r.last().unwrap();
        assert!(
            (last - expected).abs() <= 1e-3 * expected.abs(),
            "settled to {last}, expected {expected}"
        );
    }

    #[test]
    fn dynamic_valve_step_is_first_order() {
        let o = crate::test_fixtures::test_orifice();
        let model = dynamic_valve("v", &o, 1e-3, 5e6, 4e6).unwrap();
        let grid = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let traj = simulate_linear(
            &model,
            |_| DVector::from_row_slice(&[1.0, 0.0, 0.0]),
            &DVector::zeros(1),
            &grid,
        )
        .unwrap();
        let a_o = traj.get(&SignalId::new("v", "A_o")).unwrap();
        let k = o.a_o_max;
        for (t, got) in traj.times.iter().zip(a_o) {
            let want = k * (1.0 - (-t / o.tau).exp());
            assert!((got - want).abs() <= 1e-9 * k, "t = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn tank_pressure_integrates_net_inflow() {
        let tank = TankParams {
            volume: 10.0,
            gas: crate::test_fixtures::test_gas(),
            n_inlets: 1,
            n_outlets: 1,
            nominal_p: 5e6,
            nominal_t: 300.0,
        };
        let model = isothermal_tank("t", &tank).unwrap();
        // Two full periods of the modulation, so the held input returns to
        // its initial value and the trapezoid sum matches the exact
        // zero-order-hold integral.
        let horizon = 4.0 * std::f64::consts::PI;
        let grid = TimeGrid::new(0.0, horizon, horizon / 10_000.0).unwrap();
        let inflow = |t: f64| 2.0 + (0.5 * t).sin();
        let outflow = 1.5;
        let traj = simulate_linear(
            &model,
            |t| DVector::from_row_slice(&[inflow(t), outflow]),
            &DVector::zeros(1),
            &grid,
        )
        .unwrap();
        let p = traj.get(&SignalId::new("t", "p")).unwrap();
        // Trapezoid integral of the sampled net inflow.
        let mut integral = 0.0;
        for k in 1..traj.times.len() {
            let f0 = inflow(traj.times[k - 1]) - outflow;
            let f1 = inflow(traj.times[k]) - outflow;
            integral += 0.5 * (f0 + f1) * grid.dt;
        }
        let expected_last = tank.pressure_rate() * integral;
        let got = *p.last().unwrap();
        assert!(
            (got - expected_last).abs() <= 1e-6 * expected_last.abs(),
            "{got} vs {expected_last}"
        );
    }

    #[test]
    fn rk4_on_linear_model_converges_at_order_four() {
        // Free oscillation from an initial pressure deviation; the relative
        // state change per step is |lambda| dt < 0.1, so no halving kicks in
        // and the observed error ratios isolate the integrator order.
        let model = single_pipe("p", &test_pipe()).unwrap();
        let x0 = DVector::from_row_slice(&[1000.0, 0.0]);
        let input = |_: f64| DVector::from_row_slice(&[0.0, 0.0]);
        let horizon = 40.0;

        let error_at = |dt: f64| {
            let grid = TimeGrid::new(0.0, horizon, dt).unwrap();
            let exact = simulate_linear(&model, input, &x0, &grid).unwrap();
            let rk4 = simulate_nonlinear(&LinearDynamics(&model), input, &x0, &grid).unwrap();
            let pe = exact.get(&SignalId::new("p", "p_r")).unwrap();
            let pr = rk4.get(&SignalId::new("p", "p_r")).unwrap();
            pe.iter()
                .zip(pr)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };

        let e1 = error_at(0.2);
        let e2 = error_at(0.1);
        let e3 = error_at(0.05);
        let order12 = (e1 / e2).log2();
        let order23 = (e2 / e3).log2();
        assert!(
            order12 >= 3.5 && order23 >= 3.5,
            "observed orders {order12:.2}, {order23:.2} (errors {e1:.3e}, {e2:.3e}, {e3:.3e})"
        );
    }

    #[test]
    fn constant_equilibrium_stays_constant() {
        use crate::components::NonisothermalTank;
        let tank = NonisothermalTank::new(
            "t",
            TankParams {
                volume: 10.0,
                gas: crate::test_fixtures::test_gas(),
                n_inlets: 1,
                n_outlets: 1,
                nominal_p: 5e6,
                nominal_t: 300.0,
            },
        )
        .unwrap();
        let x0 = DVector::from_row_slice(&[5e6, 300.0]);
        let grid = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let traj = simulate_nonlinear(
            &tank,
            |_| DVector::from_row_slice(&[4.0, 300.0, 4.0]),
            &x0,
            &grid,
        )
        .unwrap();
        let p = traj.get(&SignalId::new("t", "p")).unwrap();
        let t = traj.get(&SignalId::new("t", "T")).unwrap();
        for k in 0..p.len() {
            assert!((p[k] - 5e6).abs() < 1e-9 * 5e6);
            assert!((t[k] - 300.0).abs() < 1e-9 * 300.0);
        }
    }

    #[test]
    fn compressor_speed_step_settles_to_new_map_balance() {
        // After a speed step with the vent flow held, the duct flow must
        // return to the vented value and the plenum pressure must settle to
        // the map pressure at that flow, both root-solved independently of
        // the simulation.
        let comp = crate::test_fixtures::test_compressor();
        let (x0, _) = comp.steady_state(10.0, 1000.0).unwrap();
        let omega_new = 1100.0;
        let u = DVector::from_row_slice(&[1e5, 10.0, 290.0, omega_new]);
        let grid = TimeGrid::new(0.0, 3.0, 2e-4).unwrap();
        let traj = simulate_nonlinear(&comp, |_| u.clone(), &x0, &grid).unwrap();
        let q2 = traj.get(&SignalId::new("c", "q_2")).unwrap();
        let p3 = traj.get(&SignalId::new("c", "p_3")).unwrap();
        let p3_expected = comp.params.map.pressure(10.0, omega_new).unwrap();
        assert!((q2.last().unwrap() - 10.0).abs() < 1e-6 * 10.0);
        assert!((p3.last().unwrap() - p3_expected).abs() < 1e-6 * p3_expected);
    }

    #[test]
    fn static_valve_sweep_is_flat() {
        let v = static_valve("v", 0.8).unwrap();
        let sweep = frequency_sweep(&v, &log_spaced(1e-3, 1e3, 20));
        for resp in sweep.responses.iter().flatten() {
            assert_eq!(resp[(0, 0)], Complex::new(0.8, 0.0));
            assert_eq!(resp[(1, 1)], Complex::new(1.0, 0.0));
        }
        assert!(sweep.skipped.is_empty());
    }

    #[test]
    fn pipe_pressure_gain_rolls_off() {
        let model = single_pipe("p", &test_pipe()).unwrap();
        // Corner near |lambda| = sqrt(alpha*beta_pr) = 0.367 rad/s; follow a
        // geometric grid three decades beyond it.
        let omegas = log_spaced(0.367, 367.0, 10);
        let sweep = frequency_sweep(&model, &omegas);
        let mags: Vec<f64> = sweep
            .responses
            .iter()
            .map(|r| r.as_ref().unwrap()[(0, 0)].norm())
            .collect();
        for pair in mags.windows(2) {
            assert!(pair[1] < pair[0], "magnitudes {mags:?} not decreasing");
        }
    }

    #[test]
    fn sweep_flags_singular_points() {
        // Undamped oscillator: resolvent singular at its eigenfrequency.
        use crate::label::{SignalDirection, SignalKind};
        let mk = |n: &str, d| SignalLabel::new("o", n, SignalKind::Pressure, d);
        let m = LabeledLinearModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            vec![
                mk("x1", SignalDirection::State),
                mk("x2", SignalDirection::State),
            ],
            vec![
                mk("u1", SignalDirection::Input),
                mk("u2", SignalDirection::Input),
            ],
            vec![
                mk("y1", SignalDirection::Output),
                mk("y2", SignalDirection::Output),
            ],
        )
        .unwrap();
        let sweep = frequency_sweep(&m, &[0.5, 1.0, 2.0]);
        assert_eq!(sweep.skipped.len(), 1);
        assert_eq!(sweep.skipped[0].0, 1);
        assert!(sweep.responses[1].is_none());
    }
}
