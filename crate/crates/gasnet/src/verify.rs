//! Property checkers: conservation of mass at DC, structural mass balance
//! for integrator models, a brute-force junction oracle, finite-difference
//! Jacobians and steady-state residuals.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::components::ComponentError;
use crate::label::SignalKind;
use crate::model::{condition_estimate, LabeledLinearModel, SINGULARITY_COND_LIMIT};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("partition does not match the model: {0}")]
    PartitionMismatch(String),
    #[error("junction system is singular")]
    DegenerateJunction,
    #[error("function evaluation failed while perturbing coordinate {index}: {source}")]
    EvaluationFailure {
        index: usize,
        source: ComponentError,
    },
    #[error("steady-state search did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// Index lists splitting a model's pressure/flow inputs and outputs.
/// Temperature, command and area signals are excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalPartition {
    pub pressure_inputs: Vec<usize>,
    pub flow_inputs: Vec<usize>,
    pub pressure_outputs: Vec<usize>,
    pub flow_outputs: Vec<usize>,
}

impl SignalPartition {
    /// Builds the partition from the model's own labels.
    pub fn from_labels(model: &LabeledLinearModel) -> Self {
        let mut partition = SignalPartition {
            pressure_inputs: Vec::new(),
            flow_inputs: Vec::new(),
            pressure_outputs: Vec::new(),
            flow_outputs: Vec::new(),
        };
        for (i, label) in model.inputs.iter().enumerate() {
            match label.kind {
                SignalKind::Pressure => partition.pressure_inputs.push(i),
                SignalKind::MassFlow => partition.flow_inputs.push(i),
                _ => {}
            }
        }
        for (i, label) in model.outputs.iter().enumerate() {
            match label.kind {
                SignalKind::Pressure => partition.pressure_outputs.push(i),
                SignalKind::MassFlow => partition.flow_outputs.push(i),
                _ => {}
            }
        }
        partition
    }

    fn validate(&self, model: &LabeledLinearModel) -> Result<(), VerifyError> {
        let check = |indices: &[usize], len: usize, what: &str| {
            for &i in indices {
                if i >= len {
                    return Err(VerifyError::PartitionMismatch(format!(
                        "{what} index {i} out of range (len {len})"
                    )));
                }
            }
            Ok(())
        };
        check(&self.pressure_inputs, model.n_inputs(), "pressure input")?;
        check(&self.flow_inputs, model.n_inputs(), "flow input")?;
        check(&self.pressure_outputs, model.n_outputs(), "pressure output")?;
        check(&self.flow_outputs, model.n_outputs(), "flow output")?;
        Ok(())
    }
}

/// How a mass-conservation check was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassCheckMode {
    /// T_qp(0) = 0 and unit column sums of T_qq(0), from the DC gain.
    DcGain,
    /// Row-structure check on B for integrator models (tanks): change in
    /// mass equals mass flow in minus mass flow out.
    Structural,
}

/// Outcome of a mass-conservation check.
#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    /// DC mode: max |1ᵀT_qp(0)| over pressure-input columns, the net flow
    /// produced by each pressure input. Structural mode: max relative
    /// pressure-input coupling of the integrator rows.
    pub t_qp_norm: f64,
    /// DC mode: max |1ᵀT_qq(0) − 1|. Structural mode: max relative deviation
    /// of the flow couplings from the common ±coefficient pattern.
    pub colsum_dev: f64,
    pub passed: bool,
    pub mode: MassCheckMode,
}

/// Checks conservation of mass at steady state.
///
/// When A is nonsingular the DC gain must map each pressure input to zero
/// net flow (1ᵀT_qp(0) = 0) and pass each flow input through with unit
/// column sum (1ᵀT_qq(0) = 1ᵀ). The column-sum form matters: a joint
/// redistributes flow between its joining pipes when an inlet pressure
/// rises, so individual T_qp entries are nonzero while the net is exactly
/// zero. For a single flow output the check reduces to T_qp(0) = 0
/// entrywise. When A is singular the model contains an integrator (a tank);
/// its B rows must carry one common coefficient, positive on every inlet
/// flow and negative on every outlet flow.
pub fn check_mass_conservation(
    model: &LabeledLinearModel,
    partition: &SignalPartition,
    tol: f64,
) -> Result<MassReport, VerifyError> {
    partition.validate(model)?;
    if partition.flow_inputs.is_empty() {
        return Err(VerifyError::PartitionMismatch(
            "model has no mass-flow inputs; conservation of mass does not apply".to_string(),
        ));
    }

    let singular = model.n_states() > 0
        && !matches!(condition_estimate(&model.a), Some(c) if c < SINGULARITY_COND_LIMIT);
    if singular {
        return structural_mass_check(model, partition, tol);
    }

    if partition.flow_outputs.is_empty() {
        return Err(VerifyError::PartitionMismatch(
            "model has no mass-flow outputs; conservation of mass does not apply".to_string(),
        ));
    }
    let dc = model
        .dc_gain()
        .map_err(|e| VerifyError::PartitionMismatch(format!("DC gain unavailable: {e}")))?;

    let mut t_qp_norm = 0.0f64;
    for &col in &partition.pressure_inputs {
        let net: f64 = partition
            .flow_outputs
            .iter()
            .map(|&row| dc[(row, col)])
            .sum();
        t_qp_norm = t_qp_norm.max(net.abs());
    }
    let mut colsum_dev = 0.0f64;
    for &col in &partition.flow_inputs {
        let sum: f64 = partition
            .flow_outputs
            .iter()
            .map(|&row| dc[(row, col)])
            .sum();
        colsum_dev = colsum_dev.max((sum - 1.0).abs());
    }
    Ok(MassReport {
        t_qp_norm,
        colsum_dev,
        passed: t_qp_norm <= tol && colsum_dev <= tol,
        mode: MassCheckMode::DcGain,
    })
}

fn structural_mass_check(
    model: &LabeledLinearModel,
    partition: &SignalPartition,
    tol: f64,
) -> Result<MassReport, VerifyError> {
    // Pure integrator states: zero row and zero column in A.
    let n = model.n_states();
    let integrators: Vec<usize> = (0..n)
        .filter(|&i| {
            model.a.row(i).iter().all(|x| *x == 0.0) && model.a.column(i).iter().all(|x| *x == 0.0)
        })
        .collect();
    if integrators.is_empty() {
        return Err(VerifyError::PartitionMismatch(
            "A is singular but has no pure integrator state; neither check applies".to_string(),
        ));
    }

    let mut t_qp_norm = 0.0f64;
    let mut colsum_dev = 0.0f64;
    for &i in &integrators {
        let coeff = partition
            .flow_inputs
            .iter()
            .map(|&j| model.b[(i, j)].abs())
            .fold(0.0f64, f64::max);
        if coeff == 0.0 {
            return Err(VerifyError::PartitionMismatch(format!(
                "integrator state {i} is not driven by any flow input"
            )));
        }
        for &j in &partition.flow_inputs {
            // Inlets are named q_l*, outlets q_r*.
            let name = &model.inputs[j].id.name;
            let expected = if name.starts_with("q_l") {
                coeff
            } else if name.starts_with("q_r") {
                -coeff
            } else {
                return Err(VerifyError::PartitionMismatch(format!(
                    "flow input {} is neither an inlet (q_l*) nor an outlet (q_r*)",
                    model.inputs[j].id
                )));
            };
            colsum_dev = colsum_dev.max((model.b[(i, j)] - expected).abs() / coeff);
        }
        for &j in &partition.pressure_inputs {
            t_qp_norm = t_qp_norm.max(model.b[(i, j)].abs() / coeff);
        }
    }
    Ok(MassReport {
        t_qp_norm,
        colsum_dev,
        passed: t_qp_norm <= tol && colsum_dev <= tol,
        mode: MassCheckMode::Structural,
    })
}

/// Independent oracle for the junction flow weights: solves the linear
/// system {equal pressure derivatives at the intersection; flow balance}
/// directly for the internal flows q_{k,r}.
///
/// `q_state` holds (q_{0,l}, q_{1,l}, ..., q_{n,l}).
pub fn brute_force_junction(alphas: &[f64], q_state: &[f64]) -> Result<Vec<f64>, VerifyError> {
    let n = alphas.len();
    if n < 2 || q_state.len() != n + 1 {
        return Err(VerifyError::PartitionMismatch(format!(
            "need n >= 2 coefficients and n + 1 flows, got {} and {}",
            n,
            q_state.len()
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    // alpha_k (q_{k,r} - q_{k,l}) = alpha_1 (q_{1,r} - q_{1,l})  for k = 2..n
    for k in 1..n {
        m[(k - 1, 0)] = -alphas[0];
        m[(k - 1, k)] = alphas[k];
        rhs[k - 1] = alphas[k] * q_state[k + 1] - alphas[0] * q_state[1];
    }
    // sum_k q_{k,r} = q_{0,l}
    for k in 0..n {
        m[(n - 1, k)] = 1.0;
    }
    rhs[n - 1] = q_state[0];

    match condition_estimate(&m) {
        Some(c) if c < SINGULARITY_COND_LIMIT => {}
        _ => return Err(VerifyError::DegenerateJunction),
    }
    let solution = m.lu().solve(&rhs).ok_or(VerifyError::DegenerateJunction)?;
    Ok(solution.iter().copied().collect())
}

/// Central-difference Jacobian of `f` at `point`, with per-coordinate step
/// `rel_step * max(1, |coordinate|)`.
pub fn finite_difference_jacobian<F>(
    f: F,
    point: &DVector<f64>,
    rel_step: f64,
) -> Result<DMatrix<f64>, VerifyError>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, ComponentError>,
{
    let n = point.len();
    let f0 = f(point).map_err(|source| VerifyError::EvaluationFailure { index: 0, source })?;
    let m = f0.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = rel_step * point[j].abs().max(1.0);
        let mut plus = point.clone();
        plus[j] += h;
        let mut minus = point.clone();
        minus[j] -= h;
        let f_plus =
            f(&plus).map_err(|source| VerifyError::EvaluationFailure { index: j, source })?;
        let f_minus =
            f(&minus).map_err(|source| VerifyError::EvaluationFailure { index: j, source })?;
        for i in 0..m {
            jac[(i, j)] = (f_plus[i] - f_minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// ‖A·x̄ + B·ū‖ for a linear model annotated with absolute nominal values.
/// Signals without a nominal entry count as zero. Reports, never fails.
pub fn linear_steady_residual(model: &LabeledLinearModel) -> f64 {
    let x = DVector::from_iterator(
        model.n_states(),
        model
            .states
            .iter()
            .map(|l| model.nominal.get(&l.id).copied().unwrap_or(0.0)),
    );
    let u = DVector::from_iterator(
        model.n_inputs(),
        model
            .inputs
            .iter()
            .map(|l| model.nominal.get(&l.id).copied().unwrap_or(0.0)),
    );
    (&model.a * x + &model.b * u).norm()
}

/// ‖f(x̄, ū)‖ for a nonlinear right-hand side.
pub fn nonlinear_steady_residual<F>(
    rhs: F,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<f64, ComponentError>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>, ComponentError>,
{
    Ok(rhs(x, u)?.norm())
}

/// Damped Newton search for f(x) = 0 using the finite-difference Jacobian.
/// Intended for locating steady states before simulation or linearization.
pub fn solve_steady_state<F>(
    f: F,
    x0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>, VerifyError>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, ComponentError>,
{
    let mut x = x0.clone();
    for _ in 0..max_iter {
        let r = f(&x).map_err(|source| VerifyError::EvaluationFailure { index: 0, source })?;
        if r.norm() <= tol {
            return Ok(x);
        }
        let jac = finite_difference_jacobian(&f, &x, 1e-7)?;
        let step = jac.lu().solve(&r).ok_or(VerifyError::DegenerateJunction)?;
        // Backtracking keeps iterates inside the feasible region of rhs
        // functions that reject non-physical states.
        let mut damping = 1.0;
        let mut accepted = false;
        while damping >= 1e-6 {
            let candidate = &x - damping * &step;
            if let Ok(rc) = f(&candidate) {
                if rc.norm() < r.norm() {
                    x = candidate;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            return Err(VerifyError::NoConvergence(max_iter));
        }
    }
    let r = f(&x).map_err(|source| VerifyError::EvaluationFailure { index: 0, source })?;
    if r.norm() <= tol {
        Ok(x)
    } else {
        Err(VerifyError::NoConvergence(max_iter))
    }
}

/// Convenience: mass check with the partition derived from the model labels.
pub fn mass_check(model: &LabeledLinearModel, tol: f64) -> Result<MassReport, VerifyError> {
    check_mass_conservation(model, &SignalPartition::from_labels(model), tol)
}
