//! Labeled linear time-invariant models and the basic linear-systems queries.
//!
//! A [`LabeledLinearModel`] couples the usual (A, B, C, D) quadruple with
//! typed signal labels for states, inputs and outputs, plus an optional map
//! of nominal operating-point values. Static components use the n_x = 0
//! convention (empty A, nonempty D) so that stacking and interconnection
//! need no special cases.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

use crate::label::{SignalDirection, SignalId, SignalLabel};

/// Condition-number threshold above which a matrix is treated as singular.
///
/// Separates genuine integrators (the isothermal tank, cond = ∞) from
/// ill-conditioned but valid pipe dynamics.
pub const SINGULARITY_COND_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model dimensions are inconsistent: {0:?}")]
    Dimensions(Vec<DimensionViolation>),
    #[error(
        "A is singular at DC (condition estimate {cond:.3e}); the model contains an integrator"
    )]
    SingularAtDC { cond: f64 },
    #[error("sI - A is singular at s = {s} (condition estimate {cond:.3e})")]
    SingularResolvent { s: Complex<f64>, cond: f64 },
}

/// One inconsistency found by [`validate_dimensions`], naming the offending
/// matrix or label list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionViolation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for DimensionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// State-space model (A, B, C, D) with labeled signals and nominal values.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub states: Vec<SignalLabel>,
    pub inputs: Vec<SignalLabel>,
    pub outputs: Vec<SignalLabel>,
    /// Nominal operating-point values keyed by signal id (absolute variables,
    /// not deviations).
    pub nominal: BTreeMap<SignalId, f64>,
}

impl LabeledLinearModel {
    /// Builds a model and rejects it if any dimension or label invariant is
    /// violated.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        states: Vec<SignalLabel>,
        inputs: Vec<SignalLabel>,
        outputs: Vec<SignalLabel>,
    ) -> Result<Self, ModelError> {
        let model = Self {
            a,
            b,
            c,
            d,
            states,
            inputs,
            outputs,
            nominal: BTreeMap::new(),
        };
        let violations = validate_dimensions(&model);
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Dimensions(violations))
        }
    }

    /// Builds a purely static model: n_x = 0, y = D u.
    pub fn new_static(
        d: DMatrix<f64>,
        inputs: Vec<SignalLabel>,
        outputs: Vec<SignalLabel>,
    ) -> Result<Self, ModelError> {
        let n_y = d.nrows();
        let n_w = d.ncols();
        Self::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, n_w),
            DMatrix::zeros(n_y, 0),
            d,
            Vec::new(),
            inputs,
            outputs,
        )
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn with_nominal(mut self, nominal: BTreeMap<SignalId, f64>) -> Self {
        self.nominal = nominal;
        self
    }

    pub fn state_index(&self, id: &SignalId) -> Option<usize> {
        self.states.iter().position(|l| &l.id == id)
    }

    pub fn input_index(&self, id: &SignalId) -> Option<usize> {
        self.inputs.iter().position(|l| &l.id == id)
    }

    pub fn output_index(&self, id: &SignalId) -> Option<usize> {
        self.outputs.iter().position(|l| &l.id == id)
    }

    /// Transfer matrix at s = 0, i.e. D − C·A⁻¹·B.
    ///
    /// Fails with [`ModelError::SingularAtDC`] when A is singular to working
    /// precision, which signals an integrator; callers must fall back to
    /// structural checks for those models.
    pub fn dc_gain(&self) -> Result<DMatrix<f64>, ModelError> {
        if self.n_states() == 0 {
            return Ok(self.d.clone());
        }
        let cond = condition_estimate(&self.a);
        match cond {
            Some(c) if c < SINGULARITY_COND_LIMIT => {}
            Some(c) => return Err(ModelError::SingularAtDC { cond: c }),
            None => {
                return Err(ModelError::SingularAtDC {
                    cond: f64::INFINITY,
                })
            }
        }
        let lu = self.a.clone().lu();
        let x = lu.solve(&self.b).ok_or(ModelError::SingularAtDC {
            cond: f64::INFINITY,
        })?;
        Ok(&self.d - &self.c * x)
    }

    /// Transfer matrix C(sI − A)⁻¹B + D at a complex frequency s.
    pub fn frequency_response(&self, s: Complex<f64>) -> Result<DMatrix<Complex<f64>>, ModelError> {
        let to_complex = |m: &DMatrix<f64>| m.map(|x| Complex::new(x, 0.0));
        if self.n_states() == 0 {
            return Ok(to_complex(&self.d));
        }
        let n = self.n_states();
        let mut resolvent = to_complex(&self.a).scale(-1.0);
        for i in 0..n {
            resolvent[(i, i)] += s;
        }
        let cond = condition_estimate_complex(&resolvent);
        match cond {
            Some(c) if c < SINGULARITY_COND_LIMIT => {}
            Some(c) => return Err(ModelError::SingularResolvent { s, cond: c }),
            None => {
                return Err(ModelError::SingularResolvent {
                    s,
                    cond: f64::INFINITY,
                })
            }
        }
        let lu = resolvent.lu();
        let x = lu
            .solve(&to_complex(&self.b))
            .ok_or(ModelError::SingularResolvent {
                s,
                cond: f64::INFINITY,
            })?;
        Ok(to_complex(&self.c) * x + to_complex(&self.d))
    }
}

/// Reports every dimension/label inconsistency of a model; empty means the
/// model is well-formed. Never fails.
pub fn validate_dimensions(model: &LabeledLinearModel) -> Vec<DimensionViolation> {
    let mut out = Vec::new();
    let mut push = |field: &'static str, message: String| {
        out.push(DimensionViolation { field, message });
    };

    if model.a.nrows() != model.a.ncols() {
        push(
            "a",
            format!(
                "A must be square, got {}x{}",
                model.a.nrows(),
                model.a.ncols()
            ),
        );
    }
    let n_x = model.a.nrows();
    let n_w = model.b.ncols();
    let n_y = model.c.nrows();

    if model.b.nrows() != n_x {
        push(
            "b",
            format!("B has {} rows, expected {}", model.b.nrows(), n_x),
        );
    }
    if model.c.ncols() != n_x {
        push(
            "c",
            format!("C has {} columns, expected {}", model.c.ncols(), n_x),
        );
    }
    if model.d.nrows() != n_y || model.d.ncols() != n_w {
        push(
            "d",
            format!(
                "D is {}x{}, expected {}x{}",
                model.d.nrows(),
                model.d.ncols(),
                n_y,
                n_w
            ),
        );
    }
    if model.states.len() != n_x {
        push(
            "state_labels",
            format!("{} state labels for {} states", model.states.len(), n_x),
        );
    }
    if model.inputs.len() != n_w {
        push(
            "input_labels",
            format!("{} input labels for {} inputs", model.inputs.len(), n_w),
        );
    }
    if model.outputs.len() != n_y {
        push(
            "output_labels",
            format!("{} output labels for {} outputs", model.outputs.len(), n_y),
        );
    }

    for (field, labels, expected) in [
        ("state_labels", &model.states, SignalDirection::State),
        ("input_labels", &model.inputs, SignalDirection::Input),
        ("output_labels", &model.outputs, SignalDirection::Output),
    ] {
        for (i, a) in labels.iter().enumerate() {
            if a.direction != expected {
                push(
                    field,
                    format!(
                        "label {} has direction {:?}, expected {:?}",
                        a.id, a.direction, expected
                    ),
                );
            }
            for b in labels.iter().skip(i + 1) {
                if a.id == b.id {
                    push(field, format!("duplicate label {}", a.id));
                }
            }
        }
    }

    for id in model.nominal.keys() {
        let known = model
            .states
            .iter()
            .chain(&model.inputs)
            .chain(&model.outputs)
            .any(|l| &l.id == id);
        if !known {
            push("nominal", format!("nominal value for unknown signal {id}"));
        }
    }

    out
}

/// 1-norm condition estimate via explicit inverse; `None` when the LU
/// factorization finds the matrix exactly singular. Cheap at the dense,
/// O(10²)-state sizes this crate targets.
pub fn condition_estimate(m: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(1.0);
    }
    let inv = m.clone().lu().try_inverse()?;
    Some(norm1(m) * norm1(&inv))
}

fn condition_estimate_complex(m: &DMatrix<Complex<f64>>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(1.0);
    }
    let inv = m.clone().lu().try_inverse()?;
    Some(norm1_complex(m) * norm1_complex(&inv))
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn norm1_complex(m: &DMatrix<Complex<f64>>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::SignalKind;

    fn label(owner: &str, name: &str, dir: SignalDirection) -> SignalLabel {
        SignalLabel::new(owner, name, SignalKind::Pressure, dir)
    }

    /// Two-state system patterned on a lumped pipe segment.
    fn pipe_like() -> LabeledLinearModel {
        let alpha = -1350.0;
        let beta_pr = -1e-4;
        let beta_pl = 1.00054e-4;
        let gamma = -0.054;
        LabeledLinearModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, -alpha, beta_pr, gamma]),
            DMatrix::from_row_slice(2, 2, &[0.0, alpha, beta_pl, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            vec![
                label("p", "p_r", SignalDirection::State),
                label("p", "q_l", SignalDirection::State),
            ],
            vec![
                label("p", "p_l", SignalDirection::Input),
                label("p", "q_r", SignalDirection::Input),
            ],
            vec![
                label("p", "p_r", SignalDirection::Output),
                label("p", "q_l", SignalDirection::Output),
            ],
        )
        .unwrap()
    }

    #[test]
    fn well_formed_model_has_no_violations() {
        assert!(validate_dimensions(&pipe_like()).is_empty());
    }

    #[test]
    fn state_label_mismatch_is_named() {
        let mut m = pipe_like();
        m.states.push(label("p", "extra", SignalDirection::State));
        let v = validate_dimensions(&m);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "state_labels");
    }

    #[test]
    fn static_model_convention_is_valid() {
        let m = LabeledLinearModel::new_static(
            DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.0, 1.0]),
            vec![
                label("v", "p_l", SignalDirection::Input),
                label("v", "q_r", SignalDirection::Input),
            ],
            vec![
                label("v", "p_r", SignalDirection::Output),
                label("v", "q_l", SignalDirection::Output),
            ],
        )
        .unwrap();
        assert!(validate_dimensions(&m).is_empty());
        assert_eq!(m.n_states(), 0);
    }

    #[test]
    fn dc_gain_matches_closed_form() {
        // For the pipe pattern the DC gain is [[-beta_pl/beta_pr, -gamma/beta_pr], [0, 1]].
        let m = pipe_like();
        let dc = m.dc_gain().unwrap();
        let beta_pr = -1e-4;
        let beta_pl = 1.00054e-4;
        let gamma = -0.054;
        assert!((dc[(0, 0)] - (-beta_pl / beta_pr)).abs() < 1e-12 * dc[(0, 0)].abs());
        assert!((dc[(0, 1)] - (-gamma / beta_pr)).abs() < 1e-12 * dc[(0, 1)].abs());
        assert!(dc[(1, 0)].abs() < 1e-15);
        assert!((dc[(1, 1)] - 1.0).abs() < 1e-14);
        // Frozen values: 1.00054 and -540 for these coefficients.
        assert!((dc[(0, 0)] - 1.00054).abs() < 1e-12);
        assert!((dc[(0, 1)] - (-540.0)).abs() < 1e-9);
    }

    #[test]
    fn integrator_is_singular_at_dc() {
        let m = LabeledLinearModel::new(
            DMatrix::zeros(1, 1),
            DMatrix::from_row_slice(1, 2, &[13500.0, -13500.0]),
            DMatrix::identity(1, 1),
            DMatrix::zeros(1, 2),
            vec![label("t", "p", SignalDirection::State)],
            vec![
                label("t", "q_l", SignalDirection::Input),
                label("t", "q_r", SignalDirection::Input),
            ],
            vec![label("t", "p", SignalDirection::Output)],
        )
        .unwrap();
        assert!(matches!(m.dc_gain(), Err(ModelError::SingularAtDC { .. })));
    }

    #[test]
    fn frequency_response_at_zero_matches_dc_gain() {
        let m = pipe_like();
        let dc = m.dc_gain().unwrap();
        let fr = m.frequency_response(Complex::new(0.0, 0.0)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let diff = (fr[(i, j)] - Complex::new(dc[(i, j)], 0.0)).norm();
                assert!(diff <= 1e-12 * dc[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn frequency_response_is_conjugate_symmetric() {
        let m = pipe_like();
        let s = Complex::new(0.02, 0.31);
        let fr = m.frequency_response(s).unwrap();
        let fr_conj = m.frequency_response(s.conj()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((fr_conj[(i, j)] - fr[(i, j)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn static_model_frequency_response_is_d() {
        let m = LabeledLinearModel::new_static(
            DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]),
            vec![
                label("c", "p_l", SignalDirection::Input),
                label("c", "q_r", SignalDirection::Input),
            ],
            vec![
                label("c", "p_r", SignalDirection::Output),
                label("c", "q_l", SignalDirection::Output),
            ],
        )
        .unwrap();
        let fr = m.frequency_response(Complex::new(0.0, 7.7)).unwrap();
        assert_eq!(fr[(0, 0)], Complex::new(4.0, 0.0));
        assert_eq!(fr[(1, 1)], Complex::new(1.0, 0.0));
        assert_eq!(fr[(0, 1)], Complex::new(0.0, 0.0));
    }

    #[test]
    fn resolvent_singular_at_eigenvalue() {
        // A = [[0, 1], [-1, 0]] has eigenvalues ±i.
        let m = LabeledLinearModel::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            vec![
                label("o", "x1", SignalDirection::State),
                label("o", "x2", SignalDirection::State),
            ],
            vec![
                label("o", "u1", SignalDirection::Input),
                label("o", "u2", SignalDirection::Input),
            ],
            vec![
                label("o", "y1", SignalDirection::Output),
                label("o", "y2", SignalDirection::Output),
            ],
        )
        .unwrap();
        assert!(matches!(
            m.frequency_response(Complex::new(0.0, 1.0)),
            Err(ModelError::SingularResolvent { .. })
        ));
    }
}
