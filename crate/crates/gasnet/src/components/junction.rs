//! Branching, joining and star pipe intersections.
//!
//! All three geometries impose pressure continuity and flow balance at the
//! intersection. For joining flows the internal right-end flows q_{k,r} are
//! not directly available as states; they are eliminated through the
//! closed-form weights of [`internal_flow_weights`], which expresses each
//! q_{k,r} as a combination of the left-end flow states.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::pipe::{pipe_coefficients, PipeCoefficients, PipeParams};
use super::ComponentError;
use crate::label::{SignalDirection, SignalId, SignalKind, SignalLabel};
use crate::model::LabeledLinearModel;

/// Relative threshold below which the junction weight denominator is treated
/// as a degenerate cancellation.
const DEGENERACY_REL: f64 = 1e-12;

/// Weight matrix expressing the internal flows of n joining pipes.
///
/// Row k gives the coefficients of q_{k,r} over (q_{0,l}, q_{1,l}, ..., q_{n,l}),
/// where pipe 0 is the downstream pipe and 1..n are the joining pipes:
///
/// ```text
/// q_{k,r} = (P_k/S) q_{0,l} + ((S - P_k)/S) q_{k,l} - (P_k/S) sum_{i != k} q_{i,l}
/// ```
///
/// with P_k the product of all pressure coefficients except the k-th and
/// S = sum of all P_j. Requires n >= 2 and nonzero coefficients.
pub fn internal_flow_weights(alphas: &[f64]) -> Result<DMatrix<f64>, ComponentError> {
    if alphas.len() < 2 {
        return Err(ComponentError::InvalidParams(format!(
            "a joint needs at least 2 joining pipes, got {}",
            alphas.len()
        )));
    }
    junction_weights(alphas)
}

/// Same closed form as [`internal_flow_weights`] but also valid for a single
/// joining pipe (empty products are 1), which the star junction needs.
pub(crate) fn junction_weights(alphas: &[f64]) -> Result<DMatrix<f64>, ComponentError> {
    let n = alphas.len();
    if n == 0 {
        return Err(ComponentError::InvalidParams(
            "junction with no joining pipes".to_string(),
        ));
    }
    if let Some(a) = alphas.iter().find(|a| **a == 0.0 || !a.is_finite()) {
        return Err(ComponentError::InvalidParams(format!(
            "junction pressure coefficients must be finite and nonzero, got {a}"
        )));
    }

    // The weights are invariant under a common scaling of the coefficients,
    // so normalize by the largest magnitude to keep the products tame.
    let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let scaled: Vec<f64> = alphas.iter().map(|a| a / scale).collect();

    let products: Vec<f64> = (0..n)
        .map(|k| {
            scaled
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k)
                .map(|(_, a)| a)
                .product()
        })
        .collect();
    let denom: f64 = products.iter().sum();
    let max_product = products.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    if denom.abs() <= DEGENERACY_REL * max_product.max(f64::MIN_POSITIVE) {
        return Err(ComponentError::DegenerateJunction);
    }

    let mut w = DMatrix::zeros(n, n + 1);
    for k in 0..n {
        let share = products[k] / denom;
        w[(k, 0)] = share;
        for i in 1..=n {
            w[(k, i)] = if i == k + 1 { 1.0 - share } else { -share };
        }
    }
    Ok(w)
}

fn coefficients_for(
    pipes: &[(&str, &PipeParams)],
) -> Result<Vec<PipeCoefficients>, ComponentError> {
    let gas = &pipes[0].1.gas;
    for (id, p) in pipes {
        if &p.gas != gas {
            return Err(ComponentError::InvalidParams(format!(
                "pipe {id} uses different gas properties than the first pipe"
            )));
        }
    }
    pipes.iter().map(|(_, p)| pipe_coefficients(p)).collect()
}

/// Per-pipe boundary nominals, restricted to signals the junction model
/// actually carries (eliminated internal pressures and flows drop out).
fn merge_nominals(
    pipes: &[(&str, &PipeParams)],
    model: &LabeledLinearModel,
) -> BTreeMap<SignalId, f64> {
    let mut nominal = BTreeMap::new();
    for (id, p) in pipes {
        nominal.insert(SignalId::new(*id, "p_l"), p.nominal_p_left);
        nominal.insert(SignalId::new(*id, "q_l"), p.nominal_q);
        nominal.insert(SignalId::new(*id, "q_r"), p.nominal_q);
    }
    nominal.retain(|id, _| {
        model
            .states
            .iter()
            .chain(&model.inputs)
            .chain(&model.outputs)
            .any(|l| &l.id == id)
    });
    nominal
}

/// One pipe splitting into two or more downstream branches.
///
/// State ordering (p_{0,r}, p_{1,r}, ..., p_{m,r}, q_{0,l}, ..., q_{m,l})
/// with pipe 0 the trunk; u = (p_{0,l}, q_{1,r}, ..., q_{m,r});
/// y = (p_{1,r}, ..., p_{m,r}, q_{0,l}).
pub fn branch(
    trunk: (&str, &PipeParams),
    branches: &[(&str, &PipeParams)],
) -> Result<LabeledLinearModel, ComponentError> {
    let m = branches.len();
    if m < 2 {
        return Err(ComponentError::InvalidParams(format!(
            "a branch needs at least 2 downstream pipes, got {m}"
        )));
    }
    let mut pipes = vec![trunk];
    pipes.extend_from_slice(branches);
    let k = coefficients_for(&pipes)?;

    let n_x = 2 * (m + 1);
    let n_u = m + 1;
    let mut a = DMatrix::zeros(n_x, n_x);
    let mut b = DMatrix::zeros(n_x, n_u);

    let p_row = |i: usize| i; // p_{i,r} state index
    let q_row = |i: usize| m + 1 + i; // q_{i,l} state index

    // Trunk pressure: right-end flow is the sum of branch left-end flows.
    a[(p_row(0), q_row(0))] = -k[0].alpha;
    for i in 1..=m {
        a[(p_row(0), q_row(i))] = k[0].alpha;
    }
    // Branch pressures: right-end flows are external inputs.
    for i in 1..=m {
        a[(p_row(i), q_row(i))] = -k[i].alpha;
        b[(p_row(i), i)] = k[i].alpha;
    }
    // Trunk flow: left pressure is the external input.
    a[(q_row(0), p_row(0))] = k[0].beta_pr;
    a[(q_row(0), q_row(0))] = k[0].gamma;
    b[(q_row(0), 0)] = k[0].beta_pl;
    // Branch flows: left pressure is the trunk right-end pressure state.
    for i in 1..=m {
        a[(q_row(i), p_row(0))] = k[i].beta_pl;
        a[(q_row(i), p_row(i))] = k[i].beta_pr;
        a[(q_row(i), q_row(i))] = k[i].gamma;
    }

    let mut c = DMatrix::zeros(m + 1, n_x);
    for i in 1..=m {
        c[(i - 1, p_row(i))] = 1.0;
    }
    c[(m, q_row(0))] = 1.0;
    let d = DMatrix::zeros(m + 1, n_u);

    let mut states = Vec::with_capacity(n_x);
    for (id, _) in &pipes {
        states.push(SignalLabel::new(
            *id,
            "p_r",
            SignalKind::Pressure,
            SignalDirection::State,
        ));
    }
    for (id, _) in &pipes {
        states.push(SignalLabel::new(
            *id,
            "q_l",
            SignalKind::MassFlow,
            SignalDirection::State,
        ));
    }
    let mut inputs = vec![SignalLabel::new(
        trunk.0,
        "p_l",
        SignalKind::Pressure,
        SignalDirection::Input,
    )];
    for (id, _) in branches {
        inputs.push(SignalLabel::new(
            *id,
            "q_r",
            SignalKind::MassFlow,
            SignalDirection::Input,
        ));
    }
    let mut outputs: Vec<SignalLabel> = branches
        .iter()
        .map(|(id, _)| SignalLabel::new(*id, "p_r", SignalKind::Pressure, SignalDirection::Output))
        .collect();
    outputs.push(SignalLabel::new(
        trunk.0,
        "q_l",
        SignalKind::MassFlow,
        SignalDirection::Output,
    ));

    let model = LabeledLinearModel::new(a, b, c, d, states, inputs, outputs)?;
    let nominal = merge_nominals(&pipes, &model);
    Ok(model.with_nominal(nominal))
}

/// Two or more pipes merging into a single downstream pipe.
///
/// State ordering (p_{0,r}, p_{1,r}, q_{0,l}, q_{1,l}, ..., q_{n,l}) with
/// pipe 0 the downstream pipe; p_{1,r} doubles as the shared junction
/// pressure since all joining right-end pressures coincide.
/// u = (p_{1,l}, ..., p_{n,l}, q_{0,r}); y = (p_{0,r}, q_{1,l}, ..., q_{n,l}).
pub fn joint(
    inflows: &[(&str, &PipeParams)],
    outflow: (&str, &PipeParams),
) -> Result<LabeledLinearModel, ComponentError> {
    let n = inflows.len();
    if n < 2 {
        return Err(ComponentError::InvalidParams(format!(
            "a joint needs at least 2 joining pipes, got {n}"
        )));
    }
    let mut pipes = vec![outflow];
    pipes.extend_from_slice(inflows);
    let k = coefficients_for(&pipes)?;

    let inflow_alphas: Vec<f64> = (1..=n).map(|i| k[i].alpha).collect();
    let weights = internal_flow_weights(&inflow_alphas)?;

    let n_x = n + 3;
    let n_u = n + 1;
    let mut a = DMatrix::zeros(n_x, n_x);
    let mut b = DMatrix::zeros(n_x, n_u);

    let q_row = |i: usize| 2 + i; // q_{i,l} state index, i = 0..n

    // Downstream pressure node.
    a[(0, q_row(0))] = -k[0].alpha;
    b[(0, n)] = k[0].alpha;
    // Junction pressure node: alpha_1 (q_{1,r} - q_{1,l}) with q_{1,r}
    // eliminated by the first weight row over (q_{0,l}, q_{1,l}, ..., q_{n,l}).
    for i in 0..=n {
        let mut w = weights[(0, i)];
        if i == 1 {
            w -= 1.0;
        }
        a[(1, q_row(i))] = k[1].alpha * w;
    }
    // Downstream flow node: its left pressure is the junction pressure state.
    a[(q_row(0), 0)] = k[0].beta_pr;
    a[(q_row(0), 1)] = k[0].beta_pl;
    a[(q_row(0), q_row(0))] = k[0].gamma;
    // Joining flow nodes: all right pressures equal the junction pressure.
    for i in 1..=n {
        a[(q_row(i), 1)] = k[i].beta_pr;
        a[(q_row(i), q_row(i))] = k[i].gamma;
        b[(q_row(i), i - 1)] = k[i].beta_pl;
    }

    let mut c = DMatrix::zeros(n + 1, n_x);
    c[(0, 0)] = 1.0;
    for i in 1..=n {
        c[(i, q_row(i))] = 1.0;
    }
    let d = DMatrix::zeros(n + 1, n_u);

    let mut states = vec![
        SignalLabel::new(
            outflow.0,
            "p_r",
            SignalKind::Pressure,
            SignalDirection::State,
        ),
        SignalLabel::new(
            inflows[0].0,
            "p_r",
            SignalKind::Pressure,
            SignalDirection::State,
        ),
        SignalLabel::new(
            outflow.0,
            "q_l",
            SignalKind::MassFlow,
            SignalDirection::State,
        ),
    ];
    for (id, _) in inflows {
        states.push(SignalLabel::new(
            *id,
            "q_l",
            SignalKind::MassFlow,
            SignalDirection::State,
        ));
    }
    let mut inputs: Vec<SignalLabel> = inflows
        .iter()
        .map(|(id, _)| SignalLabel::new(*id, "p_l", SignalKind::Pressure, SignalDirection::Input))
        .collect();
    inputs.push(SignalLabel::new(
        outflow.0,
        "q_r",
        SignalKind::MassFlow,
        SignalDirection::Input,
    ));
    let mut outputs = vec![SignalLabel::new(
        outflow.0,
        "p_r",
        SignalKind::Pressure,
        SignalDirection::Output,
    )];
    for (id, _) in inflows {
        outputs.push(SignalLabel::new(
            *id,
            "q_l",
            SignalKind::MassFlow,
            SignalDirection::Output,
        ));
    }

    let model = LabeledLinearModel::new(a, b, c, d, states, inputs, outputs)?;
    let nominal = merge_nominals(&pipes, &model);
    Ok(model.with_nominal(nominal))
}

/// General star junction: n joining pipes feeding m outgoing pipes through a
/// single intersection.
///
/// State ordering (p_{1,r}, p_{n+1,r}, ..., p_{n+m,r}, q_{1,l}, ..., q_{n+m,l})
/// where p_{1,r} is the shared junction pressure;
/// u = (p_{1,l}, ..., p_{n,l}, q_{n+1,r}, ..., q_{n+m,r});
/// y = (p_{n+1,r}, ..., p_{n+m,r}, q_{1,l}, ..., q_{n,l}).
///
/// With a single outgoing pipe this reduces to [`joint`]; with a single
/// joining pipe it reduces to [`branch`].
pub fn star_junction(
    inflows: &[(&str, &PipeParams)],
    outflows: &[(&str, &PipeParams)],
) -> Result<LabeledLinearModel, ComponentError> {
    let n = inflows.len();
    let m = outflows.len();
    if n < 1 || m < 1 || n + m < 3 {
        return Err(ComponentError::InvalidParams(format!(
            "a star junction needs n >= 1, m >= 1 and n + m >= 3, got n = {n}, m = {m}"
        )));
    }
    let mut pipes: Vec<(&str, &PipeParams)> = inflows.to_vec();
    pipes.extend_from_slice(outflows);
    let k = coefficients_for(&pipes)?;

    let inflow_alphas: Vec<f64> = (0..n).map(|i| k[i].alpha).collect();
    // The downstream flow of the virtual trunk is the sum of the outgoing
    // left-end flows, so the weight row applies with that substitution.
    let weights = junction_weights(&inflow_alphas)?;

    let n_x = n + 2 * m + 1;
    let n_u = n + m;
    let n_y = n + m;
    let mut a = DMatrix::zeros(n_x, n_x);
    let mut b = DMatrix::zeros(n_x, n_u);

    let out_p_row = |j: usize| 1 + j; // p_{n+1+j,r}, j = 0..m
    let in_q_row = |i: usize| 1 + m + i; // q_{1+i,l}, i = 0..n
    let out_q_row = |j: usize| 1 + m + n + j; // q_{n+1+j,l}, j = 0..m

    // Junction pressure: alpha_1 (q_{1,r} - q_{1,l}) with q_{1,r} from the
    // first weight row, q_{0,l} replaced by the summed outgoing flows.
    for i in 0..n {
        let mut w = weights[(0, 1 + i)];
        if i == 0 {
            w -= 1.0;
        }
        a[(0, in_q_row(i))] = k[0].alpha * w;
    }
    for j in 0..m {
        a[(0, out_q_row(j))] = k[0].alpha * weights[(0, 0)];
    }
    // Outgoing pressure nodes.
    for j in 0..m {
        a[(out_p_row(j), out_q_row(j))] = -k[n + j].alpha;
        b[(out_p_row(j), n + j)] = k[n + j].alpha;
    }
    // Joining flow nodes: right pressures all equal the junction pressure.
    for i in 0..n {
        a[(in_q_row(i), 0)] = k[i].beta_pr;
        a[(in_q_row(i), in_q_row(i))] = k[i].gamma;
        b[(in_q_row(i), i)] = k[i].beta_pl;
    }
    // Outgoing flow nodes: left pressures all equal the junction pressure.
    for j in 0..m {
        a[(out_q_row(j), 0)] = k[n + j].beta_pl;
        a[(out_q_row(j), out_p_row(j))] = k[n + j].beta_pr;
        a[(out_q_row(j), out_q_row(j))] = k[n + j].gamma;
    }

    let mut c = DMatrix::zeros(n_y, n_x);
    for j in 0..m {
        c[(j, out_p_row(j))] = 1.0;
    }
    for i in 0..n {
        c[(m + i, in_q_row(i))] = 1.0;
    }
    let d = DMatrix::zeros(n_y, n_u);

    let mut states = vec![SignalLabel::new(
        inflows[0].0,
        "p_r",
        SignalKind::Pressure,
        SignalDirection::State,
    )];
    for (id, _) in outflows {
        states.push(SignalLabel::new(
            *id,
            "p_r",
            SignalKind::Pressure,
            SignalDirection::State,
        ));
    }
    for (id, _) in &pipes {
        states.push(SignalLabel::new(
            *id,
            "q_l",
            SignalKind::MassFlow,
            SignalDirection::State,
        ));
    }
    let mut inputs: Vec<SignalLabel> = inflows
        .iter()
        .map(|(id, _)| SignalLabel::new(*id, "p_l", SignalKind::Pressure, SignalDirection::Input))
        .collect();
    for (id, _) in outflows {
        inputs.push(SignalLabel::new(
            *id,
            "q_r",
            SignalKind::MassFlow,
            SignalDirection::Input,
        ));
    }
    let mut outputs: Vec<SignalLabel> = outflows
        .iter()
        .map(|(id, _)| SignalLabel::new(*id, "p_r", SignalKind::Pressure, SignalDirection::Output))
        .collect();
    for (id, _) in inflows {
        outputs.push(SignalLabel::new(
            *id,
            "q_l",
            SignalKind::MassFlow,
            SignalDirection::Output,
        ));
    }

    let model = LabeledLinearModel::new(a, b, c, d, states, inputs, outputs)?;
    let nominal = merge_nominals(&pipes, &model);
    Ok(model.with_nominal(nominal))
}
