//! Interconnection of component models into whole-network models.
//!
//! Connection sites are typed ports: a p-port receives a pressure and emits
//! a flow, a q-port receives a flow and emits a pressure. Internal
//! connections pair one p-port with one q-port; ports facing the outside
//! world bind to an external source for their input and a sink for their
//! output. The network realization is obtained by stacking the component
//! models block-diagonally and closing the loop described by the 0-1
//! connection matrices F (internal routing), G (source routing) and H, J
//! (sink selection).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::label::{SignalDirection, SignalId, SignalKind, SignalLabel};
use crate::model::{condition_estimate, LabeledLinearModel, ModelError, SINGULARITY_COND_LIMIT};

#[derive(Debug, Error)]
pub enum ConnectError {
    #[error("duplicate signal label across components: {0}")]
    DuplicateId(String),
    #[error("connection rules violated: {}", format_violations(.0))]
    Rules(Vec<RuleViolation>),
    #[error("unknown signal {0}")]
    UnknownSignal(String),
    #[error("signal {0} matches more than one candidate")]
    AmbiguousSignal(String),
    #[error("component input {0} has neither an internal source nor an external input")]
    UnresolvedSignal(String),
    #[error("component input {0} is driven more than once")]
    MultiplyDriven(String),
    #[error("algebraic loop: I - DF is singular (condition estimate {cond:.3e})")]
    AlgebraicLoop { cond: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn format_violations(violations: &[RuleViolation]) -> String {
    violations
        .iter()
        .map(|v| format!("[{}] {}", v.rule, v.message))
        .collect::<Vec<_>>()
        .join("; ")
}

/// One violated interconnection rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleViolation {
    /// Which rule, e.g. "Rule I.i" or "Rule IV".
    pub rule: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortKind {
    /// Pressure input, flow output (left end of a pipe).
    PPort,
    /// Flow input, pressure output (right end of a pipe).
    QPort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A connection site: one pressure signal and one flow signal with opposite
/// causality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub owner: String,
    pub side: Side,
    pub kind: PortKind,
    /// The pressure signal (input on a p-port, output on a q-port).
    pub pressure: SignalId,
    /// The flow signal (output on a p-port, input on a q-port).
    pub flow: SignalId,
}

impl Port {
    /// The port's input signal.
    pub fn input(&self) -> &SignalId {
        match self.kind {
            PortKind::PPort => &self.pressure,
            PortKind::QPort => &self.flow,
        }
    }

    /// The port's output signal.
    pub fn output(&self) -> &SignalId {
        match self.kind {
            PortKind::PPort => &self.flow,
            PortKind::QPort => &self.pressure,
        }
    }
}

/// Extracts the ports of a model from its label names.
///
/// A pressure input `p_l<k>` pairs with a flow output `q_l<k>` into a
/// p-port; a flow input `q_r<k>` pairs with a pressure output `p_r<k>` into
/// a q-port. When no suffixed partner exists the bare name is tried, which
/// covers components sharing one pressure output across several ports.
/// Signals without a partner (temperatures, commands, tank flows) form no
/// port and can only bind to externals.
pub fn ports_of(model: &LabeledLinearModel) -> Vec<Port> {
    let find_output = |owner: &str, name: &str, kind: SignalKind| -> Option<SignalId> {
        model
            .outputs
            .iter()
            .find(|l| l.id.owner == owner && l.id.name == name && l.kind == kind)
            .map(|l| l.id.clone())
    };
    let mut ports = Vec::new();
    for input in &model.inputs {
        let owner = &input.id.owner;
        let name = &input.id.name;
        if input.kind == SignalKind::Pressure && name.starts_with("p_l") {
            let suffix = &name["p_l".len()..];
            let partner = find_output(owner, &format!("q_l{suffix}"), SignalKind::MassFlow)
                .or_else(|| {
                    if suffix.is_empty() {
                        None
                    } else {
                        find_output(owner, "q_l", SignalKind::MassFlow)
                    }
                });
            if let Some(flow) = partner {
                ports.push(Port {
                    owner: owner.clone(),
                    side: Side::Left,
                    kind: PortKind::PPort,
                    pressure: input.id.clone(),
                    flow,
                });
            }
        }
        if input.kind == SignalKind::MassFlow && name.starts_with("q_r") {
            let suffix = &name["q_r".len()..];
            let partner = find_output(owner, &format!("p_r{suffix}"), SignalKind::Pressure)
                .or_else(|| {
                    if suffix.is_empty() {
                        None
                    } else {
                        find_output(owner, "p_r", SignalKind::Pressure)
                    }
                });
            if let Some(pressure) = partner {
                ports.push(Port {
                    owner: owner.clone(),
                    side: Side::Right,
                    kind: PortKind::QPort,
                    pressure,
                    flow: input.id.clone(),
                });
            }
        }
    }
    ports
}

/// Declarative description of a network: internal port pairs plus ordered
/// external sources u and sinks z.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSpec {
    pub internal: Vec<(Port, Port)>,
    pub external_inputs: Vec<SignalId>,
    pub external_outputs: Vec<SignalId>,
}

/// Checks the interconnection rules against a set of component models.
/// Returns all violations found; empty means the connection plan is
/// admissible. Algebraic-loop detection is deferred to
/// [`close_interconnection`].
pub fn validate_ports(models: &[&LabeledLinearModel], spec: &ConnectionSpec) -> Vec<RuleViolation> {
    let mut violations = Vec::new();
    let all_ports: Vec<Port> = models.iter().flat_map(|m| ports_of(m)).collect();
    let find_port = |p: &Port| all_ports.iter().find(|q| *q == p);

    let input_labels: Vec<&SignalLabel> = models.iter().flat_map(|m| &m.inputs).collect();
    let output_labels: Vec<&SignalLabel> = models.iter().flat_map(|m| &m.outputs).collect();

    for (a, b) in &spec.internal {
        for port in [a, b] {
            if find_port(port).is_none() {
                violations.push(RuleViolation {
                    rule: "Rule II",
                    message: format!(
                        "({} / {}) is not a port of any component",
                        port.pressure, port.flow
                    ),
                });
            }
        }
        match (a.kind, b.kind) {
            (PortKind::PPort, PortKind::QPort) | (PortKind::QPort, PortKind::PPort) => {}
            _ => violations.push(RuleViolation {
                rule: "Rule I.i",
                message: format!(
                    "connection ({} / {}) to ({} / {}) does not pair a p-port with a q-port",
                    a.pressure, a.flow, b.pressure, b.flow
                ),
            }),
        }
    }

    for id in &spec.external_inputs {
        if !input_labels.iter().any(|l| &l.id == id) {
            violations.push(RuleViolation {
                rule: "Rule II",
                message: format!("external input {id} is not an input of any component"),
            });
        }
    }

    // Rule IV: every port appears in exactly one internal pair or is fully
    // bound to externals (input from u per Rule I.ii/iii, output to z).
    for port in &all_ports {
        let internal_count = spec
            .internal
            .iter()
            .filter(|(a, b)| a == port || b == port)
            .count();
        let input_external = spec.external_inputs.contains(port.input());
        let output_external = spec.external_outputs.contains(port.output());
        match (internal_count, input_external, output_external) {
            (1, false, false) => {}
            (0, true, true) => {}
            (0, true, false) | (0, false, true) => {
                let rule = match port.kind {
                    PortKind::PPort => "Rule I.ii",
                    PortKind::QPort => "Rule I.iii",
                };
                violations.push(RuleViolation {
                    rule,
                    message: format!(
                        "port ({} / {}) is only partially bound to externals; \
                         it needs both a source and a sink",
                        port.pressure, port.flow
                    ),
                });
            }
            (0, false, false) => violations.push(RuleViolation {
                rule: "Rule IV",
                message: format!("port ({} / {}) is not connected", port.pressure, port.flow),
            }),
            _ => violations.push(RuleViolation {
                rule: "Rule IV",
                message: format!(
                    "port ({} / {}) is connected more than once",
                    port.pressure, port.flow
                ),
            }),
        }
    }

    // Rule III inside internal pairs holds by construction (ports connect as
    // wholes); what remains is kind consistency of the declared pairs.
    for (a, b) in &spec.internal {
        let kinds_ok = |id: &SignalId, kind: SignalKind, labels: &[&SignalLabel]| {
            labels.iter().any(|l| &l.id == id && l.kind == kind)
        };
        for port in [a, b] {
            let (pressure_side, flow_side): (&[&SignalLabel], &[&SignalLabel]) = match port.kind {
                PortKind::PPort => (&input_labels, &output_labels),
                PortKind::QPort => (&output_labels, &input_labels),
            };
            if find_port(port).is_some()
                && (!kinds_ok(&port.pressure, SignalKind::Pressure, pressure_side)
                    || !kinds_ok(&port.flow, SignalKind::MassFlow, flow_side))
            {
                violations.push(RuleViolation {
                    rule: "Rule II",
                    message: format!(
                        "port ({} / {}) mixes signal kinds",
                        port.pressure, port.flow
                    ),
                });
            }
        }
    }

    violations
}

/// Block-diagonal aggregation of component models, concatenating labels in
/// component order.
pub fn stack(models: &[&LabeledLinearModel]) -> Result<LabeledLinearModel, ConnectError> {
    let n_x: usize = models.iter().map(|m| m.n_states()).sum();
    let n_w: usize = models.iter().map(|m| m.n_inputs()).sum();
    let n_y: usize = models.iter().map(|m| m.n_outputs()).sum();

    let mut a = DMatrix::zeros(n_x, n_x);
    let mut b = DMatrix::zeros(n_x, n_w);
    let mut c = DMatrix::zeros(n_y, n_x);
    let mut d = DMatrix::zeros(n_y, n_w);
    let mut states = Vec::with_capacity(n_x);
    let mut inputs = Vec::with_capacity(n_w);
    let mut outputs = Vec::with_capacity(n_y);
    let mut nominal = BTreeMap::new();

    let (mut ox, mut ow, mut oy) = (0, 0, 0);
    for m in models {
        a.view_mut((ox, ox), (m.n_states(), m.n_states()))
            .copy_from(&m.a);
        b.view_mut((ox, ow), (m.n_states(), m.n_inputs()))
            .copy_from(&m.b);
        c.view_mut((oy, ox), (m.n_outputs(), m.n_states()))
            .copy_from(&m.c);
        d.view_mut((oy, ow), (m.n_outputs(), m.n_inputs()))
            .copy_from(&m.d);
        states.extend(m.states.iter().cloned());
        inputs.extend(m.inputs.iter().cloned());
        outputs.extend(m.outputs.iter().cloned());
        for (id, value) in &m.nominal {
            nominal.insert(id.clone(), *value);
        }
        ox += m.n_states();
        ow += m.n_inputs();
        oy += m.n_outputs();
    }

    for (i, label) in states.iter().chain(&inputs).chain(&outputs).enumerate() {
        for other in states.iter().chain(&inputs).chain(&outputs).skip(i + 1) {
            if label.id == other.id && label.direction == other.direction {
                return Err(ConnectError::DuplicateId(label.id.to_string()));
            }
        }
    }

    Ok(LabeledLinearModel::new(a, b, c, d, states, inputs, outputs)?.with_nominal(nominal))
}

/// How one requested sink is realized in the closed model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkRoute {
    /// Selected directly from the stacked state vector (an H row).
    State(usize),
    /// Exposed through the closed output map (a row of the resolved C).
    Output(usize),
    /// Passed through from an external input (a J row).
    Input(usize),
}

/// The 0-1 routing matrices of a network: w = F y + G u, z = H x + J u.
/// Sinks that are outputs rather than states are recorded in `sink_routes`
/// and exposed through the closed output map instead of H.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrices {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub sink_routes: Vec<SinkRoute>,
}

/// Compiles a validated [`ConnectionSpec`] against the stacked model into
/// the routing matrices.
pub fn build_connection_matrices(
    spec: &ConnectionSpec,
    stacked: &LabeledLinearModel,
) -> Result<ConnectionMatrices, ConnectError> {
    let n_w = stacked.n_inputs();
    let n_y = stacked.n_outputs();
    let n_u = spec.external_inputs.len();
    let n_z = spec.external_outputs.len();

    let w_index = |id: &SignalId| {
        stacked
            .input_index(id)
            .ok_or_else(|| ConnectError::UnknownSignal(id.to_string()))
    };
    let y_index = |id: &SignalId| {
        stacked
            .output_index(id)
            .ok_or_else(|| ConnectError::UnknownSignal(id.to_string()))
    };

    let mut f = DMatrix::zeros(n_w, n_y);
    let mut g = DMatrix::zeros(n_w, n_u);

    for (a, b) in &spec.internal {
        let (p_port, q_port) = match (a.kind, b.kind) {
            (PortKind::PPort, PortKind::QPort) => (a, b),
            (PortKind::QPort, PortKind::PPort) => (b, a),
            _ => {
                return Err(ConnectError::Rules(vec![RuleViolation {
                    rule: "Rule I.i",
                    message: "internal pair does not combine a p-port and a q-port".to_string(),
                }]))
            }
        };
        // p-port pressure input <- q-port pressure output
        f[(w_index(&p_port.pressure)?, y_index(&q_port.pressure)?)] = 1.0;
        // q-port flow input <- p-port flow output
        f[(w_index(&q_port.flow)?, y_index(&p_port.flow)?)] = 1.0;
    }

    for (col, id) in spec.external_inputs.iter().enumerate() {
        g[(w_index(id)?, col)] = 1.0;
    }

    for i in 0..n_w {
        let drives = f.row(i).iter().filter(|x| **x != 0.0).count()
            + g.row(i).iter().filter(|x| **x != 0.0).count();
        let id = &stacked.inputs[i].id;
        if drives == 0 {
            return Err(ConnectError::UnresolvedSignal(id.to_string()));
        }
        if drives > 1 {
            return Err(ConnectError::MultiplyDriven(id.to_string()));
        }
    }

    let mut h = DMatrix::zeros(n_z, stacked.n_states());
    let mut j = DMatrix::zeros(n_z, n_u);
    let mut sink_routes = Vec::with_capacity(n_z);
    for (row, id) in spec.external_outputs.iter().enumerate() {
        if let Some(i) = stacked.state_index(id) {
            h[(row, i)] = 1.0;
            sink_routes.push(SinkRoute::State(i));
        } else if let Some(k) = stacked.output_index(id) {
            sink_routes.push(SinkRoute::Output(k));
        } else if let Some(col) = spec.external_inputs.iter().position(|u| u == id) {
            j[(row, col)] = 1.0;
            sink_routes.push(SinkRoute::Input(col));
        } else if let Some(w_idx) = stacked.input_index(id) {
            // An internally driven component input: expose its source output.
            let source = (0..n_y).find(|&k| f[(w_idx, k)] != 0.0);
            match source {
                Some(k) => sink_routes.push(SinkRoute::Output(k)),
                None => return Err(ConnectError::UnknownSignal(id.to_string())),
            }
        } else {
            return Err(ConnectError::UnknownSignal(id.to_string()));
        }
    }

    Ok(ConnectionMatrices {
        f,
        g,
        h,
        j,
        sink_routes,
    })
}

/// Closes the interconnection w = F y + G u around the stacked model and
/// exposes the requested sinks:
///
/// ```text
/// Ā = A + B F (I − D F)⁻¹ C        B̄ = B [I + F (I − D F)⁻¹ D] G
/// C̄ = (I − D F)⁻¹ C               D̄ = (I − D F)⁻¹ D G
/// ```
///
/// Fails with an algebraic-loop error when I − DF is singular to working
/// precision.
pub fn close_interconnection(
    stacked: &LabeledLinearModel,
    matrices: &ConnectionMatrices,
    external_inputs: &[SignalId],
    external_outputs: &[SignalId],
) -> Result<LabeledLinearModel, ConnectError> {
    let n_y = stacked.n_outputs();
    let df = &stacked.d * &matrices.f;
    let mut i_df = DMatrix::identity(n_y, n_y);
    i_df -= df;

    match condition_estimate(&i_df) {
        Some(cond) if cond < SINGULARITY_COND_LIMIT => {}
        Some(cond) => return Err(ConnectError::AlgebraicLoop { cond }),
        None => {
            return Err(ConnectError::AlgebraicLoop {
                cond: f64::INFINITY,
            })
        }
    }

    let lu = i_df.lu();
    let resolved_c = lu.solve(&stacked.c).ok_or(ConnectError::AlgebraicLoop {
        cond: f64::INFINITY,
    })?;
    let resolved_d = lu.solve(&stacked.d).ok_or(ConnectError::AlgebraicLoop {
        cond: f64::INFINITY,
    })?;

    let bf = &stacked.b * &matrices.f;
    let a_closed = &stacked.a + &bf * &resolved_c;
    let b_closed = (&stacked.b + &bf * &resolved_d) * &matrices.g;
    let c_closed = &resolved_c;
    let d_closed = &resolved_d * &matrices.g;

    let n_z = matrices.sink_routes.len();
    let n_u = matrices.g.ncols();
    let mut c_z = DMatrix::zeros(n_z, stacked.n_states());
    let mut d_z = DMatrix::zeros(n_z, n_u);
    for (row, route) in matrices.sink_routes.iter().enumerate() {
        match route {
            SinkRoute::State(i) => c_z[(row, *i)] = 1.0,
            SinkRoute::Output(k) => {
                c_z.row_mut(row).copy_from(&c_closed.row(*k));
                d_z.row_mut(row).copy_from(&d_closed.row(*k));
            }
            SinkRoute::Input(col) => d_z[(row, *col)] = 1.0,
        }
    }

    let find_label = |id: &SignalId| -> Option<SignalLabel> {
        stacked
            .states
            .iter()
            .chain(&stacked.inputs)
            .chain(&stacked.outputs)
            .find(|l| &l.id == id)
            .cloned()
    };
    let inputs: Vec<SignalLabel> = external_inputs
        .iter()
        .map(|id| {
            find_label(id)
                .map(|l| l.with_direction(SignalDirection::Input))
                .ok_or_else(|| ConnectError::UnknownSignal(id.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let outputs: Vec<SignalLabel> = external_outputs
        .iter()
        .map(|id| {
            find_label(id)
                .map(|l| l.with_direction(SignalDirection::Output))
                .ok_or_else(|| ConnectError::UnknownSignal(id.to_string()))
        })
        .collect::<Result<_, _>>()?;

    let model = LabeledLinearModel::new(
        a_closed,
        b_closed,
        c_z,
        d_z,
        stacked.states.clone(),
        inputs,
        outputs,
    )?;
    // Keep only nominal entries whose signals survive in the closed model.
    let nominal: BTreeMap<SignalId, f64> = stacked
        .nominal
        .iter()
        .filter(|(id, _)| {
            model
                .states
                .iter()
                .chain(&model.inputs)
                .chain(&model.outputs)
                .any(|l| &&l.id == id)
        })
        .map(|(id, v)| (id.clone(), *v))
        .collect();
    Ok(model.with_nominal(nominal))
}

/// Builds and closes a network from a [`ConnectionSpec`] in one step.
pub fn connect(
    models: &[&LabeledLinearModel],
    spec: &ConnectionSpec,
) -> Result<LabeledLinearModel, ConnectError> {
    let violations = validate_ports(models, spec);
    if !violations.is_empty() {
        return Err(ConnectError::Rules(violations));
    }
    let stacked = stack(models)?;
    let matrices = build_connection_matrices(spec, &stacked)?;
    close_interconnection(
        &stacked,
        &matrices,
        &spec.external_inputs,
        &spec.external_outputs,
    )
}

/// Name-based connection: signal-level bindings "output drives input" are
/// grouped into port pairs, compiled to a [`ConnectionSpec`] and closed via
/// the same matrix pathway.
pub fn connect_by_name(
    models: &[&LabeledLinearModel],
    bindings: &[(SignalId, SignalId)],
    inputs: &[SignalId],
    outputs: &[SignalId],
) -> Result<LabeledLinearModel, ConnectError> {
    let spec = compile_bindings(models, bindings, inputs, outputs)?;
    connect(models, &spec)
}

/// Resolves signal-level bindings into the port pairs of a
/// [`ConnectionSpec`]. Every binding must connect an output to an input of
/// matching kind, and the two bindings of each port pair must both be
/// present.
pub fn compile_bindings(
    models: &[&LabeledLinearModel],
    bindings: &[(SignalId, SignalId)],
    inputs: &[SignalId],
    outputs: &[SignalId],
) -> Result<ConnectionSpec, ConnectError> {
    let find_unique =
        |id: &SignalId, direction: SignalDirection| -> Result<SignalLabel, ConnectError> {
            let matches: Vec<&SignalLabel> = models
                .iter()
                .flat_map(|m| match direction {
                    SignalDirection::Input => m.inputs.iter(),
                    SignalDirection::Output => m.outputs.iter(),
                    SignalDirection::State => m.states.iter(),
                })
                .filter(|l| &l.id == id)
                .collect();
            match matches.len() {
                0 => Err(ConnectError::UnknownSignal(id.to_string())),
                1 => Ok(matches[0].clone()),
                _ => Err(ConnectError::AmbiguousSignal(id.to_string())),
            }
        };

    let all_ports: Vec<Port> = models.iter().flat_map(|m| ports_of(m)).collect();
    let port_by_input = |id: &SignalId| all_ports.iter().find(|p| p.input() == id);
    let port_by_output = |id: &SignalId| all_ports.iter().find(|p| p.output() == id);

    let mut pairs: Vec<(Port, Port, [bool; 2])> = Vec::new();
    for (from, to) in bindings {
        let source = find_unique(from, SignalDirection::Output)?;
        let target = find_unique(to, SignalDirection::Input)?;
        if source.kind != target.kind {
            return Err(ConnectError::Rules(vec![RuleViolation {
                rule: "Rule II",
                message: format!(
                    "binding {from} -> {to} connects a {:?} output to a {:?} input",
                    source.kind, target.kind
                ),
            }]));
        }
        let (Some(src_port), Some(dst_port)) = (port_by_output(from), port_by_input(to)) else {
            return Err(ConnectError::Rules(vec![RuleViolation {
                rule: "Rule III",
                message: format!("binding {from} -> {to} does not connect two ports"),
            }]));
        };
        // Which half of the (p-port, q-port) pair is this binding?
        let (p_port, q_port, half) = match (dst_port.kind, src_port.kind) {
            // pressure into a p-port from a q-port
            (PortKind::PPort, PortKind::QPort) if target.kind == SignalKind::Pressure => {
                (dst_port, src_port, 0)
            }
            // flow into a q-port from a p-port
            (PortKind::QPort, PortKind::PPort) if target.kind == SignalKind::MassFlow => {
                (src_port, dst_port, 1)
            }
            _ => {
                return Err(ConnectError::Rules(vec![RuleViolation {
                    rule: "Rule I.i",
                    message: format!("binding {from} -> {to} does not pair a p-port with a q-port"),
                }]))
            }
        };
        if let Some(entry) = pairs
            .iter_mut()
            .find(|(p, q, _)| p == p_port && q == q_port)
        {
            entry.2[half] = true;
        } else {
            let mut seen = [false; 2];
            seen[half] = true;
            pairs.push((p_port.clone(), q_port.clone(), seen));
        }
    }

    let mut internal = Vec::with_capacity(pairs.len());
    let mut violations = Vec::new();
    for (p, q, seen) in pairs {
        if seen == [true, true] {
            internal.push((p, q));
        } else {
            violations.push(RuleViolation {
                rule: "Rule III",
                message: format!(
                    "ports ({} / {}) and ({} / {}) are only half connected; \
                     both the pressure and the flow binding are required",
                    p.pressure, p.flow, q.pressure, q.flow
                ),
            });
        }
    }
    if !violations.is_empty() {
        return Err(ConnectError::Rules(violations));
    }

    Ok(ConnectionSpec {
        internal,
        external_inputs: inputs.to_vec(),
        external_outputs: outputs.to_vec(),
    })
}
