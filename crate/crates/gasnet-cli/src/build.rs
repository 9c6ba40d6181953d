//! Construction of component models and the closed network from a parsed
//! network file.

use std::collections::BTreeMap;

use gasnet::components::{
    branch, dynamic_valve, isothermal_tank, joint, single_pipe, star_junction, static_compressor,
    static_valve, ComponentError, OrificeParams, PipeParams, TankParams,
};
use gasnet::gas::GasError;
use gasnet::interconnect::{
    build_connection_matrices, close_interconnection, compile_bindings, connect_by_name, stack,
    validate_ports, ConnectError, ConnectionMatrices, ConnectionSpec,
};
use gasnet::model::LabeledLinearModel;
use gasnet::GasProperties;
use thiserror::Error;

use crate::format::{ComponentDecl, NetworkFile};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("gas block: {0}")]
    Gas(#[from] GasError),
    #[error("component `{id}`: {source}")]
    Component { id: String, source: ComponentError },
    #[error("pipe `{pipe}` is referenced by both `{first}` and `{second}`")]
    PipeReferencedTwice {
        pipe: String,
        first: String,
        second: String,
    },
    #[error("junction `{junction}` references `{pipe}`, which is not a pipe component")]
    NotAPipe { junction: String, pipe: String },
    #[error(transparent)]
    Connect(#[from] ConnectError),
}

/// The constructed network: component models in stacking order plus the
/// closed realizations of both interconnection pathways.
pub struct BuiltNetwork {
    pub models: Vec<LabeledLinearModel>,
    pub spec: ConnectionSpec,
    pub stacked: LabeledLinearModel,
    pub matrices: ConnectionMatrices,
    /// Closed via explicit connection matrices.
    pub closed: LabeledLinearModel,
    /// Closed via the name-based connect facility.
    pub closed_by_name: LabeledLinearModel,
}

pub fn build_network(file: &NetworkFile) -> Result<BuiltNetwork, BuildError> {
    let gas = GasProperties::new(
        file.gas.r_s,
        file.gas.t_0,
        file.gas.z_0,
        file.gas.c_p,
        file.gas.c_v,
        file.gas.g,
    )?;

    // Pipes referenced by a junction become part of that junction's model.
    let mut pipe_params: BTreeMap<&str, PipeParams> = BTreeMap::new();
    for decl in &file.components {
        if let ComponentDecl::Pipe {
            id,
            area,
            length,
            diameter,
            lambda,
            elevation,
            nominal_p_left,
            nominal_q,
        } = decl
        {
            pipe_params.insert(
                id,
                PipeParams {
                    area: *area,
                    length: *length,
                    diameter: *diameter,
                    lambda: *lambda,
                    elevation: *elevation,
                    gas: gas.clone(),
                    nominal_p_left: *nominal_p_left,
                    nominal_q: *nominal_q,
                },
            );
        }
    }
    let mut absorbed: BTreeMap<&str, &str> = BTreeMap::new();
    for decl in &file.components {
        for pipe in decl.referenced_pipes() {
            if !pipe_params.contains_key(pipe) {
                return Err(BuildError::NotAPipe {
                    junction: decl.id().to_string(),
                    pipe: pipe.to_string(),
                });
            }
            if let Some(first) = absorbed.insert(pipe, decl.id()) {
                return Err(BuildError::PipeReferencedTwice {
                    pipe: pipe.to_string(),
                    first: first.to_string(),
                    second: decl.id().to_string(),
                });
            }
        }
    }

    let component_err = |id: &str| {
        let id = id.to_string();
        move |source: ComponentError| BuildError::Component { id, source }
    };

    let mut models = Vec::new();
    for decl in &file.components {
        let model = match decl {
            ComponentDecl::Pipe { id, .. } => {
                if absorbed.contains_key(id.as_str()) {
                    continue;
                }
                single_pipe(id, &pipe_params[id.as_str()]).map_err(component_err(id))?
            }
            ComponentDecl::StaticValve { id, gain } => {
                static_valve(id, *gain).map_err(component_err(id))?
            }
            ComponentDecl::StaticCompressor { id, gain } => {
                static_compressor(id, *gain).map_err(component_err(id))?
            }
            ComponentDecl::DynamicValve {
                id,
                c_d,
                d0,
                d1,
                a_o_max,
                tau,
                nominal_a_o,
                nominal_p_left,
                nominal_p_right,
            } => {
                let params = OrificeParams {
                    c_d: *c_d,
                    d0: *d0,
                    d1: *d1,
                    gas: gas.clone(),
                    a_o_max: *a_o_max,
                    tau: *tau,
                };
                dynamic_valve(id, &params, *nominal_a_o, *nominal_p_left, *nominal_p_right)
                    .map_err(component_err(id))?
            }
            ComponentDecl::IsothermalTank {
                id,
                volume,
                inlets,
                outlets,
                nominal_p,
                nominal_t,
            } => {
                let params = TankParams {
                    volume: *volume,
                    gas: gas.clone(),
                    n_inlets: *inlets,
                    n_outlets: *outlets,
                    nominal_p: *nominal_p,
                    nominal_t: *nominal_t,
                };
                isothermal_tank(id, &params).map_err(component_err(id))?
            }
            ComponentDecl::Joint {
                id,
                inflows,
                outflow,
            } => {
                let named: Vec<(&str, &PipeParams)> = inflows
                    .iter()
                    .map(|p| (p.as_str(), &pipe_params[p.as_str()]))
                    .collect();
                joint(&named, (outflow, &pipe_params[outflow.as_str()]))
                    .map_err(component_err(id))?
            }
            ComponentDecl::Branch {
                id,
                trunk,
                branches,
            } => {
                let named: Vec<(&str, &PipeParams)> = branches
                    .iter()
                    .map(|p| (p.as_str(), &pipe_params[p.as_str()]))
                    .collect();
                branch((trunk, &pipe_params[trunk.as_str()]), &named).map_err(component_err(id))?
            }
            ComponentDecl::Star {
                id,
                inflows,
                outflows,
            } => {
                let named_in: Vec<(&str, &PipeParams)> = inflows
                    .iter()
                    .map(|p| (p.as_str(), &pipe_params[p.as_str()]))
                    .collect();
                let named_out: Vec<(&str, &PipeParams)> = outflows
                    .iter()
                    .map(|p| (p.as_str(), &pipe_params[p.as_str()]))
                    .collect();
                star_junction(&named_in, &named_out).map_err(component_err(id))?
            }
        };
        models.push(model);
    }

    let refs: Vec<&LabeledLinearModel> = models.iter().collect();
    let spec = compile_bindings(&refs, &file.connections, &file.inputs, &file.outputs)?;
    let violations = validate_ports(&refs, &spec);
    if !violations.is_empty() {
        return Err(ConnectError::Rules(violations).into());
    }
    let stacked = stack(&refs)?;
    let matrices = build_connection_matrices(&spec, &stacked)?;
    let closed = close_interconnection(
        &stacked,
        &matrices,
        &spec.external_inputs,
        &spec.external_outputs,
    )?;
    let closed_by_name = connect_by_name(&refs, &file.connections, &file.inputs, &file.outputs)?;

    Ok(BuiltNetwork {
        models,
        spec,
        stacked,
        matrices,
        closed,
        closed_by_name,
    })
}
