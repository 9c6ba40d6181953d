//! Shared component fixtures and network builders for the integration tests.

#![allow(dead_code)]

use gasnet::components::{branch, joint, single_pipe, static_compressor, static_valve, PipeParams};
use gasnet::interconnect::{ports_of, ConnectionSpec, Port, PortKind};
use gasnet::label::SignalId;
use gasnet::model::LabeledLinearModel;
use gasnet::GasProperties;

pub fn gas() -> GasProperties {
    GasProperties::new(518.3, 293.15, 0.9, 2225.3, 1707.0, 9.81).unwrap()
}

pub fn pipe(length: f64, p_left: f64, q: f64) -> PipeParams {
    PipeParams {
        area: 0.196,
        length,
        diameter: 0.5,
        lambda: 0.011,
        elevation: 0.0,
        gas: gas(),
        nominal_p_left: p_left,
        nominal_q: q,
    }
}

/// Looks up a port by owner and kind in a model's port list.
pub fn port_of(model: &LabeledLinearModel, owner: &str, kind: PortKind) -> Port {
    ports_of(model)
        .into_iter()
        .find(|p| p.owner == owner && p.kind == kind)
        .unwrap_or_else(|| panic!("no {kind:?} port owned by {owner}"))
}

pub struct GasLoop {
    pub models: Vec<LabeledLinearModel>,
    pub spec: ConnectionSpec,
    pub bindings: Vec<(SignalId, SignalId)>,
}

/// The closed vented loop: gas enters through pipe 1, passes a joint
/// (pipes 1, 2 merging into 3), compressor, pipe 4, then two branches
/// (5 -> 6, 7 and 8 -> 9, 10) vent through 6 and 9 while pipe 10 recycles
/// through the valve back into the joint.
pub fn vented_gas_loop() -> GasLoop {
    let p = |len: f64, pl: f64, q: f64| pipe(len, pl, q);
    let joint_model = joint(
        &[
            ("1", &p(3000.0, 5.0e6, 20.0)),
            ("2", &p(2000.0, 4.9e6, 12.0)),
        ],
        ("3", &p(1500.0, 4.95e6, 32.0)),
    )
    .unwrap();
    let comp = static_compressor("c", 4.0).unwrap();
    let pipe4 = single_pipe("4", &p(4000.0, 5.2e6, 32.0)).unwrap();
    let valve = static_valve("v", 0.8).unwrap();
    let branch1 = branch(
        ("5", &p(2500.0, 5.1e6, 32.0)),
        &[
            ("6", &p(1200.0, 5.0e6, 8.0)),
            ("7", &p(1800.0, 5.0e6, 24.0)),
        ],
    )
    .unwrap();
    let branch2 = branch(
        ("8", &p(2200.0, 4.95e6, 24.0)),
        &[
            ("9", &p(900.0, 4.9e6, 12.0)),
            ("10", &p(1600.0, 4.9e6, 12.0)),
        ],
    )
    .unwrap();

    let spec = ConnectionSpec {
        internal: vec![
            // joint outflow q-port <-> compressor suction p-port
            (
                port_of(&comp, "c", PortKind::PPort),
                port_of(&joint_model, "3", PortKind::QPort),
            ),
            // compressor discharge q-port <-> pipe 4 p-port
            (
                port_of(&pipe4, "4", PortKind::PPort),
                port_of(&comp, "c", PortKind::QPort),
            ),
            // pipe 4 q-port <-> branch 1 trunk p-port
            (
                port_of(&branch1, "5", PortKind::PPort),
                port_of(&pipe4, "4", PortKind::QPort),
            ),
            // branch 1 leg 7 q-port <-> branch 2 trunk p-port
            (
                port_of(&branch2, "8", PortKind::PPort),
                port_of(&branch1, "7", PortKind::QPort),
            ),
            // branch 2 leg 10 q-port <-> valve p-port
            (
                port_of(&valve, "v", PortKind::PPort),
                port_of(&branch2, "10", PortKind::QPort),
            ),
            // valve q-port <-> joint pipe 2 p-port
            (
                port_of(&joint_model, "2", PortKind::PPort),
                port_of(&valve, "v", PortKind::QPort),
            ),
        ],
        external_inputs: vec![
            SignalId::new("1", "p_l"),
            SignalId::new("6", "q_r"),
            SignalId::new("9", "q_r"),
        ],
        external_outputs: vec![
            SignalId::new("1", "q_l"),
            SignalId::new("6", "p_r"),
            SignalId::new("9", "p_r"),
        ],
    };

    let bindings = vec![
        (SignalId::new("3", "p_r"), SignalId::new("c", "p_l")),
        (SignalId::new("c", "q_l"), SignalId::new("3", "q_r")),
        (SignalId::new("c", "p_r"), SignalId::new("4", "p_l")),
        (SignalId::new("4", "q_l"), SignalId::new("c", "q_r")),
        (SignalId::new("4", "p_r"), SignalId::new("5", "p_l")),
        (SignalId::new("5", "q_l"), SignalId::new("4", "q_r")),
        (SignalId::new("7", "p_r"), SignalId::new("8", "p_l")),
        (SignalId::new("8", "q_l"), SignalId::new("7", "q_r")),
        (SignalId::new("10", "p_r"), SignalId::new("v", "p_l")),
        (SignalId::new("v", "q_l"), SignalId::new("10", "q_r")),
        (SignalId::new("v", "p_r"), SignalId::new("2", "p_l")),
        (SignalId::new("2", "q_l"), SignalId::new("v", "q_r")),
    ];

    GasLoop {
        models: vec![joint_model, comp, pipe4, valve, branch1, branch2],
        spec,
        bindings,
    }
}

/// Maximum relative deviation between two transfer matrices, entrywise with
/// an absolute floor for near-zero entries.
pub fn max_rel_deviation(
    a: &nalgebra::DMatrix<nalgebra::Complex<f64>>,
    b: &nalgebra::DMatrix<nalgebra::Complex<f64>>,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let scale = b[(i, j)].norm().max(1e-9);
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm() / scale);
        }
    }
    worst
}

pub fn log_frequencies(points: usize) -> Vec<f64> {
    gasnet::sim::log_spaced(1e-4, 1e1, points)
}
