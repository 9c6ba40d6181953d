//! Valve manifold: two tanks joined by two pipe legs, with the tank
//! entrances modeled as linearized orifices.
//!
//! The model is built compositionally: an extended isothermal-tank model per
//! tank (its entrance flow expressed through the orifice linearization), a
//! single-pipe model per leg with the friction factor absorbing the in-line
//! valve, and the standard port interconnection closing the boundary
//! conditions.

use nalgebra::DMatrix;

use super::pipe::{single_pipe, PipeParams};
use super::tank::TankParams;
use super::valve::{orifice_linearization, OrificeParams};
use super::ComponentError;
use crate::interconnect::{connect, ports_of, ConnectionSpec, Port, PortKind};
use crate::label::{SignalDirection, SignalId, SignalKind, SignalLabel};
use crate::model::LabeledLinearModel;

/// Linearized entrance-orifice coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntranceCoeffs {
    /// Flow sensitivity to the downstream (tank) pressure \[kg/(s·Pa)\]
    pub xi: f64,
    /// Flow sensitivity to the upstream pressure \[kg/(s·Pa)\]
    pub zeta: f64,
}

/// Nominal pressures along the manifold flow path, strictly decreasing:
/// feed, tank 1, leg outlets, tank 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldNominal {
    pub p_feed: f64,
    pub p_tank1: f64,
    pub p_leg_out: f64,
    pub p_tank2: f64,
}

impl ManifoldNominal {
    fn validate(&self) -> Result<(), ComponentError> {
        let chain = [self.p_feed, self.p_tank1, self.p_leg_out, self.p_tank2];
        if !chain.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0) {
            return Err(ComponentError::InvalidParams(format!(
                "manifold nominal pressures must decrease strictly along the flow path, got {chain:?}"
            )));
        }
        Ok(())
    }
}

/// Tank 1 wrapped with its entrance orifice: state p, inputs
/// (p_l, q_r1, q_r2), outputs (p_r, q_l) where q_l is the entering flow.
fn tank_with_entrance_upstream(
    id: &str,
    tank: &TankParams,
    entrance: EntranceCoeffs,
) -> Result<LabeledLinearModel, ComponentError> {
    let rate = tank.pressure_rate();
    let a = DMatrix::from_row_slice(1, 1, &[rate * entrance.xi]);
    let b = DMatrix::from_row_slice(1, 3, &[rate * entrance.zeta, -rate, -rate]);
    let c = DMatrix::from_row_slice(2, 1, &[1.0, entrance.xi]);
    let d = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, entrance.zeta, 0.0, 0.0]);
    Ok(LabeledLinearModel::new(
        a,
        b,
        c,
        d,
        vec![SignalLabel::new(
            id,
            "p_r",
            SignalKind::Pressure,
            SignalDirection::State,
        )],
        vec![
            SignalLabel::new(id, "p_l", SignalKind::Pressure, SignalDirection::Input),
            SignalLabel::new(id, "q_r1", SignalKind::MassFlow, SignalDirection::Input),
            SignalLabel::new(id, "q_r2", SignalKind::MassFlow, SignalDirection::Input),
        ],
        vec![
            SignalLabel::new(id, "p_r", SignalKind::Pressure, SignalDirection::Output),
            SignalLabel::new(id, "q_l", SignalKind::MassFlow, SignalDirection::Output),
        ],
    )?)
}

/// Tank 2 wrapped with one entrance orifice per leg: state p, inputs
/// (p_l1, p_l2, q_r), outputs (p_r, q_l1, q_l2).
fn tank_with_entrances_downstream(
    id: &str,
    tank: &TankParams,
    entrance: EntranceCoeffs,
) -> Result<LabeledLinearModel, ComponentError> {
    let rate = tank.pressure_rate();
    let a = DMatrix::from_row_slice(1, 1, &[rate * (entrance.xi + entrance.xi)]);
    let b = DMatrix::from_row_slice(1, 3, &[rate * entrance.zeta, rate * entrance.zeta, -rate]);
    let c = DMatrix::from_row_slice(3, 1, &[1.0, entrance.xi, entrance.xi]);
    let d = DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0,
            0.0,
            0.0, //
            entrance.zeta,
            0.0,
            0.0, //
            0.0,
            entrance.zeta,
            0.0,
        ],
    );
    Ok(LabeledLinearModel::new(
        a,
        b,
        c,
        d,
        vec![SignalLabel::new(
            id,
            "p_r",
            SignalKind::Pressure,
            SignalDirection::State,
        )],
        vec![
            SignalLabel::new(id, "p_l1", SignalKind::Pressure, SignalDirection::Input),
            SignalLabel::new(id, "p_l2", SignalKind::Pressure, SignalDirection::Input),
            SignalLabel::new(id, "q_r", SignalKind::MassFlow, SignalDirection::Input),
        ],
        vec![
            SignalLabel::new(id, "p_r", SignalKind::Pressure, SignalDirection::Output),
            SignalLabel::new(id, "q_l1", SignalKind::MassFlow, SignalDirection::Output),
            SignalLabel::new(id, "q_l2", SignalKind::MassFlow, SignalDirection::Output),
        ],
    )?)
}

fn port(ports: &[Port], kind: PortKind, input_name: &str) -> Port {
    ports
        .iter()
        .find(|p| p.kind == kind && p.input().name == input_name)
        .cloned()
        .expect("manifold building block is missing an expected port")
}

/// Builds the manifold from already-linearized entrance coefficients.
/// x = (p_T1, p_1r, q_1l, p_2r, q_2l, p_T2), u = (p_T1l, q_T2r),
/// y = (p_T2, q_T1l).
pub fn valve_manifold_with_entrances(
    tank1: (&str, &TankParams),
    tank2: (&str, &TankParams),
    legs: [(&str, &PipeParams); 2],
    entrance1: EntranceCoeffs,
    entrance2: EntranceCoeffs,
) -> Result<LabeledLinearModel, ComponentError> {
    let t1 = tank_with_entrance_upstream(tank1.0, tank1.1, entrance1)?;
    let t2 = tank_with_entrances_downstream(tank2.0, tank2.1, entrance2)?;
    let leg1 = single_pipe(legs[0].0, legs[0].1)?;
    let leg2 = single_pipe(legs[1].0, legs[1].1)?;

    let t1_ports = ports_of(&t1);
    let t2_ports = ports_of(&t2);
    let leg1_ports = ports_of(&leg1);
    let leg2_ports = ports_of(&leg2);

    let spec = ConnectionSpec {
        internal: vec![
            // Tank-1 outlets feed the leg left ends.
            (
                port(&leg1_ports, PortKind::PPort, "p_l"),
                port(&t1_ports, PortKind::QPort, "q_r1"),
            ),
            (
                port(&leg2_ports, PortKind::PPort, "p_l"),
                port(&t1_ports, PortKind::QPort, "q_r2"),
            ),
            // Leg right ends feed the tank-2 entrances.
            (
                port(&t2_ports, PortKind::PPort, "p_l1"),
                port(&leg1_ports, PortKind::QPort, "q_r"),
            ),
            (
                port(&t2_ports, PortKind::PPort, "p_l2"),
                port(&leg2_ports, PortKind::QPort, "q_r"),
            ),
        ],
        external_inputs: vec![SignalId::new(tank1.0, "p_l"), SignalId::new(tank2.0, "q_r")],
        external_outputs: vec![SignalId::new(tank2.0, "p_r"), SignalId::new(tank1.0, "q_l")],
    };

    Ok(connect(&[&t1, &leg1, &leg2, &t2], &spec)?)
}

/// Valve manifold with entrance orifices linearized at the given nominal
/// pressures. The fixed entrance areas are taken fully open (`a_o_max`).
pub fn valve_manifold(
    tank1: (&str, &TankParams),
    tank2: (&str, &TankParams),
    legs: [(&str, &PipeParams); 2],
    entrance1: &OrificeParams,
    entrance2: &OrificeParams,
    nominal: &ManifoldNominal,
) -> Result<LabeledLinearModel, ComponentError> {
    nominal.validate()?;
    let lin1 = orifice_linearization(
        entrance1.a_o_max,
        nominal.p_feed,
        nominal.p_tank1,
        entrance1,
    )?;
    let lin2 = orifice_linearization(
        entrance2.a_o_max,
        nominal.p_leg_out,
        nominal.p_tank2,
        entrance2,
    )?;
    let model = valve_manifold_with_entrances(
        tank1,
        tank2,
        legs,
        EntranceCoeffs {
            xi: lin1.xi,
            zeta: lin1.zeta,
        },
        EntranceCoeffs {
            xi: lin2.xi,
            zeta: lin2.zeta,
        },
    )?;
    let mut nominal_map = model.nominal.clone();
    nominal_map.insert(SignalId::new(tank1.0, "p_l"), nominal.p_feed);
    nominal_map.insert(SignalId::new(tank1.0, "p_r"), nominal.p_tank1);
    nominal_map.insert(SignalId::new(tank2.0, "p_r"), nominal.p_tank2);
    Ok(model.with_nominal(nominal_map))
}
