//! Star junctions must reduce to joints and branches in the degenerate
//! configurations, and every junction geometry must conserve mass at DC.

mod common;

use common::{log_frequencies, max_rel_deviation, pipe};
use gasnet::components::{branch, joint, star_junction};
use gasnet::verify::{mass_check, MassCheckMode};
use nalgebra::Complex;

#[test]
fn star_with_single_outflow_reduces_to_joint() {
    let in1 = pipe(1400.0, 5.0e6, 12.0);
    let in2 = pipe(600.0, 4.9e6, 8.0);
    let out = pipe(1000.0, 4.95e6, 20.0);

    let star = star_junction(&[("1", &in1), ("2", &in2)], &[("3", &out)]).unwrap();
    let reference = joint(&[("1", &in1), ("2", &in2)], ("3", &out)).unwrap();

    // Same input ordering (p_1l, p_2l, q_3r) and output ordering
    // (junction/downstream pressure, q_1l, q_2l) up to the output role:
    // the joint reports p_3r, the star reports p_3r as well.
    for omega in log_frequencies(20) {
        let s = Complex::new(0.0, omega);
        let got = star.frequency_response(s).unwrap();
        let want = reference.frequency_response(s).unwrap();
        let dev = max_rel_deviation(&got, &want);
        assert!(dev < 1e-9, "omega = {omega}: deviation {dev:.3e}");
    }
}

#[test]
fn star_with_single_inflow_reduces_to_branch() {
    let trunk = pipe(1000.0, 5.0e6, 20.0);
    let leg1 = pipe(1500.0, 4.9e6, 12.0);
    let leg2 = pipe(800.0, 4.9e6, 8.0);

    let star = star_junction(&[("0", &trunk)], &[("1", &leg1), ("2", &leg2)]).unwrap();
    let reference = branch(("0", &trunk), &[("1", &leg1), ("2", &leg2)]).unwrap();

    for omega in log_frequencies(20) {
        let s = Complex::new(0.0, omega);
        let got = star.frequency_response(s).unwrap();
        let want = reference.frequency_response(s).unwrap();
        let dev = max_rel_deviation(&got, &want);
        assert!(dev < 1e-9, "omega = {omega}: deviation {dev:.3e}");
    }
}

/// Frequency-domain elimination oracle for a joint of n pipes: at a fixed
/// complex frequency, solve the junction constraints
///
/// ```text
/// p_{k,r} = p_{0,l}   (k = 1..n)      sum_k q_{k,r} = q_{0,l}
/// ```
///
/// directly for the internal signals (p_{0,l}, q_{1,r}, ..., q_{n,r}) using
/// only the individual single-pipe transfer matrices, then evaluate the
/// outputs (p_{0,r}, q_{1,l}, ..., q_{n,l}) per external input.
fn joint_elimination_oracle(
    inflows: &[gasnet::model::LabeledLinearModel],
    outflow: &gasnet::model::LabeledLinearModel,
    s: Complex<f64>,
) -> nalgebra::DMatrix<Complex<f64>> {
    use nalgebra::DMatrix;
    let n = inflows.len();
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let t0 = outflow.frequency_response(s).unwrap();
    let tk: Vec<_> = inflows
        .iter()
        .map(|m| m.frequency_response(s).unwrap())
        .collect();

    // Unknowns x = (p_{0,l}, q_{1,r}, ..., q_{n,r});
    // externals u = (p_{1,l}, ..., p_{n,l}, q_{0,r}).
    let mut lhs = DMatrix::from_element(n + 1, n + 1, zero);
    let mut rhs_per_input = DMatrix::from_element(n + 1, n + 1, zero);
    for k in 0..n {
        // T_k[0,1] q_{k,r} - p_{0,l} = -T_k[0,0] p_{k,l}
        lhs[(k, 0)] = -one;
        lhs[(k, 1 + k)] = tk[k][(0, 1)];
        rhs_per_input[(k, k)] = -tk[k][(0, 0)];
    }
    // sum_k q_{k,r} - T_0[1,0] p_{0,l} = T_0[1,1] q_{0,r}
    lhs[(n, 0)] = -t0[(1, 0)];
    for k in 0..n {
        lhs[(n, 1 + k)] = one;
    }
    rhs_per_input[(n, n)] = t0[(1, 1)];

    let internal = lhs.lu().solve(&rhs_per_input).unwrap();

    // Outputs y = (p_{0,r}, q_{1,l}, ..., q_{n,l}).
    let mut out = DMatrix::from_element(n + 1, n + 1, zero);
    for col in 0..=n {
        let p0l = internal[(0, col)];
        out[(0, col)] = t0[(0, 0)] * p0l;
        if col == n {
            out[(0, col)] += t0[(0, 1)];
        }
        for k in 0..n {
            let qkr = internal[(1 + k, col)];
            out[(1 + k, col)] = tk[k][(1, 1)] * qkr;
            if col == k {
                out[(1 + k, col)] += tk[k][(1, 0)];
            }
        }
    }
    out
}

#[test]
fn general_joint_matches_elimination_oracle() {
    for n in [3usize, 4] {
        let inflow_params: Vec<_> = (0..n)
            .map(|i| pipe(700.0 + 350.0 * i as f64, 5.0e6, 24.0 / n as f64))
            .collect();
        let outflow_params = pipe(1300.0, 4.9e6, 24.0);
        let ids: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let named: Vec<(&str, _)> = ids
            .iter()
            .map(|s| s.as_str())
            .zip(inflow_params.iter())
            .collect();
        let model = joint(&named, ("0", &outflow_params)).unwrap();

        let inflow_models: Vec<_> = named
            .iter()
            .map(|(id, p)| gasnet::components::single_pipe(id, p).unwrap())
            .collect();
        let outflow_model = gasnet::components::single_pipe("0", &outflow_params).unwrap();

        for omega in [1e-3, 3e-2, 0.4, 2.0] {
            let s = Complex::new(0.0, omega);
            let got = model.frequency_response(s).unwrap();
            let want = joint_elimination_oracle(&inflow_models, &outflow_model, s);
            let dev = max_rel_deviation(&got, &want);
            assert!(dev < 1e-9, "n = {n}, omega = {omega}: deviation {dev:.3e}");
        }
    }
}

/// Frequency-domain elimination oracle for a star junction: the unknowns
/// are the shared junction pressure and the joining pipes' right-end flows;
/// the outgoing pipes see the junction pressure at their left ends and
/// absorb the joined flow.
fn star_elimination_oracle(
    inflows: &[gasnet::model::LabeledLinearModel],
    outflows: &[gasnet::model::LabeledLinearModel],
    s: Complex<f64>,
) -> nalgebra::DMatrix<Complex<f64>> {
    use nalgebra::DMatrix;
    let n = inflows.len();
    let m = outflows.len();
    let zero = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let tin: Vec<_> = inflows
        .iter()
        .map(|mo| mo.frequency_response(s).unwrap())
        .collect();
    let tout: Vec<_> = outflows
        .iter()
        .map(|mo| mo.frequency_response(s).unwrap())
        .collect();

    // Unknowns x = (P, q_{1,r}, ..., q_{n,r});
    // externals u = (p_{1,l}, ..., p_{n,l}, q_{n+1,r}, ..., q_{n+m,r}).
    let n_u = n + m;
    let mut lhs = DMatrix::from_element(n + 1, n + 1, zero);
    let mut rhs = DMatrix::from_element(n + 1, n_u, zero);
    for k in 0..n {
        // p_{k,r} = P:  T_k[0,1] q_{k,r} - P = -T_k[0,0] p_{k,l}
        lhs[(k, 0)] = -one;
        lhs[(k, 1 + k)] = tin[k][(0, 1)];
        rhs[(k, k)] = -tin[k][(0, 0)];
    }
    // sum_k q_{k,r} = sum_j q_{j,l} with q_{j,l} = T_j[1,0] P + T_j[1,1] q_{j,r}.
    let total_pressure_gain: Complex<f64> = tout.iter().map(|t| t[(1, 0)]).sum();
    lhs[(n, 0)] = -total_pressure_gain;
    for k in 0..n {
        lhs[(n, 1 + k)] = one;
    }
    for j in 0..m {
        rhs[(n, n + j)] = tout[j][(1, 1)];
    }
    let internal = lhs.lu().solve(&rhs).unwrap();

    // Outputs y = (p_{n+1,r}, ..., p_{n+m,r}, q_{1,l}, ..., q_{n,l}).
    let mut out = DMatrix::from_element(n + m, n_u, zero);
    for col in 0..n_u {
        let junction_pressure = internal[(0, col)];
        for j in 0..m {
            out[(j, col)] = tout[j][(0, 0)] * junction_pressure;
            if col == n + j {
                out[(j, col)] += tout[j][(0, 1)];
            }
        }
        for k in 0..n {
            out[(m + k, col)] = tin[k][(1, 1)] * internal[(1 + k, col)];
            if col == k {
                out[(m + k, col)] += tin[k][(1, 0)];
            }
        }
    }
    out
}

#[test]
fn general_star_matches_elimination_oracle() {
    for (n, m) in [(2usize, 2usize), (3, 2), (2, 3)] {
        let inflow_params: Vec<_> = (0..n)
            .map(|i| pipe(700.0 + 350.0 * i as f64, 5.0e6, 18.0 / n as f64))
            .collect();
        let outflow_params: Vec<_> = (0..m)
            .map(|i| pipe(1000.0 + 240.0 * i as f64, 4.9e6, 18.0 / m as f64))
            .collect();
        let in_ids: Vec<String> = (1..=n).map(|i| format!("i{i}")).collect();
        let out_ids: Vec<String> = (1..=m).map(|i| format!("o{i}")).collect();
        let named_in: Vec<(&str, _)> = in_ids
            .iter()
            .map(|s| s.as_str())
            .zip(inflow_params.iter())
            .collect();
        let named_out: Vec<(&str, _)> = out_ids
            .iter()
            .map(|s| s.as_str())
            .zip(outflow_params.iter())
            .collect();
        let model = star_junction(&named_in, &named_out).unwrap();

        let inflow_models: Vec<_> = named_in
            .iter()
            .map(|(id, p)| gasnet::components::single_pipe(id, p).unwrap())
            .collect();
        let outflow_models: Vec<_> = named_out
            .iter()
            .map(|(id, p)| gasnet::components::single_pipe(id, p).unwrap())
            .collect();

        for omega in [1e-3, 3e-2, 0.4, 2.0] {
            let s = Complex::new(0.0, omega);
            let got = model.frequency_response(s).unwrap();
            let want = star_elimination_oracle(&inflow_models, &outflow_models, s);
            let dev = max_rel_deviation(&got, &want);
            assert!(
                dev < 1e-9,
                "star {n}x{m}, omega = {omega}: deviation {dev:.3e}"
            );
        }
    }
}

#[test]
fn junction_mass_conservation_suite() {
    // Branches with 2 and 3 legs.
    for legs in 2..=3 {
        let trunk = pipe(1000.0, 5.0e6, 20.0);
        let leg_params: Vec<_> = (0..legs)
            .map(|i| pipe(900.0 + 300.0 * i as f64, 4.9e6, 20.0 / legs as f64))
            .collect();
        let ids: Vec<String> = (1..=legs).map(|i| i.to_string()).collect();
        let named: Vec<(&str, _)> = ids
            .iter()
            .map(|s| s.as_str())
            .zip(leg_params.iter())
            .collect();
        let model = branch(("t", &trunk), &named).unwrap();
        let report = mass_check(&model, 1e-9).unwrap();
        assert!(report.passed, "branch with {legs} legs: {report:?}");
        assert_eq!(report.mode, MassCheckMode::DcGain);
    }

    // Joints with 2..5 inflows.
    for n in 2..=5 {
        let inflow_params: Vec<_> = (0..n)
            .map(|i| pipe(800.0 + 250.0 * i as f64, 5.0e6, 24.0 / n as f64))
            .collect();
        let ids: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
        let named: Vec<(&str, _)> = ids
            .iter()
            .map(|s| s.as_str())
            .zip(inflow_params.iter())
            .collect();
        let out = pipe(1200.0, 4.95e6, 24.0);
        let model = joint(&named, ("0", &out)).unwrap();
        let report = mass_check(&model, 1e-9).unwrap();
        assert!(report.passed, "joint with {n} inflows: {report:?}");
    }

    // Stars with n, m <= 3.
    for n in 1..=3usize {
        for m in 1..=3usize {
            if n + m < 3 {
                continue;
            }
            let inflow_params: Vec<_> = (0..n)
                .map(|i| pipe(700.0 + 200.0 * i as f64, 5.0e6, 18.0 / n as f64))
                .collect();
            let outflow_params: Vec<_> = (0..m)
                .map(|i| pipe(1000.0 + 150.0 * i as f64, 4.9e6, 18.0 / m as f64))
                .collect();
            let in_ids: Vec<String> = (1..=n).map(|i| format!("i{i}")).collect();
            let out_ids: Vec<String> = (1..=m).map(|i| format!("o{i}")).collect();
            let inflows: Vec<(&str, _)> = in_ids
                .iter()
                .map(|s| s.as_str())
                .zip(inflow_params.iter())
                .collect();
            let outflows: Vec<(&str, _)> = out_ids
                .iter()
                .map(|s| s.as_str())
                .zip(outflow_params.iter())
                .collect();
            let model = star_junction(&inflows, &outflows).unwrap();
            let report = mass_check(&model, 1e-9).unwrap();
            assert!(report.passed, "star {n}x{m}: {report:?}");
        }
    }
}
