//! The command pipeline: parse -> build -> analyses -> CSV/JSON emission.

use std::fs;
use std::path::{Path, PathBuf};

use gasnet::label::SignalId;
use gasnet::model::LabeledLinearModel;
use gasnet::sim::{frequency_sweep, log_spaced, simulate_linear, TimeGrid, Trajectory};
use gasnet::verify::mass_check;
use nalgebra::{Complex, DVector};
use thiserror::Error;

use crate::build::{build_network, BuildError, BuiltNetwork};
use crate::format::{parse_network, AnalysisDecl, FormatError, NetworkFile};
use crate::report::{AnalysisReport, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Build,
    Check,
    DcGain,
    Freq,
    Sim,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Check => "check",
            Command::DcGain => "dcgain",
            Command::Freq => "freq",
            Command::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory for CSV files; defaults to $GASNET_OUT or ".".
    pub out_dir: Option<PathBuf>,
    /// Run both interconnection pathways and report the maximum deviation.
    pub cross_check: bool,
    /// Override the mass-check tolerance.
    pub tol: Option<f64>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

fn out_dir(options: &RunOptions) -> PathBuf {
    options
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("GASNET_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Executes a command against a network file and collects the report.
/// Parse and build failures are hard errors; analysis-level failures are
/// recorded in the report and reflected in the exit status.
pub fn run(path: &Path, command: Command, options: &RunOptions) -> Result<RunReport, RunError> {
    let text = fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = parse_network(&text)?;
    let network = build_network(&file)?;

    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "network".to_string());
    let dir = out_dir(options);

    let mut report = RunReport {
        file: path.display().to_string(),
        command: command.name().to_string(),
        analyses: Vec::new(),
        csv_files: Vec::new(),
        exit_status: 0,
    };

    match command {
        Command::Build => {
            let cross = options
                .cross_check
                .then(|| cross_check_deviation(&network, &default_frequencies(&file)));
            report.analyses.push(AnalysisReport::Build {
                states: network.closed.n_states(),
                inputs: network.closed.n_inputs(),
                outputs: network.closed.n_outputs(),
                cross_check_max_dev: cross,
            });
        }
        Command::Check => {
            let mut tols: Vec<f64> = file
                .analyses
                .iter()
                .filter_map(|a| match a {
                    AnalysisDecl::MassCheck { tol } => Some(*tol),
                    _ => None,
                })
                .collect();
            if tols.is_empty() {
                tols.push(1e-9);
            }
            for tol in tols {
                let tol = options.tol.unwrap_or(tol);
                report.analyses.push(run_mass_check(&network.closed, tol));
            }
            if options.cross_check {
                let dev = cross_check_deviation(&network, &default_frequencies(&file));
                report.analyses.push(AnalysisReport::Build {
                    states: network.closed.n_states(),
                    inputs: network.closed.n_inputs(),
                    outputs: network.closed.n_outputs(),
                    cross_check_max_dev: Some(dev),
                });
            }
        }
        Command::DcGain => match network.closed.dc_gain() {
            Ok(dc) => {
                let matrix: Vec<Vec<f64>> = (0..dc.nrows())
                    .map(|i| (0..dc.ncols()).map(|j| dc[(i, j)]).collect())
                    .collect();
                report.analyses.push(AnalysisReport::DcGain {
                    inputs: network
                        .closed
                        .inputs
                        .iter()
                        .map(|l| l.id.to_string())
                        .collect(),
                    outputs: network
                        .closed
                        .outputs
                        .iter()
                        .map(|l| l.id.to_string())
                        .collect(),
                    matrix,
                });
            }
            Err(e) => report.analyses.push(AnalysisReport::Error {
                analysis: "dcgain".to_string(),
                message: e.to_string(),
            }),
        },
        Command::Freq => {
            let declared: Vec<&AnalysisDecl> = file
                .analyses
                .iter()
                .filter(|a| matches!(a, AnalysisDecl::Freq { .. }))
                .collect();
            if declared.is_empty() {
                report.analyses.push(AnalysisReport::Error {
                    analysis: "freq".to_string(),
                    message: "the network file declares no `analysis freq { ... }` block"
                        .to_string(),
                });
            }
            for (index, decl) in declared.iter().enumerate() {
                let AnalysisDecl::Freq {
                    omega_min,
                    omega_max,
                    points,
                } = decl
                else {
                    unreachable!()
                };
                let omegas = log_spaced(*omega_min, *omega_max, *points);
                let sweep = frequency_sweep(&network.closed, &omegas);
                let csv_path = dir.join(format!("{stem}_freq_{}.csv", index + 1));
                match fs::write(&csv_path, sweep_csv(&network.closed, &sweep)) {
                    Ok(()) => {
                        let cross = options
                            .cross_check
                            .then(|| cross_check_deviation(&network, &omegas));
                        report.csv_files.push(csv_path.display().to_string());
                        report.analyses.push(AnalysisReport::Freq {
                            csv: csv_path.display().to_string(),
                            points: omegas.len(),
                            skipped: sweep.skipped.len(),
                            cross_check_max_dev: cross,
                        });
                    }
                    Err(e) => report.analyses.push(AnalysisReport::Error {
                        analysis: "freq".to_string(),
                        message: format!("cannot write {}: {e}", csv_path.display()),
                    }),
                }
            }
        }
        Command::Sim => {
            let declared: Vec<&AnalysisDecl> = file
                .analyses
                .iter()
                .filter(|a| matches!(a, AnalysisDecl::Sim { .. }))
                .collect();
            if declared.is_empty() {
                report.analyses.push(AnalysisReport::Error {
                    analysis: "sim".to_string(),
                    message: "the network file declares no `analysis sim { ... }` block"
                        .to_string(),
                });
            }
            for (index, decl) in declared.iter().enumerate() {
                let AnalysisDecl::Sim { t0, t1, dt, inputs } = decl else {
                    unreachable!()
                };
                let result = simulate_analysis(&network.closed, *t0, *t1, *dt, inputs);
                match result {
                    Ok(traj) => {
                        let csv_path = dir.join(format!("{stem}_sim_{}.csv", index + 1));
                        match fs::write(&csv_path, trajectory_csv(&traj)) {
                            Ok(()) => {
                                report.csv_files.push(csv_path.display().to_string());
                                report.analyses.push(AnalysisReport::Sim {
                                    csv: csv_path.display().to_string(),
                                    samples: traj.times.len(),
                                });
                            }
                            Err(e) => report.analyses.push(AnalysisReport::Error {
                                analysis: "sim".to_string(),
                                message: format!("cannot write {}: {e}", csv_path.display()),
                            }),
                        }
                    }
                    Err(message) => report.analyses.push(AnalysisReport::Error {
                        analysis: "sim".to_string(),
                        message,
                    }),
                }
            }
        }
    }

    report.finalize();
    Ok(report)
}

fn run_mass_check(model: &LabeledLinearModel, tol: f64) -> AnalysisReport {
    match mass_check(model, tol) {
        Ok(r) => AnalysisReport::MassCheck {
            passed: r.passed,
            mode: match r.mode {
                gasnet::verify::MassCheckMode::DcGain => "dc-gain".to_string(),
                gasnet::verify::MassCheckMode::Structural => "structural".to_string(),
            },
            t_qp_norm: r.t_qp_norm,
            colsum_dev: r.colsum_dev,
            tol,
        },
        Err(e) => AnalysisReport::Error {
            analysis: "mass_check".to_string(),
            message: e.to_string(),
        },
    }
}

fn default_frequencies(file: &NetworkFile) -> Vec<f64> {
    file.analyses
        .iter()
        .find_map(|a| match a {
            AnalysisDecl::Freq {
                omega_min,
                omega_max,
                points,
            } => Some(log_spaced(*omega_min, *omega_max, *points)),
            _ => None,
        })
        .unwrap_or_else(|| log_spaced(1e-4, 1e1, 20))
}

/// Maximum relative deviation between the two interconnection pathways over
/// a frequency list.
fn cross_check_deviation(network: &BuiltNetwork, omegas: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &omega in omegas {
        let s = Complex::new(0.0, omega);
        let (Ok(a), Ok(b)) = (
            network.closed.frequency_response(s),
            network.closed_by_name.frequency_response(s),
        ) else {
            continue;
        };
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let scale = b[(i, j)].norm().max(1e-9);
                worst = worst.max((a[(i, j)] - b[(i, j)]).norm() / scale);
            }
        }
    }
    worst
}

fn simulate_analysis(
    model: &LabeledLinearModel,
    t0: f64,
    t1: f64,
    dt: f64,
    tables: &[(SignalId, Vec<(f64, f64)>)],
) -> Result<Trajectory, String> {
    let grid = TimeGrid::new(t0, t1, dt).map_err(|e| e.to_string())?;
    // Resolve the tables against the model's input ordering once.
    let mut per_input: Vec<Option<&Vec<(f64, f64)>>> = vec![None; model.n_inputs()];
    for (id, table) in tables {
        let idx = model
            .input_index(id)
            .ok_or_else(|| format!("`{id}` is not an external input of this network"))?;
        per_input[idx] = Some(table);
    }
    let input_fn = |t: f64| {
        DVector::from_iterator(
            per_input.len(),
            per_input.iter().map(|table| match table {
                Some(pairs) => pairs
                    .iter()
                    .take_while(|(tk, _)| *tk <= t)
                    .last()
                    .map(|(_, v)| *v)
                    .unwrap_or(0.0),
                None => 0.0,
            }),
        )
    };
    simulate_linear(model, input_fn, &DVector::zeros(model.n_states()), &grid)
        .map_err(|e| e.to_string())
}

/// Trajectory CSV: first column `t_s`, then one column per signal named
/// `<component>.<signal>`, 17 significant digits, '.' decimal point.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    let header: Vec<String> = std::iter::once("t_s".to_string())
        .chain(traj.columns.iter().map(|(l, _)| l.id.to_string()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (k, t) in traj.times.iter().enumerate() {
        let mut row = vec![format_si(*t)];
        for (_, values) in &traj.columns {
            row.push(format_si(values[k]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Sweep CSV: first column `omega_rad_s`, then `<output>@<input>.re` and
/// `.im` per transfer entry; skipped frequencies emit `nan`.
pub fn sweep_csv(model: &LabeledLinearModel, sweep: &gasnet::sim::FrequencySweep) -> String {
    let mut out = String::new();
    let mut header = vec!["omega_rad_s".to_string()];
    for output in &model.outputs {
        for input in &model.inputs {
            header.push(format!("{}@{}.re", output.id, input.id));
            header.push(format!("{}@{}.im", output.id, input.id));
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (k, omega) in sweep.omegas.iter().enumerate() {
        let mut row = vec![format_si(*omega)];
        match &sweep.responses[k] {
            Some(resp) => {
                for i in 0..model.n_outputs() {
                    for j in 0..model.n_inputs() {
                        row.push(format_si(resp[(i, j)].re));
                        row.push(format_si(resp[(i, j)].im));
                    }
                }
            }
            None => {
                for _ in 0..2 * model.n_outputs() * model.n_inputs() {
                    row.push("nan".to_string());
                }
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// 17 significant digits, locale-independent.
fn format_si(v: f64) -> String {
    format!("{v:.16e}")
}
