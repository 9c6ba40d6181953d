//! Machine-readable run reports.

use serde::Serialize;

/// Result of one requested analysis.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisReport {
    MassCheck {
        passed: bool,
        mode: String,
        t_qp_norm: f64,
        colsum_dev: f64,
        tol: f64,
    },
    DcGain {
        inputs: Vec<String>,
        outputs: Vec<String>,
        matrix: Vec<Vec<f64>>,
    },
    Freq {
        csv: String,
        points: usize,
        skipped: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        cross_check_max_dev: Option<f64>,
    },
    Sim {
        csv: String,
        samples: usize,
    },
    Build {
        states: usize,
        inputs: usize,
        outputs: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        cross_check_max_dev: Option<f64>,
    },
    Error {
        analysis: String,
        message: String,
    },
}

impl AnalysisReport {
    /// Whether this analysis counts as failed for the exit status.
    pub fn failed(&self) -> bool {
        match self {
            AnalysisReport::MassCheck { passed, .. } => !passed,
            AnalysisReport::Error { .. } => true,
            _ => false,
        }
    }

    pub fn human_line(&self) -> String {
        match self {
            AnalysisReport::MassCheck {
                passed,
                mode,
                t_qp_norm,
                colsum_dev,
                tol,
            } => format!(
                "mass check [{}]: {} (net pressure->flow {:.3e}, flow column-sum deviation {:.3e}, tol {:.1e})",
                mode,
                if *passed { "passed" } else { "FAILED" },
                t_qp_norm,
                colsum_dev,
                tol
            ),
            AnalysisReport::DcGain { inputs, outputs, matrix } => {
                let mut text = String::from("dc gain:\n");
                for (row, out) in matrix.iter().zip(outputs) {
                    let cells: Vec<String> = row
                        .iter()
                        .zip(inputs)
                        .map(|(v, inp)| format!("{inp} -> {out}: {v:.6e}"))
                        .collect();
                    text.push_str(&format!("  {}\n", cells.join(", ")));
                }
                text.trim_end().to_string()
            }
            AnalysisReport::Freq {
                csv,
                points,
                skipped,
                cross_check_max_dev,
            } => {
                let mut text = format!("frequency sweep: {points} points -> {csv}");
                if *skipped > 0 {
                    text.push_str(&format!(" ({skipped} singular points skipped)"));
                }
                if let Some(dev) = cross_check_max_dev {
                    text.push_str(&format!(", max dual-path deviation {dev:.3e}"));
                }
                text
            }
            AnalysisReport::Sim { csv, samples } => {
                format!("simulation: {samples} samples -> {csv}")
            }
            AnalysisReport::Build {
                states,
                inputs,
                outputs,
                cross_check_max_dev,
            } => {
                let mut text = format!(
                    "network built: {states} states, {inputs} external inputs, {outputs} external outputs"
                );
                if let Some(dev) = cross_check_max_dev {
                    text.push_str(&format!(", max dual-path deviation {dev:.3e}"));
                }
                text
            }
            AnalysisReport::Error { analysis, message } => {
                format!("{analysis}: ERROR {message}")
            }
        }
    }
}

/// Complete report of one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub file: String,
    pub command: String,
    pub analyses: Vec<AnalysisReport>,
    pub csv_files: Vec<String>,
    pub exit_status: i32,
}

impl RunReport {
    pub fn finalize(&mut self) {
        self.exit_status = if self.analyses.iter().any(|a| a.failed()) {
            1
        } else {
            0
        };
    }
}
