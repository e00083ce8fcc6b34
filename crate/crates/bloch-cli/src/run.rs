//! Task execution and serialization. All numeric work happens first; files
//! are written once, at the end, from a single writer.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bloch_core::{
    ballistic_report, boundary_band_mass, compute_bands, merged_spectrum, position_moments,
    random_state, run_suites, BlochError, BoundKind, BoxPlan, Geometry, LatticeState,
    PeriodicJacobiOperator, TorusPlan, SUITE_NAMES,
};
use serde::Serialize;

use crate::config::{
    EvolveTask, ExperimentConfig, GeometryKind, StateSpec, TaskKind, VelocityTask, ConfigError,
};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(BlochError),
    Io(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<BlochError> for RunError {
    fn from(e: BlochError) -> Self {
        RunError::Core(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AssertionRow {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub kind: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskSummary {
    Bands {
        grid_points: usize,
        num_bands: usize,
        spectrum: Vec<[f64; 2]>,
    },
    Evolve {
        rows: usize,
        final_mean_x: Vec<f64>,
    },
    Velocity {
        q_mean: f64,
        q_second_moment: f64,
        final_strong_error: f64,
        final_mean_error: f64,
    },
    Verify {
        suites: usize,
        assertions: usize,
        failures: usize,
    },
}

/// What lands in `run_report.json`. Deliberately carries no timing: outputs
/// must be byte-identical for identical (config, seed, version), so wall
/// time is reported on stderr instead.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
    pub summary: TaskSummary,
    pub assertions: Vec<AssertionRow>,
}

pub struct Outcome {
    pub assertions_passed: bool,
    pub files: Vec<PathBuf>,
}

/// Quote a CSV text field when it needs it (assertion names contain commas).
fn csv_text(field: &str) -> std::borrow::Cow<'_, str> {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        std::borrow::Cow::Owned(format!("\"{}\"", field.replace('"', "\"\"")))
    } else {
        std::borrow::Cow::Borrowed(field)
    }
}

fn build_state(geometry: Geometry, spec: &StateSpec, seed: u64) -> Result<LatticeState, RunError> {
    Ok(match spec {
        StateSpec::Delta { site } => LatticeState::delta(geometry, site)?,
        StateSpec::Random { support } => random_state(&geometry, *support, seed)?,
    })
}

fn operator_for(config: &ExperimentConfig) -> Result<PeriodicJacobiOperator, RunError> {
    let section = config.operator.as_ref().ok_or_else(|| {
        ConfigError::new("operator", "this task needs an [operator] section")
    })?;
    Ok(section.build()?)
}

pub fn run(config: &ExperimentConfig, kind: TaskKind, out_dir: &Path) -> Result<Outcome, RunError> {
    let mut files: Vec<(String, String)> = Vec::new();
    let mut assertions: Vec<AssertionRow> = Vec::new();

    let summary = match kind {
        TaskKind::Bands => {
            let task = config.task.as_ref().and_then(|t| t.bands.as_ref()).unwrap();
            let op = operator_for(config)?;
            let d = op.dim();
            let axes: Vec<usize> = (1..=d).collect();
            let bands = compute_bands(&op, &task.n_cells, &axes)?;

            let mut csv = String::new();
            for j in 1..=d {
                write!(csv, "theta_{j},").unwrap();
            }
            csv.push_str("j,E");
            for j in 1..=d {
                write!(csv, ",v_{j}").unwrap();
            }
            csv.push('\n');
            for point in &bands.points {
                for band in 0..bands.num_bands() {
                    for t in &point.theta {
                        write!(csv, "{t},").unwrap();
                    }
                    write!(csv, "{band},{:e}", point.energies[band]).unwrap();
                    for slot in 0..d {
                        write!(csv, ",{:e}", point.velocities[slot][band]).unwrap();
                    }
                    csv.push('\n');
                }
            }
            files.push(("bands.csv".into(), csv));
            TaskSummary::Bands {
                grid_points: bands.points.len(),
                num_bands: bands.num_bands(),
                spectrum: merged_spectrum(&bands).iter().map(|&(a, b)| [a, b]).collect(),
            }
        }
        TaskKind::Evolve => {
            let task = config.task.as_ref().and_then(|t| t.evolve.as_ref()).unwrap();
            let op = operator_for(config)?;
            run_evolve(&op, task, config.seed, &mut files)?
        }
        TaskKind::Velocity => {
            let task = config.task.as_ref().and_then(|t| t.velocity.as_ref()).unwrap();
            let op = operator_for(config)?;
            run_velocity(&op, task, config.seed, &mut files)?
        }
        TaskKind::Verify => {
            let task = config
                .task
                .as_ref()
                .and_then(|t| t.verify.as_ref())
                .cloned()
                .unwrap_or_default();
            let names: Vec<String> = if task.suites.is_empty() {
                SUITE_NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                task.suites.clone()
            };
            let reports = run_suites(&names, config.seed, task.tolerance_scale)?;

            let mut csv = String::from("suite,assertion,measured,bound,kind,pass\n");
            let mut failures = 0usize;
            for report in &reports {
                for a in &report.assertions {
                    let kind = match a.kind {
                        BoundKind::AtMost => "at_most",
                        BoundKind::AtLeast => "at_least",
                    };
                    writeln!(
                        csv,
                        "{},{},{:e},{:e},{kind},{}",
                        csv_text(&report.suite),
                        csv_text(&a.name),
                        a.measured,
                        a.bound,
                        a.pass
                    )
                    .unwrap();
                    if !a.pass {
                        failures += 1;
                    }
                    assertions.push(AssertionRow {
                        suite: report.suite.clone(),
                        name: a.name.clone(),
                        measured: a.measured,
                        bound: a.bound,
                        kind: kind.into(),
                        pass: a.pass,
                    });
                }
            }
            files.push(("verify.csv".into(), csv));
            TaskSummary::Verify {
                suites: reports.len(),
                assertions: assertions.len(),
                failures,
            }
        }
    };

    let passed = assertions.iter().all(|a| a.pass);
    let mut names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    names.push("run_report.json".into());
    let report = RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        files: names,
        summary,
        assertions,
    };
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| RunError::Io(format!("serializing run report: {e}")))?;
    json.push('\n');
    files.push(("run_report.json".into(), json));

    std::fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Io(format!("creating {}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    for (name, content) in &files {
        let path = out_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| RunError::Io(format!("writing {}: {e}", path.display())))?;
        written.push(path);
    }

    Ok(Outcome {
        assertions_passed: passed,
        files: written,
    })
}

fn run_evolve(
    op: &PeriodicJacobiOperator,
    task: &EvolveTask,
    seed: u64,
    files: &mut Vec<(String, String)>,
) -> Result<TaskSummary, RunError> {
    let d = op.dim();
    let times = &task.times;
    // Per time: mean_X per axis, optional total second moment (box only),
    // boundary mass, <P> per axis.
    let mut mean_x = vec![vec![0.0f64; d]; times.len()];
    let mut p_expect = vec![vec![0.0f64; d]; times.len()];
    let mut second_moment: Option<Vec<f64>> = None;
    let mut boundary = vec![0.0f64; times.len()];

    match task.geometry {
        GeometryKind::Box => {
            let radius = task.radius.as_ref().unwrap();
            let geometry = Geometry::box_with_radius(radius.clone())?;
            let psi0 = build_state(geometry, &task.state, seed)?;
            let plan = BoxPlan::new(op, radius)?;
            let mut m2 = vec![0.0f64; times.len()];
            for (i, &t) in times.iter().enumerate() {
                let at = plan.evolve(&psi0, t)?;
                for axis in 1..=d {
                    let (m1, m2_axis) = position_moments(&at, axis)?;
                    mean_x[i][axis - 1] = m1;
                    m2[i] += m2_axis;
                    p_expect[i][axis - 1] = at.inner(&op.apply_p(&at, axis)?)?.re;
                }
                boundary[i] = boundary_band_mass(&at)?;
            }
            second_moment = Some(m2);
        }
        GeometryKind::Torus => {
            let n_cells = task.n_cells.as_ref().unwrap();
            let geometry = Geometry::torus(n_cells.clone(), op.q().to_vec())?;
            let psi0 = build_state(geometry, &task.state, seed)?;
            let plan = TorusPlan::new(op, n_cells)?;
            for axis in 1..=d {
                let trace = plan.unwrapped_position_trace(&psi0, axis, times, task.h)?;
                for i in 0..times.len() {
                    mean_x[i][axis - 1] = trace.mean_x[i];
                    p_expect[i][axis - 1] = trace.p_expectation[i];
                }
            }
        }
    }

    let mut csv = String::from("t");
    for j in 1..=d {
        write!(csv, ",mean_X_{j}").unwrap();
    }
    for j in 1..=d {
        write!(csv, ",mean_X_over_t_{j}").unwrap();
    }
    if second_moment.is_some() {
        csv.push_str(",second_moment");
    }
    csv.push_str(",boundary_mass");
    for j in 1..=d {
        write!(csv, ",p_expectation_{j}").unwrap();
    }
    csv.push('\n');
    for (i, &t) in times.iter().enumerate() {
        write!(csv, "{t}").unwrap();
        for x in &mean_x[i] {
            write!(csv, ",{x:e}").unwrap();
        }
        for x in &mean_x[i] {
            write!(csv, ",{:e}", x / t).unwrap();
        }
        if let Some(m2) = &second_moment {
            write!(csv, ",{:e}", m2[i]).unwrap();
        }
        write!(csv, ",{:e}", boundary[i]).unwrap();
        for p in &p_expect[i] {
            write!(csv, ",{p:e}").unwrap();
        }
        csv.push('\n');
    }
    files.push(("trace.csv".into(), csv));

    Ok(TaskSummary::Evolve {
        rows: times.len(),
        final_mean_x: mean_x.last().cloned().unwrap_or_default(),
    })
}

fn run_velocity(
    op: &PeriodicJacobiOperator,
    task: &VelocityTask,
    seed: u64,
    files: &mut Vec<(String, String)>,
) -> Result<TaskSummary, RunError> {
    let geometry = Geometry::box_with_radius(task.box_radius.clone())?;
    let psi0 = build_state(geometry, &task.state, seed)?;
    let rows = ballistic_report(op, &psi0, task.axis, &task.times, &task.n_cells)?;

    let mut csv = String::from("t,strong_error,mean_error,q_mean,q_second_moment,boundary_mass\n");
    for row in &rows {
        writeln!(
            csv,
            "{},{:e},{:e},{:e},{:e},{:e}",
            row.t, row.strong_error, row.mean_error, row.q_mean, row.q_second_moment,
            row.boundary_mass
        )
        .unwrap();
    }
    files.push(("report.csv".into(), csv));

    let last = rows.last().expect("validated times are nonempty");
    Ok(TaskSummary::Velocity {
        q_mean: last.q_mean,
        q_second_moment: last.q_second_moment,
        final_strong_error: last.strong_error,
        final_mean_error: last.mean_error,
    })
}
