//! Experiment configuration: the TOML schema, parsing with unknown-field
//! warnings, validation, and re-emission (`parse(emit(c)) == c`).

use bloch_core::{
    BlochError, Complex64, HoppingEntry, OperatorDescription, PeriodicJacobiOperator,
    PotentialEntry, SUITE_NAMES,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Seed for every pseudo-random choice a task makes (states, suites).
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

/// Either a builtin model name or an explicit description; see
/// [`OperatorSection::build`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct OperatorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Optional dimension; checked against `q` when both are given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub hopping: Vec<HoppingRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub potential: Vec<PotentialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingRecord {
    pub site: Vec<i64>,
    pub axis: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    pub site: Vec<i64>,
    pub value: f64,
}

/// Exactly one of the subtables must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TaskSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bands: Option<BandsTask>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveTask>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity: Option<VelocityTask>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyTask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsTask {
    pub n_cells: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Box,
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveTask {
    pub geometry: GeometryKind,
    /// Box half-side per axis (box geometry).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<Vec<i64>>,
    /// Cells per axis (torus geometry).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<Vec<usize>>,
    pub times: Vec<f64>,
    /// Quadrature step target for the unwrapped torus trace.
    #[serde(default = "default_h")]
    pub h: f64,
    pub state: StateSpec,
}

fn default_h() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityTask {
    /// Quadrature torus (cells per axis) for the `Q` observable.
    pub n_cells: Vec<usize>,
    /// Half-side of the dense evolution box.
    pub box_radius: Vec<i64>,
    #[serde(default = "default_axis")]
    pub axis: usize,
    pub times: Vec<f64>,
    pub state: StateSpec,
}

fn default_axis() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyTask {
    /// Suites to run; empty means all of them.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<String>,
    /// Multiplies every upper bound (and divides every lower bound);
    /// values below 1 tighten the suites.
    pub tolerance_scale: f64,
}

impl Default for VerifyTask {
    fn default() -> Self {
        VerifyTask {
            suites: Vec::new(),
            tolerance_scale: default_scale(),
        }
    }
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSpec {
    /// Point mass at `site`.
    Delta { site: Vec<i64> },
    /// Seeded complex Gaussian amplitudes on the centered ball of the given
    /// radius, normalized; the draw uses the config seed.
    Random { support: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Bands,
    Evolve,
    Velocity,
    Verify,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Bands => "bands",
            TaskKind::Evolve => "evolve",
            TaskKind::Velocity => "velocity",
            TaskKind::Verify => "verify",
        }
    }
}

impl TaskSection {
    pub fn kind(&self) -> Result<TaskKind, ConfigError> {
        let mut kinds = Vec::new();
        if self.bands.is_some() {
            kinds.push(TaskKind::Bands);
        }
        if self.evolve.is_some() {
            kinds.push(TaskKind::Evolve);
        }
        if self.velocity.is_some() {
            kinds.push(TaskKind::Velocity);
        }
        if self.verify.is_some() {
            kinds.push(TaskKind::Verify);
        }
        match kinds.as_slice() {
            [one] => Ok(*one),
            [] => Err(ConfigError::new(
                "task",
                "needs exactly one of bands / evolve / velocity / verify",
            )),
            many => Err(ConfigError::new(
                "task",
                format!(
                    "declares {} tasks ({}); exactly one is allowed",
                    many.len(),
                    many.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
                ),
            )),
        }
    }
}

/// Parse, warn about unrecognized fields, and validate. Warnings are
/// returned, not printed — the caller owns the terminal.
pub fn parse_config(text: &str) -> Result<(ExperimentConfig, Vec<String>), ConfigError> {
    let value: toml::Value = toml::from_str(text)
        .map_err(|e| ConfigError::new("<file>", e.message().to_string()))?;
    let mut warnings = Vec::new();
    collect_unknown(&value, "", &mut warnings);
    let config: ExperimentConfig = toml::from_str(text)
        .map_err(|e| ConfigError::new("<file>", e.message().to_string()))?;
    validate(&config)?;
    Ok((config, warnings))
}

/// Serialize back to TOML. `parse_config(emit(c)) == c` for any valid `c`.
pub fn emit(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("config serializes")
}

/// Key names allowed below each schema path (`[]` marks array elements).
fn schema_children(path: &str) -> Option<&'static [&'static str]> {
    Some(match path {
        "" => &["seed", "output", "operator", "task"],
        "output" => &["dir"],
        "operator" => &["builtin", "d", "q", "hopping", "potential"],
        "operator.hopping[]" => &["site", "axis", "re", "im"],
        "operator.potential[]" => &["site", "value"],
        "task" => &["bands", "evolve", "velocity", "verify"],
        "task.bands" => &["n_cells"],
        "task.evolve" => &["geometry", "radius", "n_cells", "times", "h", "state"],
        "task.velocity" => &["n_cells", "box_radius", "axis", "times", "state"],
        "task.evolve.state" | "task.velocity.state" => &["kind", "site", "support"],
        "task.verify" => &["suites", "tolerance_scale"],
        _ => return None,
    })
}

fn collect_unknown(value: &toml::Value, path: &str, out: &mut Vec<String>) {
    match value {
        toml::Value::Table(table) => {
            let Some(allowed) = schema_children(path) else {
                return;
            };
            for (key, child) in table {
                let child_path = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                if allowed.contains(&key.as_str()) {
                    collect_unknown(child, &child_path, out);
                } else {
                    out.push(format!("unknown config field `{child_path}`"));
                }
            }
        }
        toml::Value::Array(items) => {
            let elem_path = format!("{path}[]");
            if schema_children(&elem_path).is_some() {
                for item in items {
                    collect_unknown(item, &elem_path, out);
                }
            }
        }
        _ => {}
    }
}

fn check_times(field: &str, times: &[f64]) -> Result<(), ConfigError> {
    if times.is_empty() {
        return Err(ConfigError::new(field, "needs at least one time"));
    }
    let mut prev = 0.0f64;
    for &t in times {
        if !(t.is_finite() && t > 0.0) {
            return Err(ConfigError::new(field, format!("time {t} must be positive")));
        }
        if t <= prev {
            return Err(ConfigError::new(field, "times must be strictly ascending"));
        }
        prev = t;
    }
    Ok(())
}

fn check_extent<T: Copy + PartialOrd + Default + std::fmt::Display>(
    field: &str,
    values: &[T],
) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(ConfigError::new(field, "must not be empty"));
    }
    for &v in values {
        if v <= T::default() {
            return Err(ConfigError::new(field, format!("entry {v} must be positive")));
        }
    }
    Ok(())
}

fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    if let Some(op) = &config.operator {
        match (&op.builtin, &op.q) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "operator",
                    "give either `builtin` or an explicit description, not both",
                ));
            }
            (None, None) => {
                return Err(ConfigError::new(
                    "operator",
                    "needs `builtin` or an explicit description with `q`",
                ));
            }
            _ => {}
        }
        if let (Some(d), Some(q)) = (op.d, &op.q) {
            if d != q.len() {
                return Err(ConfigError::new(
                    "operator.d",
                    format!("dimension {d} disagrees with q of length {}", q.len()),
                ));
            }
        }
        if op.builtin.is_some() && (!op.hopping.is_empty() || !op.potential.is_empty()) {
            return Err(ConfigError::new(
                "operator",
                "hopping/potential records only apply to an explicit description",
            ));
        }
    }
    let Some(task) = &config.task else {
        return Ok(());
    };
    match task.kind()? {
        TaskKind::Bands => {
            let t = task.bands.as_ref().unwrap();
            check_extent("task.bands.n_cells", &t.n_cells)?;
        }
        TaskKind::Evolve => {
            let t = task.evolve.as_ref().unwrap();
            check_times("task.evolve.times", &t.times)?;
            if !(t.h.is_finite() && t.h > 0.0) {
                return Err(ConfigError::new("task.evolve.h", "step must be positive"));
            }
            match t.geometry {
                GeometryKind::Box => {
                    let radius = t.radius.as_ref().ok_or_else(|| {
                        ConfigError::new("task.evolve.radius", "required for box geometry")
                    })?;
                    check_extent("task.evolve.radius", radius)?;
                    if t.n_cells.is_some() {
                        return Err(ConfigError::new(
                            "task.evolve.n_cells",
                            "not used by box geometry",
                        ));
                    }
                }
                GeometryKind::Torus => {
                    let n_cells = t.n_cells.as_ref().ok_or_else(|| {
                        ConfigError::new("task.evolve.n_cells", "required for torus geometry")
                    })?;
                    check_extent("task.evolve.n_cells", n_cells)?;
                    if t.radius.is_some() {
                        return Err(ConfigError::new(
                            "task.evolve.radius",
                            "not used by torus geometry",
                        ));
                    }
                }
            }
            check_state("task.evolve.state", &t.state)?;
        }
        TaskKind::Velocity => {
            let t = task.velocity.as_ref().unwrap();
            check_extent("task.velocity.n_cells", &t.n_cells)?;
            check_extent("task.velocity.box_radius", &t.box_radius)?;
            check_times("task.velocity.times", &t.times)?;
            if t.axis == 0 {
                return Err(ConfigError::new("task.velocity.axis", "axes are 1-based"));
            }
            check_state("task.velocity.state", &t.state)?;
        }
        TaskKind::Verify => {
            let t = task.verify.as_ref().unwrap();
            for s in &t.suites {
                if !SUITE_NAMES.contains(&s.as_str()) {
                    return Err(ConfigError::new(
                        "task.verify.suites",
                        format!("unknown suite `{s}` (available: {})", SUITE_NAMES.join(", ")),
                    ));
                }
            }
            if !(t.tolerance_scale.is_finite() && t.tolerance_scale > 0.0) {
                return Err(ConfigError::new(
                    "task.verify.tolerance_scale",
                    "must be positive",
                ));
            }
        }
    }
    Ok(())
}

fn check_state(field: &str, state: &StateSpec) -> Result<(), ConfigError> {
    match state {
        StateSpec::Delta { site } => {
            if site.is_empty() {
                return Err(ConfigError::new(
                    format!("{field}.site"),
                    "must not be empty",
                ));
            }
        }
        StateSpec::Random { support } => {
            if *support < 0 {
                return Err(ConfigError::new(
                    format!("{field}.support"),
                    "must be nonnegative",
                ));
            }
        }
    }
    Ok(())
}

impl OperatorSection {
    /// Build the operator this section describes. Explicit descriptions get
    /// the schema defaults first — any `(site, axis)` bond not listed is
    /// `a = 1`, any unlisted site has `b = 0` — and are then validated.
    pub fn build(&self) -> Result<PeriodicJacobiOperator, ConfigError> {
        if let Some(name) = &self.builtin {
            return bloch_core::builtin(name).map_err(|e| match e {
                BlochError::Invalid(reason) => ConfigError::new("operator.builtin", reason),
                other => ConfigError::new("operator.builtin", other.to_string()),
            });
        }
        let q = self.q.clone().expect("validated");
        let d = q.len();
        let mut hoppings: Vec<HoppingEntry> = self
            .hopping
            .iter()
            .map(|h| HoppingEntry {
                site: h.site.clone(),
                axis: h.axis,
                value: Complex64::new(h.re, h.im),
            })
            .collect();
        // Schema default: bonds not mentioned are 1.
        if q.iter().all(|&qj| qj >= 1) {
            let cells: usize = q.iter().map(|&qj| qj as usize).product();
            for cell in 0..cells {
                let site = cell_site(cell, &q);
                for axis in 1..=d {
                    let described = hoppings
                        .iter()
                        .any(|h| h.site == site && h.axis == axis);
                    if !described {
                        hoppings.push(HoppingEntry {
                            site: site.clone(),
                            axis,
                            value: Complex64::new(1.0, 0.0),
                        });
                    }
                }
            }
        }
        let desc = OperatorDescription {
            q,
            hoppings,
            potential: self
                .potential
                .iter()
                .map(|p| PotentialEntry {
                    site: p.site.clone(),
                    value: Complex64::new(p.value, 0.0),
                })
                .collect(),
        };
        desc.build()
            .map_err(|report| ConfigError::new("operator", report.to_string()))
    }
}

fn cell_site(mut cell: usize, q: &[i64]) -> Vec<i64> {
    let mut site = vec![0i64; q.len()];
    for j in (0..q.len()).rev() {
        let qj = q[j] as usize;
        site[j] = (cell % qj) as i64;
        cell /= qj;
    }
    site
}
