//! Scenario files: parsing, defaults and semantic validation.

use std::path::Path;

use qtraj_core::diagnostics::GridSpec;
use qtraj_core::dynamics::{Law, SignAssignment};
use qtraj_core::geometry::{Cartesian, Chart, Polar};
use qtraj_core::rotor::AngularPoint;
use qtraj_core::states::{native_chart, parse_real_state, parse_two_vector_state, SharedReal, SharedTwoVector};
use serde::{Deserialize, Serialize};

pub const DEFAULT_HBAR: f64 = 1.0;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_MAX: f64 = 1.0;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_GRID_POINTS: usize = 200;
pub const DEFAULT_OUTPUT: &str = "out";

/// A scenario problem, reported with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.field.is_empty() || self.field == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ValidationError {}

fn invalid(field: &str, message: impl Into<String>) -> ValidationError {
    ValidationError {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawName {
    Einstein,
    Grommer,
    Flat,
    /// Particle positions carried with Euler angles; also accepted as `holland`.
    #[serde(alias = "holland")]
    Rotor,
}

impl LawName {
    pub fn trajectory_law(self) -> Option<Law> {
        match self {
            LawName::Einstein => Some(Law::Einstein),
            LawName::Grommer => Some(Law::Grommer),
            LawName::Flat => Some(Law::Flat),
            LawName::Rotor => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LawName::Einstein => "einstein",
            LawName::Grommer => "grommer",
            LawName::Flat => "flat",
            LawName::Rotor => "rotor",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartName {
    /// Mass-weighted Cartesian coordinates of the state.
    #[default]
    Native,
    Cartesian,
    Polar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticName {
    Coupling,
    Divergence,
    Coverage,
    Covariance,
    Ensemble,
    Dbb,
    Continuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub id: String,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    /// Start point in chart coordinates (or particle positions for `rotor`).
    #[serde(default)]
    pub q0: Vec<f64>,
    /// Branch signs; all `+1` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<i8>>,
    /// `(α, β, γ)` for `rotor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            t_max: DEFAULT_T_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probe {
    /// Evaluation points for pointwise diagnostics; `initial.q0` when empty.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    /// Angles paired with `points` for `continuity`.
    #[serde(default)]
    pub angles: Vec<[f64; 3]>,
    /// Time for `dbb` and `continuity`.
    #[serde(default)]
    pub time: f64,
    /// Coverage grid; the state's box at 200 cells per axis when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Second chart for `covariance`.
    #[serde(default = "default_compare_chart")]
    pub compare_chart: ChartName,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl Default for Probe {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            angles: Vec::new(),
            time: 0.0,
            grid: None,
            compare_chart: default_compare_chart(),
            samples: DEFAULT_SAMPLES,
            bins: DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub state: StateSection,
    #[serde(default)]
    pub chart: ChartName,
    pub law: LawName,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub diagnostics: Vec<DiagnosticName>,
    #[serde(default)]
    pub probe: Probe,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_hbar() -> f64 {
    DEFAULT_HBAR
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_compare_chart() -> ChartName {
    ChartName::Polar
}
fn default_output() -> String {
    DEFAULT_OUTPUT.to_string()
}

/// The model a scenario runs, resolved from its state id.
pub enum Model {
    Real { state: SharedReal, chart: Box<dyn Chart> },
    TwoVector { state: SharedTwoVector },
}

/// A validated scenario with its state and chart constructed.
pub struct Resolved {
    pub scenario: Scenario,
    pub model: Model,
}

impl Resolved {
    pub fn dim(&self) -> usize {
        match &self.model {
            Model::Real { state, .. } => state.dim(),
            Model::TwoVector { state } => state.dim(),
        }
    }

    pub fn signs(&self) -> SignAssignment {
        match &self.scenario.initial.signs {
            Some(s) => SignAssignment::new(s.clone()).expect("validated"),
            None => SignAssignment::positive(self.dim()),
        }
    }

    pub fn angles(&self) -> Option<AngularPoint> {
        self.scenario
            .initial
            .angles
            .map(|[a, b, g]| AngularPoint::new(a, b, g).expect("validated"))
    }

    /// Pointwise probe locations, defaulting to the start point.
    pub fn points(&self) -> Vec<Vec<f64>> {
        if self.scenario.probe.points.is_empty() {
            vec![self.scenario.initial.q0.clone()]
        } else {
            self.scenario.probe.points.clone()
        }
    }

    pub fn grid(&self) -> Option<GridSpec> {
        if let Some(g) = &self.scenario.probe.grid {
            return Some(g.clone());
        }
        let Model::Real { state, .. } = &self.model else {
            return None;
        };
        let domain = state.domain();
        Some(GridSpec {
            lower: domain.iter().map(|d| d.0).collect(),
            upper: domain.iter().map(|d| d.1).collect(),
            points: vec![DEFAULT_GRID_POINTS; domain.len()],
        })
    }
}

pub fn parse(text: &str) -> Result<Scenario, ValidationError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        invalid(&field, e.into_inner().to_string())
    })
}

pub fn load(path: &Path) -> Result<Scenario, ValidationError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid("", format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn build_chart(name: ChartName, state: &SharedReal) -> Result<Box<dyn Chart>, String> {
    let n = state.dim();
    let unit_masses = state.masses().iter().all(|&m| m == 1.0);
    match name {
        ChartName::Native => Ok(Box::new(native_chart(state.as_ref()))),
        ChartName::Cartesian if unit_masses => Ok(Box::new(Cartesian::new(n))),
        ChartName::Polar if unit_masses && n == 2 => Ok(Box::new(Polar)),
        ChartName::Polar if n != 2 => Err(format!("polar needs a two-coordinate state, got {n}")),
        _ => Err("plain charts need unit masses; use the native chart".into()),
    }
}

fn finite(field: &str, v: f64) -> Result<(), ValidationError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn check_point(field: &str, p: &[f64], n: usize) -> Result<(), ValidationError> {
    if p.len() != n {
        return Err(invalid(field, format!("expected {n} coordinates, got {}", p.len())));
    }
    p.iter().try_for_each(|&v| finite(field, v))
}

fn check_angles(field: &str, a: &[f64; 3]) -> Result<(), ValidationError> {
    AngularPoint::new(a[0], a[1], a[2])
        .map(|_| ())
        .map_err(|e| invalid(field, e.to_string()))
}

/// Semantic checks beyond the schema; constructs the state and chart.
pub fn resolve(scenario: Scenario) -> Result<Resolved, ValidationError> {
    let s = &scenario;
    if !(s.state.hbar > 0.0 && s.state.hbar.is_finite()) {
        return Err(invalid("state.hbar", "must be positive"));
    }
    if !(s.integrator.dt > 0.0 && s.integrator.dt.is_finite()) {
        return Err(invalid("integrator.dt", "must be positive"));
    }
    if !(s.integrator.t_max >= 0.0 && s.integrator.t_max.is_finite()) {
        return Err(invalid("integrator.t_max", "must be non-negative"));
    }
    finite("probe.time", s.probe.time)?;
    if s.probe.bins == 0 {
        return Err(invalid("probe.bins", "must be at least 1"));
    }
    if s.diagnostics.contains(&DiagnosticName::Ensemble) && s.probe.samples < 1000 {
        return Err(invalid("probe.samples", "ensembles need at least 1000 samples"));
    }
    if s.output.is_empty() {
        return Err(invalid("output", "must not be empty"));
    }

    let model = match s.law {
        LawName::Rotor => {
            if s.chart != ChartName::Native {
                return Err(invalid("chart", "the rotor law runs in particle coordinates only"));
            }
            let state = parse_two_vector_state(&s.state.id, s.state.hbar).map_err(|e| invalid("state.id", e.to_string()))?;
            for d in &s.diagnostics {
                if !matches!(d, DiagnosticName::Dbb | DiagnosticName::Continuity | DiagnosticName::Ensemble) {
                    return Err(invalid("diagnostics", format!("{d:?} does not apply to the rotor law").to_lowercase()));
                }
            }
            Model::TwoVector { state }
        }
        _ => {
            let state = parse_real_state(&s.state.id, s.state.hbar).map_err(|e| invalid("state.id", e.to_string()))?;
            let chart = build_chart(s.chart, &state).map_err(|m| invalid("chart", m))?;
            for d in &s.diagnostics {
                if matches!(d, DiagnosticName::Dbb | DiagnosticName::Continuity) {
                    return Err(invalid("diagnostics", format!("{d:?} applies to the rotor law only").to_lowercase()));
                }
            }
            if s.diagnostics.contains(&DiagnosticName::Covariance) {
                build_chart(s.probe.compare_chart, &state).map_err(|m| invalid("probe.compare_chart", m))?;
            }
            Model::Real { state, chart }
        }
    };
    let resolved = Resolved { scenario, model };
    let s = &resolved.scenario;
    let n = resolved.dim();
    check_point("initial.q0", &s.initial.q0, n)?;
    if let Some(signs) = &s.initial.signs {
        if signs.len() != n {
            return Err(invalid("initial.signs", format!("expected {n} signs, got {}", signs.len())));
        }
        SignAssignment::new(signs.clone()).map_err(|e| invalid("initial.signs", e.to_string()))?;
    }
    match (s.law, &s.initial.angles) {
        (LawName::Rotor, None) => return Err(invalid("initial.angles", "required for the rotor law")),
        (LawName::Rotor, Some(a)) => check_angles("initial.angles", a)?,
        (_, Some(_)) => return Err(invalid("initial.angles", "only the rotor law takes angles")),
        _ => {}
    }
    for (i, p) in s.probe.points.iter().enumerate() {
        check_point(&format!("probe.points[{i}]"), p, n)?;
    }
    for (i, a) in s.probe.angles.iter().enumerate() {
        check_angles(&format!("probe.angles[{i}]"), a)?;
    }
    if s.diagnostics.contains(&DiagnosticName::Continuity) && s.probe.angles.len() != resolved.points().len() {
        return Err(invalid("probe.angles", "continuity needs one angle triple per probe point"));
    }
    if let Some(g) = &s.probe.grid {
        g.validate().map_err(|e| invalid("probe.grid", e.to_string()))?;
        if g.dim() != n {
            return Err(invalid("probe.grid", format!("expected {n} axes, got {}", g.dim())));
        }
    }
    if s.diagnostics.contains(&DiagnosticName::Ensemble) && n != 1 {
        return Err(invalid("diagnostics", "ensemble comparison needs a one-coordinate state"));
    }
    Ok(resolved)
}
