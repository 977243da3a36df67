//! Run configuration: a TOML document, dotted-key overrides, and the
//! resolution into library types.

use std::fmt;
use std::path::PathBuf;

use msqed::model::{build_cutoff, build_potential, CutoffKind, ModelConfig, PotentialKind, SplitRule};
use msqed::solver::SolverOptions;
use msqed::spectral::SpectralBox;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Minimize,
    UvSweep,
    GSweep,
    FockCheck,
    LorentzReport,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Minimize => "minimize",
            Self::UvSweep => "uv-sweep",
            Self::GSweep => "g-sweep",
            Self::FockCheck => "fock-check",
            Self::LorentzReport => "lorentz-report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub l: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub g: f64,
    /// UV restriction of `A` to `|k| ≤ lambda`.
    #[serde(default)]
    pub lambda: Option<f64>,
    pub potential: PotentialKind,
    pub cutoff: CutoffKind,
    #[serde(default = "default_split")]
    pub split: SplitRule,
}

fn default_split() -> SplitRule {
    SplitRule::Auto
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// Λ values for `uv-sweep`, couplings for `g-sweep`.
    #[serde(default)]
    pub ladder: Vec<f64>,
    /// Monotonicity slack of the UV sweep.
    #[serde(default = "default_slack")]
    pub slack: f64,
}

fn default_slack() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "box")]
    pub grid: BoxConfig,
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverOptions,
    pub experiment: ExperimentSection,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_out() -> PathBuf {
    PathBuf::from("msqed-out")
}

/// Configuration problem with an optional source position.
#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn plain(message: impl Into<String>) -> Self {
        Self { message: message.into(), line: None, column: None }
    }

    fn from_toml(src: &str, e: &toml::de::Error) -> Self {
        let (line, column) = match e.span() {
            Some(span) => {
                let before = &src[..span.start.min(src.len())];
                let line = before.matches('\n').count() + 1;
                let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
                (Some(line), Some(column))
            }
            None => (None, None),
        };
        Self { message: e.message().to_string(), line, column }
    }
}

/// Baseline document used when no `--config` is given.
pub const DEFAULT_CONFIG: &str = r#"seed = 0
out = "msqed-out"

[box]
l = 12.0
n = 32

[model]
g = 0.05
potential = { kind = "harmonic", omega0 = 1.0 }
cutoff = { kind = "sharp", lambda = 4.0 }

[experiment]
kind = "minimize"
"#;

/// Parameters filled in when a potential is selected by name alone.
pub fn potential_defaults(kind: &str) -> Option<toml::Table> {
    let src = match kind {
        "harmonic" => "kind = \"harmonic\"\nomega0 = 1.0",
        "soft-coulomb" => "kind = \"soft-coulomb\"\nc = 1.0",
        "spectral-coulomb" => "kind = \"spectral-coulomb\"\nc = 1.0",
        "gaussian-well" => "kind = \"gaussian-well\"\ndepth = 10.0\nwidth = 1.0",
        "zero" => "kind = \"zero\"",
        _ => return None,
    };
    Some(src.parse().expect("built-in potential table"))
}

/// Parameters filled in when a cutoff is selected by name alone.
pub fn cutoff_defaults(kind: &str) -> Option<toml::Table> {
    let src = match kind {
        "one" => "kind = \"one\"",
        "sharp" => "kind = \"sharp\"\nlambda = 4.0",
        "gaussian" => "kind = \"gaussian\"\nsigma = 2.0",
        _ => return None,
    };
    Some(src.parse().expect("built-in cutoff table"))
}

/// TOML value of an override: a TOML literal when it parses as one, otherwise a string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `key.path=value`.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::plain(format!("override `{assignment}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::plain(format!("override key `{key}` has an empty segment")));
    }
    let raw = raw.trim();
    // Named potentials and cutoffs expand to a full table.
    let value = match path.as_slice() {
        ["model", "potential"] => potential_defaults(raw).map(toml::Value::Table),
        ["model", "cutoff"] => cutoff_defaults(raw).map(toml::Value::Table),
        _ => None,
    }
    .unwrap_or_else(|| parse_value(raw));
    let mut table = doc;
    for seg in &path[..path.len() - 1] {
        let entry = table.entry(seg.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::plain(format!("override key `{key}`: `{seg}` is not a table")))?;
    }
    table.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

pub fn parse_document(src: &str) -> Result<toml::Table, ConfigError> {
    src.parse::<toml::Table>().map_err(|e| ConfigError::from_toml(src, &e))
}

/// Parses `src`, applies the overrides in order and deserializes the result.
pub fn load(src: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc = parse_document(src)?;
    // Without overrides, type errors keep their position in the original source.
    if overrides.is_empty() {
        return toml::from_str(src).map_err(|e| ConfigError::from_toml(src, &e));
    }
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let merged = toml::to_string(&doc).map_err(|e| ConfigError::plain(e.to_string()))?;
    toml::from_str(&merged).map_err(|e| {
        let mut err = ConfigError::from_toml(&merged, &e);
        err.message = format!("{} (after overrides)", err.message);
        err.line = None;
        err.column = None;
        err
    })
}

impl RunConfig {
    /// Grid, potential, cutoff and coupling.
    pub fn model(&self) -> msqed::Result<ModelConfig> {
        let grid = SpectralBox::new(self.grid.l, self.grid.n)?;
        let v = build_potential(&self.model.potential, &grid)?;
        let chi = build_cutoff(&self.model.cutoff, self.model.split, &grid)?;
        ModelConfig::new(v, chi, self.model.g, self.model.lambda)
    }
}
