//! Experiment orchestration for `msqed run`.

use std::path::{Path, PathBuf};

use msqed::lorentz::{self, CoercivityInputs, SplitNorms};
use msqed::model::{estimate_relative_bound, hypothesis_report, HypothesisReport};
use msqed::solver::{self, Seeds};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ConfigError, ExperimentKind, RunConfig};
use crate::records::{self, Cell, Table};
use crate::suites;

/// Failure of a run, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    /// Violated hypotheses; `forceable` is false when the model cannot be built at all.
    Gate { violations: Vec<String>, forceable: bool },
    Solver(msqed::Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Gate { .. } => 3,
            Self::Solver(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(e) => write!(f, "configuration error: {e}"),
            Self::Gate { violations, forceable } => {
                write!(f, "hypotheses not met")?;
                if *forceable {
                    write!(f, " (use --force to run anyway)")?;
                }
                write!(f, ": {}", violations.join("; "))
            }
            Self::Solver(e) => write!(f, "solver failure: {e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

/// Files written by a run, relative to the output directory.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// Short human-readable summary for the terminal.
    pub summary: String,
}

struct Output {
    result: Value,
    tables: Vec<(String, Table)>,
    plots: Vec<(String, Table)>,
    summary: String,
    /// Set when artifacts are written but the run still counts as a solver failure.
    failure: Option<msqed::Error>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("records serialize to JSON")
}

/// Keys excluded from records so identical inputs give identical files.
const VOLATILE: [&str; 2] = ["wall_time", "seconds"];

pub fn run(cfg: &RunConfig, force: bool) -> Result<Artifacts, RunError> {
    let model = cfg.model().map_err(|e| match e {
        msqed::Error::Constraint(m) => RunError::Gate { violations: vec![m], forceable: false },
        e => RunError::Config(ConfigError { message: e.to_string(), line: None, column: None }),
    })?;
    let report = hypothesis_report(&model.potential, &model.cutoff);
    if !report.passes() && !force {
        return Err(RunError::Gate { violations: report.violations.clone(), forceable: true });
    }
    let mut opts = cfg.solver;
    opts.enforce_hypotheses = !force;
    let out = match cfg.experiment.kind {
        ExperimentKind::Minimize => minimize(&model, &opts)?,
        ExperimentKind::UvSweep => uv_sweep(cfg, &model, &opts)?,
        ExperimentKind::GSweep => g_sweep(cfg, &model, &opts)?,
        ExperimentKind::FockCheck => fock_check(cfg),
        ExperimentKind::LorentzReport => lorentz_report(cfg, &model, &report)?,
    };
    let config_json = records::to_json_string(cfg).map_err(|e| RunError::Io(e.into()))?;
    let mut record = json!({
        "tool": "msqed",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.kind.name(),
        "seed": cfg.seed,
        "config_sha256": records::sha256_hex(config_json.as_bytes()),
        "config": to_value(cfg),
        "hypotheses": to_value(&report),
        "forced": force && !report.passes(),
        "result": out.result,
    });
    if let Some(e) = &out.failure {
        record["error"] = Value::String(e.to_string());
    }
    records::strip_keys(&mut record, &VOLATILE);
    let dir = cfg.out.clone();
    let mut files = Vec::new();
    let text = records::to_json_string(&record).map_err(|e| RunError::Io(e.into()))?;
    write(&dir, Path::new("run.json"), text.as_bytes(), &mut files)?;
    for (sub, list) in [("tables", &out.tables), ("plotdata", &out.plots)] {
        for (name, table) in list {
            write(&dir, &Path::new(sub).join(format!("{name}.csv")), &table.to_csv()?, &mut files)?;
        }
    }
    if let Some(e) = out.failure {
        return Err(RunError::Solver(e));
    }
    Ok(Artifacts { dir, files, summary: out.summary })
}

fn write(dir: &Path, rel: &Path, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    records::write_atomic(&dir.join(rel), bytes)?;
    files.push(rel.to_path_buf());
    Ok(())
}

fn minimize(model: &msqed::model::ModelConfig, opts: &solver::SolverOptions) -> Result<Output, RunError> {
    let r = solver::minimize(model, &Seeds::default(), opts).map_err(RunError::Solver)?;
    let decay = solver::decay_fit(&r.u).ok();
    let mut history = Table::new(&["iteration", "energy"]);
    for (i, e) in r.history.iter().enumerate() {
        history.push(vec![(i + 1).into(), (*e).into()]);
    }
    let summary = format!(
        "E_V = {} (μ_V = {}), residual_A {:.3e}, residual_u {:.3e}, {} outer iterations",
        records::fmt_f64(r.energy),
        records::fmt_f64(r.mu_v),
        r.residual_a,
        r.residual_u,
        r.iterations
    );
    Ok(Output {
        result: json!({ "minimizer": to_value(&r), "decay": to_value(&decay) }),
        tables: Vec::new(),
        plots: vec![("energy_history".into(), history)],
        summary,
        failure: None,
    })
}

fn require_ladder(cfg: &RunConfig, what: &str) -> Result<Vec<f64>, RunError> {
    let l = cfg.experiment.ladder.clone();
    if l.is_empty() || l.windows(2).any(|w| !(w[1] > w[0])) || !(l[0] > 0.0) {
        return Err(RunError::Config(ConfigError {
            message: format!("experiment.ladder must list increasing positive {what}"),
            line: None,
            column: None,
        }));
    }
    Ok(l)
}

fn uv_sweep(cfg: &RunConfig, model: &msqed::model::ModelConfig, opts: &solver::SolverOptions) -> Result<Output, RunError> {
    let ladder = require_ladder(cfg, "cutoffs Λ")?;
    let s = solver::uv_sweep(model, &ladder, opts, cfg.experiment.slack).map_err(RunError::Solver)?;
    let mut table = Table::new(&["lambda", "energy", "iterations", "error"]);
    let mut plot = Table::new(&["lambda", "energy"]);
    for e in &s.entries {
        table.push(vec![
            e.lambda.into(),
            e.energy.into(),
            e.iterations.map_or(Cell::Empty, Cell::from),
            e.error.as_deref().map_or(Cell::Empty, Cell::from),
        ]);
        if let Some(en) = e.energy {
            plot.push(vec![e.lambda.into(), en.into()]);
        }
    }
    let failure = (!s.complete()).then(|| {
        msqed::Error::SolverStall(format!("{} of {} ladder members failed", s.entries.iter().filter(|e| e.energy.is_none()).count(), s.entries.len()))
    });
    let summary = format!(
        "{} cutoffs, monotone: {}, shrinking differences: {}, max increase {:.3e}",
        s.entries.len(),
        s.monotone,
        s.shrinking,
        s.max_increase
    );
    Ok(Output {
        result: to_value(&s),
        tables: vec![("uv_sweep".into(), table)],
        plots: vec![("energy_vs_lambda".into(), plot)],
        summary,
        failure,
    })
}

fn g_sweep(cfg: &RunConfig, model: &msqed::model::ModelConfig, opts: &solver::SolverOptions) -> Result<Output, RunError> {
    let ladder = require_ladder(cfg, "couplings g")?;
    let r = solver::expansion_fit(model, &ladder, opts).map_err(RunError::Solver)?;
    let mut table = Table::new(&[
        "g", "energy", "shift", "remainder", "phi_norm", "a_norm", "a_minus_a1", "omega_deviation", "residual_a", "residual_u",
        "iterations",
    ]);
    let mut plot = Table::new(&["log_g", "log_remainder", "log_phi", "log_a", "log_a_minus_a1", "log_omega_deviation"]);
    for s in &r.samples {
        table.push(vec![
            s.g.into(),
            s.energy.into(),
            s.shift.into(),
            s.remainder.into(),
            s.phi_norm.into(),
            s.a_norm.into(),
            s.a_minus_a1.into(),
            s.omega_deviation.into(),
            s.residual_a.into(),
            s.residual_u.into(),
            s.iterations.into(),
        ]);
        let ln = |x: f64| if x > 0.0 { Cell::Num(x.ln()) } else { Cell::Empty };
        plot.push(vec![
            s.g.ln().into(),
            ln(s.remainder),
            ln(s.phi_norm),
            ln(s.a_norm),
            ln(s.a_minus_a1),
            ln(s.omega_deviation),
        ]);
    }
    let summary = format!(
        "c₂ = {} (Richardson), remainder slope {}",
        records::fmt_f64(r.c2),
        r.remainder_slope.map_or("n/a".into(), |x| format!("{x:.3}"))
    );
    Ok(Output {
        result: to_value(&r),
        tables: vec![("g_sweep".into(), table)],
        plots: vec![("scaling_loglog".into(), plot)],
        summary,
        failure: None,
    })
}

fn fock_check(cfg: &RunConfig) -> Output {
    let mut rep = suites::run_criterion(7, cfg.seed);
    rep.checks.retain(|c| !c.name.starts_with("wall time"));
    let summary = format!("Fock oracle checks: {}", if rep.pass { "all pass" } else { "FAILURES" });
    Output { result: to_value(&rep), tables: Vec::new(), plots: Vec::new(), summary, failure: None }
}

fn lorentz_report(cfg: &RunConfig, model: &msqed::model::ModelConfig, report: &HypothesisReport) -> Result<Output, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let norms = SplitNorms::of(&model.cutoff);
    let constant = lorentz::estimate_smeared_product_constant(&model.cutoff, 40, &mut rng).map_err(RunError::Solver)?;
    let a = cfg.solver.assumed_a;
    let b = estimate_relative_bound(&model.potential, a).map_err(RunError::Solver)?.max(0.0);
    let inputs = CoercivityInputs {
        a,
        b,
        c: constant.constant,
        g: model.g,
        chi1_l2: norms.chi1_l2,
        chi2_weak: norms.chi2_weak,
        chi_sum: norms.sum(),
    };
    let (certificate, spot, refusal) = match lorentz::coercivity_certificate(inputs) {
        Ok(c) => {
            let s = lorentz::coercivity_spot_check(&c, model, 50, &mut rng).map_err(RunError::Solver)?;
            (Some(c), Some(s), None)
        }
        Err(e @ msqed::Error::Smallness(_)) => (None, None, Some(e.to_string())),
        Err(e) => return Err(RunError::Solver(e)),
    };
    let mut running = Table::new(&["sample", "ratio", "running_max"]);
    for (i, (r, m)) in constant.ratios.iter().zip(&constant.running_max).enumerate() {
        running.push(vec![(i + 1).into(), (*r).into(), (*m).into()]);
    }
    let summary = match (&certificate, &spot) {
        (Some(c), Some(s)) => format!(
            "‖χ₁/|k|‖ = {:.4}, ‖χ₂/|k|‖_(3,∞) = {:.4}, C ≈ {:.4}; certificate C₁ = {:.3e}, C₂ = {:.3}; spot checks {}/{}",
            norms.chi1_l2, norms.chi2_weak, constant.constant, c.c1, c.c2, s.passed, s.total
        ),
        _ => format!(
            "‖χ₁/|k|‖ = {:.4}, ‖χ₂/|k|‖_(3,∞) = {:.4}, C ≈ {:.4}; certificate refused: {}",
            norms.chi1_l2,
            norms.chi2_weak,
            constant.constant,
            refusal.as_deref().unwrap_or("")
        ),
    };
    Ok(Output {
        result: json!({
            "norms": to_value(&norms),
            "sum_norm_estimate": report.chi_over_k_sum,
            "constant_estimate": to_value(&constant),
            "relative_bound": { "a": a, "b": b },
            "certificate": to_value(&certificate),
            "spot_check": to_value(&spot),
            "refusal": refusal,
        }),
        tables: Vec::new(),
        plots: vec![("constant_running_max".into(), running)],
        summary,
        failure: None,
    })
}
