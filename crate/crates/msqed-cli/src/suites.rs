//! Acceptance criteria as runnable suites. Each criterion returns measured
//! values against tolerances; `verify` and the acceptance test share them.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use msqed::energy::{self, ims_check, ImsMode, PauliOperator, FIELD_PREFACTOR};
use msqed::fock::{self, PhiPrefactor, PhotonMode, TruncatedFock};
use msqed::lorentz::{self, CoercivityInputs, Inequality, SplitNorms};
use msqed::model::{
    build_cutoff, build_potential, estimate_relative_bound, kramers_conjugate, CutoffKind, Localizer, ModelConfig,
    PotentialKind, SpinorField, SplitRule, VectorPotential,
};
use msqed::solver::{self, Seeds, SolverOptions};
use msqed::spectral::{self, random_band_limited, random_band_limited_vector, SpectralBox};
use msqed::{Error, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `measured ≤ bound`.
    AtMost,
    /// `measured ≥ bound`.
    AtLeast,
    /// `|measured - target| ≤ tol`.
    Within,
    /// Logical condition, measured is 1 or 0.
    Holds,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub bound: f64,
    /// Target for [`Relation::Within`].
    pub target: Option<f64>,
    pub pass: bool,
    /// Reported but not part of the verdict.
    pub informational: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub budget_seconds: f64,
    pub wall_time: f64,
}

#[derive(Default)]
struct Builder {
    checks: Vec<Check>,
    notes: Vec<String>,
}

impl Builder {
    fn push(&mut self, name: impl Into<String>, measured: f64, relation: Relation, bound: f64, target: Option<f64>, info: bool) {
        let pass = match relation {
            Relation::AtMost => measured <= bound,
            Relation::AtLeast => measured >= bound,
            Relation::Within => (measured - target.unwrap_or(0.0)).abs() <= bound,
            Relation::Holds => measured == 1.0,
        };
        self.checks.push(Check { name: name.into(), measured, relation, bound, target, pass, informational: info });
    }
    fn at_most(&mut self, name: impl Into<String>, measured: f64, bound: f64) {
        self.push(name, measured, Relation::AtMost, bound, None, false);
    }
    fn at_least(&mut self, name: impl Into<String>, measured: f64, bound: f64) {
        self.push(name, measured, Relation::AtLeast, bound, None, false);
    }
    fn within(&mut self, name: impl Into<String>, measured: f64, target: f64, tol: f64) {
        self.push(name, measured, Relation::Within, tol, Some(target), false);
    }
    fn holds(&mut self, name: impl Into<String>, cond: bool) {
        self.push(name, cond as u8 as f64, Relation::Holds, 1.0, None, false);
    }
    fn info_within(&mut self, name: impl Into<String>, measured: f64, target: f64, tol: f64) {
        self.push(name, measured, Relation::Within, tol, Some(target), true);
    }
    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
    /// Records a failed computation as a failing check.
    fn failed(&mut self, name: impl Into<String>, e: &Error) {
        self.note(format!("{}: {e}", name.into()));
        self.push("computation completed", 0.0, Relation::Holds, 1.0, None, false);
    }
}

pub const CRITERIA: [(u8, &str, f64); 9] = [
    (1, "identity suite", 60.0),
    (2, "baseline spectrum", 120.0),
    (3, "minimizer optimality", 600.0),
    (4, "UV limit", 1200.0),
    (5, "small-coupling expansion", 1800.0),
    (6, "uniqueness of A given u", 300.0),
    (7, "Fock oracle suite", 60.0),
    (8, "Lorentz suite", 120.0),
    (9, "gap check", 600.0),
];

/// Criteria run by a named suite.
pub fn suite_criteria(name: &str) -> Option<Vec<u8>> {
    Some(match name {
        "identities" => vec![1],
        "baseline" => vec![2],
        "optimality" => vec![3],
        "uv" => vec![4],
        "expansion" => vec![5],
        "uniqueness" => vec![6],
        "fock" => vec![7],
        "lorentz" => vec![8],
        "gap" => vec![9],
        "all" => (1..=9).collect(),
        _ => return None,
    })
}

pub const SUITES: [&str; 10] =
    ["identities", "baseline", "optimality", "uv", "expansion", "uniqueness", "fock", "lorentz", "gap", "all"];

pub fn run_criterion(id: u8, seed: u64) -> CriterionReport {
    let (_, title, budget) = CRITERIA[(id - 1) as usize];
    let start = Instant::now();
    let mut b = Builder::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(id as u64));
    match id {
        1 => identities(&mut b, &mut rng),
        2 => baseline(&mut b),
        3 => optimality(&mut b, &mut rng),
        4 => uv_limit(&mut b),
        5 => expansion(&mut b),
        6 => uniqueness(&mut b, &mut rng),
        7 => fock_suite(&mut b, &mut rng),
        8 => lorentz_suite(&mut b, &mut rng),
        9 => gap(&mut b),
        _ => unreachable!("criterion ids are 1..=9"),
    }
    let wall_time = start.elapsed().as_secs_f64();
    b.push("wall time [s]", wall_time, Relation::AtMost, budget, None, true);
    let pass = b.checks.iter().filter(|c| !c.informational).all(|c| c.pass);
    CriterionReport { id, title: title.into(), pass, checks: b.checks, notes: b.notes, budget_seconds: budget, wall_time }
}

/// One line per criterion plus indented detail lines.
pub fn render(r: &CriterionReport) -> String {
    let mut s = format!("{} criterion {}: {}\n", if r.pass { "PASS" } else { "FAIL" }, r.id, r.title);
    for c in &r.checks {
        let rel = match c.relation {
            Relation::AtMost => format!("<= {:.3e}", c.bound),
            Relation::AtLeast => format!(">= {:.3e}", c.bound),
            Relation::Within => format!("within {:.3e} of {:.6e}", c.bound, c.target.unwrap_or(0.0)),
            Relation::Holds => "holds".into(),
        };
        let tag = if c.informational { "info" } else if c.pass { "ok" } else { "FAIL" };
        let value = if c.relation == Relation::Holds {
            (c.measured == 1.0).to_string()
        } else {
            format!("{:.6e}", c.measured)
        };
        s.push_str(&format!("    [{tag}] {}: {value} ({rel})\n", c.name));
    }
    for n in &r.notes {
        s.push_str(&format!("    note: {n}\n"));
    }
    s
}

fn model(n: usize, l: f64, g: f64, v: PotentialKind, chi: CutoffKind) -> msqed::Result<ModelConfig> {
    let grid = SpectralBox::new(l, n)?;
    let p = build_potential(&v, &grid)?;
    let c = build_cutoff(&chi, SplitRule::Auto, &grid)?;
    ModelConfig::new(p, c, g, None)
}

fn harmonic() -> PotentialKind {
    PotentialKind::Harmonic { omega0: 1.0 }
}

fn random_spinor<R: Rng>(grid: &Arc<SpectralBox>, band: usize, rng: &mut R) -> SpinorField {
    let up = random_band_limited(grid, band, rng);
    let down = random_band_limited(grid, band, rng);
    SpinorField::from_components(&up, &down).expect("same grid").normalized().expect("nonzero spinor")
}

macro_rules! attempt {
    ($b:expr, $name:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $b.failed($name, &err);
                return;
            }
        }
    };
}

// Criterion 1.

fn identities(b: &mut Builder, rng: &mut ChaCha8Rng) {
    // Band 2 of N = 16 keeps every product in the energy free of aliasing.
    let cfg = attempt!(b, "model", model(16, 6.0, 0.37, harmonic(), CutoffKind::Gaussian { sigma: 2.5 }));
    let grid = cfg.grid.clone();
    let mut pauli_worst: f64 = 0.0;
    let mut operator_worst: f64 = 0.0;
    let mut kramers_worst: f64 = 0.0;
    let mut cutoff_worst: f64 = 0.0;
    for _ in 0..50 {
        let u = random_spinor(&grid, 2, rng);
        let scale = rng.random_range(0.5..5.0);
        let a = VectorPotential::project(&random_band_limited_vector(&grid, 2, rng)).scale(scale);
        let e = attempt!(b, "energy", energy::energy(&u, &a, &cfg)).total;
        let p = attempt!(b, "Pauli form", energy::pauli_form_energy(&u, &a, &cfg));
        pauli_worst = pauli_worst.max((p - e).abs() / e.abs());
        let h = attempt!(b, "operator", PauliOperator::new(&cfg, &a));
        let q = attempt!(b, "operator", h.expectation(&u));
        operator_worst = operator_worst.max((q - e).abs() / e.abs());
        let (ku, ka) = kramers_conjugate(&u, &a);
        let ek = attempt!(b, "Kramers", energy::energy(&ku, &ka, &cfg)).total;
        kramers_worst = kramers_worst.max((ek - e).abs() / e.abs());
        let lambda = rng.random_range(1.0..4.0);
        let cut = cfg.with_lambda(Some(lambda));
        let lhs = attempt!(b, "cutoff energy", energy::energy_cutoff(&u, &a, &cut)).total;
        let low = a.band_limited(lambda);
        let high = attempt!(b, "cutoff split", a.axpy(-1.0, &low));
        let rhs = attempt!(b, "cutoff energy", energy::energy(&u, &low, &cfg)).total
            + FIELD_PREFACTOR * high.h1_norm().powi(2);
        cutoff_worst = cutoff_worst.max((lhs - rhs).abs() / lhs.abs());
    }
    b.at_most("Pauli form vs five-term energy, max rel. over 50 states", pauli_worst, 1e-10);
    b.at_most("operator expectation vs five-term energy, max rel.", operator_worst, 1e-10);
    b.at_most("Kramers energy invariance, max rel.", kramers_worst, 1e-12);
    b.at_most("UV-restricted energy identity, max rel.", cutoff_worst, 1e-12);

    let grid8 = attempt!(b, "grid", SpectralBox::new(8.0, 16));
    let loc = attempt!(b, "localizer", Localizer::new(grid8.l() / 4.0, &grid8)).sample(&grid8);
    let mut ims_worst: f64 = 0.0;
    for _ in 0..10 {
        let u = random_spinor(&grid8, 3, rng);
        let a = random_band_limited_vector(&grid8, 3, rng).scale(5.0);
        let r = attempt!(b, "IMS", ims_check(&u, &a, &loc, ImsMode::ProductRule));
        ims_worst = ims_worst.max(r.relative);
    }
    b.at_most("magnetic IMS identity, max rel. residual", ims_worst, 1e-10);

    let mut idem: f64 = 0.0;
    let mut adj: f64 = 0.0;
    for _ in 0..10 {
        let f = random_band_limited_vector(&grid, 7, rng);
        let g = random_band_limited_vector(&grid, 7, rng);
        let pf = spectral::leray_project(&f);
        let ppf = spectral::leray_project(&pf);
        idem = idem.max(attempt!(b, "Leray", ppf.axpy(-1.0, &pf)).norm() / f.norm());
        let pg = spectral::leray_project(&g);
        let l = attempt!(b, "Leray", pf.inner(&g));
        let r = attempt!(b, "Leray", f.inner(&pg));
        adj = adj.max((l - r).abs() / (f.norm() * g.norm()));
    }
    b.at_most("Leray idempotence, max rel.", idem, 1e-12);
    b.at_most("Leray self-adjointness, max rel.", adj, 1e-12);
}

// Criterion 2.

/// Lowest eigenvalue of `-d²/dx² + x²` on the one-dimensional Nyquist-free
/// grid space, assembled densely in the plane-wave basis.
pub fn harmonic_1d_grid_oracle(l: f64, n: usize) -> f64 {
    let dx = l / n as f64;
    let dk = 2.0 * PI / l;
    let modes: Vec<i64> = (0..n as i64).filter(|&m| m != n as i64 / 2).map(|m| if m < n as i64 / 2 { m } else { m - n as i64 }).collect();
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 - (n / 2) as f64) * dx).collect();
    let d = modes.len();
    let h = DMatrix::<C64>::from_fn(d, d, |r, c| {
        let mut v = C64::default();
        let q = (modes[c] - modes[r]) as f64 * dk;
        for x in &xs {
            v += C64::from_polar(x * x, q * x);
        }
        v /= n as f64;
        if r == c {
            v += (modes[r] as f64 * dk).powi(2);
        }
        v
    });
    let eig = nalgebra::SymmetricEigen::new(h);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn baseline(b: &mut Builder) {
    let (n, l) = (64, 14.0);
    let cfg = attempt!(b, "model", model(n, l, 0.0, harmonic(), CutoffKind::Sharp { lambda: 8.0 }));
    let r = attempt!(b, "minimize", solver::minimize(&cfg, &Seeds::default(), &SolverOptions::default()));
    let oracle = 3.0 * harmonic_1d_grid_oracle(l, n);
    b.within("E_V vs tensor-Hermite grid oracle", r.energy, oracle, 1e-6);
    b.within("E_V vs continuum value 3ω₀", r.energy, 3.0, 1e-6);
    b.holds("minimizer A ≡ 0", r.a_h1 == 0.0);
    b.within("E_V = μ_V", r.energy, r.mu_v, 1e-10);
}

// Criterion 3.

fn optimality(b: &mut Builder, rng: &mut ChaCha8Rng) {
    let cfg = attempt!(b, "model", model(48, 12.0, 0.1, harmonic(), CutoffKind::Sharp { lambda: 8.0 }));
    let r = attempt!(b, "minimize", solver::minimize(&cfg, &Seeds::default(), &SolverOptions::default()));
    b.at_most("residual_A (Ḣ¹)", r.residual_a, 1e-7);
    b.at_most("residual_u", r.residual_u, 1e-7);
    b.at_most("‖virial‖", r.virial_norm, 1e-6);
    let probe = attempt!(b, "perturbations", solver::optimality_probe(&r, &cfg, 20, 1e-3, rng));
    b.at_least("min energy change over 20 perturbations of size 1e-3", probe.min_delta, -1e-8);
    b.note(format!("E = {:.12}, μ_V = {:.12}, {} outer iterations", r.energy, r.mu_v, r.iterations));
    for w in &r.warnings {
        b.note(format!("solver warning: {w}"));
    }
}

// Criterion 4.

pub const UV_LADDER: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

pub fn uv_model() -> msqed::Result<ModelConfig> {
    model(48, 8.0, 0.1, harmonic(), CutoffKind::One)
}

fn uv_limit(b: &mut Builder) {
    let cfg = attempt!(b, "model", uv_model());
    let s = attempt!(b, "sweep", solver::uv_sweep(&cfg, &UV_LADDER, &SolverOptions::default(), 1e-8));
    b.holds("all ladder members converged", s.complete());
    for e in &s.entries {
        match (e.energy, &e.error) {
            (Some(x), _) => b.note(format!("Λ = {}: E = {x:.12}", e.lambda)),
            (None, Some(err)) => b.note(format!("Λ = {}: {err}", e.lambda)),
            _ => {}
        }
    }
    if s.complete() {
        b.at_most("max increase E_{Λ_{i+1}} - E_{Λ_i}", s.max_increase, 1e-8);
        let d = &s.differences;
        b.holds("|E_16 - E_8| < |E_8 - E_4|", d.len() == 3 && d[2] < d[1]);
        b.note(format!("successive differences {d:?}"));
    }
}

// Criterion 5.

pub const G_LADDER: [f64; 3] = [0.02, 0.04, 0.08];

pub fn expansion_model() -> msqed::Result<ModelConfig> {
    model(32, 10.0, 0.0, harmonic(), CutoffKind::Gaussian { sigma: 2.0 })
}

fn expansion(b: &mut Builder) {
    let cfg = attempt!(b, "model", expansion_model());
    let r = attempt!(b, "expansion", solver::expansion_fit(&cfg, &G_LADDER, &SolverOptions::default()));
    b.within("|c₂| / ((32/3)π³∫(χ̂*u_V²)²)", r.ratio_literal, 1.0, 0.1);
    let slope = |x: Option<f64>| x.unwrap_or(f64::NAN);
    b.within("remainder log-log slope", slope(r.remainder_slope), 4.0, 0.5);
    b.within("‖φ_gs‖ slope", slope(r.phi_slope), 2.0, 0.3);
    b.within("‖A_gs‖ slope", slope(r.a_slope), 1.0, 0.2);
    b.within("‖A_gs - A^[1]‖ slope", slope(r.a_minus_a1_slope), 3.0, 0.5);
    b.within("| |ω_gs|² - 1 | slope", slope(r.omega_slope), 4.0, 0.5);
    b.info_within("c₂ / (-(16/3)π³(∫(χ̂*u_V²)² - χ(0)²/L³))", r.ratio_second_order, 1.0, 0.1);
    b.info_within("c₂ / (-‖A^[1]/g‖²_{Ḣ¹}/(32π³))", r.ratio_rs, 1.0, 0.1);
    b.note(format!(
        "c₂ = {:.10} (sign {}), least-squares c₂ = {:.10}, c₄ = {:.6}",
        r.c2, r.c2_sign, r.c2_lsq, r.c4_lsq
    ));
    b.note(format!(
        "literal prediction magnitude {:.10}; torus second-order prediction {:.10}",
        r.predicted_literal, r.predicted_second_order
    ));
}

// Criterion 6.

fn uniqueness(b: &mut Builder, rng: &mut ChaCha8Rng) {
    let cfg = attempt!(b, "model", model(32, 12.0, 0.05, harmonic(), CutoffKind::Sharp { lambda: 4.0 }));
    let opts = SolverOptions::default();
    let r = attempt!(b, "minimize", solver::minimize(&cfg, &Seeds::default(), &opts));
    let seeds: Vec<VectorPotential> = (0..2)
        .map(|_| {
            let size = rng.random_range(0.5..2.0) * r.a_h1.max(1.0);
            solver::random_vector_potential(&cfg, cfg.grid.n() / 4, size, rng)
        })
        .collect();
    let seed_gap = attempt!(b, "seeds", seeds[0].distance_h1(&seeds[1]));
    let p = attempt!(b, "uniqueness", solver::uniqueness_probe(&r.u, &cfg, &seeds, &opts, 1e-10));
    b.at_most("Ḣ¹ distance between fixed points", p.max_distance, 1e-7);
    b.at_most("fixed-point residuals", p.residuals.iter().copied().fold(0.0, f64::max), 1e-9);
    b.note(format!("seed distance {seed_gap:.3e}, sampled Lipschitz constant {:.3e}", p.lipschitz));
}

// Criterion 7.

fn random_amplitudes<R: Rng>(m: usize, scale: f64, rng: &mut R) -> Vec<C64> {
    (0..m).map(|_| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))).collect()
}

fn fock_suite(b: &mut Builder, rng: &mut ChaCha8Rng) {
    let space = attempt!(b, "Fock space", TruncatedFock::new(3, 11));
    let omega = [0.5, 1.0, 3.0];
    let mut eig_worst: f64 = 0.0;
    let mut bound_worst: f64 = 0.0;
    let mut dg_worst: f64 = 0.0;
    let mut phi_worst: f64 = 0.0;
    let mut verdicts = Vec::new();
    for _ in 0..20 {
        let f = random_amplitudes(3, 0.25, rng);
        let h = random_amplitudes(3, 1.0, rng);
        let e = attempt!(b, "coherent eigenvector", fock::coherent_eigen_check(&space, &f, &h, 1e-8));
        eig_worst = eig_worst.max(e.residual - e.bound);
        bound_worst = bound_worst.max(e.bound);
        let x = attempt!(b, "expectations", fock::coherent_expectation_check(&space, &f, &h, &omega, 1e-8));
        // Dense products carry roundoff on top of the truncation error.
        let allowance = |b: f64| x.tail + 1e-12 * b.abs().max(1.0);
        dg_worst = dg_worst.max((x.d_gamma - x.d_gamma_expected).abs() - allowance(x.d_gamma_expected));
        phi_worst = phi_worst.max((x.phi - x.phi_sqrt2).abs() - allowance(x.phi_sqrt2));
        verdicts.push(x.prefactor);
    }
    b.at_most("coherent eigenvalue residual minus tail bound", eig_worst, 0.0);
    b.at_most("tail bound at the configured cutoff", bound_worst, 1e-8);
    b.at_most("|⟨dΓ(ω)⟩ - ⟨f,ωf⟩| minus tail and roundoff", dg_worst, 0.0);
    b.at_most("|⟨Φ(h)⟩ - √2 Re⟨h,f⟩| minus tail and roundoff", phi_worst, 0.0);
    let sqrt2 = verdicts.iter().all(|v| *v == PhiPrefactor::Sqrt2);
    b.holds("Φ prefactor adjudicated as √2 on every sample", sqrt2);
    b.note("Φ(h) = (a(h) + a*(h))/√2 gives ⟨Ψ_f, Φ(h) Ψ_f⟩ = √2 Re⟨h,f⟩; the factor 2 is rejected");

    let est_space = attempt!(b, "Fock space", TruncatedFock::new(3, 8));
    let states: Vec<_> = (0..200).map(|_| est_space.random_state(rng)).collect();
    let h = random_amplitudes(3, 1.0, rng);
    let r = attempt!(b, "estimates", fock::field_estimate_check(&est_space, &omega, &h, &states));
    b.at_least("annihilation estimate min slack (200 states)", r.min_annihilation, -1e-12);
    b.at_least("creation estimate min slack (200 states)", r.min_creation, -1e-12);

    let cfg = attempt!(b, "model", model(8, 6.0, 0.1, harmonic(), CutoffKind::One));
    let u = random_spinor(&cfg.grid, 1, rng);
    let g = &cfg.grid;
    let modes = [
        PhotonMode { index: g.index(1, 0, 0), polarization: [0.0, 0.0, 1.0] },
        PhotonMode { index: g.index(7, 0, 0), polarization: [0.0, 1.0, 0.0] },
        PhotonMode { index: g.index(0, 1, 1), polarization: [1.0, 0.0, 0.0] },
    ];
    let amps = [C64::new(0.2, 0.0), C64::new(0.05, -0.1), C64::new(0.0, 0.15)];
    let t = attempt!(b, "tiny reduction", fock::tiny_reduction_check(&u, &amps, &modes, &cfg, 8));
    b.at_most("tiny reduction discrepancy", t.discrepancy, 1e-6);
    b.note(format!("tiny reduction: exact {:.12}, formula {:.12}, tail {:.3e}", t.exact, t.formula, t.tail));
}

// Criterion 8.

fn lorentz_suite(b: &mut Builder, rng: &mut ChaCha8Rng) {
    let grid = attempt!(b, "grid", SpectralBox::new(10.0, 32));
    let exact = (4.0 * PI / 3.0).powf(1.0 / 6.0);
    let est = attempt!(b, "weak norm", lorentz::power_law_weak_norm(&grid, 0.5, grid.band(), 6.0));
    b.within("‖|k|^{-1/2}‖_{L^{6,∞}} / (4π/3)^{1/6}", est / exact, 1.0, 0.03);

    let mut l22: f64 = 0.0;
    for _ in 0..20 {
        let vals: Vec<f64> = (0..500).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = attempt!(b, "L22", lorentz::lorentz_norm(&vals, 0.1, 2.0, 2.0));
        let c = lorentz::lp_norm(&vals, 0.1, 2.0);
        l22 = l22.max((a - c).abs() / c);
    }
    b.at_most("L^{2,2} vs L², max rel.", l22, 1e-10);

    let inf = f64::INFINITY;
    let cases: [(Inequality, (f64, f64), (f64, f64), (f64, f64), bool); 4] = [
        (Inequality::Holder, (4.0, 4.0), (4.0, 4.0), (2.0, 2.0), true),
        (Inequality::Holder, (3.0, inf), (6.0, 2.0), (2.0, 2.0), false),
        (Inequality::Young, (1.5, 4.0), (1.5, 4.0), (3.0, 2.0), false),
        (Inequality::Young, (1.2, 2.0), (2.0, 2.0), (3.0, 1.0), false),
    ];
    let sgrid = attempt!(b, "grid", SpectralBox::new(8.0, 16));
    for (kind, e1, e2, e, unit) in cases {
        let r = attempt!(b, "sampler", lorentz::holder_young_sampler(kind, &sgrid, e1, e2, e, 40, rng));
        let min = r.slacks.iter().copied().fold(inf, f64::min);
        let label = format!("{kind:?} {e1:?}·{e2:?}→{e:?}");
        b.at_least(format!("{label} min slack"), min, 0.0);
        if unit {
            // On diagonal Lebesgue exponents the sharp constant is at most 1.
            b.at_most(format!("{label} empirical constant"), r.constant, 1.0 + 1e-12);
        } else {
            b.note(format!("{label} empirical constant {:.4}", r.constant));
        }
    }

    let cgrid = attempt!(b, "grid", SpectralBox::new(8.0, 16));
    let cut = attempt!(b, "cutoff", build_cutoff(&CutoffKind::One, SplitRule::Auto, &cgrid));
    let product_const = attempt!(b, "constant", lorentz::estimate_smeared_product_constant(&cut, 60, rng));
    let min_product = product_const.ratios.iter().map(|r| product_const.constant - r).fold(inf, f64::min);
    b.at_least("smeared-field product estimate min slack", min_product, 0.0);
    let cut_s = attempt!(b, "cutoff", build_cutoff(&CutoffKind::Sharp { lambda: 4.0 }, SplitRule::Auto, &cgrid));
    let mean_zero = attempt!(b, "mean-zero estimates", lorentz::mean_zero_estimates_check(&cut_s, 4.0, 40, rng));
    b.at_least("Ḣ^{-1} smeared density estimate min slack", mean_zero.min_slack_density, 0.0);
    b.at_least("band-limited product estimate min slack", mean_zero.min_slack_band, 0.0);
    b.note(format!("empirical constants: product {:.4}, density {:.4}, band product {:.4}", product_const.constant, mean_zero.c_density, mean_zero.c_band));

    // Coercivity on a well with a nontrivial relative bound.
    let g_small = 0.02;
    let pot = attempt!(b, "potential", build_potential(&PotentialKind::GaussianWell { depth: 2.0, width: 1.0 }, &cgrid));
    let a_rel = 0.5;
    let b_rel = attempt!(b, "relative bound", estimate_relative_bound(&pot, a_rel));
    let cfg = attempt!(b, "model", ModelConfig::new(pot, cut.clone(), g_small, None));
    let norms = SplitNorms::of(&cut);
    let inputs = CoercivityInputs {
        a: a_rel,
        b: b_rel.max(0.0),
        c: product_const.constant,
        g: g_small,
        chi1_l2: norms.chi1_l2,
        chi2_weak: norms.chi2_weak,
        chi_sum: norms.sum(),
    };
    let cert = attempt!(b, "certificate", lorentz::coercivity_certificate(inputs));
    let spot = attempt!(b, "spot check", lorentz::coercivity_spot_check(&cert, &cfg, 100, rng));
    b.within("coercivity spot checks passed of 100", spot.passed as f64, 100.0, 0.0);
    b.note(format!(
        "certificate g = {g_small}: smallness {:.4}, C₁ = {:.4e}, C₂ = {:.4}, threshold {:.1}, worst margin {:.4e}",
        cert.smallness, cert.c1, cert.c2, cert.threshold, spot.worst_margin
    ));
    let big = CoercivityInputs { g: 1.0, ..inputs };
    let refused = matches!(lorentz::coercivity_certificate(big), Err(Error::Smallness(_)));
    b.holds("certificate refused at g = 1", refused);
}

// Criterion 9.

fn gap(b: &mut Builder) {
    let cfg = attempt!(
        b,
        "model",
        model(32, 12.0, 0.05, PotentialKind::GaussianWell { depth: 10.0, width: 1.0 }, CutoffKind::Sharp { lambda: 4.0 })
    );
    let r = attempt!(b, "gap", solver::gap_check(&cfg, &SolverOptions::default()));
    // E_{V₁} ≥ 0 exactly; the allowance covers roundoff in a zero energy.
    b.at_most("μ_V", r.mu_v, -1e-6);
    b.at_most("E_V - μ_V", r.e_v - r.mu_v, 1e-12);
    b.at_least("E_{V₁}", r.e_v1, -1e-12);
    b.at_least("gap E_{V₁} - E_V", r.gap, 1e-6);
    b.holds("nontrivial split", !r.trivial_split);
    b.note(format!("E_V = {:.12}, μ_V = {:.12}, E_V1 = {:.3e}", r.e_v, r.mu_v, r.e_v1));
}
