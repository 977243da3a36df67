use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::eigen::{lobpcg, LobpcgOptions};
use crate::energy::{self, smear, EnergyBreakdown, PauliOperator, StateDensities, FIELD_PREFACTOR};
use crate::error::{Error, Result};
use crate::model::{hypothesis_report, kramers_conjugate, ModelConfig, Potential, SpinorField, VectorPotential};
use crate::spectral::{self, leray_project_dft, SpectralBox, VectorField};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SolverOptions {
    pub tol_eig: f64,
    /// Ḣ¹ tolerance on `A - RHS(A)`.
    pub tol_a: f64,
    pub tol_u: f64,
    /// Relative energy change below which a run without residual progress counts as stalled.
    pub tol_energy: f64,
    pub tol_vir: f64,
    pub max_outer: usize,
    pub max_eig_iter: usize,
    pub max_a_iter: usize,
    pub damping: f64,
    /// Constants `a` (relative bound of `V₋`) and `C` assumed for the smallness check.
    pub assumed_a: f64,
    pub assumed_c: f64,
    /// Refuse to run when the grid-level hypothesis report has violations.
    pub enforce_hypotheses: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_eig: 1e-8,
            tol_a: 1e-7,
            tol_u: 1e-7,
            tol_energy: 1e-10,
            tol_vir: 1e-6,
            max_outer: 500,
            max_eig_iter: 400,
            max_a_iter: 400,
            damping: 0.5,
            assumed_a: 1.0,
            assumed_c: 1.0,
            enforce_hypotheses: true,
        }
    }
}

/// Lowest eigenpair of the scalar operator `-Δ + V`, real and with positive sum.
#[derive(Clone, Debug)]
pub struct ScalarGroundState {
    pub mu: f64,
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl ScalarGroundState {
    /// `u_V ⊗ (1, 0)`.
    pub fn spin_up(&self, grid: &Arc<SpectralBox>) -> SpinorField {
        let n = grid.len();
        let mut s = SpinorField::zeros(grid);
        for i in 0..n {
            s.data[i] = C64::new(self.u[i], 0.0);
        }
        s
    }
}

fn kinetic_precond(grid: &SpectralBox, x: &[C64]) -> Vec<C64> {
    let n = grid.len();
    let mut out = x.to_vec();
    for chunk in out.chunks_mut(n) {
        grid.dft(chunk);
        // Zero at Nyquist so search directions stay in the Galerkin subspace.
        for (i, (z, k)) in chunk.iter_mut().zip(grid.k2()).enumerate() {
            *z = if grid.is_nyquist(i) { C64::default() } else { *z / (1.0 + k) };
        }
        grid.idft(chunk);
    }
    out
}

pub fn scalar_ground_state(v: &Potential, opts: &SolverOptions) -> Result<ScalarGroundState> {
    let grid = v.grid.clone();
    let apply = |x: &[C64]| -> Vec<C64> {
        let mut h = x.to_vec();
        grid.dft(&mut h);
        h.iter_mut().zip(grid.k2()).for_each(|(z, k)| *z *= k);
        grid.idft(&mut h);
        h.iter_mut().zip(x.iter().zip(&v.v)).for_each(|(z, (xi, vi))| *z += xi * vi);
        spectral::remove_nyquist(&grid, &mut h);
        h
    };
    let pre = |x: &[C64]| kinetic_precond(&grid, x);
    let width = grid.l() / 8.0;
    let mut seed: Vec<C64> = (0..grid.len())
        .map(|i| {
            let x = grid.x(i);
            C64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width)).exp(), 0.0)
        })
        .collect();
    spectral::remove_nyquist(&grid, &mut seed);
    let lo = LobpcgOptions { tol: opts.tol_eig, max_iter: opts.max_eig_iter, n_converge: 1 };
    let pair = lobpcg(&apply, &pre, vec![seed], &lo)?.remove(0);
    // Remove the arbitrary phase; the ground state of a real operator is real.
    let total: C64 = pair.vector.iter().sum();
    let phase = if total.norm() > 0.0 { total.conj() / total.norm() } else { C64::new(1.0, 0.0) };
    let mut u: Vec<f64> = pair.vector.iter().map(|z| (z * phase).re).collect();
    let nrm = spectral::dot_real(&u, &u, grid.w_x()).sqrt();
    u.iter_mut().for_each(|x| *x /= nrm);
    Ok(ScalarGroundState { mu: pair.value, u, residual: pair.residual, iterations: pair.iterations })
}

#[derive(Clone, Debug)]
pub struct EigenSolve {
    pub value: f64,
    pub u: SpinorField,
    pub residual: f64,
    pub iterations: usize,
    /// Second eigenvalue of the block, which resolves the Kramers partner.
    pub second: f64,
    pub degenerate: bool,
}

/// Lowest eigenpair of `h`, seeded with `u0` and its Kramers partner. The
/// phase is fixed so that `⟨reference, u⟩` is real and nonnegative; inside a
/// degenerate pair the returned vector is the projection of `reference`.
pub fn lowest_eigenpair(
    h: &PauliOperator,
    u0: &SpinorField,
    reference: &SpinorField,
    opts: &SolverOptions,
) -> Result<EigenSolve> {
    let grid = h.grid.clone();
    if !grid.same(&u0.grid) || !grid.same(&reference.grid) {
        return Err(Error::BoxMismatch);
    }
    let partner = kramers_conjugate(u0, &VectorPotential::zeros(&grid)).0;
    // Galerkin restriction to the Nyquist-free modes, where the kinetic symbol
    // has no spurious kernel.
    let apply = |x: &[C64]| {
        let mut y = h.apply_raw(x);
        spectral::remove_nyquist(&grid, &mut y);
        y
    };
    let mut seeds = vec![u0.data.clone(), partner.data];
    seeds.iter_mut().for_each(|s| spectral::remove_nyquist(&grid, s));
    let pre = |x: &[C64]| kinetic_precond(&grid, x);
    let lo = LobpcgOptions { tol: opts.tol_eig, max_iter: opts.max_eig_iter, n_converge: 2 };
    let pairs = lobpcg(&apply, &pre, seeds, &lo)?;
    let (l1, l2) = (pairs[0].value, pairs[1].value);
    let iterations = pairs[0].iterations;
    let degenerate = (l2 - l1).abs() < 1e-10 * l1.abs().max(1.0);
    let rf = &reference.data;
    let mut data = if degenerate {
        let mut acc = vec![C64::default(); rf.len()];
        for p in &pairs {
            let c: C64 = p.vector.iter().zip(rf).map(|(x, r)| x.conj() * r).sum();
            acc.iter_mut().zip(&p.vector).for_each(|(a, x)| *a += c * x);
        }
        if acc.iter().all(|z| z.norm() == 0.0) {
            pairs[0].vector.clone()
        } else {
            acc
        }
    } else {
        pairs[0].vector.clone()
    };
    let overlap: C64 = rf.iter().zip(&data).map(|(r, x)| r.conj() * x).sum();
    if overlap.norm() > 0.0 {
        let phase = overlap.conj() / overlap.norm();
        data.iter_mut().for_each(|z| *z *= phase);
    }
    let mut u = SpinorField::from_data(&grid, data)?;
    u.normalize()?;
    let hu = apply(&u.data);
    let value = u.inner(&SpinorField { grid: grid.clone(), data: hu.clone() })?.re;
    let residual = residual_norm(&u, &hu, value);
    Ok(EigenSolve { value, u, residual, iterations, second: l2, degenerate })
}

fn residual_norm(u: &SpinorField, hu: &[C64], value: f64) -> f64 {
    let r: Vec<C64> = hu.iter().zip(&u.data).map(|(h, x)| h - x * value).collect();
    spectral::norm_sqr(&r, u.grid.w_x()).sqrt()
}

/// Profile actually coupled to the field: `χ` or `χ·1_{|k|≤Λ}`.
pub fn active_profile(cfg: &ModelConfig) -> Vec<f64> {
    match cfg.lambda {
        Some(l) => cfg.cutoff.restricted(l),
        None => cfg.cutoff.chi.clone(),
    }
}

/// Right-hand side of the Euler-Lagrange equation for `A`,
/// `32π³ (-Δ)^{-1} g χ P[J + ½∇∧S - g ρ χ̂*A]`, and the relative Ḣ¹ size of
/// the part removed by the Leray projector `P`.
#[derive(Clone, Debug)]
pub struct ElRhs {
    pub rhs: VectorPotential,
    pub projector_effect: f64,
}

pub fn el_rhs(dens: &StateDensities, a: &VectorPotential, g: f64, chi: &[f64]) -> ElRhs {
    let grid = &dens.grid;
    let n = grid.len();
    if g == 0.0 {
        return ElRhs { rhs: VectorPotential::zeros(grid), projector_effect: 0.0 };
    }
    let at = smear(chi, &a.field);
    let mut w = [vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]];
    for j in 0..3 {
        for i in 0..n {
            let val = dens.current[j][i] + 0.5 * dens.curl_spin[j][i] - g * dens.rho[i] * at.comps[j][i];
            w[j][i] = C64::new(val, 0.0);
        }
        grid.dft(&mut w[j]);
    }
    let pref = 32.0 * PI * PI * PI * g;
    let k2 = grid.k2();
    for c in w.iter_mut() {
        for i in 0..n {
            c[i] = if k2[i] > 0.0 { c[i] * (pref * chi[i] / k2[i]) } else { C64::default() };
        }
    }
    let before: f64 = w.iter().map(|c| spectral::sobolev_sq_dft(grid, c, 1.0)).sum();
    let mut p = w.clone();
    leray_project_dft(grid, &mut p);
    let removed: f64 = (0..3)
        .map(|j| {
            let d: Vec<C64> = w[j].iter().zip(&p[j]).map(|(x, y)| x - y).collect();
            spectral::sobolev_sq_dft(grid, &d, 1.0)
        })
        .sum();
    let projector_effect = if before > 0.0 { (removed / before).sqrt() } else { 0.0 };
    ElRhs { rhs: VectorPotential { field: VectorField::from_dft(grid, p) }, projector_effect }
}

/// One damped step `(1-α)A + α RHS(A)`.
pub fn update_a(u: &SpinorField, a_prev: &VectorPotential, cfg: &ModelConfig, damping: f64) -> Result<VectorPotential> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping α = {damping} must lie in (0, 1]")));
    }
    let dens = StateDensities::new(u, &cfg.potential.v);
    let rhs = el_rhs(&dens, a_prev, cfg.g, &active_profile(cfg)).rhs;
    a_prev.scale(1.0 - damping).axpy(damping, &rhs)
}

fn field_energy(dens: &StateDensities, a: &VectorPotential, chi: &[f64], g: f64) -> f64 {
    dens.breakdown(a, &smear(chi, &a.field), g).total
}

#[derive(Clone, Debug)]
pub struct RelaxReport {
    pub a: VectorPotential,
    pub iterations: usize,
    pub residual: f64,
    pub projector_effect: f64,
}

/// Damped fixed-point iteration in `A` at fixed `u`, with energy backtracking.
pub fn relax_a(
    dens: &StateDensities,
    a0: &VectorPotential,
    g: f64,
    chi: &[f64],
    tol: f64,
    damping: f64,
    max_iter: usize,
) -> Result<RelaxReport> {
    let mut a = a0.clone();
    let mut e = field_energy(dens, &a, chi, g);
    for it in 0..=max_iter {
        let r = el_rhs(dens, &a, g, chi);
        let residual = a.distance_h1(&r.rhs)?;
        if residual <= tol || it == max_iter {
            return Ok(RelaxReport { a, iterations: it, residual, projector_effect: r.projector_effect });
        }
        let mut alpha = damping;
        loop {
            let cand = a.scale(1.0 - alpha).axpy(alpha, &r.rhs)?;
            let ec = field_energy(dens, &cand, chi, g);
            if ec <= e + 1e-14 * e.abs().max(1.0) || alpha < 1e-6 {
                a = cand;
                e = ec;
                break;
            }
            alpha *= 0.5;
        }
    }
    unreachable!("loop returns at max_iter")
}

/// Optional starting point for [`minimize`].
#[derive(Clone, Debug, Default)]
pub struct Seeds {
    pub u: Option<SpinorField>,
    pub a: Option<VectorPotential>,
    /// Precomputed scalar ground state of `-Δ + V`.
    pub scalar: Option<Arc<ScalarGroundState>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizerResult {
    #[serde(skip)]
    pub u: SpinorField,
    #[serde(skip)]
    pub a: VectorPotential,
    #[serde(skip)]
    pub scalar: Arc<ScalarGroundState>,
    pub energy: f64,
    pub mu_v: f64,
    pub breakdown: EnergyBreakdown,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub residual_a: f64,
    pub residual_u: f64,
    pub virial: [f64; 3],
    pub virial_norm: f64,
    pub eigen_gap: f64,
    pub projector_effect: f64,
    pub a_h1: f64,
    /// `32π³ a C² g² ‖χ₂/|k|‖²_{L^{3,∞}}` with the assumed `a`, `C`.
    pub smallness: f64,
    pub warnings: Vec<String>,
    pub wall_time: f64,
}

impl MinimizerResult {
    /// Largest increase between consecutive history entries.
    pub fn max_increase(&self) -> f64 {
        self.history.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn minimize(cfg: &ModelConfig, seeds: &Seeds, opts: &SolverOptions) -> Result<MinimizerResult> {
    let start = Instant::now();
    let grid = cfg.grid.clone();
    let report = hypothesis_report(&cfg.potential, &cfg.cutoff);
    if !report.passes() && opts.enforce_hypotheses {
        return Err(Error::Constraint(report.violations.join("; ")));
    }
    let mut warnings = report.caveats.clone();
    warnings.extend(report.violations.iter().map(|v| format!("hypothesis not met: {v}")));
    let smallness = 32.0 * PI.powi(3) * opts.assumed_a * opts.assumed_c.powi(2) * cfg.g * cfg.g
        * report.chi2_over_k_weak3.powi(2);
    if smallness >= 1.0 {
        warnings.push(format!("smallness condition fails with assumed a, C: value {smallness:.4}"));
    }
    let scalar = match &seeds.scalar {
        Some(s) => s.clone(),
        None => Arc::new(scalar_ground_state(&cfg.potential, opts)?),
    };
    let reference = scalar.spin_up(&grid);
    let chi = active_profile(cfg);
    let mut u = match &seeds.u {
        Some(u) => u.clone().normalized()?,
        None => reference.clone(),
    };
    let mut a = match &seeds.a {
        Some(a) => {
            let a = VectorPotential::project(&a.field);
            match cfg.lambda {
                Some(l) => a.band_limited(l),
                None => a,
            }
        }
        None => VectorPotential::zeros(&grid),
    };
    let tol_inner = 0.1 * opts.tol_a;
    let mut history = Vec::new();
    let mut best_residual = f64::INFINITY;
    let mut since_progress = 0usize;
    let mut dens = StateDensities::new(&u, &cfg.potential.v);
    for it in 1..=opts.max_outer {
        let relaxed = relax_a(&dens, &a, cfg.g, &chi, tol_inner, opts.damping, opts.max_a_iter)?;
        a = relaxed.a;
        let h = PauliOperator::with_profile(cfg, &chi, &a)?;
        let eig = lowest_eigenpair(&h, &u, &reference, opts)?;
        u = eig.u;
        let e = eig.value + h.field_energy;
        history.push(e);
        dens = StateDensities::new(&u, &cfg.potential.v);
        let r = el_rhs(&dens, &a, cfg.g, &chi);
        let residual_a = a.distance_h1(&r.rhs)?;
        if residual_a <= opts.tol_a && eig.residual <= opts.tol_u {
            let breakdown = energy::energy_with_profile(&u, &a, cfg, &chi)?;
            let virial = energy::virial(&u, &a, cfg)?;
            let virial_norm = spectral::norm3(virial);
            if virial_norm > opts.tol_vir {
                warnings.push(format!("virial {virial_norm:.3e} above tolerance {:.1e}", opts.tol_vir));
            }
            return Ok(MinimizerResult {
                a_h1: a.h1_norm(),
                u,
                a,
                scalar: scalar.clone(),
                energy: breakdown.total,
                mu_v: scalar.mu,
                breakdown,
                iterations: it,
                history,
                residual_a,
                residual_u: eig.residual,
                virial,
                virial_norm,
                eigen_gap: eig.second - eig.value,
                projector_effect: r.projector_effect,
                smallness,
                warnings,
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
        if residual_a < 0.5 * best_residual {
            best_residual = residual_a;
            since_progress = 0;
        } else {
            since_progress += 1;
        }
        let n = history.len();
        let flat = n >= 2 && (history[n - 2] - history[n - 1]).abs() <= opts.tol_energy * e.abs().max(1.0);
        if since_progress >= 25 && flat {
            return Err(Error::SolverStall(format!(
                "energy {e:.12e} flat after {it} outer iterations with residual_A {residual_a:.3e} (target {:.1e})",
                opts.tol_a
            )));
        }
    }
    Err(Error::SolverStall(format!(
        "no convergence in {} outer iterations (last energy {:.12e})",
        opts.max_outer,
        history.last().copied().unwrap_or(f64::NAN)
    )))
}

/// `‖H u - ⟨u, H u⟩ u‖` for the Pauli operator built from `(cfg, A)`.
pub fn eigen_residual(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig) -> Result<f64> {
    let h = PauliOperator::with_profile(cfg, &active_profile(cfg), a)?;
    let mut hu = h.apply_raw(&u.data);
    spectral::remove_nyquist(&u.grid, &mut hu);
    let value = u.inner(&SpinorField { grid: u.grid.clone(), data: hu.clone() })?.re;
    Ok(residual_norm(u, &hu, value))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ElResiduals {
    pub residual_a: f64,
    pub residual_u: f64,
    /// `‖Π_V^⊥ u‖_{H¹}` with `Π_V` the projection onto `u_V ⊗ C²`.
    pub phi_norm: f64,
    pub projector_effect: f64,
}

/// Coefficients `c_s = ⟨u_V, u_s⟩` of the projection onto `u_V ⊗ C²`.
pub fn spin_coefficients(u: &SpinorField, u_v: &[f64]) -> [C64; 2] {
    let w = u.grid.w_x();
    std::array::from_fn(|s| u.comp(s).iter().zip(u_v).map(|(z, v)| z * v).sum::<C64>() * w)
}

pub fn el_residuals(
    u: &SpinorField,
    a: &VectorPotential,
    cfg: &ModelConfig,
    scalar: &ScalarGroundState,
) -> Result<ElResiduals> {
    u.check_normalized(1e-10)?;
    let dens = StateDensities::new(u, &cfg.potential.v);
    let r = el_rhs(&dens, a, cfg.g, &active_profile(cfg));
    let residual_a = a.distance_h1(&r.rhs)?;
    let residual_u = eigen_residual(u, a, cfg)?;
    let c = spin_coefficients(u, &scalar.u);
    let mut phi = u.clone();
    let n = u.grid.len();
    for s in 0..2 {
        let comp = phi.comp_mut(s);
        for i in 0..n {
            comp[i] -= c[s] * scalar.u[i];
        }
    }
    let phi_norm = (phi.norm().powi(2) + energy::kinetic(&phi)).sqrt();
    Ok(ElResiduals { residual_a, residual_u, phi_norm, projector_effect: r.projector_effect })
}

/// Energy of `(u, A)` with the profile coupled in `cfg` (cutoff applied when `Λ` is set).
pub fn active_energy(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig) -> Result<EnergyBreakdown> {
    energy::energy_with_profile(u, a, cfg, &active_profile(cfg))
}

/// Field part of the energy, `‖A‖²_{Ḣ¹}/(32π³)`.
pub fn field_energy_of(a: &VectorPotential) -> f64 {
    FIELD_PREFACTOR * a.h1_norm().powi(2)
}
