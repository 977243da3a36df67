//! Experiment drivers and diagnostics around [`minimize`]: cutoff and coupling
//! sweeps, the gap and uniqueness probes, decay fits and perturbation probes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::minimize::*;
use crate::energy::{self, StateDensities, FIELD_PREFACTOR};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, SpinorField, VectorPotential};
use crate::spectral::{self, leray_project, random_band_limited, random_band_limited_vector, VectorField};

#[derive(Clone, Debug, Serialize)]
pub struct UvEntry {
    pub lambda: f64,
    pub energy: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UvSweep {
    pub entries: Vec<UvEntry>,
    /// Largest increase `E_{Λ_{i+1}} - E_{Λ_i}` along the ladder.
    pub max_increase: f64,
    pub monotone: bool,
    /// Successive differences `|E_{Λ_{i+1}} - E_{Λ_i}|`.
    pub differences: Vec<f64>,
    pub shrinking: bool,
}

impl UvSweep {
    pub fn complete(&self) -> bool {
        self.entries.iter().all(|e| e.energy.is_some())
    }
}

/// Minimization with `A` restricted to `|k| ≤ Λ` for each `Λ` of an increasing ladder.
pub fn uv_sweep(cfg: &ModelConfig, ladder: &[f64], opts: &SolverOptions, slack: f64) -> Result<UvSweep> {
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[1] > w[0])) || !(ladder[0] > 0.0) {
        return Err(Error::InvalidParameter("UV ladder must be positive and increasing".into()));
    }
    let scalar = Arc::new(scalar_ground_state(&cfg.potential, opts)?);
    let seeds = Seeds { scalar: Some(scalar), ..Seeds::default() };
    let entries: Vec<UvEntry> = ladder
        .par_iter()
        .map(|&lambda| match minimize(&cfg.with_lambda(Some(lambda)), &seeds, opts) {
            Ok(r) => UvEntry { lambda, energy: Some(r.energy), iterations: Some(r.iterations), error: None },
            Err(e) => UvEntry { lambda, energy: None, iterations: None, error: Some(e.to_string()) },
        })
        .collect();
    let energies: Vec<f64> = entries.iter().filter_map(|e| e.energy).collect();
    let max_increase = energies.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let differences: Vec<f64> = energies.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let shrinking = differences.windows(2).all(|d| d[1] < d[0]);
    let sweep = UvSweep {
        monotone: energies.len() == entries.len() && (energies.len() < 2 || max_increase <= slack),
        entries,
        max_increase,
        shrinking,
        differences,
    };
    Ok(sweep)
}

/// `A^{[1]} = 16π³ (-Δ)^{-1} g χ ∇∧(u_V² ω)`.
pub fn first_order_potential(cfg: &ModelConfig, u_v: &[f64], omega: [f64; 3]) -> VectorPotential {
    let grid = &cfg.grid;
    let n = grid.len();
    let chi = active_profile(cfg);
    let s = VectorField {
        grid: grid.clone(),
        comps: std::array::from_fn(|j| u_v.iter().map(|x| x * x * omega[j]).collect()),
    };
    let mut h = energy::curl(&s).dft();
    let pref = 16.0 * PI * PI * PI * cfg.g;
    let k2 = grid.k2();
    for c in h.iter_mut() {
        for i in 0..n {
            c[i] = if k2[i] > 0.0 { c[i] * (pref * chi[i] / k2[i]) } else { C64::default() };
        }
    }
    VectorPotential { field: VectorField::from_dft(grid, h) }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct A1Comparison {
    pub a_norm: f64,
    pub a_minus_a1: f64,
    pub omega: [f64; 3],
    /// `| |ω|² - 1 |`.
    pub omega_deviation: f64,
}

/// `ω = ⟨c, σ c⟩` for the coefficients of `Π_V u`.
pub fn spin_orientation(u: &SpinorField, u_v: &[f64]) -> [f64; 3] {
    let c = spin_coefficients(u, u_v);
    let x = 2.0 * (c[0].conj() * c[1]).re;
    let y = 2.0 * (c[0].conj() * c[1]).im;
    let z = c[0].norm_sqr() - c[1].norm_sqr();
    [x, y, z]
}

pub fn a1_comparison(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig, scalar: &ScalarGroundState) -> Result<A1Comparison> {
    let omega = spin_orientation(u, &scalar.u);
    let a1 = first_order_potential(cfg, &scalar.u, omega);
    let o2 = omega.iter().map(|x| x * x).sum::<f64>();
    Ok(A1Comparison {
        a_norm: a.h1_norm(),
        a_minus_a1: a.distance_h1(&a1)?,
        omega,
        omega_deviation: (o2 - 1.0).abs(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 || pts.len() != x.len() {
        return Err(Error::Insufficient("log-log fit needs at least two positive samples".into()));
    }
    linear_slope(&pts)
}

fn linear_slope(pts: &[(f64, f64)]) -> Result<f64> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Insufficient("fit abscissae are degenerate".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionSample {
    pub g: f64,
    pub energy: f64,
    pub shift: f64,
    pub remainder: f64,
    pub phi_norm: f64,
    pub a_norm: f64,
    pub a_minus_a1: f64,
    pub omega: [f64; 3],
    pub omega_deviation: f64,
    pub residual_a: f64,
    pub residual_u: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub samples: Vec<ExpansionSample>,
    pub mu_v: f64,
    /// Richardson estimate from the two smallest couplings.
    pub c2: f64,
    /// Least-squares fit of `(E - μ)/g² = c₂ + c₄ g²` over the whole ladder.
    pub c2_lsq: f64,
    pub c4_lsq: f64,
    pub c2_sign: i8,
    /// `∫ (χ̂*u_V²)²` on the grid.
    pub overlap_integral: f64,
    /// `(32/3) π³ ∫ (χ̂*u_V²)²`.
    pub predicted_literal: f64,
    /// `-(16/3) π³ (∫ (χ̂*u_V²)² - χ(0)²/L³)`: second order with the torus zero mode removed.
    pub predicted_second_order: f64,
    /// `-‖A^{[1]}/g‖²_{Ḣ¹}/(32π³)` with `ω = ẑ`.
    pub predicted_rs: f64,
    pub ratio_literal: f64,
    pub ratio_second_order: f64,
    pub ratio_rs: f64,
    pub remainder_slope: Option<f64>,
    pub phi_slope: Option<f64>,
    pub a_slope: Option<f64>,
    pub a_minus_a1_slope: Option<f64>,
    pub omega_slope: Option<f64>,
}

/// `∫ (χ̂ * f)²` for the profile coupled in `cfg`.
pub fn smeared_square_integral(cfg: &ModelConfig, f: &[f64]) -> f64 {
    let grid = &cfg.grid;
    let chi = active_profile(cfg);
    let h = grid.dft_real(f);
    let s: f64 = h.iter().zip(&chi).map(|(z, c)| c * c * z.norm_sqr()).sum();
    s * grid.w_x() / grid.len() as f64
}

pub fn expansion_fit(cfg: &ModelConfig, ladder: &[f64], opts: &SolverOptions) -> Result<ExpansionReport> {
    if ladder.len() < 2 || ladder.windows(2).any(|w| !(w[1] > w[0])) || !(ladder[0] > 0.0) {
        return Err(Error::Insufficient("coupling ladder needs at least two increasing positive values".into()));
    }
    let scalar = Arc::new(scalar_ground_state(&cfg.potential, opts)?);
    let seeds = Seeds { scalar: Some(scalar.clone()), ..Seeds::default() };
    let runs: Vec<Result<(MinimizerResult, ElResiduals, A1Comparison)>> = ladder
        .par_iter()
        .map(|&g| {
            let c = cfg.with_g(g);
            let r = minimize(&c, &seeds, opts)?;
            let el = el_residuals(&r.u, &r.a, &c, &scalar)?;
            let a1 = a1_comparison(&r.u, &r.a, &c, &scalar)?;
            Ok((r, el, a1))
        })
        .collect();
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;
    let mu = scalar.mu;
    let d: Vec<f64> = runs.iter().map(|(r, _, _)| r.energy - mu).collect();
    let (g1, g2) = (ladder[0], ladder[1]);
    let t = (g2 / g1).powi(2);
    // Eliminate the g⁴ term between the two smallest couplings.
    let c2 = (t * d[0] / (g1 * g1) - d[1] / (g2 * g2)) / (t - 1.0);
    let pts: Vec<(f64, f64)> = ladder.iter().zip(&d).map(|(g, di)| (g * g, di / (g * g))).collect();
    let c4_lsq = linear_slope(&pts)?;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let c2_lsq = my - c4_lsq * mx;
    let samples: Vec<ExpansionSample> = runs
        .iter()
        .zip(ladder)
        .zip(&d)
        .map(|(((r, el, a1), &g), &di)| ExpansionSample {
            g,
            energy: r.energy,
            shift: di,
            remainder: (di - c2 * g * g).abs(),
            phi_norm: el.phi_norm,
            a_norm: a1.a_norm,
            a_minus_a1: a1.a_minus_a1,
            omega: a1.omega,
            omega_deviation: a1.omega_deviation,
            residual_a: r.residual_a,
            residual_u: r.residual_u,
            iterations: r.iterations,
        })
        .collect();
    let density: Vec<f64> = scalar.u.iter().map(|x| x * x).collect();
    let integral = smeared_square_integral(cfg, &density);
    let predicted_literal = 32.0 / 3.0 * PI.powi(3) * integral;
    let chi0 = active_profile(cfg)[0];
    let mass: f64 = scalar.u.iter().map(|x| x * x).sum::<f64>() * cfg.grid.w_x();
    let predicted_second_order =
        -16.0 / 3.0 * PI.powi(3) * (integral - chi0 * chi0 * mass * mass / cfg.grid.l().powi(3));
    let unit = cfg.with_g(1.0);
    let a1 = first_order_potential(&unit, &scalar.u, [0.0, 0.0, 1.0]);
    let predicted_rs = -FIELD_PREFACTOR * a1.h1_norm().powi(2);
    let slope = |f: &dyn Fn(&ExpansionSample) -> f64| {
        let y: Vec<f64> = samples.iter().map(f).collect();
        log_log_slope(ladder, &y).ok()
    };
    Ok(ExpansionReport {
        mu_v: mu,
        c2,
        c2_lsq,
        c4_lsq,
        c2_sign: if c2 > 0.0 { 1 } else if c2 < 0.0 { -1 } else { 0 },
        overlap_integral: integral,
        predicted_literal,
        predicted_second_order,
        predicted_rs,
        ratio_literal: c2.abs() / predicted_literal,
        ratio_second_order: c2 / predicted_second_order,
        ratio_rs: c2 / predicted_rs,
        remainder_slope: slope(&|s| s.remainder),
        phi_slope: slope(&|s| s.phi_norm),
        a_slope: slope(&|s| s.a_norm),
        a_minus_a1_slope: slope(&|s| s.a_minus_a1),
        omega_slope: slope(&|s| s.omega_deviation),
        samples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub e_v: f64,
    pub mu_v: f64,
    pub e_v1: f64,
    pub mu_v1: f64,
    pub gap: f64,
    pub trivial_split: bool,
}

/// Minimization for `V` and for `V₁` alone; `gap = E_{V₁} - E_V`.
pub fn gap_check(cfg: &ModelConfig, opts: &SolverOptions) -> Result<GapReport> {
    let trivial = cfg.potential.v2.iter().all(|&x| x == 0.0);
    let full = minimize(cfg, &Seeds::default(), opts)?;
    if trivial {
        return Ok(GapReport {
            e_v: full.energy,
            mu_v: full.mu_v,
            e_v1: full.energy,
            mu_v1: full.mu_v,
            gap: 0.0,
            trivial_split: true,
        });
    }
    let part = minimize(&cfg.with_potential(cfg.potential.part_one()), &Seeds::default(), opts)?;
    Ok(GapReport {
        e_v: full.energy,
        mu_v: full.mu_v,
        e_v1: part.energy,
        mu_v1: part.mu_v,
        gap: part.energy - full.energy,
        trivial_split: false,
    })
}

/// Random mean-zero divergence-free field with `‖A‖_{Ḣ¹} = size`, band limited to index `band`.
pub fn random_vector_potential<R: Rng + ?Sized>(
    cfg: &ModelConfig,
    band: usize,
    size: f64,
    rng: &mut R,
) -> VectorPotential {
    let f = leray_project(&random_band_limited_vector(&cfg.grid, band, rng));
    let mut a = VectorPotential { field: f };
    if let Some(l) = cfg.lambda {
        a = a.band_limited(l);
    }
    let n = a.h1_norm();
    if n > 0.0 {
        a.scale(size / n)
    } else {
        a
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Sampled Lipschitz constant of the undamped map `A ↦ RHS(A)` in Ḣ¹.
    pub lipschitz: f64,
    pub non_contraction: bool,
}

/// Iterates the `A`-update at fixed `u` from each seed to a fixed point.
pub fn uniqueness_probe(
    u: &SpinorField,
    cfg: &ModelConfig,
    seeds: &[VectorPotential],
    opts: &SolverOptions,
    tol: f64,
) -> Result<UniquenessReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("uniqueness probe needs at least one seed".into()));
    }
    let dens = StateDensities::new(u, &cfg.potential.v);
    let chi = active_profile(cfg);
    let runs: Vec<RelaxReport> = seeds
        .par_iter()
        .map(|s| relax_a(&dens, s, cfg.g, &chi, tol, opts.damping, 20 * opts.max_a_iter))
        .collect::<Result<_>>()?;
    let mut distances = Vec::new();
    for i in 0..runs.len() {
        for j in (i + 1)..runs.len() {
            distances.push(runs[i].a.distance_h1(&runs[j].a)?);
        }
    }
    let mut lipschitz: f64 = 0.0;
    for i in 0..seeds.len() {
        for j in (i + 1)..seeds.len() {
            let den = seeds[i].distance_h1(&seeds[j])?;
            if den > 0.0 {
                let ri = el_rhs(&dens, &seeds[i], cfg.g, &chi).rhs;
                let rj = el_rhs(&dens, &seeds[j], cfg.g, &chi).rhs;
                lipschitz = lipschitz.max(ri.distance_h1(&rj)? / den);
            }
        }
    }
    let residuals: Vec<f64> = runs.iter().map(|r| r.residual).collect();
    let non_contraction = lipschitz >= 1.0 || residuals.iter().any(|&r| r > tol);
    Ok(UniquenessReport {
        max_distance: distances.iter().copied().fold(0.0, f64::max),
        distances,
        iterations: runs.iter().map(|r| r.iterations).collect(),
        residuals,
        lipschitz,
        non_contraction,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// Decay rate from `log(r |u|)`, which removes the `1/r` prefactor of a bound state.
    pub gamma: f64,
    /// Decay rate from `log |u|`.
    pub gamma_raw: f64,
    pub gamma_inner: f64,
    pub gamma_outer: f64,
    pub super_exponential: bool,
    pub dynamic_range: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Exponential decay rate of the radial average of `|u|` on `[L/8, 3L/8]`.
pub fn decay_fit(u: &SpinorField) -> Result<DecayFit> {
    let grid = &u.grid;
    let (r0, r1) = (grid.l() / 8.0, 3.0 * grid.l() / 8.0);
    let width = grid.dx();
    let nbins = ((r1 - r0) / width).ceil() as usize;
    let mut sum = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    let rho = u.density();
    for i in 0..grid.len() {
        let x = grid.x(i);
        let r = spectral::norm3(x);
        if r < r0 || r >= r1 {
            continue;
        }
        let b = (((r - r0) / width) as usize).min(nbins - 1);
        sum[b] += rho[i].sqrt();
        count[b] += 1;
    }
    let shells: Vec<(f64, f64)> = (0..nbins)
        .filter(|&b| count[b] > 0)
        .map(|b| (r0 + (b as f64 + 0.5) * width, sum[b] / count[b] as f64))
        .filter(|&(_, v)| v > 1e-14)
        .collect();
    if shells.len() < 4 {
        return Err(Error::Insufficient("too few radial shells above the floor".into()));
    }
    let vmax = shells.iter().map(|s| s.1).fold(0.0, f64::max);
    let vmin = shells.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let dynamic_range = vmax / vmin;
    if !(dynamic_range >= 10.0) {
        return Err(Error::Insufficient(format!("no decay: dynamic range {dynamic_range:.3} below 10")));
    }
    let raw: Vec<(f64, f64)> = shells.iter().map(|&(r, v)| (r, v.ln())).collect();
    let corrected: Vec<(f64, f64)> = shells.iter().map(|&(r, v)| (r, (r * v).ln())).collect();
    let half = corrected.len() / 2;
    let gamma = -linear_slope(&corrected)?;
    let gamma_inner = -linear_slope(&corrected[..half])?;
    let gamma_outer = -linear_slope(&corrected[half..])?;
    Ok(DecayFit {
        gamma,
        gamma_raw: -linear_slope(&raw)?,
        gamma_inner,
        gamma_outer,
        super_exponential: gamma_outer > 1.3 * gamma_inner,
        dynamic_range,
        r_min: shells[0].0,
        r_max: shells[shells.len() - 1].0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimalityReport {
    pub reference: f64,
    pub deltas: Vec<f64>,
    pub min_delta: f64,
}

/// Energy changes under random admissible perturbations of a minimizer: `δu`
/// orthogonal to `u` followed by renormalization, `δA` divergence-free (and
/// band limited when `Λ` is set), both of the given size.
pub fn optimality_probe<R: Rng + ?Sized>(
    result: &MinimizerResult,
    cfg: &ModelConfig,
    samples: usize,
    size: f64,
    rng: &mut R,
) -> Result<OptimalityReport> {
    let grid = &cfg.grid;
    let band = grid.n() / 4;
    let reference = active_energy(&result.u, &result.a, cfg)?.total;
    let mut deltas = Vec::with_capacity(samples);
    for _ in 0..samples {
        let up = random_band_limited(grid, band, rng);
        let down = random_band_limited(grid, band, rng);
        let mut du = SpinorField::from_components(&up, &down)?;
        let c = result.u.inner(&du)?;
        du = du.axpy(-c, &result.u)?;
        let nrm = du.norm();
        du = du.scale(C64::new(size / nrm, 0.0));
        let u = result.u.axpy(C64::new(1.0, 0.0), &du)?.normalized()?;
        let da = random_vector_potential(cfg, band, size, rng);
        let a = result.a.axpy(1.0, &da)?;
        deltas.push(active_energy(&u, &a, cfg)?.total - reference);
    }
    Ok(OptimalityReport { reference, min_delta: deltas.iter().copied().fold(f64::INFINITY, f64::min), deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_cutoff, build_potential, CutoffKind, PotentialKind, SplitRule};
    use crate::spectral::SpectralBox;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, l: f64, g: f64) -> ModelConfig {
        let grid = SpectralBox::new(l, n).unwrap();
        let p = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &grid).unwrap();
        let c = build_cutoff(&CutoffKind::Sharp { lambda: 4.0 }, SplitRule::Auto, &grid).unwrap();
        ModelConfig::new(p, c, g, None).unwrap()
    }

    #[test]
    fn gaussian_profile_is_super_exponential() {
        let grid = SpectralBox::new(12.0, 32).unwrap();
        let phi = spectral::ComplexField::from_fn(&grid, |x| {
            C64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp(), 0.0)
        });
        let u = SpinorField::spin_up(&phi).normalized().unwrap();
        let fit = decay_fit(&u).unwrap();
        assert!(fit.super_exponential);
        assert!(fit.gamma > 0.0);
    }

    #[test]
    fn exponential_profile_is_not_flagged() {
        let grid = SpectralBox::new(16.0, 32).unwrap();
        let phi = spectral::ComplexField::from_fn(&grid, |x| {
            let r = spectral::norm3(x).max(1e-3);
            C64::new((-1.5 * r).exp() / r, 0.0)
        });
        let u = SpinorField::spin_up(&phi).normalized().unwrap();
        let fit = decay_fit(&u).unwrap();
        assert!(!fit.super_exponential);
        assert!((fit.gamma - 1.5).abs() < 0.05, "gamma {}", fit.gamma);
    }

    #[test]
    fn constant_field_has_no_decay() {
        let grid = SpectralBox::new(8.0, 16).unwrap();
        let phi = spectral::ComplexField::from_fn(&grid, |_| C64::new(1.0, 0.0));
        let u = SpinorField::spin_up(&phi).normalized().unwrap();
        assert!(matches!(decay_fit(&u), Err(Error::Insufficient(_))));
    }

    #[test]
    fn zero_coupling_drives_all_seeds_to_zero() {
        let c = cfg(8, 6.0, 0.0);
        let s = scalar_ground_state(&c.potential, &SolverOptions::default()).unwrap();
        let u = s.spin_up(&c.grid);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seeds: Vec<_> = (0..2).map(|_| random_vector_potential(&c, 2, 1.0, &mut rng)).collect();
        let rep = uniqueness_probe(&u, &c, &seeds, &SolverOptions::default(), 1e-12).unwrap();
        assert!(rep.max_distance < 1e-11);
        assert_eq!(rep.lipschitz, 0.0);
    }

    #[test]
    fn seed_at_fixed_point_stays() {
        let c = cfg(16, 8.0, 0.05);
        let r = minimize(&c, &Seeds::default(), &SolverOptions::default()).unwrap();
        let rep = uniqueness_probe(&r.u, &c, &[r.a.clone(), r.a.clone()], &SolverOptions::default(), 1e-9).unwrap();
        assert_eq!(rep.max_distance, 0.0);
    }

    #[test]
    fn trivial_split_has_zero_gap() {
        let grid = SpectralBox::new(8.0, 16).unwrap();
        let p = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &grid).unwrap().with_trivial_split().unwrap();
        let c = build_cutoff(&CutoffKind::Sharp { lambda: 4.0 }, SplitRule::Auto, &grid).unwrap();
        let cfg = ModelConfig::new(p, c, 0.05, None).unwrap();
        let rep = gap_check(&cfg, &SolverOptions::default()).unwrap();
        assert_eq!(rep.gap, 0.0);
    }

    #[test]
    fn smeared_square_of_gaussian_density() {
        // u² = π^{-3/2} e^{-|x|²} has transform e^{-|k|²/4}; with χ = e^{-|k|²/8}
        // the integral is (2π)^{-3} ∫ e^{-3|k|²/4} = (2π)^{-3} (4π/3)^{3/2}.
        let grid = SpectralBox::new(12.0, 32).unwrap();
        let p = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &grid).unwrap();
        let c = build_cutoff(&CutoffKind::Gaussian { sigma: 2.0 }, SplitRule::Auto, &grid).unwrap();
        let cfg = ModelConfig::new(p, c, 0.0, None).unwrap();
        let rho: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.x(i);
                PI.powf(-1.5) * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp()
            })
            .collect();
        let exact = (4.0 * PI / 3.0).powf(1.5) / (2.0 * PI).powi(3);
        let got = smeared_square_integral(&cfg, &rho);
        assert!((got / exact - 1.0).abs() < 1e-10, "{got} vs {exact}");
    }

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.2, 0.4];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(4)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 4.0).abs() < 1e-12);
    }
}
