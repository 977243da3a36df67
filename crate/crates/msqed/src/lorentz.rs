//! Lorentz-space norms of sampled functions, the inequality samplers built on
//! them, and the heuristic coercivity certificate.
//!
//! A grid sample with cell measure `w` is a simple function, so its
//! distribution function is a step function and every `L^{p,q}` norm has a
//! closed form in terms of the decreasing rearrangement. The log-grid
//! quadrature is kept as an independent second route.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

use crate::energy::{self, smear};
use crate::error::{Error, Result};
use crate::model::{Cutoff, ModelConfig, SpinorField, VectorPotential};
use crate::spectral::{self, leray_project, sobolev_sq_dft, ComplexField, SpectralBox, VectorField, TWO_PI};

/// `‖1/|k|‖_{L^{3,∞}(ℝ³)} = (4π/3)^{1/3}`.
pub fn inverse_k_weak3() -> f64 {
    (4.0 * PI / 3.0).powf(1.0 / 3.0)
}

/// Values grouped by distinct magnitude in decreasing order, with cumulative measures.
fn rearrangement(values: &[f64], weight: f64) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).filter(|&x| x > 0.0).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut m = 0.0;
    for x in v {
        m += weight;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = m,
            _ => out.push((x, m)),
        }
    }
    out
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) || !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("Lorentz exponents p = {p}, q = {q}")));
    }
    Ok(())
}

/// `‖f‖_{L^{p,q}} = p^{1/q} ‖t λ(|f| > t)^{1/p}‖_{L^q(dt/t)}` for samples of
/// cell measure `weight`; `q = ∞` gives the weak norm.
pub fn lorentz_norm(values: &[f64], weight: f64, p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    let r = rearrangement(values, weight);
    if r.is_empty() {
        if q.is_infinite() {
            return Ok(0.0);
        }
        return Err(Error::Insufficient("empty support".into()));
    }
    if q.is_infinite() {
        return Ok(r.iter().map(|&(v, m)| v * m.powf(1.0 / p)).fold(0.0, f64::max));
    }
    // On [v_{i+1}, v_i) the distribution function equals M_i.
    let mut acc = 0.0;
    for (i, &(v, m)) in r.iter().enumerate() {
        let next = r.get(i + 1).map_or(0.0, |x| x.0);
        acc += m.powf(q / p) * (v.powf(q) - next.powf(q));
    }
    Ok((p / q * acc).powf(1.0 / q))
}

/// Same norm by quadrature on a logarithmic `t`-grid with `per_decade` points per decade.
pub fn lorentz_norm_log_grid(values: &[f64], weight: f64, p: f64, q: f64, per_decade: usize) -> Result<f64> {
    check_exponents(p, q)?;
    let r = rearrangement(values, weight);
    if r.is_empty() {
        if q.is_infinite() {
            return Ok(0.0);
        }
        return Err(Error::Insufficient("empty support".into()));
    }
    let vmax = r[0].0;
    let vmin = r[r.len() - 1].0;
    let lo = (vmin.log10() - 1.0).floor();
    let hi = vmax.log10().ceil();
    let steps = ((hi - lo) * per_decade as f64).ceil() as usize;
    let dl = (hi - lo) / steps as f64 * std::f64::consts::LN_10;
    // λ(t) is found by binary search in the decreasing value list.
    let lambda = |t: f64| -> f64 {
        let idx = r.partition_point(|&(v, _)| v > t);
        if idx == 0 {
            0.0
        } else {
            r[idx - 1].1
        }
    };
    if q.is_infinite() {
        let mut best: f64 = 0.0;
        for j in 0..=steps {
            let t = 10f64.powf(lo) * (j as f64 * dl).exp();
            best = best.max(t * lambda(t).powf(1.0 / p));
        }
        return Ok(best);
    }
    let mut acc = 0.0;
    for j in 0..steps {
        let t = 10f64.powf(lo) * ((j as f64 + 0.5) * dl).exp();
        acc += lambda(t).powf(q / p) * t.powf(q) * dl;
    }
    // Below the smallest value λ is the full support measure.
    let total = r[r.len() - 1].1;
    let t0 = 10f64.powf(lo);
    acc += total.powf(q / p) * t0.powf(q) / q;
    Ok((p * acc).powf(1.0 / q))
}

pub fn lp_norm(values: &[f64], weight: f64, p: f64) -> f64 {
    (values.iter().map(|x| x.abs().powf(p)).sum::<f64>() * weight).powf(1.0 / p)
}

/// Analytic model `c |k|^{-β}` of a symbol inside the ball `|k| < r`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowerCore {
    pub c: f64,
    pub beta: f64,
    pub r: f64,
}

impl PowerCore {
    /// Measure of `{|k| < r : c|k|^{-β} > t}`.
    fn distribution(&self, t: f64) -> f64 {
        if self.c <= 0.0 {
            return 0.0;
        }
        let rho = (self.c / t).powf(1.0 / self.beta).min(self.r);
        4.0 / 3.0 * PI * rho.powi(3)
    }
}

/// Weak `L^{p,∞}` norm of grid samples plus an analytic core.
pub fn weak_norm_with_core(values: &[f64], weight: f64, p: f64, core: Option<PowerCore>) -> Result<f64> {
    check_exponents(p, f64::INFINITY)?;
    let r = rearrangement(values, weight);
    let Some(core) = core.filter(|c| c.c > 0.0) else {
        return lorentz_norm(values, weight, p, f64::INFINITY);
    };
    if 3.0 / (core.beta * p) < 1.0 - 1e-12 {
        return Ok(f64::INFINITY);
    }
    let count = |t: f64| -> f64 {
        let idx = r.partition_point(|&(v, _)| v > t);
        if idx == 0 {
            0.0
        } else {
            r[idx - 1].1
        }
    };
    let mut best: f64 = 0.0;
    for &(v, m) in &r {
        // Just below v the grid count is m; the core is continuous in t.
        best = best.max(v * (m + core.distribution(v)).powf(1.0 / p));
    }
    let t_res = core.c * core.r.powf(-core.beta);
    for j in 0..=2400 {
        let t = t_res * 10f64.powf(j as f64 / 400.0);
        best = best.max(t * (count(t) + core.distribution(t)).powf(1.0 / p));
    }
    Ok(best)
}

/// A symbol norm on the mode grid, with a flag when no analytic core was available.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SymbolNorm {
    pub value: f64,
    pub band_only: bool,
}

/// Radius below which symbols are replaced by their analytic core.
pub fn core_radius(grid: &SpectralBox) -> f64 {
    let dk = TWO_PI / grid.l();
    (8.0 * dk).min(0.5 * grid.band()).max(dk)
}

/// `‖χ/|k|‖_{L²}` over the grid band; with `χ(0)` known the omitted zero
/// cell is replaced by the ball of equal volume, contributing `4π r_cell χ(0)²`.
pub fn symbol_l2_over_k(grid: &SpectralBox, chi: &[f64], at_zero: Option<f64>) -> SymbolNorm {
    let k2 = grid.k2();
    let mut s = 0.0;
    for i in 0..grid.len() {
        if k2[i] > 0.0 {
            s += chi[i] * chi[i] / k2[i];
        }
    }
    s *= grid.w_k();
    if let Some(c0) = at_zero {
        let r_cell = (3.0 / (4.0 * PI)).powf(1.0 / 3.0) * TWO_PI / grid.l();
        s += c0 * c0 * 4.0 * PI * r_cell;
    }
    SymbolNorm { value: s.sqrt(), band_only: at_zero.is_none() }
}

/// `‖χ/|k|‖_{L^{3,∞}}`: grid counts for `|k| ≥ r_res` and the core `χ(0)/|k|` below.
pub fn symbol_weak_over_k(grid: &SpectralBox, chi: &[f64], at_zero: Option<f64>) -> SymbolNorm {
    let k2 = grid.k2();
    match at_zero {
        Some(c0) => {
            let r = core_radius(grid);
            let vals: Vec<f64> = (0..grid.len())
                .map(|i| if k2[i] >= r * r { chi[i].abs() / k2[i].sqrt() } else { 0.0 })
                .collect();
            let core = PowerCore { c: c0.abs(), beta: 1.0, r };
            let value = weak_norm_with_core(&vals, grid.w_k(), 3.0, Some(core)).unwrap_or(f64::NAN);
            SymbolNorm { value, band_only: false }
        }
        None => {
            let vals: Vec<f64> =
                (0..grid.len()).map(|i| if k2[i] > 0.0 { chi[i].abs() / k2[i].sqrt() } else { 0.0 }).collect();
            let value = lorentz_norm(&vals, grid.w_k(), 3.0, f64::INFINITY).unwrap_or(0.0);
            SymbolNorm { value, band_only: true }
        }
    }
}

/// `‖|k|^{-β} 1_{|k|≤K}‖_{L^{p,∞}}` on the mode grid, with the analytic core.
pub fn power_law_weak_norm(grid: &SpectralBox, beta: f64, radius: f64, p: f64) -> Result<f64> {
    let r = core_radius(grid).min(radius);
    let k2 = grid.k2();
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let k = k2[i].sqrt();
            if k >= r && k <= radius {
                k.powf(-beta)
            } else {
                0.0
            }
        })
        .collect();
    weak_norm_with_core(&vals, grid.w_k(), p, Some(PowerCore { c: 1.0, beta, r }))
}

/// Same norm from grid counts alone (the zero mode dropped).
pub fn power_law_weak_norm_band_only(grid: &SpectralBox, beta: f64, radius: f64, p: f64) -> Result<f64> {
    let k2 = grid.k2();
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let k = k2[i].sqrt();
            if k > 0.0 && k <= radius {
                k.powf(-beta)
            } else {
                0.0
            }
        })
        .collect();
    lorentz_norm(&vals, grid.w_k(), p, f64::INFINITY)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Inequality {
    Holder,
    Young,
}

/// Exponent pair `(p, q)`, `q` possibly infinite.
pub type Exponents = (f64, f64);

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

pub fn check_relation(kind: Inequality, e1: Exponents, e2: Exponents, e: Exponents) -> Result<()> {
    let (p1, q1) = e1;
    let (p2, q2) = e2;
    let (p, q) = e;
    for (pp, qq) in [e1, e2, e] {
        check_exponents(pp, qq)?;
    }
    let q_ok = (recip(q) - recip(q1) - recip(q2)).abs() < 1e-12;
    let p_ok = match kind {
        Inequality::Holder => p1.is_finite() && p2.is_finite() && (1.0 / p - 1.0 / p1 - 1.0 / p2).abs() < 1e-12,
        Inequality::Young => {
            p > 1.0 && p1 > 1.0 && p2 > 1.0 && (1.0 + 1.0 / p - 1.0 / p1 - 1.0 / p2).abs() < 1e-12
        }
    };
    if !(p_ok && q_ok) {
        return Err(Error::InvalidParameter(format!(
            "{kind:?} exponents violate the relation: ({p1},{q1}), ({p2},{q2}) -> ({p},{q})"
        )));
    }
    Ok(())
}

/// Structured test function on the x-grid, supported in `|x - c| ≤ L/8`.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum StructuredSample {
    Indicator { radius: f64, center: [f64; 3] },
    PowerLaw { alpha: f64, radius: f64, center: [f64; 3] },
    Gaussian { width: f64, center: [f64; 3] },
}

impl StructuredSample {
    /// Random sample admissible in `L^{p,q}` (power laws keep `α < 3/p`).
    pub fn random<R: Rng + ?Sized>(grid: &SpectralBox, p: f64, rng: &mut R) -> Self {
        let l = grid.l();
        let center = [0, 1, 2].map(|_| rng.random_range(-l / 16.0..l / 16.0));
        let radius = rng.random_range((2.0 * grid.dx()).min(l / 16.0)..l / 8.0);
        match rng.random_range(0..3) {
            0 => Self::Indicator { radius, center },
            1 => Self::PowerLaw { alpha: rng.random_range(0.0..0.9) * 3.0 / p, radius, center },
            _ => Self::Gaussian { width: rng.random_range(grid.dx()..l / 40.0 + grid.dx()), center },
        }
    }

    pub fn sample(&self, grid: &SpectralBox) -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let x = grid.x(i);
                let d = |c: [f64; 3]| spectral::norm3([x[0] - c[0], x[1] - c[1], x[2] - c[2]]);
                match *self {
                    Self::Indicator { radius, center } => (d(center) <= radius) as u8 as f64,
                    Self::PowerLaw { alpha, radius, center } => {
                        let r = d(center);
                        if r <= radius {
                            r.max(0.5 * grid.dx()).powf(-alpha)
                        } else {
                            0.0
                        }
                    }
                    Self::Gaussian { width, center } => (-(d(center) / width).powi(2)).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplerReport {
    pub kind: Inequality,
    pub ratios: Vec<f64>,
    /// Running maximum; its last entry is the empirical constant.
    pub running_max: Vec<f64>,
    pub constant: f64,
    /// `C·‖f₁‖‖f₂‖ - ‖f₁ ∘ f₂‖` for each sample.
    pub slacks: Vec<f64>,
}

fn convolve(grid: &SpectralBox, f1: &[f64], f2: &[f64]) -> Vec<f64> {
    let mut a = grid.dft_real(f1);
    let b = grid.dft_real(f2);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    let w = grid.w_x();
    grid.idft_real(a).into_iter().map(|v| v * w).collect()
}

/// Ratio of one pair for the chosen inequality; `None` if the right side vanishes.
pub fn holder_young_ratio(
    kind: Inequality,
    grid: &SpectralBox,
    f1: &[f64],
    f2: &[f64],
    e1: Exponents,
    e2: Exponents,
    e: Exponents,
) -> Result<Option<(f64, f64, f64)>> {
    let w = grid.w_x();
    let combined: Vec<f64> = match kind {
        Inequality::Holder => f1.iter().zip(f2).map(|(a, b)| a * b).collect(),
        Inequality::Young => convolve(grid, f1, f2),
    };
    let n1 = lorentz_norm(f1, w, e1.0, e1.1)?;
    let n2 = lorentz_norm(f2, w, e2.0, e2.1)?;
    if !(n1 * n2 > 0.0) {
        return Ok(None);
    }
    let lhs = if combined.iter().all(|&x| x == 0.0) { 0.0 } else { lorentz_norm(&combined, w, e.0, e.1)? };
    Ok(Some((lhs / (n1 * n2), lhs, n1 * n2)))
}

pub fn holder_young_sampler<R: Rng + ?Sized>(
    kind: Inequality,
    grid: &SpectralBox,
    e1: Exponents,
    e2: Exponents,
    e: Exponents,
    n_samples: usize,
    rng: &mut R,
) -> Result<SamplerReport> {
    check_relation(kind, e1, e2, e)?;
    let mut ratios = Vec::with_capacity(n_samples);
    let mut parts = Vec::with_capacity(n_samples);
    let mut running_max = Vec::with_capacity(n_samples);
    let mut best: f64 = 0.0;
    while ratios.len() < n_samples {
        let f1 = StructuredSample::random(grid, e1.0, rng).sample(grid);
        let f2 = StructuredSample::random(grid, e2.0, rng).sample(grid);
        if let Some((r, lhs, rhs)) = holder_young_ratio(kind, grid, &f1, &f2, e1, e2, e)? {
            best = best.max(r);
            ratios.push(r);
            parts.push((lhs, rhs));
            running_max.push(best);
        }
    }
    // `(C - ratio)·rhs` rather than `C·rhs - lhs`, which can round below zero at the maximizer.
    let slacks = ratios.iter().zip(&parts).map(|(q, (_, r))| (best - q) * r).collect();
    Ok(SamplerReport { kind, ratios, running_max, constant: best, slacks })
}

/// `‖χ₁/|k|‖_{L²}` and `‖χ₂/|k|‖_{L^{3,∞}}` for a split profile.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SplitNorms {
    pub chi1_l2: f64,
    pub chi2_weak: f64,
}

impl SplitNorms {
    pub fn of(cutoff: &Cutoff) -> Self {
        Self {
            chi1_l2: symbol_l2_over_k(&cutoff.grid, &cutoff.chi1, cutoff.chi1_at_zero).value,
            chi2_weak: symbol_weak_over_k(&cutoff.grid, &cutoff.chi2, cutoff.chi2_at_zero).value,
        }
    }
    /// Upper estimate of `‖χ/|k|‖_{L² + L^{3,∞}}`.
    pub fn sum(&self) -> f64 {
        self.chi1_l2 + self.chi2_weak
    }
}

/// `‖u‖_{Ḣ^{1/2}}` of a spinor.
pub fn spinor_half_norm(u: &SpinorField) -> f64 {
    (0..2)
        .map(|s| {
            let mut h = u.comp(s).to_vec();
            u.grid.dft(&mut h);
            sobolev_sq_dft(&u.grid, &h, 0.5)
        })
        .sum::<f64>()
        .sqrt()
}

/// `‖(χ̂*A) u‖_{L²} / (‖A‖_{Ḣ¹} (‖χ₁/|k|‖ ‖u‖ + ‖χ₂/|k|‖ ‖u‖_{Ḣ^{1/2}}))`.
pub fn smeared_product_ratio(u: &SpinorField, a: &VectorPotential, chi: &[f64], norms: SplitNorms) -> Option<f64> {
    let at = smear(chi, &a.field);
    let rho = u.density();
    let n = u.grid.len();
    let mut s = 0.0;
    for i in 0..n {
        let a2 = at.comps[0][i].powi(2) + at.comps[1][i].powi(2) + at.comps[2][i].powi(2);
        s += a2 * rho[i];
    }
    let lhs = (s * u.grid.w_x()).sqrt();
    let den = a.h1_norm() * (norms.chi1_l2 * u.norm() + norms.chi2_weak * spinor_half_norm(u));
    if lhs == 0.0 || !(den > 0.0) {
        None
    } else {
        Some(lhs / den)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantEstimate {
    pub constant: f64,
    pub ratios: Vec<f64>,
    pub running_max: Vec<f64>,
    pub norms: SplitNorms,
}

/// Random Gaussian wave packet spinor with width in `[0.4, 1.5]` and momentum up to `kmax`.
pub fn random_packet<R: Rng + ?Sized>(grid: &Arc<SpectralBox>, kmax: f64, rng: &mut R) -> SpinorField {
    let width = rng.random_range(0.4..1.5);
    let q = [0, 1, 2].map(|_| rng.random_range(-kmax..kmax) / 3f64.sqrt());
    let c = [0, 1, 2].map(|_| rng.random_range(-0.5..0.5));
    let spin = [C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))];
    let phi = ComplexField::from_fn(grid, |x| {
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let ph = q[0] * x[0] + q[1] * x[1] + q[2] * x[2];
        C64::from_polar((-r2 / (2.0 * width * width)).exp(), ph)
    });
    let up = phi.scale(spin[0]);
    let down = phi.scale(spin[1]);
    SpinorField::from_components(&up, &down).expect("same grid").normalized().expect("nonzero packet")
}

/// Random divergence-free Gaussian packet `∇∧(e^{-|x-c|²/2s²} e)` with unit Ḣ¹ norm.
pub fn random_field_packet<R: Rng + ?Sized>(grid: &Arc<SpectralBox>, rng: &mut R) -> VectorPotential {
    let width = rng.random_range(0.4..1.5);
    let c = [0, 1, 2].map(|_| rng.random_range(-0.5..0.5));
    let e = [0, 1, 2].map(|_| rng.random_range(-1.0..1.0));
    let q = [0, 1, 2].map(|_| rng.random_range(-1.5..1.5));
    let f = VectorField::from_fn(grid, |x| {
        let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let env = (-r2 / (2.0 * width * width)).exp() * (q[0] * x[0] + q[1] * x[1] + q[2] * x[2]).cos();
        [env * e[0], env * e[1], env * e[2]]
    });
    let a = VectorPotential { field: leray_project(&f) };
    let n = a.h1_norm();
    a.scale(1.0 / n)
}

/// Empirical lower bound for the constant of the `‖(χ̂*A)u‖` estimate over a
/// packet ensemble (running maximum of the ratios).
pub fn estimate_smeared_product_constant<R: Rng + ?Sized>(cutoff: &Cutoff, n_samples: usize, rng: &mut R) -> Result<ConstantEstimate> {
    let norms = SplitNorms::of(cutoff);
    estimate_smeared_product_constant_with(cutoff, norms, n_samples, rng)
}

pub fn estimate_smeared_product_constant_with<R: Rng + ?Sized>(
    cutoff: &Cutoff,
    norms: SplitNorms,
    n_samples: usize,
    rng: &mut R,
) -> Result<ConstantEstimate> {
    let grid = &cutoff.grid;
    let kmax = 0.5 * grid.band();
    let mut ratios = Vec::with_capacity(n_samples);
    let mut running_max = Vec::with_capacity(n_samples);
    let mut best: f64 = 0.0;
    let mut attempts = 0;
    while ratios.len() < n_samples {
        attempts += 1;
        if attempts > 10 * n_samples + 10 {
            return Err(Error::Insufficient("degenerate denominators in the ensemble".into()));
        }
        let u = random_packet(grid, kmax, rng);
        let a = random_field_packet(grid, rng);
        if let Some(r) = smeared_product_ratio(&u, &a, &cutoff.chi, norms) {
            best = best.max(r);
            ratios.push(r);
            running_max.push(best);
        }
    }
    Ok(ConstantEstimate { constant: best, ratios, running_max, norms })
}

/// Closed-form ratio for `χ = 1`, `A = e cos(k₀·x)`, `u = e^{iq·x}/L^{3/2}`:
/// `1 / (|k₀| ‖χ₂/|k|‖ √|q| L^{3/2})`.
pub fn single_mode_ratio(k0: f64, q: f64, l: f64, chi2_weak: f64) -> f64 {
    1.0 / (k0 * chi2_weak * q.sqrt() * l.powf(1.5))
}

/// Inputs of the coercivity certificate. `a` and `b` are assumed values of the
/// relative bound `V₋ ≤ a√(-Δ) + b`, `c` the estimated constant.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoercivityInputs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub g: f64,
    pub chi1_l2: f64,
    pub chi2_weak: f64,
    pub chi_sum: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoercivityCertificate {
    pub inputs: CoercivityInputs,
    pub smallness: f64,
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    pub threshold: f64,
    /// The constant `C` is an empirical lower bound, so this is not a proof.
    pub heuristic: bool,
}

pub fn coercivity_certificate(inputs: CoercivityInputs) -> Result<CoercivityCertificate> {
    let CoercivityInputs { a, b, c, g, chi1_l2, chi2_weak, chi_sum } = inputs;
    let smallness = 32.0 * PI.powi(3) * a * c * c * g * g * chi2_weak * chi2_weak;
    if !(smallness < 1.0) {
        return Err(Error::Smallness(smallness));
    }
    let epsilon = 0.5 * (1.0 / (32.0 * PI.powi(3)) - c * c * a * g * g * chi2_weak * chi2_weak);
    let c1 = epsilon / f64::max(4.0, 32.0 * g * g * c * c * chi_sum * chi_sum);
    let c2 = b + a * a * (1.0 + c * c * g * g / epsilon * chi1_l2 * chi1_l2);
    Ok(CoercivityCertificate {
        inputs,
        smallness,
        epsilon,
        c1,
        c2,
        threshold: 16.0 * (2.0 + a).powi(2),
        heuristic: true,
    })
}

/// `R² = ‖u‖²_{H¹} + ⟨u, V₊ u⟩ + ‖A‖²_{Ḣ¹}`.
pub fn state_norm(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig) -> f64 {
    let vp: Vec<f64> = cfg.potential.v.iter().map(|x| x.max(0.0)).collect();
    let r2 = u.norm().powi(2) + energy::kinetic(u) + spectral::dot_real(&u.density(), &vp, u.grid.w_x()) + a.h1_norm().powi(2);
    r2.sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct SpotCheck {
    pub total: usize,
    pub passed: usize,
    /// Smallest `ℰ - (C₁ R - C₂)` over the samples.
    pub worst_margin: f64,
    pub norms: Vec<f64>,
}

/// Evaluates the coercivity bound on random states with `R` at and above the threshold.
pub fn coercivity_spot_check<R: Rng + ?Sized>(
    cert: &CoercivityCertificate,
    cfg: &ModelConfig,
    n: usize,
    rng: &mut R,
) -> Result<SpotCheck> {
    let grid = &cfg.grid;
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    let mut norms = Vec::with_capacity(n);
    for _ in 0..n {
        let u = random_packet(grid, 0.5 * grid.band(), rng);
        let target = cert.threshold * rng.random_range(1.0..3.0);
        let base = state_norm(&u, &VectorPotential::zeros(grid), cfg);
        let a_size = (target * target - base * base).max(0.0).sqrt();
        let a = random_field_packet(grid, rng).scale(a_size);
        let r = state_norm(&u, &a, cfg);
        norms.push(r);
        let e = energy::energy(&u, &a, cfg)?.total;
        let margin = e - (cert.c1 * r - cert.c2);
        worst = worst.min(margin);
        if margin >= 0.0 && r >= cert.threshold * (1.0 - 1e-12) {
            passed += 1;
        }
    }
    Ok(SpotCheck { total: n, passed, worst_margin: worst, norms })
}

/// `max(‖F‖_∞, ‖F‖_{L^{6,2}})` on the mode grid.
pub fn linf_l62_norm(grid: &SpectralBox, f_hat_abs: &[f64]) -> Result<f64> {
    let sup = f_hat_abs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(sup.max(lorentz_norm(f_hat_abs, grid.w_k(), 6.0, 2.0)?))
}

/// `|F w|` with the continuum normalization of the forward transform.
pub fn transform_abs(grid: &SpectralBox, w: &[f64]) -> Vec<f64> {
    let h = grid.dft_real(w);
    h.iter().enumerate().map(|(i, z)| if grid.is_nyquist(i) { 0.0 } else { z.norm() * grid.w_x() }).collect()
}

/// `‖χ̂*w‖_{Ḣ^{-1}}` and `‖χ/|k|‖·‖F w‖_{L^∞∩L^{6,2}}` for mean-zero `w`.
pub fn smeared_density_estimate(grid: &SpectralBox, chi: &[f64], chi_norm: f64, w: &[f64]) -> Result<(f64, f64)> {
    let mut h = grid.dft_real(w);
    let total: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if h[0].norm() > 1e-12 * total.max(f64::MIN_POSITIVE) {
        return Err(Error::NonzeroMean);
    }
    h.iter_mut().zip(chi).for_each(|(z, c)| *z *= c);
    let lhs = sobolev_sq_dft(grid, &h, -1.0).sqrt();
    let rhs = chi_norm * linf_l62_norm(grid, &transform_abs(grid, w))?;
    Ok((lhs, rhs))
}

/// `‖1_{|k|≤Λ} F(u₁u₂)‖_{L^∞∩L^{6,2}}` and `‖u₁‖_{L²}‖u₂‖_{H¹}`.
pub fn band_product_estimate(grid: &SpectralBox, u1: &ComplexField, u2: &ComplexField, lambda: f64) -> Result<(f64, f64)> {
    let prod: Vec<C64> = u1.data.iter().zip(&u2.data).map(|(a, b)| a * b).collect();
    let mut h = prod;
    grid.dft(&mut h);
    let k2 = grid.k2();
    let abs: Vec<f64> = h
        .iter()
        .enumerate()
        .map(|(i, z)| if grid.is_nyquist(i) || k2[i] > lambda * lambda { 0.0 } else { z.norm() * grid.w_x() })
        .collect();
    let lhs = linf_l62_norm(grid, &abs)?;
    let h1 = (u2.norm().powi(2) + spectral::sobolev_norm(u2, 1.0)?.powi(2)).sqrt();
    Ok((lhs, u1.norm() * h1))
}

#[derive(Clone, Debug, Serialize)]
pub struct MeanZeroReport {
    pub c_density: f64,
    pub c_band: f64,
    pub slacks_density: Vec<f64>,
    pub slacks_band: Vec<f64>,
    pub min_slack_density: f64,
    pub min_slack_band: f64,
}

/// Ensemble evaluation of both estimates with Gaussian packets; the constants
/// are running maxima of the ratios and the slacks use the final constants.
pub fn mean_zero_estimates_check<R: Rng + ?Sized>(
    cutoff: &Cutoff,
    lambda: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<MeanZeroReport> {
    let grid = &cutoff.grid;
    let chi_norm = SplitNorms::of(cutoff).sum();
    let mut density_parts = Vec::new();
    let mut band_parts = Vec::new();
    for _ in 0..n_samples {
        let u = random_packet(grid, 0.5 * grid.band(), rng);
        let v = random_packet(grid, 0.5 * grid.band(), rng);
        // Mean-zero real w from a packet density difference.
        let mut w: Vec<f64> = u.density().iter().zip(v.density()).map(|(a, b)| a - b).collect();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        w.iter_mut().for_each(|x| *x -= mean);
        let (l, r) = smeared_density_estimate(grid, &cutoff.chi, chi_norm, &w)?;
        if r > 0.0 {
            density_parts.push((l, r));
        }
        let (l, r) = band_product_estimate(grid, &u.component(0), &v.component(1), lambda)?;
        if r > 0.0 {
            band_parts.push((l, r));
        }
    }
    if density_parts.is_empty() || band_parts.is_empty() {
        return Err(Error::Insufficient("all samples were degenerate".into()));
    }
    let c_density = density_parts.iter().map(|(l, r)| l / r).fold(0.0, f64::max);
    let c_band = band_parts.iter().map(|(l, r)| l / r).fold(0.0, f64::max);
    let slacks_density: Vec<f64> = density_parts.iter().map(|(l, r)| (c_density - l / r) * r).collect();
    let slacks_band: Vec<f64> = band_parts.iter().map(|(l, r)| (c_band - l / r) * r).collect();
    Ok(MeanZeroReport {
        c_density,
        c_band,
        min_slack_density: slacks_density.iter().copied().fold(f64::INFINITY, f64::min),
        min_slack_band: slacks_band.iter().copied().fold(f64::INFINITY, f64::min),
        slacks_density,
        slacks_band,
    })
}

/// Ratio `‖χ̂*w‖_{Ḣ^{-1}} / (‖χ/|k|‖ ‖F w‖)` for single modes `w = cos(m k₁ x₁)`
/// and its log-log slope in `|k|`.
pub fn density_mode_ladder(cutoff: &Cutoff, modes: &[usize]) -> Result<(Vec<f64>, f64)> {
    let grid = &cutoff.grid;
    let chi_norm = SplitNorms::of(cutoff).sum();
    let dk = TWO_PI / grid.l();
    let mut ks = Vec::new();
    let mut ratios = Vec::new();
    for &m in modes {
        let k = m as f64 * dk;
        let w: Vec<f64> = (0..grid.len()).map(|i| (k * grid.x(i)[0]).cos()).collect();
        let (l, r) = smeared_density_estimate(grid, &cutoff.chi, chi_norm, &w)?;
        ks.push(k);
        ratios.push(l / r);
    }
    let slope = crate::solver::log_log_slope(&ks, &ratios)?;
    Ok((ratios, slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_cutoff, CutoffKind, SplitRule};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn indicator_weak_norm_is_measure_power() {
        let vals = vec![1.0; 37];
        let w = 0.25;
        for p in [1.0, 2.0, 3.5] {
            let m: f64 = 37.0 * w;
            assert!((lorentz_norm(&vals, w, p, f64::INFINITY).unwrap() - m.powf(1.0 / p)).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_support_rules() {
        assert!(lorentz_norm(&[0.0; 4], 1.0, 2.0, 2.0).is_err());
        assert_eq!(lorentz_norm(&[0.0; 4], 1.0, 2.0, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn log_grid_route_agrees_with_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..500).map(|_| rng.random_range(0.01..3.0f64)).collect();
        for (p, q) in [(2.0, 2.0), (3.0, 1.0), (6.0, 2.0), (1.5, f64::INFINITY)] {
            let a = lorentz_norm(&vals, 0.1, p, q).unwrap();
            let b = lorentz_norm_log_grid(&vals, 0.1, p, q, 400).unwrap();
            if q.is_infinite() {
                // The sampled sup is a lower bound, short by at most one grid ratio.
                let ratio = 10f64.powf(1.0 / 400.0);
                assert!(b <= a * (1.0 + 1e-12) && a <= b * ratio * (1.0 + 1e-12), "p={p}: {a} vs {b}");
            } else {
                assert!((a - b).abs() < 2e-3 * a, "p={p} q={q}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn half_power_on_ball_in_weak_l6() {
        let grid = SpectralBox::new(10.0, 32).unwrap();
        let exact = (4.0 * PI / 3.0).powf(1.0 / 6.0);
        let est = power_law_weak_norm(&grid, 0.5, grid.band(), 6.0).unwrap();
        assert!((est / exact - 1.0).abs() < 0.03, "{est} vs {exact}");
    }

    #[test]
    fn inverse_k_weak_norm_of_unit_profile() {
        let grid = SpectralBox::new(10.0, 32).unwrap();
        let c = build_cutoff(&CutoffKind::One, SplitRule::Auto, &grid).unwrap();
        let n = SplitNorms::of(&c);
        assert!((n.chi2_weak / inverse_k_weak3() - 1.0).abs() < 0.03);
        assert_eq!(n.chi1_l2, 0.0);
    }

    #[test]
    fn holder_rejects_infinite_exponent_and_wrong_relation() {
        let grid = SpectralBox::new(8.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inf = f64::INFINITY;
        assert!(holder_young_sampler(Inequality::Holder, &grid, (2.0, 2.0), (inf, inf), (2.0, 2.0), 3, &mut rng).is_err());
        assert!(holder_young_sampler(Inequality::Holder, &grid, (2.0, 2.0), (2.0, 2.0), (2.0, 1.0), 3, &mut rng).is_err());
        assert!(holder_young_sampler(Inequality::Young, &grid, (1.0, 1.0), (2.0, 2.0), (2.0, 0.5), 3, &mut rng).is_err());
    }

    #[test]
    fn structured_samples_fit_coarse_grids() {
        // On N = 16, L = 8 the cell size puts 2 dx exactly at L/8.
        let grid = SpectralBox::new(8.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = StructuredSample::random(&grid, 2.0, &mut rng);
            assert!(s.sample(&grid).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn disjoint_supports_give_zero_ratio() {
        let grid = SpectralBox::new(8.0, 16).unwrap();
        let f1: Vec<f64> = (0..grid.len()).map(|i| (grid.x(i)[0] < 0.0) as u8 as f64).collect();
        let f2: Vec<f64> = f1.iter().map(|x| 1.0 - x).collect();
        let inf = f64::INFINITY;
        let (r, _, _) = holder_young_ratio(Inequality::Holder, &grid, &f1, &f2, (3.0, inf), (6.0, inf), (2.0, inf))
            .unwrap()
            .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn single_mode_ratio_matches_grid() {
        let grid = SpectralBox::new(8.0, 16).unwrap();
        let c = build_cutoff(&CutoffKind::One, SplitRule::Auto, &grid).unwrap();
        let dk = TWO_PI / grid.l();
        let (k0, q) = (3.0 * dk, 2.0 * dk);
        let a = VectorPotential::new(VectorField::from_fn(&grid, |x| [0.0, (k0 * x[0]).cos(), 0.0])).unwrap();
        let phi = ComplexField::from_fn(&grid, |x| C64::from_polar(grid.l().powf(-1.5), q * x[2]));
        let u = SpinorField::spin_up(&phi);
        let norms = SplitNorms { chi1_l2: 0.0, chi2_weak: inverse_k_weak3() };
        let r = smeared_product_ratio(&u, &a, &c.chi, norms).unwrap();
        let exact = single_mode_ratio(k0, q, grid.l(), inverse_k_weak3());
        assert!((r / exact - 1.0).abs() < 1e-6, "{r} vs {exact}");
    }

    #[test]
    fn certificate_at_zero_coupling() {
        let inputs = CoercivityInputs { a: 0.0, b: 0.0, c: 1.0, g: 0.0, chi1_l2: 1.0, chi2_weak: 1.0, chi_sum: 2.0 };
        let cert = coercivity_certificate(inputs).unwrap();
        assert!((cert.epsilon - 1.0 / (64.0 * PI.powi(3))).abs() < 1e-18);
        assert!((cert.c1 - cert.epsilon / 4.0).abs() < 1e-18);
        assert_eq!(cert.threshold, 64.0);
    }

    #[test]
    fn certificate_refuses_large_coupling() {
        let inputs = CoercivityInputs {
            a: 1.0,
            b: 0.0,
            c: 1.0,
            g: 1.0,
            chi1_l2: 0.0,
            chi2_weak: inverse_k_weak3(),
            chi_sum: inverse_k_weak3(),
        };
        assert!(matches!(coercivity_certificate(inputs), Err(Error::Smallness(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lpp_is_lp(vals in proptest::collection::vec(-5.0f64..5.0, 1..200), p in 1.0f64..6.0) {
            prop_assume!(vals.iter().any(|&x| x != 0.0));
            let a = lorentz_norm(&vals, 0.3, p, p).unwrap();
            let b = lp_norm(&vals, 0.3, p);
            prop_assert!((a - b).abs() <= 1e-10 * b);
        }

        #[test]
        fn embedding_in_second_index(vals in proptest::collection::vec(0.01f64..5.0, 1..100),
                                     p in 1.0f64..5.0, q in 1.0f64..5.0, dr in 0.0f64..5.0) {
            let r = q + dr;
            let small = lorentz_norm(&vals, 0.5, p, q).unwrap();
            let large = lorentz_norm(&vals, 0.5, p, r).unwrap();
            let weak = lorentz_norm(&vals, 0.5, p, f64::INFINITY).unwrap();
            let c = (q / p).powf(1.0 / q - 1.0 / r);
            prop_assert!(large <= c * small * (1.0 + 1e-12));
            prop_assert!(weak <= (q / p).powf(1.0 / q) * small * (1.0 + 1e-12));
        }

        #[test]
        fn rearrangement_invariance(mut vals in proptest::collection::vec(-5.0f64..5.0, 2..60), p in 1.0f64..4.0) {
            prop_assume!(vals.iter().any(|&x| x != 0.0));
            let a = lorentz_norm(&vals, 1.0, p, 2.0).unwrap();
            vals.reverse();
            let b = lorentz_norm(&vals, 1.0, p, 2.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }
}
