//! Evaluation of the Maxwell-Schrödinger energy, the Pauli operator and the
//! identity diagnostics built on them.
//!
//! With `a = g χ̂*A` and `D_j = -i∂_j - a_j`, the Pauli operator is applied in
//! the form `H = Σ_j D_j D_j - σ·(∇∧a) + V`, which is exactly Hermitian on
//! the grid because every `D_j` is.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{LocalizerSamples, ModelConfig, SpinorField, VectorPotential};
use crate::spectral::{self, dot_real, SpectralBox, VectorField};

pub const FIELD_PREFACTOR: f64 = 1.0 / (32.0 * PI * PI * PI);

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct EnergyBreakdown {
    pub e1: f64,
    pub e2: f64,
    pub e3_re: f64,
    pub e3_im: f64,
    pub e4: f64,
    pub e5: f64,
    pub g: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn assemble(e1: f64, e2: f64, e3: C64, e4: f64, e5: f64, g: f64) -> Self {
        let total = e1 + FIELD_PREFACTOR * e2 - 2.0 * g * e3.re + g * g * e4 - g * e5;
        Self { e1, e2, e3_re: e3.re, e3_im: e3.im, e4, e5, g, total }
    }
}

/// `χ·Â` for each component, returned in x-space. `chi` is sampled on the mode grid.
pub fn smear(chi: &[f64], a: &VectorField) -> VectorField {
    let mut h = a.dft();
    for c in h.iter_mut() {
        c.iter_mut().zip(chi).for_each(|(z, m)| *z *= m);
    }
    VectorField::from_dft(&a.grid, h)
}

/// Spectral curl of a real vector field.
pub fn curl(a: &VectorField) -> VectorField {
    let g = &a.grid;
    let h = a.dft();
    VectorField::from_dft(g, curl_dft(g, &h))
}

pub(crate) fn curl_dft(g: &SpectralBox, h: &[Vec<C64>; 3]) -> [Vec<C64>; 3] {
    let (kx, ky, kz) = (g.kvec(0), g.kvec(1), g.kvec(2));
    let iu = C64::new(0.0, 1.0);
    let n = g.len();
    let mut out = [vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]];
    for i in 0..n {
        out[0][i] = iu * (ky[i] * h[2][i] - kz[i] * h[1][i]);
        out[1][i] = iu * (kz[i] * h[0][i] - kx[i] * h[2][i]);
        out[2][i] = iu * (kx[i] * h[1][i] - ky[i] * h[0][i]);
    }
    out
}

/// `-i ∂_j f` for raw DFT data `h` of `f`, in x-space.
pub(crate) fn momentum(g: &SpectralBox, h: &[C64], axis: usize) -> Vec<C64> {
    let mut d: Vec<C64> = h.iter().zip(g.kvec(axis)).map(|(z, k)| z * k).collect();
    g.idft(&mut d);
    d
}

/// `σ·b u` for a spinor stored as two flat components.
fn spin_term(b: &[Vec<f64>; 3], u1: &[C64], u2: &[C64], out1: &mut [C64], out2: &mut [C64]) {
    for i in 0..u1.len() {
        let (bx, by, bz) = (b[0][i], b[1][i], b[2][i]);
        let bm = C64::new(bx, -by);
        let bp = C64::new(bx, by);
        out1[i] = u1[i] * bz + bm * u2[i];
        out2[i] = bp * u1[i] - u2[i] * bz;
    }
}

/// The Pauli operator `H_{V,A}` for a fixed configuration.
#[derive(Clone, Debug)]
pub struct PauliOperator {
    pub grid: Arc<SpectralBox>,
    pub v: Arc<Vec<f64>>,
    /// `a = g χ̂*A`.
    pub a: [Vec<f64>; 3],
    /// `∇∧a`.
    pub b: [Vec<f64>; 3],
    /// `‖A‖²_{Ḣ¹}/(32π³)`, tracked separately from the operator.
    pub field_energy: f64,
}

impl PauliOperator {
    pub fn new(cfg: &ModelConfig, a: &VectorPotential) -> Result<Self> {
        Self::with_profile(cfg, &cfg.cutoff.chi, a)
    }

    pub fn with_profile(cfg: &ModelConfig, chi: &[f64], a: &VectorPotential) -> Result<Self> {
        if !cfg.grid.same(a.grid()) {
            return Err(Error::BoxMismatch);
        }
        let scaled: Vec<f64> = chi.iter().map(|c| cfg.g * c).collect();
        let am = smear(&scaled, &a.field);
        let bm = curl(&am);
        Ok(Self {
            grid: cfg.grid.clone(),
            v: Arc::new(cfg.potential.v.clone()),
            a: am.comps,
            b: bm.comps,
            field_energy: FIELD_PREFACTOR * a.h1_norm().powi(2),
        })
    }

    /// `H` acting on a flat two-component vector.
    pub fn apply_raw(&self, x: &[C64]) -> Vec<C64> {
        let g = &self.grid;
        let n = g.len();
        let mut out = vec![C64::default(); 2 * n];
        for s in 0..2 {
            let u = &x[s * n..(s + 1) * n];
            let mut h = u.to_vec();
            g.dft(&mut h);
            let mut acc = vec![C64::default(); n];
            for j in 0..3 {
                let mut w = momentum(g, &h, j);
                w.iter_mut().zip(&self.a[j]).zip(u).for_each(|((z, aj), ui)| *z -= ui * aj);
                let mut wh = w.clone();
                g.dft(&mut wh);
                let kj = g.kvec(j);
                acc.iter_mut().zip(&wh).zip(kj).for_each(|((z, y), k)| *z += y * k);
                // -a_j w_j is added after the inverse transform below.
                let o = &mut out[s * n..(s + 1) * n];
                o.iter_mut().zip(&w).zip(&self.a[j]).for_each(|((z, y), aj)| *z -= y * aj);
            }
            g.idft(&mut acc);
            let o = &mut out[s * n..(s + 1) * n];
            o.iter_mut().zip(&acc).zip(u.iter().zip(self.v.iter())).for_each(|((z, y), (ui, vi))| {
                *z += y + ui * vi;
            });
        }
        let (u1, u2) = x.split_at(n);
        let mut s1 = vec![C64::default(); n];
        let mut s2 = vec![C64::default(); n];
        spin_term(&self.b, u1, u2, &mut s1, &mut s2);
        for i in 0..n {
            out[i] -= s1[i];
            out[n + i] -= s2[i];
        }
        out
    }

    pub fn apply(&self, u: &SpinorField) -> Result<SpinorField> {
        if !self.grid.same(&u.grid) {
            return Err(Error::BoxMismatch);
        }
        SpinorField::from_data(&self.grid, self.apply_raw(&u.data))
    }

    /// `⟨u, H u⟩ + ‖A‖²_{Ḣ¹}/(32π³)`.
    pub fn expectation(&self, u: &SpinorField) -> Result<f64> {
        let hu = self.apply(u)?;
        Ok(u.inner(&hu)?.re + self.field_energy)
    }
}

pub fn apply_pauli(h: &PauliOperator, u: &SpinorField) -> Result<SpinorField> {
    h.apply(u)
}

fn check_inputs(cfg: &ModelConfig, u: &SpinorField, a: &VectorPotential) -> Result<()> {
    if !cfg.grid.same(&u.grid) || !cfg.grid.same(a.grid()) {
        return Err(Error::BoxMismatch);
    }
    u.check_normalized(1e-10)
}

/// Densities of `u` that enter every `A`-dependent term of the energy.
#[derive(Clone, Debug)]
pub struct StateDensities {
    pub grid: Arc<SpectralBox>,
    /// `‖∇u‖² + ⟨u, V u⟩`.
    pub e1: f64,
    /// `|u|²`.
    pub rho: Vec<f64>,
    /// Paramagnetic current `Σ_s Im(conj(u_s) ∇u_s)`.
    pub current: [Vec<f64>; 3],
    /// Spin density `⟨u, σ u⟩`.
    pub spin: [Vec<f64>; 3],
    /// `∇∧S`.
    pub curl_spin: [Vec<f64>; 3],
}

impl StateDensities {
    pub fn new(u: &SpinorField, v: &[f64]) -> Self {
        let g = &u.grid;
        let n = g.len();
        let w = g.w_x();
        let mut e1 = 0.0;
        let mut current = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for s in 0..2 {
            let c = u.comp(s);
            let mut h = c.to_vec();
            g.dft(&mut h);
            e1 += spectral::sobolev_sq_dft(g, &h, 1.0);
            for j in 0..3 {
                // -i∂_j u = p, so ∂_j u = i p and Im(ū ∂u) = Re(ū p).
                let p = momentum(g, &h, j);
                for i in 0..n {
                    current[j][i] += (c[i].conj() * p[i]).re;
                }
            }
        }
        let rho = u.density();
        e1 += dot_real(&rho, v, w);
        let spin = u.spin_density();
        let sf = VectorField { grid: g.clone(), comps: spin.clone() };
        let curl_spin = curl(&sf).comps;
        Self { grid: g.clone(), e1, rho, current, spin, curl_spin }
    }

    /// Energy breakdown for a smeared potential `Ã = χ̂*A` (without `g`).
    pub fn breakdown(&self, a: &VectorPotential, smeared: &VectorField, g: f64) -> EnergyBreakdown {
        let w = self.grid.w_x();
        let e2 = a.h1_norm().powi(2);
        let mut e3 = 0.0;
        let mut e4 = 0.0;
        let mut e5 = 0.0;
        for j in 0..3 {
            e3 += dot_real(&smeared.comps[j], &self.current[j], w);
            e5 += dot_real(&smeared.comps[j], &self.curl_spin[j], w);
        }
        let n = self.grid.len();
        let mut a2 = vec![0.0; n];
        for j in 0..3 {
            for i in 0..n {
                a2[i] += smeared.comps[j][i] * smeared.comps[j][i];
            }
        }
        e4 += dot_real(&a2, &self.rho, w);
        EnergyBreakdown::assemble(self.e1, e2, C64::new(e3, 0.0), e4, e5, g)
    }
}

/// Five-term breakdown with the profile `chi`.
pub fn energy_with_profile(
    u: &SpinorField,
    a: &VectorPotential,
    cfg: &ModelConfig,
    chi: &[f64],
) -> Result<EnergyBreakdown> {
    check_inputs(cfg, u, a)?;
    let g = &cfg.grid;
    let n = g.len();
    let w = g.w_x();
    let at = smear(chi, &a.field);
    let mut e1 = 0.0;
    let mut e3 = C64::default();
    for s in 0..2 {
        let c = u.comp(s);
        let mut h = c.to_vec();
        g.dft(&mut h);
        e1 += spectral::sobolev_sq_dft(g, &h, 1.0);
        for j in 0..3 {
            let p = momentum(g, &h, j);
            let mut acc = C64::default();
            for i in 0..n {
                acc += p[i].conj() * (c[i] * at.comps[j][i]);
            }
            e3 += acc * w;
        }
    }
    let rho = u.density();
    e1 += dot_real(&rho, &cfg.potential.v, w);
    let mut a2 = vec![0.0; n];
    for j in 0..3 {
        for i in 0..n {
            a2[i] += at.comps[j][i] * at.comps[j][i];
        }
    }
    let e4 = dot_real(&a2, &rho, w);
    // Integration by parts: ⟨u, σ·(∇∧Ã) u⟩ = ∫ Ã·(∇∧S).
    let spin = VectorField { grid: g.clone(), comps: u.spin_density() };
    let cs = curl(&spin);
    let e5: f64 = (0..3).map(|j| dot_real(&at.comps[j], &cs.comps[j], w)).sum();
    let e2 = a.h1_norm().powi(2);
    Ok(EnergyBreakdown::assemble(e1, e2, e3, e4, e5, cfg.g))
}

pub fn energy(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig) -> Result<EnergyBreakdown> {
    energy_with_profile(u, a, cfg, &cfg.cutoff.chi)
}

/// Energy with `χ_Λ = χ·1_{|k|≤Λ}`.
pub fn energy_cutoff(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig) -> Result<EnergyBreakdown> {
    let lambda = cfg
        .lambda
        .ok_or_else(|| Error::InvalidParameter("energy_cutoff needs a UV parameter Λ".into()))?;
    energy_with_profile(u, a, cfg, &cfg.cutoff.restricted(lambda))
}

/// `⟨u, σ·(χ̂*∇∧A) u⟩` evaluated directly with the curl on `A`.
pub fn e5_direct(u: &SpinorField, a: &VectorPotential, chi: &[f64]) -> f64 {
    let g = &u.grid;
    let n = g.len();
    let b = curl(&smear(chi, &a.field));
    let mut s1 = vec![C64::default(); n];
    let mut s2 = vec![C64::default(); n];
    spin_term(&b.comps, u.comp(0), u.comp(1), &mut s1, &mut s2);
    let mut acc = C64::default();
    for i in 0..n {
        acc += u.data[i].conj() * s1[i] + u.data[n + i].conj() * s2[i];
    }
    (acc * g.w_x()).re
}

/// `D_j u = -i∂_j u - a_j u` for both spin components, `[j][s]`.
fn covariant_derivatives(u: &SpinorField, a: &[Vec<f64>; 3]) -> [[Vec<C64>; 2]; 3] {
    let g = &u.grid;
    let mut hs = Vec::with_capacity(2);
    for s in 0..2 {
        let mut h = u.comp(s).to_vec();
        g.dft(&mut h);
        hs.push(h);
    }
    std::array::from_fn(|j| {
        std::array::from_fn(|s| {
            let mut d = momentum(g, &hs[s], j);
            d.iter_mut().zip(u.comp(s)).zip(&a[j]).for_each(|((z, ui), aj)| *z -= ui * aj);
            d
        })
    })
}

/// `‖σ·(-i∇ - g χ̂*A) u‖² + ⟨u, V u⟩ + ‖A‖²_{Ḣ¹}/(32π³)`, computed from `σ·D u`.
pub fn pauli_form_energy(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig) -> Result<f64> {
    pauli_form_energy_with_profile(u, a, cfg, &cfg.cutoff.chi)
}

pub fn pauli_form_energy_with_profile(
    u: &SpinorField,
    a: &VectorPotential,
    cfg: &ModelConfig,
    chi: &[f64],
) -> Result<f64> {
    check_inputs(cfg, u, a)?;
    let g = &cfg.grid;
    let n = g.len();
    let scaled: Vec<f64> = chi.iter().map(|c| cfg.g * c).collect();
    let am = smear(&scaled, &a.field);
    let d = covariant_derivatives(u, &am.comps);
    let iu = C64::new(0.0, 1.0);
    let mut acc = 0.0;
    for i in 0..n {
        let (x1, x2) = (d[0][0][i], d[0][1][i]);
        let (y1, y2) = (d[1][0][i], d[1][1][i]);
        let (z1, z2) = (d[2][0][i], d[2][1][i]);
        let p1 = z1 + x2 - iu * y2;
        let p2 = x1 + iu * y1 - z2;
        acc += p1.norm_sqr() + p2.norm_sqr();
    }
    let w = g.w_x();
    let pot = dot_real(&u.density(), &cfg.potential.v, w);
    Ok(acc * w + pot + FIELD_PREFACTOR * a.h1_norm().powi(2))
}

/// `⟨u, (-i∇ - g χ̂*A) u⟩`.
pub fn virial(u: &SpinorField, a: &VectorPotential, cfg: &ModelConfig) -> Result<[f64; 3]> {
    check_inputs(cfg, u, a)?;
    let scaled: Vec<f64> = cfg.cutoff.chi.iter().map(|c| cfg.g * c).collect();
    let am = smear(&scaled, &a.field);
    let d = covariant_derivatives(u, &am.comps);
    let w = u.grid.w_x();
    Ok(std::array::from_fn(|j| {
        let mut acc = C64::default();
        for s in 0..2 {
            acc += spectral::dot(u.comp(s), &d[j][s], w);
        }
        acc.re
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ImsMode {
    /// `D(ηu) = η Du - i(∇η) u` with analytic `∇η`.
    ProductRule,
    /// Spectral derivative of the sampled product `ηu`.
    Spectral,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ImsReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub relative: f64,
}

/// Both sides of `‖D u‖² = ‖D ηu‖² + ‖D η̃u‖² - ⟨u, (|∇η|² + |∇η̃|²) u⟩`
/// with `D = -i∇ - A`.
pub fn ims_check(
    u: &SpinorField,
    a: &VectorField,
    loc: &LocalizerSamples,
    mode: ImsMode,
) -> Result<ImsReport> {
    if !u.grid.same(&a.grid) {
        return Err(Error::BoxMismatch);
    }
    let g = &u.grid;
    let n = g.len();
    let w = g.w_x();
    let du = covariant_derivatives(u, &a.comps);
    let mut lhs = 0.0;
    for dj in &du {
        for ds in dj {
            lhs += spectral::norm_sqr(ds, w);
        }
    }
    let iu = C64::new(0.0, 1.0);
    let mut localized = 0.0;
    for (eta, grad) in [(&loc.eta, &loc.grad_eta), (&loc.eta_t, &loc.grad_eta_t)] {
        match mode {
            ImsMode::ProductRule => {
                for j in 0..3 {
                    for s in 0..2 {
                        let c = u.comp(s);
                        let mut acc = 0.0;
                        for i in 0..n {
                            acc += (eta[i] * du[j][s][i] - iu * grad[j][i] * c[i]).norm_sqr();
                        }
                        localized += acc * w;
                    }
                }
            }
            ImsMode::Spectral => {
                let mut prod = u.clone();
                for s in 0..2 {
                    prod.comp_mut(s).iter_mut().zip(eta.iter()).for_each(|(z, e)| *z *= e);
                }
                for dj in covariant_derivatives(&prod, &a.comps) {
                    for ds in dj {
                        localized += spectral::norm_sqr(&ds, w);
                    }
                }
            }
        }
    }
    let mut grad2 = vec![0.0; n];
    for j in 0..3 {
        for i in 0..n {
            grad2[i] += loc.grad_eta[j][i].powi(2) + loc.grad_eta_t[j][i].powi(2);
        }
    }
    let loc_term = dot_real(&u.density(), &grad2, w);
    let rhs = localized - loc_term;
    let residual = (lhs - rhs).abs();
    Ok(ImsReport { lhs, rhs, residual, relative: residual / lhs.abs().max(f64::MIN_POSITIVE) })
}

/// `‖∇u‖²` for a spinor.
pub fn kinetic(u: &SpinorField) -> f64 {
    (0..2).map(|s| spectral::sobolev_norm(&u.component(s), 1.0).unwrap_or(0.0).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, build_cutoff, build_potential, CutoffKind, Localizer, PotentialKind, SplitRule};
    use crate::spectral::{random_band_limited, random_band_limited_vector, ComplexField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(n: usize, l: f64, g: f64, chi: CutoffKind) -> ModelConfig {
        let grid = SpectralBox::new(l, n).unwrap();
        let v = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &grid).unwrap();
        let c = build_cutoff(&chi, SplitRule::Auto, &grid).unwrap();
        ModelConfig::new(v, c, g, None).unwrap()
    }

    fn random_state(cfg: &ModelConfig, seed: u64, band: usize) -> (SpinorField, VectorPotential) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u1 = random_band_limited(&cfg.grid, band, &mut rng);
        let u2 = random_band_limited(&cfg.grid, band, &mut rng);
        let u = SpinorField::from_components(&u1, &u2).unwrap().normalized().unwrap();
        let a = VectorPotential::project(&random_band_limited_vector(&cfg.grid, band, &mut rng));
        (u, a)
    }

    #[test]
    fn zero_potential_kills_interaction_terms() {
        let cfg = config(16, 6.0, 0.7, CutoffKind::One);
        let (u, _) = random_state(&cfg, 1, 2);
        let e = energy(&u, &VectorPotential::zeros(&cfg.grid), &cfg).unwrap();
        assert_eq!((e.e2, e.e3_re, e.e3_im, e.e4, e.e5), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(e.total, e.e1);
    }

    #[test]
    fn breakdown_sums_and_matches_pauli_form() {
        let cfg = config(16, 6.0, 0.37, CutoffKind::Gaussian { sigma: 2.5 });
        for seed in 0..5 {
            let (u, a) = random_state(&cfg, seed, 2);
            let a = a.scale(3.0);
            let e = energy(&u, &a, &cfg).unwrap();
            let sum = e.e1 + e.e2 / (32.0 * PI.powi(3)) - 2.0 * cfg.g * e.e3_re + cfg.g.powi(2) * e.e4
                - cfg.g * e.e5;
            assert!((sum - e.total).abs() <= 1e-12 * e.total.abs());
            assert!(e.e2 >= 0.0 && e.e4 >= 0.0);
            let p = pauli_form_energy(&u, &a, &cfg).unwrap();
            assert!((p - e.total).abs() < 1e-10 * e.total.abs(), "{p} {}", e.total);
            let h = PauliOperator::new(&cfg, &a).unwrap();
            let q = h.expectation(&u).unwrap();
            assert!((q - e.total).abs() < 1e-10 * e.total.abs());
        }
    }

    #[test]
    fn e5_integration_by_parts_sign() {
        let cfg = config(16, 6.0, 0.2, CutoffKind::Sharp { lambda: 4.0 });
        let (u, a) = random_state(&cfg, 7, 3);
        let a = a.scale(50.0);
        let e = energy(&u, &a, &cfg).unwrap();
        let direct = e5_direct(&u, &a, &cfg.cutoff.chi);
        assert!((e.e5 - direct).abs() < 1e-12 * direct.abs().max(1.0), "{} {direct}", e.e5);
        assert!(direct.abs() > 1e-3, "{direct}");
    }

    #[test]
    fn free_operator_is_laplacian_and_kills_constants() {
        let grid = SpectralBox::new(6.0, 16).unwrap();
        let v = build_potential(&PotentialKind::Zero, &grid).unwrap();
        let c = build_cutoff(&CutoffKind::One, SplitRule::Auto, &grid).unwrap();
        let cfg = ModelConfig::new(v, c, 0.4, None).unwrap();
        let h = PauliOperator::new(&cfg, &VectorPotential::zeros(&grid)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_band_limited(&grid, 4, &mut rng);
        let u = SpinorField::from_components(&f, &f.scale(C64::new(0.0, 2.0))).unwrap();
        let hu = h.apply(&u).unwrap();
        for s in 0..2 {
            let lap = spectral::apply_multiplier(
                &spectral::FourierMultiplier::neg_laplacian(&grid),
                &u.component(s),
            )
            .unwrap();
            for (x, y) in hu.comp(s).iter().zip(&lap.data) {
                assert!((x - y).norm() < 1e-11);
            }
        }
        let c = ComplexField::from_fn(&grid, |_| C64::new(0.3, -0.1));
        let uc = SpinorField::from_components(&c, &c).unwrap();
        assert!(h.apply(&uc).unwrap().data.iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn pauli_operator_is_hermitian() {
        let cfg = config(16, 6.0, 0.5, CutoffKind::One);
        let (_, a) = random_state(&cfg, 11, 5);
        let h = PauliOperator::new(&cfg, &a.scale(4.0)).unwrap();
        for seed in 20..23 {
            let (u, _) = random_state(&cfg, seed, 7);
            let (v, _) = random_state(&cfg, seed + 100, 7);
            let l = v.inner(&h.apply(&u).unwrap()).unwrap();
            let r = u.inner(&h.apply(&v).unwrap()).unwrap().conj();
            assert!((l - r).norm() < 1e-11 * l.norm().max(1.0));
        }
    }

    #[test]
    fn cutoff_identity_and_full_band() {
        let mut cfg = config(16, 6.0, 0.3, CutoffKind::One);
        let (u, a) = random_state(&cfg, 5, 5);
        cfg.lambda = Some(3.0);
        let lhs = energy_cutoff(&u, &a, &cfg).unwrap().total;
        let low = a.band_limited(3.0);
        let high = a.axpy(-1.0, &low).unwrap();
        let rhs = energy(&u, &low, &cfg).unwrap().total + FIELD_PREFACTOR * high.h1_norm().powi(2);
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs());

        cfg.lambda = Some(1e3);
        let full = energy_cutoff(&u, &a, &cfg).unwrap();
        assert_eq!(full, energy(&u, &a, &cfg).unwrap());
        assert!(energy_cutoff(&u, &a, &cfg.with_lambda(None)).is_err());
    }

    #[test]
    fn kramers_and_phase_invariance() {
        let cfg = config(16, 6.0, 0.45, CutoffKind::Gaussian { sigma: 3.0 });
        let (u, a) = random_state(&cfg, 9, 4);
        let e = energy(&u, &a, &cfg).unwrap().total;
        let (nu, na) = model::kramers_conjugate(&u, &a);
        let en = energy(&nu, &na, &cfg).unwrap().total;
        assert!((e - en).abs() < 1e-12 * e.abs());
        let ph = energy(&u.scale(C64::from_polar(1.0, 0.8)), &a, &cfg).unwrap().total;
        assert!((e - ph).abs() < 1e-12 * e.abs());
    }

    #[test]
    fn virial_vanishes_for_real_states() {
        let cfg = config(16, 6.0, 0.3, CutoffKind::One);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = spectral::random_band_limited_real(&cfg.grid, 3, &mut rng).to_complex();
        let u = SpinorField::spin_up(&f).normalized().unwrap();
        let v = virial(&u, &VectorPotential::zeros(&cfg.grid), &cfg).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn ims_identity_and_swap() {
        let grid = SpectralBox::new(8.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = SpinorField::from_components(
            &random_band_limited(&grid, 3, &mut rng),
            &random_band_limited(&grid, 3, &mut rng),
        )
        .unwrap()
        .normalized()
        .unwrap();
        let a = random_band_limited_vector(&grid, 3, &mut rng).scale(5.0);
        let loc = Localizer::new(grid.l() / 4.0, &grid).unwrap().sample(&grid);
        let r = ims_check(&u, &a, &loc, ImsMode::ProductRule).unwrap();
        assert!(r.relative < 1e-10, "{r:?}");
        let s = ims_check(&u, &a, &Localizer::swapped(&loc), ImsMode::ProductRule).unwrap();
        assert!((s.residual - r.residual).abs() < 1e-10 * r.lhs);
        let sp = ims_check(&u, &a, &loc, ImsMode::Spectral).unwrap();
        assert!(sp.relative < 1e-2);
    }

    #[test]
    fn ims_with_inner_support() {
        // u a narrow Gaussian: η̃u is negligible and the localization term too.
        let grid = SpectralBox::new(12.0, 32).unwrap();
        let f = ComplexField::from_fn(&grid, |x| {
            C64::new((-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * 2.0).exp(), 0.0)
        });
        let u = SpinorField::spin_up(&f).normalized().unwrap();
        let loc = Localizer::new(3.0, &grid).unwrap().sample(&grid);
        let r = ims_check(&u, &VectorField::zeros(&grid), &loc, ImsMode::ProductRule).unwrap();
        assert!(r.residual < 1e-10 * r.lhs);
        assert!((r.lhs - kinetic(&u)).abs() < 1e-12 * r.lhs);
    }
}
