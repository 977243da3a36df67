//! Coherent-state dictionary between one-photon parameters `f` and classical
//! vector potentials `A_f`, and the energy of product states `u ⊗ Ψ_f`.
//!
//! Parameters are stored as continuum values `f(k)` on the mode grid, so
//! `⟨f, g⟩ = w_k Σ conj(f)·g`. The map is `Â_f(k) = 2 (2π)³ |k|^{-1/2} f₊(k)`
//! with `Â` the continuum forward transform, equivalently
//! `f₊(k) = ½ (2π)^{-3} |k|^{1/2} Â(k)`.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::energy::{self, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::model::{Cutoff, ModelConfig, SpinorField, VectorPotential};
use crate::spectral::{forward_transform, inverse_transform, ScalarField, SpectralBox, Spectrum, VectorField, TWO_PI};

const TRANSVERSE_TOL: f64 = 1e-12;

/// Transverse photon parameter with its `Z⁺ ⊕ Z⁻` split.
#[derive(Clone, Debug)]
pub struct PhotonParameter {
    pub grid: Arc<SpectralBox>,
    pub f: [Vec<C64>; 3],
    pub plus: [Vec<C64>; 3],
    pub minus: [Vec<C64>; 3],
}

fn transverse_defect(grid: &SpectralBox, f: &[Vec<C64>; 3]) -> (f64, f64) {
    let (mut worst, mut norm) = (0.0f64, 0.0f64);
    for i in 0..grid.len() {
        let k = [grid.kvec(0)[i], grid.kvec(1)[i], grid.kvec(2)[i]];
        let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let fi = (f[0][i].norm_sqr() + f[1][i].norm_sqr() + f[2][i].norm_sqr()).sqrt();
        norm = norm.max(fi);
        if kn > 0.0 {
            worst = worst.max((f[0][i] * k[0] + f[1][i] * k[1] + f[2][i] * k[2]).norm() / kn);
        }
    }
    (if norm > 0.0 { worst / norm } else { 0.0 }, norm)
}

impl PhotonParameter {
    /// Accept `f` if `|k̂·f(k)| ≤ 1e-12 max_k |f|` everywhere; `f(0)` and the Nyquist modes are dropped.
    pub fn new(grid: &Arc<SpectralBox>, mut f: [Vec<C64>; 3]) -> Result<Self> {
        for c in &f {
            if c.len() != grid.len() {
                return Err(Error::BoxMismatch);
            }
        }
        let (worst, _) = transverse_defect(grid, &f);
        if worst > TRANSVERSE_TOL {
            return Err(Error::Constraint(format!("photon parameter is not transverse (relative |k̂·f| = {worst:.3e})")));
        }
        for i in 0..grid.len() {
            if grid.k2()[i] == 0.0 {
                for c in f.iter_mut() {
                    c[i] = C64::default();
                }
            }
        }
        Ok(Self::split(grid, f))
    }

    /// Orthogonal projection of `f(k)` onto `k⊥`.
    pub fn projected(grid: &Arc<SpectralBox>, mut f: [Vec<C64>; 3]) -> Result<Self> {
        for c in &f {
            if c.len() != grid.len() {
                return Err(Error::BoxMismatch);
            }
        }
        let k2 = grid.k2();
        for i in 0..grid.len() {
            if k2[i] == 0.0 {
                for c in f.iter_mut() {
                    c[i] = C64::default();
                }
                continue;
            }
            let k = [grid.kvec(0)[i], grid.kvec(1)[i], grid.kvec(2)[i]];
            let d = (f[0][i] * k[0] + f[1][i] * k[1] + f[2][i] * k[2]) / k2[i];
            for j in 0..3 {
                f[j][i] -= d * k[j];
            }
        }
        Ok(Self::split(grid, f))
    }

    pub fn zeros(grid: &Arc<SpectralBox>) -> Self {
        let z = || vec![C64::default(); grid.len()];
        Self::split(grid, [z(), z(), z()])
    }

    fn split(grid: &Arc<SpectralBox>, f: [Vec<C64>; 3]) -> Self {
        let n = grid.len();
        let mut plus = [vec![C64::default(); n], vec![C64::default(); n], vec![C64::default(); n]];
        let mut minus = plus.clone();
        for i in 0..n {
            let r = grid.reflect(i);
            for j in 0..3 {
                plus[j][i] = 0.5 * (f[j][i] + f[j][r].conj());
                minus[j][i] = 0.5 * (f[j][i] - f[j][r].conj());
            }
        }
        Self { grid: grid.clone(), f, plus, minus }
    }

    /// The `Z⁺` part as a parameter of its own.
    pub fn plus_part(&self) -> Self {
        Self::split(&self.grid, self.plus.clone())
    }

    /// `‖f‖_{L²}`, finite exactly when `A_f ∈ Ḣ^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        weighted(&self.grid, &self.f, &self.f, 0.0).re.sqrt()
    }

    pub fn transverse_defect(&self) -> f64 {
        transverse_defect(&self.grid, &self.f).0
    }

    /// Largest violation of `f₊(-k) = conj f₊(k)` and `f₋(-k) = -conj f₋(k)`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            let r = self.grid.reflect(i);
            for j in 0..3 {
                worst = worst.max((self.plus[j][r] - self.plus[j][i].conj()).norm());
                worst = worst.max((self.minus[j][r] + self.minus[j][i].conj()).norm());
            }
        }
        worst
    }
}

/// `⟨f, |k|^s g⟩_{L²(dk)}` on the mode grid.
pub fn weighted(grid: &SpectralBox, f: &[Vec<C64>; 3], g: &[Vec<C64>; 3], s: f64) -> C64 {
    let k2 = grid.k2();
    let mut acc = C64::default();
    for i in 0..grid.len() {
        if k2[i] == 0.0 {
            continue;
        }
        let w = if s == 0.0 { 1.0 } else { k2[i].powf(0.5 * s) };
        for j in 0..3 {
            acc += f[j][i].conj() * g[j][i] * w;
        }
    }
    acc * grid.w_k()
}

/// `⟨f₊, |k| f₊⟩`, `⟨f₋, |k| f₋⟩` and `⟨f₊, |k| f₋⟩`.
pub fn field_weights(f: &PhotonParameter) -> (f64, f64, C64) {
    let g = &f.grid;
    (weighted(g, &f.plus, &f.plus, 1.0).re, weighted(g, &f.minus, &f.minus, 1.0).re, weighted(g, &f.plus, &f.minus, 1.0))
}

/// `A_f = 2 F(conj(f₊) |k|^{-1/2})`; only `f₊` enters.
pub fn potential_from_parameter(f: &PhotonParameter) -> Result<VectorPotential> {
    let g = &f.grid;
    let defect = f.transverse_defect();
    if defect > TRANSVERSE_TOL {
        return Err(Error::Constraint(format!("photon parameter is not transverse (relative |k̂·f| = {defect:.3e})")));
    }
    let k2 = g.k2();
    let pre = 2.0 * TWO_PI.powi(3);
    let mut comps: [Vec<f64>; 3] = [vec![0.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
    let mut imag = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..3 {
        let data: Vec<C64> = (0..g.len())
            .map(|i| if k2[i] > 0.0 { f.plus[j][i] * (pre * k2[i].powf(-0.25)) } else { C64::default() })
            .collect();
        let x = inverse_transform(&Spectrum { grid: g.clone(), data });
        for (c, z) in comps[j].iter_mut().zip(&x.data) {
            *c = z.re;
            imag = imag.max(z.im.abs());
            scale = scale.max(z.norm());
        }
    }
    debug_assert!(imag <= 1e-10 * scale.max(1.0), "A_f has an imaginary part {imag:e}");
    Ok(VectorPotential { field: VectorField { grid: g.clone(), comps } })
}

/// The `Z⁺` parameter of a Coulomb-gauge potential, `f₊ = ½(2π)^{-3}|k|^{1/2}Â`.
pub fn parameter_from_potential(a: &VectorPotential) -> Result<PhotonParameter> {
    let checked = VectorPotential::new(a.field.clone())?;
    let g = checked.grid().clone();
    let k2 = g.k2();
    let pre = 0.5 / TWO_PI.powi(3);
    let mut f: [Vec<C64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for j in 0..3 {
        let ahat = forward_transform(&ScalarField { grid: g.clone(), data: checked.field.comps[j].clone() }.to_complex());
        f[j] = (0..g.len()).map(|i| if k2[i] > 0.0 { ahat.data[i] * (pre * k2[i].powf(0.25)) } else { C64::default() }).collect();
    }
    Ok(PhotonParameter::split(&g, f))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalOrdering {
    pub value: f64,
    /// Set when the sum is cut only by the grid band (no `Λ`, `χ` not decaying).
    pub band_limited: bool,
}

/// `2 g² ‖χ_Λ / √|k|‖²_{L²} = 2 g² w_k Σ_{0<|k|≤Λ} χ(k)² / |k|`.
pub fn normal_ordering_constant(cutoff: &Cutoff, g: f64, lambda: Option<f64>) -> NormalOrdering {
    let grid = &cutoff.grid;
    let k2 = grid.k2();
    let lim = lambda.map_or(f64::INFINITY, |l| l * l);
    let mut s = 0.0;
    let mut edge = 0.0f64;
    let band2 = grid.band().powi(2);
    for i in 0..grid.len() {
        if k2[i] > 0.0 && k2[i] <= lim {
            s += cutoff.chi[i].powi(2) / k2[i].sqrt();
            if k2[i] > 0.8 * band2 {
                edge = edge.max(cutoff.chi[i].abs());
            }
        }
    }
    NormalOrdering { value: 2.0 * g * g * grid.w_k() * s, band_limited: lambda.is_none() && edge > 1e-6 }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductStateEnergy {
    pub constant: f64,
    pub minus_energy: f64,
    pub matter: EnergyBreakdown,
    pub total: f64,
}

/// `⟨u⊗Ψ_f, ℍ u⊗Ψ_f⟩ = 2g²‖χ/√|k|‖² + ⟨f₋, |k| f₋⟩ + ℰ(u, A_f)`.
pub fn product_state_energy(u: &SpinorField, f: &PhotonParameter, cfg: &ModelConfig) -> Result<ProductStateEnergy> {
    if !cfg.grid.same(&f.grid) {
        return Err(Error::BoxMismatch);
    }
    let a = potential_from_parameter(f)?;
    let matter = energy::energy(u, &a, cfg)?;
    let constant = normal_ordering_constant(&cfg.cutoff, cfg.g, cfg.lambda).value;
    let (_, minus_energy, _) = field_weights(f);
    Ok(ProductStateEnergy { constant, minus_energy, total: constant + minus_energy + matter.total, matter })
}

/// Frame `ε₁ ∝ k∧ẑ`, `ε₂ = k̂∧ε₁`, with `x̂` in place of `ẑ` on the `z`-axis.
pub fn polarization_frame(k: [f64; 3]) -> [[f64; 3]; 2] {
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let norm = |a: [f64; 3]| (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let kn = norm(k);
    let kh = [k[0] / kn, k[1] / kn, k[2] / kn];
    let mut e1 = cross(kh, [0.0, 0.0, 1.0]);
    if norm(e1) < 1e-12 {
        e1 = cross(kh, [1.0, 0.0, 0.0]);
    }
    let n1 = norm(e1);
    let e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
    [e1, cross(kh, e1)]
}

/// Components `f_τ = ε_τ·f` in the standard frame, for serialization.
pub fn frame_components(f: &PhotonParameter) -> [Vec<C64>; 2] {
    let g = &f.grid;
    let mut out = [vec![C64::default(); g.len()], vec![C64::default(); g.len()]];
    for i in 0..g.len() {
        if g.k2()[i] == 0.0 {
            continue;
        }
        let frame = polarization_frame([g.kvec(0)[i], g.kvec(1)[i], g.kvec(2)[i]]);
        for t in 0..2 {
            out[t][i] = (0..3).map(|j| f.f[j][i] * frame[t][j]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::FIELD_PREFACTOR;
    use crate::model::{build_cutoff, build_potential, CutoffKind, PotentialKind, SplitRule};
    use crate::spectral::random_band_limited_vector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_param(grid: &Arc<SpectralBox>, rng: &mut ChaCha8Rng, band: f64) -> PhotonParameter {
        let k2 = grid.k2().to_vec();
        let mut f: [Vec<C64>; 3] = std::array::from_fn(|_| vec![C64::default(); grid.len()]);
        for i in 0..grid.len() {
            if k2[i] <= band * band {
                for c in f.iter_mut() {
                    c[i] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
        }
        PhotonParameter::projected(grid, f).unwrap()
    }

    #[test]
    fn zero_and_minus_parameters_give_zero_potential() {
        let grid = SpectralBox::new(6.0, 8).unwrap();
        assert_eq!(potential_from_parameter(&PhotonParameter::zeros(&grid)).unwrap().field.max_abs(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_param(&grid, &mut rng, 3.0);
        let minus = PhotonParameter::new(&grid, f.minus.clone()).unwrap();
        assert!(potential_from_parameter(&minus).unwrap().field.max_abs() < 1e-12);
    }

    #[test]
    fn roundtrip_and_parseval() {
        let grid = SpectralBox::new(6.0, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = VectorPotential::project(&random_band_limited_vector(&grid, 3, &mut rng));
        let f = parameter_from_potential(&a).unwrap();
        let back = potential_from_parameter(&f).unwrap();
        let d = back.distance_h1(&a).unwrap() / a.h1_norm();
        assert!(d < 1e-12, "{d}");
        let (pp, mm, _) = field_weights(&f);
        assert!((pp / (FIELD_PREFACTOR * a.h1_norm().powi(2)) - 1.0).abs() < 1e-12);
        assert!(mm < 1e-28);
        assert!(f.symmetry_defect() < 1e-14);
    }

    #[test]
    fn one_mode_field_energy() {
        // A = e⊥ cos(k₀x₁): ‖A‖²_{Ḣ¹} = k₀² L³ / 2.
        let grid = SpectralBox::new(6.0, 8).unwrap();
        let k0 = 2.0 * TWO_PI / grid.l();
        let a = VectorPotential::new(VectorField::from_fn(&grid, |x| [0.0, 0.0, (k0 * x[0]).cos()])).unwrap();
        let f = parameter_from_potential(&a).unwrap();
        let exact = k0 * k0 * grid.l().powi(3) / 2.0 / (32.0 * PI.powi(3));
        assert!((field_weights(&f).0 / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plus_minus_cross_term_has_zero_real_part() {
        let grid = SpectralBox::new(6.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let f = random_param(&grid, &mut rng, 4.0);
            let (_, _, cross) = field_weights(&f);
            assert!(cross.re.abs() < 1e-12 * weighted(&grid, &f.f, &f.f, 1.0).re);
        }
    }

    #[test]
    fn rejects_longitudinal_parameter() {
        let grid = SpectralBox::new(6.0, 8).unwrap();
        let f: [Vec<C64>; 3] = std::array::from_fn(|j| grid.kvec(j).iter().map(|&k| C64::new(k, 0.0)).collect());
        assert!(PhotonParameter::new(&grid, f).is_err());
    }

    #[test]
    fn normal_ordering_matches_radial_integral() {
        let grid = SpectralBox::new(40.0, 64).unwrap();
        let c = build_cutoff(&CutoffKind::One, SplitRule::Auto, &grid).unwrap();
        let (g, lam) = (0.3, 4.0);
        let v = normal_ordering_constant(&c, g, Some(lam)).value;
        // 2g² ∫_{|k|≤Λ} dk/|k| = 4π g² Λ².
        let exact = 4.0 * PI * g * g * lam * lam;
        assert!((v / exact - 1.0).abs() < 0.02, "{v} vs {exact}");
        assert_eq!(normal_ordering_constant(&c, 0.0, Some(lam)).value, 0.0);
        let v2 = normal_ordering_constant(&c, 2.0 * g, Some(lam)).value;
        assert!((v2 / v - 4.0).abs() < 1e-12);
        assert!(normal_ordering_constant(&c, g, None).band_limited);
    }

    #[test]
    fn adding_minus_part_raises_product_energy() {
        let grid = SpectralBox::new(6.0, 8).unwrap();
        let pot = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &grid).unwrap();
        let chi = build_cutoff(&CutoffKind::Sharp { lambda: 3.0 }, SplitRule::Auto, &grid).unwrap();
        let cfg = ModelConfig::new(pot, chi, 0.2, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = crate::spectral::random_band_limited(&grid, 2, &mut rng);
        let u = SpinorField::spin_up(&phi).normalized().unwrap();
        let f = random_param(&grid, &mut rng, 3.0);
        let plus = f.plus_part();
        let e_full = product_state_energy(&u, &f, &cfg).unwrap();
        let e_plus = product_state_energy(&u, &plus, &cfg).unwrap();
        let gap = e_full.total - e_plus.total;
        assert!(gap > 0.0);
        assert!((gap - field_weights(&f).1).abs() < 1e-10 * e_full.total.abs().max(1.0));
        let zero = product_state_energy(&u, &PhotonParameter::zeros(&grid), &cfg).unwrap();
        let hv = energy::energy(&u, &VectorPotential::zeros(&grid), &cfg).unwrap().total;
        assert!((zero.total - zero.constant - hv).abs() < 1e-12);
    }

    #[test]
    fn frame_is_orthonormal_and_transverse() {
        for k in [[1.0, 2.0, 3.0], [0.0, 0.0, 2.0], [1.0, 0.0, 0.0]] {
            let [e1, e2] = polarization_frame(k);
            let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            assert!(dot(e1, k).abs() < 1e-14 && dot(e2, k).abs() < 1e-14);
            assert!((dot(e1, e1) - 1.0).abs() < 1e-14 && dot(e1, e2).abs() < 1e-14);
        }
    }
}
