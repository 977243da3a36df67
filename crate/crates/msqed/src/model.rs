//! Physical configuration: potentials and their decompositions, cutoff
//! profiles and their splits, the state containers and the Kramers map.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorentz;
use crate::solver::eigen;
use crate::spectral::{
    self, divergence_defect, leray_project, norm3, ComplexField, FourierMultiplier, Spectrum,
    SpectralBox, VectorField,
};

/// Smooth pair `η, η̃` with `η² + η̃² = 1`, `η = 1` on `|x| ≤ R` and `η = 0`
/// on `|x| ≥ 2R`. The angle is a quintic smoothstep of `|x|/R - 1`.
#[derive(Clone, Copy, Debug)]
pub struct Localizer {
    pub radius: f64,
}

/// Grid samples of a [`Localizer`] with analytic gradients.
#[derive(Clone, Debug)]
pub struct LocalizerSamples {
    pub eta: Vec<f64>,
    pub eta_t: Vec<f64>,
    pub grad_eta: [Vec<f64>; 3],
    pub grad_eta_t: [Vec<f64>; 3],
}

impl Localizer {
    pub fn new(radius: f64, grid: &SpectralBox) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("localization radius {radius}")));
        }
        if 2.0 * radius > grid.l() / 2.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "localization radius {radius}: the transition shell up to 2R = {} leaves the box of half-width {}",
                2.0 * radius,
                grid.l() / 2.0
            )));
        }
        Ok(Self { radius })
    }

    /// `(η, η̃, ∇η, ∇η̃)` at `x`.
    pub fn eval(&self, x: [f64; 3]) -> (f64, f64, [f64; 3], [f64; 3]) {
        let r = norm3(x);
        let t = (r / self.radius - 1.0).clamp(0.0, 1.0);
        let s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
        let theta = std::f64::consts::FRAC_PI_2 * s;
        let (sn, cs) = theta.sin_cos();
        let mut ge = [0.0; 3];
        let mut gt = [0.0; 3];
        if t > 0.0 && t < 1.0 && r > 0.0 {
            let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t);
            let dtheta = std::f64::consts::FRAC_PI_2 * ds / self.radius;
            for a in 0..3 {
                let xh = x[a] / r;
                ge[a] = -sn * dtheta * xh;
                gt[a] = cs * dtheta * xh;
            }
        }
        (cs, sn, ge, gt)
    }

    pub fn sample(&self, grid: &SpectralBox) -> LocalizerSamples {
        let n = grid.len();
        let mut out = LocalizerSamples {
            eta: vec![0.0; n],
            eta_t: vec![0.0; n],
            grad_eta: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            grad_eta_t: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        };
        for i in 0..n {
            let (e, et, ge, gt) = self.eval(grid.x(i));
            out.eta[i] = e;
            out.eta_t[i] = et;
            for a in 0..3 {
                out.grad_eta[a][i] = ge[a];
                out.grad_eta_t[a][i] = gt[a];
            }
        }
        out
    }

    pub fn swapped(samples: &LocalizerSamples) -> LocalizerSamples {
        LocalizerSamples {
            eta: samples.eta_t.clone(),
            eta_t: samples.eta.clone(),
            grad_eta: samples.grad_eta_t.clone(),
            grad_eta_t: samples.grad_eta.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `V = ω₀² |x|²`, so `-Δ + V` has ground energy `3ω₀`.
    Harmonic { omega0: f64 },
    /// `V = -c / sqrt(|x|² + a²)`; `a` defaults to the grid spacing.
    SoftCoulomb { c: f64, a_soft: Option<f64> },
    /// Periodic Coulomb potential from the symbol `-4πc/|k|²`, zero mode 0.
    SpectralCoulomb { c: f64 },
    /// `V = -depth · exp(-|x|²/width²)`.
    GaussianWell { depth: f64, width: f64 },
    Zero,
    Custom { values: Vec<f64> },
}

/// Sampled potential with a decomposition `V = V₁ + V₂`, `V₁ ≥ 0`.
#[derive(Clone, Debug)]
pub struct Potential {
    pub grid: Arc<SpectralBox>,
    pub kind: PotentialKind,
    pub v: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Localization radius of the decomposition, `None` for a user-supplied split.
    pub radius: Option<f64>,
}

fn even_residual(grid: &SpectralBox, v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    (0..grid.len()).map(|i| (v[i] - v[grid.reflect(i)]).abs()).fold(0.0, f64::max) / scale
}

pub fn build_potential(kind: &PotentialKind, grid: &Arc<SpectralBox>) -> Result<Potential> {
    let samples: Vec<f64> = match kind {
        PotentialKind::Harmonic { omega0 } => {
            if !(*omega0 > 0.0) {
                return Err(Error::InvalidParameter(format!("omega0 = {omega0} must be positive")));
            }
            let w2 = omega0 * omega0;
            (0..grid.len())
                .map(|i| {
                    let x = grid.x(i);
                    w2 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
                })
                .collect()
        }
        PotentialKind::SoftCoulomb { c, a_soft } => {
            let a = a_soft.unwrap_or(grid.dx());
            if !(*c > 0.0) || !(a >= 0.0) {
                return Err(Error::InvalidParameter(format!("soft coulomb c = {c}, a = {a}")));
            }
            if a == 0.0 {
                return Err(Error::InvalidParameter(
                    "a_soft = 0 puts the singularity on the origin grid point".into(),
                ));
            }
            (0..grid.len())
                .map(|i| {
                    let x = grid.x(i);
                    -c / (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + a * a).sqrt()
                })
                .collect()
        }
        PotentialKind::SpectralCoulomb { c } => {
            if !(*c > 0.0) {
                return Err(Error::InvalidParameter(format!("coulomb c = {c}")));
            }
            let data = (0..grid.len())
                .map(|i| {
                    let k2 = grid.k2()[i];
                    if k2 == 0.0 {
                        C64::default()
                    } else {
                        C64::new(-4.0 * std::f64::consts::PI * c / k2, 0.0)
                    }
                })
                .collect();
            let v = spectral::inverse_transform(&Spectrum { grid: grid.clone(), data });
            v.data.iter().map(|z| z.re).collect()
        }
        PotentialKind::GaussianWell { depth, width } => {
            if !(*depth > 0.0 && *width > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian well depth = {depth}, width = {width}"
                )));
            }
            (0..grid.len())
                .map(|i| {
                    let x = grid.x(i);
                    -depth * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width)).exp()
                })
                .collect()
        }
        PotentialKind::Zero => vec![0.0; grid.len()],
        PotentialKind::Custom { values } => {
            if values.len() != grid.len() {
                return Err(Error::InvalidParameter(format!(
                    "custom potential has {} samples, grid needs {}",
                    values.len(),
                    grid.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("custom potential has non-finite samples".into()));
            }
            let res = even_residual(grid, values);
            if res > 1e-12 {
                return Err(Error::Constraint(format!(
                    "custom potential is not even under x -> -x on the grid (relative residual {res:.3e})"
                )));
            }
            values.clone()
        }
    };
    let mut p = Potential::from_samples_unchecked(grid, samples);
    p.kind = kind.clone();
    p.decompose(grid.l() / 4.0)?;
    Ok(p)
}

impl Potential {
    /// Wrap samples without any check; the split is `V₁ = 0`, `V₂ = V`.
    pub fn from_samples_unchecked(grid: &Arc<SpectralBox>, v: Vec<f64>) -> Self {
        let n = v.len();
        Self {
            grid: grid.clone(),
            kind: PotentialKind::Custom { values: Vec::new() },
            v2: v.clone(),
            v,
            v1: vec![0.0; n],
            radius: None,
        }
    }

    /// `V₁ = V₊ η̃_R²`, `V₂ = V - V₁`.
    pub fn decompose(&mut self, radius: f64) -> Result<()> {
        let loc = Localizer::new(radius, &self.grid)?;
        for i in 0..self.v.len() {
            let (_, et, _, _) = loc.eval(self.grid.x(i));
            self.v1[i] = self.v[i].max(0.0) * et * et;
            self.v2[i] = self.v[i] - self.v1[i];
        }
        self.radius = Some(radius);
        Ok(())
    }

    /// The trivial split `V₁ = V`, `V₂ = 0`; requires `V ≥ 0`.
    pub fn with_trivial_split(mut self) -> Result<Self> {
        if self.v.iter().any(|&x| x < 0.0) {
            return Err(Error::Constraint("V₁ = V needs V ≥ 0".into()));
        }
        self.v1 = self.v.clone();
        self.v2 = vec![0.0; self.v.len()];
        self.radius = None;
        Ok(self)
    }

    /// The potential `V₁` as a potential in its own right (split `V₁ = V₁`).
    pub fn part_one(&self) -> Potential {
        Potential {
            grid: self.grid.clone(),
            kind: PotentialKind::Custom { values: Vec::new() },
            v: self.v1.clone(),
            v1: self.v1.clone(),
            v2: vec![0.0; self.v1.len()],
            radius: None,
        }
    }

    pub fn min(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn negative_part(&self) -> Vec<f64> {
        self.v.iter().map(|&x| (-x).max(0.0)).collect()
    }

    pub fn even_residual(&self) -> f64 {
        even_residual(&self.grid, &self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CutoffKind {
    /// `χ ≡ 1`; `χ/|k|` lies in `L^{3,∞}` only.
    One,
    /// `χ = 1_{|k| ≤ Λ}`.
    Sharp { lambda: f64 },
    /// `χ = exp(-|k|²/(2σ²))`.
    Gaussian { sigma: f64 },
    Custom { values: Vec<f64> },
}

/// Which part of a split a profile is assigned to by default.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitRule {
    /// `χ₁ = χ`, `χ₂ = 0` unless `χ/|k|` fails to be square integrable.
    Auto,
    AllL2,
    AllWeak,
}

/// Cutoff profile `χ = χ₁ + χ₂` sampled on the mode grid.
#[derive(Clone, Debug)]
pub struct Cutoff {
    pub grid: Arc<SpectralBox>,
    pub kind: CutoffKind,
    pub chi: Vec<f64>,
    pub chi1: Vec<f64>,
    pub chi2: Vec<f64>,
    /// `lim_{k→0} χ₂(k)`, used for the analytic core of the weak-norm estimate.
    pub chi2_at_zero: Option<f64>,
    pub chi1_at_zero: Option<f64>,
}

pub fn build_cutoff(kind: &CutoffKind, split: SplitRule, grid: &Arc<SpectralBox>) -> Result<Cutoff> {
    let (chi, at_zero): (Vec<f64>, Option<f64>) = match kind {
        CutoffKind::One => (vec![1.0; grid.len()], Some(1.0)),
        CutoffKind::Sharp { lambda } => {
            if !(*lambda > 0.0) {
                return Err(Error::InvalidParameter(format!("cutoff Λ = {lambda} must be positive")));
            }
            let m = FourierMultiplier::ball(grid, *lambda);
            (m.values.iter().map(|z| z.re).collect(), Some(1.0))
        }
        CutoffKind::Gaussian { sigma } => {
            if !(*sigma > 0.0) {
                return Err(Error::InvalidParameter(format!("cutoff σ = {sigma} must be positive")));
            }
            let chi = (0..grid.len())
                .map(|i| (-grid.k2()[i] / (2.0 * sigma * sigma)).exp())
                .collect();
            (chi, Some(1.0))
        }
        CutoffKind::Custom { values } => {
            if values.len() != grid.len() || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("custom cutoff samples".into()));
            }
            (values.clone(), None)
        }
    };
    let mut chi = chi;
    for (i, c) in chi.iter_mut().enumerate() {
        if grid.is_nyquist(i) {
            *c = 0.0;
        }
    }
    let weak = match split {
        SplitRule::AllWeak => true,
        SplitRule::AllL2 => false,
        SplitRule::Auto => matches!(kind, CutoffKind::One),
    };
    let zeros = vec![0.0; grid.len()];
    let (chi1, chi2, z1, z2) = if weak {
        (zeros, chi.clone(), Some(0.0), at_zero)
    } else {
        (chi.clone(), zeros, at_zero, Some(0.0))
    };
    Ok(Cutoff {
        grid: grid.clone(),
        kind: kind.clone(),
        chi,
        chi1,
        chi2,
        chi1_at_zero: z1,
        chi2_at_zero: z2,
    })
}

impl Cutoff {
    pub fn even_residual(&self) -> f64 {
        even_residual(&self.grid, &self.chi)
    }
    /// `χ · 1_{|k| ≤ Λ}`.
    pub fn restricted(&self, lambda: f64) -> Vec<f64> {
        let m = FourierMultiplier::ball(&self.grid, lambda);
        self.chi.iter().zip(&m.values).map(|(c, b)| c * b.re).collect()
    }
}

/// Potential, cutoff and coupling on one grid.
#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub grid: Arc<SpectralBox>,
    pub potential: Arc<Potential>,
    pub cutoff: Arc<Cutoff>,
    pub g: f64,
    pub lambda: Option<f64>,
}

impl ModelConfig {
    pub fn new(potential: Potential, cutoff: Cutoff, g: f64, lambda: Option<f64>) -> Result<Self> {
        if !potential.grid.same(&cutoff.grid) {
            return Err(Error::BoxMismatch);
        }
        if !g.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling g = {g}")));
        }
        if let Some(l) = lambda {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("UV parameter Λ = {l} must be positive")));
            }
        }
        Ok(Self {
            grid: potential.grid.clone(),
            potential: Arc::new(potential),
            cutoff: Arc::new(cutoff),
            g,
            lambda,
        })
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }
    pub fn with_lambda(&self, lambda: Option<f64>) -> Self {
        Self { lambda, ..self.clone() }
    }
    pub fn with_potential(&self, potential: Potential) -> Self {
        Self { potential: Arc::new(potential), ..self.clone() }
    }
}

/// Two-component spinor; component `s` occupies `data[s·N³ .. (s+1)·N³]`.
#[derive(Clone, Debug)]
pub struct SpinorField {
    pub grid: Arc<SpectralBox>,
    pub data: Vec<C64>,
}

impl SpinorField {
    pub fn zeros(grid: &Arc<SpectralBox>) -> Self {
        Self { grid: grid.clone(), data: vec![C64::default(); 2 * grid.len()] }
    }
    pub fn from_components(up: &ComplexField, down: &ComplexField) -> Result<Self> {
        if !up.grid.same(&down.grid) {
            return Err(Error::BoxMismatch);
        }
        let mut data = up.data.clone();
        data.extend_from_slice(&down.data);
        Ok(Self { grid: up.grid.clone(), data })
    }
    /// `φ ⊗ (1, 0)`.
    pub fn spin_up(phi: &ComplexField) -> Self {
        let mut data = phi.data.clone();
        data.resize(2 * phi.grid.len(), C64::default());
        Self { grid: phi.grid.clone(), data }
    }
    pub fn from_data(grid: &Arc<SpectralBox>, data: Vec<C64>) -> Result<Self> {
        if data.len() != 2 * grid.len() {
            return Err(Error::InvalidParameter("spinor length".into()));
        }
        Ok(Self { grid: grid.clone(), data })
    }
    pub fn comp(&self, s: usize) -> &[C64] {
        let n = self.grid.len();
        &self.data[s * n..(s + 1) * n]
    }
    pub fn comp_mut(&mut self, s: usize) -> &mut [C64] {
        let n = self.grid.len();
        &mut self.data[s * n..(s + 1) * n]
    }
    pub fn component(&self, s: usize) -> ComplexField {
        ComplexField { grid: self.grid.clone(), data: self.comp(s).to_vec() }
    }
    pub fn inner(&self, o: &Self) -> Result<C64> {
        if !self.grid.same(&o.grid) {
            return Err(Error::BoxMismatch);
        }
        Ok(spectral::dot(&self.data, &o.data, self.grid.w_x()))
    }
    pub fn norm(&self) -> f64 {
        spectral::norm_sqr(&self.data, self.grid.w_x()).sqrt()
    }
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Constraint("cannot normalize a zero spinor".into()));
        }
        self.data.iter_mut().for_each(|z| *z /= n);
        Ok(())
    }
    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }
    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|z| z * c).collect() }
    }
    /// `self + c·o`.
    pub fn axpy(&self, c: C64, o: &Self) -> Result<Self> {
        if !self.grid.same(&o.grid) {
            return Err(Error::BoxMismatch);
        }
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + c * b).collect();
        Ok(Self { grid: self.grid.clone(), data })
    }
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::Constraint(format!("spinor norm {n} is not 1")));
        }
        Ok(())
    }
    /// Pointwise density `|u|²`.
    pub fn density(&self) -> Vec<f64> {
        let n = self.grid.len();
        (0..n).map(|i| self.data[i].norm_sqr() + self.data[n + i].norm_sqr()).collect()
    }
    /// Pointwise spin density `S = ⟨u, σ u⟩_{C²}`.
    pub fn spin_density(&self) -> [Vec<f64>; 3] {
        let n = self.grid.len();
        let mut s = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            let (a, b) = (self.data[i], self.data[n + i]);
            let ab = a.conj() * b;
            s[0][i] = 2.0 * ab.re;
            s[1][i] = 2.0 * ab.im;
            s[2][i] = a.norm_sqr() - b.norm_sqr();
        }
        s
    }
}

/// Real, mean-zero, divergence-free vector potential.
#[derive(Clone, Debug)]
pub struct VectorPotential {
    pub field: VectorField,
}

impl VectorPotential {
    pub fn zeros(grid: &Arc<SpectralBox>) -> Self {
        Self { field: VectorField::zeros(grid) }
    }
    /// Accept `F` if it is already mean-zero and divergence-free to `1e-12`.
    pub fn new(field: VectorField) -> Result<Self> {
        let (d, t) = divergence_defect(&field);
        let h = field.dft();
        let mean = (h[0][0].norm_sqr() + h[1][0].norm_sqr() + h[2][0].norm_sqr()).sqrt();
        if d > 1e-12 * t.max(f64::MIN_POSITIVE) || mean > 1e-12 * t.max(f64::MIN_POSITIVE) {
            return Err(Error::Constraint(format!(
                "vector potential is not mean-zero and divergence-free (|k·Â| = {d:.3e}, |Â(0)| = {mean:.3e}, |Â| = {t:.3e})"
            )));
        }
        Ok(Self { field })
    }
    /// Leray projection of an arbitrary real field.
    pub fn project(field: &VectorField) -> Self {
        Self { field: leray_project(field) }
    }
    pub fn grid(&self) -> &Arc<SpectralBox> {
        &self.field.grid
    }
    pub fn h1_norm(&self) -> f64 {
        spectral::sobolev_norm_vector(&self.field, 1.0).unwrap_or(0.0)
    }
    pub fn reflected(&self) -> Self {
        Self { field: self.field.reflected() }
    }
    pub fn scale(&self, c: f64) -> Self {
        Self { field: self.field.scale(c) }
    }
    pub fn axpy(&self, c: f64, o: &Self) -> Result<Self> {
        Ok(Self { field: self.field.axpy(c, &o.field)? })
    }
    pub fn distance_h1(&self, o: &Self) -> Result<f64> {
        Ok(self.axpy(-1.0, o)?.h1_norm())
    }
    /// Restriction `1_{|k| ≤ Λ} Â`.
    pub fn band_limited(&self, lambda: f64) -> Self {
        let m = FourierMultiplier::ball(&self.field.grid, lambda);
        Self { field: spectral::apply_multiplier_vector(&m, &self.field).expect("same grid") }
    }
}

/// `(σ₂ conj(u(-x)), A(-x))` with `σ₂ = ((0, -i), (i, 0))`.
pub fn kramers_conjugate(u: &SpinorField, a: &VectorPotential) -> (SpinorField, VectorPotential) {
    let g = &u.grid;
    let n = g.len();
    let mut out = SpinorField::zeros(g);
    let i_unit = C64::new(0.0, 1.0);
    for i in 0..n {
        let r = g.reflect(i);
        let (u1, u2) = (u.data[r].conj(), u.data[n + r].conj());
        out.data[i] = -i_unit * u2;
        out.data[n + i] = i_unit * u1;
    }
    (out, a.reflected())
}

/// Grid-level feasibility report for a potential and a cutoff.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub v_even_residual: f64,
    pub chi_even_residual: f64,
    pub v1_min: f64,
    pub split_residual: f64,
    pub chi1_over_k_l2: f64,
    pub chi2_over_k_weak3: f64,
    /// `‖χ₁/|k|‖_{L²} + ‖χ₂/|k|‖_{L^{3,∞}}`, an upper estimate of the sum-space norm.
    pub chi_over_k_sum: f64,
    pub caveats: Vec<String>,
    pub violations: Vec<String>,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn hypothesis_report(v: &Potential, chi: &Cutoff) -> HypothesisReport {
    let mut violations = Vec::new();
    let mut caveats = Vec::new();
    if !v.grid.same(&chi.grid) {
        violations.push("potential and cutoff live on different grids".into());
    }
    let v_even = v.even_residual();
    if v_even > 1e-12 {
        violations.push(format!("V is not even: relative residual {v_even:.3e}"));
    }
    let chi_even = chi.even_residual();
    if chi_even > 1e-12 {
        violations.push(format!("χ is not even: relative residual {chi_even:.3e}"));
    }
    let v1_min = v.v1.iter().copied().fold(f64::INFINITY, f64::min);
    if v1_min < 0.0 {
        violations.push(format!("V₁ has negative samples (min {v1_min:.3e})"));
    }
    let split_residual = (0..v.v.len())
        .map(|i| (v.v[i] - v.v1[i] - v.v2[i]).abs())
        .fold(0.0, f64::max);
    if split_residual > 0.0 {
        violations.push(format!("V₁ + V₂ differs from V by {split_residual:.3e}"));
    }
    let chi1 = lorentz::symbol_l2_over_k(&chi.grid, &chi.chi1, chi.chi1_at_zero);
    let chi2 = lorentz::symbol_weak_over_k(&chi.grid, &chi.chi2, chi.chi2_at_zero);
    if chi.chi1_at_zero.is_none() || chi.chi2_at_zero.is_none() {
        caveats.push("custom cutoff: norms are band-only estimates without an analytic core".into());
    }
    if matches!(chi.kind, CutoffKind::One) {
        caveats.push("χ = 1: χ/|k| is not square integrable; the weak-norm estimate covers it".into());
    }
    HypothesisReport {
        v_even_residual: v_even,
        chi_even_residual: chi_even,
        v1_min,
        split_residual,
        chi1_over_k_l2: chi1.value,
        chi2_over_k_weak3: chi2.value,
        chi_over_k_sum: chi1.value + chi2.value,
        caveats,
        violations,
    }
}

/// Candidate `b` with `⟨u, V₋ u⟩ ≤ a ‖u‖²_{Ḣ^{1/2}} + b` on the grid, from the
/// lowest eigenvalue of `a|k| - V₋`. A sampled value, not a certificate.
pub fn estimate_relative_bound(v: &Potential, a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::InvalidParameter(format!("a = {a}")));
    }
    let grid = v.grid.clone();
    let vm = v.negative_part();
    if vm.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let absk: Vec<f64> = grid.k2().iter().map(|k| k.sqrt()).collect();
    let apply = |x: &[C64]| -> Vec<C64> {
        let mut h = x.to_vec();
        grid.dft(&mut h);
        h.iter_mut().zip(&absk).for_each(|(z, k)| *z *= a * k);
        grid.idft(&mut h);
        h.iter_mut().zip(x.iter().zip(&vm)).for_each(|(z, (xi, w))| *z -= xi * w);
        h
    };
    let pre = |x: &[C64]| -> Vec<C64> {
        let mut h = x.to_vec();
        grid.dft(&mut h);
        h.iter_mut().zip(&absk).for_each(|(z, k)| *z /= 1.0 + a * k);
        grid.idft(&mut h);
        h
    };
    // Seed with the potential well itself.
    let seed: Vec<C64> = vm.iter().map(|&w| C64::new(w, 0.0)).collect();
    let mut rng_seed: Vec<C64> = (0..grid.len())
        .map(|i| C64::new(((i * 7919) % 101) as f64 / 101.0 - 0.5, 0.0))
        .collect();
    rng_seed.iter_mut().zip(&vm).for_each(|(z, w)| *z *= w);
    let opts = eigen::LobpcgOptions { tol: 1e-8, max_iter: 400, n_converge: 1 };
    let pairs = match eigen::lobpcg(&apply, &pre, vec![seed, rng_seed], &opts) {
        Ok(p) => p,
        Err(Error::EigenNoConvergence { best, .. }) => vec![*best],
        Err(e) => return Err(e),
    };
    Ok(-pairs[0].value)
}

/// `‖χ/|k|‖²` with this profile over the whole grid band, for reporting.
pub fn chi_over_k_l2_squared(chi: &Cutoff) -> f64 {
    let g = &chi.grid;
    let mut s = 0.0;
    for i in 0..g.len() {
        if g.k2()[i] > 0.0 {
            s += chi.chi[i] * chi.chi[i] / g.k2()[i];
        }
    }
    s * g.w_k()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TWO_PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Arc<SpectralBox> {
        SpectralBox::new(8.0, 16).unwrap()
    }

    #[test]
    fn harmonic_samples() {
        let g = grid();
        let p = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &g).unwrap();
        assert_eq!(p.min(), 0.0);
        let origin = g.index(8, 8, 8);
        assert_eq!(p.v[origin], 0.0);
        let x = g.x(5);
        assert!((p.v[5] - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).abs() < 1e-14);
        for i in 0..g.len() {
            assert_eq!(p.v1[i] + p.v2[i], p.v[i]);
            assert!(p.v1[i] >= 0.0);
        }
        assert!(p.even_residual() == 0.0);
    }

    #[test]
    fn soft_coulomb_at_origin() {
        let g = grid();
        let p = build_potential(&PotentialKind::SoftCoulomb { c: 1.0, a_soft: None }, &g).unwrap();
        let origin = g.index(8, 8, 8);
        assert!((p.v[origin] + 1.0 / g.dx()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_well_has_zero_v1() {
        let g = grid();
        let p = build_potential(&PotentialKind::GaussianWell { depth: 10.0, width: 1.0 }, &g)
            .unwrap();
        assert!(p.v1.iter().all(|&x| x == 0.0));
        assert_eq!(p.v2, p.v);
    }

    #[test]
    fn spectral_coulomb_is_even_and_real() {
        let g = grid();
        let p = build_potential(&PotentialKind::SpectralCoulomb { c: 1.0 }, &g).unwrap();
        assert!(p.even_residual() < 1e-12);
        let origin = g.index(8, 8, 8);
        assert!(p.v[origin] < p.min() + 1e-12);
    }

    #[test]
    fn asymmetric_custom_potential_is_rejected_and_flagged() {
        let g = grid();
        let values: Vec<f64> = (0..g.len()).map(|i| g.x(i)[0]).collect();
        assert!(build_potential(&PotentialKind::Custom { values: values.clone() }, &g).is_err());
        let p = Potential::from_samples_unchecked(&g, values);
        let chi = build_cutoff(&CutoffKind::Sharp { lambda: 2.0 }, SplitRule::Auto, &g).unwrap();
        let rep = hypothesis_report(&p, &chi);
        assert!(!rep.passes());
        assert!(rep.violations.iter().any(|v| v.contains("not even")));
    }

    #[test]
    fn localizer_partition_and_gradients() {
        let g = grid();
        let loc = Localizer::new(g.l() / 4.0, &g).unwrap();
        let h = 1e-6;
        for &x in &[[0.3, 0.1, 0.0], [2.5, 0.4, -0.6], [1.9, 1.5, 0.2], [3.9, 0.0, 0.0]] {
            let (e, et, ge, gt) = loc.eval(x);
            assert!((e * e + et * et - 1.0).abs() < 1e-15);
            for a in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let fd = (loc.eval(xp).0 - loc.eval(xm).0) / (2.0 * h);
                let fdt = (loc.eval(xp).1 - loc.eval(xm).1) / (2.0 * h);
                assert!((fd - ge[a]).abs() < 1e-8, "{fd} {}", ge[a]);
                assert!((fdt - gt[a]).abs() < 1e-8);
            }
        }
        assert_eq!(loc.eval([0.5, 0.0, 0.0]).0, 1.0);
        assert_eq!(loc.eval([4.1, 0.0, 0.0]).0.abs() < 1e-15, true);
        assert!(Localizer::new(g.l() / 3.0, &g).is_err());
    }

    #[test]
    fn kramers_pair_is_orthogonal_and_squares_to_minus_one() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u1 = spectral::random_band_limited(&g, 3, &mut rng);
        let u2 = spectral::random_band_limited(&g, 3, &mut rng);
        let u = SpinorField::from_components(&u1, &u2).unwrap().normalized().unwrap();
        let a = VectorPotential::project(&spectral::random_band_limited_vector(&g, 3, &mut rng));
        let (nu, na) = kramers_conjugate(&u, &a);
        assert!(nu.inner(&u).unwrap().norm() < 1e-12);
        let (nnu, nna) = kramers_conjugate(&nu, &na);
        for (x, y) in nnu.data.iter().zip(&u.data) {
            assert!((x + y).norm() < 1e-15);
        }
        assert!(nna.field.axpy(-1.0, &a.field).unwrap().max_abs() == 0.0);

        let phi = spectral::random_band_limited(&g, 2, &mut rng);
        let up = SpinorField::spin_up(&phi);
        let (nup, _) = kramers_conjugate(&up, &VectorPotential::zeros(&g));
        assert!(nup.comp(0).iter().all(|z| z.norm() == 0.0));
        assert!(nup.inner(&up).unwrap().norm() == 0.0);
    }

    #[test]
    fn vector_potential_rejects_divergence() {
        let g = grid();
        let f = VectorField::from_fn(&g, |x| {
            let s = (TWO_PI * x[0] / g.l()).sin();
            [s, s, 0.0]
        });
        assert!(VectorPotential::new(f.clone()).is_err());
        let p = VectorPotential::project(&f);
        assert!(p.field.comps[0].iter().all(|x| x.abs() < 1e-14));
        assert!(VectorPotential::new(p.field).is_ok());
    }

    #[test]
    fn sharp_cutoff_report_matches_radial_integral() {
        let g = SpectralBox::new(30.0, 48).unwrap();
        let p = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &g).unwrap();
        let lambda = 4.0;
        let chi = build_cutoff(&CutoffKind::Sharp { lambda }, SplitRule::Auto, &g).unwrap();
        let rep = hypothesis_report(&p, &chi);
        assert!(rep.passes(), "{:?}", rep.violations);
        let exact = (4.0 * std::f64::consts::PI * lambda).sqrt();
        assert!((rep.chi1_over_k_l2 / exact - 1.0).abs() < 0.02, "{} vs {exact}", rep.chi1_over_k_l2);
        assert_eq!(rep.chi2_over_k_weak3, 0.0);
    }

    #[test]
    fn unit_cutoff_report_matches_weak_norm() {
        let g = SpectralBox::new(10.0, 32).unwrap();
        let p = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &g).unwrap();
        let chi = build_cutoff(&CutoffKind::One, SplitRule::Auto, &g).unwrap();
        let rep = hypothesis_report(&p, &chi);
        let exact = lorentz::inverse_k_weak3();
        assert!((rep.chi2_over_k_weak3 / exact - 1.0).abs() < 0.03, "{}", rep.chi2_over_k_weak3);
        assert_eq!(rep.chi1_over_k_l2, 0.0);
    }

    #[test]
    fn relative_bound_for_confining_and_well() {
        let g = SpectralBox::new(8.0, 16).unwrap();
        let p = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &g).unwrap();
        assert_eq!(estimate_relative_bound(&p, 0.0).unwrap(), 0.0);
        let w = build_potential(&PotentialKind::GaussianWell { depth: 2.0, width: 1.0 }, &g).unwrap();
        let b0 = estimate_relative_bound(&w, 0.0).unwrap();
        assert!((b0 - 2.0).abs() < 1e-6, "{b0}");
        let b1 = estimate_relative_bound(&w, 1.0).unwrap();
        assert!(b1 < b0 && b1 > 0.0);
    }
}
