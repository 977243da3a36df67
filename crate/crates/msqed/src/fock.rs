//! Dense truncated Fock space over a few modes, used as an exact oracle for
//! coherent-state identities, the relative bounds on `a(h)` and `a*(h)`, and
//! the product-state energy of a tiny electron-photon model.

use std::collections::HashMap;
use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::energy::{self, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, SpinorField};
use crate::quasiclassical::{field_weights, potential_from_parameter, PhotonParameter};
use crate::spectral::dot_real;

pub const MAX_MODES: usize = 4;
pub const MAX_PHOTONS: usize = 11;

/// `e^{-x} Σ_{m>n} x^m/m!`, summed directly so small tails keep full relative precision.
pub fn poisson_tail(x: f64, n: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = (-x).exp();
    for m in 1..=n {
        term *= x / m as f64;
    }
    let mut sum = 0.0;
    let mut m = n + 1;
    loop {
        term *= x / m as f64;
        sum += term;
        if term < 1e-18 * sum || m > n + 2000 {
            break;
        }
        m += 1;
    }
    sum
}

/// Occupation basis `{n ∈ ℕ^M : Σ n_i ≤ n_max}` ordered by total photon number.
#[derive(Clone, Debug)]
pub struct TruncatedFock {
    pub modes: usize,
    pub n_max: usize,
    pub basis: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    lower: Vec<DMatrix<C64>>,
    raise: Vec<DMatrix<C64>>,
}

fn occupations(modes: usize, total: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == modes - 1 {
        prefix.push(total as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=total).rev() {
        prefix.push(k as u8);
        occupations(modes, total - k, prefix, out);
        prefix.pop();
    }
}

impl TruncatedFock {
    pub fn new(modes: usize, n_max: usize) -> Result<Self> {
        if modes == 0 || modes > MAX_MODES || n_max > MAX_PHOTONS {
            return Err(Error::InvalidParameter(format!(
                "truncated Fock space needs 1 ≤ M ≤ {MAX_MODES} and n_max ≤ {MAX_PHOTONS}, got M = {modes}, n_max = {n_max}"
            )));
        }
        let mut basis = Vec::new();
        for total in 0..=n_max {
            occupations(modes, total, &mut Vec::new(), &mut basis);
        }
        let index: HashMap<Vec<u8>, usize> = basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
        let d = basis.len();
        let mut lower = Vec::with_capacity(modes);
        let mut raise = Vec::with_capacity(modes);
        for j in 0..modes {
            let mut a = DMatrix::<C64>::zeros(d, d);
            let mut c = DMatrix::<C64>::zeros(d, d);
            for (col, occ) in basis.iter().enumerate() {
                if occ[j] > 0 {
                    let mut t = occ.clone();
                    t[j] -= 1;
                    a[(index[&t], col)] = C64::new((occ[j] as f64).sqrt(), 0.0);
                }
                let mut t = occ.clone();
                t[j] += 1;
                if let Some(&row) = index.get(&t) {
                    c[(row, col)] = C64::new(((occ[j] + 1) as f64).sqrt(), 0.0);
                }
            }
            lower.push(a);
            raise.push(c);
        }
        Ok(Self { modes, n_max, basis, index, lower, raise })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn total(&self, i: usize) -> usize {
        self.basis[i].iter().map(|&n| n as usize).sum()
    }

    /// Position of an occupation tuple in the basis.
    pub fn position(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    fn check_len(&self, h: &[C64]) -> Result<()> {
        if h.len() != self.modes {
            return Err(Error::InvalidParameter(format!("expected {} mode amplitudes, got {}", self.modes, h.len())));
        }
        Ok(())
    }

    /// `a(h) = Σ conj(h_j) a_j`, antilinear in `h`.
    pub fn annihilation(&self, h: &[C64]) -> Result<DMatrix<C64>> {
        self.check_len(h)?;
        let mut m = DMatrix::<C64>::zeros(self.dim(), self.dim());
        for (j, hj) in h.iter().enumerate() {
            m += &self.lower[j] * hj.conj();
        }
        Ok(m)
    }

    /// `a*(h) = Σ h_j a_j*`, assembled from the raising matrices.
    pub fn creation(&self, h: &[C64]) -> Result<DMatrix<C64>> {
        self.check_len(h)?;
        let mut m = DMatrix::<C64>::zeros(self.dim(), self.dim());
        for (j, hj) in h.iter().enumerate() {
            m += &self.raise[j] * *hj;
        }
        Ok(m)
    }

    /// `Φ(h) = (a(h) + a*(h)) / √2`.
    pub fn field(&self, h: &[C64]) -> Result<DMatrix<C64>> {
        Ok((self.annihilation(h)? + self.creation(h)?) / C64::new(SQRT_2, 0.0))
    }

    /// `dΓ(ω)` for diagonal one-photon `ω`.
    pub fn d_gamma(&self, omega: &[f64]) -> Result<DMatrix<C64>> {
        if omega.len() != self.modes {
            return Err(Error::InvalidParameter("ω must have one entry per mode".into()));
        }
        Ok(DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|occ| C64::new(occ.iter().zip(omega).map(|(&n, w)| n as f64 * w).sum(), 0.0)),
        )))
    }

    /// `max |a(h)^† - a*(h)|` entrywise.
    pub fn adjoint_defect(&self, h: &[C64]) -> Result<f64> {
        let d = self.annihilation(h)?.adjoint() - self.creation(h)?;
        Ok(d.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// `max |([a_i, a_j*] - δ_ij) v|` over basis vectors with `Σ n ≤ n_max - 1`.
    pub fn ccr_defect(&self) -> f64 {
        let safe: Vec<usize> = (0..self.dim()).filter(|&i| self.total(i) < self.n_max).collect();
        let mut worst = 0.0f64;
        for i in 0..self.modes {
            for j in 0..self.modes {
                let c = &self.lower[i] * &self.raise[j] - &self.raise[j] * &self.lower[i];
                for &col in &safe {
                    for row in 0..self.dim() {
                        let delta = if i == j && row == col { 1.0 } else { 0.0 };
                        worst = worst.max((c[(row, col)] - delta).norm());
                    }
                }
            }
        }
        worst
    }

    /// Zero-padding into a larger truncation; the bases agree on their common part.
    pub fn embed(&self, v: &DVector<C64>, into: &TruncatedFock) -> Result<DVector<C64>> {
        if into.modes != self.modes || into.n_max < self.n_max || v.len() != self.dim() {
            return Err(Error::InvalidParameter("embedding needs the same modes and a larger cutoff".into()));
        }
        let mut out = DVector::<C64>::zeros(into.dim());
        out.rows_mut(0, self.dim()).copy_from(v);
        Ok(out)
    }

    /// Random normalized vector with Gaussian entries.
    pub fn random_state<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<C64> {
        let v = DVector::from_fn(self.dim(), |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let n = v.norm();
        v / C64::new(n, 0.0)
    }
}

fn inner(f: &[C64], h: &[C64]) -> C64 {
    f.iter().zip(h).map(|(a, b)| a.conj() * b).sum()
}

fn norm_sqr(f: &[C64]) -> f64 {
    f.iter().map(|z| z.norm_sqr()).sum()
}

/// Truncated coherent vector `e^{-‖f‖²/2} Σ_{n ≤ n_max} f^{⊗n}/√n!`, not renormalized.
#[derive(Clone, Debug)]
pub struct CoherentVector {
    pub f: Vec<C64>,
    pub vector: DVector<C64>,
    /// Poisson mass `e^{-‖f‖²} Σ_{n > n_max} ‖f‖^{2n}/n!` cut off, so `‖vector‖² = 1 - tail`.
    pub tail: f64,
}

impl CoherentVector {
    pub fn new(fock: &TruncatedFock, f: &[C64]) -> Result<Self> {
        fock.check_len(f)?;
        let x = norm_sqr(f);
        let pre = (-0.5 * x).exp();
        let vector = DVector::from_iterator(
            fock.dim(),
            fock.basis.iter().map(|occ| {
                let mut c = C64::new(pre, 0.0);
                for (j, &n) in occ.iter().enumerate() {
                    let mut fact = 1.0;
                    for m in 1..=n as u32 {
                        fact *= m as f64;
                    }
                    c *= f[j].powu(n as u32) / fact.sqrt();
                }
                c
            }),
        );
        Ok(Self { f: f.to_vec(), vector, tail: poisson_tail(x, fock.n_max) })
    }

    /// Mass lost one level below the cutoff, the scale of every one-operator tail.
    pub fn tail_below(&self, levels: usize, n_max: usize) -> f64 {
        poisson_tail(norm_sqr(&self.f), n_max.saturating_sub(levels))
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EigenCheck {
    pub eigenvalue: C64,
    pub residual: f64,
    pub bound: f64,
}

/// `‖a(h)Ψ_f - ⟨h,f⟩Ψ_f‖` with the bound `‖h‖‖f‖ (e^{-x} x^{n_max}/n_max!)^{1/2}`.
pub fn coherent_eigen_check(fock: &TruncatedFock, f: &[C64], h: &[C64], tol: f64) -> Result<EigenCheck> {
    let psi = CoherentVector::new(fock, f)?;
    let bound = (norm_sqr(h) * norm_sqr(f)).sqrt() * psi.tail_below(1, fock.n_max).sqrt();
    if bound > tol {
        return Err(Error::Truncation { tail: bound, tol });
    }
    let lambda = inner(h, f);
    let r = fock.annihilation(h)? * &psi.vector - &psi.vector * lambda;
    Ok(EigenCheck { eigenvalue: lambda, residual: r.norm(), bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhiPrefactor {
    Two,
    Sqrt2,
    Neither,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExpectationCheck {
    pub phi: f64,
    pub d_gamma: f64,
    /// `2 Re⟨h,f⟩`.
    pub phi_two: f64,
    /// `√2 Re⟨h,f⟩`.
    pub phi_sqrt2: f64,
    /// `⟨f, ω f⟩`.
    pub d_gamma_expected: f64,
    pub tail: f64,
    pub prefactor: PhiPrefactor,
}

/// Exact truncated `⟨Ψ_f, Φ(h) Ψ_f⟩` and `⟨Ψ_f, dΓ(ω) Ψ_f⟩` against the closed forms.
pub fn coherent_expectation_check(
    fock: &TruncatedFock,
    f: &[C64],
    h: &[C64],
    omega: &[f64],
    tol: f64,
) -> Result<ExpectationCheck> {
    let psi = CoherentVector::new(fock, f)?;
    let hf = inner(h, f);
    let fwf: f64 = f.iter().zip(omega).map(|(z, w)| w * z.norm_sqr()).sum();
    let scale = 1.0 + fwf.abs() + 2.0 * hf.norm();
    let tail = scale * psi.tail_below(1, fock.n_max);
    if tail > tol {
        return Err(Error::Truncation { tail, tol });
    }
    let v = &psi.vector;
    let phi = (v.adjoint() * fock.field(h)? * v)[(0, 0)].re;
    let d_gamma = (v.adjoint() * fock.d_gamma(omega)? * v)[(0, 0)].re;
    let phi_two = 2.0 * hf.re;
    let phi_sqrt2 = SQRT_2 * hf.re;
    let close = |a: f64, b: f64| (a - b).abs() <= tail + 1e-12 * b.abs().max(1e-300);
    let prefactor = if hf.re == 0.0 {
        PhiPrefactor::Neither
    } else if close(phi, phi_sqrt2) {
        PhiPrefactor::Sqrt2
    } else if close(phi, phi_two) {
        PhiPrefactor::Two
    } else {
        PhiPrefactor::Neither
    };
    Ok(ExpectationCheck { phi, d_gamma, phi_two, phi_sqrt2, d_gamma_expected: fwf, tail, prefactor })
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    /// `‖ω^{-1/2}h‖² ⟨Ψ, dΓ(ω)Ψ⟩ - ‖a(h)Ψ‖²`.
    pub slacks_annihilation: Vec<f64>,
    /// `‖ω^{-1/2}h‖² ⟨Ψ, dΓ(ω)Ψ⟩ + ‖h‖²‖Ψ‖² - ‖a*(h)Ψ‖²`.
    pub slacks_creation: Vec<f64>,
    pub min_annihilation: f64,
    pub min_creation: f64,
}

/// Both relative bounds, as squared norms, on the given states. `a*(h)Ψ` is
/// evaluated one photon level up so that no component is cut.
pub fn field_estimate_check(fock: &TruncatedFock, omega: &[f64], h: &[C64], states: &[DVector<C64>]) -> Result<EstimateReport> {
    fock.check_len(h)?;
    if omega.len() != fock.modes || omega.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParameter("ω must be positive and diagonal".into()));
    }
    let ext = TruncatedFock::new(fock.modes, fock.n_max + 1)?;
    let a = fock.annihilation(h)?;
    let c = ext.creation(h)?;
    let dg = fock.d_gamma(omega)?;
    let weak: f64 = h.iter().zip(omega).map(|(z, w)| z.norm_sqr() / w).sum();
    let hh = norm_sqr(h);
    let mut s1 = Vec::with_capacity(states.len());
    let mut s2 = Vec::with_capacity(states.len());
    for psi in states {
        let kin = (psi.adjoint() * &dg * psi)[(0, 0)].re;
        let n2 = psi.norm_squared();
        s1.push(weak * kin - (&a * psi).norm_squared());
        s2.push(weak * kin + hh * n2 - (&c * fock.embed(psi, &ext)?).norm_squared());
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EstimateReport { min_annihilation: min(&s1), min_creation: min(&s2), slacks_annihilation: s1, slacks_creation: s2 })
}

/// One photon in the mode of largest `ω` with `h` along it: the annihilation bound is an equality.
pub fn adversarial_estimate(fock: &TruncatedFock, omega: &[f64]) -> Result<EstimateReport> {
    let j = (0..omega.len()).max_by(|&a, &b| omega[a].total_cmp(&omega[b])).unwrap_or(0);
    let mut h = vec![C64::default(); fock.modes];
    h[j] = C64::new(1.0, 0.0);
    let mut occ = vec![0u8; fock.modes];
    occ[j] = 1;
    let mut psi = DVector::<C64>::zeros(fock.dim());
    let pos = fock.position(&occ).ok_or_else(|| Error::InvalidParameter("n_max must be at least 1".into()))?;
    psi[pos] = C64::new(1.0, 0.0);
    field_estimate_check(fock, omega, &h, &[psi])
}

/// One retained photon mode: a grid momentum and a unit transverse polarization.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhotonMode {
    pub index: usize,
    pub polarization: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct TinyReport {
    pub exact: f64,
    pub formula: f64,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub tail: f64,
    pub constant: f64,
    pub free_field: f64,
    pub minus_energy: f64,
    pub matter: EnergyBreakdown,
}

/// Checks the product-state energy of `u ⊗ Ψ_f` for a field restricted to the
/// given modes. The dense side evaluates `‖σ·(-i∇ - 𝔸)Ψ‖² + ⟨V⟩ + ⟨dΓ(|k|)⟩`
/// with operator-valued `𝔸`; the other side is the normal-ordering constant of
/// the retained modes plus `⟨f₋,|k|f₋⟩ + ℰ(u, A_f)`.
pub fn tiny_reduction_check(
    u: &SpinorField,
    amplitudes: &[C64],
    modes: &[PhotonMode],
    cfg: &ModelConfig,
    n_max: usize,
) -> Result<TinyReport> {
    let grid = &cfg.grid;
    if modes.is_empty() || modes.len() > 3 || n_max > 8 || grid.n() > 16 {
        return Err(Error::InvalidParameter("tiny model needs 1..=3 modes, n_max ≤ 8 and N ≤ 16".into()));
    }
    if amplitudes.len() != modes.len() || !grid.same(&u.grid) {
        return Err(Error::InvalidParameter("one amplitude per mode on the model grid".into()));
    }
    let k2 = grid.k2();
    let kvec = |i: usize| [grid.kvec(0)[i], grid.kvec(1)[i], grid.kvec(2)[i]];
    for (a, m) in modes.iter().enumerate() {
        let e = m.polarization;
        let k = kvec(m.index);
        let kn = k2[m.index].sqrt();
        let ee = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
        if kn == 0.0 || (ee - 1.0).abs() > 1e-12 || (e[0] * k[0] + e[1] * k[1] + e[2] * k[2]).abs() > 1e-12 * kn {
            return Err(Error::Constraint(format!("mode {a}: needs k ≠ 0 off Nyquist and a unit transverse polarization")));
        }
        for b in &modes[..a] {
            let d = e[0] * b.polarization[0] + e[1] * b.polarization[1] + e[2] * b.polarization[2];
            if b.index == m.index && d.abs() > 1e-12 {
                return Err(Error::Constraint("modes sharing a momentum need orthogonal polarizations".into()));
            }
        }
    }
    let fock = TruncatedFock::new(modes.len(), n_max)?;
    let ext = TruncatedFock::new(modes.len(), n_max + 1)?;
    let coh = CoherentVector::new(&fock, amplitudes)?;
    let psi = &coh.vector / C64::new(coh.vector.norm(), 0.0);
    let psi_e = fock.embed(&psi, &ext)?;

    // Span {ψ, a_j ψ, a_j* ψ} and its Gram matrix.
    let mm = modes.len();
    let mut vecs = vec![psi_e.clone()];
    for j in 0..mm {
        let mut e = vec![C64::default(); mm];
        e[j] = C64::new(1.0, 0.0);
        vecs.push(ext.annihilation(&e)? * &psi_e);
    }
    for j in 0..mm {
        let mut e = vec![C64::default(); mm];
        e[j] = C64::new(1.0, 0.0);
        vecs.push(ext.creation(&e)? * &psi_e);
    }
    let nv = vecs.len();
    let gram = DMatrix::from_fn(nv, nv, |r, c| vecs[r].dotc(&vecs[c]));

    let npts = grid.len();
    let w_k = grid.w_k();
    let weights: Vec<f64> =
        modes.iter().map(|m| cfg.g * cfg.cutoff.chi[m.index] * k2[m.index].powf(-0.25) * w_k.sqrt()).collect();
    let mut p = [[vec![C64::default(); npts], vec![C64::default(); npts]], [vec![C64::default(); npts], vec![C64::default(); npts]], [vec![C64::default(); npts], vec![C64::default(); npts]]];
    for s in 0..2 {
        let mut h = u.comp(s).to_vec();
        grid.dft(&mut h);
        for l in 0..3 {
            let mut d: Vec<C64> = h.iter().zip(grid.kvec(l)).map(|(z, k)| z * *k).collect();
            grid.idft(&mut d);
            p[l][s] = d;
        }
    }
    let iu = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let zero = C64::default();
    let sigma = [[[zero, one], [one, zero]], [[zero, -iu], [iu, zero]], [[one, zero], [zero, -one]]];
    let mut kinetic = 0.0;
    for i in 0..npts {
        let x = grid.x(i);
        // m_{j,l}(x) = g χ |k|^{-1/2} √w_k e^{-ik·x} ε_l.
        let phases: Vec<C64> = modes
            .iter()
            .zip(&weights)
            .map(|(m, w)| {
                let k = kvec(m.index);
                C64::from_polar(*w, -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]))
            })
            .collect();
        for s in 0..2 {
            let mut coef = DVector::<C64>::zeros(nv);
            for l in 0..3 {
                for s2 in 0..2 {
                    let sg = sigma[l][s][s2];
                    if sg == zero {
                        continue;
                    }
                    let us = u.comp(s2)[i];
                    coef[0] += sg * p[l][s2][i];
                    for j in 0..mm {
                        let mjl = phases[j] * modes[j].polarization[l];
                        coef[1 + j] -= sg * us * mjl.conj();
                        coef[1 + mm + j] -= sg * us * mjl;
                    }
                }
            }
            kinetic += (coef.adjoint() * &gram * &coef)[(0, 0)].re;
        }
    }
    kinetic *= grid.w_x();
    let potential = dot_real(&u.density(), &cfg.potential.v, grid.w_x());
    let omega: Vec<f64> = modes.iter().map(|m| k2[m.index].sqrt()).collect();
    let free = (psi.adjoint() * fock.d_gamma(&omega)? * &psi)[(0, 0)].re;
    let exact = kinetic + potential + free;

    let mut f: [Vec<C64>; 3] = std::array::from_fn(|_| vec![C64::default(); npts]);
    for (m, amp) in modes.iter().zip(amplitudes) {
        for l in 0..3 {
            f[l][m.index] += amp * (m.polarization[l] / w_k.sqrt());
        }
    }
    let param = PhotonParameter::new(grid, f)?;
    let a = potential_from_parameter(&param)?;
    let matter = energy::energy(u, &a, cfg)?;
    // Vacuum fluctuation of 𝔸², the normal-ordering constant of the retained modes.
    let constant: f64 = weights.iter().map(|w| w * w).sum();
    let (_, minus_energy, _) = field_weights(&param);
    let formula = constant + minus_energy + matter.total;
    let free_field: f64 = amplitudes.iter().zip(&omega).map(|(z, w)| w * z.norm_sqr()).sum();

    let tail = coh.tail_below(2, n_max);
    let tol_tail = 2.0 * tail * (1.0 + exact.abs() + formula.abs() + free_field);
    if tol_tail > 1e-8 {
        return Err(Error::Truncation { tail: tol_tail, tol: 1e-8 });
    }
    Ok(TinyReport {
        exact,
        formula,
        discrepancy: (exact - formula).abs(),
        tolerance: tol_tail + 1e-8,
        tail,
        constant,
        free_field,
        minus_energy,
        matter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_cutoff, build_potential, CutoffKind, PotentialKind, SplitRule};
    use crate::spectral::{random_band_limited, SpectralBox};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dimension_is_binomial() {
        let f = TruncatedFock::new(3, 8).unwrap();
        assert_eq!(f.dim(), 165);
        assert_eq!(TruncatedFock::new(4, 10).unwrap().dim(), 1001);
        assert!(TruncatedFock::new(5, 2).is_err());
    }

    #[test]
    fn adjointness_and_ccr() {
        let f = TruncatedFock::new(2, 6).unwrap();
        assert_eq!(f.adjoint_defect(&[c(0.3, -0.2), c(1.1, 0.4)]).unwrap(), 0.0);
        assert!(f.ccr_defect() < 1e-14);
    }

    #[test]
    fn vacuum_is_annihilated() {
        let f = TruncatedFock::new(2, 4).unwrap();
        let r = coherent_eigen_check(&f, &[c(0.0, 0.0); 2], &[c(1.0, 0.5), c(-0.3, 0.0)], 1e-8).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn coherent_eigenvector() {
        let f = TruncatedFock::new(2, 10).unwrap();
        let amp = [c(0.3, 0.0), c(0.0, 0.1)];
        let r = coherent_eigen_check(&f, &amp, &[c(0.7, 0.2), c(-0.4, 1.0)], 1e-8).unwrap();
        assert!(r.residual <= r.bound && r.bound <= 1e-8, "{r:?}");
        // h ⊥ f: eigenvalue 0.
        let r = coherent_eigen_check(&f, &amp, &[c(0.1, 0.0), c(0.0, -0.3)], 1e-8).unwrap();
        assert!(r.eigenvalue.norm() < 1e-16 && r.residual <= r.bound);
    }

    #[test]
    fn cutoff_too_small_is_reported() {
        let f = TruncatedFock::new(1, 3).unwrap();
        assert!(matches!(coherent_eigen_check(&f, &[c(2.0, 0.0)], &[c(1.0, 0.0)], 1e-8), Err(Error::Truncation { .. })));
    }

    #[test]
    fn number_expectation_and_phi_prefactor() {
        let f = TruncatedFock::new(1, 10).unwrap();
        let r = coherent_expectation_check(&f, &[c(0.4, 0.0)], &[c(1.0, 0.0)], &[2.0], 1e-8).unwrap();
        assert!((r.d_gamma - 0.32).abs() < 1e-8);
        assert!((r.phi - SQRT_2 * 0.4).abs() < 1e-8);
        assert_eq!(r.prefactor, PhiPrefactor::Sqrt2);
        let z = coherent_expectation_check(&f, &[c(0.0, 0.0)], &[c(1.0, 0.0)], &[2.0], 1e-8).unwrap();
        assert_eq!((z.phi, z.d_gamma), (0.0, 0.0));
    }

    #[test]
    fn relative_bounds_hold_on_random_states() {
        let f = TruncatedFock::new(3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let states: Vec<_> = (0..50).map(|_| f.random_state(&mut rng)).collect();
        let r = field_estimate_check(&f, &[0.5, 1.0, 3.0], &[c(0.2, 0.1), c(-1.0, 0.3), c(0.0, 0.7)], &states).unwrap();
        assert!(r.min_annihilation >= -1e-12 && r.min_creation >= -1e-12);
        let tight = adversarial_estimate(&f, &[0.5, 1.0, 3.0]).unwrap();
        assert!(tight.min_annihilation.abs() < 1e-12);
        assert!(field_estimate_check(&f, &[0.5, 0.0, 1.0], &[c(1.0, 0.0); 3], &states).is_err());
    }

    #[test]
    fn poisson_tail_matches_complement() {
        let x: f64 = 1.3;
        let mut partial = 0.0;
        let mut t = (-x).exp();
        for m in 0..=4 {
            if m > 0 {
                t *= x / m as f64;
            }
            partial += t;
        }
        assert!((poisson_tail(x, 4) - (1.0 - partial)).abs() < 1e-15);
    }

    fn tiny() -> (ModelConfig, SpinorField) {
        let grid = SpectralBox::new(6.0, 8).unwrap();
        let pot = build_potential(&PotentialKind::Harmonic { omega0: 1.0 }, &grid).unwrap();
        let chi = build_cutoff(&CutoffKind::One, SplitRule::Auto, &grid).unwrap();
        let cfg = ModelConfig::new(pot, chi, 0.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let up = random_band_limited(&grid, 1, &mut rng);
        let down = random_band_limited(&grid, 1, &mut rng);
        let u = SpinorField::from_components(&up, &down).unwrap().normalized().unwrap();
        (cfg, u)
    }

    #[test]
    fn tiny_free_field_and_zero_field() {
        let (cfg, u) = tiny();
        let k = cfg.grid.index(1, 0, 0);
        let mode = [PhotonMode { index: k, polarization: [0.0, 1.0, 0.0] }];
        let hv = energy::energy(&u, &crate::model::VectorPotential::zeros(&cfg.grid), &cfg).unwrap().total;
        let r0 = tiny_reduction_check(&u, &[c(0.0, 0.0)], &mode, &cfg, 6).unwrap();
        assert!((r0.exact - hv).abs() < 1e-12 && (r0.formula - hv).abs() < 1e-12);
        let r = tiny_reduction_check(&u, &[c(0.2, 0.1)], &mode, &cfg, 8).unwrap();
        assert!((r.exact - hv - r.free_field).abs() < 1e-10);
        assert!(r.discrepancy <= r.tolerance);
    }

    #[test]
    fn tiny_reduction_at_weak_coupling() {
        let (cfg, u) = tiny();
        let cfg = cfg.with_g(0.1);
        let g = &cfg.grid;
        let modes = [
            PhotonMode { index: g.index(1, 0, 0), polarization: [0.0, 0.0, 1.0] },
            PhotonMode { index: g.index(7, 0, 0), polarization: [0.0, 1.0, 0.0] },
            PhotonMode { index: g.index(0, 1, 1), polarization: [1.0, 0.0, 0.0] },
        ];
        let r = tiny_reduction_check(&u, &[c(0.2, 0.0), c(0.05, -0.1), c(0.0, 0.15)], &modes, &cfg, 8).unwrap();
        assert!(r.discrepancy <= 1e-6, "{r:?}");
        assert!(r.minus_energy > 0.0);
    }
}
