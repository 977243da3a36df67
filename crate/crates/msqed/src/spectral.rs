//! Periodic spectral grid: transforms, Fourier multipliers, Leray projection
//! and homogeneous Sobolev norms.
//!
//! Grid points sit at `x = (i - N/2) dx`, so the origin is a grid point and
//! `x -> -x` maps the grid onto itself. The continuum transform
//! `f^(k) = ∫ e^{-ik·x} f(x) dx` is approximated by the rectangle rule, and
//! the inverse carries the `(2π)^{-3}` factor. A mode is a Nyquist mode when
//! any of its three indices equals `N/2`; every multiplier vanishes there.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub struct SpectralBox {
    l: f64,
    n: usize,
    dx: f64,
    k1: Vec<f64>,
    kv: [Vec<f64>; 3],
    k2: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralBox").field("l", &self.l).field("n", &self.n).finish()
    }
}

impl SpectralBox {
    pub fn new(l: f64, n: usize) -> Result<Arc<Self>> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!("side length {l} must be positive")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N = {n} must be even and at least 8")));
        }
        let dk = TWO_PI / l;
        let k1: Vec<f64> = (0..n)
            .map(|q| {
                let m = if q < n / 2 { q as i64 } else { q as i64 - n as i64 };
                dk * m as f64
            })
            .collect();
        let len = n * n * n;
        let mut kv = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut k2 = vec![0.0; len];
        let h = n / 2;
        for i in 0..n {
            for j in 0..n {
                for q in 0..n {
                    let idx = (i * n + j) * n + q;
                    if i == h || j == h || q == h {
                        continue;
                    }
                    let k = [k1[i], k1[j], k1[q]];
                    kv[0][idx] = k[0];
                    kv[1][idx] = k[1];
                    kv[2][idx] = k[2];
                    k2[idx] = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                }
            }
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self { l, n, dx: l / n as f64, k1, kv, k2, fwd, inv }))
    }

    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn w_x(&self) -> f64 {
        self.dx.powi(3)
    }
    pub fn w_k(&self) -> f64 {
        (TWO_PI / self.l).powi(3)
    }
    /// Largest |k| along an axis that is not a Nyquist mode, times the
    /// inscribed-ball convention: every |k| ≤ `band()` is represented.
    pub fn band(&self) -> f64 {
        TWO_PI / self.l * (self.n / 2 - 1) as f64
    }
    pub fn k1(&self) -> &[f64] {
        &self.k1
    }
    /// Wave-vector components with Nyquist modes set to zero.
    pub fn kvec(&self, axis: usize) -> &[f64] {
        &self.kv[axis]
    }
    /// |k|² with Nyquist modes set to zero.
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }
    pub fn same(&self, other: &SpectralBox) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.l == other.l)
    }

    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }
    pub fn index(&self, i: usize, j: usize, q: usize) -> usize {
        (i * self.n + j) * self.n + q
    }
    pub fn x(&self, idx: usize) -> [f64; 3] {
        let s = self.split(idx);
        let h = (self.n / 2) as f64;
        [
            (s[0] as f64 - h) * self.dx,
            (s[1] as f64 - h) * self.dx,
            (s[2] as f64 - h) * self.dx,
        ]
    }
    /// Raw wave vector of a mode (Nyquist entries keep their value −πN/L).
    pub fn k_raw(&self, idx: usize) -> [f64; 3] {
        let s = self.split(idx);
        [self.k1[s[0]], self.k1[s[1]], self.k1[s[2]]]
    }
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let h = self.n / 2;
        let s = self.split(idx);
        s[0] == h || s[1] == h || s[2] == h
    }
    /// Index of the grid point −x (also the mode −k for non-Nyquist modes).
    pub fn reflect(&self, idx: usize) -> usize {
        let n = self.n;
        let s = self.split(idx);
        let r = |a: usize| (n - a) % n;
        self.index(r(s[0]), r(s[1]), r(s[2]))
    }
    fn parity_sign(&self, idx: usize) -> f64 {
        let s = self.split(idx);
        if (s[0] + s[1] + s[2]) % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn dft(&self, data: &mut [C64]) {
        self.fft3(data, false);
    }
    /// Inverse DFT in place, normalized so that `idft(dft(f)) = f`.
    pub fn idft(&self, data: &mut [C64]) {
        self.fft3(data, true);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    fn fft3(&self, data: &mut [C64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let plan = if inverse { &self.inv } else { &self.fwd };
        data.par_chunks_mut(n * n).for_each(|plane| plan.process(plane));
        data.par_chunks_mut(n * n).for_each(|plane| {
            let mut buf = vec![C64::default(); n * n];
            for j in 0..n {
                for q in 0..n {
                    buf[q * n + j] = plane[j * n + q];
                }
            }
            plan.process(&mut buf);
            for j in 0..n {
                for q in 0..n {
                    plane[j * n + q] = buf[q * n + j];
                }
            }
        });
        let mut buf = vec![C64::default(); n * n * n];
        {
            let src: &[C64] = data;
            buf.par_chunks_mut(n * n).enumerate().for_each(|(j, chunk)| {
                for q in 0..n {
                    for i in 0..n {
                        chunk[q * n + i] = src[(i * n + j) * n + q];
                    }
                }
            });
        }
        buf.par_chunks_mut(n * n).for_each(|c| plan.process(c));
        data.par_chunks_mut(n * n).enumerate().for_each(|(i, plane)| {
            for j in 0..n {
                for q in 0..n {
                    plane[j * n + q] = buf[(j * n + q) * n + i];
                }
            }
        });
    }

    /// DFT of a real array.
    pub fn dft_real(&self, data: &[f64]) -> Vec<C64> {
        let mut c: Vec<C64> = data.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.dft(&mut c);
        c
    }
    /// Real part of the inverse DFT.
    pub fn idft_real(&self, mut data: Vec<C64>) -> Vec<f64> {
        self.idft(&mut data);
        data.into_iter().map(|z| z.re).collect()
    }
}

/// `w Σ conj(a) b` with a fixed summation order.
pub fn dot(a: &[C64], b: &[C64], w: f64) -> C64 {
    let mut s = C64::default();
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * y;
    }
    s * w
}

pub fn dot_real(a: &[f64], b: &[f64], w: f64) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s * w
}

pub fn norm_sqr(a: &[C64], w: f64) -> f64 {
    let mut s = 0.0;
    for x in a {
        s += x.norm_sqr();
    }
    s * w
}

fn check(a: &SpectralBox, b: &SpectralBox) -> Result<()> {
    if a.same(b) {
        Ok(())
    } else {
        Err(Error::BoxMismatch)
    }
}

#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: Arc<SpectralBox>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ComplexField {
    pub grid: Arc<SpectralBox>,
    pub data: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct VectorField {
    pub grid: Arc<SpectralBox>,
    pub comps: [Vec<f64>; 3],
}

/// Continuum-normalized spectral coefficients `f^(k)` on the DFT index layout.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub grid: Arc<SpectralBox>,
    pub data: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<SpectralBox>) -> Self {
        Self { grid: grid.clone(), data: vec![0.0; grid.len()] }
    }
    pub fn from_fn(grid: &Arc<SpectralBox>, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self { grid: grid.clone(), data }
    }
    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }
    pub fn add(&self, o: &Self) -> Result<Self> {
        check(&self.grid, &o.grid)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid.clone(), data })
    }
    pub fn inner(&self, o: &Self) -> Result<f64> {
        check(&self.grid, &o.grid)?;
        Ok(dot_real(&self.data, &o.data, self.grid.w_x()))
    }
    pub fn norm(&self) -> f64 {
        dot_real(&self.data, &self.data, self.grid.w_x()).sqrt()
    }
    /// Sample at −x.
    pub fn reflected(&self) -> Self {
        let g = &self.grid;
        let data = (0..g.len()).map(|i| self.data[g.reflect(i)]).collect();
        Self { grid: g.clone(), data }
    }
}

impl ComplexField {
    pub fn zeros(grid: &Arc<SpectralBox>) -> Self {
        Self { grid: grid.clone(), data: vec![C64::default(); grid.len()] }
    }
    pub fn from_fn(grid: &Arc<SpectralBox>, mut f: impl FnMut([f64; 3]) -> C64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self { grid: grid.clone(), data }
    }
    pub fn add(&self, o: &Self) -> Result<Self> {
        check(&self.grid, &o.grid)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid.clone(), data })
    }
    pub fn scale(&self, c: C64) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|z| z * c).collect() }
    }
    pub fn inner(&self, o: &Self) -> Result<C64> {
        check(&self.grid, &o.grid)?;
        Ok(dot(&self.data, &o.data, self.grid.w_x()))
    }
    pub fn norm(&self) -> f64 {
        norm_sqr(&self.data, self.grid.w_x()).sqrt()
    }
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
    pub fn real_part(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), data: self.data.iter().map(|z| z.re).collect() }
    }
}

impl VectorField {
    pub fn zeros(grid: &Arc<SpectralBox>) -> Self {
        let z = vec![0.0; grid.len()];
        Self { grid: grid.clone(), comps: [z.clone(), z.clone(), z] }
    }
    pub fn from_fn(grid: &Arc<SpectralBox>, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.len() {
            let v = f(grid.x(i));
            for a in 0..3 {
                out.comps[a][i] = v[a];
            }
        }
        out
    }
    pub fn add(&self, o: &Self) -> Result<Self> {
        self.axpy(1.0, o)
    }
    /// `self + c·o`.
    pub fn axpy(&self, c: f64, o: &Self) -> Result<Self> {
        check(&self.grid, &o.grid)?;
        let mut out = self.clone();
        for a in 0..3 {
            for (x, y) in out.comps[a].iter_mut().zip(&o.comps[a]) {
                *x += c * y;
            }
        }
        Ok(out)
    }
    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.comps.iter_mut().for_each(|v| v.iter_mut().for_each(|x| *x *= c));
        out
    }
    pub fn inner(&self, o: &Self) -> Result<f64> {
        check(&self.grid, &o.grid)?;
        let w = self.grid.w_x();
        Ok((0..3).map(|a| dot_real(&self.comps[a], &o.comps[a], w)).sum())
    }
    pub fn norm(&self) -> f64 {
        self.inner(self).unwrap_or(0.0).sqrt()
    }
    pub fn reflected(&self) -> Self {
        let g = &self.grid;
        let mut out = Self::zeros(g);
        for i in 0..g.len() {
            let r = g.reflect(i);
            for a in 0..3 {
                out.comps[a][i] = self.comps[a][r];
            }
        }
        out
    }
    /// Raw DFT of each component.
    pub fn dft(&self) -> [Vec<C64>; 3] {
        [
            self.grid.dft_real(&self.comps[0]),
            self.grid.dft_real(&self.comps[1]),
            self.grid.dft_real(&self.comps[2]),
        ]
    }
    pub fn from_dft(grid: &Arc<SpectralBox>, h: [Vec<C64>; 3]) -> Self {
        let [a, b, c] = h;
        Self { grid: grid.clone(), comps: [grid.idft_real(a), grid.idft_real(b), grid.idft_real(c)] }
    }
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Removes the Nyquist modes from x-space samples, chunk by chunk of `N³`.
pub fn remove_nyquist(grid: &SpectralBox, data: &mut [C64]) {
    for chunk in data.chunks_mut(grid.len()) {
        grid.dft(chunk);
        for (i, z) in chunk.iter_mut().enumerate() {
            if grid.is_nyquist(i) {
                *z = C64::default();
            }
        }
        grid.idft(chunk);
    }
}

/// Continuum-normalized forward transform.
pub fn forward_transform(f: &ComplexField) -> Spectrum {
    let g = &f.grid;
    let mut d = f.data.clone();
    g.dft(&mut d);
    let w = g.w_x();
    d.iter_mut().enumerate().for_each(|(i, z)| *z *= w * g.parity_sign(i));
    Spectrum { grid: g.clone(), data: d }
}

/// Inverse of [`forward_transform`].
pub fn inverse_transform(s: &Spectrum) -> ComplexField {
    let g = &s.grid;
    let w = 1.0 / g.w_x();
    let mut d: Vec<C64> =
        s.data.iter().enumerate().map(|(i, z)| z * (w * g.parity_sign(i))).collect();
    g.idft(&mut d);
    ComplexField { grid: g.clone(), data: d }
}

impl Spectrum {
    /// `(2π)^{-3} w_k Σ conj(a) b`, the k-space form of the x-space inner product.
    pub fn parseval_inner(&self, o: &Spectrum) -> Result<C64> {
        check(&self.grid, &o.grid)?;
        Ok(dot(&self.data, &o.data, self.grid.w_k() / TWO_PI.powi(3)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

/// Symbol `m(k)` sampled on the mode grid, zero on Nyquist modes.
#[derive(Clone, Debug)]
pub struct FourierMultiplier {
    pub grid: Arc<SpectralBox>,
    pub values: Vec<C64>,
    pub parity: Parity,
}

impl FourierMultiplier {
    pub fn from_symbol(grid: &Arc<SpectralBox>, m: impl Fn([f64; 3]) -> C64) -> Result<Self> {
        let mut values = vec![C64::default(); grid.len()];
        for (i, v) in values.iter_mut().enumerate() {
            if grid.is_nyquist(i) {
                continue;
            }
            let z = m(grid.k_raw(i));
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFiniteMultiplier(i));
            }
            *v = z;
        }
        Self::from_values(grid, values)
    }

    pub fn real(grid: &Arc<SpectralBox>, m: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        Self::from_symbol(grid, |k| C64::new(m(k), 0.0))
    }

    pub fn from_values(grid: &Arc<SpectralBox>, mut values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter("multiplier length".into()));
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFiniteMultiplier(i));
            }
            if grid.is_nyquist(i) {
                *v = C64::default();
            }
        }
        let scale = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);
        let (mut even, mut odd) = (true, true);
        for i in 0..grid.len() {
            let (a, b) = (values[i], values[grid.reflect(i)]);
            even &= (a - b).norm() <= tol;
            odd &= (a + b).norm() <= tol;
        }
        let parity = if even {
            Parity::Even
        } else if odd {
            Parity::Odd
        } else {
            Parity::Mixed
        };
        Ok(Self { grid: grid.clone(), values, parity })
    }

    pub fn identity(grid: &Arc<SpectralBox>) -> Self {
        Self::real(grid, |_| 1.0).expect("finite")
    }
    /// `1_{|k|≤Λ}`.
    pub fn ball(grid: &Arc<SpectralBox>, lambda: f64) -> Self {
        Self::real(grid, |k| if norm3(k) <= lambda { 1.0 } else { 0.0 }).expect("finite")
    }
    /// `|k|^s`; for `s < 0` the zero mode is set to 0.
    pub fn abs_k_pow(grid: &Arc<SpectralBox>, s: f64) -> Self {
        Self::real(grid, |k| {
            let r = norm3(k);
            if r == 0.0 {
                if s > 0.0 {
                    0.0
                } else if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                r.powf(s)
            }
        })
        .expect("finite")
    }
    /// Symbol of `-Δ`.
    pub fn neg_laplacian(grid: &Arc<SpectralBox>) -> Self {
        Self::abs_k_pow(grid, 2.0)
    }
    /// Symbol of `(-Δ)^{-1}` with zero mode 0.
    pub fn inv_neg_laplacian(grid: &Arc<SpectralBox>) -> Self {
        Self::abs_k_pow(grid, -2.0)
    }

    pub fn compose(&self, o: &Self) -> Result<Self> {
        check(&self.grid, &o.grid)?;
        let v = self.values.iter().zip(&o.values).map(|(a, b)| a * b).collect();
        Self::from_values(&self.grid, v)
    }

    pub fn apply_raw(&self, data: &mut [C64]) {
        self.grid.dft(data);
        data.iter_mut().zip(&self.values).for_each(|(z, m)| *z *= m);
        self.grid.idft(data);
    }
}

pub fn norm3(k: [f64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

pub fn apply_multiplier(m: &FourierMultiplier, f: &ComplexField) -> Result<ComplexField> {
    check(&m.grid, &f.grid)?;
    let mut d = f.data.clone();
    m.apply_raw(&mut d);
    Ok(ComplexField { grid: f.grid.clone(), data: d })
}

pub fn apply_multiplier_real(m: &FourierMultiplier, f: &ScalarField) -> Result<ComplexField> {
    apply_multiplier(m, &f.to_complex())
}

/// Apply a real even multiplier to each component of a real vector field.
pub fn apply_multiplier_vector(m: &FourierMultiplier, f: &VectorField) -> Result<VectorField> {
    check(&m.grid, &f.grid)?;
    let mut h = f.dft();
    for c in h.iter_mut() {
        c.iter_mut().zip(&m.values).for_each(|(z, v)| *z *= v);
    }
    Ok(VectorField::from_dft(&f.grid, h))
}

/// Leray projection on raw DFT components: `(I - k kᵀ/|k|²) F^`, with the
/// zero mode and Nyquist modes set to 0.
pub fn leray_project_dft(grid: &SpectralBox, h: &mut [Vec<C64>; 3]) {
    let (kx, ky, kz, k2) = (grid.kvec(0), grid.kvec(1), grid.kvec(2), grid.k2());
    for i in 0..grid.len() {
        if k2[i] == 0.0 {
            h[0][i] = C64::default();
            h[1][i] = C64::default();
            h[2][i] = C64::default();
            continue;
        }
        let kd = (h[0][i] * kx[i] + h[1][i] * ky[i] + h[2][i] * kz[i]) / k2[i];
        h[0][i] -= kd * kx[i];
        h[1][i] -= kd * ky[i];
        h[2][i] -= kd * kz[i];
    }
}

pub fn leray_project(f: &VectorField) -> VectorField {
    let mut h = f.dft();
    leray_project_dft(&f.grid, &mut h);
    VectorField::from_dft(&f.grid, h)
}

/// `(‖k·F^‖, ‖F^‖)` over all modes, in DFT units.
pub fn divergence_defect(f: &VectorField) -> (f64, f64) {
    let g = &f.grid;
    let h = f.dft();
    let (mut d, mut t) = (0.0, 0.0);
    for i in 0..g.len() {
        let k = g.k_raw(i);
        let z = h[0][i] * k[0] + h[1][i] * k[1] + h[2][i] * k[2];
        d += z.norm_sqr();
        t += h[0][i].norm_sqr() + h[1][i].norm_sqr() + h[2][i].norm_sqr();
    }
    (d.sqrt(), t.sqrt())
}

/// `Σ |k|^{2s} |F(k)|²` normalized as an Ḣ^s norm squared, from raw DFT data.
pub fn sobolev_sq_dft(grid: &SpectralBox, h: &[C64], s: f64) -> f64 {
    let k2 = grid.k2();
    let mut acc = 0.0;
    for i in 0..grid.len() {
        if k2[i] == 0.0 {
            continue;
        }
        let w = if s == 1.0 { k2[i] } else { k2[i].powf(s) };
        acc += w * h[i].norm_sqr();
    }
    acc * grid.w_x() / grid.len() as f64
}

fn check_mean(h: &[C64], s: f64) -> Result<()> {
    if s < 0.0 {
        let total: f64 = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if h[0].norm() > 1e-12 * total.max(f64::MIN_POSITIVE) {
            return Err(Error::NonzeroMean);
        }
    }
    Ok(())
}

/// `‖f‖_{Ḣ^s}` with `‖f‖² = (2π)^{-3} w_k Σ |k|^{2s} |f^(k)|²`; `s = 0` gives the L² norm.
pub fn sobolev_norm(f: &ComplexField, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(f.norm());
    }
    let mut h = f.data.clone();
    f.grid.dft(&mut h);
    check_mean(&h, s)?;
    Ok(sobolev_sq_dft(&f.grid, &h, s).sqrt())
}

pub fn sobolev_norm_real(f: &ScalarField, s: f64) -> Result<f64> {
    sobolev_norm(&f.to_complex(), s)
}

pub fn sobolev_norm_vector(f: &VectorField, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(f.norm());
    }
    let h = f.dft();
    let mut acc = 0.0;
    for c in &h {
        check_mean(c, s)?;
        acc += sobolev_sq_dft(&f.grid, c, s);
    }
    Ok(acc.sqrt())
}

/// Random complex field whose DFT is supported on integer indices `|m_a| ≤ band`.
pub fn random_band_limited<R: Rng + ?Sized>(
    grid: &Arc<SpectralBox>,
    band: usize,
    rng: &mut R,
) -> ComplexField {
    let n = grid.n();
    let mut h = vec![C64::default(); grid.len()];
    let ok = |q: usize| q <= band || n - q <= band;
    for i in 0..n {
        for j in 0..n {
            for q in 0..n {
                if ok(i) && ok(j) && ok(q) {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    h[grid.index(i, j, q)] = C64::new(re, im);
                }
            }
        }
    }
    grid.idft(&mut h);
    let mut f = ComplexField { grid: grid.clone(), data: h };
    let nrm = f.norm();
    f.data.iter_mut().for_each(|z| *z /= nrm);
    f
}

pub fn random_band_limited_real<R: Rng + ?Sized>(
    grid: &Arc<SpectralBox>,
    band: usize,
    rng: &mut R,
) -> ScalarField {
    let f = random_band_limited(grid, band, rng).real_part();
    let nrm = f.norm();
    ScalarField { grid: f.grid.clone(), data: f.data.iter().map(|x| x / nrm).collect() }
}

pub fn random_band_limited_vector<R: Rng + ?Sized>(
    grid: &Arc<SpectralBox>,
    band: usize,
    rng: &mut R,
) -> VectorField {
    VectorField {
        grid: grid.clone(),
        comps: [
            random_band_limited_real(grid, band, rng).data,
            random_band_limited_real(grid, band, rng).data,
            random_band_limited_real(grid, band, rng).data,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid8() -> Arc<SpectralBox> {
        SpectralBox::new(5.0, 8).unwrap()
    }

    fn random_full(grid: &Arc<SpectralBox>, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexField::from_fn(grid, |_| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(SpectralBox::new(1.0, 7).is_err());
        assert!(SpectralBox::new(1.0, 6).is_err());
        assert!(SpectralBox::new(-1.0, 8).is_err());
    }

    #[test]
    fn constant_field_is_delta_at_zero_mode() {
        let g = grid8();
        let c = C64::new(1.5, -0.25);
        let f = ComplexField::from_fn(&g, |_| c);
        let s = forward_transform(&f);
        let l3 = g.l().powi(3);
        assert!((s.data[0] - c * l3).norm() < 1e-12 * l3);
        for z in &s.data[1..] {
            assert!(z.norm() < 1e-12 * l3);
        }
    }

    #[test]
    fn plane_wave_lands_on_its_mode_with_continuum_phase() {
        // f = e^{i k0·x} has f^(k0) = L³ regardless of where the grid starts.
        let g = grid8();
        let k0 = [g.k1()[1], g.k1()[2], g.k1()[7]];
        let f = ComplexField::from_fn(&g, |x| {
            C64::from_polar(1.0, k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2])
        });
        let s = forward_transform(&f);
        let idx = g.index(1, 2, 7);
        assert!((s.data[idx] - C64::new(g.l().powi(3), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn round_trip_is_identity() {
        let g = SpectralBox::new(7.0, 16).unwrap();
        let f = random_full(&g, 3);
        let back = inverse_transform(&forward_transform(&f));
        let err: f64 = f.data.iter().zip(&back.data).map(|(a, b)| (a - b).norm_sqr()).sum();
        let nrm: f64 = f.data.iter().map(|a| a.norm_sqr()).sum();
        assert!((err / nrm).sqrt() < 1e-13);
    }

    #[test]
    fn parseval_matches_direct_summation() {
        // Oracle: slow O(N⁶) continuum-normalized transform with explicit phases.
        let g = grid8();
        let f = random_full(&g, 11);
        let mut direct = vec![C64::default(); g.len()];
        for (m, d) in direct.iter_mut().enumerate() {
            let k = g.k_raw(m);
            for i in 0..g.len() {
                let x = g.x(i);
                let ph = -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
                *d += f.data[i] * C64::from_polar(1.0, ph);
            }
            *d *= g.w_x();
        }
        let s = forward_transform(&f);
        for (a, b) in s.data.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-11 * (1.0 + b.norm()));
        }
        let lhs = g.w_x() * direct.iter().map(|_| 0.0).sum::<f64>()
            + g.w_x() * f.data.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let rhs = g.w_k() / TWO_PI.powi(3) * direct.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }

    #[test]
    fn identity_multiplier_is_exact_and_ball_is_idempotent() {
        let g = grid8();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_band_limited(&g, 3, &mut rng);
        let id = FourierMultiplier::identity(&g);
        let out = apply_multiplier(&id, &f).unwrap();
        for (a, b) in out.data.iter().zip(&f.data) {
            assert!((a - b).norm() < 1e-14);
        }
        let ball = FourierMultiplier::ball(&g, 2.0);
        let once = apply_multiplier(&ball, &f).unwrap();
        let twice = apply_multiplier(&ball, &once).unwrap();
        for (a, b) in once.data.iter().zip(&twice.data) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn multipliers_zero_nyquist_and_reject_nan() {
        let g = grid8();
        let m = FourierMultiplier::real(&g, |k| 1.0 + k[0]).unwrap();
        let f = random_full(&g, 2);
        let mut h = apply_multiplier(&m, &f).unwrap().data;
        g.dft(&mut h);
        let scale = h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for (i, z) in h.iter().enumerate() {
            if g.is_nyquist(i) {
                assert_eq!(m.values[i], C64::default());
                assert!(z.norm() < 1e-14 * scale);
            }
        }
        assert!(FourierMultiplier::real(&g, |_| f64::NAN).is_err());
        assert!(matches!(
            FourierMultiplier::real(&g, |k| 1.0 / norm3(k)),
            Err(Error::NonFiniteMultiplier(0))
        ));
    }

    #[test]
    fn gaussian_multiplier_matches_direct_convolution() {
        // Oracle: real-space periodic convolution with the sampled kernel
        // K(z) = (2π)^{-3} ∫ e^{ik·z} χ(k) dk, summed over periodic images.
        let g = grid8();
        // The sampled kernel sees the symbol periodized over 2π/dx; at s = 1 the
        // first alias of the input band is below e^{-28}.
        let s = 1.0_f64;
        let chi = |k: [f64; 3]| (-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) / (2.0 * s * s)).exp();
        let kernel = |z: [f64; 3]| {
            let mut acc = 0.0;
            for a in -2i32..=2 {
                for b in -2i32..=2 {
                    for c in -2i32..=2 {
                        let zz = [
                            z[0] + a as f64 * g.l(),
                            z[1] + b as f64 * g.l(),
                            z[2] + c as f64 * g.l(),
                        ];
                        let r2 = zz[0] * zz[0] + zz[1] * zz[1] + zz[2] * zz[2];
                        acc += (s * s / TWO_PI).powf(1.5) * (-(s * s) * r2 / 2.0).exp();
                    }
                }
            }
            acc
        };
        // A band-limited input keeps Nyquist and aliasing out of the comparison.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_band_limited(&g, 2, &mut rng);
        let m = FourierMultiplier::real(&g, chi).unwrap();
        let fast = apply_multiplier(&m, &f).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let xi = g.x(i);
            let mut acc = C64::default();
            for j in 0..g.len() {
                let xj = g.x(j);
                acc += f.data[j] * kernel([xi[0] - xj[0], xi[1] - xj[1], xi[2] - xj[2]]);
            }
            acc *= g.w_x();
            worst = worst.max((acc - fast.data[i]).norm());
        }
        let scale = fast.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(worst < 1e-8 * scale, "worst {worst:e} scale {scale:e}");
    }

    #[test]
    fn leray_kills_gradients_and_is_orthogonal() {
        let g = SpectralBox::new(6.0, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = random_band_limited_real(&g, 4, &mut rng);
        let h = g.dft_real(&phi.data);
        let grad = VectorField::from_dft(
            &g,
            [0, 1, 2].map(|a| {
                h.iter().zip(g.kvec(a)).map(|(z, k)| z * C64::new(0.0, *k)).collect::<Vec<_>>()
            }),
        );
        let p = leray_project(&grad);
        assert!(p.max_abs() < 1e-12 * grad.max_abs());

        let f = random_band_limited_vector(&g, 5, &mut rng);
        let pf = leray_project(&f);
        let rest = f.axpy(-1.0, &pf).unwrap();
        assert!(pf.inner(&rest).unwrap().abs() < 1e-12 * f.norm().powi(2));
        let ppf = leray_project(&pf);
        assert!(ppf.axpy(-1.0, &pf).unwrap().max_abs() < 1e-12 * pf.max_abs());
        let (d, t) = divergence_defect(&pf);
        assert!(d < 1e-12 * t);
    }

    #[test]
    fn sobolev_one_mode_and_cancellation() {
        let g = SpectralBox::new(6.0, 16).unwrap();
        let k0 = [g.k1()[2], g.k1()[1], g.k1()[0]];
        let f = ComplexField::from_fn(&g, |x| {
            C64::from_polar(1.0, k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2])
        });
        let h1 = sobolev_norm(&f, 1.0).unwrap();
        assert!((h1 - norm3(k0) * f.norm()).abs() < 1e-12 * h1);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = random_band_limited(&g, 5, &mut rng);
        let lap = apply_multiplier(&FourierMultiplier::neg_laplacian(&g), &phi).unwrap();
        let lhs = sobolev_norm(&lap, -1.0).unwrap();
        let rhs = sobolev_norm(&phi, 1.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        assert!(matches!(sobolev_norm(&phi, -1.0), Err(Error::NonzeroMean)));
    }

    #[test]
    fn box_mismatch_is_an_error() {
        let a = SpectralBox::new(5.0, 8).unwrap();
        let b = SpectralBox::new(6.0, 8).unwrap();
        let fa = ComplexField::zeros(&a);
        let fb = ComplexField::zeros(&b);
        assert!(matches!(fa.inner(&fb), Err(Error::BoxMismatch)));
        let m = FourierMultiplier::identity(&a);
        assert!(apply_multiplier(&m, &fb).is_err());
    }
}
