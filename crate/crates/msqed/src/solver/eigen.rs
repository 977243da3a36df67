//! Block LOBPCG for the lowest eigenpairs of a Hermitian operator given as a
//! closure on flat complex vectors (Euclidean inner product).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Serialize)]
pub struct EigenPair {
    pub value: f64,
    #[serde(skip)]
    pub vector: Vec<C64>,
    /// `‖Hx - λx‖ / ‖x‖`.
    pub residual: f64,
    pub iterations: usize,
}

impl std::fmt::Debug for EigenPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EigenPair")
            .field("value", &self.value)
            .field("residual", &self.residual)
            .field("iterations", &self.iterations)
            .field("len", &self.vector.len())
            .finish()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LobpcgOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Number of leading pairs that must meet `tol`.
    pub n_converge: usize,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, n_converge: 1 }
    }
}

fn cdot(a: &[C64], b: &[C64]) -> C64 {
    let mut s = C64::default();
    for (x, y) in a.iter().zip(b) {
        s += x.conj() * y;
    }
    s
}

fn nrm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], c: C64, x: &[C64]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a += c * b);
}

/// Modified Gram-Schmidt with one reorthogonalization pass, applied to
/// `(v, Av)` pairs so the images stay consistent. Vectors that lose more than
/// `1 - 1e-10` of their norm are dropped.
fn orthonormalize(basis: &mut Vec<Vec<C64>>, images: &mut Vec<Vec<C64>>, keep_first: usize) {
    let mut out_v: Vec<Vec<C64>> = Vec::with_capacity(basis.len());
    let mut out_a: Vec<Vec<C64>> = Vec::with_capacity(basis.len());
    for (idx, (mut v, mut av)) in basis.drain(..).zip(images.drain(..)).enumerate() {
        let start = nrm(&v);
        if start == 0.0 || !start.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for (q, aq) in out_v.iter().zip(&out_a) {
                let c = cdot(q, &v);
                axpy(&mut v, -c, q);
                axpy(&mut av, -c, aq);
            }
        }
        let n = nrm(&v);
        if idx >= keep_first && n <= 1e-10 * start {
            continue;
        }
        let s = 1.0 / n;
        v.iter_mut().for_each(|z| *z *= s);
        av.iter_mut().for_each(|z| *z *= s);
        out_v.push(v);
        out_a.push(av);
    }
    *basis = out_v;
    *images = out_a;
}

/// Same as `orthonormalize` without images; the first `keep_first` vectors are
/// assumed orthonormal already and are kept unchanged.
fn orthonormalize_vectors(basis: &mut Vec<Vec<C64>>, keep_first: usize) {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(basis.len());
    for (idx, mut v) in basis.drain(..).enumerate() {
        if idx < keep_first {
            out.push(v);
            continue;
        }
        let start = nrm(&v);
        if start == 0.0 || !start.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let c = cdot(q, &v);
                axpy(&mut v, -c, q);
            }
        }
        let n = nrm(&v);
        if n <= 1e-10 * start {
            continue;
        }
        let s = 1.0 / n;
        v.iter_mut().for_each(|z| *z *= s);
        out.push(v);
    }
    *basis = out;
}

fn combine(vs: &[Vec<C64>], coeffs: &DMatrix<C64>, col: usize, rows: std::ops::Range<usize>) -> Vec<C64> {
    let mut out = vec![C64::default(); vs[0].len()];
    for r in rows {
        axpy(&mut out, coeffs[(r, col)], &vs[r]);
    }
    out
}

/// Rayleigh-Ritz on an orthonormal basis; returns ascending values and coefficient matrix.
fn rayleigh_ritz(basis: &[Vec<C64>], images: &[Vec<C64>]) -> (Vec<f64>, DMatrix<C64>) {
    let d = basis.len();
    let mut g = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = cdot(&basis[i], &images[j]);
            g[(i, j)] = v;
        }
    }
    for i in 0..d {
        g[(i, i)] = C64::new(g[(i, i)].re, 0.0);
        for j in (i + 1)..d {
            let h = (g[(i, j)] + cdot(&images[i], &basis[j])) * 0.5;
            g[(i, j)] = h;
            g[(j, i)] = h.conj();
        }
    }
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<C64>::zeros(d, d);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Lowest `x0.len()` eigenpairs of `apply` with preconditioner `precond`.
pub fn lobpcg<A, P>(apply: &A, precond: &P, x0: Vec<Vec<C64>>, opts: &LobpcgOptions) -> Result<Vec<EigenPair>>
where
    A: Fn(&[C64]) -> Vec<C64> + ?Sized,
    P: Fn(&[C64]) -> Vec<C64> + ?Sized,
{
    let m = x0.len();
    if m == 0 || opts.n_converge == 0 || opts.n_converge > m {
        return Err(Error::InvalidParameter("lobpcg block size".into()));
    }
    let dim = x0[0].len();
    let mut x = x0;
    // Deterministic fill-in if the seed block is rank deficient.
    let mut ax: Vec<Vec<C64>> = x.iter().map(|v| apply(v)).collect();
    orthonormalize(&mut x, &mut ax, 0);
    let mut fill = 0usize;
    while x.len() < m {
        fill += 1;
        let v: Vec<C64> = (0..dim)
            .map(|i| C64::new((((i + 1) * (fill * 7919 + 13)) % 1009) as f64 / 1009.0 - 0.5, 0.0))
            .collect();
        let av = apply(&v);
        x.push(v);
        ax.push(av);
        orthonormalize(&mut x, &mut ax, 0);
        if fill > 10 * m {
            return Err(Error::InvalidParameter("could not build an initial block".into()));
        }
    }
    let (theta, c) = rayleigh_ritz(&x, &ax);
    let mut theta: Vec<f64> = theta[..m].to_vec();
    let mut xn = Vec::with_capacity(m);
    let mut axn = Vec::with_capacity(m);
    for col in 0..m {
        xn.push(combine(&x, &c, col, 0..x.len()));
        axn.push(combine(&ax, &c, col, 0..x.len()));
    }
    x = xn;
    ax = axn;
    let mut p: Vec<Vec<C64>> = Vec::new();
    let mut since_refresh = 0usize;
    let mut best: Option<(f64, Vec<EigenPair>)> = None;

    for it in 0..=opts.max_iter {
        // Residuals from the tracked images.
        let mut res: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut rn = Vec::with_capacity(m);
        for i in 0..m {
            let mut r = ax[i].clone();
            axpy(&mut r, C64::new(-theta[i], 0.0), &x[i]);
            rn.push(nrm(&r));
            res.push(r);
        }
        let worst = rn[..opts.n_converge].iter().cloned().fold(0.0, f64::max);
        let pairs = |x: &[Vec<C64>], theta: &[f64], rn: &[f64]| -> Vec<EigenPair> {
            (0..m)
                .map(|i| EigenPair { value: theta[i], vector: x[i].clone(), residual: rn[i], iterations: it })
                .collect()
        };
        if best.as_ref().map_or(true, |(b, _)| worst < *b) {
            best = Some((worst, pairs(&x, &theta, &rn)));
        }
        if worst <= opts.tol || since_refresh >= 20 {
            // Confirm with freshly applied images; drift in the tracked ones
            // must not fake convergence.
            ax = x.iter().map(|v| apply(v)).collect();
            since_refresh = 0;
            for i in 0..m {
                theta[i] = cdot(&x[i], &ax[i]).re;
                let mut r = ax[i].clone();
                axpy(&mut r, C64::new(-theta[i], 0.0), &x[i]);
                rn[i] = nrm(&r);
                res[i] = r;
            }
            let worst = rn[..opts.n_converge].iter().cloned().fold(0.0, f64::max);
            if worst <= opts.tol {
                return Ok(pairs(&x, &theta, &rn));
            }
        }
        if it == opts.max_iter {
            break;
        }
        since_refresh += 1;
        // Images of the search directions are applied after orthonormalization:
        // combining tracked images of nearly dependent vectors amplifies their
        // error and produces spurious Ritz values.
        let mut basis: Vec<Vec<C64>> = x.clone();
        basis.extend(res.iter().map(|r| precond(r)));
        basis.extend(p.iter().cloned());
        orthonormalize_vectors(&mut basis, m);
        let mut images: Vec<Vec<C64>> = ax.clone();
        images.extend(basis[m..].iter().map(|v| apply(v)));
        let d = basis.len();
        let (vals, c) = rayleigh_ritz(&basis, &images);
        let mut xn = Vec::with_capacity(m);
        let mut axn = Vec::with_capacity(m);
        let mut pn = Vec::with_capacity(m);
        for col in 0..m {
            xn.push(combine(&basis, &c, col, 0..d));
            axn.push(combine(&images, &c, col, 0..d));
            if d > m {
                pn.push(combine(&basis, &c, col, m..d));
            }
        }
        x = xn;
        ax = axn;
        p = pn;
        theta = vals[..m].to_vec();
    }
    let (residual, pairs) = best.expect("at least one iterate");
    let mut first = pairs.into_iter().next().expect("nonempty block");
    first.iterations = opts.max_iter;
    Err(Error::EigenNoConvergence { residual, iterations: opts.max_iter, best: Box::new(first) })
}
