//! Small dense helpers and Krylov-subspace routines for Hermitian operators
//! given only as matrix-vector products.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(a: &mut [C64], s: f64) {
    for x in a.iter_mut() {
        *x *= s;
    }
}

#[derive(Copy, Clone, Debug)]
pub struct LanczosOptions {
    /// Krylov dimension before a restart.
    pub krylov_dim: usize,
    /// Maximum number of restarts.
    pub max_restarts: usize,
    /// Residual norm `‖Hv − λv‖` at which the Ritz pair is accepted.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 40, max_restarts: 50, tol: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    })
}

/// Lowest eigenpair of a Hermitian operator by thick-free restarted Lanczos
/// with full reorthogonalization. `init` is the starting vector (need not be
/// normalized, must be nonzero).
pub fn lanczos_ground<F>(mut matvec: F, init: &[C64], opts: LanczosOptions) -> Eigenpair
where
    F: FnMut(&[C64], &mut [C64]),
{
    let dim = init.len();
    let mut v0 = init.to_vec();
    let n0 = norm(&v0);
    assert!(n0 > 0.0, "lanczos needs a nonzero start vector");
    scale(&mut v0, 1.0 / n0);

    let mut matvecs = 0;
    let mut best = Eigenpair { value: f64::INFINITY, vector: v0.clone(), residual: f64::INFINITY, matvecs: 0 };
    for _ in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![v0.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![C64::new(0.0, 0.0); dim];
        let kmax = opts.krylov_dim.min(dim).max(1);
        let breakdown = loop {
            let j = basis.len() - 1;
            w.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            matvec(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization, twice
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let b = norm(&w);
            if basis.len() >= kmax || b < 1e-13 {
                beta.push(b);
                break b < 1e-13;
            }
            beta.push(b);
            let mut q = w.clone();
            scale(&mut q, 1.0 / b);
            basis.push(q);
        };
        let m = alpha.len();
        let t = tridiagonal(&alpha, &beta[..m - 1]);
        let eig = t.symmetric_eigen();
        let (imin, &lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let y = eig.eigenvectors.column(imin);
        let mut x = vec![C64::new(0.0, 0.0); dim];
        for (k, q) in basis.iter().enumerate() {
            axpy(C64::from(y[k]), q, &mut x);
        }
        let nx = norm(&x);
        scale(&mut x, 1.0 / nx);
        let resid = if breakdown { 0.0 } else { (beta[m - 1] * y[m - 1]).abs() };
        best = Eigenpair { value: lam, vector: x.clone(), residual: resid, matvecs };
        if resid < opts.tol || breakdown {
            break;
        }
        v0 = x;
    }
    best.matvecs = matvecs;
    best
}

/// `exp(−i H τ) v` by a Lanczos (Krylov) projection of dimension at most
/// `krylov_dim`. Returns the propagated vector and an a-posteriori error
/// estimate.
pub fn krylov_propagate<F>(mut matvec: F, v: &[C64], tau: f64, krylov_dim: usize) -> (Vec<C64>, f64)
where
    F: FnMut(&[C64], &mut [C64]),
{
    let dim = v.len();
    let nv = norm(v);
    if nv == 0.0 || tau == 0.0 {
        return (v.to_vec(), 0.0);
    }
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(krylov_dim);
    let mut q = v.to_vec();
    scale(&mut q, 1.0 / nv);
    basis.push(q);
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let kmax = krylov_dim.min(dim).max(1);
    let last_beta = loop {
        let j = basis.len() - 1;
        w.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        matvec(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for qq in &basis {
                let c = dot(qq, &w);
                axpy(-c, qq, &mut w);
            }
        }
        let b = norm(&w);
        if basis.len() >= kmax || b < 1e-14 {
            break if b < 1e-14 { 0.0 } else { b };
        }
        beta.push(b);
        let mut nq = w.clone();
        scale(&mut nq, 1.0 / b);
        basis.push(nq);
    };
    let m = alpha.len();
    let eig = tridiagonal(&alpha, &beta).symmetric_eigen();
    // c = exp(−iTτ) e₁
    let coeffs: DVector<C64> = {
        let u = &eig.eigenvectors;
        DVector::from_fn(m, |i, _| {
            (0..m)
                .map(|k| C64::from(u[(i, k)] * u[(0, k)]) * C64::new(0.0, -eig.eigenvalues[k] * tau).exp())
                .sum()
        })
    };
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for (k, qq) in basis.iter().enumerate() {
        axpy(coeffs[k] * nv, qq, &mut out);
    }
    let err = last_beta * coeffs[m - 1].norm() * nv;
    (out, err)
}

/// `a · b`.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    #[cfg(feature = "lapack")]
    if a.nrows() * a.ncols() * b.ncols() >= 4096 {
        return lapack::gemm(a, b);
    }
    a * b
}

/// Thin QR: `q` is `m × min(m, n)` with orthonormal columns, `r` upper
/// triangular `min(m, n) × n`.
pub(crate) fn qr(m: DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    #[cfg(feature = "lapack")]
    if m.nrows() * m.ncols() >= 256 {
        if let Some(out) = lapack::qr(&m) {
            return out;
        }
    }
    m.qr().unpack()
}

/// Thin SVD `m = U diag(s) V†`, singular values descending.
pub fn svd(m: DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    #[cfg(feature = "lapack")]
    if let Some(out) = lapack::gesdd(&m) {
        return out;
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = order.iter().map(|&k| svd.singular_values[k]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |i, k| u[(i, order[k])]);
    let vt = DMatrix::from_fn(order.len(), vt.ncols(), |k, j| vt[(order[k], j)]);
    (u, s, vt)
}

#[cfg(feature = "lapack")]
mod lapack {
    use super::*;
    use lapack_sys::{__BindgenComplex as Z, zgeqrf_, zgesdd_, zungqr_};
    use std::os::raw::{c_char, c_int};

    extern "C" {
        fn zgemm_(
            transa: *const c_char,
            transb: *const c_char,
            m: *const c_int,
            n: *const c_int,
            k: *const c_int,
            alpha: *const Z<f64>,
            a: *const Z<f64>,
            lda: *const c_int,
            b: *const Z<f64>,
            ldb: *const c_int,
            beta: *const Z<f64>,
            c: *mut Z<f64>,
            ldc: *const c_int,
        );
    }

    fn z(x: &mut [C64]) -> *mut Z<f64> {
        x.as_mut_ptr() as *mut Z<f64>
    }

    pub(super) fn gemm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(a.ncols(), b.nrows());
        let (m, k, n) = (a.nrows() as c_int, a.ncols() as c_int, b.ncols() as c_int);
        let mut c = DMatrix::<C64>::zeros(a.nrows(), b.ncols());
        if m == 0 || n == 0 || k == 0 {
            return c;
        }
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let no = b'N' as c_char;
        unsafe {
            zgemm_(
                &no,
                &no,
                &m,
                &n,
                &k,
                &one as *const C64 as *const Z<f64>,
                a.as_ptr() as *const Z<f64>,
                &m,
                b.as_ptr() as *const Z<f64>,
                &k,
                &zero as *const C64 as *const Z<f64>,
                z(c.as_mut_slice()),
                &m,
            );
        }
        c
    }

    pub(super) fn qr(m: &DMatrix<C64>) -> Option<(DMatrix<C64>, DMatrix<C64>)> {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return None;
        }
        let (mi, ni, ki) = (rows as c_int, cols as c_int, k as c_int);
        let mut a = m.clone();
        let mut tau = vec![C64::new(0.0, 0.0); k];
        let mut info: c_int = 0;
        let lwork = (64 * cols.max(1)) as c_int;
        let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
        unsafe { zgeqrf_(&mi, &ni, z(a.as_mut_slice()), &mi, z(&mut tau), z(&mut work), &lwork, &mut info) };
        if info != 0 {
            return None;
        }
        let r = DMatrix::from_fn(k, cols, |i, j| if i <= j { a[(i, j)] } else { C64::new(0.0, 0.0) });
        let mut q = a.columns(0, k).into_owned();
        let lwork = (64 * k) as c_int;
        let mut work = vec![C64::new(0.0, 0.0); lwork as usize];
        unsafe { zungqr_(&mi, &ki, &ki, z(q.as_mut_slice()), &mi, z(&mut tau), z(&mut work), &lwork, &mut info) };
        if info != 0 {
            return None;
        }
        Some((q, r))
    }

    pub(super) fn gesdd(m: &DMatrix<C64>) -> Option<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return None;
        }
        // column-major on both sides, so the buffer goes straight through
        let mut a = m.clone();
        let mut s = vec![0.0; k];
        let mut u = DMatrix::<C64>::zeros(rows, k);
        let mut vt = DMatrix::<C64>::zeros(k, cols);
        let (mi, ni, ki) = (rows as c_int, cols as c_int, k as c_int);
        let big = rows.max(cols);
        let mut rwork = vec![0.0; k * (5 * k + 7).max(2 * big + 2 * k + 1)];
        let mut iwork = vec![0 as c_int; 8 * k];
        let mut info: c_int = 0;
        let job = b'S' as std::os::raw::c_char;
        let mut query = [C64::new(0.0, 0.0)];
        let mut lwork: c_int = -1;
        for pass in 0..2 {
            let mut buf = if pass == 0 { Vec::new() } else { vec![C64::new(0.0, 0.0); lwork as usize] };
            let work = if pass == 0 { query.as_mut_ptr() } else { buf.as_mut_ptr() };
            unsafe {
                zgesdd_(
                    &job,
                    &mi,
                    &ni,
                    a.as_mut_ptr() as *mut Z<f64>,
                    &mi,
                    s.as_mut_ptr(),
                    u.as_mut_ptr() as *mut Z<f64>,
                    &mi,
                    vt.as_mut_ptr() as *mut Z<f64>,
                    &ki,
                    work as *mut Z<f64>,
                    &lwork,
                    rwork.as_mut_ptr(),
                    iwork.as_mut_ptr(),
                    &mut info,
                );
            }
            if info != 0 {
                return None;
            }
            if pass == 0 {
                lwork = (query[0].re as c_int).max(1);
            }
        }
        if s.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some((u, s, vt))
    }
}
