//! Exact diagonalization on the full `2^L` Hilbert space. Used as the oracle
//! for the tensor-network engines and as the `exact` backend for small chains.
//!
//! Basis states are indexed with site 0 as the most significant bit, so the
//! amplitude vector is the Kronecker product `site₀ ⊗ site₁ ⊗ …`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{compile_bond_terms, ModelSpec, Pin};
use crate::linalg::{self, LanczosOptions};
use crate::series::{Observables, TimeSeries};
use crate::state::ProductStateSpec;

/// Largest chain handled by the sparse routines.
pub const MAX_SITES: usize = 14;
/// Largest chain for which a dense `2^L × 2^L` matrix is materialized.
pub const MAX_DENSE_SITES: usize = 12;
/// Largest chain propagated by full eigendecomposition.
pub const MAX_EIGEN_SITES: usize = 10;
/// Largest pinned sector diagonalized densely in `ground_state_exact`.
const MAX_DENSE_SECTOR: usize = 1024;

/// Krylov dimension and largest sub-step used by `evolve_exact`.
pub const KRYLOV_DIM: usize = 30;
pub const KRYLOV_MAX_STEP: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    amps: Vec<C64>,
    len: usize,
}

impl DenseState {
    pub fn new(amps: Vec<C64>, len: usize) -> Result<Self> {
        if len > MAX_SITES + 6 || amps.len() != 1usize << len {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for {len} sites",
                amps.len()
            )));
        }
        Ok(Self { amps, len })
    }

    pub fn from_product(spec: &ProductStateSpec) -> Result<Self> {
        let len = spec.len();
        if len > MAX_SITES {
            return Err(Error::TooLarge { len, max: MAX_SITES });
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        for a in spec.site_amplitudes() {
            amps = amps
                .iter()
                .flat_map(|&x| [x * a[0], x * a[1]])
                .collect();
        }
        Ok(Self { amps, len })
    }

    /// Computational basis state from occupations.
    pub fn basis(bits: &[bool]) -> Result<Self> {
        Self::from_product(&ProductStateSpec::from_pattern(bits.to_vec())?)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    pub fn overlap(&self, other: &Self) -> C64 {
        linalg::dot(&self.amps, &other.amps)
    }

    fn bit(&self, idx: usize, site: usize) -> bool {
        (idx >> (self.len - 1 - site)) & 1 == 1
    }

    pub fn occupations(&self) -> Vec<f64> {
        let mut n = vec![0.0; self.len];
        for (idx, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (site, ni) in n.iter_mut().enumerate() {
                if self.bit(idx, site) {
                    *ni += p;
                }
            }
        }
        n
    }

    /// Von Neumann entropy (natural log) of sites `0..cut` from the reduced
    /// density matrix of the smaller side of the cut.
    pub fn entropy(&self, cut: usize) -> f64 {
        assert!(cut > 0 && cut < self.len);
        let rows = 1usize << cut;
        let cols = 1usize << (self.len - cut);
        let m = DMatrix::from_row_slice(rows, cols, &self.amps);
        let rho = if rows <= cols { &m * m.adjoint() } else { m.transpose() * m.map(|z| z.conj()) };
        von_neumann(rho.symmetric_eigenvalues().as_slice())
    }

    /// Entropy of sites `0..cut` evaluated from `ρ_A` itself, regardless of
    /// which side is smaller.
    pub fn entropy_left_block(&self, cut: usize) -> f64 {
        let rows = 1usize << cut;
        let m = DMatrix::from_row_slice(rows, 1usize << (self.len - cut), &self.amps);
        von_neumann((&m * m.adjoint()).symmetric_eigenvalues().as_slice())
    }

    /// Entropy of sites `cut..L` from `ρ_B`.
    pub fn entropy_right_block(&self, cut: usize) -> f64 {
        let m = DMatrix::from_row_slice(1usize << cut, 1usize << (self.len - cut), &self.amps);
        von_neumann((m.transpose() * m.map(|z| z.conj())).symmetric_eigenvalues().as_slice())
    }

    pub fn entropies(&self) -> Vec<f64> {
        (1..self.len).map(|r| self.entropy(r)).collect()
    }
}

/// `−Σ p ln p` over eigenvalues above 1e-14.
pub fn von_neumann(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&p| p > 1e-14)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Observables of a normalized state: `(⟨n_i⟩, S_r)`.
pub fn exact_observables(state: &DenseState) -> (Vec<f64>, Vec<f64>) {
    (state.occupations(), state.entropies())
}

/// Real symmetric sparse matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian {
    len: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let len = spec.len();
        if len > MAX_SITES {
            return Err(Error::TooLarge { len, max: MAX_SITES });
        }
        let terms = compile_bond_terms(spec);
        let dim = 1usize << len;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut row: Vec<(usize, f64)> = Vec::new();
        row_ptr.push(0);
        // H is real symmetric, so the entries of row `i` are those of column `i`
        for i in 0..dim {
            row.clear();
            for t in &terms {
                let shift = len - 2 - t.bond;
                let local = (i >> shift) & 3;
                for out in 0..4 {
                    let c = t.matrix[(out, local)];
                    debug_assert!(c.im == 0.0);
                    if c.re != 0.0 {
                        let j = (i & !(3 << shift)) | (out << shift);
                        row.push((j, c.re));
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { len, row_ptr, cols, vals })
    }

    pub fn dim(&self) -> usize {
        1usize << self.len
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *yi = acc;
        }
    }

    pub fn expectation(&self, state: &DenseState) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); state.amps.len()];
        self.apply(&state.amps, &mut y);
        linalg::dot(&state.amps, &y).re
    }

    fn to_dense_real(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    fn sector_matrix(&self, sector: &[usize]) -> DMatrix<f64> {
        let n = sector.len();
        let pos: std::collections::HashMap<usize, usize> =
            sector.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut m = DMatrix::zeros(n, n);
        for (a, &i) in sector.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if let Some(&b) = pos.get(&self.cols[k]) {
                    m[(a, b)] = self.vals[k];
                }
            }
        }
        m
    }
}

/// Dense Hamiltonian `Σ_r 1 ⊗ h_r ⊗ 1`.
pub fn assemble_dense(spec: &ModelSpec) -> Result<DMatrix<C64>> {
    if spec.len() > MAX_DENSE_SITES {
        return Err(Error::TooLarge { len: spec.len(), max: MAX_DENSE_SITES });
    }
    let len = spec.len();
    let dim = 1usize << len;
    let mut h = DMatrix::zeros(dim, dim);
    for t in compile_bond_terms(spec) {
        let shift = len - 2 - t.bond;
        for i in 0..dim {
            let local = (i >> shift) & 3;
            for out in 0..4 {
                let c = t.matrix[(out, local)];
                if c.norm() != 0.0 {
                    let j = (i & !(3 << shift)) | (out << shift);
                    h[(j, i)] += c;
                }
            }
        }
    }
    Ok(h)
}

fn sector_indices(len: usize, pin: Pin) -> Vec<usize> {
    let pinned = pin.sites(len);
    (0..1usize << len)
        .filter(|&i| pinned.iter().all(|&s| (i >> (len - 1 - s)) & 1 == 1))
        .collect()
}

/// Lowest eigenpair of `P H P`, with `P` projecting the pinned sites onto
/// `|1⟩`. Without pinning the full space is used.
pub fn ground_state_exact(spec: &ModelSpec, pin: Pin) -> Result<(f64, DenseState)> {
    let len = spec.len();
    if len > MAX_SITES {
        return Err(Error::TooLarge { len, max: MAX_SITES });
    }
    let h = SparseHamiltonian::new(spec)?;
    let sector = sector_indices(len, pin);
    let mut amps = vec![C64::new(0.0, 0.0); h.dim()];
    let energy = if sector.len() <= MAX_DENSE_SECTOR {
        let eig = h.sector_matrix(&sector).symmetric_eigen();
        let (k, &e) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty sector");
        for (a, &i) in sector.iter().enumerate() {
            amps[i] = C64::from(eig.eigenvectors[(a, k)]);
        }
        e
    } else {
        let mut mask = vec![false; h.dim()];
        for &i in &sector {
            mask[i] = true;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let init: Vec<C64> = (0..h.dim())
            .map(|i| if mask[i] { C64::from(rng.gen_range(-1.0..1.0)) } else { C64::new(0.0, 0.0) })
            .collect();
        let opts = LanczosOptions { krylov_dim: 80, max_restarts: 200, tol: 1e-11 };
        let ep = linalg::lanczos_ground(
            |x, y| {
                h.apply(x, y);
                for (yi, &m) in y.iter_mut().zip(&mask) {
                    if !m {
                        *yi = C64::new(0.0, 0.0);
                    }
                }
            },
            &init,
            opts,
        );
        if ep.residual > 1e-8 {
            return Err(Error::NotConverged(format!("exact ground state residual {:e}", ep.residual)));
        }
        amps = ep.vector;
        ep.value
    };
    // fix the global phase: largest amplitude real positive
    let amax = *amps
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("nonempty");
    let phase = amax.conj() / amax.norm();
    let nrm = linalg::norm(&amps);
    for a in amps.iter_mut() {
        *a *= phase / nrm;
    }
    Ok((energy, DenseState { amps, len }))
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum ExactMethod {
    /// Eigendecomposition up to `MAX_EIGEN_SITES`, Krylov beyond.
    #[default]
    Auto,
    Eigen,
    Krylov,
}

/// Exact propagator `exp(−iHt)` for one model.
pub struct ExactPropagator {
    h: SparseHamiltonian,
    eigen: Option<(DVector<f64>, DMatrix<f64>)>,
}

impl ExactPropagator {
    pub fn new(spec: &ModelSpec, method: ExactMethod) -> Result<Self> {
        let h = SparseHamiltonian::new(spec)?;
        let use_eigen = match method {
            ExactMethod::Auto => spec.len() <= MAX_EIGEN_SITES,
            ExactMethod::Eigen => {
                if spec.len() > MAX_DENSE_SITES {
                    return Err(Error::TooLarge { len: spec.len(), max: MAX_DENSE_SITES });
                }
                true
            }
            ExactMethod::Krylov => false,
        };
        let eigen = use_eigen.then(|| {
            let e = h.to_dense_real().symmetric_eigen();
            (e.eigenvalues, e.eigenvectors)
        });
        Ok(Self { h, eigen })
    }

    pub fn hamiltonian(&self) -> &SparseHamiltonian {
        &self.h
    }

    /// Propagates `state` forward by `dt`.
    pub fn step(&self, state: &DenseState, dt: f64) -> Result<DenseState> {
        if !dt.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite time step {dt}")));
        }
        if dt == 0.0 {
            return Ok(state.clone());
        }
        let amps = match &self.eigen {
            Some((vals, vecs)) => {
                let v = DVector::from_column_slice(&state.amps);
                let vr = v.map(|z| z.re);
                let vi = v.map(|z| z.im);
                let cr = vecs.tr_mul(&vr);
                let ci = vecs.tr_mul(&vi);
                let c = DVector::from_fn(vals.len(), |k, _| {
                    C64::new(cr[k], ci[k]) * C64::new(0.0, -vals[k] * dt).exp()
                });
                let re = vecs * c.map(|z| z.re);
                let im = vecs * c.map(|z| z.im);
                re.iter().zip(im.iter()).map(|(&a, &b)| C64::new(a, b)).collect()
            }
            None => {
                let mut amps = state.amps.clone();
                let mut remaining = dt;
                let mut sub = dt.abs().min(KRYLOV_MAX_STEP).copysign(dt);
                while remaining.abs() > 1e-15 {
                    if sub.abs() > remaining.abs() {
                        sub = remaining;
                    }
                    let (next, err) =
                        linalg::krylov_propagate(|x, y| self.h.apply(x, y), &amps, sub, KRYLOV_DIM);
                    if err > 1e-13 && sub.abs() > 1e-6 {
                        sub *= 0.5;
                        continue;
                    }
                    amps = next;
                    remaining -= sub;
                }
                amps
            }
        };
        Ok(DenseState { amps, len: state.len })
    }
}

/// States `exp(−iHt)|ψ⟩` at every time in `times` (non-decreasing, starting at
/// or after 0).
pub fn evolve_exact(
    state: &DenseState,
    spec: &ModelSpec,
    times: &[f64],
    method: ExactMethod,
) -> Result<Vec<DenseState>> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams("non-finite time in grid".into()));
    }
    let prop = ExactPropagator::new(spec, method)?;
    let mut out = Vec::with_capacity(times.len());
    let mut current = state.clone();
    let mut t_prev = 0.0;
    for &t in times {
        current = prop.step(&current, t - t_prev)?;
        t_prev = t;
        out.push(current.clone());
    }
    Ok(out)
}

/// Exact trajectory recorded in the same layout as the tensor-network engine.
pub fn exact_time_series(
    spec: &ModelSpec,
    init: &ProductStateSpec,
    times: &[f64],
) -> Result<TimeSeries> {
    let psi0 = DenseState::from_product(init)?;
    let prop = ExactPropagator::new(spec, ExactMethod::Auto)?;
    let mut series = TimeSeries::new(spec.len());
    let mut current = psi0;
    let mut t_prev = 0.0;
    for &t in times {
        current = prop.step(&current, t - t_prev)?;
        t_prev = t;
        let (occupations, entropies) = exact_observables(&current);
        series.push(Observables {
            time: t,
            occupations,
            entropies,
            energy: prop.h.expectation(&current),
            norm: current.norm(),
            discarded: 0.0,
        });
    }
    Ok(series)
}
