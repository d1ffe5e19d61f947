//! Two-site DMRG for the bond Hamiltonian, with optional boundary pinning.

use std::fmt;
use std::ops::Range;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{compile_bond_terms, ops, BondTerm, ModelSpec, Pin};
use crate::linalg::{lanczos_ground, LanczosOptions};
use crate::mps::{Direction, Mps, SiteTensor, Truncation};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmrgParams {
    pub max_sweeps: usize,
    /// Absolute energy change per sweep below which the run is converged.
    pub tol: f64,
    /// `χ_max` per sweep; the last entry is reused once exhausted.
    pub chi_schedule: Vec<usize>,
    pub cutoff: f64,
    pub pin: Pin,
    pub lanczos_krylov: usize,
    pub lanczos_restarts: usize,
    pub lanczos_tol: f64,
    /// Bond dimension of the random initial state.
    pub init_chi: usize,
    pub seed: u64,
}

impl Default for DmrgParams {
    fn default() -> Self {
        Self {
            max_sweeps: 30,
            tol: 1e-10,
            chi_schedule: vec![16, 32, 64],
            cutoff: 1e-12,
            pin: Pin::None,
            lanczos_krylov: 24,
            lanczos_restarts: 20,
            lanczos_tol: 1e-10,
            init_chi: 4,
            seed: 0x5eed,
        }
    }
}

impl DmrgParams {
    pub fn for_model(spec: &ModelSpec) -> Self {
        Self { pin: Pin::default_for(spec.kind()), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be >= 1");
        }
        if !(self.tol > 0.0) || !(self.lanczos_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.cutoff >= 0.0) {
            return bad("cutoff must be non-negative");
        }
        if self.chi_schedule.is_empty() || self.chi_schedule.contains(&0) {
            return bad("chi schedule must be non-empty and positive");
        }
        if self.chi_schedule.windows(2).any(|w| w[1] < w[0]) {
            return bad("chi schedule must be non-decreasing");
        }
        if self.lanczos_krylov < 2 || self.init_chi == 0 {
            return bad("lanczos_krylov must be >= 2 and init_chi >= 1");
        }
        Ok(())
    }

    fn chi_for(&self, sweep: usize) -> usize {
        self.chi_schedule[sweep.min(self.chi_schedule.len() - 1)]
    }

    fn lanczos(&self) -> LanczosOptions {
        LanczosOptions { krylov_dim: self.lanczos_krylov, max_restarts: self.lanczos_restarts, tol: self.lanczos_tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub chi_max: usize,
    pub energy: f64,
    pub delta: f64,
    pub max_bond: usize,
    pub max_discarded: f64,
    pub max_residual: f64,
    pub matvecs: usize,
}

impl fmt::Display for SweepRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sweep={} chi_max={} energy={:.14} dE={:.3e} max_bond={} discarded={:.3e} residual={:.3e} matvecs={}",
            self.sweep,
            self.chi_max,
            self.energy,
            self.delta,
            self.max_bond,
            self.max_discarded,
            self.max_residual,
            self.matvecs
        )
    }
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    /// `⟨ψ|H|ψ⟩` of the returned state.
    pub energy: f64,
    pub state: Mps,
    pub log: Vec<SweepRecord>,
    pub converged: bool,
}

impl DmrgResult {
    pub fn log_text(&self) -> String {
        let mut s: String = self.log.iter().map(|r| format!("{r}\n")).collect();
        s.push_str(&format!("converged={} energy={:.14}\n", self.converged, self.energy));
        s
    }
}

/// One MPO entry: operator `op` from left link index `wl` to right link
/// index `wr`.
#[derive(Clone, Debug)]
struct MpoEntry {
    wl: usize,
    wr: usize,
    op: Matrix2<C64>,
}

/// Finite-state MPO of `Σ_r h_r`.
///
/// Link `j` (between sites `j` and `j + 1`, with `j = −1` and `j = L − 1` the
/// boundaries) has index 0 for "no term started", `1..=K_j` for the
/// operator-Schmidt channels of term `j` waiting for their right factor, and
/// `K_j + 1` for "term finished".
#[derive(Clone, Debug)]
pub struct Mpo {
    sites: Vec<Vec<MpoEntry>>,
    /// `link_dims[j + 1]` is the dimension of link `j`.
    link_dims: Vec<usize>,
}

/// `h = Σ_k A_k ⊗ B_k` from an SVD of the operator reshaped to
/// `(s₁ s₁') × (s₂ s₂')`.
fn operator_schmidt(h: &Matrix4<C64>) -> Vec<(Matrix2<C64>, Matrix2<C64>)> {
    let m = DMatrix::from_fn(4, 4, |p, q| {
        let (s1, t1) = (p / 2, p % 2);
        let (s2, t2) = (q / 2, q % 2);
        h[(2 * s1 + s2, 2 * t1 + t2)]
    });
    let svd = m.svd(true, true);
    let u = svd.u.expect("u");
    let vt = svd.v_t.expect("v_t");
    let smax = svd.singular_values.max();
    (0..4)
        .filter(|&k| svd.singular_values[k] > 1e-14 * smax.max(1.0))
        .map(|k| {
            let s = svd.singular_values[k];
            let a = Matrix2::from_fn(|i, j| u[(2 * i + j, k)] * s);
            let b = Matrix2::from_fn(|i, j| vt[(k, 2 * i + j)]);
            (a, b)
        })
        .collect()
}

impl Mpo {
    pub fn from_terms(len: usize, terms: &[BondTerm]) -> Self {
        let mut channels: Vec<Vec<(Matrix2<C64>, Matrix2<C64>)>> = vec![Vec::new(); len.saturating_sub(1)];
        for t in terms {
            channels[t.bond].extend(operator_schmidt(&t.matrix));
        }
        let mut link_dims = vec![2; len + 1];
        for (j, c) in channels.iter().enumerate() {
            link_dims[j + 1] = c.len() + 2;
        }
        let id = ops::identity();
        let sites = (0..len)
            .map(|i| {
                let dl = link_dims[i];
                let dr = link_dims[i + 1];
                let mut w = vec![MpoEntry { wl: 0, wr: 0, op: id }, MpoEntry { wl: dl - 1, wr: dr - 1, op: id }];
                if i + 1 < len {
                    for (k, (a, _)) in channels[i].iter().enumerate() {
                        w.push(MpoEntry { wl: 0, wr: k + 1, op: *a });
                    }
                }
                if i > 0 {
                    for (k, (_, b)) in channels[i - 1].iter().enumerate() {
                        w.push(MpoEntry { wl: k + 1, wr: dr - 1, op: *b });
                    }
                }
                w
            })
            .collect();
        Self { sites, link_dims }
    }

    pub fn new(spec: &ModelSpec) -> Self {
        Self::from_terms(spec.len(), &compile_bond_terms(spec))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn max_link_dim(&self) -> usize {
        self.link_dims.iter().copied().max().unwrap_or(0)
    }

    /// Combined operator of sites `(i, i + 1)` between outer link indices.
    fn two_site(&self, i: usize) -> Vec<(usize, usize, Matrix4<C64>)> {
        let mut out: Vec<(usize, usize, Matrix4<C64>)> = Vec::new();
        for e1 in &self.sites[i] {
            for e2 in self.sites[i + 1].iter().filter(|e| e.wl == e1.wr) {
                let g = ops::kron(&e1.op, &e2.op);
                match out.iter_mut().find(|(l, r, _)| *l == e1.wl && *r == e2.wr) {
                    Some(slot) => slot.2 += g,
                    None => out.push((e1.wl, e2.wr, g)),
                }
            }
        }
        out
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` by a left-to-right environment contraction.
    pub fn expectation(&self, mps: &Mps) -> f64 {
        let mut env = boundary_left();
        for i in 0..self.len() {
            env = grow_left(&env, mps.site(i), &self.sites[i], self.link_dims[i + 1]);
        }
        let e = env.last().and_then(|m| m.as_ref()).map_or(ZERO, |m| m[(0, 0)]);
        let n = env[0].as_ref().map_or(ZERO, |m| m[(0, 0)]);
        (e / n).re
    }
}

type Env = Vec<Option<DMatrix<C64>>>;

fn boundary_left() -> Env {
    vec![Some(DMatrix::from_element(1, 1, C64::from(1.0))), None]
}

fn boundary_right() -> Env {
    vec![None, Some(DMatrix::from_element(1, 1, C64::from(1.0)))]
}

/// `A_s` slices of a site tensor as `left × right` matrices.
fn slices(t: &SiteTensor) -> [DMatrix<C64>; 2] {
    [0, 1].map(|s| DMatrix::from_fn(t.left(), t.right(), |a, b| t.get(a, s, b)))
}

fn add_into(slot: &mut Option<DMatrix<C64>>, m: DMatrix<C64>) {
    match slot {
        Some(x) => *x += m,
        None => *slot = Some(m),
    }
}

/// Left environment including site `t`.
fn grow_left(env: &Env, t: &SiteTensor, w: &[MpoEntry], dim_out: usize) -> Env {
    let a = slices(t);
    let mut out: Env = vec![None; dim_out];
    for e in w {
        let Some(l) = &env[e.wl] else { continue };
        for sp in 0..2 {
            let la = l * &a[sp];
            for s in 0..2 {
                let c = e.op[(s, sp)];
                if c != ZERO {
                    add_into(&mut out[e.wr], a[s].adjoint() * &la * c);
                }
            }
        }
    }
    out
}

/// Right environment including site `t`.
fn grow_right(env: &Env, t: &SiteTensor, w: &[MpoEntry], dim_out: usize) -> Env {
    let b = slices(t);
    let mut out: Env = vec![None; dim_out];
    for e in w {
        let Some(r) = &env[e.wr] else { continue };
        for sp in 0..2 {
            let rb = r * b[sp].transpose();
            for s in 0..2 {
                let c = e.op[(s, sp)];
                if c != ZERO {
                    add_into(&mut out[e.wl], b[s].conjugate() * &rb * c);
                }
            }
        }
    }
    out
}

/// Effective two-site Hamiltonian acting on `Θ` stored as a
/// `χl × (4 χr)` column-major matrix with column index `s χr + b`.
struct EffectiveH<'a> {
    left: &'a Env,
    right: &'a Env,
    ops: Vec<(usize, usize, Matrix4<C64>)>,
    chi_l: usize,
    chi_r: usize,
    /// Physical indices `s = 2 s₁ + s₂` forced to zero by pinning.
    frozen: [bool; 4],
}

impl EffectiveH<'_> {
    fn project(&self, x: &mut [C64]) {
        let n = self.chi_l * self.chi_r;
        for (s, &f) in self.frozen.iter().enumerate() {
            if f {
                x[s * n..(s + 1) * n].iter_mut().for_each(|z| *z = ZERO);
            }
        }
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let (cl, cr) = (self.chi_l, self.chi_r);
        let theta = DMatrix::from_column_slice(cl, 4 * cr, x);
        let mut out = DMatrix::<C64>::zeros(cl, 4 * cr);
        let mut lx: Vec<Option<DMatrix<C64>>> = vec![None; self.left.len()];
        for (wl, slot) in lx.iter_mut().enumerate() {
            if let Some(l) = &self.left[wl] {
                if self.ops.iter().any(|(a, _, _)| *a == wl) {
                    *slot = Some(l * &theta);
                }
            }
        }
        let mut ys: Vec<Option<DMatrix<C64>>> = vec![None; self.right.len()];
        for (wl, wr, g) in &self.ops {
            let (Some(xl), Some(_)) = (&lx[*wl], &self.right[*wr]) else { continue };
            let y = ys[*wr].get_or_insert_with(|| DMatrix::zeros(cl, 4 * cr));
            for s in 0..4 {
                for sp in 0..4 {
                    let c = g[(s, sp)];
                    if c != ZERO {
                        let src = xl.columns(sp * cr, cr) * c;
                        let mut dst = y.columns_mut(s * cr, cr);
                        dst += src;
                    }
                }
            }
        }
        for (wr, y) in ys.iter().enumerate() {
            let (Some(y), Some(r)) = (y, &self.right[wr]) else { continue };
            let rt = r.transpose();
            for s in 0..4 {
                let mut dst = out.columns_mut(s * cr, cr);
                dst += y.columns(s * cr, cr) * &rt;
            }
        }
        y.copy_from_slice(out.as_slice());
        self.project(y);
    }
}

/// `(2χl) × (2χr)` two-site matrix to the column-major `Θ` vector.
fn theta_to_vec(m: &DMatrix<C64>, cl: usize, cr: usize) -> Vec<C64> {
    let mut v = vec![ZERO; cl * 4 * cr];
    for a in 0..cl {
        for s1 in 0..2 {
            for s2 in 0..2 {
                for b in 0..cr {
                    let col = (2 * s1 + s2) * cr + b;
                    v[col * cl + a] = m[(2 * a + s1, s2 * cr + b)];
                }
            }
        }
    }
    v
}

fn vec_to_theta(v: &[C64], cl: usize, cr: usize) -> DMatrix<C64> {
    DMatrix::from_fn(2 * cl, 2 * cr, |row, col| {
        let (a, s1) = (row / 2, row % 2);
        let (s2, b) = (col / cr, col % cr);
        v[((2 * s1 + s2) * cr + b) * cl + a]
    })
}

fn project_site(t: &SiteTensor) -> SiteTensor {
    let mut data = t.data().to_vec();
    for a in 0..t.left() {
        for b in 0..t.right() {
            data[a * 2 * t.right() + b] = ZERO;
        }
    }
    SiteTensor::new(t.left(), t.right(), data)
}

/// Random initial state with the pinned sites set to `|1⟩`.
fn initial_state(len: usize, params: &DmrgParams) -> Mps {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut mps = Mps::random(len, params.init_chi, &mut rng);
    for i in params.pin.sites(len) {
        let t = project_site(mps.site(i));
        mps.set_site(i, t);
    }
    mps.canonicalize(0);
    mps
}

struct Sweeper<'a> {
    mpo: &'a Mpo,
    params: &'a DmrgParams,
    pinned: Vec<usize>,
    left: Vec<Env>,
    right: Vec<Env>,
}

#[derive(Default)]
struct SweepStats {
    energy: f64,
    max_discarded: f64,
    max_residual: f64,
    matvecs: usize,
}

impl Sweeper<'_> {
    fn optimize(&self, mps: &mut Mps, bond: usize, trunc: &Truncation, dir: Direction, stats: &mut SweepStats) {
        let m = mps.two_site_matrix(bond);
        let (cl, cr) = (m.nrows() / 2, m.ncols() / 2);
        let mut frozen = [false; 4];
        for s in 0..4 {
            let (s1, s2) = (s / 2, s % 2);
            frozen[s] = (s1 == 0 && self.pinned.contains(&bond)) || (s2 == 0 && self.pinned.contains(&(bond + 1)));
        }
        let heff = EffectiveH {
            left: &self.left[bond],
            right: &self.right[bond + 1],
            ops: self.mpo.two_site(bond),
            chi_l: cl,
            chi_r: cr,
            frozen,
        };
        let mut x0 = theta_to_vec(&m, cl, cr);
        heff.project(&mut x0);
        if x0.iter().all(|z| *z == ZERO) {
            x0.iter_mut().for_each(|z| *z = C64::from(1.0));
            heff.project(&mut x0);
        }
        let eig = lanczos_ground(|x, y| heff.apply(x, y), &x0, self.params.lanczos());
        stats.energy = eig.value;
        stats.max_residual = stats.max_residual.max(eig.residual);
        stats.matvecs += eig.matvecs;
        let theta = vec_to_theta(&eig.vector, cl, cr);
        let info = mps.split_two_site(bond, theta, trunc, dir);
        stats.max_discarded = stats.max_discarded.max(info.discarded);
    }

    fn sweep(&mut self, mps: &mut Mps, trunc: &Truncation) -> SweepStats {
        let len = mps.len();
        let mut stats = SweepStats::default();
        for bond in 0..len - 1 {
            self.optimize(mps, bond, trunc, Direction::Right, &mut stats);
            if bond + 1 < len - 1 {
                self.left[bond + 1] =
                    grow_left(&self.left[bond], mps.site(bond), &self.mpo.sites[bond], self.mpo.link_dims[bond + 1]);
            }
        }
        for bond in (0..len - 1).rev() {
            self.optimize(mps, bond, trunc, Direction::Left, &mut stats);
            if bond > 0 {
                self.right[bond] = grow_right(
                    &self.right[bond + 1],
                    mps.site(bond + 1),
                    &self.mpo.sites[bond + 1],
                    self.mpo.link_dims[bond + 1],
                );
            }
        }
        stats
    }
}

/// Ground state of `spec` by two-site DMRG. A run that exhausts `max_sweeps`
/// is returned with `converged == false`.
pub fn dmrg_ground(spec: &ModelSpec, params: &DmrgParams) -> Result<DmrgResult> {
    params.validate()?;
    let len = spec.len();
    if len < 2 {
        return Err(Error::InvalidModel("DMRG needs at least two sites".into()));
    }
    let mpo = Mpo::new(spec);
    let mut mps = initial_state(len, params);
    let mut right: Vec<Env> = vec![Vec::new(); len];
    right[len - 1] = boundary_right();
    for i in (1..len).rev() {
        right[i - 1] = grow_right(&right[i], mps.site(i), &mpo.sites[i], mpo.link_dims[i]);
    }
    let mut left: Vec<Env> = vec![Vec::new(); len];
    left[0] = boundary_left();
    let mut sweeper = Sweeper { mpo: &mpo, params, pinned: params.pin.sites(len), left, right };

    let mut log = Vec::new();
    let mut previous = f64::INFINITY;
    let mut converged = false;
    for sweep in 0..params.max_sweeps {
        let chi = params.chi_for(sweep);
        let trunc = Truncation { chi_max: chi, cutoff: params.cutoff };
        let stats = sweeper.sweep(&mut mps, &trunc);
        let delta = stats.energy - previous;
        log.push(SweepRecord {
            sweep: sweep + 1,
            chi_max: chi,
            energy: stats.energy,
            delta,
            max_bond: mps.max_bond(),
            max_discarded: stats.max_discarded,
            max_residual: stats.max_residual,
            matvecs: stats.matvecs,
        });
        log::debug!("{}", log.last().expect("just pushed"));
        previous = stats.energy;
        let schedule_done = sweep + 1 >= params.chi_schedule.len();
        if schedule_done && delta.abs() < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("DMRG not converged after {} sweeps", params.max_sweeps);
    }
    mps.canonicalize(0);
    let energy = mpo.expectation(&mps);
    Ok(DmrgResult { energy, state: mps, log, converged })
}

/// Least-squares fit of `ln⟨n_i⟩ = intercept + slope · i` over `window`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizationFit {
    /// `−1 / slope`; infinite for a flat profile.
    pub xi: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `ln⟨n⟩`.
    pub residual: f64,
    pub flat: bool,
}

pub const OCCUPATION_FLOOR: f64 = 1e-14;

pub fn fit_localization_length(profile: &[f64], window: Range<usize>) -> Result<LocalizationFit> {
    if window.end > profile.len() || window.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "window {window:?} must hold at least 3 sites of a {}-site profile",
            profile.len()
        )));
    }
    let pts: Vec<(f64, f64)> = window
        .clone()
        .map(|i| {
            let n = profile[i];
            if n > OCCUPATION_FLOOR {
                Ok((i as f64, n.ln()))
            } else {
                Err(Error::InvalidParams(format!("occupation {n:e} at site {i} is not positive")))
            }
        })
        .collect::<Result<_>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    let flat = slope.abs() < 1e-12;
    let xi = if flat { f64::INFINITY } else { -1.0 / slope };
    Ok(LocalizationFit { xi, slope, intercept, residual, flat })
}
