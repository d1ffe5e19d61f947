//! Open-boundary matrix product states in mixed canonical form.
//!
//! Site tensors have shape `(left, 2, right)` and are stored row-major, so the
//! same buffer reads as a `(2·left) × right` matrix (left-grouped) or a
//! `left × (2·right)` matrix (right-grouped) without copying. Every tensor left
//! of the canonical center is a left isometry and every tensor right of it a
//! right isometry. Schmidt values are cached per bond whenever an SVD passes
//! through that bond.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::BondTerm;
use crate::linalg;
use crate::state::ProductStateSpec;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Truncation policy for every SVD split.
#[derive(Copy, Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Truncation {
    pub chi_max: usize,
    /// Relative cutoff: singular values below `cutoff · σ_max` are dropped.
    pub cutoff: f64,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { chi_max: 256, cutoff: 1e-10 }
    }
}

impl Truncation {
    /// No truncation beyond exact zeros.
    pub fn exact() -> Self {
        Self { chi_max: usize::MAX, cutoff: 0.0 }
    }
}

/// Accumulated truncation statistics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruncationReport {
    pub splits: usize,
    pub last_discarded: f64,
    pub total_discarded: f64,
    pub max_bond: usize,
    /// Number of splits where `chi_max` (not the cutoff) limited the rank.
    pub saturated: usize,
}

impl TruncationReport {
    pub fn record(&mut self, split: &SplitInfo) {
        self.splits += 1;
        self.last_discarded = split.discarded;
        self.total_discarded += split.discarded;
        self.max_bond = self.max_bond.max(split.kept);
        if split.saturated {
            self.saturated += 1;
        }
    }
}

/// Outcome of one truncated SVD split.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct SplitInfo {
    pub discarded: f64,
    pub kept: usize,
    /// Rank that the cutoff alone would have kept.
    pub wanted: usize,
    pub saturated: bool,
}

/// Where the canonical center goes after a two-site split.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Singular values absorbed to the right: center ends on site `r + 1`.
    Right,
    /// Singular values absorbed to the left: center ends on site `r`.
    Left,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl SiteTensor {
    pub fn new(left: usize, right: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), left * 2 * right);
        Self { left, right, data }
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * 2 + s) * self.right + b]
    }

    /// `(2·left) × right` view as an owned matrix.
    pub(crate) fn left_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(2 * self.left, self.right, &self.data)
    }

    /// `left × (2·right)` view as an owned matrix.
    pub(crate) fn right_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.left, 2 * self.right, &self.data)
    }

    pub(crate) fn from_left_matrix(m: &DMatrix<C64>) -> Self {
        let left = m.nrows() / 2;
        Self { left, right: m.ncols(), data: row_major(m) }
    }

    pub(crate) fn from_right_matrix(m: &DMatrix<C64>) -> Self {
        let right = m.ncols() / 2;
        Self { left: m.nrows(), right, data: row_major(m) }
    }
}

pub(crate) fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Truncated SVD `m ≈ U diag(s) V†` with singular values sorted descending
/// and renormalized to `Σ s² = 1`.
pub(crate) fn truncated_svd(m: DMatrix<C64>, trunc: &Truncation) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>, SplitInfo) {
    let (u, sv, vt) = crate::linalg::svd(m);
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let smax = sv.first().copied().unwrap_or(0.0);
    let wanted = sv.iter().take_while(|&&s| s > 0.0 && s >= trunc.cutoff * smax).count().max(1);
    let kept = wanted.min(trunc.chi_max).max(1);
    let kept_weight: f64 = sv[..kept].iter().map(|s| s * s).sum();
    let discarded = if total > 0.0 { ((total - kept_weight) / total).max(0.0) } else { 0.0 };
    let scale = if kept_weight > 0.0 { kept_weight.sqrt() } else { 1.0 };
    let s: Vec<f64> = sv[..kept].iter().map(|x| x / scale).collect();
    let uk = u.columns(0, kept).into_owned();
    let vk = vt.rows(0, kept).into_owned();
    let info = SplitInfo { discarded, kept, wanted, saturated: wanted > kept };
    (uk, s, vk, info)
}

/// `−Σ λ² ln λ²` of a Schmidt spectrum.
pub fn schmidt_entropy(spectrum: &[f64]) -> f64 {
    spectrum
        .iter()
        .map(|l| l * l)
        .filter(|&p| p > 1e-30)
        .map(|p| -p * p.ln())
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    sites: Vec<SiteTensor>,
    center: usize,
    spectra: Vec<Vec<f64>>,
}

impl Mps {
    /// Bond-dimension-1 product state.
    pub fn from_product(spec: &ProductStateSpec) -> Self {
        let sites = spec
            .site_amplitudes()
            .into_iter()
            .map(|a| SiteTensor::new(1, 1, vec![C64::from(a[0]), C64::from(a[1])]))
            .collect::<Vec<_>>();
        let spectra = vec![vec![1.0]; sites.len() - 1];
        Self { sites, center: 0, spectra }
    }

    /// Exact MPS of a dense amplitude vector (site 0 most significant).
    pub fn from_dense(amps: &[C64], len: usize, trunc: &Truncation) -> Result<Self> {
        if amps.len() != 1usize << len || len < 2 {
            return Err(Error::InvalidState(format!("{} amplitudes for {len} sites", amps.len())));
        }
        let mut sites = Vec::with_capacity(len);
        let mut spectra = Vec::with_capacity(len - 1);
        let mut rest = DMatrix::from_row_slice(2, amps.len() / 2, amps);

        for i in 0..len - 1 {
            let (u, s, vt, _) = truncated_svd(rest, trunc);
            let k = s.len();
            sites.push(SiteTensor::from_left_matrix(&u));
            spectra.push(s.clone());
            // S V† becomes the remainder, reshaped to (2k) × (cols/2)
            let sv = DMatrix::from_fn(k, vt.ncols(), |a, j| vt[(a, j)] * s[a]);
            let data = row_major(&sv);
            let remaining = len - i - 1;
            rest = if remaining > 1 {
                DMatrix::from_row_slice(2 * k, data.len() / (2 * k), &data)
            } else {
                DMatrix::from_row_slice(k, 2, &data)
            };
        }
        sites.push(SiteTensor::from_right_matrix(&rest));
        let mut mps = Self { sites, center: len - 1, spectra };
        mps.normalize();
        Ok(mps)
    }

    /// Random normalized MPS with interior bond dimensions up to `chi`.
    pub fn random<R: Rng>(len: usize, chi: usize, rng: &mut R) -> Self {
        let dims: Vec<usize> = (0..=len)
            .map(|b| {
                let l = b.min(len - b) as u32;
                2usize.saturating_pow(l).min(chi)
            })
            .collect();
        let sites = (0..len)
            .map(|i| {
                let n = dims[i] * 2 * dims[i + 1];
                let data = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                SiteTensor::new(dims[i], dims[i + 1], data)
            })
            .collect();
        let mut mps = Self { sites, center: 0, spectra: vec![vec![1.0]; len - 1] };
        mps.canonicalize(0);
        mps
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn site(&self, i: usize) -> &SiteTensor {
        &self.sites[i]
    }


    pub(crate) fn set_site(&mut self, i: usize, t: SiteTensor) {
        self.sites[i] = t;
    }


    /// Bond dimensions including the two boundary 1s.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.sites.iter().map(|s| s.left).collect();
        d.push(self.sites.last().map_or(1, |s| s.right));
        d
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Cached Schmidt values at `bond` (between sites `bond`, `bond + 1`).
    pub fn spectrum(&self, bond: usize) -> &[f64] {
        &self.spectra[bond]
    }


    /// Entanglement entropy at `bond` from the cached spectrum.
    pub fn bond_entropy(&self, bond: usize) -> f64 {
        schmidt_entropy(&self.spectra[bond])
    }

    pub fn entropies(&self) -> Vec<f64> {
        (0..self.len() - 1).map(|b| self.bond_entropy(b)).collect()
    }

    /// Norm computed from the center tensor (valid in mixed canonical form).
    pub fn center_norm(&self) -> f64 {
        self.sites[self.center].data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.center_norm();
        if n > 0.0 {
            for z in self.sites[self.center].data.iter_mut() {
                *z /= n;
            }
        }
    }

    fn shift_right(&mut self, i: usize) {
        let (q, r) = linalg::qr(self.sites[i].left_matrix());
        self.sites[i] = SiteTensor::from_left_matrix(&q);
        let m = linalg::matmul(&r, &self.sites[i + 1].right_matrix());
        self.sites[i + 1] = SiteTensor::from_right_matrix(&m);
    }

    fn shift_left(&mut self, i: usize) {
        // LQ via QR of the adjoint
        let (q, r) = linalg::qr(self.sites[i].right_matrix().adjoint());
        self.sites[i] = SiteTensor::from_right_matrix(&q.adjoint());
        let m = linalg::matmul(&self.sites[i - 1].left_matrix(), &r.adjoint());
        self.sites[i - 1] = SiteTensor::from_left_matrix(&m);
    }

    /// Moves the center assuming the state is already in mixed canonical form.
    pub fn move_center(&mut self, to: usize) {
        assert!(to < self.len());
        while self.center < to {
            self.shift_right(self.center);
            self.center += 1;
        }
        while self.center > to {
            self.shift_left(self.center);
            self.center -= 1;
        }
    }

    /// Brings an arbitrary MPS into mixed canonical form centered at `center`,
    /// normalizes it and refreshes every cached Schmidt spectrum.
    pub fn canonicalize(&mut self, center: usize) {
        let len = self.len();
        for i in (1..len).rev() {
            self.shift_left(i);
        }
        self.center = 0;
        self.normalize();
        for i in 0..len - 1 {
            self.svd_step_right(i);
        }
        self.center = len - 1;
        self.move_center(center);
    }

    /// Center at `i`: SVD of the center tensor, spectrum stored at bond `i`,
    /// center moves to `i + 1`. No truncation beyond exact rank.
    fn svd_step_right(&mut self, i: usize) {
        let (u, s, vt, _) = truncated_svd(self.sites[i].left_matrix(), &Truncation::exact());
        self.sites[i] = SiteTensor::from_left_matrix(&u);
        let sv = DMatrix::from_fn(s.len(), vt.ncols(), |a, j| vt[(a, j)] * s[a]);
        let m = linalg::matmul(&sv, &self.sites[i + 1].right_matrix());
        self.sites[i + 1] = SiteTensor::from_right_matrix(&m);
        self.spectra[i] = s;
        self.center = i + 1;
    }

    /// Largest deviation from the isometry conditions around the center.
    pub fn isometry_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for (i, t) in self.sites.iter().enumerate() {
            let (g, dim) = if i < self.center {
                let m = t.left_matrix();
                (m.adjoint() * m, t.right)
            } else if i > self.center {
                let m = t.right_matrix();
                (&m * m.adjoint(), t.left)
            } else {
                continue;
            };
            let dev = (g - DMatrix::<C64>::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
            err = err.max(dev);
        }
        err
    }

    /// Two-site tensor on `(bond, bond + 1)` as a `(2·left) × (2·right)` matrix.
    pub(crate) fn two_site_matrix(&self, bond: usize) -> DMatrix<C64> {
        linalg::matmul(&self.sites[bond].left_matrix(), &self.sites[bond + 1].right_matrix())
    }

    /// Replaces sites `(bond, bond + 1)` by the truncated SVD of `theta`.
    pub(crate) fn split_two_site(
        &mut self,
        bond: usize,
        theta: DMatrix<C64>,
        trunc: &Truncation,
        dir: Direction,
    ) -> SplitInfo {
        let (u, s, vt, info) = truncated_svd(theta, trunc);
        match dir {
            Direction::Right => {
                self.sites[bond] = SiteTensor::from_left_matrix(&u);
                let sv = DMatrix::from_fn(s.len(), vt.ncols(), |a, j| vt[(a, j)] * s[a]);
                self.sites[bond + 1] = SiteTensor::from_right_matrix(&sv);
                self.center = bond + 1;
            }
            Direction::Left => {
                let us = DMatrix::from_fn(u.nrows(), s.len(), |i, a| u[(i, a)] * s[a]);
                self.sites[bond] = SiteTensor::from_left_matrix(&us);
                self.sites[bond + 1] = SiteTensor::from_right_matrix(&vt);
                self.center = bond;
            }
        }
        self.spectra[bond] = s;
        info
    }

    /// Applies a 4×4 gate on sites `(bond, bond + 1)` in the basis
    /// `{|00⟩, |01⟩, |10⟩, |11⟩}`, truncates, renormalizes and reports the
    /// discarded weight. The center is first moved onto the bond if needed.
    pub fn apply_two_site_gate(
        &mut self,
        bond: usize,
        gate: &Matrix4<C64>,
        trunc: &Truncation,
        dir: Direction,
        check_unitary: bool,
    ) -> Result<SplitInfo> {
        if bond + 1 >= self.len() {
            return Err(Error::OutOfRange { index: bond + 1, len: self.len() });
        }
        if check_unitary {
            let dev = unitarity_error(gate);
            if dev > 1e-12 {
                return Err(Error::NonUnitary(dev));
            }
        }
        if self.center < bond {
            self.move_center(bond);
        } else if self.center > bond + 1 {
            self.move_center(bond + 1);
        }
        let theta = self.two_site_matrix(bond);
        let theta = apply_gate_to_theta(&theta, gate);
        Ok(self.split_two_site(bond, theta, trunc, dir))
    }

    /// Contracts to a dense amplitude vector (site 0 most significant).
    pub fn to_dense(&self) -> Vec<C64> {
        let mut acc: Vec<C64> = vec![C64::new(1.0, 0.0)];
        let mut width = 1usize;
        for t in &self.sites {
            // acc is (prefixes × width); new acc is (prefixes·2 × right)
            let prefixes = acc.len() / width;
            let mut next = vec![ZERO; prefixes * 2 * t.right];
            for p in 0..prefixes {
                for a in 0..width {
                    let x = acc[p * width + a];
                    if x == ZERO {
                        continue;
                    }
                    for s in 0..2 {
                        let row = (p * 2 + s) * t.right;
                        for b in 0..t.right {
                            next[row + b] += x * t.get(a, s, b);
                        }
                    }
                }
            }
            acc = next;
            width = t.right;
        }
        acc
    }

    fn transfer(&self, other: &Mps, op_site: Option<(usize, [[C64; 2]; 2])>) -> C64 {
        assert_eq!(self.len(), other.len());
        let mut env = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for i in 0..self.len() {
            let a = &self.sites[i];
            let b = &other.sites[i];
            let op = match op_site {
                Some((k, m)) if k == i => m,
                _ => [[C64::new(1.0, 0.0), ZERO], [ZERO, C64::new(1.0, 0.0)]],
            };
            let mut next = DMatrix::zeros(a.right, b.right);
            for s in 0..2 {
                for sp in 0..2 {
                    let o = op[s][sp];
                    if o == ZERO {
                        continue;
                    }
                    let am = DMatrix::from_fn(a.left, a.right, |x, y| a.get(x, s, y));
                    let bm = DMatrix::from_fn(b.left, b.right, |x, y| b.get(x, sp, y));
                    next += (am.adjoint() * &env * bm) * o;
                }
            }
            env = next;
        }
        env[(0, 0)]
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Mps) -> C64 {
        self.transfer(other, None)
    }

    pub fn norm(&self) -> f64 {
        self.overlap(self).re.max(0.0).sqrt()
    }

    /// `⟨n_i⟩` by full contraction; independent of the gauge.
    pub fn expect_occupation(&self, site: usize) -> f64 {
        let n = [[ZERO, ZERO], [ZERO, C64::new(1.0, 0.0)]];
        let num = self.transfer(self, Some((site, n))).re;
        num / self.overlap(self).re
    }

    /// One left-to-right SVD sweep measuring every `⟨n_i⟩`, every bond
    /// entropy and, when `terms` is given, `⟨H⟩ = Σ_r ⟨h_r⟩`. Refreshes all
    /// cached spectra and leaves the center on the last site.
    pub fn measure(&mut self, terms: Option<&[BondTerm]>) -> Measurement {
        let len = self.len();
        self.move_center(0);
        let norm = self.center_norm();
        self.normalize();
        let mut occupations = vec![0.0; len];
        let mut energy = 0.0;
        for i in 0..len {
            let t = &self.sites[i];
            let mut occ = 0.0;
            for a in 0..t.left {
                for b in 0..t.right {
                    occ += t.get(a, 1, b).norm_sqr();
                }
            }
            occupations[i] = occ;
            if i + 1 < len {
                if let Some(terms) = terms {
                    let theta = self.two_site_matrix(i);
                    energy += bond_expectation(&theta, &terms[i].matrix);
                }
                self.svd_step_right(i);
            }
        }
        Measurement { occupations, entropies: self.entropies(), energy, norm }
    }

    /// Writes the binary snapshot layout:
    ///
    /// ```text
    /// magic    8 bytes  "EWMPS\0\0\x01"
    /// endian   1 byte   b'L' (all numbers little-endian)
    /// L        u64
    /// center   u64
    /// dims     (L+1) × u64   bond dimensions incl. boundary 1s
    /// tensors  per site, left·2·right × (re f64, im f64), row-major (a, s, b)
    /// ```
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(b"L")?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.center as u64).to_le_bytes())?;
        for d in self.bond_dims() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for t in &self.sites {
            for z in &t.data {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        if tag[0] != b'L' {
            return Err(Error::Snapshot(format!("unsupported endianness tag {:?}", tag[0] as char)));
        }
        let read_u64 = |r: &mut R| -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let len = read_u64(&mut r)? as usize;
        let center = read_u64(&mut r)? as usize;
        if len < 2 || len > 4096 || center >= len {
            return Err(Error::Snapshot(format!("bad header: L={len}, center={center}")));
        }
        let dims = (0..=len).map(|_| read_u64(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims[0] != 1 || dims[len] != 1 || dims.iter().any(|&d| d == 0 || d > 1 << 16) {
            return Err(Error::Snapshot(format!("bad bond dimensions {dims:?}")));
        }
        let mut sites = Vec::with_capacity(len);
        for i in 0..len {
            let n = dims[i] * 2 * dims[i + 1];
            let mut buf = vec![0u8; 16 * n];
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    C64::new(re, im)
                })
                .collect();
            sites.push(SiteTensor::new(dims[i], dims[i + 1], data));
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        Ok(Self { sites, center, spectra: vec![vec![1.0]; len - 1] })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_snapshot(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut mps = Self::read_snapshot(f)?;
        let c = mps.center;
        mps.canonicalize(c);
        Ok(mps)
    }
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"EWMPS\0\0\x01";

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub occupations: Vec<f64>,
    pub entropies: Vec<f64>,
    pub energy: f64,
    /// Norm before the sweep renormalized the state.
    pub norm: f64,
}

pub fn unitarity_error(g: &Matrix4<C64>) -> f64 {
    (g.adjoint() * g - Matrix4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `θ'[(a s₁'), (s₂' b)] = Σ G[(s₁' s₂'), (s₁ s₂)] θ[(a s₁), (s₂ b)]`.
pub(crate) fn apply_gate_to_theta(theta: &DMatrix<C64>, gate: &Matrix4<C64>) -> DMatrix<C64> {
    let left = theta.nrows() / 2;
    let right = theta.ncols() / 2;
    let mut out = DMatrix::zeros(theta.nrows(), theta.ncols());
    for a in 0..left {
        for b in 0..right {
            let mut v = [ZERO; 4];
            for s1 in 0..2 {
                for s2 in 0..2 {
                    v[2 * s1 + s2] = theta[(2 * a + s1, s2 * right + b)];
                }
            }
            for o in 0..4 {
                let mut acc = ZERO;
                for (k, vk) in v.iter().enumerate() {
                    acc += gate[(o, k)] * vk;
                }
                out[(2 * a + o / 2, (o % 2) * right + b)] = acc;
            }
        }
    }
    out
}

/// `⟨θ|h|θ⟩` for a normalized two-site tensor.
pub(crate) fn bond_expectation(theta: &DMatrix<C64>, h: &Matrix4<C64>) -> f64 {
    let ht = apply_gate_to_theta(theta, h);
    theta.iter().zip(ht.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().re
}
