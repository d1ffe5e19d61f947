//! Chain geometry, chemical-potential profiles and the bond decomposition of
//! the East, West and heterojunction Hamiltonians.
//!
//! Sites are indexed from 0 throughout the library; bond `r` couples sites
//! `r` and `r + 1`. The local basis is `{|0⟩, |1⟩}` with `|1⟩` the occupied
//! state, and two-site operators act on the ordered product basis
//! `{|00⟩, |01⟩, |10⟩, |11⟩}` where the left factor belongs to site `r`.
//!
//! For a chain of `L` sites the bond terms are
//!
//! ```text
//! East bond r           ½ μ_r n_r − ½ n_r σˣ_{r+1}
//! contact bond          −½ (σ⁺_r σ⁻_{r+1} + σ⁻_r σ⁺_{r+1})
//! West bond r           ½ μ_{r+1} n_{r+1} − ½ σˣ_r n_{r+1}
//! ```
//!
//! With `σ⁺ = |1⟩⟨0|` the contact matrix is
//!
//! ```text
//!   |00⟩ |01⟩ |10⟩ |11⟩
//! [  0    0    0    0  ]
//! [  0    0   −½    0  ]
//! [  0   −½    0    0  ]
//! [  0    0    0    0  ]
//! ```
//!
//! Every one-site potential is folded into exactly one bond term, so the full
//! Hamiltonian is the plain sum of its bond terms.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    East,
    West,
    #[serde(alias = "hetero")]
    Heterojunction,
}

impl std::str::FromStr for ChainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "east" => Ok(Self::East),
            "west" => Ok(Self::West),
            "heterojunction" | "hetero" => Ok(Self::Heterojunction),
            other => Err(Error::Parse(format!("unknown chain kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for ChainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::East => "east",
            Self::West => "west",
            Self::Heterojunction => "heterojunction",
        };
        f.write_str(s)
    }
}

/// Which sites of a chain of `len` sites carry a chemical potential.
fn site_is_used(kind: ChainKind, len: usize, site: usize) -> bool {
    match kind {
        ChainKind::East => site + 1 < len,
        ChainKind::West => site > 0,
        ChainKind::Heterojunction => {
            let n = len / 2;
            site + 1 < n || site > n
        }
    }
}

/// Per-site chemical potentials. Sites without a potential term are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    mu: Vec<Option<f64>>,
    drive_size: usize,
    mu_drive: f64,
    mu_spacer: f64,
}

impl PotentialProfile {
    /// Standard drive/spacer profile.
    ///
    /// For an East chain the first `drive_size − 1` sites take `mu_drive` and
    /// the remaining used sites take `mu_spacer` (the potential of the last
    /// drive site controls the first spacer site, so it is spacer-valued).
    /// West profiles are the site mirror of the East one, and a
    /// heterojunction is driven symmetrically from both ends.
    pub fn build(
        kind: ChainKind,
        len: usize,
        drive_size: usize,
        mu_drive: f64,
        mu_spacer: f64,
    ) -> Result<Self> {
        validate_len(kind, len)?;
        if !mu_drive.is_finite() || !mu_spacer.is_finite() {
            return Err(Error::InvalidModel("potentials must be finite".into()));
        }
        if drive_size < 1 || drive_size > len / 2 {
            return Err(Error::InvalidModel(format!(
                "drive size {drive_size} outside 1..={}",
                len / 2
            )));
        }
        let east_value = |i: usize| if i + 1 < drive_size { mu_drive } else { mu_spacer };
        let mu = (0..len)
            .map(|i| {
                if !site_is_used(kind, len, i) {
                    return None;
                }
                let v = match kind {
                    ChainKind::East => east_value(i),
                    ChainKind::West => east_value(len - 1 - i),
                    ChainKind::Heterojunction => east_value(i.min(len - 1 - i)),
                };
                Some(v)
            })
            .collect();
        Ok(Self { mu, drive_size, mu_drive, mu_spacer })
    }

    /// Profile from an explicit per-site list. Entries must be present exactly
    /// on the sites that carry a potential term for `kind`.
    pub fn from_sites(kind: ChainKind, mu: Vec<Option<f64>>) -> Result<Self> {
        let len = mu.len();
        validate_len(kind, len)?;
        for (i, m) in mu.iter().enumerate() {
            match (site_is_used(kind, len, i), m) {
                (true, None) => {
                    return Err(Error::InvalidModel(format!("site {} needs a potential", i + 1)))
                }
                (false, Some(_)) => {
                    return Err(Error::InvalidModel(format!(
                        "site {} has no potential term for a {kind} chain",
                        i + 1
                    )))
                }
                (true, Some(v)) if !v.is_finite() => {
                    return Err(Error::InvalidModel(format!("site {} potential not finite", i + 1)))
                }
                _ => {}
            }
        }
        let first = mu.iter().flatten().copied().next().unwrap_or(0.0);
        Ok(Self { mu, drive_size: 0, mu_drive: first, mu_spacer: first })
    }

    /// Overrides one site's potential. Fails on sites without a potential term.
    pub fn set(&mut self, site: usize, value: f64) -> Result<()> {
        match self.mu.get_mut(site) {
            None => Err(Error::OutOfRange { index: site, len: self.mu.len() }),
            Some(None) => Err(Error::InvalidModel(format!("site {} has no potential term", site + 1))),
            Some(Some(m)) => {
                *m = value;
                Ok(())
            }
        }
    }

    /// Sets the drive potential on the West half only (sites mirrored from the
    /// East drive sites).
    pub fn set_west_drive(&mut self, value: f64) {
        let len = self.mu.len();
        for i in 0..self.drive_size.saturating_sub(1) {
            if let Some(m) = self.mu[len - 1 - i].as_mut() {
                *m = value;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self, site: usize) -> Option<f64> {
        self.mu.get(site).copied().flatten()
    }

    pub fn sites(&self) -> &[Option<f64>] {
        &self.mu
    }

    pub fn drive_size(&self) -> usize {
        self.drive_size
    }

    pub fn mu_drive(&self) -> f64 {
        self.mu_drive
    }

    pub fn mu_spacer(&self) -> f64 {
        self.mu_spacer
    }
}

fn validate_len(kind: ChainKind, len: usize) -> Result<()> {
    if len < 2 {
        return Err(Error::InvalidModel(format!("chain length {len} < 2")));
    }
    if kind == ChainKind::Heterojunction && (len % 2 != 0 || len < 4) {
        return Err(Error::InvalidModel(format!(
            "heterojunction needs an even length >= 4, got {len}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    kind: ChainKind,
    profile: PotentialProfile,
}

impl ModelSpec {
    pub fn new(kind: ChainKind, profile: PotentialProfile) -> Result<Self> {
        validate_len(kind, profile.len())?;
        // re-validate the sentinel layout against this kind
        PotentialProfile::from_sites(kind, profile.sites().to_vec())?;
        Ok(Self { kind, profile })
    }

    /// Convenience: standard drive/spacer model.
    pub fn standard(
        kind: ChainKind,
        len: usize,
        drive_size: usize,
        mu_drive: f64,
        mu_spacer: f64,
    ) -> Result<Self> {
        let profile = PotentialProfile::build(kind, len, drive_size, mu_drive, mu_spacer)?;
        Ok(Self { kind, profile })
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.profile.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profile.is_empty()
    }

    pub fn profile(&self) -> &PotentialProfile {
        &self.profile
    }

    pub fn num_bonds(&self) -> usize {
        self.len() - 1
    }

    /// Index of the contact bond for a heterojunction.
    pub fn contact_bond(&self) -> Option<usize> {
        (self.kind == ChainKind::Heterojunction).then(|| self.len() / 2 - 1)
    }

    pub fn bond_kind(&self, bond: usize) -> BondKind {
        match self.kind {
            ChainKind::East => BondKind::East,
            ChainKind::West => BondKind::West,
            ChainKind::Heterojunction => {
                let n = self.len() / 2;
                match bond.cmp(&(n - 1)) {
                    std::cmp::Ordering::Less => BondKind::East,
                    std::cmp::Ordering::Equal => BondKind::Contact,
                    std::cmp::Ordering::Greater => BondKind::West,
                }
            }
        }
    }

    /// The same model with sites reversed. East and West chains swap kinds.
    pub fn mirrored(&self) -> Self {
        let kind = match self.kind {
            ChainKind::East => ChainKind::West,
            ChainKind::West => ChainKind::East,
            ChainKind::Heterojunction => ChainKind::Heterojunction,
        };
        let mut mu = self.profile.mu.clone();
        mu.reverse();
        let profile = PotentialProfile { mu, ..self.profile.clone() };
        Self { kind, profile }
    }

    pub fn compile(&self) -> Vec<BondTerm> {
        compile_bond_terms(self)
    }
}

/// Boundary sites held in the occupied state to select a sector of the
/// constrained dynamics.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pin {
    #[default]
    None,
    Left,
    Right,
    Both,
}

impl Pin {
    /// Sector convention per chain kind: the facilitating end(s) occupied.
    pub fn default_for(kind: ChainKind) -> Self {
        match kind {
            ChainKind::East => Pin::Left,
            ChainKind::West => Pin::Right,
            ChainKind::Heterojunction => Pin::Both,
        }
    }

    pub fn sites(self, len: usize) -> Vec<usize> {
        match self {
            Pin::None => vec![],
            Pin::Left => vec![0],
            Pin::Right => vec![len - 1],
            Pin::Both => vec![0, len - 1],
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Pin::Left => Pin::Right,
            Pin::Right => Pin::Left,
            p => p,
        }
    }
}

impl std::str::FromStr for Pin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Pin::None),
            "left" => Ok(Pin::Left),
            "right" => Ok(Pin::Right),
            "both" => Ok(Pin::Both),
            other => Err(Error::Parse(format!("unknown pin mode '{other}'"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BondKind {
    East,
    Contact,
    West,
}

/// Two-site Hamiltonian term on sites `(bond, bond + 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BondTerm {
    pub bond: usize,
    pub matrix: Matrix4<C64>,
}

pub mod ops {
    use super::*;

    pub fn identity() -> Matrix2<C64> {
        Matrix2::identity()
    }

    /// Occupation projector `|1⟩⟨1|`.
    pub fn number() -> Matrix2<C64> {
        Matrix2::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn sigma_x() -> Matrix2<C64> {
        Matrix2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn sigma_z() -> Matrix2<C64> {
        Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0))
    }

    /// `|1⟩⟨0|`: fills an empty site.
    pub fn raise() -> Matrix2<C64> {
        Matrix2::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    /// `|0⟩⟨1|`: empties an occupied site.
    pub fn lower() -> Matrix2<C64> {
        raise().adjoint()
    }

    /// `a ⊗ b` with `a` acting on the left site.
    pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
        Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
    }
}

fn east_term(mu: f64) -> Matrix4<C64> {
    use ops::*;
    kron(&number(), &identity()) * C64::from(0.5 * mu) - kron(&number(), &sigma_x()) * C64::from(0.5)
}

fn west_term(mu: f64) -> Matrix4<C64> {
    use ops::*;
    kron(&identity(), &number()) * C64::from(0.5 * mu) - kron(&sigma_x(), &number()) * C64::from(0.5)
}

fn contact_term() -> Matrix4<C64> {
    use ops::*;
    (kron(&raise(), &lower()) + kron(&lower(), &raise())) * C64::from(-0.5)
}

/// Splits a model into its bond terms; the Hamiltonian is their exact sum.
pub fn compile_bond_terms(spec: &ModelSpec) -> Vec<BondTerm> {
    let mu = |i: usize| spec.profile.mu(i).expect("validated profile");
    (0..spec.num_bonds())
        .map(|r| {
            let matrix = match spec.bond_kind(r) {
                BondKind::East => east_term(mu(r)),
                BondKind::Contact => contact_term(),
                BondKind::West => west_term(mu(r + 1)),
            };
            BondTerm { bond: r, matrix }
        })
        .collect()
}

/// Image of a computational basis state under one bond term, as a list of
/// `(basis state, coefficient)` pairs with zero coefficients dropped.
pub fn apply_bond_term(term: &BondTerm, state: &[bool]) -> Result<Vec<(Vec<bool>, C64)>> {
    let r = term.bond;
    if r + 1 >= state.len() {
        return Err(Error::OutOfRange { index: r + 1, len: state.len() });
    }
    let col = 2 * state[r] as usize + state[r + 1] as usize;
    let out = (0..4)
        .filter_map(|row| {
            let c = term.matrix[(row, col)];
            (c.norm() > 0.0).then(|| {
                let mut s = state.to_vec();
                s[r] = row & 2 != 0;
                s[r + 1] = row & 1 != 0;
                (s, c)
            })
        })
        .collect();
    Ok(out)
}

/// Parses a 0/1 string into occupations.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Parse(format!("invalid occupation character '{other}'"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn used(p: &PotentialProfile) -> Vec<f64> {
        p.sites().iter().flatten().copied().collect()
    }

    #[test]
    fn east_profile_l8_d3() {
        let p = PotentialProfile::build(ChainKind::East, 8, 3, 0.99, 2.0).unwrap();
        assert_eq!(
            p.sites(),
            &[Some(0.99), Some(0.99), Some(2.0), Some(2.0), Some(2.0), Some(2.0), Some(2.0), None]
        );
    }

    #[test]
    fn east_profile_d1_is_all_spacer() {
        let p = PotentialProfile::build(ChainKind::East, 8, 1, 0.99, 2.0).unwrap();
        assert!(used(&p).iter().all(|&m| m == 2.0));
        assert_eq!(p.mu(7), None);
    }

    #[test]
    fn heterojunction_profile_l24_matches_table() {
        let p = PotentialProfile::build(ChainKind::Heterojunction, 24, 3, 0.99, 2.0).unwrap();
        // hand-built table, 0-based sites
        let mut table = vec![Some(2.0); 24];
        table[0] = Some(0.99);
        table[1] = Some(0.99);
        table[11] = None;
        table[12] = None;
        table[22] = Some(0.99);
        table[23] = Some(0.99);
        assert_eq!(p.sites(), table.as_slice());
        // mirror map i <-> L+1-i
        for i in 0..24 {
            assert_eq!(p.mu(i), p.mu(23 - i));
        }
    }

    #[test]
    fn west_profile_mirrors_east() {
        let e = PotentialProfile::build(ChainKind::East, 9, 4, 0.5, 2.0).unwrap();
        let w = PotentialProfile::build(ChainKind::West, 9, 4, 0.5, 2.0).unwrap();
        for i in 0..9 {
            assert_eq!(e.mu(i), w.mu(8 - i));
        }
    }

    #[test]
    fn profile_errors() {
        assert!(PotentialProfile::build(ChainKind::Heterojunction, 7, 2, 0.99, 2.0).is_err());
        assert!(PotentialProfile::build(ChainKind::Heterojunction, 2, 1, 0.99, 2.0).is_err());
        assert!(PotentialProfile::build(ChainKind::East, 8, 5, 0.99, 2.0).is_err());
        assert!(PotentialProfile::build(ChainKind::East, 8, 0, 0.99, 2.0).is_err());
        assert!(PotentialProfile::build(ChainKind::East, 1, 1, 0.99, 2.0).is_err());
        assert!(PotentialProfile::build(ChainKind::East, 8, 2, f64::NAN, 2.0).is_err());
    }

    #[test]
    fn explicit_profile_rejects_misplaced_entries() {
        let mut mu = vec![Some(1.0); 6];
        assert!(PotentialProfile::from_sites(ChainKind::East, mu.clone()).is_err());
        mu[5] = None;
        assert!(PotentialProfile::from_sites(ChainKind::East, mu.clone()).is_ok());
        assert!(PotentialProfile::from_sites(ChainKind::West, mu).is_err());
    }

    #[test]
    fn override_unused_site_fails() {
        let mut p = PotentialProfile::build(ChainKind::Heterojunction, 8, 2, 0.99, 2.0).unwrap();
        assert!(p.set(3, 1.0).is_err());
        assert!(p.set(4, 1.0).is_err());
        p.set(0, 0.3).unwrap();
        assert_eq!(p.mu(0), Some(0.3));
        p.set_west_drive(0.5);
        assert_eq!(p.mu(7), Some(0.5));
        assert_eq!(p.mu(6), Some(2.0));
    }

    #[test]
    fn two_site_east_spectrum() {
        let spec = ModelSpec::standard(ChainKind::East, 2, 1, 2.0, 2.0).unwrap();
        let terms = spec.compile();
        assert_eq!(terms.len(), 1);
        let mut ev: Vec<f64> = terms[0].matrix.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expect = [0.0, 0.0, 0.5, 1.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn bond_terms_hermitian_and_kill_vacuum() {
        for kind in [ChainKind::East, ChainKind::West, ChainKind::Heterojunction] {
            let spec = ModelSpec::standard(kind, 8, 3, 0.99, 2.0).unwrap();
            for t in spec.compile() {
                let dev = (t.matrix - t.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(dev < 1e-14);
                assert!(t.matrix.column(0).iter().all(|z| z.norm() == 0.0));
            }
        }
    }

    #[test]
    fn heterojunction_l4_has_three_terms() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 4, 1, 0.99, 2.0).unwrap();
        let kinds: Vec<_> = (0..3).map(|b| spec.bond_kind(b)).collect();
        assert_eq!(spec.compile().len(), 3);
        assert_eq!(kinds, vec![BondKind::East, BondKind::Contact, BondKind::West]);
    }

    #[test]
    fn contact_matrix_convention() {
        let m = contact_term();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (1, 2) || (i, j) == (2, 1) { -0.5 } else { 0.0 };
                assert_eq!(m[(i, j)], C64::from(expect));
            }
        }
    }

    #[test]
    fn facilitation_branch_110() {
        let mu1 = 0.99;
        let spec = ModelSpec::standard(ChainKind::East, 3, 1, mu1, mu1).unwrap();
        let terms = spec.compile();
        let out = apply_bond_term(&terms[0], &parse_bits("110").unwrap()).unwrap();
        assert_eq!(
            out,
            vec![
                (parse_bits("100").unwrap(), C64::from(-0.5)),
                (parse_bits("110").unwrap(), C64::from(0.5 * mu1)),
            ]
        );
    }

    #[test]
    fn facilitation_branch_010() {
        let mu2 = 0.7;
        let mut p = PotentialProfile::build(ChainKind::East, 3, 1, 2.0, 2.0).unwrap();
        p.set(1, mu2).unwrap();
        let spec = ModelSpec::new(ChainKind::East, p).unwrap();
        let out = apply_bond_term(&spec.compile()[1], &parse_bits("010").unwrap()).unwrap();
        assert_eq!(
            out,
            vec![
                (parse_bits("010").unwrap(), C64::from(0.5 * mu2)),
                (parse_bits("011").unwrap(), C64::from(-0.5)),
            ]
        );
    }

    #[test]
    fn vacuum_is_annihilated_by_every_bond() {
        let spec = ModelSpec::standard(ChainKind::East, 5, 2, 0.5, 2.0).unwrap();
        for t in spec.compile() {
            assert!(apply_bond_term(&t, &[false; 5]).unwrap().is_empty());
        }
    }

    #[test]
    fn apply_out_of_range() {
        let spec = ModelSpec::standard(ChainKind::East, 5, 2, 0.5, 2.0).unwrap();
        let t = &spec.compile()[3];
        assert!(apply_bond_term(t, &[false; 3]).is_err());
    }

    #[test]
    fn mirrored_model_swaps_kind() {
        let e = ModelSpec::standard(ChainKind::East, 6, 3, 0.5, 2.0).unwrap();
        let w = ModelSpec::standard(ChainKind::West, 6, 3, 0.5, 2.0).unwrap();
        assert_eq!(e.mirrored(), w);
        assert_eq!(w.mirrored(), e);
    }
}
