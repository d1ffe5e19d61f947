//! Initial product states: an occupation pattern with at most one site in the
//! superposition `√α|1⟩ + √(1−α)|0⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::parse_bits;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductStateSpec {
    pattern: Vec<bool>,
    superposition: Option<(usize, f64)>,
}

impl ProductStateSpec {
    pub fn new(pattern: Vec<bool>, superposition: Option<(usize, f64)>) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::InvalidState("empty pattern".into()));
        }
        if let Some((site, alpha)) = superposition {
            if site >= pattern.len() {
                return Err(Error::OutOfRange { index: site, len: pattern.len() });
            }
            if !(0.0..=1.0).contains(&alpha) {
                return Err(Error::InvalidState(format!("alpha {alpha} outside [0, 1]")));
            }
        }
        Ok(Self { pattern, superposition })
    }

    pub fn from_pattern(pattern: Vec<bool>) -> Result<Self> {
        Self::new(pattern, None)
    }

    /// `|1…1⟩_x |α⟩ |0…0⟩` on `len` sites: `x` leading occupied sites, the
    /// superposition on the next site. Initial occupation is `x + α`.
    pub fn fractional(len: usize, filled: usize, alpha: f64) -> Result<Self> {
        if filled > len {
            return Err(Error::InvalidState(format!("{filled} filled sites on a chain of {len}")));
        }
        let pattern = (0..len).map(|i| i < filled).collect();
        let sup = (filled < len).then_some((filled, alpha));
        if filled == len && alpha != 0.0 {
            return Err(Error::InvalidState("no room for the superposition site".into()));
        }
        Self::new(pattern, sup)
    }

    /// Fractional-occupation state with `ρ₀ = rho0`, splitting it into
    /// `x = ⌊ρ₀⌋` and `α = ρ₀ − x`.
    pub fn with_occupation(len: usize, rho0: f64) -> Result<Self> {
        if !(rho0 >= 0.0) {
            return Err(Error::InvalidState(format!("occupation {rho0} must be >= 0")));
        }
        // snap values like 2.9999999 produced by grid arithmetic
        let nearest = rho0.round();
        let rho0 = if (rho0 - nearest).abs() < 1e-9 { nearest } else { rho0 };
        let filled = rho0.floor() as usize;
        Self::fractional(len, filled, rho0 - filled as f64)
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    pub fn pattern(&self) -> &[bool] {
        &self.pattern
    }

    pub fn superposition(&self) -> Option<(usize, f64)> {
        self.superposition
    }

    /// Local state `(amp₀, amp₁)` of every site.
    pub fn site_amplitudes(&self) -> Vec<[f64; 2]> {
        self.pattern
            .iter()
            .enumerate()
            .map(|(i, &b)| match self.superposition {
                Some((s, a)) if s == i => [(1.0 - a).sqrt(), a.sqrt()],
                _ if b => [0.0, 1.0],
                _ => [1.0, 0.0],
            })
            .collect()
    }

    /// `⟨n_i⟩` of the product state.
    pub fn occupations(&self) -> Vec<f64> {
        self.site_amplitudes().iter().map(|a| a[1] * a[1]).collect()
    }

    /// Total initial occupation ρ₀.
    pub fn initial_occupation(&self) -> f64 {
        self.pattern
            .iter()
            .enumerate()
            .map(|(i, &b)| match self.superposition {
                Some((s, a)) if s == i => a,
                _ => b as u8 as f64,
            })
            .sum()
    }

    /// Site-reversed state.
    pub fn mirror(&self) -> Self {
        let mut pattern = self.pattern.clone();
        pattern.reverse();
        let len = pattern.len();
        Self { pattern, superposition: self.superposition.map(|(s, a)| (len - 1 - s, a)) }
    }

    /// Pattern syntax: `0`/`1` characters with an optional `@site:alpha`
    /// suffix, where `site` is 1-based and `alpha` is a decimal or a fraction
    /// such as `1/3`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut parts = s.split('@');
        let bits = parse_bits(parts.next().unwrap_or_default())?;
        let sup = match parts.next() {
            None => None,
            Some(tail) => {
                let (site, alpha) = tail
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("expected '@site:alpha', got '@{tail}'")))?;
                let site: usize = site
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad superposition site '{site}'")))?;
                if site == 0 {
                    return Err(Error::Parse("superposition site is 1-based".into()));
                }
                Some((site - 1, parse_real(alpha)?))
            }
        };
        if parts.next().is_some() {
            return Err(Error::InvalidState("only one superposition site is supported".into()));
        }
        Self::new(bits, sup)
    }
}

impl std::fmt::Display for ProductStateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.pattern {
            f.write_str(if b { "1" } else { "0" })?;
        }
        if let Some((s, a)) = self.superposition {
            write!(f, "@{}:{}", s + 1, a)?;
        }
        Ok(())
    }
}

/// Parses `0.25`, `1/3` and the like.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid number '{s}'"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            Ok(n / d)
        }
        None => s.parse().map_err(|_| bad()),
    }
}
