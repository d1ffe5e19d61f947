//! Recorded trajectories and their CSV / metadata persistence.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One recorded time.
#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    pub time: f64,
    /// `⟨n_i⟩`, length `L`.
    pub occupations: Vec<f64>,
    /// `S_r` for the cut after site `r`, length `L − 1`.
    pub entropies: Vec<f64>,
    pub energy: f64,
    pub norm: f64,
    /// Accumulated discarded weight up to this time.
    pub discarded: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    len: usize,
    rows: Vec<Observables>,
}

impl TimeSeries {
    pub fn new(len: usize) -> Self {
        Self { len, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.len
    }

    /// Appends a row; times must be strictly increasing.
    pub fn push(&mut self, row: Observables) {
        assert_eq!(row.occupations.len(), self.len);
        assert_eq!(row.entropies.len(), self.len - 1);
        if let Some(last) = self.rows.last() {
            assert!(row.time > last.time, "time grid must be strictly increasing");
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Observables] {
        &self.rows
    }

    pub fn last(&self) -> Option<&Observables> {
        self.rows.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    /// `S_r(t)` for the cut after site `cut` (1-based cut index as in the CSV
    /// header, i.e. `cut` sites on the left).
    pub fn entropy_at_cut(&self, cut: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.entropies[cut - 1]).collect()
    }

    /// Half-chain entropy `S_{L/2}(t)`.
    pub fn half_chain_entropy(&self) -> Vec<f64> {
        self.entropy_at_cut(self.len / 2)
    }

    /// `⟨n_i⟩(t)` for a 0-based site.
    pub fn occupation_of(&self, site: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.occupations[site]).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.len).map(|i| format!("n_{i}")));
        h.extend((1..self.len).map(|r| format!("S_{r}")));
        h.extend(["energy", "norm", "discarded"].map(String::from));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{}", self.header().join(","))?;
        for r in &self.rows {
            let mut fields: Vec<String> = Vec::with_capacity(2 * self.len + 3);
            fields.push(fmt_f64(r.time));
            fields.extend(r.occupations.iter().map(|&x| fmt_f64(x)));
            fields.extend(r.entropies.iter().map(|&x| fmt_f64(x)));
            fields.extend([r.energy, r.norm, r.discarded].map(fmt_f64));
            writeln!(w, "{}", fields.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))??;
        let ncols = header.split(',').count();
        if ncols < 6 || (ncols - 4) % 2 != 1 {
            return Err(Error::Parse(format!("unexpected column count {ncols}")));
        }
        let len = (ncols - 3) / 2;
        let mut series = Self::new(len);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{x}'"))))
                .collect::<Result<_>>()?;
            if v.len() != ncols {
                return Err(Error::Parse(format!("row has {} fields, expected {ncols}", v.len())));
            }
            series.rows.push(Observables {
                time: v[0],
                occupations: v[1..=len].to_vec(),
                entropies: v[len + 1..2 * len].to_vec(),
                energy: v[2 * len],
                norm: v[2 * len + 1],
                discarded: v[2 * len + 2],
            });
        }
        Ok(series)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Drops rows after `time`, used when resuming from a checkpoint.
    pub fn truncate_after(&mut self, time: f64) {
        self.rows.retain(|r| r.time <= time + 1e-9);
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Sidecar written next to every CSV.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunMetadata {
    pub code_version: String,
    pub entropy_log_base: String,
    pub backend: String,
    pub model: serde_json::Value,
    pub initial_state: Option<String>,
    pub settings: serde_json::Value,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl RunMetadata {
    pub fn new(backend: &str, model: serde_json::Value, settings: serde_json::Value) -> Self {
        Self {
            code_version: crate::VERSION.to_string(),
            entropy_log_base: "e".to_string(),
            backend: backend.to_string(),
            model,
            initial_state: None,
            settings,
            notes: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(t: f64, len: usize, seed: f64) -> Observables {
        Observables {
            time: t,
            occupations: (0..len).map(|i| (seed * (i + 1) as f64).sin().abs()).collect(),
            entropies: (1..len).map(|i| (seed + i as f64).cos().abs() / 3.0).collect(),
            energy: -seed / 7.0,
            norm: 1.0 - 1e-16,
            discarded: seed * 1e-12,
        }
    }

    #[test]
    fn header_layout() {
        let s = TimeSeries::new(3);
        assert_eq!(s.header(), ["t", "n_1", "n_2", "n_3", "S_1", "S_2", "energy", "norm", "discarded"]);
    }

    #[test]
    #[should_panic]
    fn non_increasing_time_rejected() {
        let mut s = TimeSeries::new(3);
        s.push(row(1.0, 3, 0.1));
        s.push(row(1.0, 3, 0.2));
    }

    proptest! {
        #[test]
        fn csv_roundtrip_is_exact(seeds in proptest::collection::vec(-100.0f64..100.0, 1..6), len in 2usize..7) {
            let mut s = TimeSeries::new(len);
            for (k, &seed) in seeds.iter().enumerate() {
                s.push(row(k as f64 * 0.1, len, seed));
            }
            let mut buf = Vec::new();
            s.write_csv(&mut buf).unwrap();
            let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
