//! Configuration-driven pipelines for the standard experiments: ground-state
//! profiles, unipolar and bipolar dynamics, initial-occupation and potential
//! scans, and the superposition-of-flows comparison.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmrg::{self, DmrgParams, LocalizationFit};
use crate::ed;
use crate::error::{Error, Result};
use crate::lattice::{ChainKind, ModelSpec, Pin};
use crate::mps::{Mps, Truncation, TruncationReport};
use crate::series::{fmt_f64, RunMetadata, TimeSeries};
use crate::state::ProductStateSpec;
use crate::tebd::{self, TrotterOrder, TrotterSchedule};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig1b,
    Fig1c,
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 6] = [Self::Fig1b, Self::Fig1c, Self::Fig2, Self::Fig3a, Self::Fig3b, Self::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1b => "fig1b",
            Self::Fig1c => "fig1c",
            Self::Fig2 => "fig2",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig4 => "fig4",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown experiment '{s}'")))
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            o => Err(Error::Parse(format!("unknown preset '{o}'"))),
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Mps,
    Exact,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(Self::Mps),
            "exact" => Ok(Self::Exact),
            o => Err(Error::Parse(format!("unknown backend '{o}'"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mps => "mps",
            Self::Exact => "exact",
        })
    }
}

/// Inclusive arithmetic grid `start, start + step, …, stop`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn single(x: f64) -> Self {
        Self { start: x, stop: x, step: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidParams(format!("bad grid {self:?}")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub preset: Preset,
    #[serde(rename = "L")]
    pub len: usize,
    /// Drive sizes; pipelines with a single `D` use the first entry.
    pub drive_sizes: Vec<usize>,
    pub mu_drive: f64,
    pub mu_spacer: f64,
    /// West-half drive potential when it differs from `mu_drive`.
    pub west_mu_drive: Option<f64>,
    /// Initial state (`bits[@site:alpha]`) for the single-run pipelines.
    pub init: Option<String>,
    pub dt: f64,
    pub order: TrotterOrder,
    #[serde(rename = "T")]
    pub total_time: f64,
    pub record_every: f64,
    pub chi_max: usize,
    pub cutoff: f64,
    pub hard_cap: Option<usize>,
    pub rho_grid: Grid,
    pub mu_grid: Grid,
    /// Initial occupation of the potential scan.
    pub rho0: f64,
    /// Relative L2 residual below which the bipolar flow counts as the sum of
    /// the unipolar ones.
    pub superposition_threshold: f64,
    pub dmrg_chi: Vec<usize>,
    pub dmrg_sweeps: usize,
    pub backend: Backend,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(ExperimentId::Fig2, Preset::Desk)
    }
}

impl ExperimentConfig {
    pub fn preset(id: ExperimentId, preset: Preset) -> Self {
        let paper = preset == Preset::Paper;
        let len = if paper { 24 } else { 16 };
        let total_time = match (id, paper) {
            (ExperimentId::Fig2, true) => 350.0,
            (ExperimentId::Fig3a | ExperimentId::Fig3b, true) => 1200.0,
            (ExperimentId::Fig4, true) => 400.0,
            (ExperimentId::Fig3a, false) => 400.0,
            _ => 200.0,
        };
        let drive_sizes = match (id, paper) {
            (ExperimentId::Fig1b, false) => (1..=5).collect(),
            (ExperimentId::Fig1b, true) => (1..=7).collect(),
            (ExperimentId::Fig1c, _) => vec![4, 5, 6],
            (ExperimentId::Fig3a, false) => vec![3, 4],
            (ExperimentId::Fig3a, true) => vec![3, 4, 5],
            _ => vec![3],
        };
        let len = if id == ExperimentId::Fig1c { 24 } else { len };
        // the bipolar run saturates the center bonds at L=16
        let chi_max = if id == ExperimentId::Fig4 && !paper { 64 } else { 256 };
        let rho_stop = (len / 4) as f64;
        Self {
            id,
            preset,
            len,
            drive_sizes,
            mu_drive: 0.99,
            mu_spacer: 2.0,
            west_mu_drive: None,
            init: None,
            dt: 0.1,
            order: TrotterOrder::Fourth,
            total_time,
            record_every: 1.0,
            chi_max,
            cutoff: 1e-10,
            hard_cap: None,
            rho_grid: Grid::new(0.0, rho_stop, 1.0 / 3.0),
            mu_grid: Grid::new(0.2, 2.0, 0.2),
            rho0: 3.0,
            superposition_threshold: 0.15,
            dmrg_chi: vec![16, 32, 64],
            dmrg_sweeps: 30,
            backend: Backend::Mps,
            out_dir: PathBuf::from("results").join(id.name()),
            workers: 1,
        }
    }

    /// Values from a TOML document replace the matching fields of `self`.
    pub fn overlay_toml(&self, text: &str) -> Result<Self> {
        let patch: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let base = toml::Table::try_from(self).map_err(|e| Error::Parse(e.to_string()))?;
        let mut merged = base;
        merge_tables(&mut merged, patch);
        let cfg: Self = merged.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.drive_sizes.is_empty() {
            return bad("no drive sizes".into());
        }
        if self.drive_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return bad("drive sizes must be increasing".into());
        }
        self.rho_grid.validate()?;
        self.mu_grid.validate()?;
        if self.backend == Backend::Exact && self.len > ed::MAX_SITES {
            return Err(Error::TooLarge { len: self.len, max: ed::MAX_SITES });
        }
        if self.workers == 0 {
            return bad("workers must be >= 1".into());
        }
        if !(self.superposition_threshold > 0.0) {
            return bad("superposition threshold must be positive".into());
        }
        self.schedule().validate()
    }

    pub fn schedule(&self) -> TrotterSchedule {
        TrotterSchedule {
            dt: self.dt,
            order: self.order,
            total_time: self.total_time,
            record_every: self.record_every,
            truncation: Truncation { chi_max: self.chi_max, cutoff: self.cutoff },
            hard_cap: self.hard_cap,
        }
    }

    pub fn drive_size(&self) -> usize {
        self.drive_sizes[0]
    }

    pub fn model(&self, kind: ChainKind, drive_size: usize) -> Result<ModelSpec> {
        let mut spec = ModelSpec::standard(kind, self.len, drive_size, self.mu_drive, self.mu_spacer)?;
        if let Some(w) = self.west_mu_drive {
            let mut profile = spec.profile().clone();
            profile.set_west_drive(w);
            spec = ModelSpec::new(kind, profile)?;
        }
        Ok(spec)
    }

    fn dmrg_params(&self, spec: &ModelSpec) -> DmrgParams {
        DmrgParams { chi_schedule: self.dmrg_chi.clone(), max_sweeps: self.dmrg_sweeps, ..DmrgParams::for_model(spec) }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))
    }
}

fn merge_tables(base: &mut toml::Table, patch: toml::Table) {
    for (k, v) in patch {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(p)) => merge_tables(b, p),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Time evolution with the configured backend.
pub fn simulate(spec: &ModelSpec, init: &ProductStateSpec, cfg: &ExperimentConfig) -> Result<(TimeSeries, TruncationReport)> {
    let schedule = cfg.schedule();
    match cfg.backend {
        Backend::Mps => {
            let out = tebd::evolve(spec, Mps::from_product(init), &schedule)?;
            Ok((out.series, out.report))
        }
        Backend::Exact => {
            schedule.validate()?;
            let times: Vec<f64> = (0..=schedule.num_records()).map(|k| k as f64 * schedule.record_every).collect();
            let series = ed::exact_time_series(spec, init, &times[1..])?;
            let mut full = TimeSeries::new(spec.len());
            let psi0 = ed::DenseState::from_product(init)?;
            let (occupations, entropies) = ed::exact_observables(&psi0);
            let h = ed::SparseHamiltonian::new(spec)?;
            full.push(crate::series::Observables {
                time: 0.0,
                occupations,
                entropies,
                energy: h.expectation(&psi0),
                norm: psi0.norm(),
                discarded: 0.0,
            });
            for r in series.rows() {
                full.push(r.clone());
            }
            Ok((full, TruncationReport::default()))
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn metadata(cfg: &ExperimentConfig, spec: &ModelSpec, init: Option<&ProductStateSpec>, report: Option<&TruncationReport>) -> Result<RunMetadata> {
    let mut settings = serde_json::to_value(cfg)?;
    if let (Some(r), Some(obj)) = (report, settings.as_object_mut()) {
        obj.insert("max_bond".into(), r.max_bond.into());
        obj.insert("total_discarded".into(), r.total_discarded.into());
        obj.insert("saturated_splits".into(), r.saturated.into());
    }
    let mut meta = RunMetadata::new(&cfg.backend.to_string(), serde_json::to_value(spec)?, settings);
    meta.initial_state = init.map(|s| s.to_string());
    Ok(meta)
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_series(dir: &Path, stem: &str, series: &TimeSeries, meta: &RunMetadata) -> Result<()> {
    ensure_dir(dir)?;
    series.save_csv(&dir.join(format!("{stem}.csv")))?;
    meta.save(&dir.join(format!("{stem}.json")))
}

pub fn write_ground_profile(path: &Path, occupations: &[f64]) -> Result<()> {
    let mut s = String::from("site,mean_occupation\n");
    for (i, n) in occupations.iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, fmt_f64(*n)));
    }
    fs::write(path, s)?;
    Ok(())
}

/// Pearson correlation of two equally long samples.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Interior indices `k` with `v[k−1] < v[k] > v[k+1]`.
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1)).filter(|&k| v[k] > v[k - 1] && v[k] > v[k + 1]).collect()
}

pub fn local_minima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1)).filter(|&k| v[k] < v[k - 1] && v[k] < v[k + 1]).collect()
}

/// Central-difference derivative on a uniform grid.
pub fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| match k {
            0 => (v[1] - v[0]) / h,
            k if k == n - 1 => (v[n - 1] - v[n - 2]) / h,
            k => (v[k + 1] - v[k - 1]) / (2.0 * h),
        })
        .collect()
}

/// `‖a − (b + c)‖₂ / ‖a‖₂`.
pub fn superposition_residual(bi: &[f64], east: &[f64], west: &[f64]) -> f64 {
    let num: f64 = bi.iter().zip(east).zip(west).map(|((x, e), w)| (x - e - w).powi(2)).sum();
    let den: f64 = bi.iter().map(|x| x * x).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundProfile {
    pub drive_size: usize,
    pub energy: f64,
    pub converged: bool,
    pub occupations: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Fig1Report {
    pub id: ExperimentId,
    pub profiles: Vec<GroundProfile>,
    /// Exponential fits in the spacer window (East chains only).
    pub fits: Vec<Option<LocalizationFit>>,
    /// `(max − min) / |mean|` of the fitted slopes.
    pub slope_spread: Option<f64>,
    /// `Σ ⟨n_i⟩` over the four sites around the contact (heterojunction only).
    pub mid_sums: Vec<f64>,
    pub all_converged: bool,
}

impl Fig1Report {
    pub fn mid_sums_increasing(&self) -> bool {
        self.mid_sums.windows(2).all(|w| w[1] > w[0])
    }
}

/// Spacer window for the exponential fit: from the first spacer site to the
/// last site still above the fit floor, excluding the chain end.
pub fn spacer_window(profile: &[f64], drive_size: usize) -> std::ops::Range<usize> {
    let start = drive_size;
    let mut end = start;
    while end + 1 < profile.len() && profile[end] > dmrg::OCCUPATION_FLOOR {
        end += 1;
    }
    start..end
}

pub fn ground_state(spec: &ModelSpec, cfg: &ExperimentConfig) -> Result<(f64, Vec<f64>, bool, Option<dmrg::DmrgResult>)> {
    match cfg.backend {
        Backend::Exact => {
            let (e, psi) = ed::ground_state_exact(spec, Pin::default_for(spec.kind()))?;
            Ok((e, psi.occupations(), true, None))
        }
        Backend::Mps => {
            let r = dmrg::dmrg_ground(spec, &cfg.dmrg_params(spec))?;
            let mut state = r.state.clone();
            let occ = state.measure(None).occupations;
            Ok((r.energy, occ, r.converged, Some(r)))
        }
    }
}

pub fn run_fig1(cfg: &ExperimentConfig) -> Result<Fig1Report> {
    cfg.validate()?;
    let kind = match cfg.id {
        ExperimentId::Fig1b => ChainKind::East,
        ExperimentId::Fig1c => ChainKind::Heterojunction,
        other => return Err(Error::InvalidParams(format!("{other} is not a ground-state experiment"))),
    };
    ensure_dir(&cfg.out_dir)?;
    let pool = cfg.pool()?;
    let runs: Vec<Result<GroundProfile>> = pool.install(|| {
        cfg.drive_sizes
            .par_iter()
            .map(|&d| {
                let spec = cfg.model(kind, d)?;
                let (energy, occupations, converged, dmrg) = ground_state(&spec, cfg)?;
                let stem = format!("{}_D{d}", cfg.id);
                write_ground_profile(&cfg.out_dir.join(format!("{stem}.csv")), &occupations)?;
                if let Some(r) = dmrg {
                    fs::write(cfg.out_dir.join(format!("{stem}.sweeps.txt")), r.log_text())?;
                }
                metadata(cfg, &spec, None, None)?.save(&cfg.out_dir.join(format!("{stem}.json")))?;
                Ok(GroundProfile { drive_size: d, energy, converged, occupations })
            })
            .collect()
    });
    let profiles: Vec<GroundProfile> = runs.into_iter().collect::<Result<_>>()?;
    let mut fits = Vec::new();
    let mut mid_sums = Vec::new();
    for p in &profiles {
        match kind {
            ChainKind::East => {
                let w = spacer_window(&p.occupations, p.drive_size);
                fits.push(dmrg::fit_localization_length(&p.occupations, w).ok());
            }
            _ => {
                let n = cfg.len / 2;
                mid_sums.push(p.occupations[n - 2..=n + 1].iter().sum());
            }
        }
    }
    let slopes: Vec<f64> = fits.iter().flatten().map(|f| f.slope).collect();
    let slope_spread = (!slopes.is_empty() && slopes.len() == fits.len()).then(|| {
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let (lo, hi) = slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
        (hi - lo) / mean.abs()
    });
    let all_converged = profiles.iter().all(|p| p.converged);
    let report = Fig1Report { id: cfg.id, profiles, fits, slope_spread, mid_sums, all_converged };
    fs::write(cfg.out_dir.join(format!("{}_summary.json", cfg.id)), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct Fig2Report {
    pub series: TimeSeries,
    pub report: TruncationReport,
    pub correlation: f64,
    /// Number of local maxima of `dS_{L/2}/dt` in `(0, T]`.
    pub derivative_maxima: usize,
}

/// `|1…1 0…0⟩` with the first `rho0` sites occupied, or the configured state.
fn unipolar_init(cfg: &ExperimentConfig, rho0: usize) -> Result<ProductStateSpec> {
    match &cfg.init {
        Some(s) => ProductStateSpec::parse(s),
        None => ProductStateSpec::fractional(cfg.len, rho0, 0.0),
    }
}

pub fn run_fig2(cfg: &ExperimentConfig) -> Result<Fig2Report> {
    cfg.validate()?;
    let spec = cfg.model(ChainKind::Heterojunction, cfg.drive_size())?;
    let init = unipolar_init(cfg, cfg.rho0.round() as usize)?;
    if init.len() != cfg.len {
        return Err(Error::InvalidState(format!("initial state has {} sites, model {}", init.len(), cfg.len)));
    }
    let (series, report) = simulate(&spec, &init, cfg)?;
    let meta = metadata(cfg, &spec, Some(&init), Some(&report))?;
    write_series(&cfg.out_dir, "fig2", &series, &meta)?;
    let s_half = series.half_chain_entropy();
    let n_half = series.occupation_of(cfg.len / 2 - 1);
    let mut inset = String::from("t,n_half,S_half\n");
    for ((t, n), s) in series.times().iter().zip(&n_half).zip(&s_half) {
        inset.push_str(&format!("{},{},{}\n", fmt_f64(*t), fmt_f64(*n), fmt_f64(*s)));
    }
    fs::write(cfg.out_dir.join("fig2_inset.csv"), inset)?;
    let correlation = pearson(&s_half, &n_half);
    let derivative_maxima = local_maxima(&derivative(&s_half, cfg.record_every)).len();
    Ok(Fig2Report { series, report, correlation, derivative_maxima })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub drive_size: usize,
    /// `ρ₀` for occupation scans, `μ` for potential scans.
    pub x: f64,
    pub s_half: f64,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub id: ExperimentId,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn curve(&self, drive_size: usize) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| r.drive_size == drive_size && r.status == "ok")
            .map(|r| (r.x, r.s_half))
            .unzip()
    }

    /// Positions of the interior local maxima of one curve.
    pub fn maxima(&self, drive_size: usize) -> Vec<f64> {
        let (x, y) = self.curve(drive_size);
        local_maxima(&y).into_iter().map(|k| x[k]).collect()
    }

    pub fn minima(&self, drive_size: usize) -> Vec<f64> {
        let (x, y) = self.curve(drive_size);
        local_minima(&y).into_iter().map(|k| x[k]).collect()
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.status == "ok")
    }

    pub fn write_csv(&self, path: &Path, x_name: &str) -> Result<()> {
        let mut s = format!("D,{x_name},S_half,status\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", r.drive_size, fmt_f64(r.x), fmt_f64(r.s_half), r.status));
        }
        fs::write(path, s)?;
        Ok(())
    }
}

fn status_of(e: &Error) -> String {
    match e {
        Error::CapSaturated { .. } => "cap_saturated".into(),
        Error::NotConverged(_) => "not_converged".into(),
        other => format!("error: {}", other.to_string().replace(',', ";")),
    }
}

/// Final `S_{L/2}(T)` against `ρ₀` for every configured drive size.
pub fn run_fig3a(cfg: &ExperimentConfig) -> Result<ScanReport> {
    cfg.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let points: Vec<(usize, f64)> = cfg
        .drive_sizes
        .iter()
        .flat_map(|&d| cfg.rho_grid.points().into_iter().map(move |r| (d, r)))
        .collect();
    let pool = cfg.pool()?;
    let rows: Vec<ScanRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(d, rho0)| {
                let run = || -> Result<f64> {
                    let spec = cfg.model(ChainKind::Heterojunction, d)?;
                    let init = ProductStateSpec::with_occupation(cfg.len, rho0)?;
                    let (series, _) = simulate(&spec, &init, cfg)?;
                    Ok(*series.half_chain_entropy().last().expect("nonempty series"))
                };
                match run() {
                    Ok(s) => ScanRow { drive_size: d, x: rho0, s_half: s, status: "ok".into() },
                    Err(e) => ScanRow { drive_size: d, x: rho0, s_half: f64::NAN, status: status_of(&e) },
                }
            })
            .collect()
    });
    let report = ScanReport { id: cfg.id, rows };
    report.write_csv(&cfg.out_dir.join("fig3a_scan.csv"), "rho0")?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct Fig3bReport {
    pub scan: ScanReport,
    /// `S_{L/2}(t)` per grid point (`None` for failed points).
    pub curves: Vec<(f64, Option<Vec<f64>>)>,
}

impl Fig3bReport {
    /// `μ` of the largest final entropy.
    pub fn peak(&self) -> Option<f64> {
        let (x, y) = self.scan.curve(self.scan.rows.first()?.drive_size);
        let k = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b]))?;
        Some(x[k])
    }

    /// `(max − min) / mean` of the final entropy over `μ < limit`.
    pub fn spread_below(&self, limit: f64) -> Option<f64> {
        let (x, y) = self.scan.curve(self.scan.rows.first()?.drive_size);
        let sel: Vec<f64> = x.iter().zip(&y).filter(|(m, _)| **m < limit).map(|(_, s)| *s).collect();
        if sel.is_empty() {
            return None;
        }
        let mean = sel.iter().sum::<f64>() / sel.len() as f64;
        let (lo, hi) = sel.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
        Some((hi - lo) / mean)
    }
}

/// Drive-region potential scan (`μ₁ = … = μ_{D−1} = μ` on the East side).
pub fn run_fig3b(cfg: &ExperimentConfig) -> Result<Fig3bReport> {
    cfg.validate()?;
    ensure_dir(&cfg.out_dir)?;
    let d = cfg.drive_size();
    let mus = cfg.mu_grid.points();
    let pool = cfg.pool()?;
    let results: Vec<(ScanRow, Option<Vec<f64>>)> = pool.install(|| {
        mus.par_iter()
            .map(|&mu| {
                let run = || -> Result<Vec<f64>> {
                    let base = cfg.model(ChainKind::Heterojunction, d)?;
                    let mut profile = base.profile().clone();
                    for site in 0..d.saturating_sub(1) {
                        profile.set(site, mu)?;
                    }
                    let spec = ModelSpec::new(ChainKind::Heterojunction, profile)?;
                    let init = ProductStateSpec::with_occupation(cfg.len, cfg.rho0)?;
                    let (series, report) = simulate(&spec, &init, cfg)?;
                    let meta = metadata(cfg, &spec, Some(&init), Some(&report))?;
                    write_series(&cfg.out_dir, &format!("fig3b_mu{}", fmt_f64(mu)), &series, &meta)?;
                    Ok(series.half_chain_entropy())
                };
                match run() {
                    Ok(s) => {
                        let last = *s.last().expect("nonempty");
                        (ScanRow { drive_size: d, x: mu, s_half: last, status: "ok".into() }, Some(s))
                    }
                    Err(e) => (ScanRow { drive_size: d, x: mu, s_half: f64::NAN, status: status_of(&e) }, None),
                }
            })
            .collect()
    });
    let (rows, curves): (Vec<ScanRow>, Vec<Option<Vec<f64>>>) = results.into_iter().unzip();
    let scan = ScanReport { id: cfg.id, rows };
    scan.write_csv(&cfg.out_dir.join("fig3b_scan.csv"), "mu")?;
    Ok(Fig3bReport { scan, curves: mus.into_iter().zip(curves).collect() })
}

#[derive(Clone, Debug)]
pub struct Fig4Report {
    pub bipolar: TimeSeries,
    pub east: TimeSeries,
    pub west: TimeSeries,
    pub residual: f64,
    pub threshold: f64,
}

impl Fig4Report {
    pub fn is_superposition(&self) -> bool {
        self.residual < self.threshold
    }
}

/// Bipolar state `|1…1 0…0 101⟩` and its East and West components.
pub fn fig4_states(len: usize, east_filled: usize, west_tail: &str) -> Result<[ProductStateSpec; 3]> {
    let tail = crate::lattice::parse_bits(west_tail)?;
    if east_filled + tail.len() > len {
        return Err(Error::InvalidState("components overlap".into()));
    }
    let mk = |east: bool, west: bool| {
        let p = (0..len)
            .map(|i| {
                let in_tail = i >= len - tail.len();
                (east && i < east_filled) || (west && in_tail && tail[i - (len - tail.len())])
            })
            .collect();
        ProductStateSpec::from_pattern(p)
    };
    Ok([mk(true, true)?, mk(true, false)?, mk(false, true)?])
}

pub fn run_fig4(cfg: &ExperimentConfig) -> Result<Fig4Report> {
    cfg.validate()?;
    let spec = cfg.model(ChainKind::Heterojunction, cfg.drive_size())?;
    let states = match &cfg.init {
        Some(s) => {
            let bi = ProductStateSpec::parse(s)?;
            let n = bi.len();
            let east = ProductStateSpec::from_pattern((0..n).map(|i| i < n / 2 && bi.pattern()[i]).collect())?;
            let west = ProductStateSpec::from_pattern((0..n).map(|i| i >= n / 2 && bi.pattern()[i]).collect())?;
            [bi, east, west]
        }
        None => fig4_states(cfg.len, 3, "101")?,
    };
    let pool = cfg.pool()?;
    let runs: Vec<Result<(TimeSeries, TruncationReport)>> =
        pool.install(|| states.par_iter().map(|s| simulate(&spec, s, cfg)).collect());
    let mut out = Vec::new();
    for ((run, name), init) in runs.into_iter().zip(["bipolar", "east", "west"]).zip(&states) {
        let (series, report) = run?;
        let meta = metadata(cfg, &spec, Some(init), Some(&report))?;
        write_series(&cfg.out_dir, &format!("fig4_{name}"), &series, &meta)?;
        out.push(series);
    }
    let west = out.pop().expect("three runs");
    let east = out.pop().expect("three runs");
    let bipolar = out.pop().expect("three runs");
    let residual =
        superposition_residual(&bipolar.half_chain_entropy(), &east.half_chain_entropy(), &west.half_chain_entropy());
    fs::write(
        cfg.out_dir.join("fig4_residual.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "residual": residual,
            "threshold": cfg.superposition_threshold,
        }))?,
    )?;
    Ok(Fig4Report { bipolar, east, west, residual, threshold: cfg.superposition_threshold })
}

const PLOT_HEADER: &str = "import csv\nimport sys\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n\ndef read(path):\n    with open(path) as f:\n        rows = list(csv.DictReader(f))\n    return rows\n\n\n";

fn plot_script(id: ExperimentId) -> String {
    let body = match id {
        ExperimentId::Fig1b | ExperimentId::Fig1c => format!(
            "import glob\nfor path in sorted(glob.glob(\"{id}_D*.csv\")):\n    rows = read(path)\n    plt.semilogy([int(r[\"site\"]) for r in rows], [max(float(r[\"mean_occupation\"]), 1e-16) for r in rows], \"o-\", label=path[len(\"{id}_\"):-4])\nplt.xlabel(\"site i\")\nplt.ylabel(\"<n_i>\")\nplt.legend()\nplt.savefig(\"{id}.png\", dpi=150)\n"
        ),
        ExperimentId::Fig2 => "rows = read(\"fig2.csv\")\nt = [float(r[\"t\"]) for r in rows]\nL = sum(1 for k in rows[0] if k.startswith(\"n_\"))\nfig, ax = plt.subplots(1, 2, figsize=(10, 4))\nn = [[float(r[f\"n_{i}\"]) for r in rows] for i in range(1, L + 1)]\ns = [[float(r[f\"S_{i}\"]) for r in rows] for i in range(1, L)]\nax[0].imshow(n, aspect=\"auto\", origin=\"lower\", extent=[t[0], t[-1], 0.5, L + 0.5])\nax[0].set_title(\"<n_i>(t)\")\nax[1].imshow(s, aspect=\"auto\", origin=\"lower\", extent=[t[0], t[-1], 0.5, L - 0.5])\nax[1].set_title(\"S_r(t)\")\nfig.savefig(\"fig2.png\", dpi=150)\n".to_string(),
        ExperimentId::Fig3a => "rows = [r for r in read(\"fig3a_scan.csv\") if r[\"status\"] == \"ok\"]\nfor d in sorted({r[\"D\"] for r in rows}, key=int):\n    sel = [r for r in rows if r[\"D\"] == d]\n    plt.plot([float(r[\"rho0\"]) for r in sel], [float(r[\"S_half\"]) for r in sel], \"o-\", label=f\"D={d}\")\nplt.xlabel(\"rho0\")\nplt.ylabel(\"S_L/2(T)\")\nplt.legend()\nplt.savefig(\"fig3a.png\", dpi=150)\n".to_string(),
        ExperimentId::Fig3b => "import glob\nfig, ax = plt.subplots(1, 2, figsize=(10, 4))\nfor path in sorted(glob.glob(\"fig3b_mu*.csv\")):\n    rows = read(path)\n    L = sum(1 for k in rows[0] if k.startswith(\"n_\"))\n    ax[0].plot([float(r[\"t\"]) for r in rows], [float(r[f\"S_{L // 2}\"]) for r in rows], label=path[len(\"fig3b_mu\"):-4])\nscan = [r for r in read(\"fig3b_scan.csv\") if r[\"status\"] == \"ok\"]\nax[1].plot([float(r[\"mu\"]) for r in scan], [float(r[\"S_half\"]) for r in scan], \"o-\")\nax[0].legend(fontsize=6)\nfig.savefig(\"fig3b.png\", dpi=150)\n".to_string(),
        ExperimentId::Fig4 => "for name in [\"bipolar\", \"east\", \"west\"]:\n    rows = read(f\"fig4_{name}.csv\")\n    L = sum(1 for k in rows[0] if k.startswith(\"n_\"))\n    plt.plot([float(r[\"t\"]) for r in rows], [float(r[f\"S_{L // 2}\"]) for r in rows], label=name)\nbi = read(\"fig4_bipolar.csv\")\ne = read(\"fig4_east.csv\")\nw = read(\"fig4_west.csv\")\nL = sum(1 for k in bi[0] if k.startswith(\"n_\"))\nkey = f\"S_{L // 2}\"\nplt.plot([float(r[\"t\"]) for r in bi], [float(a[key]) + float(b[key]) for a, b in zip(e, w)], \"--\", label=\"east + west\")\nplt.xlabel(\"t\")\nplt.ylabel(\"S_L/2\")\nplt.legend()\nplt.savefig(\"fig4.png\", dpi=150)\n".to_string(),
    };
    format!("{PLOT_HEADER}{body}")
}

/// Which CSV proves that an experiment has output in `dir`.
fn marker(id: ExperimentId) -> &'static str {
    match id {
        ExperimentId::Fig1b => "fig1b_summary.json",
        ExperimentId::Fig1c => "fig1c_summary.json",
        ExperimentId::Fig2 => "fig2.csv",
        ExperimentId::Fig3a => "fig3a_scan.csv",
        ExperimentId::Fig3b => "fig3b_scan.csv",
        ExperimentId::Fig4 => "fig4_bipolar.csv",
    }
}

/// Writes `plot_<id>.py` next to the outputs of every experiment found in
/// `dir` and returns the script paths. The scripts read only the CSVs in
/// their own directory.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let found: Vec<ExperimentId> = ExperimentId::ALL.into_iter().filter(|id| dir.join(marker(*id)).exists()).collect();
    if found.is_empty() {
        return Err(Error::InvalidParams(format!("no experiment outputs in {}", dir.display())));
    }
    let mut out = Vec::new();
    for id in found {
        let path = dir.join(format!("plot_{id}.py"));
        fs::write(&path, plot_script(id))?;
        out.push(path);
    }
    Ok(out)
}
