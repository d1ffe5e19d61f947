//! Real-time evolution by Trotterized bond gates.
//!
//! Bonds are split into two layers by parity (`A`: even bonds, `B`: odd
//! bonds); gates inside one layer act on disjoint site pairs. A step of the
//! second-order scheme is `A(τ/2) B(τ) A(τ/2)`. The fourth-order scheme is the
//! five-stage Suzuki composition of second-order steps. Consecutive stages on
//! the same layer are fused before any gate is built, so a record interval of
//! `n` second-order steps costs `2n + 1` layers.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::ed;
use crate::error::{Error, Result};
use crate::lattice::{compile_bond_terms, BondTerm, ModelSpec};
use crate::mps::{Direction, Mps, Truncation, TruncationReport};
use crate::series::{Observables, TimeSeries};
use crate::state::ProductStateSpec;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TrotterOrder {
    First,
    Second,
    Fourth,
}

impl TrotterOrder {
    pub fn as_u8(self) -> u8 {
        match self {
            Self::First => 1,
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }
}

impl TryFrom<u8> for TrotterOrder {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Self::First),
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            o => Err(Error::InvalidParams(format!("unsupported Trotter order {o}"))),
        }
    }
}

impl From<TrotterOrder> for u8 {
    fn from(o: TrotterOrder) -> u8 {
        o.as_u8()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterSchedule {
    pub dt: f64,
    pub order: TrotterOrder,
    pub total_time: f64,
    pub record_every: f64,
    pub truncation: Truncation,
    /// Abort when a split would need more than this many states.
    pub hard_cap: Option<usize>,
}

impl Default for TrotterSchedule {
    fn default() -> Self {
        Self {
            dt: 0.1,
            order: TrotterOrder::Fourth,
            total_time: 50.0,
            record_every: 1.0,
            truncation: Truncation::default(),
            hard_cap: None,
        }
    }
}

fn multiple_of(x: f64, unit: f64) -> Option<usize> {
    let n = (x / unit).round();
    ((n * unit - x).abs() <= 1e-9 * x.abs().max(unit)).then_some(n as usize)
}

impl TrotterSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.total_time >= 0.0 && self.total_time.is_finite()) {
            return Err(Error::InvalidParams(format!("bad total time {}", self.total_time)));
        }
        if !(self.record_every > 0.0) || multiple_of(self.record_every, self.dt).is_none_or(|n| n == 0) {
            return Err(Error::InvalidParams(format!(
                "record interval {} is not a positive multiple of dt {}",
                self.record_every, self.dt
            )));
        }
        if multiple_of(self.total_time, self.record_every).is_none() {
            return Err(Error::InvalidParams(format!(
                "total time {} is not a multiple of the record interval {}",
                self.total_time, self.record_every
            )));
        }
        if self.truncation.chi_max == 0 {
            return Err(Error::InvalidParams("chi_max must be >= 1".into()));
        }
        Ok(())
    }

    pub fn steps_per_record(&self) -> usize {
        multiple_of(self.record_every, self.dt).expect("validated schedule")
    }

    pub fn num_records(&self) -> usize {
        multiple_of(self.total_time, self.record_every).expect("validated schedule")
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn of(bond: usize) -> Self {
        if bond % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// One layer: `exp(−i h_r τ)` on every bond of one parity.
#[derive(Clone, Debug)]
pub struct GateLayer {
    pub parity: Parity,
    pub tau: f64,
    pub gates: Vec<(usize, Matrix4<C64>)>,
}

/// The layers of one Trotter step.
#[derive(Clone, Debug)]
pub struct BondGateSet {
    pub dt: f64,
    pub order: TrotterOrder,
    pub layers: Vec<GateLayer>,
}

/// `exp(−i h τ)` of a Hermitian 4×4 term.
pub fn bond_exponential(h: &Matrix4<C64>, tau: f64) -> Matrix4<C64> {
    let eig = h.symmetric_eigen();
    let u = eig.eigenvectors;
    let phases = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| C64::new(0.0, -e * tau).exp()));
    u * phases * u.adjoint()
}

/// `(parity, fraction of dt)` stages of one step, adjacent duplicates fused.
fn step_stages(order: TrotterOrder) -> Vec<(Parity, f64)> {
    use Parity::*;
    let s2 = |w: f64| vec![(Even, 0.5 * w), (Odd, w), (Even, 0.5 * w)];
    let raw = match order {
        TrotterOrder::First => vec![(Even, 1.0), (Odd, 1.0)],
        TrotterOrder::Second => s2(1.0),
        TrotterOrder::Fourth => {
            let p = 1.0 / (4.0 - 4f64.powf(1.0 / 3.0));
            [p, p, 1.0 - 4.0 * p, p, p].into_iter().flat_map(s2).collect()
        }
    };
    fuse(raw)
}

fn fuse(stages: Vec<(Parity, f64)>) -> Vec<(Parity, f64)> {
    let mut out: Vec<(Parity, f64)> = Vec::with_capacity(stages.len());
    for (p, w) in stages {
        match out.last_mut() {
            Some((lp, lw)) if *lp == p => *lw += w,
            _ => out.push((p, w)),
        }
    }
    out
}

fn build_layer(terms: &[BondTerm], parity: Parity, tau: f64) -> GateLayer {
    let gates = terms
        .iter()
        .filter(|t| Parity::of(t.bond) == parity)
        .map(|t| (t.bond, bond_exponential(&t.matrix, tau)))
        .collect();
    GateLayer { parity, tau, gates }
}

pub fn make_trotter_layers(spec: &ModelSpec, dt: f64, order: TrotterOrder) -> BondGateSet {
    let terms = compile_bond_terms(spec);
    let layers = step_stages(order)
        .into_iter()
        .map(|(p, w)| build_layer(&terms, p, w * dt))
        .collect();
    BondGateSet { dt, order, layers }
}

fn apply_layer(mps: &mut Mps, layer: &GateLayer, trunc: &Truncation, hard_cap: Option<usize>, report: &mut TruncationReport) -> Result<()> {
    if layer.gates.is_empty() {
        return Ok(());
    }
    let first = layer.gates[0].0;
    let rightward = mps.center() <= first + 1;
    let mut apply = |mps: &mut Mps, bond: usize, gate: &Matrix4<C64>, dir: Direction| -> Result<()> {
        let info = mps.apply_two_site_gate(bond, gate, trunc, dir, false)?;
        if let Some(cap) = hard_cap {
            if info.wanted > cap {
                return Err(Error::CapSaturated { bond, needed: info.wanted, cap });
            }
        }
        if info.saturated && report.saturated == 0 {
            log::warn!(
                "bond dimension saturated at bond {bond}: wanted {}, kept {}",
                info.wanted,
                info.kept
            );
        }
        report.record(&info);
        Ok(())
    };
    if rightward {
        for (bond, g) in &layer.gates {
            apply(mps, *bond, g, Direction::Right)?;
        }
    } else {
        for (bond, g) in layer.gates.iter().rev() {
            apply(mps, *bond, g, Direction::Left)?;
        }
    }
    Ok(())
}

/// Periodic snapshot of a long run.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    /// Files are written as `<prefix>.mps`, `<prefix>.csv`, `<prefix>.json`.
    pub prefix: PathBuf,
    pub every: Duration,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckpointInfo {
    pub time: f64,
    pub discarded: f64,
    pub max_bond: usize,
}

impl Checkpoint {
    fn paths(prefix: &Path) -> (PathBuf, PathBuf, PathBuf) {
        let with = |ext: &str| {
            let mut p = prefix.as_os_str().to_owned();
            p.push(ext);
            PathBuf::from(p)
        };
        (with(".mps"), with(".csv"), with(".json"))
    }

    pub fn write(prefix: &Path, mps: &Mps, series: &TimeSeries, info: &CheckpointInfo) -> Result<()> {
        let (m, c, j) = Self::paths(prefix);
        mps.save(&m)?;
        series.save_csv(&c)?;
        std::fs::write(j, serde_json::to_string_pretty(info)?)?;
        Ok(())
    }

    /// Loads the state, the series recorded so far and the checkpoint time.
    pub fn read(prefix: &Path) -> Result<(Mps, TimeSeries, CheckpointInfo)> {
        let (m, c, j) = Self::paths(prefix);
        let info: CheckpointInfo = serde_json::from_str(&std::fs::read_to_string(j)?)?;
        let mut series = TimeSeries::load_csv(&c)?;
        series.truncate_after(info.time);
        Ok((Mps::load(&m)?, series, info))
    }
}

/// Evolution of one model under one schedule.
pub struct Tebd {
    terms: Vec<BondTerm>,
    schedule: TrotterSchedule,
    block: Vec<GateLayer>,
}

#[derive(Clone, Debug)]
pub struct TebdOutcome {
    pub series: TimeSeries,
    pub state: Mps,
    pub report: TruncationReport,
}

impl Tebd {
    pub fn new(spec: &ModelSpec, schedule: TrotterSchedule) -> Result<Self> {
        schedule.validate()?;
        let terms = compile_bond_terms(spec);
        let n = schedule.steps_per_record();
        let stages = fuse(
            std::iter::repeat_n(step_stages(schedule.order), n)
                .flatten()
                .collect(),
        );
        let mut cache: HashMap<(Parity, u64), GateLayer> = HashMap::new();
        let block = stages
            .into_iter()
            .map(|(p, w)| {
                let tau = w * schedule.dt;
                cache
                    .entry((p, tau.to_bits()))
                    .or_insert_with(|| build_layer(&terms, p, tau))
                    .clone()
            })
            .collect();
        Ok(Self { terms, schedule, block })
    }

    pub fn schedule(&self) -> &TrotterSchedule {
        &self.schedule
    }

    pub fn terms(&self) -> &[BondTerm] {
        &self.terms
    }

    fn record(&self, mps: &mut Mps, time: f64, report: &TruncationReport) -> Observables {
        let m = mps.measure(Some(&self.terms));
        Observables {
            time,
            occupations: m.occupations,
            entropies: m.entropies,
            energy: m.energy,
            norm: m.norm,
            discarded: report.total_discarded,
        }
    }

    /// Applies the gates of one record interval.
    pub fn advance(&self, mps: &mut Mps, report: &mut TruncationReport) -> Result<()> {
        for layer in &self.block {
            apply_layer(mps, layer, &self.schedule.truncation, self.schedule.hard_cap, report)?;
        }
        Ok(())
    }

    /// Advances `mps` from `start_time` to the schedule's total time,
    /// appending a row every record interval (and a row at `start_time` when
    /// `series` is empty).
    pub fn run(
        &self,
        mps: &mut Mps,
        start_time: f64,
        series: &mut TimeSeries,
        report: &mut TruncationReport,
        checkpoint: Option<&Checkpoint>,
    ) -> Result<()> {
        let dt_rec = self.schedule.record_every;
        if series.is_empty() {
            let row = self.record(mps, start_time, report);
            series.push(row);
        }
        let first = multiple_of(start_time, dt_rec).ok_or_else(|| {
            Error::InvalidParams(format!("start time {start_time} is not on the record grid"))
        })?;
        let mut last_checkpoint = Instant::now();
        for k in first + 1..=self.schedule.num_records() {
            self.advance(mps, report)?;
            let t = k as f64 * dt_rec;
            let row = self.record(mps, t, report);
            series.push(row);
            if let Some(cp) = checkpoint {
                if last_checkpoint.elapsed() >= cp.every {
                    let info = CheckpointInfo { time: t, discarded: report.total_discarded, max_bond: report.max_bond };
                    Checkpoint::write(&cp.prefix, mps, series, &info)?;
                    last_checkpoint = Instant::now();
                }
            }
        }
        Ok(())
    }
}

/// Evolves `init` under `spec` for the whole schedule.
pub fn evolve(spec: &ModelSpec, init: Mps, schedule: &TrotterSchedule) -> Result<TebdOutcome> {
    let tebd = Tebd::new(spec, schedule.clone())?;
    let mut state = init;
    let mut series = TimeSeries::new(spec.len());
    let mut report = TruncationReport::default();
    tebd.run(&mut state, 0.0, &mut series, &mut report, None)?;
    Ok(TebdOutcome { series, state, report })
}

/// Resumes a checkpointed run and finishes it.
pub fn resume(spec: &ModelSpec, schedule: &TrotterSchedule, checkpoint: &Checkpoint) -> Result<TebdOutcome> {
    let (mut state, mut series, info) = Checkpoint::read(&checkpoint.prefix)?;
    if state.len() != spec.len() {
        return Err(Error::InvalidState("checkpoint length does not match the model".into()));
    }
    let tebd = Tebd::new(spec, schedule.clone())?;
    let mut report = TruncationReport { total_discarded: info.discarded, max_bond: info.max_bond, ..Default::default() };
    tebd.run(&mut state, info.time, &mut series, &mut report, Some(checkpoint))?;
    Ok(TebdOutcome { series, state, report })
}

/// Error of one step size against the reference trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// Largest deviation of any `⟨n_i⟩` or `S_r` over the record grid.
    pub max_error: f64,
    /// `S_{L/2}(T)` for this step size.
    pub final_half_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub order: u8,
    pub reference: String,
    pub rows: Vec<ConvergenceRow>,
    /// Largest observable difference between consecutive step sizes.
    pub pairwise: Vec<f64>,
    /// `error(dt_k) / error(dt_{k+1})` next to the ideal `(dt_k/dt_{k+1})^order`.
    pub ratios: Vec<(f64, f64)>,
}

impl ConvergenceTable {
    /// Every observed ratio within a factor 2 of the ideal one.
    pub fn scaling_ok(&self) -> bool {
        self.ratios.iter().all(|&(obs, ideal)| obs >= ideal / 2.0 && obs <= ideal * 2.0)
    }
}

fn max_series_diff(a: &TimeSeries, b: &TimeSeries) -> f64 {
    let mut err: f64 = 0.0;
    for (x, y) in a.rows().iter().zip(b.rows()) {
        debug_assert!((x.time - y.time).abs() < 1e-9);
        for (p, q) in x.occupations.iter().zip(&y.occupations) {
            err = err.max((p - q).abs());
        }
        for (p, q) in x.entropies.iter().zip(&y.entropies) {
            err = err.max((p - q).abs());
        }
    }
    err
}

/// Runs `init` with every step size in `dts` at the given order and compares
/// against exact evolution (L ≤ 14) or a fourth-order run at a quarter of the
/// smallest step.
pub fn trotter_convergence_check(
    spec: &ModelSpec,
    init: &ProductStateSpec,
    total_time: f64,
    dts: &[f64],
    order: TrotterOrder,
    truncation: Truncation,
) -> Result<ConvergenceTable> {
    if dts.len() < 2 {
        return Err(Error::InvalidParams("need at least two step sizes".into()));
    }
    let record_every = total_time.min(1.0).max(dts.iter().cloned().fold(0.0, f64::max));
    let schedule_for = |dt: f64, order| TrotterSchedule {
        dt,
        order,
        total_time,
        record_every,
        truncation,
        hard_cap: None,
    };
    let runs: Vec<TimeSeries> = dts
        .iter()
        .map(|&dt| evolve(spec, Mps::from_product(init), &schedule_for(dt, order)).map(|o| o.series))
        .collect::<Result<_>>()?;
    let times = runs[0].times();
    let (reference, label) = if spec.len() <= ed::MAX_SITES {
        (ed::exact_time_series(spec, init, &times)?, "exact".to_string())
    } else {
        let fine = dts.iter().cloned().fold(f64::INFINITY, f64::min) / 4.0;
        let s = evolve(spec, Mps::from_product(init), &schedule_for(fine, TrotterOrder::Fourth))?.series;
        (s, format!("tebd order 4, dt = {fine}"))
    };
    let rows: Vec<ConvergenceRow> = dts
        .iter()
        .zip(&runs)
        .map(|(&dt, s)| ConvergenceRow {
            dt,
            max_error: max_series_diff(s, &reference),
            final_half_entropy: *s.half_chain_entropy().last().expect("nonempty"),
        })
        .collect();
    let pairwise = runs.windows(2).map(|w| max_series_diff(&w[0], &w[1])).collect();
    let p = order.as_u8() as i32;
    let ratios = rows
        .windows(2)
        .map(|w| (w[0].max_error / w[1].max_error, (w[0].dt / w[1].dt).powi(p)))
        .collect();
    Ok(ConvergenceTable { order: order.as_u8(), reference: label, rows, pairwise, ratios })
}

/// Deviation of a TEBD trajectory from exact evolution on the record grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    /// `min_t |⟨ψ_tebd(t)|ψ_exact(t)⟩|`.
    pub min_fidelity: f64,
    /// Largest deviation of any `⟨n_i⟩` or `S_r`.
    pub max_observable_error: f64,
    /// `max_t |⟨H⟩(t) − ⟨H⟩(0)|` of the TEBD run.
    pub max_energy_drift: f64,
}

pub fn compare_with_exact(spec: &ModelSpec, init: &ProductStateSpec, schedule: &TrotterSchedule) -> Result<OracleComparison> {
    let tebd = Tebd::new(spec, schedule.clone())?;
    let prop = ed::ExactPropagator::new(spec, ed::ExactMethod::Auto)?;
    let mut exact = ed::DenseState::from_product(init)?;
    let mut mps = Mps::from_product(init);
    let mut report = TruncationReport::default();
    let e0 = mps.measure(Some(tebd.terms())).energy;
    let mut out = OracleComparison { min_fidelity: 1.0, max_observable_error: 0.0, max_energy_drift: 0.0 };
    for _ in 0..schedule.num_records() {
        tebd.advance(&mut mps, &mut report)?;
        exact = prop.step(&exact, schedule.record_every)?;
        let m = mps.measure(Some(tebd.terms()));
        let psi = ed::DenseState::new(mps.to_dense(), spec.len())?;
        out.min_fidelity = out.min_fidelity.min(psi.overlap(&exact).norm());
        let (occ, ent) = ed::exact_observables(&exact);
        for (a, b) in m.occupations.iter().zip(&occ).chain(m.entropies.iter().zip(&ent)) {
            out.max_observable_error = out.max_observable_error.max((a - b).abs());
        }
        out.max_energy_drift = out.max_energy_drift.max((m.energy - e0).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{ChainKind, ops};

    fn max_abs(m: &Matrix4<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn stage_weights_sum_to_one_per_layer() {
        for order in [TrotterOrder::First, TrotterOrder::Second, TrotterOrder::Fourth] {
            let st = step_stages(order);
            for p in [Parity::Even, Parity::Odd] {
                let w: f64 = st.iter().filter(|s| s.0 == p).map(|s| s.1).sum();
                assert!((w - 1.0).abs() < 1e-14, "{order:?}");
            }
            assert!(st.windows(2).all(|w| w[0].0 != w[1].0));
        }
        assert_eq!(step_stages(TrotterOrder::Second).len(), 3);
        assert_eq!(step_stages(TrotterOrder::Fourth).len(), 11);
    }

    #[test]
    fn gates_approach_identity() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 8, 3, 0.99, 2.0).unwrap();
        for t in spec.compile() {
            for dt in [1e-3, 1e-4] {
                let g = bond_exponential(&t.matrix, dt);
                let hn = max_abs(&t.matrix) * 4.0;
                assert!(max_abs(&(g - Matrix4::identity())) <= hn * dt + 10.0 * dt * dt);
            }
        }
    }

    #[test]
    fn east_gate_is_controlled_rotation() {
        let spec = ModelSpec::standard(ChainKind::East, 2, 1, 0.0, 0.0).unwrap();
        let dt = 0.37;
        let g = bond_exponential(&spec.compile()[0].matrix, dt);
        // exp(i dt/2 n⊗σx) = |0⟩⟨0|⊗1 + |1⟩⟨1|⊗(cos(dt/2) + i sin(dt/2) σx)
        let c = C64::from((dt / 2.0).cos());
        let s = C64::new(0.0, (dt / 2.0).sin());
        let p0 = ops::identity() - ops::number();
        let rot = ops::identity() * c + ops::sigma_x() * s;
        let expect = ops::kron(&p0, &ops::identity()) + ops::kron(&ops::number(), &rot);
        assert!(max_abs(&(g - expect)) < 1e-14);
    }

    #[test]
    fn all_gates_unitary_l24() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 24, 3, 0.99, 2.0).unwrap();
        for order in [TrotterOrder::Second, TrotterOrder::Fourth] {
            let set = make_trotter_layers(&spec, 0.05, order);
            for layer in &set.layers {
                for (_, g) in &layer.gates {
                    assert!(crate::mps::unitarity_error(g) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn schedule_validation() {
        let ok = TrotterSchedule { dt: 0.05, order: TrotterOrder::Second, total_time: 10.0, record_every: 1.0, ..Default::default() };
        ok.validate().unwrap();
        assert_eq!(ok.steps_per_record(), 20);
        assert_eq!(ok.num_records(), 10);
        let bad = TrotterSchedule { record_every: 0.33, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = TrotterSchedule { total_time: 10.5, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = TrotterSchedule { dt: -0.1, ..ok.clone() };
        assert!(bad.validate().is_err());
        assert!(TrotterOrder::try_from(3).is_err());
    }

    #[test]
    fn zero_time_single_row() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 8, 3, 0.99, 2.0).unwrap();
        let init = ProductStateSpec::parse("11100000").unwrap();
        let sched = TrotterSchedule { total_time: 0.0, ..Default::default() };
        let out = evolve(&spec, Mps::from_product(&init), &sched).unwrap();
        assert_eq!(out.series.len(), 1);
        let r = &out.series.rows()[0];
        assert_eq!(r.time, 0.0);
        assert_eq!(r.occupations, init.occupations());
        assert!(r.entropies.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn vacuum_is_stationary() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 8, 3, 0.99, 2.0).unwrap();
        let init = ProductStateSpec::parse("00000000").unwrap();
        let sched = TrotterSchedule { total_time: 5.0, ..Default::default() };
        let out = evolve(&spec, Mps::from_product(&init), &sched).unwrap();
        for r in out.series.rows() {
            assert!(r.occupations.iter().all(|&n| n == 0.0));
            assert!(r.entropies.iter().all(|&s| s == 0.0));
            assert_eq!(r.energy, 0.0);
        }
    }

    #[test]
    fn hard_cap_aborts() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 10, 3, 0.99, 2.0).unwrap();
        let init = ProductStateSpec::parse("1110000111").unwrap();
        let sched = TrotterSchedule { total_time: 10.0, hard_cap: Some(1), ..Default::default() };
        assert!(matches!(
            evolve(&spec, Mps::from_product(&init), &sched),
            Err(Error::CapSaturated { .. })
        ));
    }

    #[test]
    fn matches_exact_evolution_l8() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 8, 3, 0.99, 2.0).unwrap();
        let init = ProductStateSpec::parse("11100101").unwrap();
        let sched = TrotterSchedule { total_time: 10.0, ..Default::default() };
        let c = compare_with_exact(&spec, &init, &sched).unwrap();
        assert!(c.min_fidelity > 1.0 - 1e-8, "{c:?}");
        assert!(c.max_observable_error < 1e-6, "{c:?}");
    }

    #[test]
    fn identical_step_sizes_agree_exactly() {
        let spec = ModelSpec::standard(ChainKind::Heterojunction, 6, 2, 0.99, 2.0).unwrap();
        let init = ProductStateSpec::parse("110000").unwrap();
        let table =
            trotter_convergence_check(&spec, &init, 2.0, &[0.1, 0.1], TrotterOrder::Second, Truncation::default())
                .unwrap();
        assert_eq!(table.pairwise, vec![0.0]);
        assert!(trotter_convergence_check(&spec, &init, 2.0, &[0.1], TrotterOrder::Second, Truncation::default()).is_err());
    }
}
