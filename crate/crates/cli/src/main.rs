use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use eastwest::dmrg::{self, DmrgParams};
use eastwest::ed;
use eastwest::experiments::{self, Backend, ExperimentConfig, ExperimentId, Grid, Preset};
use eastwest::tebd::{self, Checkpoint, TrotterOrder};
use eastwest::{ChainKind, Error, ModelSpec, Mps, Pin, ProductStateSpec, Result};

mod validate;

#[derive(Parser)]
#[command(name = "eastwest", version, about = "East/West heterojunction chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state by DMRG (or exact diagonalization).
    Ground(GroundArgs),
    /// Real-time evolution of a product state.
    Evolve(EvolveArgs),
    /// Final half-chain entropy over an initial-occupation or potential grid.
    Scan(ScanArgs),
    /// Regenerate the data of one standard experiment.
    Figure(FigureArgs),
    /// Cross-check DMRG and TEBD against exact diagonalization.
    Validate(ValidateArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    #[arg(long = "L")]
    len: Option<usize>,
    #[arg(long = "D")]
    drive: Option<usize>,
    #[arg(long)]
    mu_drive: Option<f64>,
    #[arg(long)]
    mu_spacer: Option<f64>,
    /// Drive potential of the West half, when different.
    #[arg(long)]
    west_mu_drive: Option<f64>,
    /// Occupation pattern, optionally with `@site:alpha` (1-based site).
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    /// Trotter order: 1, 2 or 4.
    #[arg(long)]
    order: Option<u8>,
    #[arg(long = "T")]
    total_time: Option<f64>,
    #[arg(long)]
    record_every: Option<f64>,
    #[arg(long)]
    chi_max: Option<usize>,
    #[arg(long)]
    cutoff: Option<f64>,
    /// Abort when a split needs more states than this.
    #[arg(long)]
    hard_cap: Option<usize>,
    /// mps or exact.
    #[arg(long)]
    backend: Option<Backend>,
    /// desk or paper.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// TOML file; its values override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn config(&self, id: ExperimentId) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::preset(id, self.preset.unwrap_or_default());
        if let Some(v) = self.len {
            c.len = v;
            c.rho_grid.stop = (v / 4) as f64;
        }
        if let Some(v) = self.drive {
            c.drive_sizes = vec![v];
        }
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field.clone() { c.$target = v; })*
            };
        }
        set!(mu_drive => mu_drive, mu_spacer => mu_spacer, dt => dt, total_time => total_time,
             record_every => record_every, chi_max => chi_max, cutoff => cutoff, backend => backend,
             out => out_dir, workers => workers);
        if self.west_mu_drive.is_some() {
            c.west_mu_drive = self.west_mu_drive;
        }
        if self.init.is_some() {
            c.init = self.init.clone();
        }
        if self.hard_cap.is_some() {
            c.hard_cap = self.hard_cap;
        }
        if let Some(o) = self.order {
            c.order = TrotterOrder::try_from(o)?;
        }
        if let Some(path) = &self.config {
            c = c.overlay_toml(&std::fs::read_to_string(path)?)?;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct GroundArgs {
    /// east, west or hetero.
    #[arg(long, default_value = "east")]
    kind: ChainKind,
    /// none, left, right or both; defaults to the chain's convention.
    #[arg(long)]
    pin: Option<Pin>,
    /// Write the ground state as an MPS snapshot.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvolveArgs {
    #[arg(long, default_value = "hetero")]
    kind: ChainKind,
    /// Write a checkpoint every this many wall-clock seconds.
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ScanArgs {
    /// rho0 (initial occupation) or mu (drive potential).
    #[arg(value_parser = ["rho0", "mu"])]
    what: String,
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    stop: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FigureArgs {
    id: ExperimentId,
    /// Also write plotting scripts next to the data.
    #[arg(long)]
    plots: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ValidateArgs {
    /// Largest chain length in the test matrix.
    #[arg(long, default_value_t = 10)]
    max_len: usize,
    #[arg(long, default_value_t = 50.0)]
    time: f64,
}

/// Success, or a run that finished but needs attention.
enum Outcome {
    Ok,
    NotConverged,
    Failed,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NotConverged(_) => 2,
        Error::CapSaturated { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors, which is taken by non-convergence
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ground(a) => ground(a),
        Command::Evolve(a) => evolve(a),
        Command::Scan(a) => scan(a),
        Command::Figure(a) => figure(a),
        Command::Validate(a) => validate::run(a.max_len, a.time),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn model_for(kind: ChainKind, cfg: &ExperimentConfig) -> Result<ModelSpec> {
    cfg.model(kind, cfg.drive_size())
}

fn ground(a: GroundArgs) -> Result<Outcome> {
    let mut cfg = a.common.config(ExperimentId::Fig1b)?;
    if a.common.out.is_none() {
        cfg.out_dir = PathBuf::from("results/ground");
    }
    if a.common.drive.is_none() {
        cfg.drive_sizes = vec![3];
    }
    let spec = model_for(a.kind, &cfg)?;
    let pin = a.pin.unwrap_or(Pin::default_for(a.kind));
    std::fs::create_dir_all(&cfg.out_dir)?;
    let (energy, occupations, converged) = match cfg.backend {
        Backend::Exact => {
            let (e, psi) = ed::ground_state_exact(&spec, pin)?;
            (e, psi.occupations(), true)
        }
        Backend::Mps => {
            let params = DmrgParams {
                pin,
                chi_schedule: cfg.dmrg_chi.iter().map(|&c| c.min(cfg.chi_max)).collect(),
                max_sweeps: cfg.dmrg_sweeps,
                ..DmrgParams::default()
            };
            let r = dmrg::dmrg_ground(&spec, &params)?;
            std::fs::write(cfg.out_dir.join("ground.sweeps.txt"), r.log_text())?;
            let mut state = r.state.clone();
            if let Some(p) = &a.snapshot {
                state.save(p)?;
            }
            (r.energy, state.measure(None).occupations, r.converged)
        }
    };
    experiments::write_ground_profile(&cfg.out_dir.join("ground.csv"), &occupations)?;
    let mut meta = eastwest::RunMetadata::new(
        &cfg.backend.to_string(),
        serde_json::to_value(&spec)?,
        serde_json::json!({ "pin": pin, "energy": energy, "converged": converged, "config": cfg }),
    );
    if !converged {
        meta.notes.push("DMRG did not converge".into());
    }
    meta.save(&cfg.out_dir.join("ground.json"))?;
    println!("energy {energy:.12} converged {converged}");
    Ok(if converged { Outcome::Ok } else { Outcome::NotConverged })
}

fn evolve(a: EvolveArgs) -> Result<Outcome> {
    let mut cfg = a.common.config(ExperimentId::Fig2)?;
    if a.common.out.is_none() {
        cfg.out_dir = PathBuf::from("results/evolve");
    }
    let spec = model_for(a.kind, &cfg)?;
    let init = match &cfg.init {
        Some(s) => ProductStateSpec::parse(s)?,
        None => ProductStateSpec::with_occupation(cfg.len, cfg.rho0)?,
    };
    if init.len() != spec.len() {
        return Err(Error::InvalidState(format!("initial state has {} sites, model {}", init.len(), spec.len())));
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let checkpoint = a.checkpoint_every.map(|s| Checkpoint {
        prefix: cfg.out_dir.join("checkpoint"),
        every: Duration::from_secs(s),
    });
    let (series, report) = if cfg.backend == Backend::Mps {
        let schedule = cfg.schedule();
        let out = if a.resume {
            let cp = checkpoint.clone().unwrap_or(Checkpoint { prefix: cfg.out_dir.join("checkpoint"), every: Duration::MAX });
            tebd::resume(&spec, &schedule, &cp)?
        } else {
            let runner = tebd::Tebd::new(&spec, schedule)?;
            let mut state = Mps::from_product(&init);
            let mut series = eastwest::TimeSeries::new(spec.len());
            let mut report = Default::default();
            runner.run(&mut state, 0.0, &mut series, &mut report, checkpoint.as_ref())?;
            tebd::TebdOutcome { series, state, report }
        };
        (out.series, out.report)
    } else {
        experiments::simulate(&spec, &init, &cfg)?
    };
    let mut meta = eastwest::RunMetadata::new(
        &cfg.backend.to_string(),
        serde_json::to_value(&spec)?,
        serde_json::json!({
            "config": cfg,
            "max_bond": report.max_bond,
            "total_discarded": report.total_discarded,
            "saturated_splits": report.saturated,
        }),
    );
    meta.initial_state = Some(init.to_string());
    experiments::write_series(&cfg.out_dir, "evolve", &series, &meta)?;
    let last = series.last().expect("at least the initial row");
    println!(
        "t {} S_half {:.10} max_bond {} discarded {:.3e}",
        last.time,
        last.entropies[spec.len() / 2 - 1],
        report.max_bond,
        report.total_discarded
    );
    Ok(Outcome::Ok)
}

fn scan(a: ScanArgs) -> Result<Outcome> {
    let id = if a.what == "rho0" { ExperimentId::Fig3a } else { ExperimentId::Fig3b };
    let mut cfg = a.common.config(id)?;
    let grid: &mut Grid = if id == ExperimentId::Fig3a { &mut cfg.rho_grid } else { &mut cfg.mu_grid };
    if let Some(v) = a.start {
        grid.start = v;
    }
    if let Some(v) = a.stop {
        grid.stop = v;
    }
    if let Some(v) = a.step {
        grid.step = v;
    }
    let report = if id == ExperimentId::Fig3a { experiments::run_fig3a(&cfg)? } else { experiments::run_fig3b(&cfg)?.scan };
    for r in &report.rows {
        println!("D={} {}={} S_half={} {}", r.drive_size, a.what, r.x, r.s_half, r.status);
    }
    Ok(scan_outcome(&report))
}

fn scan_outcome(report: &experiments::ScanReport) -> Outcome {
    if report.all_ok() {
        Outcome::Ok
    } else {
        Outcome::Failed
    }
}

fn figure(a: FigureArgs) -> Result<Outcome> {
    let cfg = a.common.config(a.id)?;
    let outcome = match a.id {
        ExperimentId::Fig1b | ExperimentId::Fig1c => {
            let r = experiments::run_fig1(&cfg)?;
            for p in &r.profiles {
                println!("D={} energy={:.12} converged={}", p.drive_size, p.energy, p.converged);
            }
            if let Some(s) = r.slope_spread {
                println!("slope spread {s:.4}");
            }
            if !r.mid_sums.is_empty() {
                println!("mid-chain sums {:?} increasing {}", r.mid_sums, r.mid_sums_increasing());
            }
            if r.all_converged {
                Outcome::Ok
            } else {
                Outcome::NotConverged
            }
        }
        ExperimentId::Fig2 => {
            let r = experiments::run_fig2(&cfg)?;
            println!("correlation {:.4} derivative maxima {}", r.correlation, r.derivative_maxima);
            Outcome::Ok
        }
        ExperimentId::Fig3a => {
            let r = experiments::run_fig3a(&cfg)?;
            for &d in &cfg.drive_sizes {
                println!("D={d} maxima {:?} minima {:?}", r.maxima(d), r.minima(d));
            }
            scan_outcome(&r)
        }
        ExperimentId::Fig3b => {
            let r = experiments::run_fig3b(&cfg)?;
            println!("peak mu {:?} spread below 1 {:?}", r.peak(), r.spread_below(1.0));
            scan_outcome(&r.scan)
        }
        ExperimentId::Fig4 => {
            let r = experiments::run_fig4(&cfg)?;
            println!("residual {:.4} (threshold {})", r.residual, r.threshold);
            Outcome::Ok
        }
    };
    if a.plots {
        for p in experiments::emit_plots(&cfg.out_dir)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(outcome)
}
