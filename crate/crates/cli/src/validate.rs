//! `eastwest validate`: DMRG and TEBD against exact diagonalization on a
//! matrix of small chains.

use eastwest::dmrg::{dmrg_ground, DmrgParams};
use eastwest::ed;
use eastwest::tebd::{compare_with_exact, TrotterSchedule};
use eastwest::{ChainKind, ModelSpec, Pin, ProductStateSpec, Result};

use crate::Outcome;

const ENERGY_TOL: f64 = 1e-8;
const FIDELITY_TOL: f64 = 1e-6;
const OBSERVABLE_TOL: f64 = 1e-6;

fn initial_state(kind: ChainKind, len: usize, d: usize) -> Result<ProductStateSpec> {
    let east = ProductStateSpec::fractional(len, d, 0.0)?;
    Ok(match kind {
        ChainKind::West => east.mirror(),
        _ => east,
    })
}

pub(crate) fn run(max_len: usize, time: f64) -> Result<Outcome> {
    let mut failures = 0;
    let lens: Vec<usize> = [6, 8, 10, 12].into_iter().filter(|&l| l <= max_len.min(ed::MAX_SITES)).collect();
    let schedule = TrotterSchedule { total_time: time, ..Default::default() };
    for kind in [ChainKind::East, ChainKind::West, ChainKind::Heterojunction] {
        for &len in &lens {
            for (d, mu) in [(1, 0.99), (2, 0.5), (3, 0.99)] {
                let spec = ModelSpec::standard(kind, len, d, mu, 2.0)?;
                let pin = Pin::default_for(kind);
                let (e0, _) = ed::ground_state_exact(&spec, pin)?;
                let r = dmrg_ground(&spec, &DmrgParams { pin, ..DmrgParams::default() })?;
                let de = r.energy - e0;
                let init = initial_state(kind, len, d.max(2))?;
                let c = compare_with_exact(&spec, &init, &schedule)?;
                let ok = de.abs() < ENERGY_TOL
                    && r.converged
                    && c.min_fidelity >= 1.0 - FIDELITY_TOL
                    && c.max_observable_error < OBSERVABLE_TOL;
                if !ok {
                    failures += 1;
                }
                println!(
                    "{} {kind} L={len} D={d} mu={mu}: dE={de:.2e} fidelity={:.10} obs_err={:.2e} drift={:.2e}",
                    if ok { "PASS" } else { "FAIL" },
                    c.min_fidelity,
                    c.max_observable_error,
                    c.max_energy_drift
                );
            }
        }
    }
    println!("{failures} failure(s)");
    Ok(if failures == 0 { Outcome::Ok } else { Outcome::Failed })
}
