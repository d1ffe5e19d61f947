// Acceptance suite. Every test prints one PASS/FAIL line on stderr
// (uncaptured) before asserting, so `cargo test --test acceptance` shows the
// full table even when everything passes.

use std::io::Write;
use std::time::Instant;

use eastwest::dmrg::{dmrg_ground, DmrgParams};
use eastwest::ed;
use eastwest::experiments::*;
use eastwest::lattice::{apply_bond_term, parse_bits};
use eastwest::tebd::{compare_with_exact, evolve, trotter_convergence_check};
use eastwest::*;
use rand::SeedableRng;

fn report(n: u32, name: &str, pass: bool, detail: &str, t0: Instant) {
    let line = format!(
        "criterion {n} {name}: {} ({detail}; {:.1}s)\n",
        if pass { "PASS" } else { "FAIL" },
        t0.elapsed().as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn desk(id: ExperimentId) -> (ExperimentConfig, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::preset(id, Preset::Desk);
    cfg.out_dir = dir.path().to_path_buf();
    (cfg, dir)
}

fn bits(s: &str) -> Vec<bool> {
    parse_bits(s).unwrap()
}

fn init_for(kind: ChainKind, len: usize, d: usize) -> ProductStateSpec {
    let filled = d.max(2);
    let east = ProductStateSpec::from_pattern((0..len).map(|i| i < filled).collect()).unwrap();
    match kind {
        ChainKind::West => east.mirror(),
        _ => east,
    }
}

/// East, West and heterojunction at every length, cycling through `(D, μ)`.
fn oracle_matrix() -> Vec<ModelSpec> {
    let dm = [(1, 0.99), (2, 0.5), (3, 0.99), (3, 0.5)];
    let mut out = Vec::new();
    for (k, kind) in [ChainKind::East, ChainKind::West, ChainKind::Heterojunction].into_iter().enumerate() {
        for (j, len) in [6, 8, 10, 12].into_iter().enumerate() {
            let (d, mu) = dm[(j + k) % dm.len()];
            out.push(ModelSpec::standard(kind, len, d, mu, 2.0).unwrap());
        }
    }
    out
}

#[test]
fn criterion_1_oracle_equivalence() {
    let t0 = Instant::now();
    let specs = oracle_matrix();
    let mut worst_energy: f64 = 0.0;
    let mut worst_fid: f64 = 1.0;
    let mut worst_obs: f64 = 0.0;
    for spec in &specs {
        let pin = Pin::default_for(spec.kind());
        let (e_exact, _) = ed::ground_state_exact(spec, pin).unwrap();
        let r = dmrg_ground(spec, &DmrgParams::for_model(spec)).unwrap();
        worst_energy = worst_energy.max((r.energy - e_exact).abs());

        let d = spec.profile().drive_size();
        let schedule = TrotterSchedule { total_time: 50.0, ..TrotterSchedule::default() };
        let c = compare_with_exact(spec, &init_for(spec.kind(), spec.len(), d), &schedule).unwrap();
        worst_fid = worst_fid.min(c.min_fidelity);
        worst_obs = worst_obs.max(c.max_observable_error);
    }
    let pass = specs.len() >= 12 && worst_energy < 1e-8 && worst_fid >= 1.0 - 1e-6 && worst_obs < 1e-6;
    let detail = format!(
        "{} specs, max |E_dmrg - E_ed| {worst_energy:.2e}, min fidelity 1-{:.2e}, max observable error {worst_obs:.2e}",
        specs.len(),
        1.0 - worst_fid
    );
    report(1, "oracle equivalence", pass, &detail, t0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_2_branch_images() {
    let t0 = Instant::now();
    let half = C64::from(0.5);
    let mut pass = true;
    for mu in [0.5, 0.99, 2.0] {
        // |110⟩ → ½(μ|110⟩ − |100⟩)
        let spec = ModelSpec::standard(ChainKind::East, 3, 1, mu, mu).unwrap();
        let got = apply_bond_term(&spec.compile()[0], &bits("110")).unwrap();
        pass &= got == vec![(bits("100"), -half), (bits("110"), half * mu)];

        // |010⟩ → ½(μ|010⟩ − |011⟩)
        let mut p = PotentialProfile::build(ChainKind::East, 3, 1, 2.0, 2.0).unwrap();
        p.set(1, mu).unwrap();
        let spec = ModelSpec::new(ChainKind::East, p).unwrap();
        let got = apply_bond_term(&spec.compile()[1], &bits("010")).unwrap();
        pass &= got == vec![(bits("010"), half * mu), (bits("011"), -half)];

        // inhibited branch: empty control site
        for t in spec.compile() {
            pass &= apply_bond_term(&t, &bits("000")).unwrap().is_empty();
        }
        pass &= apply_bond_term(&spec.compile()[0], &bits("001")).unwrap().is_empty();
    }
    report(2, "bond-term branch images", pass, "East 110 and 010 images for mu in {0.5, 0.99, 2}", t0);
    assert!(pass);
}

#[test]
fn criterion_3_fig1b_equal_slopes() {
    let t0 = Instant::now();
    let (cfg, _dir) = desk(ExperimentId::Fig1b);
    let r = run_fig1(&cfg).unwrap();
    let slopes: Vec<String> = r.fits.iter().map(|f| f.as_ref().map_or("-".into(), |f| format!("{:.3}", f.slope))).collect();
    let spread = r.slope_spread.unwrap_or(f64::INFINITY);
    let pass = r.all_converged && spread < 0.05;
    let detail = format!("slopes [{}], relative spread {:.2}% (limit 5%)", slopes.join(", "), spread * 100.0);
    report(3, "fig1b equal localization slopes", pass, &detail, t0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_4_fig1c_mid_chain_accumulation() {
    let t0 = Instant::now();
    let (cfg, _dir) = desk(ExperimentId::Fig1c);
    let r = run_fig1(&cfg).unwrap();
    let pass = r.all_converged && r.mid_sums_increasing();
    let detail = format!("L={}, D {:?}, mid-chain sums {:?}", cfg.len, cfg.drive_sizes, r.mid_sums);
    report(4, "fig1c mid-chain accumulation", pass, &detail, t0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_5_fig2_entropy_follows_occupation() {
    let t0 = Instant::now();
    let (cfg, _dir) = desk(ExperimentId::Fig2);
    let r = run_fig2(&cfg).unwrap();
    let pass = r.correlation > 0.9 && r.derivative_maxima >= 3;
    let detail = format!(
        "L={}, T={}, correlation {:.4}, dS/dt maxima {}",
        cfg.len, cfg.total_time, r.correlation, r.derivative_maxima
    );
    report(5, "fig2 entropy/occupation correlation", pass, &detail, t0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6_fig3a_integer_maxima() {
    let t0 = Instant::now();
    let (cfg, _dir) = desk(ExperimentId::Fig3a);
    let r = run_fig3a(&cfg).unwrap();
    let mut pass = r.all_ok();
    let mut parts = Vec::new();
    for &d in &cfg.drive_sizes {
        let m = r.maxima(d);
        pass &= !m.is_empty() && m.iter().all(|x| (x - x.round()).abs() < 1e-9);
        parts.push(format!("D={d} maxima {m:?}"));
    }
    let detail = format!("L={}, T={}, {}", cfg.len, cfg.total_time, parts.join(", "));
    report(6, "fig3a integer maxima", pass, &detail, t0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_7_fig3b_turning_point() {
    let t0 = Instant::now();
    let (cfg, _dir) = desk(ExperimentId::Fig3b);
    let r = run_fig3b(&cfg).unwrap();
    let peak = r.peak().unwrap_or(f64::NAN);
    let spread = r.spread_below(1.0).unwrap_or(f64::INFINITY);
    let pass = r.scan.all_ok() && spread < 0.10 && (1.2 - 1e-9..=1.6 + 1e-9).contains(&peak);
    let detail = format!("peak at mu={peak:.2} (want 1.2..1.6), spread for mu<1 {:.1}% (limit 10%)", spread * 100.0);
    report(7, "fig3b turning point", pass, &detail, t0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_8_fig4_superposition() {
    let t0 = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for west in [None, Some(0.5)] {
        let (mut cfg, _dir) = desk(ExperimentId::Fig4);
        cfg.west_mu_drive = west;
        let r = run_fig4(&cfg).unwrap();
        pass &= r.is_superposition();
        parts.push(format!("west mu {}: residual {:.4}", west.unwrap_or(cfg.mu_drive), r.residual));
    }
    let detail = format!("{} (limit 0.15)", parts.join(", "));
    report(8, "fig4 superposition", pass, &detail, t0);
    assert!(pass, "{detail}");
}

fn reverse_bits(i: usize, len: usize) -> usize {
    (0..len).fold(0, |acc, b| acc | (((i >> b) & 1) << (len - 1 - b)))
}

#[test]
fn criterion_9_numerical_hygiene() {
    let t0 = Instant::now();
    let mut checks: Vec<(String, bool)> = Vec::new();

    // Hermiticity and vacuum
    let mut herm: f64 = 0.0;
    let mut vac: f64 = 0.0;
    for kind in [ChainKind::East, ChainKind::West, ChainKind::Heterojunction] {
        for len in [6, 8, 10, 12] {
            let spec = ModelSpec::standard(kind, len, 3, 0.99, 2.0).unwrap();
            let h = ed::assemble_dense(&spec).unwrap();
            let dim = h.nrows();
            for i in 0..dim {
                for j in i..dim {
                    herm = herm.max((h[(i, j)] - h[(j, i)].conj()).norm());
                }
            }
            vac = vac.max(h.column(0).iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    checks.push((format!("hermiticity {herm:.1e}"), herm < 1e-13));
    checks.push((format!("H|0> {vac:.1e}"), vac == 0.0));

    let spec = ModelSpec::standard(ChainKind::Heterojunction, 12, 3, 0.99, 2.0).unwrap();
    let vacuum = ProductStateSpec::from_pattern(vec![false; 12]).unwrap();
    let schedule = TrotterSchedule { total_time: 20.0, ..TrotterSchedule::default() };
    let out = evolve(&spec, Mps::from_product(&vacuum), &schedule).unwrap();
    let drift = out
        .series
        .rows()
        .iter()
        .flat_map(|r| r.occupations.iter().chain(&r.entropies))
        .fold(0.0f64, |a, x| a.max(x.abs()));
    checks.push((format!("vacuum drift {drift:.1e}"), drift < 1e-14));

    // entropy bounds along a trajectory
    let spec = ModelSpec::standard(ChainKind::Heterojunction, 16, 3, 0.99, 2.0).unwrap();
    let init = ProductStateSpec::parse("1110000000000101").unwrap();
    let schedule = TrotterSchedule { total_time: 30.0, ..TrotterSchedule::default() };
    let out = evolve(&spec, Mps::from_product(&init), &schedule).unwrap();
    let mut bounds_ok = true;
    for row in out.series.rows() {
        for (i, &s) in row.entropies.iter().enumerate() {
            let r = i + 1;
            bounds_ok &= s >= -1e-12 && s <= r.min(16 - r) as f64 * std::f64::consts::LN_2 + 1e-12;
        }
    }
    checks.push(("entropy bounds".into(), bounds_ok));

    // gauge invariance: moving the center does not change observables
    let mut state = out.state.clone();
    let reference = state.measure(Some(&spec.compile()));
    let mut gauge: f64 = 0.0;
    for c in [0, 5, 11, 15] {
        let mut s = out.state.clone();
        s.canonicalize(c);
        let m = s.measure(Some(&spec.compile()));
        for (a, b) in m.occupations.iter().zip(&reference.occupations).chain(m.entropies.iter().zip(&reference.entropies)) {
            gauge = gauge.max((a - b).abs());
        }
        gauge = gauge.max((m.energy - reference.energy).abs());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let mut random = Mps::random(10, 8, &mut rng);
    let dense = random.to_dense();
    random.canonicalize(7);
    let moved = random.to_dense();
    let phase = moved.iter().zip(&dense).map(|(a, b)| a * b.conj()).sum::<C64>();
    let norm2: f64 = dense.iter().map(|z| z.norm_sqr()).sum();
    gauge = gauge.max((phase.norm() / norm2 - 1.0).abs());
    checks.push((format!("gauge {gauge:.1e}"), gauge < 1e-10));

    // East ↔ West mirror duality
    let mut mirror: f64 = 0.0;
    for len in [6, 8, 10] {
        let east = ModelSpec::standard(ChainKind::East, len, 3, 0.5, 2.0).unwrap();
        let west = east.mirrored();
        let he = ed::assemble_dense(&east).unwrap();
        let hw = ed::assemble_dense(&west).unwrap();
        let dim = 1 << len;
        for i in 0..dim {
            for j in 0..dim {
                mirror = mirror.max((hw[(reverse_bits(i, len), reverse_bits(j, len))] - he[(i, j)]).norm());
            }
        }
        let (ee, _) = ed::ground_state_exact(&east, Pin::Left).unwrap();
        let (ew, _) = ed::ground_state_exact(&west, Pin::Right).unwrap();
        mirror = mirror.max((ee - ew).abs());
        let init = init_for(ChainKind::East, len, 3);
        let s = TrotterSchedule { total_time: 10.0, ..TrotterSchedule::default() };
        let a = evolve(&east, Mps::from_product(&init), &s).unwrap().series;
        let b = evolve(&west, Mps::from_product(&init.mirror()), &s).unwrap().series;
        for (x, y) in a.rows().iter().zip(b.rows()) {
            for i in 0..len {
                mirror = mirror.max((x.occupations[i] - y.occupations[len - 1 - i]).abs());
            }
            for r in 0..len - 1 {
                mirror = mirror.max((x.entropies[r] - y.entropies[len - 2 - r]).abs());
            }
        }
    }
    checks.push((format!("mirror {mirror:.1e}"), mirror < 1e-8));

    // second-order Trotter error ratio for dt halving
    let spec = ModelSpec::standard(ChainKind::Heterojunction, 8, 3, 0.99, 2.0).unwrap();
    let init = ProductStateSpec::parse("11100000").unwrap();
    let table = trotter_convergence_check(
        &spec,
        &init,
        10.0,
        &[0.1, 0.05],
        TrotterOrder::Second,
        Truncation { chi_max: 256, cutoff: 1e-14 },
    )
    .unwrap();
    let ratio = table.ratios[0].0;
    checks.push((format!("trotter ratio {ratio:.2}"), table.scaling_ok()));

    let pass = checks.iter().all(|c| c.1);
    let detail = checks
        .iter()
        .map(|(name, ok)| format!("{name} {}", if *ok { "ok" } else { "BAD" }))
        .collect::<Vec<_>>()
        .join(", ");
    report(9, "numerical hygiene", pass, &detail, t0);
    assert!(pass, "{detail}");
}
