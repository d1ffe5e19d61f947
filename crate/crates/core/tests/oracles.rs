// Property tests of the MPS engines against the dense exact-diagonalization
// oracle on small chains.

use eastwest::dmrg::{dmrg_ground, DmrgParams, Mpo};
use eastwest::ed::{self, DenseState, ExactMethod};
use eastwest::mps::Direction;
use eastwest::tebd::{compare_with_exact, evolve, resume, Checkpoint, Tebd, TrotterOrder};
use eastwest::*;
use nalgebra::{DMatrix, Matrix4};
use proptest::prelude::*;
use rand::SeedableRng;

fn kind_strategy() -> impl Strategy<Value = ChainKind> {
    prop_oneof![Just(ChainKind::East), Just(ChainKind::West), Just(ChainKind::Heterojunction)]
}

fn spec_strategy() -> impl Strategy<Value = ModelSpec> {
    (kind_strategy(), prop_oneof![Just(4usize), Just(6), Just(8)], 1usize..=3, 0.3f64..2.5, 1.5f64..2.5).prop_map(
        |(kind, len, d, mu, spacer)| ModelSpec::standard(kind, len, d.min(len / 2), mu, spacer).unwrap(),
    )
}

fn pattern_strategy(len: usize) -> impl Strategy<Value = ProductStateSpec> {
    (proptest::collection::vec(any::<bool>(), len), proptest::option::of((0..len, 0.0f64..=1.0)))
        .prop_map(|(p, sup)| ProductStateSpec::new(p, sup).unwrap())
}

fn random_unitary(seed: u64) -> Matrix4<C64> {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = Matrix4::<C64>::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = (h + h.adjoint()) * C64::from(0.5);
    let eig = h.symmetric_eigen();
    let phases = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, e)));
    eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn dmrg_is_variational_and_reaches_ed(spec in spec_strategy()) {
        let pin = Pin::default_for(spec.kind());
        let (e0, _) = ed::ground_state_exact(&spec, pin).unwrap();
        let r = dmrg_ground(&spec, &DmrgParams::for_model(&spec)).unwrap();
        prop_assert!(r.energy >= e0 - 1e-10);
        prop_assert!((r.energy - e0).abs() < 1e-8, "dmrg {} ed {}", r.energy, e0);
    }

    #[test]
    fn mpo_expectation_matches_dense(spec in spec_strategy(), seed in 0u64..1000) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut mps = Mps::random(spec.len(), 4, &mut rng);
        mps.canonicalize(0);
        let psi = DenseState::new(mps.to_dense(), spec.len()).unwrap();
        let h = ed::SparseHamiltonian::new(&spec).unwrap();
        let exact = h.expectation(&psi);
        prop_assert!((Mpo::new(&spec).expectation(&mps) - exact).abs() < 1e-10);
    }

    #[test]
    fn tebd_tracks_exact_evolution(
        (spec, init) in spec_strategy().prop_flat_map(|s| {
            let len = s.len();
            (Just(s), pattern_strategy(len))
        })
    ) {
        let schedule = TrotterSchedule { total_time: 5.0, ..TrotterSchedule::default() };
        let c = compare_with_exact(&spec, &init, &schedule).unwrap();
        prop_assert!(c.min_fidelity > 1.0 - 1e-6);
        prop_assert!(c.max_observable_error < 1e-6, "{}", c.max_observable_error);
    }

    #[test]
    fn two_site_gate_matches_dense(seed in 0u64..1000, bond in 0usize..7) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut mps = Mps::random(8, 6, &mut rng);
        mps.canonicalize(3);
        let before = mps.to_dense();
        let g = random_unitary(seed);
        mps.apply_two_site_gate(bond, &g, &Truncation::exact(), Direction::Right, true).unwrap();
        // dense reference: site 0 is the most significant bit
        let shift = 8 - bond - 2;
        let mut expect = vec![C64::new(0.0, 0.0); before.len()];
        for (i, &a) in before.iter().enumerate() {
            let col = (i >> shift) & 3;
            for row in 0..4 {
                let j = (i & !(3 << shift)) | (row << shift);
                expect[j] += g[(row, col)] * a;
            }
        }
        let after = mps.to_dense();
        let err = after.iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn entropies_match_dense_svd(seed in 0u64..1000, chi in 1usize..9) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut mps = Mps::random(8, chi, &mut rng);
        mps.canonicalize(0);
        let amps = mps.to_dense();
        for cut in 1..8 {
            let m = DMatrix::from_fn(1 << cut, 1 << (8 - cut), |i, j| amps[(i << (8 - cut)) | j]);
            let s: f64 = m.svd(false, false).singular_values.iter()
                .map(|x| x * x).filter(|&p| p > 1e-30).map(|p| -p * p.ln()).sum();
            prop_assert!((s - mps.bond_entropy(cut - 1)).abs() < 1e-10);
            prop_assert!(s <= cut.min(8 - cut) as f64 * std::f64::consts::LN_2 + 1e-12);
        }
    }
}

#[test]
fn mirror_duality_of_trajectories() {
    let east = ModelSpec::standard(ChainKind::East, 10, 3, 0.7, 2.0).unwrap();
    let west = east.mirrored();
    let init = ProductStateSpec::parse("1100000000@3:1/3").unwrap();
    let s = TrotterSchedule { total_time: 20.0, ..TrotterSchedule::default() };
    let a = evolve(&east, Mps::from_product(&init), &s).unwrap().series;
    let b = evolve(&west, Mps::from_product(&init.mirror()), &s).unwrap().series;
    for (x, y) in a.rows().iter().zip(b.rows()) {
        for i in 0..10 {
            assert!((x.occupations[i] - y.occupations[9 - i]).abs() < 1e-9);
        }
        for r in 0..9 {
            assert!((x.entropies[r] - y.entropies[8 - r]).abs() < 1e-9);
        }
    }
}

#[test]
fn mps_entropies_follow_exact_reduced_states() {
    let spec = ModelSpec::standard(ChainKind::Heterojunction, 10, 3, 0.99, 2.0).unwrap();
    let init = ProductStateSpec::parse("1110000000").unwrap();
    let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let exact = ed::evolve_exact(&DenseState::from_product(&init).unwrap(), &spec, &times, ExactMethod::Eigen).unwrap();
    let s = TrotterSchedule { total_time: 10.0, ..TrotterSchedule::default() };
    let series = evolve(&spec, Mps::from_product(&init), &s).unwrap().series;
    for (row, psi) in series.rows().iter().zip(&exact) {
        for (cut, &x) in row.entropies.iter().enumerate() {
            assert!((x - psi.entropy(cut + 1)).abs() < 1e-6);
        }
    }
}

#[test]
fn second_order_error_quarters_with_halved_step() {
    let spec = ModelSpec::standard(ChainKind::East, 8, 3, 0.99, 2.0).unwrap();
    let init = ProductStateSpec::parse("11100000").unwrap();
    let table = eastwest::tebd::trotter_convergence_check(
        &spec,
        &init,
        10.0,
        &[0.2, 0.1, 0.05],
        TrotterOrder::Second,
        Truncation { chi_max: 64, cutoff: 1e-14 },
    )
    .unwrap();
    assert_eq!(table.reference, "exact");
    assert!(table.rows.windows(2).all(|w| w[1].max_error < w[0].max_error));
    assert!(table.scaling_ok(), "{:?}", table.ratios);
}

#[test]
fn fourth_order_beats_second_order() {
    let spec = ModelSpec::standard(ChainKind::Heterojunction, 8, 3, 0.5, 2.0).unwrap();
    let init = ProductStateSpec::parse("11000011").unwrap();
    let err = |order| {
        let s = TrotterSchedule { dt: 0.1, order, total_time: 10.0, ..TrotterSchedule::default() };
        compare_with_exact(&spec, &init, &s).unwrap().max_observable_error
    };
    assert!(err(TrotterOrder::Fourth) < err(TrotterOrder::Second) / 10.0);
    assert!(err(TrotterOrder::Second) < err(TrotterOrder::First));
}

#[test]
fn checkpoint_resume_equals_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ModelSpec::standard(ChainKind::Heterojunction, 12, 3, 0.99, 2.0).unwrap();
    let init = ProductStateSpec::parse("111000000101").unwrap();
    let full = TrotterSchedule { total_time: 8.0, ..TrotterSchedule::default() };
    let straight = evolve(&spec, Mps::from_product(&init), &full).unwrap();

    let cp = Checkpoint { prefix: dir.path().join("cp"), every: std::time::Duration::ZERO };
    let half = TrotterSchedule { total_time: 4.0, ..full.clone() };
    let tebd = Tebd::new(&spec, half).unwrap();
    let mut state = Mps::from_product(&init);
    let mut series = TimeSeries::new(12);
    let mut report = TruncationReport::default();
    tebd.run(&mut state, 0.0, &mut series, &mut report, Some(&cp)).unwrap();
    let resumed = resume(&spec, &full, &cp).unwrap();
    assert_eq!(resumed.series.len(), straight.series.len());
    for (a, b) in resumed.series.rows().iter().zip(straight.series.rows()) {
        assert_eq!(a.time, b.time);
        for (x, y) in a.occupations.iter().zip(&b.occupations).chain(a.entropies.iter().zip(&b.entropies)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    use eastwest::experiments::*;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut cfg = ExperimentConfig::preset(ExperimentId::Fig2, Preset::Desk);
        cfg.len = 10;
        cfg.total_time = 10.0;
        cfg.out_dir = d.path().to_path_buf();
        run_fig2(&cfg).unwrap();
    }
    let a = std::fs::read(dirs[0].path().join("fig2.csv")).unwrap();
    let b = std::fs::read(dirs[1].path().join("fig2.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn energy_is_conserved_at_small_l() {
    let spec = ModelSpec::standard(ChainKind::Heterojunction, 10, 3, 0.99, 2.0).unwrap();
    let init = ProductStateSpec::parse("1110000101").unwrap();
    let s = TrotterSchedule { total_time: 50.0, ..TrotterSchedule::default() };
    let c = compare_with_exact(&spec, &init, &s).unwrap();
    assert!(c.max_energy_drift < 1e-6, "{}", c.max_energy_drift);
}

#[test]
fn gauge_choice_does_not_change_observables() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut mps = Mps::random(9, 6, &mut rng);
    mps.canonicalize(0);
    let terms = ModelSpec::standard(ChainKind::East, 9, 2, 0.5, 2.0).unwrap().compile();
    let reference = mps.clone().measure(Some(&terms));
    for c in 1..9 {
        let mut m = mps.clone();
        m.canonicalize(c);
        assert!(m.isometry_error() < 1e-12);
        let r = m.measure(Some(&terms));
        assert!((r.energy - reference.energy).abs() < 1e-12);
        for (a, b) in r.occupations.iter().zip(&reference.occupations) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
