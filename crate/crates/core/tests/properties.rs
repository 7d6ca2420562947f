use oscflow::curvature::{hamiltonian_f_s, HamiltonianArgs, SmoothSetDescriptor};
use oscflow::energy::{mixed_windows, osc_sum, EnergyConfig};
use oscflow::fastmarch::signed_distance;
use oscflow::levels::Quantization;
use oscflow::maxflow::{
    brute_force_binary_min, solve_min_cut, BinaryEnergy, Encoding, DEFAULT_QUANTUM,
};
use oscflow::pgm;
use oscflow::scheme::{evolve_set_once, BandMode, StepConfig};
use oscflow::{make_discrete_ball, BinarySet, Boundary, Grid2D, ScalarField};
use proptest::prelude::*;

fn set_strategy(w: usize, h: usize) -> impl Strategy<Value = BinarySet> {
    proptest::collection::vec(any::<bool>(), w * h)
        .prop_map(move |m| BinarySet::new(Grid2D::new(w, h).unwrap(), m).unwrap())
}

fn rho_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_window_counts_are_submodular(a in set_strategy(12, 10), b in set_strategy(12, 10), rho in rho_strategy()) {
        let ball = make_discrete_ball(rho).unwrap();
        let e = |s: &BinarySet| mixed_windows(s, &ball);
        prop_assert!(e(&a.union(&b)) + e(&a.intersection(&b)) <= e(&a) + e(&b));
    }

    #[test]
    fn oscillation_splits_over_levels(vals in proptest::collection::vec(0u8..6, 100), rho in rho_strategy()) {
        let g = Grid2D::new(10, 10).unwrap();
        let u = ScalarField::new(g, vals.iter().map(|&v| v as f64).collect()).unwrap();
        let ball = make_discrete_ball(rho).unwrap();
        let sliced: u64 = (1..6).map(|l| mixed_windows(&u.strict_superlevel(l as f64 - 0.5), &ball)).sum();
        prop_assert_eq!(osc_sum(&u, &ball), sliced as f64);
    }

    #[test]
    fn cut_solution_is_the_lattice_of_minimizers(
        unary in proptest::collection::vec(-1.0f64..1.0, 12),
        rho in prop_oneof![Just(1.0), Just(1.5)],
        shared in any::<bool>(),
    ) {
        let g = Grid2D::new(4, 3).unwrap();
        let ball = make_discrete_ball(rho).unwrap();
        let enc = if shared { Encoding::SharedRows } else { Encoding::PerWindow };
        let energy = BinaryEnergy::new(g, vec![(ball, 1.0 / (2.0 * rho))], vec![], unary).unwrap().with_encoding(enc);
        let bf = brute_force_binary_min(&energy, DEFAULT_QUANTUM).unwrap();
        let sol = solve_min_cut(&energy.build_graph(DEFAULT_QUANTUM).unwrap());
        prop_assert_eq!(sol.energy_quanta as i128, bf.value_quanta);
        prop_assert_eq!(sol.min_labeling, bf.lattice_min());
        prop_assert_eq!(sol.max_labeling, bf.lattice_max());
    }

    #[test]
    fn quantized_reconstruction_round_trips(vals in proptest::collection::vec(-3.0f64..3.0, 64), n in 2usize..20) {
        let g = Grid2D::new(8, 8).unwrap();
        let u = ScalarField::new(g, vals).unwrap();
        let q = Quantization::of_field(&u, n).unwrap();
        let uq = q.apply(&u).unwrap();
        let sets: Vec<BinarySet> = q.thresholds().iter().map(|&s| uq.strict_superlevel(s)).collect();
        prop_assert_eq!(q.reconstruct(&sets).unwrap(), uq);
    }

    #[test]
    fn signed_distance_has_the_sign_of_the_set(s in set_strategy(9, 7)) {
        prop_assume!(!s.is_empty() && !s.is_full());
        let d = signed_distance(&s);
        for (v, m) in d.values().iter().zip(s.mask()) {
            let inside = *v < 0.0;
            prop_assert_eq!(inside, *m);
            prop_assert!(v.abs() >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn geometric_scaling(lambda in 0.01f64..10.0, mu in -5.0f64..5.0, s in 0.5f64..8.0, a in 0.0f64..std::f64::consts::TAU, xtt in -0.5f64..0.5) {
        let disk = SmoothSetDescriptor::Disk { center: [0.0, 0.0], radius: 12.0 };
        let x = [12.0 * a.cos(), 12.0 * a.sin()];
        let p = [-a.cos(), -a.sin()];
        let t = [a.sin(), -a.cos()];
        let xx = [[xtt * t[0] * t[0], xtt * t[0] * t[1]], [xtt * t[1] * t[0], xtt * t[1] * t[1]]];
        let base = hamiltonian_f_s(&HamiltonianArgs::new(x, p, xx, &disk), s).unwrap();
        let p2 = [lambda * p[0], lambda * p[1]];
        let mut xx2 = xx;
        for i in 0..2 {
            for j in 0..2 {
                xx2[i][j] = lambda * xx[i][j] + mu * p[i] * p[j];
            }
        }
        let scaled = hamiltonian_f_s(&HamiltonianArgs::new(x, p2, xx2, &disk), s).unwrap();
        prop_assert!((scaled - lambda * base).abs() <= 1e-12 * (1.0 + (lambda * base).abs()));
    }

    #[test]
    fn pgm_round_trip(s in set_strategy(7, 5)) {
        let back = pgm::decode(&pgm::encode_set(&s)).unwrap().to_set(*s.grid()).unwrap();
        prop_assert_eq!(back, s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn minimal_step_is_inside_maximal_with_equal_energy(
        disks in proptest::collection::vec((4.0f64..20.0, 4.0f64..20.0, 2.0f64..5.0), 1..4),
        h in 0.5f64..6.0,
    ) {
        let g = Grid2D::new(24, 24).unwrap();
        let mut e = BinarySet::empty(g);
        for (x, y, r) in disks {
            e = e.union(&BinarySet::disk(g, [x, y], r));
        }
        let cfg = StepConfig::new(h, EnergyConfig::OscSingle { rho: 2.0 }).with_band(BandMode::Full);
        let out = evolve_set_once(&e, &cfg).unwrap();
        prop_assert!(out.minus.is_subset(&out.plus));
        if out.unchanged {
            return Ok(());
        }
        let d = signed_distance(&e);
        let energy = BinaryEnergy::new(
            g,
            cfg.energy.window_terms(&g).unwrap(),
            vec![],
            d.values().iter().map(|v| v / h).collect(),
        )
        .unwrap();
        let q = energy.effective_quantum(DEFAULT_QUANTUM).unwrap();
        prop_assert_eq!(
            energy.evaluate_quantized(out.minus.mask(), q),
            energy.evaluate_quantized(out.plus.mask(), q)
        );
    }

    #[test]
    fn narrow_band_never_beats_the_full_cut(
        x in 6.0f64..18.0, y in 6.0f64..18.0, r in 2.0f64..7.0, h in 1.0f64..10.0, width in prop_oneof![Just(1.5), Just(2.5)],
    ) {
        let g = Grid2D::new(24, 24).unwrap();
        let e = BinarySet::disk(g, [x, y], r);
        let cfg = StepConfig::new(h, EnergyConfig::OscSingle { rho: 2.0 });
        let full = evolve_set_once(&e, &cfg).unwrap();
        let narrow = evolve_set_once(&e, &cfg.clone().with_band(BandMode::Narrow { width })).unwrap();
        let d = signed_distance(&e);
        let energy = BinaryEnergy::new(g, cfg.energy.window_terms(&g).unwrap(), vec![], d.values().iter().map(|v| v / h).collect()).unwrap();
        let q = energy.effective_quantum(DEFAULT_QUANTUM).unwrap();
        prop_assert!(energy.evaluate_quantized(full.minus.mask(), q) <= energy.evaluate_quantized(narrow.minus.mask(), q));
        prop_assert_eq!(energy.evaluate_quantized(full.minus.mask(), q), energy.evaluate_quantized(full.plus.mask(), q));
    }

    #[test]
    fn local_energy_delta_matches_full_evaluation(
        s in set_strategy(9, 8),
        flip in proptest::collection::vec(0usize..72, 1..12),
        unary in proptest::collection::vec(-1.0f64..1.0, 72),
        rho in rho_strategy(),
        tv in any::<bool>(),
        pad in any::<bool>(),
    ) {
        let mut g = Grid2D::new(9, 8).unwrap();
        if pad {
            g = g.with_boundary(Boundary::PadConstant(1.0)).unwrap();
        }
        let s = BinarySet::new(g, s.mask().to_vec()).unwrap();
        let pairs = if tv { EnergyConfig::TvBaseline.pair_terms(&g) } else { vec![] };
        let energy = BinaryEnergy::new(g, vec![(make_discrete_ball(rho).unwrap(), 0.3)], pairs, unary).unwrap();
        let mut flip = flip;
        flip.sort_unstable();
        flip.dedup();
        let mut after = s.mask().to_vec();
        for &i in &flip {
            after[i] = !after[i];
        }
        let q = DEFAULT_QUANTUM;
        prop_assert_eq!(
            energy.delta_quantized(s.mask(), &flip, q),
            energy.evaluate_quantized(&after, q) - energy.evaluate_quantized(s.mask(), q)
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cut_with_fixed_cells_matches_brute_force(
        unary in proptest::collection::vec(-1.0f64..1.0, 30),
        fixed in proptest::collection::vec(prop_oneof![3 => Just(None), 1 => Just(Some(false)), 1 => Just(Some(true))], 30),
        rho in prop_oneof![Just(1.0), Just(1.5), Just(2.0)],
        shared in any::<bool>(),
        skip in any::<bool>(),
        tv in any::<bool>(),
    ) {
        let g = Grid2D::new(6, 5).unwrap();
        prop_assume!(fixed.iter().filter(|f| f.is_none()).count() <= 16);
        let ball = make_discrete_ball(rho).unwrap();
        let pairs = if tv { EnergyConfig::TvBaseline.pair_terms(&g) } else { vec![] };
        let enc = if shared { Encoding::SharedRows } else { Encoding::PerWindow };
        let mut energy = BinaryEnergy::new(g, vec![(ball, 1.0 / (2.0 * rho))], pairs, unary).unwrap().with_encoding(enc);
        if skip {
            energy = energy.with_frozen_windows_skipped();
        }
        let energy = energy.with_fixed(fixed).unwrap();
        let bf = brute_force_binary_min(&energy, DEFAULT_QUANTUM).unwrap();
        let q = energy.effective_quantum(DEFAULT_QUANTUM).unwrap();
        let sol = solve_min_cut(&energy.build_graph(DEFAULT_QUANTUM).unwrap());
        prop_assert_eq!(energy.evaluate_quantized(sol.min_labeling.mask(), q), bf.value_quanta);
        prop_assert_eq!(sol.min_labeling, bf.lattice_min());
        prop_assert_eq!(sol.max_labeling, bf.lattice_max());
    }
}
