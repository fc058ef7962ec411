use pclab_core::attractors::{attractor_set, BasinConfig};
use pclab_core::campaign::{run_campaign, sample_omega, CampaignConfig, SystemChoice};
use pclab_core::ergodic::ulam_model;
use pclab_core::orbits::{detect_g_connection, itinerary, Classification};
use pclab_core::presets::{preset, random_affine_system, SystemSpec};
use pclab_core::quasi_partition::{
    build_quasi_partition, default_gap_budget, symbolic_itinerary_from_tau, verify_quasi_partition,
};
use pclab_core::{
    BoundaryAssignment, ExpandingMap, ParameterPoint, PiecewiseContraction, Rational, Side,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DEN: i64 = 999_983;

fn sides(bits: u8, n: usize) -> BoundaryAssignment {
    BoundaryAssignment::new(
        (0..n - 1)
            .map(|i| {
                if bits >> i & 1 == 0 {
                    Side::Left
                } else {
                    Side::Right
                }
            })
            .collect(),
    )
}

fn random_map(seed: u64, n: usize, bits: u8) -> (SystemSpec, PiecewiseContraction<Rational>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_affine_system(n, &mut rng);
    let params: ParameterPoint<Rational> = sample_omega(n, &mut rng).unwrap();
    let f = PiecewiseContraction::new(spec.system().unwrap(), params, sides(bits, n)).unwrap();
    (spec, f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_undoes_f(seed in any::<u64>(), n in 2usize..=4, bits in any::<u8>(), k in 0..=DEN) {
        let (_, f) = random_map(seed, n, bits);
        let g = ExpandingMap::build(f.system()).unwrap();
        let x = Rational::new(k, DEN);
        let y = f.eval(&x).unwrap();
        prop_assert!(f.image_set().contains(&y));
        prop_assert_eq!(g.eval(&y).unwrap(), x);
    }

    #[test]
    fn assignment_text_round_trips(bits in any::<u8>(), n in 2usize..=8) {
        let a = sides(bits, n);
        prop_assert_eq!(a.to_string().parse::<BoundaryAssignment>().unwrap(), a);
    }

    #[test]
    fn random_systems_round_trip_through_json(seed in any::<u64>(), n in 2usize..=5) {
        let spec = random_affine_system(n, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(SystemSpec::from_json(&spec.to_json()).unwrap(), spec.clone());
        let system = spec.system::<Rational>().unwrap();
        prop_assert!(system.kappa() < Rational::new(1, 1));
    }

    #[test]
    fn ulam_rows_are_stochastic(seed in any::<u64>(), n in 2usize..=4, bins in 2usize..=40) {
        let spec = random_affine_system(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let g = ExpandingMap::build(&spec.system::<Rational>().unwrap()).unwrap();
        let model = ulam_model(&g, bins).unwrap();
        for s in model.row_sums() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        prop_assert!((model.mass.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(model.residual <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    /// The whole pipeline on a random instance: every verification check
    /// passes, `1 <= r <= n`, `m` is bounded by the trail lengths and the
    /// τ word predicts the itinerary of interior points.
    #[test]
    fn pipeline_invariants(seed in any::<u64>(), n in 2usize..=3, bits in any::<u8>(), probes in prop::collection::vec(1..DEN, 5)) {
        let (_, f) = random_map(seed, n, bits);
        let g = ExpandingMap::build(f.system()).unwrap();
        prop_assume!(detect_g_connection(&f, &g, 200).unwrap().is_none());
        let qp = build_quasi_partition(&f, &g, default_gap_budget(&f, &g)).unwrap();
        let report = verify_quasi_partition(&f, &qp);
        prop_assert!(report.all_passed(), "{:?}", report.failed().collect::<Vec<_>>());
        let trail_points: usize = qp.trails.iter().map(|t| t.len()).sum();
        prop_assert!(qp.m() <= trail_points + 1);

        let xs: Vec<Rational> = probes.iter().map(|&k| Rational::new(k, DEN)).collect();
        let set = attractor_set(&f, &qp, &xs, &BasinConfig::default()).unwrap();
        prop_assert!((1..=n).contains(&set.r));
        prop_assert_eq!(set.unattributed(), 0);

        for x in &xs {
            let Some(l) = qp.component_of(x) else { continue };
            let word = symbolic_itinerary_from_tau(&qp, l).unwrap();
            let Classification::EventuallyPeriodic { preperiod, period } = word.classification else {
                return Err(TestCaseError::fail("tau word is not eventually periodic"));
            };
            prop_assert!(preperiod + period <= qp.m());
            let len = (2 * qp.m()).max(50);
            prop_assert_eq!(Some(itinerary(&f, x, len).unwrap().digits), word.prefix(len));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn campaigns_are_deterministic_and_counts_add_up(seed in any::<u64>(), trials in 1usize..=6) {
        let config = CampaignConfig::new(SystemChoice::Preset("S2".into()), trials, seed);
        let strip = |c: &CampaignConfig| {
            run_campaign(c).unwrap().records.into_iter().map(|mut r| { r.elapsed_ms = 0.0; r }).collect::<Vec<_>>()
        };
        let first = strip(&config);
        prop_assert_eq!(&first, &strip(&config));
        let summary = run_campaign(&config).unwrap().summary;
        prop_assert_eq!(summary.successes + summary.discarded + summary.invariant_violations, trials);
        prop_assert!(summary.max_r <= 2);
    }
}

#[test]
fn preset_system_has_exact_left_inverse_everywhere_on_a_grid() {
    let f = preset("S2").unwrap().map::<Rational>().unwrap();
    let g = ExpandingMap::build(f.system()).unwrap();
    for k in 0..1000 {
        let x = Rational::new(k, 1000);
        assert_eq!(g.eval(&f.eval(&x).unwrap()).unwrap(), x);
    }
}
