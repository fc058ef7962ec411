//! Acceptance gate: nine end-to-end criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`); the process exits nonzero
//! when any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pclab_core::attractors::{
    attractor_set, direct_attractor_oracle, fixed_points, BasinConfig, OracleVerdict,
};
use pclab_core::campaign::{
    oracle_burn_in, run_campaign, sample_omega, sample_point, CampaignConfig, CampaignResult,
    Outcome, SystemChoice,
};
use pclab_core::ergodic::{
    density_gap_records, pushforward_histogram, total_variation, ulam_model,
};
use pclab_core::orbits::{detect_g_connection, itinerary, Classification};
use pclab_core::presets::{preset, random_affine_system};
use pclab_core::quasi_partition::{
    default_gap_budget, from_hits, gap_hits, verify_quasi_partition, HitVerdict, CHECK_HULL_INSIDE,
    CHECK_LAYERS,
};
use pclab_core::{
    BoundaryAssignment, ExpandingMap, Float, ParameterPoint, PiecewiseContraction, Rational,
    Scalar, Side,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn q(s: &str) -> Rational {
    Rational::parse(s).unwrap()
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn half_example(name: &str) -> PiecewiseContraction<Rational> {
    preset(name).unwrap().map::<Rational>().unwrap()
}

fn eventual_class(word: &pclab_core::orbits::ItineraryWord) -> Option<(Vec<usize>, Vec<usize>)> {
    Some((
        word.preperiod_word()?.to_vec(),
        word.period_word()?.to_vec(),
    ))
}

fn example_regression() -> Verdict {
    let start = Instant::now();
    let f1 = half_example("example-4.1-f1");
    let tol = q("1e-10");
    let grid: Vec<Rational> = (0..1000).map(|k| Rational::new(k, 1000)).collect();

    let mut classes = BTreeSet::new();
    let mut undetermined = 0;
    for x in &grid {
        match eventual_class(&itinerary(&f1, x, 120).unwrap()) {
            Some(c) => {
                classes.insert(c);
            }
            None => undetermined += 1,
        }
    }
    let expected: BTreeSet<_> = [(vec![], vec![1]), (vec![2], vec![1])]
        .into_iter()
        .collect();

    let mut phantoms_at_half = 0;
    let mut f1_orbits = 0;
    for x in &grid {
        match direct_attractor_oracle(&f1, x, 60, 16, &tol).unwrap() {
            OracleVerdict::Phantom(p) if p.point == q("1/2") => phantoms_at_half += 1,
            OracleVerdict::Orbit { .. } => f1_orbits += 1,
            _ => {}
        }
    }

    let f2 = half_example("example-4.1-f2");
    let mut f2_orbits = BTreeSet::new();
    let mut f2_other = 0;
    for x in &grid {
        match direct_attractor_oracle(&f2, x, 60, 16, &tol).unwrap() {
            OracleVerdict::Orbit { points, .. } => {
                f2_orbits.insert(points.iter().map(|p| p.to_string()).collect::<Vec<_>>());
            }
            _ => f2_other += 1,
        }
    }
    let f2_ok =
        f2_other == 0 && f2_orbits.len() == 1 && f2_orbits.contains(&vec!["1/2".to_string()]);

    let eps_fixed: Vec<usize> = ["1/20", "1/10", "1/5"]
        .iter()
        .map(|e| fixed_points(&half_example(&format!("example-4.1-f2-eps:{e}"))).len())
        .collect();

    let elapsed = start.elapsed();
    let passed = classes == expected
        && undetermined == 0
        && phantoms_at_half == grid.len()
        && f1_orbits == 0
        && f2_ok
        && eps_fixed.iter().all(|&c| c == 0)
        && within(elapsed, 5);
    verdict(
        passed,
        format!(
            "f1 classes {:?} ({} undetermined), phantom at 1/2 from {}/{} points, {} f1 orbits; \
             f2 orbits {:?} ({} other verdicts); eps fixed points {:?}; {:.2}s",
            classes,
            undetermined,
            phantoms_at_half,
            grid.len(),
            f1_orbits,
            f2_orbits,
            f2_other,
            eps_fixed,
            elapsed.as_secs_f64()
        ),
    )
}

fn s2_campaign() -> (CampaignResult, Duration) {
    let start = Instant::now();
    let config = CampaignConfig::new(SystemChoice::Preset("S2".into()), 500, SEED);
    let result = run_campaign(&config).unwrap();
    (result, start.elapsed())
}

fn campaign_success(result: &CampaignResult, elapsed: Duration) -> Verdict {
    let s = &result.summary;
    let mut bad = Vec::new();
    for record in &result.records {
        if let Outcome::Success {
            r,
            basin_points,
            max_basin_iterations,
            ..
        } = &record.outcome
        {
            if !(1..=2).contains(r) || *basin_points != 100 || *max_basin_iterations > 100_000 {
                bad.push(record.trial);
            }
        }
    }
    let passed = s.success_rate >= 0.99
        && s.invariant_violations == 0
        && bad.is_empty()
        && within(elapsed, 120);
    verdict(
        passed,
        format!(
            "success {}/{} ({:.1}%), discards {:?}, violations {}, r {:?}, bad successes {:?}; {:.1}s",
            s.successes,
            s.records,
            100.0 * s.success_rate,
            s.discard_reasons,
            s.invariant_violations,
            s.r_distribution,
            bad,
            elapsed.as_secs_f64()
        ),
    )
}

fn left_inverse() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let pairs = 10_000;

    let s2 = preset("S2").unwrap().system::<Rational>().unwrap();
    let g2 = ExpandingMap::build(&s2).unwrap();
    let mut s2_fail = 0;
    for _ in 0..pairs {
        let params: ParameterPoint<Rational> = sample_omega(2, &mut rng).unwrap();
        let side = if rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        let f = PiecewiseContraction::new(s2.clone(), params, BoundaryAssignment::new(vec![side]))
            .unwrap();
        let x: Rational = sample_point(&mut rng);
        if g2.eval(&f.eval(&x).unwrap()).unwrap() != x {
            s2_fail += 1;
        }
    }

    let s3 = preset("S3").unwrap().system::<Float>().unwrap();
    let g3 = ExpandingMap::build(&s3).unwrap();
    let mut s3_fail = 0;
    let mut s3_worst = 0.0f64;
    for _ in 0..pairs {
        let params: ParameterPoint<Float> = sample_omega(2, &mut rng).unwrap();
        let side = if rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        let f = PiecewiseContraction::new(s3.clone(), params, BoundaryAssignment::new(vec![side]))
            .unwrap();
        let x: Float = sample_point(&mut rng);
        let err = (g3.eval(&f.eval(&x).unwrap()).unwrap().0 - x.0).abs();
        s3_worst = s3_worst.max(err);
        if err > 1e-12 {
            s3_fail += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        s2_fail == 0 && s3_fail == 0 && within(elapsed, 5),
        format!(
            "S2 exact mismatches {s2_fail}/{pairs}, S3 beyond 1e-12 {s3_fail}/{pairs} (worst {s3_worst:.2e}); {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn quasi_partition_checks(result: &CampaignResult) -> Verdict {
    let system = preset("S2").unwrap().system::<Rational>().unwrap();
    let g = ExpandingMap::build(&system).unwrap();
    let mut checked = 0;
    let mut checks = 0;
    let mut failures = Vec::new();
    for record in result.records.iter().filter(|r| r.is_success()) {
        let cuts: Vec<Rational> = record.cuts.iter().map(|c| q(c)).collect();
        let assignment: BoundaryAssignment = record.assignment.parse().unwrap();
        let f = PiecewiseContraction::new(
            system.clone(),
            ParameterPoint::new(cuts).unwrap(),
            assignment,
        )
        .unwrap();
        let hits = gap_hits(&f, &g, default_gap_budget(&f, &g)).unwrap();
        let report = verify_quasi_partition(&f, &from_hits(&f, &hits).unwrap());
        let named = [CHECK_LAYERS, CHECK_HULL_INSIDE]
            .iter()
            .all(|n| report.check(n).is_some_and(|c| c.passed));
        checks = report.checks.len();
        if !(report.all_passed() && named) {
            failures.push(record.trial);
        }
        checked += 1;
    }
    verdict(
        failures.is_empty() && checked > 0,
        format!("{checked} successful trials re-verified exactly ({checks} checks each), failures {failures:?}"),
    )
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let instances = 100;
    let points = 50;
    let tol = Rational::from_f64(1e-10);
    let mut done = 0;
    let mut draws = 0;
    let mut disagreements = Vec::new();
    let mut max_r_ok = true;
    while done < instances {
        draws += 1;
        let n = 2 + done % 2;
        let system = random_affine_system(n, &mut rng)
            .system::<Rational>()
            .unwrap();
        let g = ExpandingMap::build(&system).unwrap();
        let params: ParameterPoint<Rational> = sample_omega(n, &mut rng).unwrap();
        let assignment = BoundaryAssignment::enumerate(n)[rng.gen_range(0..1 << (n - 1))].clone();
        let f = PiecewiseContraction::new(system, params, assignment).unwrap();
        if detect_g_connection(&f, &g, 200).unwrap().is_some() {
            continue;
        }
        let hits = gap_hits(&f, &g, default_gap_budget(&f, &g)).unwrap();
        if hits.iter().any(|h| h.verdict != HitVerdict::HitInterior) {
            continue;
        }
        done += 1;
        let qp = match from_hits(&f, &hits) {
            Ok(qp) => qp,
            Err(e) => {
                disagreements.push(format!("instance {done}: {e}"));
                continue;
            }
        };
        let samples: Vec<Rational> = (0..points).map(|_| sample_point(&mut rng)).collect();
        let report = match attractor_set(&f, &qp, &samples, &BasinConfig::default()) {
            Ok(r) => r,
            Err(e) => {
                disagreements.push(format!("instance {done}: {e}"));
                continue;
            }
        };
        max_r_ok &= report.r <= n;
        let burn_in = oracle_burn_in(f.system().kappa().to_f64(), qp.m(), 1e-10);
        let probe = (4 * qp.m()).max(16);
        for entry in &report.basins {
            let oracle = direct_attractor_oracle(&f, &entry.x, burn_in, probe, &tol).unwrap();
            let agrees = match (&oracle, entry.orbit) {
                (OracleVerdict::Orbit { points, .. }, Some(o)) => {
                    report.orbits[o].matches(points, &tol)
                }
                _ => false,
            };
            if !agrees {
                disagreements.push(format!(
                    "instance {done}, x = {}: {:?} vs {:?}",
                    entry.x, oracle, entry.orbit
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        disagreements.is_empty() && max_r_ok && within(elapsed, 120),
        format!(
            "{instances} instances ({} draws), {points} points each, disagreements {}{}; {:.1}s",
            draws,
            disagreements.len(),
            disagreements
                .first()
                .map(|d| format!(" (first: {d})"))
                .unwrap_or_default(),
            elapsed.as_secs_f64()
        ),
    )
}

fn orbit_count_bound(s2: &CampaignResult) -> Verdict {
    let start = Instant::now();
    let s4 = run_campaign(&CampaignConfig::new(
        SystemChoice::Preset("S4".into()),
        200,
        SEED,
    ))
    .unwrap();
    let s3 = run_campaign(&CampaignConfig::new(
        SystemChoice::Preset("S3".into()),
        200,
        SEED,
    ))
    .unwrap();
    let mut lines = Vec::new();
    let mut passed = true;
    for result in [s2, &s4, &s3] {
        let s = &result.summary;
        passed &= s.max_r <= s.n && s.invariant_violations == 0;
        lines.push(format!(
            "{} max r {} (n = {}, r {:?})",
            s.system, s.max_r, s.n, s.r_distribution
        ));
    }
    passed &= s4.summary.successes > 0;
    verdict(
        passed,
        format!(
            "{}; S3 success {:.1}%; {:.1}s",
            lines.join(", "),
            100.0 * s3.summary.success_rate,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn symbolic_consistency(result: &CampaignResult) -> Verdict {
    let mut short = Vec::new();
    let mut successes = 0;
    for record in &result.records {
        if let Outcome::Success {
            itinerary_checks, ..
        } = record.outcome
        {
            successes += 1;
            if itinerary_checks != 10 {
                short.push(record.trial);
            }
        }
    }
    // Independent spot check on one map: every grid point of every
    // component follows the τ word.
    let f = preset("S2").unwrap().map::<Rational>().unwrap();
    let g = ExpandingMap::build(f.system()).unwrap();
    let qp = pclab_core::quasi_partition::build_quasi_partition(&f, &g, 60).unwrap();
    let mut mismatches = 0;
    for k in 1..1000 {
        let x = Rational::new(k, 1000);
        let Some(l) = qp.component_of(&x) else {
            continue;
        };
        let word = pclab_core::quasi_partition::symbolic_itinerary_from_tau(&qp, l).unwrap();
        let Classification::EventuallyPeriodic { preperiod, period } = word.classification else {
            mismatches += 1;
            continue;
        };
        let len = (2 * qp.m()).max(50);
        if preperiod + period > qp.m()
            || Some(itinerary(&f, &x, len).unwrap().digits) != word.prefix(len)
        {
            mismatches += 1;
        }
    }
    verdict(
        short.is_empty() && successes > 0 && result.summary.invariant_violations == 0 && mismatches == 0,
        format!(
            "{successes} successes each matched 10 itineraries against the tau word (short: {:?}); grid spot check mismatches {mismatches}",
            short
        ),
    )
}

fn density_checks() -> Verdict {
    let start = Instant::now();
    let exact = preset("S2").unwrap().system::<Rational>().unwrap();
    let g_exact = ExpandingMap::build(&exact).unwrap();
    let model = ulam_model(&g_exact, 1024).unwrap();
    let min_mass = model.mass.iter().cloned().fold(f64::INFINITY, f64::min);
    let residual: f64 = model
        .push(&model.mass)
        .iter()
        .zip(&model.mass)
        .map(|(a, b)| (a - b).abs())
        .sum();

    let g = ExpandingMap::build(&preset("S2").unwrap().system::<Float>().unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let coarse = ulam_model(&g_exact, 256).unwrap();
    let hist = pushforward_histogram(&g, &Float(rng.gen::<f64>()), 1000, 1_000_000, 256).unwrap();
    let tv = total_variation(&hist, &coarse.mass);

    let gaps = density_gap_records(&g, 0..100, 100_000).unwrap();
    let dense = gaps.iter().filter(|r| r.max_gap <= 0.01).count();
    let worst = gaps.iter().map(|r| r.max_gap).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    verdict(
        min_mass > 0.0 && residual <= 1e-10 && tv <= 0.05 && dense >= 95 && within(elapsed, 180),
        format!(
            "min bin mass {min_mass:.3e}, residual {residual:.2e} after {} sweeps, TV {tv:.4}, \
             dense orbits {dense}/100 (worst gap {worst:.4}); {:.1}s",
            model.sweeps,
            elapsed.as_secs_f64()
        ),
    )
}

fn g_connection_rate() -> Verdict {
    let start = Instant::now();
    let system = preset("S2").unwrap().system::<Rational>().unwrap();
    let g = ExpandingMap::build(&system).unwrap();
    let samples = 10_000;
    let mut found = 0;
    for t in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        rng.set_stream(t as u64);
        let params: ParameterPoint<Rational> = sample_omega(2, &mut rng).unwrap();
        let f = PiecewiseContraction::new(system.clone(), params, BoundaryAssignment::all_left(2))
            .unwrap();
        if detect_g_connection(&f, &g, 200).unwrap().is_some() {
            found += 1;
        }
    }
    let fixture = PiecewiseContraction::new(
        system,
        ParameterPoint::new(vec![q("4/9")]).unwrap(),
        BoundaryAssignment::all_left(2),
    )
    .unwrap();
    let hit = detect_g_connection(&fixture, &g, 200).unwrap();
    verdict(
        found * 1000 <= samples && hit.is_some_and(|c| c.k == 1),
        format!(
            "{found}/{samples} samples with a g-connection; fixture x_1 = 4/9 gives {hit:?}; {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: usize, name: &str, v: Verdict| {
        println!(
            "{} {id} {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
        if !v.passed {
            failed += 1;
        }
    };
    report(1, "discontinuous-limit examples", example_regression());
    let (s2, s2_time) = s2_campaign();
    report(2, "S2 campaign", campaign_success(&s2, s2_time));
    report(3, "left-inverse identity", left_inverse());
    report(
        4,
        "quasi-partition verification",
        quasi_partition_checks(&s2),
    );
    report(5, "oracle equivalence", oracle_equivalence());
    report(6, "orbit-count bound", orbit_count_bound(&s2));
    report(7, "symbolic certificate", symbolic_consistency(&s2));
    report(8, "invariant density", density_checks());
    report(9, "g-connection rate", g_connection_rate());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
