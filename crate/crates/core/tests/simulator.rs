use std::f64::consts::PI;

use boole_core::polytope::assignments;
use boole_core::rational::{from_f64, ratio};
use boole_core::simulator::{
    lg_statistic, pair_scenario, quantum_pair_correlator, quantum_point, run_pair_protocol, run_quantum_pair_protocol,
    run_triple_protocol, triple_scenario, CsvSink, NullSink, PairProtocolConfig, QuantumTwoLevelModel, RunOptions,
};
use boole_core::{correlations_to_marginals, joint_exists, CorrelationPoint, FeasibilityStatus, JointDistribution};
use boole_testkit::random;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn triple_statistic_never_below_minus_one() {
    let s = triple_scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for seed in 0..5 {
        let joint = random::joint(&mut rng, 3);
        let mut records = Vec::new();
        let out = run_triple_protocol(&s, &joint, &RunOptions::new(20_000, seed), &mut records).unwrap();
        assert!(out.summary.min >= -1);
        assert!(out.summary.histogram.keys().all(|k| *k == -1 || *k == 3));
        assert!(out.summary.mean_exact >= ratio(-1, 1));
        let sum: f64 = lg_statistic(&out.estimates).unwrap();
        assert!((sum - out.summary.mean).abs() < 1e-12);
        for r in &records {
            let q = r.outcomes.values();
            assert!(q[0] * q[1] + q[0] * q[2] + q[1] * q[2] >= -1);
        }
    }
}

#[test]
fn uniform_triple_sum_tends_to_zero() {
    let out =
        run_triple_protocol(&triple_scenario(), &JointDistribution::uniform(3), &RunOptions::new(300_000, 3), &mut NullSink)
            .unwrap();
    assert!(out.summary.mean.abs() < 0.02, "{}", out.summary.mean);
    assert!(out.summary.min >= -1);
}

#[test]
fn record_streams_are_deterministic_across_thread_counts() {
    let cfg = PairProtocolConfig::from_correlators([ratio(1, 3), ratio(-1, 2), ratio(0, 1)]).unwrap();
    let render = |threads: Option<usize>| {
        let mut opts = RunOptions::new(150_000, 99);
        opts.threads = threads;
        let mut sink = CsvSink::new(Vec::new()).unwrap();
        let est = run_pair_protocol(&cfg, &opts, &mut sink).unwrap();
        (sink.into_inner(), est)
    };
    let (a, ea) = render(None);
    let (b, eb) = render(Some(1));
    let (c, ec) = render(Some(3));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(ea, eb);
    assert_eq!(ea, ec);
    let (d, _) = render(None);
    assert_eq!(a, d);
}

#[test]
fn anticorrelated_pairs_reach_minus_three() {
    let est = run_pair_protocol(&PairProtocolConfig::anticorrelated(), &RunOptions::new(30_000, 4), &mut NullSink).unwrap();
    assert_eq!(lg_statistic(&est).unwrap(), -3.0);
}

#[test]
fn uniform_pairs_estimate_zero() {
    let cfg = PairProtocolConfig::from_correlators([ratio(0, 1), ratio(0, 1), ratio(0, 1)]).unwrap();
    let runs = 90_000u64;
    let est = run_pair_protocol(&cfg, &RunOptions::new(runs, 8), &mut NullSink).unwrap();
    let bound = 4.0 / ((runs / 3) as f64).sqrt();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let e = est.pair(i, j).unwrap();
        assert_eq!(e.count, runs / 3);
        assert!(e.value.abs() <= bound);
    }
}

#[test]
fn estimates_match_feasible_point() {
    let s = pair_scenario();
    let joint = random::joint(&mut ChaCha8Rng::seed_from_u64(31), 3);
    let point = joint.correlations(&s);
    let ks: Vec<_> = s.pair_coordinates().iter().map(|&(i, j)| point.correlator(i, j).unwrap().clone()).collect();
    let cfg = PairProtocolConfig::from_correlators([ks[0].clone(), ks[1].clone(), ks[2].clone()]).unwrap();
    let runs = 120_000u64;
    let est = run_pair_protocol(&cfg, &RunOptions::new(runs, 12), &mut NullSink).unwrap();
    let bound = 4.0 / ((runs / 3) as f64).sqrt();
    for (k, &(i, j)) in s.pair_coordinates().iter().enumerate() {
        let exact = boole_core::rational::to_f64(&ks[k]);
        assert!((est.pair(i, j).unwrap().value - exact).abs() <= bound);
    }
}

#[test]
fn estimates_within_five_stderr_for_most_repetitions() {
    let truth = [0.3, -0.6, 0.1];
    let cfg = PairProtocolConfig::from_correlators(truth.map(|k| from_f64(k).unwrap())).unwrap();
    let mut inside = 0;
    let mut total = 0;
    for seed in 0..1000u64 {
        let est = run_pair_protocol(&cfg, &RunOptions::new(1500, seed), &mut NullSink).unwrap();
        for (k, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
            let e = est.pair(i, j).unwrap();
            total += 1;
            if (e.value - truth[k]).abs() <= 5.0 * e.stderr {
                inside += 1;
            }
        }
    }
    assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
}

#[test]
fn quantum_correlator_matches_cosine() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let omega = rng.random_range(-10.0..10.0);
        let t1 = rng.random_range(-5.0..5.0);
        let t2 = t1 + rng.random_range(0.01..4.0);
        let t3 = t2 + rng.random_range(0.01..4.0);
        let m = QuantumTwoLevelModel::new(omega, [t1, t2, t3]).unwrap();
        let times = [t1, t2, t3];
        for (i, j) in [(1, 2), (1, 3), (2, 3)] {
            let k = quantum_pair_correlator(&m, i, j).unwrap();
            assert!((k - (omega * (times[j - 1] - times[i - 1])).cos()).abs() < 1e-12);
        }
    }
}

#[test]
fn quantum_boundary_and_maximum() {
    let quarter = quantum_point(&QuantumTwoLevelModel::equally_spaced(PI / 2.0).unwrap()).unwrap();
    assert!((lg_statistic(&quarter).unwrap() + 1.0).abs() < 1e-12);
    let still = quantum_point(&QuantumTwoLevelModel::equally_spaced(0.0).unwrap()).unwrap();
    assert_eq!(lg_statistic(&still).unwrap(), 3.0);
    let est =
        run_quantum_pair_protocol(&QuantumTwoLevelModel::equally_spaced(0.0).unwrap(), &RunOptions::new(3000, 1), &mut NullSink)
            .unwrap();
    assert_eq!(lg_statistic(&est).unwrap(), 3.0);
}

#[test]
fn violating_estimates_are_infeasible() {
    let s = pair_scenario();
    let models = [2.0 * PI / 3.0, 2.5, 1.8, PI];
    for (seed, &wt) in models.iter().enumerate() {
        let model = QuantumTwoLevelModel::equally_spaced(wt).unwrap();
        let est = run_quantum_pair_protocol(&model, &RunOptions::new(60_000, seed as u64), &mut NullSink).unwrap();
        let lg = lg_statistic(&est).unwrap();
        let err = est.lg_stderr().unwrap();
        let point = est.correlator_point(&s).unwrap();
        let v = joint_exists(&correlations_to_marginals(&point, &s).unwrap(), &s).unwrap();
        if lg < -1.0 - 4.0 * err {
            assert_eq!(v.status, FeasibilityStatus::Infeasible, "omega tau {wt}");
        }
    }
}

#[test]
fn exact_quantum_point_is_infeasible() {
    let s = pair_scenario();
    let point = quantum_point(&QuantumTwoLevelModel::equally_spaced(2.0 * PI / 3.0).unwrap()).unwrap();
    let m = correlations_to_marginals(&point, &s).unwrap();
    let v = joint_exists(&m, &s).unwrap();
    assert_eq!(v.status, FeasibilityStatus::Infeasible);
    let cert = v.certificate.unwrap();
    for a in assignments(3) {
        assert!(cert.evaluate_assignment(&s, &a) >= ratio(0, 1));
    }
    let _ = CorrelationPoint::vertex(&s, &boole_core::Assignment::new(3, 0));
}
