//! Seeded generators for test instances.

use boole_core::polytope::assignments;
use boole_core::{build_scenario, JointDistribution, Rational, Scenario};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random acyclic scenario with at most `max_observables` observables. Each
/// new context is a subset of an earlier one plus fresh observables, so
/// listing contexts in creation order has the running-intersection property.
pub fn acyclic_scenario<R: Rng>(rng: &mut R, max_observables: usize) -> Scenario {
    let target = rng.random_range(1..=max_observables);
    let mut contexts: Vec<Vec<usize>> = Vec::new();
    let mut next = 0usize;
    let first = rng.random_range(1..=target.min(3));
    contexts.push((0..first).collect());
    next += first;
    while next < target {
        let parent = contexts[rng.random_range(0..contexts.len())].clone();
        let keep = rng.random_range(0..=parent.len());
        let mut sep = parent.clone();
        sep.shuffle(rng);
        sep.truncate(keep);
        let fresh = rng.random_range(1..=(target - next).min(2));
        let mut members: Vec<usize> = sep.into_iter().chain(next..next + fresh).collect();
        next += fresh;
        members.shuffle(rng);
        contexts.push(members);
    }
    let labels: Vec<String> = (0..next).map(|i| format!("Q{}", i + 1)).collect();
    build_scenario(&labels, &contexts).expect("generated scenario is valid")
}

/// Joint with small random integer weights, some of them zero.
pub fn joint<R: Rng>(rng: &mut R, n: usize) -> JointDistribution {
    let mut raw: Vec<i64> = assignments(n).map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(1..=6) }).collect();
    if raw.iter().all(|&w| w == 0) {
        raw[0] = 1;
    }
    let total: i64 = raw.iter().sum();
    JointDistribution::new(n, raw.into_iter().map(|w| Rational::new(w.into(), total.into())).collect()).unwrap()
}
