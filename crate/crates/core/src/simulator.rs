//! Seeded Monte Carlo runners for the triple-measurement, pair-measurement
//! and two-level quantum protocols.
//!
//! Runs are numbered from 1. Each run draws from its own random stream
//! (see [`crate::rng`]), so the record stream is a pure function of the
//! configuration and seed, independent of the worker count. Records reach
//! the sink in run order; estimators are merged from per-block partial sums.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::{ContextMarginal, JointDistribution};
use crate::polytope::{Assignment, CorrelationPoint};
use crate::rational::{self, Rational};
use crate::rng::{Categorical, StreamFactory};
use crate::scenario::{self, build_scenario, Scenario};

const BLOCK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Triple,
    Pair,
    Quantum,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Triple => "triple",
            Self::Pair => "pair",
            Self::Quantum => "quantum",
        })
    }
}

/// ±1 outcomes in context member order, packed as a tuple index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Outcomes {
    len: u8,
    index: u32,
}

impl Outcomes {
    pub fn new(len: usize, index: usize) -> Self {
        Self { len: len as u8, index: index as u32 }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn get(&self, position: usize) -> i8 {
        scenario::tuple_sign(self.index(), position, self.len())
    }

    pub fn values(&self) -> Vec<i8> {
        (0..self.len()).map(|p| self.get(p)).collect()
    }
}

impl fmt::Display for Outcomes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&scenario::tuple_string(self.index(), self.len()))
    }
}

/// One notebook entry: which run, which context, what was seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataRecord {
    pub run_index: u64,
    pub context: usize,
    pub outcomes: Outcomes,
    pub protocol: Protocol,
}

pub const RECORD_CSV_HEADER: &str = "k,context,outcomes,protocol";

impl DataRecord {
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.run_index, self.context, self.outcomes, self.protocol)
    }
}

pub trait RecordSink {
    fn accept(&mut self, record: &DataRecord) -> Result<()>;
}

impl RecordSink for Vec<DataRecord> {
    fn accept(&mut self, record: &DataRecord) -> Result<()> {
        self.push(*record);
        Ok(())
    }
}

/// Discards records; estimates are still produced.
pub struct NullSink;

impl RecordSink for NullSink {
    fn accept(&mut self, _: &DataRecord) -> Result<()> {
        Ok(())
    }
}

/// Streams records as CSV, header first.
pub struct CsvSink<W: Write> {
    out: W,
}

impl<W: Write> CsvSink<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{RECORD_CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for CsvSink<W> {
    fn accept(&mut self, r: &DataRecord) -> Result<()> {
        writeln!(self.out, "{}", r.csv_row())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub runs: u64,
    pub seed: u64,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn new(runs: u64, seed: u64) -> Self {
        Self { runs, seed, threads: None }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

/// Sample mean of a ±1 quantity with the `sqrt((1 - m^2) / N)` error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    #[serde(skip)]
    pub exact: Rational,
    pub count: u64,
    pub stderr: f64,
}

impl Estimate {
    fn from_tally(t: &Tally) -> Option<Self> {
        if t.count == 0 {
            return None;
        }
        let exact = Rational::new(t.sum.into(), t.count.into());
        let value = rational::to_f64(&exact);
        let stderr = ((1.0 - value * value).max(0.0) / t.count as f64).sqrt();
        Some(Self { value, exact, count: t.count, stderr })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    count: u64,
    sum: i64,
}

impl Tally {
    fn add(&mut self, v: i8) {
        self.count += 1;
        self.sum += v as i64;
    }

    fn merge(&mut self, other: &Tally) {
        self.count += other.count;
        self.sum += other.sum;
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Accumulator {
    singles: Vec<Tally>,
    pairs: BTreeMap<(usize, usize), Tally>,
}

impl Accumulator {
    fn new(s: &Scenario) -> Self {
        Self {
            singles: vec![Tally::default(); s.num_observables()],
            pairs: s.pair_coordinates().into_iter().map(|p| (p, Tally::default())).collect(),
        }
    }

    fn add(&mut self, s: &Scenario, r: &DataRecord) {
        let members = &s.contexts()[r.context].members;
        for (a, &i) in members.iter().enumerate() {
            let qi = r.outcomes.get(a);
            self.singles[i].add(qi);
            for (b, &j) in members.iter().enumerate().skip(a + 1) {
                let key = (i.min(j), i.max(j));
                self.pairs.get_mut(&key).expect("in-context pair").add(qi * r.outcomes.get(b));
            }
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.singles.iter_mut().zip(&other.singles) {
            a.merge(b);
        }
        for (k, t) in &other.pairs {
            self.pairs.get_mut(k).expect("same scenario").merge(t);
        }
        self
    }

    fn finish(&self) -> EstimatedCorrelations {
        EstimatedCorrelations {
            singles: self.singles.iter().map(Estimate::from_tally).collect(),
            pairs: self.pairs.iter().map(|(&k, t)| (k, Estimate::from_tally(t))).collect(),
        }
    }
}

/// Per-pair and per-observable estimates. `None` marks a coordinate that no
/// record measured.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedCorrelations {
    pub singles: Vec<Option<Estimate>>,
    pub pairs: BTreeMap<(usize, usize), Option<Estimate>>,
}

impl EstimatedCorrelations {
    pub fn pair(&self, i: usize, j: usize) -> Option<&Estimate> {
        self.pairs.get(&(i.min(j), i.max(j))).and_then(Option::as_ref)
    }

    /// Estimated correlators with singles set to zero, exactly as counted.
    pub fn correlator_point(&self, s: &Scenario) -> Result<CorrelationPoint> {
        let ks = s
            .pair_coordinates()
            .into_iter()
            .map(|(i, j)| {
                self.pair(i, j).map(|e| e.exact.clone()).ok_or_else(|| Error::Shape(format!("no estimate for pair ({i},{j})")))
            })
            .collect::<Result<Vec<_>>>()?;
        CorrelationPoint::from_correlators(s, &ks)
    }

    /// Standard error of the three-term statistic, errors added in quadrature.
    pub fn lg_stderr(&self) -> Result<f64> {
        let mut var = 0.0;
        for (i, j) in LG_PAIRS {
            let e = self.pair(i, j).ok_or_else(|| missing(i, j))?;
            var += e.stderr * e.stderr;
        }
        Ok(var.sqrt())
    }

    pub fn to_json(&self, s: &Scenario) -> serde_json::Value {
        let singles: serde_json::Map<String, serde_json::Value> =
            self.singles.iter().enumerate().map(|(i, e)| (s.label(i).to_string(), serde_json::to_value(e).unwrap())).collect();
        let pairs: serde_json::Map<String, serde_json::Value> = self
            .pairs
            .iter()
            .map(|(&(i, j), e)| (format!("{}{}", s.label(i), s.label(j)), serde_json::to_value(e).unwrap()))
            .collect();
        serde_json::json!({ "singles": singles, "pairs": pairs })
    }
}

const LG_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn missing(i: usize, j: usize) -> Error {
    Error::Shape(format!("correlator K({},{}) is absent", i + 1, j + 1))
}

/// Anything that can report the three correlators of observables 0, 1, 2.
pub trait PairCorrelations {
    fn correlator(&self, i: usize, j: usize) -> Option<f64>;
}

impl PairCorrelations for EstimatedCorrelations {
    fn correlator(&self, i: usize, j: usize) -> Option<f64> {
        self.pair(i, j).map(|e| e.value)
    }
}

impl PairCorrelations for CorrelationPoint {
    fn correlator(&self, i: usize, j: usize) -> Option<f64> {
        CorrelationPoint::correlator(self, i, j).map(rational::to_f64)
    }
}

/// `K12 + K13 + K23`; compare against -1.
pub fn lg_statistic<C: PairCorrelations>(c: &C) -> Result<f64> {
    LG_PAIRS.iter().try_fold(0.0, |acc, &(i, j)| Ok(acc + c.correlator(i, j).ok_or_else(|| missing(i, j))?))
}

/// Exact form of [`lg_statistic`] for a rational point.
pub fn lg_statistic_exact(p: &CorrelationPoint) -> Result<Rational> {
    LG_PAIRS.iter().try_fold(Rational::zero(), |acc, &(i, j)| Ok(acc + p.correlator(i, j).ok_or_else(|| missing(i, j))?))
}

fn build_pool(threads: Option<usize>) -> Result<Option<rayon::ThreadPool>> {
    threads
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Validation(format!("thread pool: {e}")))
        })
        .transpose()
}

/// Generates runs `1..=runs` in parallel blocks and hands them to `sink` in
/// order. `observe` folds each record into a per-block partial state.
fn drive<S, G, O, M>(
    opts: &RunOptions,
    sink: &mut dyn RecordSink,
    generate: G,
    init: impl Fn() -> S + Sync + Send,
    observe: O,
    merge: M,
) -> Result<S>
where
    S: Send,
    G: Fn(u64) -> DataRecord + Sync + Send,
    O: Fn(&mut S, &DataRecord) + Sync + Send,
    M: Fn(S, S) -> S + Sync + Send,
{
    if opts.runs == 0 {
        return Err(Error::Empty("zero runs requested".into()));
    }
    let pool = build_pool(opts.threads)?;
    let mut total = init();
    let mut start = 1u64;
    while start <= opts.runs {
        let end = (start + BLOCK - 1).min(opts.runs);
        let block = || {
            let records: Vec<DataRecord> = (start..=end).into_par_iter().map(&generate).collect();
            let partial = records
                .par_iter()
                .fold(&init, |mut acc, r| {
                    observe(&mut acc, r);
                    acc
                })
                .reduce(&init, &merge);
            (records, partial)
        };
        let (records, partial) = match &pool {
            Some(p) => p.install(block),
            None => block(),
        };
        for r in &records {
            sink.accept(r)?;
        }
        total = merge(total, partial);
        start = end + 1;
    }
    Ok(total)
}

/// Histogram and extremes of the per-run statistic `Q1Q2 + Q1Q3 + Q2Q3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleSummary {
    pub runs: u64,
    pub min: i64,
    pub max: i64,
    pub histogram: BTreeMap<i64, u64>,
    /// Average of the per-run statistic, equal to the sum of the three
    /// estimated correlators.
    #[serde(skip)]
    pub mean_exact: Rational,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleOutcome {
    pub estimates: EstimatedCorrelations,
    pub summary: TripleSummary,
}

/// Scenario with one context holding all three observables.
pub fn triple_scenario() -> Scenario {
    build_scenario(&["Q1", "Q2", "Q3"], &[vec![0, 1, 2]]).expect("static scenario")
}

/// Three observables measured pairwise: `{Q1Q2, Q1Q3, Q2Q3}`.
pub fn pair_scenario() -> Scenario {
    build_scenario(&["Q1", "Q2", "Q3"], &[vec![0, 1], vec![0, 2], vec![1, 2]]).expect("static scenario")
}

/// Protocol (i): every run records the full triple drawn from `joint`.
pub fn run_triple_protocol(
    s: &Scenario,
    joint: &JointDistribution,
    opts: &RunOptions,
    sink: &mut dyn RecordSink,
) -> Result<TripleOutcome> {
    if s.contexts().len() != 1 || s.contexts()[0].len() != 3 || s.num_observables() != 3 {
        return Err(Error::Validation("triple protocol needs three observables in a single context".into()));
    }
    if joint.num_observables() != 3 {
        return Err(Error::Shape("joint distribution must cover three observables".into()));
    }
    let ctx = s.contexts()[0].clone();
    let sampler = Categorical::from_rationals(joint.weights());
    let streams = StreamFactory::new(opts.seed);

    #[derive(Clone)]
    struct State {
        acc: Accumulator,
        hist: BTreeMap<i64, u64>,
        total: i64,
    }
    let init = || State { acc: Accumulator::new(s), hist: BTreeMap::new(), total: 0 };

    let state = drive(
        opts,
        sink,
        |k| {
            let a = Assignment::new(3, sampler.sample(&mut streams.stream(k)) as u32);
            DataRecord {
                run_index: k,
                context: ctx.id,
                outcomes: Outcomes::new(3, a.restrict(&ctx.members)),
                protocol: Protocol::Triple,
            }
        },
        init,
        |st, r| {
            st.acc.add(s, r);
            let q = r.outcomes.values();
            let stat = (q[0] * q[1] + q[0] * q[2] + q[1] * q[2]) as i64;
            *st.hist.entry(stat).or_default() += 1;
            st.total += stat;
        },
        |mut a, b| {
            a.acc = a.acc.merge(b.acc);
            for (k, v) in b.hist {
                *a.hist.entry(k).or_default() += v;
            }
            a.total += b.total;
            a
        },
    )?;

    let mean_exact = Rational::new(state.total.into(), (opts.runs as i64).into());
    let summary = TripleSummary {
        runs: opts.runs,
        min: *state.hist.keys().next().expect("nonempty"),
        max: *state.hist.keys().next_back().expect("nonempty"),
        histogram: state.hist,
        mean: rational::to_f64(&mean_exact),
        mean_exact,
    };
    Ok(TripleOutcome { estimates: state.acc.finish(), summary })
}

/// Maps run index to the context measured in that run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubensembleRule {
    /// Run `k` measures context `(k - 1) mod m`.
    RoundRobin,
    /// Run `k` measures `sequence[(k - 1) mod len]`.
    Cycle(Vec<usize>),
}

impl SubensembleRule {
    pub fn context_for(&self, run_index: u64, contexts: usize) -> usize {
        match self {
            Self::RoundRobin => ((run_index - 1) % contexts as u64) as usize,
            Self::Cycle(seq) => seq[((run_index - 1) % seq.len() as u64) as usize],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairProtocolConfig {
    pub scenario: Scenario,
    pub rule: SubensembleRule,
    /// One table per context, indexed by context id.
    pub tables: Vec<ContextMarginal>,
}

impl PairProtocolConfig {
    pub fn new(scenario: Scenario, rule: SubensembleRule, mut tables: Vec<ContextMarginal>) -> Result<Self> {
        if !scenario.all_pairs() {
            return Err(Error::Validation("pair protocol needs every context to be a pair".into()));
        }
        tables.sort_by_key(|t| t.context);
        if tables.len() != scenario.contexts().len() || tables.iter().enumerate().any(|(c, t)| t.context != c) {
            return Err(Error::Shape("pair protocol needs exactly one table per context".into()));
        }
        for t in &tables {
            t.validate(&scenario)?;
        }
        if let SubensembleRule::Cycle(seq) = &rule {
            if seq.is_empty() || seq.iter().any(|&c| c >= scenario.contexts().len()) {
                return Err(Error::Validation("subensemble sequence is empty or names an unknown context".into()));
            }
            if let Some(c) = (0..scenario.contexts().len()).find(|c| !seq.contains(c)) {
                return Err(Error::Validation(format!("subensemble rule never measures context {c}")));
            }
        }
        Ok(Self { scenario, rule, tables })
    }

    /// Three-time pair scenario, round robin, all tables from `correlators`
    /// (in order K12, K13, K23) with zero singles.
    pub fn from_correlators(correlators: [Rational; 3]) -> Result<Self> {
        let s = pair_scenario();
        let point = CorrelationPoint::from_correlators(&s, &correlators)?;
        let tables = crate::feasibility::correlations_to_marginals(&point, &s)?;
        Self::new(s, SubensembleRule::RoundRobin, tables)
    }

    /// Perfect anticorrelation in every context.
    pub fn anticorrelated() -> Self {
        let m1 = -Rational::one();
        Self::from_correlators([m1.clone(), m1.clone(), m1]).expect("valid preset")
    }
}

/// Protocol (ii): each run measures only the pair its subensemble assigns.
pub fn run_pair_protocol(
    cfg: &PairProtocolConfig,
    opts: &RunOptions,
    sink: &mut dyn RecordSink,
) -> Result<EstimatedCorrelations> {
    run_pairs_tagged(cfg, opts, sink, Protocol::Pair)
}

fn run_pairs_tagged(
    cfg: &PairProtocolConfig,
    opts: &RunOptions,
    sink: &mut dyn RecordSink,
    protocol: Protocol,
) -> Result<EstimatedCorrelations> {
    let s = &cfg.scenario;
    let m = s.contexts().len();
    let samplers: Vec<Categorical> = cfg.tables.iter().map(|t| Categorical::from_rationals(&t.table)).collect();
    let streams = StreamFactory::new(opts.seed);
    let acc = drive(
        opts,
        sink,
        |k| {
            let c = cfg.rule.context_for(k, m);
            let t = samplers[c].sample(&mut streams.stream(k));
            DataRecord { run_index: k, context: c, outcomes: Outcomes::new(2, t), protocol }
        },
        || Accumulator::new(s),
        |acc, r| acc.add(s, r),
        Accumulator::merge,
    )?;
    Ok(acc.finish())
}

/// Spin-1/2 precessing at angular frequency `omega`, measured along a fixed
/// axis at three increasing times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumTwoLevelModel {
    omega: f64,
    times: [f64; 3],
}

impl QuantumTwoLevelModel {
    pub fn new(omega: f64, times: [f64; 3]) -> Result<Self> {
        if !omega.is_finite() || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("model parameters must be finite".into()));
        }
        if !(times[0] < times[1] && times[1] < times[2]) {
            return Err(Error::Validation("measurement times must be strictly increasing".into()));
        }
        Ok(Self { omega, times })
    }

    /// Times `1, 2, 3` with `omega = omega_tau`.
    pub fn equally_spaced(omega_tau: f64) -> Result<Self> {
        Self::new(omega_tau, [1.0, 2.0, 3.0])
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn times(&self) -> [f64; 3] {
        self.times
    }
}

type Mat2 = [[f64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

/// Real propagator `exp(-i ω t σ_y / 2)` in the σ_z basis.
fn propagator(omega: f64, dt: f64) -> Mat2 {
    let (s, c) = (omega * dt / 2.0).sin_cos();
    [[c, -s], [s, c]]
}

/// Projector on σ_z = `outcome`.
fn projector(outcome: i8) -> Mat2 {
    if outcome > 0 {
        [[1.0, 0.0], [0.0, 0.0]]
    } else {
        [[0.0, 0.0], [0.0, 1.0]]
    }
}

fn check_times(i: usize, j: usize) -> Result<()> {
    if !(1..=3).contains(&i) || !(1..=3).contains(&j) || i >= j {
        return Err(Error::Index(format!("need time indices 1 <= i < j <= 3, got ({i}, {j})")));
    }
    Ok(())
}

/// Joint probabilities of the outcomes of two sequential projective
/// measurements at `t_i` and `t_j`, tuple order `++, +-, -+, --`. The state
/// is prepared at `t_1 - 1` in an equal mixture of the two eigenstates.
pub fn quantum_pair_table(model: &QuantumTwoLevelModel, i: usize, j: usize) -> Result<[f64; 4]> {
    check_times(i, j)?;
    let (ti, tj) = (model.times[i - 1], model.times[j - 1]);
    let t0 = model.times[0] - 1.0;
    let to_first = propagator(model.omega, ti - t0);
    let between = propagator(model.omega, tj - ti);
    let mut table = [0.0; 4];
    for prepared in [1i8, -1] {
        let rho0 = projector(prepared);
        let rho_i = mul(&mul(&to_first, &rho0), &transpose(&to_first));
        for (a_idx, a) in [1i8, -1].into_iter().enumerate() {
            let pa = projector(a);
            let collapsed = mul(&mul(&pa, &rho_i), &pa);
            let rho_j = mul(&mul(&between, &collapsed), &transpose(&between));
            for (b_idx, b) in [1i8, -1].into_iter().enumerate() {
                table[2 * a_idx + b_idx] += 0.5 * trace(&mul(&projector(b), &rho_j));
            }
        }
    }
    Ok(table)
}

/// `⟨Q(t_i) Q(t_j)⟩` from [`quantum_pair_table`].
pub fn quantum_pair_correlator(model: &QuantumTwoLevelModel, i: usize, j: usize) -> Result<f64> {
    let t = quantum_pair_table(model, i, j)?;
    Ok(t[0] - t[1] - t[2] + t[3])
}

/// Exact correlation point `(K12, K13, K23)` of the model on [`pair_scenario`].
pub fn quantum_point(model: &QuantumTwoLevelModel) -> Result<CorrelationPoint> {
    let ks = [(1, 2), (1, 3), (2, 3)]
        .iter()
        .map(|&(i, j)| rational::from_f64(quantum_pair_correlator(model, i, j)?.clamp(-1.0, 1.0)))
        .collect::<Result<Vec<_>>>()?;
    CorrelationPoint::from_correlators(&pair_scenario(), &ks)
}

/// Pair protocol on tables `(1 + ab K_ij) / 4` built from the model.
pub fn run_quantum_pair_protocol(
    model: &QuantumTwoLevelModel,
    opts: &RunOptions,
    sink: &mut dyn RecordSink,
) -> Result<EstimatedCorrelations> {
    let point = quantum_point(model)?;
    let s = pair_scenario();
    let tables = crate::feasibility::correlations_to_marginals(&point, &s)?;
    let cfg = PairProtocolConfig::new(s, SubensembleRule::RoundRobin, tables)?;
    run_pairs_tagged(&cfg, opts, sink, Protocol::Quantum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use std::f64::consts::PI;

    #[test]
    fn point_mass_triple() {
        let s = triple_scenario();
        let joint = JointDistribution::point_mass(Assignment::new(3, 0));
        let mut records = Vec::new();
        let out = run_triple_protocol(&s, &joint, &RunOptions::new(500, 9), &mut records).unwrap();
        assert_eq!(records.len(), 500);
        assert_eq!(out.summary.min, 3);
        assert_eq!(out.summary.histogram, BTreeMap::from([(3, 500)]));
        for (i, j) in LG_PAIRS {
            assert_eq!(out.estimates.pair(i, j).unwrap().exact, int(1));
        }
        assert_eq!(records[0].run_index, 1);
        assert_eq!(records[499].run_index, 500);
    }

    #[test]
    fn triple_rejects_pair_scenario_and_zero_runs() {
        let joint = JointDistribution::uniform(3);
        assert!(run_triple_protocol(&pair_scenario(), &joint, &RunOptions::new(10, 1), &mut NullSink).is_err());
        let r = run_triple_protocol(&triple_scenario(), &joint, &RunOptions::new(0, 1), &mut NullSink);
        assert!(matches!(r, Err(Error::Empty(_))));
    }

    #[test]
    fn round_robin_labels() {
        let rule = SubensembleRule::RoundRobin;
        let got: Vec<usize> = (1..=7).map(|k| rule.context_for(k, 3)).collect();
        assert_eq!(got, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn absent_context_is_flagged() {
        let cfg = PairProtocolConfig::anticorrelated();
        let est = run_pair_protocol(&cfg, &RunOptions::new(2, 5), &mut NullSink).unwrap();
        assert!(est.pair(0, 1).is_some());
        assert!(est.pair(0, 2).is_some());
        assert!(est.pair(1, 2).is_none());
        assert!(matches!(lg_statistic(&est), Err(Error::Shape(_))));
    }

    #[test]
    fn pair_config_validation() {
        let s = pair_scenario();
        let tables: Vec<ContextMarginal> = (0..3).map(|c| ContextMarginal::new(c, vec![ratio(1, 4); 4])).collect();
        assert!(PairProtocolConfig::new(s.clone(), SubensembleRule::Cycle(vec![0, 1]), tables.clone()).is_err());
        assert!(PairProtocolConfig::new(s.clone(), SubensembleRule::Cycle(vec![2, 1, 0]), tables.clone()).is_ok());
        assert!(PairProtocolConfig::new(s.clone(), SubensembleRule::RoundRobin, tables[..2].to_vec()).is_err());
        assert!(PairProtocolConfig::new(triple_scenario(), SubensembleRule::RoundRobin, vec![]).is_err());
    }

    #[test]
    fn lg_statistic_values() {
        let s = pair_scenario();
        let p = |k: Rational| CorrelationPoint::from_correlators(&s, &[k.clone(), k.clone(), k]).unwrap();
        assert_eq!(lg_statistic_exact(&p(int(1))).unwrap(), int(3));
        assert_eq!(lg_statistic_exact(&p(int(-1))).unwrap(), int(-3));
        assert_eq!(lg_statistic_exact(&p(ratio(-1, 2))).unwrap(), ratio(-3, 2));
        assert_eq!(lg_statistic(&p(ratio(-1, 2))).unwrap(), -1.5);
        let chain = build_scenario(&["A", "B", "C"], &[vec![0, 1], vec![1, 2]]).unwrap();
        let q = CorrelationPoint::from_correlators(&chain, &[int(0), int(0)]).unwrap();
        assert!(matches!(lg_statistic(&q), Err(Error::Shape(_))));
    }

    #[test]
    fn quantum_correlator_special_values() {
        let still = QuantumTwoLevelModel::new(0.0, [0.0, 1.0, 2.0]).unwrap();
        assert!((quantum_pair_correlator(&still, 1, 2).unwrap() - 1.0).abs() < 1e-15);
        let half = QuantumTwoLevelModel::equally_spaced(PI).unwrap();
        assert!((quantum_pair_correlator(&half, 1, 2).unwrap() + 1.0).abs() < 1e-15);
        let third = QuantumTwoLevelModel::equally_spaced(2.0 * PI / 3.0).unwrap();
        for (i, j) in [(1, 2), (2, 3), (1, 3)] {
            assert!((quantum_pair_correlator(&third, i, j).unwrap() + 0.5).abs() < 1e-12);
        }
        let quarter = QuantumTwoLevelModel::equally_spaced(PI / 2.0).unwrap();
        assert!(quantum_pair_correlator(&quarter, 1, 2).unwrap().abs() < 1e-12);
        assert!((quantum_pair_correlator(&quarter, 1, 3).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantum_index_and_model_errors() {
        let m = QuantumTwoLevelModel::equally_spaced(1.0).unwrap();
        assert!(matches!(quantum_pair_correlator(&m, 2, 1), Err(Error::Index(_))));
        assert!(matches!(quantum_pair_correlator(&m, 2, 2), Err(Error::Index(_))));
        assert!(matches!(quantum_pair_correlator(&m, 0, 2), Err(Error::Index(_))));
        assert!(QuantumTwoLevelModel::new(1.0, [0.0, 0.0, 1.0]).is_err());
        assert!(QuantumTwoLevelModel::new(f64::NAN, [0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn quantum_singles_vanish() {
        let m = QuantumTwoLevelModel::equally_spaced(0.7).unwrap();
        let t = quantum_pair_table(&m, 1, 3).unwrap();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((t[0] + t[1] - 0.5).abs() < 1e-15);
        assert!((t[0] + t[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_rows() {
        let r = DataRecord { run_index: 4, context: 2, outcomes: Outcomes::new(2, 1), protocol: Protocol::Pair };
        assert_eq!(r.csv_row(), "4,2,+-,pair");
        let mut sink = CsvSink::new(Vec::new()).unwrap();
        sink.accept(&r).unwrap();
        assert_eq!(String::from_utf8(sink.into_inner()).unwrap(), "k,context,outcomes,protocol\n4,2,+-,pair\n");
    }
}
