//! The marginal problem: do per-context outcome tables arise as projections
//! of one joint distribution over all ±1 assignments?

mod simplex;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::polytope::{self, Assignment, CorrelationPoint, Inequality};
use crate::rational::{self, Rational};
use crate::scenario::{self, Context, Scenario, ScenarioFile};

/// Outcome probabilities of one context, indexed by tuple (see
/// [`scenario::tuple_string`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextMarginal {
    pub context: usize,
    pub table: Vec<Rational>,
}

impl ContextMarginal {
    pub fn new(context: usize, table: Vec<Rational>) -> Self {
        Self { context, table }
    }

    /// Floats are read through their shortest decimal form, so `0.1` is
    /// exactly one tenth. A sum off from 1 by at most `1e-9` is rescaled
    /// exactly; anything further is rejected.
    pub fn from_f64(context: usize, table: &[f64]) -> Result<Self> {
        let mut exact = table
            .iter()
            .map(|x| {
                if !x.is_finite() {
                    return Err(Error::Validation(format!("non-finite probability {x}")));
                }
                rational::parse(&format!("{x:e}"))
            })
            .collect::<Result<Vec<_>>>()?;
        let total: Rational = exact.iter().cloned().sum();
        if !total.is_one() {
            let off = rational::to_f64(&(&total - Rational::one())).abs();
            if off > 1e-9 || total.is_zero() {
                return Err(Error::Validation(format!("context {context} table sums to {}", rational::to_f64(&total))));
            }
            exact.iter_mut().for_each(|x| *x = &*x / &total);
        }
        Ok(Self { context, table: exact })
    }

    pub fn validate(&self, s: &Scenario) -> Result<()> {
        let ctx = s
            .context(self.context)
            .ok_or_else(|| Error::Shape(format!("marginal refers to unknown context {}", self.context)))?;
        if self.table.len() != ctx.table_len() {
            return Err(Error::Shape(format!(
                "context {} needs {} entries, table has {}",
                self.context,
                ctx.table_len(),
                self.table.len()
            )));
        }
        if let Some((k, v)) = self.table.iter().enumerate().find(|(_, v)| v.is_negative()) {
            return Err(Error::Validation(format!(
                "context {} outcome {} has negative probability {v}",
                self.context,
                scenario::tuple_string(k, ctx.len())
            )));
        }
        let total: Rational = self.table.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::Validation(format!("context {} table sums to {total}, not 1", self.context)));
        }
        Ok(())
    }

    /// Marginal of this table on `sub`, a subset of the context's members,
    /// indexed in the order `sub` lists them.
    fn project(&self, ctx: &Context, sub: &[usize]) -> Vec<Rational> {
        let positions: Vec<usize> = sub.iter().map(|o| ctx.members.iter().position(|m| m == o).unwrap()).collect();
        let mut out = vec![Rational::zero(); 1 << sub.len()];
        for (idx, p) in self.table.iter().enumerate() {
            let key = positions.iter().fold(0usize, |acc, &pos| (acc << 1) | usize::from(ctx.outcome(idx, pos) < 0));
            out[key] += p;
        }
        out
    }
}

/// Weights over all `2^n` assignments in mask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    num_observables: usize,
    weights: Vec<Rational>,
}

impl JointDistribution {
    pub fn new(num_observables: usize, weights: Vec<Rational>) -> Result<Self> {
        if num_observables > polytope::MAX_OBSERVABLES {
            return Err(Error::Capacity { observables: num_observables, limit: polytope::MAX_OBSERVABLES });
        }
        if weights.len() != 1 << num_observables {
            return Err(Error::Shape(format!("expected {} weights, got {}", 1usize << num_observables, weights.len())));
        }
        if weights.iter().any(Signed::is_negative) {
            return Err(Error::Validation("joint distribution has a negative weight".into()));
        }
        let total: Rational = weights.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::Validation(format!("joint weights sum to {total}, not 1")));
        }
        Ok(Self { num_observables, weights })
    }

    pub fn uniform(num_observables: usize) -> Self {
        let size = 1usize << num_observables;
        Self { num_observables, weights: vec![rational::ratio(1, size as i64); size] }
    }

    pub fn point_mass(a: Assignment) -> Self {
        let mut weights = vec![Rational::zero(); 1 << a.len()];
        weights[a.mask() as usize] = Rational::one();
        Self { num_observables: a.len(), weights }
    }

    pub fn num_observables(&self) -> usize {
        self.num_observables
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, a: &Assignment) -> &Rational {
        &self.weights[a.mask() as usize]
    }

    pub fn project(&self, ctx: &Context) -> ContextMarginal {
        let mut table = vec![Rational::zero(); ctx.table_len()];
        for a in polytope::assignments(self.num_observables) {
            let w = &self.weights[a.mask() as usize];
            if !w.is_zero() {
                table[a.restrict(&ctx.members)] += w;
            }
        }
        ContextMarginal::new(ctx.id, table)
    }

    pub fn marginals(&self, s: &Scenario) -> Vec<ContextMarginal> {
        s.contexts().iter().map(|c| self.project(c)).collect()
    }

    pub fn correlations(&self, s: &Scenario) -> CorrelationPoint {
        let n = self.num_observables;
        let mut singles = vec![Rational::zero(); n];
        let mut pairs: BTreeMap<(usize, usize), Rational> =
            s.pair_coordinates().into_iter().map(|p| (p, Rational::zero())).collect();
        for a in polytope::assignments(n) {
            let w = &self.weights[a.mask() as usize];
            if w.is_zero() {
                continue;
            }
            for (i, m) in singles.iter_mut().enumerate() {
                *m += w * rational::int(a.value(i) as i64);
            }
            for (&(i, j), k) in pairs.iter_mut() {
                *k += w * rational::int((a.value(i) * a.value(j)) as i64);
            }
        }
        CorrelationPoint { singles, pairs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    /// Largest absolute difference between two contexts' sub-marginals on
    /// their shared observables.
    pub max_discrepancy: Rational,
    /// Context pair attaining the discrepancy, when nonzero.
    pub worst_pair: Option<(usize, usize)>,
}

fn marginals_by_context<'a>(marginals: &'a [ContextMarginal], s: &Scenario) -> Result<Vec<&'a ContextMarginal>> {
    let mut slots: Vec<Option<&ContextMarginal>> = vec![None; s.contexts().len()];
    for m in marginals {
        m.validate(s)?;
        if slots[m.context].replace(m).is_some() {
            return Err(Error::Shape(format!("context {} has more than one marginal", m.context)));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(c, m)| m.ok_or_else(|| Error::Shape(format!("no marginal supplied for context {c}"))))
        .collect()
}

pub fn check_consistency(marginals: &[ContextMarginal], s: &Scenario) -> Result<ConsistencyReport> {
    let ordered = marginals_by_context(marginals, s)?;
    let mut report = ConsistencyReport { consistent: true, max_discrepancy: Rational::zero(), worst_pair: None };
    let contexts = s.contexts();
    for a in 0..contexts.len() {
        for b in a + 1..contexts.len() {
            let shared: Vec<usize> = contexts[a].members.iter().copied().filter(|o| contexts[b].contains(*o)).collect::<Vec<_>>();
            if shared.is_empty() {
                continue;
            }
            let mut shared = shared;
            shared.sort_unstable();
            let pa = ordered[a].project(&contexts[a], &shared);
            let pb = ordered[b].project(&contexts[b], &shared);
            for (x, y) in pa.iter().zip(&pb) {
                let d = (x - y).abs();
                if d > report.max_discrepancy {
                    report.max_discrepancy = d;
                    report.worst_pair = Some((a, b));
                }
            }
        }
    }
    report.consistent = report.max_discrepancy.is_zero();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    InconsistentMarginals,
}

impl fmt::Display for FeasibilityStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Feasible => "feasible",
            Self::Infeasible => "infeasible",
            Self::InconsistentMarginals => "inconsistent-marginals",
        })
    }
}

/// Farkas functional over table entries: nonnegative on the marginals of
/// every deterministic assignment, negative on the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalCertificate {
    /// `coefficients[c][t]` multiplies the probability of tuple `t` in context `c`.
    pub coefficients: Vec<Vec<Rational>>,
    /// The same functional in correlation coordinates, when it involves no
    /// correlator of three or more observables.
    pub inequality: Option<Inequality>,
    /// Value on the input marginals (negative).
    pub value: Rational,
}

impl MarginalCertificate {
    pub fn evaluate(&self, marginals: &[ContextMarginal]) -> Rational {
        marginals.iter().map(|m| m.table.iter().zip(&self.coefficients[m.context]).map(|(p, y)| p * y).sum::<Rational>()).sum()
    }

    pub fn evaluate_assignment(&self, s: &Scenario, a: &Assignment) -> Rational {
        s.contexts().iter().map(|c| self.coefficients[c.id][a.restrict(&c.members)].clone()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityVerdict {
    pub status: FeasibilityStatus,
    pub witness: Option<JointDistribution>,
    pub certificate: Option<MarginalCertificate>,
    pub consistency: ConsistencyReport,
}

pub fn joint_exists(marginals: &[ContextMarginal], s: &Scenario) -> Result<FeasibilityVerdict> {
    polytope::check_capacity(s)?;
    let consistency = check_consistency(marginals, s)?;
    if !consistency.consistent {
        return Ok(FeasibilityVerdict {
            status: FeasibilityStatus::InconsistentMarginals,
            witness: None,
            certificate: None,
            consistency,
        });
    }
    let ordered = marginals_by_context(marginals, s)?;
    let n = s.num_observables();
    let columns = 1usize << n;

    // one row per (context, tuple)
    let mut row_of: Vec<(usize, usize)> = Vec::new();
    let mut a: Vec<Vec<Rational>> = Vec::new();
    let mut b: Vec<Rational> = Vec::new();
    for ctx in s.contexts() {
        for t in 0..ctx.table_len() {
            row_of.push((ctx.id, t));
            a.push(vec![Rational::zero(); columns]);
            b.push(ordered[ctx.id].table[t].clone());
        }
    }
    let first_row: Vec<usize> = s
        .contexts()
        .iter()
        .scan(0usize, |acc, c| {
            let start = *acc;
            *acc += c.table_len();
            Some(start)
        })
        .collect();
    for asg in polytope::assignments(n) {
        for ctx in s.contexts() {
            a[first_row[ctx.id] + asg.restrict(&ctx.members)][asg.mask() as usize] = Rational::one();
        }
    }

    match simplex::solve(&a, &b) {
        simplex::Outcome::Feasible(weights) => {
            let witness = JointDistribution::new(n, weights)?;
            debug_assert!(s.contexts().iter().all(|c| witness.project(c).table == ordered[c.id].table));
            Ok(FeasibilityVerdict { status: FeasibilityStatus::Feasible, witness: Some(witness), certificate: None, consistency })
        }
        simplex::Outcome::Infeasible(y) => {
            let mut coefficients: Vec<Vec<Rational>> =
                s.contexts().iter().map(|c| vec![Rational::zero(); c.table_len()]).collect();
            for (r, &(c, t)) in row_of.iter().enumerate() {
                coefficients[c][t] = y[r].clone();
            }
            let certificate = build_certificate(s, coefficients, marginals)?;
            Ok(FeasibilityVerdict {
                status: FeasibilityStatus::Infeasible,
                witness: None,
                certificate: Some(certificate),
                consistency,
            })
        }
    }
}

fn build_certificate(
    s: &Scenario,
    coefficients: Vec<Vec<Rational>>,
    marginals: &[ContextMarginal],
) -> Result<MarginalCertificate> {
    let mut cert = MarginalCertificate { coefficients, inequality: None, value: Rational::zero() };
    cert.value = cert.evaluate(marginals);
    if !cert.value.is_negative() {
        return Err(Error::Domain("Farkas vector does not separate the input".into()));
    }
    for a in polytope::assignments(s.num_observables()) {
        if cert.evaluate_assignment(s, &a).is_negative() {
            return Err(Error::Domain(format!("Farkas vector is negative on assignment {:?}", a.values())));
        }
    }
    cert.inequality = correlation_form(s, &cert.coefficients);
    Ok(cert)
}

/// Expands `Σ_c Σ_t y_c(t) p_c(t)` in products of observables, using
/// `p_c(t) = 2^-k Σ_S χ_S(t) ⟨Π_S Q⟩`. Returns `None` when a product of
/// three or more observables survives.
fn correlation_form(s: &Scenario, coefficients: &[Vec<Rational>]) -> Option<Inequality> {
    let n = s.num_observables();
    let mut constant = Rational::zero();
    let mut singles = vec![Rational::zero(); n];
    let mut pairs: BTreeMap<(usize, usize), Rational> = s.pair_coordinates().into_iter().map(|p| (p, Rational::zero())).collect();
    let mut higher = false;
    for ctx in s.contexts() {
        let k = ctx.len();
        let scale = rational::ratio(1, 1i64 << k);
        for subset in 0usize..1 << k {
            let coeff: Rational = (0..ctx.table_len())
                .map(|t| {
                    let chi: i8 = (0..k).filter(|&pos| subset >> pos & 1 == 1).map(|pos| ctx.outcome(t, pos)).product();
                    &coefficients[ctx.id][t] * rational::int(chi as i64)
                })
                .sum::<Rational>()
                * &scale;
            if coeff.is_zero() {
                continue;
            }
            let members: Vec<usize> = (0..k).filter(|&pos| subset >> pos & 1 == 1).map(|pos| ctx.members[pos]).collect();
            match members.as_slice() {
                [] => constant += coeff,
                [i] => singles[*i] += coeff,
                [i, j] => *pairs.get_mut(&((*i).min(*j), (*i).max(*j))).unwrap() += coeff,
                _ => higher = true,
            }
        }
    }
    if higher {
        return None;
    }
    Inequality::new(constant, singles, pairs.into_iter().collect()).ok()
}

/// Pair tables `p(a,b) = (1 + a⟨Q_i⟩ + b⟨Q_j⟩ + ab K_ij) / 4` for every
/// context, which must all be pairs.
pub fn correlations_to_marginals(p: &CorrelationPoint, s: &Scenario) -> Result<Vec<ContextMarginal>> {
    if !s.all_pairs() {
        return Err(Error::Shape("correlations determine tables only for pair contexts".into()));
    }
    if p.singles.len() != s.num_observables() {
        return Err(Error::Shape("point and scenario disagree on observable count".into()));
    }
    let quarter = rational::ratio(1, 4);
    s.contexts()
        .iter()
        .map(|ctx| {
            let (i, j) = (ctx.members[0], ctx.members[1]);
            let k = p.correlator(i, j).ok_or_else(|| Error::Shape(format!("point lacks correlator for context {}", ctx.id)))?;
            let table = (0..4)
                .map(|t| {
                    let (x, y) = (ctx.outcome(t, 0) as i64, ctx.outcome(t, 1) as i64);
                    (Rational::one()
                        + rational::int(x) * &p.singles[i]
                        + rational::int(y) * &p.singles[j]
                        + rational::int(x * y) * k)
                        * &quarter
                })
                .collect::<Vec<_>>();
            if let Some(t) = table.iter().position(Signed::is_negative) {
                return Err(Error::Domain(format!(
                    "context {} implies negative probability {} for outcome {}",
                    ctx.id,
                    table[t],
                    scenario::tuple_string(t, 2)
                )));
            }
            Ok(ContextMarginal::new(ctx.id, table))
        })
        .collect()
}

#[derive(Deserialize)]
struct MarginalFile {
    scenario: ScenarioFile,
    marginals: Vec<MarginalEntry>,
}

#[derive(Deserialize)]
struct MarginalEntry {
    context: usize,
    table: BTreeMap<String, serde_json::Value>,
}

fn probability(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::String(s) => rational::parse(s),
        serde_json::Value::Number(n) => rational::parse(&n.to_string()),
        other => Err(Error::Validation(format!("probability must be a string or number, got {other}"))),
    }
}

/// Reads `{"scenario": {...}, "marginals": [{"context": k, "table": {"++": p, ...}}]}`.
pub fn parse_marginal_file(text: &str) -> Result<(Scenario, Vec<ContextMarginal>)> {
    let file: MarginalFile = serde_json::from_str(text).map_err(|e| Error::Validation(format!("marginal JSON: {e}")))?;
    let s = Scenario::from_file(&file.scenario)?;
    let marginals = file
        .marginals
        .iter()
        .map(|entry| {
            let ctx = s
                .context(entry.context)
                .ok_or_else(|| Error::Validation(format!("marginal refers to unknown context {}", entry.context)))?;
            let mut table = vec![None; ctx.table_len()];
            for (key, value) in &entry.table {
                if key.len() != ctx.len() {
                    return Err(Error::Validation(format!("outcome {key:?} does not fit context {}", ctx.id)));
                }
                let idx = scenario::parse_tuple(key)?;
                table[idx] = Some(probability(value)?);
            }
            let table = table
                .into_iter()
                .enumerate()
                .map(|(t, p)| {
                    p.ok_or_else(|| {
                        Error::Validation(format!("context {} lacks outcome {}", ctx.id, scenario::tuple_string(t, ctx.len())))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let m = ContextMarginal::new(entry.context, table);
            m.validate(&s)?;
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((s, marginals))
}

/// Inverse of [`parse_marginal_file`], probabilities written as `p/q`.
pub fn marginal_file_json(s: &Scenario, marginals: &[ContextMarginal]) -> String {
    let entries: Vec<serde_json::Value> = marginals
        .iter()
        .map(|m| {
            let len = s.contexts()[m.context].len();
            let table: serde_json::Map<String, serde_json::Value> = m
                .table
                .iter()
                .enumerate()
                .map(|(t, p)| (scenario::tuple_string(t, len), serde_json::Value::String(rational::format_pq(p))))
                .collect();
            serde_json::json!({ "context": m.context, "table": table })
        })
        .collect();
    serde_json::json!({ "scenario": s.to_file(), "marginals": entries }).to_string()
}
