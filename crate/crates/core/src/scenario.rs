//! Measurement scenarios: ±1 observables plus the contexts measured jointly,
//! and the hypergraph reduction that decides whether the context family is
//! cyclic.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    pub id: usize,
    pub label: String,
}

impl Observable {
    /// Two-valued outcome set shared by every observable.
    pub const OUTCOMES: [i8; 2] = [-1, 1];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub id: usize,
    pub members: Vec<usize>,
}

impl Context {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, observable: usize) -> bool {
        self.members.contains(&observable)
    }

    /// Number of outcome tuples, `2^len`.
    pub fn table_len(&self) -> usize {
        1 << self.members.len()
    }

    /// Outcome of member at `position` in tuple `index`. Tuples are ordered
    /// lexicographically with `+` before `-`, so index 0 is all `+`.
    pub fn outcome(&self, index: usize, position: usize) -> i8 {
        tuple_sign(index, position, self.members.len())
    }
}

/// Sign of position `pos` in an `len`-long tuple encoded as a bitmask whose
/// most significant bit is position 0 and a set bit means `-1`.
#[inline]
pub fn tuple_sign(index: usize, pos: usize, len: usize) -> i8 {
    if (index >> (len - 1 - pos)) & 1 == 1 {
        -1
    } else {
        1
    }
}

/// Renders a tuple index as `+-` text.
pub fn tuple_string(index: usize, len: usize) -> String {
    (0..len).map(|p| if tuple_sign(index, p, len) > 0 { '+' } else { '-' }).collect()
}

/// Inverse of [`tuple_string`].
pub fn parse_tuple(text: &str) -> Result<usize> {
    let mut index = 0usize;
    for c in text.chars() {
        index <<= 1;
        match c {
            '+' => {}
            '-' => index |= 1,
            _ => return Err(Error::Validation(format!("bad outcome string {text:?}"))),
        }
    }
    Ok(index)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    observables: Vec<Observable>,
    contexts: Vec<Context>,
}

/// On-disk form: `{"observables":[labels],"contexts":[[indices]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub observables: Vec<String>,
    pub contexts: Vec<Vec<usize>>,
}

pub fn build_scenario<S: AsRef<str>>(labels: &[S], contexts: &[Vec<usize>]) -> Result<Scenario> {
    if labels.is_empty() {
        return Err(Error::Validation("scenario needs at least one observable".into()));
    }
    if contexts.is_empty() {
        return Err(Error::Validation("scenario needs at least one context".into()));
    }
    let mut seen = HashSet::new();
    let observables = labels
        .iter()
        .enumerate()
        .map(|(id, label)| {
            let label = label.as_ref().to_string();
            if label.is_empty() {
                return Err(Error::Validation(format!("observable {id} has an empty label")));
            }
            if !seen.insert(label.clone()) {
                return Err(Error::Validation(format!("duplicate observable label {label:?}")));
            }
            Ok(Observable { id, label })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut member_sets = HashSet::new();
    let contexts = contexts
        .iter()
        .enumerate()
        .map(|(id, members)| {
            if members.is_empty() {
                return Err(Error::Validation(format!("context {id} is empty")));
            }
            let set: BTreeSet<usize> = members.iter().copied().collect();
            if set.len() != members.len() {
                return Err(Error::Validation(format!("context {id} repeats an observable")));
            }
            if let Some(&bad) = set.iter().find(|&&m| m >= observables.len()) {
                return Err(Error::Validation(format!(
                    "context {id} references observable {bad}, only {} declared",
                    observables.len()
                )));
            }
            if !member_sets.insert(set) {
                return Err(Error::Validation(format!("context {id} duplicates an earlier context")));
            }
            Ok(Context { id, members: members.clone() })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Scenario { observables, contexts })
}

impl Scenario {
    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        build_scenario(&file.observables, &file.contexts)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Validation(format!("scenario JSON: {e}")))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            observables: self.observables.iter().map(|o| o.label.clone()).collect(),
            contexts: self.contexts.iter().map(|c| c.members.clone()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("scenario serializes")
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    pub fn context(&self, id: usize) -> Option<&Context> {
        self.contexts.get(id)
    }

    pub fn label(&self, id: usize) -> &str {
        &self.observables[id].label
    }

    /// Observables that appear in no context. Permitted, but worth a warning.
    pub fn uncovered_observables(&self) -> Vec<usize> {
        (0..self.observables.len()).filter(|&o| !self.contexts.iter().any(|c| c.contains(o))).collect()
    }

    pub fn warnings(&self) -> Vec<String> {
        self.uncovered_observables()
            .into_iter()
            .map(|o| format!("observable {} ({}) is not measured in any context", o, self.label(o)))
            .collect()
    }

    /// Unordered pairs `(i, j)`, `i < j`, that occur together in some context,
    /// sorted lexicographically. These are the pair-correlator coordinates.
    pub fn pair_coordinates(&self) -> Vec<(usize, usize)> {
        let mut pairs = BTreeSet::new();
        for c in &self.contexts {
            for (a, &i) in c.members.iter().enumerate() {
                for &j in &c.members[a + 1..] {
                    pairs.insert((i.min(j), i.max(j)));
                }
            }
        }
        pairs.into_iter().collect()
    }

    pub fn all_pairs(&self) -> bool {
        self.contexts.iter().all(|c| c.len() == 2)
    }
}

/// One admissible step of the acyclicity reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReductionStep {
    /// Drop an observable that occurs in exactly one remaining context.
    RemoveObservable(usize),
    /// Drop a context whose remaining members are contained in another
    /// remaining context (an emptied context counts as contained).
    RemoveContext(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicityReport {
    pub acyclic: bool,
    /// Contexts left when no step applies, as `(context id, remaining members)`.
    pub residual: Vec<(usize, Vec<usize>)>,
}

pub fn detect_cyclicity(s: &Scenario) -> CyclicityReport {
    reduce_with(s, |_| 0)
}

/// Runs the reduction, letting `pick` choose among the currently admissible
/// steps (it receives them in a fixed order and returns an index). The
/// outcome does not depend on the choices.
pub fn reduce_with<F>(s: &Scenario, mut pick: F) -> CyclicityReport
where
    F: FnMut(&[ReductionStep]) -> usize,
{
    let mut live: Vec<Option<BTreeSet<usize>>> = s.contexts().iter().map(|c| Some(c.members.iter().copied().collect())).collect();

    loop {
        let steps = admissible_steps(&live, s.num_observables());
        if steps.is_empty() {
            break;
        }
        let choice = pick(&steps).min(steps.len() - 1);
        match steps[choice] {
            ReductionStep::RemoveObservable(o) => {
                for set in live.iter_mut().flatten() {
                    set.remove(&o);
                }
            }
            ReductionStep::RemoveContext(c) => live[c] = None,
        }
    }

    let residual: Vec<(usize, Vec<usize>)> =
        live.into_iter().enumerate().filter_map(|(id, set)| set.map(|set| (id, set.into_iter().collect()))).collect();
    CyclicityReport { acyclic: residual.is_empty(), residual }
}

fn admissible_steps(live: &[Option<BTreeSet<usize>>], n: usize) -> Vec<ReductionStep> {
    let mut steps = Vec::new();
    for o in 0..n {
        let holders = live.iter().flatten().filter(|set| set.contains(&o)).count();
        if holders == 1 {
            steps.push(ReductionStep::RemoveObservable(o));
        }
    }
    let alive: Vec<usize> = (0..live.len()).filter(|&c| live[c].is_some()).collect();
    for &c in &alive {
        let set = live[c].as_ref().unwrap();
        let removable = set.is_empty() || alive.iter().any(|&other| other != c && set.is_subset(live[other].as_ref().unwrap()));
        if removable {
            steps.push(ReductionStep::RemoveContext(c));
        }
    }
    steps
}
