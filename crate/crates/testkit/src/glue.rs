//! Explicit extension of consistent marginals on a join tree:
//! `p(x) = Π_k p_k(x_{C_k}) / Π_{k>0} p_k(x_{S_k})`, where each separator
//! `S_k` is the overlap of context `k` with everything before it.

use boole_core::polytope::{assignments, Assignment};
use boole_core::{ContextMarginal, JointDistribution, Rational, Scenario};
use num_traits::Zero;

/// Marginal of `table` (indexed over `members`) on `sub`.
fn sub_marginal(table: &[Rational], members: &[usize], sub: &[usize], a: &Assignment) -> Rational {
    let len = members.len();
    let mut total = Rational::zero();
    for (idx, p) in table.iter().enumerate() {
        let matches = sub.iter().all(|o| {
            let pos = members.iter().position(|m| m == o).unwrap();
            let sign = if (idx >> (len - 1 - pos)) & 1 == 1 { -1 } else { 1 };
            sign == a.value(*o)
        });
        if matches {
            total += p;
        }
    }
    total
}

/// Contexts must be listed in a running-intersection order.
pub fn glue(s: &Scenario, marginals: &[ContextMarginal]) -> JointDistribution {
    let n = s.num_observables();
    let contexts = s.contexts();
    let separators: Vec<Vec<usize>> = contexts
        .iter()
        .enumerate()
        .map(|(k, c)| c.members.iter().copied().filter(|o| contexts[..k].iter().any(|prev| prev.members.contains(o))).collect())
        .collect();

    let weights = assignments(n)
        .map(|a| {
            let mut w = Rational::from_integer(1.into());
            for (k, c) in contexts.iter().enumerate() {
                let table = &marginals.iter().find(|m| m.context == c.id).unwrap().table;
                let idx = c.members.iter().fold(0usize, |acc, &m| (acc << 1) | usize::from(a.value(m) < 0));
                let num = table[idx].clone();
                if num.is_zero() {
                    return Rational::zero();
                }
                let den = sub_marginal(table, &c.members, &separators[k], &a);
                w = w * num / den;
            }
            // observables in no context are split evenly
            let uncovered = (0..n).filter(|o| !contexts.iter().any(|c| c.members.contains(o))).count();
            w / Rational::from_integer((1i64 << uncovered).into())
        })
        .collect();
    JointDistribution::new(n, weights).expect("glued joint is a distribution")
}
