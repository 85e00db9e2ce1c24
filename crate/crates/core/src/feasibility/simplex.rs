//! Phase-one simplex over exact rationals for `A w = b, w >= 0`.
//!
//! Bland's rule is used for both the entering and leaving choice, so the
//! method terminates on degenerate problems. At optimality the duals of the
//! artificial rows give a Farkas vector when the system is infeasible.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Outcome {
    /// A basic feasible solution, one value per column of `A`.
    Feasible(Vec<Rational>),
    /// `y` with `yᵀA >= 0` column-wise and `yᵀb < 0`.
    Infeasible(Vec<Rational>),
}

/// `a` is dense row-major with `rows × cols` entries; `b >= 0` is required.
pub(crate) fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Outcome {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let width = cols + rows;
    debug_assert!(b.iter().all(|x| !x.is_negative()));

    // tableau [A | I | b], artificials basic
    let mut t: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut full = row.clone();
            full.extend((0..rows).map(|k| if k == r { Rational::one() } else { Rational::zero() }));
            full.push(b[r].clone());
            full
        })
        .collect();
    let mut basis: Vec<usize> = (cols..width).collect();

    // reduced costs for minimizing the artificial sum; last entry is -objective
    let mut cost: Vec<Rational> = vec![Rational::zero(); width + 1];
    for j in 0..cols {
        cost[j] = -t.iter().map(|row| row[j].clone()).sum::<Rational>();
    }
    cost[width] = -b.iter().cloned().sum::<Rational>();

    while let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..rows {
            if t[r][enter].is_positive() {
                let ratio = &t[r][width] / &t[r][enter];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // phase one is bounded below by zero, so a pivot row always exists
        let (pr, _) = leave.expect("phase-one objective is bounded");
        pivot(&mut t, &mut cost, pr, enter);
        basis[pr] = enter;
    }

    let objective = -cost[width].clone();
    if objective.is_zero() {
        let mut w = vec![Rational::zero(); cols];
        for (r, &v) in basis.iter().enumerate() {
            if v < cols {
                w[v] = t[r][width].clone();
            }
        }
        Outcome::Feasible(w)
    } else {
        // reduced cost of artificial k is 1 - π_k; the Farkas vector is -π
        let y = (0..rows).map(|k| &cost[cols + k] - Rational::one()).collect();
        Outcome::Infeasible(y)
    }
}

fn pivot(t: &mut [Vec<Rational>], cost: &mut [Rational], pr: usize, pc: usize) {
    let inv = t[pr][pc].recip();
    for x in t[pr].iter_mut() {
        *x *= &inv;
    }
    let pivot_row = t[pr].clone();
    for (r, row) in t.iter_mut().enumerate() {
        if r == pr || row[pc].is_zero() {
            continue;
        }
        let f = row[pc].clone();
        for (x, p) in row.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *x -= &f * p;
            }
        }
    }
    if !cost[pc].is_zero() {
        let f = cost[pc].clone();
        for (x, p) in cost.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *x -= &f * p;
            }
        }
    }
}
