//! Brute-force facet enumeration: every hyperplane through `d` of the points
//! that leaves all points on one side is a facet candidate.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Facets of the hull of full-dimensional integer points in `R^d`, as
/// primitive rows `(c0, c_1..c_d)` with `c0 + c·x >= 0` on every point.
pub fn brute_force_facets(points: &[Vec<i64>]) -> BTreeSet<Vec<i64>> {
    let d = points[0].len();
    let mut out = BTreeSet::new();
    for subset in combinations(points.len(), d) {
        let rows: Vec<Vec<BigInt>> = subset
            .iter()
            .map(|&k| std::iter::once(BigInt::from(1)).chain(points[k].iter().map(|&x| BigInt::from(x))).collect())
            .collect();
        let Some(normal) = one_dimensional_kernel(rows, d + 1) else { continue };
        let values: Vec<BigInt> = points
            .iter()
            .map(|p| normal[0].clone() + p.iter().zip(&normal[1..]).map(|(x, c)| c * BigInt::from(*x)).sum::<BigInt>())
            .collect();
        let sign = if values.iter().all(|v| !v.is_negative()) {
            1
        } else if values.iter().all(|v| !v.is_positive()) {
            -1
        } else {
            continue;
        };
        let mut row: Vec<BigInt> = normal.into_iter().map(|c| c * BigInt::from(sign)).collect();
        let g = row.iter().fold(BigInt::zero(), |acc, x| num_integer_gcd(&acc, x));
        row.iter_mut().for_each(|x| *x = &*x / &g);
        out.insert(row.iter().map(|x| i64::try_from(x).expect("small facet")).collect());
    }
    out
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Integer kernel vector when the kernel of `rows` (width `w`) is exactly
/// one-dimensional. Fraction-free elimination.
fn one_dimensional_kernel(mut rows: Vec<Vec<BigInt>>, w: usize) -> Option<Vec<BigInt>> {
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..w {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let (a, b) = (rows[r][c].clone(), rows[i][c].clone());
            let pivot = rows[r].clone();
            for (x, y) in rows[i].iter_mut().zip(&pivot) {
                *x = &*x * &a - y * &b;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if pivots.len() != w - 1 {
        return None;
    }
    let free = (0..w).find(|c| !pivots.contains(c)).unwrap();
    // x_free = product of pivot entries; each pivot variable solved from its row
    let lcm: BigInt = pivots.iter().enumerate().map(|(i, &c)| rows[i][c].abs()).product();
    let mut x = vec![BigInt::zero(); w];
    x[free] = lcm.clone();
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = -(&rows[i][free] * &lcm) / &rows[i][c];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let pts = vec![vec![0, 0], vec![1, 0], vec![0, 1]];
        let f = brute_force_facets(&pts);
        let expected: BTreeSet<Vec<i64>> = [vec![0, 1, 0], vec![0, 0, 1], vec![1, -1, -1]].into_iter().collect();
        assert_eq!(f, expected);
    }

    #[test]
    fn combination_count() {
        assert_eq!(combinations(8, 6).len(), 28);
        assert_eq!(combinations(4, 0), vec![Vec::<usize>::new()]);
    }
}
