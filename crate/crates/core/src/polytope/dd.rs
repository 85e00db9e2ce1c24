//! Double-description enumeration of the facets of a vertex hull.
//!
//! Each vertex `v` contributes the homogeneous constraint `c0 + c·v >= 0` on
//! the unknown inequality `(c0, c)`. Adding the constraints one vertex at a
//! time and keeping the extreme rays of the cone they cut out (adjacent rays
//! only, Chernikov's combinatorial test) leaves exactly the facet normals of
//! the hull once every vertex has been absorbed.

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Facets and affine-hull equations of a finite point set, as primitive
/// integer vectors `(c0, c_1, ..., c_d)` meaning `c0 + Σ c_k x_k >= 0`
/// (or `= 0` for equations).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Hull {
    pub facets: Vec<Vec<i64>>,
    pub equations: Vec<Vec<i64>>,
}

pub(crate) fn hull(points: &[Vec<i64>]) -> Result<Hull> {
    let dim = points.first().map_or(0, Vec::len);
    let rows: Vec<Vec<i128>> =
        points.iter().map(|p| std::iter::once(1i128).chain(p.iter().map(|&x| x as i128)).collect()).collect();

    // Columns of the homogenized vertex matrix that are linearly independent.
    // The remaining columns are affine functions of these on the point set
    // and give the implied equations.
    let (basis_cols, dependencies) = column_basis(&rows, dim + 1);

    let reduced: Vec<Vec<i128>> = rows.iter().map(|r| basis_cols.iter().map(|&c| r[c]).collect()).collect();
    let rays = extreme_rays(&reduced)?;

    let embed = |ray: &[i128]| -> Result<Vec<i64>> {
        let mut full = vec![0i64; dim + 1];
        for (k, &c) in basis_cols.iter().enumerate() {
            full[c] = ray[k].to_i64().ok_or(Error::Overflow("facet coefficients"))?;
        }
        Ok(full)
    };
    let facets = rays.iter().map(|r| embed(r)).collect::<Result<Vec<_>>>()?;

    let equations = dependencies
        .into_iter()
        .map(|(col, combo)| {
            // column `col` equals Σ combo_k · column basis_k on every row
            let mut eq: Vec<Rational> = vec![Rational::zero(); dim + 1];
            eq[col] = Rational::one();
            for (k, &c) in basis_cols.iter().enumerate() {
                eq[c] = -combo[k].clone();
            }
            primitive_from_rationals(&eq)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Hull { facets, equations })
}

/// Greedy column basis starting from column 0. Returns the basis and, for
/// every other column, its coefficients in that basis.
fn column_basis(rows: &[Vec<i128>], width: usize) -> (Vec<usize>, Vec<(usize, Vec<Rational>)>) {
    let mut basis: Vec<usize> = Vec::new();
    let mut dependent = Vec::new();
    for col in 0..width {
        let mut candidate = basis.clone();
        candidate.push(col);
        if rank(rows, &candidate) == candidate.len() {
            basis.push(col);
        } else {
            dependent.push(col);
        }
    }
    let deps = dependent.into_iter().map(|col| (col, solve_combination(rows, &basis, col))).collect();
    (basis, deps)
}

fn to_rational_matrix(rows: &[Vec<i128>], cols: &[usize]) -> Vec<Vec<Rational>> {
    rows.iter().map(|r| cols.iter().map(|&c| Rational::from_integer(BigInt::from(r[c]))).collect()).collect()
}

fn rank(rows: &[Vec<i128>], cols: &[usize]) -> usize {
    let mut m = to_rational_matrix(rows, cols);
    row_reduce(&mut m).len()
}

/// In-place reduced row echelon form; returns pivot columns.
fn row_reduce(m: &mut [Vec<Rational>]) -> Vec<usize> {
    let width = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..width {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let pivot_row = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(pivot_row.iter()) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    pivots
}

/// Solves `Σ x_k · rows[.][basis_k] = rows[.][target]`.
fn solve_combination(rows: &[Vec<i128>], basis: &[usize], target: usize) -> Vec<Rational> {
    let mut cols = basis.to_vec();
    cols.push(target);
    let mut m = to_rational_matrix(rows, &cols);
    let pivots = row_reduce(&mut m);
    let mut x = vec![Rational::zero(); basis.len()];
    for (r, &c) in pivots.iter().enumerate() {
        if c < basis.len() {
            x[c] = m[r][basis.len()].clone();
        }
    }
    x
}

fn primitive_from_rationals(v: &[Rational]) -> Result<Vec<i64>> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let g = if g.is_zero() { BigInt::one() } else { g };
    let mut out: Vec<i64> =
        ints.iter().map(|x| (x / &g).to_i64().ok_or(Error::Overflow("equation coefficients"))).collect::<Result<_>>()?;
    if let Some(first) = out.iter().find(|&&x| x != 0) {
        if *first < 0 {
            out.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(out)
}

struct Ray {
    coeffs: Vec<i128>,
    zeros: FixedBitSet,
}

fn dot(a: &[i128], b: &[i128]) -> Result<i128> {
    a.iter().zip(b).try_fold(0i128, |acc, (&x, &y)| {
        x.checked_mul(y).and_then(|p| acc.checked_add(p)).ok_or(Error::Overflow("double description"))
    })
}

fn make_primitive(v: &mut [i128]) {
    let g = v.iter().fold(0i128, |acc, &x| acc.gcd(&x));
    if g > 1 {
        v.iter_mut().for_each(|x| *x /= g);
    }
}

/// Extreme rays of `{y : A y >= 0}` for a full-column-rank `A`.
fn extreme_rays(rows: &[Vec<i128>]) -> Result<Vec<Vec<i128>>> {
    let width = rows.first().map_or(0, Vec::len);
    let m = rows.len();

    // initial simplicial cone from `width` independent rows
    let mut chosen: Vec<usize> = Vec::new();
    {
        let mut echelon: Vec<Vec<Rational>> = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let mut trial = echelon.clone();
            trial.push(row.iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect());
            if row_reduce(&mut trial.clone()).len() == trial.len() {
                echelon = trial;
                chosen.push(i);
                if chosen.len() == width {
                    break;
                }
            }
        }
    }
    debug_assert_eq!(chosen.len(), width);

    // columns of the inverse of the chosen rows
    let mut aug: Vec<Vec<Rational>> = chosen
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let mut r: Vec<Rational> = rows[i].iter().map(|&x| Rational::from_integer(BigInt::from(x))).collect();
            r.extend((0..width).map(|j| if j == k { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    row_reduce(&mut aug);
    let mut rays: Vec<Ray> = (0..width)
        .map(|k| {
            let col: Vec<Rational> = (0..width).map(|r| aug[r][width + k].clone()).collect();
            let ints = primitive_from_rationals_signed(&col)?;
            let mut zeros = FixedBitSet::with_capacity(m);
            for (j, &i) in chosen.iter().enumerate() {
                if j != k {
                    zeros.insert(i);
                }
            }
            Ok(Ray { coeffs: ints, zeros })
        })
        .collect::<Result<_>>()?;

    let mut is_chosen = vec![false; m];
    chosen.iter().for_each(|&i| is_chosen[i] = true);

    for (i, row) in rows.iter().enumerate() {
        if is_chosen[i] {
            continue;
        }
        let values = rays.iter().map(|r| dot(&r.coeffs, row)).collect::<Result<Vec<_>>>()?;
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| values[k] > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| values[k] < 0).collect();

        let mut fresh = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let mut common = rays[p].zeros.clone();
                common.intersect_with(&rays[q].zeros);
                if common.count_ones(..) + 2 < width {
                    continue;
                }
                let adjacent = !rays.iter().enumerate().any(|(k, r)| k != p && k != q && common.is_subset(&r.zeros));
                if !adjacent {
                    continue;
                }
                let (vp, vq) = (values[p], -values[q]);
                let mut coeffs = rays[q]
                    .coeffs
                    .iter()
                    .zip(&rays[p].coeffs)
                    .map(|(&a, &b)| {
                        vp.checked_mul(a)
                            .zip(vq.checked_mul(b))
                            .and_then(|(x, y)| x.checked_add(y))
                            .ok_or(Error::Overflow("double description"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                make_primitive(&mut coeffs);
                common.insert(i);
                fresh.push(Ray { coeffs, zeros: common });
            }
        }

        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            match values[k].signum() {
                1 => next.push(r),
                0 => {
                    r.zeros.insert(i);
                    next.push(r);
                }
                _ => {}
            }
        }
        next.extend(fresh);
        rays = next;
    }

    Ok(rays.into_iter().map(|r| r.coeffs).collect())
}

fn primitive_from_rationals_signed(v: &[Rational]) -> Result<Vec<i128>> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let g = if g.is_zero() { BigInt::one() } else { g.abs() };
    ints.iter().map(|x| (x / &g).to_i128().ok_or(Error::Overflow("initial cone"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_has_four_edges() {
        let pts = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]];
        let mut h = hull(&pts).unwrap();
        h.facets.sort();
        assert_eq!(h.facets, vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, -1, 0], vec![1, 0, -1]]);
        assert!(h.equations.is_empty());
    }

    #[test]
    fn interior_points_do_not_create_facets() {
        let pts = vec![vec![0, 0], vec![4, 0], vec![0, 4], vec![1, 1], vec![2, 1]];
        let h = hull(&pts).unwrap();
        assert_eq!(h.facets.len(), 3);
    }

    #[test]
    fn flat_point_set_reports_equation() {
        // points on the line y = x in the plane
        let pts = vec![vec![0, 0], vec![1, 1], vec![3, 3]];
        let mut h = hull(&pts).unwrap();
        h.facets.sort();
        assert_eq!(h.equations, vec![vec![0, 1, -1]]);
        assert_eq!(h.facets, vec![vec![0, 1, 0], vec![3, -1, 0]]);
    }

    #[test]
    fn cube_has_six_facets() {
        let mut pts = Vec::new();
        for mask in 0..8 {
            pts.push((0..3).map(|b| if mask >> b & 1 == 1 { 1 } else { -1 }).collect());
        }
        let h = hull(&pts).unwrap();
        assert_eq!(h.facets.len(), 6);
    }
}
