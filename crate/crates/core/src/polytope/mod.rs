//! Correlation polytope of a scenario: deterministic ±1 assignments, their
//! correlation images, and the facet inequalities of the convex hull.

mod dd;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::scenario::Scenario;

/// Largest scenario whose assignments we are willing to enumerate.
pub const MAX_OBSERVABLES: usize = 24;

pub fn check_capacity(s: &Scenario) -> Result<()> {
    if s.num_observables() > MAX_OBSERVABLES {
        return Err(Error::Capacity { observables: s.num_observables(), limit: MAX_OBSERVABLES });
    }
    Ok(())
}

/// Deterministic valuation of every observable. Bit `n - 1 - i` of the mask
/// set means observable `i` takes `-1`, so masks count through assignments
/// in lexicographic `+`-first order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    n: usize,
    mask: u32,
}

impl Assignment {
    pub fn new(n: usize, mask: u32) -> Self {
        debug_assert!(n <= 32 && (n == 32 || mask >> n == 0));
        Self { n, mask }
    }

    pub fn from_values(values: &[i8]) -> Self {
        let n = values.len();
        let mask = values.iter().enumerate().fold(0u32, |m, (i, &v)| if v < 0 { m | 1 << (n - 1 - i) } else { m });
        Self { n, mask }
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn value(&self, observable: usize) -> i8 {
        if (self.mask >> (self.n - 1 - observable)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn values(&self) -> Vec<i8> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    /// Index of the outcome tuple this assignment induces on `members`.
    pub fn restrict(&self, members: &[usize]) -> usize {
        members.iter().fold(0usize, |idx, &m| (idx << 1) | usize::from(self.value(m) < 0))
    }
}

/// Which correlation coordinates an inequality or point is expressed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSet {
    pub num_observables: usize,
    /// Observables whose mean ⟨Q_i⟩ is a coordinate, ascending.
    pub singles: Vec<usize>,
    /// Pair correlators K_ij, lexicographic.
    pub pairs: Vec<(usize, usize)>,
}

impl CoordinateSet {
    /// Every single plus every in-context pair.
    pub fn full(s: &Scenario) -> Self {
        Self { num_observables: s.num_observables(), singles: (0..s.num_observables()).collect(), pairs: s.pair_coordinates() }
    }

    /// Pair correlators only; the image of the polytope with singles dropped.
    pub fn correlators(s: &Scenario) -> Self {
        Self { num_observables: s.num_observables(), singles: Vec::new(), pairs: s.pair_coordinates() }
    }

    pub fn dim(&self) -> usize {
        self.singles.len() + self.pairs.len()
    }

    pub fn column_names(&self, s: &Scenario) -> Vec<String> {
        self.singles
            .iter()
            .map(|&i| format!("<{}>", s.label(i)))
            .chain(self.pairs.iter().map(|&(i, j)| format!("<{}{}>", s.label(i), s.label(j))))
            .collect()
    }

    fn coordinates_of(&self, a: &Assignment) -> Vec<i64> {
        self.singles
            .iter()
            .map(|&i| a.value(i) as i64)
            .chain(self.pairs.iter().map(|&(i, j)| (a.value(i) * a.value(j)) as i64))
            .collect()
    }
}

/// Single means and in-context pair correlators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationPoint {
    pub singles: Vec<Rational>,
    pub pairs: BTreeMap<(usize, usize), Rational>,
}

impl CorrelationPoint {
    /// Validates coordinate ranges and that the pair set matches the
    /// scenario's in-context pairs.
    pub fn new(s: &Scenario, singles: Vec<Rational>, pairs: BTreeMap<(usize, usize), Rational>) -> Result<Self> {
        if singles.len() != s.num_observables() {
            return Err(Error::Shape(format!("expected {} singles, got {}", s.num_observables(), singles.len())));
        }
        let expected = s.pair_coordinates();
        if !pairs.keys().copied().eq(expected.iter().copied()) {
            return Err(Error::Shape("pair correlators do not match the scenario's in-context pairs".into()));
        }
        for (k, v) in singles.iter().enumerate() {
            if !rational::in_signed_unit(v) {
                return Err(Error::Domain(format!("<Q{}> = {} outside [-1, 1]", k, v)));
            }
        }
        for (&(i, j), v) in &pairs {
            if !rational::in_signed_unit(v) {
                return Err(Error::Domain(format!("K({i},{j}) = {v} outside [-1, 1]")));
            }
        }
        Ok(Self { singles, pairs })
    }

    /// Pair correlators listed in lexicographic pair order, with zero singles.
    pub fn from_correlators(s: &Scenario, correlators: &[Rational]) -> Result<Self> {
        let pairs = s.pair_coordinates();
        if pairs.len() != correlators.len() {
            return Err(Error::Shape(format!("expected {} correlators, got {}", pairs.len(), correlators.len())));
        }
        let map = pairs.into_iter().zip(correlators.iter().cloned()).collect();
        Self::new(s, vec![Rational::zero(); s.num_observables()], map)
    }

    pub fn from_f64(s: &Scenario, singles: &[f64], correlators: &[f64]) -> Result<Self> {
        let singles = singles.iter().map(|&x| rational::from_f64(x)).collect::<Result<Vec<_>>>()?;
        let pairs = s.pair_coordinates();
        if pairs.len() != correlators.len() {
            return Err(Error::Shape(format!("expected {} correlators, got {}", pairs.len(), correlators.len())));
        }
        let map = pairs.into_iter().zip(correlators).map(|(p, &k)| Ok((p, rational::from_f64(k)?))).collect::<Result<_>>()?;
        Self::new(s, singles, map)
    }

    pub fn vertex(s: &Scenario, a: &Assignment) -> Self {
        let singles = (0..s.num_observables()).map(|i| rational::int(a.value(i) as i64)).collect();
        let pairs =
            s.pair_coordinates().into_iter().map(|(i, j)| ((i, j), rational::int((a.value(i) * a.value(j)) as i64))).collect();
        Self { singles, pairs }
    }

    pub fn correlator(&self, i: usize, j: usize) -> Option<&Rational> {
        self.pairs.get(&(i.min(j), i.max(j)))
    }
}

/// `constant + Σ single_coeffs·⟨Q_i⟩ + Σ pair_coeffs·K_ij >= 0`, stored as a
/// primitive integer vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub constant: Rational,
    /// One entry per observable; zero where the single is not a coordinate.
    pub single_coeffs: Vec<Rational>,
    pub pair_coeffs: Vec<((usize, usize), Rational)>,
}

impl Inequality {
    /// Builds and canonicalizes: denominators cleared and the gcd divided
    /// out. Only positive scaling is applied, so the sense is preserved.
    pub fn new(constant: Rational, single_coeffs: Vec<Rational>, pair_coeffs: Vec<((usize, usize), Rational)>) -> Result<Self> {
        if single_coeffs.iter().all(Zero::is_zero) && pair_coeffs.iter().all(|(_, c)| c.is_zero()) {
            return Err(Error::Validation("inequality has no nonzero coefficient".into()));
        }
        let mut ineq = Self { constant, single_coeffs, pair_coeffs };
        ineq.normalize_scale();
        Ok(ineq)
    }

    fn entries(&self) -> impl Iterator<Item = &Rational> {
        std::iter::once(&self.constant).chain(&self.single_coeffs).chain(self.pair_coeffs.iter().map(|(_, c)| c))
    }

    fn entries_mut(&mut self) -> impl Iterator<Item = &mut Rational> {
        std::iter::once(&mut self.constant)
            .chain(self.single_coeffs.iter_mut())
            .chain(self.pair_coeffs.iter_mut().map(|(_, c)| c))
    }

    fn normalize_scale(&mut self) {
        let lcm = self.entries().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let gcd = self
            .entries()
            .map(|x| (x * Rational::from_integer(lcm.clone())).to_integer())
            .fold(BigInt::zero(), |acc, x| acc.gcd(&x));
        if gcd.is_zero() {
            return;
        }
        let scale = Rational::new(lcm, gcd.abs());
        for e in self.entries_mut() {
            *e = &*e * &scale;
        }
    }

    fn from_integer_row(coords: &CoordinateSet, row: &[i64]) -> Result<Self> {
        let mut singles = vec![Rational::zero(); coords.num_observables];
        for (k, &i) in coords.singles.iter().enumerate() {
            singles[i] = rational::int(row[1 + k]);
        }
        let off = 1 + coords.singles.len();
        let pairs = coords.pairs.iter().enumerate().map(|(k, &p)| (p, rational::int(row[off + k]))).collect();
        Self::new(rational::int(row[0]), singles, pairs)
    }

    pub fn is_correlator_only(&self) -> bool {
        self.single_coeffs.iter().all(Zero::is_zero)
    }

    pub fn pair_coeff(&self, i: usize, j: usize) -> Option<&Rational> {
        let key = (i.min(j), i.max(j));
        self.pair_coeffs.iter().find(|(p, _)| *p == key).map(|(_, c)| c)
    }

    /// Human-readable form with the constant on the right, e.g.
    /// `<Q1Q2> + <Q1Q3> + <Q2Q3> >= -1`.
    pub fn render(&self, s: &Scenario, relation: &str) -> String {
        let mut terms: Vec<(Rational, String)> = Vec::new();
        for (i, c) in self.single_coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.push((c.clone(), format!("<{}>", s.label(i))));
            }
        }
        for ((i, j), c) in &self.pair_coeffs {
            if !c.is_zero() {
                terms.push((c.clone(), format!("<{}{}>", s.label(*i), s.label(*j))));
            }
        }
        let mut out = String::new();
        for (k, (c, name)) in terms.iter().enumerate() {
            let magnitude = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            match (k, c.is_negative()) {
                (0, false) => {}
                (0, true) => out.push('-'),
                _ => {
                    let _ = write!(out, " {sign} ");
                }
            }
            if !magnitude.is_one() {
                let _ = write!(out, "{magnitude}*");
            }
            out.push_str(name);
        }
        let _ = write!(out, " {relation} {}", -self.constant.clone());
        out
    }

    fn sort_key(&self) -> (usize, Vec<Rational>, Rational) {
        let nonzero_singles = self.single_coeffs.iter().filter(|c| !c.is_zero()).count();
        let coeffs = self.single_coeffs.iter().chain(self.pair_coeffs.iter().map(|(_, c)| c)).map(|c| -c.clone()).collect();
        (nonzero_singles, coeffs, self.constant.clone())
    }
}

/// `constant + Σ coeffs·coords`; nonnegative means satisfied.
pub fn evaluate(ineq: &Inequality, p: &CorrelationPoint) -> Result<Rational> {
    if ineq.single_coeffs.len() != p.singles.len() {
        return Err(Error::Shape(format!(
            "inequality has {} single coefficients, point has {} singles",
            ineq.single_coeffs.len(),
            p.singles.len()
        )));
    }
    let mut total = ineq.constant.clone();
    for (c, x) in ineq.single_coeffs.iter().zip(&p.singles) {
        total += c * x;
    }
    for (pair, c) in &ineq.pair_coeffs {
        let x = p.pairs.get(pair).ok_or_else(|| Error::Shape(format!("point lacks correlator K{:?}", pair)))?;
        total += c * x;
    }
    Ok(total)
}

/// Correlation images of all `2^n` assignments, in mask order.
pub fn enumerate_vertices(s: &Scenario) -> Result<Vec<CorrelationPoint>> {
    check_capacity(s)?;
    let n = s.num_observables();
    Ok((0..1u32 << n).into_par_iter().map(|mask| CorrelationPoint::vertex(s, &Assignment::new(n, mask))).collect())
}

pub fn assignments(n: usize) -> impl Iterator<Item = Assignment> {
    (0..1u32 << n).map(move |mask| Assignment::new(n, mask))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetSet {
    pub coordinates: CoordinateSet,
    pub facets: Vec<Inequality>,
    /// Equations satisfied by every vertex, reported apart from the facets.
    pub implied_equations: Vec<Inequality>,
}

impl FacetSet {
    pub fn correlator_only(&self) -> impl Iterator<Item = &Inequality> {
        self.facets.iter().filter(|f| f.is_correlator_only())
    }

    /// CSV with header `constant,<coordinate columns>` and every value as `p/q`.
    pub fn to_csv(&self, s: &Scenario) -> String {
        let mut out = String::from("constant");
        for name in self.coordinates.column_names(s) {
            out.push(',');
            out.push_str(&name);
        }
        out.push('\n');
        for f in &self.facets {
            out.push_str(&rational::format_pq(&f.constant));
            for &i in &self.coordinates.singles {
                out.push(',');
                out.push_str(&rational::format_pq(&f.single_coeffs[i]));
            }
            for (_, c) in &f.pair_coeffs {
                out.push(',');
                out.push_str(&rational::format_pq(c));
            }
            out.push('\n');
        }
        out
    }
}

/// Facets of the correlation polytope in the full coordinate set.
pub fn derive_facets(s: &Scenario) -> Result<FacetSet> {
    derive_facets_in(s, &CoordinateSet::full(s))
}

/// Facets of the polytope's image in `coords`. Dropping coordinates is a
/// projection, so this is the hull of the projected vertices.
pub fn derive_facets_in(s: &Scenario, coords: &CoordinateSet) -> Result<FacetSet> {
    check_capacity(s)?;
    if coords.num_observables != s.num_observables() {
        return Err(Error::Shape("coordinate set belongs to a different scenario".into()));
    }
    if coords.dim() == 0 {
        return Err(Error::Shape("empty coordinate set".into()));
    }
    let mut points: Vec<Vec<i64>> = assignments(s.num_observables()).map(|a| coords.coordinates_of(&a)).collect();
    points.sort();
    points.dedup();

    let hull = dd::hull(&points)?;
    let mut facets = hull.facets.iter().map(|row| Inequality::from_integer_row(coords, row)).collect::<Result<Vec<_>>>()?;
    facets.sort_by_cached_key(Inequality::sort_key);
    facets.dedup();
    let mut implied_equations =
        hull.equations.iter().map(|row| Inequality::from_integer_row(coords, row)).collect::<Result<Vec<_>>>()?;
    implied_equations.sort_by_cached_key(Inequality::sort_key);
    Ok(FacetSet { coordinates: coords.clone(), facets, implied_equations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use crate::scenario::build_scenario;

    fn lg() -> Scenario {
        build_scenario(&["Q1", "Q2", "Q3"], &[vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap()
    }

    fn boole_inequality(s: &Scenario) -> Inequality {
        Inequality::new(int(1), vec![int(0); 3], s.pair_coordinates().into_iter().map(|p| (p, int(1))).collect()).unwrap()
    }

    #[test]
    fn two_observable_vertices() {
        let s = build_scenario(&["Q1", "Q2"], &[vec![0, 1]]).unwrap();
        let v = enumerate_vertices(&s).unwrap();
        let got: Vec<(i64, i64, i64)> = v
            .iter()
            .map(|p| {
                let k = p.correlator(0, 1).unwrap();
                (
                    p.singles[0].to_integer().try_into().unwrap(),
                    p.singles[1].to_integer().try_into().unwrap(),
                    k.to_integer().try_into().unwrap(),
                )
            })
            .collect();
        assert_eq!(got, vec![(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]);
    }

    #[test]
    fn single_observable_vertices_and_facets() {
        let s = build_scenario(&["Q1"], &[vec![0]]).unwrap();
        let v = enumerate_vertices(&s).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v[0].pairs.is_empty());
        let f = derive_facets(&s).unwrap();
        let rendered: Vec<String> = f.facets.iter().map(|i| i.render(&s, ">=")).collect();
        assert_eq!(rendered, vec!["<Q1> >= -1", "-<Q1> >= -1"]);
    }

    #[test]
    fn evaluate_boole_inequality() {
        let s = lg();
        let ineq = boole_inequality(&s);
        let all = |k: i64| CorrelationPoint::from_correlators(&s, &[int(k), int(k), int(k)]).unwrap();
        assert_eq!(evaluate(&ineq, &all(-1)).unwrap(), int(-2));
        assert_eq!(evaluate(&ineq, &all(1)).unwrap(), int(4));
    }

    #[test]
    fn evaluate_rejects_mismatched_shape() {
        let s = lg();
        let ineq = boole_inequality(&s);
        let two = build_scenario(&["Q1", "Q2"], &[vec![0, 1]]).unwrap();
        let p = CorrelationPoint::vertex(&two, &Assignment::new(2, 0));
        assert!(matches!(evaluate(&ineq, &p), Err(Error::Shape(_))));
    }

    #[test]
    fn capacity_error_above_bound() {
        let labels: Vec<String> = (0..25).map(|i| format!("Q{i}")).collect();
        let s = build_scenario(&labels, &[vec![0, 1]]).unwrap();
        assert!(matches!(enumerate_vertices(&s), Err(Error::Capacity { observables: 25, .. })));
        assert!(matches!(derive_facets(&s), Err(Error::Capacity { .. })));
    }

    #[test]
    fn canonical_form_divides_gcd() {
        let ineq = Inequality::new(int(2), vec![int(0), int(4)], vec![((0, 1), rational::ratio(-2, 3))]).unwrap();
        assert_eq!(ineq.constant, int(3));
        assert_eq!(ineq.single_coeffs, vec![int(0), int(6)]);
        assert_eq!(ineq.pair_coeffs[0].1, int(-1));
        assert!(Inequality::new(int(1), vec![int(0)], vec![]).is_err());
    }

    #[test]
    fn restrict_follows_member_order() {
        let a = Assignment::from_values(&[1, -1, -1]);
        assert_eq!(a.mask(), 0b011);
        assert_eq!(a.restrict(&[0, 1]), 0b01);
        assert_eq!(a.restrict(&[1, 0]), 0b10);
        assert_eq!(a.restrict(&[2, 1, 0]), 0b110);
    }

    #[test]
    fn single_pair_facets() {
        let s = build_scenario(&["Q1", "Q2"], &[vec![0, 1]]).unwrap();
        let f = derive_facets(&s).unwrap();
        let rendered: Vec<String> = f.facets.iter().map(|i| i.render(&s, ">=")).collect();
        assert_eq!(
            rendered,
            vec![
                "<Q1> + <Q2> + <Q1Q2> >= -1",
                "<Q1> - <Q2> - <Q1Q2> >= -1",
                "-<Q1> + <Q2> - <Q1Q2> >= -1",
                "-<Q1> - <Q2> + <Q1Q2> >= -1",
            ]
        );
        assert!(f.implied_equations.is_empty());
    }

    #[test]
    fn csv_export() {
        let s = build_scenario(&["Q1", "Q2"], &[vec![0, 1]]).unwrap();
        let f = derive_facets(&s).unwrap();
        let csv = f.to_csv(&s);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("constant,<Q1>,<Q2>,<Q1Q2>"));
        assert_eq!(lines.next(), Some("1/1,1/1,1/1,1/1"));
        assert_eq!(csv.lines().count(), 5);
    }
}
