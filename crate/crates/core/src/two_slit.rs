//! Binned Fraunhofer model of the two-slit arrangement: one distribution of
//! screen hits per context (slit 1 open, slit 2 open, both open) and the
//! per-bin additivity deficit between them.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Categorical, StreamFactory};
use crate::simulator::RunOptions;

/// Deficits smaller than this count as additive.
pub const ADDITIVITY_TOLERANCE: f64 = 1e-9;

/// Lengths share one arbitrary unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitGeometry {
    /// Slit width.
    pub a: f64,
    /// Slit center separation.
    pub d: f64,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub screen_distance: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Half-width of the binned screen; defaults to `10 λ L / d`.
    #[serde(default)]
    pub span: Option<f64>,
}

fn default_bins() -> usize {
    401
}

impl Default for SlitGeometry {
    fn default() -> Self {
        Self { a: 2.0e-5, d: 1.0e-4, lambda: 5.0e-7, screen_distance: 1.0, bins: default_bins(), span: None }
    }
}

impl SlitGeometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [("a", self.a), ("d", self.d), ("lambda", self.lambda), ("L", self.screen_distance)];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be a positive length, got {v}")));
            }
        }
        if self.d <= self.a {
            return Err(Error::Validation(format!("slit separation d = {} must exceed width a = {}", self.d, self.a)));
        }
        if self.bins < 2 {
            return Err(Error::Validation("screen needs at least two bins".into()));
        }
        if let Some(span) = self.span {
            if !(span.is_finite() && span > 0.0) {
                return Err(Error::Validation(format!("span must be positive, got {span}")));
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.screen_distance < 100.0 * self.d {
            out.push(format!(
                "screen distance {} is not far beyond the slit separation {}; far-field pattern is approximate",
                self.screen_distance, self.d
            ));
        }
        out
    }

    pub fn span(&self) -> f64 {
        self.span.unwrap_or(10.0 * self.lambda * self.screen_distance / self.d)
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.span() / (self.bins - 1) as f64
    }

    /// Bin centers, exactly symmetric about zero.
    pub fn positions(&self) -> Vec<f64> {
        let step = self.bin_width();
        let mid = (self.bins - 1) as f64 / 2.0;
        (0..self.bins).map(|k| (k as f64 - mid) * step).collect()
    }

    /// Position of the first zero of the two-slit fringe term.
    pub fn first_null(&self) -> f64 {
        self.lambda * self.screen_distance / (2.0 * self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlitTag {
    Slit1Only,
    Slit2Only,
    BothOpen,
}

impl fmt::Display for SlitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Slit1Only => "slit1-only",
            Self::Slit2Only => "slit2-only",
            Self::BothOpen => "both-open",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlitContext {
    pub tag: SlitTag,
    pub positions: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl SlitContext {
    /// Checks nonnegativity and normalization to within `1e-12`.
    pub fn new(tag: SlitTag, positions: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if positions.len() != probabilities.len() || positions.is_empty() {
            return Err(Error::Shape("positions and probabilities must be nonempty and equally long".into()));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Validation(format!("{tag} distribution has a negative or non-finite entry")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("{tag} distribution sums to {total}")));
        }
        Ok(Self { tag, positions, probabilities })
    }

    fn from_intensity(tag: SlitTag, positions: &[f64], intensity: impl Fn(f64) -> f64) -> Self {
        let raw: Vec<f64> = positions.iter().map(|&s| intensity(s)).collect();
        let total: f64 = raw.iter().sum();
        Self { tag, positions: positions.to_vec(), probabilities: raw.into_iter().map(|x| x / total).collect() }
    }

    /// Pointwise mean of two one-slit contexts, tagged both-open: the
    /// distribution additivity would predict.
    pub fn additive_mix(c1: &SlitContext, c2: &SlitContext) -> Result<Self> {
        same_grid(c1, c2)?;
        let probabilities = c1.probabilities.iter().zip(&c2.probabilities).map(|(a, b)| 0.5 * (a + b)).collect();
        Ok(Self { tag: SlitTag::BothOpen, positions: c1.positions.clone(), probabilities })
    }

    /// Index of the bin closest to `s`.
    pub fn nearest_bin(&self, s: f64) -> usize {
        self.positions.iter().enumerate().min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs())).map(|(k, _)| k).unwrap_or(0)
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// The three contexts for `g`, in order slit 1, slit 2, both open.
pub fn build_contexts(g: &SlitGeometry) -> Result<[SlitContext; 3]> {
    g.validate()?;
    let positions = g.positions();
    let scale = std::f64::consts::PI / (g.lambda * g.screen_distance);
    let envelope = |s: f64| sinc(scale * g.a * s).powi(2);
    let half = g.d / 2.0;
    let c1 = SlitContext::from_intensity(SlitTag::Slit1Only, &positions, |s| envelope(s + half));
    let c2 = SlitContext::from_intensity(SlitTag::Slit2Only, &positions, |s| envelope(s - half));
    let c12 = SlitContext::from_intensity(SlitTag::BothOpen, &positions, |s| envelope(s) * (scale * g.d * s).cos().powi(2));
    Ok([c1, c2, c12])
}

fn same_grid(a: &SlitContext, b: &SlitContext) -> Result<()> {
    if a.positions != b.positions {
        return Err(Error::Shape(format!("{} and {} use different screen bins", a.tag, b.tag)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport {
    pub positions: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p12: Vec<f64>,
    /// `p12 - (p1 + p2) / 2` per bin.
    pub deficits: Vec<f64>,
    pub max_abs_deficit: f64,
    pub classical_additive: bool,
}

pub const REPORT_CSV_HEADER: &str = "s,p1,p2,p12,deficit";

impl AdditivityReport {
    pub fn deficit_sum(&self) -> f64 {
        self.deficits.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for k in 0..self.positions.len() {
            out.push_str(&format!("{},{},{},{},{}\n", self.positions[k], self.p1[k], self.p2[k], self.p12[k], self.deficits[k]));
        }
        out
    }
}

pub fn additivity_report(c1: &SlitContext, c2: &SlitContext, c12: &SlitContext) -> Result<AdditivityReport> {
    same_grid(c1, c2)?;
    same_grid(c1, c12)?;
    let deficits: Vec<f64> =
        (0..c1.positions.len()).map(|k| c12.probabilities[k] - 0.5 * (c1.probabilities[k] + c2.probabilities[k])).collect();
    let max_abs_deficit = deficits.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(AdditivityReport {
        positions: c1.positions.clone(),
        p1: c1.probabilities.clone(),
        p2: c2.probabilities.clone(),
        p12: c12.probabilities.clone(),
        deficits,
        max_abs_deficit,
        classical_additive: max_abs_deficit < ADDITIVITY_TOLERANCE,
    })
}

/// Histogram of `opts.runs` independent screen hits drawn from `c`.
pub fn sample_screen_hits(c: &SlitContext, opts: &RunOptions) -> Result<Vec<u64>> {
    if opts.runs == 0 {
        return Err(Error::Empty("zero runs requested".into()));
    }
    let sampler = Categorical::from_f64(&c.probabilities);
    let streams = StreamFactory::new(opts.seed);
    let bins = c.probabilities.len();
    let work = || {
        (1..=opts.runs)
            .into_par_iter()
            .fold(
                || vec![0u64; bins],
                |mut h, k| {
                    h[sampler.sample(&mut streams.stream(k))] += 1;
                    h
                },
            )
            .reduce(
                || vec![0u64; bins],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(work))
            .map_err(|e| Error::Validation(format!("thread pool: {e}"))),
        None => Ok(work()),
    }
}

/// Either a geometry or three explicit distributions on a shared grid.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TwoSlitInput {
    Explicit { s: Vec<f64>, p1: Vec<f64>, p2: Vec<f64>, p12: Vec<f64> },
    Geometry(SlitGeometry),
}

impl TwoSlitInput {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("two-slit JSON: {e}")))
    }

    pub fn contexts(&self) -> Result<[SlitContext; 3]> {
        match self {
            Self::Geometry(g) => build_contexts(g),
            Self::Explicit { s, p1, p2, p12 } => Ok([
                SlitContext::new(SlitTag::Slit1Only, s.clone(), p1.clone())?,
                SlitContext::new(SlitTag::Slit2Only, s.clone(), p2.clone())?,
                SlitContext::new(SlitTag::BothOpen, s.clone(), p12.clone())?,
            ]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_is_valid_and_symmetric() {
        let g = SlitGeometry::default();
        g.validate().unwrap();
        assert!(g.warnings().is_empty());
        let pos = g.positions();
        assert_eq!(pos.len(), 401);
        assert_eq!(pos[200], 0.0);
        for k in 0..401 {
            assert_eq!(pos[k], -pos[400 - k]);
        }
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let g = SlitGeometry { d: 1.0e-5, a: 2.0e-5, ..SlitGeometry::default() };
        assert!(matches!(build_contexts(&g), Err(Error::Validation(_))));
        let g = SlitGeometry { lambda: -1.0, ..SlitGeometry::default() };
        assert!(build_contexts(&g).is_err());
        let g = SlitGeometry { bins: 1, ..SlitGeometry::default() };
        assert!(build_contexts(&g).is_err());
    }

    #[test]
    fn near_field_geometry_warns() {
        let g = SlitGeometry { screen_distance: 1.0e-3, ..SlitGeometry::default() };
        assert_eq!(g.warnings().len(), 1);
    }

    #[test]
    fn central_bin_is_constructive() {
        let [c1, c2, c12] = build_contexts(&SlitGeometry::default()).unwrap();
        let k = 200;
        assert!(c12.probabilities[k] > 0.5 * (c1.probabilities[k] + c2.probabilities[k]));
    }

    #[test]
    fn first_null_is_dark_for_both_open_only() {
        let g = SlitGeometry::default();
        let [c1, c2, c12] = build_contexts(&g).unwrap();
        let k = c12.nearest_bin(g.first_null());
        assert!((c12.positions[k] - g.first_null()).abs() < 1e-12);
        assert!(c12.probabilities[k] < 1e-20);
        assert!(c1.probabilities[k] > 1e-4);
        assert!(c2.probabilities[k] > 1e-4);
    }

    #[test]
    fn mirror_symmetry_of_single_slits() {
        let [c1, c2, _] = build_contexts(&SlitGeometry::default()).unwrap();
        let n = c1.positions.len();
        for k in 0..n {
            let (a, b) = (c1.probabilities[k], c2.probabilities[n - 1 - k]);
            assert!((a - b).abs() <= 1e-15 * a.max(b).max(1e-300), "bin {k}");
        }
    }

    #[test]
    fn additive_mix_has_zero_deficit() {
        let [c1, c2, _] = build_contexts(&SlitGeometry::default()).unwrap();
        let mix = SlitContext::additive_mix(&c1, &c2).unwrap();
        let r = additivity_report(&c1, &c2, &mix).unwrap();
        assert!(r.classical_additive);
        assert!(r.deficits.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn mismatched_grids() {
        let [c1, c2, c12] = build_contexts(&SlitGeometry::default()).unwrap();
        let other = build_contexts(&SlitGeometry { bins: 101, ..SlitGeometry::default() }).unwrap();
        assert!(matches!(additivity_report(&c1, &c2, &other[2]), Err(Error::Shape(_))));
        assert!(additivity_report(&c1, &c2, &c12).is_ok());
    }

    #[test]
    fn context_validation() {
        assert!(SlitContext::new(SlitTag::BothOpen, vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(SlitContext::new(SlitTag::BothOpen, vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(SlitContext::new(SlitTag::BothOpen, vec![0.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn input_file_forms() {
        let g = TwoSlitInput::from_json(r#"{"a":2e-5,"d":1e-4,"lambda":5e-7,"L":1.0,"bins":401,"span":0.05}"#).unwrap();
        assert!(matches!(g, TwoSlitInput::Geometry(_)));
        let e = TwoSlitInput::from_json(r#"{"s":[-1,0,1],"p1":[0.5,0.5,0],"p2":[0,0.5,0.5],"p12":[0.25,0.5,0.25]}"#).unwrap();
        let [c1, c2, c12] = e.contexts().unwrap();
        assert!(additivity_report(&c1, &c2, &c12).unwrap().classical_additive);
        assert!(TwoSlitInput::from_json(r#"{"a":1}"#).is_err());
    }

    #[test]
    fn report_csv_shape() {
        let [c1, c2, c12] = build_contexts(&SlitGeometry { bins: 5, ..SlitGeometry::default() }).unwrap();
        let csv = additivity_report(&c1, &c2, &c12).unwrap().to_csv();
        assert_eq!(csv.lines().next(), Some(REPORT_CSV_HEADER));
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn sampling_zero_runs_and_determinism() {
        let [_, _, c12] = build_contexts(&SlitGeometry { bins: 21, ..SlitGeometry::default() }).unwrap();
        assert!(matches!(sample_screen_hits(&c12, &RunOptions::new(0, 1)), Err(Error::Empty(_))));
        let a = sample_screen_hits(&c12, &RunOptions::new(5000, 11)).unwrap();
        let b = sample_screen_hits(&c12, &RunOptions::new(5000, 11).with_threads(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().sum::<u64>(), 5000);
    }
}
