//! Hypothesis families, exact empirical risk minimization, enumeration of
//! the error vectors a class realizes on a sample, and worst-case shatter
//! coefficients.
//!
//! Interval unions and thresholds act on the first coordinate. Points that
//! share a coordinate value form a block and every hypothesis gives a whole
//! block one prediction.

use std::fmt;
use std::str::FromStr;

use crate::data::{self, IntervalClassifier, LabeledSample, NoisyRegionDistribution, SortedBlocks};
use crate::segments::{self, RunShape, WeightedItem};
use crate::{Error, Result};

/// Enumeration refuses classes predicted to realize more error vectors than this.
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

/// A hypothesis family `F_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelClass {
    /// `f_t(x) = 1{x ≥ t}`.
    Thresholds,
    /// Unions of at most `k` closed intervals.
    Intervals(usize),
    /// Axis-aligned decision stumps on the first `d` coordinates, both polarities.
    Stumps(usize),
    /// A single fixed region classifier.
    Fixed(IntervalClassifier),
}

impl ModelClass {
    /// VC dimension, or for stumps the largest `m` with `2^m ≤ 2 + 2d(m − 1)`,
    /// which bounds it because stumps induce at most that many dichotomies
    /// on `m` points.
    pub fn vc_dim(&self) -> usize {
        match self {
            ModelClass::Thresholds => 1,
            ModelClass::Intervals(k) => 2 * k,
            ModelClass::Stumps(d) => {
                let mut m = 1usize;
                while m < 63 && (1u128 << (m + 1)) <= 2 + 2 * (*d as u128) * (m as u128) {
                    m += 1;
                }
                m
            }
            ModelClass::Fixed(_) => 0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelClass::Intervals(0) => Err(Error::InvalidArgument("interval budget must be at least 1".into())),
            ModelClass::Stumps(0) => Err(Error::InvalidArgument("stumps need at least one coordinate".into())),
            _ => Ok(()),
        }
    }

    /// Run structure of the class on a line, for interval-shaped classes.
    pub(crate) fn run_shape(&self) -> Option<RunShape> {
        match self {
            ModelClass::Intervals(k) => Some(RunShape::Runs(*k)),
            ModelClass::Thresholds => Some(RunShape::Suffix),
            _ => None,
        }
    }

    /// A true-loss minimizer `f_k*` over the class and its loss `L_k*`.
    pub fn optimal(&self, dist: &NoisyRegionDistribution) -> Result<(Hypothesis, f64)> {
        self.validate()?;
        let mut cands = vec![0.0, 1.0];
        for r in dist.target().regions() {
            cands.push(r.lo);
            cands.push(r.hi);
        }
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        cands.push(f64::INFINITY);

        let pick = |hs: Vec<Hypothesis>| -> Result<(Hypothesis, f64)> {
            let mut best: Option<(Hypothesis, f64)> = None;
            for h in hs {
                let l = h.true_loss(dist)?;
                if best.as_ref().is_none_or(|(_, b)| l < b - 1e-12) {
                    best = Some((h, l));
                }
            }
            Ok(best.expect("candidate list is never empty"))
        };
        match self {
            ModelClass::Intervals(k) => {
                let region = data::optimal_region(dist, *k);
                let loss = data::true_loss(&region, dist);
                Ok((Hypothesis::Region(region), loss))
            }
            ModelClass::Thresholds => {
                // The empty region (t = ∞) comes first: fewer intervals win ties.
                let mut hs = vec![Hypothesis::Region(IntervalClassifier::empty())];
                hs.extend(cands.iter().filter(|t| t.is_finite()).map(|&t| Hypothesis::threshold(t)));
                pick(hs)
            }
            ModelClass::Stumps(_) => {
                let mut hs = Vec::new();
                for polarity in [Polarity::Above, Polarity::Below] {
                    for &t in &cands {
                        hs.push(Hypothesis::Stump(Stump {
                            coord: 0,
                            threshold: t,
                            polarity,
                        }));
                    }
                }
                pick(hs)
            }
            ModelClass::Fixed(region) => Ok((Hypothesis::Region(region.clone()), data::true_loss(region, dist))),
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelClass::Thresholds => f.write_str("thresholds"),
            ModelClass::Intervals(k) => write!(f, "intervals:{k}"),
            ModelClass::Stumps(d) => write!(f, "stumps:{d}"),
            ModelClass::Fixed(r) => {
                f.write_str("fixed:")?;
                for (i, iv) in r.regions().iter().enumerate() {
                    if i > 0 {
                        f.write_str("+")?;
                    }
                    write!(f, "{}-{}", iv.lo, iv.hi)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ModelClass {
    type Err = Error;

    /// `thresholds`, `intervals:K`, `stumps:D`, or `fixed:a-b+c-d`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("unrecognized class {s:?}"));
        let class = match s.split_once(':') {
            None if s == "thresholds" => ModelClass::Thresholds,
            Some(("intervals", k)) => ModelClass::Intervals(k.trim().parse().map_err(|_| bad())?),
            Some(("stumps", d)) => ModelClass::Stumps(d.trim().parse().map_err(|_| bad())?),
            Some(("fixed", body)) => {
                let pairs = if body.trim().is_empty() {
                    Vec::new()
                } else {
                    body.split('+').map(crate::config::parse_range).collect::<Result<Vec<_>>>()?
                };
                ModelClass::Fixed(IntervalClassifier::from_pairs(&pairs)?)
            }
            _ => return Err(bad()),
        };
        class.validate()?;
        Ok(class)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Predict 1 when `x_j ≥ t`.
    Above,
    /// Predict 1 when `x_j < t`.
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub coord: usize,
    pub threshold: f64,
    pub polarity: Polarity,
}

impl Stump {
    pub fn predict(&self, point: &[f64]) -> bool {
        let x = point[self.coord];
        match self.polarity {
            Polarity::Above => x >= self.threshold,
            Polarity::Below => x < self.threshold,
        }
    }

    /// `λ({x ∈ [0, 1] : stump predicts 1})` along its coordinate.
    fn unit_positive_measure(&self) -> f64 {
        let t = self.threshold.clamp(0.0, 1.0);
        match self.polarity {
            Polarity::Above => 1.0 - t,
            Polarity::Below => t,
        }
    }
}

/// A concrete classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    /// `1{x_1 ∈ A}`.
    Region(IntervalClassifier),
    Stump(Stump),
}

impl Hypothesis {
    fn threshold(t: f64) -> Self {
        Hypothesis::Region(IntervalClassifier::single(t, f64::INFINITY).expect("finite threshold"))
    }

    pub fn predict(&self, point: &[f64]) -> bool {
        match self {
            Hypothesis::Region(r) => r.predict(point[0]),
            Hypothesis::Stump(s) => s.predict(point),
        }
    }

    /// Closed-form `L(f)` under `dist`.
    pub fn true_loss(&self, dist: &NoisyRegionDistribution) -> Result<f64> {
        match self {
            Hypothesis::Region(r) => Ok(data::true_loss(r, dist)),
            Hypothesis::Stump(s) if s.coord >= dist.dim() => Err(Error::InvalidArgument(format!(
                "stump on coordinate {} but the distribution has dimension {}",
                s.coord + 1,
                dist.dim()
            ))),
            Hypothesis::Stump(s) if s.coord == 0 => {
                let t = s.threshold;
                let region = match (s.polarity, t.is_finite()) {
                    (Polarity::Above, true) => IntervalClassifier::single(t, f64::INFINITY)?,
                    (Polarity::Above, false) => IntervalClassifier::empty(),
                    (Polarity::Below, true) => IntervalClassifier::single(f64::NEG_INFINITY, t)?,
                    (Polarity::Below, false) => IntervalClassifier::single(f64::NEG_INFINITY, f64::INFINITY)?,
                };
                Ok(data::true_loss(&region, dist))
            }
            Hypothesis::Stump(s) => {
                // The nuisance coordinate is independent of (X_1, Y).
                let q = s.unit_positive_measure();
                let p = dist.positive_rate();
                Ok(q * (1.0 - p) + (1.0 - q) * p)
            }
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Region(r) => write!(f, "{r}"),
            Hypothesis::Stump(s) => {
                let op = match s.polarity {
                    Polarity::Above => ">=",
                    Polarity::Below => "<",
                };
                write!(f, "x{} {op} {}", s.coord + 1, s.threshold)
            }
        }
    }
}

/// `L̂(f)`.
pub fn empirical_loss(f: &Hypothesis, s: &LabeledSample) -> f64 {
    let wrong = (0..s.n()).filter(|&i| u8::from(f.predict(s.point(i))) != s.label(i)).count();
    wrong as f64 / s.n() as f64
}

/// Binary vector of per-point misclassification indicators.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ErrorVector {
    len: usize,
    words: Vec<u64>,
}

impl ErrorVector {
    pub fn zeros(len: usize) -> Self {
        ErrorVector {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut e = ErrorVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                e.set(i);
            }
        }
        e
    }

    pub(crate) fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `L̂` of any hypothesis with this error vector.
    pub fn mean(&self) -> f64 {
        self.count_ones() as f64 / self.len as f64
    }

    /// The low 64 bits; the whole vector when `len ≤ 64`.
    pub(crate) fn low_word(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }
}

/// The distinct error vectors `{(1{f(X_i) ≠ Y_i})_i : f ∈ F}` on a sample,
/// kept sorted so the set has one canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorVectorSet {
    n: usize,
    vectors: Vec<ErrorVector>,
}

impl ErrorVectorSet {
    pub fn new(n: usize, vectors: impl IntoIterator<Item = ErrorVector>) -> Result<Self> {
        let mut vectors: Vec<ErrorVector> = vectors.into_iter().collect();
        if let Some(v) = vectors.iter().find(|v| v.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "error vector of length {} in a set over {n} points",
                v.len()
            )));
        }
        vectors.sort_unstable();
        vectors.dedup();
        Ok(ErrorVectorSet { n, vectors })
    }

    /// Every binary vector of length `n`.
    pub fn all(n: usize) -> Result<Self> {
        if n > 24 {
            return Err(Error::EnumerationInfeasible {
                predicted: 2f64.powi(n as i32),
                limit: ENUMERATION_LIMIT,
            });
        }
        let vectors = (0u64..1 << n).map(|bits| {
            let b: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            ErrorVector::from_bools(&b)
        });
        ErrorVectorSet::new(n, vectors)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ErrorVector> {
        self.vectors.iter()
    }

    pub fn contains(&self, e: &ErrorVector) -> bool {
        self.vectors.binary_search(e).is_ok()
    }

    pub fn is_subset(&self, other: &ErrorVectorSet) -> bool {
        self.n == other.n && self.vectors.iter().all(|v| other.contains(v))
    }

    /// The vectors satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&ErrorVector) -> bool) -> ErrorVectorSet {
        ErrorVectorSet {
            n: self.n,
            vectors: self.vectors.iter().filter(|v| keep(v)).cloned().collect(),
        }
    }

    /// Smallest mean over the set.
    pub fn min_mean(&self) -> Option<f64> {
        self.vectors.iter().map(|v| v.count_ones()).min().map(|c| c as f64 / self.n as f64)
    }
}

/// Output of empirical risk minimization over one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ErmResult {
    pub classifier: Hypothesis,
    pub errors: usize,
    pub empirical_loss: f64,
    pub error_vector: ErrorVector,
}

/// `f̂_k` and its empirical loss.
pub fn erm(c: &ModelClass, s: &LabeledSample) -> Result<ErmResult> {
    Ok(Projection::new(c, s)?.erm())
}

/// Every distinct error vector `c` realizes on `s`.
pub fn enumerate_error_vectors(c: &ModelClass, s: &LabeledSample) -> Result<ErrorVectorSet> {
    Projection::new(c, s)?.enumerate()
}

#[derive(Debug)]
enum Layout {
    /// Blocks along the first coordinate.
    Line(SortedBlocks),
    /// Blocks along each stump coordinate.
    Coords(Vec<SortedBlocks>),
    /// Predictions of the single fixed classifier.
    Fixed(Vec<bool>),
}

/// A class restricted to a sample: the structure every per-sample
/// computation (ERM, shatter counts, Rademacher suprema) works on.
#[derive(Debug)]
pub struct Projection<'a> {
    class: &'a ModelClass,
    sample: &'a LabeledSample,
    layout: Layout,
}

impl<'a> Projection<'a> {
    pub fn new(class: &'a ModelClass, sample: &'a LabeledSample) -> Result<Self> {
        class.validate()?;
        let layout = match class {
            ModelClass::Thresholds | ModelClass::Intervals(_) => Layout::Line(sample.blocks(0)),
            ModelClass::Stumps(d) => {
                if *d > sample.dim() {
                    return Err(Error::InvalidArgument(format!(
                        "stumps:{d} needs {d} coordinates but the sample has {}",
                        sample.dim()
                    )));
                }
                Layout::Coords((0..*d).map(|j| sample.blocks(j)).collect())
            }
            ModelClass::Fixed(region) => {
                Layout::Fixed((0..sample.n()).map(|i| region.predict(sample.coord(i, 0))).collect())
            }
        };
        Ok(Projection { class, sample, layout })
    }

    pub fn class(&self) -> &ModelClass {
        self.class
    }

    pub fn sample(&self) -> &LabeledSample {
        self.sample
    }

    pub fn n(&self) -> usize {
        self.sample.n()
    }

    pub fn error_vector(&self, h: &Hypothesis) -> ErrorVector {
        let s = self.sample;
        let bits: Vec<bool> = (0..s.n()).map(|i| u8::from(h.predict(s.point(i))) != s.label(i)).collect();
        ErrorVector::from_bools(&bits)
    }

    /// Error vector of a block labeling along `blocks`.
    fn blocks_error_vector(&self, blocks: &SortedBlocks, pattern: impl Fn(usize) -> bool) -> ErrorVector {
        let mut e = ErrorVector::zeros(self.n());
        for b in 0..blocks.len() {
            let pred = u8::from(pattern(b));
            for &i in blocks.members(b) {
                if self.sample.label(i) != pred {
                    e.set(i);
                }
            }
        }
        e
    }

    /// Empirical risk minimizer with deterministic tie-breaking: fewest
    /// intervals, then lexicographically smallest endpoints (interval
    /// classes); first coordinate, `Above` before `Below`, smallest
    /// threshold (stumps).
    pub fn erm(&self) -> ErmResult {
        let (classifier, errors) = match (&self.layout, self.class) {
            (Layout::Line(blocks), ModelClass::Intervals(k)) => {
                let costs: Vec<(u32, u32)> = blocks.blocks.iter().map(|b| (b.ones, b.zeros)).collect();
                let (errors, pattern) = segments::min_error_runs(&costs, *k);
                let mut pairs = Vec::new();
                let mut start = None;
                for (b, &on) in pattern.iter().enumerate() {
                    match (on, start) {
                        (true, None) => start = Some(b),
                        (false, Some(a)) => {
                            pairs.push((blocks.blocks[a].value, blocks.blocks[b - 1].value));
                            start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(a) = start {
                    pairs.push((blocks.blocks[a].value, blocks.blocks[blocks.len() - 1].value));
                }
                let region = IntervalClassifier::from_pairs(&pairs).expect("runs are disjoint and sorted");
                (Hypothesis::Region(region), errors as usize)
            }
            (Layout::Line(blocks), _) => {
                let m = blocks.len();
                let errs = suffix_errors(blocks);
                let min = *errs.iter().min().expect("m + 1 cuts");
                let cut = if errs[m] == min {
                    m
                } else {
                    errs.iter().position(|&e| e == min).expect("minimum is attained")
                };
                let h = if cut == m {
                    Hypothesis::Region(IntervalClassifier::empty())
                } else {
                    Hypothesis::threshold(blocks.blocks[cut].value)
                };
                (h, min as usize)
            }
            (Layout::Coords(coords), _) => {
                let mut best: Option<(Stump, u32)> = None;
                for (j, blocks) in coords.iter().enumerate() {
                    let m = blocks.len();
                    let above = suffix_errors(blocks);
                    let below = prefix_errors(blocks);
                    for (polarity, errs) in [(Polarity::Above, &above), (Polarity::Below, &below)] {
                        for (cut, &e) in errs.iter().enumerate() {
                            if best.is_none_or(|(_, b)| e < b) {
                                let threshold = if cut == m { f64::INFINITY } else { blocks.blocks[cut].value };
                                best = Some((
                                    Stump {
                                        coord: j,
                                        threshold,
                                        polarity,
                                    },
                                    e,
                                ));
                            }
                        }
                    }
                }
                let (stump, e) = best.expect("at least one coordinate");
                (Hypothesis::Stump(stump), e as usize)
            }
            (Layout::Fixed(pred), ModelClass::Fixed(region)) => {
                let e = (0..self.n()).filter(|&i| u8::from(pred[i]) != self.sample.label(i)).count();
                (Hypothesis::Region(region.clone()), e)
            }
            (Layout::Fixed(_), _) => unreachable!("fixed layout only for fixed classes"),
        };
        let error_vector = self.error_vector(&classifier);
        debug_assert_eq!(error_vector.count_ones(), errors);
        ErmResult {
            classifier,
            errors,
            empirical_loss: errors as f64 / self.n() as f64,
            error_vector,
        }
    }

    /// Predicted number of distinct error vectors, used by the enumeration guard.
    pub fn predicted_count(&self) -> f64 {
        match (&self.layout, self.class) {
            (Layout::Line(b), ModelClass::Intervals(k)) => interval_pattern_count_f64(b.len(), *k),
            (Layout::Line(b), _) => (b.len() + 1) as f64,
            (Layout::Coords(c), _) => c.iter().map(|b| 2.0 * (b.len() + 1) as f64).sum(),
            (Layout::Fixed(_), _) => 1.0,
        }
    }

    /// The random shatter coefficient `S(X_1^n)`, the number of distinct
    /// error vectors (equivalently, dichotomies) realized on the sample.
    pub fn shatter_count(&self) -> Result<u128> {
        match (&self.layout, self.class) {
            (Layout::Line(b), ModelClass::Intervals(k)) => {
                interval_pattern_count(b.len(), *k).ok_or_else(|| Error::ShatterOverflow {
                    class: self.class.to_string(),
                    points: self.n(),
                })
            }
            (Layout::Line(b), _) => Ok(b.len() as u128 + 1),
            (Layout::Coords(_), _) => Ok(self.stump_vectors().len() as u128),
            (Layout::Fixed(_), _) => Ok(1),
        }
    }

    /// Number of realized error vectors with at most `budget` ones.
    pub fn count_within(&self, budget: usize) -> Result<u128> {
        if budget >= self.n() {
            return self.shatter_count();
        }
        let budget32 = budget as u32;
        Ok(match (&self.layout, self.class) {
            (Layout::Line(b), ModelClass::Intervals(k)) => {
                let items: Vec<(u32, u32)> = b.blocks.iter().map(|b| (b.ones, b.zeros)).collect();
                segments::count_within_budget(&items, *k, budget32)
            }
            (Layout::Line(b), _) => suffix_errors(b).iter().filter(|&&e| e <= budget32).count() as u128,
            (Layout::Coords(_), _) => self.stump_vectors().iter().filter(|v| v.count_ones() <= budget).count() as u128,
            (Layout::Fixed(_), _) => u128::from(self.erm().errors <= budget),
        })
    }

    fn stump_vectors(&self) -> Vec<ErrorVector> {
        let Layout::Coords(coords) = &self.layout else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for blocks in coords {
            let m = blocks.len();
            for cut in 0..=m {
                out.push(self.blocks_error_vector(blocks, |b| b >= cut));
                out.push(self.blocks_error_vector(blocks, |b| b < cut));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All distinct realized error vectors; refuses above [`ENUMERATION_LIMIT`].
    pub fn enumerate(&self) -> Result<ErrorVectorSet> {
        let predicted = self.predicted_count();
        if predicted > ENUMERATION_LIMIT as f64 {
            return Err(Error::EnumerationInfeasible {
                predicted,
                limit: ENUMERATION_LIMIT,
            });
        }
        let n = self.n();
        let vectors = match (&self.layout, self.class) {
            (Layout::Line(blocks), ModelClass::Intervals(k)) => {
                let mut out = Vec::with_capacity(predicted as usize);
                let mut pattern = vec![false; blocks.len()];
                self.enumerate_runs(blocks, *k, 0, 0, false, &mut pattern, &mut out);
                out
            }
            (Layout::Line(blocks), _) => (0..=blocks.len())
                .map(|cut| self.blocks_error_vector(blocks, |b| b >= cut))
                .collect(),
            (Layout::Coords(_), _) => self.stump_vectors(),
            (Layout::Fixed(pred), _) => {
                let bits: Vec<bool> = (0..n).map(|i| u8::from(pred[i]) != self.sample.label(i)).collect();
                vec![ErrorVector::from_bools(&bits)]
            }
        };
        ErrorVectorSet::new(n, vectors)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_runs(
        &self,
        blocks: &SortedBlocks,
        k: usize,
        at: usize,
        runs: usize,
        prev: bool,
        pattern: &mut Vec<bool>,
        out: &mut Vec<ErrorVector>,
    ) {
        if at == blocks.len() {
            out.push(self.blocks_error_vector(blocks, |b| pattern[b]));
            return;
        }
        pattern[at] = false;
        self.enumerate_runs(blocks, k, at + 1, runs, false, pattern, out);
        let opened = if prev { runs } else { runs + 1 };
        if opened <= k {
            pattern[at] = true;
            self.enumerate_runs(blocks, k, at + 1, opened, true, pattern, out);
            pattern[at] = false;
        }
    }

    /// `max_f Σ_i w_i·1{f(X_i) ≠ Y_i}` over the class, restricted to error
    /// vectors with at most `budget` ones when given. Returns the value and
    /// the error count of a maximizer with the fewest errors.
    pub(crate) fn sup_weighted(&self, weights: &[i64], budget: Option<u32>) -> Option<(i64, u32)> {
        let fits = |e: u32| budget.is_none_or(|b| e <= b);
        let better = |a: (i64, u32), b: Option<(i64, u32)>| b.is_none_or(|b| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1));
        match (&self.layout, self.class) {
            (Layout::Line(blocks), ModelClass::Intervals(k)) => {
                let items = self.weighted_items(blocks, weights);
                segments::max_weight_runs(&items, *k, budget)
            }
            (Layout::Line(blocks), _) => {
                let items = self.weighted_items(blocks, weights);
                let mut best = None;
                scan_suffix(&items, |v| {
                    if fits(v.1) && better(v, best) {
                        best = Some(v);
                    }
                });
                best
            }
            (Layout::Coords(coords), _) => {
                let mut best = None;
                for blocks in coords {
                    let items = self.weighted_items(blocks, weights);
                    let mut consider = |v: (i64, u32)| {
                        if fits(v.1) && better(v, best) {
                            best = Some(v);
                        }
                    };
                    scan_suffix(&items, &mut consider);
                    scan_prefix(&items, &mut consider);
                }
                best
            }
            (Layout::Fixed(pred), _) => {
                let mut v = 0i64;
                let mut e = 0u32;
                for (i, &w) in weights.iter().enumerate() {
                    if u8::from(pred[i]) != self.sample.label(i) {
                        v += w;
                        e += 1;
                    }
                }
                fits(e).then_some((v, e))
            }
        }
    }

    fn weighted_items(&self, blocks: &SortedBlocks, weights: &[i64]) -> Vec<WeightedItem> {
        blocks
            .blocks
            .iter()
            .enumerate()
            .map(|(b, block)| {
                let (mut w0, mut w1) = (0, 0);
                for &i in blocks.members(b) {
                    if self.sample.label(i) == 1 {
                        w0 += weights[i];
                    } else {
                        w1 += weights[i];
                    }
                }
                WeightedItem {
                    w0,
                    w1,
                    e0: block.ones,
                    e1: block.zeros,
                }
            })
            .collect()
    }
}

/// Calls `f` with `(value, errors)` for every suffix labeling (blocks `≥ cut` are 1).
fn scan_suffix(items: &[WeightedItem], mut f: impl FnMut((i64, u32))) {
    let mut v: i64 = items.iter().map(|it| it.w1).sum();
    let mut e: u32 = items.iter().map(|it| it.e1).sum();
    f((v, e));
    for it in items {
        v += it.w0 - it.w1;
        e = e + it.e0 - it.e1;
        f((v, e));
    }
}

/// Calls `f` for every prefix labeling (blocks `< cut` are 1).
fn scan_prefix(items: &[WeightedItem], mut f: impl FnMut((i64, u32))) {
    let mut v: i64 = items.iter().map(|it| it.w0).sum();
    let mut e: u32 = items.iter().map(|it| it.e0).sum();
    f((v, e));
    for it in items {
        v += it.w1 - it.w0;
        e = e + it.e1 - it.e0;
        f((v, e));
    }
}

/// Errors of `1{x ≥ blocks[cut]}` for `cut = 0..=m`.
fn suffix_errors(blocks: &SortedBlocks) -> Vec<u32> {
    let mut e: u32 = blocks.blocks.iter().map(|b| b.zeros).sum();
    let mut out = vec![e];
    for b in &blocks.blocks {
        e = e + b.ones - b.zeros;
        out.push(e);
    }
    out
}

/// Errors of `1{x < blocks[cut]}` for `cut = 0..=m`.
fn prefix_errors(blocks: &SortedBlocks) -> Vec<u32> {
    let mut e: u32 = blocks.blocks.iter().map(|b| b.ones).sum();
    let mut out = vec![e];
    for b in &blocks.blocks {
        e = e + b.zeros - b.ones;
        out.push(e);
    }
    out
}

/// `C(n, r)`, or `None` on overflow.
pub fn binomial(n: u64, r: u64) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut c: u128 = 1;
    for i in 0..r {
        // c·(n − i) is divisible by (i + 1) after the multiplication.
        c = c.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(c)
}

/// Labelings of `m` ordered blocks with at most `k` runs of ones:
/// `Σ_{r=0}^{k} C(m + 1, 2r)`.
pub fn interval_pattern_count(m: usize, k: usize) -> Option<u128> {
    let mut total: u128 = 0;
    for r in 0..=k as u64 {
        if 2 * r > m as u64 + 1 {
            break;
        }
        total = total.checked_add(binomial(m as u64 + 1, 2 * r)?)?;
    }
    Some(total)
}

fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    let r = r.min(n - r);
    (0..r).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

fn interval_pattern_count_f64(m: usize, k: usize) -> f64 {
    (0..=k as u64)
        .map(|r| ln_binomial(m as u64 + 1, 2 * r).exp())
        .sum()
}

/// Where a log shatter value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShatterSource {
    /// Exact worst-case count for the family.
    Exact,
    /// Sauer's bound `Σ_{i ≤ V} C(m, i)`.
    Sauer,
    /// `V·ln(m + 1)`.
    VcCap,
}

impl fmt::Display for ShatterSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShatterSource::Exact => "exact",
            ShatterSource::Sauer => "sauer",
            ShatterSource::VcCap => "vc_cap",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogShatter {
    pub value: f64,
    pub source: ShatterSource,
}

/// `ln S(m)`, the log of the maximal number of dichotomies on `m` points.
///
/// Exact for thresholds (`m + 1`), interval unions (`Σ_{r≤k} C(m+1, 2r)`)
/// and fixed classes; Sauer's bound for stumps. Falls back to `V·ln(m+1)`
/// only when the count overflows `u128`.
pub fn worst_case_log_shatter(c: &ModelClass, m: usize) -> Result<LogShatter> {
    if m == 0 {
        return Err(Error::InvalidArgument("shatter coefficient needs m >= 1".into()));
    }
    c.validate()?;
    let exact = |count: Option<u128>, source| match count {
        Some(s) => LogShatter {
            value: (s as f64).ln(),
            source,
        },
        None => vc_log_shatter(c, m),
    };
    Ok(match c {
        ModelClass::Thresholds => exact(Some(m as u128 + 1), ShatterSource::Exact),
        ModelClass::Intervals(k) => exact(interval_pattern_count(m, *k), ShatterSource::Exact),
        ModelClass::Stumps(_) => {
            let v = c.vc_dim() as u64;
            let sauer = (0..=v).try_fold(0u128, |acc, i| acc.checked_add(binomial(m as u64, i)?));
            exact(sauer, ShatterSource::Sauer)
        }
        ModelClass::Fixed(_) => LogShatter {
            value: 0.0,
            source: ShatterSource::Exact,
        },
    })
}

/// `V·ln(m + 1)`, the VC-dimension cap on `ln S(m)`.
pub fn vc_log_shatter(c: &ModelClass, m: usize) -> LogShatter {
    LogShatter {
        value: c.vc_dim() as f64 * (m as f64 + 1.0).ln(),
        source: ShatterSource::VcCap,
    }
}
