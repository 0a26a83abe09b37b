//! Labeled samples, the synthetic noisy-region distribution, and closed-form
//! losses of interval-union classifiers under it.
//!
//! The marginal of the first coordinate is uniform on `[0, 1]`, labels are
//! `1{x ∈ A*}` flipped independently with probability `η < 1/2`. Any extra
//! coordinates are independent uniform nuisance features. Under this model a
//! region classifier `1{x ∈ A}` has loss `η + (1 − 2η)·λ(A Δ A*)`.

use std::fmt;
use std::path::Path;

use rand::Rng;

use crate::rng::substream;
use crate::{Error, Result};

/// Closed interval `[lo, hi]`; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Lebesgue measure of the intersection with `[0, 1]`.
    fn unit_measure(&self) -> f64 {
        (self.hi.min(1.0) - self.lo.max(0.0)).max(0.0)
    }
}

/// Classifier predicting 1 on a disjoint, sorted union of closed intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalClassifier {
    regions: Vec<Interval>,
}

impl IntervalClassifier {
    pub fn new(regions: Vec<Interval>) -> Result<Self> {
        for r in &regions {
            if r.lo.is_nan() || r.hi.is_nan() || r.lo > r.hi {
                return Err(Error::InvalidArgument(format!(
                    "interval [{}, {}] is not well formed",
                    r.lo, r.hi
                )));
            }
        }
        for w in regions.windows(2) {
            if w[0].hi >= w[1].lo {
                return Err(Error::InvalidArgument(format!(
                    "intervals [{}, {}] and [{}, {}] are not disjoint and sorted",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(IntervalClassifier { regions })
    }

    /// The classifier that never predicts 1.
    pub fn empty() -> Self {
        IntervalClassifier::default()
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        IntervalClassifier::new(vec![Interval::new(lo, hi)])
    }

    /// Builds from `(lo, hi)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        IntervalClassifier::new(pairs.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect())
    }

    pub fn regions(&self) -> &[Interval] {
        &self.regions
    }

    /// Number of intervals in the union.
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn fits_budget(&self, k: usize) -> bool {
        self.regions.len() <= k
    }

    pub fn predict(&self, x: f64) -> bool {
        // Regions are sorted, so a binary search finds the only candidate.
        let idx = self.regions.partition_point(|r| r.hi < x);
        self.regions.get(idx).is_some_and(|r| r.contains(x))
    }

    /// `λ(A ∩ [0, 1])`.
    pub fn unit_measure(&self) -> f64 {
        self.regions.iter().map(Interval::unit_measure).sum()
    }

    /// `λ((A Δ B) ∩ [0, 1])`.
    pub fn symmetric_difference(&self, other: &IntervalClassifier) -> f64 {
        let mut both = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < self.regions.len() && j < other.regions.len() {
            let a = self.regions[i];
            let b = other.regions[j];
            let lo = a.lo.max(b.lo).max(0.0);
            let hi = a.hi.min(b.hi).min(1.0);
            if hi > lo {
                both += hi - lo;
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        (self.unit_measure() + other.unit_measure() - 2.0 * both).max(0.0)
    }

    pub(crate) fn within_unit(&self) -> bool {
        self.regions.iter().all(|r| r.lo >= 0.0 && r.hi <= 1.0)
    }
}

impl fmt::Display for IntervalClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.regions.is_empty() {
            return f.write_str("{}");
        }
        for (i, r) in self.regions.iter().enumerate() {
            if i > 0 {
                f.write_str(" u ")?;
            }
            write!(f, "[{}, {}]", r.lo, r.hi)?;
        }
        Ok(())
    }
}

/// Uniform marginal on `[0, 1]` (first coordinate), Bayes set `A*`, and
/// homogeneous label noise `η ∈ [0, 1/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyRegionDistribution {
    target: IntervalClassifier,
    noise: f64,
    dim: usize,
}

impl NoisyRegionDistribution {
    pub fn new(target: IntervalClassifier, noise: f64) -> Result<Self> {
        if !target.within_unit() {
            return Err(Error::InvalidDistribution(format!(
                "target region {target} is not contained in [0, 1]"
            )));
        }
        if !(0.0..0.5).contains(&noise) {
            return Err(Error::InvalidDistribution(format!(
                "noise rate must lie in [0, 1/2), got {noise}"
            )));
        }
        Ok(NoisyRegionDistribution {
            target,
            noise,
            dim: 1,
        })
    }

    /// Adds `dim - 1` independent uniform nuisance coordinates.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDistribution("dimension must be at least 1".into()));
        }
        self.dim = dim;
        Ok(self)
    }

    pub fn target(&self) -> &IntervalClassifier {
        &self.target
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `P{Y = 1}`.
    pub fn positive_rate(&self) -> f64 {
        self.noise + (1.0 - 2.0 * self.noise) * self.target.unit_measure()
    }
}

/// `n` labeled points of a common dimension `d ≥ 1`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledSample {
    pub fn new(dim: usize, points: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSample("dimension must be at least 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidSample("a sample needs at least one point".into()));
        }
        if points.len() != dim * labels.len() {
            return Err(Error::InvalidSample(format!(
                "{} coordinates do not fit {} points of dimension {dim}",
                points.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::InvalidSample(format!("label {bad} is not 0 or 1")));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSample("coordinates must be finite".into()));
        }
        Ok(LabeledSample {
            dim,
            points,
            labels,
        })
    }

    /// One-dimensional sample.
    pub fn from_1d(xs: &[f64], labels: &[u8]) -> Result<Self> {
        if xs.len() != labels.len() {
            return Err(Error::InvalidSample(format!(
                "{} points but {} labels",
                xs.len(),
                labels.len()
            )));
        }
        LabeledSample::new(1, xs.to_vec(), labels.to_vec())
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coord(&self, i: usize, j: usize) -> f64 {
        self.points[i * self.dim + j]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// The sample `self ∥ other`.
    pub fn concat(&self, other: &LabeledSample) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::InvalidSample("cannot concatenate samples of different dimension".into()));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        LabeledSample::new(self.dim, points, labels)
    }

    /// Points sorted along coordinate `j`, grouped into blocks of equal value.
    pub fn blocks(&self, j: usize) -> SortedBlocks {
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| self.coord(a, j).total_cmp(&self.coord(b, j)).then(a.cmp(&b)));
        let mut blocks: Vec<Block> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let x = self.coord(i, j);
            match blocks.last_mut() {
                Some(b) if b.value == x => {
                    b.end = pos + 1;
                    b.count_label(self.labels[i]);
                }
                _ => {
                    let mut b = Block {
                        value: x,
                        start: pos,
                        end: pos + 1,
                        ones: 0,
                        zeros: 0,
                    };
                    b.count_label(self.labels[i]);
                    blocks.push(b);
                }
            }
        }
        SortedBlocks { order, blocks }
    }

    /// Reads a `x1,...,xd,y` CSV file.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::csv(path, e))?;
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        let width = headers.len();
        let expected = csv_header(width.saturating_sub(1));
        if width < 2 || headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::InvalidSample(format!(
                "{}: header must be x1,...,xd,y",
                path.display()
            )));
        }
        let dim = width - 1;
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::csv(path, e))?;
            for field in record.iter().take(dim) {
                let x: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidSample(format!("{}: row {}: bad coordinate {field:?}", path.display(), row + 1))
                })?;
                points.push(x);
            }
            let y = match record.get(dim).map(str::trim) {
                Some("0") => 0,
                Some("1") => 1,
                other => {
                    return Err(Error::InvalidSample(format!(
                        "{}: row {}: label {other:?} is not 0 or 1",
                        path.display(),
                        row + 1
                    )))
                }
            };
            labels.push(y);
        }
        LabeledSample::new(dim, points, labels)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| Error::csv(path, e))?;
        writer.write_record(csv_header(self.dim)).map_err(|e| Error::csv(path, e))?;
        for i in 0..self.n() {
            let mut row: Vec<String> = self.point(i).iter().map(|x| x.to_string()).collect();
            row.push(self.labels[i].to_string());
            writer.write_record(&row).map_err(|e| Error::csv(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|j| format!("x{j}")).collect();
    h.push("y".to_string());
    h
}

/// A run of sample points sharing one coordinate value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub value: f64,
    /// Range into [`SortedBlocks::order`].
    pub start: usize,
    pub end: usize,
    pub ones: u32,
    pub zeros: u32,
}

impl Block {
    fn count_label(&mut self, y: u8) {
        if y == 1 {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
    }

    /// Misclassified points when the whole block is predicted `pred`.
    pub fn errors(&self, pred: bool) -> u32 {
        if pred {
            self.zeros
        } else {
            self.ones
        }
    }
}

/// Sample indices sorted along one coordinate, with tied values grouped.
#[derive(Debug, Clone)]
pub struct SortedBlocks {
    pub order: Vec<usize>,
    pub blocks: Vec<Block>,
}

impl SortedBlocks {
    pub fn members(&self, b: usize) -> &[usize] {
        let block = &self.blocks[b];
        &self.order[block.start..block.end]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Draws `n` i.i.d. observations. Point `i` uses its own generator seeded
/// from `(seed, i)`, so the result does not depend on generation order.
pub fn generate_sample(dist: &NoisyRegionDistribution, n: usize, seed: u64) -> Result<LabeledSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    if !(0.0..0.5).contains(&dist.noise) {
        return Err(Error::InvalidDistribution(format!(
            "noise rate must lie in [0, 1/2), got {}",
            dist.noise
        )));
    }
    let mut points = Vec::with_capacity(n * dist.dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = substream(seed, i as u64);
        let x: f64 = rng.random();
        points.push(x);
        for _ in 1..dist.dim {
            points.push(rng.random::<f64>());
        }
        let flip = rng.random::<f64>() < dist.noise;
        labels.push(u8::from(dist.target.predict(x) != flip));
    }
    LabeledSample::new(dist.dim, points, labels)
}

/// `L* = η`: the Bayes rule is `1{x ∈ A*}` and errs exactly on flipped labels.
pub fn bayes_risk(dist: &NoisyRegionDistribution) -> f64 {
    dist.noise
}

/// `L(f) = η + (1 − 2η)·λ(A Δ A*)` for `f = 1{x ∈ A}` acting on the first coordinate.
pub fn true_loss(f: &IntervalClassifier, dist: &NoisyRegionDistribution) -> f64 {
    dist.noise + (1.0 - 2.0 * dist.noise) * f.symmetric_difference(&dist.target)
}

/// `L_k* = inf{L(f) : f a union of at most k intervals}`.
pub fn class_optimal_loss(dist: &NoisyRegionDistribution, k: usize) -> f64 {
    true_loss(&optimal_region(dist, k), dist)
}

/// A minimizer `f_k*` of the true loss over unions of at most `k` intervals.
///
/// `λ(A Δ A*)` is piecewise linear in every endpoint of `A` with breakpoints
/// at the endpoints of `A*`, so it suffices to search unions whose endpoints
/// lie in `{0, 1} ∪ ∂A*`. Ties go to fewer intervals, then to the
/// lexicographically smallest endpoint list.
pub fn optimal_region(dist: &NoisyRegionDistribution, k: usize) -> IntervalClassifier {
    let mut cands = vec![0.0, 1.0];
    for r in dist.target.regions() {
        cands.push(r.lo);
        cands.push(r.hi);
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();

    let mut best = IntervalClassifier::empty();
    let mut best_loss = true_loss(&best, dist);
    let max_runs = k.min(cands.len() / 2);
    let mut idx = Vec::new();
    for runs in 1..=max_runs {
        idx.clear();
        idx.extend(0..2 * runs);
        loop {
            let pairs: Vec<(f64, f64)> = idx.chunks(2).map(|p| (cands[p[0]], cands[p[1]])).collect();
            let region = IntervalClassifier::from_pairs(&pairs).expect("strictly increasing endpoints");
            let loss = true_loss(&region, dist);
            if loss < best_loss - 1e-12 {
                best = region;
                best_loss = loss;
            }
            if !next_combination(&mut idx, cands.len()) {
                break;
            }
        }
    }
    best
}

/// Advances `idx` to the next strictly increasing index tuple below `m`.
fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let r = idx.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if idx[i] < m - r + i {
            idx[i] += 1;
            for j in i + 1..r {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
