//! Suprema of linear combinations of true and empirical loss over an
//! interval class, for the noisy-region distribution.
//!
//! The unit interval is cut at its endpoints, at the endpoints of `A*` and
//! at the sample points. Between cuts lie open cells whose mass is known;
//! the sample points themselves are atoms carrying the label counts. A
//! union of at most `k` closed intervals labels each cell and atom, and
//! since the objective is linear in how much of a cell is covered, the
//! supremum is attained (or approached) by labelings that take whole cells.
//! Maximizing over labelings with at most `k` runs of ones is then a small
//! dynamic program.

use crate::classes::ModelClass;
use crate::data::{self, LabeledSample, NoisyRegionDistribution};
use crate::segments::{self, RunShape};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Element {
    Cell { length: f64, in_target: bool },
    Atom { ones: u32, zeros: u32 },
}

/// Cells and atoms of the line, in order.
#[derive(Debug, Clone)]
pub struct Line {
    elements: Vec<Element>,
    noise: f64,
    n: usize,
}

impl Line {
    /// Cuts `[0, 1]` for `dist` and, if given, the first coordinate of `sample`.
    pub fn new(dist: &NoisyRegionDistribution, sample: Option<&LabeledSample>) -> Self {
        let mut cuts = vec![0.0, 1.0];
        for r in dist.target().regions() {
            cuts.push(r.lo.clamp(0.0, 1.0));
            cuts.push(r.hi.clamp(0.0, 1.0));
        }
        let blocks = sample.map(|s| s.blocks(0));
        if let Some(b) = &blocks {
            cuts.extend(b.blocks.iter().map(|b| b.value));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut atoms = blocks.iter().flat_map(|b| b.blocks.iter()).peekable();
        let mut elements = Vec::new();
        for (i, &x) in cuts.iter().enumerate() {
            if let Some(a) = atoms.next_if(|a| a.value == x) {
                elements.push(Element::Atom {
                    ones: a.ones,
                    zeros: a.zeros,
                });
            }
            if let Some(&y) = cuts.get(i + 1) {
                let (lo, hi) = (x.max(0.0), y.min(1.0));
                if hi > lo {
                    elements.push(Element::Cell {
                        length: hi - lo,
                        in_target: dist.target().predict(0.5 * (lo + hi)),
                    });
                }
            }
        }
        Line {
            elements,
            noise: dist.noise(),
            n: sample.map_or(0, |s| s.n()),
        }
    }

    /// `sup_f a·L(f) + b·L̂(f)` over labelings of the given shape.
    fn sup(&self, a: f64, b: f64, shape: RunShape) -> f64 {
        let scale = 1.0 - 2.0 * self.noise;
        let items: Vec<(f64, f64)> = self
            .elements
            .iter()
            .map(|e| match *e {
                // Predicting against the Bayes rule on a cell costs (1 − 2η)·length.
                Element::Cell { length, in_target } => {
                    let miss = a * scale * length;
                    if in_target {
                        (miss, 0.0)
                    } else {
                        (0.0, miss)
                    }
                }
                Element::Atom { ones, zeros } => {
                    let per = b / self.n as f64;
                    (per * f64::from(ones), per * f64::from(zeros))
                }
            })
            .collect();
        a * self.noise + segments::max_real(&items, shape)
    }
}

fn shape_of(c: &ModelClass) -> Result<RunShape> {
    c.run_shape().ok_or_else(|| Error::Unsupported {
        operation: "population suprema",
        class: c.to_string(),
    })
}

/// `sup_{f ∈ c} a·L(f) + b·L̂(f)` on `sample`.
pub fn sup_combination(c: &ModelClass, dist: &NoisyRegionDistribution, sample: &LabeledSample, a: f64, b: f64) -> Result<f64> {
    if let ModelClass::Fixed(region) = c {
        let h = crate::classes::Hypothesis::Region(region.clone());
        return Ok(a * data::true_loss(region, dist) + b * crate::classes::empirical_loss(&h, sample));
    }
    Ok(Line::new(dist, Some(sample)).sup(a, b, shape_of(c)?))
}

/// `sup_{f ∈ c} |L̂(f) − L(f)|`.
pub fn sup_abs_deviation(c: &ModelClass, dist: &NoisyRegionDistribution, sample: &LabeledSample) -> Result<f64> {
    let up = sup_combination(c, dist, sample, -1.0, 1.0)?;
    let down = sup_combination(c, dist, sample, 1.0, -1.0)?;
    Ok(up.max(down))
}

/// `[L_k*, sup_{f ∈ c} L(f)]`, the range of true losses over the class.
pub fn loss_range(c: &ModelClass, dist: &NoisyRegionDistribution) -> Result<(f64, f64)> {
    if let ModelClass::Fixed(region) = c {
        let l = data::true_loss(region, dist);
        return Ok((l, l));
    }
    let line = Line::new(dist, None);
    let shape = shape_of(c)?;
    Ok((-line.sup(-1.0, 0.0, shape), line.sup(1.0, 0.0, shape)))
}

/// `sup sqrt(L(f)(1 − L(f)))` over `{f ∈ c : L(f) ≤ cap}`.
///
/// The losses of an interval class fill the interval [`loss_range`]
/// (endpoints move continuously), and `l(1 − l)` increases up to 1/2.
pub fn sigma(c: &ModelClass, dist: &NoisyRegionDistribution, cap: f64) -> Result<f64> {
    let (lo, hi) = loss_range(c, dist)?;
    let top = hi.min(cap);
    if top < lo {
        return Err(Error::InvalidArgument(format!("no hypothesis with loss at most {cap}")));
    }
    let l = 0.5f64.clamp(lo, top);
    Ok((l * (1.0 - l)).sqrt())
}

/// Whether `{f ∈ c : L(f) ≤ cap}` is the whole class.
pub fn cap_is_vacuous(c: &ModelClass, dist: &NoisyRegionDistribution, cap: f64) -> Result<bool> {
    Ok(loss_range(c, dist)?.1 <= cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{empirical_loss, Hypothesis};
    use crate::data::{generate_sample, IntervalClassifier};
    use proptest::prelude::*;

    fn two_cluster(eta: f64) -> NoisyRegionDistribution {
        NoisyRegionDistribution::new(IntervalClassifier::from_pairs(&[(0.2, 0.4), (0.6, 0.8)]).unwrap(), eta).unwrap()
    }

    /// Every union of at most `k` intervals with endpoints on `grid`.
    fn grid_hypotheses(grid: &[f64], k: usize) -> Vec<IntervalClassifier> {
        let mut out = vec![IntervalClassifier::empty()];
        let mut frontier = vec![Vec::<(f64, f64)>::new()];
        for _ in 0..k {
            let mut next = Vec::new();
            for pairs in &frontier {
                let start = pairs.last().map_or(0, |&(_, hi)| grid.partition_point(|&g| g <= hi));
                for i in start..grid.len() {
                    for j in i..grid.len() {
                        let mut p = pairs.clone();
                        p.push((grid[i], grid[j]));
                        out.push(IntervalClassifier::from_pairs(&p).unwrap());
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        out
    }

    #[test]
    fn loss_range_matches_class_optimum() {
        let dist = two_cluster(0.05);
        let mut prev = 0.0;
        for k in 1..5 {
            let (lo, hi) = loss_range(&ModelClass::Intervals(k), &dist).unwrap();
            assert!((lo - data::class_optimal_loss(&dist, k)).abs() < 1e-12);
            assert!(hi >= prev);
            prev = hi;
        }
        // The complement of A* takes three intervals: [0, 0.2), (0.4, 0.6), (0.8, 1].
        let (_, two) = loss_range(&ModelClass::Intervals(2), &dist).unwrap();
        assert!((two - (0.05 + 0.9 * 0.8)).abs() < 1e-12);
        assert!((prev - 0.95).abs() < 1e-12);
        let (lo, hi) = loss_range(&ModelClass::Thresholds, &dist).unwrap();
        let (_, l) = ModelClass::Thresholds.optimal(&dist).unwrap();
        assert!((lo - l).abs() < 1e-12);
        assert!(hi <= 0.95);
    }

    #[test]
    fn sigma_matches_grid() {
        let dist = two_cluster(0.1);
        let grid: Vec<f64> = (0..=80).map(|i| i as f64 / 80.0).collect();
        let hs = grid_hypotheses(&grid, 1);
        for cap in [0.3, 0.4, 0.5, 1.0] {
            let brute = hs
                .iter()
                .map(|h| data::true_loss(h, &dist))
                .filter(|&l| l <= cap + 1e-12)
                .map(|l| (l * (1.0 - l)).sqrt())
                .fold(f64::NEG_INFINITY, f64::max);
            let s = sigma(&ModelClass::Intervals(1), &dist, cap).unwrap();
            assert!((s - brute).abs() < 1e-9, "cap {cap}: {s} vs {brute}");
        }
    }

    proptest! {
        #[test]
        fn sup_dominates_and_is_attained_on_a_grid(seed in 0u64..500, k in 1usize..3, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let dist = two_cluster(0.1);
            let s = generate_sample(&dist, 6, seed).unwrap();
            // Grid containing every cut, so the optimum is representable
            // (closed intervals stand in for open cells up to the atoms they touch).
            let mut grid: Vec<f64> = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
            for i in 0..s.n() {
                let x = s.coord(i, 0);
                grid.extend([x, x - 1e-9, x + 1e-9]);
            }
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let c = ModelClass::Intervals(k);
            let sup = sup_combination(&c, &dist, &s, a, b).unwrap();
            let brute = grid_hypotheses(&grid, k)
                .into_iter()
                .map(|h| a * data::true_loss(&h, &dist) + b * empirical_loss(&Hypothesis::Region(h), &s))
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(brute <= sup + 1e-9);
            prop_assert!(sup - brute < 1e-7, "sup {} grid {}", sup, brute);
        }
    }
}
