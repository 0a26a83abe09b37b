//! Dynamic programs over a line of items where each item is either predicted
//! 1 ("covered") or 0, and the covered items form at most `k` maximal runs.
//! A union of `k` intervals induces exactly such labelings on sorted points.

const NEG: i64 = i64::MIN / 4;

/// Minimum-error labeling with at most `max_runs` runs.
///
/// `items[i] = (errors if 0, errors if 1)`. Among minimizers the labeling
/// with fewest runs wins, then the one whose run boundaries are
/// lexicographically smallest (start runs as early and end them as early
/// as the optimum allows).
pub(crate) fn min_error_runs(items: &[(u32, u32)], max_runs: usize) -> (u32, Vec<bool>) {
    let m = items.len();
    let width = (max_runs + 1) * 2;
    // table[i][r][s]: best (errors, extra runs) for items i.., with r runs
    // opened so far and s the label of item i - 1.
    let mut table = vec![(0u32, 0u32); (m + 1) * width];
    let at = |i: usize, r: usize, s: usize| i * width + r * 2 + s;
    for i in (0..m).rev() {
        let (e0, e1) = items[i];
        for r in 0..=max_runs {
            for s in 0..2 {
                let zero = table[at(i + 1, r, 0)];
                let mut best = (zero.0 + e0, zero.1);
                if s == 1 {
                    let one = table[at(i + 1, r, 1)];
                    best = best.min((one.0 + e1, one.1));
                } else if r < max_runs {
                    let one = table[at(i + 1, r + 1, 1)];
                    best = best.min((one.0 + e1, one.1 + 1));
                }
                table[at(i, r, s)] = best;
            }
        }
    }

    let total = table[at(0, 0, 0)].0;
    let mut pattern = Vec::with_capacity(m);
    let (mut r, mut s) = (0usize, 0usize);
    for (i, &(e0, e1)) in items.iter().enumerate() {
        let opt = table[at(i, r, s)];
        let zero = {
            let t = table[at(i + 1, r, 0)];
            (t.0 + e0, t.1)
        };
        let one = if s == 1 {
            let t = table[at(i + 1, r, 1)];
            Some((t.0 + e1, t.1))
        } else if r < max_runs {
            let t = table[at(i + 1, r + 1, 1)];
            Some((t.0 + e1, t.1 + 1))
        } else {
            None
        };
        let take_one = match (s, one) {
            (0, Some(v)) => v == opt,
            (_, Some(_)) => zero != opt,
            (_, None) => false,
        };
        if take_one {
            if s == 0 {
                r += 1;
            }
            s = 1;
        } else {
            s = 0;
        }
        pattern.push(take_one);
    }
    (total, pattern)
}

/// An item of a signed-weight maximization.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WeightedItem {
    pub w0: i64,
    pub w1: i64,
    pub e0: u32,
    pub e1: u32,
}

/// `max Σ w` over labelings with at most `max_runs` runs and, if `budget` is
/// given, at most `budget` errors. Returns `(value, errors)` for a maximizer
/// with the fewest errors, or `None` when no labeling fits the budget.
pub(crate) fn max_weight_runs(items: &[WeightedItem], max_runs: usize, budget: Option<u32>) -> Option<(i64, u32)> {
    let best = max_weight_unconstrained(items, max_runs);
    match budget {
        Some(b) if best.1 > b => max_weight_budgeted(items, max_runs, b),
        _ => Some(best),
    }
}

fn better(a: (i64, u32), b: (i64, u32)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn max_weight_unconstrained(items: &[WeightedItem], max_runs: usize) -> (i64, u32) {
    let width = (max_runs + 1) * 2;
    let mut cur = vec![(NEG, 0u32); width];
    let mut next = cur.clone();
    cur[0] = (0, 0);
    for it in items {
        next.fill((NEG, 0));
        for r in 0..=max_runs {
            for s in 0..2 {
                let (v, e) = cur[r * 2 + s];
                if v == NEG {
                    continue;
                }
                let z = (v + it.w0, e + it.e0);
                if better(z, next[r * 2]) {
                    next[r * 2] = z;
                }
                let r1 = if s == 1 { r } else { r + 1 };
                if r1 <= max_runs {
                    let o = (v + it.w1, e + it.e1);
                    if better(o, next[r1 * 2 + 1]) {
                        next[r1 * 2 + 1] = o;
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur.into_iter().fold((NEG, 0), |acc, x| if better(x, acc) { x } else { acc })
}

fn max_weight_budgeted(items: &[WeightedItem], max_runs: usize, budget: u32) -> Option<(i64, u32)> {
    let b = budget as usize + 1;
    let width = (max_runs + 1) * 2 * b;
    let idx = |r: usize, s: usize, c: usize| (r * 2 + s) * b + c;
    let mut cur = vec![NEG; width];
    let mut next = cur.clone();
    cur[0] = 0;
    for it in items {
        next.fill(NEG);
        let (e0, e1) = (it.e0 as usize, it.e1 as usize);
        for r in 0..=max_runs {
            for s in 0..2 {
                let r1 = if s == 1 { r } else { r + 1 };
                let base = idx(r, s, 0);
                for c in 0..b {
                    let v = cur[base + c];
                    if v == NEG {
                        continue;
                    }
                    if c + e0 < b {
                        let slot = &mut next[idx(r, 0, c + e0)];
                        *slot = (*slot).max(v + it.w0);
                    }
                    if r1 <= max_runs && c + e1 < b {
                        let slot = &mut next[idx(r1, 1, c + e1)];
                        *slot = (*slot).max(v + it.w1);
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let mut best: Option<(i64, u32)> = None;
    for r in 0..=max_runs {
        for s in 0..2 {
            for c in 0..b {
                let v = cur[idx(r, s, c)];
                if v == NEG {
                    continue;
                }
                let cand = (v, c as u32);
                if best.is_none_or(|bst| better(cand, bst)) {
                    best = Some(cand);
                }
            }
        }
    }
    best
}

/// Number of labelings with at most `max_runs` runs and at most `budget`
/// errors, saturating at `u128::MAX`.
pub(crate) fn count_within_budget(items: &[(u32, u32)], max_runs: usize, budget: u32) -> u128 {
    let b = budget as usize + 1;
    let idx = |r: usize, s: usize, c: usize| (r * 2 + s) * b + c;
    let mut cur = vec![0u128; (max_runs + 1) * 2 * b];
    let mut next = cur.clone();
    cur[0] = 1;
    for &(e0, e1) in items {
        next.fill(0);
        let (e0, e1) = (e0 as usize, e1 as usize);
        for r in 0..=max_runs {
            for s in 0..2 {
                let r1 = if s == 1 { r } else { r + 1 };
                for c in 0..b {
                    let v = cur[idx(r, s, c)];
                    if v == 0 {
                        continue;
                    }
                    if c + e0 < b {
                        let slot = &mut next[idx(r, 0, c + e0)];
                        *slot = slot.saturating_add(v);
                    }
                    if r1 <= max_runs && c + e1 < b {
                        let slot = &mut next[idx(r1, 1, c + e1)];
                        *slot = slot.saturating_add(v);
                    }
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur.into_iter().fold(0u128, u128::saturating_add)
}

/// Shape constraint on the covered set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RunShape {
    /// At most this many maximal runs.
    Runs(usize),
    /// A (possibly empty) suffix of the line.
    Suffix,
}

/// `max Σ w` over labelings of the given shape; `(w0, w1)` per item, with
/// `-inf` marking a forbidden label. Returns `-inf` when nothing is feasible.
pub(crate) fn max_real(items: &[(f64, f64)], shape: RunShape) -> f64 {
    match shape {
        RunShape::Runs(k) => {
            let width = (k + 1) * 2;
            let mut cur = vec![f64::NEG_INFINITY; width];
            let mut next = cur.clone();
            cur[0] = 0.0;
            for &(w0, w1) in items {
                next.fill(f64::NEG_INFINITY);
                for r in 0..=k {
                    for s in 0..2 {
                        let v = cur[r * 2 + s];
                        if v == f64::NEG_INFINITY {
                            continue;
                        }
                        next[r * 2] = next[r * 2].max(v + w0);
                        let r1 = if s == 1 { r } else { r + 1 };
                        if r1 <= k {
                            next[r1 * 2 + 1] = next[r1 * 2 + 1].max(v + w1);
                        }
                    }
                }
                std::mem::swap(&mut cur, &mut next);
            }
            cur.into_iter().fold(f64::NEG_INFINITY, f64::max)
        }
        RunShape::Suffix => {
            let (mut off, mut on) = (0.0f64, f64::NEG_INFINITY);
            for &(w0, w1) in items {
                let on_next = off.max(on) + w1;
                off += w0;
                on = on_next;
            }
            off.max(on)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn runs(p: &[bool]) -> usize {
        p.iter()
            .enumerate()
            .filter(|&(i, &b)| b && (i == 0 || !p[i - 1]))
            .count()
    }

    fn all_patterns(m: usize, k: usize) -> Vec<Vec<bool>> {
        (0u32..1 << m)
            .map(|bits| (0..m).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|p| runs(p) <= k)
            .collect()
    }

    fn boundaries(p: &[bool]) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 0..p.len() {
            if p[i] && (i == 0 || !p[i - 1]) {
                out.push(i);
            }
            if p[i] && (i + 1 == p.len() || !p[i + 1]) {
                out.push(i);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn min_error_matches_brute_force(
            items in proptest::collection::vec((0u32..4, 0u32..4), 1..9),
            k in 0usize..4,
        ) {
            let (total, pattern) = min_error_runs(&items, k);
            let cost = |p: &[bool]| -> u32 {
                p.iter().zip(&items).map(|(&b, &(e0, e1))| if b { e1 } else { e0 }).sum()
            };
            prop_assert_eq!(cost(&pattern), total);
            prop_assert!(runs(&pattern) <= k);
            let best = all_patterns(items.len(), k)
                .into_iter()
                .min_by(|a, b| {
                    (cost(a), runs(a), boundaries(a)).cmp(&(cost(b), runs(b), boundaries(b)))
                })
                .unwrap();
            prop_assert_eq!(pattern, best);
        }

        #[test]
        fn weighted_matches_brute_force(
            raw in proptest::collection::vec((-3i64..4, -3i64..4, 0u32..3, 0u32..3), 1..9),
            k in 1usize..4,
            budget in proptest::option::of(0u32..10),
        ) {
            let items: Vec<WeightedItem> = raw.iter().map(|&(w0, w1, e0, e1)| WeightedItem { w0, w1, e0, e1 }).collect();
            let mut best: Option<(i64, u32)> = None;
            let mut count = 0u128;
            for p in all_patterns(items.len(), k) {
                let v: i64 = p.iter().zip(&items).map(|(&b, it)| if b { it.w1 } else { it.w0 }).sum();
                let e: u32 = p.iter().zip(&items).map(|(&b, it)| if b { it.e1 } else { it.e0 }).sum();
                if budget.is_some_and(|b| e > b) {
                    continue;
                }
                count += 1;
                if best.is_none_or(|bst| better((v, e), bst)) {
                    best = Some((v, e));
                }
            }
            prop_assert_eq!(max_weight_runs(&items, k, budget), best);
            if let Some(b) = budget {
                let pairs: Vec<(u32, u32)> = items.iter().map(|it| (it.e0, it.e1)).collect();
                prop_assert_eq!(count_within_budget(&pairs, k, b), count);
            }
        }

        #[test]
        fn real_dp_matches_brute_force(
            items in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..9),
            k in 0usize..4,
        ) {
            let value = |p: &[bool]| -> f64 {
                p.iter().zip(&items).map(|(&b, &(w0, w1))| if b { w1 } else { w0 }).sum()
            };
            let best = all_patterns(items.len(), k).iter().map(|p| value(p)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((max_real(&items, RunShape::Runs(k)) - best).abs() < 1e-9);
            let m = items.len();
            let suffix = (0..=m)
                .map(|c| value(&(0..m).map(|i| i >= c).collect::<Vec<_>>()))
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((max_real(&items, RunShape::Suffix) - suffix).abs() < 1e-9);
        }
    }

    #[test]
    fn forbidden_labels() {
        let items = [(f64::NEG_INFINITY, 1.0), (2.0, f64::NEG_INFINITY), (f64::NEG_INFINITY, 1.0)];
        assert_eq!(max_real(&items, RunShape::Runs(2)), 4.0);
        assert_eq!(max_real(&items, RunShape::Runs(1)), f64::NEG_INFINITY);
        assert_eq!(max_real(&items, RunShape::Suffix), f64::NEG_INFINITY);
    }

    #[test]
    fn empty_labeling_preferred_on_ties() {
        let (total, pattern) = min_error_runs(&[(0, 0), (0, 0)], 2);
        assert_eq!(total, 0);
        assert_eq!(pattern, vec![false, false]);
    }
}
