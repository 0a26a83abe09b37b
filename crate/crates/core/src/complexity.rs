//! Random shatter coefficients, conditional Rademacher averages and the
//! localized subclass `F̂_k`.
//!
//! Logarithms are natural throughout ([`LOG_BASE`]).

use rand::Rng;
use rayon::prelude::*;

use crate::classes::{ErrorVectorSet, ModelClass, Projection};
use crate::data::{generate_sample, NoisyRegionDistribution};
use crate::rng::{self, substream};
use crate::stats::Moments;
use crate::{Error, Result};

/// Base of every logarithm in shatter and `log(nk)` terms.
pub const LOG_BASE: f64 = std::f64::consts::E;

/// Largest `n` for which Rademacher averages are computed exactly.
pub const EXACT_CAP: usize = 20;

/// Monte Carlo draws used when none are specified.
pub const DEFAULT_MC_DRAWS: usize = 10_000;

/// Above this many `(sign vector, error vector)` pairs the exact average
/// maximizes by dynamic programming instead of scanning the enumerated set.
const SCAN_LIMIT: f64 = (1u64 << 28) as f64;

/// `ln(nk)`.
pub fn log_nk(n: usize, k: usize) -> f64 {
    (n as f64 * k as f64).ln()
}

/// `S(X_1^n)`, the number of distinct error vectors of `c` on the sample.
pub fn random_shatter(c: &ModelClass, s: &crate::data::LabeledSample) -> Result<u128> {
    Projection::new(c, s)?.shatter_count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RademacherMode {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for RademacherMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RademacherMode::Exact => "exact",
            RademacherMode::MonteCarlo => "monte_carlo",
        })
    }
}

/// Estimate of `R̂ = E[sup_f (1/n) Σ σ_i 1{f(X_i) ≠ Y_i} | D_n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherEstimate {
    pub value: f64,
    /// Zero in exact mode.
    pub std_error: f64,
    pub mode: RademacherMode,
    /// Zero in exact mode.
    pub draws: usize,
}

impl RademacherEstimate {
    fn exact(value: f64) -> Self {
        RademacherEstimate {
            value,
            std_error: 0.0,
            mode: RademacherMode::Exact,
            draws: 0,
        }
    }

    fn from_moments(m: &Moments) -> Self {
        let std_error = if m.count() < 2 { 0.0 } else { m.std_error() };
        RademacherEstimate {
            value: m.mean(),
            std_error,
            mode: RademacherMode::MonteCarlo,
            draws: m.count(),
        }
    }
}

/// Exact average over all `2^n` sign vectors of the supremum over `ev`.
pub fn rademacher_exact(ev: &ErrorVectorSet) -> Result<RademacherEstimate> {
    let n = ev.n();
    if n > EXACT_CAP {
        return Err(Error::ExactCapExceeded { n, cap: EXACT_CAP });
    }
    if ev.count() == 0 {
        return Err(Error::InvalidArgument("Rademacher average of an empty set".into()));
    }
    let masks: Vec<(u64, i64)> = ev.iter().map(|e| (e.low_word(), e.count_ones() as i64)).collect();
    let total: i64 = (0u64..1 << n)
        .into_par_iter()
        .map(|plus| {
            // Σ σ_i e_i = #(e ∧ plus) − #(e ∧ minus) = 2·#(e ∧ plus) − #e.
            masks
                .iter()
                .map(|&(m, ones)| 2 * i64::from((m & plus).count_ones()) - ones)
                .max()
                .expect("nonempty")
        })
        .sum();
    Ok(RademacherEstimate::exact(total as f64 / (n as f64 * (1u64 << n) as f64)))
}

fn draw_plus_mask<R: Rng>(rng: &mut R, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

/// Monte Carlo average over `draws` sign vectors; draw `d` uses the
/// generator `substream(seed, d)`.
pub fn rademacher_mc(ev: &ErrorVectorSet, draws: usize, seed: u64) -> Result<RademacherEstimate> {
    if draws == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one draw".into()));
    }
    if ev.count() == 0 {
        return Err(Error::InvalidArgument("Rademacher average of an empty set".into()));
    }
    let n = ev.n();
    let vectors: Vec<_> = ev.iter().collect();
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| {
            let plus = draw_plus_mask(&mut substream(seed, d as u64), n);
            let best = vectors
                .iter()
                .map(|e| (0..n).filter(|&i| e.get(i)).map(|i| if plus[i] { 1i64 } else { -1 }).sum::<i64>())
                .max()
                .expect("nonempty");
            best as f64 / n as f64
        })
        .collect();
    Ok(RademacherEstimate::from_moments(&Moments::from_iter(values)))
}

/// How class-level Rademacher averages are estimated above [`EXACT_CAP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub draws: usize,
    pub seed: u64,
}

/// Rademacher averages of the whole class and of its subclass of error
/// vectors with at most `budget` ones, computed with common sign vectors so
/// the two estimates are ordered draw by draw.
///
/// Exact when `n ≤ EXACT_CAP`; otherwise Monte Carlo over sign vectors,
/// each supremum evaluated exactly by dynamic programming.
pub fn class_rademacher(
    proj: &Projection<'_>,
    budget: Option<usize>,
    mc: MonteCarlo,
) -> Result<(RademacherEstimate, RademacherEstimate)> {
    let n = proj.n();
    let budget = budget.filter(|&b| b < n).map(|b| b as u32);
    if n <= EXACT_CAP {
        if proj.predicted_count() * (1u64 << n) as f64 <= SCAN_LIMIT {
            let full = proj.enumerate()?;
            let full_r = rademacher_exact(&full)?;
            let sub_r = match budget {
                None => full_r,
                Some(b) => rademacher_exact(&full.filter(|e| e.count_ones() <= b as usize))?,
            };
            return Ok((full_r, sub_r));
        }
        let (f, s): (i64, i64) = (0u64..1 << n)
            .into_par_iter()
            .map(|plus| {
                let w: Vec<i64> = (0..n).map(|i| if plus >> i & 1 == 1 { 1 } else { -1 }).collect();
                sup_pair(proj, &w, budget)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let scale = n as f64 * (1u64 << n) as f64;
        return Ok((RademacherEstimate::exact(f as f64 / scale), RademacherEstimate::exact(s as f64 / scale)));
    }
    if mc.draws == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one draw".into()));
    }
    let pairs: Vec<(i64, i64)> = (0..mc.draws)
        .into_par_iter()
        .map(|d| {
            let plus = draw_plus_mask(&mut substream(mc.seed, d as u64), n);
            let w: Vec<i64> = plus.iter().map(|&p| if p { 1 } else { -1 }).collect();
            sup_pair(proj, &w, budget)
        })
        .collect();
    let full = Moments::from_iter(pairs.iter().map(|p| p.0 as f64 / n as f64));
    let sub = Moments::from_iter(pairs.iter().map(|p| p.1 as f64 / n as f64));
    Ok((RademacherEstimate::from_moments(&full), RademacherEstimate::from_moments(&sub)))
}

fn sup_pair(proj: &Projection<'_>, w: &[i64], budget: Option<u32>) -> (i64, i64) {
    let (full, errors) = proj.sup_weighted(w, None).expect("unconstrained class is nonempty");
    let sub = match budget {
        Some(b) if errors > b => proj.sup_weighted(w, Some(b)).map(|v| v.0).unwrap_or(i64::MIN),
        _ => full,
    };
    (full, sub)
}

/// Constants of the localized penalty and of `û_k`.
///
/// `paper` uses the published constants. `exploratory` multiplies the
/// `û_k` prefactor and the three additive penalty coefficients by a scale
/// factor so that localization becomes visible at moderate `n`; every
/// output produced under it is flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile {
    /// Prefactor of `û_k` (16).
    pub u_prefactor: f64,
    /// Weight of `log S_k(X_1^n)` in `û_k` (4).
    pub u_shatter: f64,
    /// Weight of `log(nk)` in `û_k` (9).
    pub u_log: f64,
    /// Multiplier of `L̂(f̂_k)` in the localization threshold (16).
    pub loc_emp: f64,
    /// Multiplier of `û_k` in the localization threshold (15).
    pub loc_u: f64,
    /// Coefficient of `R̂_{F̂_k}` in the penalty (8).
    pub pen_rademacher: f64,
    /// Coefficient of `n^{-1} log(nk)` (20).
    pub pen_log: f64,
    /// Coefficient of the square-root cross term (2).
    pub pen_cross: f64,
    /// Multiplier of `L̂(f̂_k)` inside the cross term (8).
    pub pen_emp: f64,
    /// Multiplier of `û_k` inside the cross term (7).
    pub pen_u: f64,
    /// `None` for the paper constants, the scale factor otherwise.
    pub exploratory_scale: Option<f64>,
}

impl ConstantProfile {
    pub const fn paper() -> Self {
        ConstantProfile {
            u_prefactor: 16.0,
            u_shatter: 4.0,
            u_log: 9.0,
            loc_emp: 16.0,
            loc_u: 15.0,
            pen_rademacher: 8.0,
            pen_log: 20.0,
            pen_cross: 2.0,
            pen_emp: 8.0,
            pen_u: 7.0,
            exploratory_scale: None,
        }
    }

    pub fn exploratory(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("exploratory scale must be positive, got {scale}")));
        }
        let p = ConstantProfile::paper();
        Ok(ConstantProfile {
            u_prefactor: p.u_prefactor * scale,
            pen_rademacher: p.pen_rademacher * scale,
            pen_log: p.pen_log * scale,
            pen_cross: p.pen_cross * scale,
            exploratory_scale: Some(scale),
            ..p
        })
    }

    pub fn is_paper(&self) -> bool {
        self.exploratory_scale.is_none()
    }

    pub fn label(&self) -> String {
        match self.exploratory_scale {
            None => "paper".into(),
            Some(s) => format!("exploratory({s})"),
        }
    }

    /// `û_k` from `ln S_k(X_1^n)`.
    pub fn u_hat(&self, log_shatter: f64, n: usize, k: usize) -> f64 {
        self.u_prefactor * (self.u_shatter * log_shatter + self.u_log * log_nk(n, k)) / n as f64
    }

    /// Localization threshold on the empirical loss.
    pub fn threshold(&self, erm_loss: f64, u_hat: f64) -> f64 {
        self.loc_emp * erm_loss + self.loc_u * u_hat
    }
}

impl Default for ConstantProfile {
    fn default() -> Self {
        ConstantProfile::paper()
    }
}

/// `û_k = 16(4 log S_k(X_1^n) + 9 log(nk))/n`.
pub fn u_hat(shatter_count: u128, n: usize, k: usize) -> f64 {
    ConstantProfile::paper().u_hat((shatter_count as f64).ln(), n, k)
}

/// `ū_k = 16(8 E log S_k(X_1^n) + 17 log(nk))/n`.
pub fn u_bar(expected_log_shatter: f64, n: usize, k: usize) -> f64 {
    16.0 * (8.0 * expected_log_shatter + 17.0 * log_nk(n, k)) / n as f64
}

/// `u_k = 8(2 log E S_k(X_1^n) + 2 log(nk))/n`.
pub fn u_k(log_expected_shatter: f64, n: usize, k: usize) -> f64 {
    8.0 * (2.0 * log_expected_shatter + 2.0 * log_nk(n, k)) / n as f64
}

/// `ε_k = 2 log(nk)/n`.
pub fn epsilon_k(n: usize, k: usize) -> f64 {
    2.0 * log_nk(n, k) / n as f64
}

/// Largest error count `c ≤ n` with `c/n ≤ threshold`.
pub fn max_errors(threshold: f64, n: usize) -> usize {
    if threshold >= 1.0 {
        return n;
    }
    if threshold < 0.0 {
        return 0;
    }
    let mut c = ((threshold * n as f64).floor() as usize).min(n);
    while c < n && (c + 1) as f64 / n as f64 <= threshold {
        c += 1;
    }
    while c > 0 && c as f64 / n as f64 > threshold {
        c -= 1;
    }
    c
}

/// The localized subclass `F̂_k = {f ∈ F_k : L̂(f) ≤ 16 L̂(f̂_k) + 15 û_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub u_hat: f64,
    pub threshold: f64,
    /// Error vectors of `F̂_k` are exactly those with at most this many ones.
    pub max_errors: usize,
    /// The subset itself, when it was enumerated.
    pub subset: Option<ErrorVectorSet>,
    pub subset_count: u128,
}

impl LocalizationResult {
    pub fn is_full(&self, n: usize) -> bool {
        self.max_errors >= n
    }
}

/// Localizes an enumerated error-vector set with the paper constants.
pub fn localized_subclass(full: &ErrorVectorSet, erm_loss: f64, uh: f64) -> LocalizationResult {
    let threshold = ConstantProfile::paper().threshold(erm_loss, uh);
    let budget = max_errors(threshold, full.n());
    let subset = full.filter(|e| e.count_ones() <= budget);
    LocalizationResult {
        u_hat: uh,
        threshold,
        max_errors: budget,
        subset_count: subset.count() as u128,
        subset: Some(subset),
    }
}

/// Localizes a projected class without enumerating it; the subset is
/// counted by dynamic programming.
pub fn localize(proj: &Projection<'_>, erm_loss: f64, uh: f64, profile: &ConstantProfile) -> Result<LocalizationResult> {
    let threshold = profile.threshold(erm_loss, uh);
    let budget = max_errors(threshold, proj.n());
    Ok(LocalizationResult {
        u_hat: uh,
        threshold,
        max_errors: budget,
        subset: None,
        subset_count: proj.count_within(budget)?,
    })
}

/// Replicate estimates of `E log S_k(X_1^n)` and `log E S_k(X_1^n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogShatterEstimate {
    pub mean_log: f64,
    pub se_log: f64,
    /// `ln` of the mean shatter coefficient, computed stably from the logs.
    pub log_mean: f64,
    pub reps: usize,
}

impl LogShatterEstimate {
    pub fn from_logs(logs: &[f64]) -> Self {
        let m = Moments::from_iter(logs.iter().copied());
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_mean = top + (logs.iter().map(|l| (l - top).exp()).sum::<f64>() / logs.len() as f64).ln();
        LogShatterEstimate {
            mean_log: m.mean(),
            se_log: if logs.len() < 2 { 0.0 } else { m.std_error() },
            log_mean,
            reps: logs.len(),
        }
    }
}

/// Averages `ln S_k(X_1^m)` over `reps` samples of size `m`; sample `r`
/// uses seed `derive(seed, TAG_LOG_SHATTER, r)`.
pub fn estimate_log_shatter(
    dist: &NoisyRegionDistribution,
    c: &ModelClass,
    m: usize,
    reps: usize,
    seed: u64,
) -> Result<LogShatterEstimate> {
    if reps == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let logs = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = generate_sample(dist, m, rng::derive(seed, rng::TAG_LOG_SHATTER, r as u64))?;
            Ok((random_shatter(c, &s)? as f64).ln())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LogShatterEstimate::from_logs(&logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::ErrorVector;
    use crate::data::LabeledSample;

    fn set(n: usize, rows: &[&[bool]]) -> ErrorVectorSet {
        ErrorVectorSet::new(n, rows.iter().map(|r| ErrorVector::from_bools(r))).unwrap()
    }

    #[test]
    fn worked_rademacher_values() {
        let zero = set(3, &[&[false, false, false]]);
        assert_eq!(rademacher_exact(&zero).unwrap().value, 0.0);
        let all = ErrorVectorSet::all(3).unwrap();
        assert_eq!(rademacher_exact(&all).unwrap().value, 0.5);
        let two = set(3, &[&[false, false, false], &[true, true, true]]);
        assert_eq!(rademacher_exact(&two).unwrap().value, 0.25);
        let mc = rademacher_mc(&zero, 50, 3).unwrap();
        assert_eq!((mc.value, mc.std_error), (0.0, 0.0));
    }

    #[test]
    fn exact_cap_is_enforced() {
        let big = ErrorVectorSet::new(21, [ErrorVector::zeros(21)]).unwrap();
        assert!(matches!(rademacher_exact(&big), Err(Error::ExactCapExceeded { n: 21, cap: 20 })));
    }

    #[test]
    fn mc_is_deterministic_and_close() {
        let all = ErrorVectorSet::all(3).unwrap();
        let a = rademacher_mc(&all, 100_000, 11).unwrap();
        let b = rademacher_mc(&all, 100_000, 11).unwrap();
        assert_eq!(a, b);
        assert!((a.value - 0.5).abs() <= 4.0 * a.std_error);
    }

    #[test]
    fn u_hat_examples() {
        assert_eq!(u_hat(1, 1, 1), 0.0);
        let direct = 16.0 * (4.0 * 50f64.ln() + 9.0 * 2000f64.ln()) / 1000.0;
        assert!((u_hat(50, 1000, 2) - direct).abs() < 1e-15);
        assert!((u_hat(50, 1000, 2) - 1.34490).abs() < 5e-6);
        assert!((u_hat(201, 100_000, 1) - 0.019973).abs() < 5e-7);
        assert_eq!(epsilon_k(1, 1), 0.0);
        assert!((epsilon_k(100, 3) - 0.114076).abs() < 5e-7);
        assert_eq!(u_bar(0.0, 1, 1), 0.0);
    }

    #[test]
    fn localization_examples() {
        let all = ErrorVectorSet::all(3).unwrap();
        let r = localized_subclass(&all, 0.0, 0.01);
        assert_eq!(r.subset_count, 1);
        assert!(r.subset.unwrap().contains(&ErrorVector::zeros(3)));
        let r = localized_subclass(&all, 0.0, 1.0 / 15.0);
        assert_eq!(r.subset_count, 8);
    }

    #[test]
    fn budget_rounding() {
        assert_eq!(max_errors(0.15, 3), 0);
        assert_eq!(max_errors(1.0 / 3.0, 3), 1);
        assert_eq!(max_errors(0.5, 10), 5);
        assert_eq!(max_errors(2.0, 10), 10);
        assert_eq!(max_errors(0.0, 10), 0);
    }

    #[test]
    fn class_rademacher_agrees_with_enumeration() {
        let s = LabeledSample::from_1d(&[0.1, 0.3, 0.35, 0.5, 0.7, 0.9], &[1, 0, 1, 1, 0, 0]).unwrap();
        let c = ModelClass::Intervals(2);
        let p = Projection::new(&c, &s).unwrap();
        let mc = MonteCarlo { draws: 10, seed: 0 };
        let (full, sub) = class_rademacher(&p, Some(2), mc).unwrap();
        let ev = p.enumerate().unwrap();
        assert_eq!(full, rademacher_exact(&ev).unwrap());
        assert_eq!(sub, rademacher_exact(&ev.filter(|e| e.count_ones() <= 2)).unwrap());
        assert!(sub.value <= full.value);
    }

    #[test]
    fn log_shatter_estimate() {
        let e = LogShatterEstimate::from_logs(&[0.0, 2f64.ln()]);
        assert!((e.mean_log - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((e.log_mean - 1.5f64.ln()).abs() < 1e-15);
    }
}
