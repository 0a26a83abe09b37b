//! Penalty families and the penalized selector
//! `k̂ = argmin_k L̂(f̂_k) + Ĉ_k`.
//!
//! Every penalty is clamped at 1; the unclamped value is kept as
//! `raw_value`.

use std::fmt;
use std::str::FromStr;

use crate::classes::{self, ErmResult, Hypothesis, LogShatter, ModelClass, Projection};
use crate::complexity::{self, ConstantProfile, LocalizationResult, MonteCarlo, RademacherEstimate};
use crate::data::LabeledSample;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PenaltyKind {
    /// `γ·sqrt((log S_k(2n) + log k)/n)`.
    Vapnik,
    /// `γ_1·R̂_{F_k} + γ_2·sqrt(log k / n)`.
    GlobalRademacher,
    /// Driven by `L̂(f̂_k)` and the worst-case shatter coefficient.
    Simple,
    /// Rademacher average of the localized subclass.
    Localized,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 4] = [
        PenaltyKind::Vapnik,
        PenaltyKind::GlobalRademacher,
        PenaltyKind::Simple,
        PenaltyKind::Localized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::Vapnik => "vapnik",
            PenaltyKind::GlobalRademacher => "global",
            PenaltyKind::Simple => "simple",
            PenaltyKind::Localized => "localized",
        }
    }

    fn needs_rademacher(self) -> bool {
        matches!(self, PenaltyKind::GlobalRademacher | PenaltyKind::Localized)
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "vapnik" => Ok(PenaltyKind::Vapnik),
            "global" | "global_rademacher" => Ok(PenaltyKind::GlobalRademacher),
            "simple" => Ok(PenaltyKind::Simple),
            "localized" => Ok(PenaltyKind::Localized),
            other => Err(Error::InvalidArgument(format!("unknown penalty {other:?}"))),
        }
    }
}

/// Which value stands in for `log S_k(2n)` in the distribution-free penalties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShatterBound {
    /// Exact worst-case formula where known, Sauer's bound otherwise.
    #[default]
    Exact,
    /// `V_k·ln(2n + 1)`.
    VcCap,
}

impl FromStr for ShatterBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(ShatterBound::Exact),
            "vc_cap" | "vc" => Ok(ShatterBound::VcCap),
            other => Err(Error::InvalidArgument(format!("unknown shatter bound {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyOptions {
    /// Vapnik multiplier.
    pub gamma: f64,
    pub global_gamma1: f64,
    pub global_gamma2: f64,
    /// Sign draws when `n` exceeds the exact Rademacher cap.
    pub mc_draws: usize,
    pub seed: u64,
    pub profile: ConstantProfile,
    pub shatter_bound: ShatterBound,
}

impl Default for PenaltyOptions {
    fn default() -> Self {
        PenaltyOptions {
            gamma: 1.0,
            global_gamma1: 2.0,
            global_gamma2: 1.0,
            mc_draws: complexity::DEFAULT_MC_DRAWS,
            seed: 0,
            profile: ConstantProfile::paper(),
            shatter_bound: ShatterBound::Exact,
        }
    }
}

impl PenaltyOptions {
    fn log_shatter_2n(&self, c: &ModelClass, n: usize) -> Result<LogShatter> {
        match self.shatter_bound {
            ShatterBound::Exact => classes::worst_case_log_shatter(c, 2 * n),
            ShatterBound::VcCap => Ok(classes::vc_log_shatter(c, 2 * n)),
        }
    }

    fn monte_carlo(&self, k: usize) -> MonteCarlo {
        MonteCarlo {
            draws: self.mc_draws,
            seed: rng::derive(self.seed, rng::TAG_RADEMACHER, k as u64),
        }
    }
}

/// `Ĉ_k` with its intermediate terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyBreakdown {
    pub kind: PenaltyKind,
    pub k: usize,
    pub n: usize,
    /// `min(raw_value, 1)`.
    pub value: f64,
    pub raw_value: f64,
    /// Named intermediate quantities in computation order.
    pub terms: Vec<(&'static str, f64)>,
    pub rademacher: Option<RademacherEstimate>,
    pub shatter_source: Option<classes::ShatterSource>,
    /// Set when the localized penalty ran under non-paper constants.
    pub exploratory: bool,
}

impl PenaltyBreakdown {
    fn new(kind: PenaltyKind, k: usize, n: usize, raw: f64, terms: Vec<(&'static str, f64)>) -> Self {
        let raw_value = raw.max(0.0);
        PenaltyBreakdown {
            kind,
            k,
            n,
            value: raw_value.min(1.0),
            raw_value,
            terms,
            rademacher: None,
            shatter_source: None,
            exploratory: false,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(t, _)| *t == name).map(|&(_, v)| v)
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidArgument(format!("penalties need n, k >= 1 (n = {n}, k = {k})")));
    }
    Ok(())
}

/// Raw Vapnik penalty from `log S_k(2n)`.
pub fn vapnik_raw(log_shatter_2n: f64, n: usize, k: usize, gamma: f64) -> f64 {
    gamma * ((log_shatter_2n + (k as f64).ln()) / n as f64).sqrt()
}

/// Raw simple penalty
/// `2·sqrt(2L̂ + 8(log S(2n) + 2 log(nk))/n)·sqrt(log S(2n)/n + 2 log(nk)/n)`.
pub fn simple_raw(log_shatter_2n: f64, emp_loss: f64, n: usize, k: usize) -> f64 {
    let nf = n as f64;
    let a = (log_shatter_2n + 2.0 * complexity::log_nk(n, k)) / nf;
    2.0 * (2.0 * emp_loss + 8.0 * a).sqrt() * a.sqrt()
}

/// Raw localized penalty
/// `8R̂_{F̂_k} + 20 log(nk)/n + 2·sqrt(log(nk)/n)·sqrt(8L̂ + 7û)`, under `profile`.
pub fn localized_raw(rademacher: f64, emp_loss: f64, u_hat: f64, n: usize, k: usize, profile: &ConstantProfile) -> f64 {
    let l = complexity::log_nk(n, k) / n as f64;
    profile.pen_rademacher * rademacher
        + profile.pen_log * l
        + profile.pen_cross * l.sqrt() * (profile.pen_emp * emp_loss + profile.pen_u * u_hat).sqrt()
}

pub fn penalty_vapnik(c: &ModelClass, n: usize, k: usize, gamma: f64, bound: ShatterBound) -> Result<PenaltyBreakdown> {
    check_nk(n, k)?;
    let opts = PenaltyOptions {
        shatter_bound: bound,
        ..PenaltyOptions::default()
    };
    let ls = opts.log_shatter_2n(c, n)?;
    let mut p = PenaltyBreakdown::new(
        PenaltyKind::Vapnik,
        k,
        n,
        vapnik_raw(ls.value, n, k, gamma),
        vec![("log_shatter_2n", ls.value), ("gamma", gamma)],
    );
    p.shatter_source = Some(ls.source);
    Ok(p)
}

pub fn penalty_global_rademacher(c: &ModelClass, s: &LabeledSample, k: usize, opts: &PenaltyOptions) -> Result<PenaltyBreakdown> {
    let proj = Projection::new(c, s)?;
    let a = ClassAnalysis::new(&proj, k, opts, true)?;
    a.penalty(PenaltyKind::GlobalRademacher, c, opts)
}

pub fn penalty_simple(c: &ModelClass, s: &LabeledSample, k: usize, opts: &PenaltyOptions) -> Result<PenaltyBreakdown> {
    let proj = Projection::new(c, s)?;
    let a = ClassAnalysis::new(&proj, k, opts, false)?;
    a.penalty(PenaltyKind::Simple, c, opts)
}

pub fn penalty_localized(c: &ModelClass, s: &LabeledSample, k: usize, opts: &PenaltyOptions) -> Result<PenaltyBreakdown> {
    let proj = Projection::new(c, s)?;
    let a = ClassAnalysis::new(&proj, k, opts, true)?;
    a.penalty(PenaltyKind::Localized, c, opts)
}

/// Everything the penalties need about one class on one sample:
/// ERM, random shatter coefficient, `û_k`, localization and, when
/// requested, the Rademacher averages of `F_k` and `F̂_k` (common signs).
#[derive(Debug, Clone)]
pub struct ClassAnalysis {
    pub k: usize,
    pub n: usize,
    pub erm: ErmResult,
    pub shatter: u128,
    pub log_shatter: f64,
    pub localization: LocalizationResult,
    pub rademacher_full: Option<RademacherEstimate>,
    pub rademacher_local: Option<RademacherEstimate>,
}

impl ClassAnalysis {
    pub fn new(proj: &Projection<'_>, k: usize, opts: &PenaltyOptions, with_rademacher: bool) -> Result<Self> {
        let n = proj.n();
        check_nk(n, k)?;
        let erm = proj.erm();
        let shatter = proj.shatter_count()?;
        let log_shatter = (shatter as f64).ln();
        let u_hat = opts.profile.u_hat(log_shatter, n, k);
        let localization = complexity::localize(proj, erm.empirical_loss, u_hat, &opts.profile)?;
        let (rademacher_full, rademacher_local) = if with_rademacher {
            let budget = (!localization.is_full(n)).then_some(localization.max_errors);
            let (f, l) = complexity::class_rademacher(proj, budget, opts.monte_carlo(k))?;
            (Some(f), Some(l))
        } else {
            (None, None)
        };
        Ok(ClassAnalysis {
            k,
            n,
            erm,
            shatter,
            log_shatter,
            localization,
            rademacher_full,
            rademacher_local,
        })
    }

    pub fn penalty(&self, kind: PenaltyKind, c: &ModelClass, opts: &PenaltyOptions) -> Result<PenaltyBreakdown> {
        let (n, k) = (self.n, self.k);
        let emp = self.erm.empirical_loss;
        let missing = || Error::InvalidArgument(format!("{kind} penalty needs a Rademacher estimate"));
        match kind {
            PenaltyKind::Vapnik => penalty_vapnik(c, n, k, opts.gamma, opts.shatter_bound),
            PenaltyKind::Simple => {
                let ls = opts.log_shatter_2n(c, n)?;
                let mut p = PenaltyBreakdown::new(
                    kind,
                    k,
                    n,
                    simple_raw(ls.value, emp, n, k),
                    vec![("emp_loss", emp), ("log_shatter_2n", ls.value), ("log_nk", complexity::log_nk(n, k))],
                );
                p.shatter_source = Some(ls.source);
                Ok(p)
            }
            PenaltyKind::GlobalRademacher => {
                let r = self.rademacher_full.ok_or_else(missing)?;
                let tail = opts.global_gamma2 * ((k as f64).ln() / n as f64).sqrt();
                let mut p = PenaltyBreakdown::new(
                    kind,
                    k,
                    n,
                    opts.global_gamma1 * r.value + tail,
                    vec![
                        ("rademacher", r.value),
                        ("rademacher_se", r.std_error),
                        ("gamma1", opts.global_gamma1),
                        ("gamma2", opts.global_gamma2),
                    ],
                );
                p.rademacher = Some(r);
                Ok(p)
            }
            PenaltyKind::Localized => {
                let r = self.rademacher_local.ok_or_else(missing)?;
                let loc = &self.localization;
                let mut p = PenaltyBreakdown::new(
                    kind,
                    k,
                    n,
                    localized_raw(r.value, emp, loc.u_hat, n, k, &opts.profile),
                    vec![
                        ("emp_loss", emp),
                        ("log_shatter_sample", self.log_shatter),
                        ("u_hat", loc.u_hat),
                        ("threshold", loc.threshold),
                        ("subset_count", loc.subset_count as f64),
                        ("rademacher_local", r.value),
                        ("rademacher_se", r.std_error),
                        ("log_nk", complexity::log_nk(n, k)),
                    ],
                );
                p.rademacher = Some(r);
                p.exploratory = !opts.profile.is_paper();
                Ok(p)
            }
        }
    }
}

/// One class in a selection table.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub k: usize,
    pub class: ModelClass,
    pub emp_loss: f64,
    pub classifier: Hypothesis,
    pub penalty: PenaltyBreakdown,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub kind: PenaltyKind,
    pub chosen_k: usize,
    pub chosen_classifier: Hypothesis,
    pub table: Vec<SelectionRow>,
}

/// Index of the smallest score; the first one on ties.
pub fn argmin_first(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Penalized model selection over `classes`, indexed from 1.
pub fn select_model(classes: &[ModelClass], s: &LabeledSample, kind: PenaltyKind, opts: &PenaltyOptions) -> Result<SelectionResult> {
    if classes.is_empty() {
        return Err(Error::InvalidArgument("model selection needs at least one class".into()));
    }
    let mut table = Vec::with_capacity(classes.len());
    for (i, c) in classes.iter().enumerate() {
        let k = i + 1;
        let row = Projection::new(c, s)
            .and_then(|proj| ClassAnalysis::new(&proj, k, opts, kind.needs_rademacher()))
            .and_then(|a| {
                let penalty = a.penalty(kind, c, opts)?;
                Ok(SelectionRow {
                    k,
                    class: c.clone(),
                    emp_loss: a.erm.empirical_loss,
                    classifier: a.erm.classifier,
                    score: a.erm.empirical_loss + penalty.value,
                    penalty,
                })
            });
        match row {
            Ok(r) => table.push(r),
            Err(e) => {
                return Err(Error::Selection {
                    k,
                    partial: table,
                    source: Box::new(e),
                })
            }
        }
    }
    let best = argmin_first(table.iter().map(|r| r.score)).expect("nonempty table");
    Ok(SelectionResult {
        kind,
        chosen_k: table[best].k,
        chosen_classifier: table[best].classifier.clone(),
        table,
    })
}

/// Whether a penalty kind needs Rademacher estimates.
pub fn needs_rademacher(kinds: &[PenaltyKind]) -> bool {
    kinds.iter().any(|k| k.needs_rademacher())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IntervalClassifier;

    fn fixed_zero() -> (ModelClass, LabeledSample) {
        let s = LabeledSample::from_1d(&[0.5], &[1]).unwrap();
        (ModelClass::Fixed(IntervalClassifier::single(0.0, 1.0).unwrap()), s)
    }

    #[test]
    fn trivial_penalties_vanish() {
        let (c, s) = fixed_zero();
        let opts = PenaltyOptions::default();
        assert_eq!(penalty_vapnik(&c, 1, 1, 1.0, ShatterBound::Exact).unwrap().value, 0.0);
        assert_eq!(penalty_global_rademacher(&c, &s, 1, &opts).unwrap().value, 0.0);
        assert_eq!(penalty_simple(&c, &s, 1, &opts).unwrap().value, 0.0);
        assert_eq!(penalty_localized(&c, &s, 1, &opts).unwrap().value, 0.0);
    }

    #[test]
    fn vapnik_and_simple_with_the_vc_cap() {
        let c = ModelClass::Intervals(1);
        let v = penalty_vapnik(&c, 1000, 1, 1.0, ShatterBound::VcCap).unwrap();
        assert!((v.value - 0.1232997).abs() < 5e-8, "{}", v.value);
        let raw = simple_raw(2.0 * 2001f64.ln(), 0.0, 1000, 1);
        assert!((raw - 0.1641524).abs() < 5e-8, "{raw}");
        let exact = penalty_vapnik(&c, 1000, 1, 1.0, ShatterBound::Exact).unwrap();
        assert_eq!(exact.shatter_source, Some(classes::ShatterSource::Exact));
        assert!(exact.value < v.value);
    }

    #[test]
    fn global_on_a_shattered_sample_hits_the_clamp() {
        // Three points, two intervals: every labeling is realized.
        let s = LabeledSample::from_1d(&[0.1, 0.2, 0.3], &[0, 1, 0]).unwrap();
        let p = penalty_global_rademacher(&ModelClass::Intervals(2), &s, 1, &PenaltyOptions::default()).unwrap();
        assert_eq!(p.raw_value, 1.0);
        assert_eq!(p.value, 1.0);
    }

    #[test]
    fn localized_from_given_terms() {
        let raw = localized_raw(0.002, 0.0, 0.019973, 100_000, 1, &ConstantProfile::paper());
        assert!((raw - 0.026327).abs() < 5e-6, "{raw}");
        assert!(raw >= 8.0 * 0.002);
    }

    #[test]
    fn simple_is_monotone_in_the_empirical_loss() {
        let mut prev = 0.0;
        for i in 0..=10 {
            let v = simple_raw(10.0, i as f64 / 10.0, 500, 2);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn argmin_prefers_the_first() {
        assert_eq!(argmin_first([0.2, 0.35]), Some(0));
        assert_eq!(argmin_first([0.3, 0.1, 0.1]), Some(1));
        assert_eq!(argmin_first(std::iter::empty()), None);
    }

    #[test]
    fn single_class_is_chosen() {
        let s = LabeledSample::from_1d(&[0.1, 0.4, 0.6], &[0, 1, 0]).unwrap();
        let r = select_model(&[ModelClass::Intervals(1)], &s, PenaltyKind::Localized, &PenaltyOptions::default()).unwrap();
        assert_eq!(r.chosen_k, 1);
        assert_eq!(r.table.len(), 1);
    }

    #[test]
    fn failures_carry_the_partial_table() {
        let s = LabeledSample::from_1d(&[0.1, 0.4, 0.6], &[0, 1, 0]).unwrap();
        let err = select_model(
            &[ModelClass::Intervals(1), ModelClass::Stumps(2)],
            &s,
            PenaltyKind::Simple,
            &PenaltyOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Selection { k, partial, .. } => {
                assert_eq!(k, 2);
                assert_eq!(partial.len(), 1);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn kinds_parse() {
        for k in PenaltyKind::ALL {
            assert_eq!(k.name().parse::<PenaltyKind>().unwrap(), k);
        }
        assert!("ridge".parse::<PenaltyKind>().is_err());
    }
}
