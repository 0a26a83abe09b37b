//! Monte Carlo oracle-inequality experiments.
//!
//! Each replicate draws a sample, analyses every class of the hierarchy
//! once, derives each requested penalty from that analysis and records
//! which class each penalty selects. True losses are closed-form, so the
//! only randomness is the sample (and the Rademacher sign draws when
//! `n` exceeds the exact cap). Replicates run in parallel and are reduced
//! in replicate order, so reports do not depend on the worker count.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::classes::{empirical_loss, Hypothesis, ModelClass, Projection};
use crate::complexity::{self, LogShatterEstimate};
use crate::concentration::{CheckKind, TailCheckReport};
use crate::data::{self, generate_sample, NoisyRegionDistribution};
use crate::penalties::{self, ClassAnalysis, PenaltyKind, PenaltyOptions};
use crate::population;
use crate::rng;
use crate::stats::{binomial_se, Moments};
use crate::{Error, Result};

/// Above this many predicted error vectors, structure checks rely on
/// counts rather than explicit enumeration.
const STRUCTURE_ENUMERATION_LIMIT: f64 = 4096.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dist: NoisyRegionDistribution,
    pub hierarchy: Vec<ModelClass>,
    pub n: usize,
    pub reps: usize,
    pub penalties: Vec<PenaltyKind>,
    pub seed: u64,
    pub options: PenaltyOptions,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Samples used to estimate `E log S_k(X_1^n)` for `ū_k`.
    pub log_shatter_reps: usize,
    /// Tabulate the localized-penalty oracle bound in terms of `ū_k`.
    pub u_bar_bound: bool,
}

impl ExperimentConfig {
    pub fn new(dist: NoisyRegionDistribution, hierarchy: Vec<ModelClass>, n: usize) -> Self {
        ExperimentConfig {
            dist,
            hierarchy,
            n,
            reps: 100,
            penalties: PenaltyKind::ALL.to_vec(),
            seed: 0,
            options: PenaltyOptions::default(),
            workers: None,
            log_shatter_reps: 200,
            u_bar_bound: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if self.hierarchy.is_empty() {
            return Err(Error::InvalidArgument("the hierarchy is empty".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if self.penalties.is_empty() {
            return Err(Error::InvalidArgument("no penalty kinds requested".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn u_bar_active(&self) -> bool {
        self.u_bar_bound && self.penalties.contains(&PenaltyKind::Localized)
    }

    fn with_rademacher(&self) -> bool {
        penalties::needs_rademacher(&self.penalties) || self.u_bar_active()
    }
}

/// The `γ` of the probability hypothesis each penalty is held to: 8 for the
/// simple penalty, 11 otherwise.
pub fn lemma_gamma(kind: PenaltyKind) -> f64 {
    match kind {
        PenaltyKind::Simple => 8.0,
        _ => 11.0,
    }
}

/// Per class, per replicate.
#[derive(Debug, Clone)]
struct ClassDraw {
    emp_loss: f64,
    erm_true_loss: f64,
    u_hat: f64,
    subset_count: f64,
    rademacher_full: Option<f64>,
    opt_emp_loss: f64,
    /// `(raw, clamped)` per penalty kind, in config order.
    penalties: Vec<(f64, f64)>,
    structure_ok: bool,
}

#[derive(Debug, Clone)]
struct Replicate {
    classes: Vec<ClassDraw>,
    /// `(selected index, L(f̂))` per penalty kind.
    selections: Vec<(usize, f64)>,
}

/// Distribution facts shared by all replicates.
struct Oracle {
    bayes: f64,
    optimal: Vec<(Hypothesis, f64)>,
}

fn run_replicate(cfg: &ExperimentConfig, oracle: &Oracle, r: usize) -> Result<Replicate> {
    let s = generate_sample(&cfg.dist, cfg.n, rng::derive(cfg.seed, rng::TAG_REPLICATE, r as u64))?;
    let opts = PenaltyOptions {
        seed: rng::derive(cfg.seed, rng::TAG_RADEMACHER, r as u64),
        ..cfg.options
    };
    let mut classes = Vec::with_capacity(cfg.hierarchy.len());
    for (i, c) in cfg.hierarchy.iter().enumerate() {
        let k = i + 1;
        let proj = Projection::new(c, &s)?;
        let a = ClassAnalysis::new(&proj, k, &opts, cfg.with_rademacher())?;
        let penalties = cfg
            .penalties
            .iter()
            .map(|&kind| a.penalty(kind, c, &opts).map(|p| (p.raw_value, p.value)))
            .collect::<Result<Vec<_>>>()?;
        classes.push(ClassDraw {
            emp_loss: a.erm.empirical_loss,
            erm_true_loss: a.erm.classifier.true_loss(&cfg.dist)?,
            u_hat: a.localization.u_hat,
            subset_count: a.localization.subset_count as f64,
            rademacher_full: a.rademacher_full.map(|r| r.value),
            opt_emp_loss: empirical_loss(&oracle.optimal[i].0, &s),
            penalties,
            structure_ok: structure_holds(&proj, &a)?,
        });
    }
    let selections = (0..cfg.penalties.len())
        .map(|j| {
            let best = penalties::argmin_first(classes.iter().map(|c| c.emp_loss + c.penalties[j].1)).expect("nonempty");
            (best, classes[best].erm_true_loss)
        })
        .collect();
    Ok(Replicate { classes, selections })
}

/// The localized subclass contains the ERM error vector, is part of the
/// full class, and has the smaller Rademacher average.
fn structure_holds(proj: &Projection<'_>, a: &ClassAnalysis) -> Result<bool> {
    let loc = &a.localization;
    let mut ok = a.erm.errors <= loc.max_errors && loc.subset_count >= 1 && loc.subset_count <= a.shatter;
    if let (Some(f), Some(l)) = (a.rademacher_full, a.rademacher_local) {
        ok &= l.value <= f.value + 1e-12;
    }
    if proj.predicted_count() <= STRUCTURE_ENUMERATION_LIMIT {
        let full = proj.enumerate()?;
        let sub = full.filter(|e| e.count_ones() <= loc.max_errors);
        ok &= sub.is_subset(&full) && sub.contains(&a.erm.error_vector) && sub.count() as u128 == loc.subset_count;
        ok &= full.count() as u128 == a.shatter;
    }
    Ok(ok)
}

/// One class of the hierarchy, aggregated over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub k: usize,
    pub label: String,
    /// `L_k*`.
    pub optimal_loss: f64,
    pub mean_emp_loss: f64,
    /// Mean `L(f̂_k)`.
    pub mean_true_loss: f64,
    pub se_true_loss: f64,
    pub mean_u_hat: f64,
    pub mean_subset_count: f64,
    /// Mean and standard error of `R̂_{F_k}` when computed.
    pub rademacher_full: Option<(f64, f64)>,
}

/// One penalty at one class.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyRow {
    pub k: usize,
    pub mean_raw: f64,
    pub mean_clamped: f64,
    pub se_clamped: f64,
    pub selection_freq: f64,
    /// `L_k* − L* + mean Ĉ_k + c/n²`.
    pub oracle_term: f64,
    /// Replicates with `Ĉ_k ≤ (L − L̂)(f̂_k)`.
    pub lemma_erm_violations: usize,
    /// Replicates with `Ĉ_k ≤ (L̂ − L)(f_k*)`.
    pub lemma_opt_violations: usize,
}

/// One penalty kind aggregated over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct KindSummary {
    pub kind: PenaltyKind,
    pub mean_true_loss: f64,
    pub se_true_loss: f64,
    /// `mean L(f̂) − L*`.
    pub mean_excess: f64,
    /// `c` in the additive `c/n²` term: 16 for the simple penalty, 22 otherwise.
    pub expectation_constant: f64,
    /// `inf_k(L_k* − L* + mean Ĉ_k) + c/n²`.
    pub oracle_bound: f64,
    pub oracle_k: usize,
    /// Standard error of the minimizing `mean Ĉ_k`.
    pub oracle_se: f64,
    pub expectation_passed: bool,
    /// Replicates with `L(f̂) − L* > inf_k(L_k* − L* + 2Ĉ_k)`.
    pub probability_violations: usize,
    /// `4γ/n²`.
    pub probability_bound: f64,
    pub probability_vacuous: bool,
    pub probability_passed: bool,
    pub rows: Vec<PenaltyRow>,
}

/// The localized-penalty bound expressed through `ū_k`, per class.
#[derive(Debug, Clone, PartialEq)]
pub struct UBarRow {
    pub k: usize,
    pub expected_log_shatter: LogShatterEstimate,
    pub u_bar: f64,
    pub epsilon: f64,
    /// Mean `R̂` used for `E R̂_{F̄_k}`, and its standard error.
    pub rademacher: (f64, f64),
    /// Set when `F̄_k` is a proper subclass; the whole-class average is
    /// then an upper bound for `E R̂_{F̄_k}`.
    pub restricted: bool,
    /// `L_k* − L* + 8E R̂ + 15ε_k + 16 sqrt(L_k* + ū_k)·sqrt(2ε_k)`.
    pub term: f64,
    /// `sqrt(L_k*·(E log S ∨ log nk)/n)`.
    pub rate_term: f64,
    /// `(E log S ∨ log nk)/n`.
    pub fast_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UBarSummary {
    pub rows: Vec<UBarRow>,
    /// `min_k term + 22/n²`.
    pub bound: f64,
    pub bound_se: f64,
    pub lhs: f64,
    pub lhs_se: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub profile: String,
    pub bayes_risk: f64,
    pub classes: Vec<ClassSummary>,
    pub kinds: Vec<KindSummary>,
    pub u_bar_bound: Option<UBarSummary>,
    /// Replicate-class pairs where the localization structure failed.
    pub structure_violations: usize,
}

impl ExperimentReport {
    pub fn kind(&self, kind: PenaltyKind) -> Option<&KindSummary> {
        self.kinds.iter().find(|k| k.kind == kind)
    }
}

fn se_or_nan(m: &Moments) -> f64 {
    m.std_error()
}

fn aggregate(cfg: &ExperimentConfig, oracle: &Oracle, reps: &[Replicate], u_bar_bound: Option<&[(LogShatterEstimate, f64)]>) -> ExperimentReport {
    let nf = cfg.n as f64;
    let count = reps.len();
    let classes: Vec<ClassSummary> = cfg
        .hierarchy
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let col = |f: &dyn Fn(&ClassDraw) -> f64| Moments::from_iter(reps.iter().map(|r| f(&r.classes[i])));
            let tl = col(&|d| d.erm_true_loss);
            let rad = reps[0].classes[i]
                .rademacher_full
                .map(|_| col(&|d| d.rademacher_full.unwrap_or(f64::NAN)));
            ClassSummary {
                k: i + 1,
                label: c.to_string(),
                optimal_loss: oracle.optimal[i].1,
                mean_emp_loss: col(&|d| d.emp_loss).mean(),
                mean_true_loss: tl.mean(),
                se_true_loss: se_or_nan(&tl),
                mean_u_hat: col(&|d| d.u_hat).mean(),
                mean_subset_count: col(&|d| d.subset_count).mean(),
                rademacher_full: rad.map(|m| (m.mean(), se_or_nan(&m))),
            }
        })
        .collect();

    let kinds = cfg
        .penalties
        .iter()
        .enumerate()
        .map(|(j, &kind)| {
            let gamma = lemma_gamma(kind);
            let constant = 2.0 * gamma;
            let tl = Moments::from_iter(reps.iter().map(|r| r.selections[j].1));
            let rows: Vec<PenaltyRow> = classes
                .iter()
                .enumerate()
                .map(|(i, cs)| {
                    let pen = Moments::from_iter(reps.iter().map(|r| r.classes[i].penalties[j].1));
                    let raw = Moments::from_iter(reps.iter().map(|r| r.classes[i].penalties[j].0));
                    let chosen = reps.iter().filter(|r| r.selections[j].0 == i).count();
                    let erm_v = reps
                        .iter()
                        .filter(|r| {
                            let d = &r.classes[i];
                            d.penalties[j].1 <= d.erm_true_loss - d.emp_loss
                        })
                        .count();
                    let opt_v = reps
                        .iter()
                        .filter(|r| {
                            let d = &r.classes[i];
                            d.penalties[j].1 <= d.opt_emp_loss - cs.optimal_loss
                        })
                        .count();
                    PenaltyRow {
                        k: i + 1,
                        mean_raw: raw.mean(),
                        mean_clamped: pen.mean(),
                        se_clamped: se_or_nan(&pen),
                        selection_freq: chosen as f64 / count as f64,
                        oracle_term: cs.optimal_loss - oracle.bayes + pen.mean() + constant / (nf * nf),
                        lemma_erm_violations: erm_v,
                        lemma_opt_violations: opt_v,
                    }
                })
                .collect();
            let oracle_idx = penalties::argmin_first(rows.iter().map(|r| r.oracle_term)).expect("nonempty");
            let oracle_bound = rows[oracle_idx].oracle_term;
            let oracle_se = rows[oracle_idx].se_clamped;
            let mean_excess = tl.mean() - oracle.bayes;
            let slack = 3.0 * se_or_nan(&tl).hypot(oracle_se);
            // With one replicate there is no standard error; compare directly.
            let slack = if slack.is_nan() { 0.0 } else { slack };

            let violations = reps
                .iter()
                .filter(|r| {
                    let rhs = r
                        .classes
                        .iter()
                        .zip(&classes)
                        .map(|(d, cs)| cs.optimal_loss - oracle.bayes + 2.0 * d.penalties[j].1)
                        .fold(f64::INFINITY, f64::min);
                    r.selections[j].1 - oracle.bayes > rhs
                })
                .count();
            let pbound = 4.0 * gamma / (nf * nf);
            let rate = violations as f64 / count as f64;
            KindSummary {
                kind,
                mean_true_loss: tl.mean(),
                se_true_loss: se_or_nan(&tl),
                mean_excess,
                expectation_constant: constant,
                oracle_bound,
                oracle_k: oracle_idx + 1,
                oracle_se,
                expectation_passed: mean_excess <= oracle_bound + slack,
                probability_violations: violations,
                probability_bound: pbound,
                probability_vacuous: pbound >= 1.0,
                probability_passed: pbound >= 1.0 || rate <= pbound + 3.0 * binomial_se(pbound, count),
                rows,
            }
        })
        .collect::<Vec<_>>();

    let u_bar_bound = u_bar_bound.map(|est| {
        let loc = cfg.penalties.iter().position(|&k| k == PenaltyKind::Localized).expect("localized requested");
        let rows: Vec<UBarRow> = classes
            .iter()
            .zip(est)
            .map(|(cs, &(e, lmax))| {
                let k = cs.k;
                let u_bar = complexity::u_bar(e.mean_log, cfg.n, k);
                let eps = complexity::epsilon_k(cfg.n, k);
                let cap = 64.0 * cs.optimal_loss + 63.0 * u_bar;
                let rad = cs.rademacher_full.unwrap_or((f64::NAN, f64::NAN));
                let scale = e.mean_log.max(complexity::log_nk(cfg.n, k)) / nf;
                UBarRow {
                    k,
                    expected_log_shatter: e,
                    u_bar,
                    epsilon: eps,
                    rademacher: rad,
                    restricted: cap < lmax,
                    term: cs.optimal_loss - oracle.bayes
                        + 8.0 * rad.0
                        + 15.0 * eps
                        + 16.0 * (cs.optimal_loss + u_bar).sqrt() * (2.0 * eps).sqrt(),
                    rate_term: (cs.optimal_loss * scale).sqrt(),
                    fast_term: scale,
                }
            })
            .collect();
        let idx = penalties::argmin_first(rows.iter().map(|r| r.term)).expect("nonempty");
        let bound = rows[idx].term + 22.0 / (nf * nf);
        let bound_se = 8.0 * rows[idx].rademacher.1;
        let lhs = kinds[loc].mean_excess;
        let lhs_se = kinds[loc].se_true_loss;
        let slack = 3.0 * lhs_se.hypot(bound_se);
        UBarSummary {
            rows,
            bound,
            bound_se,
            lhs,
            lhs_se,
            passed: lhs <= bound + if slack.is_nan() { 0.0 } else { slack },
        }
    });

    ExperimentReport {
        n: cfg.n,
        reps: count,
        seed: cfg.seed,
        profile: cfg.options.profile.label(),
        bayes_risk: oracle.bayes,
        classes,
        kinds,
        u_bar_bound,
        structure_violations: reps.iter().flat_map(|r| &r.classes).filter(|d| !d.structure_ok).count(),
    }
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the replicate loop and aggregates it.
pub fn run_oracle_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let oracle = Oracle {
        bayes: data::bayes_risk(&cfg.dist),
        optimal: cfg.hierarchy.iter().map(|c| c.optimal(&cfg.dist)).collect::<Result<_>>()?,
    };
    in_pool(cfg.workers, || {
        let u_bar_bound = if cfg.u_bar_active() {
            Some(
                cfg.hierarchy
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let seed = rng::derive(cfg.seed, rng::TAG_LOG_SHATTER, i as u64);
                        let e = complexity::estimate_log_shatter(&cfg.dist, c, cfg.n, cfg.log_shatter_reps.max(1), seed)?;
                        // Classes without a population line (stumps) are treated as unrestricted.
                        let lmax = population::loss_range(c, &cfg.dist).map_or(f64::INFINITY, |r| r.1);
                        Ok((e, lmax))
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        let results: Vec<Result<Replicate>> = (0..cfg.reps).into_par_iter().map(|r| run_replicate(cfg, &oracle, r)).collect();
        let mut done = Vec::with_capacity(results.len());
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok(rep) => done.push(rep),
                Err(e) => {
                    let partial = (!done.is_empty()).then(|| Box::new(aggregate(cfg, &oracle, &done, u_bar_bound.as_deref())));
                    return Err(Error::Replicate {
                        replicate: r,
                        partial,
                        source: Box::new(e),
                    });
                }
            }
        }
        Ok(aggregate(cfg, &oracle, &done, u_bar_bound.as_deref()))
    })?
}

/// Checks of the two probability hypotheses on the penalty, per class,
/// against `γ/(n²k²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub kind: PenaltyKind,
    pub gamma: f64,
    /// `P{Ĉ_k ≤ (L − L̂)(f̂_k)}` per class.
    pub erm: Vec<TailCheckReport>,
    /// `P{Ĉ_k ≤ (L̂ − L)(f_k*)}` per class.
    pub optimal: Vec<TailCheckReport>,
    pub structure_violations: usize,
    pub report: ExperimentReport,
}

impl LemmaCheck {
    pub fn passed(&self) -> bool {
        self.erm.iter().chain(&self.optimal).all(|r| r.passed)
    }
}

/// Runs `cfg` for one penalty kind and checks both hypotheses per class.
pub fn run_lemma_check(cfg: &ExperimentConfig, kind: PenaltyKind, gamma: f64) -> Result<LemmaCheck> {
    let cfg = ExperimentConfig {
        penalties: vec![kind],
        u_bar_bound: false,
        ..cfg.clone()
    };
    let report = run_oracle_experiment(&cfg)?;
    let nf = cfg.n as f64;
    let tail = |name: &str, k: usize, violations: usize| {
        let bound = gamma / (nf * nf * (k * k) as f64);
        let rate = violations as f64 / report.reps as f64;
        TailCheckReport {
            proposition: format!("{name} {kind}"),
            kind: CheckKind::Tail,
            n: cfg.n,
            k,
            reps: report.reps,
            epsilon: f64::NAN,
            value: rate,
            std_error: binomial_se(rate, report.reps),
            bound,
            margin: bound - rate,
            passed: rate <= bound + 3.0 * binomial_se(bound, report.reps),
            note: String::new(),
        }
    };
    let rows = &report.kinds[0].rows;
    Ok(LemmaCheck {
        kind,
        gamma,
        erm: rows.iter().map(|r| tail("lemma erm", r.k, r.lemma_erm_violations)).collect(),
        optimal: rows.iter().map(|r| tail("lemma optimal", r.k, r.lemma_opt_violations)).collect(),
        structure_violations: report.structure_violations,
        report,
    })
}

/// Column order of the CSV report.
pub const CSV_HEADER: [&str; 14] = [
    "penalty",
    "k",
    "mean_emp_loss",
    "mean_penalty_raw",
    "mean_penalty_clamped",
    "mean_u_hat",
    "mean_subset_count",
    "selection_freq",
    "mean_true_loss",
    "se_true_loss",
    "oracle_bound",
    "violations",
    "reps",
    "seed",
];

/// Renders the per-penalty, per-class table as CSV text.
pub fn report_csv(report: &ExperimentReport) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for kind in &report.kinds {
        for (row, cs) in kind.rows.iter().zip(&report.classes) {
            let fields = [
                kind.kind.to_string(),
                row.k.to_string(),
                cs.mean_emp_loss.to_string(),
                row.mean_raw.to_string(),
                row.mean_clamped.to_string(),
                cs.mean_u_hat.to_string(),
                cs.mean_subset_count.to_string(),
                row.selection_freq.to_string(),
                cs.mean_true_loss.to_string(),
                cs.se_true_loss.to_string(),
                row.oracle_term.to_string(),
                kind.probability_violations.to_string(),
                report.reps.to_string(),
                report.seed.to_string(),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn write_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_csv(report)).map_err(|e| Error::io(path, e))
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Two panels: ERM excess risk against `k`, and mean clamped penalty
/// against `k` for each penalty kind.
pub fn report_svg(report: &ExperimentReport) -> String {
    let (w, h) = (900.0, 380.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let title = format!("n = {}, reps = {}, profile = {}", report.n, report.reps, report.profile);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, w / 2.0);

    let ks: Vec<f64> = report.classes.iter().map(|c| c.k as f64).collect();
    let excess: Vec<f64> = report.classes.iter().map(|c| c.mean_true_loss - report.bayes_risk).collect();
    let approx: Vec<f64> = report.classes.iter().map(|c| c.optimal_loss - report.bayes_risk).collect();
    panel(
        &mut s,
        (40.0, 40.0),
        "ERM excess risk",
        &ks,
        &[("L(f_k) - L*", PALETTE[0], &excess), ("L_k* - L*", "#7f7f7f", &approx)],
    );
    let pens: Vec<Vec<f64>> = report.kinds.iter().map(|k| k.rows.iter().map(|r| r.mean_clamped).collect()).collect();
    let series: Vec<(&str, &str, &[f64])> = report
        .kinds
        .iter()
        .zip(&pens)
        .enumerate()
        .map(|(i, (k, p))| (k.kind.name(), PALETTE[i % PALETTE.len()], p.as_slice()))
        .collect();
    panel(&mut s, (490.0, 40.0), "mean penalty", &ks, &series);
    s.push_str("</svg>\n");
    s
}

fn panel(s: &mut String, origin: (f64, f64), title: &str, xs: &[f64], series: &[(&str, &str, &[f64])]) {
    let (pw, ph) = (370.0, 270.0);
    let (x0, y0) = (origin.0 + 40.0, origin.1 + 20.0);
    let ymax = series
        .iter()
        .flat_map(|(_, _, ys)| ys.iter().copied())
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.1;
    let (xmin, xmax) = (xs.first().copied().unwrap_or(1.0), xs.last().copied().unwrap_or(1.0));
    let sx = |x: f64| if xmax > xmin { x0 + (x - xmin) / (xmax - xmin) * pw } else { x0 + pw / 2.0 };
    let sy = |y: f64| y0 + ph - y / ymax * ph;

    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{title}</text>"#, x0 + pw / 2.0, origin.1 + 10.0);
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for &x in xs {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#, sx(x), y0 + ph + 16.0);
    }
    for i in 0..=4 {
        let v = ymax * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, x0 - 4.0, sy(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">k</text>"#, x0 + pw / 2.0, y0 + ph + 32.0);
    for (i, (name, color, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (px, py) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>"#);
        }
        let ly = y0 + 14.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}" text-anchor="end" fill="{color}">{name}</text>"#, x0 + pw - 6.0);
    }
}

pub fn write_svg(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_svg(report)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

pub fn emit_report(report: &ExperimentReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv(report, path),
        ReportFormat::Svg => write_svg(report, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IntervalClassifier;

    fn small() -> ExperimentConfig {
        let dist = NoisyRegionDistribution::new(IntervalClassifier::from_pairs(&[(0.2, 0.4), (0.6, 0.8)]).unwrap(), 0.1).unwrap();
        let mut cfg = ExperimentConfig::new(dist, (1..=3).map(ModelClass::Intervals).collect(), 15);
        cfg.reps = 20;
        cfg.log_shatter_reps = 10;
        cfg
    }

    #[test]
    fn frequencies_sum_to_one_and_structure_holds() {
        let r = run_oracle_experiment(&small()).unwrap();
        for k in &r.kinds {
            let total: f64 = k.rows.iter().map(|r| r.selection_freq).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.structure_violations, 0);
        assert!(r.u_bar_bound.is_some());
    }

    #[test]
    fn single_replicate_has_undefined_errors() {
        let mut cfg = small();
        cfg.reps = 1;
        let r = run_oracle_experiment(&cfg).unwrap();
        assert!(r.kinds[0].se_true_loss.is_nan());
        assert!(r.classes[0].se_true_loss.is_nan());
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut r = run_oracle_experiment(&small()).unwrap();
        r.kinds.clear();
        assert_eq!(report_csv(&r), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn csv_has_one_row_per_kind_and_class() {
        let r = run_oracle_experiment(&small()).unwrap();
        let csv = report_csv(&r);
        assert_eq!(csv.lines().count(), 1 + 4 * 3);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == CSV_HEADER.len()));
        assert!(report_svg(&r).starts_with("<svg"));
    }

    #[test]
    fn failing_replicates_surface_as_errors() {
        let mut cfg = small();
        cfg.hierarchy = vec![ModelClass::Stumps(3)];
        cfg.u_bar_bound = false;
        assert!(matches!(run_oracle_experiment(&cfg), Err(Error::Replicate { replicate: 0, .. })));
    }
}
