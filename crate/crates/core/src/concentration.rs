//! Monte Carlo checks of the deviation and concentration inequalities the
//! penalties rely on.
//!
//! Each check draws three independent batches: batch A produces the
//! statistic whose tail (or mean) is tested, batch B estimates the
//! expectations that enter the right-hand side, and batch C holds samples
//! of size `2n` where the bound involves `X_1^{2n}`.
//!
//! A tail check passes when the observed violation rate is at most
//! `bound + 3·sqrt(bound(1 − bound)/reps)`. An expectation check passes
//! when `LHS ≤ RHS + 3·sqrt(se_L² + se_R²)`.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use crate::classes::{ModelClass, Projection};
use crate::complexity::{self, LogShatterEstimate, MonteCarlo};
use crate::data::{generate_sample, LabeledSample, NoisyRegionDistribution};
use crate::population;
use crate::rng;
use crate::stats::{binomial_se, Moments};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// `value` is a violation frequency compared with a probability bound.
    Tail,
    /// `value` is a Monte Carlo mean compared with an estimated right-hand side.
    Expectation,
    /// `value` and `bound` are computed on one batch and compared directly.
    Deterministic,
}

/// Outcome of one inequality check.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCheckReport {
    pub proposition: String,
    pub kind: CheckKind,
    pub n: usize,
    pub k: usize,
    pub reps: usize,
    pub epsilon: f64,
    /// Violation rate for tail checks, left-hand side otherwise.
    pub value: f64,
    /// Standard error of `value` (combined with the right-hand side's for
    /// expectation checks).
    pub std_error: f64,
    pub bound: f64,
    /// `bound − value`.
    pub margin: f64,
    pub passed: bool,
    pub note: String,
}

impl TailCheckReport {
    fn tail(name: impl Into<String>, setup: &CheckSetup, epsilon: f64, violations: usize, bound: f64) -> Self {
        let reps = setup.reps;
        let rate = violations as f64 / reps as f64;
        let slack = 3.0 * binomial_se(bound, reps);
        TailCheckReport {
            proposition: name.into(),
            kind: CheckKind::Tail,
            n: setup.n,
            k: setup.k,
            reps,
            epsilon,
            value: rate,
            std_error: binomial_se(rate, reps),
            bound,
            margin: bound - rate,
            passed: rate <= bound + slack,
            note: if bound >= 1.0 { "vacuous bound".into() } else { String::new() },
        }
    }

    fn expectation(name: impl Into<String>, setup: &CheckSetup, lhs: (f64, f64), rhs: (f64, f64)) -> Self {
        let se = lhs.1.hypot(rhs.1);
        TailCheckReport {
            proposition: name.into(),
            kind: CheckKind::Expectation,
            n: setup.n,
            k: setup.k,
            reps: setup.reps,
            epsilon: f64::NAN,
            value: lhs.0,
            std_error: se,
            bound: rhs.0,
            margin: rhs.0 - lhs.0,
            passed: lhs.0 <= rhs.0 + 3.0 * se,
            note: String::new(),
        }
    }

    fn deterministic(name: impl Into<String>, setup: &CheckSetup, lhs: f64, rhs: f64) -> Self {
        TailCheckReport {
            proposition: name.into(),
            kind: CheckKind::Deterministic,
            n: setup.n,
            k: setup.k,
            reps: setup.reps,
            epsilon: f64::NAN,
            value: lhs,
            std_error: 0.0,
            bound: rhs,
            margin: rhs - lhs,
            passed: lhs <= rhs * (1.0 + 1e-12) + 1e-12,
            note: String::new(),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if self.note.is_empty() {
            self.note = note;
        } else {
            self.note = format!("{}; {note}", self.note);
        }
        self
    }
}

impl fmt::Display for TailCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} n={} k={} reps={} value={:.6} se={:.2e} bound={:.6} margin={:.6}",
            if self.passed { "PASS" } else { "FAIL" },
            self.proposition,
            self.n,
            self.k,
            self.reps,
            self.value,
            self.std_error,
            self.bound,
            self.margin
        )?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

/// Distribution, class and sampling plan shared by every check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSetup {
    pub dist: NoisyRegionDistribution,
    pub class: ModelClass,
    /// Position of the class in its hierarchy, used in `log(nk)` terms.
    pub k: usize,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

impl CheckSetup {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.reps == 0 || self.k == 0 {
            return Err(Error::InvalidArgument("checks need n, reps and k >= 1".into()));
        }
        Ok(())
    }

    /// Runs `f` on each of `reps` samples of size `m` from stream `tag`,
    /// returning results in replicate order.
    fn batch<T: Send>(&self, tag: u64, m: usize, f: impl Fn(&LabeledSample) -> Result<T> + Sync) -> Result<Vec<T>> {
        (0..self.reps)
            .into_par_iter()
            .map(|r| {
                let s = generate_sample(&self.dist, m, rng::derive(self.seed, tag, r as u64))?;
                f(&s)
            })
            .collect()
    }

    fn shatter(&self, s: &LabeledSample) -> Result<f64> {
        Ok(Projection::new(&self.class, s)?.shatter_count()? as f64)
    }

    fn exact_rademacher(&self, s: &LabeledSample) -> Result<f64> {
        if self.n > complexity::EXACT_CAP {
            return Err(Error::ExactCapExceeded {
                n: self.n,
                cap: complexity::EXACT_CAP,
            });
        }
        let proj = Projection::new(&self.class, s)?;
        let mc = MonteCarlo { draws: 1, seed: 0 };
        Ok(complexity::class_rademacher(&proj, None, mc)?.0.value)
    }
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = Moments::from_iter(values.iter().copied());
    (m.mean(), if m.count() < 2 { 0.0 } else { m.std_error() })
}

/// `ε = 4(ln E S(X_1^{2n}) + 2 ln n)/n`, which makes the relative
/// deviation bound equal `4/n²`.
pub fn relative_vc_epsilon(expected_shatter_2n: f64, n: usize) -> f64 {
    4.0 * (expected_shatter_2n.ln() + 2.0 * (n as f64).ln()) / n as f64
}

/// Relative deviation bounds, both directions:
/// `P{sup_f L(f) − 2L̂(f) ≥ 2ε} ≤ 4 E S(X_1^{2n}) e^{−nε/4}` and the same
/// for `L̂(f) − 2L(f)`. The suprema are exact over the class.
///
/// Without `epsilon`, uses [`relative_vc_epsilon`].
pub fn check_relative_vc(setup: &CheckSetup, epsilon: Option<f64>) -> Result<Vec<TailCheckReport>> {
    setup.validate()?;
    let n = setup.n;
    let shatters = setup.batch(rng::TAG_DOUBLE_SAMPLE, 2 * n, |s| setup.shatter(s))?;
    let (es, _) = mean_se(&shatters);
    let eps = epsilon.unwrap_or_else(|| relative_vc_epsilon(es, n));
    let stats = setup.batch(rng::TAG_REPLICATE, n, |s| {
        Ok((
            population::sup_combination(&setup.class, &setup.dist, s, 1.0, -2.0)?,
            population::sup_combination(&setup.class, &setup.dist, s, -2.0, 1.0)?,
        ))
    })?;
    let bound = 4.0 * es * (-(n as f64) * eps / 4.0).exp();
    let up = stats.iter().filter(|s| s.0 >= 2.0 * eps).count();
    let down = stats.iter().filter(|s| s.1 >= 2.0 * eps).count();
    Ok(vec![
        TailCheckReport::tail("3.2 upper", setup, eps, up, bound),
        TailCheckReport::tail("3.2 lower", setup, eps, down, bound),
    ])
}

/// Concentration of `log S(X_1^n)` in both directions with bound `e^{−ε}`,
/// under natural and base-2 logarithms, plus the chain
/// `E log S ≤ log E S ≤ (1/ln 2) E log S ≤ 2 E log S`.
pub fn check_shatter_concentration(setup: &CheckSetup, epsilon: f64) -> Result<Vec<TailCheckReport>> {
    setup.validate()?;
    let n = setup.n;
    let stat: Vec<f64> = setup.batch(rng::TAG_REPLICATE, n, |s| Ok(setup.shatter(s)?.ln()))?;
    let expect: Vec<f64> = setup.batch(rng::TAG_EXPECTATION, n, |s| Ok(setup.shatter(s)?.ln()))?;
    let est = LogShatterEstimate::from_logs(&expect);
    let bound = (-epsilon).exp();
    let mut out = Vec::new();
    for (label, base) in [("ln", 1.0), ("log2", std::f64::consts::LN_2)] {
        let mean = est.mean_log / base;
        let lower = stat.iter().filter(|&&l| mean > 2.0 * l / base + 2.0 * epsilon).count();
        let upper = stat.iter().filter(|&&l| l / base > 2.0 * mean + 2.0 * epsilon).count();
        out.push(TailCheckReport::tail(format!("3.3 lower {label}"), setup, epsilon, lower, bound));
        out.push(TailCheckReport::tail(format!("3.3 upper {label}"), setup, epsilon, upper, bound));
    }
    let inv_ln2 = 1.0 / std::f64::consts::LN_2;
    out.push(TailCheckReport::deterministic("3.3 chain E log S <= log E S", setup, est.mean_log, est.log_mean));
    out.push(TailCheckReport::deterministic(
        "3.3 chain log E S <= E log S / ln 2",
        setup,
        est.log_mean,
        inv_ln2 * est.mean_log,
    ));
    out.push(TailCheckReport::deterministic(
        "3.3 chain E log S / ln 2 <= 2 E log S",
        setup,
        inv_ln2 * est.mean_log,
        2.0 * est.mean_log,
    ));
    Ok(out)
}

/// `P[R̂ ≥ 2E R̂ + ε] ≤ e^{−6nε/5}` and `P[R̂ ≤ E R̂/2 − ε] ≤ e^{−nε}`, with
/// `R̂` computed exactly.
pub fn check_rademacher_concentration(setup: &CheckSetup, epsilon: f64) -> Result<Vec<TailCheckReport>> {
    setup.validate()?;
    let n = setup.n;
    let stat = setup.batch(rng::TAG_REPLICATE, n, |s| setup.exact_rademacher(s))?;
    let expect = setup.batch(rng::TAG_EXPECTATION, n, |s| setup.exact_rademacher(s))?;
    let (er, _) = mean_se(&expect);
    let up = stat.iter().filter(|&&r| r >= 2.0 * er + epsilon).count();
    let down = stat.iter().filter(|&&r| r <= 0.5 * er - epsilon).count();
    let nf = n as f64;
    Ok(vec![
        TailCheckReport::tail("4.4 upper", setup, epsilon, up, (-6.0 * nf * epsilon / 5.0).exp()),
        TailCheckReport::tail("4.4 lower", setup, epsilon, down, (-nf * epsilon).exp()),
    ])
}

/// Population-localized class `F_k* = {f : L(f) ≤ 4L_k* + 3u_k}`: returns
/// the cap `4L_k* + 3u_k`, and fails unless the cap leaves the whole class.
fn population_class(setup: &CheckSetup, log_expected_shatter: f64) -> Result<f64> {
    let (lk, _) = population::loss_range(&setup.class, &setup.dist)?;
    let cap = 4.0 * lk + 3.0 * complexity::u_k(log_expected_shatter, setup.n, setup.k);
    if !population::cap_is_vacuous(&setup.class, &setup.dist, cap)? {
        return Err(Error::Unsupported {
            operation: "suprema over a population-localized class that excludes part of the class",
            class: setup.class.to_string(),
        });
    }
    Ok(cap)
}

/// Talagrand's inequality over `F_k*`:
/// `P[sup|L̂ − L| ≥ 2E sup|L̂ − L| + Σ·sqrt(2ε) + 4ε/3] ≤ e^{−nε}` with
/// `Σ = sup sqrt(L(1 − L))`.
pub fn check_talagrand(setup: &CheckSetup, epsilon: f64) -> Result<Vec<TailCheckReport>> {
    setup.validate()?;
    let n = setup.n;
    let (c, d) = (&setup.class, &setup.dist);
    let expect = setup.batch(rng::TAG_EXPECTATION, n, |s| {
        Ok((population::sup_abs_deviation(c, d, s)?, setup.shatter(s)?.ln()))
    })?;
    let logs: Vec<f64> = expect.iter().map(|e| e.1).collect();
    let cap = population_class(setup, LogShatterEstimate::from_logs(&logs).log_mean)?;
    let sigma = population::sigma(c, d, cap)?;
    let (esup, _) = mean_se(&expect.iter().map(|e| e.0).collect::<Vec<_>>());
    let threshold = 2.0 * esup + sigma * (2.0 * epsilon).sqrt() + 4.0 * epsilon / 3.0;
    let stat = setup.batch(rng::TAG_REPLICATE, n, |s| population::sup_abs_deviation(c, d, s))?;
    let violations = stat.iter().filter(|&&v| v >= threshold).count();
    Ok(vec![TailCheckReport::tail("4.5", setup, epsilon, violations, (-(n as f64) * epsilon).exp())
        .with_note(format!("sigma={sigma:.6}, threshold={threshold:.6}"))])
}

/// Expectation-level inequalities:
/// symmetrization `E sup|L̂ − L| ≤ 2E R̂` over `F_k*`, its converse
/// `E R̂ ≤ 2E sup|L̂ − L| + sup L/sqrt(n)`, and the bound
/// `E sup|L̂ − L| ≤ 8E log 2S(X_1^{2n})/n + 4 sqrt(2Σ² E log 2S(X_1^{2n})/n)`.
///
/// Rademacher averages are exact for `n ≤ 20` and use `mc_draws` sign
/// draws otherwise.
pub fn check_symmetrization_and_massart(setup: &CheckSetup, mc_draws: usize) -> Result<Vec<TailCheckReport>> {
    setup.validate()?;
    let n = setup.n;
    let (c, d) = (&setup.class, &setup.dist);
    let rad = |s: &LabeledSample, r_seed: u64| -> Result<f64> {
        let proj = Projection::new(c, s)?;
        let mc = MonteCarlo {
            draws: mc_draws.max(1),
            seed: r_seed,
        };
        Ok(complexity::class_rademacher(&proj, None, mc)?.0.value)
    };
    let a = setup.batch(rng::TAG_REPLICATE, n, |s| population::sup_abs_deviation(c, d, s))?;
    let b = (0..setup.reps)
        .into_par_iter()
        .map(|r| {
            let s = generate_sample(d, n, rng::derive(setup.seed, rng::TAG_EXPECTATION, r as u64))?;
            let seed = rng::derive(setup.seed, rng::TAG_POPULATION_RADEMACHER, r as u64);
            Ok((rad(&s, seed)?, setup.shatter(&s)?.ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    let log2s = setup.batch(rng::TAG_DOUBLE_SAMPLE, 2 * n, |s| Ok(2f64.ln() + setup.shatter(s)?.ln()))?;

    let rads: Vec<f64> = b.iter().map(|x| x.0).collect();
    let logs: Vec<f64> = b.iter().map(|x| x.1).collect();
    population_class(setup, LogShatterEstimate::from_logs(&logs).log_mean)?;
    let (esup, se_sup) = mean_se(&a);
    let (erad, se_rad) = mean_se(&rads);
    let (elog2s, se_log2s) = mean_se(&log2s);
    let (_, lmax) = population::loss_range(c, d)?;
    let sigma = population::sigma(c, d, 1.0)?;
    let nf = n as f64;

    let massart = |e: f64| 8.0 * e / nf + 4.0 * (2.0 * sigma * sigma * e / nf).sqrt();
    // Delta method for the standard error of the Massart right-hand side.
    let h = 1e-6 * elog2s.max(1.0);
    let slope = (massart(elog2s + h) - massart(elog2s - h)) / (2.0 * h);
    Ok(vec![
        TailCheckReport::expectation("4.7", setup, (esup, se_sup), (2.0 * erad, 2.0 * se_rad)),
        TailCheckReport::expectation("4.8", setup, (erad, se_rad), (2.0 * esup + lmax / nf.sqrt(), 2.0 * se_sup)),
        TailCheckReport::expectation("4.6", setup, (esup, se_sup), (massart(elog2s), slope.abs() * se_log2s))
            .with_note(format!("sigma={sigma:.6}")),
    ])
}

/// Writes reports as CSV.
pub fn write_reports(reports: &[TailCheckReport], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    w.write_record([
        "proposition",
        "kind",
        "n",
        "k",
        "reps",
        "epsilon",
        "value",
        "std_error",
        "bound",
        "margin",
        "passed",
        "note",
    ])
    .map_err(|e| Error::csv(path, e))?;
    for r in reports {
        let kind = match r.kind {
            CheckKind::Tail => "tail",
            CheckKind::Expectation => "expectation",
            CheckKind::Deterministic => "deterministic",
        };
        w.write_record([
            r.proposition.clone(),
            kind.into(),
            r.n.to_string(),
            r.k.to_string(),
            r.reps.to_string(),
            r.epsilon.to_string(),
            r.value.to_string(),
            r.std_error.to_string(),
            r.bound.to_string(),
            r.margin.to_string(),
            r.passed.to_string(),
            r.note.clone(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
