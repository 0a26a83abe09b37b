//! Line-oriented `key = value` configuration.
//!
//! Blank lines and text after `#` are ignored. Unknown or repeated keys
//! are errors.
//!
//! ```text
//! intervals = 0.2-0.4, 0.6-0.8
//! eta = 0.1
//! classes = intervals:1..5
//! n = 2000
//! reps = 500
//! penalty = simple, localized
//! ```

use std::collections::BTreeMap;

use crate::classes::ModelClass;
use crate::complexity::ConstantProfile;
use crate::data::{IntervalClassifier, NoisyRegionDistribution};
use crate::harness::ExperimentConfig;
use crate::penalties::PenaltyKind;
use crate::{Error, Result};

/// Keys accepted by [`parse_experiment`].
pub const EXPERIMENT_KEYS: &[&str] = &[
    "intervals",
    "eta",
    "dim",
    "classes",
    "n",
    "reps",
    "seed",
    "penalty",
    "gamma",
    "global_gamma1",
    "global_gamma2",
    "mc_draws",
    "profile",
    "exploratory_scale",
    "shatter_bound",
    "workers",
    "log_shatter_reps",
    "u_bar_bound",
];

/// Parsed `key = value` pairs with their line numbers.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got {body:?}"),
            })?;
            let key = key.trim().to_string();
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key {key:?}"),
                });
            }
            if entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Parses `key` with `f`, attributing failures to its line.
    pub fn get<T>(&self, key: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => f(v).map(Some).map_err(|e| match e {
                Error::Config { .. } => e,
                other => Error::Config {
                    line: *line,
                    message: format!("{key}: {other}"),
                },
            }),
        }
    }

    /// Attributes `e` to the line of `key` (line 0 when absent).
    pub fn blame(&self, key: &str, e: Error) -> Error {
        Error::Config {
            line: self.entries.get(key).map_or(0, |(l, _)| *l),
            message: format!("{key}: {e}"),
        }
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key, |v| {
            v.parse::<T>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse {v:?}")))
        })
    }
}

/// `a-b` as a pair. A `-` directly after an exponent marker belongs to the number.
pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    let s = s.trim();
    let bytes = s.as_bytes();
    let split = (1..bytes.len())
        .find(|&i| bytes[i] == b'-' && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| Error::InvalidArgument(format!("expected `lo-hi`, got {s:?}")))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad number {t:?} in {s:?}")))
    };
    Ok((num(&s[..split])?, num(&s[split + 1..])?))
}

/// `a1-b1, a2-b2, …`; an empty string is the empty region.
pub fn parse_intervals(s: &str) -> Result<IntervalClassifier> {
    let s = s.trim();
    if s.is_empty() || s == "none" {
        return Ok(IntervalClassifier::empty());
    }
    let pairs = s.split(',').map(parse_range).collect::<Result<Vec<_>>>()?;
    IntervalClassifier::from_pairs(&pairs)
}

/// `intervals:1..K`, or a comma-separated list of `intervals:k`,
/// `thresholds`, `stumps:d`, `fixed:a-b+c-d`, and `bayes` (the Bayes
/// classifier of `dist`, when one is given).
pub fn parse_class_list(s: &str, dist: Option<&NoisyRegionDistribution>) -> Result<Vec<ModelClass>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some(range) = item.strip_prefix("intervals:").filter(|r| r.contains("..")) {
            let (a, b) = range.split_once("..").expect("checked");
            let parse = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad interval range {item:?}")))
            };
            let (a, b) = (parse(a)?, parse(b)?);
            if a == 0 || b < a {
                return Err(Error::InvalidArgument(format!("bad interval range {item:?}")));
            }
            out.extend((a..=b).map(ModelClass::Intervals));
        } else if item == "bayes" {
            let d = dist.ok_or_else(|| Error::InvalidArgument("`bayes` needs a distribution".into()))?;
            out.push(ModelClass::Fixed(d.target().clone()));
        } else {
            out.push(item.parse()?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty class list".into()));
    }
    Ok(out)
}

pub fn parse_penalties(s: &str) -> Result<Vec<PenaltyKind>> {
    if s.trim() == "all" {
        return Ok(PenaltyKind::ALL.to_vec());
    }
    let mut kinds = s.split(',').map(str::parse).collect::<Result<Vec<PenaltyKind>>>()?;
    kinds.dedup();
    Ok(kinds)
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("expected a boolean, got {s:?}"))),
    }
}

/// Distribution from `intervals`, `eta` and `dim`.
pub fn distribution_from(kv: &KeyValues) -> Result<NoisyRegionDistribution> {
    let target = kv.get("intervals", parse_intervals)?.unwrap_or_else(IntervalClassifier::empty);
    let eta = kv.number::<f64>("eta")?.unwrap_or(0.0);
    let dist = NoisyRegionDistribution::new(target, eta).map_err(|e| kv.blame("eta", e))?;
    match kv.number::<usize>("dim")? {
        Some(d) => dist.with_dim(d).map_err(|e| kv.blame("dim", e)),
        None => Ok(dist),
    }
}

/// Builds an experiment from configuration text.
pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    let kv = KeyValues::parse(text, EXPERIMENT_KEYS)?;
    let dist = distribution_from(&kv)?;
    let hierarchy = kv
        .get("classes", |v| parse_class_list(v, Some(&dist)))?
        .unwrap_or_else(|| (1..=5).map(ModelClass::Intervals).collect());
    let n = kv.number::<usize>("n")?.ok_or_else(|| Error::Config {
        line: 0,
        message: "missing key \"n\"".into(),
    })?;
    let mut cfg = ExperimentConfig::new(dist, hierarchy, n);
    if let Some(r) = kv.number("reps")? {
        cfg.reps = r;
    }
    if let Some(s) = kv.number("seed")? {
        cfg.seed = s;
    }
    if let Some(p) = kv.get("penalty", parse_penalties)? {
        cfg.penalties = p;
    }
    let o = &mut cfg.options;
    if let Some(g) = kv.number("gamma")? {
        o.gamma = g;
    }
    if let Some(g) = kv.number("global_gamma1")? {
        o.global_gamma1 = g;
    }
    if let Some(g) = kv.number("global_gamma2")? {
        o.global_gamma2 = g;
    }
    if let Some(d) = kv.number("mc_draws")? {
        o.mc_draws = d;
    }
    if let Some(b) = kv.get("shatter_bound", str::parse)? {
        o.shatter_bound = b;
    }
    let scale = kv.number::<f64>("exploratory_scale")?.unwrap_or(0.1);
    if let Some(p) = kv.get("profile", |v| match v {
        "paper" => Ok(ConstantProfile::paper()),
        "exploratory" => ConstantProfile::exploratory(scale),
        other => Err(Error::InvalidArgument(format!("unknown profile {other:?}"))),
    })? {
        o.profile = p;
    }
    if let Some(w) = kv.number("workers")? {
        cfg.workers = Some(w);
    }
    if let Some(r) = kv.number("log_shatter_reps")? {
        cfg.log_shatter_reps = r;
    }
    if let Some(t) = kv.get("u_bar_bound", parse_bool)? {
        cfg.u_bar_bound = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalties::ShatterBound;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.2-0.4").unwrap(), (0.2, 0.4));
        assert_eq!(parse_range(" 1e-3 - 0.5 ").unwrap(), (0.001, 0.5));
        assert!(parse_range("0.2").is_err());
        assert_eq!(parse_intervals("").unwrap(), IntervalClassifier::empty());
        assert_eq!(parse_intervals("0.2-0.4, 0.6-0.8").unwrap().len(), 2);
        assert!(parse_intervals("0.6-0.8, 0.2-0.4").is_err());
    }

    #[test]
    fn class_lists() {
        let c = parse_class_list("intervals:1..3", None).unwrap();
        assert_eq!(c, vec![ModelClass::Intervals(1), ModelClass::Intervals(2), ModelClass::Intervals(3)]);
        let c = parse_class_list("thresholds, intervals:2, stumps:2", None).unwrap();
        assert_eq!(c.len(), 3);
        assert!(parse_class_list("bayes", None).is_err());
        assert!(parse_class_list("intervals:3..1", None).is_err());
    }

    #[test]
    fn full_experiment() {
        let text = "\
# two clusters
intervals = 0.2-0.4, 0.6-0.8
eta = 0.1
classes = intervals:1..5
n = 2000   # sample size
reps = 500
seed = 7
penalty = simple, localized
mc_draws = 200
shatter_bound = vc_cap
profile = exploratory
exploratory_scale = 0.2
";
        let cfg = parse_experiment(text).unwrap();
        assert_eq!(cfg.n, 2000);
        assert_eq!(cfg.reps, 500);
        assert_eq!(cfg.hierarchy.len(), 5);
        assert_eq!(cfg.penalties, vec![PenaltyKind::Simple, PenaltyKind::Localized]);
        assert_eq!(cfg.options.mc_draws, 200);
        assert_eq!(cfg.options.shatter_bound, ShatterBound::VcCap);
        assert_eq!(cfg.options.profile.exploratory_scale, Some(0.2));
        assert_eq!(cfg.dist.noise(), 0.1);
    }

    #[test]
    fn errors_name_the_line() {
        match parse_experiment("n = 10\nbogus = 1\n").unwrap_err() {
            Error::Config { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        match parse_experiment("n = 10\neta = 0.7\n").unwrap_err() {
            Error::Config { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        assert!(parse_experiment("n = 10\nn = 20\n").is_err());
        assert!(parse_experiment("eta = 0.1\n").is_err());
    }

    #[test]
    fn bayes_class_uses_the_target() {
        let cfg = parse_experiment("intervals = 0.3-0.6\nclasses = bayes\nn = 50\n").unwrap();
        assert_eq!(cfg.hierarchy, vec![ModelClass::Fixed(IntervalClassifier::single(0.3, 0.6).unwrap())]);
    }
}
