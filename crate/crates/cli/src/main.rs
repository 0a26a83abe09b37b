use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use locpen_core::complexity::ConstantProfile;
use locpen_core::concentration::{self, CheckSetup, TailCheckReport};
use locpen_core::config;
use locpen_core::data::{self, LabeledSample, NoisyRegionDistribution};
use locpen_core::harness::{self, ReportFormat};
use locpen_core::penalties::{self, ClassAnalysis, PenaltyKind, PenaltyOptions, ShatterBound};
use locpen_core::{Error, Result};

#[derive(Parser)]
#[command(name = "locpen", version, about = "Complexity penalties for model selection in binary classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct PenaltyArgs {
    /// Sign draws for Monte Carlo Rademacher averages.
    #[arg(long, default_value_t = locpen_core::complexity::DEFAULT_MC_DRAWS)]
    mc_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `paper` or `exploratory`.
    #[arg(long, default_value = "paper")]
    profile: String,
    /// Multiplier for the exploratory profile.
    #[arg(long, default_value_t = 0.1)]
    exploratory_scale: f64,
    #[arg(long, default_value = "exact")]
    shatter_bound: ShatterBound,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

impl PenaltyArgs {
    fn options(&self) -> Result<PenaltyOptions> {
        let profile = match self.profile.as_str() {
            "paper" => ConstantProfile::paper(),
            "exploratory" => ConstantProfile::exploratory(self.exploratory_scale)?,
            other => return Err(Error::InvalidArgument(format!("unknown profile {other:?}"))),
        };
        Ok(PenaltyOptions {
            gamma: self.gamma,
            mc_draws: self.mc_draws,
            seed: self.seed,
            profile,
            shatter_bound: self.shatter_bound,
            ..PenaltyOptions::default()
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Prop {
    #[value(name = "3.2")]
    RelativeVc,
    #[value(name = "3.3")]
    Shatter,
    #[value(name = "4.4")]
    Rademacher,
    #[value(name = "4.5")]
    Talagrand,
    #[value(name = "4.6")]
    Symmetrization,
}

#[derive(Subcommand)]
enum Command {
    /// Penalized model selection on a data file.
    Select {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "intervals:1..5")]
        classes: String,
        #[arg(long, default_value = "localized")]
        penalty: PenaltyKind,
        #[command(flatten)]
        args: PenaltyArgs,
    },
    /// Per-class penalty breakdowns on a data file.
    Penalties {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "intervals:1..5")]
        classes: String,
        /// Penalty kinds, comma separated.
        #[arg(long, default_value = "localized", conflicts_with = "all")]
        penalty: String,
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        args: PenaltyArgs,
    },
    /// Monte Carlo oracle-inequality experiment from a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Overrides `workers` in the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Per-class frequencies of the penalty's probability hypotheses.
    Lemma {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "localized")]
        penalty: PenaltyKind,
        /// Defaults to 8 for the simple penalty and 11 otherwise.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concentration inequality checks.
    Concentration {
        #[arg(long)]
        prop: Prop,
        #[arg(long)]
        n: usize,
        /// Deviation; 3.2 picks one from the expected shatter coefficient if omitted.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "intervals:1")]
        class: String,
        /// Position of the class in its hierarchy.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value = "0.2-0.4, 0.6-0.8")]
        intervals: String,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 1000)]
        mc_draws: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draws a sample and writes it as CSV.
    Generate {
        #[arg(long, default_value = "0.2-0.4, 0.6-0.8")]
        intervals: String,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn distribution(intervals: &str, eta: f64, dim: usize) -> Result<NoisyRegionDistribution> {
    NoisyRegionDistribution::new(config::parse_intervals(intervals)?, eta)?.with_dim(dim)
}

fn print_selection(r: &penalties::SelectionResult) {
    println!("{:>3}  {:<16} {:>10} {:>10} {:>10} {:>10}  classifier", "k", "class", "emp_loss", "raw", "penalty", "score");
    for row in &r.table {
        println!(
            "{:>3}  {:<16} {:>10.6} {:>10.6} {:>10.6} {:>10.6}  {}{}",
            row.k,
            row.class.to_string(),
            row.emp_loss,
            row.penalty.raw_value,
            row.penalty.value,
            row.score,
            row.classifier,
            if row.k == r.chosen_k { "  *" } else { "" }
        );
    }
    println!("{}: chose k = {} ({})", r.kind, r.chosen_k, r.chosen_classifier);
}

fn print_checks(reports: &[TailCheckReport]) -> bool {
    for r in reports {
        println!("{r}");
    }
    reports.iter().all(|r| r.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Select {
            data,
            classes,
            penalty,
            args,
        } => {
            let s = LabeledSample::read_csv(&data)?;
            let classes = config::parse_class_list(&classes, None)?;
            let result = penalties::select_model(&classes, &s, penalty, &args.options()?)?;
            print_selection(&result);
            Ok(true)
        }
        Command::Penalties {
            data,
            classes,
            penalty,
            all,
            args,
        } => {
            let s = LabeledSample::read_csv(&data)?;
            let classes = config::parse_class_list(&classes, None)?;
            let kinds = if all { PenaltyKind::ALL.to_vec() } else { config::parse_penalties(&penalty)? };
            let opts = args.options()?;
            for (i, c) in classes.iter().enumerate() {
                let k = i + 1;
                let proj = locpen_core::classes::Projection::new(c, &s)?;
                let a = ClassAnalysis::new(&proj, k, &opts, penalties::needs_rademacher(&kinds))?;
                println!("k={k} {c} emp_loss={:.6} erm={}", a.erm.empirical_loss, a.erm.classifier);
                for &kind in &kinds {
                    let p = a.penalty(kind, c, &opts)?;
                    let terms: Vec<String> = p.terms.iter().map(|(t, v)| format!("{t}={v:.6}")).collect();
                    println!("  {:<10} value={:.6} raw={:.6}  {}", kind.name(), p.value, p.raw_value, terms.join(" "));
                }
            }
            Ok(true)
        }
        Command::Experiment {
            config: path,
            out,
            svg,
            workers,
        } => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            let mut cfg = config::parse_experiment(&text)?;
            if workers.is_some() {
                cfg.workers = workers;
            }
            cfg.validate()?;
            let report = harness::run_oracle_experiment(&cfg)?;
            harness::emit_report(&report, &out, ReportFormat::Csv)?;
            if let Some(svg) = svg {
                harness::emit_report(&report, &svg, ReportFormat::Svg)?;
            }
            let mut ok = report.structure_violations == 0;
            for k in &report.kinds {
                println!(
                    "{:<10} excess={:.6} (se {:.2e}) oracle_bound={:.6} at k={} expectation={} probability={}/{} vs {:.3e}{}",
                    k.kind.name(),
                    k.mean_excess,
                    k.se_true_loss,
                    k.oracle_bound,
                    k.oracle_k,
                    if k.expectation_passed { "PASS" } else { "FAIL" },
                    k.probability_violations,
                    report.reps,
                    k.probability_bound,
                    if k.probability_vacuous { " (vacuous)" } else { "" }
                );
                ok &= k.expectation_passed && k.probability_passed;
            }
            if let Some(t) = &report.u_bar_bound {
                println!(
                    "localized via u_bar: lhs={:.6} bound={:.6} {}",
                    t.lhs,
                    t.bound,
                    if t.passed { "PASS" } else { "FAIL" }
                );
                ok &= t.passed;
            }
            println!("structure violations: {}", report.structure_violations);
            Ok(ok)
        }
        Command::Lemma {
            config: path,
            penalty,
            gamma,
            out,
        } => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            let cfg = config::parse_experiment(&text)?;
            let gamma = gamma.unwrap_or_else(|| harness::lemma_gamma(penalty));
            let check = harness::run_lemma_check(&cfg, penalty, gamma)?;
            let reports: Vec<TailCheckReport> = check.erm.iter().chain(&check.optimal).cloned().collect();
            let ok = print_checks(&reports);
            println!("structure violations: {}", check.structure_violations);
            if let Some(out) = out {
                concentration::write_reports(&reports, out)?;
            }
            Ok(ok && check.structure_violations == 0)
        }
        Command::Concentration {
            prop,
            n,
            eps,
            reps,
            seed,
            class,
            k,
            intervals,
            eta,
            mc_draws,
            out,
        } => {
            let dist = distribution(&intervals, eta, 1)?;
            let mut classes = config::parse_class_list(&class, Some(&dist))?;
            if classes.len() != 1 {
                return Err(Error::InvalidArgument(format!("expected one class, got {class:?}")));
            }
            let setup = CheckSetup {
                dist,
                class: classes.remove(0),
                k,
                n,
                reps,
                seed,
            };
            let need_eps = || eps.ok_or_else(|| Error::InvalidArgument("--eps is required for this check".into()));
            let reports = match prop {
                Prop::RelativeVc => concentration::check_relative_vc(&setup, eps)?,
                Prop::Shatter => concentration::check_shatter_concentration(&setup, need_eps()?)?,
                Prop::Rademacher => concentration::check_rademacher_concentration(&setup, need_eps()?)?,
                Prop::Talagrand => concentration::check_talagrand(&setup, need_eps()?)?,
                Prop::Symmetrization => concentration::check_symmetrization_and_massart(&setup, mc_draws)?,
            };
            let ok = print_checks(&reports);
            if let Some(out) = out {
                concentration::write_reports(&reports, out)?;
            }
            Ok(ok)
        }
        Command::Generate {
            intervals,
            eta,
            dim,
            n,
            seed,
            out,
        } => {
            let dist = distribution(&intervals, eta, dim)?;
            let s = data::generate_sample(&dist, n, seed)?;
            s.write_csv(&out)?;
            println!("wrote {n} points to {}", out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
