//! Complexity-penalized model selection for binary classification.
//!
//! The crate computes data-dependent penalties for a hierarchy of model
//! classes `F_1 ⊂ F_2 ⊂ …` and selects the class minimizing the penalized
//! empirical loss `L̂(f̂_k) + Ĉ_k`. Four penalty families are provided:
//! a distribution-free VC penalty, a global Rademacher penalty, a simple
//! penalty driven by the empirical minimum, and a localized Rademacher
//! penalty that only charges for the hypotheses whose empirical loss is
//! close to the minimum.
//!
//! Besides the selector, the crate ships exact small-scale oracles
//! (exhaustive enumeration of error vectors, exact Rademacher averages) and
//! Monte Carlo harnesses that check the probability and expectation bounds
//! these penalties rely on, on synthetic distributions whose Bayes risk and
//! true losses are known in closed form.
//!
//! Module map:
//!
//! * [`data`]: samples, the noisy-region distribution and closed-form losses.
//! * [`classes`]: hypothesis families, ERM, error-vector enumeration, shatter bounds.
//! * [`complexity`]: random shatter coefficients, Rademacher averages, localization.
//! * [`penalties`]: penalty families and the penalized selector.
//! * [`population`]: suprema of true/empirical loss combinations over interval classes.
//! * [`concentration`]: tail and expectation bound checks.
//! * [`harness`]: oracle-inequality experiments and report output.
//! * [`config`]: the line-oriented `key = value` configuration format.

pub mod classes;
pub mod complexity;
pub mod concentration;
pub mod config;
pub mod data;
mod error;
pub mod harness;
pub mod penalties;
pub mod population;
pub mod rng;
mod segments;
mod stats;

pub use error::{Error, Result};
