//! Causal analysis of how a binary exposure (e.g. a medical test) changes a
//! binary treatment decision, built on multiple imputation of potential
//! outcomes.
//!
//! Each patient has two potential treatment decisions: one with the exposure
//! (`Y1`) and one without (`Y0`). Only one is ever observed, so the
//! counterfactual column is treated as missing data and filled in by a
//! chained-equations imputation engine ([`fcs`]). Several imputation model
//! sets are supported, differing in whether they use the exposure `Z`, the
//! post-exposure test result `R`, and whether they encode ignorability and
//! conditional independence of the potential outcomes.
//!
//! From each completed dataset, [`estimands`] computes the average testing
//! effect, the marginal odds ratio, the four potential-outcomes subgroup
//! proportions, and a generalized-logit model of subgroup membership.
//! [`pooling`] combines per-imputation estimates with Rubin's rules, and
//! [`ipw`] provides an inverse-probability-weighting comparator.
//!
//! [`sim`] holds the synthetic data-generating process used by the
//! simulation harness and the sensitivity-analysis machinery.

pub mod data;
pub mod error;
pub mod estimands;
pub mod fcs;
pub mod glm;
pub mod ipw;
pub mod pooling;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
