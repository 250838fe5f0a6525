//! Uncertainty quantification for second-order class distributions.
//!
//! A second-order distribution is a distribution over probability vectors,
//! e.g. the predictions of an ensemble. This crate decomposes its total
//! uncertainty into aleatoric and epistemic parts under three measure
//! families, checks axiomatic properties of those measures, and evaluates
//! them with accuracy-rejection curves and out-of-distribution AUROC.

pub mod axioms;
pub mod cli;
pub mod eval;
pub mod io;
pub mod measures;
pub mod simplex;
pub mod transforms;

pub use measures::{measure, Family, LabelWiseReport, MeasureError, UncertaintyTriple};
pub use simplex::{BinaryMarginal, DirichletSecondOrder, EmpiricalSecondOrder, ProbVector};
