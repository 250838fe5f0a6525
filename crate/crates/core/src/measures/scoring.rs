//! Binary proper scoring rules and the loss-based uncertainty template.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{settle_epistemic, MeasureError, UncertaintyTriple};
use crate::simplex::BinaryMarginal;

/// A loss `φ(θ̂, y)` for a binary outcome `y` and probabilistic prediction `θ̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringRule {
    /// `-(y log2 θ̂ + (1 - y) log2 (1 - θ̂))`, in bits.
    LogLoss,
    /// `(θ̂ - y)^2`.
    SquaredError,
}

impl ScoringRule {
    pub const ALL: [ScoringRule; 2] = [ScoringRule::LogLoss, ScoringRule::SquaredError];

    /// Loss of predicting `pred` when the outcome is `outcome`.
    pub fn pointwise(self, pred: f64, outcome: bool) -> f64 {
        match self {
            ScoringRule::LogLoss => {
                let p = if outcome { pred } else { 1.0 - pred };
                -p.log2()
            }
            ScoringRule::SquaredError => {
                let y = if outcome { 1.0 } else { 0.0 };
                (pred - y) * (pred - y)
            }
        }
    }

    /// Expected loss `φ(θ̂, θ) = E_{Y ~ Bernoulli(θ)} φ(θ̂, Y)`.
    ///
    /// Outcomes with zero probability contribute nothing, even where the
    /// pointwise loss is infinite.
    pub fn expected(self, pred: f64, theta: f64) -> f64 {
        let mut loss = 0.0;
        if theta > 0.0 {
            loss += theta * self.pointwise(pred, true);
        }
        if theta < 1.0 {
            loss += (1.0 - theta) * self.pointwise(pred, false);
        }
        loss
    }

    /// Numerically confirms strict propriety: on a grid of `θ ∈ (0, 1)` the
    /// minimizer of `θ̂ ↦ φ(θ̂, θ)` must be `θ` itself within `1e-6`.
    ///
    /// The check runs once per rule; later calls return the cached verdict.
    pub fn check_propriety(self) -> Result<(), MeasureError> {
        static LOG: OnceLock<Result<(), MeasureError>> = OnceLock::new();
        static SQ: OnceLock<Result<(), MeasureError>> = OnceLock::new();
        let cell = match self {
            ScoringRule::LogLoss => &LOG,
            ScoringRule::SquaredError => &SQ,
        };
        cell.get_or_init(|| propriety_grid_check(|p, t| self.expected(p, t), self))
            .clone()
    }
}

pub(crate) fn propriety_grid_check<F>(loss: F, rule: ScoringRule) -> Result<(), MeasureError>
where
    F: Fn(f64, f64) -> f64,
{
    for i in 1..100 {
        let theta = i as f64 / 100.0;
        let argmin = golden_section_min(|p| loss(p, theta), 0.0, 1.0, 1e-10);
        if (argmin - theta).abs() > 1e-6 {
            return Err(MeasureError::NotProper { rule, theta, argmin });
        }
    }
    Ok(())
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

/// Label-wise TU/AU/EU of one marginal under a strictly proper rule.
///
/// For a strictly proper rule the risk minimizer is the true parameter, so
/// `TU = φ(θ̄, θ̄)` and `AU = E[φ(Θ, Θ)]`; `EU = TU - AU`.
pub fn loss_based_measures(marginal: &BinaryMarginal, rule: ScoringRule) -> Result<UncertaintyTriple, MeasureError> {
    rule.check_propriety()?;
    let mean = marginal.mean();
    let total = rule.expected(mean, mean);
    let mut aleatoric = 0.0;
    for (v, w) in marginal.iter() {
        aleatoric += w * rule.expected(v, v);
    }
    let epistemic = settle_epistemic(total - aleatoric)?;
    Ok(UncertaintyTriple {
        total,
        aleatoric,
        epistemic,
    })
}
