//! Total, aleatoric and epistemic uncertainty of a second-order distribution.
//!
//! Three families are provided:
//!
//! | family | TU | AU | EU |
//! |--------|----|----|----|
//! | [`Family::GlobalEntropy`] | `H(E[Θ])` | `E[H(Θ)]` | mutual information |
//! | [`Family::LabelEntropy`] | `Σ_k H(E[Θ_k])` | `Σ_k E[H(Θ_k)]` | `Σ_k E[KL(Θ_k ‖ θ̄_k)]` |
//! | [`Family::Variance`] | `Σ_k θ̄_k (1 - θ̄_k)` | `Σ_k E[Θ_k (1 - Θ_k)]` | `Σ_k Var(Θ_k)` |
//!
//! Entropies are in bits. The two label-wise families are the log-loss and
//! squared-error instances of [`loss_based_measures`].

mod scoring;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{BinaryMarginal, DirichletSecondOrder, EmpiricalSecondOrder, ProbVector};

pub use scoring::{loss_based_measures, ScoringRule};

/// Negative epistemic values above this are float noise and become zero.
pub const CLAMP_TOL: f64 = 1e-9;

/// Negative epistemic values below this indicate a bug, not rounding.
pub const HARD_NEGATIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("epistemic uncertainty {0} is negative beyond rounding error")]
    NegativeEpistemic(f64),
    #[error("{rule:?} is not strictly proper: at theta = {theta} the expected loss is minimized at {argmin}")]
    NotProper { rule: ScoringRule, theta: f64, argmin: f64 },
    #[error("the {0} family has no label-wise decomposition")]
    NotLabelWise(Family),
}

/// Which measure family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ent")]
    GlobalEntropy,
    #[serde(rename = "lent")]
    LabelEntropy,
    #[serde(rename = "var")]
    Variance,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::GlobalEntropy, Family::LabelEntropy, Family::Variance];

    /// Short name used on the command line and in column names.
    pub fn short_name(self) -> &'static str {
        match self {
            Family::GlobalEntropy => "ent",
            Family::LabelEntropy => "lent",
            Family::Variance => "var",
        }
    }

    pub fn is_label_wise(self) -> bool {
        !matches!(self, Family::GlobalEntropy)
    }

    /// Largest attainable TU for `k` classes.
    pub fn max_total(self, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            Family::GlobalEntropy => kf.log2(),
            Family::LabelEntropy => kf.log2() + (kf - 1.0) * (kf / (kf - 1.0)).log2(),
            Family::Variance => (kf - 1.0) / kf,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ent" => Ok(Family::GlobalEntropy),
            "lent" => Ok(Family::LabelEntropy),
            "var" => Ok(Family::Variance),
            other => Err(format!("unknown measure family '{other}' (expected ent, lent or var)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UncertaintyTriple {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
}

impl UncertaintyTriple {
    /// Component-wise sum, independent of the order of `items`.
    pub fn sum<'a, I: IntoIterator<Item = &'a UncertaintyTriple>>(items: I) -> Self {
        let items: Vec<&UncertaintyTriple> = items.into_iter().collect();
        UncertaintyTriple {
            total: order_free_sum(items.iter().map(|t| t.total)),
            aleatoric: order_free_sum(items.iter().map(|t| t.aleatoric)),
            epistemic: order_free_sum(items.iter().map(|t| t.epistemic)),
        }
    }

    /// `|TU - (AU + EU)|`.
    pub fn additivity_gap(&self) -> f64 {
        (self.total - (self.aleatoric + self.epistemic)).abs()
    }
}

/// Per-instance result: a global triple and, for label-wise families, one
/// triple per class whose sum is the global triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelWiseReport {
    pub family: Family,
    /// Empty for [`Family::GlobalEntropy`].
    pub per_label: Vec<UncertaintyTriple>,
    pub global: UncertaintyTriple,
}

impl LabelWiseReport {
    fn from_labels(family: Family, per_label: Vec<UncertaintyTriple>) -> Self {
        let global = UncertaintyTriple::sum(&per_label);
        Self {
            family,
            per_label,
            global,
        }
    }
}

pub(crate) fn settle_epistemic(raw: f64) -> Result<f64, MeasureError> {
    if raw >= 0.0 {
        Ok(raw)
    } else if raw >= -CLAMP_TOL {
        Ok(0.0)
    } else if raw >= -HARD_NEGATIVE_TOL {
        log::warn!("clamping epistemic uncertainty {raw} to zero");
        Ok(0.0)
    } else {
        Err(MeasureError::NegativeEpistemic(raw))
    }
}

/// `-p log2 p` with `0 log 0 = 0`.
fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

fn binary_entropy_unchecked(theta: f64) -> f64 {
    plogp(theta) + plogp(1.0 - theta)
}

/// Entropy in bits of a Bernoulli(`theta`) variable.
pub fn binary_entropy(theta: f64) -> Result<f64, MeasureError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(MeasureError::OutOfRange(theta));
    }
    Ok(binary_entropy_unchecked(theta))
}

/// Sum of the terms in ascending order.
fn order_free_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut terms: Vec<f64> = terms.into_iter().collect();
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Shannon entropy in bits.
pub fn shannon_entropy(theta: &ProbVector) -> f64 {
    order_free_sum(theta.as_slice().iter().map(|&p| plogp(p)))
}

/// Entropy of the mean, expected entropy, and their difference (the mutual
/// information between the label and the first-order parameter).
pub fn global_entropy_measures(q: &EmpiricalSecondOrder) -> Result<UncertaintyTriple, MeasureError> {
    let total = shannon_entropy(&q.mean());
    let mut aleatoric = 0.0;
    for (atom, w) in q.iter() {
        aleatoric += w * shannon_entropy(atom);
    }
    let epistemic = settle_epistemic(total - aleatoric)?;
    Ok(UncertaintyTriple {
        total,
        aleatoric,
        epistemic,
    })
}

/// Binary-entropy triple of a single marginal.
pub fn label_entropy_triple(marginal: &BinaryMarginal) -> Result<UncertaintyTriple, MeasureError> {
    let total = binary_entropy_unchecked(marginal.mean());
    let mut aleatoric = 0.0;
    for (v, w) in marginal.iter() {
        aleatoric += w * binary_entropy_unchecked(v);
    }
    let epistemic = settle_epistemic(total - aleatoric)?;
    Ok(UncertaintyTriple {
        total,
        aleatoric,
        epistemic,
    })
}

/// Law-of-total-variance triple of a single marginal.
pub fn variance_triple(marginal: &BinaryMarginal) -> UncertaintyTriple {
    let mean = marginal.mean();
    let mut aleatoric = 0.0;
    let mut epistemic = 0.0;
    for (v, w) in marginal.iter() {
        aleatoric += w * v * (1.0 - v);
        epistemic += w * (v - mean) * (v - mean);
    }
    let total = mean * (1.0 - mean);
    debug_assert!(
        (total - aleatoric - epistemic).abs() <= 1e-9,
        "total variance {total} != {aleatoric} + {epistemic}"
    );
    UncertaintyTriple {
        total,
        aleatoric,
        epistemic,
    }
}

pub fn label_entropy_measures(q: &EmpiricalSecondOrder) -> Result<LabelWiseReport, MeasureError> {
    let per_label = q
        .marginals()
        .iter()
        .map(label_entropy_triple)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LabelWiseReport::from_labels(Family::LabelEntropy, per_label))
}

pub fn variance_measures(q: &EmpiricalSecondOrder) -> LabelWiseReport {
    let per_label = q.marginals().iter().map(variance_triple).collect();
    LabelWiseReport::from_labels(Family::Variance, per_label)
}

/// Evaluates `family` on `q`.
pub fn measure(q: &EmpiricalSecondOrder, family: Family) -> Result<LabelWiseReport, MeasureError> {
    match family {
        Family::GlobalEntropy => Ok(LabelWiseReport {
            family,
            per_label: Vec::new(),
            global: global_entropy_measures(q)?,
        }),
        Family::LabelEntropy => label_entropy_measures(q),
        Family::Variance => Ok(variance_measures(q)),
    }
}

/// Sum of label-wise triples over a set of marginals, e.g. the output of
/// [`EmpiricalSecondOrder::restrict`].
pub fn label_wise_sum(family: Family, marginals: &[BinaryMarginal]) -> Result<UncertaintyTriple, MeasureError> {
    let per_label = match family {
        Family::GlobalEntropy => return Err(MeasureError::NotLabelWise(family)),
        Family::LabelEntropy => marginals
            .iter()
            .map(label_entropy_triple)
            .collect::<Result<Vec<_>, _>>()?,
        Family::Variance => marginals.iter().map(variance_triple).collect(),
    };
    Ok(UncertaintyTriple::sum(&per_label))
}

/// Exact variance-family report of a Dirichlet distribution.
pub fn dirichlet_variance_oracle(d: &DirichletSecondOrder) -> LabelWiseReport {
    let a0 = d.alpha0();
    let per_label = d
        .alpha()
        .iter()
        .map(|&a| {
            let mean = a / a0;
            UncertaintyTriple {
                total: mean * (1.0 - mean),
                aleatoric: mean - a * (a + 1.0) / (a0 * (a0 + 1.0)),
                epistemic: a * (a0 - a) / (a0 * a0 * (a0 + 1.0)),
            }
        })
        .collect();
    LabelWiseReport::from_labels(Family::Variance, per_label)
}
