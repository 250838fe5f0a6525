//! Downstream evaluation of uncertainty scores: accuracy-rejection curves,
//! threshold abstention, and AUROC for out-of-distribution detection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("instance '{0}' has no ground-truth label")]
    MissingTruth(String),
    #[error("instance '{0}' has no cohort")]
    MissingCohort(String),
    #[error("no instances to evaluate")]
    EmptyInput,
    #[error("invalid rejection grid: {0}")]
    BadGrid(String),
    #[error("AUROC needs both in-distribution and out-of-distribution instances")]
    OneCohortOnly,
    #[error("instance '{0}' has a non-finite score")]
    NonFiniteScore(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    InDistribution,
    OutOfDistribution,
}

/// One instance with an uncertainty score and its prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub instance_id: String,
    pub score: f64,
    pub predicted: usize,
    pub truth: Option<usize>,
    pub cohort: Option<Cohort>,
}

impl ScoredInstance {
    pub fn new(instance_id: impl Into<String>, score: f64, predicted: usize) -> Self {
        Self {
            instance_id: instance_id.into(),
            score,
            predicted,
            truth: None,
            cohort: None,
        }
    }

    pub fn with_truth(mut self, truth: usize) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn with_cohort(mut self, cohort: Cohort) -> Self {
        self.cohort = Some(cohort);
        self
    }

    fn correct(&self) -> Result<bool, EvalError> {
        self.truth
            .map(|t| t == self.predicted)
            .ok_or_else(|| EvalError::MissingTruth(self.instance_id.clone()))
    }
}

/// Accuracy on the retained instances as a function of the rejected fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    pub score_name: String,
    /// `(rejection_fraction, accuracy)` with strictly increasing fractions.
    pub points: Vec<(f64, f64)>,
}

/// `0.00, 0.05, ..., 0.95`.
pub fn default_grid() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

fn check_grid(grid: &[f64]) -> Result<(), EvalError> {
    if grid.is_empty() {
        return Err(EvalError::BadGrid("grid is empty".into()));
    }
    for &f in grid {
        if !(0.0..1.0).contains(&f) {
            return Err(EvalError::BadGrid(format!("fraction {f} outside [0, 1)")));
        }
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(EvalError::BadGrid(format!(
            "fractions must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn check_scores(items: &[ScoredInstance]) -> Result<(), EvalError> {
    match items.iter().find(|i| !i.score.is_finite()) {
        Some(bad) => Err(EvalError::NonFiniteScore(bad.instance_id.clone())),
        None => Ok(()),
    }
}

/// Most uncertain first; ties by instance id, then input position.
fn rejection_order(items: &[ScoredInstance]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&items[a], &items[b]);
        y.score
            .partial_cmp(&x.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| x.instance_id.cmp(&y.instance_id))
            .then(a.cmp(&b))
    });
    order
}

/// Number of instances rejected at fraction `f` out of `n`: `floor(f n)`.
///
/// A small slack absorbs representation error such as `0.29 * 100 =
/// 28.999999999999996`. At least one instance is always retained.
pub fn rejected_count(f: f64, n: usize) -> usize {
    let raw = (f * n as f64 + 1e-9).floor() as usize;
    raw.min(n.saturating_sub(1))
}

/// Accuracy after rejecting the `floor(f N)` most uncertain instances, for
/// each fraction `f` in `grid`.
pub fn accuracy_rejection_curve(
    items: &[ScoredInstance],
    grid: &[f64],
    score_name: &str,
) -> Result<EvalCurve, EvalError> {
    if items.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    check_grid(grid)?;
    check_scores(items)?;
    let correct = items.iter().map(|i| i.correct()).collect::<Result<Vec<_>, _>>()?;
    let order = rejection_order(items);
    let n = items.len();

    // suffix[r] = correct among order[r..]
    let mut suffix = vec![0usize; n + 1];
    for r in (0..n).rev() {
        suffix[r] = suffix[r + 1] + usize::from(correct[order[r]]);
    }
    let points = grid
        .iter()
        .map(|&f| {
            let rejected = rejected_count(f, n);
            let retained = n - rejected;
            (f, suffix[rejected] as f64 / retained as f64)
        })
        .collect();
    Ok(EvalCurve {
        score_name: score_name.to_string(),
        points,
    })
}

/// Area under the ROC curve with out-of-distribution as the positive class,
/// via the Mann-Whitney statistic with average ranks for ties.
pub fn auroc(items: &[ScoredInstance]) -> Result<f64, EvalError> {
    check_scores(items)?;
    let mut positive = Vec::with_capacity(items.len());
    for item in items {
        match item.cohort {
            Some(c) => positive.push(c == Cohort::OutOfDistribution),
            None => return Err(EvalError::MissingCohort(item.instance_id.clone())),
        }
    }
    let n_pos = positive.iter().filter(|p| **p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::OneCohortOnly);
    }

    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].score.partial_cmp(&items[b].score).unwrap_or(Ordering::Equal));

    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && items[order[end]].score == items[order[start]].score {
            end += 1;
        }
        // Ranks start..end (1-based start+1..=end) share their average.
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| positive[i]).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        start = end;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Abstention {
    /// Fraction of instances retained.
    pub coverage: f64,
    /// Accuracy on retained instances; 1.0 when nothing is retained.
    pub accuracy: f64,
    /// True when no instance was retained.
    pub empty: bool,
}

/// Keeps instances with `score <= threshold` and reports coverage and
/// accuracy on them.
pub fn abstention_accuracy(items: &[ScoredInstance], threshold: f64) -> Result<Abstention, EvalError> {
    let mut retained = 0usize;
    let mut hits = 0usize;
    for item in items {
        let correct = item.correct()?;
        if item.score <= threshold {
            retained += 1;
            hits += usize::from(correct);
        }
    }
    let n = items.len();
    Ok(Abstention {
        coverage: if n == 0 { 0.0 } else { retained as f64 / n as f64 },
        accuracy: if retained == 0 {
            1.0
        } else {
            hits as f64 / retained as f64
        },
        empty: retained == 0,
    })
}
