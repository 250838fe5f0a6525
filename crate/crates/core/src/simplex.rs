//! Points on the probability simplex and second-order distributions over them.
//!
//! A [`ProbVector`] is a first-order categorical distribution. An
//! [`EmpiricalSecondOrder`] is a finite weighted set of such points, which is
//! how an ensemble's predictions for one instance are represented. A
//! [`DirichletSecondOrder`] is the parametric counterpart with closed-form
//! moments; [`sample_dirichlet`] bridges the two.
//!
//! All moments use population semantics: atom weights are probabilities, not
//! sample frequencies, so there is no `M - 1` correction anywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when validating entries and sums of an already-built vector.
pub const PROB_TOL: f64 = 1e-9;

/// Tolerance on the sum of raw (externally produced) probability rows.
pub const INGEST_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entry {index} exceeds 1 ({value})")]
    AboveOne { index: usize, value: f64 },
    #[error("entry {index} is not a finite number")]
    NonFinite { index: usize },
    #[error("entries sum to {sum}, expected 1")]
    BadSum { sum: f64 },
    #[error("need at least 2 classes, got {k}")]
    TooFewClasses { k: usize },
    #[error("class index {index} out of range for K = {k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("label subset is empty")]
    EmptySubset,
    #[error("atom {index} has {got} classes, expected {expected}")]
    ClassMismatch { index: usize, expected: usize, got: usize },
    #[error("second-order distribution needs at least one atom")]
    NoAtoms,
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("invalid Dirichlet concentration: {0}")]
    BadAlpha(String),
}

/// A first-order class distribution, i.e. a point on the (K-1)-simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Builds a vector from raw, possibly slightly off, model output.
    ///
    /// Entries above `-1e-9` are clamped to `[0, 1]` and the result is
    /// renormalized to sum to one. The raw sum may deviate from one by at
    /// most [`INGEST_SUM_TOL`].
    pub fn new(raw: &[f64]) -> Result<Self, SimplexError> {
        if raw.len() < 2 {
            return Err(SimplexError::TooFewClasses { k: raw.len() });
        }
        for (index, &value) in raw.iter().enumerate() {
            if !value.is_finite() {
                return Err(SimplexError::NonFinite { index });
            }
            if value < -PROB_TOL {
                return Err(SimplexError::NegativeEntry { index, value });
            }
        }
        let sum: f64 = raw.iter().sum();
        if (sum - 1.0).abs() > INGEST_SUM_TOL {
            return Err(SimplexError::BadSum { sum });
        }
        let clamped: Vec<f64> = raw.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let total: f64 = clamped.iter().sum();
        Ok(Self(clamped.into_iter().map(|v| v / total).collect()))
    }

    /// Validates `probs` against the simplex tolerance without renormalizing.
    ///
    /// Used for vectors produced by exact arithmetic on other valid vectors
    /// (means, shifts, spreads) whose values must not be perturbed. Entries
    /// within tolerance of the boundary are clamped into `[0, 1]`.
    pub fn from_exact(probs: Vec<f64>) -> Result<Self, SimplexError> {
        if probs.len() < 2 {
            return Err(SimplexError::TooFewClasses { k: probs.len() });
        }
        let mut probs = probs;
        for (index, value) in probs.iter_mut().enumerate() {
            if !value.is_finite() {
                return Err(SimplexError::NonFinite { index });
            }
            if *value < -PROB_TOL {
                return Err(SimplexError::NegativeEntry { index, value: *value });
            }
            if *value > 1.0 + PROB_TOL {
                return Err(SimplexError::AboveOne { index, value: *value });
            }
            *value = value.clamp(0.0, 1.0);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(SimplexError::BadSum { sum });
        }
        Ok(Self(probs))
    }

    /// The uniform distribution `(1/K, ..., 1/K)`.
    pub fn barycenter(k: usize) -> Result<Self, SimplexError> {
        if k < 2 {
            return Err(SimplexError::TooFewClasses { k });
        }
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    /// The vertex putting all mass on class `index`.
    pub fn vertex(k: usize, index: usize) -> Result<Self, SimplexError> {
        if k < 2 {
            return Err(SimplexError::TooFewClasses { k });
        }
        if index >= k {
            return Err(SimplexError::IndexOutOfRange { index, k });
        }
        let mut v = vec![0.0; k];
        v[index] = 1.0;
        Ok(Self(v))
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

/// Shorthand for [`ProbVector::new`].
pub fn make_prob_vector(raw: &[f64]) -> Result<ProbVector, SimplexError> {
    ProbVector::new(raw)
}

/// The distribution of a single coordinate `Θ_k` under a second-order
/// distribution: a weighted set of values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMarginal {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl BinaryMarginal {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self, SimplexError> {
        if values.is_empty() {
            return Err(SimplexError::NoAtoms);
        }
        if values.len() != weights.len() {
            return Err(SimplexError::BadWeights(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SimplexError::NonFinite { index });
            }
            if v < 0.0 {
                return Err(SimplexError::NegativeEntry { index, value: v });
            }
            if v > 1.0 {
                return Err(SimplexError::AboveOne { index, value: v });
            }
        }
        check_weights(&weights)?;
        Ok(Self { values, weights })
    }

    /// Equal weights over `values`.
    pub fn uniform(values: Vec<f64>) -> Result<Self, SimplexError> {
        let n = values.len();
        Self::new(values, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates over `(value, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.weights.iter().copied())
    }

    /// `E[Θ_k]`, accumulated in atom order.
    pub fn mean(&self) -> f64 {
        let mut acc = 0.0;
        for (v, w) in self.iter() {
            acc += w * v;
        }
        acc
    }
}

/// A finite weighted set of simplex points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSecondOrder {
    atoms: Vec<ProbVector>,
    weights: Vec<f64>,
}

impl EmpiricalSecondOrder {
    pub fn new(atoms: Vec<ProbVector>, weights: Vec<f64>) -> Result<Self, SimplexError> {
        let first = atoms.first().ok_or(SimplexError::NoAtoms)?;
        let k = first.num_classes();
        for (index, atom) in atoms.iter().enumerate() {
            if atom.num_classes() != k {
                return Err(SimplexError::ClassMismatch {
                    index,
                    expected: k,
                    got: atom.num_classes(),
                });
            }
        }
        if weights.len() != atoms.len() {
            return Err(SimplexError::BadWeights(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        check_weights(&weights)?;
        Ok(Self { atoms, weights })
    }

    /// Equal weight `1/M` on each atom.
    pub fn uniform(atoms: Vec<ProbVector>) -> Result<Self, SimplexError> {
        let m = atoms.len();
        Self::new(atoms, vec![1.0 / m.max(1) as f64; m])
    }

    /// A second-order Dirac measure on `atom`.
    pub fn dirac(atom: ProbVector) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[ProbVector] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_classes(&self) -> usize {
        self.atoms[0].num_classes()
    }

    /// Iterates over `(atom, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&ProbVector, f64)> + '_ {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// Coordinate-wise weighted mean `E_Q[Θ]`.
    ///
    /// Coordinate `k` is accumulated in atom order exactly like
    /// [`BinaryMarginal::mean`], so `mean()[k] == marginal(k).mean()` holds
    /// bit for bit. The result is not renormalized.
    pub fn mean(&self) -> ProbVector {
        let k = self.num_classes();
        let mut acc = vec![0.0; k];
        for (atom, w) in self.iter() {
            for (a, &p) in acc.iter_mut().zip(atom.as_slice()) {
                *a += w * p;
            }
        }
        // A convex combination of simplex points; only rounding can push it
        // off, and `from_exact` absorbs that without rescaling.
        ProbVector::from_exact(acc).expect("convex combination of simplex points")
    }

    /// The marginal distribution of coordinate `k`.
    pub fn marginal(&self, k: usize) -> Result<BinaryMarginal, SimplexError> {
        let classes = self.num_classes();
        if k >= classes {
            return Err(SimplexError::IndexOutOfRange { index: k, k: classes });
        }
        Ok(BinaryMarginal {
            values: self.atoms.iter().map(|a| a[k]).collect(),
            weights: self.weights.clone(),
        })
    }

    /// All K marginals in class order.
    pub fn marginals(&self) -> Vec<BinaryMarginal> {
        (0..self.num_classes())
            .map(|k| self.marginal(k).expect("k < K"))
            .collect()
    }

    /// Marginals for `labels`, in the requested order.
    pub fn restrict(&self, labels: &[usize]) -> Result<Vec<BinaryMarginal>, SimplexError> {
        if labels.is_empty() {
            return Err(SimplexError::EmptySubset);
        }
        labels.iter().map(|&k| self.marginal(k)).collect()
    }

    /// True if the distribution is a single point mass, i.e. every atom with
    /// positive weight is the same vector.
    pub fn is_dirac(&self) -> bool {
        let mut support = self.iter().filter(|(_, w)| *w > 0.0).map(|(a, _)| a);
        match support.next() {
            None => true,
            Some(first) => support.all(|a| a == first),
        }
    }
}

/// Shorthand for [`EmpiricalSecondOrder::mean`].
pub fn second_order_mean(q: &EmpiricalSecondOrder) -> ProbVector {
    q.mean()
}

/// Shorthand for [`EmpiricalSecondOrder::marginal`].
pub fn marginal(q: &EmpiricalSecondOrder, k: usize) -> Result<BinaryMarginal, SimplexError> {
    q.marginal(k)
}

/// Shorthand for [`EmpiricalSecondOrder::restrict`].
pub fn restrict(q: &EmpiricalSecondOrder, labels: &[usize]) -> Result<Vec<BinaryMarginal>, SimplexError> {
    q.restrict(labels)
}

fn check_weights(weights: &[f64]) -> Result<(), SimplexError> {
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(SimplexError::BadWeights(format!("weight {i} is {w}")));
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(SimplexError::BadWeights(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// A Dirichlet distribution over the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSecondOrder {
    alpha: Vec<f64>,
}

impl DirichletSecondOrder {
    pub fn new(alpha: Vec<f64>) -> Result<Self, SimplexError> {
        if alpha.len() < 2 {
            return Err(SimplexError::TooFewClasses { k: alpha.len() });
        }
        if let Some((i, a)) = alpha.iter().enumerate().find(|(_, a)| !a.is_finite() || **a <= 0.0) {
            return Err(SimplexError::BadAlpha(format!("alpha[{i}] = {a}")));
        }
        Ok(Self { alpha })
    }

    /// `alpha = alpha0 * mean`; every mean entry must be positive.
    pub fn from_mean(mean: &ProbVector, alpha0: f64) -> Result<Self, SimplexError> {
        if !alpha0.is_finite() || alpha0 <= 0.0 {
            return Err(SimplexError::BadAlpha(format!("alpha0 = {alpha0}")));
        }
        Self::new(mean.as_slice().iter().map(|m| m * alpha0).collect())
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// Closed-form mean `alpha_k / alpha0`.
    pub fn mean(&self) -> Vec<f64> {
        let a0 = self.alpha0();
        self.alpha.iter().map(|a| a / a0).collect()
    }

    /// Closed-form marginal variance `alpha_k (alpha0 - alpha_k) / (alpha0^2 (alpha0 + 1))`.
    pub fn variance(&self) -> Vec<f64> {
        let a0 = self.alpha0();
        self.alpha
            .iter()
            .map(|a| a * (a0 - a) / (a0 * a0 * (a0 + 1.0)))
            .collect()
    }

    /// Draws one simplex point from `rng` via normalized Gamma variates.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> ProbVector {
        let gammas: Vec<Gamma<f64>> = self
            .alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("alpha validated positive"))
            .collect();
        loop {
            let draws: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
            let total: f64 = draws.iter().sum();
            // All coordinates can underflow for tiny alpha; redraw.
            if total > 0.0 && total.is_finite() {
                let probs = draws.into_iter().map(|g| g / total).collect();
                return ProbVector::from_exact(probs).expect("normalized gamma draws");
            }
        }
    }
}

/// The pseudo-random generator behind every seeded operation in this crate.
///
/// ChaCha8 from `rand_chacha` 0.9; its output stream is fixed per version,
/// so seeded results are reproducible across platforms.
pub type SeededRng = ChaCha8Rng;

/// Builds the crate's seeded generator.
pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws `n` atoms from `d` with uniform weights.
pub fn sample_dirichlet(d: &DirichletSecondOrder, n: usize, seed: u64) -> EmpiricalSecondOrder {
    let mut rng = seeded_rng(seed);
    sample_dirichlet_with(d, n.max(1), &mut rng)
}

/// Like [`sample_dirichlet`], drawing from a caller-owned generator.
pub fn sample_dirichlet_with<R: rand::Rng + ?Sized>(
    d: &DirichletSecondOrder,
    n: usize,
    rng: &mut R,
) -> EmpiricalSecondOrder {
    let atoms = (0..n.max(1)).map(|_| d.draw(rng)).collect();
    EmpiricalSecondOrder::uniform(atoms).expect("n >= 1 atoms of equal length")
}
