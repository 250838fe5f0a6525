//! Transforms of second-order distributions used to probe measure behaviour:
//! mean-preserving spreads, spread-preserving location shifts, and shifts
//! toward the barycenter.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{seeded_rng, EmpiricalSecondOrder, ProbVector, SimplexError};

/// Slack allowed when checking that a shifted coordinate stays in `[0, 1]`.
const SHIFT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("no atom has room for a mean-preserving spread")]
    NoRoom,
    #[error("atom {atom} leaves the simplex at class {class} (value {value})")]
    LeavesSimplex { atom: usize, class: usize, value: f64 },
    #[error("shift vector is zero")]
    ZeroShift,
    #[error("shift vector sums to {0}, expected 0")]
    NotZeroSum(f64),
    #[error("shift has {got} classes, distribution has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("distribution is already centered at the barycenter")]
    AlreadyCentered,
    #[error("lambda must lie in (0, 1), got {0}")]
    BadLambda(f64),
    #[error("spread magnitude must be positive and finite, got {0}")]
    BadMagnitude(f64),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Output of [`mean_preserving_spread`]: the spread distribution and the
/// per-class variance of the added noise `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spread {
    pub distribution: EmpiricalSecondOrder,
    /// `Var(Z_k)` for each class `k`.
    pub noise_variance: Vec<f64>,
}

impl Spread {
    /// `Σ_k Var(Z_k)`.
    pub fn total_noise_variance(&self) -> f64 {
        self.noise_variance.iter().sum()
    }
}

/// Splits every atom with room into `θ ± t·d`, each carrying half the weight.
///
/// `d` is a seeded random direction in the zero-sum hyperplane supported on
/// the atom's nonzero coordinates, scaled so `max_k |d_k| = 1`. The step `t`
/// is `magnitude`, shrunk per atom so both offspring stay on the simplex.
/// Atoms with no room (vertices) are kept as they are. The noise has zero
/// conditional mean, so `E[Θ]` is unchanged.
pub fn mean_preserving_spread(q: &EmpiricalSecondOrder, magnitude: f64, seed: u64) -> Result<Spread, TransformError> {
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(TransformError::BadMagnitude(magnitude));
    }
    let k = q.num_classes();
    let mut rng = seeded_rng(seed);
    let mut atoms = Vec::with_capacity(2 * q.num_atoms());
    let mut weights = Vec::with_capacity(2 * q.num_atoms());
    let mut noise_variance = vec![0.0; k];
    let mut split_any = false;

    for (atom, w) in q.iter() {
        let theta = atom.as_slice();
        let support: Vec<usize> = (0..k).filter(|&i| theta[i] > 0.0).collect();
        let step = if w > 0.0 && support.len() >= 2 {
            let d = zero_sum_direction(k, &support, &mut rng);
            let room = support
                .iter()
                .filter(|&&i| d[i] != 0.0)
                .map(|&i| theta[i].min(1.0 - theta[i]) / d[i].abs())
                .fold(f64::INFINITY, f64::min);
            let t = magnitude.min(room);
            (t > 0.0).then_some((t, d))
        } else {
            None
        };
        match step {
            Some((t, d)) => {
                let plus: Vec<f64> = theta.iter().zip(&d).map(|(p, di)| p + t * di).collect();
                let minus: Vec<f64> = theta.iter().zip(&d).map(|(p, di)| p - t * di).collect();
                atoms.push(ProbVector::from_exact(plus)?);
                atoms.push(ProbVector::from_exact(minus)?);
                weights.push(w / 2.0);
                weights.push(w / 2.0);
                for (nv, di) in noise_variance.iter_mut().zip(&d) {
                    *nv += w * (t * di) * (t * di);
                }
                split_any = true;
            }
            None => {
                atoms.push(atom.clone());
                weights.push(w);
            }
        }
    }
    if !split_any {
        return Err(TransformError::NoRoom);
    }
    Ok(Spread {
        distribution: EmpiricalSecondOrder::new(atoms, weights)?,
        noise_variance,
    })
}

/// Random unit direction (max-norm) with zero sum, nonzero only on `support`.
/// The first nonzero entry is positive, which makes `±d` canonical.
pub(crate) fn zero_sum_direction<R: Rng + ?Sized>(k: usize, support: &[usize], rng: &mut R) -> Vec<f64> {
    loop {
        let mut d = vec![0.0; k];
        for &i in support {
            d[i] = rng.random_range(-1.0..1.0);
        }
        let mean = support.iter().map(|&i| d[i]).sum::<f64>() / support.len() as f64;
        for &i in support {
            d[i] -= mean;
        }
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale < 1e-6 {
            continue;
        }
        let first = d.iter().copied().find(|v| *v != 0.0).unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        return d.into_iter().map(|v| sign * v / scale).collect();
    }
}

/// Translates every atom by the constant vector `z`.
pub fn location_shift(q: &EmpiricalSecondOrder, z: &[f64]) -> Result<EmpiricalSecondOrder, TransformError> {
    let k = q.num_classes();
    if z.len() != k {
        return Err(TransformError::DimensionMismatch {
            expected: k,
            got: z.len(),
        });
    }
    let sum: f64 = z.iter().sum();
    if sum.abs() > SHIFT_TOL {
        return Err(TransformError::NotZeroSum(sum));
    }
    if z.iter().all(|v| *v == 0.0) {
        return Err(TransformError::ZeroShift);
    }
    let mut atoms = Vec::with_capacity(q.num_atoms());
    for (m, atom) in q.atoms().iter().enumerate() {
        let shifted: Vec<f64> = atom.as_slice().iter().zip(z).map(|(p, d)| p + d).collect();
        if let Some((class, &value)) = shifted
            .iter()
            .enumerate()
            .find(|(_, v)| **v < -SHIFT_TOL || **v > 1.0 + SHIFT_TOL)
        {
            return Err(TransformError::LeavesSimplex { atom: m, class, value });
        }
        atoms.push(ProbVector::from_exact(shifted)?);
    }
    Ok(EmpiricalSecondOrder::new(atoms, q.weights().to_vec())?)
}

/// The shift `(1 - λ)(β - E[Θ])` that moves the mean toward the barycenter.
pub fn center_shift_vector(q: &EmpiricalSecondOrder, lambda: f64) -> Result<Vec<f64>, TransformError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(TransformError::BadLambda(lambda));
    }
    let k = q.num_classes();
    let beta = 1.0 / k as f64;
    let mean = q.mean();
    if mean.as_slice().iter().all(|m| (m - beta).abs() <= SHIFT_TOL) {
        return Err(TransformError::AlreadyCentered);
    }
    Ok(mean.as_slice().iter().map(|m| (1.0 - lambda) * (beta - m)).collect())
}

/// Location shift after which `E[Θ'] = λ E[Θ] + (1 - λ) β`.
pub fn center_shift(q: &EmpiricalSecondOrder, lambda: f64) -> Result<EmpiricalSecondOrder, TransformError> {
    let z = center_shift_vector(q, lambda)?;
    location_shift(q, &z)
}

/// Mixture of second-order Diracs on the K vertices with the given weights.
pub fn dirac_mixture(weights: &[f64]) -> Result<EmpiricalSecondOrder, TransformError> {
    let k = weights.len();
    let atoms = (0..k)
        .map(|i| ProbVector::vertex(k, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EmpiricalSecondOrder::new(atoms, weights.to_vec())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    MeanPreservingSpread,
    LocationShift,
    CenterShift,
}

/// A seeded, serializable description of one transform.
///
/// `magnitude` is the spread step for spreads and the max-norm of the shift
/// for location shifts (direction drawn from `seed`); center shifts use
/// `lambda` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub magnitude: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl TransformSpec {
    pub fn apply(&self, q: &EmpiricalSecondOrder) -> Result<EmpiricalSecondOrder, TransformError> {
        match self.kind {
            TransformKind::MeanPreservingSpread => {
                Ok(mean_preserving_spread(q, self.magnitude, self.seed)?.distribution)
            }
            TransformKind::LocationShift => {
                if !(self.magnitude > 0.0 && self.magnitude.is_finite()) {
                    return Err(TransformError::BadMagnitude(self.magnitude));
                }
                let k = q.num_classes();
                let support: Vec<usize> = (0..k).collect();
                let d = zero_sum_direction(k, &support, &mut seeded_rng(self.seed));
                let z: Vec<f64> = d.iter().map(|v| v * self.magnitude).collect();
                location_shift(q, &z)
            }
            TransformKind::CenterShift => center_shift(q, self.lambda),
        }
    }
}
