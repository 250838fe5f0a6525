//! Randomized property checks of the uncertainty axioms A0–A7 for each
//! measure family.
//!
//! | axiom | property checked |
//! |-------|------------------|
//! | A0 | TU, AU, EU are non-negative |
//! | A1 | EU vanishes exactly on Dirac distributions |
//! | A2 | TU is maximal (closed form) when the mean is the barycenter |
//! | A3 | EU strictly increases under a mean-preserving spread; TU is unchanged |
//! | A4 | TU (and AU where claimed) strictly increases under a center shift |
//! | A5 | EU is invariant under a spread-preserving location shift |
//! | A6 | AU vanishes on mixtures of Diracs at the vertices |
//! | A7 | label-wise measures add up over a partition of the labels |
//!
//! Each axiom draws its own stream of random cases from the suite seed.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{label_wise_sum, measure, Family, MeasureError, UncertaintyTriple};
use crate::simplex::{seeded_rng, DirichletSecondOrder, EmpiricalSecondOrder, ProbVector, SeededRng};
use crate::transforms::{
    center_shift, center_shift_vector, dirac_mixture, location_shift, mean_preserving_spread, zero_sum_direction,
    TransformError,
};

/// Strict inequalities must clear this margin to count as strict.
pub const STRICT_MARGIN: f64 = 1e-12;
/// Tolerance for invariances that hold analytically (A3 TU, A5 EU).
pub const EQUALITY_TOL: f64 = 1e-9;
/// Tolerance for A1's zero and A6's zero.
pub const ZERO_TOL: f64 = 1e-12;
/// Tolerance for A7's additive decomposition (summation order only).
pub const PARTITION_TOL: f64 = 1e-12;
/// An A5 violation needs at least this much change in EU.
pub const A5_WITNESS_MIN: f64 = 1e-6;

const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("number of cases must be at least 1")]
    NoCases,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("could not generate a usable case for {0} after {MAX_REDRAWS} draws")]
    Generator(Axiom),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axiom {
    A0,
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::A0,
        Axiom::A1,
        Axiom::A2,
        Axiom::A3,
        Axiom::A4,
        Axiom::A5,
        Axiom::A6,
        Axiom::A7,
    ];

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Violated,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::NotApplicable => "not_applicable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "tu")]
    Total,
    #[serde(rename = "au")]
    Aleatoric,
    #[serde(rename = "eu")]
    Epistemic,
}

impl Quantity {
    pub fn short_name(self) -> &'static str {
        match self {
            Quantity::Total => "tu",
            Quantity::Aleatoric => "au",
            Quantity::Epistemic => "eu",
        }
    }
}

/// Plain-data copy of a distribution for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub atoms: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl From<&EmpiricalSecondOrder> for DistributionRecord {
    fn from(q: &EmpiricalSecondOrder) -> Self {
        Self {
            atoms: q.atoms().iter().map(|a| a.as_slice().to_vec()).collect(),
            weights: q.weights().to_vec(),
        }
    }
}

impl DistributionRecord {
    pub fn to_distribution(&self) -> Result<EmpiricalSecondOrder, crate::simplex::SimplexError> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| ProbVector::from_exact(a.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        EmpiricalSecondOrder::new(atoms, self.weights.clone())
    }
}

/// A concrete case backing a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub description: String,
    pub q: DistributionRecord,
    pub q_prime: Option<DistributionRecord>,
    /// Shift vector for location and center shifts.
    pub shift: Option<Vec<f64>>,
    pub before: UncertaintyTriple,
    pub after: Option<UncertaintyTriple>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub axiom: Axiom,
    pub family: Family,
    pub verdict: Verdict,
    /// Quantities the verdict covers, e.g. only TU for A2.
    pub checked: Vec<Quantity>,
    /// Whether the family is asserted to satisfy this axiom.
    pub claimed: bool,
    /// Set for violations that are known and expected for this family.
    pub expected_violation: bool,
    pub cases: usize,
    /// Smallest slack for inequalities, largest deviation for equalities.
    pub worst: f64,
    pub note: String,
    pub witness: Option<Witness>,
}

impl AxiomResult {
    /// A claimed axiom that came back violated.
    pub fn is_unexpected_violation(&self) -> bool {
        self.verdict == Verdict::Violated && self.claimed
    }
}

/// Quantities each family is asserted to satisfy per axiom; `None` means the
/// axiom is not asserted for the family.
pub fn claimed_quantities(family: Family, axiom: Axiom) -> Option<&'static [Quantity]> {
    use Quantity::*;
    const ALL3: &[Quantity] = &[Total, Aleatoric, Epistemic];
    match (family, axiom) {
        (_, Axiom::A0) => Some(ALL3),
        (_, Axiom::A1) => Some(&[Epistemic]),
        (_, Axiom::A2) => Some(&[Total]),
        (_, Axiom::A3) => Some(&[Epistemic, Total]),
        (Family::Variance, Axiom::A4) => Some(&[Total, Aleatoric]),
        (_, Axiom::A4) => Some(&[Total]),
        (Family::Variance, Axiom::A5) => Some(&[Epistemic]),
        (_, Axiom::A5) => None,
        (_, Axiom::A6) => Some(&[Aleatoric]),
        (Family::GlobalEntropy, Axiom::A7) => None,
        (_, Axiom::A7) => Some(ALL3),
    }
}

/// Runs every axiom for `family` on `n_cases` random distributions each.
pub fn run_axiom_suite(family: Family, n_cases: usize, seed: u64) -> Result<Vec<AxiomResult>, SuiteError> {
    if n_cases == 0 {
        return Err(SuiteError::NoCases);
    }
    Axiom::ALL
        .iter()
        .map(|&axiom| run_axiom(family, axiom, n_cases, seed))
        .collect()
}

/// Runs a single axiom check.
pub fn run_axiom(family: Family, axiom: Axiom, n_cases: usize, seed: u64) -> Result<AxiomResult, SuiteError> {
    if n_cases == 0 {
        return Err(SuiteError::NoCases);
    }
    let mut rng = seeded_rng(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(axiom.index() + 1)));
    let mut check = Check::new(family, axiom);
    match axiom {
        Axiom::A0 => check_a0(&mut check, &mut rng, n_cases)?,
        Axiom::A1 => check_a1(&mut check, &mut rng, n_cases)?,
        Axiom::A2 => check_a2(&mut check, &mut rng, n_cases)?,
        Axiom::A3 => check_a3(&mut check, &mut rng, n_cases)?,
        Axiom::A4 => check_a4(&mut check, &mut rng, n_cases)?,
        Axiom::A5 => check_a5(&mut check, &mut rng, n_cases)?,
        Axiom::A6 => check_a6(&mut check, &mut rng, n_cases)?,
        Axiom::A7 => check_a7(&mut check, &mut rng, n_cases)?,
    }
    let mut result = check.finish();
    if family == Family::GlobalEntropy && axiom == Axiom::A5 && result.witness.is_some() {
        result.verdict = Verdict::Violated;
        result.expected_violation = true;
        result.checked = vec![Quantity::Epistemic];
    }
    Ok(result)
}

/// Accumulates per-case outcomes into one [`AxiomResult`].
struct Check {
    family: Family,
    axiom: Axiom,
    claimed: Option<&'static [Quantity]>,
    cases: usize,
    worst: f64,
    failure: Option<Witness>,
    observations: Vec<String>,
}

impl Check {
    fn new(family: Family, axiom: Axiom) -> Self {
        Self {
            family,
            axiom,
            claimed: claimed_quantities(family, axiom),
            cases: 0,
            worst: f64::NAN,
            failure: None,
            observations: Vec::new(),
        }
    }

    fn claims(&self, quantity: Quantity) -> bool {
        self.claimed.is_some_and(|qs| qs.contains(&quantity))
    }

    /// Records a slack that must exceed `threshold`.
    fn at_least(&mut self, slack: f64, threshold: f64, witness: impl FnOnce() -> Witness) {
        self.worst = if self.worst.is_nan() {
            slack
        } else {
            self.worst.min(slack)
        };
        if slack.partial_cmp(&threshold) != Some(Ordering::Greater) && self.failure.is_none() {
            self.failure = Some(witness());
        }
    }

    /// Records a deviation that must not exceed `tol`.
    fn at_most(&mut self, deviation: f64, tol: f64, witness: impl FnOnce() -> Witness) {
        self.worst = if self.worst.is_nan() {
            deviation
        } else {
            self.worst.max(deviation)
        };
        if !matches!(deviation.partial_cmp(&tol), Some(Ordering::Less | Ordering::Equal)) && self.failure.is_none() {
            self.failure = Some(witness());
        }
    }

    fn finish(self) -> AxiomResult {
        let (verdict, checked, claimed) = match self.claimed {
            Some(qs) => {
                let verdict = if self.failure.is_some() {
                    Verdict::Violated
                } else {
                    Verdict::Holds
                };
                (verdict, qs.to_vec(), true)
            }
            None => (Verdict::NotApplicable, Vec::new(), false),
        };
        AxiomResult {
            axiom: self.axiom,
            family: self.family,
            verdict,
            checked,
            claimed,
            expected_violation: false,
            cases: self.cases,
            worst: if self.worst.is_nan() { 0.0 } else { self.worst },
            note: self.observations.join("; "),
            witness: self.failure,
        }
    }
}

fn triple(q: &EmpiricalSecondOrder, family: Family) -> Result<UncertaintyTriple, SuiteError> {
    Ok(measure(q, family)?.global)
}

fn pick(t: &UncertaintyTriple, quantity: Quantity) -> f64 {
    match quantity {
        Quantity::Total => t.total,
        Quantity::Aleatoric => t.aleatoric,
        Quantity::Epistemic => t.epistemic,
    }
}

fn witness(
    description: impl Into<String>,
    q: &EmpiricalSecondOrder,
    q_prime: Option<&EmpiricalSecondOrder>,
    shift: Option<&[f64]>,
    before: UncertaintyTriple,
    after: Option<UncertaintyTriple>,
) -> Witness {
    Witness {
        description: description.into(),
        q: q.into(),
        q_prime: q_prime.map(Into::into),
        shift: shift.map(<[f64]>::to_vec),
        before,
        after,
    }
}

/// Random second-order distribution with K in [2, 10] and M in [1, 64].
///
/// Most cases are ensembles drawn around a random mean at a random
/// concentration; a share of cases are Diracs, and some have atoms snapped
/// to vertices, to cover boundary behaviour.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R) -> EmpiricalSecondOrder {
    let k = rng.random_range(2..=10);
    random_distribution_k(rng, k)
}

/// Like [`random_distribution`] with a fixed number of classes.
pub fn random_distribution_k<R: Rng + ?Sized>(rng: &mut R, k: usize) -> EmpiricalSecondOrder {
    let shape: f64 = rng.random();
    let m = if shape < 0.1 { 1 } else { rng.random_range(1..=64) };
    let flat = DirichletSecondOrder::new(vec![1.0; k]).expect("k >= 2");
    let center = flat.draw(rng);
    let alpha0 = 10f64.powf(rng.random_range(0.0..2.5));
    let alpha: Vec<f64> = center
        .as_slice()
        .iter()
        .map(|c| (c * alpha0 * k as f64).max(0.05))
        .collect();
    let d = DirichletSecondOrder::new(alpha).expect("positive alpha");
    let snap_vertices = (0.1..0.25).contains(&shape);
    let atoms: Vec<ProbVector> = (0..m)
        .map(|_| {
            if snap_vertices && rng.random_bool(0.4) {
                ProbVector::vertex(k, rng.random_range(0..k)).expect("valid vertex")
            } else {
                d.draw(rng)
            }
        })
        .collect();
    let weights = if rng.random_bool(0.5) {
        vec![1.0 / m as f64; m]
    } else {
        let w = DirichletSecondOrder::new(vec![1.0; m.max(2)])
            .expect("positive")
            .draw(rng);
        if m == 1 {
            vec![1.0]
        } else {
            w.into_inner()
        }
    };
    EmpiricalSecondOrder::new(atoms, weights).expect("valid random distribution")
}

fn check_a0(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    for _ in 0..n {
        let q = random_distribution(rng);
        let t = triple(&q, check.family)?;
        let min = t.total.min(t.aleatoric).min(t.epistemic);
        check.at_least(min, -f64::MIN_POSITIVE, || {
            witness("negative component", &q, None, None, t, None)
        });
        check.cases += 1;
    }
    Ok(())
}

fn check_a1(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    // Two-sided: Diracs give EU = 0, anything else gives EU > 0.
    let mut worst_dirac = 0.0f64;
    let mut min_spread = f64::INFINITY;
    for _ in 0..n {
        let q = random_distribution(rng);
        let atom = q.atoms()[rng.random_range(0..q.num_atoms())].clone();
        let dirac = EmpiricalSecondOrder::dirac(atom);
        let td = triple(&dirac, check.family)?;
        worst_dirac = worst_dirac.max(td.epistemic);
        check.at_most(td.epistemic, ZERO_TOL, || {
            witness("Dirac with nonzero EU", &dirac, None, None, td, None)
        });
        if !q.is_dirac() {
            let t = triple(&q, check.family)?;
            min_spread = min_spread.min(t.epistemic);
            if t.epistemic.partial_cmp(&ZERO_TOL) != Some(Ordering::Greater) && check.failure.is_none() {
                check.failure = Some(witness("non-Dirac with zero EU", &q, None, None, t, None));
            }
        }
        check.cases += 1;
    }
    check.worst = worst_dirac;
    check
        .observations
        .push(format!("max Dirac EU {worst_dirac:e}; min non-Dirac EU {min_spread:e}"));
    Ok(())
}

/// Mixes all cyclic relabelings of `q`, which puts its mean at the barycenter.
pub fn symmetrize(q: &EmpiricalSecondOrder) -> EmpiricalSecondOrder {
    let k = q.num_classes();
    let mut atoms = Vec::with_capacity(k * q.num_atoms());
    let mut weights = Vec::with_capacity(k * q.num_atoms());
    for (atom, w) in q.iter() {
        for r in 0..k {
            let rotated: Vec<f64> = (0..k).map(|i| atom[(i + r) % k]).collect();
            atoms.push(ProbVector::from_exact(rotated).expect("permutation of a valid vector"));
            weights.push(w / k as f64);
        }
    }
    EmpiricalSecondOrder::new(atoms, weights).expect("valid symmetrization")
}

fn check_a2(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    let mut max_gap = 0.0f64;
    for _ in 0..n {
        let q = random_distribution(rng);
        let k = q.num_classes();
        let cap = check.family.max_total(k);
        let t = triple(&q, check.family)?;
        // No distribution exceeds the closed-form maximum...
        check.at_least(cap - t.total, -EQUALITY_TOL, || {
            witness(format!("TU exceeds closed-form maximum {cap}"), &q, None, None, t, None)
        });
        // ...and a barycenter-mean distribution attains it.
        let sym = symmetrize(&q);
        let ts = triple(&sym, check.family)?;
        let gap = (ts.total - cap).abs();
        max_gap = max_gap.max(gap);
        if gap > EQUALITY_TOL && check.failure.is_none() {
            check.failure = Some(witness(
                format!("barycenter-mean TU differs from closed form {cap}"),
                &sym,
                None,
                None,
                ts,
                None,
            ));
        }
        check.cases += 1;
    }
    check
        .observations
        .push(format!("max |TU(barycenter mean) - closed form| {max_gap:e}"));
    Ok(())
}

fn check_a3(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    let mut max_tu_change = 0.0f64;
    let mut max_identity_gap = 0.0f64;
    for _ in 0..n {
        let (q, spread) = draw_until(rng, Axiom::A3, |rng| {
            let q = random_distribution(rng);
            let magnitude = rng.random_range(0.05..0.3);
            match mean_preserving_spread(&q, magnitude, rng.random()) {
                // Keep the analytical EU increment well clear of rounding.
                Ok(s) if s.total_noise_variance() >= 1e-6 => Some((q, s)),
                _ => None,
            }
        })?;
        let q2 = &spread.distribution;
        let (t, t2) = (triple(&q, check.family)?, triple(q2, check.family)?);
        check.at_least(t2.epistemic - t.epistemic, STRICT_MARGIN, || {
            witness(
                "EU did not strictly increase under spread",
                &q,
                Some(q2),
                None,
                t,
                Some(t2),
            )
        });
        let tu_change = (t2.total - t.total).abs();
        max_tu_change = max_tu_change.max(tu_change);
        if tu_change > EQUALITY_TOL && check.failure.is_none() {
            check.failure = Some(witness("TU changed under spread", &q, Some(q2), None, t, Some(t2)));
        }
        if check.family == Family::Variance {
            let gap = (t2.epistemic - t.epistemic - spread.total_noise_variance()).abs();
            max_identity_gap = max_identity_gap.max(gap);
            if gap > EQUALITY_TOL && check.failure.is_none() {
                check.failure = Some(witness(
                    "EU increment differs from noise variance",
                    &q,
                    Some(q2),
                    None,
                    t,
                    Some(t2),
                ));
            }
        }
        check.cases += 1;
    }
    check.observations.push(format!("max |ΔTU| {max_tu_change:e}"));
    if check.family == Family::Variance {
        check
            .observations
            .push(format!("max |ΔEU - Σ Var(Z_k)| {max_identity_gap:e}"));
    }
    Ok(())
}

fn check_a4(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    let mut au_up = 0usize;
    let check_au = check.claims(Quantity::Aleatoric);
    for _ in 0..n {
        let (q, q2, z) = draw_until(rng, Axiom::A4, |rng| {
            let q = random_distribution(rng);
            let k = q.num_classes() as f64;
            let off_center = q
                .mean()
                .as_slice()
                .iter()
                .fold(0.0f64, |m, v| m.max((v - 1.0 / k).abs()));
            if off_center < 1e-3 {
                return None;
            }
            let mut lambda: f64 = rng.random_range(0.1..0.9);
            for _ in 0..8 {
                match center_shift(&q, lambda) {
                    Ok(q2) => {
                        let z = center_shift_vector(&q, lambda).expect("same inputs");
                        return Some((q, q2, z));
                    }
                    Err(TransformError::LeavesSimplex { .. }) => lambda = (1.0 + lambda) / 2.0,
                    Err(_) => return None,
                }
            }
            None
        })?;
        let (t, t2) = (triple(&q, check.family)?, triple(&q2, check.family)?);
        check.at_least(t2.total - t.total, STRICT_MARGIN, || {
            witness(
                "TU did not strictly increase under center shift",
                &q,
                Some(&q2),
                Some(&z),
                t,
                Some(t2),
            )
        });
        if t2.aleatoric > t.aleatoric {
            au_up += 1;
        }
        if check_au {
            check.at_least(t2.aleatoric - t.aleatoric, STRICT_MARGIN, || {
                witness(
                    "AU did not strictly increase under center shift",
                    &q,
                    Some(&q2),
                    Some(&z),
                    t,
                    Some(t2),
                )
            });
        }
        check.cases += 1;
    }
    check.observations.push(format!("AU increased in {au_up} of {n} cases"));
    Ok(())
}

/// Random zero-sum shift that keeps every atom of `q` on the simplex.
fn random_valid_shift<R: Rng + ?Sized>(q: &EmpiricalSecondOrder, rng: &mut R) -> Option<Vec<f64>> {
    let k = q.num_classes();
    let support: Vec<usize> = (0..k).collect();
    for _ in 0..20 {
        let d = zero_sum_direction(k, &support, rng);
        let mut room = f64::INFINITY;
        for atom in q.atoms() {
            for (p, di) in atom.as_slice().iter().zip(&d) {
                if *di > 0.0 {
                    room = room.min((1.0 - p) / di);
                } else if *di < 0.0 {
                    room = room.min(p / -di);
                }
            }
        }
        if room >= 1e-3 {
            let t = room * rng.random_range(0.2..0.9);
            return Some(d.iter().map(|v| v * t).collect());
        }
    }
    None
}

fn check_a5(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    let mut max_change = 0.0f64;
    let mut largest: Option<Witness> = None;
    for _ in 0..n {
        let (q, q2, z) = draw_until(rng, Axiom::A5, |rng| {
            let q = random_distribution(rng);
            let z = random_valid_shift(&q, rng)?;
            let q2 = location_shift(&q, &z).ok()?;
            Some((q, q2, z))
        })?;
        let (t, t2) = (triple(&q, check.family)?, triple(&q2, check.family)?);
        let change = (t2.epistemic - t.epistemic).abs();
        if change > max_change {
            max_change = change;
            if check.claimed.is_none() && change > A5_WITNESS_MIN && largest.is_none() {
                largest = Some(witness(
                    "EU changed under a spread-preserving location shift",
                    &q,
                    Some(&q2),
                    Some(&z),
                    t,
                    Some(t2),
                ));
            }
        }
        if check.claimed.is_some() {
            check.at_most(change, EQUALITY_TOL, || {
                witness("EU changed under location shift", &q, Some(&q2), Some(&z), t, Some(t2))
            });
        }
        check.cases += 1;
    }
    check.observations.push(format!("max |ΔEU| {max_change:e}"));
    if check.claimed.is_none() {
        check.worst = max_change;
        check.failure = largest;
    }
    Ok(())
}

fn check_a6(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    for _ in 0..n {
        let k = rng.random_range(2..=10);
        let mut w = DirichletSecondOrder::new(vec![1.0; k])
            .expect("k >= 2")
            .draw(rng)
            .into_inner();
        // Sometimes drop vertices entirely.
        if rng.random_bool(0.3) {
            let keep = rng.random_range(0..k);
            for (i, wi) in w.iter_mut().enumerate() {
                if i != keep && rng.random_bool(0.5) {
                    *wi = 0.0;
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= s);
        }
        let q = dirac_mixture(&w)?;
        let t = triple(&q, check.family)?;
        check.at_most(t.aleatoric, ZERO_TOL, || {
            witness("vertex mixture with nonzero AU", &q, None, None, t, None)
        });
        check.cases += 1;
    }
    Ok(())
}

fn check_a7(check: &mut Check, rng: &mut SeededRng, n: usize) -> Result<(), SuiteError> {
    if check.claimed.is_none() {
        check
            .observations
            .push("global measures have no label-wise restriction".into());
        return Ok(());
    }
    for _ in 0..n {
        let q = random_distribution(rng);
        let k = q.num_classes();
        let (first, second) = random_partition(rng, k);
        let full = triple(&q, check.family)?;
        let a = label_wise_sum(check.family, &q.restrict(&first).expect("valid labels"))?;
        let b = label_wise_sum(check.family, &q.restrict(&second).expect("valid labels"))?;
        let parts = UncertaintyTriple::sum([&a, &b]);
        let deviation = [Quantity::Total, Quantity::Aleatoric, Quantity::Epistemic]
            .iter()
            .map(|&qty| (pick(&full, qty) - pick(&parts, qty)).abs())
            .fold(0.0, f64::max);
        check.at_most(deviation, PARTITION_TOL, || {
            witness(
                format!("partition {first:?} / {second:?} does not add up"),
                &q,
                None,
                None,
                full,
                Some(parts),
            )
        });
        check.cases += 1;
    }
    Ok(())
}

/// Two non-empty disjoint label sets covering `0..k`.
fn random_partition<R: Rng + ?Sized>(rng: &mut R, k: usize) -> (Vec<usize>, Vec<usize>) {
    loop {
        let mut first = Vec::new();
        let mut second = Vec::new();
        for label in 0..k {
            if rng.random_bool(0.5) {
                first.push(label);
            } else {
                second.push(label);
            }
        }
        if !first.is_empty() && !second.is_empty() {
            return (first, second);
        }
    }
}

fn draw_until<T, F>(rng: &mut SeededRng, axiom: Axiom, mut attempt: F) -> Result<T, SuiteError>
where
    F: FnMut(&mut SeededRng) -> Option<T>,
{
    for _ in 0..MAX_REDRAWS {
        if let Some(case) = attempt(rng) {
            return Ok(case);
        }
    }
    Err(SuiteError::Generator(axiom))
}

/// Searches random location shifts for a case where the global-entropy EU
/// changes by more than [`A5_WITNESS_MIN`].
pub fn find_global_entropy_a5_witness(seed: u64, max_tries: usize) -> Result<Option<Witness>, SuiteError> {
    let mut rng = seeded_rng(seed);
    for _ in 0..max_tries {
        let q = random_distribution(&mut rng);
        let Some(z) = random_valid_shift(&q, &mut rng) else {
            continue;
        };
        let Ok(q2) = location_shift(&q, &z) else { continue };
        let (t, t2) = (triple(&q, Family::GlobalEntropy)?, triple(&q2, Family::GlobalEntropy)?);
        if (t2.epistemic - t.epistemic).abs() > A5_WITNESS_MIN {
            return Ok(Some(witness(
                "EU changed under a spread-preserving location shift",
                &q,
                Some(&q2),
                Some(&z),
                t,
                Some(t2),
            )));
        }
    }
    Ok(None)
}
