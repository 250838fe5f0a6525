#![allow(dead_code)]

use proptest::prelude::*;
use souq::simplex::{EmpiricalSecondOrder, ProbVector};

/// Random positive vector normalized onto the simplex; some entries may be
/// exactly zero.
pub fn prob_vector(k: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.001f64..1.0], k).prop_filter_map("all-zero row", |raw| {
        let sum: f64 = raw.iter().sum();
        (sum > 0.0).then(|| ProbVector::new(&raw.iter().map(|x| x / sum).collect::<Vec<_>>()).unwrap())
    })
}

pub fn second_order_k(k: usize, max_atoms: usize) -> impl Strategy<Value = EmpiricalSecondOrder> {
    (1..=max_atoms).prop_flat_map(move |m| {
        (
            prop::collection::vec(prob_vector(k), m),
            prop::collection::vec(0.05f64..1.0, m),
            any::<bool>(),
        )
            .prop_map(|(atoms, raw_w, uniform)| {
                if uniform {
                    EmpiricalSecondOrder::uniform(atoms).unwrap()
                } else {
                    let s: f64 = raw_w.iter().sum();
                    EmpiricalSecondOrder::new(atoms, raw_w.iter().map(|w| w / s).collect()).unwrap()
                }
            })
    })
}

pub fn second_order() -> impl Strategy<Value = EmpiricalSecondOrder> {
    (2usize..=6).prop_flat_map(|k| second_order_k(k, 8))
}

/// Mutual information `Σ_m w_m KL(θ_m || θ̄)` in bits.
pub fn mutual_information(q: &EmpiricalSecondOrder) -> f64 {
    let k = q.num_classes();
    let mut mean = vec![0.0; k];
    for (a, w) in q.iter() {
        for c in 0..k {
            mean[c] += w * a[c];
        }
    }
    let mut mi = 0.0;
    for (a, w) in q.iter() {
        for c in 0..k {
            if a[c] > 0.0 {
                mi += w * a[c] * (a[c] / mean[c]).log2();
            }
        }
    }
    mi
}

/// `KL(Bern(p) || Bern(m))` in bits.
pub fn bernoulli_kl(p: f64, m: f64) -> f64 {
    let term = |x: f64, y: f64| if x > 0.0 { x * (x / y).log2() } else { 0.0 };
    term(p, m) + term(1.0 - p, 1.0 - m)
}

/// Applies a class permutation: new class `i` is old class `perm[i]`.
pub fn permute(q: &EmpiricalSecondOrder, perm: &[usize]) -> EmpiricalSecondOrder {
    let atoms = q
        .atoms()
        .iter()
        .map(|a| ProbVector::from_exact(perm.iter().map(|&j| a[j]).collect()).unwrap())
        .collect();
    EmpiricalSecondOrder::new(atoms, q.weights().to_vec()).unwrap()
}
