mod common;

use common::*;
use proptest::prelude::*;
use souq::eval::{accuracy_rejection_curve, auroc, default_grid, Cohort, ScoredInstance};
use souq::measures::{
    global_entropy_measures, label_entropy_measures, loss_based_measures, measure, variance_measures, Family,
    ScoringRule,
};
use souq::simplex::{sample_dirichlet, BinaryMarginal, DirichletSecondOrder, EmpiricalSecondOrder, ProbVector};
use souq::transforms::{center_shift, dirac_mixture, location_shift, mean_preserving_spread};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn marginal_means_sum_to_one(q in second_order()) {
        let total: f64 = q.marginals().iter().map(|m| m.mean()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn mean_commutes_with_marginal(q in second_order()) {
        let mean = q.mean();
        for k in 0..q.num_classes() {
            prop_assert_eq!(q.marginal(k).unwrap().mean(), mean[k]);
        }
    }

    #[test]
    fn restrict_partitions_marginals(q in second_order(), split in any::<prop::sample::Index>()) {
        let k = q.num_classes();
        let cut = 1 + split.index(k - 1);
        let left: Vec<usize> = (0..cut).collect();
        let right: Vec<usize> = (cut..k).collect();
        let mut union = q.restrict(&left).unwrap();
        union.extend(q.restrict(&right).unwrap());
        prop_assert_eq!(union, q.marginals());
    }

    #[test]
    fn additivity(q in second_order()) {
        for family in Family::ALL {
            let r = measure(&q, family).unwrap();
            prop_assert!(r.global.additivity_gap() <= 1e-7, "{family}: {:?}", r.global);
            for t in &r.per_label {
                prop_assert!(t.additivity_gap() <= 1e-7);
            }
        }
    }

    #[test]
    fn family_bounds(q in second_order()) {
        let k = q.num_classes();
        for family in Family::ALL {
            let g = measure(&q, family).unwrap().global;
            prop_assert!(g.total >= 0.0 && g.aleatoric >= 0.0 && g.epistemic >= 0.0);
            prop_assert!(g.total <= family.max_total(k) + 1e-12, "{family}: {} > {}", g.total, family.max_total(k));
        }
    }

    #[test]
    fn entropy_epistemic_is_mutual_information(q in second_order()) {
        let eu = global_entropy_measures(&q).unwrap().epistemic;
        prop_assert!((eu - mutual_information(&q)).abs() <= 1e-9);
    }

    #[test]
    fn label_entropy_epistemic_is_expected_kl(q in second_order()) {
        let r = label_entropy_measures(&q).unwrap();
        for (k, t) in r.per_label.iter().enumerate() {
            let m = q.marginal(k).unwrap();
            let mean = m.mean();
            let oracle: f64 = m.iter().map(|(v, w)| w * bernoulli_kl(v, mean)).sum();
            prop_assert!((t.epistemic - oracle).abs() <= 1e-9);
        }
    }

    #[test]
    fn variance_epistemic_is_weighted_variance(q in second_order()) {
        let r = variance_measures(&q);
        for (k, t) in r.per_label.iter().enumerate() {
            let m = q.marginal(k).unwrap();
            let mean = m.mean();
            let oracle: f64 = m.iter().map(|(v, w)| w * (v - mean) * (v - mean)).sum();
            prop_assert!((t.epistemic - oracle).abs() <= 1e-12);
        }
    }

    #[test]
    fn permutation_equivariance(
        q in second_order(),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let k = q.num_classes();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut souq::simplex::seeded_rng(seed));
        let p = permute(&q, &perm);
        for family in Family::ALL {
            let a = measure(&q, family).unwrap();
            let b = measure(&p, family).unwrap();
            prop_assert_eq!(a.global, b.global, "{}", family);
            for (i, &j) in perm.iter().enumerate().take(b.per_label.len()) {
                prop_assert_eq!(b.per_label[i], a.per_label[j]);
            }
        }
    }

    #[test]
    fn scoring_rule_reduction(values in prop::collection::vec(0.0f64..=1.0, 1..10), raw_w in prop::collection::vec(0.05f64..1.0, 10)) {
        let s: f64 = raw_w[..values.len()].iter().sum();
        let w: Vec<f64> = raw_w[..values.len()].iter().map(|x| x / s).collect();
        let m = BinaryMarginal::new(values, w).unwrap();
        let lent = souq::measures::label_entropy_triple(&m).unwrap();
        let var = souq::measures::variance_triple(&m);
        let log = loss_based_measures(&m, ScoringRule::LogLoss).unwrap();
        let sq = loss_based_measures(&m, ScoringRule::SquaredError).unwrap();
        for (a, b) in [(log, lent), (sq, var)] {
            prop_assert!((a.total - b.total).abs() <= 1e-9);
            prop_assert!((a.aleatoric - b.aleatoric).abs() <= 1e-9);
            prop_assert!((a.epistemic - b.epistemic).abs() <= 1e-9);
        }
    }

    #[test]
    fn dirac_has_no_epistemic(atom in (2usize..8).prop_flat_map(prob_vector), copies in 1usize..5) {
        let q = EmpiricalSecondOrder::uniform(vec![atom; copies]).unwrap();
        for family in Family::ALL {
            prop_assert!(measure(&q, family).unwrap().global.epistemic <= 1e-12);
        }
    }

    #[test]
    fn distinct_atoms_have_epistemic(q in second_order()) {
        prop_assume!(!q.is_dirac());
        for family in [Family::Variance, Family::LabelEntropy] {
            let r = measure(&q, family).unwrap();
            prop_assert!(r.per_label.iter().any(|t| t.epistemic > 0.0), "{family}");
        }
    }

    #[test]
    fn barycenter_maximizes_total(q in second_order()) {
        let k = q.num_classes();
        let bary = EmpiricalSecondOrder::dirac(ProbVector::barycenter(k).unwrap());
        for family in Family::ALL {
            let top = measure(&bary, family).unwrap().global.total;
            prop_assert!((top - family.max_total(k)).abs() <= 1e-9);
            prop_assert!(measure(&q, family).unwrap().global.total <= top + 1e-12);
        }
    }

    #[test]
    fn spread_raises_epistemic(q in second_order(), magnitude in 0.05f64..0.4, seed in any::<u64>()) {
        let Ok(s) = mean_preserving_spread(&q, magnitude, seed) else { return Ok(()); };
        prop_assume!(s.total_noise_variance() >= 1e-6);
        let q2 = &s.distribution;
        for family in Family::ALL {
            let before = measure(&q, family).unwrap().global;
            let after = measure(q2, family).unwrap().global;
            prop_assert!(after.epistemic > before.epistemic, "{family}");
            prop_assert!((after.total - before.total).abs() <= 1e-9, "{family}");
        }
        let dv = variance_measures(q2).global.epistemic - variance_measures(&q).global.epistemic;
        prop_assert!((dv - s.total_noise_variance()).abs() <= 1e-9);
    }

    #[test]
    fn center_shift_raises_total(q in second_order(), lambda in 0.1f64..0.9) {
        let k = q.num_classes();
        let off = q.mean().as_slice().iter().map(|m| (m - 1.0 / k as f64).abs()).fold(0.0, f64::max);
        prop_assume!(off >= 1e-3);
        let Ok(q2) = center_shift(&q, lambda) else { return Ok(()); };
        for family in [Family::LabelEntropy, Family::Variance] {
            let before = measure(&q, family).unwrap().global;
            let after = measure(&q2, family).unwrap().global;
            prop_assert!(after.total > before.total, "{family}");
        }
        let before = variance_measures(&q).global;
        let after = variance_measures(&q2).global;
        prop_assert!(after.aleatoric > before.aleatoric);
    }

    #[test]
    fn location_shift_keeps_variance_epistemic(q in second_order(), raw in prop::collection::vec(-1.0f64..1.0, 6), frac in 0.0f64..1.0) {
        let k = q.num_classes();
        let avg: f64 = raw[..k].iter().sum::<f64>() / k as f64;
        let d: Vec<f64> = raw[..k].iter().map(|x| x - avg).collect();
        let mut room = f64::INFINITY;
        for a in q.atoms() {
            for c in 0..k {
                if d[c] > 0.0 { room = room.min((1.0 - a[c]) / d[c]); }
                if d[c] < 0.0 { room = room.min(a[c] / -d[c]); }
            }
        }
        prop_assume!(room.is_finite() && room > 0.0);
        let z: Vec<f64> = d.iter().map(|x| x * frac * room * 0.99).collect();
        prop_assume!(z.iter().any(|x| x.abs() > 1e-12));
        let Ok(q2) = location_shift(&q, &z) else { return Ok(()); };
        let a = variance_measures(&q).global.epistemic;
        let b = variance_measures(&q2).global.epistemic;
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn vertex_mixtures_have_no_aleatoric(raw in prop::collection::vec(0.0f64..1.0, 2..8)) {
        let s: f64 = raw.iter().sum();
        prop_assume!(s > 0.0);
        let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let q = dirac_mixture(&w).unwrap();
        for family in [Family::LabelEntropy, Family::Variance] {
            prop_assert!(measure(&q, family).unwrap().global.aleatoric <= 1e-12);
        }
    }

    #[test]
    fn partition_sums(q in second_order(), split in any::<prop::sample::Index>()) {
        let k = q.num_classes();
        let cut = 1 + split.index(k - 1);
        let left: Vec<usize> = (0..cut).collect();
        let right: Vec<usize> = (cut..k).collect();
        for family in [Family::LabelEntropy, Family::Variance] {
            let full = measure(&q, family).unwrap().global;
            let a = souq::measures::label_wise_sum(family, &q.restrict(&left).unwrap()).unwrap();
            let b = souq::measures::label_wise_sum(family, &q.restrict(&right).unwrap()).unwrap();
            prop_assert!((full.total - a.total - b.total).abs() <= 1e-12);
            prop_assert!((full.aleatoric - a.aleatoric - b.aleatoric).abs() <= 1e-12);
            prop_assert!((full.epistemic - a.epistemic - b.epistemic).abs() <= 1e-12);
        }
    }

    #[test]
    fn arc_depends_only_on_ranks(
        rows in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..60),
    ) {
        let items: Vec<ScoredInstance> = rows
            .iter()
            .enumerate()
            .map(|(i, &(s, ok))| ScoredInstance::new(format!("i{i:03}"), s, 0).with_truth(usize::from(!ok)))
            .collect();
        let transformed: Vec<ScoredInstance> = items
            .iter()
            .map(|it| ScoredInstance { score: (3.0 * it.score).exp() - 7.0, ..it.clone() })
            .collect();
        let grid = default_grid();
        let a = accuracy_rejection_curve(&items, &grid, "s").unwrap();
        let b = accuracy_rejection_curve(&transformed, &grid, "s").unwrap();
        prop_assert_eq!(&a.points, &b.points);
        let plain = rows.iter().filter(|r| r.1).count() as f64 / rows.len() as f64;
        prop_assert_eq!(a.points[0].1, plain);
    }

    #[test]
    fn auroc_rank_invariance_and_swap(
        scores in prop::collection::hash_set(0u32..100_000, 2..80),
        flags in prop::collection::vec(any::<bool>(), 80),
    ) {
        let scores: Vec<u32> = scores.into_iter().collect();
        let n = scores.len();
        prop_assume!(flags[..n].iter().any(|&f| f) && flags[..n].iter().any(|&f| !f));
        let build = |f: &dyn Fn(f64) -> f64, swap: bool| -> Vec<ScoredInstance> {
            scores
                .iter()
                .zip(&flags)
                .enumerate()
                .map(|(i, (&s, &ood))| {
                    let c = if ood ^ swap { Cohort::OutOfDistribution } else { Cohort::InDistribution };
                    ScoredInstance::new(i.to_string(), f(s as f64), 0).with_cohort(c)
                })
                .collect()
        };
        let base = auroc(&build(&|x| x, false)).unwrap();
        let mono = auroc(&build(&|x| (x / 100_000.0).tanh() * 5.0 + 1.0, false)).unwrap();
        let swapped = auroc(&build(&|x| x, true)).unwrap();
        prop_assert_eq!(base, mono);
        prop_assert!((swapped - (1.0 - base)).abs() <= 1e-15);
    }
}

#[test]
fn dirichlet_sampling_is_reproducible() {
    let d = DirichletSecondOrder::new(vec![0.3, 2.0, 5.0]).unwrap();
    let a = sample_dirichlet(&d, 500, 77);
    let b = sample_dirichlet(&d, 500, 77);
    assert_eq!(a, b);
    assert_ne!(a, sample_dirichlet(&d, 500, 78));
}
