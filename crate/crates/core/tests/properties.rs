use cec_core::dist::{self, is_permutation_equivalent, tensor_power, trace_distance};
use cec_core::entropy::{self, shannon, smooth_max_entropy, smooth_min_entropy};
use cec_core::geometry::{distance_to_polytope, Norm, Polytope};
use cec_core::majorization::{build_witness, majorizes, schur_concavity_check};
use cec_core::rational::{int, rat};
use cec_core::sn::{average_marginal, symmetrize, top_k_by_threshold};
use cec_core::{Dist, JointDist, Limits, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn normalize(raw: &[u32]) -> Vec<Rational> {
    let total: u32 = raw.iter().sum();
    raw.iter().map(|&x| rat(x as i64, total as i64)).collect()
}

fn weights(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec(0u32..12, len)
        .prop_filter("needs mass", |v| v.iter().any(|&x| x > 0))
        .prop_map(|v| normalize(&v))
}

fn dist(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Dist> {
    weights(len).prop_map(|w| Dist::new(w).unwrap())
}

fn joint(d: usize, m: usize) -> impl Strategy<Value = JointDist> {
    prop::collection::vec(0u32..9, d.pow(m as u32))
        .prop_filter("needs mass", |v| v.iter().any(|&x| x > 0))
        .prop_map(move |v| JointDist::new(vec![d; m], normalize(&v)).unwrap())
}

/// Mixes coordinates `i` and `j` with weight `t`.
fn t_transform(x: &mut [Rational], i: usize, j: usize, t: &Rational) {
    let s = Rational::one() - t;
    let (a, b) = (x[i].clone(), x[j].clone());
    x[i] = t * &a + &s * &b;
    x[j] = &s * &a + t * &b;
}

/// `p` together with a doubly-stochastic image of it.
fn majorized_pair() -> impl Strategy<Value = (Vec<Rational>, Vec<Rational>)> {
    weights(2..=6).prop_flat_map(|p| {
        let n = p.len();
        let steps = prop::collection::vec((0..n, 0..n, 0i64..=8), 0..5);
        (Just(p), steps).prop_map(|(p, steps)| {
            let mut q = p.clone();
            for (i, j, t) in steps {
                if i != j {
                    t_transform(&mut q, i, j, &rat(t, 8));
                }
            }
            (p, q)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn trace_distance_is_a_metric(p in weights(3..=3), q in weights(3..=3), r in weights(3..=3)) {
        let d = |a: &[Rational], b: &[Rational]| trace_distance(a, b).unwrap();
        prop_assert_eq!(d(&p, &p), Rational::zero());
        prop_assert_eq!(d(&p, &q), d(&q, &p));
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r));
        prop_assert!(d(&p, &q) <= Rational::one());
        prop_assert_eq!(d(&p, &q).is_zero(), p == q);
    }

    #[test]
    fn tensor_power_marginals_are_the_factor(p in dist(2..=3), n in 1usize..=3) {
        let power = tensor_power(&p, n).unwrap();
        for k in 0..n {
            prop_assert_eq!(power.marginal_dist(k).unwrap(), p.clone());
        }
    }

    #[test]
    fn permuting_subsystems_relabels_marginals(
        state in joint(2, 3),
        perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let moved = state.permute_subsystems(&perm).unwrap();
        for (j, &src) in perm.iter().enumerate() {
            prop_assert_eq!(moved.marginal_dist(j).unwrap(), state.marginal_dist(src).unwrap());
        }
        prop_assert!(is_permutation_equivalent(moved.weights(), state.weights()));
    }

    #[test]
    fn majorization_is_a_preorder((p, q) in majorized_pair(), steps in prop::collection::vec((0usize..6, 0usize..6, 0i64..=8), 0..4)) {
        prop_assert!(majorizes(&p, &p));
        prop_assert!(majorizes(&p, &q));
        let mut r = q.clone();
        for (i, j, t) in steps {
            let (i, j) = (i % r.len(), j % r.len());
            if i != j {
                t_transform(&mut r, i, j, &rat(t, 8));
            }
        }
        prop_assert!(majorizes(&q, &r));
        prop_assert!(majorizes(&p, &r));
        if majorizes(&q, &p) {
            prop_assert!(is_permutation_equivalent(&p, &q));
        }
        let n = p.len();
        let uniform = vec![rat(1, n as i64); n];
        let mut point = vec![Rational::zero(); n];
        point[0] = Rational::one();
        prop_assert!(majorizes(&point, &p) && majorizes(&p, &uniform));
    }

    #[test]
    fn witnesses_replay_exactly((p, q) in majorized_pair()) {
        let w = build_witness(&p, &q).unwrap();
        prop_assert!(w.verify());
        prop_assert_eq!(w.replay().unwrap(), q);
        prop_assert!(w.steps.len() < p.len());
    }

    #[test]
    fn entropy_is_schur_concave((p, q) in majorized_pair()) {
        if !is_permutation_equivalent(&p, &q) {
            prop_assert!(schur_concavity_check(&p, &q).unwrap());
        }
        prop_assert!(dist::rank(&p) <= dist::rank(&q));
    }

    #[test]
    fn smooth_entropies_are_monotone_in_eps(p in weights(2..=6), a in 0i64..20, b in 0i64..20) {
        let (lo, hi) = (rat(a.min(b), 20), rat(a.max(b), 20));
        prop_assert!(smooth_max_entropy(&p, &hi).unwrap() <= smooth_max_entropy(&p, &lo).unwrap());
        prop_assert!(smooth_min_entropy(&p, &hi).unwrap() >= smooth_min_entropy(&p, &lo).unwrap());
        let zero = Rational::zero();
        let h = shannon(&p);
        prop_assert!(smooth_min_entropy(&p, &zero).unwrap() <= h + 1e-12);
        prop_assert!(h <= smooth_max_entropy(&p, &zero).unwrap() + 1e-12);
        prop_assert!((smooth_max_entropy(&p, &zero).unwrap() - entropy::rank_entropy(&p).1).abs() < 1e-12);
    }

    #[test]
    fn shannon_entropy_is_additive(p in dist(1..=4), q in dist(1..=4)) {
        let pq = JointDist::from(p.clone()).tensor(&JointDist::from(q.clone()), &Limits::default()).unwrap();
        let sum = shannon(p.weights()) + shannon(q.weights());
        prop_assert!((shannon(pq.weights()) - sum).abs() < 1e-9);
    }

    #[test]
    fn top_k_threshold_form_is_exact(q in weights(1..=7), k in 0usize..8) {
        let k = k.min(q.len());
        let direct: Rational = dist::sorted_desc(&q).into_iter().take(k).sum();
        prop_assert_eq!(top_k_by_threshold(&q, k), direct);
    }

    #[test]
    fn l1_and_euclidean_distances_are_equivalent(
        x in prop::collection::vec(-8i64..=16, 2..=4),
        cut in prop::collection::vec(-3i64..=3, 4),
    ) {
        let m = x.len();
        let x: Vec<Rational> = x.into_iter().map(|v| rat(v, 8)).collect();
        let simplex = Polytope::simplex(m);
        let mut rows = simplex.rows().to_vec();
        let mut rhs = simplex.rhs().to_vec();
        rows.push(cut[..m].iter().map(|&c| int(c)).collect());
        rhs.push(Rational::one());
        let c = Polytope::new(m, rows, rhs).unwrap();
        if c.feasible_point().unwrap().is_some() {
            let l1 = distance_to_polytope(&x, &c, Norm::L1).unwrap().value;
            let l2 = distance_to_polytope(&x, &c, Norm::Euclidean).unwrap().value;
            prop_assert!(l2 <= l1 + 1e-7, "l2 {} > l1 {}", l2, l1);
            prop_assert!(l1 <= (m as f64).sqrt() * l2 + 1e-7, "l1 {} vs l2 {}", l1, l2);
        }
    }

    #[test]
    fn symmetrization_invariants(sigma in joint(2, 3)) {
        let sym = symmetrize(&sigma).unwrap();
        let target = average_marginal(&sigma).unwrap();
        for k in 0..3 {
            prop_assert_eq!(sym.marginal_dist(k).unwrap(), target.clone());
        }
        prop_assert!(majorizes(sigma.weights(), sym.weights()));
        prop_assert_eq!(symmetrize(&sym).unwrap(), sym.clone());
        prop_assert_eq!(average_marginal(&sym).unwrap(), target);
    }
}
