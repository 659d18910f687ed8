use proptest::prelude::*;
use qkz::qkz_operators::{qkz_k, r_matrix, transfer_trace, yang_baxter_residual};
use qkz::sampling::{Sampler, DEFAULT_Z_BOX};
use qkz::special::ln_gamma;
use qkz::tensor_space::{global_sl2, weight_projector, SiteKind, TensorOperator};
use qkz::{Complex64, GaussianRational, ModelParams};

type Q = GaussianRational;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(a, b)| c(a, b))
}

fn params(seed: u64, n: usize, mu: Complex64) -> ModelParams {
    Sampler::new(seed).generic_params(n, 1, c(1.0, 0.0), mu, DEFAULT_Z_BOX).unwrap()
}

fn relative(diff: &TensorOperator, a: &TensorOperator, b: &TensorOperator) -> f64 {
    diff.norm() / (a.norm() * b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sl2_relations_hold_exactly(n in 1usize..=5) {
        let (plus, minus, three) = (global_sl2::<Q>(SiteKind::Plus, n), global_sl2::<Q>(SiteKind::Minus, n), global_sl2::<Q>(SiteKind::Three, n));
        let two = Q::from_ints(2, 0);
        prop_assert_eq!(plus.commutator(&minus), three.clone());
        prop_assert_eq!(three.commutator(&plus), plus.scale(&two));
        prop_assert_eq!(three.commutator(&minus), minus.scale(&-two));
    }

    #[test]
    fn weight_projector_is_idempotent(n in 1usize..=5, ell in 0usize..=5) {
        let p = weight_projector(n, ell.min(n));
        prop_assert_eq!(p.compose(&p), p);
    }

    #[test]
    fn yang_baxter_at_random_points(x in complex(3.0), y in complex(3.0), w in complex(3.0)) {
        let hbar = c(1.0, 0.0);
        let u = [x, y, w];
        prop_assume!((0..3).all(|i| (0..3).all(|j| i == j || (u[i] - u[j] + hbar).norm() > 1e-2)));
        prop_assert!(yang_baxter_residual(u, hbar).unwrap() < 1e-12);
    }

    #[test]
    fn r_matrix_is_unitary(x in complex(3.0)) {
        let hbar = c(1.0, 0.0);
        prop_assume!((x + hbar).norm() > 1e-2 && (x - hbar).norm() > 1e-2);
        let prod = r_matrix(x, hbar).unwrap().compose(&r_matrix(-x, hbar).unwrap());
        let id = TensorOperator::identity(2);
        prop_assert!(prod.sub(&id).norm() < 1e-12);
    }

    #[test]
    fn k_operators_preserve_weight(seed in any::<u64>(), n in 1usize..=4, im in 0.3f64..6.0) {
        let pr = params(seed, n, c(0.2, im));
        let three = global_sl2::<Complex64>(SiteKind::Three, n);
        for m in 1..=n {
            let k = qkz_k(m, &pr).unwrap();
            prop_assert!(relative(&k.commutator(&three), &k, &three) < 1e-13);
        }
    }

    #[test]
    fn transfer_traces_commute(seed in any::<u64>(), n in 1usize..=4, u in complex(2.0), v in complex(2.0)) {
        let pr = params(seed, n, c(0.3, 1.7));
        prop_assume!(pr.z().iter().all(|z| (z - u).norm() > 0.05 && (z - v).norm() > 0.05));
        prop_assume!(pr.z().iter().all(|z| (z - u + pr.hbar()).norm() > 0.05 && (z - v + pr.hbar()).norm() > 0.05));
        let (a, b) = (transfer_trace(u, &pr).unwrap(), transfer_trace(v, &pr).unwrap());
        prop_assert!(relative(&a.commutator(&b), &a, &b) < 1e-11);
    }

    #[test]
    fn ln_gamma_recurrence(re in -6.0f64..6.0, im in -6.0f64..6.0) {
        let x = c(re, im);
        prop_assume!((0..8).all(|k| (x + k as f64).norm() > 0.05));
        let ratio = (ln_gamma(x + 1.0) - ln_gamma(x)).exp();
        prop_assert!((ratio - x).norm() <= 1e-13 * x.norm().max(1.0));
    }
}
