use proptest::prelude::*;
use qkz::grassmann::{jw_rep, GrassmannElement};
use qkz::tensor_space::binomial;
use qkz::GaussianRational;

/// A homogeneous element of degree `deg` in n generators with small
/// Gaussian-integer coefficients.
fn homogeneous(n: usize, deg: usize) -> impl Strategy<Value = GrassmannElement> {
    prop::collection::vec((-3i64..=3, -3i64..=3), binomial(n, deg)).prop_map(move |cs| {
        let coords: Vec<GaussianRational> = cs.into_iter().map(|(re, im)| GaussianRational::from_ints(re, im)).collect();
        GrassmannElement::from_coords(n, deg, &coords)
    })
}

fn pair() -> impl Strategy<Value = (usize, usize, GrassmannElement, usize, GrassmannElement)> {
    (1usize..=5)
        .prop_flat_map(|n| (Just(n), 0..=n, 0..=n))
        .prop_flat_map(|(n, p, q)| (Just(n), Just(p), homogeneous(n, p), Just(q), homogeneous(n, q)))
}

fn sign(k: usize) -> GaussianRational {
    GaussianRational::from_ints(if k.is_multiple_of(2) { 1 } else { -1 }, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_is_graded_commutative((_n, p, a, q, b) in pair()) {
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap().scale(&sign(p * q));
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn wedge_is_associative((n, _p, a, _q, b) in pair(), k in 0usize..=2) {
        let c = GrassmannElement::generator(1 + k % n, n).unwrap();
        let left = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let right = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn derivations_anticommute((n, _p, a, _q, _b) in pair(), i in 1usize..=5, j in 1usize..=5) {
        let (i, j) = (1 + (i - 1) % n, 1 + (j - 1) % n);
        let ij = a.derivation(j).unwrap().derivation(i).unwrap();
        let ji = a.derivation(i).unwrap().derivation(j).unwrap();
        prop_assert!(ij.add(&ji).unwrap().is_zero());
    }

    #[test]
    fn derivation_obeys_the_graded_leibniz_rule((n, p, a, _q, b) in pair(), k in 1usize..=5) {
        let k = 1 + (k - 1) % n;
        let lhs = a.wedge(&b).unwrap().derivation(k).unwrap();
        let rhs = a
            .derivation(k)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(&a.wedge(&b.derivation(k).unwrap()).unwrap().scale(&sign(p)))
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn contraction_is_a_graded_derivation((n, p, a, _q, b) in pair(), ks in prop::collection::vec(-4i64..=4, 5)) {
        let kappa: Vec<GaussianRational> = ks[..n].iter().map(|&k| GaussianRational::from_ints(k, 0)).collect();
        let lhs = a.wedge(&b).unwrap().contract(&kappa).unwrap();
        let rhs = a
            .contract(&kappa)
            .unwrap()
            .wedge(&b)
            .unwrap()
            .add(&a.wedge(&b.contract(&kappa).unwrap()).unwrap().scale(&sign(p)))
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn jordan_wigner_is_multiplicative((_n, _p, a, _q, b) in pair()) {
        let lhs = jw_rep(&a.wedge(&b).unwrap()).unwrap();
        let rhs = jw_rep(&a).unwrap().compose(&jw_rep(&b).unwrap());
        prop_assert_eq!(lhs, rhs);
    }
}
