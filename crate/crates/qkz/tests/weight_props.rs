use proptest::prelude::*;
use qkz::sampling::{Sampler, DEFAULT_Z_BOX};
use qkz::tensor_space::subsets;
use qkz::weight_functions::{apply_x, apply_x_pointwise, eval_big_w, eval_w, weight_sum_relation, theta, xi1, xi2, SumRange, PeriodicFnCoeffs};
use qkz::{Complex64, ModelParams};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Draw {
    rng: Sampler,
    params: ModelParams,
}

impl Draw {
    fn new(seed: u64, n: usize, ell: usize) -> Self {
        let mut rng = Sampler::new(seed);
        let mu = c(rng.uniform(-0.5, 0.5), rng.uniform(0.5, 5.5));
        let params = rng.generic_params(n, ell, c(1.0, 0.0), mu, DEFAULT_Z_BOX).unwrap();
        Draw { rng, params }
    }

    fn points(&mut self, k: usize) -> Vec<Complex64> {
        self.rng.separated_points(&self.params, k).unwrap()
    }

    fn index(&mut self, len: usize) -> usize {
        ((self.rng.uniform(0.0, 1.0) * len as f64) as usize).min(len - 1)
    }
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

fn case() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2usize..=4).prop_flat_map(|(s, n)| (Just(s), Just(n), 1usize..=n.min(3)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn weight_functions_are_antisymmetric((seed, n, ell) in case()) {
        prop_assume!(ell >= 2);
        let mut d = Draw::new(seed, n, ell);
        let sets = subsets(n, ell);
        let m = sets[d.index(sets.len())].clone();
        let t = d.points(ell);
        let a = d.index(ell - 1);
        let mut swapped = t.clone();
        swapped.swap(a, a + 1);
        let w = eval_w(&m, &t, &d.params).unwrap();
        prop_assert!(close(eval_w(&m, &swapped, &d.params).unwrap(), -w, 1e-12));
        let big = eval_big_w(&m, &t, &d.params).unwrap();
        prop_assert!(close(eval_big_w(&m, &swapped, &d.params).unwrap(), -big, 1e-12));
    }

    #[test]
    fn periodic_functions_have_period_p((seed, n, ell) in case()) {
        let mut d = Draw::new(seed, n, ell);
        let p = d.params.p();
        let sets = subsets(n, ell);
        let m = sets[d.index(sets.len())].clone();
        let t = d.points(ell.max(2));
        let a = d.index(ell);
        let mut shifted = t[..ell].to_vec();
        shifted[a] += p;
        let pr = &d.params;
        prop_assert!(close(eval_big_w(&m, &shifted, pr).unwrap(), eval_big_w(&m, &t[..ell], pr).unwrap(), 1e-11));
        prop_assert!(close(theta(t[0] + p, pr).unwrap(), theta(t[0], pr).unwrap(), 1e-11));
        prop_assert!(close(xi1(t[0] + p, pr).unwrap(), xi1(t[0], pr).unwrap(), 1e-11));
        prop_assert!(close(xi2(t[0] + p, t[1], pr).unwrap(), xi2(t[0], t[1], pr).unwrap(), 1e-11));
        prop_assert!(close(xi2(t[0], t[1] + p, pr).unwrap(), xi2(t[0], t[1], pr).unwrap(), 1e-11));
    }

    #[test]
    fn x_maps_agree_with_their_pointwise_definition((seed, n, ell) in case(), a in 1usize..=2) {
        prop_assume!(ell >= a);
        let mut d = Draw::new(seed, n, ell);
        let coeffs: Vec<Complex64> = (0..subsets(n, ell - a).len()).map(|_| d.rng.complex_in_box(2.0)).collect();
        let f = PeriodicFnCoeffs::new(n, ell - a, coeffs).unwrap();
        let t = d.points(ell);
        let wedge = apply_x(a, &f).unwrap().eval(&t, &d.params).unwrap();
        let pointwise = apply_x_pointwise(a, &f, &t, &d.params).unwrap();
        prop_assert!(close(wedge, pointwise, 1e-10), "{wedge} vs {pointwise}");
    }

    #[test]
    fn weight_function_relations_hold((seed, n, ell) in case(), first in any::<bool>()) {
        let mut d = Draw::new(seed, n, ell);
        let sets = subsets(n, ell - 1);
        let n_set = sets[d.index(sets.len())].clone();
        let bounds: Vec<usize> = std::iter::once(0).chain(n_set.members().iter().copied()).chain([n]).collect();
        let pairs: Vec<(usize, usize)> = (1..=ell).flat_map(|b| (bounds[b - 1] + 1..=bounds[b]).map(move |m| (b, m))).collect();
        let (b, m) = pairs[d.index(pairs.len())];
        let relation = if first { SumRange::First } else { SumRange::Second };
        let t = d.points(ell);
        let r = weight_sum_relation(relation, &n_set, b, m, &t, &d.params).unwrap();
        prop_assert!(r.relative() < 1e-10, "{r:?}");
    }
}
