//! Seeded random draws for parameter sets, test points and exact values.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qkz_operators::ModelParams;
use crate::scalar::GaussianRational;

/// Side of the square around 0 from which z is drawn.
pub const DEFAULT_Z_BOX: f64 = 0.4;

/// Relative distance |t − pole|/|p| below which a test point is redrawn.
pub const POINT_POLE_MARGIN: f64 = 1e-2;

const MAX_DRAWS: usize = 1000;

/// Deterministic source of random inputs.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn complex_in_box(&mut self, side: f64) -> Complex64 {
        let h = side / 2.0;
        Complex64::new(self.uniform(-h, h), self.uniform(-h, h))
    }

    pub fn z_box(&mut self, n: usize, side: f64) -> Vec<Complex64> {
        (0..n).map(|_| self.complex_in_box(side)).collect()
    }

    /// A parameter set whose z pass the genericity checks, drawn in a box of
    /// the given side.
    pub fn generic_params(&mut self, n: usize, ell: usize, hbar: Complex64, mu: Complex64, side: f64) -> Result<ModelParams> {
        let mut last = None;
        for _ in 0..MAX_DRAWS {
            match ModelParams::new(n, ell, hbar, mu, self.z_box(n, side)) {
                Ok(p) => return Ok(p),
                Err(e @ Error::InvalidParams { field: "z", .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::invalid("z", "no generic draw found")))
    }

    /// A point t = z̄ + p(x + iy) with x ∈ (−1, 1), |y| < 1/8, kept away from
    /// the lattices z_j + pℤ and z_j + ħ + pℤ.
    pub fn point(&mut self, params: &ModelParams) -> Result<Complex64> {
        let p = params.p();
        for _ in 0..MAX_DRAWS {
            let t = params.zbar() + p * Complex64::new(self.uniform(-1.0, 1.0), self.uniform(-0.125, 0.125));
            if min_lattice_distance(t, params) > POINT_POLE_MARGIN {
                return Ok(t);
            }
        }
        Err(Error::PoleProximity { what: "random test point", location: params.zbar() })
    }

    pub fn points(&mut self, params: &ModelParams, count: usize) -> Result<Vec<Complex64>> {
        (0..count).map(|_| self.point(params)).collect()
    }

    /// Points that are also pairwise separated from each other and from the
    /// shifts t_a ± ħ of one another, as needed by ℓ-variable kernels.
    pub fn separated_points(&mut self, params: &ModelParams, count: usize) -> Result<Vec<Complex64>> {
        let p = params.p();
        let h = params.hbar();
        for _ in 0..MAX_DRAWS {
            let t = self.points(params, count)?;
            let ok = (0..count).all(|a| {
                (0..count).filter(|&b| b != a).all(|b| {
                    let d = t[a] - t[b];
                    [d, d - h, d + h].iter().all(|x| (x / p).norm() > POINT_POLE_MARGIN)
                })
            });
            if ok {
                return Ok(t);
            }
        }
        Err(Error::PoleProximity { what: "random test points", location: params.zbar() })
    }

    /// (a + bi)/d with |a|, |b| ≤ max_num and 1 ≤ d ≤ max_den.
    pub fn gaussian_rational(&mut self, max_num: i64, max_den: i64) -> GaussianRational {
        let re = self.rng.random_range(-max_num..=max_num);
        let im = self.rng.random_range(-max_num..=max_num);
        let d1 = self.rng.random_range(1..=max_den);
        let d2 = self.rng.random_range(1..=max_den);
        GaussianRational::from_fractions(re, d1, im, d2)
    }

    pub fn gaussian_rationals(&mut self, count: usize, max_num: i64, max_den: i64) -> Vec<GaussianRational> {
        (0..count).map(|_| self.gaussian_rational(max_num, max_den)).collect()
    }
}

/// min over j, |k| ≤ 4 of |t − z_j − pk|/|p| and |t − z_j − ħ − pk|/|p|.
pub fn min_lattice_distance(t: Complex64, params: &ModelParams) -> f64 {
    let p = params.p();
    let mut best = f64::INFINITY;
    for z in params.z() {
        for k in -4..=4 {
            let base = z + p * k as f64;
            best = best.min(((t - base) / p).norm()).min(((t - base - params.hbar()) / p).norm());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = Sampler::new(7);
        let mut b = Sampler::new(7);
        assert_eq!(a.z_box(4, DEFAULT_Z_BOX), b.z_box(4, DEFAULT_Z_BOX));
        assert_eq!(a.gaussian_rational(9, 5), b.gaussian_rational(9, 5));
    }

    #[test]
    fn draws_respect_box_and_margin() {
        let mut s = Sampler::new(42);
        let params = s.generic_params(3, 1, Complex64::new(1.0, 0.0), Complex64::new(0.0, std::f64::consts::PI), DEFAULT_Z_BOX).unwrap();
        assert!(params.z().iter().all(|z| z.re.abs() <= 0.2 && z.im.abs() <= 0.2));
        for t in s.points(&params, 50).unwrap() {
            assert!(min_lattice_distance(t, &params) > POINT_POLE_MARGIN);
            assert!(((t - params.zbar()) / params.p()).im.abs() < 0.125);
        }
    }
}
