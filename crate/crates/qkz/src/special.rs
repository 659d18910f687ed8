//! Complex log-gamma and gamma-ratio evaluation.

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Bernoulli numbers B_0..B_22 with B_1 = −1/2.
const BERNOULLI: [f64; 23] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
    0.0,
    43867.0 / 798.0,
    0.0,
    -174611.0 / 330.0,
    0.0,
    854513.0 / 138.0,
];

/// Terms kept in the asymptotic ratio expansion.
const RATIO_TERMS: usize = 20;
/// Below this modulus the ratio is taken from two Lanczos evaluations.
const RATIO_ASYMPTOTIC_RADIUS: f64 = 25.0;

/// ln sin(πz), stable for large |Im z|. Defined modulo 2πi.
pub fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let ipz = i * PI * z;
    let ln2i = Complex64::new(2f64.ln(), PI / 2.0);
    if z.im >= 0.0 {
        // sin(πz) = −e^{−iπz}(1 − e^{2iπz})/(2i)
        -ipz + (Complex64::new(1.0, 0.0) - (2.0 * ipz).exp()).ln() - ln2i + i * PI
    } else {
        ipz + (Complex64::new(1.0, 0.0) - (-2.0 * ipz).exp()).ln() - ln2i
    }
}

/// Complex ln Γ(z) by the Lanczos approximation (g = 7, 9 terms) with
/// reflection for Re z < 1/2. Defined modulo 2πi.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// Distance from z to the nearest pole of Γ.
pub fn gamma_pole_distance(z: Complex64) -> f64 {
    let k = z.re.round().min(0.0);
    (z - k).norm()
}

fn bernoulli_poly(j: usize, x: f64) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for i in 0..=j {
        acc += binom * BERNOULLI[i] * x.powi((j - i) as i32);
        binom = binom * (j - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// ln Γ(x+a) − ln Γ(x+b) for real shifts a, b, defined modulo 2πi.
///
/// Uses the Bernoulli-polynomial expansion for large |x| away from the
/// negative axis, the reflection formula when |x| is large near it, and
/// Lanczos otherwise.
pub fn ln_gamma_ratio(x: Complex64, a: f64, b: f64) -> Complex64 {
    let r = x.norm();
    if r < RATIO_ASYMPTOTIC_RADIUS {
        return ln_gamma(x + a) - ln_gamma(x + b);
    }
    if x.arg().abs() > 0.75 * PI {
        // Γ(w) = π / (sin(πw) Γ(1−w)) applied to both factors.
        let y = -x;
        return ln_sin_pi(x + b) - ln_sin_pi(x + a) - ln_gamma_ratio(y, 1.0 - a, 1.0 - b);
    }
    let inv = 1.0 / x;
    let mut pow = inv;
    let mut acc = (a - b) * x.ln();
    for k in 1..=RATIO_TERMS {
        let c = bernoulli_poly(k + 1, a) - bernoulli_poly(k + 1, b);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * c / ((k * (k + 1)) as f64) * pow;
        pow *= inv;
    }
    acc
}

/// Principal-branch power with the argument taken in [0, 2π).
pub fn branch_pow(w: Complex64, e: f64) -> Complex64 {
    let mut arg = w.arg();
    if arg < 0.0 {
        arg += 2.0 * PI;
    }
    Complex64::from_polar(w.norm().powf(e), arg * e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn known_values() {
        assert!((gamma(c(0.5, 0.0)) - c(PI.sqrt(), 0.0)).norm() < 1e-14);
        assert!((gamma(c(5.0, 0.0)) - c(24.0, 0.0)).norm() < 1e-12);
        assert!((gamma(c(-0.5, 0.0)) - c(-2.0 * PI.sqrt(), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn reflection_identity() {
        for &(re, im) in &[(0.3, 0.7), (-2.4, 1.3), (3.7, -4.1), (0.01, -0.2), (-7.7, -0.9)] {
            let z = c(re, im);
            let lhs = gamma(z) * gamma(1.0 - z);
            let rhs = PI / (PI * z).sin();
            assert!((lhs - rhs).norm() <= 1e-13 * rhs.norm(), "{z}");
        }
    }

    #[test]
    fn ratio_matches_direct_and_asymptotic_overlap() {
        for &(re, im) in &[(30.0, 5.0), (-0.3, 40.0), (-0.3, -60.0), (-27.0, 3.0), (18.0, -20.0), (-45.0, -45.1)] {
            let x = c(re, im);
            let direct = ln_gamma(x - 0.5) - ln_gamma(x);
            let ratio = ln_gamma_ratio(x, -0.5, 0.0);
            let diff = (direct - ratio).exp();
            assert!((diff - 1.0).norm() < 1e-12, "{x}: {diff}");
        }
    }

    #[test]
    fn huge_arguments_stay_finite() {
        let v = ln_gamma_ratio(c(-0.3, 1e9), -0.5, 0.0);
        assert!(v.re.is_finite());
        let expect = -0.5 * c(-0.3, 1e9).ln();
        assert!((v - expect).norm() < 1e-8);
        let w = ln_sin_pi(c(0.2, -500.0));
        assert!(w.re.is_finite() && (w.re - 500.0 * PI + 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn branch_convention() {
        let r = branch_pow(c(-2.0, 0.0), 0.5);
        assert!((r - c(0.0, 2f64.sqrt())).norm() < 1e-15);
        let r = branch_pow(c(0.0, -1.0), 0.5);
        assert!((r - Complex64::from_polar(1.0, 0.75 * PI)).norm() < 1e-15);
    }
}
