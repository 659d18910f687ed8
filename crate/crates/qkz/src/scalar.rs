//! Scalar fields used by the dense linear algebra.
//!
//! Numerical work runs over [`Complex64`]; the exterior-algebra and
//! determinant identities run over [`GaussianRational`], where equality is
//! decidable.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A commutative field with a conjugation and a magnitude used for pivoting.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic in this field is exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn imag_unit() -> Self;
    fn conj(&self) -> Self;
    /// Approximate modulus, only used to choose pivots.
    fn magnitude(&self) -> f64;
    fn to_complex(&self) -> Complex64;

    fn powi(&self, k: i32) -> Self {
        let mut base = if k < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    /// (−i)^k, reduced mod 4.
    fn minus_i_pow(k: usize) -> Self {
        let i = Self::imag_unit();
        match k % 4 {
            0 => Self::one(),
            1 => -i,
            2 => -Self::one(),
            _ => i,
        }
    }
}

impl Field for Complex64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn imag_unit() -> Self {
        Complex64::i()
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn to_complex(&self) -> Complex64 {
        *self
    }
}

/// Exact complex rational `re + i·im`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Self { re: BigRational::from_integer(BigInt::from(re)), im: BigRational::from_integer(BigInt::from(im)) }
    }

    /// `(re_num/re_den) + i·(im_num/im_den)`.
    pub fn from_fractions(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Self {
        Self {
            re: BigRational::new(BigInt::from(re_num), BigInt::from(re_den)),
            im: BigRational::new(BigInt::from(im_num), BigInt::from(im_den)),
        }
    }

    pub fn real(re: BigRational) -> Self {
        Self { re, im: BigRational::zero() }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", self.re),
            (true, false) => write!(f, "{}i", self.im),
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "{}{}{}i", self.re, sign, self.im.abs())
            }
        }
    }
}

impl Add for GaussianRational {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for GaussianRational {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for GaussianRational {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let re = &self.re * &o.re - &self.im * &o.im;
        let im = &self.re * &o.im + &self.im * &o.re;
        Self { re, im }
    }
}

impl Div for GaussianRational {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr();
        assert!(!d.is_zero(), "division by zero Gaussian rational");
        let num = self * o.conj();
        Self { re: num.re / &d, im: num.im / d }
    }
}

impl Neg for GaussianRational {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}

impl Zero for GaussianRational {
    fn zero() -> Self {
        Self { re: BigRational::zero(), im: BigRational::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for GaussianRational {
    fn one() -> Self {
        Self { re: BigRational::one(), im: BigRational::zero() }
    }
}

impl Field for GaussianRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Self::from_ints(v, 0)
    }
    fn imag_unit() -> Self {
        Self::from_ints(0, 1)
    }
    fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }
    fn magnitude(&self) -> f64 {
        let c = self.to_complex();
        let m = c.norm();
        // Nonzero values must never look like zero to the pivot search.
        if m == 0.0 && !self.is_zero() {
            f64::MIN_POSITIVE
        } else {
            m
        }
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_arithmetic_is_exact() {
        let a = GaussianRational::from_fractions(1, 3, -2, 5);
        let b = GaussianRational::from_fractions(7, 2, 1, 9);
        let q = a.clone() / b.clone();
        assert_eq!(q * b, a);
    }

    #[test]
    fn i_squared() {
        let i = GaussianRational::imag_unit();
        assert_eq!(i.clone() * i, -GaussianRational::one());
    }

    #[test]
    fn minus_i_powers_cycle() {
        let m = -GaussianRational::imag_unit();
        let mut acc = GaussianRational::one();
        for k in 0..9 {
            assert_eq!(GaussianRational::minus_i_pow(k), acc);
            acc = acc * m.clone();
        }
    }

    #[test]
    fn negative_powers() {
        let a = GaussianRational::from_ints(2, 1);
        assert_eq!(a.powi(-2) * a.powi(2), GaussianRational::one());
        let c = Complex64::new(0.3, -1.1);
        assert!((c.powi(-3) * c.powi(3) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
