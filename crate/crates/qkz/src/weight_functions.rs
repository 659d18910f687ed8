//! Weight functions g_M, w_M, the periodic functions G_M, W_M, Θ, Ξ⁽¹⁾,
//! Ξ⁽²⁾, the phase function φ, the difference operator D, and evaluators
//! for the rational identities they satisfy.
//!
//! Asym f(t₁..t_ℓ) = Σ_σ sgn(σ) f(t_σ(1)..t_σ(ℓ)), without normalization.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::grassmann::{phi1, phi2, GrassmannElement};
use crate::linalg::Matrix;
use crate::qkz_operators::ModelParams;
use crate::scalar::{Field, GaussianRational};
use crate::special::{gamma_pole_distance, ln_gamma_ratio};
use crate::tensor_space::{binomial, subsets, SubsetIndex};
use crate::{CMatrix, QMatrix};

/// Relative pole tolerance: evaluations closer than this times the local
/// scale max(|p|, max|t − z|) are refused.
pub const POLE_TOL: f64 = 1e-10;
/// Multiplier on the asymptotic modulus of φ in [`phase_envelope`].
pub const ENVELOPE_SAFETY: f64 = 1.5;
/// |t| beyond this multiple of |p| triggers the precision warning.
pub const PRECISION_WARNING_RADIUS: f64 = 1e6;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn local_scale(t: &[Complex64], params: &ModelParams) -> f64 {
    let mut s = params.p().norm();
    for ta in t {
        for z in params.z() {
            s = s.max((ta - z).norm());
        }
    }
    s
}

fn guard(distance: f64, scale: f64, what: &'static str, location: Complex64) -> Result<()> {
    if distance < POLE_TOL * scale {
        Err(Error::PoleProximity { what, location })
    } else {
        Ok(())
    }
}

/// Distance from x to pℤ.
fn lattice_distance(x: Complex64, p: Complex64) -> f64 {
    let r = x / p;
    (r - r.re.round()).norm() * p.norm()
}

fn check_arity(m: &SubsetIndex, t: &[Complex64]) -> Result<()> {
    if m.len() != t.len() {
        return Err(Error::ArityMismatch { expected: m.len(), found: t.len() });
    }
    Ok(())
}

/// All permutations of 0..ℓ with their signs.
pub fn signed_permutations(ell: usize) -> Vec<(f64, Vec<usize>)> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, sign: f64, out: &mut Vec<(f64, Vec<usize>)>) {
        if left.is_empty() {
            out.push((sign, prefix.clone()));
            return;
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            prefix.push(x);
            // Picking the i-th remaining element costs i transpositions.
            rec(prefix, left, if i % 2 == 0 { sign } else { -sign }, out);
            prefix.pop();
            left.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..ell).collect(), 1.0, &mut out);
    out
}

/// Asym of an ℓ-variate function.
pub fn asym<F>(f: F, t: &[Complex64]) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Result<Complex64>,
{
    Ok(asym_with_magnitude(f, t)?.0)
}

/// Antisymmetrization together with Σ_σ |f(σt)|.
pub fn asym_with_magnitude<F>(f: F, t: &[Complex64]) -> Result<(Complex64, f64)>
where
    F: Fn(&[Complex64]) -> Result<Complex64>,
{
    let mut acc = Complex64::zero();
    let mut mag = 0.0;
    let mut buf = vec![Complex64::zero(); t.len()];
    for (sign, perm) in signed_permutations(t.len()) {
        for (slot, &i) in buf.iter_mut().zip(&perm) {
            *slot = t[i];
        }
        let v = f(&buf)?;
        mag += v.norm();
        acc += sign * v;
    }
    Ok((acc, mag))
}

/// Π_{k ∈ ks} (t − z_k − ħ)/(t − z_k).
pub fn prefix_ratio(t: Complex64, ks: impl IntoIterator<Item = usize>, params: &ModelParams) -> Result<Complex64> {
    let scale = local_scale(&[t], params);
    let mut v = one();
    for k in ks {
        let d = t - params.z()[k - 1];
        guard(d.norm(), scale, "t − z", t)?;
        v *= (d - params.hbar()) / d;
    }
    Ok(v)
}

/// Single-variable factor (t − z_m)⁻¹ Π_{j<m} (t − z_j − ħ)/(t − z_j).
pub fn g_factor(t: Complex64, m: usize, params: &ModelParams) -> Result<Complex64> {
    let d = t - params.z()[m - 1];
    guard(d.norm(), local_scale(&[t], params), "t − z", t)?;
    Ok(prefix_ratio(t, 1..m, params)? / d)
}

/// g_M(t) = Π_a g-factor(t_a, m_a) · Π_{a<b} (t_a − t_b − ħ).
pub fn eval_g(m: &SubsetIndex, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    check_arity(m, t)?;
    let mut v = one();
    for (ta, &ma) in t.iter().zip(m.members()) {
        v *= g_factor(*ta, ma, params)?;
    }
    for a in 0..t.len() {
        for b in a + 1..t.len() {
            v *= t[a] - t[b] - params.hbar();
        }
    }
    Ok(v)
}

pub fn eval_w(m: &SubsetIndex, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    check_arity(m, t)?;
    asym(|tt| eval_g(m, tt, params), t)
}

/// (E, E⁻¹) for E = Exp(x), with exactly one of them computed by exp and
/// the other guaranteed not to have overflowed.
fn exp_pair(x: Complex64, p: Complex64) -> (Option<Complex64>, Option<Complex64>) {
    let w = 2.0 * PI * Complex64::i() * x / p;
    if w.re > 0.0 {
        (None, Some((-w).exp()))
    } else {
        (Some(w.exp()), None)
    }
}

/// ln(1/(E − 1)) with E = Exp(x), modulo 2πi.
fn ln_inv_exp_minus_one(x: Complex64, p: Complex64) -> Complex64 {
    let w = 2.0 * PI * Complex64::i() * x / p;
    match exp_pair(x, p) {
        (Some(e), _) => -(e - 1.0).ln(),
        (None, Some(ei)) => -w - (one() - ei).ln(),
        _ => unreachable!(),
    }
}

/// (E + 1)/(E − 1) with E = Exp(x).
fn coth_ratio(x: Complex64, p: Complex64) -> Complex64 {
    match exp_pair(x, p) {
        (Some(e), _) => (e + 1.0) / (e - 1.0),
        (None, Some(ei)) => (one() + ei) / (one() - ei),
        _ => unreachable!(),
    }
}

/// Complex logarithm of the single-variable factor of G_M.
pub fn ln_big_g_factor(t: Complex64, m: usize, params: &ModelParams) -> Result<Complex64> {
    let p = params.p();
    let scale = local_scale(&[t], params);
    let mut acc = Complex64::zero();
    for j in 1..=m {
        let x = t - params.z()[j - 1];
        guard(lattice_distance(x, p), scale, "Exp(t − z) − 1", t)?;
        if j < m {
            acc += coth_ratio(x, p).ln();
        }
    }
    Ok(acc + ln_inv_exp_minus_one(t - params.z()[m - 1], p))
}

/// (Exp(t − z_m) − 1)⁻¹ Π_{j<m} (Exp(t − z_j) + 1)/(Exp(t − z_j) − 1).
pub fn big_g_factor(t: Complex64, m: usize, params: &ModelParams) -> Result<Complex64> {
    let p = params.p();
    let scale = local_scale(&[t], params);
    let mut v = one();
    for j in 1..=m {
        let x = t - params.z()[j - 1];
        guard(lattice_distance(x, p), scale, "Exp(t − z) − 1", t)?;
        v *= if j < m {
            coth_ratio(x, p)
        } else {
            match exp_pair(x, p) {
                (Some(e), _) => one() / (e - 1.0),
                (None, Some(ei)) => ei / (one() - ei),
                _ => unreachable!(),
            }
        };
    }
    Ok(v)
}

pub fn eval_big_g(m: &SubsetIndex, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    check_arity(m, t)?;
    let mut v = one();
    for (ta, &ma) in t.iter().zip(m.members()) {
        v *= big_g_factor(*ta, ma, params)?;
    }
    Ok(v)
}

pub fn eval_big_w(m: &SubsetIndex, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    check_arity(m, t)?;
    asym(|tt| eval_big_g(m, tt, params), t)
}

/// W_M(t) · exp(log_weight), each Asym term formed in log space so that
/// neither factor overflows on its own.
pub fn eval_big_w_weighted(m: &SubsetIndex, t: &[Complex64], log_weight: Complex64, params: &ModelParams) -> Result<Complex64> {
    check_arity(m, t)?;
    let mut acc = Complex64::zero();
    for (sign, perm) in signed_permutations(t.len()) {
        let mut l = log_weight;
        for (a, &i) in perm.iter().enumerate() {
            l += ln_big_g_factor(t[i], m.members()[a], params)?;
        }
        acc += sign * l.exp();
    }
    Ok(acc)
}

/// Θ(t) = Π_m (Exp(t − z_m) + 1)/(Exp(t − z_m) − 1).
pub fn theta(t: Complex64, params: &ModelParams) -> Result<Complex64> {
    let p = params.p();
    let scale = local_scale(&[t], params);
    let mut v = one();
    for z in params.z() {
        guard(lattice_distance(t - z, p), scale, "Exp(t − z) − 1", t)?;
        v *= coth_ratio(t - z, p);
    }
    Ok(v)
}

pub fn xi1(t: Complex64, params: &ModelParams) -> Result<Complex64> {
    Ok(theta(t, params)? - 1.0)
}

/// E(t₁, t₂) = (Exp(t₁ − t₂) − 1)/(Exp(t₁ − t₂) + 1).
pub fn appendix_e(t1: Complex64, t2: Complex64, params: &ModelParams) -> Result<Complex64> {
    let p = params.p();
    let d = t1 - t2;
    // Exp(d) = −1 exactly when d ∈ p/2 + pℤ.
    guard(lattice_distance(d - 0.5 * p, p), local_scale(&[t1, t2], params), "Exp(t₁ − t₂) + 1", t1)?;
    Ok(one() / coth_ratio(d, p))
}

/// F(t₁, t₂) = Θ(t₁) Θ(t₂) E(t₁, t₂).
pub fn appendix_f(t1: Complex64, t2: Complex64, params: &ModelParams) -> Result<Complex64> {
    Ok(theta(t1, params)? * theta(t2, params)? * appendix_e(t1, t2, params)?)
}

/// Ξ⁽²⁾(t₁, t₂) = (Θ(t₁)Θ(t₂) − 1) E(t₁, t₂) + Θ(t₁) − Θ(t₂).
pub fn xi2(t1: Complex64, t2: Complex64, params: &ModelParams) -> Result<Complex64> {
    let (a, b) = (theta(t1, params)?, theta(t2, params)?);
    Ok((a * b - 1.0) * appendix_e(t1, t2, params)? + a - b)
}

/// (Θ(t₁), Ξ⁽¹⁾(t₁), Ξ⁽²⁾(t₁, t₂) if a second point is given).
pub fn eval_theta_xi(t: &[Complex64], params: &ModelParams) -> Result<(Complex64, Complex64, Option<Complex64>)> {
    let th = theta(t[0], params)?;
    let x2 = match t.get(1) {
        Some(&t2) => Some(xi2(t[0], t2, params)?),
        None => None,
    };
    Ok((th, th - 1.0, x2))
}

/// ln φ(t) = μt/p + Σ_m [ln Γ((t−z_m−ħ)/p) − ln Γ((t−z_m)/p)], modulo 2πi.
pub fn log_phase(t: Complex64, params: &ModelParams) -> Result<Complex64> {
    let p = params.p();
    let scale = local_scale(&[t], params);
    let mut acc = params.mu() * t / p;
    for z in params.z() {
        let x = (t - z) / p;
        guard(gamma_pole_distance(x - 0.5) * p.norm(), scale, "Γ((t − z − ħ)/p)", t)?;
        acc += ln_gamma_ratio(x, -0.5, 0.0);
    }
    Ok(acc)
}

pub fn eval_phase(t: Complex64, params: &ModelParams) -> Result<Complex64> {
    Ok(log_phase(t, params)?.exp())
}

/// True when |t| is large enough that φ(t) loses relative precision.
pub fn phase_precision_warning(t: Complex64, params: &ModelParams) -> bool {
    t.norm() > PRECISION_WARNING_RADIUS * params.p().norm()
}

/// |(t/p)^{−n/2} exp(μt/p)| times a safety factor; the large-|t| modulus
/// of φ away from the real axis of t/p.
pub fn phase_envelope(t: Complex64, params: &ModelParams) -> f64 {
    ln_phase_envelope(t, params).exp()
}

/// Logarithm of [`phase_envelope`], usable where the envelope underflows.
pub fn ln_phase_envelope(t: Complex64, params: &ModelParams) -> f64 {
    let s = t / params.p();
    let n = params.n() as f64;
    ENVELOPE_SAFETY.ln() - 0.5 * n * s.norm().ln() + (params.mu() * s).re
}

/// (D_a f)(t) = f(t) − e^μ f(…, t_a + p, …) Π_j (t_a − z_j − ħ)/(t_a − z_j).
pub fn apply_d<'a, F>(f: F, a: usize, params: &'a ModelParams) -> impl Fn(&[Complex64]) -> Result<Complex64> + 'a
where
    F: Fn(&[Complex64]) -> Result<Complex64> + 'a,
{
    move |t: &[Complex64]| {
        let mut shifted = t.to_vec();
        shifted[a] += params.p();
        let ratio = prefix_ratio(t[a], 1..=params.n(), params)?;
        Ok(f(t)? - params.mu().exp() * f(&shifted)? * ratio)
    }
}

/// The total difference r_M in its expanded form:
/// ħ⁻¹(e^μ−1)Σ_a z_{m_a} w_M + e^μ ℓ w_M + Σ_{k∉M, m∈M, k<m} w_{M∪k∖m}
/// + e^μ Σ_{k∉M, m∈M, k>m} w_{M∪k∖m} − ħ⁻¹(e^μ−1)Σ_a t_a w_M.
pub fn r_m_closed(m: &SubsetIndex, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    check_arity(m, t)?;
    let e = params.mu().exp();
    let c = (e - 1.0) / params.hbar();
    let n = params.n();
    let w = eval_w(m, t, params)?;
    let zsum: Complex64 = m.members().iter().map(|&k| params.z()[k - 1]).sum();
    let tsum: Complex64 = t.iter().sum();
    let mut acc = c * zsum * w + e * m.len() as f64 * w - c * tsum * w;
    for &mm in m.members() {
        for k in (1..=n).filter(|k| !m.contains(*k)) {
            let swapped = m.without(mm).insert_front(k).expect("k ∉ M").1;
            let term = eval_w(&swapped, t, params)?;
            acc += if k < mm { term } else { e * term };
        }
    }
    Ok(acc)
}

/// r_M as Σ_a ħ⁻¹ Asym(D₁ f_a) with
/// f_a = g_{M∖m_a}(t₂..t_ℓ) Π_{a'≥2} (t₁ − t_{a'} − ħ).
pub fn r_m_from_differences(m: &SubsetIndex, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    check_arity(m, t)?;
    let hbar = params.hbar();
    let mut acc = Complex64::zero();
    for &ma in m.members() {
        let rest = m.without(ma);
        let f = |tt: &[Complex64]| -> Result<Complex64> {
            let mut v = eval_g(&rest, &tt[1..], params)?;
            for ta in &tt[1..] {
                v *= tt[0] - ta - hbar;
            }
            Ok(v)
        };
        let d = apply_d(f, 0, params);
        acc += asym(&d, t)? / hbar;
    }
    Ok(acc)
}

/// Both sides of a named identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResidual {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// Sum of the magnitudes of the terms on both sides; rounding error
    /// scales with this rather than with |lhs| when the terms cancel.
    pub magnitude: f64,
}

impl IdentityResidual {
    pub fn residual(&self) -> Complex64 {
        self.lhs - self.rhs
    }

    pub fn relative(&self) -> f64 {
        let scale = self.lhs.norm().max(self.rhs.norm()).max(self.magnitude);
        if scale == 0.0 {
            0.0
        } else {
            self.residual().norm() / scale
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumRange {
    /// ħ Σ_{k∉N, k<m} w_{N∪k} = Asym(…).
    First,
    /// ħ Σ_{k∉N, k≥m} w_{N∪k} = Asym(…).
    Second,
}

fn validate_weight_sum(n_set: &SubsetIndex, b: usize, m: usize, ell: usize, n: usize) -> Result<()> {
    if n_set.len() + 1 != ell {
        return Err(Error::ArityMismatch { expected: ell - 1, found: n_set.len() });
    }
    if b == 0 || b > ell {
        return Err(Error::invalid("b", format!("b = {b} outside 1..={ell}")));
    }
    let bounds: Vec<usize> = std::iter::once(0).chain(n_set.members().iter().copied()).chain(std::iter::once(n)).collect();
    if !(bounds[b - 1] < m && m <= bounds[b]) {
        return Err(Error::invalid("m", format!("need n_{} < m ≤ n_{b}, got m = {m}", b - 1)));
    }
    Ok(())
}

/// The two relations, with the prefix products taken over all k in range:
/// First:  ħ Σ_{k∉N,k<m} w_{N∪k} =
///   Asym[(Π_{1<a≤b}(t₁−t_a−ħ) − Π_{1<a≤b}(t₁−t_a+ħ) P(t₁; 1..m−1))
///        Π_{b<a≤ℓ}(t₁−t_a−ħ) g_N(t₂..)],
/// Second: ħ Σ_{k∉N,k≥m} w_{N∪k} =
///   Asym[(Π_{b<a≤ℓ}(t₁−t_a−ħ) − Π_{b<a≤ℓ}(t₁−t_a+ħ) P(t₁; m..n))
///        Π_{1<a≤b}(t₁−t_a+ħ) P(t₁; 1..m−1) g_N(t₂..)],
/// where P(t; K) = Π_{k∈K} (t−z_k−ħ)/(t−z_k).
pub fn weight_sum_relation(relation: SumRange, n_set: &SubsetIndex, b: usize, m: usize, t: &[Complex64], params: &ModelParams) -> Result<IdentityResidual> {
    let ell = t.len();
    let n = params.n();
    validate_weight_sum(n_set, b, m, ell, n)?;
    let hbar = params.hbar();
    let range: Vec<usize> = match relation {
        SumRange::First => (1..m).collect(),
        SumRange::Second => (m..=n).collect(),
    };
    let mut lhs = Complex64::zero();
    let mut magnitude = 0.0;
    for &k in range.iter().filter(|k| !n_set.contains(**k)) {
        let s = n_set.insert_front(k).expect("k ∉ N").1;
        let term = hbar * eval_w(&s, t, params)?;
        magnitude += term.norm();
        lhs += term;
    }
    let prod = |tt: &[Complex64], idx: std::ops::Range<usize>, shift: Complex64| -> Complex64 {
        tt[idx].iter().map(|ta| tt[0] - ta + shift).product()
    };
    let f = |tt: &[Complex64]| -> Result<Complex64> {
        let g = eval_g(n_set, &tt[1..], params)?;
        let low = 1..b;
        let high = b..ell;
        let v = match relation {
            SumRange::First => {
                let pre = prefix_ratio(tt[0], 1..m, params)?;
                (prod(tt, low.clone(), -hbar) - prod(tt, low, hbar) * pre) * prod(tt, high, -hbar)
            }
            SumRange::Second => {
                let tail = prefix_ratio(tt[0], m..=n, params)?;
                let pre = prefix_ratio(tt[0], 1..m, params)?;
                (prod(tt, high.clone(), -hbar) - prod(tt, high, hbar) * tail) * prod(tt, low, hbar) * pre
            }
        };
        Ok(v * g)
    };
    let (rhs, rhs_magnitude) = asym_with_magnitude(f, t)?;
    Ok(IdentityResidual { lhs, rhs, magnitude: magnitude + rhs_magnitude })
}

/// Ξ⁽¹⁾(t) against 2 Σ_m W_{m}(t).
pub fn xi1_expansion(t: Complex64, params: &ModelParams) -> Result<IdentityResidual> {
    let mut rhs = Complex64::zero();
    let mut magnitude = 0.0;
    for m in 1..=params.n() {
        let term = 2.0 * big_g_factor(t, m, params)?;
        magnitude += term.norm();
        rhs += term;
    }
    let lhs = xi1(t, params)?;
    Ok(IdentityResidual { lhs, rhs, magnitude: magnitude + lhs.norm() })
}

/// Ξ⁽²⁾(t₁, t₂) against 4 Σ_{k<m} W_{k,m}(t₁, t₂).
pub fn xi2_expansion(t1: Complex64, t2: Complex64, params: &ModelParams) -> Result<IdentityResidual> {
    let mut rhs = Complex64::zero();
    let mut magnitude = 0.0;
    for s in subsets(params.n(), 2) {
        let term = 4.0 * eval_big_w(&s, &[t1, t2], params)?;
        magnitude += term.norm();
        rhs += term;
    }
    let lhs = xi2(t1, t2, params)?;
    Ok(IdentityResidual { lhs, rhs, magnitude: magnitude + lhs.norm() })
}

/// Identities checked by evaluation at a point.
#[derive(Clone, Debug, PartialEq)]
pub enum IdentityKind {
    WeightSum { relation: SumRange, n_set: SubsetIndex, b: usize, m: usize },
    Xi1Expansion,
    Xi2Expansion,
}

pub fn identity_residual(kind: &IdentityKind, t: &[Complex64], params: &ModelParams) -> Result<IdentityResidual> {
    match kind {
        IdentityKind::WeightSum { relation, n_set, b, m } => weight_sum_relation(*relation, n_set, *b, *m, t, params),
        IdentityKind::Xi1Expansion => xi1_expansion(t[0], params),
        IdentityKind::Xi2Expansion => {
            if t.len() != 2 {
                return Err(Error::ArityMismatch { expected: 2, found: t.len() });
            }
            xi2_expansion(t[0], t[1], params)
        }
    }
}

/// Coefficients of a monic-factor product Π (u − r) in increasing powers.
fn poly_from_roots<S: Field>(roots: &[S]) -> Vec<S> {
    let mut c = vec![S::one()];
    for r in roots {
        let mut next = vec![S::zero(); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] = next[k + 1].clone() + ck.clone();
            next[k] = next[k].clone() - ck.clone() * r.clone();
        }
        c = next;
    }
    c
}

/// Σ_k M_{jk} u^{k−1} = Π_{i<j} (u − x_i) Π_{j<i≤n} (u + y_i).
pub fn det_m_matrix<S: Field>(x: &[S], y: &[S]) -> Result<Matrix<S>> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{} x-values, {} y-values", n, y.len())));
    }
    let rows = (0..n)
        .map(|j| {
            let mut roots: Vec<S> = x[..j].to_vec();
            roots.extend(y[j + 1..].iter().map(|v| -v.clone()));
            poly_from_roots(&roots)
        })
        .collect();
    Ok(Matrix::from_rows(rows))
}

/// det M − Π_{i<j} (x_i + y_j), exactly.
pub fn det_m_residual(x: &[GaussianRational], y: &[GaussianRational]) -> Result<GaussianRational> {
    let det = det_m_matrix(x, y)?.det();
    let mut prod = GaussianRational::one();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            prod = prod * (x[i].clone() + y[j].clone());
        }
    }
    Ok(det - prod)
}

/// Σ_N c_N W_N, the coefficient vector indexed by ℓ-subsets (lexicographic).
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicFnCoeffs {
    n: usize,
    ell: usize,
    coeffs: Vec<Complex64>,
}

impl PeriodicFnCoeffs {
    pub fn new(n: usize, ell: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != binomial(n, ell) {
            return Err(Error::DimensionMismatch(format!("{} coefficients for C({n},{ell})", coeffs.len())));
        }
        Ok(Self { n, ell, coeffs })
    }

    pub fn zero(n: usize, ell: usize) -> Self {
        Self { n, ell, coeffs: vec![Complex64::zero(); binomial(n, ell)] }
    }

    /// The constant function 1 of no variables.
    pub fn constant_one(n: usize) -> Self {
        Self { n, ell: 0, coeffs: vec![one()] }
    }

    pub fn basis(n: usize, s: &SubsetIndex) -> Result<Self> {
        let pos = crate::tensor_space::subset_position(s, n).ok_or(Error::IndexOutOfRange { index: s.len(), n })?;
        let mut out = Self::zero(n, s.len());
        out.coeffs[pos] = one();
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn ell(&self) -> usize {
        self.ell
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.n, self.ell) != (other.n, other.ell) {
            return Err(Error::ArityMismatch { expected: self.ell, found: other.ell });
        }
        Ok(Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(), ..self.clone() })
    }

    pub fn eval(&self, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
        if t.len() != self.ell {
            return Err(Error::ArityMismatch { expected: self.ell, found: t.len() });
        }
        let mut acc = Complex64::zero();
        for (s, c) in subsets(self.n, self.ell).iter().zip(&self.coeffs) {
            if *c != Complex64::zero() {
                acc += c * eval_big_w(s, t, params)?;
            }
        }
        Ok(acc)
    }

    /// Norm of ι_κ applied to the coefficient vector, κ_m = (−1)^m. Zero
    /// exactly on the subspace where F·exp(−2πiΣt_a/p)·ΠΠ(1 − Exp(t_a − z_m))
    /// stays polynomial.
    pub fn exponential_defect(&self) -> f64 {
        if self.ell == 0 {
            return self.coeffs[0].norm();
        }
        let m = contraction_matrix(self.n, self.ell).to_complex();
        crate::linalg::vec_norm(&m.apply(&self.coeffs))
    }
}

/// Limits κ_m = (−1)^m of the G-factors as Im(t/p) → +∞.
pub fn kappa(n: usize) -> Vec<GaussianRational> {
    (1..=n).map(|m| GaussianRational::from_ints(if m % 2 == 0 { 1 } else { -1 }, 0)).collect()
}

/// Exact matrix of ι_κ from degree ℓ to degree ℓ − 1.
pub fn contraction_matrix(n: usize, ell: usize) -> QMatrix {
    let k = kappa(n);
    let cols: Vec<Vec<GaussianRational>> = subsets(n, ell)
        .iter()
        .map(|s| {
            let e = GrassmannElement::monomial(s, GaussianRational::one(), n).expect("subset within range");
            e.contract(&k).expect("form length matches").coords(ell - 1)
        })
        .collect();
    Matrix::from_columns(&cols, binomial(n, ell - 1))
}

/// Basis of the exponential subspace of arity ℓ (dimension C(n−1, ℓ)).
pub fn exponential_subspace_basis(n: usize, ell: usize) -> Vec<PeriodicFnCoeffs> {
    if ell == 0 {
        return vec![];
    }
    contraction_matrix(n, ell)
        .nullspace()
        .into_iter()
        .map(|v| PeriodicFnCoeffs { n, ell, coeffs: v.iter().map(|c| c.to_complex()).collect() })
        .collect()
}

/// Exact matrix of X⁽ᵃ⁾ from arity ℓ − a to arity ℓ in the W basis:
/// X⁽¹⁾W_N = 2(ℓ−1)! φ⁽¹⁾∧ξ_N and X⁽²⁾W_N = 8(ℓ−2)! φ⁽²⁾∧ξ_N.
pub fn x_matrix(a: usize, n: usize, ell: usize) -> Result<QMatrix> {
    if !(a == 1 || a == 2) {
        return Err(Error::invalid("a", "X maps exist for a ∈ {1, 2}"));
    }
    if ell < a || ell > n {
        return Err(Error::ArityMismatch { expected: a, found: ell });
    }
    let factorial = (1..=(ell - a) as i64).product::<i64>();
    let (phi, factor) = if a == 1 { (phi1(n), 2 * factorial) } else { (phi2(n), 8 * factorial) };
    let factor = GaussianRational::from_ints(factor, 0);
    let cols: Vec<Vec<GaussianRational>> = subsets(n, ell - a)
        .iter()
        .map(|s| {
            let e = GrassmannElement::monomial(s, GaussianRational::one(), n).expect("subset within range");
            phi.wedge(&e).expect("same generator count").scale(&factor).coords(ell)
        })
        .collect();
    Ok(Matrix::from_columns(&cols, binomial(n, ell)))
}

/// X⁽ᵃ⁾ on coefficients through the exterior-algebra matrices.
pub fn apply_x(a: usize, coeffs: &PeriodicFnCoeffs) -> Result<PeriodicFnCoeffs> {
    let ell = coeffs.ell + a;
    let m: CMatrix = x_matrix(a, coeffs.n, ell)?.to_complex();
    PeriodicFnCoeffs::new(coeffs.n, ell, m.apply(&coeffs.coeffs))
}

/// X⁽ᵃ⁾F at a point straight from the definition
/// Asym(Ξ⁽ᵃ⁾(t₁[, t₂]) F(remaining variables)).
pub fn apply_x_pointwise(a: usize, coeffs: &PeriodicFnCoeffs, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
    if t.len() != coeffs.ell + a {
        return Err(Error::ArityMismatch { expected: coeffs.ell + a, found: t.len() });
    }
    asym(
        |tt| {
            let head = match a {
                1 => xi1(tt[0], params)?,
                2 => xi2(tt[0], tt[1], params)?,
                _ => return Err(Error::invalid("a", "X maps exist for a ∈ {1, 2}")),
            };
            Ok(head * coeffs.eval(&tt[a..], params)?)
        },
        t,
    )
}

/// Named function families, for generic pointwise evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum RationalFamily {
    Kernel(SubsetIndex),
    Weight(SubsetIndex),
    TotalDifference(SubsetIndex),
    WeightSumLhs { relation: SumRange, n_set: SubsetIndex, b: usize, m: usize },
    WeightSumRhs { relation: SumRange, n_set: SubsetIndex, b: usize, m: usize },
    AppendixE,
    AppendixF,
}

impl RationalFamily {
    pub fn arity(&self) -> usize {
        match self {
            Self::Kernel(m) | Self::Weight(m) | Self::TotalDifference(m) => m.len(),
            Self::WeightSumLhs { n_set, .. } | Self::WeightSumRhs { n_set, .. } => n_set.len() + 1,
            Self::AppendixE | Self::AppendixF => 2,
        }
    }

    pub fn eval(&self, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
        if t.len() != self.arity() {
            return Err(Error::ArityMismatch { expected: self.arity(), found: t.len() });
        }
        match self {
            Self::Kernel(m) => eval_g(m, t, params),
            Self::Weight(m) => eval_w(m, t, params),
            Self::TotalDifference(m) => r_m_closed(m, t, params),
            Self::WeightSumLhs { relation, n_set, b, m } => Ok(weight_sum_relation(*relation, n_set, *b, *m, t, params)?.lhs),
            Self::WeightSumRhs { relation, n_set, b, m } => Ok(weight_sum_relation(*relation, n_set, *b, *m, t, params)?.rhs),
            Self::AppendixE => appendix_e(t[0], t[1], params),
            Self::AppendixF => appendix_f(t[0], t[1], params),
        }
    }
}
