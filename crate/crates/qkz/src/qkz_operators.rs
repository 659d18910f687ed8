//! Model parameters, the R-matrix, the qKZ operators K_m, the μ-generator L,
//! restricted determinants of K_m and the transfer-matrix trace.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor_space::{binomial, global_sl2, site_operator, swap_operator, SiteKind, TensorOperator};

/// Default genericity tolerance.
pub const GENERICITY_TOL: f64 = 1e-8;
/// Tolerance for the R-matrix pole at x = −ħ.
pub const R_POLE_TOL: f64 = 1e-12;

/// The tuple (n, ℓ, ħ, p = 2ħ, μ, z₁..z_n).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    n: usize,
    ell: usize,
    hbar: Complex64,
    p: Complex64,
    mu: Complex64,
    z: Vec<Complex64>,
}

impl ModelParams {
    /// Validated constructor; p is set to 2ħ.
    pub fn new(n: usize, ell: usize, hbar: Complex64, mu: Complex64, z: Vec<Complex64>) -> Result<Self> {
        let params = Self { n, ell, hbar, p: 2.0 * hbar, mu, z };
        params.validate()?;
        Ok(params)
    }

    /// Constructor that skips the genericity checks (used to probe
    /// non-generic configurations).
    pub fn new_unchecked(n: usize, ell: usize, hbar: Complex64, mu: Complex64, z: Vec<Complex64>) -> Self {
        Self { n, ell, hbar, p: 2.0 * hbar, mu, z }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z.len() != self.n {
            return Err(Error::invalid("z", format!("expected {} points, got {}", self.n, self.z.len())));
        }
        if self.ell > self.n {
            return Err(Error::invalid("ell", format!("ℓ = {} exceeds n = {}", self.ell, self.n)));
        }
        if self.hbar.norm() == 0.0 || !self.hbar.re.is_finite() || !self.hbar.im.is_finite() {
            return Err(Error::invalid("hbar", "must be finite and nonzero"));
        }
        if self.p != 2.0 * self.hbar {
            return Err(Error::invalid("p", "must equal 2ħ"));
        }
        if !(0.0..2.0 * PI).contains(&self.mu.im) {
            return Err(Error::invalid("mu", format!("Im μ = {} outside [0, 2π)", self.mu.im)));
        }
        for k in 0..self.n {
            for m in k + 1..self.n {
                let d = (self.z[k] - self.z[m]) / self.p;
                // z_k − z_m + ħ ∈ pℤ, equivalently Exp(z_k) + Exp(z_m) = 0.
                let h = d + 0.5;
                if (h - h.re.round()).norm() < GENERICITY_TOL {
                    return Err(Error::invalid("z", format!("z_{} − z_{} + ħ lies on the discriminant", k + 1, m + 1)));
                }
                if (d - d.re.round()).norm() < GENERICITY_TOL {
                    return Err(Error::invalid("z", format!("z_{} and z_{} coincide modulo p", k + 1, m + 1)));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn ell(&self) -> usize {
        self.ell
    }
    pub fn hbar(&self) -> Complex64 {
        self.hbar
    }
    pub fn p(&self) -> Complex64 {
        self.p
    }
    pub fn mu(&self) -> Complex64 {
        self.mu
    }
    pub fn z(&self) -> &[Complex64] {
        &self.z
    }

    pub fn zbar(&self) -> Complex64 {
        if self.n == 0 {
            Complex64::zero()
        } else {
            self.z.iter().sum::<Complex64>() / self.n as f64
        }
    }

    pub fn with_ell(&self, ell: usize) -> Self {
        Self { ell, ..self.clone() }
    }

    /// Same parameters with a different μ. The strip condition is not
    /// re-checked, so finite differences may step along the real axis.
    pub fn with_mu(&self, mu: Complex64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub fn with_z(&self, z: Vec<Complex64>) -> Self {
        Self { z, ..self.clone() }
    }

    /// z with z_m replaced by z_m + p (1-based m).
    pub fn shifted(&self, m: usize) -> Self {
        let mut z = self.z.clone();
        z[m - 1] += self.p;
        self.with_z(z)
    }

    /// z with z_1..z_k each shifted by p.
    pub fn shifted_prefix(&self, k: usize) -> Self {
        let mut z = self.z.clone();
        for zj in z.iter_mut().take(k) {
            *zj += self.p;
        }
        self.with_z(z)
    }

    /// exp(2πix/p).
    pub fn exp_p(&self, x: Complex64) -> Complex64 {
        (2.0 * PI * Complex64::i() * x / self.p).exp()
    }
}

/// The scalar (x + ħ·P)/(x + ħ) coefficients `(x/(x+ħ), ħ/(x+ħ))`.
fn r_coefficients(x: Complex64, hbar: Complex64) -> Result<(Complex64, Complex64)> {
    let d = x + hbar;
    if d.norm() < R_POLE_TOL * (1.0 + hbar.norm()) {
        return Err(Error::PoleProximity { what: "R-matrix", location: x });
    }
    Ok((x / d, hbar / d))
}

/// R(x) = (x·Id + ħP)/(x + ħ) on V⊗V.
pub fn r_matrix(x: Complex64, hbar: Complex64) -> Result<TensorOperator> {
    r_operator(1, 2, x, hbar, 2)
}

/// R_ij(x) acting in factors i, j of V^⊗n.
pub fn r_operator(i: usize, j: usize, x: Complex64, hbar: Complex64, n: usize) -> Result<TensorOperator> {
    let (a, b) = r_coefficients(x, hbar)?;
    let p: TensorOperator = swap_operator(i, j, n)?;
    Ok(TensorOperator::identity(n).scale(&a).add(&p.scale(&b)))
}

fn exp_mu_h(m: usize, mu: Complex64, n: usize) -> TensorOperator {
    let e = mu.exp();
    let bit = 1usize << (m - 1);
    TensorOperator::diagonal(n, |b| if b & bit != 0 { e } else { Complex64::one() })
}

/// K_m = R_{m,m−1}(z_m−z_{m−1}+p)…R_{m,1}(z_m−z_1+p)·exp(μH_m)·
/// R_{m,n}(z_m−z_n)…R_{m,m+1}(z_m−z_{m+1}).
pub fn qkz_k(m: usize, params: &ModelParams) -> Result<TensorOperator> {
    let n = params.n();
    if m == 0 || m > n {
        return Err(Error::IndexOutOfRange { index: m, n });
    }
    let z = params.z();
    let (p, h) = (params.p(), params.hbar());
    let mut out = TensorOperator::identity(n);
    for j in (1..m).rev() {
        out = out.compose(&r_operator(m, j, z[m - 1] - z[j - 1] + p, h, n)?);
    }
    out = out.compose(&exp_mu_h(m, params.mu(), n));
    for j in (m + 1..=n).rev() {
        out = out.compose(&r_operator(m, j, z[m - 1] - z[j - 1], h, n)?);
    }
    Ok(out)
}

/// K̃_m = K_m(z₁+p,…,z_{m−1}+p,z_m,…)…K_2(z₁+p,z₂,…)K_1(z).
pub fn qkz_k_tilde(m: usize, params: &ModelParams) -> Result<TensorOperator> {
    let mut out = TensorOperator::identity(params.n());
    for j in 1..=m {
        out = qkz_k(j, &params.shifted_prefix(j - 1))?.compose(&out);
    }
    Ok(out)
}

/// L = Σ z_m H_m + ħ/(e^μ−1)·(e^μ ΣH_m + Σ_{k<m}(e^μ σ⁻_kσ⁺_m + σ⁺_kσ⁻_m)).
pub fn mu_generator_l(params: &ModelParams) -> Result<TensorOperator> {
    let n = params.n();
    let e = params.mu().exp();
    if (e - 1.0).norm() < 1e-14 {
        return Err(Error::Singular("e^μ = 1 in the μ-generator".into()));
    }
    let h_ops: Vec<TensorOperator> = (1..=n).map(|m| site_operator(SiteKind::H, m, n).expect("in range")).collect();
    let mut z_part = TensorOperator::zero(n);
    for (m, h) in h_ops.iter().enumerate() {
        z_part = z_part.add(&h.scale(&params.z()[m]));
    }
    let mut inner = global_sl2::<Complex64>(SiteKind::H, n).scale(&e);
    for k in 1..=n {
        let mk: TensorOperator = site_operator(SiteKind::Minus, k, n)?;
        let pk: TensorOperator = site_operator(SiteKind::Plus, k, n)?;
        for m in k + 1..=n {
            let mm: TensorOperator = site_operator(SiteKind::Minus, m, n)?;
            let pm: TensorOperator = site_operator(SiteKind::Plus, m, n)?;
            inner = inner.add(&mk.compose(&pm).scale(&e)).add(&pk.compose(&mm));
        }
    }
    Ok(z_part.add(&inner.scale(&(params.hbar() / (e - 1.0)))))
}

/// Closed form of det K_m restricted to the weight-ℓ block.
pub fn det_k_weight(m: usize, params: &ModelParams, ell: usize) -> Result<Complex64> {
    let n = params.n();
    if m == 0 || m > n {
        return Err(Error::IndexOutOfRange { index: m, n });
    }
    if ell == 0 {
        return Ok(Complex64::one());
    }
    let z = params.z();
    let (p, h) = (params.p(), params.hbar());
    let mut base = Complex64::one();
    for j in 1..=n {
        if j == m {
            continue;
        }
        let x = z[m - 1] - z[j - 1] + if j < m { p } else { Complex64::zero() };
        let den = x + h;
        if den.norm() < R_POLE_TOL {
            return Err(Error::PoleProximity { what: "restricted determinant of K_m", location: x });
        }
        base *= (x - h) / den;
    }
    let e1 = binomial(n - 1, ell - 1) as i32;
    let e2 = if n >= 2 { binomial(n - 2, ell - 1) as i32 } else { 0 };
    Ok((params.mu() * e1 as f64).exp() * base.powi(e2))
}

/// det K_m on the weight-ℓ block by direct elimination.
pub fn det_k_weight_direct(m: usize, params: &ModelParams, ell: usize) -> Result<Complex64> {
    Ok(qkz_k(m, params)?.restrict_to_weight(ell).det())
}

/// tr₀(R₁₀(z₁−u)…R_{n0}(z_n−u)·exp(−μH₀)) with an auxiliary factor 0.
pub fn transfer_trace(u: Complex64, params: &ModelParams) -> Result<TensorOperator> {
    let n = params.n();
    let aux = n + 1;
    let mut big = TensorOperator::identity(aux);
    for m in 1..=n {
        big = big.compose(&r_operator(m, aux, params.z()[m - 1] - u, params.hbar(), aux)?);
    }
    big = big.compose(&exp_mu_h(aux, -params.mu(), aux));
    let dim = 1usize << n;
    let bm = big.matrix();
    let traced = Matrix::from_fn(dim, dim, |a, b| bm[(a, b)] + bm[(a | dim, b | dim)]);
    TensorOperator::from_matrix(n, traced)
}

/// Laurent coefficients of e^μ·transfer_trace(u) at u = ∞ and the fit of the
/// u⁻² coefficient against ħ(e^μ−1)L plus a quadratic in ΣH.
#[derive(Clone, Debug)]
pub struct TraceExpansion {
    /// Coefficients A_j of u^{−j}, j = 0..=2.
    pub coefficients: Vec<TensorOperator>,
    /// Fitted c₂₀, c₂₁, c₂₂.
    pub c2: [Complex64; 3],
    /// Relative Frobenius residual of A₂ − ħ(e^μ−1)L − (c₂₀ + c₂₁ΣH + c₂₂(ΣH)²).
    pub l_residual: f64,
    /// Relative residual of A₀ − c₀₀ and A₁ − (c₁₀ + c₁₁ΣH).
    pub low_order_residual: f64,
}

/// Number of sample points on the Laurent circle.
pub const LAURENT_NODES: usize = 64;

pub fn trace_expansion(params: &ModelParams) -> Result<TraceExpansion> {
    let n = params.n();
    let e = params.mu().exp();
    let radius = 10.0 * params.z().iter().map(|z| (z + params.hbar()).norm()).fold(params.hbar().norm(), f64::max);
    let dim = 1usize << n;
    let mut coeffs = vec![Matrix::<Complex64>::zeros(dim, dim); 3];
    for k in 0..LAURENT_NODES {
        let u = Complex64::from_polar(radius, 2.0 * PI * k as f64 / LAURENT_NODES as f64);
        let t = transfer_trace(u, params)?.into_matrix().scale(&(e / LAURENT_NODES as f64));
        let mut upow = Complex64::one();
        for c in coeffs.iter_mut() {
            *c = &*c + &t.scale(&upow);
            upow *= u;
        }
    }
    // Every coefficient must be a function of the total weight plus, at
    // order two, the μ-generator.
    let weights: Vec<f64> = (0..dim).map(|b| b.count_ones() as f64).collect();
    let fit_diagonal = |m: &Matrix<Complex64>, degree: usize| -> (Vec<Complex64>, f64) {
        let rows: Vec<Vec<Complex64>> =
            (0..dim).map(|b| (0..=degree).map(|d| Complex64::new(weights[b].powi(d as i32), 0.0)).collect()).collect();
        let a = Matrix::from_rows(rows);
        let rhs: Vec<Complex64> = (0..dim).map(|b| m[(b, b)]).collect();
        let sol = least_squares(&a, &rhs);
        let mut r = m.clone();
        for b in 0..dim {
            let fitted: Complex64 = (0..=degree).map(|d| sol[d] * weights[b].powi(d as i32)).sum();
            r[(b, b)] -= fitted;
        }
        (sol, r.frobenius_norm())
    };
    let l = mu_generator_l(params)?.into_matrix().scale(&(params.hbar() * (e - 1.0)));
    let a2_minus_l = &coeffs[2] - &l;
    let (c2, res2) = fit_diagonal(&a2_minus_l, 2);
    let (_, res0) = fit_diagonal(&coeffs[0], 0);
    let (_, res1) = fit_diagonal(&coeffs[1], 1);
    let scale2 = coeffs[2].frobenius_norm().max(l.frobenius_norm());
    let scale01 = coeffs[0].frobenius_norm().max(coeffs[1].frobenius_norm());
    Ok(TraceExpansion {
        coefficients: coeffs.into_iter().map(|m| TensorOperator::from_matrix(n, m).expect("square")).collect(),
        c2: [c2[0], c2[1], c2[2]],
        l_residual: res2 / scale2,
        low_order_residual: (res0 + res1) / scale01,
    })
}

/// Least squares through the normal equations (tiny, well-conditioned
/// systems only).
fn least_squares(a: &Matrix<Complex64>, b: &[Complex64]) -> Vec<Complex64> {
    let ah = a.adjoint();
    let g = ah.matmul(a);
    let rhs = ah.apply(b);
    let k = g.rows();
    let aug = Matrix::from_fn(k, k + 1, |i, j| if j < k { g[(i, j)] } else { rhs[i] });
    let (r, _) = aug.rref();
    (0..k).map(|i| r[(i, k)]).collect()
}

/// Residual norms of the compatibility relations for one m.
#[derive(Clone, Debug)]
pub struct CompatRecord {
    pub m: usize,
    /// ‖L(…,z_m+p,…)K_m − p∂_μK_m − K_mL‖ / (‖L‖·‖K_m‖).
    pub shift: f64,
    /// ‖[L, K̃_m]‖ / (‖L‖·‖K̃_m‖).
    pub commutator: f64,
}

/// ∂_μK_m by central difference, with one Richardson step when requested.
pub fn d_mu_k(m: usize, params: &ModelParams, richardson: bool) -> Result<TensorOperator> {
    let h = 1e-5 * params.mu().norm().max(1.0);
    let cd = |h: f64| -> Result<TensorOperator> {
        let plus = qkz_k(m, &params.with_mu(params.mu() + h))?;
        let minus = qkz_k(m, &params.with_mu(params.mu() - h))?;
        Ok(plus.sub(&minus).scale(&Complex64::new(0.5 / h, 0.0)))
    };
    let d1 = cd(h)?;
    if !richardson {
        return Ok(d1);
    }
    let d2 = cd(h / 2.0)?;
    Ok(d2.scale(&Complex64::new(4.0 / 3.0, 0.0)).sub(&d1.scale(&Complex64::new(1.0 / 3.0, 0.0))))
}

/// Residuals of L(z+pe_m)K_m − p∂_μK_m − K_mL and [L, K̃_m] for every m.
///
/// The finite difference is refined by Richardson extrapolation when the
/// plain residual exceeds `fd_tol`.
pub fn compat_residual(params: &ModelParams, fd_tol: f64) -> Result<Vec<CompatRecord>> {
    let n = params.n();
    let l = mu_generator_l(params)?;
    let mut out = Vec::with_capacity(n);
    for m in 1..=n {
        let k = qkz_k(m, params)?;
        let l_shift = mu_generator_l(&params.shifted(m))?;
        let norm = l.norm().max(l_shift.norm()) * k.norm();
        let shift_res = |dk: &TensorOperator| {
            l_shift.compose(&k).sub(&dk.scale(&params.p())).sub(&k.compose(&l)).norm() / norm
        };
        let mut shift = shift_res(&d_mu_k(m, params, false)?);
        if shift > fd_tol {
            shift = shift.min(shift_res(&d_mu_k(m, params, true)?));
        }
        let kt = qkz_k_tilde(m, params)?;
        let commutator = l.commutator(&kt).norm() / (l.norm() * kt.norm());
        out.push(CompatRecord { m, shift, commutator });
    }
    Ok(out)
}

/// ‖R₁₂(u₁−u₂)R₁₃(u₁−u₃)R₂₃(u₂−u₃) − R₂₃R₁₃R₁₂‖ on V^⊗3, relative to
/// the norm of the left side.
pub fn yang_baxter_residual(u: [Complex64; 3], hbar: Complex64) -> Result<f64> {
    let r = |i: usize, j: usize| r_operator(i, j, u[i - 1] - u[j - 1], hbar, 3);
    let (r12, r13, r23) = (r(1, 2)?, r(1, 3)?, r(2, 3)?);
    let lhs = r12.compose(&r13).compose(&r23);
    let rhs = r23.compose(&r13).compose(&r12);
    Ok(lhs.sub(&rhs).norm() / lhs.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn yang_baxter_holds() {
        let u = [Complex64::new(0.3, -0.2), Complex64::new(-1.1, 0.4), Complex64::new(0.7, 0.9)];
        assert!(yang_baxter_residual(u, Complex64::new(1.0, 0.0)).unwrap() < 1e-14);
        assert!(yang_baxter_residual(u, Complex64::new(0.4, -0.3)).unwrap() < 1e-14);
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(n: usize) -> ModelParams {
        let z = (0..n).map(|k| c(0.13 * k as f64 - 0.1, 0.07 * (k as f64 * 1.7).sin())).collect();
        ModelParams::new(n, 1, c(1.0, 0.0), c(0.2, PI / 2.0), z).unwrap()
    }

    #[test]
    fn r_matrix_examples() {
        let h = c(1.0, 0.0);
        let r0 = r_matrix(c(0.0, 0.0), h).unwrap();
        assert_eq!(r0, swap_operator(1, 2, 2).unwrap());
        let rh = r_matrix(h, h).unwrap();
        let sym = TensorOperator::identity(2).add(&swap_operator(1, 2, 2).unwrap()).scale(&c(0.5, 0.0));
        assert!(rh.sub(&sym).norm() < 1e-15);
        assert!(r_matrix(-h, h).is_err());
        let x = c(0.37, -0.81);
        let r12 = r_operator(1, 2, x, h, 2).unwrap();
        let r21 = r_operator(2, 1, -x, h, 2).unwrap();
        assert!(r12.compose(&r21).sub(&TensorOperator::identity(2)).norm() < 1e-14);
    }

    #[test]
    fn k_for_one_site() {
        let p = ModelParams::new(1, 1, c(1.0, 0.0), c(0.0, 1.3), vec![c(0.1, 0.0)]).unwrap();
        let k = qkz_k(1, &p).unwrap();
        assert_eq!(k.matrix()[(0, 0)], c(1.0, 0.0));
        assert!((k.matrix()[(1, 1)] - c(0.0, 1.3).exp()).norm() < 1e-15);
    }

    #[test]
    fn k_preserves_weight() {
        let p = sample(3);
        for m in 1..=3 {
            let k = qkz_k(m, &p).unwrap();
            let s3: TensorOperator = global_sl2(SiteKind::Three, 3);
            assert!(k.commutator(&s3).norm() < 1e-13);
        }
    }

    #[test]
    fn k_commutes_with_sl2_at_mu_zero() {
        let p = sample(3).with_mu(c(0.0, 0.0));
        for m in 1..=3 {
            let k = qkz_k(m, &p).unwrap();
            for kind in [SiteKind::Plus, SiteKind::Minus, SiteKind::Three] {
                let s: TensorOperator = global_sl2(kind, 3);
                assert!(k.commutator(&s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zigzag_consistency() {
        let p = sample(3);
        for j in 1..=3 {
            for m in 1..=3 {
                if j == m {
                    continue;
                }
                let lhs = qkz_k(j, &p.shifted(m)).unwrap().compose(&qkz_k(m, &p).unwrap());
                let rhs = qkz_k(m, &p.shifted(j)).unwrap().compose(&qkz_k(j, &p).unwrap());
                assert!(lhs.sub(&rhs).norm() < 1e-12 * lhs.norm());
            }
        }
    }

    #[test]
    fn l_single_site() {
        let p = sample(1);
        let e = p.mu().exp();
        let l = mu_generator_l(&p).unwrap();
        let expect = p.z()[0] + p.hbar() * e / (e - 1.0);
        assert!((l.matrix()[(1, 1)] - expect).norm() < 1e-14);
        assert!(l.matrix()[(0, 0)].norm() < 1e-15);
        assert!(mu_generator_l(&p.with_mu(c(0.0, 0.0))).is_err());
    }

    #[test]
    fn l_small_mu_limit() {
        let p = sample(3);
        let mu = c(1e-6, 0.0);
        let l = mu_generator_l(&p.with_mu(mu)).unwrap().scale(&(mu / p.p()));
        let a0 = crate::tensor_space::casimir_a0(3);
        assert!(l.sub(&a0).norm() < 1e-5);
        assert!(l.preserves_weight() || l.sub(&a0).norm() < 1e-5);
    }

    #[test]
    fn restricted_determinant_matches_direct() {
        for n in 1..=4 {
            for ell in 0..=n {
                let p = sample(n);
                for m in 1..=n {
                    let a = det_k_weight(m, &p, ell).unwrap();
                    let b = det_k_weight_direct(m, &p, ell).unwrap();
                    assert!((a - b).norm() <= 1e-10 * b.norm(), "n={n} ell={ell} m={m}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn transfer_trace_limits() {
        let p = sample(1);
        let far = transfer_trace(c(1e9, 0.0), &p).unwrap();
        let expect = TensorOperator::identity(1).scale(&(1.0 + (-p.mu()).exp()));
        assert!(far.sub(&expect).norm() < 1e-8);
        // Direct 4×4 computation for one site.
        let u = c(0.4, 0.9);
        let r = r_matrix(p.z()[0] - u, p.hbar()).unwrap();
        let aux = TensorOperator::diagonal(2, |b| if b & 2 != 0 { (-p.mu()).exp() } else { c(1.0, 0.0) });
        let full = r.compose(&aux);
        let fm = full.matrix();
        let t = transfer_trace(u, &p).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((t.matrix()[(a, b)] - (fm[(a, b)] + fm[(a + 2, b + 2)])).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn transfer_traces_commute() {
        let p = sample(3);
        let a = transfer_trace(c(0.3, 1.1), &p).unwrap();
        let b = transfer_trace(c(-0.8, 0.4), &p).unwrap();
        assert!(a.commutator(&b).norm() < 1e-11 * a.norm() * b.norm());
        for m in 1..=3 {
            let kt = qkz_k_tilde(m, &p).unwrap();
            assert!(kt.commutator(&a).norm() < 1e-11 * kt.norm() * a.norm());
        }
    }

    #[test]
    fn trace_expansion_contains_l() {
        for n in 1..=3 {
            let ex = trace_expansion(&sample(n)).unwrap();
            assert!(ex.l_residual < 1e-10, "n={n}: {}", ex.l_residual);
            assert!(ex.low_order_residual < 1e-10, "n={n}: {}", ex.low_order_residual);
        }
    }

    #[test]
    fn compat_small_cases() {
        let p = sample(1);
        for r in compat_residual(&p, 1e-9).unwrap() {
            assert!(r.shift < 1e-9 && r.commutator < 1e-14);
        }
        for n in 2..=3 {
            for r in compat_residual(&sample(n), 1e-9).unwrap() {
                assert!(r.shift < 1e-7, "n={n}: {r:?}");
                assert!(r.commutator < 1e-10, "n={n}: {r:?}");
            }
        }
    }
}
