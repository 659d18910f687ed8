//! The hypergeometric map: integrals I(w, W), the matrix [I(w_M, W_N)],
//! solutions Ψ_W and the checks built on them.
//!
//! Every integrand handled here is a sum of products of one-variable
//! factors: the coupling Π(t_a − t_b − ħ) is expanded into monomials, so an
//! ℓ-fold integral becomes a sum of products of cached 1-d integrals
//! J = ∫ t^k a(t) G_j(t) φ(t) dt.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::contour_quadrature::{build_contour, build_contour_shifted, integrate_iterated, integrate_path, Contour, Decay, Estimate, PoleFamilies, QuadOptions};
use crate::error::{Error, Result};
use crate::linalg::{subspace_distance, vec_norm, Matrix};
use crate::qkz_operators::{mu_generator_l, qkz_k, ModelParams};
use crate::special::{branch_pow, gamma};
use crate::tensor_space::{binomial, global_sl2, singular_coordinates, subsets, SiteKind, SubsetIndex, TensorOperator, TensorVector};
use crate::weight_functions::{
    eval_big_w_weighted, eval_w, g_factor, ln_big_g_factor, log_phase, prefix_ratio, signed_permutations, x_matrix,
    PeriodicFnCoeffs,
};
use crate::scalar::Field;
use crate::CMatrix;

/// Relative cut for the numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-6;
/// Required ratio between the last kept and first dropped singular value.
pub const RANK_GAP: f64 = 10.0;

/// One-variable factor of a separable integrand, before the power t^k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    One,
    /// (t − z_m)⁻¹ Π_{j<m} (t − z_j − ħ)/(t − z_j)
    G(usize),
}

/// Product c·Π_v t_v^{k_v} a_v(t_v). A shifted variable stands for
/// (t+p)^k a(t+p)·Π_j (t − z_j − ħ)/(t − z_j).
#[derive(Clone, Debug, PartialEq)]
pub struct SepTerm {
    pub coeff: Complex64,
    pub factors: Vec<Factor>,
    pub powers: Vec<usize>,
    pub shifted: Vec<bool>,
}

/// Finite sum of separable terms in ℓ variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableFn {
    ell: usize,
    terms: Vec<SepTerm>,
}

impl SeparableFn {
    pub fn zero(ell: usize) -> Self {
        Self { ell, terms: vec![] }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn terms(&self) -> &[SepTerm] {
        &self.terms
    }

    /// Π_v a_v(t_v) · Π_{(i,j) ∈ pairs} (t_i − t_j − ħ).
    pub fn coupled(factors: Vec<Factor>, pairs: &[(usize, usize)], hbar: Complex64) -> Self {
        let ell = factors.len();
        let mut poly: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        poly.insert(vec![0; ell], Complex64::one());
        for &(i, j) in pairs {
            let mut next: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
            for (exps, c) in &poly {
                let mut ei = exps.clone();
                ei[i] += 1;
                *next.entry(ei).or_default() += c;
                let mut ej = exps.clone();
                ej[j] += 1;
                *next.entry(ej).or_default() -= c;
                *next.entry(exps.clone()).or_default() -= c * hbar;
            }
            poly = next;
        }
        let terms = poly
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(powers, coeff)| SepTerm { coeff, factors: factors.clone(), powers, shifted: vec![false; ell] })
            .collect();
        Self { ell, terms }
    }

    /// g_M(t_σ(1), …, t_σ(ℓ)) with σ given as the list of variables fed to
    /// each slot.
    pub fn kernel(m: &SubsetIndex, perm: &[usize], hbar: Complex64) -> Self {
        let ell = m.len();
        let mut factors = vec![Factor::One; ell];
        for (slot, &ma) in m.members().iter().enumerate() {
            factors[perm[slot]] = Factor::G(ma);
        }
        let mut pairs = Vec::new();
        for a in 0..ell {
            for b in a + 1..ell {
                pairs.push((perm[a], perm[b]));
            }
        }
        Self::coupled(factors, &pairs, hbar)
    }

    /// w_M = Asym g_M.
    pub fn weight(m: &SubsetIndex, hbar: Complex64) -> Self {
        let mut out = Self::zero(m.len());
        for (sign, perm) in signed_permutations(m.len()) {
            out = out.add(&Self::kernel(m, &perm, hbar).scale(Complex64::new(sign, 0.0)));
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let terms = self.terms.iter().map(|t| SepTerm { coeff: t.coeff * s, ..t.clone() }).collect();
        Self { ell: self.ell, terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.ell, other.ell, "adding separable functions of different arity");
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { ell: self.ell, terms }
    }

    /// t_v·F. Only defined before any shift.
    pub fn times_variable(&self, v: usize) -> Result<Self> {
        let mut out = self.clone();
        for t in &mut out.terms {
            if t.shifted[v] {
                return Err(Error::invalid("v", "cannot multiply a shifted variable by t"));
            }
            t.powers[v] += 1;
        }
        Ok(out)
    }

    /// The p-shifted part −e^μ F(…, t_v + p, …) Π_j (t_v − z_j − ħ)/(t_v − z_j)
    /// of D_v F.
    pub fn shifted_part(&self, v: usize, mu: Complex64) -> Result<Self> {
        let e = -mu.exp();
        let mut out = self.clone();
        for t in &mut out.terms {
            if t.shifted[v] {
                return Err(Error::invalid("v", "variable already shifted"));
            }
            t.shifted[v] = true;
            t.coeff *= e;
        }
        Ok(out)
    }

    /// D_v F = F − e^μ F(…, t_v + p, …) Π_j (t_v − z_j − ħ)/(t_v − z_j).
    pub fn difference(&self, v: usize, mu: Complex64) -> Result<Self> {
        Ok(self.add(&self.shifted_part(v, mu)?))
    }

    /// Σ_σ sgn σ F(t_σ).
    pub fn asym(&self) -> Self {
        let mut terms = Vec::new();
        for (sign, perm) in signed_permutations(self.ell) {
            for t in &self.terms {
                let mut moved = SepTerm {
                    coeff: t.coeff * sign,
                    factors: vec![Factor::One; self.ell],
                    powers: vec![0; self.ell],
                    shifted: vec![false; self.ell],
                };
                for (slot, &var) in perm.iter().enumerate() {
                    moved.factors[var] = t.factors[slot];
                    moved.powers[var] = t.powers[slot];
                    moved.shifted[var] = t.shifted[slot];
                }
                terms.push(moved);
            }
        }
        Self { ell: self.ell, terms }
    }

    /// Pointwise value, for cross-checks against the direct formulas.
    pub fn eval(&self, t: &[Complex64], params: &ModelParams) -> Result<Complex64> {
        let mut acc = Complex64::zero();
        for term in &self.terms {
            let mut v = term.coeff;
            for (var, ta) in t.iter().enumerate() {
                v *= factor_value(term.factors[var], term.shifted[var], term.powers[var], *ta, params)?;
            }
            acc += v;
        }
        Ok(acc)
    }
}

/// s^k a(s) with s = t or t + p, times the shift ratio when shifted.
fn factor_value(a: Factor, shifted: bool, power: usize, t: Complex64, params: &ModelParams) -> Result<Complex64> {
    let s = if shifted { t + params.p() } else { t };
    let mut v = s.powu(power as u32);
    if let Factor::G(m) = a {
        v *= g_factor(s, m, params)?;
    }
    if shifted {
        v *= prefix_ratio(t, 1..=params.n(), params)?;
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct JKey {
    factor: Factor,
    shifted: bool,
    power: usize,
    periodic: usize,
}

/// Evaluates pairings I(F, W_N) of separable functions with the W basis,
/// caching the 1-d integrals.
pub struct SeparableEngine {
    params: ModelParams,
    contour: Contour,
    opts: QuadOptions,
    cache: Mutex<HashMap<JKey, Estimate>>,
}

/// Checks the convergence regime of the integrals: 0 < Im μ < 2π, or μ = 0.
fn check_mu(params: &ModelParams) -> Result<()> {
    let mu = params.mu();
    match Decay::from_mu(mu) {
        Decay::Exponential { .. } => Ok(()),
        Decay::Algebraic if mu == Complex64::zero() => Ok(()),
        Decay::Algebraic => Err(Error::ConvergenceRegime(format!("μ = {mu} must have 0 < Im μ < 2π or vanish"))),
    }
}

impl SeparableEngine {
    pub fn new(params: &ModelParams, families: PoleFamilies, opts: &QuadOptions) -> Result<Self> {
        check_mu(params)?;
        let contour = build_contour(params, families, opts.rel_tol.max(1e-16))?;
        Ok(Self {
            params: params.clone(),
            contour,
            opts: QuadOptions { parallel: false, ..*opts },
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    fn compute(&self, key: JKey) -> Result<Estimate> {
        if self.contour.decay() == Decay::Algebraic {
            // At μ = 0 the integrand behaves like s^{k + deg a − n/2} on one side.
            let deg = key.power as f64 - if matches!(key.factor, Factor::G(_)) { 1.0 } else { 0.0 };
            if deg - 0.5 * self.params.n() as f64 >= -1.0 {
                return Err(Error::ConvergenceRegime(format!(
                    "at μ = 0 the factor t^{} with n = {} is not integrable",
                    key.power,
                    self.params.n()
                )));
            }
        }
        let params = &self.params;
        let f = |t: Complex64| -> Result<Complex64> {
            let head = factor_value(key.factor, key.shifted, key.power, t, params)?;
            Ok(head * (ln_big_g_factor(t, key.periodic, params)? + log_phase(t, params)?).exp())
        };
        integrate_path(&f, &self.contour, &self.opts)
    }

    fn ensure(&self, keys: Vec<JKey>) -> Result<()> {
        let missing: Vec<JKey> = {
            let cache = self.cache.lock().expect("cache lock");
            let mut m: Vec<JKey> = keys.into_iter().filter(|k| !cache.contains_key(k)).collect();
            m.sort_by_key(|k| (k.factor, k.shifted, k.power, k.periodic));
            m.dedup();
            m
        };
        let computed: Vec<(JKey, Estimate)> =
            missing.into_par_iter().map(|k| self.compute(k).map(|e| (k, e))).collect::<Result<_>>()?;
        self.cache.lock().expect("cache lock").extend(computed);
        Ok(())
    }

    fn lookup(&self, key: &JKey) -> Estimate {
        self.cache.lock().expect("cache lock")[key]
    }

    /// Periodic index per variable for each signed assignment of N.
    fn assignments(n_set: &SubsetIndex, symmetrize: bool) -> Vec<(f64, Vec<usize>)> {
        let ell = n_set.len();
        let perms = if symmetrize { signed_permutations(ell) } else { vec![(1.0, (0..ell).collect())] };
        perms
            .into_iter()
            .map(|(sign, perm)| {
                let mut per_var = vec![0; ell];
                for (b, &v) in perm.iter().enumerate() {
                    per_var[v] = n_set.members()[b];
                }
                (sign, per_var)
            })
            .collect()
    }

    fn keys_for(f: &SeparableFn, assignments: &[(f64, Vec<usize>)]) -> Vec<JKey> {
        let mut keys = Vec::new();
        for (_, per_var) in assignments {
            for t in &f.terms {
                for v in 0..f.ell {
                    keys.push(JKey { factor: t.factors[v], shifted: t.shifted[v], power: t.powers[v], periodic: per_var[v] });
                }
            }
        }
        keys
    }

    /// ∫ F·G_N Πφ when `symmetrize` is false (enough for antisymmetric F);
    /// otherwise I(F, W_N) = (1/ℓ!)∫ F·W_N Πφ.
    pub fn pairing(&self, f: &SeparableFn, n_set: &SubsetIndex, symmetrize: bool) -> Result<Estimate> {
        if f.ell != n_set.len() {
            return Err(Error::ArityMismatch { expected: f.ell, found: n_set.len() });
        }
        if f.ell == 0 {
            let v: Complex64 = f.terms.iter().map(|t| t.coeff).sum();
            return Ok(Estimate::exact(v));
        }
        let assignments = Self::assignments(n_set, symmetrize);
        self.ensure(Self::keys_for(f, &assignments))?;
        let norm = if symmetrize { 1.0 / (1..=f.ell).product::<usize>() as f64 } else { 1.0 };
        let mut out = Estimate { value: Complex64::zero(), error: 0.0, tail: 0.0, evaluations: 0 };
        for (sign, per_var) in &assignments {
            for t in &f.terms {
                let js: Vec<Estimate> = (0..f.ell)
                    .map(|v| {
                        self.lookup(&JKey { factor: t.factors[v], shifted: t.shifted[v], power: t.powers[v], periodic: per_var[v] })
                    })
                    .collect();
                let c = t.coeff * sign * norm;
                let mut prod = c;
                for j in &js {
                    prod *= j.value;
                }
                let mut err = 0.0;
                for i in 0..js.len() {
                    let others: f64 = js.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, j)| j.value.norm()).product();
                    err += js[i].error * others;
                }
                out.value += prod;
                out.error += c.norm() * err;
            }
        }
        Ok(out)
    }

    /// I(F, W) for W = Σ c_N W_N.
    pub fn pairing_coeffs(&self, f: &SeparableFn, w: &PeriodicFnCoeffs, symmetrize: bool) -> Result<Estimate> {
        let mut out = Estimate { value: Complex64::zero(), error: 0.0, tail: 0.0, evaluations: 0 };
        for (s, c) in subsets(w.n(), w.ell()).iter().zip(w.coeffs()) {
            if c.is_zero() {
                continue;
            }
            let e = self.pairing(f, s, symmetrize)?;
            out.value += c * e.value;
            out.error += c.norm() * e.error;
        }
        Ok(out)
    }
}

/// The matrix [I(w_M, W_N)], rows M and columns N in lexicographic order.
#[derive(Clone, Debug)]
pub struct HyperMatrix {
    pub params: ModelParams,
    pub entries: CMatrix,
    /// Row-major error estimates.
    pub errors: Vec<f64>,
}

impl HyperMatrix {
    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn error(&self, i: usize, j: usize) -> f64 {
        self.errors[i * self.dim() + j]
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn det(&self) -> Complex64 {
        self.entries.det()
    }

    /// Ψ_W = Σ_M I(w_M, W) v_M.
    pub fn psi(&self, w: &PeriodicFnCoeffs) -> Result<TensorVector> {
        let ell = self.params.ell();
        if (w.n(), w.ell()) != (self.params.n(), ell) {
            return Err(Error::ArityMismatch { expected: ell, found: w.ell() });
        }
        Ok(TensorVector::from_weight_coords(self.params.n(), ell, &self.entries.apply(w.coeffs())))
    }
}

pub fn hyper_matrix(params: &ModelParams, opts: &QuadOptions) -> Result<HyperMatrix> {
    let engine = SeparableEngine::new(params, PoleFamilies::Standard, opts)?;
    hyper_matrix_with(&engine)
}

pub fn hyper_matrix_with(engine: &SeparableEngine) -> Result<HyperMatrix> {
    let params = engine.params();
    let (n, ell) = (params.n(), params.ell());
    let sets = subsets(n, ell);
    let d = sets.len();
    let weights: Vec<SeparableFn> = sets.iter().map(|m| SeparableFn::weight(m, params.hbar())).collect();
    // Fill the J cache in one parallel pass before assembling.
    let mut keys = Vec::new();
    for f in &weights {
        for s in &sets {
            keys.extend(SeparableEngine::keys_for(f, &SeparableEngine::assignments(s, false)));
        }
    }
    engine.ensure(keys)?;
    let cells: Vec<Estimate> = (0..d * d)
        .into_par_iter()
        .map(|k| engine.pairing(&weights[k / d], &sets[k % d], false))
        .collect::<Result<_>>()?;
    Ok(HyperMatrix {
        params: params.clone(),
        entries: Matrix::from_fn(d, d, |i, j| cells[i * d + j].value),
        errors: cells.iter().map(|e| e.error).collect(),
    })
}

/// I(w_M, W) with an error estimate.
pub fn hyper_integral(m: &SubsetIndex, w: &PeriodicFnCoeffs, params: &ModelParams, opts: &QuadOptions) -> Result<Estimate> {
    let engine = SeparableEngine::new(params, PoleFamilies::Standard, opts)?;
    engine.pairing_coeffs(&SeparableFn::weight(m, params.hbar()), w, false)
}

pub fn psi_of_w(w: &PeriodicFnCoeffs, params: &ModelParams, opts: &QuadOptions) -> Result<TensorVector> {
    hyper_matrix(params, opts)?.psi(w)
}

/// (1/ℓ!)∫ w_M·W·Πφ as a direct ℓ-fold iterated integral of the full
/// antisymmetrized integrand. Slow; used as an oracle.
pub fn hyper_integral_direct(m: &SubsetIndex, w: &PeriodicFnCoeffs, params: &ModelParams, opts: &QuadOptions) -> Result<Estimate> {
    check_mu(params)?;
    let ell = m.len();
    let contour = build_contour(params, PoleFamilies::Standard, opts.rel_tol.max(1e-16))?;
    let sets = subsets(params.n(), ell);
    let fact = (1..=ell).product::<usize>() as f64;
    let f = |t: &[Complex64]| -> Result<Complex64> {
        let log_weight: Complex64 = t.iter().map(|&ta| log_phase(ta, params)).sum::<Result<Complex64>>()?;
        let mut big_w = Complex64::zero();
        for (s, c) in sets.iter().zip(w.coeffs()) {
            if !c.is_zero() {
                big_w += c * eval_big_w_weighted(s, t, log_weight, params)?;
            }
        }
        Ok(eval_w(m, t, params)? * big_w / fact)
    };
    integrate_iterated(&f, &contour, ell, opts)
}

/// max over M, N of |I_a − I_b|/max|I| for the ℓ = 1 integrals I(w_M, W_N)
/// evaluated along the standard contour and along one moved by `offset`
/// (in units of p, with the pole corrections recomputed).
pub fn contour_shift_residual(params: &ModelParams, offset: f64, opts: &QuadOptions) -> Result<f64> {
    check_mu(params)?;
    if params.ell() != 1 {
        return Err(Error::invalid("ell", "contour comparison uses one variable"));
    }
    let tol = opts.rel_tol.max(1e-16);
    let contours = [build_contour(params, PoleFamilies::Standard, tol)?, build_contour_shifted(params, PoleFamilies::Standard, tol, offset)?];
    let sets = subsets(params.n(), 1);
    let mut diff = 0f64;
    let mut scale = 0f64;
    for m in &sets {
        for big in &sets {
            let f = |t: Complex64| -> Result<Complex64> {
                let ts = [t];
                Ok(eval_w(m, &ts, params)? * eval_big_w_weighted(big, &ts, log_phase(t, params)?, params)?)
            };
            let a = integrate_path(&f, &contours[0], opts)?.value;
            let b = integrate_path(&f, &contours[1], opts)?.value;
            diff = diff.max((a - b).norm());
            scale = scale.max(a.norm());
        }
    }
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// The closed form of det[I(w_M, W_N)] with 0 ≤ arg(e^μ − 1) < 2π.
pub fn det_closed_form(params: &ModelParams) -> Result<Complex64> {
    let (n, ell) = (params.n(), params.ell());
    let p = params.p();
    let e = params.mu().exp() - 1.0;
    if e.norm() < 1e-14 {
        return Err(Error::Singular("e^μ = 1 in the determinant formula".into()));
    }
    if ell == 0 {
        return Ok(Complex64::one());
    }
    let i = Complex64::i();
    let zsum: Complex64 = params.z().iter().sum();
    let base = (i * p).powu((n * (n - 1) / 2) as u32)
        * (i * gamma(Complex64::new(-0.5, 0.0))).powu(n as u32)
        * branch_pow(e, 0.5 * n as f64)
        * (params.mu() * zsum / p).exp();
    let outer = binomial(n - 1, ell - 1) as u32;
    let inner = if n >= 2 { binomial(n - 2, ell - 1) as i32 } else { 0 };
    let mut prod = Complex64::one();
    for k in 0..n {
        for m in k + 1..n {
            prod *= params.z()[k] - params.z()[m] - params.hbar();
        }
    }
    Ok(base.powu(outer) * prod.powi(-inner))
}

/// ‖Σ⁺ψ‖/‖ψ‖: distance of a weight-ℓ vector from the singular subspace.
pub fn singular_defect(psi: &TensorVector) -> f64 {
    let raise: TensorOperator = global_sl2(SiteKind::Plus, psi.n());
    let norm = psi.norm();
    if norm == 0.0 {
        return 0.0;
    }
    raise.apply(psi).norm() / norm
}

/// ‖Ψ_W(…, z_m + p, …) − K_m(z)Ψ_W(z)‖/‖Ψ_W(z)‖.
pub fn qkz_shift_residual(w: &PeriodicFnCoeffs, params: &ModelParams, m: usize, opts: &QuadOptions) -> Result<f64> {
    let psi = hyper_matrix(params, opts)?.psi(w)?;
    let psi_shift = hyper_matrix(&params.shifted(m), opts)?.psi(w)?;
    let k = qkz_k(m, params)?;
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::Singular("Ψ_W vanishes".into()));
    }
    Ok(psi_shift.sub(&k.apply(&psi)).norm() / norm)
}

/// Default step for the μ-derivative.
pub const MU_STEP: f64 = 1e-2;

/// ‖p ∂_μΨ − L(μ)Ψ‖/‖Ψ‖, with the derivative from Richardson-extrapolated
/// central differences at steps δ and δ/2.
pub fn mu_ode_residual(w: &PeriodicFnCoeffs, params: &ModelParams, delta: f64, opts: &QuadOptions) -> Result<f64> {
    let mu = params.mu();
    let psi_at = |d: f64| -> Result<TensorVector> { hyper_matrix(&params.with_mu(mu + d), opts)?.psi(w) };
    let central = |d: f64| -> Result<TensorVector> { Ok(psi_at(d)?.sub(&psi_at(-d)?).scale(Complex64::new(0.5 / d, 0.0))) };
    let coarse = central(delta)?;
    let fine = central(0.5 * delta)?;
    let deriv = fine.scale(Complex64::new(4.0 / 3.0, 0.0)).sub(&coarse.scale(Complex64::new(1.0 / 3.0, 0.0)));
    let psi = psi_at(0.0)?;
    let norm = psi.norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let l = mu_generator_l(params)?;
    Ok(deriv.scale(params.p()).sub(&l.apply(&psi)).norm() / norm)
}

/// I of a sum of pieces, with the sum of |I(piece)| as the scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferenceResidual {
    pub value: Complex64,
    pub scale: f64,
    pub error: f64,
}

impl DifferenceResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.value.norm() / self.scale
        }
    }
}

fn pieces_residual(engine: &SeparableEngine, pieces: &[SeparableFn], w: &PeriodicFnCoeffs) -> Result<DifferenceResidual> {
    let mut out = DifferenceResidual { value: Complex64::zero(), scale: 0.0, error: 0.0 };
    for piece in pieces {
        let e = engine.pairing_coeffs(piece, w, true)?;
        out.value += e.value;
        out.scale += e.value.norm();
        out.error += e.error;
    }
    Ok(out)
}

/// Engine for total-difference integrals: the contour separating the
/// extended pole families.
pub fn difference_engine(params: &ModelParams, opts: &QuadOptions) -> Result<SeparableEngine> {
    SeparableEngine::new(params, PoleFamilies::ShiftExtended, opts)
}

/// |I(D₁f, W)| relative to |I(f, W)| + |I(e^μ f(t₁+p)·ratio, W)|.
pub fn total_difference_residual(f: &SeparableFn, w: &PeriodicFnCoeffs, engine: &SeparableEngine) -> Result<DifferenceResidual> {
    let shifted = f.shifted_part(0, engine.params().mu())?;
    pieces_residual(engine, &[f.clone(), shifted], w)
}

/// I(r_M, W) from the expanded closed form, and from Σ_a ħ⁻¹Asym(D₁f_a).
///
/// At μ = 0 the pieces of the second form can diverge separately even
/// though their sum converges; it is then `None`.
pub fn r_m_residuals(m: &SubsetIndex, w: &PeriodicFnCoeffs, engine: &SeparableEngine) -> Result<(DifferenceResidual, Option<DifferenceResidual>)> {
    let params = engine.params();
    let (n, hbar, mu) = (params.n(), params.hbar(), params.mu());
    let e = mu.exp();
    let c = (e - 1.0) / hbar;
    let ell = m.len();
    let wm = SeparableFn::weight(m, hbar);
    let zsum: Complex64 = m.members().iter().map(|&k| params.z()[k - 1]).sum();

    let mut closed = vec![wm.scale(c * zsum + e * ell as f64)];
    for &mm in m.members() {
        for k in (1..=n).filter(|k| !m.contains(*k)) {
            let swapped = m.without(mm).insert_front(k).expect("k ∉ M").1;
            let coeff = if k < mm { Complex64::one() } else { e };
            closed.push(SeparableFn::weight(&swapped, hbar).scale(coeff));
        }
    }
    if c != Complex64::zero() {
        for a in 0..ell {
            closed.push(wm.times_variable(a)?.scale(-c));
        }
    }

    let mut diffs = Vec::new();
    for &ma in m.members() {
        let rest = m.without(ma);
        let mut factors = vec![Factor::One];
        factors.extend(rest.members().iter().map(|&r| Factor::G(r)));
        let mut pairs: Vec<(usize, usize)> = (1..ell).map(|b| (0, b)).collect();
        for a in 1..ell {
            for b in a + 1..ell {
                pairs.push((a, b));
            }
        }
        let f = SeparableFn::coupled(factors, &pairs, hbar);
        diffs.push(f.asym().scale(1.0 / hbar));
        diffs.push(f.shifted_part(0, mu)?.asym().scale(1.0 / hbar));
    }
    let closed = pieces_residual(engine, &closed, w)?;
    let diffs = match pieces_residual(engine, &diffs, w) {
        Ok(d) => Some(d),
        Err(Error::ConvergenceRegime(_)) if engine.contour().decay() == Decay::Algebraic => None,
        Err(e) => return Err(e),
    };
    Ok((closed, diffs))
}

/// Rank, kernel and image of the hypergeometric map at μ = 0.
#[derive(Clone, Debug)]
pub struct KernelReport {
    pub n: usize,
    pub ell: usize,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub expected_rank: usize,
    /// σ_rank/σ_{rank+1}; infinite when nothing is dropped.
    pub gap: f64,
    /// Largest principal angle between the numerical kernel and
    /// im X⁽¹⁾ + im X⁽²⁾.
    pub kernel_angle: f64,
    /// Largest principal angle between the numerical image and the
    /// singular subspace.
    pub image_angle: f64,
    /// max over columns of ‖Σ⁺·column‖/‖column‖.
    pub singular_defect: f64,
    /// max over X-image vectors x of ‖H x‖/(‖H‖‖x‖).
    pub x_inclusion: f64,
    pub exact_kernel_dim: usize,
}

impl KernelReport {
    pub fn conclusive(&self) -> bool {
        self.gap >= RANK_GAP
    }
}

/// Exact basis of im X⁽¹⁾ + im X⁽²⁾ at weight ℓ, as columns.
pub fn exact_kernel(n: usize, ell: usize) -> Result<crate::QMatrix> {
    let mut m = x_matrix(1, n, ell)?;
    if ell >= 2 {
        m = m.hstack(&x_matrix(2, n, ell)?);
    }
    let cols = m.column_space();
    Ok(Matrix::from_columns(&cols, binomial(n, ell)))
}

pub fn kernel_report(params: &ModelParams, opts: &QuadOptions) -> Result<KernelReport> {
    let (n, ell) = (params.n(), params.ell());
    if params.mu() != Complex64::zero() {
        return Err(Error::invalid("mu", "the kernel report is taken at μ = 0"));
    }
    if ell == 0 || 2 * ell > n {
        return Err(Error::ConvergenceRegime(format!("kernel report needs 1 ≤ ℓ and 2ℓ ≤ n, got n = {n}, ℓ = {ell}")));
    }
    let h = hyper_matrix(params, opts)?;
    analyze_kernel(&h)
}

/// The kernel analysis of an already computed μ = 0 matrix.
pub fn analyze_kernel(h: &HyperMatrix) -> Result<KernelReport> {
    analyze_kernel_with(h, RANK_THRESHOLD)
}

/// As [`analyze_kernel`] with singular values below `threshold·σ_max`
/// counted as zero.
pub fn analyze_kernel_with(h: &HyperMatrix, threshold: f64) -> Result<KernelReport> {
    let (n, ell) = (h.params.n(), h.params.ell());
    let svd = h.entries.svd();
    let sv = svd.singular_values.clone();
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > threshold * smax).count();
    let gap = if rank < sv.len() { sv[rank - 1] / sv[rank] } else { f64::INFINITY };
    let d = sv.len();

    let exact = exact_kernel(n, ell)?;
    let exact_q = exact.to_complex().orthonormal_column_basis(1e-12);
    let kernel_num = Matrix::from_fn(d, d - rank, |i, j| svd.v[(i, rank + j)]);
    let kernel_angle = subspace_distance(&kernel_num, &exact_q);

    let image_num = Matrix::from_fn(d, rank, |i, j| svd.u[(i, j)]);
    let sing = singular_coordinates(n, ell);
    let image_angle = subspace_distance(&image_num, &sing);

    let mut defect = 0f64;
    for j in 0..d {
        let col = TensorVector::from_weight_coords(n, ell, &h.entries.column(j));
        defect = defect.max(singular_defect(&col));
    }

    let hnorm = smax;
    let mut x_inclusion = 0f64;
    for j in 0..exact.cols() {
        let x: Vec<Complex64> = exact.column(j).iter().map(Field::to_complex).collect();
        let r = vec_norm(&h.entries.apply(&x)) / (hnorm * vec_norm(&x));
        x_inclusion = x_inclusion.max(r);
    }

    Ok(KernelReport {
        n,
        ell,
        singular_values: sv,
        rank,
        expected_rank: binomial(n, ell) - binomial(n, ell - 1),
        gap,
        kernel_angle,
        image_angle,
        singular_defect: defect,
        x_inclusion,
        exact_kernel_dim: exact.cols(),
    })
}

/// Convergence of H(iε) to H(0) as ε → 0 (2ℓ ≤ n).
#[derive(Clone, Debug)]
pub struct ContinuityReport {
    pub eps: Vec<f64>,
    /// ‖H(iε) − H(0)‖/‖H(0)‖
    pub distances: Vec<f64>,
    /// Same for the extrapolation 2H(iε/2) − H(iε) at the last pair.
    pub richardson_distance: f64,
}

impl ContinuityReport {
    /// Distances shrink at every step.
    pub fn cauchy(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }
}

pub const CONTINUITY_EPS: [f64; 3] = [0.2, 0.1, 0.05];
/// ε values for extrapolating Ψ_W(iε) to zero. The decay is O(ε²), so three
/// points leave an O(ε³) truncation term of the same size as the signal.
pub const EXPONENTIAL_EPS: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

pub fn mu_zero_continuity(params: &ModelParams, eps: &[f64], opts: &QuadOptions) -> Result<ContinuityReport> {
    let base = hyper_matrix(&params.with_mu(Complex64::zero()), opts)?;
    let norm = base.entries.frobenius_norm();
    let mats: Vec<HyperMatrix> =
        eps.iter().map(|&e| hyper_matrix(&params.with_mu(Complex64::new(0.0, e)), opts)).collect::<Result<_>>()?;
    let distances = mats.iter().map(|m| (&m.entries - &base.entries).frobenius_norm() / norm).collect();
    let richardson_distance = match mats.len() {
        0 | 1 => f64::NAN,
        k => {
            let extrapolated = &mats[k - 1].entries.scale(&Complex64::new(2.0, 0.0)) - &mats[k - 2].entries;
            (&extrapolated - &base.entries).frobenius_norm() / norm
        }
    };
    Ok(ContinuityReport { eps: eps.to_vec(), distances, richardson_distance })
}

/// Value at ε = 0 of the interpolating polynomial through (eps_k, v_k).
fn neville_at_zero(eps: &[f64], mut v: Vec<TensorVector>) -> TensorVector {
    let k = v.len();
    for level in 1..k {
        for i in 0..k - level {
            let (a, b) = (eps[i], eps[i + level]);
            // p(0) = (b·p_i − a·p_{i+1})/(b − a)
            v[i] = v[i].scale(Complex64::new(b / (b - a), 0.0)).sub(&v[i + 1].scale(Complex64::new(a / (b - a), 0.0)));
        }
    }
    v.swap_remove(0)
}

/// Ψ_W at μ = iε for W in the exponential subspace (2ℓ > n allowed).
#[derive(Clone, Debug)]
pub struct ExponentialSubspaceReport {
    pub eps: Vec<f64>,
    /// max over basis W of ‖Ψ_W(iε)‖/‖W‖
    pub norms: Vec<f64>,
    /// max over W of the polynomial (Neville) extrapolation of Ψ_W(iε)
    /// to ε = 0 through all sample points, normalized the same way.
    pub extrapolated: f64,
}

pub fn exponential_subspace_limit(params: &ModelParams, eps: &[f64], opts: &QuadOptions) -> Result<ExponentialSubspaceReport> {
    let (n, ell) = (params.n(), params.ell());
    let basis = crate::weight_functions::exponential_subspace_basis(n, ell);
    if basis.is_empty() {
        return Err(Error::invalid("ell", "the exponential subspace is trivial"));
    }
    let mut vectors: Vec<Vec<TensorVector>> = Vec::new();
    for &e in eps {
        let h = hyper_matrix(&params.with_mu(Complex64::new(0.0, e)), opts)?;
        vectors.push(basis.iter().map(|w| h.psi(w)).collect::<Result<_>>()?);
    }
    let wnorm = |w: &PeriodicFnCoeffs| vec_norm(w.coeffs());
    let norms = vectors
        .iter()
        .map(|vs| vs.iter().zip(&basis).map(|(v, w)| v.norm() / wnorm(w)).fold(0.0, f64::max))
        .collect();
    let extrapolated = (0..basis.len())
        .map(|j| {
            let column: Vec<TensorVector> = vectors.iter().map(|vs| vs[j].clone()).collect();
            neville_at_zero(eps, column).norm() / wnorm(&basis[j])
        })
        .fold(0.0, f64::max);
    Ok(ExponentialSubspaceReport { eps: eps.to_vec(), norms, extrapolated })
}
