//! Exact exterior algebra ℂ[ξ₁..ξ_n] over the Gaussian rationals.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{orthogonal_complement, principal_angles, subspace_distance, Matrix};
use crate::scalar::{Field, GaussianRational};
use crate::tensor_space::{binomial, subsets, SubsetIndex, TensorOperator};

type Q = GaussianRational;
type QMatrix = Matrix<Q>;

/// Sign of ξ_A ξ_B = ±ξ_{A∪B} for disjoint masks.
fn merge_sign(a: usize, b: usize) -> i32 {
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        inversions += (a >> (bit + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Σ c_S ξ_S, S a set of generators stored as a bitmask (bit m−1 for ξ_m).
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannElement {
    n: usize,
    terms: BTreeMap<usize, Q>,
}

impl GrassmannElement {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::zero(n).with_term(0, Q::one())
    }

    /// The generator ξ_m, 1-based.
    pub fn generator(m: usize, n: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::IndexOutOfRange { index: m, n });
        }
        Ok(Self::zero(n).with_term(1 << (m - 1), Q::one()))
    }

    /// c·ξ_{m₁}…ξ_{m_k} for M = {m₁ < … < m_k}.
    pub fn monomial(m: &SubsetIndex, coeff: Q, n: usize) -> Result<Self> {
        if let Some(&bad) = m.members().iter().find(|&&x| x > n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        Ok(Self::zero(n).with_term(m.mask(), coeff))
    }

    /// Homogeneous element of degree ℓ from coordinates on the ℓ-subsets
    /// in lexicographic order.
    pub fn from_coords(n: usize, ell: usize, coords: &[Q]) -> Self {
        let mut out = Self::zero(n);
        for (s, c) in subsets(n, ell).iter().zip(coords) {
            out = out.with_term(s.mask(), c.clone());
        }
        out
    }

    fn with_term(mut self, mask: usize, c: Q) -> Self {
        self.add_term(mask, c);
        self
    }

    fn add_term(&mut self, mask: usize, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mask).or_insert_with(Q::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&mask);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (SubsetIndex, &Q)> {
        self.terms.iter().map(|(&m, c)| (SubsetIndex::from_mask(m), c))
    }

    pub fn coefficient(&self, m: &SubsetIndex) -> Q {
        self.terms.get(&m.mask()).cloned().unwrap_or_else(Q::zero)
    }

    /// Coordinates of the degree-ℓ part on the ℓ-subsets (lexicographic).
    pub fn coords(&self, ell: usize) -> Vec<Q> {
        subsets(self.n, ell).iter().map(|s| self.coefficient(s)).collect()
    }

    /// Some(k) if every term has degree k; the zero element has no degree.
    pub fn degree(&self) -> Option<usize> {
        let mut degs = self.terms.keys().map(|m| m.count_ones() as usize);
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {} generators", self.n, other.n)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (&m, c) in &other.terms {
            out.add_term(m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut out = Self::zero(self.n);
        for (&m, c) in &self.terms {
            out.add_term(m, c.clone() * s.clone());
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = Self::zero(self.n);
        for (&a, ca) in &self.terms {
            for (&b, cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                let c = ca.clone() * cb.clone();
                let c = if merge_sign(a, b) == 1 { c } else { -c };
                out.add_term(a | b, c);
            }
        }
        Ok(out)
    }

    /// Left derivation ∂_k: ∂_k(ξ_k ξ_S) = ξ_S for k ∉ S.
    pub fn derivation(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return Err(Error::IndexOutOfRange { index: k, n: self.n });
        }
        let bit = 1 << (k - 1);
        let mut out = Self::zero(self.n);
        for (&m, c) in &self.terms {
            if m & bit == 0 {
                continue;
            }
            let below = (m & (bit - 1)).count_ones();
            let c = if below.is_multiple_of(2) { c.clone() } else { -c.clone() };
            out.add_term(m & !bit, c);
        }
        Ok(out)
    }

    /// Contraction with the linear form ξ_m ↦ κ_m (a graded derivation).
    pub fn contract(&self, kappa: &[Q]) -> Result<Self> {
        if kappa.len() != self.n {
            return Err(Error::DimensionMismatch(format!("{} form values for {} generators", kappa.len(), self.n)));
        }
        let mut out = Self::zero(self.n);
        for (k, value) in kappa.iter().enumerate() {
            if !value.is_zero() {
                out = out.add(&self.derivation(k + 1)?.scale(value))?;
            }
        }
        Ok(out)
    }
}

/// φ⁽¹⁾ = Σ ξ_m over n generators.
pub fn phi1(n: usize) -> GrassmannElement {
    let mut out = GrassmannElement::zero(n);
    for m in 0..n {
        out.add_term(1 << m, Q::one());
    }
    out
}

/// φ⁽²⁾ = Σ_{k<m} ξ_k ξ_m over n generators.
pub fn phi2(n: usize) -> GrassmannElement {
    let mut out = GrassmannElement::zero(n);
    for k in 0..n {
        for m in k + 1..n {
            out.add_term(1 << k | 1 << m, Q::one());
        }
    }
    out
}

/// φ̃ = Σ_{1≤k<m<n} ξ_kξ_m, living on the first n − 1 generators.
pub fn phi_tilde(n: usize) -> GrassmannElement {
    phi2(n.saturating_sub(1))
}

/// (φ⁽¹⁾, φ⁽²⁾, φ̃).
pub fn phi_elements(n: usize) -> (GrassmannElement, GrassmannElement, GrassmannElement) {
    (phi1(n), phi2(n), phi_tilde(n))
}

/// The same element seen in an algebra with more generators.
pub fn embed(e: &GrassmannElement, n: usize) -> Result<GrassmannElement> {
    if n < e.n {
        return Err(Error::DimensionMismatch(format!("cannot embed {} generators into {n}", e.n)));
    }
    Ok(GrassmannElement { n, terms: e.terms.clone() })
}

/// Matrix of left multiplication by a homogeneous `a` from degree `from`
/// to degree `from + deg a`, on lexicographic subset coordinates.
pub fn wedge_matrix(a: &GrassmannElement, from: usize) -> QMatrix {
    let n = a.n;
    let k = a.degree().unwrap_or(0);
    if from + k > n {
        return Matrix::zeros(0, binomial(n, from));
    }
    let cols: Vec<Vec<Q>> = subsets(n, from)
        .iter()
        .map(|s| {
            let e = GrassmannElement::monomial(s, Q::one(), n).expect("subset within range");
            a.wedge(&e).expect("same generator count").coords(from + k)
        })
        .collect();
    Matrix::from_columns(&cols, binomial(n, from + k))
}

fn rank_of(m: &QMatrix) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        0
    } else {
        m.rank()
    }
}

/// Exact ranks of the maps in the dimension identities at weight ℓ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageDims {
    pub n: usize,
    pub ell: usize,
    /// dim φ⁽¹⁾ℂ[ξ]_{ℓ−1}
    pub phi1: usize,
    /// dim φ⁽²⁾ℂ[ξ]_{ℓ−2}
    pub phi2: usize,
    /// dim of the sum of the two images
    pub sum: usize,
    /// dim φ̃ℂ[ξ₁..ξ_{n−1}]_{ℓ−2}
    pub phi_tilde: usize,
    /// min(C(n−1, ℓ−2), C(n−1, ℓ))
    pub phi_tilde_min: usize,
}

impl ImageDims {
    /// C(n, ℓ−1) when 2ℓ ≤ n; no claim otherwise.
    pub fn sum_expected(&self) -> Option<usize> {
        (2 * self.ell <= self.n).then(|| if self.ell == 0 { 0 } else { binomial(self.n, self.ell - 1) })
    }

    pub fn holds(&self) -> bool {
        self.sum_expected().is_none_or(|e| e == self.sum) && self.phi_tilde == self.phi_tilde_min
    }
}

pub fn image_dims(n: usize, ell: usize) -> Result<ImageDims> {
    if ell > n {
        return Err(Error::invalid("ell", format!("weight {ell} exceeds n = {n}")));
    }
    let m1 = (ell >= 1).then(|| wedge_matrix(&phi1(n), ell - 1));
    let m2 = (ell >= 2).then(|| wedge_matrix(&phi2(n), ell - 2));
    let phi1_dim = m1.as_ref().map_or(0, rank_of);
    let phi2_dim = m2.as_ref().map_or(0, rank_of);
    let sum = match (&m1, &m2) {
        (Some(a), Some(b)) => rank_of(&a.hstack(b)),
        (Some(a), None) => rank_of(a),
        _ => 0,
    };
    let (phi_tilde, phi_tilde_min) = if ell >= 2 && n >= 1 {
        (rank_of(&wedge_matrix(&phi_tilde(n), ell - 2)), binomial(n - 1, ell - 2).min(binomial(n - 1, ell)))
    } else {
        (0, 0)
    };
    Ok(ImageDims { n, ell, phi1: phi1_dim, phi2: phi2_dim, sum, phi_tilde, phi_tilde_min })
}

/// Matrix of a linear map on the whole algebra with `n` generators,
/// basis indexed by bitmask.
fn operator_matrix(n: usize, f: impl Fn(&GrassmannElement) -> GrassmannElement) -> QMatrix {
    let d = 1usize << n;
    let mut m = Matrix::zeros(d, d);
    for col in 0..d {
        let image = f(&GrassmannElement::zero(n).with_term(col, Q::one()));
        for (&row, c) in &image.terms {
            m[(row, col)] = c.clone();
        }
    }
    m
}

/// ζ_k for the change of variables on ξ₁..ξ_{n−1}, 1 ≤ k ≤ n − 1.
pub fn zeta(k: usize, n: usize) -> Result<GrassmannElement> {
    let gens = n - 1;
    if k == 0 || k > gens {
        return Err(Error::IndexOutOfRange { index: k, n: gens });
    }
    let range = if 2 * k < n {
        k..=n - k - 1
    } else if 2 * k == n {
        k..=k
    } else {
        let j = n - k;
        j + 1..=n - j
    };
    let mut out = GrassmannElement::zero(gens);
    for m in range {
        out.add_term(1 << (m - 1), Q::one());
    }
    Ok(out)
}

/// Outcome of the exact ζ-variable sl₂ checks on ℂ[ξ₁..ξ_{n−1}].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZetaSl2Report {
    pub n: usize,
    pub graded_dims: Vec<usize>,
    /// φ̃ = Σ_{k<n/2} ζ_kζ_{n−k}
    pub phi_tilde_in_zeta: bool,
    /// ∂_kζ̂_m + ζ̂_m∂_k = δ_{km} as operators
    pub anticommutators: bool,
    /// [h, φ̂] = 2φ̂ and [h, D] = −2D with h = [D, φ̂]
    pub relations: bool,
    pub top_degree_annihilated: bool,
    /// h acts semisimply with integer eigenvalues on each degree
    pub semisimple: bool,
    /// (ℓ, rank of φ̂ from degree ℓ−2, rank predicted by the weight decomposition)
    pub weight_ranks: Vec<(usize, usize, usize)>,
}

impl ZetaSl2Report {
    pub fn holds(&self) -> bool {
        self.phi_tilde_in_zeta
            && self.anticommutators
            && self.relations
            && self.top_degree_annihilated
            && self.semisimple
            && self.weight_ranks.iter().all(|&(_, a, b)| a == b)
    }
}

pub fn zeta_sl2_check(n: usize) -> Result<ZetaSl2Report> {
    if n < 2 {
        return Err(Error::invalid("n", "the ζ-variables need n ≥ 2"));
    }
    let gens = n - 1;
    let zetas: Vec<GrassmannElement> = (1..=gens).map(|k| zeta(k, n)).collect::<Result<_>>()?;

    let mut sum = GrassmannElement::zero(gens);
    for k in (1..=gens).filter(|&k| 2 * k < n) {
        sum = sum.add(&zetas[k - 1].wedge(&zetas[n - k - 1])?)?;
    }
    let phi_t = phi_tilde(n);
    let phi_tilde_in_zeta = sum == phi_t;

    // ζ_m = Σ_j A_{mj} ξ_j, so the dual derivations are ∂^ζ_k = Σ_j (A⁻¹)_{jk} ∂^ξ_j.
    let a = Matrix::from_fn(gens, gens, |m, j| zetas[m].coefficient(&SubsetIndex::from_mask(1 << j)));
    let b = a.inverse().ok_or_else(|| Error::Singular("ζ change of variables".into()))?;
    let d_xi: Vec<QMatrix> = (1..=gens).map(|j| operator_matrix(gens, |e| e.derivation(j).expect("in range"))).collect();
    let d_zeta: Vec<QMatrix> = (0..gens)
        .map(|k| {
            (0..gens).fold(Matrix::zeros(1 << gens, 1 << gens), |acc: QMatrix, j| &acc + &d_xi[j].scale(&b[(j, k)]))
        })
        .collect();
    let mult = |x: &GrassmannElement| operator_matrix(gens, |e| x.wedge(e).expect("same generators"));
    let zeta_hat: Vec<QMatrix> = zetas.iter().map(mult).collect();
    let id = QMatrix::identity(1 << gens);
    let mut anticommutators = true;
    for k in 0..gens {
        for m in 0..gens {
            let ac = d_zeta[k].anticommutator(&zeta_hat[m]);
            let expect = if k == m { id.clone() } else { QMatrix::zeros(1 << gens, 1 << gens) };
            anticommutators &= ac == expect;
        }
    }

    let mut d_op = QMatrix::zeros(1 << gens, 1 << gens);
    for k in (1..=gens).filter(|&k| 2 * k < n) {
        d_op = &d_op + &d_zeta[k - 1].matmul(&d_zeta[n - k - 1]);
    }
    let phi_hat = mult(&phi_t);
    let h = d_op.commutator(&phi_hat);
    let two = Q::from_ints(2, 0);
    let relations = h.commutator(&phi_hat) == phi_hat.scale(&two) && h.commutator(&d_op) == d_op.scale(&-two);

    let top = GrassmannElement::zero(gens).with_term((1 << gens) - 1, Q::one());
    let top_degree_annihilated = phi_t.wedge(&top)?.is_zero();

    // Joint (degree, h-weight) multiplicities. The rank of a raising map
    // V_w → V_{w+2} in a finite-dimensional sl₂-module is min of the two
    // dimensions.
    let degree_masks = |d: usize| -> Vec<usize> { subsets(gens, d).iter().map(SubsetIndex::mask).collect() };
    let weight_span = gens as i64;
    let mut semisimple = true;
    let mut mults: Vec<BTreeMap<i64, usize>> = Vec::new();
    for d in 0..=gens {
        let idx = degree_masks(d);
        let block = h.submatrix(&idx, &idx);
        let mut per = BTreeMap::new();
        let mut total = 0;
        for w in -weight_span..=weight_span {
            let shifted = &block - &QMatrix::identity(idx.len()).scale(&Q::from_ints(w, 0));
            let nullity = idx.len() - rank_of(&shifted);
            if nullity > 0 {
                per.insert(w, nullity);
                total += nullity;
            }
        }
        semisimple &= total == idx.len();
        mults.push(per);
    }
    let weight_ranks = (2..=gens)
        .map(|ell| {
            let direct = rank_of(&wedge_matrix(&phi_t, ell - 2));
            let predicted = mults[ell - 2]
                .iter()
                .map(|(w, &dim)| dim.min(mults[ell].get(&(w + 2)).copied().unwrap_or(0)))
                .sum();
            (ell, direct, predicted)
        })
        .collect();

    Ok(ZetaSl2Report {
        n,
        graded_dims: (0..=gens).map(|d| binomial(gens, d)).collect(),
        phi_tilde_in_zeta,
        anticommutators,
        relations,
        top_degree_annihilated,
        semisimple,
        weight_ranks,
    })
}

/// ρ(ξ_m) = (−i)^m σ³₁…σ³_{m−1}σ⁻_m.
pub fn jw_generator(m: usize, n: usize) -> Result<TensorOperator<Q>> {
    if m == 0 || m > n {
        return Err(Error::IndexOutOfRange { index: m, n });
    }
    let bit = 1usize << (m - 1);
    let phase = Q::minus_i_pow(m);
    Ok(TensorOperator::from_action(n, |b| {
        if b & bit != 0 {
            return vec![];
        }
        let c = if (b & (bit - 1)).count_ones().is_multiple_of(2) { phase.clone() } else { -phase.clone() };
        vec![(b | bit, c)]
    }))
}

/// ρ(e) for the Jordan–Wigner representation.
pub fn jw_rep(e: &GrassmannElement) -> Result<TensorOperator<Q>> {
    let n = e.n;
    let gens: Vec<TensorOperator<Q>> = (1..=n).map(|m| jw_generator(m, n)).collect::<Result<_>>()?;
    let mut out = TensorOperator::zero(n);
    for (&mask, c) in &e.terms {
        let s = SubsetIndex::from_mask(mask);
        let prod = s.members().iter().fold(TensorOperator::identity(n), |acc, &m| acc.compose(&gens[m - 1]));
        out = out.add(&prod.scale(c));
    }
    Ok(out)
}

/// All 2ⁿ monomial images are linearly independent.
pub fn jw_faithful(n: usize) -> Result<bool> {
    let d = 1usize << n;
    let cols: Vec<Vec<Q>> = (0..d)
        .map(|mask| {
            let op = jw_rep(&GrassmannElement::zero(n).with_term(mask, Q::one()))?;
            let m = op.matrix();
            Ok((0..d * d).map(|k| m[(k / d, k % d)].clone()).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::from_columns(&cols, d * d).rank() == d)
}

/// The scalar (−i)^{Σm_a} with ξ_{m₁}…ξ_{m_k} ↦ (−i)^{Σm_a} v_M.
pub fn intertwiner(m: &SubsetIndex) -> Q {
    Q::minus_i_pow(m.sum())
}

/// Image of an element under the intertwiner, as coordinates on the
/// basis v_M of V^⊗n (indexed by bitmask).
pub fn intertwine(e: &GrassmannElement) -> Vec<Q> {
    let mut out = vec![Q::zero(); 1 << e.n];
    for (&mask, c) in &e.terms {
        out[mask] = c.clone() * intertwiner(&SubsetIndex::from_mask(mask));
    }
    out
}

/// Laurent polynomial in q with Gaussian rational coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Laurent(BTreeMap<i32, Q>);

impl Laurent {
    pub fn monomial(e: i32, c: Q) -> Self {
        let mut out = Self::default();
        out.add_term(e, c);
        out
    }

    fn add_term(&mut self, e: i32, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.0.entry(e).or_insert_with(Q::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.0.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&e, c) in &other.0 {
            out.add_term(e, c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::default();
        for (&a, ca) in &self.0 {
            for (&b, cb) in &other.0 {
                out.add_term(a + b, ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Exact quotient by 1 + q², or None if it leaves a remainder.
    pub fn div_one_plus_q2(&self) -> Option<Self> {
        let Some(&low) = self.0.keys().next() else { return Some(Self::default()) };
        let mut rest = self.clone();
        let mut quotient = Self::default();
        while let Some((&top, c)) = rest.0.iter().next_back() {
            if top < low + 2 {
                break;
            }
            let c = c.clone();
            quotient.add_term(top - 2, c.clone());
            rest.add_term(top, -c.clone());
            rest.add_term(top - 2, -c);
        }
        rest.is_zero().then_some(quotient)
    }

    pub fn eval<S: Field>(&self, q: &S) -> S {
        self.0.iter().fold(S::zero(), |acc, (&e, c)| acc + scalar_from_q::<S>(c) * q.powi(e))
    }
}

fn scalar_from_q<S: Field>(c: &Q) -> S {
    // Coefficients here are small Gaussian integers.
    let z = c.to_complex();
    S::from_i64(z.re.round() as i64) + S::imag_unit() * S::from_i64(z.im.round() as i64)
}

/// Exponent e of the q^e coefficient of σ⁻_m in F(q) acting on basis mask b.
fn f_exponent(b: usize, m: usize) -> i32 {
    let below = b & ((1 << (m - 1)) - 1);
    2 * below.count_ones() as i32 - (m as i32 - 1)
}

/// F(q) = Σ_m q^{−σ³₁}…q^{−σ³_{m−1}}σ⁻_m at a numeric or exact q.
pub fn f_q<S: Field>(q: &S, n: usize) -> TensorOperator<S> {
    TensorOperator::from_action(n, |b| {
        (1..=n)
            .filter(|&m| b & (1 << (m - 1)) == 0)
            .map(|m| (b | 1 << (m - 1), q.powi(f_exponent(b, m))))
            .collect()
    })
}

/// E(q) = Σ_m σ⁺_m q^{σ³_{m+1}}…q^{σ³_n}, the coproduct image of e.
pub fn e_q<S: Field>(q: &S, n: usize) -> TensorOperator<S> {
    TensorOperator::from_action(n, |b| {
        (1..=n)
            .filter(|&m| b & (1 << (m - 1)) != 0)
            .map(|m| {
                let above = (b >> m).count_ones() as i32;
                let e = (n - m) as i32 - 2 * above;
                (b ^ 1 << (m - 1), q.powi(e))
            })
            .collect()
    })
}

/// F(q)² with Laurent polynomial entries, dense 2ⁿ×2ⁿ.
fn f_q_squared_laurent(n: usize) -> Vec<Vec<Laurent>> {
    let d = 1usize << n;
    let mut f = vec![vec![Laurent::default(); d]; d];
    for (b, col) in (0..d).map(|b| (b, b)) {
        for m in (1..=n).filter(|&m| b & (1 << (m - 1)) == 0) {
            f[b | 1 << (m - 1)][col].add_term(f_exponent(b, m), Q::one());
        }
    }
    let mut sq = vec![vec![Laurent::default(); d]; d];
    for i in 0..d {
        for k in 0..d {
            if f[i][k].is_zero() {
                continue;
            }
            for j in 0..d {
                if !f[k][j].is_zero() {
                    sq[i][j] = sq[i][j].add(&f[i][k].mul(&f[k][j]));
                }
            }
        }
    }
    sq
}

/// F⁽¹⁾ = −iF(i), exact.
pub fn f1(n: usize) -> TensorOperator<Q> {
    f_q(&Q::imag_unit(), n).scale(&-Q::imag_unit())
}

/// F⁽²⁾ = −lim_{q→i} F(q)²/(1+q²), by exact division of each entry.
pub fn f2(n: usize) -> Result<TensorOperator<Q>> {
    let sq = f_q_squared_laurent(n);
    let d = 1usize << n;
    let mut m = Matrix::zeros(d, d);
    let i = Q::imag_unit();
    for (r, row) in sq.iter().enumerate() {
        for (c, entry) in row.iter().enumerate() {
            let quot = entry
                .div_one_plus_q2()
                .ok_or_else(|| Error::Singular(format!("F(q)² entry ({r},{c}) is not divisible by 1 + q²")))?;
            m[(r, c)] = -quot.eval(&i);
        }
    }
    TensorOperator::from_matrix(n, m)
}

/// True if every entry of F(q)² is divisible by 1 + q².
pub fn f_squared_divisible(n: usize) -> bool {
    f_q_squared_laurent(n).iter().flatten().all(|e| e.div_one_plus_q2().is_some())
}

/// Σ_{k<m} (−i)^{k+m} σ⁻_k σ³_{k+1}…σ³_{m−1} σ⁻_m, the closed form of F⁽²⁾.
pub fn f2_closed(n: usize) -> TensorOperator<Q> {
    TensorOperator::from_action(n, |b| {
        let mut out = Vec::new();
        for k in 1..=n {
            for m in k + 1..=n {
                let (bk, bm) = (1usize << (k - 1), 1usize << (m - 1));
                if b & bk != 0 || b & bm != 0 {
                    continue;
                }
                let between = (b & (bm - 1) & !(2 * bk - 1)).count_ones();
                let c = Q::minus_i_pow(k + m);
                out.push((b | bk | bm, if between % 2 == 0 { c } else { -c }));
            }
        }
        out
    })
}

/// F(q), F⁽¹⁾ and F⁽²⁾ on V^⊗n.
#[derive(Clone, Debug)]
pub struct FqOps {
    pub f_q: TensorOperator<Complex64>,
    pub f1: TensorOperator<Q>,
    pub f2: TensorOperator<Q>,
}

pub fn fq_ops(q: Complex64, n: usize) -> Result<FqOps> {
    if q.norm() == 0.0 || !q.is_finite() {
        return Err(Error::invalid("q", "must be a finite nonzero number"));
    }
    Ok(FqOps { f_q: f_q(&q, n), f1: f1(n), f2: f2(n)? })
}

/// q_j = i(1 + 2^{−j}), j = 2..10.
pub fn default_q_sequence() -> Vec<Complex64> {
    (2..=10).map(|j| Complex64::new(0.0, 1.0 + 2f64.powi(-j))).collect()
}

/// Singular values below this fraction of the largest count as rank loss.
const IMAGE_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SubspaceLimitReport {
    pub n: usize,
    pub ell: usize,
    pub rhs_dim: usize,
    pub expected_dim: usize,
    pub q: Vec<Complex64>,
    /// largest principal angle between F(q_j)(V^⊗n)_{ℓ−1} and the limit
    pub angles: Vec<f64>,
    /// numerical rank of F(q_j) on (V^⊗n)_{ℓ−1}
    pub image_ranks: Vec<usize>,
}

impl SubspaceLimitReport {
    pub fn collapsed(&self) -> bool {
        self.image_ranks.iter().any(|&r| r < self.expected_dim)
    }

    pub fn final_angle(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }

    /// θ_{j+1}/θ_j, skipping pairs already at rounding level.
    pub fn ratios(&self) -> Vec<f64> {
        self.angles.windows(2).filter(|w| w[0] > 1e-12).map(|w| w[1] / w[0]).collect()
    }

    /// Non-increasing up to 10%.
    pub fn monotone(&self) -> bool {
        self.angles.windows(2).all(|w| w[1] <= 1.1 * w[0] + 1e-13)
    }

    /// Every step shrinks the angle at least by `factor`.
    pub fn geometric(&self, factor: f64) -> bool {
        self.ratios().iter().all(|&r| r <= factor)
    }
}

/// Exact basis of F⁽¹⁾(V^⊗n)_{ℓ−1} + F⁽²⁾(V^⊗n)_{ℓ−2} in weight-ℓ coordinates.
pub fn limit_subspace(n: usize, ell: usize) -> Result<QMatrix> {
    if ell == 0 || ell > n {
        return Err(Error::invalid("ell", format!("need 1 ≤ ℓ ≤ n, got {ell}")));
    }
    let mut m = f1(n).weight_block(ell, ell - 1);
    if ell >= 2 {
        m = m.hstack(&f2(n)?.weight_block(ell, ell - 2));
    }
    let cols = m.column_space();
    Ok(Matrix::from_columns(&cols, binomial(n, ell)))
}

pub fn subspace_limit_check(n: usize, ell: usize, qs: &[Complex64]) -> Result<SubspaceLimitReport> {
    if ell == 0 || 2 * ell > n {
        return Err(Error::invalid("ell", format!("need 1 ≤ ℓ and 2ℓ ≤ n, got ℓ = {ell}, n = {n}")));
    }
    let rhs = limit_subspace(n, ell)?;
    let rhs_q = rhs.to_complex().orthonormal_column_basis(1e-12);
    let expected_dim = binomial(n, ell - 1);
    let mut angles = Vec::with_capacity(qs.len());
    let mut image_ranks = Vec::with_capacity(qs.len());
    for q in qs {
        let block = f_q(q, n).weight_block(ell, ell - 1);
        let basis = block.orthonormal_column_basis(IMAGE_RANK_TOL);
        image_ranks.push(basis.cols());
        angles.push(subspace_distance(&basis, &rhs_q));
    }
    Ok(SubspaceLimitReport { n, ell, rhs_dim: rhs.cols(), expected_dim, q: qs.to_vec(), angles, image_ranks })
}

/// Principal angles below this count as a common direction.
pub const INTERSECTION_ANGLE: f64 = 1e-2;

/// The q-singular subspace ker E(q) and the image F(q)(V^⊗n)_{ℓ−1} at one
/// q close to i, compared by principal angles.
#[derive(Clone, Debug)]
pub struct LimitIntersection {
    pub n: usize,
    pub ell: usize,
    pub q: Complex64,
    pub singular_dim: usize,
    pub image_dim: usize,
    pub angles: Vec<f64>,
}

impl LimitIntersection {
    pub fn intersection_dim(&self) -> usize {
        self.angles.iter().filter(|&&a| a < INTERSECTION_ANGLE).count()
    }
}

pub fn limit_intersection(n: usize, ell: usize, q: Complex64) -> Result<LimitIntersection> {
    if ell == 0 || ell > n {
        return Err(Error::invalid("ell", format!("need 1 ≤ ℓ ≤ n, got {ell}")));
    }
    let e_block = e_q(&q, n).weight_block(ell - 1, ell);
    let rows = e_block.adjoint().orthonormal_column_basis(IMAGE_RANK_TOL);
    let singular = orthogonal_complement(&rows);
    let image = f_q(&q, n).weight_block(ell, ell - 1).orthonormal_column_basis(IMAGE_RANK_TOL);
    Ok(LimitIntersection {
        n,
        ell,
        q,
        singular_dim: singular.cols(),
        image_dim: image.cols(),
        angles: principal_angles(&singular, &image),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(m: usize, n: usize) -> GrassmannElement {
        GrassmannElement::generator(m, n).unwrap()
    }

    #[test]
    fn generators_square_to_zero() {
        assert!(xi(1, 3).wedge(&xi(1, 3)).unwrap().is_zero());
        let ab = xi(1, 3).wedge(&xi(2, 3)).unwrap();
        let ba = xi(2, 3).wedge(&xi(1, 3)).unwrap();
        assert_eq!(ab, ba.scale(&-Q::one()));
    }

    #[test]
    fn derivation_examples() {
        let e = xi(1, 2).wedge(&xi(2, 2)).unwrap();
        assert_eq!(e.derivation(1).unwrap(), xi(2, 2));
        assert_eq!(e.derivation(2).unwrap(), xi(1, 2).scale(&-Q::one()));
    }

    #[test]
    fn phi1_squared_vanishes_and_phi2_counts() {
        // Over an anticommuting algebra φ⁽¹⁾∧φ⁽¹⁾ = Σ_{k≠m} ξ_kξ_m = 0.
        assert!(phi1(4).wedge(&phi1(4)).unwrap().is_zero());
        assert_eq!(phi2(3).terms().count(), 3);
        assert_eq!(phi2(2), xi(1, 2).wedge(&xi(2, 2)).unwrap());
    }

    #[test]
    fn phi2_splits_off_the_last_generator() {
        for n in 2..7 {
            let (_, p2, pt) = phi_elements(n);
            let head = embed(&phi1(n - 1), n).unwrap().wedge(&xi(n, n)).unwrap();
            assert_eq!(p2, embed(&pt, n).unwrap().add(&head).unwrap());
        }
    }

    #[test]
    fn image_dims_examples() {
        let d = image_dims(4, 2).unwrap();
        assert_eq!((d.phi1, d.phi2, d.sum), (3, 1, 4));
        let d = image_dims(5, 2).unwrap();
        assert_eq!((d.phi_tilde, d.phi_tilde_min), (1, 1));
        let d = image_dims(3, 1).unwrap();
        assert_eq!((d.phi1, d.phi2, d.sum), (1, 0, 1));
        for n in 0..=8 {
            for ell in 0..=n {
                assert!(image_dims(n, ell).unwrap().holds(), "n={n} ell={ell}");
            }
        }
    }

    #[test]
    fn zeta_triple_closes() {
        let r = zeta_sl2_check(3).unwrap();
        assert_eq!(r.graded_dims, vec![1, 2, 1]);
        for n in 2..=6 {
            let r = zeta_sl2_check(n).unwrap();
            assert!(r.holds(), "{r:?}");
        }
        let r5 = zeta_sl2_check(5).unwrap();
        for (ell, direct, _) in r5.weight_ranks {
            assert_eq!(direct, image_dims(5, ell).unwrap().phi_tilde);
        }
    }

    #[test]
    fn jw_n2_matrices() {
        let r1 = jw_generator(1, 2).unwrap();
        let mi = -Q::imag_unit();
        // −iσ⁻⊗Id: v₊v₊ → −i v₋v₊, v₊v₋ → −i v₋v₋
        assert_eq!(r1.matrix()[(0b01, 0b00)], mi);
        assert_eq!(r1.matrix()[(0b11, 0b10)], mi);
        let r2 = jw_generator(2, 2).unwrap();
        // −σ³⊗σ⁻
        assert_eq!(r2.matrix()[(0b10, 0b00)], -Q::one());
        assert_eq!(r2.matrix()[(0b11, 0b01)], Q::one());
        assert!(r1.anticommutator(&r2).matrix().is_zero());
        assert!(r1.compose(&r1).matrix().is_zero());
    }

    #[test]
    fn jw_faithful_and_intertwined() {
        for n in 1..=4 {
            assert!(jw_faithful(n).unwrap());
            for s in (0..=n).flat_map(|k| subsets(n, k)) {
                let e = GrassmannElement::monomial(&s, Q::one(), n).unwrap();
                let mut vac = vec![Q::zero(); 1 << n];
                vac[0] = Q::one();
                assert_eq!(jw_rep(&e).unwrap().matrix().apply(&vac), intertwine(&e));
            }
        }
    }

    #[test]
    fn f_operators_match_phi_images() {
        for n in 1..=4 {
            assert!(f_squared_divisible(n));
            assert_eq!(jw_rep(&phi1(n)).unwrap(), f1(n));
            let f2n = f2(n).unwrap();
            assert_eq!(jw_rep(&phi2(n)).unwrap(), f2n);
            assert_eq!(f2_closed(n), f2n);
        }
        assert_eq!(f_q(&Q::one(), 3).matrix(), crate::tensor_space::global_sl2::<Q>(crate::tensor_space::SiteKind::Minus, 3).matrix());
    }

    #[test]
    fn generic_q_rank() {
        let two = Q::from_ints(2, 0);
        for n in 2..=5 {
            for ell in 1..=n / 2 {
                assert_eq!(f_q(&two, n).weight_block(ell, ell - 1).rank(), binomial(n, ell - 1));
            }
        }
    }

    #[test]
    fn laurent_division() {
        let p = Laurent::monomial(-1, Q::one()).add(&Laurent::monomial(1, Q::one()));
        assert_eq!(p.div_one_plus_q2(), Some(Laurent::monomial(-1, Q::one())));
        assert_eq!(Laurent::monomial(0, Q::one()).div_one_plus_q2(), None);
    }

    #[test]
    fn subspace_limit_converges() {
        let r = subspace_limit_check(4, 2, &default_q_sequence()).unwrap();
        assert_eq!(r.rhs_dim, 4);
        assert!(!r.collapsed());
        assert!(r.final_angle() < 1e-2, "{:?}", r.angles);
        assert!(r.monotone() && r.geometric(0.6), "{:?}", r.ratios());
        // F(q)v₊v₊ = v₋v₊ + q⁻¹v₊v₋ only reaches the limit line as q → i.
        let r = subspace_limit_check(2, 1, &default_q_sequence()).unwrap();
        assert!(r.final_angle() < 1e-2 && r.geometric(0.6), "{:?}", r.angles);
    }

    #[test]
    fn q_singular_and_image_meet_at_even_n() {
        let q = Complex64::new(0.0, 1.0 + 2f64.powi(-10));
        let r = limit_intersection(4, 2, q).unwrap();
        assert_eq!((r.singular_dim, r.image_dim), (2, 4));
        assert!(r.intersection_dim() > 0, "{:?}", r.angles);
        let generic = limit_intersection(4, 2, Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(generic.intersection_dim(), 0);
    }
}
