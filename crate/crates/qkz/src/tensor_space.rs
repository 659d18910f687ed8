//! The space V^⊗n with V = ℂ², basis vectors v_M, site and global sl₂
//! operators, weight and singular subspaces, and the operator A₀ = ½Σ⁻Σ⁺.
//!
//! Basis convention: the coordinate index is a bit pattern, bit m−1 set
//! meaning v₋ at site m.

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Field;

/// Strictly increasing subset of {1..n}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetIndex {
    members: Vec<usize>,
}

impl SubsetIndex {
    pub fn new(members: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = members.iter().find(|&&m| m == 0 || m > n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedSubset(members));
        }
        Ok(Self { members })
    }

    pub fn empty() -> Self {
        Self { members: vec![] }
    }

    pub fn from_mask(mask: usize) -> Self {
        let members = (0..usize::BITS as usize).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
        Self { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: usize) -> bool {
        self.members.binary_search(&m).is_ok()
    }

    pub fn mask(&self) -> usize {
        self.members.iter().fold(0, |acc, &m| acc | 1 << (m - 1))
    }

    pub fn sum(&self) -> usize {
        self.members.iter().sum()
    }

    /// `self ∪ {k}` with the sign of the permutation sorting `(k, self…)`,
    /// or `None` if `k` is already present.
    pub fn insert_front(&self, k: usize) -> Option<(i32, SubsetIndex)> {
        match self.members.binary_search(&k) {
            Ok(_) => None,
            Err(pos) => {
                let mut m = self.members.clone();
                m.insert(pos, k);
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                Some((sign, SubsetIndex { members: m }))
            }
        }
    }

    pub fn without(&self, k: usize) -> SubsetIndex {
        SubsetIndex { members: self.members.iter().copied().filter(|&m| m != k).collect() }
    }
}

/// All ℓ-subsets of {1..n} in lexicographic order.
pub fn subsets(n: usize, ell: usize) -> Vec<SubsetIndex> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<SubsetIndex>) {
        if left == 0 {
            out.push(SubsetIndex { members: cur.clone() });
            return;
        }
        for m in start..=n {
            if n - m + 1 < left {
                break;
            }
            cur.push(m);
            rec(m + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if ell <= n {
        rec(1, n, ell, &mut Vec::new(), &mut out);
    }
    out
}

/// Position of `m` in the lexicographic enumeration of its size class.
pub fn subset_position(m: &SubsetIndex, n: usize) -> Option<usize> {
    subsets(n, m.len()).iter().position(|s| s == m)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// C(n,ℓ) − C(n,ℓ−1), clamped at zero: the dimension of the singular subspace.
pub fn singular_dimension(n: usize, ell: usize) -> usize {
    let lower = if ell == 0 { 0 } else { binomial(n, ell - 1) };
    binomial(n, ell).saturating_sub(lower)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorVector {
    n: usize,
    data: Vec<Complex64>,
}

impl TensorVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::zero(); 1 << n] }
    }

    pub fn from_data(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != 1 << n {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for n = {n}", data.len())));
        }
        Ok(Self { n, data })
    }

    /// Vector with the given coordinates on the ℓ-subsets (lexicographic).
    pub fn from_weight_coords(n: usize, ell: usize, coords: &[Complex64]) -> Self {
        let mut v = Self::zeros(n);
        for (s, c) in subsets(n, ell).iter().zip(coords) {
            v.data[s.mask()] = *c;
        }
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn component(&self, m: &SubsetIndex) -> Complex64 {
        self.data[m.mask()]
    }

    /// Coordinates on the ℓ-subsets (lexicographic).
    pub fn weight_coords(&self, ell: usize) -> Vec<Complex64> {
        subsets(self.n, ell).iter().map(|s| self.data[s.mask()]).collect()
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::vec_norm(&self.data)
    }

    pub fn dot(&self, other: &Self) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// True if the support lies on bit patterns of popcount ℓ.
    pub fn in_weight(&self, ell: usize) -> bool {
        self.data.iter().enumerate().all(|(i, x)| i.count_ones() as usize == ell || x.is_zero())
    }
}

/// The unit vector v_M.
pub fn basis_vector(m: &SubsetIndex, n: usize) -> Result<TensorVector> {
    if let Some(&bad) = m.members().iter().find(|&&x| x > n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let mut v = TensorVector::zeros(n);
    v.data[m.mask()] = Complex64::one();
    Ok(v)
}

/// A dense operator on V^⊗n.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorOperator<S = Complex64> {
    n: usize,
    matrix: Matrix<S>,
}

impl<S: Field> TensorOperator<S> {
    pub fn from_matrix(n: usize, matrix: Matrix<S>) -> Result<Self> {
        let d = 1 << n;
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::DimensionMismatch(format!("{}×{} matrix for n = {n}", matrix.rows(), matrix.cols())));
        }
        Ok(Self { n, matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, matrix: Matrix::identity(1 << n) }
    }

    pub fn zero(n: usize) -> Self {
        Self { n, matrix: Matrix::zeros(1 << n, 1 << n) }
    }

    /// Operator with `f(source_index) -> [(target_index, coefficient)]`.
    pub fn from_action(n: usize, f: impl Fn(usize) -> Vec<(usize, S)>) -> Self {
        let mut m: Matrix<S> = Matrix::zeros(1 << n, 1 << n);
        for src in 0..1usize << n {
            for (dst, c) in f(src) {
                let v = m[(dst, src)].clone() + c;
                m[(dst, src)] = v;
            }
        }
        Self { n, matrix: m }
    }

    pub fn diagonal(n: usize, f: impl Fn(usize) -> S) -> Self {
        Self::from_action(n, |b| vec![(b, f(b))])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<S> {
        self.matrix
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: self.matrix.matmul(&other.matrix) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: &self.matrix + &other.matrix }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: &self.matrix - &other.matrix }
    }

    pub fn scale(&self, s: &S) -> Self {
        Self { n: self.n, matrix: self.matrix.scale(s) }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: self.matrix.commutator(&other.matrix) }
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self { n: self.n, matrix: self.matrix.anticommutator(&other.matrix) }
    }

    /// Block mapping weight ℓ_from into weight ℓ_to, rows/cols in
    /// lexicographic subset order.
    pub fn weight_block(&self, ell_to: usize, ell_from: usize) -> Matrix<S> {
        let rows: Vec<usize> = subsets(self.n, ell_to).iter().map(SubsetIndex::mask).collect();
        let cols: Vec<usize> = subsets(self.n, ell_from).iter().map(SubsetIndex::mask).collect();
        self.matrix.submatrix(&rows, &cols)
    }

    pub fn restrict_to_weight(&self, ell: usize) -> Matrix<S> {
        self.weight_block(ell, ell)
    }

    /// True if the operator maps each weight space into itself.
    pub fn preserves_weight(&self) -> bool {
        let d = 1usize << self.n;
        (0..d).all(|i| (0..d).all(|j| i.count_ones() == j.count_ones() || self.matrix[(i, j)].is_zero()))
    }

    pub fn to_complex(&self) -> TensorOperator<Complex64> {
        TensorOperator { n: self.n, matrix: self.matrix.to_complex() }
    }
}

impl TensorOperator<Complex64> {
    pub fn apply(&self, v: &TensorVector) -> TensorVector {
        TensorVector { n: self.n, data: self.matrix.apply(&v.data) }
    }

    pub fn norm(&self) -> f64 {
        self.matrix.frobenius_norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    Plus,
    Minus,
    Three,
    H,
}

/// σ⁺, σ⁻, σ³ or H = (1−σ³)/2 at one site.
pub fn site_operator<S: Field>(kind: SiteKind, site: usize, n: usize) -> Result<TensorOperator<S>> {
    if site == 0 || site > n {
        return Err(Error::IndexOutOfRange { index: site, n });
    }
    let bit = 1usize << (site - 1);
    Ok(TensorOperator::from_action(n, |b| {
        let down = b & bit != 0;
        match kind {
            SiteKind::Plus if down => vec![(b ^ bit, S::one())],
            SiteKind::Minus if !down => vec![(b | bit, S::one())],
            SiteKind::Plus | SiteKind::Minus => vec![],
            SiteKind::Three => vec![(b, if down { -S::one() } else { S::one() })],
            SiteKind::H if down => vec![(b, S::one())],
            SiteKind::H => vec![],
        }
    }))
}

/// Σᵃ = Σ_m σᵃ_m for a ∈ {+, −, 3}; `SiteKind::H` gives ΣH_m.
pub fn global_sl2<S: Field>(kind: SiteKind, n: usize) -> TensorOperator<S> {
    (1..=n).fold(TensorOperator::zero(n), |acc, m| {
        acc.add(&site_operator(kind, m, n).expect("site in range"))
    })
}

/// The flip P_ij exchanging the tensor factors i and j.
pub fn swap_operator<S: Field>(i: usize, j: usize, n: usize) -> Result<TensorOperator<S>> {
    for s in [i, j] {
        if s == 0 || s > n {
            return Err(Error::IndexOutOfRange { index: s, n });
        }
    }
    let (bi, bj) = (i - 1, j - 1);
    Ok(TensorOperator::from_action(n, |b| {
        let x = (b >> bi & 1) ^ (b >> bj & 1);
        let swapped = b ^ (x << bi) ^ (x << bj);
        vec![(swapped, S::one())]
    }))
}

/// Projector onto (V^⊗n)_ℓ.
pub fn weight_projector(n: usize, ell: usize) -> TensorOperator<Complex64> {
    TensorOperator::diagonal(n, |b| if b.count_ones() as usize == ell { Complex64::one() } else { Complex64::zero() })
}

/// Threshold for the singular-subspace computation, relative to σ_max.
const SINGULAR_THRESHOLD: f64 = 1e-10;

/// Basis of (V^⊗n)_ℓ, or an orthonormal basis of its singular part
/// ker Σ⁺ ∩ (V^⊗n)_ℓ.
pub fn subspace_basis(n: usize, ell: usize, singular: bool) -> Vec<TensorVector> {
    if ell > n {
        return vec![];
    }
    if !singular {
        return subsets(n, ell).iter().map(|m| basis_vector(m, n).expect("in range")).collect();
    }
    if 2 * ell > n {
        return vec![];
    }
    let coords = singular_coordinates(n, ell);
    (0..coords.cols()).map(|j| TensorVector::from_weight_coords(n, ell, &coords.column(j))).collect()
}

/// Orthonormal singular basis as columns in weight-ℓ coordinates.
pub fn singular_coordinates(n: usize, ell: usize) -> Matrix<Complex64> {
    let dim = binomial(n, ell);
    if ell == 0 {
        return Matrix::identity(dim);
    }
    let raise: TensorOperator<Complex64> = global_sl2(SiteKind::Plus, n);
    let block = raise.weight_block(ell - 1, ell);
    let svd = block.svd();
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > SINGULAR_THRESHOLD * smax).count();
    // The thin SVD of a wide block does not carry the full right basis, so
    // take the null space from the eigenvectors of BᴴB instead.
    let g = block.adjoint().matmul(&block);
    let (_, vecs) = g.hermitian_eigen();
    Matrix::from_fn(dim, dim - rank, |i, j| vecs[(i, j)])
}

/// A₀ = ½Σ⁻Σ⁺.
pub fn casimir_a0(n: usize) -> TensorOperator<Complex64> {
    let minus: TensorOperator<Complex64> = global_sl2(SiteKind::Minus, n);
    let plus = global_sl2(SiteKind::Plus, n);
    minus.compose(&plus).scale(&Complex64::new(0.5, 0.0))
}

/// Eigenvalues of A₀ on (V^⊗n)_ℓ, ascending.
pub fn a0_spectrum(n: usize, ell: usize) -> Vec<f64> {
    casimir_a0(n).restrict_to_weight(ell).hermitian_eigenvalues()
}

/// The predicted spectrum: value (ℓ−k)(n−k−ℓ+1)/2 with multiplicity
/// C(n,k)−C(n,k−1), for k = 0..min(ℓ, n−ℓ). Ascending, with repetition.
pub fn a0_predicted_spectrum(n: usize, ell: usize) -> Vec<f64> {
    if ell > n {
        return vec![];
    }
    let mut out = Vec::new();
    for k in 0..=ell.min(n - ell) {
        let val = ((ell - k) * (n - k - ell + 1)) as f64 / 2.0;
        out.extend(std::iter::repeat_n(val, singular_dimension(n, k)));
    }
    out.sort_by(f64::total_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational;

    fn cplx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_vector_examples() {
        let v = basis_vector(&SubsetIndex::empty(), 2).unwrap();
        assert_eq!(v.data()[0], cplx(1.0));
        let v = basis_vector(&SubsetIndex::new(vec![1, 2], 2).unwrap(), 2).unwrap();
        assert_eq!(v.data()[0b11], cplx(1.0));
        let v = basis_vector(&SubsetIndex::new(vec![2], 3).unwrap(), 3).unwrap();
        assert_eq!(v.data()[0b010], cplx(1.0));
        assert_eq!(v.norm(), 1.0);
    }

    #[test]
    fn subset_validation() {
        assert!(SubsetIndex::new(vec![2, 1], 3).is_err());
        assert!(SubsetIndex::new(vec![4], 3).is_err());
        assert!(SubsetIndex::new(vec![0], 3).is_err());
    }

    #[test]
    fn lexicographic_order() {
        let s: Vec<Vec<usize>> = subsets(4, 2).iter().map(|m| m.members().to_vec()).collect();
        assert_eq!(s, vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]);
        assert_eq!(subsets(3, 0).len(), 1);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn site_operator_examples() {
        let h: TensorOperator = site_operator(SiteKind::H, 1, 1).unwrap();
        let up = basis_vector(&SubsetIndex::empty(), 1).unwrap();
        let down = basis_vector(&SubsetIndex::new(vec![1], 1).unwrap(), 1).unwrap();
        assert_eq!(h.apply(&up).norm(), 0.0);
        assert_eq!(h.apply(&down), down);
        let plus: TensorOperator = site_operator(SiteKind::Plus, 1, 1).unwrap();
        assert_eq!(plus.apply(&down), up);
        let s3: TensorOperator = site_operator(SiteKind::Three, 2, 2).unwrap();
        let v = basis_vector(&SubsetIndex::new(vec![2], 2).unwrap(), 2).unwrap();
        assert_eq!(s3.apply(&v), v.scale(cplx(-1.0)));
        assert!(site_operator::<Complex64>(SiteKind::H, 3, 2).is_err());
    }

    #[test]
    fn global_lowering_n2() {
        let m: TensorOperator = global_sl2(SiteKind::Minus, 2);
        let v = m.apply(&basis_vector(&SubsetIndex::empty(), 2).unwrap());
        let expect = basis_vector(&SubsetIndex::new(vec![1], 2).unwrap(), 2)
            .unwrap()
            .add(&basis_vector(&SubsetIndex::new(vec![2], 2).unwrap(), 2).unwrap());
        assert_eq!(v, expect);
    }

    #[test]
    fn sl2_relations_exact() {
        for n in 1..=5 {
            let p: TensorOperator<GaussianRational> = global_sl2(SiteKind::Plus, n);
            let m = global_sl2(SiteKind::Minus, n);
            let t = global_sl2(SiteKind::Three, n);
            assert_eq!(p.commutator(&m), t);
            assert_eq!(t.commutator(&p), p.scale(&GaussianRational::from_i64(2)));
            assert_eq!(t.commutator(&m), m.scale(&GaussianRational::from_i64(-2)));
        }
    }

    #[test]
    fn swap_squares_to_identity() {
        let p: TensorOperator<GaussianRational> = swap_operator(1, 3, 3).unwrap();
        assert_eq!(p.compose(&p), TensorOperator::identity(3));
        let v = basis_vector(&SubsetIndex::new(vec![1], 3).unwrap(), 3).unwrap();
        let w = basis_vector(&SubsetIndex::new(vec![3], 3).unwrap(), 3).unwrap();
        assert_eq!(p.to_complex().apply(&v), w);
    }

    #[test]
    fn singular_basis_examples() {
        let b = subspace_basis(2, 1, true);
        assert_eq!(b.len(), 1);
        let c = b[0].weight_coords(1);
        assert!((c[0] + c[1]).norm() < 1e-14);
        assert_eq!(subspace_basis(4, 2, true).len(), 2);
        assert_eq!(subspace_basis(3, 2, false).len(), 3);
        assert!(subspace_basis(3, 2, true).is_empty());
        let plus: TensorOperator = global_sl2(SiteKind::Plus, 4);
        for v in subspace_basis(4, 2, true) {
            assert!(plus.apply(&v).norm() < 1e-13);
            assert!((v.norm() - 1.0).abs() < 1e-13);
            assert!(v.in_weight(2));
        }
    }

    #[test]
    fn a0_examples() {
        let blk = casimir_a0(2).restrict_to_weight(1);
        for i in 0..2 {
            for j in 0..2 {
                assert!((blk[(i, j)] - cplx(0.5)).norm() < 1e-15);
            }
        }
        let ev = a0_spectrum(2, 1);
        assert!((ev[0]).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        let pred = a0_predicted_spectrum(4, 2);
        assert_eq!(pred, vec![0.0, 0.0, 1.0, 1.0, 1.0, 3.0]);
        assert_eq!(a0_predicted_spectrum(5, 0), vec![0.0]);
    }

    #[test]
    fn projector_idempotent() {
        let p = weight_projector(3, 1);
        assert_eq!(p.compose(&p), p);
    }
}
