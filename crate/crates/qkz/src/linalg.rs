//! Dense matrices over a [`Field`], plus SVD-based subspace tools for the
//! complex case.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use faer::Mat;
use num_complex::Complex64;
use num_traits::Zero;

use crate::scalar::Field;

#[derive(Clone, PartialEq, Debug)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Field> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<S>], rows: usize) -> Self {
        assert!(cols.iter().all(|c| c.len() == rows), "column length mismatch");
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn diagonal(d: &[S]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i].clone() } else { S::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: &S) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.clone() * s.clone()).collect() }
    }

    pub fn map<T: Field>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_complex(&self) -> Matrix<Complex64> {
        self.map(Field::to_complex)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)].clone() * other[(i % other.rows, j % other.cols)].clone()
        })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let v = out[(i, j)].clone() + a.clone() * b.clone();
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (j, vj) in v.iter().enumerate() {
                    let a = &self[(i, j)];
                    if !a.is_zero() && !vj.is_zero() {
                        acc = acc + a.clone() * vj.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &self.matmul(other) + &other.matmul(self)
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    /// Row-reduced echelon form and the pivot columns.
    ///
    /// Pivots are chosen by largest magnitude, which is exact for exact fields
    /// and plain partial pivoting for floating ones.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let mut best = None;
            let mut best_mag = 0.0;
            for i in r..a.rows {
                if !a[(i, c)].is_zero() {
                    let m = a[(i, c)].magnitude();
                    if best.is_none() || m > best_mag {
                        best = Some(i);
                        best_mag = m;
                    }
                }
            }
            let Some(p) = best else { continue };
            a.swap_rows(r, p);
            let inv = S::one() / a[(r, c)].clone();
            for j in c..a.cols {
                let v = a[(r, j)].clone() * inv.clone();
                a[(r, j)] = v;
            }
            for i in 0..a.rows {
                if i == r || a[(i, c)].is_zero() {
                    continue;
                }
                let f = a[(i, c)].clone();
                for j in c..a.cols {
                    if a[(r, j)].is_zero() {
                        continue;
                    }
                    let v = a[(i, j)].clone() - f.clone() * a[(r, j)].clone();
                    a[(i, j)] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    /// Rank by elimination. Only meaningful for exact fields.
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the null space, one column per free variable.
    pub fn nullspace(&self) -> Vec<Vec<S>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Columns of `self` forming a basis of its column space.
    pub fn column_space(&self) -> Vec<Vec<S>> {
        let (_, pivots) = self.rref();
        pivots.iter().map(|&c| self.column(c)).collect()
    }

    /// Inverse through elimination on `[A | I]`; None if singular.
    pub fn inverse(&self) -> Option<Self> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let (r, pivots) = self.hstack(&Self::identity(n)).rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
    }

    /// Determinant by Gaussian elimination.
    pub fn det(&self) -> S {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for c in 0..n {
            let mut best = None;
            let mut best_mag = 0.0;
            for i in c..n {
                if !a[(i, c)].is_zero() {
                    let m = a[(i, c)].magnitude();
                    if best.is_none() || m > best_mag {
                        best = Some(i);
                        best_mag = m;
                    }
                }
            }
            let Some(p) = best else { return S::zero() };
            if p != c {
                a.swap_rows(c, p);
                det = -det;
            }
            let piv = a[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                if a[(i, c)].is_zero() {
                    continue;
                }
                let f = a[(i, c)].clone() / piv.clone();
                for j in c..n {
                    let v = a[(i, j)].clone() - f.clone() * a[(c, j)].clone();
                    a[(i, j)] = v;
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Field> Add for &Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, o: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }
}

impl<S: Field> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, o: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }
}

impl<S: Field> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, o: &Matrix<S>) -> Matrix<S> {
        self.matmul(o)
    }
}

impl<S: Field> Neg for &Matrix<S> {
    type Output = Matrix<S>;
    fn neg(self) -> Matrix<S> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a.clone()).collect() }
    }
}

/// Thin SVD `A = U·diag(σ)·V^H` with σ sorted decreasingly.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix<Complex64>,
    pub singular_values: Vec<f64>,
    pub v: Matrix<Complex64>,
}

impl Matrix<Complex64> {
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    /// Full-width thin SVD, singular values descending. Handles wide
    /// matrices through the adjoint.
    pub fn svd(&self) -> Svd {
        if self.rows == 0 || self.cols == 0 {
            return Svd { u: Matrix::zeros(self.rows, 0), singular_values: vec![], v: Matrix::zeros(self.cols, 0) };
        }
        if self.rows < self.cols {
            let s = self.adjoint().svd();
            return Svd { u: s.v, singular_values: s.singular_values, v: s.u };
        }
        let svd = self.to_faer().thin_svd().expect("SVD did not converge");
        let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
        let k = s.nrows();
        let sv: Vec<f64> = (0..k).map(|i| s[i].re).collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        Svd {
            u: Matrix::from_fn(self.rows, k, |i, j| u[(i, order[j])]),
            singular_values: order.iter().map(|&o| sv[o]).collect(),
            v: Matrix::from_fn(self.cols, k, |i, j| v[(i, order[j])]),
        }
    }

    pub fn singular_values(&self) -> Vec<f64> {
        self.svd().singular_values
    }

    /// Eigenpairs of the Hermitian part (A + Aᴴ)/2, eigenvalues ascending,
    /// eigenvectors as columns.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, Matrix<Complex64>) {
        assert!(self.is_square());
        let d = self.rows;
        if d == 0 {
            return (vec![], Matrix::zeros(0, 0));
        }
        let h = Mat::from_fn(d, d, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5);
        let eig = h.self_adjoint_eigen(faer::Side::Lower).expect("eigensolver did not converge");
        let (u, s) = (eig.U(), eig.S().column_vector());
        let ev: Vec<f64> = (0..d).map(|i| s[i].re).collect();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| ev[a].total_cmp(&ev[b]));
        (order.iter().map(|&o| ev[o]).collect(), Matrix::from_fn(d, d, |i, j| u[(i, order[j])]))
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        self.hermitian_eigen().0
    }

    /// Orthonormal basis of the column space, dropping directions with
    /// singular value below `rel_threshold·σ_max`.
    pub fn orthonormal_column_basis(&self, rel_threshold: f64) -> Matrix<Complex64> {
        let svd = self.svd();
        let smax = svd.singular_values.first().copied().unwrap_or(0.0);
        let keep = svd.singular_values.iter().filter(|&&s| s > rel_threshold * smax && s > 0.0).count();
        Matrix::from_fn(self.rows, keep, |i, j| svd.u[(i, j)])
    }

    /// Numerical rank with a relative threshold.
    pub fn numerical_rank(&self, rel_threshold: f64) -> usize {
        let sv = self.singular_values();
        let smax = sv.first().copied().unwrap_or(0.0);
        sv.iter().filter(|&&s| s > rel_threshold * smax && s > 0.0).count()
    }
}

/// Principal angles (radians, ascending) between the column spans of two
/// matrices with orthonormal columns.
///
/// Small angles come from the sines of the residual `(I − QₐQₐᴴ)Q_b`, large
/// ones from the cosines of the cross-Gram matrix `QₐᴴQ_b`.
pub fn principal_angles(qa: &Matrix<Complex64>, qb: &Matrix<Complex64>) -> Vec<f64> {
    let k = qa.cols().min(qb.cols());
    if k == 0 {
        return vec![];
    }
    let (qa, qb) = if qa.cols() >= qb.cols() { (qa, qb) } else { (qb, qa) };
    let cross = qa.adjoint().matmul(qb);
    let mut cos = cross.singular_values();
    cos.truncate(k);
    let resid = qb - &qa.matmul(&cross);
    let mut sin = resid.singular_values();
    sin.sort_by(f64::total_cmp);
    sin.resize(k, 0.0);
    let mut angles: Vec<f64> = (0..k)
        .map(|j| {
            let c = cos[j].clamp(0.0, 1.0);
            let s = sin[j].clamp(0.0, 1.0);
            if s < std::f64::consts::FRAC_1_SQRT_2 {
                s.asin()
            } else {
                c.acos()
            }
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Largest principal angle; `π/2` if the dimensions differ.
pub fn subspace_distance(qa: &Matrix<Complex64>, qb: &Matrix<Complex64>) -> f64 {
    if qa.cols() != qb.cols() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(qa, qb).last().copied().unwrap_or(0.0)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `q` inside ℂ^rows.
pub fn orthogonal_complement(q: &Matrix<Complex64>) -> Matrix<Complex64> {
    let d = q.rows();
    let proj = &Matrix::identity(d) - &q.matmul(&q.adjoint());
    let svd = proj.svd();
    let keep = d - q.cols();
    Matrix::from_fn(d, keep, |i, j| svd.u[(i, j)])
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exact_det_and_rank() {
        let m = Matrix::from_rows(vec![
            vec![GaussianRational::from_ints(2, 0), GaussianRational::from_ints(1, 1)],
            vec![GaussianRational::from_ints(4, 0), GaussianRational::from_ints(2, 2)],
        ]);
        assert!(m.det().is_zero());
        assert_eq!(m.rank(), 1);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(m.apply(&ns[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn complex_det_matches_expansion() {
        let m = Matrix::from_rows(vec![vec![c(1.0, 2.0), c(0.5, 0.0)], vec![c(-1.0, 0.3), c(2.0, -1.0)]]);
        let expect = c(1.0, 2.0) * c(2.0, -1.0) - c(0.5, 0.0) * c(-1.0, 0.3);
        assert!((m.det() - expect).norm() < 1e-14);
    }

    #[test]
    fn svd_reconstructs() {
        let m = Matrix::from_fn(4, 3, |i, j| c((i * 3 + j) as f64 * 0.1 + 1.0, (i as f64 - j as f64) * 0.2));
        let s = m.svd();
        let sig = Matrix::diagonal(&s.singular_values.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>());
        let back = s.u.matmul(&sig).matmul(&s.v.adjoint());
        assert!((&back - &m).frobenius_norm() < 1e-12);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let w = m.transpose();
        let sw = w.svd();
        assert!((sw.singular_values[0] - s.singular_values[0]).abs() < 1e-12);
    }

    #[test]
    fn tiny_angle_is_resolved() {
        let e = 1e-9;
        let a = Matrix::from_rows(vec![vec![c(1.0, 0.0)], vec![c(0.0, 0.0)]]);
        let b = Matrix::from_rows(vec![vec![c(1.0, 0.0)], vec![c(e, 0.0)]]).orthonormal_column_basis(1e-12);
        let th = subspace_distance(&a, &b);
        assert!((th - e).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_subspaces() {
        let a = Matrix::from_rows(vec![vec![c(1.0, 0.0)], vec![c(0.0, 0.0)]]);
        let b = Matrix::from_rows(vec![vec![c(0.0, 0.0)], vec![c(0.0, 1.0)]]);
        assert!((subspace_distance(&a, &b) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
