//! Dense complex linear algebra.
//!
//! Everything downstream works on [`ComplexMatrix`], a row-major dense matrix of
//! `Complex64`. The Hermitian eigensolver is a cyclic complex Jacobi method:
//! slow for large matrices but deterministic and accurate to a few ulps at the
//! sizes this crate handles (d <= 256).

use crate::error::{Error, Result};
use crate::tolerance::tolerances;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Wire form: `{"rows":R,"cols":C,"re":[...],"im":[...]}`, row-major.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = String;

    fn try_from(m: MatrixJson) -> std::result::Result<Self, String> {
        let n = m.rows * m.cols;
        if m.re.len() != n {
            return Err(format!("`re` has {} entries, expected rows*cols = {n}", m.re.len()));
        }
        if m.im.len() != n {
            return Err(format!("`im` has {} entries, expected rows*cols = {n}", m.im.len()));
        }
        let data = m.re.iter().zip(&m.im).map(|(&re, &im)| C64::new(re, im)).collect();
        Ok(ComplexMatrix { rows: m.rows, cols: m.cols, data })
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows of real entries. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Rank-one projector `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Matrix product. Panics if the inner dimensions differ.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product. Panics on a length mismatch.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "apply: dimension mismatch");
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum()).collect()
    }

    /// `<u|A|v>`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let av = self.apply(v);
        u.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!((self.cols, self.rows), (other.rows, other.cols));
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max_ij |m_ij - conj(m_ji)|`; infinite for non-square matrices.
    pub fn hermitian_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_asymmetry() <= tolerances().hermitian * self.max_abs().max(1.0)
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }
}

/// Eigen-decomposition `A = V diag(lambda) V^dagger` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let scaled = ComplexMatrix::from_fn(v.rows(), v.cols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        scaled.matmul(&v.adjoint())
    }

    /// `max |V^dagger V - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.eigenvectors.adjoint().matmul(&self.eigenvectors);
        g.sub(&ComplexMatrix::identity(g.rows())).max_abs()
    }
}

/// Hermitian eigensolver (cyclic complex Jacobi).
///
/// Eigenvalues come back ascending; equal eigenvalues keep the order of the
/// Jacobi diagonal. The result is a pure function of the input bits.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let tol = tolerances();
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    let scale = a.max_abs().max(1.0);
    let asym = a.hermitian_asymmetry();
    if asym > tol.hermitian * scale {
        return Err(Error::NotHermitian(asym));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let fro = m.frobenius_norm();
    let target = (1e-15 * fro).powi(2);

    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| m[(p, q)].norm_sqr()).sum();
        if off <= target || off == 0.0 || sweeps >= tol.eig_max_sweeps {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[(k, k)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    let eig = EigenDecomposition { eigenvalues, eigenvectors };

    let recon = eig.reconstruct().sub(a).max_abs();
    let ortho = eig.orthonormality_residual();
    if recon > tol.eig_residual * a.max_abs().max(1.0) || ortho > tol.eig_residual {
        return Err(Error::NoConvergence { sweeps, residual: recon.max(ortho) });
    }
    Ok(eig)
}

/// One Jacobi rotation annihilating `m[p][q]`; accumulates into `v`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Phase removal makes the (p, q) block real symmetric.
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_infinite() { 0.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // U = diag(1, conj(phase)) * [[c, s], [-s, c]]
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    let n = m.rows();
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * u_pp + akq * u_qp;
        m[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        m[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(app - t * r, 0.0);
    m[(q, q)] = C64::new(aqq + t * r, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0.0);
    }
    let gram = a.adjoint().matmul(a).hermitian_part();
    let eig = eig_hermitian(&gram)?;
    Ok(eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    First,
    Second,
}

/// Traces out one factor of a `d_a * d_b` bipartite operator.
pub fn partial_trace(m: &ComplexMatrix, dims: (usize, usize), keep: Subsystem) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if !m.is_square() || m.rows() != da * db {
        return Err(Error::DimensionMismatch { expected: da * db, got: m.rows() });
    }
    Ok(match keep {
        Subsystem::First => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Subsystem::Second => ComplexMatrix::from_fn(db, db, |k, l| (0..da).map(|i| m[(i * db + k, i * db + l)]).sum()),
    })
}

/// Reduced state of the first factor of a pure state `|psi>` on `d_a * d_b`,
/// computed without forming `|psi><psi|`.
pub fn reduce_pure_first(psi: &[C64], dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if psi.len() != da * db {
        return Err(Error::DimensionMismatch { expected: da * db, got: psi.len() });
    }
    Ok(ComplexMatrix::from_fn(da, da, |i, j| {
        let ri = &psi[i * db..(i + 1) * db];
        let rj = &psi[j * db..(j + 1) * db];
        ri.iter().zip(rj).map(|(a, b)| a * b.conj()).sum()
    }))
}

/// Kronecker product `a (x) b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Hilbert-Schmidt orthonormal clock-and-shift basis on `C^d`.
///
/// Element `d*k0 + k1` is `d^{-1/2} sum_n exp(2 pi i n k0 / d) |n + k1 mod d><n|`,
/// so element 0 is `I / sqrt(d)`.
pub fn schwinger_basis(d: usize) -> Vec<ComplexMatrix> {
    let norm = 1.0 / (d as f64).sqrt();
    let mut basis = Vec::with_capacity(d * d);
    for k0 in 0..d {
        for k1 in 0..d {
            let mut f = ComplexMatrix::zeros(d, d);
            for n in 0..d {
                let angle = 2.0 * std::f64::consts::PI * (n * k0) as f64 / d as f64;
                f[((n + k1) % d, n)] = C64::from_polar(norm, angle);
            }
            basis.push(f);
        }
    }
    basis
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).unwrap()
    }

    #[test]
    fn eig_identity() {
        let eig = eig_hermitian(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert!(eig.orthonormality_residual() < 1e-14);
    }

    #[test]
    fn eig_diagonal_sorted() {
        let eig = eig_hermitian(&ComplexMatrix::from_diag(&[2.0, -1.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![-1.0, 2.0]);
        assert!((eig.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_pauli_x_and_y() {
        for p in [pauli_x(), pauli_y()] {
            let eig = eig_hermitian(&p).unwrap();
            assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
            assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
            assert!(eig.reconstruct().sub(&p).max_abs() < 1e-14);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_ties_keep_original_order() {
        let eig = eig_hermitian(&ComplexMatrix::from_diag(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0, 1.0, 1.0]);
        assert_eq!(eig.eigenvectors[(0, 1)], ONE);
        assert_eq!(eig.eigenvectors[(2, 2)], ONE);
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&ComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        assert!((operator_norm(&pauli_x()).unwrap() - 1.0).abs() < 1e-14);
        assert!((operator_norm(&ComplexMatrix::from_diag(&[3.0, -4.0])).unwrap() - 4.0).abs() < 1e-14);
        let rect = ComplexMatrix::from_real_rows(&[&[0.0, 2.0, 0.0]]);
        assert!((operator_norm(&rect).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let sigma = ComplexMatrix::from_diag(&[0.25, 0.75]);
        let tau = ComplexMatrix::from_diag(&[0.5, 0.2, 0.3]);
        let prod = tensor(&sigma, &tau);
        let back = partial_trace(&prod, (2, 3), Subsystem::First).unwrap();
        assert!(back.sub(&sigma).max_abs() < 1e-15);
        let back_b = partial_trace(&prod, (2, 3), Subsystem::Second).unwrap();
        assert!(back_b.sub(&tau).max_abs() < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        let rho = ComplexMatrix::outer(&bell);
        let red = partial_trace(&rho, (2, 2), Subsystem::First).unwrap();
        assert!(red.sub(&ComplexMatrix::from_diag(&[0.5, 0.5])).max_abs() < 1e-15);
        let red_pure = reduce_pure_first(&bell, (2, 2)).unwrap();
        assert!(red_pure.sub(&red).max_abs() < 1e-15);

        let mixed = ComplexMatrix::identity(6).scale(C64::new(1.0 / 6.0, 0.0));
        let r = partial_trace(&mixed, (2, 3), Subsystem::Second).unwrap();
        assert!(r.sub(&ComplexMatrix::identity(3).scale(C64::new(1.0 / 3.0, 0.0))).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let m = ComplexMatrix::identity(5);
        assert!(matches!(partial_trace(&m, (2, 3), Subsystem::First), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn schwinger_small_cases() {
        let b1 = schwinger_basis(1);
        assert_eq!(b1.len(), 1);
        assert_eq!(b1[0][(0, 0)], ONE);

        // d = 2: I, Z, X, XZ (all over sqrt 2)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b2 = schwinger_basis(2);
        let expect = [
            ComplexMatrix::from_real_rows(&[&[h, 0.0], &[0.0, h]]),
            ComplexMatrix::from_real_rows(&[&[0.0, h], &[h, 0.0]]),
            ComplexMatrix::from_real_rows(&[&[h, 0.0], &[0.0, -h]]),
            ComplexMatrix::from_real_rows(&[&[0.0, -h], &[h, 0.0]]),
        ];
        for (f, e) in b2.iter().zip(&expect) {
            assert!(f.sub(e).max_abs() < 1e-15);
        }
    }

    #[test]
    fn schwinger_gram_is_identity() {
        for d in 1..=6 {
            let basis = schwinger_basis(d);
            for (j, fj) in basis.iter().enumerate() {
                for (k, fk) in basis.iter().enumerate() {
                    let g = fj.adjoint().trace_product(fk);
                    let want = if j == k { ONE } else { ZERO };
                    assert!((g - want).norm() < 1e-12, "d={d} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(tensor(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)), ComplexMatrix::identity(6));
        let t = tensor(&ComplexMatrix::from_diag(&[1.0, 2.0]), &ComplexMatrix::from_diag(&[1.0, 1.0]));
        assert_eq!(t, ComplexMatrix::from_diag(&[1.0, 1.0, 2.0, 2.0]));
        let xx = tensor(&pauli_x(), &pauli_x());
        let out = xx.apply(&[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(out, vec![ZERO, ZERO, ZERO, ONE]);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let m = pauli_y();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":2,"cols":2,"re":[0.0,0.0,0.0,0.0],"im":[0.0,-1.0,1.0,0.0]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = serde_json::from_str::<ComplexMatrix>(r#"{"rows":2,"cols":2,"re":[1],"im":[0,0,0,0]}"#);
        assert!(bad.unwrap_err().to_string().contains("`re`"));
    }
}
