//! Dense complex linear algebra for small Hermitian problems.
//!
//! Everything here is sized for desk-scale work (dimensions up to ~16):
//! matrices are stored row-major in the fixed computational basis, tensor
//! products put the first factor on the slow index, and the Hermitian
//! eigensolver is delegated to nalgebra.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for Hermiticity and positivity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Shorthand for a complex number.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Shorthand for a real complex number.
#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Which tensor factor to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Dense complex matrix, row-major, computational-basis convention.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// JSON form: `{rows, cols, re: [...], im: [...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = String;

    fn try_from(r: MatrixRepr) -> std::result::Result<Self, String> {
        let n = r.rows * r.cols;
        if r.re.len() != n || r.im.len() != n {
            return Err(format!(
                "matrix payload has {} re / {} im entries, expected {}",
                r.re.len(),
                r.im.len(),
                n
            ));
        }
        let data = r
            .re
            .iter()
            .zip(r.im.iter())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        Ok(ComplexMatrix {
            rows: r.rows,
            cols: r.cols,
            data,
        })
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            re: m.data.iter().map(|z| z.re).collect(),
            im: m.data.iter().map(|z| z.im).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for k in 0..dim {
            m.data[k * dim + k] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                data.push(f(r, col));
            }
        }
        Self { rows, cols, data }
    }

    /// Diagonal matrix from real entries.
    pub fn diag(entries: &[f64]) -> Self {
        let d = entries.len();
        Self::from_fn(d, d, |r, col| {
            if r == col {
                cr(entries[r])
            } else {
                Complex64::ZERO
            }
        })
    }

    /// Basis unit |k><l| in dimension `dim`.
    pub fn basis_unit(dim: usize, k: usize, l: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m.data[k * dim + l] = Complex64::ONE;
        m
    }

    /// Basis column vector |k> in dimension `dim`.
    pub fn basis_ket(dim: usize, k: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        m.data[k] = Complex64::ONE;
        m
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

    /// Side length of a square matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn conjugate(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|k| self.get(k, k)).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference `max |self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |M - M†|; zero for exactly Hermitian matrices.
    pub fn hermiticity_residual(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Checks Hermiticity against `tol * max(1, max |entry|)`.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let scale = self.max_abs().max(1.0);
        let residual = self.hermiticity_residual();
        if residual <= tol * scale {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                residual,
                tol: tol * scale,
            })
        }
    }

    /// (M + M†)/2.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self.get(r, c) + adj.get(r, c)) * 0.5
        })
    }

    /// Kronecker product; the first factor is the slow index.
    pub fn tensor(&self, other: &Self) -> Self {
        let (r1, c1, r2, c2) = (self.rows, self.cols, other.rows, other.cols);
        Self::from_fn(r1 * r2, c1 * c2, |r, c| {
            self.get(r / r2, c / c2) * other.get(r % r2, c % c2)
        })
    }

    /// Reduces a matrix on a bipartite space to the kept subsystem.
    ///
    /// `dims = (d1, d2)` are the factor dimensions with the first factor on the
    /// slow index. The trace is preserved: `tr(result) = tr(self)`.
    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self> {
        let (d1, d2) = dims;
        if !self.is_square() || self.rows != d1 * d2 {
            return Err(Error::DimensionMismatch(format!(
                "partial trace of a {}x{} matrix with factor dims ({d1}, {d2})",
                self.rows, self.cols
            )));
        }
        let out = match keep {
            Subsystem::First => Self::from_fn(d1, d1, |i, j| {
                (0..d2).map(|k| self.get(i * d2 + k, j * d2 + k)).sum()
            }),
            Subsystem::Second => Self::from_fn(d2, d2, |i, j| {
                (0..d1).map(|k| self.get(k * d2 + i, k * d2 + j)).sum()
            }),
        };
        Ok(out)
    }

    /// Commutator [self, other].
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Anticommutator {self, other}.
    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().copied())
    }

    /// dst = a * b, reusing dst's storage. Hot-loop helper.
    pub(crate) fn mul_into(dst: &mut Self, a: &Self, b: &Self) {
        debug_assert_eq!(a.cols, b.rows);
        dst.rows = a.rows;
        dst.cols = b.cols;
        dst.data.clear();
        dst.data.resize(a.rows * b.cols, Complex64::ZERO);
        for r in 0..a.rows {
            for k in 0..a.cols {
                let av = a.data[r * a.cols + k];
                if av == Complex64::ZERO {
                    continue;
                }
                let row = &mut dst.data[r * b.cols..(r + 1) * b.cols];
                let brow = &b.data[k * b.cols..(k + 1) * b.cols];
                for (d, &bv) in row.iter_mut().zip(brow.iter()) {
                    *d += av * bv;
                }
            }
        }
    }

    /// self += a * other.
    pub fn add_scaled(&mut self, a: Complex64, other: &Self) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (d, &o) in self.data.iter_mut().zip(other.data.iter()) {
            *d += a * o;
        }
    }

    pub(crate) fn scale_in_place(&mut self, a: Complex64) {
        for d in &mut self.data {
            *d *= a;
        }
    }

    pub(crate) fn copy_from(&mut self, other: &Self) {
        self.rows = other.rows;
        self.cols = other.cols;
        self.data.clear();
        self.data.extend_from_slice(&other.data);
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self.get(r, c);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!(
                    (self.rows, self.cols),
                    (rhs.rows, rhs.cols),
                    "shape mismatch in matrix {}", stringify!($method)
                );
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self
                        .data
                        .iter()
                        .zip(rhs.data.iter())
                        .map(|(a, b)| a $op b)
                        .collect(),
                }
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, rhs.rows,
            "shape mismatch in matrix multiplication"
        );
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        ComplexMatrix::mul_into(&mut out, self, rhs);
        out
    }
}

impl Mul<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: Complex64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale(cr(-1.0))
    }
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues are real and sorted descending; eigenvector columns are
/// orthonormal and reconstruct the input as V diag(lambda) V†.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Matrix whose columns are the eigenvectors, ordered like the eigenvalues.
    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }

    /// k-th eigenvector as a column.
    pub fn eigenvector(&self, k: usize) -> ComplexMatrix {
        let d = self.eigenvectors.rows();
        ComplexMatrix::from_fn(d, 1, |r, _| self.eigenvectors.get(r, k))
    }

    /// Rank-1 projector onto the k-th eigenvector.
    pub fn eigenprojector(&self, k: usize) -> ComplexMatrix {
        let v = self.eigenvector(k);
        &v * &v.adjoint()
    }

    /// V diag(lambda) V†.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.eigenvectors.rows();
        let mut out = ComplexMatrix::zeros(d, d);
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            out.add_scaled(cr(l), &self.eigenprojector(k));
        }
        out
    }
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Fails with [`Error::NotHermitian`] if `max|M - M†|` exceeds
/// `1e-10 * max(1, max|M|)`.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.check_hermitian(DEFAULT_TOL)?;
    let se = m.to_nalgebra().symmetric_eigen();
    let d = m.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(d, d, |r, c| se.eigenvectors[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// True iff the least eigenvalue is at least `-tol * max(1, max |eigenvalue|)`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    let spectrum = eig_hermitian(m)?;
    let scale = spectrum.max_abs_eigenvalue().max(1.0);
    Ok(spectrum.min_eigenvalue() >= -tol * scale)
}

/// Von Neumann entropy -sum(lambda ln lambda), in nats, of a density matrix
/// given as a raw matrix. Validates Hermiticity, positivity, and unit trace.
pub fn von_neumann_entropy(m: &ComplexMatrix) -> Result<f64> {
    let spectrum = eig_hermitian(m)?;
    let scale = spectrum.max_abs_eigenvalue().max(1.0);
    if spectrum.min_eigenvalue() < -DEFAULT_TOL * scale {
        return Err(Error::NotPsd {
            min_eigenvalue: spectrum.min_eigenvalue(),
        });
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > DEFAULT_TOL || trace.im.abs() > DEFAULT_TOL {
        return Err(Error::NotUnitTrace {
            trace: trace.re,
            tol: DEFAULT_TOL,
        });
    }
    Ok(entropy_of_eigenvalues(spectrum.eigenvalues()))
}

/// -sum(lambda ln lambda) with 0 ln 0 := 0; tiny negative eigenvalues from
/// roundoff contribute nothing.
pub fn entropy_of_eigenvalues(eigenvalues: &[f64]) -> f64 {
    -eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

/// Display conversion from nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
