//! Minimal dense complex linear algebra shared by all engines.
//!
//! Matrices here are small (at most ~100x100, typically the d^2 x d^2
//! superoperators of a 2- or 3-level atom), so everything is dense and
//! accuracy wins over speed: Hermitian propagators go through a full
//! eigendecomposition, general exponentials through scaling-and-squaring
//! Pade, and spectra through LAPACK's dense QR-type solver.
//!
//! Vectorization is column-stacking throughout: `vec(X)[i + d*j] = X[i][j]`
//! and `vec(A X B) = (B^T kron A) vec(X)`.

use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{Eig, Eigh, Solve, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Largest dimension accepted by [`mat_exp`].
pub const MAX_EXP_DIM: usize = 16;
/// Largest dimension accepted by [`eigen_spectrum`].
pub const MAX_EIG_DIM: usize = 100;
/// Hermiticity tolerance for tagged matrices: max |A - A^dagger|.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative residual bound for every eigenpair returned by [`eigen_spectrum`].
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;
/// An eigenvalue counts as "zero" for [`null_vector`] when |Re| + |Im| is below this.
pub const NULL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimTooLarge { dim: usize, max: usize },
    #[error("dimension mismatch: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("non-finite entries in {context}")]
    NonFinite { context: &'static str },
    #[error("matrix is not Hermitian: max |A - A^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    #[error("eigendecomposition failed: {0}")]
    EigenFailed(String),
    #[error(
        "eigenpair residual too large: max ||A v - lambda v||/||v|| = {residual:.3e} (bound {bound:.1e})"
    )]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error(
        "no eigenvalue within {tolerance:.1e} of zero; smallest |Re|+|Im| found is {smallest:.3e}"
    )]
    NoNullVector { smallest: f64, tolerance: f64 },
}

type Result<T> = std::result::Result<T, LinalgError>;

/// Dense complex matrix with an optional Hermitian tag.
///
/// The tag is set only by [`CMatrix::hermitian`], which verifies
/// max |A - A^dagger| < [`HERMITIAN_TOL`]; arithmetic drops it.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    data: Array2<C64>,
    hermitian: bool,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Array2::zeros((rows, cols)),
            hermitian: rows == cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
            hermitian: true,
        }
    }

    /// Wrap an array after checking every entry is finite.
    pub fn from_array(data: Array2<C64>) -> Result<Self> {
        ensure_finite(&data, "matrix entries")?;
        Ok(Self {
            data,
            hermitian: false,
        })
    }

    /// Wrap an array as a Hermitian-tagged matrix.
    pub fn hermitian(data: Array2<C64>) -> Result<Self> {
        ensure_finite(&data, "matrix entries")?;
        let m = Self {
            data,
            hermitian: false,
        };
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let dev = m.hermitian_deviation();
        if dev >= HERMITIAN_TOL {
            return Err(LinalgError::NotHermitian { deviation: dev });
        }
        Ok(Self {
            hermitian: true,
            ..m
        })
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn is_hermitian_tagged(&self) -> bool {
        self.hermitian
    }

    pub fn array(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<C64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.hermitian = false;
        self.data[(i, j)] = v;
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        CMatrix {
            data: self.data.t().mapv(|z| z.conj()),
            hermitian: self.hermitian,
        }
    }

    /// Matrix product; panics on inner-dimension mismatch (internal use).
    pub fn dot(&self, rhs: &CMatrix) -> CMatrix {
        CMatrix {
            data: self.data.dot(&rhs.data),
            hermitian: false,
        }
    }

    pub fn matvec(&self, v: &ArrayView1<C64>) -> Array1<C64> {
        self.data.dot(v)
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// max |A - A^dagger| over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                dev = dev.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Spectral norm (largest |eigenvalue|) of a Hermitian-tagged matrix.
    pub fn spectral_norm_hermitian(&self) -> Result<f64> {
        if !self.hermitian {
            return Err(LinalgError::NotHermitian {
                deviation: self.hermitian_deviation(),
            });
        }
        let (w, _) = self
            .data
            .eigh(UPLO::Lower)
            .map_err(|e| LinalgError::EigenFailed(e.to_string()))?;
        Ok(w.iter().fold(0.0f64, |m, &x| m.max(x.abs())))
    }
}

fn ensure_finite(a: &Array2<C64>, context: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite { context })
    }
}

/// Exponential mode for [`mat_exp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpMode {
    /// `exp(-i A t)` for Hermitian-tagged `A`: the unitary propagator.
    Unitary,
    /// `exp(A t)` for a general square matrix.
    General,
}

/// Matrix exponential of a small dense matrix.
///
/// `Unitary` mode diagonalizes the (Hermitian) generator and exponentiates
/// the spectrum; `General` mode uses scaling-and-squaring with a [6/6] Pade
/// approximant. Dimensions above [`MAX_EXP_DIM`] are rejected.
pub fn mat_exp(a: &CMatrix, t: f64, mode: ExpMode) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    if n > MAX_EXP_DIM {
        return Err(LinalgError::DimTooLarge {
            dim: n,
            max: MAX_EXP_DIM,
        });
    }
    if !t.is_finite() {
        return Err(LinalgError::NonFinite { context: "time" });
    }
    let out = match mode {
        ExpMode::Unitary => {
            let dev = a.hermitian_deviation();
            if dev >= HERMITIAN_TOL {
                return Err(LinalgError::NotHermitian { deviation: dev });
            }
            let (w, v) = a
                .data
                .eigh(UPLO::Lower)
                .map_err(|e| LinalgError::EigenFailed(e.to_string()))?;
            // U = V exp(-i w t) V^dagger
            let phases = Array1::from_iter(w.iter().map(|&x| (-C64::i() * x * t).exp()));
            let mut scaled = v.clone();
            for (mut col, p) in scaled.columns_mut().into_iter().zip(phases.iter()) {
                col.map_inplace(|z| *z *= p);
            }
            scaled.dot(&v.t().mapv(|z| z.conj()))
        }
        ExpMode::General => expm_pade(&a.data.mapv(|z| z * t)),
    };
    ensure_finite(&out, "matrix exponential")?;
    Ok(CMatrix {
        data: out,
        hermitian: false,
    })
}

/// Scaling-and-squaring with a [6/6] Pade approximant.
///
/// The input is scaled so its 1-norm is at most 1/2, where the [6/6]
/// truncation error is far below 1e-14.
fn expm_pade(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm <= 0.5 {
        0
    } else {
        (norm / 0.5).log2().ceil() as u32
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings as i32));

    // c_0 = 1, c_{j+1} = c_j (m - j) / ((2m - j)(j + 1)), m = 6
    const M: usize = 6;
    let mut coeff = [0.0f64; M + 1];
    coeff[0] = 1.0;
    for j in 0..M {
        coeff[j + 1] = coeff[j] * (M - j) as f64 / ((2 * M - j) as f64 * (j + 1) as f64);
    }

    let eye: Array2<C64> = Array2::eye(n);
    let mut power = eye.clone();
    let mut num = eye.mapv(|z| z * coeff[0]);
    let mut den = eye.mapv(|z| z * coeff[0]);
    for (j, &c) in coeff.iter().enumerate().skip(1) {
        power = power.dot(&scaled);
        num = num + power.mapv(|z| z * c);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        den = den + power.mapv(|z| z * (sign * c));
    }

    // Solve den * X = num column by column.
    let mut x = Array2::<C64>::zeros((n, n));
    for j in 0..n {
        let col = num.column(j).to_owned();
        let sol = den.solve(&col).expect("Pade denominator is singular");
        x.column_mut(j).assign(&sol);
    }

    let mut result = x;
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

fn one_norm(a: &Array2<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// One right eigenpair of a general complex matrix.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    /// Unit-norm right eigenvector.
    pub vector: Array1<C64>,
}

/// Full eigendecomposition of a general (non-Hermitian) dense matrix.
///
/// Pairs come back sorted by descending real part (ties broken by descending
/// imaginary part) and every pair is verified against the residual bound
/// ||A v - lambda v||/||v|| < [`EIGEN_RESIDUAL_TOL`].
pub fn eigen_spectrum(a: &CMatrix) -> Result<Vec<EigenPair>> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let n = a.nrows();
    if n > MAX_EIG_DIM {
        return Err(LinalgError::DimTooLarge {
            dim: n,
            max: MAX_EIG_DIM,
        });
    }
    let (values, vectors) = a
        .data
        .eig()
        .map_err(|e| LinalgError::EigenFailed(e.to_string()))?;

    let mut pairs = Vec::with_capacity(n);
    let mut worst_residual: f64 = 0.0;
    for (k, &value) in values.iter().enumerate() {
        let mut vector = vectors.column(k).to_owned();
        let norm = vector.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(LinalgError::EigenFailed(format!(
                "zero eigenvector returned for eigenvalue {value}"
            )));
        }
        vector.map_inplace(|z| *z /= norm);
        let residual = {
            let av = a.data.dot(&vector);
            av.iter()
                .zip(vector.iter())
                .map(|(x, v)| (x - value * v).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        worst_residual = worst_residual.max(residual);
        pairs.push(EigenPair { value, vector });
    }
    if worst_residual >= EIGEN_RESIDUAL_TOL * a.max_abs().max(1.0) {
        return Err(LinalgError::ResidualTooLarge {
            residual: worst_residual,
            bound: EIGEN_RESIDUAL_TOL,
        });
    }
    pairs.sort_by(|p, q| {
        (q.value.re, q.value.im)
            .partial_cmp(&(p.value.re, p.value.im))
            .expect("finite eigenvalues")
    });
    Ok(pairs)
}

/// Normalized vector spanning the (near-)null space of `A`.
///
/// Picks the eigenvalue with the smallest |Re| + |Im|; errors if none lies
/// within [`NULL_TOL`] of zero. When the vector encodes a vectorized density
/// matrix the caller renormalizes by trace.
pub fn null_vector(a: &CMatrix) -> Result<Array1<C64>> {
    let pairs = eigen_spectrum(a)?;
    let best = pairs
        .iter()
        .min_by(|p, q| {
            let np = p.value.re.abs() + p.value.im.abs();
            let nq = q.value.re.abs() + q.value.im.abs();
            np.partial_cmp(&nq).expect("finite eigenvalues")
        })
        .ok_or_else(|| LinalgError::EigenFailed("empty spectrum".into()))?;
    let smallest = best.value.re.abs() + best.value.im.abs();
    if smallest >= NULL_TOL {
        return Err(LinalgError::NoNullVector {
            smallest,
            tolerance: NULL_TOL,
        });
    }
    let v = best.vector.clone();
    let residual = a
        .data
        .dot(&v)
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual >= 1e-9 * a.max_abs().max(1.0) {
        return Err(LinalgError::ResidualTooLarge {
            residual,
            bound: 1e-9,
        });
    }
    Ok(v)
}

/// Column-stacking vectorization: `vec(X)[i + d*j] = X[i][j]`.
pub fn vec_matrix(x: &CMatrix) -> Array1<C64> {
    let (rows, cols) = (x.nrows(), x.ncols());
    let mut v = Array1::zeros(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            v[i + rows * j] = x.get(i, j);
        }
    }
    v
}

/// Inverse of [`vec_matrix`] for a square d x d matrix.
pub fn unvec_matrix(v: &ArrayView1<C64>, d: usize) -> CMatrix {
    assert_eq!(v.len(), d * d, "vector length must be d^2");
    let mut x = CMatrix::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            x.set(i, j, v[i + d * j]);
        }
    }
    x
}

/// The d^2 x d^2 matrix M with `M vec(rho) = vec(left rho right)`.
///
/// Under column stacking this is `right^T kron left` (plain transpose, no
/// conjugation).
pub fn vectorize_superop(left: &CMatrix, right: &CMatrix) -> Result<CMatrix> {
    if !left.is_square() || !right.is_square() || left.nrows() != right.nrows() {
        return Err(LinalgError::DimMismatch {
            left_rows: left.nrows(),
            left_cols: left.ncols(),
            right_rows: right.nrows(),
            right_cols: right.ncols(),
        });
    }
    let rt = right.data.t();
    let kron = ndarray::linalg::kron(&rt, &left.data);
    ensure_finite(&kron, "superoperator")?;
    Ok(CMatrix {
        data: kron,
        hermitian: false,
    })
}
