//! Small dense complex linear algebra sized for this problem: matrices up to
//! 8x8, one-sided Jacobi SVD, and a closed-form eigensolver for the real
//! symmetric part of a 2x2 Hermitian matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Rejects empty shapes,
    /// length mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidDimensions(format!(
                "expected {rows}x{cols}={} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        let m = Self { rows, cols, entries };
        m.check_finite()?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    /// Conjugate transpose.
    pub fn hermitian_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::InvalidDimensions(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        }))
    }

    /// New matrix keeping only the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        for &j in indices {
            if j >= self.cols {
                return Err(Error::IndexOutOfRange(format!(
                    "column {j} out of range for {}x{}",
                    self.rows, self.cols
                )));
            }
        }
        Ok(Self::from_fn(self.rows, indices.len(), |i, c| {
            self.get(i, indices[c])
        }))
    }

    /// Largest absolute deviation from Hermitian symmetry.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols.min(self.rows) {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_finite(&self) -> Result<()> {
        if self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("matrix entries".into()))
        }
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Sum of squared magnitudes of all entries. Equals the sum of squared
/// singular values (trace identity).
pub fn frobenius_sq(m: &ComplexMatrix) -> f64 {
    m.entries.iter().map(|z| z.norm_sqr()).sum()
}

/// Thin SVD `A = W diag(sigma) U^H` with `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Singular values, sorted non-increasing, all >= 0.
    pub singular_values: Vec<f64>,
    /// `rows x k` matrix of left singular vectors (orthonormal columns).
    pub left_vectors: ComplexMatrix,
    /// `cols x k` matrix of right singular vectors (orthonormal columns).
    pub right_vectors: ComplexMatrix,
}

impl SvdResult {
    /// `W diag(sigma) U^H`, for reconstruction checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let rows = self.left_vectors.rows();
        let cols = self.right_vectors.rows();
        let k = self.singular_values.len();
        ComplexMatrix::from_fn(rows, cols, |i, j| {
            (0..k)
                .map(|s| {
                    self.left_vectors.get(i, s)
                        * self.singular_values[s]
                        * self.right_vectors.get(j, s).conj()
                })
                .sum()
        })
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;
const JACOBI_TOL: f64 = 1e-14;

/// One-sided Jacobi SVD. Matrices here never exceed 8x8, where the method
/// is both robust and accurate to near machine precision.
pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    m.check_finite()?;
    if m.rows >= m.cols {
        svd_tall(m)
    } else {
        // Decompose the conjugate transpose and swap the vector roles:
        // A^H = W S U^H  =>  A = U S W^H.
        let r = svd_tall(&m.hermitian_transpose())?;
        Ok(SvdResult {
            singular_values: r.singular_values,
            left_vectors: r.right_vectors,
            right_vectors: r.left_vectors,
        })
    }
}

fn svd_tall(m: &ComplexMatrix) -> Result<SvdResult> {
    let rows = m.rows;
    let cols = m.cols;
    debug_assert!(rows >= cols);

    // Column-major working copy; Jacobi rotations orthogonalize column pairs.
    let mut b: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m.get(i, j)).collect())
        .collect();
    let mut v = ComplexMatrix::identity(cols);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut converged = true;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha: f64 = b[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = b[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = b[p]
                    .iter()
                    .zip(b[q].iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if g <= JACOBI_TOL * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                converged = false;

                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let u = gamma / g; // unit phase of the inner product

                for i in 0..rows {
                    let bp = b[p][i];
                    let bq = b[q][i];
                    b[p][i] = c * bp - s * u.conj() * bq;
                    b[q][i] = s * u * bp + c * bq;
                }
                for i in 0..cols {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v[(i, p)] = c * vp - s * u.conj() * vq;
                    v[(i, q)] = s * u * vp + c * vq;
                }
            }
        }
        if converged {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = b
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&a, &bb| norms[bb].partial_cmp(&norms[a]).unwrap());

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);

    let mut left = ComplexMatrix::zeros(rows, cols);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > sigma_max * 1e-12 && norms[j] > 0.0 {
            for i in 0..rows {
                left[(i, k)] = b[j][i] / norms[j];
            }
        } else {
            complete_orthonormal_column(&mut left, k, rows);
        }
    }

    let right = ComplexMatrix::from_fn(cols, cols, |i, k| v.get(i, order[k]));

    Ok(SvdResult {
        singular_values,
        left_vectors: left,
        right_vectors: right,
    })
}

/// Fills column `k` with a unit vector orthogonal to columns `0..k`
/// (used when the input is rank deficient).
fn complete_orthonormal_column(w: &mut ComplexMatrix, k: usize, rows: usize) {
    for cand in 0..rows {
        let mut col = vec![Complex64::new(0.0, 0.0); rows];
        col[cand] = Complex64::new(1.0, 0.0);
        // Gram-Schmidt against the already placed columns.
        for prev in 0..k {
            let proj: Complex64 = (0..rows).map(|i| w.get(i, prev).conj() * col[i]).sum();
            for i in 0..rows {
                let wp = w.get(i, prev);
                col[i] -= proj * wp;
            }
        }
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.5 {
            for i in 0..rows {
                w[(i, k)] = col[i] / norm;
            }
            return;
        }
    }
    // Unreachable: among `rows` basis candidates at least one must have a
    // large residual against fewer than `rows` orthonormal columns.
    unreachable!("orthonormal completion failed");
}

/// Eigendecomposition of the real symmetric part of a 2x2 Hermitian matrix.
///
/// Polarization vectors are constrained real, and `p^T H p = p^T Re(H) p`
/// for real `p` and Hermitian `H`, so the maximizer over real unit vectors
/// is the dominant eigenvector of `Re(H)`.
#[derive(Debug, Clone)]
pub struct Hermitian2Eigen {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Unit eigenvector for `lambda1`.
    pub e1: [f64; 2],
    /// Unit eigenvector for `lambda2`, sign-fixed to a non-negative first
    /// component (non-negative second if the first is zero).
    pub e2: [f64; 2],
}

const HERMITIAN_TOL: f64 = 1e-10;
const DEGENERATE_TOL: f64 = 1e-12;

pub fn eig2_symmetric_part(h: &ComplexMatrix) -> Result<Hermitian2Eigen> {
    if h.rows != 2 || h.cols != 2 {
        return Err(Error::InvalidDimensions(format!(
            "expected 2x2 matrix, got {}x{}",
            h.rows, h.cols
        )));
    }
    h.check_finite()?;
    let scale = h.max_abs().max(1.0);
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian {
            deviation: dev,
            tolerance: HERMITIAN_TOL * scale,
        });
    }

    let a = h.get(0, 0).re;
    let c = h.get(1, 1).re;
    let b = 0.5 * (h.get(0, 1).re + h.get(1, 0).re);

    let mid = 0.5 * (a + c);
    let r = f64::hypot(0.5 * (a - c), b);
    let (lambda1, lambda2) = (mid - r, mid + r);

    // Degenerate spectrum: any direction is an eigenvector; pick angle 0.
    let theta = if r <= DEGENERATE_TOL * scale {
        0.0
    } else {
        0.5 * f64::atan2(2.0 * b, a - c)
    };
    // theta is in (-pi/2, pi/2], so cos(theta) >= 0 already.
    let e2 = [theta.cos(), theta.sin()];
    let e1 = [-e2[1], e2[0]];

    Ok(Hermitian2Eigen { lambda1, lambda2, e1, e2 })
}
