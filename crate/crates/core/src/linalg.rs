//! Dense complex linear algebra used throughout the simulator.
//!
//! Everything here is a thin layer over `nalgebra`: Hermitian
//! eigendecompositions with a deterministic ordering and phase convention,
//! principal square roots, Haar-distributed bases and a few norms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense complex matrix; the substrate for channels, precoders and bases.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending and `vectors.column(j)` belongs to
/// `values[j]`. Each eigenvector is rotated so that its first component with
/// magnitude above `1e-12` is real and positive.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Columns for the `count` smallest eigenvalues.
    pub fn smallest(&self, count: usize) -> ComplexMatrix {
        self.vectors.columns(0, count).into_owned()
    }

    /// Columns for the `count` largest eigenvalues, largest first.
    pub fn largest(&self, count: usize) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(self.vectors.nrows(), count);
        for j in 0..count {
            out.set_column(j, &self.vectors.column(n - 1 - j));
        }
        out
    }
}

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Squared Frobenius norm.
pub fn frob2(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frob(m: &ComplexMatrix) -> f64 {
    frob2(m).sqrt()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest elementwise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M*) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn fix_phase_first_nonzero(v: &mut ComplexVector) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|c| *c *= rot);
    }
}

/// Rotates `v` so its largest-magnitude component is real and positive.
pub fn align_phase_to_largest(v: &mut ComplexVector) {
    let mut best = Complex64::new(0.0, 0.0);
    for z in v.iter() {
        if z.norm() > best.norm() {
            best = *z;
        }
    }
    if best.norm() > 0.0 {
        let rot = best.conj() / best.norm();
        v.iter_mut().for_each(|c| *c *= rot);
    }
}

/// Eigendecomposition of the Hermitian part of `m`, ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    assert!(m.is_square(), "hermitian_eigen needs a square matrix");
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let mut col: ComplexVector = eig.eigenvectors.column(src).into_owned();
        fix_phase_first_nonzero(&mut col);
        vectors.set_column(dst, &col);
    }
    HermitianEigen { values, vectors }
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Rejects inputs whose smallest eigenvalue is below `-1e-10`; eigenvalues in
/// `[-1e-10, 0)` are treated as zero.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "psd_sqrt of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let eig = hermitian_eigen(m);
    if let Some(&min) = eig.values.first() {
        if min < -1e-10 {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    let n = m.nrows();
    let mut scaled = eig.vectors.clone();
    for j in 0..n {
        let s = eig.values[j].max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(hermitian_part(&(scaled * eig.vectors.adjoint())))
}

/// Singular values, descending.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Inverse of a square matrix, refusing numerically singular inputs.
///
/// A matrix is singular here when its smallest singular value falls below
/// `1e-12` times the largest.
pub fn checked_inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "inverse of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let s = singular_values(m);
    let (max, min) = (s[0], s[s.len() - 1]);
    if !(min > 1e-12 * max) {
        return Err(Error::Degenerate(format!(
            "singular matrix (sigma_min={min:e}, sigma_max={max:e})"
        )));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("LU inverse failed".into()))
}

/// Matrix with i.i.d. CN(0,1) entries (variance 1/2 per real component).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // column-major fill keeps the draw order fixed for a given shape
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Orthonormal basis for the column span of a full-column-rank matrix.
///
/// Uses Householder QR and rotates each column by the phase of the matching
/// diagonal entry of R, which makes the map from a Gaussian matrix to its
/// basis Haar distributed.
pub fn orthonormalize(m: &ComplexMatrix) -> ComplexMatrix {
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    q
}

/// Haar-random `n x k` matrix with orthonormal columns.
pub fn haar_basis<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> ComplexMatrix {
    if k == 0 {
        return ComplexMatrix::zeros(n, 0);
    }
    orthonormalize(&complex_gaussian(rng, n, k))
}

/// `I - C C*`, the projector onto the orthogonal complement of span(C).
pub fn complement_projector(c: &ComplexMatrix) -> ComplexMatrix {
    identity(c.nrows()) - c * c.adjoint()
}

/// `|| A* A - I ||_F`.
pub fn orthonormality_defect(a: &ComplexMatrix) -> f64 {
    frob(&(a.adjoint() * a - identity(a.ncols())))
}
