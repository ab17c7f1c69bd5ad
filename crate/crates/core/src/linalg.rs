//! Small dense complex linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// One circularly-symmetric CN(0, 1) sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    DVector::from_fn(len, |_, _| complex_normal(rng))
}

/// Largest deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// (A + Aᴴ)/2.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(a));
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Lower Cholesky factor of a Hermitian matrix, `None` unless every pivot
/// is real and strictly positive.
///
/// `nalgebra::Cholesky` takes complex square roots of the pivots and so
/// never reports an indefinite complex matrix; this one does.
pub fn cholesky(a: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    let mut l = a.clone();
    let data = l.as_mut_slice();
    for j in 0..n {
        let (head, tail) = data.split_at_mut((j + 1) * n);
        let col_j = &mut head[j * n..];
        let pivot = col_j[j].re;
        if !(pivot > 0.0 && pivot.is_finite()) {
            return None;
        }
        let ljj = pivot.sqrt();
        col_j[j] = Complex64::new(ljj, 0.0);
        let inv = 1.0 / ljj;
        for z in &mut col_j[j + 1..] {
            *z *= inv;
        }
        // Trailing update of the lower triangle, one column at a time.
        for k in j + 1..n {
            let f = col_j[k].conj();
            let col_k = &mut tail[(k - j - 1) * n..(k - j) * n];
            for (dst, src) in col_k[k..].iter_mut().zip(&col_j[k..]) {
                *dst -= src * f;
            }
        }
    }
    for j in 1..n {
        for i in 0..j {
            l[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix with non-zero diagonal.
pub fn lower_triangular_inverse(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut inv = CMatrix::zeros(n, n);
    let ls = l.as_slice();
    for j in 0..n {
        let col = &mut inv.as_mut_slice()[j * n..(j + 1) * n];
        col[j] = Complex64::new(1.0, 0.0);
        for k in j..n {
            let xk = col[k] / ls[k * n + k];
            col[k] = xk;
            let lk = &ls[k * n..(k + 1) * n];
            for (dst, src) in col[k + 1..].iter_mut().zip(&lk[k + 1..]) {
                *dst -= src * xk;
            }
        }
    }
    inv
}

/// Inverse of a Hermitian positive definite matrix.
pub fn hpd_inverse(a: &CMatrix) -> Option<CMatrix> {
    let l_inv = lower_triangular_inverse(&cholesky(a)?);
    let n = a.nrows();
    // A⁻¹ = L⁻ᴴ L⁻¹, entry (i, j) = <column i, column j> of L⁻¹.
    let mut out = CMatrix::zeros(n, n);
    let cols = l_inv.as_slice();
    for j in 0..n {
        let cj = &cols[j * n..(j + 1) * n];
        for i in 0..=j {
            let ci = &cols[i * n..(i + 1) * n];
            let start = j.max(i);
            let v: Complex64 = ci[start..].iter().zip(&cj[start..]).map(|(a, b)| a.conj() * b).sum();
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    Some(out)
}

/// Whether a Hermitian matrix is positive definite.
pub fn is_positive_definite(a: &CMatrix) -> bool {
    cholesky(a).is_some()
}

/// Dense product `A B`, column-major axpy kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (rows, inner) = a.shape();
    assert_eq!(inner, b.nrows(), "matmul dimension mismatch");
    let cols = b.ncols();
    let mut c = CMatrix::zeros(rows, cols);
    let asl = a.as_slice();
    let bsl = b.as_slice();
    let csl = c.as_mut_slice();
    for j in 0..cols {
        let cj = &mut csl[j * rows..(j + 1) * rows];
        for k in 0..inner {
            let bkj = bsl[j * inner + k];
            if bkj.re == 0.0 && bkj.im == 0.0 {
                continue;
            }
            for (dst, src) in cj.iter_mut().zip(&asl[k * rows..(k + 1) * rows]) {
                *dst += src * bkj;
            }
        }
    }
    c
}

/// A factor `F` with `F Fᴴ = R` for a Hermitian PSD `R`.
///
/// Uses the lower Cholesky factor when `R` is positive definite and falls
/// back to the eigen square root for singular PSD input. Fails when `R` has
/// an eigenvalue below `-tol`.
pub fn psd_factor(r: &CMatrix, tol: f64) -> Result<CMatrix> {
    if !r.is_square() {
        return Err(invalid("correlation matrix must be square"));
    }
    if hermitian_defect(r) > tol {
        return Err(invalid("correlation matrix is not Hermitian"));
    }
    if let Some(l) = cholesky(&hermitian_part(r)) {
        return Ok(l);
    }
    let (values, vectors) = hermitian_eigen(r);
    if values.iter().any(|&v| v < -tol) {
        return Err(invalid("correlation matrix is not positive semidefinite"));
    }
    let mut f = vectors;
    for (j, v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    Ok(f)
}

pub fn real_to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Rotates `v` so that its first entry with modulus above `tol` is real and positive.
pub fn normalize_global_phase(v: &mut CVector, tol: f64) {
    if let Some(pivot) = v.iter().find(|z| z.norm() > tol).copied() {
        let rot = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

pub(crate) fn numeric(routine: &'static str, detail: impl Into<String>) -> Error {
    Error::Numeric {
        routine,
        detail: detail.into(),
    }
}
