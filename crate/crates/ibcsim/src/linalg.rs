//! Small complex linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Solves `a x = b` for Hermitian positive-definite `a` via Cholesky.
///
/// Returns `None` when the factorization fails. nalgebra's complex
/// Cholesky takes complex square roots of negative pivots instead of
/// failing, so the factor diagonal is checked for real-positive entries.
pub fn hermitian_solve(a: &CMatrix, b: &CVector) -> Option<CVector> {
    let chol = a.clone().cholesky()?;
    let l = chol.l();
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re {
            return None;
        }
    }
    Some(chol.solve(b))
}

/// Accumulates `acc += v v^H`.
pub fn add_outer(acc: &mut CMatrix, v: &CVector) {
    acc.gerc(C64::new(1.0, 0.0), v, v, C64::new(1.0, 0.0));
}

/// The `k` dominant right singular vectors of `h`, ordered by decreasing
/// singular value.
///
/// Computed as the top eigenvectors of the Hermitian Gram matrix `h^H h`.
/// Each vector is unit norm with a deterministic phase: the first entry of
/// non-negligible magnitude is made real and positive.
pub fn dominant_right_singular_vectors(h: &CMatrix, k: usize) -> Result<Vec<CVector>> {
    let n = h.ncols();
    if k > n {
        return Err(Error::domain(format!(
            "requested {k} singular vectors from a matrix with {n} columns"
        )));
    }
    let gram = h.adjoint() * h;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vectors = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut v: CVector = eig.eigenvectors.column(idx).into_owned();
        normalize_phase(&mut v);
        let norm = v.norm();
        if norm > 0.0 {
            v /= C64::new(norm, 0.0);
        }
        vectors.push(v);
    }
    Ok(vectors)
}

/// Rotates `v` so its first entry of magnitude > 1e-12·‖v‖ is real-positive.
pub fn normalize_phase(v: &mut CVector) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let tol = 1e-12 * norm;
    if let Some(pivot) = v.iter().find(|z| z.norm() > tol).copied() {
        let phase = pivot.conj() / C64::new(pivot.norm(), 0.0);
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// True when every entry of `m` is finite.
pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
