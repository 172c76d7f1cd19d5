//! Vectorisation conventions.
//!
//! ρ is stacked row-major, `vec(ρ)[i·d + j] = ρ_ij`. Under this layout
//! `vec(X ρ Y) = (X ⊗ Yᵀ) vec(ρ)`, so left multiplication is `X ⊗ I` and
//! right multiplication is `I ⊗ Yᵀ`.

use nalgebra::DVector;

use crate::{CMatrix, C64};

pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    let (r, c) = m.shape();
    DVector::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

pub fn unvectorize(v: &DVector<C64>, d: usize) -> CMatrix {
    assert_eq!(v.len(), d * d, "vector length {} is not {d}²", v.len());
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// `X •`
pub fn left(x: &CMatrix) -> CMatrix {
    x.kronecker(&CMatrix::identity(x.nrows(), x.ncols()))
}

/// `• Y`
pub fn right(y: &CMatrix) -> CMatrix {
    CMatrix::identity(y.nrows(), y.ncols()).kronecker(&y.transpose())
}

/// `X • Y`
pub fn sandwich(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x.kronecker(&y.transpose())
}

/// `[X, •]`
pub fn commutator(x: &CMatrix) -> CMatrix {
    left(x) - right(x)
}

/// `2 J • J† − J†J • − • J†J`
pub fn dissipator(jump: &CMatrix) -> CMatrix {
    let jd = jump.adjoint();
    let jdj = &jd * jump;
    sandwich(jump, &jd) * C64::new(2.0, 0.0) - left(&jdj) - right(&jdj)
}

/// `−i [H, •]`
pub fn hamiltonian(h: &CMatrix) -> CMatrix {
    commutator(h) * C64::new(0.0, -1.0)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().fold(0.0_f64, |a, &b| a.max(b))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_one(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}
