//! Density matrices on the truncated two-mode space and the shared validator.

use nalgebra::DVector;

use crate::fock::{FockIndex, FockSpace};
use crate::{CMatrix, Error, Result, C64};

/// Tolerances of the state validator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { hermiticity: 1e-12, trace: 1e-12, positivity: 1e-9 }
    }
}

/// Hermitian operator on the truncated two-mode Fock space.
///
/// Trace below one is permitted (population pushed past the cutoff is simply
/// absent); all states produced by this crate from normalised inputs keep
/// unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: FockSpace,
    data: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(space: FockSpace, data: CMatrix) -> Result<Self> {
        let d = space.dim();
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: data.nrows().max(data.ncols()) });
        }
        Ok(DensityMatrix { space, data })
    }

    pub fn vacuum(space: FockSpace) -> Self {
        let mut data = CMatrix::zeros(space.dim(), space.dim());
        data[(0, 0)] = C64::new(1.0, 0.0);
        DensityMatrix { space, data }
    }

    /// Projector onto the normalised ket `psi`.
    pub fn from_ket(space: FockSpace, psi: &DVector<C64>) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: psi.len() });
        }
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateState);
        }
        let psi = psi.unscale(norm);
        Ok(DensityMatrix { space, data: &psi * psi.adjoint() })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    /// `⟨bra|ρ|ket⟩` in Fock labels.
    pub fn element(&self, row: FockIndex, col: FockIndex) -> Result<C64> {
        Ok(self.data[(self.space.flatten(row)?, self.space.flatten(col)?)])
    }

    pub fn population(&self, idx: FockIndex) -> Result<f64> {
        Ok(self.element(idx, idx)?.re)
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(O ρ)`.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        let d = self.space.dim();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                acc += op[(i, k)] * self.data[(k, i)];
            }
        }
        acc
    }

    /// Population on basis states where either mode sits at the cutoff.
    pub fn tail_population(&self) -> f64 {
        let n = self.space.n_trunc();
        self.space
            .indices()
            .enumerate()
            .filter(|(_, idx)| idx.n1 == n || idx.n2 == n)
            .map(|(i, _)| self.data[(i, i)].re)
            .sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.space.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Replaces ρ with (ρ + ρ†)/2 and returns the Frobenius norm of the correction.
    pub fn hermitize(&mut self) -> f64 {
        let sym = (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0);
        let correction = (&sym - &self.data).norm();
        self.data = sym;
        correction
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(&Tolerances::default())
    }

    pub fn validate_with(&self, tol: &Tolerances) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > tol.hermiticity {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.trace().re;
        if !(-tol.trace..=1.0 + tol.trace).contains(&tr) {
            return Err(Error::TraceOutOfRange { trace: tr });
        }
        let min = self.min_eigenvalue();
        if min < -tol.positivity {
            return Err(Error::Positivity { eigenvalue: min, tolerance: tol.positivity });
        }
        Ok(())
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.data - &other.data;
        0.5 * hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>()
    }

    /// Uhlmann fidelity `(Tr √(√σ ρ √σ))²`.
    pub fn fidelity(&self, other: &DensityMatrix) -> f64 {
        let sqrt_sigma = hermitian_sqrt(&other.data);
        let inner = &sqrt_sigma * &self.data * &sqrt_sigma;
        let s: f64 = hermitian_eigenvalues(&inner).iter().map(|e| e.max(0.0).sqrt()).sum();
        s * s
    }

    /// `U ρ U†`.
    pub fn conjugated_by(&self, u: &CMatrix) -> DensityMatrix {
        DensityMatrix { space: self.space, data: u * &self.data * u.adjoint() }
    }
}

/// `|ψ⟩⟨ψ|` from sparse Fock amplitudes, normalised.
pub fn pure_state(space: FockSpace, amplitudes: &[(FockIndex, C64)]) -> Result<DensityMatrix> {
    let mut psi = DVector::zeros(space.dim());
    for &(idx, amp) in amplitudes {
        psi[space.flatten(idx)?] += amp;
    }
    DensityMatrix::from_ket(space, &psi)
}

pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut vecs = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        for i in 0..vecs.nrows() {
            vecs[(i, j)] *= s;
        }
    }
    vecs * eig.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_projector() {
        let s = FockSpace::new(3).unwrap();
        let rho = pure_state(s, &[(FockIndex::VACUUM, c(1.0, 0.0))]).unwrap();
        assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(rho, DensityMatrix::vacuum(s));
    }

    #[test]
    fn bell_like_state_coherence() {
        let s = FockSpace::new(1).unwrap();
        let phi = 0.7_f64;
        let rho = pure_state(
            s,
            &[
                (FockIndex::new(0, 1), C64::from_polar(FRAC_1_SQRT_2, phi)),
                (FockIndex::new(1, 0), c(FRAC_1_SQRT_2, 0.0)),
            ],
        )
        .unwrap();
        let off = rho.element(FockIndex::new(0, 1), FockIndex::new(1, 0)).unwrap();
        assert!((off - C64::from_polar(0.5, phi)).norm() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        rho.validate().unwrap();
    }

    #[test]
    fn normalisation_is_idempotent() {
        let s = FockSpace::new(2).unwrap();
        let a = pure_state(s, &[(FockIndex::VACUUM, c(2.0, 0.0))]).unwrap();
        let b = pure_state(s, &[(FockIndex::VACUUM, c(1.0, 0.0))]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_amplitudes_are_degenerate() {
        let s = FockSpace::new(1).unwrap();
        assert!(matches!(pure_state(s, &[]), Err(Error::DegenerateState)));
        assert!(matches!(
            pure_state(s, &[(FockIndex::new(1, 1), c(0.0, 0.0))]),
            Err(Error::DegenerateState)
        ));
    }

    #[test]
    fn validator_flags_negative_eigenvalue() {
        let s = FockSpace::new(1).unwrap();
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.1, 0.0);
        m[(1, 1)] = c(-0.1, 0.0);
        let rho = DensityMatrix::from_matrix(s, m).unwrap();
        assert!(matches!(rho.validate(), Err(Error::Positivity { .. })));
    }

    #[test]
    fn trace_distance_and_fidelity_of_orthogonal_states() {
        let s = FockSpace::new(1).unwrap();
        let a = pure_state(s, &[(FockIndex::new(1, 0), c(1.0, 0.0))]).unwrap();
        let b = pure_state(s, &[(FockIndex::new(0, 1), c(1.0, 0.0))]).unwrap();
        assert!((a.trace_distance(&b) - 1.0).abs() < 1e-12);
        assert!(a.fidelity(&b).abs() < 1e-12);
        assert!((a.fidelity(&a) - 1.0).abs() < 1e-10);
    }
}
