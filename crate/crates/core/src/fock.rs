//! Truncated two-mode Fock space.
//!
//! Basis states `|n1, n2⟩` with `0 ≤ n_i ≤ N_trunc` are laid out row-major:
//! flat index `n1 * (N_trunc + 1) + n2`.

use crate::{CMatrix, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockIndex {
    pub n1: usize,
    pub n2: usize,
}

impl FockIndex {
    pub const VACUUM: FockIndex = FockIndex { n1: 0, n2: 0 };

    pub const fn new(n1: usize, n2: usize) -> Self {
        FockIndex { n1, n2 }
    }

    pub fn total(&self) -> usize {
        self.n1 + self.n2
    }
}

impl From<(usize, usize)> for FockIndex {
    fn from((n1, n2): (usize, usize)) -> Self {
        FockIndex { n1, n2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    n_trunc: usize,
}

impl Default for FockSpace {
    fn default() -> Self {
        FockSpace { n_trunc: crate::DEFAULT_N_TRUNC }
    }
}

impl FockSpace {
    pub fn new(n_trunc: usize) -> Result<Self> {
        if n_trunc < 1 {
            return Err(Error::InvalidDimension { n_trunc });
        }
        Ok(FockSpace { n_trunc })
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    /// Levels per mode.
    pub fn levels(&self) -> usize {
        self.n_trunc + 1
    }

    /// Hilbert-space dimension `(N_trunc + 1)²`.
    pub fn dim(&self) -> usize {
        self.levels() * self.levels()
    }

    pub fn contains(&self, idx: FockIndex) -> bool {
        idx.n1 <= self.n_trunc && idx.n2 <= self.n_trunc
    }

    pub fn flatten(&self, idx: FockIndex) -> Result<usize> {
        if !self.contains(idx) {
            return Err(Error::IndexOutOfRange { n1: idx.n1, n2: idx.n2, n_trunc: self.n_trunc });
        }
        Ok(idx.n1 * self.levels() + idx.n2)
    }

    pub fn unflatten(&self, flat: usize) -> FockIndex {
        debug_assert!(flat < self.dim());
        FockIndex { n1: flat / self.levels(), n2: flat % self.levels() }
    }

    pub fn indices(&self) -> impl Iterator<Item = FockIndex> + '_ {
        (0..self.dim()).map(|i| self.unflatten(i))
    }

    /// Annihilation operators `(a1, a2)`.
    pub fn mode_operators(&self) -> (CMatrix, CMatrix) {
        let d = self.dim();
        let mut a1 = CMatrix::zeros(d, d);
        let mut a2 = CMatrix::zeros(d, d);
        for idx in self.indices() {
            let col = idx.n1 * self.levels() + idx.n2;
            if idx.n1 > 0 {
                let row = (idx.n1 - 1) * self.levels() + idx.n2;
                a1[(row, col)] = C64::new((idx.n1 as f64).sqrt(), 0.0);
            }
            if idx.n2 > 0 {
                let row = idx.n1 * self.levels() + idx.n2 - 1;
                a2[(row, col)] = C64::new((idx.n2 as f64).sqrt(), 0.0);
            }
        }
        (a1, a2)
    }

    /// Number operators `(a1†a1, a2†a2)` as exact diagonals.
    pub fn number_operators(&self) -> (CMatrix, CMatrix) {
        let d = self.dim();
        let mut n1 = CMatrix::zeros(d, d);
        let mut n2 = CMatrix::zeros(d, d);
        for (i, idx) in self.indices().enumerate() {
            n1[(i, i)] = C64::new(idx.n1 as f64, 0.0);
            n2[(i, i)] = C64::new(idx.n2 as f64, 0.0);
        }
        (n1, n2)
    }

    /// Projector onto basis states with at least one mode at the cutoff.
    pub fn edge_projector(&self) -> CMatrix {
        let d = self.dim();
        let mut p = CMatrix::zeros(d, d);
        for (i, idx) in self.indices().enumerate() {
            if idx.n1 == self.n_trunc || idx.n2 == self.n_trunc {
                p[(i, i)] = C64::new(1.0, 0.0);
            }
        }
        p
    }
}

/// Annihilation operators of the two modes on the truncated space.
pub fn mode_operators(n_trunc: usize) -> Result<(CMatrix, CMatrix)> {
    Ok(FockSpace::new(n_trunc)?.mode_operators())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(space: &FockSpace, n1: usize, n2: usize) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(space.dim());
        v[space.flatten(FockIndex::new(n1, n2)).unwrap()] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn zero_truncation_is_rejected() {
        assert!(matches!(mode_operators(0), Err(Error::InvalidDimension { n_trunc: 0 })));
    }

    #[test]
    fn lowering_one_photon() {
        let s = FockSpace::new(1).unwrap();
        let (a1, _) = s.mode_operators();
        assert_eq!(&a1 * ket(&s, 1, 0), ket(&s, 0, 0));
        assert!((&a1 * ket(&s, 0, 0)).norm() == 0.0);
    }

    #[test]
    fn lowering_two_photons() {
        let s = FockSpace::new(2).unwrap();
        let (a1, _) = s.mode_operators();
        let expect = ket(&s, 1, 0) * C64::new(2f64.sqrt(), 0.0);
        assert!((&a1 * ket(&s, 2, 0) - expect).norm() < 1e-15);
    }

    #[test]
    fn modes_commute_exactly() {
        let (a1, a2) = mode_operators(3).unwrap();
        let comm = &a1 * &a2 - &a2 * &a1;
        assert_eq!(comm.norm(), 0.0);
        let comm = &a1 * a2.adjoint() - a2.adjoint() * &a1;
        assert_eq!(comm.norm(), 0.0);
    }

    #[test]
    fn flat_index_round_trip() {
        for n in 1..5 {
            let s = FockSpace::new(n).unwrap();
            for flat in 0..s.dim() {
                assert_eq!(s.flatten(s.unflatten(flat)).unwrap(), flat);
            }
            for idx in s.indices() {
                assert_eq!(s.unflatten(s.flatten(idx).unwrap()), idx);
            }
        }
        let s = FockSpace::new(2).unwrap();
        assert!(s.flatten(FockIndex::new(3, 0)).is_err());
    }

    #[test]
    fn number_operator_matches_ladder_product() {
        let s = FockSpace::new(3).unwrap();
        let (a1, a2) = s.mode_operators();
        let (n1, n2) = s.number_operators();
        assert!((a1.adjoint() * &a1 - n1).norm() < 1e-14);
        assert!((a2.adjoint() * &a2 - n2).norm() < 1e-14);
    }
}
