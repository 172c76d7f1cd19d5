use crate::fock::FockSpace;
use crate::generator::superop::{self, commutator, left, right, sandwich};
use crate::state::DensityMatrix;
use crate::{CMatrix, Result, SystemParams, C64};

/// Superoperator matrix acting on row-major vectorised density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    space: FockSpace,
    params: SystemParams,
    matrix: CMatrix,
}

impl Liouvillian {
    /// Wraps an already assembled superoperator. The matrix must be
    /// `dim² × dim²` for the given space.
    pub fn from_parts(space: FockSpace, params: SystemParams, matrix: CMatrix) -> Self {
        let n = space.dim() * space.dim();
        assert_eq!(matrix.shape(), (n, n), "superoperator shape does not match space");
        Liouvillian { space, params, matrix }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `L ρ` as an operator.
    pub fn apply(&self, rho: &DensityMatrix) -> CMatrix {
        let v = &self.matrix * superop::vectorize(rho.matrix());
        superop::unvectorize(&v, self.space.dim())
    }

    /// Induced 1-norm of the superoperator matrix.
    pub fn norm_one(&self) -> f64 {
        superop::norm_one(&self.matrix)
    }
}

impl std::ops::Add for &Liouvillian {
    type Output = Liouvillian;

    fn add(self, rhs: &Liouvillian) -> Liouvillian {
        assert_eq!(self.space, rhs.space);
        Liouvillian { space: self.space, params: self.params, matrix: &self.matrix + &rhs.matrix }
    }
}

/// Assembles the two-mode Liouvillian term by term:
///
/// ```text
/// L = k11 (2 a1•a1† − •a1†a1 − a1†a1•) + i(Δ11 − Ω1)[a1†a1, •]
///   + k22 (2 a2•a2† − •a2†a2 − a2†a2•) + i(Δ22 − Ω2)[a2†a2, •]
///   + k12 (a1•a2† + a2•a1† − •a2†a1 − a1†a2•)
///   + k21 (a2•a1† + a1•a2† − •a1†a2 − a2†a1•)
///   + i(Δ12 − Δ21)/2 (a1•a2† − a2•a1† − •a2†a1 + a1†a2•)
///   + i(Δ21 − Δ12)/2 (a2•a1† − a1•a2† − •a1†a2 + a2†a1•)
///   + i(Δ12 + Δ21)/2 [a1†a2 + a2†a1, •]
/// ```
pub fn build_liouvillian(params: &SystemParams, n_trunc: usize) -> Result<Liouvillian> {
    params.validate()?;
    let space = FockSpace::new(n_trunc)?;
    let (a1, a2) = space.mode_operators();
    let (a1d, a2d) = (a1.adjoint(), a2.adjoint());
    let n1 = &a1d * &a1;
    let n2 = &a2d * &a2;
    let a1d_a2 = &a1d * &a2;
    let a2d_a1 = &a2d * &a1;

    let re = |x: f64| C64::new(x, 0.0);
    let im = |x: f64| C64::new(0.0, x);
    let p = params;

    let s12 = sandwich(&a1, &a2d); // a1 • a2†
    let s21 = sandwich(&a2, &a1d); // a2 • a1†

    let mut m = (sandwich(&a1, &a1d) * re(2.0) - right(&n1) - left(&n1)) * re(p.k11);
    m += commutator(&n1) * im(p.delta11 - p.omega1);
    m += (sandwich(&a2, &a2d) * re(2.0) - right(&n2) - left(&n2)) * re(p.k22);
    m += commutator(&n2) * im(p.delta22 - p.omega2);
    m += (&s12 + &s21 - right(&a2d_a1) - left(&a1d_a2)) * re(p.k12);
    m += (&s21 + &s12 - right(&a1d_a2) - left(&a2d_a1)) * re(p.k21);
    m += (&s12 - &s21 - right(&a2d_a1) + left(&a1d_a2)) * im((p.delta12 - p.delta21) / 2.0);
    m += (&s21 - &s12 - right(&a1d_a2) + left(&a2d_a1)) * im((p.delta21 - p.delta12) / 2.0);
    m += commutator(&(&a1d_a2 + &a2d_a1)) * im((p.delta12 + p.delta21) / 2.0);

    if !p.is_physical() {
        log::warn!("Liouvillian built from a non-physical parameter set (cross terms exceed the PSD bound)");
    }
    Ok(Liouvillian { space, params: *p, matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockIndex;
    use crate::generator::superop::spectral_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn generic() -> SystemParams {
        SystemParams {
            omega1: 1.3,
            omega2: 0.9,
            k11: 0.07,
            k22: 0.04,
            k12: 0.02,
            k21: 0.035,
            delta11: 0.011,
            delta22: -0.02,
            delta12: 0.013,
            delta21: -0.006,
        }
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
        let m = CMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        &m + m.adjoint()
    }

    #[test]
    fn trace_annihilating_columns() {
        let l = build_liouvillian(&generic(), 2).unwrap();
        let d = l.space().dim();
        // Tr(Lρ) = Σ_i (Lρ)_ii, so the diagonal rows of L must sum to zero column-wise
        for col in 0..d * d {
            let s: C64 = (0..d).map(|i| l.matrix()[(i * d + i, col)]).sum();
            assert!(s.norm() < 1e-12, "column {col} has trace weight {s}");
        }
    }

    #[test]
    fn trace_preserved_on_random_hermitian_states() {
        let l = build_liouvillian(&generic(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, l.space().dim());
            let rho = DensityMatrix::from_matrix(l.space(), h).unwrap();
            assert!(l.apply(&rho).trace().norm() < 1e-12);
        }
    }

    #[test]
    fn hermiticity_preserving() {
        let l = build_liouvillian(&generic(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let h = random_hermitian(&mut rng, l.space().dim());
            let out = l.apply(&DensityMatrix::from_matrix(l.space(), h).unwrap());
            assert!((&out - out.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn single_damped_mode_population_rate() {
        let p = SystemParams::decoupled(0.0, 0.0, 0.3, 0.0);
        let l = build_liouvillian(&p, 1).unwrap();
        let s = l.space();
        let i10 = s.flatten(FockIndex::new(1, 0)).unwrap();
        let i00 = s.flatten(FockIndex::VACUUM).unwrap();
        let d = s.dim();
        let (v10, v00) = (i10 * d + i10, i00 * d + i00);
        // restricted 2×2 block on {|1,0⟩⟨1,0|, |0,0⟩⟨0,0|}
        assert!((l.matrix()[(v10, v10)] - C64::new(-0.6, 0.0)).norm() < 1e-15);
        assert!((l.matrix()[(v00, v10)] - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert!(l.matrix()[(v10, v00)].norm() < 1e-15);
        assert!(l.matrix()[(v00, v00)].norm() < 1e-15);
    }

    #[test]
    fn mode_swap_conjugates_by_permutation() {
        let p = generic();
        let n = 2;
        let l = build_liouvillian(&p, n).unwrap();
        let ls = build_liouvillian(&p.swapped(), n).unwrap();
        let s = l.space();
        let d = s.dim();
        let perm = |i: usize| {
            let idx = s.unflatten(i);
            s.flatten(FockIndex::new(idx.n2, idx.n1)).unwrap()
        };
        let mut big = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                big[(perm(i) * d + perm(j), i * d + j)] = C64::new(1.0, 0.0);
            }
        }
        let conj = &big * l.matrix() * &big;
        assert!(spectral_norm(&(ls.matrix() - conj)) < 1e-12);
    }

    #[test]
    fn vacuum_is_stationary() {
        let l = build_liouvillian(&generic(), 3).unwrap();
        let v = DensityMatrix::vacuum(l.space());
        assert!(l.apply(&v).norm() < 1e-15);
    }
}
