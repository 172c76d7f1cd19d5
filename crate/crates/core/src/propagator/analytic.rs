use super::coefficients::compute_coefficients;
use super::schedule::{factorization_params, FactorizationSchedule};
use crate::fock::{FockIndex, FockSpace};
use crate::state::{pure_state, DensityMatrix};
use crate::{CMatrix, Error, Result, SystemParams, C64};

#[derive(Clone, Copy)]
enum Mode {
    One,
    Two,
}

fn occupation(space: FockSpace, flat: usize, mode: Mode) -> f64 {
    let idx = space.unflatten(flat);
    match mode {
        Mode::One => idx.n1 as f64,
        Mode::Two => idx.n2 as f64,
    }
}

/// `e^{m a†a} ρ`
fn left_number(space: FockSpace, rho: &mut CMatrix, m: C64, mode: Mode) {
    for i in 0..rho.nrows() {
        let f = (m * occupation(space, i, mode)).exp();
        let mut row = rho.row_mut(i);
        row *= f;
    }
}

/// `ρ e^{p a†a}`
fn right_number(space: FockSpace, rho: &mut CMatrix, p: C64, mode: Mode) {
    for j in 0..rho.ncols() {
        let f = (p * occupation(space, j, mode)).exp();
        let mut col = rho.column_mut(j);
        col *= f;
    }
}

/// `e^{x X}` for nilpotent `X`; the series stops once a power vanishes.
fn exp_nilpotent(x: C64, gen: &CMatrix) -> CMatrix {
    let d = gen.nrows();
    let mut sum = CMatrix::identity(d, d);
    let mut term = CMatrix::identity(d, d);
    for k in 1..=2 * d {
        term = &term * gen * (x / k as f64);
        if term.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            break;
        }
        sum += &term;
    }
    sum
}

/// `Σ_k x^k/k! A^k ρ B^k`; terminates because `A` lowers a photon number.
fn sandwich_series(x: C64, a: &CMatrix, b: &CMatrix, rho: &CMatrix) -> CMatrix {
    let mut sum = rho.clone();
    if x == C64::new(0.0, 0.0) {
        return sum;
    }
    let mut cur = rho.clone();
    for k in 1..=a.nrows() {
        cur = a * &cur * b * (x / k as f64);
        if cur.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            break;
        }
        sum += &cur;
    }
    sum
}

/// Applies the twelve factors of `s` to `rho`, rightmost factor first.
pub fn apply_schedule(rho: &DensityMatrix, s: &FactorizationSchedule) -> DensityMatrix {
    let space = rho.space();
    let (a1, a2) = space.mode_operators();
    let (a1d, a2d) = (a1.adjoint(), a2.adjoint());
    let hop12 = &a1d * &a2; // a1†a2
    let hop21 = &a2d * &a1; // a2†a1

    let mut m = rho.matrix().clone();
    m = &m * exp_nilpotent(s.q_l, &hop21);
    m = exp_nilpotent(s.q, &hop12) * &m;
    right_number(space, &mut m, s.p1, Mode::One);
    left_number(space, &mut m, s.m1, Mode::One);
    right_number(space, &mut m, s.p2, Mode::Two);
    left_number(space, &mut m, s.m2, Mode::Two);
    m = exp_nilpotent(s.n, &hop21) * &m;
    m = &m * exp_nilpotent(s.n_l, &hop12);
    m = sandwich_series(s.z, &a2, &a1d, &m);
    m = sandwich_series(s.z_l, &a1, &a2d, &m);
    m = sandwich_series(s.h2, &a2, &a2d, &m);
    m = sandwich_series(s.h1, &a1, &a1d, &m);
    DensityMatrix::from_matrix(space, m).expect("dimensions unchanged")
}

/// Largest `2k_m Δt` covered by one application of the factorised form.
///
/// The sandwich exponents grow like `e^{2k_m Δt}` while the diagonal factors
/// shrink mode-2 amplitudes by the same amount, so for long intervals the
/// factors produce large intermediate terms that cancel in the result and
/// round-off grows with them. Longer intervals are split into equal pieces
/// and composed, using `e^{L(t1+t2)} = e^{Lt2} e^{Lt1}`.
pub const MAX_GROWTH_EXPONENT: f64 = 2.0;

/// Number of equal pieces [`propagate_analytic`] splits `t` into.
pub fn substeps(params: &SystemParams, t: f64) -> usize {
    let km = 0.5 * (params.k11 + params.k22);
    ((2.0 * km * t / MAX_GROWTH_EXPONENT).ceil() as usize).max(1)
}

/// `e^{Lt} ρ0` through the factorised exponential.
///
/// On the truncated space the result is exact for states whose total photon
/// number does not exceed the per-mode cutoff. Each piece of a split interval
/// applies the twelve factors in their fixed order; if `F1` happens to vanish
/// on the chosen piece length, one more piece is used.
pub fn propagate_analytic(rho0: &DensityMatrix, params: &SystemParams, t: f64) -> Result<DensityMatrix> {
    if t == 0.0 {
        factorization_params(params, t)?;
        return Ok(rho0.clone());
    }
    let n = substeps(params, t);
    let mut attempt = 0;
    let (pieces, s) = loop {
        let pieces = n + attempt;
        match factorization_params(params, t / pieces as f64) {
            Ok(s) => break (pieces, s),
            Err(Error::SingularFactorization { .. }) if attempt < 2 => attempt += 1,
            Err(e) => return Err(e),
        }
    };
    let mut rho = apply_schedule(rho0, &s);
    for _ in 1..pieces {
        rho = apply_schedule(&rho, &s);
    }
    Ok(rho)
}

/// `(e^{iφ}|0,1⟩ + |1,0⟩)/√2`.
pub fn single_photon_state(phi: f64, space: FockSpace) -> Result<DensityMatrix> {
    pure_state(
        space,
        &[(FockIndex::new(0, 1), C64::from_polar(1.0, phi)), (FockIndex::new(1, 0), C64::new(1.0, 0.0))],
    )
}

/// Closed-form evolution of [`single_photon_state`] for a time `tau`: the
/// one-photon amplitudes move with the transfer matrix and the lost
/// population collects in the vacuum.
pub fn single_photon_evolution(phi: f64, params: &SystemParams, tau: f64, space: FockSpace) -> Result<DensityMatrix> {
    let co = compute_coefficients(params, tau)?;
    let e = C64::from_polar(1.0, phi);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c10 = (co.f1 + e * co.l1) * s;
    let c01 = (e * co.f2 + co.l2) * s;
    let i10 = space.flatten(FockIndex::new(1, 0))?;
    let i01 = space.flatten(FockIndex::new(0, 1))?;
    let i00 = space.flatten(FockIndex::VACUUM)?;
    let mut m = CMatrix::zeros(space.dim(), space.dim());
    let amps = [(i10, c10), (i01, c01)];
    for &(i, ci) in &amps {
        for &(j, cj) in &amps {
            m[(i, j)] = ci * cj.conj();
        }
    }
    m[(i00, i00)] = C64::new(1.0 - c10.norm_sqr() - c01.norm_sqr(), 0.0);
    DensityMatrix::from_matrix(space, m)
}
