//! Decoherence-free subspaces of the two-mode reservoir.
//!
//! When the coefficients satisfy
//! `k22 + iΔ22 = κ²(k11 + iΔ11)` and `k12 + iΔ12 = k21 + iΔ21 = κ(k11 + iΔ11)`
//! with equal bare frequencies, the Liouvillian splits into a damped normal
//! mode `A = (a1 + κa2)/√(1+κ²)` and an undamped one `B = (a2 − κa1)/√(1+κ²)`.
//! States built from `B†` acting on the vacuum evolve unitarily.

use serde::Serialize;

use crate::fock::{FockIndex, FockSpace};
use crate::generator::superop;
use crate::oracle::{integrate_times, IntegratorConfig};
use crate::propagator::{propagate_analytic, RootBranch, Spectrum};
use crate::state::{pure_state, DensityMatrix};
use crate::{build_liouvillian, CMatrix, Error, Liouvillian, Result, SystemParams, C64};

/// Relative tolerance of the manifold precondition in [`normal_mode_split`].
pub const MANIFOLD_TOLERANCE: f64 = 1e-9;

/// Largest truncated-away norm² accepted by [`dfs_state`].
pub const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Root {
    /// `λ₋ = −R − r`
    Minus,
    /// `λ₊ = −R + r`
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DfsReport {
    pub lambda_minus: C64,
    pub lambda_plus: C64,
    /// Root whose real part is within tolerance of zero, if any.
    pub protected_branch: Option<Root>,
    /// `min(|Re λ₋|, |Re λ₊|)`, the distance from the exact manifold.
    pub condition_residual: f64,
    pub kappa_fit: f64,
    /// Least-squares misfit of the manifold conditions at `kappa_fit`,
    /// relative to the size of the coefficients.
    pub kappa_residual: f64,
}

/// Locates a non-decaying root of the amplitude system and fits `κ`.
pub fn dfs_check(params: &SystemParams, tolerance: f64) -> DfsReport {
    let s = Spectrum::new(params, RootBranch::Principal);
    let (rm, rp) = (s.lambda_minus.re.abs(), s.lambda_plus.re.abs());
    let residual = rm.min(rp);
    let protected_branch = if residual <= tolerance {
        Some(if rp <= rm { Root::Plus } else { Root::Minus })
    } else {
        None
    };
    let (kappa_fit, kappa_residual) = fit_kappa(params);
    DfsReport {
        lambda_minus: s.lambda_minus,
        lambda_plus: s.lambda_plus,
        protected_branch,
        condition_residual: residual,
        kappa_fit,
        kappa_residual,
    }
}

fn manifold_misfit(params: &SystemParams, kappa: f64) -> f64 {
    let z11 = params.z(1, 1);
    (params.z(2, 2) - z11 * kappa * kappa).norm_sqr()
        + (params.z(1, 2) - z11 * kappa).norm_sqr()
        + (params.z(2, 1) - z11 * kappa).norm_sqr()
}

/// Real roots of `x³ + p x + q = 0`.
fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc >= 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()).collect()
    }
}

/// Real `κ` minimising `|z22 − κ²z11|² + |z12 − κz11|² + |z21 − κz11|²`,
/// with `z_ij = k_ij + iΔ_ij`, and the relative misfit at the minimum.
///
/// Stationary points solve `2aκ³ + 2(a − b22)κ − (b12 + b21) = 0` where
/// `a = |z11|²` and `b_ij = Re(z_ij z11*)`.
pub fn fit_kappa(params: &SystemParams) -> (f64, f64) {
    let z11 = params.z(1, 1);
    let a = z11.norm_sqr();
    let scale = [params.z(1, 1), params.z(2, 2), params.z(1, 2), params.z(2, 1)].iter().map(|z| z.norm()).sum::<f64>();
    if scale == 0.0 {
        return (0.0, 0.0);
    }
    let kappa = if a == 0.0 {
        0.0
    } else {
        let b = |i, j| (params.z(i, j) * z11.conj()).re;
        let p = (a - b(2, 2)) / a;
        let q = -(b(1, 2) + b(2, 1)) / (2.0 * a);
        depressed_cubic_roots(p, q)
            .into_iter()
            .min_by(|x, y| manifold_misfit(params, *x).total_cmp(&manifold_misfit(params, *y)))
            .expect("a real cubic has a real root")
    };
    (kappa, manifold_misfit(params, kappa).sqrt() / scale)
}

/// Normal-mode operators on a truncated space.
#[derive(Debug, Clone)]
pub struct NormalModes {
    pub kappa: f64,
    pub space: FockSpace,
    pub a: CMatrix,
    pub b: CMatrix,
    /// Rate of the lossy mode, identified with `k11`.
    pub k_aa: f64,
    /// Shift of the lossy mode, identified with `Δ11`.
    pub delta_aa: f64,
}

impl NormalModes {
    pub fn new(kappa: f64, space: FockSpace, k_aa: f64, delta_aa: f64) -> Self {
        let (a1, a2) = space.mode_operators();
        let norm = C64::new(1.0 / (1.0 + kappa * kappa).sqrt(), 0.0);
        let kc = C64::new(kappa, 0.0);
        let a = (&a1 + &a2 * kc) * norm;
        let b = (&a2 - &a1 * kc) * norm;
        NormalModes { kappa, space, a, b, k_aa, delta_aa }
    }

    pub fn a_number(&self) -> CMatrix {
        self.a.adjoint() * &self.a
    }

    pub fn b_number(&self) -> CMatrix {
        self.b.adjoint() * &self.b
    }
}

/// Largest relative violation of the manifold conditions for a given `κ`,
/// including the equal-frequency requirement.
pub fn manifold_residual(params: &SystemParams, kappa: f64) -> f64 {
    let z11 = params.z(1, 1);
    let scale = [z11, params.z(2, 2), params.z(1, 2), params.z(2, 1)].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let freq_scale = params.omega1.abs().max(params.omega2.abs());
    let rel = |x: f64, s: f64| if s > 0.0 { x / s } else { x };
    let cond = [
        (params.z(2, 2) - z11 * kappa * kappa).norm(),
        (params.z(1, 2) - z11 * kappa).norm(),
        (params.z(2, 1) - z11 * kappa).norm(),
    ]
    .iter()
    .fold(0.0_f64, |m, &x| m.max(x));
    rel(cond, scale).max(rel((params.omega1 - params.omega2).abs(), freq_scale))
}

/// `L = L_A + L_B` with
/// `L_A = −i[(ω − Δ11(1+κ²))A†A, •] + (1+κ²)k11(2A•A† − A†A• − •A†A)` and
/// `L_B = −i[ωB†B, •]`, `ω = Ω1 = Ω2`.
pub fn normal_mode_split(params: &SystemParams, kappa: f64, n_trunc: usize) -> Result<(Liouvillian, Liouvillian, NormalModes)> {
    params.validate()?;
    if !kappa.is_finite() {
        return Err(Error::param("kappa", "must be finite"));
    }
    let residual = manifold_residual(params, kappa);
    if residual > MANIFOLD_TOLERANCE {
        return Err(Error::NotOnDfsManifold { kappa, residual });
    }
    let space = FockSpace::new(n_trunc)?;
    let modes = NormalModes::new(kappa, space, params.k11, params.delta11);
    let omega = params.omega1;
    let weight = 1.0 + kappa * kappa;
    let h_a = modes.a_number() * C64::new(omega - modes.delta_aa * weight, 0.0);
    let l_a = superop::hamiltonian(&h_a) + superop::dissipator(&modes.a) * C64::new(weight * modes.k_aa, 0.0);
    let l_b = superop::hamiltonian(&(modes.b_number() * C64::new(omega, 0.0)));
    Ok((
        Liouvillian::from_parts(space, *params, l_a),
        Liouvillian::from_parts(space, *params, l_b),
        modes,
    ))
}

/// `e^{−|α|²/2} αⁿ/√n!` for `n = 0..levels`.
pub fn coherent_amplitudes(alpha: C64, levels: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(levels);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..levels {
        out.push(amp);
        amp = amp * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

/// `⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + α*β)`.
pub fn coherent_overlap(alpha: C64, beta: C64) -> C64 {
    (alpha.conj() * beta - 0.5 * (alpha.norm_sqr() + beta.norm_sqr())).exp()
}

/// `N` in `N(|−κv⟩|v⟩ + e^{iφ}|−κw⟩|w⟩)`.
pub fn cat_normalization(kappa: f64, v: C64, w: C64, phi: f64) -> f64 {
    let overlap = coherent_overlap(-v * kappa, -w * kappa) * coherent_overlap(v, w);
    let inv_sq = 2.0 + 2.0 * (C64::from_polar(1.0, phi) * overlap).re;
    if inv_sq <= 0.0 {
        0.0
    } else {
        1.0 / inv_sq.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DfsStateKind {
    /// `(|0,1⟩ − κ|1,0⟩)/√(1+κ²)`, one photon in mode B.
    Fock,
    /// `|−κv⟩|v⟩`, mode B coherent with mode A empty.
    Coherent { v: C64 },
    /// `N(|−κv⟩|v⟩ + e^{iφ}|−κw⟩|w⟩)`.
    Cat { v: C64, w: C64, phi: f64 },
}

fn product_coherent(space: FockSpace, kappa: f64, v: C64) -> Vec<(FockIndex, C64)> {
    let a = coherent_amplitudes(-v * kappa, space.levels());
    let b = coherent_amplitudes(v, space.levels());
    space.indices().map(|idx| (idx, a[idx.n1] * b[idx.n2])).collect()
}

fn check_tail(norm_sq: f64) -> Result<()> {
    let tail = 1.0 - norm_sq;
    if tail > TAIL_TOLERANCE {
        return Err(Error::Truncation(format!("coherent amplitudes leave {tail:e} of the norm above the cutoff")));
    }
    Ok(())
}

/// Members of the protected family `Σ c_mn (B†)ⁿ|0,0⟩⟨0,0|Bᵐ`.
pub fn dfs_state(kind: DfsStateKind, kappa: f64, space: FockSpace) -> Result<DensityMatrix> {
    match kind {
        DfsStateKind::Fock => pure_state(
            space,
            &[(FockIndex::new(0, 1), C64::new(1.0, 0.0)), (FockIndex::new(1, 0), C64::new(-kappa, 0.0))],
        ),
        DfsStateKind::Coherent { v } => {
            let amps = product_coherent(space, kappa, v);
            check_tail(amps.iter().map(|(_, c)| c.norm_sqr()).sum())?;
            pure_state(space, &amps)
        }
        DfsStateKind::Cat { v, w, phi } => {
            let n = cat_normalization(kappa, v, w, phi);
            if n == 0.0 {
                return Err(Error::DegenerateState);
            }
            let e = C64::from_polar(1.0, phi);
            let amps: Vec<(FockIndex, C64)> = product_coherent(space, kappa, v)
                .into_iter()
                .zip(product_coherent(space, kappa, w))
                .map(|((idx, x), (_, y))| (idx, (x + e * y) * n))
                .collect();
            check_tail(amps.iter().map(|(_, c)| c.norm_sqr()).sum())?;
            pure_state(space, &amps)
        }
    }
}

/// Diagnostics at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceSample {
    pub t: f64,
    pub purity: f64,
    /// Fidelity to the initial state rotated by `e^{−iωtB†B}`.
    pub fidelity: f64,
    pub a_number: f64,
    pub b_number: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub kappa: f64,
    pub analytic: Vec<InvarianceSample>,
    pub oracle: Vec<InvarianceSample>,
}

impl InvarianceReport {
    fn all(&self) -> impl Iterator<Item = &InvarianceSample> {
        self.analytic.iter().chain(self.oracle.iter())
    }

    pub fn min_purity(&self) -> f64 {
        self.all().map(|s| s.purity).fold(f64::INFINITY, f64::min)
    }

    pub fn min_fidelity(&self) -> f64 {
        self.all().map(|s| s.fidelity).fold(f64::INFINITY, f64::min)
    }

    /// Largest departure of `⟨B†B⟩` from its initial value.
    pub fn b_number_drift(&self) -> f64 {
        let b0 = self.analytic.first().map_or(0.0, |s| s.b_number);
        self.all().map(|s| (s.b_number - b0).abs()).fold(0.0, f64::max)
    }

    /// Largest departure of `⟨A†A⟩ + ⟨B†B⟩` from its initial value.
    pub fn total_number_drift(&self) -> f64 {
        let n0 = self.analytic.first().map_or(0.0, |s| s.a_number + s.b_number);
        self.all().map(|s| (s.a_number + s.b_number - n0).abs()).fold(0.0, f64::max)
    }
}

/// `e^{−iθH}` for Hermitian `H`.
fn unitary_from_hermitian(h: &CMatrix, theta: f64) -> CMatrix {
    let eig = ((h + h.adjoint()) * C64::new(0.5, 0.0)).symmetric_eigen();
    let mut v = eig.eigenvectors.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -theta * e);
        let mut col = v.column_mut(j);
        col *= phase;
    }
    v * eig.eigenvectors.adjoint()
}

/// Evolves `state` on `params` with both propagators and records purity,
/// fidelity to the `H_B`-rotated initial state and the normal-mode
/// occupations. `κ` is taken from [`fit_kappa`] and `ω` from `Ω1`.
pub fn dfs_invariance_test(state: &DensityMatrix, params: &SystemParams, t_grid: &[f64]) -> Result<InvarianceReport> {
    let (kappa, _) = fit_kappa(params);
    let space = state.space();
    let modes = NormalModes::new(kappa, space, params.k11, params.delta11);
    let (na, nb) = (modes.a_number(), modes.b_number());
    let omega = params.omega1;

    let sample = |t: f64, rho: &DensityMatrix| {
        let target = state.conjugated_by(&unitary_from_hermitian(&nb, omega * t));
        InvarianceSample {
            t,
            purity: rho.purity(),
            fidelity: rho.fidelity(&target),
            a_number: rho.expectation(&na).re,
            b_number: rho.expectation(&nb).re,
        }
    };

    let analytic = t_grid
        .iter()
        .map(|&t| Ok(sample(t, &propagate_analytic(state, params, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let l = build_liouvillian(params, space.n_trunc())?;
    let states = integrate_times(state, &l, t_grid, &IntegratorConfig::for_liouvillian(&l))?;
    let oracle = t_grid.iter().zip(&states).map(|(&t, rho)| sample(t, rho)).collect();
    Ok(InvarianceReport { kappa, analytic, oracle })
}
