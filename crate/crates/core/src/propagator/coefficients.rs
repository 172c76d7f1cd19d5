use serde::Serialize;

use crate::{Error, Result, SystemParams, C64};

/// Relative size of `|r|` against `|R|` below which the two roots are
/// treated as coalesced.
pub const DEGENERATE_RATIO: f64 = 1e-12;

/// Which square root of `c² + (k12 − iΔ12)(k21 − iΔ21)` is called `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootBranch {
    Principal,
    Negated,
}

/// Time-independent rates of the amplitude system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spectrum {
    pub c: C64,
    pub r: C64,
    pub big_r: C64,
    /// `−R − r`
    pub lambda_minus: C64,
    /// `−R + r`
    pub lambda_plus: C64,
    pub degenerate: bool,
}

impl Spectrum {
    pub fn new(params: &SystemParams, branch: RootBranch) -> Self {
        let p = params;
        let c = C64::new((p.k22 - p.k11) / 2.0, ((p.omega2 - p.delta22) - (p.omega1 - p.delta11)) / 2.0);
        let big_r = C64::new((p.k11 + p.k22) / 2.0, ((p.omega1 - p.delta11) + (p.omega2 - p.delta22)) / 2.0);
        let cross = C64::new(p.k12, -p.delta12) * C64::new(p.k21, -p.delta21);
        let principal = (c * c + cross).sqrt();
        let r = match branch {
            RootBranch::Principal => principal,
            RootBranch::Negated => -principal,
        };
        Spectrum {
            c,
            r,
            big_r,
            lambda_minus: -big_r - r,
            lambda_plus: -big_r + r,
            degenerate: r.norm() <= DEGENERATE_RATIO * big_r.norm(),
        }
    }
}

/// `c, r, R, λ±` together with the transfer amplitudes at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorCoefficients {
    pub t: f64,
    pub spectrum: Spectrum,
    pub f1: C64,
    pub f2: C64,
    pub l1: C64,
    pub l2: C64,
}

impl PropagatorCoefficients {
    /// `M(t)` with `(c_{1,0}, c_{0,1})(t) = M(t) (c_{1,0}, c_{0,1})(0)`.
    pub fn transfer_matrix(&self) -> [[C64; 2]; 2] {
        [[self.f1, self.l1], [self.l2, self.f2]]
    }
}

/// `cosh(x)` and `sinh(x)/x`, with short series near the origin.
fn cosh_sinhc(x: C64) -> (C64, C64) {
    if x.norm() < 1e-3 {
        let x2 = x * x;
        let cosh = 1.0 + x2 / 2.0 + x2 * x2 / 24.0;
        let sinhc = 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
        (cosh, sinhc)
    } else {
        (x.cosh(), x.sinh() / x)
    }
}

/// Transfer amplitudes on the principal branch.
///
/// With `E± = e^{λ± t}` the closed forms
/// `F1 = ½[(1 − c/r)E₋ + (1 + c/r)E₊]`, `L1 = (k12 − iΔ12)(E₋ − E₊)/(2r)`
/// (and mode-swapped partners) are evaluated as
/// `F1,2 = e^{−Rt}[cosh(rt) ± c·t·sinhc(rt)]`, `L1 = −(k12 − iΔ12)·t·e^{−Rt}sinhc(rt)`,
/// which is even in `r` and stays finite where the two roots coalesce.
pub fn compute_coefficients(params: &SystemParams, t: f64) -> Result<PropagatorCoefficients> {
    compute_coefficients_on_branch(params, t, RootBranch::Principal)
}

pub fn compute_coefficients_on_branch(params: &SystemParams, t: f64, branch: RootBranch) -> Result<PropagatorCoefficients> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
    }
    params.validate()?;
    let spectrum = Spectrum::new(params, branch);
    let (cosh, sinhc) = cosh_sinhc(spectrum.r * t);
    let decay = (-spectrum.big_r * t).exp();
    let even = decay * cosh;
    let odd = decay * sinhc * t;
    Ok(PropagatorCoefficients {
        t,
        spectrum,
        f1: even + spectrum.c * odd,
        f2: even - spectrum.c * odd,
        l1: -C64::new(params.k12, -params.delta12) * odd,
        l2: -C64::new(params.k21, -params.delta21) * odd,
    })
}
