use serde::{Deserialize, Serialize};

use crate::{Error, Result, SystemParams, C64};

/// One reservoir oscillator and its couplings to the two cavity modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirMode {
    pub omega: f64,
    pub alpha1: C64,
    pub alpha2: C64,
}

/// Discrete reservoir with a correlation cutoff time `tau_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpectrum {
    modes: Vec<ReservoirMode>,
    tau_c: f64,
}

impl ReservoirSpectrum {
    pub fn new(modes: Vec<ReservoirMode>, tau_c: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if !(tau_c > 0.0 && tau_c.is_finite()) {
            return Err(Error::param("tau_c", format!("must be > 0, got {tau_c}")));
        }
        if let Some(bad) = modes.iter().find(|m| !(m.omega > 0.0)) {
            return Err(Error::param("omega_k", format!("must be > 0, got {}", bad.omega)));
        }
        Ok(ReservoirSpectrum { modes, tau_c })
    }

    /// Factorised couplings `α_1k = α1 γ_k`, `α_2k = α2 γ_k`.
    pub fn factorized(omegas: &[f64], gammas: &[C64], alpha1: f64, alpha2: f64, tau_c: f64) -> Result<Self> {
        if omegas.len() != gammas.len() {
            return Err(Error::DimensionMismatch { expected: omegas.len(), found: gammas.len() });
        }
        let modes = omegas
            .iter()
            .zip(gammas)
            .map(|(&omega, &g)| ReservoirMode { omega, alpha1: g * alpha1, alpha2: g * alpha2 })
            .collect();
        Self::new(modes, tau_c)
    }

    pub fn modes(&self) -> &[ReservoirMode] {
        &self.modes
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `∫_0^τc e^{i x τ} dτ = (e^{i x τc} − 1)/(i x)`, written in a form that is
/// stable as `x → 0` (where it tends to `τc`).
pub(crate) fn correlation_integral(x: f64, tau_c: f64) -> C64 {
    let y = x * tau_c;
    C64::new(tau_c * sinc(y), tau_c * (0.5 * y).sin() * sinc(0.5 * y))
}

/// Rates and shifts from microscopic couplings:
/// `k_ij + iΔ_ij = Σ_k α_ik α*_jk ∫_0^τc dτ e^{i(ω_k − Ω_j)τ}`.
///
/// `omega1`, `omega2` are passed through into the returned parameters.
pub fn coefficients_from_couplings(spectrum: &ReservoirSpectrum, omega1: f64, omega2: f64) -> Result<SystemParams> {
    let omegas = [omega1, omega2];
    let mut z = [[C64::new(0.0, 0.0); 2]; 2];
    for m in spectrum.modes() {
        let alphas = [m.alpha1, m.alpha2];
        for (j, &omega_j) in omegas.iter().enumerate() {
            let integral = correlation_integral(m.omega - omega_j, spectrum.tau_c);
            for (i, &alpha_i) in alphas.iter().enumerate() {
                z[i][j] += alpha_i * alphas[j].conj() * integral;
            }
        }
    }
    Ok(SystemParams {
        omega1,
        omega2,
        k11: z[0][0].re,
        k22: z[1][1].re,
        k12: z[0][1].re,
        k21: z[1][0].re,
        delta11: z[0][0].im,
        delta22: z[1][1].im,
        delta12: z[0][1].im,
        delta21: z[1][0].im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_spectrum_is_an_error() {
        assert!(matches!(ReservoirSpectrum::new(vec![], 1.0), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn zero_coupling_gives_zero_coefficients() {
        let zero = C64::new(0.0, 0.0);
        let s = ReservoirSpectrum::new(
            (1..10).map(|k| ReservoirMode { omega: k as f64, alpha1: zero, alpha2: zero }).collect(),
            3.0,
        )
        .unwrap();
        let p = coefficients_from_couplings(&s, 4.0, 5.0).unwrap();
        assert_eq!(p, SystemParams { omega1: 4.0, omega2: 5.0, ..Default::default() });
    }

    #[test]
    fn integral_matches_direct_closed_form_and_limit() {
        let tau = 2.5;
        for &x in &[0.3, -1.7, 4.0, 1e-3] {
            let direct = (C64::new(0.0, x * tau).exp() - 1.0) / C64::new(0.0, x);
            assert!((correlation_integral(x, tau) - direct).norm() < 1e-12 * direct.norm().max(1.0));
        }
        assert_eq!(correlation_integral(0.0, tau), C64::new(tau, 0.0));
    }

    #[test]
    fn integral_matches_quadrature() {
        // composite Simpson on the defining integral
        let (x, tau) = (0.83, 4.0);
        let n = 2000;
        let h = tau / n as f64;
        let f = |t: f64| C64::new(0.0, x * t).exp();
        let mut acc = f(0.0) + f(tau);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = acc * (h / 3.0);
        assert!((quad - correlation_integral(x, tau)).norm() < 1e-10);
    }
}
