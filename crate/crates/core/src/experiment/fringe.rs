use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::propagator::compute_coefficients;
use crate::{Error, Result, SystemParams, C64};

/// Relative slack when checking `T ≥ 3π/(2Ω)`.
const PREP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Mode splitting `δ = Ω1 − Ω2`.
    pub delta: f64,
    /// Vacuum Rabi frequency.
    pub omega: f64,
    pub tr_a: f64,
    pub tr_b: f64,
    pub nbar: f64,
    /// Visibility factor multiplying every probability.
    pub reduction: f64,
    pub t_grid: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(delta: f64, omega: f64, tr_a: f64, tr_b: f64, nbar: f64) -> Result<Self> {
        let cfg = ExperimentConfig { delta, omega, tr_a, tr_b, nbar, reduction: 1.0, t_grid: Vec::new() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_reduction(self, reduction: f64) -> Self {
        ExperimentConfig { reduction, ..self }
    }

    pub fn with_grid(self, t_grid: Vec<f64>) -> Self {
        ExperimentConfig { t_grid, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::param("delta", "must be finite"));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::param("Omega", format!("must be > 0, got {}", self.omega)));
        }
        if !(self.tr_a > 0.0) {
            return Err(Error::param("Tr_a", format!("must be > 0, got {}", self.tr_a)));
        }
        if !(self.tr_b > 0.0) {
            return Err(Error::param("Tr_b", format!("must be > 0, got {}", self.tr_b)));
        }
        if !(self.nbar >= 0.0) {
            return Err(Error::param("nbar", format!("must be >= 0, got {}", self.nbar)));
        }
        if !(0.0..=1.0).contains(&self.reduction) {
            return Err(Error::param("reduction", format!("must lie in [0, 1], got {}", self.reduction)));
        }
        let min = self.prep_time() * (1.0 - PREP_SLACK);
        if let Some(t) = self.t_grid.iter().find(|&&t| !(t >= min)) {
            return Err(Error::param("T_grid", format!("entry {t} precedes the preparation time {}", self.prep_time())));
        }
        Ok(())
    }

    /// `Φ = δπ/(2Ω)`.
    pub fn big_phi(&self) -> f64 {
        self.delta * PI / (2.0 * self.omega)
    }

    /// Preparation phase `φ = π/2 + πδ/Ω` of the one-photon state.
    pub fn phi(&self) -> f64 {
        PI / 2.0 + PI * self.delta / self.omega
    }

    /// Duration `3π/(2Ω)` of the two source-atom pulses.
    pub fn prep_time(&self) -> f64 {
        3.0 * PI / (2.0 * self.omega)
    }

    /// Wait `τ = T − 3π/(2Ω)`; entry times a hair before the preparation
    /// time are clamped to `τ = 0`.
    pub fn tau(&self, t: f64) -> Result<f64> {
        let prep = self.prep_time();
        if !(t >= prep * (1.0 - PREP_SLACK)) {
            return Err(Error::param("T", format!("must be >= 3π/(2Ω) = {prep}, got {t}")));
        }
        Ok((t - prep).max(0.0))
    }

    pub fn k11_eff(&self) -> f64 {
        (self.nbar + 1.0) / (2.0 * self.tr_a)
    }

    pub fn k22_eff(&self) -> f64 {
        (self.nbar + 1.0) / (2.0 * self.tr_b)
    }

    /// `params` with the bare frequencies replaced by the frame values `(δ, 0)`.
    pub fn frame_params(&self, params: &SystemParams) -> SystemParams {
        params.with_frequencies(self.delta, 0.0)
    }

    /// Diagonal damping with the effective decay constants.
    pub fn diagonal_params(&self) -> SystemParams {
        SystemParams::decoupled(self.delta, 0.0, self.k11_eff(), self.k22_eff())
    }
}

/// `(n̄ + 1)/(2 T_r)`.
pub fn effective_decay(nbar: f64, tr: f64) -> Result<f64> {
    if !(tr > 0.0) {
        return Err(Error::param("Tr", format!("must be > 0, got {tr}")));
    }
    if !(nbar >= 0.0) {
        return Err(Error::param("nbar", format!("must be >= 0, got {nbar}")));
    }
    Ok((nbar + 1.0) / (2.0 * tr))
}

/// Dissipation-free fringe `[1 + cos(δT + Φ)]/2`.
pub fn pe_ideal(t: f64, cfg: &ExperimentConfig) -> f64 {
    cfg.reduction * 0.5 * (1.0 + (cfg.delta * t + cfg.big_phi()).cos())
}

/// Fringe with independent damping of the two modes:
/// `½[(e^{−2k11τ} + e^{−2k22τ})/2 + e^{−(k11+k22)τ} cos(δT + Φ)]`.
pub fn pe_diagonal(t: f64, k11: f64, k22: f64, cfg: &ExperimentConfig) -> Result<f64> {
    let tau = cfg.tau(t)?;
    let offset = 0.5 * ((-2.0 * k11 * tau).exp() + (-2.0 * k22 * tau).exp());
    let fringe = (-(k11 + k22) * tau).exp() * (cfg.delta * t + cfg.big_phi()).cos();
    Ok(cfg.reduction * 0.5 * (offset + fringe))
}

/// General fringe
/// `¼|−(F1 + e^{iφ}L1) + i e^{2iΦ}(e^{iφ}F2 + L2)|²` at `τ`, with the transfer
/// amplitudes taken in the `(δ, 0)` frame.
pub fn pe_dissipative(t: f64, params: &SystemParams, cfg: &ExperimentConfig) -> Result<f64> {
    let tau = cfg.tau(t)?;
    let co = compute_coefficients(&cfg.frame_params(params), tau)?;
    let e_phi = C64::from_polar(1.0, cfg.phi());
    let amp = -(co.f1 + e_phi * co.l1) + C64::i() * C64::from_polar(1.0, 2.0 * cfg.big_phi()) * (e_phi * co.f2 + co.l2);
    Ok(cfg.reduction * 0.25 * amp.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::new(0.9, 12.0, 40.0, 25.0, 0.3).unwrap()
    }

    #[test]
    fn effective_decay_values() {
        assert_eq!(effective_decay(0.0, 1.0).unwrap(), 0.5);
        assert!((effective_decay(1.0, 1e-3).unwrap() - 1000.0).abs() < 1e-9);
        let a = effective_decay(0.4, 2.0).unwrap();
        let b = effective_decay(0.4, 4.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert!(effective_decay(0.0, 0.0).is_err());
    }

    #[test]
    fn ideal_extremes_and_mean() {
        let c = cfg();
        let t_max = (2.0 * PI - c.big_phi()) / c.delta;
        let t_min = (3.0 * PI - c.big_phi()) / c.delta;
        assert!((pe_ideal(t_max, &c) - 1.0).abs() < 1e-12);
        assert!(pe_ideal(t_min, &c).abs() < 1e-12);
        let period = 2.0 * PI / c.delta;
        let n = 1000;
        let mean: f64 = (0..n).map(|i| pe_ideal(5.0 + period * i as f64 / n as f64, &c)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dissipative_reduces_to_ideal_without_dissipation() {
        let c = cfg();
        for i in 0..50 {
            let t = c.prep_time() + 0.37 * i as f64;
            let got = pe_dissipative(t, &SystemParams::default(), &c).unwrap();
            assert!((got - pe_ideal(t, &c)).abs() < 1e-12);
        }
    }

    #[test]
    fn dissipative_reduces_to_diagonal_formula() {
        let c = cfg();
        let (k1, k2) = (0.03, 0.05);
        for i in 0..50 {
            let t = c.prep_time() + 0.53 * i as f64;
            let got = pe_dissipative(t, &SystemParams::decoupled(0.0, 0.0, k1, k2), &c).unwrap();
            assert!((got - pe_diagonal(t, k1, k2, &c).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_special_cases() {
        let c = cfg();
        let t_min = (3.0 * PI - c.big_phi()) / c.delta;
        assert!(pe_diagonal(t_min, 0.04, 0.04, &c).unwrap().abs() < 1e-15);
        assert!(pe_diagonal(1e4, 0.04, 0.02, &c).unwrap() < 1e-12);
        let t = 7.3;
        assert!((pe_diagonal(t, 0.0, 0.0, &c).unwrap() - pe_ideal(t, &c)).abs() < 1e-15);
    }

    #[test]
    fn reduction_scales_linearly() {
        let c = cfg();
        let half = c.clone().with_reduction(0.5);
        let p = SystemParams { k12: 0.01, k21: 0.01, ..SystemParams::decoupled(0.0, 0.0, 0.02, 0.03) };
        for &t in &[1.0, 4.0, 9.5] {
            assert!((pe_ideal(t, &half) - 0.5 * pe_ideal(t, &c)).abs() < 1e-15);
            assert!((pe_diagonal(t, 0.02, 0.03, &half).unwrap() - 0.5 * pe_diagonal(t, 0.02, 0.03, &c).unwrap()).abs() < 1e-15);
            assert!((pe_dissipative(t, &p, &half).unwrap() - 0.5 * pe_dissipative(t, &p, &c).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_protected_limit_is_one_quarter() {
        let c = ExperimentConfig::new(0.0, 10.0, 5.0, 5.0, 0.0).unwrap();
        let k = 0.1;
        let p = SystemParams { k12: k, k21: k, ..SystemParams::decoupled(0.0, 0.0, k, k) };
        assert!((pe_dissipative(400.0, &p, &c).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn entry_before_preparation_is_rejected() {
        let c = cfg();
        assert!(pe_diagonal(0.1, 0.0, 0.0, &c).is_err());
        assert!(pe_dissipative(c.prep_time(), &SystemParams::default(), &c).is_ok());
    }
}
