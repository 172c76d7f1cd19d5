use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// The ten coefficients of the two-mode Liouvillian.
///
/// `omega*` are bare mode frequencies, `k*` decay rates and `delta*`
/// reservoir-induced shifts. Indices follow the master equation: `k12` and
/// `delta12` multiply the terms that carry `a_1† a_2` on the left of ρ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub k11: f64,
    pub k22: f64,
    pub k12: f64,
    pub k21: f64,
    pub delta11: f64,
    pub delta22: f64,
    pub delta12: f64,
    pub delta21: f64,
}

/// Whether the dissipator is completely positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Physicality {
    Physical,
    NonPhysical,
}

impl SystemParams {
    /// Two independently damped modes.
    pub fn decoupled(omega1: f64, omega2: f64, k11: f64, k22: f64) -> Self {
        SystemParams { omega1, omega2, k11, k22, ..Default::default() }
    }

    /// A point on the decoherence-free manifold: equal frequencies and
    /// `k22 + iΔ22 = κ²(k11 + iΔ11)`, `k12 + iΔ12 = k21 + iΔ21 = κ(k11 + iΔ11)`.
    pub fn dfs_manifold(omega: f64, k11: f64, delta11: f64, kappa: f64) -> Self {
        SystemParams {
            omega1: omega,
            omega2: omega,
            k11,
            k22: kappa * kappa * k11,
            k12: kappa * k11,
            k21: kappa * k11,
            delta11,
            delta22: kappa * kappa * delta11,
            delta12: kappa * delta11,
            delta21: kappa * delta11,
        }
    }

    /// Checks the hard invariants (finite values, non-negative direct rates).
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.k11 < 0.0 {
            return Err(Error::param("k11", format!("must be >= 0, got {}", self.k11)));
        }
        if self.k22 < 0.0 {
            return Err(Error::param("k22", format!("must be >= 0, got {}", self.k22)));
        }
        Ok(())
    }

    /// The jump-term coefficient matrix
    /// `[[2k11, k12+k21+i(Δ12−Δ21)], [c.c., 2k22]]` must be positive
    /// semidefinite for a completely positive evolution. With `k12 = k21` and
    /// `Δ12 = Δ21` this is `k12² ≤ k11 k22`.
    pub fn physicality(&self) -> Physicality {
        let cross = (self.k12 + self.k21).powi(2) + (self.delta12 - self.delta21).powi(2);
        let bound = 4.0 * self.k11 * self.k22;
        if self.k11 >= 0.0 && self.k22 >= 0.0 && cross <= bound * (1.0 + 1e-12) + 1e-300 {
            Physicality::Physical
        } else {
            Physicality::NonPhysical
        }
    }

    pub fn is_physical(&self) -> bool {
        self.physicality() == Physicality::Physical
    }

    /// Relabels the modes 1 ↔ 2.
    pub fn swapped(&self) -> Self {
        SystemParams {
            omega1: self.omega2,
            omega2: self.omega1,
            k11: self.k22,
            k22: self.k11,
            k12: self.k21,
            k21: self.k12,
            delta11: self.delta22,
            delta22: self.delta11,
            delta12: self.delta21,
            delta21: self.delta12,
        }
    }

    /// Same rates and shifts, new bare frequencies.
    pub fn with_frequencies(&self, omega1: f64, omega2: f64) -> Self {
        SystemParams { omega1, omega2, ..*self }
    }

    /// Largest decay-rate magnitude.
    pub fn max_rate(&self) -> f64 {
        [self.k11, self.k22, self.k12, self.k21].iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest magnitude among all ten coefficients.
    pub fn max_coefficient(&self) -> f64 {
        self.named().iter().fold(0.0_f64, |m, (_, v)| m.max(v.abs()))
    }

    /// `k_ij + iΔ_ij` for `i, j ∈ {1, 2}`.
    pub fn z(&self, i: usize, j: usize) -> C64 {
        match (i, j) {
            (1, 1) => C64::new(self.k11, self.delta11),
            (2, 2) => C64::new(self.k22, self.delta22),
            (1, 2) => C64::new(self.k12, self.delta12),
            (2, 1) => C64::new(self.k21, self.delta21),
            _ => panic!("mode indices are 1 or 2, got ({i}, {j})"),
        }
    }

    pub fn named(&self) -> [(&'static str, f64); 10] {
        [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("k11", self.k11),
            ("k22", self.k22),
            ("k12", self.k12),
            ("k21", self.k21),
            ("delta11", self.delta11),
            ("delta22", self.delta22),
            ("delta12", self.delta12),
            ("delta21", self.delta21),
        ]
    }
}
