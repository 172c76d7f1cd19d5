use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;

use crate::fock::{FockIndex, FockSpace};
use crate::{CMatrix, Error, Result, C64};

/// Cavity mode addressed by a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Atom {
    Ground,
    Excited,
}

/// Phase picked up by the `|g, n+1⟩` amplitude when `|e, n⟩` is rotated.
///
/// Pulses on mode A use phase zero; pulses on mode B use `chi`. The default
/// `chi = π/2` makes the source atom leave `(e^{iφ}|0,1⟩ + |1,0⟩)/√2` with
/// `φ = π/2 + πδ/Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsePhaseConvention {
    pub chi: f64,
}

impl Default for PulsePhaseConvention {
    fn default() -> Self {
        PulsePhaseConvention { chi: FRAC_PI_2 }
    }
}

impl PulsePhaseConvention {
    pub fn phase(&self, mode: Mode) -> f64 {
        match mode {
            Mode::A => 0.0,
            Mode::B => self.chi,
        }
    }
}

/// Pure state of one two-level atom and the two cavity modes.
///
/// Amplitudes are stored atom-major: index `atom · dim + field`, with the
/// ground state first.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomFieldState {
    space: FockSpace,
    amps: DVector<C64>,
}

pub(crate) fn joint_index(space: FockSpace, atom: Atom, field: FockIndex) -> Result<usize> {
    let a = match atom {
        Atom::Ground => 0,
        Atom::Excited => 1,
    };
    Ok(a * space.dim() + space.flatten(field)?)
}

impl AtomFieldState {
    pub fn new(space: FockSpace, amplitudes: &[(Atom, FockIndex, C64)]) -> Result<Self> {
        let mut amps = DVector::zeros(2 * space.dim());
        for &(atom, field, c) in amplitudes {
            amps[joint_index(space, atom, field)?] += c;
        }
        let norm: f64 = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateState);
        }
        Ok(AtomFieldState { space, amps: amps.unscale(norm) })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, atom: Atom, field: FockIndex) -> Result<C64> {
        Ok(self.amps[joint_index(self.space, atom, field)?])
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }
}

fn photons(field: FockIndex, mode: Mode) -> usize {
    match mode {
        Mode::A => field.n1,
        Mode::B => field.n2,
    }
}

fn raised(field: FockIndex, mode: Mode) -> FockIndex {
    match mode {
        Mode::A => FockIndex::new(field.n1 + 1, field.n2),
        Mode::B => FockIndex::new(field.n1, field.n2 + 1),
    }
}

/// Resonant Jaynes–Cummings rotation of every doublet `{|e,n⟩, |g,n+1⟩}`
/// through `angle·√(n+1)`:
///
/// ```text
/// |e,n⟩   → cos(θn/2)|e,n⟩   + e^{iχ} sin(θn/2)|g,n+1⟩
/// |g,n+1⟩ → cos(θn/2)|g,n+1⟩ − e^{−iχ} sin(θn/2)|e,n⟩
/// ```
///
/// `|g,0⟩` in the pulsed mode is left alone. `|e, N_trunc⟩` has no partner
/// inside the truncation and is also left alone; [`rabi_pulse`] refuses
/// states with support there.
pub fn pulse_unitary(space: FockSpace, mode: Mode, angle: f64, chi: f64) -> CMatrix {
    let d = space.dim();
    let mut u = CMatrix::identity(2 * d, 2 * d);
    let n_trunc = space.n_trunc();
    for field in space.indices() {
        let n = photons(field, mode);
        if n == n_trunc {
            continue;
        }
        let theta = angle * ((n + 1) as f64).sqrt();
        let (s, c) = (0.5 * theta).sin_cos();
        let e = joint_index(space, Atom::Excited, field).expect("index in range");
        let g = joint_index(space, Atom::Ground, raised(field, mode)).expect("raised index in range");
        u[(e, e)] = C64::new(c, 0.0);
        u[(g, g)] = C64::new(c, 0.0);
        u[(g, e)] = C64::from_polar(s, chi);
        u[(e, g)] = -C64::from_polar(s, -chi);
    }
    u
}

/// Indices of `|e, n = N_trunc⟩` in the pulsed mode.
pub(crate) fn edge_indices(space: FockSpace, mode: Mode) -> Vec<usize> {
    let n_trunc = space.n_trunc();
    space
        .indices()
        .filter(move |f| photons(*f, mode) == n_trunc)
        .map(move |f| joint_index(space, Atom::Excited, f).expect("index in range"))
        .collect()
}

/// Applies a resonant pulse on `mode` with the convention phase for that mode.
pub fn rabi_pulse(state: &AtomFieldState, mode: Mode, angle: f64, convention: &PulsePhaseConvention) -> Result<AtomFieldState> {
    let space = state.space;
    if let Some(i) = edge_indices(space, mode).into_iter().find(|&i| state.amps[i] != C64::new(0.0, 0.0)) {
        return Err(Error::Truncation(format!(
            "excited atom with {} photons in the pulsed mode (flat index {i}) has no partner below the cutoff",
            space.n_trunc()
        )));
    }
    let u = pulse_unitary(space, mode, angle, convention.phase(mode));
    Ok(AtomFieldState { space, amps: u * &state.amps })
}
