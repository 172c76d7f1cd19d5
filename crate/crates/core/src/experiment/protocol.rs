use std::f64::consts::PI;

use super::fringe::ExperimentConfig;
use super::pulse::{edge_indices, joint_index, pulse_unitary, Atom, AtomFieldState, Mode, PulsePhaseConvention};
use crate::fock::{FockIndex, FockSpace};
use crate::oracle::{integrate, IntegratorConfig};
use crate::propagator::propagate_analytic;
use crate::state::DensityMatrix;
use crate::{build_liouvillian, CMatrix, Error, Result, SystemParams, C64};

/// Population below which the cutoff partner of `|e, N_trunc⟩` is treated as absent.
const EDGE_SUPPORT: f64 = 1e-14;

/// How the field is carried through the wait between the two atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Analytic,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSettings {
    pub n_trunc: usize,
    pub convention: PulsePhaseConvention,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        ProtocolSettings { n_trunc: 1, convention: PulsePhaseConvention::default() }
    }
}

/// Pulse of `angle` on `mode` lasting `angle/Ω`, including the free phase
/// accumulated meanwhile in the `(δ, 0)` frame. The atom is resonant with the
/// pulsed mode, so its transition frequency is `δ` for mode A and `0` for
/// mode B.
fn timed_pulse(space: FockSpace, mode: Mode, angle: f64, cfg: &ExperimentConfig, conv: &PulsePhaseConvention) -> CMatrix {
    let mut u = pulse_unitary(space, mode, angle, conv.phase(mode));
    let duration = angle / cfg.omega;
    for atom in [Atom::Ground, Atom::Excited] {
        for field in space.indices() {
            let excited = matches!((mode, atom), (Mode::A, Atom::Excited));
            let energy = cfg.delta * (field.n1 as f64 + if excited { 1.0 } else { 0.0 });
            let i = joint_index(space, atom, field).expect("index in range");
            let phase = C64::from_polar(1.0, -energy * duration);
            let mut row = u.row_mut(i);
            row *= phase;
        }
    }
    u
}

fn check_edge(space: FockSpace, rho: &CMatrix, mode: Mode) -> Result<()> {
    for i in edge_indices(space, mode) {
        if rho[(i, i)].re > EDGE_SUPPORT {
            return Err(Error::Truncation(format!(
                "excited atom with {} photons in the pulsed mode carries population {:e}",
                space.n_trunc(),
                rho[(i, i)].re
            )));
        }
    }
    Ok(())
}

fn apply_pulse(space: FockSpace, rho: &CMatrix, mode: Mode, angle: f64, cfg: &ExperimentConfig, conv: &PulsePhaseConvention) -> Result<CMatrix> {
    check_edge(space, rho, mode)?;
    let u = timed_pulse(space, mode, angle, cfg, conv);
    Ok(&u * rho * u.adjoint())
}

fn trace_out_atom(space: FockSpace, rho: &CMatrix) -> CMatrix {
    let d = space.dim();
    CMatrix::from_fn(d, d, |i, j| rho[(i, j)] + rho[(d + i, d + j)])
}

fn ground_atom_with(field: &CMatrix) -> CMatrix {
    let d = field.nrows();
    let mut rho = CMatrix::zeros(2 * d, 2 * d);
    rho.view_mut((0, 0), (d, d)).copy_from(field);
    rho
}

/// Field state left by the source atom after its `π/2` pulse on mode A and
/// `π` pulse on mode B, starting from `|e⟩|0,0⟩`.
pub fn prepared_field(cfg: &ExperimentConfig, settings: &ProtocolSettings) -> Result<DensityMatrix> {
    let space = FockSpace::new(settings.n_trunc)?;
    let psi = AtomFieldState::new(space, &[(Atom::Excited, FockIndex::VACUUM, C64::new(1.0, 0.0))])?;
    let amps = psi.amplitudes();
    let mut rho = amps * amps.adjoint();
    rho = apply_pulse(space, &rho, Mode::A, PI / 2.0, cfg, &settings.convention)?;
    rho = apply_pulse(space, &rho, Mode::B, PI, cfg, &settings.convention)?;
    DensityMatrix::from_matrix(space, trace_out_atom(space, &rho))
}

/// Probability of finding the probe atom excited after it crosses the field
/// `rho` (`π` on mode A, then `π/2` on mode B).
pub fn probe_excitation(rho: &DensityMatrix, cfg: &ExperimentConfig, settings: &ProtocolSettings) -> Result<f64> {
    let space = rho.space();
    let mut joint = ground_atom_with(rho.matrix());
    joint = apply_pulse(space, &joint, Mode::A, PI, cfg, &settings.convention)?;
    joint = apply_pulse(space, &joint, Mode::B, PI / 2.0, cfg, &settings.convention)?;
    let d = space.dim();
    Ok((0..d).map(|i| joint[(d + i, d + i)].re).sum())
}

/// The full two-atom sequence with probe entry time `t`.
pub fn run_protocol(params: &SystemParams, cfg: &ExperimentConfig, t: f64, propagation: Propagation) -> Result<f64> {
    run_protocol_with(params, cfg, t, propagation, &ProtocolSettings::default())
}

pub fn run_protocol_with(
    params: &SystemParams,
    cfg: &ExperimentConfig,
    t: f64,
    propagation: Propagation,
    settings: &ProtocolSettings,
) -> Result<f64> {
    let tau = cfg.tau(t)?;
    let frame = cfg.frame_params(params);
    let prepared = prepared_field(cfg, settings)?;
    let evolved = match propagation {
        Propagation::Analytic => propagate_analytic(&prepared, &frame, tau)?,
        Propagation::Oracle => {
            let l = build_liouvillian(&frame, settings.n_trunc)?;
            integrate(&prepared, &l, tau, &IntegratorConfig::for_liouvillian(&l))?
        }
    };
    Ok(cfg.reduction * probe_excitation(&evolved, cfg, settings)?)
}
