//! Cross-validation suites comparing independent evaluation routes.
//!
//! Every random draw comes from a ChaCha generator seeded by the caller, and
//! the seed is stored in the report. Cases are generated sequentially and then
//! evaluated in parallel, so the report is identical for any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dfs::normal_mode_split;
use crate::fock::{FockIndex, FockSpace};
use crate::generator::superop::spectral_norm;
use crate::oracle::{integrate_times, IntegratorConfig};
use crate::propagator::{factorization_params, ode_residuals, propagate_analytic, RootBranch, Spectrum};
use crate::state::{pure_state, DensityMatrix};
use crate::{build_liouvillian, Result, SystemParams, C64};

pub const ORACLE_ONE_PHOTON_TOLERANCE: f64 = 1e-6;
pub const ORACLE_TWO_PHOTON_TOLERANCE: f64 = 1e-5;
pub const ODE_RESIDUAL_TOLERANCE: f64 = 1e-6;
pub const CONJUGATION_TOLERANCE: f64 = 1e-12;
pub const MANIFOLD_ROOT_TOLERANCE: f64 = 1e-12;
pub const SPLIT_TOLERANCE: f64 = 1e-10;

/// Propagation times used by the oracle suite, in units of `1/max_rate`.
pub const ORACLE_TIMES: [f64; 3] = [0.5, 2.0, 5.0];
/// Residual times used by the ODE suite, in units of `1/max_rate`.
pub const ODE_TIMES: [f64; 3] = [0.1, 1.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Oracle,
    Odes,
    Dfs,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "oracle" => Ok(Suite::Oracle),
            "odes" => Ok(Suite::Odes),
            "dfs" => Ok(Suite::Dfs),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite `{s}` (expected oracle, odes, dfs or all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        CheckResult { name: name.into(), passed: measured <= tolerance, measured, tolerance, detail: None }
    }

    fn failed(name: impl Into<String>, tolerance: f64, detail: String) -> Self {
        CheckResult { name: name.into(), passed: false, measured: f64::NAN, tolerance, detail: Some(detail) }
    }

    fn from_result(name: impl Into<String>, tolerance: f64, r: Result<f64>) -> Self {
        match r {
            Ok(x) => CheckResult::at_most(name, x, tolerance),
            Err(e) => CheckResult::failed(name, tolerance, e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl CertifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyOptions {
    pub seed: u64,
    pub oracle_cases: usize,
    pub two_photon_cases: usize,
    pub ode_cases: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { seed: 0, oracle_cases: 100, two_photon_cases: 100, ode_cases: 20 }
    }
}

/// Random coefficients with frequencies near 1 and every rate and shift at
/// most 0.1. With `on_boundary` the dissipation matrix is singular, i.e.
/// `4k11k22 = (k12+k21)² + (Δ12−Δ21)²`; otherwise it lies strictly inside
/// the physical cone.
pub fn random_params<R: Rng>(rng: &mut R, on_boundary: bool) -> SystemParams {
    let k11: f64 = rng.gen_range(0.01..0.08);
    let k22 = rng.gen_range(0.01..0.08);
    let radius = (k11 * k22).sqrt() * if on_boundary { 1.0 } else { rng.gen_range(0.0..0.95) };
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let (sym, antisym_shift) = (radius * angle.cos(), radius * angle.sin());
    let skew = rng.gen_range(-0.02..0.02);
    let shift_mean = rng.gen_range(-0.02..0.02);
    SystemParams {
        omega1: rng.gen_range(0.5..1.5),
        omega2: rng.gen_range(0.5..1.5),
        k11,
        k22,
        k12: sym + skew,
        k21: sym - skew,
        delta11: rng.gen_range(-0.05..0.05),
        delta22: rng.gen_range(-0.05..0.05),
        delta12: shift_mean + antisym_shift,
        delta21: shift_mean - antisym_shift,
    }
}

fn random_amplitude<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Random mixed state supported on Fock states with at most `max_photons`
/// photons in total: a convex mixture of two random pure states.
pub fn random_state<R: Rng>(rng: &mut R, space: FockSpace, max_photons: usize) -> Result<DensityMatrix> {
    let support: Vec<FockIndex> = space.indices().filter(|i| i.total() <= max_photons).collect();
    let draw = |rng: &mut R| {
        let amps: Vec<(FockIndex, C64)> = support.iter().map(|&i| (i, random_amplitude(rng))).collect();
        pure_state(space, &amps)
    };
    let (a, b) = (draw(rng)?, draw(rng)?);
    let p = rng.gen_range(0.0..1.0);
    DensityMatrix::from_matrix(space, a.matrix() * C64::from(p) + b.matrix() * C64::from(1.0 - p))
}

struct OracleCase {
    params: SystemParams,
    rho0: DensityMatrix,
}

/// Largest trace distance between the analytic and RK4 states over the
/// oracle time grid.
pub fn oracle_deviation(params: &SystemParams, rho0: &DensityMatrix) -> Result<f64> {
    let l = build_liouvillian(params, rho0.space().n_trunc())?;
    let times: Vec<f64> = ORACLE_TIMES.iter().map(|x| x / params.max_rate()).collect();
    let reference = integrate_times(rho0, &l, &times, &IntegratorConfig::for_liouvillian(&l))?;
    times.iter().zip(&reference).try_fold(0.0f64, |worst, (&t, oracle)| {
        Ok(worst.max(propagate_analytic(rho0, params, t)?.trace_distance(oracle)))
    })
}

fn oracle_cases(rng: &mut ChaCha8Rng, count: usize, n_trunc: usize, max_photons: usize) -> Result<Vec<OracleCase>> {
    let space = FockSpace::new(n_trunc)?;
    (0..count)
        .map(|i| Ok(OracleCase { params: random_params(rng, i % 4 == 3), rho0: random_state(rng, space, max_photons)? }))
        .collect()
}

fn run_oracle_suite(rng: &mut ChaCha8Rng, opts: &CertifyOptions) -> Result<Vec<CheckResult>> {
    let one = oracle_cases(rng, opts.oracle_cases, 1, 1)?;
    let two = oracle_cases(rng, opts.two_photon_cases, 3, 2)?;
    let run = |label: &'static str, cases: &[OracleCase], tol: f64| -> Vec<CheckResult> {
        cases
            .par_iter()
            .enumerate()
            .map(|(i, c)| CheckResult::from_result(format!("oracle/{label}/{i}"), tol, oracle_deviation(&c.params, &c.rho0)))
            .collect()
    };
    let mut checks = run("one-photon", &one, ORACLE_ONE_PHOTON_TOLERANCE);
    checks.extend(run("two-photon", &two, ORACLE_TWO_PHOTON_TOLERANCE));
    Ok(checks)
}

fn run_ode_suite(rng: &mut ChaCha8Rng, opts: &CertifyOptions) -> Vec<CheckResult> {
    let cases: Vec<SystemParams> = (0..opts.ode_cases).map(|i| random_params(rng, i % 4 == 3)).collect();
    cases
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| {
            ODE_TIMES.iter().flat_map(move |&x| {
                let t = x / p.max_rate();
                let residual = ode_residuals(p, t).map(|r| r.max());
                let conjugation = factorization_params(p, t).map(|s| s.conjugation_defect());
                [
                    CheckResult::from_result(format!("odes/{i}/t={x}/residual"), ODE_RESIDUAL_TOLERANCE, residual),
                    CheckResult::from_result(format!("odes/{i}/t={x}/conjugation"), CONJUGATION_TOLERANCE, conjugation),
                ]
            })
        })
        .collect()
}

/// Log-spaced ratios `8^((2i − n + 1)/(n − 1))` for `i = 0..n`, symmetric
/// under `x ↦ 1/x` so that `x_i · x_{n−1−i} = 1`.
pub fn reciprocal_log_grid(n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n).map(|i| 8f64.powf((2.0 * i as f64 - m) / m)).collect()
}

/// Outcome of scanning `(k12, k21) = √(k11k22)·(x_i, x_j)` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldScan {
    pub points: usize,
    /// Largest `min|Re λ±|` among points with `k12k21 = k11k22`.
    pub max_on_curve: f64,
    /// Smallest `min|Re λ±|` among the remaining points.
    pub min_off_curve: f64,
    /// Points whose classification by `tolerance` disagrees with the curve.
    pub misclassified: usize,
    pub tolerance: f64,
}

impl ManifoldScan {
    pub fn passed(&self) -> bool {
        self.misclassified == 0
    }
}

/// Checks that a root with vanishing real part exists exactly when
/// `k12 k21 = k11 k22`, for equal frequencies and no shifts.
pub fn manifold_iff_scan(k11: f64, k22: f64, omega: f64, n: usize, tolerance: f64) -> ManifoldScan {
    let grid = reciprocal_log_grid(n);
    let g = (k11 * k22).sqrt();
    let mut scan = ManifoldScan { points: n * n, max_on_curve: 0.0, min_off_curve: f64::INFINITY, misclassified: 0, tolerance };
    for (i, x) in grid.iter().enumerate() {
        for (j, y) in grid.iter().enumerate() {
            let p = SystemParams { k12: g * x, k21: g * y, ..SystemParams::decoupled(omega, omega, k11, k22) };
            let s = Spectrum::new(&p, RootBranch::Principal);
            let residual = s.lambda_minus.re.abs().min(s.lambda_plus.re.abs());
            let on_curve = i + j == n - 1;
            if on_curve {
                scan.max_on_curve = scan.max_on_curve.max(residual);
            } else {
                scan.min_off_curve = scan.min_off_curve.min(residual);
            }
            if on_curve != (residual <= tolerance) {
                scan.misclassified += 1;
            }
        }
    }
    scan
}

/// `‖L − (L_A + L_B)‖₂` on the manifold with the given `κ`.
pub fn split_defect(kappa: f64, n_trunc: usize) -> Result<f64> {
    let p = SystemParams::dfs_manifold(1.0, 0.05, 0.01, kappa);
    let full = build_liouvillian(&p, n_trunc)?;
    let (la, lb, _) = normal_mode_split(&p, kappa, n_trunc)?;
    Ok(spectral_norm(&(full.matrix() - (&la + &lb).matrix())))
}

fn run_dfs_suite() -> Vec<CheckResult> {
    let scan = manifold_iff_scan(0.03, 0.07, 1.0, 50, MANIFOLD_ROOT_TOLERANCE);
    let mut checks = vec![
        CheckResult {
            name: "dfs/iff-scan/misclassified".into(),
            passed: scan.passed(),
            measured: scan.misclassified as f64,
            tolerance: 0.0,
            detail: Some(format!("max on curve {:e}, min off curve {:e}", scan.max_on_curve, scan.min_off_curve)),
        },
        CheckResult::at_most("dfs/iff-scan/on-curve", scan.max_on_curve, MANIFOLD_ROOT_TOLERANCE),
    ];
    checks.extend([0.0, 0.5, 1.0, 2.0].par_iter().map(|&kappa| {
        CheckResult::from_result(format!("dfs/split/kappa={kappa}"), SPLIT_TOLERANCE, split_defect(kappa, 2))
    }).collect::<Vec<_>>());
    checks
}

/// Runs `suite` and collects every check; a numerical failure inside a case
/// is reported as a failed check rather than aborting the run.
pub fn run_suite(suite: Suite, opts: &CertifyOptions) -> Result<CertifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    if suite.includes(Suite::Oracle) {
        checks.extend(run_oracle_suite(&mut rng, opts)?);
    }
    if suite.includes(Suite::Odes) {
        checks.extend(run_ode_suite(&mut rng, opts));
    }
    if suite.includes(Suite::Dfs) {
        checks.extend(run_dfs_suite());
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(CertifyReport { suite, seed: opts.seed, passed, checks })
}
