use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dfs_cavity::certify::{run_suite, CertifyOptions, Suite};
use dfs_cavity::dfs::{dfs_check, dfs_state, DfsReport, DfsStateKind};
use dfs_cavity::experiment::{
    pe_diagonal, pe_dissipative, pe_ideal, run_protocol_with, ExperimentConfig, Propagation, ProtocolSettings,
};
use dfs_cavity::io::{best_offset, load_config, residuals_for_tag, LoadedConfig, OverlayDataset, ResidualReport, SweepResult};
use dfs_cavity::oracle::{integrate, IntegratorConfig};
use dfs_cavity::propagator::{
    compute_coefficients, factorization_params, ode_residuals, propagate_analytic, single_photon_state,
    FactorizationSchedule, PropagatorCoefficients,
};
use dfs_cavity::{build_liouvillian, pure_state, DensityMatrix, Error, FockIndex, FockSpace, SystemParams, DEFAULT_N_TRUNC};
use rayon::prelude::*;
use serde::Serialize;

use crate::{Failure, Method, Model, Source, SuiteArg};

/// Largest excursion outside `[0, 1]` that is rounded back into range
/// before a probability is written.
const PROBABILITY_SLACK: f64 = 1e-12;

/// Initial field state for `propagate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Vacuum,
    OnePhoton,
    Fock(usize, usize),
    Dfs(f64),
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("unrecognised state `{s}` (expected vacuum, one-photon, fock:N1,N2 or dfs:KAPPA)");
        match s.split_once(':') {
            None if s == "vacuum" => Ok(StateSpec::Vacuum),
            None if s == "one-photon" => Ok(StateSpec::OnePhoton),
            Some(("fock", rest)) => {
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                Ok(StateSpec::Fock(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
            }
            Some(("dfs", k)) => Ok(StateSpec::Dfs(k.trim().parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

struct Inputs {
    params: SystemParams,
    config: Option<LoadedConfig>,
}

fn read_source(source: &Source, strict: bool) -> Result<Inputs, Failure> {
    match (&source.config, &source.params) {
        (Some(path), None) => {
            let config = load_config(path, strict)?;
            Ok(Inputs { params: config.params, config: Some(config) })
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let params: SystemParams = serde_json::from_str(&text)?;
            params.validate()?;
            Ok(Inputs { params, config: None })
        }
        _ => Err(Failure::Usage("exactly one of --config and --params is required".into())),
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p)?);
            serde_json::to_writer_pretty(&mut f, value)?;
            writeln!(f)?;
            f.flush()?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, value)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn write_sweep(sweep: &SweepResult, path: Option<&Path>) -> Result<(), Failure> {
    sweep.validate()?;
    match path {
        Some(p) => sweep.write_csv(p)?,
        None => sweep.write_to(std::io::stdout().lock())?,
    }
    log::info!("wrote {} rows", sweep.rows.len());
    Ok(())
}

/// Refuses to put a CSV and a JSON report on stdout together.
fn check_outputs(out: &Option<PathBuf>, report: &Option<PathBuf>, has_report: bool) -> Result<(), Failure> {
    if has_report && out.is_none() && report.is_none() {
        return Err(Failure::Usage("with the CSV on stdout, the report needs --report PATH".into()));
    }
    Ok(())
}

fn probability(value: f64, t: f64) -> Result<f64, Failure> {
    if (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(Error::TraceOutOfRange { trace: value }).map_err(|e| {
            log::error!("probability {value} at T = {t} is outside [0, 1]");
            Failure::Core(e)
        })
    }
}

fn metadata(sweep: &mut SweepResult, command: &str, config: &LoadedConfig) -> Result<(), Failure> {
    sweep.push_meta("command", command);
    sweep.push_meta("params", serde_json::to_string(&config.params)?);
    let mut experiment = config.experiment.clone();
    experiment.t_grid.clear();
    sweep.push_meta("experiment", serde_json::to_string(&experiment)?);
    let grid = &config.experiment.t_grid;
    sweep.push_meta("T_grid", format!("{} points from {:?} to {:?}", grid.len(), grid[0], grid[grid.len() - 1]));
    sweep.push_meta("directives", serde_json::to_string(&config.directives)?);
    Ok(())
}

#[derive(Serialize)]
struct CoeffsEntry {
    t: f64,
    coefficients: PropagatorCoefficients,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<FactorizationSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_ode_residual: Option<f64>,
}

pub fn coeffs(source: &Source, strict: bool, times: &[f64]) -> Result<(), Failure> {
    let inputs = read_source(source, strict)?;
    let p = inputs.params;
    let entries = times
        .iter()
        .map(|&t| {
            let coefficients = compute_coefficients(&p, t)?;
            let (schedule, schedule_error, max_ode_residual) = match factorization_params(&p, t) {
                Ok(s) => (Some(s), None, Some(ode_residuals(&p, t)?.max())),
                Err(e) if e.is_numerical() => {
                    log::warn!("{e}");
                    (None, Some(e.to_string()), None)
                }
                Err(e) => return Err(e),
            };
            Ok(CoeffsEntry { t, coefficients, schedule, schedule_error, max_ode_residual })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_json(&entries, None)
}

pub struct PropagateArgs {
    pub state: StateSpec,
    pub phi: f64,
    pub time: f64,
    pub method: Method,
    pub n_trunc: Option<usize>,
    pub matrix: bool,
}

#[derive(Serialize)]
struct StateSummary {
    method: &'static str,
    trace: f64,
    purity: f64,
    min_eigenvalue: f64,
    mean_n1: f64,
    mean_n2: f64,
    populations: Vec<(usize, usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<[f64; 2]>>>,
}

fn summarise(method: &'static str, rho: &DensityMatrix, with_matrix: bool) -> StateSummary {
    let space = rho.space();
    let (n1, n2) = space.number_operators();
    let populations = space
        .indices()
        .map(|i| (i.n1, i.n2, rho.population(i).expect("index from the same space")))
        .collect();
    let m = rho.matrix();
    StateSummary {
        method,
        trace: rho.trace().re,
        purity: rho.purity(),
        min_eigenvalue: rho.min_eigenvalue(),
        mean_n1: rho.expectation(&n1).re,
        mean_n2: rho.expectation(&n2).re,
        populations,
        matrix: with_matrix.then(|| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()),
    }
}

#[derive(Serialize)]
struct PropagateOutput {
    t: f64,
    n_trunc: usize,
    params: SystemParams,
    results: Vec<StateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_distance: Option<f64>,
}

pub fn propagate(source: &Source, strict: bool, args: PropagateArgs) -> Result<(), Failure> {
    let inputs = read_source(source, strict)?;
    let n_trunc = args.n_trunc.or(inputs.config.as_ref().map(|c| c.directives.n_trunc)).unwrap_or(DEFAULT_N_TRUNC);
    let space = FockSpace::new(n_trunc)?;
    let rho0 = match args.state {
        StateSpec::Vacuum => DensityMatrix::vacuum(space),
        StateSpec::OnePhoton => single_photon_state(args.phi, space)?,
        StateSpec::Fock(a, b) => pure_state(space, &[(FockIndex::new(a, b), num_complex::Complex64::new(1.0, 0.0))])?,
        StateSpec::Dfs(kappa) => dfs_state(DfsStateKind::Fock, kappa, space)?,
    };
    let p = inputs.params;
    let analytic = matches!(args.method, Method::Analytic | Method::Both)
        .then(|| propagate_analytic(&rho0, &p, args.time))
        .transpose()?;
    let oracle = match args.method {
        Method::Oracle | Method::Both => {
            let l = build_liouvillian(&p, n_trunc)?;
            Some(integrate(&rho0, &l, args.time, &IntegratorConfig::for_liouvillian(&l))?)
        }
        Method::Analytic => None,
    };
    let trace_distance = match (&analytic, &oracle) {
        (Some(a), Some(o)) => Some(a.trace_distance(o)),
        _ => None,
    };
    let results = [("analytic", &analytic), ("oracle", &oracle)]
        .into_iter()
        .filter_map(|(name, rho)| rho.as_ref().map(|r| summarise(name, r, args.matrix)))
        .collect();
    write_json(&PropagateOutput { t: args.time, n_trunc, params: p, results, trace_distance }, None)
}

pub struct PeCurveArgs {
    pub model: Model,
    pub out: Option<PathBuf>,
    pub overlay: Option<PathBuf>,
    pub offset: Option<f64>,
    pub fit_offset: Option<Vec<f64>>,
    pub offset_steps: usize,
    pub report: Option<PathBuf>,
}

fn model_tag(model: Model) -> &'static str {
    match model {
        Model::Ideal => "ideal",
        Model::Diagonal => "diagonal",
        Model::General => "general",
        Model::Protocol => "protocol",
    }
}

/// `P_e` of `model` at every grid point, evaluated in parallel and returned
/// in grid order.
fn evaluate_model(model: Model, config: &LoadedConfig) -> Result<Vec<(f64, f64)>, Failure> {
    let (p, cfg) = (&config.params, &config.experiment);
    let settings = ProtocolSettings { n_trunc: config.directives.n_trunc, ..Default::default() };
    let one = |t: f64| -> Result<f64, Error> {
        match model {
            Model::Ideal => Ok(pe_ideal(t, cfg)),
            Model::Diagonal => pe_diagonal(t, p.k11, p.k22, cfg),
            Model::General => pe_dissipative(t, p, cfg),
            Model::Protocol => run_protocol_with(p, cfg, t, Propagation::Analytic, &settings),
        }
    };
    cfg.t_grid
        .par_iter()
        .map(|&t| Ok((t, probability(one(t)?, t)?)))
        .collect()
}

pub fn pe_curve(config_path: &Path, strict: bool, args: PeCurveArgs) -> Result<(), Failure> {
    let config = load_config(config_path, strict)?;
    check_outputs(&args.out, &args.report, args.overlay.is_some())?;
    if args.overlay.is_none() && (args.offset.is_some() || args.fit_offset.is_some()) {
        return Err(Failure::Usage("--offset and --fit-offset need --overlay".into()));
    }
    let tag = model_tag(args.model);
    let mut sweep = SweepResult::new();
    metadata(&mut sweep, &format!("pe-curve --model {tag}"), &config)?;
    sweep.push_curve(tag, evaluate_model(args.model, &config)?);
    write_sweep(&sweep, args.out.as_deref())?;

    if let Some(path) = &args.overlay {
        let overlay = OverlayDataset::read_csv(path)?;
        let report: ResidualReport = match &args.fit_offset {
            Some(b) => best_offset(&sweep, tag, &overlay, b[0], b[1], args.offset_steps)?,
            None => residuals_for_tag(&sweep, tag, &overlay, args.offset.unwrap_or(config.directives.phase_offset))?,
        };
        log::info!("overlay rms {:e} at offset {}", report.rms, report.phase_offset);
        write_json(&report, args.report.as_deref())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RatioReport {
    ratio: f64,
    k12: f64,
    k21: f64,
    analysis: DfsReport,
}

pub fn dfs_scan(
    config_path: &Path,
    strict: bool,
    ratio_grid: Option<Vec<f64>>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<(), Failure> {
    let config = load_config(config_path, strict)?;
    check_outputs(&out, &report, true)?;
    let ratios = ratio_grid.unwrap_or_else(|| config.directives.ratio_grid.clone());
    if ratios.is_empty() || ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Failure::Usage("ratios must be finite and non-negative".into()));
    }
    let cfg: &ExperimentConfig = &config.experiment;
    if cfg.delta != 0.0 {
        log::warn!("dfs-scan with δ = {} ≠ 0: the modes are not degenerate and no ratio is fully protected", cfg.delta);
    }
    let base = config.params;
    let g = (base.k11 * base.k22).sqrt();
    let mut sweep = SweepResult::new();
    metadata(&mut sweep, "dfs-scan", &config)?;
    sweep.push_meta("ratios", format!("{ratios:?}"));
    let mut reports = Vec::with_capacity(ratios.len());
    for &ratio in &ratios {
        let p = SystemParams { k12: ratio * g, k21: ratio * g, ..base };
        let points = cfg
            .t_grid
            .par_iter()
            .map(|&t| Ok((t, probability(pe_dissipative(t, &p, cfg)?, t)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        sweep.push_curve(&format!("ratio={ratio}"), points);
        reports.push(RatioReport { ratio, k12: p.k12, k21: p.k21, analysis: dfs_check(&cfg.frame_params(&p), 1e-12) });
    }
    write_sweep(&sweep, out.as_deref())?;
    write_json(&reports, report.as_deref())
}

#[derive(Serialize)]
struct ProtocolEntry {
    #[serde(rename = "T")]
    t: f64,
    tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<f64>,
    closed_form: f64,
}

pub fn protocol(config_path: &Path, strict: bool, times: &[f64], method: Method, n_trunc: usize) -> Result<(), Failure> {
    let config = load_config(config_path, strict)?;
    let (p, cfg) = (&config.params, &config.experiment);
    let times = if times.is_empty() { cfg.t_grid.as_slice() } else { times };
    let settings = ProtocolSettings { n_trunc, ..Default::default() };
    let run = |t: f64, which: Propagation| run_protocol_with(p, cfg, t, which, &settings);
    let entries = times
        .par_iter()
        .map(|&t| {
            Ok(ProtocolEntry {
                t,
                tau: cfg.tau(t)?,
                analytic: matches!(method, Method::Analytic | Method::Both).then(|| run(t, Propagation::Analytic)).transpose()?,
                oracle: matches!(method, Method::Oracle | Method::Both).then(|| run(t, Propagation::Oracle)).transpose()?,
                closed_form: pe_dissipative(t, p, cfg)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write_json(&entries, None)
}

pub fn certify(suite: SuiteArg, seed: u64, cases: Option<usize>, out: Option<PathBuf>) -> Result<(), Failure> {
    let suite = match suite {
        SuiteArg::Oracle => Suite::Oracle,
        SuiteArg::Odes => Suite::Odes,
        SuiteArg::Dfs => Suite::Dfs,
        SuiteArg::All => Suite::All,
    };
    let defaults = CertifyOptions::default();
    let opts = match cases {
        Some(n) => CertifyOptions { seed, oracle_cases: n, two_photon_cases: n, ode_cases: n },
        None => CertifyOptions { seed, ..defaults },
    };
    log::info!("certify {suite:?} with seed {seed}");
    let report = run_suite(suite, &opts)?;
    write_json(&report, out.as_deref())?;
    let failed = report.failures().count();
    for f in report.failures() {
        log::error!("{}: measured {:e}, tolerance {:e}{}", f.name, f.measured, f.tolerance, f.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default());
    }
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}
