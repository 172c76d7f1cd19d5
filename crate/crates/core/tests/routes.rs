//! Cross-checks between independent evaluation routes on fixed cases.

use std::path::Path;

use dfs_cavity::experiment::{pe_diagonal, pe_dissipative, run_protocol, ExperimentConfig, Propagation};
use dfs_cavity::io::{best_offset, load_config, OverlayDataset, OverlayRow, SweepResult};
use dfs_cavity::oracle::{integrate, IntegratorConfig};
use dfs_cavity::propagator::{propagate_analytic, single_photon_evolution, single_photon_state};
use dfs_cavity::{build_liouvillian, FockSpace, SystemParams};

fn coupled() -> SystemParams {
    SystemParams {
        omega1: 1.1,
        omega2: 0.9,
        k11: 0.05,
        k22: 0.03,
        k12: 0.02,
        k21: 0.025,
        delta11: 0.01,
        delta22: -0.004,
        delta12: 0.006,
        delta21: -0.003,
    }
}

#[test]
fn single_photon_route_agrees_with_rk4() {
    let p = coupled();
    let space = FockSpace::new(1).unwrap();
    let rho = single_photon_state(0.7, space).unwrap();
    let l = build_liouvillian(&p, 1).unwrap();
    for t in [3.0, 30.0, 90.0] {
        let closed = single_photon_evolution(0.7, &p, t, space).unwrap();
        let oracle = integrate(&rho, &l, t, &IntegratorConfig::for_liouvillian(&l)).unwrap();
        let general = propagate_analytic(&rho, &p, t).unwrap();
        assert!(closed.trace_distance(&oracle) < 1e-7, "t={t}");
        assert!(closed.trace_distance(&general) < 1e-12, "t={t}");
    }
}

#[test]
fn protocol_with_either_propagator_matches_the_fringe_formula() {
    let cfg = ExperimentConfig::new(0.5, 10.0, 40.0, 25.0, 0.2).unwrap();
    let p = SystemParams { k12: 0.004, k21: 0.006, ..cfg.diagonal_params() };
    for t in [1.0, 7.3, 25.0] {
        let formula = pe_dissipative(t, &p, &cfg).unwrap();
        let analytic = run_protocol(&p, &cfg, t, Propagation::Analytic).unwrap();
        let oracle = run_protocol(&p, &cfg, t, Propagation::Oracle).unwrap();
        assert!((formula - analytic).abs() < 1e-12, "T={t}");
        assert!((formula - oracle).abs() < 1e-7, "T={t}");
    }
}

#[test]
fn diagonal_fringe_is_the_uncoupled_general_fringe() {
    let cfg = ExperimentConfig::new(0.8, 12.0, 30.0, 10.0, 0.05).unwrap();
    let (k11, k22) = (cfg.k11_eff(), cfg.k22_eff());
    let p = cfg.diagonal_params();
    for i in 0..50 {
        let t = cfg.prep_time() + 0.9 * i as f64;
        let a = pe_diagonal(t, k11, k22, &cfg).unwrap();
        let b = pe_dissipative(t, &p, &cfg).unwrap();
        assert!((a - b).abs() < 1e-13, "T={t}: {a} vs {b}");
    }
}

#[test]
fn shipped_configurations_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = load_config(&path, false).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!cfg.experiment.t_grid.is_empty());
            seen += 1;
        }
    }
    assert!(seen >= 2);
}

#[test]
fn overlay_offset_is_recovered_from_files() {
    let cfg = ExperimentConfig::new(0.5, 10.0, 40.0, 25.0, 0.2).unwrap();
    let p = cfg.diagonal_params();
    let grid: Vec<f64> = (0..4000).map(|i| 1.0 + 0.01 * i as f64).collect();
    let mut sweep = SweepResult::new();
    sweep.push_curve("general", grid.iter().map(|&t| (t, pe_dissipative(t, &p, &cfg).unwrap())));

    let shift = 0.6;
    let rows: Vec<OverlayRow> = (0..30)
        .map(|i| {
            let t = 5.0 + i as f64;
            OverlayRow { t, pe: pe_dissipative(t + shift, &p, &cfg).unwrap(), sigma: Some(0.01) }
        })
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let (curve_path, overlay_path) = (dir.path().join("curve.csv"), dir.path().join("overlay.csv"));
    sweep.write_csv(&curve_path).unwrap();
    let mut text = String::from("# measured\nT,pe,sigma\n");
    for r in &rows {
        text.push_str(&format!("{:.17e},{:.17e},{}\n", r.t, r.pe, r.sigma.unwrap()));
    }
    std::fs::write(&overlay_path, text).unwrap();

    let sweep = SweepResult::read_csv(&curve_path).unwrap();
    let overlay = OverlayDataset::read_csv(&overlay_path).unwrap();
    let report = best_offset(&sweep, "general", &overlay, -1.0, 1.0, 81).unwrap();
    assert!((report.phase_offset - shift).abs() < 1e-3, "{}", report.phase_offset);
    assert!(report.rms < 1e-4);
}
