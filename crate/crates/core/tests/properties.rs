use proptest::prelude::*;

use dfs_cavity::experiment::{pe_dissipative, ExperimentConfig};
use dfs_cavity::generator::superop::{sandwich, unvectorize, vectorize};
use dfs_cavity::io::SweepResult;
use dfs_cavity::propagator::{compute_coefficients_on_branch, propagate_analytic, RootBranch};
use dfs_cavity::{build_liouvillian, CMatrix, DensityMatrix, FockIndex, FockSpace, SystemParams, C64};

/// Physical coefficients: the cross terms lie inside the cone
/// `(k12+k21)² + (Δ12−Δ21)² ≤ 4k11k22` scaled by `fill`.
fn physical_params() -> impl Strategy<Value = SystemParams> {
    (
        (0.5..1.5f64, 0.5..1.5f64),
        (0.01..0.08f64, 0.01..0.08f64),
        (0.0..1.0f64, 0.0..std::f64::consts::TAU, -0.02..0.02f64),
        (-0.05..0.05f64, -0.05..0.05f64, -0.02..0.02f64),
    )
        .prop_map(|((omega1, omega2), (k11, k22), (fill, angle, skew), (delta11, delta22, shift))| {
            let radius = fill * (k11 * k22).sqrt();
            let (sym, anti) = (radius * angle.cos(), radius * angle.sin());
            SystemParams {
                omega1,
                omega2,
                k11,
                k22,
                k12: sym + skew,
                k21: sym - skew,
                delta11,
                delta22,
                delta12: shift + anti,
                delta21: shift - anti,
            }
        })
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

/// Pure state on the sector with at most two photons in total.
fn two_photon_state(space: FockSpace, amps: &[(f64, f64)]) -> Option<DensityMatrix> {
    let support: Vec<(FockIndex, C64)> = space
        .indices()
        .filter(|i| i.total() <= 2)
        .zip(amps)
        .map(|(i, &(re, im))| (i, C64::new(re, im)))
        .collect();
    let norm: f64 = support.iter().map(|(_, c)| c.norm_sqr()).sum();
    if norm < 1e-3 {
        return None;
    }
    dfs_cavity::pure_state(space, &support).ok()
}

fn swap_modes(rho: &DensityMatrix) -> DensityMatrix {
    let space = rho.space();
    let d = space.dim();
    let mut perm = CMatrix::zeros(d, d);
    for idx in space.indices() {
        let from = space.flatten(idx).unwrap();
        let to = space.flatten(FockIndex::new(idx.n2, idx.n1)).unwrap();
        perm[(to, from)] = C64::new(1.0, 0.0);
    }
    rho.conjugated_by(&perm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analytic_evolution_preserves_trace_and_positivity(
        p in physical_params(),
        amps in amplitudes(6),
        x in 0.0..6.0f64,
    ) {
        let space = FockSpace::new(2).unwrap();
        let Some(rho) = two_photon_state(space, &amps) else { return Ok(()) };
        let out = propagate_analytic(&rho, &p, x / p.max_rate()).unwrap();
        prop_assert!((out.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(out.hermiticity_deviation() < 1e-10);
        prop_assert!(out.min_eigenvalue() > -1e-10);
        prop_assert!(out.purity() <= 1.0 + 1e-10);
    }

    #[test]
    fn evolution_is_a_semigroup(p in physical_params(), amps in amplitudes(6), a in 0.0..3.0f64, b in 0.0..3.0f64) {
        let space = FockSpace::new(2).unwrap();
        let Some(rho) = two_photon_state(space, &amps) else { return Ok(()) };
        let (t1, t2) = (a / p.max_rate(), b / p.max_rate());
        let direct = propagate_analytic(&rho, &p, t1 + t2).unwrap();
        let stepped = propagate_analytic(&propagate_analytic(&rho, &p, t1).unwrap(), &p, t2).unwrap();
        prop_assert!(direct.trace_distance(&stepped) < 1e-9);
    }

    #[test]
    fn relabelling_the_modes_commutes_with_evolution(p in physical_params(), amps in amplitudes(6), x in 0.0..5.0f64) {
        let space = FockSpace::new(2).unwrap();
        let Some(rho) = two_photon_state(space, &amps) else { return Ok(()) };
        let t = x / p.max_rate();
        let forward = swap_modes(&propagate_analytic(&rho, &p, t).unwrap());
        let mirrored = propagate_analytic(&swap_modes(&rho), &p.swapped(), t).unwrap();
        prop_assert!(forward.trace_distance(&mirrored) < 1e-10);
    }

    #[test]
    fn transfer_amplitudes_do_not_depend_on_the_root_branch(p in physical_params(), x in 0.0..10.0f64) {
        let t = x / p.max_rate();
        let a = compute_coefficients_on_branch(&p, t, RootBranch::Principal).unwrap();
        let b = compute_coefficients_on_branch(&p, t, RootBranch::Negated).unwrap();
        for (u, v) in [(a.f1, b.f1), (a.f2, b.f2), (a.l1, b.l1), (a.l2, b.l2)] {
            prop_assert!((u - v).norm() <= 1e-13 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn liouvillian_output_is_traceless(p in physical_params(), n_trunc in 1usize..4, i in 0usize..64, j in 0usize..64) {
        let l = build_liouvillian(&p, n_trunc).unwrap();
        let d = l.space().dim();
        let mut unit = CMatrix::zeros(d, d);
        unit[(i % d, j % d)] = C64::new(1.0, 0.0);
        let out = unvectorize(&(l.matrix() * vectorize(&unit)), d);
        prop_assert!(out.trace().norm() < 1e-14);
    }

    #[test]
    fn sandwich_superoperator_matches_matrix_products(entries in prop::collection::vec(-1.0..1.0f64, 54)) {
        let d = 3;
        let m = |off: usize| CMatrix::from_fn(d, d, |r, c| C64::new(entries[off + 2 * (r * d + c)], entries[off + 2 * (r * d + c) + 1]));
        let (x, rho, y) = (m(0), m(18), m(36));
        let lhs = vectorize(&(&x * &rho * &y));
        let rhs = sandwich(&x, &y) * vectorize(&rho);
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn visibility_factor_scales_probabilities(p in physical_params(), reduction in 0.0..1.0f64, x in 0.0..4.0f64) {
        let cfg = ExperimentConfig::new(0.4, 10.0, 3.0, 2.0, 0.1).unwrap();
        let scaled = cfg.clone().with_reduction(reduction);
        let t = cfg.prep_time() + x / p.max_rate();
        let full = pe_dissipative(t, &p, &cfg).unwrap();
        prop_assert!((pe_dissipative(t, &p, &scaled).unwrap() - reduction * full).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&full));
    }

    #[test]
    fn sweep_files_round_trip_bit_exactly(
        curves in prop::collection::vec(prop::collection::vec((0.0..1e3f64, 0.0..=1.0f64), 1..20), 1..4),
    ) {
        let mut sweep = SweepResult::new();
        sweep.push_meta("note", "generated");
        for (k, points) in curves.iter().enumerate() {
            sweep.push_curve(&format!("curve={k}"), points.iter().copied());
        }
        let mut bytes = Vec::new();
        sweep.write_to(&mut bytes).unwrap();
        let back = SweepResult::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.rows.len(), sweep.rows.len());
        for (a, b) in back.rows.iter().zip(&sweep.rows) {
            prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
            prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
            prop_assert_eq!(&a.tag, &b.tag);
        }
        prop_assert_eq!(back.metadata, sweep.metadata);
    }
}
