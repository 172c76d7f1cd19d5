//! Brute-force reference integrator for `dρ/dt = L ρ`.
//!
//! Fixed-step classical RK4 on the vectorised density matrix. The integrator
//! only sees a generic sparse matrix; it must stay independent of the analytic
//! propagator it certifies.

use nalgebra::DVector;

use crate::generator::{superop, Liouvillian};
use crate::state::{DensityMatrix, Tolerances};
use crate::{Error, Result, C64};

/// Positivity threshold for the final state.
pub const POSITIVITY_LIMIT: f64 = 1e-6;

/// Largest admissible `dt · ‖L‖₁`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub method: Method,
    pub max_steps: usize,
    /// Run the full state validator every this many steps (0: final state only).
    pub validate_every: usize,
}

impl IntegratorConfig {
    /// `dt = 1/(50·max coefficient)`, shrunk if needed so that
    /// `dt·‖L‖₁ ≤ 0.1` holds on the given truncation.
    pub fn for_liouvillian(l: &Liouvillian) -> Self {
        let by_params = match l.params().max_coefficient() {
            m if m > 0.0 => 1.0 / (50.0 * m),
            _ => f64::INFINITY,
        };
        let by_norm = match l.norm_one() {
            n if n > 0.0 => 0.99 * STABILITY_LIMIT / n,
            _ => f64::INFINITY,
        };
        let dt = by_params.min(by_norm);
        IntegratorConfig {
            dt: if dt.is_finite() { dt } else { 1.0 },
            method: Method::Rk4,
            max_steps: 50_000_000,
            validate_every: 0,
        }
    }

    pub fn with_dt(self, dt: f64) -> Self {
        IntegratorConfig { dt, ..self }
    }

    pub fn with_validation_every(self, steps: usize) -> Self {
        IntegratorConfig { validate_every: steps, ..self }
    }
}

/// Compressed-row copy of a superoperator.
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    fn from_dense(m: &crate::CMatrix) -> Self {
        let mut row_ptr = Vec::with_capacity(m.nrows() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { row_ptr, cols, vals }
    }

    fn mul_into(&self, x: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }
}

struct Rk4<'a> {
    op: &'a Csr,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl<'a> Rk4<'a> {
    fn new(op: &'a Csr, n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Rk4 { op, k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    fn step(&mut self, y: &mut [C64], h: f64) {
        let half = 0.5 * h;
        self.op.mul_into(y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k1[i] * half;
        }
        self.op.mul_into(&self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k2[i] * half;
        }
        self.op.mul_into(&self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        self.op.mul_into(&self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}

/// (ρ + ρ†)/2 on the row-major vector; returns the Frobenius norm of the change.
fn symmetrize(y: &mut [C64], d: usize) -> f64 {
    let mut change = 0.0;
    for i in 0..d {
        let ii = i * d + i;
        change += y[ii].im * y[ii].im;
        y[ii].im = 0.0;
        for j in i + 1..d {
            let (ij, ji) = (i * d + j, j * d + i);
            let avg = (y[ij] + y[ji].conj()) * 0.5;
            change += 2.0 * (y[ij] - avg).norm_sqr();
            y[ij] = avg;
            y[ji] = avg.conj();
        }
    }
    change.sqrt()
}

fn check_stability(l: &Liouvillian, cfg: &IntegratorConfig) -> Result<()> {
    if !(cfg.dt > 0.0) {
        return Err(Error::param("dt", format!("must be > 0, got {}", cfg.dt)));
    }
    let norm = l.norm_one();
    let product = cfg.dt * norm;
    if product > STABILITY_LIMIT {
        return Err(Error::StepSize { dt: cfg.dt, norm, product });
    }
    Ok(())
}

fn to_state(l: &Liouvillian, y: &[C64]) -> Result<DensityMatrix> {
    let v = DVector::from_column_slice(y);
    DensityMatrix::from_matrix(l.space(), superop::unvectorize(&v, l.space().dim()))
}

fn check_final(rho: &DensityMatrix, trace0: f64) -> Result<()> {
    let min = rho.min_eigenvalue();
    if min < -POSITIVITY_LIMIT {
        return Err(Error::Positivity { eigenvalue: min, tolerance: POSITIVITY_LIMIT });
    }
    let drift = (rho.trace().re - trace0).abs();
    if drift > 1e-10 {
        log::warn!("oracle trace drift {drift:e}");
    }
    Ok(())
}

/// Integrates `rho0` forward by `t`, returning ρ(t).
pub fn integrate(rho0: &DensityMatrix, l: &Liouvillian, t: f64, cfg: &IntegratorConfig) -> Result<DensityMatrix> {
    Ok(integrate_times(rho0, l, &[t], cfg)?.pop().expect("one time requested"))
}

/// Integrates through an ascending list of times and returns the state at each.
pub fn integrate_times(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<DensityMatrix>> {
    if rho0.space() != l.space() {
        return Err(Error::DimensionMismatch { expected: l.space().dim(), found: rho0.space().dim() });
    }
    check_stability(l, cfg)?;
    if let Some(&bad) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::param("t", format!("must be >= 0, got {bad}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("t", "times must be ascending"));
    }

    let total_steps: usize = {
        let mut prev = 0.0;
        let mut total = 0usize;
        for &t in times {
            total += ((t - prev) / cfg.dt).ceil() as usize;
            prev = t;
        }
        total
    };
    if total_steps > cfg.max_steps {
        return Err(Error::TooManySteps { needed: total_steps, limit: cfg.max_steps });
    }

    let d = l.space().dim();
    let csr = Csr::from_dense(l.matrix());
    let mut y: Vec<C64> = superop::vectorize(rho0.matrix()).iter().copied().collect();
    let trace0 = rho0.trace().re;
    let mut rk = Rk4::new(&csr, y.len());
    let mut out = Vec::with_capacity(times.len());
    let mut now = 0.0;
    let mut max_correction = 0.0_f64;
    let mut step_count = 0usize;

    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let n = (span / cfg.dt).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                rk.step(&mut y, h);
                max_correction = max_correction.max(symmetrize(&mut y, d));
                step_count += 1;
                if cfg.validate_every > 0 && step_count % cfg.validate_every == 0 {
                    let tol = Tolerances { positivity: POSITIVITY_LIMIT, trace: 1e-9, ..Default::default() };
                    to_state(l, &y)?.validate_with(&tol)?;
                }
            }
            now = t;
        }
        let rho = if span > 0.0 { to_state(l, &y)? } else if out.is_empty() && t == 0.0 { rho0.clone() } else { to_state(l, &y)? };
        check_final(&rho, trace0)?;
        out.push(rho);
    }
    log::debug!("oracle: {step_count} RK4 steps, largest Hermiticity correction {max_correction:e}");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockIndex;
    use crate::generator::build_liouvillian;
    use crate::state::pure_state;
    use crate::SystemParams;

    fn one(n1: usize, n2: usize, n_trunc: usize) -> DensityMatrix {
        let s = crate::FockSpace::new(n_trunc).unwrap();
        pure_state(s, &[(FockIndex::new(n1, n2), C64::new(1.0, 0.0))]).unwrap()
    }

    #[test]
    fn zero_time_returns_input_exactly() {
        let l = build_liouvillian(&SystemParams::decoupled(1.0, 2.0, 0.1, 0.2), 2).unwrap();
        let rho = one(1, 1, 2);
        let cfg = IntegratorConfig::for_liouvillian(&l);
        assert_eq!(integrate(&rho, &l, 0.0, &cfg).unwrap(), rho);
    }

    #[test]
    fn vacuum_stays_put() {
        let p = SystemParams { k12: 0.05, k21: 0.05, delta12: 0.01, ..SystemParams::decoupled(1.0, 1.5, 0.1, 0.08) };
        let l = build_liouvillian(&p, 3).unwrap();
        let rho = one(0, 0, 3);
        let cfg = IntegratorConfig::for_liouvillian(&l);
        let out = integrate(&rho, &l, 7.0, &cfg).unwrap();
        assert!(out.trace_distance(&rho) < 1e-14);
    }

    #[test]
    fn single_mode_population_decay() {
        let k = 0.5;
        let l = build_liouvillian(&SystemParams::decoupled(2.0, 0.0, k, 0.0), 1).unwrap();
        let cfg = IntegratorConfig::for_liouvillian(&l);
        let out = integrate(&one(1, 0, 1), &l, 1.0 / k, &cfg).unwrap();
        let pop = out.population(FockIndex::new(1, 0)).unwrap();
        assert!((pop - (-2.0f64).exp()).abs() < 1e-8, "population {pop}");
        assert!((out.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let p = SystemParams {
            k12: 0.1,
            k21: 0.1,
            delta12: 0.05,
            delta21: 0.05,
            ..SystemParams::decoupled(1.0, 0.7, 0.2, 0.15)
        };
        let l = build_liouvillian(&p, 1).unwrap();
        let rho = pure_state(
            l.space(),
            &[(FockIndex::new(1, 0), C64::new(0.6, 0.0)), (FockIndex::new(0, 1), C64::new(0.0, 0.8))],
        )
        .unwrap();
        let base = IntegratorConfig::for_liouvillian(&l).with_dt(0.05);
        let t = 3.0;
        let coarse = integrate(&rho, &l, t, &base).unwrap();
        let fine = integrate(&rho, &l, t, &base.with_dt(0.025)).unwrap();
        let finest = integrate(&rho, &l, t, &base.with_dt(0.0125)).unwrap();
        let e1 = (coarse.matrix() - finest.matrix()).norm();
        let e2 = (fine.matrix() - finest.matrix()).norm();
        // with a dt/4 reference the ideal ratio is (1 − 4⁻⁴)/(2⁻⁴ − 4⁻⁴) = 17
        assert!(e1 / e2 >= 14.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn semigroup() {
        let p = SystemParams { k12: 0.05, k21: 0.05, ..SystemParams::decoupled(1.0, 0.5, 0.1, 0.1) };
        let l = build_liouvillian(&p, 2).unwrap();
        let rho = pure_state(
            l.space(),
            &[(FockIndex::new(1, 1), C64::new(1.0, 0.0)), (FockIndex::new(0, 1), C64::new(0.3, 0.2))],
        )
        .unwrap();
        let cfg = IntegratorConfig::for_liouvillian(&l);
        let whole = integrate(&rho, &l, 3.0, &cfg).unwrap();
        let half = integrate(&rho, &l, 1.2, &cfg).unwrap();
        let split = integrate(&half, &l, 1.8, &cfg).unwrap();
        assert!(whole.trace_distance(&split) < 1e-8);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let l = build_liouvillian(&SystemParams::decoupled(10.0, 10.0, 1.0, 1.0), 2).unwrap();
        let cfg = IntegratorConfig::for_liouvillian(&l).with_dt(1.0);
        assert!(matches!(integrate(&one(1, 0, 2), &l, 1.0, &cfg), Err(Error::StepSize { .. })));
    }

    #[test]
    fn default_step_respects_stability_bound() {
        for n in 1..5 {
            let l = build_liouvillian(&SystemParams::decoupled(3.0, 1.0, 0.3, 0.1), n).unwrap();
            let cfg = IntegratorConfig::for_liouvillian(&l);
            assert!(cfg.dt * l.norm_one() <= STABILITY_LIMIT);
        }
    }

    #[test]
    fn non_physical_generator_trips_positivity() {
        // cross decay far outside the PSD region drives populations negative
        let p = SystemParams { k12: 1.0, k21: 1.0, ..SystemParams::decoupled(0.0, 0.0, 0.05, 0.05) };
        let l = build_liouvillian(&p, 1).unwrap();
        let cfg = IntegratorConfig::for_liouvillian(&l);
        let err = integrate(&one(1, 0, 1), &l, 2.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Positivity { .. }), "{err}");
    }
}
