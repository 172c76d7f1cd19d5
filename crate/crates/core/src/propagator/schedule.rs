use serde::Serialize;

use super::coefficients::{compute_coefficients, PropagatorCoefficients};
use crate::{Error, Result, SystemParams, C64};

/// `|F1|` below which the factorised form is declared singular.
pub const SINGULAR_F1: f64 = 1e-300;

/// The twelve exponents of
///
/// ```text
/// e^{Lt} = e^{h1 a1•a1†} e^{h2 a2•a2†} e^{z_l a1•a2†} e^{z a2•a1†}
///          e^{n_l •a1†a2} e^{n a2†a1•} e^{m2 a2†a2•} e^{p2 •a2†a2}
///          e^{m1 a1†a1•} e^{p1 •a1†a1} e^{q a1†a2•} e^{q_l •a2†a1}
/// ```
///
/// The rightmost factor acts on ρ first. `m1` is only defined modulo `2πi`;
/// every factor it enters is invariant under that shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorizationSchedule {
    pub t: f64,
    pub h1: C64,
    pub h2: C64,
    pub z_l: C64,
    pub z: C64,
    pub n_l: C64,
    pub n: C64,
    pub m2: C64,
    pub p2: C64,
    pub m1: C64,
    pub p1: C64,
    pub q: C64,
    pub q_l: C64,
}

impl FactorizationSchedule {
    /// Closed-form exponents from the transfer amplitudes.
    ///
    /// `e^{m1} = F1`, `e^{m2} = e^{−2Rt − m1}`, `q = L1/F1`, `n = L2/F1`,
    /// `h1 = (|F2|² + |L2|²)e^{4k_m t} − 1`, `h2 = (|F1|² + |L1|²)e^{4k_m t} − 1`,
    /// `z = −(L1 F2* + L2* F1)e^{4k_m t}` with `k_m = Re R = (k11 + k22)/2`.
    pub fn from_coefficients(co: &PropagatorCoefficients) -> Result<Self> {
        let t = co.t;
        let abs_f1 = co.f1.norm();
        if !(abs_f1 >= SINGULAR_F1) {
            return Err(Error::SingularFactorization { t, abs_f1 });
        }
        let big_r = co.spectrum.big_r;
        let growth = (4.0 * big_r.re * t).exp();
        let m1 = co.f1.ln();
        let m2 = -2.0 * big_r * t - m1;
        let q = co.l1 / co.f1;
        let n = co.l2 / co.f1;
        let z = -(co.l1 * co.f2.conj() + co.l2.conj() * co.f1) * growth;
        let h1 = C64::new((co.f2.norm_sqr() + co.l2.norm_sqr()) * growth - 1.0, 0.0);
        let h2 = C64::new((co.f1.norm_sqr() + co.l1.norm_sqr()) * growth - 1.0, 0.0);
        Ok(FactorizationSchedule {
            t,
            h1,
            h2,
            z_l: z.conj(),
            z,
            n_l: n.conj(),
            n,
            m2,
            p2: m2.conj(),
            m1,
            p1: m1.conj(),
            q,
            q_l: q.conj(),
        })
    }

    /// Exponents in the order they act on ρ.
    pub fn application_order(&self) -> [(&'static str, C64); 12] {
        [
            ("q_l", self.q_l),
            ("q", self.q),
            ("p1", self.p1),
            ("m1", self.m1),
            ("p2", self.p2),
            ("m2", self.m2),
            ("n", self.n),
            ("n_l", self.n_l),
            ("z", self.z),
            ("z_l", self.z_l),
            ("h2", self.h2),
            ("h1", self.h1),
        ]
    }

    /// Largest deviation from the conjugate-pair relations.
    pub fn conjugation_defect(&self) -> f64 {
        [
            self.n_l - self.n.conj(),
            self.q_l - self.q.conj(),
            self.p1 - self.m1.conj(),
            self.p2 - self.m2.conj(),
            self.z_l - self.z.conj(),
        ]
        .iter()
        .map(|d| d.norm())
        .fold(0.0, f64::max)
    }
}

pub fn factorization_params(params: &SystemParams, t: f64) -> Result<FactorizationSchedule> {
    FactorizationSchedule::from_coefficients(&compute_coefficients(params, t)?)
}

/// Absolute residuals of the twelve coupled equations for the exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeResiduals {
    pub t: f64,
    pub step: f64,
    pub values: [f64; 12],
}

impl OdeResiduals {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Shifts `m` by a multiple of `2πi` so it lies within `π` of `reference`.
fn unwrap_near(m: C64, reference: C64) -> C64 {
    let turns = ((reference.im - m.im) / std::f64::consts::TAU).round();
    C64::new(m.re, m.im + turns * std::f64::consts::TAU)
}

/// Schedule with `m1, m2, p1, p2` placed on the branch nearest `reference`.
fn aligned(params: &SystemParams, t: f64, reference: &FactorizationSchedule) -> Result<FactorizationSchedule> {
    let mut s = factorization_params(params, t)?;
    let m1 = unwrap_near(s.m1, reference.m1);
    let big_r = compute_coefficients(params, 0.0)?.spectrum.big_r;
    s.m1 = m1;
    s.p1 = m1.conj();
    s.m2 = -2.0 * big_r * t - m1;
    s.p2 = s.m2.conj();
    Ok(s)
}

/// Step reduction for the cancellation-free differences.
const GROWING_STEP_FACTOR: f64 = 1e-2;

type Mat2 = [[C64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

/// `(2 sinh(Gh), 2 cosh(Gh))` for a 2×2 matrix with `|Gh| ≪ 1`.
fn sinh_cosh_doubled(g: &Mat2, h: f64) -> (Mat2, Mat2) {
    let gh: Mat2 = g.map(|row| row.map(|x| x * h));
    let zero = C64::new(0.0, 0.0);
    let mut term: Mat2 = [[C64::new(2.0, 0.0), zero], [zero, C64::new(2.0, 0.0)]];
    let (mut sinh, mut cosh) = ([[zero; 2]; 2], term);
    for k in 1..16 {
        term = mat_mul(&term, &gh).map(|row| row.map(|x| x / k as f64));
        let target = if k % 2 == 1 { &mut sinh } else { &mut cosh };
        for (t, x) in target.iter_mut().flatten().zip(term.iter().flatten()) {
            *t += x;
        }
    }
    (sinh, cosh)
}

/// `f(t+h) − f(t−h)` for `f = h1, h2, z`.
///
/// These exponents grow like `e^{2k_m t}`, so subtracting two separately
/// rounded values loses most digits. Writing `M(t±h) = M(t)e^{±Gh}`, with
/// `G = M'(0)` the generator of the transfer matrix, and
/// `e^{4k_m(t±h)} = e^{4k_m t}e^{±4k_m h}` gives the half-sum and the
/// difference of every ingredient directly, and the products are differenced
/// through `a₊b₊ − a₋b₋ = (Σa·Δb + Δa·Σb)/2`.
fn growing_differences(params: &SystemParams, co: &PropagatorCoefficients, h: f64) -> [C64; 3] {
    let s = &co.spectrum;
    let g: Mat2 = [
        [-s.big_r + s.c, -C64::new(params.k12, -params.delta12)],
        [-C64::new(params.k21, -params.delta21), -s.big_r - s.c],
    ];
    let (sh, ch) = sinh_cosh_doubled(&g, h);
    let m = co.transfer_matrix();
    let (dm, sm) = (mat_mul(&m, &sh), mat_mul(&m, &ch));
    let [[d_f1, d_l1], [d_l2, d_f2]] = dm;
    let [[s_f1, s_l1], [s_l2, s_f2]] = sm;

    let km = s.big_r.re;
    let u0 = (4.0 * km * co.t).exp();
    let (du, su) = (2.0 * u0 * (4.0 * km * h).sinh(), 2.0 * u0 * (4.0 * km * h).cosh());

    let norm_pair = |d: C64, s: C64| ((d * s.conj()).re, 0.5 * (s.norm_sqr() + d.norm_sqr()));
    let growth_diff = |(dq, sq): (f64, f64)| C64::new(0.5 * (du * sq + su * dq), 0.0);
    let add = |a: (f64, f64), b: (f64, f64)| (a.0 + b.0, a.1 + b.1);
    let dh1 = growth_diff(add(norm_pair(d_f2, s_f2), norm_pair(d_l2, s_l2)));
    let dh2 = growth_diff(add(norm_pair(d_f1, s_f1), norm_pair(d_l1, s_l1)));

    // P = L1 F2* + L2* F1
    let dp = 0.5 * (d_l1 * s_f2.conj() + s_l1 * d_f2.conj() + d_l2.conj() * s_f1 + s_l2.conj() * d_f1);
    let sp = 0.5 * (s_l1 * s_f2.conj() + d_l1 * d_f2.conj() + s_l2.conj() * s_f1 + d_l2.conj() * d_f1);
    let dz = -0.5 * (du * sp + su * dp);
    [dh1, dh2, dz]
}

/// Evaluates every equation of the coupled system at `t`, taking time
/// derivatives by finite differences with step `1e-6 / max_rate`
/// (central where `t` allows, one-sided second order near `t = 0`).
/// The central differences of the growing exponents `h1, h2, z, z_l` are
/// formed without cancellation, see [`growing_differences`], which lets them
/// use a step `GROWING_STEP_FACTOR` times shorter: their third derivatives
/// scale with `e^{4k_m t}`, and the truncation error would otherwise dominate
/// at late times.
pub fn ode_residuals(params: &SystemParams, t: f64) -> Result<OdeResiduals> {
    let scale = match params.max_rate() {
        m if m > 0.0 => m,
        _ => params.max_coefficient().max(1.0),
    };
    let h = 1e-6 / scale;
    let s = factorization_params(params, t)?;

    let field = |x: &FactorizationSchedule| {
        [x.h1, x.h2, x.z_l, x.z, x.n_l, x.n, x.m2, x.p2, x.m1, x.p1, x.q, x.q_l]
    };
    let d: [C64; 12] = if t > h {
        let fp = field(&aligned(params, t + h, &s)?);
        let fm = field(&aligned(params, t - h, &s)?);
        let mut d: [C64; 12] = std::array::from_fn(|i| (fp[i] - fm[i]) / (2.0 * h));
        let hg = h * GROWING_STEP_FACTOR;
        let [dh1, dh2, dz] = growing_differences(params, &compute_coefficients(params, t)?, hg);
        d[0] = dh1 / (2.0 * hg);
        d[1] = dh2 / (2.0 * hg);
        d[2] = dz.conj() / (2.0 * hg);
        d[3] = dz / (2.0 * hg);
        d
    } else {
        let f0 = field(&s);
        let f1 = field(&aligned(params, t + h, &s)?);
        let f2 = field(&aligned(params, t + 2.0 * h, &s)?);
        std::array::from_fn(|i| (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * h))
    };
    let [dh1, dh2, dz_l, dz, dn_l, dn, dm2, dp2, dm1, dp1, dq, dq_l] = d;

    let p = params;
    let i = C64::i();
    let re = |x: f64| C64::new(x, 0.0);
    let e = (s.m1 - s.m2).exp();
    let el = (s.p1 - s.p2).exp();
    let (k11, k22, k12, k21) = (re(p.k11), re(p.k22), re(p.k12), re(p.k21));
    let (d11, d22, d12, d21) = (p.delta11, p.delta22, p.delta12, p.delta21);

    let residual = [
        i * (d11 - p.omega1) - k11 - (dm1 - s.n * dq * e),
        i * (d22 - p.omega2) - k22 - (dm2 + s.n * dq * e),
        i * d12 - k12 - dq * e,
        i * d21 - k21 - (dn + s.n * (dm1 - dm2) - s.n * s.n * dq * e),
        i * (p.omega1 - d11) - k11 - (dp1 - s.n_l * dq_l * el),
        i * (p.omega2 - d22) - k22 - (dp2 + s.n_l * dq_l * el),
        -i * d12 - k12 - dq_l * el,
        -i * d21 - k21 - (dn_l + s.n_l * (dp1 - dp2) - s.n_l * s.n_l * dq_l * el),
        2.0 * k11 - (s.z * (i * d21 - k21) - s.z_l * (i * d21 + k21) - 2.0 * k11 * s.h1 + dh1),
        2.0 * k22 - (s.z_l * (i * d12 - k12) - s.z * (i * d12 + k12) - 2.0 * k22 * s.h2 + dh2),
        i * (d21 - d12) + k21 + k12
            - (s.z * (i * (p.omega1 - d11 - p.omega2 + d22) - k11 - k22) - s.h2 * (i * d21 + k21)
                + s.h1 * (i * d12 - k12)
                + dz),
        i * (d12 - d21) + k12 + k21
            - (s.z_l * (i * (p.omega2 - d22 - p.omega1 + d11) - k22 - k11) - s.h1 * (i * d12 + k12)
                + s.h2 * (i * d21 - k21)
                + dz_l),
    ];
    Ok(OdeResiduals { t, step: h, values: residual.map(|r| r.norm()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
        SystemParams {
            omega1: rng.gen_range(0.5..2.0),
            omega2: rng.gen_range(0.5..2.0),
            k11: rng.gen_range(0.01..0.1),
            k22: rng.gen_range(0.01..0.1),
            k12: rng.gen_range(-0.05..0.05),
            k21: rng.gen_range(-0.05..0.05),
            delta11: rng.gen_range(-0.05..0.05),
            delta22: rng.gen_range(-0.05..0.05),
            delta12: rng.gen_range(-0.05..0.05),
            delta21: rng.gen_range(-0.05..0.05),
        }
    }

    #[test]
    fn identity_schedule_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = factorization_params(&random_params(&mut rng), 0.0).unwrap();
        for (name, v) in s.application_order() {
            assert!(v.norm() < 1e-15, "{name} = {v}");
        }
    }

    #[test]
    fn single_damped_mode() {
        let (omega, k) = (1.4, 0.2);
        let p = SystemParams::decoupled(omega, 0.0, k, 0.0);
        let t = 2.5;
        let s = factorization_params(&p, t).unwrap();
        assert!((s.h1.re - ((2.0 * k * t).exp() - 1.0)).abs() < 1e-12);
        assert!(s.h1.im == 0.0);
        // m1 is fixed modulo 2πi
        let expected = C64::new(-k * t, -omega * t);
        assert!((unwrap_near(s.m1, expected) - expected).norm() < 1e-12);
        assert!(s.z.norm() < 1e-15 && s.q.norm() < 1e-15 && s.n.norm() < 1e-15);
    }

    #[test]
    fn conjugate_pairs_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let s = factorization_params(&random_params(&mut rng), rng.gen_range(0.0..40.0)).unwrap();
            assert_eq!(s.conjugation_defect(), 0.0);
        }
    }

    #[test]
    fn residuals_vanish_on_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let p = random_params(&mut rng);
            for &f in &[0.1, 1.0, 5.0] {
                let r = ode_residuals(&p, f / p.max_rate()).unwrap();
                assert!(r.max() < 1e-6, "{:?}", r.values);
            }
        }
    }

    #[test]
    fn residuals_near_zero_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_params(&mut rng);
        assert!(ode_residuals(&p, 0.0).unwrap().max() < 1e-6);
    }

    #[test]
    fn stable_differences_match_naive_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_params(&mut rng);
        let (t, h) = (2.0, 1e-3);
        let [dh1, dh2, dz] = growing_differences(&p, &compute_coefficients(&p, t).unwrap(), h);
        let (a, b) = (factorization_params(&p, t + h).unwrap(), factorization_params(&p, t - h).unwrap());
        assert!((dh1 - (a.h1 - b.h1)).norm() < 1e-12);
        assert!((dh2 - (a.h2 - b.h2)).norm() < 1e-12);
        assert!((dz - (a.z - b.z)).norm() < 1e-12);
    }

    #[test]
    fn vanishing_f1_is_singular() {
        // undamped equal-frequency modes with a purely imaginary exchange:
        // F1 = cos(g t) e^{−iΩt} vanishes at g t = π/2
        let g = 0.3;
        let p = SystemParams { delta12: g, delta21: g, ..SystemParams::decoupled(1.0, 1.0, 0.0, 0.0) };
        let t = std::f64::consts::FRAC_PI_2 / g;
        let co = compute_coefficients(&p, t).unwrap();
        assert!(co.f1.norm() < 1e-15);
        let exact_zero = PropagatorCoefficients { f1: C64::new(0.0, 0.0), ..co };
        assert!(matches!(FactorizationSchedule::from_coefficients(&exact_zero), Err(Error::SingularFactorization { .. })));
    }
}
