//! Independent numerical oracles for the closed-form machinery: direct
//! quadrature for the trajectory integrals, Richardson finite differences
//! for the derivative formulas, and random-restart ascent for the
//! constrained optimum. Property tests cover scaling and Parseval-type
//! invariants.

use std::f64::consts::TAU;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mspulse::constraints::ConstraintSystem;
use mspulse::optimizer;
use mspulse::quad::integrate;
use mspulse::trajectory::{
    derivative_f_at_gate_time, derivative_g_at_gate_time, f_closed, f_integrand, g_closed,
    g_integrand,
};
use mspulse::{FourierPulse, PhysicalParams};

fn params() -> PhysicalParams {
    PhysicalParams::new(0.1, TAU).unwrap()
}

fn random_pulse(rng: &mut ChaCha8Rng, n_max: usize, closed: bool) -> FourierPulse {
    let mut a = vec![0.0; n_max];
    let mut b = vec![0.0; n_max];
    let start = if closed { 1 } else { 0 };
    for n in start..n_max {
        a[n] = rng.gen_range(-1.0..1.0);
        b[n] = rng.gen_range(-1.0..1.0);
    }
    FourierPulse::new(rng.gen_range(-1.0..1.0), a, b).unwrap()
}

/// m-th derivative by iterated central differences, Richardson-extrapolated
/// from steps h and h/2 to cancel the O(h^2) error term.
fn central_diff<F: Fn(f64) -> f64 + Copy>(f: F, m: usize, t: f64, h: f64) -> f64 {
    fn raw<F: Fn(f64) -> f64 + Copy>(f: F, m: usize, t: f64, h: f64) -> f64 {
        if m == 0 {
            f(t)
        } else {
            (raw(f, m - 1, t + h, h) - raw(f, m - 1, t - h, h)) / (2.0 * h)
        }
    }
    let d1 = raw(f, m, t, h);
    let d2 = raw(f, m, t, h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

#[test]
fn closed_forms_match_quadrature() {
    let pr = params();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..1000 {
        let n_max = 1 + (k % 12);
        let pulse = random_pulse(&mut rng, n_max, false);
        let t = rng.gen_range(0.0..1.5) * pr.gate_time;
        let f_quad = integrate(|s| f_integrand(&pulse, &pr, s), 0.0, t, 1e-12).unwrap();
        let g_quad = integrate(|s| g_integrand(&pulse, &pr, s), 0.0, t, 1e-12).unwrap();
        assert!(
            (f_closed(&pulse, &pr, t) - f_quad).abs() < 1e-10,
            "F mismatch at pulse {k}"
        );
        assert!(
            (g_closed(&pulse, &pr, t) - g_quad).abs() < 1e-10,
            "G mismatch at pulse {k}"
        );
    }
}

#[test]
fn derivative_formulas_match_finite_differences() {
    let pr = params();
    let t_gate = pr.gate_time;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for k in 0..100 {
        let n_max = 2 + (k % 9);
        // Step choice: h ~ 0.05 / (highest angular frequency) keeps both the
        // O(h^4) truncation error and the eps/h^m round-off amplification of
        // the iterated differences far below the 1e-4 relative target.
        let h = 0.05 / (n_max as f64 * pr.xi0);
        // The analytic derivative formulas assume a closed pulse.
        let pulse = random_pulse(&mut rng, n_max, true);
        for i in 1..=5usize {
            // F^(i)(T) is the (i-1)-th derivative of the F integrand.
            let fd_f = central_diff(|s| f_integrand(&pulse, &pr, s), i - 1, t_gate, h);
            let fd_g = central_diff(|s| g_integrand(&pulse, &pr, s), i - 1, t_gate, h);
            let an_f = derivative_f_at_gate_time(&pulse, &pr, i);
            let an_g = derivative_g_at_gate_time(&pulse, &pr, i);
            // relative to the derivative magnitude, floored at the eta scale
            let scale = pr.eta * pr.xi0.powi(i as i32 - 1);
            assert!(
                (an_f - fd_f).abs() < 1e-4 * scale.max(an_f.abs()),
                "F^({i}) mismatch pulse {k}: {an_f} vs {fd_f}"
            );
            assert!(
                (an_g - fd_g).abs() < 1e-4 * scale.max(an_g.abs()),
                "G^({i}) mismatch pulse {k}: {an_g} vs {fd_g}"
            );
        }
    }
}

/// Gradient ascent on the ratio |y' A' y| / (y' P' y) over the reduced
/// space, from random restarts; independent of any eigendecomposition.
fn brute_force_ratio(rp: &optimizer::ReducedProblem, rng: &mut ChaCha8Rng) -> f64 {
    let dim = rp.pprime.nrows();
    let mut best = 0.0f64;
    for _ in 0..20 {
        let mut y = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0f64..1.0));
        y /= y.norm();
        for sign in [1.0f64, -1.0] {
            let mut x = y.clone();
            let quotient = |v: &DVector<f64>| {
                sign * (v.dot(&(&rp.aprime * v))) / v.dot(&(&rp.pprime * v))
            };
            let mut q = quotient(&x);
            for _ in 0..4000 {
                // gradient of the generalized Rayleigh quotient
                let denom = x.dot(&(&rp.pprime * &x));
                let grad = (&rp.aprime * &x * sign - &rp.pprime * &x * q) * (2.0 / denom);
                let mut step = 0.5;
                let mut improved = false;
                while step > 1e-14 {
                    let cand = (&x + &grad * step).normalize();
                    let qc = quotient(&cand);
                    if qc > q + 1e-18 {
                        x = cand;
                        q = qc;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            best = best.max(q.abs());
        }
    }
    best
}

#[test]
fn rayleigh_solution_matches_random_restart_ascent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for l in 1..=2usize {
        for n in (l + 1)..=6 {
            let forms = optimizer::build_forms(n).unwrap();
            let system = ConstraintSystem::build(l, n, false).unwrap();
            let rp = optimizer::reduce(&forms, &system.nullspace_basis().unwrap(), l, n).unwrap();
            let eigen = optimizer::solve_rayleigh(&rp).unwrap().eigenvalue.abs();
            let brute = brute_force_ratio(&rp, &mut rng);
            assert!(
                (eigen - brute).abs() < 1e-6,
                "N={n} l={l}: eigen {eigen} vs brute force {brute}"
            );
        }
    }
}

#[test]
fn optimizer_beats_random_feasible_points() {
    // No feasible direction does better than the reported optimum.
    let pr = params();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for (n, l) in [(5usize, 1usize), (8, 2)] {
        let opt = optimizer::optimize_pulse(n, l, &pr).unwrap();
        let system = ConstraintSystem::build(l, n, false).unwrap();
        let basis = system.nullspace_basis().unwrap();
        for _ in 0..200 {
            let y = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0f64..1.0));
            let v = &basis * y;
            let tail: Vec<f64> = v.iter().skip(1).copied().collect();
            let pulse = FourierPulse::from_cosine_coeffs(v[0], &tail).unwrap();
            let ratio = pulse.normalized_phase().unwrap().abs() / pulse.normalized_power();
            assert!(ratio <= opt.ratio + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Power and phase are quadratic in the coefficients, so the ratio is
    /// scale-invariant.
    #[test]
    fn ratio_is_scale_invariant(
        a0 in -2.0f64..2.0,
        a2 in -2.0f64..2.0,
        a3 in 0.1f64..2.0,
        s in 0.1f64..10.0,
    ) {
        let pulse = FourierPulse::from_cosine_coeffs(a0, &[a2, a3]).unwrap();
        let scaled = pulse.scaled(s);
        prop_assert!((scaled.normalized_power() - s * s * pulse.normalized_power()).abs()
            < 1e-10 * scaled.normalized_power());
        let ratio = |p: &FourierPulse| p.normalized_phase().unwrap() / p.normalized_power();
        prop_assert!((ratio(&scaled) - ratio(&pulse)).abs() < 1e-12);
    }

    /// The quoted power quadratic form equals the mean square of the
    /// envelope over one period (Parseval).
    #[test]
    fn power_is_mean_square_envelope(
        a0 in -2.0f64..2.0,
        a1 in -1.0f64..1.0,
        b2 in -1.0f64..1.0,
        a3 in -1.0f64..1.0,
    ) {
        let pr = params();
        let pulse = FourierPulse::new(a0, vec![a1, 0.0, a3], vec![0.0, b2, 0.0]).unwrap();
        let t_gate = pr.gate_time;
        let mean_square = integrate(
            |t| pulse.envelope(&pr, t).powi(2),
            0.0,
            t_gate,
            1e-12,
        ).unwrap() / t_gate;
        prop_assert!((pulse.normalized_power() - mean_square).abs() < 1e-9);
    }

    /// Pulse JSON round-trips exactly (shortest round-trip floats).
    #[test]
    fn pulse_json_round_trip(
        a0 in -2.0f64..2.0,
        a2 in -2.0f64..2.0,
        b3 in -2.0f64..2.0,
    ) {
        let pulse = FourierPulse::new(a0, vec![0.0, a2, 0.0], vec![0.0, 0.0, b3]).unwrap();
        let json = serde_json::to_string(&pulse).unwrap();
        let back: FourierPulse = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(pulse.a0().to_bits(), back.a0().to_bits());
        for n in 1..=3 {
            prop_assert_eq!(pulse.coeff_a(n).to_bits(), back.coeff_a(n).to_bits());
            prop_assert_eq!(pulse.coeff_b(n).to_bits(), back.coeff_b(n).to_bits());
        }
    }

    /// The geometric phase accumulated to T scales with eta^2/xi0 at fixed
    /// normalized coefficients.
    #[test]
    fn phase_scales_with_eta_squared(eta in 0.02f64..0.3) {
        let pulse = FourierPulse::from_cosine_coeffs(1.0, &[0.4]).unwrap();
        let base = params();
        let pr = PhysicalParams::new(eta, TAU).unwrap();
        let a_base = mspulse::trajectory::a_numeric(&pulse, &base, base.gate_time).unwrap();
        let a_new = mspulse::trajectory::a_numeric(&pulse, &pr, pr.gate_time).unwrap();
        let expect = a_base * (eta / base.eta).powi(2);
        prop_assert!((a_new - expect).abs() < 1e-9 * expect.abs().max(1.0));
    }
}
