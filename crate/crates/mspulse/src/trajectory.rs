//! Phase-space trajectory of the gate: F(t), G(t), the geometric phase A(t),
//! and the derivatives of F and G at the gate time.
//!
//! The propagator displaces the motional mode by the spin-dependent amounts
//! F(t), G(t), with
//!
//! ```text
//! F(t) = int_0^t f,   f(t) = -sqrt(2) eta Omega(t) cos(xi0 t),
//! G(t) = int_0^t g,   g(t) = -sqrt(2) eta Omega(t) sin(xi0 t),
//! A(t) = -int_0^t F g.
//! ```
//!
//! F and G have closed forms in the Fourier coefficients, including the
//! secular a1/b1 terms that grow linearly in t (which is why closed
//! trajectories require a1 = b1 = 0). A(t) is evaluated by adaptive
//! quadrature of the closed-form integrand.

use std::io::Write;

use crate::error::{Error, Result};
use crate::pulse::{FourierPulse, PhysicalParams};
use crate::quad;

/// One sample of the trajectory: displacements and accumulated phase at `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub f: f64,
    pub g: f64,
    pub a: f64,
}

/// The integrand f(t) = -sqrt(2) eta Omega(t) cos(xi0 t).
pub fn f_integrand(pulse: &FourierPulse, params: &PhysicalParams, t: f64) -> f64 {
    -2.0f64.sqrt() * params.eta * pulse.envelope(params, t) * (params.xi0 * t).cos()
}

/// The integrand g(t) = -sqrt(2) eta Omega(t) sin(xi0 t).
pub fn g_integrand(pulse: &FourierPulse, params: &PhysicalParams, t: f64) -> f64 {
    -2.0f64.sqrt() * params.eta * pulse.envelope(params, t) * (params.xi0 * t).sin()
}

/// Closed-form F(t), valid for any coefficients (secular a1, b1 included).
pub fn f_closed(pulse: &FourierPulse, params: &PhysicalParams, t: f64) -> f64 {
    let xi0 = params.xi0;
    let u = xi0 * t;
    let mut sum = pulse.a0() * u.sin();
    let a1 = pulse.coeff_a(1);
    if a1 != 0.0 {
        sum += a1 * (0.5 * (2.0 * u).sin() + u);
    }
    let b1 = pulse.coeff_b(1);
    if b1 != 0.0 {
        sum += b1 * 0.5 * (1.0 - (2.0 * u).cos());
    }
    for n in 2..=pulse.truncation_order() {
        let (np, nm) = ((n + 1) as f64, (n - 1) as f64);
        let an = pulse.coeff_a(n);
        if an != 0.0 {
            sum += an * ((np * u).sin() / np + (nm * u).sin() / nm);
        }
        let bn = pulse.coeff_b(n);
        if bn != 0.0 {
            sum += bn * ((1.0 - (np * u).cos()) / np + (1.0 - (nm * u).cos()) / nm);
        }
    }
    -params.eta / (2.0f64.sqrt() * xi0) * sum
}

/// Closed-form G(t).
pub fn g_closed(pulse: &FourierPulse, params: &PhysicalParams, t: f64) -> f64 {
    let xi0 = params.xi0;
    let u = xi0 * t;
    let mut sum = pulse.a0() * (1.0 - u.cos());
    let a1 = pulse.coeff_a(1);
    if a1 != 0.0 {
        sum += a1 * 0.5 * (1.0 - (2.0 * u).cos());
    }
    let b1 = pulse.coeff_b(1);
    if b1 != 0.0 {
        sum += b1 * (u - 0.5 * (2.0 * u).sin());
    }
    for n in 2..=pulse.truncation_order() {
        let (np, nm) = ((n + 1) as f64, (n - 1) as f64);
        let an = pulse.coeff_a(n);
        if an != 0.0 {
            sum += an * ((1.0 - (np * u).cos()) / np - (1.0 - (nm * u).cos()) / nm);
        }
        let bn = pulse.coeff_b(n);
        if bn != 0.0 {
            sum += bn * ((nm * u).sin() / nm - (np * u).sin() / np);
        }
    }
    -params.eta / (2.0f64.sqrt() * xi0) * sum
}

/// Geometric phase A(t) = -int_0^t F g by adaptive quadrature, with the
/// closed form F under the integral.
pub fn a_numeric(pulse: &FourierPulse, params: &PhysicalParams, t: f64) -> Result<f64> {
    a_increment(pulse, params, 0.0, t)
}

/// Phase accumulated over [t0, t1]; signed, so t1 < t0 is allowed.
pub fn a_increment(
    pulse: &FourierPulse,
    params: &PhysicalParams,
    t0: f64,
    t1: f64,
) -> Result<f64> {
    quad::integrate(
        |s| -f_closed(pulse, params, s) * g_integrand(pulse, params, s),
        t0,
        t1,
        1e-12,
    )
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

/// i-th derivative of F at the gate time T (i >= 1):
///
/// odd i:  `(-1)^{(i+1)/2} sqrt(2) eta xi0^{i-1}
///           [a0/2 + sum_n a_n sum_{l} C(i-1, 2l) n^{i-1-2l}]`,
/// even i: `(-1)^{i/2} sqrt(2) eta xi0^{i-1}
///           sum_n b_n sum_{l} C(i-1, 2l) n^{i-1-2l}`.
pub fn derivative_f_at_gate_time(
    pulse: &FourierPulse,
    params: &PhysicalParams,
    i: usize,
) -> f64 {
    assert!(i >= 1, "derivative order must be >= 1");
    let scale = 2.0f64.sqrt() * params.eta * params.xi0.powi(i as i32 - 1);
    if i % 2 == 1 {
        let sign = if ((i + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let mut sum = 0.5 * pulse.a0();
        for n in 1..=pulse.truncation_order() {
            let an = pulse.coeff_a(n);
            if an == 0.0 {
                continue;
            }
            let inner: f64 = (0..=(i - 1) / 2)
                .map(|l| binom(i - 1, 2 * l) * (n as f64).powi((i - 1 - 2 * l) as i32))
                .sum();
            sum += an * inner;
        }
        sign * scale * sum
    } else {
        let sign = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let mut sum = 0.0;
        for n in 1..=pulse.truncation_order() {
            let bn = pulse.coeff_b(n);
            if bn == 0.0 {
                continue;
            }
            let inner: f64 = (0..=i / 2 - 1)
                .map(|l| binom(i - 1, 2 * l) * (n as f64).powi((i - 1 - 2 * l) as i32))
                .sum();
            sum += bn * inner;
        }
        sign * scale * sum
    }
}

/// i-th derivative of G at the gate time T (i >= 1):
///
/// even i: `(-1)^{i/2} sqrt(2) eta xi0^{i-1}
///           [a0/2 + sum_n a_n sum_{l} C(i-1, 2l+1) n^{i-2-2l}]`,
/// odd i:  `(-1)^{(i-1)/2} sqrt(2) eta xi0^{i-1}
///           sum_n b_n sum_{l} C(i-1, 2l+1) n^{i-2-2l}`.
///
/// For i = 1 the sum is empty: G'(T) = 0 for every pulse.
pub fn derivative_g_at_gate_time(
    pulse: &FourierPulse,
    params: &PhysicalParams,
    i: usize,
) -> f64 {
    assert!(i >= 1, "derivative order must be >= 1");
    let scale = 2.0f64.sqrt() * params.eta * params.xi0.powi(i as i32 - 1);
    if i % 2 == 0 {
        let sign = if (i / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let mut sum = 0.5 * pulse.a0();
        for n in 1..=pulse.truncation_order() {
            let an = pulse.coeff_a(n);
            if an == 0.0 {
                continue;
            }
            let inner: f64 = (0..=(i - 2) / 2)
                .map(|l| binom(i - 1, 2 * l + 1) * (n as f64).powi((i - 2 - 2 * l) as i32))
                .sum();
            sum += an * inner;
        }
        sign * scale * sum
    } else {
        if i == 1 {
            return 0.0;
        }
        let sign = if ((i - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let mut sum = 0.0;
        for n in 1..=pulse.truncation_order() {
            let bn = pulse.coeff_b(n);
            if bn == 0.0 {
                continue;
            }
            let inner: f64 = (0..=(i - 3) / 2)
                .map(|l| binom(i - 1, 2 * l + 1) * (n as f64).powi((i - 2 - 2 * l) as i32))
                .sum();
            sum += bn * inner;
        }
        sign * scale * sum
    }
}

/// Sample (F, G, A) on an ascending time grid; A accumulates by quadrature
/// between consecutive grid points.
pub fn sample_trajectory(
    pulse: &FourierPulse,
    params: &PhysicalParams,
    t_grid: &[f64],
) -> Result<Vec<TrajectoryPoint>> {
    if t_grid.is_empty() {
        return Err(Error::config("time grid must be nonempty"));
    }
    if t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("time grid must be ascending with t0 >= 0"));
    }
    let mut points = Vec::with_capacity(t_grid.len());
    let mut a_acc = a_increment(pulse, params, 0.0, t_grid[0])?;
    points.push(TrajectoryPoint {
        t: t_grid[0],
        f: f_closed(pulse, params, t_grid[0]),
        g: g_closed(pulse, params, t_grid[0]),
        a: a_acc,
    });
    for w in t_grid.windows(2) {
        a_acc += a_increment(pulse, params, w[0], w[1])?;
        points.push(TrajectoryPoint {
            t: w[1],
            f: f_closed(pulse, params, w[1]),
            g: g_closed(pulse, params, w[1]),
            a: a_acc,
        });
    }
    Ok(points)
}

/// Write a sampled trajectory as CSV with columns `t,G,negF,A`.
pub fn write_trajectory_csv<W: Write>(points: &[TrajectoryPoint], mut out: W) -> Result<()> {
    writeln!(out, "t,G,negF,A")?;
    for p in points {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", p.t, p.g, -p.f, p.a)?;
    }
    Ok(())
}
