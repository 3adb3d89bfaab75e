//! Synthesize the power-optimal amplitude-modulated pulse for one (N, l)
//! and print its coefficients and optimality diagnostics.
//!
//! Run with: cargo run --release --example optimize

use std::f64::consts::TAU;

use mspulse::optimizer::optimize_pulse;
use mspulse::PhysicalParams;

fn main() -> mspulse::Result<()> {
    let params = PhysicalParams::new(0.1, TAU)?;
    let opt = optimize_pulse(10, 1, &params)?;

    println!("power-optimal pulse, N = {}, l = {}", opt.n_max, opt.l);
    println!("  phase/power ratio |A|/P : {:.12}", opt.ratio);
    println!("  power overhead          : {:.4} %", opt.power_overhead_percent);
    println!("  a0 = {:+.6e}", opt.pulse.a0());
    for n in 2..=opt.n_max {
        println!("  a{n} = {:+.6e}", opt.pulse.coeff_a(n));
    }
    println!(
        "residuals: constraint {:.2e}, eigenpair {:.2e}, phase {:.2e}",
        opt.residuals.constraint, opt.residuals.eigen, opt.residuals.phase
    );

    // Soft start: the optimal envelope rises smoothly from (nearly) zero.
    let omega0 = opt.pulse.envelope(&params, 0.0);
    let peak = (0..=400)
        .map(|k| opt.pulse.envelope(&params, params.gate_time * k as f64 / 400.0).abs())
        .fold(0.0, f64::max);
    println!("envelope: Omega(0) = {omega0:.3e}, peak |Omega| = {peak:.3e}");
    Ok(())
}
