//! Phase-space trajectories and derivative nulling: an optimized pulse not
//! only returns to the origin at the gate time but arrives with vanishing
//! velocity and acceleration, which is what flattens the timing-error
//! response.
//!
//! Run with: cargo run --release --example trajectory_closure

use std::f64::consts::TAU;

use mspulse::constraints::verify_order;
use mspulse::optimizer::optimize_pulse;
use mspulse::trajectory::{f_closed, g_closed, sample_trajectory};
use mspulse::{FourierPulse, PhysicalParams};

fn main() -> mspulse::Result<()> {
    let params = PhysicalParams::new(0.1, TAU)?;
    let t_gate = params.gate_time;

    // Stop 5% short of the gate time: the MS trajectory is still far from
    // the origin, the constrained pulse has almost closed already.
    let grid: Vec<f64> = (0..=200).map(|k| 0.95 * t_gate * k as f64 / 200.0).collect();
    let ms = FourierPulse::ms_baseline().rescale_to_target_phase(&params)?;
    let am = optimize_pulse(5, 1, &params)?.pulse;
    for (name, pulse) in [("MS baseline", &ms), ("1 LC, N=5", &am)] {
        let end = sample_trajectory(pulse, &params, &grid)?.pop().unwrap();
        println!(
            "{name}: residual displacement at 0.95 T = {:.4e}",
            (end.f * end.f + end.g * end.g).sqrt()
        );
    }

    // Exact closure and derivative nulling at T itself.
    println!(
        "1 LC, N=5 at T: F = {:.2e}, G = {:.2e}",
        f_closed(&am, &params, t_gate),
        g_closed(&am, &params, t_gate)
    );
    let report = verify_order(&am, &params, 1)?;
    for (i, rf, rg) in &report.residuals {
        println!("  |F^({i})(T)| = {rf:.2e}, |G^({i})(T)| = {rg:.2e}");
    }
    println!(
        "derivatives through order {} null: {} (max residual {:.2e})",
        report.k, report.pass, report.max_residual
    );
    Ok(())
}
