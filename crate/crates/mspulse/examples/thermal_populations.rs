//! Spin populations through the gate for a thermal motional mode
//! (nbar = 2): the amplitude-modulated pulse produces a flatter population
//! curve around the gate time than the constant MS drive.
//!
//! Run with: cargo run --release --example thermal_populations

use std::f64::consts::TAU;

use mspulse::gate::{max_population_slope, populations_vs_time, MotionalState};
use mspulse::optimizer::optimize_pulse;
use mspulse::{FourierPulse, PhysicalParams};

fn main() -> mspulse::Result<()> {
    let params = PhysicalParams::new(0.1, TAU)?;
    let grid: Vec<f64> = (0..=60)
        .map(|k| 1.2 * params.gate_time * k as f64 / 60.0)
        .collect();
    let motional = MotionalState::Thermal(2.0);

    let ms = FourierPulse::ms_baseline().rescale_to_target_phase(&params)?;
    let am = optimize_pulse(5, 1, &params)?.pulse;

    for (name, pulse) in [("MS baseline", &ms), ("AM N=5", &am)] {
        let pops = populations_vs_time(pulse, &params, motional, &grid)?;
        let flatness = max_population_slope(&pops, &params, 0.05);
        let at_gate = pops
            .iter()
            .min_by(|p, q| {
                (p.0 - params.gate_time)
                    .abs()
                    .total_cmp(&(q.0 - params.gate_time).abs())
            })
            .unwrap();
        println!("{name}:");
        println!(
            "  P_gg(T) = {:.6}, P_ee(T) = {:.6}",
            at_gate.1, at_gate.2
        );
        println!(
            "  max |dP_gg/dt| within 5% of T: {:.4e} / T",
            flatness * params.gate_time
        );
    }
    Ok(())
}
