//! Cross-check the closed-form fidelity against the exact propagator in a
//! truncated Fock space, including a thermal motional state.
//!
//! Run with: cargo run --release --example fock_oracle

use mspulse::gate::{
    fidelity_analytic, reduced_spin_state_adaptive, FockPropagator, MotionalState,
};

fn main() -> mspulse::Result<()> {
    // Exact unitarity of the materialized propagator.
    let prop = FockPropagator::new(0.3, -0.2, 0.9, 48)?;
    let u = prop.to_matrix();
    println!(
        "propagator at cutoff 48: max |U^dag U - 1| = {:.2e}",
        FockPropagator::unitarity_deviation(&u)
    );

    // Analytic fidelity vs partial trace of the propagated state.
    println!();
    println!(
        "{:>6} {:>6} {:>7} {:>5}  {:>18} {:>18} {:>9}",
        "F", "G", "A", "nbar", "analytic", "propagator", "diff"
    );
    for (f, g, a, nbar) in [
        (0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0),
        (0.2, 0.1, 1.5, 0.0),
        (0.2, 0.1, 1.5, 2.0),
        (-0.3, 0.25, 1.2, 0.5),
    ] {
        let motional = if nbar == 0.0 {
            MotionalState::Ground
        } else {
            MotionalState::Thermal(nbar)
        };
        let analytic = fidelity_analytic(f, g, a, nbar);
        let oracle = reduced_spin_state_adaptive(f, g, a, motional)?;
        println!(
            "{f:>6.2} {g:>6.2} {a:>7.3} {nbar:>5.1}  {analytic:>18.12} {:>18.12} {:>9.1e}",
            oracle.fidelity,
            (oracle.fidelity - analytic).abs()
        );
    }
    Ok(())
}
