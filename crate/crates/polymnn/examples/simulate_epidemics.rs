//! Run discrete-time epidemic simulations and inspect their invariants.
//!
//! ```bash
//! cargo run --example simulate_epidemics
//! ```

use polymnn::rng::derive_seed;
use polymnn::sir::{generate_simulations, trajectories_csv, RateRegime};

fn main() -> polymnn::Result<()> {
    let sims = generate_simulations(RateRegime::Train, 4, 30, derive_seed(1, "demo"))?;

    for sim in &sims {
        let first = sim.trajectory.first().expect("nonempty trajectory");
        let last = sim.trajectory.last().expect("nonempty trajectory");
        let drift = sim
            .trajectory
            .iter()
            .map(|st| (st.s + st.i + st.r - 1.0).abs())
            .fold(0.0f64, f64::max);
        println!(
            "run {}: beta {:.4} gamma {:.4}  s {:.3} -> {:.3}  r {:.3} -> {:.3}  max |sum-1| {:.1e}",
            sim.id, sim.beta, sim.gamma, first.s, last.s, first.r, last.r, drift
        );
    }

    println!("\nfirst rows of the trajectory dump:");
    for line in trajectories_csv(&sims).lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
