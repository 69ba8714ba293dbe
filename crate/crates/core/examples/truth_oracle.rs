//! Compares each builtin model's closed-form truth with a brute-force Monte
//! Carlo estimate.
//!
//! ```text
//! cargo run --release -p sobol-core --example truth_oracle -- [draws] [seed]
//! ```

use sobol_core::{builtin_models, monte_carlo_truth};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let draws: usize = args.next().map_or(Ok(10_000_000), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(2024), |s| s.parse())?;

    println!("{:<36} {:>20} {:>20} {:>12} {:>8}", "model", "closed form", "monte carlo", "std error", "z");
    for model in builtin_models() {
        let Some(truth) = model.truth() else { continue };
        let mc = monte_carlo_truth(&model, draws, seed)?;
        let rows = [
            ("psi", truth.moments.psi, mc.moments.psi, mc.moment_std_errors[0]),
            ("mu", truth.moments.mu, mc.moments.mu, mc.moment_std_errors[1]),
            ("m2", truth.moments.m2, mc.moments.m2, mc.moment_std_errors[2]),
            ("S", truth.s_true, mc.s, mc.s_std_error),
        ];
        for (label, exact, estimate, se) in rows {
            let z = if se > 0.0 { (estimate - exact) / se } else { 0.0 };
            println!(
                "{:<36} {exact:>20.15} {estimate:>20.15} {se:>12.3e} {z:>8.2}",
                format!("{} {label}", model.name())
            );
        }
    }
    Ok(())
}
