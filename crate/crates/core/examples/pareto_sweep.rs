//! Regret against estimation error as the exploration exponent varies.
//!
//! `cargo run --release --example pareto_sweep -- ucb`

use mixcomb::harness::{run_experiment, Algo, ExperimentConfig, FamilySpec};

fn main() -> mixcomb::Result<()> {
    let algo: Algo = std::env::args().nth(1).as_deref().unwrap_or("ucb").parse()?;
    let family = match algo {
        Algo::Kl => FamilySpec::UniformMatroid { d: 8, m: 3 },
        Algo::Ucb => FamilySpec::UniformMatroid { d: 9, m: 4 },
    };
    let cfg = ExperimentConfig::new(algo, family, 4096, vec![0.0, 0.25, 0.5, 0.75, 1.0], 20, 1);
    let out = run_experiment(&cfg)?;
    println!("{:>6} {:>10} {:>10} {:>10}", "alpha", "regret", "max_err", "product");
    for block in &out.summary {
        let last = block.last();
        println!(
            "{:>6.2} {:>10.1} {:>10.4} {:>10.3}",
            block.alpha, last.cum_regret.mean, last.max_err_m.mean, last.pareto_product.mean
        );
    }
    Ok(())
}
