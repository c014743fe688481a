//! Cross-validates all four variants on an imbalanced synthetic corpus.
//!
//! cargo run --release --example variant_grid -- [seeds] [mentions]

use sentilex::eval::{generate, run_experiment, ExperimentConfig, SyntheticConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let mentions: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1500);

    println!("{:<10}{:>6}{:>11}{:>11}{:>11}", "variant", "seed", "precision", "recall", "f_measure");
    for variant in Variant::ALL {
        let mut sum = [0.0; 3];
        for seed in 0..seeds {
            let corpus = generate(&SyntheticConfig { mentions, noise: 0.1, seed, ..SyntheticConfig::default() })?;
            let config = ExperimentConfig { variant, rng_seed: seed, ..ExperimentConfig::default() };
            let report = run_experiment(&config, &corpus.records, Some(&corpus.seed_lexicon))?;
            let m = report.mean;
            println!("{:<10}{:>6}{:>11.4}{:>11.4}{:>11.4}", variant.as_str(), seed, m.precision, m.recall, m.f_measure);
            sum[0] += m.precision;
            sum[1] += m.recall;
            sum[2] += m.f_measure;
        }
        let n = seeds as f64;
        println!("{:<10}{:>6}{:>11.4}{:>11.4}{:>11.4}", variant.as_str(), "mean", sum[0] / n, sum[1] / n, sum[2] / n);
    }
    Ok(())
}
