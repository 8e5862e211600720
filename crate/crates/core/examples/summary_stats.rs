//! Second-order summaries of a pattern, the ABC feature vector against a second
//! pattern, and a round trip through the pattern CSV format.
//!
//! ```text
//! cargo run --release --example summary_stats
//! ```

use repulsive::abc::features;
use repulsive::io::{read_pattern, write_pattern};
use repulsive::model::ModelSpec;
use repulsive::pattern::{close_pair_counts, k_curve, KEstimator, SummaryConfig, Window};
use repulsive::rng::from_seed;
use repulsive::simulate::simulate;

fn main() -> repulsive::Result<()> {
    let w = Window::unit();
    let observed = simulate(&ModelSpec::strauss(200.0, 0.1, 0.05), &w, &mut from_seed(3))?;
    let candidate = simulate(&ModelSpec::Hpp { lambda: 90.0 }, &w, &mut from_seed(4))?;

    let cfg = SummaryConfig::equally_spaced(5, 0.1, &w)?;
    let k_trans = k_curve(&observed, cfg.r_grid(), KEstimator::Translation)?;
    let k_plain = k_curve(&observed, cfg.r_grid(), KEstimator::Uncorrected)?;
    let pairs = close_pair_counts(&observed, cfg.r_grid());
    println!("observed Strauss pattern, n = {}", observed.n());
    println!("{:>6} {:>10} {:>12} {:>12} {:>10}", "r", "pi r^2", "K translat.", "K uncorr.", "pairs");
    for (k, &r) in cfg.r_grid().iter().enumerate() {
        println!("{r:>6.3} {:>10.5} {:>12.5} {:>12.5} {:>10}", std::f64::consts::PI * r * r, k_trans[k], k_plain[k], pairs[k]);
    }

    let eta = features(&candidate, &observed, &cfg)?;
    println!("\nfeatures of an HPP pattern (n = {}) against the observation:", candidate.n());
    println!("  log n ratio        {:+.4}", eta[0]);
    for (k, v) in eta[1..].iter().enumerate() {
        println!("  (dsqrt K)^2 r={:.2} {v:.3e}", cfg.r_grid()[k]);
    }

    let dir = std::env::temp_dir().join("repulsive-summary-stats");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("observed.csv");
    write_pattern(&path, &observed)?;
    let back = read_pattern(&path)?;
    println!("\nwrote {} and read back {} identical points", path.display(), back.n());
    assert_eq!(back, observed);
    Ok(())
}
