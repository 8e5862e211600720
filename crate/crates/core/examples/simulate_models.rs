//! Draws one pattern from each supported model on the unit square and prints its
//! size, nearest-pair distance and L(r) - r at a few radii.
//!
//! ```text
//! cargo run --release --example simulate_models [seed]
//! ```

use repulsive::model::{alpha_max, ModelSpec};
use repulsive::pattern::{l_curve, SummaryConfig, Window};
use repulsive::rng::substream;
use repulsive::simulate::simulate;

fn main() -> repulsive::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let w = Window::unit();
    let grid = SummaryConfig::new(vec![0.01, 0.025, 0.05, 0.1], &w)?;
    let models = [
        ModelSpec::Hpp { lambda: 100.0 },
        ModelSpec::strauss(200.0, 0.1, 0.05),
        ModelSpec::Strauss { beta: 200.0, gamma: 0.3, r: 0.05, hardcore: 0.01 },
        ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 },
        ModelSpec::DppPowerExp { tau: 100.0, alpha: alpha_max(100.0, 10.0), nu: 10.0 },
    ];
    println!("{:<60} {:>5} {:>10}   L(r)-r at r = 0.01, 0.025, 0.05, 0.1", "model", "n", "min dist");
    for (i, m) in models.iter().enumerate() {
        let p = simulate(m, &w, &mut substream(seed, &[i as u64]))?;
        let l: Vec<String> = l_curve(&p, &grid)?.iter().map(|(_, v)| format!("{v:+.4}")).collect();
        println!(
            "{:<60} {:>5} {:>10.4}   {}",
            format!("{m:?}"),
            p.n(),
            p.min_pair_distance().unwrap_or(f64::NAN),
            l.join(" ")
        );
    }
    Ok(())
}
