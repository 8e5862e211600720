//! Prior-predictive Monte Carlo tests of close-pair counts for a Poisson and a
//! Strauss prior on strongly repulsive data.
//!
//! ```text
//! cargo run --release --example model_check [simulations]
//! ```

use repulsive::abc::PriorSpec;
use repulsive::assess::mc_test;
use repulsive::model::{ModelKind, ModelSpec};
use repulsive::pattern::Window;
use repulsive::rng::substream;
use repulsive::simulate::{simulate, SimControls};

fn main() -> repulsive::Result<()> {
    let sims = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(199);
    let seed = 5;
    let w = Window::unit();
    let y = simulate(&ModelSpec::strauss(1000.0, 0.05, 0.02), &w, &mut substream(seed, &[0]))?;
    let radii = [0.01, 0.02, 0.03, 0.04];
    println!("data: Strauss(1000, 0.05, 0.02), n = {}; {sims} simulations per test", y.n());

    let candidates = [
        ("HPP", PriorSpec::parse(ModelKind::Hpp, &["gamma(1000, 2)"])?),
        ("Strauss", PriorSpec::parse(ModelKind::Strauss { r: 0.02, hardcore: 0.0 }, &["uniform(350, 1200)", "beta(1, 6)"])?),
    ];
    println!("{:<8} {}", "prior", radii.map(|r| format!("{:>8}", format!("r={r}"))).join(""));
    for (i, (name, prior)) in candidates.iter().enumerate() {
        let res = mc_test(&y, prior, &radii, sims, &SimControls::default(), &mut substream(seed, &[1, i as u64]))?;
        println!("{:<8} {}", name, res.p_values.iter().map(|p| format!("{p:>8.3}")).collect::<String>());
    }
    Ok(())
}
