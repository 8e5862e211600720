//! Exact-match ABC for a Strauss process: profile the radius, run a pilot with the
//! sufficient summaries `(log n, sqrt K_R)`, then ABC-MCMC at tolerance zero.
//!
//! ```text
//! cargo run --release --example fit_strauss [pilot draws] [posterior draws]
//! ```

use repulsive::abc::{abc_mcmc, pilot_run, McmcConfig, PilotConfig, PriorSpec};
use repulsive::model::{ModelKind, ModelSpec};
use repulsive::pattern::{SummaryConfig, Window};
use repulsive::pseudolik::{default_r_grid, profile_radius, DEFAULT_QUAD};
use repulsive::rng::substream;
use repulsive::simulate::simulate;

fn main() -> repulsive::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let draws = args.next().flatten().unwrap_or(10_000);
    let n_keep = args.next().flatten().unwrap_or(1000);
    let seed = 2024;
    let w = Window::unit();
    let y = simulate(&ModelSpec::strauss(200.0, 0.1, 0.05), &w, &mut substream(seed, &[0]))?;

    let r_hat = profile_radius(&y, &default_r_grid(), &[0.0], DEFAULT_QUAD)?.r_hat();
    println!("data: n = {}, profiled R = {r_hat:.3}", y.n());

    let kind = ModelKind::Strauss { r: r_hat, hardcore: 0.0 };
    let prior = PriorSpec::parse(kind, &["uniform(50, 400)", "uniform(0, 1)"])?;
    let summary = SummaryConfig::strauss_sufficient(r_hat, &w)?;
    let pcfg = PilotConfig { draws, ..Default::default() };
    let pilot = pilot_run(&prior, &y, &summary, &pcfg, &mut substream(seed, &[1]))?.with_epsilon(0.0)?;

    let mcfg = McmcConfig { n_keep, ..Default::default() };
    let post = abc_mcmc(&pilot, &prior, &y, &mcfg, &mut substream(seed, &[2]))?;
    println!("acceptance rate {:.3}, capped iterations {}", post.acceptance_rate, post.cap_events);
    println!("{:<6} {:>10} {:>10} {:>22}", "", "Mean", "Stdev", "95% Int");
    for s in post.summary() {
        println!("{:<6} {:>10.3} {:>10.3}   ({:>8.3}, {:>8.3})", s.name, s.mean, s.sd, s.q025, s.q975);
    }
    Ok(())
}
