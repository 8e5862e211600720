//! Semi-automatic ABC for a Gaussian-kernel DPP with ten K radii, lasso feature
//! screening and a tolerance at the 1% pilot percentile.
//!
//! ```text
//! cargo run --release --example fit_dpp [pilot draws] [posterior draws]
//! ```

use repulsive::abc::{abc_mcmc, pilot_run, LassoConfig, McmcConfig, PilotConfig, PriorSpec};
use repulsive::model::{ModelKind, ModelSpec};
use repulsive::pattern::{SummaryConfig, Window};
use repulsive::rng::substream;
use repulsive::simulate::simulate;

fn main() -> repulsive::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let draws = args.next().flatten().unwrap_or(10_000);
    let n_keep = args.next().flatten().unwrap_or(1000);
    let seed = 77;
    let w = Window::unit();
    let y = simulate(&ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 }, &w, &mut substream(seed, &[0]))?;
    println!("data: n = {}", y.n());

    let prior = PriorSpec::parse(ModelKind::DppGauss, &["uniform(50, 200)", "uniform(0.001, sigma_max)"])?;
    let summary = SummaryConfig::equally_spaced(10, 0.1, &w)?;
    let pcfg = PilotConfig { draws, p_star: 0.01, lasso: Some(LassoConfig::default()), ..Default::default() };
    let pilot = pilot_run(&prior, &y, &summary, &pcfg, &mut substream(seed, &[1]))?;
    println!("active features {:?}, epsilon {:.4e}", pilot.active, pilot.epsilon);

    let mcfg = McmcConfig { n_keep, ..Default::default() };
    let post = abc_mcmc(&pilot, &prior, &y, &mcfg, &mut substream(seed, &[2]))?;
    println!("acceptance rate {:.3}", post.acceptance_rate);
    println!("{:<6} {:>10} {:>10} {:>22}", "", "Mean", "Stdev", "95% Int");
    for s in post.summary() {
        println!("{:<6} {:>10.4} {:>10.4}   ({:>8.4}, {:>8.4})", s.name, s.mean, s.sd, s.q025, s.q975);
    }
    Ok(())
}
