//! Compares four fitted models by mean ranked probability score of quadrat counts.
//! Fits use rejection ABC straight from the pilot table to keep the run short.
//!
//! ```text
//! cargo run --release --example rps_comparison [pilot draws]
//! ```

use repulsive::abc::{abc_rejection, pilot_run, PilotConfig, PriorSpec};
use repulsive::assess::{rps_compare, RpsConfig};
use repulsive::model::{ModelKind, ModelSpec};
use repulsive::pattern::{SummaryConfig, Window};
use repulsive::rng::substream;
use repulsive::simulate::simulate;

fn main() -> repulsive::Result<()> {
    let draws = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed = 31;
    let w = Window::unit();
    let y = simulate(&ModelSpec::Hpp { lambda: 200.0 }, &w, &mut substream(seed, &[0]))?;
    println!("data: HPP(200), n = {}", y.n());

    let priors = [
        PriorSpec::parse(ModelKind::Hpp, &["gamma(400, 2)"])?,
        PriorSpec::parse(ModelKind::Strauss { r: 0.03, hardcore: 0.0 }, &["uniform(100, 600)", "beta(1, 6)"])?,
        PriorSpec::parse(ModelKind::DppGauss, &["gamma(400, 2)", "beta(6, 1) * sigma_max"])?,
        PriorSpec::parse(ModelKind::DppPowerExp { nu: 10.0 }, &["gamma(400, 2)", "beta(6, 1) * alpha_max"])?,
    ];
    let summary = SummaryConfig::equally_spaced(4, 0.04, &w)?;
    let pcfg = PilotConfig { draws, p_star: 0.1, ..Default::default() };
    let fits = priors
        .iter()
        .enumerate()
        .map(|(i, prior)| {
            let pilot = pilot_run(prior, &y, &summary, &pcfg, &mut substream(seed, &[1, i as u64]))?;
            abc_rejection(&pilot, prior)
        })
        .collect::<repulsive::Result<Vec<_>>>()?;

    let cfg = RpsConfig { predictive: 50, ..Default::default() };
    let scores = rps_compare(&y, &fits, &cfg, &mut substream(seed, &[2]))?;
    let best = scores.iter().map(|s| s.mean).fold(f64::INFINITY, f64::min);
    println!("{:<12} {:>8} {:>10} {:>7}", "model", "draws", "mean RPS", "ratio");
    for (fit, s) in fits.iter().zip(&scores) {
        println!("{:<12} {:>8} {:>10.4} {:>7.3}", s.kind.label(), fit.len(), s.mean, s.mean / best);
    }
    Ok(())
}
