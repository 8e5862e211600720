//! Profiles the Strauss pseudo-likelihood over interaction and hard-core radii.
//!
//! ```text
//! cargo run --release --example profile_radius [seed]
//! ```

use repulsive::model::ModelSpec;
use repulsive::pattern::Window;
use repulsive::pseudolik::{default_h_grid, default_r_grid, profile_radius, DEFAULT_QUAD};
use repulsive::rng::from_seed;
use repulsive::simulate::simulate;

fn main() -> repulsive::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let y = simulate(&ModelSpec::strauss(200.0, 0.1, 0.05), &Window::unit(), &mut from_seed(seed))?;
    let res = profile_radius(&y, &default_r_grid(), &default_h_grid(), DEFAULT_QUAD)?;

    let mut ranked: Vec<_> = res.entries.iter().filter(|e| e.h == 0.0).collect();
    ranked.sort_by(|a, b| b.log_pl.total_cmp(&a.log_pl));
    println!("Strauss(200, 0.1, R = 0.05) data with n = {}", y.n());
    println!("{:>6} {:>6} {:>9} {:>8} {:>11}", "R", "h", "beta", "gamma", "log PL");
    for e in ranked.iter().take(8) {
        println!("{:>6.3} {:>6.3} {:>9.2} {:>8.4} {:>11.3}", e.r, e.h, e.beta, e.gamma, e.log_pl);
    }
    let best = res.best_entry();
    println!("\nbest over all (R, h): R = {:.3}, h = {:.3}, beta = {:.1}, gamma = {:.3}", best.r, best.h, best.beta, best.gamma);
    Ok(())
}
