//! Prior-predictive Monte Carlo tests on close-pair counts and ranked probability
//! scores for comparing fitted models.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abc::{posterior_predictive, quantile, PosteriorSamples, PriorSpec};
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::pattern::{close_pair_counts, count_in_region, PointPattern, Window};
use crate::rng::substream;
use crate::simulate::{simulate_with, SimControls};

pub const MIN_SIMULATIONS: usize = 19;

/// Two-sided rank p-value `2 min(p_lo, p_hi)` capped at 1, with
/// `p_lo = (1 + #{sim ≤ obs}) / (U + 1)` and `p_hi = (1 + #{sim ≥ obs}) / (U + 1)`.
pub fn mc_p_value(observed: u64, simulated: &[u64]) -> f64 {
    let u = simulated.len() as f64;
    let lo = simulated.iter().filter(|&&s| s <= observed).count() as f64;
    let hi = simulated.iter().filter(|&&s| s >= observed).count() as f64;
    (2.0 * ((1.0 + lo) / (u + 1.0)).min((1.0 + hi) / (u + 1.0))).min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McTestResult {
    pub radii: Vec<f64>,
    pub p_values: Vec<f64>,
    pub simulations: usize,
    pub observed: Vec<u64>,
    /// 2.5%, 50% and 97.5% quantiles of the simulated counts per radius.
    pub simulated_quantiles: Vec<[f64; 3]>,
}

/// Prior-predictive test of `s_r(y)` at every radius using `U` simulated patterns.
pub fn mc_test<R: Rng + ?Sized>(
    y_obs: &PointPattern,
    prior: &PriorSpec,
    radii: &[f64],
    simulations: usize,
    sim: &SimControls,
    rng: &mut R,
) -> Result<McTestResult> {
    if simulations < MIN_SIMULATIONS {
        return Err(Error::InvalidArgument(format!("Monte Carlo test needs at least {MIN_SIMULATIONS} simulations")));
    }
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("radii must be positive and strictly increasing".into()));
    }
    let kind: ModelKind = *prior.kind();
    let w = *y_obs.window();
    let seed = rng.next_u64();
    let simulated: Vec<Vec<u64>> = (0..simulations)
        .into_par_iter()
        .map(|u| {
            let mut r = substream(seed, &[u as u64]);
            let spec = kind.with_params(&prior.sample(&mut r)?)?;
            let x = simulate_with(&spec, &w, &mut r, sim)?;
            Ok(close_pair_counts(&x, radii))
        })
        .collect::<Result<_>>()?;
    let observed = close_pair_counts(y_obs, radii);
    let mut p_values = Vec::with_capacity(radii.len());
    let mut simulated_quantiles = Vec::with_capacity(radii.len());
    for (k, &obs) in observed.iter().enumerate() {
        let column: Vec<u64> = simulated.iter().map(|s| s[k]).collect();
        p_values.push(mc_p_value(obs, &column));
        let as_f: Vec<f64> = column.iter().map(|&c| c as f64).collect();
        simulated_quantiles.push([quantile(&as_f, 0.025), quantile(&as_f, 0.5), quantile(&as_f, 0.975)]);
    }
    Ok(McTestResult { radii: radii.to_vec(), p_values, simulations, observed, simulated_quantiles })
}

/// Ranked probability score of a predictive count sample against an observed count:
/// `(1/T) Σ|N_t - N_obs| - (1/2T²) Σ_t Σ_t' |N_t - N_t'|`.
pub fn rps_single(predictive: &[u64], observed: u64) -> Result<f64> {
    if predictive.is_empty() {
        return Err(Error::InvalidArgument("ranked probability score needs at least one predictive draw".into()));
    }
    let t = predictive.len();
    let first: u128 = predictive.iter().map(|&n| n.abs_diff(observed) as u128).sum();
    let mut sorted = predictive.to_vec();
    sorted.sort_unstable();
    // Σ_i Σ_j |x_i - x_j| = 2 Σ_k x_(k) (2k - T + 1) over sorted values, k from 0
    let mut pair: i128 = 0;
    for (k, &x) in sorted.iter().enumerate() {
        pair += x as i128 * (2 * k as i128 - t as i128 + 1);
    }
    let pair = 2 * pair;
    let tf = t as f64;
    Ok(first as f64 / tf - pair as f64 / (2.0 * tf * tf))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpsConfig {
    /// Number of regions `J`.
    pub regions: usize,
    /// Region areas are `q |D|` with `q ~ U(0, q_max)`.
    pub q_max: f64,
    /// Posterior predictive patterns per model.
    pub predictive: usize,
    pub sim: SimControls,
}

impl Default for RpsConfig {
    fn default() -> Self {
        Self { regions: 1000, q_max: 0.1, predictive: 100, sim: SimControls::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpsResult {
    pub kind: ModelKind,
    pub regions: Vec<Window>,
    pub per_region: Vec<f64>,
    pub mean: f64,
    pub q_max: f64,
    pub predictive: usize,
}

/// Random square regions of area `q|D|`, `q ~ U(0, q_max)`, placed uniformly among
/// the positions where they fit inside `w`.
pub fn random_regions<R: Rng + ?Sized>(w: &Window, count: usize, q_max: f64, rng: &mut R) -> Result<Vec<Window>> {
    if !(q_max > 0.0) || (q_max * w.area()).sqrt() > w.min_side() {
        return Err(Error::InvalidArgument(format!("squares of area {q_max}|D| do not fit in the window")));
    }
    (0..count)
        .map(|_| {
            let q: f64 = rng.random::<f64>() * q_max;
            let side = (q * w.area()).sqrt().max(1e-9 * w.min_side());
            let x0 = w.x_min() + rng.random::<f64>() * (w.width() - side);
            let y0 = w.y_min() + rng.random::<f64>() * (w.height() - side);
            Window::new(x0, (x0 + side).min(w.x_max()), y0, (y0 + side).min(w.y_max()))
        })
        .collect()
}

/// In-sample ranked probability score of each fitted model over shared random regions.
///
/// All models see the same regions, and each model's predictive patterns are drawn
/// from the same seed, so differences reflect the fits rather than sampling noise.
pub fn rps_compare<R: Rng + ?Sized>(
    y_obs: &PointPattern,
    fits: &[PosteriorSamples],
    cfg: &RpsConfig,
    rng: &mut R,
) -> Result<Vec<RpsResult>> {
    if cfg.predictive == 0 {
        return Err(Error::InvalidArgument("rps needs at least one predictive pattern".into()));
    }
    let w = *y_obs.window();
    let regions = random_regions(&w, cfg.regions, cfg.q_max, rng)?;
    let observed: Vec<u64> = regions.iter().map(|b| count_in_region(y_obs, b).map(|c| c as u64)).collect::<Result<_>>()?;
    let predictive_seed = rng.next_u64();
    fits.iter()
        .map(|fit| {
            let patterns = posterior_predictive(fit, &w, cfg.predictive, &cfg.sim, &mut substream(predictive_seed, &[]))?;
            let per_region = regions
                .par_iter()
                .zip(&observed)
                .map(|(b, &obs)| {
                    let counts: Vec<u64> =
                        patterns.iter().map(|p| count_in_region(p, b).map(|c| c as u64)).collect::<Result<_>>()?;
                    rps_single(&counts, obs)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = per_region.iter().sum::<f64>() / per_region.len().max(1) as f64;
            Ok(RpsResult { kind: fit.kind, regions: regions.clone(), per_region, mean, q_max: cfg.q_max, predictive: cfg.predictive })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;
    use approx::assert_relative_eq;

    /// Direct double sum.
    fn rps_naive(pred: &[u64], obs: u64) -> f64 {
        let t = pred.len() as f64;
        let a: f64 = pred.iter().map(|&n| (n as f64 - obs as f64).abs()).sum::<f64>() / t;
        let b: f64 = pred.iter().flat_map(|&x| pred.iter().map(move |&y| (x as f64 - y as f64).abs())).sum();
        a - b / (2.0 * t * t)
    }

    #[test]
    fn rps_hand_values() {
        assert_eq!(rps_single(&[4, 4, 4], 4).unwrap(), 0.0);
        assert_relative_eq!(rps_single(&[0, 2], 1).unwrap(), 0.5);
        assert_relative_eq!(rps_single(&[5, 5, 5], 7).unwrap(), 2.0);
        assert!(rps_single(&[], 3).is_err());
    }

    #[test]
    fn rps_matches_naive_sum() {
        let mut rng = from_seed(4);
        for _ in 0..50 {
            let t = rng.random_range(1..40);
            let pred: Vec<u64> = (0..t).map(|_| rng.random_range(0..30)).collect();
            let obs = rng.random_range(0..30);
            assert_relative_eq!(rps_single(&pred, obs).unwrap(), rps_naive(&pred, obs), epsilon = 1e-9);
        }
    }

    #[test]
    fn p_value_extremes() {
        let sims: Vec<u64> = (0..999).map(|i| 10 + i % 7).collect();
        assert_relative_eq!(mc_p_value(0, &sims), 0.002);
        assert_relative_eq!(mc_p_value(100, &sims), 0.002);
        assert_eq!(mc_p_value(5, &[5; 999]), 1.0);
        // U = 19, observation in the middle of the simulated values
        let nineteen: Vec<u64> = (0..19).collect();
        assert!(mc_p_value(9, &nineteen) > 0.09);
    }

    #[test]
    fn p_value_permutation_invariant() {
        let mut sims: Vec<u64> = (0..99).map(|i| (i * 37 % 101) as u64).collect();
        let a = mc_p_value(40, &sims);
        sims.reverse();
        assert_eq!(a, mc_p_value(40, &sims));
    }

    #[test]
    fn regions_fit_inside() {
        let w = Window::new(0.0, 2.0, 0.0, 1.0).unwrap();
        let regions = random_regions(&w, 500, 0.1, &mut from_seed(2)).unwrap();
        for b in &regions {
            assert!(w.contains_window(b));
            assert!(b.area() <= 0.1 * w.area() + 1e-12);
        }
        assert!(random_regions(&Window::unit(), 1, 1.5, &mut from_seed(1)).is_err());
    }

    #[test]
    fn mc_test_rejects_few_simulations() {
        let y = PointPattern::empty(Window::unit());
        let prior = PriorSpec::parse(ModelKind::Hpp, &["uniform(50,150)"]).unwrap();
        assert!(mc_test(&y, &prior, &[0.05], 18, &SimControls::default(), &mut from_seed(1)).is_err());
    }

    fn point_mass(kind: ModelKind, theta: Vec<f64>) -> PosteriorSamples {
        PosteriorSamples {
            kind,
            param_names: kind.param_names().iter().map(|s| s.to_string()).collect(),
            draws: vec![theta],
            sim_counts: vec![1],
            n_points: vec![None],
            acceptance_rate: 1.0,
            cap_events: 0,
            epsilon: 0.0,
            seed: 0,
            prior: vec![],
        }
    }

    #[test]
    fn identical_fits_score_identically() {
        let w = Window::unit();
        let y = crate::simulate::simulate_hpp(100.0, &w, &mut from_seed(1)).unwrap();
        let fit = point_mass(ModelKind::Hpp, vec![100.0]);
        let cfg = RpsConfig { regions: 200, predictive: 20, ..Default::default() };
        let res = rps_compare(&y, &[fit.clone(), fit], &cfg, &mut from_seed(2)).unwrap();
        assert_eq!(res[0].mean, res[1].mean);
        assert!(res[0].per_region.iter().all(|&v| v >= 0.0));
        let again = rps_compare(&y, &[point_mass(ModelKind::Hpp, vec![100.0])], &cfg, &mut from_seed(2)).unwrap();
        assert_eq!(again[0].per_region, res[0].per_region);
    }
}
