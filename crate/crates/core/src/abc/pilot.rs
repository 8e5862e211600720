//! Pilot run: prior-predictive draws, the summary regression, and tolerance calibration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{features_from_summaries, summarize, PatternSummary};
use super::lasso::{lasso_select, LassoConfig, LassoSelection};
use super::prior::PriorSpec;
use super::regression::{least_squares, LinearFit};
use super::transform::transform_params;
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::pattern::{PointPattern, SummaryConfig, Window};
use crate::rng::substream;
use crate::simulate::{simulate_with, SimControls};

/// Percentile levels reported in [`PilotResult::percentiles`].
pub const PERCENTILE_LEVELS: [f64; 8] = [0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.25, 0.5];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PilotConfig {
    /// Number of prior-predictive draws `L`.
    pub draws: usize,
    /// Fraction `p*` of pilot distances that falls below the tolerance.
    pub p_star: f64,
    /// Screen features with a cross-validated lasso before the final regression.
    pub lasso: Option<LassoConfig>,
    /// With the lasso on, use the unpenalized refit (`true`) or the shrunken coefficients.
    pub use_refit: bool,
    /// Refuse runs with fewer than `50 (1 + M)` draws.
    pub enforce_min_draws: bool,
    pub sim: SimControls,
}

impl Default for PilotConfig {
    fn default() -> Self {
        Self { draws: 10_000, p_star: 0.01, lasso: None, use_refit: true, enforce_min_draws: true, sim: SimControls::default() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PilotResult {
    pub kind: ModelKind,
    pub summary: SummaryConfig,
    pub window: Window,
    /// Statistics of the observed pattern.
    pub observed: PatternSummary,
    /// Transformed parameters of each retained draw.
    pub theta: Vec<Vec<f64>>,
    pub features: Vec<Vec<f64>>,
    pub n_points: Vec<usize>,
    /// Regression used to form `θ̂ = â + b̂ η`.
    pub fit: LinearFit,
    pub lasso: Option<LassoSelection>,
    pub active: Vec<usize>,
    /// Sample variance of each component of the fitted `θ̂` over the draws.
    pub var_hat: Vec<f64>,
    /// `Ψ(θ̂_ℓ, θ̂_obs)` per retained draw.
    pub distances: Vec<f64>,
    pub percentiles: Vec<(f64, f64)>,
    pub p_star: f64,
    pub epsilon: f64,
    /// Draws discarded because the simulated pattern was empty.
    pub dropped_empty: usize,
    pub seed: u64,
}

/// Empirical `p`-quantile taken as an order statistic: the `⌈pL⌉`-th smallest value.
pub fn empirical_percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() || !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("percentile {p} of {} values is undefined", values.len())));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[k - 1])
}

/// `Σ_j (θ̂_j - θ̂_obs,j)² / var_j`.
pub fn distance(theta_hat: &[f64], theta_obs: &[f64], vars: &[f64]) -> Result<f64> {
    if theta_hat.len() != theta_obs.len() || theta_hat.len() != vars.len() {
        return Err(Error::InvalidArgument("distance arguments differ in length".into()));
    }
    if vars.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("distance variances must be positive".into()));
    }
    Ok(theta_hat.iter().zip(theta_obs).zip(vars).map(|((a, b), v)| (a - b) * (a - b) / v).sum())
}

impl PilotResult {
    /// `θ̂_obs`, which equals the intercept because `η(y, y) = 0`.
    pub fn theta_obs(&self) -> &[f64] {
        &self.fit.intercept
    }

    /// Distance of a feature vector from the observed data.
    pub fn distance_of(&self, features: &[f64]) -> f64 {
        self.fit.slope_part(features).iter().zip(&self.var_hat).map(|(d, v)| d * d / v).sum()
    }

    /// Distance of a simulated pattern's summary; `None` when features are undefined.
    pub fn distance_of_summary(&self, s: &PatternSummary) -> Option<f64> {
        features_from_summaries(s, &self.observed, &self.summary).ok().map(|f| self.distance_of(&f))
    }

    pub fn percentile(&self, p: f64) -> Result<f64> {
        empirical_percentile(&self.distances, p)
    }

    /// Same pilot with the tolerance recalibrated to another percentile.
    pub fn with_percentile(&self, p: f64) -> Result<Self> {
        let mut out = self.clone();
        out.epsilon = self.percentile(p)?;
        out.p_star = p;
        Ok(out)
    }

    /// Same pilot with an explicit tolerance (e.g. `0` for exact matching).
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {epsilon}")));
        }
        let mut out = self.clone();
        out.epsilon = epsilon;
        out.p_star = f64::NAN;
        Ok(out)
    }

    /// Acceptance rule: strictly below the tolerance, or an exact match.
    pub fn accepts(&self, psi: f64) -> bool {
        psi < self.epsilon || psi == 0.0
    }
}

/// Prior-predictive draws with their pattern summaries. The table does not depend
/// on the observed data, so one table can serve several observed patterns on the
/// same window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub kind: ModelKind,
    pub summary: SummaryConfig,
    pub window: Window,
    /// Transformed parameters of each draw.
    pub theta: Vec<Vec<f64>>,
    pub summaries: Vec<PatternSummary>,
    pub seed: u64,
}

/// Simulates `draws` prior-predictive patterns on `w` in parallel and summarizes them.
pub fn reference_table<R: Rng + ?Sized>(
    prior: &PriorSpec,
    w: &Window,
    cfg: &SummaryConfig,
    draws: usize,
    sim: &SimControls,
    rng: &mut R,
) -> Result<ReferenceTable> {
    let kind = *prior.kind();
    let seed = rng.next_u64();
    let (theta, summaries): (Vec<Vec<f64>>, Vec<PatternSummary>) = (0..draws)
        .into_par_iter()
        .map(|l| {
            let mut r = substream(seed, &[l as u64]);
            let natural = prior.sample(&mut r)?;
            let spec = kind.with_params(&natural)?;
            let x = simulate_with(&spec, w, &mut r, sim)?;
            Ok((transform_params(&spec)?, summarize(&x, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(ReferenceTable { kind, summary: cfg.clone(), window: *w, theta, summaries, seed })
}

fn check_pilot_args(draws: usize, cfg: &SummaryConfig, pcfg: &PilotConfig, y_obs: &PointPattern) -> Result<()> {
    let min_draws = 50 * (1 + cfg.m());
    if pcfg.enforce_min_draws && draws < min_draws {
        return Err(Error::InvalidArgument(format!("pilot needs at least {min_draws} draws for {} radii", cfg.m())));
    }
    if !(pcfg.p_star > 0.0 && pcfg.p_star <= 1.0) {
        return Err(Error::InvalidArgument(format!("p* must lie in (0, 1], got {}", pcfg.p_star)));
    }
    if y_obs.n() < 2 {
        return Err(Error::TooFewPoints(y_obs.n()));
    }
    Ok(())
}

/// Runs `L` prior-predictive simulations in parallel and fits the summary regression.
pub fn pilot_run<R: Rng + ?Sized>(
    prior: &PriorSpec,
    y_obs: &PointPattern,
    cfg: &SummaryConfig,
    pcfg: &PilotConfig,
    rng: &mut R,
) -> Result<PilotResult> {
    check_pilot_args(pcfg.draws, cfg, pcfg, y_obs)?;
    let table = reference_table(prior, y_obs.window(), cfg, pcfg.draws, &pcfg.sim, rng)?;
    pilot_from_table(&table, y_obs, pcfg)
}

/// Fits the summary regression for `y_obs` on an existing reference table.
/// `pcfg.draws` and `pcfg.sim` are not used.
pub fn pilot_from_table(table: &ReferenceTable, y_obs: &PointPattern, pcfg: &PilotConfig) -> Result<PilotResult> {
    let kind = table.kind;
    let cfg = &table.summary;
    if *y_obs.window() != table.window {
        return Err(Error::WindowMismatch);
    }
    check_pilot_args(table.theta.len(), cfg, pcfg, y_obs)?;
    let observed = summarize(y_obs, cfg)?;
    let w = table.window;
    let seed = table.seed;
    let raw = table.theta.iter().cloned().zip(table.summaries.iter().cloned());

    let mut theta = Vec::with_capacity(table.theta.len());
    let mut features = Vec::with_capacity(table.theta.len());
    let mut n_points = Vec::with_capacity(table.theta.len());
    let mut dropped_empty = 0;
    for (t, s) in raw {
        if s.n == 0 {
            dropped_empty += 1;
            continue;
        }
        features.push(features_from_summaries(&s, &observed, cfg)?);
        n_points.push(s.n);
        theta.push(t);
    }
    if dropped_empty > 0 {
        log::info!("pilot dropped {dropped_empty} empty simulated patterns");
    }
    if theta.len() < 2 * (cfg.dim() + 1) {
        return Err(Error::RankDeficient);
    }

    let (fit, lasso, active) = match &pcfg.lasso {
        Some(lc) => {
            let sel = lasso_select(&features, &theta, lc)?;
            let fit = if pcfg.use_refit { sel.refit.clone() } else { sel.penalized.clone() };
            let active = sel.active.clone();
            (fit, Some(sel), active)
        }
        None => {
            let active: Vec<usize> = (0..cfg.dim()).collect();
            (least_squares(&features, &theta, &active)?, None, active)
        }
    };

    let q = kind.n_params();
    let predicted: Vec<Vec<f64>> = features.iter().map(|f| fit.predict(f)).collect();
    let var_hat: Vec<f64> = (0..q)
        .map(|j| {
            let m = predicted.iter().map(|p| p[j]).sum::<f64>() / predicted.len() as f64;
            predicted.iter().map(|p| (p[j] - m).powi(2)).sum::<f64>() / (predicted.len() - 1) as f64
        })
        .collect();
    if var_hat.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Numerical("fitted parameter predictor has zero variance; no feature is informative".into()));
    }

    let mut result = PilotResult {
        kind,
        summary: cfg.clone(),
        window: w,
        observed,
        theta,
        features,
        n_points,
        fit,
        lasso,
        active,
        var_hat,
        distances: Vec::new(),
        percentiles: Vec::new(),
        p_star: pcfg.p_star,
        epsilon: 0.0,
        dropped_empty,
        seed,
    };
    result.distances = result.features.iter().map(|f| result.distance_of(f)).collect();
    result.percentiles =
        PERCENTILE_LEVELS.iter().map(|&p| Ok((p, result.percentile(p)?))).collect::<Result<Vec<_>>>()?;
    result.epsilon = result.percentile(pcfg.p_star)?;
    Ok(result)
}
