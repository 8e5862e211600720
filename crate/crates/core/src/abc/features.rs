//! Comparison features between a simulated and the observed pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{k_curve, PointPattern, SummaryConfig, Window};

/// Per-pattern statistics the features are built from: `n` and `sqrt(K̂)` over the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSummary {
    pub n: usize,
    pub sqrt_k: Vec<f64>,
    window: Window,
}

/// Summarizes a pattern once; patterns with fewer than two points get `K̂ = 0`.
pub fn summarize(p: &PointPattern, cfg: &SummaryConfig) -> Result<PatternSummary> {
    let sqrt_k = if p.n() < 2 {
        vec![0.0; cfg.m()]
    } else {
        k_curve(p, cfg.r_grid(), cfg.estimator)?.into_iter().map(f64::sqrt).collect()
    };
    Ok(PatternSummary { n: p.n(), sqrt_k, window: *p.window() })
}

/// `(log n(x) - log n(y), (sqrt K̂_r(x) - sqrt K̂_r(y))², ...)`; the first entry is
/// omitted when the config excludes it.
pub fn features_from_summaries(x: &PatternSummary, y: &PatternSummary, cfg: &SummaryConfig) -> Result<Vec<f64>> {
    if x.window != y.window {
        return Err(Error::WindowMismatch);
    }
    if x.sqrt_k.len() != cfg.m() || y.sqrt_k.len() != cfg.m() {
        return Err(Error::InvalidArgument("summary length does not match the radius grid".into()));
    }
    let mut out = Vec::with_capacity(cfg.dim());
    if cfg.include_log_n {
        if x.n == 0 || y.n == 0 {
            return Err(Error::TooFewPoints(0));
        }
        out.push((x.n as f64).ln() - (y.n as f64).ln());
    }
    out.extend(x.sqrt_k.iter().zip(&y.sqrt_k).map(|(a, b)| (a - b) * (a - b)));
    Ok(out)
}

pub fn features(x: &PointPattern, y_obs: &PointPattern, cfg: &SummaryConfig) -> Result<Vec<f64>> {
    if x.window() != y_obs.window() {
        return Err(Error::WindowMismatch);
    }
    features_from_summaries(&summarize(x, cfg)?, &summarize(y_obs, cfg)?, cfg)
}
