//! ABC-MCMC on the log parameter scale, plain rejection ABC, and posterior
//! predictive simulation.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::summarize;
use super::pilot::PilotResult;
use super::prior::PriorSpec;
use super::transform::{inverse_transform, log_jacobian};
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::pattern::{PointPattern, Window};
use crate::rng::{substream, SimRng};
use crate::simulate::{simulate_with, SimControls};

// stream index reserved for proposals and MH uniforms
const CHAIN_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    /// Number of retained states (no burn-in, no thinning).
    pub n_keep: usize,
    /// Simulations spent on one proposal before it is rejected. With `1` the chain is
    /// the standard ABC-MCMC whose stationary law is the ABC posterior.
    pub max_sims_per_iter: usize,
    /// Random-walk standard deviations on the transformed scale; `None` uses
    /// `scale_factor * sqrt(var_hat)` from the pilot.
    pub proposal_sd: Option<Vec<f64>>,
    pub scale_factor: f64,
    /// Simulations allowed when looking for a matching pattern at the initial state.
    pub initial_search: usize,
    /// Length of the sliding window used to detect a stuck chain.
    pub stall_window: usize,
    /// Cap-rejection fraction over the window above which the run is abandoned.
    pub stall_fraction: f64,
    pub sim: SimControls,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_keep: 1000,
            max_sims_per_iter: 100,
            proposal_sd: None,
            scale_factor: 0.5,
            initial_search: 1000,
            stall_window: 1000,
            stall_fraction: 0.99,
            sim: SimControls::default(),
        }
    }
}

/// Retained parameter draws with per-iteration diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub kind: ModelKind,
    pub param_names: Vec<String>,
    /// Natural-scale draws, one row per retained state.
    pub draws: Vec<Vec<f64>>,
    /// Simulations spent in the iteration that produced each row; `0` when the
    /// proposal fell outside the prior support.
    pub sim_counts: Vec<usize>,
    /// Point count of the matching pattern attached to each state.
    pub n_points: Vec<Option<usize>>,
    pub acceptance_rate: f64,
    pub cap_events: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub prior: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Linear-interpolation sample quantile.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn summarize_column(name: &str, values: &[f64]) -> ParamSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    ParamSummary { name: name.to_string(), mean, sd, q025: quantile(values, 0.025), q975: quantile(values, 0.975) }
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[j]).collect()
    }

    /// Mean, standard deviation and central 95% interval per parameter, followed by
    /// the matched point count when it was recorded.
    pub fn summary(&self) -> Vec<ParamSummary> {
        let mut out: Vec<ParamSummary> =
            self.param_names.iter().enumerate().map(|(j, name)| summarize_column(name, &self.column(j))).collect();
        let ns: Vec<f64> = self.n_points.iter().flatten().map(|&n| n as f64).collect();
        if !ns.is_empty() {
            out.push(summarize_column("n", &ns));
        }
        out
    }
}

struct Attempt {
    n: usize,
    matched: bool,
}

/// Simulates at `spec` until a pattern matches or `cap` runs are spent. Runs are
/// evaluated in parallel batches; the first match in index order wins, so the
/// result does not depend on the thread count.
fn search_match(
    pilot: &PilotResult,
    kind: &ModelKind,
    natural: &[f64],
    w: &Window,
    sim: &SimControls,
    seed: u64,
    t: u64,
    cap: usize,
) -> Result<(usize, Option<usize>)> {
    let spec = kind.with_params(natural)?;
    let batch = rayon::current_num_threads().max(1);
    let mut start = 0;
    while start < cap {
        let end = (start + batch).min(cap);
        let attempts: Vec<Attempt> = (start..end)
            .into_par_iter()
            .map(|a| {
                let mut r = substream(seed, &[t, a as u64]);
                let x = simulate_with(&spec, w, &mut r, sim)?;
                let s = summarize(&x, &pilot.summary)?;
                let matched = pilot.distance_of_summary(&s).is_some_and(|psi| pilot.accepts(psi));
                Ok(Attempt { n: s.n, matched })
            })
            .collect::<Result<_>>()?;
        if let Some(i) = attempts.iter().position(|a| a.matched) {
            return Ok((start + i + 1, Some(attempts[i].n)));
        }
        start = end;
    }
    Ok((cap, None))
}

/// Log target on the transformed scale: prior density times the Jacobian.
fn log_target(prior: &PriorSpec, natural: &[f64]) -> Result<f64> {
    let lp = prior.log_density(natural)?;
    Ok(if lp == f64::NEG_INFINITY { lp } else { lp + log_jacobian(natural) })
}

/// ABC-MCMC started at the pilot's `θ̂_obs`.
///
/// Each iteration proposes a Gaussian random-walk step on the log scale, spends up
/// to `max_sims_per_iter` simulations looking for a pattern within the pilot's
/// tolerance, and on success applies the Metropolis-Hastings test with the prior
/// ratio on the log scale.
pub fn abc_mcmc<R: Rng + ?Sized>(
    pilot: &PilotResult,
    prior: &PriorSpec,
    y_obs: &PointPattern,
    mcfg: &McmcConfig,
    rng: &mut R,
) -> Result<PosteriorSamples> {
    let kind = pilot.kind;
    if *prior.kind() != kind {
        return Err(Error::InvalidArgument("prior and pilot describe different models".into()));
    }
    if *y_obs.window() != pilot.window {
        return Err(Error::WindowMismatch);
    }
    if mcfg.max_sims_per_iter == 0 || mcfg.n_keep == 0 {
        return Err(Error::InvalidArgument("n_keep and max_sims_per_iter must be positive".into()));
    }
    let q = kind.n_params();
    let step: Vec<f64> = match &mcfg.proposal_sd {
        Some(sd) if sd.len() == q && sd.iter().all(|&s| s > 0.0) => sd.clone(),
        Some(_) => return Err(Error::InvalidArgument(format!("proposal_sd needs {q} positive entries"))),
        None => pilot.var_hat.iter().map(|v| mcfg.scale_factor * v.sqrt()).collect(),
    };
    let seed = rng.next_u64();
    let mut chain: SimRng = substream(seed, &[CHAIN_STREAM]);
    let w = pilot.window;

    let mut state: Vec<f64> = pilot.theta_obs().to_vec();
    let mut natural: Vec<f64> = inverse_transform(&state, &kind)?.free_params();
    if !prior.in_support(&natural) {
        natural = prior.sample(&mut chain)?;
        state = natural.iter().map(|v| v.ln()).collect();
    }
    let mut log_pi = log_target(prior, &natural)?;
    let (_, mut n_current) = search_match(pilot, &kind, &natural, &w, &mcfg.sim, seed, 0, mcfg.initial_search)?;
    if n_current.is_none() {
        log::warn!("no matching pattern found at the initial state within {} simulations", mcfg.initial_search);
    }

    let mut out = PosteriorSamples {
        kind,
        param_names: kind.param_names().iter().map(|s| s.to_string()).collect(),
        draws: Vec::with_capacity(mcfg.n_keep),
        sim_counts: Vec::with_capacity(mcfg.n_keep),
        n_points: Vec::with_capacity(mcfg.n_keep),
        acceptance_rate: 0.0,
        cap_events: 0,
        epsilon: pilot.epsilon,
        seed,
        prior: prior.expressions(),
    };
    let mut accepted = 0usize;
    let mut recent: VecDeque<bool> = VecDeque::with_capacity(mcfg.stall_window);
    let mut recent_caps = 0usize;

    for t in 1..=mcfg.n_keep as u64 {
        let proposal: Vec<f64> =
            state.iter().zip(&step).map(|(s, sd)| s + sd * chain.sample::<f64, _>(StandardNormal)).collect();
        let u: f64 = chain.random();
        let prop_natural: Vec<f64> = proposal.iter().map(|v| v.exp()).collect();
        let prop_log_pi = log_target(prior, &prop_natural)?;

        let mut sims = 0;
        let mut capped = false;
        if prop_log_pi > f64::NEG_INFINITY && kind.with_params(&prop_natural)?.validate().is_ok() {
            let (used, matched) = search_match(pilot, &kind, &prop_natural, &w, &mcfg.sim, seed, t, mcfg.max_sims_per_iter)?;
            sims = used;
            match matched {
                Some(n) if u.ln() < prop_log_pi - log_pi => {
                    state = proposal;
                    natural = prop_natural;
                    log_pi = prop_log_pi;
                    n_current = Some(n);
                    accepted += 1;
                }
                Some(_) => {}
                None => capped = true,
            }
            if recent.len() == mcfg.stall_window {
                recent_caps -= recent.pop_front().map_or(0, usize::from);
            }
            recent.push_back(capped);
            recent_caps += usize::from(capped);
            if recent.len() == mcfg.stall_window && recent_caps as f64 > mcfg.stall_fraction * mcfg.stall_window as f64 {
                return Err(Error::NonConvergence(format!(
                    "{recent_caps} of the last {} proposals hit the simulation cap; raise the tolerance",
                    mcfg.stall_window
                )));
            }
        }
        out.cap_events += usize::from(capped);
        out.draws.push(natural.clone());
        out.sim_counts.push(sims);
        out.n_points.push(n_current);
    }
    out.acceptance_rate = accepted as f64 / mcfg.n_keep as f64;
    Ok(out)
}

/// Rejection ABC from the pilot table: the prior draws whose distance is within the
/// pilot's tolerance.
pub fn abc_rejection(pilot: &PilotResult, prior: &PriorSpec) -> Result<PosteriorSamples> {
    let kind = pilot.kind;
    let mut draws = Vec::new();
    let mut n_points = Vec::new();
    for ((theta, &psi), &n) in pilot.theta.iter().zip(&pilot.distances).zip(&pilot.n_points) {
        if pilot.accepts(psi) {
            draws.push(inverse_transform(theta, &kind)?.free_params());
            n_points.push(Some(n));
        }
    }
    if draws.is_empty() {
        return Err(Error::NonConvergence("no pilot draw falls within the tolerance".into()));
    }
    let len = draws.len();
    Ok(PosteriorSamples {
        kind,
        param_names: kind.param_names().iter().map(|s| s.to_string()).collect(),
        draws,
        sim_counts: vec![1; len],
        n_points,
        acceptance_rate: len as f64 / pilot.theta.len() as f64,
        cap_events: 0,
        epsilon: pilot.epsilon,
        seed: pilot.seed,
        prior: prior.expressions(),
    })
}

/// Composition sampling: `T` parameter vectors drawn with replacement from the
/// posterior sample, one simulated pattern each.
pub fn posterior_predictive<R: Rng + ?Sized>(
    samples: &PosteriorSamples,
    w: &Window,
    t: usize,
    sim: &SimControls,
    rng: &mut R,
) -> Result<Vec<PointPattern>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("posterior predictive needs at least one draw".into()));
    }
    let seed = rng.next_u64();
    let mut picker: SimRng = substream(seed, &[CHAIN_STREAM]);
    let picks: Vec<usize> = (0..t).map(|_| picker.random_range(0..samples.len())).collect();
    picks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let spec = samples.kind.with_params(&samples.draws[k])?;
            simulate_with(&spec, w, &mut substream(seed, &[i as u64]), sim)
        })
        .collect()
}
