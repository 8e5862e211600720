use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{FitMethod, RunConfig};
use super::{pretty, Artifacts, Command};
use crate::abc::{abc_mcmc, abc_rejection, pilot_run, posterior_predictive, PilotResult, PosteriorSamples, PriorSpec};
use crate::assess::{mc_test, rps_compare};
use crate::error::{Error, Result};
use crate::io::{format_curve, format_pattern, format_posterior, read_pattern, read_posterior};
use crate::model::ModelKind;
use crate::pattern::{l_curve, PointPattern, SummaryConfig, Window};
use crate::pseudolik::{profile_radius, ProfileResult};
use crate::rng::substream;
use crate::simulate::simulate_with;

// top-level stream indices under the run seed
const STREAM_SIMULATE: u64 = 0;
const STREAM_PILOT: u64 = 1;
const STREAM_MCMC: u64 = 2;
const STREAM_PREDICTIVE: u64 = 3;
const STREAM_CHECK: u64 = 4;
const STREAM_RPS: u64 = 5;

pub(super) fn dispatch(cmd: Command, cfg: &RunConfig) -> Result<Artifacts> {
    match cmd {
        Command::Simulate => simulate(cfg),
        Command::Profile => profile(cfg),
        Command::Pilot => pilot(cfg),
        Command::Fit => fit(cfg),
        Command::Check => check(cfg),
        Command::Rps => rps(cfg),
    }
}

fn config_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).unwrap_or(Value::Null)
}

/// Leading comment lines that tie a table to its run.
fn provenance(cfg: &RunConfig) -> String {
    format!("# seed {}\n# config {}\n", cfg.seed.unwrap_or_default(), config_json(cfg))
}

/// Radius grid for L-curve output: the `[summary]` grid, ignoring `sufficient`.
fn plot_grid(cfg: &RunConfig, w: &Window) -> Result<SummaryConfig> {
    let mut plain = cfg.clone();
    plain.summary.sufficient = false;
    plain.summary_config(w, None)
}

fn simulate(cfg: &RunConfig) -> Result<Artifacts> {
    let seed = cfg.seed()?;
    let w = cfg.window()?;
    let m = cfg.model()?;
    let patterns: Vec<PointPattern> = (0..cfg.simulate.count)
        .into_par_iter()
        .map(|i| simulate_with(&m, &w, &mut substream(seed, &[STREAM_SIMULATE, i as u64]), &cfg.sampler))
        .collect::<Result<_>>()?;
    let grid = if cfg.simulate.l_curve { Some(plot_grid(cfg, &w)?) } else { None };
    let mut out = Artifacts::new();
    for (i, p) in patterns.iter().enumerate() {
        out.push((format!("pattern_{i:03}.csv"), format_pattern(p).into_bytes()));
        if let Some(g) = &grid {
            if p.n() < 2 {
                log::warn!("pattern {i} has {} points; no L curve written", p.n());
                continue;
            }
            out.push((format!("lcurve_{i:03}.csv"), format_curve(&l_curve(p, g)?).into_bytes()));
        }
    }
    Ok(out)
}

fn profile_table(cfg: &RunConfig, res: &ProfileResult) -> String {
    let mut s = provenance(cfg);
    s.push_str("r,h,beta,gamma,log_pl,best\n");
    for (i, e) in res.entries.iter().enumerate() {
        let _ = writeln!(s, "{},{},{:.16e},{:.16e},{:.16e},{}", e.r, e.h, e.beta, e.gamma, e.log_pl, u8::from(i == res.best));
    }
    s
}

fn run_profile(cfg: &RunConfig, y: &PointPattern) -> Result<ProfileResult> {
    profile_radius(y, &cfg.profile.r_grid, &cfg.profile.h_grid, cfg.profile.quad)
}

fn profile(cfg: &RunConfig) -> Result<Artifacts> {
    let y = read_pattern(cfg.data_path()?)?;
    let res = run_profile(cfg, &y)?;
    let best = res.best_entry();
    let summary = json!({
        "r_hat": best.r,
        "h_hat": best.h,
        "beta": best.beta,
        "gamma": best.gamma,
        "log_pl": best.log_pl,
        "n": y.n(),
        "seed": cfg.seed,
    });
    Ok(vec![
        ("profile.csv".into(), profile_table(cfg, &res).into_bytes()),
        ("profile.json".into(), pretty(&summary).into_bytes()),
    ])
}

/// Everything the pilot and fit commands share: data, optional profile, prior and pilot.
struct Prepared {
    y: PointPattern,
    profile: Option<ProfileResult>,
    prior: PriorSpec,
    pilot: PilotResult,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let seed = cfg.seed()?;
    let y = read_pattern(cfg.data_path()?)?;
    let block = cfg.prior()?;
    let profile = if block.needs_profile() { Some(run_profile(cfg, &y)?) } else { None };
    let kind = block.kind_with(profile.as_ref().map(|p| (p.r_hat(), p.h_hat())))?;
    let prior = block.spec(kind)?;
    let strauss_r = match kind {
        ModelKind::Strauss { r, .. } => Some(r),
        _ => None,
    };
    let scfg = cfg.summary_config(y.window(), strauss_r)?;
    let mut pilot = pilot_run(&prior, &y, &scfg, &cfg.pilot_config()?, &mut substream(seed, &[STREAM_PILOT]))?;
    if let Some(e) = cfg.pilot.epsilon {
        pilot = pilot.with_epsilon(e)?;
    }
    Ok(Prepared { y, profile, prior, pilot })
}

fn pilot_json(cfg: &RunConfig, p: &PilotResult) -> Value {
    let names = p.kind.param_names();
    let coefficients: Vec<Value> = names
        .iter()
        .enumerate()
        .map(|(j, n)| json!({ "parameter": format!("log_{n}"), "intercept": p.fit.intercept[j], "slopes": p.fit.coef[j] }))
        .collect();
    let percentiles: Vec<Value> = p.percentiles.iter().map(|(q, v)| json!({ "p": q, "distance": v })).collect();
    json!({
        "model": p.kind.label(),
        "kind": p.kind,
        "seed": cfg.seed,
        "radii": p.summary.r_grid(),
        "include_log_n": p.summary.include_log_n,
        "estimator": p.summary.estimator,
        "draws_used": p.theta.len(),
        "dropped_empty": p.dropped_empty,
        "active_features": p.active,
        "lasso_penalties": p.lasso.as_ref().map(|l| l.lambda.clone()),
        "coefficients": coefficients,
        "theta_obs": p.theta_obs(),
        "var_hat": p.var_hat,
        "percentiles": percentiles,
        "p_star": p.p_star,
        "epsilon": p.epsilon,
        "config": config_json(cfg),
    })
}

fn profile_json(profile: &Option<ProfileResult>) -> Value {
    match profile {
        Some(p) => json!({ "r_hat": p.r_hat(), "h_hat": p.h_hat() }),
        None => Value::Null,
    }
}

fn pilot(cfg: &RunConfig) -> Result<Artifacts> {
    let prep = prepare(cfg)?;
    let mut out = vec![("pilot.json".to_string(), pretty(&pilot_json(cfg, &prep.pilot)).into_bytes())];
    if let Some(p) = &prep.profile {
        out.push(("profile.csv".into(), profile_table(cfg, p).into_bytes()));
    }
    Ok(out)
}

/// Posterior summary in the layout mean, standard deviation and central 95% interval
/// per parameter.
fn fit_summary_json(cfg: &RunConfig, s: &PosteriorSamples, profile: Value) -> Value {
    let parameters: Vec<Value> = s
        .summary()
        .iter()
        .map(|p| json!({ "name": p.name, "mean": p.mean, "stdev": p.sd, "interval_95": [p.q025, p.q975] }))
        .collect();
    json!({
        "model": s.kind.label(),
        "kind": s.kind,
        "seed": cfg.seed,
        "draws": s.len(),
        "epsilon": s.epsilon,
        "acceptance_rate": s.acceptance_rate,
        "cap_events": s.cap_events,
        "prior": s.prior,
        "profile": profile,
        "parameters": parameters,
        "config": config_json(cfg),
    })
}

fn fit(cfg: &RunConfig) -> Result<Artifacts> {
    let seed = cfg.seed()?;
    let prep = prepare(cfg)?;
    let samples = match cfg.fit.method {
        FitMethod::Mcmc => {
            abc_mcmc(&prep.pilot, &prep.prior, &prep.y, &cfg.mcmc_config()?, &mut substream(seed, &[STREAM_MCMC]))?
        }
        FitMethod::Rejection => abc_rejection(&prep.pilot, &prep.prior)?,
    };
    let mut out = vec![
        ("posterior.csv".to_string(), format_posterior(&samples).into_bytes()),
        ("summary.json".into(), pretty(&fit_summary_json(cfg, &samples, profile_json(&prep.profile))).into_bytes()),
        ("pilot.json".into(), pretty(&pilot_json(cfg, &prep.pilot)).into_bytes()),
    ];
    if let Some(p) = &prep.profile {
        out.push(("profile.csv".into(), profile_table(cfg, p).into_bytes()));
    }
    if cfg.fit.l_curve {
        let w = *prep.y.window();
        let grid = plot_grid(cfg, &w)?;
        out.push(("lcurve_observed.csv".into(), format_curve(&l_curve(&prep.y, &grid)?).into_bytes()));
        if cfg.fit.l_curve_patterns > 0 {
            let mut rng = substream(seed, &[STREAM_PREDICTIVE]);
            let patterns = posterior_predictive(&samples, &w, cfg.fit.l_curve_patterns, &cfg.sampler, &mut rng)?;
            let curves: Vec<Vec<(f64, f64)>> =
                patterns.iter().filter(|p| p.n() >= 2).map(|p| l_curve(p, &grid)).collect::<Result<_>>()?;
            if curves.is_empty() {
                return Err(Error::Numerical("no posterior predictive pattern has two points".into()));
            }
            let mean: Vec<(f64, f64)> = grid
                .r_grid()
                .iter()
                .enumerate()
                .map(|(k, &r)| (r, curves.iter().map(|c| c[k].1).sum::<f64>() / curves.len() as f64))
                .collect();
            out.push(("lcurve_predictive.csv".into(), format_curve(&mean).into_bytes()));
        }
    }
    Ok(out)
}

fn check(cfg: &RunConfig) -> Result<Artifacts> {
    let seed = cfg.seed()?;
    let y = read_pattern(cfg.data_path()?)?;
    let block = cfg.prior()?;
    let prior = block.spec(block.kind_with(None)?)?;
    let res = mc_test(
        &y,
        &prior,
        &cfg.check.radii,
        cfg.check.simulations,
        &cfg.sampler,
        &mut substream(seed, &[STREAM_CHECK]),
    )?;
    let mut s = provenance(cfg);
    let _ = writeln!(s, "# model {} simulations {}", prior.kind().label(), res.simulations);
    s.push_str("r,observed,sim_q025,sim_median,sim_q975,p_value\n");
    for k in 0..res.radii.len() {
        let q = res.simulated_quantiles[k];
        let _ = writeln!(s, "{},{},{},{},{},{}", res.radii[k], res.observed[k], q[0], q[1], q[2], res.p_values[k]);
    }
    Ok(vec![("mc_test.csv".into(), s.into_bytes())])
}

fn rps(cfg: &RunConfig) -> Result<Artifacts> {
    let seed = cfg.seed()?;
    let y = read_pattern(cfg.data_path()?)?;
    let paths = cfg.rps_paths()?;
    let fits: Vec<PosteriorSamples> =
        paths.iter().map(|p| read_posterior(p).map(|t| t.into_samples())).collect::<Result<_>>()?;
    if fits.iter().any(PosteriorSamples::is_empty) {
        return Err(Error::Config("a posterior file has no draws".into()));
    }
    let results = rps_compare(&y, &fits, &cfg.rps_config(), &mut substream(seed, &[STREAM_RPS]))?;

    let mut summary = provenance(cfg);
    summary.push_str("model,posterior,mean_rps\n");
    for (res, given) in results.iter().zip(&cfg.rps.posteriors) {
        let _ = writeln!(summary, "{},{},{:.16e}", res.kind.label(), given.display(), res.mean);
    }

    let mut regions = provenance(cfg);
    regions.push_str("region,x_min,x_max,y_min,y_max");
    for k in 0..results.len() {
        let _ = write!(regions, ",rps_{k}");
    }
    regions.push('\n');
    if let Some(first) = results.first() {
        for (j, b) in first.regions.iter().enumerate() {
            let _ = write!(regions, "{j},{:.16e},{:.16e},{:.16e},{:.16e}", b.x_min(), b.x_max(), b.y_min(), b.y_max());
            for res in &results {
                let _ = write!(regions, ",{:.16e}", res.per_region[j]);
            }
            regions.push('\n');
        }
    }
    Ok(vec![("rps.csv".into(), summary.into_bytes()), ("rps_regions.csv".into(), regions.into_bytes())])
}
