//! Run configuration: a TOML document with one table per concern.
//!
//! Every table has defaults except `[model]`, `[prior]` and `[data]`, which the
//! commands that need them require. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::abc::{LassoConfig, McmcConfig, PilotConfig, PriorSpec};
use crate::assess::RpsConfig;
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::pattern::{KEstimator, SummaryConfig, Window};
use crate::pseudolik::{default_h_grid, default_r_grid, DEFAULT_QUAD, MIN_QUAD};
use crate::simulate::SimControls;

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Output directory; left out of the resolved config so that runs differing
    /// only in destination produce identical manifests.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub model: Option<ModelBlock>,
    pub window: WindowBlock,
    pub data: Option<DataBlock>,
    pub prior: Option<PriorBlock>,
    pub summary: SummaryBlock,
    pub sampler: SimControls,
    pub simulate: SimulateBlock,
    pub profile: ProfileBlock,
    pub pilot: PilotBlock,
    pub fit: FitBlock,
    pub check: CheckBlock,
    pub rps: RpsBlock,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kind: String,
    pub lambda: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub r: Option<f64>,
    pub hardcore: Option<f64>,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowBlock {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for WindowBlock {
    fn default() -> Self {
        Self { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBlock {
    pub kind: String,
    /// Strauss interaction radius; profiled from the data when absent.
    pub r: Option<f64>,
    pub hardcore: Option<f64>,
    pub nu: Option<f64>,
    /// One expression per free parameter, e.g. `"uniform(50, 400)"`.
    pub params: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorName {
    #[default]
    Translation,
    Uncorrected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummaryBlock {
    /// Explicit radii; overrides `m` and `r_max`.
    pub radii: Option<Vec<f64>>,
    pub m: usize,
    /// Largest radius; defaults to a tenth of the shorter window side.
    pub r_max: Option<f64>,
    pub include_log_n: bool,
    pub estimator: EstimatorName,
    /// Strauss only: use `(log n, sqrt K)` at the interaction radius with plain pair counts.
    pub sufficient: bool,
    pub allow_large_radii: bool,
}

impl Default for SummaryBlock {
    fn default() -> Self {
        Self {
            radii: None,
            m: 10,
            r_max: None,
            include_log_n: true,
            estimator: EstimatorName::Translation,
            sufficient: false,
            allow_large_radii: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateBlock {
    pub count: usize,
    /// Also write `(r, L(r) - r)` for each simulated pattern.
    pub l_curve: bool,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self { count: 1, l_curve: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileBlock {
    pub r_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub quad: usize,
}

impl Default for ProfileBlock {
    fn default() -> Self {
        Self { r_grid: default_r_grid(), h_grid: default_h_grid(), quad: DEFAULT_QUAD }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PilotBlock {
    pub draws: usize,
    pub p_star: f64,
    /// Fixed tolerance overriding the `p_star` percentile.
    pub epsilon: Option<f64>,
    pub lasso: bool,
    pub lasso_folds: usize,
    pub use_refit: bool,
}

impl Default for PilotBlock {
    fn default() -> Self {
        Self { draws: 10_000, p_star: 0.01, epsilon: None, lasso: false, lasso_folds: 5, use_refit: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    #[default]
    Mcmc,
    Rejection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitBlock {
    pub method: FitMethod,
    pub n_keep: usize,
    pub max_sims_per_iter: usize,
    pub scale_factor: f64,
    pub initial_search: usize,
    pub stall_window: usize,
    pub stall_fraction: f64,
    pub l_curve: bool,
    /// Posterior predictive patterns averaged into the predictive L curve.
    pub l_curve_patterns: usize,
}

impl Default for FitBlock {
    fn default() -> Self {
        let m = McmcConfig::default();
        Self {
            method: FitMethod::Mcmc,
            n_keep: m.n_keep,
            max_sims_per_iter: m.max_sims_per_iter,
            scale_factor: m.scale_factor,
            initial_search: m.initial_search,
            stall_window: m.stall_window,
            stall_fraction: m.stall_fraction,
            l_curve: false,
            l_curve_patterns: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckBlock {
    pub simulations: usize,
    pub radii: Vec<f64>,
}

impl Default for CheckBlock {
    fn default() -> Self {
        Self { simulations: 999, radii: vec![0.01, 0.02, 0.03, 0.04] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpsBlock {
    /// Posterior CSVs written by `fit`, one per competing model.
    pub posteriors: Vec<PathBuf>,
    pub regions: usize,
    pub q_max: f64,
    pub predictive: usize,
}

impl Default for RpsBlock {
    fn default() -> Self {
        let d = RpsConfig::default();
        Self { posteriors: Vec::new(), regions: d.regions, q_max: d.q_max, predictive: d.predictive }
    }
}

fn need(v: Option<f64>, kind: &str, name: &str) -> Result<f64> {
    v.ok_or_else(|| config_err(format!("[model] kind = \"{kind}\" needs `{name}`")))
}

impl ModelBlock {
    pub fn spec(&self) -> Result<ModelSpec> {
        let k = self.kind.as_str();
        let allowed: &[&str] = match k {
            "hpp" => &["lambda"],
            "strauss" => &["beta", "gamma", "r", "hardcore"],
            "dpp_gauss" => &["tau", "sigma"],
            "dpp_powexp" => &["tau", "alpha", "nu"],
            _ => return Err(config_err(format!("unknown model kind {k:?}"))),
        };
        let given = [
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("r", self.r),
            ("hardcore", self.hardcore),
            ("tau", self.tau),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("nu", self.nu),
        ];
        if let Some((name, _)) = given.iter().find(|(n, v)| v.is_some() && !allowed.contains(n)) {
            return Err(config_err(format!("[model] kind = \"{k}\" does not take `{name}`")));
        }
        let spec = match k {
            "hpp" => ModelSpec::Hpp { lambda: need(self.lambda, k, "lambda")? },
            "strauss" => ModelSpec::Strauss {
                beta: need(self.beta, k, "beta")?,
                gamma: need(self.gamma, k, "gamma")?,
                r: need(self.r, k, "r")?,
                hardcore: self.hardcore.unwrap_or(0.0),
            },
            "dpp_gauss" => ModelSpec::DppGauss { tau: need(self.tau, k, "tau")?, sigma: need(self.sigma, k, "sigma")? },
            _ => ModelSpec::DppPowerExp {
                tau: need(self.tau, k, "tau")?,
                alpha: need(self.alpha, k, "alpha")?,
                nu: need(self.nu, k, "nu")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl PriorBlock {
    /// The model family, given the Strauss radius when it is not fixed in the config.
    pub fn kind_with(&self, profiled_r: Option<(f64, f64)>) -> Result<ModelKind> {
        let k = self.kind.as_str();
        let extra = |name: &str, present: bool| {
            if present {
                Err(config_err(format!("[prior] kind = \"{k}\" does not take `{name}`")))
            } else {
                Ok(())
            }
        };
        match k {
            "hpp" | "dpp_gauss" => {
                extra("r", self.r.is_some())?;
                extra("hardcore", self.hardcore.is_some())?;
                extra("nu", self.nu.is_some())?;
                Ok(if k == "hpp" { ModelKind::Hpp } else { ModelKind::DppGauss })
            }
            "strauss" => {
                extra("nu", self.nu.is_some())?;
                let (r, h) = match (self.r, profiled_r) {
                    (Some(r), _) => (r, self.hardcore.unwrap_or(0.0)),
                    (None, Some((r, h))) => (r, self.hardcore.unwrap_or(h)),
                    (None, None) => return Err(config_err("[prior] strauss radius is neither set nor profiled")),
                };
                ModelSpec::Strauss { beta: 1.0, gamma: 0.5, r, hardcore: h }.validate()?;
                Ok(ModelKind::Strauss { r, hardcore: h })
            }
            "dpp_powexp" => {
                extra("r", self.r.is_some())?;
                extra("hardcore", self.hardcore.is_some())?;
                let nu = self.nu.ok_or_else(|| config_err("[prior] kind = \"dpp_powexp\" needs `nu`"))?;
                if !(nu > 0.0) {
                    return Err(config_err(format!("nu must be positive, got {nu}")));
                }
                Ok(ModelKind::DppPowerExp { nu })
            }
            _ => Err(config_err(format!("unknown prior kind {k:?}"))),
        }
    }

    /// True when the Strauss radius must come from profiling the data.
    pub fn needs_profile(&self) -> bool {
        self.kind == "strauss" && self.r.is_none()
    }

    pub fn spec(&self, kind: ModelKind) -> Result<PriorSpec> {
        let exprs: Vec<&str> = self.params.iter().map(String::as_str).collect();
        PriorSpec::parse(kind, &exprs)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn seed(&self) -> Result<u64> {
        match self.seed {
            None => Err(config_err("no seed given: set `seed` or pass --seed")),
            // TOML integers are signed 64-bit
            Some(s) if s > i64::MAX as u64 => Err(config_err(format!("seed {s} exceeds {}", i64::MAX))),
            Some(s) => Ok(s),
        }
    }

    pub fn window(&self) -> Result<Window> {
        let w = &self.window;
        Window::new(w.x_min, w.x_max, w.y_min, w.y_max)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        self.model.as_ref().ok_or_else(|| config_err("missing [model] table"))?.spec()
    }

    pub fn prior(&self) -> Result<&PriorBlock> {
        self.prior.as_ref().ok_or_else(|| config_err("missing [prior] table"))
    }

    pub fn data_path(&self) -> Result<PathBuf> {
        let d = self.data.as_ref().ok_or_else(|| config_err("missing [data] table"))?;
        let p = self.resolve(&d.path);
        if !p.is_file() {
            return Err(config_err(format!("data file {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn rps_paths(&self) -> Result<Vec<PathBuf>> {
        if self.rps.posteriors.len() < 2 {
            return Err(config_err("[rps] needs at least two posterior files"));
        }
        self.rps
            .posteriors
            .iter()
            .map(|p| {
                let full = self.resolve(p);
                if full.is_file() {
                    Ok(full)
                } else {
                    Err(config_err(format!("posterior file {} does not exist", full.display())))
                }
            })
            .collect()
    }

    /// Radius grid from `[summary]`, or the Strauss sufficient summary at radius `r`.
    pub fn summary_config(&self, w: &Window, strauss_r: Option<f64>) -> Result<SummaryConfig> {
        let s = &self.summary;
        if s.sufficient {
            let r = strauss_r.ok_or_else(|| config_err("[summary] sufficient = true requires a Strauss prior"))?;
            let cfg = SummaryConfig::strauss_sufficient(r, w)?;
            return Ok(if s.include_log_n { cfg } else { cfg.without_log_n() });
        }
        let grid = match &s.radii {
            Some(r) => r.clone(),
            None => {
                if s.m == 0 {
                    return Err(config_err("[summary] m must be at least 1"));
                }
                let r_max = s.r_max.unwrap_or(0.1 * w.min_side());
                (1..=s.m).map(|i| r_max * i as f64 / s.m as f64).collect()
            }
        };
        let mut cfg =
            if s.allow_large_radii { SummaryConfig::new_allow_large(grid, w)? } else { SummaryConfig::new(grid, w)? };
        cfg = cfg.with_estimator(match s.estimator {
            EstimatorName::Translation => KEstimator::Translation,
            EstimatorName::Uncorrected => KEstimator::Uncorrected,
        });
        Ok(if s.include_log_n { cfg } else { cfg.without_log_n() })
    }

    pub fn pilot_config(&self) -> Result<PilotConfig> {
        let p = &self.pilot;
        if let Some(e) = p.epsilon {
            if !(e >= 0.0) {
                return Err(config_err(format!("[pilot] epsilon must be nonnegative, got {e}")));
            }
        }
        let lasso = p.lasso.then(|| LassoConfig { k_folds: p.lasso_folds, ..Default::default() });
        if let Some(l) = &lasso {
            l.validate()?;
        }
        Ok(PilotConfig {
            draws: p.draws,
            p_star: p.p_star,
            lasso,
            use_refit: p.use_refit,
            enforce_min_draws: true,
            sim: self.sampler.clone(),
        })
    }

    pub fn mcmc_config(&self) -> Result<McmcConfig> {
        let f = &self.fit;
        if f.n_keep == 0 || f.max_sims_per_iter == 0 || !(f.scale_factor > 0.0) {
            return Err(config_err("[fit] n_keep, max_sims_per_iter and scale_factor must be positive"));
        }
        Ok(McmcConfig {
            n_keep: f.n_keep,
            max_sims_per_iter: f.max_sims_per_iter,
            proposal_sd: None,
            scale_factor: f.scale_factor,
            initial_search: f.initial_search,
            stall_window: f.stall_window,
            stall_fraction: f.stall_fraction,
            sim: self.sampler.clone(),
        })
    }

    pub fn rps_config(&self) -> RpsConfig {
        RpsConfig { regions: self.rps.regions, q_max: self.rps.q_max, predictive: self.rps.predictive, sim: self.sampler.clone() }
    }

    pub fn check_profile(&self) -> Result<()> {
        if self.profile.quad < MIN_QUAD {
            return Err(config_err(format!("[profile] quad must be at least {MIN_QUAD}")));
        }
        Ok(())
    }

    /// Validates every table the command reads before any computation starts.
    pub fn validate_for(&self, cmd: super::Command) -> Result<()> {
        use super::Command::*;
        self.seed()?;
        self.sampler.strauss.validate()?;
        if self.threads == Some(0) {
            return Err(config_err("threads must be at least 1"));
        }
        match cmd {
            Simulate => {
                let w = self.window()?;
                self.model()?;
                if self.simulate.count == 0 {
                    return Err(config_err("[simulate] count must be at least 1"));
                }
                if self.simulate.l_curve {
                    self.summary_config(&w, None)?;
                }
            }
            Profile => {
                self.data_path()?;
                self.check_profile()?;
            }
            Pilot | Fit => {
                self.data_path()?;
                let prior = self.prior()?;
                if prior.needs_profile() {
                    self.check_profile()?;
                }
                let kind = prior.kind_with(Some((1.0, 0.0)))?;
                prior.spec(kind)?;
                if self.summary.sufficient && prior.kind != "strauss" {
                    return Err(config_err("[summary] sufficient = true requires a Strauss prior"));
                }
                self.pilot_config()?;
                if cmd == Fit {
                    self.mcmc_config()?;
                }
            }
            Check => {
                self.data_path()?;
                let prior = self.prior()?;
                if prior.needs_profile() {
                    return Err(config_err("check needs a fixed Strauss radius in [prior]"));
                }
                prior.spec(prior.kind_with(None)?)?;
            }
            Rps => {
                self.data_path()?;
                self.rps_paths()?;
            }
        }
        Ok(())
    }
}
