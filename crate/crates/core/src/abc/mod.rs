//! Semi-automatic approximate Bayesian computation.
//!
//! A pilot run regresses log parameters on features comparing simulated and observed
//! second-order summaries; the fitted predictor `θ̂ = â + b̂ η` then defines the
//! distance used by ABC-MCMC or plain rejection.

mod features;
mod lasso;
mod mcmc;
mod pilot;
mod prior;
mod regression;
mod transform;

pub use features::{features, features_from_summaries, summarize, PatternSummary};
pub use lasso::{lasso_fit, lasso_select, LassoConfig, LassoSelection};
pub use mcmc::{abc_mcmc, abc_rejection, posterior_predictive, quantile, McmcConfig, ParamSummary, PosteriorSamples};
pub use pilot::{
    distance, empirical_percentile, pilot_from_table, pilot_run, reference_table, PilotConfig, PilotResult, ReferenceTable,
    PERCENTILE_LEVELS,
};
pub use prior::{Bound, Marginal, PriorSpec};
pub use regression::{least_squares, LinearFit};
pub use transform::{inverse_transform, transform_params, transform_params_flagged, GAMMA_CLAMP};
