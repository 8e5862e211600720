//! Log-scale parameterization used by the pilot regression and the random walk.

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};

/// Floor applied to `γ` before taking logs.
pub const GAMMA_CLAMP: f64 = 1e-8;

/// Logs of the free parameters. The flag reports that `γ = 0` was clamped.
pub fn transform_params_flagged(m: &ModelSpec) -> Result<(Vec<f64>, bool)> {
    let mut clamped = false;
    let mut out = Vec::with_capacity(2);
    for (i, &v) in m.free_params().iter().enumerate() {
        let is_gamma = matches!(m, ModelSpec::Strauss { .. }) && i == 1;
        if is_gamma && (0.0..GAMMA_CLAMP).contains(&v) {
            clamped = true;
            out.push(GAMMA_CLAMP.ln());
        } else if v > 0.0 && v.is_finite() {
            out.push(v.ln());
        } else {
            return Err(Error::InvalidArgument(format!("cannot log-transform parameter value {v}")));
        }
    }
    Ok((out, clamped))
}

pub fn transform_params(m: &ModelSpec) -> Result<Vec<f64>> {
    transform_params_flagged(m).map(|(t, _)| t)
}

pub fn inverse_transform(theta: &[f64], kind: &ModelKind) -> Result<ModelSpec> {
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("transformed parameters must be finite".into()));
    }
    let natural: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    kind.with_params(&natural)
}

/// `Σ_j log θ_j`: log Jacobian of the map from transformed to natural scale.
pub(crate) fn log_jacobian(natural: &[f64]) -> f64 {
    natural.iter().map(|v| v.ln()).sum()
}
