//! Model parameterizations and their existence constraints.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Largest Gaussian-kernel range for which the DPP exists: `1/sqrt(π τ)`.
pub fn sigma_max(tau: f64) -> f64 {
    1.0 / (PI * tau).sqrt()
}

/// Largest power-exponential scale for which the DPP exists: `sqrt(Γ(2/ν+1) π / τ)`.
pub fn alpha_max(tau: f64, nu: f64) -> f64 {
    (gamma(2.0 / nu + 1.0) * PI / tau).sqrt()
}

// allow a few ulps of slack so parameters set exactly at the boundary validate
const BOUNDARY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Hpp { lambda: f64 },
    Strauss { beta: f64, gamma: f64, r: f64, hardcore: f64 },
    DppGauss { tau: f64, sigma: f64 },
    #[serde(rename = "dpp_powexp")]
    DppPowerExp { tau: f64, alpha: f64, nu: f64 },
}

impl ModelSpec {
    pub fn strauss(beta: f64, gamma: f64, r: f64) -> Self {
        ModelSpec::Strauss { beta, gamma, r, hardcore: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        match *self {
            ModelSpec::Hpp { lambda } => {
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return bad(format!("HPP intensity must be positive, got {lambda}"));
                }
            }
            ModelSpec::Strauss { beta, gamma, r, hardcore } => {
                if !(beta > 0.0 && beta.is_finite()) {
                    return bad(format!("Strauss beta must be positive, got {beta}"));
                }
                if !(0.0..=1.0).contains(&gamma) {
                    return bad(format!("Strauss gamma must lie in [0, 1], got {gamma}"));
                }
                if !(r > 0.0 && r.is_finite()) {
                    return bad(format!("interaction radius must be positive, got {r}"));
                }
                if !(hardcore >= 0.0) || (hardcore > 0.0 && hardcore >= r) {
                    return bad(format!("hardcore radius {hardcore} must lie in [0, R={r})"));
                }
            }
            ModelSpec::DppGauss { tau, sigma } => {
                if !(tau > 0.0 && tau.is_finite() && sigma > 0.0) {
                    return bad(format!("DPP-G needs tau > 0 and sigma > 0, got ({tau}, {sigma})"));
                }
                let max = sigma_max(tau);
                if sigma > max * (1.0 + BOUNDARY_SLACK) {
                    return bad(format!("sigma {sigma} exceeds sigma_max {max}"));
                }
            }
            ModelSpec::DppPowerExp { tau, alpha, nu } => {
                if !(tau > 0.0 && tau.is_finite() && alpha > 0.0 && nu > 0.0) {
                    return bad(format!("DPP-PE needs tau, alpha, nu > 0, got ({tau}, {alpha}, {nu})"));
                }
                let max = alpha_max(tau, nu);
                if alpha > max * (1.0 + BOUNDARY_SLACK) {
                    return bad(format!("alpha {alpha} exceeds alpha_max {max}"));
                }
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        match *self {
            ModelSpec::Hpp { .. } => ModelKind::Hpp,
            ModelSpec::Strauss { r, hardcore, .. } => ModelKind::Strauss { r, hardcore },
            ModelSpec::DppGauss { .. } => ModelKind::DppGauss,
            ModelSpec::DppPowerExp { nu, .. } => ModelKind::DppPowerExp { nu },
        }
    }

    /// Free parameters on the natural scale, in [`ModelKind::param_names`] order.
    pub fn free_params(&self) -> Vec<f64> {
        match *self {
            ModelSpec::Hpp { lambda } => vec![lambda],
            ModelSpec::Strauss { beta, gamma, .. } => vec![beta, gamma],
            ModelSpec::DppGauss { tau, sigma } => vec![tau, sigma],
            ModelSpec::DppPowerExp { tau, alpha, .. } => vec![tau, alpha],
        }
    }
}

/// A model family with its fixed (non-estimated) parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Hpp,
    Strauss { r: f64, hardcore: f64 },
    DppGauss,
    #[serde(rename = "dpp_powexp")]
    DppPowerExp { nu: f64 },
}

impl ModelKind {
    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelKind::Hpp => &["lambda"],
            ModelKind::Strauss { .. } => &["beta", "gamma"],
            ModelKind::DppGauss => &["tau", "sigma"],
            ModelKind::DppPowerExp { .. } => &["tau", "alpha"],
        }
    }

    pub fn n_params(&self) -> usize {
        self.param_names().len()
    }

    /// Assembles a spec from natural-scale free parameters.
    pub fn with_params(&self, params: &[f64]) -> Result<ModelSpec> {
        if params.len() != self.n_params() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let spec = match *self {
            ModelKind::Hpp => ModelSpec::Hpp { lambda: params[0] },
            ModelKind::Strauss { r, hardcore } => {
                ModelSpec::Strauss { beta: params[0], gamma: params[1], r, hardcore }
            }
            ModelKind::DppGauss => ModelSpec::DppGauss { tau: params[0], sigma: params[1] },
            ModelKind::DppPowerExp { nu } => ModelSpec::DppPowerExp { tau: params[0], alpha: params[1], nu },
        };
        Ok(spec)
    }

    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Hpp => "hpp",
            ModelKind::Strauss { .. } => "strauss",
            ModelKind::DppGauss => "dpp_gauss",
            ModelKind::DppPowerExp { .. } => "dpp_powexp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Hpp => write!(f, "hpp"),
            ModelKind::Strauss { r, hardcore } => write!(f, "strauss r={r} h={hardcore}"),
            ModelKind::DppGauss => write!(f, "dpp_gauss"),
            ModelKind::DppPowerExp { nu } => write!(f, "dpp_powexp nu={nu}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn existence_bounds() {
        assert_relative_eq!(sigma_max(100.0), 0.0564, epsilon = 1e-4);
        assert_relative_eq!(alpha_max(100.0, 10.0), 0.1698, epsilon = 1e-4);
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::strauss(200.0, 0.1, 0.05).validate().is_ok());
        assert!(ModelSpec::strauss(200.0, 1.1, 0.05).validate().is_err());
        assert!(ModelSpec::Strauss { beta: 200.0, gamma: 0.1, r: 0.05, hardcore: 0.05 }.validate().is_err());
        assert!(ModelSpec::DppGauss { tau: 100.0, sigma: sigma_max(100.0) }.validate().is_ok());
        assert!(ModelSpec::DppGauss { tau: 100.0, sigma: 0.06 }.validate().is_err());
        let a = alpha_max(100.0, 10.0);
        assert!(ModelSpec::DppPowerExp { tau: 100.0, alpha: a, nu: 10.0 }.validate().is_ok());
        assert!(ModelSpec::DppPowerExp { tau: 100.0, alpha: a * 1.01, nu: 10.0 }.validate().is_err());
        assert!(ModelSpec::Hpp { lambda: 0.0 }.validate().is_err());
    }

    #[test]
    fn kind_round_trip() {
        let spec = ModelSpec::Strauss { beta: 200.0, gamma: 0.1, r: 0.05, hardcore: 0.01 };
        assert_eq!(spec.kind().with_params(&spec.free_params()).unwrap(), spec);
    }
}
