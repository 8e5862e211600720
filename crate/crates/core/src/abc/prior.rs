//! Independent or bound-coupled priors over a model's free parameters.
//!
//! Bounds may refer to the DPP existence limits evaluated at the first parameter
//! (`τ`), so parameters are sampled and evaluated in declaration order.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma as GammaDist};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{alpha_max, sigma_max, ModelKind};

/// Upper end of a support, possibly tied to the existence bound at the sampled `τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Value(f64),
    SigmaMax,
    AlphaMax,
}

impl Bound {
    fn resolve(&self, kind: &ModelKind, tau: Option<f64>) -> Result<f64> {
        match (*self, kind, tau) {
            (Bound::Value(v), _, _) => Ok(v),
            (Bound::SigmaMax, ModelKind::DppGauss, Some(t)) => Ok(sigma_max(t)),
            (Bound::AlphaMax, ModelKind::DppPowerExp { nu }, Some(t)) => Ok(alpha_max(t, *nu)),
            (b, k, _) => Err(Error::InvalidPrior(format!("bound {b} is not available for model {k}"))),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Value(v) => write!(f, "{v}"),
            Bound::SigmaMax => write!(f, "sigma_max"),
            Bound::AlphaMax => write!(f, "alpha_max"),
        }
    }
}

impl FromStr for Bound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sigma_max" => Ok(Bound::SigmaMax),
            "alpha_max" => Ok(Bound::AlphaMax),
            t => t
                .parse::<f64>()
                .map(Bound::Value)
                .map_err(|_| Error::InvalidPrior(format!("cannot read bound `{t}`"))),
        }
    }
}

/// One-dimensional prior. `Gamma` uses the shape/rate convention; `Beta` is
/// rescaled to `(0, scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum Marginal {
    Uniform { lo: f64, hi: Bound },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64, scale: Bound },
}

impl Marginal {
    fn check(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Uniform { lo, hi } => lo.is_finite() && !matches!(hi, Bound::Value(h) if !(h > lo && h.is_finite())),
            Marginal::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Marginal::Beta { a, b, scale } => a > 0.0 && b > 0.0 && !matches!(scale, Bound::Value(s) if !(s > 0.0 && s.is_finite())),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPrior(format!("invalid hyperparameters in {self}")))
        }
    }

    fn support(&self, kind: &ModelKind, tau: Option<f64>) -> Result<(f64, f64)> {
        match self {
            Marginal::Uniform { lo, hi } => Ok((*lo, hi.resolve(kind, tau)?)),
            Marginal::Gamma { .. } => Ok((0.0, f64::INFINITY)),
            Marginal::Beta { scale, .. } => Ok((0.0, scale.resolve(kind, tau)?)),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, kind: &ModelKind, tau: Option<f64>, rng: &mut R) -> Result<f64> {
        let bad = |e: String| Error::InvalidPrior(e);
        match *self {
            Marginal::Uniform { lo, hi } => {
                let hi = hi.resolve(kind, tau)?;
                if !(hi > lo) {
                    return Err(bad(format!("empty uniform support ({lo}, {hi})")));
                }
                Ok(lo + (hi - lo) * rng.random::<f64>())
            }
            Marginal::Gamma { shape, rate } => {
                Ok(GammaDist::new(shape, 1.0 / rate).map_err(|e| bad(e.to_string()))?.sample(rng))
            }
            Marginal::Beta { a, b, scale } => {
                let s = scale.resolve(kind, tau)?;
                Ok(s * BetaDist::new(a, b).map_err(|e| bad(e.to_string()))?.sample(rng))
            }
        }
    }

    fn ln_pdf(&self, x: f64, kind: &ModelKind, tau: Option<f64>) -> Result<f64> {
        let (lo, hi) = self.support(kind, tau)?;
        if !(x >= lo && x <= hi) || (matches!(self, Marginal::Gamma { .. }) && x <= 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(match *self {
            Marginal::Uniform { .. } => -(hi - lo).ln(),
            Marginal::Gamma { shape, rate } => shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x,
            Marginal::Beta { a, b, .. } => {
                let z = x / hi;
                let log_kernel = |p: f64, v: f64| if p == 1.0 { 0.0 } else { (p - 1.0) * v.ln() };
                log_kernel(a, z) + log_kernel(b, 1.0 - z) - ln_beta(a, b) - hi.ln()
            }
        })
    }

    /// Mean and variance when they do not depend on an earlier parameter.
    pub fn moments(&self) -> Option<(f64, f64)> {
        match *self {
            Marginal::Uniform { lo, hi: Bound::Value(hi) } => Some(((lo + hi) / 2.0, (hi - lo).powi(2) / 12.0)),
            Marginal::Gamma { shape, rate } => Some((shape / rate, shape / (rate * rate))),
            Marginal::Beta { a, b, scale: Bound::Value(s) } => {
                let m = a / (a + b);
                Some((s * m, s * s * a * b / ((a + b).powi(2) * (a + b + 1.0))))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Marginal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marginal::Uniform { lo, hi } => write!(f, "uniform({lo}, {hi})"),
            Marginal::Gamma { shape, rate } => write!(f, "gamma({shape}, {rate})"),
            Marginal::Beta { a, b, scale: Bound::Value(s) } if *s == 1.0 => write!(f, "beta({a}, {b})"),
            Marginal::Beta { a, b, scale } => write!(f, "beta({a}, {b}) * {scale}"),
        }
    }
}

impl FromStr for Marginal {
    type Err = Error;

    /// Reads `uniform(lo, hi)`, `gamma(shape, rate)`, `beta(a, b)` or
    /// `beta(a, b) * scale`, where `hi` and `scale` may be `sigma_max` / `alpha_max`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidPrior(format!("cannot parse prior `{s}`"));
        let text = s.trim();
        let (call, scale) = match text.split_once('*') {
            Some((c, k)) => (c.trim(), Some(k.parse::<Bound>()?)),
            None => (text, None),
        };
        let open = call.find('(').ok_or_else(bad)?;
        if !call.ends_with(')') {
            return Err(bad());
        }
        let name = call[..open].trim().to_ascii_lowercase();
        let args: Vec<&str> = call[open + 1..call.len() - 1].split(',').map(str::trim).collect();
        if args.len() != 2 {
            return Err(bad());
        }
        let num = |a: &str| a.parse::<f64>().map_err(|_| bad());
        let m = match (name.as_str(), scale) {
            ("uniform" | "u", None) => Marginal::Uniform { lo: num(args[0])?, hi: args[1].parse()? },
            ("gamma" | "g", None) => Marginal::Gamma { shape: num(args[0])?, rate: num(args[1])? },
            ("beta" | "b", scale) => {
                Marginal::Beta { a: num(args[0])?, b: num(args[1])?, scale: scale.unwrap_or(Bound::Value(1.0)) }
            }
            _ => return Err(bad()),
        };
        m.check()?;
        Ok(m)
    }
}

/// Priors for every free parameter of one model kind, in parameter order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    kind: ModelKind,
    marginals: Vec<Marginal>,
}

impl PriorSpec {
    pub fn new(kind: ModelKind, marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.len() != kind.n_params() {
            return Err(Error::InvalidPrior(format!(
                "{kind} has {} free parameters, got {} priors",
                kind.n_params(),
                marginals.len()
            )));
        }
        for m in &marginals {
            m.check()?;
        }
        if let Some(Marginal::Uniform { hi: Bound::SigmaMax | Bound::AlphaMax, .. } | Marginal::Beta { scale: Bound::SigmaMax | Bound::AlphaMax, .. }) =
            marginals.first()
        {
            return Err(Error::InvalidPrior("the first parameter cannot depend on an existence bound".into()));
        }
        let spec = Self { kind, marginals };
        spec.check_support()?;
        Ok(spec)
    }

    /// Parses one prior expression per parameter.
    pub fn parse(kind: ModelKind, exprs: &[&str]) -> Result<Self> {
        let marginals = exprs.iter().map(|e| e.parse()).collect::<Result<Vec<Marginal>>>()?;
        Self::new(kind, marginals)
    }

    fn check_support(&self) -> Result<()> {
        let (first_lo, _) = self.marginals[0].support(&self.kind, None)?;
        if first_lo < 0.0 {
            return Err(Error::InvalidPrior("prior support must be nonnegative".into()));
        }
        if let ModelKind::Strauss { .. } = self.kind {
            let (lo, hi) = self.marginals[1].support(&self.kind, None)?;
            if lo < 0.0 || hi > 1.0 {
                return Err(Error::InvalidPrior(format!("gamma prior support ({lo}, {hi}) leaves [0, 1]")));
            }
        }
        if let Some(Marginal::Uniform { lo, .. }) = self.marginals.get(1) {
            if *lo < 0.0 {
                return Err(Error::InvalidPrior("prior support must be nonnegative".into()));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Draws natural-scale parameters in declaration order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut theta = Vec::with_capacity(self.marginals.len());
        for m in &self.marginals {
            let tau = theta.first().copied();
            theta.push(m.sample(&self.kind, tau, rng)?);
        }
        Ok(theta)
    }

    /// Joint log density on the natural scale; `-inf` outside the support.
    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.marginals.len() {
            return Err(Error::InvalidArgument(format!("expected {} parameters, got {}", self.marginals.len(), theta.len())));
        }
        let mut total = 0.0;
        for (i, (m, &x)) in self.marginals.iter().zip(theta).enumerate() {
            let tau = if i == 0 { None } else { Some(theta[0]) };
            total += m.ln_pdf(x, &self.kind, tau)?;
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        Ok(total)
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        matches!(self.log_density(theta), Ok(v) if v > f64::NEG_INFINITY)
    }

    /// Expressions that [`PriorSpec::parse`] reads back to the same spec.
    pub fn expressions(&self) -> Vec<String> {
        self.marginals.iter().map(|m| m.to_string()).collect()
    }
}
