//! Exact and approximate simulators for the supported models.

mod dpp;
mod hpp;
mod strauss;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use dpp::{build_spectral_approx, dpp_spectral_density, sample_dpp, simulate_dpp, DppSimControls, SpectralApprox, RETAINED_MASS};
pub use hpp::simulate_hpp;
pub use strauss::{papangelou_strauss, simulate_strauss, StraussSimControls};

use crate::error::Result;
use crate::model::ModelSpec;
use crate::pattern::{PointPattern, Window};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimControls {
    pub strauss: StraussSimControls,
    pub dpp: DppSimControls,
}

/// One realization of `m` on `w` with default sampler controls.
pub fn simulate<R: Rng + ?Sized>(m: &ModelSpec, w: &Window, rng: &mut R) -> Result<PointPattern> {
    simulate_with(m, w, rng, &SimControls::default())
}

pub fn simulate_with<R: Rng + ?Sized>(m: &ModelSpec, w: &Window, rng: &mut R, ctrl: &SimControls) -> Result<PointPattern> {
    m.validate()?;
    match *m {
        ModelSpec::Hpp { lambda } => simulate_hpp(lambda, w, rng),
        ModelSpec::Strauss { .. } => simulate_strauss(m, w, rng, &ctrl.strauss),
        ModelSpec::DppGauss { .. } | ModelSpec::DppPowerExp { .. } => simulate_dpp(m, w, rng, &ctrl.dpp),
    }
}
