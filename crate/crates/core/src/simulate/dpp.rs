//! Determinantal point processes through a truncated Fourier-basis spectral expansion.
//!
//! On a rectangle rescaled to the unit square the stationary kernel is expanded in
//! the orthonormal exponentials `ψ_k(x) = exp(2πi k·x)`, with eigenvalues given by
//! the spectral density at the lattice frequencies `(k₁/a, k₂/b)`. A draw selects
//! eigenfunctions by independent Bernoulli trials and then samples points
//! sequentially from the projection DPP spanned by the selected functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::pattern::{PointPattern, Window};
use crate::rng::SimRng;

/// Fraction of the expected point count the truncated expansion must retain.
pub const RETAINED_MASS: f64 = 0.99;

const EIGEN_TOLERANCE: f64 = 1e-9;
const CONVERGENCE_RTOL: f64 = 1e-12;
const MAX_HALF_WIDTH: i64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DppSimControls {
    /// Maximum rejection-sampling proposals spent on a single point.
    pub max_attempts_per_point: usize,
}

impl Default for DppSimControls {
    fn default() -> Self {
        Self { max_attempts_per_point: 1_000_000 }
    }
}

/// Spectral density of the DPP kernel at frequency `freq` (cycles per unit length).
///
/// Gaussian kernel `τ exp(-‖h‖²/σ²)`: `τ π σ² exp(-π² σ² ‖k‖²)`.
/// Power exponential: `τ α² / (π Γ(2/ν + 1)) exp(-‖α k‖^ν)`.
pub fn dpp_spectral_density(m: &ModelSpec, freq: (f64, f64)) -> Result<f64> {
    let k2 = freq.0 * freq.0 + freq.1 * freq.1;
    match *m {
        ModelSpec::DppGauss { tau, sigma } => Ok(tau * PI * sigma * sigma * (-PI * PI * sigma * sigma * k2).exp()),
        ModelSpec::DppPowerExp { tau, alpha, nu } => {
            let norm = tau * alpha * alpha / (PI * gamma(2.0 / nu + 1.0));
            Ok(norm * (-(alpha * alpha * k2).powf(nu / 2.0)).exp())
        }
        _ => Err(Error::InvalidModel("spectral density requires a DPP specification".into())),
    }
}

/// Cheap evaluator reused across the whole frequency lattice.
#[derive(Clone, Copy)]
enum Density {
    Gauss { scale: f64, rate: f64 },
    PowerExp { scale: f64, alpha2: f64, half_nu: f64 },
}

impl Density {
    fn new(m: &ModelSpec) -> Result<Self> {
        match *m {
            ModelSpec::DppGauss { tau, sigma } => {
                Ok(Density::Gauss { scale: tau * PI * sigma * sigma, rate: PI * PI * sigma * sigma })
            }
            ModelSpec::DppPowerExp { tau, alpha, nu } => Ok(Density::PowerExp {
                scale: tau * alpha * alpha / (PI * gamma(2.0 / nu + 1.0)),
                alpha2: alpha * alpha,
                half_nu: nu / 2.0,
            }),
            _ => Err(Error::InvalidModel("spectral approximation requires a DPP specification".into())),
        }
    }

    #[inline]
    fn at(&self, k2: f64) -> f64 {
        match *self {
            Density::Gauss { scale, rate } => scale * (-rate * k2).exp(),
            Density::PowerExp { scale, alpha2, half_nu } => scale * (-(alpha2 * k2).powf(half_nu)).exp(),
        }
    }
}

/// Truncated eigen-expansion of a stationary DPP kernel on a rectangle.
#[derive(Clone, Debug)]
pub struct SpectralApprox {
    freqs: Vec<(i32, i32)>,
    eigenvalues: Vec<f64>,
    window: Window,
    half_width: i64,
    expected_n: f64,
    retained_n: f64,
}

impl SpectralApprox {
    pub fn frequencies(&self) -> &[(i32, i32)] {
        &self.freqs
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Half-width `K` of the retained frequency square `[-K, K]²`.
    pub fn half_width(&self) -> i64 {
        self.half_width
    }

    /// `E[N(D)]`, the sum of all eigenvalues, computed to convergence.
    pub fn expected_n(&self) -> f64 {
        self.expected_n
    }

    /// Sum of the retained eigenvalues.
    pub fn retained_n(&self) -> f64 {
        self.retained_n
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(0.0, f64::max)
    }
}

fn ring_sum(density: &Density, k: i64, sx: f64, sy: f64) -> f64 {
    let at = |i: i64, j: i64| {
        let (fx, fy) = (i as f64 * sx, j as f64 * sy);
        density.at(fx * fx + fy * fy)
    };
    if k == 0 {
        return at(0, 0);
    }
    let mut s = 0.0;
    for i in -k..=k {
        s += at(i, k) + at(i, -k);
    }
    for j in -(k - 1)..=(k - 1) {
        s += at(k, j) + at(-k, j);
    }
    s
}

/// Builds the eigenvalue lattice, growing the frequency square until it retains
/// more than 99% of `E[N(D)]`.
pub fn build_spectral_approx(m: &ModelSpec, w: &Window) -> Result<SpectralApprox> {
    m.validate()?;
    let density = Density::new(m)?;
    let (sx, sy) = (1.0 / w.width(), 1.0 / w.height());

    let mut rings = Vec::new();
    let mut total = 0.0;
    loop {
        let k = rings.len() as i64;
        let s = ring_sum(&density, k, sx, sy);
        rings.push(s);
        total += s;
        if k > 0 && s <= CONVERGENCE_RTOL * total {
            break;
        }
        if k >= MAX_HALF_WIDTH {
            return Err(Error::Numerical(format!(
                "spectral sum did not converge within frequency half-width {MAX_HALF_WIDTH}"
            )));
        }
    }
    let expected_n = total;

    let mut retained = 0.0;
    let mut half_width = 0;
    for (k, s) in rings.iter().enumerate() {
        retained += s;
        half_width = k as i64;
        if expected_n - retained < (1.0 - RETAINED_MASS) * expected_n {
            break;
        }
    }

    let side = (2 * half_width + 1) as usize;
    let mut freqs = Vec::with_capacity(side * side);
    let mut eigenvalues = Vec::with_capacity(side * side);
    let mut retained_n = 0.0;
    for i in -half_width..=half_width {
        for j in -half_width..=half_width {
            let (fx, fy) = (i as f64 * sx, j as f64 * sy);
            let lam = density.at(fx * fx + fy * fy);
            if lam > 1.0 + EIGEN_TOLERANCE {
                return Err(Error::EigenvalueAboveOne(lam));
            }
            retained_n += lam;
            freqs.push((i as i32, j as i32));
            eigenvalues.push(lam.min(1.0));
        }
    }
    Ok(SpectralApprox { freqs, eigenvalues, window: *w, half_width, expected_n, retained_n })
}

/// Draws one DPP realization from a prepared expansion.
///
/// The Bernoulli selection and the point placement use separate generators seeded
/// from `rng`, so the point count is reproducible on its own.
pub fn sample_dpp<R: Rng + ?Sized>(approx: &SpectralApprox, rng: &mut R, ctrl: &DppSimControls) -> Result<PointPattern> {
    let mut select_rng = SimRng::seed_from_u64(rng.next_u64());
    let mut place_rng = SimRng::seed_from_u64(rng.next_u64());

    let selected: Vec<(f64, f64)> = approx
        .freqs
        .iter()
        .zip(&approx.eigenvalues)
        .filter(|(_, &lam)| select_rng.random::<f64>() < lam)
        .map(|(&(i, j), _)| (2.0 * PI * i as f64, 2.0 * PI * j as f64))
        .collect();

    let unit = place_projection_points(&selected, &mut place_rng, ctrl.max_attempts_per_point)?;
    let w = approx.window;
    let points = unit.into_iter().map(|(u, v)| w.from_unit(u, v)).collect();
    Ok(PointPattern::from_trusted(points, w))
}

/// Sequential sampler for the projection DPP on the unit square spanned by
/// `exp(i (ω·x))` for the given angular frequencies.
///
/// Keeps an orthonormal basis `F` (n × i, column-major) of the orthogonal complement
/// of the directions already used; the density of the next point is `‖F* v(x)‖² / i`
/// and is bounded by `n / i`, so uniform proposals are accepted with probability
/// `‖F* v(x)‖² / n`.
fn place_projection_points<R: Rng + ?Sized>(
    omega: &[(f64, f64)],
    rng: &mut R,
    max_attempts: usize,
) -> Result<Vec<(f64, f64)>> {
    let n = omega.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    let mut basis = vec![Complex64::new(0.0, 0.0); n * n];
    for c in 0..n {
        basis[c * n + c] = Complex64::new(1.0, 0.0);
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut coef = vec![Complex64::new(0.0, 0.0); n];
    let mut g = vec![Complex64::new(0.0, 0.0); n];

    for (first_col, remaining) in (1..=n).rev().enumerate() {
        let cols = &mut basis[first_col * n..];
        let mut attempts = 0;
        let accepted = loop {
            attempts += 1;
            if attempts > max_attempts {
                return Err(Error::RejectionCap(max_attempts));
            }
            let (x, y): (f64, f64) = (rng.random(), rng.random());
            for (vk, &(wx, wy)) in v.iter_mut().zip(omega) {
                let (s, c) = (wx * x + wy * y).sin_cos();
                *vk = Complex64::new(c, s);
            }
            if remaining == n {
                // F = I: density is uniform
                coef.copy_from_slice(&v);
                break (x, y);
            }
            let mut q = 0.0;
            for (col, cf) in cols.chunks_exact(n).zip(coef.iter_mut()) {
                let mut acc = Complex64::new(0.0, 0.0);
                for (f, vk) in col.iter().zip(&v) {
                    acc += f.conj() * vk;
                }
                *cf = acc;
                q += acc.norm_sqr();
            }
            if rng.random::<f64>() * n as f64 <= q {
                break (x, y);
            }
        };
        out.push(accepted);
        if remaining == 1 {
            break;
        }

        // Householder reflection mapping coef onto e_0, applied to the basis columns;
        // the first column then spans the accepted direction and is dropped.
        let c = &mut coef[..remaining];
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical("degenerate projection in DPP sampler".into()));
        }
        let phase = if c[0].norm() > 0.0 { c[0] / c[0].norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        c[0] -= alpha;
        let uu: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        for gj in g.iter_mut() {
            *gj = Complex64::new(0.0, 0.0);
        }
        for (col, uc) in cols.chunks_exact(n).zip(c.iter()) {
            for (gj, f) in g.iter_mut().zip(col) {
                *gj += f * uc;
            }
        }
        let scale = 2.0 / uu;
        for (col, uc) in cols.chunks_exact_mut(n).zip(c.iter()) {
            let w = uc.conj() * scale;
            for (f, gj) in col.iter_mut().zip(&g) {
                *f -= gj * w;
            }
        }
    }
    Ok(out)
}

/// Builds the expansion for `m` on `w` and draws one realization.
pub fn simulate_dpp<R: Rng + ?Sized>(m: &ModelSpec, w: &Window, rng: &mut R, ctrl: &DppSimControls) -> Result<PointPattern> {
    let approx = build_spectral_approx(m, w)?;
    sample_dpp(&approx, rng, ctrl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{alpha_max, sigma_max};
    use crate::rng::from_seed;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_density_values() {
        let at_max = ModelSpec::DppGauss { tau: 100.0, sigma: sigma_max(100.0) };
        assert_relative_eq!(dpp_spectral_density(&at_max, (0.0, 0.0)).unwrap(), 1.0, epsilon = 1e-12);
        let g = ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 };
        assert_relative_eq!(dpp_spectral_density(&g, (0.0, 0.0)).unwrap(), 100.0 * PI * 0.0025, epsilon = 1e-12);
        let pe = ModelSpec::DppPowerExp { tau: 100.0, alpha: alpha_max(100.0, 10.0), nu: 10.0 };
        assert_relative_eq!(dpp_spectral_density(&pe, (0.0, 0.0)).unwrap(), 1.0, epsilon = 1e-12);
        assert!(dpp_spectral_density(&ModelSpec::Hpp { lambda: 1.0 }, (0.0, 0.0)).is_err());
    }

    /// Direct 2-D quadrature of `∫ τ exp(-‖h‖²/σ²) cos(2π k·h) dh` over a box wide
    /// enough for the integrand to vanish.
    fn gaussian_transform_by_quadrature(tau: f64, sigma: f64, k: (f64, f64)) -> f64 {
        let half = 8.0 * sigma;
        let steps = 800;
        let dh = 2.0 * half / steps as f64;
        let mut total = 0.0;
        for i in 0..steps {
            let x = -half + (i as f64 + 0.5) * dh;
            for j in 0..steps {
                let y = -half + (j as f64 + 0.5) * dh;
                total += tau * (-(x * x + y * y) / (sigma * sigma)).exp() * (2.0 * PI * (k.0 * x + k.1 * y)).cos();
            }
        }
        total * dh * dh
    }

    #[test]
    fn gaussian_closed_form_matches_quadrature() {
        for &(sigma, k) in &[(0.05, (0.0, 0.0)), (0.05, (3.0, 4.0)), (0.02, (10.0, -7.0)), (0.1, (1.0, 2.0))] {
            let m = ModelSpec::DppGauss { tau: 50.0, sigma };
            let closed = dpp_spectral_density(&m, k).unwrap();
            let quad = gaussian_transform_by_quadrature(50.0, sigma, k);
            assert_relative_eq!(closed, quad, max_relative = 1e-6, epsilon = 1e-12);
        }
    }

    #[test]
    fn power_exponential_integrates_to_tau() {
        // radial integral 2π ∫ φ(ρ) ρ dρ must equal τ
        let m = ModelSpec::DppPowerExp { tau: 100.0, alpha: 0.1, nu: 10.0 };
        let steps = 200_000;
        let top = 30.0;
        let dr = top / steps as f64;
        let integral: f64 = (0..steps)
            .map(|i| {
                let r = (i as f64 + 0.5) * dr;
                2.0 * PI * r * dpp_spectral_density(&m, (r, 0.0)).unwrap() * dr
            })
            .sum();
        assert_relative_eq!(integral, 100.0, max_relative = 1e-6);
    }

    #[test]
    fn truncation_keeps_99_percent() {
        let m = ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 };
        let approx = build_spectral_approx(&m, &Window::unit()).unwrap();
        assert!((99.0..=100.0).contains(&approx.retained_n()), "{}", approx.retained_n());
        assert_relative_eq!(approx.expected_n(), 100.0, max_relative = 1e-9);
        assert!(approx.expected_n() - approx.retained_n() < 0.01 * approx.expected_n());
    }

    #[test]
    fn boundary_spec_has_unit_top_eigenvalue() {
        let g = ModelSpec::DppGauss { tau: 100.0, sigma: sigma_max(100.0) };
        assert_relative_eq!(build_spectral_approx(&g, &Window::unit()).unwrap().max_eigenvalue(), 1.0, epsilon = 1e-9);
        let pe = ModelSpec::DppPowerExp { tau: 500.0, alpha: alpha_max(500.0, 10.0), nu: 10.0 };
        assert_relative_eq!(build_spectral_approx(&pe, &Window::unit()).unwrap().max_eigenvalue(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn small_sigma_flattens_spectrum() {
        let w = Window::unit();
        let wide = build_spectral_approx(&ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 }, &w).unwrap();
        let narrow = build_spectral_approx(&ModelSpec::DppGauss { tau: 100.0, sigma: 0.01 }, &w).unwrap();
        assert!(narrow.frequencies().len() > wide.frequencies().len());
        assert!(narrow.max_eigenvalue() < wide.max_eigenvalue());
        assert_relative_eq!(narrow.expected_n(), 100.0, max_relative = 1e-6);
        assert!(narrow.retained_n() >= 99.0);
    }

    #[test]
    fn rectangle_uses_scaled_frequencies() {
        let w = Window::new(0.0, 2.0, 0.0, 0.5).unwrap();
        let approx = build_spectral_approx(&ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 }, &w).unwrap();
        assert_relative_eq!(approx.expected_n(), 100.0, max_relative = 1e-9);
    }

    #[test]
    fn empty_selection_gives_empty_pattern() {
        let m = ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 };
        let mut approx = build_spectral_approx(&m, &Window::unit()).unwrap();
        approx.eigenvalues.iter_mut().for_each(|l| *l = 0.0);
        let p = sample_dpp(&approx, &mut from_seed(1), &DppSimControls::default()).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn full_selection_places_every_point() {
        // all eigenvalues one: exactly (2K+1)² points, all distinct
        let m = ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 };
        let mut approx = build_spectral_approx(&m, &Window::unit()).unwrap();
        approx.freqs.truncate(25);
        approx.eigenvalues.truncate(25);
        approx.eigenvalues.iter_mut().for_each(|l| *l = 1.0);
        let p = sample_dpp(&approx, &mut from_seed(2), &DppSimControls::default()).unwrap();
        assert_eq!(p.n(), 25);
        assert!(p.min_pair_distance().unwrap() > 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = ModelSpec::DppPowerExp { tau: 100.0, alpha: 0.1, nu: 10.0 };
        let w = Window::unit();
        let a = simulate_dpp(&m, &w, &mut from_seed(4), &DppSimControls::default()).unwrap();
        let b = simulate_dpp(&m, &w, &mut from_seed(4), &DppSimControls::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn count_mean_matches_intensity() {
        let m = ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 };
        let approx = build_spectral_approx(&m, &Window::unit()).unwrap();
        let mut rng = from_seed(9);
        let reps = 400;
        let ns: Vec<f64> = (0..reps).map(|_| sample_dpp(&approx, &mut rng, &DppSimControls::default()).unwrap().n() as f64).collect();
        let mean = ns.iter().sum::<f64>() / reps as f64;
        let var = ns.iter().map(|n| (n - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        // Bernoulli selection: Var N = Σ λ(1 - λ)
        let var_theory: f64 = approx.eigenvalues().iter().map(|l| l * (1.0 - l)).sum();
        assert!((mean - approx.retained_n()).abs() < 4.0 * (var_theory / reps as f64).sqrt(), "mean {mean}");
        assert!(var < 100.0, "DPP count variance {var} should be below the Poisson value");
        assert!((var / var_theory - 1.0).abs() < 0.3, "variance {var} vs {var_theory}");
    }

    #[test]
    fn second_moment_matches_gaussian_kernel() {
        // pair correlation 1 - exp(-2 r² / σ²) integrates to
        // K(r) = π r² - (π σ² / 2)(1 - exp(-2 r² / σ²))
        let (tau, sigma) = (100.0, 0.05);
        let m = ModelSpec::DppGauss { tau, sigma };
        let approx = build_spectral_approx(&m, &Window::unit()).unwrap();
        let mut rng = from_seed(21);
        let radii = [0.03, 0.05, 0.08];
        let reps = 300;
        let mut sums = [0.0; 3];
        for _ in 0..reps {
            let p = sample_dpp(&approx, &mut rng, &DppSimControls::default()).unwrap();
            let k = crate::pattern::k_curve(&p, &radii, crate::pattern::KEstimator::Translation).unwrap();
            for (s, v) in sums.iter_mut().zip(k) {
                *s += v;
            }
        }
        for (r, s) in radii.iter().zip(sums) {
            let theory = PI * r * r - PI * sigma * sigma / 2.0 * (1.0 - (-2.0 * r * r / (sigma * sigma)).exp());
            let mean = s / reps as f64;
            assert!((mean / theory - 1.0).abs() < 0.06, "r={r}: mean K {mean} vs {theory}");
        }
    }
}
