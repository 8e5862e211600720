//! Log pseudo-likelihood of the Strauss / hard-core Strauss model and profile
//! selection of the interaction and hard-core radii.
//!
//! `log PL(β, γ) = -∫_D λ(u|x) du + Σ_i log λ(x_i | x \ x_i)`, with the integral
//! replaced by a midpoint rule on a `quad × quad` grid. Every quantity depends on
//! the data only through neighbour counts, so one table of short distances serves
//! all candidate radii.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::pattern::{CellIndex, Point, PointPattern};

pub const DEFAULT_QUAD: usize = 128;
pub const MIN_QUAD: usize = 8;
/// Lower clamp for γ in the optimizer.
pub const GAMMA_FLOOR: f64 = 1e-8;

/// Default profile grid for the interaction radius: 0.01, 0.012, ..., 0.1.
pub fn default_r_grid() -> Vec<f64> {
    (0..=45).map(|i| 0.01 + 0.002 * i as f64).collect()
}

pub fn default_h_grid() -> Vec<f64> {
    vec![0.0, 0.005, 0.01]
}

/// Squared distances from each probe location to the data points within `reach`.
struct DistanceTable {
    offsets: Vec<usize>,
    d2: Vec<f64>,
}

impl DistanceTable {
    fn build(points: &[Point], index: &CellIndex, probes: impl Iterator<Item = (Point, Option<usize>)>, reach2: f64) -> Self {
        let mut offsets = vec![0];
        let mut d2 = Vec::new();
        for (u, skip) in probes {
            index.for_each_near(points, u, reach2, |j, d| {
                if Some(j) != skip {
                    d2.push(d);
                }
            });
            offsets.push(d2.len());
        }
        Self { offsets, d2 }
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.offsets.windows(2).map(|w| &self.d2[w[0]..w[1]])
    }
}

/// Sufficient quantities of the log pseudo-likelihood at fixed `(R, h)`.
#[derive(Clone, Debug)]
struct PlTerms {
    n: usize,
    /// Quadrature weight per neighbour count `t`; infeasible quadrature points dropped.
    weight_by_t: Vec<f64>,
    /// Σ_i t(x_i), the number of ordered R-close pairs.
    t_sum: u64,
    /// Some observed point violates the hard core.
    infeasible: bool,
}

impl PlTerms {
    /// `∫_D λ(u|x) du / β` under the quadrature.
    fn area(&self, gamma: f64) -> f64 {
        // Horner in γ
        self.weight_by_t.iter().rev().fold(0.0, |acc, &w| acc * gamma + w)
    }

    fn log_pl(&self, beta: f64, gamma: f64) -> f64 {
        if self.infeasible {
            return f64::NEG_INFINITY;
        }
        let pair_term = if self.t_sum == 0 { 0.0 } else { self.t_sum as f64 * gamma.ln() };
        -beta * self.area(gamma) + self.n as f64 * beta.ln() + pair_term
    }

    fn beta_given_gamma(&self, gamma: f64) -> f64 {
        self.n as f64 / self.area(gamma)
    }
}

/// Neighbour tables for one pattern and quadrature resolution, reusable over radii.
struct PlContext {
    n: usize,
    cell_area: f64,
    quad: DistanceTable,
    data: DistanceTable,
}

impl PlContext {
    fn new(p: &PointPattern, quad: usize, reach: f64) -> Result<Self> {
        if quad < MIN_QUAD {
            return Err(Error::InvalidArgument(format!("quadrature resolution must be at least {MIN_QUAD}, got {quad}")));
        }
        let w = p.window();
        let pts = p.points();
        let index = CellIndex::new(pts, w, reach);
        let reach2 = reach * reach;
        let (dx, dy) = (w.width() / quad as f64, w.height() / quad as f64);
        let probes = (0..quad).flat_map(move |j| {
            (0..quad).map(move |i| (Point::new(w.x_min() + (i as f64 + 0.5) * dx, w.y_min() + (j as f64 + 0.5) * dy), None))
        });
        let quad_table = DistanceTable::build(pts, &index, probes, reach2);
        let data_table = DistanceTable::build(pts, &index, pts.iter().enumerate().map(|(i, &u)| (u, Some(i))), reach2);
        Ok(Self { n: p.n(), cell_area: dx * dy, quad: quad_table, data: data_table })
    }

    fn terms(&self, r: f64, h: f64) -> PlTerms {
        let (r2, h2) = (r * r, h * h);
        let count = |row: &[f64]| -> Option<usize> {
            if row.iter().any(|&d| d < h2) {
                None
            } else {
                Some(row.iter().filter(|&&d| d <= r2).count())
            }
        };
        let mut weight_by_t = Vec::new();
        for row in self.quad.rows() {
            if let Some(t) = count(row) {
                if t >= weight_by_t.len() {
                    weight_by_t.resize(t + 1, 0.0);
                }
                weight_by_t[t] += self.cell_area;
            }
        }
        let mut t_sum = 0;
        let mut infeasible = false;
        for row in self.data.rows() {
            match count(row) {
                Some(t) => t_sum += t as u64,
                None => infeasible = true,
            }
        }
        PlTerms { n: self.n, weight_by_t, t_sum, infeasible }
    }
}

fn strauss_radii(m: &ModelSpec) -> Result<(f64, f64, f64, f64)> {
    match *m {
        ModelSpec::Strauss { beta, gamma, r, hardcore } => Ok((beta, gamma, r, hardcore)),
        _ => Err(Error::InvalidModel("pseudo-likelihood is defined for Strauss specifications only".into())),
    }
}

/// Log pseudo-likelihood of `p` under the Strauss spec `m`.
///
/// Returns `f64::NEG_INFINITY` when an observed point lies inside the hard core of
/// another, which is the only way the conditional intensity of a data point is zero.
pub fn log_pseudo_likelihood(p: &PointPattern, m: &ModelSpec, quad: usize) -> Result<f64> {
    m.validate()?;
    let (beta, gamma, r, h) = strauss_radii(m)?;
    let ctx = PlContext::new(p, quad, r.max(h))?;
    Ok(ctx.terms(r, h).log_pl(beta, gamma))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mple {
    pub beta: f64,
    pub gamma: f64,
    pub log_pl: f64,
    /// γ̂ ended within 1e-6 of 0 or 1.
    pub gamma_at_boundary: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MpleOptions {
    /// Hold γ at this value and maximize over β only.
    pub fix_gamma: Option<f64>,
}

/// Maximum pseudo-likelihood estimate of `(β, γ)` at fixed radii.
pub fn mple(p: &PointPattern, r: f64, h: f64, quad: usize) -> Result<Mple> {
    mple_with(p, r, h, quad, MpleOptions::default())
}

pub fn mple_with(p: &PointPattern, r: f64, h: f64, quad: usize, opts: MpleOptions) -> Result<Mple> {
    check_radii(r, h)?;
    if p.is_empty() {
        return Err(Error::TooFewPoints(0));
    }
    let ctx = PlContext::new(p, quad, r.max(h))?;
    let terms = ctx.terms(r, h);
    if terms.infeasible {
        return Err(Error::InvalidArgument(format!("observed pattern violates hard-core radius {h}")));
    }
    let fit = maximize(&terms, opts.fix_gamma)?;
    if fit.gamma_at_boundary && opts.fix_gamma.is_none() {
        log::warn!("pseudo-likelihood maximized at gamma = {} (boundary) for R = {r}, h = {h}", fit.gamma);
    }
    Ok(fit)
}

fn check_radii(r: f64, h: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("interaction radius must be positive, got {r}")));
    }
    if !(h >= 0.0) || (h > 0.0 && h >= r) {
        return Err(Error::InvalidArgument(format!("hardcore radius {h} must lie in [0, R={r})")));
    }
    Ok(())
}


fn expit(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn maximize(terms: &PlTerms, fix_gamma: Option<f64>) -> Result<Mple> {
    let finish = |gamma: f64| {
        let beta = terms.beta_given_gamma(gamma);
        let log_pl = terms.log_pl(beta, gamma);
        Mple { beta, gamma, log_pl, gamma_at_boundary: gamma <= GAMMA_FLOOR + 1e-6 || gamma >= 1.0 - 1e-6 }
    };
    if let Some(g) = fix_gamma {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::InvalidArgument(format!("fixed gamma must lie in [0, 1], got {g}")));
        }
        return Ok(finish(g.max(GAMMA_FLOOR)));
    }

    // coarse grid over logit γ with β at its conditional optimum
    let profiled = |g: f64| terms.log_pl(terms.beta_given_gamma(g), g);
    let mut best_z = 0.0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=72 {
        let z = -18.0 + 0.5 * k as f64;
        let v = profiled(expit(z).max(GAMMA_FLOOR));
        if v > best {
            best = v;
            best_z = z;
        }
    }

    // joint local refinement in (log β, logit γ)
    let objective = |x: &[f64]| -terms.log_pl(x[0].exp(), expit(x[1]).max(GAMMA_FLOOR));
    let start = [terms.beta_given_gamma(expit(best_z).max(GAMMA_FLOOR)).ln(), best_z];
    let (x, _) = nelder_mead(objective, &start, &[0.1, 0.5], 1e-12, 2000);

    // β has a closed form given γ; compare against both ends of the γ range
    let mut fit = finish(expit(x[1]).max(GAMMA_FLOOR));
    for g in [GAMMA_FLOOR, 1.0] {
        let cand = finish(g);
        if cand.log_pl > fit.log_pl {
            fit = cand;
        }
    }
    if !fit.log_pl.is_finite() {
        return Err(Error::Numerical("pseudo-likelihood maximization produced a non-finite value".into()));
    }
    Ok(fit)
}

/// Downhill simplex minimization. Returns the best vertex and its value.
pub(crate) fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], ftol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        if (values[d] - values[0]).abs() <= ftol * (values[0].abs() + ftol) {
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|k| simplex[..d].iter().map(|v| v[k]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..d).map(|k| centroid[k] + t * (simplex[d][k] - centroid[k])).collect() };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
        } else {
            let contracted = if fr < values[d] { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            if fc < values[d].min(fr) {
                simplex[d] = contracted;
                values[d] = fc;
            } else {
                for i in 1..=d {
                    for k in 0..d {
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[best].clone(), values[best])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub r: f64,
    pub h: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Maximized log pseudo-likelihood; `-inf` when the data violate the hard core.
    pub log_pl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileResult {
    pub entries: Vec<ProfileEntry>,
    pub best: usize,
}

impl ProfileResult {
    pub fn best_entry(&self) -> &ProfileEntry {
        &self.entries[self.best]
    }

    pub fn r_hat(&self) -> f64 {
        self.best_entry().r
    }

    pub fn h_hat(&self) -> f64 {
        self.best_entry().h
    }
}

/// Maximized log pseudo-likelihood over every valid `(R, h)` pair of the grids.
///
/// Pairs with `0 < h ≥ R` are skipped. Ties resolve to the smallest `(R, h)`.
pub fn profile_radius(p: &PointPattern, r_grid: &[f64], h_grid: &[f64], quad: usize) -> Result<ProfileResult> {
    if r_grid.is_empty() || h_grid.is_empty() {
        return Err(Error::InvalidArgument("profile grids must be nonempty".into()));
    }
    if p.is_empty() {
        return Err(Error::TooFewPoints(0));
    }
    let mut pairs = Vec::new();
    for &r in r_grid {
        for &h in h_grid {
            if !(r > 0.0 && r.is_finite() && h >= 0.0) {
                return Err(Error::InvalidArgument(format!("invalid profile candidate (R={r}, h={h})")));
            }
            if h == 0.0 || h < r {
                pairs.push((r, h));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no (R, h) candidate satisfies h < R".into()));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();

    let reach = pairs.iter().map(|&(r, h)| r.max(h)).fold(0.0, f64::max);
    let ctx = PlContext::new(p, quad, reach)?;
    let entries = pairs
        .par_iter()
        .map(|&(r, h)| {
            let terms = ctx.terms(r, h);
            if terms.infeasible {
                return Ok(ProfileEntry { r, h, beta: f64::NAN, gamma: f64::NAN, log_pl: f64::NEG_INFINITY });
            }
            let fit = maximize(&terms, None)?;
            Ok(ProfileEntry { r, h, beta: fit.beta, gamma: fit.gamma, log_pl: fit.log_pl })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut best = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.log_pl > entries[best].log_pl {
            best = i;
        }
    }
    if entries[best].log_pl == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument("every profile candidate violates the hard core".into()));
    }
    Ok(ProfileResult { entries, best })
}
