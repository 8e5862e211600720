//! Lasso feature screening by cyclic coordinate descent with k-fold cross-validation.
//!
//! Features are standardized (zero mean, unit population variance) and the
//! response centered, so the objective per component is
//! `(1/2n)‖y - Xb‖² + λ‖b‖₁` and the intercept is recovered afterwards.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::regression::{column_moments, least_squares, solve_small, LinearFit};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoConfig {
    pub n_lambda: usize,
    /// Smallest penalty on the path as a fraction of the smallest all-zero penalty.
    pub lambda_min_ratio: f64,
    pub k_folds: usize,
    /// Score each penalty by the unpenalized refit on its active set (relaxed lasso)
    /// instead of the shrunken coefficients.
    pub cv_refit: bool,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { n_lambda: 100, lambda_min_ratio: 1e-4, k_folds: 5, cv_refit: true, tol: 1e-10, max_sweeps: 100_000 }
    }
}

impl LassoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_folds < 2 {
            return Err(Error::InvalidArgument("lasso cross-validation needs at least 2 folds".into()));
        }
        if self.n_lambda < 2 || !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::InvalidArgument("lasso path needs n_lambda >= 2 and lambda_min_ratio in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Standardized cross-products of a design: `G = XᵀX/n`, `c = Xᵀy/n`.
struct Gram {
    g: DMatrix<f64>,
    c: DMatrix<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
    ybar: Vec<f64>,
}

impl Gram {
    fn new(x: &[Vec<f64>], y: &[Vec<f64>], rows: &[usize]) -> Result<Self> {
        let p = x[0].len();
        let q = y[0].len();
        let sub: Vec<Vec<f64>> = rows.iter().map(|&i| x[i].clone()).collect();
        let (means, sds) = column_moments(&sub, &(0..p).collect::<Vec<_>>());
        if sds.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::RankDeficient);
        }
        let n = rows.len() as f64;
        let ybar: Vec<f64> = (0..q).map(|j| rows.iter().map(|&i| y[i][j]).sum::<f64>() / n).collect();
        let mut g = DMatrix::zeros(p, p);
        let mut c = DMatrix::zeros(p, q);
        let mut z = vec![0.0; p];
        for &i in rows {
            for k in 0..p {
                z[k] = (x[i][k] - means[k]) / sds[k];
            }
            for a in 0..p {
                for b in a..p {
                    g[(a, b)] += z[a] * z[b];
                }
                for j in 0..q {
                    c[(a, j)] += z[a] * (y[i][j] - ybar[j]);
                }
            }
        }
        for a in 0..p {
            for b in a..p {
                g[(a, b)] /= n;
                g[(b, a)] = g[(a, b)];
            }
        }
        c /= n;
        Ok(Self { g, c, means, sds, ybar })
    }

    fn p(&self) -> usize {
        self.g.nrows()
    }

    /// Coordinate descent for component `j` at penalty `lambda`, warm-started from `beta`.
    fn descend(&self, j: usize, lambda: f64, beta: &mut [f64], tol: f64, max_sweeps: usize) {
        let p = self.p();
        for _ in 0..max_sweeps {
            let mut max_step: f64 = 0.0;
            for k in 0..p {
                let mut partial = self.c[(k, j)];
                for l in 0..p {
                    if l != k {
                        partial -= self.g[(k, l)] * beta[l];
                    }
                }
                let updated = soft_threshold(partial, lambda) / self.g[(k, k)];
                max_step = max_step.max((updated - beta[k]).abs());
                beta[k] = updated;
            }
            if max_step < tol {
                break;
            }
        }
    }

    /// Unpenalized least squares restricted to the nonzero entries of `beta`.
    fn refit(&self, j: usize, beta: &[f64]) -> Option<Vec<f64>> {
        let active: Vec<usize> = (0..self.p()).filter(|&k| beta[k] != 0.0).collect();
        let mut out = vec![0.0; self.p()];
        if active.is_empty() {
            return Some(out);
        }
        let g = DMatrix::from_fn(active.len(), active.len(), |a, b| self.g[(active[a], active[b])]);
        let c = DVector::from_fn(active.len(), |a, _| self.c[(active[a], j)]);
        let sol = solve_small(&g, &c)?;
        for (a, &k) in active.iter().enumerate() {
            out[k] = sol[a];
        }
        Some(out)
    }

    /// Converts standardized slopes to raw-scale intercept and slopes.
    fn unstandardize(&self, j: usize, beta: &[f64]) -> (f64, Vec<f64>) {
        let slopes: Vec<f64> = beta.iter().zip(&self.sds).map(|(b, s)| b / s).collect();
        let intercept = self.ybar[j] - slopes.iter().zip(&self.means).map(|(b, m)| b * m).sum::<f64>();
        (intercept, slopes)
    }

    fn lambda_max(&self) -> f64 {
        self.c.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Single-response lasso at a fixed penalty on raw features, returning the raw-scale
/// intercept and slopes.
pub fn lasso_fit(x: &[Vec<f64>], y: &[f64], lambda: f64, cfg: &LassoConfig) -> Result<(f64, Vec<f64>)> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument("lasso needs matching, nonempty design and response".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lasso penalty must be nonnegative, got {lambda}")));
    }
    let ys: Vec<Vec<f64>> = y.iter().map(|&v| vec![v]).collect();
    let rows: Vec<usize> = (0..x.len()).collect();
    let gram = Gram::new(x, &ys, &rows)?;
    let mut beta = vec![0.0; gram.p()];
    gram.descend(0, lambda, &mut beta, cfg.tol, cfg.max_sweeps);
    Ok(gram.unstandardize(0, &beta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoSelection {
    /// Union over components of features with a nonzero coefficient at the chosen penalty.
    pub active: Vec<usize>,
    /// Cross-validated penalty per component (standardized scale).
    pub lambda: Vec<f64>,
    /// Shrunken coefficients at the chosen penalties.
    pub penalized: LinearFit,
    /// Unpenalized least squares on the union active set.
    pub refit: LinearFit,
    /// No feature survived and the first feature was kept instead.
    pub fallback: bool,
}

fn lambda_grid(max: f64, cfg: &LassoConfig) -> Vec<f64> {
    let n = cfg.n_lambda;
    (0..n).map(|i| max * cfg.lambda_min_ratio.powf(i as f64 / (n - 1) as f64)).collect()
}

/// Per-component cross-validated lasso; see [`LassoSelection`].
pub fn lasso_select(x: &[Vec<f64>], y: &[Vec<f64>], cfg: &LassoConfig) -> Result<LassoSelection> {
    cfg.validate()?;
    let n = x.len();
    if n < 2 * cfg.k_folds || y.len() != n {
        return Err(Error::InvalidArgument("too few rows for lasso cross-validation".into()));
    }
    let p = x[0].len();
    let q = y[0].len();
    let all: Vec<usize> = (0..n).collect();
    let full = Gram::new(x, y, &all)?;

    let folds: Vec<(Gram, Vec<usize>)> = (0..cfg.k_folds)
        .map(|f| {
            let train: Vec<usize> = all.iter().copied().filter(|i| i % cfg.k_folds != f).collect();
            let test: Vec<usize> = all.iter().copied().filter(|i| i % cfg.k_folds == f).collect();
            Gram::new(x, y, &train).map(|g| (g, test))
        })
        .collect::<Result<_>>()?;

    let mut lambdas = Vec::with_capacity(q);
    let mut penalized = LinearFit { intercept: vec![0.0; q], coef: vec![vec![0.0; p]; q] };
    let mut active_mask = vec![false; p];
    for j in 0..q {
        let grid = lambda_grid(full.lambda_max().max(f64::MIN_POSITIVE), cfg);
        let mut cv_err = vec![0.0; grid.len()];
        for (gram, test) in &folds {
            let mut beta = vec![0.0; p];
            for (li, &lam) in grid.iter().enumerate() {
                gram.descend(j, lam, &mut beta, cfg.tol, cfg.max_sweeps);
                let scored = if cfg.cv_refit { gram.refit(j, &beta) } else { Some(beta.clone()) };
                let Some(b) = scored else {
                    cv_err[li] = f64::INFINITY;
                    continue;
                };
                let (a0, slopes) = gram.unstandardize(j, &b);
                cv_err[li] += test
                    .iter()
                    .map(|&i| {
                        let pred = a0 + slopes.iter().zip(&x[i]).map(|(s, v)| s * v).sum::<f64>();
                        (y[i][j] - pred).powi(2)
                    })
                    .sum::<f64>();
            }
        }
        // first minimum along a decreasing grid favours the sparser model on ties
        let best = (0..grid.len()).fold(0, |b, i| if cv_err[i] < cv_err[b] { i } else { b });
        let mut beta = vec![0.0; p];
        for &lam in &grid[..=best] {
            full.descend(j, lam, &mut beta, cfg.tol, cfg.max_sweeps);
        }
        let (a0, slopes) = full.unstandardize(j, &beta);
        penalized.intercept[j] = a0;
        penalized.coef[j] = slopes;
        for k in 0..p {
            active_mask[k] |= beta[k] != 0.0;
        }
        lambdas.push(grid[best]);
    }

    let mut active: Vec<usize> = (0..p).filter(|&k| active_mask[k]).collect();
    let fallback = active.is_empty();
    if fallback {
        log::warn!("lasso dropped every feature; keeping feature 0 alone");
        active.push(0);
    }
    let refit = least_squares(x, y, &active)?;
    Ok(LassoSelection { active, lambda: lambdas, penalized, refit, fallback })
}
