//! Least-squares regression of transformed parameters on features.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratio of smallest to largest singular value below which a design counts as singular.
const RANK_TOL: f64 = 1e-10;

/// One linear predictor per response component over the full feature vector;
/// features outside the active set carry zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: Vec<f64>,
    /// `coef[j][k]`: slope of component `j` on feature `k`.
    pub coef: Vec<Vec<f64>>,
}

impl LinearFit {
    pub fn predict(&self, features: &[f64]) -> Vec<f64> {
        self.intercept
            .iter()
            .zip(&self.coef)
            .map(|(a, b)| a + b.iter().zip(features).map(|(bk, x)| bk * x).sum::<f64>())
            .collect()
    }

    /// `b̂ η` without the intercept, which is exactly `θ̂ - θ̂_obs`.
    pub fn slope_part(&self, features: &[f64]) -> Vec<f64> {
        self.coef.iter().map(|b| b.iter().zip(features).map(|(bk, x)| bk * x).sum()).collect()
    }

    pub fn components(&self) -> usize {
        self.intercept.len()
    }
}

/// Column means and population standard deviations of the selected features.
pub(crate) fn column_moments(x: &[Vec<f64>], cols: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let means: Vec<f64> = cols.iter().map(|&c| x.iter().map(|r| r[c]).sum::<f64>() / n).collect();
    let sds = cols
        .iter()
        .zip(&means)
        .map(|(&c, m)| (x.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    (means, sds)
}

/// Ordinary least squares of every response column on the `active` features.
///
/// Features are standardized before solving; constant or collinear columns make
/// the design rank deficient, which is reported rather than regularized away.
pub fn least_squares(x: &[Vec<f64>], y: &[Vec<f64>], active: &[usize]) -> Result<LinearFit> {
    let rows = x.len();
    if rows == 0 || y.len() != rows {
        return Err(Error::InvalidArgument("regression needs matching, nonempty design and response".into()));
    }
    let p = x[0].len();
    let q = y[0].len();
    let ybar: Vec<f64> = (0..q).map(|j| y.iter().map(|r| r[j]).sum::<f64>() / rows as f64).collect();
    if active.is_empty() {
        return Ok(LinearFit { intercept: ybar, coef: vec![vec![0.0; p]; q] });
    }
    if rows <= active.len() {
        return Err(Error::RankDeficient);
    }
    let (means, sds) = column_moments(x, active);
    if sds.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::RankDeficient);
    }
    let design = DMatrix::from_fn(rows, active.len(), |i, k| (x[i][active[k]] - means[k]) / sds[k]);
    let response = DMatrix::from_fn(rows, q, |i, j| y[i][j] - ybar[j]);
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > RANK_TOL * smax) {
        return Err(Error::RankDeficient);
    }
    let beta = svd.solve(&response, 0.0).map_err(|e| Error::Numerical(e.to_string()))?;

    let mut coef = vec![vec![0.0; p]; q];
    let mut intercept = ybar;
    for j in 0..q {
        for (k, &c) in active.iter().enumerate() {
            let b = beta[(k, j)] / sds[k];
            coef[j][c] = b;
            intercept[j] -= b * means[k];
        }
    }
    Ok(LinearFit { intercept, coef })
}

/// Solves `G_AA b = c_A` for a small symmetric system; `None` if singular.
pub(crate) fn solve_small(g: &DMatrix<f64>, c: &DVector<f64>) -> Option<DVector<f64>> {
    g.clone().cholesky().map(|ch| ch.solve(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;
    use rand::Rng;

    #[test]
    fn exact_linear_data_recovered() {
        let mut rng = from_seed(1);
        let x: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![2.0 + 3.0 * r[0], -1.0 + 0.5 * r[2]]).collect();
        let fit = least_squares(&x, &y, &[0, 1, 2]).unwrap();
        assert!((fit.intercept[0] - 2.0).abs() < 1e-10);
        assert!((fit.coef[0][0] - 3.0).abs() < 1e-10);
        assert!(fit.coef[0][1].abs() < 1e-10 && fit.coef[0][2].abs() < 1e-10);
        assert!((fit.intercept[1] + 1.0).abs() < 1e-10 && (fit.coef[1][2] - 0.5).abs() < 1e-10);
        assert_eq!(fit.predict(&[0.0, 0.0, 0.0]), fit.intercept);
    }

    #[test]
    fn permutation_invariant() {
        let mut rng = from_seed(2);
        let x: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] - r[1] * 2.0 + rng.random::<f64>()]).collect();
        let a = least_squares(&x, &y, &[0, 1, 2, 3]).unwrap();
        let mut idx: Vec<usize> = (0..300).collect();
        idx.reverse();
        idx.swap(3, 100);
        let xp: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<Vec<f64>> = idx.iter().map(|&i| y[i].clone()).collect();
        let b = least_squares(&xp, &yp, &[0, 1, 2, 3]).unwrap();
        assert!((a.intercept[0] - b.intercept[0]).abs() < 1e-12);
        for k in 0..4 {
            assert!((a.coef[0][k] - b.coef[0][k]).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_rank_deficiency() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 2.0 * i as f64, 1.0]).collect();
        let y: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        assert!(matches!(least_squares(&x, &y, &[0, 1]), Err(Error::RankDeficient)));
        assert!(matches!(least_squares(&x, &y, &[2]), Err(Error::RankDeficient)));
        assert!(least_squares(&x, &y, &[0]).is_ok());
    }

    #[test]
    fn empty_active_set_gives_means() {
        let x = vec![vec![1.0], vec![2.0]];
        let y = vec![vec![3.0], vec![5.0]];
        let fit = least_squares(&x, &y, &[]).unwrap();
        assert_eq!(fit.intercept, vec![4.0]);
        assert_eq!(fit.coef, vec![vec![0.0]]);
    }
}
