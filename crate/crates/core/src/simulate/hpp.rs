use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::pattern::{Point, PointPattern, Window};

/// Homogeneous Poisson process: `N ~ Poisson(λ|D|)` then `N` uniform points.
pub fn simulate_hpp<R: Rng + ?Sized>(lambda: f64, w: &Window, rng: &mut R) -> Result<PointPattern> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidModel(format!("HPP intensity must be positive, got {lambda}")));
    }
    let n = Poisson::new(lambda * w.area())
        .map_err(|e| Error::Numerical(e.to_string()))?
        .sample(rng) as usize;
    let points = (0..n).map(|_| uniform_point(w, rng)).collect();
    Ok(PointPattern::from_trusted(points, *w))
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(w: &Window, rng: &mut R) -> Point {
    w.from_unit(rng.random::<f64>(), rng.random::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::from_seed;

    #[test]
    fn count_mean_and_variance() {
        let w = Window::unit();
        let mut rng = from_seed(11);
        let counts: Vec<f64> =
            (0..1000).map(|_| simulate_hpp(100.0, &w, &mut rng).unwrap().n() as f64).collect();
        let mean = counts.iter().sum::<f64>() / 1000.0;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((mean - 100.0).abs() < 3.0 * (100.0f64 / 1000.0).sqrt(), "mean {mean}");
        assert!((var - 100.0).abs() < 10.0, "variance {var}");
    }

    #[test]
    fn scales_with_area() {
        let w = Window::new(0.0, 2.0, 0.0, 3.0).unwrap();
        let mut rng = from_seed(5);
        let total: usize = (0..200).map(|_| simulate_hpp(10.0, &w, &mut rng).unwrap().n()).sum();
        let mean = total as f64 / 200.0;
        assert!((mean - 60.0).abs() < 3.0, "mean {mean}");
    }
}
