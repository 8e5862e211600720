//! Point patterns on rectangular windows and their second-order summaries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Closed axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidWindow(format!(
                "[{x_min}, {x_max}] x [{y_min}, {y_max}] has no positive area"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    pub fn unit() -> Self {
        Self { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn min_side(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }

    /// Maps a point of the unit square onto this window.
    pub fn from_unit(&self, u: f64, v: f64) -> Point {
        // clamp guards against rounding past the far edge
        Point::new(
            (self.x_min + u * self.width()).min(self.x_max),
            (self.y_min + v * self.height()).min(self.y_max),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    points: Vec<Point>,
    window: Window,
}

impl PointPattern {
    /// Builds a pattern, rejecting any point outside the window.
    pub fn new(points: Vec<Point>, window: Window) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !window.contains(**p)) {
            return Err(Error::PointOutsideWindow { x: p.x, y: p.y });
        }
        Ok(Self { points, window })
    }

    pub fn empty(window: Window) -> Self {
        Self { points: Vec::new(), window }
    }

    /// Caller guarantees every point is inside `window`.
    pub(crate) fn from_trusted(points: Vec<Point>, window: Window) -> Self {
        debug_assert!(points.iter().all(|p| window.contains(*p)));
        Self { points, window }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_pair_distance(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min(a.dist2(*b));
            }
        }
        (self.n() >= 2).then(|| best.sqrt())
    }
}

/// Edge-correction weighting for the K-function estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KEstimator {
    /// Translation correction `|D| / ((a-|dx|)(b-|dy|))`.
    #[default]
    Translation,
    /// Plain pair counts. With a single radius this is a function of `(n, s_R)`.
    Uncorrected,
}

/// Radii at which K is evaluated, plus whether `log n` enters the summary vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    r_grid: Vec<f64>,
    pub include_log_n: bool,
    pub estimator: KEstimator,
}

impl SummaryConfig {
    /// Validates the grid: non-empty, positive, strictly increasing, and the
    /// largest radius below half the shorter window side.
    pub fn new(r_grid: Vec<f64>, window: &Window) -> Result<Self> {
        Self::check_grid(&r_grid)?;
        let cap = window.min_side() / 2.0;
        if let Some(&last) = r_grid.last() {
            if last >= cap {
                return Err(Error::InvalidArgument(format!(
                    "largest radius {last} must be below half the shorter window side ({cap})"
                )));
            }
        }
        Ok(Self { r_grid, include_log_n: true, estimator: KEstimator::Translation })
    }

    /// Like [`SummaryConfig::new`] but lets radii exceed the half-side cap, with a warning.
    pub fn new_allow_large(r_grid: Vec<f64>, window: &Window) -> Result<Self> {
        Self::check_grid(&r_grid)?;
        let cap = window.min_side() / 2.0;
        if r_grid.last().is_some_and(|&r| r >= cap) {
            log::warn!("radius grid exceeds half the shorter window side; K estimates will be noisy");
        }
        Ok(Self { r_grid, include_log_n: true, estimator: KEstimator::Translation })
    }

    /// `m` equally spaced radii `r_max/m, 2 r_max/m, ..., r_max`.
    pub fn equally_spaced(m: usize, r_max: f64, window: &Window) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("M must be at least 1".into()));
        }
        let grid = (1..=m).map(|i| r_max * i as f64 / m as f64).collect();
        Self::new(grid, window)
    }

    /// Sufficient summaries `(log n, sqrt(K_R))` for a Strauss model with radius `r`,
    /// using uncorrected pair counts so that equality is exact.
    pub fn strauss_sufficient(r: f64, window: &Window) -> Result<Self> {
        Ok(Self::new(vec![r], window)?.with_estimator(KEstimator::Uncorrected))
    }

    pub fn without_log_n(mut self) -> Self {
        self.include_log_n = false;
        self
    }

    pub fn with_estimator(mut self, estimator: KEstimator) -> Self {
        self.estimator = estimator;
        self
    }

    fn check_grid(r_grid: &[f64]) -> Result<()> {
        if r_grid.is_empty() {
            return Err(Error::InvalidArgument("radius grid is empty".into()));
        }
        if r_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidArgument("radii must be positive and finite".into()));
        }
        if r_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("radii must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn m(&self) -> usize {
        self.r_grid.len()
    }

    /// Length of the summary / feature vector.
    pub fn dim(&self) -> usize {
        self.m() + usize::from(self.include_log_n)
    }
}

/// Uniform-grid bucketing used to enumerate close pairs in roughly linear time.
pub(crate) struct CellIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    order: Vec<usize>,
}

impl CellIndex {
    pub(crate) fn new(points: &[Point], window: &Window, reach: f64) -> Self {
        // keep the grid no finer than ~4 cells per point
        let max_cells = ((2.0 * (points.len() as f64).sqrt()).ceil() as usize).max(1);
        let cell = reach.max(window.width() / max_cells as f64).max(window.height() / max_cells as f64);
        let nx = ((window.width() / cell).floor() as usize).clamp(1, max_cells);
        let ny = ((window.height() / cell).floor() as usize).clamp(1, max_cells);
        let mut idx = Self {
            x0: window.x_min(),
            y0: window.y_min(),
            cell,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            order: vec![0; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|p| idx.cell_of(*p)).collect();
        for &c in &cells {
            idx.start[c + 1] += 1;
        }
        for c in 0..nx * ny {
            idx.start[c + 1] += idx.start[c];
        }
        let mut fill = idx.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            idx.order[fill[c]] = i;
            fill[c] += 1;
        }
        idx
    }

    fn cell_of(&self, p: Point) -> usize {
        let cx = (((p.x - self.x0) / self.cell) as usize).min(self.nx - 1);
        let cy = (((p.y - self.y0) / self.cell) as usize).min(self.ny - 1);
        cy * self.nx + cx
    }

    fn members(&self, c: usize) -> &[usize] {
        &self.order[self.start[c]..self.start[c + 1]]
    }

    /// Visits every indexed point within squared distance `reach2` of `u`, where
    /// `reach2` must not exceed the squared reach the index was built with.
    pub(crate) fn for_each_near(&self, points: &[Point], u: Point, reach2: f64, mut f: impl FnMut(usize, f64)) {
        let cx = (((u.x - self.x0) / self.cell).max(0.0) as usize).min(self.nx - 1);
        let cy = (((u.y - self.y0) / self.cell).max(0.0) as usize).min(self.ny - 1);
        for oy in cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1) {
            for ox in cx.saturating_sub(1)..=(cx + 1).min(self.nx - 1) {
                for &j in self.members(oy * self.nx + ox) {
                    let d2 = points[j].dist2(u);
                    if d2 <= reach2 {
                        f(j, d2);
                    }
                }
            }
        }
    }

    /// Visits every unordered pair `(i, j)` with squared distance `<= reach2`.
    fn for_each_pair(&self, points: &[Point], reach2: f64, mut f: impl FnMut(usize, usize, f64)) {
        const FORWARD: [(isize, isize); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];
        for cy in 0..self.ny {
            for cx in 0..self.nx {
                let here = self.members(cy * self.nx + cx);
                for (a, &i) in here.iter().enumerate() {
                    for &j in &here[a + 1..] {
                        let d2 = points[i].dist2(points[j]);
                        if d2 <= reach2 {
                            f(i, j, d2);
                        }
                    }
                }
                for (dx, dy) in FORWARD {
                    let (ox, oy) = (cx as isize + dx, cy as isize + dy);
                    if ox < 0 || oy < 0 || ox >= self.nx as isize || oy >= self.ny as isize {
                        continue;
                    }
                    let other = self.members(oy as usize * self.nx + ox as usize);
                    for &i in here {
                        for &j in other {
                            let d2 = points[i].dist2(points[j]);
                            if d2 <= reach2 {
                                f(i, j, d2);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Number of unordered pairs at distance `<= r`.
pub fn close_pair_count(p: &PointPattern, r: f64) -> u64 {
    if p.n() < 2 || r <= 0.0 {
        return 0;
    }
    let index = CellIndex::new(p.points(), p.window(), r);
    let mut count = 0u64;
    index.for_each_pair(p.points(), r * r, |_, _, _| count += 1);
    count
}

/// Pair counts `s_r` at each radius of an increasing grid.
pub fn close_pair_counts(p: &PointPattern, radii: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; radii.len()];
    let Some(&r_max) = radii.last() else { return counts };
    if p.n() < 2 {
        return counts;
    }
    let sq: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let index = CellIndex::new(p.points(), p.window(), r_max);
    index.for_each_pair(p.points(), r_max * r_max, |_, _, d2| {
        let k = sq.partition_point(|&s| s < d2);
        counts[k] += 1;
    });
    for k in 1..counts.len() {
        counts[k] += counts[k - 1];
    }
    counts
}

/// Translation edge-correction weight for the pair `(xi, eta)`.
pub fn translation_correction(xi: Point, eta: Point, w: &Window) -> Result<f64> {
    let dx = (xi.x - eta.x).abs();
    let dy = (xi.y - eta.y).abs();
    if dx >= w.width() || dy >= w.height() {
        return Err(Error::DisplacementTooLarge { dx, dy });
    }
    Ok(w.area() / ((w.width() - dx) * (w.height() - dy)))
}

/// K-function estimates at each radius of an increasing grid.
pub fn k_curve(p: &PointPattern, radii: &[f64], estimator: KEstimator) -> Result<Vec<f64>> {
    let n = p.n();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("radii must be positive and increasing".into()));
    }
    let mut bins = vec![0.0; radii.len()];
    let Some(&r_max) = radii.last() else { return Ok(bins) };
    let sq: Vec<f64> = radii.iter().map(|r| r * r).collect();
    let w = p.window();
    let pts = p.points();
    let index = CellIndex::new(pts, w, r_max);
    let mut failure = None;
    index.for_each_pair(pts, r_max * r_max, |i, j, d2| {
        if d2 == 0.0 {
            return;
        }
        let weight = match estimator {
            KEstimator::Uncorrected => 1.0,
            KEstimator::Translation => match translation_correction(pts[i], pts[j], w) {
                Ok(e) => e,
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            },
        };
        bins[sq.partition_point(|&s| s < d2)] += 2.0 * weight;
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let scale = w.area() / (n as f64 * (n - 1) as f64);
    let mut acc = 0.0;
    Ok(bins
        .into_iter()
        .map(|b| {
            acc += b;
            acc * scale
        })
        .collect())
}

/// Translation-corrected Ripley K estimate at radius `r`.
pub fn k_hat(p: &PointPattern, r: f64) -> Result<f64> {
    Ok(k_curve(p, &[r], KEstimator::Translation)?[0])
}

/// Besag's L estimate, `sqrt(K/π)`.
pub fn l_hat(p: &PointPattern, r: f64) -> Result<f64> {
    Ok((k_hat(p, r)? / PI).sqrt())
}

/// `(r, L(r) - r)` over the configured grid.
pub fn l_curve(p: &PointPattern, cfg: &SummaryConfig) -> Result<Vec<(f64, f64)>> {
    let k = k_curve(p, cfg.r_grid(), KEstimator::Translation)?;
    Ok(cfg.r_grid().iter().zip(k).map(|(&r, k)| (r, (k / PI).sqrt() - r)).collect())
}

/// Number of points inside the closed rectangle `b`, which must lie within the pattern's window.
pub fn count_in_region(p: &PointPattern, b: &Window) -> Result<usize> {
    if !p.window().contains_window(b) {
        return Err(Error::InvalidArgument("region is not contained in the window".into()));
    }
    Ok(p.points().iter().filter(|q| b.contains(**q)).count())
}
