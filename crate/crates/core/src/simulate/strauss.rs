//! Birth-death-shift Metropolis-Hastings sampler for the Strauss / hard-core Strauss process.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hpp::{simulate_hpp, uniform_point};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::pattern::{Point, PointPattern, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StraussSimControls {
    /// Each sweep makes `ceil(β|D|)` birth, death or shift proposals.
    pub burn_in_sweeps: usize,
    pub p_birth: f64,
    pub p_death: f64,
    pub p_shift: f64,
    /// Abort when the state grows past this many points. `None` picks `50 β|D| + 1000`.
    pub max_points: Option<usize>,
}

impl Default for StraussSimControls {
    fn default() -> Self {
        Self { burn_in_sweeps: 200, p_birth: 0.4, p_death: 0.4, p_shift: 0.2, max_points: None }
    }
}

impl StraussSimControls {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_birth, self.p_death, self.p_shift];
        if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("proposal probabilities must be nonnegative and sum to 1".into()));
        }
        if !(self.p_birth > 0.0 && self.p_death > 0.0) {
            return Err(Error::InvalidArgument("birth and death probabilities must be positive".into()));
        }
        if self.burn_in_sweeps == 0 {
            return Err(Error::InvalidArgument("burn_in_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct StraussParams {
    beta: f64,
    gamma: f64,
    r2: f64,
    h2: f64,
}

impl StraussParams {
    fn from_spec(m: &ModelSpec) -> Result<(Self, f64)> {
        match *m {
            ModelSpec::Strauss { beta, gamma, r, hardcore } => {
                m.validate()?;
                Ok((Self { beta, gamma, r2: r * r, h2: hardcore * hardcore }, r))
            }
            _ => Err(Error::InvalidModel("expected a Strauss specification".into())),
        }
    }

    #[inline]
    fn intensity(&self, neighbours: Neighbours) -> f64 {
        if neighbours.blocked {
            0.0
        } else {
            self.beta * self.gamma.powi(neighbours.close as i32)
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Neighbours {
    close: usize,
    blocked: bool,
}

/// Papangelou conditional intensity `λ(u | x) = β γ^{t_R(u, x)}`, or 0 when a point
/// of `x` lies closer than the hardcore radius. Points equal to `u` are ignored.
pub fn papangelou_strauss(u: Point, p: &PointPattern, m: &ModelSpec) -> Result<f64> {
    let (params, _) = StraussParams::from_spec(m)?;
    let mut nb = Neighbours::default();
    for q in p.points() {
        if *q == u {
            continue;
        }
        let d2 = u.dist2(*q);
        if d2 < params.h2 {
            nb.blocked = true;
        }
        if d2 <= params.r2 {
            nb.close += 1;
        }
    }
    Ok(params.intensity(nb))
}

/// Mutable point set with a cell grid for neighbour queries.
struct DynamicGrid {
    x0: f64,
    y0: f64,
    inv_cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    points: Vec<Point>,
    cell_of: Vec<u32>,
    slot: Vec<u32>,
}

impl DynamicGrid {
    fn new(w: &Window, reach: f64) -> Self {
        const MAX_CELLS: usize = 256;
        let nx = ((w.width() / reach).floor() as usize).clamp(1, MAX_CELLS);
        let ny = ((w.height() / reach).floor() as usize).clamp(1, MAX_CELLS);
        // cells are at least `reach` wide on both axes
        let cell = (w.width() / nx as f64).max(w.height() / ny as f64).max(reach);
        Self {
            x0: w.x_min(),
            y0: w.y_min(),
            inv_cell: 1.0 / cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            points: Vec::new(),
            cell_of: Vec::new(),
            slot: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    fn coords(&self, p: Point) -> (usize, usize) {
        let cx = (((p.x - self.x0) * self.inv_cell) as usize).min(self.nx - 1);
        let cy = (((p.y - self.y0) * self.inv_cell) as usize).min(self.ny - 1);
        (cx, cy)
    }

    fn insert(&mut self, p: Point) {
        let (cx, cy) = self.coords(p);
        let c = cy * self.nx + cx;
        let i = self.points.len() as u32;
        self.points.push(p);
        self.cell_of.push(c as u32);
        self.slot.push(self.cells[c].len() as u32);
        self.cells[c].push(i);
    }

    fn remove(&mut self, i: usize) {
        let c = self.cell_of[i] as usize;
        let s = self.slot[i] as usize;
        self.cells[c].swap_remove(s);
        if let Some(&moved) = self.cells[c].get(s) {
            self.slot[moved as usize] = s as u32;
        }
        let last = self.points.len() - 1;
        if i != last {
            let lc = self.cell_of[last] as usize;
            let ls = self.slot[last] as usize;
            self.cells[lc][ls] = i as u32;
        }
        self.points.swap_remove(i);
        self.cell_of.swap_remove(i);
        self.slot.swap_remove(i);
    }

    /// Neighbour statistics of `u` against all stored points except index `skip`.
    fn neighbours(&self, u: Point, skip: Option<usize>, params: &StraussParams) -> Neighbours {
        let (cx, cy) = self.coords(u);
        let mut nb = Neighbours::default();
        for gy in cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1) {
            for gx in cx.saturating_sub(1)..=(cx + 1).min(self.nx - 1) {
                for &j in &self.cells[gy * self.nx + gx] {
                    let j = j as usize;
                    if Some(j) == skip {
                        continue;
                    }
                    let d2 = u.dist2(self.points[j]);
                    if d2 < params.h2 {
                        nb.blocked = true;
                    }
                    if d2 <= params.r2 {
                        nb.close += 1;
                    }
                }
            }
        }
        nb
    }
}

/// Approximate draw from the Strauss process by running a birth-death-shift chain
/// for `ctrl.burn_in_sweeps` sweeps from a thinned Poisson(β) start.
pub fn simulate_strauss<R: Rng + ?Sized>(
    m: &ModelSpec,
    w: &Window,
    rng: &mut R,
    ctrl: &StraussSimControls,
) -> Result<PointPattern> {
    ctrl.validate()?;
    let (params, r) = StraussParams::from_spec(m)?;
    let area = w.area();
    let cap = ctrl.max_points.unwrap_or((50.0 * params.beta * area) as usize + 1000);

    // thin the Poisson(β) start to a configuration of positive density
    let mut grid = DynamicGrid::new(w, r);
    let start = simulate_hpp(params.beta, w, rng)?;
    for &p in start.points() {
        if params.intensity(grid.neighbours(p, None, &params)) > 0.0 {
            grid.insert(p);
        }
    }

    // the sweep length must not depend on the state, or the output law is biased
    let sweep = ((params.beta * area).ceil() as usize).max(1);
    let birth_cut = ctrl.p_birth;
    let death_cut = ctrl.p_birth + ctrl.p_death;
    // birth targets weigh λ|W| by the reverse-move odds p_death / p_birth
    let odds = ctrl.p_death / ctrl.p_birth;
    for _ in 0..ctrl.burn_in_sweeps {
        for _ in 0..sweep {
            let n = grid.len();
            let choice: f64 = rng.random();
            if choice < birth_cut {
                let u = uniform_point(w, rng);
                let lam = params.intensity(grid.neighbours(u, None, &params));
                if lam > 0.0 && rng.random::<f64>() * (n + 1) as f64 <= lam * area * odds {
                    grid.insert(u);
                    if grid.len() > cap {
                        return Err(Error::RunawayChain(cap));
                    }
                }
            } else if choice < death_cut {
                if n == 0 {
                    continue;
                }
                let i = rng.random_range(0..n);
                let lam = params.intensity(grid.neighbours(grid.points[i], Some(i), &params));
                if lam == 0.0 || rng.random::<f64>() * lam * area * odds <= n as f64 {
                    grid.remove(i);
                }
            } else {
                if n == 0 {
                    continue;
                }
                let i = rng.random_range(0..n);
                let u = uniform_point(w, rng);
                let old = params.intensity(grid.neighbours(grid.points[i], Some(i), &params));
                let new = params.intensity(grid.neighbours(u, Some(i), &params));
                if new > 0.0 && (old == 0.0 || rng.random::<f64>() * old <= new) {
                    grid.remove(i);
                    grid.insert(u);
                }
            }
        }
    }
    Ok(PointPattern::from_trusted(grid.points, *w))
}
