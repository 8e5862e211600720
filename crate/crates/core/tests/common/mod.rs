//! Property checks with independent oracles, shared by the acceptance runner.
//!
//! Each check returns a one-line detail on success and a reason on failure.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use repulsive::abc::{inverse_transform, lasso_fit, transform_params, LassoConfig, PriorSpec};
use repulsive::assess::{mc_p_value, mc_test, rps_single};
use repulsive::cli::{execute, Command, RunConfig};
use repulsive::model::{alpha_max, sigma_max, ModelKind, ModelSpec};
use repulsive::pattern::{close_pair_count, k_hat, Point, PointPattern, Window};
use repulsive::rng::{from_seed, substream};
use repulsive::simulate::{build_spectral_approx, simulate, SimControls};

pub type CheckResult = Result<String, String>;

pub struct Check {
    pub name: &'static str,
    pub run: fn() -> CheckResult,
}

pub fn property_checks() -> Vec<Check> {
    vec![
        Check { name: "s_R equals brute-force pair count", run: pair_count_brute_force },
        Check { name: "HPP K within 5% of pi r^2", run: hpp_k_unbiased },
        Check { name: "Strauss gamma=1 counts are Poisson", run: strauss_gamma_one_is_poisson },
        Check { name: "hard core respected in every run", run: hardcore_min_distance },
        Check { name: "DPP eigenvalue trace in [0.99, 1] tau|D|", run: dpp_trace_identity },
        Check { name: "DPP empirical K below Poisson", run: dpp_repulsion },
        Check { name: "lasso at zero penalty equals OLS", run: lasso_zero_is_ols },
        Check { name: "rps hand oracles", run: rps_hand_oracles },
        Check { name: "mc_test rank extremes", run: mc_test_extremes },
        Check { name: "transform round trip", run: transform_round_trip },
        Check { name: "seeded runs are byte-identical", run: seed_determinism },
    ]
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: repulsive::Error) -> String {
    e.to_string()
}

pub fn uniform_pattern<R: Rng>(n: usize, w: &Window, rng: &mut R) -> PointPattern {
    let pts = (0..n)
        .map(|_| Point::new(rng.random_range(w.x_min()..w.x_max()), rng.random_range(w.y_min()..w.y_max())))
        .collect();
    PointPattern::new(pts, *w).unwrap()
}

pub fn brute_pairs(p: &PointPattern, r: f64) -> u64 {
    let pts = p.points();
    let mut c = 0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let (dx, dy) = (pts[i].x - pts[j].x, pts[i].y - pts[j].y);
            if dx * dx + dy * dy <= r * r {
                c += 1;
            }
        }
    }
    c
}

fn pair_count_brute_force() -> CheckResult {
    let mut rng = from_seed(101);
    let w = Window::new(0.0, 2.0, -1.0, 0.5).unwrap();
    for case in 0..100 {
        let n = rng.random_range(0..=500);
        let p = uniform_pattern(n, &w, &mut rng);
        let r = rng.random_range(0.001..0.6);
        let (fast, slow) = (close_pair_count(&p, r), brute_pairs(&p, r));
        ensure(fast == slow, || format!("case {case}: n={n} r={r}: {fast} vs {slow}"))?;
    }
    Ok("100 patterns, n <= 500".into())
}

fn hpp_k_unbiased() -> CheckResult {
    let w = Window::unit();
    let m = ModelSpec::Hpp { lambda: 100.0 };
    let radii = [0.05, 0.1];
    let mut sums = [0.0; 2];
    for s in 0..500 {
        let p = simulate(&m, &w, &mut substream(202, &[s])).map_err(e2s)?;
        for (k, &r) in radii.iter().enumerate() {
            sums[k] += k_hat(&p, r).map_err(e2s)?;
        }
    }
    let mut detail = Vec::new();
    for (k, &r) in radii.iter().enumerate() {
        let rel = (sums[k] / 500.0) / (PI * r * r) - 1.0;
        ensure(rel.abs() < 0.05, || format!("r={r}: relative error {rel:.4}"))?;
        detail.push(format!("r={r}: {rel:+.4}"));
    }
    Ok(format!("500 sims, {}", detail.join(", ")))
}

/// Poisson CDF by the pmf recurrence.
pub fn poisson_cdf(mean: f64, k_max: usize) -> Vec<f64> {
    let mut pmf = (-mean).exp();
    let mut acc = pmf;
    let mut out = vec![acc];
    for k in 1..=k_max {
        pmf *= mean / k as f64;
        acc += pmf;
        out.push(acc);
    }
    out
}

fn strauss_gamma_one_is_poisson() -> CheckResult {
    let w = Window::unit();
    let m = ModelSpec::strauss(100.0, 1.0, 0.05);
    let reps = 500;
    let counts: Vec<usize> =
        (0..reps).map(|s| simulate(&m, &w, &mut substream(303, &[s])).map(|p| p.n())).collect::<Result<_, _>>().map_err(e2s)?;
    let k_max = *counts.iter().max().unwrap();
    let cdf = poisson_cdf(100.0, k_max);
    let mut ks: f64 = 0.0;
    for (k, &f) in cdf.iter().enumerate() {
        let emp = counts.iter().filter(|&&c| c <= k).count() as f64 / reps as f64;
        ks = ks.max((emp - f).abs());
    }
    // 5% Kolmogorov critical value; conservative for a discrete law
    let crit = 1.358 / (reps as f64).sqrt();
    let mean = counts.iter().sum::<usize>() as f64 / reps as f64;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    ensure(ks < crit, || format!("KS distance {ks:.4} >= {crit:.4} (mean {mean:.2}, var {var:.2})"))?;
    ensure((mean - 100.0).abs() < 4.0 * (100.0 / reps as f64).sqrt(), || format!("mean count {mean:.2}"))?;
    Ok(format!("500 runs, KS {ks:.4} < {crit:.4}, mean {mean:.2}, var {var:.2}"))
}

fn hardcore_min_distance() -> CheckResult {
    let w = Window::unit();
    let specs = [
        ModelSpec::Strauss { beta: 300.0, gamma: 0.5, r: 0.05, hardcore: 0.02 },
        ModelSpec::Strauss { beta: 500.0, gamma: 1.0, r: 0.03, hardcore: 0.025 },
        ModelSpec::Strauss { beta: 200.0, gamma: 0.0, r: 0.04, hardcore: 0.0 },
    ];
    let mut runs = 0;
    for (i, m) in specs.iter().enumerate() {
        let ModelSpec::Strauss { r, hardcore, gamma, .. } = *m else { unreachable!() };
        let limit = if gamma == 0.0 { r } else { hardcore };
        for s in 0..40 {
            let p = simulate(m, &w, &mut substream(404, &[i as u64, s])).map_err(e2s)?;
            if let Some(d) = p.min_pair_distance() {
                ensure(d >= limit, || format!("{m:?}: pair at distance {d} < {limit}"))?;
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs"))
}

fn dpp_trace_identity() -> CheckResult {
    let w = Window::unit();
    let specs = [
        ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 },
        ModelSpec::DppGauss { tau: 100.0, sigma: sigma_max(100.0) },
        ModelSpec::DppGauss { tau: 500.0, sigma: 0.01 },
        ModelSpec::DppPowerExp { tau: 100.0, alpha: 0.1, nu: 10.0 },
        ModelSpec::DppPowerExp { tau: 100.0, alpha: alpha_max(100.0, 10.0), nu: 10.0 },
        ModelSpec::DppPowerExp { tau: 250.0, alpha: 0.05, nu: 2.0 },
    ];
    for m in &specs {
        let a = build_spectral_approx(m, &w).map_err(e2s)?;
        let trace: f64 = a.eigenvalues().iter().sum();
        let tau = m.free_params()[0];
        let ratio = trace / (tau * w.area());
        ensure((0.99..=1.0 + 1e-9).contains(&ratio), || format!("{m:?}: trace ratio {ratio}"))?;
    }
    Ok(format!("{} kernels", specs.len()))
}

fn dpp_repulsion() -> CheckResult {
    let w = Window::unit();
    let m = ModelSpec::DppGauss { tau: 100.0, sigma: 0.05 };
    let r = 0.02;
    let mut sum = 0.0;
    for s in 0..500 {
        let p = simulate(&m, &w, &mut substream(505, &[s])).map_err(e2s)?;
        sum += k_hat(&p, r).map_err(e2s)?;
    }
    let mean = sum / 500.0;
    ensure(mean < PI * r * r, || format!("mean K({r}) = {mean:.3e} >= {:.3e}", PI * r * r))?;
    Ok(format!("mean K(0.02) = {mean:.3e} < {:.3e}", PI * r * r))
}

/// Ordinary least squares with intercept by Gauss-Jordan elimination on the normal equations.
pub fn ols_normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &t) in x.iter().zip(y) {
        let z: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for i in 0..p {
            for j in 0..p {
                a[i][j] += z[i] * z[j];
            }
            a[i][p] += z[i] * t;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for i in 0..p {
            if i != c {
                let f = a[i][c] / a[c][c];
                for j in c..=p {
                    a[i][j] -= f * a[c][j];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

fn lasso_zero_is_ols() -> CheckResult {
    let mut rng = from_seed(606);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let p = rng.random_range(2..8);
        let x: Vec<Vec<f64>> =
            (0..300).map(|_| (0..p).map(|k| rng.random_range(-1.0..1.0) * (k + 1) as f64 + k as f64).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| 0.5 + r.iter().enumerate().map(|(k, v)| (k as f64 - 1.5) * v).sum::<f64>() + rng.random_range(-0.3..0.3)).collect();
        let (a, b) = lasso_fit(&x, &y, 0.0, &LassoConfig { tol: 1e-15, ..Default::default() }).map_err(e2s)?;
        let ols = ols_normal_equations(&x, &y);
        worst = worst.max((a - ols[0]).abs());
        for k in 0..p {
            worst = worst.max((b[k] - ols[k + 1]).abs());
        }
    }
    ensure(worst < 1e-8, || format!("max coefficient difference {worst:e}"))?;
    Ok(format!("max coefficient difference {worst:.1e}"))
}

fn rps_hand_oracles() -> CheckResult {
    let a = rps_single(&[0, 2], 1).map_err(e2s)?;
    let b = rps_single(&[5, 5, 5], 7).map_err(e2s)?;
    ensure((a - 0.5).abs() < 1e-12 && (b - 2.0).abs() < 1e-12, || format!("got {a} and {b}"))?;
    Ok("0.5 and 2".into())
}

fn mc_test_extremes() -> CheckResult {
    let lo = mc_p_value(1000, &vec![3; 999]);
    let cap = mc_p_value(4, &vec![4; 999]);
    ensure((lo - 0.002).abs() < 1e-12 && cap == 1.0, || format!("rank formula gave {lo} and {cap}"))?;

    // a tight cluster has far more close pairs than any Poisson draw; a vanishing radius ties everything at 0
    let w = Window::unit();
    let mut rng = from_seed(707);
    let cluster = Window::new(0.4, 0.45, 0.4, 0.45).unwrap();
    let y = PointPattern::new(uniform_pattern(100, &cluster, &mut rng).points().to_vec(), w).map_err(e2s)?;
    let prior = PriorSpec::parse(ModelKind::Hpp, &["gamma(200, 2)"]).map_err(e2s)?;
    let res = mc_test(&y, &prior, &[1e-12, 0.05], 999, &SimControls::default(), &mut from_seed(708)).map_err(e2s)?;
    ensure(res.p_values[0] == 1.0 && (res.p_values[1] - 0.002).abs() < 1e-12, || format!("mc_test gave {:?}", res.p_values))?;
    Ok("0.002 and capped 1".into())
}

fn transform_round_trip() -> CheckResult {
    let mut rng = from_seed(808);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let tau = rng.random_range(10.0..1000.0);
        let m = match rng.random_range(0..4) {
            0 => ModelSpec::Hpp { lambda: tau },
            1 => ModelSpec::strauss(tau, rng.random_range(1e-6..1.0), 0.05),
            2 => ModelSpec::DppGauss { tau, sigma: rng.random_range(0.001..1.0) * sigma_max(tau) },
            _ => ModelSpec::DppPowerExp { tau, alpha: rng.random_range(0.001..1.0) * alpha_max(tau, 10.0), nu: 10.0 },
        };
        let back = inverse_transform(&transform_params(&m).map_err(e2s)?, &m.kind()).map_err(e2s)?;
        for (a, b) in m.free_params().iter().zip(back.free_params()) {
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    ensure(worst < 1e-12, || format!("relative error {worst:e}"))?;
    Ok(format!("1000 specs, max relative error {worst:.1e}"))
}

fn run_simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let names = execute(Command::Simulate, cfg, out).map_err(e2s)?;
    names.iter().map(|n| std::fs::read(out.join(n)).map(|b| (n.clone(), b)).map_err(|e| e.to_string())).collect()
}

fn seed_determinism() -> CheckResult {
    let text = "seed = 42\n[model]\nkind = \"strauss\"\nbeta = 200\ngamma = 0.1\nr = 0.05\n[simulate]\ncount = 3\nl_curve = true\n";
    let cfg = RunConfig::from_toml(text, Path::new(".")).map_err(e2s)?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = run_simulate(&cfg, &dir.path().join("a"))?;
    let b = run_simulate(&cfg, &dir.path().join("b"))?;
    ensure(a == b, || "two runs with the same seed differ".into())?;

    let mut other = cfg.clone();
    other.seed = Some(43);
    let c = run_simulate(&other, &dir.path().join("c"))?;
    ensure(a.iter().zip(&c).any(|(x, y)| x.0.starts_with("pattern") && x.1 != y.1), || "seed has no effect".into())?;

    let dpp = ModelSpec::DppPowerExp { tau: 100.0, alpha: 0.1, nu: 10.0 };
    let p1 = simulate(&dpp, &Window::unit(), &mut from_seed(9)).map_err(e2s)?;
    let p2 = simulate(&dpp, &Window::unit(), &mut from_seed(9)).map_err(e2s)?;
    ensure(p1 == p2, || "DPP draws differ under one seed".into())?;
    Ok(format!("{} files identical", a.len()))
}
