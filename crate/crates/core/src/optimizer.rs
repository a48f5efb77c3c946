//! Degree-distribution design trading the load threshold against the
//! broadcast error floor: minimize `-g*(λ̃) + η p̄(λ̃)` over distributions
//! supported on a fixed degree set.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{threshold_with, DeParams};
use crate::dist::DegreeDistribution;
use crate::efapprox::ef_plr_broadcast;
use crate::error::{check_probability, domain, Result};
use crate::graph::frame_rng;
use crate::stopsets::Catalog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    /// Degrees that may carry mass; all must be at least 2.
    pub support: Vec<usize>,
    pub eta: f64,
    /// Frame length, load, and erasure probability of the error-floor term.
    pub n: usize,
    pub g: f64,
    pub eps: f64,
    pub restarts: usize,
    /// Nelder-Mead iteration cap per restart.
    pub max_iter: usize,
    /// A restart stops when the simplex's objective values span less than this.
    pub tol: f64,
    /// Bisection precision of the threshold inside the objective. Finer than
    /// the default so the objective is not a staircase.
    pub threshold_precision: f64,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            support: vec![2, 3, 4, 8],
            eta: 0.0,
            n: 500,
            g: 0.5,
            eps: 0.0,
            restarts: 20,
            max_iter: 400,
            tol: 1e-9,
            threshold_precision: 1e-6,
            seed: 1,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() || self.support.iter().any(|&d| d < 2) {
            return domain("support degrees must be at least 2 so the threshold is defined");
        }
        let mut sorted = self.support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.support.len() {
            return domain("support degrees must be distinct");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return domain(format!("eta must be finite and non-negative, got {}", self.eta));
        }
        check_probability("erasure probability", self.eps)?;
        if self.g.is_nan() || self.g <= 0.0 {
            return domain("load must be positive");
        }
        if self.neighbors() == 0 {
            return domain("load and frame length leave no neighbors");
        }
        if self.threshold_precision.is_nan() || self.threshold_precision <= 0.0 {
            return domain("threshold precision must be positive");
        }
        Ok(())
    }

    /// Neighbors per receiver: `g n` contenders including the receiver.
    pub fn neighbors(&self) -> usize {
        ((self.g * self.n as f64).round() as usize).saturating_sub(1)
    }

    fn de_params(&self) -> DeParams {
        DeParams { precision: self.threshold_precision, ..DeParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub eta: f64,
    pub dist: DegreeDistribution,
    pub threshold: f64,
    /// Analytical broadcast error-floor PLR.
    pub ef: f64,
    pub objective: f64,
}

/// Threshold and error floor of `dist` under the configuration's frame
/// parameters.
fn evaluate(dist: &DegreeDistribution, config: &OptConfig, catalog: &Catalog) -> Result<(f64, f64)> {
    let g_star = threshold_with(dist, &config.de_params()).g;
    let ef = ef_plr_broadcast(dist, config.eps, config.neighbors(), config.n, catalog)?;
    Ok((g_star, ef))
}

/// `-g*(λ̃) + η p̄(λ̃)`.
pub fn objective(dist: &DegreeDistribution, config: &OptConfig, catalog: &Catalog) -> Result<f64> {
    let (g_star, ef) = evaluate(dist, config, catalog)?;
    Ok(scalarize(g_star, ef, config.eta))
}

fn scalarize(g_star: f64, ef: f64, eta: f64) -> f64 {
    // Skip the product at eta = 0 so the value is exactly -g*.
    if eta == 0.0 {
        -g_star
    } else {
        -g_star + eta * ef
    }
}

/// Maps free coordinates (all weights but the last) to a distribution on the
/// support: negative weights are clipped and the rest renormalized.
fn project(x: &[f64], support: &[usize]) -> DegreeDistribution {
    let last = 1.0 - x.iter().sum::<f64>();
    let mut w: Vec<f64> = x.iter().copied().chain([last]).map(|v| v.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|v| *v /= total);
    } else {
        let k = w.len();
        w.fill(1.0 / k as f64);
    }
    let terms: Vec<(usize, f64)> = support.iter().copied().zip(w).collect();
    DegreeDistribution::from_terms(&terms).expect("projected weights lie on the simplex")
}

/// Nelder-Mead with the standard reflection, expansion, contraction and
/// shrink coefficients (1, 2, 1/2, 1/2).
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], step: f64, max_iter: usize, tol: f64) -> (Vec<f64>, f64) {
    let k = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=k)
        .map(|i| {
            let mut x = start.to_vec();
            if i > 0 {
                x[i - 1] += step;
            }
            let fx = f(&x);
            (x, fx)
        })
        .collect();
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[k].1 - simplex[0].1 < tol {
            break;
        }
        let centroid: Vec<f64> =
            (0..k).map(|j| simplex[..k].iter().map(|(x, _)| x[j]).sum::<f64>() / k as f64).collect();
        let worst = simplex[k].clone();
        let reflected = combine(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = combine(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[k] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[k - 1].1 {
            simplex[k] = (reflected, fr);
        } else {
            let (toward, ft) = if fr < worst.1 { (&reflected, fr) } else { (&worst.0, worst.1) };
            let contracted = combine(&centroid, toward, 0.5);
            let fc = f(&contracted);
            if fc < ft {
                simplex[k] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    *x = combine(&best, x, 0.5);
                    *fx = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Start points: the uniform distribution, every pure distribution on the
/// support, then seeded random points of the simplex.
fn start_points(config: &OptConfig) -> Vec<Vec<f64>> {
    let s = config.support.len();
    let mut starts = vec![vec![1.0 / s as f64; s - 1]];
    for i in 0..s {
        starts.push((0..s - 1).map(|j| if j == i { 1.0 } else { 0.0 }).collect());
    }
    let mut rng = frame_rng(config.seed, 0);
    while starts.len() < config.restarts.max(1) {
        // Normalized exponentials are uniform on the simplex.
        let e: Vec<f64> = (0..s).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        starts.push(e[..s - 1].iter().map(|v| v / total).collect());
    }
    starts.truncate(config.restarts.max(1));
    starts
}

/// Best point over multi-start Nelder-Mead. Every evaluated candidate is a
/// valid distribution on the support.
pub fn optimize(config: &OptConfig, catalog: &Catalog) -> Result<TradeoffPoint> {
    config.validate()?;
    if config.support.len() == 1 {
        return point(project(&[], &config.support), config, catalog);
    }
    let f = |x: &[f64]| objective(&project(x, &config.support), config, catalog).unwrap_or(f64::INFINITY);
    let best = start_points(config)
        .into_par_iter()
        .map(|start| nelder_mead(&f, &start, 0.1, config.max_iter, config.tol))
        .reduce_with(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one restart");
    point(project(&best.0, &config.support), config, catalog)
}

fn point(dist: DegreeDistribution, config: &OptConfig, catalog: &Catalog) -> Result<TradeoffPoint> {
    let (threshold, ef) = evaluate(&dist, config, catalog)?;
    Ok(TradeoffPoint { eta: config.eta, dist, threshold, ef, objective: scalarize(threshold, ef, config.eta) })
}

/// One optimization per `η`, sorted by threshold. Because the solver is
/// local, each `η` then keeps the best distribution found for any `η` in the
/// sweep, which rules out points that dominate each other.
pub fn tradeoff_sweep(etas: &[f64], config: &OptConfig, catalog: &Catalog) -> Result<Vec<TradeoffPoint>> {
    let found = etas
        .iter()
        .map(|&eta| optimize(&OptConfig { eta, ..config.clone() }, catalog))
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<TradeoffPoint> = found
        .iter()
        .map(|p| {
            found
                .iter()
                .map(|cand| TradeoffPoint {
                    eta: p.eta,
                    objective: scalarize(cand.threshold, cand.ef, p.eta),
                    ..cand.clone()
                })
                .min_by(|a, b| a.objective.total_cmp(&b.objective))
                .expect("nonempty")
        })
        .collect();
    points.sort_by(|a, b| a.threshold.total_cmp(&b.threshold).then(a.eta.total_cmp(&b.eta)));
    Ok(points)
}
