//! Density evolution for the peeling decoder as the frame length grows
//! without bound at fixed load.
//!
//! `ξ` is the probability that an edge is still unresolved after a decoding
//! round: `ξ_ρ = 1 - exp(-g λ'(ξ_{ρ-1}))` with `ξ_0 = 1`, and a degree-`d`
//! user stays unresolved with probability `ξ^d`.

use serde::{Deserialize, Serialize};

use crate::dist::DegreeDistribution;
use crate::error::{domain, Result};

/// Iteration and bisection controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    /// Stop when successive iterates differ by less than this.
    pub tol: f64,
    pub max_iter: usize,
    /// A fixed point below this counts as successful decoding.
    pub success: f64,
    /// Absolute precision of the threshold bisection.
    pub precision: f64,
}

impl Default for DeParams {
    fn default() -> Self {
        DeParams { tol: 1e-12, max_iter: 100_000, success: 1e-8, precision: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub xi: f64,
    /// `ξ_1, ξ_2, ...` (excluding `ξ_0 = 1`).
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn check_load(g: f64) -> Result<()> {
    if g >= 0.0 && g.is_finite() {
        Ok(())
    } else {
        domain(format!("load must be a finite non-negative number, got {g}"))
    }
}

fn step(dist: &DegreeDistribution, g: f64, xi: f64) -> f64 {
    1.0 - (-g * dist.derivative_at(xi)).exp()
}

pub fn de_fixed_point(dist: &DegreeDistribution, g: f64) -> Result<DeResult> {
    de_fixed_point_with(dist, g, &DeParams::default())
}

pub fn de_fixed_point_with(dist: &DegreeDistribution, g: f64, params: &DeParams) -> Result<DeResult> {
    check_load(g)?;
    let mut xi = 1.0;
    let mut trace = Vec::new();
    for _ in 0..params.max_iter {
        let next = step(dist, g, xi);
        trace.push(next);
        let done = (next - xi).abs() < params.tol;
        xi = next;
        if done {
            return Ok(DeResult { xi, trace, converged: true });
        }
    }
    Ok(DeResult { xi, trace, converged: false })
}

/// Whether the recursion drives `ξ` below the success level, stopping as
/// soon as the answer is known.
///
/// Without degree-1 mass, `λ'(x)/x` is non-decreasing, and `1 - e^{-y} <= y`
/// gives `f(x) <= x g λ'(ξ)/ξ` for every `x <= ξ`. Once `g λ'(ξ) < ξ` the
/// iterates therefore shrink geometrically to zero.
fn decodes(dist: &DegreeDistribution, g: f64, params: &DeParams) -> bool {
    let no_degree_one = dist.get(0) == 0.0 && dist.get(1) == 0.0;
    let mut xi = 1.0;
    for _ in 0..params.max_iter {
        let slope = g * dist.derivative_at(xi);
        let next = 1.0 - (-slope).exp();
        if next < params.success || (no_degree_one && slope < xi) {
            return true;
        }
        if (next - xi).abs() < params.tol {
            return false;
        }
        xi = next;
    }
    false
}

/// Asymptotic loss probability `ξ^d` of a degree-`d` user at load `g`.
pub fn asymptotic_plr(dist: &DegreeDistribution, g: f64, d: usize) -> Result<f64> {
    let xi = de_fixed_point(dist, g)?.xi;
    Ok(xi.powi(d as i32))
}

/// `λ_0 + Σ_d λ_d ξ^d`.
pub fn asymptotic_plr_average(dist: &DegreeDistribution, g: f64) -> Result<f64> {
    let xi = de_fixed_point(dist, g)?.xi;
    Ok(dist.coeffs().iter().enumerate().map(|(d, l)| l * xi.powi(d as i32)).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub g: f64,
    /// Why the threshold is degenerate, when it is.
    pub note: Option<String>,
}

pub fn threshold(dist: &DegreeDistribution) -> Threshold {
    threshold_with(dist, &DeParams::default())
}

/// Largest load in `[0, 1]` at which decoding succeeds, by bisection.
pub fn threshold_with(dist: &DegreeDistribution, params: &DeParams) -> Threshold {
    if dist.get(0) > 0.0 || dist.get(1) > 0.0 {
        return Threshold {
            g: 0.0,
            note: Some("users of degree 0 or 1 stay unresolved with positive probability at any load".into()),
        };
    }
    if decodes(dist, 1.0, params) {
        return Threshold { g: 1.0, note: None };
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > params.precision {
        let mid = 0.5 * (lo + hi);
        if decodes(dist, mid, params) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Threshold { g: lo, note: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Decoding fails at `g` exactly when `x = 1 - exp(-g λ'(x))` has a root
    /// in `(0, 1)`, i.e. when `g >= -ln(1 - x) / λ'(x)` for some `x`; the
    /// threshold is the infimum of that ratio.
    fn threshold_by_minimization(dist: &DegreeDistribution) -> f64 {
        let ratio = |x: f64| -(1.0 - x).ln() / dist.derivative_at(x);
        let steps = 200_000;
        let (mut best_x, mut best) = (0.5, f64::INFINITY);
        for i in 1..steps {
            let x = i as f64 / steps as f64;
            let r = ratio(x);
            if r < best {
                best = r;
                best_x = x;
            }
        }
        // Golden-section refinement around the grid minimum.
        let (mut a, mut b) = (best_x - 1.0 / steps as f64, (best_x + 1.0 / steps as f64).min(1.0 - 1e-12));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if ratio(c) < ratio(d) {
                b = d;
            } else {
                a = c;
            }
        }
        ratio(0.5 * (a + b)).min(best)
    }

    fn dist(s: &str) -> DegreeDistribution {
        s.parse().unwrap()
    }

    #[test]
    fn zero_load_resolves_in_one_step() {
        let r = de_fixed_point(&dist("x^3"), 0.0).unwrap();
        assert_eq!(r.trace[0], 0.0);
        assert_eq!(r.xi, 0.0);
        assert!(de_fixed_point(&dist("x^3"), -0.1).is_err());
    }

    #[test]
    fn two_regular_fixed_points() {
        let x2 = dist("x^2");
        assert!(de_fixed_point(&x2, 0.49).unwrap().xi < 1e-6);
        assert!(de_fixed_point(&x2, 0.51).unwrap().xi > 0.01);
    }

    #[test]
    fn thresholds_match_the_tangency_oracle() {
        for s in ["x^2", "x^3", "x^4", "x^8", "0.86x^3+0.14x^8", "0.5x^2+0.5x^4", "0.3x^2+0.2x^3+0.5x^8"] {
            let d = dist(s);
            let got = threshold(&d);
            assert!(got.note.is_none());
            let want = threshold_by_minimization(&d);
            assert!((got.g - want).abs() < 1e-3, "{s}: {} vs {want}", got.g);
        }
        assert!((threshold(&dist("x^2")).g - 0.5).abs() < 1e-3);
        assert!((threshold(&dist("x^8")).g - 0.54).abs() < 0.01);
        assert!((threshold(&dist("0.86x^3+0.14x^8")).g - 0.85).abs() < 0.02);
    }

    #[test]
    fn degree_zero_or_one_mass_has_no_threshold() {
        let t = threshold(&dist("0.1x+0.9x^3"));
        assert_eq!(t.g, 0.0);
        assert!(t.note.is_some());
        assert_eq!(threshold(&dist("0.01+0.99x^3")).g, 0.0);
    }

    #[test]
    fn padding_does_not_change_the_threshold() {
        let d = dist("0.86x^3+0.14x^8");
        assert_eq!(threshold(&d).g, threshold(&d.padded(20)).g);
    }

    #[test]
    fn per_degree_ordering() {
        let d = dist("0.5x^2+0.5x^4");
        assert_eq!(asymptotic_plr(&d, 0.9, 0).unwrap(), 1.0);
        let xi = de_fixed_point(&d, 0.9).unwrap().xi;
        assert!(xi > 0.0 && xi < 1.0);
        for k in 1..6 {
            assert!(asymptotic_plr(&d, 0.9, k + 1).unwrap() < asymptotic_plr(&d, 0.9, k).unwrap());
        }
    }

    #[test]
    fn below_and_above_threshold() {
        let d = dist("0.5x^2+0.5x^4");
        let g_star = threshold(&d).g;
        for k in 2..5 {
            assert!(asymptotic_plr(&d, g_star - 0.02, k).unwrap() < 1e-6);
            assert!(asymptotic_plr(&d, g_star + 0.02, k).unwrap() > 1e-3);
        }
    }

    fn arb_dist() -> impl Strategy<Value = DegreeDistribution> {
        prop::collection::vec(0.0f64..1.0, 7).prop_filter_map("nonzero", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-3).then(|| {
                let mut coeffs = vec![0.0, 0.0];
                coeffs.extend(w.iter().map(|x| x / total));
                DegreeDistribution::normalized(coeffs).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn trace_stays_in_range_and_decreases(d in arb_dist(), g in 0.0f64..1.5) {
            let r = de_fixed_point(&d, g).unwrap();
            for w in r.trace.windows(2) {
                prop_assert!((0.0..=1.0).contains(&w[1]));
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
        }

        #[test]
        fn threshold_agrees_with_oracle(d in arb_dist()) {
            let got = threshold(&d).g;
            let want = threshold_by_minimization(&d).min(1.0);
            prop_assert!((got - want).abs() < 2e-3, "{} vs {}", got, want);
        }
    }
}
