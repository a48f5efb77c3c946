//! Error-floor approximation of the degree-`d` packet loss rate from the
//! catalog of minimal stopping sets.
//!
//! Each stopping set `S` contributes `v_d(S) α(S) β(S) γ(S)` expected lost
//! degree-`d` users, where `α` counts the ways to pick its VNs among the `m`
//! users, `β` the ways to pick its CNs among the `n` slots, and `γ` is the
//! probability that the picked VNs connect to the picked CNs as `S`. All
//! products are formed in the log domain so that `n = 10^7` is harmless.

use serde::{Deserialize, Serialize};

use crate::dist::{reverse_transform_plr, DegreeDistribution};
use crate::error::{domain, Result};
use crate::math::{ln_choose, ln_factorial, ln_falling, log_sum_exp};
use crate::stopsets::{Catalog, StoppingSetRecord};

/// `ln α(S)`: `ln[m!/(m-ν)!] + Σ_d [v_d ln λ_d - ln v_d!]`. Negative infinity
/// when `m < ν` or the set needs a degree the distribution does not have.
pub fn ln_alpha(s: &StoppingSetRecord, dist: &DegreeDistribution, m: usize) -> f64 {
    ln_alpha_without(s, dist, m, None)
}

/// `ln α(S)` with one factor `λ_d` divided out, which stays finite as
/// `λ_d -> 0` when `v_d(S) >= 1`.
fn ln_alpha_without(s: &StoppingSetRecord, dist: &DegreeDistribution, m: usize, drop: Option<usize>) -> f64 {
    let mut acc = ln_falling(m as u64, s.nu as u64);
    for (d, &v) in s.profile.iter().enumerate().skip(1) {
        let v = v - usize::from(drop == Some(d) && v > 0);
        if v == 0 {
            continue;
        }
        let lam = dist.get(d);
        if lam == 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += v as f64 * lam.ln();
    }
    acc - s.profile.iter().map(|&v| ln_factorial(v as u64)).sum::<f64>()
}

pub fn alpha(s: &StoppingSetRecord, dist: &DegreeDistribution, m: usize) -> f64 {
    ln_alpha(s, dist, m).exp()
}

/// `β(S) = C(n, μ)`.
pub fn beta(s: &StoppingSetRecord, n: usize) -> Result<f64> {
    if n < s.mu {
        return domain(format!("{n} slots cannot host a stopping set with {} CNs", s.mu));
    }
    Ok(ln_beta(s, n).exp())
}

fn ln_beta(s: &StoppingSetRecord, n: usize) -> f64 {
    ln_choose(n as u64, s.mu as u64)
}

/// `γ(S) = c(S) / Π_d C(n, d)^{v_d}`.
pub fn gamma(s: &StoppingSetRecord, n: usize) -> Result<f64> {
    if n < s.max_vn_degree() {
        return domain(format!("{n} slots are fewer than the VN degree {}", s.max_vn_degree()));
    }
    Ok(ln_gamma(s, n).exp())
}

fn ln_gamma(s: &StoppingSetRecord, n: usize) -> f64 {
    let denom: f64 = s
        .profile
        .iter()
        .enumerate()
        .map(|(d, &v)| v as f64 * ln_choose(n as u64, d as u64))
        .sum();
    (s.c as f64).ln() - denom
}

/// Lower bounds on the probability that no other user extends `S` into a
/// larger stopping set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBounds {
    /// Every outside user avoids the CNs of `S`.
    pub tight: f64,
    /// As `tight`, with every outside user taken to have degree `q`, then
    /// relaxed to `exp(-q μ m / (n - q + 1 - μ))`.
    pub loose: f64,
}

/// `graph_profile[d]` is the number of degree-`d` users in the frame; `q` is
/// the largest degree any user may have.
pub fn delta_bounds(s: &StoppingSetRecord, graph_profile: &[usize], q: usize, n: usize) -> Result<DeltaBounds> {
    if n < q + s.mu {
        return domain(format!("bounds need n >= q + mu, got n={n}, q={q}, mu={}", s.mu));
    }
    if graph_profile.iter().skip(q + 1).any(|&v| v > 0) {
        return domain(format!("graph profile has users above degree {q}"));
    }
    let mu = s.mu as f64;
    let nf = n as f64;
    let mut ln_tight = 0.0;
    for (d, &vg) in graph_profile.iter().enumerate() {
        let outside = vg.saturating_sub(s.v(d));
        if outside == 0 {
            continue;
        }
        let avoid: f64 = (0..d).map(|k| ((nf - mu - k as f64) / (nf - k as f64)).ln()).sum();
        ln_tight += outside as f64 * avoid;
    }
    let m: usize = graph_profile.iter().sum();
    let loose = (-(q as f64) * mu * m as f64 / (nf - q as f64 + 1.0 - mu)).exp();
    Ok(DeltaBounds { tight: ln_tight.exp(), loose })
}

/// The inputs shared by the error-floor estimates: the degree distribution
/// seen by the receiver, `m` users to decode, `n` slots, and the catalog of
/// stopping sets to sum over.
#[derive(Debug, Clone)]
pub struct EfInput<'a> {
    pub dist: DegreeDistribution,
    pub m: usize,
    pub n: usize,
    pub catalog: &'a Catalog,
}

impl<'a> EfInput<'a> {
    pub fn new(dist: DegreeDistribution, m: usize, n: usize, catalog: &'a Catalog) -> Result<Self> {
        if n < catalog.q + catalog.max_mu {
            return domain(format!(
                "frame length {n} is below q + max mu = {} for this catalog",
                catalog.q + catalog.max_mu
            ));
        }
        Ok(EfInput { dist, m, n, catalog })
    }

    /// Largest degree the catalog can estimate.
    pub fn max_degree(&self) -> usize {
        self.catalog.q
    }

    /// `ln` of the expected number of lost degree-`d` users divided by
    /// `m λ_d`, evaluated with `λ_d` cancelled analytically.
    fn ln_conditional(&self, d: usize) -> f64 {
        if self.m == 0 {
            return f64::NEG_INFINITY;
        }
        let terms: Vec<f64> = self
            .catalog
            .records
            .iter()
            .filter(|s| s.v(d) > 0)
            .map(|s| {
                (s.v(d) as f64).ln() + ln_alpha_without(s, &self.dist, self.m, Some(d)) + ln_beta(s, self.n)
                    + ln_gamma(s, self.n)
            })
            .collect();
        log_sum_exp(&terms) - (self.m as f64).ln()
    }

    fn check_degree(&self, d: usize) -> Result<()> {
        if d == 0 || d > self.max_degree() {
            return domain(format!("error-floor estimate is available for degrees 1..={}, got {d}", self.max_degree()));
        }
        Ok(())
    }

    /// Error-floor PLR of a degree-`d` user, or `None` when the distribution
    /// has no degree-`d` users.
    pub fn ef_plr(&self, d: usize) -> Result<Option<f64>> {
        self.check_degree(d)?;
        if self.dist.get(d) == 0.0 {
            return Ok(None);
        }
        Ok(Some(self.ln_conditional(d).exp().min(1.0)))
    }

    /// Per-degree PLR table `[p_0, p_1, ...]` up to `len - 1`: `p_0 = 1`, the
    /// error-floor estimate for catalog degrees (also where `λ_d = 0`, as the
    /// limit `λ_d -> 0`), and zero above the catalog.
    pub fn plr_table(&self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|d| match d {
                0 => 1.0,
                d if d <= self.max_degree() => self.ln_conditional(d).exp().min(1.0),
                _ => 0.0,
            })
            .collect()
    }

    /// `λ_0 + Σ_d λ_d p_d`, treating degrees above the catalog as loss-free.
    pub fn ef_plr_average(&self) -> EfAverage {
        let table = self.plr_table(self.dist.coeffs().len());
        let plr = self.dist.coeffs().iter().zip(&table).map(|(l, p)| l * p).sum::<f64>().min(1.0);
        let truncated_mass = self.dist.coeffs().iter().skip(self.max_degree() + 1).sum();
        EfAverage { plr, truncated_mass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfAverage {
    pub plr: f64,
    /// Probability mass on degrees the catalog cannot estimate; those users
    /// count as always decoded.
    pub truncated_mass: f64,
}

/// Exact PLR of framed slotted ALOHA, `1 - (1 - 1/n)^{ng - 1}`.
pub fn slotted_aloha_exact(n: usize, g: f64) -> f64 {
    1.0 - (1.0 - 1.0 / n as f64).powf(n as f64 * g - 1.0)
}

/// Error-floor PLR of a neighbor with original degree `l` seen by a receiver
/// of degree `r`: the broadcast induced distribution's per-degree estimates
/// mapped back through erasures and blanked slots. `m` is the number of
/// neighbors.
pub fn ef_plr_original_degree(
    original: &DegreeDistribution,
    l: usize,
    r: usize,
    eps: f64,
    m: usize,
    n: usize,
    catalog: &Catalog,
) -> Result<f64> {
    let induced = original.pec_induced(eps)?.broadcast_induced(r, n)?;
    let input = EfInput::new(induced, m, n, catalog)?;
    let table = input.plr_table(l.max(original.max_degree()) + 1);
    reverse_transform_plr(&table, l, r, eps, n)
}

/// Broadcast error-floor PLR `Σ_r λ̃_r Σ_d λ^(r)_d p^(r)_d`.
pub fn ef_plr_broadcast(original: &DegreeDistribution, eps: f64, m: usize, n: usize, catalog: &Catalog) -> Result<f64> {
    let pec = original.pec_induced(eps)?;
    let mut total = 0.0;
    for (r, &w) in original.coeffs().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let induced = pec.broadcast_induced(r, n)?;
        total += w * EfInput::new(induced, m, n, catalog)?.ef_plr_average().plr;
    }
    Ok(total.min(1.0))
}
