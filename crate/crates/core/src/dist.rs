//! Degree distributions and the two induced-distribution transforms: packet
//! erasures (PEC) and the half-duplex receiver that cannot listen in its own
//! transmission slots.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, domain, Error, Result};
use crate::math::{choose, ln_choose, powu};

/// Largest supported repetition degree.
pub const MAX_DEGREE: usize = 64;

/// Coefficients must sum to one within this tolerance on construction.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Probability vector `[λ0, λ1, ..., λq]` over repetition degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DegreeDistribution {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    coeffs: Vec<f64>,
}

impl TryFrom<RawDistribution> for DegreeDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        DegreeDistribution::new(raw.coeffs)
    }
}

impl From<DegreeDistribution> for RawDistribution {
    fn from(d: DegreeDistribution) -> Self {
        RawDistribution { coeffs: d.coeffs }
    }
}

impl DegreeDistribution {
    /// Validates and wraps a coefficient vector. Trailing zeros are kept, so
    /// `q` is whatever the caller wrote.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return domain("a degree distribution needs at least one coefficient");
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return domain(format!(
                "maximum degree {} exceeds the supported limit {MAX_DEGREE}",
                coeffs.len() - 1
            ));
        }
        for (d, &c) in coeffs.iter().enumerate() {
            if !(0.0..=1.0).contains(&c) {
                return domain(format!("coefficient of degree {d} is {c}, outside [0, 1]"));
            }
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return domain(format!("coefficients sum to {sum}, not 1"));
        }
        Ok(DegreeDistribution { coeffs })
    }

    /// Divides by the coefficient sum before validating. This is the only
    /// place a distribution is ever renormalized.
    pub fn normalized(coeffs: Vec<f64>) -> Result<Self> {
        let sum: f64 = coeffs.iter().sum();
        if sum.is_nan() || sum <= 0.0 || coeffs.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            return domain("cannot normalize: coefficients must be nonnegative with positive sum");
        }
        Self::new(coeffs.into_iter().map(|c| c / sum).collect())
    }

    /// All users repeat exactly `degree` times.
    pub fn regular(degree: usize) -> Result<Self> {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = 1.0;
        Self::new(coeffs)
    }

    /// Builds a distribution from `(degree, weight)` pairs.
    pub fn from_terms(terms: &[(usize, f64)]) -> Result<Self> {
        let q = terms.iter().map(|t| t.0).max().unwrap_or(0);
        let mut coeffs = vec![0.0; q + 1];
        for &(d, w) in terms {
            coeffs[d] += w;
        }
        Self::new(coeffs)
    }

    /// Skips validation; used by the transforms, whose outputs are simplex
    /// points up to rounding.
    fn from_transform(coeffs: Vec<f64>) -> Self {
        debug_assert!((coeffs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        DegreeDistribution {
            coeffs: coeffs.into_iter().map(|c| c.clamp(0.0, 1.0)).collect(),
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Maximum degree `q`.
    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Largest degree with nonzero mass.
    pub fn effective_max_degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c > 0.0).unwrap_or(0)
    }

    /// `λ_d`, zero beyond `q`.
    pub fn get(&self, d: usize) -> f64 {
        self.coeffs.get(d).copied().unwrap_or(0.0)
    }

    pub fn mean_degree(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(d, c)| d as f64 * c).sum()
    }

    /// Pads with zero coefficients up to degree `q`.
    pub fn padded(&self, q: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        if coeffs.len() < q + 1 {
            coeffs.resize(q + 1, 0.0);
        }
        DegreeDistribution { coeffs }
    }

    /// `λ(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `λ'(x)` by Horner's rule on the derivative coefficients.
    pub fn derivative_at(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (d, &c)| acc * x + d as f64 * c)
    }

    /// Distribution after each packet copy is erased independently with
    /// probability `eps`: `λ_l = Σ_{k≥l} C(k,l) eps^(k-l) (1-eps)^l λ̃_k`.
    pub fn pec_induced(&self, eps: f64) -> Result<Self> {
        check_probability("erasure probability", eps)?;
        let q = self.max_degree();
        let out = (0..=q)
            .map(|l| {
                (l..=q)
                    .map(|k| {
                        choose(k as u64, l as u64) * powu(eps, k - l) * powu(1.0 - eps, l) * self.coeffs[k]
                    })
                    .sum()
            })
            .collect();
        Ok(Self::from_transform(out))
    }

    /// Distribution seen by a receiver of degree `r` in an `n`-slot frame:
    /// a user keeps only the copies that avoid the receiver's `r` slots.
    pub fn broadcast_induced(&self, r: usize, n: usize) -> Result<Self> {
        let q = self.max_degree();
        if r > n {
            return domain(format!("receiver degree {r} exceeds frame length {n}"));
        }
        if n < q {
            return domain(format!("frame length {n} is shorter than the maximum degree {q}"));
        }
        let out = (0..=q)
            .map(|d| {
                (d..=q.min(r + d))
                    .map(|l| hypergeometric(n, r, l, d) * self.coeffs[l])
                    .sum()
            })
            .collect();
        Ok(Self::from_transform(out))
    }
}

/// Probability that a degree-`l` user keeps exactly `d` edges when a receiver
/// blanks `r` of `n` slots: `C(n-r, d) C(r, l-d) / C(n, l)`.
pub fn hypergeometric(n: usize, r: usize, l: usize, d: usize) -> f64 {
    if d > l || l > n {
        return 0.0;
    }
    let (n, r, l, d) = (n as u64, r as u64, l as u64, d as u64);
    let lw = ln_choose(n - r, d) + ln_choose(r, l - d) - ln_choose(n, l);
    if lw == f64::NEG_INFINITY {
        0.0
    } else {
        lw.exp()
    }
}

/// Loss probability of a user with *original* degree `l`, given the loss
/// probabilities `p_table[d]` of users with induced degree `d` at a receiver
/// of degree `r`. Undoes the erasure and receiver-view transforms.
pub fn reverse_transform_plr(p_table: &[f64], l: usize, r: usize, eps: f64, n: usize) -> Result<f64> {
    check_probability("erasure probability", eps)?;
    if p_table.len() <= l {
        return domain(format!("PLR table covers degrees 0..{} but degree {l} was requested", p_table.len().saturating_sub(1)));
    }
    if let Some((d, p)) = p_table.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return domain(format!("PLR of degree {d} is {p}, outside [0, 1]"));
    }
    if p_table[0] != 1.0 {
        return domain("a degree-0 user is never resolved: the table entry for degree 0 must be 1");
    }
    if r > n || l > n {
        return domain(format!("degrees must not exceed the frame length {n}"));
    }
    let total: f64 = (0..=l)
        .map(|k| {
            let pec = choose(l as u64, k as u64) * powu(eps, l - k) * powu(1.0 - eps, k);
            let inner: f64 = (k.saturating_sub(r)..=k)
                .map(|d| hypergeometric(n, r, k, d) * p_table[d])
                .sum();
            pec * inner
        })
        .sum();
    Ok(total.clamp(0.0, 1.0))
}

impl FromStr for DegreeDistribution {
    type Err = Error;

    /// Accepts either `{"coeffs": [...]}` or a polynomial such as
    /// `0.5x^2 + 0.5x^4`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        parse_polynomial(s)
    }
}

fn parse_polynomial(s: &str) -> Result<DegreeDistribution> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = compact.as_bytes();
    for i in 1..=bytes.len() {
        let split = i == bytes.len() || (bytes[i] == b'+' && !matches!(bytes[i - 1], b'e' | b'E'));
        if split {
            terms.push(parse_term(&compact[start..i])?);
            start = i + 1;
        }
    }
    DegreeDistribution::from_terms(&terms)
}

fn parse_term(t: &str) -> Result<(usize, f64)> {
    let bad = || Error::Parse(format!("cannot parse polynomial term '{t}'"));
    match t.find('x') {
        None => Ok((0, t.parse().map_err(|_| bad())?)),
        Some(pos) => {
            let coef = t[..pos].trim_end_matches('*');
            let weight = if coef.is_empty() { 1.0 } else { coef.parse().map_err(|_| bad())? };
            let power = &t[pos + 1..];
            let degree = if power.is_empty() {
                1
            } else {
                power.strip_prefix('^').ok_or_else(bad)?.parse().map_err(|_| bad())?
            };
            if degree > MAX_DEGREE {
                return Err(Error::Parse(format!("degree {degree} exceeds {MAX_DEGREE}")));
            }
            Ok((degree, weight))
        }
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match d {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}x")?,
                _ => write!(f, "{c}x^{d}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> DegreeDistribution {
        "0.5x^2+0.5x^4".parse().unwrap()
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (d, (g, w)) in got.iter().zip(want).enumerate() {
            assert!((g - w).abs() <= tol, "degree {d}: {g} vs {w}");
        }
    }

    #[test]
    fn parses_both_literal_formats() {
        let a = example();
        let b: DegreeDistribution = r#"{"coeffs": [0, 0, 0.5, 0, 0.5]}"#.parse().unwrap();
        assert_eq!(a, b);
        let c: DegreeDistribution = "0.86 x^3 + 0.14*x^8".parse().unwrap();
        assert_eq!(c.max_degree(), 8);
        assert_eq!(c.get(3), 0.86);
        let aloha: DegreeDistribution = "x".parse().unwrap();
        assert_eq!(aloha.coeffs(), &[0.0, 1.0]);
        let tiny: DegreeDistribution = "1e-1+0.9x".parse().unwrap();
        assert_eq!(tiny.coeffs(), &[0.1, 0.9]);
        assert!("0.5x^2".parse::<DegreeDistribution>().is_err());
        assert!("0.5y^2+0.5".parse::<DegreeDistribution>().is_err());
        assert!("".parse::<DegreeDistribution>().is_err());
    }

    #[test]
    fn construction_rejects_bad_vectors() {
        assert!(DegreeDistribution::new(vec![]).is_err());
        assert!(DegreeDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DegreeDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DegreeDistribution::new(vec![0.0; 66]).is_err());
        assert!(DegreeDistribution::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        let n = DegreeDistribution::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(n.coeffs(), &[0.25, 0.75]);
    }

    #[test]
    fn display_round_trips() {
        let d = example();
        let again: DegreeDistribution = d.to_string().parse().unwrap();
        assert_eq!(d, again);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"coeffs":[0.0,0.0,0.5,0.0,0.5]}"#);
    }

    #[test]
    fn horner_derivative() {
        let d = example();
        // λ'(x) = x + 2x^3
        for x in [0.0, 0.3, 1.0] {
            assert!((d.derivative_at(x) - (x + 2.0 * x * x * x)).abs() < 1e-15);
        }
        assert!((d.eval(0.5) - (0.125 + 0.03125)).abs() < 1e-15);
    }

    #[test]
    fn pec_induced_matches_printed_example() {
        let pec = example().pec_induced(0.01).unwrap();
        assert_close(pec.coeffs(), &[0.00005, 0.0099, 0.49, 0.019, 0.48], 5e-3);
    }

    #[test]
    fn pec_extremes() {
        let d = example();
        assert_eq!(d.pec_induced(0.0).unwrap(), d);
        assert_eq!(d.pec_induced(1.0).unwrap().coeffs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(d.pec_induced(1.5).is_err());
        assert!(d.pec_induced(-0.1).is_err());
    }

    #[test]
    fn broadcast_induced_matches_printed_examples() {
        let pec = example().pec_induced(0.01).unwrap();
        let r2 = pec.broadcast_induced(2, 100).unwrap();
        assert_close(r2.coeffs(), &[0.0004, 0.03, 0.47, 0.06, 0.44], 5e-3);
        let r4 = pec.broadcast_induced(4, 100).unwrap();
        assert_close(r4.coeffs(), &[0.001, 0.05, 0.46, 0.09, 0.41], 5e-3);
    }

    #[test]
    fn broadcast_identity_and_large_frame_limit() {
        let pec = example().pec_induced(0.01).unwrap();
        assert_eq!(pec.broadcast_induced(0, 100).unwrap().coeffs(), pec.coeffs());
        let big = pec.broadcast_induced(4, 1_000_000).unwrap();
        assert_close(big.coeffs(), pec.coeffs(), 1e-4);
        assert!(pec.broadcast_induced(101, 100).is_err());
        assert!(pec.broadcast_induced(1, 3).is_err());
    }

    #[test]
    fn reverse_transform_trivial_cases() {
        assert!((reverse_transform_plr(&[1.0; 5], 3, 2, 0.01, 100).unwrap() - 1.0).abs() < 1e-12);
        let table = [1.0, 0.0, 0.0, 0.0, 0.0];
        for l in 1..=4 {
            assert_eq!(reverse_transform_plr(&table, l, 0, 0.0, 100).unwrap(), 0.0);
        }
        assert!(reverse_transform_plr(&[1.0, 1.2], 1, 0, 0.0, 10).is_err());
        assert!(reverse_transform_plr(&[0.9, 0.1], 1, 0, 0.0, 10).is_err());
        assert!(reverse_transform_plr(&[1.0, 0.1], 2, 0, 0.0, 10).is_err());
    }

    #[test]
    fn reverse_transform_of_degree_zero_only() {
        // Only fully-erased or fully-blanked users are lost: probability that a
        // degree-l user ends with induced degree 0.
        let table = [1.0, 0.0, 0.0, 0.0, 0.0];
        let (eps, r, n) = (0.1f64, 3, 20);
        let l = 2;
        let want: f64 = (0..=l)
            .map(|k| choose(l as u64, k as u64) * eps.powi((l - k) as i32) * (1.0 - eps).powi(k as i32) * hypergeometric(n, r, k, 0))
            .sum();
        let got = reverse_transform_plr(&table, l, r, eps, n).unwrap();
        assert!((got - want).abs() < 1e-15);
        // Condition on how many of the two slots fall in the receiver's set:
        // the copies outside it must all be erased.
        let direct = (136.0 * 0.01 + 51.0 * 0.1 + 3.0) / 190.0;
        assert!((got - direct).abs() < 1e-12, "{got} vs {direct}");
    }

    fn arb_dist() -> impl Strategy<Value = DegreeDistribution> {
        prop::collection::vec(0.0f64..1.0, 1..9)
            .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 1e-3)
            .prop_map(|v| DegreeDistribution::normalized(v).unwrap())
    }

    proptest! {
        #[test]
        fn transforms_stay_on_the_simplex(d in arb_dist(), eps in 0.0f64..=1.0, r in 0usize..12, extra in 0usize..40) {
            let n = d.max_degree() + r + extra;
            for out in [d.pec_induced(eps).unwrap(), d.broadcast_induced(r, n).unwrap()] {
                prop_assert!(out.coeffs().iter().all(|c| (0.0..=1.0).contains(c)));
                prop_assert!((out.coeffs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn erasures_compose(d in arb_dist(), e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
            let twice = d.pec_induced(e1).unwrap().pec_induced(e2).unwrap();
            let once = d.pec_induced(1.0 - (1.0 - e1) * (1.0 - e2)).unwrap();
            for (a, b) in twice.coeffs().iter().zip(once.coeffs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn broadcast_zero_receiver_is_identity(d in arb_dist(), extra in 0usize..1000) {
            let n = d.max_degree() + extra;
            let out = d.broadcast_induced(0, n).unwrap();
            for (a, b) in out.coeffs().iter().zip(d.coeffs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn larger_receivers_lose_more_users(d in arb_dist(), r in 0usize..10, extra in 0usize..50) {
            let n = d.max_degree() + r + 1 + extra;
            let a = d.broadcast_induced(r, n).unwrap().get(0);
            let b = d.broadcast_induced(r + 1, n).unwrap().get(0);
            prop_assert!(b >= a - 1e-15);
        }
    }
}
