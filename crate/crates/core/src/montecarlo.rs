//! Frame-level Monte Carlo estimation of packet loss rates.
//!
//! Every frame is simulated from its own RNG stream and reduced to integer
//! counters, so a run is bitwise reproducible for any number of worker
//! threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::peel;
use crate::dist::DegreeDistribution;
use crate::error::{check_probability, domain, Result};
use crate::graph::{frame_rng, DegreeSampler, FrameGraph, SlotSampler};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// A separate receiver that does not transmit.
    Unicast,
    /// The receiver is one of the `m + 1` users and cannot listen in its own slots.
    Broadcast,
}

impl Mode {
    /// Channel load for `m` neighbors and `n` slots.
    pub fn load(self, m: usize, n: usize) -> f64 {
        match self {
            Mode::Unicast => m as f64 / n as f64,
            Mode::Broadcast => (m + 1) as f64 / n as f64,
        }
    }

    /// Number of neighbors that gives load closest to `g`.
    pub fn neighbors_for_load(self, g: f64, n: usize) -> usize {
        let contenders = (g * n as f64).round() as usize;
        match self {
            Mode::Unicast => contenders,
            Mode::Broadcast => contenders.saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameBudget {
    Fixed(u64),
    /// Stop once the broadcast PLR's 95% half-width is at most
    /// `rel_half_width` times the estimate, or after `max_frames`.
    TargetRelativeCi { rel_half_width: f64, max_frames: u64 },
}

impl Default for FrameBudget {
    fn default() -> Self {
        FrameBudget::TargetRelativeCi { rel_half_width: 0.1, max_frames: 10_000_000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub original_dist: DegreeDistribution,
    /// Number of neighbors whose packets the receiver tries to recover.
    pub m: usize,
    pub n: usize,
    pub eps: f64,
    pub mode: Mode,
    pub frames: FrameBudget,
    pub seed: u64,
}

impl SimConfig {
    pub fn load(&self) -> f64 {
        self.mode.load(self.m, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("erasure probability", self.eps)?;
        let q = self.original_dist.max_degree();
        if self.n < q {
            return domain(format!("frame length {} is shorter than the maximum degree {q}", self.n));
        }
        if self.n > u32::MAX as usize || self.m > u32::MAX as usize {
            return domain("frame length and user count must fit in 32 bits");
        }
        match self.frames {
            FrameBudget::Fixed(_) => {}
            FrameBudget::TargetRelativeCi { rel_half_width, .. } if rel_half_width.is_nan() || rel_half_width <= 0.0 => {
                return domain("target relative CI half-width must be positive");
            }
            FrameBudget::TargetRelativeCi { .. } => {}
        }
        Ok(())
    }
}

/// Point estimate and 95% Wilson interval for a loss probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub unresolved: u64,
    pub trials: u64,
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Loss estimate from counts. `None` when nothing was exposed, which is
/// different from an observed zero.
pub fn plr_from_counts(unresolved: u64, exposure: u64) -> Result<Option<Estimate>> {
    if unresolved > exposure {
        return domain(format!("{unresolved} losses out of only {exposure} trials"));
    }
    if exposure == 0 {
        return Ok(None);
    }
    let (ci_low, ci_high) = wilson(unresolved, exposure, Z95);
    Ok(Some(Estimate {
        estimate: unresolved as f64 / exposure as f64,
        ci_low,
        ci_high,
        unresolved,
        trials: exposure,
    }))
}

/// Raw counters. Merging is plain addition, so it is associative and
/// commutative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlrCounts {
    q: usize,
    /// `[d * (q+1) + r] = (unresolved, trials)` by induced degree.
    induced: Vec<(u64, u64)>,
    /// Same, by original degree.
    original: Vec<(u64, u64)>,
    /// By receiver degree over all neighbors.
    receiver: Vec<(u64, u64)>,
    /// Frames in which the receiver drew each degree.
    receiver_frames: Vec<u64>,
    pub frames: u64,
}

impl PlrCounts {
    pub fn new(q: usize) -> Self {
        let w = q + 1;
        PlrCounts {
            q,
            induced: vec![(0, 0); w * w],
            original: vec![(0, 0); w * w],
            receiver: vec![(0, 0); w],
            receiver_frames: vec![0; w],
            frames: 0,
        }
    }

    fn merge(mut self, other: &PlrCounts) -> Self {
        for (a, b) in self.induced.iter_mut().zip(&other.induced) {
            a.0 += b.0;
            a.1 += b.1;
        }
        for (a, b) in self.original.iter_mut().zip(&other.original) {
            a.0 += b.0;
            a.1 += b.1;
        }
        for (a, b) in self.receiver.iter_mut().zip(&other.receiver) {
            a.0 += b.0;
            a.1 += b.1;
        }
        for (a, b) in self.receiver_frames.iter_mut().zip(&other.receiver_frames) {
            *a += b;
        }
        self.frames += other.frames;
        self
    }

    fn cell(&self, table: &[(u64, u64)], deg: usize, r: usize) -> (u64, u64) {
        table[deg * (self.q + 1) + r]
    }

    pub fn induced(&self, d: usize, r: usize) -> (u64, u64) {
        self.cell(&self.induced, d, r)
    }

    pub fn original(&self, l: usize, r: usize) -> (u64, u64) {
        self.cell(&self.original, l, r)
    }

    pub fn receiver(&self, r: usize) -> (u64, u64) {
        self.receiver[r]
    }

    pub fn receiver_frames(&self, r: usize) -> u64 {
        self.receiver_frames[r]
    }
}

/// Simulates one frame and adds it to `counts`.
fn simulate_frame(cfg: &SimConfig, sampler: &DegreeSampler, frame: u64, counts: &mut PlrCounts) {
    let mut rng = frame_rng(cfg.seed, frame);
    let q = counts.q;
    let (r, rx_slots) = match cfg.mode {
        Mode::Unicast => (0, Vec::new()),
        Mode::Broadcast => {
            let r = sampler.sample(&mut rng);
            (r, SlotSampler::default().sample(&mut rng, cfg.n, r))
        }
    };
    let g = FrameGraph::sample_with(&cfg.original_dist, cfg.m, cfg.n, &mut rng)
        .and_then(|g| g.apply_pec_with(cfg.eps, &mut rng))
        .and_then(|g| g.receiver_view(&rx_slots))
        .expect("validated configuration");
    let decoded = peel(&g);
    let orig = g.original_degrees().expect("sampled graphs carry original degrees");
    let w = q + 1;
    let mut lost = 0;
    for (j, &ok) in decoded.resolved.iter().enumerate() {
        let miss = u64::from(!ok);
        let d = g.degree(j);
        let l = orig[j] as usize;
        let c = &mut counts.induced[d * w + r];
        c.0 += miss;
        c.1 += 1;
        let c = &mut counts.original[l * w + r];
        c.0 += miss;
        c.1 += 1;
        lost += miss;
    }
    counts.receiver[r].0 += lost;
    counts.receiver[r].1 += cfg.m as u64;
    counts.receiver_frames[r] += 1;
    counts.frames += 1;
}

/// Simulates frames `start..end` in parallel and sums their counters.
pub fn simulate_frames(cfg: &SimConfig, start: u64, end: u64) -> PlrCounts {
    let q = cfg.original_dist.max_degree();
    let sampler = DegreeSampler::new(&cfg.original_dist);
    const CHUNK: u64 = 256;
    let chunks = (end.saturating_sub(start)).div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = PlrCounts::new(q);
            let lo = start + c * CHUNK;
            for frame in lo..(lo + CHUNK).min(end) {
                simulate_frame(cfg, &sampler, frame, &mut counts);
            }
            counts
        })
        .reduce(|| PlrCounts::new(q), |a, b| a.merge(&b))
}

/// Broadcast PLR `Σ_r λ̃_r p^(r)` with a normal-approximation interval built
/// from the per-receiver-degree Wilson widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedPlr {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlrReport {
    pub config: SimConfig,
    /// `p_d_r[d][r]`: loss probability of a neighbor with induced degree `d`.
    pub p_d_r: Vec<Vec<Option<Estimate>>>,
    /// `p_tilde_l_r[l][r]`: loss probability of a neighbor with original degree `l`.
    pub p_tilde_l_r: Vec<Vec<Option<Estimate>>>,
    /// Average loss probability at a receiver of degree `r`.
    pub p_r: Vec<Option<Estimate>>,
    pub p_bar: Option<AveragedPlr>,
    pub frames: u64,
    /// Set when the stopping target could not be met or some receiver degree
    /// was never observed.
    pub warning: Option<String>,
    pub counts: PlrCounts,
}

impl PlrReport {
    pub fn from_counts(config: SimConfig, counts: PlrCounts) -> Self {
        let q = counts.q;
        let est = |(u, t): (u64, u64)| plr_from_counts(u, t).expect("counts are consistent");
        let p_d_r = (0..=q).map(|d| (0..=q).map(|r| est(counts.induced(d, r))).collect()).collect();
        let p_tilde_l_r = (0..=q).map(|l| (0..=q).map(|r| est(counts.original(l, r))).collect()).collect();
        let p_r: Vec<Option<Estimate>> = (0..=q).map(|r| est(counts.receiver(r))).collect();
        let (p_bar, warning) = average(&config, &p_r);
        PlrReport { config, p_d_r, p_tilde_l_r, p_r, p_bar, frames: counts.frames, warning, counts }
    }

    pub fn p_d(&self, d: usize, r: usize) -> Option<Estimate> {
        self.p_d_r.get(d).and_then(|row| row.get(r).copied().flatten())
    }

    pub fn p_tilde(&self, l: usize, r: usize) -> Option<Estimate> {
        self.p_tilde_l_r.get(l).and_then(|row| row.get(r).copied().flatten())
    }

    /// One row per estimated cell, for CSV output.
    pub fn csv_rows(&self) -> Vec<PlrRow> {
        let g = self.config.load();
        let mut rows = Vec::new();
        let mut cells = |quantity: &'static str, table: &[Vec<Option<Estimate>>]| {
            for (deg, row) in table.iter().enumerate() {
                for (r, e) in row.iter().enumerate() {
                    if let Some(e) = e {
                        rows.push(PlrRow::from_estimate(quantity, Some(deg), Some(r), g, e));
                    }
                }
            }
        };
        cells("p_d_r", &self.p_d_r);
        cells("p_tilde_l_r", &self.p_tilde_l_r);
        for (r, e) in self.p_r.iter().enumerate() {
            if let Some(e) = e {
                rows.push(PlrRow::from_estimate("p_r", None, Some(r), g, e));
            }
        }
        if let Some(p) = self.p_bar {
            rows.push(PlrRow {
                quantity: "p_bar",
                degree: None,
                receiver_degree: None,
                g,
                estimate: p.estimate,
                ci_low: p.ci_low,
                ci_high: p.ci_high,
                trials: p.trials,
            });
        }
        rows
    }
}

fn average(config: &SimConfig, p_r: &[Option<Estimate>]) -> (Option<AveragedPlr>, Option<String>) {
    let weights: Vec<f64> = match config.mode {
        Mode::Unicast => {
            let mut w = vec![0.0; p_r.len()];
            w[0] = 1.0;
            w
        }
        Mode::Broadcast => config.original_dist.coeffs().to_vec(),
    };
    let mut estimate = 0.0;
    let mut var = 0.0;
    let mut trials = 0;
    for (r, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        match p_r[r] {
            Some(e) => {
                estimate += w * e.estimate;
                let sd = (e.ci_high - e.ci_low) / (2.0 * Z95);
                var += w * w * sd * sd;
                trials += e.trials;
            }
            None => return (None, Some(format!("receiver degree {r} was never observed"))),
        }
    }
    let half = Z95 * var.sqrt();
    let p = AveragedPlr {
        estimate,
        ci_low: (estimate - half).max(0.0),
        ci_high: (estimate + half).min(1.0),
        trials,
    };
    (Some(p), None)
}

/// Runs the configured number of frames, or batches of doubling size until
/// the relative-CI target is met.
pub fn run(config: &SimConfig) -> Result<PlrReport> {
    config.validate()?;
    match config.frames {
        FrameBudget::Fixed(frames) => {
            let counts = simulate_frames(config, 0, frames);
            Ok(PlrReport::from_counts(config.clone(), counts))
        }
        FrameBudget::TargetRelativeCi { rel_half_width, max_frames } => {
            let q = config.original_dist.max_degree();
            let mut counts = PlrCounts::new(q);
            let mut batch = 1024u64;
            loop {
                let end = (counts.frames + batch).min(max_frames);
                let more = simulate_frames(config, counts.frames, end);
                counts = counts.merge(&more);
                let report = PlrReport::from_counts(config.clone(), counts.clone());
                let met = report.p_bar.is_some_and(|p| {
                    p.estimate > 0.0 && (p.ci_high - p.ci_low) / 2.0 <= rel_half_width * p.estimate
                });
                if met {
                    return Ok(report);
                }
                if counts.frames >= max_frames {
                    let mut report = report;
                    report.warning.get_or_insert_with(|| {
                        format!("relative CI target {rel_half_width} not reached within {max_frames} frames")
                    });
                    return Ok(report);
                }
                batch = batch.saturating_mul(2);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlrRow {
    pub quantity: &'static str,
    pub degree: Option<usize>,
    pub receiver_degree: Option<usize>,
    pub g: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

impl PlrRow {
    pub const HEADER: &'static str = "quantity,degree,receiver_degree,g,estimate,ci_low,ci_high,trials";

    fn from_estimate(quantity: &'static str, degree: Option<usize>, r: Option<usize>, g: f64, e: &Estimate) -> Self {
        PlrRow {
            quantity,
            degree,
            receiver_degree: r,
            g,
            estimate: e.estimate,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            trials: e.trials,
        }
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{:e},{:e},{:e},{}",
            self.quantity,
            opt(self.degree),
            opt(self.receiver_degree),
            self.g,
            self.estimate,
            self.ci_low,
            self.ci_high,
            self.trials
        )
    }
}
