//! Bipartite user/slot frame graphs: the original graph, the graph left after
//! packet erasures, and the view of a half-duplex receiver.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::DegreeDistribution;
use crate::error::{check_probability, domain, Result};

/// RNG for frame `frame` of a run seeded with `seed`. Every frame gets its own
/// ChaCha stream, so a frame's content does not depend on how frames are
/// distributed over threads.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// One frame: `users[j]` is the sorted list of slots user `j` occupies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGraph {
    #[serde(rename = "n")]
    n_slots: usize,
    users: Vec<Vec<u32>>,
    /// Degree each user drew before erasures and receiver blanking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    original_degree: Option<Vec<u8>>,
}

/// Number of users of each degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphProfile {
    pub v: Vec<usize>,
    pub nu: usize,
    pub mu: usize,
}

impl FrameGraph {
    /// Validates slot ranges and distinctness; slot lists are sorted.
    pub fn new(n_slots: usize, mut users: Vec<Vec<u32>>) -> Result<Self> {
        for (j, slots) in users.iter_mut().enumerate() {
            slots.sort_unstable();
            if slots.windows(2).any(|w| w[0] == w[1]) {
                return domain(format!("user {j} occupies a slot twice"));
            }
            if let Some(&s) = slots.last() {
                if s as usize >= n_slots {
                    return domain(format!("user {j} uses slot {s} outside a frame of {n_slots} slots"));
                }
            }
        }
        Ok(FrameGraph { n_slots, users, original_degree: None })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: FrameGraph = serde_json::from_str(s)?;
        let annotation = raw.original_degree;
        let mut g = Self::new(raw.n_slots, raw.users)?;
        if let Some(orig) = annotation {
            if orig.len() != g.users.len() {
                return domain("original-degree annotation length differs from the user count");
            }
            g.original_degree = Some(orig);
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    /// Samples `m` users, each drawing a degree from `dist` and that many
    /// distinct slots uniformly at random.
    pub fn sample_original(dist: &DegreeDistribution, m: usize, n: usize, seed: u64) -> Result<Self> {
        Self::sample_with(dist, m, n, &mut frame_rng(seed, 0))
    }

    pub fn sample_with<R: Rng + ?Sized>(dist: &DegreeDistribution, m: usize, n: usize, rng: &mut R) -> Result<Self> {
        let q = dist.max_degree();
        if n < q {
            return domain(format!("frame length {n} is shorter than the maximum degree {q}"));
        }
        let sampler = DegreeSampler::new(dist);
        let mut scratch = SlotSampler::default();
        let mut users = Vec::with_capacity(m);
        let mut orig = Vec::with_capacity(m);
        for _ in 0..m {
            let l = sampler.sample(rng);
            users.push(scratch.sample(rng, n, l));
            orig.push(l as u8);
        }
        Ok(FrameGraph { n_slots: n, users, original_degree: Some(orig) })
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[Vec<u32>] {
        &self.users
    }

    pub fn user_slots(&self, j: usize) -> &[u32] {
        &self.users[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.users[j].len()
    }

    pub fn original_degrees(&self) -> Option<&[u8]> {
        self.original_degree.as_deref()
    }

    pub fn n_edges(&self) -> usize {
        self.users.iter().map(Vec::len).sum()
    }

    pub fn profile(&self) -> GraphProfile {
        let q = self.users.iter().map(Vec::len).max().unwrap_or(0);
        let mut v = vec![0; q + 1];
        for u in &self.users {
            v[u.len()] += 1;
        }
        GraphProfile { v, nu: self.users.len(), mu: self.n_slots }
    }

    /// Removes each edge independently with probability `eps`.
    pub fn apply_pec(&self, eps: f64, seed: u64) -> Result<Self> {
        self.apply_pec_with(eps, &mut frame_rng(seed, 0))
    }

    pub fn apply_pec_with<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> Result<Self> {
        check_probability("erasure probability", eps)?;
        let users = self
            .users
            .iter()
            .map(|slots| slots.iter().copied().filter(|_| !rng.gen_bool(eps)).collect())
            .collect();
        Ok(FrameGraph { n_slots: self.n_slots, users, original_degree: self.original_degree.clone() })
    }

    /// Deletes the receiver's own slots (and their edges) and renumbers the
    /// remaining `n - r` slots in order.
    pub fn receiver_view(&self, receiver_slots: &[u32]) -> Result<Self> {
        let mut blanked = vec![false; self.n_slots];
        for &s in receiver_slots {
            let s = s as usize;
            if s >= self.n_slots {
                return domain(format!("receiver slot {s} outside a frame of {} slots", self.n_slots));
            }
            if blanked[s] {
                return domain(format!("receiver slot {s} listed twice"));
            }
            blanked[s] = true;
        }
        let mut new_index = vec![u32::MAX; self.n_slots];
        let mut next = 0u32;
        for (s, &b) in blanked.iter().enumerate() {
            if !b {
                new_index[s] = next;
                next += 1;
            }
        }
        let users = self
            .users
            .iter()
            .map(|slots| slots.iter().filter(|&&s| !blanked[s as usize]).map(|&s| new_index[s as usize]).collect())
            .collect();
        Ok(FrameGraph {
            n_slots: self.n_slots - receiver_slots.len(),
            users,
            original_degree: self.original_degree.clone(),
        })
    }
}

/// Inverse-CDF sampler over a degree distribution.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    cumulative: Vec<f64>,
    top: usize,
}

impl DegreeSampler {
    pub fn new(dist: &DegreeDistribution) -> Self {
        let mut acc = 0.0;
        let cumulative = dist
            .coeffs()
            .iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect();
        DegreeSampler { cumulative, top: dist.effective_max_degree() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        // The total may round to just below 1.
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.top)
    }
}

/// Partial Fisher-Yates over `0..n` that only records the swapped positions,
/// so drawing `k` slots costs `O(k)` regardless of `n`.
#[derive(Debug, Default)]
pub struct SlotSampler {
    swaps: Vec<(u32, u32)>,
}

impl SlotSampler {
    fn lookup(&self, i: u32) -> u32 {
        self.swaps.iter().rev().find(|s| s.0 == i).map_or(i, |s| s.1)
    }

    /// `k` distinct slots from `0..n`, sorted.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R, n: usize, k: usize) -> Vec<u32> {
        debug_assert!(k <= n);
        self.swaps.clear();
        let mut out = Vec::with_capacity(k);
        for i in 0..k as u32 {
            let j = rng.gen_range(i..n as u32);
            let vi = self.lookup(i);
            let vj = self.lookup(j);
            out.push(vj);
            self.swaps.push((j, vi));
        }
        out.sort_unstable();
        out
    }
}
