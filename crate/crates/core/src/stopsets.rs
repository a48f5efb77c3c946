//! Minimal stopping sets of small bipartite graphs.
//!
//! A stopping set is a set of users (VNs) such that every slot (CN) they
//! touch is touched at least twice; the peeling decoder cannot resolve any of
//! them. A minimal stopping set contains no smaller nonempty stopping set.
//!
//! Within this module a VN is represented by the bitmask of its neighboring
//! CNs, and a stopping set by the sorted vector of those masks.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::FrameGraph;

/// Largest CN budget that [`enumerate_minimal`] accepts.
pub const MAX_MU: usize = 5;

const CATALOG_MU4_Q4: &str = include_str!("../assets/catalog_mu4_q4.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoppingSetRecord {
    /// `profile[d]` is the number of degree-`d` VNs; `profile[0]` is always 0.
    pub profile: Vec<usize>,
    pub mu: usize,
    pub nu: usize,
    /// Number of labeled edge assignments of the VNs to the `mu` CNs that
    /// produce a graph isomorphic to this one.
    pub c: u64,
    /// Canonical `(vn, cn)` edge list.
    pub edges: Vec<(usize, usize)>,
}

impl StoppingSetRecord {
    /// Builds a record from VN neighborhood masks over `mu` CNs.
    pub fn from_masks(masks: &[u8], mu: usize, q: usize) -> Result<Self> {
        if mu == 0 || mu > 8 {
            return domain(format!("CN count {mu} must be between 1 and 8"));
        }
        if masks.iter().any(|&m| m == 0 || usize::from(m) >> mu != 0) {
            return domain("every VN needs at least one CN among the first mu");
        }
        let canon = canonical(masks, mu);
        let mut profile = vec![0; q + 1];
        for &m in &canon {
            let d = m.count_ones() as usize;
            if d > q {
                return domain(format!("VN degree {d} exceeds the maximum {q}"));
            }
            profile[d] += 1;
        }
        let edges = canon
            .iter()
            .enumerate()
            .flat_map(|(v, &m)| (0..mu).filter(move |&c| m >> c & 1 == 1).map(move |c| (v, c)))
            .collect();
        Ok(StoppingSetRecord { profile, mu, nu: canon.len(), c: count_masks(&canon, mu), edges })
    }

    /// VN neighborhood masks, one per VN, in canonical order.
    pub fn masks(&self) -> Vec<u8> {
        let mut masks = vec![0u8; self.nu];
        for &(v, c) in &self.edges {
            masks[v] |= 1 << c;
        }
        masks
    }

    /// Number of degree-`d` VNs (zero beyond the profile).
    pub fn v(&self, d: usize) -> usize {
        self.profile.get(d).copied().unwrap_or(0)
    }

    pub fn max_vn_degree(&self) -> usize {
        self.profile.iter().rposition(|&v| v > 0).unwrap_or(0)
    }

    /// The record as a frame graph with `mu` slots.
    pub fn to_graph(&self) -> FrameGraph {
        let users = self
            .masks()
            .iter()
            .map(|&m| (0..self.mu as u32).filter(|&c| m >> c & 1 == 1).collect())
            .collect();
        FrameGraph::new(self.mu, users).expect("record masks fit in mu slots")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub max_mu: usize,
    /// Maximum VN degree.
    pub q: usize,
    pub records: Vec<StoppingSetRecord>,
}

impl Catalog {
    /// The shipped catalog of all minimal stopping sets with at most four CNs
    /// and VN degrees at most four (31 records).
    pub fn bundled() -> Self {
        Catalog::from_json(CATALOG_MU4_Q4).expect("bundled catalog is valid")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cat: Catalog = serde_json::from_str(s)?;
        for r in &cat.records {
            if r.mu == 0 || r.mu > cat.max_mu || r.profile.len() != cat.q + 1 || r.nu != r.profile.iter().sum::<usize>() {
                return Err(Error::Parse(format!("inconsistent catalog record {r:?}")));
            }
            if r.edges.iter().any(|&(v, c)| v >= r.nu || c >= r.mu) {
                return Err(Error::Parse(format!("edge out of range in catalog record {r:?}")));
            }
        }
        Ok(cat)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    /// Number of records with exactly `mu` CNs.
    pub fn count_with_mu(&self, mu: usize) -> usize {
        self.records.iter().filter(|r| r.mu == mu).count()
    }
}

/// All isomorphism classes of minimal stopping sets with at most `max_mu`
/// CNs and VN degrees in `1..=q`.
pub fn enumerate_minimal(max_mu: usize, q: usize) -> Result<Catalog> {
    if max_mu == 0 {
        return domain("the CN budget must be at least 1");
    }
    if max_mu > MAX_MU {
        return Err(Error::Resource(format!(
            "exhaustive enumeration is limited to at most {MAX_MU} CNs, got {max_mu}"
        )));
    }
    if q == 0 {
        return domain("the maximum VN degree must be at least 1");
    }
    let mut found = BTreeSet::new();
    for mu in 1..=max_mu {
        let full = ((1u16 << mu) - 1) as u8;
        let masks: Vec<u8> = (1..=full).filter(|m| m.count_ones() as usize <= q).collect();
        let mut stack = Vec::with_capacity(mu + 1);
        extend(&masks, 0, &mut stack, mu, full, &mut found);
    }
    let mut records = found
        .into_iter()
        .map(|(mu, canon)| StoppingSetRecord::from_masks(&canon, mu, q))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| (a.mu, a.nu, &a.profile, a.c).cmp(&(b.mu, b.nu, &b.profile, b.c)));
    Ok(Catalog { max_mu, q, records })
}

/// Depth-first search over multisets of masks in non-decreasing index order.
/// `stack` is always decodable; a set that stops being decodable is a
/// stopping set, and any superset of it cannot be minimal.
fn extend(masks: &[u8], start: usize, stack: &mut Vec<u8>, mu: usize, full: u8, found: &mut BTreeSet<(usize, Vec<u8>)>) {
    for i in start..masks.len() {
        stack.push(masks[i]);
        if peels_completely(stack, None) {
            extend(masks, i, stack, mu, full, found);
        } else {
            let covers = stack.iter().fold(0, |a, &m| a | m) == full;
            // Dropping the newest VN gives the decodable parent, so only the
            // others need checking.
            let minimal = covers && (0..stack.len() - 1).all(|w| peels_completely(stack, Some(w)));
            if minimal {
                found.insert((mu, canonical(stack, mu)));
            }
        }
        stack.pop();
    }
}

/// Whether peeling resolves every VN in `masks` except the skipped one.
fn peels_completely(masks: &[u8], skip: Option<usize>) -> bool {
    let mut alive: u32 = (0..masks.len()).filter(|&v| Some(v) != skip).fold(0, |a, v| a | 1 << v);
    loop {
        if alive == 0 {
            return true;
        }
        let mut progressed = false;
        for c in 0..8 {
            let bit = 1u8 << c;
            let mut only = None;
            let mut count = 0;
            for (v, &m) in masks.iter().enumerate() {
                if alive >> v & 1 == 1 && m & bit != 0 {
                    count += 1;
                    only = Some(v);
                }
            }
            if count == 1 {
                alive &= !(1 << only.unwrap());
                progressed = true;
            }
        }
        if !progressed {
            return false;
        }
    }
}

/// All permutations of `0..k`.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn permute_masks(masks: &[u8], perm: &[usize]) -> Vec<u8> {
    let mut out: Vec<u8> = masks
        .iter()
        .map(|&m| perm.iter().enumerate().filter(|&(c, _)| m >> c & 1 == 1).fold(0, |a, (_, &t)| a | 1 << t))
        .collect();
    out.sort_unstable();
    out
}

/// Canonical form: the lexicographically smallest sorted mask vector over
/// all CN relabelings. Sorting the masks quotients out VN relabelings.
pub fn canonical(masks: &[u8], mu: usize) -> Vec<u8> {
    permutations(mu)
        .iter()
        .map(|p| permute_masks(masks, p))
        .min()
        .unwrap_or_default()
}

/// `c(S) = μ! Π_d v_d! / |Aut(S)|`: the orbit of one labeled assignment under
/// CN relabelings and degree-preserving VN relabelings.
fn count_masks(masks: &[u8], mu: usize) -> u64 {
    let mut sorted = masks.to_vec();
    sorted.sort_unstable();
    let fact = |k: usize| (1..=k as u64).product::<u64>();
    let mut multiplicity_product = 1;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&m| m == sorted[i]).count();
        multiplicity_product *= fact(j);
        i += j;
    }
    // Each CN relabeling that fixes the multiset extends to this many VN
    // relabelings that fix the labeled graph.
    let stabilizer: u64 = permutations(mu)
        .iter()
        .filter(|p| permute_masks(&sorted, p) == sorted)
        .count() as u64
        * multiplicity_product;
    let mut by_degree = [0usize; 9];
    for &m in &sorted {
        by_degree[m.count_ones() as usize] += 1;
    }
    let group = fact(mu) * by_degree.iter().map(|&v| fact(v)).product::<u64>();
    group / stabilizer
}

/// The `c(S)` of a record, recomputed from its edges.
pub fn count_configs(s: &StoppingSetRecord) -> u64 {
    count_masks(&s.masks(), s.mu)
}

/// Whether the given users of `g` form a stopping set: every user has at
/// least one slot, every slot they touch is touched at least twice, and the
/// induced graph is connected.
pub fn is_stopping_set(g: &FrameGraph, subset: &[usize]) -> bool {
    if subset.is_empty() || subset.iter().any(|&j| j >= g.n_users() || g.degree(j) == 0) {
        return false;
    }
    let mut touches = vec![0u32; g.n_slots()];
    for &j in subset {
        for &s in g.user_slots(j) {
            touches[s as usize] += 1;
        }
    }
    if touches.contains(&1) {
        return false;
    }
    // Connectivity by flooding through shared slots.
    let mut seen = vec![false; subset.len()];
    let mut slot_seen = vec![false; g.n_slots()];
    let mut queue = vec![0];
    seen[0] = true;
    while let Some(i) = queue.pop() {
        for &s in g.user_slots(subset[i]) {
            if std::mem::replace(&mut slot_seen[s as usize], true) {
                continue;
            }
            for (k, &j) in subset.iter().enumerate() {
                if !seen[k] && g.user_slots(j).contains(&s) {
                    seen[k] = true;
                    queue.push(k);
                }
            }
        }
    }
    seen.iter().all(|&x| x)
}
