//! Iterative SIC (peeling) decoding with perfect interference cancellation.

use crate::graph::FrameGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub resolved: Vec<bool>,
    /// Peeling rounds that resolved at least one user.
    pub iterations: usize,
}

impl DecodeResult {
    pub fn n_unresolved(&self) -> usize {
        self.resolved.iter().filter(|r| !**r).count()
    }

    pub fn unresolved(&self) -> Vec<usize> {
        self.resolved.iter().enumerate().filter(|(_, r)| !**r).map(|(j, _)| j).collect()
    }
}

/// Order in which the singleton slots found in one round are processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlotOrder {
    #[default]
    Ascending,
    Descending,
}

pub fn peel(g: &FrameGraph) -> DecodeResult {
    peel_ordered(g, SlotOrder::Ascending)
}

/// Each slot keeps the number of unresolved users in it and the XOR of their
/// indices; when the count is one the XOR is the user.
pub fn peel_ordered(g: &FrameGraph, order: SlotOrder) -> DecodeResult {
    let n = g.n_slots();
    let mut count = vec![0u32; n];
    let mut xor = vec![0u32; n];
    for (j, slots) in g.users().iter().enumerate() {
        for &s in slots {
            count[s as usize] += 1;
            xor[s as usize] ^= j as u32;
        }
    }
    let mut resolved = vec![false; g.n_users()];
    let mut frontier: Vec<u32> = (0..n as u32).filter(|&s| count[s as usize] == 1).collect();
    let mut next = Vec::new();
    let mut iterations = 0;
    while !frontier.is_empty() {
        match order {
            SlotOrder::Ascending => frontier.sort_unstable(),
            SlotOrder::Descending => frontier.sort_unstable_by(|a, b| b.cmp(a)),
        }
        let mut progressed = false;
        for &s in &frontier {
            // An earlier resolution this round may have emptied the slot.
            if count[s as usize] != 1 {
                continue;
            }
            let j = xor[s as usize] as usize;
            resolved[j] = true;
            progressed = true;
            for &t in g.user_slots(j) {
                let t = t as usize;
                count[t] -= 1;
                xor[t] ^= j as u32;
                if count[t] == 1 {
                    next.push(t as u32);
                }
            }
        }
        if progressed {
            iterations += 1;
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
    }
    DecodeResult { resolved, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DegreeDistribution;
    use crate::graph::frame_rng;

    #[test]
    fn all_singletons_resolve_in_one_round() {
        let g = FrameGraph::new(6, vec![vec![0, 1], vec![2], vec![3, 4, 5]]).unwrap();
        let r = peel(&g);
        assert!(r.resolved.iter().all(|&x| x));
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn two_degree_two_users_on_the_same_slots_block() {
        let g = FrameGraph::new(4, vec![vec![1, 3], vec![1, 3], vec![0]]).unwrap();
        let r = peel(&g);
        assert_eq!(r.resolved, vec![false, false, true]);
    }

    #[test]
    fn degree_zero_users_stay_unresolved() {
        let g = FrameGraph::new(3, vec![vec![], vec![0]]).unwrap();
        assert_eq!(peel(&g).resolved, vec![false, true]);
    }

    #[test]
    fn chain_needs_several_rounds() {
        // Only slot 0 is a singleton; each resolution frees the next slot.
        let g = FrameGraph::new(3, vec![vec![0, 1], vec![1, 2], vec![2]]).unwrap();
        let r = peel(&g);
        assert!(r.resolved.iter().all(|&x| x));
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn order_does_not_matter() {
        let dist: DegreeDistribution = "0.1+0.2x+0.4x^2+0.3x^3".parse().unwrap();
        for frame in 0..500 {
            let g = FrameGraph::sample_with(&dist, 40, 50, &mut frame_rng(99, frame)).unwrap();
            let a = peel_ordered(&g, SlotOrder::Ascending);
            let b = peel_ordered(&g, SlotOrder::Descending);
            assert_eq!(a.resolved, b.resolved);
        }
    }

    #[test]
    fn adding_a_user_never_helps_others() {
        let dist: DegreeDistribution = "0.3x+0.4x^2+0.3x^3".parse().unwrap();
        for frame in 0..300 {
            let g = FrameGraph::sample_with(&dist, 25, 30, &mut frame_rng(5, frame)).unwrap();
            let base = peel(&g);
            let mut users = g.users().to_vec();
            users.pop();
            let smaller = FrameGraph::new(g.n_slots(), users).unwrap();
            let fewer = peel(&smaller);
            for j in 0..smaller.n_users() {
                assert!(fewer.resolved[j] || !base.resolved[j], "frame {frame} user {j}");
            }
        }
    }
}
