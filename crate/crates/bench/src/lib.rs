//! Fixtures shared by the benchmarks.

use bcsa::{CsmaConfig, DegreeDistribution, FrameGraph, Mode};

/// The distribution optimized for 500 slots at load one half.
pub fn optimized() -> DegreeDistribution {
    "0.86x^3+0.14x^8".parse().expect("valid literal")
}

/// A broadcast frame at load `g` over `n` slots after erasures, as seen by a
/// receiver that transmitted in slots `0..3`.
pub fn receiver_frame(n: usize, g: f64, eps: f64, seed: u64) -> FrameGraph {
    let m = Mode::Broadcast.neighbors_for_load(g, n);
    FrameGraph::sample_original(&optimized(), m, n, seed)
        .and_then(|f| f.apply_pec(eps, seed))
        .and_then(|f| f.receiver_view(&[0, 1, 2]))
        .expect("valid frame parameters")
}

/// One hundred offset draws of the CSMA/CA baseline with 400-byte packets.
pub fn csma_config(g: f64) -> CsmaConfig {
    let mut c = CsmaConfig::table_ii(400, 2, 0.01, 0).expect("valid preset");
    c.m = c.neighbors_for_load(g);
    c.runs = 100;
    c
}
