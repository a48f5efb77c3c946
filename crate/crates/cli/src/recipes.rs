//! Named presets for the standard figures. The quick variants keep the shape
//! of each experiment but shrink grids and budgets so they finish in seconds.

use bcsa::{DegreeDistribution, FrameBudget, Mode, OptConfig};

use crate::args::Recipe;
use crate::experiment::{
    parse_log_range, CatalogSpec, CompareSpec, CsmaSpec, DeSpec, EfSpec, Experiment, ExperimentSpec, Loads,
    OptimizeSpec, SimSpec,
};
use crate::output::SCHEMA;

fn dist(s: &str) -> DegreeDistribution {
    s.parse().expect("preset distributions are valid")
}

/// Two-and-four repetitions, half of the users each.
fn example() -> DegreeDistribution {
    dist("0.5x^2+0.5x^4")
}

/// The distribution optimized for `n = 500`, `g = 0.5`.
fn optimized() -> DegreeDistribution {
    dist("0.86x^3+0.14x^8")
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    crate::experiment::parse_range(&format!("{start}:{stop}:{step}")).expect("preset grids are nonempty")
}

const BUNDLED: CatalogSpec = CatalogSpec { max_mu: 4, max_degree: 4 };

fn target_ci() -> FrameBudget {
    FrameBudget::TargetRelativeCi { rel_half_width: 0.1, max_frames: 10_000_000 }
}

fn broadcast_example(quick: bool, quantities: &[&str]) -> Vec<Experiment> {
    let (g, frames) = if quick { (vec![0.3, 0.6, 0.9], FrameBudget::Fixed(20_000)) } else { (grid(0.1, 1.0, 0.1), target_ci()) };
    vec![Experiment::Sim(SimSpec {
        dist: example(),
        n: vec![100],
        loads: Loads::G(g),
        eps: vec![0.01],
        mode: Mode::Broadcast,
        frames,
        seed: 1,
        ef: true,
        quantities: quantities.iter().map(|q| q.to_string()).collect(),
    })]
}

fn frame_length_sweep(quick: bool) -> Vec<Experiment> {
    let (ef_n, sim_n, frames) = if quick {
        (vec![50, 100, 1000, 10_000_000], vec![100], FrameBudget::Fixed(20_000))
    } else {
        (
            vec![50, 100, 200, 500, 1000, 2000, 5000, 10_000, 100_000, 1_000_000, 10_000_000],
            vec![50, 100, 200, 500],
            target_ci(),
        )
    };
    vec![
        Experiment::Ef(EfSpec {
            dist: example(),
            n: ef_n,
            loads: Loads::G(vec![0.5]),
            eps: vec![0.0, 0.01],
            mode: Mode::Unicast,
            catalog: BUNDLED,
            quantities: vec!["p_bar".into()],
        }),
        Experiment::Sim(SimSpec {
            dist: example(),
            n: sim_n,
            loads: Loads::G(vec![0.5]),
            eps: vec![0.0, 0.01],
            mode: Mode::Unicast,
            frames,
            seed: 1,
            ef: false,
            quantities: vec!["p_bar".into()],
        }),
        Experiment::De(DeSpec { dist: example(), g: vec![0.5], eps: vec![0.01], threshold_only: false }),
    ]
}

fn long_frame(quick: bool) -> Vec<Experiment> {
    let g = if quick { vec![0.2, 0.4, 0.5] } else { grid(0.05, 0.6, 0.05) };
    vec![
        Experiment::De(DeSpec { dist: example(), g: g.clone(), eps: vec![0.01], threshold_only: false }),
        Experiment::Ef(EfSpec {
            dist: example(),
            n: vec![10_000_000],
            loads: Loads::G(g),
            eps: vec![0.01],
            mode: Mode::Unicast,
            catalog: BUNDLED,
            quantities: vec!["p_d_r".into(), "p_bar".into()],
        }),
    ]
}

fn tradeoff(quick: bool) -> Vec<Experiment> {
    let (etas, restarts) = if quick {
        (vec![0.0, 1e3, 1e7], 4)
    } else {
        let mut etas = vec![0.0];
        etas.extend(parse_log_range("0:7:15").expect("preset range"));
        (etas, 20)
    };
    vec![Experiment::Optimize(OptimizeSpec { etas, config: OptConfig { restarts, ..OptConfig::default() } })]
}

fn csma_curves(quick: bool) -> Vec<Experiment> {
    let spec = if quick {
        CsmaSpec { packet_size: vec![400, 200], kappa: vec![2], eps: vec![0.01], g: vec![0.1, 0.3, 0.5], runs: 50, seed: 1 }
    } else {
        CsmaSpec {
            packet_size: vec![400, 200],
            kappa: vec![1, 2, 3],
            eps: vec![0.0, 0.01],
            g: grid(0.05, 1.0, 0.05),
            runs: 2000,
            seed: 1,
        }
    };
    vec![Experiment::Csma(spec)]
}

fn comparison(quick: bool) -> Vec<Experiment> {
    let spec = if quick {
        CompareSpec {
            dist: optimized(),
            packet_size: vec![400, 200],
            eps: vec![0.0],
            g: vec![0.3, 0.6, 0.7],
            kappa: 2,
            frames: FrameBudget::Fixed(2000),
            runs: 50,
            seed: 1,
            ef: true,
        }
    } else {
        CompareSpec {
            dist: optimized(),
            packet_size: vec![400, 200],
            eps: vec![0.0, 0.01],
            g: grid(0.1, 1.0, 0.05),
            kappa: 2,
            frames: target_ci(),
            runs: 2000,
            seed: 1,
            ef: true,
        }
    };
    vec![Experiment::Compare(spec)]
}

pub fn recipe(r: Recipe, quick: bool) -> ExperimentSpec {
    let (name, experiments) = match r {
        Recipe::Fig3a => ("fig3a", broadcast_example(quick, &["p_d_r", "p_bar"])),
        Recipe::Fig3b => ("fig3b", broadcast_example(quick, &["p_tilde_l_r", "p_bar"])),
        Recipe::Fig4 => ("fig4", frame_length_sweep(quick)),
        Recipe::Fig5 => ("fig5", long_frame(quick)),
        Recipe::Fig6 => ("fig6", tradeoff(quick)),
        Recipe::Fig7 => ("fig7", csma_curves(quick)),
        Recipe::Fig8 => ("fig8", comparison(quick)),
    };
    let name = if quick { format!("{name}-quick") } else { name.to_string() };
    ExperimentSpec { schema: SCHEMA, recipe: Some(name), experiments }
}
