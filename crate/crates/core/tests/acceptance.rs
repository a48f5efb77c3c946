//! Acceptance checks. Each test prints one `PASS`/`FAIL` line naming its
//! criterion, then asserts it.
//!
//! Run with `cargo test -p bcsa --test acceptance -- --nocapture`.

use std::time::Instant;

use bcsa::de::{asymptotic_plr_average, de_fixed_point};
use bcsa::efapprox::{slotted_aloha_exact, EfInput};
use bcsa::montecarlo::{run, wilson};
use bcsa::stopsets::{count_configs, enumerate_minimal, StoppingSetRecord};
use bcsa::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: &str, pass: bool, started: Instant, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {n}: {detail} [{:.1} s]", started.elapsed().as_secs_f64());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn dist(s: &str) -> DegreeDistribution {
    s.parse().unwrap()
}

fn example_one() -> DegreeDistribution {
    dist("0.5x^2+0.5x^4")
}

fn example_one_pec() -> DegreeDistribution {
    example_one().pec_induced(0.01).unwrap()
}

fn within_factor(a: f64, b: f64, f: f64) -> bool {
    a > 0.0 && b > 0.0 && a <= f * b && b <= f * a
}

#[test]
fn criterion_01_induced_distributions() {
    let t = Instant::now();
    let pec = example_one_pec();
    let printed = [
        (&pec, vec![0.00005, 0.0099, 0.49, 0.019, 0.48]),
        (&pec.broadcast_induced(2, 100).unwrap(), vec![0.0004, 0.03, 0.47, 0.06, 0.44]),
        (&pec.broadcast_induced(4, 100).unwrap(), vec![0.001, 0.05, 0.46, 0.09, 0.41]),
    ];
    let mut worst: f64 = 0.0;
    for (d, want) in &printed {
        for (k, w) in want.iter().enumerate() {
            worst = worst.max((d.get(k) - w).abs());
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    verdict(
        "1",
        worst <= 5e-3 && elapsed < 1.0,
        t,
        format!("largest coefficient deviation {worst:.2e} (limit 5e-3), {elapsed:.3} s (limit 1 s)"),
    );
}

/// `(profile v_0..v_4, μ, c)` for every minimal stopping set with at most
/// four CNs and VN degree at most four.
const TABLE_I: [([usize; 5], usize, u64); 31] = [
    ([0, 2, 0, 0, 0], 1, 1),
    ([0, 0, 2, 0, 0], 2, 1),
    ([0, 2, 1, 0, 0], 2, 2),
    ([0, 0, 0, 2, 0], 3, 1),
    ([0, 1, 1, 1, 0], 3, 3),
    ([0, 0, 3, 0, 0], 3, 6),
    ([0, 0, 2, 1, 0], 3, 6),
    ([0, 3, 0, 1, 0], 3, 6),
    ([0, 2, 2, 0, 0], 3, 12),
    ([0, 0, 0, 0, 2], 4, 1),
    ([0, 1, 0, 1, 1], 4, 4),
    ([0, 0, 2, 0, 1], 4, 6),
    ([0, 0, 1, 2, 0], 4, 12),
    ([0, 0, 1, 1, 1], 4, 12),
    ([0, 0, 0, 3, 0], 4, 24),
    ([0, 0, 0, 2, 1], 4, 12),
    ([0, 2, 1, 0, 1], 4, 12),
    ([0, 2, 0, 2, 0], 4, 24),
    ([0, 1, 2, 1, 0], 4, 24),
    ([0, 1, 2, 1, 0], 4, 24),
    ([0, 1, 2, 0, 1], 4, 24),
    ([0, 1, 1, 2, 0], 4, 48),
    ([0, 0, 3, 1, 0], 4, 24),
    ([0, 0, 3, 0, 1], 4, 24),
    ([0, 0, 4, 0, 0], 4, 72),
    ([0, 0, 3, 1, 0], 4, 144),
    ([0, 0, 2, 2, 0], 4, 48),
    ([0, 0, 2, 2, 0], 4, 48),
    ([0, 4, 0, 0, 1], 4, 24),
    ([0, 3, 1, 1, 0], 4, 72),
    ([0, 2, 3, 0, 0], 4, 144),
];

#[test]
fn criterion_02_stopping_set_catalog() {
    let t = Instant::now();
    let four = enumerate_minimal(4, 4).unwrap();
    let mut got: Vec<(Vec<usize>, usize, u64)> =
        four.records.iter().map(|r| (r.profile.clone(), r.mu, r.c)).collect();
    got.sort();
    let mut want: Vec<(Vec<usize>, usize, u64)> = TABLE_I.iter().map(|(p, mu, c)| (p.to_vec(), *mu, *c)).collect();
    want.sort();
    let table_ok = got == want;
    let five_q4 = enumerate_minimal(5, 4).unwrap().records.len();
    let five_q5 = enumerate_minimal(5, 5).unwrap().records.len();
    verdict(
        "2",
        table_ok && five_q4 == 142,
        t,
        format!(
            "(4 CNs, degree <= 4): {} records, table match {table_ok}; (5 CNs, degree <= 4): {five_q4} records \
             (expected 142); for reference (5 CNs, degree <= 5): {five_q5} records",
            four.records.len()
        ),
    );
}

/// Labeled edge assignments with the record's VN degrees that are
/// isomorphic to it, by trying every CN permutation on every assignment.
fn brute_force_configs(rec: &StoppingSetRecord) -> u64 {
    let mu = rec.mu;
    let target = rec.masks();
    let degrees: Vec<u32> = target.iter().map(|m| m.count_ones()).collect();
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..mu {
        perms = perms
            .iter()
            .flat_map(|p| (0..mu).filter(|i| !p.contains(i)).map(|i| [p.as_slice(), &[i]].concat()))
            .collect();
    }
    let images: Vec<Vec<u8>> = perms
        .iter()
        .map(|p| {
            let mut img: Vec<u8> = target
                .iter()
                .map(|&m| (0..mu).filter(|&b| m >> b & 1 == 1).fold(0u8, |acc, b| acc | 1 << p[b]))
                .collect();
            img.sort_unstable();
            img
        })
        .collect();
    let masks_of = |d: u32| (1u8..(1 << mu)).filter(move |m| m.count_ones() == d);
    let mut count = 0;
    let mut assignment = vec![0u8; degrees.len()];
    fn go(
        i: usize,
        assignment: &mut Vec<u8>,
        options: &[Vec<u8>],
        images: &[Vec<u8>],
        count: &mut u64,
    ) {
        if i == assignment.len() {
            let mut sorted = assignment.clone();
            sorted.sort_unstable();
            if images.contains(&sorted) {
                *count += 1;
            }
            return;
        }
        for &m in &options[i] {
            assignment[i] = m;
            go(i + 1, assignment, options, images, count);
        }
    }
    let options: Vec<Vec<u8>> = degrees.iter().map(|&d| masks_of(d).collect()).collect();
    go(0, &mut assignment, &options, &images, &mut count);
    count
}

#[test]
fn criterion_03_configuration_counts() {
    let t = Instant::now();
    let catalog = Catalog::bundled();
    let mut lines = Vec::new();
    let mut pass = true;
    for (profile, want) in [([0, 2, 0, 0, 0], 1), ([0, 1, 1, 1, 0], 3), ([0, 2, 3, 0, 0], 144)] {
        let rec = catalog.records.iter().find(|r| r.profile == profile).expect("profile in catalog");
        let (c, brute) = (count_configs(rec), brute_force_configs(rec));
        pass &= c == want && brute == want && rec.c == want;
        lines.push(format!("{profile:?} -> {c} (brute force {brute}, expected {want})"));
    }
    verdict("3", pass, t, lines.join("; "));
}

#[test]
fn criterion_04_slotted_aloha() {
    let t = Instant::now();
    let n = 100;
    let mut pass = true;
    let mut lines = Vec::new();
    for g in [0.1, 0.5, 1.0] {
        let m = Mode::Unicast.neighbors_for_load(g, n);
        let frames = 1_000_000u64.div_ceil(m as u64);
        let cfg = SimConfig {
            original_dist: dist("x"),
            m,
            n,
            eps: 0.0,
            mode: Mode::Unicast,
            frames: FrameBudget::Fixed(frames),
            seed: 4,
        };
        let report = run(&cfg).unwrap();
        let (lost, trials) = report.counts.receiver(0);
        let (lo, hi) = wilson(lost, trials, 3.0);
        let exact = slotted_aloha_exact(n, g);
        let ok = trials >= 1_000_000 && lo <= exact && exact <= hi;
        pass &= ok;
        lines.push(format!("g={g}: exact {exact:.5}, simulated [{lo:.5}, {hi:.5}] over {trials} users"));
    }
    let elapsed = t.elapsed().as_secs_f64();
    pass &= elapsed < 60.0;
    verdict("4", pass, t, lines.join("; "));
}

/// Unresolved users by definition: degree-0 users plus the largest set of
/// users (with degree >= 1) in which every touched slot is touched at least
/// twice. Such sets are closed under union, so the largest one is unique.
fn unresolved_by_exhaustion(users: &[Vec<u32>]) -> Vec<usize> {
    let m = users.len();
    let mut best: u32 = 0;
    for subset in 0u32..(1 << m) {
        if subset.count_ones() <= best.count_ones() {
            continue;
        }
        if users.iter().enumerate().any(|(j, s)| subset >> j & 1 == 1 && s.is_empty()) {
            continue;
        }
        let mut touches = [0u8; 64];
        for (j, s) in users.iter().enumerate() {
            if subset >> j & 1 == 1 {
                for &slot in s {
                    touches[slot as usize] += 1;
                }
            }
        }
        if touches.iter().all(|&c| c != 1) {
            best = subset;
        }
    }
    (0..m).filter(|&j| best >> j & 1 == 1 || users[j].is_empty()).collect()
}

#[test]
fn criterion_05_peeling_correctness() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let trials = 10_000;
    for _ in 0..trials {
        let m = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=8u32);
        let users: Vec<Vec<u32>> = (0..m)
            .map(|_| {
                let d = rng.gen_range(0..=n.min(4));
                rand::seq::index::sample(&mut rng, n as usize, d as usize).into_iter().map(|s| s as u32).collect()
            })
            .collect();
        let graph = FrameGraph::new(n as usize, users.clone()).unwrap();
        let got = peel(&graph).unresolved();
        if got != unresolved_by_exhaustion(&users) {
            mismatches += 1;
        }
    }
    verdict("5", mismatches == 0, t, format!("{mismatches} mismatches over {trials} random graphs"));
}

#[test]
fn criterion_06_density_evolution() {
    let t = Instant::now();
    let t8 = threshold(&dist("x^8")).g;
    let t2 = threshold(&dist("x^2")).g;
    let avg = asymptotic_plr_average(&example_one_pec(), 0.5).unwrap();
    let pass = (t8 - 0.54).abs() <= 0.01 && (t2 - 0.5).abs() <= 1e-3 && within_factor(avg, 2e-4, 1.5);
    verdict(
        "6",
        pass,
        t,
        format!("threshold(x^8) = {t8:.4}, threshold(x^2) = {t2:.4}, averaged asymptotic PLR at g=0.5 = {avg:.3e}"),
    );
}

#[test]
fn criterion_07_error_floor_matches_density_evolution() {
    let t = Instant::now();
    let catalog = Catalog::bundled();
    let (n, g) = (10_000_000, 0.5);
    let d5 = example_one_pec();
    let xi = de_fixed_point(&d5, g).unwrap().xi;
    let input = EfInput::new(d5, (g * n as f64) as usize, n, &catalog).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for d in [1, 2] {
        let ef = input.ef_plr(d).unwrap().unwrap();
        let de = xi.powi(d as i32);
        pass &= within_factor(ef, de, 2.0);
        lines.push(format!("d={d}: error floor {ef:.3e}, xi^d {de:.3e}"));
    }
    verdict("7", pass, t, lines.join("; "));
}

#[test]
fn criterion_08_error_floor_matches_simulation() {
    let t = Instant::now();
    let catalog = Catalog::bundled();
    let (n, eps, r) = (100, 0.01, 2);
    let induced = example_one_pec().broadcast_induced(r, n).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for (g, frames) in [(0.1, 4_000_000), (0.2, 2_000_000), (0.3, 1_000_000)] {
        let m = Mode::Broadcast.neighbors_for_load(g, n);
        let cfg = SimConfig {
            original_dist: example_one(),
            m,
            n,
            eps,
            mode: Mode::Broadcast,
            frames: FrameBudget::Fixed(frames),
            seed: 8,
        };
        let report = run(&cfg).unwrap();
        let input = EfInput::new(induced.clone(), m, n, &catalog).unwrap();
        for d in [1, 2] {
            let ef = input.ef_plr(d).unwrap().unwrap();
            let mc = report.p_d(d, r).unwrap();
            let ok = within_factor(ef, mc.estimate, 2.0) && ef <= mc.ci_high;
            pass &= ok;
            lines.push(format!(
                "g={g} d={d}: error floor {ef:.3e}, simulated {:.3e} [{:.3e}, {:.3e}]",
                mc.estimate, mc.ci_low, mc.ci_high
            ));
        }
    }
    verdict("8", pass, t, lines.join("; "));
}

#[test]
fn criterion_09_loss_orderings() {
    let t = Instant::now();
    let n = 100;
    let mut pass = true;
    let mut lines = Vec::new();
    for g in [0.5, 0.55, 0.6] {
        let cfg = SimConfig {
            original_dist: example_one(),
            m: Mode::Broadcast.neighbors_for_load(g, n),
            n,
            eps: 0.01,
            mode: Mode::Broadcast,
            frames: FrameBudget::Fixed(300_000),
            seed: 9,
        };
        let report = run(&cfg).unwrap();
        for l in [2, 4] {
            let (hi, lo) = (report.p_tilde(l, 4).unwrap(), report.p_tilde(l, 2).unwrap());
            let ok = hi.ci_low > lo.ci_high;
            pass &= ok;
            if !ok {
                lines.push(format!("g={g} l={l}: p~(4) {:.3e} vs p~(2) {:.3e}", hi.estimate, lo.estimate));
            }
        }
        for r in [2, 4] {
            for d in 1..=3 {
                let (a, b) = (report.p_d(d + 1, r).unwrap(), report.p_d(d, r).unwrap());
                let ok = a.ci_high < b.ci_low;
                pass &= ok;
                if !ok {
                    lines.push(format!("g={g} r={r} d={d}: p_{} {:.3e} vs p_{d} {:.3e}", d + 1, a.estimate, b.estimate));
                }
            }
        }
    }
    let detail = if lines.is_empty() {
        "all orderings hold with separated 95% intervals at g = 0.5, 0.55, 0.6".to_string()
    } else {
        lines.join("; ")
    };
    verdict("9", pass, t, detail);
}

#[test]
fn criterion_10_optimizer() {
    let t = Instant::now();
    let catalog = Catalog::bundled();
    let base = OptConfig { restarts: 8, ..OptConfig::default() };
    let etas = [0.0, 1e1, 1e2, 3e2, 1e3, 3e3, 1e4, 1e7];
    let sweep = tradeoff_sweep(&etas, &base, &catalog).unwrap();
    let at = |eta: f64| sweep.iter().find(|p| p.eta == eta).unwrap();
    let zero = at(0.0);
    let x8_err = (0..=8).map(|k| (zero.dist.get(k) - if k == 8 { 1.0 } else { 0.0 }).abs()).fold(0.0, f64::max);
    let target = sweep.iter().find(|p| {
        (p.dist.get(3) - 0.86).abs() <= 0.05 && (p.dist.get(8) - 0.14).abs() <= 0.05 && (0.83..=0.87).contains(&p.threshold)
    });
    let heavy = at(1e7);
    verdict(
        "10",
        x8_err <= 1e-3 && target.is_some(),
        t,
        format!(
            "eta=0 gives {} (g* {:.3}, largest deviation from x^8 {x8_err:.3}); sweep point near 0.86x^3+0.14x^8: {}; \
             eta=1e7 gives {} (g* {:.3})",
            zero.dist,
            zero.threshold,
            target.map_or("none".to_string(), |p| format!("{} at eta={} (g* {:.3})", p.dist, p.eta, p.threshold)),
            heavy.dist,
            heavy.threshold,
        ),
    );
}

fn csma_plr(bytes: usize, kappa: usize, eps: f64, g: f64, runs: u64) -> (CsmaConfig, Estimate) {
    let mut cfg = CsmaConfig::table_ii(bytes, kappa, eps, 0).unwrap();
    cfg.m = cfg.neighbors_for_load(g);
    cfg.runs = runs;
    cfg.seed = 11;
    let plr = csma_simulate(&cfg).unwrap().plr.unwrap();
    (cfg, plr)
}

#[test]
fn criterion_11_csma() {
    let t = Instant::now();
    let mut pass = true;
    let mut lines = Vec::new();
    let (cfg, low) = csma_plr(400, 2, 0.01, 0.05, 150_000);
    let (lo, hi) = wilson(low.unresolved, low.trials, 3.0);
    pass &= lo <= 1e-4 && 1e-4 <= hi;
    lines.push(format!("g={:.3}, eps=0.01: PLR {:.2e}, 3-sigma [{lo:.2e}, {hi:.2e}]", cfg.load(), low.estimate));
    // A crossing inside [g - 0.05, g + 0.05] follows from a PLR significantly
    // below 1e-3 at the lower end and above it at the upper end.
    for (bytes, center) in [(400, 0.36), (200, 0.32)] {
        let (below_cfg, below) = csma_plr(bytes, 2, 0.0, center - 0.05, 3000);
        let (above_cfg, above) = csma_plr(bytes, 2, 0.0, center + 0.05, 3000);
        pass &= below.ci_high < 1e-3 && above.ci_low > 1e-3;
        lines.push(format!(
            "n={}: PLR {:.2e} at g={:.3}, {:.2e} at g={:.3}",
            below_cfg.n(),
            below.estimate,
            below_cfg.load(),
            above.estimate,
            above_cfg.load()
        ));
    }
    verdict("11", pass, t, lines.join("; "));
}

#[test]
fn criterion_12_headline_comparison() {
    let t = Instant::now();
    let d22 = dist("0.86x^3+0.14x^8");
    let mut pass = true;
    let mut lines = Vec::new();
    for (n, center) in [(172, 0.68), (315, 0.73)] {
        let plr = |g: f64| {
            let m = Mode::Broadcast.neighbors_for_load(g, n);
            let cfg = SimConfig {
                original_dist: d22.clone(),
                m,
                n,
                eps: 0.0,
                mode: Mode::Broadcast,
                frames: FrameBudget::Fixed(40_000),
                seed: 12,
            };
            (Mode::Broadcast.load(m, n), run(&cfg).unwrap().p_bar.unwrap())
        };
        let (g_lo, below) = plr(center - 0.03);
        let (g_hi, above) = plr(center + 0.03);
        pass &= below.ci_high < 1e-3 && above.ci_low > 1e-3;
        lines.push(format!(
            "n={n}: PLR {:.2e} at g={g_lo:.3}, {:.2e} at g={g_hi:.3}",
            below.estimate, above.estimate
        ));
    }
    pass &= t.elapsed().as_secs() <= 30 * 60;
    verdict("12", pass, t, lines.join("; "));
}
