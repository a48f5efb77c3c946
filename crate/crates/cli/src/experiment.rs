//! Fully resolved experiments: what gets validated, run, and recorded in
//! the output metadata.

use bcsa::de::{asymptotic_plr_average, de_fixed_point, threshold};
use bcsa::efapprox::{ef_plr_broadcast, ef_plr_original_degree, EfInput};
use bcsa::stopsets::{enumerate_minimal, MAX_MU};
use bcsa::{
    csma_simulate, montecarlo, tradeoff_sweep, Catalog, CsmaConfig, DegreeDistribution, FrameBudget, Mode,
    OptConfig, SimConfig,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    CatalogArgs, Command, CompareArgs, CsmaArgs, DeArgs, EfArgs, FrameArgs, LoadArgs, OptimizeArgs, SimArgs,
    StoppingSetArgs,
};
use crate::error::{invalid, rejected, CliError};
use crate::output::{Row, SCHEMA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<String>,
    pub experiments: Vec<Experiment>,
}

impl ExperimentSpec {
    pub fn single(experiment: Experiment) -> Self {
        ExperimentSpec { schema: SCHEMA, recipe: None, experiments: vec![experiment] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    Sim(SimSpec),
    Ef(EfSpec),
    De(DeSpec),
    StoppingSets(CatalogSpec),
    Optimize(OptimizeSpec),
    Csma(CsmaSpec),
    Compare(CompareSpec),
}

/// Contenders per point: loads, or neighbor counts used as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loads {
    G(Vec<f64>),
    M(Vec<usize>),
}

impl Loads {
    fn neighbors(&self, mode: Mode, n: usize) -> Vec<usize> {
        match self {
            Loads::G(gs) => gs.iter().map(|&g| mode.neighbors_for_load(g, n)).collect(),
            Loads::M(ms) => ms.clone(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Loads::G(v) => v.is_empty(),
            Loads::M(v) => v.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub dist: DegreeDistribution,
    pub n: Vec<usize>,
    pub loads: Loads,
    pub eps: Vec<f64>,
    pub mode: Mode,
    pub frames: FrameBudget,
    pub seed: u64,
    /// Also emit error-floor rows for every point.
    pub ef: bool,
    /// Keep only these quantities; empty keeps all.
    #[serde(default)]
    pub quantities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSpec {
    pub max_mu: usize,
    pub max_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfSpec {
    pub dist: DegreeDistribution,
    pub n: Vec<usize>,
    pub loads: Loads,
    pub eps: Vec<f64>,
    pub mode: Mode,
    pub catalog: CatalogSpec,
    #[serde(default)]
    pub quantities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeSpec {
    pub dist: DegreeDistribution,
    pub g: Vec<f64>,
    pub eps: Vec<f64>,
    pub threshold_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSpec {
    pub etas: Vec<f64>,
    pub config: OptConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsmaSpec {
    pub packet_size: Vec<usize>,
    pub kappa: Vec<usize>,
    pub eps: Vec<f64>,
    pub g: Vec<f64>,
    pub runs: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    pub dist: DegreeDistribution,
    pub packet_size: Vec<usize>,
    pub eps: Vec<f64>,
    pub g: Vec<f64>,
    pub kappa: usize,
    pub frames: FrameBudget,
    pub runs: u64,
    pub seed: u64,
    pub ef: bool,
}

pub fn parse_dist(s: &str) -> Result<DegreeDistribution, CliError> {
    s.parse().map_err(|e: bcsa::Error| CliError::Validation(format!("--dist {s:?}: {e}")))
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_range(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Validation(format!("range {s:?}: {e}")))?;
    let [start, stop, step] = parts[..] else {
        return invalid(format!("range {s:?} must be start:stop:step"));
    };
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return invalid(format!("range {s:?} is empty"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// `start:stop:points`, log-spaced over decades.
pub fn parse_log_range(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, k] = parts[..] else {
        return invalid(format!("range {s:?} must be start:stop:points"));
    };
    let bad = |e: String| CliError::Validation(format!("range {s:?}: {e}"));
    let a: f64 = a.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
    let b: f64 = b.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
    let k: usize = k.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
    if k == 0 || b < a || (k == 1 && b != a) {
        return invalid(format!("range {s:?} is empty"));
    }
    Ok((0..k)
        .map(|i| {
            let t = if k == 1 { a } else { a + (b - a) * i as f64 / (k - 1) as f64 };
            let v = 10f64.powf(t);
            let scale = 10f64.powi(12 - v.log10().floor() as i32);
            (v * scale).round() / scale
        })
        .collect())
}

fn loads(g: &Option<Vec<f64>>, g_range: &Option<String>) -> Result<Option<Vec<f64>>, CliError> {
    match (g, g_range) {
        (Some(g), _) => Ok(Some(g.clone())),
        (None, Some(r)) => parse_range(r).map(Some),
        (None, None) => Ok(None),
    }
}

fn resolve_loads(l: &LoadArgs) -> Result<Loads, CliError> {
    if let Some(m) = &l.m {
        return Ok(Loads::M(m.clone()));
    }
    Ok(Loads::G(loads(&l.g, &l.g_range)?.unwrap_or_else(|| vec![0.5])))
}

fn required_loads(g: &Option<Vec<f64>>, g_range: &Option<String>) -> Result<Vec<f64>, CliError> {
    loads(g, g_range)?.map_or_else(|| invalid("give the loads with --g or --g-range"), Ok)
}

fn frame_budget(f: &FrameArgs) -> FrameBudget {
    match f.frames {
        Some(frames) => FrameBudget::Fixed(frames),
        None => FrameBudget::TargetRelativeCi { rel_half_width: f.rel_ci, max_frames: f.max_frames },
    }
}

fn catalog_spec(c: &CatalogArgs) -> CatalogSpec {
    CatalogSpec { max_mu: c.max_mu, max_degree: c.max_degree }
}

impl Experiment {
    pub fn from_command(cmd: &Command) -> Result<Self, CliError> {
        Ok(match cmd {
            Command::Sim(a) => Experiment::Sim(sim_spec(a)?),
            Command::Ef(a) => Experiment::Ef(ef_spec(a)?),
            Command::De(a) => Experiment::De(de_spec(a)?),
            Command::StoppingSets(StoppingSetArgs { catalog }) => Experiment::StoppingSets(catalog_spec(catalog)),
            Command::Optimize(a) => Experiment::Optimize(optimize_spec(a)?),
            Command::Csma(a) => Experiment::Csma(csma_spec(a)?),
            Command::Compare(a) => Experiment::Compare(compare_spec(a)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Sim(_) => "sim",
            Experiment::Ef(_) => "ef",
            Experiment::De(_) => "de",
            Experiment::StoppingSets(_) => "stopping-sets",
            Experiment::Optimize(_) => "optimize",
            Experiment::Csma(_) => "csma",
            Experiment::Compare(_) => "compare",
        }
    }
}

fn sim_spec(a: &SimArgs) -> Result<SimSpec, CliError> {
    Ok(SimSpec {
        dist: parse_dist(&a.dist)?,
        n: a.n.clone(),
        loads: resolve_loads(&a.load)?,
        eps: a.eps.clone(),
        mode: a.mode.into(),
        frames: frame_budget(&a.frames),
        seed: a.seed,
        ef: a.ef,
        quantities: Vec::new(),
    })
}

fn ef_spec(a: &EfArgs) -> Result<EfSpec, CliError> {
    Ok(EfSpec {
        dist: parse_dist(&a.dist)?,
        n: a.n.clone(),
        loads: resolve_loads(&a.load)?,
        eps: a.eps.clone(),
        mode: a.mode.into(),
        catalog: catalog_spec(&a.catalog),
        quantities: Vec::new(),
    })
}

fn de_spec(a: &DeArgs) -> Result<DeSpec, CliError> {
    let g = if a.threshold { loads(&a.g, &a.g_range)?.unwrap_or_default() } else { required_loads(&a.g, &a.g_range)? };
    Ok(DeSpec { dist: parse_dist(&a.dist)?, g, eps: a.eps.clone(), threshold_only: a.threshold })
}

fn optimize_spec(a: &OptimizeArgs) -> Result<OptimizeSpec, CliError> {
    let etas = match (&a.eta, &a.eta_range) {
        (Some(e), _) => e.clone(),
        (None, Some(r)) => parse_log_range(r)?,
        (None, None) => vec![0.0],
    };
    let config = OptConfig {
        support: a.support.clone(),
        n: a.n,
        g: a.g,
        eps: a.eps,
        restarts: a.restarts,
        seed: a.seed,
        ..OptConfig::default()
    };
    Ok(OptimizeSpec { etas, config })
}

fn csma_spec(a: &CsmaArgs) -> Result<CsmaSpec, CliError> {
    Ok(CsmaSpec {
        packet_size: a.packet_size.clone(),
        kappa: a.kappa.clone(),
        eps: a.eps.clone(),
        g: required_loads(&a.g, &a.g_range)?,
        runs: a.runs,
        seed: a.seed,
    })
}

fn compare_spec(a: &CompareArgs) -> Result<CompareSpec, CliError> {
    Ok(CompareSpec {
        dist: parse_dist(&a.dist)?,
        packet_size: a.packet_size.clone(),
        eps: a.eps.clone(),
        g: required_loads(&a.g, &a.g_range)?,
        kappa: a.kappa,
        frames: frame_budget(&a.frames),
        runs: a.runs,
        seed: a.seed,
        ef: a.ef,
    })
}

fn nonempty<T>(what: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        invalid(format!("{what} is empty"))
    } else {
        Ok(())
    }
}

fn check_loads(g: &[f64]) -> Result<(), CliError> {
    nonempty("load grid", g)?;
    match g.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        Some(bad) => invalid(format!("load {bad} must be finite and non-negative")),
        None => Ok(()),
    }
}

fn check_catalog(c: &CatalogSpec) -> Result<(), CliError> {
    if c.max_mu == 0 || c.max_mu > MAX_MU || c.max_degree == 0 {
        return invalid(format!(
            "catalog needs 1 <= max-mu <= {MAX_MU} and max-degree >= 1, got {} and {}",
            c.max_mu, c.max_degree
        ));
    }
    Ok(())
}

fn sim_configs(s: &SimSpec) -> Vec<SimConfig> {
    let mut out = Vec::new();
    for &n in &s.n {
        for &eps in &s.eps {
            for m in s.loads.neighbors(s.mode, n) {
                out.push(SimConfig {
                    original_dist: s.dist.clone(),
                    m,
                    n,
                    eps,
                    mode: s.mode,
                    frames: s.frames,
                    seed: s.seed,
                });
            }
        }
    }
    out
}

fn csma_configs(packet_size: &[usize], kappa: &[usize], eps: &[f64], g: &[f64], runs: u64, seed: u64) -> Result<Vec<CsmaConfig>, CliError> {
    let mut out = Vec::new();
    for &bytes in packet_size {
        for &k in kappa {
            for &e in eps {
                for &load in g {
                    let mut c = CsmaConfig::table_ii(bytes, k, e, 0).map_err(rejected)?;
                    c.m = c.neighbors_for_load(load);
                    c.runs = runs;
                    c.seed = seed;
                    c.validate().map_err(rejected)?;
                    out.push(c);
                }
            }
        }
    }
    Ok(out)
}

fn check_ef_frame(n: usize, c: &CatalogSpec) -> Result<(), CliError> {
    if n < c.max_degree + c.max_mu {
        return invalid(format!("error floor needs n >= max-degree + max-mu = {}, got n = {n}", c.max_degree + c.max_mu));
    }
    Ok(())
}

const BUNDLED: CatalogSpec = CatalogSpec { max_mu: 4, max_degree: 4 };

/// Checks every precondition without running anything expensive.
pub fn validate(spec: &ExperimentSpec) -> Result<(), CliError> {
    if spec.schema != SCHEMA {
        return invalid(format!("config schema {} is not supported (expected {SCHEMA})", spec.schema));
    }
    nonempty("experiment list", &spec.experiments)?;
    let catalogs = spec.experiments.iter().filter(|e| matches!(e, Experiment::StoppingSets(_))).count();
    if catalogs > 0 && spec.experiments.len() > 1 {
        return invalid("stopping-sets writes JSON and cannot be combined with other experiments");
    }
    for e in &spec.experiments {
        match e {
            Experiment::Sim(s) => {
                nonempty("frame length list", &s.n)?;
                nonempty("erasure probability list", &s.eps)?;
                if s.loads.is_empty() {
                    return invalid("load grid is empty");
                }
                if let Loads::G(g) = &s.loads {
                    check_loads(g)?;
                }
                for c in sim_configs(s) {
                    c.validate().map_err(rejected)?;
                    if s.ef {
                        check_ef_frame(c.n, &BUNDLED)?;
                    }
                }
            }
            Experiment::Ef(s) => {
                nonempty("frame length list", &s.n)?;
                nonempty("erasure probability list", &s.eps)?;
                if s.loads.is_empty() {
                    return invalid("load grid is empty");
                }
                if let Loads::G(g) = &s.loads {
                    check_loads(g)?;
                }
                check_catalog(&s.catalog)?;
                for &n in &s.n {
                    check_ef_frame(n, &s.catalog)?;
                }
                for &eps in &s.eps {
                    s.dist.pec_induced(eps).map_err(rejected)?;
                }
            }
            Experiment::De(s) => {
                nonempty("erasure probability list", &s.eps)?;
                if !s.threshold_only {
                    check_loads(&s.g)?;
                }
                for &eps in &s.eps {
                    s.dist.pec_induced(eps).map_err(rejected)?;
                }
            }
            Experiment::StoppingSets(c) => check_catalog(c)?,
            Experiment::Optimize(s) => {
                nonempty("eta list", &s.etas)?;
                for &eta in &s.etas {
                    OptConfig { eta, ..s.config.clone() }.validate().map_err(rejected)?;
                }
            }
            Experiment::Csma(s) => {
                check_loads(&s.g)?;
                nonempty("packet size list", &s.packet_size)?;
                nonempty("repetition list", &s.kappa)?;
                nonempty("erasure probability list", &s.eps)?;
                csma_configs(&s.packet_size, &s.kappa, &s.eps, &s.g, s.runs, s.seed)?;
            }
            Experiment::Compare(s) => {
                check_loads(&s.g)?;
                nonempty("packet size list", &s.packet_size)?;
                nonempty("erasure probability list", &s.eps)?;
                for c in csma_configs(&s.packet_size, &[s.kappa], &s.eps, &s.g, s.runs, s.seed)? {
                    let m = Mode::Broadcast.neighbors_for_load(c.load(), c.n());
                    SimConfig {
                        original_dist: s.dist.clone(),
                        m,
                        n: c.n(),
                        eps: c.eps,
                        mode: Mode::Broadcast,
                        frames: s.frames,
                        seed: s.seed,
                    }
                    .validate()
                    .map_err(rejected)?;
                }
            }
        }
    }
    Ok(())
}

/// What an experiment produced.
pub enum Output {
    Rows(Vec<Row>),
    Catalog(Catalog),
}

pub fn load_catalog(c: &CatalogSpec) -> Result<Catalog, CliError> {
    if *c == BUNDLED {
        Ok(Catalog::bundled())
    } else {
        Ok(enumerate_minimal(c.max_mu, c.max_degree)?)
    }
}

pub fn run(e: &Experiment) -> Result<Output, CliError> {
    Ok(match e {
        Experiment::Sim(s) => Output::Rows(run_sim(s)?),
        Experiment::Ef(s) => Output::Rows(run_ef(s)?),
        Experiment::De(s) => Output::Rows(run_de(s)?),
        Experiment::StoppingSets(c) => Output::Catalog(load_catalog(c)?),
        Experiment::Optimize(s) => Output::Rows(run_optimize(s)?),
        Experiment::Csma(s) => Output::Rows(run_csma(s)?),
        Experiment::Compare(s) => Output::Rows(run_compare(s)?),
    })
}

fn keep(quantities: &[String], rows: Vec<Row>) -> Vec<Row> {
    if quantities.is_empty() {
        return rows;
    }
    rows.into_iter().filter(|r| quantities.iter().any(|q| q == r.quantity)).collect()
}

fn run_sim(s: &SimSpec) -> Result<Vec<Row>, CliError> {
    let catalog = Catalog::bundled();
    let mut rows = Vec::new();
    for cfg in sim_configs(s) {
        let report = montecarlo::run(&cfg)?;
        if let Some(w) = &report.warning {
            eprintln!("warning: n={} m={} eps={}: {w}", cfg.n, cfg.m, cfg.eps);
        }
        let g = cfg.load();
        for r in report.csv_rows() {
            rows.push(
                Row::new("sim", r.quantity, r.estimate)
                    .at(cfg.n, g, cfg.eps)
                    .degrees(r.degree, r.receiver_degree)
                    .interval(r.ci_low, r.ci_high, r.trials),
            );
        }
        if s.ef {
            rows.extend(ef_rows(&s.dist, cfg.n, cfg.m, cfg.eps, cfg.mode, &catalog)?);
        }
    }
    Ok(keep(&s.quantities, rows))
}

/// Error-floor counterparts of the simulated quantities at one point.
fn ef_rows(
    original: &DegreeDistribution,
    n: usize,
    m: usize,
    eps: f64,
    mode: Mode,
    catalog: &Catalog,
) -> Result<Vec<Row>, CliError> {
    let g = mode.load(m, n);
    let pec = original.pec_induced(eps)?;
    let receivers: Vec<usize> = match mode {
        Mode::Unicast => vec![0],
        Mode::Broadcast => (0..=original.max_degree()).filter(|&r| original.get(r) > 0.0).collect(),
    };
    let mut rows = Vec::new();
    // Mass on degrees above the catalog, which the estimate counts as decoded.
    let mut truncated = 0.0;
    for &r in &receivers {
        let induced = if r == 0 { pec.clone() } else { pec.broadcast_induced(r, n)? };
        let input = EfInput::new(induced, m, n, catalog)?;
        let weight = if r == 0 { 1.0 } else { original.get(r) };
        truncated += weight * input.ef_plr_average().truncated_mass;
        for d in 1..=input.max_degree() {
            if let Some(p) = input.ef_plr(d)? {
                rows.push(Row::new("ef", "p_d_r", p).at(n, g, eps).degrees(Some(d), Some(r)));
            }
        }
        for l in (1..=original.max_degree()).filter(|&l| original.get(l) > 0.0) {
            let p = ef_plr_original_degree(original, l, r, eps, m, n, catalog)?;
            rows.push(Row::new("ef", "p_tilde_l_r", p).at(n, g, eps).degrees(Some(l), Some(r)));
        }
        if mode == Mode::Unicast {
            let p = input.ef_plr_average().plr;
            rows.push(Row::new("ef", "p_bar", p).at(n, g, eps));
        }
    }
    if mode == Mode::Broadcast {
        let p = ef_plr_broadcast(original, eps, m, n, catalog)?;
        rows.push(Row::new("ef", "p_bar", p).at(n, g, eps));
    }
    if truncated > 0.0 {
        rows.push(Row::new("ef", "truncated_mass", truncated).at(n, g, eps));
    }
    Ok(rows)
}

fn run_ef(s: &EfSpec) -> Result<Vec<Row>, CliError> {
    let catalog = load_catalog(&s.catalog)?;
    let mut rows = Vec::new();
    for &n in &s.n {
        for &eps in &s.eps {
            for m in s.loads.neighbors(s.mode, n) {
                rows.extend(ef_rows(&s.dist, n, m, eps, s.mode, &catalog)?);
            }
        }
    }
    Ok(keep(&s.quantities, rows))
}

fn run_de(s: &DeSpec) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for &eps in &s.eps {
        let dist = s.dist.pec_induced(eps)?;
        let t = threshold(&dist);
        if let Some(note) = &t.note {
            eprintln!("note: eps={eps}: {note}");
        }
        let mut row = Row::new("de", "threshold", t.g);
        row.eps = Some(eps);
        rows.push(row);
        if s.threshold_only {
            continue;
        }
        for &g in &s.g {
            let r = de_fixed_point(&dist, g)?;
            if !r.converged {
                eprintln!("warning: eps={eps} g={g}: recursion stopped at the iteration cap");
            }
            let at = |row: Row| {
                let mut row = row;
                row.g = Some(g);
                row.eps = Some(eps);
                row
            };
            rows.push(at(Row::new("de", "xi", r.xi)));
            for d in (1..=dist.max_degree()).filter(|&d| dist.get(d) > 0.0) {
                rows.push(at(Row::new("de", "p_d", r.xi.powi(d as i32)).degrees(Some(d), None)));
            }
            rows.push(at(Row::new("de", "p_bar", asymptotic_plr_average(&dist, g)?)));
        }
    }
    Ok(rows)
}

fn run_optimize(s: &OptimizeSpec) -> Result<Vec<Row>, CliError> {
    let catalog = Catalog::bundled();
    let points = tradeoff_sweep(&s.etas, &s.config, &catalog)?;
    let c = &s.config;
    let mut rows = Vec::new();
    for p in points {
        let dist = p.dist.to_string().replace(' ', "");
        for (quantity, value) in [("threshold", p.threshold), ("ef_p_bar", p.ef), ("objective", p.objective)] {
            let mut row = Row::new("optimize", quantity, value).at(c.n, c.g, c.eps);
            row.eta = Some(p.eta);
            row.dist = Some(dist.clone());
            rows.push(row);
        }
    }
    Ok(rows)
}

fn csma_row(c: &CsmaConfig) -> Result<Option<Row>, CliError> {
    let result = csma_simulate(c)?;
    Ok(result.plr.map(|p| {
        let mut row = Row::new("csma", "p_bar", p.estimate).at(c.n(), c.load(), c.eps).interval(p.ci_low, p.ci_high, p.trials);
        row.kappa = Some(c.kappa);
        row
    }))
}

fn run_csma(s: &CsmaSpec) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for c in csma_configs(&s.packet_size, &s.kappa, &s.eps, &s.g, s.runs, s.seed)? {
        match csma_row(&c)? {
            Some(row) => rows.push(row),
            None => eprintln!("warning: g={} gives no neighbors; skipped", c.load()),
        }
    }
    Ok(rows)
}

fn run_compare(s: &CompareSpec) -> Result<Vec<Row>, CliError> {
    let catalog = Catalog::bundled();
    let mut rows = Vec::new();
    for c in csma_configs(&s.packet_size, &[s.kappa], &s.eps, &s.g, s.runs, s.seed)? {
        let n = c.n();
        let cfg = SimConfig {
            original_dist: s.dist.clone(),
            m: c.m,
            n,
            eps: c.eps,
            mode: Mode::Broadcast,
            frames: s.frames,
            seed: s.seed,
        };
        if c.m == 0 {
            eprintln!("warning: g={} gives no neighbors; skipped", c.load());
            continue;
        }
        let report = montecarlo::run(&cfg)?;
        if let Some(w) = &report.warning {
            eprintln!("warning: n={n} m={} eps={}: {w}", c.m, c.eps);
        }
        if let Some(p) = report.p_bar {
            rows.push(Row::new("bcsa", "p_bar", p.estimate).at(n, cfg.load(), c.eps).interval(p.ci_low, p.ci_high, p.trials));
        }
        if let Some(row) = csma_row(&c)? {
            rows.push(row);
        }
        if s.ef {
            let p = ef_plr_broadcast(&s.dist, c.eps, c.m, n, &catalog)?;
            rows.push(Row::new("ef", "p_bar", p).at(n, cfg.load(), c.eps));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive_and_clean() {
        assert_eq!(parse_range("0.1:0.5:0.1").unwrap(), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(parse_range("0.5:0.5:0.1").unwrap(), vec![0.5]);
        for bad in ["0.5:0.1:0.1", "0:1:0", "0:1:-1", "0:1", "a:b:c"] {
            assert!(matches!(parse_range(bad), Err(CliError::Validation(_))), "{bad}");
        }
        assert_eq!(parse_log_range("0:2:3").unwrap(), vec![1.0, 10.0, 100.0]);
        assert_eq!(parse_log_range("3:3:1").unwrap(), vec![1000.0]);
        assert!(parse_log_range("2:0:3").is_err());
    }

    #[test]
    fn specs_round_trip_through_json() {
        let spec = ExperimentSpec::single(Experiment::Csma(CsmaSpec {
            packet_size: vec![200],
            kappa: vec![1, 2],
            eps: vec![0.0],
            g: vec![0.1],
            runs: 10,
            seed: 3,
        }));
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains(r#""command":"csma""#));
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&json).unwrap(), spec);
    }

    #[test]
    fn validation_rejects_bad_points() {
        let sim = |eps: f64, n: usize| {
            ExperimentSpec::single(Experiment::Sim(SimSpec {
                dist: "x^2".parse().unwrap(),
                n: vec![n],
                loads: Loads::G(vec![0.5]),
                eps: vec![eps],
                mode: Mode::Broadcast,
                frames: FrameBudget::Fixed(10),
                seed: 1,
                ef: true,
                quantities: vec![],
            }))
        };
        assert!(validate(&sim(0.0, 100)).is_ok());
        assert!(matches!(validate(&sim(1.5, 100)), Err(CliError::Validation(_))));
        assert!(matches!(validate(&sim(0.0, 6)), Err(CliError::Validation(_))));
        let cat = ExperimentSpec::single(Experiment::StoppingSets(CatalogSpec { max_mu: 6, max_degree: 4 }));
        assert!(matches!(validate(&cat), Err(CliError::Validation(_))));
    }

    #[test]
    fn unicast_error_floor_rows_cover_every_degree() {
        let rows = ef_rows(&"0.5x^2+0.5x^4".parse().unwrap(), 100, 50, 0.01, Mode::Unicast, &Catalog::bundled()).unwrap();
        let p_d: Vec<_> = rows.iter().filter(|r| r.quantity == "p_d_r").map(|r| r.degree.unwrap()).collect();
        assert_eq!(p_d, vec![1, 2, 3, 4]);
        assert_eq!(rows.iter().filter(|r| r.quantity == "p_bar").count(), 1);
        assert!(rows.iter().all(|r| r.g == Some(0.5) && (0.0..=1.0).contains(&r.estimate)));
    }
}
