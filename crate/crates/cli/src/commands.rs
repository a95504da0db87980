use rayon::prelude::*;

use dkl_core::geometry::{HalfSpacePoint, ModelParams, PowerLogWeight};
use dkl_core::green::{green_by_time_integration, green_estimate, green_free};
use dkl_core::hke::HeatKernelEstimator;
use dkl_core::killing::{scan_shape, solve_q};
use dkl_core::oracle::{compare_oracle_vs_estimate, OracleGrid, OracleParams};
use dkl_core::quadrature::QuadratureSpec;
use dkl_core::report::ComparabilityReport;
use dkl_core::suite::{self, freeze_value, frozen_ceilings, Ceilings, EXTRA_IDS, LEMMA_IDS};

use crate::config::{parse_list, ConfigFile};
use crate::csv::{num, Table};
use crate::{Cli, CliError, Command, Outcome, PairArgs};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BUDGET: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SLACK: f64 = 1.1;

/// Flags merged over the configuration file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: ConfigFile,
    pub model: ModelParams,
    pub spec: QuadratureSpec,
    pub seed: u64,
    pub budget: usize,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let c = &cli.common;
        let file = match &c.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let alpha = file.pick(c.alpha, "alpha", 1.0)?;
        let kappa = file.pick(c.kappa, "kappa", 0.0)?;
        let d = file.pick(c.dim, "dim", 1)?;
        let beta_text = file.pick(c.beta.clone(), "beta", "0,0,0,0".to_string())?;
        let beta: [f64; 4] = parse_list(&beta_text, "beta")?
            .try_into()
            .map_err(|_| CliError::usage("beta needs four comma-separated exponents"))?;
        let model = ModelParams::new(d, alpha, beta, kappa)?;
        let tol = file.pick(c.tol, "tol", DEFAULT_TOL)?;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::usage(format!("tol = {tol} must lie in (0, 1)")));
        }
        Ok(RunConfig {
            model,
            spec: QuadratureSpec::default().with_rel_tol(tol),
            seed: file.pick(c.seed, "seed", DEFAULT_SEED)?,
            budget: file.pick(c.budget, "budget", DEFAULT_BUDGET)?,
            file,
        })
    }

    fn weight(&self) -> Result<PowerLogWeight, CliError> {
        Ok(PowerLogWeight::new(self.model.beta)?)
    }

    fn point(&self, flag: &Option<String>, key: &str) -> Result<HalfSpacePoint, CliError> {
        let text = self.file.pick_opt(flag.clone(), key)?.ok_or_else(|| CliError::usage(format!("missing --{key}")))?;
        let p = HalfSpacePoint::new(parse_list(&text, key)?)?;
        if p.dim() != self.model.d {
            return Err(CliError::usage(format!("--{key} has {} coordinates, --dim is {}", p.dim(), self.model.d)));
        }
        Ok(p)
    }

    /// The supplied `q`, or `q_κ` solved from the model.
    fn boundary_exponent(&self, flag: Option<f64>) -> Result<f64, CliError> {
        if let Some(q) = self.file.pick_opt(flag, "q")? {
            return Ok(q);
        }
        let sol = solve_q(self.model.alpha, self.model.kappa, &self.weight()?, self.model.d, &self.spec)?;
        Ok(sol.q)
    }

    fn estimator(&self, q: Option<f64>) -> Result<HeatKernelEstimator, CliError> {
        Ok(HeatKernelEstimator::new(self.model, self.boundary_exponent(q)?)?)
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::resolve(cli)?;
    match &cli.command {
        Command::SolveQ => cmd_solve_q(&cfg),
        Command::CShape { points } => {
            let points = cfg.file.pick(*points, "points", 41)?;
            cmd_c_shape(&cfg, points)
        }
        Command::Hke { t, pair } => {
            let t = cfg.file.pick_opt(*t, "t")?.ok_or_else(|| CliError::usage("missing --t"))?;
            cmd_hke(&cfg, t, pair)
        }
        Command::Map { t, x, q, n, extent } => {
            let t = cfg.file.pick(*t, "t", 1.0)?;
            let x = cfg.point(x, "x")?;
            let n = cfg.file.pick(*n, "n", 41)?;
            let extent = cfg.file.pick(*extent, "extent", 4.0)?;
            cmd_map(&cfg, t, &x, *q, n, extent)
        }
        Command::Green { pair } => cmd_green(&cfg, pair),
        Command::GreenIntegrate { pair } => cmd_green_integrate(&cfg, pair),
        Command::Oracle { gamma, n_points, lo, hi, times } => {
            let f = &cfg.file;
            let gamma = f.pick(*gamma, "gamma", 0.5)?;
            let n_points = f.pick(*n_points, "n_points", 20)?;
            let lo = f.pick(*lo, "lo", 1e-3)?;
            let hi = f.pick(*hi, "hi", 1e3)?;
            let times = parse_list(&f.pick(times.clone(), "times", "0.01,0.1,1,10,100".to_string())?, "times")?;
            let grid = OracleGrid::axis(cfg.model.d, lo, hi, n_points, times)?;
            cmd_oracle(&cfg, gamma, &grid)
        }
        Command::Check { selector, explore, slack } => {
            let explore = *explore || cfg.file.pick(None, "explore", false)?;
            let slack = cfg.file.pick(*slack, "slack", DEFAULT_SLACK)?;
            cmd_check(&cfg, selector, explore, slack)
        }
    }
}

fn ok(table: Table) -> Outcome {
    Outcome { text: table.render(), pass: true, notes: Vec::new() }
}

fn beta_cols(b: &[f64; 4]) -> Vec<String> {
    b.iter().map(|v| num(*v)).collect()
}

pub fn cmd_solve_q(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = &cfg.model;
    let sol = solve_q(m.alpha, m.kappa, &cfg.weight()?, m.d, &cfg.spec)?;
    let mut t = Table::new(["alpha", "beta1", "beta2", "beta3", "beta4", "kappa", "q", "residual"]);
    let mut row = vec![num(m.alpha)];
    row.extend(beta_cols(&m.beta));
    row.extend([num(m.kappa), num(sol.q), num(sol.residual)]);
    t.push(row);
    Ok(ok(t))
}

pub fn cmd_c_shape(cfg: &RunConfig, points: usize) -> Result<Outcome, CliError> {
    let m = &cfg.model;
    let table = scan_shape(m.alpha, &cfg.weight()?, m.d, points, &cfg.spec)?;
    let mut t = Table::new(["q", "c", "error"]);
    for ((q, c), e) in table.q_grid.iter().zip(&table.c_values).zip(&table.c_errors) {
        t.push(vec![num(*q), num(*c), num(*e)]);
    }
    let mut notes = vec![format!(
        "minimizer {} min {} zeros {:?} edges ({}, {}) edges-blow-up {}",
        table.minimizer,
        table.min_value,
        table.zeros,
        table.edge_values.0,
        table.edge_values.1,
        table.edges_blow_up()
    )];
    let verdict = table.verify();
    if let Err(e) = &verdict {
        notes.push(e.to_string());
    }
    Ok(Outcome { text: t.render(), pass: verdict.is_ok(), notes })
}

pub fn cmd_hke(cfg: &RunConfig, time: f64, pair: &PairArgs) -> Result<Outcome, CliError> {
    let x = cfg.point(&pair.x, "x")?;
    let y = cfg.point(&pair.y, "y")?;
    let est = cfg.estimator(pair.q)?;
    let e = est.closed(time, &x, &y)?;
    let mut t = Table::new([
        "t",
        "q",
        "regime",
        "stable",
        "one_jump",
        "two_jump",
        "free_value",
        "survival_x",
        "survival_y",
        "killed_value",
    ]);
    t.push(vec![
        num(time),
        num(est.q),
        e.regime.name().into(),
        num(e.stable),
        num(e.one_jump),
        num(e.two_jump),
        num(e.free_value),
        num(e.survival_x),
        num(e.survival_y),
        num(e.killed_value),
    ]);
    Ok(ok(t))
}

/// The `y` grid of the dominance map: tangential first coordinate over
/// `[-extent, extent]` (for `d >= 2`, other coordinates as in `x`) and
/// heights log-spaced over four decades up to `extent`.
pub fn map_grid(x: &HalfSpacePoint, n: usize, extent: f64) -> Result<Vec<HalfSpacePoint>, CliError> {
    if n < 2 || !(extent > 0.0) {
        return Err(CliError::usage("map needs n >= 2 and extent > 0"));
    }
    let d = x.dim();
    let heights: Vec<f64> = (0..n).map(|j| extent * 10f64.powf(-4.0 * (1.0 - j as f64 / (n - 1) as f64))).collect();
    let mut ys = Vec::new();
    if d == 1 {
        for h in heights {
            ys.push(HalfSpacePoint::new(vec![h])?);
        }
        return Ok(ys);
    }
    for &h in &heights {
        for i in 0..n {
            let u = -extent + 2.0 * extent * i as f64 / (n - 1) as f64;
            let mut c = x.coords().to_vec();
            c[0] = u;
            c[d - 1] = h;
            ys.push(HalfSpacePoint::new(c)?);
        }
    }
    Ok(ys)
}

pub fn cmd_map(
    cfg: &RunConfig,
    time: f64,
    x: &HalfSpacePoint,
    q: Option<f64>,
    n: usize,
    extent: f64,
) -> Result<Outcome, CliError> {
    let est = cfg.estimator(q)?;
    let ys = map_grid(x, n, extent)?;
    let cells: Vec<_> =
        ys.par_iter().map(|y| est.dominance_map(time, x, std::slice::from_ref(y)).map(|mut v| v.remove(0))).collect();
    let d = x.dim();
    let mut header: Vec<String> = (1..=d).map(|i| format!("y{i}")).collect();
    header.extend(["tag", "stable", "one_jump", "two_jump", "free_value"].map(String::from));
    let mut t = Table::new(header);
    for (y, cell) in ys.iter().zip(cells) {
        let (e, tag) = cell?;
        let mut row: Vec<String> = y.coords().iter().map(|v| num(*v)).collect();
        row.extend([tag.name().to_string(), num(e.stable), num(e.one_jump), num(e.two_jump), num(e.free_value)]);
        t.push(row);
    }
    Ok(ok(t))
}

pub fn cmd_green(cfg: &RunConfig, pair: &PairArgs) -> Result<Outcome, CliError> {
    let x = cfg.point(&pair.x, "x")?;
    let y = cfg.point(&pair.y, "y")?;
    let q = cfg.boundary_exponent(pair.q)?;
    let g = green_estimate(&cfg.model, q, &x, &y)?;
    let free = green_free(&cfg.model, &x, &y)?;
    let mut t = Table::new(["q", "case", "value", "h_factor", "small_time", "large_time", "q_hat", "free"]);
    t.push(vec![
        num(q),
        g.case.name().into(),
        num(g.value),
        num(g.h_factor),
        num(g.small_time),
        num(g.large_time),
        num(g.q_hat),
        num(free),
    ]);
    Ok(ok(t))
}

pub fn cmd_green_integrate(cfg: &RunConfig, pair: &PairArgs) -> Result<Outcome, CliError> {
    let x = cfg.point(&pair.x, "x")?;
    let y = cfg.point(&pair.y, "y")?;
    let est = cfg.estimator(pair.q)?;
    let integrated = green_by_time_integration(&est, &x, &y, &cfg.spec)?;
    let closed = green_estimate(&cfg.model, est.q, &x, &y)?;
    let mut t = Table::new(["q", "case", "integrated", "estimate", "ratio"]);
    t.push(vec![
        num(est.q),
        closed.case.name().into(),
        num(integrated.value),
        num(closed.value),
        num(integrated.value / closed.value),
    ]);
    Ok(ok(t))
}

pub fn oracle_id(gamma: f64, alpha: f64, d: usize) -> String {
    format!("oracle_g{gamma}_a{alpha}_d{d}")
}

pub fn cmd_oracle(cfg: &RunConfig, gamma: f64, grid: &OracleGrid) -> Result<Outcome, CliError> {
    let op = OracleParams::new(gamma, cfg.model.d, cfg.model.alpha)?;
    let id = oracle_id(gamma, op.alpha, op.dim);
    let ceiling = frozen_ceilings().get(&id).unwrap_or(f64::INFINITY);
    let cmp = compare_oracle_vs_estimate(&op, &cfg.spec, grid, ceiling)?;
    let mut t = Table::new(["t", "x", "y", "oracle", "estimate", "ratio"]);
    for r in &cmp.rows {
        t.push(vec![
            num(r.t),
            num(grid.points[r.x_index].height()),
            num(grid.points[r.y_index].height()),
            num(r.oracle),
            num(r.estimate),
            num(r.ratio),
        ]);
    }
    let mut notes = vec![format!("q_fit {} r_squared {}", cmp.fit.q_fit, cmp.fit.r_squared)];
    notes.push(summary(&cmp.report));
    Ok(Outcome { text: t.render(), pass: cmp.report.pass, notes })
}

/// Expands `all` (the lemma registry), `extras` and comma lists.
pub fn select(selector: &str) -> Result<Vec<&'static str>, CliError> {
    let mut ids = Vec::new();
    for part in selector.split(',').map(str::trim) {
        match part {
            "all" => ids.extend(LEMMA_IDS),
            "extras" => ids.extend(EXTRA_IDS),
            id => match LEMMA_IDS.iter().chain(EXTRA_IDS.iter()).find(|k| **k == id) {
                Some(k) => ids.push(*k),
                None => return Err(CliError::usage(format!("unknown check id `{id}`"))),
            },
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    ids.retain(|id| seen.insert(*id));
    Ok(ids)
}

fn summary(r: &ComparabilityReport) -> String {
    format!(
        "{} {}: samples {} excluded {} ratio [{:e}, {:e}] required {:e} ceiling {:e} {}",
        r.lemma_id,
        r.sidedness.name(),
        r.samples,
        r.excluded,
        r.min_ratio,
        r.max_ratio,
        r.required_constant(),
        r.ceiling,
        if r.pass { "pass" } else { "FAIL" }
    )
}

fn report_row(id: &str, region: &str, r: &ComparabilityReport) -> Vec<String> {
    vec![
        id.to_string(),
        region.to_string(),
        r.sidedness.name().to_string(),
        r.samples.to_string(),
        r.excluded.to_string(),
        num(r.min_ratio),
        num(r.max_ratio),
        num(r.required_constant()),
        num(r.ceiling),
        r.pass.to_string(),
    ]
}

/// Runs the selected checks. With `explore`, the output is a constants file
/// holding `slack` times each required constant.
pub fn cmd_check(cfg: &RunConfig, selector: &str, explore: bool, slack: f64) -> Result<Outcome, CliError> {
    let ids = select(selector)?;
    if cfg.budget == 0 {
        return Err(CliError::usage("budget must be positive"));
    }
    if explore && !(slack >= 1.0) {
        return Err(CliError::usage("slack must be at least 1"));
    }
    let mut table = Table::new([
        "id",
        "region",
        "sidedness",
        "samples",
        "excluded",
        "min_ratio",
        "max_ratio",
        "required",
        "ceiling",
        "pass",
    ]);
    let mut frozen = Ceilings::default();
    let mut pass = true;
    let mut notes = Vec::new();
    for id in ids {
        let report = if explore {
            suite::explore(id, cfg.seed, cfg.budget, &cfg.spec)?
        } else {
            suite::check(id, cfg.seed, cfg.budget, &cfg.spec)?
        };
        table.push(report_row(id, "", &report));
        for region in &report.regions {
            let name = region.lemma_id.rsplit('/').next().unwrap_or("");
            table.push(report_row(id, name, region));
        }
        notes.push(summary(&report));
        if explore {
            if report.excluded_fraction() > dkl_core::report::MAX_EXCLUDED_FRACTION {
                pass = false;
            } else {
                frozen.insert(id, freeze_value(report.required_constant(), slack));
            }
        } else {
            pass &= report.pass;
        }
    }
    let text = if explore { frozen.emit() } else { table.render() };
    Ok(Outcome { text, pass, notes })
}
