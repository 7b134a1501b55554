//! Command-line front end: flag/config-file parsing, dispatch, CSV emission.
//!
//! Every command writes CSV (or `name,value` rows) with `#`-prefixed
//! provenance comments — version, parameters, and for simulations the seed —
//! and nothing nondeterministic, so a re-run with the same inputs produces
//! byte-identical output.  Exit codes separate user mistakes from numerical
//! trouble: 0 success, 2 usage/config, 3 numerical failure.

use crate::analysis::compare_linear_vs_constant;
use crate::bvp::{solve_ruin, BvpConfig, GridSpacing, TailMode};
use crate::error::{Error, Result};
use crate::exact::{exact_curve, CurvePoint, Method, RuinCurve};
use crate::model::{
    classify_premium, safe_load_check, ModelCase, ModelSpec, PremiumFunction, TailRegime,
};
use crate::montecarlo::simulate_ruin;
use crate::odecore::{build_coefficients, char_roots};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Which subcommand is being run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Compute,
    Simulate,
    Roots,
    Compare,
    Check,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CommandKind::Compute => "compute",
            CommandKind::Simulate => "simulate",
            CommandKind::Roots => "roots",
            CommandKind::Compare => "compare",
            CommandKind::Check => "check",
        })
    }
}

/// Reserve grid request: `start:stop:points`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// Node placement along the reserve grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Spacing {
    Uniform,
    /// Cell widths grow by `ratio` per cell (nodes cluster near zero).
    Geometric { ratio: f64 },
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spacing::Uniform => f.write_str("uniform"),
            Spacing::Geometric { ratio } => write!(f, "geometric:{ratio}"),
        }
    }
}

/// Curve evaluation method, or automatic selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Exact,
    Bvp,
    Mc,
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodChoice::Auto => "auto",
            MethodChoice::Exact => "exact",
            MethodChoice::Bvp => "bvp",
            MethodChoice::Mc => "mc",
        })
    }
}

/// Fully merged run configuration: defaults ← config file ← flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub case: ModelCase,
    pub lambda: f64,
    pub mu: f64,
    /// Premium mini-grammar spec, e.g. `linear:1,0.5` (kept textual so the
    /// config round-trips exactly).
    pub premium: String,
    pub u: Option<GridSpec>,
    pub spacing: Spacing,
    pub method: MethodChoice,
    pub tol: f64,
    pub paths: u64,
    pub horizon: f64,
    pub seed: u64,
    /// Worker threads for the simulation pool; 0 keeps the library default.
    pub workers: usize,
    pub output: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Argument surface.
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "ruinprob",
    version,
    about = "Ruin probabilities for renewal risk models with surplus-dependent premiums"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Evaluate a ruin-probability curve (closed form or BVP solver).
    Compute(CommonArgs),
    /// Monte Carlo estimate of the ruin probability on a reserve grid.
    Simulate(CommonArgs),
    /// Characteristic roots, safe-load verdict, and tail regime.
    Roots(CommonArgs),
    /// Ratio table: linear premium c+εu against the constant premium c.
    Compare(CommonArgs),
    /// Validate the configuration and report the model diagnosis.
    Check(CommonArgs),
}

impl CliCommand {
    fn split(self) -> (CommandKind, CommonArgs) {
        match self {
            CliCommand::Compute(a) => (CommandKind::Compute, a),
            CliCommand::Simulate(a) => (CommandKind::Simulate, a),
            CliCommand::Roots(a) => (CommandKind::Roots, a),
            CliCommand::Compare(a) => (CommandKind::Compare, a),
            CliCommand::Check(a) => (CommandKind::Check, a),
        }
    }
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Config file (`key = value` per line, `#` comments); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model case: exp-exp | erlang2-exp | exp-erlang2.
    #[arg(long)]
    case: Option<String>,
    /// Interarrival rate parameter λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Claim-size rate parameter μ.
    #[arg(long)]
    mu: Option<f64>,
    /// Premium: const:<c> | linear:<c>,<eps> | poly:<c>,<e1>[,<e2>...] | ratl:<c>,<a>.
    #[arg(long)]
    premium: Option<String>,
    /// Reserve grid start:stop:points, e.g. 0:10:11.
    #[arg(long)]
    u: Option<String>,
    /// Grid spacing: uniform | geometric:<ratio>.
    #[arg(long)]
    spacing: Option<String>,
    /// Method: auto | exact | bvp | mc.
    #[arg(long)]
    method: Option<String>,
    /// Solver tolerance (BVP truncation/curve tolerance).
    #[arg(long)]
    tol: Option<f64>,
    /// Number of simulation paths.
    #[arg(long)]
    paths: Option<u64>,
    /// Simulation time horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// RNG seed (recorded in the output header).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for simulation; 0 = automatic. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the merged configuration to this file and exit.
    #[arg(long = "dump-config")]
    dump_config: Option<PathBuf>,
}

/// Pre-merge field collection: every setting optional, source-agnostic.
#[derive(Debug, Default)]
struct Draft {
    case: Option<String>,
    lambda: Option<f64>,
    mu: Option<f64>,
    premium: Option<String>,
    u: Option<String>,
    spacing: Option<String>,
    method: Option<String>,
    tol: Option<f64>,
    paths: Option<u64>,
    horizon: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
    output: Option<PathBuf>,
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("config key {key}: cannot parse value {value:?}")))
}

impl Draft {
    /// Applies one config-file entry.  `command` is accepted (the dump
    /// writes it) but the subcommand on the command line always wins.
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "command" => {}
            "case" => self.case = Some(value.to_string()),
            "lambda" => self.lambda = Some(parse_field(key, value)?),
            "mu" => self.mu = Some(parse_field(key, value)?),
            "premium" => self.premium = Some(value.to_string()),
            "u" => self.u = Some(value.to_string()),
            "spacing" => self.spacing = Some(value.to_string()),
            "method" => self.method = Some(value.to_string()),
            "tol" => self.tol = Some(parse_field(key, value)?),
            "paths" => self.paths = Some(parse_field(key, value)?),
            "horizon" => self.horizon = Some(parse_field(key, value)?),
            "seed" => self.seed = Some(parse_field(key, value)?),
            "workers" => self.workers = Some(parse_field(key, value)?),
            "output" => self.output = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Command-line flags override whatever the file set.
    fn overlay(&mut self, a: &CommonArgs) {
        if a.case.is_some() {
            self.case.clone_from(&a.case);
        }
        if a.lambda.is_some() {
            self.lambda = a.lambda;
        }
        if a.mu.is_some() {
            self.mu = a.mu;
        }
        if a.premium.is_some() {
            self.premium.clone_from(&a.premium);
        }
        if a.u.is_some() {
            self.u.clone_from(&a.u);
        }
        if a.spacing.is_some() {
            self.spacing.clone_from(&a.spacing);
        }
        if a.method.is_some() {
            self.method.clone_from(&a.method);
        }
        if a.tol.is_some() {
            self.tol = a.tol;
        }
        if a.paths.is_some() {
            self.paths = a.paths;
        }
        if a.horizon.is_some() {
            self.horizon = a.horizon;
        }
        if a.seed.is_some() {
            self.seed = a.seed;
        }
        if a.workers.is_some() {
            self.workers = a.workers;
        }
        if a.output.is_some() {
            self.output.clone_from(&a.output);
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing helpers.
// ---------------------------------------------------------------------------

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: expected key = value, got {raw:?}", lineno + 1))
        })?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(entries)
}

fn parse_case(s: &str) -> Result<ModelCase> {
    match s {
        "exp-exp" => Ok(ModelCase::ExpExp),
        "erlang2-exp" => Ok(ModelCase::Erlang2Exp),
        "exp-erlang2" => Ok(ModelCase::ExpErlang2),
        _ => Err(Error::Config(format!(
            "unknown case {s:?}; expected exp-exp, erlang2-exp, or exp-erlang2"
        ))),
    }
}

/// Premium mini-grammar: `const:<c>`, `linear:<c>,<eps>`,
/// `poly:<c>,<e1>[,<e2>...]`, `ratl:<c>,<a>`.
pub fn parse_premium(spec: &str) -> Result<PremiumFunction> {
    let bad = |msg: &str| {
        Error::Config(format!(
            "premium spec {spec:?}: {msg} (expected const:<c>, linear:<c>,<eps>, \
             poly:<c>,<e1>[,<e2>...], or ratl:<c>,<a>)"
        ))
    };
    let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("missing ':'"))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("non-numeric parameter"))?;
    match (kind, nums.as_slice()) {
        ("const", [c]) => Ok(PremiumFunction::Constant { c: *c }),
        ("linear", [c, eps]) => Ok(PremiumFunction::Linear { c: *c, eps: *eps }),
        ("poly", [c, eps @ ..]) if !eps.is_empty() => {
            Ok(PremiumFunction::Polynomial { c: *c, eps: eps.to_vec() })
        }
        ("ratl", [c, a]) => Ok(PremiumFunction::BoundedRational { c: *c, a: *a }),
        ("const" | "linear" | "poly" | "ratl", _) => Err(bad("wrong parameter count")),
        _ => Err(bad("unknown premium kind")),
    }
}

fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = |msg: &str| Error::Config(format!("u grid {s:?}: {msg} (expected start:stop:points)"));
    if parts.len() != 3 {
        return Err(bad("need exactly three fields"));
    }
    let start: f64 = parts[0].parse().map_err(|_| bad("non-numeric start"))?;
    let stop: f64 = parts[1].parse().map_err(|_| bad("non-numeric stop"))?;
    let points: usize = parts[2].parse().map_err(|_| bad("non-integer point count"))?;
    if !start.is_finite() || start < 0.0 {
        return Err(bad("start must be a finite reserve >= 0"));
    }
    if !stop.is_finite() || stop < start {
        return Err(bad("stop must be finite and >= start"));
    }
    if points == 0 {
        return Err(bad("need at least one point"));
    }
    if points > 1 && stop == start {
        return Err(bad("stop must exceed start for more than one point"));
    }
    Ok(GridSpec { start, stop, points })
}

fn parse_spacing(s: &str) -> Result<Spacing> {
    if s == "uniform" {
        return Ok(Spacing::Uniform);
    }
    if let Some(r) = s.strip_prefix("geometric:") {
        let ratio: f64 = r
            .parse()
            .map_err(|_| Error::Config(format!("spacing {s:?}: non-numeric ratio")))?;
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::Config(format!("spacing ratio must be > 1, got {ratio}")));
        }
        return Ok(Spacing::Geometric { ratio });
    }
    Err(Error::Config(format!(
        "unknown spacing {s:?}; expected uniform or geometric:<ratio>"
    )))
}

fn parse_method(s: &str) -> Result<MethodChoice> {
    match s {
        "auto" => Ok(MethodChoice::Auto),
        "exact" => Ok(MethodChoice::Exact),
        "bvp" => Ok(MethodChoice::Bvp),
        "mc" => Ok(MethodChoice::Mc),
        _ => Err(Error::Config(format!(
            "unknown method {s:?}; expected auto, exact, bvp, or mc"
        ))),
    }
}

/// Merges defaults, the config file (if any), and flags into a validated
/// [`RunConfig`]; also returns the `--dump-config` request.
fn finalize(kind: CommandKind, args: CommonArgs) -> Result<(RunConfig, Option<PathBuf>)> {
    let mut draft = Draft::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        for (k, v) in parse_config_file(&text)? {
            draft.set(&k, &v)?;
        }
    }
    draft.overlay(&args);

    let require = |name: &str, v: Option<String>| {
        v.ok_or_else(|| Error::Config(format!("missing required setting --{name}")))
    };
    let case = parse_case(&require("case", draft.case)?)?;
    let lambda = draft
        .lambda
        .ok_or_else(|| Error::Config("missing required setting --lambda".into()))?;
    let mu = draft.mu.ok_or_else(|| Error::Config("missing required setting --mu".into()))?;
    let premium = require("premium", draft.premium)?;
    parse_premium(&premium)?; // fail early on grammar errors
    let u = draft.u.as_deref().map(parse_grid).transpose()?;
    if u.is_none()
        && matches!(kind, CommandKind::Compute | CommandKind::Simulate | CommandKind::Compare)
    {
        return Err(Error::Config(format!("{kind} needs a reserve grid: --u start:stop:points")));
    }
    let spacing = draft.spacing.as_deref().map(parse_spacing).transpose()?.unwrap_or(Spacing::Uniform);
    let method = draft.method.as_deref().map(parse_method).transpose()?.unwrap_or(MethodChoice::Auto);
    let tol = draft.tol.unwrap_or(1e-8);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!("tol must be in (0, 1), got {tol}")));
    }
    let paths = draft.paths.unwrap_or(200_000);
    if paths == 0 {
        return Err(Error::Config("paths must be at least 1".into()));
    }
    let horizon = draft.horizon.unwrap_or(200.0);
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Config(format!("horizon must be positive and finite, got {horizon}")));
    }
    let cfg = RunConfig {
        command: kind,
        case,
        lambda,
        mu,
        premium,
        u,
        spacing,
        method,
        tol,
        paths,
        horizon,
        seed: draft.seed.unwrap_or(1729),
        workers: draft.workers.unwrap_or(0),
        output: draft.output,
    };
    Ok((cfg, args.dump_config))
}

/// Serializes the merged configuration in the config-file grammar; parsing
/// the result back (under the same subcommand) reproduces the RunConfig.
pub fn dump_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ruinprob {} configuration", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "command = {}", cfg.command);
    let _ = writeln!(s, "case = {}", cfg.case);
    let _ = writeln!(s, "lambda = {}", cfg.lambda);
    let _ = writeln!(s, "mu = {}", cfg.mu);
    let _ = writeln!(s, "premium = {}", cfg.premium);
    if let Some(g) = &cfg.u {
        let _ = writeln!(s, "u = {}:{}:{}", g.start, g.stop, g.points);
    }
    let _ = writeln!(s, "spacing = {}", cfg.spacing);
    let _ = writeln!(s, "method = {}", cfg.method);
    let _ = writeln!(s, "tol = {}", cfg.tol);
    let _ = writeln!(s, "paths = {}", cfg.paths);
    let _ = writeln!(s, "horizon = {}", cfg.horizon);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "workers = {}", cfg.workers);
    if let Some(o) = &cfg.output {
        let _ = writeln!(s, "output = {}", o.display());
    }
    s
}

// ---------------------------------------------------------------------------
// Execution.
// ---------------------------------------------------------------------------

/// Number formatting for CSV cells: plain decimal in the comfortable range,
/// scientific outside it.  `{}`/`{:e}` are shortest-round-trip, so output is
/// deterministic and parses back to the identical f64.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-4..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn build_model(cfg: &RunConfig) -> Result<ModelSpec> {
    ModelSpec::new(cfg.case, cfg.lambda, cfg.mu, parse_premium(&cfg.premium)?)
}

fn grid_values(g: &GridSpec, spacing: Spacing) -> Vec<f64> {
    if g.points == 1 {
        return vec![g.start];
    }
    let n = g.points - 1;
    let span = g.stop - g.start;
    (0..=n)
        .map(|i| match spacing {
            Spacing::Uniform => g.start + span * i as f64 / n as f64,
            Spacing::Geometric { ratio } => {
                let lnr = ratio.ln();
                g.start + span * (i as f64 * lnr).exp_m1() / (n as f64 * lnr).exp_m1()
            }
        })
        .collect()
}

fn provenance(cfg: &RunConfig, extra: &str) -> String {
    let mut s = format!("# ruinprob {}\n", env!("CARGO_PKG_VERSION"));
    let grid = match &cfg.u {
        Some(g) => format!("{}:{}:{}", g.start, g.stop, g.points),
        None => "-".to_string(),
    };
    let _ = writeln!(
        s,
        "# command={} case={} lambda={} mu={} premium={} u={} spacing={}{}",
        cfg.command, cfg.case, cfg.lambda, cfg.mu, cfg.premium, grid, cfg.spacing, extra
    );
    s
}

fn serialize_curve(cfg: &RunConfig, curve: &RuinCurve, note: &str) -> String {
    let mut out = provenance(cfg, note);
    out.push_str("u,psi,err,method\n");
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(p.u),
            fmt_num(p.psi),
            fmt_num(p.err),
            curve.method
        );
    }
    out
}

/// Which concrete method `auto` resolves to: closed forms when the premium
/// has them, the BVP solver for the second-order cases, simulation for the
/// one case neither covers (classical model with a non-linear premium).
fn resolve_method(cfg: &RunConfig, m: &ModelSpec) -> Method {
    match cfg.method {
        MethodChoice::Exact => Method::Exact,
        MethodChoice::Bvp => Method::Bvp,
        MethodChoice::Mc => Method::Mc,
        MethodChoice::Auto => match (&m.premium, m.case) {
            (PremiumFunction::Constant { .. } | PremiumFunction::Linear { .. }, _) => Method::Exact,
            (_, ModelCase::ExpExp) => Method::Mc,
            _ => Method::Bvp,
        },
    }
}

/// Runs the BVP solver on a refinement of the requested grid and extracts
/// exactly the requested nodes (refined cells subdivide each requested
/// cell).  The solver refuses domains whose tail mass at the far end
/// exceeds `tol`, so when the requested grid stops shallow the solve domain
/// is extended — by whole refined cells, which keeps the requested nodes on
/// solver nodes — and only the requested window is reported.
fn bvp_curve(cfg: &RunConfig, m: &ModelSpec, g: &GridSpec) -> Result<RuinCurve> {
    if g.start != 0.0 {
        return Err(Error::Config(format!(
            "the bvp method anchors curves at u = 0; use --u 0:{}:{} instead",
            g.stop, g.points
        )));
    }
    if g.points < 2 {
        return Err(Error::Config("the bvp method needs a grid with at least 2 points".into()));
    }
    let cells = g.points - 1;
    let k = (200 + cells - 1) / cells; // refinement factor: >= 200 solver cells
    let n = cells * k;
    let ratio_k = match cfg.spacing {
        Spacing::Uniform => 1.0,
        Spacing::Geometric { ratio } => ratio.powf(1.0 / k as f64),
    };
    let cap = g.stop.max(400.0);
    let mut target = g.stop;
    let full = loop {
        // Cell count and u_max reaching `target` while keeping the first
        // n cells spanning exactly [0, g.stop].
        let (n_ext, u_max) = if ratio_k == 1.0 {
            let n_ext = (n as f64 * target / g.stop).ceil() as usize;
            (n_ext, g.stop * n_ext as f64 / n as f64)
        } else {
            let lnr = ratio_k.ln();
            let base = (n as f64 * lnr).exp_m1();
            let n_ext = (((target / g.stop) * base).ln_1p() / lnr).ceil() as usize;
            let n_ext = n_ext.max(n);
            (n_ext, g.stop * (n_ext as f64 * lnr).exp_m1() / base)
        };
        let grid = match cfg.spacing {
            Spacing::Uniform => GridSpacing::Uniform { n: n_ext },
            Spacing::Geometric { .. } => GridSpacing::Geometric { n: n_ext, ratio: ratio_k },
        };
        let bcfg =
            BvpConfig { u_max: Some(u_max), grid, tol: cfg.tol, tail_mode: TailMode::AsymptoticSeed };
        match solve_ruin(m, &bcfg) {
            Ok(curve) => break curve,
            Err(Error::Truncation(_)) if target < cap => target = (2.0 * target).min(cap),
            Err(e) => return Err(e),
        }
    };
    // Extracted nodes sit within rounding of the requested grid; report the
    // requested coordinates.
    let us = grid_values(g, cfg.spacing);
    let points = full
        .points
        .iter()
        .step_by(k)
        .take(g.points)
        .zip(&us)
        .map(|(p, &u)| CurvePoint { u, ..*p })
        .collect::<Vec<CurvePoint>>();
    debug_assert_eq!(points.len(), g.points);
    Ok(RuinCurve { points, method: full.method, model: full.model })
}

fn mc_curve(cfg: &RunConfig, m: &ModelSpec, us: &[f64]) -> Result<RuinCurve> {
    let mut points = Vec::with_capacity(us.len());
    for &u in us {
        let r = simulate_ruin(m, u, cfg.horizon, cfg.paths, cfg.seed)?;
        points.push(CurvePoint { u, psi: r.psi_hat, err: r.half_width_95 });
    }
    Ok(RuinCurve { points, method: Method::Mc, model: m.clone() })
}

fn cmd_compute(cfg: &RunConfig) -> Result<String> {
    let m = build_model(cfg)?;
    let g = cfg.u.as_ref().expect("validated in finalize");
    let us = grid_values(g, cfg.spacing);
    let method = resolve_method(cfg, &m);
    let note = format!(" method={method} tol={}", fmt_num(cfg.tol));
    let curve = match method {
        Method::Exact => exact_curve(&m, &us)?,
        Method::Bvp => bvp_curve(cfg, &m, g)?,
        Method::Mc => mc_curve(cfg, &m, &us)?,
        Method::Asymptotic => {
            return Err(Error::Config("method asymptotic is not a compute backend".into()))
        }
    };
    let note = if method == Method::Mc {
        format!("{note} seed={} paths={} horizon={}", cfg.seed, cfg.paths, fmt_num(cfg.horizon))
    } else {
        note
    };
    Ok(serialize_curve(cfg, &curve, &note))
}

fn init_workers(n: usize) {
    static ONCE: std::sync::Once = std::sync::Once::new();
    if n > 0 {
        ONCE.call_once(|| {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        });
    }
}

fn cmd_simulate(cfg: &RunConfig) -> Result<String> {
    let m = build_model(cfg)?;
    let g = cfg.u.as_ref().expect("validated in finalize");
    let us = grid_values(g, cfg.spacing);
    init_workers(cfg.workers);
    // Worker count is deliberately absent: it cannot influence the
    // estimates, so files from different pool sizes stay byte-identical.
    let extra = format!(" seed={} paths={} horizon={}", cfg.seed, cfg.paths, fmt_num(cfg.horizon));
    let mut out = provenance(cfg, &extra);
    out.push_str("u,psi_hat,ci95,n,horizon,truncated\n");
    for &u in &us {
        let r = simulate_ruin(&m, u, cfg.horizon, cfg.paths, cfg.seed)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(u),
            fmt_num(r.psi_hat),
            fmt_num(r.half_width_95),
            r.n_paths,
            fmt_num(r.horizon),
            r.truncation_flag
        );
    }
    Ok(out)
}

fn regime_name(r: Option<TailRegime>) -> &'static str {
    match r {
        Some(TailRegime::OneRoot) => "one-root",
        Some(TailRegime::TwoRoot) => "two-root",
        None => "-",
    }
}

fn cmd_roots(cfg: &RunConfig) -> Result<String> {
    let m = build_model(cfg)?;
    let class = classify_premium(&m.premium)?;
    let report = safe_load_check(&m)?;
    let mut out = provenance(cfg, "");
    out.push_str("name,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k},{v}");
    };
    row("case", cfg.case.to_string());
    row("premium_class", class.to_string());
    row("safe_load", report.satisfied.to_string());
    row("margin", fmt_num(report.margin));
    row("regime", regime_name(report.regime).to_string());
    match m.case {
        ModelCase::ExpExp => {
            // First-order case: a single decay rate μ − λ/p(0).
            row("r", fmt_num(m.mu - m.lambda / m.premium.eval(0.0)));
        }
        ModelCase::Erlang2Exp => {
            let co = build_coefficients(&m)?;
            let (lo, hi) = char_roots(&co, 0.0)?;
            row("rho_hat_1", fmt_num(lo));
            row("rho_hat_2", fmt_num(hi));
        }
        ModelCase::ExpErlang2 => {
            let co = build_coefficients(&m)?;
            let (lo, hi) = char_roots(&co, 0.0)?;
            row("sigma_1", fmt_num(lo));
            row("sigma_2", fmt_num(hi));
        }
    }
    Ok(out)
}

fn cmd_compare(cfg: &RunConfig) -> Result<String> {
    let (c, eps) = match parse_premium(&cfg.premium)? {
        PremiumFunction::Linear { c, eps } => (c, eps),
        _ => {
            return Err(Error::Config(
                "compare needs a linear premium: --premium linear:<c>,<eps>".into(),
            ))
        }
    };
    let g = cfg.u.as_ref().expect("validated in finalize");
    let us = grid_values(g, cfg.spacing);
    let cmp = compare_linear_vs_constant(cfg.case, c, eps, cfg.lambda, cfg.mu, &us)?;
    let mut out = provenance(cfg, "");
    if let Some(note) = &cmp.note {
        let _ = writeln!(out, "# note: {note}");
    }
    out.push_str("u,psi_linear,psi_const,ratio\n");
    for r in &cmp.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(r.u),
            fmt_num(r.psi_linear),
            fmt_num(r.psi_constant),
            fmt_num(r.ratio)
        );
    }
    Ok(out)
}

fn cmd_check(cfg: &RunConfig) -> Result<String> {
    let m = build_model(cfg)?;
    let class = classify_premium(&m.premium)?;
    let report = safe_load_check(&m)?;
    let mut out = provenance(cfg, "");
    out.push_str("name,value\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "{k},{v}");
    };
    row("case", cfg.case.to_string());
    row("lambda", fmt_num(cfg.lambda));
    row("mu", fmt_num(cfg.mu));
    row("premium", cfg.premium.clone());
    row("premium_class", class.to_string());
    row("safe_load", report.satisfied.to_string());
    row("margin", fmt_num(report.margin));
    row("regime", regime_name(report.regime).to_string());
    row("method", resolve_method(cfg, &m).to_string());
    row(
        "u_grid",
        match &cfg.u {
            Some(g) => format!("{}:{}:{}", g.start, g.stop, g.points),
            None => "-".to_string(),
        },
    );
    row("ok", "true".to_string());
    Ok(out)
}

/// Parses argv and executes; `Ok(Some(text))` is for stdout, `Ok(None)`
/// means the output (or dumped config) went to a file.
pub fn try_run<I, T>(argv: I) -> Result<Option<String>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            return Ok(Some(e.to_string()));
        }
        Err(e) => return Err(Error::Config(e.to_string())),
    };
    let (kind, args) = cli.command.split();
    let (cfg, dump) = finalize(kind, args)?;
    if let Some(path) = dump {
        std::fs::write(&path, dump_config(&cfg))?;
        return Ok(None);
    }
    let text = execute(&cfg)?;
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, &text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

/// Dispatches a validated configuration to its command.
pub fn execute(cfg: &RunConfig) -> Result<String> {
    match cfg.command {
        CommandKind::Compute => cmd_compute(cfg),
        CommandKind::Simulate => cmd_simulate(cfg),
        CommandKind::Roots => cmd_roots(cfg),
        CommandKind::Compare => cmd_compare(cfg),
        CommandKind::Check => cmd_check(cfg),
    }
}

/// Process entry point: prints output/errors, returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match try_run(argv) {
        Ok(Some(text)) => {
            print!("{text}");
            0
        }
        Ok(None) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
