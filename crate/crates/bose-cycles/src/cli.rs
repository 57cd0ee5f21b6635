//! Command-line front end. `run` parses arguments, dispatches to the library and renders
//! a CSV table or a single JSON object.
//!
//! Exit codes: 0 success, 1 domain error (or a failed `selfcheck`), 2 usage error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::bec_observables::{
    condensate_density_ideal, condensate_sandwich, cycle_distribution, free_energy_density_ideal, limit_shape_finite,
    limit_shape_macroscopic, solve_fugacity, Regime,
};
use crate::cycle_recursion::{
    dcp_gamma_bracket, dcp_table, dcp_weights, difference_identity_check, ideal_table, normalization_residual,
    partition_sum_oracle, recurse, recurse_exact, WeightSequence,
};
use crate::error::{domain, Error, Result};
use crate::lemma_g::{
    check_variance_zero, eval_g_fourier, eval_g_oracle, f_n_forms, random_config, summarize, InteractionConfig,
    Truncation,
};
use crate::merger_graphs::{
    assign_edge_vectors, constraint_rank, free_dimension, incidence_rank, is_merger, parse_edge_list,
    random_bridgeless, verify_assignment, CycleMultiGraph,
};
use crate::numerics::{polylog, riemann_zeta, SystemParams};
use crate::potentials_bounds::{
    bounds_gap_closed_form, coupling_rate, dcp_critical, dcp_free_energy, expected_cycle_count, free_energy_bounds,
    pair_rate, PairPotential, PhiSequence, RateInputs, RateMode,
};

pub const DEFAULT_SEED: u64 = 20_240_917;
const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "bose-cycles",
    version,
    about = "Cycle statistics of Bose gases on a torus",
    args_override_self = true
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    #[arg(long, global = true)]
    d: Option<u32>,
    /// Box side.
    #[arg(long = "L", global = true, allow_negative_numbers = true)]
    side: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Thermal wavelength.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Particle number.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long = "rho-lambda-d", global = true, allow_negative_numbers = true)]
    rho_lambda_d: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    eps0: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    v: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    c1: Option<f64>,
    /// Pair potential, e.g. `family=gaussian, A=1, sigma=0.5`.
    #[arg(long, global = true)]
    potential: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// File of `key=value` lines; each becomes `--key value`, overridden by later flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ideal-gas cycle densities and condensate.
    Ideal,
    /// Partition-function table and cycle statistics (dcp model when --gamma is set).
    Cycles,
    /// Limit shapes of the cycle-length partition.
    Shape(ShapeArgs),
    /// Fugacity from the polylog equation.
    Fugacity,
    /// Merger-graph analysis of an edge list or of random bridgeless graphs.
    Merger(MergerArgs),
    /// Fourier representation of G for N <= 3 and the two-particle oracle.
    #[command(name = "lemma-g")]
    LemmaG(LemmaArgs),
    /// Cycle-decoupled model.
    Dcp,
    /// Free-energy bounds.
    Bounds,
    /// Coupling rates.
    Rate(RateArgs),
    /// Run the invariant suite.
    Selfcheck,
}

#[derive(Debug, Args)]
struct ShapeArgs {
    #[arg(long, default_value_t = 4.0)]
    t_max: f64,
    #[arg(long, default_value_t = 40)]
    points: usize,
}

#[derive(Debug, Args)]
struct MergerArgs {
    /// Edge-list file to analyse.
    #[arg(long)]
    check: Option<PathBuf>,
    /// Number of random bridgeless graphs to generate and verify.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 12)]
    max_vertices: usize,
    #[arg(long, default_value_t = 24)]
    max_edges: usize,
    /// Dimension of the edge vectors printed with --assign.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long)]
    assign: bool,
}

#[derive(Debug, Args)]
struct LemmaArgs {
    /// Cycle sizes, e.g. `2` or `1,1`.
    #[arg(long, default_value = "2")]
    partition: String,
    /// Comma-separated point `x` (cycle 0 is open).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, default_value_t = 2)]
    alpha_max: usize,
    #[arg(long, default_value_t = 8)]
    z_max: i64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Also run the transfer-matrix oracle (d = 1, N = 2).
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// JSON interaction configuration to summarize instead.
    #[arg(long)]
    interaction: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Pairs)]
    mode: ModeArg,
    /// Grid points of an `a`-scan over `[0, c]`; 0 disables the scan.
    #[arg(long, default_value_t = 0)]
    points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Pairs,
    SingleCircle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Null => Value::Null,
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

/// Output of one subcommand: an optional table plus named summary values.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub kind: String,
    pub params: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

impl Report {
    fn new(kind: &str) -> Self {
        Report { kind: kind.to_string(), ..Default::default() }
    }

    fn columns(mut self, cols: &[&str]) -> Self {
        self.columns = cols.iter().map(|s| s.to_string()).collect();
        self
    }

    fn param(&mut self, key: &str, v: impl serde::Serialize) {
        self.params.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn put(&mut self, key: &str, v: impl Into<Cell>) {
        self.summary.push((key.to_string(), v.into()));
    }

    pub fn schema(&self) -> String {
        format!("bose-cycles/{}/{SCHEMA_VERSION}", self.kind)
    }

    /// Header, table rows, then one `name,value` row per summary entry padded to the
    /// table width. Without a table the header is `name,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let width = self.columns.len().max(2);
        if self.columns.is_empty() {
            out.push_str("name,value\n");
        } else {
            out.push_str(&self.columns.join(","));
            out.push('\n');
        }
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (k, v) in &self.summary {
            let mut cells = vec![k.clone(), v.csv()];
            cells.resize(width, String::new());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut obj = Map::new();
        obj.insert("schema".into(), json!(self.schema()));
        obj.insert("params".into(), Value::Object(self.params.clone()));
        if !self.columns.is_empty() {
            obj.insert("columns".into(), json!(self.columns));
            let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
            obj.insert("rows".into(), Value::Array(rows));
        }
        for (k, v) in &self.summary {
            obj.insert(k.clone(), v.json());
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable");
        s.push('\n');
        s
    }
}

const SUBCOMMANDS: [&str; 10] =
    ["ideal", "cycles", "shape", "fugacity", "merger", "lemma-g", "dcp", "bounds", "rate", "selfcheck"];

/// Reads `--config FILE` and splices its `key=value` lines in as flags directly after
/// the subcommand name, so that flags written later on the command line win.
fn expand_config(args: &[String]) -> std::result::Result<Vec<String>, String> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            path = args.get(i + 1).cloned();
            if path.is_none() {
                return Err("--config needs a file argument".into());
            }
            i += 2;
            continue;
        }
        if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
        }
        i += 1;
    }
    let Some(path) = path else { return Ok(args.to_vec()) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config file {path}: {e}"))?;
    let mut extra = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value, got '{line}'", lineno + 1))?;
        let k = k.trim().trim_start_matches('-');
        let v = v.trim();
        if k == "config" {
            return Err(format!("config line {}: nested config files are not supported", lineno + 1));
        }
        extra.push(format!("--{k}"));
        if !(v.eq_ignore_ascii_case("true") && !v.is_empty()) {
            extra.push(v.to_string());
        }
    }
    let pos = args.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())).map_or(args.len(), |p| p + 1);
    let mut out = args[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[pos..]);
    Ok(out)
}

/// Entry point used by the binary: writes to stdout/stderr and returns the exit code.
pub fn run(args: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// `run` with explicit output streams.
pub fn run_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = dispatch(&cli);
    let (report, code) = match result {
        Ok(pair) => pair,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return if matches!(e, Error::Usage(_)) { 2 } else { 1 };
        }
    };
    let text = match cli.common.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    match &cli.common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    code
}

fn dispatch(cli: &Cli) -> Result<(Report, i32)> {
    let c = &cli.common;
    let report = match &cli.command {
        Command::Ideal => cmd_ideal(c)?,
        Command::Cycles => cmd_cycles(c)?,
        Command::Shape(a) => cmd_shape(c, a)?,
        Command::Fugacity => cmd_fugacity(c)?,
        Command::Merger(a) => cmd_merger(c, a)?,
        Command::LemmaG(a) => cmd_lemma(c, a)?,
        Command::Dcp => cmd_dcp(c)?,
        Command::Bounds => cmd_bounds(c)?,
        Command::Rate(a) => cmd_rate(c, a)?,
        Command::Selfcheck => {
            let r = cmd_selfcheck(c)?;
            let all = r.rows.iter().all(|row| row[1] == Cell::Bool(true));
            return Ok((r, if all { 0 } else { 1 }));
        }
    };
    Ok((report, 0))
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn system_params(c: &Common) -> Result<SystemParams> {
    let d = c.d.unwrap_or(3);
    let beta = c.beta.unwrap_or(1.0);
    let lambda = c.lambda.unwrap_or(1.0);
    let n = c.n.ok_or_else(|| usage("--N is required"))?;
    match (c.side, c.rho_lambda_d) {
        (Some(side), None) => SystemParams::new(d, side, beta, lambda, n),
        (None, Some(r)) => SystemParams::with_density(d, r, lambda, beta, n),
        (Some(_), Some(_)) => Err(usage("give either --L or --rho-lambda-d, not both")),
        (None, None) => Err(usage("one of --L or --rho-lambda-d is required")),
    }
}

fn potential(c: &Common) -> Result<PairPotential> {
    match &c.potential {
        Some(s) => PairPotential::parse(s),
        None => Ok(PairPotential::Zero),
    }
}

fn put_params(r: &mut Report, p: &SystemParams) {
    r.param("d", p.d);
    r.param("L", p.side);
    r.param("beta", p.beta);
    r.param("lambda", p.lambda);
    r.param("N", p.n);
    r.param("rho_lambda_d", p.rho_lambda_d());
}

fn cmd_ideal(c: &Common) -> Result<Report> {
    let p = system_params(c)?;
    let table = ideal_table(&p)?;
    let dist = cycle_distribution(&table)?;
    let mut r = Report::new("ideal").columns(&["n", "q_n", "rho_n", "rho_n_over_q_n"]);
    put_params(&mut r, &p);
    for n in 1..=p.n {
        let q = p.q_value(n);
        let rho = dist.get(n);
        r.rows.push(vec![n.into(), q.into(), rho.into(), (rho / q).into()]);
    }
    r.put("rho0", condensate_density_ideal(&table)?);
    r.put("rho", p.rho());
    r.put("rho0_over_rho", condensate_density_ideal(&table)? / p.rho());
    r.put("free_energy_density", free_energy_density_ideal(&table)?);
    r.put("normalization_residual", normalization_residual(&table));
    Ok(r)
}

fn cmd_cycles(c: &Common) -> Result<Report> {
    let p = system_params(c)?;
    let table = match c.gamma {
        Some(g) => dcp_table(&p, g)?,
        None => ideal_table(&p)?,
    };
    let dist = cycle_distribution(&table)?;
    let mut r = Report::new("cycles").columns(&["n", "ln_Q_n", "rho_n"]);
    put_params(&mut r, &p);
    r.param("gamma", c.gamma);
    for n in 1..=p.n {
        r.rows.push(vec![n.into(), table.ln_q(n).into(), dist.get(n).into()]);
    }
    let count = expected_cycle_count(&dist);
    r.put("difference_identity_residual", difference_identity_check(table.weights(), &table));
    r.put("normalization_residual", normalization_residual(&table));
    r.put("expected_cycle_count", count.expected);
    r.put("cycle_count_per_particle", count.per_particle);
    if c.gamma.is_none() {
        let s = condensate_sandwich(&table, c.c.unwrap_or(1.0))?;
        r.put("sandwich_lower", s.lower);
        r.put("rho0", s.rho0);
        r.put("sandwich_upper", s.upper);
        r.put("sandwich_holds", s.holds());
    }
    Ok(r)
}

fn cmd_shape(c: &Common, a: &ShapeArgs) -> Result<Report> {
    let d = c.d.unwrap_or(3);
    let rl = c.rho_lambda_d.ok_or_else(|| usage("--rho-lambda-d is required"))?;
    if !(a.t_max > 0.0) || a.points == 0 {
        return Err(domain("--t-max must be positive and --points at least 1"));
    }
    let fug = solve_fugacity(rl, d)?;
    let mut r = Report::new("shape").columns(&["t", "finite", "macroscopic"]);
    r.param("d", d);
    r.param("rho_lambda_d", rl);
    for i in 1..=a.points {
        let t = a.t_max * i as f64 / a.points as f64;
        let macro_shape =
            if fug.regime == Regime::AtOrAboveCritical { Some(limit_shape_macroscopic(t)?) } else { None };
        r.rows.push(vec![t.into(), limit_shape_finite(t, &fug, rl, d)?.into(), macro_shape.into()]);
    }
    r.put("z", fug.z);
    r.put("regime", regime_name(fug.regime));
    Ok(r)
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::BelowCritical => "below_critical",
        Regime::AtOrAboveCritical => "at_or_above_critical",
    }
}

fn cmd_fugacity(c: &Common) -> Result<Report> {
    let d = c.d.unwrap_or(3);
    let rl = c.rho_lambda_d.ok_or_else(|| usage("--rho-lambda-d is required"))?;
    let f = solve_fugacity(rl, d)?;
    let mut r = Report::new("fugacity");
    r.param("d", d);
    r.param("rho_lambda_d", rl);
    let crit = riemann_zeta(d as f64 / 2.0)?;
    r.put("z", f.z);
    r.put("beta_mu", if f.beta_mu.is_finite() { Cell::Float(f.beta_mu) } else { Cell::Null });
    r.put("regime", regime_name(f.regime));
    r.put("critical_rho_lambda_d", crit);
    let residual = match f.regime {
        Regime::BelowCritical => polylog(d as f64 / 2.0, f.z)? - rl,
        Regime::AtOrAboveCritical => 0.0,
    };
    r.put("residual", residual);
    Ok(r)
}

struct MergerSummary {
    merger: bool,
    k: usize,
    n_i: Option<usize>,
    rank: usize,
    bridges: usize,
}

fn merger_summary(g: &CycleMultiGraph) -> MergerSummary {
    MergerSummary {
        merger: is_merger(g),
        k: constraint_rank(g),
        n_i: free_dimension(g).ok(),
        rank: incidence_rank(g),
        bridges: g.bridges().len(),
    }
}

fn cmd_merger(c: &Common, a: &MergerArgs) -> Result<Report> {
    match (&a.check, a.random) {
        (Some(path), None) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| domain(format!("cannot read {}: {e}", path.display())))?;
            let g = parse_edge_list(&text)?;
            let s = merger_summary(&g);
            let mut r = Report::new("merger");
            r.param("file", path.display().to_string());
            r.put("vertices", g.vertex_count());
            r.put("edges", g.edge_count());
            r.put("is_merger", s.merger);
            r.put("K", s.k);
            r.put("N_I", s.n_i);
            r.put("rank", s.rank);
            r.put("bridges", s.bridges);
            if a.assign && s.merger {
                let asg = assign_edge_vectors(&g, a.dim)?;
                r = r.columns(&["u", "v", "vector"]);
                for (inst, vec) in g.instances().iter().zip(&asg.vectors) {
                    let v: Vec<String> = vec.iter().map(i64::to_string).collect();
                    r.rows.push(vec![
                        (g.labels()[inst.0] as i64).into(),
                        (g.labels()[inst.1] as i64).into(),
                        v.join(" ").into(),
                    ]);
                }
                r.put("assignment_verified", verify_assignment(&g, &asg));
            }
            Ok(r)
        }
        (None, Some(count)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let mut r =
                Report::new("merger-random").columns(&["index", "vertices", "edges", "K", "N_I", "rank", "verified"]);
            r.param("seed", c.seed);
            r.param("max_vertices", a.max_vertices);
            r.param("max_edges", a.max_edges);
            let mut all = true;
            for i in 0..count {
                let g = random_bridgeless(&mut rng, a.max_vertices, a.max_edges);
                let s = merger_summary(&g);
                let asg = assign_edge_vectors(&g, a.dim)?;
                let ok = s.merger && verify_assignment(&g, &asg) && s.rank == s.k;
                all &= ok;
                r.rows.push(vec![
                    i.into(),
                    g.vertex_count().into(),
                    g.edge_count().into(),
                    s.k.into(),
                    s.n_i.into(),
                    s.rank.into(),
                    ok.into(),
                ]);
            }
            r.put("all_verified", all);
            Ok(r)
        }
        _ => Err(usage("merger needs exactly one of --check FILE or --random COUNT")),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| domain(format!("cannot parse {what} entry '{p}'"))))
        .collect()
}

fn cmd_lemma(c: &Common, a: &LemmaArgs) -> Result<Report> {
    if let Some(path) = &a.interaction {
        let text = std::fs::read_to_string(path).map_err(|e| domain(format!("cannot read {}: {e}", path.display())))?;
        let cfg: InteractionConfig =
            serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        cfg.validate()?;
        let s = summarize(&cfg);
        let mut r = Report::new("lemma-g-kinematics").columns(&[
            "cycle",
            "Z_l_1",
            "mean",
            "second_moment",
            "variance",
            "variance_zero",
            "alpha_condition",
        ]);
        r.param("cycle_sizes", &cfg.cycle_sizes);
        r.param("couplings", cfg.couplings.len());
        let fmt = |v: &[String]| v.join(" ");
        for l in 0..cfg.cycle_sizes.len() {
            let chk = check_variance_zero(&cfg, l)?;
            r.rows.push(vec![
                l.into(),
                fmt(&s.z_l_1[l].iter().map(i64::to_string).collect::<Vec<_>>()).into(),
                fmt(&s.mean[l].iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>()).into(),
                s.second_moment[l].into(),
                s.variance[l].into(),
                chk.variance_zero.into(),
                chk.alpha_condition.into(),
            ]);
        }
        r.put("mean_forms_agree", s.mean_forms_agree);
        return Ok(r);
    }
    let sizes: Vec<usize> = parse_list(&a.partition, "partition")?;
    let n: usize = sizes.iter().sum();
    let d = c.d.unwrap_or(1);
    let p = SystemParams::new(d, c.side.unwrap_or(4.0), c.beta.unwrap_or(0.1), c.lambda.unwrap_or(1.0), n)?;
    let pot = potential(c)?;
    let x: Vec<f64> = match &a.x {
        Some(s) => parse_list(s, "x")?,
        None => vec![0.0; d as usize],
    };
    let trunc = Truncation { alpha_max: a.alpha_max, z_max: a.z_max, tol: a.tol };
    let g = eval_g_fourier(&x, &sizes, &p, &pot, trunc)?;
    let mut r = Report::new("lemma-g").columns(&["shell", "contribution"]);
    put_params(&mut r, &p);
    r.param("partition", &sizes);
    r.param("potential", pot);
    r.param("x", &x);
    for (i, s) in g.shells.iter().enumerate() {
        r.rows.push(vec![i.into(), (*s).into()]);
    }
    r.put("fourier", g.value);
    r.put("tail_bound", g.tail_bound);
    r.put("quadrature_error", g.quadrature_error);
    r.put("fourier_error", g.error_estimate);
    r.put("flagged", g.flagged);
    r.put("product_q", sizes.iter().map(|&s| p.q_value(s)).product::<f64>());
    if a.oracle {
        let o = eval_g_oracle(&sizes, &p, &pot, a.m, a.grid)?;
        r.put("oracle", o.value);
        r.put("oracle_raw", o.raw);
        r.put("oracle_error", o.error_estimate);
        let diff = (g.value - o.value).abs();
        r.put("difference", diff);
        r.put("agree", diff <= g.error_estimate + o.error_estimate);
    }
    Ok(r)
}

fn cmd_dcp(c: &Common) -> Result<Report> {
    let p = system_params(c)?;
    let pot = potential(c)?;
    let gamma = c.gamma.ok_or_else(|| usage("--gamma is required"))?;
    let w = dcp_weights(&p, gamma, if pot.is_zero() { None } else { Some(&pot) })?;
    let mut r = Report::new("dcp");
    put_params(&mut r, &p);
    r.param("gamma", gamma);
    r.param("potential", pot);
    if !pot.is_zero() {
        let (lo, hi) = dcp_gamma_bracket(&p, &pot);
        r.put("gamma_lower", lo);
        r.put("gamma_upper", hi);
        r.put("inside_bracket", w.inside_bracket);
    }
    r.put("crossing", w.crossing);
    r.put("free_energy_density", dcp_free_energy(&p, gamma, &pot)?);
    if p.d >= 3 && gamma <= 0.0 {
        let crit = dcp_critical(&PhiSequence::exponential(gamma), p.beta, p.d)?;
        r.put("zeta_dcp", crit.zeta_dcp);
        r.put("mu_bar", crit.mu_bar);
    }
    Ok(r)
}

fn cmd_bounds(c: &Common) -> Result<Report> {
    let p = system_params(c)?;
    let pot = potential(c)?;
    let mut b = free_energy_bounds(&p, &pot)?;
    if let Some(g) = c.gamma {
        b = b.with_value(dcp_free_energy(&p, g, &pot)?);
    }
    let mut r = Report::new("bounds");
    put_params(&mut r, &p);
    r.param("potential", pot);
    r.param("gamma", c.gamma);
    r.put("lower", b.lower);
    r.put("f0", b.f0);
    r.put("upper", b.upper);
    r.put("gap", b.gap());
    r.put("gap_closed_form", bounds_gap_closed_form(&p, &pot)?);
    r.put("value", b.value);
    r.put("contains_value", b.contains_value());
    Ok(r)
}

fn cmd_rate(c: &Common, a: &RateArgs) -> Result<Report> {
    let d = c.d.unwrap_or(3);
    let lambda = c.lambda.unwrap_or(1.0);
    let rho = c.rho_lambda_d.unwrap_or(1.0) / lambda.powi(d as i32);
    let cc = c.c.ok_or_else(|| usage("--c is required"))?;
    let inputs = RateInputs {
        c: cc,
        a: c.a.unwrap_or(0.0),
        eps: c.eps.unwrap_or(0.5),
        eps0: c.eps0.unwrap_or(0.5),
        v: c.v.unwrap_or(1.0),
        c1: c.c1.unwrap_or(0.1),
        rho,
        lambda,
        d,
    };
    let mode = match a.mode {
        ModeArg::Pairs => RateMode::Pairs,
        ModeArg::SingleCircle => RateMode::SingleCircle,
    };
    let out = coupling_rate(&inputs, mode)?;
    let mut r = Report::new("rate");
    r.param("inputs", inputs);
    r.param("mode", mode);
    if a.points > 0 && mode == RateMode::Pairs {
        r = r.columns(&["a", "rate"]);
        r.param("inputs", inputs);
        r.param("mode", mode);
        for i in 0..=a.points {
            let av = cc * i as f64 / a.points as f64;
            r.rows.push(vec![av.into(), pair_rate(&inputs, av).into()]);
        }
    }
    r.put("rate", out.rate);
    r.put("maximizing_gap", out.maximizing_gap);
    r.put("c_const", out.c_const);
    Ok(r)
}

fn check_row(r: &mut Report, name: &str, pass: bool, detail: String) {
    r.rows.push(vec![name.into(), pass.into(), detail.into()]);
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Quick versions of the library invariants; every row must pass.
fn cmd_selfcheck(c: &Common) -> Result<Report> {
    let mut r = Report::new("selfcheck").columns(&["check", "pass", "detail"]);
    r.param("seed", c.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);

    let p3 = SystemParams::new(3, 4.0, 1.0, 1.0, 8)?;
    let mut worst: f64 = 0.0;
    for w in [WeightSequence::constant(1.0, 8)?, WeightSequence::constant(2.0, 8)?, WeightSequence::ideal(&p3)?] {
        let t = recurse(&w);
        for n in 1..=8 {
            worst = worst.max(rel(t.q(n).value(), partition_sum_oracle(&w, n)?.value()));
        }
    }
    check_row(&mut r, "recursion_vs_oracle", worst < 1e-12, format!("max rel {worst:.3e}"));

    let twos = vec![num::BigRational::from_integer(2.into()); 30];
    let exact = recurse_exact(&twos);
    let ok = exact.iter().enumerate().all(|(n, q)| *q == num::BigRational::from_integer(((n + 1) as i64).into()));
    check_row(&mut r, "constant_two_weights", ok, "Q_N = N + 1 for N <= 30".into());

    let p = SystemParams::new(3, 8.0, 1.0, 1.0, 128)?;
    let t = ideal_table(&p)?;
    let res = difference_identity_check(t.weights(), &t);
    check_row(&mut r, "difference_identity", res < 1e-10, format!("{res:.3e}"));
    let norm = normalization_residual(&t);
    check_row(&mut r, "cycle_density_normalization", norm < 1e-10, format!("{norm:.3e}"));

    let mut sandwich_ok = true;
    for rl in [0.5 * 2.612, 2.0 * 2.612] {
        let pp = SystemParams::with_density(3, rl, 1.0, 1.0, 256)?;
        sandwich_ok &= condensate_sandwich(&ideal_table(&pp)?, 1.0)?.holds();
    }
    check_row(&mut r, "condensate_sandwich", sandwich_ok, "two densities at N = 256".into());

    let f = solve_fugacity(1.0, 3)?;
    let resid = (polylog(1.5, f.z)? - 1.0).abs();
    let at_crit = solve_fugacity(riemann_zeta(1.5)?, 3)?.z == 1.0;
    check_row(&mut r, "fugacity", resid < 1e-10 && at_crit, format!("residual {resid:.3e}"));

    let mut merger_ok = true;
    for _ in 0..200 {
        let g = random_bridgeless(&mut rng, 12, 24);
        let asg = assign_edge_vectors(&g, 1)?;
        merger_ok &= verify_assignment(&g, &asg) && incidence_rank(&g) == g.vertex_count() - g.component_count();
    }
    check_row(&mut r, "merger_random", merger_ok, "200 bridgeless graphs".into());

    let mut kin_ok = true;
    for _ in 0..200 {
        let cfg = random_config(&mut rng, 2, 5, 6);
        let s = summarize(&cfg);
        let total: Vec<i64> = (0..2).map(|i| s.z_l_1.iter().map(|z| z[i]).sum()).collect();
        kin_ok &= total == [0, 0] && s.mean_forms_agree && s.variance.iter().all(|&v| v >= 0.0);
        for l in 0..cfg.cycle_sizes.len() {
            kin_ok &= check_variance_zero(&cfg, l)?.consistent();
        }
    }
    check_row(&mut r, "kinematic_identities", kin_ok, "200 random configurations".into());

    let mut gap: f64 = 0.0;
    for side in [10.0, 1.0, 0.1] {
        let pp = SystemParams::new(1, side, 1.0, 1.0, 1)?;
        gap = gap.max(f_n_forms(&[0.3], &[0.02], &pp, 1)?.relative_gap());
    }
    check_row(&mut r, "f_n_poisson_duality", gap < 1e-10, format!("max gap {gap:.3e}"));

    let zb = free_energy_bounds(&p, &PairPotential::Zero)?;
    let zok = (zb.lower - zb.f0).abs() <= 1e-12 * zb.f0.abs() && (zb.upper - zb.f0).abs() <= 1e-12 * zb.f0.abs();
    check_row(&mut r, "bounds_zero_potential", zok, "lower = upper = f0".into());

    let dcp0 = dcp_table(&p, 0.0)?;
    let same = (1..=p.n).all(|n| dcp0.ln_q(n).to_bits() == t.ln_q(n).to_bits());
    check_row(&mut r, "dcp_gamma_zero", same, "bit-identical to ideal".into());

    let ri = RateInputs { c: 0.42, a: 0.42, eps: 0.5, eps0: 0.5, v: 1.0, c1: 0.1, rho: 1.0, lambda: 1.0, d: 3 };
    check_row(&mut r, "rate_a_equals_c", pair_rate(&ri, 0.42) == 0.0, "rate 0".into());

    let pg = SystemParams::new(1, 4.0, 0.1, 1.0, 2)?;
    let g = eval_g_fourier(&[0.0], &[1, 1], &pg, &PairPotential::Zero, Truncation::default())?;
    let qq = pg.q_value(1).powi(2);
    check_row(&mut r, "fourier_zero_potential", rel(g.value, qq) < 1e-12, format!("{:.3e}", rel(g.value, qq)));

    let passed = r.rows.iter().filter(|row| row[1] == Cell::Bool(true)).count();
    r.put("passed", format!("{passed}/{}", r.rows.len()));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let args: Vec<String> = std::iter::once("bose-cycles").chain(args.iter().copied()).map(String::from).collect();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(&args, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["ideal", "--bogus"]).0, 2);
        assert_eq!(run_capture(&["nosuch"]).0, 2);
        assert_eq!(run_capture(&[]).0, 2);
        assert_eq!(run_capture(&["ideal", "--d", "3", "--L", "4"]).0, 2);
    }

    #[test]
    fn domain_errors_exit_one() {
        let (code, _, err) = run_capture(&["ideal", "--d", "3", "--L", "-1", "--N", "4"]);
        assert_eq!(code, 1);
        assert!(err.contains("L must be positive"));
    }

    #[test]
    fn csv_shape() {
        let (code, out, _) = run_capture(&["ideal", "--d", "3", "--L", "4", "--N", "5"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "n,q_n,rho_n,rho_n_over_q_n");
        assert_eq!(lines.len(), 1 + 5 + 5);
        assert!(lines[1].starts_with("1,"));
        assert!(lines[6].starts_with("rho0,"));
    }

    #[test]
    fn json_has_schema() {
        let (code, out, _) = run_capture(&["fugacity", "--rho-lambda-d", "1", "--format", "json"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["schema"], "bose-cycles/fugacity/v1");
        assert!((v["z"].as_f64().unwrap() - 0.698614359135065).abs() < 1e-11);
    }

    fn scratch(name: &str) -> String {
        let dir = std::env::temp_dir().join(format!("bose-cycles-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name).to_string_lossy().into_owned()
    }

    #[test]
    fn required_and_conflicting_flags_exit_two() {
        assert_eq!(run_capture(&["--help"]).0, 0);
        assert_eq!(run_capture(&["ideal", "--N", "10"]).0, 2);
        assert_eq!(run_capture(&["ideal", "--N", "10", "--L", "2", "--rho-lambda-d", "1"]).0, 2);
        assert_eq!(run_capture(&["merger", "--N", "1", "--L", "1"]).0, 2);
        assert_eq!(run_capture(&["fugacity", "--d", "2", "--rho-lambda-d", "1", "--N", "10"]).0, 1);
    }

    #[test]
    fn output_is_deterministic_per_seed() {
        for format in ["csv", "json"] {
            let args = ["merger", "--random", "20", "--format", format, "--N", "1", "--L", "1"];
            let a = run_capture(&args);
            assert_eq!(a.0, 0, "{}", a.2);
            assert_eq!(a.1, run_capture(&args).1);
        }
        let seeded = run_capture(&["merger", "--random", "20", "--seed", "5", "--N", "1", "--L", "1"]);
        assert_ne!(seeded.1, run_capture(&["merger", "--random", "20", "--N", "1", "--L", "1"]).1);
    }

    #[test]
    fn merger_check_reads_edge_list() {
        let path = scratch("k4.txt");
        std::fs::write(&path, "labels 1 2 3 4\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4\n").unwrap();
        let (code, out, err) = run_capture(&["merger", "--check", &path, "--format", "json", "--N", "1", "--L", "1"]);
        assert_eq!(code, 0, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["is_merger"], true);
        assert_eq!(v["N_I"], 3);
    }

    #[test]
    fn config_file_and_out_file() {
        let cfg = scratch("ideal.cfg");
        std::fs::write(&cfg, "# box\nN=24\nL=3.5\nbeta=1\n").unwrap();
        let out = scratch("ideal.csv");
        assert_eq!(run_capture(&["ideal", "--config", &cfg, "--out", &out]).0, 0);
        let direct = run_capture(&["ideal", "--N", "24", "--L", "3.5"]).1;
        assert_eq!(std::fs::read_to_string(&out).unwrap(), direct);
        let overridden = run_capture(&["ideal", "--config", &cfg, "--N", "12"]).1;
        assert_eq!(overridden, run_capture(&["ideal", "--N", "12", "--L", "3.5"]).1);
    }

    #[test]
    fn selfcheck_passes() {
        let (code, out, _) = run_capture(&["selfcheck", "--N", "1", "--L", "1"]);
        assert_eq!(code, 0, "{out}");
    }
}
