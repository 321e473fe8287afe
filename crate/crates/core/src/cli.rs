//! Command-line surface: formulas, region geometry, classification,
//! decomposition, simulation and classification sweeps.
//!
//! Every command writes JSON (simulation: JSON lines) or CSV. Exit codes:
//! 0 success, 2 usage, 3 infeasible request or invalid target, 4 failed
//! certification.

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

use crate::capacity::{
    c_no, c_pf, classify_interaction, classify_regime, corollary1_holds, region, InteractionClass, RatePair,
};
use crate::channel::{ChannelParams, Direction, Q};
use crate::decomposition::decompose;
use crate::error::TwicError;
use crate::planner::{plan_scheme_with, PlanOptions, DEFAULT_L};
use crate::schemes::{SchemeKind, SchemeParams, SchemeSpec};
use crate::simulator::{check_bounds, run_entries, verify_zero_error, RunOptions};

/// Seed used when neither `--seed` nor `TWIC_SEED` is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "twic", version, about = "Two-way deterministic interference channel laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perfect-feedback and nonfeedback capacities of both directions.
    Capacity(Chan),
    /// Capacity-region constraints and vertices.
    Region(Chan),
    /// Regime and interaction class.
    Classify(Chan),
    /// Elementary-factor decomposition of one direction.
    Decompose { n: usize, m: usize },
    /// Simulate a planned vertex or a single scheme.
    Simulate(SimArgs),
    /// Interaction-class grid over (alpha, alpha~) as CSV.
    Sweep(SweepArgs),
}

/// Channel parameters (n, m, n~, m~).
#[derive(Debug, Clone, Copy, Args)]
pub struct Chan {
    pub n: usize,
    pub m: usize,
    pub nb: usize,
    pub mb: usize,
}

impl Chan {
    fn params(&self) -> ChannelParams {
        ChannelParams::new(self.n, self.m, self.nb, self.mb)
    }
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub chan: Chan,
    /// Target vertex "R,R~" (integers or fractions a/b).
    #[arg(long, required_unless_present = "scheme", conflicts_with = "scheme")]
    pub vertex: Option<String>,
    /// Scheme kind to run on its catalogue shapes.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Stage-I length of retrospective-decoding entries.
    #[arg(long = "L", default_value_t = DEFAULT_L)]
    pub l: usize,
    /// Repetitions of the plan period.
    #[arg(long, default_value_t = 1)]
    pub blocks: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include the first 64 slots of signals.
    #[arg(long)]
    pub trace: bool,
    /// Catalogue multiplicities for --scheme.
    #[arg(long, default_value_t = 1)]
    pub i: usize,
    #[arg(long, default_value_t = 1)]
    pub j: usize,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    /// Orientation for --scheme: fwd (catalogue statement) or bwd (mirrored).
    #[arg(long, default_value = "fwd")]
    pub direction: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// n~ / n.
    #[arg(long)]
    pub gamma: String,
    /// Grid step of alpha and alpha~.
    #[arg(long, default_value = "1/4")]
    pub step: String,
    /// Largest alpha and alpha~.
    #[arg(long, default_value = "3")]
    pub max: String,
    #[arg(long = "base-n", default_value_t = 12)]
    pub base_n: usize,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(m: impl Into<String>) -> Self {
        Self { code: 2, message: m.into() }
    }
}

impl From<TwicError> for CliError {
    fn from(e: TwicError) -> Self {
        Self { code: 3, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

fn io<E: std::fmt::Display>(e: E) -> CliError {
    CliError { code: 1, message: e.to_string() }
}

/// Parse "a" or "a/b" as a nonnegative rational.
pub fn parse_rational(s: &str) -> Result<Q, CliError> {
    let q: Q = s.trim().parse().map_err(|_| CliError::usage(format!("not a rational number: {s:?}")))?;
    if q < Q::from_integer(0) {
        return Err(CliError::usage(format!("negative value: {s:?}")));
    }
    Ok(q)
}

/// Parse "R,R~".
pub fn parse_pair(s: &str) -> Result<RatePair, CliError> {
    let (a, b) = s.split_once(',').ok_or_else(|| CliError::usage(format!("expected R,R~ but got {s:?}")))?;
    Ok(RatePair::new(parse_rational(a)?, parse_rational(b)?))
}

fn parse_direction(s: &str) -> Result<Direction, CliError> {
    match s.to_ascii_lowercase().as_str() {
        "fwd" | "forward" => Ok(Direction::Forward),
        "bwd" | "backward" => Ok(Direction::Backward),
        _ => Err(CliError::usage(format!("direction must be fwd or bwd, got {s:?}"))),
    }
}

fn seed_of(arg: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = arg {
        return Ok(s);
    }
    match std::env::var("TWIC_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::usage(format!("TWIC_SEED is not an integer: {v:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn emit(out: &mut dyn Write, v: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, v).map_err(io)?;
    writeln!(out)?;
    Ok(())
}

/// Run one command, writing its output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.cmd {
        Command::Capacity(c) => emit(
            out,
            &json!({
                "c_pf": c_pf(c.n, c.m),
                "c_no": c_no(c.n, c.m),
                "c_pf_tilde": c_pf(c.nb, c.mb),
                "c_no_tilde": c_no(c.nb, c.mb),
            }),
        ),
        Command::Region(c) => emit(out, &region(&c.params())),
        Command::Classify(c) => {
            let p = c.params();
            let (holds, case) = corollary1_holds(&p);
            emit(
                out,
                &json!({
                    "alpha": p.alpha().to_string(),
                    "alpha_tilde": p.alpha_b().to_string(),
                    "regime": classify_regime(&p),
                    "interaction": classify_interaction(&p),
                    "perfect_feedback_condition": { "holds": holds, "case": case },
                }),
            )
        }
        Command::Decompose { n, m } => emit(out, &decompose(n, m)?),
        Command::Simulate(a) => simulate(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
    }
}

fn simulate(a: SimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let p = a.chan.params();
    let seed = seed_of(a.seed)?;
    let opt = RunOptions { trace: a.trace, ..Default::default() };
    if let Some(v) = &a.vertex {
        let target = parse_pair(v)?;
        let plan = plan_scheme_with(&p, target, PlanOptions { l: a.l, ..Default::default() })?;
        let report = run_entries(&plan.entries, &p, a.blocks, seed, &opt)?;
        let spec = region(&p);
        let bounds = check_bounds(&report, &spec);
        let zero = verify_zero_error(&report);
        emit(out, &report)?;
        emit(out, &json!({ "certification": "check_bounds", "target": target, "within_region": bounds, "zero_error": zero }))?;
        if !(bounds && zero) {
            return Err(CliError { code: 4, message: "certification failed".into() });
        }
        return Ok(());
    }
    let name = a.scheme.as_deref().expect("clap enforces --vertex or --scheme");
    let kind: SchemeKind = name.parse().map_err(|e: TwicError| CliError::usage(e.to_string()))?;
    let params = SchemeParams { i: a.i, j: a.j, k: a.k, l: a.l, direction: parse_direction(&a.direction)?, ..Default::default() };
    let spec = if kind == SchemeKind::Nonfeedback {
        let shapes = |n: usize, m: usize| crate::planner::factor_instances(n, m).into_iter().map(|f| f.shape).collect();
        SchemeSpec::new(kind, shapes(p.n, p.m), shapes(p.n_b, p.m_b), params)
    } else {
        SchemeSpec::catalogue(kind, params)?
    };
    let report = run_entries(std::slice::from_ref(&spec), &p, a.blocks, seed, &opt)?;
    emit(out, &report)
}

/// One grid point of a classification sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub alpha: Q,
    pub alpha_tilde: Q,
    pub params: ChannelParams,
    pub class: InteractionClass,
}

fn round_q(x: Q) -> usize {
    (x + Q::new(1, 2)).floor().to_integer().max(0) as usize
}

/// Classify the snapped channels of the grid alpha, alpha~ in {0, step, ..,
/// max}: n = base_n, m = round(alpha n), n~ = round(gamma n), m~ =
/// round(alpha~ n~). Rows are ordered by alpha, then alpha~.
pub fn sweep(gamma: Q, step: Q, max: Q, base_n: usize) -> Result<Vec<SweepRow>, TwicError> {
    if step <= Q::from_integer(0) {
        return Err(TwicError::InvalidArgument("step must be positive".into()));
    }
    let mut grid = Vec::new();
    let mut x = Q::from_integer(0);
    while x <= max {
        grid.push(x);
        x += step;
    }
    let nb = round_q(gamma * Q::from_integer(base_n as i64));
    let points: Vec<(Q, Q)> = grid.iter().flat_map(|&a| grid.iter().map(move |&b| (a, b))).collect();
    Ok(points
        .into_par_iter()
        .map(|(a, b)| {
            let p = ChannelParams::new(base_n, round_q(a * Q::from_integer(base_n as i64)), nb, round_q(b * Q::from_integer(nb as i64)));
            SweepRow { alpha: a, alpha_tilde: b, params: p, class: classify_interaction(&p) }
        })
        .collect())
}

/// Write sweep rows as CSV.
pub fn write_sweep_csv(rows: &[SweepRow], w: impl Write) -> Result<(), CliError> {
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(["alpha_num", "alpha_den", "alphat_num", "alphat_den", "n", "m", "nb", "mb", "class"]).map_err(io)?;
    for r in rows {
        cw.write_record([
            r.alpha.numer().to_string(),
            r.alpha.denom().to_string(),
            r.alpha_tilde.numer().to_string(),
            r.alpha_tilde.denom().to_string(),
            r.params.n.to_string(),
            r.params.m.to_string(),
            r.params.n_b.to_string(),
            r.params.m_b.to_string(),
            r.class.to_string(),
        ])
        .map_err(io)?;
    }
    cw.flush()?;
    Ok(())
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.base_n == 0 {
        return Err(CliError::usage("base-n must be positive"));
    }
    let (gamma, step, max) = (parse_rational(&a.gamma)?, parse_rational(&a.step)?, parse_rational(&a.max)?);
    if step == Q::from_integer(0) {
        return Err(CliError::usage("step must be positive"));
    }
    let rows = sweep(gamma, step, max, a.base_n)?;
    match &a.out {
        Some(path) => {
            write_sweep_csv(&rows, std::fs::File::create(path)?)?;
            emit(out, &json!({ "rows": rows.len(), "out": path.display().to_string() }))
        }
        None => write_sweep_csv(&rows, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (Result<(), CliError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("twic").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = execute(cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn capacity_command() {
        let (r, s) = run(&["capacity", "3", "2", "0", "1"]);
        assert!(r.is_ok());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!((v["c_pf"].as_u64(), v["c_no"].as_u64(), v["c_pf_tilde"].as_u64(), v["c_no_tilde"].as_u64()), (Some(4), Some(4), Some(1), Some(0)));
    }

    #[test]
    fn invalid_vertex_exits_three() {
        let (r, _) = run(&["simulate", "2", "1", "1", "2", "--vertex", "9,9"]);
        assert_eq!(r.unwrap_err().code, 3);
    }

    #[test]
    fn malformed_vertex_is_usage() {
        let (r, _) = run(&["simulate", "2", "1", "1", "2", "--vertex", "x"]);
        assert_eq!(r.unwrap_err().code, 2);
    }

    #[test]
    fn rounding() {
        assert_eq!(round_q(Q::new(5, 2)), 3);
        assert_eq!(round_q(Q::new(7, 3)), 2);
    }
}
