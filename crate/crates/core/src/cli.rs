//! Command-line front end. Exit codes: 0 success, 2 input error,
//! 3 uncontrollable defender, 4 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::format::{json_number, sig};
use crate::gramian::{default_steps, defender_tilde_gramian, gramian, gramian_infinite, Gramian};
use crate::linalg::{from_rows, to_rows};
use crate::minenergy::DEFAULT_SAMPLES;
use crate::model::{read_system_file, save_system, LtiSystem};
use crate::pendula::{self, PendulaParams, Placement};
use crate::resilience::{log_range, placement_table, resilience_index, sweep_defenders, Cell};
use crate::simulate::{
    calibrate_lqr, design_lqr, run_lq_episode, run_min_energy_episode, DEFAULT_LQ_CHARACTERISTIC_TIME,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNCONTROLLABLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "lti-resilience",
    version,
    about = "Attack/defense energy resilience index for LTI systems"
)]
pub struct Cli {
    /// Significant digits in printed and CSV output.
    #[arg(long, global = true, default_value_t = 6)]
    pub precision: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resilience index, its eigenvalue and the worst-case displacement.
    Index(IndexArgs),
    /// Index over a range of equal attack/defense spans, one column per defender.
    Sweep(SweepArgs),
    /// Attacker x defender table of indices.
    Table(TableArgs),
    /// Minimum-energy attack followed by minimum-energy restoration.
    Episode(EpisodeArgs),
    /// Minimum-energy attack against an always-on LQ defender.
    LqEpisode(LqEpisodeArgs),
    /// Emit the coupled-pendula benchmark as a system document.
    Pendula(PendulaArgs),
    /// Controllability Gramian of one input channel.
    Gramian(GramianArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// System document path or `pendula:<attacker>/<defender>`.
    #[arg(long)]
    pub system: String,
    #[arg(long, default_value_t = 15.0)]
    pub attack_span: f64,
    #[arg(long, default_value_t = 15.0)]
    pub defense_span: f64,
    /// Write the result document here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub system: String,
    /// Comma-separated spans.
    #[arg(long, value_delimiter = ',', conflicts_with = "log_range")]
    pub dt: Vec<f64>,
    /// `count,min,max` log-spaced spans.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub log_range: Vec<f64>,
    /// `NAME=FILE` defender input matrix; repeatable.
    #[arg(long = "defender")]
    pub defenders: Vec<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Base system: document path, `pendula` or `pendula:<a>/<d>`.
    #[arg(long, default_value = "pendula")]
    pub system: String,
    /// `NAME=FILE` attacker input matrix; repeatable.
    #[arg(long = "attacker")]
    pub attackers: Vec<String>,
    /// `NAME=FILE` defender input matrix; repeatable.
    #[arg(long = "defender")]
    pub defenders: Vec<String>,
    #[arg(long, default_value_t = 15.0)]
    pub attack_span: f64,
    #[arg(long, default_value_t = 15.0)]
    pub defense_span: f64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EpisodeArgs {
    #[arg(long)]
    pub system: String,
    /// Sets both attack and defense spans.
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long)]
    pub attack_span: Option<f64>,
    #[arg(long)]
    pub defense_span: Option<f64>,
    /// Multiplier on the unit worst-case displacement.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Trajectory CSV path.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Report document path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LqEpisodeArgs {
    /// System document; overrides --attacker/--defender.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long, default_value = "all")]
    pub attacker: String,
    #[arg(long, default_value = "left")]
    pub defender: String,
    #[arg(long, default_value_t = 15.0)]
    pub attack_span: f64,
    #[arg(long, default_value_t = 30.0)]
    pub observe: f64,
    /// Closed-loop characteristic time used to calibrate R = r I (Q = I).
    #[arg(long, default_value_t = DEFAULT_LQ_CHARACTERISTIC_TIME)]
    pub target_time: f64,
    /// Fixed R = r I instead of calibrating.
    #[arg(long)]
    pub r_scale: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PendulaArgs {
    #[arg(long, default_value = "all")]
    pub attacker: String,
    #[arg(long, default_value = "all")]
    pub defender: String,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 10.0)]
    pub spring: f64,
    #[arg(long, default_value_t = 10.0)]
    pub gravity: f64,
    /// Three comma-separated damping factors.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.1, 0.3])]
    pub damping: Vec<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Channel {
    Attack,
    Defense,
}

#[derive(Debug, Args)]
pub struct GramianArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, value_enum, default_value = "defense")]
    pub input: Channel,
    /// Finite horizon; omit together with --infinite for the Lyapunov limit.
    #[arg(long, required_unless_present = "infinite")]
    pub horizon: Option<f64>,
    #[arg(long, conflicts_with_all = ["horizon", "tilde"])]
    pub infinite: bool,
    /// Back-propagate over the horizon (defender form).
    #[arg(long)]
    pub tilde: bool,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Dimension(_) | Error::NonFinite(_) | Error::InvalidArgument(_) | Error::Io(_) => {
            EXIT_INPUT
        }
        Error::Uncontrollable { .. } => EXIT_UNCONTROLLABLE,
        Error::Unstable(_) | Error::Unreachable { .. } | Error::RiccatiNonConvergence(_) | Error::Numerical(_) => {
            EXIT_NUMERICAL
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let digits = cli.precision.max(1);
    match &cli.command {
        Command::Index(a) => cmd_index(a, digits, out),
        Command::Sweep(a) => cmd_sweep(a, digits, out, err),
        Command::Table(a) => cmd_table(a, digits, out, err),
        Command::Episode(a) => cmd_episode(a, digits, out),
        Command::LqEpisode(a) => cmd_lq_episode(a, digits, out),
        Command::Pendula(a) => cmd_pendula(a, out),
        Command::Gramian(a) => cmd_gramian(a, out),
    }
}

/// Where a system comes from.
#[derive(Debug, Clone)]
enum Source {
    Pendula(Option<(Placement, Placement)>),
    File(PathBuf),
}

fn parse_source(selector: &str) -> Result<Source> {
    if selector == "pendula" {
        Ok(Source::Pendula(None))
    } else if selector.starts_with("pendula:") {
        Ok(Source::Pendula(Some(pendula::parse_selector(selector)?)))
    } else {
        Ok(Source::File(PathBuf::from(selector)))
    }
}

fn load(source: &Source) -> Result<LtiSystem> {
    match source {
        Source::Pendula(sel) => {
            let (a, d) = sel.unwrap_or((Placement::All, Placement::All));
            pendula::build_placement(&PendulaParams::default(), a, d)
        }
        Source::File(p) => read_system_file(p),
    }
}

/// Loads a system document path, `pendula` (all/all) or `pendula:<attacker>/<defender>`.
pub fn resolve_system(selector: &str) -> Result<LtiSystem> {
    load(&parse_source(selector)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixDocument {
    Wrapped {
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
    },
    Bare(Vec<Vec<f64>>),
}

/// Reads an input matrix from `{"B": [[..]]}` or a bare row list.
pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let doc: MatrixDocument =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let rows = match doc {
        MatrixDocument::Wrapped { b } | MatrixDocument::Bare(b) => b,
    };
    from_rows(&rows, &path.display().to_string())
}

fn parse_options(specs: &[String]) -> Result<Vec<(String, DMatrix<f64>)>> {
    specs
        .iter()
        .map(|s| {
            let (name, path) = s
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("option '{s}' must be NAME=FILE")))?;
            Ok((name.to_string(), read_matrix_file(Path::new(path))?))
        })
        .collect()
}

fn open_output(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>> {
    Ok(match path {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn vector_text(x: &DVector<f64>, digits: usize) -> String {
    let parts: Vec<String> = x.iter().map(|v| sig(*v, digits)).collect();
    format!("[{}]", parts.join(", "))
}

fn check_span(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("--{name} must be positive, got {v}")))
    }
}

pub fn cmd_index(args: &IndexArgs, digits: usize, out: &mut dyn Write) -> Result<()> {
    check_span(args.attack_span, "attack-span")?;
    check_span(args.defense_span, "defense-span")?;
    let sys = resolve_system(&args.system)?;
    let r = resilience_index(&sys, args.attack_span, args.defense_span)?;
    writeln!(out, "rho = {}", sig(r.rho, digits))?;
    writeln!(out, "lambda_max = {}", sig(r.lambda_max, digits))?;
    writeln!(out, "x_worst = {}", vector_text(&r.x_worst, digits))?;
    if r.degenerate {
        writeln!(out, "note: the largest eigenvalue is repeated; x_worst is not unique")?;
    }
    if !r.stable_dynamics {
        writeln!(out, "warning: A is not stable; the index has no energy-ratio guarantee")?;
    }
    if let Some(p) = &args.output {
        write_json(p, &r.to_document())?;
    }
    Ok(())
}

fn default_defenders(source: &Source, sys: &LtiSystem) -> Result<Vec<(String, DMatrix<f64>)>> {
    Ok(match source {
        Source::Pendula(_) => pendula::standard_option_set(&PendulaParams::default())?.defenders,
        Source::File(_) => vec![("Bd".to_string(), sys.b_defend().clone())],
    })
}

fn report_failed_cells(names: (&[String], &[String]), cells: &[Vec<Cell>], err: &mut dyn Write) -> Result<()> {
    for (i, row) in cells.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            match c {
                Cell::Uncontrollable { unreachable } => writeln!(
                    err,
                    "note: {} / {}: defender pair not controllable ({unreachable}-dimensional unreachable subspace)",
                    names.0[i], names.1[j]
                )?,
                Cell::Failed(msg) => writeln!(err, "note: {} / {}: {msg}", names.0[i], names.1[j])?,
                Cell::Index(_) => {}
            }
        }
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, digits: usize, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let horizons = match (args.dt.is_empty(), args.log_range.as_slice()) {
        (false, _) => args.dt.clone(),
        (true, [count, min, max]) => {
            if *count < 1.0 || count.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "log-range count must be a positive integer, got {count}"
                )));
            }
            log_range(*count as usize, *min, *max)?
        }
        (true, []) => return Err(Error::InvalidArgument("give --dt or --log-range".into())),
        (true, other) => {
            return Err(Error::InvalidArgument(format!(
                "--log-range needs count,min,max, got {} values",
                other.len()
            )))
        }
    };
    let source = parse_source(&args.system)?;
    let sys = load(&source)?;
    let defenders = if args.defenders.is_empty() {
        default_defenders(&source, &sys)?
    } else {
        parse_options(&args.defenders)?
    };
    let table = sweep_defenders(sys.a(), sys.b_attack(), &defenders, &horizons)?;
    let labels: Vec<String> = table
        .horizons
        .iter()
        .map(|h| format!("dt={}", sig(*h, digits)))
        .collect();
    report_failed_cells((&labels, &table.defenders), &table.cells, err)?;
    match open_output(&args.output)? {
        Some(f) => table.write_csv(f, digits),
        None => table.write_csv(out, digits),
    }
}

pub fn cmd_table(args: &TableArgs, digits: usize, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    check_span(args.attack_span, "attack-span")?;
    check_span(args.defense_span, "defense-span")?;
    let source = parse_source(&args.system)?;
    let sys = load(&source)?;
    let attackers = if !args.attackers.is_empty() {
        parse_options(&args.attackers)?
    } else {
        match source {
            Source::Pendula(_) => pendula::standard_option_set(&PendulaParams::default())?.attackers,
            Source::File(_) => vec![("Ba".to_string(), sys.b_attack().clone())],
        }
    };
    let defenders = if !args.defenders.is_empty() {
        parse_options(&args.defenders)?
    } else {
        default_defenders(&source, &sys)?
    };
    let table = placement_table(sys.a(), &attackers, &defenders, args.attack_span, args.defense_span)?;
    report_failed_cells((&table.attackers, &table.defenders), &table.cells, err)?;
    match open_output(&args.output)? {
        Some(f) => table.write_csv(f, digits),
        None => table.write_csv(out, digits),
    }
}

fn summarize(report: &crate::simulate::ScenarioReport, digits: usize, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "attack_energy = {}", sig(report.attack_energy, digits))?;
    writeln!(out, "defense_energy = {}", sig(report.defense_energy, digits))?;
    match report.measured_ratio {
        Some(r) => writeln!(out, "measured_ratio = {}", sig(r, digits))?,
        None => writeln!(out, "measured_ratio = undefined (no defense energy)")?,
    }
    writeln!(
        out,
        "theoretical_rho = {} ({})",
        sig(report.theoretical_rho, digits),
        report.index_dynamics()
    )?;
    writeln!(out, "terminal_error = {}", sig(report.terminal_error, digits))?;
    Ok(())
}

pub fn cmd_episode(args: &EpisodeArgs, digits: usize, out: &mut dyn Write) -> Result<()> {
    let attack = args.attack_span.or(args.span).unwrap_or(15.0);
    let defense = args.defense_span.or(args.span).unwrap_or(15.0);
    check_span(attack, "attack-span")?;
    check_span(defense, "defense-span")?;
    let sys = resolve_system(&args.system)?;
    let report = run_min_energy_episode(&sys, args.scale, attack, defense, args.samples)?;
    summarize(&report, digits, out)?;
    if let Some(f) = open_output(&args.trajectory)? {
        report.write_trajectory_csv(f, sys.labels(), digits)?;
    }
    if let Some(p) = &args.output {
        write_json(p, &report.to_document())?;
    }
    Ok(())
}

pub fn cmd_lq_episode(args: &LqEpisodeArgs, digits: usize, out: &mut dyn Write) -> Result<()> {
    check_span(args.attack_span, "attack-span")?;
    let sys = match &args.system {
        Some(selector) => resolve_system(selector)?,
        None => {
            let a: Placement = args.attacker.parse()?;
            let d: Placement = args.defender.parse()?;
            pendula::build_placement(&PendulaParams::default(), a, d)?
        }
    };
    let q = DMatrix::identity(sys.n(), sys.n());
    let controller = match args.r_scale {
        Some(r) => design_lqr(
            &sys,
            &q,
            &(DMatrix::identity(sys.defense_inputs(), sys.defense_inputs()) * r),
        )?,
        None => calibrate_lqr(&sys, &q, args.target_time)?,
    };
    writeln!(
        out,
        "closed_loop_time = {} (r = {})",
        sig(controller.characteristic_time(), digits),
        sig(controller.r_weight[(0, 0)], digits)
    )?;
    let report = run_lq_episode(&sys, &controller, args.attack_span, args.observe, args.samples)?;
    summarize(&report, digits, out)?;
    if let Some(f) = open_output(&args.trajectory)? {
        report.write_trajectory_csv(f, sys.labels(), digits)?;
    }
    if let Some(p) = &args.output {
        let mut doc = report.to_document();
        doc["controller"] = json!({
            "gain": to_rows(&controller.gain),
            "r_scale": controller.r_weight[(0, 0)],
            "closed_loop_abscissa": controller.closed_loop_abscissa,
            "characteristic_time": controller.characteristic_time(),
        });
        write_json(p, &doc)?;
    }
    Ok(())
}

pub fn cmd_pendula(args: &PendulaArgs, out: &mut dyn Write) -> Result<()> {
    let damping: [f64; 3] = args
        .damping
        .as_slice()
        .try_into()
        .map_err(|_| Error::InvalidArgument(format!("--damping needs 3 values, got {}", args.damping.len())))?;
    let params = PendulaParams {
        mass: args.mass,
        length: args.length,
        spring: args.spring,
        gravity: args.gravity,
        damping,
    };
    let sys = pendula::build_placement(&params, args.attacker.parse()?, args.defender.parse()?)?;
    let text = save_system(&sys) + "\n";
    match &args.output {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn gramian_document(g: &Gramian) -> serde_json::Value {
    json!({
        "horizon": json_number(g.horizon()),
        "W": to_rows(g.matrix()),
        "eigenvalues": g.eigenvalues().iter().cloned().collect::<Vec<f64>>(),
        "numerical_rank": g.numerical_rank(),
    })
}

pub fn cmd_gramian(args: &GramianArgs, out: &mut dyn Write) -> Result<()> {
    let sys = resolve_system(&args.system)?;
    let b = match args.input {
        Channel::Attack => sys.b_attack(),
        Channel::Defense => sys.b_defend(),
    };
    let g = if args.infinite {
        gramian_infinite(sys.a(), b)?
    } else {
        let h = args.horizon.unwrap_or_default();
        check_span(h, "horizon")?;
        let steps = args.steps.unwrap_or_else(|| default_steps(sys.a(), h));
        let g = gramian(sys.a(), b, h, steps)?;
        if args.tilde {
            defender_tilde_gramian(sys.a(), &g, h)?
        } else {
            g
        }
    };
    let doc = gramian_document(&g);
    match &args.output {
        Some(p) => write_json(p, &doc),
        None => {
            let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Numerical(e.to_string()))?;
            writeln!(out, "{text}")?;
            Ok(())
        }
    }
}
