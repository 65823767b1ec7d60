//! Command implementations and report formatting for the `gsic` binary.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use gsic::channel::{ChannelKind, ChannelMimo};
use gsic::gsi::{self, Analysis, CertTolerances, GsiStatus, RegimeReport};
use gsic::miso::{self, MapKind, RegimeMap};
use gsic::scenarios::{self, Reproduction};
use gsic::solver::{self, fmt_sig, RegionPolyline, SolverOptions};

#[derive(Debug, Parser)]
#[command(
    name = "gsic",
    version,
    about = "Capacity regions and generally-strong-interference certificates for Gaussian interference channels"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Objective accuracy of the solver in nats
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol: f64,
    /// Newton-iteration cap per start
    #[arg(long, global = true, default_value_t = 2000)]
    pub max_iter: usize,
    /// Solver starts (1: isotropic, 2: also rank-one)
    #[arg(long, global = true, default_value_t = 2)]
    pub starts: usize,
    /// Points per boundary sweep
    #[arg(long, global = true, default_value_t = 64)]
    pub points: usize,
    /// Output file (a directory for `reproduce`)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Include wall time in reports (makes output nondeterministic)
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum BoundKind {
    Inner,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapArg {
    Zic,
    Symmetric,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximum sum rate of the inner region and its certificate
    Sumrate { channel: PathBuf },
    /// Boundary sweep of the inner region with per-point verdicts, or an outer bound
    Boundary {
        channel: PathBuf,
        #[arg(long, value_enum, default_value_t = BoundKind::Inner)]
        kind: BoundKind,
        /// Scalar genie for the outer bound of a MISO Z channel; otherwise the
        /// genie certified at the sum-rate point is used
        #[arg(long)]
        genie_a: Option<f64>,
    },
    /// Interference regime flags
    Classify { channel: PathBuf },
    /// Reproduce a built-in example (1 to 8)
    Reproduce { id: u8 },
    /// Regime map of MISO Z or symmetric channels over an (a, θ) grid
    RegimeMap {
        #[arg(long, value_enum)]
        map: MapArg,
        #[arg(long, default_value_t = 1.0)]
        p1: f64,
        /// Ignored for symmetric maps
        #[arg(long, default_value_t = 1.0)]
        p2: f64,
        #[arg(long, default_value_t = 0.25)]
        a_min: f64,
        #[arg(long, default_value_t = 8.0)]
        a_max: f64,
        #[arg(long, default_value_t = 32)]
        a_steps: usize,
        /// Interior angles in (0, π/2)
        #[arg(long, default_value_t = 19)]
        theta_steps: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Channel(#[from] gsic::channel::ChannelError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Miso(#[from] miso::MisoError),
    #[error(transparent)]
    Scenario(#[from] scenarios::ScenarioError),
}

/// Exit status for input and I/O errors.
pub const EXIT_INPUT: i32 = 1;
/// Exit status when the analysis finished without a certificate.
pub const EXIT_NOT_CERTIFIED: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRateOutput {
    pub sum_rate_nats: f64,
    pub sum_rate_bits: f64,
    pub analysis: Analysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunResults {
    SumRate(Box<SumRateOutput>),
    Boundary {
        kind: BoundKind,
        polyline: RegionPolyline,
    },
    Classify(Box<RegimeReport>),
    Reproduce(Reproduction),
    RegimeMap(RegimeMap),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub channel: Option<ChannelMimo>,
    pub results: RunResults,
    pub solver: SolverOptions,
    pub certification: CertTolerances,
    pub wall_time_s: Option<f64>,
}

impl RunReport {
    /// 0 when the analysis is certified (or has nothing to certify), 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        let ok = match &self.results {
            RunResults::SumRate(s) => s.analysis.verdict.status == GsiStatus::Certified,
            RunResults::Boundary {
                kind: BoundKind::Inner,
                polyline,
            } => polyline.points.iter().all(|p| p.certified() == Some(true)),
            RunResults::Boundary {
                kind: BoundKind::Outer,
                polyline,
            } => polyline.points.iter().all(|p| p.converged),
            RunResults::Classify(r) => r.gsi_sum_rate,
            RunResults::Reproduce(r) => r.all_pass(),
            RunResults::RegimeMap(_) => true,
        };
        if ok {
            0
        } else {
            EXIT_NOT_CERTIFIED
        }
    }
}

pub fn solver_options(g: &GlobalArgs) -> SolverOptions {
    SolverOptions {
        tol_obj: g.tol,
        max_iter: g.max_iter,
        starts: g.starts,
    }
}

/// Reads and validates a channel file.
pub fn load_channel(path: &Path) -> Result<ChannelMimo, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_channel(&text, &path.display().to_string())
}

pub fn parse_channel(text: &str, origin: &str) -> Result<ChannelMimo, CliError> {
    let ch = ChannelMimo::from_json(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    ch.validate()?;
    Ok(ch)
}

fn is_zic(ch: &ChannelMimo) -> bool {
    matches!(ch.validate(), Ok(ChannelKind::MisoZic))
}

/// Runs a command and returns its report. Nothing is printed or written.
pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let g = &cli.global;
    let opts = solver_options(g);
    let start = Instant::now();
    let (command, channel, results) = match &cli.command {
        Command::Sumrate { channel } => {
            let ch = load_channel(channel)?;
            let analysis = gsi::analyze_sum_rate(&ch, &opts)?;
            let s = analysis.result.objective;
            let out = SumRateOutput {
                sum_rate_nats: s,
                sum_rate_bits: s / LN_2,
                analysis,
            };
            ("sumrate", Some(ch), RunResults::SumRate(Box::new(out)))
        }
        Command::Boundary {
            channel,
            kind,
            genie_a,
        } => {
            let ch = load_channel(channel)?;
            let polyline = boundary(&ch, *kind, *genie_a, g.points, &opts)?;
            (
                "boundary",
                Some(ch),
                RunResults::Boundary {
                    kind: *kind,
                    polyline,
                },
            )
        }
        Command::Classify { channel } => {
            let ch = load_channel(channel)?;
            let report = gsi::classify_regime(&ch, g.points, &opts)?;
            ("classify", Some(ch), RunResults::Classify(Box::new(report)))
        }
        Command::Reproduce { id } => {
            let rep = scenarios::reproduce(*id, &opts, g.points)?;
            let ch = scenarios::channel(*id).ok();
            ("reproduce", ch, RunResults::Reproduce(rep))
        }
        Command::RegimeMap {
            map,
            p1,
            p2,
            a_min,
            a_max,
            a_steps,
            theta_steps,
        } => {
            if *a_steps < 2 || a_min.is_nan() || a_max.is_nan() || a_min >= a_max {
                return Err(CliError::Invalid(
                    "need a_min < a_max and at least two a steps".into(),
                ));
            }
            let a: Vec<f64> = (0..*a_steps)
                .map(|k| a_min + (a_max - a_min) * k as f64 / (*a_steps - 1) as f64)
                .collect();
            let thetas: Vec<f64> = (1..=*theta_steps)
                .map(|k| 0.5 * PI * k as f64 / (*theta_steps + 1) as f64)
                .collect();
            let kind = match map {
                MapArg::Zic => MapKind::Zic,
                MapArg::Symmetric => MapKind::Symmetric,
            };
            (
                "regime-map",
                None,
                RunResults::RegimeMap(miso::regime_map(kind, *p1, *p2, &a, &thetas)?),
            )
        }
    };
    Ok(RunReport {
        command: command.to_string(),
        channel,
        results,
        solver: opts,
        certification: CertTolerances::default(),
        wall_time_s: g.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

fn boundary(
    ch: &ChannelMimo,
    kind: BoundKind,
    genie_a: Option<f64>,
    points: usize,
    opts: &SolverOptions,
) -> Result<RegionPolyline, CliError> {
    let zic = is_zic(ch);
    match kind {
        BoundKind::Inner if zic => Ok(miso::zic_boundary(&ch.to_miso_equiv()?, points)?),
        BoundKind::Inner => Ok(gsi::certified_sweep(ch, points, opts)?),
        BoundKind::Outer => match genie_a {
            Some(a) if zic => Ok(miso::zic_outer_bound(
                &ch.to_miso_equiv()?,
                a,
                points,
                opts,
            )?),
            Some(_) => Err(CliError::Invalid(
                "--genie-a applies to MISO Z channels only".into(),
            )),
            None => {
                let genie = gsi::analyze_sum_rate(ch, opts)?.verdict.outer_genie();
                Ok(solver::boundary_sweep(ch, points, Some(&genie), opts)?)
            }
        },
    }
}

/// Renders a report in the requested format.
pub fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("reports serialize") + "\n",
        Format::Csv => render_csv(report),
        Format::Text => render_text(report),
    }
}

fn nats_bits(x: f64) -> String {
    format!("{} nats ({} bits)", fmt_sig(x), fmt_sig(x / LN_2))
}

fn pair(p: (f64, f64)) -> String {
    format!("({}, {})", fmt_sig(p.0), fmt_sig(p.1))
}

fn matrix(m: &[Vec<f64>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| {
            format!(
                "[{}]",
                r.iter().map(|v| fmt_sig(*v)).collect::<Vec<_>>().join(", ")
            )
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn status(s: GsiStatus) -> &'static str {
    match s {
        GsiStatus::Certified => "Certified",
        GsiStatus::NotCertified => "NotCertified",
        GsiStatus::Inconclusive => "Inconclusive",
    }
}

fn render_text(report: &RunReport) -> String {
    let mut o = String::new();
    match &report.results {
        RunResults::SumRate(s) => {
            let a = &s.analysis;
            let c = &a.certificate;
            let _ = writeln!(
                o,
                "sum rate: {}, {}",
                nats_bits(s.sum_rate_nats),
                status(a.verdict.status)
            );
            let _ = writeln!(o, "rate pair: {}", pair(a.verdict.point));
            let _ = writeln!(o, "S1: {}", matrix(&a.result.pair.s1.to_rows()));
            let _ = writeln!(o, "S2: {}", matrix(&a.result.pair.s2.to_rows()));
            let _ = writeln!(
                o,
                "converged: {} ({} iterations)",
                a.result.converged, a.result.iterations
            );
            let _ = writeln!(
                o,
                "multipliers: gamma = {}, lambda = ({}, {}), eta = ({}, {})",
                fmt_sig(c.gamma_or_alpha),
                fmt_sig(c.lambdas_or_betas[0]),
                fmt_sig(c.lambdas_or_betas[1]),
                fmt_sig(c.etas_or_nus[0]),
                fmt_sig(c.etas_or_nus[1])
            );
            let _ = writeln!(o, "W1: {}", matrix(&c.w_or_k[0].to_rows()));
            let _ = writeln!(o, "W2: {}", matrix(&c.w_or_k[1].to_rows()));
            for (name, a) in [("A1", &a.verdict.genie.a1), ("A2", &a.verdict.genie.a2)] {
                if let Some(a) = a {
                    let _ = writeln!(o, "{name}: {}", matrix(&a.to_rows()));
                }
            }
            for cond in &a.verdict.conditions {
                let _ = writeln!(
                    o,
                    "  [{}] {} (margin {})",
                    if cond.passed { "pass" } else { "FAIL" },
                    cond.name,
                    fmt_sig(cond.margin)
                );
            }
            if let Some(note) = &a.verdict.note {
                let _ = writeln!(o, "note: {note}");
            }
        }
        RunResults::Boundary { polyline, .. } => o.push_str(&polyline.to_csv()),
        RunResults::Classify(r) => {
            let _ = writeln!(o, "channel kind: {:?}", r.kind);
            let _ = writeln!(o, "sum rate: {}", nats_bits(r.sum_rate));
            let _ = writeln!(o, "very_strong: {}", r.very_strong);
            let _ = writeln!(o, "strong_classical: {}", r.strong_classical);
            let _ = writeln!(o, "gsi_sum_rate: {}", r.gsi_sum_rate);
            let _ = writeln!(o, "gsi_full_region: {}", r.gsi_full_region);
            let _ = writeln!(
                o,
                "certified boundary fraction: {}",
                fmt_sig(r.fraction_of_boundary_certified)
            );
            if let Some(s) = &r.simo {
                let _ = writeln!(o, "simo gsi_full_region: {}", s.gsi_full_region);
                let _ = writeln!(o, "simo very_strong: {}", s.very_strong);
            }
        }
        RunResults::Reproduce(r) => {
            let _ = writeln!(o, "example {}: {}", r.id, r.title);
            if !r.rows.is_empty() {
                let _ = writeln!(
                    o,
                    "{:<38} {:>12} {:>12} {:>10} {:>4}",
                    "quantity", "reference", "computed", "tolerance", ""
                );
            }
            for row in &r.rows {
                let tol = if row.relative {
                    format!("{}rel", fmt_sig(row.tolerance))
                } else {
                    fmt_sig(row.tolerance)
                };
                let _ = writeln!(
                    o,
                    "{:<38} {:>12} {:>12} {:>10} {}",
                    row.quantity,
                    fmt_sig(row.reference),
                    fmt_sig(row.computed),
                    tol,
                    if row.pass { "PASS" } else { "FAIL" }
                );
            }
            for a in &r.artifacts {
                let _ = writeln!(o, "artifact: {}", a.name);
            }
        }
        RunResults::RegimeMap(m) => o.push_str(&m.to_csv()),
    }
    if let Some(t) = report.wall_time_s {
        let _ = writeln!(o, "wall time: {} s", fmt_sig(t));
    }
    o
}

fn render_csv(report: &RunReport) -> String {
    match &report.results {
        RunResults::SumRate(s) => format!(
            "sum_rate_nats,sum_rate_bits,R1_nats,R2_nats,status\n{},{},{},{},{}\n",
            fmt_sig(s.sum_rate_nats),
            fmt_sig(s.sum_rate_bits),
            fmt_sig(s.analysis.verdict.point.0),
            fmt_sig(s.analysis.verdict.point.1),
            status(s.analysis.verdict.status)
        ),
        RunResults::Boundary { polyline, .. } => polyline.to_csv(),
        RunResults::Classify(r) => format!(
            "very_strong,strong_classical,gsi_sum_rate,gsi_full_region,certified_fraction,sum_rate_nats\n{},{},{},{},{},{}\n",
            r.very_strong,
            r.strong_classical,
            r.gsi_sum_rate,
            r.gsi_full_region,
            fmt_sig(r.fraction_of_boundary_certified),
            fmt_sig(r.sum_rate)
        ),
        RunResults::Reproduce(r) => comparison_csv(r),
        RunResults::RegimeMap(m) => m.to_csv(),
    }
}

pub fn comparison_csv(r: &Reproduction) -> String {
    let mut o = String::from("quantity,reference,computed,tolerance,relative,pass\n");
    for row in &r.rows {
        let _ = writeln!(
            o,
            "{},{},{},{},{},{}",
            row.quantity,
            fmt_sig(row.reference),
            fmt_sig(row.computed),
            fmt_sig(row.tolerance),
            row.relative,
            row.pass
        );
    }
    o
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the rendered report to `--out` (a directory for `reproduce`, with
/// the example's artifacts alongside) or returns it for stdout.
pub fn emit(report: &RunReport, g: &GlobalArgs) -> Result<Option<String>, CliError> {
    let text = render(report, g.format);
    let Some(out) = &g.out else {
        return Ok(Some(text));
    };
    if let RunResults::Reproduce(r) = &report.results {
        std::fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
        for a in &r.artifacts {
            let p = out.join(&a.name);
            std::fs::write(&p, &a.contents).map_err(|e| io_error(&p, e))?;
        }
        let p = out.join(format!("example{}_comparison.csv", r.id));
        std::fs::write(&p, comparison_csv(r)).map_err(|e| io_error(&p, e))?;
        let p = out.join(format!("example{}_report.json", r.id));
        std::fs::write(&p, render(report, Format::Json)).map_err(|e| io_error(&p, e))?;
        return Ok(Some(text));
    }
    std::fs::write(out, text).map_err(|e| io_error(out, e))?;
    Ok(None)
}
