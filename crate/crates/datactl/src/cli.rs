//! Command-line front end.
//!
//! Exit codes: 0 success or PASS, 1 FAIL, 2 indeterminate, 3 usage or data
//! error. Reports go to stdout (or `--out`), human summaries to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use datactl_core::imagination::{HazardTemplate, Pipeline, DEFAULT_BUFFER_CAPACITY};
use datactl_core::monitor::{
    build_reference, Monitor, ReferenceProfile, ShiftLabel, ShiftThresholds, DEFAULT_MONITOR_X_BINS,
    DEFAULT_MONITOR_Y_BINS, DEFAULT_THRESHOLD,
};
use datactl_core::properties::{
    check_robustness, check_sensitivity, check_stability, RobustnessSpec, SensitivitySpec, StabilityParams, Verdict,
};
use datactl_core::refsys::{generate_trace, lv_trace, LotkaVolterraParams, ToyConfig, ToyModel};
use datactl_core::retrospect::{auto_scale, TrustState, Update};
use datactl_core::stats::{BinningSpec, ConditionalDistribution};
use datactl_core::sysclass::{classify_passive_with, PassiveOptions, DEFAULT_KAPPA, DEFAULT_SEGMENTS};
use datactl_core::{Error as CoreError, ModelDescriptor, Trace};
use serde::Serialize;
use serde_json::{json, Value};

use crate::io::{self, IoError, ParseMode};
use crate::plot::{line_chart, Level, Series};
use crate::report::{verdict_summary, Report, Status};

/// Default bin counts for the trace checkers.
pub const DEFAULT_CHECK_BINS: usize = 6;

#[derive(Debug, Parser)]
#[command(
    name = "datactl",
    version,
    about = "Statistical input-output analysis, property checks and runtime monitors for black-box systems",
    args_override_self = true,
    propagate_version = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Ignore unknown keys in trace and pair files instead of rejecting them.
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Suppress human-readable summaries on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Write the report (or trace) here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// JSON file of defaults; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the estimated conditional distribution as JSON lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub dump_dist: Option<PathBuf>,
    /// Model descriptor JSON (name, environment, parameters, loss) for report annotation.
    #[arg(long, global = true, value_name = "FILE")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    Lv,
    Static,
    Nonstat,
    Dynamic,
    Anticausal,
}

#[derive(Debug, Clone, Args)]
pub struct BinningOpts {
    /// Equal-width bins per input dimension.
    #[arg(long)]
    pub x_bins: Option<usize>,
    /// Equal-width bins per output dimension.
    #[arg(long)]
    pub y_bins: Option<usize>,
    /// Explicit binning (JSON); overrides --x-bins/--y-bins.
    #[arg(long, value_name = "FILE")]
    pub binning: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a trace from a reference system.
    Simulate {
        #[arg(long, value_enum)]
        system: SystemArg,
        /// Model parameters (JSON); defaults to the reference configuration.
        #[arg(long, value_name = "FILE")]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Integrator steps between Lotka-Volterra records.
        #[arg(long, default_value_t = 100)]
        record_every: usize,
    },
    /// Classify a trace as static, non-stationary or dynamic.
    Classify {
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
        segments: usize,
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long, default_value_t = DEFAULT_CHECK_BINS)]
        x_bins: usize,
        #[arg(long, default_value_t = DEFAULT_CHECK_BINS)]
        y_bins: usize,
    },
    /// Check invariance of P(Y|X) across circumstance groups.
    CheckRobustness {
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        #[command(flatten)]
        bins: BinningOpts,
    },
    /// Check the band-bounded response of P(Y|X) to circumstance changes.
    CheckSensitivity {
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        #[command(flatten)]
        bins: BinningOpts,
    },
    /// Check that window-to-window divergence does not grow.
    CheckStability {
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        #[arg(long, default_value_t = 500)]
        window: usize,
        #[arg(long, default_value_t = 250)]
        stride: usize,
        #[arg(long, default_value_t = 0.02)]
        eta: f64,
        #[arg(long, default_value_t = 2)]
        grace: usize,
        /// SVG of the divergence series.
        #[arg(long, value_name = "FILE")]
        plot: Option<PathBuf>,
        #[command(flatten)]
        bins: BinningOpts,
    },
    /// Compare runtime windows against a development reference.
    Monitor {
        #[arg(long, value_name = "FILE")]
        reference: PathBuf,
        #[arg(long, value_name = "FILE")]
        stream: PathBuf,
        #[arg(long, default_value_t = 500)]
        width: usize,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        theta_x: f64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        theta_y: f64,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        theta_c: f64,
        /// SVG of the per-window divergences.
        #[arg(long, value_name = "FILE")]
        plot: Option<PathBuf>,
        #[command(flatten)]
        bins: BinningOpts,
    },
    /// Detect misuse and imagine substitute hazard inputs.
    Imagine {
        #[arg(long, value_name = "FILE")]
        reference: PathBuf,
        #[arg(long, value_name = "FILE")]
        stream: PathBuf,
        #[arg(long, value_name = "FILE")]
        kb: PathBuf,
        #[arg(long, default_value_t = 3)]
        top_k: usize,
        /// Runtime buffer capacity in records.
        #[arg(long, default_value_t = DEFAULT_BUFFER_CAPACITY)]
        buffer: usize,
        /// Persist misused records as JSON lines.
        #[arg(long, value_name = "FILE")]
        critical_out: Option<PathBuf>,
        #[command(flatten)]
        bins: BinningOpts,
    },
    /// Score past predictions against outcomes.
    Trust {
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 50)]
        window: usize,
        /// `auto` or a comma-separated list of per-dimension scales.
        #[arg(long, default_value = "auto")]
        scale: String,
    },
}

const SUBCOMMANDS: &[&str] = &[
    "simulate",
    "classify",
    "check-robustness",
    "check-sensitivity",
    "check-stability",
    "monitor",
    "imagine",
    "trust",
];

/// Global options that take a value; needed to find the subcommand token.
const GLOBAL_VALUED: &[&str] = &["--out", "--config", "--dump-dist", "--model"];

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Usage(String),
    #[error("writing output: {0}")]
    Write(#[from] std::io::Error),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--" {
            return None;
        }
        if a.starts_with('-') {
            if GLOBAL_VALUED.contains(&a.as_ref()) {
                i += 1;
            }
        } else if SUBCOMMANDS.contains(&a.as_ref()) {
            return Some(i);
        } else {
            return None;
        }
        i += 1;
    }
    None
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut found = None;
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
        }
    }
    found
}

fn config_flags(obj: &serde_json::Map<String, Value>, section: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (key, value) in obj {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag.into()),
            Value::Number(n) => {
                out.push(flag.into());
                out.push(n.to_string().into());
            }
            Value::String(s) => {
                out.push(flag.into());
                out.push(s.into());
            }
            _ => return Err(usage(format!("config {section}.{key}: expected a scalar value"))),
        }
    }
    Ok(out)
}

/// Splices config-file values in front of the user's own flags so that
/// the latter override them. Top-level scalars are global options;
/// objects keyed by subcommand name hold that subcommand's options.
fn apply_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let cfg: Value = io::load_json(&path)?;
    let Value::Object(cfg) = cfg else {
        return Err(usage(format!("{}: config must be a JSON object", path.display())));
    };
    for key in cfg.keys() {
        if cfg[key].is_object() && !SUBCOMMANDS.contains(&key.as_str()) {
            return Err(usage(format!("{}: unknown config section `{key}`", path.display())));
        }
    }
    let globals: serde_json::Map<String, Value> =
        cfg.iter().filter(|(_, v)| !v.is_object()).map(|(k, v)| (k.clone(), v.clone())).collect();
    let Some(pos) = subcommand_position(&args) else {
        return Ok(args);
    };
    let sub = args[pos].to_string_lossy().into_owned();
    let section = match cfg.get(&sub) {
        Some(Value::Object(m)) => config_flags(m, &sub)?,
        _ => Vec::new(),
    };
    let mut out = Vec::with_capacity(args.len() + section.len() + globals.len() * 2);
    out.push(args[0].clone());
    out.extend(config_flags(&globals, "global")?);
    out.extend(args[1..=pos].iter().cloned());
    out.extend(section);
    out.extend(args[pos + 1..].iter().cloned());
    Ok(out)
}

/// Runs one invocation and returns its exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return Status::Error.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    Status::Error.exit_code()
                }
            };
        }
    };
    let mut ctx = Ctx {
        global: &cli.global,
        out,
        err,
    };
    match ctx.execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            Status::Error.exit_code()
        }
    }
}

/// Runs with the process arguments and standard streams.
pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

struct Ctx<'a> {
    global: &'a GlobalOpts,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

#[derive(Serialize)]
struct TrustLine {
    t: i64,
    accepted: bool,
    #[serde(with = "datactl_core::serde_float::option")]
    discrepancy: Option<f64>,
    trust: f64,
    conservatism: f64,
    ewma: f64,
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate { .. } => "simulate",
        Command::Classify { .. } => "classify",
        Command::CheckRobustness { .. } => "check-robustness",
        Command::CheckSensitivity { .. } => "check-sensitivity",
        Command::CheckStability { .. } => "check-stability",
        Command::Monitor { .. } => "monitor",
        Command::Imagine { .. } => "imagine",
        Command::Trust { .. } => "trust",
    }
}

impl Ctx<'_> {
    fn mode(&self) -> ParseMode {
        if self.global.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }

    fn say(&mut self, msg: &str) {
        if !self.global.quiet {
            let _ = writeln!(self.err, "{msg}");
        }
    }

    fn warn_all(&mut self, warnings: &[String]) {
        for w in warnings {
            self.say(&format!("warning: {w}"));
        }
    }

    /// Sends `bytes` to `--out` or stdout.
    fn emit(&mut self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.global.out {
            Some(p) => io::write_file(p, bytes)?,
            None => self.out.write_all(bytes)?,
        }
        Ok(())
    }

    fn emit_report<T: Serialize>(&mut self, mut report: Report<T>) -> Result<i32, CliError> {
        if let Some(p) = &self.global.model {
            let m: ModelDescriptor = io::load_json(p)?;
            if m.name.is_empty() {
                return Err(usage(format!("{}: model name must not be empty", p.display())));
            }
            report.model = Some(m);
        }
        let mut text = serde_json::to_string_pretty(&report).map_err(|e| usage(e.to_string()))?;
        text.push('\n');
        self.emit(text.as_bytes())?;
        Ok(report.status.exit_code())
    }

    fn emit_jsonl<T: Serialize>(&mut self, items: &[T]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        io::write_jsonl(&mut buf, items)?;
        self.emit(&buf)
    }

    fn dump(&mut self, dist: &ConditionalDistribution) -> Result<(), CliError> {
        let Some(path) = &self.global.dump_dist else {
            return Ok(());
        };
        let mut lines = vec![json!({
            "binning": dist.binning(),
            "n_total": dist.n_total(),
            "out_of_support": dist.out_of_support(),
            "alpha": dist.alpha(),
        })];
        for (cell, row) in dist.counts() {
            lines.push(json!({
                "x_cell": cell,
                "n": dist.row_count(*cell),
                "counts": row,
                "smoothed": dist.smoothed_conditional(*cell),
            }));
        }
        let mut buf = Vec::new();
        io::write_jsonl(&mut buf, &lines)?;
        io::write_file(path, &buf)?;
        Ok(())
    }

    fn binning(&mut self, opts: &BinningOpts, trace: &Trace, x: usize, y: usize) -> Result<BinningSpec, CliError> {
        let spec = match &opts.binning {
            Some(p) => {
                let b: BinningSpec = io::load_json(p)?;
                BinningSpec::new(b.x, b.y, b.cap)?
            }
            None => {
                let fitted = BinningSpec::fit_uniform(trace.records(), opts.x_bins.unwrap_or(x), opts.y_bins.unwrap_or(y))?;
                self.warn_all(&fitted.warnings);
                fitted.spec
            }
        };
        if spec.x.dims() != trace.x_dim() || spec.y.dims() != trace.y_dim() {
            return Err(usage("binning dimensions do not match the trace"));
        }
        Ok(spec)
    }

    fn verdict(&mut self, command: &str, result: Result<Verdict, CoreError>) -> Result<i32, CliError> {
        match result {
            Ok(v) => {
                self.say(&verdict_summary(&v));
                let status = Status::of_verdict(&v);
                self.emit_report(Report::new(command, status, Some(v)))
            }
            Err(e) if e.is_indeterminate() => {
                self.say(&format!("{command}: INDETERMINATE ({e})"));
                let mut r: Report<Verdict> = Report::new(command, Status::Indeterminate, None);
                r.message = Some(e.to_string());
                self.emit_report(r)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn profile(&mut self, reference: &Path, bins: &BinningOpts) -> Result<ReferenceProfile, CliError> {
        let dev = io::parse_trace(reference, self.mode())?;
        let b = self.binning(bins, &dev, DEFAULT_MONITOR_X_BINS, DEFAULT_MONITOR_Y_BINS)?;
        let profile = build_reference(&dev, &b, &reference.display().to_string())?;
        self.dump(&profile.conditional)?;
        Ok(profile)
    }

    fn execute(&mut self, cmd: &Command) -> Result<i32, CliError> {
        let name = command_name(cmd);
        match cmd {
            Command::Simulate {
                system,
                params,
                n,
                seed,
                record_every,
            } => {
                let trace = match system {
                    SystemArg::Lv => {
                        let p: LotkaVolterraParams = match params {
                            Some(path) => io::load_json(path)?,
                            None => LotkaVolterraParams::default(),
                        };
                        lv_trace(&p, *n, *record_every)?
                    }
                    _ => {
                        let cfg = match params {
                            Some(path) => io::load_json::<ToyConfig>(path)?,
                            None => default_config(*system),
                        };
                        let matches = matches!(
                            (system, &cfg.model),
                            (SystemArg::Static, ToyModel::Static { .. })
                                | (SystemArg::Nonstat, ToyModel::NonStationary { .. })
                                | (SystemArg::Dynamic, ToyModel::Dynamic { .. })
                                | (SystemArg::Anticausal, ToyModel::Anticausal { .. })
                        );
                        if !matches {
                            return Err(usage("--params model kind does not match --system"));
                        }
                        generate_trace(&cfg, *n, *seed)?
                    }
                };
                let mut buf = Vec::new();
                io::write_trace(&mut buf, &trace)?;
                self.emit(&buf)?;
                self.say(&format!(
                    "simulate: {} records, x dim {}, y dim {}",
                    trace.len(),
                    trace.x_dim(),
                    trace.y_dim()
                ));
                Ok(0)
            }
            Command::Classify {
                trace,
                segments,
                kappa,
                x_bins,
                y_bins,
            } => {
                let tr = io::parse_trace(trace, self.mode())?;
                let opts = PassiveOptions {
                    segments: *segments,
                    kappa: *kappa,
                    x_bins: *x_bins,
                    y_bins: *y_bins,
                    ..PassiveOptions::default()
                };
                if self.global.dump_dist.is_some() {
                    let b = BinningSpec::fit_uniform(tr.records(), *x_bins, *y_bins)?.spec;
                    self.dump(&ConditionalDistribution::estimate(tr.records(), &b)?)?;
                }
                let class = classify_passive_with(&tr, &opts)?;
                self.say(&format!("classify: {} (confidence {:.3})", class.class, class.confidence));
                self.warn_all(&class.warnings);
                self.emit_report(Report::new(name, Status::Ok, Some(class)))
            }
            Command::CheckRobustness { trace, spec, bins } => {
                let tr = io::parse_trace(trace, self.mode())?;
                let s: RobustnessSpec = io::load_json(spec)?;
                let b = self.binning(bins, &tr, DEFAULT_CHECK_BINS, DEFAULT_CHECK_BINS)?;
                self.dump(&ConditionalDistribution::estimate(tr.records(), &b)?)?;
                self.verdict(name, check_robustness(&tr, &s, &b))
            }
            Command::CheckSensitivity { trace, spec, bins } => {
                let tr = io::parse_trace(trace, self.mode())?;
                let s: SensitivitySpec = io::load_json(spec)?;
                let b = self.binning(bins, &tr, DEFAULT_CHECK_BINS, DEFAULT_CHECK_BINS)?;
                self.dump(&ConditionalDistribution::estimate(tr.records(), &b)?)?;
                self.verdict(name, check_sensitivity(&tr, &s, &b))
            }
            Command::CheckStability {
                trace,
                window,
                stride,
                eta,
                grace,
                plot,
                bins,
            } => {
                let tr = io::parse_trace(trace, self.mode())?;
                let params = StabilityParams {
                    window: *window,
                    stride: *stride,
                    eta: *eta,
                    grace: *grace,
                    ..StabilityParams::default()
                };
                params.validate()?;
                let b = self.binning(bins, &tr, DEFAULT_CHECK_BINS, DEFAULT_CHECK_BINS)?;
                self.dump(&ConditionalDistribution::estimate(tr.records(), &b)?)?;
                let result = check_stability(&tr, &params, &b);
                if let (Some(p), Ok(v)) = (plot, &result) {
                    let svg = line_chart(
                        "window-to-window conditional KL",
                        "nats",
                        &[Series {
                            name: "D[k]",
                            values: &v.series,
                        }],
                        &[],
                    );
                    io::write_file(p, svg.as_bytes())?;
                }
                self.verdict(name, result)
            }
            Command::Monitor {
                reference,
                stream,
                width,
                theta_x,
                theta_y,
                theta_c,
                plot,
                bins,
            } => {
                let profile = self.profile(reference, bins)?;
                let run = io::parse_trace(stream, self.mode())?;
                let thresholds = ShiftThresholds {
                    input: *theta_x,
                    output: *theta_y,
                    conditional: *theta_c,
                };
                let mut m = Monitor::new(&profile, *width, thresholds)?;
                let mut reports = Vec::new();
                for r in run.records() {
                    if let Some(rep) = m.push(r.clone())? {
                        reports.push(rep);
                    }
                }
                if reports.is_empty() {
                    self.say(&format!("warning: stream shorter than one window of {width} records; no report produced"));
                } else if m.pending() > 0 {
                    self.say(&format!("warning: {} trailing record(s) do not fill a window", m.pending()));
                }
                self.emit_jsonl(&reports)?;
                if let Some(p) = plot {
                    let col = |f: fn(&datactl_core::monitor::ShiftReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
                    let (ix, oy, cc) = (col(|r| r.input_kl), col(|r| r.output_kl), col(|r| r.conditional_kl));
                    let svg = line_chart(
                        "runtime vs reference",
                        "KL (nats)",
                        &[
                            Series { name: "input", values: &ix },
                            Series { name: "output", values: &oy },
                            Series { name: "conditional", values: &cc },
                        ],
                        &[
                            Level { name: "theta_x", value: *theta_x },
                            Level { name: "theta_y", value: *theta_y },
                            Level { name: "theta_c", value: *theta_c },
                        ],
                    );
                    io::write_file(p, svg.as_bytes())?;
                }
                let shifted = reports.iter().filter(|r| r.label != ShiftLabel::None).count();
                self.say(&format!("monitor: {} window(s), {shifted} with a shift label", reports.len()));
                Ok(0)
            }
            Command::Imagine {
                reference,
                stream,
                kb,
                top_k,
                buffer,
                critical_out,
                bins,
            } => {
                let profile = self.profile(reference, bins)?;
                let run = io::parse_trace(stream, self.mode())?;
                if run.x_dim() != profile.binning.x.dims() {
                    return Err(usage("stream input dimension does not match the reference"));
                }
                let kb: Vec<HazardTemplate> = io::load_json(kb)?;
                let mut p = Pipeline::new(&profile, kb, *top_k, *buffer)?;
                let outputs = run.records().iter().map(|r| p.process(r)).collect::<Result<Vec<_>, _>>()?;
                self.emit_jsonl(&outputs)?;
                if let Some(path) = critical_out {
                    let mut buf = Vec::new();
                    io::write_jsonl(&mut buf, p.critical_cases())?;
                    io::write_file(path, &buf)?;
                }
                let misused = outputs.iter().filter(|o| o.misuse).count();
                let degraded = outputs.iter().filter(|o| o.degraded).count();
                self.say(&format!(
                    "imagine: {} record(s), {misused} misused, {degraded} degraded",
                    outputs.len()
                ));
                Ok(0)
            }
            Command::Trust {
                pairs,
                beta,
                window,
                scale,
            } => {
                let pairs = io::parse_pairs(pairs, self.mode())?;
                let scale = if scale == "auto" {
                    auto_scale(&pairs)?
                } else {
                    scale
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| usage(format!("--scale: {e}")))?
                };
                let mut state = TrustState::new(*window, *beta, scale)?;
                let mut lines = Vec::with_capacity(pairs.len());
                for pair in &pairs {
                    let d = state.discrepancy(pair);
                    let accepted = state.update(pair) == Update::Accepted;
                    lines.push(TrustLine {
                        t: pair.t,
                        accepted,
                        discrepancy: d,
                        trust: state.trust(),
                        conservatism: state.conservatism(),
                        ewma: state.ewma(),
                    });
                }
                self.emit_jsonl(&lines)?;
                let rep = state.report();
                if rep.indeterminate {
                    self.say(&format!("trust: INDETERMINATE (0 of {} pairs accepted)", pairs.len()));
                    return Ok(Status::Indeterminate.exit_code());
                }
                self.say(&format!(
                    "trust: {:.4}, conservatism {:.4} ({} accepted, {} rejected)",
                    rep.trust, rep.conservatism, rep.accepted, rep.rejected
                ));
                Ok(0)
            }
        }
    }
}

fn default_config(system: SystemArg) -> ToyConfig {
    match system {
        SystemArg::Static => ToyConfig::static_reference(),
        SystemArg::Nonstat => ToyConfig::non_stationary_reference(),
        SystemArg::Dynamic => ToyConfig::dynamic_reference(),
        SystemArg::Lv | SystemArg::Anticausal => ToyConfig::new(ToyModel::Anticausal {
            prior: 0.5,
            class_means: [-0.95, 0.95],
            dims: 1,
            sigma: 1.0,
        }),
    }
}
