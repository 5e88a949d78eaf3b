//! Command-line surface: `filter`, `simulate`, `evaluate` and `bench`.
//!
//! Any flag may also come from a `--config FILE` of `key = value` lines;
//! flags given on the command line win.

pub mod records;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dirichlet::DEFAULT_CLAMP_EPS;
use crate::error::Error;
use crate::filter::{FilterConfig, Observation};
use crate::fusion::{SchedulePolicy, Smoother, SmootherKind, STRONG_ID, WEAK_ID};
use crate::harness::{
    benchmark_stream, evaluate, generate_stream, true_class_trace, MarkovChainSpec, SyntheticClassifierSpec,
};
use crate::specfn::SpecFnMode;
use records::{Format, OutputRecord, OutputWriter, StreamRecord};

/// Failure classes, mapped to exit codes 1 (data) and 2 (usage).
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "dirfuse", version, about = "Temporal smoothing and fusion of classifier probability streams")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Read default flag values from a `key = value` file
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Smooth a probability stream (JSON lines or CSV)
    Filter(FilterCmd),
    /// Generate a synthetic stream and its truth file
    Simulate(SimulateCmd),
    /// Score predictions against a truth file
    Evaluate(EvaluateCmd),
    /// Compare Raw / Simple / Single / Multiple on a synthetic scenario
    Bench(BenchCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpecFnArg {
    Exact,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Raw,
    Simple,
    Single,
    Multiple,
}

/// Filter tuning shared by `filter` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct TuningArgs {
    /// Decay applied to the prior between observations
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    /// MM sweeps per observation
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    /// MM stopping tolerance (max-norm step)
    #[arg(long, default_value_t = 1e-8)]
    pub mm_tol: f64,
    /// Tolerance of the scalar inversions inside each sweep
    #[arg(long, default_value_t = 1e-10)]
    pub invert_tol: f64,
    /// Prior pseudo-count before the first observation
    #[arg(long, default_value_t = 1.0)]
    pub init_eta: f64,
    /// Probability floor applied to inputs
    #[arg(long, default_value_t = DEFAULT_CLAMP_EPS)]
    pub clamp_eps: f64,
    /// Digamma evaluation: exact series or lookup table
    #[arg(long, value_enum, default_value_t = SpecFnArg::Exact)]
    pub specfn: SpecFnArg,
    /// Running-average window of the Simple method
    #[arg(long, default_value_t = SmootherKind::DEFAULT_WINDOW)]
    pub window: usize,
    /// Per-classifier weights, e.g. `strong=1.0,weak=0.5`
    #[arg(long, value_name = "ID=BETA,...")]
    pub beta_map: Option<String>,
}

impl TuningArgs {
    pub fn filter_config(&self) -> Result<FilterConfig, CliError> {
        let config = FilterConfig {
            gamma: self.gamma,
            max_mm_iters: self.iters,
            mm_tol: self.mm_tol,
            invert_tol: self.invert_tol,
            init_eta: self.init_eta,
            clamp_eps: self.clamp_eps,
            specfn_mode: match self.specfn {
                SpecFnArg::Exact => SpecFnMode::Exact,
                SpecFnArg::Table => SpecFnMode::default_table(),
            },
            ..FilterConfig::default()
        };
        config.validate()?;
        if self.window == 0 {
            return Err(CliError::Usage("--window must be >= 1".into()));
        }
        Ok(config)
    }

    /// Default strong/weak weights overlaid with `--beta-map`.
    pub fn betas(&self) -> Result<BTreeMap<String, f64>, CliError> {
        let mut map = BTreeMap::from([(STRONG_ID.to_string(), 1.0), (WEAK_ID.to_string(), 0.5)]);
        if let Some(spec) = &self.beta_map {
            for (id, beta) in parse_beta_map(spec)? {
                map.insert(id, beta);
            }
        }
        Ok(map)
    }

    fn kind(&self, m: MethodArg) -> SmootherKind {
        match m {
            MethodArg::Raw => SmootherKind::Raw,
            MethodArg::Simple => SmootherKind::Simple { window: self.window },
            MethodArg::Single => SmootherKind::Single,
            MethodArg::Multiple => SmootherKind::Multiple,
        }
    }
}

/// Parses `id=beta,id=beta`.
pub fn parse_beta_map(spec: &str) -> Result<Vec<(String, f64)>, CliError> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (id, beta) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("bad --beta-map entry `{item}`, expected ID=BETA")))?;
            let beta: f64 = beta
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad weight in --beta-map entry `{item}`")))?;
            if !(0.0..=1.0).contains(&beta) {
                return Err(CliError::Usage(format!("weight for `{}` must lie in [0, 1]", id.trim())));
            }
            Ok((id.trim().to_string(), beta))
        })
        .collect()
}

/// Synthetic scenario shared by `simulate` and `bench`.
#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of classes
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Probability of keeping the current class at each tick
    #[arg(long, default_value_t = 0.99)]
    pub stay_prob: f64,
    /// Stream length in seconds
    #[arg(long, default_value_t = 14400.0)]
    pub duration: f64,
    /// One-based class at t = 0 (drawn uniformly if omitted)
    #[arg(long)]
    pub initial_class: Option<usize>,
    #[arg(long, default_value_t = 60.0)]
    pub strong_period: f64,
    /// Also the tick of the class chain
    #[arg(long, default_value_t = 5.0)]
    pub weak_period: f64,
    #[arg(long, default_value_t = 40.0)]
    pub strong_true: f64,
    #[arg(long, default_value_t = 0.5)]
    pub strong_other: f64,
    #[arg(long, default_value_t = 0.05)]
    pub strong_flip: f64,
    #[arg(long, default_value_t = 8.0)]
    pub weak_true: f64,
    #[arg(long, default_value_t = 0.8)]
    pub weak_other: f64,
    #[arg(long, default_value_t = 0.25)]
    pub weak_flip: f64,
}

impl ScenarioArgs {
    fn chain(&self) -> Result<MarkovChainSpec, CliError> {
        if self.k < 2 {
            return Err(CliError::Usage(format!("--k must be >= 2, got {}", self.k)));
        }
        if !(self.stay_prob > 0.0 && self.stay_prob <= 1.0) {
            return Err(CliError::Usage(format!("--stay-prob must lie in (0, 1], got {}", self.stay_prob)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(CliError::Usage(format!("--duration must be positive, got {}", self.duration)));
        }
        let initial = match self.initial_class {
            Some(c) if c == 0 || c > self.k => {
                return Err(CliError::Usage(format!("--initial-class must lie in 1..={}", self.k)))
            }
            Some(c) => Some(c - 1),
            None => None,
        };
        Ok(MarkovChainSpec {
            k: self.k,
            stay_prob: self.stay_prob,
            switch_probs: None,
            tick: self.weak_period,
            duration: self.duration,
            seed: self.seed,
            initial,
        })
    }

    fn classifiers(&self) -> Result<Vec<SyntheticClassifierSpec>, CliError> {
        Ok(vec![
            SyntheticClassifierSpec::new(STRONG_ID, self.strong_true, self.strong_other, self.strong_flip)?,
            SyntheticClassifierSpec::new(WEAK_ID, self.weak_true, self.weak_other, self.weak_flip)?,
        ])
    }

    fn policy(&self, betas: Option<&BTreeMap<String, f64>>) -> Result<SchedulePolicy, CliError> {
        let mut policy = SchedulePolicy::strong_weak(self.strong_period, self.weak_period)?;
        if let Some(map) = betas {
            for (id, &beta) in map {
                policy
                    .set_beta(id, beta)
                    .map_err(|_| CliError::Usage(format!("--beta-map names unknown classifier `{id}`")))?;
            }
        }
        Ok(policy)
    }
}

#[derive(Args, Debug)]
pub struct FilterCmd {
    /// Input stream; standard input when omitted or `-`
    pub input: Option<PathBuf>,
    /// Output file; standard output when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Input and output format (detected from the input when omitted)
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum, default_value_t = MethodArg::Multiple)]
    pub method: MethodArg,
    /// Skip malformed records instead of aborting
    #[arg(long)]
    pub lenient: bool,
    /// Rescale probability vectors that do not sum to one
    #[arg(long)]
    pub renormalize: bool,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Args, Debug)]
pub struct SimulateCmd {
    /// Stream output file; standard output when omitted
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Truth file (`t,true_class`, one-based classes)
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Args, Debug)]
pub struct EvaluateCmd {
    /// Filter output (JSON lines or CSV with a `class` column)
    pub predictions: PathBuf,
    /// Truth file (`t,true_class`)
    pub truth: PathBuf,
    /// Number of classes (inferred from the labels when omitted)
    #[arg(long)]
    pub k: Option<usize>,
    /// Also write the report as JSON
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchCmd {
    /// Comma-separated subset of raw,simple,single,multiple
    #[arg(long, value_enum, value_delimiter = ',', default_value = "raw,simple,single,multiple")]
    pub methods: Vec<MethodArg>,
    /// Write per-step true-class probabilities as CSV
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Also write the report as JSON
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Splices `key = value` lines from `--config FILE` into the argument list
/// right after the subcommand, so later command-line flags override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            config = Some(it.next().ok_or_else(|| CliError::Usage("--config needs a file".into()))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
    let extra = config_args(&text)?;
    // position of the subcommand: the first non-flag after the program name
    let at = rest.iter().skip(1).position(|a| !a.starts_with('-')).map_or(rest.len(), |i| i + 2);
    rest.splice(at.min(rest.len())..at.min(rest.len()), extra);
    Ok(rest)
}

/// Turns `key = value` lines into `--key value` arguments. `#` starts a
/// comment; `true`/`false` toggle switches.
pub fn config_args(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: bad key", i + 1)));
        }
        match value.trim() {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Filter(c) => cmd_filter(&c),
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Evaluate(c) => cmd_evaluate(&c),
        Command::Bench(c) => cmd_bench(&c),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) if p.as_os_str() != "-" => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Data(format!("cannot create {}: {e}", p.display())))?,
        )),
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_filter(cmd: &FilterCmd) -> Result<(), CliError> {
    let config = cmd.tuning.filter_config()?;
    let betas = cmd.tuning.betas()?;
    let kind = cmd.tuning.kind(cmd.method);
    let text = records::read_input(cmd.input.as_deref())?;
    let format = cmd.format.unwrap_or_else(|| records::sniff(&text));
    let rows = records::parse_stream(&text, format)?;

    let mut smoother = Smoother::new(kind, config)?;
    let mut writer = OutputWriter::new(open_output(cmd.output.as_deref())?, format);
    let mut k = None;
    let mut last_t = f64::NEG_INFINITY;
    for (line, row) in rows {
        let checked = row.and_then(|rec| {
            let s = records::checked_probs(&rec, cmd.renormalize)?;
            match k {
                Some(k) if k != s.len() => Err(format!("expected {k} probabilities, got {}", s.len())),
                _ => Ok((rec, s)),
            }
        });
        let (rec, s) = match checked {
            Ok(v) => v,
            Err(msg) if cmd.lenient => {
                eprintln!("warning: line {line}: {msg}; skipped");
                continue;
            }
            Err(msg) => return Err(CliError::Data(format!("line {line}: {msg}"))),
        };
        if rec.t < last_t {
            return Err(CliError::Data(format!(
                "line {line}: timestamp {} precedes the previous record ({last_t})",
                rec.t
            )));
        }
        last_t = rec.t;
        k = Some(s.len());
        let beta = match (betas.get(&rec.source), kind) {
            (Some(&b), _) => b,
            (None, SmootherKind::Multiple) => {
                return Err(CliError::Data(format!(
                    "line {line}: unknown classifier id `{}` (add it to --beta-map)",
                    rec.source
                )))
            }
            (None, _) => 1.0,
        };
        let obs = Observation::new(rec.t, rec.source.clone(), s, beta)
            .map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
        let out = smoother.push(&obs).map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
        writer.write(&OutputRecord {
            t: rec.t,
            source: rec.source,
            probs: out.input.into_inner(),
            smoothed: out.smoothed.into_inner(),
            class: out.class + 1,
            converged: out.converged,
        })?;
    }
    writer.finish()
}

pub fn cmd_simulate(cmd: &SimulateCmd) -> Result<(), CliError> {
    let chain = cmd.scenario.chain()?;
    let classifiers = cmd.scenario.classifiers()?;
    let policy = cmd.scenario.policy(None)?;
    let stream = generate_stream(&chain, &classifiers, &policy)?;
    let recs: Vec<StreamRecord> = stream
        .observations
        .iter()
        .map(|o| StreamRecord { t: o.t, source: o.source.clone(), probs: o.s.as_slice().to_vec() })
        .collect();
    let mut out = open_output(cmd.output.as_deref())?;
    records::write_stream(&mut out, &recs, cmd.format)?;
    out.flush().map_err(|e| CliError::Data(e.to_string()))?;
    let truth = File::create(&cmd.truth)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", cmd.truth.display())))?;
    records::write_truth(BufWriter::new(truth), &stream.truth)
}

pub fn cmd_evaluate(cmd: &EvaluateCmd) -> Result<(), CliError> {
    let pred = records::read_labels(&records::read_input(Some(&cmd.predictions))?, "class")?;
    let truth = records::read_labels(&records::read_input(Some(&cmd.truth))?, "true_class")?;
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()).into());
    }
    for (i, (p, t)) in pred.iter().zip(&truth).enumerate() {
        if (p.0 - t.0).abs() > 1e-9 * t.0.abs().max(1.0) {
            return Err(CliError::Data(format!("record {}: prediction time {} does not match truth time {}", i + 1, p.0, t.0)));
        }
    }
    let labels = pred.iter().chain(&truth).map(|x| x.1);
    if labels.clone().any(|c| c == 0) {
        return Err(CliError::Data("class labels are one-based; found 0".into()));
    }
    let k = cmd.k.unwrap_or_else(|| labels.max().unwrap_or(0).max(2));
    let p: Vec<usize> = pred.iter().map(|x| x.1 - 1).collect();
    let t: Vec<usize> = truth.iter().map(|x| x.1 - 1).collect();
    let report = evaluate(&p, &t, k)?;
    print!("{}", report.render_text());
    if let Some(path) = &cmd.json {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?;
        write_all(path, format!("{json}\n").as_bytes())?;
    }
    Ok(())
}

pub fn cmd_bench(cmd: &BenchCmd) -> Result<(), CliError> {
    if cmd.methods.is_empty() {
        return Err(CliError::Usage("--methods is empty".into()));
    }
    let config = cmd.tuning.filter_config()?;
    let betas = cmd.tuning.beta_map.as_ref().map(|_| cmd.tuning.betas()).transpose()?;
    let chain = cmd.scenario.chain()?;
    let classifiers = cmd.scenario.classifiers()?;
    let policy = cmd.scenario.policy(betas.as_ref())?;
    let methods: Vec<SmootherKind> = cmd.methods.iter().map(|&m| cmd.tuning.kind(m)).collect();
    let stream = generate_stream(&chain, &classifiers, &policy)?;
    let report = benchmark_stream(&stream, &methods, &config, chain.seed)?;
    print!("{}", report.render_text());
    if let Some(path) = &cmd.json {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?;
        write_all(path, format!("{json}\n").as_bytes())?;
    }
    if let Some(path) = &cmd.trace {
        let rows = true_class_trace(&stream, &methods, &config)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<String> = ["t", "source", "true_class"]
            .into_iter()
            .map(String::from)
            .chain(methods.iter().map(|m| m.name().to_string()))
            .collect();
        let werr = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record(&header).map_err(werr)?;
        for r in rows {
            let row: Vec<String> = [records::round12(r.t).to_string(), r.source, (r.true_class + 1).to_string()]
                .into_iter()
                .chain(r.values.iter().map(|&v| records::round12(v).to_string()))
                .collect();
            w.write_record(&row).map_err(werr)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
        write_all(path, &bytes)?;
    }
    Ok(())
}
