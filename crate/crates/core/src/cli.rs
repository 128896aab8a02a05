//! Command-line front end shared by the `timdof` binary and the tests.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid arguments or input,
//! 3 a size cap or search budget was exceeded, 4 unstable rank evaluation
//! under `--strict`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::json;

use crate::demand_graph::{self, best_assignment_upper_bound};
use crate::error::Error;
use crate::linear_sim::{self, evaluate_dof, random_scheme, scheme_from_schedule, trial_records, LinearScheme};
use crate::rational::{self, Rational};
use crate::schemes::{self, canonical_tdma, optimal_tdma, schedule_dof, DofResult, MessageAssignment, Method};
use crate::topology::{Mode, Topology, CHORDALITY_LIMIT};

/// Directory for output files when `--output` is not given.
pub const OUT_DIR_ENV: &str = "TIMDOF_OUT_DIR";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const LINEAR_REPORT_SCHEMA: &str = "timdof.linear-report/1";
pub const SWEEP_SCHEMA: &str = "timdof.sweep/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Topology,
    TdmaSearch,
    TdmaCanonical,
    DemandBound,
    LinEval,
    ConverseSample,
    Lemma1,
    Sweep,
}

impl Command {
    pub fn is_randomized(self) -> bool {
        matches!(self, Command::LinEval | Command::ConverseSample | Command::Lemma1)
    }

    fn name(self) -> &'static str {
        match self {
            Command::Topology => "topology",
            Command::TdmaSearch => "tdma-search",
            Command::TdmaCanonical => "tdma-canonical",
            Command::DemandBound => "demand-bound",
            Command::LinEval => "lin-eval",
            Command::ConverseSample => "converse-sample",
            Command::Lemma1 => "lemma1",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "timdof", version, about = "DoF toolkit for locally connected interference networks")]
struct Args {
    command: Command,
    #[arg(long = "K")]
    k: Option<usize>,
    /// Connectivity range; `a..b` (inclusive) for sweep.
    #[arg(long = "L")]
    l: Option<String>,
    #[arg(long, default_value = "cyclic")]
    mode: String,
    /// Transmit-set budget.
    #[arg(long = "M", default_value_t = 1)]
    m: usize,
    /// Channel uses per scheme.
    #[arg(long)]
    n: Option<usize>,
    /// Channel draws per scheme (lin-eval, lemma1) or schemes sampled
    /// (converse-sample).
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Channel draws per sampled scheme in converse-sample.
    #[arg(long, default_value_t = 3)]
    realizations: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Probability that a random precoder is present.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    /// Receiver set for the reconstruction check, e.g. `2,4,6`; even
    /// indices by default.
    #[arg(long)]
    receivers: Option<String>,
    /// Linear scheme document to evaluate instead of the canonical one.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Add floating-point columns next to the exact ones.
    #[arg(long)]
    decimal: bool,
    /// Treat unstable rank evaluations as failures.
    #[arg(long)]
    strict: bool,
    /// Sweep instances use K = multiple · (L + 2).
    #[arg(long = "K-multiple")]
    k_multiple: Option<usize>,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub k: usize,
    /// One value, or the swept range.
    pub l: Vec<usize>,
    /// Sweep instances use `K = k_multiple · (L + 2)`.
    pub k_multiple: usize,
    pub mode: Mode,
    pub m: usize,
    pub n: Option<usize>,
    pub trials: usize,
    pub realizations: usize,
    pub seed: Option<u64>,
    pub density: f64,
    pub receivers: Option<Vec<usize>>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub decimal: bool,
    pub strict: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("limit exceeded: {0}")]
    Limit(String),
    #[error(transparent)]
    Run(Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("rank evaluation unstable in {0} of the evaluated schemes")]
    Unstable(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_resource_limit() {
            CliError::Limit(e.to_string())
        } else {
            CliError::Run(e)
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Run(_) => 2,
            CliError::Limit(_) => 3,
            CliError::Unstable(_) => 4,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_range(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || usage(format!("--L: expected a number or a range a..b, got {text:?}"));
    match text.split_once("..") {
        Some((a, b)) => {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a..=b).collect())
        }
        None => Ok(vec![text.trim().parse().map_err(|_| bad())?]),
    }
}

fn parse_receivers(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| usage(format!("--receivers: bad index {s:?}"))))
        .collect()
}

fn cap(flag: &str, value: usize, limit: usize) -> Result<(), CliError> {
    if value > limit {
        return Err(CliError::Limit(format!("{flag} = {value} exceeds {limit}")));
    }
    Ok(())
}

/// Parses `argv` (program name first) into a validated configuration.
pub fn parse_args<I, S>(argv: I) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
    validate(args)
}

fn validate(a: Args) -> Result<ExperimentConfig, CliError> {
    let cmd = a.command;
    if cmd.is_randomized() && a.seed.is_none() {
        return Err(usage(format!("--seed is required for {}", cmd.name())));
    }
    let mode: Mode = a.mode.parse().map_err(|_| usage(format!("--mode: expected truncated or cyclic, got {:?}", a.mode)))?;
    if a.m == 0 {
        return Err(usage("--M must be at least 1"));
    }
    if a.trials == 0 || a.realizations == 0 {
        return Err(usage("--trials and --realizations must be at least 1"));
    }
    if !(a.density > 0.0 && a.density <= 1.0) {
        return Err(usage(format!("--density {} outside (0, 1]", a.density)));
    }
    if let Some(n) = a.n {
        if n == 0 {
            return Err(usage("--n must be at least 1"));
        }
        cap("--n", n, linear_sim::SLOT_LIMIT)?;
    }
    let mut k_multiple = 0;
    let (k, l) = if cmd == Command::Sweep {
        if a.k.is_some() {
            return Err(usage("sweep derives K from --K-multiple; drop --K"));
        }
        let ls = parse_range(a.l.as_deref().unwrap_or("1..4"))?;
        k_multiple = a.k_multiple.unwrap_or(2);
        if k_multiple == 0 {
            return Err(usage("--K-multiple must be at least 1"));
        }
        let top = ls.iter().map(|l| k_multiple * (l + 2)).max().unwrap_or(0);
        cap("--K (swept)", top, demand_graph::ASSIGNMENT_SEARCH_LIMIT)?;
        (0, ls)
    } else {
        if a.k_multiple.is_some() {
            return Err(usage("--K-multiple only applies to sweep"));
        }
        let k = a.k.ok_or_else(|| usage(format!("--K is required for {}", cmd.name())))?;
        let l = match &a.l {
            Some(text) => {
                let v = parse_range(text)?;
                if v.len() != 1 {
                    return Err(usage("--L ranges only apply to sweep"));
                }
                v
            }
            None => return Err(usage(format!("--L is required for {}", cmd.name()))),
        };
        let limit = match cmd {
            Command::TdmaSearch => schemes::TDMA_SEARCH_LIMIT,
            Command::DemandBound => demand_graph::ASSIGNMENT_SEARCH_LIMIT,
            Command::Topology => crate::topology::MAX_USERS,
            _ => 2 * linear_sim::SLOT_LIMIT,
        };
        cap("--K", k, limit)?;
        (k, l)
    };
    if cmd == Command::DemandBound && a.m != 1 {
        return Err(usage("demand-bound covers single-transmitter assignments only; use --M 1"));
    }
    let receivers = a.receivers.as_deref().map(parse_receivers).transpose()?;
    Ok(ExperimentConfig {
        command: cmd,
        k,
        l,
        k_multiple,
        mode,
        m: a.m,
        n: a.n,
        trials: a.trials,
        realizations: a.realizations,
        seed: a.seed,
        density: a.density,
        receivers,
        input: a.input,
        output: a.output,
        format: a.format,
        decimal: a.decimal,
        strict: a.strict,
    })
}

/// Rendered artifact plus whether any rank evaluation was unstable.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub text: String,
    pub unstable: usize,
}

fn topology(cfg: &ExperimentConfig, l: usize) -> Result<Topology, CliError> {
    Ok(Topology::make_locally_connected(cfg.k, l, cfg.mode)?)
}

fn decimal(r: &Rational) -> String {
    format!("{:.6}", rational::to_f64(r))
}

fn header(cfg: &ExperimentConfig) -> String {
    format!("# timdof {VERSION} seed={}\n", cfg.seed.unwrap_or_default())
}

fn dof_table(cfg: &ExperimentConfig, t: &Topology, rows: &[(usize, DofResult)]) -> String {
    let mut out = String::from("K,L,mode,M,sum_dof_num,sum_dof_den,per_user,method");
    if cfg.decimal {
        out.push_str(",per_user_decimal");
    }
    out.push('\n');
    for (m, r) in rows {
        let method = serde_json::to_value(r.method).expect("method serializes");
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            t.k(),
            t.l(),
            t.mode(),
            m,
            r.sum_dof.numer(),
            r.sum_dof.denom(),
            rational::to_pq(&r.per_user),
            method.as_str().unwrap_or_default()
        );
        if cfg.decimal {
            let _ = write!(out, ",{}", decimal(&r.per_user));
        }
        out.push('\n');
    }
    out
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

/// Produces the artifact for `cfg` without touching the filesystem, except
/// for reading `--input`.
pub fn render(cfg: &ExperimentConfig) -> Result<Rendered, CliError> {
    let plain = |text| Ok(Rendered { text, unstable: 0 });
    match cfg.command {
        Command::Topology => {
            let t = topology(cfg, cfg.l[0])?;
            let cap = (2 * t.k()).min(2 * CHORDALITY_LIMIT);
            let chordal = match t.is_chordal_bipartite(cap) {
                Ok(c) => c.label().to_string(),
                Err(e) if e.is_resource_limit() => "not-checked".into(),
                Err(e) => return Err(e.into()),
            };
            match cfg.format {
                Format::Json => {
                    let mut doc = serde_json::to_value(t.to_doc()).expect("topology serializes");
                    let obj = doc.as_object_mut().expect("object");
                    obj.insert("edges".into(), json!(t.edges()));
                    obj.insert("chordal_bipartite".into(), json!(chordal));
                    plain(pretty(&doc))
                }
                Format::Csv => {
                    let edges: Vec<String> = t.edges().iter().map(|(i, j)| format!("{i}-{j}")).collect();
                    plain(format!(
                        "K,L,mode,edges,chordal_bipartite\n{},{},{},{},{}\n",
                        t.k(),
                        t.l(),
                        t.mode(),
                        edges.join(" "),
                        chordal
                    ))
                }
            }
        }
        Command::TdmaSearch => {
            let t = topology(cfg, cfg.l[0])?;
            let opt = optimal_tdma(&t, cfg.m)?;
            match cfg.format {
                Format::Json => plain(pretty(&json!({
                    "schema": schemes::DOF_RESULT_SCHEMA,
                    "topology": t.to_doc(),
                    "M": cfg.m,
                    "result": opt.result,
                    "assignment": opt.assignment,
                    "schedule": opt.schedule,
                }))),
                Format::Csv => plain(dof_table(cfg, &t, &[(cfg.m, opt.result)])),
            }
        }
        Command::TdmaCanonical => {
            let t = topology(cfg, cfg.l[0])?;
            let (a, sched) = canonical_tdma(&t)?;
            let mut result = schedule_dof(&t, &sched)?;
            result.method = Method::Canonical;
            match cfg.format {
                Format::Json => plain(pretty(&json!({
                    "schema": schemes::DOF_RESULT_SCHEMA,
                    "topology": t.to_doc(),
                    "M": 1,
                    "result": result,
                    "assignment": a,
                    "schedule": sched,
                }))),
                Format::Csv => plain(dof_table(cfg, &t, &[(1, result)])),
            }
        }
        Command::DemandBound => {
            let t = topology(cfg, cfg.l[0])?;
            let b = best_assignment_upper_bound(&t)?;
            match cfg.format {
                Format::Json => plain(b.to_json() + "\n"),
                Format::Csv => {
                    let r = DofResult::new(b.value, t.k(), Method::LpBound);
                    plain(dof_table(cfg, &t, &[(1, r)]))
                }
            }
        }
        Command::LinEval | Command::Lemma1 => {
            let t = topology(cfg, cfg.l[0])?;
            let seed = cfg.seed.expect("validated");
            let scheme = match &cfg.input {
                Some(path) => LinearScheme::from_json(&std::fs::read_to_string(path)?)?,
                None if cfg.command == Command::LinEval => {
                    let (a, sched) = canonical_tdma(&t)?;
                    scheme_from_schedule(&t, &a, &sched, cfg.n)?
                }
                None => {
                    let a = MessageAssignment::full_cooperation(t.k())?;
                    random_scheme(&t, &a, cfg.n.unwrap_or(2), cfg.density, seed)?
                }
            };
            linear_report(cfg, &t, &[(0, scheme)], cfg.trials, seed)
        }
        Command::ConverseSample => {
            let t = topology(cfg, cfg.l[0])?;
            let seed = cfg.seed.expect("validated");
            let a = MessageAssignment::full_cooperation(t.k())?;
            let n = cfg.n.unwrap_or(2);
            let schemes = (0..cfg.trials)
                .map(|i| Ok((i, random_scheme(&t, &a, n, cfg.density, seed.wrapping_add(i as u64))?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            // channel draws live in a seed range apart from the scheme seeds
            linear_report(cfg, &t, &schemes, cfg.realizations, seed.wrapping_add(1 << 32))
        }
        Command::Sweep => sweep(cfg),
    }
}

fn default_receivers(k: usize) -> Vec<usize> {
    (2..=k).step_by(2).collect()
}

// one row per (scheme, channel draw)
fn linear_report(
    cfg: &ExperimentConfig,
    t: &Topology,
    schemes: &[(usize, LinearScheme)],
    draws: usize,
    channel_seed: u64,
) -> Result<Rendered, CliError> {
    let b = cfg.receivers.clone().unwrap_or_else(|| default_receivers(t.k()));
    let mut unstable = 0;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (idx, s) in schemes {
        let base = channel_seed.wrapping_add((*idx * draws) as u64);
        let result = evaluate_dof(s, t, draws, base)?;
        if result.stability.as_ref().is_some_and(|st| st.unstable) {
            unstable += 1;
        }
        for rec in trial_records(s, t, &b, draws, base)? {
            rows.push((*idx, s.n(), rec));
        }
        summaries.push((*idx, result));
    }
    let text = match cfg.format {
        Format::Csv => {
            let mut out = header(cfg);
            out.push_str("K,L,n,trial,draw,sum_dof,s,r,deficiency,reconstructable");
            if cfg.decimal {
                out.push_str(",sum_dof_decimal");
            }
            out.push('\n');
            for (idx, n, rec) in &rows {
                let dof = Rational::new(rec.decodable as i128, *n as i128);
                let _ = write!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    t.k(),
                    t.l(),
                    n,
                    idx,
                    rec.trial,
                    rational::to_pq(&dof),
                    rec.report.s,
                    rec.report.r,
                    rec.report.deficiency,
                    rec.report.reconstructable
                );
                if cfg.decimal {
                    let _ = write!(out, ",{}", decimal(&dof));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => pretty(&json!({
            "schema": LINEAR_REPORT_SCHEMA,
            "toolkit": format!("timdof {VERSION}"),
            "seed": cfg.seed,
            "topology": t.to_doc(),
            "B": b,
            "schemes": summaries.iter().map(|(idx, r)| json!({"trial": idx, "result": r})).collect::<Vec<_>>(),
            "draws": rows.iter().map(|(idx, n, rec)| json!({
                "trial": idx,
                "n": n,
                "draw": rec.trial,
                "sum_dof": rational::to_pq(&Rational::new(rec.decodable as i128, *n as i128)),
                "report": rec.report,
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(Rendered { text, unstable })
}

fn sweep(cfg: &ExperimentConfig) -> Result<Rendered, CliError> {
    let mut rows = Vec::new();
    for &l in &cfg.l {
        let k = cfg.k_multiple * (l + 2);
        let t = Topology::make_locally_connected(k, l, Mode::Cyclic)?;
        let tdma = optimal_tdma(&t, 1)?.result.per_user;
        let canonical = schedule_dof(&t, &canonical_tdma(&t)?.1)?.per_user;
        let bound = best_assignment_upper_bound(&t)?.value / Rational::from_integer(k as i128);
        rows.push((k, l, tdma, canonical, bound));
    }
    let text = match cfg.format {
        Format::Csv => {
            let mut out = String::from("K,L,mode,M,tdma_per_user,canonical_per_user,bound_per_user");
            if cfg.decimal {
                out.push_str(",tdma_per_user_decimal");
            }
            out.push('\n');
            for (k, l, tdma, canonical, bound) in &rows {
                let _ = write!(
                    out,
                    "{k},{l},cyclic,1,{},{},{}",
                    rational::to_pq(tdma),
                    rational::to_pq(canonical),
                    rational::to_pq(bound)
                );
                if cfg.decimal {
                    let _ = write!(out, ",{}", decimal(tdma));
                }
                out.push('\n');
            }
            out
        }
        Format::Json => pretty(&json!({
            "schema": SWEEP_SCHEMA,
            "rows": rows.iter().map(|(k, l, tdma, canonical, bound)| json!({
                "K": k,
                "L": l,
                "mode": "cyclic",
                "M": 1,
                "tdma_per_user": rational::to_pq(tdma),
                "canonical_per_user": rational::to_pq(canonical),
                "bound_per_user": rational::to_pq(bound),
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(Rendered { text, unstable: 0 })
}

impl ExperimentConfig {
    /// File the artifact goes to, if any: `--output`, else a generated name
    /// under the directory named by the environment, else none (stdout).
    pub fn destination(&self) -> Option<PathBuf> {
        let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
        match (&self.output, dir) {
            (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
            (Some(p), _) => Some(p.clone()),
            (None, Some(d)) => Some(d.join(self.default_file_name())),
            (None, None) => None,
        }
    }

    fn default_file_name(&self) -> String {
        let ext = match self.format {
            Format::Json => "json",
            Format::Csv => "csv",
        };
        let l = match self.l.as_slice() {
            [one] => one.to_string(),
            many => format!("{}-{}", many.first().unwrap_or(&0), many.last().unwrap_or(&0)),
        };
        let mut name = match self.command {
            Command::Sweep => format!("sweep-x{}-L{l}", self.k_multiple),
            _ => format!("{}-K{}-L{l}-{}", self.command.name(), self.k, self.mode),
        };
        if let Some(seed) = self.seed {
            let _ = write!(name, "-seed{seed}");
        }
        format!("{name}.{ext}")
    }
}

/// Renders and writes the artifact; returns where it went.
pub fn run(cfg: &ExperimentConfig) -> Result<Option<PathBuf>, CliError> {
    let rendered = render(cfg)?;
    let dest = cfg.destination();
    match &dest {
        Some(path) => write_file(path, &rendered.text)?,
        None => print!("{}", rendered.text),
    }
    if rendered.unstable > 0 {
        if cfg.strict {
            return Err(CliError::Unstable(rendered.unstable));
        }
        eprintln!("warning: rank evaluation unstable in {} scheme(s)", rendered.unstable);
    }
    Ok(dest)
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, text)
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match validate(args).and_then(|cfg| run(&cfg)) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("timdof: {e}");
            e.exit_code()
        }
    }
}
