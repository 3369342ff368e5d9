//! The `kbmc` command line.
//!
//! Exit status is 0 on success, 1 for bad input or a failed check and 2
//! when an internal consistency check fails.

use std::fmt;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::bn::text::exact;
use crate::bn::{
    bn_to_sentences, from_text, sentences_to_bn, to_dot, to_text, BayesNet, BN_HEADER,
};
use crate::construct::build_network;
use crate::eval::{check_sentence, parse_model};
use crate::kb::{analyze, KnowledgeBase, SentenceKind};
use crate::logic::Rational;
use crate::parser::{parse_kb, parse_raw_request, parse_request, pretty_print, ParseError};

const DEFAULT_JOINT_CAP: u128 = 1 << 20;

#[derive(Debug, Parser)]
#[command(
    name = "kbmc",
    version,
    about = "Build and query event-specific Bayesian networks"
)]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Kb,
    Bn,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check a knowledge base.
    Check { kb: PathBuf },
    /// Construct the network for a request.
    Construct {
        kb: PathBuf,
        request: PathBuf,
        /// Where to write the network (standard output when absent).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Where to write the construction report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Fail when construction produces warnings.
        #[arg(long)]
        strict: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Posterior over the request's queries given its evidence.
    Infer {
        bn: PathBuf,
        request: PathBuf,
        /// Cross-check against full joint enumeration up to this many states.
        #[arg(long)]
        joint_cap: Option<u128>,
    },
    /// Evaluate every sentence of a knowledge base in a finite model.
    Oracle { kb: PathBuf, model: PathBuf },
    /// Network to sentences or back, by the input's header.
    Translate {
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Required output kind; the input must then be of the other kind.
        #[arg(long, value_enum)]
        to: Option<Direction>,
        /// Output format for networks.
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input, a failed check or a failed construction.
    User(String),
    /// Located diagnostics for one file.
    Diagnostics(String, ParseError),
    /// Already reported; only the exit status is left.
    Failed,
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Internal(m) => write!(f, "{m}"),
            CliError::Diagnostics(path, e) => {
                let lines: Vec<String> = e
                    .diagnostics
                    .iter()
                    .map(|d| {
                        if d.line == 0 {
                            format!("{path}: {d}")
                        } else {
                            format!("{path}:{d}")
                        }
                    })
                    .collect();
                write!(f, "{}", lines.join("\n"))
            }
            CliError::Failed => Ok(()),
        }
    }
}

fn user(e: impl fmt::Display) -> CliError {
    CliError::User(e.to_string())
}

/// Where diagnostics go, optionally colored.
pub struct Console<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub color: bool,
}

impl Console<'_> {
    fn tagged(&mut self, tag: &str, code: &str, message: &str) {
        for line in message.lines() {
            let _ = if self.color {
                writeln!(self.err, "\x1b[{code}m{tag}:\x1b[0m {line}")
            } else {
                writeln!(self.err, "{tag}: {line}")
            };
        }
    }

    pub fn warn(&mut self, message: &str) {
        self.tagged("warning", "33", message);
    }

    pub fn error(&mut self, message: &str) {
        self.tagged("error", "31", message);
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))
}

fn write_to(path: Option<&Path>, text: &str, c: &mut Console) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::User(format!("cannot write {}: {e}", p.display()))),
        None => c
            .out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn parse_kb_file(path: &Path) -> Result<crate::parser::SourceKB, CliError> {
    parse_kb(&read(path)?).map_err(|e| CliError::Diagnostics(path.display().to_string(), e))
}

/// `r` rounded half away from zero to `places` decimals.
pub fn decimal(r: &Rational, places: usize) -> String {
    let scale = BigInt::from(10).pow(places as u32);
    let scaled = r.abs() * Rational::from_integer(scale.clone());
    let rounded = (scaled + Rational::new(1.into(), 2.into()))
        .floor()
        .to_integer();
    let (int, frac) = (&rounded / &scale, &rounded % &scale);
    let sign = if r.is_negative() && !rounded.is_zero() {
        "-"
    } else {
        ""
    };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{:0>places$}", frac.to_string())
    }
}

fn kind_name(k: SentenceKind) -> &'static str {
    match k {
        SentenceKind::GroundFact => "ground-fact",
        SentenceKind::HornUniversal => "horn",
        SentenceKind::LocalStat => "local-stat",
        SentenceKind::TemplateDecomp => "template",
        SentenceKind::Inert => "inert",
    }
}

pub fn cmd_check(kb_path: &Path, c: &mut Console) -> Result<(), CliError> {
    let src = parse_kb_file(kb_path)?;
    let kb = KnowledgeBase::from_source(&src).map_err(user)?;
    for w in &kb.warnings {
        c.warn(w);
    }
    let count = |k: SentenceKind| {
        kb.entries
            .iter()
            .filter(|e| e.classified.kind() == k)
            .count()
    };
    let _ = writeln!(
        c.out,
        "{}: {} statement(s): {} ground-fact, {} horn, {} local-stat, {} template, {} inert",
        kb_path.display(),
        kb.entries.len(),
        count(SentenceKind::GroundFact),
        count(SentenceKind::HornUniversal),
        count(SentenceKind::LocalStat),
        count(SentenceKind::TemplateDecomp),
        count(SentenceKind::Inert),
    );
    Ok(())
}

pub struct ConstructArgs<'a> {
    pub kb: &'a Path,
    pub request: &'a Path,
    pub out: Option<&'a Path>,
    pub report: Option<&'a Path>,
    pub strict: bool,
    pub format: Format,
}

pub fn cmd_construct(a: &ConstructArgs, c: &mut Console) -> Result<(), CliError> {
    let src = parse_kb_file(a.kb)?;
    let kb = KnowledgeBase::from_source(&src).map_err(user)?;
    let req = parse_request(&read(a.request)?, &kb.signature)
        .map_err(|e| CliError::Diagnostics(a.request.display().to_string(), e))?;
    let (net, report) = build_network(&kb, &req).map_err(user)?;
    let problems = net.validate();
    if !problems.is_empty() {
        return Err(CliError::Internal(format!(
            "constructed network is invalid: {}",
            problems.join("; ")
        )));
    }
    for w in &report.warnings {
        c.warn(w);
    }
    if a.strict && !report.warnings.is_empty() {
        c.error(&format!(
            "{} warning(s) with --strict",
            report.warnings.len()
        ));
        return Err(CliError::Failed);
    }
    let text = match a.format {
        Format::Text => to_text(&net).map_err(|e| CliError::Internal(e.to_string()))?,
        Format::Dot => to_dot(&net),
    };
    if let Some(p) = a.report {
        fs::write(p, report.to_string())
            .map_err(|e| CliError::User(format!("cannot write {}: {e}", p.display())))?;
    }
    write_to(a.out, &text, c)
}

pub fn cmd_infer(
    bn_path: &Path,
    req_path: &Path,
    joint_cap: Option<u128>,
    c: &mut Console,
) -> Result<(), CliError> {
    let net = from_text(&read(bn_path)?)
        .map_err(|e| CliError::User(format!("{}: {e}", bn_path.display())))?;
    let raw = parse_raw_request(&read(req_path)?)
        .map_err(|e| CliError::Diagnostics(req_path.display().to_string(), e))?;
    let queries: Vec<String> = raw.queries.iter().map(|a| a.node_name()).collect();
    if queries.is_empty() {
        return Err(CliError::User(format!(
            "{}: no `query` clause",
            req_path.display()
        )));
    }
    let evidence: Vec<(String, String)> = raw
        .evidence
        .iter()
        .map(|l| {
            let v = match (&l.value, l.negated) {
                (Some(v), _) => v.clone(),
                (None, true) => crate::logic::FALSE.to_string(),
                (None, false) => crate::logic::TRUE.to_string(),
            };
            (l.atom.node_name(), v)
        })
        .collect();
    let q: Vec<&str> = queries.iter().map(String::as_str).collect();
    let ev: Vec<(&str, &str)> = evidence
        .iter()
        .map(|(n, v)| (n.as_str(), v.as_str()))
        .collect();
    let post = net.eliminate(&q, &ev).map_err(user)?;
    let cap = joint_cap.unwrap_or(DEFAULT_JOINT_CAP);
    let states: u128 = net.nodes().iter().map(|n| n.range.len() as u128).product();
    if states <= cap {
        let oracle = net
            .brute_force_query(&q, &ev, cap)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        if oracle != post {
            return Err(CliError::Internal(
                "variable elimination disagrees with joint enumeration".into(),
            ));
        }
    }
    let given: Vec<String> = evidence.iter().map(|(n, v)| format!("{n}={v}")).collect();
    let mut s = String::new();
    if given.is_empty() {
        s.push_str(&format!("# P({})\n", queries.join(", ")));
    } else {
        s.push_str(&format!(
            "# P({} | {})\n",
            queries.join(", "),
            given.join(", ")
        ));
        s.push_str(&format!(
            "# P(evidence) = {} ~ {}\n",
            exact(&post.evidence_probability),
            decimal(&post.evidence_probability, 6)
        ));
    }
    let cards: Vec<usize> = post.ranges.iter().map(|r| r.len()).collect();
    for (config, p) in crate::bn::configurations(&cards).iter().zip(&post.table) {
        let values: Vec<String> = config
            .iter()
            .zip(&post.vars)
            .zip(&post.ranges)
            .map(|((&k, n), r)| format!("{n}={}", r[k]))
            .collect();
        s.push_str(&format!(
            "{}\t{}\t{}\n",
            values.join(" "),
            exact(p),
            decimal(p, 6)
        ));
    }
    write_to(None, &s, c)
}

pub fn cmd_oracle(kb_path: &Path, model_path: &Path, c: &mut Console) -> Result<(), CliError> {
    let src = parse_kb_file(kb_path)?;
    let model = parse_model(&read(model_path)?, &src.signature)
        .map_err(|e| CliError::Diagnostics(model_path.display().to_string(), e))?;
    let mut failed = 0;
    let mut s = String::new();
    for (i, st) in src.statements.iter().enumerate() {
        let label = st.label.clone().unwrap_or_else(|| format!("#{}", i + 1));
        let kind = kind_name(analyze(&st.sentence, &label).kind());
        let verdict = match check_sentence(&model, &st.sentence) {
            Ok(true) => "true".to_string(),
            Ok(false) => {
                failed += 1;
                "false".to_string()
            }
            Err(e) => {
                failed += 1;
                c.error(&format!("@{label}: {e}"));
                "error".to_string()
            }
        };
        s.push_str(&format!("@{label}\t{kind}\t{verdict}\n"));
    }
    write_to(None, &s, c)?;
    if failed > 0 {
        c.error(&format!(
            "{failed} of {} sentence(s) do not hold",
            src.statements.len()
        ));
        return Err(CliError::Failed);
    }
    Ok(())
}

fn is_bn_text(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.starts_with(BN_HEADER))
}

pub fn cmd_translate(
    input: &Path,
    out: Option<&Path>,
    to: Option<Direction>,
    format: Format,
    c: &mut Console,
) -> Result<(), CliError> {
    let text = read(input)?;
    let from_bn = is_bn_text(&text);
    match (to, from_bn) {
        (Some(Direction::Kb), false) => {
            return Err(CliError::User(format!(
                "{} is not a network",
                input.display()
            )))
        }
        (Some(Direction::Bn), true) => {
            return Err(CliError::User(format!(
                "{} is already a network",
                input.display()
            )))
        }
        _ => {}
    }
    let output = if from_bn {
        let net =
            from_text(&text).map_err(|e| CliError::User(format!("{}: {e}", input.display())))?;
        let tr = bn_to_sentences(&net).map_err(user)?;
        let back = sentences_to_bn(&tr.kb).and_then(|b| tr.restore(&b));
        if back.as_ref() != Ok(&net) {
            return Err(CliError::Internal(
                "translated sentences do not reproduce the network".into(),
            ));
        }
        pretty_print(&tr.kb)
    } else {
        let src =
            parse_kb(&text).map_err(|e| CliError::Diagnostics(input.display().to_string(), e))?;
        let net: BayesNet = sentences_to_bn(&src).map_err(user)?;
        match format {
            Format::Text => to_text(&net).map_err(|e| CliError::Internal(e.to_string()))?,
            Format::Dot => to_dot(&net),
        }
    };
    write_to(out, &output, c)
}

pub fn dispatch(cfg: &CliConfig, c: &mut Console) -> Result<(), CliError> {
    match &cfg.command {
        Command::Check { kb } => cmd_check(kb, c),
        Command::Construct {
            kb,
            request,
            out,
            report,
            strict,
            format,
        } => cmd_construct(
            &ConstructArgs {
                kb,
                request,
                out: out.as_deref(),
                report: report.as_deref(),
                strict: *strict,
                format: *format,
            },
            c,
        ),
        Command::Infer {
            bn,
            request,
            joint_cap,
        } => cmd_infer(bn, request, *joint_cap, c),
        Command::Oracle { kb, model } => cmd_oracle(kb, model, c),
        Command::Translate {
            input,
            out,
            to,
            format,
        } => cmd_translate(input, out.as_deref(), *to, *format, c),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I, c: &mut Console) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.to_string();
            let _ = if code == 0 {
                c.out.write_all(text.as_bytes())
            } else {
                c.err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cfg, c) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::Failed) {
                c.error(&e.to_string());
            }
            e.exit_code()
        }
    }
}

/// Whether to color standard error, from `KBMC_COLOR`.
pub fn color_from_env() -> Result<bool, String> {
    match std::env::var("KBMC_COLOR").as_deref() {
        Err(_) | Ok("auto") => Ok(std::io::stderr().is_terminal()),
        Ok("never") => Ok(false),
        Ok(other) => Err(format!(
            "KBMC_COLOR must be `never` or `auto`, not `{other}`"
        )),
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let color = match color_from_env() {
        Ok(c) => c,
        Err(m) => {
            eprintln!("error: {m}");
            return 1;
        }
    };
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        let mut c = Console {
            out: &mut out,
            err: &mut err,
            color,
        };
        run(std::env::args_os(), &mut c)
    }));
    result.unwrap_or(2)
}
