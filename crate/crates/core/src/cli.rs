//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error,
//! 3 generation or solver failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{completion_report, consistency_report};
use crate::gen::{default_held_out, generate_dataset, GenConfig};
use crate::inventory::RuleId;
use crate::io::{read_dataset, write_dataset, write_manifest, Format};
use crate::mem::{build_index, memorization_report};
use crate::rng::{stream_rng, Purpose, Split};
use crate::rules::shared_rules;
use crate::solver::{complete_panel, CompletionContext, Strategy};
use crate::types::Panel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "raven", version, about = "Raven's-matrix dataset synthesis and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset and its manifest
    Gen(GenArgs),
    /// Score samples or completions
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Oracle completion of the ninth panel of each test sample
    Complete(CompleteArgs),
    /// Exact-copy memorization against a training (and control) set
    Mem(MemArgs),
    /// Pretty-print one sample with its rule sets
    Inspect(InspectArgs),
    /// Convert a dataset between GRVN and JSONL
    Export(ExportArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n_per_rule: u64,
    /// `all` or comma-separated rule names
    #[arg(long, default_value = "all")]
    rules: String,
    /// `default`, `none`, or comma-separated rule names
    #[arg(long, default_value = "default")]
    holdout: String,
    #[arg(long, default_value = "train")]
    split: Split,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `<out>.manifest.json`
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// `grvn` or `jsonl`; inferred from the output extension when absent
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (output does not depend on this)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// Valid-row, C2 and C3 fractions of unconditional samples
    Consistency {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        per_rule_csv: Option<PathBuf>,
    },
    /// C3 accuracy of ninth-panel completions
    Completion {
        #[arg(long)]
        tests: PathBuf,
        /// Full samples whose ninth panel is the completion
        #[arg(long)]
        completions: PathBuf,
        #[arg(long, default_value = "default")]
        holdout: String,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        per_rule_csv: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct CompleteArgs {
    #[arg(long)]
    tests: PathBuf,
    #[arg(long, default_value = "first")]
    strategy: Strategy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MemArgs {
    #[arg(long)]
    generated: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    control: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    file: PathBuf,
    /// `jsonl` or `grvn`
    #[arg(long)]
    to: String,
    #[arg(long)]
    out: PathBuf,
}

/// Classifies an error into the exit-code contract.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Generation { .. }
        | Error::Infeasible { .. }
        | Error::InfeasibleCompletion(_)
        | Error::NoSharedRule
        | Error::AllInfeasible => EXIT_FAILURE,
        _ => EXIT_DATA,
    }
}

pub fn parse_rule_list(spec: &str) -> Result<Vec<RuleId>> {
    spec.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

pub fn parse_rules(spec: &str) -> Result<Vec<RuleId>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        Ok(RuleId::all().collect())
    } else {
        parse_rule_list(spec)
    }
}

pub fn parse_holdout(spec: &str) -> Result<Vec<RuleId>> {
    match spec.trim().to_ascii_lowercase().as_str() {
        "default" => Ok(default_held_out()),
        "none" | "" => Ok(Vec::new()),
        _ => parse_rule_list(spec),
    }
}

fn parse_format(name: Option<&str>, path: &Path) -> std::result::Result<Format, String> {
    match name {
        None => Ok(Format::from_path(path)),
        Some("grvn") | Some("binary") => Ok(Format::Binary),
        Some("jsonl") => Ok(Format::Jsonl),
        Some(other) => Err(format!("unknown format `{other}` (expected grvn or jsonl)")),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::from(e).in_file(path))
}

fn write_csv_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::from(e).in_file(path))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Runs the CLI; returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { write!(stdout, "{rendered}") } else { write!(stderr, "{rendered}") };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Gen(args) => {
            let format = parse_format(args.format.as_deref(), &args.out).map_err(Failure::Usage)?;
            if args.n_per_rule == 0 {
                return Err(Failure::Usage("--n-per-rule must be positive".into()));
            }
            let cfg = GenConfig::new(args.seed, args.n_per_rule)
                .with_rules(usage(parse_rules(&args.rules))?)
                .with_held_out(usage(parse_holdout(&args.holdout))?)
                .with_split(args.split);
            let (samples, manifest) = match args.threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Failure::Usage(e.to_string()))?
                    .install(|| generate_dataset(&cfg))?,
                None => generate_dataset(&cfg)?,
            };
            write_dataset(&samples, &args.out, format)?;
            let mpath = args.manifest.unwrap_or_else(|| manifest_path(&args.out));
            write_manifest(&manifest, &mpath)?;
            let _ = writeln!(
                out,
                "wrote {} samples ({} rules x {}, split {}) to {}; manifest {}",
                samples.len(),
                manifest.rules.len(),
                args.n_per_rule,
                args.split,
                args.out.display(),
                mpath.display()
            );
        }
        Command::Eval(EvalCommand::Consistency { samples, report, per_rule_csv }) => {
            let data = read_dataset(&samples)?;
            let rep = consistency_report(&data);
            write_text(&report, &rep.to_json())?;
            if let Some(p) = per_rule_csv {
                write_csv_with(&p, |b| rep.write_csv(b))?;
            }
            let _ = writeln!(
                out,
                "n={} valid_row={:.6} c2={:.6} c3={:.6}",
                rep.n_samples, rep.valid_row_fraction, rep.c2_fraction, rep.c3_fraction
            );
        }
        Command::Eval(EvalCommand::Completion { tests, completions, holdout, report, per_rule_csv }) => {
            let held = usage(parse_holdout(&holdout))?;
            let tests_data = read_dataset(&tests)?;
            let comp_data = read_dataset(&completions)?;
            let panels: Vec<Panel> = comp_data.iter().map(|s| *s.panel(8)).collect();
            let rep = completion_report(&tests_data, &panels, &held)?;
            write_text(&report, &rep.to_json())?;
            if let Some(p) = per_rule_csv {
                write_csv_with(&p, |b| rep.write_csv(b))?;
            }
            let fmt = |a: Option<f64>| a.map_or("n/a".to_string(), |a| format!("{a:.6}"));
            let _ = writeln!(
                out,
                "n={} accuracy={:.6} trained={} held_out={}",
                rep.n_tests,
                rep.overall_accuracy,
                fmt(rep.trained_accuracy),
                fmt(rep.held_out_accuracy)
            );
        }
        Command::Complete(args) => {
            let tests = read_dataset(&args.tests)?;
            let results = tests
                .par_iter()
                .enumerate()
                .map(|(i, t)| {
                    let ctx = CompletionContext::from_sample(t).map_err(|e| e.at_record(i))?;
                    let mut rng = stream_rng(args.seed, Purpose::Complete, Split::Test, i as u64);
                    let res = complete_panel(&ctx, args.strategy, &mut rng).map_err(|e| e.at_record(i))?;
                    Ok((ctx.assemble(res.panel9, t.label), res.candidates.len()))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_file(&args.tests))?;
            let completed: Vec<_> = results.iter().map(|r| r.0).collect();
            write_dataset(&completed, &args.out, Format::from_path(&args.out))?;
            let mut hist = [0usize; 41];
            for (_, k) in &results {
                hist[*k] += 1;
            }
            let c3 = completed.iter().filter(|s| shared_rules(s).c3()).count();
            let _ = writeln!(out, "completed {} tests; c3 {} ; candidate-count histogram:", completed.len(), c3);
            for (k, n) in hist.iter().enumerate().filter(|(_, n)| **n > 0) {
                let _ = writeln!(out, "  {k} candidates: {n}");
            }
        }
        Command::Mem(args) => {
            let generated = read_dataset(&args.generated)?;
            let train = build_index(&read_dataset(&args.train)?);
            let control = match &args.control {
                Some(p) => Some(build_index(&read_dataset(p)?)),
                None => None,
            };
            let rep = memorization_report(&generated, &train, control.as_ref());
            write_text(&args.report, &rep.to_json())?;
            if let Some(p) = args.csv {
                write_csv_with(&p, |b| rep.write_csv(b))?;
            }
            for l in &rep.levels {
                let ctrl = l.control_fraction.map_or(String::new(), |c| format!(" control={c:.6}"));
                let _ = writeln!(out, "{:<10} train={:.6}{}", l.level.name(), l.train_fraction, ctrl);
            }
        }
        Command::Inspect(args) => {
            let data = read_dataset(&args.file)?;
            let s = data.get(args.index).ok_or_else(|| {
                Failure::Run(
                    Error::TestCase(format!("index {} out of range ({} samples)", args.index, data.len()))
                        .in_file(&args.file),
                )
            })?;
            let sr = shared_rules(s);
            let _ = writeln!(out, "sample {} label: {}", args.index, s.label.map_or("none", |r| r.name()));
            let _ = write!(out, "{s}");
            for (i, r) in sr.per_row.iter().enumerate() {
                let _ = writeln!(out, "rules row {}: {}", i + 1, fmt_set(r.names()));
            }
            let _ = writeln!(out, "shared by all rows: {}", fmt_set(sr.all_shared.names()));
            let _ = writeln!(out, "C2: {}  C3: {}", sr.c2(), sr.c3());
        }
        Command::Export(args) => {
            let format = parse_format(Some(args.to.as_str()), &args.out).map_err(Failure::Usage)?;
            let data = read_dataset(&args.file)?;
            write_dataset(&data, &args.out, format)?;
            let _ = writeln!(out, "exported {} samples to {}", data.len(), args.out.display());
        }
    }
    Ok(())
}

fn fmt_set(names: Vec<&str>) -> String {
    if names.is_empty() {
        "{}".into()
    } else {
        format!("{{{}}}", names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("raven").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_args(&["gen"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["gen", "--n-per-rule", "1", "--out", "x", "--rules", "NOPE"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn missing_input_is_a_data_error() {
        let (code, _, err) = run_args(&["eval", "consistency", "--samples", "/nonexistent/x", "--report", "/tmp/r"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.contains("/nonexistent/x"));
    }

    #[test]
    fn holdout_parsing() {
        assert_eq!(parse_holdout("default").unwrap().len(), 5);
        assert!(parse_holdout("none").unwrap().is_empty());
        assert_eq!(parse_holdout("CONST-SHAPE, OR-SIZE").unwrap().len(), 2);
        assert_eq!(parse_rules("all").unwrap().len(), 40);
    }
}
