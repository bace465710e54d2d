//! Command-line front end. Every command writes to the given streams and
//! returns its exit status: 0 success, 1 validation failure, 2 usage or
//! input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::engine::{self, SimError};
use crate::validation::{self, ValidationReport, DEFAULT_ORDER_PATH};

#[derive(Debug, Parser)]
#[command(
    name = "numasched",
    version,
    about = "NUMA-aware workflow scheduling simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and write its trace to `out_file_name`.
    Run {
        config: PathBuf,
        /// Also write the run log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run every `config/<case>/config_*.json` under a tests root.
    Test {
        tests_root: PathBuf,
        /// Case directories to run (default: all).
        cases: Vec<String>,
    },
    /// Check a trace's offsets and dependencies.
    ValidateOffsets { trace: PathBuf },
    /// Compare a trace against an expected subset pattern.
    ValidateOutput {
        output: PathBuf,
        expected: PathBuf,
        /// Map whose key order must match (repeatable).
        #[arg(long = "check-order", value_name = "PATH")]
        check_order: Vec<String>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Run { config, log } => cmd_run(&config, log.as_deref(), out, err),
        Command::Test { tests_root, cases } => cmd_test(&tests_root, &cases, out, err),
        Command::ValidateOffsets { trace } => cmd_validate_offsets(&trace, out, err),
        Command::ValidateOutput {
            output,
            expected,
            check_order,
        } => cmd_validate_output(&output, &expected, &check_order, out, err),
    }
}

fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)
}

fn read_file(path: &Path, err: &mut dyn Write) -> Option<String> {
    match fs::read_to_string(path) {
        Ok(text) => Some(text),
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            None
        }
    }
}

pub fn cmd_run(
    config_path: &Path,
    log_path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let result = RunConfig::from_file(config_path)
        .map_err(SimError::from)
        .and_then(|config| engine::run(&config).map(|output| (config, output)));
    let (config, output) = match result {
        Ok(pair) => pair,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    if let Err(e) = write_file(&config.out_file, &output.artifact.to_yaml()) {
        let _ = writeln!(
            err,
            "error: cannot write {}: {e}",
            config.out_file.display()
        );
        return 2;
    }
    if let Some(path) = log_path {
        if let Err(e) = write_file(path, &output.log.to_text()) {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return 2;
        }
    }
    let order: Vec<String> = output
        .outcome
        .records
        .iter()
        .map(|r| format!("{} (core {})", r.name, r.core))
        .collect();
    let _ = writeln!(
        out,
        "makespan: {}",
        crate::trace::format_number(output.outcome.makespan())
    );
    let _ = writeln!(out, "dispatch order: {}", order.join(", "));
    let _ = writeln!(out, "trace written to {}", config.out_file.display());
    0
}

pub fn cmd_validate_offsets(trace: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(text) = read_file(trace, err) else {
        return 2;
    };
    match validation::validate_offsets(&text) {
        Ok(report) => print_report(&report, out),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

pub fn cmd_validate_output(
    output: &Path,
    expected: &Path,
    check_order: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (Some(output_text), Some(expected_text)) =
        (read_file(output, err), read_file(expected, err))
    else {
        return 2;
    };
    let default_order = [DEFAULT_ORDER_PATH.to_string()];
    let order = if check_order.is_empty() {
        &default_order[..]
    } else {
        check_order
    };
    match validation::compare_expected(&output_text, &expected_text, order) {
        Ok(report) => print_report(&report, out),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn print_report(report: &ValidationReport, out: &mut dyn Write) -> i32 {
    let _ = out.write_all(report.render().as_bytes());
    if report.passed() {
        let _ = writeln!(out, "PASS");
        0
    } else {
        let _ = writeln!(out, "FAIL ({} findings)", report.findings.len());
        1
    }
}

/// One `config_*.json` of the test tree with its sibling paths.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub case: String,
    pub name: String,
    pub config: PathBuf,
    pub expected: PathBuf,
    pub output: PathBuf,
    pub log: PathBuf,
}

/// Lists the test cases under `tests_root`, sorted by case then config.
pub fn discover_cases(tests_root: &Path, filter: &[String]) -> Vec<TestCase> {
    let mut cases = Vec::new();
    let Ok(dirs) = fs::read_dir(tests_root.join("config")) else {
        return cases;
    };
    let mut dirs: Vec<PathBuf> = dirs
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    for dir in dirs {
        let case = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        if !filter.is_empty() && !filter.contains(&case) {
            continue;
        }
        let Ok(files) = fs::read_dir(&dir) else {
            continue;
        };
        let mut configs: Vec<PathBuf> = files
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                let name = p.file_name().unwrap_or_default().to_string_lossy();
                name.starts_with("config_") && name.ends_with(".json")
            })
            .collect();
        configs.sort();
        for config in configs {
            let name = config
                .file_stem()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            cases.push(TestCase {
                expected: tests_root
                    .join("expected")
                    .join(&case)
                    .join(format!("{name}.yaml")),
                output: tests_root
                    .join("output")
                    .join(&case)
                    .join(format!("{name}.yaml")),
                log: tests_root
                    .join("log")
                    .join(&case)
                    .join(format!("{name}.log")),
                case: case.clone(),
                name,
                config,
            });
        }
    }
    cases
}

struct CaseResult {
    passed: bool,
    detail: String,
}

fn run_case(tc: &TestCase, tests_root: &Path) -> CaseResult {
    let mut bases = Vec::new();
    if let Some(parent) = tests_root.parent() {
        bases.push(parent.to_path_buf());
    }
    bases.push(tests_root.to_path_buf());
    if let Ok(cwd) = std::env::current_dir() {
        bases.push(cwd);
    }
    let fail = |detail: String| CaseResult {
        passed: false,
        detail,
    };

    let output = match RunConfig::from_file_with_bases(&tc.config, &bases)
        .map_err(SimError::from)
        .and_then(|config| engine::run(&config))
    {
        Ok(output) => output,
        Err(e) => {
            let _ = write_file(&tc.log, &format!("error: {e}\n"));
            return fail(e.to_string());
        }
    };
    let text = output.artifact.to_yaml();
    let mut log = output.log.to_text();
    if let Err(e) = write_file(&tc.output, &text) {
        return fail(format!("cannot write {}: {e}", tc.output.display()));
    }

    let mut report = ValidationReport::default();
    let mut problems = Vec::new();
    match fs::read_to_string(&tc.expected) {
        Ok(expected) => {
            match validation::compare_expected(&text, &expected, &[DEFAULT_ORDER_PATH.to_string()])
            {
                Ok(r) => report.merge(r),
                Err(e) => problems.push(format!("expected file: {e}")),
            }
        }
        Err(e) => problems.push(format!("cannot read {}: {e}", tc.expected.display())),
    }
    match validation::validate_offsets(&text) {
        Ok(r) => report.merge(r),
        Err(e) => problems.push(format!("offsets: {e}")),
    }
    for p in &problems {
        log.push_str(&format!("[validation/ERROR] {p}\n"));
    }
    for f in &report.findings {
        log.push_str(&format!("[validation/ERROR] {f}\n"));
    }
    let _ = write_file(&tc.log, &log);

    let passed = report.passed() && problems.is_empty();
    let detail = if passed {
        format!(
            "makespan {}",
            crate::trace::format_number(output.outcome.makespan())
        )
    } else {
        let mut lines: Vec<String> = problems;
        lines.extend(report.findings.iter().map(|f| f.to_string()));
        lines.join("; ")
    };
    CaseResult { passed, detail }
}

pub fn cmd_test(
    tests_root: &Path,
    filter: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cases = discover_cases(tests_root, filter);
    if cases.is_empty() {
        let _ = writeln!(
            err,
            "error: no test cases found under {}",
            tests_root.join("config").display()
        );
        return 2;
    }
    let results: Vec<CaseResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = cases
            .iter()
            .map(|tc| scope.spawn(move || run_case(tc, tests_root)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| CaseResult {
                    passed: false,
                    detail: "test case panicked".into(),
                })
            })
            .collect()
    });

    let width = cases.iter().map(|c| c.case.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(out, "{:<width$}  {:<10}  RESULT", "CASE", "CONFIG");
    for (tc, r) in cases.iter().zip(&results) {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{:<width$}  {:<10}  {verdict}  {}",
            tc.case, tc.name, r.detail
        );
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "{passed}/{} passed", results.len());
    if passed == results.len() {
        0
    } else {
        1
    }
}
