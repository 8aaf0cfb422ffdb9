//! `tequiv`: enumerate symbolic traces of protocol scenarios and decide timed
//! observational equivalence.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tequiv::equivalence::{verify, EquivOptions, ObservableReport, Solver, Verdict};
use tequiv::protocol::load_scenario;
use tequiv::semantics::{enumerate, Configuration, EnumOptions, Enumeration};

#[derive(Parser)]
#[command(name = "tequiv", version, about = "Timed observational equivalence checker for security protocols")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether two scenarios are timed observationally equivalent.
    /// Exit status: 0 equivalent, 1 not equivalent, 2 error.
    Verify {
        /// Left scenario, `file[:scenario]`.
        left: String,
        /// Right scenario, `file[:scenario]`.
        right: String,
        #[command(flatten)]
        common: Common,
        /// `internal` or `external:<command>` (an SMT-LIB2 solver reading stdin).
        #[arg(long, default_value = "internal")]
        solver: String,
        /// Worker threads for enumeration and observable matching.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Require two-way term equivalence for each matched observable pair.
        #[arg(long)]
        strict_terms: bool,
    },
    /// Enumerate the observables of one scenario and report counts.
    Enumerate {
        /// Scenario, `file[:scenario]`.
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Print machine-readable JSON.
    #[arg(long)]
    json: bool,
    /// Write the observables of each scenario as JSON into this directory.
    #[arg(long)]
    emit_traces: Option<PathBuf>,
    /// Wall-clock limit in seconds for the whole run and for each solver call.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Depth limit for trace enumeration (unlimited by default).
    #[arg(long)]
    max_steps: Option<usize>,
}

fn parse_solver(s: &str, timeout: Duration) -> Result<Solver> {
    if s == "internal" {
        return Ok(Solver::Internal);
    }
    match s.strip_prefix("external:") {
        Some(cmd) if !cmd.trim().is_empty() => Ok(Solver::External { command: cmd.to_string(), timeout }),
        _ => bail!("unknown solver `{s}`; expected `internal` or `external:<command>`"),
    }
}

fn load(spec: &str) -> Result<(String, Configuration)> {
    let sc = load_scenario(spec).with_context(|| format!("loading {spec}"))?;
    Ok((sc.name.to_string(), Configuration::initial(&sc)))
}

fn emit(dir: &Path, name: &str, en: &Enumeration) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let reports: Vec<ObservableReport> = en.observables().iter().map(ObservableReport::of).collect();
    let path = dir.join(format!("{name}.json"));
    let body = json!({ "scenario": name, "states": en.states, "observables": reports });
    fs::write(&path, serde_json::to_string_pretty(&body)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn check_timeout(t: f64) -> Result<Duration> {
    if !(t > 0.0 && t.is_finite()) {
        bail!("--timeout must be a positive number of seconds");
    }
    Ok(Duration::from_secs_f64(t))
}

/// Exits with status 2 if the run exceeds its wall-clock budget.
fn arm_watchdog(limit: Duration) {
    std::thread::spawn(move || {
        std::thread::sleep(limit);
        eprintln!("error: timed out after {:.1}s", limit.as_secs_f64());
        std::process::exit(2);
    });
}

/// Writes to stdout, treating a closed pipe as success.
fn out(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn render_verdict(v: &Verdict, json_out: bool, names: (&str, &str)) -> Result<String> {
    if json_out {
        return Ok(serde_json::to_string_pretty(v)? + "\n");
    }
    let mut s = String::new();
    writeln!(s, "{} vs {}: {}", names.0, names.1, if v.equivalent { "Equiv" } else { "Not Equiv" })?;
    writeln!(s, "observables: {}/{}", v.left_observables, v.right_observables)?;
    writeln!(s, "states: {}/{}", v.states_explored[0], v.states_explored[1])?;
    if let Some(w) = &v.witness {
        writeln!(s, "witness: {:?} observable #{} has no equivalent (failing condition {})", w.side, w.index, w.condition)?;
        for l in &w.observable.labels {
            writeln!(s, "  {l}")?;
        }
        writeln!(s, "  eq: {}", w.observable.eq)?;
        writeln!(s, "  tc: {}", w.observable.tc.join(" "))?;
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Verify { left, right, common, solver, jobs, strict_terms } => {
            let limit = check_timeout(common.timeout)?;
            let solver = parse_solver(&solver, limit)?;
            if jobs == 0 {
                bail!("--jobs must be at least 1");
            }
            let (ln, lc) = load(&left)?;
            let (rn, rc) = load(&right)?;
            arm_watchdog(limit);
            let run = verify(&lc, &rc, &EnumOptions { max_steps: common.max_steps }, &EquivOptions { solver, jobs, strict_terms })?;
            if let Some(dir) = &common.emit_traces {
                emit(dir, &format!("left-{ln}"), &run.left)?;
                emit(dir, &format!("right-{rn}"), &run.right)?;
            }
            out(&render_verdict(&run.verdict, common.json, (&ln, &rn))?)?;
            Ok(if run.verdict.equivalent { 0 } else { 1 })
        }
        Cmd::Enumerate { scenario, common } => {
            let limit = check_timeout(common.timeout)?;
            let (name, c) = load(&scenario)?;
            arm_watchdog(limit);
            let en = enumerate(&c, &EnumOptions { max_steps: common.max_steps });
            if let Some(dir) = &common.emit_traces {
                emit(dir, &name, &en)?;
            }
            if common.json {
                let body = json!({
                    "scenario": name,
                    "observables": en.finals.len(),
                    "states": en.states,
                    "truncated": en.truncated,
                });
                out(&(serde_json::to_string_pretty(&body)? + "\n"))?;
            } else {
                let cut = if en.truncated { " (truncated)" } else { "" };
                out(&format!("{name}: {} observables, {} states{cut}\n", en.finals.len(), en.states))?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
