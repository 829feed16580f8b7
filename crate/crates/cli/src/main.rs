//! `rxfuzz`: command-line front end for campaigns, one-shot relation
//! checks, string generation and report minimization.
//!
//! Exit codes: 0 success with no bugs, 1 bugs found, 2 usage or
//! configuration error, 3 infrastructure failure.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, CommandFactory, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rxfuzz_core::ast::parse;
use rxfuzz_core::engine::{protocol::COV_FILE_ENV, spawn_external, BuiltinEngine, Engine, EngineVerdict, FaultId};
use rxfuzz_core::fuzz::{fuzz_loop, fuzz_parallel, ClockMode, FuzzConfig, FuzzMode, SeedCorpus};
use rxfuzz_core::nfa::{compile_nfa, negative_strings, positive_strings, GenLimits};
use rxfuzz_core::oracle::{applicable_sites, run_mt_with, MtOptions, RelationId};
use rxfuzz_core::report::{minimize, read_jsonl, write_jsonl, MinimizeError, Reporter};

#[derive(Parser)]
#[command(name = "rxfuzz", version, about = "Grammar-aware fuzzing and metamorphic testing for regex engines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a coverage-guided campaign.
    Fuzz(FuzzArgs),
    /// Check one pattern against the metamorphic relations.
    MtCheck(MtCheckArgs),
    /// Print edge-covering matching (and optionally non-matching) strings.
    GenStrings(GenArgs),
    /// Shrink a recorded report.
    Minimize(MinimizeArgs),
}

#[derive(Args)]
struct EngineArgs {
    /// `builtin`, or `cmd:<program> [args...]` for an adapter speaking the
    /// line protocol.
    #[arg(long, default_value = "builtin")]
    engine: String,
    /// Fault to compile into the built-in engine.
    #[arg(long)]
    fault: Option<FaultId>,
}

#[derive(Args)]
struct FuzzArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Seed corpus, one pattern per line. Defaults to the bundled sample.
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long, default_value = "retest")]
    mode: FuzzMode,
    /// Iteration budget (default 1000 unless --duration is given).
    #[arg(long)]
    iters: Option<u64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bug report JSONL output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coverage CSV output.
    #[arg(long)]
    cov_out: Option<PathBuf>,
    /// Disable the metamorphic oracle; only crashes and timeouts are reported.
    #[arg(long)]
    no_mt: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Record 0 for every elapsed time so output is reproducible byte for byte.
    #[arg(long)]
    logical_clock: bool,
    /// Engine replays spent minimizing each finding.
    #[arg(long, default_value_t = 256)]
    minimize_budget: usize,
    /// Stop after this many bug findings.
    #[arg(long)]
    stop_after: Option<usize>,
    /// Positive and negative strings per mutant, each.
    #[arg(long, default_value_t = 8)]
    max_strings: usize,
}

#[derive(Args)]
struct MtCheckArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    pattern: String,
    /// A file with one input per line, or a comma-separated list.
    #[arg(long, default_value = "")]
    inputs: String,
    /// Comma-separated relation ids, or `all`.
    #[arg(long, default_value = "all")]
    relations: String,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    pattern: String,
    #[arg(long, default_value_t = 2)]
    star_unroll: usize,
    #[arg(long, default_value_t = 64)]
    max_len: usize,
    #[arg(long, default_value_t = 64)]
    max_strings: usize,
    /// Also print non-matching strings; lines are then prefixed `+` or `-`.
    #[arg(long)]
    negatives: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MinimizeArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = 500)]
    budget: usize,
}

/// Failure of a subcommand, mapped to an exit code.
enum Failure {
    Usage(String),
    Infra(String),
}

type Outcome = Result<ExitCode, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn infra(msg: impl Into<String>) -> Failure {
    Failure::Infra(msg.into())
}

enum EngineSpec {
    Builtin(Option<FaultId>),
    Command(Vec<String>),
}

impl EngineArgs {
    fn spec(&self) -> Result<EngineSpec, Failure> {
        if self.engine == "builtin" {
            return Ok(EngineSpec::Builtin(self.fault));
        }
        let Some(cmd) = self.engine.strip_prefix("cmd:") else {
            return Err(usage(format!("--engine must be `builtin` or `cmd:<program>`, got {:?}", self.engine)));
        };
        if self.fault.is_some() {
            return Err(usage("--fault only applies to the built-in engine"));
        }
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err(usage("--engine cmd: needs a program"));
        }
        Ok(EngineSpec::Command(argv))
    }
}

/// Engine instance `worker`; each external worker gets its own coverage file.
fn open_engine(spec: &EngineSpec, worker: usize, tracing: bool) -> Result<Box<dyn Engine>, Failure> {
    match spec {
        EngineSpec::Builtin(fault) => {
            let e = BuiltinEngine::with_fault(*fault);
            Ok(Box::new(if tracing { e.with_tracing() } else { e }))
        }
        EngineSpec::Command(argv) => {
            let mut env = BTreeMap::new();
            if let Ok(path) = std::env::var(COV_FILE_ENV) {
                let path = if worker == 0 { path } else { format!("{path}.{worker}") };
                env.insert(COV_FILE_ENV.to_string(), path);
            }
            spawn_external(argv, &env).map(|e| Box::new(e) as Box<dyn Engine>).map_err(|e| infra(e.to_string()))
        }
    }
}

fn cmd_fuzz(a: FuzzArgs) -> Outcome {
    let spec = a.engine.spec()?;
    if a.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let wall_budget = match a.duration {
        Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
        Some(_) => return Err(usage("--duration must be a positive number of seconds")),
        None => None,
    };
    let max_iterations = a.iters.unwrap_or(if wall_budget.is_some() { u64::MAX } else { 1000 });
    let corpus = match &a.seeds {
        Some(p) => SeedCorpus::load(p).map_err(|e| usage(format!("cannot read seeds {}: {e}", p.display())))?,
        None => SeedCorpus::bundled(),
    };
    if corpus.skipped > 0 {
        log::warn!("skipped {} seed lines that do not parse", corpus.skipped);
    }
    let defaults = FuzzConfig::default();
    let cfg = FuzzConfig {
        mode: a.mode,
        max_iterations,
        wall_budget,
        rng_seed: a.seed,
        limits: GenLimits { max_strings: a.max_strings, ..defaults.limits },
        relations_enabled: !a.no_mt,
        clock: if a.logical_clock { ClockMode::Logical } else { ClockMode::Wall },
        stop_after_bugs: a.stop_after,
        minimize_budget: a.minimize_budget,
        workers: a.workers,
        ..defaults
    };
    let mut reporter = Reporter::new();
    let result = if a.workers == 1 {
        let mut engine = open_engine(&spec, 0, true)?;
        fuzz_loop(&cfg, &corpus, &mut engine, &mut reporter)
    } else {
        let mut engines = (0..a.workers).map(|w| open_engine(&spec, w, true)).collect::<Result<Vec<_>, _>>()?;
        fuzz_parallel(&cfg, &corpus, &mut engines, &mut reporter)
    };
    let stats = result.map_err(|e| infra(format!("campaign aborted: {e}")))?;
    if let Some(p) = &a.out {
        write_jsonl(reporter.reports(), p).map_err(|e| infra(format!("cannot write {}: {e}", p.display())))?;
    }
    if let Some(p) = &a.cov_out {
        stats.write_csv(p).map_err(|e| infra(format!("cannot write {}: {e}", p.display())))?;
    }
    eprintln!(
        "{} iterations, {} seeds ({} skipped), {} edges, mutant validity {:.1}%, {} distinct bugs, {} dialect gaps",
        stats.iterations,
        stats.seeds_loaded,
        stats.seeds_skipped,
        stats.final_edges(),
        stats.validity_rate() * 100.0,
        reporter.bug_count(),
        stats.dialect_gaps
    );
    for r in reporter.reports().iter().filter(|r| r.kind.is_bug()) {
        eprintln!("  {} x{}", r.dedup_key, reporter.count_of(&r.dedup_key));
    }
    Ok(if reporter.bug_count() > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn read_inputs(spec: &str) -> Vec<Vec<u8>> {
    let path = Path::new(spec);
    if !spec.is_empty() && path.is_file() {
        if let Ok(text) = std::fs::read(path) {
            return text.split(|&b| b == b'\n').map(|l| l.strip_suffix(b"\r").unwrap_or(l).to_vec()).collect();
        }
    }
    spec.split(',').map(|s| s.as_bytes().to_vec()).collect()
}

fn escape(s: &[u8]) -> String {
    s.escape_ascii().to_string()
}

fn cmd_mt_check(a: MtCheckArgs) -> Outcome {
    let spec = a.engine.spec()?;
    let ast = parse(a.pattern.as_bytes()).map_err(|e| usage(format!("pattern does not parse: {e}")))?;
    let relations: Vec<RelationId> = if a.relations == "all" {
        RelationId::ALL.to_vec()
    } else {
        a.relations
            .split(',')
            .map(|r| r.trim().parse::<RelationId>().map_err(|e| usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let inputs = read_inputs(&a.inputs);
    let mut engine = open_engine(&spec, 0, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut bug = false;
    let mut lines = Vec::new();
    for id in relations {
        if applicable_sites(id, &ast).is_empty() {
            lines.push(format!("{id}: skipped (no applicable site)"));
            continue;
        }
        let run = run_mt_with(&mut engine, &ast, &inputs, &[id], &mut rng, MtOptions { all_sites: true })
            .map_err(|e| infra(e.to_string()))?;
        if let Some(f) = &run.failure {
            bug |= !matches!(f.verdict, EngineVerdict::CompileError(_));
            lines.push(format!("{id}: engine failure on {} with input \"{}\": {:?}", f.pattern, escape(&f.input), f.verdict));
        } else if let Some(f) = &run.finding {
            bug = true;
            lines.push(format!(
                "{id}: VIOLATION variant {} input \"{}\" base {:?} variant {:?}",
                f.variant_pattern,
                escape(&f.input),
                f.base_result,
                f.variant_result
            ));
        } else if run.checks == 0 && !run.dialect_gaps.is_empty() {
            lines.push(format!("{id}: dialect gap ({})", run.dialect_gaps[0].message));
        } else if run.checks == 0 {
            lines.push(format!("{id}: not checked (base pattern rejected by the engine)"));
        } else {
            lines.push(format!("{id}: ok ({} checks)", run.checks));
        }
    }
    emit(&lines)?;
    Ok(if bug { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_gen_strings(a: GenArgs) -> Outcome {
    let ast = parse(a.pattern.as_bytes()).map_err(|e| usage(format!("pattern does not parse: {e}")))?;
    let nfa = compile_nfa(&ast).map_err(|e| usage(e.to_string()))?;
    let limits = GenLimits { star_unroll: a.star_unroll, max_string_len: a.max_len, max_strings: a.max_strings };
    let pos = positive_strings(&nfa, limits);
    let lines: Vec<String> = if a.negatives {
        let neg = negative_strings(&ast, &pos, &mut ChaCha8Rng::seed_from_u64(a.seed), limits);
        pos.iter().map(|s| format!("+{}", escape(s))).chain(neg.iter().map(|s| format!("-{}", escape(s)))).collect()
    } else {
        pos.iter().map(|s| escape(s)).collect()
    };
    emit(&lines)?;
    Ok(ExitCode::SUCCESS)
}

/// Writes lines to stdout; a closed pipe just ends the output.
fn emit(lines: &[String]) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    for l in lines {
        match writeln!(out, "{l}") {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Ok(()),
            Err(e) => return Err(Failure::Infra(format!("writing output: {e}"))),
        }
    }
    Ok(())
}

fn cmd_minimize(a: MinimizeArgs) -> Outcome {
    let spec = a.engine.spec()?;
    let (reports, errors) =
        read_jsonl(&a.report).map_err(|e| usage(format!("cannot read {}: {e}", a.report.display())))?;
    for e in &errors {
        log::warn!("{}: {e}", a.report.display());
    }
    let report = reports
        .get(a.index)
        .ok_or_else(|| usage(format!("--index {} out of range ({} reports)", a.index, reports.len())))?;
    let mut engine = open_engine(&spec, 0, false)?;
    match minimize(&mut engine, report, a.budget) {
        Ok(m) => {
            emit(&[serde_json::to_string(&m).expect("reports serialize")])?;
            Ok(ExitCode::SUCCESS)
        }
        Err(MinimizeError::NonReproducible) => Err(infra("the report does not reproduce on this engine")),
        Err(MinimizeError::Engine(e)) => Err(infra(e.to_string())),
    }
}

/// Usage of the subcommand named on the command line, or of the program.
fn usage_text() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let name = std::env::args().nth(1).unwrap_or_default();
    match cmd.find_subcommand_mut(&name) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_text());
            }
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::MtCheck(a) => cmd_mt_check(a),
        Command::GenStrings(a) => cmd_gen_strings(a),
        Command::Minimize(a) => cmd_minimize(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Infra(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
