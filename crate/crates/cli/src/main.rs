//! `atlplus`: model checking ATL⁺ formulas over concurrent game models.
//!
//! Exit status: 0 on success, 2 for unusable input, 3 when the formula is
//! false where it was required to hold, 4 when an internal invariant fails
//! (an unverifiable witness or disagreeing engines).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atlplus::checker::{
    cross_validate, model_check, model_check_with, random_instance, AgreementReport, CheckOptions,
    Limits,
};
use atlplus::formula::{fragment_width, memory_bound, PathAnalysis};
use atlplus::strategy::synthesize_transducer;
use atlplus::{parse_formula, solve_buchi, Arena, Cgm, Engine, Player, StateFormula, StateId};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "atlplus",
    version,
    about = "Game-theoretic model checking of ATL+"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at every state, or at one.
    Check(CheckArgs),
    /// Emit a finite-memory witness strategy for a true strategic formula.
    Witness(WitnessArgs),
    /// Show fragment width, stable timers and arena sizes.
    Report(InputArgs),
    /// Cross-validate all engines on random instances.
    Fuzz(FuzzArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Buchi,
    Bounded,
    StatusOracle,
    Fixpoint,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Buchi => Engine::Buchi,
            EngineArg::Bounded => Engine::Bounded,
            EngineArg::StatusOracle => Engine::StatusOracle,
            EngineArg::Fixpoint => Engine::Fixpoint,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Model file, or the name of a bundled model (mstar, m3, hub).
    #[arg(long)]
    model: String,
    /// Formula text.
    #[arg(
        long,
        conflicts_with = "formula_file",
        required_unless_present = "formula_file"
    )]
    formula: Option<String>,
    /// File holding the formula text.
    #[arg(long)]
    formula_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Only report this state.
    #[arg(long)]
    state: Option<String>,
    /// Defaults to buchi for width up to 4 and bounded above.
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Timer bound for every game of the bounded engine.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    timer: Option<u64>,
    /// Exit with status 3 if the formula is false at the chosen state (or any state).
    #[arg(long)]
    fail_on_false: bool,
    /// Include solve time in the output.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Start state; defaults to the first declared state.
    #[arg(long)]
    state: Option<String>,
    /// Where to write the witness; standard output if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "ATLPLUS_JOBS")]
    jobs: Option<usize>,
    #[arg(long, default_value_t = 6)]
    max_states: usize,
    #[arg(long, default_value_t = 3)]
    max_agents: usize,
    #[arg(long, default_value_t = 2)]
    max_actions: usize,
    #[arg(long, default_value_t = 3)]
    max_width: usize,
    #[arg(long, default_value_t = 3)]
    max_depth: usize,
    /// Directory for reproducers of disagreements.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    False(String),
    #[error("{0}")]
    Breach(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::False(_) => 3,
            CliError::Breach(_) => 4,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => check(args),
        Command::Witness(args) => witness(args),
        Command::Report(args) => report(args),
        Command::Fuzz(args) => fuzz(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn load_model(source: &str) -> Result<Cgm, CliError> {
    if Path::new(source).exists() {
        Cgm::load(source).map_err(input)
    } else {
        Cgm::fixture(source).map_err(|_| {
            input(format!(
                "model `{source}` is neither a readable file nor a bundled model"
            ))
        })
    }
}

fn load_formula(args: &InputArgs) -> Result<StateFormula, CliError> {
    let text = match (&args.formula, &args.formula_file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => fs::read_to_string(path)
            .map_err(|e| input(format!("cannot read formula file {}: {e}", path.display())))?,
        (None, None) => return Err(input("no formula given")),
    };
    let text = text.trim();
    parse_formula(text).map_err(|e| {
        let caret = " ".repeat(text[..e.offset().min(text.len())].chars().count());
        input(format!("{e}\n  {text}\n  {caret}^"))
    })
}

fn check_symbols(m: &Cgm, phi: &StateFormula) -> Result<(), CliError> {
    for p in phi.propositions() {
        if !m.propositions().contains(&p) {
            return Err(input(format!(
                "proposition `{p}` is not declared by the model"
            )));
        }
    }
    for a in phi.agents() {
        if m.agent_id(&a).is_none() {
            return Err(input(format!("agent `{a}` is not declared by the model")));
        }
    }
    Ok(())
}

fn find_state(m: &Cgm, name: Option<&str>) -> Result<Option<StateId>, CliError> {
    name.map(|n| {
        m.state_id(n)
            .ok_or_else(|| input(format!("state `{n}` is not declared by the model")))
    })
    .transpose()
}

fn print_json(value: &impl Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn check(args: CheckArgs) -> Result<(), CliError> {
    let m = load_model(&args.input.model)?;
    let phi = load_formula(&args.input)?;
    check_symbols(&m, &phi)?;
    let only = find_state(&m, args.state.as_deref())?;
    let engine = args
        .engine
        .map_or_else(|| Engine::default_for(&phi), Engine::from);
    let options = CheckOptions {
        timer: args.timer.map(|t| t as usize),
    };
    let verdict = model_check_with(&m, &phi, engine, options).map_err(input)?;

    let mut doc = verdict.to_document(&m, args.timing);
    if let Some(q) = only {
        doc.states.retain(|s| s.state == m.state_name(q));
    }
    match args.input.format {
        Format::Structured => print_json(&doc),
        Format::Human => {
            println!("formula: {}", doc.formula);
            println!("engine:  {}", doc.engine);
            for s in &doc.states {
                println!("  {:<12} {}", s.state, s.value);
            }
            match engine {
                Engine::Buchi => println!("arena positions: {}", doc.stats.arena_positions),
                Engine::Bounded => println!("memo entries: {}", doc.stats.memo_size),
                _ => {}
            }
            if let Some(ms) = doc.stats.elapsed_ms {
                println!("time: {ms:.3} ms");
            }
        }
    }
    if args.fail_on_false {
        if let Some(s) = doc.states.iter().find(|s| !s.value) {
            return Err(CliError::False(format!(
                "formula is false at `{}`",
                s.state
            )));
        }
    }
    Ok(())
}

fn witness(args: WitnessArgs) -> Result<(), CliError> {
    let m = load_model(&args.input.model)?;
    let phi = load_formula(&args.input)?;
    check_symbols(&m, &phi)?;
    let q = find_state(&m, args.state.as_deref())?.unwrap_or(StateId(0));
    let expanded = phi.expand();
    let StateFormula::Coalition(c, body) = &expanded else {
        return Err(input(
            "a witness needs a formula of the form <<A>> path-formula",
        ));
    };

    // Inner strategic formulas are settled first; the outer one is the goal.
    let mut inner = expanded.strategic_subformulas();
    inner.pop();
    let mut labels = atlplus::Labeling::new();
    for sub in inner {
        let v = model_check(&m, &sub, Engine::Buchi).map_err(input)?;
        labels.insert(sub, v.values);
    }
    let agents = m.resolve_coalition(c).map_err(input)?;
    let arena = Arena::build(&m, &labels, agents, body).map_err(input)?;
    let sol = solve_buchi(arena.graph());
    if sol.winner(arena.initial(q)) != Player::Eloise {
        return Err(CliError::False(format!(
            "formula is false at `{}`; there is no witness",
            m.state_name(q)
        )));
    }
    let report = synthesize_transducer(&m, &labels, body, &arena, &sol, q)
        .map_err(|e| CliError::Breach(e.to_string()))?;
    let k = arena.analysis().len();
    let doc = report
        .transducer
        .to_document(&m, &expanded.to_string(), body);
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    match &args.output {
        Some(path) => fs::write(path, text + "\n")
            .map_err(|e| input(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{text}"),
    }
    let summary = format!(
        "memory: {} cells, bound 3^{k}-2^{k} = {}, level {}{}",
        report.memory,
        report.bound,
        report.level,
        if report.fell_back { " (fallback)" } else { "" }
    );
    if args.output.is_some() && args.input.format == Format::Human {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    if !report.verified {
        return Err(CliError::Breach(
            "the synthesized witness failed verification".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct SubformulaReport {
    formula: String,
    atoms: usize,
    temporal_atoms: usize,
    stable_timer: usize,
    memory_bound: u128,
    arena_positions: usize,
}

#[derive(Serialize)]
struct FragmentDocument {
    formula: String,
    width: usize,
    memory_bound: u128,
    subformulas: Vec<SubformulaReport>,
    buchi_positions: usize,
    bounded_memo_entries: usize,
}

fn report(args: InputArgs) -> Result<(), CliError> {
    let m = load_model(&args.model)?;
    let phi = load_formula(&args)?;
    check_symbols(&m, &phi)?;
    let expanded = phi.expand();
    let fragment = fragment_width(&expanded);
    let buchi = model_check(&m, &expanded, Engine::Buchi).map_err(input)?;
    let bounded = model_check(&m, &expanded, Engine::Bounded).map_err(input)?;
    let subformulas = fragment
        .subformulas
        .iter()
        .zip(&buchi.stats.subformulas)
        .map(|(info, stats)| {
            let StateFormula::Coalition(_, body) = &info.formula else {
                unreachable!()
            };
            SubformulaReport {
                formula: info.formula.to_string(),
                atoms: info.atoms,
                temporal_atoms: PathAnalysis::new(body).temporal_count(),
                stable_timer: stats.stable_timer,
                memory_bound: memory_bound(info.atoms),
                arena_positions: stats.positions.unwrap_or(0),
            }
        })
        .collect();
    let doc = FragmentDocument {
        formula: expanded.to_string(),
        width: fragment.width,
        memory_bound: memory_bound(fragment.width),
        subformulas,
        buchi_positions: buchi.stats.arena_positions,
        bounded_memo_entries: bounded.stats.memo_size,
    };
    match args.format {
        Format::Structured => print_json(&doc),
        Format::Human => {
            println!("formula: {}", doc.formula);
            println!("width:   {} (memory bound {})", doc.width, doc.memory_bound);
            if doc.subformulas.is_empty() {
                println!("no strategic subformulas, no arenas");
            }
            for s in &doc.subformulas {
                println!("  {}", s.formula);
                println!(
                    "    atoms {} ({} temporal), stable timer {}, memory bound {}, arena positions {}",
                    s.atoms, s.temporal_atoms, s.stable_timer, s.memory_bound, s.arena_positions
                );
            }
            if !doc.subformulas.is_empty() {
                println!("buchi arena positions: {}", doc.buchi_positions);
                println!("bounded memo entries:  {}", doc.bounded_memo_entries);
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FuzzSummary {
    seed: u64,
    count: u64,
    disagreements: usize,
    skipped_engine_runs: usize,
    failing: Vec<FailingInstance>,
}

#[derive(Serialize)]
struct FailingInstance {
    seed: u64,
    digest: String,
    model_file: String,
    formula_file: String,
}

fn fuzz(args: FuzzArgs) -> Result<(), CliError> {
    let limits = Limits {
        states: args.max_states,
        agents: args.max_agents,
        actions: args.max_actions,
        width: args.max_width,
        depth: args.max_depth,
    };
    if [
        limits.states,
        limits.agents,
        limits.actions,
        limits.width,
        limits.depth,
    ]
    .contains(&0)
    {
        return Err(input("fuzz limits must be positive"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = args.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(input)?;
    let seeds: Vec<u64> = (0..args.count).map(|i| args.seed.wrapping_add(i)).collect();
    let reports: Vec<(u64, AgreementReport)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|s| {
                let (m, phi) = random_instance(*s, limits);
                (*s, cross_validate(&m, &phi))
            })
            .collect()
    });

    let mut failing = Vec::new();
    for (seed, r) in &reports {
        if let Some(repro) = &r.reproducer {
            fs::create_dir_all(&args.out_dir).map_err(input)?;
            let model_file = args.out_dir.join(format!("repro-{}.model.json", r.digest));
            let formula_file = args.out_dir.join(format!("repro-{}.formula", r.digest));
            let model = serde_json::to_string_pretty(&repro.model).expect("serializable");
            fs::write(&model_file, model + "\n").map_err(input)?;
            fs::write(&formula_file, format!("{}\n", repro.formula)).map_err(input)?;
            failing.push(FailingInstance {
                seed: *seed,
                digest: r.digest.clone(),
                model_file: model_file.display().to_string(),
                formula_file: formula_file.display().to_string(),
            });
        }
    }
    let summary = FuzzSummary {
        seed: args.seed,
        count: args.count,
        disagreements: failing.len(),
        skipped_engine_runs: reports.iter().map(|(_, r)| r.skipped.len()).sum(),
        failing,
    };
    match args.format {
        Format::Structured => print_json(&summary),
        Format::Human => {
            println!(
                "{} instances from seed {}: {} disagreements, {} engine runs skipped",
                summary.count, summary.seed, summary.disagreements, summary.skipped_engine_runs
            );
            for f in &summary.failing {
                println!(
                    "  seed {}: atlplus check --model {} --formula-file {}",
                    f.seed, f.model_file, f.formula_file
                );
            }
        }
    }
    if summary.disagreements > 0 {
        return Err(CliError::Breach(format!(
            "{} instances with disagreeing engines",
            summary.disagreements
        )));
    }
    Ok(())
}
