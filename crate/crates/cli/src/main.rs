//! `negosim`: scenario generation, single sessions, tournaments and post-hoc
//! analysis of persisted traces.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use negosim_core::metrics::{
    ablation_csv, ablation_random_init, acceptance_csv, agreement_rate_csv, beta_score_csv, discount_sweep_csv,
    fmt_sig, metrics_report, model_quality_csv, model_quality_curves, sessions_csv, ttest_csv,
};
use negosim_core::opponent_model::{ModelDump, TrainingMode};
use negosim_core::protocol::{replay, trace_from_jsonl, trace_to_jsonl, TraceHeader};
use negosim_core::stats::dependent_t_test;
use negosim_core::tournament::{decision_log, run_tournament_with_workers, SessionRecord};
use negosim_core::{
    run_session, GeneratorSpec, NegotiationError, Result, Scenario, SessionOutcome, StrategyRegistry, TournamentConfig,
};

#[derive(Parser)]
#[command(name = "negosim", version, about = "Multilateral negotiation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random scenario (domain plus one profile per party).
    GenScenario(GenScenario),
    /// Run one session and print its report as JSON.
    RunSession(RunSession),
    /// Run a tournament from a JSON config and write the CSV suite.
    RunTournament(RunTournament),
    /// Recompute results from persisted traces and model dumps.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Args)]
struct GenScenario {
    #[arg(long)]
    issues: usize,
    #[arg(long)]
    values_per_issue: usize,
    /// How many of the issues are integer-ranged.
    #[arg(long, default_value_t = 0)]
    integer_issues: usize,
    #[arg(long, default_value_t = 3)]
    parties: usize,
    #[arg(long, default_value_t = 0.0)]
    reservation: f64,
    #[arg(long, default_value_t = 1.0)]
    discount: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "generated")]
    name: String,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunSession {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated strategy types (`herbt,frequency,random`) or a JSON
    /// array of strategy blocks.
    #[arg(long)]
    agents: String,
    /// β bound into strategies that take one.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 180)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Opponent-model snapshots as JSON lines.
    #[arg(long)]
    models_out: Option<PathBuf>,
}

#[derive(Args)]
struct RunTournament {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Also run the fresh-vs-continuous training ablation for this roster id.
    #[arg(long)]
    ablation: Option<String>,
}

#[derive(Subcommand)]
enum Analyze {
    /// Replay a trace and print the session report.
    Metrics {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Pearson and MAE of dumped models against the true profiles, per round.
    ModelQuality {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        models: PathBuf,
    },
    /// Paired t-test on a two-column CSV.
    Ttest {
        #[arg(long)]
        input: PathBuf,
    },
}

fn exit_code(e: &NegotiationError) -> u8 {
    match e {
        NegotiationError::ProtocolViolation { .. } => 2,
        NegotiationError::Capacity { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenScenario(a) => gen_scenario(a),
        Command::RunSession(a) => run_session_cmd(a),
        Command::RunTournament(a) => run_tournament_cmd(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| NegotiationError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| NegotiationError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json_str(&read_file(path)?)
}

fn gen_scenario(a: GenScenario) -> Result<()> {
    let spec = GeneratorSpec {
        name: a.name,
        issues: a.issues,
        values_per_issue: a.values_per_issue,
        integer_issues: a.integer_issues,
        parties: a.parties,
        reservation: a.reservation,
        discount: a.discount,
    };
    let text = spec.generate(a.seed)?.to_json_string();
    match a.out {
        Some(path) => write_file(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses `--agents` into strategy blocks.
fn agent_blocks(spec: &str) -> Result<Vec<Value>> {
    let trimmed = spec.trim();
    if trimmed.starts_with('[') {
        let v: Vec<Value> =
            serde_json::from_str(trimmed).map_err(|e| NegotiationError::Config(format!("--agents: {e}")))?;
        return Ok(v);
    }
    let blocks: Vec<Value> =
        trimmed.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|t| json!({ "type": t })).collect();
    if blocks.is_empty() {
        return Err(NegotiationError::Config("--agents: no strategies given".into()));
    }
    Ok(blocks)
}

fn block_name(block: &Value) -> String {
    block.get("type").and_then(Value::as_str).unwrap_or("?").to_string()
}

/// Report shared by `run-session` and `analyze metrics`.
fn session_report(header: &TraceHeader, scenario: &Scenario, outcome: &SessionOutcome) -> Value {
    let (counts, _) = decision_log(outcome, &scenario.profiles);
    let per_agent: Vec<Value> = outcome
        .per_agent
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(i, (r, c))| {
            let rate = (c.opportunities > 0).then(|| c.declines as f64 / c.opportunities as f64);
            json!({
                "agent": header.agents.get(i).cloned().unwrap_or_default(),
                "raw_utility": r.raw_utility,
                "discounted_utility": r.discounted_utility,
                "offers": c.offers,
                "accepts": c.accepts,
                "decline_opportunities": c.opportunities,
                "declines": c.declines,
                "decline_rate": rate,
            })
        })
        .collect();
    let agreement = outcome.agreement.as_ref().map(|a| {
        json!({
            "bid": a.bid,
            "proposer": a.proposer,
            "round": a.round,
        })
    });
    json!({
        "scenario_hash": header.scenario_hash,
        "seed": header.seed,
        "round_limit": header.round_limit,
        "agents": header.agents,
        "agreement": agreement,
        "rounds_used": outcome.rounds_used,
        "social_welfare": outcome.social_welfare(),
        "undiscounted_social_welfare": outcome.undiscounted_social_welfare(),
        "per_agent": per_agent,
    })
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn run_session_cmd(a: RunSession) -> Result<()> {
    let scenario = load_scenario(&a.scenario)?;
    let registry = StrategyRegistry::with_builtins();
    let mut blocks = agent_blocks(&a.agents)?;
    if blocks.len() != scenario.profiles.len() {
        return Err(NegotiationError::Config(format!(
            "--agents: {} strategies for a scenario with {} parties",
            blocks.len(),
            scenario.profiles.len()
        )));
    }
    for block in &mut blocks {
        if let Some(beta) = a.beta {
            *block = registry.bind_beta(block, beta)?;
        }
        if a.models_out.is_some() && block_name(block) == "herbt" {
            if let Some(map) = block.as_object_mut() {
                map.insert("record_models".into(), Value::Bool(true));
            }
        }
    }
    let mut agents = blocks.iter().map(|b| registry.build(b)).collect::<Result<Vec<_>>>()?;
    let outcome = run_session(&mut agents, &scenario.profiles, a.rounds, a.seed)?;
    let header = TraceHeader {
        scenario_hash: scenario.content_hash(),
        round_limit: a.rounds,
        seed: a.seed,
        party_count: agents.len(),
        agents: blocks.iter().map(block_name).collect(),
    };
    if let Some(path) = &a.trace_out {
        write_file(path, &trace_to_jsonl(&header, &outcome.trace))?;
    }
    if let Some(path) = &a.models_out {
        let mut text = String::new();
        for agent in &agents {
            for d in agent.model_dumps() {
                text.push_str(&serde_json::to_string(d)?);
                text.push('\n');
            }
        }
        write_file(path, &text)?;
    }
    print_json(&session_report(&header, &scenario, &outcome));
    Ok(())
}

fn run_tournament_cmd(a: RunTournament) -> Result<()> {
    let cfg = TournamentConfig::load(&a.config)?;
    let registry = StrategyRegistry::with_builtins();
    if a.workers == Some(0) {
        return Err(NegotiationError::Config("--workers must be at least 1".into()));
    }
    if let Some(id) = &a.ablation {
        if !cfg.roster.iter().any(|r| &r.id == id) {
            return Err(NegotiationError::Config(format!("--ablation: `{id}` is not a roster id")));
        }
    }
    let records = run_tournament_with_workers(&cfg, &registry, a.workers)?;
    fs::create_dir_all(&a.out_dir)?;
    let report = metrics_report(&records);
    let out = |name: &str, text: String| write_file(&a.out_dir.join(name), &text);
    out("beta_score.csv", beta_score_csv(&report))?;
    out("discount_sweep.csv", discount_sweep_csv(&report))?;
    out("acceptance.csv", acceptance_csv(&report))?;
    out("agreement_rate.csv", agreement_rate_csv(&report))?;
    out("ttest.csv", ttest_csv(&report.ttests))?;
    out("sessions.csv", sessions_csv(&records))?;
    if cfg.record_models {
        out("model_quality.csv", model_quality_csv(&model_quality_curves(&records)?))?;
    }
    if let Some(id) = &a.ablation {
        let ab = ablation_random_init(&cfg, &registry, id, [TrainingMode::FreshEachTurn, TrainingMode::Continuous])?;
        out("ablation.csv", ablation_csv(&ab.rows))?;
    }
    eprintln!("{} sessions written to {}", records.len(), a.out_dir.display());
    Ok(())
}

/// Loads a scenario and a trace, checks they belong together and replays.
fn replay_from_files(scenario: &Path, trace: &Path) -> Result<(Scenario, TraceHeader, SessionOutcome)> {
    let scenario = load_scenario(scenario)?;
    let (header, trace) = trace_from_jsonl(&read_file(trace)?)?;
    if header.scenario_hash != scenario.content_hash() {
        return Err(NegotiationError::Config("--scenario: hash differs from the one recorded in the trace".into()));
    }
    if header.party_count != scenario.profiles.len() {
        return Err(NegotiationError::Structural("trace party count differs from the scenario".into()));
    }
    let outcome = replay(&trace, &scenario.profiles, header.round_limit)?;
    Ok((scenario, header, outcome))
}

fn analyze(a: Analyze) -> Result<()> {
    match a {
        Analyze::Metrics { trace, scenario } => {
            let (scenario, header, outcome) = replay_from_files(&scenario, &trace)?;
            print_json(&session_report(&header, &scenario, &outcome));
        }
        Analyze::ModelQuality { scenario, trace, models } => {
            let (scenario, header, outcome) = replay_from_files(&scenario, &trace)?;
            let dumps = read_file(&models)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str::<ModelDump>(l).map_err(NegotiationError::from))
                .collect::<Result<Vec<_>>>()?;
            let record = SessionRecord::from_outcome(
                scenario.domain.name().to_string(),
                0,
                None,
                1.0,
                0,
                header.agents.clone(),
                0,
                Vec::new(),
                scenario.profiles.clone(),
                header.seed,
                header.round_limit,
                outcome,
                dumps,
            );
            print!("{}", model_quality_csv(&model_quality_curves(&[record])?));
        }
        Analyze::Ttest { input } => {
            let (x, y) = read_pairs(&read_file(&input)?)?;
            let t = dependent_t_test(&x, &y)?;
            println!("t,p,n");
            println!("{},{},{}", fmt_sig(t.t), fmt_sig(t.p), t.n);
        }
    }
    Ok(())
}

/// Two numeric columns; a non-numeric first line is taken as a header.
fn read_pairs(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols.as_slice() {
            [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((a, b)) => {
                x.push(a);
                y.push(b);
            }
            None if i == 0 => {}
            None => {
                return Err(NegotiationError::Structural(format!(
                    "--input line {}: expected two numeric columns",
                    i + 1
                )))
            }
        }
    }
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(exit_code(&NegotiationError::Config("x".into())), 1);
        assert_eq!(exit_code(&NegotiationError::Structural("x".into())), 1);
        assert_eq!(exit_code(&NegotiationError::ProtocolViolation { agent: 0, reason: "x".into() }), 2);
        assert_eq!(exit_code(&NegotiationError::Capacity { size: 10, cap: 1 }), 3);
    }

    #[test]
    fn agent_lists_parse() {
        assert_eq!(agent_blocks("herbt, random").unwrap(), vec![json!({"type": "herbt"}), json!({"type": "random"})]);
        assert_eq!(agent_blocks(r#"[{"type": "time_dependent", "e": 1}]"#).unwrap()[0]["e"], 1);
        assert!(agent_blocks(" , ").is_err());
        assert!(agent_blocks("[{").is_err());
    }
}
