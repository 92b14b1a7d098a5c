//! Seeded tournaments over agent line-ups and scenarios.
//!
//! Every n-multiset of the roster is played on every scenario, discount
//! factor and β grid point, `repetitions` times. Session seeds and generated
//! profiles depend only on (master seed, scenario, line-up, repetition), so
//! grid cells are matched: the same line-up faces the same preferences and
//! random streams at every β and δ.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{social_welfare, GeneratorSpec, Scenario, UtilityProfile};
use crate::error::{NegotiationError, Result};
use crate::opponent_model::ModelDump;
use crate::protocol::{run_session, Action, Agent, SessionOutcome};
use crate::seed::mix_seed;
use crate::strategy::StrategyRegistry;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    File { file: PathBuf },
    Generate { generate: GeneratorSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub id: String,
    pub strategy: Value,
}

fn default_party_count() -> usize {
    3
}
fn default_round_limit() -> usize {
    180
}
fn default_repetitions() -> usize {
    1
}
fn default_true() -> bool {
    true
}

/// `0.0, 0.1, …, 1.0`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TournamentConfig {
    pub scenarios: Vec<ScenarioSource>,
    pub roster: Vec<RosterEntry>,
    #[serde(default = "default_party_count")]
    pub party_count: usize,
    #[serde(default = "default_round_limit")]
    pub round_limit: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_beta_grid")]
    pub beta_grid: Vec<f64>,
    /// Uniform discount factors overriding the profiles' own.
    #[serde(default)]
    pub discount_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_true")]
    pub self_play: bool,
    /// Keep only line-ups containing this roster id.
    #[serde(default)]
    pub require_agent: Option<String>,
    /// Explicit line-ups by roster id, replacing the multiset enumeration.
    #[serde(default)]
    pub lineups: Option<Vec<Vec<String>>>,
    /// Capture opponent-model snapshots from strategies that produce them.
    #[serde(default)]
    pub record_models: bool,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl TournamentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NegotiationError::config(format!("tournament config: {e}")))
    }

    /// Reads a config file; relative scenario paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self, registry: &StrategyRegistry) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(NegotiationError::config("scenarios: at least one scenario source is required"));
        }
        if self.roster.is_empty() {
            return Err(NegotiationError::config("roster: at least one agent is required"));
        }
        if self.party_count < 2 {
            return Err(NegotiationError::config("party_count: must be at least 2"));
        }
        if self.round_limit == 0 {
            return Err(NegotiationError::config("round_limit: must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(NegotiationError::config("repetitions: must be at least 1"));
        }
        if self.beta_grid.is_empty() || self.beta_grid.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return Err(NegotiationError::config("beta_grid: values must lie in [0, 1]"));
        }
        if let Some(grid) = &self.discount_grid {
            if grid.is_empty() || grid.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
                return Err(NegotiationError::config("discount_grid: values must lie in (0, 1]"));
            }
        }
        if !self.self_play && self.roster.len() < self.party_count {
            return Err(NegotiationError::config("roster: fewer agents than party_count requires self_play = true"));
        }
        let mut ids = std::collections::HashSet::new();
        for entry in &self.roster {
            if !ids.insert(entry.id.as_str()) {
                return Err(NegotiationError::config(format!("roster: duplicate id `{}`", entry.id)));
            }
            registry
                .build(&entry.strategy)
                .map_err(|e| NegotiationError::config(format!("roster `{}`: {e}", entry.id)))?;
        }
        if let Some(explicit) = &self.lineups {
            if explicit.is_empty() {
                return Err(NegotiationError::config("lineups: at least one line-up is required"));
            }
            for l in explicit {
                if l.len() != self.party_count {
                    return Err(NegotiationError::config(format!(
                        "lineups: {:?} has {} agents but party_count is {}",
                        l,
                        l.len(),
                        self.party_count
                    )));
                }
                if let Some(bad) = l.iter().find(|id| !ids.contains(id.as_str())) {
                    return Err(NegotiationError::config(format!("lineups: `{bad}` is not in the roster")));
                }
            }
        }
        if let Some(req) = &self.require_agent {
            if !ids.contains(req.as_str()) {
                return Err(NegotiationError::config(format!("require_agent: `{req}` is not in the roster")));
            }
        }
        Ok(())
    }

    /// Roster index tuples, one per line-up, in lexicographic order.
    pub fn lineups(&self) -> Vec<Vec<usize>> {
        let all = match &self.lineups {
            Some(explicit) => explicit
                .iter()
                .map(|l| l.iter().filter_map(|id| self.roster.iter().position(|e| &e.id == id)).collect())
                .collect(),
            None => multisets(self.roster.len(), self.party_count),
        };
        all.into_iter()
            .filter(|l| self.self_play || l.iter().enumerate().all(|(i, a)| !l[i + 1..].contains(a)))
            .filter(|l| match &self.require_agent {
                Some(req) => l.iter().any(|&i| &self.roster[i].id == req),
                None => true,
            })
            .collect()
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }
}

/// All nondecreasing length-`k` sequences over `0..n`.
pub fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Decision statistics of one seat in one session.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCounts {
    pub offers: usize,
    pub accepts: usize,
    /// Turns on which a standing offer could have been accepted.
    pub opportunities: usize,
    pub declines: usize,
}

/// Undiscounted valuation of one bid a seat accepted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedBid {
    pub social_welfare: f64,
    pub individual_utility: f64,
}

#[derive(Clone, Debug)]
pub struct SessionRecord {
    pub scenario: String,
    pub scenario_index: usize,
    pub delta: Option<f64>,
    pub beta: f64,
    pub lineup_index: usize,
    pub lineup: Vec<String>,
    pub repetition: usize,
    pub profile_ids: Vec<String>,
    pub profiles: Vec<UtilityProfile>,
    pub seed: u64,
    pub round_limit: usize,
    pub outcome: SessionOutcome,
    pub counts: Vec<ActionCounts>,
    pub accepted: Vec<Vec<AcceptedBid>>,
    pub model_dumps: Vec<ModelDump>,
}

impl SessionRecord {
    /// Builds the derived statistics from an outcome. Used both online and
    /// when recomputing from persisted traces.
    #[allow(clippy::too_many_arguments)]
    pub fn from_outcome(
        scenario: String,
        scenario_index: usize,
        delta: Option<f64>,
        beta: f64,
        lineup_index: usize,
        lineup: Vec<String>,
        repetition: usize,
        profile_ids: Vec<String>,
        profiles: Vec<UtilityProfile>,
        seed: u64,
        round_limit: usize,
        outcome: SessionOutcome,
        model_dumps: Vec<ModelDump>,
    ) -> Self {
        let (counts, accepted) = decision_log(&outcome, &profiles);
        SessionRecord {
            scenario,
            scenario_index,
            delta,
            beta,
            lineup_index,
            lineup,
            repetition,
            profile_ids,
            profiles,
            seed,
            round_limit,
            outcome,
            counts,
            accepted,
            model_dumps,
        }
    }

    /// Seats occupied by roster id `agent`.
    pub fn seats_of<'a>(&'a self, agent: &'a str) -> impl Iterator<Item = usize> + 'a {
        self.lineup.iter().enumerate().filter(move |(_, id)| *id == agent).map(|(i, _)| i)
    }

    pub fn includes(&self, agent: &str) -> bool {
        self.lineup.iter().any(|id| id == agent)
    }

    pub fn agreement_round(&self) -> Option<usize> {
        self.outcome.agreement.as_ref().map(|a| a.round)
    }

    pub fn proposer_id(&self) -> Option<&str> {
        self.outcome.agreement.as_ref().map(|a| self.lineup[a.proposer].as_str())
    }
}

/// Per-seat action counts and accepted-bid valuations from a trace.
pub fn decision_log(
    outcome: &SessionOutcome,
    profiles: &[UtilityProfile],
) -> (Vec<ActionCounts>, Vec<Vec<AcceptedBid>>) {
    let n = profiles.len();
    let mut counts = vec![ActionCounts::default(); n];
    let mut accepted = vec![Vec::new(); n];
    let mut standing = None;
    for e in &outcome.trace {
        let c = &mut counts[e.agent];
        match &e.action {
            Action::Offer(b) => {
                c.offers += 1;
                if standing.is_some() {
                    c.opportunities += 1;
                    c.declines += 1;
                }
                standing = Some(b);
            }
            Action::Accept => {
                c.accepts += 1;
                c.opportunities += 1;
                let bid = standing.expect("protocol guarantees a standing offer");
                accepted[e.agent].push(AcceptedBid {
                    social_welfare: social_welfare(bid, profiles).expect("valid bid"),
                    individual_utility: profiles[e.agent].utility(bid).expect("valid bid"),
                });
            }
        }
    }
    (counts, accepted)
}

struct SessionSpec {
    scenario_index: usize,
    delta: Option<f64>,
    beta: f64,
    lineup_index: usize,
    repetition: usize,
}

/// Profiles for one repetition of one scenario, with ids.
fn scenario_profiles(
    cfg: &TournamentConfig,
    loaded: &[Option<Scenario>],
    scenario_index: usize,
    repetition: usize,
) -> Result<(String, Vec<String>, Vec<UtilityProfile>)> {
    let n = cfg.party_count;
    match (&cfg.scenarios[scenario_index], &loaded[scenario_index]) {
        (ScenarioSource::File { .. }, Some(s)) => {
            if s.profiles.len() < n {
                return Err(NegotiationError::config(format!(
                    "scenario `{}` has {} profiles but party_count is {n}",
                    s.domain.name(),
                    s.profiles.len()
                )));
            }
            let ids = (0..n).map(|i| format!("{}:{i}", s.domain.name())).collect();
            Ok((s.domain.name().to_string(), ids, s.profiles[..n].to_vec()))
        }
        (ScenarioSource::Generate { generate }, _) => {
            let spec = GeneratorSpec { parties: n, ..generate.clone() };
            let s =
                spec.generate(mix_seed(&[cfg.master_seed, 0x5343_454e, scenario_index as u64, repetition as u64]))?;
            let ids = (0..n).map(|i| format!("{}:r{repetition}:{i}", s.domain.name())).collect();
            Ok((s.domain.name().to_string(), ids, s.profiles))
        }
        (ScenarioSource::File { file }, None) => {
            Err(NegotiationError::config(format!("scenario file {} was not loaded", file.display())))
        }
    }
}

/// Session seed; independent of the β and δ grid points.
pub fn session_seed(master_seed: u64, scenario_index: usize, lineup_index: usize, repetition: usize) -> u64 {
    mix_seed(&[master_seed, scenario_index as u64, lineup_index as u64, repetition as u64])
}

pub fn run_tournament(cfg: &TournamentConfig, registry: &StrategyRegistry) -> Result<Vec<SessionRecord>> {
    run_tournament_with_workers(cfg, registry, None)
}

/// Runs every session; `workers` caps the thread count (default: all cores).
/// Output order and content do not depend on the worker count.
pub fn run_tournament_with_workers(
    cfg: &TournamentConfig,
    registry: &StrategyRegistry,
    workers: Option<usize>,
) -> Result<Vec<SessionRecord>> {
    cfg.validate(registry)?;
    let loaded = cfg
        .scenarios
        .iter()
        .map(|s| match s {
            ScenarioSource::File { file } => Scenario::load(&cfg.resolve(file))
                .map(Some)
                .map_err(|e| NegotiationError::config(format!("scenario {}: {e}", file.display()))),
            ScenarioSource::Generate { .. } => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;

    let lineups = cfg.lineups();
    let deltas: Vec<Option<f64>> = match &cfg.discount_grid {
        Some(grid) => grid.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut specs = Vec::new();
    for scenario_index in 0..cfg.scenarios.len() {
        for &delta in &deltas {
            for &beta in &cfg.beta_grid {
                for lineup_index in 0..lineups.len() {
                    for repetition in 0..cfg.repetitions {
                        specs.push(SessionSpec { scenario_index, delta, beta, lineup_index, repetition });
                    }
                }
            }
        }
    }

    let run_one = |spec: &SessionSpec| -> Result<SessionRecord> {
        let (scenario, profile_ids, mut profiles) =
            scenario_profiles(cfg, &loaded, spec.scenario_index, spec.repetition)?;
        if let Some(d) = spec.delta {
            profiles = profiles.iter().map(|p| p.with_discount(d)).collect::<Result<_>>()?;
        }
        let lineup = &lineups[spec.lineup_index];
        let mut agents: Vec<Box<dyn Agent>> = lineup
            .iter()
            .map(|&i| {
                let mut block = registry.bind_beta(&cfg.roster[i].strategy, spec.beta)?;
                let is_herbt = block.get("type").and_then(Value::as_str) == Some("herbt");
                if cfg.record_models && is_herbt {
                    if let Value::Object(map) = &mut block {
                        map.insert("record_models".into(), Value::Bool(true));
                    }
                }
                registry.build(&block)
            })
            .collect::<Result<_>>()?;
        let seed = session_seed(cfg.master_seed, spec.scenario_index, spec.lineup_index, spec.repetition);
        let outcome = run_session(&mut agents, &profiles, cfg.round_limit, seed)?;
        let model_dumps = agents.iter().flat_map(|a| a.model_dumps().iter().cloned()).collect();
        Ok(SessionRecord::from_outcome(
            scenario,
            spec.scenario_index,
            spec.delta,
            spec.beta,
            spec.lineup_index,
            lineup.iter().map(|&i| cfg.roster[i].id.clone()).collect(),
            spec.repetition,
            profile_ids,
            profiles,
            seed,
            cfg.round_limit,
            outcome,
            model_dumps,
        ))
    };

    let run_all = || specs.par_iter().map(run_one).collect::<Vec<_>>();
    let results = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| NegotiationError::config(format!("workers: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    results.into_iter().collect()
}
