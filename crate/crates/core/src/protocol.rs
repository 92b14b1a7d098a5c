//! Stacked alternating offers: agents act in fixed cyclic order, each either
//! accepting the standing offer or replacing it with a counteroffer. A bid is
//! agreed once every party other than its proposer has accepted it in
//! succession. A round is one full cycle of `n` actions.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::domain::{discount, Bid, Domain, UtilityProfile};
use crate::error::{NegotiationError, Result};
use crate::opponent_model::ModelDump;
use crate::seed::mix_seed;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Offer(Bid),
    Accept,
}

impl Action {
    pub fn is_accept(&self) -> bool {
        matches!(self, Action::Accept)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub round: usize,
    pub agent: usize,
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Agreement {
    pub bid: Bid,
    pub proposer: usize,
    pub round: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentResult {
    pub raw_utility: f64,
    pub discounted_utility: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionOutcome {
    pub agreement: Option<Agreement>,
    pub per_agent: Vec<AgentResult>,
    pub trace: Vec<TraceEntry>,
    pub rounds_used: usize,
}

impl SessionOutcome {
    pub fn social_welfare(&self) -> f64 {
        self.per_agent.iter().map(|r| r.discounted_utility).sum::<f64>() / self.per_agent.len() as f64
    }

    pub fn undiscounted_social_welfare(&self) -> f64 {
        self.per_agent.iter().map(|r| r.raw_utility).sum::<f64>() / self.per_agent.len() as f64
    }
}

/// Protocol state machine shared by live sessions and replay.
#[derive(Clone, Debug)]
pub struct SessionState {
    party_count: usize,
    round_limit: usize,
    step: usize,
    standing: Option<(Bid, usize)>,
    accept_count: usize,
    trace: Vec<TraceEntry>,
    agreement: Option<Agreement>,
}

impl SessionState {
    pub fn new(party_count: usize, round_limit: usize) -> Self {
        SessionState {
            party_count,
            round_limit,
            step: 0,
            standing: None,
            accept_count: 0,
            trace: Vec::new(),
            agreement: None,
        }
    }

    pub fn round(&self) -> usize {
        self.step / self.party_count
    }

    pub fn turn(&self) -> usize {
        self.step % self.party_count
    }

    pub fn standing_offer(&self) -> Option<&Bid> {
        self.standing.as_ref().map(|(b, _)| b)
    }

    pub fn standing_proposer(&self) -> Option<usize> {
        self.standing.as_ref().map(|(_, p)| *p)
    }

    pub fn accept_count(&self) -> usize {
        self.accept_count
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn agreement(&self) -> Option<&Agreement> {
        self.agreement.as_ref()
    }

    pub fn deadline_reached(&self) -> bool {
        self.round() >= self.round_limit
    }

    pub fn is_finished(&self) -> bool {
        self.agreement.is_some() || self.deadline_reached()
    }

    /// Applies `agent`'s action. The agent must hold the turn.
    pub fn apply(&mut self, agent: usize, action: Action, domain: &Domain) -> Result<()> {
        if self.is_finished() {
            return Err(NegotiationError::ProtocolViolation { agent, reason: "session already finished".into() });
        }
        if agent != self.turn() {
            return Err(NegotiationError::ProtocolViolation {
                agent,
                reason: format!("acted out of turn (agent {} holds the turn)", self.turn()),
            });
        }
        let round = self.round();
        match &action {
            Action::Accept => {
                let Some((bid, proposer)) = &self.standing else {
                    return Err(NegotiationError::ProtocolViolation {
                        agent,
                        reason: "accepted with no standing offer".into(),
                    });
                };
                self.accept_count += 1;
                if self.accept_count == self.party_count - 1 {
                    self.agreement = Some(Agreement { bid: bid.clone(), proposer: *proposer, round });
                }
            }
            Action::Offer(bid) => {
                domain.validate_bid(bid).map_err(|e| NegotiationError::ProtocolViolation {
                    agent,
                    reason: format!("illegal bid {bid}: {e}"),
                })?;
                self.standing = Some((bid.clone(), agent));
                self.accept_count = 0;
            }
        }
        debug_assert!(self.accept_count < self.party_count);
        debug_assert!(self.standing.as_ref().is_none_or(|(_, p)| self.accept_count == 0 || *p != agent));
        self.trace.push(TraceEntry { round, agent, action });
        self.step += 1;
        Ok(())
    }

    /// Converts the final state into per-agent payoffs.
    pub fn outcome(self, profiles: &[UtilityProfile]) -> SessionOutcome {
        let round_limit = self.round_limit;
        let per_agent = profiles
            .iter()
            .map(|p| match &self.agreement {
                Some(a) => {
                    let raw = p.utility(&a.bid).expect("agreed bid was validated");
                    AgentResult {
                        raw_utility: raw,
                        discounted_utility: discount(raw, a.round, round_limit, p.discount_factor()),
                    }
                }
                None => AgentResult {
                    raw_utility: p.reservation(),
                    discounted_utility: discount(p.reservation(), round_limit, round_limit, p.discount_factor()),
                },
            })
            .collect();
        let rounds_used = match &self.agreement {
            Some(a) => a.round + 1,
            None if self.deadline_reached() => round_limit,
            None => self.trace.last().map_or(0, |e| e.round + 1),
        };
        SessionOutcome { agreement: self.agreement, per_agent, trace: self.trace, rounds_used }
    }
}

/// Everything an agent is told when a session starts.
#[derive(Clone, Debug)]
pub struct SessionSetup {
    pub seed: u64,
    pub index: usize,
    pub party_count: usize,
    pub round_limit: usize,
    pub profile: UtilityProfile,
}

/// What an agent may see when it holds the turn. Opponents' profiles are
/// never exposed.
#[derive(Clone, Copy, Debug)]
pub struct StateView<'a> {
    pub round: usize,
    pub round_limit: usize,
    pub party_count: usize,
    pub me: usize,
    pub standing_offer: Option<&'a Bid>,
    pub standing_proposer: Option<usize>,
    pub accept_count: usize,
    pub profile: &'a UtilityProfile,
    pub trace: &'a [TraceEntry],
}

/// A negotiation strategy plugged into the protocol engine.
pub trait Agent: Send {
    fn name(&self) -> &str;

    /// Called once before every session; agents carry nothing across sessions.
    fn reset(&mut self, setup: &SessionSetup);

    /// Notification of another party's action.
    fn observe(&mut self, _event: &TraceEntry) {}

    fn act(&mut self, view: &StateView<'_>) -> Result<Action>;

    /// Opponent-model snapshots taken during the last session, if any.
    fn model_dumps(&self) -> &[ModelDump] {
        &[]
    }
}

/// Runs one session to agreement or deadline.
pub fn run_session(
    agents: &mut [Box<dyn Agent>],
    profiles: &[UtilityProfile],
    round_limit: usize,
    seed: u64,
) -> Result<SessionOutcome> {
    let n = agents.len();
    if n < 2 || profiles.len() != n {
        return Err(NegotiationError::config(format!(
            "session needs n >= 2 agents with one profile each (got {n} agents, {} profiles)",
            profiles.len()
        )));
    }
    if round_limit == 0 {
        return Err(NegotiationError::config("round limit must be at least 1"));
    }
    let domain = profiles[0].domain().clone();
    if profiles.iter().any(|p| **p.domain() != *domain) {
        return Err(NegotiationError::config("all profiles must share one domain"));
    }
    for (i, (agent, profile)) in agents.iter_mut().zip(profiles).enumerate() {
        agent.reset(&SessionSetup {
            seed: mix_seed(&[seed, i as u64]),
            index: i,
            party_count: n,
            round_limit,
            profile: profile.clone(),
        });
    }

    let mut state = SessionState::new(n, round_limit);
    while !state.is_finished() {
        let me = state.turn();
        let view = StateView {
            round: state.round(),
            round_limit,
            party_count: n,
            me,
            standing_offer: state.standing_offer(),
            standing_proposer: state.standing_proposer(),
            accept_count: state.accept_count(),
            profile: &profiles[me],
            trace: state.trace(),
        };
        let action = agents[me].act(&view)?;
        state.apply(me, action, &domain)?;
        let event = state.trace().last().expect("action recorded").clone();
        for (i, agent) in agents.iter_mut().enumerate() {
            if i != me {
                agent.observe(&event);
            }
        }
    }
    Ok(state.outcome(profiles))
}

/// Recomputes a session outcome from its trace.
pub fn replay(trace: &[TraceEntry], profiles: &[UtilityProfile], round_limit: usize) -> Result<SessionOutcome> {
    if trace.is_empty() {
        return Err(NegotiationError::structural("cannot replay an empty trace"));
    }
    if profiles.len() < 2 {
        return Err(NegotiationError::structural("replay needs at least two profiles"));
    }
    let domain = profiles[0].domain().clone();
    let mut state = SessionState::new(profiles.len(), round_limit);
    for (i, entry) in trace.iter().enumerate() {
        if state.is_finished() {
            return Err(NegotiationError::structural(format!("trace continues after the session ended (entry {i})")));
        }
        if entry.round != state.round() || entry.agent != state.turn() {
            return Err(NegotiationError::structural(format!(
                "entry {i} claims round {} agent {}, expected round {} agent {}",
                entry.round,
                entry.agent,
                state.round(),
                state.turn()
            )));
        }
        state
            .apply(entry.agent, entry.action.clone(), &domain)
            .map_err(|e| NegotiationError::structural(format!("entry {i}: {e}")))?;
    }
    Ok(state.outcome(profiles))
}

/// First line of a trace log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub scenario_hash: String,
    pub round_limit: usize,
    pub seed: u64,
    pub party_count: usize,
    #[serde(default)]
    pub agents: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    round: usize,
    agent: usize,
    action: String,
    #[serde(default)]
    bid: Option<Bid>,
}

/// JSON-lines trace: header, then one action per line. Accept lines carry
/// the bid being accepted.
pub fn trace_to_jsonl(header: &TraceHeader, trace: &[TraceEntry]) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    let mut standing: Option<&Bid> = None;
    for e in trace {
        let line = match &e.action {
            Action::Offer(b) => {
                standing = Some(b);
                json!({ "round": e.round, "agent": e.agent, "action": "offer", "bid": b })
            }
            Action::Accept => json!({ "round": e.round, "agent": e.agent, "action": "accept", "bid": standing }),
        };
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<(TraceHeader, Vec<TraceEntry>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| NegotiationError::structural("trace log is empty"))?;
    let header: TraceHeader = serde_json::from_str(header_line)?;
    let mut trace = Vec::new();
    let mut standing: Option<Bid> = None;
    for (i, line) in lines.enumerate() {
        let raw: TraceLine = serde_json::from_str(line)?;
        let action = match raw.action.as_str() {
            "offer" => {
                let bid = raw
                    .bid
                    .ok_or_else(|| NegotiationError::structural(format!("offer on line {} has no bid", i + 2)))?;
                standing = Some(bid.clone());
                Action::Offer(bid)
            }
            "accept" => {
                if raw.bid.is_some() && raw.bid != standing {
                    return Err(NegotiationError::structural(format!(
                        "accept on line {} names a bid other than the standing offer",
                        i + 2
                    )));
                }
                Action::Accept
            }
            other => {
                return Err(NegotiationError::structural(format!("unknown action `{other}` on line {}", i + 2)));
            }
        };
        trace.push(TraceEntry { round: raw.round, agent: raw.agent, action });
    }
    Ok((header, trace))
}
