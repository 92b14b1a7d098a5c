//! Aggregate measures over session records and their CSV renderings.
//!
//! Per-agent measures take the records of one evaluation cell (domain, δ, β)
//! and an agent id. An id occupying several seats of a line-up contributes
//! every seat to seat-level means (beta score, declines, accepted bids) but
//! counts the session once for session-level rates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::domain::DEFAULT_BID_SPACE_CAP;
use crate::error::{NegotiationError, Result};
use crate::opponent_model::TrainingMode;
use crate::stats::{dependent_t_test, mean, mean_absolute_error, pearson};
use crate::strategy::StrategyRegistry;
use crate::tournament::{run_tournament, SessionRecord, TournamentConfig};

pub fn beta_score(social: f64, individual: f64, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&beta));
    beta * social + (1.0 - beta) * individual
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn agent_records<'a>(records: &'a [SessionRecord], agent: &'a str) -> impl Iterator<Item = &'a SessionRecord> + 'a {
    records.iter().filter(move |r| r.includes(agent))
}

/// Declines over decline opportunities; opening offers are not opportunities.
pub fn decline_rate(records: &[SessionRecord], agent: &str) -> Option<f64> {
    let (mut declines, mut opportunities) = (0, 0);
    for r in agent_records(records, agent) {
        for seat in r.seats_of(agent) {
            declines += r.counts[seat].declines;
            opportunities += r.counts[seat].opportunities;
        }
    }
    ratio(declines, opportunities)
}

/// Variant counting every action, opening offers included.
pub fn decline_rate_all_actions(records: &[SessionRecord], agent: &str) -> Option<f64> {
    let (mut declines, mut actions) = (0, 0);
    for r in agent_records(records, agent) {
        for seat in r.seats_of(agent) {
            let c = r.counts[seat];
            declines += c.offers;
            actions += c.offers + c.accepts;
        }
    }
    ratio(declines, actions)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgreementRound {
    pub mean: Option<f64>,
    pub agreements: usize,
    pub no_agreement: usize,
}

pub fn average_agreement_round(records: &[SessionRecord], agent: &str) -> AgreementRound {
    let mut rounds = Vec::new();
    let mut no_agreement = 0;
    for r in agent_records(records, agent) {
        match r.agreement_round() {
            Some(round) => rounds.push(round as f64),
            None => no_agreement += 1,
        }
    }
    AgreementRound { mean: mean(&rounds), agreements: rounds.len(), no_agreement }
}

/// Mean undiscounted (social welfare, own utility) over every bid the agent accepted.
pub fn acceptance_welfare(records: &[SessionRecord], agent: &str) -> Option<(f64, f64)> {
    let (mut sw, mut iu, mut k) = (0.0, 0.0, 0usize);
    for r in agent_records(records, agent) {
        for seat in r.seats_of(agent) {
            for a in &r.accepted[seat] {
                sw += a.social_welfare;
                iu += a.individual_utility;
                k += 1;
            }
        }
    }
    (k > 0).then(|| (sw / k as f64, iu / k as f64))
}

/// Sessions whose agreement the agent proposed, over sessions it took part in.
pub fn negotiation_agreement_rate(records: &[SessionRecord], agent: &str) -> Option<f64> {
    let (mut proposed, mut sessions) = (0, 0);
    for r in agent_records(records, agent) {
        sessions += 1;
        if r.proposer_id() == Some(agent) {
            proposed += 1;
        }
    }
    ratio(proposed, sessions)
}

/// Discounted beta score of the proposing seat, averaged over sessions whose
/// agreement the agent proposed.
pub fn chosen_offer_beta_score(records: &[SessionRecord], agent: &str, beta: f64) -> Option<f64> {
    let scores: Vec<f64> = agent_records(records, agent)
        .filter_map(|r| {
            let a = r.outcome.agreement.as_ref()?;
            (r.lineup[a.proposer] == agent).then(|| {
                beta_score(r.outcome.social_welfare(), r.outcome.per_agent[a.proposer].discounted_utility, beta)
            })
        })
        .collect();
    mean(&scores)
}

/// Discounted beta score of every seat the agent held.
pub fn seat_beta_scores(records: &[SessionRecord], agent: &str, beta: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for r in agent_records(records, agent) {
        let sw = r.outcome.social_welfare();
        for seat in r.seats_of(agent) {
            out.push(beta_score(sw, r.outcome.per_agent[seat].discounted_utility, beta));
        }
    }
    out
}

pub fn mean_social_welfare(records: &[SessionRecord], agent: &str, discounted: bool) -> Option<f64> {
    let v: Vec<f64> = agent_records(records, agent)
        .map(|r| if discounted { r.outcome.social_welfare() } else { r.outcome.undiscounted_social_welfare() })
        .collect();
    mean(&v)
}

pub fn mean_individual_utility(records: &[SessionRecord], agent: &str) -> Option<f64> {
    let v: Vec<f64> = agent_records(records, agent)
        .flat_map(|r| r.seats_of(agent).map(|s| r.outcome.per_agent[s].discounted_utility).collect::<Vec<_>>())
        .collect();
    mean(&v)
}

/// Evaluation cell key: domain, δ and β.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub domain: String,
    pub delta: f64,
    pub beta: f64,
}

/// δ the session was played under: the override, else the first profile's.
pub fn session_delta(r: &SessionRecord) -> f64 {
    r.delta.unwrap_or_else(|| r.profiles[0].discount_factor())
}

// Nonnegative floats order the same as their bit patterns.
type CellKey = (String, u64, u64);

fn cell_key(r: &SessionRecord) -> CellKey {
    (r.scenario.clone(), session_delta(r).to_bits(), r.beta.to_bits())
}

/// Records grouped by (domain, δ, β), in ascending key order.
pub fn group_by_cell(records: &[SessionRecord]) -> Vec<(Cell, Vec<SessionRecord>)> {
    let mut map: BTreeMap<CellKey, Vec<SessionRecord>> = BTreeMap::new();
    for r in records {
        map.entry(cell_key(r)).or_default().push(r.clone());
    }
    map.into_iter()
        .map(|((domain, d, b), rs)| (Cell { domain, delta: f64::from_bits(d), beta: f64::from_bits(b) }, rs))
        .collect()
}

/// Agent ids in order of first appearance.
pub fn agent_ids(records: &[SessionRecord]) -> Vec<String> {
    let mut ids: Vec<String> = Vec::new();
    for r in records {
        for id in &r.lineup {
            if !ids.contains(id) {
                ids.push(id.clone());
            }
        }
    }
    ids
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentCellMetrics {
    pub agent: String,
    pub cell: Cell,
    pub sessions: usize,
    pub beta_score: Option<f64>,
    pub social_welfare: Option<f64>,
    pub undiscounted_social_welfare: Option<f64>,
    pub individual_utility: Option<f64>,
    pub decline_rate: Option<f64>,
    pub avg_agreement_round: Option<f64>,
    pub no_agreement: usize,
    pub acceptance_social_welfare: Option<f64>,
    pub acceptance_individual_utility: Option<f64>,
    pub negotiation_agreement_rate: Option<f64>,
    pub chosen_offer_beta_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TTestRow {
    pub agent_a: String,
    pub agent_b: String,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<AgentCellMetrics>,
    pub ttests: Vec<TTestRow>,
}

pub fn agent_cell_metrics(cell: &Cell, records: &[SessionRecord], agent: &str) -> AgentCellMetrics {
    let sessions = agent_records(records, agent).count();
    let rounds = average_agreement_round(records, agent);
    let acc = acceptance_welfare(records, agent);
    AgentCellMetrics {
        agent: agent.to_string(),
        cell: cell.clone(),
        sessions,
        beta_score: mean(&seat_beta_scores(records, agent, cell.beta)),
        social_welfare: mean_social_welfare(records, agent, true),
        undiscounted_social_welfare: mean_social_welfare(records, agent, false),
        individual_utility: mean_individual_utility(records, agent),
        decline_rate: decline_rate(records, agent),
        avg_agreement_round: rounds.mean,
        no_agreement: rounds.no_agreement,
        acceptance_social_welfare: acc.map(|a| a.0),
        acceptance_individual_utility: acc.map(|a| a.1),
        negotiation_agreement_rate: negotiation_agreement_rate(records, agent),
        chosen_offer_beta_score: chosen_offer_beta_score(records, agent, cell.beta),
    }
}

/// Pairs each agent's mean beta score per (domain, δ, β, repetition) and
/// runs a dependent t-test for every agent pair.
pub fn beta_score_ttests(records: &[SessionRecord]) -> Vec<TTestRow> {
    let ids = agent_ids(records);
    type Key = (String, u64, u64, usize);
    let mut per_agent: Vec<BTreeMap<Key, (f64, usize)>> = vec![BTreeMap::new(); ids.len()];
    for r in records {
        let key = (r.scenario.clone(), session_delta(r).to_bits(), r.beta.to_bits(), r.repetition);
        let sw = r.outcome.social_welfare();
        for (seat, id) in r.lineup.iter().enumerate() {
            let i = ids.iter().position(|x| x == id).expect("id collected above");
            let e = per_agent[i].entry(key.clone()).or_insert((0.0, 0));
            e.0 += beta_score(sw, r.outcome.per_agent[seat].discounted_utility, r.beta);
            e.1 += 1;
        }
    }
    let mut rows = Vec::new();
    for a in 0..ids.len() {
        for b in a + 1..ids.len() {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (key, (sa, ka)) in &per_agent[a] {
                if let Some((sb, kb)) = per_agent[b].get(key) {
                    x.push(sa / *ka as f64);
                    y.push(sb / *kb as f64);
                }
            }
            let res = dependent_t_test(&x, &y).ok();
            rows.push(TTestRow {
                agent_a: ids[a].clone(),
                agent_b: ids[b].clone(),
                t: res.map(|r| r.t),
                p: res.map(|r| r.p),
                n: x.len(),
            });
        }
    }
    rows
}

pub fn metrics_report(records: &[SessionRecord]) -> MetricsReport {
    let ids = agent_ids(records);
    let mut rows = Vec::new();
    for (cell, rs) in group_by_cell(records) {
        for id in &ids {
            if rs.iter().any(|r| r.includes(id)) {
                rows.push(agent_cell_metrics(&cell, &rs, id));
            }
        }
    }
    MetricsReport { rows, ttests: beta_score_ttests(records) }
}

/// Prediction quality of one model snapshot against the true opponent profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DumpQuality {
    pub round: usize,
    /// Round as a fraction of the rounds the session lasted.
    pub progress: f64,
    pub pearson: Option<f64>,
    pub mae: f64,
}

pub fn dump_qualities(records: &[SessionRecord]) -> Result<Vec<DumpQuality>> {
    let mut out = Vec::new();
    for r in records {
        if r.model_dumps.is_empty() {
            continue;
        }
        let domain = r.profiles[0].domain();
        let space = domain.enumerate_indices(DEFAULT_BID_SPACE_CAP)?;
        let features: Vec<_> = space.iter().map(|ix| domain.sparse_encode(ix)).collect();
        for d in &r.model_dumps {
            let truth_profile = r.profiles.get(d.opponent).ok_or_else(|| {
                NegotiationError::structural(format!("model dump names opponent {} outside the line-up", d.opponent))
            })?;
            if d.weights.len() != domain.feature_len() {
                return Err(NegotiationError::structural("model dump dimension differs from the domain encoding"));
            }
            let model = d.model();
            let preds: Vec<f64> = features.iter().map(|x| model.predict_sparse(x)).collect();
            let truth: Vec<f64> = space.iter().map(|ix| truth_profile.utility_of_indices(ix)).collect();
            out.push(DumpQuality {
                round: d.round,
                progress: d.round as f64 / r.outcome.rounds_used.max(1) as f64,
                pearson: pearson(&preds, &truth),
                mae: mean_absolute_error(&preds, &truth),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundQuality {
    pub round: usize,
    /// Mean over snapshots with a defined correlation.
    pub pearson: Option<f64>,
    pub mae: f64,
    pub snapshots: usize,
}

fn summarize(qs: &[&DumpQuality]) -> (Option<f64>, f64) {
    let ps: Vec<f64> = qs.iter().filter_map(|q| q.pearson).collect();
    let maes: Vec<f64> = qs.iter().map(|q| q.mae).collect();
    (mean(&ps), mean(&maes).unwrap_or(f64::NAN))
}

/// Pearson and MAE per round, averaged over (session, modeler, opponent) snapshots.
pub fn model_quality_curves(records: &[SessionRecord]) -> Result<Vec<RoundQuality>> {
    let qs = dump_qualities(records)?;
    let mut by_round: BTreeMap<usize, Vec<&DumpQuality>> = BTreeMap::new();
    for q in &qs {
        by_round.entry(q.round).or_default().push(q);
    }
    Ok(by_round
        .into_iter()
        .map(|(round, v)| {
            let (pearson, mae) = summarize(&v);
            RoundQuality { round, pearson, mae, snapshots: v.len() }
        })
        .collect())
}

/// Same as the round curve but binned by session progress into `bins` equal slices.
pub fn model_quality_by_progress(records: &[SessionRecord], bins: usize) -> Result<Vec<RoundQuality>> {
    let qs = dump_qualities(records)?;
    let mut grouped: Vec<Vec<&DumpQuality>> = vec![Vec::new(); bins];
    for q in &qs {
        let b = ((q.progress * bins as f64) as usize).min(bins - 1);
        grouped[b].push(q);
    }
    Ok(grouped
        .into_iter()
        .enumerate()
        .map(|(bin, v)| {
            let (pearson, mae) = summarize(&v);
            RoundQuality { round: bin, pearson, mae, snapshots: v.len() }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub mode: TrainingMode,
    pub avg_agreement_round: Option<f64>,
    pub social_welfare: Option<f64>,
    pub sessions: usize,
}

#[derive(Clone, Debug)]
pub struct Ablation {
    pub rows: [AblationRow; 2],
    pub records: [Vec<SessionRecord>; 2],
}

impl Ablation {
    /// Agreement rounds of sessions that agreed in both arms, paired by position.
    pub fn paired_agreement_rounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (a, b) in self.records[0].iter().zip(&self.records[1]) {
            if let (Some(ra), Some(rb)) = (a.agreement_round(), b.agreement_round()) {
                x.push(ra as f64);
                y.push(rb as f64);
            }
        }
        (x, y)
    }
}

fn with_training_mode(cfg: &TournamentConfig, mode: TrainingMode) -> TournamentConfig {
    let mut out = cfg.clone();
    let mode_value = serde_json::to_value(mode).expect("enum serializes");
    for entry in &mut out.roster {
        if entry.strategy.get("type").and_then(|t| t.as_str()) == Some("herbt") {
            if let Some(map) = entry.strategy.as_object_mut() {
                map.insert("training_mode".into(), mode_value.clone());
            }
        }
    }
    out
}

/// Runs the same tournament under two training modes with matched seeds and
/// reports `agent`'s average agreement round and social welfare per arm.
pub fn ablation_random_init(
    cfg: &TournamentConfig,
    registry: &StrategyRegistry,
    agent: &str,
    arms: [TrainingMode; 2],
) -> Result<Ablation> {
    let run = |mode| -> Result<(AblationRow, Vec<SessionRecord>)> {
        let records = run_tournament(&with_training_mode(cfg, mode), registry)?;
        let row = AblationRow {
            mode,
            avg_agreement_round: average_agreement_round(&records, agent).mean,
            social_welfare: mean_social_welfare(&records, agent, true),
            sessions: agent_records(&records, agent).count(),
        };
        Ok((row, records))
    };
    let (ra, a) = run(arms[0])?;
    let (rb, b) = run(arms[1])?;
    Ok(Ablation { rows: [ra, rb], records: [a, b] })
}

/// `%g`-style rendering with 6 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const DECLINE_RATE_NOTE: &str =
    "# decline_rate = declines / decline opportunities; an opportunity is a turn with a standing offer, so opening offers are excluded";

pub fn beta_score_csv(report: &MetricsReport) -> String {
    let mut s = String::from("agent,domain,beta,score\n");
    for r in &report.rows {
        let _ =
            writeln!(s, "{},{},{},{}", field(&r.agent), field(&r.cell.domain), fmt_sig(r.cell.beta), opt(r.beta_score));
    }
    s
}

pub fn discount_sweep_csv(report: &MetricsReport) -> String {
    let mut s = format!("{DECLINE_RATE_NOTE}\nagent,domain,delta,beta,score,decline_rate,avg_agreement_round\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            field(&r.agent),
            field(&r.cell.domain),
            fmt_sig(r.cell.delta),
            fmt_sig(r.cell.beta),
            opt(r.beta_score),
            opt(r.decline_rate),
            opt(r.avg_agreement_round)
        );
    }
    s
}

pub fn acceptance_csv(report: &MetricsReport) -> String {
    let mut s = String::from(
        "agent,domain,delta,beta,acceptance_social_welfare,acceptance_individual_utility,social_welfare,undiscounted_social_welfare,individual_utility\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            field(&r.agent),
            field(&r.cell.domain),
            fmt_sig(r.cell.delta),
            fmt_sig(r.cell.beta),
            opt(r.acceptance_social_welfare),
            opt(r.acceptance_individual_utility),
            opt(r.social_welfare),
            opt(r.undiscounted_social_welfare),
            opt(r.individual_utility)
        );
    }
    s
}

pub fn agreement_rate_csv(report: &MetricsReport) -> String {
    let mut s = String::from(
        "agent,domain,delta,beta,sessions,no_agreement,negotiation_agreement_rate,chosen_offer_beta_score\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            field(&r.agent),
            field(&r.cell.domain),
            fmt_sig(r.cell.delta),
            fmt_sig(r.cell.beta),
            r.sessions,
            r.no_agreement,
            opt(r.negotiation_agreement_rate),
            opt(r.chosen_offer_beta_score)
        );
    }
    s
}

pub fn ttest_csv(rows: &[TTestRow]) -> String {
    let mut s = String::from("agent_a,agent_b,t,p,n\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", field(&r.agent_a), field(&r.agent_b), opt(r.t), opt(r.p), r.n);
    }
    s
}

pub fn model_quality_csv(rows: &[RoundQuality]) -> String {
    let mut s = String::from("round,pearson,mae\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{}", r.round, opt(r.pearson), fmt_sig(r.mae));
    }
    s
}

pub fn sessions_csv(records: &[SessionRecord]) -> String {
    let mut s = String::from(
        "domain,delta,beta,lineup,profiles,repetition,seed,agreement_round,proposer,rounds_used,social_welfare,undiscounted_social_welfare\n",
    );
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            field(&r.scenario),
            fmt_sig(session_delta(r)),
            fmt_sig(r.beta),
            field(&r.lineup.join(" ")),
            field(&r.profile_ids.join(" ")),
            r.repetition,
            r.seed,
            r.agreement_round().map(|x| x.to_string()).unwrap_or_default(),
            r.proposer_id().unwrap_or_default(),
            r.outcome.rounds_used,
            fmt_sig(r.outcome.social_welfare()),
            fmt_sig(r.outcome.undiscounted_social_welfare())
        );
    }
    s
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("mode,avg_agreement_round,social_welfare\n");
    for r in rows {
        let mode = match r.mode {
            TrainingMode::FreshEachTurn => "fresh",
            TrainingMode::Continuous => "continuous",
        };
        let _ = writeln!(s, "{mode},{},{}", opt(r.avg_agreement_round), opt(r.social_welfare));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tournament::{AcceptedBid, ActionCounts};

    #[test]
    fn beta_score_examples() {
        assert_eq!(beta_score(0.4, 0.8, 1.0), 0.4);
        assert_eq!(beta_score(0.4, 0.8, 0.0), 0.8);
        assert!((beta_score(0.4, 0.8, 0.25) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn sig_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.25), "0.25");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig(15.0), "15");
        assert_eq!(fmt_sig(123456.7), "123457");
        assert_eq!(fmt_sig(999999.7), "1e+06");
        assert_eq!(fmt_sig(0.0000123456789), "1.23457e-05");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(0.0305), "0.0305");
    }

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(field("a,b"), "\"a,b\"");
        assert_eq!(field("plain"), "plain");
    }

    // Synthetic records exercising only the fields the measures read.
    fn fake(
        lineup: &[&str],
        agreement: Option<(usize, usize)>,
        counts: Vec<ActionCounts>,
        accepted: Vec<Vec<AcceptedBid>>,
    ) -> SessionRecord {
        use crate::domain::{Domain, Issue, IssueUtility, UtilityProfile};
        use crate::protocol::{AgentResult, Agreement, SessionOutcome};
        use std::sync::Arc;
        let domain = Arc::new(Domain::new("d", vec![Issue::discrete("i", ["a", "b"]).unwrap()]).unwrap());
        let p = UtilityProfile::new(domain.clone(), vec![1.0], vec![IssueUtility::Discrete(vec![0.0, 1.0])], 0.0, 1.0)
            .unwrap();
        let n = lineup.len();
        SessionRecord {
            scenario: "d".into(),
            scenario_index: 0,
            delta: None,
            beta: 1.0,
            lineup_index: 0,
            lineup: lineup.iter().map(|s| s.to_string()).collect(),
            repetition: 0,
            profile_ids: vec![String::new(); n],
            profiles: vec![p; n],
            seed: 0,
            round_limit: 30,
            outcome: SessionOutcome {
                agreement: agreement.map(|(proposer, round)| Agreement {
                    bid: domain.bid_from_indices(&[0]),
                    proposer,
                    round,
                }),
                per_agent: vec![AgentResult { raw_utility: 0.5, discounted_utility: 0.5 }; n],
                trace: Vec::new(),
                rounds_used: 1,
            },
            counts,
            accepted,
            model_dumps: Vec::new(),
        }
    }

    fn c(offers: usize, accepts: usize, opportunities: usize, declines: usize) -> ActionCounts {
        ActionCounts { offers, accepts, opportunities, declines }
    }

    #[test]
    fn decline_rate_examples() {
        let rs = vec![
            fake(&["a", "b"], None, vec![c(2, 4, 7, 3), c(0, 0, 0, 0)], vec![vec![], vec![]]),
            fake(&["a", "b"], None, vec![c(0, 5, 5, 0), c(3, 0, 3, 3)], vec![vec![], vec![]]),
        ];
        assert_eq!(decline_rate(&rs, "a"), Some(0.25));
        assert_eq!(decline_rate(&rs, "b"), Some(1.0));
        assert_eq!(decline_rate(&rs, "zzz"), None);
        let none = vec![fake(&["a"], None, vec![c(1, 0, 0, 0)], vec![vec![]])];
        assert_eq!(decline_rate(&none, "a"), None);
    }

    #[test]
    fn agreement_round_and_rate_examples() {
        let z = || vec![c(0, 0, 0, 0); 2];
        let e = || vec![vec![]; 2];
        let rs = vec![
            fake(&["a", "b"], Some((0, 10)), z(), e()),
            fake(&["a", "b"], Some((1, 20)), z(), e()),
            fake(&["a", "b"], None, z(), e()),
            fake(&["b", "b"], Some((0, 4)), z(), e()),
        ];
        let ar = average_agreement_round(&rs, "a");
        assert_eq!(ar.mean, Some(15.0));
        assert_eq!(ar.no_agreement, 1);
        assert_eq!(negotiation_agreement_rate(&rs, "a"), Some(1.0 / 3.0));
        assert_eq!(negotiation_agreement_rate(&rs, "b"), Some(0.5));
        assert_eq!(chosen_offer_beta_score(&rs, "a", 1.0), Some(0.5));
        assert_eq!(chosen_offer_beta_score(&rs[2..3], "a", 1.0), None);
        let none = vec![fake(&["a", "b"], None, z(), e())];
        assert_eq!(average_agreement_round(&none, "a").mean, None);
    }

    #[test]
    fn acceptance_welfare_examples() {
        let acc = |sw, iu| AcceptedBid { social_welfare: sw, individual_utility: iu };
        let rs = vec![fake(&["a"], None, vec![c(0, 2, 2, 0)], vec![vec![acc(0.2, 0.4), acc(0.6, 0.8)]])];
        let (sw, iu) = acceptance_welfare(&rs, "a").unwrap();
        assert!((sw - 0.4).abs() < 1e-15 && (iu - 0.6).abs() < 1e-15);
        let rs = vec![fake(&["a"], None, vec![c(0, 1, 1, 0)], vec![vec![acc(0.6, 0.9)]])];
        assert_eq!(acceptance_welfare(&rs, "a"), Some((0.6, 0.9)));
        let rs = vec![fake(&["a"], None, vec![c(1, 0, 0, 0)], vec![vec![]])];
        assert_eq!(acceptance_welfare(&rs, "a"), None);
    }
}
