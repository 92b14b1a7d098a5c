//! HerbT+: fresh-per-turn logistic opponent models, β-weighted bid valuation
//! over the whole outcome space, and a discount-aware acceptance test.
//!
//! Each bid gets
//!
//! ```text
//! social     = (u_own + Σ_opp p_opp²) / (n_opp + 1)
//! individual = mean_opp p_opp          if u_own ≥ T(r), else 0
//! score      = β·social + (1 − β)·individual
//! ```
//!
//! where `p_opp` is the modeled acceptance probability and `T(r)` falls
//! linearly from 1 to the discounted reservation value. The highest-scoring
//! bid (uniform among near-ties) is the counteroffer; a received offer is
//! accepted when its score discounted at the current round is at least the
//! counteroffer's score discounted one round later.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{discount, Bid, Domain, SparseFeatures, UtilityProfile, DEFAULT_BID_SPACE_CAP};
use crate::error::{NegotiationError, Result};
use crate::opponent_model::{
    extract_samples, model_for_turn, LogisticModel, ModelDump, PreviousModel, TrainingConfig, TrainingMode,
};
use crate::protocol::{Action, Agent, SessionSetup, StateView};
use crate::seed::{mix_seed, rng_from_seed};

/// Scores within this distance of the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    #[default]
    Heuristic,
    #[serde(rename = "expected_sw")]
    ExpectedSw,
}

/// Which part of a score the acceptance test discounts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptanceDiscount {
    /// Discount the whole β-combined score.
    #[default]
    Combined,
    /// Discount only the agent's own utility inside the social term.
    OwnUtility,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HerbTConfig {
    pub beta: f64,
    pub training: TrainingConfig,
    pub scorer: Scorer,
    pub bid_space_cap: usize,
    pub acceptance_discount: AcceptanceDiscount,
    pub record_models: bool,
}

impl Default for HerbTConfig {
    fn default() -> Self {
        HerbTConfig {
            beta: 1.0,
            training: TrainingConfig::default(),
            scorer: Scorer::Heuristic,
            bid_space_cap: DEFAULT_BID_SPACE_CAP,
            acceptance_discount: AcceptanceDiscount::Combined,
            record_models: false,
        }
    }
}

impl HerbTConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(NegotiationError::config(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        self.training.validate()
    }
}

/// JSON form: `{"type":"herbt","beta":…,"scorer":…,"training_mode":…,…}`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct HerbTBlock {
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default)]
    scorer: Scorer,
    #[serde(default)]
    training_mode: TrainingMode,
    #[serde(default = "default_learning_rate")]
    learning_rate: f64,
    #[serde(default = "default_init_low")]
    init_low: f64,
    #[serde(default)]
    init_high: f64,
    #[serde(default = "default_cap")]
    bid_space_cap: usize,
    #[serde(default)]
    acceptance_discount: AcceptanceDiscount,
    #[serde(default)]
    record_models: bool,
}

fn default_beta() -> f64 {
    1.0
}
fn default_learning_rate() -> f64 {
    0.5
}
fn default_init_low() -> f64 {
    -1.0
}
fn default_cap() -> usize {
    DEFAULT_BID_SPACE_CAP
}

impl From<HerbTBlock> for HerbTConfig {
    fn from(b: HerbTBlock) -> Self {
        HerbTConfig {
            beta: b.beta,
            training: TrainingConfig {
                learning_rate: b.learning_rate,
                init_low: b.init_low,
                init_high: b.init_high,
                mode: b.training_mode,
            },
            scorer: b.scorer,
            bid_space_cap: b.bid_space_cap,
            acceptance_discount: b.acceptance_discount,
            record_models: b.record_models,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreBreakdown {
    pub bid: Bid,
    pub social: f64,
    pub individual: f64,
    pub combined: f64,
}

/// `T(r) = 1 − (r/R)·(1 − δ·reservation)`.
pub fn threshold(round: usize, round_limit: usize, reservation: f64, delta: f64) -> f64 {
    1.0 - (round as f64 / round_limit as f64) * (1.0 - delta * reservation)
}

/// Mean opponent acceptance probability when the own-utility gate is open.
pub fn individual_score(own_utility: f64, predictions: &[f64], threshold: f64) -> Result<f64> {
    if predictions.is_empty() {
        return Err(NegotiationError::structural("individual score needs at least one opponent"));
    }
    if own_utility >= threshold {
        Ok(predictions.iter().sum::<f64>() / predictions.len() as f64)
    } else {
        Ok(0.0)
    }
}

/// `(u_own + Σ p²) / (n_opp + 1)`.
pub fn social_score(own_utility: f64, predictions: &[f64]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(NegotiationError::structural("social score needs at least one opponent"));
    }
    let squares: f64 = predictions.iter().map(|p| p * p).sum();
    Ok((own_utility + squares) / (predictions.len() + 1) as f64)
}

pub fn score(beta: f64, social: f64, individual: f64) -> f64 {
    beta * social + (1.0 - beta) * individual
}

/// Expected (discounted) welfare of proposing a bid now and re-proposing it
/// every round until all opponents accept or the deadline passes.
///
/// With `p = Π p_opp` and `SW = u_own + Σ p_opp`, this evaluates
/// `Σ_{k=r}^{R−1} (1−p)^{k−r}·p·d_k·SW + (1−p)^{R−r}·d_R·Σ reservations`.
pub fn expected_sw_score(
    predictions: &[f64],
    own_utility: f64,
    round: usize,
    round_limit: usize,
    reservation_sum: f64,
    delta: f64,
) -> f64 {
    debug_assert!(round < round_limit);
    let p: f64 = predictions.iter().product();
    let welfare = own_utility + predictions.iter().sum::<f64>();
    let mut total = 0.0;
    let mut survive = 1.0;
    for k in round..round_limit {
        total += survive * p * discount(welfare, k, round_limit, delta);
        survive *= 1.0 - p;
    }
    total + survive * discount(reservation_sum, round_limit, round_limit, delta)
}

/// The outcome space with everything a turn needs precomputed.
#[derive(Clone, Debug)]
pub struct BidSpace {
    pub indices: Vec<Vec<usize>>,
    pub features: Vec<SparseFeatures>,
    pub own_utility: Vec<f64>,
}

impl BidSpace {
    pub fn new(profile: &UtilityProfile, cap: usize) -> Result<Self> {
        let domain = profile.domain();
        let indices = domain.enumerate_indices(cap)?;
        let features = indices.iter().map(|i| domain.sparse_encode(i)).collect();
        let own_utility = indices.iter().map(|i| profile.utility_of_indices(i)).collect();
        Ok(BidSpace { indices, features, own_utility })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn position(&self, domain: &Domain, bid: &Bid) -> Result<usize> {
        Ok(domain.rank_of_indices(&domain.indices_of(bid)?))
    }
}

/// Inputs to one turn's valuation.
#[derive(Clone, Copy, Debug)]
pub struct Valuation<'a> {
    pub beta: f64,
    pub scorer: Scorer,
    pub round: usize,
    pub round_limit: usize,
    pub reservation: f64,
    pub delta: f64,
    pub party_count: usize,
    pub models: &'a [LogisticModel],
}

impl Valuation<'_> {
    pub fn threshold(&self) -> f64 {
        threshold(self.round, self.round_limit, self.reservation, self.delta)
    }

    /// Score components of bid `i` in `space`.
    pub fn components(&self, space: &BidSpace, i: usize, predictions: &mut Vec<f64>) -> (f64, f64) {
        predictions.clear();
        predictions.extend(self.models.iter().map(|m| m.predict_sparse(&space.features[i])));
        let own = space.own_utility[i];
        let individual = individual_score(own, predictions, self.threshold()).expect("opponents present");
        let social = match self.scorer {
            Scorer::Heuristic => social_score(own, predictions).expect("opponents present"),
            Scorer::ExpectedSw => expected_sw_score(
                predictions,
                own,
                self.round,
                self.round_limit,
                self.reservation * self.party_count as f64,
                self.delta,
            ),
        };
        (social, individual)
    }

    /// Combined score of every bid, in space order.
    pub fn evaluate(&self, space: &BidSpace) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.models.len());
        (0..space.len())
            .map(|i| {
                let (s, ind) = self.components(space, i, &mut buf);
                score(self.beta, s, ind)
            })
            .collect()
    }

    pub fn breakdown(&self, space: &BidSpace, domain: &Domain, i: usize) -> ScoreBreakdown {
        let mut buf = Vec::new();
        let (social, individual) = self.components(space, i, &mut buf);
        ScoreBreakdown {
            bid: domain.bid_from_indices(&space.indices[i]),
            social,
            individual,
            combined: score(self.beta, social, individual),
        }
    }
}

/// Index of the best bid in `scores`, chosen uniformly among near-ties.
pub fn select_from_scores<R: Rng + ?Sized>(scores: &[f64], rng: &mut R) -> usize {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> =
        scores.iter().enumerate().filter(|(_, s)| **s >= best - TIE_TOLERANCE).map(|(i, _)| i).collect();
    ties[rng.gen_range(0..ties.len())]
}

pub fn select_bid<R: Rng + ?Sized>(
    space: &BidSpace,
    domain: &Domain,
    valuation: &Valuation<'_>,
    rng: &mut R,
) -> (usize, ScoreBreakdown) {
    let scores = valuation.evaluate(space);
    let i = select_from_scores(&scores, rng);
    (i, valuation.breakdown(space, domain, i))
}

/// Acceptance test: received score discounted at the current round versus
/// the best counteroffer's score discounted one round later.
pub fn should_accept(received: f64, best: f64, round: usize, round_limit: usize, delta: f64) -> bool {
    discount(received, round, round_limit, delta) >= discount(best, (round + 1).min(round_limit), round_limit, delta)
}

/// Variant of [`should_accept`] discounting only the own-utility part of the
/// social term. Takes `(own utility, combined score)` pairs.
pub fn should_accept_own_utility_discounted(
    received: (f64, f64),
    best: (f64, f64),
    beta: f64,
    party_count: usize,
    round: usize,
    round_limit: usize,
    delta: f64,
) -> bool {
    let adjust = |(own, combined): (f64, f64), r: usize| {
        let own_part = beta * own / party_count as f64;
        combined - own_part + discount(own_part, r, round_limit, delta)
    };
    adjust(received, round) >= adjust(best, (round + 1).min(round_limit))
}

pub fn accept_or_counter<R: Rng + ?Sized>(
    standing: &Bid,
    space: &BidSpace,
    domain: &Domain,
    valuation: &Valuation<'_>,
    acceptance: AcceptanceDiscount,
    rng: &mut R,
) -> Result<Action> {
    let scores = valuation.evaluate(space);
    let chosen = select_from_scores(&scores, rng);
    let received = space.position(domain, standing)?;
    let accept = match acceptance {
        AcceptanceDiscount::Combined => {
            should_accept(scores[received], scores[chosen], valuation.round, valuation.round_limit, valuation.delta)
        }
        AcceptanceDiscount::OwnUtility => should_accept_own_utility_discounted(
            (space.own_utility[received], scores[received]),
            (space.own_utility[chosen], scores[chosen]),
            valuation.beta,
            valuation.party_count,
            valuation.round,
            valuation.round_limit,
            valuation.delta,
        ),
    };
    if accept {
        Ok(Action::Accept)
    } else {
        Ok(Action::Offer(domain.bid_from_indices(&space.indices[chosen])))
    }
}

/// Seed for one freshly initialized opponent model.
pub fn turn_seed(session_seed: u64, me: usize, opponent: usize, round: usize) -> u64 {
    mix_seed(&[session_seed, 0x4d_4f44_454c, me as u64, opponent as u64, round as u64])
}

struct Session {
    setup: SessionSetup,
    space: BidSpace,
    rng: ChaCha8Rng,
    previous: Vec<Option<PreviousModel>>,
}

pub struct HerbT {
    cfg: HerbTConfig,
    session: Option<Session>,
    dumps: Vec<ModelDump>,
}

impl HerbT {
    pub fn new(cfg: HerbTConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(HerbT { cfg, session: None, dumps: Vec::new() })
    }

    pub fn config(&self) -> &HerbTConfig {
        &self.cfg
    }

    /// Retrains every opponent model for the current turn.
    fn refresh_models(&mut self, view: &StateView<'_>) -> Result<Vec<LogisticModel>> {
        let session = self.session.as_mut().expect("reset before act");
        let domain = view.profile.domain();
        let dim = domain.feature_len();
        let mut models = Vec::with_capacity(view.party_count - 1);
        for opp in (0..view.party_count).filter(|&o| o != view.me) {
            let history = extract_samples(view.trace, opp, domain)?;
            let seed = turn_seed(session.setup.seed, view.me, opp, view.round);
            let next = model_for_turn(&history, dim, &self.cfg.training, seed, session.previous[opp].as_ref())?;
            if self.cfg.record_models {
                self.dumps.push(ModelDump {
                    modeler: view.me,
                    opponent: opp,
                    round: view.round,
                    weights: next.model.weights.clone(),
                    bias: next.model.bias,
                });
            }
            models.push(next.model.clone());
            session.previous[opp] = Some(next);
        }
        Ok(models)
    }

    /// The bid HerbT+ would propose given the current view (used for openings
    /// by agents that borrow this bidding strategy).
    pub fn propose(&mut self, view: &StateView<'_>) -> Result<Bid> {
        let models = self.refresh_models(view)?;
        let valuation = self.valuation(view, &models);
        let session = self.session.as_mut().expect("reset before act");
        let (_, breakdown) = select_bid(&session.space, view.profile.domain(), &valuation, &mut session.rng);
        Ok(breakdown.bid)
    }

    fn valuation<'m>(&self, view: &StateView<'_>, models: &'m [LogisticModel]) -> Valuation<'m> {
        Valuation {
            beta: self.cfg.beta,
            scorer: self.cfg.scorer,
            round: view.round,
            round_limit: view.round_limit,
            reservation: view.profile.reservation(),
            delta: view.profile.discount_factor(),
            party_count: view.party_count,
            models,
        }
    }
}

impl Agent for HerbT {
    fn name(&self) -> &str {
        "herbt"
    }

    fn reset(&mut self, setup: &SessionSetup) {
        // an oversized space surfaces as a capacity error on the first act
        let space = BidSpace::new(&setup.profile, self.cfg.bid_space_cap).unwrap_or(BidSpace {
            indices: Vec::new(),
            features: Vec::new(),
            own_utility: Vec::new(),
        });
        self.dumps.clear();
        self.session = Some(Session {
            setup: setup.clone(),
            space,
            rng: rng_from_seed(mix_seed(&[setup.seed, 0x5449_4542])),
            previous: vec![None; setup.party_count],
        });
    }

    fn act(&mut self, view: &StateView<'_>) -> Result<Action> {
        if self.session.as_ref().is_none_or(|s| s.space.is_empty()) {
            BidSpace::new(view.profile, self.cfg.bid_space_cap)?;
        }
        let models = self.refresh_models(view)?;
        let valuation = self.valuation(view, &models);
        let acceptance = self.cfg.acceptance_discount;
        let session = self.session.as_mut().expect("reset before act");
        let domain = view.profile.domain();
        match view.standing_offer {
            None => {
                let (_, breakdown) = select_bid(&session.space, domain, &valuation, &mut session.rng);
                Ok(Action::Offer(breakdown.bid))
            }
            Some(standing) => {
                accept_or_counter(standing, &session.space, domain, &valuation, acceptance, &mut session.rng)
            }
        }
    }

    fn model_dumps(&self) -> &[ModelDump] {
        &self.dumps
    }
}
