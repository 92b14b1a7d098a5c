//! Comparison strategies: an always-accept probe, a value-frequency modeler,
//! a time-dependent conceder and a random agent.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::UtilityProfile;
use crate::error::{NegotiationError, Result};
use crate::protocol::{Action, Agent, SessionSetup, StateView, TraceEntry};
use crate::seed::{mix_seed, rng_from_seed};
use crate::strategy::herbt::{HerbT, HerbTConfig};

/// Draws allowed before falling back to the agent's best bid.
pub const REJECTION_SAMPLING_CAP: usize = 1_000;

/// Uniform random bid with own utility at least `target`, as value indices.
/// Falls back to the per-issue best bid once the draw budget is spent.
pub fn random_bid_above<R: Rng + ?Sized>(profile: &UtilityProfile, target: f64, rng: &mut R) -> Vec<usize> {
    let domain = profile.domain();
    for _ in 0..REJECTION_SAMPLING_CAP {
        let candidate = domain.random_indices(rng);
        if profile.utility_of_indices(&candidate) >= target {
            return candidate;
        }
    }
    profile.best_indices()
}

fn session_rng(setup: &SessionSetup, salt: u64) -> ChaCha8Rng {
    rng_from_seed(mix_seed(&[setup.seed, salt]))
}

fn standing_utility(view: &StateView<'_>) -> Option<f64> {
    view.standing_offer.map(|b| view.profile.utility(b).expect("engine validates offers"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Opening {
    #[default]
    MaxOwnUtility,
    #[serde(rename = "herbt_bidding")]
    HerbTBidding,
}

/// Accepts every standing offer; only ever proposes when it opens.
pub struct AlwaysAccept {
    opening: Opening,
    bidder: Option<HerbT>,
}

impl AlwaysAccept {
    pub fn new(opening: Opening, herbt: HerbTConfig) -> Result<Self> {
        let bidder = match opening {
            Opening::MaxOwnUtility => None,
            Opening::HerbTBidding => Some(HerbT::new(herbt)?),
        };
        Ok(AlwaysAccept { opening, bidder })
    }

    pub fn opening(&self) -> Opening {
        self.opening
    }
}

impl Agent for AlwaysAccept {
    fn name(&self) -> &str {
        "always_accept"
    }

    fn reset(&mut self, setup: &SessionSetup) {
        if let Some(b) = &mut self.bidder {
            b.reset(setup);
        }
    }

    fn act(&mut self, view: &StateView<'_>) -> Result<Action> {
        if view.standing_offer.is_some() {
            return Ok(Action::Accept);
        }
        match &mut self.bidder {
            Some(herbt) => Ok(Action::Offer(herbt.propose(view)?)),
            None => Ok(Action::Offer(view.profile.best_bid())),
        }
    }
}

/// Counts how often each value of each issue appears in opponents' offers
/// and nudges its random above-threshold bids toward the popular values.
pub struct Frequency {
    counts: Vec<Vec<u32>>,
    rng: ChaCha8Rng,
    profile: Option<UtilityProfile>,
}

impl Default for Frequency {
    fn default() -> Self {
        Frequency { counts: Vec::new(), rng: rng_from_seed(0), profile: None }
    }
}

impl Frequency {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn threshold(round: usize, round_limit: usize, reservation: f64, delta: f64) -> f64 {
        (reservation * delta).max(1.0 - round as f64 / round_limit as f64)
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    /// Most frequently offered value of `issue`, if any offer was seen.
    pub fn most_frequent(&self, issue: usize) -> Option<usize> {
        let counts = &self.counts[issue];
        let (best, &n) = counts.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
        (n > 0).then_some(best)
    }

    /// Random bid above `target`, then per-issue substitution of the most
    /// frequent value whenever that keeps the utility above `target`.
    pub fn generate(&mut self, profile: &UtilityProfile, target: f64) -> Vec<usize> {
        let mut bid = random_bid_above(profile, target, &mut self.rng);
        for issue in 0..bid.len() {
            if let Some(popular) = self.most_frequent(issue) {
                if popular != bid[issue] {
                    let previous = std::mem::replace(&mut bid[issue], popular);
                    if profile.utility_of_indices(&bid) < target {
                        bid[issue] = previous;
                    }
                }
            }
        }
        bid
    }
}

impl Agent for Frequency {
    fn name(&self) -> &str {
        "frequency"
    }

    fn reset(&mut self, setup: &SessionSetup) {
        self.counts = setup.profile.domain().issues().iter().map(|i| vec![0; i.size()]).collect();
        self.rng = session_rng(setup, 0x4652_4551);
        self.profile = Some(setup.profile.clone());
    }

    fn observe(&mut self, event: &TraceEntry) {
        if let (Action::Offer(bid), Some(profile)) = (&event.action, &self.profile) {
            if let Ok(indices) = profile.domain().indices_of(bid) {
                for (issue, i) in indices.into_iter().enumerate() {
                    self.counts[issue][i] += 1;
                }
            }
        }
    }

    fn act(&mut self, view: &StateView<'_>) -> Result<Action> {
        let profile = view.profile;
        let target = Self::threshold(view.round, view.round_limit, profile.reservation(), profile.discount_factor());
        if standing_utility(view).is_some_and(|u| u >= target) {
            return Ok(Action::Accept);
        }
        let bid = self.generate(profile, target);
        Ok(Action::Offer(profile.domain().bid_from_indices(&bid)))
    }
}

/// Classic time-dependent concession with exponent `e` (`e < 1` boulware,
/// `e > 1` conceder).
pub struct TimeDependent {
    e: f64,
    rng: ChaCha8Rng,
}

impl TimeDependent {
    pub fn new(e: f64) -> Result<Self> {
        if !(e > 0.0 && e.is_finite()) {
            return Err(NegotiationError::config(format!("time_dependent exponent e must be > 0, got {e}")));
        }
        Ok(TimeDependent { e, rng: rng_from_seed(0) })
    }

    /// `reservation·δ + (1 − reservation·δ)·(1 − (r/R)^(1/e))`.
    pub fn target(&self, round: usize, round_limit: usize, reservation: f64, delta: f64) -> f64 {
        let floor = reservation * delta;
        let t = round as f64 / round_limit as f64;
        floor + (1.0 - floor) * (1.0 - t.powf(1.0 / self.e))
    }
}

impl Agent for TimeDependent {
    fn name(&self) -> &str {
        "time_dependent"
    }

    fn reset(&mut self, setup: &SessionSetup) {
        self.rng = session_rng(setup, 0x5444_4550);
    }

    fn act(&mut self, view: &StateView<'_>) -> Result<Action> {
        let profile = view.profile;
        let target = self.target(view.round, view.round_limit, profile.reservation(), profile.discount_factor());
        if standing_utility(view).is_some_and(|u| u >= target) {
            return Ok(Action::Accept);
        }
        let bid = random_bid_above(profile, target, &mut self.rng);
        Ok(Action::Offer(profile.domain().bid_from_indices(&bid)))
    }
}

/// Accepts on a coin flip when the offer clears the discounted reservation
/// value; otherwise proposes a uniformly random bid.
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl Default for RandomAgent {
    fn default() -> Self {
        RandomAgent { rng: rng_from_seed(0) }
    }
}

impl RandomAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, setup: &SessionSetup) {
        self.rng = session_rng(setup, 0x5241_4e44);
    }

    fn act(&mut self, view: &StateView<'_>) -> Result<Action> {
        let profile = view.profile;
        let floor = profile.reservation() * profile.discount_factor();
        if let Some(u) = standing_utility(view) {
            let heads = self.rng.gen_bool(0.5);
            if u >= floor && heads {
                return Ok(Action::Accept);
            }
        }
        let bid = profile.domain().random_indices(&mut self.rng);
        Ok(Action::Offer(profile.domain().bid_from_indices(&bid)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Bid, Domain, GeneratorSpec, Issue, IssueUtility, Scenario};
    use std::sync::Arc;

    fn scenario(reservation: f64) -> Scenario {
        GeneratorSpec {
            name: "b".into(),
            issues: 3,
            values_per_issue: 4,
            integer_issues: 1,
            parties: 3,
            reservation,
            discount: 0.8,
        }
        .generate(21)
        .unwrap()
    }

    fn setup(s: &Scenario, i: usize, seed: u64) -> SessionSetup {
        SessionSetup { seed, index: i, party_count: 3, round_limit: 50, profile: s.profiles[i].clone() }
    }

    fn view<'a>(s: &'a Scenario, i: usize, round: usize, standing: Option<&'a Bid>) -> StateView<'a> {
        StateView {
            round,
            round_limit: 50,
            party_count: 3,
            me: i,
            standing_offer: standing,
            standing_proposer: standing.map(|_| (i + 2) % 3),
            accept_count: 0,
            profile: &s.profiles[i],
            trace: &[],
        }
    }

    #[test]
    fn always_accept_accepts_and_opens_high() {
        let s = scenario(0.0);
        let mut a = AlwaysAccept::new(Opening::MaxOwnUtility, HerbTConfig::default()).unwrap();
        a.reset(&setup(&s, 0, 1));
        let any = s.domain.enumerate_bids(1000).unwrap()[7].clone();
        assert_eq!(a.act(&view(&s, 0, 3, Some(&any))).unwrap(), Action::Accept);
        match a.act(&view(&s, 0, 0, None)).unwrap() {
            Action::Offer(b) => assert!((s.profiles[0].utility(&b).unwrap() - 1.0).abs() < 1e-12),
            Action::Accept => panic!("opening accept"),
        }

        let mut h = AlwaysAccept::new(Opening::HerbTBidding, HerbTConfig { beta: 0.0, ..Default::default() }).unwrap();
        h.reset(&setup(&s, 0, 1));
        match h.act(&view(&s, 0, 0, None)).unwrap() {
            Action::Offer(b) => assert!((s.profiles[0].utility(&b).unwrap() - 1.0).abs() < 1e-12),
            Action::Accept => panic!("opening accept"),
        }
    }

    #[test]
    fn frequency_opens_at_utility_one() {
        let s = scenario(0.0);
        let mut f = Frequency::new();
        for seed in 0..10 {
            f.reset(&setup(&s, 1, seed));
            match f.act(&view(&s, 1, 0, None)).unwrap() {
                Action::Offer(b) => assert!(s.profiles[1].utility(&b).unwrap() >= 1.0 - 1e-12),
                Action::Accept => panic!(),
            }
        }
    }

    #[test]
    fn frequency_counts_track_repeated_values() {
        let s = scenario(0.0);
        let mut f = Frequency::new();
        f.reset(&setup(&s, 0, 3));
        let bids = s.domain.enumerate_bids(1000).unwrap();
        let target_value = 2;
        for b in bids.iter().filter(|b| s.domain.indices_of(b).unwrap()[1] == target_value).take(9) {
            f.observe(&TraceEntry { round: 0, agent: 1, action: Action::Offer(b.clone()) });
        }
        assert_eq!(f.most_frequent(1), Some(target_value));
    }

    #[test]
    fn frequency_substitution_never_drops_below_threshold() {
        let s = scenario(0.3);
        let mut f = Frequency::new();
        f.reset(&setup(&s, 2, 9));
        let mut rng = rng_from_seed(99);
        for turn in 0..1000 {
            let observed = s.domain.bid_from_indices(&s.domain.random_indices(&mut rng));
            f.observe(&TraceEntry { round: 0, agent: 0, action: Action::Offer(observed) });
            let round = turn % 51;
            let target = Frequency::threshold(round, 50, 0.3, 0.8);
            let bid = f.generate(&s.profiles[2], target);
            assert!(s.profiles[2].utility_of_indices(&bid) >= target);
        }
    }

    #[test]
    fn time_dependent_targets() {
        let td = TimeDependent::new(0.2).unwrap();
        assert_eq!(td.target(0, 180, 0.5, 0.6), 1.0);
        assert!((td.target(180, 180, 0.5, 0.6) - 0.3).abs() < 1e-15);
        let linear = TimeDependent::new(1.0).unwrap();
        let a = linear.target(30, 180, 0.2, 1.0);
        let b = linear.target(60, 180, 0.2, 1.0);
        let c = linear.target(90, 180, 0.2, 1.0);
        assert!(((a - b) - (b - c)).abs() < 1e-12);
        assert!(TimeDependent::new(0.0).is_err());
    }

    #[test]
    fn threshold_agents_respect_their_targets() {
        let s = scenario(0.2);
        let mut td = TimeDependent::new(2.0).unwrap();
        let mut fq = Frequency::new();
        let mut rng = rng_from_seed(5);
        td.reset(&setup(&s, 1, 4));
        fq.reset(&setup(&s, 1, 4));
        let p = &s.profiles[1];
        for step in 0..1000 {
            let round = step % 51;
            let standing = s.domain.bid_from_indices(&s.domain.random_indices(&mut rng));
            let u = p.utility(&standing).unwrap();
            let target = td.target(round, 50, 0.2, 0.8);
            match td.act(&view(&s, 1, round, Some(&standing))).unwrap() {
                Action::Accept => assert!(u >= target),
                Action::Offer(b) => assert!(p.utility(&b).unwrap() >= target),
            }
            let target = Frequency::threshold(round, 50, 0.2, 0.8);
            match fq.act(&view(&s, 1, round, Some(&standing))).unwrap() {
                Action::Accept => assert!(u >= target),
                Action::Offer(b) => assert!(p.utility(&b).unwrap() >= target),
            }
        }
    }

    #[test]
    fn random_agent_gate_and_determinism() {
        let s = scenario(1.0);
        let mut r = RandomAgent::new();
        r.reset(&SessionSetup {
            seed: 1,
            index: 0,
            party_count: 3,
            round_limit: 50,
            profile: s.profiles[0].with_discount(1.0).unwrap(),
        });
        let p = s.profiles[0].with_discount(1.0).unwrap();
        let low = s.domain.enumerate_bids(1000).unwrap().into_iter().find(|b| p.utility(b).unwrap() < 1.0).unwrap();
        let v = StateView { profile: &p, ..view(&s, 0, 3, Some(&low)) };
        for _ in 0..200 {
            assert!(!r.act(&v).unwrap().is_accept());
        }

        let s = scenario(0.0);
        let run = |seed| {
            let mut r = RandomAgent::new();
            r.reset(&setup(&s, 0, seed));
            let standing = s.domain.enumerate_bids(1000).unwrap()[3].clone();
            (0..50).map(|k| r.act(&view(&s, 0, k, Some(&standing))).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
    }

    #[test]
    fn random_offers_are_uniform_on_a_four_bid_domain() {
        let d = Arc::new(
            Domain::new(
                "four",
                vec![Issue::discrete("a", ["x", "y"]).unwrap(), Issue::discrete("b", ["p", "q"]).unwrap()],
            )
            .unwrap(),
        );
        let p = UtilityProfile::new(
            d.clone(),
            vec![0.5, 0.5],
            vec![IssueUtility::Discrete(vec![0.0, 1.0]), IssueUtility::Discrete(vec![1.0, 0.0])],
            0.0,
            1.0,
        )
        .unwrap();
        let mut r = RandomAgent::new();
        r.reset(&SessionSetup { seed: 3, index: 0, party_count: 2, round_limit: 10, profile: p.clone() });
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let v = StateView {
                round: 0,
                round_limit: 10,
                party_count: 2,
                me: 0,
                standing_offer: None,
                standing_proposer: None,
                accept_count: 0,
                profile: &p,
                trace: &[],
            };
            if let Action::Offer(b) = r.act(&v).unwrap() {
                counts[d.rank_of_indices(&d.indices_of(&b).unwrap())] += 1;
            }
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        // 99th percentile of chi-square with 3 degrees of freedom
        assert!(chi2 < 11.345, "chi2 = {chi2}, counts {counts:?}");
    }
}
