//! Multilateral negotiation under the stacked alternating offers protocol:
//! domains and linear-additive preferences, a session engine, a logistic
//! opponent model, the HerbT strategy and baselines, tournaments and
//! evaluation metrics.

pub mod domain;
pub mod error;
pub mod metrics;
pub mod opponent_model;
pub mod protocol;
pub mod seed;
pub mod stats;
pub mod strategy;
pub mod tournament;

pub use domain::{Bid, Domain, GeneratorSpec, Issue, IssueValue, Scenario, UtilityProfile};
pub use error::{NegotiationError, Result};
pub use protocol::{run_session, Action, Agent, SessionOutcome};
pub use strategy::StrategyRegistry;
pub use tournament::{run_tournament, SessionRecord, TournamentConfig};
