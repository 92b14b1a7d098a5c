//! Strategy registry.
//!
//! Every negotiation strategy implements [`Agent`] and is registered under
//! the `type` name used in config blocks such as
//! `{"type": "herbt", "beta": 0.5}`. Tournaments and the CLI build agents
//! through [`StrategyRegistry::build`].

pub mod baseline;
pub mod herbt;

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{NegotiationError, Result};
use crate::protocol::Agent;

pub use baseline::{AlwaysAccept, Frequency, Opening, RandomAgent, TimeDependent};
pub use herbt::{HerbT, HerbTConfig, Scorer};

type Factory = Box<dyn Fn(&Value) -> Result<Box<dyn Agent>> + Send + Sync>;

struct Entry {
    factory: Factory,
    binds_beta: bool,
}

pub struct StrategyRegistry {
    entries: BTreeMap<String, Entry>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

/// Deserializes a block with its `type` key removed.
fn parse_block<T: DeserializeOwned>(kind: &str, block: &Value) -> Result<T> {
    let mut body = block.clone();
    if let Value::Object(map) = &mut body {
        map.remove("type");
    }
    serde_json::from_value(body).map_err(|e| NegotiationError::config(format!("strategy `{kind}`: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AlwaysAcceptBlock {
    #[serde(default)]
    opening: Opening,
    #[serde(default = "one")]
    beta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmptyBlock {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeDependentBlock {
    e: f64,
}

fn one() -> f64 {
    1.0
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { entries: BTreeMap::new() }
    }

    /// Registry preloaded with `herbt`, `always_accept`, `frequency`,
    /// `time_dependent` and `random`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("herbt", true, |block| {
            let cfg: HerbTConfig = parse_block::<herbt::HerbTBlock>("herbt", block)?.into();
            Ok(Box::new(HerbT::new(cfg)?))
        });
        r.register("always_accept", true, |block| {
            let b: AlwaysAcceptBlock = parse_block("always_accept", block)?;
            let herbt = HerbTConfig { beta: b.beta, ..Default::default() };
            Ok(Box::new(AlwaysAccept::new(b.opening, herbt)?))
        });
        r.register("frequency", false, |block| {
            parse_block::<EmptyBlock>("frequency", block)?;
            Ok(Box::new(Frequency::new()))
        });
        r.register("time_dependent", false, |block| {
            let b: TimeDependentBlock = parse_block("time_dependent", block)?;
            Ok(Box::new(TimeDependent::new(b.e)?))
        });
        r.register("random", false, |block| {
            parse_block::<EmptyBlock>("random", block)?;
            Ok(Box::new(RandomAgent::new()))
        });
        r
    }

    /// Adds or replaces a strategy. `binds_beta` marks strategies whose block
    /// takes the tournament's β grid point.
    pub fn register<F>(&mut self, name: &str, binds_beta: bool, factory: F)
    where
        F: Fn(&Value) -> Result<Box<dyn Agent>> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Entry { factory: Box::new(factory), binds_beta });
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    fn kind_of(block: &Value) -> Result<&str> {
        block
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| NegotiationError::config("strategy block lacks a string `type` field"))
    }

    fn entry(&self, block: &Value) -> Result<&Entry> {
        let kind = Self::kind_of(block)?;
        self.entries.get(kind).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            NegotiationError::config(format!("unknown strategy type `{kind}` (known: {})", known.join(", ")))
        })
    }

    pub fn build(&self, block: &Value) -> Result<Box<dyn Agent>> {
        (self.entry(block)?.factory)(block)
    }

    /// Copy of `block` with `beta` set, for strategies that take one.
    pub fn bind_beta(&self, block: &Value, beta: f64) -> Result<Value> {
        let mut out = block.clone();
        if self.entry(block)?.binds_beta {
            if let Value::Object(map) = &mut out {
                map.insert("beta".into(), Value::from(beta));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn builtins_build_by_name() {
        let r = StrategyRegistry::with_builtins();
        for block in [
            json!({"type": "herbt", "beta": 0.4, "scorer": "heuristic", "training_mode": "fresh"}),
            json!({"type": "always_accept", "opening": "herbt_bidding"}),
            json!({"type": "always_accept"}),
            json!({"type": "frequency"}),
            json!({"type": "time_dependent", "e": 0.2}),
            json!({"type": "random"}),
        ] {
            let kind = block["type"].as_str().unwrap().to_string();
            assert_eq!(r.build(&block).unwrap().name(), kind);
        }
    }

    #[test]
    fn bad_blocks_are_config_errors() {
        let r = StrategyRegistry::with_builtins();
        for block in [
            json!({"type": "nope"}),
            json!({"beta": 1.0}),
            json!({"type": "time_dependent"}),
            json!({"type": "time_dependent", "e": -1.0}),
            json!({"type": "frequency", "extra": 1}),
            json!({"type": "herbt", "beta": 2.0}),
        ] {
            assert!(matches!(r.build(&block), Err(NegotiationError::Config(_))), "{block}");
        }
    }

    #[test]
    fn beta_binding_only_touches_beta_strategies() {
        let r = StrategyRegistry::with_builtins();
        let h = r.bind_beta(&json!({"type": "herbt"}), 0.3).unwrap();
        assert_eq!(h["beta"], 0.3);
        let f = r.bind_beta(&json!({"type": "frequency"}), 0.3).unwrap();
        assert!(f.get("beta").is_none());
    }

    #[test]
    fn custom_strategies_can_be_registered() {
        let mut r = StrategyRegistry::empty();
        r.register("rand2", false, |_| Ok(Box::new(RandomAgent::new())));
        assert!(r.contains("rand2"));
        assert!(r.build(&json!({"type": "rand2"})).is_ok());
        assert!(r.build(&json!({"type": "random"})).is_err());
    }
}
