//! Negotiation domains, bids, linear-additive utility profiles and the
//! feature encoding consumed by the opponent models.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{NegotiationError, Result};
use crate::seed::{mix_seed, rng_from_seed};

/// Default ceiling on the number of bids a full-space scan may visit.
pub const DEFAULT_BID_SPACE_CAP: usize = 1_000_000;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// One issue's assignment inside a bid.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IssueValue {
    Integer(i64),
    Name(String),
}

impl fmt::Display for IssueValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssueValue::Integer(v) => write!(f, "{v}"),
            IssueValue::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IssueKind {
    Discrete(Vec<String>),
    Integer { lo: i64, hi: i64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Issue {
    name: String,
    kind: IssueKind,
}

impl Issue {
    pub fn discrete<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.is_empty() {
            return Err(NegotiationError::structural(format!("issue `{name}` has no values")));
        }
        let mut seen = HashSet::new();
        for v in &values {
            if !seen.insert(v.as_str()) {
                return Err(NegotiationError::structural(format!("issue `{name}` lists value `{v}` twice")));
            }
        }
        Ok(Issue { name, kind: IssueKind::Discrete(values) })
    }

    pub fn integer(name: impl Into<String>, lo: i64, hi: i64) -> Result<Self> {
        let name = name.into();
        if lo > hi {
            return Err(NegotiationError::structural(format!("integer issue `{name}` has lo {lo} > hi {hi}")));
        }
        Ok(Issue { name, kind: IssueKind::Integer { lo, hi } })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &IssueKind {
        &self.kind
    }

    /// Number of legal values.
    pub fn size(&self) -> usize {
        match &self.kind {
            IssueKind::Discrete(values) => values.len(),
            IssueKind::Integer { lo, hi } => (hi - lo) as usize + 1,
        }
    }

    /// Width of this issue's block in the encoded feature vector.
    pub fn feature_width(&self) -> usize {
        match &self.kind {
            IssueKind::Discrete(values) => values.len(),
            IssueKind::Integer { .. } => 1,
        }
    }

    pub fn index_of(&self, value: &IssueValue) -> Option<usize> {
        match (&self.kind, value) {
            (IssueKind::Discrete(values), IssueValue::Name(name)) => values.iter().position(|v| v == name),
            (IssueKind::Integer { lo, hi }, IssueValue::Integer(v)) if v >= lo && v <= hi => Some((v - lo) as usize),
            _ => None,
        }
    }

    /// Inverse of [`Issue::index_of`]. Panics when `index >= size()`.
    pub fn value_at(&self, index: usize) -> IssueValue {
        match &self.kind {
            IssueKind::Discrete(values) => IssueValue::Name(values[index].clone()),
            IssueKind::Integer { lo, hi } => {
                let v = lo + index as i64;
                assert!(v <= *hi, "index {index} out of range for issue `{}`", self.name);
                IssueValue::Integer(v)
            }
        }
    }

    /// Position of value `index` on the unit interval (integer issues only).
    fn normalized(&self, index: usize) -> f64 {
        match &self.kind {
            IssueKind::Integer { lo, hi } if hi > lo => index as f64 / (hi - lo) as f64,
            _ => 0.0,
        }
    }
}

/// A complete assignment of one value to every issue.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bid {
    pub values: Vec<IssueValue>,
}

impl Bid {
    pub fn new(values: Vec<IssueValue>) -> Self {
        Bid { values }
    }
}

impl fmt::Display for Bid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Numeric feature vector of a bid: one-hot blocks for discrete issues and a
/// single `[0, 1]` entry for each integer issue.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedBid {
    pub features: Vec<f64>,
}

/// Sparse form of an [`EncodedBid`]: `(feature index, value)` for every
/// nonzero-capable slot (one per issue).
pub type SparseFeatures = Vec<(usize, f64)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub struct Domain {
    name: String,
    issues: Vec<Issue>,
    offsets: Vec<usize>,
}

impl Domain {
    pub fn new(name: impl Into<String>, issues: Vec<Issue>) -> Result<Self> {
        let name = name.into();
        if issues.is_empty() {
            return Err(NegotiationError::structural(format!("domain `{name}` has no issues")));
        }
        let mut names = HashSet::new();
        for issue in &issues {
            if !names.insert(issue.name.as_str()) {
                return Err(NegotiationError::structural(format!(
                    "domain `{name}` repeats issue name `{}`",
                    issue.name
                )));
            }
        }
        let mut offsets = Vec::with_capacity(issues.len());
        let mut acc = 0;
        for issue in &issues {
            offsets.push(acc);
            acc += issue.feature_width();
        }
        Ok(Domain { name, issues, offsets })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn outcome_count(&self) -> u128 {
        self.issues.iter().map(|i| i.size() as u128).product()
    }

    pub fn feature_len(&self) -> usize {
        self.issues.iter().map(Issue::feature_width).sum()
    }

    /// Per-issue value indices of `bid`, validating arity and legality.
    pub fn indices_of(&self, bid: &Bid) -> Result<Vec<usize>> {
        if bid.values.len() != self.issues.len() {
            return Err(NegotiationError::structural(format!(
                "bid has {} values but domain `{}` has {} issues",
                bid.values.len(),
                self.name,
                self.issues.len()
            )));
        }
        self.issues
            .iter()
            .zip(&bid.values)
            .map(|(issue, value)| {
                issue.index_of(value).ok_or_else(|| {
                    NegotiationError::structural(format!("value `{value}` is not legal for issue `{}`", issue.name))
                })
            })
            .collect()
    }

    pub fn validate_bid(&self, bid: &Bid) -> Result<()> {
        self.indices_of(bid).map(|_| ())
    }

    pub fn bid_from_indices(&self, indices: &[usize]) -> Bid {
        Bid::new(self.issues.iter().zip(indices).map(|(issue, &i)| issue.value_at(i)).collect())
    }

    /// Lexicographic rank of a bid in [`Domain::enumerate_bids`] order.
    pub fn rank_of_indices(&self, indices: &[usize]) -> usize {
        self.issues.iter().zip(indices).fold(0usize, |acc, (issue, &i)| acc * issue.size() + i)
    }

    /// Every bid exactly once, first issue varying slowest.
    pub fn enumerate_bids(&self, cap: usize) -> Result<Vec<Bid>> {
        Ok(self.enumerate_indices(cap)?.iter().map(|idx| self.bid_from_indices(idx)).collect())
    }

    /// Index-tuple form of [`Domain::enumerate_bids`].
    pub fn enumerate_indices(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let size = self.outcome_count();
        if size > cap as u128 {
            return Err(NegotiationError::Capacity { size, cap });
        }
        let sizes: Vec<usize> = self.issues.iter().map(Issue::size).collect();
        let mut out = Vec::with_capacity(size as usize);
        let mut current = vec![0usize; sizes.len()];
        loop {
            out.push(current.clone());
            // odometer increment, last issue fastest
            let mut pos = sizes.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                current[pos] += 1;
                if current[pos] < sizes[pos] {
                    break;
                }
                current[pos] = 0;
            }
        }
    }

    pub fn encode(&self, bid: &Bid) -> Result<EncodedBid> {
        let indices = self.indices_of(bid)?;
        let mut features = vec![0.0; self.feature_len()];
        for (slot, value) in self.sparse_encode(&indices) {
            features[slot] = value;
        }
        Ok(EncodedBid { features })
    }

    /// Sparse encoding from value indices; one entry per issue.
    pub fn sparse_encode(&self, indices: &[usize]) -> SparseFeatures {
        self.issues
            .iter()
            .zip(indices)
            .zip(&self.offsets)
            .map(|((issue, &i), &offset)| match issue.kind {
                IssueKind::Discrete(_) => (offset + i, 1.0),
                IssueKind::Integer { .. } => (offset, issue.normalized(i)),
            })
            .collect()
    }

    /// Draws a uniformly random bid as value indices.
    pub fn random_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.issues.iter().map(|i| rng.gen_range(0..i.size())).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct RawDomain {
    name: String,
    issues: Vec<RawIssue>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum RawIssue {
    Discrete { name: String, values: Vec<String> },
    Integer { name: String, lo: i64, hi: i64 },
}

impl TryFrom<RawDomain> for Domain {
    type Error = NegotiationError;

    fn try_from(raw: RawDomain) -> Result<Self> {
        let issues = raw
            .issues
            .into_iter()
            .map(|i| match i {
                RawIssue::Discrete { name, values } => Issue::discrete(name, values),
                RawIssue::Integer { name, lo, hi } => Issue::integer(name, lo, hi),
            })
            .collect::<Result<Vec<_>>>()?;
        Domain::new(raw.name, issues)
    }
}

impl From<Domain> for RawDomain {
    fn from(d: Domain) -> Self {
        RawDomain {
            name: d.name,
            issues: d
                .issues
                .into_iter()
                .map(|i| match i.kind {
                    IssueKind::Discrete(values) => RawIssue::Discrete { name: i.name, values },
                    IssueKind::Integer { lo, hi } => RawIssue::Integer { name: i.name, lo, hi },
                })
                .collect(),
        }
    }
}

/// Valuation of one issue's values.
#[derive(Clone, Debug, PartialEq)]
pub enum IssueUtility {
    /// Utility per value, aligned with the issue's value list.
    Discrete(Vec<f64>),
    /// Linear interpolation between the range endpoints.
    Integer { u_lo: f64, u_hi: f64 },
}

impl IssueUtility {
    fn at(&self, issue: &Issue, index: usize) -> f64 {
        match self {
            IssueUtility::Discrete(us) => us[index],
            IssueUtility::Integer { u_lo, u_hi } => u_lo + issue.normalized(index) * (u_hi - u_lo),
        }
    }

    fn max(&self) -> f64 {
        match self {
            IssueUtility::Discrete(us) => us.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            IssueUtility::Integer { u_lo, u_hi } => u_lo.max(*u_hi),
        }
    }
}

/// An agent's private linear-additive preferences.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityProfile {
    domain: Arc<Domain>,
    weights: Vec<f64>,
    values: Vec<IssueUtility>,
    reservation: f64,
    discount: f64,
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl UtilityProfile {
    pub fn new(
        domain: Arc<Domain>,
        weights: Vec<f64>,
        values: Vec<IssueUtility>,
        reservation: f64,
        discount: f64,
    ) -> Result<Self> {
        let n = domain.issues().len();
        if weights.len() != n || values.len() != n {
            return Err(NegotiationError::structural(format!(
                "profile has {} weights and {} value tables for {n} issues",
                weights.len(),
                values.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(NegotiationError::structural("issue weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(NegotiationError::structural(format!("issue weights sum to {total}, not 1")));
        }
        for (issue, table) in domain.issues().iter().zip(&values) {
            let ok = match (&issue.kind, table) {
                (IssueKind::Discrete(vs), IssueUtility::Discrete(us)) => {
                    vs.len() == us.len() && us.iter().all(|u| in_unit(*u))
                }
                (IssueKind::Integer { .. }, IssueUtility::Integer { u_lo, u_hi }) => in_unit(*u_lo) && in_unit(*u_hi),
                _ => false,
            };
            if !ok {
                return Err(NegotiationError::structural(format!(
                    "value utilities for issue `{}` do not match its kind or leave [0, 1]",
                    issue.name
                )));
            }
        }
        if !in_unit(reservation) {
            return Err(NegotiationError::structural(format!("reservation {reservation} outside [0, 1]")));
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(NegotiationError::structural(format!("discount factor {discount} outside (0, 1]")));
        }
        Ok(UtilityProfile { domain, weights, values, reservation, discount })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn issue_utilities(&self) -> &[IssueUtility] {
        &self.values
    }

    pub fn reservation(&self) -> f64 {
        self.reservation
    }

    pub fn discount_factor(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        UtilityProfile::new(self.domain.clone(), self.weights.clone(), self.values.clone(), self.reservation, discount)
    }

    pub fn utility(&self, bid: &Bid) -> Result<f64> {
        let indices = self.domain.indices_of(bid)?;
        Ok(self.utility_of_indices(&indices))
    }

    /// Unchecked fast path; `indices` must come from this profile's domain.
    pub fn utility_of_indices(&self, indices: &[usize]) -> f64 {
        let u: f64 = self
            .domain
            .issues()
            .iter()
            .zip(indices)
            .zip(self.weights.iter().zip(&self.values))
            .map(|((issue, &i), (w, table))| w * table.at(issue, i))
            .sum();
        u.clamp(0.0, 1.0)
    }

    /// Utility of the per-issue best bid: `Σ weight · max value utility`.
    pub fn max_utility(&self) -> f64 {
        self.weights.iter().zip(&self.values).map(|(w, t)| w * t.max()).sum()
    }

    /// Per-issue argmax; lowest index wins ties.
    pub fn best_indices(&self) -> Vec<usize> {
        self.domain
            .issues()
            .iter()
            .zip(&self.values)
            .map(|(issue, table)| {
                let mut best = 0;
                let mut best_u = f64::NEG_INFINITY;
                for i in 0..issue.size() {
                    let u = table.at(issue, i);
                    if u > best_u {
                        best_u = u;
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    pub fn best_bid(&self) -> Bid {
        self.domain.bid_from_indices(&self.best_indices())
    }

    /// Value utility of a single issue/value pair (unweighted).
    pub fn value_utility(&self, issue: usize, index: usize) -> f64 {
        self.values[issue].at(&self.domain.issues()[issue], index)
    }

    fn to_json(&self) -> Value {
        let mut values = Map::new();
        for (issue, table) in self.domain.issues().iter().zip(&self.values) {
            let entry = match (&issue.kind, table) {
                (IssueKind::Discrete(names), IssueUtility::Discrete(us)) => {
                    let mut m = Map::new();
                    for (name, u) in names.iter().zip(us) {
                        m.insert(name.clone(), json!(u));
                    }
                    Value::Object(m)
                }
                (_, IssueUtility::Integer { u_lo, u_hi }) => json!({ "u_lo": u_lo, "u_hi": u_hi }),
                _ => unreachable!("validated at construction"),
            };
            values.insert(issue.name.clone(), entry);
        }
        json!({
            "weights": self.weights,
            "values": values,
            "reservation": self.reservation,
            "discount": self.discount,
        })
    }

    fn from_json(domain: &Arc<Domain>, raw: RawProfile) -> Result<Self> {
        let mut values = Vec::with_capacity(domain.issues().len());
        for issue in domain.issues() {
            let entry = raw.values.get(&issue.name).ok_or_else(|| {
                NegotiationError::structural(format!("profile lacks value utilities for issue `{}`", issue.name))
            })?;
            let table = match &issue.kind {
                IssueKind::Discrete(names) => {
                    let obj = entry.as_object().ok_or_else(|| {
                        NegotiationError::structural(format!("issue `{}` expects a value→utility map", issue.name))
                    })?;
                    let us = names
                        .iter()
                        .map(|n| {
                            obj.get(n).and_then(Value::as_f64).ok_or_else(|| {
                                NegotiationError::structural(format!(
                                    "issue `{}` lacks a utility for value `{n}`",
                                    issue.name
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if obj.len() != names.len() {
                        return Err(NegotiationError::structural(format!(
                            "issue `{}` lists utilities for unknown values",
                            issue.name
                        )));
                    }
                    IssueUtility::Discrete(us)
                }
                IssueKind::Integer { .. } => {
                    let get = |k: &str| {
                        entry.get(k).and_then(Value::as_f64).ok_or_else(|| {
                            NegotiationError::structural(format!("integer issue `{}` lacks `{k}`", issue.name))
                        })
                    };
                    IssueUtility::Integer { u_lo: get("u_lo")?, u_hi: get("u_hi")? }
                }
            };
            values.push(table);
        }
        UtilityProfile::new(domain.clone(), raw.weights, values, raw.reservation, raw.discount)
    }
}

#[derive(Deserialize)]
struct RawProfile {
    weights: Vec<f64>,
    values: BTreeMap<String, Value>,
    reservation: f64,
    discount: f64,
}

/// `value · δ^(round / round_limit)`.
pub fn discount(value: f64, round: usize, round_limit: usize, delta: f64) -> f64 {
    debug_assert!(round_limit >= 1 && round <= round_limit);
    debug_assert!(delta > 0.0 && delta <= 1.0);
    if delta == 1.0 || round == 0 {
        return value;
    }
    value * delta.powf(round as f64 / round_limit as f64)
}

/// Mean of the profiles' utilities for `bid`.
pub fn social_welfare(bid: &Bid, profiles: &[UtilityProfile]) -> Result<f64> {
    if profiles.is_empty() {
        return Err(NegotiationError::structural("social welfare of an empty profile list"));
    }
    let mut total = 0.0;
    for p in profiles {
        total += p.utility(bid)?;
    }
    Ok(total / profiles.len() as f64)
}

/// Random profile: positive normalized weights, each issue's value utilities
/// rescaled to span exactly `[0, 1]`.
pub fn generate_profile(domain: Arc<Domain>, reservation: f64, delta: f64, rng_seed: u64) -> Result<UtilityProfile> {
    let mut rng = rng_from_seed(rng_seed);
    let raw: Vec<f64> = domain.issues().iter().map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // absorb rounding so the sum is 1 to the last ulp we can manage
    let drift: f64 = 1.0 - weights.iter().sum::<f64>();
    weights[0] += drift;

    let values = domain
        .issues()
        .iter()
        .map(|issue| match &issue.kind {
            IssueKind::Discrete(names) => {
                let draws: Vec<f64> = names.iter().map(|_| rng.gen::<f64>()).collect();
                IssueUtility::Discrete(rescale(&draws))
            }
            IssueKind::Integer { lo, hi } => {
                let ends = rescale(&[rng.gen::<f64>(), rng.gen::<f64>()]);
                if lo == hi {
                    IssueUtility::Integer { u_lo: 1.0, u_hi: 1.0 }
                } else {
                    IssueUtility::Integer { u_lo: ends[0], u_hi: ends[1] }
                }
            }
        })
        .collect();
    UtilityProfile::new(domain, weights, values, reservation, delta)
}

fn rescale(draws: &[f64]) -> Vec<f64> {
    let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON {
        return vec![1.0; draws.len()];
    }
    draws
        .iter()
        .map(|&d| {
            if d == hi {
                1.0
            } else if d == lo {
                0.0
            } else {
                (d - lo) / (hi - lo)
            }
        })
        .collect()
}

/// A domain together with one profile per party.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub domain: Arc<Domain>,
    pub profiles: Vec<UtilityProfile>,
}

#[derive(Deserialize)]
struct RawScenario {
    domain: Domain,
    profiles: Vec<RawProfile>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text)?;
        let domain = Arc::new(raw.domain);
        let profiles =
            raw.profiles.into_iter().map(|p| UtilityProfile::from_json(&domain, p)).collect::<Result<Vec<_>>>()?;
        Ok(Scenario { domain, profiles })
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "domain": serde_json::to_value(&*self.domain).expect("domain serializes"),
            "profiles": self.profiles.iter().map(UtilityProfile::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact canonical JSON form.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_string(&self.to_json_value()).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Scenario::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Parameters of a randomly generated scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default = "default_generated_name")]
    pub name: String,
    pub issues: usize,
    pub values_per_issue: usize,
    /// How many of `issues` are integer-ranged (`0..values_per_issue-1`).
    #[serde(default)]
    pub integer_issues: usize,
    #[serde(default = "default_parties")]
    pub parties: usize,
    #[serde(default)]
    pub reservation: f64,
    #[serde(default = "default_discount")]
    pub discount: f64,
}

fn default_generated_name() -> String {
    "generated".to_string()
}

fn default_parties() -> usize {
    3
}

fn default_discount() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn generate(&self, seed: u64) -> Result<Scenario> {
        if self.issues == 0 || self.values_per_issue == 0 {
            return Err(NegotiationError::config("generator needs at least one issue with one value"));
        }
        if self.integer_issues > self.issues {
            return Err(NegotiationError::config("integer_issues exceeds issues"));
        }
        let first_integer = self.issues - self.integer_issues;
        let issues = (0..self.issues)
            .map(|i| {
                let name = format!("issue_{i}");
                if i >= first_integer {
                    Issue::integer(name, 0, self.values_per_issue as i64 - 1)
                } else {
                    Issue::discrete(name, (0..self.values_per_issue).map(|v| format!("v{v}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let domain = Arc::new(Domain::new(self.name.clone(), issues)?);
        let profiles = (0..self.parties)
            .map(|p| generate_profile(domain.clone(), self.reservation, self.discount, mix_seed(&[seed, p as u64])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario { domain, profiles })
    }
}
