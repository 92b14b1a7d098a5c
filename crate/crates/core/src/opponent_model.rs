//! Per-opponent acceptance predictor.
//!
//! A logistic model `sigmoid(W·x + b)` over the one-hot bid encoding, trained
//! by a single chronological pass of stochastic gradient descent on log-loss.
//! Evidence comes from the public trace: an offer or an acceptance is a
//! positive example for the acting opponent, and replacing a standing offer
//! with a counteroffer is a negative example for the offer it displaced.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, EncodedBid, SparseFeatures};
use crate::error::{NegotiationError, Result};
use crate::protocol::{Action, TraceEntry};
use crate::seed::rng_from_seed;

/// Clamp for log-loss arguments.
pub const LOSS_EPSILON: f64 = 1e-12;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy of prediction `h` against label `y`.
pub fn log_loss(h: f64, y: bool) -> f64 {
    let h = h.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
    if y {
        -h.ln()
    } else {
        -(1.0 - h).ln()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        LogisticModel { weights: vec![0.0; dim], bias: 0.0 }
    }

    /// Weights and bias drawn uniformly from `[init_low, init_high)`.
    pub fn random<R: Rng + ?Sized>(dim: usize, cfg: &TrainingConfig, rng: &mut R) -> Self {
        let mut draw = || rng.gen_range(cfg.init_low..cfg.init_high);
        let weights = (0..dim).map(|_| draw()).collect();
        let bias = draw();
        LogisticModel { weights, bias }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.weights.len() {
            return Err(NegotiationError::structural(format!(
                "feature vector of length {len} does not match model dimension {}",
                self.weights.len()
            )));
        }
        Ok(())
    }

    pub fn logit(&self, x: &EncodedBid) -> Result<f64> {
        self.check_dim(x.features.len())?;
        Ok(self.weights.iter().zip(&x.features).map(|(w, f)| w * f).sum::<f64>() + self.bias)
    }

    pub fn predict(&self, x: &EncodedBid) -> Result<f64> {
        self.logit(x).map(sigmoid)
    }

    /// Prediction from a sparse encoding; indices must be in range.
    pub fn predict_sparse(&self, x: &SparseFeatures) -> f64 {
        sigmoid(x.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>() + self.bias)
    }

    /// Analytic gradient of `log_loss(predict(x), y)` as `(dW, db)`.
    pub fn gradient(&self, x: &EncodedBid, y: bool) -> Result<(Vec<f64>, f64)> {
        let err = self.predict(x)? - if y { 1.0 } else { 0.0 };
        Ok((x.features.iter().map(|f| err * f).collect(), err))
    }

    /// One SGD step: `θ ← θ − η·(h − y)·(x, 1)`.
    pub fn step(&mut self, sample: &TrainingSample, learning_rate: f64) -> Result<()> {
        let err = self.predict(&sample.features)? - if sample.label { 1.0 } else { 0.0 };
        let scale = learning_rate * err;
        for (w, f) in self.weights.iter_mut().zip(&sample.features.features) {
            *w -= scale * f;
        }
        self.bias -= scale;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub features: EncodedBid,
    /// `true` when the opponent offered or accepted the bid.
    pub label: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TrainingMode {
    /// Re-initialize and retrain on the whole history every turn.
    #[default]
    #[serde(rename = "fresh")]
    FreshEachTurn,
    /// Keep one model and feed it only the new samples.
    #[serde(rename = "continuous")]
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub init_low: f64,
    pub init_high: f64,
    pub mode: TrainingMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { learning_rate: 0.5, init_low: -1.0, init_high: 0.0, mode: TrainingMode::FreshEachTurn }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NegotiationError::config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.init_low < self.init_high && self.init_high <= 0.0) {
            return Err(NegotiationError::config(format!(
                "need init_low < init_high <= 0, got [{}, {})",
                self.init_low, self.init_high
            )));
        }
        Ok(())
    }
}

/// Applies one in-order SGD pass over `samples` to `model`.
pub fn sgd_update(model: &mut LogisticModel, samples: &[TrainingSample], learning_rate: f64) -> Result<()> {
    for s in samples {
        model.step(s, learning_rate)?;
    }
    Ok(())
}

/// Fresh model: random negative initialization, then exactly one pass over
/// `samples` in the given order.
pub fn sgd_train(samples: &[TrainingSample], dim: usize, cfg: &TrainingConfig, rng_seed: u64) -> Result<LogisticModel> {
    let mut rng = rng_from_seed(rng_seed);
    let mut model = LogisticModel::random(dim, cfg, &mut rng);
    sgd_update(&mut model, samples, cfg.learning_rate)?;
    Ok(model)
}

/// Evidence about `opponent`'s acceptance behaviour, in trace order.
pub fn extract_samples(trace: &[TraceEntry], opponent: usize, domain: &Domain) -> Result<Vec<TrainingSample>> {
    let mut samples = Vec::new();
    let mut standing = None;
    for entry in trace {
        match &entry.action {
            Action::Offer(bid) => {
                if entry.agent == opponent {
                    if let Some(rejected) = standing {
                        samples.push(TrainingSample { features: domain.encode(rejected)?, label: false });
                    }
                    samples.push(TrainingSample { features: domain.encode(bid)?, label: true });
                }
                standing = Some(bid);
            }
            Action::Accept => {
                if entry.agent == opponent {
                    let accepted =
                        standing.ok_or_else(|| NegotiationError::structural("accept without standing offer"))?;
                    samples.push(TrainingSample { features: domain.encode(accepted)?, label: true });
                }
            }
        }
    }
    Ok(samples)
}

/// Previous turn's model and how many history samples it has consumed.
#[derive(Clone, Debug, PartialEq)]
pub struct PreviousModel {
    pub model: LogisticModel,
    pub samples_seen: usize,
}

/// The model an agent uses on one turn.
///
/// Fresh mode retrains from a new random start on the full `history`;
/// continuous mode updates `previous` with the samples it has not seen yet,
/// initializing once from `turn_seed` when there is no previous model.
pub fn model_for_turn(
    history: &[TrainingSample],
    dim: usize,
    cfg: &TrainingConfig,
    turn_seed: u64,
    previous: Option<&PreviousModel>,
) -> Result<PreviousModel> {
    match (cfg.mode, previous) {
        (TrainingMode::FreshEachTurn, _) => {
            Ok(PreviousModel { model: sgd_train(history, dim, cfg, turn_seed)?, samples_seen: history.len() })
        }
        (TrainingMode::Continuous, None) => {
            Ok(PreviousModel { model: sgd_train(history, dim, cfg, turn_seed)?, samples_seen: history.len() })
        }
        (TrainingMode::Continuous, Some(prev)) => {
            let start = prev.samples_seen.min(history.len());
            let mut model = prev.model.clone();
            sgd_update(&mut model, &history[start..], cfg.learning_rate)?;
            Ok(PreviousModel { model, samples_seen: history.len() })
        }
    }
}

/// Snapshot of one opponent model, as written to model dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    #[serde(default)]
    pub modeler: usize,
    pub opponent: usize,
    pub round: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ModelDump {
    pub fn model(&self) -> LogisticModel {
        LogisticModel { weights: self.weights.clone(), bias: self.bias }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Bid, Issue, IssueValue};
    use crate::seed::mix_seed;
    use proptest::prelude::*;

    fn x(v: &[f64]) -> EncodedBid {
        EncodedBid { features: v.to_vec() }
    }

    #[test]
    fn predict_examples() {
        let zero = LogisticModel::zeros(3);
        assert_eq!(zero.predict(&x(&[1.0, 0.3, 0.0])).unwrap(), 0.5);
        let sat = LogisticModel { weights: vec![0.0, 0.0], bias: -50.0 };
        assert!(sat.predict(&x(&[1.0, 1.0])).unwrap() < 1e-20);
        let m = LogisticModel { weights: vec![1.0, -1.0], bias: 0.5 };
        assert!((m.predict(&x(&[1.0, 0.0])).unwrap() - 0.817_574_476_193_643_6).abs() < 1e-12);
        assert!(m.predict(&x(&[1.0])).is_err());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!(sigmoid(-700.0) > 0.0);
    }

    #[test]
    fn log_loss_examples() {
        assert!(log_loss(1.0 - 1e-15, true) < 1e-11);
        assert!((log_loss(0.5, true) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log_loss(0.5, false) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log_loss(0.9, false) - 2.302_585_092_994_045).abs() < 1e-9);
        assert!(log_loss(0.0, true).is_finite());
        assert!(log_loss(1.0, false).is_finite());
    }

    #[test]
    fn empty_training_returns_negative_initialization() {
        let cfg = TrainingConfig::default();
        let m = sgd_train(&[], 5, &cfg, 9).unwrap();
        assert!(m.weights.iter().all(|w| *w < 0.0 && *w >= -1.0));
        assert!(m.bias < 0.0);
        assert_eq!(m, sgd_train(&[], 5, &cfg, 9).unwrap());
    }

    #[test]
    fn a_positive_sample_raises_its_prediction() {
        let cfg = TrainingConfig::default();
        let s = TrainingSample { features: x(&[1.0, 0.0, 0.5]), label: true };
        let before = sgd_train(&[], 3, &cfg, 4).unwrap().predict(&s.features).unwrap();
        let after = sgd_train(std::slice::from_ref(&s), 3, &cfg, 4).unwrap().predict(&s.features).unwrap();
        assert!(after > before);
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let cfg = TrainingConfig::default();
        let s = vec![
            TrainingSample { features: x(&[1.0, 0.0]), label: true },
            TrainingSample { features: x(&[1.0]), label: false },
        ];
        assert!(matches!(sgd_train(&s, 2, &cfg, 1), Err(NegotiationError::Structural(_))));
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        let bad = TrainingConfig { init_high: 0.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = TrainingConfig { learning_rate: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    fn abc() -> Domain {
        Domain::new("d", vec![Issue::discrete("a", ["A", "B", "C"]).unwrap()]).unwrap()
    }

    fn b(name: &str) -> Bid {
        Bid::new(vec![IssueValue::Name(name.into())])
    }

    #[test]
    fn extraction_examples() {
        let d = abc();
        let opening = vec![TraceEntry { round: 0, agent: 1, action: Action::Offer(b("A")) }];
        let s = extract_samples(&opening, 1, &d).unwrap();
        assert_eq!(s, vec![TrainingSample { features: x(&[1.0, 0.0, 0.0]), label: true }]);

        let counter = vec![
            TraceEntry { round: 0, agent: 0, action: Action::Offer(b("A")) },
            TraceEntry { round: 0, agent: 1, action: Action::Offer(b("C")) },
        ];
        let s = extract_samples(&counter, 1, &d).unwrap();
        assert_eq!(
            s,
            vec![
                TrainingSample { features: x(&[1.0, 0.0, 0.0]), label: false },
                TrainingSample { features: x(&[0.0, 0.0, 1.0]), label: true },
            ]
        );
        // agent 0's opening is its own positive; agent 1's decision is excluded
        assert_eq!(extract_samples(&counter, 0, &d).unwrap().len(), 1);

        let accept = vec![
            TraceEntry { round: 0, agent: 0, action: Action::Offer(b("B")) },
            TraceEntry { round: 0, agent: 1, action: Action::Accept },
        ];
        let s = extract_samples(&accept, 1, &d).unwrap();
        assert_eq!(s, vec![TrainingSample { features: x(&[0.0, 1.0, 0.0]), label: true }]);
    }

    #[test]
    fn fresh_mode_on_empty_history_predicts_below_half() {
        let cfg = TrainingConfig::default();
        let d = abc();
        let m = model_for_turn(&[], 3, &cfg, mix_seed(&[1, 2, 3]), None).unwrap().model;
        for name in ["A", "B", "C"] {
            assert!(m.predict(&d.encode(&b(name)).unwrap()).unwrap() < 0.5);
        }
        let again = model_for_turn(&[], 3, &cfg, mix_seed(&[1, 2, 3]), None).unwrap().model;
        assert_eq!(m, again);
    }

    #[test]
    fn continuous_mode_equals_one_pass_over_concatenation() {
        let cfg = TrainingConfig { mode: TrainingMode::Continuous, ..Default::default() };
        let samples: Vec<TrainingSample> = (0..9)
            .map(|i| TrainingSample {
                features: x(&[(i % 3 == 0) as u8 as f64, (i % 3 == 1) as u8 as f64, 0.1 * i as f64]),
                label: i % 2 == 0,
            })
            .collect();
        let t1 = model_for_turn(&samples[..4], 3, &cfg, 77, None).unwrap();
        let t2 = model_for_turn(&samples, 3, &cfg, 78, Some(&t1)).unwrap();
        let direct = sgd_train(&samples, 3, &cfg, 77).unwrap();
        for (a, b) in t2.model.weights.iter().zip(&direct.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((t2.model.bias - direct.bias).abs() < 1e-12);
        assert_eq!(t2.samples_seen, 9);
    }

    #[test]
    fn repeated_positive_evidence_is_monotone() {
        let cfg = TrainingConfig::default();
        let s = TrainingSample { features: x(&[0.0, 1.0, 0.0, 1.0]), label: true };
        let mut last = f64::NEG_INFINITY;
        for k in 1..12 {
            let samples = vec![s.clone(); k];
            let p = sgd_train(&samples, 4, &cfg, 5).unwrap().predict(&s.features).unwrap();
            assert!(p > last, "k={k}: {p} <= {last}");
            last = p;
        }
    }

    proptest! {
        #[test]
        fn analytic_gradient_matches_central_differences(
            w in prop::collection::vec(-2.0f64..2.0, 4),
            bias in -2.0f64..2.0,
            xs in prop::collection::vec(0.0f64..1.0, 4),
            y in any::<bool>(),
        ) {
            let model = LogisticModel { weights: w, bias };
            let input = x(&xs);
            let (dw, db) = model.gradient(&input, y).unwrap();
            let loss = |m: &LogisticModel| log_loss(m.predict(&input).unwrap(), y);
            let h = 1e-6;
            for j in 0..=4 {
                let mut plus = model.clone();
                let mut minus = model.clone();
                if j < 4 { plus.weights[j] += h; minus.weights[j] -= h; } else { plus.bias += h; minus.bias -= h; }
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
                let analytic = if j < 4 { dw[j] } else { db };
                let scale = analytic.abs().max(1e-3);
                prop_assert!((numeric - analytic).abs() / scale < 1e-6, "j={} numeric={} analytic={}", j, numeric, analytic);
            }
        }

        #[test]
        fn untrained_models_predict_below_half_on_nonnegative_inputs(
            seed in any::<u64>(),
            xs in prop::collection::vec(0.0f64..1.0, 6),
        ) {
            let m = sgd_train(&[], 6, &TrainingConfig::default(), seed).unwrap();
            prop_assert!(m.predict(&x(&xs)).unwrap() < 0.5);
        }
    }
}
