use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::LabeledExample;
use crate::taxonomy::{IntentCode, IntentSet};

/// Predicted intents keyed by lowercase transaction hash.
pub type Predictions = BTreeMap<String, IntentSet>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Zero when nothing was predicted.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn prf(&self) -> Prf {
        let (recall, precision) = (self.recall(), self.precision());
        Prf {
            recall,
            precision,
            f1: f1(precision, recall),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub micro: Prf,
    pub per_intent: BTreeMap<IntentCode, IntentMetrics>,
    pub counts: Counts,
}

/// Micro-averaged over (example, label) pairs. A gold hash missing from
/// `predictions` counts as an empty prediction; predictions for hashes not
/// in `golds` are ignored. Per-intent rows cover every code that occurs in
/// a gold set or a prediction.
pub fn score(predictions: &Predictions, golds: &[LabeledExample]) -> MetricsReport {
    let empty = IntentSet::new();
    let mut total = Counts::default();
    let mut per: BTreeMap<IntentCode, Counts> = BTreeMap::new();
    for ex in golds {
        let pred = predictions.get(&ex.tx_hash.to_ascii_lowercase()).unwrap_or(&empty);
        let codes: BTreeSet<IntentCode> = ex.gold.iter().chain(pred.iter()).collect();
        for code in codes {
            let c = per.entry(code).or_default();
            match (ex.gold.contains(code), pred.contains(code)) {
                (true, true) => {
                    c.tp += 1;
                    total.tp += 1;
                }
                (false, true) => {
                    c.fp += 1;
                    total.fp += 1;
                }
                (true, false) => {
                    c.fn_ += 1;
                    total.fn_ += 1;
                }
                (false, false) => unreachable!("code came from one of the two sets"),
            }
        }
    }
    MetricsReport {
        micro: total.prf(),
        per_intent: per
            .into_iter()
            .map(|(code, c)| {
                let p = c.prf();
                (
                    code,
                    IntentMetrics {
                        recall: p.recall,
                        precision: p.precision,
                        f1: p.f1,
                        support: c.tp + c.fn_,
                    },
                )
            })
            .collect(),
        counts: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use IntentCode::*;

    fn ex(i: u8, codes: &[IntentCode]) -> LabeledExample {
        LabeledExample {
            tx_hash: format!("0x{}", format!("{i:02x}").repeat(32)),
            gold: codes.iter().copied().collect(),
            note: None,
        }
    }

    #[test]
    fn perfect_predictions() {
        let golds = vec![ex(1, &[A1, A9]), ex(2, &[A3])];
        let preds: Predictions = golds.iter().map(|e| (e.tx_hash.clone(), e.gold.clone())).collect();
        let m = score(&preds, &golds);
        assert_eq!((m.micro.recall, m.micro.precision, m.micro.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn missing_prediction_is_empty() {
        let golds = vec![ex(1, &[A1])];
        let m = score(&Predictions::new(), &golds);
        assert_eq!(m.counts, Counts { tp: 0, fp: 0, fn_: 1 });
        assert_eq!(m.micro.precision, 0.0);
        assert_eq!(m.micro.f1, 0.0);
        assert_eq!(m.per_intent[&A1].support, 1);
    }

    #[test]
    fn per_intent_breakdown() {
        let golds = vec![ex(1, &[A1]), ex(2, &[A1, A2])];
        let mut preds = Predictions::new();
        preds.insert(golds[0].tx_hash.clone(), [A1, A3].into_iter().collect());
        preds.insert(golds[1].tx_hash.clone(), [A2].into_iter().collect());
        let m = score(&preds, &golds);
        assert_eq!(m.counts, Counts { tp: 2, fp: 1, fn_: 1 });
        assert_eq!(m.per_intent[&A1].recall, 0.5);
        assert_eq!(m.per_intent[&A3].precision, 0.0);
        assert_eq!(m.per_intent[&A3].support, 0);
    }
}
