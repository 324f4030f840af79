//! Binary classification metrics. Class 1 is entailment, class 0
//! non-entailment.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BinaryLabel {
    NonEntailment,
    Entailment,
}

impl BinaryLabel {
    pub fn class(self) -> u8 {
        match self {
            BinaryLabel::NonEntailment => 0,
            BinaryLabel::Entailment => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            BinaryLabel::NonEntailment => BinaryLabel::Entailment,
            BinaryLabel::Entailment => BinaryLabel::NonEntailment,
        }
    }
}

/// Counts with entailment as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: u64,
    pub tn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    pub class0: ClassMetrics,
    pub class1: ClassMetrics,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ClassMetrics {
    fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics { precision, recall, f1 }
    }
}

impl Confusion {
    pub fn record(&mut self, gold: BinaryLabel, predicted: BinaryLabel) {
        match (gold, predicted) {
            (BinaryLabel::Entailment, BinaryLabel::Entailment) => self.tp += 1,
            (BinaryLabel::NonEntailment, BinaryLabel::Entailment) => self.fp += 1,
            (BinaryLabel::Entailment, BinaryLabel::NonEntailment) => self.fn_ += 1,
            (BinaryLabel::NonEntailment, BinaryLabel::NonEntailment) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            class1: ClassMetrics::from_counts(self.tp, self.fp, self.fn_),
            class0: ClassMetrics::from_counts(self.tn, self.fn_, self.fp),
            accuracy: ratio(self.tp + self.tn, self.total()),
        }
    }
}

impl FromIterator<(BinaryLabel, BinaryLabel)> for Confusion {
    fn from_iter<I: IntoIterator<Item = (BinaryLabel, BinaryLabel)>>(iter: I) -> Self {
        let mut c = Confusion::default();
        for (gold, predicted) in iter {
            c.record(gold, predicted);
        }
        c
    }
}
