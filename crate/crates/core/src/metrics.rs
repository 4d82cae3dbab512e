//! Contingency counts and accuracy.

use crate::corpus::Polarity;
use crate::{Error, Result};

/// 2x2 table of actual versus predicted polarity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContingencyMatrix {
    pub true_pos: u64,
    pub false_neg: u64,
    pub false_pos: u64,
    pub true_neg: u64,
}

impl ContingencyMatrix {
    pub fn record(&mut self, actual: Polarity, predicted: Polarity) {
        match (actual, predicted) {
            (Polarity::Positive, Polarity::Positive) => self.true_pos += 1,
            (Polarity::Positive, Polarity::Negative) => self.false_neg += 1,
            (Polarity::Negative, Polarity::Positive) => self.false_pos += 1,
            (Polarity::Negative, Polarity::Negative) => self.true_neg += 1,
        }
    }

    pub fn from_predictions<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Polarity, Polarity)>,
    {
        let mut cm = ContingencyMatrix::default();
        for (actual, predicted) in pairs {
            cm.record(actual, predicted);
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }

    pub fn correct(&self) -> u64 {
        self.true_pos + self.true_neg
    }

    /// Percentage of correctly predicted documents.
    pub fn accuracy(&self) -> Result<f64> {
        accuracy(self)
    }

    pub fn merged(&self, other: &ContingencyMatrix) -> ContingencyMatrix {
        ContingencyMatrix {
            true_pos: self.true_pos + other.true_pos,
            false_neg: self.false_neg + other.false_neg,
            false_pos: self.false_pos + other.false_pos,
            true_neg: self.true_neg + other.true_neg,
        }
    }
}

pub fn accuracy(cm: &ContingencyMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::UndefinedMetric("accuracy of an empty matrix"));
    }
    Ok(100.0 * cm.correct() as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(tp: u64, tn: u64, fp: u64, fneg: u64) -> ContingencyMatrix {
        ContingencyMatrix {
            true_pos: tp,
            false_neg: fneg,
            false_pos: fp,
            true_neg: tn,
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&cm(50, 50, 0, 0)).unwrap(), 100.0);
        assert_eq!(accuracy(&cm(30, 40, 20, 10)).unwrap(), 70.0);
        assert_eq!(accuracy(&cm(0, 0, 7, 3)).unwrap(), 0.0);
        assert!(accuracy(&cm(0, 0, 0, 0)).is_err());
    }

    #[test]
    fn flipped_predictions_sum_to_hundred() {
        let pairs = [
            (Polarity::Positive, Polarity::Positive),
            (Polarity::Positive, Polarity::Negative),
            (Polarity::Negative, Polarity::Negative),
            (Polarity::Negative, Polarity::Negative),
            (Polarity::Negative, Polarity::Positive),
        ];
        let a = ContingencyMatrix::from_predictions(pairs);
        let b = ContingencyMatrix::from_predictions(pairs.map(|(x, p)| (x, p.flipped())));
        assert_eq!(a.total(), 5);
        assert!((a.accuracy().unwrap() + b.accuracy().unwrap() - 100.0).abs() < 1e-12);
    }
}
