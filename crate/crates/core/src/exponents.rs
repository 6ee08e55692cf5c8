//! Substitute exponents attached to a pair family.

use crate::strings::{PairFamily, Sentence};

/// How an exponent value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExponentStatus {
    /// A parameter-carrying pair of an exponential-family model.
    Free,
    /// Fixed by the free pairs through the dependency matrix.
    Determined,
    /// Measured or supplied directly for an active pair.
    Active,
    /// No context has both substitution results in the support; the value
    /// is an arbitrary convention (0).
    Inactive,
}

impl ExponentStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ExponentStatus::Free => "free",
            ExponentStatus::Determined => "determined",
            ExponentStatus::Active => "active",
            ExponentStatus::Inactive => "inactive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "free" => Some(ExponentStatus::Free),
            "determined" => Some(ExponentStatus::Determined),
            "active" => Some(ExponentStatus::Active),
            "inactive" => Some(ExponentStatus::Inactive),
            _ => None,
        }
    }
}

/// `β(y0, y1)` for every pair of a family, in pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentTable {
    pairs: PairFamily,
    values: Vec<f64>,
    status: Vec<ExponentStatus>,
}

impl ExponentTable {
    /// # Panics
    /// If the lengths of `values` or `status` differ from the family size.
    pub fn new(pairs: PairFamily, values: Vec<f64>, status: Vec<ExponentStatus>) -> Self {
        assert_eq!(pairs.len(), values.len());
        assert_eq!(pairs.len(), status.len());
        ExponentTable {
            pairs,
            values,
            status,
        }
    }

    pub fn pairs(&self) -> &PairFamily {
        &self.pairs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn status(&self, i: usize) -> ExponentStatus {
        self.status[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Skew-symmetric lookup `β(y, y')`; zero when `y == y'`, `None` when
    /// the pair is not in the family.
    pub fn between(&self, y: &Sentence, y_prime: &Sentence) -> Option<f64> {
        if y == y_prime {
            return Some(0.0);
        }
        self.pairs
            .lookup(y, y_prime)
            .map(|(i, sign)| sign * self.values[i])
    }
}
