//! Cohen's kappa for two annotators labelling the same items.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaStatus {
    Defined,
    /// Both annotators used one and the same category throughout; kappa is reported as 1.
    Degenerate,
    /// Chance agreement is 1 but observed agreement is not; kappa has no value.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub criterion: String,
    pub n: usize,
    pub agreements: usize,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub kappa: Option<f64>,
    pub status: KappaStatus,
}

impl KappaReport {
    pub fn with_criterion(mut self, criterion: impl Into<String>) -> Self {
        self.criterion = criterion.into();
        self
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KappaError {
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no items to compare")]
    Empty,
}

/// κ = (p_o − p_e) / (1 − p_e), with p_e from the two annotators' marginals.
///
/// Counts stay integral until the final division, so the degenerate case
/// p_e = 1 is detected exactly.
pub fn cohens_kappa<L: Eq + Hash>(a: &[L], b: &[L]) -> Result<KappaReport, KappaError> {
    if a.len() != b.len() {
        return Err(KappaError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(KappaError::Empty);
    }
    let n = a.len() as u128;
    let agreements = a.iter().zip(b).filter(|(x, y)| x == y).count();
    let mut marginals: HashMap<&L, (u128, u128)> = HashMap::new();
    for x in a {
        marginals.entry(x).or_default().0 += 1;
    }
    for y in b {
        marginals.entry(y).or_default().1 += 1;
    }
    let chance: u128 = marginals.values().map(|(ca, cb)| ca * cb).sum();
    let n2 = n * n;
    let observed = agreements as u128 * n;
    let (kappa, status) = if chance == n2 {
        if observed == n2 {
            (Some(1.0), KappaStatus::Degenerate)
        } else {
            (None, KappaStatus::Undefined)
        }
    } else {
        let num = observed as f64 - chance as f64;
        let den = n2 as f64 - chance as f64;
        (Some(num / den), KappaStatus::Defined)
    };
    Ok(KappaReport {
        criterion: String::new(),
        n: a.len(),
        agreements,
        observed_agreement: agreements as f64 / a.len() as f64,
        expected_agreement: chance as f64 / n2 as f64,
        kappa,
        status,
    })
}
