//! Pairwise Pearson correlation between models' score series.

use serde::{Deserialize, Serialize};

use super::descriptive::pearson;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub models: Vec<String>,
    /// `None` where a series has zero variance.
    pub entries: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        self.entries[a][b]
    }
}

/// Entry (a, b) is the Pearson correlation of the two models' scores over a
/// shared run axis; the diagonal is 1.
pub fn model_correlation_matrix(per_model: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    let runs = per_model
        .first()
        .map(|(_, s)| s.len())
        .ok_or_else(|| Error::Precondition("no models".into()))?;
    if per_model.iter().any(|(_, s)| s.len() != runs) {
        return Err(Error::Precondition("models do not share a run axis".into()));
    }
    if runs < 3 {
        return Err(Error::Precondition(format!("need at least 3 runs, have {runs}")));
    }
    let k = per_model.len();
    let mut entries = vec![vec![None; k]; k];
    for a in 0..k {
        entries[a][a] = Some(1.0);
        for b in a + 1..k {
            let c = pearson(&per_model[a].1, &per_model[b].1);
            entries[a][b] = c;
            entries[b][a] = c;
        }
    }
    Ok(CorrelationMatrix {
        models: per_model.iter().map(|(id, _)| id.clone()).collect(),
        entries,
    })
}
