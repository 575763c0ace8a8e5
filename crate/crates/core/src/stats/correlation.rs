//! Instance-level and experiment-level correlation summaries.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::descriptive::{dot, sample_variance, standardize};
use crate::error::{Error, Result};
use crate::model::OutcomeTensor;
use crate::par;
use crate::rng::{self, domain};

pub const DEFAULT_MAX_PAIRS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Mean pairwise Pearson correlation between instance series (each
    /// instance's correctness flattened over experiments and repetitions).
    pub corr_instance: f64,
    /// Mean pairwise Pearson correlation between experiment score series
    /// over repetitions; `None` with fewer than two experiments or when
    /// every pair is degenerate.
    pub corr_experiment: Option<f64>,
    /// Mean unbiased variance of the instance series.
    pub var_instance: f64,
    pub instance_pairs_used: usize,
    pub instance_pairs_skipped: usize,
    pub experiment_pairs_used: usize,
    pub experiment_pairs_skipped: usize,
    /// Whether instance pairs were subsampled.
    pub subsampled: bool,
}

/// Maps a linear index in `0..m(m-1)/2` to the pair `(k, l)` with `k < l`,
/// enumerating row by row.
fn unrank_pair(mut idx: usize, m: usize) -> (usize, usize) {
    let mut k = 0;
    while idx >= m - 1 - k {
        idx -= m - 1 - k;
        k += 1;
    }
    (k, k + 1 + idx)
}

/// Mean correlation over the given pairs of standardized series, plus the
/// numbers of used and skipped pairs.
fn mean_pair_corr(std: &[Option<Vec<f64>>], pairs: &[(usize, usize)]) -> (Option<f64>, usize, usize) {
    let corrs: Vec<Option<f64>> = par::map_range(pairs.len(), |p| {
        let (a, b) = pairs[p];
        match (&std[a], &std[b]) {
            (Some(x), Some(y)) => Some(dot(x, y).clamp(-1.0, 1.0)),
            _ => None,
        }
    });
    let used: Vec<f64> = corrs.into_iter().flatten().collect();
    let skipped = pairs.len() - used.len();
    if used.is_empty() {
        (None, 0, skipped)
    } else {
        (Some(used.iter().sum::<f64>() / used.len() as f64), used.len(), skipped)
    }
}

fn all_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|k| (k + 1..m).map(move |l| (k, l))).collect()
}

pub fn correlation_report(t: &OutcomeTensor, max_pairs: usize, seed: u64) -> Result<CorrelationReport> {
    let [n, r, m] = t.dims();
    if n * r < 3 {
        return Err(Error::Precondition(format!(
            "instance series need at least 3 observations, have {}",
            n * r
        )));
    }
    if r < 3 {
        return Err(Error::Precondition(format!(
            "experiment series need at least 3 repetitions, have {r}"
        )));
    }
    if m < 2 {
        return Err(Error::Precondition("need at least 2 instances".into()));
    }
    if max_pairs == 0 {
        return Err(Error::Precondition("max_pairs must be positive".into()));
    }

    let series: Vec<Vec<f64>> = par::map_range(m, |k| {
        let mut s = Vec::with_capacity(n * r);
        for i in 0..n {
            for rep in 0..r {
                s.push(t.get(i, rep, k) as f64);
            }
        }
        s
    });
    let var_instance = series.iter().map(|s| sample_variance(s)).sum::<f64>() / m as f64;
    let std_inst: Vec<Option<Vec<f64>>> = par::map_range(m, |k| standardize(&series[k]));

    let total_pairs = m * (m - 1) / 2;
    let subsampled = total_pairs > max_pairs;
    let pairs = if subsampled {
        let mut rng = rng::stream(&[domain::PAIRS, seed]);
        let mut picked = index::sample(&mut rng, total_pairs, max_pairs).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|p| unrank_pair(p, m)).collect()
    } else {
        all_pairs(m)
    };
    let (corr_instance, instance_pairs_used, instance_pairs_skipped) = mean_pair_corr(&std_inst, &pairs);
    let corr_instance = corr_instance.ok_or_else(|| {
        Error::Precondition("every instance pair has a zero-variance series".into())
    })?;

    let scores = t.score_matrix();
    let std_exp: Vec<Option<Vec<f64>>> = scores.iter().map(|s| standardize(s)).collect();
    let (corr_experiment, experiment_pairs_used, experiment_pairs_skipped) = mean_pair_corr(&std_exp, &all_pairs(n));

    Ok(CorrelationReport {
        corr_instance,
        corr_experiment,
        var_instance,
        instance_pairs_used,
        instance_pairs_skipped,
        experiment_pairs_used,
        experiment_pairs_skipped,
        subsampled,
    })
}

/// Element-wise mean of several reports (e.g. over a model population).
/// Experiment correlation is averaged over the reports that define it.
pub fn mean_report(reports: &[CorrelationReport]) -> Option<CorrelationReport> {
    if reports.is_empty() {
        return None;
    }
    let k = reports.len() as f64;
    let exp: Vec<f64> = reports.iter().filter_map(|r| r.corr_experiment).collect();
    Some(CorrelationReport {
        corr_instance: reports.iter().map(|r| r.corr_instance).sum::<f64>() / k,
        corr_experiment: (!exp.is_empty()).then(|| exp.iter().sum::<f64>() / exp.len() as f64),
        var_instance: reports.iter().map(|r| r.var_instance).sum::<f64>() / k,
        instance_pairs_used: reports.iter().map(|r| r.instance_pairs_used).sum(),
        instance_pairs_skipped: reports.iter().map(|r| r.instance_pairs_skipped).sum(),
        experiment_pairs_used: reports.iter().map(|r| r.experiment_pairs_used).sum(),
        experiment_pairs_skipped: reports.iter().map(|r| r.experiment_pairs_skipped).sum(),
        subsampled: reports.iter().any(|r| r.subsampled),
    })
}
