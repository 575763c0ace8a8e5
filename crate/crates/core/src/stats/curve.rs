//! Standard deviation of the n-experiment mean as a function of n.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::descriptive::{mean, sample_covariance, sample_std, sample_variance};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{self, domain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    /// Mean over selections of the std (over repetitions) of the n-mean.
    pub mean_std: f64,
    /// Sample std of those stds across selections (0 with one selection).
    pub std_of_std: f64,
    pub selections: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub points: Vec<CurvePoint>,
}

impl VarianceCurve {
    /// Smallest n whose mean std is below `target`.
    pub fn n_to_target(&self, target: f64) -> Option<usize> {
        self.points.iter().find(|p| p.mean_std < target).map(|p| p.n)
    }

    /// Point-wise mean of curves with the same n grid.
    pub fn average(curves: &[VarianceCurve]) -> Option<VarianceCurve> {
        let first = curves.first()?;
        let k = curves.len() as f64;
        let points = first
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| CurvePoint {
                n: p.n,
                mean_std: curves.iter().map(|c| c.points[i].mean_std).sum::<f64>() / k,
                std_of_std: curves.iter().map(|c| c.points[i].std_of_std).sum::<f64>() / k,
                selections: p.selections,
            })
            .collect();
        Some(VarianceCurve { points })
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All k-subsets of 0..n in lexicographic order.
fn all_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn std_of_mean(scores: &[Vec<f64>], subset: &[usize], r: usize) -> f64 {
    let avg: Vec<f64> = (0..r)
        .map(|rep| subset.iter().map(|&i| scores[i][rep]).sum::<f64>() / subset.len() as f64)
        .collect();
    sample_std(&avg)
}

fn check_matrix(scores: &[Vec<f64>]) -> Result<usize> {
    let r = scores
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Precondition("no experiments".into()))?;
    if scores.iter().any(|s| s.len() != r) {
        return Err(Error::Precondition("experiments differ in repetition count".into()));
    }
    if r < 2 {
        return Err(Error::Precondition(format!("need at least 2 repetitions, have {r}")));
    }
    if scores.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("score"));
    }
    Ok(r)
}

/// For each n in 1..=n_max: draw `n_selections` subsets of n experiments
/// without replacement, average their scores per repetition and take the
/// sample std over repetitions; report the mean and std of those stds.
///
/// When `n_selections` is at least the number of distinct n-subsets, every
/// subset is used exactly once instead of sampling.
pub fn variance_vs_n(scores: &[Vec<f64>], n_max: usize, n_selections: usize, seed: u64) -> Result<VarianceCurve> {
    let r = check_matrix(scores)?;
    let n_total = scores.len();
    if n_max == 0 || n_max > n_total {
        return Err(Error::Precondition(format!(
            "n_max must lie in 1..={n_total}, got {n_max}"
        )));
    }
    if n_selections == 0 {
        return Err(Error::Precondition("n_selections must be positive".into()));
    }
    let points = par::map_range(n_max, |idx| {
        let n = idx + 1;
        let exhaustive = binomial(n_total, n).filter(|&c| c <= n_selections);
        let stds: Vec<f64> = match exhaustive {
            Some(_) => all_subsets(n_total, n)
                .iter()
                .map(|s| std_of_mean(scores, s, r))
                .collect(),
            None => (0..n_selections)
                .map(|s| {
                    let mut rng = rng::stream(&[domain::SELECTION, seed, n as u64, s as u64]);
                    let subset = index::sample(&mut rng, n_total, n).into_vec();
                    std_of_mean(scores, &subset, r)
                })
                .collect(),
        };
        CurvePoint {
            n,
            mean_std: mean(&stds),
            std_of_std: if stds.len() > 1 { sample_std(&stds) } else { 0.0 },
            selections: stds.len(),
        }
    });
    Ok(VarianceCurve { points })
}

/// Mean-form view of the variance of the n-experiment mean:
/// `(V - C)/n + C` with V the mean per-experiment variance and C the mean
/// covariance over ordered pairs of distinct experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanForm {
    pub n: usize,
    pub v_bar: f64,
    pub c_bar: f64,
    pub mean_form: f64,
    pub direct: f64,
}

pub fn mean_form(scores: &[Vec<f64>]) -> Result<MeanForm> {
    let r = check_matrix(scores)?;
    let n = scores.len();
    let v_bar = scores.iter().map(|s| sample_variance(s)).sum::<f64>() / n as f64;
    let c_bar = if n > 1 {
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum += sample_covariance(&scores[i], &scores[j]);
                }
            }
        }
        sum / (n * (n - 1)) as f64
    } else {
        0.0
    };
    let avg: Vec<f64> = (0..r)
        .map(|rep| scores.iter().map(|s| s[rep]).sum::<f64>() / n as f64)
        .collect();
    Ok(MeanForm {
        n,
        v_bar,
        c_bar,
        mean_form: (v_bar - c_bar) / n as f64 + c_bar,
        direct: sample_variance(&avg),
    })
}
