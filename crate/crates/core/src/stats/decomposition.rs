//! Three-term decomposition of the variance of the overall mean score.
//!
//! With `f_ik` the correctness of instance `k` in experiment `i`, `A_i` the
//! experiment mean and `A` the mean over experiments,
//!
//! ```text
//! Var(A) = 1/(n^2 m^2) sum_i sum_k Var(f_ik)
//!        + 1/(n^2 m^2) sum_i sum_{k<l} 2 Cov(f_ik, f_il)
//!        + 1/n^2       sum_{i<j} 2 Cov(A_i, A_j)
//! ```
//!
//! Every variance and covariance is the unbiased sample statistic over the
//! repetition axis, so the three terms add up to the sample variance of `A`
//! over repetitions up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OutcomeTensor;
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub term_variance: f64,
    pub term_instance_cov: f64,
    pub term_experiment_cov: f64,
    pub total: f64,
    pub direct_estimate: f64,
    pub n: usize,
    pub r: usize,
    pub m: usize,
}

/// Per-experiment sums over instances and instance pairs of the centered
/// cross-products, divided by `r - 1`.
fn experiment_terms(t: &OutcomeTensor, i: usize) -> (f64, f64) {
    let [_, r, m] = t.dims();
    let means: Vec<f64> = (0..m)
        .map(|k| (0..r).map(|rep| t.get(i, rep, k) as f64).sum::<f64>() / r as f64)
        .collect();
    // centered[k][rep]
    let centered: Vec<Vec<f64>> = (0..m)
        .map(|k| (0..r).map(|rep| t.get(i, rep, k) as f64 - means[k]).collect())
        .collect();
    let denom = (r - 1) as f64;
    let mut var_sum = 0.0;
    let mut cov_sum = 0.0;
    for k in 0..m {
        let ck = &centered[k];
        var_sum += ck.iter().map(|x| x * x).sum::<f64>() / denom;
        for cl in &centered[k + 1..] {
            cov_sum += 2.0 * ck.iter().zip(cl).map(|(a, b)| a * b).sum::<f64>() / denom;
        }
    }
    (var_sum, cov_sum)
}

pub fn decompose_variance(t: &OutcomeTensor) -> Result<VarianceDecomposition> {
    let [n, r, m] = t.dims();
    if r < 2 {
        return Err(Error::Precondition(format!(
            "variance decomposition needs at least 2 repetitions, got {r}"
        )));
    }
    if n == 0 || m == 0 {
        return Err(Error::Precondition("empty outcome tensor".into()));
    }
    let per_exp = par::map_range(n, |i| experiment_terms(t, i));
    let nm2 = (n * n * m * m) as f64;
    let term_variance = per_exp.iter().map(|p| p.0).sum::<f64>() / nm2;
    let term_instance_cov = per_exp.iter().map(|p| p.1).sum::<f64>() / nm2;

    // experiment score series over repetitions
    let scores = t.score_matrix();
    let denom = (r - 1) as f64;
    let centered: Vec<Vec<f64>> = scores
        .iter()
        .map(|s| {
            let mu = s.iter().sum::<f64>() / r as f64;
            s.iter().map(|x| x - mu).collect()
        })
        .collect();
    let mut exp_cov = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            exp_cov += 2.0 * centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>() / denom;
        }
    }
    let term_experiment_cov = exp_cov / (n * n) as f64;

    let grand: Vec<f64> = (0..r)
        .map(|rep| scores.iter().map(|s| s[rep]).sum::<f64>() / n as f64)
        .collect();
    let direct_estimate = super::descriptive::sample_variance(&grand);

    Ok(VarianceDecomposition {
        term_variance,
        term_instance_cov,
        term_experiment_cov,
        total: term_variance + term_instance_cov + term_experiment_cov,
        direct_estimate,
        n,
        r,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::meta;
    use proptest::prelude::*;

    #[test]
    fn constant_tensor_all_zero() {
        let t = OutcomeTensor::from_fn(meta(), [3, 4, 5], |_, _, _| 1).unwrap();
        let d = decompose_variance(&t).unwrap();
        assert_eq!(d.term_variance, 0.0);
        assert_eq!(d.term_instance_cov, 0.0);
        assert_eq!(d.term_experiment_cov, 0.0);
        assert_eq!(d.total, 0.0);
        assert_eq!(d.direct_estimate, 0.0);
    }

    #[test]
    fn hand_computed_two_by_two() {
        // rep1 = [1, 0], rep2 = [0, 1]: Var(f_0) = Var(f_1) = 0.5,
        // Cov(f_0, f_1) = -0.5; A = 0.5 in both repetitions
        let t = OutcomeTensor::new(meta(), [1, 2, 2], vec![1, 0, 0, 1]).unwrap();
        let d = decompose_variance(&t).unwrap();
        assert!((d.term_variance - (0.5 + 0.5) / 4.0).abs() < 1e-15);
        assert!((d.term_instance_cov - 2.0 * -0.5 / 4.0).abs() < 1e-15);
        assert_eq!(d.term_experiment_cov, 0.0);
        assert!(d.total.abs() < 1e-15);
        assert_eq!(d.direct_estimate, 0.0);
    }

    #[test]
    fn needs_two_repetitions() {
        let t = OutcomeTensor::from_fn(meta(), [2, 1, 3], |_, _, _| 0).unwrap();
        assert!(matches!(decompose_variance(&t), Err(Error::Precondition(_))));
    }

    fn tensor() -> impl Strategy<Value = OutcomeTensor> {
        (1usize..5, 2usize..7, 1usize..11).prop_flat_map(|(n, r, m)| {
            prop::collection::vec(0u8..2, n * r * m)
                .prop_map(move |v| OutcomeTensor::new(meta(), [n, r, m], v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn identity_holds(t in tensor()) {
            let d = decompose_variance(&t).unwrap();
            let tol = 1e-10 * d.direct_estimate.abs().max(1e-12);
            prop_assert!((d.total - d.direct_estimate).abs() <= tol.max(1e-15),
                "total {} direct {}", d.total, d.direct_estimate);
        }
    }

    #[test]
    fn random_4x6x10_against_brute_force() {
        // direct variance computed from scratch: per repetition average all
        // n*m cells, then the unbiased variance over repetitions
        use rand::Rng;
        let mut rng = crate::rng::stream(&[77]);
        let t = OutcomeTensor::from_fn(meta(), [4, 6, 10], |_, _, _| rng.random_range(0..2u8)).unwrap();
        let d = decompose_variance(&t).unwrap();
        let per_rep: Vec<f64> = (0..6)
            .map(|r| {
                let mut s = 0.0;
                for i in 0..4 {
                    for k in 0..10 {
                        s += t.get(i, r, k) as f64;
                    }
                }
                s / 40.0
            })
            .collect();
        let mu = per_rep.iter().sum::<f64>() / 6.0;
        let brute = per_rep.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / 5.0;
        assert!((d.direct_estimate - brute).abs() <= 1e-12);
        assert!((d.total - brute).abs() <= 1e-10 * brute.max(1e-12));
    }
}
