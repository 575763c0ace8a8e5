//! Paired t-test.

use serde::{Deserialize, Serialize};

use super::descriptive::{mean, sample_std};
use super::special::student_t_two_sided;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    /// Two-sided.
    pub p_value: f64,
    pub mean_difference: f64,
    /// The differences have zero spread but a nonzero mean; t is infinite
    /// and p is reported as 0.
    pub degenerate: bool,
}

/// Paired two-sided t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Precondition(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let m = a.len();
    if m < 2 {
        return Err(Error::Precondition("paired t-test needs at least 2 pairs".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("paired sample"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let md = mean(&d);
    let sd = sample_std(&d);
    let df = m - 1;
    if sd == 0.0 {
        return Ok(if md == 0.0 {
            TTestResult {
                t_statistic: 0.0,
                degrees_of_freedom: df,
                p_value: 1.0,
                mean_difference: 0.0,
                degenerate: false,
            }
        } else {
            TTestResult {
                t_statistic: md.signum() * f64::INFINITY,
                degrees_of_freedom: df,
                p_value: 0.0,
                mean_difference: md,
                degenerate: true,
            }
        });
    }
    let t = md / (sd / (m as f64).sqrt());
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_sided(t, df as f64),
        mean_difference: md,
        degenerate: false,
    })
}
