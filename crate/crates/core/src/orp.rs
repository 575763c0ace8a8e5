//! Observed reversal probability (ORP).
//!
//! If the observed score difference between models A and B is normal with
//! mean `delta` (the true difference) and standard deviation
//! `sigma_diff = sqrt(sA^2 + sB^2 - 2 rho sA sB)`, the probability that the
//! observed ranking contradicts the true one is `Phi(-|delta| / sigma_diff)`.
//! Its curve over `delta` in `[0, delta_max]` is summarized by the area
//! under it: smaller is more stable.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::rng::{self, domain};
use crate::stats::descriptive::{pearson, sample_std};
use crate::stats::special::{normal_quantile, phi};

pub use crate::stats::special::std_normal_cdf;

pub const DEFAULT_DELTA_MAX: f64 = 0.10;
pub const DEFAULT_STEPS: usize = 200;
pub const CONFIDENCE_ALPHAS: [f64; 3] = [0.10, 0.05, 0.01];

/// A model's score series over paired runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelScoreStats {
    pub model_id: String,
    pub scores: Vec<f64>,
    pub sigma: f64,
}

impl ModelScoreStats {
    pub fn new(model_id: impl Into<String>, scores: Vec<f64>) -> Result<Self> {
        if scores.len() < 3 {
            return Err(Error::Precondition(format!(
                "score series needs at least 3 runs, has {}",
                scores.len()
            )));
        }
        if scores.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("score"));
        }
        let sigma = sample_std(&scores);
        Ok(ModelScoreStats {
            model_id: model_id.into(),
            scores,
            sigma,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrpPoint {
    pub value: f64,
    /// `sigma_diff` is 0 and `delta` is 0; the value is defined as 0.5.
    pub degenerate: bool,
}

pub fn sigma_diff(sigma_a: f64, sigma_b: f64, rho: f64) -> f64 {
    (sigma_a * sigma_a + sigma_b * sigma_b - 2.0 * rho * sigma_a * sigma_b)
        .max(0.0)
        .sqrt()
}

fn check_params(sigma_a: f64, sigma_b: f64, rho: f64) -> Result<()> {
    if !sigma_a.is_finite() || !sigma_b.is_finite() || !rho.is_finite() {
        return Err(Error::NonFinite("ORP parameter"));
    }
    if sigma_a < 0.0 || sigma_b < 0.0 {
        return Err(Error::Precondition("standard deviations must be non-negative".into()));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Precondition(format!("rho {rho} outside [-1, 1]")));
    }
    Ok(())
}

fn orp_at(delta: f64, sd: f64) -> OrpPoint {
    if sd == 0.0 {
        return if delta == 0.0 {
            OrpPoint {
                value: 0.5,
                degenerate: true,
            }
        } else {
            OrpPoint {
                value: 0.0,
                degenerate: false,
            }
        };
    }
    OrpPoint {
        value: phi(-delta.abs() / sd),
        degenerate: false,
    }
}

pub fn orp_point(delta: f64, sigma_a: f64, sigma_b: f64, rho: f64) -> Result<OrpPoint> {
    check_params(sigma_a, sigma_b, rho)?;
    if !delta.is_finite() {
        return Err(Error::NonFinite("delta"));
    }
    Ok(orp_at(delta, sigma_diff(sigma_a, sigma_b, rho)))
}

/// Monte Carlo estimate of the reversal probability: draws correlated
/// fluctuations for both models and counts how often the observed
/// difference has the opposite sign of `delta` (for `delta = 0`, how often
/// it is negative).
pub fn orp_monte_carlo(delta: f64, sigma_a: f64, sigma_b: f64, rho: f64, draws: usize, seed: u64) -> Result<f64> {
    check_params(sigma_a, sigma_b, rho)?;
    const CHUNK: usize = 1 << 16;
    let chunks = draws.div_ceil(CHUNK);
    let key_delta = delta.to_bits();
    let counts = par::map_range(chunks, |c| {
        let mut rng = rng::stream(&[
            domain::MONTE_CARLO,
            seed,
            key_delta,
            sigma_a.to_bits(),
            sigma_b.to_bits(),
            rho.to_bits(),
            c as u64,
        ]);
        let len = CHUNK.min(draws - c * CHUNK);
        let orth = (1.0 - rho * rho).max(0.0).sqrt();
        let mut reversed = 0usize;
        for _ in 0..len {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let xa = sigma_a * z1;
            let xb = sigma_b * (rho * z1 + orth * z2);
            let observed = delta + xa - xb;
            let rev = if delta == 0.0 { observed < 0.0 } else { delta * observed < 0.0 };
            reversed += rev as usize;
        }
        reversed
    });
    Ok(counts.iter().sum::<usize>() as f64 / draws as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// e.g. 0.95
    pub confidence: f64,
    pub alpha: f64,
    /// Smallest true difference whose reversal probability is at most alpha.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrpCurve {
    pub model_a: String,
    pub model_b: String,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub rho: f64,
    /// Correlation was undefined (a constant series) and 0 was used.
    pub rho_fallback: bool,
    pub sigma_diff: f64,
    pub delta_max: f64,
    pub steps: usize,
    pub deltas: Vec<f64>,
    pub orp: Vec<f64>,
    pub auc: f64,
    pub thresholds: Vec<Threshold>,
}

/// Grid rows for CSV output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub delta: f64,
    pub orp: f64,
}

/// Parameters written next to a curve's CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSidecar {
    pub model_a: String,
    pub model_b: String,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub rho: f64,
    pub rho_fallback: bool,
    pub sigma_diff: f64,
    pub auc: f64,
    pub thresholds: Vec<Threshold>,
    pub delta_max: f64,
    pub steps: usize,
}

impl OrpCurve {
    pub fn rows(&self) -> Vec<CurveRow> {
        self.deltas
            .iter()
            .zip(&self.orp)
            .map(|(&delta, &orp)| CurveRow { delta, orp })
            .collect()
    }

    pub fn sidecar(&self) -> CurveSidecar {
        CurveSidecar {
            model_a: self.model_a.clone(),
            model_b: self.model_b.clone(),
            sigma_a: self.sigma_a,
            sigma_b: self.sigma_b,
            rho: self.rho,
            rho_fallback: self.rho_fallback,
            sigma_diff: self.sigma_diff,
            auc: self.auc,
            thresholds: self.thresholds.clone(),
            delta_max: self.delta_max,
            steps: self.steps,
        }
    }
}

fn check_grid(delta_max: f64, steps: usize) -> Result<()> {
    if steps < 2 {
        return Err(Error::Precondition(format!("steps must be at least 2, got {steps}")));
    }
    if !(delta_max > 0.0 && delta_max.is_finite()) {
        return Err(Error::Precondition("delta_max must be positive".into()));
    }
    Ok(())
}

/// Curve from explicit parameters.
pub fn orp_curve_from_params(
    sigma_a: f64,
    sigma_b: f64,
    rho: f64,
    delta_max: f64,
    steps: usize,
) -> Result<OrpCurve> {
    check_params(sigma_a, sigma_b, rho)?;
    check_grid(delta_max, steps)?;
    let sd = sigma_diff(sigma_a, sigma_b, rho);
    let deltas: Vec<f64> = (0..=steps).map(|j| delta_max * j as f64 / steps as f64).collect();
    let orp: Vec<f64> = deltas.iter().map(|&d| orp_at(d, sd).value).collect();
    let h = delta_max / steps as f64;
    let auc = h * (orp.iter().sum::<f64>() - 0.5 * (orp[0] + orp[steps]));
    let thresholds = CONFIDENCE_ALPHAS
        .iter()
        .map(|&alpha| Threshold {
            confidence: 1.0 - alpha,
            alpha,
            delta: normal_quantile(1.0 - alpha) * sd,
        })
        .collect();
    Ok(OrpCurve {
        model_a: String::new(),
        model_b: String::new(),
        sigma_a,
        sigma_b,
        rho,
        rho_fallback: false,
        sigma_diff: sd,
        delta_max,
        steps,
        deltas,
        orp,
        auc,
        thresholds,
    })
}

/// Curve between two models whose scores share a run axis.
pub fn orp_curve(a: &ModelScoreStats, b: &ModelScoreStats, delta_max: f64, steps: usize) -> Result<OrpCurve> {
    if a.scores.len() != b.scores.len() {
        return Err(Error::Precondition(format!(
            "unpaired series: {} has {} runs, {} has {}",
            a.model_id,
            a.scores.len(),
            b.model_id,
            b.scores.len()
        )));
    }
    let (rho, rho_fallback) = match pearson(&a.scores, &b.scores) {
        Some(r) => (r, false),
        None => (0.0, true),
    };
    let mut c = orp_curve_from_params(a.sigma, b.sigma, rho, delta_max, steps)?;
    c.model_a = a.model_id.clone();
    c.model_b = b.model_id.clone();
    c.rho_fallback = rho_fallback;
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucMatrix {
    pub models: Vec<String>,
    pub auc: Vec<Vec<f64>>,
    /// Mean over off-diagonal entries.
    pub mean_auc: f64,
    pub delta_max: f64,
    pub steps: usize,
}

pub fn orp_auc_matrix(models: &[ModelScoreStats], delta_max: f64, steps: usize) -> Result<AucMatrix> {
    if models.len() < 2 {
        return Err(Error::Precondition("ORP needs at least 2 models".into()));
    }
    let k = models.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let curves = par::try_map_range(pairs.len(), |p| {
        let (a, b) = pairs[p];
        orp_curve(&models[a], &models[b], delta_max, steps).map(|c| c.auc)
    })?;
    let mut auc = vec![vec![0.0; k]; k];
    for (&(a, b), &v) in pairs.iter().zip(&curves) {
        auc[a][b] = v;
        auc[b][a] = v;
    }
    Ok(AucMatrix {
        models: models.iter().map(|m| m.model_id.clone()).collect(),
        mean_auc: curves.iter().sum::<f64>() / curves.len() as f64,
        auc,
        delta_max,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_delta_is_coin_flip() {
        assert_eq!(orp_point(0.0, 0.02, 0.03, 0.1).unwrap().value, 0.5);
        let p = orp_point(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(p.value, 0.5);
        assert!(p.degenerate);
    }

    #[test]
    fn one_sigma_point_against_monte_carlo() {
        let sd = sigma_diff(0.02, 0.02, 0.0);
        assert!((sd - 0.028284271247461905).abs() < 1e-15);
        let closed = orp_point(sd, 0.02, 0.02, 0.0).unwrap().value;
        assert!((closed - 0.15865525393145707).abs() < 1e-12);
        let mc = orp_monte_carlo(sd, 0.02, 0.02, 0.0, 10_000_000, 1).unwrap();
        // binomial sd at 1e7 draws is about 1.2e-4
        assert!((mc - closed).abs() < 6e-4, "mc {mc}");
    }

    #[test]
    fn perfectly_correlated_never_reverses() {
        assert_eq!(orp_point(0.001, 0.03, 0.03, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(orp_point(0.1, -0.1, 0.1, 0.0).is_err());
        assert!(orp_point(0.1, 0.1, 0.1, 1.5).is_err());
        assert!(orp_point(f64::NAN, 0.1, 0.1, 0.0).is_err());
    }

    #[test]
    fn auc_against_quadrature() {
        // closed form sd = 0.02 via sigma_a = 0.02, sigma_b = 0
        let c = orp_curve_from_params(0.02, 0.0, 0.0, 0.1, 200).unwrap();
        // Simpson oracle on a fine grid of Phi(-d/0.02)
        let n = 20_000;
        let h = 0.1 / n as f64;
        let f = |d: f64| 0.5 * libm::erfc(d / 0.02 / std::f64::consts::SQRT_2);
        let mut s = f(0.0) + f(0.1);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = s * h / 3.0;
        // trapezoid with h = 5e-4 on a convex integrand: error about h^2/12 * f'(0)
        assert!((c.auc - oracle).abs() < 1e-6, "auc {} oracle {oracle}", c.auc);
        assert!((oracle - 0.02 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn thresholds_at_confidence_levels() {
        let c = orp_curve_from_params(0.02, 0.0, 0.0, 0.1, 200).unwrap();
        let t95 = c.thresholds.iter().find(|t| t.alpha == 0.05).unwrap();
        assert!((t95.delta - 1.6448536269514722 * 0.02).abs() < 1e-12);
        for t in &c.thresholds {
            let v = orp_point(t.delta, 0.02, 0.0, 0.0).unwrap().value;
            assert!((v - t.alpha).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_series_zero_curve() {
        let a = ModelScoreStats::new("a", vec![0.5, 0.6, 0.7, 0.55]).unwrap();
        let c = orp_curve(&a, &a, 0.1, 50).unwrap();
        assert_eq!(c.orp[0], 0.5);
        assert!(c.orp[1..].iter().all(|&v| v == 0.0));
        assert_eq!(c.deltas.len(), 51);
        // only the first trapezoid is non-zero
        assert!((c.auc - 0.5 * 0.5 * 0.1 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn unpaired_rejected() {
        let a = ModelScoreStats::new("a", vec![0.5, 0.6, 0.7]).unwrap();
        let b = ModelScoreStats::new("b", vec![0.5, 0.6, 0.7, 0.8]).unwrap();
        assert!(orp_curve(&a, &b, 0.1, 10).is_err());
    }

    #[test]
    fn constant_series_rho_fallback() {
        let a = ModelScoreStats::new("a", vec![0.5, 0.5, 0.5]).unwrap();
        let b = ModelScoreStats::new("b", vec![0.5, 0.6, 0.7]).unwrap();
        let c = orp_curve(&a, &b, 0.1, 10).unwrap();
        assert!(c.rho_fallback);
        assert_eq!(c.rho, 0.0);
    }

    #[test]
    fn matrix_symmetry() {
        let ms: Vec<_> = (0..4)
            .map(|i| {
                ModelScoreStats::new(
                    format!("m{i}"),
                    (0..10).map(|r| 0.5 + 0.01 * ((r * (i + 2)) % 7) as f64).collect(),
                )
                .unwrap()
            })
            .collect();
        let m = orp_auc_matrix(&ms, 0.1, 200).unwrap();
        for a in 0..4 {
            assert_eq!(m.auc[a][a], 0.0);
            for b in 0..4 {
                assert_eq!(m.auc[a][b], m.auc[b][a]);
            }
        }
        assert!(orp_auc_matrix(&ms[..1], 0.1, 200).is_err());
    }

    proptest! {
        #[test]
        fn shape_properties(d in 0.0f64..0.2, sa in 0.001f64..0.1, sb in 0.001f64..0.1, rho in -1.0f64..1.0) {
            let p = orp_point(d, sa, sb, rho).unwrap().value;
            prop_assert!((0.0..=0.5).contains(&p));
            // even in delta
            prop_assert_eq!(p, orp_point(-d, sa, sb, rho).unwrap().value);
            // non-increasing in |delta|
            prop_assert!(orp_point(d + 0.01, sa, sb, rho).unwrap().value <= p);
            // non-increasing in rho
            let r2 = (rho + 0.1).min(1.0);
            prop_assert!(orp_point(d, sa, sb, r2).unwrap().value <= p + 1e-15);
        }

        #[test]
        fn increasing_in_sigma_at_nonpositive_rho(d in 0.001f64..0.2, sa in 0.001f64..0.1, sb in 0.001f64..0.1, rho in -1.0f64..0.0) {
            let p = orp_point(d, sa, sb, rho).unwrap().value;
            prop_assert!(orp_point(d, sa * 1.1, sb, rho).unwrap().value >= p);
            prop_assert!(orp_point(d, sa, sb * 1.1, rho).unwrap().value >= p);
        }

        #[test]
        fn auc_monotone_in_sigma_diff(s1 in 0.001f64..0.1, s2 in 0.001f64..0.1) {
            let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            let a = orp_curve_from_params(lo, 0.0, 0.0, 0.1, 200).unwrap();
            let b = orp_curve_from_params(hi, 0.0, 0.0, 0.1, 200).unwrap();
            prop_assert!(a.auc <= b.auc);
            prop_assert!(b.auc <= 0.5 * 0.1);
        }
    }
}
