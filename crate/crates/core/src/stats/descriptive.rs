//! Sample moments and Pearson correlation.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (divides by `len - 1`). NaN for fewer than two
/// values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let mu = mean(x);
    x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn sample_std(x: &[f64]) -> f64 {
    sample_variance(x).sqrt()
}

/// Unbiased sample covariance of two equal-length series.
pub fn sample_covariance(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "covariance of unequal-length series");
    if x.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64
}

/// Series centered and scaled to unit Euclidean norm, or `None` when the
/// series is constant. The dot product of two such vectors is their Pearson
/// correlation.
pub fn standardize(x: &[f64]) -> Option<Vec<f64>> {
    if x.len() < 2 {
        return None;
    }
    let mu = mean(x);
    let mut c: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    // exactly constant input can leave rounding residue after centering
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if norm <= 1e-13 * scale * (x.len() as f64).sqrt() {
        return None;
    }
    for v in &mut c {
        *v /= norm;
    }
    Some(c)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pearson correlation; `None` if either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "correlation of unequal-length series");
    let (a, b) = (standardize(x)?, standardize(y)?);
    Some(dot(&a, &b).clamp(-1.0, 1.0))
}
