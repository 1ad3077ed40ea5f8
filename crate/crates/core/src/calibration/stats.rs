use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::CalibrationError;

pub const KS_MIN_SAMPLES: usize = 8;

/// Sample mean and (n − 1) standard deviation, two-pass.
pub(crate) fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub pass: bool,
    pub n: usize,
}

/// Asymptotic two-sided critical coefficient, `sqrt(-ln(α/2) / 2)`;
/// 1.358 at α = 0.05.
fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// One-sample K-S test against a Gaussian with the sample's own mean and
/// standard deviation. Passing means normality is not rejected.
///
/// Fitting the parameters from the same sample makes the asymptotic
/// critical value conservative: true Gaussian samples pass more often than
/// `1 − α`.
pub fn ks_gaussian_test(samples: &[f64], alpha: f64) -> Result<KsResult, CalibrationError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(CalibrationError::InsufficientData { got: samples.len(), need: KS_MIN_SAMPLES });
    }
    let (mean, std) = mean_std(samples);
    if !(std > 0.0) {
        return Err(CalibrationError::DegenerateData);
    }
    ks_test_against(samples, mean, std, alpha)
}

/// One-sample K-S test against `N(mean, std²)` with known parameters.
pub fn ks_test_against(samples: &[f64], mean: f64, std: f64, alpha: f64) -> Result<KsResult, CalibrationError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(CalibrationError::InsufficientData { got: samples.len(), need: KS_MIN_SAMPLES });
    }
    let dist = Normal::new(mean, std).map_err(|_| CalibrationError::DegenerateData)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = dist.cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    });
    let critical_value = ks_coefficient(alpha) / n.sqrt();
    Ok(KsResult { statistic, critical_value, pass: statistic < critical_value, n: sorted.len() })
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CalibrationError> {
    if x.len() != y.len() {
        return Err(CalibrationError::UndefinedCorrelation("series lengths differ"));
    }
    if x.len() < 2 {
        return Err(CalibrationError::UndefinedCorrelation("need at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CalibrationError::UndefinedCorrelation("constant series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
