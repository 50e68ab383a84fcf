use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{DwtError, Result};

/// Sample statistics of one tracked quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance; NaN below two samples.
    pub variance: f64,
    /// `sqrt(variance / count)`.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl StatSummary {
    pub fn from_values(values: &[f64], keep_values: bool) -> Self {
        let count = values.len() as u64;
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = if count >= 2 {
            values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::NAN
        };
        Self {
            count,
            mean,
            variance,
            stderr: (variance / n).sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            values: keep_values.then(|| values.to_vec()),
        }
    }
}

/// Least-squares fit of `ln depth = slope · ln n + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

pub fn estimate_beta(series: &[(f64, f64)]) -> Result<BetaFit> {
    if series.len() < 3 {
        return Err(DwtError::Domain(format!("need at least 3 points, got {}", series.len())));
    }
    if series.iter().any(|&(n, d)| !(n > 0.0 && d > 0.0)) {
        return Err(DwtError::Domain("log-log fit needs positive n and depth".into()));
    }
    let pts: Vec<(f64, f64)> = series.iter().map(|&(n, d)| (n.ln(), d.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DwtError::Domain("log-log fit needs at least two distinct n".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    Ok(BetaFit { slope, intercept, residual })
}

/// Centered 3-point moving average; the two end points average over the
/// available neighbours.
pub fn smooth3(values: &[f64]) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(values.len() - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test on histograms over the same bins.
/// Adjacent bins are merged from the left until each pooled bin holds at
/// least 10 observations; a short remainder joins the last pooled bin.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> ChiSquareTest {
    let len = a.len().max(b.len());
    let get = |h: &[u64], i: usize| h.get(i).copied().unwrap_or(0) as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0);
    for i in 0..len {
        cur.0 += get(a, i);
        cur.1 += get(b, i);
        if cur.0 + cur.1 >= 10.0 {
            bins.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if cur.0 + cur.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += cur.0;
                last.1 += cur.1;
            }
            None => bins.push(cur),
        }
    }
    let na: f64 = bins.iter().map(|b| b.0).sum();
    let nb: f64 = bins.iter().map(|b| b.1).sum();
    let total = na + nb;
    let mut statistic = 0.0;
    for &(oa, ob) in &bins {
        let row = oa + ob;
        let (ea, eb) = (row * na / total, row * nb / total);
        statistic += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let df = bins.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).expect("positive degrees of freedom").sf(statistic)
    };
    ChiSquareTest { statistic, df, p_value }
}

/// Histogram of non-negative integer observations.
pub fn histogram(values: impl IntoIterator<Item = u64>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        let v = v as usize;
        if v >= h.len() {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}
