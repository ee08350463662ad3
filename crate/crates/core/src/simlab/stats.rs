use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Box-and-whisker summary. Whiskers reach the most extreme samples within
/// `1.5·IQR` of the quartiles (never inside the box); anything beyond is
/// listed in `outliers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

/// Quantile of sorted data with linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn boxplot_stats(samples: &[f64]) -> Result<BoxStats> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("samples contain NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |v: &&f64| **v >= lo_fence && **v <= hi_fence;
    // with interpolated quartiles the nearest inside sample can sit within the box
    let whisker_lo = sorted.iter().find(inside).map_or(q1, |v| v.min(q1));
    let whisker_hi = sorted.iter().rev().find(inside).map_or(q3, |v| v.max(q3));
    let outliers = sorted.iter().copied().filter(|v| !inside(&v)).collect();
    Ok(BoxStats { median, q1, q3, whisker_lo, whisker_hi, outliers })
}
