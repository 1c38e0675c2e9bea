use serde::{Deserialize, Serialize};

use super::LshError;

/// Step of the numerical integration used to score band plans.
pub const INTEGRATION_STEP: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPlan {
    pub bands: usize,
    pub rows: usize,
    pub threshold: f64,
}

impl BandPlan {
    /// Signature slots consumed by the plan.
    pub fn slots(&self) -> usize {
        self.bands * self.rows
    }
}

/// `1 - (1 - s^rows)^bands`: chance that two sets at similarity `s` share a bucket.
pub fn candidate_probability(s: f64, plan: &BandPlan) -> f64 {
    1.0 - (1.0 - s.powi(plan.rows as i32)).powi(plan.bands as i32)
}

fn trapezoid(from: f64, to: f64, f: impl Fn(f64) -> f64) -> f64 {
    let steps = ((to - from) / INTEGRATION_STEP).round().max(1.0) as usize;
    let h = (to - from) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(from + i as f64 * h)).sum();
    h * (0.5 * (f(from) + f(to)) + inner)
}

/// Equal-weight sum of the false-positive area below `threshold` and the
/// false-negative area above it.
pub fn plan_error(threshold: f64, bands: usize, rows: usize) -> f64 {
    let plan = BandPlan { bands, rows, threshold };
    let fp = trapezoid(0.0, threshold, |s| candidate_probability(s, &plan));
    let fn_ = trapezoid(threshold, 1.0, |s| 1.0 - candidate_probability(s, &plan));
    0.5 * fp + 0.5 * fn_
}

/// Picks the `(bands, rows)` with `bands * rows <= k` minimising
/// [`plan_error`]. Ties go to fewer rows, then fewer bands.
pub fn optimal_bands(threshold: f64, k: usize) -> Result<BandPlan, LshError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(LshError::InvalidThreshold(threshold));
    }
    if k < 2 {
        return Err(LshError::InvalidK(k));
    }
    let mut best = (f64::INFINITY, 0, 0);
    for rows in 1..=k {
        for bands in 1..=k / rows {
            let err = plan_error(threshold, bands, rows);
            if err < best.0 {
                best = (err, bands, rows);
            }
        }
    }
    Ok(BandPlan { bands: best.1, rows: best.2, threshold })
}
