//! Uniform scaled-time grids.

use crate::error::{Error, Result};

/// `τⱼ = j·step` for `j = 0, 1, …` up to and including `tau_max`
/// (with a relative slack of 1e-9 steps on the last point).
pub fn uniform(tau_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Argument(format!("grid step must be positive, got {step}")));
    }
    if !(tau_max.is_finite() && tau_max >= 0.0) {
        return Err(Error::Argument(format!("grid end must be non-negative, got {tau_max}")));
    }
    let count = (tau_max / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|j| j as f64 * step).collect())
}

/// `count` points spread evenly over `[0, end]`, both ends included.
pub fn linspace(end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|j| end * j as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Largest gap between consecutive grid points; 0 for fewer than two points.
pub fn max_step(taus: &[f64]) -> f64 {
    taus.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

pub(crate) fn check_sorted(taus: &[f64]) -> Result<()> {
    if taus.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Argument("grid points must be finite and non-negative".into()));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Argument("grid must be strictly increasing".into()));
    }
    Ok(())
}
