//! Size sweeps of the correlation shortfall `η_N` and its power-law fit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{linspace, uniform};
use crate::observables::{correlation_max, correlation_series, eta};
use crate::recurrence::{correlation_peak_series, least_squares};
use crate::spectral::ChainSpec;

pub const DEFAULT_GRID_STEP: f64 = 0.05;
pub const DEFAULT_SPAN_FACTOR: f64 = 1.0;
/// Scaled-time extent of [`scaled_trajectories`] curves.
pub const TRAJECTORY_SPAN: f64 = 1.2;

/// Upper bound on `Σ N × grid points` a single sweep may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkBudget(pub u64);

impl Default for WorkBudget {
    fn default() -> Self {
        Self(20_000_000_000)
    }
}

impl WorkBudget {
    pub fn check(&self, work: u64, what: &str) -> Result<()> {
        if work > self.0 {
            return Err(Error::Budget(format!(
                "{what} needs {work} site-time evaluations, budget is {}",
                self.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_sites: usize,
    pub eta: f64,
    pub tau_star: f64,
    pub c_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    pub grid_step: f64,
    pub grid_span_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub log_intercept: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledCurve {
    pub n_sites: usize,
    /// `2gt/N`.
    pub scaled_time: Vec<f64>,
    /// `C_T/N`.
    pub correlation_per_site: Vec<f64>,
    /// `C_max/N`.
    pub max_per_site: f64,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Argument("no sizes given".into()));
    }
    if let Some(&bad) = sizes.iter().find(|&&n| n < 2) {
        return Err(Error::Argument(format!("ring size {bad} is below 2")));
    }
    Ok(())
}

pub fn sweep_eta(sizes: &[usize], grid_step: f64, span_factor: f64) -> Result<ScalingTable> {
    sweep_eta_with_budget(sizes, grid_step, span_factor, WorkBudget::default())
}

pub fn sweep_eta_with_budget(
    sizes: &[usize],
    grid_step: f64,
    span_factor: f64,
    budget: WorkBudget,
) -> Result<ScalingTable> {
    check_sizes(sizes)?;
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Argument(format!("sweep grid step must lie in (0, 0.1], got {grid_step}")));
    }
    if !(span_factor.is_finite() && span_factor >= 1.0) {
        return Err(Error::Argument(format!("span factor must be ≥ 1, got {span_factor}")));
    }
    let work: u64 = sizes
        .iter()
        .map(|&n| n as u64 * ((span_factor * n as f64 / grid_step) as u64 + 1))
        .sum();
    budget.check(work, "η sweep")?;

    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let rows = sorted
        .par_iter()
        .map(|&n| {
            let spec = ChainSpec::unit(n)?;
            let taus = uniform(span_factor * n as f64, grid_step)?;
            let ct = correlation_series(&spec, &taus)?;
            let peak = correlation_peak_series(&taus, &ct, &spec)?;
            Ok(ScalingRow {
                n_sites: n,
                eta: eta(n, &ct)?,
                tau_star: peak.tau_star,
                c_star: peak.c_star,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingTable {
        rows,
        grid_step,
        grid_span_factor: span_factor,
    })
}

/// Unweighted least squares of `ln η` against `ln N`; `α` is minus the slope.
pub fn fit_power_law(table: &ScalingTable) -> Result<PowerLawFit> {
    let mut sizes: Vec<usize> = table.rows.iter().map(|r| r.n_sites).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Argument(format!(
            "power-law fit needs ≥ 3 distinct sizes, got {}",
            sizes.len()
        )));
    }
    if let Some(r) = table.rows.iter().find(|r| !(r.eta > 0.0)) {
        return Err(Error::Domain(format!("η = {} at N = {} has no logarithm", r.eta, r.n_sites)));
    }
    let xs: Vec<f64> = table.rows.iter().map(|r| (r.n_sites as f64).ln()).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r.eta.ln()).collect();
    let (slope, intercept, residual_rms) = least_squares(&xs, &ys)?;
    Ok(PowerLawFit {
        alpha: -slope,
        log_intercept: intercept,
        residual_rms,
    })
}

/// `C_T/N` against `2gt/N` on `points` shared abscissae in `[0, 1.2]`.
pub fn scaled_trajectories(sizes: &[usize], points: usize) -> Result<Vec<ScaledCurve>> {
    scaled_trajectories_with_budget(sizes, points, WorkBudget::default())
}

pub fn scaled_trajectories_with_budget(
    sizes: &[usize],
    points: usize,
    budget: WorkBudget,
) -> Result<Vec<ScaledCurve>> {
    check_sizes(sizes)?;
    if points < 100 {
        return Err(Error::Argument(format!("need at least 100 points per curve, got {points}")));
    }
    let work: u64 = sizes.iter().map(|&n| n as u64 * points as u64).sum();
    budget.check(work, "scaled trajectories")?;

    let scaled_time = linspace(TRAJECTORY_SPAN, points);
    sizes
        .par_iter()
        .map(|&n| {
            let spec = ChainSpec::unit(n)?;
            let nf = n as f64;
            let taus: Vec<f64> = scaled_time.iter().map(|s| s * nf).collect();
            let ct = correlation_series(&spec, &taus)?;
            Ok(ScaledCurve {
                n_sites: n,
                scaled_time: scaled_time.clone(),
                correlation_per_site: ct.into_iter().map(|c| c / nf).collect(),
                max_per_site: correlation_max(n)? / nf,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> ScalingTable {
        ScalingTable {
            rows: [20usize, 50, 100, 200, 500, 1000]
                .iter()
                .map(|&n| ScalingRow {
                    n_sites: n,
                    eta: f(n as f64),
                    tau_star: 0.0,
                    c_star: 0.0,
                })
                .collect(),
            grid_step: 0.05,
            grid_span_factor: 1.0,
        }
    }

    #[test]
    fn single_size_shape() {
        let t = sweep_eta(&[20], 0.05, 1.0).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].eta > 0.0 && t.rows[0].eta < 1.0);
    }

    #[test]
    fn eta_decreases_across_sizes() {
        let t = sweep_eta(&[1000, 20, 100], 0.05, 1.0).unwrap();
        let ns: Vec<usize> = t.rows.iter().map(|r| r.n_sites).collect();
        assert_eq!(ns, vec![20, 100, 1000]);
        for w in t.rows.windows(2) {
            assert!(w[1].eta < w[0].eta, "{:?}", t.rows);
        }
        for r in &t.rows {
            let x = r.tau_star / r.n_sites as f64;
            assert!((0.35..=0.65).contains(&x), "{r:?}");
        }
    }

    #[test]
    fn sweep_argument_errors() {
        assert!(matches!(sweep_eta(&[20], 0.2, 1.0), Err(Error::Argument(_))));
        assert!(matches!(sweep_eta(&[20], 0.05, 0.5), Err(Error::Argument(_))));
        assert!(matches!(sweep_eta(&[1], 0.05, 1.0), Err(Error::Argument(_))));
        assert!(matches!(
            sweep_eta_with_budget(&[1000], 0.05, 1.0, WorkBudget(1000)),
            Err(Error::Budget(_))
        ));
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_power_law(&synthetic(|n| n.powf(-0.062))).unwrap();
        assert!((fit.alpha - 0.062).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
        let fit = fit_power_law(&synthetic(|n| 2.0 * n.powf(-0.5))).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12);
        assert!((fit.log_intercept - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let mut t = synthetic(|n| n.powf(-0.1));
        t.rows[2].eta = 0.0;
        assert!(matches!(fit_power_law(&t), Err(Error::Domain(_))));
        t.rows.truncate(2);
        t.rows[0].eta = 0.5;
        t.rows[1].eta = 0.4;
        assert!(matches!(fit_power_law(&t), Err(Error::Argument(_))));
    }

    #[test]
    fn trajectories() {
        let curves = scaled_trajectories(&[20, 100], 241).unwrap();
        for c in &curves {
            assert_eq!(c.correlation_per_site[0], 0.0);
            assert!(c.correlation_per_site.iter().all(|&v| v <= c.max_per_site));
            assert_eq!(c.scaled_time.len(), 241);
            assert_eq!(*c.scaled_time.last().unwrap(), TRAJECTORY_SPAN);
        }
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let between = sup(&curves[0].correlation_per_site, &curves[1].correlation_per_site);
        let to_zero = curves[0].correlation_per_site.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(between < to_zero, "{between} vs {to_zero}");
        assert!(scaled_trajectories(&[20], 50).is_err());
    }

    #[test]
    fn sweep_is_order_independent() {
        let a = sweep_eta(&[30, 40, 50], 0.1, 1.0).unwrap();
        let b = sweep_eta(&[50, 30, 40], 0.1, 1.0).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn alpha_is_scale_invariant(c in 1e-3f64..1e3, a in 0.01f64..1.0, wobble in 0.0f64..0.3) {
            let base = synthetic(|n| n.powf(-a) * (1.0 + wobble * (n.ln()).sin()));
            let scaled = ScalingTable {
                rows: base.rows.iter().map(|r| ScalingRow { eta: c * r.eta, ..r.clone() }).collect(),
                ..base.clone()
            };
            let f0 = fit_power_law(&base).unwrap();
            let f1 = fit_power_law(&scaled).unwrap();
            prop_assert!((f0.alpha - f1.alpha).abs() < 1e-12);
            prop_assert!((f1.log_intercept - f0.log_intercept - c.ln()).abs() < 1e-9);
        }
    }
}
