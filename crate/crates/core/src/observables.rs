//! Populations, single-site entropies and the total correlation entropy.
//!
//! Every site stays diagonal, `ρₙ = pₙ|e⟩⟨e| + (1 − pₙ)|g⟩⟨g|` with
//! `pₙ = |Φₙ|²`, so every entropy here is a binary entropy in nats. The
//! global state is pure for all times; its entropy is the constant
//! [`GLOBAL_ENTROPY`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ChainSpec, CoherenceVector, RingTransform};

/// von Neumann entropy of the full ring state (pure at all times).
pub const GLOBAL_ENTROPY: f64 = 0.0;

/// Slack allowed on probabilities before they are clamped into `[0, 1]`.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// `pops[j][n] = p_{n,e}(τⱼ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationField {
    pub taus: Vec<f64>,
    pub pops: Vec<Vec<f64>>,
}

impl PopulationField {
    pub fn n_sites(&self) -> usize {
        self.pops.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub taus: Vec<f64>,
    pub site_entropy: Vec<Vec<f64>>,
    pub total_correlation: Vec<f64>,
    pub c_max: f64,
    pub eta: f64,
}

pub fn populations(cv: &CoherenceVector) -> Vec<f64> {
    cv.amps.iter().map(|a| a.norm_sqr()).collect()
}

fn clamp_probability(p: f64) -> Result<f64> {
    if !p.is_finite() || !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::Domain(format!("population {p} is outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `x ln x` with `0 ln 0 = 0`.
fn x_ln_x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Binary entropy `−p ln p − (1−p) ln(1−p)` in nats.
pub fn site_entropy(p: f64) -> Result<f64> {
    let p = clamp_probability(p)?;
    Ok(-x_ln_x(p) - x_ln_x(1.0 - p))
}

/// `C_T = Σₙ S[ρₙ] − S[ρ]` for one row of populations.
pub fn total_correlation(pops_row: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for &p in pops_row {
        sum += site_entropy(p)?;
    }
    Ok(sum - GLOBAL_ENTROPY)
}

/// Largest total correlation reachable with one excitation shared by
/// `n_sites` sites: `N ln(N/(N−1)) + ln(N−1)`.
pub fn correlation_max(n_sites: usize) -> Result<f64> {
    if n_sites < 2 {
        return Err(Error::Domain(format!("correlation maximum needs ≥ 2 sites, got {n_sites}")));
    }
    let n = n_sites as f64;
    Ok(n * (n / (n - 1.0)).ln() + (n - 1.0).ln())
}

/// Excited populations of the product state that maximises `C_T`.
pub fn pseudo_equilibrium(n_sites: usize) -> Result<Vec<f64>> {
    if n_sites < 2 {
        return Err(Error::Domain(format!("pseudo-equilibrium needs ≥ 2 sites, got {n_sites}")));
    }
    Ok(vec![1.0 / n_sites as f64; n_sites])
}

/// Relative entropy `D[ρ ‖ ⊗ₙρₙ]` of the pure one-excitation state.
///
/// With `ρ = |ψ⟩⟨ψ|`, `tr ρ ln ρ = 0` and `ψ` supported on the states
/// `|1_m⟩`, on which `ln ⊗ₙρₙ` is diagonal with entry
/// `ln p_m + Σ_{n≠m} ln(1 − pₙ)`. So `D = −Σ_m p_m [ln p_m + Σ_{n≠m} ln(1 − pₙ)]`.
pub fn relative_entropy_check(cv: &CoherenceVector) -> Result<f64> {
    let pops = populations(cv)
        .into_iter()
        .map(clamp_probability)
        .collect::<Result<Vec<_>>>()?;
    // ln(1 − p), floored so that a site with p = 1 cannot produce 0·∞.
    let log_ground: Vec<f64> = pops
        .iter()
        .map(|&p| (1.0 - p).max(f64::MIN_POSITIVE).ln())
        .collect();
    let all_ground: f64 = log_ground.iter().sum();
    let mut d = 0.0;
    for (m, &p) in pops.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let others = if p > 0.5 {
            // Sum the rest explicitly; subtracting a huge log would cancel badly.
            log_ground
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != m)
                .map(|(_, l)| l)
                .sum::<f64>()
        } else {
            all_ground - log_ground[m]
        };
        d -= p * (p.ln() + others);
    }
    Ok(d)
}

/// `η = 1 − max(C_T)/C_max`, clamped to `[0, 1]`.
pub fn eta(n_sites: usize, ct_series: &[f64]) -> Result<f64> {
    let c_max = correlation_max(n_sites)?;
    if ct_series.is_empty() {
        return Err(Error::Argument("η needs a non-empty correlation series".into()));
    }
    let mut peak = f64::NEG_INFINITY;
    for &c in ct_series {
        if !c.is_finite() || c > c_max + 1e-9 {
            return Err(Error::Argument(format!(
                "correlation value {c} exceeds the maximum {c_max}"
            )));
        }
        peak = peak.max(c);
    }
    Ok((1.0 - peak / c_max).clamp(0.0, 1.0))
}

pub fn population_field(spec: &ChainSpec, taus: &[f64]) -> Result<PopulationField> {
    crate::grid::check_sorted(taus)?;
    let pops = RingTransform::for_spec(spec).map_grid(taus, |cv| populations(&cv))?;
    Ok(PopulationField {
        taus: taus.to_vec(),
        pops,
    })
}

/// `C_T(τⱼ)` over a grid without keeping the per-site data.
pub fn correlation_series(spec: &ChainSpec, taus: &[f64]) -> Result<Vec<f64>> {
    crate::grid::check_sorted(taus)?;
    RingTransform::for_spec(spec)
        .map_grid(taus, |cv| total_correlation(&populations(&cv)))?
        .into_iter()
        .collect()
}

pub fn entropy_trace(spec: &ChainSpec, taus: &[f64]) -> Result<EntropyTrace> {
    crate::grid::check_sorted(taus)?;
    let rows = RingTransform::for_spec(spec).map_grid(taus, |cv| {
        populations(&cv)
            .into_iter()
            .map(site_entropy)
            .collect::<Result<Vec<f64>>>()
    })?;
    let site_entropy = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let total_correlation: Vec<f64> = site_entropy
        .iter()
        .map(|row| row.iter().sum::<f64>() - GLOBAL_ENTROPY)
        .collect();
    let c_max = correlation_max(spec.n_sites())?;
    let eta = eta(spec.n_sites(), &total_correlation)?;
    Ok(EntropyTrace {
        taus: taus.to_vec(),
        site_entropy,
        total_correlation,
        c_max,
        eta,
    })
}
