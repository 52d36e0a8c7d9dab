//! The ring model and the coherence function `Φₙ(τ)`.
//!
//! Three evaluation routes are provided and are expected to agree:
//!
//! * [`phi_direct`]: the literal `O(N)` mode sum for one site;
//! * [`phi_batch_fft`] / [`RingTransform`]: all sites at once as the inverse
//!   DFT of the phase vector `exp[−iτ cos(2πk/N)]`, `O(N log N)`;
//! * [`phi_bessel_series`]: the wrapped expansion
//!   `Σ_q (−i)^{n+qN} J_{n+qN}(τ)`, whose `q ≠ 0` terms are the finite-size
//!   images responsible for the bumps at `τ ≈ qN`.
//!
//! The on-site energy ω never enters: it shifts every mode energy equally
//! and cancels in `ε_k − ε_q`, so it only contributes a global phase.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j, bessel_row};
use crate::error::{Error, Result};

/// Ring of `n_sites` two-level systems with exchange `coupling` (g) and
/// on-site energy `onsite` (ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    n_sites: usize,
    coupling: f64,
    onsite: f64,
}

impl ChainSpec {
    pub fn new(n_sites: usize, coupling: f64, onsite: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::Argument(format!("need at least 2 sites, got {n_sites}")));
        }
        if !(coupling.is_finite() && coupling > 0.0) {
            return Err(Error::Argument(format!("coupling must be positive, got {coupling}")));
        }
        if !onsite.is_finite() {
            return Err(Error::Argument(format!("on-site energy must be finite, got {onsite}")));
        }
        Ok(Self {
            n_sites,
            coupling,
            onsite,
        })
    }

    /// `g = 1, ω = 0`.
    pub fn unit(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, 1.0, 0.0)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn onsite(&self) -> f64 {
        self.onsite
    }

    /// Recurrence time in scaled units: `τ_rec = 2g·(N/2g) = N`.
    pub fn recurrence_tau(&self) -> f64 {
        self.n_sites as f64
    }

    /// `t = τ / 2g`.
    pub fn physical_time(&self, tau: f64) -> f64 {
        tau / (2.0 * self.coupling)
    }

    /// Distance from site 0 around the ring, `min(n, N − n)`.
    pub fn ring_distance(&self, site: usize) -> usize {
        site.min(self.n_sites - site)
    }

    pub(crate) fn check_site(&self, site: i64) -> Result<usize> {
        if site < 0 || site as usize >= self.n_sites {
            return Err(Error::Index {
                index: site,
                n_sites: self.n_sites,
            });
        }
        Ok(site as usize)
    }
}

/// Single-particle mode energies `ε_k = ω + 2g cos(2πk/N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenmodeSpectrum {
    pub energies: Vec<f64>,
}

/// `Φ₀(τ) … Φ_{N−1}(τ)` at one scaled time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceVector {
    pub tau: f64,
    pub amps: Vec<Complex64>,
}

impl CoherenceVector {
    pub fn n_sites(&self) -> usize {
        self.amps.len()
    }

    /// `Σₙ |Φₙ|²`; equals 1 under unitary evolution.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨c_m† c_n⟩ = Φ_m* Φ_n`.
    pub fn correlation(&self, m: usize, n: usize) -> Complex64 {
        self.amps[m].conj() * self.amps[n]
    }
}

/// `cos(2πk/N)` evaluated on `min(k, N − k)` so the table is exactly
/// mirror-symmetric.
fn mode_cosines(n_sites: usize) -> Vec<f64> {
    (0..n_sites)
        .map(|k| {
            let k = k.min(n_sites - k);
            (TAU * k as f64 / n_sites as f64).cos()
        })
        .collect()
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Argument(format!("scaled time must be finite and ≥ 0, got {tau}")));
    }
    Ok(())
}

pub fn eigenmode_energies(spec: &ChainSpec) -> EigenmodeSpectrum {
    let two_g = 2.0 * spec.coupling;
    EigenmodeSpectrum {
        energies: mode_cosines(spec.n_sites)
            .into_iter()
            .map(|c| spec.onsite + two_g * c)
            .collect(),
    }
}

/// Literal mode sum `(1/N) Σₖ exp[−iτ cos(2πk/N) + i(2π/N)kn]`.
pub fn phi_direct(spec: &ChainSpec, site: i64, tau: f64) -> Result<Complex64> {
    let n = spec.check_site(site)?;
    check_tau(tau)?;
    let big_n = spec.n_sites;
    let inv_n = 1.0 / big_n as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..big_n {
        let mirrored = k.min(big_n - k);
        let cos_k = (TAU * mirrored as f64 * inv_n).cos();
        let wind = TAU * ((k * n) % big_n) as f64 * inv_n;
        let (s, c) = (wind - tau * cos_k).sin_cos();
        acc += Complex64::new(c, s);
    }
    Ok(acc * inv_n)
}

/// Planned inverse FFT and cosine table for one ring size; reusable across
/// many time points and shareable between threads.
#[derive(Clone)]
pub struct RingTransform {
    n_sites: usize,
    cosines: Vec<f64>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RingTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RingTransform")
            .field("n_sites", &self.n_sites)
            .finish_non_exhaustive()
    }
}

impl RingTransform {
    pub fn new(n_sites: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n_sites,
            cosines: mode_cosines(n_sites),
            inverse: planner.plan_fft_inverse(n_sites),
        }
    }

    pub fn for_spec(spec: &ChainSpec) -> Self {
        Self::new(spec.n_sites)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn scratch_len(&self) -> usize {
        self.inverse.get_inplace_scratch_len()
    }

    pub fn evaluate(&self, tau: f64) -> Result<CoherenceVector> {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.evaluate_with_scratch(tau, &mut scratch)
    }

    pub fn evaluate_with_scratch(
        &self,
        tau: f64,
        scratch: &mut [Complex64],
    ) -> Result<CoherenceVector> {
        check_tau(tau)?;
        if tau == 0.0 {
            let mut amps = vec![Complex64::new(0.0, 0.0); self.n_sites];
            amps[0] = Complex64::new(1.0, 0.0);
            return Ok(CoherenceVector { tau, amps });
        }
        let mut amps: Vec<Complex64> = self
            .cosines
            .iter()
            .map(|&c| {
                let (s, co) = (-tau * c).sin_cos();
                Complex64::new(co, s)
            })
            .collect();
        self.inverse.process_with_scratch(&mut amps, scratch);
        let inv_n = 1.0 / self.n_sites as f64;
        for a in amps.iter_mut() {
            *a *= inv_n;
        }
        Ok(CoherenceVector { tau, amps })
    }

    /// Evaluates `f` on the coherence vector at every grid point, in
    /// parallel; output order follows `taus`.
    pub fn map_grid<T, F>(&self, taus: &[f64], f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(CoherenceVector) -> T + Sync,
    {
        taus.par_iter()
            .map_init(
                || vec![Complex64::new(0.0, 0.0); self.scratch_len()],
                |scratch, &tau| self.evaluate_with_scratch(tau, scratch).map(&f),
            )
            .collect()
    }
}

/// Whole coherence vector by one inverse FFT.
pub fn phi_batch_fft(spec: &ChainSpec, tau: f64) -> Result<CoherenceVector> {
    RingTransform::for_spec(spec).evaluate(tau)
}

/// Coherence vectors over a grid, FFT route.
pub fn coherence_grid(spec: &ChainSpec, taus: &[f64]) -> Result<Vec<CoherenceVector>> {
    RingTransform::for_spec(spec).map_grid(taus, |cv| cv)
}

/// `(−i)^m` for any integer `m`.
pub fn minus_i_pow(m: i64) -> Complex64 {
    match m.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// Two image wraps beyond `τ`, `⌈τ/N⌉ + 2`.
pub fn minimal_q_max(spec: &ChainSpec, tau: f64) -> usize {
    (tau / spec.n_sites as f64).ceil() as usize + 2
}

/// Truncation for [`phi_bessel_series`] that keeps every order up to
/// `τ + 40 + 6τ^{1/3}` on both sides for every site.
///
/// For large rings this is [`minimal_q_max`]. For small ones two wraps span
/// only `~2N` orders past `τ`, which leaves `Jₘ(τ)` terms far above 1e-10
/// (about 1e-7 at `N = 8`), so the truncation widens with the Bessel tail.
pub fn default_q_max(spec: &ChainSpec, tau: f64) -> usize {
    let n = spec.n_sites as f64;
    let reach = tau + crate::bessel::GUARD_ORDERS as f64 + 6.0 * tau.cbrt();
    minimal_q_max(spec, tau).max(((reach + n) / n).ceil() as usize)
}

/// `Σ_{|q|≤q_max} (−i)^{n+qN} J_{n+qN}(τ)`.
pub fn phi_bessel_series(spec: &ChainSpec, site: i64, tau: f64, q_max: usize) -> Result<Complex64> {
    let n = spec.check_site(site)?;
    check_tau(tau)?;
    let big_n = spec.n_sites;
    let row = bessel_row(n + q_max * big_n, tau)?;
    Ok(wrapped_sum(&row, n, big_n, q_max))
}

/// [`phi_bessel_series`] for every site, sharing one Bessel row.
pub fn phi_bessel_series_vector(spec: &ChainSpec, tau: f64, q_max: usize) -> Result<CoherenceVector> {
    check_tau(tau)?;
    let big_n = spec.n_sites;
    let row = bessel_row(big_n - 1 + q_max * big_n, tau)?;
    let amps = (0..big_n)
        .map(|n| wrapped_sum(&row, n, big_n, q_max))
        .collect();
    Ok(CoherenceVector { tau, amps })
}

fn wrapped_sum(row: &crate::bessel::BesselRow, n: usize, big_n: usize, q_max: usize) -> Complex64 {
    let q_max = q_max as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for q in -q_max..=q_max {
        let m = n as i64 + q * big_n as i64;
        acc += minus_i_pow(m) * row.get(m);
    }
    acc
}

/// Thermodynamic-limit amplitude `(−i)ⁿ Jₙ(τ)`.
pub fn phi_infinite(site: i64, tau: f64) -> Result<Complex64> {
    check_tau(tau)?;
    Ok(minus_i_pow(site) * bessel_j(site, tau)?)
}

/// `⟨c_m† c_n⟩(τ) = Φ_m(τ)* Φ_n(τ)`.
pub fn correlation_element(spec: &ChainSpec, m: i64, n: i64, tau: f64) -> Result<Complex64> {
    let m = spec.check_site(m)?;
    let n = spec.check_site(n)?;
    Ok(phi_batch_fft(spec, tau)?.correlation(m, n))
}
