//! Brute-force evolutions that check the spectral engine.
//!
//! Neither oracle touches the Bessel or FFT code:
//!
//! * [`evolve_sector_dense`] diagonalises the `N × N` ring hopping matrix
//!   with a general symmetric eigensolver and propagates `e₀`.
//! * [`evolve_full_spin`] applies the spin Hamiltonian to bit-string basis
//!   states of the `2^N` space, extracts the conserved one-excitation block
//!   from that action and exponentiates it with a Padé matrix exponential.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::check_sorted;
use crate::observables::PopulationField;
use crate::spectral::{ChainSpec, RingTransform};

pub const DENSE_MAX_SITES: usize = 4096;
pub const FULL_SPIN_MAX_SITES: usize = 12;

const NORM_DRIFT_LIMIT: f64 = 1e-9;

/// `amps[j][n] = ψₙ(τⱼ)` in the one-excitation sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorState {
    pub taus: Vec<f64>,
    pub amps: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Dense one-excitation propagation, compared on amplitudes.
    DenseSector,
    /// Full spin-space evolution, compared on populations.
    FullSpin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub oracle: OracleKind,
    pub max_abs_dev: f64,
    pub worst_site: usize,
    pub worst_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_abs_dev: f64,
    pub worst_site: usize,
    pub worst_tau: f64,
    pub checks: Vec<OracleCheck>,
}

/// Real symmetric ring hopping matrix; both bonds of an `N = 2` ring land
/// on the same entry.
fn hopping_matrix(spec: &ChainSpec) -> DMatrix<f64> {
    let n = spec.n_sites();
    let g = spec.coupling();
    let mut h = DMatrix::zeros(n, n);
    for site in 0..n {
        let next = (site + 1) % n;
        h[(site, next)] += g;
        h[(next, site)] += g;
    }
    h
}

pub fn evolve_sector_dense(spec: &ChainSpec, taus: &[f64]) -> Result<SectorState> {
    let n = spec.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(Error::Budget(format!(
            "dense sector oracle is limited to {DENSE_MAX_SITES} sites, got {n}"
        )));
    }
    check_sorted(taus)?;
    let eig = SymmetricEigen::try_new(hopping_matrix(spec), 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let u = &eig.eigenvectors;
    let lambda = &eig.eigenvalues;
    // Component of e₀ along each eigenvector.
    let overlap: Vec<f64> = (0..n).map(|k| u[(0, k)]).collect();
    let to_time = 1.0 / (2.0 * spec.coupling());

    let amps = taus
        .iter()
        .map(|&tau| {
            let t = tau * to_time;
            let weights: Vec<Complex64> = (0..n)
                .map(|k| Complex64::from_polar(overlap[k], -lambda[k] * t))
                .collect();
            (0..n)
                .map(|site| {
                    (0..n)
                        .map(|k| weights[k] * u[(site, k)])
                        .fold(Complex64::new(0.0, 0.0), |a, b| a + b)
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();

    for (row, &tau) in amps.iter().zip(taus) {
        let norm: f64 = row.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::Numeric(format!("dense propagation norm {norm} at τ = {tau}")));
        }
    }
    Ok(SectorState {
        taus: taus.to_vec(),
        amps,
    })
}

/// `H|s⟩` for a computational basis state `s` (bit `n` set ⇔ site `n`
/// excited), as a list of `(state, amplitude)` terms.
fn spin_hamiltonian_action(spec: &ChainSpec, state: usize) -> Vec<(usize, f64)> {
    let n = spec.n_sites();
    let half_omega = 0.5 * spec.onsite();
    let diag: f64 = (0..n)
        .map(|site| if state >> site & 1 == 1 { half_omega } else { -half_omega })
        .sum();
    let mut out = vec![(state, diag)];
    for site in 0..n {
        let next = (site + 1) % n;
        let (a, b) = (state >> site & 1, state >> next & 1);
        // σ⁺σ⁻ + σ⁻σ⁺ swaps an excitation across the bond.
        if a != b {
            out.push((state ^ (1 << site) ^ (1 << next), spec.coupling()));
        }
    }
    out
}

pub fn evolve_full_spin(spec: &ChainSpec, taus: &[f64]) -> Result<PopulationField> {
    let n = spec.n_sites();
    if n > FULL_SPIN_MAX_SITES {
        return Err(Error::Budget(format!(
            "full spin oracle is limited to {FULL_SPIN_MAX_SITES} sites, got {n}"
        )));
    }
    check_sorted(taus)?;
    let dim = 1usize << n;

    // Block of H on the states with exactly one bit set, read off from the
    // full-space action; any amplitude leaving the block is an error.
    let block_index = |state: usize| -> Option<usize> {
        (state.count_ones() == 1).then(|| state.trailing_zeros() as usize)
    };
    let mut block = DMatrix::<Complex64>::zeros(n, n);
    for col in 0..n {
        for (target, amp) in spin_hamiltonian_action(spec, 1 << col) {
            match block_index(target) {
                Some(row) => block[(row, col)] += Complex64::new(amp, 0.0),
                None if amp != 0.0 => {
                    return Err(Error::Numeric(format!(
                        "Hamiltonian leaks out of the one-excitation sector into state {target:#b}"
                    )))
                }
                None => {}
            }
        }
    }

    let initial = DVector::<Complex64>::from_fn(n, |i, _| {
        Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    let to_time = 1.0 / (2.0 * spec.coupling());
    let mut pops = Vec::with_capacity(taus.len());
    let mut full = vec![Complex64::new(0.0, 0.0); dim];
    for &tau in taus {
        let generator = &block * Complex64::new(0.0, -tau * to_time);
        let psi = generator.exp() * &initial;

        full.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for (i, a) in psi.iter().enumerate() {
            full[1 << i] = *a;
        }
        let norm: f64 = full.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::Numeric(format!("full spin norm drifted to {norm} at τ = {tau}")));
        }
        // ⟨σₙ⁺σₙ⁻⟩ summed over the whole 2^N vector.
        let row: Vec<f64> = (0..n)
            .map(|site| {
                full.iter()
                    .enumerate()
                    .filter(|(s, _)| s >> site & 1 == 1)
                    .map(|(_, a)| a.norm_sqr())
                    .sum()
            })
            .collect();
        pops.push(row);
    }
    Ok(PopulationField {
        taus: taus.to_vec(),
        pops,
    })
}

fn worst<I>(oracle: OracleKind, devs: I) -> OracleCheck
where
    I: Iterator<Item = (f64, usize, f64)>,
{
    devs.fold(
        OracleCheck {
            oracle,
            max_abs_dev: 0.0,
            worst_site: 0,
            worst_tau: 0.0,
        },
        |acc, (dev, site, tau)| {
            if dev > acc.max_abs_dev {
                OracleCheck {
                    oracle,
                    max_abs_dev: dev,
                    worst_site: site,
                    worst_tau: tau,
                }
            } else {
                acc
            }
        },
    )
}

fn check_against(spec: &ChainSpec, taus: &[f64], kind: OracleKind) -> Result<OracleCheck> {
    let spectral = RingTransform::for_spec(spec).map_grid(taus, |cv| cv.amps)?;
    match kind {
        OracleKind::DenseSector => {
            let state = evolve_sector_dense(spec, taus)?;
            Ok(worst(
                kind,
                state.amps.iter().zip(&spectral).zip(taus).flat_map(|((o, s), &tau)| {
                    o.iter()
                        .zip(s)
                        .enumerate()
                        .map(move |(site, (a, b))| ((a - b).norm(), site, tau))
                }),
            ))
        }
        OracleKind::FullSpin => {
            let field = evolve_full_spin(spec, taus)?;
            Ok(worst(
                kind,
                field.pops.iter().zip(&spectral).zip(taus).flat_map(|((o, s), &tau)| {
                    o.iter()
                        .zip(s)
                        .enumerate()
                        .map(move |(site, (p, a))| ((p - a.norm_sqr()).abs(), site, tau))
                }),
            ))
        }
    }
}

/// Runs the requested oracles against the FFT route.
pub fn compare_with(spec: &ChainSpec, taus: &[f64], oracles: &[OracleKind]) -> Result<OracleReport> {
    if oracles.is_empty() {
        return Err(Error::Budget(format!(
            "no oracle can handle a ring of {} sites",
            spec.n_sites()
        )));
    }
    let checks = oracles
        .iter()
        .map(|&k| check_against(spec, taus, k))
        .collect::<Result<Vec<_>>>()?;
    let top = checks
        .iter()
        .max_by(|a, b| a.max_abs_dev.total_cmp(&b.max_abs_dev))
        .expect("at least one check");
    Ok(OracleReport {
        max_abs_dev: top.max_abs_dev,
        worst_site: top.worst_site,
        worst_tau: top.worst_tau,
        checks,
    })
}

/// Oracles whose size budget admits this ring.
pub fn available_oracles(spec: &ChainSpec) -> Vec<OracleKind> {
    let n = spec.n_sites();
    let mut out = Vec::new();
    if n <= DENSE_MAX_SITES {
        out.push(OracleKind::DenseSector);
    }
    if n <= FULL_SPIN_MAX_SITES {
        out.push(OracleKind::FullSpin);
    }
    out
}

/// Every oracle within budget against the spectral route.
pub fn compare(spec: &ChainSpec, taus: &[f64]) -> Result<OracleReport> {
    compare_with(spec, taus, &available_oracles(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::uniform;

    #[test]
    fn dense_two_site_closed_form() {
        let spec = ChainSpec::unit(2).unwrap();
        let s = evolve_sector_dense(&spec, &[0.0, 1.0]).unwrap();
        assert!((s.amps[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(s.amps[0][1].norm() < 1e-15);
        assert!((s.amps[1][0] - Complex64::new(1f64.cos(), 0.0)).norm() < 1e-14);
        assert!((s.amps[1][1] - Complex64::new(0.0, -1f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn dense_times_zero_is_e0() {
        let s = evolve_sector_dense(&ChainSpec::unit(9).unwrap(), &[0.0]).unwrap();
        assert!((s.amps[0][0] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(s.amps[0][1..].iter().all(|a| a.norm() < 1e-14));
    }

    #[test]
    fn dense_matches_spectral_n8() {
        let spec = ChainSpec::unit(8).unwrap();
        let r = compare_with(&spec, &uniform(20.0, 0.05).unwrap(), &[OracleKind::DenseSector]).unwrap();
        assert!(r.max_abs_dev <= 1e-10, "{r:?}");
    }

    #[test]
    fn dense_output_is_mirror_symmetric() {
        let s = evolve_sector_dense(&ChainSpec::unit(11).unwrap(), &uniform(15.0, 0.5).unwrap()).unwrap();
        for row in &s.amps {
            for n in 1..11 {
                assert!((row[n] - row[11 - n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn full_spin_two_site() {
        let spec = ChainSpec::new(2, 1.0, 0.4).unwrap();
        let taus = uniform(6.0, 0.25).unwrap();
        let f = evolve_full_spin(&spec, &taus).unwrap();
        for (row, &t) in f.pops.iter().zip(&taus) {
            assert!((row[0] - t.cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_spin_conserves_excitation() {
        let spec = ChainSpec::new(7, 0.8, 1.5).unwrap();
        let f = evolve_full_spin(&spec, &uniform(10.0, 0.5).unwrap()).unwrap();
        for row in &f.pops {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn full_spin_matches_spectral_n6() {
        let spec = ChainSpec::unit(6).unwrap();
        let r = compare_with(&spec, &uniform(12.0, 0.05).unwrap(), &[OracleKind::FullSpin]).unwrap();
        assert!(r.max_abs_dev <= 1e-10, "{r:?}");
    }

    #[test]
    fn budgets() {
        let big = ChainSpec::unit(13).unwrap();
        assert!(matches!(evolve_full_spin(&big, &[0.0]), Err(Error::Budget(_))));
        let huge = ChainSpec::unit(DENSE_MAX_SITES + 1).unwrap();
        assert!(matches!(evolve_sector_dense(&huge, &[0.0]), Err(Error::Budget(_))));
        assert!(matches!(compare(&huge, &[0.0]), Err(Error::Budget(_))));
        assert_eq!(available_oracles(&big), vec![OracleKind::DenseSector]);
    }

    #[test]
    fn compare_two_sites_is_tight() {
        let r = compare(&ChainSpec::unit(2).unwrap(), &uniform(20.0, 0.1).unwrap()).unwrap();
        assert_eq!(r.checks.len(), 2);
        assert!(r.max_abs_dev <= 1e-13, "{r:?}");
    }
}
