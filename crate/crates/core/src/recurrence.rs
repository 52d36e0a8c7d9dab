//! Recurrence detection, light-cone front and correlation-peak location.
//!
//! A recurrence is flagged when the envelope of `|Φ₀|` inside
//! `[qN(1−w), qN(1+w)]` rises above `threshold` times the median envelope
//! just before that window, `[qN(1−2w), qN(1−w))`.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_sorted, max_step};
use crate::observables::{EntropyTrace, PopulationField};
use crate::spectral::ChainSpec;

/// Contrast ratio a bump must exceed.
pub const DEFAULT_CONTRAST: f64 = 3.0;
/// Half-width of the search window as a fraction of `qN`.
pub const DEFAULT_WINDOW: f64 = 0.15;
/// Width (scaled time) of the moving maximum that forms the envelope.
pub const ENVELOPE_WIDTH: f64 = 0.5;
/// Population a site must reach to count as reached by the front.
pub const DEFAULT_ARRIVAL_THRESHOLD: f64 = 0.02;

const MAX_RECURRENCE_STEP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceEvent {
    pub q: usize,
    /// First grid point in the window where the envelope clears the contrast.
    pub tau_detected: f64,
    /// Location of the envelope maximum in the window.
    pub tau_peak: f64,
    /// Envelope maximum over baseline.
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub events: Vec<RecurrenceEvent>,
    pub t_rec_scaled: f64,
    pub detection_window: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightConeFit {
    /// Scaled time at which each site first reaches the threshold; `None`
    /// when it never does on the grid.
    pub first_arrival: Vec<Option<f64>>,
    pub speed: f64,
    pub intercept: f64,
    pub residual: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPeak {
    pub tau_star: f64,
    pub c_star: f64,
}

/// Moving maximum of `values` over `[τ − width/2, τ + width/2]`.
pub fn envelope(taus: &[f64], values: &[f64], width: f64) -> Vec<f64> {
    let half = 0.5 * width;
    let mut out = Vec::with_capacity(values.len());
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for &t in taus {
        while next < taus.len() && taus[next] <= t + half {
            while window.back().is_some_and(|&b| values[b] <= values[next]) {
                window.pop_back();
            }
            window.push_back(next);
            next += 1;
        }
        while window.front().is_some_and(|&f| taus[f] < t - half) {
            window.pop_front();
        }
        out.push(values[*window.front().expect("window holds the current point")]);
    }
    out
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn detect_recurrences(
    taus: &[f64],
    phi0: &[Complex64],
    spec: &ChainSpec,
    threshold: f64,
    window: f64,
) -> Result<RecurrenceReport> {
    if taus.len() != phi0.len() {
        return Err(Error::Argument(format!(
            "{} grid points but {} amplitudes",
            taus.len(),
            phi0.len()
        )));
    }
    check_sorted(taus)?;
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::Argument(format!("contrast threshold must be positive, got {threshold}")));
    }
    if !(window > 0.0 && window < 0.5) {
        return Err(Error::Argument(format!("window fraction must lie in (0, 0.5), got {window}")));
    }
    let big_n = spec.recurrence_tau();
    let (first, last) = match (taus.first(), taus.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Argument("empty grid".into())),
    };
    if first > 1e-12 || last < 2.0 * big_n - 1e-9 {
        return Err(Error::Argument(format!(
            "grid [{first}, {last}] must cover [0, {}]",
            2.0 * big_n
        )));
    }
    let step = max_step(taus);
    if step > MAX_RECURRENCE_STEP {
        return Err(Error::Argument(format!(
            "grid step {step} is coarser than {MAX_RECURRENCE_STEP}"
        )));
    }

    let magnitudes: Vec<f64> = phi0.iter().map(|a| a.norm()).collect();
    let env = envelope(taus, &magnitudes, ENVELOPE_WIDTH);

    let mut events = Vec::new();
    let mut q = 1;
    while q as f64 * big_n <= last + 1e-9 {
        let centre = q as f64 * big_n;
        let (base_lo, lo, hi) = (
            centre * (1.0 - 2.0 * window),
            centre * (1.0 - window),
            centre * (1.0 + window),
        );
        let baseline: Vec<f64> = taus
            .iter()
            .zip(&env)
            .filter(|(&t, _)| t >= base_lo && t < lo)
            .map(|(_, &e)| e)
            .collect();
        if !baseline.is_empty() {
            let baseline = median(baseline);
            let in_window = || taus.iter().zip(&env).filter(|(&t, _)| t >= lo && t <= hi);
            let (tau_peak, peak) = in_window()
                .fold((f64::NAN, f64::NEG_INFINITY), |acc, (&t, &e)| {
                    if e > acc.1 {
                        (t, e)
                    } else {
                        acc
                    }
                });
            let strength = if baseline > 0.0 { peak / baseline } else { f64::MAX };
            if strength > threshold {
                let tau_detected = in_window()
                    .find(|(_, &e)| e > threshold * baseline)
                    .map(|(&t, _)| t)
                    .unwrap_or(tau_peak);
                events.push(RecurrenceEvent {
                    q,
                    tau_detected,
                    tau_peak,
                    strength,
                });
            }
        }
        q += 1;
    }

    Ok(RecurrenceReport {
        events,
        t_rec_scaled: big_n,
        detection_window: window,
        threshold,
    })
}

/// Ordinary least squares `y = slope·x + intercept`; returns
/// `(slope, intercept, rms residual)`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("abscissae are degenerate".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok((slope, intercept, (ss / n).sqrt()))
}

pub fn lightcone_front(field: &PopulationField, spec: &ChainSpec, threshold: f64) -> Result<LightConeFit> {
    if !(threshold > 0.0 && threshold < 0.5) {
        return Err(Error::Argument(format!("arrival threshold must lie in (0, 0.5), got {threshold}")));
    }
    let n_sites = spec.n_sites();
    if field.taus.first().is_none_or(|&t| t.abs() > 1e-12) {
        return Err(Error::Argument("population grid must start at τ = 0".into()));
    }
    if field.pops.len() != field.taus.len() || field.pops.iter().any(|r| r.len() != n_sites) {
        return Err(Error::Argument("population field shape does not match the ring".into()));
    }

    let first_arrival: Vec<Option<f64>> = (0..n_sites)
        .map(|site| {
            field
                .taus
                .iter()
                .zip(&field.pops)
                .find(|(_, row)| row[site] >= threshold)
                .map(|(&t, _)| t)
        })
        .collect();

    let d_max = (n_sites / 2).saturating_sub(2);
    let (xs, ys): (Vec<f64>, Vec<f64>) = first_arrival
        .iter()
        .enumerate()
        .filter_map(|(site, arrival)| {
            let d = spec.ring_distance(site);
            arrival
                .filter(|_| d >= 2 && d <= d_max)
                .map(|t| (d as f64, t))
        })
        .unzip();
    if xs.len() < 4 {
        return Err(Error::Fit(format!(
            "only {} sites reached the threshold inside the fit range",
            xs.len()
        )));
    }
    let (speed, intercept, residual) = least_squares(&xs, &ys)?;
    Ok(LightConeFit {
        first_arrival,
        speed,
        intercept,
        residual,
        threshold,
    })
}

/// Argmax of `C_T` over a series covering `[0, N]`.
pub fn correlation_peak_series(taus: &[f64], ct: &[f64], spec: &ChainSpec) -> Result<CorrelationPeak> {
    if taus.len() != ct.len() || taus.is_empty() {
        return Err(Error::Argument("correlation series is empty or misaligned".into()));
    }
    let last = *taus.last().unwrap();
    if last < spec.recurrence_tau() - 1e-9 {
        return Err(Error::Argument(format!(
            "grid ends at {last}, shorter than τ_rec = {}",
            spec.recurrence_tau()
        )));
    }
    let (mut tau_star, mut c_star) = (taus[0], ct[0]);
    for (&t, &c) in taus.iter().zip(ct) {
        if c > c_star {
            tau_star = t;
            c_star = c;
        }
    }
    Ok(CorrelationPeak { tau_star, c_star })
}

pub fn correlation_peak(trace: &EntropyTrace, spec: &ChainSpec) -> Result<CorrelationPeak> {
    correlation_peak_series(&trace.taus, &trace.total_correlation, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::uniform;
    use crate::observables::{correlation_max, entropy_trace, population_field};
    use crate::spectral::{coherence_grid, phi_infinite};

    fn phi0_series(n: usize, tau_max: f64, step: f64) -> (ChainSpec, Vec<f64>, Vec<Complex64>) {
        let spec = ChainSpec::unit(n).unwrap();
        let taus = uniform(tau_max, step).unwrap();
        let phi0 = coherence_grid(&spec, &taus)
            .unwrap()
            .into_iter()
            .map(|cv| cv.amps[0])
            .collect();
        (spec, taus, phi0)
    }

    #[test]
    fn envelope_is_moving_max() {
        let taus: Vec<f64> = (0..6).map(|j| j as f64 * 0.1).collect();
        let v = [0.0, 3.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(envelope(&taus, &v, 0.2), vec![3.0, 3.0, 3.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn four_recurrences_at_n100() {
        let (spec, taus, phi0) = phi0_series(100, 450.0, 0.1);
        let r = detect_recurrences(&taus, &phi0, &spec, DEFAULT_CONTRAST, DEFAULT_WINDOW).unwrap();
        let qs: Vec<usize> = r.events.iter().map(|e| e.q).collect();
        assert_eq!(qs, vec![1, 2, 3, 4]);
        for e in &r.events {
            let target = e.q as f64 * 100.0;
            assert!((e.tau_detected - target).abs() <= 0.05 * target, "{e:?}");
            assert!(e.strength > r.threshold);
        }
    }

    #[test]
    fn no_recurrence_in_infinite_ring() {
        for &n in &[20usize, 40, 100] {
            let spec = ChainSpec::unit(n).unwrap();
            let taus = uniform(4.5 * n as f64, 0.1).unwrap();
            let phi: Vec<Complex64> = taus.iter().map(|&t| phi_infinite(0, t).unwrap()).collect();
            let r = detect_recurrences(&taus, &phi, &spec, DEFAULT_CONTRAST, DEFAULT_WINDOW).unwrap();
            assert!(r.events.is_empty(), "N={n}: {:?}", r.events);
        }
    }

    #[test]
    fn first_recurrence_scales_with_size() {
        let q1 = |n: usize| {
            let (spec, taus, phi0) = phi0_series(n, 4.5 * n as f64, 0.1);
            let r = detect_recurrences(&taus, &phi0, &spec, DEFAULT_CONTRAST, DEFAULT_WINDOW).unwrap();
            r.events.iter().find(|e| e.q == 1).expect("q = 1 event").tau_detected
        };
        let ratio = q1(100) / q1(40);
        assert!((ratio - 2.5).abs() <= 0.25, "ratio {ratio}");
    }

    #[test]
    fn longer_grid_keeps_earlier_events() {
        let (spec, taus, phi0) = phi0_series(60, 240.0, 0.1);
        let long = detect_recurrences(&taus, &phi0, &spec, DEFAULT_CONTRAST, DEFAULT_WINDOW).unwrap();
        let cut = taus.iter().position(|&t| t > 120.0 + 1e-9).unwrap();
        let short =
            detect_recurrences(&taus[..cut], &phi0[..cut], &spec, DEFAULT_CONTRAST, DEFAULT_WINDOW).unwrap();
        assert!(long.events.len() >= short.events.len());
        assert_eq!(long.events.first(), short.events.first());
        assert_eq!(short.events.first().map(|e| e.q), Some(1));
    }

    #[test]
    fn rejects_bad_grids() {
        let (spec, taus, phi0) = phi0_series(100, 150.0, 0.1);
        assert!(detect_recurrences(&taus, &phi0, &spec, 3.0, 0.15).is_err());
        let (spec, taus, phi0) = phi0_series(100, 300.0, 0.6);
        assert!(detect_recurrences(&taus, &phi0, &spec, 3.0, 0.15).is_err());
        let (spec, taus, phi0) = phi0_series(10, 30.0, 0.1);
        assert!(detect_recurrences(&taus, &phi0[1..], &spec, 3.0, 0.15).is_err());
        assert!(detect_recurrences(&taus, &phi0, &spec, 3.0, 0.7).is_err());
    }

    #[test]
    fn deterministic_report() {
        let (spec, taus, phi0) = phi0_series(50, 200.0, 0.1);
        let a = detect_recurrences(&taus, &phi0, &spec, 3.0, 0.15).unwrap();
        let b = detect_recurrences(&taus, &phi0, &spec, 3.0, 0.15).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lightcone_at_n100() {
        let spec = ChainSpec::unit(100).unwrap();
        let field = population_field(&spec, &uniform(60.0, 0.05).unwrap()).unwrap();
        let fit = lightcone_front(&field, &spec, DEFAULT_ARRIVAL_THRESHOLD).unwrap();
        let t10 = fit.first_arrival[10].unwrap();
        assert!((t10 - 10.0).abs() <= 2.0, "{t10}");
        assert!((fit.speed - 1.0).abs() <= 0.15, "{}", fit.speed);
        for n in 1..100 {
            assert_eq!(fit.first_arrival[n], fit.first_arrival[100 - n], "site {n}");
        }
        assert_eq!(fit.first_arrival[0], Some(0.0));
    }

    #[test]
    fn lightcone_arrival_tracks_bessel_crossing() {
        // First crossing of |J₁₀(τ)|² ≥ 0.02 located on a fine grid.
        let t = uniform(30.0, 0.001)
            .unwrap()
            .into_iter()
            .find(|&t| crate::bessel::bessel_j(10, t).unwrap().powi(2) >= 0.02)
            .unwrap();
        assert!((t - 10.0).abs() <= 2.0, "{t}");
        let spec = ChainSpec::unit(100).unwrap();
        let field = population_field(&spec, &uniform(30.0, 0.001).unwrap()).unwrap();
        let fit = lightcone_front(&field, &spec, 0.02).unwrap();
        assert!((fit.first_arrival[10].unwrap() - t).abs() <= 0.0011);
    }

    #[test]
    fn lightcone_errors() {
        let spec = ChainSpec::unit(100).unwrap();
        let field = population_field(&spec, &uniform(1.5, 0.05).unwrap()).unwrap();
        assert!(matches!(lightcone_front(&field, &spec, 0.02), Err(Error::Fit(_))));
        assert!(lightcone_front(&field, &spec, 0.6).is_err());
        let late = population_field(&spec, &[1.0, 2.0]).unwrap();
        assert!(lightcone_front(&late, &spec, 0.02).is_err());
    }

    #[test]
    fn correlation_peak_near_half_recurrence() {
        let spec = ChainSpec::unit(100).unwrap();
        let trace = entropy_trace(&spec, &uniform(100.0, 0.1).unwrap()).unwrap();
        let peak = correlation_peak(&trace, &spec).unwrap();
        assert!((peak.tau_star - 50.0).abs() <= 15.0, "{peak:?}");
        assert!(peak.c_star <= correlation_max(100).unwrap());
        let short = entropy_trace(&spec, &uniform(80.0, 0.1).unwrap()).unwrap();
        assert!(correlation_peak(&short, &spec).is_err());
    }
}
