//! Accuracy and sidelobe figures of merit, plus textbook CRB reference curves.

use serde::{Deserialize, Serialize};

use crate::channel::TargetScenario;
use crate::config::SystemConfig;
use crate::error::{invalid, Result};
use crate::radar::SensingEstimate;
use crate::SPEED_OF_LIGHT;

/// Root-mean-square range and velocity error over a set of trials.
pub fn rmse(estimates: &[SensingEstimate], truth: &TargetScenario) -> Result<(f64, f64)> {
    if estimates.is_empty() {
        return invalid("RMSE over an empty set of estimates");
    }
    let n = estimates.len() as f64;
    let (sr, sv) = estimates.iter().fold((0.0, 0.0), |(sr, sv), e| {
        (sr + (e.range_m - truth.range_m).powi(2), sv + (e.velocity_mps - truth.velocity_mps).powi(2))
    });
    Ok(((sr / n).sqrt(), (sv / n).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidelobeReport {
    /// `-inf` when there is no sidelobe energy at all.
    pub pslr_db: f64,
    pub islr_db: f64,
    /// Inclusive bin range of the mainlobe.
    pub mainlobe_span_bins: (usize, usize),
}

/// PSLR and ISLR of a power cut around `peak_index`.
///
/// The mainlobe runs from the first local minimum left of the peak to the
/// first local minimum right of it (null to null), both included. A lobe
/// that reaches the end of the cut is truncated there.
pub fn sidelobe_metrics(cut: &[f64], peak_index: usize) -> Result<SidelobeReport> {
    if peak_index >= cut.len() {
        return invalid(format!("peak index {peak_index} outside cut of {}", cut.len()));
    }
    let mut lo = peak_index;
    while lo > 0 && cut[lo - 1] < cut[lo] {
        lo -= 1;
    }
    let mut hi = peak_index;
    while hi + 1 < cut.len() && cut[hi + 1] < cut[hi] {
        hi += 1;
    }
    let peak = cut[peak_index];
    let main: f64 = cut[lo..=hi].iter().sum();
    let sides = cut[..lo].iter().chain(&cut[hi + 1..]);
    let (max_side, sum_side) = sides.fold((0.0f64, 0.0), |(mx, s), &p| (mx.max(p), s + p));
    let ratio_db = |num: f64, den: f64| if num > 0.0 { 10.0 * (num / den).log10() } else { f64::NEG_INFINITY };
    Ok(SidelobeReport {
        pslr_db: ratio_db(max_side, peak),
        islr_db: ratio_db(sum_side, main),
        mainlobe_span_bins: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbPoint {
    pub snr_db: f64,
    pub sigma_range_m: f64,
    pub sigma_velocity_mps: f64,
}

/// Cramer-Rao bounds for the delay and Doppler of a single 2D complex
/// exponential observed over `N x M` resource elements in white noise:
///
/// ```text
/// var(tau) = 6 / ((2 pi delta_f)^2 gamma M N (N^2 - 1))
/// var(f_D) = 6 / ((2 pi T0)^2 gamma N M (M^2 - 1))
/// ```
///
/// mapped through `R = c tau / 2` and `v = c f_D / (2 f_c)`.
pub fn crb(cfg: &SystemConfig, snr_db: f64) -> Result<CrbPoint> {
    let (n, m) = (cfg.n_subcarriers as f64, cfg.m_symbols as f64);
    if cfg.n_subcarriers < 2 || cfg.m_symbols < 2 {
        return invalid("CRB needs at least 2 subcarriers and 2 symbols");
    }
    let gamma = 10f64.powf(snr_db / 10.0);
    let two_pi = std::f64::consts::TAU;
    let var_tau = 6.0 / ((two_pi * cfg.delta_f()).powi(2) * gamma * m * n * (n * n - 1.0));
    let var_fd = 6.0 / ((two_pi * cfg.symbol_period()).powi(2) * gamma * n * m * (m * m - 1.0));
    Ok(CrbPoint {
        snr_db,
        sigma_range_m: SPEED_OF_LIGHT / 2.0 * var_tau.sqrt(),
        sigma_velocity_mps: SPEED_OF_LIGHT / (2.0 * cfg.f_c_hz) * var_fd.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn est(r: f64, v: f64) -> SensingEstimate {
        SensingEstimate { range_m: r, velocity_mps: v, peak_power: 1.0, peak_bins: (0, 0), frac_bins: (0.0, 0.0) }
    }

    #[test]
    fn rmse_cases() {
        let truth = TargetScenario::default();
        assert_eq!(rmse(&[est(5.0, 1.5), est(5.0, 1.5)], &truth).unwrap(), (0.0, 0.0));
        let (r, v) = rmse(&[est(5.1, 1.5), est(4.9, 1.5)], &truth).unwrap();
        assert_relative_eq!(r, 0.1, epsilon = 1e-12);
        assert_eq!(v, 0.0);
        assert!(rmse(&[], &truth).is_err());
    }

    #[test]
    fn hand_cut() {
        let rep = sidelobe_metrics(&[1.0, 9.0, 1.0, 4.0, 1.0], 1).unwrap();
        assert_eq!(rep.mainlobe_span_bins, (0, 2));
        assert_relative_eq!(rep.pslr_db, 10.0 * (4.0f64 / 9.0).log10(), epsilon = 1e-12);
        assert!((rep.pslr_db + 3.52).abs() < 5e-3);
        assert_relative_eq!(rep.islr_db, 10.0 * (5.0f64 / 11.0).log10(), epsilon = 1e-12);
        assert!(sidelobe_metrics(&[], 0).is_err());
        assert!(sidelobe_metrics(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn impulse_has_no_sidelobes() {
        let mut cut = vec![0.0; 16];
        cut[6] = 3.0;
        let rep = sidelobe_metrics(&cut, 6).unwrap();
        assert_eq!(rep.pslr_db, f64::NEG_INFINITY);
        assert_eq!(rep.islr_db, f64::NEG_INFINITY);
        assert!(rep.mainlobe_span_bins.0 <= 6 && 6 <= rep.mainlobe_span_bins.1);
    }

    #[test]
    fn edge_peak_truncates() {
        let cut = [9.0, 3.0, 1.0, 2.0, 0.5, 0.1, 0.2, 0.1];
        let rep = sidelobe_metrics(&cut, 0).unwrap();
        assert_eq!(rep.mainlobe_span_bins, (0, 2));
        assert_relative_eq!(rep.pslr_db, 10.0 * (2.0f64 / 9.0).log10(), epsilon = 1e-12);
    }

    #[test]
    fn rect_tone_first_sidelobe() {
        // Oracle: direct DFT of an on-grid tone over 64 samples, x8 zero padding.
        let (n, pad) = (64usize, 512usize);
        let tone: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(1.0, TAU * 5.0 * i as f64 / n as f64)).collect();
        let cut: Vec<f64> = (0..pad)
            .map(|k| {
                tone.iter()
                    .enumerate()
                    .map(|(i, x)| x * Complex64::from_polar(1.0, -TAU * (k * i) as f64 / pad as f64))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect();
        let peak = (0..pad).max_by(|&a, &b| cut[a].total_cmp(&cut[b])).unwrap();
        assert_eq!(peak, 40);
        let rep = sidelobe_metrics(&cut, peak).unwrap();
        assert!((rep.pslr_db + 13.3).abs() < 0.1, "{}", rep.pslr_db);
    }

    #[test]
    fn crb_scaling() {
        let cfg = SystemConfig::default();
        let a = crb(&cfg, 20.0).unwrap();
        let b = crb(&cfg, 30.0).unwrap();
        assert_relative_eq!(a.sigma_range_m / b.sigma_range_m, 10f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(a.sigma_velocity_mps / b.sigma_velocity_mps, 10f64.sqrt(), max_relative = 1e-12);

        let big = SystemConfig { n_subcarriers: 512, k_fft: 2048, ..cfg.clone() };
        let ratio = crb(&cfg, 20.0).unwrap().sigma_range_m / crb(&big, 20.0).unwrap().sigma_range_m;
        assert!((ratio - 2f64.powf(1.5)).abs() < 1e-3, "{ratio}");
        assert!(crb(&SystemConfig { m_symbols: 1, l_fft: 2048, ..cfg }, 20.0).is_err());
    }

    #[test]
    fn crb_reference_values() {
        // Independent evaluation of the closed forms at 20 dB for the default
        // setup: delta_f = 480 kHz, T0 = 320 / 122.88 MHz, N = 256, M = 64.
        // var_tau = 6 / ((2 pi 4.8e5)^2 * 100 * 64 * 256 * 65535)
        //         = 6 / (9.0958e12 * 1.07372e11)       -> sigma_tau = 2.4786e-12 s
        // var_fd  = 6 / ((2 pi 2.6042e-6)^2 * 100 * 256 * 64 * 4095)
        //         = 6 / (2.6773e-10 * 6.7093e9)        -> sigma_fd  = 1.8276 Hz
        let p = crb(&SystemConfig::default(), 20.0).unwrap();
        assert_relative_eq!(p.sigma_range_m, 3.7153e-4, max_relative = 1e-4);
        assert_relative_eq!(p.sigma_velocity_mps, 2.1074e-3, max_relative = 1e-4);
    }

    proptest! {
        #[test]
        fn ratios_are_scale_free(cut in prop::collection::vec(0.0f64..10.0, 8..64), scale in 0.01f64..100.0) {
            let peak = (0..cut.len()).max_by(|&a, &b| cut[a].total_cmp(&cut[b]).then(b.cmp(&a))).unwrap();
            prop_assume!(cut[peak] > 0.0);
            let a = sidelobe_metrics(&cut, peak).unwrap();
            let scaled: Vec<f64> = cut.iter().map(|v| v * scale).collect();
            let b = sidelobe_metrics(&scaled, peak).unwrap();
            prop_assert!(a.pslr_db <= 0.0);
            prop_assert_eq!(a.mainlobe_span_bins, b.mainlobe_span_bins);
            if a.pslr_db.is_finite() {
                prop_assert!((a.pslr_db - b.pslr_db).abs() < 1e-9);
                prop_assert!((a.islr_db - b.islr_db).abs() < 1e-9);
            }
        }
    }
}
