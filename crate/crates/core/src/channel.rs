//! Monostatic single-target echo: delay ramp, Doppler progression,
//! differential phase noise and receiver noise.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::ofdm::{SymbolGrid, TimeFrame};
use crate::phase_noise::{symbol_cpe_weights, PhaseNoiseModel, PnSamplePath};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetScenario {
    pub range_m: f64,
    /// Radial velocity, positive when closing.
    pub velocity_mps: f64,
    pub amplitude: f64,
    /// Carried for reporting only; no link budget is derived from it.
    pub rcs_dbsm: f64,
}

impl Default for TargetScenario {
    fn default() -> Self {
        Self { range_m: 5.0, velocity_mps: 1.5, amplitude: 1.0, rcs_dbsm: -20.0 }
    }
}

impl TargetScenario {
    /// Round-trip delay `2R/c`.
    pub fn delay_s(&self) -> f64 {
        2.0 * self.range_m / SPEED_OF_LIGHT
    }

    /// Two-way Doppler shift `2 v f_c / c`.
    pub fn doppler_hz(&self, f_c_hz: f64) -> f64 {
        2.0 * self.velocity_mps * f_c_hz / SPEED_OF_LIGHT
    }

    /// Round-trip delay rounded to whole samples at `f_s`.
    pub fn delay_samples(&self, cfg: &SystemConfig) -> usize {
        (self.delay_s() * cfg.sample_rate()).round() as usize
    }

    /// True when the echo stays inside the cyclic prefix, the regime in
    /// which the per-subcarrier model is exact.
    pub fn within_cyclic_prefix(&self, cfg: &SystemConfig) -> bool {
        self.delay_s() < cfg.cp_duration()
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if !(self.range_m >= 0.0) || !self.range_m.is_finite() {
            return invalid(format!("target range must be non-negative, got {}", self.range_m));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() || !self.velocity_mps.is_finite() {
            return invalid("target amplitude must be non-negative and velocity finite");
        }
        if self.delay_s() >= cfg.symbol_period() {
            return Err(Error::ModelValidity(format!(
                "round-trip delay {:.3e} s exceeds the symbol period {:.3e} s",
                self.delay_s(),
                cfg.symbol_period()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PnMode {
    Off,
    /// One differential weight per symbol applied on the grid (no ICI).
    CpeDifferential,
    /// Sample-wise differential phase applied to the time frame, which
    /// produces inter-carrier interference after demodulation.
    #[default]
    PerSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Per resource element, after the DFT. `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub pn_mode: PnMode,
    pub pn_model: Option<PhaseNoiseModel>,
    pub noise_seed: u64,
    pub pn_seed: u64,
}

/// `y = a x exp(-j 2 pi l delta_f tau) exp(j 2 pi f_D m T0)`, noise and
/// phase-noise free.
pub fn apply_target(tx: &SymbolGrid, scenario: &TargetScenario, cfg: &SystemConfig) -> Result<SymbolGrid> {
    scenario.validate(cfg)?;
    let range_step = -TAU * cfg.delta_f() * scenario.delay_s();
    let doppler_step = TAU * scenario.doppler_hz(cfg.f_c_hz) * cfg.symbol_period();
    let range_ramp: Vec<Complex64> =
        (0..tx.n()).map(|l| Complex64::from_polar(scenario.amplitude, range_step * l as f64)).collect();
    let mut out = tx.clone();
    for m in 0..tx.m() {
        let rot = Complex64::from_polar(1.0, doppler_step * m as f64);
        for (y, r) in out.symbol_mut(m).iter_mut().zip(&range_ramp) {
            *y *= r * rot;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Grid(SymbolGrid),
    Frame(TimeFrame),
}

/// Length of the phase path needed for one frame: the frame plus
/// `delay_samples` of leading padding so delayed indices never underflow.
pub fn pn_path_len(cfg: &SystemConfig, delay_samples: usize) -> usize {
    cfg.frame_len() + delay_samples
}

/// Multiplies in the differential phase `exp(j (phi(t - tau) - phi(t)))`.
///
/// `path` is indexed with a `delay_samples` offset: frame sample `n` sees
/// `phi[n + d]` at reception and `phi[n]` at transmission.
pub fn apply_phase_noise(
    signal: Signal,
    path: &PnSamplePath,
    delay_samples: usize,
    mode: PnMode,
    cfg: &SystemConfig,
) -> Result<Signal> {
    let needed = pn_path_len(cfg, delay_samples);
    if path.len() < needed {
        return invalid(format!("phase path has {} samples, need {needed}", path.len()));
    }
    match (mode, signal) {
        (PnMode::Off, s) => Ok(s),
        (PnMode::CpeDifferential, Signal::Grid(mut grid)) => {
            let stride = cfg.n_subcarriers + cfg.n_cp;
            let w = symbol_cpe_weights(path, delay_samples, stride, delay_samples + cfg.n_cp, grid.m())?;
            for (m, wm) in w.iter().enumerate() {
                grid.symbol_mut(m).iter_mut().for_each(|v| *v *= wm);
            }
            Ok(Signal::Grid(grid))
        }
        (PnMode::PerSample, Signal::Frame(mut frame)) => {
            let d = delay_samples;
            for (n, s) in frame.samples.iter_mut().enumerate() {
                *s *= Complex64::from_polar(1.0, path.phi[n] - path.phi[n + d]);
            }
            Ok(Signal::Frame(frame))
        }
        (PnMode::CpeDifferential, Signal::Frame(_)) => invalid("CPE phase noise applies to a symbol grid"),
        (PnMode::PerSample, Signal::Grid(_)) => invalid("per-sample phase noise applies to a time frame"),
    }
}

/// Adds circular complex Gaussian noise with `sigma^2 = P_sig / 10^(snr/10)`,
/// `P_sig` being the mean power of `grid`.
pub fn add_awgn(grid: &SymbolGrid, snr_db: f64, seed: u64) -> SymbolGrid {
    if snr_db == f64::INFINITY {
        return grid.clone();
    }
    let sigma2 = grid.mean_power() / 10f64.powf(snr_db / 10.0);
    let std = (sigma2 / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = grid.clone();
    for v in out.as_mut_slice() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *v += Complex64::new(re * std, im * std);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{demodulate, generate_qam16, modulate};
    use crate::phase_noise::{builtin_model, synthesize, Preset};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small_cfg() -> SystemConfig {
        SystemConfig { n_subcarriers: 16, m_symbols: 8, n_cp: 4, k_fft: 64, l_fft: 32, ..Default::default() }
    }

    #[test]
    fn static_target_scales_only() {
        let cfg = small_cfg();
        let tx = generate_qam16(16, 8, 1).unwrap();
        let sc = TargetScenario { range_m: 0.0, velocity_mps: 0.0, amplitude: 0.5, ..Default::default() };
        let y = apply_target(&tx, &sc, &cfg).unwrap();
        for (a, b) in y.as_slice().iter().zip(tx.as_slice()) {
            assert_eq!(*a, b * 0.5);
        }
    }

    #[test]
    fn delay_and_doppler_values() {
        let sc = TargetScenario::default();
        // 2 * 5 / 299792458 = 33.3564 ns
        assert_relative_eq!(sc.delay_s(), 3.335_641e-8, epsilon = 1e-13);
        // 2 * 1.5 * 130e9 / 299792458 = 1300.9 Hz
        assert_relative_eq!(sc.doppler_hz(130e9), 1300.900, epsilon = 1e-3);
        assert_eq!(sc.delay_samples(&SystemConfig::default()), 4);
        assert!(sc.within_cyclic_prefix(&SystemConfig::default()));
    }

    #[test]
    fn delay_beyond_symbol_is_rejected() {
        let cfg = small_cfg();
        let tx = generate_qam16(16, 8, 1).unwrap();
        let far = TargetScenario { range_m: 400.0, ..Default::default() };
        assert!(matches!(apply_target(&tx, &far, &cfg), Err(Error::ModelValidity(_))));
    }

    #[test]
    fn phase_slopes_match_delay_and_doppler() {
        let cfg = SystemConfig::default();
        let tx = generate_qam16(cfg.n_subcarriers, cfg.m_symbols, 4).unwrap();
        let sc = TargetScenario { range_m: 7.3, velocity_mps: -2.1, ..Default::default() };
        let y = apply_target(&tx, &sc, &cfg).unwrap();
        let want_l = -TAU * cfg.delta_f() * sc.delay_s();
        let want_m = TAU * sc.doppler_hz(cfg.f_c_hz) * cfg.symbol_period();

        // Least-squares slope of the unwrapped phase of y/x along each axis.
        let fit = |phases: Vec<f64>| -> (f64, f64) {
            let mut unwrapped = vec![phases[0]];
            for p in &phases[1..] {
                let prev = *unwrapped.last().unwrap();
                let d = (p - prev + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
                unwrapped.push(prev + d);
            }
            let n = unwrapped.len() as f64;
            let mx = (n - 1.0) / 2.0;
            let my = unwrapped.iter().sum::<f64>() / n;
            let sxy: f64 = unwrapped.iter().enumerate().map(|(i, v)| (i as f64 - mx) * (v - my)).sum();
            let sxx: f64 = (0..unwrapped.len()).map(|i| (i as f64 - mx).powi(2)).sum();
            let slope = sxy / sxx;
            let resid = unwrapped
                .iter()
                .enumerate()
                .map(|(i, v)| (v - my - slope * (i as f64 - mx)).abs())
                .fold(0.0, f64::max);
            (slope, resid)
        };
        let (sl, rl) = fit((0..cfg.n_subcarriers).map(|l| (y.get(l, 3) / tx.get(l, 3)).arg()).collect());
        let (sm, rm) = fit((0..cfg.m_symbols).map(|m| (y.get(10, m) / tx.get(10, m)).arg()).collect());
        assert!((sl - want_l).abs() < 1e-12 && rl < 1e-9, "{sl} {want_l} {rl}");
        assert!((sm - want_m).abs() < 1e-12 && rm < 1e-9, "{sm} {want_m} {rm}");
    }

    #[test]
    fn phase_noise_identities() {
        let cfg = small_cfg();
        let tx = generate_qam16(16, 8, 2).unwrap();
        let zero = PnSamplePath { phi: vec![0.0; pn_path_len(&cfg, 3)], sample_rate: cfg.sample_rate() };
        let frame = modulate(&tx, cfg.n_cp, cfg.delta_f()).unwrap();
        let out = apply_phase_noise(Signal::Frame(frame.clone()), &zero, 3, PnMode::PerSample, &cfg).unwrap();
        assert_eq!(out, Signal::Frame(frame.clone()));

        let noisy = synthesize(&builtin_model(Preset::Tgpp70Ghz), pn_path_len(&cfg, 0), cfg.sample_rate(), 1).unwrap();
        let out = apply_phase_noise(Signal::Grid(tx.clone()), &noisy, 0, PnMode::CpeDifferential, &cfg).unwrap();
        assert_eq!(out, Signal::Grid(tx.clone()));

        assert!(apply_phase_noise(Signal::Grid(tx.clone()), &zero, 3, PnMode::PerSample, &cfg).is_err());
        assert!(apply_phase_noise(Signal::Frame(frame), &zero, 3, PnMode::CpeDifferential, &cfg).is_err());
        let short = PnSamplePath { phi: vec![0.0; 10], sample_rate: 1.0 };
        assert!(apply_phase_noise(Signal::Grid(tx), &short, 3, PnMode::CpeDifferential, &cfg).is_err());
    }

    #[test]
    fn per_sample_linear_drift_is_common_rotation() {
        // Oracle: direct summation DFT of the rotated frame for N = 16.
        let cfg = small_cfg();
        let (alpha, d) = (0.013, 5usize);
        let tx = generate_qam16(16, 8, 3).unwrap();
        let path = PnSamplePath {
            phi: (0..pn_path_len(&cfg, d)).map(|n| alpha * n as f64).collect(),
            sample_rate: cfg.sample_rate(),
        };
        let frame = modulate(&tx, cfg.n_cp, cfg.delta_f()).unwrap();
        let Signal::Frame(rot) = apply_phase_noise(Signal::Frame(frame), &path, d, PnMode::PerSample, &cfg).unwrap()
        else {
            unreachable!()
        };
        let expected = Complex64::from_polar(1.0, -alpha * d as f64);
        let n = 16;
        for m in 0..8 {
            let body = &rot.samples[m * 20 + 4..m * 20 + 20];
            for k in 0..n {
                let direct: Complex64 = body
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s * Complex64::from_polar(1.0, -TAU * (k * i) as f64 / n as f64))
                    .sum::<Complex64>()
                    / (n as f64).sqrt();
                assert!((direct - tx.get(k, m) * expected).norm() < 1e-12);
            }
        }
        let grid = demodulate(&rot, 16, 8).unwrap();
        for (g, x) in grid.as_slice().iter().zip(tx.as_slice()) {
            assert!((g - x * expected).norm() < 1e-12);
        }
    }

    #[test]
    fn awgn_snr_and_determinism() {
        let tx = generate_qam16(1000, 1000, 5).unwrap();
        let noisy = add_awgn(&tx, 10.0, 77);
        let noise_power: f64 = noisy.as_slice().iter().zip(tx.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / tx.as_slice().len() as f64;
        let snr = 10.0 * (tx.mean_power() / noise_power).log10();
        assert!((snr - 10.0).abs() < 0.1, "{snr}");
        assert_eq!(add_awgn(&tx, 10.0, 77), noisy);
        assert_eq!(add_awgn(&tx, f64::INFINITY, 77), tx);
    }

    proptest! {
        #[test]
        fn target_preserves_magnitude(seed in any::<u64>(), r in 0.0f64..60.0, v in -20.0f64..20.0, a in 0.1f64..3.0) {
            let cfg = SystemConfig::default();
            let tx = generate_qam16(32, 8, seed).unwrap();
            let cfg = SystemConfig { n_subcarriers: 32, m_symbols: 8, n_cp: 8, k_fft: 64, l_fft: 16, ..cfg };
            let sc = TargetScenario { range_m: r, velocity_mps: v, amplitude: a, ..Default::default() };
            let y = apply_target(&tx, &sc, &cfg).unwrap();
            for (yy, xx) in y.as_slice().iter().zip(tx.as_slice()) {
                prop_assert!((yy.norm() - a * xx.norm()).abs() < 1e-12);
            }
        }
    }
}
