//! Oscillator phase-noise profiles and sample-path synthesis.
//!
//! A profile is a near-carrier plateau rolled off by a cascade of poles and
//! floored by white phase noise:
//!
//! ```text
//! L(f) = S_ref * prod_k (1 + (f / f_k)^a_k)^-1 + S_white      (linear units)
//! ```
//!
//! With orders summing to 3 the curve falls as 1/f after the first corner
//! and as 1/f^3 once every pole is active, before meeting the floor.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, u32)", into = "(f64, u32)")]
pub struct Pole {
    pub corner_hz: f64,
    pub order: u32,
}

impl From<(f64, u32)> for Pole {
    fn from((corner_hz, order): (f64, u32)) -> Self {
        Self { corner_hz, order }
    }
}

impl From<Pole> for (f64, u32) {
    fn from(p: Pole) -> Self {
        (p.corner_hz, p.order)
    }
}

fn default_gain() -> f64 {
    1.0
}

fn default_name() -> String {
    "custom".to_string()
}

/// One-sided phase-noise PSD profile. Levels are in dBc/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseNoiseModel {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(rename = "ref_level_dbc")]
    pub ref_level: f64,
    #[serde(rename = "white_floor_dbc")]
    pub white_floor: f64,
    pub poles: Vec<Pole>,
    /// Linear factor applied when reading `L(f)` as the phase PSD in rad^2/Hz.
    /// 1.0 takes dBc/Hz at face value (small-angle single-sideband reading);
    /// 2.0 would treat the profile as single-sideband of a double-sided process.
    #[serde(default = "default_gain")]
    pub phase_psd_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// Hardware-tuned D-band oscillator at 130 GHz.
    #[serde(rename = "tuned_130ghz")]
    Tuned130Ghz,
    /// 3GPP reference oscillator at 70 GHz.
    #[serde(rename = "tgpp_70ghz")]
    Tgpp70Ghz,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Tuned130Ghz, Preset::Tgpp70Ghz];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Tuned130Ghz => "tuned_130ghz",
            Preset::Tgpp70Ghz => "tgpp_70ghz",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown phase-noise preset '{s}'")))
    }
}

pub fn builtin_model(which: Preset) -> PhaseNoiseModel {
    let (ref_level, white_floor, poles) = match which {
        Preset::Tuned130Ghz => (-70.0, -150.0, vec![(1.1e4, 1), (1.1e7, 2)]),
        Preset::Tgpp70Ghz => (-39.5, -111.0, vec![(3.1e3, 1), (3.96e5, 1), (7.54e8, 1)]),
    };
    PhaseNoiseModel {
        name: which.name().to_string(),
        ref_level,
        white_floor,
        poles: poles.into_iter().map(Pole::from).collect(),
        phase_psd_gain: 1.0,
    }
}

impl PhaseNoiseModel {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let model: PhaseNoiseModel =
            toml::from_str(text).map_err(|e| Error::Config(format!("phase-noise model: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ref_level > self.white_floor) {
            return invalid(format!(
                "reference level {} dBc/Hz must exceed white floor {} dBc/Hz",
                self.ref_level, self.white_floor
            ));
        }
        if self.poles.iter().any(|p| p.order == 0 || !(p.corner_hz > 0.0)) {
            return invalid("pole corners must be positive and orders at least 1");
        }
        if self.poles.windows(2).any(|w| w[1].corner_hz <= w[0].corner_hz) {
            return invalid("pole corners must be strictly increasing");
        }
        if !(self.phase_psd_gain > 0.0) {
            return invalid("phase_psd_gain must be positive");
        }
        Ok(())
    }

    /// `L(f)` in linear units (1/Hz).
    pub fn psd_linear(&self, f_hz: f64) -> f64 {
        let plateau = self
            .poles
            .iter()
            .fold(db_to_lin(self.ref_level), |acc, p| acc / (1.0 + (f_hz / p.corner_hz).powi(p.order as i32)));
        plateau + db_to_lin(self.white_floor)
    }

    /// Phase PSD `S_phi(f)` in rad^2/Hz used for synthesis.
    pub fn phase_psd(&self, f_hz: f64) -> f64 {
        self.phase_psd_gain * self.psd_linear(f_hz)
    }
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Evaluates the profile at offset `f_hz`, in dBc/Hz.
pub fn psd_eval(model: &PhaseNoiseModel, f_hz: f64) -> Result<f64> {
    if !(f_hz > 0.0) {
        return invalid(format!("PSD offset must be positive, got {f_hz}"));
    }
    Ok(10.0 * model.psd_linear(f_hz).log10())
}

/// An unwrapped phase trajectory `phi[n]` in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PnSamplePath {
    pub phi: Vec<f64>,
    pub sample_rate: f64,
}

impl PnSamplePath {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

/// Draws a Gaussian phase path whose one-sided PSD follows `model`.
///
/// Spectral coefficients on bins `1..=length/2` are complex Gaussian with
/// variance `S_phi(f_k) * f_s * length / 2` (the Nyquist bin is real with
/// variance `S_phi * f_s * length`), mirrored to Hermitian symmetry with a
/// zero DC bin and inverse transformed. The resulting path has variance
/// `sum_k S_phi(f_k) * f_s / length`.
pub fn synthesize(model: &PhaseNoiseModel, length: usize, sample_rate: f64, seed: u64) -> Result<PnSamplePath> {
    if length < 2 {
        return invalid(format!("phase-noise path needs at least 2 samples, got {length}"));
    }
    if !(sample_rate > 0.0) {
        return invalid(format!("sample rate must be positive, got {sample_rate}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len_f = length as f64;
    let half = length / 2;
    let mut spec = vec![Complex64::new(0.0, 0.0); length];
    for k in 1..=half {
        let f = k as f64 * sample_rate / len_f;
        let power = model.phase_psd(f) * sample_rate * len_f;
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if 2 * k == length {
            spec[k] = Complex64::new(re * power.sqrt(), 0.0);
        } else {
            let c = Complex64::new(re, im) * (power / 4.0).sqrt();
            spec[k] = c;
            spec[length - k] = c.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(length).process(&mut spec);
    let phi = spec.iter().map(|v| v.re / len_f).collect();
    Ok(PnSamplePath { phi, sample_rate })
}

/// One differential phase weight per OFDM symbol,
/// `w_m = exp(j (phi[t_m - d] - phi[t_m]))` with `t_m = m * stride + offset`.
pub fn symbol_cpe_weights(
    path: &PnSamplePath,
    delay_samples: usize,
    symbol_stride: usize,
    symbol_offset: usize,
    m_symbols: usize,
) -> Result<Vec<Complex64>> {
    if symbol_offset < delay_samples {
        return invalid(format!(
            "symbol offset {symbol_offset} smaller than delay {delay_samples}; pad the path"
        ));
    }
    let last = symbol_offset + m_symbols.saturating_sub(1) * symbol_stride;
    if m_symbols > 0 && last >= path.len() {
        return invalid(format!("path of {} samples too short for index {last}", path.len()));
    }
    Ok((0..m_symbols)
        .map(|m| {
            let t = m * symbol_stride + symbol_offset;
            Complex64::from_polar(1.0, path.phi[t - delay_samples] - path.phi[t])
        })
        .collect())
}
