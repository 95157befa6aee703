//! System parameters shared by every stage of the simulator.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerology::Numerology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rect,
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; len],
            Window::Hann if len < 2 => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|i| {
                    let x = std::f64::consts::TAU * i as f64 / (len - 1) as f64;
                    0.5 * (1.0 - x.cos())
                })
                .collect(),
        }
    }
}

/// Carrier, numerology and grid dimensions of one OFDM radar frame.
///
/// Defaults are the 130 GHz reference setup: 480 kHz spacing, 256
/// subcarriers, 64 symbols, a 64-sample cyclic prefix and 2048-point
/// transforms on both radar axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub f_c_hz: f64,
    pub mu: Numerology,
    pub n_subcarriers: usize,
    pub m_symbols: usize,
    pub n_cp: usize,
    pub k_fft: usize,
    pub l_fft: usize,
    pub window: Window,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            f_c_hz: 130e9,
            mu: Numerology::new(5).expect("mu 5 is valid"),
            n_subcarriers: 256,
            m_symbols: 64,
            n_cp: 64,
            k_fft: 2048,
            l_fft: 2048,
            window: Window::Rect,
        }
    }
}

impl SystemConfig {
    pub fn delta_f(&self) -> f64 {
        self.mu.delta_f()
    }

    /// `f_s = N * delta_f`.
    pub fn sample_rate(&self) -> f64 {
        self.n_subcarriers as f64 * self.delta_f()
    }

    /// Full symbol period including the cyclic prefix, `(N + N_cp) / f_s`.
    pub fn symbol_period(&self) -> f64 {
        (self.n_subcarriers + self.n_cp) as f64 / self.sample_rate()
    }

    pub fn cp_duration(&self) -> f64 {
        self.n_cp as f64 / self.sample_rate()
    }

    pub fn frame_len(&self) -> usize {
        self.m_symbols * (self.n_subcarriers + self.n_cp)
    }

    pub fn wavelength(&self) -> f64 {
        crate::SPEED_OF_LIGHT / self.f_c_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_c_hz > 0.0) || !self.f_c_hz.is_finite() {
            return invalid(format!("carrier frequency must be positive, got {}", self.f_c_hz));
        }
        if self.n_subcarriers == 0 || self.m_symbols == 0 {
            return invalid("grid dimensions must be positive");
        }
        if self.n_cp > self.n_subcarriers {
            return invalid(format!(
                "cyclic prefix {} longer than symbol body {}",
                self.n_cp, self.n_subcarriers
            ));
        }
        check_fft_size("k_fft", self.k_fft, self.n_subcarriers)?;
        check_fft_size("l_fft", self.l_fft, self.m_symbols)?;
        Ok(())
    }
}

pub(crate) fn check_fft_size(name: &str, size: usize, min: usize) -> Result<()> {
    if !size.is_power_of_two() {
        return invalid(format!("{name} = {size} is not a power of two"));
    }
    if size < min {
        return invalid(format!("{name} = {size} smaller than the {min} samples it transforms"));
    }
    Ok(())
}
