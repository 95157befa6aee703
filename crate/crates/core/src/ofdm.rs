//! Frequency-domain symbol grids and CP-OFDM synthesis/analysis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

/// An `N x M` grid of complex values, subcarrier `l` by symbol `m`.
///
/// Storage is symbol-major: the `N` subcarriers of one symbol are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    data: Vec<Complex64>,
    n: usize,
    m: usize,
}

impl SymbolGrid {
    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        Self::from_vec(n, m, vec![Complex64::new(0.0, 0.0); n * m])
    }

    /// Builds a grid from symbol-major data (`data[m * n + l]`).
    pub fn from_vec(n: usize, m: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return invalid(format!("grid dimensions must be positive, got {n}x{m}"));
        }
        if data.len() != n * m {
            return invalid(format!("grid data has {} values, expected {}", data.len(), n * m));
        }
        Ok(Self { data, n, m })
    }

    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * m);
        for sym in 0..m {
            for sc in 0..n {
                data.push(f(sc, sym));
            }
        }
        Self::from_vec(n, m, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, l: usize, m: usize) -> Complex64 {
        self.data[m * self.n + l]
    }

    pub fn set(&mut self, l: usize, m: usize, v: Complex64) {
        self.data[m * self.n + l] = v;
    }

    pub fn symbol(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.n..(m + 1) * self.n]
    }

    pub fn symbol_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.data[m * self.n..(m + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.data.len() as f64
    }

    pub fn same_shape(&self, other: &SymbolGrid) -> bool {
        self.n == other.n && self.m == other.m
    }
}

/// Concatenated CP-OFDM symbols at `sample_rate = N * delta_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    pub n_cp: usize,
}

const QAM16_SCALE: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)

/// Gray-coded 16-QAM level for a 2-bit label: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
fn gray_level(bits: u8) -> f64 {
    match bits & 0b11 {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

/// Maps a 4-bit label to a unit-average-power 16-QAM point. The high bit
/// pair selects the in-phase level, the low pair the quadrature level.
pub fn qam16_point(label: u8) -> Complex64 {
    Complex64::new(gray_level(label >> 2), gray_level(label)) * QAM16_SCALE
}

pub fn generate_qam16(n: usize, m: usize, seed: u64) -> Result<SymbolGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymbolGrid::from_fn(n, m, |_, _| qam16_point(rng.random::<u8>() & 0x0f))
}

/// Unitary inverse DFT per symbol followed by a cyclic prefix of `n_cp` samples.
pub fn modulate(grid: &SymbolGrid, n_cp: usize, delta_f: f64) -> Result<TimeFrame> {
    let n = grid.n();
    if n_cp > n {
        return invalid(format!("cyclic prefix {n_cp} longer than symbol body {n}"));
    }
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut body = grid.as_slice().to_vec();
    ifft.process(&mut body);

    let mut samples = Vec::with_capacity(grid.m() * (n + n_cp));
    for sym in body.chunks_exact(n) {
        samples.extend(sym[n - n_cp..].iter().map(|v| v * scale));
        samples.extend(sym.iter().map(|v| v * scale));
    }
    Ok(TimeFrame { samples, sample_rate: n as f64 * delta_f, n_cp })
}

/// Drops each cyclic prefix and applies the unitary forward DFT per symbol.
pub fn demodulate(frame: &TimeFrame, n: usize, m: usize) -> Result<SymbolGrid> {
    let stride = n + frame.n_cp;
    if n == 0 || m == 0 || frame.samples.len() != m * stride {
        return invalid(format!(
            "frame of {} samples does not hold {m} symbols of {n}+{} samples",
            frame.samples.len(),
            frame.n_cp
        ));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut data = Vec::with_capacity(n * m);
    for sym in frame.samples.chunks_exact(stride) {
        data.extend(sym[frame.n_cp..].iter().map(|v| v * scale));
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut data);
    SymbolGrid::from_vec(n, m, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn max_err(a: &SymbolGrid, b: &SymbolGrid) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn constellation_geometry() {
        let allowed = [2.0f64.sqrt(), 10.0f64.sqrt(), 18.0f64.sqrt()].map(|v| v / 10.0f64.sqrt());
        let grid = generate_qam16(64, 32, 7).unwrap();
        for v in grid.as_slice() {
            assert!(allowed.iter().any(|a| (v.norm() - a).abs() < 1e-12), "{v}");
        }
        let avg: f64 = (0..16u8).map(|l| qam16_point(l).norm_sqr()).sum::<f64>() / 16.0;
        assert!((avg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        let levels: Vec<u8> = [-3.0, -1.0, 1.0, 3.0]
            .iter()
            .map(|&lv| (0..4u8).find(|&b| gray_level(b) == lv).unwrap())
            .collect();
        for w in levels.windows(2) {
            assert_eq!((w[0] ^ w[1]).count_ones(), 1);
        }
    }

    #[test]
    fn mean_power_near_unity() {
        let grid = generate_qam16(1000, 1000, 1).unwrap();
        assert!((grid.mean_power() - 1.0).abs() < 0.01);
    }

    #[test]
    fn seed_determinism() {
        assert_eq!(generate_qam16(16, 4, 3).unwrap(), generate_qam16(16, 4, 3).unwrap());
        assert_ne!(generate_qam16(16, 4, 3).unwrap(), generate_qam16(16, 4, 4).unwrap());
    }

    #[test]
    fn dc_subcarrier_gives_constant_body() {
        let n = 16;
        let grid = SymbolGrid::from_fn(n, 3, |l, _| {
            if l == 0 { Complex64::new((n as f64).sqrt(), 0.0) } else { Complex64::new(0.0, 0.0) }
        })
        .unwrap();
        let frame = modulate(&grid, 4, 1.0).unwrap();
        for v in &frame.samples {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn frame_length() {
        let grid = SymbolGrid::zeros(256, 64).unwrap();
        let frame = modulate(&grid, 64, 480e3).unwrap();
        assert_eq!(frame.samples.len(), 20_480);
        assert_eq!(frame.sample_rate, 256.0 * 480e3);
    }

    #[test]
    fn rejects_long_prefix_and_bad_length() {
        let grid = SymbolGrid::zeros(8, 2).unwrap();
        assert!(modulate(&grid, 9, 1.0).is_err());
        let frame = modulate(&grid, 2, 1.0).unwrap();
        assert!(demodulate(&frame, 8, 3).is_err());
    }

    #[test]
    fn zero_frame_demodulates_to_zero() {
        let frame = TimeFrame { samples: vec![Complex64::new(0.0, 0.0); 3 * 10], sample_rate: 1.0, n_cp: 2 };
        let grid = demodulate(&frame, 8, 3).unwrap();
        assert!(grid.as_slice().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn single_tone_by_direct_summation() {
        // Oracle: direct DFT of sqrt(N) e^{j 2 pi l0 n / N} for N = 8.
        let (n, l0) = (8usize, 3usize);
        let tone: Vec<Complex64> =
            (0..n).map(|i| Complex64::from_polar((n as f64).sqrt(), TAU * (l0 * i) as f64 / n as f64)).collect();
        let direct: Vec<Complex64> = (0..n)
            .map(|k| {
                tone.iter()
                    .enumerate()
                    .map(|(i, x)| x * Complex64::from_polar(1.0, -TAU * (k * i) as f64 / n as f64))
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect();
        assert!((direct[l0] - Complex64::new(n as f64, 0.0)).norm() < 1e-12);

        let mut samples = tone[n - 2..].to_vec();
        samples.extend_from_slice(&tone);
        let grid = demodulate(&TimeFrame { samples, sample_rate: 1.0, n_cp: 2 }, n, 1).unwrap();
        for k in 0..n {
            assert!((grid.get(k, 0) - direct[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn cyclic_prefix_copies_tail() {
        let grid = generate_qam16(32, 4, 9).unwrap();
        let frame = modulate(&grid, 8, 1.0).unwrap();
        for sym in frame.samples.chunks_exact(40) {
            assert_eq!(&sym[..8], &sym[32..]);
        }
    }

    proptest! {
        #[test]
        fn round_trip_and_parseval(seed in any::<u64>(), log_n in 2u32..7, m in 1usize..6, cp_frac in 0usize..5) {
            let n = 1usize << log_n;
            let n_cp = n * cp_frac / 4;
            let grid = generate_qam16(n, m, seed).unwrap();
            let frame = modulate(&grid, n_cp, 1.0).unwrap();
            let body_energy: f64 = frame
                .samples
                .chunks_exact(n + n_cp)
                .flat_map(|s| s[n_cp..].iter())
                .map(|v| v.norm_sqr())
                .sum();
            prop_assert!((body_energy - grid.energy()).abs() <= 1e-9 * grid.energy());
            let back = demodulate(&frame, n, m).unwrap();
            prop_assert!(max_err(&back, &grid) < 1e-10);

            let again = modulate(&back, n_cp, 1.0).unwrap();
            let err = again.samples.iter().zip(&frame.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10);
        }
    }
}
