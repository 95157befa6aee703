//! FFT range-Doppler processing: transmit-symbol removal, zero-padded 2D
//! transform, peak picking with parabolic refinement and the mapping from
//! bins to metres and metres per second.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::config::{check_fft_size, SystemConfig};
use crate::error::{invalid, Result};
use crate::ofdm::SymbolGrid;
use crate::SPEED_OF_LIGHT;

/// Element-wise `rx / tx`.
pub fn compensate(rx: &SymbolGrid, tx: &SymbolGrid) -> Result<SymbolGrid> {
    if !rx.same_shape(tx) {
        return invalid(format!("shape mismatch: rx {}x{}, tx {}x{}", rx.n(), rx.m(), tx.n(), tx.m()));
    }
    if tx.as_slice().iter().any(|v| v.norm_sqr() == 0.0) {
        return invalid("transmit grid contains a zero symbol");
    }
    let data = rx.as_slice().iter().zip(tx.as_slice()).map(|(y, x)| y / x).collect();
    SymbolGrid::from_vec(rx.n(), rx.m(), data)
}

/// Power over `k_fft` range bins by `l_fft` Doppler bins.
///
/// Stored range-major; the Doppler axis is shifted so that zero velocity
/// sits at column `l_fft / 2` and negative velocities occupy the left half.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    power: Vec<f64>,
    k_fft: usize,
    l_fft: usize,
    pub range_bin_m: f64,
    pub velocity_bin_mps: f64,
}

impl RangeDopplerMap {
    pub fn k_fft(&self) -> usize {
        self.k_fft
    }

    pub fn l_fft(&self) -> usize {
        self.l_fft
    }

    pub fn zero_doppler_bin(&self) -> usize {
        self.l_fft / 2
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.power[k * self.l_fft + l]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.power
    }

    /// Doppler row at range bin `k`.
    pub fn velocity_cut(&self, k: usize) -> &[f64] {
        &self.power[k * self.l_fft..(k + 1) * self.l_fft]
    }

    pub fn range_cut(&self, l: usize) -> Vec<f64> {
        (0..self.k_fft).map(|k| self.get(k, l)).collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.power.iter().sum()
    }

    /// `c / (2 delta_f)`.
    pub fn unambiguous_range(&self) -> f64 {
        self.range_bin_m * self.k_fft as f64
    }

    /// `c / (2 f_c T0)`, centred on zero.
    pub fn velocity_span(&self) -> f64 {
        self.velocity_bin_mps * self.l_fft as f64
    }
}

/// Builds the oversampled range-Doppler map of a compensated grid.
///
/// Subcarriers are inverse transformed (a delay ramp `exp(-j 2 pi l delta_f tau)`
/// peaks at `k = tau delta_f k_fft`), symbols are forward transformed
/// (`exp(j 2 pi f_D T0 m)` peaks at `f_D T0 l_fft` right of centre). Both
/// transforms carry `1/sqrt(size)` so total map power equals the energy of
/// the windowed grid.
pub fn range_doppler_map(grid: &SymbolGrid, cfg: &SystemConfig) -> Result<RangeDopplerMap> {
    let (n, m) = (grid.n(), grid.m());
    let (k_fft, l_fft) = (cfg.k_fft, cfg.l_fft);
    check_fft_size("k_fft", k_fft, n)?;
    check_fft_size("l_fft", l_fft, m)?;
    let w_range = cfg.window.coefficients(n);
    let w_doppler = cfg.window.coefficients(m);

    let mut planner = FftPlanner::new();
    let mut profiles = vec![Complex64::new(0.0, 0.0); m * k_fft];
    for (sym, chunk) in profiles.chunks_exact_mut(k_fft).enumerate() {
        for (l, (dst, x)) in chunk.iter_mut().zip(grid.symbol(sym)).enumerate() {
            *dst = x * (w_range[l] * w_doppler[sym]);
        }
    }
    planner.plan_fft_inverse(k_fft).process(&mut profiles);

    let doppler_fft = planner.plan_fft_forward(l_fft);
    let scale = 1.0 / (k_fft as f64 * l_fft as f64);
    let half = l_fft / 2;
    let mut power = vec![0.0; k_fft * l_fft];
    const BLOCK: usize = 64;
    let mut buf = vec![Complex64::new(0.0, 0.0); BLOCK * l_fft];
    for k0 in (0..k_fft).step_by(BLOCK) {
        let rows = BLOCK.min(k_fft - k0);
        let buf = &mut buf[..rows * l_fft];
        buf.fill(Complex64::new(0.0, 0.0));
        for r in 0..rows {
            for sym in 0..m {
                buf[r * l_fft + sym] = profiles[sym * k_fft + k0 + r];
            }
        }
        doppler_fft.process(buf);
        for r in 0..rows {
            let row = &buf[r * l_fft..(r + 1) * l_fft];
            let out = &mut power[(k0 + r) * l_fft..(k0 + r + 1) * l_fft];
            for (l, v) in row.iter().enumerate() {
                out[(l + half) % l_fft] = v.norm_sqr() * scale;
            }
        }
    }

    Ok(RangeDopplerMap {
        power,
        k_fft,
        l_fft,
        range_bin_m: SPEED_OF_LIGHT / (2.0 * k_fft as f64 * cfg.delta_f()),
        velocity_bin_mps: SPEED_OF_LIGHT / (2.0 * cfg.f_c_hz * l_fft as f64 * cfg.symbol_period()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingEstimate {
    pub range_m: f64,
    pub velocity_mps: f64,
    pub peak_power: f64,
    /// Range bin and stored (centred) Doppler bin of the global maximum.
    pub peak_bins: (usize, usize),
    pub frac_bins: (f64, f64),
}

/// Vertex of the parabola through `(-1, a), (0, b), (1, c)`, clamped to
/// `[-0.5, 0.5]`. Degenerate or non-finite input gives 0.
pub fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    let off = 0.5 * (a - c) / den;
    if den == 0.0 || !off.is_finite() {
        0.0
    } else {
        off.clamp(-0.5, 0.5)
    }
}

fn to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

/// Global maximum with 3-point parabolic refinement of the dB values along
/// each axis. Neighbours wrap around since both axes are periodic. Ties go
/// to the smaller range bin, then the smaller Doppler bin.
pub fn detect_peak(map: &RangeDopplerMap) -> SensingEstimate {
    let (k_fft, l_fft) = (map.k_fft, map.l_fft);
    let mut best = (0usize, 0usize);
    let mut best_p = f64::NEG_INFINITY;
    for (i, &p) in map.power.iter().enumerate() {
        if p > best_p {
            best_p = p;
            best = (i / l_fft, i % l_fft);
        }
    }
    let (k, l) = best;
    let frac_k = parabolic_offset(
        to_db(map.get((k + k_fft - 1) % k_fft, l)),
        to_db(best_p),
        to_db(map.get((k + 1) % k_fft, l)),
    );
    let frac_l = parabolic_offset(
        to_db(map.get(k, (l + l_fft - 1) % l_fft)),
        to_db(best_p),
        to_db(map.get(k, (l + 1) % l_fft)),
    );
    let range_bins = (k as f64 + frac_k).rem_euclid(k_fft as f64);
    let doppler_bins = l as f64 + frac_l - map.zero_doppler_bin() as f64;
    SensingEstimate {
        range_m: range_bins * map.range_bin_m,
        velocity_mps: doppler_bins * map.velocity_bin_mps,
        peak_power: best_p.max(0.0),
        peak_bins: best,
        frac_bins: (frac_k, frac_l),
    }
}

/// Range and velocity of (fractional) bins `k` and centred Doppler bin
/// `l_centered` on a `k_fft x l_fft` map.
pub fn bins_to_physical(k: f64, l_centered: f64, cfg: &SystemConfig, k_fft: usize, l_fft: usize) -> (f64, f64) {
    let range = SPEED_OF_LIGHT * k / (2.0 * k_fft as f64 * cfg.delta_f());
    let velocity = SPEED_OF_LIGHT * l_centered / (2.0 * cfg.f_c_hz * l_fft as f64 * cfg.symbol_period());
    (range, velocity)
}

/// Dense matched-filter search by direct summation, independent of the FFT
/// path. Used to cross-check FFT estimates on small grids.
pub mod matched_filter {
    use super::*;

    /// `|sum_{l,m} g[l,m] exp(+j 2 pi l delta_f tau) exp(-j 2 pi f_D T0 m)|^2`.
    pub fn power(grid: &SymbolGrid, cfg: &SystemConfig, range_m: f64, velocity_mps: f64) -> f64 {
        let tau = 2.0 * range_m / SPEED_OF_LIGHT;
        let f_d = 2.0 * velocity_mps * cfg.f_c_hz / SPEED_OF_LIGHT;
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..grid.m() {
            for l in 0..grid.n() {
                let phase = TAU * (l as f64 * cfg.delta_f() * tau - f_d * cfg.symbol_period() * m as f64);
                acc += grid.get(l, m) * Complex64::from_polar(1.0, phase);
            }
        }
        acc.norm_sqr()
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct SearchBox {
        pub range_m: (f64, f64),
        pub velocity_mps: (f64, f64),
        pub range_steps: usize,
        pub velocity_steps: usize,
    }

    /// Maximiser of [`power`] over an evenly spaced grid spanning the box
    /// (end points included). Ties keep the first candidate in
    /// velocity-major order.
    pub fn search(grid: &SymbolGrid, cfg: &SystemConfig, b: &SearchBox) -> (f64, f64, f64) {
        let (n, m) = (grid.n(), grid.m());
        let lin = |lo: f64, hi: f64, steps: usize, i: usize| {
            if steps <= 1 { lo } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 }
        };
        let mut best = (b.range_m.0, b.velocity_mps.0, f64::NEG_INFINITY);
        let mut per_sc = vec![Complex64::new(0.0, 0.0); n];
        for iv in 0..b.velocity_steps.max(1) {
            let v = lin(b.velocity_mps.0, b.velocity_mps.1, b.velocity_steps, iv);
            let f_d = 2.0 * v * cfg.f_c_hz / SPEED_OF_LIGHT;
            let rot: Vec<Complex64> =
                (0..m).map(|s| Complex64::from_polar(1.0, -TAU * f_d * cfg.symbol_period() * s as f64)).collect();
            for (l, acc) in per_sc.iter_mut().enumerate() {
                *acc = (0..m).map(|s| grid.get(l, s) * rot[s]).sum();
            }
            for ir in 0..b.range_steps.max(1) {
                let r = lin(b.range_m.0, b.range_m.1, b.range_steps, ir);
                let step = TAU * cfg.delta_f() * 2.0 * r / SPEED_OF_LIGHT;
                let p = per_sc
                    .iter()
                    .enumerate()
                    .map(|(l, s)| s * Complex64::from_polar(1.0, step * l as f64))
                    .sum::<Complex64>()
                    .norm_sqr();
                if p > best.2 {
                    best = (r, v, p);
                }
            }
        }
        best
    }

    /// Coarse search over the whole unambiguous region followed by a fine
    /// search around the coarse winner. `coarse` and `fine` are the number of
    /// candidates per Nyquist-rate resolution cell in each pass.
    pub fn global_search(grid: &SymbolGrid, cfg: &SystemConfig, coarse: usize, fine: usize) -> (f64, f64) {
        let r_span = SPEED_OF_LIGHT / (2.0 * cfg.delta_f());
        let v_span = SPEED_OF_LIGHT / (2.0 * cfg.f_c_hz * cfg.symbol_period());
        let r_cell = r_span / grid.n() as f64;
        let v_cell = v_span / grid.m() as f64;
        let coarse_box = SearchBox {
            range_m: (0.0, r_span - r_cell / coarse as f64),
            velocity_mps: (-v_span / 2.0, v_span / 2.0 - v_cell / coarse as f64),
            range_steps: grid.n() * coarse,
            velocity_steps: grid.m() * coarse,
        };
        let (r0, v0, _) = search(grid, cfg, &coarse_box);
        let fine_box = SearchBox {
            range_m: (r0 - r_cell / coarse as f64, r0 + r_cell / coarse as f64),
            velocity_mps: (v0 - v_cell / coarse as f64, v0 + v_cell / coarse as f64),
            range_steps: 2 * fine + 1,
            velocity_steps: 2 * fine + 1,
        };
        let (r, v, _) = search(grid, cfg, &fine_box);
        (r, v)
    }
}
