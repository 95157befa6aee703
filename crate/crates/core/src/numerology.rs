//! 5G-style numerology and the range/velocity resolution it buys.
//!
//! Everything here is a closed-form evaluation; no state is kept.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::SPEED_OF_LIGHT;

/// Base subcarrier spacing of numerology 0.
pub const BASE_SPACING_HZ: f64 = 15_000.0;
pub const MAX_MU: u32 = 7;

/// Numerology index `mu` with subcarrier spacing `15 kHz * 2^mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Numerology(u32);

impl Numerology {
    pub fn new(mu: u32) -> Result<Self> {
        if mu > MAX_MU {
            return invalid(format!("numerology index {mu} outside 0..={MAX_MU}"));
        }
        Ok(Self(mu))
    }

    pub fn mu(self) -> u32 {
        self.0
    }

    pub fn delta_f(self) -> f64 {
        BASE_SPACING_HZ * f64::from(1u32 << self.0)
    }
}

impl TryFrom<u32> for Numerology {
    type Error = crate::Error;

    fn try_from(mu: u32) -> Result<Self> {
        Numerology::new(mu)
    }
}

impl From<Numerology> for u32 {
    fn from(n: Numerology) -> u32 {
        n.0
    }
}

pub fn subcarrier_spacing(mu: u32) -> Result<f64> {
    Numerology::new(mu).map(Numerology::delta_f)
}

/// `c / (2B)`.
pub fn range_resolution(bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return invalid(format!("bandwidth must be positive, got {bandwidth_hz}"));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth_hz))
}

/// `c * delta_f / (2 f_c M)`, i.e. the Doppler resolution of an
/// `M`-symbol integration with symbol time `1/delta_f`, mapped to velocity.
pub fn velocity_resolution(f_c_hz: f64, delta_f_hz: f64, m_symbols: u64) -> Result<f64> {
    if !(f_c_hz > 0.0) || !(delta_f_hz > 0.0) || m_symbols == 0 {
        return invalid(format!(
            "velocity resolution needs positive inputs, got f_c={f_c_hz}, delta_f={delta_f_hz}, M={m_symbols}"
        ));
    }
    Ok(SPEED_OF_LIGHT * delta_f_hz / (2.0 * f_c_hz * m_symbols as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub mu: u32,
    pub delta_f: f64,
    pub n_subcarriers: u64,
    pub t_symbol: f64,
    pub range_resolution: f64,
    pub velocity_resolution: f64,
}

/// How the subcarrier count of each row is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableMode {
    /// `N = floor(B / delta_f)`, `dR = c/(2B)`.
    FixedBandwidth { bandwidth_hz: f64 },
    /// Fixed `N`, so the occupied bandwidth `N * delta_f` scales with `mu`.
    FixedSubcarriers { n: u64 },
}

/// Number of symbols used for the velocity column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolCount {
    Fixed(u64),
    /// `M := N` for every row. The published fixed-bandwidth table only
    /// reproduces under this reading even though its caption states M = 64.
    MatchSubcarriers,
}

pub fn tradeoff_table(
    mode: TableMode,
    f_c_hz: f64,
    symbols: SymbolCount,
    mu_list: &[u32],
) -> Result<Vec<ResolutionRow>> {
    if mu_list.is_empty() {
        return invalid("empty numerology list");
    }
    let mut rows = Vec::with_capacity(mu_list.len());
    for &mu in mu_list {
        let delta_f = subcarrier_spacing(mu)?;
        let (n, range_res) = match mode {
            TableMode::FixedBandwidth { bandwidth_hz } => {
                if !(bandwidth_hz >= delta_f) {
                    return invalid(format!(
                        "bandwidth {bandwidth_hz} Hz smaller than subcarrier spacing {delta_f} Hz"
                    ));
                }
                ((bandwidth_hz / delta_f).floor() as u64, range_resolution(bandwidth_hz)?)
            }
            TableMode::FixedSubcarriers { n } => {
                if n == 0 {
                    return invalid("subcarrier count must be positive");
                }
                (n, range_resolution(n as f64 * delta_f)?)
            }
        };
        let m = match symbols {
            SymbolCount::Fixed(m) => m,
            SymbolCount::MatchSubcarriers => n,
        };
        rows.push(ResolutionRow {
            mu,
            delta_f,
            n_subcarriers: n,
            t_symbol: 1.0 / delta_f,
            range_resolution: range_res,
            velocity_resolution: velocity_resolution(f_c_hz, delta_f, m)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spacing_examples() {
        assert_eq!(subcarrier_spacing(5).unwrap(), 480_000.0);
        assert_eq!(subcarrier_spacing(0).unwrap(), 15_000.0);
        assert_eq!(subcarrier_spacing(7).unwrap(), 1_920_000.0);
        assert!(subcarrier_spacing(8).is_err());
    }

    #[test]
    fn spacing_strictly_increasing() {
        let s: Vec<f64> = (0..=MAX_MU).map(|mu| subcarrier_spacing(mu).unwrap()).collect();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn range_resolution_examples() {
        assert!((range_resolution(1.5e9).unwrap() - 0.0999).abs() < 5e-5);
        assert_eq!(range_resolution(SPEED_OF_LIGHT / 2.0).unwrap(), 1.0);
        // 299792458 / (2 * 122.88e6) = 1.219858...
        assert_relative_eq!(range_resolution(122.88e6).unwrap(), 1.219_858, epsilon = 1e-6);
        assert!(range_resolution(0.0).is_err());
        assert!(range_resolution(-1.0).is_err());
    }

    #[test]
    fn velocity_resolution_examples() {
        let v = velocity_resolution(130e9, 480e3, 3125).unwrap();
        assert!((v - 0.1771).abs() < 5e-5, "{v}");
        // 299792458 * 480e3 / (2 * 130e9 * 64) = 8.64786...
        assert_relative_eq!(velocity_resolution(130e9, 480e3, 64).unwrap(), 8.647_859, epsilon = 1e-5);
        assert_eq!(
            velocity_resolution(130e9, 480e3, 64).unwrap(),
            velocity_resolution(130e9, 960e3, 128).unwrap()
        );
        assert!(velocity_resolution(0.0, 480e3, 64).is_err());
        assert!(velocity_resolution(130e9, 480e3, 0).is_err());
    }

    #[test]
    fn fixed_bandwidth_rows() {
        let rows = tradeoff_table(
            TableMode::FixedBandwidth { bandwidth_hz: 1.5e9 },
            130e9,
            SymbolCount::MatchSubcarriers,
            &[4, 5, 6, 7],
        )
        .unwrap();
        assert_eq!(rows[0].n_subcarriers, 6250);
        assert!((rows[0].t_symbol * 1e6 - 4.17).abs() < 5e-3);
        assert_eq!(rows[2].n_subcarriers, 1562);
        assert!(rows.iter().all(|r| r.range_resolution == rows[0].range_resolution));
    }

    #[test]
    fn fixed_n_spot_values() {
        let rows = tradeoff_table(
            TableMode::FixedSubcarriers { n: 256 },
            130e9,
            SymbolCount::Fixed(64),
            &[4, 5, 6, 7],
        )
        .unwrap();
        assert!((rows[0].range_resolution - 2.44).abs() < 5e-3);
        assert!((rows[3].range_resolution - 0.305).abs() < 5e-4);
        for w in rows.windows(2) {
            assert_relative_eq!(w[1].range_resolution * 2.0, w[0].range_resolution, max_relative = 1e-14);
            assert_relative_eq!(w[1].velocity_resolution, 2.0 * w[0].velocity_resolution, max_relative = 1e-14);
        }
    }

    #[test]
    fn table_errors() {
        let mode = TableMode::FixedBandwidth { bandwidth_hz: 1.5e9 };
        assert!(tradeoff_table(mode, 130e9, SymbolCount::Fixed(64), &[]).is_err());
        let narrow = TableMode::FixedBandwidth { bandwidth_hz: 100e3 };
        assert!(tradeoff_table(narrow, 130e9, SymbolCount::Fixed(64), &[4]).is_err());
    }
}
