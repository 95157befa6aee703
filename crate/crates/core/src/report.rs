//! CSV and JSON writers for every artifact the simulator emits.
//!
//! Each CSV starts with `#` comment lines identifying the crate version and
//! the fully resolved configuration, followed by a fixed column header.

use std::io::{self, Write};

use serde::Serialize;

use crate::channel::{PnMode, TargetScenario};
use crate::config::SystemConfig;
use crate::experiment::{PnVariant, SweepResult, SweepSpec};
use crate::numerology::ResolutionRow;
use crate::phase_noise::PhaseNoiseModel;
use crate::radar::RangeDopplerMap;
use crate::VERSION;

pub const SWEEP_HEADER: &str =
    "snr_db,pn,fc_hz,rmse_range_m,rmse_velocity_mps,mean_pslr_db,mean_islr_db,crb_range_m,crb_velocity_mps,trials";
pub const NUMEROLOGY_HEADER: &str = "mu,delta_f_hz,n_subcarriers,t_symbol_s,range_res_m,velocity_res_mps";
pub const PSD_HEADER: &str = "f_hz,psd_dbc_hz";
pub const MAP_HEADER: &str = "k,l,power_db";

#[derive(Serialize)]
struct ResolvedSweep<'a> {
    sweep: SweepMeta<'a>,
    system: &'a SystemConfig,
    target: &'a TargetScenario,
    phase_noise: PnMeta<'a>,
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    snr_db: &'a [f64],
    trials: usize,
    master_seed: u64,
}

#[derive(Serialize)]
struct PnMeta<'a> {
    mode: PnMode,
    variants: Vec<&'a str>,
    models: Vec<&'a PhaseNoiseModel>,
}

/// `#` header lines describing a sweep: version plus the resolved spec as TOML.
pub fn sweep_header(spec: &SweepSpec) -> Vec<String> {
    let resolved = ResolvedSweep {
        sweep: SweepMeta { snr_db: &spec.snr_list_db, trials: spec.trials, master_seed: spec.master_seed },
        system: &spec.cfg,
        target: &spec.scenario,
        phase_noise: PnMeta {
            mode: spec.pn_mode,
            variants: spec.pn_variants.iter().map(PnVariant::label).collect(),
            models: spec
                .pn_variants
                .iter()
                .filter_map(|v| match v {
                    PnVariant::Model(m) => Some(m),
                    PnVariant::Off => None,
                })
                .collect(),
        },
    };
    let mut lines = vec![format!("isac-sim {VERSION}")];
    let toml = toml::to_string(&resolved).unwrap_or_else(|e| format!("unserializable config: {e}"));
    lines.extend(toml.lines().map(str::to_string));
    lines
}

fn write_comments<W: Write + ?Sized>(w: &mut W, lines: &[String]) -> io::Result<()> {
    for line in lines {
        if line.is_empty() {
            writeln!(w, "#")?;
        } else {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write + ?Sized>(w: &mut W, spec: &SweepSpec, result: &SweepResult) -> io::Result<()> {
    write_comments(w, &sweep_header(spec))?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.pn,
            r.fc_hz,
            r.rmse_range_m,
            r.rmse_velocity_mps,
            r.mean_pslr_db,
            r.mean_islr_db,
            r.crb_range_m,
            r.crb_velocity_mps,
            r.trials
        )?;
    }
    Ok(())
}

/// JSON mirror of the sweep CSV. Non-finite numbers (e.g. a `-inf` PSLR)
/// are written as `null`.
pub fn write_sweep_json<W: Write + ?Sized>(w: &mut W, result: &SweepResult) -> io::Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        version: &'a str,
        rows: &'a SweepResult,
    }
    serde_json::to_writer_pretty(&mut *w, &Doc { version: VERSION, rows: result }).map_err(io::Error::other)?;
    writeln!(w)
}

pub fn write_numerology_csv<W: Write + ?Sized>(w: &mut W, comments: &[String], rows: &[ResolutionRow]) -> io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "{NUMEROLOGY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.mu, r.delta_f, r.n_subcarriers, r.t_symbol, r.range_resolution, r.velocity_resolution
        )?;
    }
    Ok(())
}

pub fn write_psd_csv<W: Write + ?Sized>(w: &mut W, comments: &[String], points: &[(f64, f64)]) -> io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "{PSD_HEADER}")?;
    for (f, p) in points {
        writeln!(w, "{f},{p}")?;
    }
    Ok(())
}

/// Dumps every map cell as `k,l,power_db` with `l` measured from zero
/// Doppler. Axis scaling is recorded in the comment header.
pub fn write_map_csv<W: Write + ?Sized>(w: &mut W, comments: &[String], map: &RangeDopplerMap) -> io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "# k_fft = {}", map.k_fft())?;
    writeln!(w, "# l_fft = {}", map.l_fft())?;
    writeln!(w, "# range_bin_m = {}", map.range_bin_m)?;
    writeln!(w, "# velocity_bin_mps = {}", map.velocity_bin_mps)?;
    writeln!(w, "# range_m = k * range_bin_m; velocity_mps = l * velocity_bin_mps")?;
    writeln!(w, "{MAP_HEADER}")?;
    let zero = map.zero_doppler_bin() as i64;
    for k in 0..map.k_fft() {
        for (l, p) in map.velocity_cut(k).iter().enumerate() {
            writeln!(w, "{k},{},{}", l as i64 - zero, 10.0 * p.log10())?;
        }
    }
    Ok(())
}

/// Log-spaced PSD samples of `model` from `f_min` to `f_max` inclusive.
pub fn psd_points(model: &PhaseNoiseModel, f_min: f64, f_max: f64, points: usize) -> crate::Result<Vec<(f64, f64)>> {
    if !(f_min > 0.0) || !(f_max > f_min) || points < 2 {
        return crate::error::invalid(format!(
            "need 0 < f_min < f_max and at least 2 points, got {f_min}, {f_max}, {points}"
        ));
    }
    let (a, b) = (f_min.log10(), f_max.log10());
    (0..points)
        .map(|i| {
            let f = if i == 0 {
                f_min
            } else if i + 1 == points {
                f_max
            } else {
                10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)
            };
            crate::phase_noise::psd_eval(model, f).map(|p| (f, p))
        })
        .collect()
}
