//! Monte-Carlo SNR sweeps over phase-noise variants.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    add_awgn, apply_phase_noise, apply_target, pn_path_len, PnMode, Signal, TargetScenario,
};
use crate::config::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::metrics::{crb, rmse, sidelobe_metrics, SidelobeReport};
use crate::ofdm::{demodulate, generate_qam16, modulate, SymbolGrid};
use crate::phase_noise::{builtin_model, synthesize, PhaseNoiseModel, Preset};
use crate::radar::{compensate, detect_peak, range_doppler_map, RangeDopplerMap, SensingEstimate};
use crate::seed::{trial_seed, Stream};

pub const DEFAULT_SNR_DB: [f64; 7] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_MASTER_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum PnVariant {
    Off,
    Model(PhaseNoiseModel),
}

impl PnVariant {
    pub fn label(&self) -> &str {
        match self {
            PnVariant::Off => "off",
            PnVariant::Model(m) => &m.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub cfg: SystemConfig,
    pub scenario: TargetScenario,
    /// Distinct values in dB; `f64::INFINITY` runs noise-free.
    pub snr_list_db: Vec<f64>,
    pub trials: usize,
    pub pn_variants: Vec<PnVariant>,
    /// How model variants are applied. Ignored for [`PnVariant::Off`].
    pub pn_mode: PnMode,
    pub master_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            cfg: SystemConfig::default(),
            scenario: TargetScenario::default(),
            snr_list_db: DEFAULT_SNR_DB.to_vec(),
            trials: DEFAULT_TRIALS,
            pn_variants: vec![PnVariant::Off, PnVariant::Model(builtin_model(Preset::Tuned130Ghz))],
            pn_mode: PnMode::PerSample,
            master_seed: DEFAULT_MASTER_SEED,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.scenario.validate(&self.cfg)?;
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.snr_list_db.is_empty() {
            return invalid("SNR list is empty");
        }
        if self.snr_list_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return invalid("SNR values must be numbers or +inf");
        }
        let mut sorted = self.snr_list_db.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return invalid("SNR list contains duplicates");
        }
        if self.pn_variants.is_empty() {
            return invalid("no phase-noise variants");
        }
        for v in &self.pn_variants {
            if let PnVariant::Model(m) = v {
                m.validate()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub estimate: SensingEstimate,
    pub sidelobes: SidelobeReport,
}

/// Everything a trial produces, including the intermediate map.
#[derive(Debug, Clone)]
pub struct TrialArtifacts {
    pub tx: SymbolGrid,
    pub rx: SymbolGrid,
    pub map: RangeDopplerMap,
    pub outcome: TrialOutcome,
}

/// Runs one trial and keeps the transmit grid, received grid and map.
///
/// Data symbols and receiver noise depend only on `(snr, trial)`, so the
/// phase-noise variants of one cell see identical symbols and noise and
/// differ only through the phase path.
pub fn run_trial_detailed(spec: &SweepSpec, snr_db: f64, variant: usize, trial: usize) -> Result<TrialArtifacts> {
    let cfg = &spec.cfg;
    let Some(pn) = spec.pn_variants.get(variant) else {
        return invalid(format!("variant index {variant} out of range"));
    };
    let tx = generate_qam16(cfg.n_subcarriers, cfg.m_symbols, trial_seed(spec.master_seed, snr_db, 0, trial, Stream::Data))?;
    let mut rx = apply_target(&tx, &spec.scenario, cfg)?;

    if let (PnVariant::Model(model), mode) = (pn, spec.pn_mode) {
        if mode != PnMode::Off {
            let d = spec.scenario.delay_samples(cfg);
            let seed = trial_seed(spec.master_seed, snr_db, variant, trial, Stream::PhaseNoise);
            let path = synthesize(model, pn_path_len(cfg, d), cfg.sample_rate(), seed)?;
            rx = match mode {
                PnMode::PerSample => {
                    let frame = modulate(&rx, cfg.n_cp, cfg.delta_f())?;
                    match apply_phase_noise(Signal::Frame(frame), &path, d, mode, cfg)? {
                        Signal::Frame(f) => demodulate(&f, cfg.n_subcarriers, cfg.m_symbols)?,
                        Signal::Grid(_) => unreachable!("per-sample phase noise returns a frame"),
                    }
                }
                _ => match apply_phase_noise(Signal::Grid(rx), &path, d, mode, cfg)? {
                    Signal::Grid(g) => g,
                    Signal::Frame(_) => unreachable!("CPE phase noise returns a grid"),
                },
            };
        }
    }

    let rx = add_awgn(&rx, snr_db, trial_seed(spec.master_seed, snr_db, 0, trial, Stream::Noise));
    let map = range_doppler_map(&compensate(&rx, &tx)?, cfg)?;
    let estimate = detect_peak(&map);
    let (k, l) = estimate.peak_bins;
    let sidelobes = sidelobe_metrics(map.velocity_cut(k), l)?;
    Ok(TrialArtifacts { tx, rx, map, outcome: TrialOutcome { estimate, sidelobes } })
}

pub fn run_trial(spec: &SweepSpec, snr_db: f64, variant: usize, trial: usize) -> Result<TrialOutcome> {
    run_trial_detailed(spec, snr_db, variant, trial).map(|a| a.outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub pn: String,
    pub fc_hz: f64,
    pub rmse_range_m: f64,
    pub rmse_velocity_mps: f64,
    pub mean_pslr_db: f64,
    pub mean_islr_db: f64,
    pub crb_range_m: f64,
    pub crb_velocity_mps: f64,
    pub trials: usize,
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Sorted by SNR, then in variant order.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, snr_db: f64, pn: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db && r.pn == pn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Execution::Parallel)
}

pub fn run_sweep_with(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let mut snrs = spec.snr_list_db.clone();
    snrs.sort_by(f64::total_cmp);

    let cells: Vec<(f64, usize, usize)> = snrs
        .iter()
        .flat_map(|&s| (0..spec.pn_variants.len()).flat_map(move |v| (0..spec.trials).map(move |t| (s, v, t))))
        .collect();
    let run = |&(s, v, t): &(f64, usize, usize)| {
        run_trial(spec, s, v, t).map_err(|e| Error::Trial {
            snr_db: s,
            pn: spec.pn_variants[v].label().to_string(),
            trial: t,
            source: Box::new(e),
        })
    };
    let outcomes: Vec<TrialOutcome> = match exec {
        Execution::Serial => cells.iter().map(run).collect::<Result<_>>()?,
        Execution::Parallel => cells.par_iter().map(run).collect::<Result<_>>()?,
    };

    let mut rows = Vec::with_capacity(snrs.len() * spec.pn_variants.len());
    for (chunk, (s, v)) in outcomes
        .chunks_exact(spec.trials)
        .zip(snrs.iter().flat_map(|&s| (0..spec.pn_variants.len()).map(move |v| (s, v))))
    {
        let estimates: Vec<SensingEstimate> = chunk.iter().map(|o| o.estimate).collect();
        let (rmse_range_m, rmse_velocity_mps) = rmse(&estimates, &spec.scenario)?;
        let n = chunk.len() as f64;
        let bound = crb(&spec.cfg, s)?;
        rows.push(SweepRow {
            snr_db: s,
            pn: spec.pn_variants[v].label().to_string(),
            fc_hz: spec.cfg.f_c_hz,
            rmse_range_m,
            rmse_velocity_mps,
            mean_pslr_db: chunk.iter().map(|o| o.sidelobes.pslr_db).sum::<f64>() / n,
            mean_islr_db: chunk.iter().map(|o| o.sidelobes.islr_db).sum::<f64>() / n,
            crb_range_m: bound.sigma_range_m,
            crb_velocity_mps: bound.sigma_velocity_mps,
            trials: chunk.len(),
            outcomes: chunk.to_vec(),
        });
    }
    Ok(SweepResult { rows })
}

/// `[sweep]` section of an experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { snr_db: DEFAULT_SNR_DB.to_vec(), trials: DEFAULT_TRIALS, master_seed: DEFAULT_MASTER_SEED }
    }
}

/// `[phase_noise]` section: a mode plus either a preset name or a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseNoiseSection {
    pub mode: PnMode,
    pub preset: Option<Preset>,
    pub file: Option<PathBuf>,
}

impl Default for PhaseNoiseSection {
    fn default() -> Self {
        Self { mode: PnMode::PerSample, preset: None, file: None }
    }
}

/// Structured experiment description. Every key is optional and falls back
/// to the 130 GHz reference experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub target: TargetScenario,
    pub sweep: SweepSection,
    pub phase_noise: PhaseNoiseSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses a config file; a relative phase-noise model path is taken
    /// relative to the config file's directory.
    pub fn from_file(path: &Path) -> std::io::Result<Result<Self>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_toml_str(&text).map(|mut cfg| {
            if let (Some(file), Some(dir)) = (cfg.phase_noise.file.as_mut(), path.parent()) {
                if file.is_relative() {
                    *file = dir.join(&*file);
                }
            }
            cfg
        }))
    }

    pub fn phase_noise_model(&self) -> std::result::Result<Option<PhaseNoiseModel>, ModelLoadError> {
        let pn = &self.phase_noise;
        if pn.mode == PnMode::Off {
            return Ok(None);
        }
        match (&pn.preset, &pn.file) {
            (Some(_), Some(_)) => {
                Err(ModelLoadError::Config(Error::Config("phase_noise: give either preset or file, not both".into())))
            }
            (None, Some(file)) => {
                let text = std::fs::read_to_string(file).map_err(|e| ModelLoadError::Io(file.clone(), e))?;
                PhaseNoiseModel::from_toml_str(&text).map(Some).map_err(ModelLoadError::Config)
            }
            (preset, None) => Ok(Some(builtin_model(preset.unwrap_or(Preset::Tuned130Ghz)))),
        }
    }

    /// Resolves the file into a sweep: PN-free plus the configured model
    /// (unless the mode is `off`).
    pub fn to_sweep_spec(&self) -> std::result::Result<SweepSpec, ModelLoadError> {
        let mut variants = vec![PnVariant::Off];
        if let Some(model) = self.phase_noise_model()? {
            variants.push(PnVariant::Model(model));
        }
        let spec = SweepSpec {
            cfg: self.system.clone(),
            scenario: self.target.clone(),
            snr_list_db: self.sweep.snr_db.clone(),
            trials: self.sweep.trials,
            pn_variants: variants,
            pn_mode: self.phase_noise.mode,
            master_seed: self.sweep.master_seed,
        };
        spec.validate().map_err(ModelLoadError::Config)?;
        Ok(spec)
    }
}

/// Resolving a config can fail on content or on reading a referenced file.
#[derive(Debug, thiserror::Error)]
pub enum ModelLoadError {
    #[error(transparent)]
    Config(Error),
    #[error("reading {0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}
