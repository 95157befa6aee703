//! Python bindings: numerology helpers, phase-noise profiles and synthesis,
//! CRB reference curves, and single trials or full sweeps of an experiment.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use isac_sim::experiment::{self, Execution, ModelLoadError};
use isac_sim::numerology::{self, SymbolCount, TableMode};
use isac_sim::phase_noise::{self, Preset};
use isac_sim::{metrics, report, ExperimentConfig, SweepRow, SweepSpec, TrialOutcome};

fn value_err(e: isac_sim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load_err(e: ModelLoadError) -> PyErr {
    match e {
        ModelLoadError::Config(e) => value_err(e),
        e @ ModelLoadError::Io(..) => PyIOError::new_err(e.to_string()),
    }
}

#[pyfunction]
fn subcarrier_spacing(mu: u32) -> PyResult<f64> {
    numerology::subcarrier_spacing(mu).map_err(value_err)
}

#[pyfunction]
fn range_resolution(bandwidth_hz: f64) -> PyResult<f64> {
    numerology::range_resolution(bandwidth_hz).map_err(value_err)
}

#[pyfunction]
fn velocity_resolution(f_c_hz: f64, delta_f_hz: f64, m_symbols: u64) -> PyResult<f64> {
    numerology::velocity_resolution(f_c_hz, delta_f_hz, m_symbols).map_err(value_err)
}

/// Rows of the resolution trade-off table as dicts.
///
/// `mode` is "fixed_bw" or "fixed_n"; `m_symbols=None` sets M = N per row.
#[pyfunction]
#[pyo3(signature = (mus, mode="fixed_bw", bandwidth_hz=1.5e9, n=256, f_c_hz=130e9, m_symbols=Some(64)))]
fn tradeoff_table<'py>(
    py: Python<'py>,
    mus: Vec<u32>,
    mode: &str,
    bandwidth_hz: f64,
    n: u64,
    f_c_hz: f64,
    m_symbols: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mode = match mode {
        "fixed_bw" => TableMode::FixedBandwidth { bandwidth_hz },
        "fixed_n" => TableMode::FixedSubcarriers { n },
        other => return Err(PyValueError::new_err(format!("unknown mode '{other}', use fixed_bw or fixed_n"))),
    };
    let symbols = m_symbols.map_or(SymbolCount::MatchSubcarriers, SymbolCount::Fixed);
    let rows = numerology::tradeoff_table(mode, f_c_hz, symbols, &mus).map_err(value_err)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("mu", r.mu)?;
            d.set_item("delta_f_hz", r.delta_f)?;
            d.set_item("n_subcarriers", r.n_subcarriers)?;
            d.set_item("t_symbol_s", r.t_symbol)?;
            d.set_item("range_res_m", r.range_resolution)?;
            d.set_item("velocity_res_mps", r.velocity_resolution)?;
            Ok(d)
        })
        .collect()
}

/// Oscillator phase-noise profile.
#[pyclass(name = "PhaseNoiseModel", module = "isac")]
struct PyPhaseNoiseModel {
    inner: phase_noise::PhaseNoiseModel,
}

#[pymethods]
impl PyPhaseNoiseModel {
    /// Built-in profile by name: "tuned_130ghz" or "tgpp_70ghz".
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let p: Preset = name.parse().map_err(value_err)?;
        Ok(Self { inner: phase_noise::builtin_model(p) })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        phase_noise::PhaseNoiseModel::from_toml_str(text).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// PSD at offset `f_hz` in dBc/Hz.
    fn psd(&self, f_hz: f64) -> PyResult<f64> {
        phase_noise::psd_eval(&self.inner, f_hz).map_err(value_err)
    }

    /// Phase path `phi[n]` in radians.
    fn synthesize(&self, length: usize, sample_rate: f64, seed: u64) -> PyResult<Vec<f64>> {
        phase_noise::synthesize(&self.inner, length, sample_rate, seed).map(|p| p.phi).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "PhaseNoiseModel(name={:?}, ref_level_dbc={}, white_floor_dbc={}, poles={:?})",
            self.inner.name,
            self.inner.ref_level,
            self.inner.white_floor,
            self.inner.poles.iter().map(|p| (p.corner_hz, p.order)).collect::<Vec<_>>()
        )
    }
}

fn outcome_dict<'py>(py: Python<'py>, o: &TrialOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("range_m", o.estimate.range_m)?;
    d.set_item("velocity_mps", o.estimate.velocity_mps)?;
    d.set_item("peak_power", o.estimate.peak_power)?;
    d.set_item("peak_bins", o.estimate.peak_bins)?;
    d.set_item("pslr_db", o.sidelobes.pslr_db)?;
    d.set_item("islr_db", o.sidelobes.islr_db)?;
    d.set_item("mainlobe_span_bins", o.sidelobes.mainlobe_span_bins)?;
    Ok(d)
}

fn row_dict<'py>(py: Python<'py>, r: &SweepRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("snr_db", r.snr_db)?;
    d.set_item("pn", &r.pn)?;
    d.set_item("fc_hz", r.fc_hz)?;
    d.set_item("rmse_range_m", r.rmse_range_m)?;
    d.set_item("rmse_velocity_mps", r.rmse_velocity_mps)?;
    d.set_item("mean_pslr_db", r.mean_pslr_db)?;
    d.set_item("mean_islr_db", r.mean_islr_db)?;
    d.set_item("crb_range_m", r.crb_range_m)?;
    d.set_item("crb_velocity_mps", r.crb_velocity_mps)?;
    d.set_item("trials", r.trials)?;
    Ok(d)
}

/// An experiment described by the same TOML as the `isac simulate`
/// config file. Every key is optional.
#[pyclass(name = "Experiment", module = "isac")]
struct PyExperiment {
    spec: SweepSpec,
}

#[pymethods]
impl PyExperiment {
    #[new]
    #[pyo3(signature = (toml="", seed=None))]
    fn new(toml: &str, seed: Option<u64>) -> PyResult<Self> {
        let mut cfg = ExperimentConfig::from_toml_str(toml).map_err(value_err)?;
        if let Some(s) = seed {
            cfg.sweep.master_seed = s;
        }
        let spec = cfg.to_sweep_spec().map_err(load_err)?;
        Ok(Self { spec })
    }

    /// Labels of the phase-noise variants, indexable by `run_trial`.
    #[getter]
    fn variants(&self) -> Vec<String> {
        self.spec.pn_variants.iter().map(|v| v.label().to_string()).collect()
    }

    #[getter]
    fn snr_db(&self) -> Vec<f64> {
        self.spec.snr_list_db.clone()
    }

    #[getter]
    fn trials(&self) -> usize {
        self.spec.trials
    }

    /// Cramer-Rao sigmas `(range_m, velocity_mps)` at `snr_db`.
    fn crb(&self, snr_db: f64) -> PyResult<(f64, f64)> {
        let p = metrics::crb(&self.spec.cfg, snr_db).map_err(value_err)?;
        Ok((p.sigma_range_m, p.sigma_velocity_mps))
    }

    fn run_trial<'py>(&self, py: Python<'py>, snr_db: f64, variant: usize, trial: usize) -> PyResult<Bound<'py, PyDict>> {
        let spec = &self.spec;
        let out = py.detach(|| experiment::run_trial(spec, snr_db, variant, trial)).map_err(value_err)?;
        outcome_dict(py, &out)
    }

    /// Range-Doppler power of one trial as `(k_fft, l_fft, power)` with
    /// `power` flattened range-major and zero Doppler at column `l_fft // 2`.
    fn range_doppler_map(&self, py: Python<'_>, snr_db: f64, variant: usize, trial: usize) -> PyResult<(usize, usize, Vec<f64>)> {
        let spec = &self.spec;
        let art = py.detach(|| experiment::run_trial_detailed(spec, snr_db, variant, trial)).map_err(value_err)?;
        Ok((art.map.k_fft(), art.map.l_fft(), art.map.as_slice().to_vec()))
    }

    /// Runs every (SNR, variant, trial) cell and returns one dict per row.
    #[pyo3(signature = (serial=false))]
    fn run_sweep<'py>(&self, py: Python<'py>, serial: bool) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let exec = if serial { Execution::Serial } else { Execution::Parallel };
        let spec = &self.spec;
        let res = py.detach(|| experiment::run_sweep_with(spec, exec)).map_err(value_err)?;
        res.rows.iter().map(|r| row_dict(py, r)).collect()
    }

    /// The sweep CSV exactly as `isac simulate` writes it.
    fn sweep_csv(&self, py: Python<'_>) -> PyResult<String> {
        let spec = &self.spec;
        let res = py.detach(|| experiment::run_sweep(spec)).map_err(value_err)?;
        let mut out = Vec::new();
        report::write_sweep_csv(&mut out, spec, &res).map_err(|e| PyIOError::new_err(e.to_string()))?;
        String::from_utf8(out).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

#[pymodule]
fn isac(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", isac_sim::VERSION)?;
    m.add("SPEED_OF_LIGHT", isac_sim::SPEED_OF_LIGHT)?;
    m.add_function(wrap_pyfunction!(subcarrier_spacing, m)?)?;
    m.add_function(wrap_pyfunction!(range_resolution, m)?)?;
    m.add_function(wrap_pyfunction!(velocity_resolution, m)?)?;
    m.add_function(wrap_pyfunction!(tradeoff_table, m)?)?;
    m.add_class::<PyPhaseNoiseModel>()?;
    m.add_class::<PyExperiment>()?;
    Ok(())
}
