//! `isac`: run phase-noise sweeps and dump numerology tables, oscillator
//! spectra and range-Doppler maps as CSV.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isac_sim::experiment::{run_trial_detailed, ModelLoadError, PnVariant};
use isac_sim::numerology::{tradeoff_table, SymbolCount, TableMode};
use isac_sim::phase_noise::{builtin_model, PhaseNoiseModel, Preset};
use isac_sim::radar::{compensate, matched_filter};
use isac_sim::{report, ExperimentConfig, PnMode, SweepSpec};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<isac_sim::Error> for CliError {
    fn from(e: isac_sim::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ModelLoadError> for CliError {
    fn from(e: ModelLoadError) -> Self {
        match e {
            ModelLoadError::Config(e) => e.into(),
            e @ ModelLoadError::Io(..) => CliError::Io(e.to_string()),
        }
    }
}

fn io_err(what: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", what.display()))
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "isac", version, about = "OFDM ISAC sensing under oscillator phase noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo SNR sweep; writes the RMSE / sidelobe / CRB table.
    Simulate(SimulateArgs),
    /// Range and velocity resolution versus numerology.
    Numerology(NumerologyArgs),
    /// Phase-noise PSD of a preset or model file on a log frequency grid.
    Psd(PsdArgs),
    /// Range-Doppler map of a single trial.
    Map(MapArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment file; missing keys take the 130 GHz reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a JSON copy of the rows.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// SNR point in dB; repeat to give a list. Replaces the configured list.
    #[arg(long = "snr", allow_negative_numbers = true)]
    snr_db: Vec<f64>,
    #[arg(long, env = "ISAC_SEED")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NumerologyMode {
    /// N = floor(B / delta_f) at a fixed bandwidth.
    FixedBw,
    /// Fixed subcarrier count; bandwidth scales with mu.
    FixedN,
}

#[derive(Args)]
struct NumerologyArgs {
    #[arg(long, value_enum, default_value = "fixed-bw")]
    mode: NumerologyMode,
    #[arg(long, default_value_t = 1.5e9)]
    bandwidth: f64,
    #[arg(long, default_value_t = 256)]
    n: u64,
    /// Carrier in Hz; repeat for several carriers (adds an fc_hz column).
    #[arg(long = "fc")]
    f_c: Vec<f64>,
    /// Symbols per frame for the velocity column.
    #[arg(long, default_value_t = 64, conflicts_with = "m_equals_n")]
    m: u64,
    /// Use M = N per row for the velocity column.
    #[arg(long)]
    m_equals_n: bool,
    #[arg(long, default_value_t = 0)]
    mu_min: u32,
    #[arg(long, default_value_t = 7)]
    mu_max: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PsdArgs {
    /// Built-in profile: tuned_130ghz or tgpp_70ghz.
    #[arg(long, conflicts_with = "model_file")]
    preset: Option<String>,
    /// TOML phase-noise model.
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    f_min: f64,
    #[arg(long, default_value_t = 1e9)]
    f_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum PnFlag {
    Off,
    On,
}

#[derive(Args)]
struct MapArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// SNR in dB; `inf` disables receiver noise.
    #[arg(long = "snr", default_value_t = 30.0, allow_negative_numbers = true)]
    snr_db: f64,
    /// Apply the configured phase-noise model (tuned_130ghz unless set).
    #[arg(long, value_enum, default_value = "off")]
    pn: PnFlag,
    #[arg(long, env = "ISAC_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-check the FFT estimate against a direct matched-filter search
    /// and report the difference on stderr.
    #[arg(long)]
    oracle: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Numerology(a) => numerology(a),
        Command::Psd(a) => psd(a),
        Command::Map(a) => map(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isac: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// Writes through `f` to `path`, or to stdout when no path is given.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_err(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let parsed = ExperimentConfig::from_file(p).map_err(|e| io_err(p, e))?;
            parsed.map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn simulate(args: SimulateArgs) -> CliResult {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(t) = args.trials {
        cfg.sweep.trials = t;
    }
    if !args.snr_db.is_empty() {
        cfg.sweep.snr_db = args.snr_db;
    }
    if let Some(s) = args.seed {
        cfg.sweep.master_seed = s;
    }
    let spec = cfg.to_sweep_spec()?;
    let result = isac_sim::experiment::run_sweep(&spec)?;
    with_output(args.out.as_deref(), |w| report::write_sweep_csv(w, &spec, &result))?;
    if let Some(path) = args.json.as_deref() {
        with_output(Some(path), |w| report::write_sweep_json(w, &result))?;
    }
    Ok(())
}

fn numerology(args: NumerologyArgs) -> CliResult {
    if args.mu_min > args.mu_max {
        return Err(CliError::Usage(format!("mu range {}..{} is empty", args.mu_min, args.mu_max)));
    }
    let mus: Vec<u32> = (args.mu_min..=args.mu_max).collect();
    let mode = match args.mode {
        NumerologyMode::FixedBw => TableMode::FixedBandwidth { bandwidth_hz: args.bandwidth },
        NumerologyMode::FixedN => TableMode::FixedSubcarriers { n: args.n },
    };
    let symbols = if args.m_equals_n { SymbolCount::MatchSubcarriers } else { SymbolCount::Fixed(args.m) };
    let carriers = if args.f_c.is_empty() { vec![130e9] } else { args.f_c };

    let mut tables = Vec::with_capacity(carriers.len());
    for &fc in &carriers {
        tables.push((fc, tradeoff_table(mode, fc, symbols, &mus)?));
    }
    let comments = vec![
        format!("isac-sim {}", isac_sim::VERSION),
        format!("mode = {mode:?}"),
        format!("symbols = {symbols:?}"),
        format!("f_c_hz = {carriers:?}"),
    ];
    with_output(args.out.as_deref(), |w| {
        if let [(_, rows)] = tables.as_slice() {
            return report::write_numerology_csv(w, &comments, rows);
        }
        for c in &comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "fc_hz,{}", report::NUMEROLOGY_HEADER)?;
        for (fc, rows) in &tables {
            for r in rows {
                writeln!(
                    w,
                    "{fc},{},{},{},{},{},{}",
                    r.mu, r.delta_f, r.n_subcarriers, r.t_symbol, r.range_resolution, r.velocity_resolution
                )?;
            }
        }
        Ok(())
    })
}

fn psd(args: PsdArgs) -> CliResult {
    let model = match (&args.preset, &args.model_file) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            PhaseNoiseModel::from_toml_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        (Some(name), None) => builtin_model(name.parse::<Preset>()?),
        (None, None) => builtin_model(Preset::Tuned130Ghz),
    };
    let points = report::psd_points(&model, args.f_min, args.f_max, args.points)?;
    let mut comments = vec![format!("isac-sim {}", isac_sim::VERSION)];
    comments.extend(model_lines(&model).into_iter().map(|l| format!("model.{l}")));
    with_output(args.out.as_deref(), |w| report::write_psd_csv(w, &comments, &points))
}

fn model_lines(model: &PhaseNoiseModel) -> Vec<String> {
    vec![
        format!("name = {:?}", model.name),
        format!("ref_level_dbc = {}", model.ref_level),
        format!("white_floor_dbc = {}", model.white_floor),
        format!(
            "poles = [{}]",
            model.poles.iter().map(|p| format!("[{}, {}]", p.corner_hz, p.order)).collect::<Vec<_>>().join(", ")
        ),
        format!("phase_psd_gain = {}", model.phase_psd_gain),
    ]
}

fn map(args: MapArgs) -> CliResult {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.sweep.master_seed = s;
    }
    cfg.sweep.snr_db = vec![args.snr_db];
    cfg.sweep.trials = args.trial + 1;
    if args.pn == PnFlag::On && cfg.phase_noise.mode == PnMode::Off {
        cfg.phase_noise.mode = PnMode::PerSample;
    }
    let mut spec: SweepSpec = cfg.to_sweep_spec()?;
    let variant = match args.pn {
        PnFlag::Off => {
            spec.pn_variants.truncate(1);
            0
        }
        PnFlag::On => 1,
    };
    debug_assert!(matches!(spec.pn_variants[0], PnVariant::Off));

    let art = run_trial_detailed(&spec, args.snr_db, variant, args.trial)?;
    let est = art.outcome.estimate;
    let mut comments = report::sweep_header(&spec);
    comments.push(format!("trial = {}, pn = {}", args.trial, spec.pn_variants[variant].label()));
    comments.push(format!(
        "estimate: range_m = {}, velocity_mps = {}, pslr_db = {}, islr_db = {}",
        est.range_m, est.velocity_mps, art.outcome.sidelobes.pslr_db, art.outcome.sidelobes.islr_db
    ));
    with_output(args.out.as_deref(), |w| report::write_map_csv(w, &comments, &art.map))?;

    if args.oracle {
        let grid = compensate(&art.rx, &art.tx)?;
        let sys = &spec.cfg;
        let (r, v) = if sys.n_subcarriers * sys.m_symbols <= 4096 {
            matched_filter::global_search(&grid, sys, 4, 64)
        } else {
            // Too large for an exhaustive search: refine inside two map bins
            // around the FFT estimate.
            let (dr, dv) = (art.map.range_bin_m, art.map.velocity_bin_mps);
            let b = matched_filter::SearchBox {
                range_m: (est.range_m - 2.0 * dr, est.range_m + 2.0 * dr),
                velocity_mps: (est.velocity_mps - 2.0 * dv, est.velocity_mps + 2.0 * dv),
                range_steps: 41,
                velocity_steps: 41,
            };
            let (r, v, _) = matched_filter::search(&grid, sys, &b);
            (r, v)
        };
        eprintln!(
            "oracle: fft=({:.6} m, {:.6} m/s) matched_filter=({:.6} m, {:.6} m/s) diff=({:.3} bins, {:.3} bins)",
            est.range_m,
            est.velocity_mps,
            r,
            v,
            (est.range_m - r) / art.map.range_bin_m,
            (est.velocity_mps - v) / art.map.velocity_bin_mps,
        );
    }
    Ok(())
}
