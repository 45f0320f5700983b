//! Command-line front end: configuration parsing, experiment dispatch and
//! artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fhmimo::ambiguity::{compare_profiles, range_ambiguity, AmbiguityProfile, COMPARE_FLOOR_DB};
use fhmimo::experiments::{run_mse, run_multipath_demo, run_ser, with_config_meta, CurveTable, ExperimentConfig};
use fhmimo::rng::trial_rng;
use fhmimo::waveform::{data_rate, synthesize_pulse, Modulator, Pulse, Scheme};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "FHMIMO_OUT";
const DEFAULT_OUT: &str = "out";
const AMBIGUITY_DOMAIN: u64 = 0x616d_6269_6775_6974;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Runtime(#[from] fhmimo::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fhmimo", version, about = "Frequency-hopping MIMO radar communication simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Range ambiguity profile of one waveform.
    Ambiguity {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        opts: AmbiguityArgs,
    },
    /// Channel-estimation MSE against SNR.
    Mse(CommonArgs),
    /// Symbol error rate against Eb/N0.
    Ser(CommonArgs),
    /// Hopping-frequency detection with receive diversity under multipath.
    Multipath(CommonArgs),
    /// Data rate of every scheme.
    Rates(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ambiguity { .. } => "ambiguity",
            Command::Mse(_) => "mse",
            Command::Ser(_) => "ser",
            Command::Multipath(_) => "multipath",
            Command::Rates(_) => "rates",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Ambiguity { common, .. } => common,
            Command::Mse(c) | Command::Ser(c) | Command::Multipath(c) | Command::Rates(c) => c,
        }
    }
}

/// Flags shared by every subcommand. Precedence: preset, then config file,
/// then `--set`, then dedicated flags.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Named parameter set (fig3, fig5, fig6, fig7).
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat `key=value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to $FHMIMO_OUT, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma list or `start:step:stop` in dB.
    #[arg(long = "snr-grid", allow_hyphen_values = true)]
    pub snr_grid: Option<String>,
    #[arg(long)]
    pub schemes: Option<String>,
    /// Comma list of `truek_truech`, `truek_estch`, `estk_truech`, `estk_estch`.
    #[arg(long)]
    pub knowledge: Option<String>,
    #[arg(long = "rx-antennas")]
    pub rx_antennas: Option<usize>,
    #[arg(long = "timing-offset-samples")]
    pub timing_offset_samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Compare {
    /// Only the selected waveform.
    None,
    /// Also the unmodulated waveform on the same hopping codes.
    Unmodulated,
    /// The same pulses before and after ascending re-ordering.
    Reordered,
}

#[derive(Debug, Clone, Args)]
pub struct AmbiguityArgs {
    /// Waveform: none, bpsk, qpsk, dpsk, fhcs or fhcs_bpsk.
    #[arg(long, default_value = "bpsk")]
    pub modulation: String,
    #[arg(long, value_enum, default_value_t = Compare::None)]
    pub compare: Compare,
    /// Number of random draws whose profiles are averaged.
    #[arg(long, default_value_t = 1)]
    pub average: usize,
}

impl Default for AmbiguityArgs {
    fn default() -> Self {
        Self { modulation: "bpsk".into(), compare: Compare::None, average: 1 }
    }
}

/// Parses a flat `key=value` file. Blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got `{line}`", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn config_err(e: fhmimo::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Builds and validates the experiment configuration.
pub fn parse_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_kv(&text)?
        }
        None => Vec::new(),
    };
    let mut pairs = file;
    for o in &args.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{o}`")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }

    let preset = args.preset.clone().or_else(|| pairs.iter().rev().find(|(k, _)| k == "preset").map(|(_, v)| v.clone()));
    let mut cfg = match preset {
        Some(p) => ExperimentConfig::preset(&p).map_err(config_err)?,
        None => ExperimentConfig::default(),
    };
    for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
        cfg.set(k, v).map_err(config_err)?;
    }

    let flags = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("trials", args.trials.map(|v| v.to_string())),
        ("snr_grid", args.snr_grid.clone()),
        ("schemes", args.schemes.clone()),
        ("knowledge", args.knowledge.clone()),
        ("rx_antennas", args.rx_antennas.map(|v| v.to_string())),
        ("timing_offset_samples", args.timing_offset_samples.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v).map_err(config_err)?;
        }
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

/// Output directory: the flag, then the environment, then `out`.
pub fn resolve_out(flag: Option<&Path>) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one run. Every emitted file is listed with its hash; the
/// manifest itself is written as `manifest.json` next to them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub out_dir: String,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

struct Writer {
    dir: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Writer {
    fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
            bytes: contents.len() as u64,
        });
        Ok(())
    }
}

/// Runs a parsed command end to end.
pub fn execute(cli: &Cli) -> Result<RunManifest> {
    let common = cli.command.common();
    let cfg = parse_config(common)?;
    let out = resolve_out(common.out.as_deref());
    let ambiguity = match &cli.command {
        Command::Ambiguity { opts, .. } => Some(opts.clone()),
        _ => None,
    };
    run(cli.command.name(), &cfg, ambiguity.as_ref(), &out, common.config.as_deref())
}

/// Runs `subcommand` and writes its CSV files, plot script and manifest
/// into `out`.
pub fn run(
    subcommand: &str,
    cfg: &ExperimentConfig,
    ambiguity: Option<&AmbiguityArgs>,
    out: &Path,
    config_path: Option<&Path>,
) -> Result<RunManifest> {
    cfg.validate().map_err(config_err)?;
    let mut w = Writer::new(out.to_path_buf())?;
    match subcommand {
        "mse" => {
            w.write("mse.csv", &run_mse(cfg)?.to_table(cfg).to_csv())?;
            w.write("mse.gp", MSE_PLOT)?;
        }
        "ser" => {
            let table = run_ser(cfg)?.to_table(cfg);
            w.write("ser.csv", &table.to_csv())?;
            w.write("ser.gp", &ser_plot(&table))?;
        }
        "multipath" => {
            let report = run_multipath_demo(cfg)?;
            let spectrum = report.spectrum_table(cfg);
            w.write("multipath_spectrum.csv", &spectrum.to_csv())?;
            w.write("multipath_detection.csv", &report.detection_table(cfg).to_csv())?;
            w.write("multipath_spectrum.gp", &multipath_plot(&spectrum))?;
        }
        "rates" => {
            w.write("rates.csv", &rates_table(cfg)?.to_csv())?;
            w.write("rates.gp", RATES_PLOT)?;
        }
        "ambiguity" => {
            let default = AmbiguityArgs::default();
            let opts = ambiguity.unwrap_or(&default);
            let tables = ambiguity_tables(cfg, opts)?;
            for (name, t) in &tables {
                w.write(&format!("{name}.csv"), &t.to_csv())?;
            }
            let names: Vec<&str> = tables.iter().map(|(n, _)| n.as_str()).collect();
            w.write("ambiguity.gp", &ambiguity_plot(&names))?;
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown subcommand `{other}`; expected ambiguity, mse, ser, multipath or rates"
            )))
        }
    }
    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        config_path: config_path.map(|p| p.display().to_string()),
        seed: cfg.seed,
        out_dir: out.display().to_string(),
        files: w.files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

/// Schemes in rate-table order.
const RATE_SCHEMES: [Scheme; 4] = [Scheme::Psk, Scheme::Dpsk, Scheme::Fhcs, Scheme::FhcsPsk];

/// `J, <scheme>_bps..`: data rate of every scheme for `J = 1..=max(4, J)`.
pub fn rates_table(cfg: &ExperimentConfig) -> Result<CurveTable> {
    let params = cfg.validate().map_err(config_err)?;
    let mut cols = vec!["J".to_string()];
    cols.extend(RATE_SCHEMES.iter().map(|s| format!("{}_bps", s.name())));
    let mut t = CurveTable::new(cols);
    for j in 1..=cfg.bits_per_symbol.max(4) {
        let mut row = vec![f64::from(j)];
        for s in RATE_SCHEMES {
            row.push(data_rate(&params, s, j)?);
        }
        t.push_row(row)?;
    }
    Ok(with_config_meta(t, "rates", cfg))
}

fn profile_table(profile: &AmbiguityProfile, waveform: &str, draws: usize, cfg: &ExperimentConfig) -> Result<CurveTable> {
    let mut t = CurveTable::new(vec!["lag_samples".into(), "mag_db".into()]);
    for (lag, db) in profile.lags().zip(profile.magnitude_db()) {
        t.push_row(vec![lag as f64, db])?;
    }
    Ok(with_config_meta(t, "ambiguity", cfg).with_meta("waveform", waveform).with_meta("draws", draws.to_string()))
}

fn unmodulated(pulse: &Pulse) -> Pulse {
    let mut p = pulse.clone();
    p.payload.phases = fhmimo::PhaseMatrix::zeros(p.code.hops(), p.code.antennas(), p.payload.phases.bits_per_symbol());
    p.payload.scheme = Scheme::Unmodulated;
    p
}

/// Profiles named `ambiguity_<waveform>[...]`, averaged over
/// `opts.average` random draws.
pub fn ambiguity_tables(cfg: &ExperimentConfig, opts: &AmbiguityArgs) -> Result<Vec<(String, CurveTable)>> {
    let params = cfg.validate().map_err(config_err)?;
    let (scheme, j) = match opts.modulation.trim().to_ascii_lowercase().as_str() {
        "qpsk" => (Scheme::Psk, 2),
        "dqpsk" => (Scheme::Dpsk, 2),
        other => (
            other.parse::<Scheme>().map_err(|_| CliError::Config(format!("unknown modulation `{}`", opts.modulation)))?,
            cfg.bits_per_symbol,
        ),
    };
    if opts.average == 0 {
        return Err(CliError::Config("--average must be at least 1".into()));
    }
    let label = match (scheme, j) {
        (s, _) if !s.carries_phase() => s.name().to_string(),
        (Scheme::Psk, 1) => "bpsk".to_string(),
        (Scheme::Psk, 2) => "qpsk".to_string(),
        (Scheme::Dpsk, 1) => "dbpsk".to_string(),
        (Scheme::FhcsPsk, 1) => "fhcs_bpsk".to_string(),
        (s, j) => format!("{}{}", s.name(), 1u32 << j),
    };
    let modem = Modulator::new(params, scheme, j)?.with_pilot(cfg.pilot).with_reorder(opts.compare != Compare::Reordered);

    let mut main = Vec::with_capacity(opts.average);
    let mut extra = Vec::with_capacity(opts.average);
    let mut worst_diff: f64 = 0.0;
    for draw in 0..opts.average {
        let mut rng = trial_rng(cfg.seed, AMBIGUITY_DOMAIN, draw as u64);
        let bits: Vec<bool> = (0..modem.bits_per_pulse()).map(|_| rand::Rng::random(&mut rng)).collect();
        let pulse = modem.modulate(&bits, &mut rng)?;
        match opts.compare {
            Compare::None => main.push(range_ambiguity(&synthesize_pulse::<f64>(&params, &pulse)?)),
            Compare::Unmodulated => {
                main.push(range_ambiguity(&synthesize_pulse::<f64>(&params, &pulse)?));
                extra.push(range_ambiguity(&synthesize_pulse::<f64>(&params, &unmodulated(&pulse))?));
            }
            Compare::Reordered => {
                let mut sorted = pulse.clone();
                sorted.code = pulse.code.reorder_ascending();
                let a = range_ambiguity(&synthesize_pulse::<f64>(&params, &pulse)?);
                let b = range_ambiguity(&synthesize_pulse::<f64>(&params, &sorted)?);
                worst_diff = worst_diff.max(compare_profiles(&a, &b, COMPARE_FLOOR_DB)?);
                extra.push(a);
                main.push(b);
            }
        }
    }

    let n = opts.average;
    let mut out = vec![(format!("ambiguity_{label}"), profile_table(&AmbiguityProfile::average(&main)?, &label, n, cfg)?)];
    match opts.compare {
        Compare::None => {}
        Compare::Unmodulated => {
            out.push(("ambiguity_none".into(), profile_table(&AmbiguityProfile::average(&extra)?, "none", n, cfg)?));
        }
        Compare::Reordered => {
            let name = format!("{label}_draw_order");
            let t = profile_table(&AmbiguityProfile::average(&extra)?, &name, n, cfg)?;
            out.push((format!("ambiguity_{name}"), t));
            for (_, t) in &mut out {
                t.metadata.push(("max_reorder_diff_db".into(), format!("{worst_diff:e}")));
            }
        }
    }
    Ok(out)
}

const MSE_PLOT: &str = "\
set datafile separator ','
set key autotitle columnhead
set logscale y
set xlabel 'SNR (dB)'
set ylabel 'MSE'
set grid
plot 'mse.csv' using 1:2 with linespoints title 'u0', \\
     '' using 1:3 with linespoints title 'beta0', \\
     '' using 1:4 with lines dashtype 2 title 'CRLB'
pause -1
";

const RATES_PLOT: &str = "\
set datafile separator ','
set key autotitle columnhead
set logscale y
set xlabel 'bits per symbol J'
set ylabel 'rate (bit/s)'
plot for [c=2:5] 'rates.csv' using 1:c with linespoints
pause -1
";

fn ser_plot(t: &CurveTable) -> String {
    let n = t.columns.len();
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset yrange [1e-5:1]\n\
         set xlabel 'Eb/N0 (dB)'\nset ylabel 'SER'\nset grid\n\
         plot for [c=2:{n}] 'ser.csv' using 1:c with linespoints\npause -1\n"
    )
}

fn multipath_plot(t: &CurveTable) -> String {
    let last = t.columns.len() - 1;
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'DFT bin'\nset ylabel 'power (dB)'\n\
         set yrange [-60:*]\nplot for [c=2:{last}] 'multipath_spectrum.csv' using 1:c with impulses\npause -1\n"
    )
}

fn ambiguity_plot(names: &[&str]) -> String {
    let plots: Vec<String> = names.iter().map(|n| format!("'{n}.csv' using 1:2 with lines title '{n}'")).collect();
    format!(
        "set datafile separator ','\nset xlabel 'lag (samples)'\nset ylabel '|r| (dB)'\nset yrange [-60:0]\n\
         plot {}\npause -1\n",
        plots.join(", \\\n     ")
    )
}
