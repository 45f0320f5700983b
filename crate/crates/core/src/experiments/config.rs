//! Experiment configuration, presets and the flat `key=value` schema.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::chanest::{QseConfig, QseGain};
use crate::channel::{ChannelModel, FadingModel, LosSpec, RxArray};
use crate::error::{invalid, Error, Result};
use crate::params::RadarParams;
use crate::waveform::Scheme;

/// Radar fields as configured; validated into [`RadarParams`] on demand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RadarSpec {
    pub antennas: Option<usize>,
    pub subbands: Option<usize>,
    pub hops: Option<usize>,
    pub bandwidth: Option<f64>,
    pub hop_duration: Option<f64>,
    pub sample_interval: Option<f64>,
    pub prf: Option<f64>,
}

/// Keys without which no radar can be built.
pub const REQUIRED_KEYS: [&str; 6] = ["M", "K", "H", "B", "T", "Ts"];

const DEFAULT_PRF: f64 = 1e5;

impl RadarSpec {
    pub fn from_params(p: &RadarParams) -> Self {
        Self {
            antennas: Some(p.antennas()),
            subbands: Some(p.subbands()),
            hops: Some(p.hops()),
            bandwidth: Some(p.bandwidth()),
            hop_duration: Some(p.hop_duration()),
            sample_interval: Some(p.sample_interval()),
            prf: Some(p.prf()),
        }
    }

    pub fn missing(&self) -> Vec<&'static str> {
        let set = [
            self.antennas.is_some(),
            self.subbands.is_some(),
            self.hops.is_some(),
            self.bandwidth.is_some(),
            self.hop_duration.is_some(),
            self.sample_interval.is_some(),
        ];
        REQUIRED_KEYS.iter().zip(set).filter(|(_, s)| !s).map(|(k, _)| *k).collect()
    }

    pub fn build(&self) -> Result<RadarParams> {
        let missing = self.missing();
        if !missing.is_empty() {
            return Err(invalid("config", format!("missing required keys: {}", missing.join(", "))));
        }
        RadarParams::new(
            self.antennas.unwrap_or_default(),
            self.subbands.unwrap_or_default(),
            self.hops.unwrap_or_default(),
            self.bandwidth.unwrap_or_default(),
            self.hop_duration.unwrap_or_default(),
            self.sample_interval.unwrap_or_default(),
            self.prf.unwrap_or(DEFAULT_PRF),
        )
    }
}

/// Source of the hopping code at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeSource {
    True,
    Estimated,
}

/// Source of the channel used by coherent demodulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelSource {
    True,
    Estimated,
}

/// One receiver knowledge combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Knowledge {
    pub code: CodeSource,
    pub channel: ChannelSource,
}

impl Knowledge {
    pub const ALL: [Knowledge; 4] = [
        Knowledge { code: CodeSource::True, channel: ChannelSource::True },
        Knowledge { code: CodeSource::True, channel: ChannelSource::Estimated },
        Knowledge { code: CodeSource::Estimated, channel: ChannelSource::True },
        Knowledge { code: CodeSource::Estimated, channel: ChannelSource::Estimated },
    ];

    /// Column tag such as `truek_estch`.
    pub fn tag(&self) -> String {
        let k = match self.code {
            CodeSource::True => "truek",
            CodeSource::Estimated => "estk",
        };
        let c = match self.channel {
            ChannelSource::True => "truech",
            ChannelSource::Estimated => "estch",
        };
        format!("{k}_{c}")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (k, c) = s
            .split_once('_')
            .ok_or_else(|| invalid("knowledge", format!("`{s}` is not of the form truek_truech")))?;
        let code = match k {
            "truek" => CodeSource::True,
            "estk" => CodeSource::Estimated,
            _ => return Err(invalid("knowledge", format!("unknown code source `{k}`"))),
        };
        let channel = match c {
            "truech" => ChannelSource::True,
            "estch" => ChannelSource::Estimated,
            _ => return Err(invalid("knowledge", format!("unknown channel source `{c}`"))),
        };
        Ok(Self { code, channel })
    }
}

/// Everything an experiment run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub radar: RadarSpec,
    pub channel: ChannelModel,
    /// SNR grid in dB for `mse`; Eb/N0 grid in dB for `ser`.
    pub grid_db: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub bits_per_symbol: u32,
    pub estimation_snr_db: f64,
    pub seed: u64,
    pub knowledge: Vec<Knowledge>,
    /// Hopping-code source when forming pilot-based estimates.
    pub pilot_code: CodeSource,
    pub rx: RxArray,
    pub timing_offset: usize,
    /// Absolute noise power in dB, overriding SNR-based noise (multipath demo).
    pub noise_power_db: Option<f64>,
    pub qse: QseConfig,
    pub pilot: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            radar: RadarSpec::default(),
            channel: ChannelModel::awgn(LosSpec::default()),
            grid_db: (0..=15).map(|i| -10.0 + 2.0 * i as f64).collect(),
            trials: 1000,
            schemes: vec![Scheme::Psk, Scheme::Fhcs, Scheme::FhcsPsk],
            bits_per_symbol: 1,
            estimation_snr_db: 10.0,
            seed: 1,
            knowledge: Knowledge::ALL.to_vec(),
            pilot_code: CodeSource::Estimated,
            rx: RxArray::default(),
            timing_offset: 0,
            noise_power_db: None,
            qse: QseConfig::default(),
            pilot: true,
        }
    }
}

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: [&str; 4] = ["fig3", "fig5", "fig6", "fig7"];

fn fig3_radar() -> RadarSpec {
    RadarSpec {
        antennas: Some(10),
        subbands: Some(20),
        hops: Some(10),
        bandwidth: Some(1e8),
        hop_duration: Some(2e-7),
        sample_interval: Some(1e-9),
        prf: Some(DEFAULT_PRF),
    }
}

impl ExperimentConfig {
    /// Parameter sets of the reference figures.
    ///
    /// * `fig3`: ten-times oversampled radar for ambiguity profiles.
    /// * `fig5`: twice-oversampled radar, AWGN LoS at `u0 = pi/2`,
    ///   `2e4` trials per SNR point on `-10..=20` dB.
    /// * `fig6`: fig5 radar, SER against Eb/N0 with 10 dB estimation SNR.
    /// * `fig7`: fig3 radar, Rician 5 dB channel, two receive antennas,
    ///   noise 10 dB below the LoS power.
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        match name.trim().to_ascii_lowercase().as_str() {
            "fig3" => {
                cfg.radar = fig3_radar();
                cfg.schemes = vec![Scheme::Unmodulated, Scheme::Psk];
                cfg.trials = 1;
            }
            "fig5" => {
                cfg.radar = RadarSpec { sample_interval: Some(5e-9), ..fig3_radar() };
                cfg.trials = 20_000;
                cfg.pilot_code = CodeSource::True;
            }
            "fig6" => {
                cfg.radar = RadarSpec { sample_interval: Some(5e-9), ..fig3_radar() };
                cfg.grid_db = (0..=8).map(|i| 24.0 + 2.0 * i as f64).collect();
                cfg.trials = 12_000;
                cfg.knowledge = vec![
                    Knowledge { code: CodeSource::True, channel: ChannelSource::True },
                    Knowledge { code: CodeSource::True, channel: ChannelSource::Estimated },
                    Knowledge { code: CodeSource::Estimated, channel: ChannelSource::Estimated },
                ];
            }
            "fig7" => {
                cfg.radar = fig3_radar();
                cfg.channel = ChannelModel::rician(5.0, 8, LosSpec { aod: FRAC_PI_2, ..LosSpec::default() });
                cfg.rx = RxArray { antennas: 2, spacing: 0.5 };
                cfg.noise_power_db = Some(-10.0);
                cfg.trials = 1000;
                cfg.schemes = vec![Scheme::Unmodulated];
            }
            other => {
                return Err(invalid("preset", format!("unknown preset `{other}`, expected one of {}", PRESETS.join(", "))))
            }
        }
        Ok(cfg)
    }

    pub fn radar_params(&self) -> Result<RadarParams> {
        self.radar.build()
    }

    /// Checks cross-field constraints.
    pub fn validate(&self) -> Result<RadarParams> {
        let p = self.radar_params()?;
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.grid_db.is_empty() || self.grid_db.iter().any(|x| !x.is_finite()) {
            return Err(invalid("snr_grid", "needs at least one finite value"));
        }
        if self.schemes.is_empty() {
            return Err(invalid("schemes", "needs at least one scheme"));
        }
        if self.knowledge.is_empty() {
            return Err(invalid("knowledge", "needs at least one combination"));
        }
        if self.bits_per_symbol == 0 || self.bits_per_symbol > 16 {
            return Err(invalid("J", "must be in 1..=16"));
        }
        if self.rx.antennas == 0 {
            return Err(invalid("rx_antennas", "must be at least 1"));
        }
        if !(self.rx.spacing.is_finite() && self.rx.spacing > 0.0) {
            return Err(invalid("rx_spacing", "must be positive"));
        }
        if self.timing_offset >= p.samples_per_hop() {
            return Err(invalid(
                "timing_offset_samples",
                format!("must be below L = {}", p.samples_per_hop()),
            ));
        }
        if !self.estimation_snr_db.is_finite() {
            return Err(invalid("estimation_snr_db", "must be finite"));
        }
        if self.qse.iterations == 0 && self.qse.epsilon.is_some() {
            return Err(invalid("qse_iterations", "epsilon given but no iterations"));
        }
        if let Some(e) = self.qse.epsilon {
            if !(e > 0.0 && e < 0.5) {
                return Err(invalid("qse_epsilon", "must lie in (0, 0.5)"));
            }
        }
        self.channel.validate().map_err(|e| match e {
            Error::InvalidChannel(msg) => invalid("channel", msg),
            other => other,
        })?;
        Ok(p)
    }

    /// Sets one key from its string value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "M" => self.radar.antennas = Some(parse(v, "M")?),
            "K" => self.radar.subbands = Some(parse(v, "K")?),
            "H" => self.radar.hops = Some(parse(v, "H")?),
            "B" => self.radar.bandwidth = Some(parse(v, "B")?),
            "T" => self.radar.hop_duration = Some(parse(v, "T")?),
            "Ts" => self.radar.sample_interval = Some(parse(v, "Ts")?),
            "prf" => self.radar.prf = Some(parse(v, "prf")?),
            "channel" => {
                self.channel.fading = match v.to_ascii_lowercase().as_str() {
                    "awgn" => FadingModel::Awgn,
                    "rician" => FadingModel::Rician { factor_db: self.rician_factor(), paths: self.path_count() },
                    "rayleigh" => FadingModel::Rayleigh { paths: self.path_count() },
                    other => return Err(invalid("channel", format!("unknown model `{other}` (awgn, rician, rayleigh)"))),
                }
            }
            "rician_factor_db" => {
                let f: f64 = parse(v, "rician_factor_db")?;
                if let FadingModel::Rician { paths, .. } = self.channel.fading {
                    self.channel.fading = FadingModel::Rician { factor_db: f, paths };
                } else {
                    self.channel.fading = FadingModel::Rician { factor_db: f, paths: self.path_count() };
                }
            }
            "paths" => {
                let p: usize = parse(v, "paths")?;
                self.channel.fading = match self.channel.fading {
                    FadingModel::Rician { factor_db, .. } => FadingModel::Rician { factor_db, paths: p },
                    FadingModel::Rayleigh { .. } => FadingModel::Rayleigh { paths: p },
                    FadingModel::Awgn if p == 1 => FadingModel::Awgn,
                    FadingModel::Awgn => return Err(invalid("paths", "AWGN channel has exactly one path")),
                }
            }
            "u0" => self.channel.los.aod = parse(v, "u0")?,
            "aoa" => self.channel.los.aoa = parse(v, "aoa")?,
            "beta_amplitude" => self.channel.los.amplitude = parse(v, "beta_amplitude")?,
            "beta_phase" => {
                self.channel.los.phase = if v.eq_ignore_ascii_case("random") { None } else { Some(parse(v, "beta_phase")?) }
            }
            "snr_grid" => self.grid_db = parse_grid(v)?,
            "trials" => self.trials = parse(v, "trials")?,
            "schemes" => {
                self.schemes = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<Scheme>().map_err(|_| invalid("schemes", format!("unknown scheme `{}`", s.trim()))))
                    .collect::<Result<_>>()?
            }
            "J" => self.bits_per_symbol = parse(v, "J")?,
            "estimation_snr_db" => self.estimation_snr_db = parse(v, "estimation_snr_db")?,
            "seed" => self.seed = parse(v, "seed")?,
            "knowledge" => {
                self.knowledge = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(Knowledge::parse)
                    .collect::<Result<_>>()?
            }
            "pilot_code" => {
                self.pilot_code = match v.to_ascii_lowercase().as_str() {
                    "true" | "truek" => CodeSource::True,
                    "estimated" | "estk" => CodeSource::Estimated,
                    other => return Err(invalid("pilot_code", format!("`{other}` is neither true nor estimated"))),
                }
            }
            "rx_antennas" => self.rx.antennas = parse(v, "rx_antennas")?,
            "rx_spacing" => self.rx.spacing = parse(v, "rx_spacing")?,
            "timing_offset_samples" => self.timing_offset = parse(v, "timing_offset_samples")?,
            "noise_power_db" => {
                self.noise_power_db = if v.eq_ignore_ascii_case("none") { None } else { Some(parse(v, "noise_power_db")?) }
            }
            "qse_iterations" => self.qse.iterations = parse(v, "qse_iterations")?,
            "qse_epsilon" => {
                self.qse.epsilon = if v.eq_ignore_ascii_case("auto") { None } else { Some(parse(v, "qse_epsilon")?) }
            }
            "qse_gain" => {
                self.qse.gain = match v.to_ascii_lowercase().as_str() {
                    "finite" => QseGain::FiniteLength,
                    "asymptotic" => QseGain::Asymptotic,
                    other => return Err(invalid("qse_gain", format!("`{other}` is neither finite nor asymptotic"))),
                }
            }
            "pilot" => self.pilot = parse(v, "pilot")?,
            other => {
                return Err(Error::InvalidParam {
                    name: "config",
                    reason: format!("unknown key `{other}`; known keys: {}", KEYS.join(", ")),
                })
            }
        }
        Ok(())
    }

    fn rician_factor(&self) -> f64 {
        match self.channel.fading {
            FadingModel::Rician { factor_db, .. } => factor_db,
            _ => 5.0,
        }
    }

    fn path_count(&self) -> usize {
        match self.channel.fading {
            FadingModel::Rician { paths, .. } | FadingModel::Rayleigh { paths } => paths,
            FadingModel::Awgn => 8,
        }
    }

    /// Every key with its current value, in schema order. Feeding these back
    /// through [`Self::set`] reproduces the configuration.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let r = &self.radar;
        let opt = |v: Option<String>| v.unwrap_or_default();
        let mut out = vec![
            ("M", opt(r.antennas.map(|v| v.to_string()))),
            ("K", opt(r.subbands.map(|v| v.to_string()))),
            ("H", opt(r.hops.map(|v| v.to_string()))),
            ("B", opt(r.bandwidth.map(|v| v.to_string()))),
            ("T", opt(r.hop_duration.map(|v| v.to_string()))),
            ("Ts", opt(r.sample_interval.map(|v| v.to_string()))),
            ("prf", r.prf.unwrap_or(DEFAULT_PRF).to_string()),
            ("channel", self.channel.fading.name().to_string()),
        ];
        match self.channel.fading {
            FadingModel::Rician { factor_db, paths } => {
                out.push(("rician_factor_db", factor_db.to_string()));
                out.push(("paths", paths.to_string()));
            }
            FadingModel::Rayleigh { paths } => out.push(("paths", paths.to_string())),
            FadingModel::Awgn => {}
        }
        let los = &self.channel.los;
        out.extend([
            ("u0", los.aod.to_string()),
            ("aoa", los.aoa.to_string()),
            ("beta_amplitude", los.amplitude.to_string()),
            ("beta_phase", los.phase.map_or("random".to_string(), |p| p.to_string())),
            ("snr_grid", self.grid_db.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
            ("trials", self.trials.to_string()),
            ("schemes", self.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")),
            ("J", self.bits_per_symbol.to_string()),
            ("estimation_snr_db", self.estimation_snr_db.to_string()),
            ("seed", self.seed.to_string()),
            ("knowledge", self.knowledge.iter().map(Knowledge::tag).collect::<Vec<_>>().join(",")),
            (
                "pilot_code",
                match self.pilot_code {
                    CodeSource::True => "true".into(),
                    CodeSource::Estimated => "estimated".into(),
                },
            ),
            ("rx_antennas", self.rx.antennas.to_string()),
            ("rx_spacing", self.rx.spacing.to_string()),
            ("timing_offset_samples", self.timing_offset.to_string()),
            ("noise_power_db", self.noise_power_db.map_or("none".to_string(), |v| v.to_string())),
            ("qse_iterations", self.qse.iterations.to_string()),
            ("qse_epsilon", self.qse.epsilon.map_or("auto".to_string(), |v| v.to_string())),
            (
                "qse_gain",
                match self.qse.gain {
                    QseGain::FiniteLength => "finite".into(),
                    QseGain::Asymptotic => "asymptotic".into(),
                },
            ),
            ("pilot", self.pilot.to_string()),
        ]);
        out
    }

    /// `key=value` lines, one per entry.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// Every recognised configuration key.
pub const KEYS: [&str; 31] = [
    "M",
    "K",
    "H",
    "B",
    "T",
    "Ts",
    "prf",
    "channel",
    "rician_factor_db",
    "paths",
    "u0",
    "aoa",
    "beta_amplitude",
    "beta_phase",
    "snr_grid",
    "trials",
    "schemes",
    "J",
    "estimation_snr_db",
    "seed",
    "knowledge",
    "pilot_code",
    "rx_antennas",
    "rx_spacing",
    "timing_offset_samples",
    "noise_power_db",
    "qse_iterations",
    "qse_epsilon",
    "qse_gain",
    "pilot",
    "preset",
];

fn parse<V: std::str::FromStr>(v: &str, key: &'static str) -> Result<V> {
    v.parse().map_err(|_| invalid(key, format!("cannot parse `{v}`")))
}

/// Comma list (`0,5,10`) or inclusive range `start:step:stop`.
pub fn parse_grid(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    let grid = if parts.len() == 3 {
        let start: f64 = parse(parts[0].trim(), "snr_grid")?;
        let step: f64 = parse(parts[1].trim(), "snr_grid")?;
        let stop: f64 = parse(parts[2].trim(), "snr_grid")?;
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(invalid("snr_grid", "range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else if parts.len() == 1 {
        v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(s.trim(), "snr_grid")).collect::<Result<Vec<f64>>>()?
    } else {
        return Err(invalid("snr_grid", format!("`{v}` is neither a list nor start:step:stop")));
    };
    if grid.is_empty() {
        return Err(invalid("snr_grid", "empty grid"));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig5_preset_values() {
        let c = ExperimentConfig::preset("fig5").unwrap();
        let p = c.validate().unwrap();
        assert_eq!((p.antennas(), p.subbands(), p.hops()), (10, 20, 10));
        assert_eq!(p.samples_per_hop(), 40);
        assert_eq!(c.trials, 20_000);
        assert!((c.channel.los.aod - FRAC_PI_2).abs() < 1e-15);
        assert!(c.channel.los.phase.is_none());
    }

    #[test]
    fn fig3_preset_is_oversampled() {
        let p = ExperimentConfig::preset("fig3").unwrap().validate().unwrap();
        assert_eq!(p.samples_per_hop(), 200);
    }

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            ExperimentConfig::preset(name).unwrap().validate().unwrap();
        }
        assert!(ExperimentConfig::preset("fig9").is_err());
    }

    #[test]
    fn empty_config_lists_required_keys() {
        let err = ExperimentConfig::default().validate().unwrap_err();
        let msg = err.to_string();
        for k in REQUIRED_KEYS {
            assert!(msg.contains(k), "{msg}");
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::default().set("antenas", "3").unwrap_err();
        assert!(err.to_string().contains("antenas"));
    }

    #[test]
    fn entries_round_trip() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            let mut d = ExperimentConfig::default();
            for (k, v) in c.entries() {
                d.set(k, &v).unwrap();
            }
            assert_eq!(c, d, "{name}");
        }
    }

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:2:6").unwrap(), vec![0.0, 2.0, 4.0, 6.0]);
        assert_eq!(parse_grid("1, 3").unwrap(), vec![1.0, 3.0]);
        assert!(parse_grid("0:-1:4").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn bad_delta_names_key() {
        let mut c = ExperimentConfig::preset("fig5").unwrap();
        c.set("K", "30").unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("B*T/K"), "{msg}");
    }
}
