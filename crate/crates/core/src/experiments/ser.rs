//! Symbol error rate against Eb/N0 for each embedding scheme.

use rayon::prelude::*;

use super::config::{ChannelSource, CodeSource, ExperimentConfig, Knowledge};
use super::mse::with_config_meta;
use super::table::CurveTable;
use crate::chanest::{self, QseConfig};
use crate::channel::{propagate, ChannelRealization, NoiseSpec, PropagationConfig, RxCapture};
use crate::error::{Error, Result};
use crate::params::RadarParams;
use crate::receiver::{detect_hopping_freqs, ChannelKnowledge, CodeKnowledge, Demodulator, HopDft};
use crate::rng::trial_rng;
use crate::scalar::{db_to_linear, Real};
use crate::waveform::{synthesize_pulse, Modulator, Pulse, Scheme};
use num_complex::Complex;
use rand::Rng;

const DOMAIN: u64 = 0x7365_725f_7275_6e00;

/// Information bits per hop `J~` of a scheme.
pub fn info_bits_per_hop(params: &RadarParams, scheme: Scheme, bits_per_symbol: u32) -> Result<usize> {
    Ok(Modulator::new(*params, scheme, bits_per_symbol)?.bits_per_hop())
}

/// `Eb/N0 = L M gamma0 B T / J~`, in dB.
pub fn ebn0_db(params: &RadarParams, gamma0_db: f64, info_bits: usize) -> f64 {
    gamma0_db + ebn0_offset_db(params, info_bits)
}

/// Per-sample SNR in dB that yields `ebn0_db`.
pub fn gamma0_db_for(params: &RadarParams, ebn0_db: f64, info_bits: usize) -> f64 {
    ebn0_db - ebn0_offset_db(params, info_bits)
}

fn ebn0_offset_db(params: &RadarParams, info_bits: usize) -> f64 {
    let l = params.samples_per_hop() as f64;
    let m = params.antennas() as f64;
    10.0 * (l * m * params.time_bandwidth() / info_bits as f64).log10()
}

/// Column label of a scheme, e.g. `bpsk`, `qpsk`, `fhcs_bpsk`.
pub fn scheme_label(scheme: Scheme, bits_per_symbol: u32) -> String {
    let psk = match bits_per_symbol {
        1 => "bpsk".to_string(),
        2 => "qpsk".to_string(),
        j => format!("psk{}", 1u64 << j),
    };
    match scheme {
        Scheme::Unmodulated => "none".into(),
        Scheme::Psk => psk,
        Scheme::Dpsk => format!("d{psk}"),
        Scheme::Fhcs => "fhcs".into(),
        Scheme::FhcsPsk => format!("fhcs_{psk}"),
    }
}

/// One SER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SerCurve {
    pub name: String,
    pub scheme: Scheme,
    pub knowledge: Knowledge,
    pub errors: Vec<u64>,
    pub symbols: u64,
    /// `J~` used on the Eb/N0 axis.
    pub info_bits: usize,
}

impl SerCurve {
    pub fn ser(&self) -> Vec<f64> {
        self.errors.iter().map(|&e| e as f64 / self.symbols as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerReport {
    pub ebn0_db: Vec<f64>,
    pub curves: Vec<SerCurve>,
}

impl SerReport {
    pub fn curve(&self, name: &str) -> Option<&SerCurve> {
        self.curves.iter().find(|c| c.name == name)
    }

    pub fn to_table(&self, cfg: &ExperimentConfig) -> CurveTable {
        let mut cols = vec!["ebn0_db".to_string()];
        cols.extend(self.curves.iter().map(|c| c.name.clone()));
        let mut t = CurveTable::new(cols);
        let sers: Vec<Vec<f64>> = self.curves.iter().map(SerCurve::ser).collect();
        for (i, &x) in self.ebn0_db.iter().enumerate() {
            let mut row = vec![x];
            row.extend(sers.iter().map(|s| s[i]));
            t.push_row(row).expect("row width matches columns");
        }
        with_config_meta(t, "ser", cfg)
    }
}

/// Eb/N0 at which a curve first drops below `target`, interpolating
/// `log10(SER)` linearly between grid points. Zero counts are treated as
/// half an error so the logarithm stays finite.
pub fn required_ebn0(ebn0_db: &[f64], errors: &[u64], symbols: u64, target: f64) -> Option<f64> {
    let floor = 0.5 / symbols as f64;
    let ser: Vec<f64> = errors.iter().map(|&e| (e as f64 / symbols as f64).max(floor)).collect();
    for i in 1..ser.len() {
        if ser[i - 1] >= target && ser[i] < target {
            let (a, b) = (ser[i - 1].log10(), ser[i].log10());
            let w = (a - target.log10()) / (a - b);
            return Some(ebn0_db[i - 1] + w * (ebn0_db[i] - ebn0_db[i - 1]));
        }
    }
    None
}

/// Knowledge combinations that make a difference for a scheme.
fn distinct_knowledge(scheme: Scheme, requested: &[Knowledge]) -> Vec<Knowledge> {
    let mut out: Vec<Knowledge> = Vec::new();
    for &k in requested {
        let k = if scheme.carries_phase() && scheme != Scheme::Dpsk {
            k
        } else {
            Knowledge { code: k.code, channel: ChannelSource::True }
        };
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn curve_name(scheme: Scheme, j: u32, k: Knowledge) -> String {
    let label = scheme_label(scheme, j);
    if scheme.carries_phase() && scheme != Scheme::Dpsk {
        format!("{label}_{}", k.tag())
    } else {
        let code = if k.code == CodeSource::True { "truek" } else { "estk" };
        format!("{label}_{code}")
    }
}

/// Symbol errors of one data hop range.
fn count_hop_errors(modulator: &Modulator, sent: &[bool], got: &[bool], flags: &[bool]) -> u64 {
    let per_hop = modulator.bits_per_hop();
    (0..modulator.data_hops())
        .filter(|&i| flags[i] || sent[i * per_hop..(i + 1) * per_hop] != got[i * per_hop..(i + 1) * per_hop])
        .count() as u64
}

struct Estimates<T> {
    true_code: Option<Vec<Vec<Complex<T>>>>,
    detected_code: Option<Vec<Vec<Complex<T>>>>,
}

fn pilot_gains<T: Real>(
    capture: &RxCapture<T>,
    dft: &HopDft<T>,
    pulse: &Pulse,
    code: CodeSource,
    params: &RadarParams,
    qse: &QseConfig,
) -> Vec<Vec<Complex<T>>> {
    let spectrum = dft.spectrum(capture, 0);
    let k_hat = match code {
        CodeSource::True => pulse.code.row(0).to_vec(),
        CodeSource::Estimated => detect_hopping_freqs(&spectrum.combined_power(), params),
    };
    (0..capture.rx_antennas())
        .map(|n| chanest::estimate(&spectrum.bins[n], &k_hat, params, qse).gains(params.antennas()))
        .collect()
}

/// SER of every configured scheme and knowledge combination, in double
/// precision.
pub fn run_ser(cfg: &ExperimentConfig) -> Result<SerReport> {
    run_ser_in::<f64>(cfg)
}

/// [`run_ser`] in any sample precision.
///
/// Each trial sends one random pulse through a fresh channel. The data hops
/// are received at the grid point's SNR; the pilot hop used for channel
/// estimation is received separately at the estimation SNR, and that
/// estimate serves every data hop of the pulse. All knowledge combinations
/// of a scheme see the same pulse and noise.
pub fn run_ser_in<T: Real>(cfg: &ExperimentConfig) -> Result<SerReport> {
    let params = cfg.validate()?;
    let j = cfg.bits_per_symbol;
    let dft = HopDft::<T>::new(params.samples_per_hop());
    let mut curves = Vec::new();

    for (si, &scheme) in cfg.schemes.iter().enumerate() {
        if scheme == Scheme::Unmodulated {
            return Err(Error::UnsupportedScheme("an unmodulated waveform has no symbols".into()));
        }
        let modulator = Modulator::new(params, scheme, j)?.with_pilot(cfg.pilot);
        let needs_estimate = scheme.carries_phase() && scheme != Scheme::Dpsk;
        if needs_estimate && !modulator.pilot() && cfg.knowledge.iter().any(|k| k.channel == ChannelSource::Estimated) {
            return Err(Error::InvalidParam { name: "pilot", reason: "channel estimation needs the pilot hop".into() });
        }
        let demod = Demodulator::new(modulator.clone());
        let knowledge = distinct_knowledge(scheme, &cfg.knowledge);
        let info_bits = modulator.bits_per_hop();
        let mut errors = vec![vec![0u64; cfg.grid_db.len()]; knowledge.len()];

        for (gi, &ebn0) in cfg.grid_db.iter().enumerate() {
            let gamma0 = db_to_linear(gamma0_db_for(&params, ebn0, info_bits));
            let data_prop = PropagationConfig { noise: NoiseSpec::Snr(gamma0), timing_offset: cfg.timing_offset, rx: cfg.rx };
            let est_prop = PropagationConfig {
                noise: NoiseSpec::snr_db(cfg.estimation_snr_db),
                timing_offset: cfg.timing_offset,
                rx: cfg.rx,
            };
            let domain = DOMAIN ^ ((si as u64) << 32) ^ gi as u64;
            let per_trial: Vec<Vec<u64>> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|trial| -> Result<Vec<u64>> {
                    let mut rng = trial_rng(cfg.seed, domain, trial);
                    let bits: Vec<bool> = (0..modulator.bits_per_pulse()).map(|_| rng.random()).collect();
                    let pulse = modulator.modulate(&bits, &mut rng)?;
                    let tx = synthesize_pulse::<T>(&params, &pulse)?;
                    let channel: ChannelRealization<T> = cfg.channel.draw(&mut rng)?;
                    let data = propagate(&tx, &channel, &data_prop, &mut rng)?;
                    let true_gains = channel.array_response(params.antennas(), &cfg.rx);
                    let mut est = Estimates { true_code: None, detected_code: None };
                    if needs_estimate && knowledge.iter().any(|k| k.channel == ChannelSource::Estimated) {
                        let pilot = propagate(&tx, &channel, &est_prop, &mut rng)?;
                        for k in &knowledge {
                            if k.channel != ChannelSource::Estimated {
                                continue;
                            }
                            let slot = match k.code {
                                CodeSource::True => &mut est.true_code,
                                CodeSource::Estimated => &mut est.detected_code,
                            };
                            if slot.is_none() {
                                *slot = Some(pilot_gains(&pilot, &dft, &pulse, k.code, &params, &cfg.qse));
                            }
                        }
                    }
                    knowledge
                        .iter()
                        .map(|k| {
                            let code = match k.code {
                                CodeSource::True => CodeKnowledge::Known(&pulse.code),
                                CodeSource::Estimated => CodeKnowledge::Detect,
                            };
                            let gains = match (k.channel, k.code) {
                                (ChannelSource::True, _) => &true_gains,
                                (ChannelSource::Estimated, CodeSource::True) => {
                                    est.true_code.as_ref().unwrap_or(&true_gains)
                                }
                                (ChannelSource::Estimated, CodeSource::Estimated) => {
                                    est.detected_code.as_ref().unwrap_or(&true_gains)
                                }
                            };
                            let out = demod.demodulate_with(&dft, &data, code, ChannelKnowledge::Known(gains))?;
                            Ok(count_hop_errors(&modulator, &bits, &out.bits, &out.codebook_errors))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            for row in per_trial {
                for (ki, e) in row.into_iter().enumerate() {
                    errors[ki][gi] += e;
                }
            }
        }
        let symbols = (cfg.trials * modulator.data_hops()) as u64;
        for (ki, k) in knowledge.into_iter().enumerate() {
            curves.push(SerCurve {
                name: curve_name(scheme, j, k),
                scheme,
                knowledge: k,
                errors: std::mem::take(&mut errors[ki]),
                symbols,
                info_bits,
            });
        }
    }
    Ok(SerReport { ebn0_db: cfg.grid_db.clone(), curves })
}
