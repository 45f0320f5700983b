//! Hopping-frequency detection under multipath fading with one or more
//! receive antennas.

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::mse::with_config_meta;
use super::table::CurveTable;
use crate::channel::{propagate, ChannelRealization, NoiseSpec, PropagationConfig};
use crate::error::Result;
use crate::receiver::{detect_hopping_freqs, HopDft};
use crate::rng::trial_rng;
use crate::scalar::{db_to_linear, Real};
use crate::waveform::{synthesize_tx, HoppingCode, PhaseMatrix};

const DOMAIN: u64 = 0x6d75_6c74_6970_6174;

/// A hop where at least one antenna alone misdetected but the combined
/// spectrum recovered the code.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairedHop {
    pub trial: usize,
    pub hop: usize,
    pub truth: Vec<usize>,
    /// Detection on each receive antenna alone.
    pub single: Vec<Vec<usize>>,
}

impl RepairedHop {
    pub fn failed_antennas(&self) -> Vec<usize> {
        self.single.iter().enumerate().filter(|(_, d)| **d != self.truth).map(|(n, _)| n).collect()
    }
}

/// Hop spectra in dB relative to a unit tone (`20 log10(|Y| / L)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSnapshot {
    pub trial: usize,
    pub hop: usize,
    pub truth: Vec<usize>,
    pub per_antenna_db: Vec<Vec<f64>>,
    pub combined_db: Vec<f64>,
    /// Transmit antenna occupying each bin, if any.
    pub owner: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultipathReport {
    pub hops: usize,
    pub single_errors: Vec<usize>,
    pub combined_errors: usize,
    pub repaired: Vec<RepairedHop>,
    /// First repaired hop, or hop 0 of trial 0 when none was repaired.
    pub example: SpectrumSnapshot,
}

impl MultipathReport {
    pub fn single_rate(&self, rx: usize) -> f64 {
        self.single_errors[rx] as f64 / self.hops as f64
    }

    pub fn combined_rate(&self) -> f64 {
        self.combined_errors as f64 / self.hops as f64
    }

    /// Spectra of [`Self::example`]: `bin, rx<n>_db.., combined_db, tx_antenna`
    /// (`-1` for unused bins).
    pub fn spectrum_table(&self, cfg: &ExperimentConfig) -> CurveTable {
        let s = &self.example;
        let mut cols = vec!["bin".to_string()];
        cols.extend((0..s.per_antenna_db.len()).map(|n| format!("rx{n}_db")));
        cols.push("combined_db".into());
        cols.push("tx_antenna".into());
        let mut t = CurveTable::new(cols);
        for bin in 0..s.combined_db.len() {
            let mut row = vec![bin as f64];
            row.extend(s.per_antenna_db.iter().map(|a| a[bin]));
            row.push(s.combined_db[bin]);
            row.push(s.owner[bin].map_or(-1.0, |m| m as f64));
            t.push_row(row).expect("row width matches columns");
        }
        with_config_meta(t, "multipath_spectrum", cfg)
            .with_meta("example_trial", s.trial.to_string())
            .with_meta("example_hop", s.hop.to_string())
    }

    /// One row: `hops, rx<n>_errors.., combined_errors, repaired_hops`.
    pub fn detection_table(&self, cfg: &ExperimentConfig) -> CurveTable {
        let mut cols = vec!["hops".to_string()];
        cols.extend((0..self.single_errors.len()).map(|n| format!("rx{n}_errors")));
        cols.push("combined_errors".into());
        cols.push("repaired_hops".into());
        let mut t = CurveTable::new(cols);
        let mut row = vec![self.hops as f64];
        row.extend(self.single_errors.iter().map(|&e| e as f64));
        row.push(self.combined_errors as f64);
        row.push(self.repaired.len() as f64);
        t.push_row(row).expect("row width matches columns");
        let mut t = with_config_meta(t, "multipath_detection", cfg);
        for r in self.repaired.iter().take(20) {
            t.metadata.push((
                "repaired".into(),
                format!("trial {} hop {} failed rx {:?}", r.trial, r.hop, r.failed_antennas()),
            ));
        }
        t
    }
}

struct TrialOutcome {
    single_errors: Vec<usize>,
    combined_errors: usize,
    repaired: Vec<RepairedHop>,
    snapshot: Option<SpectrumSnapshot>,
    snapshot_repaired: bool,
}

fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * x.log10()
    } else {
        crate::ambiguity::DB_FLOOR
    }
}

/// Runs `trials` pulses, each through a fresh channel realization, and
/// detects every hop's code per antenna and from the combined spectrum.
///
/// Noise is `noise_power_db` absolute when set, otherwise the first grid
/// point is used as the per-sample SNR.
pub fn run_multipath_demo(cfg: &ExperimentConfig) -> Result<MultipathReport> {
    run_multipath_in::<f64>(cfg)
}

pub fn run_multipath_in<T: Real>(cfg: &ExperimentConfig) -> Result<MultipathReport> {
    let params = cfg.validate()?;
    let l = params.samples_per_hop();
    let noise = match cfg.noise_power_db {
        Some(db) => NoiseSpec::Power(db_to_linear(db)),
        None => NoiseSpec::snr_db(cfg.grid_db[0]),
    };
    let prop = PropagationConfig { noise, timing_offset: cfg.timing_offset, rx: cfg.rx };
    let dft = HopDft::<T>::new(l);
    let phases = PhaseMatrix::zeros(params.hops(), params.antennas(), 1);
    let norm = (l * l) as f64;

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let mut rng = trial_rng(cfg.seed, DOMAIN, trial as u64);
            let code = HoppingCode::draw(&params, &mut rng).reorder_ascending();
            let channel: ChannelRealization<T> = cfg.channel.draw(&mut rng)?;
            let tx = synthesize_tx::<T>(&params, &code, &phases)?;
            let rx = propagate(&tx, &channel, &prop, &mut rng)?;
            let mut out = TrialOutcome {
                single_errors: vec![0; cfg.rx.antennas],
                combined_errors: 0,
                repaired: Vec::new(),
                snapshot: None,
                snapshot_repaired: false,
            };
            for h in 0..params.hops() {
                let spectrum = dft.spectrum(&rx, h);
                let truth = code.row(h).to_vec();
                let single: Vec<Vec<usize>> = spectrum
                    .bins
                    .iter()
                    .map(|row| {
                        let p: Vec<T> = row.iter().map(|y| y.norm_sqr()).collect();
                        detect_hopping_freqs(&p, &params)
                    })
                    .collect();
                let combined = spectrum.combined_power();
                let joint = detect_hopping_freqs(&combined, &params);
                let mut any_single_failed = false;
                for (n, d) in single.iter().enumerate() {
                    if *d != truth {
                        out.single_errors[n] += 1;
                        any_single_failed = true;
                    }
                }
                let joint_ok = joint == truth;
                if !joint_ok {
                    out.combined_errors += 1;
                }
                let repaired = any_single_failed && joint_ok;
                if repaired {
                    out.repaired.push(RepairedHop { trial, hop: h, truth: truth.clone(), single });
                }
                let want = (repaired && !out.snapshot_repaired) || (trial == 0 && h == 0 && out.snapshot.is_none());
                if want {
                    let mut owner = vec![None; l];
                    for (m, &k) in truth.iter().enumerate() {
                        owner[params.bin_of(k)] = Some(m);
                    }
                    out.snapshot = Some(SpectrumSnapshot {
                        trial,
                        hop: h,
                        truth,
                        per_antenna_db: spectrum
                            .bins
                            .iter()
                            .map(|row| row.iter().map(|y| to_db(y.norm_sqr().as_f64() / norm)).collect())
                            .collect(),
                        combined_db: combined.iter().map(|p| to_db(p.as_f64() / norm)).collect(),
                        owner,
                    });
                    out.snapshot_repaired |= repaired;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut single_errors = vec![0usize; cfg.rx.antennas];
    let mut combined_errors = 0;
    let mut repaired = Vec::new();
    let mut fallback = None;
    let mut example = None;
    for o in outcomes {
        for (a, e) in single_errors.iter_mut().zip(&o.single_errors) {
            *a += e;
        }
        combined_errors += o.combined_errors;
        repaired.extend(o.repaired);
        match o.snapshot {
            Some(s) if o.snapshot_repaired && example.is_none() => example = Some(s),
            Some(s) if s.trial == 0 && !o.snapshot_repaired => fallback = Some(s),
            _ => {}
        }
    }
    let example = example.or(fallback).expect("trial 0 always records a snapshot");
    Ok(MultipathReport { hops: cfg.trials * params.hops(), single_errors, combined_errors, repaired, example })
}
