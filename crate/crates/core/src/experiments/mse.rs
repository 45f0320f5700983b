//! Channel-estimation accuracy against SNR.

use num_complex::Complex;
use rayon::prelude::*;

use super::config::{CodeSource, ExperimentConfig};
use super::table::{run_id, CurveTable};
use crate::chanest::{self, angle_error, crlb_u0};
use crate::channel::{propagate, NoiseSpec, PropagationConfig};
use crate::error::Result;
use crate::receiver::{detect_hopping_freqs, HopDft};
use crate::rng::trial_rng;
use crate::scalar::{db_to_linear, Real};
use crate::waveform::{synthesize_tx, HoppingCode, PhaseMatrix};

const DOMAIN: u64 = 0x6d73_655f_7275_6e00;

/// One SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsePoint {
    pub snr_db: f64,
    pub mse_u0: f64,
    pub mse_beta0: f64,
    pub crlb: f64,
    /// Standard error of `mse_u0` over trials.
    pub se_u0: f64,
    pub se_beta0: f64,
    /// Trials whose refinement hit a degenerate ratio.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub points: Vec<MsePoint>,
    pub trials: usize,
}

impl MseReport {
    pub const COLUMNS: [&'static str; 6] = ["snr_db", "mse_u0", "mse_beta0", "crlb", "se_u0", "se_beta0"];

    pub fn to_table(&self, cfg: &ExperimentConfig) -> CurveTable {
        let mut t = CurveTable::new(Self::COLUMNS.iter().map(|s| s.to_string()).collect());
        for p in &self.points {
            t.push_row(vec![p.snr_db, p.mse_u0, p.mse_beta0, p.crlb, p.se_u0, p.se_beta0])
                .expect("row width matches columns");
        }
        with_config_meta(t, "mse", cfg)
    }
}

/// Adds the experiment name, a run id and the full configuration echo.
pub fn with_config_meta(mut t: CurveTable, experiment: &str, cfg: &ExperimentConfig) -> CurveTable {
    let echo = cfg.to_kv();
    t.metadata.push(("experiment".into(), experiment.into()));
    t.metadata.push(("run_id".into(), run_id(&format!("{experiment}\n{echo}"))));
    for (k, v) in cfg.entries() {
        t.metadata.push((k.to_string(), v));
    }
    t
}

/// Squared errors of one trial.
#[derive(Debug, Clone, Copy)]
struct TrialError {
    u0: f64,
    beta0: f64,
    degenerate: bool,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// MSE of `u0_hat` and `beta0_hat` on every grid point, in double precision.
pub fn run_mse(cfg: &ExperimentConfig) -> Result<MseReport> {
    run_mse_in::<f64>(cfg)
}

/// [`run_mse`] in any sample precision.
///
/// Each trial draws a fresh re-ordered hopping code and channel, sends an
/// unmodulated pulse and estimates the channel from the pilot hop of
/// receive antenna 0. Results depend only on the configuration and seed.
pub fn run_mse_in<T: Real>(cfg: &ExperimentConfig) -> Result<MseReport> {
    let params = cfg.validate()?;
    let dft = HopDft::<T>::new(params.samples_per_hop());
    let phases = PhaseMatrix::zeros(params.hops(), params.antennas(), 1);
    let mut points = Vec::with_capacity(cfg.grid_db.len());

    for (gi, &snr_db) in cfg.grid_db.iter().enumerate() {
        let gamma0 = db_to_linear(snr_db);
        let prop = PropagationConfig { noise: NoiseSpec::Snr(gamma0), timing_offset: cfg.timing_offset, rx: cfg.rx };
        let errors: Vec<TrialError> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| -> Result<TrialError> {
                let mut rng = trial_rng(cfg.seed, DOMAIN ^ gi as u64, trial);
                let code = HoppingCode::draw(&params, &mut rng).reorder_ascending();
                let channel = cfg.channel.draw::<T, _>(&mut rng)?;
                let tx = synthesize_tx::<T>(&params, &code, &phases)?;
                let rx = propagate(&tx, &channel, &prop, &mut rng)?;
                let spectrum = dft.spectrum(&rx, 0);
                let k_hat = match cfg.pilot_code {
                    CodeSource::True => code.row(0).to_vec(),
                    CodeSource::Estimated => detect_hopping_freqs(&spectrum.combined_power(), &params),
                };
                let est = chanest::estimate(&spectrum.bins[0], &k_hat, &params, &cfg.qse);
                let los = channel.los();
                let du = angle_error(est.u0_hat, los.aod).as_f64();
                let db: Complex<T> = est.beta0_hat - los.gain;
                Ok(TrialError { u0: du * du, beta0: db.norm_sqr().as_f64(), degenerate: est.state.degenerate })
            })
            .collect::<Result<_>>()?;
        let (mse_u0, se_u0) = mean_and_se(errors.iter().map(|e| e.u0), errors.len());
        let (mse_beta0, se_beta0) = mean_and_se(errors.iter().map(|e| e.beta0), errors.len());
        points.push(MsePoint {
            snr_db,
            mse_u0,
            mse_beta0,
            crlb: crlb_u0(params.antennas(), params.samples_per_hop(), gamma0),
            se_u0,
            se_beta0,
            degenerate: errors.iter().filter(|e| e.degenerate).count(),
        });
    }
    Ok(MseReport { points, trials: cfg.trials })
}
