//! Link-level simulation of frequency-hopping MIMO dual-function
//! radar-communication systems.
//!
//! The signal chain runs [`waveform`] -> [`channel`] -> [`receiver`], with
//! [`chanest`] supplying the line-of-sight channel estimate the coherent
//! demodulators need. [`ambiguity`] evaluates the radar side and
//! [`experiments`] holds the Monte-Carlo harnesses.
//!
//! Signal-processing types are generic over [`Real`] (`f32` or `f64`); the
//! `*64` and `*32` aliases below fix the precision.
//!
//! ```
//! use fhmimo::channel::{propagate, ChannelRealization, NoiseSpec, PropagationConfig};
//! use fhmimo::receiver::{ChannelKnowledge, CodeKnowledge, Demodulator};
//! use fhmimo::rng::seeded;
//! use fhmimo::waveform::{synthesize_pulse, Modulator, Scheme};
//! use fhmimo::RadarParams;
//! use num_complex::Complex;
//!
//! # fn main() -> fhmimo::Result<()> {
//! let params = RadarParams::new(10, 20, 10, 1e8, 2e-7, 5e-9, 1e5)?;
//! let modem = Modulator::new(params, Scheme::FhcsPsk, 1)?;
//! let mut rng = seeded(7);
//! let bits = vec![true; modem.bits_per_pulse()];
//! let pulse = modem.modulate(&bits, &mut rng)?;
//!
//! let channel = ChannelRealization::<f64>::single_path(Complex::new(1.0, 0.0), 0.4);
//! let cfg = PropagationConfig { noise: NoiseSpec::snr_db(15.0), ..Default::default() };
//! let rx = propagate(&synthesize_pulse(&params, &pulse)?, &channel, &cfg, &mut rng)?;
//!
//! let demod = Demodulator::new(modem);
//! let est = demod.estimate_channel(&rx, CodeKnowledge::Detect, &Default::default());
//! let gains: Vec<_> = est.iter().map(|e| e.gains(10)).collect();
//! let out = demod.demodulate(&rx, CodeKnowledge::Detect, ChannelKnowledge::Known(&gains))?;
//! assert_eq!(out.bits, bits);
//! # Ok(())
//! # }
//! ```

pub mod ambiguity;
pub mod chanest;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod fhcs;
pub mod params;
pub mod receiver;
pub mod rng;
pub mod scalar;
pub mod waveform;

pub use error::{Error, Result};
pub use params::RadarParams;
pub use scalar::Real;
pub use waveform::{HoppingCode, Modulator, PhaseMatrix, PhasePayload, Pulse, Scheme, TxBaseband};

pub type TxBaseband64 = TxBaseband<f64>;
pub type TxBaseband32 = TxBaseband<f32>;

pub use ambiguity::{compare_profiles, range_ambiguity, AmbiguityProfile};
pub use chanest::{ChannelEstimate, PilotVector, QseConfig, QseGain, QseState};
pub use channel::{ChannelModel, ChannelRealization, FadingModel, LosSpec, NoiseSpec, PropagationConfig, RxArray, RxCapture};
pub use experiments::{CurveTable, ExperimentConfig};
pub use receiver::{Demodulator, DemodResult, HopDft, HopSpectrum};

pub type ChannelRealization64 = ChannelRealization<f64>;
pub type ChannelRealization32 = ChannelRealization<f32>;
pub type RxCapture64 = RxCapture<f64>;
pub type RxCapture32 = RxCapture<f32>;
pub type HopSpectrum64 = HopSpectrum<f64>;
pub type HopSpectrum32 = HopSpectrum<f32>;
pub type ChannelEstimate64 = ChannelEstimate<f64>;
pub type ChannelEstimate32 = ChannelEstimate<f32>;
