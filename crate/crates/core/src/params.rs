//! Static configuration of the frequency-hopping MIMO radar.

use crate::error::{invalid, Result};

/// Radar configuration shared by transmitter, channel and receiver.
///
/// The band `B` is split into `K` sub-bands; each of the `M` transmit
/// antennas occupies one sub-band per hop, and a pulse holds `H` hops of
/// duration `T` sampled every `Ts`. Construction enforces waveform
/// orthogonality: `B*T/K` must be a positive integer, so sub-band `k` lands
/// exactly on DFT bin `k * delta` of an `L`-point hop transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarParams {
    antennas: usize,
    subbands: usize,
    hops: usize,
    bandwidth: f64,
    hop_duration: f64,
    sample_interval: f64,
    prf: f64,
    samples_per_hop: usize,
    delta: usize,
}

const INTEGER_TOL: f64 = 1e-9;

impl RadarParams {
    /// Validates and derives `L = round(T/Ts)` and `delta = B*T/K`.
    pub fn new(
        antennas: usize,
        subbands: usize,
        hops: usize,
        bandwidth: f64,
        hop_duration: f64,
        sample_interval: f64,
        prf: f64,
    ) -> Result<Self> {
        if antennas == 0 {
            return Err(invalid("M", "antenna count must be positive"));
        }
        if subbands <= antennas {
            return Err(invalid(
                "K",
                format!("sub-band count {subbands} must exceed antenna count {antennas}"),
            ));
        }
        if hops == 0 {
            return Err(invalid("H", "hop count must be positive"));
        }
        for (name, v) in [("B", bandwidth), ("T", hop_duration), ("Ts", sample_interval), ("prf", prf)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if sample_interval * bandwidth > 1.0 + INTEGER_TOL {
            return Err(invalid(
                "Ts",
                format!("sampling interval {sample_interval} exceeds 1/B = {}", 1.0 / bandwidth),
            ));
        }
        let delta_f = bandwidth * hop_duration / subbands as f64;
        let delta_r = delta_f.round();
        if delta_r < 1.0 || (delta_f - delta_r).abs() > INTEGER_TOL * delta_f.max(1.0) {
            return Err(invalid(
                "B*T/K",
                format!("must be a positive integer for orthogonal hops, got {delta_f}"),
            ));
        }
        let delta = delta_r as usize;
        let samples_per_hop = (hop_duration / sample_interval).round() as usize;
        if samples_per_hop < subbands * delta {
            return Err(invalid(
                "Ts",
                format!(
                    "L = {samples_per_hop} samples per hop cannot resolve {} tone bins",
                    subbands * delta
                ),
            ));
        }
        Ok(Self {
            antennas,
            subbands,
            hops,
            bandwidth,
            hop_duration,
            sample_interval,
            prf,
            samples_per_hop,
            delta,
        })
    }

    /// `M`
    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// `K`
    pub fn subbands(&self) -> usize {
        self.subbands
    }

    /// `H`
    pub fn hops(&self) -> usize {
        self.hops
    }

    /// `B` in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `T` in seconds.
    pub fn hop_duration(&self) -> f64 {
        self.hop_duration
    }

    /// `Ts` in seconds.
    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn prf(&self) -> f64 {
        self.prf
    }

    /// `L`
    pub fn samples_per_hop(&self) -> usize {
        self.samples_per_hop
    }

    /// Sub-band to DFT-bin factor.
    pub fn delta(&self) -> usize {
        self.delta
    }

    /// `B*T`, the time-bandwidth product of one hop.
    pub fn time_bandwidth(&self) -> f64 {
        self.bandwidth * self.hop_duration
    }

    /// Samples in one pulse.
    pub fn pulse_len(&self) -> usize {
        self.hops * self.samples_per_hop
    }

    /// DFT bin carrying sub-band `k`.
    pub fn bin_of(&self, subband: usize) -> usize {
        subband * self.delta
    }

    /// Same radar with a different number of hops per pulse.
    pub fn with_hops(&self, hops: usize) -> Result<Self> {
        Self::new(
            self.antennas,
            self.subbands,
            hops,
            self.bandwidth,
            self.hop_duration,
            self.sample_interval,
            self.prf,
        )
    }

    /// Same radar with a different sampling interval.
    pub fn with_sample_interval(&self, sample_interval: f64) -> Result<Self> {
        Self::new(
            self.antennas,
            self.subbands,
            self.hops,
            self.bandwidth,
            self.hop_duration,
            sample_interval,
            self.prf,
        )
    }
}
