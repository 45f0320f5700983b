//! Pilot-based line-of-sight channel estimation.
//!
//! The pilot hop gives `Y_m = beta_0 exp(-j m u_0)` per transmit antenna,
//! a single complex tone across the array. Its frequency is found with a
//! coarse `M`-point DFT peak search followed by iterative q-shift
//! interpolation between the two DFT coefficients at `m~ + delta +- eps`.

use num_complex::Complex;

use crate::params::RadarParams;
use crate::receiver::HopSpectrum;
use crate::scalar::{wrap_to_two_pi, Real};

/// `Y_0m / L` for `m = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotVector<T>(pub Vec<Complex<T>>);

impl<T: Real> PilotVector<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self(self.0.iter().map(|y| y * c).collect())
    }
}

/// Reads the pilot tones off one receive antenna's hop-0 spectrum, with
/// antenna `m` taken at sub-band `k_hat[m]`.
pub fn extract_pilot<T: Real>(bins: &[Complex<T>], k_hat: &[usize], params: &RadarParams) -> PilotVector<T> {
    let scale = T::one() / T::count(params.samples_per_hop());
    PilotVector(k_hat.iter().map(|&k| bins[params.bin_of(k)] * scale).collect())
}

/// Pilot from a [`HopSpectrum`] on receive antenna `rx`.
pub fn extract_pilot_from<T: Real>(spectrum: &HopSpectrum<T>, rx: usize, k_hat: &[usize], params: &RadarParams) -> PilotVector<T> {
    extract_pilot(&spectrum.bins[rx], k_hat, params)
}

/// `sum_m Y_m exp(+j 2pi m f / M)` at fractional bin `f`.
fn array_dft<T: Real>(pilot: &PilotVector<T>, f: T) -> Complex<T> {
    let m_len = T::count(pilot.len());
    pilot
        .0
        .iter()
        .enumerate()
        .map(|(m, y)| y * Complex::from_polar(T::one(), T::TAU() * T::count(m) * f / m_len))
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
}

/// Coarse AoD bin `m~ = argmax |Z_m'|`; ties go to the lower bin.
pub fn coarse_aod<T: Real>(pilot: &PilotVector<T>) -> usize {
    let mut best = (0usize, T::neg_infinity());
    for mp in 0..pilot.len() {
        let z = array_dft(pilot, T::count(mp)).norm_sqr();
        if z > best.1 {
            best = (mp, z);
        }
    }
    best.0
}

/// Step gain applied to `Re(gamma)` in each refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QseGain {
    /// Reciprocal slope of `Re(gamma)` at `delta` for an `M`-point array.
    /// Converges to machine precision in three iterations.
    #[default]
    FiniteLength,
    /// `eps cos^2(pi eps) / (1 - pi eps cot(pi eps))`, the `M -> inf` limit
    /// of the above. Leaves a residual bias of order `1e-2` bins at `M = 10`.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QseConfig {
    pub iterations: usize,
    /// Shift `eps`; `None` uses the upper bound `min(M^(-1/3), 0.32)`.
    pub epsilon: Option<f64>,
    pub gain: QseGain,
}

impl Default for QseConfig {
    fn default() -> Self {
        Self { iterations: 3, epsilon: None, gain: QseGain::FiniteLength }
    }
}

impl QseConfig {
    pub fn epsilon_for(&self, antennas: usize) -> f64 {
        self.epsilon.unwrap_or_else(|| max_epsilon(antennas))
    }
}

/// `min(M^(-1/3), 0.32)`.
pub fn max_epsilon(antennas: usize) -> f64 {
    (antennas as f64).powf(-1.0 / 3.0).min(0.32)
}

/// Gain `c` in `delta <- delta + c Re(gamma)`.
pub fn qse_gain(antennas: usize, epsilon: f64, gain: QseGain) -> f64 {
    use std::f64::consts::PI;
    let pe = PI * epsilon;
    match gain {
        QseGain::Asymptotic => epsilon * pe.cos().powi(2) / (1.0 - pe / pe.tan()),
        QseGain::FiniteLength => {
            let m = antennas as f64;
            let c = (pe * (m - 1.0) / m).cos();
            m * c * c / (PI * (1.0 / (pe / m).tan() - m / pe.tan()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QseState<T> {
    pub m_tilde: usize,
    pub delta: T,
    pub epsilon: T,
    pub iterations: usize,
    /// `Z+ + Z- = 0` was hit; `delta` was reset to 0.
    pub degenerate: bool,
}

/// Iterative q-shift refinement of the fractional bin offset, from
/// `delta = 0`. Each step is held to `[-1/2, 1/2]`, the coarse bin's own
/// cell; at low SNR an unbounded step can leave it by tens of bins.
pub fn qse_refine<T: Real>(pilot: &PilotVector<T>, m_tilde: usize, cfg: &QseConfig) -> QseState<T> {
    let m = pilot.len();
    let eps_f = cfg.epsilon_for(m);
    let eps = T::lit(eps_f);
    let c = T::lit(qse_gain(m, eps_f, cfg.gain));
    let mut state = QseState { m_tilde, delta: T::zero(), epsilon: eps, iterations: 0, degenerate: false };
    let base = T::count(m_tilde);
    let half = T::lit(0.5);
    for _ in 0..cfg.iterations {
        let zp = array_dft(pilot, base + state.delta + eps);
        let zm = array_dft(pilot, base + state.delta - eps);
        let den = zp + zm;
        if den.norm_sqr() == T::zero() || !den.norm_sqr().is_finite() {
            state.delta = T::zero();
            state.degenerate = true;
            return state;
        }
        let gamma = (zp - zm) / den;
        state.delta = (state.delta + c * gamma.re).max(-half).min(half);
        state.iterations += 1;
    }
    state
}

/// Estimated LoS channel for one receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate<T> {
    /// Beamspace AoD on `[0, 2pi)`.
    pub u0_hat: T,
    pub beta0_hat: Complex<T>,
    /// Pilot-hop sub-bands the estimate was read from.
    pub k_hat: Vec<usize>,
    pub state: QseState<T>,
}

impl<T: Real> ChannelEstimate<T> {
    /// `beta0_hat exp(-j m u0_hat)` for `m = 0..M`.
    pub fn gains(&self, antennas: usize) -> Vec<Complex<T>> {
        (0..antennas)
            .map(|m| self.beta0_hat * Complex::from_polar(T::one(), -(T::count(m) * self.u0_hat)))
            .collect()
    }
}

/// `u0_hat = 2pi (m~ + delta) / M` and `beta0_hat = mean_m Y_m exp(j m u0_hat)`.
pub fn finalize<T: Real>(pilot: &PilotVector<T>, state: &QseState<T>) -> (T, Complex<T>) {
    let m = T::count(pilot.len());
    let u0 = wrap_to_two_pi(T::TAU() * (T::count(state.m_tilde) + state.delta) / m);
    (u0, beta_from_aod(pilot, u0))
}

/// Matched-filter gain estimate for a given AoD.
pub fn beta_from_aod<T: Real>(pilot: &PilotVector<T>, u0: T) -> Complex<T> {
    let m = T::count(pilot.len());
    let sum = pilot
        .0
        .iter()
        .enumerate()
        .map(|(i, y)| y * Complex::from_polar(T::one(), T::count(i) * u0))
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b);
    sum / m
}

/// Full pipeline on one receive antenna's pilot-hop spectrum.
pub fn estimate<T: Real>(bins: &[Complex<T>], k_hat: &[usize], params: &RadarParams, cfg: &QseConfig) -> ChannelEstimate<T> {
    let pilot = extract_pilot(bins, k_hat, params);
    let state = qse_refine(&pilot, coarse_aod(&pilot), cfg);
    let (u0_hat, beta0_hat) = finalize(&pilot, &state);
    ChannelEstimate { u0_hat, beta0_hat, k_hat: k_hat.to_vec(), state }
}

/// Reference bound `3 / (pi^2 M L gamma0)` on the variance of `u0_hat`.
pub fn crlb_u0(antennas: usize, samples_per_hop: usize, gamma0: f64) -> f64 {
    3.0 / (std::f64::consts::PI.powi(2) * antennas as f64 * samples_per_hop as f64 * gamma0)
}

/// Single-tone bound `6 / (L gamma0 (M^2 - 1))` when `gamma0` is the
/// per-sample SNR of the array-summed capture, as the channel module
/// defines it. Larger than [`crlb_u0`] by `2 pi^2 M / (M^2 - 1)`.
pub fn crlb_u0_single_tone(antennas: usize, samples_per_hop: usize, gamma0: f64) -> f64 {
    let m = antennas as f64;
    6.0 / (samples_per_hop as f64 * gamma0 * (m * m - 1.0))
}

/// Angular error on the circle, in `(-pi, pi]`.
pub fn angle_error<T: Real>(estimate: T, truth: T) -> T {
    crate::scalar::wrap_to_pi(estimate - truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::steering_vector;
    use std::f64::consts::PI;

    fn tone(m: usize, u0: f64, beta: Complex<f64>) -> PilotVector<f64> {
        PilotVector(steering_vector::<f64>(m, u0).into_iter().map(|a| a * beta).collect())
    }

    #[test]
    fn noiseless_pilot_values() {
        let p = tone(4, PI / 2.0, Complex::new(1.0, 0.0));
        let expect = [Complex::new(1.0, 0.0), Complex::new(0.0, -1.0), Complex::new(-1.0, 0.0), Complex::new(0.0, 1.0)];
        for (a, b) in p.0.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn coarse_bins() {
        assert_eq!(coarse_aod(&tone(10, 2.0 * PI * 3.0 / 10.0, Complex::new(1.0, 0.0))), 3);
        let m = coarse_aod(&tone(10, PI / 2.0, Complex::new(0.3, 0.4)));
        assert!(m == 2 || m == 3);
    }

    #[test]
    fn on_bin_delta_is_zero() {
        let p = tone(10, 2.0 * PI * 4.0 / 10.0, Complex::new(1.0, 0.0));
        let s = qse_refine(&p, coarse_aod(&p), &QseConfig::default());
        assert!(s.delta.abs() < 1e-9);
        assert_eq!(s.iterations, 3);
    }

    #[test]
    fn off_bin_delta_converges() {
        let p = tone(10, 2.0 * PI * 3.3 / 10.0, Complex::new(1.0, 0.0));
        let s = qse_refine(&p, 3, &QseConfig::default());
        assert!((s.delta - 0.3).abs() < 1e-6, "{}", s.delta);
    }

    #[test]
    fn asymptotic_gain_leaves_bias() {
        let p = tone(10, 2.0 * PI * 3.3 / 10.0, Complex::new(1.0, 0.0));
        let cfg = QseConfig { gain: QseGain::Asymptotic, ..Default::default() };
        let s = qse_refine(&p, 3, &cfg);
        assert!((s.delta - 0.3).abs() > 1e-4);
        assert!((s.delta - 0.3).abs() < 0.05);
    }

    #[test]
    fn gains_agree_for_long_arrays() {
        // the finite-length gain approaches the limit like 1/M
        let e = 0.32;
        let a = qse_gain(100_000, e, QseGain::Asymptotic);
        let gap = |m| (qse_gain(m, e, QseGain::FiniteLength) - a).abs() / a;
        assert!(gap(100_000) < 1e-4);
        assert!((gap(1_000) / gap(10_000) - 10.0).abs() < 0.5);
    }

    #[test]
    fn epsilon_bound() {
        assert!((max_epsilon(10) - 0.32).abs() < 1e-15);
        assert!((max_epsilon(64) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_ratio_is_flagged() {
        let p = PilotVector(vec![Complex::new(0.0, 0.0); 8]);
        let s = qse_refine(&p, 0, &QseConfig::default());
        assert!(s.degenerate);
        assert_eq!(s.delta, 0.0);
    }

    #[test]
    fn true_aod_recovers_beta() {
        let beta = Complex::from_polar(0.7, -2.1);
        let p = tone(10, 1.234, beta);
        assert!((beta_from_aod(&p, 1.234) - beta).norm() < 1e-14);
    }

    #[test]
    fn finalize_is_wrapped() {
        let p = tone(10, 2.0 * PI * 9.8 / 10.0, Complex::new(1.0, 0.0));
        let s = qse_refine(&p, coarse_aod(&p), &QseConfig::default());
        let (u, _) = finalize(&p, &s);
        assert!((0.0..2.0 * PI).contains(&u));
        assert!(angle_error(u, 2.0 * PI * 9.8 / 10.0).abs() < 1e-9);
    }

    #[test]
    fn crlb_values() {
        assert!((crlb_u0(10, 40, 10.0) - 7.599e-5).abs() < 1e-8);
        assert!((crlb_u0(10, 40, 3.981) - 1.909e-4).abs() < 1e-7);
        assert!((crlb_u0(10, 80, 2.0) * 2.0 - crlb_u0(10, 40, 2.0)).abs() < 1e-18);
        let ratio = crlb_u0_single_tone(10, 40, 1.0) / crlb_u0(10, 40, 1.0);
        assert!((ratio - 2.0 * PI * PI * 10.0 / 99.0).abs() < 1e-12);
    }
}
