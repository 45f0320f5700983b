//! Flat-fading multipath channel, receive array, noise and timing offset.
//!
//! The channel from transmit antenna `m` to receive antenna `n` is
//!
//! `g[n][m] = sum_p beta_p exp(-j m u_p) exp(-j 2pi d n sin(theta_p))`
//!
//! where `u_p` is the beamspace angle of departure, `theta_p` the physical
//! angle of arrival and `d` the receive spacing in wavelengths.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::params::RadarParams;
use crate::rng;
use crate::scalar::Real;
use crate::waveform::TxBaseband;

/// Transmit steering vector, element `m` is `exp(-j m u)`.
pub fn steering_vector<T: Real>(antennas: usize, u: T) -> Vec<Complex<T>> {
    (0..antennas).map(|m| Complex::from_polar(T::one(), -(T::count(m) * u))).collect()
}

/// Beamspace angle `pi sin(phi)` of a physical angle.
pub fn beamspace(phi: f64) -> f64 {
    std::f64::consts::PI * phi.sin()
}

/// Statistical family of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingModel {
    /// Single deterministic line-of-sight path.
    Awgn,
    /// Line-of-sight path plus `paths - 1` scattered paths whose total
    /// power is the LoS power divided by the Rician factor. `factor_db` may
    /// be `+inf`, which removes the scattered paths.
    Rician { factor_db: f64, paths: usize },
    /// `paths` i.i.d. complex Gaussian paths sharing the configured power.
    Rayleigh { paths: usize },
}

impl FadingModel {
    pub fn name(&self) -> &'static str {
        match self {
            FadingModel::Awgn => "awgn",
            FadingModel::Rician { .. } => "rician",
            FadingModel::Rayleigh { .. } => "rayleigh",
        }
    }
}

/// The line-of-sight (or, for Rayleigh, reference) path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosSpec {
    /// `|beta_0|`; for Rayleigh the RMS amplitude of the whole channel.
    pub amplitude: f64,
    /// Phase of `beta_0`; `None` draws it uniformly on `[0, 2pi)`.
    pub phase: Option<f64>,
    /// Beamspace AoD `u_0`.
    pub aod: f64,
    /// Physical AoA at the receive array.
    pub aoa: f64,
}

impl Default for LosSpec {
    fn default() -> Self {
        Self { amplitude: 1.0, phase: None, aod: std::f64::consts::FRAC_PI_2, aoa: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub fading: FadingModel,
    pub los: LosSpec,
}

impl ChannelModel {
    pub fn awgn(los: LosSpec) -> Self {
        Self { fading: FadingModel::Awgn, los }
    }

    pub fn rician(factor_db: f64, paths: usize, los: LosSpec) -> Self {
        Self { fading: FadingModel::Rician { factor_db, paths }, los }
    }

    pub fn rayleigh(paths: usize, los: LosSpec) -> Self {
        Self { fading: FadingModel::Rayleigh { paths }, los }
    }

    pub fn validate(&self) -> Result<()> {
        let los = &self.los;
        if !(los.amplitude.is_finite() && los.amplitude >= 0.0) {
            return Err(Error::InvalidChannel(format!("amplitude must be finite and >= 0, got {}", los.amplitude)));
        }
        if !los.aod.is_finite() || !los.aoa.is_finite() || los.phase.is_some_and(|p| !p.is_finite()) {
            return Err(Error::InvalidChannel("angles must be finite".into()));
        }
        match self.fading {
            FadingModel::Awgn => Ok(()),
            FadingModel::Rician { factor_db, paths } => {
                if factor_db.is_nan() || factor_db < 0.0 {
                    return Err(Error::InvalidChannel(format!("Rician factor must be >= 0 dB, got {factor_db}")));
                }
                if paths < 2 && factor_db.is_finite() {
                    return Err(Error::InvalidChannel(format!("Rician channel needs P >= 2 paths, got {paths}")));
                }
                Ok(())
            }
            FadingModel::Rayleigh { paths } => {
                if paths < 1 {
                    return Err(Error::InvalidChannel("Rayleigh channel needs P >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Draws a realization.
    pub fn draw<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization<T>> {
        self.validate()?;
        let los = &self.los;
        let mut paths = Vec::new();
        let los_path = |rng: &mut R| {
            let phase = los.phase.unwrap_or_else(|| rng.random::<f64>() * std::f64::consts::TAU);
            Path::new(Complex::from_polar(los.amplitude, phase), los.aod, los.aoa)
        };
        match self.fading {
            FadingModel::Awgn => paths.push(los_path(rng)),
            FadingModel::Rician { factor_db, paths: p } => {
                paths.push(los_path(rng));
                if factor_db.is_finite() {
                    let scattered = los.amplitude.powi(2) / 10f64.powf(factor_db / 10.0);
                    let var = scattered / (p - 1) as f64;
                    for _ in 1..p {
                        paths.push(random_path(var, rng));
                    }
                }
            }
            FadingModel::Rayleigh { paths: p } => {
                let var = los.amplitude.powi(2) / p as f64;
                for _ in 0..p {
                    paths.push(random_path(var, rng));
                }
            }
        }
        Ok(ChannelRealization { paths, model: self.fading })
    }
}

/// Circularly-symmetric complex Gaussian sample of variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex<f64> {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (rng.random::<f64>() - 0.5) * std::f64::consts::PI
}

fn random_path<T: Real, R: Rng + ?Sized>(var: f64, rng: &mut R) -> Path<T> {
    let gain = complex_gaussian(var, rng);
    let aod = beamspace(uniform_angle(rng));
    let aoa = uniform_angle(rng);
    Path::new(gain, aod, aoa)
}

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path<T> {
    pub gain: Complex<T>,
    /// Beamspace AoD `u_p`, wrapped to `[-pi, pi)`.
    pub aod: T,
    /// Physical AoA in radians.
    pub aoa: T,
}

impl<T: Real> Path<T> {
    pub fn new(gain: Complex<f64>, aod: f64, aoa: f64) -> Self {
        let pi = std::f64::consts::PI;
        let aod = (aod + pi).rem_euclid(2.0 * pi) - pi;
        Self { gain: Complex::new(T::lit(gain.re), T::lit(gain.im)), aod: T::lit(aod), aoa: T::lit(aoa) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    paths: Vec<Path<T>>,
    model: FadingModel,
}

impl<T: Real> ChannelRealization<T> {
    pub fn from_paths(paths: Vec<Path<T>>, model: FadingModel) -> Self {
        Self { paths, model }
    }

    /// Single path with the given gain and beamspace AoD, broadside arrival.
    pub fn single_path(gain: Complex<f64>, aod: f64) -> Self {
        Self { paths: vec![Path::new(gain, aod, 0.0)], model: FadingModel::Awgn }
    }

    pub fn paths(&self) -> &[Path<T>] {
        &self.paths
    }

    pub fn model(&self) -> FadingModel {
        self.model
    }

    /// Dominant (first) path, the one the pilot estimator targets.
    pub fn los(&self) -> &Path<T> {
        &self.paths[0]
    }

    /// `h = sum_p beta_p a_M(u_p)` seen by a broadside receiver.
    pub fn tx_response(&self, antennas: usize) -> Vec<Complex<T>> {
        self.response(antennas, 0, T::zero())
    }

    /// Gains `g[m]` from every transmit antenna to receive antenna `n`.
    pub fn response(&self, antennas: usize, rx: usize, spacing: T) -> Vec<Complex<T>> {
        let mut g = vec![Complex::new(T::zero(), T::zero()); antennas];
        for p in &self.paths {
            let rx_phase = -(T::TAU() * spacing * T::count(rx) * p.aoa.sin());
            let base = p.gain * Complex::from_polar(T::one(), rx_phase);
            for (m, a) in steering_vector(antennas, p.aod).into_iter().enumerate() {
                g[m] = g[m] + base * a;
            }
        }
        g
    }

    /// `g[n][m]` for an `n_rx`-element array.
    pub fn array_response(&self, antennas: usize, rx: &RxArray) -> Vec<Vec<Complex<T>>> {
        let spacing = T::lit(rx.spacing);
        (0..rx.antennas).map(|n| self.response(antennas, n, spacing)).collect()
    }
}

/// Seeded form of [`ChannelModel::draw`].
pub fn draw_channel<T: Real>(model: &ChannelModel, seed: u64) -> Result<ChannelRealization<T>> {
    model.draw(&mut rng::seeded(seed))
}

/// Uniform linear receive array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxArray {
    pub antennas: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl Default for RxArray {
    fn default() -> Self {
        Self { antennas: 1, spacing: 0.5 }
    }
}

/// How the noise level is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// Per-sample SNR `gamma_0` (linear) measured on the noiseless capture.
    Snr(f64),
    /// Absolute complex noise variance.
    Power(f64),
}

impl NoiseSpec {
    pub fn snr_db(db: f64) -> Self {
        NoiseSpec::Snr(crate::scalar::db_to_linear(db))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub noise: NoiseSpec,
    /// Integer timing offset `L_eta`, must be smaller than `L`.
    pub timing_offset: usize,
    pub rx: RxArray,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { noise: NoiseSpec::None, timing_offset: 0, rx: RxArray::default() }
    }
}

/// Samples at the user terminal, one row per receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct RxCapture<T> {
    samples: Vec<Vec<Complex<T>>>,
    params: RadarParams,
    signal_power: f64,
    noise_var: f64,
    timing_offset: usize,
    rx: RxArray,
}

impl<T: Real> RxCapture<T> {
    pub fn from_samples(samples: Vec<Vec<Complex<T>>>, params: RadarParams) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|r| r.len() != params.pulse_len()) {
            return Err(Error::Dimension(format!("capture rows must hold {} samples", params.pulse_len())));
        }
        let rx = RxArray { antennas: samples.len(), spacing: 0.5 };
        let signal_power = signal_power(&samples);
        Ok(Self { samples, params, signal_power, noise_var: 0.0, timing_offset: 0, rx })
    }

    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    pub fn rx_antennas(&self) -> usize {
        self.samples.len()
    }

    pub fn antenna(&self, n: usize) -> &[Complex<T>] {
        &self.samples[n]
    }

    pub fn hop(&self, n: usize, h: usize) -> &[Complex<T>] {
        let l = self.params.samples_per_hop();
        &self.samples[n][h * l..(h + 1) * l]
    }

    /// Average noiseless sample power.
    pub fn signal_power(&self) -> f64 {
        self.signal_power
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_var
    }

    /// Configured per-sample SNR, `inf` when noiseless.
    pub fn gamma0(&self) -> f64 {
        if self.noise_var == 0.0 {
            f64::INFINITY
        } else {
            self.signal_power / self.noise_var
        }
    }

    pub fn timing_offset(&self) -> usize {
        self.timing_offset
    }

    pub fn rx_array(&self) -> RxArray {
        self.rx
    }
}

/// Average `|x|^2` over all rows.
pub fn signal_power<T: Real>(rows: &[Vec<Complex<T>>]) -> f64 {
    let n: usize = rows.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = rows.iter().flatten().map(|s| s.norm_sqr().as_f64()).sum();
    total / n as f64
}

/// Noiseless mixing `y[i] = sum_m g[m] x_m[i - offset]`, zero before the
/// first delayed sample.
pub fn apply_channel<T: Real>(gains: &[Complex<T>], tx: &[Vec<Complex<T>>], offset: usize) -> Vec<Complex<T>> {
    let len = tx.first().map_or(0, Vec::len);
    let mut out = vec![Complex::new(T::zero(), T::zero()); len];
    for (g, x) in gains.iter().zip(tx) {
        for (o, s) in out[offset.min(len)..].iter_mut().zip(x) {
            *o = *o + *g * *s;
        }
    }
    out
}

/// Adds complex AWGN of variance `var` in place.
pub fn add_awgn<T: Real, R: Rng + ?Sized>(samples: &mut [Complex<T>], var: f64, rng: &mut R) {
    if var <= 0.0 {
        return;
    }
    for s in samples {
        let n = complex_gaussian(var, rng);
        *s = *s + Complex::new(T::lit(n.re), T::lit(n.im));
    }
}

/// Passes a pulse through the channel to every receive antenna.
///
/// The timing offset delays the waveform by `L_eta` samples, so captured
/// hop `h` holds the tail of hop `h-1` followed by the head of hop `h`.
pub fn propagate<T: Real, R: Rng + ?Sized>(
    tx: &TxBaseband<T>,
    channel: &ChannelRealization<T>,
    cfg: &PropagationConfig,
    rng: &mut R,
) -> Result<RxCapture<T>> {
    let params = tx.params();
    let l = params.samples_per_hop();
    if cfg.timing_offset >= l {
        return Err(Error::TimingOffset { offset: cfg.timing_offset, hop_len: l });
    }
    if cfg.rx.antennas == 0 || !cfg.rx.spacing.is_finite() {
        return Err(Error::InvalidChannel("receive array needs at least one antenna and finite spacing".into()));
    }
    let gains = channel.array_response(params.antennas(), &cfg.rx);
    let mut samples: Vec<Vec<Complex<T>>> =
        gains.iter().map(|g| apply_channel(g, tx.antennas(), cfg.timing_offset)).collect();
    let power = signal_power(&samples);
    let noise_var = match cfg.noise {
        NoiseSpec::None => 0.0,
        NoiseSpec::Snr(g) if g > 0.0 && !g.is_nan() => {
            if g.is_infinite() {
                0.0
            } else {
                power / g
            }
        }
        NoiseSpec::Power(v) if v >= 0.0 && v.is_finite() => v,
        other => return Err(Error::InvalidChannel(format!("invalid noise level {other:?}"))),
    };
    for row in &mut samples {
        add_awgn(row, noise_var, rng);
    }
    Ok(RxCapture {
        samples,
        params: *params,
        signal_power: power,
        noise_var,
        timing_offset: cfg.timing_offset,
        rx: cfg.rx,
    })
}
