//! Hop-wise DFT processing, hopping-frequency detection and demodulation.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::chanest::{self, ChannelEstimate, QseConfig};
use crate::channel::RxCapture;
use crate::error::{Error, Result};
use crate::fhcs;
use crate::params::RadarParams;
use crate::scalar::Real;
use crate::waveform::{constellation_order, HoppingCode, Modulator, Scheme};

/// `L`-point spectra of one hop, one row per receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct HopSpectrum<T> {
    pub hop: usize,
    pub bins: Vec<Vec<Complex<T>>>,
}

impl<T: Real> HopSpectrum<T> {
    pub fn rx_antennas(&self) -> usize {
        self.bins.len()
    }

    /// Incoherently combined power across receive antennas.
    pub fn combined_power(&self) -> Vec<T> {
        combine_incoherent(&self.bins).expect("rows of one spectrum share a length")
    }

    /// Tone samples `Y_n(k * delta) / L` for each sub-band in `subbands`.
    pub fn tones(&self, rx: usize, subbands: &[usize], params: &RadarParams) -> Vec<Complex<T>> {
        let scale = T::one() / T::count(params.samples_per_hop());
        subbands.iter().map(|&k| self.bins[rx][params.bin_of(k)] * scale).collect()
    }
}

/// Forward DFT of length `L` with a cached plan.
#[derive(Clone)]
pub struct HopDft<T: Real> {
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> HopDft<T> {
    pub fn new(len: usize) -> Self {
        Self { fft: FftPlanner::new().plan_fft_forward(len) }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fft.len() == 0
    }

    /// Unnormalized forward transform `Y(l) = sum_i y(i) exp(-j 2pi l i / L)`.
    pub fn transform(&self, samples: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = samples.to_vec();
        self.fft.process(&mut buf);
        buf
    }

    pub fn spectrum(&self, capture: &RxCapture<T>, hop: usize) -> HopSpectrum<T> {
        let bins = (0..capture.rx_antennas()).map(|n| self.transform(capture.hop(n, hop))).collect();
        HopSpectrum { hop, bins }
    }
}

/// One-shot DFT of hop `h` on every receive antenna.
pub fn hop_dft<T: Real>(capture: &RxCapture<T>, hop: usize) -> HopSpectrum<T> {
    HopDft::new(capture.params().samples_per_hop()).spectrum(capture, hop)
}

/// Element-wise sum of `|Y_n(l)|^2` over receive antennas.
pub fn combine_incoherent<T: Real>(spectra: &[Vec<Complex<T>>]) -> Result<Vec<T>> {
    let len = spectra.first().map(Vec::len).ok_or_else(|| Error::Dimension("no spectra to combine".into()))?;
    if spectra.iter().any(|s| s.len() != len) {
        return Err(Error::Dimension("spectra have different lengths".into()));
    }
    let mut out = vec![T::zero(); len];
    for s in spectra {
        for (o, y) in out.iter_mut().zip(s) {
            *o = *o + y.norm_sqr();
        }
    }
    Ok(out)
}

/// The `M` strongest candidate sub-bands, ascending.
///
/// `power` is a per-bin magnitude (or power) spectrum; only bins
/// `k * delta` for `k < K` are searched. Ties go to the lower sub-band.
pub fn detect_hopping_freqs<T: Real>(power: &[T], params: &RadarParams) -> Vec<usize> {
    let mut cand: Vec<usize> = (0..params.subbands()).collect();
    cand.sort_by(|&a, &b| {
        power[params.bin_of(b)]
            .partial_cmp(&power[params.bin_of(a)])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    cand.truncate(params.antennas());
    cand.sort_unstable();
    cand
}

/// Bits carried by a detected ascending combination.
pub fn fhcs_decode(combination: &[usize], params: &RadarParams) -> Result<Vec<bool>> {
    fhcs::decode(combination, params.subbands())
}

/// Nearest constellation index to `angle`.
pub fn nearest_symbol(angle: f64, bits_per_symbol: u32) -> u32 {
    let order = 1u32 << bits_per_symbol;
    let x = (angle / std::f64::consts::TAU * f64::from(order)).round();
    x.rem_euclid(f64::from(order)) as u32
}

/// MSB-first bits of each symbol.
pub fn symbols_to_bits(symbols: &[u32], bits_per_symbol: u32) -> Vec<bool> {
    symbols
        .iter()
        .flat_map(|&s| (0..bits_per_symbol).rev().map(move |i| (s >> i) & 1 == 1))
        .collect()
}

/// Coherent PSK decisions for one hop.
///
/// `k_hat[m]` is antenna `m`'s sub-band and `gains[n][m]` the channel from
/// transmit antenna `m` to receive antenna `n`. Receive antennas are merged
/// by maximum-ratio combining `sum_n Y_nm conj(g_nm)`; with one antenna this
/// is the phase of `Y_m / g_m`.
pub fn psk_demodulate<T: Real>(
    spectrum: &HopSpectrum<T>,
    k_hat: &[usize],
    gains: &[Vec<Complex<T>>],
    bits_per_symbol: u32,
    params: &RadarParams,
) -> Result<Vec<u32>> {
    constellation_order(bits_per_symbol)?;
    if gains.len() != spectrum.rx_antennas() || gains.iter().any(|g| g.len() != k_hat.len()) {
        return Err(Error::Dimension("channel gains do not match the spectrum".into()));
    }
    let mut acc = vec![Complex::new(T::zero(), T::zero()); k_hat.len()];
    for (n, g) in gains.iter().enumerate() {
        for (m, y) in spectrum.tones(n, k_hat, params).into_iter().enumerate() {
            acc[m] = acc[m] + y * g[m].conj();
        }
    }
    for m in 0..k_hat.len() {
        if gains.iter().all(|g| g[m].norm_sqr() == T::zero()) {
            return Err(Error::ZeroChannel);
        }
    }
    Ok(acc.iter().map(|z| nearest_symbol(z.arg().as_f64(), bits_per_symbol)).collect())
}

/// Differential decisions between hops `h-1` and `h`; no channel knowledge.
pub fn dpsk_demodulate<T: Real>(
    previous: &HopSpectrum<T>,
    current: &HopSpectrum<T>,
    k_prev: &[usize],
    k_cur: &[usize],
    bits_per_symbol: u32,
    params: &RadarParams,
) -> Result<Vec<u32>> {
    constellation_order(bits_per_symbol)?;
    if k_prev.len() != k_cur.len() || previous.rx_antennas() != current.rx_antennas() {
        return Err(Error::Dimension("hop spectra do not match".into()));
    }
    let mut acc = vec![Complex::new(T::zero(), T::zero()); k_cur.len()];
    for n in 0..current.rx_antennas() {
        let a = previous.tones(n, k_prev, params);
        let b = current.tones(n, k_cur, params);
        for m in 0..k_cur.len() {
            acc[m] = acc[m] + b[m] * a[m].conj();
        }
    }
    Ok(acc.iter().map(|z| nearest_symbol(z.arg().as_f64(), bits_per_symbol)).collect())
}

/// Where the receiver gets the hopping code from.
#[derive(Debug, Clone, Copy)]
pub enum CodeKnowledge<'a> {
    /// Peak detection on the combined hop spectrum (needs re-ordering).
    Detect,
    /// Genie-aided: the transmitted code.
    Known(&'a HoppingCode),
}

/// Where coherent demodulators get the channel from.
#[derive(Debug, Clone, Copy)]
pub enum ChannelKnowledge<'a, T> {
    /// None supplied; only FHCS and DPSK can run.
    Absent,
    /// Per receive antenna, per transmit antenna gains.
    Known(&'a [Vec<Complex<T>>]),
}

/// Demodulated pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodResult {
    /// Data bits in the modulator's layout.
    pub bits: Vec<bool>,
    /// Sub-bands used per hop, as the receiver saw them.
    pub detected_code: Vec<Vec<usize>>,
    /// Combined spectral power at each detected tone.
    pub peak_power: Vec<Vec<f64>>,
    /// Data hops whose detected combination fell outside the codebook.
    pub codebook_errors: Vec<bool>,
}

impl DemodResult {
    /// Bits of data hop `i` (0-based over data hops).
    pub fn hop_bits(&self, i: usize, per_hop: usize) -> &[bool] {
        &self.bits[i * per_hop..(i + 1) * per_hop]
    }
}

/// Receiver matching a [`Modulator`].
#[derive(Debug, Clone)]
pub struct Demodulator {
    modulator: Modulator,
}

impl Demodulator {
    pub fn new(modulator: Modulator) -> Self {
        Self { modulator }
    }

    pub fn modulator(&self) -> &Modulator {
        &self.modulator
    }

    /// Hopping code as seen by the receiver: detected from `capture` or
    /// taken from the genie.
    pub fn hop_code<T: Real>(spectrum: &HopSpectrum<T>, code: CodeKnowledge<'_>, params: &RadarParams) -> Vec<usize> {
        match code {
            CodeKnowledge::Detect => detect_hopping_freqs(&spectrum.combined_power(), params),
            CodeKnowledge::Known(c) => c.row(spectrum.hop).to_vec(),
        }
    }

    pub fn demodulate<T: Real>(
        &self,
        capture: &RxCapture<T>,
        code: CodeKnowledge<'_>,
        channel: ChannelKnowledge<'_, T>,
    ) -> Result<DemodResult> {
        let dft = HopDft::new(capture.params().samples_per_hop());
        self.demodulate_with(&dft, capture, code, channel)
    }

    /// Same as [`Self::demodulate`] with a caller-owned DFT plan.
    pub fn demodulate_with<T: Real>(
        &self,
        dft: &HopDft<T>,
        capture: &RxCapture<T>,
        code: CodeKnowledge<'_>,
        channel: ChannelKnowledge<'_, T>,
    ) -> Result<DemodResult> {
        let m = &self.modulator;
        let params = m.params();
        let scheme = m.scheme();
        let j = m.bits_per_symbol();
        let gains = match (scheme, channel) {
            (Scheme::Psk | Scheme::FhcsPsk, ChannelKnowledge::Known(g)) => Some(g),
            (Scheme::Psk | Scheme::FhcsPsk, ChannelKnowledge::Absent) => {
                return Err(Error::UnsupportedScheme(format!("{scheme} needs channel knowledge")))
            }
            _ => None,
        };

        let first = m.first_data_hop();
        let mut bits = Vec::with_capacity(m.bits_per_pulse());
        let mut detected_code = Vec::with_capacity(params.hops());
        let mut peak_power = Vec::with_capacity(params.hops());
        let mut codebook_errors = Vec::with_capacity(m.data_hops());
        let mut previous: Option<(HopSpectrum<T>, Vec<usize>)> = None;

        for h in 0..params.hops() {
            let spectrum = dft.spectrum(capture, h);
            let power = spectrum.combined_power();
            let k_hat = Self::hop_code(&spectrum, code, params);
            peak_power.push(k_hat.iter().map(|&k| power[params.bin_of(k)].as_f64()).collect());
            detected_code.push(k_hat.clone());
            if h >= first {
                if scheme.carries_fhcs() {
                    let mut sorted = k_hat.clone();
                    sorted.sort_unstable();
                    match fhcs_decode(&sorted, params) {
                        Ok(b) => {
                            bits.extend(b);
                            codebook_errors.push(false);
                        }
                        Err(Error::OutOfCodebook { .. }) => {
                            bits.extend(std::iter::repeat_n(false, m.fhcs_bits_per_hop()));
                            codebook_errors.push(true);
                        }
                        Err(e) => return Err(e),
                    }
                } else {
                    codebook_errors.push(false);
                }
                match scheme {
                    Scheme::Psk | Scheme::FhcsPsk => {
                        let g = gains.expect("checked above");
                        let sym = psk_demodulate(&spectrum, &k_hat, g, j, params)?;
                        bits.extend(symbols_to_bits(&sym, j));
                    }
                    Scheme::Dpsk => {
                        let (prev, k_prev) = previous.as_ref().expect("DPSK reference hop precedes data");
                        let sym = dpsk_demodulate(prev, &spectrum, k_prev, &k_hat, j, params)?;
                        bits.extend(symbols_to_bits(&sym, j));
                    }
                    Scheme::Unmodulated | Scheme::Fhcs => {}
                }
            }
            if scheme == Scheme::Dpsk {
                previous = Some((spectrum, k_hat));
            }
        }
        Ok(DemodResult { bits, detected_code, peak_power, codebook_errors })
    }

    /// Pilot-based channel estimate on every receive antenna, using the
    /// detected (or known) hop-0 frequencies.
    pub fn estimate_channel<T: Real>(
        &self,
        capture: &RxCapture<T>,
        code: CodeKnowledge<'_>,
        cfg: &QseConfig,
    ) -> Vec<ChannelEstimate<T>> {
        let params = self.modulator.params();
        let spectrum = hop_dft(capture, 0);
        let k_hat = Self::hop_code(&spectrum, code, params);
        (0..capture.rx_antennas())
            .map(|n| chanest::estimate(&spectrum.bins[n], &k_hat, params, cfg))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{propagate, ChannelRealization, PropagationConfig};
    use crate::rng::seeded;
    use crate::waveform::{draw_hopping_code, synthesize_pulse, synthesize_tx, PhaseMatrix};
    use rand::Rng;

    fn fig5() -> RadarParams {
        RadarParams::new(10, 20, 10, 1e8, 2e-7, 5e-9, 1e4).unwrap()
    }

    #[test]
    fn single_tone_spectrum() {
        let p = fig5();
        let code = draw_hopping_code(&p, 1);
        let tx = synthesize_tx::<f64>(&p, &code, &PhaseMatrix::zeros(10, 10, 1)).unwrap();
        let y = HopDft::new(40).transform(tx.hop(0, 2));
        let target = p.bin_of(code.get(2, 0));
        for (l, v) in y.iter().enumerate() {
            if l == target {
                assert!((v.norm() - 40.0).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn parseval() {
        let mut rng = seeded(3);
        let x: Vec<Complex<f64>> = (0..40).map(|_| Complex::new(rng.random(), rng.random())).collect();
        let y = HopDft::new(40).transform(&x);
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let ey: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert!((ey - 40.0 * ex).abs() < 1e-9 * ey);
    }

    #[test]
    fn combine_doubles_identical_rows() {
        let row = vec![Complex::new(1.0, 2.0), Complex::new(0.0, -3.0)];
        let c = combine_incoherent(&[row.clone(), row]).unwrap();
        assert_eq!(c, vec![10.0, 18.0]);
        assert!(combine_incoherent::<f64>(&[vec![Complex::default()], vec![]]).is_err());
        assert!(combine_incoherent::<f64>(&[]).is_err());
    }

    #[test]
    fn detection_is_sorted_and_exact_when_noiseless() {
        let p = fig5();
        let code = draw_hopping_code(&p, 7).reorder_ascending();
        let tx = synthesize_tx::<f64>(&p, &code, &PhaseMatrix::zeros(10, 10, 1)).unwrap();
        let ch = ChannelRealization::single_path(Complex::from_polar(1.0, 1.0), 0.4);
        let rx = propagate(&tx, &ch, &PropagationConfig::default(), &mut seeded(0)).unwrap();
        for h in 0..10 {
            let s = hop_dft(&rx, h);
            assert_eq!(detect_hopping_freqs(&s.combined_power(), &p), code.row(h));
        }
    }

    #[test]
    fn symbol_rounding() {
        use std::f64::consts::PI;
        assert_eq!(nearest_symbol(0.1, 1), 0);
        assert_eq!(nearest_symbol(PI - 0.1, 1), 1);
        assert_eq!(nearest_symbol(-PI / 2.0 + 0.01, 1), 0);
        assert_eq!(nearest_symbol(-0.1, 2), 0);
        assert_eq!(nearest_symbol(-PI / 2.0, 2), 3);
        assert_eq!(symbols_to_bits(&[3, 1], 2), vec![true, true, false, true]);
    }

    #[test]
    fn psk_rejects_zero_channel() {
        let p = fig5();
        let s = HopSpectrum { hop: 0, bins: vec![vec![Complex::new(1.0, 0.0); 40]] };
        let zero = vec![vec![Complex::new(0.0, 0.0); 2]];
        assert_eq!(psk_demodulate(&s, &[0, 1], &zero, 1, &p), Err(Error::ZeroChannel));
    }

    #[test]
    fn noiseless_roundtrip_every_scheme() {
        let p = fig5();
        for scheme in [Scheme::Psk, Scheme::Dpsk, Scheme::Fhcs, Scheme::FhcsPsk] {
            for j in [1u32, 2] {
                let m = Modulator::new(p, scheme, j).unwrap();
                let d = Demodulator::new(m.clone());
                let mut rng = seeded(u64::from(j) * 31);
                for _ in 0..20 {
                    let bits: Vec<bool> = (0..m.bits_per_pulse()).map(|_| rng.random()).collect();
                    let pulse = m.modulate(&bits, &mut rng).unwrap();
                    let tx = synthesize_pulse::<f64>(&p, &pulse).unwrap();
                    let ch = ChannelRealization::single_path(Complex::from_polar(0.8, rng.random::<f64>() * 6.0), 1.3);
                    let rx = propagate(&tx, &ch, &PropagationConfig::default(), &mut rng).unwrap();
                    let gains = ch.array_response(10, &PropagationConfig::default().rx);
                    let out = d.demodulate(&rx, CodeKnowledge::Detect, ChannelKnowledge::Known(&gains)).unwrap();
                    assert_eq!(out.bits, bits, "{scheme} J={j}");
                    assert!(out.codebook_errors.iter().all(|e| !e));
                }
            }
        }
    }

    #[test]
    fn fhcs_runs_without_channel() {
        let p = fig5();
        let m = Modulator::new(p, Scheme::Fhcs, 1).unwrap();
        let mut rng = seeded(2);
        let bits: Vec<bool> = (0..m.bits_per_pulse()).map(|_| rng.random()).collect();
        let tx = synthesize_pulse::<f64>(&p, &m.modulate(&bits, &mut rng).unwrap()).unwrap();
        let ch = ChannelRealization::single_path(Complex::new(0.0, 1.0), 2.0);
        let rx = propagate(&tx, &ch, &PropagationConfig::default(), &mut rng).unwrap();
        let out = Demodulator::new(m).demodulate(&rx, CodeKnowledge::Detect, ChannelKnowledge::Absent).unwrap();
        assert_eq!(out.bits, bits);
        let psk = Modulator::new(p, Scheme::Psk, 1).unwrap();
        assert!(Demodulator::new(psk).demodulate(&rx, CodeKnowledge::Detect, ChannelKnowledge::Absent).is_err());
    }
}
