//! Zero-Doppler range ambiguity function of a transmitted pulse.
//!
//! The profile is `|r(tau)| / r(0)` where `r` is the autocorrelation of the
//! array output `sum_m s_m(i)` over the whole pulse. Summing antennas before
//! correlating keeps the cross-antenna terms, which makes the profile depend
//! only on each hop's set of frequencies and phases, not on which antenna
//! transmits which tone.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::waveform::TxBaseband;

/// Floor applied when converting exact zeros to dB.
pub const DB_FLOOR: f64 = -300.0;

/// Normalized range profile on lags `-(N-1)..=N-1`, `N = H L`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityProfile {
    max_lag: usize,
    magnitude: Vec<f64>,
}

impl AmbiguityProfile {
    pub fn from_magnitude(magnitude: Vec<f64>) -> Result<Self> {
        if magnitude.len().is_multiple_of(2) {
            return Err(Error::Dimension("profile needs an odd number of lags".into()));
        }
        Ok(Self { max_lag: magnitude.len() / 2, magnitude })
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> + '_ {
        let m = self.max_lag as i64;
        -m..=m
    }

    /// Linear magnitude, 1 at lag 0.
    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn at(&self, lag: i64) -> f64 {
        self.magnitude[(lag + self.max_lag as i64) as usize]
    }

    pub fn db_at(&self, lag: i64) -> f64 {
        to_db(self.at(lag))
    }

    pub fn magnitude_db(&self) -> Vec<f64> {
        self.magnitude.iter().map(|&v| to_db(v)).collect()
    }

    /// Element-wise mean of linear magnitudes.
    pub fn average(profiles: &[AmbiguityProfile]) -> Result<Self> {
        let first = profiles.first().ok_or_else(|| Error::Dimension("nothing to average".into()))?;
        let mut acc = vec![0.0; first.magnitude.len()];
        for p in profiles {
            if p.max_lag != first.max_lag {
                return Err(Error::GridMismatch);
            }
            for (a, v) in acc.iter_mut().zip(&p.magnitude) {
                *a += v;
            }
        }
        let n = profiles.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(Self { max_lag: first.max_lag, magnitude: acc })
    }
}

fn to_db(v: f64) -> f64 {
    if v > 0.0 {
        (20.0 * v.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Range ambiguity profile of a full pulse.
pub fn range_ambiguity<T: Real>(tx: &TxBaseband<T>) -> AmbiguityProfile {
    let x = tx.coherent_sum();
    let n = x.len();
    let size = (2 * n - 1).next_power_of_two();
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); size];
    buf[..n].copy_from_slice(&x);
    fwd.process(&mut buf);
    for v in &mut buf {
        *v = Complex::new(v.norm_sqr(), T::zero());
    }
    inv.process(&mut buf);
    // buf[k] = size * sum_i x(i + k) conj(x(i)); negative lags wrap to the end.
    let peak = buf[0].norm().as_f64();
    let mut magnitude = Vec::with_capacity(2 * n - 1);
    for lag in -(n as i64 - 1)..=(n as i64 - 1) {
        let idx = lag.rem_euclid(size as i64) as usize;
        magnitude.push(buf[idx].norm().as_f64() / peak);
    }
    AmbiguityProfile { max_lag: n - 1, magnitude }
}

/// Default floor for [`compare_profiles`].
pub const COMPARE_FLOOR_DB: f64 = -60.0;

/// Largest dB difference over lags where either profile exceeds `floor_db`.
pub fn compare_profiles(a: &AmbiguityProfile, b: &AmbiguityProfile, floor_db: f64) -> Result<f64> {
    if a.max_lag != b.max_lag {
        return Err(Error::GridMismatch);
    }
    let mut worst: f64 = 0.0;
    for (&x, &y) in a.magnitude.iter().zip(&b.magnitude) {
        let (dx, dy) = (to_db(x), to_db(y));
        if dx.max(dy) > floor_db {
            worst = worst.max((dx - dy).abs());
        }
    }
    Ok(worst)
}

/// Positive lags of the `count` strongest periodic sidelobe spikes.
///
/// Around each multiple `q L` (`q >= 1`) the strongest lag within `L/4`
/// is taken as that period's spike; the `count` largest spikes are returned
/// in descending order of magnitude.
pub fn spike_lags(profile: &AmbiguityProfile, hop_len: usize, count: usize) -> Vec<i64> {
    let half = (hop_len / 4).max(1) as i64;
    let max = profile.max_lag as i64;
    let mut spikes: Vec<(i64, f64)> = Vec::new();
    let mut q = 1i64;
    while q * hop_len as i64 - half <= max {
        let centre = q * hop_len as i64;
        let best = (centre - half..=(centre + half).min(max))
            .map(|lag| (lag, profile.at(lag)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("window is non-empty");
        spikes.push(best);
        q += 1;
    }
    spikes.sort_by(|a, b| b.1.total_cmp(&a.1));
    spikes.into_iter().take(count).map(|(lag, _)| lag).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::RadarParams;
    use crate::waveform::{draw_hopping_code, synthesize_tx, PhaseMatrix};

    fn fig3() -> RadarParams {
        RadarParams::new(10, 20, 10, 1e8, 2e-7, 1e-9, 1e5).unwrap()
    }

    fn direct(x: &[Complex<f64>], lag: i64) -> Complex<f64> {
        let n = x.len() as i64;
        (0..n)
            .filter(|i| (0..n).contains(&(i + lag)))
            .map(|i| x[(i + lag) as usize] * x[i as usize].conj())
            .sum()
    }

    #[test]
    fn matches_direct_correlation() {
        let p = RadarParams::new(3, 6, 4, 6.0, 1.0, 1.0 / 12.0, 1.0).unwrap();
        let tx = synthesize_tx::<f64>(&p, &draw_hopping_code(&p, 3), &PhaseMatrix::zeros(4, 3, 1)).unwrap();
        let prof = range_ambiguity(&tx);
        let x = tx.coherent_sum();
        let r0 = direct(&x, 0).norm();
        for lag in prof.lags() {
            assert!((prof.at(lag) - direct(&x, lag).norm() / r0).abs() < 1e-12, "lag {lag}");
        }
    }

    #[test]
    fn peak_and_symmetry() {
        let p = fig3();
        let tx = synthesize_tx::<f64>(&p, &draw_hopping_code(&p, 1), &PhaseMatrix::zeros(10, 10, 1)).unwrap();
        let prof = range_ambiguity(&tx);
        assert_eq!(prof.max_lag(), 1999);
        assert!(prof.db_at(0).abs() < 1e-12);
        for lag in [1, 150, 200, 1999] {
            assert!((prof.at(lag) - prof.at(-lag)).abs() < 1e-12);
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let p = fig3();
        let tx = synthesize_tx::<f64>(&p, &draw_hopping_code(&p, 2), &PhaseMatrix::zeros(10, 10, 1)).unwrap();
        let prof = range_ambiguity(&tx);
        assert_eq!(compare_profiles(&prof, &prof, COMPARE_FLOOR_DB).unwrap(), 0.0);
    }

    #[test]
    fn grid_mismatch() {
        let a = AmbiguityProfile::from_magnitude(vec![0.5, 1.0, 0.5]).unwrap();
        let b = AmbiguityProfile::from_magnitude(vec![0.1, 0.5, 1.0, 0.5, 0.1]).unwrap();
        assert_eq!(compare_profiles(&a, &b, -60.0), Err(Error::GridMismatch));
    }

    #[test]
    fn floor_excludes_deep_nulls() {
        let a = AmbiguityProfile::from_magnitude(vec![1e-5, 1.0, 1e-5]).unwrap();
        let b = AmbiguityProfile::from_magnitude(vec![1e-7, 1.0, 1e-7]).unwrap();
        assert_eq!(compare_profiles(&a, &b, -60.0).unwrap(), 0.0);
        assert!((compare_profiles(&a, &b, -120.0).unwrap() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn spikes_sit_near_hop_multiples() {
        let p = fig3();
        let tx = synthesize_tx::<f64>(&p, &draw_hopping_code(&p, 5), &PhaseMatrix::zeros(10, 10, 1)).unwrap();
        let prof = range_ambiguity(&tx);
        let lags = spike_lags(&prof, 200, 3);
        assert_eq!(lags.len(), 3);
        for lag in lags {
            let r = lag.rem_euclid(200);
            assert!(r <= 50 || r >= 150, "{lag}");
        }
    }
}
