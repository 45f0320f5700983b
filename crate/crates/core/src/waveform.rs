//! Transmit side: hopping codes, information embedding and baseband synthesis.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::fhcs;
use crate::params::RadarParams;
use crate::rng;
use crate::scalar::Real;

/// `H x M` matrix of sub-band indices; row `h` lists the sub-band used by
/// each antenna during hop `h`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HoppingCode {
    rows: Vec<Vec<usize>>,
    subbands: usize,
}

impl HoppingCode {
    /// Builds a code, checking range and per-hop distinctness.
    pub fn from_rows(rows: Vec<Vec<usize>>, subbands: usize) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        for (h, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Dimension(format!("hop {h} has {} entries, expected {width}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&k| k >= subbands) {
                return Err(Error::InvalidCombination(format!("hop {h} uses sub-band {bad} >= K={subbands}")));
            }
            let mut seen = row.clone();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidCombination(format!("hop {h} reuses a sub-band: {row:?}")));
            }
        }
        Ok(Self { rows, subbands })
    }

    /// Uniformly random code: every hop draws an `M`-subset of the `K`
    /// sub-bands and hands them to antennas in draw order.
    pub fn draw<R: Rng + ?Sized>(params: &RadarParams, rng: &mut R) -> Self {
        let rows = draw_subsets(params.subbands(), params.antennas(), params.hops(), rng);
        Self { rows, subbands: params.subbands() }
    }

    pub fn hops(&self) -> usize {
        self.rows.len()
    }

    pub fn antennas(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn subbands(&self) -> usize {
        self.subbands
    }

    pub fn row(&self, hop: usize) -> &[usize] {
        &self.rows[hop]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn get(&self, hop: usize, antenna: usize) -> usize {
        self.rows[hop][antenna]
    }

    pub(crate) fn set_row(&mut self, hop: usize, row: Vec<usize>) {
        self.rows[hop] = row;
    }

    /// Sorts each hop ascending so antenna `m` always holds the `m`-th
    /// lowest sub-band. The per-hop frequency sets are unchanged.
    pub fn reorder_ascending(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.sort_unstable();
                r
            })
            .collect();
        Self { rows, subbands: self.subbands }
    }

    pub fn is_ascending(&self) -> bool {
        self.rows.iter().all(|r| r.windows(2).all(|w| w[0] < w[1]))
    }
}

/// `hops` independent uniform `m`-subsets of `0..k`, each in draw order.
/// Allows `m == k`, in which case every row is a permutation.
pub fn draw_subsets<R: Rng + ?Sized>(k: usize, m: usize, hops: usize, rng: &mut R) -> Vec<Vec<usize>> {
    assert!(m <= k, "cannot draw {m} distinct values out of {k}");
    (0..hops).map(|_| index::sample(rng, k, m).into_vec()).collect()
}

/// Seeded form of [`HoppingCode::draw`].
pub fn draw_hopping_code(params: &RadarParams, seed: u64) -> HoppingCode {
    HoppingCode::draw(params, &mut rng::seeded(seed))
}

/// Information embedding strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Plain radar waveform, no data.
    Unmodulated,
    /// Phase-shift keying on every antenna and data hop.
    Psk,
    /// Differential PSK across hops on each antenna.
    Dpsk,
    /// Data carried by the choice of sub-band combination.
    Fhcs,
    /// FHCS combination plus PSK phases in the same hop.
    FhcsPsk,
}

impl Scheme {
    pub fn carries_phase(self) -> bool {
        matches!(self, Scheme::Psk | Scheme::Dpsk | Scheme::FhcsPsk)
    }

    pub fn carries_fhcs(self) -> bool {
        matches!(self, Scheme::Fhcs | Scheme::FhcsPsk)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Unmodulated => "none",
            Scheme::Psk => "psk",
            Scheme::Dpsk => "dpsk",
            Scheme::Fhcs => "fhcs",
            Scheme::FhcsPsk => "fhcs_psk",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "unmodulated" => Ok(Scheme::Unmodulated),
            "psk" | "bpsk" => Ok(Scheme::Psk),
            "dpsk" => Ok(Scheme::Dpsk),
            "fhcs" => Ok(Scheme::Fhcs),
            "fhcs_psk" | "fhcs+psk" | "fhcs_bpsk" | "fhcs+bpsk" | "combined" => Ok(Scheme::FhcsPsk),
            other => Err(invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// `H x M` matrix of constellation indices into the `2^J`-point PSK
/// alphabet `{0, 2pi/2^J, .., 2pi(2^J-1)/2^J}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseMatrix {
    bits_per_symbol: u32,
    indices: Vec<Vec<u32>>,
}

impl PhaseMatrix {
    pub fn zeros(hops: usize, antennas: usize, bits_per_symbol: u32) -> Self {
        Self { bits_per_symbol, indices: vec![vec![0; antennas]; hops] }
    }

    pub fn from_indices(indices: Vec<Vec<u32>>, bits_per_symbol: u32) -> Result<Self> {
        let order = constellation_order(bits_per_symbol)?;
        if indices.iter().flatten().any(|&s| s >= order) {
            return Err(invalid("phases", format!("index outside the {order}-point constellation")));
        }
        Ok(Self { bits_per_symbol, indices })
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn index(&self, hop: usize, antenna: usize) -> u32 {
        self.indices[hop][antenna]
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    pub fn hops(&self) -> usize {
        self.indices.len()
    }

    /// Phase in radians.
    pub fn radians(&self, hop: usize, antenna: usize) -> f64 {
        symbol_phase(self.indices[hop][antenna], self.bits_per_symbol)
    }
}

pub(crate) fn constellation_order(bits_per_symbol: u32) -> Result<u32> {
    if bits_per_symbol == 0 || bits_per_symbol > 16 {
        return Err(invalid("J", format!("bits per PSK symbol must be in 1..=16, got {bits_per_symbol}")));
    }
    Ok(1u32 << bits_per_symbol)
}

/// Radians of constellation point `index`.
pub fn symbol_phase(index: u32, bits_per_symbol: u32) -> f64 {
    std::f64::consts::TAU * f64::from(index) / f64::from(1u32 << bits_per_symbol)
}

fn symbol_groups(bits: &[bool], bits_per_symbol: u32) -> impl Iterator<Item = u32> + '_ {
    bits.chunks(bits_per_symbol as usize)
        .map(|g| g.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b)))
}

fn data_hop_count(hops: usize, pilot: bool) -> usize {
    if pilot {
        hops.saturating_sub(1)
    } else {
        hops
    }
}

/// PSK phase matrix. With `pilot`, hop 0 is left at phase zero and the bits
/// fill hops `1..H` antenna by antenna, `J` bits (MSB first) per symbol.
pub fn psk_encode(bits: &[bool], bits_per_symbol: u32, hops: usize, antennas: usize, pilot: bool) -> Result<PhaseMatrix> {
    constellation_order(bits_per_symbol)?;
    let first = usize::from(pilot);
    let expected = data_hop_count(hops, pilot) * antennas * bits_per_symbol as usize;
    if bits.len() != expected {
        return Err(Error::BitLength { expected, got: bits.len() });
    }
    let mut phases = PhaseMatrix::zeros(hops, antennas, bits_per_symbol);
    for (i, sym) in symbol_groups(bits, bits_per_symbol).enumerate() {
        phases.indices[first + i / antennas][i % antennas] = sym;
    }
    Ok(phases)
}

/// DPSK phase matrix: hop 0 is the zero-phase reference and each later hop
/// adds the symbol increment to the same antenna's previous phase, mod 2pi.
pub fn dpsk_encode(bits: &[bool], bits_per_symbol: u32, hops: usize, antennas: usize) -> Result<PhaseMatrix> {
    let increments = psk_encode(bits, bits_per_symbol, hops, antennas, true)?;
    let mask = (1u32 << bits_per_symbol) - 1;
    let mut phases = PhaseMatrix::zeros(hops, antennas, bits_per_symbol);
    for h in 1..hops {
        for m in 0..antennas {
            phases.indices[h][m] = (phases.indices[h - 1][m] + increments.indices[h][m]) & mask;
        }
    }
    Ok(phases)
}

/// Phase payload of one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePayload {
    pub scheme: Scheme,
    pub phases: PhaseMatrix,
    pub pilot: bool,
    pub fhcs_bits_per_hop: usize,
}

/// One modulated pulse: the hopping code actually transmitted plus phases.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub code: HoppingCode,
    pub payload: PhasePayload,
}

/// Packs information bits into pulses.
///
/// Hop 0 is the pilot for PSK and FHCS schemes when `pilot` is set: it keeps
/// zero phases and a random (known-structure) combination. DPSK always uses
/// hop 0 as its reference.
#[derive(Debug, Clone)]
pub struct Modulator {
    params: RadarParams,
    scheme: Scheme,
    bits_per_symbol: u32,
    pilot: bool,
    reorder: bool,
    fhcs_bits: usize,
}

impl Modulator {
    pub fn new(params: RadarParams, scheme: Scheme, bits_per_symbol: u32) -> Result<Self> {
        constellation_order(bits_per_symbol)?;
        let fhcs_bits = fhcs::bits_per_hop(params.subbands(), params.antennas())?;
        Ok(Self { params, scheme, bits_per_symbol, pilot: true, reorder: true, fhcs_bits })
    }

    /// Disables the pilot hop (ideal-knowledge experiments).
    pub fn with_pilot(mut self, pilot: bool) -> Self {
        self.pilot = pilot;
        self
    }

    /// Keeps draw-order antenna assignment instead of ascending re-ordering.
    pub fn with_reorder(mut self, reorder: bool) -> Self {
        self.reorder = reorder;
        self
    }

    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn pilot(&self) -> bool {
        self.pilot || self.scheme == Scheme::Dpsk
    }

    pub fn reorder(&self) -> bool {
        self.reorder
    }

    /// First hop that carries data.
    pub fn first_data_hop(&self) -> usize {
        usize::from(self.pilot())
    }

    pub fn data_hops(&self) -> usize {
        self.params.hops() - self.first_data_hop()
    }

    pub fn fhcs_bits_per_hop(&self) -> usize {
        self.fhcs_bits
    }

    pub fn phase_bits_per_hop(&self) -> usize {
        self.params.antennas() * self.bits_per_symbol as usize
    }

    /// Information bits per data hop for this scheme.
    pub fn bits_per_hop(&self) -> usize {
        bits_per_hop(self.scheme, self.params.antennas(), self.bits_per_symbol, self.fhcs_bits)
    }

    pub fn bits_per_pulse(&self) -> usize {
        self.bits_per_hop() * self.data_hops()
    }

    /// Builds a pulse from `bits_per_pulse()` bits. Each data hop's bits are
    /// laid out FHCS first, then PSK symbols for antennas `0..M`.
    pub fn modulate<R: Rng + ?Sized>(&self, bits: &[bool], rng: &mut R) -> Result<Pulse> {
        let expected = self.bits_per_pulse();
        if bits.len() != expected {
            return Err(Error::BitLength { expected, got: bits.len() });
        }
        let hops = self.params.hops();
        let m = self.params.antennas();
        let k = self.params.subbands();
        let mut code = HoppingCode::draw(&self.params, rng);
        let per_hop = self.bits_per_hop();
        let first = self.first_data_hop();
        let fhcs_bits = if self.scheme.carries_fhcs() { self.fhcs_bits } else { 0 };

        let mut phase_bits = Vec::with_capacity(self.data_hops() * self.phase_bits_per_hop());
        for (i, hop_bits) in bits.chunks(per_hop.max(1)).enumerate().take(self.data_hops()) {
            let h = first + i;
            let (fh, ph) = hop_bits.split_at(fhcs_bits.min(hop_bits.len()));
            if self.scheme.carries_fhcs() {
                let mut comb = fhcs::encode(fh, k, m)?;
                if !self.reorder {
                    comb.shuffle(rng);
                }
                code.set_row(h, comb);
            }
            phase_bits.extend_from_slice(ph);
        }
        if self.reorder {
            code = code.reorder_ascending();
        }

        let phases = match self.scheme {
            Scheme::Psk | Scheme::FhcsPsk => {
                psk_encode(&phase_bits, self.bits_per_symbol, hops, m, self.pilot())?
            }
            Scheme::Dpsk => dpsk_encode(&phase_bits, self.bits_per_symbol, hops, m)?,
            Scheme::Unmodulated | Scheme::Fhcs => PhaseMatrix::zeros(hops, m, self.bits_per_symbol),
        };
        Ok(Pulse {
            code,
            payload: PhasePayload {
                scheme: self.scheme,
                phases,
                pilot: self.pilot(),
                fhcs_bits_per_hop: self.fhcs_bits,
            },
        })
    }
}

/// `J~`: information bits per hop.
pub fn bits_per_hop(scheme: Scheme, antennas: usize, bits_per_symbol: u32, fhcs_bits: usize) -> usize {
    let psk = antennas * bits_per_symbol as usize;
    match scheme {
        Scheme::Unmodulated => 0,
        Scheme::Psk | Scheme::Dpsk => psk,
        Scheme::Fhcs => fhcs_bits,
        Scheme::FhcsPsk => psk + fhcs_bits,
    }
}

/// Per-antenna baseband of one pulse, `H*L` samples each.
#[derive(Debug, Clone, PartialEq)]
pub struct TxBaseband<T> {
    samples: Vec<Vec<Complex<T>>>,
    params: RadarParams,
}

impl<T: Real> TxBaseband<T> {
    pub fn params(&self) -> &RadarParams {
        &self.params
    }

    pub fn antenna(&self, m: usize) -> &[Complex<T>] {
        &self.samples[m]
    }

    pub fn antennas(&self) -> &[Vec<Complex<T>>] {
        &self.samples
    }

    /// Samples of antenna `m` during hop `h`.
    pub fn hop(&self, m: usize, h: usize) -> &[Complex<T>] {
        let l = self.params.samples_per_hop();
        &self.samples[m][h * l..(h + 1) * l]
    }

    /// Sum over antennas, i.e. the signal seen along the array broadside.
    pub fn coherent_sum(&self) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.params.pulse_len()];
        for ant in &self.samples {
            for (o, s) in out.iter_mut().zip(ant) {
                *o = *o + *s;
            }
        }
        out
    }
}

/// Unit-modulus table `e^{j 2 pi n / L}`.
pub(crate) fn twiddles<T: Real>(len: usize) -> Vec<Complex<T>> {
    (0..len)
        .map(|n| {
            let a = std::f64::consts::TAU * n as f64 / len as f64;
            Complex::new(T::lit(a.cos()), T::lit(a.sin()))
        })
        .collect()
}

/// Synthesizes every antenna's pulse.
///
/// Antenna `m` in hop `h` transmits `exp(j 2pi k_hm (B/K) i Ts) exp(j phi_hm)`
/// for `i in 0..L`. With `(B/K) Ts = delta / L` the tone sits exactly on DFT
/// bin `k_hm * delta`, so the phase index is evaluated modulo `L` from a table.
pub fn synthesize_tx<T: Real>(params: &RadarParams, code: &HoppingCode, phases: &PhaseMatrix) -> Result<TxBaseband<T>> {
    let (hops, m, l) = (params.hops(), params.antennas(), params.samples_per_hop());
    if code.hops() != hops || code.antennas() != m {
        return Err(Error::Dimension(format!(
            "code is {}x{}, radar expects {hops}x{m}",
            code.hops(),
            code.antennas()
        )));
    }
    if phases.hops() != hops || phases.indices.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension("phase matrix does not match the radar".into()));
    }
    let table = twiddles::<T>(l);
    let mut samples = vec![Vec::with_capacity(hops * l); m];
    for (ant, buf) in samples.iter_mut().enumerate() {
        for h in 0..hops {
            let step = params.bin_of(code.get(h, ant)) % l;
            let ph = phases.radians(h, ant);
            let rot = Complex::new(T::lit(ph.cos()), T::lit(ph.sin()));
            let mut idx = 0usize;
            for _ in 0..l {
                buf.push(table[idx] * rot);
                idx += step;
                if idx >= l {
                    idx -= l;
                }
            }
        }
    }
    Ok(TxBaseband { samples, params: *params })
}

/// Convenience: synthesizes a [`Pulse`].
pub fn synthesize_pulse<T: Real>(params: &RadarParams, pulse: &Pulse) -> Result<TxBaseband<T>> {
    synthesize_tx(params, &pulse.code, &pulse.payload.phases)
}

/// Data rate in bit/s.
pub fn data_rate(params: &RadarParams, scheme: Scheme, bits_per_symbol: u32) -> Result<f64> {
    let fhcs_bits = fhcs::bits_per_hop(params.subbands(), params.antennas())?;
    let per_hop = bits_per_hop(scheme, params.antennas(), bits_per_symbol, fhcs_bits);
    Ok(params.prf() * params.hops() as f64 * per_hop as f64)
}
