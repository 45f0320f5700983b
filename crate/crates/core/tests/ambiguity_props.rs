use fhmimo::ambiguity::{compare_profiles, range_ambiguity, spike_lags, COMPARE_FLOOR_DB};
use fhmimo::rng::seeded;
use fhmimo::waveform::{synthesize_pulse, synthesize_tx, HoppingCode, Modulator, PhaseMatrix, Scheme};
use fhmimo::RadarParams;
use proptest::prelude::*;
use rand::Rng;

fn fig3() -> RadarParams {
    RadarParams::new(10, 20, 10, 1e8, 2e-7, 1e-9, 1e5).unwrap()
}

fn unmodulated(p: &RadarParams, code: &HoppingCode) -> fhmimo::AmbiguityProfile {
    range_ambiguity(&synthesize_tx::<f64>(p, code, &PhaseMatrix::zeros(p.hops(), p.antennas(), 1)).unwrap())
}

fn random_bits<R: Rng>(n: usize, rng: &mut R) -> Vec<bool> {
    (0..n).map(|_| rng.random()).collect()
}

#[test]
fn unmodulated_spikes_sit_at_hop_multiples() {
    let p = fig3();
    let l = p.samples_per_hop() as i64;
    let mut rng = seeded(1);
    for _ in 0..10 {
        let prof = unmodulated(&p, &HoppingCode::draw(&p, &mut rng));
        for lag in spike_lags(&prof, l as usize, 3) {
            let q = (lag as f64 / l as f64).round() as i64;
            assert!(q >= 1 && (lag - q * l).abs() <= 1, "spike at {lag}");
        }
        assert_eq!(prof.at(0), 1.0);
        assert!(prof.magnitude().iter().all(|&v| v <= 1.0 + 1e-12));
    }
}

#[test]
fn bpsk_lowers_unmodulated_spikes() {
    let p = fig3();
    let l = p.samples_per_hop();
    let modem = Modulator::new(p, Scheme::Psk, 1).unwrap().with_pilot(false);
    let mut rng = seeded(3);
    let draws = 100;
    let mut lowered = 0;
    for _ in 0..draws {
        let bits = random_bits(modem.bits_per_pulse(), &mut rng);
        let pulse = modem.modulate(&bits, &mut rng).unwrap();
        let plain = unmodulated(&p, &pulse.code);
        let bpsk = range_ambiguity(&synthesize_pulse::<f64>(&p, &pulse).unwrap());
        if spike_lags(&plain, l, 3).iter().all(|&lag| bpsk.at(lag) < plain.at(lag)) {
            lowered += 1;
        }
    }
    assert!(lowered * 100 >= 95 * draws, "{lowered} of {draws}");
}

#[test]
fn fhcs_keeps_more_spike_energy_than_bpsk() {
    let p = fig3();
    let l = p.samples_per_hop();
    let mut rng = seeded(8);
    let level = |scheme: Scheme, rng: &mut fhmimo::rng::SimRng| {
        let modem = Modulator::new(p, scheme, 1).unwrap().with_pilot(false);
        let mut acc = 0.0;
        for _ in 0..40 {
            let bits = random_bits(modem.bits_per_pulse(), rng);
            let pulse = modem.modulate(&bits, rng).unwrap();
            let prof = range_ambiguity(&synthesize_pulse::<f64>(&p, &pulse).unwrap());
            let lags: Vec<i64> = (1..p.hops() as i64).map(|q| q * l as i64).collect();
            acc += lags.iter().map(|&g| prof.at(g)).sum::<f64>() / lags.len() as f64;
        }
        acc / 40.0
    };
    let fhcs = level(Scheme::Fhcs, &mut rng);
    let bpsk = level(Scheme::Psk, &mut rng);
    assert!(fhcs > bpsk, "fhcs {fhcs} bpsk {bpsk}");
}

#[test]
fn independent_codes_give_different_profiles() {
    let p = fig3();
    let a = unmodulated(&p, &HoppingCode::draw(&p, &mut seeded(1)));
    let b = unmodulated(&p, &HoppingCode::draw(&p, &mut seeded(2)));
    assert!(compare_profiles(&a, &b, COMPARE_FLOOR_DB).unwrap() > 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reordering_leaves_profile_unchanged(seed in any::<u64>()) {
        let p = fig3();
        let code = HoppingCode::draw(&p, &mut seeded(seed));
        let diff = compare_profiles(&unmodulated(&p, &code), &unmodulated(&p, &code.reorder_ascending()), COMPARE_FLOOR_DB)
            .unwrap();
        prop_assert!(diff < 1e-9, "{}", diff);
    }
}
