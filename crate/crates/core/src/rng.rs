//! Counter-based seed derivation for reproducible parallel Monte Carlo.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a domain tag (experiment, grid point, ...).
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    splitmix64(seed ^ splitmix64(domain.wrapping_add(0x51_7CC1_B727_220A)))
}

/// Generator for one trial. Distinct `(seed, domain, trial)` triples map to
/// independent ChaCha streams, so trials can run in any order or thread.
pub fn trial_rng(seed: u64, domain: u64, trial: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain));
    rng.set_stream(trial);
    rng
}

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
