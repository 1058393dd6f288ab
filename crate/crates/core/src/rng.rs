//! Counter-addressed random streams.
//!
//! Every `(seed, trial, role)` triple maps to its own ChaCha8 stream, so a
//! trial's draws do not depend on which thread ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Message = 0,
    Codebook = 1,
    Noise = 2,
    /// Competing-codeword draws that are not part of the codebook stream.
    Competitor = 3,
}

const ROLES: u64 = 4;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `role` in trial `trial` under master `seed`.
pub fn stream(seed: u64, trial: u64, role: Role) -> ChaCha8Rng {
    let mut s = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial.wrapping_mul(ROLES).wrapping_add(role as u64));
    rng
}
