//! Seeded, checkpointable random number generation.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The generator used everywhere a seed is accepted.
pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for work item `stream` under a run seed.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}

/// Serialized generator position: 32-byte key, stream id and word position.
pub const STATE_LEN: usize = 32 + 8 + 16;

pub fn save_state(rng: &Rng) -> [u8; STATE_LEN] {
    let mut out = [0u8; STATE_LEN];
    out[..32].copy_from_slice(&rng.get_seed());
    out[32..40].copy_from_slice(&rng.get_stream().to_le_bytes());
    out[40..].copy_from_slice(&rng.get_word_pos().to_le_bytes());
    out
}

pub fn restore_state(bytes: &[u8]) -> Result<Rng> {
    if bytes.len() != STATE_LEN {
        return Err(Error::Validation(alloc::format!(
            "rng state must be {STATE_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&bytes[..32]);
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(u64::from_le_bytes(bytes[32..40].try_into().unwrap()));
    rng.set_word_pos(u128::from_le_bytes(bytes[40..].try_into().unwrap()));
    Ok(rng)
}
