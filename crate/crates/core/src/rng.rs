//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator. A `(master, index, purpose)` triple is
//! turned into a 256-bit key by running SplitMix64 from
//! `master ^ splitmix64(index)` and taking four successive outputs as
//! little-endian words; the purpose selects the ChaCha stream id. The
//! mapping is pure integer arithmetic, so the same triple yields the same
//! bytes on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent uses of randomness within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Data = 1,
    Shuffle = 2,
    Sketch = 3,
    Init = 4,
    Split = 5,
    Check = 6,
}

#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream(master: u64, index: u64, purpose: Purpose) -> Rng {
    let mut idx = index;
    let mut state = master ^ splitmix64(&mut idx);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Stream for a bare seed, used where no run index applies.
pub fn seeded(seed: u64) -> Rng {
    substream(seed, 0, Purpose::Check)
}
