use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// One epoch of mini-batches: a seeded permutation of `0..n` cut into
/// `ceil(n / batch_size)` consecutive chunks. The last chunk may be short.
pub type BatchSchedule = Vec<Vec<usize>>;

pub fn get_batches(n: usize, batch_size: usize, epoch_seed: u64) -> Result<BatchSchedule> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha20Rng::seed_from_u64(epoch_seed));
    Ok(perm.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// Derives an independent seed for `(stream, index)` from a base seed (splitmix64).
pub fn sub_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
