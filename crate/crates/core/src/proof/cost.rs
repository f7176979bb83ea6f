use crate::error::{Error, Result};

/// Bytes of checkpoint payload: `ceil(E*S/k)` stored states of `weight_bytes` each.
pub fn proof_size_bytes(
    epochs: usize,
    steps_per_epoch: usize,
    k: usize,
    weight_bytes: usize,
) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let stored = (epochs * steps_per_epoch).div_ceil(k);
    Ok(stored as u64 * weight_bytes as u64)
}

/// Expected number of distinct training points the verifier touches when it
/// checks `q` segments of `k` steps per epoch, for `epochs` epochs.
///
/// Each epoch covers a fraction `q*k/S` of the data, independently across
/// epochs, so a given point is missed with probability `(1 - qk/S)^E`.
pub fn expected_transfer(
    dataset_size: usize,
    q: usize,
    k: usize,
    steps_per_epoch: usize,
    epochs: usize,
) -> Result<f64> {
    if steps_per_epoch == 0 {
        return Err(Error::InvalidConfig("steps per epoch must be >= 1".into()));
    }
    if q * k > steps_per_epoch {
        return Err(Error::InvalidConfig(format!(
            "Q*k = {} exceeds steps per epoch {steps_per_epoch}",
            q * k
        )));
    }
    let frac = (q * k) as f64 / steps_per_epoch as f64;
    let miss = (1.0 - frac).powi(epochs as i32);
    Ok(dataset_size as f64 * (1.0 - miss))
}
