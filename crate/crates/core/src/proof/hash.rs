use sha2::{Digest, Sha256};

use super::BatchDigest;
use crate::error::Result;
use crate::sgd::Dataset;

/// Digest binding a minibatch to its content: the canonical bytes of each
/// row in index order, followed by the index list as u64 LE.
pub fn hash_batch(dataset: &Dataset, indices: &[usize]) -> Result<BatchDigest> {
    dataset.check_indices(indices)?;
    let mut h = Sha256::new();
    let mut buf = Vec::with_capacity(8 * (dataset.dim() + 1));
    for &i in indices {
        buf.clear();
        dataset.write_row_bytes(i, &mut buf);
        h.update(&buf);
    }
    for &i in indices {
        h.update((i as u64).to_le_bytes());
    }
    Ok(BatchDigest(h.finalize().into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgd::{Dataset, Labels};

    fn tiny() -> Dataset {
        Dataset::new(
            vec![1.0, 2.0, 3.0, 4.0],
            2,
            Labels::Classes {
                ids: vec![0, 1],
                num_classes: 2,
            },
        )
        .unwrap()
    }

    #[test]
    fn matches_hand_built_preimage() {
        let ds = tiny();
        let mut pre = Vec::new();
        for v in [3.0f64, 4.0] {
            pre.extend_from_slice(&v.to_le_bytes());
        }
        pre.extend_from_slice(&1u64.to_le_bytes());
        pre.extend_from_slice(&1u64.to_le_bytes());
        let expected: [u8; 32] = Sha256::digest(&pre).into();
        assert_eq!(hash_batch(&ds, &[1]).unwrap().0, expected);
    }

    #[test]
    fn order_and_content_sensitive() {
        let ds = tiny();
        let a = hash_batch(&ds, &[0, 1]).unwrap();
        assert_ne!(a, hash_batch(&ds, &[1, 0]).unwrap());
        let mut rows = ds.inputs().to_vec();
        rows[0] += 1e-12;
        let ds2 = Dataset::new(rows, 2, ds.labels().clone()).unwrap();
        assert_ne!(a, hash_batch(&ds2, &[0, 1]).unwrap());
        assert!(hash_batch(&ds, &[2]).is_err());
    }
}
