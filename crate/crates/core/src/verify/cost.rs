use crate::error::{Error, Result};
use crate::proof::expected_transfer;

/// Work the verifier does relative to training, assuming every epoch has
/// at least `q` full segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationCost {
    /// `E * Q * k`
    pub recomputed_steps: usize,
    /// `E * S`
    pub training_steps: usize,
    /// `Q * k / S`
    pub ratio: f64,
    /// Expected distinct training rows the verifier needs.
    pub expected_transfer: f64,
}

pub fn cost_ratio(q: usize, k: usize, steps_per_epoch: usize) -> f64 {
    (q * k) as f64 / steps_per_epoch as f64
}

pub fn verification_cost(
    epochs: usize,
    steps_per_epoch: usize,
    k: usize,
    q: usize,
    dataset_size: usize,
) -> Result<VerificationCost> {
    if k == 0 || q == 0 || steps_per_epoch == 0 {
        return Err(Error::InvalidConfig("k, Q and S must be >= 1".into()));
    }
    if q * k > steps_per_epoch {
        return Err(Error::InvalidConfig(format!(
            "Q*k = {} exceeds steps per epoch {steps_per_epoch}",
            q * k
        )));
    }
    Ok(VerificationCost {
        recomputed_steps: epochs * q * k,
        training_steps: epochs * steps_per_epoch,
        ratio: cost_ratio(q, k, steps_per_epoch),
        expected_transfer: expected_transfer(dataset_size, q, k, steps_per_epoch, epochs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        let c = verification_cost(3, 10, 2, 2, 100).unwrap();
        assert_eq!(c.recomputed_steps, 12);
        assert_eq!(c.training_steps, 30);
        assert!((c.ratio - 0.4).abs() < 1e-15);
        assert_eq!(verification_cost(5, 10, 5, 2, 100).unwrap().ratio, 1.0);
        assert!((cost_ratio(1, 1, 390) - 0.002_564_102_564_102_564).abs() < 1e-15);
        assert!(verification_cost(1, 10, 6, 2, 100).is_err());
    }
}
