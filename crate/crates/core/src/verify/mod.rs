//! Proof verification: initialization tests, selective re-execution of the
//! largest updates, delta calibration, acceptance-rate estimation and costs.

mod calibrate;
mod cost;
mod engine;
mod ks;
mod ledger;
mod metric;
mod replay;
mod repro;
mod vsr;

pub use calibrate::{
    calibrate_delta, delta_floor, DeltaCalibration, DEFAULT_PROBES, DEFAULT_SAFETY_FACTOR,
};
pub use cost::{cost_ratio, verification_cost, VerificationCost};
pub use engine::{
    top_q_by_epoch, verify, verify_proof, Delta, FailReason, SealKeys, SegmentCheck,
    VerificationConfig, VerificationResult, VerifyContext,
};
pub use ks::{
    kolmogorov_sf, ks_layer_test, ks_statistic, ks_test, verify_initialization, InitCheck, KsResult,
};
pub use ledger::{weights_digest, LedgerEntry, LedgerError, ProofLedger};
pub use metric::Metric;
pub use replay::{
    first_hash_mismatch, replay_segment, segment_distance, segments, update_magnitude, Segment,
};
pub use repro::{epsilon_repr, reference_distance, reproduction_errors};
pub use vsr::{vsr_chain_estimate, vsr_estimate, ChainVsr, ProverSetup, VsrEstimate};
