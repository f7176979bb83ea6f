mod common;

use common::{prove_with_noise, small_desk};
use pol_core::experiments::{Desk, DeskConfig};
use pol_core::sgd::NoiseModel;
use pol_core::spoof::{
    concat_spoof, directed_regularizer_demo, inverse_gradient_spoof, random_sampling_detection,
    retrain_spoof, ConcatParams, Decoys, InverseParams, Judge, SpoofReport,
};
use pol_core::verify::{calibrate_delta, epsilon_repr, Metric, VerificationConfig};

fn concat_params(desk: &Desk, seed: u64, k: usize) -> ConcatParams {
    let adv = desk.hyper(seed + 1000);
    ConcatParams {
        fresh_steps: (desk.cfg.epochs - 1) * desk.steps_per_epoch(),
        fine_tune_epochs: 1,
        prove: desk.prove_params(&adv, k).unwrap(),
        decoys: None,
    }
}

fn roundtrips(report: &SpoofReport) {
    let csv = report.to_csv().unwrap();
    assert_eq!(&SpoofReport::from_csv(&csv).unwrap(), report);
}

#[test]
fn concat_is_caught_at_the_splice() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    for seed in 0..10 {
        let victim = desk.prove(seed, desk.cfg.k).unwrap();
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref: desk.reference_distance(seed, Metric::L2).unwrap(),
        };
        let adv = desk.hyper(seed + 1000);
        let params = concat_params(&desk, seed, desk.cfg.k);
        let (proof, r) = concat_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &params, &judge).unwrap();
        assert_eq!(r.verdict(), "fail");
        assert_eq!(r.outcomes[0].reason.as_deref(), Some("segment_distance_exceeded"));
        assert!(r.metric("discontinuity").unwrap() > r.metric("max_valid_update").unwrap());
        assert_eq!(r.metric("epoch_argmax_start"), r.metric("jump_segment_start"));
        assert_eq!(proof.meta.epochs, desk.cfg.epochs);
        assert_eq!(proof.final_weights.values().len(), victim.final_weights.len());
        roundtrips(&r);
    }
}

#[test]
fn uniform_segment_sampling_catches_the_splice_about_once_per_epoch_length() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let victim = desk.prove(0, 1).unwrap();
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: 1.0,
    };
    let adv = desk.hyper(1000);
    let params = concat_params(&desk, 0, 1);
    let (proof, r) = concat_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &params, &judge).unwrap();
    let delta = r.metric("delta").unwrap();
    let est = random_sampling_detection(&proof, &desk.dataset, delta, Metric::L2, 4000, 5).unwrap();
    let s = desk.steps_per_epoch() as f64;
    assert!(
        est.ci_low <= 1.0 / s && 1.0 / s <= est.ci_high,
        "rate {} ({}..{}) vs 1/S = {}",
        est.rate,
        est.ci_low,
        est.ci_high,
        1.0 / s
    );
}

#[test]
fn decoy_scenario_reports_rankings() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let victim = desk.prove(0, desk.cfg.k).unwrap();
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: desk.reference_distance(0, Metric::L2).unwrap(),
    };
    let adv = desk.hyper(1000);
    let mut params = concat_params(&desk, 0, desk.cfg.k);
    params.decoys = Some(Decoys {
        per_epoch: 1,
        eta: 5.0,
    });
    let (proof, r) = concat_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &params, &judge).unwrap();
    assert!(proof.step_etas.iter().any(|&e| e == 5.0));
    assert_eq!(r.series("update_magnitude").unwrap().len(), proof.total_steps().div_ceil(desk.cfg.k));
    assert!(r.metric("jump_segment_start").is_some());
    assert_eq!(r.outcomes.len(), 1);
    roundtrips(&r);
}

#[test]
fn concat_rejects_bad_arguments() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: 1.0,
    };
    let victim = desk.prove(0, desk.cfg.k).unwrap();
    let mut params = concat_params(&desk, 0, desk.cfg.k);
    params.fine_tune_epochs = 0;
    let adv = desk.hyper(1000);
    assert!(concat_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &params, &judge).is_err());
}

#[test]
fn inverse_gradient_spoof_is_costly_and_caught() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let params = InverseParams {
        steps_back: desk.steps_per_epoch(),
        k: desk.cfg.k,
        ..Default::default()
    };
    for seed in 0..10 {
        let victim = desk.prove(seed, desk.cfg.k).unwrap();
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref: desk.reference_distance(seed, Metric::L2).unwrap(),
        };
        let adv = desk.hyper(seed + 1000);
        let (proof, r) = inverse_gradient_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &params, &judge).unwrap();
        // Layers this small give the KS check little power and most seeds
        // are accepted; detection is checked at the default scale below.
        assert!(r.metric("cost_ratio").unwrap() >= 1.0);
        assert!(r.cost.grad_evals() >= r.cost.steps());
        assert_eq!(proof.total_steps(), params.steps_back);
        roundtrips(&r);
    }
}

#[test]
fn inverted_steps_replay_worse_than_honest_steps_at_default_scale() {
    let desk = DeskConfig::default().build().unwrap();
    let config = VerificationConfig::default();
    for seed in 0..3 {
        let victim = desk.prove(seed, desk.cfg.k).unwrap();
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref: 1.0,
        };
        let adv = desk.hyper(seed + 1000);
        let (_, r) = inverse_gradient_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &InverseParams::default(), &judge).unwrap();
        assert_eq!(r.outcomes[0].reason.as_deref(), Some("init_ks_fail"));
        let honest = desk.prove(seed, 1).unwrap();
        let honest_eps = epsilon_repr(&honest.proof, &desk.dataset, Metric::L2).unwrap();
        let spoof_eps = r.metric("eps_repr_max").unwrap();
        assert!(spoof_eps > honest_eps, "seed {seed}: spoof {spoof_eps} vs honest {honest_eps}");
    }
}

#[test]
fn inverse_spoof_needs_whole_epochs() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: 1.0,
    };
    let victim = desk.prove(0, desk.cfg.k).unwrap();
    let params = InverseParams {
        steps_back: desk.steps_per_epoch() + 1,
        ..Default::default()
    };
    assert!(inverse_gradient_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &desk.hyper(1), &params, &judge).is_err());
}

#[test]
fn retrain_distance_grows_with_run_length() {
    let config = VerificationConfig::default();
    let mut normalized = Vec::new();
    for epochs in [10, 100, 1000] {
        let desk = DeskConfig {
            epochs,
            ..small_desk().cfg
        }
        .build()
        .unwrap();
        let victim = desk.prove(0, desk.cfg.k).unwrap();
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref: desk.reference_distance(0, Metric::L2).unwrap(),
        };
        let hyper = desk.hyper(0);
        let mut params = desk.prove_params(&hyper, desk.cfg.k).unwrap();
        params.noise_seed ^= 0xdead;
        let (_, r) = retrain_spoof(&victim.proof, &desk.arch, &desk.dataset, &hyper, &params, &judge).unwrap();
        assert_eq!(victim.proof.total_steps(), epochs * 10);
        normalized.push(r.metric("final_distance_normalized").unwrap());
        roundtrips(&r);
    }
    assert!(normalized.windows(2).all(|w| w[0] < w[1]), "{normalized:?}");
}

#[test]
fn retrain_spoof_fails_and_honest_single_steps_stay_within_delta() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    for seed in 0..10 {
        let victim = desk.prove(seed, desk.cfg.k).unwrap();
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref: desk.reference_distance(seed, Metric::L2).unwrap(),
        };
        let hyper = desk.hyper(seed);
        let mut params = desk.prove_params(&hyper, desk.cfg.k).unwrap();
        params.noise_seed ^= 0xbeef;
        let (_, r) = retrain_spoof(&victim.proof, &desk.arch, &desk.dataset, &hyper, &params, &judge).unwrap();
        assert_eq!(r.verdict(), "fail", "seed {seed}");

        let honest = desk.prove(seed, 1).unwrap();
        let eps = epsilon_repr(&honest.proof, &desk.dataset, Metric::L2).unwrap();
        let delta = calibrate_delta(&honest.proof, &desk.dataset, Metric::L2, 10, 3.0, seed).unwrap().delta();
        assert!(eps < delta, "seed {seed}: eps {eps} delta {delta}");
    }
}

#[test]
fn noiseless_retrain_reproduces_exactly() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let victim = prove_with_noise(&desk, 3, desk.cfg.k, NoiseModel::None);
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: 1.0,
    };
    let hyper = desk.hyper(3);
    let mut params = desk.prove_params(&hyper, desk.cfg.k).unwrap();
    params.noise = NoiseModel::None;
    params.noise_seed ^= 1;
    let (proof, r) = retrain_spoof(&victim.proof, &desk.arch, &desk.dataset, &hyper, &params, &judge).unwrap();
    assert_eq!(r.metric("final_distance"), Some(0.0));
    assert_eq!(r.verdict(), "success");
    assert_eq!(proof, victim.proof);
}

#[test]
fn retrain_must_match_victim_schedule() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: 1.0,
    };
    let victim = desk.prove(0, desk.cfg.k).unwrap();
    let hyper = desk.hyper(0);
    let params = desk.prove_params(&hyper, desk.cfg.k + 1).unwrap();
    assert!(retrain_spoof(&victim.proof, &desk.arch, &desk.dataset, &hyper, &params, &judge).is_err());
}

#[test]
fn directed_regularizer_is_caught_either_way() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    for seed in 0..10 {
        let target = desk.prove(seed, desk.cfg.k).unwrap().final_weights;
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref: desk.reference_distance(seed, Metric::L2).unwrap(),
        };
        let adv = desk.hyper(seed + 1000);
        let params = desk.prove_params(&adv, desk.cfg.k).unwrap();
        let (_, r) = directed_regularizer_demo(&target, &desk.arch, &desk.dataset, &adv, &params, 5.0, &judge).unwrap();
        assert_eq!(r.verdict(), "fail");
        assert_eq!(r.outcome("honest_tag").unwrap().reason.as_deref(), Some("segment_distance_exceeded"));
        assert_eq!(r.outcome("true_tag").unwrap().reason.as_deref(), Some("metadata_not_whitelisted"));
        assert!(r.metric("regularizer_input_gradient").unwrap().abs() <= 1e-12);
        roundtrips(&r);
    }
}

#[test]
fn directed_regularizer_rejects_nonpositive_lambda() {
    let desk = small_desk();
    let config = VerificationConfig::default();
    let judge = Judge {
        dataset: &desk.dataset,
        config: &config,
        d_ref: 1.0,
    };
    let target = desk.prove(0, desk.cfg.k).unwrap().final_weights;
    let adv = desk.hyper(1);
    let params = desk.prove_params(&adv, desk.cfg.k).unwrap();
    assert!(directed_regularizer_demo(&target, &desk.arch, &desk.dataset, &adv, &params, 0.0, &judge).is_err());
}
