//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::time::{Duration, Instant};

use pol_core::experiments::{first_failing_steps, k_sweep, ks_steps, mean_normalized, Desk, DeskConfig};
use pol_core::proof::{
    create_pol, encode_proof, expected_transfer, proof_size_bytes, seal, KeyPair, PoLProof,
    Precision, ProveParams, StartState,
};
use pol_core::sgd::{
    grad, loss, make_synthetic_dataset, Activation, Batch, Hyperparams, InitStrategy, Labels,
    LossKind, ModelArch, NoiseModel, SyntheticKind, WeightVector,
};
use pol_core::spoof::{concat_spoof, inverse_gradient_spoof, ConcatParams, InverseParams, Judge};
use pol_core::verify::{
    ks_statistic, verify, verify_proof, vsr_estimate, Delta, FailReason, Metric, SealKeys,
    VerificationConfig, VerificationResult, VerifyContext,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = (bool, String);

fn desk() -> Desk {
    DeskConfig::default().build().expect("default desk")
}

fn honest_completeness(desk: &Desk) -> Outcome {
    let t0 = Instant::now();
    let setup = desk.prover_setup(0).unwrap();
    let est = vsr_estimate(&setup, &VerificationConfig::default(), 100, 1).unwrap();
    let took = t0.elapsed();
    (
        est.successes >= 99 && took <= Duration::from_secs(300),
        format!("{}/100 accepted in {:.1}s", est.successes, took.as_secs_f64()),
    )
}

fn noiseless_bit_exact(desk: &Desk) -> Outcome {
    let config = VerificationConfig {
        delta: Delta::Fixed(0.0),
        ..Default::default()
    };
    let mut exact = 0;
    for seed in 0..100 {
        let hyper = desk.hyper(seed);
        let mut params = desk.prove_params(&hyper, desk.cfg.k).unwrap();
        params.noise = NoiseModel::None;
        let out = create_pol(&desk.arch, &desk.dataset, &hyper, &params, StartState::Fresh).unwrap();
        let res = verify_proof(&out.proof, &desk.dataset, &config, VerifyContext::default()).unwrap();
        let all_zero = !res.segments.is_empty()
            && res.segments.iter().all(|s| s.distance == Some(0.0));
        exact += usize::from(res.is_success() && all_zero);
    }
    (exact == 100, format!("{exact}/100 with every d2 == 0"))
}

fn reproduction_trend(desk: &Desk) -> Outcome {
    let s = desk.steps_per_epoch();
    let es = desk.total_steps();
    let seeds: Vec<u64> = (0..10).collect();
    let rows = k_sweep(desk, &[1, s, es], &seeds, Metric::L2).unwrap();
    let m: Vec<f64> = [1, s, es]
        .iter()
        .map(|&k| mean_normalized(&rows, |r| r.k == k))
        .collect();
    (
        m[0] < 0.05 && m[2] > 0.5 && m[0] < m[1] && m[1] < m[2],
        format!("normalized eps k=1 {:.4}, k=S {:.4}, k=ES {:.4}", m[0], m[1], m[2]),
    )
}

fn concat_detection(desk: &Desk) -> Outcome {
    let config = VerificationConfig::default();
    let s = desk.steps_per_epoch();
    let (mut failed, mut in_band, mut dominant) = (0, 0, 0);
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let victim = desk.prove(seed, desk.cfg.k).unwrap();
        let d_ref = desk.reference_distance(seed, Metric::L2).unwrap();
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref,
        };
        let adv = desk.hyper(seed + 1000);
        let params = ConcatParams {
            fresh_steps: (desk.cfg.epochs - 1) * s,
            fine_tune_epochs: 1,
            prove: desk.prove_params(&adv, desk.cfg.k).unwrap(),
            decoys: None,
        };
        let (_, r) = concat_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &params, &judge).unwrap();
        failed += usize::from(r.is_detected());
        let ratio = r.metric("discontinuity_normalized").unwrap();
        ratios.push(ratio);
        in_band += usize::from((1.0 / 3.0..=3.0).contains(&ratio));
        dominant += usize::from(r.metric("discontinuity").unwrap() > r.metric("max_valid_update").unwrap());
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    (
        failed == 10 && in_band == 10 && dominant == 10,
        format!("detected {failed}/10, jump/d_ref in [{lo:.3}, {hi:.3}], jump above all valid updates {dominant}/10"),
    )
}

fn ks_init_check(desk: &Desk) -> Outcome {
    let seeds: Vec<u64> = (0..100).collect();
    let rows = ks_steps(desk, &seeds, 50, 0.01, true).unwrap();
    let fresh = rows.iter().filter(|r| r.step == 0 && r.pass).count();
    let trained = rows.iter().filter(|r| r.step == 50 && !r.pass).count();
    let firsts: Vec<usize> = first_failing_steps(&rows).into_iter().filter_map(|(_, n)| n).collect();
    let n_max = firsts.iter().max().copied();
    let n_min = firsts.iter().min().copied();
    (
        fresh >= 98 && trained >= 98,
        format!("fresh pass {fresh}/100, 50-step fail {trained}/100, first failing step N in {n_min:?}..{n_max:?}"),
    )
}

fn inverse_gradient(desk: &Desk) -> Outcome {
    let config = VerificationConfig::default();
    let params = InverseParams::default();
    let (mut counted, mut costly, mut ks_fail) = (0, 0, 0);
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let victim = desk.prove(seed, desk.cfg.k).unwrap();
        let judge = Judge {
            dataset: &desk.dataset,
            config: &config,
            d_ref: desk.reference_distance(seed, Metric::L2).unwrap(),
        };
        let adv = desk.hyper(seed + 1000);
        let (_, r) = inverse_gradient_spoof(&victim.final_weights, &desk.arch, &desk.dataset, &adv, &params, &judge).unwrap();
        counted += usize::from(r.cost.steps() == params.steps_back && r.cost.grad_evals() >= r.cost.steps());
        costly += usize::from(r.cost.grad_evals() >= params.steps_back);
        ks_fail += usize::from(r.metric("init_pass") == Some(0.0));
        ratios.push(r.metric("cost_ratio").unwrap());
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    (
        counted == 10 && costly == 10 && ks_fail == 10,
        format!("grad evals >= 1/step {counted}/10, cost >= steps_back {costly}/10 (min ratio {lo:.1}), recovered init fails KS {ks_fail}/10"),
    )
}

fn tiny_proof(epochs: usize, s: usize, k: usize) -> (PoLProof, pol_core::sgd::Dataset, ModelArch) {
    let arch = ModelArch::mlp(&[4, 5, 3], Activation::Tanh, LossKind::CrossEntropySoftmax).unwrap();
    let bs = 3;
    let data = make_synthetic_dataset(SyntheticKind::blobs(), s * bs, 4, 3, 7).unwrap();
    let hyper = Hyperparams::new(0.1, bs, InitStrategy::XavierUniform, 3);
    let params = ProveParams {
        epochs,
        k,
        noise: NoiseModel::None,
        noise_seed: 0,
        precision: Precision::F32,
    };
    let out = create_pol(&arch, &data, &hyper, &params, StartState::Fresh).unwrap();
    (out.proof, data, arch)
}

fn transfer_monte_carlo(n: usize, q: usize, k: usize, s: usize, e: usize, trials: usize, seed: u64) -> f64 {
    // Each epoch is a fresh permutation cut into S batches; the checked q*k
    // batches therefore cover a uniformly random q*k/S share of the rows.
    let bs = n / s;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut seen = vec![0u32; n];
    let mut total = 0usize;
    for trial in 1..=trials as u32 {
        let mut count = 0;
        for _ in 0..e {
            for i in rand::seq::index::sample(&mut rng, n, q * k * bs) {
                if seen[i] != trial {
                    seen[i] = trial;
                    count += 1;
                }
            }
        }
        total += count;
    }
    total as f64 / trials as f64
}

fn formulas() -> Outcome {
    let mut payload_ok = 0;
    let mut payload_total = 0;
    for e in [1, 2, 3] {
        for s in [4, 7, 10] {
            for k in [1, 2, 3, 5, 8, 25] {
                let (proof, _, arch) = tiny_proof(e, s, k);
                let enc = encode_proof(&proof);
                let want = proof_size_bytes(e, s, k, arch.param_count() * 4).unwrap();
                payload_total += 1;
                payload_ok += usize::from(enc.sections.checkpoint_payload as u64 == want);
            }
        }
    }

    let sets = [
        (100, 1, 2, 10, 3),
        (60, 1, 1, 6, 5),
        (200, 2, 3, 20, 4),
        (120, 1, 5, 12, 2),
        (90, 3, 1, 9, 6),
    ];
    let mut worst_rel: f64 = 0.0;
    for (i, &(n, q, k, s, e)) in sets.iter().enumerate() {
        let want = expected_transfer(n, q, k, s, e).unwrap();
        let got = transfer_monte_carlo(n, q, k, s, e, 100_000, i as u64);
        worst_rel = worst_rel.max((got - want).abs() / want);
    }

    let mut counter_ok = 0;
    let cases = [(3, 10, 2, 2), (2, 8, 4, 1), (4, 6, 3, 2), (1, 12, 1, 5)];
    for &(e, s, k, q) in &cases {
        let (proof, data, _) = tiny_proof(e, s, k);
        let config = VerificationConfig {
            q,
            delta: Delta::Fixed(f64::INFINITY),
            ..Default::default()
        };
        let res = verify_proof(&proof, &data, &config, VerifyContext::default()).unwrap();
        counter_ok += usize::from(res.is_success() && res.recomputed_steps == e * q * k);
    }
    (
        payload_ok == payload_total && worst_rel < 0.01 && counter_ok == cases.len(),
        format!(
            "payload {payload_ok}/{payload_total}, transfer worst rel err {worst_rel:.2e}, recompute counter {counter_ok}/{}",
            cases.len()
        ),
    )
}

fn random_instance(rng: &mut ChaCha20Rng) -> (ModelArch, WeightVector, Batch) {
    let depth = rng.gen_range(2..=4);
    let mut dims: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..=6)).collect();
    let regression = rng.gen_bool(0.3);
    if regression {
        *dims.last_mut().unwrap() = 1;
    }
    let act = [Activation::Tanh, Activation::Relu, Activation::Identity][rng.gen_range(0..3)];
    let loss = if regression {
        LossKind::SquaredError
    } else {
        LossKind::CrossEntropySoftmax
    };
    let hidden = dims.len() - 2;
    let arch = ModelArch::new(dims.clone(), vec![act; hidden], loss).unwrap();
    let values = (0..arch.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w = WeightVector::from_values(&arch, values).unwrap();
    let n = rng.gen_range(1..=5);
    let inputs = (0..n * dims[0]).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let out = *dims.last().unwrap();
    let labels = if regression {
        Labels::Targets((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    } else {
        Labels::Classes {
            ids: (0..n).map(|_| rng.gen_range(0..out)).collect(),
            num_classes: out,
        }
    };
    let batch = Batch {
        inputs,
        dim: dims[0],
        labels,
    };
    (arch, w, batch)
}

fn gradient_and_ks_oracles() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (arch, w, batch) = random_instance(&mut rng);
        let g = grad(&arch, &w, &batch).unwrap();
        for i in 0..w.len() {
            let mut v = w.values().to_vec();
            v[i] += h;
            let up = loss(&arch, &w.with_values(v.clone()), &batch).unwrap();
            v[i] -= 2.0 * h;
            let down = loss(&arch, &w.with_values(v), &batch).unwrap();
            worst = worst.max(((up - down) / (2.0 * h) - g.values()[i]).abs());
        }
    }

    let mut ks_worst: f64 = 0.0;
    for trial in 0..100 {
        let n = rng.gen_range(1..300);
        // Coarse rounding on some trials to exercise ties.
        let grid = if trial % 3 == 0 { 20.0 } else { 1e9 };
        let xs: Vec<f64> = (0..n)
            .map(|_| (rng.gen_range(-1.5..1.5f64) * grid).round() / grid)
            .collect();
        let cdf = |x: f64| ((x + 1.0) / 2.0).clamp(0.0, 1.0);
        let fast = ks_statistic(&xs, cdf);
        let nf = n as f64;
        let brute = xs.iter().fold(0.0f64, |d, &x| {
            let le = xs.iter().filter(|&&y| y <= x).count() as f64 / nf;
            let lt = xs.iter().filter(|&&y| y < x).count() as f64 / nf;
            d.max((le - cdf(x)).abs()).max((cdf(x) - lt).abs())
        });
        ks_worst = ks_worst.max((fast - brute).abs());
    }
    (
        worst <= 1e-5 && ks_worst <= 1e-12,
        format!("max |grad - fd| {worst:.2e} over 50 instances, max |KS - brute force| {ks_worst:.2e}"),
    )
}

fn rejected_with(res: &VerificationResult, code: &str) -> bool {
    res.reason.as_ref().map(FailReason::code) == Some(code)
}

fn tamper_soundness(desk: &Desk) -> Outcome {
    let config = VerificationConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let verifier = KeyPair::generate(&mut rng);
    let prover = KeyPair::generate(&mut rng);
    let impostor = KeyPair::generate(&mut rng);
    let (mut seg, mut sig, mut env, mut meta) = (0, 0, 0, 0);
    for seed in 0..10u64 {
        let out = desk.prove(seed, desk.cfg.k).unwrap();
        let honest = verify_proof(&out.proof, &desk.dataset, &config, VerifyContext::default()).unwrap();
        let delta = honest.delta.unwrap();

        // Push the end of the first checked top-Q segment 10*delta away.
        let target = honest
            .segments
            .iter()
            .find(|c| c.rank.is_some() && c.end < out.proof.total_steps())
            .unwrap();
        let mut bad = out.proof.clone();
        let w = bad.checkpoints[target.end].as_mut().unwrap();
        let n = w.len() as f64;
        for v in w.values_mut() {
            *v += 10.0 * delta / n.sqrt();
        }
        let res = verify_proof(&bad, &desk.dataset, &config, VerifyContext::default()).unwrap();
        let on_top_q = res.segments.last().is_some_and(|c| c.rank.is_some());
        seg += usize::from(rejected_with(&res, "segment_distance_exceeded") && on_top_q);

        let mut bad = out.proof.clone();
        bad.hashes[honest.segments[0].start].0[0] ^= 1;
        let res = verify_proof(&bad, &desk.dataset, &config, VerifyContext::default()).unwrap();
        sig += usize::from(rejected_with(&res, "signature_mismatch"));

        let sealed = seal(&out.proof, &verifier.public(), &impostor, "prover", seed, &mut rng);
        let keys = SealKeys {
            verifier: &verifier,
            prover: &prover.public(),
        };
        let res = verify(&sealed, None, keys, &desk.dataset, &config, None).unwrap();
        env += usize::from(rejected_with(&res, "envelope_rejected"));

        let mut bad = out.proof.clone();
        bad.meta.optimizer_tag = "adam".into();
        let res = verify_proof(&bad, &desk.dataset, &config, VerifyContext::default()).unwrap();
        meta += usize::from(rejected_with(&res, "metadata_not_whitelisted"));
    }
    (
        seg == 10 && sig == 10 && env == 10 && meta == 10,
        format!("checkpoint {seg}/10, batch hash {sig}/10, envelope {env}/10, metadata {meta}/10"),
    )
}

fn main() {
    let desk = desk();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("honest runs are accepted", Box::new(|| honest_completeness(&desk))),
        ("noiseless replay is bit exact", Box::new(|| noiseless_bit_exact(&desk))),
        ("reproduction error grows with k", Box::new(|| reproduction_trend(&desk))),
        ("concatenated trajectories are caught", Box::new(|| concat_detection(&desk))),
        ("KS separates fresh and trained weights", Box::new(|| ks_init_check(&desk))),
        ("inverse-gradient spoof is costly and caught", Box::new(|| inverse_gradient(&desk))),
        ("cost formulas match oracles", Box::new(formulas)),
        ("gradient and KS match brute force", Box::new(gradient_and_ks_oracles)),
        ("tampering is rejected", Box::new(|| tamper_soundness(&desk))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = check();
        failed += usize::from(!ok);
        println!(
            "criterion {}: {} {name}: {detail} [{:.1}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
