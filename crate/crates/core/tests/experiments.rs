mod common;

use common::small_desk;
use pol_core::experiments::{
    cost_curve, default_k_grid, first_failing_steps, k_sweep, ks_steps, lr_sweep,
    mean_normalized, storage_curve, to_csv_string, DeskConfig,
};
use pol_core::verify::{cost_ratio, Metric};

#[test]
fn reproduction_error_is_nondecreasing_over_the_k_grid() {
    let desk = small_desk();
    let ks = default_k_grid(desk.steps_per_epoch(), desk.cfg.epochs);
    let rows = k_sweep(&desk, &ks, &[0, 1, 2, 3, 4], Metric::L2).unwrap();
    let means: Vec<f64> = ks.iter().map(|&k| mean_normalized(&rows, |r| r.k == k)).collect();
    assert!(means.windows(2).all(|w| w[0] <= w[1]), "{ks:?} -> {means:?}");
    let csv = to_csv_string(&rows).unwrap();
    assert_eq!(csv.lines().count(), rows.len() + 1);
}

#[test]
fn reproduction_error_jumps_once_the_rate_is_unstable() {
    // Under the default noise every rate is noise dominated; a smaller noise
    // level exposes the rate dependence.
    let desk = DeskConfig {
        noise_rel: 1e-3,
        ..Default::default()
    }
    .build()
    .unwrap();
    let s = desk.steps_per_epoch();
    let etas = [0.01, 0.03, 0.1, 1.0];
    let rows = lr_sweep(&desk, &etas, s, &[0, 1, 2], Metric::L2).unwrap();
    let m: Vec<f64> = etas.iter().map(|&e| mean_normalized(&rows, |r| r.eta == e)).collect();
    let stable_max = m[..3].iter().copied().fold(0.0, f64::max);
    let stable_min = m[..3].iter().copied().fold(f64::INFINITY, f64::min);
    assert!(stable_max < 1.5 * stable_min, "{m:?}");
    assert!(m[3] > 3.0 * stable_max, "{m:?}");
}

#[test]
fn ks_rows_and_first_failures() {
    // The small desk's layers are too short for the test to have power.
    let desk = DeskConfig::default().build().unwrap();
    let rows = ks_steps(&desk, &[0, 1, 2], 30, 0.01, true).unwrap();
    assert_eq!(rows.len(), 3 * 31);
    assert!(rows.iter().filter(|r| r.step == 0).all(|r| r.pass));
    let firsts = first_failing_steps(&rows);
    assert_eq!(firsts.len(), 3);
    for (seed, n) in firsts {
        let n = n.unwrap_or_else(|| panic!("seed {seed} never failed"));
        assert!(n > 0);
    }
}

#[test]
fn cost_curve_ratio_is_qk_over_s() {
    let rows = cost_curve(20, 20, &[1, 5, 20, 80], &[1, 2], 2000).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r.ratio, cost_ratio(r.q, r.k, 20));
        assert!(r.expected_transfer <= 2000.0);
    }
    assert!(rows.iter().all(|r| r.k != 80));
}

#[test]
fn storage_curve_formula_and_measurement_agree() {
    let desk = small_desk();
    let rows = storage_curve(&desk, &[1, 2, 7, 30], 0, true).unwrap();
    for r in &rows {
        assert_eq!(r.measured_payload, Some(r.predicted_payload));
        assert!(r.file_bytes.unwrap() > r.predicted_payload);
    }
    assert_eq!(rows.iter().map(|r| r.checkpoints).collect::<Vec<_>>(), vec![30, 15, 5, 1]);
    let formula_only = storage_curve(&desk, &[2], 0, false).unwrap();
    assert_eq!(formula_only[0].measured_payload, None);
    assert!(to_csv_string(&formula_only).unwrap().ends_with(",,\n"));
}
