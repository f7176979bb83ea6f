//! One-sample Kolmogorov-Smirnov test against a weight-init distribution.

use crate::error::{Error, Result};
use crate::sgd::{InitStrategy, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub n: usize,
    /// `D_n = sup_x |F_n(x) - F(x)|`
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sided KS statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// `P(K > lambda)` for the limiting Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form converges fast for small lambda.
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|j| {
                let m = (2 * j - 1) as f64;
                (-m * m * c).exp()
            })
            .sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j| {
                let j = j as f64;
                let sign = if j as i64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * j * j * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Statistic plus asymptotic p-value at `sqrt(n) * D_n`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InvalidConfig(
            "KS test needs at least one sample".into(),
        ));
    }
    let statistic = ks_statistic(samples, cdf);
    let n = samples.len();
    Ok(KsResult {
        n,
        statistic,
        p_value: kolmogorov_sf((n as f64).sqrt() * statistic),
    })
}

/// KS test of one layer's weight matrix against the strategy's distribution.
pub fn ks_layer_test(
    layer_weights: &[f64],
    strategy: InitStrategy,
    fan_in: usize,
    fan_out: usize,
) -> Result<KsResult> {
    let dist = strategy.distribution(fan_in, fan_out);
    ks_test(layer_weights, |x| dist.cdf(x))
}

/// Per-layer outcome of checking a claimed initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct InitCheck {
    pub layers: Vec<KsResult>,
    /// Per-layer significance threshold actually applied.
    pub threshold: f64,
    pub pass: bool,
}

impl InitCheck {
    /// First layer whose p-value falls below the threshold.
    pub fn first_failure(&self) -> Option<(usize, &KsResult)> {
        self.layers
            .iter()
            .enumerate()
            .find(|(_, r)| r.p_value < self.threshold)
    }

    pub fn min_p_value(&self) -> f64 {
        self.layers.iter().map(|r| r.p_value).fold(1.0, f64::min)
    }
}

/// Fails iff some layer's p-value is below `alpha` (or `alpha / L` with the
/// Bonferroni correction over `L` layers).
pub fn verify_initialization(
    w0: &WeightVector,
    strategy: InitStrategy,
    alpha: f64,
    bonferroni: bool,
) -> Result<InitCheck> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    let layout = w0.layout();
    let threshold = if bonferroni {
        alpha / layout.len() as f64
    } else {
        alpha
    };
    let layers = layout
        .iter()
        .enumerate()
        .map(|(l, s)| ks_layer_test(w0.layer_weights(l), strategy, s.fan_in, s.fan_out))
        .collect::<Result<Vec<_>>>()?;
    let pass = layers.iter().all(|r| r.p_value >= threshold);
    Ok(InitCheck {
        layers,
        threshold,
        pass,
    })
}
