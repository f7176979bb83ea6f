//! Forward pass, batch loss and backpropagation for dense MLPs.

use super::{Batch, Labels, LayerSlice, LossKind, ModelArch, WeightVector};
use crate::error::{Error, Result};

fn check_shapes(arch: &ModelArch, weights: &WeightVector, batch: &Batch) -> Result<()> {
    if !weights.matches(arch) {
        return Err(Error::Shape(format!(
            "weight vector of {} values does not match architecture with {} parameters",
            weights.len(),
            arch.param_count()
        )));
    }
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    if batch.dim != arch.input_dim() {
        return Err(Error::Shape(format!(
            "batch rows have width {}, network expects {}",
            batch.dim,
            arch.input_dim()
        )));
    }
    let out = arch.output_dim();
    match (&batch.labels, arch.loss()) {
        (Labels::Classes { ids, .. }, _) => {
            if let Some(&c) = ids.iter().find(|&&c| c >= out) {
                return Err(Error::Shape(format!("class id {c} >= output dim {out}")));
            }
        }
        (Labels::Targets(_), LossKind::SquaredError) if out == 1 => {}
        (Labels::Targets(_), LossKind::SquaredError) => {
            return Err(Error::Shape("real targets need a single output".into()));
        }
        (Labels::Targets(_), LossKind::CrossEntropySoftmax) => {
            return Err(Error::Shape("cross-entropy needs class labels".into()));
        }
    }
    Ok(())
}

/// `out = W x + b` for one layer, row-major weights.
#[inline]
fn affine(w: &[f64], slice: &LayerSlice, x: &[f64], out: &mut [f64]) {
    let wm = &w[slice.weights.clone()];
    let b = &w[slice.biases.clone()];
    for (o, (row, bias)) in out.iter_mut().zip(wm.chunks_exact(slice.fan_in).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Per-sample loss and `dL/dz` at the output logits.
fn output_loss(loss: LossKind, z: &[f64], labels: &Labels, i: usize, dz: &mut [f64]) -> f64 {
    match loss {
        LossKind::CrossEntropySoftmax => {
            let Labels::Classes { ids, .. } = labels else {
                unreachable!("checked in check_shapes")
            };
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (d, &v) in dz.iter_mut().zip(z) {
                *d = (v - max).exp();
                sum += *d;
            }
            dz.iter_mut().for_each(|d| *d /= sum);
            let y = ids[i];
            let l = -(dz[y].max(f64::MIN_POSITIVE)).ln();
            dz[y] -= 1.0;
            l
        }
        LossKind::SquaredError => {
            let mut l = 0.0;
            for (j, (d, &v)) in dz.iter_mut().zip(z).enumerate() {
                let target = match labels {
                    Labels::Classes { ids, .. } => f64::from(u8::from(ids[i] == j)),
                    Labels::Targets(t) => t[i],
                };
                let r = v - target;
                l += r * r;
                *d = 2.0 * r;
            }
            l
        }
    }
}

struct Workspace {
    /// Post-activation outputs per layer; `acts[0]` is the input row.
    acts: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(arch: &ModelArch) -> Self {
        let dims = arch.layer_dims();
        Self {
            acts: dims.iter().map(|&d| vec![0.0; d]).collect(),
            delta: dims.iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    fn forward(&mut self, arch: &ModelArch, w: &WeightVector, x: &[f64]) {
        self.acts[0].copy_from_slice(x);
        for (l, slice) in w.layout().iter().enumerate() {
            let (lower, upper) = self.acts.split_at_mut(l + 1);
            let out = &mut upper[0];
            affine(w.values(), slice, &lower[l], out);
            let act = arch.activation_of(l);
            out.iter_mut().for_each(|v| *v = act.apply(*v));
        }
    }
}

fn forward_backward(
    arch: &ModelArch,
    weights: &WeightVector,
    batch: &Batch,
    mut grad_out: Option<&mut [f64]>,
) -> Result<f64> {
    check_shapes(arch, weights, batch)?;
    let layout = weights.layout();
    let n_layers = layout.len();
    let w = weights.values();
    let mut ws = Workspace::new(arch);
    let mut total = 0.0;
    for i in 0..batch.len() {
        ws.forward(arch, weights, batch.row(i));
        let top = n_layers;
        total += output_loss(
            arch.loss(),
            &ws.acts[top],
            &batch.labels,
            i,
            &mut ws.delta[top],
        );
        let Some(g) = grad_out.as_deref_mut() else {
            continue;
        };
        for l in (0..n_layers).rev() {
            let slice = &layout[l];
            // delta[l + 1] holds dL/dz for layer l's pre-activation.
            let (lower, upper) = ws.delta.split_at_mut(l + 1);
            let dz = &upper[0];
            let x = &ws.acts[l];
            let gw = &mut g[slice.weights.clone()];
            for (row, &d) in gw.chunks_exact_mut(slice.fan_in).zip(dz.iter()) {
                if d != 0.0 {
                    row.iter_mut().zip(x).for_each(|(gv, xv)| *gv += d * xv);
                }
            }
            g[slice.biases.clone()]
                .iter_mut()
                .zip(dz)
                .for_each(|(gv, d)| *gv += d);
            if l > 0 {
                let dx = &mut lower[l];
                dx.iter_mut().for_each(|v| *v = 0.0);
                let wm = &w[slice.weights.clone()];
                for (row, &d) in wm.chunks_exact(slice.fan_in).zip(dz.iter()) {
                    if d != 0.0 {
                        dx.iter_mut().zip(row).for_each(|(a, wv)| *a += d * wv);
                    }
                }
                let act = arch.activation_of(l - 1);
                dx.iter_mut()
                    .zip(&ws.acts[l])
                    .for_each(|(a, &y)| *a *= act.derivative_from_output(y));
            }
        }
    }
    let m = batch.len() as f64;
    if let Some(g) = grad_out {
        g.iter_mut().for_each(|v| *v /= m);
    }
    Ok(total / m)
}

/// Batch-averaged loss.
pub fn loss(arch: &ModelArch, weights: &WeightVector, batch: &Batch) -> Result<f64> {
    forward_backward(arch, weights, batch, None)
}

/// Gradient of the batch-averaged loss with respect to every parameter.
pub fn grad(arch: &ModelArch, weights: &WeightVector, batch: &Batch) -> Result<WeightVector> {
    let mut g = vec![0.0; weights.len()];
    forward_backward(arch, weights, batch, Some(&mut g))?;
    Ok(weights.with_values(g))
}

/// Raw network outputs, one row per sample.
pub fn predict(arch: &ModelArch, weights: &WeightVector, inputs: &[f64]) -> Vec<Vec<f64>> {
    let mut ws = Workspace::new(arch);
    inputs
        .chunks_exact(arch.input_dim())
        .map(|x| {
            ws.forward(arch, weights, x);
            ws.acts[arch.num_layers()].clone()
        })
        .collect()
}

/// Fraction of rows whose argmax output matches the class label.
pub fn accuracy(arch: &ModelArch, weights: &WeightVector, batch: &Batch) -> f64 {
    let Labels::Classes { ids, .. } = &batch.labels else {
        return f64::NAN;
    };
    let outs = predict(arch, weights, &batch.inputs);
    let hits = outs
        .iter()
        .zip(ids)
        .filter(|(o, &y)| {
            let arg = o
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(j, _)| j);
            arg == Some(y)
        })
        .count();
    hits as f64 / ids.len() as f64
}
