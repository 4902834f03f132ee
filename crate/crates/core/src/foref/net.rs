//! From-scratch convolutional angle regressor: explicit-loop forward and
//! backward passes in f64, adaptive-moment updates, and a binary weights
//! format.
//!
//! Shapes: 28x28 input -> conv 16@5x5 (valid) -> ReLU -> 2x2 max-pool ->
//! conv 32@3x3 (valid) -> ReLU -> 2x2 max-pool -> flatten 800 -> 128 ->
//! 32 -> 1 linear output. The output is an unbounded angle; callers
//! reduce mod 2pi.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::signed_angle_diff;

use super::{ForefError, ModelKind, TrainConfig};

pub const INPUT_SIDE: usize = 28;
const C1: usize = 16;
const K1: usize = 5;
const A1: usize = INPUT_SIDE - K1 + 1; // 24
const P1: usize = A1 / 2; // 12
const C2: usize = 32;
const K2: usize = 3;
const A2: usize = P1 - K2 + 1; // 10
const P2: usize = A2 / 2; // 5
pub const FLAT: usize = C2 * P2 * P2; // 800
const H1: usize = 128;
const H2: usize = 32;

pub const TENSOR_COUNT: usize = 10;
const CONV1_W: usize = 0;
const CONV1_B: usize = 1;
const CONV2_W: usize = 2;
const CONV2_B: usize = 3;
const FC1_W: usize = 4;
const FC1_B: usize = 5;
const FC2_W: usize = 6;
const FC2_B: usize = 7;
const FC3_W: usize = 8;
const FC3_B: usize = 9;

/// (name, shape, fan_in, fan_out); fan 0 marks a bias, initialized to 0.
const TENSOR_SPECS: [(&str, &[usize], usize, usize); TENSOR_COUNT] = [
    ("conv1_w", &[C1, 1, K1, K1], K1 * K1, C1 * K1 * K1),
    ("conv1_b", &[C1], 0, 0),
    ("conv2_w", &[C2, C1, K2, K2], C1 * K2 * K2, C2 * K2 * K2),
    ("conv2_b", &[C2], 0, 0),
    ("fc1_w", &[H1, FLAT], FLAT, H1),
    ("fc1_b", &[H1], 0, 0),
    ("fc2_w", &[H2, H1], H1, H2),
    ("fc2_b", &[H2], 0, 0),
    ("fc3_w", &[1, H2], H2, 1),
    ("fc3_b", &[1], 0, 0),
];

struct Tensor {
    data: Vec<f64>,
    m: Vec<f64>,
    v: Vec<f64>,
}

pub struct ForefModel {
    pub kind: ModelKind,
    tensors: Vec<Tensor>,
    adam_step: u64,
}

impl std::fmt::Debug for ForefModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForefModel")
            .field("kind", &self.kind)
            .field("adam_step", &self.adam_step)
            .finish_non_exhaustive()
    }
}

impl ForefModel {
    /// Symmetric uniform init with limit sqrt(6 / (fan_in + fan_out));
    /// biases zero.
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = TENSOR_SPECS
            .iter()
            .map(|&(_, shape, fan_in, fan_out)| {
                let len: usize = shape.iter().product();
                let data = if fan_in == 0 {
                    vec![0.0; len]
                } else {
                    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    (0..len).map(|_| rng.random_range(-limit..limit)).collect()
                };
                Tensor { data, m: vec![0.0; len], v: vec![0.0; len] }
            })
            .collect();
        ForefModel { kind, tensors, adam_step: 0 }
    }

    pub fn zeroed(kind: ModelKind) -> Self {
        let mut model = ForefModel::new(kind, 0);
        for t in &mut model.tensors {
            t.data.iter_mut().for_each(|w| *w = 0.0);
        }
        model
    }

    pub fn tensor_names() -> impl Iterator<Item = &'static str> {
        TENSOR_SPECS.iter().map(|s| s.0)
    }

    pub fn tensor_len(idx: usize) -> usize {
        TENSOR_SPECS[idx].1.iter().product()
    }

    pub fn param(&self, tensor: usize, index: usize) -> f64 {
        self.tensors[tensor].data[index]
    }

    pub fn set_param(&mut self, tensor: usize, index: usize, value: f64) {
        self.tensors[tensor].data[index] = value;
    }

    pub fn params_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|w| w.is_finite()))
    }

    /// Raw regression output for a 28x28 image (row-major, 784 values).
    pub fn forward(&self, pixels: &[f64]) -> f64 {
        self.forward_cached(pixels).output
    }

    pub(crate) fn forward_cached(&self, pixels: &[f64]) -> ForwardCache {
        assert_eq!(pixels.len(), INPUT_SIDE * INPUT_SIDE, "input must be 28x28");
        let w1 = &self.tensors[CONV1_W].data;
        let b1 = &self.tensors[CONV1_B].data;
        let mut conv1_pre = vec![0.0; C1 * A1 * A1];
        for f in 0..C1 {
            for oy in 0..A1 {
                for ox in 0..A1 {
                    let mut sum = b1[f];
                    for ky in 0..K1 {
                        let row = &pixels[(oy + ky) * INPUT_SIDE + ox..][..K1];
                        let wrow = &w1[(f * K1 + ky) * K1..][..K1];
                        for kx in 0..K1 {
                            sum += wrow[kx] * row[kx];
                        }
                    }
                    conv1_pre[(f * A1 + oy) * A1 + ox] = sum;
                }
            }
        }
        let (pool1, pool1_arg) = max_pool(&conv1_pre, C1, A1);

        let w2 = &self.tensors[CONV2_W].data;
        let b2 = &self.tensors[CONV2_B].data;
        let mut conv2_pre = vec![0.0; C2 * A2 * A2];
        for g in 0..C2 {
            for oy in 0..A2 {
                for ox in 0..A2 {
                    let mut sum = b2[g];
                    for f in 0..C1 {
                        for ky in 0..K2 {
                            let row = &pool1[(f * P1 + oy + ky) * P1 + ox..][..K2];
                            let wrow = &w2[((g * C1 + f) * K2 + ky) * K2..][..K2];
                            for kx in 0..K2 {
                                sum += wrow[kx] * row[kx];
                            }
                        }
                    }
                    conv2_pre[(g * A2 + oy) * A2 + ox] = sum;
                }
            }
        }
        let (pool2, pool2_arg) = max_pool(&conv2_pre, C2, A2);

        let fc1_pre = dense(&self.tensors[FC1_W].data, &self.tensors[FC1_B].data, &pool2, H1);
        let h1: Vec<f64> = fc1_pre.iter().map(|&x| x.max(0.0)).collect();
        let fc2_pre = dense(&self.tensors[FC2_W].data, &self.tensors[FC2_B].data, &h1, H2);
        let h2: Vec<f64> = fc2_pre.iter().map(|&x| x.max(0.0)).collect();
        let output = self.tensors[FC3_B].data[0]
            + self.tensors[FC3_W].data.iter().zip(&h2).map(|(w, a)| w * a).sum::<f64>();

        ForwardCache {
            input: pixels.to_vec(),
            conv1_pre,
            pool1,
            pool1_arg,
            conv2_pre,
            pool2,
            pool2_arg,
            fc1_pre,
            fc2_pre,
            output,
        }
    }

    /// Accumulates parameter gradients for one sample given dLoss/dOutput.
    pub(crate) fn backward(&self, cache: &ForwardCache, g_out: f64, grads: &mut [Vec<f64>]) {
        let h2: Vec<f64> = cache.fc2_pre.iter().map(|&x| x.max(0.0)).collect();
        let h1: Vec<f64> = cache.fc1_pre.iter().map(|&x| x.max(0.0)).collect();

        // fc3
        for k in 0..H2 {
            grads[FC3_W][k] += g_out * h2[k];
        }
        grads[FC3_B][0] += g_out;
        let w3 = &self.tensors[FC3_W].data;
        let mut d_pre2 = vec![0.0; H2];
        for k in 0..H2 {
            if cache.fc2_pre[k] > 0.0 {
                d_pre2[k] = g_out * w3[k];
            }
        }

        // fc2
        for k in 0..H2 {
            let d = d_pre2[k];
            if d == 0.0 {
                continue;
            }
            let grow = &mut grads[FC2_W][k * H1..(k + 1) * H1];
            for j in 0..H1 {
                grow[j] += d * h1[j];
            }
            grads[FC2_B][k] += d;
        }
        let w2f = &self.tensors[FC2_W].data;
        let mut d_pre1 = vec![0.0; H1];
        for j in 0..H1 {
            if cache.fc1_pre[j] <= 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for k in 0..H2 {
                acc += d_pre2[k] * w2f[k * H1 + j];
            }
            d_pre1[j] = acc;
        }

        // fc1
        let mut d_flat = vec![0.0; FLAT];
        let w1f = &self.tensors[FC1_W].data;
        for j in 0..H1 {
            let d = d_pre1[j];
            if d == 0.0 {
                continue;
            }
            let grow = &mut grads[FC1_W][j * FLAT..(j + 1) * FLAT];
            let wrow = &w1f[j * FLAT..(j + 1) * FLAT];
            for i in 0..FLAT {
                grow[i] += d * cache.pool2[i];
                d_flat[i] += d * wrow[i];
            }
            grads[FC1_B][j] += d;
        }

        // unpool + ReLU into conv2
        let mut d_conv2 = vec![0.0; C2 * A2 * A2];
        for (i, &arg) in cache.pool2_arg.iter().enumerate() {
            if cache.conv2_pre[arg] > 0.0 {
                d_conv2[arg] += d_flat[i];
            }
        }

        // conv2
        let w2 = &self.tensors[CONV2_W].data;
        let mut d_pool1 = vec![0.0; C1 * P1 * P1];
        for g in 0..C2 {
            let mut bias_acc = 0.0;
            for oy in 0..A2 {
                for ox in 0..A2 {
                    let d = d_conv2[(g * A2 + oy) * A2 + ox];
                    if d == 0.0 {
                        continue;
                    }
                    bias_acc += d;
                    for f in 0..C1 {
                        for ky in 0..K2 {
                            let in_base = (f * P1 + oy + ky) * P1 + ox;
                            let w_base = ((g * C1 + f) * K2 + ky) * K2;
                            for kx in 0..K2 {
                                grads[CONV2_W][w_base + kx] += d * cache.pool1[in_base + kx];
                                d_pool1[in_base + kx] += d * w2[w_base + kx];
                            }
                        }
                    }
                }
            }
            grads[CONV2_B][g] += bias_acc;
        }

        // unpool + ReLU into conv1
        let mut d_conv1 = vec![0.0; C1 * A1 * A1];
        for (i, &arg) in cache.pool1_arg.iter().enumerate() {
            if cache.conv1_pre[arg] > 0.0 {
                d_conv1[arg] += d_pool1[i];
            }
        }

        // conv1
        for f in 0..C1 {
            let mut bias_acc = 0.0;
            for oy in 0..A1 {
                for ox in 0..A1 {
                    let d = d_conv1[(f * A1 + oy) * A1 + ox];
                    if d == 0.0 {
                        continue;
                    }
                    bias_acc += d;
                    for ky in 0..K1 {
                        let in_base = (oy + ky) * INPUT_SIDE + ox;
                        let w_base = (f * K1 + ky) * K1;
                        for kx in 0..K1 {
                            grads[CONV1_W][w_base + kx] += d * cache.input[in_base + kx];
                        }
                    }
                }
            }
            grads[CONV1_B][f] += bias_acc;
        }
    }

    pub(crate) fn zero_grads() -> Vec<Vec<f64>> {
        (0..TENSOR_COUNT).map(|i| vec![0.0; Self::tensor_len(i)]).collect()
    }

    /// One adaptive-moment update from accumulated gradients.
    pub(crate) fn adam_step(&mut self, grads: &[Vec<f64>], config: &TrainConfig) {
        self.adam_step += 1;
        let t = self.adam_step as i32;
        let bc1 = 1.0 - config.beta1.powi(t);
        let bc2 = 1.0 - config.beta2.powi(t);
        for (tensor, grad) in self.tensors.iter_mut().zip(grads) {
            for i in 0..tensor.data.len() {
                let g = grad[i];
                tensor.m[i] = config.beta1 * tensor.m[i] + (1.0 - config.beta1) * g;
                tensor.v[i] = config.beta2 * tensor.v[i] + (1.0 - config.beta2) * g * g;
                let m_hat = tensor.m[i] / bc1;
                let v_hat = tensor.v[i] / bc2;
                tensor.data[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
    }

    pub(crate) fn snapshot(&self) -> Vec<Vec<f64>> {
        self.tensors.iter().map(|t| t.data.clone()).collect()
    }

    pub(crate) fn restore(&mut self, snapshot: &[Vec<f64>]) {
        for (tensor, snap) in self.tensors.iter_mut().zip(snapshot) {
            tensor.data.copy_from_slice(snap);
        }
    }

    /// Binary weights: magic, tensor count, per-tensor rank and dims
    /// (u32 little-endian), then all parameters as f32 little-endian in
    /// declaration order.
    pub fn write_weights(&self, path: impl AsRef<Path>) -> Result<(), ForefError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(WEIGHTS_MAGIC)?;
        file.write_all(&(TENSOR_COUNT as u32).to_le_bytes())?;
        for (_, shape, _, _) in &TENSOR_SPECS {
            file.write_all(&(shape.len() as u32).to_le_bytes())?;
            for &d in *shape {
                file.write_all(&(d as u32).to_le_bytes())?;
            }
        }
        let mut buf = Vec::new();
        for t in &self.tensors {
            for &w in &t.data {
                buf.extend_from_slice(&(w as f32).to_le_bytes());
            }
        }
        file.write_all(&buf)?;
        Ok(())
    }

    /// Loads weights written by [`write_weights`]; optimizer state resets.
    pub fn read_weights(kind: ModelKind, path: impl AsRef<Path>) -> Result<Self, ForefError> {
        let mut file = std::fs::File::open(&path)?;
        let mut magic = [0u8; 6];
        file.read_exact(&mut magic)?;
        if &magic != WEIGHTS_MAGIC {
            return Err(ForefError::BadWeights("bad magic".to_string()));
        }
        let count = read_u32(&mut file)? as usize;
        if count != TENSOR_COUNT {
            return Err(ForefError::BadWeights(format!(
                "expected {TENSOR_COUNT} tensors, found {count}"
            )));
        }
        for (name, shape, _, _) in &TENSOR_SPECS {
            let rank = read_u32(&mut file)? as usize;
            if rank != shape.len() {
                return Err(ForefError::BadWeights(format!("{name}: rank {rank}")));
            }
            for &d in *shape {
                let got = read_u32(&mut file)? as usize;
                if got != d {
                    return Err(ForefError::BadWeights(format!(
                        "{name}: dim {got}, expected {d}"
                    )));
                }
            }
        }
        let mut model = ForefModel::zeroed(kind);
        let mut buf = [0u8; 4];
        for t in &mut model.tensors {
            for w in &mut t.data {
                file.read_exact(&mut buf)?;
                *w = f32::from_le_bytes(buf) as f64;
            }
        }
        Ok(model)
    }
}

pub const WEIGHTS_MAGIC: &[u8; 6] = b"FOREF1";

fn read_u32(r: &mut impl Read) -> Result<u32, ForefError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// 2x2 max pool with ReLU folded in: pooled value is max(0, window max),
/// argmax records the flat pre-activation index that produced it.
fn max_pool(pre: &[f64], channels: usize, side: usize) -> (Vec<f64>, Vec<usize>) {
    let out_side = side / 2;
    let mut pooled = vec![0.0; channels * out_side * out_side];
    let mut arg = vec![0; channels * out_side * out_side];
    for c in 0..channels {
        for py in 0..out_side {
            for px in 0..out_side {
                let mut best_idx = (c * side + 2 * py) * side + 2 * px;
                let mut best = pre[best_idx];
                for dy in 0..2 {
                    for dx in 0..2 {
                        let idx = (c * side + 2 * py + dy) * side + 2 * px + dx;
                        if pre[idx] > best {
                            best = pre[idx];
                            best_idx = idx;
                        }
                    }
                }
                let out = (c * out_side + py) * out_side + px;
                pooled[out] = best.max(0.0);
                arg[out] = best_idx;
            }
        }
    }
    (pooled, arg)
}

fn dense(weights: &[f64], biases: &[f64], input: &[f64], out_dim: usize) -> Vec<f64> {
    let in_dim = input.len();
    (0..out_dim)
        .map(|j| {
            let row = &weights[j * in_dim..(j + 1) * in_dim];
            biases[j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

pub(crate) struct ForwardCache {
    input: Vec<f64>,
    conv1_pre: Vec<f64>,
    pool1: Vec<f64>,
    pool1_arg: Vec<usize>,
    conv2_pre: Vec<f64>,
    pool2: Vec<f64>,
    pool2_arg: Vec<usize>,
    fc1_pre: Vec<f64>,
    fc2_pre: Vec<f64>,
    pub output: f64,
}

/// Mean squared angular deviation of raw outputs against labels.
pub fn batch_loss(model: &ForefModel, images: &[&[f64]], labels: &[f64]) -> f64 {
    let n = images.len() as f64;
    images
        .iter()
        .zip(labels)
        .map(|(img, &label)| {
            let d = signed_angle_diff(model.forward(img), label);
            d * d
        })
        .sum::<f64>()
        / n
}

/// Batch loss plus analytic gradients of it w.r.t. every parameter.
pub fn batch_gradients(
    model: &ForefModel,
    images: &[&[f64]],
    labels: &[f64],
) -> (f64, Vec<Vec<f64>>) {
    let n = images.len() as f64;
    let mut grads = ForefModel::zero_grads();
    let mut loss_acc = 0.0;
    for (img, &label) in images.iter().zip(labels) {
        let cache = model.forward_cached(img);
        let d = signed_angle_diff(cache.output, label);
        loss_acc += d * d;
        model.backward(&cache, 2.0 * d / n, &mut grads);
    }
    (loss_acc / n, grads)
}

/// Central finite difference of the batch loss w.r.t. one parameter.
pub fn numeric_gradient(
    model: &mut ForefModel,
    images: &[&[f64]],
    labels: &[f64],
    tensor: usize,
    index: usize,
    h: f64,
) -> f64 {
    let original = model.param(tensor, index);
    model.set_param(tensor, index, original + h);
    let plus = batch_loss(model, images, labels);
    model.set_param(tensor, index, original - h);
    let minus = batch_loss(model, images, labels);
    model.set_param(tensor, index, original);
    (plus - minus) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn random_batch(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = (0..n)
            .map(|_| (0..INPUT_SIDE * INPUT_SIDE).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let labels = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        (images, labels)
    }

    #[test]
    fn zero_weights_output_zero() {
        let model = ForefModel::zeroed(ModelKind::Front);
        let (images, _) = random_batch(2, 1);
        for img in &images {
            assert_eq!(model.forward(img), 0.0);
        }
    }

    #[test]
    fn forward_is_deterministic_and_finite() {
        let model = ForefModel::new(ModelKind::Front, 7);
        let (images, _) = random_batch(2, 2);
        let a = model.forward(&images[0]);
        let b = model.forward(&images[0]);
        assert_eq!(a, b);
        assert!(a.is_finite());
        assert_ne!(model.forward(&images[0]), model.forward(&images[1]));
    }

    #[test]
    #[should_panic(expected = "28x28")]
    fn wrong_input_shape_panics() {
        let model = ForefModel::zeroed(ModelKind::Front);
        model.forward(&[0.0; 100]);
    }

    #[test]
    fn gradients_match_finite_differences_on_sampled_params() {
        let mut model = ForefModel::new(ModelKind::Front, 11);
        let (images, labels) = random_batch(3, 3);
        let image_refs: Vec<&[f64]> = images.iter().map(|v| v.as_slice()).collect();
        let (_, grads) = batch_gradients(&model, &image_refs, &labels);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for tensor in 0..TENSOR_COUNT {
            // inactive ReLU paths give zero on both sides; sample enough
            // indices that every tensor still yields live comparisons
            let mut live_here = 0;
            for _ in 0..8 {
                let index = rng.random_range(0..ForefModel::tensor_len(tensor));
                let analytic = grads[tensor][index];
                let numeric =
                    numeric_gradient(&mut model, &image_refs, &labels, tensor, index, 1e-4);
                if analytic.abs() < 1e-10 && numeric.abs() < 1e-10 {
                    continue;
                }
                // a relu or pool-argmax kink inside the probe window makes the
                // difference quotient step-size dependent; such points are not
                // differentiable and say nothing about the backward pass
                let refined =
                    numeric_gradient(&mut model, &image_refs, &labels, tensor, index, 2e-5);
                let steps_agree = (numeric - refined).abs()
                    / numeric.abs().max(refined.abs()).max(1e-10)
                    <= 1e-3;
                if !steps_agree {
                    continue;
                }
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
                assert!(
                    rel <= 1e-3,
                    "tensor {tensor} index {index}: analytic {analytic}, numeric {numeric}"
                );
                live_here += 1;
            }
            assert!(live_here >= 1, "tensor {tensor}: no live parameters sampled");
            checked += live_here;
        }
        assert!(checked >= 40, "too few live parameters checked: {checked}");
    }

    #[test]
    fn adam_reduces_loss_on_fixed_batch() {
        let mut model = ForefModel::new(ModelKind::Front, 13);
        let (images, labels) = random_batch(4, 17);
        let image_refs: Vec<&[f64]> = images.iter().map(|v| v.as_slice()).collect();
        let config = TrainConfig { learning_rate: 1e-3, ..TrainConfig::default() };
        let before = batch_loss(&model, &image_refs, &labels);
        for _ in 0..50 {
            let (_, grads) = batch_gradients(&model, &image_refs, &labels);
            model.adam_step(&grads, &config);
        }
        let after = batch_loss(&model, &image_refs, &labels);
        assert!(after < before * 0.5, "loss {before} -> {after}");
    }

    #[test]
    fn weights_round_trip_through_file() {
        let model = ForefModel::new(ModelKind::Left, 23);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        model.write_weights(&path).unwrap();
        let loaded = ForefModel::read_weights(ModelKind::Left, &path).unwrap();
        let (images, _) = random_batch(1, 29);
        // f32 storage rounds the parameters
        assert!((model.forward(&images[0]) - loaded.forward(&images[0])).abs() < 1e-3);
    }

    #[test]
    fn truncated_weights_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        std::fs::write(&path, b"FOREF1\x0a\x00\x00\x00").unwrap();
        assert!(ForefModel::read_weights(ModelKind::Front, &path).is_err());
    }
}
