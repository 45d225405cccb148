//! Naive f64 re-evaluation of a recorded tape.
//!
//! This is the checking oracle for finite-difference gradient verification:
//! direct summation loops, no im2col and no GEMM, carried in f64 so the
//! difference quotient is not drowned by f32 forward rounding. It shares
//! nothing with the production kernels beyond the op definitions.

use super::{OpKind, Tape};
use crate::error::{Error, Result};

impl Tape {
    /// Recompute `target` in f64 with some leaf values replaced. Returns the
    /// scalar value and the kink signature (same layout as
    /// [`Tape::kink_signature`]) of this evaluation.
    pub fn eval_f64(&self, overrides: &[(usize, &[f64])], target: usize) -> Result<(f64, Vec<bool>)> {
        let mut values: Vec<Option<Vec<f64>>> = vec![None; target + 1];
        let mut signature = Vec::new();

        for id in 0..=target {
            let node = &self.nodes[id];
            let shape = node.value.shape();
            let out: Vec<f64> = match &node.op {
                OpKind::Leaf { .. } => {
                    if let Some((_, v)) = overrides.iter().find(|(n, _)| *n == id) {
                        v.to_vec()
                    } else {
                        node.value.data().iter().map(|&x| x as f64).collect()
                    }
                }
                OpKind::Conv2d { stride, pad } => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    let w = values[node.inputs[1]].as_ref().unwrap();
                    let xs = self.nodes[node.inputs[0]].value.shape();
                    let ws = self.nodes[node.inputs[1]].value.shape();
                    naive_conv2d(x, xs, w, ws, *stride, *pad, shape)
                }
                OpKind::ConvTranspose2d { stride, pad } => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    let w = values[node.inputs[1]].as_ref().unwrap();
                    let xs = self.nodes[node.inputs[0]].value.shape();
                    let ws = self.nodes[node.inputs[1]].value.shape();
                    naive_conv2d_transpose(x, xs, w, ws, *stride, *pad, shape)
                }
                OpKind::Matmul => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    let w = values[node.inputs[1]].as_ref().unwrap();
                    let xs = self.nodes[node.inputs[0]].value.shape();
                    let ws = self.nodes[node.inputs[1]].value.shape();
                    let (n, i, o) = (xs[0], xs[1], ws[1]);
                    let mut y = vec![0.0; n * o];
                    for row in 0..n {
                        for col in 0..o {
                            let mut acc = 0.0;
                            for t in 0..i {
                                acc += x[row * i + t] * w[t * o + col];
                            }
                            y[row * o + col] = acc;
                        }
                    }
                    y
                }
                OpKind::AddRowBias => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    let b = values[node.inputs[1]].as_ref().unwrap();
                    let o = b.len();
                    x.iter().enumerate().map(|(i, v)| v + b[i % o]).collect()
                }
                OpKind::AddChanBias => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    let b = values[node.inputs[1]].as_ref().unwrap();
                    let (c, hw) = (shape[1], shape[2] * shape[3]);
                    x.iter()
                        .enumerate()
                        .map(|(i, v)| v + b[(i / hw) % c])
                        .collect()
                }
                OpKind::LeakyRelu { slope } => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    signature.extend(x.iter().map(|&v| v >= 0.0));
                    x.iter()
                        .map(|&v| if v >= 0.0 { v } else { *slope as f64 * v })
                        .collect()
                }
                OpKind::Add => {
                    let a = values[node.inputs[0]].as_ref().unwrap();
                    let b = values[node.inputs[1]].as_ref().unwrap();
                    a.iter().zip(b).map(|(x, y)| x + y).collect()
                }
                OpKind::Mul => {
                    let a = values[node.inputs[0]].as_ref().unwrap();
                    let b = values[node.inputs[1]].as_ref().unwrap();
                    a.iter().zip(b).map(|(x, y)| x * y).collect()
                }
                OpKind::Scale { factor } => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    x.iter().map(|v| v * *factor as f64).collect()
                }
                OpKind::Reshape => values[node.inputs[0]].as_ref().unwrap().clone(),
                OpKind::BlockMix { blocks, classes } => {
                    let a = values[node.inputs[0]].as_ref().unwrap();
                    let b = values[node.inputs[1]].as_ref().unwrap();
                    let d = shape[1];
                    let mut y = a.clone();
                    for (i, &c) in classes.iter().enumerate() {
                        let (off, size) = blocks[c];
                        y[i * d + off..i * d + off + size]
                            .copy_from_slice(&b[i * d + off..i * d + off + size]);
                    }
                    y
                }
                OpKind::MeanAbsDiff => {
                    let a = values[node.inputs[0]].as_ref().unwrap();
                    let b = values[node.inputs[1]].as_ref().unwrap();
                    signature.extend(a.iter().zip(b).map(|(x, y)| x >= y));
                    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                    vec![sum / a.len() as f64]
                }
                OpKind::SoftmaxCrossEntropy { labels } => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    let k = self.nodes[node.inputs[0]].value.shape()[1];
                    let mut total = 0.0;
                    for (row, &label) in x.chunks(k).zip(labels) {
                        let maxv = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let lse = row.iter().map(|v| (v - maxv).exp()).sum::<f64>().ln() + maxv;
                        total += lse - row[label];
                    }
                    vec![total / labels.len() as f64]
                }
                OpKind::SumAll => {
                    let x = values[node.inputs[0]].as_ref().unwrap();
                    vec![x.iter().sum()]
                }
            };
            values[id] = Some(out);
        }

        let out = values[target].as_ref().unwrap();
        if out.len() != 1 {
            return Err(Error::NonScalarLoss {
                shape: self.nodes[target].value.shape().to_vec(),
            });
        }
        Ok((out[0], signature))
    }
}

fn naive_conv2d(
    x: &[f64],
    xs: &[usize],
    w: &[f64],
    ws: &[usize],
    stride: usize,
    pad: usize,
    out_shape: &[usize],
) -> Vec<f64> {
    let (n, c, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
    let (f, k) = (ws[0], ws[2]);
    let (ho, wo) = (out_shape[2], out_shape[3]);
    let mut y = vec![0.0; n * f * ho * wo];
    for ni in 0..n {
        for fi in 0..f {
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut acc = 0.0;
                    for ci in 0..c {
                        for ky in 0..k {
                            let iy = (oh * stride + ky) as isize - pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let ix = (ow * stride + kx) as isize - pad as isize;
                                if ix < 0 || ix >= wd as isize {
                                    continue;
                                }
                                acc += w[((fi * c + ci) * k + ky) * k + kx]
                                    * x[((ni * c + ci) * h + iy as usize) * wd + ix as usize];
                            }
                        }
                    }
                    y[((ni * f + fi) * ho + oh) * wo + ow] = acc;
                }
            }
        }
    }
    y
}

fn naive_conv2d_transpose(
    x: &[f64],
    xs: &[usize],
    w: &[f64],
    ws: &[usize],
    stride: usize,
    pad: usize,
    out_shape: &[usize],
) -> Vec<f64> {
    let (n, c, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
    let (f, k) = (ws[1], ws[2]);
    let (ho, wo) = (out_shape[2], out_shape[3]);
    let mut y = vec![0.0; n * f * ho * wo];
    for ni in 0..n {
        for ci in 0..c {
            for ih in 0..h {
                for iw in 0..wd {
                    let v = x[((ni * c + ci) * h + ih) * wd + iw];
                    for fi in 0..f {
                        let wrow = &w[((ci * f + fi) * k) * k..((ci * f + fi) * k + k) * k];
                        for ky in 0..k {
                            let oy = (ih * stride + ky) as isize - pad as isize;
                            if oy < 0 || oy >= ho as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let ox = (iw * stride + kx) as isize - pad as isize;
                                if ox < 0 || ox >= wo as isize {
                                    continue;
                                }
                                y[((ni * f + fi) * ho + oy as usize) * wo + ox as usize]
                                    += v * wrow[ky * k + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::super::{Tape, Tensor};
    use rand::SeedableRng;

    /// The f64 reference evaluation must agree with the production f32
    /// kernels to f32 accuracy on identical inputs.
    #[test]
    fn reference_matches_production_forward() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let mut t = Tape::new();
        let x = t.var(Tensor::rand_uniform(&[2, 2, 6, 6], -1.0, 1.0, &mut rng));
        let w1 = t.leaf(Tensor::rand_uniform(&[3, 2, 3, 3], -0.5, 0.5, &mut rng));
        let h = t.conv2d(x, w1, 2, 1).unwrap();
        let h = t.leaky_relu(h, 0.2).unwrap();
        let w2 = t.leaf(Tensor::rand_uniform(&[3, 2, 4, 4], -0.5, 0.5, &mut rng));
        let up = t.conv2d_transpose(h, w2, 2, 1).unwrap();
        let target = t.leaf(Tensor::rand_uniform(&[2, 2, 6, 6], -1.0, 1.0, &mut rng));
        let loss = t.mean_abs_diff(up, target).unwrap();

        let (v64, sig) = t.eval_f64(&[], loss).unwrap();
        let v32 = t.value(loss).item();
        assert!((v64 - v32 as f64).abs() < 1e-5, "{v64} vs {v32}");
        assert_eq!(sig, t.kink_signature());
    }
}
