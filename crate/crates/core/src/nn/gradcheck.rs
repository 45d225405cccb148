//! Central finite-difference gradient verification.
//!
//! The difference quotient is evaluated through the tape's naive f64
//! reference interpreter, so quotient noise stays far below the tolerance.
//! Kink handling: leaky rectifiers and the l1 loss are piecewise linear, and
//! the quotient only approximates the derivative when both perturbed
//! evaluations stay on the same branch everywhere; coordinates whose +eps and
//! -eps runs report different kink signatures are excluded, not compared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GraphBuilder, ParamStore, ResBlock};
use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::Result;

pub const FD_EPS: f64 = 1e-3;
pub const FD_TOL: f32 = 1e-3;
/// Differences below this count as agreement outright; both sides are zero to
/// working precision and a ratio of rounding residues means nothing.
const FD_ABS_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct FdOutcome {
    pub max_rel: f32,
    pub checked: usize,
    pub skipped_kinks: usize,
}

impl FdOutcome {
    pub fn merge(&mut self, other: &FdOutcome) {
        self.max_rel = self.max_rel.max(other.max_rel);
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
    }

    pub fn passes(&self, tol: f32) -> bool {
        self.checked > 0 && self.max_rel <= tol
    }
}

/// Compare the backward-pass gradient of `leaf` (already populated on `tape`)
/// against central differences of the f64 reference evaluation of `loss`.
pub fn fd_check_node(
    tape: &Tape,
    leaf: NodeId,
    loss: NodeId,
    coords: &[usize],
    eps: f64,
) -> Result<FdOutcome> {
    let analytic = tape
        .grad(leaf)
        .expect("fd_check_node: leaf has no gradient; run backward first");
    let theta0: Vec<f64> = tape.value(leaf).data().iter().map(|&v| v as f64).collect();

    let mut out = FdOutcome::default();
    let mut theta = theta0.clone();
    for &c in coords {
        theta[c] = theta0[c] + eps;
        let (lp, sig_p) = tape.eval_f64(&[(leaf, &theta)], loss)?;
        theta[c] = theta0[c] - eps;
        let (lm, sig_m) = tape.eval_f64(&[(leaf, &theta)], loss)?;
        theta[c] = theta0[c];
        if sig_p != sig_m {
            out.skipped_kinks += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * eps);
        let a = analytic[c] as f64;
        let abs = (fd - a).abs();
        let rel = if abs <= FD_ABS_FLOOR {
            0.0
        } else {
            abs / fd.abs().max(a.abs()).max(FD_ABS_FLOOR)
        };
        out.max_rel = out.max_rel.max(rel as f32);
        out.checked += 1;
    }
    Ok(out)
}

/// Deterministic subset of coordinate indices, at most `max` of them.
pub fn coord_subset(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let stride = len.div_ceil(max);
    (0..len).step_by(stride).collect()
}

#[derive(Clone, Debug)]
pub struct LayerCheck {
    pub name: &'static str,
    pub instances: usize,
    pub outcome: FdOutcome,
}

/// A smooth scalar loss over an output tensor: sum(y * r) with a fixed random
/// projection r, sensitive to every output without adding kinks.
fn projected_loss(tape: &mut Tape, y: NodeId, r: &Tensor) -> Result<NodeId> {
    let rn = tape.leaf(r.clone());
    let prod = tape.mul(y, rn)?;
    tape.sum_all(prod)
}

fn check_binary_op(
    rng: &mut ChaCha8Rng,
    x_shape: &[usize],
    w_shape: &[usize],
    forward: impl Fn(&mut Tape, NodeId, NodeId) -> Result<NodeId>,
) -> Result<FdOutcome> {
    let mut tape = Tape::new();
    let x = tape.var(Tensor::rand_uniform(x_shape, -1.0, 1.0, rng));
    let w = tape.var(Tensor::rand_uniform(w_shape, -1.0, 1.0, rng));
    let y = forward(&mut tape, x, w)?;
    let r = Tensor::rand_uniform(tape.value(y).shape(), -1.0, 1.0, rng);
    let loss = projected_loss(&mut tape, y, &r)?;
    tape.backward(loss)?;

    let mut outcome = FdOutcome::default();
    let nx = tape.value(x).len();
    let nw = tape.value(w).len();
    outcome.merge(&fd_check_node(&tape, x, loss, &coord_subset(nx, 12), FD_EPS)?);
    outcome.merge(&fd_check_node(&tape, w, loss, &coord_subset(nw, 12), FD_EPS)?);
    Ok(outcome)
}

fn check_conv2d(rng: &mut ChaCha8Rng) -> Result<FdOutcome> {
    let c = rng.random_range(1..=3usize);
    let f = rng.random_range(1..=3usize);
    let k = rng.random_range(1..=3usize);
    let s = rng.random_range(1..=2usize);
    let p = rng.random_range(0..=1usize);
    let h = rng.random_range(k.max(3)..=6usize);
    check_binary_op(rng, &[1, c, h, h], &[f, c, k, k], |t, x, w| t.conv2d(x, w, s, p))
}

fn check_conv2d_transpose(rng: &mut ChaCha8Rng) -> Result<FdOutcome> {
    let c = rng.random_range(1..=3usize);
    let f = rng.random_range(1..=3usize);
    let k = rng.random_range(2..=3usize);
    let s = rng.random_range(1..=2usize);
    let p = rng.random_range(0..=1usize.min(k - 1));
    let h = rng.random_range(2..=5usize);
    check_binary_op(rng, &[1, c, h, h], &[c, f, k, k], |t, x, w| {
        t.conv2d_transpose(x, w, s, p)
    })
}

fn check_dense(rng: &mut ChaCha8Rng) -> Result<FdOutcome> {
    let n = rng.random_range(1..=3usize);
    let i = rng.random_range(1..=5usize);
    let o = rng.random_range(1..=4usize);
    let mut tape = Tape::new();
    let x = tape.var(Tensor::rand_uniform(&[n, i], -1.0, 1.0, rng));
    let w = tape.var(Tensor::rand_uniform(&[i, o], -1.0, 1.0, rng));
    let b = tape.var(Tensor::rand_uniform(&[o], -1.0, 1.0, rng));
    let y = tape.matmul(x, w)?;
    let y = tape.add_row_bias(y, b)?;
    let r = Tensor::rand_uniform(&[n, o], -1.0, 1.0, rng);
    let loss = projected_loss(&mut tape, y, &r)?;
    tape.backward(loss)?;

    let mut outcome = FdOutcome::default();
    outcome.merge(&fd_check_node(&tape, x, loss, &coord_subset(n * i, 12), FD_EPS)?);
    outcome.merge(&fd_check_node(&tape, w, loss, &coord_subset(i * o, 12), FD_EPS)?);
    outcome.merge(&fd_check_node(&tape, b, loss, &coord_subset(o, 4), FD_EPS)?);
    Ok(outcome)
}

fn check_residual_block(rng: &mut ChaCha8Rng) -> Result<FdOutcome> {
    let c = rng.random_range(1..=2usize);
    let h = rng.random_range(3..=5usize);
    let mut store = ParamStore::new();
    let rb = ResBlock::init(&mut store, rng, "res", c);

    let mut g = GraphBuilder::new(&store);
    let x = g.tape.var(Tensor::rand_uniform(&[1, c, h, h], -1.0, 1.0, rng));
    let y = rb.apply(&mut g, &store, x)?;
    let r = Tensor::rand_uniform(g.tape.value(y).shape(), -1.0, 1.0, rng);
    let loss = projected_loss(&mut g.tape, y, &r)?;
    g.tape.backward(loss)?;

    let mut outcome = FdOutcome::default();
    let nx = g.tape.value(x).len();
    outcome.merge(&fd_check_node(&g.tape, x, loss, &coord_subset(nx, 10), FD_EPS)?);
    for pid in [rb.conv1.w, rb.conv1.b, rb.conv2.w, rb.conv2.b] {
        let leaf = g.bound_node(pid).expect("param bound in graph");
        let len = g.tape.value(leaf).len();
        outcome.merge(&fd_check_node(&g.tape, leaf, loss, &coord_subset(len, 8), FD_EPS)?);
    }
    Ok(outcome)
}

/// Run `instances` random checks per layer kind.
pub fn layer_suite(seed: u64, instances: usize) -> Result<Vec<LayerCheck>> {
    let mut reports = Vec::new();
    let kinds: [(&'static str, fn(&mut ChaCha8Rng) -> Result<FdOutcome>); 4] = [
        ("conv2d", check_conv2d),
        ("conv2d_transpose", check_conv2d_transpose),
        ("dense", check_dense),
        ("residual_block", check_residual_block),
    ];
    for (idx, (name, check)) in kinds.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64 * 7919));
        let mut outcome = FdOutcome::default();
        for _ in 0..instances {
            outcome.merge(&check(&mut rng)?);
        }
        reports.push(LayerCheck { name, instances, outcome });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_layer_matches_finite_differences() {
        for report in layer_suite(42, 20).unwrap() {
            assert!(
                report.outcome.passes(FD_TOL),
                "{}: max rel {} over {} coords ({} kink-skipped)",
                report.name,
                report.outcome.max_rel,
                report.outcome.checked,
                report.outcome.skipped_kinks
            );
        }
    }
}
