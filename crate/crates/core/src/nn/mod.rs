//! Parameter storage, layers, and the encoder/decoder builders.
//!
//! The encoder is two stride-2 convolutions, a stack of residual blocks, one
//! more stride-2 convolution, then two fully-connected layers producing the
//! latent vector. The decoder mirrors it layer for layer with transposed
//! convolutions. Leaky rectifiers (slope 0.2) follow every layer except the
//! latent and the final image output.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;

use rand::Rng;

use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};

pub const LEAKY_SLOPE: f32 = 0.2;

pub type ParamId = usize;

pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Vec<f32>,
}

/// Named parameters with gradient buffers, in registration order.
#[derive(Default)]
pub struct ParamStore {
    params: Vec<Param>,
    grads_ready: bool,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let grad = vec![0.0; value.len()];
        self.params.push(Param { name: name.into(), value, grad });
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id].value
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id].name
    }

    pub fn grad(&self, id: ParamId) -> &[f32] {
        &self.params[id].grad
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
        self.grads_ready = false;
    }

    /// Pull parameter gradients out of a completed backward pass; gradients
    /// accumulate so several tapes may contribute to one optimizer step.
    pub fn absorb_grads(&mut self, tape: &Tape) {
        for (pid, g) in tape.param_grads() {
            for (d, s) in self.params[pid].grad.iter_mut().zip(g) {
                *d += s;
            }
        }
        self.grads_ready = true;
    }

    /// Records for checkpointing, in registration order.
    pub fn records(&self) -> Vec<(String, Tensor)> {
        self.params.iter().map(|p| (p.name.clone(), p.value.clone())).collect()
    }

    /// Overwrite parameter values from named records; shapes must match.
    pub fn restore(&mut self, records: &[(String, Tensor)]) -> Result<()> {
        for p in &mut self.params {
            let rec = records
                .iter()
                .find(|(n, _)| n == &p.name)
                .ok_or_else(|| Error::CkptMissing(p.name.clone()))?;
            if rec.1.shape() != p.value.shape() {
                return Err(Error::Dimension {
                    axis: 0,
                    expected: p.value.len(),
                    actual: rec.1.len(),
                    context: format!("checkpoint record {}", p.name),
                });
            }
            p.value = rec.1.clone();
        }
        Ok(())
    }
}

/// Per-step graph builder: memoizes one tape leaf per parameter.
pub struct GraphBuilder {
    pub tape: Tape,
    bound: Vec<Option<NodeId>>,
}

impl GraphBuilder {
    pub fn new(store: &ParamStore) -> Self {
        Self { tape: Tape::new(), bound: vec![None; store.len()] }
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        if let Some(node) = self.bound[id] {
            return node;
        }
        let node = self.tape.param(store.value(id).clone(), id);
        self.bound[id] = Some(node);
        node
    }

    /// Tape leaf a parameter was bound to, if it participated in this graph.
    pub fn bound_node(&self, id: ParamId) -> Option<NodeId> {
        self.bound.get(id).copied().flatten()
    }

    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.tape.leaf(value)
    }
}

fn fan_in_uniform<R: Rng>(store: &mut ParamStore, rng: &mut R, name: String, shape: &[usize], fan_in: usize) -> ParamId {
    let bound = 1.0 / (fan_in as f32).sqrt();
    store.add(name, Tensor::rand_uniform(shape, -bound, bound, rng))
}

#[derive(Clone, Copy, Debug)]
pub struct Conv2dLayer {
    pub w: ParamId,
    pub b: ParamId,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2dLayer {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        c_out: usize,
        c_in: usize,
        k: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let fan_in = c_in * k * k;
        let w = fan_in_uniform(store, rng, format!("{name}.weight"), &[c_out, c_in, k, k], fan_in);
        let b = fan_in_uniform(store, rng, format!("{name}.bias"), &[c_out], fan_in);
        Self { w, b, stride, pad }
    }

    pub fn apply(&self, g: &mut GraphBuilder, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let w = g.param(store, self.w);
        let b = g.param(store, self.b);
        let y = g.tape.conv2d(x, w, self.stride, self.pad)?;
        g.tape.add_chan_bias(y, b)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConvT2dLayer {
    pub w: ParamId,
    pub b: ParamId,
    pub stride: usize,
    pub pad: usize,
}

impl ConvT2dLayer {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: usize,
        pad: usize,
    ) -> Self {
        let fan_in = c_in * k * k;
        let w = fan_in_uniform(store, rng, format!("{name}.weight"), &[c_in, c_out, k, k], fan_in);
        let b = fan_in_uniform(store, rng, format!("{name}.bias"), &[c_out], fan_in);
        Self { w, b, stride, pad }
    }

    pub fn apply(&self, g: &mut GraphBuilder, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let w = g.param(store, self.w);
        let b = g.param(store, self.b);
        let y = g.tape.conv2d_transpose(x, w, self.stride, self.pad)?;
        g.tape.add_chan_bias(y, b)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DenseLayer {
    pub w: ParamId,
    pub b: ParamId,
}

impl DenseLayer {
    pub fn init<R: Rng>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        dim_in: usize,
        dim_out: usize,
    ) -> Self {
        let w = fan_in_uniform(store, rng, format!("{name}.weight"), &[dim_in, dim_out], dim_in);
        let b = fan_in_uniform(store, rng, format!("{name}.bias"), &[dim_out], dim_in);
        Self { w, b }
    }

    pub fn apply(&self, g: &mut GraphBuilder, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let w = g.param(store, self.w);
        let b = g.param(store, self.b);
        let y = g.tape.matmul(x, w)?;
        g.tape.add_row_bias(y, b)
    }
}

/// Shape-preserving residual block: `x + conv(lrelu(conv(x)))`.
#[derive(Clone, Copy, Debug)]
pub struct ResBlock {
    pub conv1: Conv2dLayer,
    pub conv2: Conv2dLayer,
}

impl ResBlock {
    pub fn init<R: Rng>(store: &mut ParamStore, rng: &mut R, name: &str, channels: usize) -> Self {
        Self {
            conv1: Conv2dLayer::init(store, rng, &format!("{name}.conv1"), channels, channels, 3, 1, 1),
            conv2: Conv2dLayer::init(store, rng, &format!("{name}.conv2"), channels, channels, 3, 1, 1),
        }
    }

    pub fn apply(&self, g: &mut GraphBuilder, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let h = self.conv1.apply(g, store, x)?;
        let h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        let h = self.conv2.apply(g, store, h)?;
        g.tape.add(x, h)
    }
}

/// Shared encoder/decoder geometry. The decoder mirrors the encoder layer for
/// layer, so one description covers both.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetSpec {
    pub extent: usize,
    pub in_channels: usize,
    pub latent_dim: usize,
    pub channel_scale: usize,
    pub residual_blocks: usize,
}

impl NetSpec {
    pub const CUMULATIVE_STRIDE: usize = 8; // three stride-2 layers

    pub fn new(extent: usize, in_channels: usize, latent_dim: usize, channel_scale: usize, residual_blocks: usize) -> Result<Self> {
        let spec = Self { extent, in_channels, latent_dim, channel_scale, residual_blocks };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.extent == 0 || self.extent % Self::CUMULATIVE_STRIDE != 0 {
            return Err(Error::ExtentStride { extent: self.extent, stride: Self::CUMULATIVE_STRIDE });
        }
        if self.in_channels == 0 || self.latent_dim == 0 || self.channel_scale == 0 {
            return Err(Error::Config("net spec dims must be positive".into()));
        }
        Ok(())
    }

    pub fn c1(&self) -> usize {
        self.channel_scale
    }

    pub fn c2(&self) -> usize {
        2 * self.channel_scale
    }

    pub fn c3(&self) -> usize {
        4 * self.channel_scale
    }

    pub fn spatial(&self) -> usize {
        self.extent / Self::CUMULATIVE_STRIDE
    }

    pub fn flat(&self) -> usize {
        self.c3() * self.spatial() * self.spatial()
    }

    pub fn hidden(&self) -> usize {
        2 * self.latent_dim
    }
}

pub struct Encoder {
    pub spec: NetSpec,
    conv1: Conv2dLayer,
    conv2: Conv2dLayer,
    res: Vec<ResBlock>,
    conv3: Conv2dLayer,
    fc1: DenseLayer,
    fc2: DenseLayer,
}

impl Encoder {
    pub fn build<R: Rng>(store: &mut ParamStore, rng: &mut R, spec: NetSpec, prefix: &str) -> Result<Self> {
        spec.validate()?;
        let conv1 = Conv2dLayer::init(store, rng, &format!("{prefix}.conv1"), spec.c1(), spec.in_channels, 4, 2, 1);
        let conv2 = Conv2dLayer::init(store, rng, &format!("{prefix}.conv2"), spec.c2(), spec.c1(), 4, 2, 1);
        let res = (1..=spec.residual_blocks)
            .map(|i| ResBlock::init(store, rng, &format!("{prefix}.res{i}"), spec.c2()))
            .collect();
        let conv3 = Conv2dLayer::init(store, rng, &format!("{prefix}.conv3"), spec.c3(), spec.c2(), 4, 2, 1);
        let fc1 = DenseLayer::init(store, rng, &format!("{prefix}.fc1"), spec.flat(), spec.hidden());
        let fc2 = DenseLayer::init(store, rng, &format!("{prefix}.fc2"), spec.hidden(), spec.latent_dim);
        Ok(Self { spec, conv1, conv2, res, conv3, fc1, fc2 })
    }

    /// `[N,C,E,E] -> [N,d]`, no activation on the latent.
    pub fn apply(&self, g: &mut GraphBuilder, store: &ParamStore, x: NodeId) -> Result<NodeId> {
        let n = g.tape.value(x).shape()[0];
        let h = self.conv1.apply(g, store, x)?;
        let h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        let h = self.conv2.apply(g, store, h)?;
        let mut h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        for rb in &self.res {
            h = rb.apply(g, store, h)?;
        }
        let h = self.conv3.apply(g, store, h)?;
        let h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        let h = g.tape.reshape(h, &[n, self.spec.flat()])?;
        let h = self.fc1.apply(g, store, h)?;
        let h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        self.fc2.apply(g, store, h)
    }
}

pub struct Decoder {
    pub spec: NetSpec,
    fc1: DenseLayer,
    fc2: DenseLayer,
    deconv1: ConvT2dLayer,
    res: Vec<ResBlock>,
    deconv2: ConvT2dLayer,
    deconv3: ConvT2dLayer,
}

impl Decoder {
    pub fn build<R: Rng>(store: &mut ParamStore, rng: &mut R, spec: NetSpec, prefix: &str) -> Result<Self> {
        spec.validate()?;
        let fc1 = DenseLayer::init(store, rng, &format!("{prefix}.fc1"), spec.latent_dim, spec.hidden());
        let fc2 = DenseLayer::init(store, rng, &format!("{prefix}.fc2"), spec.hidden(), spec.flat());
        let deconv1 = ConvT2dLayer::init(store, rng, &format!("{prefix}.deconv1"), spec.c3(), spec.c2(), 4, 2, 1);
        let res = (1..=spec.residual_blocks)
            .map(|i| ResBlock::init(store, rng, &format!("{prefix}.res{i}"), spec.c2()))
            .collect();
        let deconv2 = ConvT2dLayer::init(store, rng, &format!("{prefix}.deconv2"), spec.c2(), spec.c1(), 4, 2, 1);
        let deconv3 = ConvT2dLayer::init(store, rng, &format!("{prefix}.deconv3"), spec.c1(), spec.in_channels, 4, 2, 1);
        Ok(Self { spec, fc1, fc2, deconv1, res, deconv2, deconv3 })
    }

    /// `[N,d] -> [N,C,E,E]`, linear output.
    pub fn apply(&self, g: &mut GraphBuilder, store: &ParamStore, z: NodeId) -> Result<NodeId> {
        let n = g.tape.value(z).shape()[0];
        let h = self.fc1.apply(g, store, z)?;
        let h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        let h = self.fc2.apply(g, store, h)?;
        let h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        let s = self.spec.spatial();
        let h = g.tape.reshape(h, &[n, self.spec.c3(), s, s])?;
        let h = self.deconv1.apply(g, store, h)?;
        let mut h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        for rb in &self.res {
            h = rb.apply(g, store, h)?;
        }
        let h = self.deconv2.apply(g, store, h)?;
        let h = g.tape.leaky_relu(h, LEAKY_SLOPE)?;
        self.deconv3.apply(g, store, h)
    }
}

/// Build a matched encoder/decoder pair with deterministic initialization.
pub fn build_autoencoder(spec: NetSpec, seed: u64) -> Result<(ParamStore, Encoder, Decoder)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let encoder = Encoder::build(&mut store, &mut rng, spec, "encoder")?;
    let decoder = Decoder::build(&mut store, &mut rng, spec, "decoder")?;
    Ok((store, encoder, decoder))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec32() -> NetSpec {
        NetSpec::new(32, 3, 100, 1, 3).unwrap()
    }

    #[test]
    fn encoder_decoder_shapes_roundtrip() {
        let (store, enc, dec) = build_autoencoder(spec32(), 11).unwrap();
        let mut g = GraphBuilder::new(&store);
        let x = g.input(Tensor::zeros(&[2, 3, 32, 32]));
        let z = enc.apply(&mut g, &store, x).unwrap();
        assert_eq!(g.tape.value(z).shape(), &[2, 100]);
        let xr = dec.apply(&mut g, &store, z).unwrap();
        assert_eq!(g.tape.value(xr).shape(), &[2, 3, 32, 32]);
    }

    #[test]
    fn same_seed_gives_bit_identical_parameters() {
        let (a, _, _) = build_autoencoder(spec32(), 5).unwrap();
        let (b, _, _) = build_autoencoder(spec32(), 5).unwrap();
        assert_eq!(a.len(), b.len());
        for (pa, pb) in a.iter().zip(b.iter()) {
            assert_eq!(pa.name, pb.name);
            assert_eq!(pa.value.data(), pb.value.data());
        }
        let (c, _, _) = build_autoencoder(spec32(), 6).unwrap();
        assert!(a.iter().zip(c.iter()).any(|(x, y)| x.value.data() != y.value.data()));
    }

    #[test]
    fn paper_scale_spec_reaches_100_dim_latent() {
        let spec = NetSpec::new(128, 3, 100, 4, 3).unwrap();
        let (store, enc, _) = build_autoencoder(spec, 1).unwrap();
        let mut g = GraphBuilder::new(&store);
        let x = g.input(Tensor::zeros(&[1, 3, 128, 128]));
        let z = enc.apply(&mut g, &store, x).unwrap();
        assert_eq!(g.tape.value(z).shape(), &[1, 100]);
    }

    #[test]
    fn extent_must_divide_cumulative_stride() {
        assert!(matches!(
            NetSpec::new(30, 3, 100, 1, 3),
            Err(Error::ExtentStride { .. })
        ));
    }

    #[test]
    fn zeroed_residual_block_is_identity() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::new();
        let rb = ResBlock::init(&mut store, &mut rng, "res", 8);
        for id in [rb.conv1.w, rb.conv1.b, rb.conv2.w, rb.conv2.b] {
            store.value_mut(id).data_mut().fill(0.0);
        }
        let mut g = GraphBuilder::new(&store);
        let x = g.input(Tensor::rand_uniform(&[2, 8, 16, 16], -1.0, 1.0, &mut rng));
        let y = rb.apply(&mut g, &store, x).unwrap();
        assert_eq!(g.tape.value(y).shape(), &[2, 8, 16, 16]);
        assert_eq!(g.tape.value(y).data(), g.tape.value(x).data());
    }

    #[test]
    fn restore_rejects_missing_and_mismatched_records() {
        let (mut store, _, _) = build_autoencoder(spec32(), 2).unwrap();
        assert!(matches!(store.restore(&[]), Err(Error::CkptMissing(_))));
        let mut records = store.records();
        records[0].1 = Tensor::zeros(&[1]);
        assert!(store.restore(&records).is_err());
    }
}
