use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Number of samples processed together by the block kernels.
pub const LANES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the post-activation value, which is all
    /// the tape stores.
    #[inline]
    fn derivative_from_post(self, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if post > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - post * post,
            Activation::Identity => 1.0,
        }
    }
}

/// One affine layer with activation; weights are row-major `out_dim x in_dim`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub act: Activation,
}

impl Layer {
    fn new(in_dim: usize, out_dim: usize, act: Activation, rng: &mut impl Rng) -> Self {
        // He initialization for relu, Xavier-style for tanh/identity.
        let std = match act {
            Activation::Relu => (2.0 / in_dim as f64).sqrt(),
            _ => (1.0 / in_dim as f64).sqrt(),
        };
        let w = (0..in_dim * out_dim)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * std
            })
            .collect();
        Layer { in_dim, out_dim, w, b: vec![0.0; out_dim], act }
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// A feed-forward chain of dense layers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
}

/// Recorded primal values from a block forward pass: the input block and each
/// layer's post-activation block, all lane-major (`value[feature * LANES + lane]`).
#[derive(Clone, Debug)]
pub struct BlockTape {
    input: Vec<f64>,
    posts: Vec<Vec<f64>>,
}

impl DenseNet {
    /// Build a network from `dims = [in, h1, ..., out]` with one activation tag
    /// per layer (`dims.len() - 1` of them).
    pub fn new(dims: &[usize], acts: &[Activation], rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "DenseNet needs at least one layer");
        assert_eq!(acts.len(), dims.len() - 1, "one activation per layer required");
        let layers = dims
            .windows(2)
            .zip(acts)
            .map(|(d, &act)| Layer::new(d[0], d[1], act, rng))
            .collect();
        DenseNet { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty net").out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Check the chained-width invariant; panics on violation.
    pub fn assert_consistent(&self) {
        for pair in self.layers.windows(2) {
            assert_eq!(
                pair[0].out_dim, pair[1].in_dim,
                "adjacent layer widths must be compatible"
            );
        }
    }

    /// Single-sample forward pass.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_dim(), "forward: input width mismatch");
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            next.clear();
            next.reserve(layer.out_dim);
            for o in 0..layer.out_dim {
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                let z = layer.b[o] + dot(row, &cur);
                next.push(layer.act.apply(z));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Forward pass over a lane-block of [`LANES`] samples.
    ///
    /// `input` is lane-major with length `input_dim * LANES`; the result is
    /// lane-major with length `output_dim * LANES`. Unused lanes should be
    /// zero-padded by the caller (their outputs are ignored).
    pub fn forward_block(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(
            input.len(),
            self.input_dim() * LANES,
            "forward_block: input block size mismatch"
        );
        let mut cur = input.to_vec();
        for layer in &self.layers {
            cur = block_layer_forward(layer, &cur);
        }
        cur
    }

    /// Forward pass over a lane-block, recording primals for `backward_block`.
    pub fn forward_block_traced(&self, input: &[f64]) -> (Vec<f64>, BlockTape) {
        assert_eq!(
            input.len(),
            self.input_dim() * LANES,
            "forward_block_traced: input block size mismatch"
        );
        let mut posts = Vec::with_capacity(self.layers.len());
        let mut cur = input.to_vec();
        for layer in &self.layers {
            cur = block_layer_forward(layer, &cur);
            posts.push(cur.clone());
        }
        let out = cur;
        (out, BlockTape { input: input.to_vec(), posts })
    }

    /// Reverse-mode pass over a lane-block.
    ///
    /// `output_grad` is the lane-major gradient of the loss with respect to the
    /// network output (`output_dim * LANES`). Parameter gradients, summed over
    /// lanes, are accumulated into `grads` (flat layout: layer 0 weights
    /// row-major, layer 0 biases, layer 1 weights, ...). Returns the lane-major
    /// gradient with respect to the input block.
    pub fn backward_block(
        &self,
        tape: &BlockTape,
        output_grad: &[f64],
        grads: &mut [f64],
    ) -> Vec<f64> {
        assert_eq!(tape.posts.len(), self.layers.len(), "backward_block: stale tape");
        assert_eq!(tape.input.len(), self.input_dim() * LANES, "backward_block: stale tape");
        assert_eq!(
            output_grad.len(),
            self.output_dim() * LANES,
            "backward_block: output_grad size mismatch"
        );
        assert_eq!(grads.len(), self.param_count(), "backward_block: grads size mismatch");

        // Flat offset of each layer's parameters.
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.param_count();
        }

        let mut dout = output_grad.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            assert_eq!(
                tape.posts[k].len(),
                layer.out_dim * LANES,
                "backward_block: tape does not match this network"
            );
            let x_in: &[f64] = if k == 0 { &tape.input } else { &tape.posts[k - 1] };
            let post = &tape.posts[k];

            // dz = dout * act'(post), lane-wise.
            let mut dz = vec![0.0; layer.out_dim * LANES];
            for o in 0..layer.out_dim {
                for l in 0..LANES {
                    let idx = o * LANES + l;
                    dz[idx] = dout[idx] * layer.act.derivative_from_post(post[idx]);
                }
            }

            let (gw, gb) = grads[offsets[k]..offsets[k] + layer.param_count()]
                .split_at_mut(layer.w.len());
            for o in 0..layer.out_dim {
                let dzo = &dz[o * LANES..(o + 1) * LANES];
                gb[o] += lane_sum(dzo);
                let gw_row = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for i in 0..layer.in_dim {
                    gw_row[i] += lane_dot(dzo, &x_in[i * LANES..(i + 1) * LANES]);
                }
            }

            // dx[i][l] = sum_o w[o][i] * dz[o][l]
            let mut dx = vec![0.0; layer.in_dim * LANES];
            for o in 0..layer.out_dim {
                let dzo = &dz[o * LANES..(o + 1) * LANES];
                let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for i in 0..layer.in_dim {
                    let wv = row[i];
                    let dst = &mut dx[i * LANES..(i + 1) * LANES];
                    for l in 0..LANES {
                        dst[l] += wv * dzo[l];
                    }
                }
            }
            dout = dx;
        }
        dout
    }

    /// Copy all parameters into one flat vector (layer-major, weights then bias).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    /// Overwrite all parameters from a flat vector in `flat_params` order.
    pub fn set_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "set_flat_params: length mismatch");
        let mut off = 0;
        for layer in &mut self.layers {
            let wn = layer.w.len();
            layer.w.copy_from_slice(&params[off..off + wn]);
            off += wn;
            let bn = layer.b.len();
            layer.b.copy_from_slice(&params[off..off + bn]);
            off += bn;
        }
    }

    /// Visit every parameter mutably in `flat_params` order.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        for layer in &mut self.layers {
            for w in &mut layer.w {
                f(idx, w);
                idx += 1;
            }
            for b in &mut layer.b {
                f(idx, b);
                idx += 1;
            }
        }
    }
}

/// Pack up to [`LANES`] equally-sized samples into a zero-padded lane-major block.
pub fn pack_block(samples: &[&[f64]]) -> Vec<f64> {
    assert!(!samples.is_empty() && samples.len() <= LANES, "pack_block: 1..=LANES samples");
    let dim = samples[0].len();
    assert!(samples.iter().all(|s| s.len() == dim), "pack_block: ragged samples");
    let mut block = vec![0.0; dim * LANES];
    for (l, s) in samples.iter().enumerate() {
        for (i, &v) in s.iter().enumerate() {
            block[i * LANES + l] = v;
        }
    }
    block
}

/// Extract one lane from a lane-major block of feature dimension `dim`.
pub fn unpack_lane(block: &[f64], lane: usize, dim: usize) -> Vec<f64> {
    assert!(lane < LANES, "unpack_lane: lane out of range");
    assert_eq!(block.len(), dim * LANES, "unpack_lane: block size mismatch");
    (0..dim).map(|i| block[i * LANES + lane]).collect()
}

fn block_layer_forward(layer: &Layer, input: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; layer.out_dim * LANES];
    for o in 0..layer.out_dim {
        let mut acc = [layer.b[o]; LANES];
        let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
        for i in 0..layer.in_dim {
            let wv = row[i];
            let xs = &input[i * LANES..(i + 1) * LANES];
            for l in 0..LANES {
                acc[l] += wv * xs[l];
            }
        }
        let dst = &mut out[o * LANES..(o + 1) * LANES];
        for l in 0..LANES {
            dst[l] = layer.act.apply(acc[l]);
        }
    }
    out
}

/// Dot product with four accumulators; fixed summation order for determinism.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let k = c * 4;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut rest = 0.0;
    for k in chunks * 4..n {
        rest += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + rest
}

#[inline]
fn lane_sum(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in x {
        s += v;
    }
    s
}

#[inline]
fn lane_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for l in 0..LANES {
        s += a[l] * b[l];
    }
    s
}
