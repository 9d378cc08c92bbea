//! Fully-connected Q-value approximator with inverted dropout.
//!
//! Forward/backward passes and SGD live here, all in double precision.
//! Dropout masks derive from an explicit `mask_seed`, so a forward pass
//! is a pure function of `(net, x, mode, mask_seed)` — eval mode never
//! samples masks at all. The affine kernels skip zero inputs, which pays
//! off on state vectors whose code/history block is sparse {0,1}.

use crate::rng::{self, domain};
use rand::Rng;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QNetError {
    #[error("bad architecture: {0}")]
    BadArchitecture(String),
    #[error("input length {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("stale cache: network has been updated since the forward pass")]
    StaleCache,
    #[error("gradient shapes do not match the network")]
    ShapeMismatch,
    #[error("corrupt model file: {0}")]
    CorruptModelFile(String),
    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub dropout_rate: f64,
}

#[derive(Debug, Clone)]
struct Layer {
    spec: LayerSpec,
    /// Input-major: weights[i * output_dim + o] multiplies input i into
    /// output o, so one input streams over contiguous outputs.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

/// Forward mode: training samples dropout masks from `mask_seed`,
/// evaluation is mask-free (inverted dropout scales at train time).
#[derive(Debug, Clone, Copy)]
pub enum ForwardMode {
    Train { mask_seed: u64 },
    Eval,
}

/// Per-parameter gradients, shape-congruent with the owning network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub(crate) d_weights: Vec<Vec<f64>>,
    pub(crate) d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zero(&mut self) {
        for w in &mut self.d_weights {
            w.fill(0.0);
        }
        for b in &mut self.d_biases {
            b.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.d_weights {
            for v in w.iter_mut() {
                *v *= factor;
            }
        }
        for b in &mut self.d_biases {
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn d_weights(&self, layer: usize) -> &[f64] {
        &self.d_weights[layer]
    }

    pub fn d_biases(&self, layer: usize) -> &[f64] {
        &self.d_biases[layer]
    }
}

/// Activations and mask factors recorded by a train-mode forward pass,
/// consumed exactly once by `backward`.
#[derive(Debug, Clone)]
pub struct Cache {
    net_version: u64,
    /// Input to each layer (layer 0 gets the state vector).
    layer_inputs: Vec<Vec<f64>>,
    /// d(output)/d(pre-activation) per unit: relu gate times the
    /// inverted-dropout mask scale; 1.0 on the linear output layer.
    act_factor: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// The Q-network: a chain of fully-connected layers ending in a linear
/// layer of `b + 1` action values.
#[derive(Debug, Clone)]
pub struct QNetwork {
    layers: Vec<Layer>,
    version: u64,
}

impl QNetwork {
    /// Standard spec chain: relu hidden layers with a shared dropout
    /// rate, linear output head.
    pub fn default_specs(
        input_dim: usize,
        num_actions: usize,
        hidden: &[usize],
        dropout: f64,
    ) -> Vec<LayerSpec> {
        let mut specs = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input_dim;
        for &h in hidden {
            specs.push(LayerSpec {
                input_dim: prev,
                output_dim: h,
                activation: Activation::Relu,
                dropout_rate: dropout,
            });
            prev = h;
        }
        specs.push(LayerSpec {
            input_dim: prev,
            output_dim: num_actions,
            activation: Activation::Linear,
            dropout_rate: 0.0,
        });
        specs
    }

    /// Random initialization: weights uniform in ±1/sqrt(input_dim),
    /// biases zero, deterministic per seed.
    pub fn init(specs: &[LayerSpec], seed: u64) -> Result<Self, QNetError> {
        if specs.is_empty() {
            return Err(QNetError::BadArchitecture("no layers".into()));
        }
        for pair in specs.windows(2) {
            if pair[0].output_dim != pair[1].input_dim {
                return Err(QNetError::BadArchitecture(format!(
                    "layer dims do not chain: {} -> {}",
                    pair[0].output_dim, pair[1].input_dim
                )));
            }
        }
        for s in specs {
            if s.input_dim == 0 || s.output_dim == 0 {
                return Err(QNetError::BadArchitecture("zero layer dimension".into()));
            }
            if !(0.0..1.0).contains(&s.dropout_rate) {
                return Err(QNetError::BadArchitecture(format!(
                    "dropout rate {} outside [0, 1)",
                    s.dropout_rate
                )));
            }
        }
        let last = specs.last().expect("nonempty");
        if last.activation != Activation::Linear || last.dropout_rate != 0.0 {
            return Err(QNetError::BadArchitecture(
                "final layer must be linear with dropout 0".into(),
            ));
        }
        let mut r = rng::stream(&[domain::NET_INIT, seed]);
        let layers = specs
            .iter()
            .map(|&spec| {
                let scale = 1.0 / (spec.input_dim as f64).sqrt();
                let weights = (0..spec.input_dim * spec.output_dim)
                    .map(|_| (r.gen::<f64>() * 2.0 - 1.0) * scale)
                    .collect();
                Layer {
                    spec,
                    weights,
                    biases: vec![0.0; spec.output_dim],
                }
            })
            .collect();
        Ok(QNetwork { layers, version: 0 })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").spec.output_dim
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn layer_weights(&self, layer: usize) -> &[f64] {
        &self.layers[layer].weights
    }

    pub fn layer_biases(&self, layer: usize) -> &[f64] {
        &self.layers[layer].biases
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            d_weights: self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            d_biases: self.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    /// Q-values for a state vector, plus the backward cache.
    pub fn forward(&self, x: &[f64], mode: ForwardMode) -> Result<(Vec<f64>, Cache), QNetError> {
        if x.len() != self.input_dim() {
            return Err(QNetError::DimensionMismatch {
                got: x.len(),
                expected: self.input_dim(),
            });
        }
        let mut mask_rng = match mode {
            ForwardMode::Train { mask_seed } => Some(rng::stream(&[domain::DROPOUT_MASK, mask_seed])),
            ForwardMode::Eval => None,
        };
        let mut layer_inputs = Vec::with_capacity(self.layers.len());
        let mut act_factor = Vec::with_capacity(self.layers.len());
        let mut activation = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.spec.output_dim];
            layer.affine(&activation, &mut z);
            let mut factor = vec![1.0; layer.spec.output_dim];
            match layer.spec.activation {
                Activation::Relu => {
                    for (zv, fv) in z.iter_mut().zip(factor.iter_mut()) {
                        if *zv <= 0.0 {
                            *zv = 0.0;
                            *fv = 0.0;
                        }
                    }
                }
                Activation::Linear => {}
            }
            let p = layer.spec.dropout_rate;
            if p > 0.0 {
                if let Some(r) = mask_rng.as_mut() {
                    let keep_scale = 1.0 / (1.0 - p);
                    for (zv, fv) in z.iter_mut().zip(factor.iter_mut()) {
                        if r.gen::<f64>() < p {
                            *zv = 0.0;
                            *fv = 0.0;
                        } else {
                            *zv *= keep_scale;
                            *fv *= keep_scale;
                        }
                    }
                }
            }
            layer_inputs.push(activation);
            act_factor.push(factor);
            activation = z;
        }
        let cache = Cache {
            net_version: self.version,
            layer_inputs,
            act_factor,
            output: activation.clone(),
        };
        Ok((activation, cache))
    }

    /// Q-values only, eval mode. The hot path for greedy action choice.
    pub fn forward_eval(&self, x: &[f64]) -> Result<Vec<f64>, QNetError> {
        if x.len() != self.input_dim() {
            return Err(QNetError::DimensionMismatch {
                got: x.len(),
                expected: self.input_dim(),
            });
        }
        let mut activation = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.spec.output_dim];
            layer.affine(&activation, &mut z);
            if layer.spec.activation == Activation::Relu {
                for zv in z.iter_mut() {
                    if *zv < 0.0 {
                        *zv = 0.0;
                    }
                }
            }
            activation = z;
        }
        Ok(activation)
    }

    /// Exact gradients of `q · dq` with respect to every parameter,
    /// under the masks recorded in the cache.
    pub fn backward(&self, cache: &Cache, dq: &[f64]) -> Result<Gradients, QNetError> {
        let mut grads = self.zero_gradients();
        self.backward_into(cache, dq, &mut grads)?;
        Ok(grads)
    }

    /// Accumulating variant of [`QNetwork::backward`] for batch loops.
    pub fn backward_into(
        &self,
        cache: &Cache,
        dq: &[f64],
        grads: &mut Gradients,
    ) -> Result<(), QNetError> {
        if cache.net_version != self.version {
            return Err(QNetError::StaleCache);
        }
        if cache.layer_inputs.len() != self.layers.len() {
            return Err(QNetError::StaleCache);
        }
        if dq.len() != self.output_dim() {
            return Err(QNetError::DimensionMismatch {
                got: dq.len(),
                expected: self.output_dim(),
            });
        }
        let mut delta = dq.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let x = &cache.layer_inputs[l];
            let out_dim = layer.spec.output_dim;
            let dw = &mut grads.d_weights[l];
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    let row = &mut dw[i * out_dim..(i + 1) * out_dim];
                    if xi == 1.0 {
                        for (d, &g) in row.iter_mut().zip(&delta) {
                            *d += g;
                        }
                    } else {
                        for (d, &g) in row.iter_mut().zip(&delta) {
                            *d += xi * g;
                        }
                    }
                }
            }
            for (d, &g) in grads.d_biases[l].iter_mut().zip(&delta) {
                *d += g;
            }
            if l > 0 {
                let mut prev = vec![0.0; layer.spec.input_dim];
                for (i, pv) in prev.iter_mut().enumerate() {
                    let row = &layer.weights[i * out_dim..(i + 1) * out_dim];
                    let mut acc = 0.0;
                    for (&w, &g) in row.iter().zip(&delta) {
                        acc += w * g;
                    }
                    *pv = acc * cache.act_factor[l - 1][i];
                }
                delta = prev;
            }
        }
        Ok(())
    }

    /// Plain SGD: p <- p - lr * g, elementwise.
    pub fn sgd_update(&mut self, grads: &Gradients, learning_rate: f64) -> Result<(), QNetError> {
        if grads.d_weights.len() != self.layers.len() {
            return Err(QNetError::ShapeMismatch);
        }
        for (layer, (dw, db)) in self
            .layers
            .iter_mut()
            .zip(grads.d_weights.iter().zip(&grads.d_biases))
        {
            if dw.len() != layer.weights.len() || db.len() != layer.biases.len() {
                return Err(QNetError::ShapeMismatch);
            }
            for (w, &g) in layer.weights.iter_mut().zip(dw) {
                *w -= learning_rate * g;
            }
            for (b, &g) in layer.biases.iter_mut().zip(db) {
                *b -= learning_rate * g;
            }
        }
        self.version += 1;
        Ok(())
    }

    /// Serializes as magic, a one-line architecture descriptor, then raw
    /// little-endian f64 parameters (per layer: input-major weights, then
    /// biases).
    pub fn save(&self, path: &Path) -> Result<(), QNetError> {
        let mut out = Vec::new();
        out.extend_from_slice(b"DRLHQN1\n");
        out.extend_from_slice(self.arch_line().as_bytes());
        for layer in &self.layers {
            for &w in &layer.weights {
                out.extend_from_slice(&w.to_le_bytes());
            }
            for &b in &layer.biases {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(&out)?;
        Ok(())
    }

    fn arch_line(&self) -> String {
        let mut line = format!("arch {}", self.input_dim());
        for l in &self.layers {
            line.push_str(&format!(
                " {}:{}:{}",
                l.spec.output_dim,
                l.spec.activation.name(),
                l.spec.dropout_rate
            ));
        }
        line.push('\n');
        line
    }

    pub fn load(path: &Path) -> Result<Self, QNetError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, QNetError> {
        let corrupt = |msg: &str| QNetError::CorruptModelFile(msg.into());
        let rest = bytes
            .strip_prefix(b"DRLHQN1\n")
            .ok_or_else(|| corrupt("missing DRLHQN1 magic"))?;
        let newline = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| corrupt("missing architecture line"))?;
        let arch = std::str::from_utf8(&rest[..newline])
            .map_err(|_| corrupt("architecture line is not UTF-8"))?;
        let params = &rest[newline + 1..];

        let mut tokens = arch.split_whitespace();
        if tokens.next() != Some("arch") {
            return Err(corrupt("architecture line must start with 'arch'"));
        }
        let mut prev: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| corrupt("missing input dimension"))?;
        let mut specs = Vec::new();
        for tok in tokens {
            let mut parts = tok.split(':');
            let (dim, act, drop) = (parts.next(), parts.next(), parts.next());
            let (Some(dim), Some(act), Some(drop), None) = (dim, act, drop, parts.next()) else {
                return Err(corrupt(&format!("malformed layer token {tok:?}")));
            };
            let output_dim: usize = dim
                .parse()
                .map_err(|_| corrupt(&format!("bad layer dim in {tok:?}")))?;
            let activation = Activation::from_name(act)
                .ok_or_else(|| corrupt(&format!("unknown activation in {tok:?}")))?;
            let dropout_rate: f64 = drop
                .parse()
                .map_err(|_| corrupt(&format!("bad dropout rate in {tok:?}")))?;
            specs.push(LayerSpec {
                input_dim: prev,
                output_dim,
                activation,
                dropout_rate,
            });
            prev = output_dim;
        }
        if specs.is_empty() {
            return Err(corrupt("architecture has no layers"));
        }
        let expected_params: usize = specs
            .iter()
            .map(|s| s.input_dim * s.output_dim + s.output_dim)
            .sum();
        if params.len() != expected_params * 8 {
            return Err(corrupt(&format!(
                "expected {} parameter bytes, found {}",
                expected_params * 8,
                params.len()
            )));
        }
        let mut offset = 0;
        let mut read_f64 = || {
            let v = f64::from_le_bytes(params[offset..offset + 8].try_into().expect("length"));
            offset += 8;
            v
        };
        let layers = specs
            .iter()
            .map(|&spec| {
                let weights = (0..spec.input_dim * spec.output_dim)
                    .map(|_| read_f64())
                    .collect();
                let biases = (0..spec.output_dim).map(|_| read_f64()).collect();
                Layer {
                    spec,
                    weights,
                    biases,
                }
            })
            .collect();
        Ok(QNetwork { layers, version: 0 })
    }

    /// Checks the loaded network against the state layout it will drive.
    pub fn check_io_dims(&self, input_dim: usize, num_actions: usize) -> Result<(), QNetError> {
        if self.input_dim() != input_dim || self.output_dim() != num_actions {
            return Err(QNetError::ArchitectureMismatch(format!(
                "network is {}->{}, pipeline needs {}->{}",
                self.input_dim(),
                self.output_dim(),
                input_dim,
                num_actions
            )));
        }
        Ok(())
    }
}

impl Layer {
    /// z = W^T x + b, skipping zero inputs.
    fn affine(&self, x: &[f64], z: &mut [f64]) {
        debug_assert_eq!(x.len(), self.spec.input_dim);
        let out = self.spec.output_dim;
        z.copy_from_slice(&self.biases);
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &self.weights[i * out..(i + 1) * out];
                if xi == 1.0 {
                    for (zv, &w) in z.iter_mut().zip(row) {
                        *zv += w;
                    }
                } else {
                    for (zv, &w) in z.iter_mut().zip(row) {
                        *zv += xi * w;
                    }
                }
            }
        }
    }
}

/// Greedy argmax with ties broken to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
