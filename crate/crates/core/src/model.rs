//! Noise-prediction network and its training loop.
//!
//! A small fully-connected network with hand-rolled reverse-mode
//! differentiation (dense layers, relu/tanh) and a bias-corrected
//! adaptive-moment optimizer. Keeping the differentiation in-crate makes the
//! gradients exactly checkable against central finite differences.

use serde::{Deserialize, Serialize};

use crate::bridge::{sample_posterior, NoiseSchedule};
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::vecmath::{all_finite, norm_sq};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `a = apply(z)`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// One dense layer, row-major `out x in` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Layer {
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            in_dim,
            out_dim,
        }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for row in 0..self.out_dim {
            let w = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            let mut acc = self.bias[row];
            for (wi, xi) in w.iter().zip(input) {
                acc += wi * xi;
            }
            out.push(acc);
        }
    }
}

/// Weights of a fully-connected network plus its time-conditioning layout.
///
/// When used as a noise predictor the input is the state concatenated with
/// time features: `2 * time_embed_dim` Fourier features
/// `sin/cos(2^k pi t), k = 0..time_embed_dim-1`, or raw `t` when
/// `time_embed_dim = 0`. Networks used without time conditioning (the codec
/// nets) go through [`MlpParams::apply`] directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub time_embed_dim: usize,
}

impl MlpParams {
    /// Randomly initialized network with the given layer widths
    /// (`dims[0]` inputs through `dims.last()` outputs).
    pub fn random(
        dims: &[usize],
        activation: Activation,
        time_embed_dim: usize,
        rng: &mut RngState,
    ) -> Result<Self> {
        Self::validate_dims(dims)?;
        let layers = dims
            .windows(2)
            .map(|w| {
                let (i, o) = (w[0], w[1]);
                let std = (1.0 / i as f64).sqrt();
                Layer {
                    weights: (0..i * o).map(|_| std * rng.normal()).collect(),
                    bias: vec![0.0; o],
                    in_dim: i,
                    out_dim: o,
                }
            })
            .collect();
        Ok(MlpParams {
            layers,
            activation,
            time_embed_dim,
        })
    }

    /// All-zero network.
    pub fn zeros(dims: &[usize], activation: Activation, time_embed_dim: usize) -> Result<Self> {
        Self::validate_dims(dims)?;
        Ok(MlpParams {
            layers: dims.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
            activation,
            time_embed_dim,
        })
    }

    fn validate_dims(dims: &[usize]) -> Result<()> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidConfig(format!(
                "layer widths must list input and output and be positive, got {dims:?}"
            )));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    /// Width of the time-feature block appended to the state.
    pub fn time_feature_len(&self) -> usize {
        if self.time_embed_dim == 0 {
            1
        } else {
            2 * self.time_embed_dim
        }
    }

    /// State dimension expected when called as a time-conditioned predictor.
    pub fn state_dim(&self) -> usize {
        self.input_dim() - self.time_feature_len()
    }

    /// Chainedness and finiteness of all entries.
    pub fn validate(&self) -> Result<()> {
        for pair in self.layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Shape {
                    expected: pair[0].out_dim,
                    got: pair[1].in_dim,
                });
            }
        }
        for l in &self.layers {
            if !all_finite(&l.weights) || !all_finite(&l.bias) {
                return Err(Error::NonFinite("network parameters".into()));
            }
        }
        Ok(())
    }

    /// Time features for conditioning.
    pub fn time_features(&self, t: f64) -> Vec<f64> {
        if self.time_embed_dim == 0 {
            vec![t]
        } else {
            let mut out = Vec::with_capacity(2 * self.time_embed_dim);
            for k in 0..self.time_embed_dim {
                let arg = (1u64 << k) as f64 * std::f64::consts::PI * t;
                out.push(arg.sin());
                out.push(arg.cos());
            }
            out
        }
    }

    /// Raw forward pass on a full input vector (no time conditioning).
    pub fn apply(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        if !all_finite(input) {
            return Err(Error::NonFinite("network input".into()));
        }
        let mut cur = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (idx, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if idx != last {
                for v in next.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Read one scalar parameter by flat index (weights then bias, layer by
    /// layer).
    pub fn param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.weights.len() {
                return l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Mutable access by flat index; see [`MlpParams::param`].
    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return &mut l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }
}

/// Forward evaluation of the noise predictor `eps(x, t)`.
pub fn mlp_forward(params: &MlpParams, x: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside [0, 1]")));
    }
    if x.len() != params.state_dim() {
        return Err(Error::Shape {
            expected: params.state_dim(),
            got: x.len(),
        });
    }
    let mut input = Vec::with_capacity(params.input_dim());
    input.extend_from_slice(x);
    input.extend_from_slice(&params.time_features(t));
    params.apply(&input)
}

/// Gradient accumulator shaped like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<Layer>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            layers: params
                .layers
                .iter()
                .map(|l| Layer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.weights.len() {
                return l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("gradient index out of range");
    }

    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for l in &mut self.layers {
            if idx < l.weights.len() {
                return &mut l.weights[idx];
            }
            idx -= l.weights.len();
            if idx < l.bias.len() {
                return &mut l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("gradient index out of range");
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= s);
            l.bias.iter_mut().for_each(|b| *b *= s);
        }
    }

    pub fn is_all_zero(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|&w| w == 0.0) && l.bias.iter().all(|&b| b == 0.0))
    }
}

/// Forward pass retaining per-layer activations for the backward sweep.
/// Returns the network output and the stack of layer inputs.
fn forward_cached(params: &MlpParams, input: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(params.layers.len() + 1);
    acts.push(input.to_vec());
    let last = params.layers.len() - 1;
    for (idx, layer) in params.layers.iter().enumerate() {
        let mut out = Vec::new();
        layer.forward(acts.last().unwrap(), &mut out);
        if idx != last {
            for v in out.iter_mut() {
                *v = params.activation.apply(*v);
            }
        }
        acts.push(out);
    }
    let out = acts.last().unwrap().clone();
    (out, acts)
}

/// Reverse-mode sweep: accumulate parameter gradients for one sample given
/// `d loss / d output`, returning `d loss / d input`.
fn backward_accumulate(
    params: &MlpParams,
    acts: &[Vec<f64>],
    output_grad: &[f64],
    grads: &mut MlpGrads,
) -> Vec<f64> {
    let mut delta = output_grad.to_vec();
    for (idx, layer) in params.layers.iter().enumerate().rev() {
        // Hidden layers stored post-activation; fold in the derivative.
        if idx != params.layers.len() - 1 {
            for (d, a) in delta.iter_mut().zip(&acts[idx + 1]) {
                *d *= params.activation.derivative_from_output(*a);
            }
        }
        let input = &acts[idx];
        let g = &mut grads.layers[idx];
        for row in 0..layer.out_dim {
            let dr = delta[row];
            g.bias[row] += dr;
            let gw = &mut g.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
            for (gwi, xi) in gw.iter_mut().zip(input) {
                *gwi += dr * xi;
            }
        }
        let mut prev = vec![0.0; layer.in_dim];
        for row in 0..layer.out_dim {
            let dr = delta[row];
            let w = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
            for (p, wi) in prev.iter_mut().zip(w) {
                *p += dr * wi;
            }
        }
        delta = prev;
    }
    delta
}

/// Squared-error loss and exact gradients on a full input vector:
/// per-sample loss is `||net(input) - target||^2`; the accumulated result is
/// averaged over the batch by the caller. Returns `d loss / d input` as well
/// so upstream networks can be trained through this one.
pub(crate) fn apply_loss_grad(
    params: &MlpParams,
    input: &[f64],
    target: &[f64],
    grads: &mut MlpGrads,
) -> (f64, Vec<f64>) {
    let (out, acts) = forward_cached(params, input);
    let residual: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
    let loss = norm_sq(&residual);
    let output_grad: Vec<f64> = residual.iter().map(|r| 2.0 * r).collect();
    let input_grad = backward_accumulate(params, &acts, &output_grad, grads);
    (loss, input_grad)
}

/// One training batch for the bridge objective: states with their clean
/// endpoint and sampled time. `x_t` is constructed by the caller (posterior
/// draw during training, forward-marginal draw in diagnostics).
#[derive(Debug, Clone)]
pub struct SbBatch {
    pub x0: Vec<Vec<f64>>,
    pub xt: Vec<Vec<f64>>,
    pub t: Vec<f64>,
}

impl SbBatch {
    /// Assemble a batch the way the training loop does: draw
    /// `x_t ~ q(x_t | x0, x1)` for each pair.
    pub fn from_pairs(
        pairs: &[(Vec<f64>, Vec<f64>)],
        t: &[f64],
        sched: &NoiseSchedule,
        rng: &mut RngState,
    ) -> Result<Self> {
        if pairs.len() != t.len() {
            return Err(Error::Shape {
                expected: pairs.len(),
                got: t.len(),
            });
        }
        let mut x0 = Vec::with_capacity(pairs.len());
        let mut xt = Vec::with_capacity(pairs.len());
        for ((a, b), &ti) in pairs.iter().zip(t) {
            xt.push(sample_posterior(a, b, ti, sched, rng)?);
            x0.push(a.clone());
        }
        Ok(SbBatch {
            x0,
            xt,
            t: t.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Mean squared residual against the normalized displacement target
/// `(x_t - x0) / sigma_t`, with exact reverse-mode gradients.
pub fn sb_loss_and_grad(
    params: &MlpParams,
    batch: &SbBatch,
    sched: &NoiseSchedule,
) -> Result<(f64, MlpGrads)> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty training batch".into()));
    }
    let mut grads = MlpGrads::zeros_like(params);
    let mut loss = 0.0;
    for i in 0..batch.len() {
        let t = batch.t[i];
        let (s_sq, _) = sched.variances_at(t)?;
        if s_sq == 0.0 {
            return Err(Error::SingularTarget { t });
        }
        let sigma = s_sq.sqrt();
        let xt = &batch.xt[i];
        let target: Vec<f64> = xt
            .iter()
            .zip(&batch.x0[i])
            .map(|(a, b)| (a - b) / sigma)
            .collect();
        let mut input = Vec::with_capacity(params.input_dim());
        input.extend_from_slice(xt);
        input.extend_from_slice(&params.time_features(t));
        let (l, _) = apply_loss_grad(params, &input, &target, &mut grads);
        loss += l;
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    loss *= inv;
    if !loss.is_finite() {
        return Err(Error::NonFinite("bridge training loss".into()));
    }
    Ok((loss, grads))
}

/// Adaptive-moment optimizer state.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: usize,
    pub m: MlpGrads,
    pub v: MlpGrads,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr: f64,
}

impl AdamState {
    pub fn new(params: &MlpParams, lr: f64) -> Self {
        AdamState {
            step: 0,
            m: MlpGrads::zeros_like(params),
            v: MlpGrads::zeros_like(params),
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            lr,
        }
    }
}

/// Bias-corrected adaptive-moment update. Consumes and returns the state so
/// the step counter can never silently desynchronize from the moments.
pub fn adam_update(
    mut state: AdamState,
    mut params: MlpParams,
    grads: &MlpGrads,
) -> Result<(MlpParams, AdamState)> {
    if grads.layers.len() != params.layers.len() {
        return Err(Error::Shape {
            expected: params.layers.len(),
            got: grads.layers.len(),
        });
    }
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - state.beta1.powf(t);
    let bc2 = 1.0 - state.beta2.powf(t);
    for li in 0..params.layers.len() {
        let p = &mut params.layers[li];
        let g = &grads.layers[li];
        if g.weights.len() != p.weights.len() || g.bias.len() != p.bias.len() {
            return Err(Error::Shape {
                expected: p.weights.len(),
                got: g.weights.len(),
            });
        }
        let m = &mut state.m.layers[li];
        let v = &mut state.v.layers[li];
        for k in 0..p.weights.len() {
            m.weights[k] = state.beta1 * m.weights[k] + (1.0 - state.beta1) * g.weights[k];
            v.weights[k] =
                state.beta2 * v.weights[k] + (1.0 - state.beta2) * g.weights[k] * g.weights[k];
            let m_hat = m.weights[k] / bc1;
            let v_hat = v.weights[k] / bc2;
            p.weights[k] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
        for k in 0..p.bias.len() {
            m.bias[k] = state.beta1 * m.bias[k] + (1.0 - state.beta1) * g.bias[k];
            v.bias[k] = state.beta2 * v.bias[k] + (1.0 - state.beta2) * g.bias[k] * g.bias[k];
            let m_hat = m.bias[k] / bc1;
            let v_hat = v.bias[k] / bc2;
            p.bias[k] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok((params, state))
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub iterations: usize,
    pub lr: f64,
    pub seed: u64,
    /// Times are sampled from `[t_clip, 1 - t_clip]`: the displacement
    /// target divides by `sigma_t`, which vanishes at `t = 0`.
    pub t_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            iterations: 2000,
            lr: 1e-3,
            seed: 0,
            t_clip: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(self.t_clip > 0.0 && self.t_clip < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "t_clip must lie in (0, 0.5), got {}",
                self.t_clip
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        Ok(())
    }

    pub fn sample_t(&self, rng: &mut RngState) -> f64 {
        self.t_clip + (1.0 - 2.0 * self.t_clip) * rng.uniform()
    }
}

/// Train the noise predictor on endpoint pairs from `pair_sampler`
/// (`x0` = data endpoint, `x1` = semantic endpoint; the sampler owns the
/// pairing).
pub fn train_bridge<F>(
    mut pair_sampler: F,
    params: MlpParams,
    cfg: &TrainConfig,
    sched: &NoiseSchedule,
) -> Result<MlpParams>
where
    F: FnMut(&mut RngState) -> (Vec<f64>, Vec<f64>),
{
    cfg.validate()?;
    params.validate()?;
    let mut rng = RngState::derive(cfg.seed, 0);
    let mut params = params;
    let mut adam = AdamState::new(&params, cfg.lr);
    for iteration in 0..cfg.iterations {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> =
            (0..cfg.batch_size).map(|_| pair_sampler(&mut rng)).collect();
        let ts: Vec<f64> = (0..cfg.batch_size).map(|_| cfg.sample_t(&mut rng)).collect();
        let batch = SbBatch::from_pairs(&pairs, &ts, sched, &mut rng)?;
        let (loss, grads) = match sb_loss_and_grad(&params, &batch, sched) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => return Err(Error::TrainingDiverged { iteration }),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { iteration });
        }
        let (p, a) = adam_update(adam, params, &grads)?;
        params = p;
        adam = a;
    }
    Ok(params)
}

/// Maximum relative disagreement between analytic gradients and central
/// finite differences over a deterministic subsample of at least 200
/// parameters (all of them for small networks).
pub fn grad_check(
    params: &MlpParams,
    batch: &SbBatch,
    sched: &NoiseSchedule,
    fd_step: f64,
) -> Result<f64> {
    if !(1e-6..=1e-2).contains(&fd_step) {
        return Err(Error::Domain(format!(
            "fd_step {fd_step} outside [1e-6, 1e-2]"
        )));
    }
    let (_, grads) = sb_loss_and_grad(params, batch, sched)?;
    let total = params.param_count();
    let target = 200usize.min(total);
    let stride = (total / target).max(1);
    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for idx in (0..total).step_by(stride) {
        let orig = probe.param(idx);
        *probe.param_mut(idx) = orig + fd_step;
        let (lp, _) = sb_loss_and_grad(&probe, batch, sched)?;
        *probe.param_mut(idx) = orig - fd_step;
        let (lm, _) = sb_loss_and_grad(&probe, batch, sched)?;
        *probe.param_mut(idx) = orig;
        let fd = (lp - lm) / (2.0 * fd_step);
        let analytic = grads.param(idx);
        let rel = (analytic - fd).abs() / (analytic.abs() + fd.abs() + 1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}
