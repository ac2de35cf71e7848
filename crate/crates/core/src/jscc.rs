//! Toy joint source-channel codec over simulated wireless channels.
//!
//! The encoder compresses a source vector to a power-normalized semantic
//! vector, the channel applies fading and additive noise, the receiver
//! equalizes with perfect channel knowledge, and the projector lifts the
//! equalized semantics back to source space — the bridge's semantic
//! endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    adam_update, apply_loss_grad, AdamState, MlpGrads, MlpParams, TrainConfig,
};
use crate::rng::RngState;
use crate::vecmath::{dist_sq, norm_sq};

/// Fading model. Equalization assumes perfect receiver-side channel
/// knowledge in both cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    Awgn,
    Rayleigh,
}

/// Channel parameters. `snr_db = +inf` is the noiseless sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub fading: Fading,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::InvalidConfig(format!(
                "snr_db must be finite or +inf, got {}",
                self.snr_db
            )));
        }
        Ok(())
    }
}

/// Additive-noise variance for a target SNR against a known signal power:
/// `sigma_n^2 = signal_power / 10^(snr_db / 10)`.
pub fn snr_to_noise_var(snr_db: f64, signal_power: f64) -> f64 {
    debug_assert!(signal_power > 0.0);
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Scalar per-block fading gain with unit second moment.
pub(crate) fn draw_fading(fading: Fading, rng: &mut RngState) -> f64 {
    match fading {
        Fading::Awgn => 1.0,
        Fading::Rayleigh => {
            // sqrt((u^2 + v^2) / 2) for standard normal u, v has a Rayleigh
            // magnitude with E[h^2] = 1.
            let u = rng.normal();
            let v = rng.normal();
            ((u * u + v * v) / 2.0).sqrt()
        }
    }
}

/// Apply fading and additive noise to one power-normalized block:
/// `s_hat = h * s + n`. Returns the realized gain for the equalizer.
pub fn channel_apply(
    cfg: &ChannelConfig,
    s: &[f64],
    rng: &mut RngState,
) -> Result<(Vec<f64>, f64)> {
    cfg.validate()?;
    let h = draw_fading(cfg.fading, rng);
    let noise_var = snr_to_noise_var(cfg.snr_db, 1.0);
    let sd = noise_var.sqrt();
    let s_hat = s.iter().map(|x| h * x + sd * rng.normal()).collect();
    Ok((s_hat, h))
}

/// Perfect-CSI equalization `s_tilde = s_hat / h`. Blocks in a deep fade
/// are surfaced as erasures rather than amplified noise.
pub fn equalize(s_hat: &[f64], h: f64) -> Result<Vec<f64>> {
    if h.abs() < 1e-6 {
        return Err(Error::DeepFade { h });
    }
    Ok(s_hat.iter().map(|x| x / h).collect())
}

/// Codec: source dimension, semantic dimension, and the two learned maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub n_dim: usize,
    pub k_dim: usize,
    pub encoder: MlpParams,
    pub projector: MlpParams,
    /// Largest admissible bandwidth ratio `k/n`.
    pub cbr_ceiling: f64,
}

impl CodecConfig {
    pub fn new(
        n_dim: usize,
        k_dim: usize,
        encoder: MlpParams,
        projector: MlpParams,
        cbr_ceiling: f64,
    ) -> Result<Self> {
        if k_dim == 0 || k_dim > n_dim {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= k_dim <= n_dim, got k = {k_dim}, n = {n_dim}"
            )));
        }
        let cbr = k_dim as f64 / n_dim as f64;
        if cbr > cbr_ceiling {
            return Err(Error::InvalidConfig(format!(
                "bandwidth ratio {cbr} exceeds ceiling {cbr_ceiling}"
            )));
        }
        if encoder.input_dim() != n_dim || encoder.output_dim() != k_dim {
            return Err(Error::Shape {
                expected: n_dim,
                got: encoder.input_dim(),
            });
        }
        if projector.input_dim() != k_dim || projector.output_dim() != n_dim {
            return Err(Error::Shape {
                expected: k_dim,
                got: projector.input_dim(),
            });
        }
        Ok(CodecConfig {
            n_dim,
            k_dim,
            encoder,
            projector,
            cbr_ceiling,
        })
    }

    pub fn cbr(&self) -> f64 {
        self.k_dim as f64 / self.n_dim as f64
    }
}

/// Semantic dimensions approximating the reference bandwidth-ratio ladder
/// {1/192, 1/96, 1/48, 1/24, 1/16, 1/12, 1/8} at source dimension `n`,
/// clamped to at least one symbol and deduplicated.
pub fn cbr_preset(n_dim: usize) -> Vec<usize> {
    const RATIOS: [f64; 7] = [
        1.0 / 192.0,
        1.0 / 96.0,
        1.0 / 48.0,
        1.0 / 24.0,
        1.0 / 16.0,
        1.0 / 12.0,
        1.0 / 8.0,
    ];
    let mut ks: Vec<usize> = RATIOS
        .iter()
        .map(|r| ((r * n_dim as f64).round() as usize).clamp(1, n_dim))
        .collect();
    ks.dedup();
    ks
}

/// Encode a batch and normalize it to unit mean per-symbol power
/// (`mean ||s||^2 / k = 1`). Normalization is a batch statistic, so single
/// vectors go through as singleton batches.
pub fn encode(codec: &CodecConfig, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let (normalized, _) = encode_with_scale(codec, batch)?;
    Ok(normalized)
}

/// Encoding that also reports the normalization scale (needed for exact
/// gradients through the pipeline).
pub fn encode_with_scale(codec: &CodecConfig, batch: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64)> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let mut raw = Vec::with_capacity(batch.len());
    for x in batch {
        if x.len() != codec.n_dim {
            return Err(Error::Shape {
                expected: codec.n_dim,
                got: x.len(),
            });
        }
        raw.push(codec.encoder.apply(x)?);
    }
    let power: f64 = raw.iter().map(|s| norm_sq(s)).sum::<f64>()
        / (batch.len() * codec.k_dim) as f64;
    if power <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let scale = power.sqrt().recip();
    let normalized = raw
        .iter()
        .map(|s| s.iter().map(|v| v * scale).collect())
        .collect();
    Ok((normalized, scale))
}

/// Measure the power-normalization scale on a calibration batch. Deployed
/// encoders transmit single blocks, so the batch statistic is frozen once
/// after training and reused per sample.
pub fn calibrate_scale(codec: &CodecConfig, batch: &[Vec<f64>]) -> Result<f64> {
    let (_, scale) = encode_with_scale(codec, batch)?;
    Ok(scale)
}

/// Encode one source vector with a previously calibrated scale.
pub fn encode_one_scaled(codec: &CodecConfig, x: &[f64], scale: f64) -> Result<Vec<f64>> {
    if x.len() != codec.n_dim {
        return Err(Error::Shape {
            expected: codec.n_dim,
            got: x.len(),
        });
    }
    let raw = codec.encoder.apply(x)?;
    Ok(raw.iter().map(|v| v * scale).collect())
}

/// Lift equalized semantics back to source space.
pub fn project(codec: &CodecConfig, s_tilde: &[f64]) -> Result<Vec<f64>> {
    if s_tilde.len() != codec.k_dim {
        return Err(Error::Shape {
            expected: codec.k_dim,
            got: s_tilde.len(),
        });
    }
    codec.projector.apply(s_tilde)
}

/// SNR policy during codec training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrPolicy {
    /// Use the channel's configured SNR for every batch.
    Fixed,
    /// Redraw the SNR uniformly from `[lo_db, hi_db]` per sample.
    UniformDb { lo_db: f64, hi_db: f64 },
}

/// End-to-end MSE training of encoder and projector through
/// encode -> channel -> equalize -> project. The equalized channel
/// perturbation `n / h` does not depend on the network parameters, so exact
/// gradients flow through the additive noise; the batch power normalization
/// is differentiated exactly as well.
pub fn train_jscc<F>(
    codec: CodecConfig,
    mut data_sampler: F,
    channel: &ChannelConfig,
    policy: SnrPolicy,
    cfg: &TrainConfig,
) -> Result<CodecConfig>
where
    F: FnMut(&mut RngState) -> Vec<f64>,
{
    cfg.validate()?;
    channel.validate()?;
    let mut codec = codec;
    let mut rng = RngState::derive(cfg.seed, 0);
    let mut enc_adam = AdamState::new(&codec.encoder, cfg.lr);
    let mut proj_adam = AdamState::new(&codec.projector, cfg.lr);
    for iteration in 0..cfg.iterations {
        let batch: Vec<Vec<f64>> = (0..cfg.batch_size).map(|_| data_sampler(&mut rng)).collect();
        let snr_db = match policy {
            SnrPolicy::Fixed => channel.snr_db,
            SnrPolicy::UniformDb { lo_db, hi_db } => lo_db + (hi_db - lo_db) * rng.uniform(),
        };
        let step_channel = ChannelConfig {
            snr_db,
            ..*channel
        };
        let loss = match jscc_step(
            &mut codec,
            &batch,
            &step_channel,
            &mut enc_adam,
            &mut proj_adam,
            &mut rng,
        ) {
            Ok(l) => l,
            Err(Error::ZeroPower) | Err(Error::NonFinite(_)) => {
                return Err(Error::TrainingDiverged { iteration })
            }
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { iteration });
        }
    }
    Ok(codec)
}

/// One optimizer step on a batch; returns the batch MSE.
fn jscc_step(
    codec: &mut CodecConfig,
    batch: &[Vec<f64>],
    channel: &ChannelConfig,
    enc_adam: &mut AdamState,
    proj_adam: &mut AdamState,
    rng: &mut RngState,
) -> Result<f64> {
    let b = batch.len();
    let k = codec.k_dim;
    // Forward: raw encodings and the shared normalization scale.
    let mut raw = Vec::with_capacity(b);
    for x in batch {
        raw.push(codec.encoder.apply(x)?);
    }
    let power: f64 = raw.iter().map(|s| norm_sq(s)).sum::<f64>() / (b * k) as f64;
    if power <= 0.0 {
        return Err(Error::ZeroPower);
    }
    let scale = power.sqrt().recip();

    // Channel perturbations, expressed post-equalization.
    let noise_var = snr_to_noise_var(channel.snr_db, 1.0);
    let sd = noise_var.sqrt();
    let mut s_tilde = Vec::with_capacity(b);
    let mut faded = vec![false; b];
    for (i, s) in raw.iter().enumerate() {
        let h = draw_fading(channel.fading, rng);
        if h.abs() < 1e-6 {
            // Deep fade: the block is erased rather than amplified.
            faded[i] = true;
            s_tilde.push(vec![0.0; k]);
            continue;
        }
        s_tilde.push(
            s.iter()
                .map(|v| v * scale + sd * rng.normal() / h)
                .collect::<Vec<f64>>(),
        );
    }

    // Projector pass with loss; collect gradients at the projector input.
    let mut proj_grads = MlpGrads::zeros_like(&codec.projector);
    let mut input_grads = Vec::with_capacity(b);
    let mut loss = 0.0;
    for (i, (st, x)) in s_tilde.iter().zip(batch).enumerate() {
        let (l, gin) = apply_loss_grad(&codec.projector, st, x, &mut proj_grads);
        loss += l;
        // Erased blocks never saw the encoder output, so nothing flows back.
        input_grads.push(if faded[i] { vec![0.0; k] } else { gin });
    }
    let inv = 1.0 / b as f64;
    loss *= inv;
    proj_grads.scale(inv);
    if !loss.is_finite() {
        return Err(Error::NonFinite("jscc training loss".into()));
    }

    // Backprop through the normalization: s_i = raw_i * scale with
    // scale = power^{-1/2} and power = sum ||raw||^2 / (b k). For
    // g_i = dL/ds_i:
    //   dL/draw_i = scale * g_i - power^{-3/2} / (b k) * (sum_j g_j . raw_j) * raw_i.
    let dot_sum: f64 = input_grads
        .iter()
        .zip(&raw)
        .map(|(g, r)| g.iter().zip(r).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    let pm32 = scale / power; // power^{-3/2}
    let mut enc_grads = MlpGrads::zeros_like(&codec.encoder);
    for ((x, r), g) in batch.iter().zip(&raw).zip(&input_grads) {
        let raw_grad: Vec<f64> = r
            .iter()
            .zip(g)
            .map(|(ri, gi)| scale * gi - pm32 / (b * k) as f64 * dot_sum * ri)
            .collect();
        // Reuse the cached-forward backward sweep with a custom output
        // gradient: run a pseudo-loss pass whose output grad equals
        // raw_grad. apply_loss_grad computes 2 * (out - target), so feed
        // target = out - raw_grad / 2.
        let out = codec.encoder.apply(x)?;
        let target: Vec<f64> = out.iter().zip(&raw_grad).map(|(o, g)| o - g / 2.0).collect();
        let (_, _) = apply_loss_grad(&codec.encoder, x, &target, &mut enc_grads);
    }
    enc_grads.scale(inv);

    let (enc, ea) = adam_update(enc_adam.clone(), codec.encoder.clone(), &enc_grads)?;
    let (proj, pa) = adam_update(proj_adam.clone(), codec.projector.clone(), &proj_grads)?;
    *enc_adam = ea;
    *proj_adam = pa;
    codec.encoder = enc;
    codec.projector = proj;
    Ok(loss)
}

/// Held-out end-to-end MSE of a codec over a sample batch at the channel's
/// configured SNR.
pub fn heldout_mse(
    codec: &CodecConfig,
    batch: &[Vec<f64>],
    channel: &ChannelConfig,
    rng: &mut RngState,
) -> Result<f64> {
    let encoded = encode(codec, batch)?;
    let mut total = 0.0;
    for (s, x) in encoded.iter().zip(batch) {
        let (s_hat, h) = channel_apply(channel, s, rng)?;
        let s_tilde = match equalize(&s_hat, h) {
            Ok(v) => v,
            Err(Error::DeepFade { .. }) => vec![0.0; codec.k_dim],
            Err(e) => return Err(e),
        };
        let x1 = project(codec, &s_tilde)?;
        total += dist_sq(&x1, x);
    }
    Ok(total / batch.len() as f64)
}
