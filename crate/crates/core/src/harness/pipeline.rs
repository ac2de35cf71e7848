//! The staged training pipeline and its sweep metrics.
//!
//! Stage 1 pretrains the codec at a fixed SNR; stage 2 continues under
//! randomized SNR for robustness; stage 3 freezes the codec and trains the
//! bridge decoder on (data, projected-semantics) pairs; stage 4 jointly
//! fine-tunes everything at a decayed rate on the equal-weighted sum of the
//! reconstruction and bridge objectives.

use crate::analysis::{endpoint_w2, w2sq_empirical};
use crate::bridge::{sample_posterior, NoiseSchedule};
use crate::error::{Error, Result};
use crate::harness::checkpoint::{Checkpoint, CHECKPOINT_SCHEMA_VERSION};
use crate::harness::config::ExperimentConfig;
use crate::harness::report::{Report, Section};
use crate::jscc::{
    calibrate_scale, channel_apply, encode_one_scaled, encode_with_scale, equalize, heldout_mse,
    project, train_jscc, ChannelConfig, CodecConfig, SnrPolicy,
};
use crate::model::{
    adam_update, apply_loss_grad, AdamState, MlpGrads, MlpParams, SbBatch, TrainConfig,
};
use crate::rng::RngState;
use crate::sampling::consistency_sample;
use crate::vecmath::dist_sq;

/// The trained system produced by the staged pipeline.
#[derive(Debug, Clone)]
pub struct TrainedSystem {
    pub codec: CodecConfig,
    pub power_scale: f64,
    pub bridge: MlpParams,
    pub sched: NoiseSchedule,
}

/// Number of held-out loss evaluations recorded per stage.
const LOSS_POINTS: usize = 8;

fn codec_dims(cfg: &ExperimentConfig) -> (Vec<usize>, Vec<usize>) {
    let mut enc = vec![cfg.codec.n_dim];
    enc.extend(&cfg.codec.hidden);
    enc.push(cfg.codec.k_dim);
    let mut proj = vec![cfg.codec.k_dim];
    proj.extend(&cfg.codec.hidden);
    proj.push(cfg.codec.n_dim);
    (enc, proj)
}

fn bridge_dims(cfg: &ExperimentConfig) -> Vec<usize> {
    let time_feat = if cfg.bridge_net.time_embed_dim == 0 {
        1
    } else {
        2 * cfg.bridge_net.time_embed_dim
    };
    let mut dims = vec![cfg.codec.n_dim + time_feat];
    dims.extend(&cfg.bridge_net.hidden);
    dims.push(cfg.codec.n_dim);
    dims
}

/// Fresh untrained codec matching the config.
pub fn init_codec(cfg: &ExperimentConfig) -> Result<CodecConfig> {
    let (enc_dims, proj_dims) = codec_dims(cfg);
    let mut rng = RngState::derive(cfg.seed, 11);
    let enc = MlpParams::random(&enc_dims, cfg.codec_activation(), 0, &mut rng)?;
    let proj = MlpParams::random(&proj_dims, cfg.codec_activation(), 0, &mut rng)?;
    CodecConfig::new(
        cfg.codec.n_dim,
        cfg.codec.k_dim,
        enc,
        proj,
        cfg.codec.cbr_ceiling,
    )
}

impl ExperimentConfig {
    fn codec_activation(&self) -> crate::model::Activation {
        crate::model::Activation::Relu
    }
}

/// One data->semantic endpoint through the frozen codec and channel.
pub fn pipeline_endpoint(
    codec: &CodecConfig,
    power_scale: f64,
    channel: &ChannelConfig,
    x: &[f64],
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let s = encode_one_scaled(codec, x, power_scale)?;
    let (s_hat, h) = channel_apply(channel, &s, rng)?;
    let s_tilde = match equalize(&s_hat, h) {
        Ok(v) => v,
        Err(Error::DeepFade { .. }) => vec![0.0; codec.k_dim],
        Err(e) => return Err(e),
    };
    project(codec, &s_tilde)
}

/// Train codec and bridge through the four stages, recording per-stage
/// held-out loss curves into `report`.
pub fn train_system(cfg: &ExperimentConfig, report: &mut Report) -> Result<TrainedSystem> {
    cfg.validate()?;
    let sched = NoiseSchedule::new(
        cfg.schedule.kind,
        cfg.schedule.n_steps,
        cfg.schedule.beta_scale,
    )?;
    let dataset = cfg.dataset.clone();
    let heldout = dataset.sample(cfg.eval.n_eval)?;
    let mut loss_section = Section::new("stage_loss", &["stage", "segment", "loss", "seed"]);

    // Stage 1: fixed-SNR reconstruction pretraining.
    let mut codec = init_codec(cfg)?;
    codec = run_codec_stage(
        codec,
        &dataset,
        &cfg.channel,
        SnrPolicy::Fixed,
        &cfg.stages.pretrain,
        "pretrain",
        &heldout,
        cfg.seed,
        &mut loss_section,
    )
    .map_err(|e| e.in_stage("pretrain"))?;

    // Stage 2: randomized-SNR robustness.
    codec = run_codec_stage(
        codec,
        &dataset,
        &cfg.channel,
        SnrPolicy::UniformDb {
            lo_db: cfg.snr_range_db.0,
            hi_db: cfg.snr_range_db.1,
        },
        &cfg.stages.robust,
        "robust",
        &heldout,
        cfg.seed,
        &mut loss_section,
    )
    .map_err(|e| e.in_stage("robust"))?;

    // Frozen power calibration for the per-sample deployment path.
    let calib = dataset.sample(1024.max(cfg.eval.n_eval))?;
    let power_scale = calibrate_scale(&codec, &calib)?;

    // Stage 3: bridge training against the frozen codec.
    let mut bridge = MlpParams::random(
        &bridge_dims(cfg),
        cfg.bridge_net.activation,
        cfg.bridge_net.time_embed_dim,
        &mut RngState::derive(cfg.seed, 12),
    )?;
    bridge = run_bridge_stage(
        bridge,
        &codec,
        power_scale,
        &dataset,
        &cfg.channel,
        &cfg.stages.bridge,
        &sched,
        &heldout,
        cfg.seed,
        &mut loss_section,
    )
    .map_err(|e| e.in_stage("bridge"))?;

    // Stage 4: joint fine-tune at the decayed rate.
    let (codec, bridge) = joint_finetune(
        codec,
        bridge,
        &dataset,
        &cfg.channel,
        &cfg.stages.finetune,
        &sched,
        &heldout,
        cfg.seed,
        &mut loss_section,
    )
    .map_err(|e| e.in_stage("finetune"))?;
    let power_scale = calibrate_scale(&codec, &calib)?;

    report.section(loss_section);
    Ok(TrainedSystem {
        codec,
        power_scale,
        bridge,
        sched,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_codec_stage(
    mut codec: CodecConfig,
    dataset: &crate::harness::dataset::DatasetSpec,
    channel: &ChannelConfig,
    policy: SnrPolicy,
    train: &TrainConfig,
    stage: &'static str,
    heldout: &[Vec<f64>],
    master_seed: u64,
    loss_section: &mut Section,
) -> Result<CodecConfig> {
    let segments = LOSS_POINTS.min(train.iterations.max(1));
    let per_segment = if train.iterations == 0 {
        0
    } else {
        (train.iterations / segments).max(1)
    };
    let mut done = 0;
    let mut segment = 0usize;
    while done < train.iterations {
        let iters = per_segment.min(train.iterations - done);
        let seg_cfg = TrainConfig {
            iterations: iters,
            seed: train.seed.wrapping_add(segment as u64),
            ..*train
        };
        let spec = dataset.clone();
        codec = train_jscc(
            codec,
            move |r: &mut RngState| spec.draw(r),
            channel,
            policy,
            &seg_cfg,
        )?;
        let mut eval_rng = RngState::derive(master_seed, 1000 + segment as u64);
        let mse = heldout_mse(&codec, heldout, channel, &mut eval_rng)?;
        loss_section.push(vec![
            stage.into(),
            segment.into(),
            mse.into(),
            train.seed.into(),
        ]);
        done += iters;
        segment += 1;
    }
    Ok(codec)
}

#[allow(clippy::too_many_arguments)]
fn run_bridge_stage(
    mut bridge: MlpParams,
    codec: &CodecConfig,
    power_scale: f64,
    dataset: &crate::harness::dataset::DatasetSpec,
    channel: &ChannelConfig,
    train: &TrainConfig,
    sched: &NoiseSchedule,
    heldout: &[Vec<f64>],
    master_seed: u64,
    loss_section: &mut Section,
) -> Result<MlpParams> {
    let segments = LOSS_POINTS.min(train.iterations.max(1));
    let per_segment = if train.iterations == 0 {
        0
    } else {
        (train.iterations / segments).max(1)
    };
    // Fixed held-out bridge batch for the loss curve.
    let mut held_rng = RngState::derive(master_seed, 2000);
    let held_pairs: Vec<(Vec<f64>, Vec<f64>)> = heldout
        .iter()
        .map(|x| {
            let x1 = pipeline_endpoint(codec, power_scale, channel, x, &mut held_rng)?;
            Ok((x.clone(), x1))
        })
        .collect::<Result<_>>()?;
    let held_ts: Vec<f64> = (0..held_pairs.len())
        .map(|_| train.t_clip + (1.0 - 2.0 * train.t_clip) * held_rng.uniform())
        .collect();
    let held_batch = SbBatch::from_pairs(&held_pairs, &held_ts, sched, &mut held_rng)?;

    let mut done = 0;
    let mut segment = 0usize;
    while done < train.iterations {
        let iters = per_segment.min(train.iterations - done);
        let seg_cfg = TrainConfig {
            iterations: iters,
            seed: train.seed.wrapping_add(segment as u64),
            ..*train
        };
        let codec_ref = codec.clone();
        let channel_ref = *channel;
        let spec = dataset.clone();
        bridge = crate::model::train_bridge(
            move |r: &mut RngState| {
                let x = spec.draw(r);
                let x1 = pipeline_endpoint(&codec_ref, power_scale, &channel_ref, &x, r)
                    .expect("endpoint projection failed");
                (x, x1)
            },
            bridge,
            &seg_cfg,
            sched,
        )?;
        let (loss, _) = crate::model::sb_loss_and_grad(&bridge, &held_batch, sched)?;
        loss_section.push(vec![
            "bridge".into(),
            segment.into(),
            loss.into(),
            train.seed.into(),
        ]);
        done += iters;
        segment += 1;
    }
    Ok(bridge)
}

/// Stage 4: equal-weighted sum of the end-to-end reconstruction loss and
/// the bridge objective, with gradients flowing through the projector into
/// the encoder (including the batch power normalization) and into the
/// decoder network.
#[allow(clippy::too_many_arguments)]
fn joint_finetune(
    mut codec: CodecConfig,
    mut bridge: MlpParams,
    dataset: &crate::harness::dataset::DatasetSpec,
    channel: &ChannelConfig,
    train: &TrainConfig,
    sched: &NoiseSchedule,
    heldout: &[Vec<f64>],
    master_seed: u64,
    loss_section: &mut Section,
) -> Result<(CodecConfig, MlpParams)> {
    train.validate()?;
    let mut rng = RngState::derive(train.seed, 0);
    let mut enc_adam = AdamState::new(&codec.encoder, train.lr);
    let mut proj_adam = AdamState::new(&codec.projector, train.lr);
    let mut bridge_adam = AdamState::new(&bridge, train.lr);
    let b = train.batch_size;
    let k = codec.k_dim;
    let noise_sd = crate::jscc::snr_to_noise_var(channel.snr_db, 1.0).sqrt();
    let segments = LOSS_POINTS.min(train.iterations.max(1));
    let per_segment = if train.iterations == 0 {
        0
    } else {
        (train.iterations / segments).max(1)
    };

    for iteration in 0..train.iterations {
        let batch: Vec<Vec<f64>> = (0..b).map(|_| dataset.draw(&mut rng)).collect();
        // Encoder forward and batch power scale.
        let mut raw = Vec::with_capacity(b);
        for x in &batch {
            raw.push(codec.encoder.apply(x)?);
        }
        let power: f64 =
            raw.iter().map(|s| crate::vecmath::norm_sq(s)).sum::<f64>() / (b * k) as f64;
        if power <= 0.0 {
            return Err(Error::TrainingDiverged { iteration });
        }
        let scale = power.sqrt().recip();
        // Channel in equalized form: s + n / h, with deep fades clamped.
        let s_tilde: Vec<Vec<f64>> = raw
            .iter()
            .map(|s| {
                let h = crate::jscc::draw_fading(channel.fading, &mut rng);
                let eff_sd = noise_sd / h.abs().max(1e-6);
                s.iter()
                    .map(|v| v * scale + eff_sd * rng.normal())
                    .collect()
            })
            .collect();

        let mut proj_grads = MlpGrads::zeros_like(&codec.projector);
        let mut bridge_grads = MlpGrads::zeros_like(&bridge);
        let mut input_grads: Vec<Vec<f64>> = Vec::with_capacity(b);
        let mut total = 0.0;
        for (st, x0) in s_tilde.iter().zip(&batch) {
            // Reconstruction term.
            let (mse_l, gin_mse) = apply_loss_grad(&codec.projector, st, x0, &mut proj_grads);
            // Bridge term through the projected endpoint.
            let x1 = codec.projector.apply(st)?;
            let t = train.sample_t(&mut rng);
            let xt = sample_posterior(x0, &x1, t, sched, &mut rng)?;
            let (s_sq, _) = sched.variances_at(t)?;
            let sigma = s_sq.sqrt();
            let target: Vec<f64> = xt
                .iter()
                .zip(x0)
                .map(|(a, c)| (a - c) / sigma)
                .collect();
            let mut net_in = Vec::with_capacity(bridge.input_dim());
            net_in.extend_from_slice(&xt);
            net_in.extend_from_slice(&bridge.time_features(t));
            let (sb_l, gin_bridge_full) =
                apply_loss_grad(&bridge, &net_in, &target, &mut bridge_grads);
            // d(sb)/d x_t: through the network input and through the target.
            let eps_out = bridge.apply(&net_in)?;
            let residual: Vec<f64> = eps_out.iter().zip(&target).map(|(o, t)| o - t).collect();
            let dim = x0.len();
            let dxt: Vec<f64> = (0..dim)
                .map(|i| gin_bridge_full[i] - 2.0 * residual[i] / sigma)
                .collect();
            // x_t = w0 x0 + w1 x1 + sqrt(var) eps with w1 = s_sq / total.
            let total_var = sched.total_variance();
            let w1 = s_sq / total_var;
            let dx1: Vec<f64> = dxt.iter().map(|g| w1 * g).collect();
            // Push the bridge-loss gradient through the projector.
            let proj_out = x1.clone();
            let pseudo_target: Vec<f64> = proj_out
                .iter()
                .zip(&dx1)
                .map(|(o, g)| o - g / 2.0)
                .collect();
            let (_, gin_sb) =
                apply_loss_grad(&codec.projector, st, &pseudo_target, &mut proj_grads);
            let gin: Vec<f64> = gin_mse.iter().zip(&gin_sb).map(|(a, c)| a + c).collect();
            input_grads.push(gin);
            total += mse_l + sb_l;
        }
        total /= b as f64;
        if !total.is_finite() {
            return Err(Error::TrainingDiverged { iteration });
        }
        proj_grads.scale(1.0 / b as f64);
        bridge_grads.scale(1.0 / b as f64);
        // Through the power normalization into the encoder.
        let dot_sum: f64 = input_grads
            .iter()
            .zip(&raw)
            .map(|(g, r)| g.iter().zip(r).map(|(a, c)| a * c).sum::<f64>())
            .sum();
        let pm32 = scale / power;
        let mut enc_grads = MlpGrads::zeros_like(&codec.encoder);
        for (x, (r, g)) in batch.iter().zip(raw.iter().zip(&input_grads)) {
            let raw_grad: Vec<f64> = r
                .iter()
                .zip(g)
                .map(|(ri, gi)| scale * gi - pm32 / (b * k) as f64 * dot_sum * ri)
                .collect();
            let out = codec.encoder.apply(x)?;
            let target: Vec<f64> = out.iter().zip(&raw_grad).map(|(o, g2)| o - g2 / 2.0).collect();
            apply_loss_grad(&codec.encoder, x, &target, &mut enc_grads);
        }
        enc_grads.scale(1.0 / b as f64);

        let (enc, ea) = adam_update(enc_adam, codec.encoder, &enc_grads)?;
        let (proj, pa) = adam_update(proj_adam, codec.projector, &proj_grads)?;
        let (br, ba) = adam_update(bridge_adam, bridge, &bridge_grads)?;
        codec.encoder = enc;
        codec.projector = proj;
        bridge = br;
        enc_adam = ea;
        proj_adam = pa;
        bridge_adam = ba;

        if per_segment > 0 && (iteration + 1) % per_segment == 0 {
            let segment = (iteration + 1) / per_segment - 1;
            let mut eval_rng = RngState::derive(master_seed, 3000 + segment as u64);
            let mse = heldout_mse(&codec, heldout, channel, &mut eval_rng)?;
            loss_section.push(vec![
                "finetune".into(),
                segment.into(),
                mse.into(),
                train.seed.into(),
            ]);
        }
    }
    Ok((codec, bridge))
}

/// Generate decoded endpoint samples for held-out sources.
pub fn decode_heldout(
    system: &TrainedSystem,
    channel: &ChannelConfig,
    heldout: &[Vec<f64>],
    n_steps: usize,
    rng: &mut RngState,
) -> Result<Vec<Vec<f64>>> {
    heldout
        .iter()
        .map(|x| {
            let x1 = pipeline_endpoint(&system.codec, system.power_scale, channel, x, rng)?;
            let (xhat, _) = consistency_sample(&system.bridge, &x1, n_steps, &system.sched, rng)?;
            Ok(xhat)
        })
        .collect()
}

/// Run the full staged protocol with sweeps; returns the report and a
/// checkpoint of the trained system.
pub fn run_staged_pipeline(cfg: &ExperimentConfig) -> Result<(Report, Checkpoint)> {
    let mut report = Report::new(cfg.seed, cfg.to_toml()?);
    let system = train_system(cfg, &mut report)?;
    let heldout = cfg.dataset.sample(cfg.eval.n_eval)?;

    // SNR sweep: projection MSE and decoded-endpoint transport distance.
    let mut snr_section = Section::new("snr_sweep", &["snr_db", "mse", "w2", "seed"]);
    for (i, &snr) in cfg.sweep.snr_db.iter().enumerate() {
        let ch = ChannelConfig {
            snr_db: snr,
            ..cfg.channel
        };
        let mut rng = RngState::derive(cfg.seed, 4000 + i as u64);
        let mse = heldout_mse(&system.codec, &heldout, &ch, &mut rng)?;
        let decoded = decode_heldout(&system, &ch, &heldout, 10, &mut rng)?;
        let w2 = endpoint_w2(&decoded, &heldout)?;
        snr_section.push(vec![snr.into(), mse.into(), w2.into(), cfg.seed.into()]);
    }
    report.section(snr_section);

    // NFE sweep: decoded endpoint quality against the refinement depth.
    let mut nfe_section = Section::new("nfe_sweep", &["n_steps", "w2", "mse", "seed"]);
    for (i, &n) in cfg.sweep.n_steps.iter().enumerate() {
        let mut rng = RngState::derive(cfg.seed, 5000 + i as u64);
        let decoded = decode_heldout(&system, &cfg.channel, &heldout, n, &mut rng)?;
        let w2 = endpoint_w2(&decoded, &heldout)?;
        let mse = decoded
            .iter()
            .zip(&heldout)
            .map(|(a, x)| dist_sq(a, x))
            .sum::<f64>()
            / heldout.len() as f64;
        nfe_section.push(vec![n.into(), w2.into(), mse.into(), cfg.seed.into()]);
    }
    report.section(nfe_section);

    // Bandwidth-ratio sweep: retrain a reduced codec per k.
    let mut cbr_section = Section::new("cbr_sweep", &["k", "cbr", "mse", "w2", "seed"]);
    for (i, &k) in cfg.sweep.cbr_k.iter().enumerate() {
        let (mse, w2) = cbr_point(cfg, k, i as u64)?;
        cbr_section.push(vec![
            k.into(),
            (k as f64 / cfg.codec.n_dim as f64).into(),
            mse.into(),
            w2.into(),
            cfg.seed.into(),
        ]);
    }
    report.section(cbr_section);

    let checkpoint = Checkpoint {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        codec: system.codec.clone(),
        power_scale: system.power_scale,
        bridge: system.bridge.clone(),
        schedule: cfg.schedule.clone(),
        cdm: None,
        cdm_config: None,
    };
    report.validate()?;
    Ok((report, checkpoint))
}

/// One bandwidth-ratio sweep point: pretrain a codec with `k` symbols and a
/// short bridge stage, then evaluate at the configured channel.
fn cbr_point(cfg: &ExperimentConfig, k: usize, lane: u64) -> Result<(f64, f64)> {
    let mut sub = cfg.clone();
    sub.codec.k_dim = k;
    // Shortened stages keep the sweep at seconds scale.
    sub.stages.pretrain.iterations = (cfg.stages.pretrain.iterations / 2).max(1);
    sub.stages.robust.iterations = 0;
    sub.stages.finetune.iterations = 0;
    sub.stages.bridge.iterations = (cfg.stages.bridge.iterations / 2).max(1);
    sub.stages.pretrain.seed = cfg.stages.pretrain.seed.wrapping_add(7000 + lane);
    sub.stages.bridge.seed = cfg.stages.bridge.seed.wrapping_add(7100 + lane);
    let mut scratch = Report::new(sub.seed, String::new());
    let system = train_system(&sub, &mut scratch)?;
    let heldout = sub.dataset.sample(sub.eval.n_eval)?;
    let mut rng = RngState::derive(sub.seed, 6000 + lane);
    let mse = heldout_mse(&system.codec, &heldout, &sub.channel, &mut rng)?;
    let decoded = decode_heldout(&system, &sub.channel, &heldout, 10, &mut rng)?;
    let w2 = endpoint_w2(&decoded, &heldout)?;
    Ok((mse, w2))
}

/// Semantic-endpoint cloud for theory checks: projected semantics for a
/// held-out batch, batch-normalized encoding.
pub fn projected_semantics(
    codec: &CodecConfig,
    channel: &ChannelConfig,
    heldout: &[Vec<f64>],
    rng: &mut RngState,
) -> Result<Vec<Vec<f64>>> {
    let (encoded, _) = encode_with_scale(codec, heldout)?;
    encoded
        .iter()
        .map(|s| {
            let (s_hat, h) = channel_apply(channel, s, rng)?;
            let s_tilde = match equalize(&s_hat, h) {
                Ok(v) => v,
                Err(Error::DeepFade { .. }) => vec![0.0; codec.k_dim],
                Err(e) => return Err(e),
            };
            project(codec, &s_tilde)
        })
        .collect()
}

/// Convenience wrapper for tests: transport distance between decoded
/// endpoints and the data cloud.
pub fn decoded_w2(
    system: &TrainedSystem,
    channel: &ChannelConfig,
    heldout: &[Vec<f64>],
    n_steps: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = RngState::derive(seed, 0);
    let decoded = decode_heldout(system, channel, heldout, n_steps, &mut rng)?;
    let w2sq = w2sq_empirical(&decoded, heldout)?;
    Ok(w2sq.sqrt())
}
