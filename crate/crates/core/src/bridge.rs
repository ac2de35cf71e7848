//! Noise schedules and the analytic zero-drift bridge posterior.
//!
//! With a driftless reference diffusion `dx = sqrt(beta_t) dW`, the state
//! pinned at both endpoints is Gaussian: conditioning `x_t` on `(x0, x1)`
//! gives
//!
//! ```text
//! mu_t    = (sbar_t^2 * x0 + s_t^2 * x1) / (s_t^2 + sbar_t^2)
//! Sigma_t =  s_t^2 * sbar_t^2            / (s_t^2 + sbar_t^2)
//! ```
//!
//! where `s_t^2` is the variance accumulated on `[0, t]` and `sbar_t^2` the
//! variance remaining on `[t, 1]`. Everything here is a pure function of its
//! inputs; [`NoiseSchedule`] is immutable after construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Supported diffusion-rate shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `beta(t) = beta_scale` everywhere.
    Constant,
    /// Symmetric triangle peaking at `t = 0.5`, integrating to `beta_scale`.
    /// Symmetric shapes equalize the two cumulative variances at mid-time.
    Triangular,
}

/// Discretized diffusion rate with cumulative variances on a uniform grid of
/// `n_steps` intervals over `[0, 1]`.
///
/// `cum_fwd[i]` is the variance accumulated on `[0, i/n]` (strictly
/// increasing from 0) and `cum_bwd[i]` the variance remaining on `[i/n, 1]`
/// (strictly decreasing to 0). `cum_bwd` is derived as `total - cum_fwd`, so
/// the two always sum to the total exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    beta: Vec<f64>,
    cum_fwd: Vec<f64>,
    cum_bwd: Vec<f64>,
}

impl NoiseSchedule {
    /// Build a schedule. `beta_scale` is the per-unit-time rate for the
    /// constant kind and the total integrated variance for the triangular
    /// kind.
    pub fn new(kind: ScheduleKind, n_steps: usize, beta_scale: f64) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_steps must be >= 2, got {n_steps}"
            )));
        }
        if !(beta_scale > 0.0) || !beta_scale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta_scale must be positive and finite, got {beta_scale}"
            )));
        }
        let n = n_steps;
        let dt = 1.0 / n as f64;
        let beta: Vec<f64> = match kind {
            ScheduleKind::Constant => vec![beta_scale; n],
            ScheduleKind::Triangular => (0..n)
                .map(|i| {
                    let t_mid = (i as f64 + 0.5) * dt;
                    beta_scale * 2.0 * (1.0 - (2.0 * t_mid - 1.0).abs())
                })
                .collect(),
        };
        let mut cum_fwd = Vec::with_capacity(n + 1);
        cum_fwd.push(0.0);
        let mut acc = 0.0;
        for b in &beta {
            acc += b * dt;
            cum_fwd.push(acc);
        }
        let total = *cum_fwd.last().unwrap();
        let cum_bwd = cum_fwd.iter().map(|c| total - c).collect();
        Ok(NoiseSchedule {
            beta,
            cum_fwd,
            cum_bwd,
        })
    }

    /// Number of grid intervals.
    pub fn n_steps(&self) -> usize {
        self.beta.len()
    }

    /// Per-step diffusion rates.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Cumulative forward variances at the grid points (length `n_steps+1`).
    pub fn cum_fwd(&self) -> &[f64] {
        &self.cum_fwd
    }

    /// Remaining variances at the grid points (length `n_steps+1`).
    pub fn cum_bwd(&self) -> &[f64] {
        &self.cum_bwd
    }

    /// Total integrated variance over `[0, 1]`.
    pub fn total_variance(&self) -> f64 {
        *self.cum_fwd.last().unwrap()
    }

    /// Diffusion rate at time `t` (piecewise constant over the grid).
    pub fn beta_at(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let n = self.beta.len();
        let idx = ((t * n as f64) as usize).min(n - 1);
        Ok(self.beta[idx])
    }

    /// Cumulative variances `(sigma_sq, sigma_bar_sq)` at `t`, with linear
    /// interpolation between grid points. The pair always sums to the total.
    pub fn variances_at(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        let n = self.beta.len() as f64;
        let pos = t * n;
        let i = (pos.floor() as usize).min(self.beta.len() - 1);
        let frac = pos - i as f64;
        let sigma_sq = if frac == 0.0 {
            self.cum_fwd[i]
        } else {
            self.cum_fwd[i] + frac * (self.cum_fwd[i + 1] - self.cum_fwd[i])
        };
        Ok((sigma_sq, self.total_variance() - sigma_sq))
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("time {t} outside [0, 1]")));
    }
    Ok(())
}

fn check_dims(x0: &[f64], x1: &[f64]) -> Result<()> {
    if x0.len() != x1.len() {
        return Err(Error::Shape {
            expected: x0.len(),
            got: x1.len(),
        });
    }
    Ok(())
}

/// Gaussian posterior of the pinned state: isotropic variance, mean a convex
/// combination of the endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePosterior {
    pub mean: Vec<f64>,
    pub variance: f64,
}

/// Posterior parameters of `x_t` given endpoints `x0` (at time 0) and `x1`
/// (at time 1). Exact at the endpoints: `(x0, 0)` at `t = 0`, `(x1, 0)` at
/// `t = 1`.
pub fn posterior_params(
    x0: &[f64],
    x1: &[f64],
    t: f64,
    sched: &NoiseSchedule,
) -> Result<BridgePosterior> {
    posterior_params_window(x0, x1, t, 1.0, sched)
}

/// Posterior of `x_t` for the sub-bridge pinned at `x0` (time 0) and `x_end`
/// (time `t_end`), using the schedule's cumulative variances restricted to
/// the `[0, t_end]` window. The full-interval posterior is the `t_end = 1`
/// case; the consistency sampler needs the general form.
pub fn posterior_params_window(
    x0: &[f64],
    x_end: &[f64],
    t: f64,
    t_end: f64,
    sched: &NoiseSchedule,
) -> Result<BridgePosterior> {
    check_dims(x0, x_end)?;
    check_time(t_end)?;
    if t > t_end {
        return Err(Error::Domain(format!(
            "time {t} outside window [0, {t_end}]"
        )));
    }
    let (s_sq, _) = sched.variances_at(t)?;
    let (end_sq, _) = sched.variances_at(t_end)?;
    let sbar_sq = end_sq - s_sq;
    let denom = s_sq + sbar_sq;
    if denom == 0.0 {
        // Degenerate window: both pins coincide in variance-time.
        return Ok(BridgePosterior {
            mean: x0.to_vec(),
            variance: 0.0,
        });
    }
    // w0 = 1 - w1 keeps the coefficient sum at exactly 1.0.
    let w1 = s_sq / denom;
    let w0 = 1.0 - w1;
    let mean = x0
        .iter()
        .zip(x_end)
        .map(|(a, b)| w0 * a + w1 * b)
        .collect();
    let variance = s_sq * sbar_sq / denom;
    Ok(BridgePosterior { mean, variance })
}

/// Draw `x_t ~ N(mu_t, Sigma_t I)` by reparameterization:
/// `x_t = mu_t + sqrt(Sigma_t) * z`. Deterministic given `rng`.
pub fn sample_posterior(
    x0: &[f64],
    x1: &[f64],
    t: f64,
    sched: &NoiseSchedule,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    sample_posterior_window(x0, x1, t, 1.0, sched, rng)
}

/// Windowed variant of [`sample_posterior`]; see
/// [`posterior_params_window`].
pub fn sample_posterior_window(
    x0: &[f64],
    x_end: &[f64],
    t: f64,
    t_end: f64,
    sched: &NoiseSchedule,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let post = posterior_params_window(x0, x_end, t, t_end, sched)?;
    let sd = post.variance.sqrt();
    Ok(post
        .mean
        .iter()
        .map(|m| m + sd * rng.normal())
        .collect())
}

/// Draw from the forward marginal `p(x_t | x0) = N(x0, sigma_t^2 I)` of the
/// driftless reference process.
pub fn sample_forward_marginal(
    x0: &[f64],
    t: f64,
    sched: &NoiseSchedule,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let (s_sq, _) = sched.variances_at(t)?;
    let sd = s_sq.sqrt();
    Ok(x0.iter().map(|m| m + sd * rng.normal()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecmath::{mean, variance};
    use proptest::prelude::*;

    /// Quadrature oracle: integrate the analytic beta shape over [0, t] with
    /// a fine midpoint rule, independently of the schedule's prefix sums.
    fn integral_oracle(kind: ScheduleKind, beta_scale: f64, t: f64) -> f64 {
        let m = 200_000;
        let h = t / m as f64;
        (0..m)
            .map(|i| {
                let tau = (i as f64 + 0.5) * h;
                let b = match kind {
                    ScheduleKind::Constant => beta_scale,
                    ScheduleKind::Triangular => {
                        beta_scale * 2.0 * (1.0 - (2.0 * tau - 1.0).abs())
                    }
                };
                b * h
            })
            .sum()
    }

    #[test]
    fn constant_total_matches_quadrature() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let oracle = integral_oracle(ScheduleKind::Constant, 1.0, 1.0);
        assert!((sched.total_variance() - oracle).abs() < 1e-10);
        assert!((sched.total_variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cum_fwd_starts_at_zero() {
        for n in [2, 7, 100] {
            for b in [0.3, 1.0, 4.0] {
                let sched = NoiseSchedule::new(ScheduleKind::Constant, n, b).unwrap();
                assert_eq!(sched.cum_fwd()[0], 0.0);
                let tri = NoiseSchedule::new(ScheduleKind::Triangular, n, b).unwrap();
                assert_eq!(tri.cum_fwd()[0], 0.0);
            }
        }
    }

    #[test]
    fn complementarity_exact_on_grid() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let total = sched.total_variance();
        for i in 0..=100 {
            assert_eq!(sched.cum_fwd()[i] + sched.cum_bwd()[i], total);
        }
    }

    #[test]
    fn variances_at_quarter_point() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let (s, sb) = sched.variances_at(0.25).unwrap();
        let oracle = integral_oracle(ScheduleKind::Constant, 1.0, 0.25);
        assert!((s - oracle).abs() < 1e-10);
        assert!((s - 0.25).abs() < 1e-12);
        assert!((sb - 0.75).abs() < 1e-12);
    }

    #[test]
    fn variances_at_endpoints() {
        for kind in [ScheduleKind::Constant, ScheduleKind::Triangular] {
            let sched = NoiseSchedule::new(kind, 50, 2.5).unwrap();
            let total = sched.total_variance();
            assert_eq!(sched.variances_at(0.0).unwrap(), (0.0, total));
            let (s1, sb1) = sched.variances_at(1.0).unwrap();
            assert_eq!(s1, total);
            assert_eq!(sb1, 0.0);
        }
    }

    #[test]
    fn variances_interpolate_against_quadrature() {
        for kind in [ScheduleKind::Constant, ScheduleKind::Triangular] {
            let sched = NoiseSchedule::new(kind, 64, 1.7).unwrap();
            for &t in &[0.1, 0.333, 0.5, 0.77, 0.9] {
                let (s, _) = sched.variances_at(t).unwrap();
                let oracle = integral_oracle(kind, 1.7, t);
                // Triangular kink inside an interval costs O(dt^2).
                assert!(
                    (s - oracle).abs() < 3e-4,
                    "kind {kind:?} t={t}: {s} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn triangular_symmetric_at_half() {
        let sched = NoiseSchedule::new(ScheduleKind::Triangular, 64, 1.0).unwrap();
        let (s, sb) = sched.variances_at(0.5).unwrap();
        assert!((s - sb).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(NoiseSchedule::new(ScheduleKind::Constant, 1, 1.0).is_err());
        assert!(NoiseSchedule::new(ScheduleKind::Constant, 10, 0.0).is_err());
        assert!(NoiseSchedule::new(ScheduleKind::Constant, 10, -1.0).is_err());
    }

    #[test]
    fn time_outside_domain_rejected() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 10, 1.0).unwrap();
        assert!(sched.variances_at(-0.1).is_err());
        assert!(sched.variances_at(1.1).is_err());
    }

    #[test]
    fn posterior_endpoints_exact() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let x0 = vec![1.5, -2.0];
        let x1 = vec![0.25, 3.0];
        let p0 = posterior_params(&x0, &x1, 0.0, &sched).unwrap();
        assert_eq!(p0.mean, x0);
        assert_eq!(p0.variance, 0.0);
        let p1 = posterior_params(&x0, &x1, 1.0, &sched).unwrap();
        assert_eq!(p1.mean, x1);
        assert_eq!(p1.variance, 0.0);
    }

    #[test]
    fn posterior_midpoint_scalar() {
        // Constant beta = 1, t = 0.5: s^2 = sbar^2 = 0.5, so the mean is the
        // midpoint and the variance is 0.5 * 0.5 / 1.0 = 0.25.
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let p = posterior_params(&[0.0], &[2.0], 0.5, &sched).unwrap();
        assert!((p.mean[0] - 1.0).abs() < 1e-12);
        assert!((p.variance - 0.25).abs() < 1e-12);
    }

    /// Independent pinned-path oracle: build the conditioned state from raw
    /// Brownian increments instead of the posterior formulas.
    fn pinned_path_oracle(
        x0: f64,
        x1: f64,
        s_sq: f64,
        total: f64,
        rng: &mut RngState,
    ) -> f64 {
        let w_t = (s_sq).sqrt() * rng.normal();
        let w_1 = w_t + (total - s_sq).sqrt() * rng.normal();
        x0 + w_t - (s_sq / total) * (x0 + w_1 - x1)
    }

    #[test]
    fn posterior_matches_pinned_brownian_statistics() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let (x0, x1, t) = (0.0, 2.0, 0.5);
        let (s_sq, _) = sched.variances_at(t).unwrap();
        let total = sched.total_variance();
        let mut rng = RngState::derive(11, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| pinned_path_oracle(x0, x1, s_sq, total, &mut rng))
            .collect();
        let p = posterior_params(&[x0], &[x1], t, &sched).unwrap();
        let se_mean = (p.variance / n as f64).sqrt();
        assert!((mean(&draws) - p.mean[0]).abs() < 4.0 * se_mean);
        assert!((variance(&draws) - p.variance).abs() / p.variance < 0.05);
    }

    #[test]
    fn sample_posterior_endpoint_exact() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 10, 1.0).unwrap();
        let x0 = vec![3.0, -1.0];
        let x1 = vec![0.0, 0.5];
        let mut rng = RngState::from_seed(5);
        assert_eq!(
            sample_posterior(&x0, &x1, 0.0, &sched, &mut rng).unwrap(),
            x0
        );
        assert_eq!(
            sample_posterior(&x0, &x1, 1.0, &sched, &mut rng).unwrap(),
            x1
        );
    }

    #[test]
    fn sample_posterior_moments() {
        // 1e5 draws at t = 0.5 of the scalar (0 -> 2) bridge: mean within
        // 3 * sqrt(0.25 / 1e5) of 1.0, variance within 5% of 0.25.
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let mut rng = RngState::derive(3, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_posterior(&[0.0], &[2.0], 0.5, &sched, &mut rng).unwrap()[0])
            .collect();
        let se = (0.25f64 / n as f64).sqrt();
        assert!((mean(&draws) - 1.0).abs() < 3.0 * se);
        assert!((variance(&draws) - 0.25).abs() / 0.25 < 0.05);
    }

    #[test]
    fn forward_marginal_moments() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let mut rng = RngState::derive(4, 0);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_forward_marginal(&[0.0], 1.0, &sched, &mut rng).unwrap()[0])
            .collect();
        assert!((variance(&draws) - 1.0).abs() < 0.05);
        let se = (1.0f64 / n as f64).sqrt();
        assert!(mean(&draws).abs() < 3.0 * se);
        // Martingale property at interior times too.
        let mut rng = RngState::derive(9, 0);
        let t = 0.37;
        let (s_sq, _) = sched.variances_at(t).unwrap();
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_forward_marginal(&[1.25], t, &sched, &mut rng).unwrap()[0])
            .collect();
        assert!((mean(&draws) - 1.25).abs() < 3.0 * (s_sq / n as f64).sqrt());
    }

    #[test]
    fn forward_marginal_t0_exact() {
        let sched = NoiseSchedule::new(ScheduleKind::Triangular, 16, 1.0).unwrap();
        let mut rng = RngState::from_seed(0);
        let x0 = vec![0.7, -0.2, 5.0];
        assert_eq!(
            sample_forward_marginal(&x0, 0.0, &sched, &mut rng).unwrap(),
            x0
        );
    }

    #[test]
    fn marginal_consistency_two_sample() {
        // Drawing x1 from the forward marginal at t=1 and then x_t from the
        // posterior reproduces the forward marginal at t.
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 100, 1.0).unwrap();
        let x0 = vec![0.5];
        let t = 0.4;
        let n = 100_000;
        let mut rng = RngState::derive(21, 0);
        let via_bridge: Vec<f64> = (0..n)
            .map(|_| {
                let x1 = sample_forward_marginal(&x0, 1.0, &sched, &mut rng).unwrap();
                sample_posterior(&x0, &x1, t, &sched, &mut rng).unwrap()[0]
            })
            .collect();
        let mut rng = RngState::derive(22, 0);
        let direct: Vec<f64> = (0..n)
            .map(|_| sample_forward_marginal(&x0, t, &sched, &mut rng).unwrap()[0])
            .collect();
        let (m1, v1) = (mean(&via_bridge), variance(&via_bridge));
        let (m2, v2) = (mean(&direct), variance(&direct));
        assert!((m1 - m2).abs() < 0.05 * v2.sqrt().max(0.1));
        assert!((v1 - v2).abs() / v2 < 0.05);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sched = NoiseSchedule::new(ScheduleKind::Constant, 10, 1.0).unwrap();
        assert!(matches!(
            posterior_params(&[0.0], &[1.0, 2.0], 0.5, &sched),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn determinism_bitwise() {
        let sched = NoiseSchedule::new(ScheduleKind::Triangular, 32, 0.8).unwrap();
        let x0 = vec![0.1, 0.2, 0.3];
        let x1 = vec![-1.0, 2.0, 0.0];
        let a = sample_posterior(&x0, &x1, 0.63, &sched, &mut RngState::derive(99, 3)).unwrap();
        let b = sample_posterior(&x0, &x1, 0.63, &sched, &mut RngState::derive(99, 3)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    proptest! {
        #[test]
        fn coefficients_sum_to_one(
            n in 2usize..64,
            b in 0.1f64..4.0,
            i in 0usize..65,
            tri in proptest::bool::ANY,
        ) {
            let kind = if tri { ScheduleKind::Triangular } else { ScheduleKind::Constant };
            let sched = NoiseSchedule::new(kind, n, b).unwrap();
            let i = i.min(n);
            let t = i as f64 / n as f64;
            let (s_sq, sb_sq) = sched.variances_at(t).unwrap();
            let denom = s_sq + sb_sq;
            if denom > 0.0 {
                let w1 = s_sq / denom;
                let w0 = 1.0 - w1;
                prop_assert_eq!(w0 + w1, 1.0);
            }
        }

        #[test]
        fn posterior_variance_below_harmonic_bound(
            n in 2usize..64,
            b in 0.1f64..4.0,
            t in 0.0f64..=1.0,
        ) {
            let sched = NoiseSchedule::new(ScheduleKind::Constant, n, b).unwrap();
            let p = posterior_params(&[0.0], &[1.0], t, &sched).unwrap();
            let (s_sq, sb_sq) = sched.variances_at(t).unwrap();
            prop_assert!(p.variance <= s_sq.min(sb_sq) + 1e-15);
            prop_assert!(p.variance >= 0.0);
        }

        #[test]
        fn cum_fwd_strictly_increasing(n in 2usize..64, b in 0.1f64..4.0) {
            let sched = NoiseSchedule::new(ScheduleKind::Triangular, n, b).unwrap();
            for i in 0..n {
                prop_assert!(sched.cum_fwd()[i] < sched.cum_fwd()[i + 1]);
                prop_assert!(sched.cum_bwd()[i] > sched.cum_bwd()[i + 1]);
            }
            prop_assert!(sched.beta().iter().all(|&x| x > 0.0));
        }
    }
}
