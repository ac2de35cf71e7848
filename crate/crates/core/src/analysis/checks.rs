//! Empirical verifications built on the transport and kinetic-energy
//! estimators: the distribution-distance premise, the kinetic-energy
//! monotonicity and mixture-convexity inequalities, and the discretization
//! convergence curve.

use serde::{Deserialize, Serialize};

use crate::analysis::nfe::nfe_bound;
use crate::analysis::pke::pke_from_trajectories;
use crate::analysis::w2::{w2sq_1d, w2sq_empirical};
use crate::bridge::NoiseSchedule;
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::sampling::em_backward;
use crate::vecmath::mean;

/// Analytic bridge between two isotropic Gaussians under the driftless
/// reference process with independent endpoint coupling. `std0 = 0`
/// degenerates the data side to a point mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPairBridge {
    pub mean0: Vec<f64>,
    pub std0: f64,
    pub mean1: Vec<f64>,
    pub std1: f64,
}

impl GaussianPairBridge {
    pub fn dim(&self) -> usize {
        self.mean0.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean0.len() != self.mean1.len() {
            return Err(Error::Shape {
                expected: self.mean0.len(),
                got: self.mean1.len(),
            });
        }
        if self.std0 < 0.0 || self.std1 <= 0.0 {
            return Err(Error::InvalidConfig(
                "endpoint spreads must satisfy std0 >= 0, std1 > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn sample_endpoint0(&self, rng: &mut RngState) -> Vec<f64> {
        self.mean0.iter().map(|m| m + self.std0 * rng.normal()).collect()
    }

    pub fn sample_endpoint1(&self, rng: &mut RngState) -> Vec<f64> {
        self.mean1.iter().map(|m| m + self.std1 * rng.normal()).collect()
    }

    /// Drift of the path pinned at a known clean endpoint, in the
    /// backward-integration convention (the integrator subtracts it):
    /// `beta(t) (x - x0) / sigma_t^2`. This is exactly the dynamics the
    /// consistency decoder follows when its prediction is exact.
    pub fn pinned_drift(
        &self,
        x0: &[f64],
        x: &[f64],
        t: f64,
        sched: &NoiseSchedule,
    ) -> Result<Vec<f64>> {
        let (s_sq, _) = sched.variances_at(t)?;
        if s_sq == 0.0 {
            return Err(Error::SingularTarget { t });
        }
        let beta = sched.beta_at(t)?;
        Ok(x.iter()
            .zip(x0)
            .map(|(b, a)| beta * (b - a) / s_sq)
            .collect())
    }

    /// Marginal drift of the endpoint-pair mixture in the same subtracted
    /// convention, `beta(t) / sigma_t^2 * (x - E[x0 | x_t = x])`, with the
    /// conditional expectation in closed form because everything is jointly
    /// Gaussian.
    pub fn marginal_drift(&self, x: &[f64], t: f64, sched: &NoiseSchedule) -> Result<Vec<f64>> {
        let (s_sq, sbar_sq) = sched.variances_at(t)?;
        if s_sq == 0.0 {
            return Err(Error::SingularTarget { t });
        }
        let beta = sched.beta_at(t)?;
        let total = s_sq + sbar_sq;
        let w1 = s_sq / total;
        let w0 = 1.0 - w1;
        let bridge_var = s_sq * sbar_sq / total;
        let var_t =
            w0 * w0 * self.std0 * self.std0 + w1 * w1 * self.std1 * self.std1 + bridge_var;
        let cov = w0 * self.std0 * self.std0;
        let rho = if var_t > 0.0 { cov / var_t } else { 0.0 };
        Ok(x.iter()
            .zip(self.mean0.iter().zip(&self.mean1))
            .map(|(&xi, (&m0, &m1))| {
                let mean_t = w0 * m0 + w1 * m1;
                let e_x0 = m0 + rho * (xi - mean_t);
                beta * (xi - e_x0) / s_sq
            })
            .collect())
    }
}

/// One row of the discretization error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmErrorRow {
    pub n_steps: usize,
    pub w2_error: f64,
    pub bound: f64,
}

/// Discretization error of the backward sampler on the analytic
/// Gaussian-pair bridge.
///
/// For each step count, integrate the pinned dynamics with the
/// Euler-Maruyama scheme over `n_paths` endpoint pairs, then measure the
/// 1D transport distance between the produced endpoint cloud and exact
/// draws of the data side. The bound column evaluates `C / sqrt(N)` with
/// the error constant assembled from the kinetic energy measured on a
/// 200-step reference run and the drift slope probed on the time window
/// `[0.1, 1]` (the analytic slope grows without bound toward `t = 0`, so
/// the probe window is part of the reported method).
pub fn em_error_curve(
    spec: &GaussianPairBridge,
    sched: &NoiseSchedule,
    step_counts: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<EmErrorRow>> {
    spec.validate()?;
    if spec.dim() != 1 && spec.dim() != 2 {
        return Err(Error::InvalidConfig(
            "error curve supports 1D/2D endpoint pairs".into(),
        ));
    }
    if step_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "step counts must be strictly ascending".into(),
        ));
    }
    // Reference kinetic energy at the fixed estimation resolution.
    let mut pke_rng = RngState::derive(seed, 1);
    let pke_paths = 400.min(n_paths.max(32));
    let mut trajs = Vec::with_capacity(pke_paths);
    for _ in 0..pke_paths {
        let x0 = spec.sample_endpoint0(&mut pke_rng);
        let x1 = spec.sample_endpoint1(&mut pke_rng);
        let traj = em_backward(
            |x, k| {
                let t = k as f64 / 200.0;
                spec.pinned_drift(&x0, x, t, sched).unwrap()
            },
            &x1,
            200,
            Some(sched),
            &mut pke_rng,
            true,
        )?;
        trajs.push(traj);
    }
    let pke = pke_from_trajectories(&trajs)?;
    let lipschitz = drift_slope_bound(spec, sched)?;
    let sigma_bar = sched
        .beta()
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .sqrt();
    let bound_inputs = nfe_bound(pke.value, sigma_bar, spec.dim(), lipschitz, 1.0);

    let mut rows = Vec::with_capacity(step_counts.len());
    for (idx, &n) in step_counts.iter().enumerate() {
        let mut rng = RngState::derive(seed, 100 + idx as u64);
        let mut endpoints = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            let x0 = spec.sample_endpoint0(&mut rng);
            let x1 = spec.sample_endpoint1(&mut rng);
            let traj = em_backward(
                |x, k| {
                    let t = k as f64 / n as f64;
                    spec.pinned_drift(&x0, x, t, sched).unwrap()
                },
                &x1,
                n,
                Some(sched),
                &mut rng,
                false,
            )?;
            endpoints.push(traj.final_state().to_vec());
        }
        let mut exact_rng = RngState::derive(seed, 500 + idx as u64);
        let exact: Vec<Vec<f64>> = (0..n_paths)
            .map(|_| spec.sample_endpoint0(&mut exact_rng))
            .collect();
        let w2_error = endpoint_w2(&endpoints, &exact)?;
        let bound = (bound_inputs.c_sq / n as f64).sqrt();
        rows.push(EmErrorRow {
            n_steps: n,
            w2_error,
            bound,
        });
    }
    Ok(rows)
}

/// Transport distance between endpoint clouds, using the sorted form in 1D
/// (scales past the exact-assignment cap) and exact assignment otherwise.
pub fn endpoint_w2(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let dim = a.first().map_or(0, Vec::len);
    let w2sq = if dim == 1 {
        let av: Vec<f64> = a.iter().map(|v| v[0]).collect();
        let bv: Vec<f64> = b.iter().map(|v| v[0]).collect();
        w2sq_1d(&av, &bv)?
    } else {
        w2sq_empirical(a, b)?
    };
    Ok(w2sq.sqrt())
}

/// Max finite-difference slope of the pinned drift over a probe grid with
/// times restricted to `[0.1, 1]`.
fn drift_slope_bound(spec: &GaussianPairBridge, sched: &NoiseSchedule) -> Result<f64> {
    let x0 = spec.mean0.clone();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for i in 1..=10 {
        let t = 0.1 * i as f64;
        for offset in [-2.0, 0.0, 2.0] {
            let x: Vec<f64> = spec.mean1.iter().map(|m| m + offset).collect();
            let mut x_plus = x.clone();
            x_plus[0] += h;
            let d0 = spec.pinned_drift(&x0, &x, t, sched)?;
            let d1 = spec.pinned_drift(&x0, &x_plus, t, sched)?;
            worst = worst.max((d1[0] - d0[0]).abs() / h);
        }
    }
    Ok(worst)
}

/// Outcome of the distribution-distance premise check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub w2sq_semantic: f64,
    pub w2sq_prior: f64,
    pub holds: bool,
    /// Percentile bootstrap interval for `w2sq_prior - w2sq_semantic`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_bootstrap: usize,
}

/// Compare the projected-semantics cloud and an isotropic Gaussian prior
/// cloud against the data cloud in exact transport cost. The strict
/// inequality flag comes with a bootstrap confidence interval on the gap.
pub fn check_assumption1(
    semantic_projected: &[Vec<f64>],
    data: &[Vec<f64>],
    rng: &mut RngState,
) -> Result<Assumption1Report> {
    if semantic_projected.len() != data.len() {
        return Err(Error::Shape {
            expected: data.len(),
            got: semantic_projected.len(),
        });
    }
    let dim = data.first().map_or(0, Vec::len);
    let n = data.len();
    let prior: Vec<Vec<f64>> = (0..n).map(|_| rng.normal_vec(dim)).collect();
    let w2sq_semantic = w2sq_empirical(semantic_projected, data)?;
    let w2sq_prior = w2sq_empirical(&prior, data)?;

    let n_bootstrap = 32;
    let mut gaps = Vec::with_capacity(n_bootstrap);
    for _ in 0..n_bootstrap {
        let idx: Vec<usize> = (0..n).map(|_| rng.index(n)).collect();
        let sem_b: Vec<Vec<f64>> = idx.iter().map(|&i| semantic_projected[i].clone()).collect();
        let pri_b: Vec<Vec<f64>> = idx.iter().map(|&i| prior[i].clone()).collect();
        let dat_b: Vec<Vec<f64>> = idx.iter().map(|&i| data[i].clone()).collect();
        let gs = w2sq_empirical(&sem_b, &dat_b)?;
        let gp = w2sq_empirical(&pri_b, &dat_b)?;
        gaps.push(gp - gs);
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo_idx = ((n_bootstrap as f64) * 0.025).floor() as usize;
    let hi_idx = (((n_bootstrap as f64) * 0.975).ceil() as usize).min(n_bootstrap - 1);
    Ok(Assumption1Report {
        w2sq_semantic,
        w2sq_prior,
        holds: w2sq_semantic < w2sq_prior,
        ci_low: gaps[lo_idx],
        ci_high: gaps[hi_idx],
        n_bootstrap,
    })
}

/// One row of the kinetic-energy monotonicity sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiRow {
    pub offset: f64,
    pub w2sq: f64,
    pub pke: f64,
    pub pke_std_err: f64,
}

/// Kinetic energy of the analytic Gaussian-pair bridge as a function of the
/// squared endpoint distance: simulate the marginal dynamics between
/// `N(0, I)` and `N(offset * e1, I)` for each offset and estimate the
/// energy. The minimum energy must grow with the endpoint transport
/// distance, at least as fast as its leading (quadratic-in-offset) term.
pub fn phi_monotonicity_check(
    mean_offsets: &[f64],
    sched: &NoiseSchedule,
    dim: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PhiRow>> {
    if mean_offsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("offsets must be ascending".into()));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidConfig("sweep supports 1D/2D pairs".into()));
    }
    let est_steps = 200;
    let mut rows = Vec::with_capacity(mean_offsets.len());
    for (k, &offset) in mean_offsets.iter().enumerate() {
        let mut mean0 = vec![0.0; dim];
        mean0[0] = offset;
        let spec = GaussianPairBridge {
            mean0,
            std0: 1.0,
            mean1: vec![0.0; dim],
            std1: 1.0,
        };
        let mut rng = RngState::derive(seed, k as u64);
        let mut trajs = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            let x1 = spec.sample_endpoint1(&mut rng);
            let traj = em_backward(
                |x, step| {
                    let t = step as f64 / est_steps as f64;
                    spec.marginal_drift(x, t, sched).unwrap()
                },
                &x1,
                est_steps,
                Some(sched),
                &mut rng,
                true,
            )?;
            trajs.push(traj);
        }
        let pke = pke_from_trajectories(&trajs)?;
        rows.push(PhiRow {
            offset,
            w2sq: offset * offset,
            pke: pke.value,
            pke_std_err: pke.std_err,
        });
    }
    Ok(rows)
}

/// Result of the mixture-convexity inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Verify `W2^2(mu, mixture) <= sum_c w_c W2^2(mu, nu_c)` empirically. The
/// mixture cloud is assembled by weighted deterministic subsampling so a
/// single-component call reproduces that component exactly.
pub fn mixture_convexity_check(
    mu: &[Vec<f64>],
    components: &[Vec<Vec<f64>>],
    weights: &[f64],
    slack: f64,
) -> Result<ConvexityReport> {
    if components.len() != weights.len() || components.is_empty() {
        return Err(Error::InvalidConfig(
            "need one weight per component".into(),
        ));
    }
    let wsum: f64 = weights.iter().sum();
    if (wsum - 1.0).abs() > 1e-9 || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidConfig("weights must sum to 1".into()));
    }
    let n = mu.len();
    // Deterministic proportional allocation, largest remainders last.
    let mut counts: Vec<usize> = weights.iter().map(|w| (w * n as f64).floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let k = counts.len();
    let mut c = 0;
    while assigned < n {
        counts[c % k] += 1;
        assigned += 1;
        c += 1;
    }
    let mut mixture = Vec::with_capacity(n);
    for (comp, &cnt) in components.iter().zip(&counts) {
        if comp.len() < cnt {
            return Err(Error::InvalidConfig(format!(
                "component holds {} samples, need {cnt}",
                comp.len()
            )));
        }
        mixture.extend(comp.iter().take(cnt).cloned());
    }
    let lhs = w2sq_empirical(mu, &mixture)?;
    let mut rhs = 0.0;
    for (comp, &w) in components.iter().zip(weights) {
        if comp.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: comp.len(),
            });
        }
        rhs += w * w2sq_empirical(mu, comp)?;
    }
    Ok(ConvexityReport {
        lhs,
        rhs,
        holds: lhs <= rhs + slack,
    })
}

/// Least-squares slope of `log error` against `log N`; the convergence-order
/// diagnostic for the error curve.
pub fn loglog_slope(rows: &[EmErrorRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| (r.n_steps as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.w2_error.max(1e-300).ln()).collect();
    let mx = mean(&xs);
    let my = mean(&ys);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
