//! Path kinetic energy estimation and the Girsanov correspondence.

use crate::error::{Error, Result};
use crate::sampling::Trajectory;
use crate::vecmath::{mean, norm_sq, variance};

/// Monte-Carlo estimate of the expected time-integral of the squared drift
/// along a path ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct PkeEstimate {
    pub value: f64,
    pub n_paths: usize,
    pub std_err: f64,
}

impl PkeEstimate {
    /// Direct constructor for analytically known energies.
    pub fn exact(value: f64) -> Self {
        PkeEstimate {
            value,
            n_paths: 0,
            std_err: 0.0,
        }
    }
}

/// Left-endpoint Riemann sum of `||u_t||^2` per path, averaged across the
/// ensemble with its standard error. All trajectories must carry recorded
/// drifts on a common grid.
pub fn pke_from_trajectories(trajs: &[Trajectory]) -> Result<PkeEstimate> {
    if trajs.is_empty() {
        return Err(Error::InvalidConfig("no trajectories supplied".into()));
    }
    let n_steps = trajs[0].n_steps();
    let mut per_path = Vec::with_capacity(trajs.len());
    for traj in trajs {
        let drifts = traj
            .drifts
            .as_ref()
            .ok_or(Error::IncompleteTrajectory("drift evaluations not recorded"))?;
        if traj.n_steps() != n_steps {
            return Err(Error::IncompleteTrajectory(
                "trajectories use different grids",
            ));
        }
        let sum: f64 = drifts.iter().map(|d| norm_sq(d)).sum();
        per_path.push(sum * traj.dt);
    }
    let value = mean(&per_path);
    let std_err = if per_path.len() > 1 {
        (variance(&per_path) / per_path.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(PkeEstimate {
        value,
        n_paths: per_path.len(),
        std_err,
    })
}

/// Path-measure KL divergence against the driftless reference with diffusion
/// coefficient `sigma`: `E(Q) / (2 sigma^2)`.
pub fn girsanov_kl(pke: &PkeEstimate, sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0, "diffusion coefficient must be positive");
    pke.value / (2.0 * sigma * sigma)
}
