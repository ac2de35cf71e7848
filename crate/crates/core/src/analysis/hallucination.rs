//! Closed-form conditional differential entropies of two linear-Gaussian
//! reconstruction pipelines.
//!
//! Both pipelines share the corrupted linear measurement `B (A x + n)`; the
//! bridge-style one perturbs it with isotropic transport residual
//! `tau * z`, the diffusion-style one with a full-rank independent seed
//! `C * xi`. Conditioned on the source `x`, each output is Gaussian, so the
//! residual uncertainty is `D/2 log(2 pi e) + 1/2 log det Cov`, and the gap
//! between the two pipelines reduces to a log-det ratio.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-Gaussian pipeline specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationSpec {
    /// Source dimension D.
    pub data_dim: usize,
    /// Measurement dimension d.
    pub semantic_dim: usize,
    /// Encoder matrix A, `d x D` row-major rows.
    pub encoder: Vec<Vec<f64>>,
    /// Decoder matrix B, `D x d` row-major rows.
    pub decoder: Vec<Vec<f64>>,
    /// Channel noise variance sigma_n^2.
    pub noise_var: f64,
    /// Bridge transport residual variance tau^2.
    pub sb_residual_var: f64,
    /// Diffusion seed map C, `D x D` row-major rows.
    pub cdm_output_map: Vec<Vec<f64>>,
}

impl HallucinationSpec {
    /// The configuration used by the default verification run:
    /// D = 2, d = 1, A = [1, 0], B = A^T, sigma_n^2 = tau^2 = 0.1, C = I.
    pub fn default_2d() -> Self {
        HallucinationSpec {
            data_dim: 2,
            semantic_dim: 1,
            encoder: vec![vec![1.0, 0.0]],
            decoder: vec![vec![1.0], vec![0.0]],
            noise_var: 0.1,
            sb_residual_var: 0.1,
            cdm_output_map: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        }
    }
}

/// Conditional entropies (nats) of both pipelines and their gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallucinationReport {
    pub h_sb: f64,
    pub h_cdm: f64,
    pub gap: f64,
    pub spec: HallucinationSpec,
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Shape {
            expected: nrows * ncols,
            got: rows.iter().map(Vec::len).sum(),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn gaussian_entropy_nats(cov: &DMatrix<f64>, label: &str) -> Result<f64> {
    let d = cov.nrows() as f64;
    let det = cov.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::DegenerateEntropy(format!(
            "{label} conditional covariance has determinant {det}"
        )));
    }
    Ok(0.5 * d * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + 0.5 * det.ln())
}

/// Evaluate both conditional entropies and the gap `h_cdm - h_sb`.
pub fn gaussian_hallucination(spec: &HallucinationSpec) -> Result<HallucinationReport> {
    let d_dim = spec.data_dim;
    let s_dim = spec.semantic_dim;
    if d_dim == 0 || s_dim == 0 {
        return Err(Error::InvalidConfig("dimensions must be positive".into()));
    }
    let _a = matrix(&spec.encoder, s_dim, d_dim)?;
    let b = matrix(&spec.decoder, d_dim, s_dim)?;
    let c = matrix(&spec.cdm_output_map, d_dim, d_dim)?;
    if spec.noise_var < 0.0 || spec.sb_residual_var < 0.0 {
        return Err(Error::InvalidConfig("variances must be non-negative".into()));
    }
    // Conditioned on x, the measurement path contributes sigma_n^2 B B^T to
    // both pipelines; the generative seed adds tau^2 I or C C^T.
    let shared = &b * b.transpose() * spec.noise_var;
    let eye = DMatrix::<f64>::identity(d_dim, d_dim);
    let cov_sb = &shared + eye * spec.sb_residual_var;
    let cov_cdm = &shared + &c * c.transpose();
    let h_sb = gaussian_entropy_nats(&cov_sb, "bridge pipeline")?;
    let h_cdm = gaussian_entropy_nats(&cov_cdm, "diffusion pipeline")?;
    Ok(HallucinationReport {
        h_sb,
        h_cdm,
        gap: h_cdm - h_sb,
        spec: spec.clone(),
    })
}
