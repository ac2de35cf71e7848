//! Synthetic source distributions, standardized where the geometry allows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Generator families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetKind {
    /// Standard normal in `dim` dimensions.
    Gaussian,
    /// Equal-weight isotropic mixture around the given centers.
    GaussianMixture { centers: Vec<Vec<f64>>, spread: f64 },
    /// Two interleaved half-circles with additive jitter; always 2D.
    TwoMoons { noise_std: f64 },
    /// Uniform mass on the filled cells of an alternating grid over
    /// `[-2, 2]^2`; always 2D.
    Checkerboard { squares_per_side: usize },
    /// 8x8 sign-pattern images with Gaussian coefficients; 64 dimensions,
    /// unit variance per pixel by construction.
    GridImage8x8,
}

/// A dataset specification: generator, dimensionality, seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(flatten)]
    pub kind: DatasetKind,
    pub dim: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DatasetKind::Gaussian => {
                if self.dim == 0 {
                    return Err(Error::InvalidConfig("gaussian needs dim >= 1".into()));
                }
            }
            DatasetKind::GaussianMixture { centers, spread } => {
                if centers.is_empty() || centers.iter().any(|c| c.len() != self.dim) {
                    return Err(Error::InvalidConfig(
                        "mixture centers must match the configured dim".into(),
                    ));
                }
                if *spread <= 0.0 {
                    return Err(Error::InvalidConfig("mixture spread must be positive".into()));
                }
            }
            DatasetKind::TwoMoons { noise_std } => {
                if self.dim != 2 {
                    return Err(Error::InvalidConfig("two_moons forces dim = 2".into()));
                }
                if *noise_std < 0.0 {
                    return Err(Error::InvalidConfig("noise_std must be non-negative".into()));
                }
            }
            DatasetKind::Checkerboard { squares_per_side } => {
                if self.dim != 2 {
                    return Err(Error::InvalidConfig("checkerboard forces dim = 2".into()));
                }
                if *squares_per_side < 2 || squares_per_side % 2 != 0 {
                    return Err(Error::InvalidConfig(
                        "squares_per_side must be an even count >= 2".into(),
                    ));
                }
            }
            DatasetKind::GridImage8x8 => {
                if self.dim != 64 {
                    return Err(Error::InvalidConfig("grid_image_8x8 forces dim = 64".into()));
                }
            }
        }
        Ok(())
    }

    /// Draw `n` samples; deterministic in `(self.seed, n)`.
    pub fn sample(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidConfig("sample count must be >= 1".into()));
        }
        let mut rng = RngState::derive(self.seed, 0);
        Ok((0..n).map(|_| self.draw(&mut rng)).collect())
    }

    /// Draw one sample from an explicit stream (used by training loops).
    pub fn draw(&self, rng: &mut RngState) -> Vec<f64> {
        match &self.kind {
            DatasetKind::Gaussian => rng.normal_vec(self.dim),
            DatasetKind::GaussianMixture { centers, spread } => {
                let c = &centers[rng.index(centers.len())];
                let (mean, var) = mixture_moments(centers, *spread);
                c.iter()
                    .enumerate()
                    .map(|(d, &cd)| {
                        let raw = cd + spread * rng.normal();
                        (raw - mean[d]) / var[d].sqrt()
                    })
                    .collect()
            }
            DatasetKind::TwoMoons { noise_std } => {
                let theta = std::f64::consts::PI * rng.uniform();
                let (raw_x, raw_y) = if rng.uniform() < 0.5 {
                    (theta.cos(), theta.sin())
                } else {
                    (1.0 - theta.cos(), 0.5 - theta.sin())
                };
                let x = raw_x + noise_std * rng.normal();
                let y = raw_y + noise_std * rng.normal();
                // Analytic moments of the noiseless moons: mean (1/2, 1/4),
                // var_x = 3/4, var_y = 5/8 - 1/pi - 1/16.
                let var_x = 0.75 + noise_std * noise_std;
                let var_y = 0.625 - 1.0 / std::f64::consts::PI - 0.0625 + noise_std * noise_std;
                vec![(x - 0.5) / var_x.sqrt(), (y - 0.25) / var_y.sqrt()]
            }
            DatasetKind::Checkerboard { squares_per_side } => {
                let s = *squares_per_side;
                let cell = 4.0 / s as f64;
                // Pick a filled cell: (i + j) even.
                let (i, j) = loop {
                    let i = rng.index(s);
                    let j = rng.index(s);
                    if (i + j) % 2 == 0 {
                        break (i, j);
                    }
                };
                let x = -2.0 + (i as f64 + rng.uniform()) * cell;
                let y = -2.0 + (j as f64 + rng.uniform()) * cell;
                // Both marginals are uniform on [-2, 2]: variance 4/3.
                let sd = (4.0f64 / 3.0).sqrt();
                vec![x / sd, y / sd]
            }
            DatasetKind::GridImage8x8 => {
                // Four orthogonal Walsh-style sign patterns with unit-RMS
                // rows; per-pixel variance is exactly 1 after scaling.
                let coeff: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
                let sign = |k: usize, idx: usize| -> f64 {
                    match k {
                        0 => 1.0,
                        1 => {
                            if idx % 2 == 0 {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        2 => {
                            if idx < 4 {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        _ => {
                            let a = if idx % 2 == 0 { 1.0 } else { -1.0 };
                            let b = if idx < 4 { 1.0 } else { -1.0 };
                            a * b
                        }
                    }
                };
                let scale = 1.0 / (4.0f64).sqrt();
                (0..64)
                    .map(|p| {
                        let (r, c) = (p / 8, p % 8);
                        let v: f64 = (0..4)
                            .map(|k| coeff[k] * sign(k, r) * sign(3 - k, c))
                            .sum();
                        v * scale
                    })
                    .collect()
            }
        }
    }
}

fn mixture_moments(centers: &[Vec<f64>], spread: f64) -> (Vec<f64>, Vec<f64>) {
    let dim = centers[0].len();
    let k = centers.len() as f64;
    let mut mean = vec![0.0; dim];
    for c in centers {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v / k;
        }
    }
    let mut var = vec![spread * spread; dim];
    for c in centers {
        for (d, v) in c.iter().enumerate() {
            var[d] += (v - mean[d]) * (v - mean[d]) / k;
        }
    }
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecmath::{mean_vec, variance_vec};

    #[test]
    fn sampling_is_deterministic() {
        let spec = DatasetSpec {
            kind: DatasetKind::TwoMoons { noise_std: 0.05 },
            dim: 2,
            seed: 42,
        };
        assert_eq!(spec.sample(100).unwrap(), spec.sample(100).unwrap());
    }

    #[test]
    fn gaussian_moments() {
        let spec = DatasetSpec {
            kind: DatasetKind::Gaussian,
            dim: 2,
            seed: 7,
        };
        let samples = spec.sample(100_000).unwrap();
        let m = mean_vec(&samples);
        let v = variance_vec(&samples);
        for d in 0..2 {
            assert!(m[d].abs() < 0.02, "mean {m:?}");
            assert!((v[d] - 1.0).abs() < 0.03, "variance {v:?}");
        }
    }

    #[test]
    fn standardized_kinds_have_unit_moments() {
        let specs = [
            DatasetSpec {
                kind: DatasetKind::GaussianMixture {
                    centers: vec![vec![-1.5, 1.5], vec![1.5, -1.5]],
                    spread: 0.3,
                },
                dim: 2,
                seed: 8,
            },
            DatasetSpec {
                kind: DatasetKind::TwoMoons { noise_std: 0.05 },
                dim: 2,
                seed: 9,
            },
            DatasetSpec {
                kind: DatasetKind::Checkerboard { squares_per_side: 4 },
                dim: 2,
                seed: 10,
            },
        ];
        for spec in &specs {
            let samples = spec.sample(50_000).unwrap();
            let m = mean_vec(&samples);
            let v = variance_vec(&samples);
            for d in 0..2 {
                assert!(m[d].abs() < 0.05, "{spec:?} mean {m:?}");
                assert!((v[d] - 1.0).abs() < 0.08, "{spec:?} variance {v:?}");
            }
        }
    }

    #[test]
    fn grid_image_unit_pixel_variance() {
        let spec = DatasetSpec {
            kind: DatasetKind::GridImage8x8,
            dim: 64,
            seed: 11,
        };
        let samples = spec.sample(30_000).unwrap();
        let v = variance_vec(&samples);
        for (d, &vd) in v.iter().enumerate() {
            assert!((vd - 1.0).abs() < 0.06, "pixel {d} variance {vd}");
        }
    }

    #[test]
    fn moons_stay_in_box() {
        let spec = DatasetSpec {
            kind: DatasetKind::TwoMoons { noise_std: 0.05 },
            dim: 2,
            seed: 12,
        };
        for p in spec.sample(100_000).unwrap() {
            assert!(p[0].abs() <= 3.0 && p[1].abs() <= 3.0, "point escaped: {p:?}");
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad = DatasetSpec {
            kind: DatasetKind::TwoMoons { noise_std: 0.05 },
            dim: 3,
            seed: 0,
        };
        assert!(bad.validate().is_err());
        let bad = DatasetSpec {
            kind: DatasetKind::Checkerboard { squares_per_side: 3 },
            dim: 2,
            seed: 0,
        };
        assert!(bad.validate().is_err());
        let bad = DatasetSpec {
            kind: DatasetKind::GridImage8x8,
            dim: 32,
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }
}
