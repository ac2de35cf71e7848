//! Squared 2-Wasserstein distances: exact empirical transport, the sorted
//! 1D form, and the closed-form Gaussian expression.

use nalgebra::DMatrix;

use crate::analysis::assignment::{assignment_cost, solve_assignment};
use crate::error::{Error, Result};
use crate::vecmath::dist_sq;

/// Largest sample count accepted by the exact empirical solver.
pub const EMPIRICAL_CAP: usize = 2048;

fn check_sample_sets(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidConfig("empty sample sets".into()));
    }
    if a.len() > EMPIRICAL_CAP {
        return Err(Error::SizeLimit {
            n: a.len(),
            cap: EMPIRICAL_CAP,
        });
    }
    let dim = a[0].len();
    for s in a.iter().chain(b.iter()) {
        if s.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: s.len(),
            });
        }
    }
    Ok(dim)
}

/// Exact squared transport cost between two equal-size point clouds:
/// optimal assignment on the squared-distance matrix, averaged over points.
pub fn w2sq_empirical(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    check_sample_sets(a, b)?;
    let n = a.len();
    let mut cost = vec![0.0; n * n];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            cost[i * n + j] = dist_sq(ai, bj);
        }
    }
    let assignment = solve_assignment(&cost, n);
    Ok(assignment_cost(&cost, n, &assignment) / n as f64)
}

/// Sorted-quantile form for scalar samples: the optimal coupling in 1D is
/// monotone, so matching order statistics is exact. Serves as the
/// independent second route for the assignment solver and scales to large n.
pub fn w2sq_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidConfig("empty sample sets".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64)
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n != m {
        return Err(Error::Shape { expected: n, got: m });
    }
    for r in rows {
        if r.len() != m {
            return Err(Error::Shape {
                expected: m,
                got: r.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues below
/// `-tol` reject the input; small negative values are clamped to zero.
fn sym_sqrt(m: &DMatrix<f64>, label: &str) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let asym = (m - m.transpose()).abs().max();
    let scale = m.abs().max().max(1.0);
    if asym > 1e-9 * scale {
        return Err(Error::Domain(format!("{label} is not symmetric")));
    }
    let eig = sym.symmetric_eigen();
    let tol = 1e-9 * scale;
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < -tol {
            return Err(Error::Domain(format!(
                "{label} is not positive semi-definite (eigenvalue {v})"
            )));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Closed-form squared Gaussian transport distance:
/// `||m1 - m2||^2 + tr(C1) + tr(C2) - 2 tr((C1^{1/2} C2 C1^{1/2})^{1/2})`.
pub fn w2sq_gaussian(
    m1: &[f64],
    c1: &[Vec<f64>],
    m2: &[f64],
    c2: &[Vec<f64>],
) -> Result<f64> {
    if m1.len() != m2.len() {
        return Err(Error::Shape {
            expected: m1.len(),
            got: m2.len(),
        });
    }
    let a = to_matrix(c1)?;
    let b = to_matrix(c2)?;
    if a.nrows() != m1.len() || b.nrows() != m1.len() {
        return Err(Error::Shape {
            expected: m1.len(),
            got: a.nrows(),
        });
    }
    let a_sqrt = sym_sqrt(&a, "first covariance")?;
    let inner = &a_sqrt * &b * &a_sqrt;
    let cross = sym_sqrt(&inner, "coupled covariance")?;
    let bures = a.trace() + b.trace() - 2.0 * cross.trace();
    let mean_term = dist_sq(m1, m2);
    Ok(mean_term + bures.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    #[test]
    fn identical_sets_zero() {
        let a = vec![vec![1.0, 2.0], vec![-0.5, 0.1], vec![3.0, 3.0]];
        assert_eq!(w2sq_empirical(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn translation_costs_norm_squared() {
        let mut rng = RngState::from_seed(1);
        let a: Vec<Vec<f64>> = (0..32).map(|_| rng.normal_vec(3)).collect();
        let v = [0.5, -1.0, 2.0];
        let b: Vec<Vec<f64>> = a
            .iter()
            .map(|p| p.iter().zip(&v).map(|(x, d)| x + d).collect())
            .collect();
        let got = w2sq_empirical(&a, &b).unwrap();
        let want = 0.25 + 1.0 + 4.0;
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn two_point_example() {
        // {0, 1} vs {1, 2}: both matchings cost (1 + 1)/2 = 1 or (4 + 0)/2
        // = 2; the optimum is 1.
        let a = vec![vec![0.0], vec![1.0]];
        let b = vec![vec![1.0], vec![2.0]];
        assert!((w2sq_empirical(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_matches_sorted_1d() {
        let mut rng = RngState::from_seed(2);
        for trial in 0..5 {
            let n = 64 + trial * 37;
            let a: Vec<f64> = (0..n).map(|_| rng.normal() * 2.0).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.normal() + 0.7).collect();
            let a2: Vec<Vec<f64>> = a.iter().map(|&x| vec![x]).collect();
            let b2: Vec<Vec<f64>> = b.iter().map(|&x| vec![x]).collect();
            let via_ot = w2sq_empirical(&a2, &b2).unwrap();
            let via_sort = w2sq_1d(&a, &b).unwrap();
            assert!(
                (via_ot - via_sort).abs() < 1e-10,
                "routes disagree: {via_ot} vs {via_sort}"
            );
        }
    }

    #[test]
    fn cap_and_shape_errors() {
        let big = vec![vec![0.0]; EMPIRICAL_CAP + 1];
        assert!(matches!(
            w2sq_empirical(&big, &big),
            Err(Error::SizeLimit { .. })
        ));
        let a = vec![vec![0.0]];
        let b = vec![vec![0.0], vec![1.0]];
        assert!(matches!(w2sq_empirical(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn gaussian_identical_zero() {
        let c = vec![vec![2.0, 0.3], vec![0.3, 1.0]];
        let m = [0.5, -0.5];
        let d = w2sq_gaussian(&m, &c, &m, &c).unwrap();
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn gaussian_mean_shift_only() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let d = w2sq_gaussian(&[0.0, 0.0], &eye, &[3.0, 4.0], &eye).unwrap();
        assert!((d - 25.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_isotropic_scaling() {
        // N(0, s1^2 I_D) vs N(0, s2^2 I_D) costs D (s1 - s2)^2.
        for dim in [1usize, 2, 5] {
            let (s1, s2) = (1.5, 0.5);
            let c1: Vec<Vec<f64>> = (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { s1 * s1 } else { 0.0 }).collect())
                .collect();
            let c2: Vec<Vec<f64>> = (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { s2 * s2 } else { 0.0 }).collect())
                .collect();
            let zero = vec![0.0; dim];
            let d = w2sq_gaussian(&zero, &c1, &zero, &c2).unwrap();
            let want = dim as f64 * (s1 - s2) * (s1 - s2);
            assert!((d - want).abs() < 1e-9, "dim {dim}: {d} vs {want}");
        }
    }

    /// Raw entropic transport cost on a discretized 1D grid.
    fn sinkhorn_cost_1d(s1: f64, s2: f64, eps: f64) -> f64 {
        let m = 201;
        let span = 8.0 * s1.max(s2);
        let xs: Vec<f64> = (0..m)
            .map(|i| -span / 2.0 + span * i as f64 / (m - 1) as f64)
            .collect();
        let density = |x: f64, s: f64| (-(x * x) / (2.0 * s * s)).exp();
        let mut mu: Vec<f64> = xs.iter().map(|&x| density(x, s1)).collect();
        let mut nu: Vec<f64> = xs.iter().map(|&x| density(x, s2)).collect();
        let zmu: f64 = mu.iter().sum();
        let znu: f64 = nu.iter().sum();
        mu.iter_mut().for_each(|p| *p /= zmu);
        nu.iter_mut().for_each(|p| *p /= znu);
        let kernel: Vec<f64> = (0..m * m)
            .map(|k| {
                let (i, j) = (k / m, k % m);
                let c = (xs[i] - xs[j]) * (xs[i] - xs[j]);
                (-c / eps).exp()
            })
            .collect();
        let mut u = vec![1.0; m];
        let mut v = vec![1.0; m];
        for _ in 0..1500 {
            for i in 0..m {
                let kv: f64 = (0..m).map(|j| kernel[i * m + j] * v[j]).sum();
                u[i] = if kv > 0.0 { mu[i] / kv } else { 0.0 };
            }
            for j in 0..m {
                let ku: f64 = (0..m).map(|i| kernel[i * m + j] * u[i]).sum();
                v[j] = if ku > 0.0 { nu[j] / ku } else { 0.0 };
            }
        }
        let mut cost = 0.0;
        for i in 0..m {
            for j in 0..m {
                let c = (xs[i] - xs[j]) * (xs[i] - xs[j]);
                cost += c * u[i] * kernel[i * m + j] * v[j];
            }
        }
        cost
    }

    /// Debiased entropic oracle: subtracting the self-transport terms
    /// removes the O(eps) regularization bias.
    fn sinkhorn_grid_1d(s1: f64, s2: f64) -> f64 {
        let eps = 0.02;
        sinkhorn_cost_1d(s1, s2, eps)
            - 0.5 * sinkhorn_cost_1d(s1, s1, eps)
            - 0.5 * sinkhorn_cost_1d(s2, s2, eps)
    }

    #[test]
    fn gaussian_matches_sinkhorn_oracle() {
        let (s1, s2) = (1.0f64, 0.5f64);
        let exact = w2sq_gaussian(
            &[0.0],
            &[vec![s1 * s1]],
            &[0.0],
            &[vec![s2 * s2]],
        )
        .unwrap();
        let approx = sinkhorn_grid_1d(s1, s2);
        assert!(
            (exact - approx).abs() < 0.05 * exact.max(0.1),
            "closed form {exact} vs sinkhorn {approx}"
        );
        // Dimensional scaling: the D-dimensional isotropic value is D times
        // the 1D value.
        let d2 = w2sq_gaussian(
            &[0.0, 0.0],
            &[vec![s1 * s1, 0.0], vec![0.0, s1 * s1]],
            &[0.0, 0.0],
            &[vec![s2 * s2, 0.0], vec![0.0, s2 * s2]],
        )
        .unwrap();
        assert!((d2 - 2.0 * exact).abs() < 1e-9);
    }

    #[test]
    fn gaussian_symmetric_and_definite() {
        let mut rng = RngState::from_seed(3);
        for _ in 0..10 {
            let dim = 3;
            // Random PSD matrices from A^T A.
            let mk = |rng: &mut RngState| -> Vec<Vec<f64>> {
                let a: Vec<Vec<f64>> = (0..dim).map(|_| rng.normal_vec(dim)).collect();
                (0..dim)
                    .map(|i| {
                        (0..dim)
                            .map(|j| (0..dim).map(|k| a[k][i] * a[k][j]).sum())
                            .collect()
                    })
                    .collect()
            };
            let c1 = mk(&mut rng);
            let c2 = mk(&mut rng);
            let m1: Vec<f64> = rng.normal_vec(dim);
            let m2: Vec<f64> = rng.normal_vec(dim);
            let ab = w2sq_gaussian(&m1, &c1, &m2, &c2).unwrap();
            let ba = w2sq_gaussian(&m2, &c2, &m1, &c1).unwrap();
            assert!((ab - ba).abs() < 1e-8 * (1.0 + ab.abs()));
            assert!(ab >= 0.0);
            let self_dist = w2sq_gaussian(&m1, &c1, &m1, &c1).unwrap();
            assert!(self_dist.abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_rejects_non_psd() {
        let bad = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(
            w2sq_gaussian(&[0.0, 0.0], &bad, &[0.0, 0.0], &eye),
            Err(Error::Domain(_))
        ));
    }
}
