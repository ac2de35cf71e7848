//! Minimum step-count calculator from the strong-convergence error constant.
//!
//! The discretization error of the backward sampler obeys `W2 <= C / sqrt(N)`
//! with `C^2 = alpha_D * E + beta_D * sigma_bar^2`, where `E` is the path
//! kinetic energy, `sigma_bar` the uniform diffusion bound, and
//!
//! ```text
//! alpha_D = 4 e^{2L} (1 + 2 L^2)
//! beta_D  = 2 D e^{2L} (1 + L^2)
//! ```
//!
//! for dimension `D` and unified drift Lipschitz constant `L`. Inverting the
//! bound gives the minimum number of function evaluations for a target
//! tolerance.

use serde::{Deserialize, Serialize};

/// Result of the step-count calculation with its inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfeBound {
    pub alpha_d: f64,
    pub beta_d: f64,
    pub c_sq: f64,
    pub n_star: u64,
    pub pke: f64,
    pub dim: usize,
    pub lipschitz: f64,
    pub sigma_bar: f64,
    pub eps: f64,
}

/// Evaluate the bound constants and the minimum integer step count
/// `N* = ceil(C^2 / eps^2)`, clamped to at least 1 step.
pub fn nfe_bound(pke: f64, sigma_bar: f64, dim: usize, lipschitz: f64, eps: f64) -> NfeBound {
    debug_assert!(eps > 0.0 && pke >= 0.0 && sigma_bar >= 0.0 && dim >= 1 && lipschitz >= 0.0);
    let e2l = (2.0 * lipschitz).exp();
    let alpha_d = 4.0 * e2l * (1.0 + 2.0 * lipschitz * lipschitz);
    let beta_d = 2.0 * dim as f64 * e2l * (1.0 + lipschitz * lipschitz);
    let c_sq = alpha_d * pke + beta_d * sigma_bar * sigma_bar;
    let raw = (c_sq / (eps * eps)).ceil();
    let n_star = if raw.is_finite() && raw >= 1.0 {
        raw as u64
    } else {
        1
    };
    NfeBound {
        alpha_d,
        beta_d,
        c_sq,
        n_star,
        pke,
        dim,
        lipschitz,
        sigma_bar,
        eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_derived_unit_row() {
        // pke = 1, sigma_bar = 1, D = 1, L = 0, eps = 1:
        // alpha = 4, beta = 2, C^2 = 6, N* = 6.
        let b = nfe_bound(1.0, 1.0, 1, 0.0, 1.0);
        assert_eq!(b.alpha_d, 4.0);
        assert_eq!(b.beta_d, 2.0);
        assert_eq!(b.c_sq, 6.0);
        assert_eq!(b.n_star, 6);
    }

    #[test]
    fn degenerate_inputs_clamp_to_one() {
        let b = nfe_bound(0.0, 0.0, 1, 0.0, 1.0);
        assert_eq!(b.c_sq, 0.0);
        assert_eq!(b.n_star, 1);
    }

    #[test]
    fn monotone_in_pke() {
        let lo = nfe_bound(1.0, 1.0, 2, 0.5, 0.2);
        let hi = nfe_bound(3.0, 1.0, 2, 0.5, 0.2);
        assert!(lo.n_star <= hi.n_star);
        assert!(lo.c_sq < hi.c_sq);
    }

    proptest! {
        #[test]
        fn monotonicity_properties(
            pke1 in 0.0f64..50.0,
            delta in 0.0f64..50.0,
            sigma_bar in 0.0f64..5.0,
            dim in 1usize..16,
            lipschitz in 0.0f64..2.0,
            eps in 0.05f64..2.0,
            shrink in 0.1f64..1.0,
        ) {
            let a = nfe_bound(pke1, sigma_bar, dim, lipschitz, eps);
            let b = nfe_bound(pke1 + delta, sigma_bar, dim, lipschitz, eps);
            prop_assert!(a.n_star <= b.n_star);
            // Smaller tolerance can only demand more steps.
            let tighter = nfe_bound(pke1, sigma_bar, dim, lipschitz, eps * shrink);
            prop_assert!(tighter.n_star >= a.n_star);
        }
    }
}
