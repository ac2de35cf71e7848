//! Numerical verification of the theory: kinetic energy and the Girsanov
//! correspondence, Wasserstein machinery, discretization step-count bounds,
//! the finite-alphabet information-capacity demo, and the linear-Gaussian
//! residual-entropy gap.

pub mod assignment;
mod checks;
mod hallucination;
mod mi;
mod nfe;
mod pke;
mod w2;

pub use checks::{
    check_assumption1, em_error_curve, endpoint_w2, loglog_slope, mixture_convexity_check,
    phi_monotonicity_check, Assumption1Report, ConvexityReport, EmErrorRow, GaussianPairBridge,
    PhiRow,
};
pub use hallucination::{gaussian_hallucination, HallucinationReport, HallucinationSpec};
pub use mi::{mi_bruteforce, MiDemoResult, MAX_ALPHABET};
pub use nfe::{nfe_bound, NfeBound};
pub use pke::{girsanov_kl, pke_from_trajectories, PkeEstimate};
pub use w2::{w2sq_1d, w2sq_empirical, w2sq_gaussian, EMPIRICAL_CAP};
