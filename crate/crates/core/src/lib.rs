//! Recovery of surfaces and band-limited functions on them from point samples.
//!
//! Surfaces are modeled as zero level sets of multidimensional trigonometric
//! polynomials on the torus `[0,1)^n`. Points on such a surface become
//! linearly dependent after an exponential feature lift, which yields:
//!
//! - rank-deficiency / null-space tests that detect the surface from samples
//!   ([`recovery`]),
//! - a sum-of-squares surface estimate aggregating all annihilating vectors,
//! - a kernel trick (products of Dirichlet kernels) that avoids forming the
//!   lifted features explicitly ([`lifting`]),
//! - an iteratively-reweighted nuclear-norm denoiser that pulls noisy samples
//!   back toward a low-dimensional surface ([`denoise`]),
//! - an anchor-point representation of band-limited functions restricted to
//!   the surface, with least-squares learning of outputs ([`funcrep`]).

pub mod cloud;
pub mod denoise;
pub mod error;
pub mod funcrep;
pub mod lifting;
pub mod recovery;
pub mod support;
pub mod trigpoly;

pub use cloud::PointCloud;
pub use denoise::{
    denoise, nuclear_norm_surrogate, objective_gradient, objective_value, IrlsConfig,
    IterationMetrics,
};
pub use error::{Error, Result};
pub use funcrep::{
    fit_outputs, select_anchors, AnchorModel, AnchorStrategy, FrequencyForm,
    FEATURE_PINV_CUTOFF, PINV_CUTOFF,
};
pub use lifting::{
    dirichlet_q, feature_matrix, kernel, kernel_gram, lift, FeatureMatrix, KernelConfig,
    KernelGram, RadialProfile, RANK_TOL,
};
pub use recovery::{
    nullspace, phase_transition, recover_minimal, recover_sos, shifted_embeddings,
    sos_as_polynomial, NullSpaceBasis,
    PhaseConfig, PhaseRow, SosSurface,
};
pub use support::{LqNorm, SupportSet};
pub use trigpoly::TrigPolynomial;
