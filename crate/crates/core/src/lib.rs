//! Variational Bayes for Bayesian probit regression with Gaussian priors.
//!
//! The model is `y_i ~ Bern[Φ(x_iᵀβ)]` with `β ~ N_p(0, ν_p² I_p)`. Two
//! deterministic approximations of the posterior are provided:
//!
//! * [`mf`] — classical mean-field coordinate ascent, which factorizes the
//!   coefficients from the latent Gaussian utilities and returns a Gaussian
//!   approximation centred at the posterior mode;
//! * [`pfm`] — partially-factorized coordinate ascent, which keeps the
//!   coefficient block conditionally exact and factorizes only the latent
//!   utilities, returning a unified skew-normal approximation with
//!   closed-form moments, an i.i.d. sampler and Monte Carlo predictives.
//!
//! Ground-truth machinery for validation lives in [`oracle`] (data
//! augmentation Gibbs sampling, one-dimensional quadrature, a direct
//! fixed-point solver) and evaluation metrics in [`diagnostics`].
//!
//! All matrix kernels route through [`kernel::KernelPrecomp`], which picks a
//! direct `p×p` factorization or the Woodbury `n×n` form so that every fit
//! stays within `O(pn·min{p,n})` regardless of the `p/n` ratio.

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kernel;
pub mod mf;
pub mod oracle;
pub mod pfm;
pub mod rng;
pub mod truncnorm;

pub use dataset::{Dataset, PriorScaling, PriorSpec, Standardization};
pub use diagnostics::{
    compare_methods, simulate_dataset, test_deviance, wasserstein_1d, CompareOptions,
    ComparisonReport, Method, Scenario,
};
pub use error::VbError;
pub use kernel::{build_precomp, quad_form_new, KernelPath, KernelPrecomp};
pub use mf::{fit_mf, mf_joint_elbo, mf_log_posterior, mf_predict, MfOptions, MfPosterior};
pub use oracle::{
    exact_posterior_quadrature_1d, gibbs_sample, solve_fixed_point_direct, GibbsChain,
    GibbsOptions,
};
pub use pfm::{
    fit_pfm, pfm_elbo, pfm_joint_elbo, pfm_moments, pfm_predict, pfm_sample, sun_params,
    PfmMoments, PfmOptions, PfmPosterior, SunParams, SweepPath,
};
pub use rng::RngState;
pub use truncnorm::{
    mills_ratio, normal_cdf, normal_log_cdf, normal_pdf, normal_quantile, tn_mean, tn_sample,
    tn_var, Side, TruncNormParams,
};
