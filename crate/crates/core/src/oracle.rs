//! Desk-scale ground truth: a data-augmentation Gibbs sampler, an exact
//! one-dimensional posterior by quadrature, and a direct solver for the
//! location fixed point. These exist to validate the variational fits and
//! are policy-limited to sizes where they are trustworthy references.

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, PriorSpec};
use crate::error::VbError;
use crate::kernel::KernelPrecomp;
use crate::mf::mf_log_posterior;
use crate::rng::RngState;
use crate::truncnorm::{tn_mean, tn_sample, tn_var, Side, TruncNormParams};

/// Size limits for the Gibbs oracle; beyond them the reference chain is too
/// slow or too poorly mixing to serve as ground truth.
pub const GIBBS_MAX_N: usize = 200;
pub const GIBBS_MAX_P: usize = 1000;

/// Retained draws from the data-augmentation Gibbs sampler.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    /// One retained β draw per row.
    pub draws_beta: DMatrix<f64>,
    /// Matching latent-utility draws when requested.
    pub draws_z: Option<DMatrix<f64>>,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl GibbsChain {
    pub fn len(&self) -> usize {
        self.draws_beta.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.draws_beta.nrows() == 0
    }

    /// Column means of the retained β draws.
    pub fn mean(&self) -> DVector<f64> {
        let m = self.len() as f64;
        DVector::from_iterator(
            self.draws_beta.ncols(),
            self.draws_beta.column_iter().map(|c| c.sum() / m),
        )
    }

    /// Column standard deviations (denominator `m − 1`).
    pub fn sd(&self) -> DVector<f64> {
        let m = self.len() as f64;
        let mean = self.mean();
        DVector::from_iterator(
            self.draws_beta.ncols(),
            self.draws_beta.column_iter().enumerate().map(|(j, c)| {
                (c.iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
            }),
        )
    }
}

/// Options for [`gibbs_sample`]. Burn-in and thinning defaults are sized to
/// give decorrelated desk-scale references.
#[derive(Debug, Clone)]
pub struct GibbsOptions {
    /// Retained draws after burn-in and thinning.
    pub n_draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub keep_z: bool,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        GibbsOptions {
            n_draws: 20_000,
            burn_in: 5_000,
            thin: 5,
            keep_z: false,
        }
    }
}

/// Albert–Chib Gibbs sampler alternating the Gaussian draw `β | z` (through
/// the kernel's factored sampler, never forming `V` when `p > n`) with
/// truncated-normal draws `z_i | β`.
pub fn gibbs_sample(
    data: &Dataset,
    prior: &PriorSpec,
    precomp: &KernelPrecomp,
    opts: &GibbsOptions,
    seed: u64,
) -> Result<GibbsChain, VbError> {
    let (n, p) = (data.n(), data.p());
    if n > GIBBS_MAX_N || p > GIBBS_MAX_P {
        return Err(VbError::ScalePolicyExceeded(format!(
            "gibbs oracle is limited to n ≤ {GIBBS_MAX_N}, p ≤ {GIBBS_MAX_P}; got n={n}, p={p}"
        )));
    }
    if precomp.n() != n || precomp.p() != p {
        return Err(VbError::dims("precomp does not match dataset"));
    }
    debug_assert!((precomp.nu_p2() - prior.variance(p)).abs() <= f64::EPSILON * precomp.nu_p2());
    if opts.n_draws == 0 || opts.thin == 0 {
        return Err(VbError::InvalidInput("need n_draws ≥ 1 and thin ≥ 1".into()));
    }

    let mut rng = RngState::from_seed(seed);
    let mut z = DVector::zeros(n);
    for i in 0..n {
        let params = TruncNormParams {
            mu: 0.0,
            sigma: 1.0,
            side: Side::from_label(data.y()[i]),
        };
        z[i] = tn_sample(&params, &mut rng);
    }

    let total = opts.burn_in + opts.n_draws * opts.thin;
    let mut draws_beta = DMatrix::zeros(opts.n_draws, p);
    let mut draws_z = opts.keep_z.then(|| DMatrix::zeros(opts.n_draws, n));
    let mut kept = 0;

    for it in 0..total {
        let beta = precomp.sample_coef_given(data, &z, &mut rng);
        let eta = data.x() * &beta;
        for i in 0..n {
            let params = TruncNormParams {
                mu: eta[i],
                sigma: 1.0,
                side: Side::from_label(data.y()[i]),
            };
            z[i] = tn_sample(&params, &mut rng);
        }
        if it >= opts.burn_in && (it - opts.burn_in) % opts.thin == opts.thin - 1 {
            draws_beta.row_mut(kept).copy_from(&beta.transpose());
            if let Some(dz) = draws_z.as_mut() {
                dz.row_mut(kept).copy_from(&z.transpose());
            }
            kept += 1;
        }
    }
    debug_assert_eq!(kept, opts.n_draws);

    Ok(GibbsChain {
        draws_beta,
        draws_z,
        burn_in: opts.burn_in,
        thin: opts.thin,
        seed,
    })
}

/// Normalized posterior density of the single coefficient of a `p = 1`
/// model, tabulated on a grid by quadrature of `exp(ℓ(β))`.
#[derive(Debug, Clone)]
pub struct QuadratureDensity1d {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl QuadratureDensity1d {
    /// Posterior mean by the same trapezoid rule that normalized the table.
    pub fn mean(&self) -> f64 {
        trapezoid(&self.grid, |i| self.grid[i] * self.density[i])
    }

    /// Trapezoid integral of the tabulated density; 1 up to quadrature error.
    pub fn total_mass(&self) -> f64 {
        trapezoid(&self.grid, |i| self.density[i])
    }
}

fn trapezoid(grid: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..grid.len() {
        acc += 0.5 * (grid[i] - grid[i - 1]) * (f(i) + f(i - 1));
    }
    acc
}

/// Uniform grid covering ±`k` prior standard deviations with `m` points.
pub fn default_grid_1d(prior: &PriorSpec, k: f64, m: usize) -> Vec<f64> {
    let sd = prior.variance(1).sqrt();
    let lo = -k * sd;
    let hi = k * sd;
    (0..m)
        .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
        .collect()
}

/// Tabulate the exact `p = 1` posterior on `grid` by normalizing
/// `exp(ℓ(β))` with the trapezoid rule (log values are shifted by their
/// maximum before exponentiation).
pub fn exact_posterior_quadrature_1d(
    data: &Dataset,
    prior: &PriorSpec,
    grid: &[f64],
) -> Result<QuadratureDensity1d, VbError> {
    if data.p() != 1 {
        return Err(VbError::dims(format!(
            "quadrature oracle needs p = 1, got p = {}",
            data.p()
        )));
    }
    if grid.len() < 3 {
        return Err(VbError::InvalidInput("grid too small".into()));
    }
    let log_post: Vec<f64> = grid
        .iter()
        .map(|&b| mf_log_posterior(data, prior, &DVector::from_element(1, b)))
        .collect();
    let shift = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut density: Vec<f64> = log_post.iter().map(|&l| (l - shift).exp()).collect();
    let grid_vec = grid.to_vec();
    let mass = {
        let d = &density;
        trapezoid(&grid_vec, |i| d[i])
    };
    for v in &mut density {
        *v /= mass;
    }
    Ok(QuadratureDensity1d {
        grid: grid_vec,
        density,
    })
}

/// Directly solve the location fixed-point system
/// `μ_i = σ*²_i·Σ_{i'≠i} H_{ii'}·z̄(μ_{i'})` by a damped Newton iteration
/// with a dense `n×n` solve. Test-side oracle, limited to `n ≤ 50`.
pub fn solve_fixed_point_direct(
    data: &Dataset,
    precomp: &KernelPrecomp,
) -> Result<DVector<f64>, VbError> {
    let n = data.n();
    if n > 50 {
        return Err(VbError::ScalePolicyExceeded(format!(
            "direct fixed-point solver is limited to n ≤ 50, got {n}"
        )));
    }
    let h = precomp.h();
    let sigma_star2 = precomp.sigma_star2();
    let sigma_star: Vec<f64> = sigma_star2.iter().map(|v| v.sqrt()).collect();

    let z_of = |mu: &DVector<f64>| -> DVector<f64> {
        DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let params = TruncNormParams {
                    mu: mu[i],
                    sigma: sigma_star[i],
                    side: Side::from_label(data.y()[i]),
                };
                tn_mean(&params)
            }),
        )
    };
    let residual = |mu: &DVector<f64>| -> DVector<f64> {
        let z = z_of(mu);
        let hz = h * &z;
        DVector::from_iterator(
            n,
            (0..n).map(|i| mu[i] - sigma_star2[i] * (hz[i] - h[(i, i)] * z[i])),
        )
    };

    let mut mu = DVector::zeros(n);
    let mut res = residual(&mu);
    let mut res_norm = res.abs().max();

    for _ in 0..200 {
        if res_norm < 1e-10 {
            return Ok(mu);
        }
        // Jacobian: J_ik = δ_ik − σ*²_i·H_ik·z̄'(μ_k) for k ≠ i, where the
        // truncated-normal mean has derivative var(z_k)/σ*²_k.
        let mut jac = DMatrix::identity(n, n);
        for k in 0..n {
            let params = TruncNormParams {
                mu: mu[k],
                sigma: sigma_star[k],
                side: Side::from_label(data.y()[k]),
            };
            let dz = tn_var(&params) / sigma_star2[k];
            for i in 0..n {
                if i != k {
                    jac[(i, k)] -= sigma_star2[i] * h[(i, k)] * dz;
                }
            }
        }
        let lu = jac.lu();
        let step = lu
            .solve(&res)
            .ok_or_else(|| VbError::SingularSystem("fixed-point Jacobian".into()))?;

        // Backtracking damping on the residual norm.
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..60 {
            let trial = &mu - &step * scale;
            let trial_res = residual(&trial);
            let trial_norm = trial_res.abs().max();
            if trial_norm < res_norm {
                mu = trial;
                res = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res_norm < 1e-10 {
        Ok(mu)
    } else {
        Err(VbError::NonConvergence(format!(
            "fixed-point residual stalled at {res_norm:e}"
        )))
    }
}
