//! Design-matrix kernels with a `p×p` and an `n×n` cost path.
//!
//! Everything the variational fits need reduces to products with
//! `V = (ν_p⁻²I_p + XᵀX)⁻¹`. For `p ≤ n` the `p×p` system is factored
//! directly. For `p > n` no `p×p` object is ever formed: Woodbury's identity
//! gives `VXᵀ = ν_p²Xᵀ(I_n + ν_p²XXᵀ)⁻¹` and
//! `(I_n + ν_p²XXᵀ)⁻¹ = I_n − XVXᵀ`, so the whole precomputation costs
//! `O(pn·min{p,n})` and the stored state stays `O(pn)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dataset::{Dataset, PriorSpec};
use crate::error::VbError;
use crate::rng::RngState;

/// Which branch built the kernel products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPath {
    /// `p ≤ n`: factor `ν_p⁻²I_p + XᵀX` and materialize `V`.
    DirectP,
    /// `p > n`: factor `W = I_n + ν_p²XXᵀ`; `V` exists only through its
    /// action.
    WoodburyN,
}

/// Shared linear-algebra products consumed by every fit, sampler and
/// predictive routine.
#[derive(Debug, Clone)]
pub struct KernelPrecomp {
    path: KernelPath,
    nu_p2: f64,
    /// `VXᵀ`, `p×n`.
    vxt: DMatrix<f64>,
    /// `H = XVXᵀ`, `n×n`.
    h: DMatrix<f64>,
    /// `Λ = I_n − H = (I_n + ν_p²XXᵀ)⁻¹`, `n×n`.
    lambda: DMatrix<f64>,
    /// `σ*²_i = (1 − H_ii)⁻¹`.
    sigma_star2: DVector<f64>,
    /// `diag(V)`.
    v_diag: DVector<f64>,
    /// Explicit `V`, present on the `DirectP` path only.
    v: Option<DMatrix<f64>>,
    /// Cholesky of `ν_p⁻²I_p + XᵀX` (`DirectP`).
    chol_m: Option<Cholesky<f64, Dyn>>,
    /// Cholesky of `W = I_n + ν_p²XXᵀ` (`WoodburyN`).
    chol_w: Option<Cholesky<f64, Dyn>>,
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Build all kernel products for `(data, prior)`.
///
/// Picks [`KernelPath::WoodburyN`] iff `p > n`; the tie `p = n` goes to the
/// direct branch. Fails with [`VbError::SingularSystem`] if the positive
/// definite factorization breaks down, which for these systems means the
/// input is corrupted.
pub fn build_precomp(data: &Dataset, prior: &PriorSpec) -> Result<KernelPrecomp, VbError> {
    let (n, p) = (data.n(), data.p());
    let nu_p2 = prior.variance(p);
    let x = data.x();

    if p <= n {
        let mut m = x.transpose() * x;
        for j in 0..p {
            m[(j, j)] += 1.0 / nu_p2;
        }
        let chol_m = Cholesky::new(m).ok_or_else(|| {
            VbError::SingularSystem("p x p kernel factorization failed".into())
        })?;
        let mut v = chol_m.inverse();
        symmetrize(&mut v);
        let vxt = &v * x.transpose();
        let h = x * &vxt;
        let mut lambda = DMatrix::identity(n, n);
        lambda -= &h;
        let sigma_star2 = sigma_star2_from_h_diag(&h)?;
        let v_diag = v.diagonal();
        Ok(KernelPrecomp {
            path: KernelPath::DirectP,
            nu_p2,
            vxt,
            h,
            lambda,
            sigma_star2,
            v_diag,
            v: Some(v),
            chol_m: Some(chol_m),
            chol_w: None,
        })
    } else {
        let mut w = x * x.transpose();
        w *= nu_p2;
        for i in 0..n {
            w[(i, i)] += 1.0;
        }
        let chol_w = Cholesky::new(w).ok_or_else(|| {
            VbError::SingularSystem("n x n kernel factorization failed".into())
        })?;
        let mut lambda = chol_w.inverse();
        symmetrize(&mut lambda);
        let mut h = DMatrix::identity(n, n);
        h -= &lambda;
        // VXᵀ = ν_p²·Xᵀ·W⁻¹ = ν_p²·(W⁻¹X)ᵀ by symmetry of W⁻¹.
        let mut vxt = (&lambda * x).transpose();
        vxt *= nu_p2;
        let sigma_star2 = sigma_star2_from_h_diag(&h)?;
        // V_jj = ν_p²·[1 − Σ_i (VXᵀ)_{ji}·x_{ij}]
        let v_diag = DVector::from_iterator(
            p,
            (0..p).map(|j| {
                let s: f64 = (0..n).map(|i| vxt[(j, i)] * x[(i, j)]).sum();
                nu_p2 * (1.0 - s)
            }),
        );
        Ok(KernelPrecomp {
            path: KernelPath::WoodburyN,
            nu_p2,
            vxt,
            h,
            lambda,
            sigma_star2,
            v_diag,
            v: None,
            chol_m: None,
            chol_w: Some(chol_w),
        })
    }
}

fn sigma_star2_from_h_diag(h: &DMatrix<f64>) -> Result<DVector<f64>, VbError> {
    let n = h.nrows();
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let gap = 1.0 - h[(i, i)];
        if gap <= 0.0 {
            return Err(VbError::SingularSystem(format!(
                "leverage H_{{{i}{i}}} = {} is not below 1",
                h[(i, i)]
            )));
        }
        out[i] = 1.0 / gap;
    }
    Ok(out)
}

impl KernelPrecomp {
    pub fn path(&self) -> KernelPath {
        self.path
    }

    /// The resolved prior variance ν_p² the kernels were built with.
    pub fn nu_p2(&self) -> f64 {
        self.nu_p2
    }

    pub fn vxt(&self) -> &DMatrix<f64> {
        &self.vxt
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn sigma_star2(&self) -> &DVector<f64> {
        &self.sigma_star2
    }

    pub fn v_diag(&self) -> &DVector<f64> {
        &self.v_diag
    }

    /// Explicit `V` when the direct path stored it.
    pub fn v(&self) -> Option<&DMatrix<f64>> {
        self.v.as_ref()
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    pub fn p(&self) -> usize {
        self.vxt.nrows()
    }

    /// `log det(I_n + ν_p²XXᵀ)`, available on both paths through the stored
    /// Cholesky factors and Sylvester's determinant identity.
    pub fn log_det_w(&self) -> f64 {
        match self.path {
            KernelPath::WoodburyN => {
                let l = self.chol_w.as_ref().expect("woodbury factor").l_dirty();
                2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
            }
            KernelPath::DirectP => {
                let l = self.chol_m.as_ref().expect("direct factor").l_dirty();
                let log_det_m = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
                log_det_m + self.p() as f64 * self.nu_p2.ln()
            }
        }
    }

    /// Materialize the `p×p` matrix `V`. On the Woodbury path this expands
    /// `V = ν_p²(I_p − VXᵀ·X)`; callers gate this behind a column cap.
    pub fn materialize_v(&self, data: &Dataset) -> DMatrix<f64> {
        match &self.v {
            Some(v) => v.clone(),
            None => {
                let p = self.p();
                let mut v = &self.vxt * data.x();
                v *= -self.nu_p2;
                for j in 0..p {
                    v[(j, j)] += self.nu_p2;
                }
                symmetrize(&mut v);
                v
            }
        }
    }

    /// Bytes held by the precomputed products; the Woodbury path stays
    /// `O(pn + n²)` so large-`p` builds never allocate a `p×p` matrix.
    pub fn stored_bytes(&self) -> usize {
        let f = std::mem::size_of::<f64>();
        let mut total = self.vxt.len() + self.h.len() + self.lambda.len();
        total += self.sigma_star2.len() + self.v_diag.len();
        if let Some(v) = &self.v {
            total += v.len();
        }
        if self.chol_m.is_some() {
            total += self.p() * self.p();
        }
        if self.chol_w.is_some() {
            total += self.n() * self.n();
        }
        total * f
    }

    /// Draw from `N_p(VXᵀ·target, V)` without forming `V` on the `p > n`
    /// path. The Woodbury branch uses the auxiliary-variable construction
    /// `β = a + ν_p²Xᵀ·W⁻¹(target − Xa − δ)` with `a ~ N(0, ν_p²I_p)` and
    /// `δ ~ N(0, I_n)`, which has exactly the required law.
    pub fn sample_coef_given(
        &self,
        data: &Dataset,
        target: &DVector<f64>,
        rng: &mut RngState,
    ) -> DVector<f64> {
        let (n, p) = (self.n(), self.p());
        debug_assert_eq!(target.len(), n);
        match self.path {
            KernelPath::DirectP => {
                let mean = &self.vxt * target;
                let eps = DVector::from_iterator(p, (0..p).map(|_| rng.standard_normal()));
                // M = LLᵀ ⇒ L⁻ᵀε ~ N(0, M⁻¹) = N(0, V).
                let l = self.chol_m.as_ref().expect("direct factor").l_dirty();
                let fluct = l
                    .tr_solve_lower_triangular(&eps)
                    .expect("triangular factor is nonsingular");
                mean + fluct
            }
            KernelPath::WoodburyN => {
                let x = data.x();
                let nu = self.nu_p2.sqrt();
                let a = DVector::from_iterator(p, (0..p).map(|_| nu * rng.standard_normal()));
                let delta = DVector::from_iterator(n, (0..n).map(|_| rng.standard_normal()));
                let resid = target - x * &a - delta;
                let w = self
                    .chol_w
                    .as_ref()
                    .expect("woodbury factor")
                    .solve(&resid);
                a + x.transpose() * w * self.nu_p2
            }
        }
    }
}

/// Quadratic form `x_newᵀ V x_new` at `O(p·min{p,n})` after precomputation.
///
/// The Woodbury branch evaluates
/// `ν_p²[‖x_new‖² − ν_p²(Xx_new)ᵀ(I_n + ν_p²XXᵀ)⁻¹(Xx_new)]`.
pub fn quad_form_new(
    precomp: &KernelPrecomp,
    data: &Dataset,
    x_new: &DVector<f64>,
) -> Result<f64, VbError> {
    if x_new.len() != precomp.p() {
        return Err(VbError::dims(format!(
            "x_new has length {}, expected {}",
            x_new.len(),
            precomp.p()
        )));
    }
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(VbError::InvalidInput("x_new has non-finite entries".into()));
    }
    let qf = match precomp.path {
        KernelPath::DirectP => {
            let v = precomp.v.as_ref().expect("direct path stores V");
            (v * x_new).dot(x_new)
        }
        KernelPath::WoodburyN => {
            let t = data.x() * x_new;
            let s = precomp.chol_w.as_ref().expect("woodbury factor").solve(&t);
            precomp.nu_p2 * (x_new.norm_squared() - precomp.nu_p2 * t.dot(&s))
        }
    };
    // The exact value lies in [0, ν_p²‖x_new‖²]; rounding may graze below 0.
    Ok(qf.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    use crate::dataset::PriorScaling;

    fn tiny() -> (Dataset, PriorSpec) {
        let x = DMatrix::from_row_slice(1, 1, &[2.0]);
        let data = Dataset::new(x, vec![1]).unwrap();
        let prior = PriorSpec::new(1.0, PriorScaling::Constant).unwrap();
        (data, prior)
    }

    #[test]
    fn hand_derived_one_by_one() {
        let (data, prior) = tiny();
        let k = build_precomp(&data, &prior).unwrap();
        assert_eq!(k.path(), KernelPath::DirectP);
        assert_relative_eq!(k.vxt()[(0, 0)], 0.4, max_relative = 1e-14);
        assert_relative_eq!(k.h()[(0, 0)], 0.8, max_relative = 1e-14);
        assert_relative_eq!(k.sigma_star2()[0], 5.0, max_relative = 1e-12);
        assert_relative_eq!(k.v_diag()[0], 0.2, max_relative = 1e-14);
        let qf = quad_form_new(&k, &data, &DVector::from_element(1, 1.0)).unwrap();
        assert_relative_eq!(qf, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn zero_design_recovers_prior() {
        for &(n, p) in &[(3usize, 2usize), (2, 5)] {
            let data = Dataset::new(DMatrix::zeros(n, p), vec![1; n]).unwrap();
            let prior = PriorSpec::new(1.0, PriorScaling::Constant).unwrap();
            let k = build_precomp(&data, &prior).unwrap();
            assert!(k.h().iter().all(|&v| v.abs() < 1e-14));
            assert!(k.sigma_star2().iter().all(|&v| (v - 1.0).abs() < 1e-14));
            assert!(k.v_diag().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn zero_x_new_gives_zero_quad_form() {
        let (data, prior) = tiny();
        let k = build_precomp(&data, &prior).unwrap();
        let qf = quad_form_new(&k, &data, &DVector::zeros(1)).unwrap();
        assert_eq!(qf, 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (data, prior) = tiny();
        let k = build_precomp(&data, &prior).unwrap();
        assert!(quad_form_new(&k, &data, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn woodbury_quad_form_matches_direct_inverse() {
        // Random n=20, p=50 instance: the n×n path against an explicit p×p
        // inverse built independently here.
        let mut rng = RngState::from_seed(99);
        let (n, p) = (20, 50);
        let x = DMatrix::from_fn(n, p, |_, _| rng.standard_normal());
        let data = Dataset::new(x.clone(), vec![1; n]).unwrap();
        let prior = PriorSpec::new(2.5, PriorScaling::Constant).unwrap();
        let k = build_precomp(&data, &prior).unwrap();
        assert_eq!(k.path(), KernelPath::WoodburyN);

        let nu2 = prior.variance(p);
        let mut m = x.transpose() * &x;
        for j in 0..p {
            m[(j, j)] += 1.0 / nu2;
        }
        let v = m.try_inverse().unwrap();
        let x_new = DVector::from_fn(p, |_, _| rng.standard_normal());
        let direct = (&v * &x_new).dot(&x_new);
        let wood = quad_form_new(&k, &data, &x_new).unwrap();
        assert!((direct - wood).abs() < 1e-9, "|Δ| = {}", (direct - wood).abs());

        // V_jj shortcut agrees with the explicit inverse too.
        for j in 0..p {
            assert!((k.v_diag()[j] - v[(j, j)]).abs() < 1e-10);
        }
    }

    #[test]
    fn paths_agree_on_square_instance() {
        let mut rng = RngState::from_seed(7);
        let n = 30;
        let x = DMatrix::from_fn(n, n, |_, _| 0.5 * rng.standard_normal());
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let prior = PriorSpec::new(25.0, PriorScaling::Constant).unwrap();

        // p = n goes direct; append a zero column to force Woodbury on an
        // instance with identical kernel content in the first n columns.
        let data_sq = Dataset::new(x.clone(), y.clone()).unwrap();
        let k_direct = build_precomp(&data_sq, &prior).unwrap();
        assert_eq!(k_direct.path(), KernelPath::DirectP);

        let k_forced = force_woodbury(&data_sq, &prior);
        let d_h = (k_direct.h() - k_forced.h()).abs().max();
        let d_vxt = (k_direct.vxt() - k_forced.vxt()).abs().max();
        let d_l = (k_direct.lambda() - k_forced.lambda()).abs().max();
        let d_s2 = (k_direct.sigma_star2() - k_forced.sigma_star2())
            .abs()
            .max();
        let d_vd = (k_direct.v_diag() - k_forced.v_diag()).abs().max();
        for (name, d) in [
            ("H", d_h),
            ("VXᵀ", d_vxt),
            ("Λ", d_l),
            ("σ*²", d_s2),
            ("V_jj", d_vd),
        ] {
            assert!(d < 1e-8, "{name} differs across paths by {d}");
        }
    }

    /// Rebuild the products through the n×n branch regardless of `p`.
    pub(crate) fn force_woodbury(data: &Dataset, prior: &PriorSpec) -> KernelPrecomp {
        let (n, p) = (data.n(), data.p());
        let nu_p2 = prior.variance(p);
        let x = data.x();
        let mut w = x * x.transpose();
        w *= nu_p2;
        for i in 0..n {
            w[(i, i)] += 1.0;
        }
        let chol_w = Cholesky::new(w).unwrap();
        let mut lambda = chol_w.inverse();
        symmetrize(&mut lambda);
        let mut h = DMatrix::identity(n, n);
        h -= &lambda;
        let mut vxt = (&lambda * x).transpose();
        vxt *= nu_p2;
        let sigma_star2 = sigma_star2_from_h_diag(&h).unwrap();
        let v_diag = DVector::from_iterator(
            p,
            (0..p).map(|j| {
                let s: f64 = (0..n).map(|i| vxt[(j, i)] * x[(i, j)]).sum();
                nu_p2 * (1.0 - s)
            }),
        );
        KernelPrecomp {
            path: KernelPath::WoodburyN,
            nu_p2,
            vxt,
            h,
            lambda,
            sigma_star2,
            v_diag,
            v: None,
            chol_m: None,
            chol_w: Some(chol_w),
        }
    }

    #[test]
    fn invariants_hold_on_random_instances() {
        for seed in 0..5u64 {
            let mut rng = RngState::from_seed(seed);
            let (n, p) = (15, 10 + 3 * seed as usize);
            let x = DMatrix::from_fn(n, p, |_, _| rng.standard_normal());
            let data = Dataset::new(x.clone(), vec![1; n]).unwrap();
            let prior = PriorSpec::new(4.0, PriorScaling::Constant).unwrap();
            let k = build_precomp(&data, &prior).unwrap();
            let nu2 = prior.variance(p);

            // Symmetry and contraction.
            let asym = (k.h() - k.h().transpose()).abs().max();
            assert!(asym < 1e-10, "‖H − Hᵀ‖ = {asym}");
            for i in 0..n {
                assert!(k.h()[(i, i)] >= 0.0 && k.h()[(i, i)] < 1.0);
                assert!(k.sigma_star2()[i] >= 1.0);
            }
            // Λ = I − H exactly by construction: one of the pair is defined
            // as the identity minus the other, depending on the path.
            for i in 0..n {
                for j in 0..n {
                    let id = if i == j { 1.0 } else { 0.0 };
                    match k.path() {
                        KernelPath::DirectP => {
                            assert_eq!(k.lambda()[(i, j)], id - k.h()[(i, j)])
                        }
                        KernelPath::WoodburyN => {
                            assert_eq!(k.h()[(i, j)], id - k.lambda()[(i, j)])
                        }
                    }
                }
            }
            // X·(VXᵀ) reproduces H.
            let xh = data.x() * k.vxt();
            assert!((xh - k.h()).abs().max() < 1e-10);
            // V_jj bounds.
            for j in 0..p {
                assert!(k.v_diag()[j] > 0.0 && k.v_diag()[j] <= nu2 + 1e-12);
            }
        }
    }

    #[test]
    fn coef_sampler_matches_moments_both_paths() {
        for &(n, p) in &[(12usize, 6usize), (6, 12)] {
            let mut rng = RngState::from_seed(3);
            let x = DMatrix::from_fn(n, p, |_, _| rng.standard_normal());
            let data = Dataset::new(x.clone(), vec![1; n]).unwrap();
            let prior = PriorSpec::new(1.5, PriorScaling::Constant).unwrap();
            let k = build_precomp(&data, &prior).unwrap();
            let target = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
            let mean = k.vxt() * &target;
            let v = k.materialize_v(&data);

            let draws = 60_000;
            let mut acc = DVector::zeros(p);
            let mut acc2 = DVector::zeros(p);
            let mut r = RngState::from_seed(17);
            for _ in 0..draws {
                let b = k.sample_coef_given(&data, &target, &mut r);
                acc += &b;
                acc2 += b.component_mul(&b);
            }
            let emp_mean = acc / draws as f64;
            let emp_var = acc2 / draws as f64 - emp_mean.component_mul(&emp_mean);
            for j in 0..p {
                let se = (v[(j, j)] / draws as f64).sqrt();
                assert!(
                    (emp_mean[j] - mean[j]).abs() < 5.0 * se,
                    "mean mismatch on path {:?}",
                    k.path()
                );
                assert!((emp_var[j] - v[(j, j)]).abs() / v[(j, j)] < 0.08);
            }
        }
    }
}
