//! Shared independent oracles for the integration suites. Everything here
//! recomputes target quantities from first principles (quadrature, well
//! scaled integral representations, Monte Carlo), deliberately avoiding the
//! evaluation paths used by the library.

#![allow(dead_code)]

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Adaptive Simpson quadrature with Richardson acceptance.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(f, a, fa, m, fm, lm, flm);
        let right = simpson(f, m, fm, b, fb, rm, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson(f, a, fa, b, fb, m, fm);
    // Depth 22 bounds the worst case at ~4M evaluations while resolving
    // features ~1e-7 of the interval width.
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 22)
}

fn phi(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

/// Mills-ratio reciprocal `R(t) = Φ(t)/φ(t)` for `t ≤ 0` through the well
/// scaled integral `∫₀^∞ exp(t·u − u²/2) du` (integrand ≤ 1 everywhere, no
/// under- or overflow for any `t ≤ 0`).
pub fn mills_reciprocal_integral(t: f64) -> f64 {
    assert!(t <= 0.0);
    adaptive_simpson(&|u: f64| (t * u - 0.5 * u * u).exp(), 0.0, 45.0, 1e-16)
}

/// Quadrature oracle for `ζ(t) = φ(t)/Φ(t)`, valid for `t ≤ 37.5` (beyond
/// that the true value is not representable as a normal double).
pub fn mills_oracle(t: f64) -> f64 {
    if t <= 0.0 {
        1.0 / mills_reciprocal_integral(t)
    } else {
        // Φ(t) = 1 − Φ(−t) = 1 − φ(t)·R(−t)
        phi(t) / (1.0 - phi(t) * mills_reciprocal_integral(-t))
    }
}

/// Quadrature oracle for the truncated-normal mean and variance on the
/// positive region `(0, ∞)`; use [`tn_oracle`] for either side.
///
/// The Gaussian kernel is rescaled so its maximum on the region is 1
/// (otherwise deep-tail integrals underflow any absolute tolerance), and
/// tolerances are set relative to a crude trapezoid estimate of each
/// integral.
fn tn_oracle_positive(mu: f64, sigma: f64) -> (f64, f64) {
    // Peak of the density on [0, ∞) sits at max(0, μ).
    let u0 = (-mu / sigma).max(0.0);
    let density = |z: f64| {
        let u = (z - mu) / sigma;
        (-0.5 * (u * u - u0 * u0)).exp()
    };
    // Upper bound where the rescaled kernel has dropped by e⁻⁴⁵: solves
    // u0·w + w²/2 = 45 in standardized units past the peak. This keeps the
    // mass a sizable fraction of the integration window even when the
    // region is deep in the tail, so the panel seeding below resolves it.
    let w_star = -u0 + (u0 * u0 + 90.0).sqrt();
    let hi = mu.max(0.0) + sigma * w_star;

    // Composite: 64 uniform panels, adaptive Simpson inside each, with the
    // tolerance scaled to a crude trapezoid estimate of the integral.
    let integrate = |f: &dyn Fn(f64) -> f64| -> f64 {
        let k = 512;
        let mut rough = 0.0;
        for i in 0..k {
            let z0 = hi * i as f64 / k as f64;
            let z1 = hi * (i + 1) as f64 / k as f64;
            rough += 0.5 * (z1 - z0) * (f(z0) + f(z1));
        }
        let panels = 64;
        let tol = (rough.abs() * 1e-14 / panels as f64).max(1e-280);
        let mut acc = 0.0;
        for i in 0..panels {
            let a = hi * i as f64 / panels as f64;
            let b = hi * (i + 1) as f64 / panels as f64;
            acc += adaptive_simpson(f, a, b, tol);
        }
        acc
    };

    let i0 = integrate(&density);
    let i1 = integrate(&|z: f64| z * density(z));
    let i2 = integrate(&|z: f64| z * z * density(z));
    let mean = i1 / i0;
    (mean, i2 / i0 - mean * mean)
}

/// `(mean, variance)` of `TN(mu, sigma², side)` by adaptive quadrature.
pub fn tn_oracle(mu: f64, sigma: f64, positive_side: bool) -> (f64, f64) {
    if positive_side {
        tn_oracle_positive(mu, sigma)
    } else {
        let (m, v) = tn_oracle_positive(-mu, sigma);
        (-m, v)
    }
}

/// Summary statistics of a slice.
pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
