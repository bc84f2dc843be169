//! Univariate normal and truncated-normal primitives.
//!
//! Everything downstream of the coordinate-ascent updates runs through the
//! inverse Mills ratio `ζ(t) = φ(t)/Φ(t)`, so it must stay accurate over the
//! whole range a fit can visit. Naive evaluation of `φ(t)/Φ(t)` underflows
//! once `|t|` passes ≈38 because both terms leave the representable range;
//! here the negative tail is computed through the scaled complementary error
//! function `erfcx(x) = exp(x²)·erfc(x)`, which is well-scaled everywhere:
//!
//! ```text
//! ζ(t) = √(2/π) / erfcx(-t/√2)            for t < 0,
//! ζ(t) = φ(t) / Φ(t)                       for t ≥ 0 (Φ ∈ [1/2, 1]).
//! ```
//!
//! The truncated-normal mean and variance suffer catastrophic cancellation
//! in the deep tail (`t + ζ(t)` with `ζ(t) ≈ -t`), so both switch to their
//! asymptotic series once the standardized bound passes 26–30.

use crate::error::VbError;
use crate::rng::RngState;

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const SQRT_PI: f64 = 1.772_453_850_905_516;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal density φ(x).
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF Φ(x) via the complementary error function.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Scaled complementary error function `exp(x²)·erfc(x)` for `x ≥ 0`.
///
/// Below 4 the direct product is exact to a few ulp; beyond that the
/// Laplace continued fraction converges geometrically and avoids the
/// subnormal range that `erfc` itself enters near 26.6.
fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 4.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // erfcx(x) = 1/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        // Backward evaluation; 40 levels is far past convergence at x ≥ 4.
        let mut f = x;
        for k in (1..=40).rev() {
            f = x + (k as f64) * 0.5 / f;
        }
        1.0 / (SQRT_PI * f)
    }
}

/// Inverse Mills ratio `ζ(t) = φ(t)/Φ(t)`.
///
/// Strictly positive and strictly decreasing; for very large positive `t`
/// the true value drops below the smallest representable double and the
/// result underflows gracefully.
#[inline]
pub fn mills_ratio(t: f64) -> f64 {
    if t < 0.0 {
        SQRT_2_OVER_PI / erfcx(-t * FRAC_1_SQRT_2)
    } else {
        normal_pdf(t) / normal_cdf(t)
    }
}

/// `log Φ(x)`, stable over the whole real line.
pub fn normal_log_cdf(x: f64) -> f64 {
    if x >= 0.0 {
        // Φ ∈ [1/2, 1]: ln(1 - Φ(-x)) without loss.
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else {
        // Φ(x) = 1/2·exp(-x²/2)·erfcx(-x/√2)
        -0.5 * x * x + erfcx(-x * FRAC_1_SQRT_2).ln() - std::f64::consts::LN_2
    }
}

/// Standard normal quantile Φ⁻¹(p) — Acklam's rational approximation
/// polished with one Halley step against the erfc-based CDF.
pub fn normal_quantile(p: f64) -> Result<f64, VbError> {
    if !(p.is_finite() && p > 0.0 && p < 1.0) {
        return Err(VbError::InvalidInput(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }

    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley refinement takes the ~1e-9 rational error to ~1e-15.
    let e = normal_cdf(x) - p;
    let u = e / normal_pdf(x);
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// `t + ζ(t)`: the mean of a standard normal truncated to `(−t·σ, ∞)`
/// rescaled to unit scale. Direct evaluation cancels catastrophically for
/// very negative `t`, so the tail uses the asymptotic series
/// `(1/s)(1 − 2u + 10u² − 74u³ + 706u⁴)` with `s = −t`, `u = 1/s²`.
fn tn_shift(t: f64) -> f64 {
    if t > -26.0 {
        t + mills_ratio(t)
    } else {
        let s = -t;
        let u = 1.0 / (s * s);
        (1.0 - 2.0 * u + 10.0 * u * u - 74.0 * u * u * u + 706.0 * u * u * u * u) / s
    }
}

/// `1 − ζ(t)·(t + ζ(t))`: the variance factor of the same truncated normal.
/// Tail series `u(1 − 6u + 50u² − 518u³)` with `u = 1/t²`.
fn tn_var_factor(t: f64) -> f64 {
    if t > -30.0 {
        1.0 - mills_ratio(t) * tn_shift(t)
    } else {
        let u = 1.0 / (t * t);
        u * (1.0 - 6.0 * u + 50.0 * u * u - 518.0 * u * u * u)
    }
}

/// Truncation side for the latent utility of a binary observation:
/// `y = 1` restricts to `(0, ∞)`, `y = 0` to `(−∞, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn from_label(y: u8) -> Self {
        if y == 1 {
            Side::Positive
        } else {
            Side::Negative
        }
    }

    /// The sign `2y − 1`.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

/// Location, scale and truncation side of a univariate truncated normal.
#[derive(Debug, Clone, Copy)]
pub struct TruncNormParams {
    pub mu: f64,
    pub sigma: f64,
    pub side: Side,
}

impl TruncNormParams {
    pub fn new(mu: f64, sigma: f64, side: Side) -> Result<Self, VbError> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(VbError::InvalidInput(format!(
                "truncated normal needs finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(TruncNormParams { mu, sigma, side })
    }

    /// Standardized location `(2y−1)·μ/σ`.
    #[inline]
    fn t(&self) -> f64 {
        self.side.sign() * self.mu / self.sigma
    }
}

/// Mean of the truncated normal; the sign always matches the side.
pub fn tn_mean(params: &TruncNormParams) -> f64 {
    params.side.sign() * params.sigma * tn_shift(params.t())
}

/// Variance of the truncated normal, in `(0, σ²)`.
pub fn tn_var(params: &TruncNormParams) -> f64 {
    params.sigma * params.sigma * tn_var_factor(params.t())
}

/// Second raw moment `E(z²) = μ² + σ² + (2y−1)·μσ·ζ((2y−1)μ/σ)`, evaluated
/// as `σ²(1 + t·(t + ζ(t)))` to survive the deep tail.
pub fn tn_second_moment(params: &TruncNormParams) -> f64 {
    let t = params.t();
    params.sigma * params.sigma * (1.0 + t * tn_shift(t))
}

/// Standard normal conditioned on `x ≥ a`.
///
/// Below the mode an inverse-CDF draw is exact and cheap; above it a
/// shifted-exponential proposal (Robert 1995) keeps the acceptance rate
/// bounded away from zero for arbitrarily deep truncations.
fn sample_std_lower(a: f64, rng: &mut RngState) -> f64 {
    if a <= 0.0 {
        let pa = normal_cdf(a);
        loop {
            let u = rng.uniform();
            let p = pa + u * (1.0 - pa);
            if p <= 0.0 || p >= 1.0 {
                continue;
            }
            let x = normal_quantile(p).expect("p in (0,1)");
            if x > a {
                return x;
            }
        }
    } else {
        let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let x = a + rng.exp1() / lambda;
            let d = x - lambda;
            if rng.uniform().ln() <= -0.5 * d * d {
                return x;
            }
        }
    }
}

/// Draw from the truncated normal. The draw is strictly inside the
/// truncation region; the RNG state is advanced in place.
pub fn tn_sample(params: &TruncNormParams, rng: &mut RngState) -> f64 {
    let s = params.side.sign();
    // Mirror everything onto the positive side: z = s·(|μ| shifted draw).
    let a = -s * params.mu / params.sigma;
    loop {
        let z = s * (s * params.mu + params.sigma * sample_std_lower(a, rng));
        if s * z > 0.0 {
            return z;
        }
    }
}
