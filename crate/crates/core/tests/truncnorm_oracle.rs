//! Truncated-normal kernel against independent quadrature oracles.

mod common;

use probit_vb::truncnorm::{mills_ratio, tn_mean, tn_sample, tn_var, Side, TruncNormParams};
use probit_vb::RngState;

#[test]
fn mills_ratio_matches_integral_oracle_on_grid() {
    // 1e-12 relative over the whole working range; the oracle itself is the
    // well-scaled integral representation, good to ~1e-14.
    let mut t = -40.0;
    while t <= 37.0 {
        let oracle = common::mills_oracle(t);
        let got = mills_ratio(t);
        let rel = ((got - oracle) / oracle).abs();
        assert!(rel < 1e-12, "t = {t}: {got} vs oracle {oracle} (rel {rel:e})");
        t += 0.37;
    }
}

#[test]
fn tn_moments_match_quadrature_on_grid() {
    // Grid μ/σ ∈ [−10, 10], σ ∈ {0.5, 1, 5}, both sides, 1e-10 absolute.
    for &sigma in &[0.5, 1.0, 5.0] {
        for &positive in &[true, false] {
            let side = if positive { Side::Positive } else { Side::Negative };
            let mut ratio = -10.0;
            while ratio <= 10.0 {
                let mu = ratio * sigma * if positive { 1.0 } else { -1.0 };
                let params = TruncNormParams::new(mu, sigma, side).unwrap();
                let (om, ov) = common::tn_oracle(mu, sigma, positive);
                let m = tn_mean(&params);
                let v = tn_var(&params);
                assert!(
                    (m - om).abs() < 1e-10,
                    "mean at mu={mu}, sigma={sigma}, side {side:?}: {m} vs {om}"
                );
                assert!(
                    (v - ov).abs() < 1e-10,
                    "var at mu={mu}, sigma={sigma}, side {side:?}: {v} vs {ov}"
                );
                ratio += 0.5;
            }
        }
    }
}

#[test]
fn deep_tail_sampler_matches_quadrature_mean() {
    // (μ=−8, σ=1, positive side): the naive rejection region has acceptance
    // ~6e-16; this must terminate and still have the right mean.
    let params = TruncNormParams::new(-8.0, 1.0, Side::Positive).unwrap();
    let (om, ov) = common::tn_oracle(-8.0, 1.0, true);
    let mut rng = RngState::from_seed(2024);
    let n = 1_000_000usize;
    let mut sum = 0.0;
    for _ in 0..n {
        let z = tn_sample(&params, &mut rng);
        assert!(z > 0.0);
        sum += z;
    }
    let mean = sum / n as f64;
    let se = (ov / n as f64).sqrt();
    assert!(
        (mean - om).abs() < 4.0 * se,
        "sampler mean {mean} vs oracle {om} (se {se:e})"
    );
}

#[test]
fn sampler_matches_moments_across_regimes() {
    let mut rng = RngState::from_seed(7);
    for &(mu, sigma, positive) in &[
        (0.0, 1.0, true),
        (3.0, 0.5, true),
        (-2.0, 5.0, true),
        (1.0, 1.0, false),
        (-4.0, 2.0, false),
    ] {
        let side = if positive { Side::Positive } else { Side::Negative };
        let params = TruncNormParams::new(mu, sigma, side).unwrap();
        let (om, ov) = common::tn_oracle(mu, sigma, positive);
        let n = 400_000usize;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += tn_sample(&params, &mut rng);
        }
        let mean = sum / n as f64;
        let se = (ov / n as f64).sqrt();
        assert!(
            (mean - om).abs() < 4.0 * se,
            "mu={mu} sigma={sigma} positive={positive}: {mean} vs {om}"
        );
    }
}
