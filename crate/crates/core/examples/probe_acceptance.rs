//! Scratch probe for the acceptance-suite quantities (deleted before ship).

use nalgebra::DVector;
use probit_vb::dataset::{PriorScaling, PriorSpec};
use probit_vb::diagnostics::{mcse_batch_means, simulate_dataset, wasserstein_1d, Scenario};
use probit_vb::kernel::build_precomp;
use probit_vb::mf::{fit_mf, mf_predict, MfOptions};
use probit_vb::oracle::{gibbs_sample, GibbsOptions};
use probit_vb::pfm::{fit_pfm, pfm_moments, pfm_predict, pfm_sample, PfmOptions};
use probit_vb::mf::mf_joint_elbo;
use probit_vb::pfm::pfm_joint_elbo;

fn main() {
    let prior = PriorSpec::new(25.0, PriorScaling::Constant).unwrap();

    // ---- Criterion 3: Gibbs equivalence at n=10, p=20 ----
    let t0 = std::time::Instant::now();
    let mut total = 0usize;
    let mut within = 0usize;
    let mut w_fail = 0usize;
    let mut w_total = 0usize;
    for seed in 1..=5u64 {
        let (data, _) = simulate_dataset(10, 20, seed, Scenario::Independent).unwrap();
        let k = build_precomp(&data, &prior).unwrap();
        let post = fit_pfm(&data, &prior, &k, &PfmOptions::default()).unwrap();
        let m = pfm_moments(&post, &data, &k, 100);
        let chain = gibbs_sample(
            &data, &prior, &k,
            &GibbsOptions { n_draws: 200_000, burn_in: 5_000, thin: 5, keep_z: false },
            seed + 100,
        ).unwrap();
        let gm = chain.mean();
        let gs = chain.sd();
        for j in 0..20 {
            let col: Vec<f64> = chain.draws_beta.column(j).iter().cloned().collect();
            let se_mean = mcse_batch_means(&col);
            // sd MCSE: batch means of squared deviations as rough proxy
            let sq: Vec<f64> = col.iter().map(|v| (v - gm[j]).powi(2)).collect();
            let se_var = mcse_batch_means(&sq);
            let se_sd = se_var / (2.0 * gs[j]);
            total += 2;
            if (m.mean[j] - gm[j]).abs() < 3.0 * se_mean { within += 1; }
            else { println!("  mean miss j={j} seed={seed}: {} vs {} (se {})", m.mean[j], gm[j], se_mean); }
            let psd = m.marginal_vars[j].sqrt();
            if (psd - gs[j]).abs() < 3.0 * se_sd { within += 1; }
            else { println!("  sd miss j={j} seed={seed}: {psd} vs {} (se {})", gs[j], se_sd); }
        }
        // Wasserstein vs half-chain floor
        let draws = pfm_sample(&post, &data, &k, 200_000, seed + 500, true);
        let half = chain.len() / 2;
        for j in 0..20 {
            let a: Vec<f64> = draws.column(j).iter().cloned().collect();
            let b: Vec<f64> = chain.draws_beta.column(j).iter().cloned().collect();
            let w = wasserstein_1d(&a, &b).unwrap();
            let h1: Vec<f64> = b[..half].to_vec();
            let h2: Vec<f64> = b[half..2 * half].to_vec();
            let floor = wasserstein_1d(&h1, &h2).unwrap();
            w_total += 1;
            if w >= 2.0 * floor {
                w_fail += 1;
                println!("  W miss j={j} seed={seed}: W={w:.5} floor={floor:.5}");
            }
        }
    }
    println!("C3: {within}/{total} within 3 MCSE; W fails {w_fail}/{w_total}; elapsed {:?}", t0.elapsed());

    // ---- Criteria 5 & 6: ladder n=50, p in {200, 800, 3200} ----
    let n = 50;
    let mut pfm_iters = Vec::new();
    let mut mf_iters = Vec::new();
    let mut mf_norms = Vec::new();
    let mut pfm_ratio = Vec::new();
    for &p in &[200usize, 800, 3200] {
        let (data, _) = simulate_dataset(n, p, 42, Scenario::Independent).unwrap();
        let k = build_precomp(&data, &prior).unwrap();
        let t = std::time::Instant::now();
        let pf = fit_pfm(&data, &prior, &k, &PfmOptions::default()).unwrap();
        let tp = t.elapsed();
        let t = std::time::Instant::now();
        let mf = fit_mf(&data, &prior, &k, &MfOptions::default()).unwrap();
        let tm = t.elapsed();
        let nu = prior.variance(p).sqrt();
        let m = pfm_moments(&pf, &data, &k, 0);
        mf_norms.push(mf.beta_bar.norm() / nu);
        pfm_ratio.push(m.mean.norm() / nu / (n as f64).sqrt());
        pfm_iters.push(pf.iterations);
        mf_iters.push(mf.iterations);
        println!(
            "p={p}: pfm {} sweeps ({tp:?}, conv {}), mf {} iters ({tm:?}, conv {}), mf_norm/nu {:.4}, pfm_norm/nu/sqrt(n) {:.4}",
            pf.iterations, pf.converged, mf.iterations, mf.converged,
            mf_norms.last().unwrap(), pfm_ratio.last().unwrap()
        );
    }
    println!("C5: pfm sweeps {pfm_iters:?} mf iters {mf_iters:?}");
    println!("C6: mf norms {mf_norms:?} (strictly decreasing?), pfm ratio at 3200: {:.4} vs 0.79788", pfm_ratio[2]);

    // ---- Criterion 7: predictive bias at n=50, p=800; gibbs check n=10, p=160 ----
    let (data, _) = simulate_dataset(50, 800, 7, Scenario::Independent).unwrap();
    let k = build_precomp(&data, &prior).unwrap();
    let pf = fit_pfm(&data, &prior, &k, &PfmOptions::default()).unwrap();
    let mf = fit_mf(&data, &prior, &k, &MfOptions::default()).unwrap();
    // 100 held-out units from the same generator: simulate a fresh dataset with same p
    let (hold, _) = simulate_dataset(100, 800, 8, Scenario::Independent).unwrap();
    let mut mf_dev = Vec::new();
    let mut pfm_dev = Vec::new();
    for i in 0..100 {
        let x_new: DVector<f64> = hold.x().row(i).transpose();
        let pm = mf_predict(&mf, &data, &k, &x_new).unwrap();
        let (pp, _) = pfm_predict(&pf, &data, &k, &x_new, 3000, 1000 + i as u64).unwrap();
        mf_dev.push((pm - 0.5).abs());
        pfm_dev.push((pp - 0.5).abs());
    }
    mf_dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pfm_dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("C7a: median |mf-0.5| = {:.4}, median |pfm-0.5| = {:.4}", mf_dev[50], pfm_dev[50]);

    let (data2, _) = simulate_dataset(10, 160, 9, Scenario::Independent).unwrap();
    let k2 = build_precomp(&data2, &prior).unwrap();
    let pf2 = fit_pfm(&data2, &prior, &k2, &PfmOptions::default()).unwrap();
    let chain2 = gibbs_sample(&data2, &prior, &k2,
        &GibbsOptions { n_draws: 200_000, burn_in: 5_000, thin: 5, keep_z: false }, 77).unwrap();
    let (hold2, _) = simulate_dataset(50, 160, 10, Scenario::Independent).unwrap();
    let mut max_gap: f64 = 0.0;
    for i in 0..50 {
        let x_new: DVector<f64> = hold2.x().row(i).transpose();
        let (pp, _) = pfm_predict(&pf2, &data2, &k2, &x_new, 20_000, 2000 + i as u64).unwrap();
        let eta = &chain2.draws_beta * &x_new;
        let pg = eta.iter().map(|&e| probit_vb::normal_cdf(e)).sum::<f64>() / chain2.len() as f64;
        max_gap = max_gap.max((pp - pg).abs());
    }
    println!("C7b: max |pfm - gibbs| predictive = {max_gap:.4} (want < 0.05)");

    // ---- Criterion 4: dominance over ratios ----
    let mut worst: f64 = f64::INFINITY;
    for (i, &(nn, ratio)) in [(50usize, 0.5f64), (50, 1.0), (50, 2.0), (50, 4.0), (30, 2.0)].iter().enumerate() {
        for s in 0..4u64 {
            let p = ((nn as f64) * ratio) as usize;
            let (data, _) = simulate_dataset(nn, p, 300 + 10 * i as u64 + s, Scenario::Independent).unwrap();
            let k = build_precomp(&data, &prior).unwrap();
            let pf = fit_pfm(&data, &prior, &k, &PfmOptions::default()).unwrap();
            let mf = fit_mf(&data, &prior, &k, &MfOptions::default()).unwrap();
            let e_pfm = pfm_joint_elbo(&data, &k, &pf.mu_star, &pf.z_bar_star);
            let e_mf = mf_joint_elbo(&data, &prior, &k, &mf);
            worst = worst.min(e_pfm - e_mf);
        }
    }
    println!("C4: min ELBO(pfm) - ELBO(mf) over 20 instances = {worst:.6} (want >= -1e-8)");

    // ---- Criterion 11: timing ----
    let (d2k, _) = simulate_dataset(100, 2000, 21, Scenario::Independent).unwrap();
    let (d4k, _) = simulate_dataset(100, 4000, 22, Scenario::Independent).unwrap();
    let k2k = build_precomp(&d2k, &prior).unwrap();
    let k4k = build_precomp(&d4k, &prior).unwrap();
    let sweep_time = |data: &probit_vb::Dataset, k: &probit_vb::KernelPrecomp| {
        let reps = 200;
        let t = std::time::Instant::now();
        for r in 0..reps {
            let _ = fit_pfm(data, &prior, k, &PfmOptions { max_iter: 1, tol: 0.0, z_init: None, sweep_path: None, mu_tol: None }).unwrap();
            std::hint::black_box(r);
        }
        t.elapsed().as_secs_f64() / reps as f64
    };
    let t2 = sweep_time(&d2k, &k2k);
    let t4 = sweep_time(&d4k, &k4k);
    println!("C11: sweep p=2000 {t2:.6}s, p=4000 {t4:.6}s, ratio {:.3}", t4 / t2);
    let t = std::time::Instant::now();
    let (d10k, _) = simulate_dataset(100, 10_000, 23, Scenario::Independent).unwrap();
    let k10k = build_precomp(&d10k, &prior).unwrap();
    let pf = fit_pfm(&d10k, &prior, &k10k, &PfmOptions::default()).unwrap();
    println!("C11: full n=100 p=10000 fit in {:?} ({} sweeps), path {:?}, bytes {}",
        t.elapsed(), pf.iterations, k10k.path(), k10k.stored_bytes());
}
