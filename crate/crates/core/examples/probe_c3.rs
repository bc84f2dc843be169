//! Two-chain diagnostic for the Gibbs-equivalence criterion (scratch).

use probit_vb::dataset::{PriorScaling, PriorSpec};
use probit_vb::diagnostics::{mcse_batch_means, simulate_dataset, Scenario};
use probit_vb::kernel::build_precomp;
use probit_vb::mf::{fit_mf, MfOptions};
use probit_vb::oracle::{gibbs_sample, GibbsOptions};
use probit_vb::pfm::{fit_pfm, pfm_moments, PfmOptions};

fn main() {
    let prior = PriorSpec::new(25.0, PriorScaling::Constant).unwrap();
    for seed in [1u64, 5] {
        let (data, _) = simulate_dataset(10, 20, seed, Scenario::Independent).unwrap();
        let ones: usize = data.y().iter().map(|&v| v as usize).sum();
        println!("=== seed {seed}: y balance {ones}/10");
        let k = build_precomp(&data, &prior).unwrap();
        let post = fit_pfm(&data, &prior, &k, &PfmOptions::default()).unwrap();
        let m = pfm_moments(&post, &data, &k, 100);
        let mf = fit_mf(&data, &prior, &k, &MfOptions::default()).unwrap();

        let opts = GibbsOptions { n_draws: 200_000, burn_in: 20_000, thin: 5, keep_z: false };
        let c1 = gibbs_sample(&data, &prior, &k, &opts, 1000 + seed).unwrap();
        let c2 = gibbs_sample(&data, &prior, &k, &opts, 5000 + seed).unwrap();
        let (m1, m2) = (c1.mean(), c2.mean());
        let (s1, s2) = (c1.sd(), c2.sd());

        let mut iact_max: f64 = 0.0;
        for j in [0usize, 7, 13] {
            let col: Vec<f64> = c1.draws_beta.column(j).iter().cloned().collect();
            let se = mcse_batch_means(&col);
            let iid_se = s1[j] / (col.len() as f64).sqrt();
            iact_max = iact_max.max((se / iid_se).powi(2));
        }
        println!("  worst IACT (thinned) on sampled coords: {iact_max:.1}");

        let mut chain_gap_se = 0.0f64;
        let mut pfm_gap_se = 0.0f64;
        let mut mf_gap_se = 0.0f64;
        let mut pfm_sd_rel = 0.0f64;
        for j in 0..20 {
            let col: Vec<f64> = c1.draws_beta.column(j).iter().cloned().collect();
            let se = mcse_batch_means(&col);
            chain_gap_se = chain_gap_se.max((m1[j] - m2[j]).abs() / (se * 1.4142));
            pfm_gap_se = pfm_gap_se.max((m.mean[j] - m1[j]).abs() / se);
            mf_gap_se = mf_gap_se.max((mf.beta_bar[j] - m1[j]).abs() / se);
            pfm_sd_rel = pfm_sd_rel.max((m.marginal_vars[j].sqrt() - s1[j]).abs() / s1[j]);
        }
        println!("  max |chain1-chain2| / (√2·MCSE) = {chain_gap_se:.2}");
        println!("  max |pfm - chain1| / MCSE       = {pfm_gap_se:.2}");
        println!("  max |mf  - chain1| / MCSE       = {mf_gap_se:.2}");
        println!("  max rel sd gap pfm vs chain1    = {:.4}", pfm_sd_rel);
        println!("  sd examples: pfm {:.3} {:.3} | c1 {:.3} {:.3} | c2 {:.3} {:.3}",
            m.marginal_vars[0].sqrt(), m.marginal_vars[13].sqrt(), s1[0], s1[13], s2[0], s2[13]);
    }
}
