use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use stickbreak::montecarlo::{mc_mean_kn, mc_samples, sample_box_index, sample_box_index_geometric, McConfig};
use stickbreak::occupancy::expected_kn;
use stickbreak::{SuccessPrior, SuccessProbability, WeightFamily};

fn chi2_p_value(stat: f64, dof: usize) -> f64 {
    1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
}

/// `t` with `mass_below_t(t) = level`.
fn t_quantile(prior: SuccessPrior, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while prior.mass_below_t(hi) < level {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if prior.mass_below_t(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn prior_sampler_matches_density() {
    let bins = 50;
    let draws = 100_000;
    for (seed, prior) in [
        SuccessPrior::Uniform,
        SuccessPrior::LogGamma(1),
        SuccessPrior::LogGamma(2),
        SuccessPrior::LogGammaRho(0.5),
    ]
    .into_iter()
    .enumerate()
    {
        let edges: Vec<f64> = (1..bins).map(|k| t_quantile(prior, k as f64 / bins as f64)).collect();
        let mut counts = vec![0u64; bins];
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed as u64);
        for _ in 0..draws {
            let t = prior.sample_p(&mut rng).log_inverse();
            counts[edges.partition_point(|&e| e < t)] += 1;
        }
        let expected = draws as f64 / bins as f64;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let pv = chi2_p_value(stat, bins - 1);
        assert!(pv > 1e-3, "{prior:?}: chi2 = {stat}, p-value {pv}");
    }
}

#[test]
fn box_index_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 1_000_000;
    let p = SuccessProbability::new(0.5).unwrap();
    let s3 = WeightFamily::new(3).unwrap();
    let hits = (0..draws).filter(|_| sample_box_index(s3, p, &mut rng) == 1).count() as f64;
    let sd = (0.375f64 * 0.625 / draws as f64).sqrt();
    assert!((hits / draws as f64 - 0.375).abs() < 3.0 * sd);
}

#[test]
fn composition_and_direct_geometric_paths_agree() {
    let draws = 1_000_000;
    let boxes = 20;
    let p = SuccessProbability::new(0.2).unwrap();
    let g = WeightFamily::geometric();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut a = vec![0f64; boxes + 1];
    let mut b = vec![0f64; boxes + 1];
    for _ in 0..draws {
        a[(sample_box_index(g, p, &mut rng) as usize).min(boxes + 1) - 1] += 1.0;
        b[(sample_box_index_geometric(p, &mut rng) as usize).min(boxes + 1) - 1] += 1.0;
    }
    // two-sample chi-square with equal sample sizes
    let stat: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2) / (x + y)).sum();
    let pv = chi2_p_value(stat, boxes);
    assert!(pv > 1e-3, "chi2 = {stat}, p-value {pv}");
}

#[test]
fn mc_agrees_with_quadrature() {
    let config = McConfig {
        n: 200,
        reps: 4000,
        seed: 11,
        prior: SuccessPrior::LogGammaRho(0.5),
        family: WeightFamily::new(3).unwrap(),
    };
    let mc = mc_mean_kn(&config).unwrap();
    let exact = expected_kn(config.prior, config.family, config.n, 1e-7).unwrap();
    assert!((mc.mean_kn - exact).abs() < 3.0 * mc.std_error, "{mc:?} vs {exact}");
}

#[test]
fn replicate_streams_are_uncorrelated() {
    let config = McConfig {
        n: 100,
        reps: 10_000,
        seed: 1,
        prior: SuccessPrior::Uniform,
        family: WeightFamily::geometric(),
    };
    let xs: Vec<f64> = mc_samples(&config).unwrap().into_iter().map(|k| k as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    let lag1 = cov / var;
    // 0.01 is one standard error of a null lag-1 correlation at this size
    assert!(lag1.abs() < 0.01, "lag-1 correlation {lag1}");
}
