//! Two-sample tests against exact sums, Monte Carlo oracles and each other.

use cnd_core::dist::{BinomialModel, HyperModel};
use cnd_core::twoprop::{
    classic_normal_test, inversion_test, inversion_test_with_noise, nonprivate_umpu,
    semiprivate_test, semiprivate_threshold, Privacy, TwoSampleData,
};
use cnd_core::{NoiseDistribution, TradeoffFn, TulapDist};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rejection_rate(ps: &[f64], alpha: f64) -> f64 {
    ps.iter().filter(|&&p| p <= alpha).count() as f64 / ps.len() as f64
}

fn within_band(rate: f64, alpha: f64, reps: usize, k: f64) -> bool {
    (rate - alpha).abs() <= k * (alpha * (1.0 - alpha) / reps as f64).sqrt()
}

#[test]
fn semiprivate_conditional_size_sweep() {
    let noise = TulapDist::from_eps_delta(1.0, 0.0).unwrap();
    for m in [1u64, 2, 7, 20, 40] {
        for n in [1u64, 3, 16, 40] {
            for z in 0..=m + n {
                let c = semiprivate_threshold(m, n, z, &noise, 0.05).unwrap();
                let hyper = HyperModel::central(m, n, z).unwrap();
                let size = hyper.expect(|h| noise.cdf(2.0 * h as f64 - z as f64 - c));
                assert!((size - 0.05).abs() <= 1e-8, "m {m} n {n} z {z}: {size}");
            }
        }
    }
}

#[test]
fn semiprivate_null_type_one() {
    let noise = TulapDist::from_eps_delta(1.0, 0.0).unwrap();
    let (m, n, reps) = (30, 30, 10_000);
    let bin = BinomialModel::new(30, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let ps: Vec<f64> = (0..reps)
        .map(|_| {
            let d = TwoSampleData::new(bin.sample(&mut rng), n, bin.sample(&mut rng), m).unwrap();
            semiprivate_test(&d, &noise, &mut rng).unwrap().p_value
        })
        .collect();
    assert!(within_band(rejection_rate(&ps, 0.05), 0.05, reps, 3.0));
}

#[test]
fn inversion_matches_monte_carlo_convolution() {
    let d = TwoSampleData::new(15, 30, 20, 30).unwrap();
    let report = inversion_test_with_noise(&d, Privacy::EpsDp(0.1), 0.0, 0.0, 1e-8).unwrap();
    let theta = 35.0 / 60.0;
    let bin = BinomialModel::new(30, theta).unwrap();
    let noise = TulapDist::from_eps_delta(0.1, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 1_000_000;
    let exceed = (0..draws)
        .filter(|_| {
            let y = bin.sample(&mut rng) as f64 + noise.sample(&mut rng).unwrap();
            let x = bin.sample(&mut rng) as f64 + noise.sample(&mut rng).unwrap();
            y / 30.0 - x / 30.0 > 1.0 / 6.0
        })
        .count();
    let oracle = exceed as f64 / draws as f64;
    assert!(
        (report.p_value - oracle).abs() <= 0.005,
        "{} vs {oracle}",
        report.p_value
    );
}

#[test]
fn gdp_inversion_approaches_classic_test() {
    let d = TwoSampleData::new(240, 500, 262, 500).unwrap();
    let inv = inversion_test_with_noise(&d, Privacy::Gdp(100.0), 0.0, 0.0, 1e-8).unwrap();
    let classic = classic_normal_test(&d);
    assert!(
        (inv.p_value - classic.p_value).abs() <= 0.01,
        "{} vs {}",
        inv.p_value,
        classic.p_value
    );
}

#[test]
fn inversion_null_uniformity() {
    let (reps, alpha) = (10_000, 0.05);
    let bin = BinomialModel::new(30, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ps: Vec<f64> = (0..reps)
        .map(|_| {
            let d = TwoSampleData::new(bin.sample(&mut rng), 30, bin.sample(&mut rng), 30).unwrap();
            inversion_test(&d, Privacy::EpsDp(0.1), 1e-6, &mut rng)
                .unwrap()
                .p_value
        })
        .collect();
    let rate = rejection_rate(&ps, alpha);
    assert!(within_band(rate, alpha, reps, 3.0), "rate {rate}");
}

#[test]
fn nonprivate_umpu_null_uniformity() {
    let reps = 10_000;
    let bin = BinomialModel::new(20, 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ps: Vec<f64> = (0..reps)
        .map(|_| {
            let d = TwoSampleData::new(bin.sample(&mut rng), 20, bin.sample(&mut rng), 20).unwrap();
            nonprivate_umpu(&d, &mut rng).unwrap().p_value
        })
        .collect();
    ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            (p - i as f64 / reps as f64)
                .abs()
                .max((p - (i + 1) as f64 / reps as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks <= 0.02, "KS {ks}");
}

#[test]
fn released_counts_satisfy_eps_dp() {
    // The inversion test releases x + N1; compare neighbours x and x + 1.
    let f = TradeoffFn::eps_delta(1.0, 0.0).unwrap();
    let draws = 20_000;
    let release = |x: u64, seed: u64| {
        let d = TwoSampleData::new(x, 10, 5, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..draws)
            .map(|_| {
                let n1 = TulapDist::from_eps_delta(1.0, 0.0)
                    .unwrap()
                    .sample(&mut rng)
                    .unwrap();
                let n2 = TulapDist::from_eps_delta(1.0, 0.0)
                    .unwrap()
                    .sample(&mut rng)
                    .unwrap();
                // Only the released summaries are used, never the raw counts.
                let r = inversion_test_with_noise(&d, Privacy::EpsDp(1.0), n1, n2, 1e-4).unwrap();
                r.privatized_x.unwrap()
            })
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let (a, b) = (release(4, 1), release(5, 2));
    for k in 1..20 {
        let cut = a[draws - k * draws / 20];
        let type1 = (draws - a.partition_point(|&v| v < cut)) as f64 / draws as f64;
        let type2 = b.partition_point(|&v| v < cut) as f64 / draws as f64;
        // Tulap attains f exactly, so allow 3 sigma of sampling error on each axis.
        let sd = |p: f64| 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
        assert!(
            type2 >= f.eval(type1 + sd(type1)) - sd(type2),
            "{type1} {type2}"
        );
    }
}
