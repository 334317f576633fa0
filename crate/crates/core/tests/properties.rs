use cnd_core::dist::{BinomialModel, HyperModel};
use cnd_core::twoprop::two_sided;
use cnd_core::{CndDist, GaussianCnd, NoiseDistribution, TradeoffFn, TulapDist};
use proptest::prelude::*;

fn tradeoff() -> impl Strategy<Value = TradeoffFn> {
    prop_oneof![
        (0.05f64..3.0, 0.0f64..0.2).prop_map(|(e, d)| TradeoffFn::eps_delta(e, d).unwrap()),
        (0.1f64..3.0).prop_map(|mu| TradeoffFn::gaussian(mu).unwrap()),
        (0.2f64..2.0).prop_map(|e| TradeoffFn::twofold(TradeoffFn::eps_delta(e, 0.0).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cnd_is_symmetric(f in tradeoff(), x in -6.0f64..6.0) {
        let d = CndDist::new(f).unwrap();
        prop_assert!((d.cdf(x) + d.cdf(-x) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cnd_satisfies_recurrence(f in tradeoff(), x in 0.5f64..6.0) {
        let d = CndDist::new(f.clone()).unwrap();
        prop_assert!((d.cdf(x) - (1.0 - f.eval(d.cdf(x - 1.0)))).abs() <= 1e-12);
    }

    #[test]
    fn cnd_quantile_roundtrip(f in tradeoff(), u in 0.001f64..0.999) {
        let d = CndDist::new(f).unwrap();
        let x = d.quantile(u).unwrap();
        prop_assert!((d.cdf(x) - u).abs() <= 1e-9);
    }

    #[test]
    fn cdfs_are_monotone(f in tradeoff(), a in -5.0f64..5.0, h in 0.0f64..2.0) {
        let d = CndDist::new(f).unwrap();
        prop_assert!(d.cdf(a + h) >= d.cdf(a));
        let t = TulapDist::new(0.5, 0.1).unwrap();
        prop_assert!(t.cdf(a + h) >= t.cdf(a));
        let g = GaussianCnd::new(1.5).unwrap();
        prop_assert!(g.cdf(a + h) >= g.cdf(a));
    }

    #[test]
    fn tulap_quantile_roundtrip(eps in 0.05f64..4.0, delta in 0.0f64..0.2, u in 0.0001f64..0.9999) {
        let d = TulapDist::from_eps_delta(eps, delta).unwrap();
        prop_assert!((d.cdf(d.quantile(u).unwrap()) - u).abs() <= 1e-12);
    }

    #[test]
    fn binomial_pmf_sums_to_one(n in 0u64..400, theta in 0.0f64..=1.0) {
        let total: f64 = BinomialModel::new(n, theta).unwrap().pmf_vec().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn hyper_pmf_sums_to_one(m in 0u64..60, n in 0u64..60, frac in 0.0f64..=1.0, omega in 0.05f64..20.0) {
        let z = (frac * (m + n) as f64).round() as u64;
        let h = HyperModel::new(m, n, z, omega).unwrap();
        let total: f64 = h.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hyper_has_increasing_likelihood_ratio(m in 1u64..30, n in 1u64..30, frac in 0.0f64..=1.0, w in 1.01f64..10.0) {
        // Noncentral over central grows in h for omega > 1.
        let z = (frac * (m + n) as f64).round() as u64;
        let a = HyperModel::new(m, n, z, w).unwrap();
        let b = HyperModel::central(m, n, z).unwrap();
        let ratios: Vec<f64> = a.iter().map(|(h, p)| p / b.pmf(h as i64)).collect();
        for r in ratios.windows(2) {
            prop_assert!(r[1] >= r[0] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn two_sided_is_symmetric(p in 0.0f64..=1.0) {
        prop_assert!((two_sided(p) - two_sided(1.0 - p)).abs() <= 1e-15);
        prop_assert!((0.0..=1.0).contains(&two_sided(p)));
    }
}
