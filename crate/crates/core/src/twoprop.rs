//! Tests of `H0: theta_X >= theta_Y` against `H1: theta_X < theta_Y` for two
//! independent binomial counts.
//!
//! All p-values are one-sided, small when `Y/m` exceeds `X/n`; see
//! [`two_sided`] for the Bonferroni two-sided version. Expectations over the
//! conditional hypergeometric law are exact sums over its support.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use rand_core::RngCore;

use crate::charfn::{gil_pelaez_cdf, NoiseCf, TStatisticCf};
use crate::cnd::{GaussianCnd, NoiseDistribution, TulapDist};
use crate::dist::{laplace_sample, uniform_cdf, HyperModel};
use crate::error::{Error, Result};
use crate::rng::uniform_open01;
use crate::root::solve_decreasing;
use crate::special::norm_cdf;

/// Bracket limit, shift tolerance and size tolerance for [`semiprivate_threshold`].
const THRESHOLD_LIMIT: f64 = 1e6;
const THRESHOLD_XTOL: f64 = 1e-10;
const THRESHOLD_SIZE_TOL: f64 = 1e-9;

/// Successes `x` of `n` in the first sample and `y` of `m` in the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoSampleData {
    pub x: u64,
    pub n: u64,
    pub y: u64,
    pub m: u64,
}

impl TwoSampleData {
    pub fn new(x: u64, n: u64, y: u64, m: u64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::param("sample size", n.min(m) as f64, "m, n >= 1"));
        }
        if x > n {
            return Err(Error::param("x", x as f64, "0 <= x <= n"));
        }
        if y > m {
            return Err(Error::param("y", y as f64, "0 <= y <= m"));
        }
        Ok(TwoSampleData { x, n, y, m })
    }

    pub fn total(&self) -> u64 {
        self.x + self.y
    }

    fn echo(&self) -> BTreeMap<String, f64> {
        let mut params = BTreeMap::new();
        params.insert("m".to_string(), self.m as f64);
        params.insert("n".to_string(), self.n as f64);
        params
    }
}

/// The privacy definition an inversion test is calibrated to.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Privacy {
    /// `(eps, 0)`-DP with Tulap noise.
    EpsDp(f64),
    /// `mu`-GDP with `N(0, 1/mu^2)` noise.
    Gdp(f64),
}

impl Privacy {
    fn validate(self) -> Result<Self> {
        match self {
            Privacy::EpsDp(eps) if !(eps > 0.0 && eps.is_finite()) => {
                Err(Error::param("eps", eps, "eps > 0"))
            }
            Privacy::Gdp(mu) if !(mu > 0.0 && mu.is_finite()) => {
                Err(Error::param("mu", mu, "mu > 0"))
            }
            p => Ok(p),
        }
    }

    fn sample<R: RngCore + ?Sized>(self, rng: &mut R) -> Result<f64> {
        match self {
            Privacy::EpsDp(eps) => TulapDist::from_eps_delta(eps, 0.0)?.sample(rng),
            Privacy::Gdp(mu) => GaussianCnd::new(mu)?.sample(rng),
        }
    }

    fn noise_cf(self) -> NoiseCf {
        match self {
            Privacy::EpsDp(eps) => NoiseCf::Tulap { eps },
            Privacy::Gdp(mu) => NoiseCf::Gaussian { mu },
        }
    }

    fn echo(self, params: &mut BTreeMap<String, f64>) {
        match self {
            Privacy::EpsDp(eps) => params.insert("eps".to_string(), eps),
            Privacy::Gdp(mu) => params.insert("mu".to_string(), mu),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    Classic,
    DpNormal,
    Plugin,
    Inversion,
    Semiprivate,
    NonprivateUmpu,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Classic => "classic",
            Method::DpNormal => "dp_normal",
            Method::Plugin => "plugin",
            Method::Inversion => "inversion",
            Method::Semiprivate => "semiprivate",
            Method::NonprivateUmpu => "nonprivate_umpu",
        }
    }
}

/// Outcome of one test run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestReport {
    pub method: Method,
    pub p_value: f64,
    pub statistic: f64,
    pub privatized_x: Option<f64>,
    pub privatized_y: Option<f64>,
    pub params: BTreeMap<String, f64>,
    /// Seed of the generator that drove the noise, when the caller records it.
    pub seed: Option<u64>,
}

impl TestReport {
    fn new(method: Method, p_value: f64, statistic: f64, params: BTreeMap<String, f64>) -> Self {
        TestReport {
            method,
            p_value: p_value.clamp(0.0, 1.0),
            statistic,
            privatized_x: None,
            privatized_y: None,
            params,
            seed: None,
        }
    }

    fn privatized(mut self, x: f64, y: f64) -> Self {
        self.privatized_x = Some(x);
        self.privatized_y = Some(y);
        self
    }
}

/// `2 min(p, 1 - p)`, capped at 1.
pub fn two_sided(p: f64) -> f64 {
    (2.0 * p.min(1.0 - p)).clamp(0.0, 1.0)
}

/// `sum_h Hyper(m, n, z)(h) F(2h - z - t)`, the semi-private p-value at a real `z`
/// with the hypergeometric taken at `z_int`.
fn conditional_pvalue<N: NoiseDistribution + ?Sized>(
    m: u64,
    n: u64,
    z_int: u64,
    z: f64,
    t: f64,
    noise: &N,
) -> Result<f64> {
    let hyper = HyperModel::central(m, n, z_int)?;
    Ok(hyper
        .expect(|h| noise.cdf(2.0 * h as f64 - z - t))
        .clamp(0.0, 1.0))
}

/// Semi-private UMPU test: releases `T = y - x + N` and the exact total `z`.
///
/// `noise` must be the canonical noise of a symmetric nontrivial tradeoff
/// function; the resulting test satisfies f-DP only among datasets with equal `z`.
pub fn semiprivate_test<N, R>(d: &TwoSampleData, noise: &N, rng: &mut R) -> Result<TestReport>
where
    N: NoiseDistribution,
    R: RngCore + ?Sized,
{
    semiprivate_test_with_draw(d, noise, noise.sample(rng)?)
}

/// [`semiprivate_test`] with the noise draw supplied.
pub fn semiprivate_test_with_draw<N: NoiseDistribution + ?Sized>(
    d: &TwoSampleData,
    noise: &N,
    draw: f64,
) -> Result<TestReport> {
    let z = d.total();
    let t = d.y as f64 - d.x as f64 + draw;
    let p = conditional_pvalue(d.m, d.n, z, z as f64, t, noise)?;
    let mut params = d.echo();
    params.insert("z".to_string(), z as f64);
    Ok(TestReport::new(Method::Semiprivate, p, t, params))
}

/// Threshold `c(z)` with `sum_h Hyper(m, n, z)(h) F(2h - z - c) = alpha`.
///
/// The semi-private test rejects with probability `F(y - x - c(x + y))`.
pub fn semiprivate_threshold<N: NoiseDistribution + ?Sized>(
    m: u64,
    n: u64,
    z: u64,
    noise: &N,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", alpha, "0 < alpha < 1"));
    }
    let hyper = HyperModel::central(m, n, z)?;
    let size = |c: f64| hyper.expect(|h| noise.cdf(2.0 * h as f64 - z as f64 - c));
    solve_decreasing(
        size,
        alpha,
        THRESHOLD_LIMIT,
        THRESHOLD_XTOL,
        THRESHOLD_SIZE_TOL,
    )
}

/// Inversion test: both counts released with canonical noise, p-value from the
/// null law of `T = Y^/m - X^/n` at the pooled estimate, inverted from its cf.
pub fn inversion_test<R: RngCore + ?Sized>(
    d: &TwoSampleData,
    privacy: Privacy,
    tol: f64,
    rng: &mut R,
) -> Result<TestReport> {
    let privacy = privacy.validate()?;
    let n1 = privacy.sample(rng)?;
    let n2 = privacy.sample(rng)?;
    inversion_test_with_noise(d, privacy, n1, n2, tol)
}

/// [`inversion_test`] with the draws `N1` (added to `x`) and `N2` (added to `y`) supplied.
pub fn inversion_test_with_noise(
    d: &TwoSampleData,
    privacy: Privacy,
    n1: f64,
    n2: f64,
    tol: f64,
) -> Result<TestReport> {
    let privacy = privacy.validate()?;
    let (m, n) = (d.m as f64, d.n as f64);
    let x_hat = d.x as f64 + n1;
    let y_hat = d.y as f64 + n2;
    let t = y_hat / m - x_hat / n;
    let theta = ((x_hat + y_hat) / (m + n)).clamp(0.0, 1.0);
    let cf = TStatisticCf::new(theta, d.m, d.n, privacy.noise_cf())?;
    let p = 1.0 - gil_pelaez_cdf(&cf, t, tol)?;
    let mut params = d.echo();
    privacy.echo(&mut params);
    params.insert("theta_hat".to_string(), theta);
    params.insert("tol".to_string(), tol);
    Ok(TestReport::new(Method::Inversion, p, t, params).privatized(x_hat, y_hat))
}

/// Plug-in test: the semi-private test with a private total, splitting `eps`
/// evenly between `T~ = y - x + L1` and `Z~ = x + y + L2`.
///
/// `Z~` enters the hypergeometric rounded half away from zero and clamped to
/// `[0, m + n]`, and enters the cdf argument unrounded. The reported
/// privatized counts are `(Z~ -+ T~) / 2`.
pub fn plugin_test<R: RngCore + ?Sized>(
    d: &TwoSampleData,
    eps: f64,
    rng: &mut R,
) -> Result<TestReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", eps, "eps > 0"));
    }
    let noise = TulapDist::from_eps_delta(eps / 2.0, 0.0)?;
    let l1 = noise.sample(rng)?;
    let l2 = noise.sample(rng)?;
    let t = d.y as f64 - d.x as f64 + l1;
    let z = d.total() as f64 + l2;
    let z_int = libm::round(z).clamp(0.0, (d.m + d.n) as f64) as u64;
    let p = conditional_pvalue(d.m, d.n, z_int, z, t, &noise)?;
    let mut params = d.echo();
    params.insert("eps".to_string(), eps);
    params.insert("z_tilde".to_string(), z);
    Ok(TestReport::new(Method::Plugin, p, t, params).privatized((z - t) / 2.0, (z + t) / 2.0))
}

/// `eps`-DP normal approximation with Laplace noise.
///
/// With `corrected_variance` false the variance is
/// `theta(1-theta) + 2/(m eps)^2 + 2/(n eps)^2`; with it true the first term
/// is scaled by `1/m + 1/n` as in the classic test.
pub fn dp_normal_test<R: RngCore + ?Sized>(
    d: &TwoSampleData,
    eps: f64,
    corrected_variance: bool,
    rng: &mut R,
) -> Result<TestReport> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", eps, "eps > 0"));
    }
    let x_t = d.x as f64 + laplace_sample(1.0 / eps, rng)?;
    let y_t = d.y as f64 + laplace_sample(1.0 / eps, rng)?;
    let (m, n) = (d.m as f64, d.n as f64);
    let theta = ((x_t + y_t) / (m + n)).clamp(0.0, 1.0);
    let t = y_t / m - x_t / n;
    let spread = if corrected_variance {
        1.0 / m + 1.0 / n
    } else {
        1.0
    };
    let var = theta * (1.0 - theta) * spread
        + 2.0 / ((m * eps) * (m * eps))
        + 2.0 / ((n * eps) * (n * eps));
    let p = 1.0 - norm_cdf(t / libm::sqrt(var));
    let mut params = d.echo();
    params.insert("eps".to_string(), eps);
    params.insert(
        "corrected_variance".to_string(),
        corrected_variance as u8 as f64,
    );
    Ok(TestReport::new(Method::DpNormal, p, t, params).privatized(x_t, y_t))
}

/// Non-private two-proportion z-test.
///
/// When the pooled estimate is 0 or 1 the standardized statistic is
/// undefined; the report then carries the raw difference `y/m - x/n` and
/// `p = 1` if it is `<= 0`, else `0`.
pub fn classic_normal_test(d: &TwoSampleData) -> TestReport {
    let (m, n) = (d.m as f64, d.n as f64);
    let diff = d.y as f64 / m - d.x as f64 / n;
    let theta = d.total() as f64 / (m + n);
    let params = d.echo();
    if theta <= 0.0 || theta >= 1.0 {
        let p = if diff <= 0.0 { 1.0 } else { 0.0 };
        return TestReport::new(Method::Classic, p, diff, params);
    }
    let z = diff / libm::sqrt((1.0 / m + 1.0 / n) * theta * (1.0 - theta));
    TestReport::new(Method::Classic, 1.0 - norm_cdf(z), z, params)
}

/// Non-private UMPU test randomized by `T = y + U`, `U ~ Unif(-1/2, 1/2)`.
pub fn nonprivate_umpu<R: RngCore + ?Sized>(d: &TwoSampleData, rng: &mut R) -> Result<TestReport> {
    nonprivate_umpu_with_draw(d, uniform_open01(rng) - 0.5)
}

/// [`nonprivate_umpu`] with the uniform draw supplied.
pub fn nonprivate_umpu_with_draw(d: &TwoSampleData, u: f64) -> Result<TestReport> {
    let z = d.total();
    let t = d.y as f64 + u;
    let hyper = HyperModel::central(d.m, d.n, z)?;
    let p = hyper.expect(|h| uniform_cdf(h as f64 - t));
    let mut params = d.echo();
    params.insert("z".to_string(), z as f64);
    Ok(TestReport::new(Method::NonprivateUmpu, p, t, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charfn::DEFAULT_TOL;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(x: u64, n: u64, y: u64, m: u64) -> TwoSampleData {
        TwoSampleData::new(x, n, y, m).unwrap()
    }

    #[test]
    fn two_sided_examples() {
        assert_eq!(two_sided(0.5), 1.0);
        assert!((two_sided(0.025) - 0.05).abs() < 1e-15);
        assert!((two_sided(0.975) - 0.05).abs() < 1e-15);
        assert_eq!(two_sided(0.0), 0.0);
    }

    #[test]
    fn semiprivate_zero_total_is_noise_only() {
        let noise = TulapDist::from_eps_delta(1.0, 0.0).unwrap();
        for draw in [-2.3, 0.0, 0.7] {
            let r = semiprivate_test_with_draw(&data(0, 5, 0, 7), &noise, draw).unwrap();
            assert!((r.p_value - noise.cdf(-draw)).abs() < 1e-15);
        }
    }

    #[test]
    fn semiprivate_threshold_single_atom() {
        let noise = TulapDist::from_eps_delta(1.0, 0.0).unwrap();
        let c = semiprivate_threshold(5, 5, 0, &noise, 0.1).unwrap();
        assert!((c - noise.quantile(0.9).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn semiprivate_conditional_size() {
        let noise = TulapDist::from_eps_delta(1.0, 0.0).unwrap();
        let (m, n, z) = (5, 5, 4);
        let c = semiprivate_threshold(m, n, z, &noise, 0.1).unwrap();
        let hyper = HyperModel::central(m, n, z).unwrap();
        // phi*(x, y) = F(y - x - c) summed over x = z - h, y = h.
        let size: f64 = hyper
            .iter()
            .map(|(h, p)| p * noise.cdf(h as f64 - (z - h) as f64 - c))
            .sum();
        assert!((size - 0.1).abs() <= 1e-9);
    }

    #[test]
    fn semiprivate_threshold_symmetry() {
        let noise = TulapDist::from_eps_delta(1.0, 0.0).unwrap();
        let c2 = semiprivate_threshold(4, 4, 2, &noise, 0.05).unwrap();
        let c6 = semiprivate_threshold(4, 4, 6, &noise, 0.05).unwrap();
        assert!((c2 - c6).abs() < 1e-9);
    }

    #[test]
    fn semiprivate_pvalue_rejects_at_threshold() {
        // p <= alpha exactly when T >= c(z).
        let noise = TulapDist::from_eps_delta(0.5, 0.0).unwrap();
        let d = data(3, 6, 5, 8);
        let c = semiprivate_threshold(8, 6, 8, &noise, 0.05).unwrap();
        let t_draw = |t: f64| t - (d.y as f64 - d.x as f64);
        let below = semiprivate_test_with_draw(&d, &noise, t_draw(c - 1e-6)).unwrap();
        let above = semiprivate_test_with_draw(&d, &noise, t_draw(c + 1e-6)).unwrap();
        assert!(below.p_value > 0.05 && above.p_value < 0.05);
    }

    #[test]
    fn nonprivate_umpu_matches_randomized_form() {
        // At m = n = 3 the rejection indicator I(p <= alpha) given (x, y), averaged
        // over U, must be the UMPU phi(y) = 1 above the critical value, gamma on it.
        let (m, n, alpha) = (3, 3, 0.2);
        for z in 0..=6u64 {
            let hyper = HyperModel::central(m, n, z).unwrap();
            let (lo, hi) = hyper.support();
            // Critical y* and gamma from the upper tail.
            let mut tail = 0.0;
            let mut y_star = hi;
            while y_star > lo && tail + hyper.pmf(y_star as i64) <= alpha {
                tail += hyper.pmf(y_star as i64);
                y_star -= 1;
            }
            let gamma = ((alpha - tail) / hyper.pmf(y_star as i64)).min(1.0);
            for y in lo..=hi {
                let d = data(z - y, n, y, m);
                let steps = 20_000;
                let rejected = (0..steps)
                    .filter(|i| {
                        let u = (*i as f64 + 0.5) / steps as f64 - 0.5;
                        nonprivate_umpu_with_draw(&d, u).unwrap().p_value <= alpha
                    })
                    .count() as f64
                    / steps as f64;
                let expected = if y > y_star {
                    1.0
                } else if y == y_star {
                    gamma
                } else {
                    0.0
                };
                assert!(
                    (rejected - expected).abs() <= 1e-3,
                    "z {z} y {y}: {rejected} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn classic_examples() {
        let r = classic_normal_test(&data(15, 30, 15, 30));
        assert_eq!(r.p_value, 0.5);
        let r = classic_normal_test(&data(10, 30, 20, 30));
        let pooled: f64 = 0.5;
        let z = (20.0 / 30.0 - 10.0 / 30.0) / ((2.0 / 30.0) * pooled * (1.0 - pooled)).sqrt();
        assert!((r.statistic - z).abs() < 1e-12);
        assert!((r.p_value - 0.5 * libm::erfc(z / core::f64::consts::SQRT_2)).abs() < 1e-12);
        assert_eq!(classic_normal_test(&data(0, 30, 0, 30)).p_value, 1.0);
        assert_eq!(classic_normal_test(&data(30, 30, 40, 40)).p_value, 1.0);
    }

    #[test]
    fn inversion_report_fields() {
        let d = data(15, 30, 20, 30);
        let r = inversion_test_with_noise(&d, Privacy::EpsDp(0.1), 0.0, 0.0, DEFAULT_TOL).unwrap();
        assert!((r.statistic - 1.0 / 6.0).abs() < 1e-15);
        assert!((r.params["theta_hat"] - 35.0 / 60.0).abs() < 1e-15);
        assert_eq!(r.privatized_x, Some(15.0));
        assert!(r.p_value > 0.0 && r.p_value < 0.5);
        assert!(inversion_test_with_noise(&d, Privacy::Gdp(-1.0), 0.0, 0.0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn inversion_clamps_pooled_estimate() {
        let d = data(0, 10, 0, 10);
        let r =
            inversion_test_with_noise(&d, Privacy::EpsDp(1.0), -3.0, -2.0, DEFAULT_TOL).unwrap();
        assert_eq!(r.params["theta_hat"], 0.0);
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn seeded_methods_are_deterministic() {
        let d = data(12, 30, 18, 30);
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = plugin_test(&d, 0.1, &mut rng).unwrap();
            let b = dp_normal_test(&d, 0.1, false, &mut rng).unwrap();
            let c = inversion_test(&d, Privacy::EpsDp(0.1), 1e-6, &mut rng).unwrap();
            (a, b, c)
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4).0.p_value, run(5).0.p_value);
    }

    #[test]
    fn plugin_rounds_total() {
        let d = data(0, 4, 0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let r = plugin_test(&d, 0.5, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&r.p_value));
        }
    }

    #[test]
    fn dp_normal_variance_flag() {
        let d = data(12, 30, 18, 30);
        let mut a = ChaCha8Rng::seed_from_u64(6);
        let mut b = ChaCha8Rng::seed_from_u64(6);
        let printed = dp_normal_test(&d, 0.1, false, &mut a).unwrap();
        let corrected = dp_normal_test(&d, 0.1, true, &mut b).unwrap();
        assert_eq!(printed.statistic, corrected.statistic);
        // A smaller variance pushes the p-value away from 1/2.
        assert!((corrected.p_value - 0.5).abs() >= (printed.p_value - 0.5).abs());
    }

    #[test]
    fn data_validation() {
        assert!(TwoSampleData::new(4, 3, 0, 3).is_err());
        assert!(TwoSampleData::new(0, 0, 0, 3).is_err());
        assert!(TwoSampleData::new(0, 3, 4, 3).is_err());
    }
}
