//! f-DP hypothesis tests.
//!
//! A test `phi` is f-DP when `phi(x) <= 1 - f(phi(x'))` for every adjacent
//! pair, equivalently `F^{-1}(phi(x)) <= F^{-1}(phi(x')) + 1` with `F` the
//! canonical noise of `f`. Any such test yields a free private p-value by
//! releasing `F^{-1}(phi(x)) + N`, and for exchangeable binary data the test
//! `phi(x) = F(x - m)` on the count is uniformly most powerful.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::cnd::{CndDist, Noise, NoiseDistribution};
use crate::dist::BinomialModel;
use crate::error::{Error, Result};
use crate::root::solve_decreasing;
use crate::tradeoff::TradeoffFn;

/// Pass threshold for [`check_fdp`].
pub const FDP_SLACK_TOL: f64 = 1e-12;
/// Pass threshold for [`check_fdp_cnd`]; quantiles carry more rounding than `f`.
pub const CND_SLACK_TOL: f64 = 1e-9;
/// Bracket limit for the size equations.
pub const SHIFT_LIMIT: f64 = 1e6;
/// Bisection tolerance on the shift.
pub const SHIFT_XTOL: f64 = 1e-10;
/// Tolerance on the attained size.
pub const SIZE_TOL: f64 = 1e-9;
/// Default number of points in a Bernoulli null grid.
pub const DEFAULT_THETA_GRID: usize = 1001;

/// A test function on a finite sample space with its adjacency graph.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFn {
    values: Vec<f64>,
    edges: Vec<(usize, usize)>,
}

impl TestFn {
    pub fn new(values: Vec<f64>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param("phi", v, "0 <= phi <= 1"));
        }
        if let Some(&(i, j)) = edges
            .iter()
            .find(|(i, j)| *i >= values.len() || *j >= values.len())
        {
            return Err(Error::param(
                "edge",
                i.max(j) as f64,
                "index of a sample point",
            ));
        }
        Ok(TestFn { values, edges })
    }

    /// Test on `{0, .., k-1}` with `i ~ i+1`.
    pub fn path(values: Vec<f64>) -> Result<Self> {
        let edges = (1..values.len()).map(|i| (i - 1, i)).collect();
        Self::new(values, edges)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Largest constraint slack over all ordered adjacent pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationReport {
    /// `-inf` when there are no edges.
    pub max_slack: f64,
    /// Ordered pair `(x, x')` attaining the maximum.
    pub worst_pair: Option<(usize, usize)>,
    pub tolerance: f64,
}

impl ViolationReport {
    pub fn passed(&self) -> bool {
        self.max_slack <= self.tolerance
    }

    fn scan<S: FnMut(usize, usize) -> Result<f64>>(
        test: &TestFn,
        tolerance: f64,
        mut slack: S,
    ) -> Result<Self> {
        let mut report = ViolationReport {
            max_slack: f64::NEG_INFINITY,
            worst_pair: None,
            tolerance,
        };
        for &(i, j) in &test.edges {
            for (a, b) in [(i, j), (j, i)] {
                let s = slack(a, b)?;
                if s > report.max_slack {
                    report.max_slack = s;
                    report.worst_pair = Some((a, b));
                }
            }
        }
        Ok(report)
    }
}

/// Checks `phi(x) <= 1 - f(phi(x'))` on both orders of every edge.
pub fn check_fdp(phi: &TestFn, f: &TradeoffFn) -> ViolationReport {
    let v = &phi.values;
    ViolationReport::scan(phi, FDP_SLACK_TOL, |a, b| Ok(v[a] - (1.0 - f.eval(v[b])))).unwrap_or(
        ViolationReport {
            max_slack: f64::NAN,
            worst_pair: None,
            tolerance: FDP_SLACK_TOL,
        },
    )
}

/// Quantile-space form: slack `F^{-1}(phi(x)) - F^{-1}(phi(x')) - 1`.
///
/// `phi` values 0 and 1 map to the support endpoints. Equal quantiles give
/// slack `-1` even when both are infinite.
pub fn check_fdp_cnd<N: NoiseDistribution + ?Sized>(
    phi: &TestFn,
    noise: &N,
) -> Result<ViolationReport> {
    let q: Vec<f64> = phi
        .values
        .iter()
        .map(|&v| noise.quantile_ext(v))
        .collect::<Result<_>>()?;
    ViolationReport::scan(phi, CND_SLACK_TOL, |a, b| {
        Ok(if q[a] == q[b] {
            -1.0
        } else {
            q[a] - q[b] - 1.0
        })
    })
}

/// `F(q - t)` with ties between equal infinities counted as 1, so that the
/// p-value `P(T' >= T)` stays conservative.
fn shifted_cdf<N: NoiseDistribution + ?Sized>(noise: &N, q: f64, t: f64) -> f64 {
    if q == t {
        return if q.is_infinite() { 1.0 } else { noise.cdf(0.0) };
    }
    noise.cdf(q - t)
}

fn check_pmf(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::param("pmf length", 0.0, "at least one atom"));
    }
    if let Some(&p) = pmf.iter().find(|p| p.is_nan() || **p < 0.0) {
        return Err(Error::param("pmf", p, "nonnegative masses"));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::param("pmf total", total, "masses summing to 1"));
    }
    Ok(())
}

/// The UMP f-DP test `phi(x) = F(x - m)` for a count with null pmf on `{0..n}`.
#[derive(Debug, Clone)]
pub struct BinaryUmpTest {
    pub shift_m: f64,
    pub level_alpha: f64,
    pub null_pmf: Vec<f64>,
    pub noise: Noise,
}

/// Builds the UMP test at level `alpha` with the canonical noise of `f`.
///
/// Optimality needs the alternatives to have monotone likelihood ratio in
/// the count; that is left to the caller.
pub fn ump_binary(null_pmf: &[f64], f: &TradeoffFn, alpha: f64) -> Result<BinaryUmpTest> {
    ump_binary_with_noise(null_pmf, CndDist::new(f.clone())?.into(), alpha)
}

/// As [`ump_binary`] with an explicit canonical noise (e.g. a closed-form Tulap).
pub fn ump_binary_with_noise(null_pmf: &[f64], noise: Noise, alpha: f64) -> Result<BinaryUmpTest> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", alpha, "0 < alpha < 1"));
    }
    check_pmf(null_pmf)?;
    let size = |m: f64| shifted_size(null_pmf, &noise, m);
    let shift_m = solve_decreasing(size, alpha, SHIFT_LIMIT, SHIFT_XTOL, SIZE_TOL)?;
    Ok(BinaryUmpTest {
        shift_m,
        level_alpha: alpha,
        null_pmf: null_pmf.to_vec(),
        noise,
    })
}

fn shifted_size<N: NoiseDistribution + ?Sized>(pmf: &[f64], noise: &N, m: f64) -> f64 {
    pmf.iter()
        .enumerate()
        .map(|(x, p)| p * noise.cdf(x as f64 - m))
        .sum()
}

impl BinaryUmpTest {
    /// Rejection probability `F(x - m)`.
    pub fn phi(&self, x: u64) -> f64 {
        self.noise.cdf(x as f64 - self.shift_m)
    }

    /// `E_P phi` under the stored null.
    pub fn size(&self) -> f64 {
        shifted_size(&self.null_pmf, &self.noise, self.shift_m)
    }

    /// `E_Q phi` for another pmf on the counts.
    pub fn power(&self, pmf: &[f64]) -> f64 {
        shifted_size(pmf, &self.noise, self.shift_m)
    }

    /// The test as a [`TestFn`] on the path `{0..n}`.
    pub fn test_fn(&self) -> TestFn {
        let values = (0..self.null_pmf.len() as u64)
            .map(|x| self.phi(x))
            .collect();
        TestFn::path(values).expect("cdf values lie in [0, 1]")
    }

    /// Private p-value for a released statistic `T = x + N`.
    pub fn pvalue(&self, t: f64) -> f64 {
        binary_pvalue(t, &self.null_pmf, &self.noise)
    }
}

/// `T = x + N`, the private summary the UMP test thresholds at `m`.
pub fn binary_statistic<N, R>(x: u64, noise: &N, rng: &mut R) -> Result<f64>
where
    N: NoiseDistribution,
    R: RngCore + ?Sized,
{
    Ok(x as f64 + noise.sample(rng)?)
}

/// `p = sum_x P(x) F(x - T)`.
pub fn binary_pvalue<N: NoiseDistribution + ?Sized>(t: f64, null_pmf: &[f64], noise: &N) -> f64 {
    null_pmf
        .iter()
        .enumerate()
        .map(|(x, p)| p * shifted_cdf(noise, x as f64, t))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `T = F^{-1}(phi(x)) + N` for the sample point `point`.
///
/// `phi(x)` of 0 or 1 maps to the support endpoint, which is `-inf` or `+inf`
/// for unbounded noise; [`free_pvalue`] handles those values.
pub fn free_pvalue_statistic<N, R>(
    phi: &TestFn,
    noise: &N,
    point: usize,
    rng: &mut R,
) -> Result<f64>
where
    N: NoiseDistribution,
    R: RngCore + ?Sized,
{
    let v = *phi.values.get(point).ok_or(Error::param(
        "point",
        point as f64,
        "index of a sample point",
    ))?;
    let draw = noise.sample(rng)?;
    Ok(noise.quantile_ext(v)? + draw)
}

/// `p = max over the null family of E F(F^{-1}(phi(X)) - T)`.
///
/// Each null is a pmf over the sample points of `phi`. For a composite null
/// given on a grid this is the maximum over the grid, a lower bound on the
/// supremum that tightens as the grid is refined.
pub fn free_pvalue<N: NoiseDistribution + ?Sized>(
    t: f64,
    phi: &TestFn,
    nulls: &[Vec<f64>],
    noise: &N,
) -> Result<f64> {
    if nulls.is_empty() {
        return Err(Error::param("null family size", 0.0, "at least one null"));
    }
    let q: Vec<f64> = phi
        .values
        .iter()
        .map(|&v| noise.quantile_ext(v))
        .collect::<Result<_>>()?;
    let mut best: f64 = 0.0;
    for pmf in nulls {
        if pmf.len() != q.len() {
            return Err(Error::param(
                "null pmf length",
                pmf.len() as f64,
                "one mass per sample point",
            ));
        }
        let p: f64 = pmf
            .iter()
            .zip(&q)
            .map(|(w, &qx)| w * shifted_cdf(noise, qx, t))
            .sum();
        best = best.max(p);
    }
    Ok(best.clamp(0.0, 1.0))
}

/// `k` evenly spaced points on `[lo, hi]`.
pub fn theta_grid(lo: f64, hi: f64, k: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
        return Err(Error::param("theta range", hi, "0 <= lo <= hi <= 1"));
    }
    if k < 2 {
        return Ok(alloc::vec![lo]);
    }
    Ok((0..k)
        .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
        .collect())
}

/// Pmfs of `Binom(n, theta)` on `{0..n}` for each grid value.
pub fn bernoulli_nulls(n: u64, thetas: &[f64]) -> Result<Vec<Vec<f64>>> {
    thetas
        .iter()
        .map(|&t| Ok(BinomialModel::new(n, t)?.pmf_vec()))
        .collect()
}
