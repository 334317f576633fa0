//! Canonical noise distributions.
//!
//! [`CndDist`] builds the canonical noise distribution of any symmetric
//! nontrivial tradeoff function `f`: linear on `[-1/2, 1/2]` with slope
//! `1 - 2c` (`c` the fixed point of `f`) and extended to the whole line by
//! `F(x) = 1 - f(F(x - 1))`. [`TulapDist`] and [`GaussianCnd`] are the
//! closed-form members for `(eps, delta)`-DP and `mu`-GDP.

use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::rng::uniform_open01;
use crate::special::{norm_cdf, norm_quantile};
use crate::tradeoff::TradeoffFn;

/// Default cap on quantile recursion steps.
pub const QUANTILE_RECURSION_CAP: usize = 100_000;
/// Intermediate cdf values this close to 0 or 1 are snapped to 0 or 1.
const SATURATION: f64 = 1e-15;

/// A continuous noise distribution given by its cdf and quantile function.
pub trait NoiseDistribution {
    fn cdf(&self, x: f64) -> f64;

    /// Quantile for `u` in `(0, 1)`.
    fn quantile(&self, u: f64) -> Result<f64>;

    /// Closure of the support, `(-inf, inf)` when unbounded.
    fn support(&self) -> (f64, f64);

    /// Quantile extended to `[0, 1]` by the support endpoints.
    fn quantile_ext(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            Ok(self.support().0)
        } else if u >= 1.0 {
            Ok(self.support().1)
        } else {
            self.quantile(u)
        }
    }

    /// One draw by inverse transform.
    fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Result<f64>
    where
        Self: Sized,
    {
        self.quantile(uniform_open01(rng))
    }

    fn sample_n<R: RngCore + ?Sized>(&self, rng: &mut R, k: usize) -> Result<Vec<f64>>
    where
        Self: Sized,
    {
        (0..k).map(|_| self.sample(rng)).collect()
    }
}

fn check_unit_open(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::param("u", u, "0 < u < 1"))
    }
}

/// The canonical noise distribution `F_f` constructed from a tradeoff function.
#[derive(Debug, Clone)]
pub struct CndDist {
    f: TradeoffFn,
    c: f64,
    recursion_cap: usize,
    upper: f64,
}

impl CndDist {
    /// Validates `f` and computes its fixed point.
    pub fn new(f: TradeoffFn) -> Result<Self> {
        Self::with_recursion_cap(f, QUANTILE_RECURSION_CAP)
    }

    pub fn with_recursion_cap(f: TradeoffFn, recursion_cap: usize) -> Result<Self> {
        f.ensure_valid()?;
        let c = f.fixed_point()?.value();
        let mut dist = CndDist {
            f,
            c,
            recursion_cap,
            upper: f64::INFINITY,
        };
        // The cdf reaches 1 exactly one unit after the level f(0) when f(0) < 1.
        let f0 = dist.f.eval(0.0);
        if f0 < 1.0 - SATURATION && f0 > 0.0 {
            dist.upper = dist.quantile(f0)? + 1.0;
        }
        Ok(dist)
    }

    pub fn tradeoff(&self) -> &TradeoffFn {
        &self.f
    }

    pub fn fixed_point(&self) -> f64 {
        self.c
    }

    fn linear(&self, x: f64) -> f64 {
        self.c * (0.5 - x) + (1.0 - self.c) * (x + 0.5)
    }
}

impl NoiseDistribution for CndDist {
    fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x > 0.5 {
            let steps = libm::ceil(x - 0.5);
            if !steps.is_finite() || steps > 9.0e15 {
                return 1.0;
            }
            let mut value = self.linear(x - steps);
            for _ in 0..steps as u64 {
                if value >= 1.0 - SATURATION {
                    return 1.0;
                }
                value = 1.0 - self.f.eval(value);
            }
            value.min(1.0)
        } else if x < -0.5 {
            let steps = libm::ceil(-x - 0.5);
            if !steps.is_finite() || steps > 9.0e15 {
                return 0.0;
            }
            let mut value = self.linear(x + steps);
            for _ in 0..steps as u64 {
                if value <= SATURATION {
                    return 0.0;
                }
                value = self.f.eval(1.0 - value);
            }
            value.max(0.0)
        } else {
            self.linear(x)
        }
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        check_unit_open(u)?;
        let c = self.c;
        let mut level = u;
        let mut shift = 0.0;
        for _ in 0..self.recursion_cap {
            if level > 1.0 - c {
                level = self.f.eval(1.0 - level);
                shift += 1.0;
            } else if level < c {
                level = 1.0 - self.f.eval(level);
                shift -= 1.0;
            } else {
                return Ok(shift + (level - 0.5) / (1.0 - 2.0 * c));
            }
        }
        Err(Error::RecursionCapExceeded {
            u,
            cap: self.recursion_cap,
        })
    }

    fn support(&self) -> (f64, f64) {
        (-self.upper, self.upper)
    }
}

/// `Tulap(0, b, q)`: discrete Laplace plus uniform noise, truncated in probability by `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TulapDist {
    b: f64,
    q: f64,
}

/// Nearest integer, ties away from zero.
fn nearest_int(x: f64) -> f64 {
    libm::round(x)
}

impl TulapDist {
    pub fn new(b: f64, q: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::param("b", b, "0 < b < 1"));
        }
        if !(0.0..1.0).contains(&q) {
            return Err(Error::param("q", q, "0 <= q < 1"));
        }
        Ok(TulapDist { b, q })
    }

    /// The canonical noise for `(eps, delta)`-DP: `b = e^-eps`, `q = 2 delta b / (1 - b + 2 delta b)`.
    pub fn from_eps_delta(eps: f64, delta: f64) -> Result<Self> {
        TradeoffFn::eps_delta(eps, delta)?;
        let b = libm::exp(-eps);
        let q = 2.0 * delta * b / (1.0 - b + 2.0 * delta * b);
        Self::new(b, q)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// cdf of the untruncated `Tulap(0, b, 0)`.
    fn base_cdf(&self, x: f64) -> f64 {
        let b = self.b;
        if x == f64::INFINITY {
            return 1.0;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        let k = nearest_int(x);
        if x <= 0.0 {
            libm::exp(-k * libm::log(b)) / (1.0 + b) * (b + (x - k + 0.5) * (1.0 - b))
        } else {
            1.0 - libm::exp(k * libm::log(b)) / (1.0 + b) * (b + (k - x + 0.5) * (1.0 - b))
        }
    }

    /// Inverse of [`Self::base_cdf`] on `(0, 1)`.
    fn base_quantile(&self, v: f64) -> f64 {
        if v > 0.5 {
            return -self.base_quantile(1.0 - v);
        }
        let b = self.b;
        let scaled = v * (1.0 + b);
        // scaled lies in [b^(j+1), b^j] on the unit cell centred at -j.
        let j = libm::floor(libm::log(scaled) / libm::log(b)).max(0.0);
        let s = ((scaled * libm::exp(-j * libm::log(b)) - b) / (1.0 - b)).clamp(0.0, 1.0);
        -j - 0.5 + s
    }
}

impl NoiseDistribution for TulapDist {
    fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let base = self.base_cdf(x);
        if self.q == 0.0 {
            return base;
        }
        let half = 0.5 * self.q;
        if base < half {
            0.0
        } else if base > 1.0 - half {
            1.0
        } else {
            (base - half) / (1.0 - self.q)
        }
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        check_unit_open(u)?;
        Ok(self.base_quantile(0.5 * self.q + u * (1.0 - self.q)))
    }

    fn support(&self) -> (f64, f64) {
        if self.q == 0.0 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            let lo = self.base_quantile(0.5 * self.q);
            (lo, -lo)
        }
    }
}

/// `N(0, 1/mu^2)`, canonical for `mu`-GDP: cdf `Phi(mu x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianCnd {
    mu: f64,
}

impl GaussianCnd {
    pub fn new(mu: f64) -> Result<Self> {
        TradeoffFn::gaussian(mu)?;
        Ok(GaussianCnd { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl NoiseDistribution for GaussianCnd {
    fn cdf(&self, x: f64) -> f64 {
        norm_cdf(self.mu * x)
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        check_unit_open(u)?;
        Ok(norm_quantile(u) / self.mu)
    }

    fn support(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// `x -> F(scale * x)`; with `scale = 2` this is canonical for the two-fold tradeoff.
#[derive(Debug, Clone)]
pub struct Scaled<N> {
    pub inner: N,
    pub scale: f64,
}

impl<N: NoiseDistribution> NoiseDistribution for Scaled<N> {
    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(self.scale * x)
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        Ok(self.inner.quantile(u)? / self.scale)
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.support();
        (lo / self.scale, hi / self.scale)
    }
}

/// Any of the canonical noise distributions in this module.
#[derive(Debug, Clone)]
pub enum Noise {
    Constructed(CndDist),
    Tulap(TulapDist),
    Gaussian(GaussianCnd),
}

impl NoiseDistribution for Noise {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Noise::Constructed(d) => d.cdf(x),
            Noise::Tulap(d) => d.cdf(x),
            Noise::Gaussian(d) => d.cdf(x),
        }
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        match self {
            Noise::Constructed(d) => d.quantile(u),
            Noise::Tulap(d) => d.quantile(u),
            Noise::Gaussian(d) => d.quantile(u),
        }
    }

    fn support(&self) -> (f64, f64) {
        match self {
            Noise::Constructed(d) => d.support(),
            Noise::Tulap(d) => d.support(),
            Noise::Gaussian(d) => d.support(),
        }
    }
}

impl From<CndDist> for Noise {
    fn from(d: CndDist) -> Self {
        Noise::Constructed(d)
    }
}

impl From<TulapDist> for Noise {
    fn from(d: TulapDist) -> Self {
        Noise::Tulap(d)
    }
}

impl From<GaussianCnd> for Noise {
    fn from(d: GaussianCnd) -> Self {
        Noise::Gaussian(d)
    }
}

/// Releases `s + sensitivity * N` with `N` drawn from `noise`.
pub fn add_noise<N, R>(s: f64, sensitivity: f64, noise: &N, rng: &mut R) -> Result<f64>
where
    N: NoiseDistribution,
    R: RngCore + ?Sized,
{
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::param("sensitivity", sensitivity, "sensitivity > 0"));
    }
    Ok(s + sensitivity * noise.sample(rng)?)
}

/// Deviation of a noise distribution from the canonical-noise identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    /// `max |f(a) - F(F^{-1}(1 - a) - 1)|` over the grid.
    pub tradeoff: f64,
    /// `max |F(x) + F(-x) - 1|` at the points visited.
    pub symmetry: f64,
}

impl IdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.tradeoff.max(self.symmetry)
    }
}

/// 999 interior points `i / 1000`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..1000).map(|i| i as f64 / 1000.0).collect()
}

/// Checks that the unit-shift tradeoff of `noise` equals `f` and that it is symmetric.
pub fn identity_check<N: NoiseDistribution>(
    noise: &N,
    f: &TradeoffFn,
    alpha_grid: &[f64],
) -> Result<IdentityReport> {
    let mut tradeoff: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for &alpha in alpha_grid {
        let x = noise.quantile(1.0 - alpha)?;
        let shifted = noise.cdf(x - 1.0);
        tradeoff = tradeoff.max((f.eval(alpha) - shifted).abs());
        for point in [x, x - 1.0] {
            symmetry = symmetry.max((noise.cdf(point) + noise.cdf(-point) - 1.0).abs());
        }
    }
    Ok(IdentityReport { tradeoff, symmetry })
}
