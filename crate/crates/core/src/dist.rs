//! Count distributions and the few continuous helpers the tests need.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::rng::uniform_open01;
use crate::special::ln_choose;

/// `Binom(n, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinomialModel {
    pub n: u64,
    pub theta: f64,
}

impl BinomialModel {
    pub fn new(n: u64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::param("theta", theta, "0 <= theta <= 1"));
        }
        Ok(BinomialModel { n, theta })
    }

    /// `C(n, x) theta^x (1 - theta)^(n - x)`, zero outside `{0..n}`.
    pub fn pmf(&self, x: i64) -> f64 {
        if x < 0 || x as u64 > self.n {
            return 0.0;
        }
        let (n, x) = (self.n, x as u64);
        if self.theta == 0.0 {
            return if x == 0 { 1.0 } else { 0.0 };
        }
        if self.theta == 1.0 {
            return if x == n { 1.0 } else { 0.0 };
        }
        let log = ln_choose(n, x)
            + x as f64 * libm::log(self.theta)
            + (n - x) as f64 * libm::log1p(-self.theta);
        libm::exp(log)
    }

    /// The pmf over `{0..n}`.
    pub fn pmf_vec(&self) -> Vec<f64> {
        (0..=self.n as i64).map(|x| self.pmf(x)).collect()
    }

    /// `((1 - theta) + theta e^{it})^n`.
    pub fn cf(&self, t: f64) -> Complex64 {
        bernoulli_cf(self.theta, t).powf(self.n as f64)
    }

    /// Inverse-transform draw.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = uniform_open01(rng);
        let mut acc = 0.0;
        for x in 0..self.n {
            acc += self.pmf(x as i64);
            if u <= acc {
                return x;
            }
        }
        self.n
    }
}

/// `(1 - theta) + theta e^{it}` in polar-friendly form.
fn bernoulli_cf(theta: f64, t: f64) -> Complex64 {
    Complex64::new(1.0 - theta + theta * libm::cos(t), theta * libm::sin(t))
}

/// Fisher's noncentral hypergeometric: `P(H = x)` proportional to
/// `C(m, x) C(n, z - x) omega^x` on `max(0, z - n) ..= min(m, z)`.
/// `omega = 1` is the central hypergeometric.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperModel {
    m: u64,
    n: u64,
    z: u64,
    omega: f64,
    lower: u64,
    probs: Vec<f64>,
}

impl HyperModel {
    pub fn new(m: u64, n: u64, z: u64, omega: f64) -> Result<Self> {
        if z > m + n {
            return Err(Error::param("z", z as f64, "0 <= z <= m + n"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::param("omega", omega, "omega > 0"));
        }
        let lower = z.saturating_sub(n);
        let upper = m.min(z);
        let log_omega = libm::log(omega);
        let logs: Vec<f64> = (lower..=upper)
            .map(|x| ln_choose(m, x) + ln_choose(n, z - x) + x as f64 * log_omega)
            .collect();
        let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logs.iter().map(|l| libm::exp(l - peak)).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(HyperModel {
            m,
            n,
            z,
            omega,
            lower,
            probs,
        })
    }

    pub fn central(m: u64, n: u64, z: u64) -> Result<Self> {
        Self::new(m, n, z, 1.0)
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> u64 {
        self.z
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `(L, U)`.
    pub fn support(&self) -> (u64, u64) {
        (self.lower, self.lower + self.probs.len() as u64 - 1)
    }

    pub fn pmf(&self, x: i64) -> f64 {
        if x < self.lower as i64 {
            return 0.0;
        }
        self.probs
            .get((x - self.lower as i64) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    /// `(h, P(H = h))` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.lower + i as u64, p))
    }

    /// `E g(H)` by exact summation over the support.
    pub fn expect<G: FnMut(u64) -> f64>(&self, mut g: G) -> f64 {
        self.iter().map(|(h, p)| p * g(h)).sum()
    }
}

/// A `Laplace(0, scale)` draw by inverse transform.
pub fn laplace_sample<R: RngCore + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::param("scale", scale, "scale > 0"));
    }
    let u = uniform_open01(rng) - 0.5;
    let magnitude = -scale * libm::log1p(-2.0 * u.abs());
    Ok(if u < 0.0 { -magnitude } else { magnitude })
}

/// cdf of `Unif(-1/2, 1/2)`.
pub fn uniform_cdf(x: f64) -> f64 {
    (x + 0.5).clamp(0.0, 1.0)
}
