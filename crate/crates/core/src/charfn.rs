//! Characteristic functions and Gil-Pelaez cdf inversion.
//!
//! `F(x) = 1/2 - (1/pi) * int_0^inf Im(e^{-itx} psi(t)) / t dt`. The integral is
//! truncated at a point chosen from a decay envelope of `psi`, and the finite
//! range is covered by panels of adaptive 7/15-point Gauss-Kronrod quadrature.

#![allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default absolute tolerance on the returned cdf value.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Largest admissible truncation point.
pub const MAX_UPPER_LIMIT: f64 = 1e7;
/// Where the removable singularity at `t = 0` is evaluated instead.
const T_FLOOR: f64 = 1e-8;
const MAX_DEPTH: usize = 30;

/// A bound on `|psi(t)|` for `t > 0`, used to truncate the inversion integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayHint {
    /// `|psi(t)| <= coef / t^power`.
    Power { coef: f64, power: f64 },
    /// `|psi(t)| <= exp(-t^2 / (2 scale^2))`.
    Gaussian { scale: f64 },
}

impl DecayHint {
    /// Smallest `T` (searched geometrically) with `(1/pi) int_T^inf bound(t) / t dt <= tail_tol`.
    fn upper_limit(&self, tail_tol: f64) -> f64 {
        match *self {
            DecayHint::Power { coef, power } => {
                libm::pow(coef / (power * PI * tail_tol), 1.0 / power)
            }
            DecayHint::Gaussian { scale } => {
                // int_T^inf e^{-t^2/2s^2} / t dt <= (s/T)^2 e^{-T^2/2s^2}
                let tail = |t: f64| {
                    (scale / t) * (scale / t) * libm::exp(-0.5 * (t / scale) * (t / scale)) / PI
                };
                let mut t = scale;
                while tail(t) > tail_tol {
                    t *= 1.05;
                }
                t
            }
        }
    }
}

/// A characteristic function `psi(t) = E e^{itX}`.
pub trait CharFn {
    fn eval(&self, t: f64) -> Complex64;

    fn decay_hint(&self) -> Option<DecayHint> {
        None
    }

    /// `Im(e^{-itx} psi(t))`.
    fn shifted_imag(&self, t: f64, x: f64) -> f64 {
        (Complex64::from_polar(1.0, -t * x) * self.eval(t)).im
    }
}

/// A closure-backed characteristic function.
pub struct FnCharFn<F> {
    pub eval: F,
    pub decay: Option<DecayHint>,
}

impl<F: Fn(f64) -> Complex64> CharFn for FnCharFn<F> {
    fn eval(&self, t: f64) -> Complex64 {
        (self.eval)(t)
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        self.decay
    }
}

/// `sin(t/2) / (t/2)`, the cf of `Unif(-1/2, 1/2)`.
fn uniform_cf(t: f64) -> f64 {
    if t.abs() < 1e-6 {
        1.0 - t * t / 24.0
    } else {
        2.0 * libm::sin(0.5 * t) / t
    }
}

/// cf of the discrete Laplace part of `Tulap(0, b, 0)`.
fn discrete_laplace_cf(b: f64, t: f64) -> f64 {
    let s = libm::sin(0.5 * t);
    (1.0 - b) * (1.0 - b) / ((1.0 - b) * (1.0 - b) + 4.0 * b * s * s)
}

/// cf of `Tulap(0, e^-eps, 0)`:
/// `(1 - b)^2 (e^{it/2} - e^{-it/2}) / (it (1 - b e^{it}) (1 - b e^{-it}))`, which is real.
pub fn tulap_cf(eps: f64, t: f64) -> Complex64 {
    let b = libm::exp(-eps);
    Complex64::new(discrete_laplace_cf(b, t) * uniform_cf(t), 0.0)
}

/// cf of `N(0, 1/mu^2)`.
pub fn gaussian_cf(mu: f64, t: f64) -> Complex64 {
    Complex64::new(libm::exp(-t * t / (2.0 * mu * mu)), 0.0)
}

/// Noise added to each count before the two-sample statistic is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NoiseCf {
    /// `Tulap(0, e^-eps, 0)`.
    Tulap { eps: f64 },
    /// `N(0, 1/mu^2)`.
    Gaussian { mu: f64 },
}

impl NoiseCf {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            NoiseCf::Tulap { eps } => tulap_cf(eps, t).re,
            NoiseCf::Gaussian { mu } => gaussian_cf(mu, t).re,
        }
    }
}

/// cf of `T = (Y + N2)/m - (X + N1)/n` with `X ~ Binom(n, theta)`, `Y ~ Binom(m, theta)`:
/// `psi_Y(t/m) psi_X(-t/n) psi_N(t/m) psi_N(-t/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TStatisticCf {
    pub theta: f64,
    pub m: u64,
    pub n: u64,
    pub noise: NoiseCf,
}

impl TStatisticCf {
    pub fn new(theta: f64, m: u64, n: u64, noise: NoiseCf) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::param("theta", theta, "0 <= theta <= 1"));
        }
        if m == 0 || n == 0 {
            return Err(Error::param("sample size", 0.0, "m, n >= 1"));
        }
        Ok(TStatisticCf { theta, m, n, noise })
    }

    /// `(log |psi_B(s)|^count, count * arg psi_B(s))` for a Bernoulli(theta) base.
    fn binomial_polar(&self, s: f64, count: u64) -> (f64, f64) {
        let th = self.theta;
        let half = libm::sin(0.5 * s);
        let log_mod2 = libm::log1p(-4.0 * th * (1.0 - th) * half * half);
        let arg = libm::atan2(th * libm::sin(s), 1.0 - th + th * libm::cos(s));
        (0.5 * count as f64 * log_mod2, count as f64 * arg)
    }

    /// Bound on `sup_s |s/2| |psi_B(s)^count psi_N(s)|` over one period.
    fn side_bound(&self, count: u64) -> f64 {
        let a = 2.0 * count as f64 * self.theta * (1.0 - self.theta);
        let mut bound: f64 = 1.0;
        if a > 0.5 {
            bound = bound.min(libm::exp(-0.5) / libm::sqrt(2.0 * a));
        }
        if let NoiseCf::Tulap { eps } = self.noise {
            let b = libm::exp(-eps);
            let v = (1.0 - b) * (1.0 - b) / (4.0 * b);
            bound = bound.min(if v <= 1.0 {
                (1.0 - b) / (4.0 * libm::sqrt(b))
            } else {
                ((1.0 - b) / (1.0 + b)) * ((1.0 - b) / (1.0 + b))
            });
        }
        bound
    }
}

impl CharFn for TStatisticCf {
    fn eval(&self, t: f64) -> Complex64 {
        self.amplitude_phase(t, 0.0).into_complex()
    }

    fn decay_hint(&self) -> Option<DecayHint> {
        let (m, n) = (self.m as f64, self.n as f64);
        match self.noise {
            NoiseCf::Tulap { .. } => Some(DecayHint::Power {
                coef: 4.0 * m * n * self.side_bound(self.m) * self.side_bound(self.n),
                power: 2.0,
            }),
            NoiseCf::Gaussian { mu } => Some(DecayHint::Gaussian {
                scale: mu / libm::sqrt(1.0 / (m * m) + 1.0 / (n * n)),
            }),
        }
    }

    fn shifted_imag(&self, t: f64, x: f64) -> f64 {
        let ap = self.amplitude_phase(t, x);
        ap.amplitude * libm::sin(ap.phase)
    }
}

struct AmplitudePhase {
    amplitude: f64,
    phase: f64,
}

impl AmplitudePhase {
    fn into_complex(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

impl TStatisticCf {
    /// `e^{-itx} psi_T(t)` in polar form.
    fn amplitude_phase(&self, t: f64, x: f64) -> AmplitudePhase {
        let (m, n) = (self.m as f64, self.n as f64);
        let (log_y, arg_y) = self.binomial_polar(t / m, self.m);
        let (log_x, arg_x) = self.binomial_polar(-t / n, self.n);
        let noise = self.noise.eval(t / m) * self.noise.eval(-t / n);
        AmplitudePhase {
            amplitude: libm::exp(log_y + log_x) * noise,
            phase: arg_y + arg_x - t * x,
        }
    }
}

/// Diagnostics of one inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionReport {
    pub cdf: f64,
    /// Truncation point of the integral.
    pub upper_limit: f64,
    /// Estimated quadrature error plus the tail bound, on the cdf scale.
    pub error_bound: f64,
    pub evaluations: usize,
}

// Gauss-Kronrod 7/15 nodes and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// `(kronrod, |kronrod - gauss|)` on `[a, b]`.
fn gk15<G: FnMut(f64) -> f64>(g: &mut G, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &node) in XGK.iter().take(7).enumerate() {
        let dx = half * node;
        let sum = g(center - dx) + g(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// `F(x)` by Gil-Pelaez inversion, accurate to `tol` unless an error is returned.
pub fn gil_pelaez_cdf<C: CharFn + ?Sized>(cf: &C, x: f64, tol: f64) -> Result<f64> {
    gil_pelaez_report(cf, x, tol).map(|r| r.cdf)
}

/// [`gil_pelaez_cdf`] with diagnostics.
pub fn gil_pelaez_report<C: CharFn + ?Sized>(cf: &C, x: f64, tol: f64) -> Result<InversionReport> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::param("tol", tol, "tol > 0"));
    }
    let hint = cf.decay_hint().unwrap_or(DecayHint::Power {
        coef: 1.0,
        power: 1.0,
    });
    let tail_tol = 0.5 * tol;
    let upper = hint.upper_limit(tail_tol);
    if upper.is_nan() || upper > MAX_UPPER_LIMIT {
        return Err(Error::QuadratureNonconvergence {
            estimated_error: tail_tol,
            tolerance: tol,
            upper_limit: upper,
        });
    }
    let mut evaluations = 0usize;
    let mut integrand = |t: f64| {
        evaluations += 1;
        let t = t.max(T_FLOOR);
        cf.shifted_imag(t, x) / t
    };

    // The integral is scaled by 1/pi, so the quadrature budget is pi * tol / 2.
    let quad_tol = 0.5 * tol * PI;
    let width = 2.0 * PI / x.abs().max(1.0);
    let panels = libm::ceil(upper / width).max(1.0) as usize;
    let width = upper / panels as f64;
    let mut total = 0.0;
    let mut error = 0.0;
    let mut stack: Vec<(f64, f64, usize)> = Vec::new();
    for k in 0..panels {
        let (a, b) = (k as f64 * width, (k + 1) as f64 * width);
        stack.push((a, b, 0));
        while let Some((a, b, depth)) = stack.pop() {
            let (value, err) = gk15(&mut integrand, a, b);
            let local_tol = quad_tol * (b - a) / upper;
            if err <= local_tol || depth >= MAX_DEPTH {
                total += value;
                error += err;
            } else {
                let mid = 0.5 * (a + b);
                stack.push((mid, b, depth + 1));
                stack.push((a, mid, depth + 1));
            }
        }
    }
    let error_bound = error / PI + tail_tol;
    if error / PI > 0.5 * tol {
        return Err(Error::QuadratureNonconvergence {
            estimated_error: error_bound,
            tolerance: tol,
            upper_limit: upper,
        });
    }
    Ok(InversionReport {
        cdf: (0.5 - total / PI).clamp(0.0, 1.0),
        upper_limit: upper,
        error_bound,
        evaluations,
    })
}
