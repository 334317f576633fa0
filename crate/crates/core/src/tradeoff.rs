//! Symmetric tradeoff functions.
//!
//! A tradeoff function `f: [0,1] -> [0,1]` is convex, continuous, nonincreasing
//! and satisfies `f(a) <= 1 - a`. It maps the type I error of a test to the
//! smallest type II error achievable when distinguishing two neighbouring
//! output distributions. All functions in this module are symmetric
//! (`f = f^{-1}`), which is what the canonical noise construction requires.

use alloc::boxed::Box;
use alloc::sync::Arc;
use core::fmt;

use crate::error::{Error, Result};
use crate::root::bisect_predicate;
use crate::special::{norm_cdf, norm_quantile};

/// Tolerance on `|f(c) - c|` at the computed fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 200;
/// Bisection x-tolerance for [`TradeoffFn::inverse`].
pub const INVERSE_XTOL: f64 = 1e-12;
/// `f` is declared trivial when `max (1 - a) - f(a)` over this grid is below [`TRIVIAL_TOL`].
pub const TRIVIAL_GRID: usize = 1001;
pub const TRIVIAL_TOL: f64 = 1e-10;

const SHAPE_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;

/// User-supplied tradeoff curve.
pub type CustomFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum TradeoffFn {
    /// `(eps, delta)`-DP: `max{0, 1 - delta - e^eps a, e^-eps (1 - delta - a)}`.
    EpsDelta {
        eps: f64,
        delta: f64,
    },
    /// `mu`-GDP: `Phi(Phi^{-1}(1 - a) - mu)`.
    Gaussian {
        mu: f64,
    },
    /// `a -> f(1 - f(a))`, the privacy of a statistic whose sensitivity doubled.
    TwoFold(Box<TradeoffFn>),
    Custom(CustomFn),
}

impl fmt::Debug for TradeoffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TradeoffFn::EpsDelta { eps, delta } => f
                .debug_struct("EpsDelta")
                .field("eps", eps)
                .field("delta", delta)
                .finish(),
            TradeoffFn::Gaussian { mu } => f.debug_struct("Gaussian").field("mu", mu).finish(),
            TradeoffFn::TwoFold(inner) => f.debug_tuple("TwoFold").field(inner).finish(),
            TradeoffFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// The unique `c` in `[0, 1/2)` with `f(c) = c`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPoint(pub f64);

impl FixedPoint {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Worst-case violations of the tradeoff-function axioms over a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub grid_size: usize,
    /// Largest `f(mid) - (f(a) + f(b)) / 2` over consecutive grid triples.
    pub convexity: f64,
    /// Largest increase `f(x_{i+1}) - f(x_i)`.
    pub monotonicity: f64,
    /// Largest `f(a) - (1 - a)`, or excursion outside `[0, 1]`.
    pub upper_bound: f64,
    /// Largest `|f(f(a)) - a|` over grid points with `a <= f(0)`.
    pub symmetry: f64,
    pub trivial: bool,
}

impl ValidationReport {
    pub fn convex(&self) -> bool {
        self.convexity <= SHAPE_TOL
    }
    pub fn monotone(&self) -> bool {
        self.monotonicity <= SHAPE_TOL
    }
    pub fn bounded(&self) -> bool {
        self.upper_bound <= SHAPE_TOL
    }
    pub fn symmetric(&self) -> bool {
        self.symmetry <= SYMMETRY_TOL
    }
    /// All axioms hold and the function is nontrivial.
    pub fn passed(&self) -> bool {
        self.convex() && self.monotone() && self.bounded() && self.symmetric() && !self.trivial
    }
}

impl TradeoffFn {
    pub fn eps_delta(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::param("eps", eps, "eps > 0"));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::param("delta", delta, "0 <= delta < 1"));
        }
        Ok(TradeoffFn::EpsDelta { eps, delta })
    }

    pub fn gaussian(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", mu, "mu > 0"));
        }
        Ok(TradeoffFn::Gaussian { mu })
    }

    /// `g(a) = f(1 - f(a))`.
    pub fn twofold(f: TradeoffFn) -> Self {
        TradeoffFn::TwoFold(Box::new(f))
    }

    /// Wraps an arbitrary curve. It must pass [`TradeoffFn::ensure_valid`] before
    /// a noise distribution can be built from it.
    pub fn custom<F>(eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TradeoffFn::Custom(Arc::new(eval))
    }

    pub fn is_builtin(&self) -> bool {
        match self {
            TradeoffFn::EpsDelta { .. } | TradeoffFn::Gaussian { .. } => true,
            TradeoffFn::TwoFold(inner) => inner.is_builtin(),
            TradeoffFn::Custom(_) => false,
        }
    }

    /// Evaluates `f(a)`; `a` is clamped to `[0, 1]`.
    pub fn eval(&self, alpha: f64) -> f64 {
        let a = alpha.clamp(0.0, 1.0);
        match self {
            TradeoffFn::EpsDelta { eps, delta } => {
                let steep = 1.0 - delta - libm::exp(*eps) * a;
                let shallow = libm::exp(-eps) * (1.0 - delta - a);
                steep.max(shallow).max(0.0)
            }
            TradeoffFn::Gaussian { mu } => {
                if a <= 0.0 {
                    1.0
                } else if a >= 1.0 {
                    0.0
                } else {
                    // Phi^{-1}(1 - a) = -Phi^{-1}(a), without cancellation near 0.
                    norm_cdf(-norm_quantile(a) - mu)
                }
            }
            TradeoffFn::TwoFold(inner) => inner.eval(1.0 - inner.eval(a)),
            TradeoffFn::Custom(eval) => eval(a),
        }
    }

    /// `inf { t in [0,1] : f(t) <= alpha }`.
    pub fn inverse(&self, alpha: f64) -> f64 {
        if self.eval(0.0) <= alpha {
            return 0.0;
        }
        bisect_predicate(0.0, 1.0, INVERSE_XTOL, 200, |t| self.eval(t) <= alpha)
    }

    /// `true` when `max (1 - a) - f(a)` over a 1001-point grid is below `1e-10`.
    pub fn is_trivial(&self) -> bool {
        let gap = (0..TRIVIAL_GRID)
            .map(|i| {
                let a = i as f64 / (TRIVIAL_GRID - 1) as f64;
                (1.0 - a) - self.eval(a)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        gap < TRIVIAL_TOL
    }

    /// The fixed point `c` of `f`, found by bisecting `f(c) - c` on `[0, 1/2]`.
    pub fn fixed_point(&self) -> Result<FixedPoint> {
        if self.is_trivial() {
            return Err(Error::TrivialTradeoff);
        }
        let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
        for _ in 0..FIXED_POINT_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) - mid > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let residual = |x: f64| (self.eval(x) - x).abs();
        let c = if residual(lo) <= residual(hi) { lo } else { hi };
        if residual(c) > FIXED_POINT_TOL || c >= 0.5 {
            return Err(Error::InvalidTradeoff("no fixed point in [0, 1/2)"));
        }
        Ok(FixedPoint(c))
    }

    /// Checks the tradeoff axioms on a uniform grid of `grid_size >= 3` points.
    pub fn validate(&self, grid_size: usize) -> ValidationReport {
        let n = grid_size.max(3);
        let x = |i: usize| i as f64 / (n - 1) as f64;
        let mut convexity = f64::NEG_INFINITY;
        let mut monotonicity = f64::NEG_INFINITY;
        let mut upper_bound = f64::NEG_INFINITY;
        let mut symmetry: f64 = 0.0;
        let f0 = self.eval(0.0);
        let mut prev = f0;
        for i in 0..n {
            let a = x(i);
            let fa = if i == 0 { f0 } else { self.eval(a) };
            upper_bound = upper_bound.max(fa - (1.0 - a)).max(-fa).max(fa - 1.0);
            if i > 0 {
                monotonicity = monotonicity.max(fa - prev);
            }
            if i > 0 && i + 1 < n {
                let mid = 0.5 * (self.eval(x(i - 1)) + self.eval(x(i + 1)));
                convexity = convexity.max(fa - mid);
            }
            if a <= f0 {
                symmetry = symmetry.max((self.eval(fa) - a).abs());
            }
            prev = fa;
        }
        ValidationReport {
            grid_size: n,
            convexity,
            monotonicity,
            upper_bound,
            symmetry,
            trivial: self.is_trivial(),
        }
    }

    /// Rejects curves that are not symmetric nontrivial tradeoff functions.
    /// Asymmetric curves are never symmetrized.
    pub fn ensure_valid(&self) -> Result<()> {
        if self.is_builtin() {
            return Ok(());
        }
        let report = self.validate(TRIVIAL_GRID);
        if report.trivial {
            return Err(Error::TrivialTradeoff);
        }
        if !report.monotone() {
            return Err(Error::InvalidTradeoff("not nonincreasing"));
        }
        if !report.bounded() {
            return Err(Error::InvalidTradeoff("violates f(a) <= 1 - a"));
        }
        if !report.convex() {
            return Err(Error::InvalidTradeoff("not convex"));
        }
        if !report.symmetric() {
            return Err(Error::InvalidTradeoff("not symmetric"));
        }
        Ok(())
    }
}
