//! Simulation configuration: a TOML file and command-line flags with the
//! same keys, flags winning, then per-experiment defaults.

use std::path::Path;

use clap::ValueEnum;
use cnd_core::twoprop::Privacy;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::methods::{MethodOptions, MethodSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Empirical type I error over a grid of null proportions.
    Type1,
    /// Empirical cdf of null p-values.
    #[serde(alias = "ecdf")]
    #[value(name = "pvalue_ecdf", alias = "ecdf")]
    PvalueEcdf,
    /// Empirical power as the common sample size varies.
    Power,
}

impl Experiment {
    pub fn tag(self) -> u64 {
        match self {
            Experiment::Type1 => 1,
            Experiment::PvalueEcdf => 2,
            Experiment::Power => 3,
        }
    }
}

/// Every key optional; used both for the config file and for flags.
#[derive(Debug, Clone, Default, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    /// Which experiment to run.
    #[arg(long, value_enum)]
    pub experiment: Option<Experiment>,
    /// Size of the second sample (the `y` group).
    #[arg(long)]
    pub m: Option<u64>,
    /// Size of the first sample (the `x` group).
    #[arg(long)]
    pub n: Option<u64>,
    /// Common sample sizes m = n for the power experiment.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<u64>>,
    /// Null proportion(s).
    #[arg(long, value_delimiter = ',')]
    pub theta0: Option<Vec<f64>>,
    /// Success probability of the `x` group in the power experiment.
    #[arg(long)]
    pub theta_x: Option<f64>,
    /// Success probability of the `y` group in the power experiment.
    #[arg(long)]
    pub theta_y: Option<f64>,
    /// Nominal level(s).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Privacy budget for (eps, 0)-DP; defaults to 0.1.
    #[arg(long, conflicts_with = "mu")]
    pub eps: Option<f64>,
    /// Privacy parameter for mu-GDP.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Comma-separated methods, e.g. `inversion,semiprivate_scaled(0.5)`.
    #[arg(long, alias = "method", value_delimiter = ',')]
    pub methods: Option<Vec<MethodSpec>>,
    /// Monte Carlo replicates per cell.
    #[arg(long)]
    #[serde(alias = "replicates")]
    pub reps: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Quadrature tolerance of the inversion test.
    #[arg(long)]
    pub quad_tol: Option<f64>,
    /// Use the variance with the (1/m + 1/n) factor in the DP normal test.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub corrected_variance: Option<bool>,
    /// Number of points in the p-value ecdf grid.
    #[arg(long)]
    pub ecdf_points: Option<usize>,
}

impl ConfigOverrides {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| SimError::config(format!("{}: {e}", path.display())))
    }

    /// `over` wins wherever it sets a key.
    pub fn merge(self, over: Self) -> Self {
        ConfigOverrides {
            experiment: over.experiment.or(self.experiment),
            m: over.m.or(self.m),
            n: over.n.or(self.n),
            sizes: over.sizes.or(self.sizes),
            theta0: over.theta0.or(self.theta0),
            theta_x: over.theta_x.or(self.theta_x),
            theta_y: over.theta_y.or(self.theta_y),
            alpha: over.alpha.or(self.alpha),
            // A flag for one privacy parameter replaces the file's other one.
            eps: if over.mu.is_some() {
                over.eps
            } else {
                over.eps.or(self.eps)
            },
            mu: if over.eps.is_some() {
                over.mu
            } else {
                over.mu.or(self.mu)
            },
            methods: over.methods.or(self.methods),
            reps: over.reps.or(self.reps),
            seed: over.seed.or(self.seed),
            workers: over.workers.or(self.workers),
            quad_tol: over.quad_tol.or(self.quad_tol),
            corrected_variance: over.corrected_variance.or(self.corrected_variance),
            ecdf_points: over.ecdf_points.or(self.ecdf_points),
        }
    }

    pub fn finalize(self) -> Result<SimConfig> {
        let experiment = self
            .experiment
            .ok_or_else(|| SimError::config("experiment: missing (type1 | pvalue_ecdf | power)"))?;
        let privacy = match (self.eps, self.mu) {
            (Some(_), Some(_)) => return Err(SimError::config("eps and mu: give only one")),
            (_, Some(mu)) => Privacy::Gdp(mu),
            (eps, None) => Privacy::EpsDp(eps.unwrap_or(0.1)),
        };
        let default_methods: &[&str] = match experiment {
            Experiment::Type1 | Experiment::PvalueEcdf => &[
                "classic",
                "dp_normal",
                "plugin",
                "inversion",
                "semiprivate",
                "nonprivate_umpu",
            ],
            Experiment::Power => &[
                "nonprivate_umpu",
                "semiprivate",
                "semiprivate_scaled(0.7071067811865476)",
                "semiprivate_scaled(0.5)",
                "inversion",
                "plugin",
            ],
        };
        let cfg = SimConfig {
            experiment,
            m: self.m.unwrap_or(if experiment == Experiment::PvalueEcdf {
                40
            } else {
                30
            }),
            n: self.n.unwrap_or(30),
            sizes: self.sizes.unwrap_or_else(|| vec![50, 100, 200, 400]),
            theta0: self.theta0.unwrap_or_else(|| match experiment {
                Experiment::PvalueEcdf => vec![0.95],
                _ => (1..=19).map(|i| i as f64 / 20.0).collect(),
            }),
            theta_x: self.theta_x.unwrap_or(0.5),
            theta_y: self.theta_y.unwrap_or(0.6),
            alpha: self.alpha.unwrap_or_else(|| vec![0.05]),
            privacy,
            methods: match self.methods {
                Some(m) => m,
                None => default_methods
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_>>()?,
            },
            reps: self.reps.unwrap_or(match experiment {
                Experiment::Type1 => 5000,
                Experiment::PvalueEcdf => 10_000,
                Experiment::Power => 2000,
            }),
            seed: self.seed.unwrap_or(1),
            workers: self
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            quad_tol: self.quad_tol.unwrap_or(1e-6),
            corrected_variance: self.corrected_variance.unwrap_or(false),
            ecdf_points: self.ecdf_points.unwrap_or(1001),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A fully specified simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub experiment: Experiment,
    pub m: u64,
    pub n: u64,
    pub sizes: Vec<u64>,
    pub theta0: Vec<f64>,
    pub theta_x: f64,
    pub theta_y: f64,
    pub alpha: Vec<f64>,
    pub privacy: Privacy,
    pub methods: Vec<MethodSpec>,
    pub reps: usize,
    pub seed: u64,
    pub workers: usize,
    pub quad_tol: f64,
    pub corrected_variance: bool,
    pub ecdf_points: usize,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(SimError::Config(msg()))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.m >= 1 && self.n >= 1, || {
            format!("m, n: must be >= 1, got m = {}, n = {}", self.m, self.n)
        })?;
        check(
            !self.sizes.is_empty() && self.sizes.iter().all(|&s| s >= 1),
            || format!("sizes: must be nonempty and >= 1, got {:?}", self.sizes),
        )?;
        check(!self.theta0.is_empty(), || "theta0: empty grid".into())?;
        for (name, v) in self
            .theta0
            .iter()
            .map(|&t| ("theta0", t))
            .chain([("theta_x", self.theta_x), ("theta_y", self.theta_y)])
        {
            check((0.0..=1.0).contains(&v), || {
                format!("{name}: {v} is outside [0, 1]")
            })?;
        }
        check(!self.alpha.is_empty(), || "alpha: empty list".into())?;
        for &a in &self.alpha {
            check(a > 0.0 && a < 1.0, || {
                format!("alpha: {a} is outside (0, 1)")
            })?;
        }
        match self.privacy {
            Privacy::EpsDp(e) => check(e > 0.0 && e.is_finite(), || {
                format!("eps: {e} must be positive")
            })?,
            Privacy::Gdp(mu) => check(mu > 0.0 && mu.is_finite(), || {
                format!("mu: {mu} must be positive")
            })?,
        }
        check(!self.methods.is_empty(), || "methods: empty list".into())?;
        check(self.reps >= 1, || "reps: must be >= 1".into())?;
        check(self.workers >= 1, || "workers: must be >= 1".into())?;
        check(self.quad_tol > 0.0 && self.quad_tol < 1.0, || {
            format!("quad_tol: {} is outside (0, 1)", self.quad_tol)
        })?;
        check(self.ecdf_points >= 2, || "ecdf_points: must be >= 2".into())?;
        Ok(())
    }

    pub fn method_options(&self) -> MethodOptions {
        MethodOptions {
            privacy: self.privacy,
            quad_tol: self.quad_tol,
            corrected_variance: self.corrected_variance,
        }
    }
}
