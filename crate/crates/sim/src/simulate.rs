//! Monte Carlo experiments: type I error, p-value ecdf and power.
//!
//! Each replicate draws its data from a stream shared by all methods and its
//! test noise from a per-method stream, so methods are compared on the same
//! data. Replicates run on a rayon pool and are reduced in replicate order;
//! output does not depend on the number of workers.

use std::io::Write;

use cnd_core::dist::BinomialModel;
use cnd_core::twoprop::TwoSampleData;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Experiment, SimConfig};
use crate::error::{Result, SimError};
use crate::methods::{MethodSpec, Runner};
use crate::seed::{method_stream, stream, DATA_STREAM};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type1Row {
    pub theta0: f64,
    pub alpha: f64,
    pub method: String,
    pub empirical_type1: f64,
    pub mc_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcdfRow {
    pub theta0: f64,
    pub method: String,
    pub alpha: f64,
    pub ecdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub sample_size: u64,
    pub alpha: f64,
    pub method: String,
    pub empirical_power: f64,
    pub mc_stderr: f64,
}

/// Output of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Type1(Vec<Type1Row>),
    Ecdf(Vec<EcdfRow>),
    Power(Vec<PowerRow>),
}

impl Table {
    pub fn len(&self) -> usize {
        match self {
            Table::Type1(r) => r.len(),
            Table::Ecdf(r) => r.len(),
            Table::Power(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match self {
            Table::Type1(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
            Table::Ecdf(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
            Table::Power(rows) => rows.iter().try_for_each(|r| w.serialize(r))?,
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Fraction of `ps` at or below `alpha`.
pub fn rejection_rate(ps: &[f64], alpha: f64) -> f64 {
    ps.iter().filter(|&&p| p <= alpha).count() as f64 / ps.len() as f64
}

/// `sqrt(p (1 - p) / R)`.
pub fn mc_stderr(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// One grid cell: sample sizes and the two proportions.
#[derive(Debug, Clone, Copy)]
struct Cell {
    index: u64,
    m: u64,
    n: u64,
    theta_x: f64,
    theta_y: f64,
}

struct Harness<'a> {
    cfg: &'a SimConfig,
    runners: Vec<(MethodSpec, Runner, u64)>,
    pool: rayon::ThreadPool,
}

impl<'a> Harness<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let opts = cfg.method_options();
        let runners = cfg
            .methods
            .iter()
            .map(|&spec| {
                Ok((
                    spec,
                    Runner::new(spec, &opts)?,
                    method_stream(&spec.to_string()),
                ))
            })
            .collect::<Result<_>>()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| SimError::config(format!("workers: {e}")))?;
        Ok(Harness { cfg, runners, pool })
    }

    /// p-values indexed `[method][replicate]`.
    fn pvalues(&self, cell: Cell) -> Result<Vec<Vec<f64>>> {
        let cfg = self.cfg;
        let tag = cfg.experiment.tag();
        let bx = BinomialModel::new(cell.n, cell.theta_x)?;
        let by = BinomialModel::new(cell.m, cell.theta_y)?;
        let per_rep: Vec<Vec<f64>> = self.pool.install(|| {
            (0..cfg.reps as u64)
                .into_par_iter()
                .map(|r| {
                    let mut data_rng = stream(cfg.seed, tag, cell.index, DATA_STREAM, r);
                    let x = bx.sample(&mut data_rng);
                    let y = by.sample(&mut data_rng);
                    let d = TwoSampleData::new(x, cell.n, y, cell.m)?;
                    self.runners
                        .iter()
                        .map(|(_, runner, key)| {
                            let mut rng = stream(cfg.seed, tag, cell.index, *key, r);
                            Ok(runner.run(&d, &mut rng)?.p_value)
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()
        })?;
        Ok((0..self.runners.len())
            .map(|k| per_rep.iter().map(|ps| ps[k]).collect())
            .collect())
    }

    fn labels(&self) -> impl Iterator<Item = String> + '_ {
        self.runners.iter().map(|(spec, _, _)| spec.to_string())
    }
}

/// Empirical type I error at `theta_x = theta_y = theta0` for each grid value.
pub fn run_type1(cfg: &SimConfig) -> Result<Vec<Type1Row>> {
    let h = Harness::new(cfg)?;
    let mut rows = Vec::new();
    for (i, &theta0) in cfg.theta0.iter().enumerate() {
        let cell = Cell {
            index: i as u64,
            m: cfg.m,
            n: cfg.n,
            theta_x: theta0,
            theta_y: theta0,
        };
        let ps = h.pvalues(cell)?;
        for &alpha in &cfg.alpha {
            for (label, p) in h.labels().zip(&ps) {
                let rate = rejection_rate(p, alpha);
                rows.push(Type1Row {
                    theta0,
                    alpha,
                    method: label,
                    empirical_type1: rate,
                    mc_stderr: mc_stderr(rate, cfg.reps),
                });
            }
        }
    }
    Ok(rows)
}

/// Ecdf of null p-values on `ecdf_points` evenly spaced levels in `[0, 1]`.
pub fn run_pvalue_ecdf(cfg: &SimConfig) -> Result<Vec<EcdfRow>> {
    let h = Harness::new(cfg)?;
    let k = cfg.ecdf_points;
    let mut rows = Vec::new();
    for (i, &theta0) in cfg.theta0.iter().enumerate() {
        let cell = Cell {
            index: i as u64,
            m: cfg.m,
            n: cfg.n,
            theta_x: theta0,
            theta_y: theta0,
        };
        let ps = h.pvalues(cell)?;
        for (label, mut p) in h.labels().zip(ps) {
            p.sort_by(f64::total_cmp);
            for j in 0..k {
                let alpha = j as f64 / (k - 1) as f64;
                rows.push(EcdfRow {
                    theta0,
                    method: label.clone(),
                    alpha,
                    ecdf: p.partition_point(|&v| v <= alpha) as f64 / p.len() as f64,
                });
            }
        }
    }
    Ok(rows)
}

/// Empirical power at `(theta_x, theta_y)` with `m = n` over `sizes`.
pub fn run_power(cfg: &SimConfig) -> Result<Vec<PowerRow>> {
    let h = Harness::new(cfg)?;
    let mut rows = Vec::new();
    for (i, &size) in cfg.sizes.iter().enumerate() {
        let cell = Cell {
            index: i as u64,
            m: size,
            n: size,
            theta_x: cfg.theta_x,
            theta_y: cfg.theta_y,
        };
        let ps = h.pvalues(cell)?;
        for &alpha in &cfg.alpha {
            for (label, p) in h.labels().zip(&ps) {
                let rate = rejection_rate(p, alpha);
                rows.push(PowerRow {
                    sample_size: size,
                    alpha,
                    method: label,
                    empirical_power: rate,
                    mc_stderr: mc_stderr(rate, cfg.reps),
                });
            }
        }
    }
    Ok(rows)
}

pub fn run(cfg: &SimConfig) -> Result<Table> {
    Ok(match cfg.experiment {
        Experiment::Type1 => Table::Type1(run_type1(cfg)?),
        Experiment::PvalueEcdf => Table::Ecdf(run_pvalue_ecdf(cfg)?),
        Experiment::Power => Table::Power(run_power(cfg)?),
    })
}

/// Run record written next to the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub config: &'a SimConfig,
    pub version: &'static str,
    pub git_describe: &'static str,
    pub wall_time_seconds: f64,
    pub rows: usize,
    pub output: Option<String>,
}

impl<'a> Manifest<'a> {
    pub fn new(
        config: &'a SimConfig,
        wall_time_seconds: f64,
        rows: usize,
        output: Option<String>,
    ) -> Self {
        Manifest {
            config,
            version: env!("CARGO_PKG_VERSION"),
            git_describe: option_env!("CND_GIT_DESCRIBE").unwrap_or("unknown"),
            wall_time_seconds,
            rows,
            output,
        }
    }
}
