//! File formats: test functions as CSV, noise distributions as TOML.
//!
//! A test-function CSV has the header `kind,first,second` and one row per
//! sample point (`point,<index>,<phi>`) or adjacent pair (`edge,<i>,<j>`).
//! Points are indexed `0..k` and each index must appear exactly once.
//!
//! A noise file holds the same keys as the noise flags, e.g.
//! `kind = "tulap"`, `eps = 1.0`, `delta = 0.01`.

use std::io::{Read, Write};
use std::path::Path;

use clap::ValueEnum;
use cnd_core::dptest::TestFn;
use cnd_core::{CndDist, GaussianCnd, Noise, TradeoffFn, TulapDist};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    kind: String,
    first: String,
    second: String,
}

pub fn read_testfn<R: Read>(input: R) -> Result<TestFn> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut points: Vec<Option<f64>> = Vec::new();
    let mut edges = Vec::new();
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row = row?;
        let at = || format!("test function row {}", line + 2);
        let index = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| SimError::config(format!("{}: `{s}` is not a point index", at())))
        };
        match row.kind.as_str() {
            "point" => {
                let i = index(&row.first)?;
                let v: f64 = row.second.parse().map_err(|_| {
                    SimError::config(format!("{}: `{}` is not a number", at(), row.second))
                })?;
                if i >= points.len() {
                    points.resize(i + 1, None);
                }
                if points[i].replace(v).is_some() {
                    return Err(SimError::config(format!("{}: point {i} given twice", at())));
                }
            }
            "edge" => edges.push((index(&row.first)?, index(&row.second)?)),
            other => {
                return Err(SimError::config(format!(
                    "{}: unknown kind `{other}`",
                    at()
                )))
            }
        }
    }
    let values = points
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| SimError::config(format!("test function: point {i} missing")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TestFn::new(values, edges)?)
}

pub fn read_testfn_file(path: &Path) -> Result<TestFn> {
    let file = std::fs::File::open(path)
        .map_err(|e| SimError::config(format!("cannot read {}: {e}", path.display())))?;
    read_testfn(file)
}

pub fn write_testfn<W: Write>(phi: &TestFn, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, v) in phi.values().iter().enumerate() {
        w.serialize(Row {
            kind: "point".into(),
            first: i.to_string(),
            second: v.to_string(),
        })?;
    }
    for (i, j) in phi.edges() {
        w.serialize(Row {
            kind: "edge".into(),
            first: i.to_string(),
            second: j.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Closed-form Tulap noise for `(eps, delta)`-DP.
    Tulap,
    /// `N(0, 1/mu^2)` for `mu`-GDP.
    Gaussian,
    /// Noise constructed numerically from the tradeoff function.
    Cnd,
}

/// A canonical noise distribution described by flags or a TOML file.
#[derive(Debug, Clone, Default, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[arg(long, value_enum)]
    pub kind: Option<NoiseKind>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Use the two-fold composition of the tradeoff function (constructed noise only).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub twofold: Option<bool>,
}

impl NoiseSpec {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| SimError::config(format!("{}: {e}", path.display())))
    }

    pub fn merge(self, over: Self) -> Self {
        NoiseSpec {
            kind: over.kind.or(self.kind),
            eps: over.eps.or(self.eps),
            delta: over.delta.or(self.delta),
            mu: over.mu.or(self.mu),
            twofold: over.twofold.or(self.twofold),
        }
    }

    /// The tradeoff function the noise is canonical for.
    pub fn tradeoff(&self) -> Result<TradeoffFn> {
        let base = match (self.eps, self.mu) {
            (Some(_), Some(_)) => return Err(SimError::config("noise: give eps or mu, not both")),
            (Some(eps), None) => TradeoffFn::eps_delta(eps, self.delta.unwrap_or(0.0))?,
            (None, Some(mu)) => TradeoffFn::gaussian(mu)?,
            (None, None) => return Err(SimError::config("noise: eps or mu is required")),
        };
        Ok(if self.twofold.unwrap_or(false) {
            TradeoffFn::twofold(base)
        } else {
            base
        })
    }

    pub fn build(&self) -> Result<Noise> {
        let kind = self.kind.unwrap_or(if self.mu.is_some() {
            NoiseKind::Gaussian
        } else {
            NoiseKind::Tulap
        });
        if self.twofold.unwrap_or(false) && kind != NoiseKind::Cnd {
            return Err(SimError::config("noise: twofold needs kind = \"cnd\""));
        }
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| SimError::config(format!("noise: {name} is required")))
        };
        Ok(match kind {
            NoiseKind::Tulap => {
                if self.mu.is_some() {
                    return Err(SimError::config("noise: tulap takes eps and delta, not mu"));
                }
                TulapDist::from_eps_delta(need(self.eps, "eps")?, self.delta.unwrap_or(0.0))?.into()
            }
            NoiseKind::Gaussian => {
                if self.eps.is_some() {
                    return Err(SimError::config("noise: gaussian takes mu, not eps"));
                }
                GaussianCnd::new(need(self.mu, "mu")?)?.into()
            }
            NoiseKind::Cnd => CndDist::new(self.tradeoff()?)?.into(),
        })
    }
}
