//! Method labels and their dispatch onto the tests in `cnd_core::twoprop`.

use std::fmt;
use std::str::FromStr;

use cnd_core::twoprop::{
    classic_normal_test, dp_normal_test, inversion_test, nonprivate_umpu, plugin_test,
    semiprivate_test, Privacy, TestReport, TwoSampleData,
};
use cnd_core::{GaussianCnd, Noise, TulapDist};
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// A test as named on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    Classic,
    DpNormal,
    Plugin,
    Inversion,
    Semiprivate,
    /// Semi-private test at a privacy parameter scaled by the factor.
    SemiprivateScaled(f64),
    NonprivateUmpu,
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Classic => f.write_str("classic"),
            MethodSpec::DpNormal => f.write_str("dp_normal"),
            MethodSpec::Plugin => f.write_str("plugin"),
            MethodSpec::Inversion => f.write_str("inversion"),
            MethodSpec::Semiprivate => f.write_str("semiprivate"),
            MethodSpec::SemiprivateScaled(k) => write!(f, "semiprivate_scaled({k})"),
            MethodSpec::NonprivateUmpu => f.write_str("nonprivate_umpu"),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "classic" => MethodSpec::Classic,
            "dp_normal" => MethodSpec::DpNormal,
            "plugin" => MethodSpec::Plugin,
            "inversion" => MethodSpec::Inversion,
            "semiprivate" => MethodSpec::Semiprivate,
            "nonprivate_umpu" => MethodSpec::NonprivateUmpu,
            _ => {
                let factor = s
                    .strip_prefix("semiprivate_scaled(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| SimError::config(format!("unknown method `{s}`")))?;
                let k: f64 = factor
                    .trim()
                    .parse()
                    .map_err(|_| SimError::config(format!("bad scale factor in `{s}`")))?;
                if !(k > 0.0 && k.is_finite()) {
                    return Err(SimError::config(format!(
                        "scale factor must be positive in `{s}`"
                    )));
                }
                MethodSpec::SemiprivateScaled(k)
            }
        })
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = SimError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> Self {
        m.to_string()
    }
}

/// Options shared by all methods of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOptions {
    pub privacy: Privacy,
    /// Quadrature tolerance for the inversion test.
    pub quad_tol: f64,
    pub corrected_variance: bool,
}

/// A method with its noise prepared once per run.
#[derive(Debug, Clone)]
pub enum Runner {
    Classic,
    DpNormal { eps: f64, corrected: bool },
    Plugin { eps: f64 },
    Inversion { privacy: Privacy, tol: f64 },
    Semiprivate(Noise),
    NonprivateUmpu,
}

fn require_eps(spec: MethodSpec, privacy: Privacy) -> Result<f64> {
    match privacy {
        Privacy::EpsDp(eps) => Ok(eps),
        Privacy::Gdp(_) => Err(SimError::config(format!("method `{spec}` needs --eps"))),
    }
}

impl Runner {
    pub fn new(spec: MethodSpec, opts: &MethodOptions) -> Result<Self> {
        let scaled_noise = |k: f64| -> Result<Noise> {
            Ok(match opts.privacy {
                Privacy::EpsDp(eps) => TulapDist::from_eps_delta(eps * k, 0.0)?.into(),
                Privacy::Gdp(mu) => GaussianCnd::new(mu * k)?.into(),
            })
        };
        Ok(match spec {
            MethodSpec::Classic => Runner::Classic,
            MethodSpec::DpNormal => Runner::DpNormal {
                eps: require_eps(spec, opts.privacy)?,
                corrected: opts.corrected_variance,
            },
            MethodSpec::Plugin => Runner::Plugin {
                eps: require_eps(spec, opts.privacy)?,
            },
            MethodSpec::Inversion => Runner::Inversion {
                privacy: opts.privacy,
                tol: opts.quad_tol,
            },
            MethodSpec::Semiprivate => Runner::Semiprivate(scaled_noise(1.0)?),
            MethodSpec::SemiprivateScaled(k) => Runner::Semiprivate(scaled_noise(k)?),
            MethodSpec::NonprivateUmpu => Runner::NonprivateUmpu,
        })
    }

    pub fn run<R: RngCore>(&self, d: &TwoSampleData, rng: &mut R) -> Result<TestReport> {
        let report = match self {
            Runner::Classic => classic_normal_test(d),
            Runner::DpNormal { eps, corrected } => dp_normal_test(d, *eps, *corrected, rng)?,
            Runner::Plugin { eps } => plugin_test(d, *eps, rng)?,
            Runner::Inversion { privacy, tol } => inversion_test(d, *privacy, *tol, rng)?,
            Runner::Semiprivate(noise) => semiprivate_test(d, noise, rng)?,
            Runner::NonprivateUmpu => nonprivate_umpu(d, rng)?,
        };
        if !(0.0..=1.0).contains(&report.p_value) {
            return Err(SimError::Numeric(cnd_core::Error::InvalidParameter {
                name: "p_value",
                value: report.p_value,
                expected: "0 <= p <= 1",
            }));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_roundtrip() {
        for label in [
            "classic",
            "dp_normal",
            "plugin",
            "inversion",
            "semiprivate",
            "semiprivate_scaled(0.5)",
            "nonprivate_umpu",
        ] {
            assert_eq!(label.parse::<MethodSpec>().unwrap().to_string(), label);
        }
        assert_eq!(
            "semiprivate_scaled( 0.25 )".parse::<MethodSpec>().unwrap(),
            MethodSpec::SemiprivateScaled(0.25)
        );
    }

    #[test]
    fn bad_labels_are_config_errors() {
        for label in [
            "oasis",
            "semiprivate_scaled(x)",
            "semiprivate_scaled(-1)",
            "semiprivate_scaled(1",
        ] {
            assert!(
                matches!(label.parse::<MethodSpec>(), Err(SimError::Config(_))),
                "{label}"
            );
        }
    }

    #[test]
    fn eps_only_methods_reject_gdp() {
        let opts = MethodOptions {
            privacy: Privacy::Gdp(1.0),
            quad_tol: 1e-6,
            corrected_variance: false,
        };
        assert!(Runner::new(MethodSpec::Plugin, &opts).is_err());
        assert!(Runner::new(MethodSpec::DpNormal, &opts).is_err());
        assert!(Runner::new(MethodSpec::Inversion, &opts).is_ok());
        assert!(Runner::new(MethodSpec::SemiprivateScaled(0.5), &opts).is_ok());
    }
}
