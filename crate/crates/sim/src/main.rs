use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use cnd_core::cnd::default_alpha_grid;
use cnd_core::dptest::{check_fdp, check_fdp_cnd};
use cnd_core::twoprop::{two_sided, Privacy, TwoSampleData};
use cnd_core::{identity_check, CndDist, NoiseDistribution, Scaled, TradeoffFn, TulapDist};
use cnd_sim::io::{read_testfn_file, NoiseSpec};
use cnd_sim::methods::{MethodOptions, MethodSpec, Runner};
use cnd_sim::{ConfigOverrides, Manifest, SimError};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

#[derive(Parser)]
#[command(
    name = "cnd",
    version,
    about = "Canonical noise distributions and private two-sample tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Draw noise from a canonical noise distribution, one value per line.
    Sample {
        #[command(flatten)]
        noise: NoiseSpec,
        /// TOML file with the noise keys; flags override it.
        #[arg(long)]
        noise_config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one test on given counts and print its report as JSON.
    Test {
        #[arg(long)]
        method: MethodSpec,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        y: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, conflicts_with = "mu")]
        eps: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Defaults to a clock-derived seed, recorded in the report.
        #[arg(long)]
        seed: Option<u64>,
        /// Quadrature tolerance of the inversion test.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        corrected_variance: bool,
        /// Report the two-sided p-value 2 min(p, 1 - p).
        #[arg(long)]
        two_sided: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment and write CSV plus a JSON manifest.
    Simulate {
        /// TOML file with the simulation keys; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Manifest destination; defaults to `<out>.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Validate canonical noise identities, or a test function against a tradeoff.
    Check {
        /// Test function CSV to check against the noise given by the flags.
        #[arg(long)]
        testfn: Option<PathBuf>,
        #[command(flatten)]
        noise: NoiseSpec,
        #[arg(long)]
        noise_config: Option<PathBuf>,
    },
}

fn open_out(path: &Option<PathBuf>) -> cnd_sim::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn noise_spec(flags: NoiseSpec, file: &Option<PathBuf>) -> cnd_sim::Result<NoiseSpec> {
    Ok(match file {
        Some(p) => NoiseSpec::from_toml_file(p)?.merge(flags),
        None => flags,
    })
}

fn sample(
    noise: NoiseSpec,
    file: Option<PathBuf>,
    count: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> cnd_sim::Result<()> {
    let noise = noise_spec(noise, &file)?.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = open_out(&out)?;
    for _ in 0..count {
        writeln!(w, "{}", noise.sample(&mut rng)?)?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn test(
    method: MethodSpec,
    d: (u64, u64, u64, u64),
    eps: Option<f64>,
    mu: Option<f64>,
    seed: Option<u64>,
    tol: f64,
    corrected_variance: bool,
    two_sided_p: bool,
    out: Option<PathBuf>,
) -> cnd_sim::Result<()> {
    let data = TwoSampleData::new(d.0, d.1, d.2, d.3)?;
    let privacy = match (eps, mu) {
        (_, Some(mu)) => Privacy::Gdp(mu),
        (Some(eps), None) => Privacy::EpsDp(eps),
        (None, None) if matches!(method, MethodSpec::Classic | MethodSpec::NonprivateUmpu) => {
            Privacy::EpsDp(1.0)
        }
        (None, None) => {
            return Err(SimError::config(format!(
                "method `{method}` needs --eps or --mu"
            )))
        }
    };
    let opts = MethodOptions {
        privacy,
        quad_tol: tol,
        corrected_variance,
    };
    let seed = seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |t| t.as_nanos() as u64)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Runner::new(method, &opts)?.run(&data, &mut rng)?;
    report.seed = Some(seed);
    if two_sided_p {
        report.p_value = two_sided(report.p_value);
        report.params.insert("two_sided".into(), 1.0);
    }
    let mut w = open_out(&out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn simulate(
    config: Option<PathBuf>,
    overrides: ConfigOverrides,
    out: Option<PathBuf>,
    manifest: Option<PathBuf>,
) -> cnd_sim::Result<()> {
    let base = match &config {
        Some(p) => ConfigOverrides::from_toml_file(p)?,
        None => ConfigOverrides::default(),
    };
    let cfg = base.merge(overrides).finalize()?;
    let start = Instant::now();
    let table = cnd_sim::run(&cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    table.write_csv(open_out(&out)?)?;
    let manifest_path = manifest.or_else(|| {
        out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = manifest_path {
        let record = Manifest::new(
            &cfg,
            elapsed,
            table.len(),
            out.as_ref().map(|p| p.display().to_string()),
        );
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &record)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}

const IDENTITY_TOL: f64 = 1e-9;

fn check(testfn: Option<PathBuf>, noise: NoiseSpec, file: Option<PathBuf>) -> cnd_sim::Result<()> {
    if let Some(path) = testfn {
        let phi = read_testfn_file(&path)?;
        let spec = noise_spec(noise, &file)?;
        let f = spec.tradeoff()?;
        let direct = check_fdp(&phi, &f);
        let quantile = check_fdp_cnd(&phi, &CndDist::new(f)?)?;
        println!(
            "direct   max slack {:e} at {:?}: {}",
            direct.max_slack,
            direct.worst_pair,
            verdict(direct.passed())
        );
        println!(
            "quantile max slack {:e} at {:?}: {}",
            quantile.max_slack,
            quantile.worst_pair,
            verdict(quantile.passed())
        );
        return if direct.passed() {
            Ok(())
        } else {
            Err(SimError::CheckFailed(format!(
                "{} violates the f-DP constraints",
                path.display()
            )))
        };
    }
    let grid = default_alpha_grid();
    let mut failures = 0;
    let fs = [
        ("f(1,0)", TradeoffFn::eps_delta(1.0, 0.0)?),
        ("f(0.1,0)", TradeoffFn::eps_delta(0.1, 0.0)?),
        ("f(1,0.01)", TradeoffFn::eps_delta(1.0, 0.01)?),
        ("G(0.5)", TradeoffFn::gaussian(0.5)?),
        ("G(1)", TradeoffFn::gaussian(1.0)?),
        (
            "twofold f(1,0)",
            TradeoffFn::twofold(TradeoffFn::eps_delta(1.0, 0.0)?),
        ),
    ];
    for (name, f) in &fs {
        let r = identity_check(&CndDist::new(f.clone())?, f, &grid)?;
        let ok = r.tradeoff <= IDENTITY_TOL && r.symmetry <= 1e-12;
        failures += !ok as usize;
        println!(
            "{name:<16} tradeoff {:.2e} symmetry {:.2e}: {}",
            r.tradeoff,
            r.symmetry,
            verdict(ok)
        );
    }
    let base = CndDist::new(TradeoffFn::eps_delta(1.0, 0.0)?)?;
    let twofold = TradeoffFn::twofold(TradeoffFn::eps_delta(1.0, 0.0)?);
    let r = identity_check(
        &Scaled {
            inner: base,
            scale: 2.0,
        },
        &twofold,
        &grid,
    )?;
    let ok = r.tradeoff <= IDENTITY_TOL;
    failures += !ok as usize;
    println!(
        "{:<16} tradeoff {:.2e}: {}",
        "F(2x) twofold",
        r.tradeoff,
        verdict(ok)
    );
    for (eps, delta) in [(0.1, 0.0), (1.0, 0.0), (1.0, 0.01), (3.0, 0.05)] {
        let tulap = TulapDist::from_eps_delta(eps, delta)?;
        let cnd = CndDist::new(TradeoffFn::eps_delta(eps, delta)?)?;
        let gap = (-1000..=1000)
            .map(|i| {
                let x = i as f64 / 100.0;
                (tulap.cdf(x) - cnd.cdf(x)).abs()
            })
            .fold(0.0, f64::max);
        let ok = gap <= IDENTITY_TOL;
        failures += !ok as usize;
        println!(
            "Tulap({eps},{delta}) vs CND sup gap {gap:.2e}: {}",
            verdict(ok)
        );
    }
    if failures == 0 {
        Ok(())
    } else {
        Err(SimError::CheckFailed(format!(
            "{failures} identity checks failed"
        )))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample {
            noise,
            noise_config,
            count,
            seed,
            out,
        } => sample(noise, noise_config, count, seed, out),
        Command::Test {
            method,
            x,
            n,
            y,
            m,
            eps,
            mu,
            seed,
            tol,
            corrected_variance,
            two_sided,
            out,
        } => test(
            method,
            (x, n, y, m),
            eps,
            mu,
            seed,
            tol,
            corrected_variance,
            two_sided,
            out,
        ),
        Command::Simulate {
            config,
            overrides,
            out,
            manifest,
        } => simulate(config, overrides, out, manifest),
        Command::Check {
            testfn,
            noise,
            noise_config,
        } => check(testfn, noise, noise_config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
