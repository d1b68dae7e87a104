use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use convexq::body::DEFAULT_PD_EPS;
use convexq::inequality::CircleMeasure;
use convexq::suite::{self, BodySpec, RunConfig, Suite};
use convexq::{Error, Execution};

const EXIT_PRECONDITION: u8 = 1;
const EXIT_CERTIFICATION: u8 = 2;
const EXIT_VERDICT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "convexq", version, about = "Quermassintegrals and Brunn-Minkowski / Poincaré inequality checks for smooth convex bodies")]
struct Cli {
    /// Ambient dimension.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Trapezoid nodes (n=2), Gauss-Legendre latitudes (n=3) or Monte Carlo samples (n>=4).
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Verdict tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Body specification file (TOML or JSON).
    #[arg(long, global = true)]
    body: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run configuration file (TOML or JSON); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Measure on the circle for the wirtinger and area-measure suites.
    #[arg(long, global = true)]
    measure: Option<PathBuf>,
    /// Disable node-parallel quadrature.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify a body as C²₊ and print the certificate.
    Body,
    /// Table of quermassintegrals W_0..W_{n-1} with the Steiner residual.
    Quermass,
    /// Run an inequality suite and write JSON and CSV reports.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
    },
    /// Identity suite, quadrature exactness and a convergence table.
    Selfcheck,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NotCertified { .. }) => EXIT_CERTIFICATION,
        _ => EXIT_PRECONDITION,
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<(RunConfig, Option<BodySpec>)> {
    let mut cfg: RunConfig = match &cli.config {
        Some(path) => suite::read_spec(path)?,
        None => RunConfig::default(),
    };
    let body: Option<BodySpec> = match &cli.body {
        Some(path) => Some(suite::read_spec(path)?),
        None => None,
    };
    match (cli.n, body.as_ref().and_then(BodySpec::natural_dim)) {
        (Some(n), _) => cfg.n = n,
        (None, Some(n)) if cli.config.is_none() => cfg.n = n,
        _ => {}
    }
    if cfg.n < 2 {
        return Err(Error::Spec(format!("n = {} < 2", cfg.n)).into());
    }
    if cli.resolution.is_some() {
        cfg.resolution = cli.resolution;
    }
    if cli.tol.is_some() {
        cfg.tolerance = cli.tol;
    }
    if let Some(tol) = cfg.tolerance.filter(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Spec(format!("tolerance {tol} must be finite and nonnegative")).into());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.sequential {
        cfg.execution = Execution::Sequential;
    }
    if let Some(b) = &body {
        cfg.bodies = vec![b.clone()];
    }
    if let Some(path) = &cli.measure {
        let nu: CircleMeasure = suite::read_spec(path)?;
        nu.validate()?;
        cfg.measures = vec![nu];
    }
    Ok((cfg, body))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let (cfg, body) = load_config(cli)?;
    match &cli.command {
        Command::Body => {
            let spec = body.context("`body` needs --body <file>").map_err(|e| Error::Spec(e.to_string()))?;
            let h = spec.build(cfg.n)?;
            let cert = h.validate_c2plus(&cfg.rule()?, DEFAULT_PD_EPS)?;
            let json = serde_json::to_string_pretty(&cert)?;
            println!("{json}");
            if let Some(dir) = &cli.out {
                write_out(dir, "body.json", &json)?;
            }
            Ok(if cert.pass { 0 } else { EXIT_CERTIFICATION })
        }
        Command::Quermass => {
            let spec = body.unwrap_or(BodySpec::Ball { radius: 1.0 });
            let h = spec.build(cfg.n)?;
            let table = suite::quermass_table(&h, &cfg.rule()?)?;
            let csv = table.to_csv();
            print!("{csv}");
            if let Some(dir) = &cli.out {
                write_out(dir, "quermass.csv", &csv)?;
            }
            Ok(0)
        }
        Command::Verify { suite: name } => {
            let reports = suite::run_suite(*name, &cfg)?;
            if let Some(dir) = &cli.out {
                suite::write_reports(dir, *name, &reports)?;
            }
            let summary = suite::summarize(*name, &reports);
            println!("{}", summary.line(&reports));
            Ok(if summary.all_pass() { 0 } else { EXIT_VERDICT })
        }
        Command::Selfcheck => {
            let report = suite::selfcheck(cfg.seed)?;
            println!("symmfunc identities: worst relative residual {:e}", report.identity_residual);
            for (rule, r) in &report.weight_residuals {
                println!("weights {rule}: |sum - area| = {r:e}");
            }
            println!("quadrature exactness: worst error {:e}", report.exactness_residual);
            let mut csv = String::from("resolution,nodes,error,order\n");
            for row in &report.convergence {
                csv.push_str(&format!(
                    "{},{},{:e},{}\n",
                    row.resolution,
                    row.nodes,
                    row.error,
                    row.order.map_or(String::new(), |o| format!("{o:.2}"))
                ));
            }
            print!("{csv}");
            if let Some(dir) = &cli.out {
                write_out(dir, "selfcheck.json", &serde_json::to_string_pretty(&report)?)?;
                write_out(dir, "convergence.csv", &csv)?;
            }
            let ok = report.identity_residual <= 1e-10
                && report.weight_residuals.iter().all(|(_, r)| *r <= 1e-12)
                && report.exactness_residual <= 1e-12;
            Ok(if ok { 0 } else { EXIT_VERDICT })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { EXIT_PRECONDITION } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
