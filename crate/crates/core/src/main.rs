use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use kplab::checks::CheckParams;
use kplab::cli::{self, DatumSpec, GridConfig, MakeData, RunContext, RunKind};
use kplab::report::{to_json, Format, Manifest, OutDir};
use kplab::{KpError, Result};

#[derive(Parser)]
#[command(name = "kplab", version, about = "KP-II pseudo-spectral laboratory")]
struct Args {
    /// JSON configuration file for `run`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; falls back to KPLAB_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Fmt,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a datum: a snapshot on a grid, or the two-box ill-posedness datum.
    MakeData {
        #[arg(value_enum)]
        kind: DataKind,
        #[arg(long, default_value_t = 32)]
        modes: usize,
        #[arg(long, default_value_t = 4.0 * std::f64::consts::PI)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long, default_value_t = 0.3)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        lam: f64,
        #[arg(long, num_args = 2, default_values_t = [0i64, 0])]
        k: Vec<i64>,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        mu: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
    },
    /// Run one named verification check.
    Verify {
        check: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        configs: Option<usize>,
        #[arg(long)]
        lam: Option<f64>,
    },
    /// Run an experiment described by `--config`.
    Run {
        #[arg(value_enum)]
        what: What,
    },
    /// Sector norms of a saved snapshot.
    Norms {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Gaussian,
    Sector,
    Illposed,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Sim,
    Picard,
    Scatter,
    IllposedSweep,
    Norms,
    SpacesLab,
}

fn threads(a: Option<usize>) -> Result<usize> {
    let n = match a {
        Some(n) => Some(n),
        None => match std::env::var("KPLAB_THREADS") {
            Ok(s) => Some(s.parse().map_err(|_| KpError::Config(format!("KPLAB_THREADS={s:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(KpError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| KpError::Config(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match go(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kplab: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

fn go(a: Args) -> Result<bool> {
    let nthreads = threads(a.threads)?;
    let format = match a.format {
        Fmt::Json => Format::Json,
        Fmt::Csv => Format::Csv,
    };
    let config = match &a.config {
        Some(p) => std::fs::read(p)?,
        None => vec![],
    };
    match a.cmd {
        Cmd::MakeData { kind, modes, length, width, amplitude, lam, k, mu, p } => {
            let grid = GridConfig { modes: [modes; 3], lengths: [length; 3], dealias: true };
            let spec = match kind {
                DataKind::Gaussian => {
                    MakeData::Field { grid, datum: DatumSpec::Gaussian { widths: [width; 3], center: None, amplitude } }
                }
                DataKind::Sector => MakeData::Field { grid, datum: DatumSpec::Sector { lam, k: [k[0], k[1]] } },
                DataKind::Illposed => MakeData::Illposed { mu, lam, p },
            };
            let target = if a.out.extension().is_some() {
                a.out.clone()
            } else {
                std::fs::create_dir_all(&a.out)?;
                a.out.join(if matches!(kind, DataKind::Illposed) { "illposed.json" } else { "datum.kp3f" })
            };
            let v = cli::make_data(&spec, &target)?;
            println!("{}", to_json(&v)?);
            Ok(true)
        }
        Cmd::Verify { check, samples, configs, lam } => {
            let params = CheckParams {
                seed: a.seed.unwrap_or(CheckParams::default().seed),
                count: samples.or(configs),
                lam: lam.unwrap_or(CheckParams::default().lam),
            };
            let t = std::time::Instant::now();
            let r = cli::verify(&check, &params)?;
            let mut out = OutDir::create(&a.out)?;
            let mut rec = r.clone();
            rec.seconds = 0.0;
            out.json(&format!("verify-{check}.json"), &rec)?;
            let mut m = Manifest::new(&format!("verify {check}"), &config, params.seed, nthreads);
            m.status = if r.pass { "pass" } else { "tolerance-failure" }.into();
            m.outputs = out.written().to_vec();
            m.wall_clock_seconds = t.elapsed().as_secs_f64();
            out.json("manifest.json", &m)?;
            println!("{} {}: metric {:e} ({})", if r.pass { "PASS" } else { "FAIL" }, r.name, r.metric, r.tolerance);
            Ok(r.pass)
        }
        Cmd::Run { what } => {
            let kind = match what {
                What::Sim => RunKind::Sim,
                What::Picard => RunKind::Picard,
                What::Scatter => RunKind::Scatter,
                What::IllposedSweep => RunKind::IllposedSweep,
                What::Norms => RunKind::Norms,
                What::SpacesLab => RunKind::SpacesLab,
            };
            let ctx = RunContext { config: &config, seed: a.seed, out: &a.out, format, threads: nthreads };
            let o = cli::run(kind, &ctx)?;
            println!("{}: {}", kind.name(), if o.pass { "pass" } else { "tolerance failure" });
            Ok(o.pass)
        }
        Cmd::Norms { input } => {
            let cfg = serde_json::to_vec(&cli::NormsRun { input: Some(input), ..Default::default() })
                .map_err(|e| KpError::Format(e.to_string()))?;
            let ctx = RunContext { config: &cfg, seed: None, out: &a.out, format, threads: nthreads };
            let o = cli::run(RunKind::Norms, &ctx)?;
            println!("{}", to_json(&o.summary)?);
            Ok(o.pass)
        }
    }
}
