//! `bilip`: runs the experiments of `bilip-core` and writes their data files.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use output::{Manifest, Output};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<bilip_core::Error> for CliError {
    fn from(e: bilip_core::Error) -> Self {
        match e {
            bilip_core::Error::Validation(m) => CliError::Validation(m),
            bilip_core::Error::Parse { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

const EXIT_BOUND_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "bilip", version, about = "Numerical experiments on complex surface germs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Distortion bounds of the covering maps (Brieskorn germs)
    Distortion,
    /// Region labels of sampled points (Brieskorn germs)
    Regions,
    /// Tube radius around the branch lines (Brieskorn germs)
    Tube,
    /// Volume growth in small balls
    Density,
    /// Conflict set of the axes on A_k
    Conflict,
    /// Conflict sets on the Briançon-Speder family
    Bs,
    /// Sample points of a germ in an annulus
    Sample,
    /// Re-run the experiment recorded in a manifest
    Replay,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Distortion => "distortion",
            Command::Regions => "regions",
            Command::Tube => "tube",
            Command::Density => "density",
            Command::Conflict => "conflict",
            Command::Bs => "bs",
            Command::Sample => "sample",
            Command::Replay => "replay",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        [
            Command::Distortion,
            Command::Regions,
            Command::Tube,
            Command::Density,
            Command::Conflict,
            Command::Bs,
            Command::Sample,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }

    fn default_family(self) -> &'static str {
        match self {
            Command::Conflict => "ak",
            Command::Bs => "bs",
            _ => "brieskorn",
        }
    }
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// Config file of `key = value` lines; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Manifest to replay
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Germ family: brieskorn, ak, bs, horn, smooth
    #[arg(long, global = true)]
    germ: Option<String>,
    #[arg(long, global = true)]
    a: Option<String>,
    #[arg(long, global = true)]
    b: Option<String>,
    #[arg(long, global = true)]
    k: Option<String>,
    /// Briançon-Speder parameter: `re`, `re,im` or `i`
    #[arg(long, global = true, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long, global = true)]
    q: Option<String>,
    #[arg(long, global = true)]
    eps_min: Option<String>,
    #[arg(long, global = true)]
    eps_max: Option<String>,
    #[arg(long, global = true)]
    eps_steps: Option<String>,
    /// Sample budget
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    delta: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Metric for conflict sets: inner or outer
    #[arg(long, global = true)]
    mode: Option<String>,
    /// First curve, `re im e; ... | ... | ...`
    #[arg(long, global = true, allow_hyphen_values = true)]
    curve1: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    curve2: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Opts {
    fn overrides(&self) -> BTreeMap<String, String> {
        let pairs: [(&str, &Option<String>); 16] = [
            ("germ", &self.germ),
            ("a", &self.a),
            ("b", &self.b),
            ("k", &self.k),
            ("t", &self.t),
            ("p", &self.p),
            ("q", &self.q),
            ("eps_min", &self.eps_min),
            ("eps_max", &self.eps_max),
            ("eps_steps", &self.eps_steps),
            ("n", &self.n),
            ("delta", &self.delta),
            ("seed", &self.seed),
            ("mode", &self.mode),
            ("curve1", &self.curve1),
            ("curve2", &self.curve2),
        ];
        let mut map: BTreeMap<String, String> =
            pairs.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect();
        if let Some(out) = &self.out {
            map.insert("out".into(), out.display().to_string());
        }
        map
    }
}

fn resolve(cli: &Cli) -> Result<(Command, ExperimentConfig), CliError> {
    let (command, mut map) = match cli.command {
        Command::Replay => {
            let path = cli.opts.manifest.as_ref().ok_or_else(|| CliError::Validation("replay needs --manifest".into()))?;
            let m = Manifest::read(path)?;
            let cmd = Command::from_name(&m.command)
                .ok_or_else(|| CliError::Validation(format!("manifest names unknown command '{}'", m.command)))?;
            (cmd, m.config)
        }
        cmd => {
            let map = match &cli.opts.config {
                Some(path) => config::parse_file(
                    &std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
                )?,
                None => BTreeMap::new(),
            };
            (cmd, map)
        }
    };
    map.extend(cli.opts.overrides());
    let cfg = ExperimentConfig::from_map(&map, command.default_family())?;
    Ok((command, cfg))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let start = Instant::now();
    let (command, cfg) = resolve(cli)?;
    let threads = match cli.opts.threads {
        Some(0) => return Err(CliError::Validation("--threads must be positive".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Io(e.to_string()))?;
    let mut out = Output::create(&cfg.out)?;
    let violated = pool.install(|| match command {
        Command::Distortion => commands::distortion(&cfg, &mut out),
        Command::Regions => commands::regions(&cfg, &mut out),
        Command::Tube => commands::tube(&cfg, &mut out),
        Command::Density => commands::density(&cfg, &mut out),
        Command::Conflict => commands::conflict(&cfg, &mut out),
        Command::Bs => commands::bs(&cfg, &mut out),
        Command::Sample => commands::sample(&cfg, &mut out),
        Command::Replay => unreachable!("replay resolves to the recorded command"),
    })?;
    let exit_code = if violated { EXIT_BOUND_VIOLATION } else { 0 };
    let mut manifest = Manifest {
        command: command.name().to_string(),
        config: cfg.resolved.clone(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        files: Vec::new(),
        exit_code: exit_code as i32,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.finish(&mut manifest)?;
    if violated {
        eprintln!("bound violated; see {}", cfg.out.display());
    }
    Ok(exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
