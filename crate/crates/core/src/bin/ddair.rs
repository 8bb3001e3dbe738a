use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use ddair::channel::link::simulate_link;
use ddair::harness::config::{parse_list, ConfigFile};
use ddair::harness::oracle::run_oracle;
use ddair::harness::sweep::{evaluate_capture_point, evaluate_point, FiberPreset, PointOutcome, WORKERS_ENV};
use ddair::harness::{
    read_capture, read_params, run_sweep, write_capture, write_params, Capture, CaptureMeta, ParamFile, SweepConfig,
    SweepResult,
};
use ddair::Modulation;

/// Achievable rates of oversampled direct-detection links (ASK vs. PAM).
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one transmission and write it as a 2-SPS capture file.
    Simulate {
        #[command(flatten)]
        grid: GridArgs,
        /// Capture file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the auxiliary channel on the pilots and write a parameter file.
    Fit {
        #[command(flatten)]
        grid: GridArgs,
        /// Read samples from this capture instead of simulating them.
        #[arg(long)]
        capture: Option<PathBuf>,
        /// Parameter file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a single rate point and print it as a CSV row.
    Rate {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        capture: Option<PathBuf>,
        /// Use these parameters instead of fitting.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Run a grid of rate points and write CSV plus plot data.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare the forward recursion with brute-force enumeration.
    Oracle {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Flags mirroring the sweep configuration. Lists are comma-separated and
/// accept `start:step:stop` ranges. Precedence: flags, config file, preset,
/// built-in defaults.
#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Configuration file (INI-style `key = value`, keys named like the flags).
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig3a | fig3b | fig3c
    #[arg(long)]
    preset: Option<String>,
    /// e.g. ASK,PAM
    #[arg(long, alias = "modulation")]
    modulations: Option<String>,
    /// Constellation order Q.
    #[arg(long)]
    order: Option<usize>,
    /// Auxiliary tap counts L.
    #[arg(long, alias = "L")]
    taps: Option<String>,
    /// VOA attenuation grid in dB.
    #[arg(long)]
    attenuation: Option<String>,
    /// Symbols per rate point, pilots included.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    pilot_count: Option<usize>,
    #[arg(long, alias = "seed")]
    seeds: Option<String>,
    /// b2b | 20km
    #[arg(long)]
    fiber: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    launch_dbm: Option<f64>,
    /// Post-detection noise variance in mW^2.
    #[arg(long)]
    thermal_var: Option<f64>,
    /// Transmitter SNR in dB (omit for none).
    #[arg(long)]
    tx_snr_db: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Coordinate sweeps per restart.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Sweep CSV output (plot data goes next to it as .dat).
    #[arg(long)]
    output: Option<PathBuf>,
}

const CONFIG_KEYS: [&str; 16] = [
    "preset",
    "modulations",
    "order",
    "taps",
    "attenuation",
    "n",
    "pilot_count",
    "seeds",
    "fiber",
    "launch_dbm",
    "thermal_var",
    "tx_snr_db",
    "restarts",
    "iterations",
    "workers",
    "output",
];

fn list<T: std::str::FromStr>(key: &str, flag: &Option<String>, file: &ConfigFile) -> Result<Option<Vec<T>>> {
    match flag {
        Some(v) => Ok(Some(parse_list(v).map_err(|e| anyhow::anyhow!("--{key}: {e}"))?)),
        None => Ok(file.get_list(key)?),
    }
}

fn scalar<T: std::str::FromStr + Clone>(key: &str, flag: &Option<T>, file: &ConfigFile) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v.clone())),
        None => Ok(file.get(key)?),
    }
}

impl GridArgs {
    fn resolve(&self) -> Result<SweepConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ConfigFile::default(),
        };
        let unknown = file.unknown_keys(&CONFIG_KEYS);
        if !unknown.is_empty() {
            bail!("unknown configuration keys: {}", unknown.join(", "));
        }
        let mut cfg = match scalar::<String>("preset", &self.preset, &file)? {
            Some(p) => SweepConfig::preset(&p)?,
            None => SweepConfig::default(),
        };
        if let Some(v) = list::<String>("modulations", &self.modulations, &file)? {
            cfg.modulations = v.iter().map(|m| m.parse::<Modulation>()).collect::<Result<_, _>>()?;
        }
        if let Some(v) = scalar("order", &self.order, &file)? {
            cfg.order = v;
        }
        if let Some(v) = list("taps", &self.taps, &file)? {
            cfg.taps = v;
        }
        if let Some(v) = list("attenuation", &self.attenuation, &file)? {
            cfg.attenuations = v;
        }
        if let Some(v) = scalar("n", &self.n, &file)? {
            cfg.n = v;
        }
        if let Some(v) = scalar("pilot_count", &self.pilot_count, &file)? {
            cfg.pilot_count = v;
        }
        if let Some(v) = list("seeds", &self.seeds, &file)? {
            cfg.seeds = v;
        }
        if let Some(v) = scalar::<String>("fiber", &self.fiber, &file)? {
            cfg.fiber = v.parse::<FiberPreset>()?;
        }
        if let Some(v) = scalar("launch_dbm", &self.launch_dbm, &file)? {
            cfg.launch_dbm = v;
        }
        if let Some(v) = scalar("thermal_var", &self.thermal_var, &file)? {
            cfg.thermal_var = v;
        }
        if let Some(v) = scalar("tx_snr_db", &self.tx_snr_db, &file)? {
            cfg.tx_snr_db = Some(v);
        }
        if let Some(v) = scalar("restarts", &self.restarts, &file)? {
            cfg.fit.restarts = v;
        }
        if let Some(v) = scalar("iterations", &self.iterations, &file)? {
            cfg.fit.max_iterations = v;
        }
        if let Some(v) = scalar("workers", &self.workers, &file)? {
            cfg.workers = v;
        }
        if let Some(v) = scalar("output", &self.output, &file)? {
            cfg.output = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration that must describe exactly one rate point.
    fn single(&self) -> Result<(SweepConfig, ddair::harness::RatePoint)> {
        let cfg = self.resolve()?;
        let points = cfg.points();
        if points.len() != 1 {
            bail!(
                "expected a single rate point, the flags describe {} (give one modulation, L, attenuation and seed)",
                points.len()
            );
        }
        Ok((cfg, points[0]))
    }
}

fn print_rows(rows: &[ddair::harness::SweepRow]) -> Result<()> {
    SweepResult { rows: rows.to_vec() }.write_csv(std::io::stdout().lock())?;
    Ok(())
}

fn load_capture(path: &Path) -> Result<Capture> {
    read_capture(path).with_context(|| format!("reading capture {}", path.display()))
}

fn outcome(
    grid: &GridArgs,
    capture: &Option<PathBuf>,
    params: Option<&ddair::AuxChannelParams>,
) -> Result<(SweepConfig, PointOutcome)> {
    let (cfg, point) = grid.single()?;
    let out = match capture {
        Some(path) => evaluate_capture_point(&cfg, &point, &load_capture(path)?, params),
        None => evaluate_point(&cfg, &point, params),
    };
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate { grid, out } => {
            let (cfg, point) = grid.single()?;
            let t = simulate_link(&cfg.link(point.modulation, point.attenuation_db)?, cfg.n, point.seed)?;
            let capture = Capture::new(
                CaptureMeta::two_sps(cfg.link(point.modulation, 0.0)?.pulse.symbol_rate),
                t.received.into_samples(),
            )?;
            write_capture(&out, &capture)?;
            eprintln!(
                "wrote {} samples of {} to {}",
                capture.sample_count(),
                point.fit_id(cfg.order),
                out.display()
            );
            Ok(true)
        }
        Command::Fit { grid, capture, out } => {
            let (_, o) = outcome(&grid, &capture, None)?;
            let Some(fit) = o.fit else {
                bail!("{}: {}", o.row.fit_id, o.row.status);
            };
            let file = ParamFile::new(fit.params.clone())
                .with_meta("fit_id", &o.row.fit_id)
                .with_meta("pilot_air_bpcu", fit.pilot_air)
                .with_meta("holdout_air_bpcu", o.row.air_bpcu.unwrap_or(f64::NAN))
                .with_meta("initializer", &fit.initializer)
                .with_meta("converged", fit.converged);
            write_params(&out, &file)?;
            for w in &fit.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!(
                "{}: pilot AIR {:.4} bpcu ({} evaluations), holdout {:.4} bpcu -> {}",
                o.row.fit_id,
                fit.pilot_air,
                fit.evaluations,
                o.row.air_bpcu.unwrap_or(f64::NAN),
                out.display()
            );
            Ok(true)
        }
        Command::Rate { grid, capture, params } => {
            let params = params
                .map(|p| read_params(&p).with_context(|| format!("reading {}", p.display())))
                .transpose()?;
            let (_, o) = outcome(&grid, &capture, params.as_ref().map(|f| &f.params))?;
            print_rows(std::slice::from_ref(&o.row))?;
            Ok(o.row.is_ok())
        }
        Command::Sweep { grid } => {
            let cfg = grid.resolve()?;
            let result = run_sweep(&cfg)?;
            match &cfg.output {
                Some(path) => eprintln!("wrote {} rows to {}", result.rows.len(), path.display()),
                None => print_rows(&result.rows)?,
            }
            let failed = result.failed().count();
            if failed > 0 {
                eprintln!("{failed} rate point(s) failed");
            }
            Ok(failed == 0)
        }
        Command::Oracle { instances, seed } => {
            let cases = run_oracle(instances, seed)?;
            let mut out = std::io::stdout().lock();
            let mut worst: f64 = 0.0;
            for c in &cases {
                worst = worst.max(c.relative_error());
                writeln!(
                    out,
                    "{:6} n={} L={}  forward {:+.12e}  brute force {:+.12e}  rel err {:.1e}",
                    c.constellation,
                    c.n,
                    c.taps,
                    c.forward,
                    c.brute_force,
                    c.relative_error()
                )?;
            }
            writeln!(out, "worst relative error {worst:.2e} over {} instances", cases.len())?;
            Ok(worst <= 1e-10)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
