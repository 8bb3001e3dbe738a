//! Rate-point evaluation and attenuation sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::capture::Capture;
use super::resample::{interpolate, resample_to_2sps};
use super::sync::synchronize;
use crate::air::{TrellisSpec, DEFAULT_TRELLIS_BUDGET};
use crate::channel::link::{simulate_link, LinkConfig, Transmission};
use crate::channel::FiberParams;
use crate::constellation::{Constellation, Modulation, SymbolBlock};
use crate::density::{AuxChannelParams, AuxLikelihood};
use crate::error::{Error, Result};
use crate::fit::{cross_validate, fit, DataBlock, FitConfig, FitResult};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "DDAIR_WORKERS";
/// Fewest holdout symbols a rate point may be evaluated on.
pub const MIN_HOLDOUT: usize = 500;

/// Worker count from `DDAIR_WORKERS`, else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiberPreset {
    BackToBack,
    Ssmf20,
}

impl FiberPreset {
    pub fn params(self) -> FiberParams {
        match self {
            FiberPreset::BackToBack => FiberParams::back_to_back(),
            FiberPreset::Ssmf20 => FiberParams::ssmf(20.0),
        }
    }
}

impl fmt::Display for FiberPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FiberPreset::BackToBack => "b2b",
            FiberPreset::Ssmf20 => "20km",
        })
    }
}

impl FromStr for FiberPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "b2b" | "back-to-back" => Ok(FiberPreset::BackToBack),
            "20km" | "ssmf20" | "ssmf" => Ok(FiberPreset::Ssmf20),
            other => Err(Error::Parse(format!("unknown fiber preset '{other}' (b2b | 20km)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub modulations: Vec<Modulation>,
    pub order: usize,
    /// Auxiliary tap counts `L`.
    pub taps: Vec<usize>,
    /// VOA settings in dB.
    pub attenuations: Vec<f64>,
    /// Symbols per rate point, pilots included.
    pub n: usize,
    pub pilot_count: usize,
    pub seeds: Vec<u64>,
    pub fiber: FiberPreset,
    pub launch_dbm: f64,
    /// Post-detection noise variance, mW^2.
    pub thermal_var: f64,
    /// Transmitter noise relative to the launch power, dB.
    pub tx_snr_db: Option<f64>,
    /// Search settings; `taps`, `pilot_count` and `seed` are set per point.
    pub fit: FitConfig,
    pub workers: usize,
    /// CSV destination; the plot data goes next to it with extension `dat`.
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            modulations: vec![Modulation::Ask, Modulation::Pam],
            order: 4,
            taps: vec![3],
            attenuations: vec![0.0],
            n: 10_000,
            pilot_count: 5_000,
            seeds: vec![1],
            fiber: FiberPreset::BackToBack,
            launch_dbm: -3.2,
            thermal_var: 1e-3,
            tx_snr_db: None,
            fit: FitConfig::default(),
            workers: default_workers(),
            output: None,
        }
    }
}

impl SweepConfig {
    /// `fig3a` (B2B, Q=4), `fig3b` (20 km, Q=4) or `fig3c` (B2B, Q=8).
    pub fn preset(name: &str) -> Result<Self> {
        let grid = |hi: usize| (0..=hi).map(|a| a as f64).collect::<Vec<_>>();
        let base = Self::default();
        match name.trim().to_ascii_lowercase().as_str() {
            "fig3a" => Ok(Self {
                taps: vec![3, 7, 11],
                attenuations: grid(11),
                ..base
            }),
            "fig3b" => Ok(Self {
                taps: vec![3, 7, 11],
                attenuations: grid(8),
                fiber: FiberPreset::Ssmf20,
                ..base
            }),
            "fig3c" => Ok(Self {
                order: 8,
                taps: vec![3, 5, 7],
                attenuations: grid(11),
                launch_dbm: -5.0,
                ..base
            }),
            other => Err(Error::Parse(format!(
                "unknown preset '{other}' (fig3a | fig3b | fig3c)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |what: &str| Err(Error::InvalidParameter(format!("{what} must not be empty")));
        if self.modulations.is_empty() {
            return empty("constellation list");
        }
        if self.taps.is_empty() {
            return empty("L list");
        }
        if self.attenuations.is_empty() {
            return empty("attenuation grid");
        }
        if self.seeds.is_empty() {
            return empty("seed list");
        }
        Constellation::new(Modulation::Pam, self.order)?;
        if let Some(l) = self.taps.iter().find(|&&l| l % 2 == 0) {
            return Err(Error::InvalidParameter(format!("tap count must be odd, got {l}")));
        }
        if self.pilot_count == 0 || self.n < self.pilot_count + MIN_HOLDOUT {
            return Err(Error::InvalidParameter(format!(
                "n = {} must cover {} pilots plus at least {MIN_HOLDOUT} holdout symbols",
                self.n, self.pilot_count
            )));
        }
        if self.attenuations.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::InvalidParameter(
                "attenuations must be non-negative dB values".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("worker count must be positive".into()));
        }
        self.link(Modulation::Pam, 0.0)?.validate()
    }

    pub fn constellations(&self) -> Result<Vec<Constellation>> {
        self.modulations
            .iter()
            .map(|&m| Constellation::new(m, self.order))
            .collect()
    }

    /// Link for one constellation and VOA setting.
    pub fn link(&self, kind: Modulation, attenuation_db: f64) -> Result<LinkConfig> {
        let mut link = LinkConfig::new(
            Constellation::new(kind, self.order)?,
            self.fiber.params().with_voa(attenuation_db),
        );
        link.launch_dbm = self.launch_dbm;
        link.thermal_var = self.thermal_var;
        link.tx_snr_db = self.tx_snr_db;
        Ok(link)
    }

    /// Every (constellation, L, attenuation, seed) tuple, in row order.
    pub fn points(&self) -> Vec<RatePoint> {
        let mut out = Vec::new();
        for &modulation in &self.modulations {
            for &taps in &self.taps {
                for &attenuation_db in &self.attenuations {
                    for &seed in &self.seeds {
                        out.push(RatePoint {
                            modulation,
                            taps,
                            attenuation_db,
                            seed,
                        });
                    }
                }
            }
        }
        out
    }

    fn fit_config(&self, point: &RatePoint) -> FitConfig {
        FitConfig {
            taps: point.taps,
            pilot_count: self.pilot_count,
            seed: point.seed,
            ..self.fit.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub modulation: Modulation,
    pub taps: usize,
    pub attenuation_db: f64,
    pub seed: u64,
}

impl RatePoint {
    /// E.g. `4-PAM-L3-att2-s7`.
    pub fn fit_id(&self, order: usize) -> String {
        format!(
            "{order}-{}-L{}-att{}-s{}",
            self.modulation, self.taps, self.attenuation_db, self.seed
        )
    }
}

/// One CSV row; failed points carry no rates and an error status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub constellation: Modulation,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "attenuation_dB")]
    pub attenuation_db: f64,
    #[serde(rename = "launch_power_dBm")]
    pub launch_power_dbm: f64,
    pub air_bpcu: Option<f64>,
    pub pilot_air_bpcu: Option<f64>,
    pub n: usize,
    pub seed: u64,
    pub fit_id: String,
    pub status: String,
}

/// Column order of the CSV.
pub const CSV_COLUMNS: [&str; 11] = [
    "constellation",
    "Q",
    "L",
    "attenuation_dB",
    "launch_power_dBm",
    "air_bpcu",
    "pilot_air_bpcu",
    "n",
    "seed",
    "fit_id",
    "status",
];

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// A rate point's row together with the fit that produced it.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub row: SweepRow,
    pub fit: Option<FitResult>,
}

fn row(cfg: &SweepConfig, point: &RatePoint, rates: std::result::Result<(f64, f64), String>) -> SweepRow {
    let (air, pilot, status) = match rates {
        Ok((a, p)) => (Some(a), Some(p), "ok".to_string()),
        Err(e) => (None, None, format!("failed: {e}")),
    };
    SweepRow {
        constellation: point.modulation,
        q: cfg.order,
        l: point.taps,
        attenuation_db: point.attenuation_db,
        launch_power_dbm: cfg.launch_dbm,
        air_bpcu: air,
        pilot_air_bpcu: pilot,
        n: cfg.n,
        seed: point.seed,
        fit_id: point.fit_id(cfg.order),
        status,
    }
}

/// Splits 2-SPS samples into pilot and holdout blocks.
pub fn split_blocks(
    samples: &[f64],
    symbols: &SymbolBlock,
    stream: u64,
    pilots: usize,
) -> Result<(DataBlock, DataBlock)> {
    let n = symbols.len();
    if pilots >= n {
        return Err(Error::InvalidParameter(format!(
            "{pilots} pilots leave no holdout out of {n} symbols"
        )));
    }
    Ok((
        DataBlock::slice(samples, symbols, stream, 0, pilots)?,
        DataBlock::slice(samples, symbols, stream, pilots, n - pilots)?,
    ))
}

fn transmission(cfg: &SweepConfig, point: &RatePoint) -> Result<Transmission> {
    // Fail fast on an infeasible trellis, before simulating.
    TrellisSpec::new(cfg.order, point.taps, DEFAULT_TRELLIS_BUDGET)?;
    simulate_link(&cfg.link(point.modulation, point.attenuation_db)?, cfg.n, point.seed)
}

fn fit_and_rate(
    cfg: &SweepConfig,
    point: &RatePoint,
    samples: &[f64],
    t: &Transmission,
    params: Option<&AuxChannelParams>,
) -> Result<(f64, f64, Option<FitResult>)> {
    let (pilots, holdout) = split_blocks(samples, &t.symbols, point.seed, cfg.pilot_count.min(t.symbols.len()))?;
    let lik = AuxLikelihood::default();
    match params {
        Some(p) => {
            let air = cross_validate(p, &pilots.id, &holdout, &lik)?.air;
            let pilot = crate::air::estimate_air(&pilots.samples, &pilots.symbols, p, &lik, &pilots.context)?.air;
            Ok((air, pilot, None))
        }
        None => {
            let f = fit(&pilots, &t.prior, &cfg.fit_config(point), &lik)?;
            let air = cross_validate(&f.params, &f.pilot_block, &holdout, &lik)?.air;
            Ok((air, f.pilot_air, Some(f)))
        }
    }
}

/// Simulates, fits on the pilots (or uses `params`) and rates the holdout.
pub fn evaluate_point(cfg: &SweepConfig, point: &RatePoint, params: Option<&AuxChannelParams>) -> PointOutcome {
    let result = transmission(cfg, point).and_then(|t| fit_and_rate(cfg, point, t.received.samples(), &t, params));
    match result {
        Ok((air, pilot, fit)) => PointOutcome {
            row: row(cfg, point, Ok((air, pilot))),
            fit,
        },
        Err(e) => PointOutcome {
            row: row(cfg, point, Err(e.to_string())),
            fit: None,
        },
    }
}

/// One sweep row from a simulated transmission; errors mark the row failed.
pub fn run_rate_point(cfg: &SweepConfig, point: &RatePoint) -> SweepRow {
    evaluate_point(cfg, point, None).row
}

/// Brings a capture onto the `T/2` grid of the transmission regenerated from
/// the point's seed: the noiseless intensity of the transmission is the
/// pilot waveform for synchronization.
pub fn align_capture(capture: &Capture, t: &Transmission) -> Result<Vec<f64>> {
    let meta = capture.meta;
    let y = capture.intensities();
    let n = t.symbols.len();
    if meta.aligned && (meta.sample_rate - 2.0 * meta.symbol_rate).abs() <= 1e-9 * meta.sample_rate {
        if y.len() < 2 * n {
            return Err(Error::LengthMismatch {
                what: "aligned capture vs. 2 x symbols",
                expected: 2 * n,
                got: y.len(),
            });
        }
        return Ok(y[..2 * n].to_vec());
    }
    // Pilot waveform at the capture rate from the band-limited field.
    let step = meta.sample_rate / (2.0 * meta.symbol_rate);
    let re: Vec<f64> = t.field.iter().map(|v| v.re).collect();
    let im: Vec<f64> = t.field.iter().map(|v| v.im).collect();
    let len = ((2 * n) as f64 * step) as usize;
    // The first kernel half-width of the field is not interpolable; offset
    // the waveform accordingly.
    let lead = (0..len)
        .find(|&j| interpolate(&re, j as f64 / step).is_some())
        .unwrap_or(0);
    let pilot: Vec<f64> = (lead..len)
        .map_while(|j| {
            let x = j as f64 / step;
            Some(Complex64::new(interpolate(&re, x)?, interpolate(&im, x)?).norm_sqr())
        })
        .collect();
    let pilot = &pilot[..pilot.len().min(y.len())];
    let s = synchronize(&y, pilot)?;
    let delay = s.delay() - lead as f64;
    let r = resample_to_2sps(&y, meta.sample_rate, meta.symbol_rate, delay, Some(n))?;
    if r.leading_trim > 0 || r.samples.len() < 2 * n {
        return Err(Error::InvalidParameter(format!(
            "capture does not cover all {n} symbols around the synchronized position ({} samples trimmed)",
            r.trimmed()
        )));
    }
    Ok(r.samples)
}

/// Rate point from a recorded capture of the transmission with `point.seed`.
pub fn evaluate_capture_point(
    cfg: &SweepConfig,
    point: &RatePoint,
    capture: &Capture,
    params: Option<&AuxChannelParams>,
) -> PointOutcome {
    let result = transmission(cfg, point).and_then(|t| {
        let samples = align_capture(capture, &t)?;
        fit_and_rate(cfg, point, &samples, &t, params)
    });
    match result {
        Ok((air, pilot, fit)) => PointOutcome {
            row: row(cfg, point, Ok((air, pilot))),
            fit,
        },
        Err(e) => PointOutcome {
            row: row(cfg, point, Err(e.to_string())),
            fit: None,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Attenuation at which a decreasing rate curve first drops to `rate`,
/// linearly interpolated; `None` if it never crosses.
pub fn crossing(curve: &[(f64, f64)], rate: f64) -> Option<f64> {
    curve.windows(2).find_map(|w| {
        let ((a0, r0), (a1, r1)) = (w[0], w[1]);
        (r0 >= rate && r1 < rate).then(|| a0 + (r0 - rate) / (r0 - r1) * (a1 - a0))
    })
}

/// Extra attenuation curve `a` tolerates over curve `b` at `rate`, in dB.
pub fn horizontal_gain(a: &[(f64, f64)], b: &[(f64, f64)], rate: f64) -> Option<f64> {
    Some(crossing(a, rate)? - crossing(b, rate)?)
}

impl SweepResult {
    /// (attenuation, mean AIR over seeds) for one series, sorted by attenuation.
    pub fn series(&self, modulation: Modulation, taps: usize) -> Vec<(f64, f64)> {
        let mut acc: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
        for r in self
            .rows
            .iter()
            .filter(|r| r.constellation == modulation && r.l == taps)
        {
            if let Some(air) = r.air_bpcu {
                // Attenuations are non-negative, so the bit pattern orders them.
                let e = acc
                    .entry(r.attenuation_db.to_bits())
                    .or_insert((r.attenuation_db, 0.0, 0));
                e.1 += air;
                e.2 += 1;
            }
        }
        acc.into_values().map(|(a, s, c)| (a, s / c as f64)).collect()
    }

    pub fn failed(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| !r.is_ok())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut input = csv::Reader::from_reader(r);
        let header: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
        if header != CSV_COLUMNS {
            return Err(Error::Parse(format!("unexpected CSV columns {header:?}")));
        }
        let rows = input.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        Ok(Self { rows })
    }

    /// Gnuplot-style blocks, one per (constellation, L) series, separated by
    /// two blank lines.
    pub fn write_plot_data(&self, mut w: impl Write) -> Result<()> {
        let mut keys: Vec<(Modulation, usize, usize)> = self.rows.iter().map(|r| (r.constellation, r.q, r.l)).collect();
        keys.sort_by_key(|&(m, q, l)| (m.name(), q, l));
        keys.dedup();
        let launch = self.rows.first().map_or(0.0, |r| r.launch_power_dbm);
        for (k, (m, q, l)) in keys.into_iter().enumerate() {
            if k > 0 {
                writeln!(w, "\n")?;
            }
            writeln!(w, "# {q}-{m} L={l}")?;
            writeln!(w, "# attenuation_dB launch_power_dBm air_bpcu")?;
            for (a, air) in self.series(m, l) {
                writeln!(w, "{a} {launch} {air}")?;
            }
        }
        Ok(())
    }

    /// Writes `path` (CSV) and the plot data next to it.
    pub fn save(&self, path: &Path) -> Result<PathBuf> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))?;
        let plot = path.with_extension("dat");
        self.write_plot_data(std::io::BufWriter::new(std::fs::File::create(&plot)?))?;
        Ok(plot)
    }
}

/// Runs every rate point on a pool of `cfg.workers` threads; rows come back
/// in grid order whatever the execution order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let points = cfg.points();
    let rows = pool.install(|| points.par_iter().map(|p| run_rate_point(cfg, p)).collect());
    let result = SweepResult { rows };
    if let Some(path) = &cfg.output {
        result.save(path)?;
    }
    Ok(result)
}
