//! Auxiliary-model fitting on pilot blocks.
//!
//! The initializer matches a truncated physical response to the pilot
//! intensities by least squares and reads the noise levels off the residual
//! moments. The search then maximizes the pilot AIR with a derivative-free
//! coordinate pattern search over four groups (taps, pre-detection biases,
//! post-detection biases, log-variances), accepting improvements only.
//!
//! Samples are normalized by their pilot mean during the search; the AIR is
//! invariant to that rescaling, and parameters are mapped back at the end.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::air::{estimate_air, Context, RateEstimate, TrellisSpec, DEFAULT_TRELLIS_BUDGET};
use crate::channel::{convolve_centered, ImpulseResponse, NoiseSpec};
use crate::constellation::{upsample_values, SymbolBlock};
use crate::density::{AuxChannelParams, AuxLikelihood};
use crate::error::{Error, Result};

/// Where a block of samples came from: a stream identifier and the symbol
/// range `start..start + len` within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId {
    pub stream: u64,
    pub start: usize,
    pub len: usize,
}

impl BlockId {
    pub fn overlaps(&self, other: &BlockId) -> bool {
        self.stream == other.stream && self.start < other.start + other.len && other.start < self.start + self.len
    }
}

/// Received samples with their known symbols and neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBlock {
    pub samples: Vec<f64>,
    pub symbols: SymbolBlock,
    pub context: Context,
    pub id: BlockId,
}

/// Neighbour symbols kept on each side of a sliced block; more than any
/// supported memory needs.
pub const CONTEXT_REACH: usize = 32;

impl DataBlock {
    pub fn new(samples: Vec<f64>, symbols: SymbolBlock, context: Context, id: BlockId) -> Result<Self> {
        if samples.len() != 2 * symbols.len() {
            return Err(Error::LengthMismatch {
                what: "received samples vs. 2 x symbols",
                expected: 2 * symbols.len(),
                got: samples.len(),
            });
        }
        Ok(Self {
            samples,
            symbols,
            context,
            id,
        })
    }

    /// Symbols `start..start + len` of a longer transmission, with the true
    /// neighbours as context.
    pub fn slice(samples: &[f64], symbols: &SymbolBlock, stream: u64, start: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyBlock("data block"));
        }
        if samples.len() != 2 * symbols.len() || start + len > symbols.len() {
            return Err(Error::LengthMismatch {
                what: "block range vs. transmission",
                expected: symbols.len(),
                got: start + len,
            });
        }
        let all = symbols.symbols();
        let part = SymbolBlock::new(
            symbols.constellation().clone(),
            all[start..start + len].to_vec(),
            symbols.source(),
        )?;
        Self::new(
            samples[2 * start..2 * (start + len)].to_vec(),
            part,
            Context::around(all, start, len, CONTEXT_REACH),
            BlockId { stream, start, len },
        )
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Box constraints of the search, relative to the pilot statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    /// Lower bound on every variance.
    pub var_floor: f64,
    /// `|mu|` relative to the RMS of the received samples (field units for
    /// the pre-detection bias).
    pub bias_factor: f64,
    /// Variances relative to the sample variance (post) or mean (pre).
    pub var_factor: f64,
    /// Tap magnitudes relative to the initializer's peak tap.
    pub tap_factor: f64,
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            var_floor: 1e-10,
            bias_factor: 10.0,
            var_factor: 10.0,
            tap_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub pilot_count: usize,
    /// Auxiliary taps `L` (odd).
    pub taps: usize,
    /// Maximum number of sweeps over all groups.
    pub max_iterations: usize,
    /// Objective evaluations allowed per restart.
    pub max_evaluations: usize,
    /// Stop once a sweep improves the pilot AIR by less than this (bpcu).
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub bounds: FitBounds,
    /// Initial steps: taps relative to the peak tap, biases relative to the
    /// signal scale, log-variances absolute.
    pub tap_step: f64,
    pub bias_step: f64,
    pub log_var_step: f64,
    /// Steps stop shrinking below `initial * min_step_ratio`.
    pub min_step_ratio: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            pilot_count: 5000,
            taps: 3,
            max_iterations: 4,
            max_evaluations: 400,
            tolerance: 1e-4,
            restarts: 3,
            seed: 0,
            bounds: FitBounds::default(),
            tap_step: 0.1,
            bias_step: 0.05,
            log_var_step: 0.5,
            min_step_ratio: 1.0 / 32.0,
        }
    }
}

impl FitConfig {
    pub fn with_taps(taps: usize) -> Self {
        Self {
            taps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "tap count must be odd, got {}",
                self.taps
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("fit tolerance must be positive".into()));
        }
        if self.max_iterations == 0 || self.restarts == 0 || self.max_evaluations == 0 {
            return Err(Error::InvalidParameter(
                "need at least one iteration and one restart".into(),
            ));
        }
        let b = &self.bounds;
        if !(b.var_floor > 0.0 && b.bias_factor > 0.0 && b.var_factor > 0.0 && b.tap_factor > 0.0) {
            return Err(Error::InvalidParameter("fit bounds must be positive".into()));
        }
        if !(self.tap_step > 0.0 && self.bias_step > 0.0 && self.log_var_step > 0.0)
            || !(self.min_step_ratio > 0.0 && self.min_step_ratio < 1.0)
        {
            return Err(Error::InvalidParameter("invalid pattern-search steps".into()));
        }
        Ok(())
    }

    /// Recommended minimum pilot count `10 Q^(m+1)` for `Q`-ary symbols.
    pub fn pilot_floor(&self, order: usize) -> usize {
        10 * order.pow((self.taps / 2 + 1) as u32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: AuxChannelParams,
    pub pilot_air: f64,
    /// Pilot AIR after every accepted move, starting with the initializer's.
    pub trace: Vec<f64>,
    pub initializer: String,
    /// Which restart won (0 is the unjittered initializer).
    pub restart: usize,
    pub converged: bool,
    pub evaluations: usize,
    pub pilot_block: BlockId,
    pub warnings: Vec<String>,
}

impl FitResult {
    /// Pilot AIR of the starting point of the winning restart.
    pub fn initial_air(&self) -> f64 {
        self.trace[0]
    }

    /// Number of accepted moves.
    pub fn improvements(&self) -> usize {
        self.trace.len() - 1
    }
}

/// `taps` centered taps of `prior`, zero-padded if the prior is shorter.
fn centered_taps(prior: &ImpulseResponse, taps: usize) -> Vec<Complex64> {
    let src = prior.taps();
    let zero = Complex64::new(0.0, 0.0);
    let (cs, ct) = (src.len() as isize / 2, taps as isize / 2);
    (0..taps as isize)
        .map(|k| {
            let j = k - ct + cs;
            if (0..src.len() as isize).contains(&j) {
                src[j as usize]
            } else {
                zero
            }
        })
        .collect()
}

/// Noiseless amplitudes of a block under `taps`, including its context.
fn block_field(block: &DataBlock, taps: &[Complex64]) -> Vec<Complex64> {
    let ctx = &block.context;
    let mut all = ctx.left.clone();
    all.extend_from_slice(block.symbols.symbols());
    all.extend_from_slice(&ctx.right);
    let x: Vec<Complex64> = upsample_values(&all)
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let s = convolve_centered(&x, taps);
    let start = 2 * ctx.left.len();
    s[start..start + block.samples.len()].to_vec()
}

/// Least-squares fit `y ~ a + b z`, or `None` without spread in `z`.
fn regress(z: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = z.len() as f64;
    let zm = z.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut szz, mut szy) = (0.0, 0.0);
    for (a, b) in z.iter().zip(y) {
        szz += (a - zm) * (a - zm);
        szy += (a - zm) * (b - ym);
    }
    if !(szz > 1e-300) {
        return None;
    }
    let slope = szy / szz;
    Some((ym - slope * zm, slope))
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
}

/// Initial auxiliary parameters from a physical response prior.
///
/// The centered `taps` of `prior` are scaled so that `|s|^2` matches the
/// pilot intensities in the least-squares sense (one scale, one offset per
/// phase). Per phase, `E[y] = |s|^2 + var_pre + mu_post` and
/// `Var[y] = 2 var_pre |s|^2 + var_pre^2 + var_post` give the variances
/// from a regression of the squared residuals on `|s|^2`.
pub fn initialize_params(pilots: &DataBlock, taps: usize, prior: &ImpulseResponse) -> Result<AuxChannelParams> {
    if pilots.is_empty() {
        return Err(Error::EmptyBlock("pilot block"));
    }
    if taps.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("tap count must be odd, got {taps}")));
    }
    let y = &pilots.samples;
    let (_, var_y) = mean_var(y);
    if !(var_y > 0.0) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegeneratePilots("received samples are constant".into()));
    }
    let first = pilots.symbols.symbols()[0];
    if pilots.symbols.symbols().iter().all(|&s| s == first) {
        return Err(Error::DegeneratePilots("pilot symbols are constant".into()));
    }
    let base = centered_taps(prior, taps);
    if base.iter().all(|t| t.norm_sqr() == 0.0) {
        return Err(Error::DegeneratePilots(
            "prior has no energy in the central taps".into(),
        ));
    }
    let s = block_field(pilots, &base);
    let z: Vec<f64> = s.iter().map(|v| v.norm_sqr()).collect();

    // Common scale, per-phase offsets: center each phase, then pool.
    let mut zc = Vec::with_capacity(z.len());
    let mut yc = Vec::with_capacity(z.len());
    for p in 0..2 {
        let zp: Vec<f64> = z.iter().skip(p).step_by(2).copied().collect();
        let yp: Vec<f64> = y.iter().skip(p).step_by(2).copied().collect();
        let (zm, _) = mean_var(&zp);
        let (ym, _) = mean_var(&yp);
        zc.extend(zp.iter().map(|v| v - zm));
        yc.extend(yp.iter().map(|v| v - ym));
    }
    let (_, gain) =
        regress(&zc, &yc).ok_or_else(|| Error::DegeneratePilots("no intensity variation in the pilots".into()))?;
    if !(gain > 0.0) {
        return Err(Error::DegeneratePilots(format!(
            "pilot intensities do not follow the prior (gain {gain:.3e})"
        )));
    }
    let scale = gain.sqrt();
    let taps_init: Vec<Complex64> = base.iter().map(|t| t * scale).collect();

    let floor = FitBounds::default().var_floor;
    let mut noise = NoiseSpec::noiseless();
    for p in 0..2 {
        let zp: Vec<f64> = z.iter().skip(p).step_by(2).map(|v| v * gain).collect();
        let yp: Vec<f64> = y.iter().skip(p).step_by(2).copied().collect();
        // Residuals with the slope pinned to one (the model's square law).
        let resid: Vec<f64> = zp.iter().zip(&yp).map(|(z, y)| y - z).collect();
        let (rm, _) = mean_var(&resid);
        let sq: Vec<f64> = resid.iter().map(|r| (r - rm) * (r - rm)).collect();
        let (v0, v1) = match regress(&zp, &sq) {
            Some((a, b)) => (a, b / 2.0),
            None => (mean_var(&sq).0, 0.0),
        };
        let var_pre = v1.clamp(floor, 10.0 * mean_var(&yp).0.abs().max(floor));
        let var_post = (v0 - var_pre * var_pre).clamp(floor, 10.0 * var_y);
        noise.var_pre[p] = var_pre;
        noise.var_post[p] = var_post;
        // Mean residual: E[y - |s|^2] = var_pre + mu_post.
        noise.mu_post[p] = rm - var_pre;
    }
    AuxChannelParams::new(taps_init, &noise)
}

/// Search state in normalized units: a flat vector with fixed layout.
#[derive(Debug, Clone)]
struct Layout {
    taps: usize,
}

impl Layout {
    const GROUPS: usize = 4;

    fn dim(&self) -> usize {
        2 * self.taps + 4 + 2 + 4
    }

    fn group(&self, g: usize) -> std::ops::Range<usize> {
        let t = 2 * self.taps;
        match g {
            0 => 0..t,
            1 => t..t + 4,
            2 => t + 4..t + 6,
            _ => t + 6..t + 10,
        }
    }

    fn encode(&self, p: &AuxChannelParams) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        for t in &p.taps {
            v.extend([t.re, t.im]);
        }
        for m in &p.mu_pre {
            v.extend([m.re, m.im]);
        }
        v.extend(p.mu_post);
        v.extend(p.var_pre.iter().map(|x| x.ln()));
        v.extend(p.var_post.iter().map(|x| x.ln()));
        v
    }

    fn decode(&self, v: &[f64]) -> AuxChannelParams {
        let t = 2 * self.taps;
        AuxChannelParams {
            taps: (0..self.taps).map(|k| Complex64::new(v[2 * k], v[2 * k + 1])).collect(),
            mu_pre: [Complex64::new(v[t], v[t + 1]), Complex64::new(v[t + 2], v[t + 3])],
            mu_post: [v[t + 4], v[t + 5]],
            var_pre: [v[t + 6].exp(), v[t + 7].exp()],
            var_post: [v[t + 8].exp(), v[t + 9].exp()],
        }
    }
}

/// Maps parameters between raw and normalized (`y / kappa`) sample units.
fn rescale(p: &AuxChannelParams, kappa: f64) -> AuxChannelParams {
    let r = kappa.sqrt();
    AuxChannelParams {
        taps: p.taps.iter().map(|t| t / r).collect(),
        mu_pre: p.mu_pre.map(|m| m / r),
        mu_post: p.mu_post.map(|m| m / kappa),
        var_pre: p.var_pre.map(|v| v / kappa),
        var_post: p.var_post.map(|v| v / (kappa * kappa)),
    }
}

/// Per-coordinate bounds and initial steps in normalized units.
struct Box {
    lo: Vec<f64>,
    hi: Vec<f64>,
    steps: [f64; Layout::GROUPS],
    tap_limit: f64,
}

impl Box {
    fn new(layout: &Layout, init: &AuxChannelParams, y: &[f64], cfg: &FitConfig) -> Self {
        let b = &cfg.bounds;
        let (mean, var) = mean_var(y);
        let rms = y.iter().map(|v| v * v).sum::<f64>().sqrt() / (y.len() as f64).sqrt();
        let peak = init.taps.iter().map(|t| t.norm()).fold(0.0, f64::max);
        let tap_limit = b.tap_factor * peak;
        let field_rms = rms.sqrt();
        let floor = b.var_floor.ln();
        let t = 2 * layout.taps;
        let mut lo = vec![-tap_limit; layout.dim()];
        let mut hi = vec![tap_limit; layout.dim()];
        for k in t..t + 4 {
            lo[k] = -b.bias_factor * field_rms;
            hi[k] = b.bias_factor * field_rms;
        }
        for k in t + 4..t + 6 {
            lo[k] = -b.bias_factor * rms;
            hi[k] = b.bias_factor * rms;
        }
        for k in t + 6..t + 8 {
            lo[k] = floor;
            hi[k] = (b.var_factor * mean.abs()).max(b.var_floor).ln();
        }
        for k in t + 8..t + 10 {
            lo[k] = floor;
            hi[k] = (b.var_factor * var).max(b.var_floor).ln();
        }
        Self {
            lo,
            hi,
            steps: [
                cfg.tap_step * peak,
                cfg.bias_step * field_rms,
                cfg.bias_step * var.sqrt(),
                cfg.log_var_step,
            ],
            tap_limit,
        }
    }

    fn clamp(&self, v: &mut [f64]) {
        for (k, x) in v.iter_mut().enumerate() {
            *x = x.clamp(self.lo[k], self.hi[k]);
        }
    }

    fn admits(&self, v: &[f64], layout: &Layout) -> bool {
        let taps_ok = (0..layout.taps).all(|k| v[2 * k].hypot(v[2 * k + 1]) <= self.tap_limit);
        taps_ok && v.iter().enumerate().all(|(k, x)| *x >= self.lo[k] && *x <= self.hi[k])
    }
}

/// Search outcome: point, trace, convergence flag and evaluation count.
type Run = (Vec<f64>, Vec<f64>, bool, usize);

struct Search<'a> {
    block: &'a DataBlock,
    samples: &'a [f64],
    likelihood: &'a AuxLikelihood,
    layout: Layout,
    evaluations: usize,
}

impl Search<'_> {
    /// AIR and mean joint log-likelihood `ln q(y, x) / n` at `v`.
    fn air(&mut self, v: &[f64]) -> (f64, f64) {
        self.evaluations += 1;
        let p = self.layout.decode(v);
        estimate_air(
            self.samples,
            &self.block.symbols,
            &p,
            self.likelihood,
            &self.block.context,
        )
        .map(|r| (r.air, r.log_q_joint / r.n as f64))
        .unwrap_or((f64::NEG_INFINITY, f64::NEG_INFINITY))
    }

    /// Pattern search from `start`; returns the point, its trace and whether
    /// it stopped on the tolerance rather than the iteration cap.
    fn run(&mut self, start: Vec<f64>, bounds: &Box, cfg: &FitConfig) -> Result<(Vec<f64>, Vec<f64>, bool)> {
        let mut x = start;
        let (mut best, mut joint) = self.air(&x);
        if !best.is_finite() {
            return Err(Error::DegeneratePilots("initial parameters give no finite AIR".into()));
        }
        let mut trace = vec![best];
        let mut steps = bounds.steps;
        let min_steps = steps.map(|s| s * cfg.min_step_ratio);
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            let before = best;
            for g in 0..Layout::GROUPS {
                let mut moved = false;
                for k in self.layout.group(g) {
                    for dir in [1.0, -1.0] {
                        let mut accepted = false;
                        // Keep stepping while the direction pays off.
                        for _ in 0..4 {
                            if self.evaluations >= cfg.max_evaluations {
                                return Ok((x, trace, false));
                            }
                            let mut probe = x.clone();
                            probe[k] += dir * steps[g];
                            if !bounds.admits(&probe, &self.layout) {
                                break;
                            }
                            // The AIR is nearly flat in directions the decoder
                            // cannot see (e.g. noise variances at high SNR);
                            // requiring the likelihood not to drop keeps such
                            // moves from collapsing onto brittle parameters.
                            let (a, j) = self.air(&probe);
                            if a > best && j >= joint {
                                best = a;
                                joint = j;
                                x = probe;
                                trace.push(best);
                                accepted = true;
                            } else {
                                break;
                            }
                        }
                        if accepted {
                            moved = true;
                            break;
                        }
                    }
                }
                if !moved {
                    steps[g] = (steps[g] * 0.5).max(min_steps[g]);
                }
            }
            let exhausted = steps.iter().zip(&min_steps).all(|(s, m)| s <= m);
            if best - before < cfg.tolerance && (exhausted || best == before) {
                converged = true;
                break;
            }
        }
        Ok((x, trace, converged))
    }
}

/// Fits from the physical prior (restart 0) and jittered copies of it.
pub fn fit(
    pilots: &DataBlock,
    prior: &ImpulseResponse,
    config: &FitConfig,
    likelihood: &AuxLikelihood,
) -> Result<FitResult> {
    let init = initialize_params(pilots, config.taps, prior)?;
    fit_from(pilots, init, "physical prior", config, likelihood)
}

/// Fits starting from explicit parameters (e.g. a zero-padded shorter fit).
pub fn fit_from(
    pilots: &DataBlock,
    init: AuxChannelParams,
    provenance: &str,
    config: &FitConfig,
    likelihood: &AuxLikelihood,
) -> Result<FitResult> {
    config.validate()?;
    init.validate()?;
    if init.len() != config.taps {
        return Err(Error::InvalidParameter(format!(
            "initializer has {} taps, config asks for {}",
            init.len(),
            config.taps
        )));
    }
    if pilots.is_empty() {
        return Err(Error::EmptyBlock("pilot block"));
    }
    let order = pilots.symbols.constellation().order();
    TrellisSpec::new(order, config.taps, DEFAULT_TRELLIS_BUDGET)?;
    let mut warnings = Vec::new();
    if pilots.len() < config.pilot_floor(order) {
        warnings.push(format!(
            "{} pilots is below the recommended {} for L={}",
            pilots.len(),
            config.pilot_floor(order),
            config.taps
        ));
    }
    let kappa = pilots.samples.iter().sum::<f64>() / pilots.samples.len() as f64;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::DegeneratePilots(format!(
            "pilot mean {kappa:.3e} is not positive"
        )));
    }
    let samples: Vec<f64> = pilots.samples.iter().map(|y| y / kappa).collect();
    let layout = Layout { taps: config.taps };
    let mut start_params = rescale(&init, kappa);
    for v in start_params.var_pre.iter_mut().chain(start_params.var_post.iter_mut()) {
        *v = v.max(config.bounds.var_floor);
    }
    let bounds = Box::new(&layout, &start_params, &samples, config);
    let start = layout.encode(&start_params);

    let runs: Vec<Result<Run>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut x = start.clone();
            if r > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
                for g in 0..Layout::GROUPS {
                    for k in layout.group(g) {
                        let n: f64 = StandardNormal.sample(&mut rng);
                        x[k] += n * bounds.steps[g];
                    }
                }
                bounds.clamp(&mut x);
            }
            let mut search = Search {
                block: pilots,
                samples: &samples,
                likelihood,
                layout: layout.clone(),
                evaluations: 0,
            };
            let (x, trace, converged) = search.run(x, &bounds, config)?;
            Ok((x, trace, converged, search.evaluations))
        })
        .collect();

    let mut winner: Option<(usize, Vec<f64>, Vec<f64>, bool)> = None;
    let mut evaluations = 0;
    let mut first_err = None;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok((x, trace, converged, evals)) => {
                evaluations += evals;
                let better = match &winner {
                    None => true,
                    Some((_, wx, wt, _)) => {
                        let (a, b) = (*trace.last().unwrap(), *wt.last().unwrap());
                        a > b || (a == b && layout.decode(&x).tap_energy() < layout.decode(wx).tap_energy())
                    }
                };
                if better {
                    winner = Some((r, x, trace, converged));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((restart, x, trace, converged)) = winner else {
        return Err(first_err.expect("at least one restart ran"));
    };
    Ok(FitResult {
        params: rescale(&layout.decode(&x), 1.0 / kappa),
        pilot_air: *trace.last().expect("trace starts with the initial AIR"),
        trace,
        initializer: if restart == 0 {
            provenance.to_string()
        } else {
            format!("{provenance} (jittered, restart {restart})")
        },
        restart,
        converged,
        evaluations,
        pilot_block: pilots.id,
        warnings,
    })
}

/// AIR of fitted parameters on a holdout block disjoint from the pilots.
pub fn cross_validate(
    params: &AuxChannelParams,
    fitted_on: &BlockId,
    holdout: &DataBlock,
    likelihood: &AuxLikelihood,
) -> Result<RateEstimate> {
    if holdout.is_empty() || holdout.samples.is_empty() {
        return Err(Error::EmptyBlock("holdout block"));
    }
    if holdout.id.overlaps(fitted_on) {
        return Err(Error::HoldoutOverlap);
    }
    let mut est = estimate_air(&holdout.samples, &holdout.symbols, params, likelihood, &holdout.context)?;
    est.provenance = format!(
        "{} holdout {}..{}",
        est.provenance,
        holdout.id.start,
        holdout.id.start + holdout.id.len
    );
    Ok(est)
}
