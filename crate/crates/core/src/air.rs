//! Achievable-rate estimation by mismatched decoding: `log q(y|x)` along the
//! transmitted path, `log q(y)` by a forward recursion over the
//! `Q^m`-state trellis, and an exhaustive oracle for small blocks.
//!
//! Symbols outside a block are supplied by a [`Context`] (zero by default,
//! matching the zero-padded convolution). Both terms treat them as known,
//! so the forward recursion equals the exhaustive sum exactly.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::channel::Phase;
use crate::constellation::{Constellation, SymbolBlock};
use crate::density::{
    branch_count, window_amplitude, AuxChannelParams, AuxLikelihood, BranchTable, PreparedDensity, WindowLayout,
};
use crate::error::{Error, Result};

/// Largest trellis (branches per step) the estimator accepts.
pub const DEFAULT_TRELLIS_BUDGET: u64 = 1 << 18;
/// Largest `Q^n` the exhaustive oracle enumerates.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrellisSpec {
    pub order: usize,
    pub memory: usize,
    pub state_count: usize,
    pub branch_count: usize,
}

impl TrellisSpec {
    /// Trellis for `taps` (odd) auxiliary taps over a `Q`-ary alphabet.
    pub fn new(order: usize, taps: usize, budget: u64) -> Result<Self> {
        if taps.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("tap count must be odd, got {taps}")));
        }
        let memory = taps / 2;
        let branches = branch_count(order, memory);
        if branches > budget {
            return Err(Error::BudgetExceeded {
                required: branches,
                budget,
            });
        }
        Ok(Self {
            order,
            memory,
            state_count: order.pow(memory as u32),
            branch_count: branches as usize,
        })
    }
}

/// Known symbol values adjacent to a block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Context {
    /// Values at positions `-left.len() .. -1`, oldest first.
    pub left: Vec<f64>,
    /// Values at positions `n, n + 1, ...`.
    pub right: Vec<f64>,
}

impl Context {
    /// All-zero surroundings (the convolution's own convention).
    pub fn zeros() -> Self {
        Self::default()
    }

    /// Neighbours of `all[start..start + len]` within `all`, `reach` on each side.
    pub fn around(all: &[f64], start: usize, len: usize, reach: usize) -> Self {
        let lo = start.saturating_sub(reach);
        let hi = (start + len + reach).min(all.len());
        Self {
            left: all[lo..start].to_vec(),
            right: all[(start + len).min(all.len())..hi].to_vec(),
        }
    }

    fn value(&self, t: isize, n: usize) -> f64 {
        if t < 0 {
            let k = self.left.len() as isize + t;
            if k >= 0 {
                self.left[k as usize]
            } else {
                0.0
            }
        } else {
            self.right.get(t as usize - n).copied().unwrap_or(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Bits per channel use (per symbol); never clamped.
    pub air: f64,
    pub n: usize,
    pub taps: usize,
    pub log_q_joint: f64,
    pub log_q_marginal: f64,
    pub provenance: String,
}

impl RateEstimate {
    /// Raw estimate below zero: a sign of gross model mismatch.
    pub fn is_negative(&self) -> bool {
        self.air < 0.0
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Shared machinery for one (parameters, block) evaluation.
struct Evaluator<'a> {
    constellation: &'a Constellation,
    params: &'a AuxChannelParams,
    density: PreparedDensity<'a>,
    layout: WindowLayout,
    samples: &'a [f64],
    context: &'a Context,
}

impl<'a> Evaluator<'a> {
    fn symbols(&self) -> usize {
        self.samples.len() / 2
    }

    fn in_block(&self, t: isize) -> bool {
        t >= 0 && (t as usize) < self.symbols()
    }

    /// Pair `i` needs no context symbols.
    fn interior(&self, i: usize) -> bool {
        i >= self.layout.lead && i + self.layout.lag < self.symbols()
    }

    fn position(&self, i: usize, e: usize) -> isize {
        i as isize - self.layout.lead as isize + e as isize
    }

    /// `ln q` of pair `i` for a window given by constellation indices;
    /// out-of-block positions take their context values.
    fn border_pair(&self, i: usize, digits: &[usize], window: &mut [f64]) -> f64 {
        let n = self.symbols();
        for (e, slot) in window.iter_mut().enumerate() {
            let t = self.position(i, e);
            *slot = if self.in_block(t) {
                self.constellation.point(digits[e])
            } else {
                self.context.value(t, n)
            };
        }
        let mut acc = 0.0;
        for phase in Phase::BOTH {
            let s: Complex64 = window_amplitude(window, &self.params.taps, &self.layout, phase);
            acc += self.density.log_density(phase, self.samples[2 * i + phase.index()], s);
        }
        acc
    }

    fn log_joint(&self, indices: &[usize]) -> f64 {
        let q = self.constellation.order();
        let width = self.layout.window_len();
        let mut digits = vec![0usize; width];
        let mut window = vec![0.0; width];
        let mut total = Accumulator::default();
        for i in 0..self.symbols() {
            for (e, d) in digits.iter_mut().enumerate() {
                let t = self.position(i, e);
                *d = if self.in_block(t) { indices[t as usize] } else { 0 };
            }
            let v = if self.interior(i) {
                let w = digits.iter().fold(0usize, |acc, &d| acc * q + d);
                self.density.branch_log_density(Phase::OnSymbol, self.samples[2 * i], w)
                    + self
                        .density
                        .branch_log_density(Phase::BetweenSymbols, self.samples[2 * i + 1], w)
            } else {
                self.border_pair(i, &digits, &mut window)
            };
            total.add(v);
        }
        total.value()
    }

    /// Prior weights of the initial states: positions `-lead .. lag - 1`,
    /// out-of-block digits must be 0.
    fn initial_weights(&self) -> Vec<f64> {
        let q = self.constellation.order();
        let m = self.layout.memory;
        let inv_q = 1.0 / q as f64;
        let mut digits = vec![0usize; m];
        (0..q.pow(m as u32))
            .map(|s| {
                decode_digits(s, q, &mut digits);
                let mut weight = 1.0;
                for (e, &d) in digits.iter().enumerate() {
                    if self.in_block(self.position(0, e)) {
                        weight *= inv_q;
                    } else if d != 0 {
                        weight = 0.0;
                    }
                }
                weight
            })
            .collect()
    }

    /// Prior of the symbol entering the window at step `i`.
    fn entry_prior(&self, i: usize) -> f64 {
        if self.in_block((i + self.layout.lag) as isize) {
            1.0 / self.constellation.order() as f64
        } else {
            1.0
        }
    }

    /// `ld[w] = ln q(y_2i, y_2i+1 | window w)` for every window of step `i`.
    fn step_metrics(&self, i: usize, ld: &mut [f64], scratch: &mut Vec<f64>) {
        let q = self.constellation.order();
        let width = self.layout.window_len();
        if self.interior(i) {
            ld.fill(0.0);
            for phase in Phase::BOTH {
                self.density
                    .add_branch_log_densities(phase, self.samples[2 * i + phase.index()], ld, scratch);
            }
            return;
        }
        let mut digits = vec![0usize; width];
        let mut window = vec![0.0; width];
        for (w, v) in ld.iter_mut().enumerate() {
            decode_digits(w, q, &mut digits);
            let allowed = digits
                .iter()
                .enumerate()
                .all(|(e, &d)| d == 0 || self.in_block(self.position(i, e)));
            *v = if allowed {
                self.border_pair(i, &digits, &mut window)
            } else {
                f64::NEG_INFINITY
            };
        }
    }

    /// Forward recursion with per-state log-domain forward variables,
    /// renormalized by their maximum after every step. Each state combines
    /// its `Q` predecessors with a local log-sum-exp, so no path is lost to
    /// underflow however far apart the branch metrics are.
    fn log_marginal(&self) -> f64 {
        let q = self.constellation.order();
        let states = q.pow(self.layout.memory as u32);

        let mut alpha: Vec<f64> = self.initial_weights().iter().map(|w| w.ln()).collect();
        let mut ld = vec![0.0; states * q];
        let mut peak = vec![0.0; states];
        let mut acc = vec![0.0; states];
        let mut scratch = Vec::new();
        let mut scale = Accumulator::default();
        for i in 0..self.symbols() {
            self.step_metrics(i, &mut ld, &mut scratch);
            let log_prior = self.entry_prior(i).ln();
            // Path metric of every window: its predecessor w / Q plus the branch.
            for (chunk, &a) in ld.chunks_exact_mut(q).zip(&alpha) {
                chunk.iter_mut().for_each(|v| *v += a);
            }
            // Windows d Q^m + s end in state s; combine the Q of them.
            peak.fill(f64::NEG_INFINITY);
            for block in ld.chunks_exact(states) {
                for (p, &t) in peak.iter_mut().zip(block) {
                    *p = p.max(t);
                }
            }
            // Dead states (peak -inf) get shift 0 so their terms stay exp(-inf) = 0.
            for p in peak.iter_mut() {
                if *p == f64::NEG_INFINITY {
                    *p = f64::MIN;
                }
            }
            acc.fill(0.0);
            for block in ld.chunks_exact(states) {
                for ((a, &t), &p) in acc.iter_mut().zip(block).zip(&peak) {
                    *a += exp_nonpositive(t - p);
                }
            }
            let mut top = f64::NEG_INFINITY;
            for ((out, &a), &p) in alpha.iter_mut().zip(&acc).zip(&peak) {
                *out = if a > 0.0 {
                    p + (a.ln() + log_prior)
                } else {
                    f64::NEG_INFINITY
                };
                top = top.max(*out);
            }
            if !top.is_finite() {
                return f64::NEG_INFINITY;
            }
            alpha.iter_mut().for_each(|v| *v -= top);
            scale.add(top);
        }
        scale.add(log_sum_exp(&alpha));
        scale.value()
    }
}

/// `exp(x)` for `x <= 0`, written without calls or integer conversions so
/// the branch loop vectorizes; relative error below 1e-15, exactly zero
/// below the normal range.
#[inline(always)]
fn exp_nonpositive(x: f64) -> f64 {
    const MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    let xc = x.max(-708.0);
    let t = xc * std::f64::consts::LOG2_E + MAGIC;
    let k = t - MAGIC;
    let r = xc - k * LN2_HI - k * LN2_LO;
    // Taylor series to degree 12 on |r| <= ln2 / 2.
    let mut p = 1.0 / 479_001_600.0;
    for c in [
        1.0 / 39_916_800.0,
        1.0 / 3_628_800.0,
        1.0 / 362_880.0,
        1.0 / 40_320.0,
        1.0 / 5_040.0,
        1.0 / 720.0,
        1.0 / 120.0,
        1.0 / 24.0,
        1.0 / 6.0,
        0.5,
        1.0,
        1.0,
    ] {
        p = p * r + c;
    }
    let v = f64::from_bits(t.to_bits().wrapping_add(1023) << 52) * p;
    if x < -708.0 {
        0.0
    } else {
        v
    }
}

fn decode_digits(mut w: usize, q: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = w % q;
        w /= q;
    }
}

fn check_block(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyBlock("received samples"));
    }
    if !samples.len().is_multiple_of(2) {
        return Err(Error::LengthMismatch {
            what: "received samples (must be even)",
            expected: samples.len() + 1,
            got: samples.len(),
        });
    }
    Ok(())
}

fn with_evaluator<T>(
    samples: &[f64],
    constellation: &Constellation,
    params: &AuxChannelParams,
    likelihood: &AuxLikelihood,
    context: &Context,
    f: impl FnOnce(&Evaluator) -> T,
) -> Result<T> {
    check_block(samples)?;
    params.validate()?;
    TrellisSpec::new(constellation.order(), params.len(), DEFAULT_TRELLIS_BUDGET)?;
    let table = BranchTable::new(constellation, params, DEFAULT_TRELLIS_BUDGET)?;
    let ev = Evaluator {
        constellation,
        params,
        density: likelihood.prepare(params, &table, samples),
        layout: WindowLayout::new(params.memory()),
        samples,
        context,
    };
    Ok(f(&ev))
}

fn symbol_indices(samples: &[f64], symbols: &SymbolBlock) -> Result<Vec<usize>> {
    if symbols.len() * 2 != samples.len() {
        return Err(Error::LengthMismatch {
            what: "received samples vs. 2 x symbols",
            expected: symbols.len() * 2,
            got: samples.len(),
        });
    }
    Ok(symbols.indices())
}

/// `ln q(y | x)` along the transmitted symbols.
pub fn log_conditional(
    samples: &[f64],
    symbols: &SymbolBlock,
    params: &AuxChannelParams,
    likelihood: &AuxLikelihood,
    context: &Context,
) -> Result<f64> {
    let idx = symbol_indices(samples, symbols)?;
    with_evaluator(samples, symbols.constellation(), params, likelihood, context, |ev| {
        ev.log_joint(&idx)
    })
}

/// `ln q(y) = ln sum_x P(x) q(y | x)` by the forward recursion.
pub fn forward_log_marginal(
    samples: &[f64],
    params: &AuxChannelParams,
    constellation: &Constellation,
    likelihood: &AuxLikelihood,
    context: &Context,
) -> Result<f64> {
    with_evaluator(samples, constellation, params, likelihood, context, |ev| {
        ev.log_marginal()
    })
}

/// Exhaustive `ln q(y)` over all `Q^n` sequences.
pub fn brute_force_log_marginal(
    samples: &[f64],
    params: &AuxChannelParams,
    constellation: &Constellation,
    likelihood: &AuxLikelihood,
    context: &Context,
) -> Result<f64> {
    check_block(samples)?;
    let n = samples.len() / 2;
    let q = constellation.order();
    let required = (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if required > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            required,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    with_evaluator(samples, constellation, params, likelihood, context, |ev| {
        let log_prior = -(n as f64) * (q as f64).ln();
        let mut idx = vec![0usize; n];
        let terms: Vec<f64> = (0..required as usize)
            .map(|x| {
                decode_digits(x, q, &mut idx);
                ev.log_joint(&idx) + log_prior
            })
            .collect();
        log_sum_exp(&terms)
    })
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `(ln q(y|x) - ln q(y)) / (n ln 2)`.
pub fn estimate_air(
    samples: &[f64],
    symbols: &SymbolBlock,
    params: &AuxChannelParams,
    likelihood: &AuxLikelihood,
    context: &Context,
) -> Result<RateEstimate> {
    let idx = symbol_indices(samples, symbols)?;
    let (joint, marginal) = with_evaluator(samples, symbols.constellation(), params, likelihood, context, |ev| {
        (ev.log_joint(&idx), ev.log_marginal())
    })?;
    let n = symbols.len();
    Ok(RateEstimate {
        air: (joint - marginal) / (n as f64 * LN_2),
        n,
        taps: params.len(),
        log_q_joint: joint,
        log_q_marginal: marginal,
        provenance: format!("{} L={} n={n}", symbols.constellation().label(), params.len()),
    })
}
