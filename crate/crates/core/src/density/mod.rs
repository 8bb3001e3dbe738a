//! Per-sample likelihood of the auxiliary channel
//! `y = |s + n1 + mu_pre|^2 + n2 + mu_post`, evaluated in the log domain.
//!
//! For `n1` circularly-symmetric complex Gaussian with variance `v1`, the
//! intensity `|s + n1|^2` is a scaled noncentral chi-square with two degrees
//! of freedom. Adding the real Gaussian `n2` (variance `v2`) turns the density
//! into a convolution, integrated here by Gauss-Legendre quadrature in the
//! amplitude domain `rho = sqrt(w)`.

pub mod bessel;
pub mod grid;
pub mod likelihood;
pub mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{NoiseSpec, Phase};
use crate::constellation::Constellation;
use crate::error::{Error, Result};

pub use bessel::{i0e, ln_i0e};
pub use grid::{DensityGrid, GridCache};
pub use likelihood::{AuxLikelihood, DensityMode, PreparedDensity};
pub use quadrature::{gauss_legendre, QuadratureSpec};

/// Variances below this are treated as exactly zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Default cap on `Q^(m+1)` branches per phase.
pub const DEFAULT_BRANCH_BUDGET: u64 = 1 << 18;

/// Parameters of the auxiliary channel: `L` centered taps at `T/2` spacing
/// plus per-phase biases and variances (index 0 on-symbol, 1 between-symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannelParams {
    pub taps: Vec<Complex64>,
    pub mu_pre: [Complex64; 2],
    pub mu_post: [f64; 2],
    pub var_pre: [f64; 2],
    pub var_post: [f64; 2],
}

impl AuxChannelParams {
    pub fn new(taps: Vec<Complex64>, noise: &NoiseSpec) -> Result<Self> {
        let p = Self {
            taps,
            mu_pre: noise.mu_pre,
            mu_post: noise.mu_post,
            var_pre: noise.var_pre,
            var_post: noise.var_post,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() || self.taps.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "auxiliary response needs an odd number of taps, got {}",
                self.taps.len()
            )));
        }
        let finite = self.taps.iter().all(|t| t.re.is_finite() && t.im.is_finite())
            && self.mu_pre.iter().all(|m| m.re.is_finite() && m.im.is_finite())
            && self.mu_post.iter().all(|m| m.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite auxiliary parameter".into()));
        }
        if self
            .var_pre
            .iter()
            .chain(&self.var_post)
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidParameter("variances must be non-negative".into()));
        }
        Ok(())
    }

    /// Number of taps `L`.
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Symbol memory `m = (L - 1) / 2`.
    pub fn memory(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            var_pre: self.var_pre,
            var_post: self.var_post,
            mu_pre: self.mu_pre,
            mu_post: self.mu_post,
        }
    }

    /// The same model with `extra` zero taps appended on each side.
    pub fn zero_padded(&self, taps: usize) -> Result<Self> {
        if taps < self.taps.len() || taps.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "cannot embed {} taps into {taps}",
                self.taps.len()
            )));
        }
        let pad = (taps - self.taps.len()) / 2;
        let zero = Complex64::new(0.0, 0.0);
        let mut t = vec![zero; pad];
        t.extend_from_slice(&self.taps);
        t.extend(std::iter::repeat_n(zero, pad));
        Ok(Self {
            taps: t,
            ..self.clone()
        })
    }

    pub fn tap_energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// `log f(w)` for `w = |s + n1|^2` with noncentrality `|s|^2` and `E|n1|^2 = var`:
/// `-(w + |s|^2)/var - ln var + ln I0(2 sqrt(w) |s| / var)`.
pub fn noncentral_intensity_logpdf(w: f64, noncentrality: f64, var: f64) -> f64 {
    if w < 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = noncentrality.max(0.0).sqrt();
    let rho = w.sqrt();
    // -(w + r^2)/var + z == -(rho - r)^2/var for z = 2 rho r / var.
    let d = rho - r;
    -d * d / var - var.ln() + ln_i0e(2.0 * rho * r / var)
}

fn gaussian_logpdf(x: f64, var: f64) -> f64 {
    -x * x / (2.0 * var) - 0.5 * (2.0 * PI * var).ln()
}

/// Log-density of `y` given the bias-corrected amplitude magnitude `r = |s + mu_pre|`,
/// after removing `mu_post` from `y`.
pub(crate) fn log_density_shifted(y: f64, r: f64, var_pre: f64, var_post: f64, quad: &QuadratureSpec) -> f64 {
    let lambda = r * r;
    let pre_zero = var_pre < DEGENERATE_VARIANCE;
    let post_zero = var_post < DEGENERATE_VARIANCE;
    match (pre_zero, post_zero) {
        (true, true) => {
            if (y - lambda).abs() < DEGENERATE_VARIANCE {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
        (true, false) => gaussian_logpdf(y - lambda, var_post),
        (false, true) => noncentral_intensity_logpdf(y, lambda, var_pre),
        (false, false) => convolved_log_density(y, r, var_pre, var_post, quad),
    }
}

/// `ln int_0^inf f_rho(rho) phi(y - rho^2) d rho` with `f_rho` the Rician
/// amplitude density of `|s + n1|`.
///
/// The rule is centered on the stationary point of the Gaussian
/// approximation `-(rho - r)^2 / v1 - (y - rho^2)^2 / (2 v2)`, which always
/// lies between `r` and `sqrt(max(y, 0))`, with a width from its curvature.
/// Centering on the product's peak (rather than on either factor) keeps the
/// far tails accurate and the result smooth in `(y, r)`.
fn convolved_log_density(y: f64, r: f64, v1: f64, v2: f64, quad: &QuadratureSpec) -> f64 {
    let c = quad.coverage();
    let sy = y.max(0.0).sqrt();
    let slope = |rho: f64| -(rho - r) / v1 + rho * (y - rho * rho) / v2;
    // slope(lo) >= 0 >= slope(hi) by construction.
    let (mut lo, mut hi) = if r <= sy { (r, sy) } else { (sy, r) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let peak = 0.5 * (lo + hi);
    let curvature = 2.0 / v1 + 2.0 * (3.0 * peak * peak - y) / v2;
    let (lo, hi, panels) = if curvature >= 1.0 / v1 {
        let w = c / curvature.sqrt();
        ((peak - w).max(0.0), peak + w, 1)
    } else {
        // Flat or convex Gaussian factor: cover both factors' supports.
        let t1 = c * (v1 / 2.0).sqrt();
        let s2 = c * v2.sqrt();
        let top = r.max((y.max(0.0) + s2).sqrt()) + t1;
        ((r.min(sy) - t1).max(0.0), top, 4)
    };
    if !(hi > lo) {
        return f64::NEG_INFINITY;
    }

    let log_norm = (2.0_f64).ln() - v1.ln() - 0.5 * (2.0 * PI * v2).ln();
    let width = (hi - lo) / panels as f64;
    let half = 0.5 * width;
    let log_half = half.ln();
    // Integrand = w rho i0e(z) exp(quad(rho)); the exponent is shifted by
    // its value at the stationary point, which is within a few nats of the
    // largest term.
    let quad_exp = |rho: f64| -> f64 {
        let d = rho - r;
        let e = y - rho * rho;
        -d * d / v1 - e * e / (2.0 * v2)
    };
    let z_scale = 2.0 * r / v1;
    let sum_shifted = |shift: f64| -> f64 {
        let mut acc = 0.0;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * width;
            for (x, w) in quad.nodes().iter().zip(quad.weights()) {
                let rho = mid + half * x;
                acc += w * rho * i0e(z_scale * rho) * (quad_exp(rho) - shift).exp();
            }
        }
        acc
    };
    let shift = quad_exp(peak.clamp(lo, hi));
    if shift.is_finite() {
        let acc = sum_shifted(shift);
        if acc > 1e-250 && acc < 1e250 {
            return log_norm + log_half + shift + acc.ln();
        }
    }
    // Fallback: exact maximum of the log-terms.
    let term = |rho: f64, lw: f64| -> f64 {
        let d = rho - r;
        let e = y - rho * rho;
        lw + rho.ln() - d * d / v1 + ln_i0e(z_scale * rho) - e * e / (2.0 * v2)
    };
    let mut terms_max = f64::NEG_INFINITY;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (x, lw) in quad.nodes().iter().zip(quad.log_weights()) {
            terms_max = terms_max.max(term(mid + half * x, *lw));
        }
    }
    if !terms_max.is_finite() {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (x, lw) in quad.nodes().iter().zip(quad.log_weights()) {
            acc += (term(mid + half * x, *lw) - terms_max).exp();
        }
    }
    log_norm + log_half + terms_max + acc.ln()
}

/// `ln q(y | s)` at sampling phase `phase` under `params`.
pub fn log_density_sample(y: f64, s: Complex64, phase: Phase, params: &AuxChannelParams, quad: &QuadratureSpec) -> f64 {
    let p = phase.index();
    let r = (s + params.mu_pre[p]).norm();
    log_density_shifted(y - params.mu_post[p], r, params.var_pre[p], params.var_post[p], quad)
}

/// Geometry of the `m + 1` symbols feeding one on/between sample pair.
///
/// Pair `i` (samples `2i`, `2i+1`) depends on symbols `i - lead ..= i + lag`
/// with `lead = m / 2`, `lag = m - lead`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowLayout {
    pub memory: usize,
    pub lead: usize,
    pub lag: usize,
}

impl WindowLayout {
    pub fn new(memory: usize) -> Self {
        let lead = memory / 2;
        Self {
            memory,
            lead,
            lag: memory - lead,
        }
    }

    pub fn window_len(&self) -> usize {
        self.memory + 1
    }

    /// Tap index multiplying window element `e` at `phase`, if any.
    pub fn tap_for(&self, e: usize, phase: Phase) -> Option<usize> {
        let j = phase.index() as isize + self.memory as isize + 2 * self.lead as isize - 2 * e as isize;
        (0..=2 * self.memory as isize).contains(&j).then_some(j as usize)
    }
}

/// Noiseless auxiliary field sample for a window of `m + 1` symbols.
pub fn branch_amplitude(window: &[f64], taps: &[Complex64], phase: Phase) -> Result<Complex64> {
    if taps.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter("tap count must be odd".into()));
    }
    let layout = WindowLayout::new(taps.len() / 2);
    if window.len() != layout.window_len() {
        return Err(Error::LengthMismatch {
            what: "symbol window",
            expected: layout.window_len(),
            got: window.len(),
        });
    }
    Ok(window_amplitude(window, taps, &layout, phase))
}

pub(crate) fn window_amplitude(window: &[f64], taps: &[Complex64], layout: &WindowLayout, phase: Phase) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (e, &x) in window.iter().enumerate() {
        if let Some(j) = layout.tap_for(e, phase) {
            acc += taps[j] * x;
        }
    }
    acc
}

/// All `Q^(m+1)` distinct branch amplitudes per phase.
///
/// Window index `w` encodes the symbol indices base `Q`, oldest symbol most
/// significant; the trellis state is `w / Q` and the successor is `w % Q^m`.
#[derive(Debug, Clone)]
pub struct BranchTable {
    order: usize,
    layout: WindowLayout,
    amplitudes: [Vec<Complex64>; 2],
}

pub(crate) fn branch_count(order: usize, memory: usize) -> u64 {
    (order as u64).saturating_pow(memory as u32 + 1)
}

impl BranchTable {
    pub fn new(constellation: &Constellation, params: &AuxChannelParams, budget: u64) -> Result<Self> {
        params.validate()?;
        let q = constellation.order();
        let layout = WindowLayout::new(params.memory());
        let required = branch_count(q, layout.memory);
        if required > budget {
            return Err(Error::BudgetExceeded { required, budget });
        }
        let count = required as usize;
        let points = constellation.points();
        let mut window = vec![0.0; layout.window_len()];
        let mut amplitudes = [Vec::with_capacity(count), Vec::with_capacity(count)];
        for w in 0..count {
            decode_window(w, q, points, &mut window);
            for phase in Phase::BOTH {
                amplitudes[phase.index()].push(window_amplitude(&window, &params.taps, &layout, phase));
            }
        }
        Ok(Self {
            order: q,
            layout,
            amplitudes,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> WindowLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.amplitudes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes[0].is_empty()
    }

    pub fn amplitudes(&self, phase: Phase) -> &[Complex64] {
        &self.amplitudes[phase.index()]
    }

    pub fn amplitude(&self, window: usize, phase: Phase) -> Complex64 {
        self.amplitudes[phase.index()][window]
    }
}

/// Builds the branch table with the default budget.
pub fn branch_table(constellation: &Constellation, params: &AuxChannelParams) -> Result<BranchTable> {
    BranchTable::new(constellation, params, DEFAULT_BRANCH_BUDGET)
}

pub(crate) fn decode_window(mut w: usize, q: usize, points: &[f64], out: &mut [f64]) {
    for slot in out.iter_mut().rev() {
        *slot = points[w % q];
        w /= q;
    }
}
