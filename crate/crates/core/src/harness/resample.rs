//! Band-limited interpolation of captures onto the `T/2` grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Kernel length in input samples.
pub const KERNEL_TAPS: usize = 64;
const HALF: isize = KERNEL_TAPS as isize / 2;

/// Samples at `t_k = delay + k T/2`, whole symbols only.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub samples: Vec<f64>,
    /// Output samples dropped at the start for lack of kernel support
    /// (always even, so phase labels are preserved).
    pub leading_trim: usize,
    /// Output samples dropped at the end.
    pub trailing_trim: usize,
}

impl Resampled {
    /// Index of the first retained symbol.
    pub fn first_symbol(&self) -> usize {
        self.leading_trim / 2
    }

    pub fn trimmed(&self) -> usize {
        self.leading_trim + self.trailing_trim
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(x: f64) -> f64 {
    let u = PI * x / HALF as f64;
    0.42 + 0.5 * u.cos() + 0.08 * (2.0 * u).cos()
}

/// Windowed-sinc value at (fractional) input-sample position `t`, or `None`
/// where the kernel would reach past either end.
pub fn interpolate(samples: &[f64], t: f64) -> Option<f64> {
    let base = t.floor() as isize;
    let (lo, hi) = (base - HALF + 1, base + HALF);
    if lo < 0 || hi >= samples.len() as isize {
        return None;
    }
    let frac = t - base as f64;
    if frac == 0.0 {
        return Some(samples[base as usize]);
    }
    let (mut acc, mut norm) = (0.0, 0.0);
    for j in lo..=hi {
        let x = j as f64 - t;
        let w = sinc(x) * blackman(x);
        acc += w * samples[j as usize];
        norm += w;
    }
    Some(acc / norm)
}

/// Evaluates the band-limited interpolant of `samples` (rate `in_rate`) at
/// `t_k = delay + k T/2`, with `delay` in input samples. `symbols` caps the
/// output at `2 * symbols` samples before trimming.
pub fn resample_to_2sps(
    samples: &[f64],
    in_rate: f64,
    symbol_rate: f64,
    delay: f64,
    symbols: Option<usize>,
) -> Result<Resampled> {
    if !(symbol_rate > 0.0) || !(in_rate >= 2.0 * symbol_rate) {
        return Err(Error::RateInconsistent {
            sample_rate: in_rate,
            symbol_rate,
        });
    }
    if !delay.is_finite() {
        return Err(Error::InvalidParameter("delay must be finite".into()));
    }
    let step = in_rate / (2.0 * symbol_rate);
    let last = samples.len() as f64 - 1.0;
    let mut total = if delay > last {
        0
    } else {
        ((last - delay) / step).floor() as usize + 1
    };
    total -= total % 2;
    if let Some(n) = symbols {
        total = total.min(2 * n);
    }
    let values: Vec<Option<f64>> = (0..total)
        .map(|k| interpolate(samples, delay + k as f64 * step))
        .collect();
    let mut lead = values.iter().take_while(|v| v.is_none()).count();
    lead += lead % 2;
    let mut trail = values
        .iter()
        .rev()
        .take_while(|v| v.is_none())
        .count()
        .min(total - lead);
    trail += (total - lead - trail) % 2;
    let kept: Option<Vec<f64>> = values[lead..total - trail].iter().copied().collect();
    let samples = kept.ok_or_else(|| Error::InvalidParameter("interior sample without kernel support".into()))?;
    if samples.is_empty() {
        return Err(Error::EmptyBlock("resampled output"));
    }
    Ok(Resampled {
        samples,
        leading_trim: lead,
        trailing_trim: trail,
    })
}
