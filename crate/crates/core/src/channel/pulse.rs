//! Raised-cosine pulse shaping.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Raised-cosine pulse parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    /// Roll-off factor in `[0, 1]`.
    pub roll_off: f64,
    /// Symbol rate in Bd.
    pub symbol_rate: f64,
    /// Truncation length in symbols; taps cover `±span/2` symbols.
    pub span: usize,
}

impl Default for PulseParams {
    fn default() -> Self {
        Self {
            roll_off: 0.2,
            symbol_rate: 30e9,
            span: 16,
        }
    }
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.roll_off) {
            return Err(Error::InvalidParameter(format!(
                "roll-off {} outside [0, 1]",
                self.roll_off
            )));
        }
        if !(self.symbol_rate > 0.0) {
            return Err(Error::InvalidParameter("symbol rate must be positive".into()));
        }
        if self.span < 2 {
            return Err(Error::InvalidParameter("pulse span must be at least 2 symbols".into()));
        }
        Ok(())
    }

    pub fn symbol_period(&self) -> f64 {
        1.0 / self.symbol_rate
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Peak-normalized raised cosine at time `t` given in symbol periods.
///
/// At `|t| = 1/(2 alpha)` numerator and denominator both vanish; the limit
/// `(pi/4) sinc(1/(2 alpha))` is returned there.
pub fn raised_cosine(t: f64, roll_off: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = 2.0 * roll_off * t;
    let denom = 1.0 - x * x;
    if roll_off > 0.0 && denom.abs() < 1e-8 {
        return PI / 4.0 * sinc(1.0 / (2.0 * roll_off));
    }
    sinc(t) * (PI * roll_off * t).cos() / denom
}

/// Raised-cosine spectrum at normalized frequency `nu = f T`, scaled so the
/// time-domain pulse has unit peak when multiplied by `T`.
pub fn raised_cosine_spectrum(nu: f64, roll_off: f64) -> f64 {
    let nu = nu.abs();
    let lo = (1.0 - roll_off) / 2.0;
    let hi = (1.0 + roll_off) / 2.0;
    if nu <= lo {
        1.0
    } else if nu <= hi {
        0.5 * (1.0 + (PI / roll_off * (nu - lo)).cos())
    } else {
        0.0
    }
}

/// Samples of the pulse at spacing `T / samples_per_symbol` over `±span/2` symbols.
pub fn raised_cosine_taps(pulse: &PulseParams, samples_per_symbol: usize) -> Result<Vec<f64>> {
    pulse.validate()?;
    if samples_per_symbol == 0 {
        return Err(Error::InvalidParameter("samples per symbol must be positive".into()));
    }
    let half = (pulse.span * samples_per_symbol / 2) as i64;
    Ok((-half..=half)
        .map(|k| raised_cosine(k as f64 / samples_per_symbol as f64, pulse.roll_off))
        .collect())
}
