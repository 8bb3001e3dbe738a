//! Mach-Zehnder modulator field transfer and the ASK/PAM bias configurations.

use std::f64::consts::PI;

use crate::constellation::Modulation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MzmTransfer {
    /// First-order expansion of the cosine transfer about the null point.
    IdealLinear,
    /// `cos(pi v / (2 v_pi))` of the total drive.
    SineField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MzmParams {
    /// Null-point voltage.
    pub v_pi: f64,
    pub bias: f64,
    /// Drive amplitude: ASK symbols span `±v_peak` at the symbol instants.
    pub v_peak: f64,
    pub transfer: MzmTransfer,
}

impl MzmParams {
    /// Null-point bias with full swing (bipolar field).
    pub fn ask(v_pi: f64, v_peak: f64, transfer: MzmTransfer) -> Self {
        Self {
            v_pi,
            bias: v_pi,
            v_peak,
            transfer,
        }
    }

    /// Half swing with the bias shifted by `v_peak / 2` so the lowest level
    /// lands on the null point (non-negative field).
    pub fn pam(v_pi: f64, v_peak: f64, transfer: MzmTransfer) -> Self {
        Self {
            v_pi,
            bias: v_pi - v_peak / 2.0,
            v_peak,
            transfer,
        }
    }

    pub fn for_modulation(kind: Modulation, v_pi: f64, v_peak: f64, transfer: MzmTransfer) -> Self {
        match kind {
            Modulation::Ask => Self::ask(v_pi, v_peak, transfer),
            Modulation::Pam => Self::pam(v_pi, v_peak, transfer),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_pi > 0.0) {
            return Err(Error::InvalidParameter("v_pi must be positive".into()));
        }
        Ok(())
    }

    /// Drive voltage scale for a bipolar level sequence of order `q`: ASK uses
    /// `v_peak / (q-1)`, PAM half of it.
    pub fn drive_scale(kind: Modulation, v_peak: f64, q: usize) -> f64 {
        let full = v_peak / (q as f64 - 1.0);
        match kind {
            Modulation::Ask => full,
            Modulation::Pam => full / 2.0,
        }
    }
}

/// Optical field for drive voltage `drive` added to the bias.
pub fn mzm_field(drive: f64, params: &MzmParams) -> f64 {
    let v = params.bias + drive;
    match params.transfer {
        MzmTransfer::IdealLinear => -PI / (2.0 * params.v_pi) * (v - params.v_pi),
        MzmTransfer::SineField => (PI * v / (2.0 * params.v_pi)).cos(),
    }
}

fn mean_power(drive: &[f64], params: &MzmParams, scale: f64) -> f64 {
    drive.iter().map(|&v| mzm_field(scale * v, params).powi(2)).sum::<f64>() / drive.len() as f64
}

/// PAM bias (half swing) whose mean optical power over `waveform` equals that
/// of the null-biased ASK configuration driven by the same waveform.
///
/// `waveform` holds the bipolar drive in units of `v_peak` (ASK swing).
pub fn equal_power_pam_bias(ask: &MzmParams, waveform: &[f64]) -> Result<f64> {
    ask.validate()?;
    if waveform.is_empty() {
        return Err(Error::EmptyBlock("drive waveform"));
    }
    let target = mean_power(waveform, ask, ask.v_peak);
    let power_at = |offset: f64| {
        let p = MzmParams {
            bias: ask.v_pi - offset,
            ..*ask
        };
        mean_power(waveform, &p, ask.v_peak / 2.0) - target
    };
    // Offset from the null point in (0, v_pi]; power grows with the offset.
    let (mut lo, mut hi) = (0.0, ask.v_pi);
    if power_at(lo) > 0.0 || power_at(hi) < 0.0 {
        return Err(Error::InvalidParameter(
            "no PAM bias reaches the ASK launch power".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power_at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ask.v_pi - 0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_channel_real;
    use crate::channel::pulse::{raised_cosine_taps, PulseParams};
    use crate::constellation::{draw_symbols, upsample, Constellation};

    #[test]
    fn null_point_and_odd_symmetry() {
        let p = MzmParams::ask(1.0, 0.5, MzmTransfer::SineField);
        assert!(mzm_field(0.0, &p).abs() < 1e-15);
        for v in [0.1, 0.3, 0.7] {
            let a = mzm_field(v, &p);
            let b = mzm_field(-v, &p);
            assert!((a + b).abs() < 1e-15);
            assert!(a != 0.0);
        }
    }

    #[test]
    fn linear_transfer_is_tangent_at_null() {
        let lin = MzmParams::ask(2.0, 1.0, MzmTransfer::IdealLinear);
        let sine = MzmParams::ask(2.0, 1.0, MzmTransfer::SineField);
        let dv = 1e-6;
        assert!((mzm_field(dv, &lin) - mzm_field(dv, &sine)).abs() < 1e-15);
        assert!((mzm_field(0.5, &lin) / mzm_field(0.25, &lin) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pam_levels_non_negative_at_symbols() {
        let p = MzmParams::pam(1.0, 0.8, MzmTransfer::IdealLinear);
        let scale = MzmParams::drive_scale(Modulation::Pam, 0.8, 4);
        let fields: Vec<f64> = [-3.0, -1.0, 1.0, 3.0]
            .iter()
            .map(|&a| mzm_field(-scale * a, &p))
            .collect();
        assert!(fields[0].abs() < 1e-12);
        assert!(fields.windows(2).all(|w| w[1] > w[0]));
        // Equally spaced levels, like {0, 1, 2, 3}.
        let step = fields[1] - fields[0];
        for (k, f) in fields.iter().enumerate() {
            assert!((f - k as f64 * step).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_power_bias_matches_ask_power() {
        // Long pulse-shaped 4-ASK drive, normalized to the ASK swing.
        let c = Constellation::new(Modulation::Ask, 4).unwrap();
        let sym = draw_symbols(&c, 4000, 21).unwrap();
        let rc = raised_cosine_taps(&PulseParams::default(), 2).unwrap();
        let wave: Vec<f64> = apply_channel_real(upsample(&sym).samples(), &rc)
            .iter()
            .map(|v| v / 3.0)
            .collect();
        let ask = MzmParams::ask(1.0, 0.5, MzmTransfer::SineField);
        let bias = equal_power_pam_bias(&ask, &wave).unwrap();
        let pam = MzmParams { bias, ..ask };

        let p_ask: f64 = wave
            .iter()
            .map(|&v| mzm_field(ask.v_peak * v, &ask).powi(2))
            .sum::<f64>();
        let fields: Vec<f64> = wave.iter().map(|&v| mzm_field(ask.v_peak / 2.0 * v, &pam)).collect();
        let p_pam: f64 = fields.iter().map(|f| f * f).sum::<f64>();
        assert!((p_pam / p_ask - 1.0).abs() < 5e-3);
        // Unipolar at the symbol instants; RC overshoot between symbols may
        // still dip through the null.
        assert!(fields.iter().step_by(2).all(|&f| f > 0.0));
    }
}
