//! Oversampled end-to-end impulse response: pulse, dispersion, receiver
//! front end and attenuation.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::fiber::{cd_frequency_response, FiberParams};
use super::pulse::{raised_cosine_spectrum, PulseParams};
use crate::error::{Error, Result};

/// Receiver front-end low-pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RxFilter {
    /// Transparent front end.
    Open,
    /// Zero-phase 4th-order Butterworth magnitude with 3 dB bandwidth in Hz.
    LowPass4 { bandwidth_hz: f64 },
}

impl RxFilter {
    pub fn gain(&self, f: f64) -> f64 {
        match *self {
            RxFilter::Open => 1.0,
            RxFilter::LowPass4 { bandwidth_hz } => 1.0 / (1.0 + (f / bandwidth_hz).powi(8)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Pulse has unit peak before dispersion and attenuation.
    Peak,
    /// Taps rescaled to unit energy before attenuation.
    UnitEnergy,
}

#[derive(Debug, Clone, Copy)]
pub struct ResponseOptions {
    pub samples_per_symbol: usize,
    /// Explicit odd tap count; `None` picks `2 * span * sps + 1` and grows it
    /// until less than `1e-6` of the energy is discarded.
    pub taps: Option<usize>,
    pub normalization: Normalization,
    /// Transform length; must be a power of two.
    pub fft_len: usize,
}

impl Default for ResponseOptions {
    fn default() -> Self {
        Self {
            samples_per_symbol: 2,
            taps: None,
            normalization: Normalization::Peak,
            fft_len: 1 << 16,
        }
    }
}

/// `M` complex taps at spacing `T / sps`, centered on `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    taps: Vec<Complex64>,
    samples_per_symbol: usize,
    normalization: Normalization,
    discarded_energy: f64,
}

impl ImpulseResponse {
    /// Wraps explicit taps (odd count, positive energy).
    pub fn from_taps(taps: Vec<Complex64>, samples_per_symbol: usize) -> Result<Self> {
        if taps.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "impulse response needs an odd tap count, got {}",
                taps.len()
            )));
        }
        let energy: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        if !(energy > 0.0 && energy.is_finite()) {
            return Err(Error::InvalidParameter(
                "impulse response energy must be positive".into(),
            ));
        }
        Ok(Self {
            taps,
            samples_per_symbol,
            normalization: Normalization::Peak,
            discarded_energy: 0.0,
        })
    }

    pub fn from_real(taps: &[f64]) -> Result<Self> {
        Self::from_taps(taps.iter().map(|&t| Complex64::new(t, 0.0)).collect(), 2)
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.samples_per_symbol
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Fraction of the untruncated energy outside the kept window.
    pub fn discarded_energy(&self) -> f64 {
        self.discarded_energy
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// RMS width of `|h|^2` about its centroid, in samples.
    pub fn rms_width(&self) -> f64 {
        let e = self.energy();
        let c = (self.taps.len() / 2) as f64;
        let mean: f64 = self
            .taps
            .iter()
            .enumerate()
            .map(|(k, t)| (k as f64 - c) * t.norm_sqr())
            .sum::<f64>()
            / e;
        let var: f64 = self
            .taps
            .iter()
            .enumerate()
            .map(|(k, t)| (k as f64 - c - mean).powi(2) * t.norm_sqr())
            .sum::<f64>()
            / e;
        var.sqrt()
    }

    /// The centered `len` taps (odd, at most the current length).
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len.is_multiple_of(2) || len > self.taps.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate {} taps to {len}",
                self.taps.len()
            )));
        }
        let start = (self.taps.len() - len) / 2;
        let taps = self.taps[start..start + len].to_vec();
        let kept: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        let total = self.energy() / (1.0 - self.discarded_energy).max(f64::MIN_POSITIVE);
        Ok(Self {
            taps,
            samples_per_symbol: self.samples_per_symbol,
            normalization: self.normalization,
            discarded_energy: (1.0 - kept / total).max(0.0),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            taps: self.taps.iter().map(|t| t * factor).collect(),
            ..self.clone()
        }
    }
}

/// Untruncated response on the transform grid, index `k` holding time `k` for
/// `k < N/2` and `k - N` otherwise.
fn full_response(
    pulse: &PulseParams,
    fiber: &FiberParams,
    rx: &RxFilter,
    sps: usize,
    fft_len: usize,
) -> Vec<Complex64> {
    let fs = sps as f64 * pulse.symbol_rate;
    let t = pulse.symbol_period();
    let df = fs / fft_len as f64;
    let mut spectrum: Vec<Complex64> = (0..fft_len)
        .map(|b| {
            let signed = if b < fft_len / 2 {
                b as f64
            } else {
                b as f64 - fft_len as f64
            };
            let f = signed * df;
            let p = raised_cosine_spectrum(f * t, pulse.roll_off);
            if p == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                cd_frequency_response(fiber, f) * (p * t * df * rx.gain(f))
            }
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(fft_len).process(&mut spectrum);
    spectrum
}

/// Builds the `M`-tap response at `T/sps` spacing as the inverse transform of
/// raised-cosine spectrum x dispersion x receiver low-pass, scaled by the
/// total attenuation in field units.
pub fn build_impulse_response(
    pulse: &PulseParams,
    fiber: &FiberParams,
    rx: &RxFilter,
    options: &ResponseOptions,
) -> Result<ImpulseResponse> {
    pulse.validate()?;
    fiber.validate()?;
    if let RxFilter::LowPass4 { bandwidth_hz } = rx {
        if !(*bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter("receiver bandwidth must be positive".into()));
        }
    }
    let sps = options.samples_per_symbol;
    let n = options.fft_len;
    if sps < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(
            "need at least 2 samples per symbol and a power-of-two transform".into(),
        ));
    }
    let max_taps = n / 2 - 1;
    if let Some(m) = options.taps {
        if m % 2 == 0 {
            return Err(Error::InvalidParameter(format!("tap count {m} must be odd")));
        }
        if m > max_taps {
            return Err(Error::ResponseTooLong { taps: m, samples: n });
        }
    }

    let full = full_response(pulse, fiber, rx, sps, n);
    let at = |k: i64| -> Complex64 { full[k.rem_euclid(n as i64) as usize] };
    let total: f64 = full.iter().map(|c| c.norm_sqr()).sum();

    let window_energy = |m: usize| -> f64 {
        let half = (m / 2) as i64;
        (-half..=half).map(|k| at(k).norm_sqr()).sum()
    };
    let m = match options.taps {
        Some(m) => m,
        None => {
            let mut m = (2 * pulse.span * sps + 1).min(max_taps | 1);
            while m + 2 * sps <= max_taps && 1.0 - window_energy(m) / total > 1e-6 {
                m += 2 * sps;
            }
            m
        }
    };
    let half = (m / 2) as i64;
    let mut taps: Vec<Complex64> = (-half..=half).map(at).collect();
    let kept: f64 = taps.iter().map(|c| c.norm_sqr()).sum();
    let discarded = (1.0 - kept / total).max(0.0);

    if options.normalization == Normalization::UnitEnergy {
        let s = kept.sqrt();
        taps.iter_mut().for_each(|t| *t /= s);
    }
    let g = fiber.field_gain();
    taps.iter_mut().for_each(|t| *t *= g);

    Ok(ImpulseResponse {
        taps,
        samples_per_symbol: sps,
        normalization: options.normalization,
        discarded_energy: discarded,
    })
}
