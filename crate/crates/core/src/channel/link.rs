//! End-to-end link: symbols -> MZM -> fiber/VOA -> photodiode, at 2 samples
//! per symbol, with the launch power and noise levels of an experiment.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::fiber::{cd_frequency_response, FiberParams};
use super::mzm::{mzm_field, MzmParams, MzmTransfer};
use super::pulse::{raised_cosine_taps, PulseParams};
use super::response::{build_impulse_response, ImpulseResponse, ResponseOptions, RxFilter};
use super::{
    apply_channel, dbm_to_mw, mean_intensity, scale_to_launch_power, simulate_capture, NoiseSpec, ReceivedBlock,
};
use crate::constellation::{differential_precode, draw_symbols, upsample, Constellation, Modulation, SymbolBlock};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub constellation: Constellation,
    pub pulse: PulseParams,
    pub fiber: FiberParams,
    pub rx: RxFilter,
    pub transfer: MzmTransfer,
    pub v_pi: f64,
    /// ASK drive amplitude relative to `v_pi` (PAM uses half the swing).
    pub v_peak: f64,
    pub launch_dbm: f64,
    /// Launch-power-to-transmitter-noise ratio; the noise is attenuated
    /// together with the signal. `None` disables pre-detection noise.
    pub tx_snr_db: Option<f64>,
    /// Post-detection (thermal) noise variance in mW^2.
    pub thermal_var: f64,
    /// Sign-differential precoding of ASK symbols.
    pub precode: bool,
}

impl LinkConfig {
    pub fn new(constellation: Constellation, fiber: FiberParams) -> Self {
        Self {
            constellation,
            pulse: PulseParams::default(),
            fiber,
            rx: RxFilter::Open,
            transfer: MzmTransfer::IdealLinear,
            v_pi: 1.0,
            v_peak: 0.5,
            launch_dbm: -3.2,
            tx_snr_db: None,
            thermal_var: 0.0,
            precode: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        self.fiber.validate()?;
        if !(self.thermal_var >= 0.0) || !self.launch_dbm.is_finite() {
            return Err(Error::InvalidParameter("invalid launch power or thermal noise".into()));
        }
        if !(self.v_pi > 0.0 && self.v_peak > 0.0) {
            return Err(Error::InvalidParameter("MZM voltages must be positive".into()));
        }
        Ok(())
    }

    /// Period-2 noise at the photodiode.
    pub fn noise(&self) -> NoiseSpec {
        let pre = match self.tx_snr_db {
            Some(snr) => {
                dbm_to_mw(self.launch_dbm)
                    * 10f64.powf(-snr / 10.0)
                    * 10f64.powf(-self.fiber.total_attenuation_db() / 10.0)
            }
            None => 0.0,
        };
        NoiseSpec::white(pre, self.thermal_var)
    }
}

/// One simulated transmission.
#[derive(Debug, Clone)]
pub struct Transmission {
    /// Channel-input symbols (after precoding, if enabled).
    pub symbols: SymbolBlock,
    /// Symbols before precoding.
    pub raw: SymbolBlock,
    pub received: ReceivedBlock,
    /// Linear response from symbol levels to the received field, including
    /// launch scaling and attenuation (exact for the linear MZM).
    pub prior: ImpulseResponse,
    pub noise: NoiseSpec,
    /// Noiseless received field.
    pub field: Vec<Complex64>,
    /// Taps of the response discarded by truncation (relative energy).
    pub discarded_energy: f64,
}

/// Simulates `n` symbols; deterministic in `seed`.
pub fn simulate_link(cfg: &LinkConfig, n: usize, seed: u64) -> Result<Transmission> {
    cfg.validate()?;
    let raw = draw_symbols(&cfg.constellation, n, seed)?;
    let symbols = if cfg.precode && cfg.constellation.kind() == Modulation::Ask {
        differential_precode(&raw)?
    } else {
        raw.clone()
    };
    let x = upsample(&symbols);
    let response = build_impulse_response(&cfg.pulse, &cfg.fiber, &cfg.rx, &ResponseOptions::default())?;
    let fits = response.len() <= x.len();
    let rc = ImpulseResponse::from_real(&raised_cosine_taps(&cfg.pulse, 2)?)?;
    let noise = cfg.noise();

    let (field, prior) = match cfg.transfer {
        MzmTransfer::IdealLinear => {
            // The MZM is linear in the drive; fold the unit into the launch scale.
            let launch = apply_channel(&x, &rc)?;
            let (_, g) = scale_to_launch_power(&launch, cfg.launch_dbm)?;
            let prior = response.scaled(g);
            let field = if fits {
                apply_channel(&x, &prior)?
            } else {
                filter_block(&launch.iter().map(|v| v * g).collect::<Vec<_>>(), cfg)
            };
            (field, prior)
        }
        MzmTransfer::SineField => {
            let params =
                MzmParams::for_modulation(cfg.constellation.kind(), cfg.v_pi, cfg.v_peak, MzmTransfer::SineField);
            // Drive in ASK-level units: PAM level k maps to 2k - (Q-1).
            let q1 = cfg.constellation.order() as f64 - 1.0;
            let levels: Vec<f64> = match cfg.constellation.kind() {
                Modulation::Ask => x.samples().to_vec(),
                Modulation::Pam => x
                    .samples()
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| if k % 2 == 0 { 2.0 * v - q1 } else { 0.0 })
                    .collect(),
            };
            let drive = super::apply_channel_real(&levels, &raised_cosine_taps(&cfg.pulse, 2)?);
            let scale = MzmParams::drive_scale(cfg.constellation.kind(), cfg.v_peak, cfg.constellation.order());
            // PAM: higher drive -> larger field; keep levels increasing in x.
            let sign = if cfg.constellation.kind() == Modulation::Pam {
                -1.0
            } else {
                1.0
            };
            let tx: Vec<Complex64> = drive
                .iter()
                .map(|&d| Complex64::new(mzm_field(sign * scale * d, &params), 0.0))
                .collect();
            let (tx, g) = scale_to_launch_power(&tx, cfg.launch_dbm)?;
            let field = filter_block(&tx, cfg);
            // Tangent of the transfer at the bias, per unit of symbol level.
            let slope = std::f64::consts::PI / (2.0 * cfg.v_pi) * scale;
            let unit = match cfg.constellation.kind() {
                Modulation::Ask => slope,
                Modulation::Pam => 2.0 * slope,
            };
            (field, response.scaled(g * unit))
        }
    };
    let discarded_energy = response.discarded_energy();
    let received = simulate_capture(&field, &noise, seed ^ 0x5e_ed0f_da7a)?;
    if mean_intensity(&field) == 0.0 {
        return Err(Error::ZeroPower);
    }
    Ok(Transmission {
        symbols,
        raw,
        received,
        prior,
        noise,
        field,
        discarded_energy,
    })
}

/// Applies dispersion, the receiver filter and attenuation to a 2-SPS field
/// block in the frequency domain (zero-padded, so no wrap-around).
fn filter_block(field: &[Complex64], cfg: &LinkConfig) -> Vec<Complex64> {
    let len = (2 * field.len() + 1024).next_power_of_two();
    let fs = 2.0 * cfg.pulse.symbol_rate;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..field.len()].copy_from_slice(field);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let gain = cfg.fiber.field_gain() / len as f64;
    for (k, v) in buf.iter_mut().enumerate() {
        let f = if k < len / 2 { k as f64 } else { k as f64 - len as f64 } * fs / len as f64;
        *v *= cd_frequency_response(&cfg.fiber, f) * cfg.rx.gain(f) * gain;
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.truncate(field.len());
    buf
}
