//! Standard single-mode fiber: chromatic dispersion and loss.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Fiber span plus a variable optical attenuator. `length_km == 0` is back-to-back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberParams {
    pub length_km: f64,
    /// Dispersion parameter `D` in ps/(nm km).
    pub dispersion: f64,
    /// Loss in dB/km.
    pub attenuation_per_km: f64,
    pub wavelength_nm: f64,
    /// VOA attenuation in dB (intensity).
    pub extra_attenuation_db: f64,
}

impl FiberParams {
    pub fn back_to_back() -> Self {
        Self {
            length_km: 0.0,
            dispersion: 17.0,
            attenuation_per_km: 0.2,
            wavelength_nm: 1550.0,
            extra_attenuation_db: 0.0,
        }
    }

    pub fn ssmf(length_km: f64) -> Self {
        Self {
            length_km,
            ..Self::back_to_back()
        }
    }

    pub fn with_voa(mut self, attenuation_db: f64) -> Self {
        self.extra_attenuation_db = attenuation_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_km < 0.0 || self.attenuation_per_km < 0.0 || self.extra_attenuation_db < 0.0 {
            return Err(Error::InvalidParameter(
                "fiber length and attenuations must be non-negative".into(),
            ));
        }
        if !(self.wavelength_nm > 0.0) {
            return Err(Error::InvalidParameter("wavelength must be positive".into()));
        }
        Ok(())
    }

    /// Group-velocity dispersion `beta2 = -D lambda^2 / (2 pi c)` in ps^2/km.
    pub fn beta2_ps2_per_km(&self) -> f64 {
        self.beta2_si() * 1e27
    }

    /// `beta2` in s^2/m.
    fn beta2_si(&self) -> f64 {
        let d = self.dispersion * 1e-6; // ps/(nm km) -> s/m^2
        let lambda = self.wavelength_nm * 1e-9;
        -d * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
    }

    /// Total intensity attenuation (fiber loss plus VOA) in dB.
    pub fn total_attenuation_db(&self) -> f64 {
        self.length_km * self.attenuation_per_km + self.extra_attenuation_db
    }

    /// Field amplitude factor for the total attenuation; intensities carry the full dB.
    pub fn field_gain(&self) -> f64 {
        db_to_field(self.total_attenuation_db())
    }
}

/// Field amplitude factor for an intensity attenuation of `db`.
pub fn db_to_field(db: f64) -> f64 {
    10f64.powf(-db / 20.0)
}

/// All-pass dispersion response `exp(j beta2 L (2 pi f)^2 / 2)` at frequency `f` in Hz.
pub fn cd_frequency_response(fiber: &FiberParams, f: f64) -> Complex64 {
    let omega = 2.0 * PI * f;
    let phase = fiber.beta2_si() * fiber.length_km * 1e3 * omega * omega / 2.0;
    Complex64::from_polar(1.0, phase)
}
