//! Oversampled square-law channel: Toeplitz convolution with border discard,
//! launch-power scaling, and the two-noise intensity model
//! `y = |H x' + n1 + mu1|^2 + n2 + mu2`.

pub mod fiber;
pub mod link;
pub mod mzm;
pub mod pulse;
pub mod response;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::constellation::UpsampledSequence;
use crate::error::{Error, Result};

pub use fiber::{cd_frequency_response, FiberParams};
pub use link::{simulate_link, LinkConfig, Transmission};
pub use mzm::{equal_power_pam_bias, mzm_field, MzmParams, MzmTransfer};
pub use pulse::{raised_cosine, raised_cosine_taps, PulseParams};
pub use response::{build_impulse_response, ImpulseResponse, Normalization, ResponseOptions, RxFilter};

/// Sampling phase within a symbol at two samples per symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    OnSymbol = 0,
    BetweenSymbols = 1,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::OnSymbol, Phase::BetweenSymbols];

    pub fn of_sample(k: usize) -> Phase {
        if k.is_multiple_of(2) {
            Phase::OnSymbol
        } else {
            Phase::BetweenSymbols
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Phase {
        match self {
            Phase::OnSymbol => Phase::BetweenSymbols,
            Phase::BetweenSymbols => Phase::OnSymbol,
        }
    }
}

/// Centered linear convolution keeping `x.len()` outputs:
/// `out[k] = sum_m h[m] x[k - m + (M-1)/2]`, out-of-range inputs are zero.
pub fn convolve_centered(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    let c = (taps.len() / 2) as isize;
    let n = x.len() as isize;
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, h) in taps.iter().enumerate() {
                let idx = k - m as isize + c;
                if (0..n).contains(&idx) {
                    acc += h * x[idx as usize];
                }
            }
            acc
        })
        .collect()
}

pub(crate) fn apply_channel_real(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let c = (taps.len() / 2) as isize;
    let n = x.len() as isize;
    (0..n)
        .map(|k| {
            taps.iter()
                .enumerate()
                .filter_map(|(m, h)| {
                    let idx = k - m as isize + c;
                    (0..n).contains(&idx).then(|| h * x[idx as usize])
                })
                .sum()
        })
        .collect()
}

/// `H X'`: the `2n x 2n` Toeplitz product with border samples discarded.
pub fn apply_channel(upsampled: &UpsampledSequence, response: &ImpulseResponse) -> Result<Vec<Complex64>> {
    if response.len() > upsampled.len() {
        return Err(Error::ResponseTooLong {
            taps: response.len(),
            samples: upsampled.len(),
        });
    }
    let x: Vec<Complex64> = upsampled.samples().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    // Only even positions are non-zero; skip the odd ones.
    let taps = response.taps();
    let c = (taps.len() / 2) as isize;
    let n = x.len() as isize;
    Ok((0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            let first = k + c - (taps.len() as isize - 1);
            let mut idx = first.max(0);
            if idx % 2 == 1 {
                idx += 1;
            }
            while idx <= (k + c).min(n - 1) {
                acc += taps[(k - idx + c) as usize] * x[idx as usize].re;
                idx += 2;
            }
            acc
        })
        .collect())
}

/// Multiplies a field sequence by one positive factor so its mean intensity
/// equals `target_dbm` (in mW). Returns the scaled sequence and the factor.
pub fn scale_to_launch_power(field: &[Complex64], target_dbm: f64) -> Result<(Vec<Complex64>, f64)> {
    let power = mean_intensity(field);
    if !(power > 0.0) {
        return Err(Error::ZeroPower);
    }
    let factor = (dbm_to_mw(target_dbm) / power).sqrt();
    Ok((field.iter().map(|v| v * factor).collect(), factor))
}

pub fn mean_intensity(field: &[Complex64]) -> f64 {
    if field.is_empty() {
        return 0.0;
    }
    field.iter().map(|v| v.norm_sqr()).sum::<f64>() / field.len() as f64
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Period-2 noise and bias structure: index 0 is the on-symbol phase, 1 the
/// between-symbol phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Variance of the circularly-symmetric complex noise before the square law.
    pub var_pre: [f64; 2],
    /// Variance of the real noise after the square law.
    pub var_post: [f64; 2],
    pub mu_pre: [Complex64; 2],
    pub mu_post: [f64; 2],
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            var_pre: [0.0; 2],
            var_post: [0.0; 2],
            mu_pre: [Complex64::new(0.0, 0.0); 2],
            mu_post: [0.0; 2],
        }
    }

    pub fn white(var_pre: f64, var_post: f64) -> Self {
        Self {
            var_pre: [var_pre; 2],
            var_post: [var_post; 2],
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.var_pre.iter().chain(&self.var_post);
        if all.clone().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("noise variances must be non-negative".into()));
        }
        Ok(())
    }
}

/// `2n` intensity samples, phases alternating from on-symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    samples: Vec<f64>,
    provenance: String,
}

impl ReceivedBlock {
    pub fn new(samples: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if !samples.len().is_multiple_of(2) {
            return Err(Error::LengthMismatch {
                what: "received block must hold an even number of samples",
                expected: samples.len() + 1,
                got: samples.len(),
            });
        }
        Ok(Self {
            samples,
            provenance: provenance.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn symbol_count(&self) -> usize {
        self.samples.len() / 2
    }

    pub fn phase_label(&self, k: usize) -> Phase {
        Phase::of_sample(k)
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

/// Square-law detection with pre- and post-detection noise, deterministic in `seed`.
pub fn simulate_capture(field: &[Complex64], noise: &NoiseSpec, seed: u64) -> Result<ReceivedBlock> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = field
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let p = k % 2;
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let c: f64 = StandardNormal.sample(&mut rng);
            let sd1 = (noise.var_pre[p] / 2.0).sqrt();
            let n1 = Complex64::new(a * sd1, b * sd1);
            (s + noise.mu_pre[p] + n1).norm_sqr() + noise.mu_post[p] + c * noise.var_post[p].sqrt()
        })
        .collect();
    ReceivedBlock::new(samples, format!("simulated seed={seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{draw_symbols, upsample, upsample_values, Constellation, Modulation};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_channels() {
        let x = upsample_values(&[2.0, 3.0]);
        let one = ImpulseResponse::from_real(&[1.0]).unwrap();
        assert_eq!(apply_channel(&x, &one).unwrap(), vec![c(2.0), c(0.0), c(3.0), c(0.0)]);
        let delta = ImpulseResponse::from_real(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(apply_channel(&x, &delta).unwrap(), vec![c(2.0), c(0.0), c(3.0), c(0.0)]);
        let long = ImpulseResponse::from_real(&[1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(apply_channel(&x, &long), Err(Error::ResponseTooLong { .. })));
    }

    #[test]
    fn matches_explicit_toeplitz_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let taps: Vec<Complex64> = (0..5)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let h = ImpulseResponse::from_taps(taps.clone(), 2).unwrap();
        let cst = Constellation::new(Modulation::Ask, 4).unwrap();
        let x = upsample(&draw_symbols(&cst, 4, 9).unwrap());
        // H[k][j] = h[k - j + c] for the 1-based "valid-centered" Toeplitz matrix.
        let n = 8;
        let cc = 2isize;
        let mut expect = vec![Complex64::new(0.0, 0.0); n];
        for (k, e) in expect.iter_mut().enumerate() {
            for j in 0..n {
                let m = k as isize - j as isize + cc;
                if (0..5).contains(&m) {
                    *e += taps[m as usize] * x.samples()[j];
                }
            }
        }
        let got = apply_channel(&x, &h).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12);
        }
        let generic = convolve_centered(&x.samples().iter().map(|&v| c(v)).collect::<Vec<_>>(), &taps);
        for (a, b) in generic.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn launch_power_scaling() {
        let field = vec![c(1.0), c(-2.0), Complex64::new(0.5, 0.5), c(0.0)];
        let (scaled, factor) = scale_to_launch_power(&field, -3.2).unwrap();
        assert!(factor > 0.0);
        let target = 10f64.powf(-0.32);
        assert!((mean_intensity(&scaled) / target - 1.0).abs() < 1e-9);
        for i in 0..3 {
            assert!((scaled[i] / scaled[1] - field[i] / field[1]).norm() < 1e-12);
        }
        let p = 10.0 * mean_intensity(&field).log10();
        let (_, same) = scale_to_launch_power(&field, p).unwrap();
        assert!((same - 1.0).abs() < 1e-12);
        assert!(matches!(
            scale_to_launch_power(&[c(0.0); 3], 0.0),
            Err(Error::ZeroPower)
        ));
    }

    #[test]
    fn pure_square_law() {
        let y = simulate_capture(&[c(2.0), c(0.0), c(-3.0), c(0.0)], &NoiseSpec::noiseless(), 1).unwrap();
        assert_eq!(y.samples(), &[4.0, 0.0, 9.0, 0.0]);
        let mut shifted = NoiseSpec::noiseless();
        shifted.mu_post = [0.25, 0.25];
        let y = simulate_capture(&[c(2.0), c(0.0)], &shifted, 1).unwrap();
        assert_eq!(y.samples(), &[4.25, 0.25]);
        let mut bad = NoiseSpec::noiseless();
        bad.var_post[1] = -1.0;
        assert!(simulate_capture(&[c(1.0)], &bad, 0).is_err());
    }

    #[test]
    fn pre_detection_noise_mean() {
        let sigma = 0.7;
        let n = 1_000_000;
        let field = vec![c(0.0); n];
        let mut spec = NoiseSpec::noiseless();
        spec.var_pre = [sigma; 2];
        let y = simulate_capture(&field, &spec, 17).unwrap();
        let mean = y.samples().iter().sum::<f64>() / n as f64;
        // |n1|^2 is exponential with mean and sd equal to sigma.
        let se = sigma / (n as f64).sqrt();
        assert!((mean - sigma).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn on_symbol_variance_matches_analytic() {
        let s = 1.5;
        let (v1, v2) = (0.2, 0.05);
        let n = 400_000;
        let field = vec![c(s); 2 * n];
        let mut spec = NoiseSpec::white(v1, v2);
        spec.var_pre[1] = 1.0;
        let y = simulate_capture(&field, &spec, 3).unwrap();
        let on: Vec<f64> = y.samples().iter().step_by(2).copied().collect();
        let mean = on.iter().sum::<f64>() / n as f64;
        let var = on.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        // Var|s + n1|^2 = 2 s^2 v1 + v1^2 for CSCG n1.
        let analytic = 2.0 * s * s * v1 + v1 * v1 + v2;
        assert!((var / analytic - 1.0).abs() < 0.01, "{var} vs {analytic}");
        assert!((mean - (s * s + v1)).abs() < 0.01);
    }

    #[test]
    fn sign_invisible_without_pre_noise() {
        let field: Vec<Complex64> = [1.0, -0.4, 3.0, 2.0].iter().map(|&v| c(v)).collect();
        let neg: Vec<Complex64> = field.iter().map(|v| -v).collect();
        let spec = NoiseSpec::white(0.0, 0.3);
        assert_eq!(
            simulate_capture(&field, &spec, 8).unwrap(),
            simulate_capture(&neg, &spec, 8).unwrap()
        );
    }

    #[test]
    fn phase_labels_alternate() {
        let y = ReceivedBlock::new(vec![0.0; 6], "t").unwrap();
        let labels: Vec<Phase> = (0..6).map(|k| y.phase_label(k)).collect();
        assert_eq!(labels[0], Phase::OnSymbol);
        assert!(labels.windows(2).all(|w| w[0] != w[1]));
        assert!(ReceivedBlock::new(vec![0.0; 3], "t").is_err());
    }

    proptest! {
        #[test]
        fn channel_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let taps: Vec<Complex64> = (0..7)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let h = ImpulseResponse::from_taps(taps, 2).unwrap();
            let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let z: Vec<f64> = (0..12).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mix: Vec<f64> = x.iter().zip(&z).map(|(p, q)| a * p + b * q).collect();
            let hx = apply_channel(&upsample_values(&x), &h).unwrap();
            let hz = apply_channel(&upsample_values(&z), &h).unwrap();
            let hm = apply_channel(&upsample_values(&mix), &h).unwrap();
            for k in 0..hm.len() {
                prop_assert!((hm[k] - (hx[k] * a + hz[k] * b)).norm() < 1e-12);
            }
        }

        #[test]
        fn square_law_non_negative(seed in any::<u64>(), v1 in 0.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let field: Vec<Complex64> = (0..64)
                .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let y = simulate_capture(&field, &NoiseSpec::white(v1, 0.0), seed).unwrap();
            prop_assert!(y.samples().iter().all(|&v| v >= 0.0));
        }
    }
}
