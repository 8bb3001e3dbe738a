//! Pilot synchronization by normalized cross-correlation of intensities.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Minimum peak normalized correlation accepted as a lock.
pub const SYNC_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncEstimate {
    /// Lag (in capture samples) of the correlation peak.
    pub integer: usize,
    /// Parabolic refinement in `[-0.5, 0.5]`.
    pub fraction: f64,
    /// Normalized correlation at the integer peak.
    pub peak: f64,
}

impl SyncEstimate {
    pub fn delay(&self) -> f64 {
        self.integer as f64 + self.fraction
    }
}

/// Normalized correlation of `pilot` against every full-overlap window of
/// `capture`; entry `d` compares `capture[d..d + pilot.len()]`.
pub fn normalized_correlation(capture: &[f64], pilot: &[f64]) -> Result<Vec<f64>> {
    let m = pilot.len();
    if m < 2 {
        return Err(Error::EmptyBlock("pilot waveform"));
    }
    if capture.len() < m {
        return Err(Error::LengthMismatch {
            what: "capture shorter than the pilot waveform",
            expected: m,
            got: capture.len(),
        });
    }
    let mean_p = pilot.iter().sum::<f64>() / m as f64;
    let p: Vec<f64> = pilot.iter().map(|v| v - mean_p).collect();
    let norm_p = p.iter().map(|v| v * v).sum::<f64>().sqrt();

    // Cross-correlation via FFT: sum_k c[d + k] p[k].
    let len = (capture.len() + m).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let mut a: Vec<Complex64> = capture.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    a.resize(len, Complex64::new(0.0, 0.0));
    let mut b: Vec<Complex64> = p.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    b.resize(len, Complex64::new(0.0, 0.0));
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    planner.plan_fft_inverse(len).process(&mut a);

    // Window energies about the window mean from prefix sums.
    let mut s1 = vec![0.0; capture.len() + 1];
    let mut s2 = vec![0.0; capture.len() + 1];
    for (k, &v) in capture.iter().enumerate() {
        s1[k + 1] = s1[k] + v;
        s2[k + 1] = s2[k] + v * v;
    }
    let lags = capture.len() - m + 1;
    Ok((0..lags)
        .map(|d| {
            let sum = s1[d + m] - s1[d];
            let energy = (s2[d + m] - s2[d] - sum * sum / m as f64).max(0.0);
            let denom = energy.sqrt() * norm_p;
            if denom > 0.0 {
                a[d].re / len as f64 / denom
            } else {
                0.0
            }
        })
        .collect())
}

/// Locates `pilot` in `capture`.
pub fn synchronize(capture: &[f64], pilot: &[f64]) -> Result<SyncEstimate> {
    let rho = normalized_correlation(capture, pilot)?;
    let (integer, peak) =
        rho.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (d, r)| if r > best.1 { (d, r) } else { best },
        );
    if !(peak >= SYNC_THRESHOLD) {
        return Err(Error::NoSync {
            peak,
            threshold: SYNC_THRESHOLD,
        });
    }
    let fraction = if integer > 0 && integer + 1 < rho.len() {
        let (l, c, r) = (rho[integer - 1], rho[integer], rho[integer + 1]);
        let curv = l - 2.0 * c + r;
        if curv < 0.0 {
            (0.5 * (l - r) / curv).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(SyncEstimate {
        integer,
        fraction,
        peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Direct O(N M) correlation.
    fn direct(c: &[f64], p: &[f64], d: usize) -> f64 {
        let m = p.len() as f64;
        let w = &c[d..d + p.len()];
        let (mc, mp) = (w.iter().sum::<f64>() / m, p.iter().sum::<f64>() / m);
        let num: f64 = w.iter().zip(p).map(|(a, b)| (a - mc) * (b - mp)).sum();
        let ea: f64 = w.iter().map(|a| (a - mc).powi(2)).sum();
        let eb: f64 = p.iter().map(|b| (b - mp).powi(2)).sum();
        num / (ea * eb).sqrt()
    }

    #[test]
    fn fft_correlation_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<f64> = (0..300).map(|_| rng.gen::<f64>() * 2.0 + 1.0).collect();
        let p: Vec<f64> = (0..40).map(|_| rng.gen()).collect();
        let rho = normalized_correlation(&c, &p).unwrap();
        assert_eq!(rho.len(), 261);
        for d in [0, 17, 260] {
            assert!((rho[d] - direct(&c, &p, d)).abs() < 1e-10);
        }
    }

    #[test]
    fn integer_delay() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pilot: Vec<f64> = (0..512).map(|_| rng.gen::<f64>().powi(2)).collect();
        let mut capture: Vec<f64> = (0..137).map(|_| rng.gen::<f64>().powi(2)).collect();
        capture.extend(pilot.iter().map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal)));
        capture.extend((0..300).map(|_| rng.gen::<f64>().powi(2)));
        let s = synchronize(&capture, &pilot).unwrap();
        assert_eq!(s.integer, 137);
        assert!(s.peak > 0.9);
    }

    #[test]
    fn noise_does_not_lock() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pilot: Vec<f64> = (0..2000).map(|_| rng.gen()).collect();
        let capture: Vec<f64> = (0..10000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(matches!(synchronize(&capture, &pilot), Err(Error::NoSync { .. })));
    }
}
