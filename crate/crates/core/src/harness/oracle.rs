//! Small-instance checks of the forward recursion against enumeration.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::air::{brute_force_log_marginal, forward_log_marginal, Context};
use crate::constellation::{Constellation, Modulation};
use crate::density::{AuxChannelParams, AuxLikelihood};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub constellation: String,
    pub n: usize,
    pub taps: usize,
    pub forward: f64,
    pub brute_force: f64,
}

impl OracleCase {
    pub fn relative_error(&self) -> f64 {
        (self.forward - self.brute_force).abs() / self.brute_force.abs().max(f64::MIN_POSITIVE)
    }
}

/// Random parameters and samples for `Q in {2,4}`, `n in {4,5,6}`, `L in {1,3,5}`.
pub fn random_instance(rng: &mut impl Rng) -> Result<(Constellation, Vec<f64>, AuxChannelParams)> {
    let kind = if rng.gen_bool(0.5) {
        Modulation::Ask
    } else {
        Modulation::Pam
    };
    let c = Constellation::new(kind, [2, 4][rng.gen_range(0..2)])?;
    let n = rng.gen_range(4..=6);
    let l = [1, 3, 5][rng.gen_range(0..3)];
    let mut cplx = |s: f64| Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
    let taps = (0..l).map(|_| cplx(0.6)).collect();
    let mu_pre = [cplx(0.1), cplx(0.1)];
    let params = AuxChannelParams {
        taps,
        mu_pre,
        mu_post: [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)],
        var_pre: [rng.gen_range(0.005..0.3), rng.gen_range(0.005..0.3)],
        var_post: [rng.gen_range(0.005..0.3), rng.gen_range(0.005..0.3)],
    };
    params.validate()?;
    let samples = (0..2 * n).map(|_| rng.gen_range(-0.2..3.0)).collect();
    Ok((c, samples, params))
}

/// Runs `count` random instances with exact densities.
pub fn run_oracle(count: usize, seed: u64) -> Result<Vec<OracleCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lik = AuxLikelihood::exact();
    let ctx = Context::zeros();
    (0..count)
        .map(|_| {
            let (c, y, p) = random_instance(&mut rng)?;
            Ok(OracleCase {
                constellation: c.label(),
                n: y.len() / 2,
                taps: p.len(),
                forward: forward_log_marginal(&y, &p, &c, &lik, &ctx)?,
                brute_force: brute_force_log_marginal(&y, &p, &c, &lik, &ctx)?,
            })
        })
        .collect()
}
