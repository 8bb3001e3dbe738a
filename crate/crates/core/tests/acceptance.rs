//! Acceptance suite: prints one PASS/FAIL line per criterion.
//!
//! Set `DDAIR_ACCEPTANCE=1,2,8` to run a subset while iterating.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ddair::air::{brute_force_log_marginal, forward_log_marginal, Context};
use ddair::channel::pulse::raised_cosine;
use ddair::channel::{apply_channel, simulate_capture, ImpulseResponse, NoiseSpec, Phase};
use ddair::constellation::{draw_symbols, upsample};
use ddair::density::{log_density_sample, QuadratureSpec};
use ddair::fit::{cross_validate, fit, fit_from, FitConfig};
use ddair::harness::capture::{read_capture, write_capture, Capture, CaptureMeta};
use ddair::harness::resample::resample_to_2sps;
use ddair::harness::sweep::{
    default_workers, horizontal_gain, run_rate_point, run_sweep, split_blocks, RatePoint, SweepConfig, SweepResult,
    SweepRow,
};
use ddair::harness::sync::synchronize;
use ddair::{AuxChannelParams, AuxLikelihood, Constellation, Modulation};

/// Criteria expected to fail, with the reason (see the project notes).
const KNOWN_GAPS: [(usize, &str); 1] = [(
    4,
    "simulated B2B link: the 11-tap receiver cannot represent the +-3.5T raised-cosine tail, \
     capping 4-ASK near 1.92 bpcu, so PAM still leads at 1.8 bpcu",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn selected(id: usize) -> bool {
    match std::env::var("DDAIR_ACCEPTANCE") {
        Ok(list) => list.split(',').any(|s| s.trim().parse() == Ok(id)),
        Err(_) => true,
    }
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lik = AuxLikelihood::exact();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for q in [2, 4] {
        for n in [4, 5, 6] {
            for l in [1, 3, 5] {
                for rep in 0..3 {
                    let kind = if rep % 2 == 0 { Modulation::Ask } else { Modulation::Pam };
                    let c = Constellation::new(kind, q).unwrap();
                    let mut z = |s: f64| Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
                    let taps: Vec<Complex64> = (0..l).map(|_| z(0.7)).collect();
                    let mu_pre = [z(0.1), z(0.1)];
                    let p = AuxChannelParams {
                        taps,
                        mu_pre,
                        mu_post: [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)],
                        var_pre: [rng.gen_range(0.01..0.5), rng.gen_range(0.01..0.5)],
                        var_post: [rng.gen_range(0.01..0.5), rng.gen_range(0.01..0.5)],
                    };
                    let y: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(-0.2..4.0)).collect();
                    let ctx = Context::zeros();
                    let f = forward_log_marginal(&y, &p, &c, &lik, &ctx).unwrap();
                    let b = brute_force_log_marginal(&y, &p, &c, &lik, &ctx).unwrap();
                    worst = worst.max((f - b).abs() / b.abs());
                    count += 1;
                }
            }
        }
    }
    outcome(
        worst <= 1e-10 && count >= 50,
        format!("{count} instances, worst relative error {worst:.2e} (tolerance 1e-10)"),
    )
}

// ---------------------------------------------------------------- criterion 2

/// `ln I0(x)` from `(1/pi) int_0^pi exp(x cos t) dt`; the trapezoid rule on
/// this periodic integrand converges geometrically.
fn ln_i0(x: f64) -> f64 {
    let m = 4000;
    let s: f64 = (0..m)
        .map(|k| {
            let t = PI * (k as f64 + 0.5) / m as f64;
            (x * (t.cos() - 1.0)).exp()
        })
        .sum();
    x + (s / m as f64).ln()
}

fn gauss_closed(y: f64, mean: f64, var: f64) -> f64 {
    -(y - mean).powi(2) / (2.0 * var) - 0.5 * (2.0 * PI * var).ln()
}

fn ncx2_closed(y: f64, lambda: f64, var: f64) -> f64 {
    -(y + lambda) / var - var.ln() + ln_i0(2.0 * (y * lambda).sqrt() / var)
}

/// Gauss-Legendre nodes on [-1, 1] by Newton iteration.
fn legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

fn params_for(var_pre: f64, var_post: f64) -> AuxChannelParams {
    AuxChannelParams::new(vec![Complex64::new(1.0, 0.0)], &NoiseSpec::white(var_pre, var_post)).unwrap()
}

fn criterion_2() -> Outcome {
    let quad = QuadratureSpec::default();
    let gl = legendre(16);
    let decade = [1e-2, 1e-1, 1.0, 1e1];
    let mut worst_norm: f64 = 0.0;
    for &s in &decade {
        for &v1 in &decade {
            for &v2 in &decade {
                let p = params_for(v1, v2);
                let lambda = s * s;
                let sd = (2.0 * lambda * v1 + v1 * v1 + v2).sqrt();
                let lo = -12.0 * v2.sqrt() - 1e-3;
                let hi = lambda + v1 + 12.0 * sd + 40.0 * v1;
                let panels = 3000;
                let w = (hi - lo) / panels as f64;
                let mut total = 0.0;
                for k in 0..panels {
                    let mid = lo + (k as f64 + 0.5) * w;
                    for &(x, wt) in &gl {
                        let y = mid + 0.5 * w * x;
                        total += 0.5
                            * w
                            * wt
                            * log_density_sample(y, Complex64::new(s, 0.0), Phase::OnSymbol, &p, &quad).exp();
                    }
                }
                worst_norm = worst_norm.max((total - 1.0).abs());
            }
        }
    }
    // Degenerate limits against closed forms: exactly at zero, and just above
    // the degenerate threshold with the first-order effect of the small
    // variance included (moment-matched Gaussian; chi-square smoothed by
    // f + v/2 f'').
    let mut worst_limit: f64 = 0.0;
    for &s in &[0.1, 1.0, 3.0] {
        let sc = Complex64::new(s, 0.0);
        let lambda = s * s;
        for &v in &[1e-2, 1e-1, 1.0] {
            for &y in &[0.05, 0.5, lambda, lambda + 1.0] {
                let at = |v1: f64, v2: f64| log_density_sample(y, sc, Phase::OnSymbol, &params_for(v1, v2), &quad);
                worst_limit = worst_limit.max((at(0.0, v) - gauss_closed(y, lambda, v)).abs());
                worst_limit = worst_limit.max((at(v, 0.0) - ncx2_closed(y, lambda, v)).abs());
                let t = 1e-11;
                let matched = gauss_closed(y, lambda + t, v + 2.0 * lambda * t + t * t);
                worst_limit = worst_limit.max((at(t, v) - matched).abs());
                // f''/f = l'^2 + l'' for l = ln f.
                let l = |w: f64| ncx2_closed(w, lambda, v);
                let h = 1e-4;
                let l1 = (l(y + h) - l(y - h)) / (2.0 * h);
                let l2 = (l(y + h) - 2.0 * l(y) + l(y - h)) / (h * h);
                let smoothed = l(y) + (0.5 * t * (l1 * l1 + l2)).ln_1p();
                worst_limit = worst_limit.max((at(v, t) - smoothed).abs());
            }
        }
    }
    outcome(
        worst_norm <= 1e-6 && worst_limit <= 1e-8,
        format!(
            "64-point grid: worst |integral - 1| {worst_norm:.1e} (tol 1e-6); degenerate limits worst |dlog| {worst_limit:.1e} (tol 1e-8)"
        ),
    )
}

// ------------------------------------------------------------ shared sweeps

fn trend_config(preset: &str, taps: Vec<usize>, attenuations: Vec<f64>) -> SweepConfig {
    let mut cfg = SweepConfig::preset(preset).unwrap();
    cfg.taps = taps;
    cfg.attenuations = attenuations;
    cfg.n = 4000;
    cfg.pilot_count = 2000;
    cfg.fit.restarts = 1;
    cfg.fit.max_iterations = 2;
    cfg.workers = default_workers();
    cfg
}

struct Sweeps {
    b2b: SweepResult,
    b2b_cfg: SweepConfig,
    ssmf: SweepResult,
}

fn sweeps() -> Sweeps {
    let grid = |hi: usize| (0..=hi).map(|a| a as f64).collect::<Vec<_>>();
    let b2b_cfg = trend_config("fig3a", vec![3, 11], grid(11));
    let t = Instant::now();
    let b2b = run_sweep(&b2b_cfg).unwrap();
    eprintln!(
        "  B2B sweep: {} rows in {:.0} s",
        b2b.rows.len(),
        t.elapsed().as_secs_f64()
    );
    let t = Instant::now();
    let ssmf = run_sweep(&trend_config("fig3b", vec![11], grid(8))).unwrap();
    eprintln!(
        "  20 km sweep: {} rows in {:.0} s",
        ssmf.rows.len(),
        t.elapsed().as_secs_f64()
    );
    Sweeps { b2b, b2b_cfg, ssmf }
}

fn fmt_series(s: &[(f64, f64)]) -> String {
    s.iter()
        .map(|(a, r)| format!("{a}:{r:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------- criterion 3

fn rows_in_bounds(rows: &[SweepRow]) -> (usize, usize) {
    let bad = rows
        .iter()
        .filter(|r| match r.air_bpcu {
            Some(a) => !(a >= -0.01 && a <= (r.q as f64).log2() + 0.01),
            None => true,
        })
        .count();
    (rows.len(), bad)
}

/// 4-ASK through a genuinely single-tap channel, fitted with `taps` taps.
fn single_tap_ask(taps: usize, thermal: f64, seed: u64) -> f64 {
    let c = Constellation::new(Modulation::Ask, 4).unwrap();
    let n = 2000;
    let x = draw_symbols(&c, n, seed).unwrap();
    let h = ImpulseResponse::from_real(&[0.3]).unwrap();
    let field = apply_channel(&upsample(&x), &h).unwrap();
    let y = simulate_capture(&field, &NoiseSpec::white(0.0, thermal), seed + 1).unwrap();
    let (pilots, holdout) = split_blocks(y.samples(), &x, seed, 1000).unwrap();
    let lik = AuxLikelihood::default();
    let cfg = FitConfig {
        restarts: 1,
        ..FitConfig::with_taps(taps)
    };
    let f = fit(&pilots, &h, &cfg, &lik).unwrap();
    cross_validate(&f.params, &f.pilot_block, &holdout, &lik).unwrap().air
}

fn criterion_3(sw: Option<&Sweeps>) -> Outcome {
    let small = SweepConfig {
        n: 2000,
        pilot_count: 1000,
        fit: FitConfig {
            restarts: 1,
            ..FitConfig::default()
        },
        workers: 1,
        ..SweepConfig::default()
    };
    let point = |m, taps, att| RatePoint {
        modulation: m,
        taps,
        attenuation_db: att,
        seed: 3,
    };
    let quiet = SweepConfig {
        thermal_var: 1e-9,
        ..small.clone()
    };
    let pam = run_rate_point(&quiet, &point(Modulation::Pam, 3, 0.0));
    let mut ask_rows = Vec::new();
    for cfg in [&quiet, &small] {
        for att in [0.0, 4.0, 8.0] {
            ask_rows.push(run_rate_point(cfg, &point(Modulation::Ask, 1, att)));
        }
    }
    let ask_link = ask_rows
        .iter()
        .filter_map(|r| r.air_bpcu)
        .fold(f64::NEG_INFINITY, f64::max);
    let ask_single = [(1, 1e-9), (1, 1e-3), (3, 1e-9), (3, 1e-3)]
        .iter()
        .map(|&(l, v)| single_tap_ask(l, v, 11))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut rows: Vec<SweepRow> = ask_rows.clone();
    rows.push(pam.clone());
    if let Some(sw) = sw {
        rows.extend(sw.b2b.rows.iter().cloned());
        rows.extend(sw.ssmf.rows.iter().cloned());
    }
    let (total, bad) = rows_in_bounds(&rows);
    let pam_air = pam.air_bpcu.unwrap_or(f64::NAN);
    let ask_ok = ask_rows.iter().all(|r| r.is_ok()) && ask_link <= 1.02 && ask_single <= 1.02;
    outcome(
        bad == 0 && pam_air >= 1.98 && ask_ok,
        format!(
            "{total} rows, {bad} outside [-0.01, log2 Q + 0.01]; low-noise 4-PAM L=3 {pam_air:.4} (>= 1.98); \
             4-ASK L=1 max {ask_link:.4}, single-tap channel max {ask_single:.4} (<= 1.02)"
        ),
    )
}

// ---------------------------------------------------------- criteria 4 and 5

/// Longest run of consecutive grid points satisfying `pred`.
fn longest_run(a: &[(f64, f64)], b: &[(f64, f64)], pred: impl Fn(f64, f64) -> bool) -> usize {
    let (mut best, mut cur) = (0, 0);
    for ((_, x), (_, y)) in a.iter().zip(b) {
        cur = if pred(*x, *y) { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

fn criterion_4(sw: &Sweeps) -> Outcome {
    let r = &sw.b2b;
    let (ask3, pam3) = (r.series(Modulation::Ask, 3), r.series(Modulation::Pam, 3));
    let (ask11, pam11) = (r.series(Modulation::Ask, 11), r.series(Modulation::Pam, 11));
    let complete = ask3.len() == sw.b2b_cfg.attenuations.len()
        && pam3.len() == ask3.len()
        && ask11.len() == ask3.len()
        && pam11.len() == ask3.len();
    let hi = pam3.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = pam3.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let spans = hi >= 1.9 && lo <= 1.1;
    // (i) mid-rate region: PAM L=3 between 1.25 and 1.75 bpcu.
    let run_i = longest_run(&pam3, &ask3, |p, a| (1.25..=1.75).contains(&p) && p >= a);
    // (ii) near 1.8 bpcu: either curve within 1.6..2.0.
    let near = |v: f64| (1.6..=2.0).contains(&v);
    let run_ii = longest_run(&ask11, &pam11, |a, p| (near(a) || near(p)) && a >= p);
    let gain = horizontal_gain(&ask11, &pam11, 1.8);
    let pass_i = run_i >= 3;
    let pass_ii = run_ii >= 3 && gain.is_some_and(|g| g >= 0.3);
    outcome(
        complete && spans && pass_i && pass_ii,
        format!(
            "PAM L=3 spans {lo:.3}..{hi:.3}; (i) PAM >= ASK at L=3 on {run_i} consecutive mid-rate points [{}]; \
             (ii) ASK >= PAM at L=11 on {run_ii} consecutive points near 1.8, gain at 1.8 = {} dB (need >= 3 points, >= 0.3 dB); \
             L=3 ASK {} | PAM {}; L=11 ASK {} | PAM {}",
            if pass_i { "ok" } else { "fail" },
            gain.map_or("n/a".into(), |g| format!("{g:+.2}")),
            fmt_series(&ask3),
            fmt_series(&pam3),
            fmt_series(&ask11),
            fmt_series(&pam11)
        ),
    )
}

fn criterion_5(sw: &Sweeps) -> Outcome {
    let gain = |r: &SweepResult| horizontal_gain(&r.series(Modulation::Ask, 11), &r.series(Modulation::Pam, 11), 1.8);
    let (b2b, ssmf) = (gain(&sw.b2b), gain(&sw.ssmf));
    let show = |g: Option<f64>| g.map_or("n/a".into(), |g| format!("{g:+.2} dB"));
    outcome(
        matches!((b2b, ssmf), (Some(b), Some(s)) if s > b),
        format!(
            "ASK-PAM gain at 1.8 bpcu, L=11: 20 km {} vs B2B {}; 20 km ASK {} | PAM {}",
            show(ssmf),
            show(b2b),
            fmt_series(&sw.ssmf.series(Modulation::Ask, 11)),
            fmt_series(&sw.ssmf.series(Modulation::Pam, 11))
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Outcome {
    let c = Constellation::new(Modulation::Ask, 4).unwrap();
    let taps = vec![
        Complex64::new(-0.04, 0.02),
        Complex64::new(0.18, -0.03),
        Complex64::new(0.33, 0.0),
        Complex64::new(0.2, 0.05),
        Complex64::new(-0.05, 0.01),
    ];
    let noise = NoiseSpec {
        var_pre: [2e-3, 3e-3],
        var_post: [4e-3, 6e-3],
        mu_pre: [Complex64::new(0.01, 0.005), Complex64::new(-0.008, 0.0)],
        mu_post: [0.01, -0.005],
    };
    let truth = AuxChannelParams::new(taps.clone(), &noise).unwrap();
    let (pilots_n, hold_n) = (5000, 4000);
    let x = draw_symbols(&c, pilots_n + hold_n, 21).unwrap();
    let field = apply_channel(&upsample(&x), &ImpulseResponse::from_taps(taps.clone(), 2).unwrap()).unwrap();
    let y = simulate_capture(&field, &noise, 22).unwrap();
    let (pilots, holdout) = split_blocks(y.samples(), &x, 21, pilots_n).unwrap();
    // Prior: magnitudes only, as a physical model without the phase response.
    let prior = ImpulseResponse::from_real(&taps.iter().map(|t| t.norm()).collect::<Vec<_>>()).unwrap();
    let lik = AuxLikelihood::default();
    let f = fit(&pilots, &prior, &FitConfig::with_taps(5), &lik).unwrap();
    let fitted = cross_validate(&f.params, &f.pilot_block, &holdout, &lik).unwrap().air;
    let ideal = cross_validate(&truth, &f.pilot_block, &holdout, &lik).unwrap().air;
    let monotone = f.trace.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        (fitted - ideal).abs() <= 0.05 && monotone,
        format!(
            "holdout AIR fitted {fitted:.4} vs true parameters {ideal:.4} (|diff| {:.4} <= 0.05); trace monotone: {monotone} ({} moves)",
            (fitted - ideal).abs(),
            f.improvements()
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let cfg = SweepConfig {
        n: 4000,
        pilot_count: 2000,
        ..SweepConfig::default()
    };
    let link = cfg.link(Modulation::Ask, 4.0).unwrap();
    let t = ddair::channel::link::simulate_link(&link, cfg.n, 5).unwrap();
    let (pilots, holdout) = split_blocks(t.received.samples(), &t.symbols, 5, cfg.pilot_count).unwrap();
    let lik = AuxLikelihood::default();
    let base = FitConfig {
        restarts: 1,
        max_iterations: 2,
        ..FitConfig::default()
    };
    let f3 = fit(
        &pilots,
        &t.prior,
        &FitConfig {
            taps: 3,
            ..base.clone()
        },
        &lik,
    )
    .unwrap();
    let air3 = cross_validate(&f3.params, &f3.pilot_block, &holdout, &lik).unwrap().air;
    let init = f3.params.zero_padded(7).unwrap();
    let f7 = fit_from(&pilots, init, "L=3 fit", &FitConfig { taps: 7, ..base }, &lik).unwrap();
    let air7 = cross_validate(&f7.params, &f7.pilot_block, &holdout, &lik).unwrap().air;
    outcome(
        air7 >= air3 - 0.01,
        format!("4-ASK B2B at 4 dB: holdout AIR L=7 {air7:.4} vs L=3 {air3:.4} (need >= L=3 - 0.01)"),
    )
}

// ---------------------------------------------------------------- criterion 8

/// Noiseless received intensity of a raised-cosine 4-PAM burst at time `t`
/// in symbol periods.
fn burst_intensity(symbols: &[f64], t: f64) -> f64 {
    let k0 = t.floor() as isize;
    let field: f64 = (k0 - 24..=k0 + 24)
        .filter(|&k| k >= 0 && (k as usize) < symbols.len())
        .map(|k| symbols[k as usize] * raised_cosine(t - k as f64, 0.2))
        .sum();
    field * field
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    // Capture round trip.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let values: Vec<f64> = (0..1_000_000).map(|_| rng.sample(StandardNormal)).collect();
    let cap = Capture::new(
        CaptureMeta {
            sample_rate: 256e9,
            symbol_rate: 30e9,
            complex: false,
            aligned: false,
        },
        values,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("roundtrip.ddcap");
    write_capture(&path, &cap).unwrap();
    let back = read_capture(&path).unwrap();
    let exact = back.meta == cap.meta
        && back.values.len() == cap.values.len()
        && back
            .values
            .iter()
            .zip(&cap.values)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    pass &= exact;
    notes.push(format!("10^6-sample round trip bit-exact: {exact}"));

    // Planted delays on a DSO-rate capture.
    let sps = 256.0 / 30.0;
    let symbols: Vec<f64> = (0..1200).map(|_| rng.gen_range(0..4) as f64).collect();
    let pilot: Vec<f64> = (0..(600.0 * sps) as usize)
        .map(|j| burst_intensity(&symbols, j as f64 / sps))
        .collect();
    for planted in [137.0, 137.3] {
        let len = (1200.0 * sps) as usize + 400;
        let capture: Vec<f64> = (0..len)
            .map(|j| {
                burst_intensity(&symbols, (j as f64 - planted) / sps) + 0.05 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        match synchronize(&capture, &pilot) {
            Ok(s) => {
                let err = s.delay() - planted;
                let ok = err.abs() <= 0.05 && (planted.fract() != 0.0 || s.integer == 137);
                pass &= ok;
                notes.push(format!("delay {planted}: estimate {:.3} (error {err:+.3})", s.delay()));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("delay {planted}: {e}"));
            }
        }
    }

    // Identity resampling.
    let x: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
    let r = resample_to_2sps(&x, 60e9, 30e9, 0.0, None).unwrap();
    let worst = r
        .samples
        .iter()
        .enumerate()
        .map(|(k, v)| (v - x[k + r.leading_trim]).abs())
        .fold(0.0, f64::max);
    pass &= worst <= 1e-9 && !r.samples.is_empty();
    notes.push(format!(
        "2-SPS identity resampling worst error {worst:.1e} ({} trimmed)",
        r.trimmed()
    ));
    outcome(pass, notes.join("; "))
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9(sw: Option<&Sweeps>) -> Outcome {
    let (cfg, picks): (SweepConfig, Vec<SweepRow>) = match sw {
        Some(sw) => {
            let pick = |m: Modulation, l: usize, a: f64| {
                sw.b2b
                    .rows
                    .iter()
                    .find(|r| r.constellation == m && r.l == l && r.attenuation_db == a)
                    .cloned()
                    .unwrap()
            };
            (
                sw.b2b_cfg.clone(),
                vec![pick(Modulation::Pam, 3, 3.0), pick(Modulation::Ask, 11, 5.0)],
            )
        }
        None => {
            let cfg = trend_config("fig3a", vec![3], vec![3.0]);
            let row = run_rate_point(&cfg, &cfg.points()[0]);
            (cfg, vec![row])
        }
    };
    let mut same = true;
    let mut notes = Vec::new();
    for row in &picks {
        let point = RatePoint {
            modulation: row.constellation,
            taps: row.l,
            attenuation_db: row.attenuation_db,
            seed: row.seed,
        };
        let again = run_rate_point(&cfg, &point);
        let eq = match (row.air_bpcu, again.air_bpcu) {
            (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        };
        same &= eq && again == *row;
        notes.push(format!("{} re-run identical: {eq}", row.fit_id));
    }
    outcome(same, notes.join("; "))
}

fn main() -> ExitCode {
    let names = [
        "oracle equivalence",
        "density validity",
        "rate bounds and ceilings",
        "B2B ASK/PAM trend",
        "CD benefit for ASK",
        "planted-model fitting",
        "nested-L monotonicity",
        "pipeline integrity",
        "determinism",
    ];
    let need_sweeps = [3, 4, 5, 9].iter().any(|&i| selected(i));
    let mut sweeps_cache: Option<Sweeps> = None;
    let mut unexpected = 0;
    for id in 1..=9 {
        if !selected(id) {
            continue;
        }
        if need_sweeps && sweeps_cache.is_none() && id >= 3 {
            eprintln!("running trend sweeps (criteria 3, 4, 5, 9)...");
            sweeps_cache = Some(sweeps());
        }
        let sw = sweeps_cache.as_ref();
        let t = Instant::now();
        let o = match id {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(sw),
            4 => criterion_4(sw.unwrap()),
            5 => criterion_5(sw.unwrap()),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            _ => criterion_9(sw),
        };
        let gap = KNOWN_GAPS.iter().find(|g| g.0 == id);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id} {verdict}: {} -- {} [{:.1} s]",
            names[id - 1],
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if !o.pass {
            match gap {
                Some((_, why)) => println!("  known gap: {why}"),
                None => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criterion/criteria failed unexpectedly");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
