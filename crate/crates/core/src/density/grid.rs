//! Tabulated log-density for the trellis inner loop.
//!
//! For fixed variances the log-density is a smooth function of the shifted
//! sample `y' = y - mu_post` and the amplitude `r = |s + mu_pre|`. It is
//! sampled on a uniform grid in `(u, r)`, where `y' = u sqrt(u^2 + c^2)`
//! behaves like `sqrt(y')` for large intensities and stays linear (and
//! signed) near zero. Four-point Lagrange interpolation in both directions
//! reproduces the locally polynomial log-density closely; any non-negative
//! `q` still yields a valid lower bound, so the grid only trades tightness.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::{log_density_shifted, QuadratureSpec, DEGENERATE_VARIANCE};

/// Grid step as a fraction of the noise scale `(v2 + v1^2)^(1/4)`.
const STEP_FRACTION: f64 = 0.2;
/// Amplitude step: finer, since `ln I0` bends quickly near `r = 0` when the
/// pre-detection noise dominates.
const R_STEP_FRACTION: f64 = 0.1;
/// Extra nodes beyond the requested range on each side (stencil support).
const GUARD: i64 = 2;
/// Range bounds are rounded outward to multiples of this many nodes so
/// that small bias moves reuse a cached grid.
const ALIGN: i64 = 16;
/// Upper bound on nodes per axis; the step is coarsened beyond it.
pub const MAX_AXIS_NODES: usize = 1200;
const CACHE_CAPACITY: usize = 48;

/// Cubic Lagrange weights for nodes at `-1, 0, 1, 2` evaluated at `t`.
#[inline]
pub(crate) fn lagrange4(t: f64) -> [f64; 4] {
    let tm1 = t - 1.0;
    let tm2 = t - 2.0;
    let tp1 = t + 1.0;
    [
        -t * tm1 * tm2 / 6.0,
        tp1 * tm1 * tm2 / 2.0,
        -tp1 * t * tm2 / 2.0,
        tp1 * t * tm1 / 6.0,
    ]
}

/// Uniform axis `x_k = k h` for `k in first..first + len`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis {
    step: f64,
    first: i64,
    len: usize,
}

impl Axis {
    fn covering(lo: f64, hi: f64, step: f64) -> Self {
        let a = ((lo / step).floor() as i64 - GUARD).div_euclid(ALIGN) * ALIGN;
        let b = (((hi / step).ceil() as i64 + GUARD) + ALIGN - 1).div_euclid(ALIGN) * ALIGN;
        Self {
            step,
            first: a,
            len: (b - a + 1) as usize,
        }
    }

    fn node(&self, k: usize) -> f64 {
        (self.first + k as i64) as f64 * self.step
    }

    /// Stencil start and weights, or `None` outside the interpolation range.
    #[inline]
    fn locate(&self, x: f64) -> Option<(usize, [f64; 4])> {
        let pos = x / self.step - self.first as f64;
        if !(pos >= 1.0 && pos <= (self.len - 3) as f64) {
            return None;
        }
        let base = (pos.floor() as usize).min(self.len - 3);
        let t = pos - base as f64;
        Some((base - 1, lagrange4(t)))
    }
}

/// Log-density samples on a `(r, u)` grid for one variance pair.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    var_pre: f64,
    var_post: f64,
    scale: f64,
    u: Axis,
    r: Axis,
    /// Row-major: `values[j * u.len + k]` at `(r_j, u_k)`.
    values: Vec<f64>,
}

impl DensityGrid {
    /// Noise scale `c` of the `u` mapping and the default step derived from it.
    pub fn noise_scale(var_pre: f64, var_post: f64) -> f64 {
        (var_post + var_pre * var_pre).sqrt().sqrt()
    }

    fn to_u(y: f64, c2: f64) -> f64 {
        // Inverse of y = u sqrt(u^2 + c^2).
        let u2 = 2.0 * y * y / (c2 + (c2 * c2 + 4.0 * y * y).sqrt());
        u2.sqrt().copysign(y)
    }

    fn from_u(u: f64, c2: f64) -> f64 {
        u * (u * u + c2).sqrt()
    }

    /// Plans the grid for shifted samples in `[y_lo, y_hi]` and amplitudes in
    /// `[0, r_max]`. Returns `None` when the variances are degenerate.
    fn plan(var_pre: f64, var_post: f64, y_lo: f64, y_hi: f64, r_max: f64) -> Option<(f64, Axis, Axis)> {
        if var_pre < DEGENERATE_VARIANCE || var_post < DEGENERATE_VARIANCE {
            return None;
        }
        if !(y_lo.is_finite() && y_hi.is_finite() && r_max.is_finite()) {
            return None;
        }
        let c = Self::noise_scale(var_pre, var_post);
        let c2 = c * c;
        let (u_lo, u_hi) = (Self::to_u(y_lo, c2), Self::to_u(y_hi, c2));
        let cap = |span: f64, step: f64| {
            let needed = span / step + (2 * (GUARD + ALIGN)) as f64;
            if needed > MAX_AXIS_NODES as f64 {
                step * needed / MAX_AXIS_NODES as f64
            } else {
                step
            }
        };
        // Near y' = 0 the mapping has slope c; resolve the post-detection
        // noise there as well.
        let u_step = cap(u_hi - u_lo, STEP_FRACTION * c.min(2.0 * var_post.sqrt() / c));
        let r_step = cap(r_max, R_STEP_FRACTION * c);
        // Negative amplitudes mirror positive ones (the density is even in r)
        // and give the stencil support at r = 0.
        let r_axis = Axis::covering(-r_step, r_max.max(r_step), r_step);
        let u_axis = Axis::covering(u_lo, u_hi, u_step);
        Some((c2, u_axis, r_axis))
    }

    /// Tabulates `ln q` with the quadrature of `quad`.
    pub fn build(var_pre: f64, var_post: f64, y_lo: f64, y_hi: f64, r_max: f64, quad: &QuadratureSpec) -> Option<Self> {
        let (c2, u, r) = Self::plan(var_pre, var_post, y_lo, y_hi, r_max)?;
        Self::tabulate(var_pre, var_post, c2, u, r, quad)
    }

    fn tabulate(var_pre: f64, var_post: f64, c2: f64, u: Axis, r: Axis, quad: &QuadratureSpec) -> Option<Self> {
        let mut values = vec![0.0; u.len * r.len];
        values.par_chunks_mut(u.len).enumerate().for_each(|(j, row)| {
            let rj = r.node(j).abs();
            for (k, v) in row.iter_mut().enumerate() {
                let y = Self::from_u(u.node(k), c2);
                *v = log_density_shifted(y, rj, var_pre, var_post, quad);
            }
        });
        if values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Self {
            var_pre,
            var_post,
            scale: c2,
            u,
            r,
            values,
        })
    }

    pub fn var_pre(&self) -> f64 {
        self.var_pre
    }

    pub fn var_post(&self) -> f64 {
        self.var_post
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    /// Largest amplitude inside the interpolation range.
    pub fn r_limit(&self) -> f64 {
        self.r.node(self.r.len - 3)
    }

    /// Interpolation weights along `r` for amplitude `r`.
    #[inline]
    pub fn r_stencil(&self, r: f64) -> Option<(usize, [f64; 4])> {
        self.r.locate(r)
    }

    /// Fills `row[j] = ln q(y' | r_j)` for every amplitude node. Returns
    /// `false` if `y'` lies outside the tabulated range.
    pub fn slice(&self, y_shifted: f64, row: &mut Vec<f64>) -> bool {
        let Some((k, w)) = self.u.locate(Self::to_u(y_shifted, self.scale)) else {
            return false;
        };
        row.clear();
        row.extend(
            self.values
                .chunks_exact(self.u.len)
                .map(|v| w[0] * v[k] + w[1] * v[k + 1] + w[2] * v[k + 2] + w[3] * v[k + 3]),
        );
        true
    }

    /// Interpolated `ln q(y' | r)`, or `None` outside the tabulated range.
    pub fn log_density(&self, y_shifted: f64, r: f64) -> Option<f64> {
        let (k, wu) = self.u.locate(Self::to_u(y_shifted, self.scale))?;
        let (j, wr) = self.r.locate(r)?;
        let mut acc = 0.0;
        for (a, wa) in wr.iter().enumerate() {
            let v = &self.values[(j + a) * self.u.len + k..];
            acc += wa * (wu[0] * v[0] + wu[1] * v[1] + wu[2] * v[2] + wu[3] * v[3]);
        }
        Some(acc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GridKey {
    var_pre: u64,
    var_post: u64,
    u_step: u64,
    u_first: i64,
    u_len: usize,
    r_step: u64,
    r_len: usize,
}

/// Shares grids between evaluations with the same variances and ranges.
#[derive(Debug, Default)]
pub struct GridCache {
    grids: Mutex<HashMap<GridKey, Arc<DensityGrid>>>,
}

impl GridCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cached or freshly built grid; `None` when tabulation does not apply.
    pub fn get(
        &self,
        var_pre: f64,
        var_post: f64,
        y_lo: f64,
        y_hi: f64,
        r_max: f64,
        quad: &QuadratureSpec,
    ) -> Option<Arc<DensityGrid>> {
        let (c2, u, r) = DensityGrid::plan(var_pre, var_post, y_lo, y_hi, r_max)?;
        let key = GridKey {
            var_pre: var_pre.to_bits(),
            var_post: var_post.to_bits(),
            // Capped axes stretch their step with the span.
            u_step: u.step.to_bits(),
            u_first: u.first,
            u_len: u.len,
            r_step: r.step.to_bits(),
            r_len: r.len,
        };
        if let Some(g) = self.grids.lock().expect("grid cache poisoned").get(&key) {
            return Some(Arc::clone(g));
        }
        let grid = Arc::new(DensityGrid::tabulate(var_pre, var_post, c2, u, r, quad)?);
        let mut map = self.grids.lock().expect("grid cache poisoned");
        if map.len() >= CACHE_CAPACITY {
            map.clear();
        }
        map.insert(key, Arc::clone(&grid));
        Some(grid)
    }

    pub fn len(&self) -> usize {
        self.grids.lock().expect("grid cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.grids.lock().expect("grid cache poisoned").clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lagrange_reproduces_cubics() {
        let f = |x: f64| 2.0 - x + 0.5 * x * x - 0.25 * x * x * x;
        for &t in &[0.0, 0.3, 0.77, 1.0] {
            let w = lagrange4(t);
            let v: f64 = w.iter().enumerate().map(|(i, w)| w * f(i as f64 - 1.0)).sum();
            assert!((v - f(t)).abs() < 1e-13);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn u_mapping_round_trips() {
        for &c2 in &[1e-4, 0.3, 2.0] {
            for &y in &[-3.0, -1e-3, 0.0, 1e-6, 0.5, 40.0] {
                let u = DensityGrid::to_u(y, c2);
                assert!((DensityGrid::from_u(u, c2) - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn interpolation_tracks_exact_density() {
        let quad = QuadratureSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let regimes = [(0.05, 0.01), (1e-3, 1e-3), (1e-4, 0.02), (0.2, 1e-5), (1e-5, 1e-5)];
        for &(v1, v2) in &regimes {
            let grid = DensityGrid::build(v1, v2, -0.5, 12.0, 3.5, &quad).unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..2000 {
                let r: f64 = rng.gen_range(0.0..3.5);
                let spread = (2.0 * r * r * v1 + v1 * v1 + v2).sqrt();
                let y = (r * r + v1 + rng.gen_range(-8.0..8.0) * spread).clamp(-0.5, 12.0);
                let exact = log_density_shifted(y, r, v1, v2, &quad);
                // Only amplitudes that compete with the best-matching one matter.
                let best = log_density_shifted(y, y.max(0.0).sqrt(), v1, v2, &quad);
                if exact < best - 10.0 {
                    continue;
                }
                let approx = grid.log_density(y, r).unwrap();
                worst = worst.max((exact - approx).abs());
            }
            assert!(worst < 5e-3, "({v1}, {v2}): worst error {worst}");
        }
    }

    #[test]
    fn slices_agree_with_point_evaluation() {
        let quad = QuadratureSpec::default();
        let grid = DensityGrid::build(0.02, 0.005, 0.0, 5.0, 2.0, &quad).unwrap();
        let mut row = Vec::new();
        assert!(grid.slice(1.3, &mut row));
        let (j, w) = grid.r_stencil(1.1).unwrap();
        let via_row: f64 = (0..4).map(|a| w[a] * row[j + a]).sum();
        assert!((via_row - grid.log_density(1.3, 1.1).unwrap()).abs() < 1e-12);
        assert!(!grid.slice(1e6, &mut row));
        assert!(grid.r_limit() >= 2.0);
    }

    #[test]
    fn degenerate_variances_are_not_tabulated() {
        let quad = QuadratureSpec::default();
        assert!(DensityGrid::build(0.0, 0.1, 0.0, 1.0, 1.0, &quad).is_none());
        assert!(DensityGrid::build(0.1, 1e-13, 0.0, 1.0, 1.0, &quad).is_none());
    }

    #[test]
    fn cache_reuses_grids_for_nearby_ranges() {
        let quad = QuadratureSpec::default();
        let cache = GridCache::new();
        let a = cache.get(0.05, 0.01, 0.0, 4.0, 2.0, &quad).unwrap();
        let b = cache.get(0.05, 0.01, 0.001, 4.0, 2.0, &quad).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
        let c = cache.get(0.06, 0.01, 0.0, 4.0, 2.0, &quad).unwrap();
        assert!(!Arc::ptr_eq(&a, &c));
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn axis_node_cap() {
        let quad = QuadratureSpec::new(16, 6.0).unwrap();
        let g = DensityGrid::build(1e-8, 1e-8, 0.0, 100.0, 10.0, &quad).unwrap();
        assert!(g.u.len <= MAX_AXIS_NODES + 2 * ALIGN as usize + 1);
    }
}
