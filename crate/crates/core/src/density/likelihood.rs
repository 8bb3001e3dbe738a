//! Block-level likelihood evaluation: per-sample log-densities for every
//! trellis branch, either exactly by quadrature or from a cached grid.

use std::sync::Arc;

use num_complex::Complex64;

use super::grid::{DensityGrid, GridCache};
use super::{log_density_shifted, AuxChannelParams, BranchTable, QuadratureSpec};
use crate::channel::Phase;

/// How per-sample densities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityMode {
    /// Quadrature for every (sample, branch) pair.
    Exact,
    /// Interpolation on a tabulated grid (falls back to quadrature where the
    /// grid does not apply).
    Tabulated,
    /// Tabulated for large blocks and branch tables, exact otherwise.
    #[default]
    Auto,
}

/// Below this many (sample, branch) evaluations `Auto` stays exact.
const AUTO_THRESHOLD: usize = 20_000;
/// Nodes of the rule used to tabulate grids. The peak-centered interval
/// makes the integrand nearly Gaussian on it, so 32 nodes already agree
/// with the default rule to well below the interpolation error.
const GRID_NODES: usize = 32;

/// Density evaluator shared by all blocks and parameter sets of one run.
#[derive(Debug)]
pub struct AuxLikelihood {
    quad: QuadratureSpec,
    grid_quad: QuadratureSpec,
    mode: DensityMode,
    cache: GridCache,
}

impl Default for AuxLikelihood {
    fn default() -> Self {
        Self::new(DensityMode::default())
    }
}

fn grid_rule(quad: &QuadratureSpec) -> QuadratureSpec {
    QuadratureSpec::new(GRID_NODES.min(quad.node_count()), quad.coverage()).expect("valid grid rule")
}

impl AuxLikelihood {
    pub fn new(mode: DensityMode) -> Self {
        let quad = QuadratureSpec::default();
        Self {
            grid_quad: grid_rule(&quad),
            quad,
            mode,
            cache: GridCache::default(),
        }
    }

    pub fn exact() -> Self {
        Self::new(DensityMode::Exact)
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.grid_quad = grid_rule(&quad);
        self.quad = quad;
        self.cache.clear();
        self
    }

    pub fn mode(&self) -> DensityMode {
        self.mode
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    /// Binds `params` and its branch table to the sample range of `samples`.
    pub fn prepare<'a>(
        &'a self,
        params: &AuxChannelParams,
        table: &'a BranchTable,
        samples: &[f64],
    ) -> PreparedDensity<'a> {
        let tabulate = match self.mode {
            DensityMode::Exact => false,
            DensityMode::Tabulated => true,
            DensityMode::Auto => table.len().saturating_mul(samples.len()) >= AUTO_THRESHOLD,
        };
        let phases = Phase::BOTH.map(|phase| {
            let p = phase.index();
            let mu_pre = params.mu_pre[p];
            let r: Vec<f64> = table.amplitudes(phase).iter().map(|s| (s + mu_pre).norm()).collect();
            let exact = PhaseEval {
                mu_pre,
                mu_post: params.mu_post[p],
                var_pre: params.var_pre[p],
                var_post: params.var_post[p],
                grid: None,
                r,
            };
            if !tabulate {
                return exact;
            }
            let (lo, hi) = samples
                .iter()
                .skip(p)
                .step_by(2)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                    (lo.min(y), hi.max(y))
                });
            let r_max = exact.r.iter().copied().fold(0.0, f64::max);
            let grid = self.cache.get(
                exact.var_pre,
                exact.var_post,
                lo - exact.mu_post,
                hi - exact.mu_post,
                r_max,
                &self.grid_quad,
            );
            let grid = grid.and_then(|g| {
                let stencils: Option<Vec<_>> = exact
                    .r
                    .iter()
                    .map(|&r| g.r_stencil(r).map(|(j, w)| (j as u32, w)))
                    .collect();
                stencils.map(|s| (g, s))
            });
            PhaseEval { grid, ..exact }
        });
        PreparedDensity {
            quad: &self.quad,
            table,
            phases,
        }
    }

    /// Number of cached grids (diagnostics).
    pub fn cached_grids(&self) -> usize {
        self.cache.len()
    }
}

/// Grid row index and cubic weights along `r` for one branch.
type Stencil = (u32, [f64; 4]);

#[derive(Debug, Clone)]
struct PhaseEval {
    mu_pre: Complex64,
    mu_post: f64,
    var_pre: f64,
    var_post: f64,
    /// `|s + mu_pre|` for every table branch.
    r: Vec<f64>,
    grid: Option<(Arc<DensityGrid>, Vec<Stencil>)>,
}

/// Densities for one parameter set; borrowed by trellis evaluations.
#[derive(Debug)]
pub struct PreparedDensity<'a> {
    quad: &'a QuadratureSpec,
    table: &'a BranchTable,
    phases: [PhaseEval; 2],
}

impl PreparedDensity<'_> {
    pub fn table(&self) -> &BranchTable {
        self.table
    }

    /// Whether `phase` is served from a grid.
    pub fn is_tabulated(&self, phase: Phase) -> bool {
        self.phases[phase.index()].grid.is_some()
    }

    /// `out[w] += ln q(y | branch w)` for every table branch.
    pub fn add_branch_log_densities(&self, phase: Phase, y: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
        let e = &self.phases[phase.index()];
        let y = y - e.mu_post;
        if let Some((grid, stencils)) = &e.grid {
            if grid.slice(y, scratch) {
                for (o, (j, w)) in out.iter_mut().zip(stencils) {
                    let g = &scratch[*j as usize..*j as usize + 4];
                    *o += w[0] * g[0] + w[1] * g[1] + w[2] * g[2] + w[3] * g[3];
                }
                return;
            }
        }
        for (o, &r) in out.iter_mut().zip(&e.r) {
            *o += log_density_shifted(y, r, e.var_pre, e.var_post, self.quad);
        }
    }

    /// `ln q(y | branch w)` for a single table branch.
    pub fn branch_log_density(&self, phase: Phase, y: f64, w: usize) -> f64 {
        let e = &self.phases[phase.index()];
        let y = y - e.mu_post;
        if let Some((grid, stencils)) = &e.grid {
            let mut row = Vec::new();
            if grid.slice(y, &mut row) {
                let (j, w) = stencils[w];
                let g = &row[j as usize..j as usize + 4];
                return w[0] * g[0] + w[1] * g[1] + w[2] * g[2] + w[3] * g[3];
            }
        }
        log_density_shifted(y, e.r[w], e.var_pre, e.var_post, self.quad)
    }

    /// `ln q(y | s)` for an arbitrary noiseless amplitude (border windows).
    pub fn log_density(&self, phase: Phase, y: f64, s: Complex64) -> f64 {
        let e = &self.phases[phase.index()];
        let y = y - e.mu_post;
        let r = (s + e.mu_pre).norm();
        if let Some((grid, _)) = &e.grid {
            if let Some(v) = grid.log_density(y, r) {
                return v;
            }
        }
        log_density_shifted(y, r, e.var_pre, e.var_post, self.quad)
    }
}
