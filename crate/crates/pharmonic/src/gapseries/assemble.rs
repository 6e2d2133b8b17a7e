//! Assembly of the boundary-limit counterexample: extensions of the damped
//! partial boundary sums are solved on nested slabs and the sandwich
//! inequalities between consecutive extensions, their traces and the limit
//! candidate are measured, together with the height scaling h_j ~ T_{j+1}^-a
//! with a = 1 - 2/p.

use super::damping::{build_damping, Variant};
use super::{divergence_statistics, frac_scaled, BoundaryWave, CoefficientSequence, DivergenceReport, LacunaryPlan};
use crate::error::{Error, Result};
use crate::exponents::Geometry;
use crate::pde::{solve_plain, ScalarField, SlabGrid, SolverOptions, TopClosure};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssemblyConfig {
    /// Lateral resolution of the unit-period slab.
    pub nx: usize,
    pub p: f64,
    /// Number of partial sums to extend; desk scale caps at 4.
    pub levels: usize,
    pub variant: Variant,
    pub solver: SolverOptions,
    /// Damping-grid resolution for the boundary sums.
    pub series_resolution: usize,
    /// Tail-oscillation threshold as a multiple of |b-bar|.
    pub osc_threshold_scale: f64,
}

impl AssemblyConfig {
    pub fn new(nx: usize, p: f64, levels: usize, variant: Variant) -> Self {
        Self {
            nx,
            p,
            levels,
            variant,
            solver: SolverOptions::default(),
            series_resolution: 1 << 14,
            osc_threshold_scale: 0.25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssemblyReport {
    pub plan: LacunaryPlan,
    /// Measured heights h_j (j = 1..levels-1) above which consecutive
    /// extensions differ by less than 2^-(j+1).
    pub heights: Vec<f64>,
    /// h_j T_{j+1}^alpha, alpha = 1 - 2/p.
    pub a_factors: Vec<f64>,
    /// max/min ratio of the a-factors.
    pub a_factor_spread: f64,
    /// Per j: 2^-(j+1) minus the measured sup above h_j (nonnegative when
    /// the band exists).
    pub margins_close: Vec<f64>,
    /// Per j: threshold 2^-(j+1) + |a_{j+1}| minus the sup of
    /// |ext_{j+1} - trace_j| below h_j.
    pub margins_trace: Vec<f64>,
    /// Per l < levels: 2^-l minus the sup of |ext_last - ext_l| above h_l.
    pub margins_limit: Vec<f64>,
    /// Per l: 2^-(l+1) + 2^-l + |a_{l+1}| minus the sup of
    /// |ext_last - trace_l| inside the band (h_{l+1}, h_l).
    pub margins_band: Vec<f64>,
    /// max over levels of sup|ext| - sup|trace| (maximum principle; at most
    /// solver tolerance).
    pub max_principle_gap: f64,
    pub sup_traces: Vec<f64>,
    pub sup_extensions: Vec<f64>,
    pub divergence: DivergenceReport,
    pub alpha: f64,
}

/// Piecewise-linear periodic interpolation of damping-grid values at a
/// lateral coordinate in [-1/2, 1/2).
fn interp_damping(values: &[f64], x: f64) -> f64 {
    let n = values.len() as f64;
    let pos = (x + 0.5) * n - 0.5;
    let i0 = pos.floor();
    let w = pos - i0;
    let ia = (i0 as i64).rem_euclid(values.len() as i64) as usize;
    let ib = (ia + 1) % values.len();
    values[ia] * (1.0 - w) + values[ib] * w
}

pub fn assemble_counterexample(
    wave: &BoundaryWave,
    config: &AssemblyConfig,
) -> Result<AssemblyReport> {
    if config.levels < 1 || config.levels > 4 {
        return Err(Error::Domain(format!(
            "levels = {} outside the desk-scale range 1..=4",
            config.levels
        )));
    }
    if !(config.p > 2.0) {
        return Err(Error::Regime(format!("p = {} violates p > 2", config.p)));
    }
    let plan = LacunaryPlan::generate(config.levels + 1)?;
    let finest = plan.t[config.levels - 1];
    if (config.nx as u128) < 4 * finest {
        return Err(Error::Resolution(format!(
            "lateral resolution {} cannot resolve T_{} = {finest} (need >= 4 T)",
            config.nx, config.levels
        )));
    }
    let coeffs = match config.variant {
        Variant::BoundedDivergent => CoefficientSequence::bounded_divergent(config.levels),
        Variant::PositiveVanishing => CoefficientSequence::positive_vanishing(config.levels),
    };
    let (damping, series) =
        build_damping(wave, &plan, &coeffs, config.variant, config.series_resolution)?;

    // boundary traces at the slab nodes
    let geometry = Geometry::new(2, 1, config.p)?;
    let grid = SlabGrid::new(geometry, 1.0, config.nx, 4.0)?;
    let offset = if config.variant == Variant::PositiveVanishing { 1.0 } else { 0.0 };
    // evaluate sum_{j<=l} a_j L_j(x) psi0(T_j x) node by node
    let mut traces: Vec<Vec<f64>> = Vec::with_capacity(config.levels);
    for l in 0..config.levels {
        let mut tr = Vec::with_capacity(config.nx);
        for i in 0..config.nx {
            let x = grid.x_of(i);
            let mut v = offset;
            for j in 0..=l {
                let lj = interp_damping(&damping.l[j], x);
                let psi0 = wave.psi0(&[frac_scaled(plan.t[j], x)]);
                v += coeffs.a[j] * lj * psi0;
            }
            tr.push(v);
        }
        traces.push(tr);
    }

    // extensions
    let mut exts: Vec<ScalarField> = Vec::with_capacity(config.levels);
    for tr in &traces {
        let rep = solve_plain(grid, tr, TopClosure::DirichletMean, &config.solver)?;
        exts.push(rep.field);
    }

    let alpha = 1.0 - 2.0 / config.p;
    let h = grid.h();
    let sup_of = |v: &[f64]| v.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let sup_traces: Vec<f64> = traces.iter().map(|t| sup_of(t)).collect();
    let sup_extensions: Vec<f64> = exts.iter().map(|e| sup_of(&e.values)).collect();
    let max_principle_gap = sup_extensions
        .iter()
        .zip(&sup_traces)
        .map(|(e, t)| e - t)
        .fold(f64::NEG_INFINITY, f64::max);

    // row-wise sups of |ext_{j+1} - ext_j|; h_j = lowest height above which
    // the difference stays under 2^-(j+1)
    let mut heights = Vec::new();
    let mut margins_close = Vec::new();
    let mut a_factors = Vec::new();
    for j in 0..config.levels.saturating_sub(1) {
        let thresh = 0.5f64.powi(j as i32 + 2);
        let mut hj_row = grid.nz + 1; // sentinel: band empty
        let mut running_sup = 0.0f64;
        // scan from the top down while the difference stays below threshold
        for row in (1..=grid.nz).rev() {
            let mut row_sup = 0.0f64;
            for i in 0..grid.nx {
                let d = (exts[j + 1].value(i, row) - exts[j].value(i, row)).abs();
                row_sup = row_sup.max(d);
            }
            if row_sup > thresh {
                break;
            }
            running_sup = running_sup.max(row_sup);
            hj_row = row;
        }
        let hj = hj_row as f64 * h;
        heights.push(hj);
        margins_close.push(thresh - running_sup);
        a_factors.push(hj * (plan.t[j + 1] as f64).powf(alpha));
    }
    let a_factor_spread = if a_factors.is_empty() {
        1.0
    } else {
        let mx = a_factors.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mn = a_factors.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        mx / mn
    };

    // |ext_{j+1} - trace_j| below h_j
    let mut margins_trace = Vec::new();
    for j in 0..config.levels.saturating_sub(1) {
        let thresh = 0.5f64.powi(j as i32 + 2) + coeffs.a[j + 1].abs();
        let top_row = ((heights[j] / h).round() as usize).clamp(1, grid.nz);
        let mut sup = 0.0f64;
        for row in 1..=top_row {
            for i in 0..grid.nx {
                let d = (exts[j + 1].value(i, row) - traces[j][i]).abs();
                sup = sup.max(d);
            }
        }
        margins_trace.push(thresh - sup);
    }

    // |ext_last - ext_l| above h_l
    let last = &exts[config.levels - 1];
    let mut margins_limit = Vec::new();
    for l in 0..config.levels.saturating_sub(1) {
        let thresh = 0.5f64.powi(l as i32 + 1);
        let from_row = ((heights[l] / h).round() as usize).clamp(1, grid.nz);
        let mut sup = 0.0f64;
        for row in from_row..=grid.nz {
            for i in 0..grid.nx {
                let d = (last.value(i, row) - exts[l].value(i, row)).abs();
                sup = sup.max(d);
            }
        }
        margins_limit.push(thresh - sup);
    }

    // |ext_last - trace_l| in the band (h_{l+1}, h_l); the lowest band edge
    // extrapolates the measured scaling to T_{levels+1}
    let mut margins_band = Vec::new();
    let median_a = if a_factors.is_empty() {
        1.0
    } else {
        let mut sorted = a_factors.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        sorted[sorted.len() / 2]
    };
    for l in 0..config.levels.saturating_sub(1) {
        let upper = heights[l];
        let lower = if l + 1 < heights.len() {
            heights[l + 1]
        } else {
            median_a * (plan.t[config.levels] as f64).powf(-alpha)
        };
        let thresh = 0.5f64.powi(l as i32 + 2) + 0.5f64.powi(l as i32 + 1) + coeffs.a[l + 1].abs();
        let lo_row = ((lower / h).ceil() as usize).clamp(1, grid.nz);
        let hi_row = ((upper / h).floor() as usize).clamp(1, grid.nz);
        let mut sup = 0.0f64;
        for row in lo_row..=hi_row {
            for i in 0..grid.nx {
                let d = (last.value(i, row) - traces[l][i]).abs();
                sup = sup.max(d);
            }
        }
        margins_band.push(thresh - sup);
    }

    let b_bar = wave.mean;
    let divergence =
        divergence_statistics(&series.rows, config.osc_threshold_scale * b_bar.abs());

    Ok(AssemblyReport {
        plan,
        heights,
        a_factors,
        a_factor_spread,
        margins_close,
        margins_trace,
        margins_limit,
        margins_band,
        max_principle_gap,
        sup_traces,
        sup_extensions,
        divergence,
        alpha,
    })
}
