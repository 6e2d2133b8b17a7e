//! Damped Newton with gradient regularization and continuation: the energy
//! is convex for p >= 2, so Newton steps with an Armijo line search descend
//! globally; the |grad u| regularization eps is halved on convergence until
//! it reaches 1e-8 times the datum Lipschitz scale, and the reported
//! residual is always that of the unregularized equations.

use super::energy::{initial_field, reduced_tilt, Density, Discretization};
use super::grid::{ScalarField, SlabGrid, TopClosure};
use super::mg::{pcg, Hierarchy};
use crate::aharm::TiltedNorm;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Max-norm tolerance on the volume-scaled Euler-Lagrange residual.
    pub tol: f64,
    /// Newton iterations allowed per continuation stage.
    pub max_newton: usize,
    /// Total Newton budget across stages.
    pub max_total: usize,
    pub pcg_tol: f64,
    pub pcg_max_iter: usize,
    /// eps starts at eps0_scale * Lipschitz scale of the datum.
    pub eps0_scale: f64,
    /// continuation target: eps_min_scale * Lipschitz scale.
    pub eps_min_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_newton: 40,
            max_total: 600,
            pcg_tol: 1e-2,
            pcg_max_iter: 60,
            eps0_scale: 0.1,
            eps_min_scale: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub field: ScalarField,
    /// Final unregularized residual (volume-scaled max norm).
    pub residual: f64,
    pub eps_final: f64,
    pub newton_iterations: usize,
    /// Energy trajectories, one per continuation stage; nonincreasing
    /// within each stage.
    pub energy_history: Vec<Vec<f64>>,
    pub residual_history: Vec<f64>,
}

fn scaled_max(disc: &Discretization, g: &[f64]) -> f64 {
    let (nx, nz) = (disc.grid.nx, disc.grid.nz);
    let h = disc.grid.h();
    let mut worst = 0.0f64;
    for j in 1..=nz {
        if !disc.unknown_row(j) {
            continue;
        }
        let vol = h * h * disc.grid.weight((j as f64 * h).max(h / 3.0));
        for i in 0..nx {
            worst = worst.max((g[j * nx + i] / vol).abs());
        }
    }
    worst
}

/// Minimizes the slab energy with bottom datum, lateral periodicity and the
/// chosen top closure. The datum is sampled at the lateral nodes.
pub fn solve(
    grid: SlabGrid,
    datum: &[f64],
    tn: &TiltedNorm,
    top: TopClosure,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if (tn.p - grid.geometry.p).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "tilted norm p = {} differs from geometry p = {}",
            tn.p, grid.geometry.p
        )));
    }
    let a2 = reduced_tilt(&grid, &tn.a)?;
    let mut field = initial_field(grid, datum, top)?;
    let h = grid.h();
    // Lipschitz scale of the boundary data plus the closure transition
    let mut lip = 0.0f64;
    for i in 0..grid.nx {
        let d = (datum[(i + 1) % grid.nx] - datum[i]).abs() / h;
        lip = lip.max(d);
    }
    let mean = datum.iter().sum::<f64>() / datum.len() as f64;
    let top_value = match top {
        TopClosure::Dirichlet(v) => v,
        _ => mean,
    };
    lip = lip.max((top_value - mean).abs() / grid.height);
    let lip = lip.max(1e-12);

    let p = grid.geometry.p;
    let mut eps = opts.eps0_scale * lip.max(1.0);
    let eps_min = opts.eps_min_scale * lip;
    let mut report = SolveReport {
        field: ScalarField::zeros(grid),
        residual: f64::INFINITY,
        eps_final: eps,
        newton_iterations: 0,
        energy_history: Vec::new(),
        residual_history: Vec::new(),
    };

    let n = field.values.len();
    let mut g = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut total_newton = 0usize;

    loop {
        let disc = Discretization::new(grid, Density { a: a2, p, eps }, top);
        let mut stage_energy = Vec::new();
        let mut stage_done = false;
        for _ in 0..opts.max_newton {
            let raw = disc.residual(&field.values);
            report.residual_history.push(raw);
            if raw <= opts.tol && eps <= eps_min * (1.0 + 1e-9) {
                report.residual = raw;
                report.eps_final = eps;
                report.energy_history.push(stage_energy);
                report.field = field;
                return Ok(report);
            }
            disc.gradient(&field.values, &mut g);
            let gmax = scaled_max(&disc, &g);
            if gmax <= 0.5 * opts.tol {
                stage_done = true;
                break;
            }
            let e0 = disc.energy(&field.values);
            if stage_energy.is_empty() {
                stage_energy.push(e0);
            }
            let cells = disc.hessian_cells(&field.values);
            let mut hier = Hierarchy::build(grid.nx, grid.nz, cells, disc.top_free);
            let mut rhs = g.clone();
            rhs.iter_mut().for_each(|v| *v = -*v);
            let (_iters, _rel) = pcg(&mut hier, &rhs, &mut d, opts.pcg_tol, opts.pcg_max_iter);
            let mut slope: f64 = g.iter().zip(&d).map(|(gi, di)| gi * di).sum();
            if !(slope < 0.0) {
                // fall back to a diagonally preconditioned descent direction
                let diag = hier.diag();
                for i in 0..n {
                    d[i] = -g[i] / diag[i].max(1e-30);
                }
                disc.zero_fixed_rows(&mut d);
                slope = g.iter().zip(&d).map(|(gi, di)| gi * di).sum();
            }
            let mut t = 1.0;
            let mut accepted = false;
            let mut trial = field.values.clone();
            for _ in 0..40 {
                for i in 0..n {
                    trial[i] = field.values[i] + t * d[i];
                }
                let e1 = disc.energy(&trial);
                if e1 <= e0 + 1e-4 * t * slope {
                    field.values.copy_from_slice(&trial);
                    stage_energy.push(e1);
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            total_newton += 1;
            report.newton_iterations = total_newton;
            if !accepted || total_newton >= opts.max_total {
                if !accepted && eps > eps_min {
                    stage_done = true;
                    break;
                }
                let raw = disc.residual(&field.values);
                return Err(Error::NonConvergence {
                    final_residual: raw,
                    iterations: total_newton,
                    history: report.residual_history,
                });
            }
        }
        report.energy_history.push(stage_energy);
        if eps <= eps_min * (1.0 + 1e-9) {
            let raw = disc.residual(&field.values);
            report.residual = raw;
            report.eps_final = eps;
            if raw <= opts.tol * 10.0 {
                // residual within an order of the target at the final eps:
                // accept and report
                report.field = field;
                return Ok(report);
            }
            return Err(Error::NonConvergence {
                final_residual: raw,
                iterations: total_newton,
                history: report.residual_history,
            });
        }
        if !stage_done && total_newton >= opts.max_total {
            let raw = disc.residual(&field.values);
            return Err(Error::NonConvergence {
                final_residual: raw,
                iterations: total_newton,
                history: report.residual_history,
            });
        }
        eps = (0.5 * eps).max(eps_min);
    }
}

/// Convenience: p-Laplacian solve (zero tilt).
pub fn solve_plain(
    grid: SlabGrid,
    datum: &[f64],
    top: TopClosure,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let tn = TiltedNorm::new(vec![0.0; grid.geometry.n as usize], grid.geometry.p)?;
    solve(grid, datum, &tn, top, opts)
}
