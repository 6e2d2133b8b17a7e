//! Measurement operations on solved slab fields: harmonic-measure values,
//! homogeneity fits, the periodic bump construction with its scale
//! separation diagnostics, oscillation profiles and the superlevel-set
//! convexity check.

use super::grid::{ScalarField, SlabGrid, TopClosure};
use super::solver::{solve_plain, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mollified indicator of the lateral ball B(0, r): 1 inside r - h/2, 0
/// outside r + h/2, linear ramp of width h, wrapped periodically.
pub fn measure_datum(grid: &SlabGrid, r: f64) -> Vec<f64> {
    let h = grid.h();
    (0..grid.nx)
        .map(|i| {
            let x = grid.x_of(i);
            // periodic distance to 0
            let d = x.abs().min(grid.tau - x.abs());
            ((r + 0.5 * h - d) / h).clamp(0.0, 1.0)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MeasureValue {
    /// Value at the grid node nearest to the unit point above the origin.
    pub nearest: f64,
    /// Bilinear interpolation at exactly (0, 1).
    pub interpolated: f64,
    pub residual: f64,
}

/// Solves for the p-harmonic measure of B(0, r) on the plane and evaluates
/// at the unit point above the origin.
pub fn harmonic_measure(grid: SlabGrid, r: f64, opts: &SolverOptions) -> Result<MeasureValue> {
    let h = grid.h();
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    if r < 4.0 * h {
        return Err(Error::Resolution(format!("r = {r} below 4h = {}", 4.0 * h)));
    }
    if grid.height < 1.0 + h {
        return Err(Error::Domain(format!(
            "slab height {} does not reach the evaluation height 1",
            grid.height
        )));
    }
    let datum = measure_datum(&grid, r);
    let rep = solve_plain(grid, &datum, TopClosure::DirichletMean, opts)?;
    let field = &rep.field;
    let i0 = grid.col_of(0.0);
    let j0 = (1.0 / h).round() as usize;
    Ok(MeasureValue {
        nearest: field.value(i0, j0.min(grid.nz)),
        interpolated: field.interpolate(0.0, 1.0),
        residual: rep.residual,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HomogeneityFit {
    pub sigma: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares slope of -log(value) against log(radius).
pub fn fit_homogeneity(samples: &[(f64, f64)]) -> Result<HomogeneityFit> {
    if samples.len() < 2 {
        return Err(Error::Domain("need at least two samples".into()));
    }
    let (mut rmin, mut rmax) = (f64::INFINITY, 0.0f64);
    for &(r, v) in samples {
        if !(r > 0.0) || !(v > 0.0) {
            return Err(Error::Domain(format!("sample ({r}, {v}) not positive")));
        }
        rmin = rmin.min(r);
        rmax = rmax.max(r);
    }
    if rmax / rmin < 2.0 {
        return Err(Error::Domain(format!(
            "radii span factor {} < 2; fit is degenerate",
            rmax / rmin
        )));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(r, v)| (r.ln(), -v.ln())).collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    let rss: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    Ok(HomogeneityFit { sigma: slope, residual: (rss / m).sqrt() })
}

/// Mollified point-mass datum: a hat of half-width `w` at the origin.
pub fn point_mass_datum(grid: &SlabGrid, w: f64) -> Vec<f64> {
    (0..grid.nx)
        .map(|i| {
            let x = grid.x_of(i);
            let d = x.abs().min(grid.tau - x.abs());
            (1.0 - d / w).max(0.0)
        })
        .collect()
}

/// Solves the mollified-point-mass problem and fits the homogeneity
/// exponent along the vertical axis over the given radii.
pub fn martin_exponent_fit(
    grid: SlabGrid,
    bump_halfwidth: f64,
    radii: &[f64],
    opts: &SolverOptions,
) -> Result<(HomogeneityFit, SolveReport)> {
    let datum = point_mass_datum(&grid, bump_halfwidth);
    let rep = solve_plain(grid, &datum, TopClosure::DirichletMean, opts)?;
    let samples: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| (r, rep.field.interpolate(0.0, r)))
        .collect();
    Ok((fit_homogeneity(&samples)?, rep))
}

/// Smooth bump of unit height: 1 on [-t/2, t/2], cosine-squared ramp to 0
/// at +-t, supported in (-t, t); slope bounded by pi/t.
pub fn bump_datum(grid: &SlabGrid, t: f64) -> Vec<f64> {
    (0..grid.nx)
        .map(|i| {
            let x = grid.x_of(i);
            let d = x.abs().min(grid.tau - x.abs());
            if d <= 0.5 * t {
                1.0
            } else if d < t {
                let phase = (d - 0.5 * t) / t * std::f64::consts::PI;
                phase.cos().powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiReport {
    /// The solved periodic extension of the bump datum.
    pub field: ScalarField,
    /// Height limit, measured as the mean of the free top row.
    pub xi: f64,
    /// Plane integral of the shifted function at unit height minus xi.
    pub b_bar_unit: f64,
    /// Same at the small shift height.
    pub b_bar_small: f64,
    /// The shift (height) whose b-bar is larger in magnitude.
    pub chosen_shift: f64,
    pub small_shift: f64,
    /// Scale-separation ratio: mean at the small shift over mean at unit
    /// height.
    pub ratio_scale_separation: f64,
    /// (height, max, min) per grid level.
    pub oscillation: Vec<(f64, f64, f64)>,
    /// Fitted decay exponent of the oscillation envelope above one period.
    pub decay_delta: f64,
    pub residual: f64,
}

impl PsiReport {
    /// Lateral trace of the shifted, centered function: values of
    /// field(., shift) - xi.
    pub fn trace(&self) -> Vec<f64> {
        let j = (self.chosen_shift / self.field.grid.h()).round() as usize;
        self.field.row(j).iter().map(|v| v - self.xi).collect()
    }
}

/// Builds the periodic bump extension with a free (zero-flux) top closure so
/// that the height limit xi is read off the top row, and reports the
/// scale-separation diagnostics.
pub fn build_psi(grid: SlabGrid, t: f64, opts: &SolverOptions) -> Result<PsiReport> {
    if !(t > 0.0 && t < 0.1 * grid.tau + 1e-15) {
        return Err(Error::Domain(format!("t = {t} outside (0, tau/10]")));
    }
    let h = grid.h();
    if h > t / 8.0 + 1e-15 {
        return Err(Error::Resolution(format!("h = {h} exceeds t/8 = {}", t / 8.0)));
    }
    let datum = bump_datum(&grid, t);
    let rep = solve_plain(grid, &datum, TopClosure::Neumann, opts)?;
    let field = rep.field;
    let xi = field.row_mean(grid.nz);
    let unit_j = (1.0 / h).round() as usize;
    let small_shift = 0.5 * t;
    let small_j = ((small_shift / h).round() as usize).max(1);
    let mean_unit = field.row_mean(unit_j);
    let mean_small = field.row_mean(small_j);
    let b_bar_unit = mean_unit - xi;
    let b_bar_small = mean_small - xi;
    let chosen_shift = if b_bar_unit.abs() >= b_bar_small.abs() {
        unit_j as f64 * h
    } else {
        small_j as f64 * h
    };
    let oscillation = oscillation_profile(&field);
    let decay_delta = oscillation_decay_exponent(&field, &oscillation);
    Ok(PsiReport {
        xi,
        b_bar_unit,
        b_bar_small,
        chosen_shift,
        small_shift: small_j as f64 * h,
        ratio_scale_separation: mean_small / mean_unit,
        oscillation,
        decay_delta,
        residual: rep.residual,
        field,
    })
}

/// Per-height lateral max and min.
pub fn oscillation_profile(field: &ScalarField) -> Vec<(f64, f64, f64)> {
    let g = &field.grid;
    (0..=g.nz)
        .map(|j| (j as f64 * g.h(), field.row_max(j), field.row_min(j)))
        .collect()
}

/// Fits osc(height) ~ osc(tau) (tau/height)^delta over heights in
/// [tau, height/2].
fn oscillation_decay_exponent(field: &ScalarField, osc: &[(f64, f64, f64)]) -> f64 {
    let g = &field.grid;
    let samples: Vec<(f64, f64)> = osc
        .iter()
        .filter(|(y, mx, mn)| *y >= g.tau && *y <= 0.5 * g.height && mx - mn > 0.0)
        .map(|(y, mx, mn)| (*y, mx - mn))
        .collect();
    match fit_homogeneity(&samples) {
        Ok(fit) => fit.sigma,
        Err(_) => f64::NAN,
    }
}

/// Largest ratio osc(2 y) / osc(y) over dyadic heights; below 1 means the
/// oscillation contracts per doubling.
pub fn oscillation_doubling_factor(field: &ScalarField) -> f64 {
    let g = &field.grid;
    let osc_at = |j: usize| field.row_max(j) - field.row_min(j);
    let mut theta: f64 = 0.0;
    let mut j = (0.25 * g.tau / g.h()).round() as usize;
    j = j.max(1);
    while 2 * j <= g.nz {
        let o1 = osc_at(j);
        let o2 = osc_at(2 * j);
        if o1 > 1e-14 {
            theta = theta.max(o2 / o1);
        }
        j *= 2;
    }
    theta
}

/// Checks each threshold's superlevel node set for convexity: every grid
/// node strictly inside the convex hull of the set must belong to the set.
/// Returns (threshold, violation count) pairs.
pub fn convexity_diagnostic(field: &ScalarField, thresholds: &[f64]) -> Vec<(f64, usize)> {
    let g = &field.grid;
    let mut out = Vec::with_capacity(thresholds.len());
    for &th in thresholds {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for j in 0..=g.nz {
            for i in 0..g.nx {
                if field.value(i, j) >= th {
                    pts.push((g.x_of(i), j as f64 * g.h()));
                }
            }
        }
        if pts.len() < 3 {
            out.push((th, 0));
            continue;
        }
        let hull = convex_hull(&mut pts);
        let mut violations = 0usize;
        let margin = 1e-9 * g.tau;
        for j in 0..=g.nz {
            for i in 0..g.nx {
                if field.value(i, j) >= th {
                    continue;
                }
                if strictly_inside(&hull, (g.x_of(i), j as f64 * g.h()), margin) {
                    violations += 1;
                }
            }
        }
        out.push((th, violations));
    }
    out
}

/// Andrew monotone chain; returns the hull in counterclockwise order.
fn convex_hull(pts: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn strictly_inside(hull: &[(f64, f64)], p: (f64, f64), margin: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    for w in 0..hull.len() {
        let a = hull[w];
        let b = hull[(w + 1) % hull.len()];
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        let edge = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        if cross <= margin * edge.max(1e-30) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fit_recovers_exact_homogeneity() {
        // v = x2/|x|^2 along the vertical ray is rho^{-1}
        let samples: Vec<(f64, f64)> = (0..6).map(|i| {
            let rho = 0.1 * 2f64.powi(i);
            (rho, 1.0 / rho)
        }).collect();
        let fit = fit_homogeneity(&samples).unwrap();
        assert_relative_eq!(fit.sigma, 1.0, max_relative = 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_constant_gives_zero() {
        let samples: Vec<(f64, f64)> = (0..6).map(|i| (0.1 * 2f64.powi(i), 3.5)).collect();
        let fit = fit_homogeneity(&samples).unwrap();
        assert_relative_eq!(fit.sigma, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_narrow_span() {
        let samples = vec![(1.0, 2.0), (1.5, 1.8), (1.9, 1.6)];
        assert!(fit_homogeneity(&samples).is_err());
    }

    #[test]
    fn convexity_of_disks_and_noise() {
        use crate::exponents::Geometry;
        let grid = SlabGrid::new(Geometry::new(2, 1, 2.0).unwrap(), 1.0, 64, 4.0).unwrap();
        let mut f = ScalarField::zeros(grid);
        // radially decreasing field: superlevel sets are disks
        for j in 0..=grid.nz {
            for i in 0..grid.nx {
                let (x, y) = (grid.x_of(i), j as f64 * grid.h());
                let idx = f.idx(i, j);
                f.values[idx] = 1.0 / (0.05 + x * x + y * y);
            }
        }
        let checks = convexity_diagnostic(&f, &[2.0, 5.0, 11.0]);
        assert!(checks.iter().all(|&(_, v)| v == 0), "disk levels convex: {checks:?}");
        // noise field: many violations
        let mut rngstate = 88172645463325252u64;
        let mut rnd = || {
            rngstate ^= rngstate << 13;
            rngstate ^= rngstate >> 7;
            rngstate ^= rngstate << 17;
            (rngstate % 1000) as f64 / 1000.0
        };
        for v in f.values.iter_mut() {
            *v = rnd();
        }
        let checks = convexity_diagnostic(&f, &[0.5]);
        assert!(checks[0].1 > 0, "noise field should violate convexity");
    }
}
