//! Cell energies, gradients and Hessian stencils for the regularized
//! tilted-norm functional on a slab grid. Each grid cell is split into two
//! right triangles with constant gradients; the energy density is
//! f_eps(eta) = q_eps^p / p with q_eps = sqrt(|eta|^2 + eps^2) + <a, eta>.

use super::grid::{ScalarField, SlabGrid, TopClosure};
use crate::error::{Error, Result};

/// Energy density parameters in the reduced (lateral, vertical) plane.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Density {
    pub a: [f64; 2],
    pub p: f64,
    pub eps: f64,
}

impl Density {
    #[inline]
    pub fn f(&self, gx: f64, gy: f64) -> f64 {
        let s = (gx * gx + gy * gy + self.eps * self.eps).sqrt();
        let q = s + self.a[0] * gx + self.a[1] * gy;
        q.powf(self.p) / self.p
    }

    /// Flux (df/dgx, df/dgy).
    #[inline]
    pub fn df(&self, gx: f64, gy: f64) -> (f64, f64) {
        let s = (gx * gx + gy * gy + self.eps * self.eps).sqrt();
        let q = s + self.a[0] * gx + self.a[1] * gy;
        let scale = q.powf(self.p - 1.0);
        (scale * (gx / s + self.a[0]), scale * (gy / s + self.a[1]))
    }

    /// Unregularized flux with the continuous extension 0 at eta = 0.
    #[inline]
    pub fn df_raw(&self, gx: f64, gy: f64) -> (f64, f64) {
        let s = (gx * gx + gy * gy).sqrt();
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let q = s + self.a[0] * gx + self.a[1] * gy;
        let scale = q.powf(self.p - 1.0);
        (scale * (gx / s + self.a[0]), scale * (gy / s + self.a[1]))
    }

    /// Hessian (m11, m12, m22); symmetric positive definite for p >= 2,
    /// |a| < 1, eps > 0.
    #[inline]
    pub fn d2f(&self, gx: f64, gy: f64) -> (f64, f64, f64) {
        let s2 = gx * gx + gy * gy + self.eps * self.eps;
        let s = s2.sqrt();
        let q = s + self.a[0] * gx + self.a[1] * gy;
        let qp2 = q.powf(self.p - 2.0);
        let (d1, d2) = (gx / s + self.a[0], gy / s + self.a[1]);
        let c1 = (self.p - 1.0) * qp2;
        let c2 = qp2 * q / s;
        let m11 = c1 * d1 * d1 + c2 * (1.0 - gx * gx / s2);
        let m12 = c1 * d1 * d2 + c2 * (-gx * gy / s2);
        let m22 = c1 * d2 * d2 + c2 * (1.0 - gy * gy / s2);
        (m11, m12, m22)
    }
}

/// Triangle gradients of a cell (i, j):
/// T1 over nodes A=(i,j), B=(i+1,j), C=(i+1,j+1) and
/// T2 over nodes A=(i,j), C=(i+1,j+1), D=(i,j+1).
#[inline]
pub(crate) fn cell_gradients(
    u: &[f64],
    nx: usize,
    i: usize,
    j: usize,
    inv_h: f64,
) -> ((f64, f64), (f64, f64)) {
    let ip = if i + 1 == nx { 0 } else { i + 1 };
    let a = u[j * nx + i];
    let b = u[j * nx + ip];
    let c = u[(j + 1) * nx + ip];
    let d = u[(j + 1) * nx + i];
    (((b - a) * inv_h, (c - b) * inv_h), ((c - d) * inv_h, (d - a) * inv_h))
}

/// Discretization context shared by the solver stages.
pub(crate) struct Discretization {
    pub grid: SlabGrid,
    pub density: Density,
    /// Triangle weights (vertical measure factor at the centroid) per cell,
    /// [w_t1, w_t2] interleaved.
    pub tri_weight: Vec<f64>,
    pub top_free: bool,
}

impl Discretization {
    pub fn new(grid: SlabGrid, density: Density, top: TopClosure) -> Self {
        let h = grid.h();
        let mut tri_weight = Vec::with_capacity(2 * grid.nx * grid.nz);
        for j in 0..grid.nz {
            let base = j as f64 * h;
            let w1 = grid.weight(base + h / 3.0);
            let w2 = grid.weight(base + 2.0 * h / 3.0);
            for _ in 0..grid.nx {
                tri_weight.push(w1);
                tri_weight.push(w2);
            }
        }
        Self { grid, density, tri_weight, top_free: matches!(top, TopClosure::Neumann) }
    }

    #[inline]
    pub fn unknown_row(&self, j: usize) -> bool {
        j >= 1 && (j < self.grid.nz || self.top_free)
    }

    /// Total energy sum over triangles of area * weight * f(grad).
    pub fn energy(&self, u: &[f64]) -> f64 {
        let (nx, nz) = (self.grid.nx, self.grid.nz);
        let h = self.grid.h();
        let inv_h = 1.0 / h;
        let area = 0.5 * h * h;
        let mut e = 0.0;
        for j in 0..nz {
            let mut row = 0.0;
            for i in 0..nx {
                let (g1, g2) = cell_gradients(u, nx, i, j, inv_h);
                let wi = 2 * (j * nx + i);
                row += self.tri_weight[wi] * self.density.f(g1.0, g1.1)
                    + self.tri_weight[wi + 1] * self.density.f(g2.0, g2.1);
            }
            e += area * row;
        }
        e
    }

    /// Gradient of the energy with respect to the unknown nodes; Dirichlet
    /// rows get zeros.
    pub fn gradient(&self, u: &[f64], g: &mut [f64]) {
        let (nx, nz) = (self.grid.nx, self.grid.nz);
        let h = self.grid.h();
        let inv_h = 1.0 / h;
        let area = 0.5 * h * h;
        g.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..nz {
            for i in 0..nx {
                let ip = if i + 1 == nx { 0 } else { i + 1 };
                let (g1, g2) = cell_gradients(u, nx, i, j, inv_h);
                let wi = 2 * (j * nx + i);
                let (fx, fy) = self.density.df(g1.0, g1.1);
                let s1 = area * self.tri_weight[wi] * inv_h;
                // T1: d gx = (B - A)/h, d gy = (C - B)/h
                g[j * nx + i] -= s1 * fx;
                g[j * nx + ip] += s1 * (fx - fy);
                g[(j + 1) * nx + ip] += s1 * fy;
                let (fx, fy) = self.density.df(g2.0, g2.1);
                let s2 = area * self.tri_weight[wi + 1] * inv_h;
                // T2: gx = (C - D)/h, gy = (D - A)/h
                g[(j + 1) * nx + ip] += s2 * fx;
                g[(j + 1) * nx + i] += s2 * (fy - fx);
                g[j * nx + i] -= s2 * fy;
            }
        }
        self.zero_fixed_rows(g);
    }

    /// Residual of the unregularized discrete Euler-Lagrange equations,
    /// scaled per lumped node volume so that the numbers are comparable to
    /// pointwise divergence values.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let (nx, nz) = (self.grid.nx, self.grid.nz);
        let h = self.grid.h();
        let inv_h = 1.0 / h;
        let area = 0.5 * h * h;
        let mut g = vec![0.0; u.len()];
        for j in 0..nz {
            for i in 0..nx {
                let ip = if i + 1 == nx { 0 } else { i + 1 };
                let (g1, g2) = cell_gradients(u, nx, i, j, inv_h);
                let wi = 2 * (j * nx + i);
                let (fx, fy) = self.density.df_raw(g1.0, g1.1);
                let s1 = area * self.tri_weight[wi] * inv_h;
                g[j * nx + i] -= s1 * fx;
                g[j * nx + ip] += s1 * (fx - fy);
                g[(j + 1) * nx + ip] += s1 * fy;
                let (fx, fy) = self.density.df_raw(g2.0, g2.1);
                let s2 = area * self.tri_weight[wi + 1] * inv_h;
                g[(j + 1) * nx + ip] += s2 * fx;
                g[(j + 1) * nx + i] += s2 * (fy - fx);
                g[j * nx + i] -= s2 * fy;
            }
        }
        self.zero_fixed_rows(&mut g);
        let mut worst = 0.0f64;
        for j in 1..=nz {
            if !self.unknown_row(j) {
                continue;
            }
            // lumped volume ~ h^2 * weight at the node height
            let vol = h * h * self.grid.weight((j as f64 * h).max(h / 3.0));
            for i in 0..nx {
                worst = worst.max((g[j * nx + i] / vol).abs());
            }
        }
        worst
    }

    pub fn zero_fixed_rows(&self, g: &mut [f64]) {
        let nx = self.grid.nx;
        g[..nx].iter_mut().for_each(|v| *v = 0.0);
        if !self.top_free {
            let nz = self.grid.nz;
            g[nz * nx..].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Per-triangle Hessian coefficients scaled by weight, for the stencil
    /// assembly: entries (m11, m12, m22) * weight / 2 per triangle.
    pub fn hessian_cells(&self, u: &[f64]) -> Vec<f64> {
        let (nx, nz) = (self.grid.nx, self.grid.nz);
        let inv_h = 1.0 / self.grid.h();
        let mut out = vec![0.0; 6 * nx * nz];
        for j in 0..nz {
            for i in 0..nx {
                let (g1, g2) = cell_gradients(u, nx, i, j, inv_h);
                let wi = 2 * (j * nx + i);
                let o = 6 * (j * nx + i);
                let (m11, m12, m22) = self.density.d2f(g1.0, g1.1);
                let w = 0.5 * self.tri_weight[wi];
                out[o] = w * m11;
                out[o + 1] = w * m12;
                out[o + 2] = w * m22;
                let (m11, m12, m22) = self.density.d2f(g2.0, g2.1);
                let w = 0.5 * self.tri_weight[wi + 1];
                out[o + 3] = w * m11;
                out[o + 4] = w * m12;
                out[o + 5] = w * m22;
            }
        }
        out
    }
}

/// Extracts the effective 2-D tilt for the reduced slab solve and checks
/// that the remaining components vanish.
pub(crate) fn reduced_tilt(grid: &SlabGrid, a: &[f64]) -> Result<[f64; 2]> {
    let n = grid.geometry.n as usize;
    let k = grid.geometry.k as usize;
    if a.len() != n {
        return Err(Error::Domain(format!("tilt has {} components, n = {n}", a.len())));
    }
    match grid.domain() {
        super::grid::DomainKind::HalfSpace => {
            for (idx, &v) in a.iter().enumerate().take(n - 1).skip(1) {
                if v != 0.0 {
                    return Err(Error::Domain(format!(
                        "half-space slab reduction needs a_{} = 0 (data vary in one lateral direction)",
                        idx + 1
                    )));
                }
            }
            Ok([a[0], a[n - 1]])
        }
        super::grid::DomainKind::Cylinder => {
            for (idx, &v) in a.iter().enumerate().skip(k.min(1)) {
                if v != 0.0 {
                    return Err(Error::Domain(format!(
                        "cylinder reduction needs a_{} = 0 (rotational symmetry in x'')",
                        idx + 1
                    )));
                }
            }
            Ok([a[0], 0.0])
        }
    }
}

/// Interpolates a bottom datum and closure into a full starting field.
pub(crate) fn initial_field(
    grid: SlabGrid,
    datum: &[f64],
    top: TopClosure,
) -> Result<ScalarField> {
    if datum.len() != grid.nx {
        return Err(Error::Resolution(format!(
            "datum has {} samples, grid has nx = {}",
            datum.len(),
            grid.nx
        )));
    }
    let mean = datum.iter().sum::<f64>() / datum.len() as f64;
    let top_value = match top {
        TopClosure::DirichletMean => mean,
        TopClosure::Dirichlet(v) => v,
        TopClosure::Neumann => mean,
    };
    let mut f = ScalarField::zeros(grid);
    f.top_free = matches!(top, TopClosure::Neumann);
    let nz = grid.nz;
    for j in 0..=nz {
        // geometric blend toward the closure value: linear is fine as a
        // starting guess
        let t = j as f64 / nz as f64;
        for i in 0..grid.nx {
            let idx = f.idx(i, j);
            f.values[idx] = datum[i] * (1.0 - t) + top_value * t;
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::Geometry;
    use approx::assert_relative_eq;

    fn disc(p: f64, eps: f64) -> Discretization {
        let g = SlabGrid::new(Geometry::new(2, 1, p).unwrap(), 1.0, 16, 4.0).unwrap();
        Discretization::new(g, Density { a: [0.0, 0.0], p, eps }, TopClosure::DirichletMean)
    }

    #[test]
    fn density_consistency() {
        let d = Density { a: [0.1, -0.2], p: 3.0, eps: 1e-3 };
        // finite-difference check of df and d2f
        let (gx, gy) = (0.4, -0.7);
        let h = 1e-6;
        let fd_x = (d.f(gx + h, gy) - d.f(gx - h, gy)) / (2.0 * h);
        let fd_y = (d.f(gx, gy + h) - d.f(gx, gy - h)) / (2.0 * h);
        let (dx, dy) = d.df(gx, gy);
        assert_relative_eq!(fd_x, dx, max_relative = 1e-8);
        assert_relative_eq!(fd_y, dy, max_relative = 1e-8);
        let (m11, m12, m22) = d.d2f(gx, gy);
        let (dxp, dyp) = d.df(gx + h, gy);
        let (dxm, dym) = d.df(gx - h, gy);
        assert_relative_eq!((dxp - dxm) / (2.0 * h), m11, max_relative = 1e-6);
        assert_relative_eq!((dyp - dym) / (2.0 * h), m12, max_relative = 1e-6);
        let (_, dyp) = d.df(gx, gy + h);
        let (_, dym) = d.df(gx, gy - h);
        assert_relative_eq!((dyp - dym) / (2.0 * h), m22, max_relative = 1e-6);
        // SPD
        assert!(m11 > 0.0 && m11 * m22 - m12 * m12 > 0.0);
    }

    #[test]
    fn gradient_matches_energy_differences() {
        let dc = disc(3.0, 1e-2);
        let n = dc.grid.nodes();
        let nx = dc.grid.nx;
        let mut u: Vec<f64> = (0..n)
            .map(|i| ((i % nx) as f64 * 0.37).sin() * 0.1 + (i / nx) as f64 * 0.01)
            .collect();
        let mut g = vec![0.0; n];
        dc.gradient(&u, &mut g);
        let h = 1e-7;
        for &probe in &[nx + 3, 5 * nx + 11, 20 * nx] {
            let orig = u[probe];
            u[probe] = orig + h;
            let ep = dc.energy(&u);
            u[probe] = orig - h;
            let em = dc.energy(&u);
            u[probe] = orig;
            let fd = (ep - em) / (2.0 * h);
            assert_relative_eq!(fd, g[probe], max_relative = 1e-5, epsilon = 1e-12);
        }
    }

    #[test]
    fn p2_energy_is_dirichlet_form() {
        // at p = 2, a = 0, eps = 0 the energy is half the Dirichlet energy
        let dc = disc(2.0, 0.0);
        let nx = dc.grid.nx;
        let u: Vec<f64> = (0..dc.grid.nodes())
            .map(|i| {
                let (ii, jj) = (i % nx, i / nx);
                (ii as f64 * 0.7).cos() + 0.3 * jj as f64
            })
            .collect();
        // compare against direct triangle sums
        let h = dc.grid.h();
        let mut direct = 0.0;
        for j in 0..dc.grid.nz {
            for i in 0..nx {
                let (g1, g2) = cell_gradients(&u, nx, i, j, 1.0 / h);
                direct += 0.5 * h * h
                    * (0.5 * (g1.0 * g1.0 + g1.1 * g1.1) + 0.5 * (g2.0 * g2.0 + g2.1 * g2.1));
            }
        }
        assert_relative_eq!(dc.energy(&u), direct, max_relative = 1e-13);
    }
}
