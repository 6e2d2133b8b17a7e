//! Geometric multigrid for the Newton systems: 7-point stencils from the
//! two-triangle cells, four-color Gauss-Seidel smoothing (the NE/SW diagonal
//! couplings rule out red-black), full-weighting restriction and bilinear
//! prolongation, wrapped as a PCG preconditioner. The lateral direction is
//! periodic; row 0 (and the top row unless free) are Dirichlet rows solved
//! as zero corrections.

use rayon::prelude::*;

pub(crate) struct Level {
    pub nx: usize,
    pub nz: usize,
    pub diag: Vec<f64>,
    pub ce: Vec<f64>,
    pub cn: Vec<f64>,
    pub cd: Vec<f64>,
    pub top_free: bool,
    x: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
}

impl Level {
    fn nodes(&self) -> usize {
        (self.nz + 1) * self.nx
    }

    #[inline]
    fn unknown_row(&self, j: usize) -> bool {
        j >= 1 && (j < self.nz || self.top_free)
    }

    #[inline]
    fn residual_at(&self, x: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
        b[j * self.nx + i] - self.row_apply(x, i, j)
    }

    /// (A x) at one unknown node.
    #[inline]
    fn row_apply(&self, x: &[f64], i: usize, j: usize) -> f64 {
        let nx = self.nx;
        let im = if i == 0 { nx - 1 } else { i - 1 };
        let ip = if i + 1 == nx { 0 } else { i + 1 };
        let mut acc = self.diag[j * nx + i] * x[j * nx + i]
            + self.ce[j * nx + i] * x[j * nx + ip]
            + self.ce[j * nx + im] * x[j * nx + im]
            + self.cn[(j - 1) * nx + i] * x[(j - 1) * nx + i]
            + self.cd[(j - 1) * nx + im] * x[(j - 1) * nx + im];
        if j + 1 <= self.nz {
            acc += self.cn[j * nx + i] * x[(j + 1) * nx + i]
                + self.cd[j * nx + i] * x[(j + 1) * nx + ip];
        }
        acc
    }
}

/// Assembles a level stencil from per-cell Hessian coefficients (6 values
/// per cell: [t1 m11, t1 m12, t1 m22, t2 m11, t2 m12, t2 m22], already
/// scaled by weight/2).
fn assemble(nx: usize, nz: usize, cells: &[f64], top_free: bool) -> Level {
    let nodes = (nz + 1) * nx;
    let mut diag = vec![0.0; nodes];
    let mut ce = vec![0.0; nodes];
    let mut cn = vec![0.0; nodes];
    let mut cd = vec![0.0; nodes];
    for j in 0..nz {
        for i in 0..nx {
            let ip = if i + 1 == nx { 0 } else { i + 1 };
            let o = 6 * (j * nx + i);
            // T1 nodes A=(i,j), B=(ip,j), C=(ip,j+1)
            let (c11, c12, c22) = (cells[o], cells[o + 1], cells[o + 2]);
            ce[j * nx + i] += c12 - c11;
            cd[j * nx + i] += -c12;
            cn[j * nx + ip] += c12 - c22;
            diag[j * nx + i] += c11;
            diag[j * nx + ip] += c11 - 2.0 * c12 + c22;
            diag[(j + 1) * nx + ip] += c22;
            // T2 nodes A=(i,j), C=(ip,j+1), D=(i,j+1)
            let (c11, c12, c22) = (cells[o + 3], cells[o + 4], cells[o + 5]);
            cd[j * nx + i] += -c12;
            cn[j * nx + i] += c12 - c22;
            ce[(j + 1) * nx + i] += c12 - c11;
            diag[j * nx + i] += c22;
            diag[(j + 1) * nx + ip] += c11;
            diag[(j + 1) * nx + i] += c11 - 2.0 * c12 + c22;
        }
    }
    Level {
        nx,
        nz,
        diag,
        ce,
        cn,
        cd,
        top_free,
        x: vec![0.0; nodes],
        b: vec![0.0; nodes],
        r: vec![0.0; nodes],
    }
}

fn coarsen_cells(nx: usize, nz: usize, cells: &[f64]) -> Vec<f64> {
    let (cnx, cnz) = (nx / 2, nz / 2);
    let mut out = vec![0.0; 6 * cnx * cnz];
    for cj in 0..cnz {
        for ci in 0..cnx {
            let o = 6 * (cj * cnx + ci);
            for (dj, di) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
                let fo = 6 * ((2 * cj + dj) * nx + (2 * ci + di));
                for c in 0..6 {
                    out[o + c] += 0.25 * cells[fo + c];
                }
            }
        }
    }
    out
}

pub(crate) struct Hierarchy {
    levels: Vec<Level>,
}

impl Hierarchy {
    pub fn build(nx: usize, nz: usize, cells: Vec<f64>, top_free: bool) -> Self {
        let mut levels = vec![assemble(nx, nz, &cells, top_free)];
        let mut cur = cells;
        let (mut lx, mut lz) = (nx, nz);
        while lx % 2 == 0 && lz % 2 == 0 && lx > 8 && lz > 8 {
            cur = coarsen_cells(lx, lz, &cur);
            lx /= 2;
            lz /= 2;
            levels.push(assemble(lx, lz, &cur, top_free));
        }
        Self { levels }
    }

    pub fn diag(&self) -> &[f64] {
        &self.levels[0].diag
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let lev = &self.levels[0];
        let nx = lev.nx;
        y.par_chunks_mut(nx).enumerate().for_each(|(j, yrow)| {
            if !lev.unknown_row(j) {
                yrow.iter_mut().for_each(|v| *v = 0.0);
                return;
            }
            for (i, out) in yrow.iter_mut().enumerate() {
                *out = lev.row_apply(x, i, j);
            }
        });
    }

    /// One symmetric V-cycle from a zero initial guess: y = M^{-1} b.
    pub fn precondition(&mut self, b: &[f64], y: &mut [f64]) {
        let n = self.levels[0].nodes();
        self.levels[0].b[..n].copy_from_slice(b);
        self.levels[0].x.iter_mut().for_each(|v| *v = 0.0);
        self.vcycle(0);
        y[..n].copy_from_slice(&self.levels[0].x);
    }

    fn vcycle(&mut self, l: usize) {
        if l + 1 == self.levels.len() {
            let lev = &mut self.levels[l];
            for _ in 0..60 {
                for c in 0..4 {
                    smooth(lev, c);
                }
                for c in (0..4).rev() {
                    smooth(lev, c);
                }
            }
            return;
        }
        {
            let lev = &mut self.levels[l];
            for c in 0..4 {
                smooth(lev, c);
            }
            let x = std::mem::take(&mut lev.x);
            let b = std::mem::take(&mut lev.b);
            let mut r = std::mem::take(&mut lev.r);
            residual(lev, &x, &b, &mut r);
            lev.x = x;
            lev.b = b;
            lev.r = r;
        }
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let f = &fine[l];
            let c = &mut coarse[0];
            restrict(f, &f.r, &mut c.b);
            c.x.iter_mut().for_each(|v| *v = 0.0);
        }
        self.vcycle(l + 1);
        {
            let (fine, coarse) = self.levels.split_at_mut(l + 1);
            let f = &mut fine[l];
            let c = &coarse[0];
            let mut x = std::mem::take(&mut f.x);
            prolong_add(c, &c.x, &mut x, f.top_free);
            f.x = x;
        }
        let lev = &mut self.levels[l];
        for c in (0..4).rev() {
            smooth(lev, c);
        }
    }
}

fn residual(lev: &Level, x: &[f64], b: &[f64], r: &mut [f64]) {
    let nx = lev.nx;
    r.par_chunks_mut(nx).enumerate().for_each(|(j, rrow)| {
        if !lev.unknown_row(j) {
            rrow.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        for (i, out) in rrow.iter_mut().enumerate() {
            *out = lev.residual_at(x, b, i, j);
        }
    });
}

/// Gauss-Seidel over one of the four (i%2, j%2) colors; the color ordering
/// keeps sweeps deterministic and the symmetric pre/post order keeps the
/// V-cycle usable inside PCG.
fn smooth(lev: &mut Level, color: usize) {
    let nx = lev.nx;
    let nz = lev.nz;
    let (ci, cj) = (color % 2, color / 2);
    let b = std::mem::take(&mut lev.b);
    let mut x = std::mem::take(&mut lev.x);
    for j in 1..=nz {
        if j % 2 != cj || !lev.unknown_row(j) {
            continue;
        }
        for i in (ci..nx).step_by(2) {
            let d = lev.diag[j * nx + i];
            if d <= 0.0 {
                continue;
            }
            let res = lev.residual_at(&x, &b, i, j);
            x[j * nx + i] += res / d;
        }
    }
    lev.b = b;
    lev.x = x;
}

fn restrict(fine: &Level, r: &[f64], out: &mut [f64]) {
    let (fnx, fnz) = (fine.nx, fine.nz);
    let cnx = fnx / 2;
    let cnz = fnz / 2;
    out.iter_mut().for_each(|v| *v = 0.0);
    for cj in 0..=cnz {
        let fj = (2 * cj) as isize;
        for ci in 0..cnx {
            let fi = 2 * ci;
            let im = if fi == 0 { fnx - 1 } else { fi - 1 };
            let ip = if fi + 1 == fnx { 0 } else { fi + 1 };
            let at = |ii: usize, jj: isize| -> f64 {
                if jj < 0 || jj as usize > fnz {
                    0.0
                } else {
                    r[jj as usize * fnx + ii]
                }
            };
            out[cj * cnx + ci] = 0.25 * at(fi, fj)
                + 0.125 * (at(ip, fj) + at(im, fj) + at(fi, fj - 1) + at(fi, fj + 1))
                + 0.0625 * (at(ip, fj + 1) + at(im, fj + 1) + at(ip, fj - 1) + at(im, fj - 1));
        }
    }
    out[..cnx].iter_mut().for_each(|v| *v = 0.0);
    if !fine.top_free {
        out[cnz * cnx..].iter_mut().for_each(|v| *v = 0.0);
    }
}

fn prolong_add(coarse: &Level, xc: &[f64], xf: &mut [f64], top_fixed_free: bool) {
    let (cnx, cnz) = (coarse.nx, coarse.nz);
    let fnx = 2 * cnx;
    let fnz = 2 * cnz;
    let at = |ii: usize, jj: usize| xc[jj * cnx + ii];
    for fj in 1..=fnz {
        let cj = fj / 2;
        for fi in 0..fnx {
            let ci = fi / 2;
            let cip = if ci + 1 == cnx { 0 } else { ci + 1 };
            let v = match (fi % 2, fj % 2) {
                (0, 0) => at(ci, cj),
                (1, 0) => 0.5 * (at(ci, cj) + at(cip, cj)),
                (0, 1) => 0.5 * (at(ci, cj) + at(ci, cj + 1)),
                _ => 0.25 * (at(ci, cj) + at(cip, cj) + at(ci, cj + 1) + at(cip, cj + 1)),
            };
            xf[fj * fnx + fi] += v;
        }
    }
    if !top_fixed_free {
        xf[fnz * fnx..].iter_mut().for_each(|v| *v = 0.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // deterministic chunked reduction independent of thread count
    let partials: Vec<f64> = a
        .par_chunks(1 << 14)
        .zip(b.par_chunks(1 << 14))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .collect();
    partials.iter().sum()
}

/// Preconditioned conjugate gradients with one V-cycle per application.
/// Returns (iterations, achieved relative residual).
pub(crate) fn pcg(
    hier: &mut Hierarchy,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> (usize, f64) {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    x.iter_mut().for_each(|v| *v = 0.0);
    r.copy_from_slice(b);
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return (0, 0.0);
    }
    hier.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 0..max_iter {
        hier.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            return (it, rel);
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= rel_tol {
            return (it + 1, rel);
        }
        hier.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        if rz_new.abs() < 1e-300 {
            return (it + 1, rel);
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (max_iter, rel)
}
