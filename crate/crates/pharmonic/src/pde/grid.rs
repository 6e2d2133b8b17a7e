//! Laterally periodic slab grids and scalar fields on them.
//!
//! Two domain reductions share one 2-D grid: the half-space slab (k = n-1,
//! data constant in all but one lateral direction) and the rotationally
//! symmetric cylinder over a low-dimensional plane (k <= n-2), where the
//! vertical coordinate is the distance s = |x''| to the plane and cell
//! energies carry the weight s^{n-k-1}.

use crate::error::{Error, Result};
use crate::exponents::Geometry;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    /// k = n-1: vertical coordinate is x_n, unit weight.
    HalfSpace,
    /// k <= n-2: vertical coordinate is s = |x''|, weight s^{n-k-1};
    /// exact for laterally periodic data that are rotationally symmetric
    /// in x''.
    Cylinder,
}

/// Closure imposed at the top of the truncated slab.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TopClosure {
    /// Dirichlet value equal to the lateral mean of the bottom datum.
    DirichletMean,
    /// Explicit Dirichlet value.
    Dirichlet(f64),
    /// Natural (zero-flux) closure; the top row is part of the unknowns.
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabGrid {
    pub geometry: Geometry,
    /// Lateral period.
    pub tau: f64,
    /// Lateral nodes per period; spacing h = tau / nx in both directions.
    pub nx: usize,
    /// Slab height (cylinder: outer radius); height = nz * h.
    pub height: f64,
    pub nz: usize,
}

impl SlabGrid {
    pub fn new(geometry: Geometry, tau: f64, nx: usize, height: f64) -> Result<Self> {
        if !(tau > 0.0) || !(height > 0.0) {
            return Err(Error::Domain(format!("tau = {tau}, height = {height} must be positive")));
        }
        if nx < 8 || nx % 2 != 0 {
            return Err(Error::Resolution(format!("nx = {nx} must be even and >= 8")));
        }
        if height / tau < 4.0 - 1e-12 {
            return Err(Error::Domain(format!(
                "height/tau = {} violates height >= 4 tau (decay headroom)",
                height / tau
            )));
        }
        let h = tau / nx as f64;
        let nz_f = height / h;
        let nz = nz_f.round() as usize;
        if (nz_f - nz as f64).abs() > 1e-9 {
            return Err(Error::Resolution(format!(
                "height {height} is not a multiple of the spacing {h}"
            )));
        }
        Ok(Self { geometry, tau, nx, height, nz })
    }

    pub fn h(&self) -> f64 {
        self.tau / self.nx as f64
    }

    pub fn domain(&self) -> DomainKind {
        if self.geometry.k == self.geometry.n - 1 {
            DomainKind::HalfSpace
        } else {
            DomainKind::Cylinder
        }
    }

    /// Cell-energy weight at height s.
    pub fn weight(&self, s: f64) -> f64 {
        match self.domain() {
            DomainKind::HalfSpace => 1.0,
            DomainKind::Cylinder => s.powi((self.geometry.n - self.geometry.k - 1) as i32),
        }
    }

    /// Lateral coordinate of column i, centered so that x = 0 sits at
    /// column nx/2.
    pub fn x_of(&self, i: usize) -> f64 {
        -0.5 * self.tau + i as f64 * self.h()
    }

    /// Column index nearest to lateral coordinate x (periodic wrap).
    pub fn col_of(&self, x: f64) -> usize {
        let h = self.h();
        let rel = (x + 0.5 * self.tau) / h;
        let i = rel.round() as i64;
        i.rem_euclid(self.nx as i64) as usize
    }

    pub fn nodes(&self) -> usize {
        (self.nz + 1) * self.nx
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    BottomDirichlet,
    TopDirichlet,
    Interior,
}

/// Grid function stored row-major from the bottom row upward.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: SlabGrid,
    pub values: Vec<f64>,
    /// Whether the top row was free (Neumann closure) in the solve.
    pub top_free: bool,
}

impl ScalarField {
    pub fn zeros(grid: SlabGrid) -> Self {
        let n = grid.nodes();
        Self { grid, values: vec![0.0; n], top_free: false }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.grid.nx + i
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.idx(i, j)]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.grid.nx..(j + 1) * self.grid.nx]
    }

    pub fn tag(&self, _i: usize, j: usize) -> BoundaryTag {
        if j == 0 {
            BoundaryTag::BottomDirichlet
        } else if j == self.grid.nz && !self.top_free {
            BoundaryTag::TopDirichlet
        } else {
            BoundaryTag::Interior
        }
    }

    pub fn row_mean(&self, j: usize) -> f64 {
        let r = self.row(j);
        r.iter().sum::<f64>() / r.len() as f64
    }

    pub fn row_max(&self, j: usize) -> f64 {
        self.row(j).iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn row_min(&self, j: usize) -> f64 {
        self.row(j).iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Bilinear interpolation at (x, height).
    pub fn interpolate(&self, x: f64, height: f64) -> f64 {
        let g = &self.grid;
        let h = g.h();
        let fx = (x + 0.5 * g.tau) / h;
        let fy = (height / h).clamp(0.0, g.nz as f64);
        let i0 = fx.floor() as i64;
        let j0 = (fy.floor() as usize).min(g.nz - 1);
        let wx = fx - i0 as f64;
        let wy = fy - j0 as f64;
        let col = |i: i64| i.rem_euclid(g.nx as i64) as usize;
        let (ia, ib) = (col(i0), col(i0 + 1));
        let v00 = self.value(ia, j0);
        let v10 = self.value(ib, j0);
        let v01 = self.value(ia, j0 + 1);
        let v11 = self.value(ib, j0 + 1);
        v00 * (1.0 - wx) * (1.0 - wy)
            + v10 * wx * (1.0 - wy)
            + v01 * (1.0 - wx) * wy
            + v11 * wx * wy
    }
}
