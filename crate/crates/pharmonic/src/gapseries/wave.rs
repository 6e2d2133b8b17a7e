//! Periodic boundary waves feeding the gap series. All waves are 1-periodic
//! per coordinate; k > 1 waves are coordinate products of a 1-D profile.

use crate::error::{Error, Result};

/// 1-D profile of a boundary wave.
#[derive(Clone, Debug)]
pub enum Wave1d {
    /// base + amp * cos(2 pi x)
    Cosine { base: f64, amp: f64 },
    /// base + amp * tri(x), tri the 1-periodic triangle wave with range
    /// [-1, 1] and Lipschitz norm 4
    Triangle { base: f64, amp: f64 },
    /// piecewise-linear interpolation of uniform samples over one period
    Grid { values: Vec<f64> },
}

impl Wave1d {
    pub fn eval(&self, x: f64) -> f64 {
        let frac = x - x.floor();
        match self {
            Wave1d::Cosine { base, amp } => base + amp * (2.0 * std::f64::consts::PI * frac).cos(),
            Wave1d::Triangle { base, amp } => {
                let c = frac - (frac + 0.5).floor(); // in [-1/2, 1/2)
                base + amp * (4.0 * c.abs() - 1.0)
            }
            Wave1d::Grid { values } => {
                let n = values.len();
                let pos = frac * n as f64;
                let i = (pos.floor() as usize).min(n - 1);
                let w = pos - i as f64;
                let next = values[(i + 1) % n];
                values[i] * (1.0 - w) + next * w
            }
        }
    }

    fn mean(&self) -> f64 {
        match self {
            Wave1d::Cosine { base, .. } | Wave1d::Triangle { base, .. } => *base,
            Wave1d::Grid { values } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    fn sup(&self) -> f64 {
        match self {
            Wave1d::Cosine { base, amp } | Wave1d::Triangle { base, amp } => {
                base.abs() + amp.abs()
            }
            Wave1d::Grid { values } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    fn lip(&self) -> f64 {
        match self {
            Wave1d::Cosine { amp, .. } => amp.abs() * 2.0 * std::f64::consts::PI,
            Wave1d::Triangle { amp, .. } => amp.abs() * 4.0,
            Wave1d::Grid { values } => {
                let n = values.len();
                (0..n)
                    .map(|i| (values[(i + 1) % n] - values[i]).abs() * n as f64)
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Boundary wave Psi0 on the k-torus with its zero-mean part
/// psi = Psi0 - mean. The constructor enforces sup + Lip <= 1/2 and a
/// nonzero mean.
#[derive(Clone, Debug)]
pub struct BoundaryWave {
    pub k: usize,
    profile: Wave1d,
    pub mean: f64,
    pub sup: f64,
    pub lip: f64,
}

impl BoundaryWave {
    pub fn new(k: usize, profile: Wave1d) -> Result<Self> {
        let w = Self::new_unchecked(k, profile);
        if w.sup + w.lip > 0.5 {
            return Err(Error::Domain(format!(
                "wave norms violate sup + Lip <= 1/2: {} + {} = {}",
                w.sup,
                w.lip,
                w.sup + w.lip
            )));
        }
        if w.mean == 0.0 {
            return Err(Error::Domain("wave mean must be nonzero".into()));
        }
        Ok(w)
    }

    /// Skips the norm checks; for diagnostics and stress tests. The norms
    /// are still computed and reported.
    pub fn new_unchecked(k: usize, profile: Wave1d) -> Self {
        assert!(k >= 1);
        let m1 = profile.mean();
        let s1 = profile.sup();
        let l1 = profile.lip();
        let mean = m1.powi(k as i32);
        let sup = s1.powi(k as i32);
        let lip = k as f64 * l1 * s1.powi(k as i32 - 1);
        Self { k, profile, mean, sup, lip }
    }

    /// Default synthetic wave: Psi0(x) = 1/8 + (1/32) cos(2 pi x) per
    /// coordinate; mean 1/8 per coordinate, norms well inside the 1/2 budget.
    pub fn default_cosine(k: usize) -> Self {
        Self::new(k, Wave1d::Cosine { base: 0.125, amp: 1.0 / 32.0 }).unwrap()
    }

    /// Triangle test wave: Psi0(x) = 1/8 + (1/16) tri(x) per coordinate.
    pub fn default_triangle(k: usize) -> Self {
        Self::new(k, Wave1d::Triangle { base: 0.125, amp: 1.0 / 16.0 }).unwrap()
    }

    /// Psi0 at a point of the k-torus.
    pub fn psi0(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.k);
        x.iter().map(|&xi| self.profile.eval(xi)).product()
    }

    /// Zero-mean part psi = Psi0 - mean.
    pub fn psi(&self, x: &[f64]) -> f64 {
        self.psi0(x) - self.mean
    }

    /// 1-D factor evaluation (the quadratures factor through this).
    pub fn factor(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    pub fn factor_mean(&self) -> f64 {
        self.profile.mean()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_wave_norm_budget() {
        let w = BoundaryWave::default_cosine(1);
        assert!(w.sup + w.lip <= 0.5);
        assert_relative_eq!(w.mean, 0.125);
        let w = BoundaryWave::default_triangle(1);
        assert!(w.sup + w.lip <= 0.5);
        let w2 = BoundaryWave::default_cosine(2);
        assert_relative_eq!(w2.mean, 0.125 * 0.125);
    }

    #[test]
    fn oversized_wave_rejected() {
        let r = BoundaryWave::new(1, Wave1d::Cosine { base: 0.125, amp: 0.0625 });
        assert!(r.is_err(), "1/8 + 1/16 cosine has sup+Lip > 1/2");
    }

    #[test]
    fn triangle_shape() {
        let w = BoundaryWave::default_triangle(1);
        assert_relative_eq!(w.factor(0.0), 0.125 - 1.0 / 16.0);
        assert_relative_eq!(w.factor(0.5), 0.125 + 1.0 / 16.0);
        assert_relative_eq!(w.factor(0.25), 0.125);
        // periodicity
        assert_relative_eq!(w.factor(3.3), w.factor(0.3), epsilon = 1e-12);
    }

    #[test]
    fn psi_has_zero_mean_on_grid() {
        for w in [BoundaryWave::default_cosine(1), BoundaryWave::default_triangle(1)] {
            let n = 1 << 12;
            let sum: f64 = (0..n)
                .map(|i| w.psi(&[-0.5 + (i as f64 + 0.5) / n as f64]))
                .sum();
            assert!(sum.abs() / n as f64 <= 1e-12);
        }
    }
}
