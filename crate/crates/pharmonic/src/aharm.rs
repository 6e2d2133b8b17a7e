//! Tilted-norm calculus: f(eta) = p^-1 (|eta| + <a, eta>)^p, the divergence
//! expansion with correction terms E1..E4, certified subsolution thresholds,
//! and the half-space w-parametrized functions G, F1..F4.

use crate::error::{Error, Result};
use crate::exponents::{compute_exponents, Geometry};
use crate::fd;
use crate::profile::{norm, st_derivatives, RadialProfile};
use serde::{Deserialize, Serialize};

/// Perturbation vector of the tilted norm q(eta) = |eta| + <a, eta>.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TiltedNorm {
    pub a: Vec<f64>,
    pub p: f64,
}

impl TiltedNorm {
    pub fn new(a: Vec<f64>, p: f64) -> Result<Self> {
        let na = norm(&a);
        if !(na < 1.0) {
            return Err(Error::Domain(format!("|a| = {na} violates |a| < 1")));
        }
        if !(p > 1.0) {
            return Err(Error::Regime(format!("p = {p} violates p > 1")));
        }
        Ok(Self { a, p })
    }

    /// Plane / normal split of the tilt for a k-plane geometry.
    pub fn split_norms(&self, k: usize) -> (f64, f64) {
        (norm(&self.a[..k.min(self.a.len())]), norm(&self.a[k.min(self.a.len())..]))
    }
}

/// q, Dq and D^2 q at eta: q = |eta| + <a, eta>, Dq = eta/|eta| + a,
/// D^2 q = (I - unit x unit)/|eta|. D^2 q is positive semi-definite with eta
/// in its kernel.
pub fn q_calculus(tn: &TiltedNorm, eta: &[f64]) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let en = norm(eta);
    if en == 0.0 {
        return Err(Error::Domain("q is not differentiable at eta = 0".into()));
    }
    let n = eta.len();
    let q = en + tn.a.iter().zip(eta).map(|(a, e)| a * e).sum::<f64>();
    let dq: Vec<f64> = eta.iter().zip(&tn.a).map(|(e, a)| e / en + a).collect();
    let mut d2q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            d2q[i][j] = (id - eta[i] * eta[j] / (en * en)) / en;
        }
    }
    Ok((q, dq, d2q))
}

/// Bump profile u = s^{(1+delta) beta} r^{-(1+delta)(lambda+beta)} used in
/// the tilted-norm subsolution estimates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AHarmonicProfile {
    pub geometry: Geometry,
    pub delta: f64,
    pub lambda: f64,
}

impl AHarmonicProfile {
    pub fn new(geometry: Geometry, delta: f64, lambda: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::Domain(format!("delta = {delta} violates delta >= 0")));
        }
        let chi = compute_exponents(geometry)?.chi;
        if lambda < chi - 1e-12 {
            return Err(Error::Domain(format!(
                "lambda = {lambda} violates lambda >= chi = {chi}"
            )));
        }
        Ok(Self { geometry, delta, lambda })
    }

    pub fn beta_t(&self) -> f64 {
        (1.0 + self.delta) * self.geometry.beta()
    }

    pub fn lambda_t(&self) -> f64 {
        (1.0 + self.delta) * self.lambda
    }

    pub fn as_radial(&self) -> RadialProfile {
        RadialProfile {
            geometry: self.geometry,
            beta_t: self.beta_t(),
            lambda_t: self.lambda_t(),
        }
    }
}

/// Direction cosines (<omega', a'>, <omega'', a''>) of the evaluation point
/// against the tilt. The obstruction arguments hinge on this choice, so it is
/// explicit rather than baked in.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum Orientation {
    /// <omega', a'> = +|a'| and <omega'', a''> = +|a''|.
    AlignedPlus,
    /// <omega', a'> = -|a'| and <omega'', a''> = -|a''|.
    AlignedMinus,
    /// Both inner products zero.
    Orthogonal,
    /// Explicit direction cosines.
    Cosines { plane: f64, normal: f64 },
}

impl Orientation {
    fn resolve(&self, ap: f64, app: f64) -> Result<(f64, f64)> {
        let (cp, cpp) = match *self {
            Orientation::AlignedPlus => (ap, app),
            Orientation::AlignedMinus => (-ap, -app),
            Orientation::Orthogonal => (0.0, 0.0),
            Orientation::Cosines { plane, normal } => (plane, normal),
        };
        if cp.abs() > ap + 1e-12 || cpp.abs() > app + 1e-12 {
            return Err(Error::Domain(format!(
                "direction cosines ({cp}, {cpp}) exceed tilt split norms ({ap}, {app})"
            )));
        }
        Ok((cp, cpp))
    }
}

/// The five components of q^{2-p}(grad u) div(Df(grad u)).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ETerms {
    pub main: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub total: f64,
}

/// Divergence expansion of the tilted operator on the profile at (s, t).
/// `main` is the untilted normalized p-Laplacian (bitwise the profile-calc
/// value); every E-term carries a factor of the tilt.
pub fn divergence_tilted(
    tn: &TiltedNorm,
    prof: &AHarmonicProfile,
    s: f64,
    t: f64,
    orient: Orientation,
) -> Result<ETerms> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("s = {s} violates s > 0")));
    }
    let radial = prof.as_radial();
    let main = crate::profile::divergence_st(&radial, s, t)?;
    let (n, k) = (prof.geometry.n as f64, prof.geometry.k as f64);
    let p = tn.p;
    let (ap, app) = tn.split_norms(prof.geometry.k as usize);
    let (cp, cpp) = orient.resolve(ap, app)?;

    let d = st_derivatives(&radial, s, t);
    let gn = d.grad;
    if gn == 0.0 {
        return Err(Error::DegenerateGradient { s, t });
    }
    let quad = d.ut * d.ut * d.utt + 2.0 * d.ut * d.us * d.ust + d.us * d.us * d.uss;
    let e1 = -((cp * d.ut + cpp * d.us) / gn) * quad / (gn * gn);
    let e2 = 2.0 * (p - 1.0)
        * ((d.us * d.ust + d.utt * d.ut) / gn * cp + (d.ut * d.ust + d.uss * d.us) / gn * cpp);
    let e3 = (p - 1.0)
        * (d.ut_over_t * ap * ap
            + (d.utt - d.ut_over_t) * cp * cp
            + 2.0 * cp * cpp * d.ust
            + d.us_over_s * app * app
            + (d.uss - d.us_over_s) * cpp * cpp);
    let e4 = ((cp * d.ut + cpp * d.us) / gn)
        * (d.ut_over_t * (k - 1.0) + d.utt + d.us_over_s * (n - k - 1.0) + d.uss);
    Ok(ETerms { main, e1, e2, e3, e4, total: main + e1 + e2 + e3 + e4 })
}

/// Certified and simplified tilt bounds under which the bump profile is a
/// subsolution of the tilted operator.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Thresholds {
    /// The full certified bound (awkward but general).
    pub certified: f64,
    /// Simplified bound for k = 1, p > n-1.
    pub simplified_k1: Option<f64>,
    /// Simplified half-plane bound, k = n-1.
    pub halfplane: Option<f64>,
}

/// Evaluates the certified tilt bound
///
///   (1/4)(p-1) min(lt^2 (lt+bt) delta chi, bt^3 delta beta)
///   ------------------------------------------------------------
///   (lt^2 + bt^2) (30(p-1) + 10(n+k)) (lt + bt + 1)^2
///
/// together with the simplified bounds where they apply. Requires delta > 0;
/// no threshold exists at delta = 0.
pub fn subsolution_threshold(tn: &TiltedNorm, prof: &AHarmonicProfile) -> Result<Thresholds> {
    if prof.delta <= 0.0 {
        return Err(Error::Domain(
            "delta = 0 admits no tilt threshold; the profile is then neither a sub- nor a supersolution for any a != 0"
                .into(),
        ));
    }
    let g = prof.geometry;
    let (n, k, p) = (g.n as f64, g.k as f64, tn.p);
    let exps = compute_exponents(g)?;
    let (beta, chi) = (exps.beta, exps.chi);
    let (lt, bt) = (prof.lambda_t(), prof.beta_t());
    let delta = prof.delta;
    let numer = 0.25 * (p - 1.0) * (lt * lt * (lt + bt) * delta * chi).min(bt.powi(3) * delta * beta);
    let denom = (lt * lt + bt * bt)
        * (30.0 * (p - 1.0) + 10.0 * (n + k))
        * (lt + bt + 1.0).powi(2);
    let certified = (numer / denom).min(1.0);
    let simplified_k1 = if g.k == 1 && p > n - 1.0 {
        Some((p - 2.0) * ((p + 1.0 - n).powi(4).min(1.0)) / (100000.0 * (p - 1.0)))
    } else {
        None
    };
    let halfplane = if g.k == g.n - 1 {
        Some((p - 2.0) / (100000.0 * (p - 1.0)))
    } else {
        None
    };
    Ok(Thresholds { certified, simplified_k1, halfplane })
}

/// Empirical sharp threshold for a fixed tilt direction: the largest |a|
/// (bisected to `iters` rounds) for which the total stays nonnegative on a
/// `grid`-point quarter circle under both worst-case orientations.
pub fn measured_sharp_threshold(
    geometry: Geometry,
    delta: f64,
    lambda: f64,
    a_dir: &[f64],
    grid: usize,
    iters: usize,
) -> Result<f64> {
    let prof = AHarmonicProfile::new(geometry, delta, lambda)?;
    let dn = norm(a_dir);
    if dn == 0.0 {
        return Err(Error::Domain("tilt direction must be nonzero".into()));
    }
    let unit: Vec<f64> = a_dir.iter().map(|v| v / dn).collect();
    let passes = |scale: f64| -> bool {
        let a: Vec<f64> = unit.iter().map(|v| v * scale).collect();
        let tn = match TiltedNorm::new(a, geometry.p) {
            Ok(t) => t,
            Err(_) => return false,
        };
        subsolution_on_sphere(&tn, &prof, grid)
    };
    let mut lo = 0.0;
    let mut hi = 1.0 - 1e-9;
    if passes(hi) {
        return Ok(hi);
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Checks total >= 0 on a quarter-circle grid under both aligned worst-case
/// orientations.
pub fn subsolution_on_sphere(tn: &TiltedNorm, prof: &AHarmonicProfile, grid: usize) -> bool {
    for i in 0..grid {
        // w in (0, 1): s = sqrt(w), t = sqrt(1-w)
        let w = (i as f64 + 0.5) / grid as f64;
        let s = w.sqrt();
        let t = (1.0 - w).sqrt();
        for orient in [Orientation::AlignedPlus, Orientation::AlignedMinus] {
            match divergence_tilted(tn, prof, s, t, orient) {
                Ok(e) if e.total >= 0.0 => {}
                _ => return false,
            }
        }
    }
    true
}

/// The half-space w-functions of the tilted expansion at a = (0, ..., 0, b),
/// lambda the base exponent, s^2 = w and t^2 = 1 - w on the unit sphere.
pub fn halfspace_w_functions(
    p: f64,
    n: u32,
    lambda: f64,
    b: f64,
    w: f64,
) -> Result<(f64, f64, f64, f64, f64)> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Domain(format!("w = {w} outside [0, 1]")));
    }
    if !(b.abs() < 1.0) {
        return Err(Error::Domain(format!("|b| = {} violates |b| < 1", b.abs())));
    }
    if !(p >= 2.0) {
        return Err(Error::Regime(format!("p = {p} violates p >= 2")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda = {lambda} violates lambda > 0")));
    }
    let nf = n as f64;
    let l = lambda;
    let den = (l * l - 1.0) * w + 1.0;
    let sden = den.sqrt();
    let g = ((p - 1.0) * (l - (nf - 1.0) / (p - 1.0)) * l * l * w
        + (2.0 * p - 3.0) * (l - (p + nf - 3.0) / (2.0 * p - 3.0)) * (1.0 - w))
        / den;
    let f1 = b * ((l + 1.0) * w - 1.0) * ((l * l * l - 2.0 * l + 1.0) * w + 2.0 * l - 1.0)
        / (den * sden);
    let f2 = 2.0 * (p - 1.0) * b * (l - 2.0 - w * (l + 2.0) * (l - 1.0)) / sden;
    let f3 = (p - 1.0) * b * b * (-3.0 + w * (3.0 + l));
    let f4 = b * (1.0 - (l + 1.0) * w) / sden * (l + 1.0 - nf);
    Ok((g, f1, f2, f3, f4))
}

/// Smallest n <= n_max for which G + F1 + F2 + F3 is positive on a 10^4-point
/// w-grid at lambda = n-1, with the full sum staying positive at the slightly
/// smaller lambda = (n-1)(1 - 1e-3) as a continuity margin. The w-grid is
/// augmented with the exact points w in {0, 1/n, 1}.
pub fn lemma616_scan(b: f64, p: f64, n_max: u32) -> Result<u32> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("b = {b} outside (0, 1)")));
    }
    if (p - 2.0) / (p - 1.0) <= 2.0 * b - b * b {
        return Err(Error::Regime(format!(
            "(p-2)/(p-1) = {} violates (p-2)/(p-1) > 2b - b^2 = {}",
            (p - 2.0) / (p - 1.0),
            2.0 * b - b * b
        )));
    }
    const GRID: usize = 10_000;
    let min_sum = |n: u32, lambda: f64| -> Result<f64> {
        let mut min = f64::INFINITY;
        let mut at = |w: f64| -> Result<()> {
            let (g, f1, f2, f3, f4) = halfspace_w_functions(p, n, lambda, b, w)?;
            let v = g + f1 + f2 + f3 + f4;
            if v < min {
                min = v;
            }
            Ok(())
        };
        for i in 0..=GRID {
            at(i as f64 / GRID as f64)?;
        }
        at(1.0 / n as f64)?;
        Ok(min)
    };
    for n in 3..=n_max {
        let lam = (n - 1) as f64;
        // F4 vanishes identically at lambda = n-1
        if min_sum(n, lam)? > 0.0 && min_sum(n, lam * (1.0 - 1e-3))? > 0.0 {
            return Ok(n);
        }
    }
    Err(Error::NotFound(format!(
        "no n <= {n_max} with positive minimum over the w-grid"
    )))
}

/// Finite-difference check of div(Df(grad u)) against the E-term expansion,
/// normalized as in [`fd::fd_tilted_oracle`].
pub fn fd_tilted_oracle(
    tn: &TiltedNorm,
    prof: &AHarmonicProfile,
    x: &[f64],
    h: f64,
) -> Result<f64> {
    fd::fd_tilted_oracle(&prof.as_radial(), &tn.a, x, h)
}
