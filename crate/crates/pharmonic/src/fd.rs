//! Full-coordinate finite-difference checks of the closed-form divergence
//! reductions. These evaluate the profile pointwise only, so they stay
//! independent of the (s, t) algebra they are used to validate.

use crate::error::{Error, Result};
use crate::profile::{norm, RadialProfile};

/// Fourth-order central gradient of `u` at `y` with step `h`.
fn gradient4<U: Fn(&[f64]) -> f64>(u: &U, y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut g = vec![0.0; n];
    let mut z = y.to_vec();
    for i in 0..n {
        let yi = y[i];
        let mut at = |d: f64| {
            z[i] = yi + d;
            let v = u(&z);
            z[i] = yi;
            v
        };
        g[i] = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
    }
    g
}

/// q(eta) = |eta| + <a, eta>.
fn q_of(a: &[f64], eta: &[f64]) -> f64 {
    norm(eta) + a.iter().zip(eta).map(|(ai, ei)| ai * ei).sum::<f64>()
}

/// Flux Df(eta) = q^{p-1}(eta) (eta/|eta| + a) for f = q^p / p; reduces to
/// the p-Laplacian flux |eta|^{p-2} eta at a = 0.
fn flux(a: &[f64], p: f64, eta: &[f64]) -> Vec<f64> {
    let en = norm(eta);
    let q = q_of(a, eta);
    let scale = q.powf(p - 1.0);
    eta.iter()
        .zip(a)
        .map(|(ei, ai)| scale * (ei / en + ai))
        .collect()
}

/// Normalized divergence q^{2-p}(grad u) div(Df(grad u)) at `x`, with a
/// second-order outer divergence of fluxes built from fourth-order inner
/// gradients.
pub fn normalized_divergence<U: Fn(&[f64]) -> f64>(
    u: &U,
    a: &[f64],
    p: f64,
    x: &[f64],
    h: f64,
) -> f64 {
    let n = x.len();
    let mut div = 0.0;
    let mut y = x.to_vec();
    for i in 0..n {
        let xi = x[i];
        y[i] = xi + h;
        let gp = gradient4(u, &y, h);
        let fp = flux(a, p, &gp)[i];
        y[i] = xi - h;
        let gm = gradient4(u, &y, h);
        let fm = flux(a, p, &gm)[i];
        y[i] = xi;
        div += (fp - fm) / (2.0 * h);
    }
    let g0 = gradient4(u, x, h);
    q_of(a, &g0).powf(2.0 - p) * div
}

fn check_step(prof: &RadialProfile, x: &[f64], h: f64) -> Result<()> {
    let k = prof.geometry.k as usize;
    if x.len() != prof.geometry.n as usize {
        return Err(Error::Domain(format!(
            "point has {} coordinates, geometry has n = {}",
            x.len(),
            prof.geometry.n
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("h = {h} violates h > 0")));
    }
    let dist = norm(&x[k..]);
    if 10.0 * h >= dist {
        return Err(Error::StepTooLarge { ten_h: 10.0 * h, dist });
    }
    Ok(())
}

/// Central-difference approximation of |grad u|^{2-p} div(|grad u|^{p-2} grad u)
/// in full coordinates; agrees with the closed-form (s, t) reduction to O(h^2).
pub fn fd_divergence_oracle(prof: &RadialProfile, x: &[f64], h: f64) -> Result<f64> {
    check_step(prof, x, h)?;
    let zero = vec![0.0; x.len()];
    Ok(normalized_divergence(
        &|y: &[f64]| prof.eval_point(y),
        &zero,
        prof.geometry.p,
        x,
        h,
    ))
}

/// As [`fd_divergence_oracle`] with the p-norm replaced by the tilted norm
/// q(eta) = |eta| + <a, eta>. At a = 0 this is bitwise the same computation.
pub fn fd_tilted_oracle(prof: &RadialProfile, a: &[f64], x: &[f64], h: f64) -> Result<f64> {
    check_step(prof, x, h)?;
    if a.len() != x.len() {
        return Err(Error::Domain(format!(
            "tilt has {} coordinates, point has {}",
            a.len(),
            x.len()
        )));
    }
    Ok(normalized_divergence(
        &|y: &[f64]| prof.eval_point(y),
        a,
        prof.geometry.p,
        x,
        h,
    ))
}

/// Least-squares slope of log(err) against log(h); the observed convergence
/// order of a stencil sweep.
pub fn fitted_order(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::Geometry;
    use crate::profile::divergence_st;

    #[test]
    fn exact_solution_is_flat() {
        // p = n with lambda_t = beta_t = beta: the oracle sees an exact zero
        let prof = RadialProfile::new(Geometry::new(3, 1, 3.0).unwrap(), 0.5, 0.5).unwrap();
        let v = fd_divergence_oracle(&prof, &[0.0, 0.8, 0.6], 1e-4).unwrap();
        assert!(v.abs() < 1e-6, "residual {v}");
    }

    #[test]
    fn matches_closed_form() {
        let prof = RadialProfile::new(Geometry::new(3, 1, 3.0).unwrap(), 0.5, 1.0).unwrap();
        let x = [0.0, 0.8, 0.6];
        let fd = fd_divergence_oracle(&prof, &x, 1e-4).unwrap();
        let st = divergence_st(&prof, 0.8f64.hypot(0.6), 0.0).unwrap();
        assert!(
            (fd - st).abs() <= 1e-4 * st.abs(),
            "fd = {fd}, closed = {st}"
        );
    }

    #[test]
    fn second_order_convergence() {
        let prof = RadialProfile::new(Geometry::new(3, 1, 3.5).unwrap(), 0.7, 1.3).unwrap();
        let x = [0.3, 0.5, 0.7];
        let s = (0.5f64 * 0.5 + 0.7 * 0.7).sqrt();
        let exact = divergence_st(&prof, s, 0.3).unwrap();
        let e1 = (fd_divergence_oracle(&prof, &x, 2e-3).unwrap() - exact).abs();
        let e2 = (fd_divergence_oracle(&prof, &x, 1e-3).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!(
            (3.0..5.3).contains(&ratio),
            "halving h should cut the error ~4x, got {ratio}"
        );
    }

    #[test]
    fn step_too_large_rejected() {
        let prof = RadialProfile::new(Geometry::new(3, 1, 3.0).unwrap(), 0.5, 1.0).unwrap();
        let err = fd_divergence_oracle(&prof, &[0.9, 0.0, 0.05], 0.01).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }
}
