//! Closed-form exponents and coefficient quadratics for profiles vanishing on
//! a k-plane, plus the half-plane homogeneity exponent and the degenerate
//! capacity energy.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Ambient dimension, plane dimension and integrability exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n: u32,
    pub k: u32,
    pub p: f64,
}

impl Geometry {
    /// Validates the admissible regime: `1 <= k <= n-1`, `p > n-k` for
    /// `k <= n-2`, and `p >= 2` for `k = n-1`.
    pub fn new(n: u32, k: u32, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Regime(format!("n = {n} violates n >= 2")));
        }
        if k < 1 || k > n - 1 {
            return Err(Error::Regime(format!("k = {k} violates 1 <= k <= n-1 = {}", n - 1)));
        }
        if !p.is_finite() {
            return Err(Error::Regime(format!("p = {p} is not finite")));
        }
        if k <= n - 2 {
            let floor = (n - k) as f64;
            if p <= floor {
                return Err(Error::Regime(format!(
                    "p = {p} violates p > n-k = {floor} (k <= n-2)"
                )));
            }
        } else if p < 2.0 {
            return Err(Error::Regime(format!("p = {p} violates p >= 2 (k = n-1)")));
        }
        Ok(Self { n, k, p })
    }

    pub fn beta(&self) -> f64 {
        (self.p + self.k as f64 - self.n as f64) / (self.p - 1.0)
    }

    /// Codimension of the plane.
    pub fn codim(&self) -> u32 {
        self.n - self.k
    }
}

/// The two exponent branches and their max/min.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub beta: f64,
    pub chi: f64,
    pub chi_breve: f64,
    /// First branch: (p+k-n)(k+p-2) / ((p-1)(2p-n+k-2)).
    pub branch_a: f64,
    /// Second branch: k/(p-1).
    pub branch_b: f64,
    /// Set when the two branches coincide, so the open interval
    /// (chi_breve, chi) of indefinite profiles is empty.
    pub coincident: bool,
}

/// Values of the lambda-quadratics A, B and the constant C at a given
/// (lambda, beta) pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Evaluates beta, both branches, chi = max and chi_breve = min.
pub fn compute_exponents(g: Geometry) -> Result<ExponentSet> {
    let (n, k, p) = (g.n as f64, g.k as f64, g.p);
    let beta = (p + k - n) / (p - 1.0);
    let branch_a = (p + k - n) * (k + p - 2.0) / ((p - 1.0) * (2.0 * p - n + k - 2.0));
    let branch_b = k / (p - 1.0);
    let chi = branch_a.max(branch_b);
    let chi_breve = branch_a.min(branch_b);
    debug_assert!(beta > 0.0);
    // chi < k strictly, except at the k = n-1, p = 2 boundary where the
    // branches collapse onto k itself.
    let strict = g.k <= g.n - 2 || p > 2.0;
    if (strict && chi >= k) || chi > k {
        return Err(Error::Regime(format!(
            "chi = {chi} violates chi < k = {k} for (n, k, p) = ({n}, {k}, {p})"
        )));
    }
    let scale = branch_a.abs().max(branch_b.abs()).max(1.0);
    let coincident = (branch_a - branch_b).abs() <= 1e-14 * scale;
    Ok(ExponentSet {
        beta,
        chi,
        chi_breve,
        branch_a,
        branch_b,
        coincident,
    })
}

/// The quadratics of the profile reduction evaluated at (lambda_t, beta_t):
///
/// A = (p-1) l^2 + (p-n) l - b k
/// B = (2 b (p-1) + n - k - 2) l^2 + b (p-n) l - b^2 (p-2+k)
/// C = (p-1) b - (p-n+k)
///
/// Total on all real (lambda_t, beta_t); the admissible-regime check lives in
/// `Geometry`, not here.
pub fn coefficients(g: Geometry, lambda_t: f64, beta_t: f64) -> CoefficientTriple {
    let (n, k, p) = (g.n as f64, g.k as f64, g.p);
    let l = lambda_t;
    let b = beta_t;
    CoefficientTriple {
        a: (p - 1.0) * l * l + (p - n) * l - b * k,
        b: (2.0 * b * (p - 1.0) + n - k - 2.0) * l * l + b * (p - n) * l - b * b * (p - 2.0 + k),
        c: (p - 1.0) * b - (p - n + k),
    }
}

/// Exact-rational twin of [`coefficients`]; used to check the root
/// identities with zero residual.
pub fn coefficients_rational(
    n: u32,
    k: u32,
    p: &BigRational,
    lambda_t: &BigRational,
    beta_t: &BigRational,
) -> (BigRational, BigRational, BigRational) {
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let (nn, kk) = (int(n as i64), int(k as i64));
    let one = BigRational::one();
    let two = int(2);
    let a = (p - &one) * lambda_t * lambda_t + (p - &nn) * lambda_t - beta_t * &kk;
    let b = ((&two * beta_t) * (p - &one) + &nn - &kk - &two) * lambda_t * lambda_t
        + beta_t * (p - &nn) * lambda_t
        - beta_t * beta_t * (p - &two + &kk);
    let c = (p - &one) * beta_t - (p - &nn + &kk);
    (a, b, c)
}

/// Exact-rational beta = (p+k-n)/(p-1).
pub fn beta_rational(n: u32, k: u32, p: &BigRational) -> BigRational {
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    (p + int(k as i64) - int(n as i64)) / (p - BigRational::one())
}

/// Exact-rational roots of A: (-beta, k/(p-1)), valid at beta_t = beta.
pub fn a_roots_rational(n: u32, k: u32, p: &BigRational) -> (BigRational, BigRational) {
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    (
        -beta_rational(n, k, p),
        int(k as i64) / (p - BigRational::one()),
    )
}

/// Exact-rational roots of B: (-beta, beta (p-2+k)/(2p-n+k-2)), valid at
/// beta_t = beta.
pub fn b_roots_rational(n: u32, k: u32, p: &BigRational) -> (BigRational, BigRational) {
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let beta = beta_rational(n, k, p);
    let two = int(2);
    let second = &beta * (p - &two + int(k as i64))
        / (&two * p - int(n as i64) + int(k as i64) - &two);
    (-beta, second)
}

pub fn rational_is_zero(v: &BigRational) -> bool {
    v.is_zero()
}

/// Positive homogeneity exponent of the half-plane Martin function:
/// sigma = -(1/3)(p - 3 - 2 sqrt(p^2 - 3p + 3)) / (p - 1).
pub fn martin_exponent_halfplane(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Regime(format!("p = {p} violates p > 1")));
    }
    let disc = (p * p - 3.0 * p + 3.0).sqrt();
    Ok(-(p - 3.0 - 2.0 * disc) / (3.0 * (p - 1.0)))
}

/// Energy of the logarithmic cutoff max(1 + log|x''|/log(1/r), 0) over the
/// unit ball around a plane point:
///
///   (log(1/r))^{-p} * Int_r^1 rho^{n-k-p-1} d rho
///
/// which reduces to (log(1/r))^{1-p} at the degenerate balance p = n-k.
/// Natural logarithms throughout. Accepts any p > 1 so that the degenerate
/// regime p <= n-k can be probed.
pub fn capacity_energy(n: u32, k: u32, p: f64, r: f64) -> Result<f64> {
    if n < 2 || k < 1 || k > n - 1 {
        return Err(Error::Regime(format!("(n, k) = ({n}, {k}) violates 1 <= k <= n-1")));
    }
    if !(p > 1.0) {
        return Err(Error::Regime(format!("p = {p} violates p > 1")));
    }
    if !(r > 0.0 && r < 0.1) {
        return Err(Error::Domain(format!("r = {r} outside (0, 1/10)")));
    }
    let log = (1.0 / r).ln();
    let e = (n - k) as f64 - p; // exponent n-k-p of the radial integrand plus one
    let radial = if e.abs() < 1e-14 {
        log
    } else {
        (1.0 - r.powf(e)) / e
    };
    Ok(log.powf(-p) * radial)
}
