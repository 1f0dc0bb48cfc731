//! Principal Dirichlet eigenvalues: the analytic unit-ball constant and a
//! finite-difference solver for voxel components.
//!
//! Eigenvalues are for the generator `-1/2 Laplacian`, i.e. half the usual
//! Dirichlet eigenvalue of `-Laplacian`.

mod eig;

pub use eig::{dirichlet_eigenvalue, EigenError, EigenResult, SpectraFlag};

use crate::scaling::Dim;

/// Bessel function of the first kind `J_nu(x)` by its power series.
///
/// Adequate for locating first zeros: for the orders `nu = d/2 - 1` and
/// arguments `x <= 20` used here the series converges rapidly in f64.
fn bessel_j(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half.powf(nu) / crate::scaling::gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * (nu + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// First positive zero of `J_nu`, by scan-and-bisect.
fn bessel_first_zero(nu: f64) -> f64 {
    // The first zero lies in (nu, nu + 5] for the modest orders we need.
    let mut lo = nu.max(0.1);
    let mut hi = lo;
    let flo = bessel_j(nu, lo);
    debug_assert!(flo > 0.0, "J_nu is positive before its first zero");
    let step = 0.1;
    loop {
        hi += step;
        if bessel_j(nu, hi) <= 0.0 {
            break;
        }
        lo = hi;
        assert!(hi < nu + 40.0, "first Bessel zero not bracketed");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j(nu, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Principal Dirichlet eigenvalue of `-1/2 Laplacian` on the unit ball:
/// `j_{d/2-1,1}^2 / 2`, where `j_{nu,1}` is the first zero of `J_nu`.
pub fn unit_ball_eigenvalue(d: Dim) -> f64 {
    let nu = d.f64() / 2.0 - 1.0;
    let j = bessel_first_zero(nu);
    0.5 * j * j
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bessel_half_order_is_scaled_sine() {
        // J_{1/2}(x) = sqrt(2/(pi x)) sin x.
        for x in [0.5, 1.0, 2.0, 3.0, 4.5] {
            let want = (2.0 / (PI * x)).sqrt() * x.sin();
            let got = bessel_j(0.5, x);
            assert!((got - want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn first_zero_half_order_is_pi() {
        assert!((bessel_first_zero(0.5) - PI).abs() < 1e-10);
    }

    #[test]
    fn first_zero_three_halves() {
        // j_{3/2,1} = 4.49340945790906... (the root of tan x = x).
        let j = bessel_first_zero(1.5);
        assert!((j - 4.493_409_457_909_064).abs() < 1e-9, "{j}");
    }

    #[test]
    fn unit_ball_eigenvalue_values() {
        let d3 = Dim::new(3).unwrap();
        assert!((unit_ball_eigenvalue(d3) - PI * PI / 2.0).abs() < 1e-10);
        let d5 = Dim::new(5).unwrap();
        let j = 4.493_409_457_909_064_f64;
        assert!((unit_ball_eigenvalue(d5) - 0.5 * j * j).abs() < 1e-9);
    }

    #[test]
    fn ball_eigenvalue_scaling() {
        // lambda(phi B) = phi^{-2} lambda(B): radius 2 gives lambda_d / 4.
        // Scaling is exact, so this is bookkeeping on the constant.
        let d3 = Dim::new(3).unwrap();
        let lam = unit_ball_eigenvalue(d3);
        let radius: f64 = 2.0;
        assert!((lam / (radius * radius) - lam / 4.0).abs() < 1e-15);
    }
}
