//! Norms and the scale-resolved Morrey-Campanato density.
//!
//! Lebesgue norms come from the node quadrature. The homogeneous Sobolev
//! norms use the sine expansion of w = r*u together with the identity
//! int |grad u|^2 dx = 4*pi int |w'|^2 dr, which holds for Dirichlet data;
//! a finite-difference route for the H^1 seminorm cross-checks the
//! spectral one at second order.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::spectral::{sine_coefficients, weighted_mode_sum, SineTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    L3,
    L4,
    H1dot,
    HhalfDot,
}

/// Holder constant for the ball bound (1/R) int_{|x|<=R} |u|^2 <= C |u|_{L3}^2.
pub const GN_BALL_CONSTANT: f64 = 1.6119919540164696; // (4 pi / 3)^{1/3}
/// Holder constant for the dyadic-shell bound rho(u, R) <= C |u|_{L3}^2.
pub const GN_SHELL_CONSTANT: f64 = 3.0836296752162995; // (28 pi / 3)^{1/3}

pub fn gn_ball_constant() -> f64 {
    (4.0 * std::f64::consts::PI / 3.0).cbrt()
}

pub fn gn_shell_constant() -> f64 {
    (28.0 * std::f64::consts::PI / 3.0).cbrt()
}

pub fn norm(u: &RadialField, kind: NormKind, st: &SineTransform) -> Result<f64> {
    let grid = u.grid();
    match kind {
        NormKind::L2 => Ok(u.mass()?.sqrt()),
        NormKind::L3 => {
            let f: Vec<f64> = u.values().iter().map(|v| v.norm().powi(3)).collect();
            Ok(grid.integrate(&f)?.cbrt())
        }
        NormKind::L4 => {
            let f: Vec<f64> = u.values().iter().map(|v| v.norm_sqr().powi(2)).collect();
            Ok(grid.integrate(&f)?.powf(0.25))
        }
        NormKind::H1dot => {
            let coeffs = sine_coefficients(st, u)?;
            Ok(weighted_mode_sum(grid, &coeffs, |k| k * k).sqrt())
        }
        NormKind::HhalfDot => {
            let coeffs = sine_coefficients(st, u)?;
            Ok(weighted_mode_sum(grid, &coeffs, |k| k).sqrt())
        }
    }
}

/// Squared H^1dot seminorm by centered differences on w = r*u with the
/// Dirichlet endpoints w(0) = w(r_max) = 0. Second-order route used only
/// to cross-check the spectral one.
pub fn h1dot_sq_fd(u: &RadialField) -> Result<f64> {
    let grid = u.grid();
    let n = grid.n();
    let dr = grid.dr();
    let w: Vec<Complex64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * grid.r(i))
        .collect();
    let wat = |j: isize| -> Complex64 {
        if j <= 0 || j as usize > n {
            Complex64::new(0.0, 0.0)
        } else {
            w[j as usize - 1]
        }
    };
    // |grad u|^2 r^2 = |w' - w/r|^2 ; integrate over (0, r_max) in 1-D.
    let mut acc = 0.0;
    for i in 0..n {
        let j = i as isize + 1;
        let wp = (wat(j + 1) - wat(j - 1)) / (2.0 * dr);
        let r = grid.r(i);
        acc += (wp - w[i] / r).norm_sqr();
    }
    // One-sided end segment at r_max where w' need not vanish.
    let wp_end = -w[n - 1] / dr;
    acc += 0.5 * wp_end.norm_sqr();
    Ok(4.0 * std::f64::consts::PI * acc * dr)
}

/// Morrey-Campanato density at scale R:
///   rho(u, R) = max over dyadic R' in {R, 2R, 4R, ...} with 2R' <= r_max
///   of (1/R') int_{R' <= |x| <= 2R'} |u|^2 dx.
/// Monotone non-increasing under R -> 2R because the dyadic ladder of 2R
/// is a subset of the ladder of R.
pub fn rho_norm(u: &RadialField, r_scale: f64) -> Result<f64> {
    let grid = u.grid();
    if !(r_scale.is_finite() && r_scale > 0.0 && r_scale <= grid.r_max() / 2.0) {
        return Err(Error::DomainTruncation(format!(
            "rho scale R = {r_scale} outside (0, r_max/2] with r_max = {}",
            grid.r_max()
        )));
    }
    let rho = u.density();
    let mut best = 0.0f64;
    let mut rp = r_scale;
    while rp <= grid.r_max() / 2.0 {
        let shell = grid.integrate_shell(&rho, rp, 2.0 * rp)?;
        best = best.max(shell / rp);
        rp *= 2.0;
    }
    Ok(best)
}

/// (1/R) int_{|x| <= R} |u|^2 dx, the ball-normalized local mass used in
/// the radial Gagliardo-Nirenberg check.
pub fn ball_mass_over_r(u: &RadialField, r_ball: f64) -> Result<f64> {
    let grid = u.grid();
    if !(r_ball.is_finite() && r_ball > 0.0 && r_ball <= grid.r_max()) {
        return Err(Error::DomainTruncation(format!(
            "ball radius {r_ball} outside (0, r_max]"
        )));
    }
    Ok(grid.integrate_shell(&u.density(), 0.0, r_ball)? / r_ball)
}

/// int |x|^2 |u|^2 dx, the exact moment of inertia (no cutoff).
pub fn second_moment(u: &RadialField) -> Result<f64> {
    let grid = u.grid();
    let f: Vec<f64> = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let r = grid.r(i);
            r * r * v.norm_sqr()
        })
        .collect();
    grid.integrate(&f)
}
