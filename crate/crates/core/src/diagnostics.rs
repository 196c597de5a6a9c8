//! Functionals observed along runs: conserved quantities, the localized
//! virial machinery, weighted local masses, annuli repartition, scale
//! extrapolation, and blow-up rate fits.
//!
//! Conventions. With the pair interaction W = V * |u|^2:
//!
//!   mass   M = int |u|^2,
//!   energy E = 1/2 int |grad u|^2 - 1/4 int (V*|u|^2)|u|^2,
//!   momentum = Im int conj(u) grad u = 0 identically for radial fields
//!              (reported as the exact 0, not a measured small number).
//!
//! The second moment y(t) = int |x|^2 |u|^2 obeys
//!
//!   y'' = 8 int |grad u|^2 + 2 II (x-y).grad V(x-y) |u(x)|^2 |u(y)|^2
//!       = 16 K_V,       K_V = 1/2 int |grad u|^2 + 1/8 (double integral),
//!
//! and kernels with r V' <= -alpha V, alpha >= 2, V >= 0 give K_V <= E, so
//! negative energy forces y to hit zero by the positive root of
//! y_0 + y'(0) t + 8 E t^2 (finite-time blow-up). The localized versions
//! V_a, P_a use the cutoff psi_R, which equals |x|^2/2 out to 2R.

use std::io::Write as _;
use std::path::Path;

use crate::convolution::NonlinearCtx;
use crate::error::{Error, Result};
use crate::evolution::ScaleSample;
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::norms::{norm, NormKind};
use crate::spectral::{radial_derivative, sine_coefficients, weighted_mode_sum, SineTransform};

/// Reference blow-up rate exponents from the analysis this laboratory
/// exercises; recorded as metadata next to fitted exponents, never used
/// as pass/fail targets (they are asymptotic statements).
pub const RATE_EXPONENT_STRONG: f64 = 2.0 / 31.0;
pub const RATE_EXPONENT_WEAK: f64 = 1.0 / 14.0;
pub const RATE_EXPONENT_LOCAL: f64 = 1.0 / 12.0;

/// Window exponents for renormalized-trajectory tracking: the density
/// diagnostic is read at R = M^{alpha_1} sqrt(tau) and the annuli ladder
/// spans M^{alpha_2} scales.
pub const REGIME_ALPHA_1: f64 = 1.0;
pub const REGIME_ALPHA_2: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
pub struct ConservedSet {
    pub mass: f64,
    pub energy: f64,
    pub h1dot_sq: f64,
    /// int (V*|u|^2)|u|^2 (or the local c int |u|^4).
    pub quartic: f64,
    /// Identically zero for radial fields; kept so records state it.
    pub momentum: f64,
}

pub fn conserved(u: &RadialField, st: &SineTransform, ctx: &NonlinearCtx) -> Result<ConservedSet> {
    let mass = u.mass()?;
    let coeffs = sine_coefficients(st, u)?;
    let h1dot_sq = weighted_mode_sum(u.grid(), &coeffs, |k| k * k);
    let quartic = ctx.interaction_integral(st, &u.density())?;
    Ok(ConservedSet {
        mass,
        energy: 0.5 * h1dot_sq - 0.25 * quartic,
        h1dot_sq,
        quartic,
        momentum: 0.0,
    })
}

/// Quintic bridge for the cutoff on 2 <= x <= 3, matching x^2/2 (value 2,
/// slope 2, curvature 1) at x = 2 and vanishing to second order at x = 3.
fn psi_base(x: f64) -> f64 {
    if x <= 2.0 {
        0.5 * x * x
    } else if x >= 3.0 {
        0.0
    } else {
        let t = x - 2.0;
        2.0 + t * (2.0 + t * (0.5 + t * (-33.5 + t * (47.5 - 18.5 * t))))
    }
}

fn psi_base_prime(x: f64) -> f64 {
    if x <= 2.0 {
        x
    } else if x >= 3.0 {
        0.0
    } else {
        let t = x - 2.0;
        2.0 + t * (1.0 + t * (-100.5 + t * (190.0 - 92.5 * t)))
    }
}

fn psi_base_second(x: f64) -> f64 {
    if x <= 2.0 {
        1.0
    } else if x >= 3.0 {
        0.0
    } else {
        let t = x - 2.0;
        1.0 + t * (-201.0 + t * (570.0 - 370.0 * t))
    }
}

/// The radial cutoff psi_R(r) = R^2 psi(r/R) sampled on the grid, with its
/// radial derivative and Laplacian. psi_R = r^2/2 exactly for r <= 2R and
/// 0 for r >= 3R; Lap psi_R = 3 on the core region.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    pub radius: f64,
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
    pub psi_lap: Vec<f64>,
}

pub fn cutoff_psi(grid: &RadialGrid, radius: f64) -> Result<CutoffProfile> {
    if !(radius.is_finite() && radius > 0.0 && 3.0 * radius < grid.r_max()) {
        return Err(Error::DomainTruncation(format!(
            "cutoff radius {radius} needs 0 < 3R < r_max = {}",
            grid.r_max()
        )));
    }
    let mut psi = Vec::with_capacity(grid.n());
    let mut psi_prime = Vec::with_capacity(grid.n());
    let mut psi_lap = Vec::with_capacity(grid.n());
    for r in grid.radii() {
        let x = r / radius;
        psi.push(radius * radius * psi_base(x));
        psi_prime.push(radius * psi_base_prime(x));
        // Lap psi_R(r) = psi''(x) + (2/x) psi'(x), independent of R.
        psi_lap.push(psi_base_second(x) + 2.0 * psi_base_prime(x) / x);
    }
    Ok(CutoffProfile {
        radius,
        psi,
        psi_prime,
        psi_lap,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct VirialSet {
    /// int psi_R |u|^2.
    pub v_a: f64,
    /// 2 Im int psi_R' (du/dr) conj(u).
    pub p_a: f64,
    /// 8 int |grad u|^2 + 2 (pair double integral): the second time
    /// derivative of the bare moment int |x|^2 |u|^2 (which is 2 v_a where
    /// the cutoff is quadratic).
    pub rhs_full: f64,
    /// 1/2 int |grad u|^2 + 1/8 (pair double integral); rhs_full = 16 K_V.
    pub k_v: f64,
    pub h1dot_sq: f64,
    /// The pair term II (x-y).grad V(x-y) |u(x)|^2 |u(y)|^2.
    pub pair_d: f64,
}

pub fn virial(
    u: &RadialField,
    st: &SineTransform,
    ctx: &NonlinearCtx,
    radius: f64,
) -> Result<VirialSet> {
    let grid = u.grid();
    let cut = cutoff_psi(grid, radius)?;
    let rho = u.density();
    let weighted: Vec<f64> = rho.iter().zip(&cut.psi).map(|(a, b)| a * b).collect();
    let v_a = grid.integrate(&weighted)?;

    let du = radial_derivative(st, u)?;
    let p_samples: Vec<f64> = du
        .iter()
        .zip(u.values())
        .zip(&cut.psi_prime)
        .map(|((d, v), &pp)| pp * (d * v.conj()).im)
        .collect();
    let p_a = 2.0 * grid.integrate(&p_samples)?;

    let coeffs = sine_coefficients(st, u)?;
    let h1dot_sq = weighted_mode_sum(grid, &coeffs, |k| k * k);
    let pair_d = ctx.virial_pair(st, &rho)?;
    Ok(VirialSet {
        v_a,
        p_a,
        rhs_full: 8.0 * h1dot_sq + 2.0 * pair_d,
        k_v: 0.5 * h1dot_sq + 0.125 * pair_d,
        h1dot_sq,
        pair_d,
    })
}

/// Im int psi_R' (du/dr) conj(u); equals P_a / 2.
pub fn momentum_virial(u: &RadialField, st: &SineTransform, radius: f64) -> Result<f64> {
    let grid = u.grid();
    let cut = cutoff_psi(grid, radius)?;
    let du = radial_derivative(st, u)?;
    let samples: Vec<f64> = du
        .iter()
        .zip(u.values())
        .zip(&cut.psi_prime)
        .map(|((d, v), &pp)| pp * (d * v.conj()).im)
        .collect();
    grid.integrate(&samples)
}

/// Weighted local mass (1/lambda) int_{|x| <= D lambda} |u|^2.
pub fn local_mass(u: &RadialField, d: f64, lambda: f64) -> Result<f64> {
    let grid = u.grid();
    if !(d > 0.0 && lambda > 0.0 && d.is_finite() && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "local mass needs positive finite D and lambda, got {d}, {lambda}"
        )));
    }
    let r_out = d * lambda;
    if r_out >= grid.r_max() {
        return Err(Error::DomainTruncation(format!(
            "local-mass ball D*lambda = {r_out} reaches past r_max = {}",
            grid.r_max()
        )));
    }
    Ok(grid.integrate_shell(&u.density(), 0.0, r_out)? / lambda)
}

#[derive(Debug, Clone)]
pub struct AnnuliReport {
    /// (1/lambda_i) int over {lambda_i/M <= |x| <= lambda_i M} of |u|^2.
    pub masses: Vec<f64>,
    /// Adjacent-pair disjointness lambda_{i+1}/M >= lambda_i * M.
    pub disjoint: Vec<bool>,
}

pub fn annuli_masses(u: &RadialField, scales: &[f64], m: f64) -> Result<AnnuliReport> {
    let grid = u.grid();
    if !(m.is_finite() && m > 1.0) {
        return Err(Error::InvalidConfig(format!(
            "annuli aspect M must be finite and > 1, got {m}"
        )));
    }
    for pair in scales.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidConfig(
                "annuli scales must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&first) = scales.first() {
        if !(first > 0.0) {
            return Err(Error::InvalidConfig("annuli scales must be positive".into()));
        }
    }
    if let Some(&last) = scales.last() {
        if last * m >= grid.r_max() {
            return Err(Error::DomainTruncation(format!(
                "outermost annulus edge {} reaches past r_max = {}",
                last * m,
                grid.r_max()
            )));
        }
    }
    let rho = u.density();
    let mut masses = Vec::with_capacity(scales.len());
    for &s in scales {
        masses.push(grid.integrate_shell(&rho, s / m, s * m)? / s);
    }
    let disjoint = scales
        .windows(2)
        .map(|p| p[1] / m >= p[0] * m)
        .collect();
    Ok(AnnuliReport { masses, disjoint })
}

/// Centered 5-point second derivative, exact through quartics.
pub fn second_derivative_5pt(y: &[f64; 5], h: f64) -> f64 {
    (-y[0] + 16.0 * y[1] - 30.0 * y[2] + 16.0 * y[3] - y[4]) / (12.0 * h * h)
}

/// Extrapolated blow-up time from the scale history: lambda = 1/|grad u|^2
/// has lambda^2 asymptotically linear in t, so fit lambda^2 = a + b t over
/// the last decade of healthy lambda values and return the root, clamped
/// to not precede the last healthy sample.
pub fn estimate_blowup_time(samples: &[ScaleSample]) -> Result<f64> {
    let healthy: Vec<&ScaleSample> = samples
        .iter()
        .filter(|s| s.healthy && s.h1dot_sq.is_finite() && s.h1dot_sq > 0.0)
        .collect();
    if healthy.len() < 3 {
        return Err(Error::FitRefused(format!(
            "blow-up time fit needs at least 3 healthy scale samples, have {}",
            healthy.len()
        )));
    }
    let lam_sq = |s: &ScaleSample| {
        let lam = 1.0 / s.h1dot_sq;
        lam * lam
    };
    let s_last = lam_sq(healthy[healthy.len() - 1]);
    // Last decade of lambda: lambda <= 10 lambda_last, i.e. lambda^2 <= 100 s_last.
    let window: Vec<(f64, f64)> = healthy
        .iter()
        .filter(|s| lam_sq(s) <= 100.0 * s_last)
        .map(|s| (s.t, lam_sq(s)))
        .collect();
    if window.len() < 3 {
        return Err(Error::FitRefused(
            "fewer than 3 samples in the final scale decade".into(),
        ));
    }
    let n = window.len() as f64;
    let sx: f64 = window.iter().map(|p| p.0).sum();
    let sy: f64 = window.iter().map(|p| p.1).sum();
    let sxx: f64 = window.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = window.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det == 0.0 {
        return Err(Error::FitRefused("degenerate time axis in scale fit".into()));
    }
    let b = (n * sxy - sx * sy) / det;
    let a = (sy * sxx - sx * sxy) / det;
    if !(b < 0.0) {
        return Err(Error::FitRefused(format!(
            "scale not contracting (slope {b:e}); no blow-up time to extrapolate"
        )));
    }
    let t_last = window.last().map(|p| p.0).unwrap_or(0.0);
    Ok((-a / b).max(t_last))
}

/// Positive root of y_0 + y'(0) t + 8 E t^2: the time by which the second
/// moment must vanish when E < 0 (y'' <= 16 E along the flow).
pub fn concavity_blowup_bound(y0: f64, yp0: f64, energy: f64) -> Result<f64> {
    if !(y0 > 0.0 && y0.is_finite() && yp0.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "concavity bound needs a positive second moment, got y0 = {y0}"
        )));
    }
    if !(energy < 0.0) {
        return Err(Error::FitRefused(format!(
            "concavity bound requires negative energy, got {energy}"
        )));
    }
    let disc = yp0 * yp0 - 32.0 * energy * y0;
    Ok((yp0 + disc.sqrt()) / (16.0 * (-energy)))
}

#[derive(Debug, Clone, Copy)]
pub struct RateSample {
    pub t: f64,
    /// ||u(t)||_{L^3}.
    pub l3: f64,
    /// ||u(t)||_{H^1dot} (the norm, not its square).
    pub h1dot: f64,
}

#[derive(Debug, Clone)]
pub struct RateFit {
    pub t_est: f64,
    /// Slope of log ||u||_{L^3} against log log (1/(T_est - t)).
    pub gamma_hat: f64,
    pub gamma_residual: f64,
    /// Median of ||u||_{H^1dot} (T_est - t)^{1/4} over the window.
    pub c_quarter: f64,
    pub c_quarter_min: f64,
    pub c_quarter_max: f64,
    pub n_samples: usize,
}

/// Fit the blow-up observables against the estimated time. Uses only
/// samples with 0 < T_est - t < 0.5 so the double logarithm is defined
/// and the window is genuinely asymptotic; refuses with fewer than 8.
pub fn rate_fit(samples: &[RateSample], t_est: f64) -> Result<RateFit> {
    if !(t_est.is_finite() && t_est > 0.0) {
        return Err(Error::FitRefused(format!(
            "rate fit needs a finite positive blow-up estimate, got {t_est}"
        )));
    }
    let window: Vec<&RateSample> = samples
        .iter()
        .filter(|s| {
            let gap = t_est - s.t;
            gap > 0.0 && gap < 0.5 && s.l3 > 0.0 && s.h1dot > 0.0 && s.l3.is_finite() && s.h1dot.is_finite()
        })
        .collect();
    if window.len() < 8 {
        return Err(Error::FitRefused(format!(
            "rate fit needs at least 8 samples inside the window, have {}",
            window.len()
        )));
    }
    // gamma: least squares of ln L3 vs ln ln(1/gap).
    let pts: Vec<(f64, f64)> = window
        .iter()
        .map(|s| {
            let gap = t_est - s.t;
            ((1.0 / gap).ln().ln(), s.l3.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx.max(1.0) {
        return Err(Error::FitRefused(
            "degenerate abscissa in the rate window (samples too clustered)".into(),
        ));
    }
    let gamma_hat = (n * sxy - sx * sy) / det;
    let intercept = (sy - gamma_hat * sx) / n;
    let residual = (pts
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + gamma_hat * p.0);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();

    let mut cq: Vec<f64> = window
        .iter()
        .map(|s| s.h1dot * (t_est - s.t).powf(0.25))
        .collect();
    cq.sort_by(|a, b| a.partial_cmp(b).expect("finite by window filter"));
    let c_quarter = if cq.len() % 2 == 1 {
        cq[cq.len() / 2]
    } else {
        0.5 * (cq[cq.len() / 2 - 1] + cq[cq.len() / 2])
    };
    Ok(RateFit {
        t_est,
        gamma_hat,
        gamma_residual: residual,
        c_quarter,
        c_quarter_min: cq[0],
        c_quarter_max: cq[cq.len() - 1],
        n_samples: cq.len(),
    })
}

/// Squared sharp constant of ||v||_{L^6} <= S ||grad v||_{L^2} on R^3.
pub fn sharp_l6_constant_sq() -> f64 {
    1.0 / (3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0))
}

/// Coercivity threshold c_V = sqrt(2 / (S^2 ||V||_1)): by Young and the
/// sharp L^6 Sobolev bound,
///   int (V*rho) rho <= ||V||_1 ||u||_{L^3}^2 S^2 ||grad u||^2,
/// so E >= 1/2 (1 - (||u||_{L^3}/c_V)^2) ||grad u||^2 holds for every
/// field; the inequality is exact for this constant, not a heuristic.
pub fn coercivity_constant(l1_norm: f64) -> Result<f64> {
    if !(l1_norm.is_finite() && l1_norm > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "coercivity constant needs a positive kernel mass, got {l1_norm}"
        )));
    }
    Ok((2.0 / (sharp_l6_constant_sq() * l1_norm)).sqrt())
}

/// Hypothesis booleans locating a run relative to the analyzed regime.
#[derive(Debug, Clone, Copy)]
pub struct RegimeReport {
    /// M_0 = 4 ||v_0||_{L^3} / c_V.
    pub m0: f64,
    pub m0_large: bool,
    /// tau_*^{1/2} max(E, 0) < 1.
    pub tau_energy_small: bool,
    /// e^{N/2} max(E, 0) < 1 with N = -ln lambda_min.
    pub depth_energy_small: bool,
    pub depth_n: f64,
}

pub fn regime_report(
    l3_initial: f64,
    c_v: f64,
    energy: f64,
    tau_star: f64,
    lambda_min: f64,
) -> RegimeReport {
    let m0 = 4.0 * l3_initial / c_v;
    let e_plus = energy.max(0.0);
    let depth_n = -lambda_min.ln();
    RegimeReport {
        m0,
        m0_large: m0 >= 2.0,
        tau_energy_small: tau_star.max(0.0).sqrt() * e_plus < 1.0,
        depth_energy_small: (depth_n / 2.0).exp() * e_plus < 1.0,
        depth_n,
    }
}

/// One CSV row of the run record. Numbers print with Rust's shortest
/// round-trip formatting, so a re-parse restores bits exactly.
#[derive(Debug, Clone)]
pub struct DiagRow {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1: f64,
    pub l3: f64,
    pub lambda: f64,
    pub rho_at_sqrt_t: f64,
    pub va: f64,
    pub pa: f64,
    pub kv: f64,
    pub local_mass: f64,
    pub status: &'static str,
}

pub const CSV_HEADER: &str = "t,dt,mass,energy,H1,L3,lambda,rho_at_sqrt_t,Va,Pa,KV,local_mass,status";

impl DiagRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.dt,
            self.mass,
            self.energy,
            self.h1,
            self.l3,
            self.lambda,
            self.rho_at_sqrt_t,
            self.va,
            self.pa,
            self.kv,
            self.local_mass,
            self.status
        )
    }
}

pub fn write_csv(path: &Path, rows: &[DiagRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv_line())?;
    }
    out.flush()?;
    Ok(())
}

/// Norm bundle for one sampled field, shared by the CSV writer and fits.
pub fn norm_bundle(u: &RadialField, st: &SineTransform) -> Result<(f64, f64)> {
    let l3 = norm(u, NormKind::L3, st)?;
    let h1 = norm(u, NormKind::H1dot, st)?;
    Ok((l3, h1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::NonlinearMode;
    use crate::norms::rho_norm;
    use crate::potential::Potential;
    use crate::testkit;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn nls_ctx(grid: RadialGrid) -> NonlinearCtx {
        NonlinearCtx::new(&NonlinearMode::CubicNls, grid).unwrap()
    }

    #[test]
    fn conserved_zero_field_is_all_zero() {
        let grid = RadialGrid::new(64, 6.0).unwrap();
        let st = SineTransform::new(grid.n());
        let ctx = nls_ctx(grid);
        let c = conserved(&RadialField::zero(grid), &st, &ctx).unwrap();
        assert_eq!(c.mass, 0.0);
        assert_eq!(c.energy, 0.0);
        assert_eq!(c.momentum, 0.0);
    }

    #[test]
    fn conserved_gaussian_matches_closed_forms() {
        let grid = RadialGrid::new(512, 10.0).unwrap();
        let st = SineTransform::new(grid.n());
        let ctx = nls_ctx(grid);
        let u = RadialField::gaussian(grid, 1.0, 1.0).unwrap();
        let c = conserved(&u, &st, &ctx).unwrap();
        let h1_exact = (3.0 * 2.0f64.sqrt() / 4.0) * PI.powf(1.5);
        let quartic_exact = (PI / 4.0).powf(1.5);
        assert!(
            (c.h1dot_sq - h1_exact).abs() < 1e-9 * h1_exact,
            "kinetic term {} vs {h1_exact}",
            c.h1dot_sq
        );
        assert!(
            (c.quartic - quartic_exact).abs() < 1e-9 * quartic_exact,
            "quartic term {} vs {quartic_exact}",
            c.quartic
        );
        let e_exact = 0.5 * h1_exact - 0.25 * quartic_exact;
        assert!((c.energy - e_exact).abs() < 1e-9 * e_exact.abs());
        assert_eq!(c.momentum, 0.0, "radial momentum is structurally zero");
    }

    #[test]
    fn cutoff_matches_parabola_then_vanishes() {
        let grid = RadialGrid::new(512, 12.0).unwrap();
        let cut = cutoff_psi(&grid, 2.5).unwrap();
        for (i, &r) in grid.radii().iter().enumerate() {
            if r <= 2.0 * cut.radius {
                assert!(
                    (cut.psi[i] - 0.5 * r * r).abs() < 1e-12 * (1.0 + r * r),
                    "psi not r^2/2 at r = {r}"
                );
                assert!((cut.psi_prime[i] - r).abs() < 1e-12 * (1.0 + r));
                assert!((cut.psi_lap[i] - 3.0).abs() < 1e-12);
            }
            if r >= 3.0 * cut.radius {
                assert_eq!(cut.psi[i], 0.0, "psi must vanish at r = {r}");
                assert_eq!(cut.psi_prime[i], 0.0);
            }
        }
        assert!(matches!(
            cutoff_psi(&grid, 5.0),
            Err(Error::DomainTruncation(_))
        ));
    }

    #[test]
    fn cutoff_laplacian_integrates_like_constant_three() {
        // For rho supported inside 2R, int Lap(psi_R) rho = 3 int rho.
        let grid = RadialGrid::new(512, 12.0).unwrap();
        let cut = cutoff_psi(&grid, 3.0).unwrap();
        let rho: Vec<f64> = grid
            .radii()
            .iter()
            .map(|&r| (-r * r).exp())
            .collect();
        let weighted: Vec<f64> = rho.iter().zip(&cut.psi_lap).map(|(a, b)| a * b).collect();
        let lhs = grid.integrate(&weighted).unwrap();
        let rhs = 3.0 * grid.integrate(&rho).unwrap();
        assert!(
            ((lhs - rhs) / rhs).abs() < 1e-12,
            "Laplacian identity broken: {lhs} vs {rhs}"
        );
    }

    #[test]
    fn virial_algebraic_identity_is_tight() {
        let grid = RadialGrid::new(256, 10.0).unwrap();
        let st = SineTransform::new(grid.n());
        let pot = Potential::log_core(2.0, 0.01).unwrap();
        let ctx = NonlinearCtx::new(&NonlinearMode::Hartree(pot), grid).unwrap();
        let u = testkit::random_complex_field(grid, &mut testkit::seeded_rng(3));
        let v = virial(&u, &st, &ctx, 2.0).unwrap();
        assert!(
            ((v.rhs_full - 16.0 * v.k_v) / v.rhs_full).abs() < 1e-15,
            "rhs_full = {} but 16 K_V = {}",
            v.rhs_full,
            16.0 * v.k_v
        );
    }

    #[test]
    fn real_fields_have_zero_p_a() {
        let grid = RadialGrid::new(256, 10.0).unwrap();
        let st = SineTransform::new(grid.n());
        let ctx = nls_ctx(grid);
        let u = RadialField::gaussian(grid, 1.0, 1.3).unwrap();
        let v = virial(&u, &st, &ctx, 2.0).unwrap();
        assert!(
            v.p_a.abs() < 1e-12 * v.h1dot_sq.max(1.0),
            "real data produced P_a = {}",
            v.p_a
        );
    }

    #[test]
    fn momentum_virial_is_half_p_a_and_nonzero_for_chirped_data() {
        let grid = RadialGrid::new(256, 10.0).unwrap();
        let st = SineTransform::new(grid.n());
        let ctx = nls_ctx(grid);
        let u = RadialField::from_fn(grid, |r| {
            Complex64::from_polar((-r * r / 1.5).exp(), r)
        })
        .unwrap();
        let v = virial(&u, &st, &ctx, 2.0).unwrap();
        let mv = momentum_virial(&u, &st, 2.0).unwrap();
        assert!(mv.abs() > 1e-3, "chirped data should carry momentum flux");
        assert!(
            (mv - 0.5 * v.p_a).abs() < 1e-12 * mv.abs(),
            "momentum_virial {mv} is not half of P_a = {}",
            v.p_a
        );
    }

    #[test]
    fn k_v_below_energy_for_admissible_kernels() {
        // rV' <= -alpha V with alpha > 2 and V >= 0 make K_V <= E^V.
        let grid = RadialGrid::new(256, 8.0).unwrap();
        let st = SineTransform::new(grid.n());
        let pot = Potential::log_core(2.0, 0.01).unwrap();
        let ctx = NonlinearCtx::new(&NonlinearMode::Hartree(pot), grid).unwrap();
        for seed in 0..20 {
            let u = testkit::random_smooth_field(grid, &mut testkit::seeded_rng(seed));
            let c = conserved(&u, &st, &ctx).unwrap();
            let v = virial(&u, &st, &ctx, 2.0).unwrap();
            let slack = 1e-9 * c.h1dot_sq.max(1.0);
            assert!(
                v.k_v <= c.energy + slack,
                "seed {seed}: K_V = {} above E = {}",
                v.k_v,
                c.energy
            );
        }
    }

    #[test]
    fn energy_coercivity_holds_with_the_derived_constant() {
        let grid = RadialGrid::new(256, 8.0).unwrap();
        let st = SineTransform::new(grid.n());
        let pot = Potential::log_core(2.0, 0.01).unwrap().normalized_l1().unwrap();
        let l1 = pot.l1_norm().unwrap();
        let c_v = coercivity_constant(l1).unwrap();
        let ctx = NonlinearCtx::new(&NonlinearMode::Hartree(pot), grid).unwrap();
        for seed in 20..40 {
            let u = testkit::random_smooth_field(grid, &mut testkit::seeded_rng(seed));
            let c = conserved(&u, &st, &ctx).unwrap();
            let l3 = norm(&u, NormKind::L3, &st).unwrap();
            let bound = 0.5 * (1.0 - (l3 / c_v) * (l3 / c_v)) * c.h1dot_sq;
            assert!(
                c.energy >= bound - 1e-9 * c.h1dot_sq.max(1.0),
                "seed {seed}: E = {} below coercivity bound {bound}",
                c.energy
            );
        }
    }

    #[test]
    fn local_mass_monotone_in_d_with_full_mass_limit() {
        let grid = RadialGrid::new(256, 10.0).unwrap();
        let u = RadialField::gaussian(grid, 1.0, 1.0).unwrap();
        let lambda = 0.8;
        let mut prev = 0.0;
        for d in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let lm = local_mass(&u, d, lambda).unwrap();
            assert!(lm >= prev, "local mass decreased at D = {d}");
            prev = lm;
        }
        let full = u.mass().unwrap() / lambda;
        assert!(
            (prev - full).abs() < 1e-12 * full,
            "wide-ball local mass {prev} vs mass/lambda {full}"
        );
        assert!(matches!(
            local_mass(&u, 20.0, 1.0),
            Err(Error::DomainTruncation(_))
        ));
    }

    #[test]
    fn annuli_disjointness_and_mass_accounting() {
        let grid = RadialGrid::new(256, 10.0).unwrap();
        let u = RadialField::gaussian(grid, 1.0, 1.5).unwrap();
        let m = 1.5;
        let mut scales = vec![0.3];
        while scales.last().unwrap() * m * m * 1.01 * m < grid.r_max() {
            let next = scales.last().unwrap() * m * m * 1.01;
            scales.push(next);
        }
        let rep = annuli_masses(&u, &scales, m).unwrap();
        assert!(rep.disjoint.iter().all(|&d| d), "constructed ladder must be disjoint");
        let raw_sum: f64 = rep
            .masses
            .iter()
            .zip(&scales)
            .map(|(mass, s)| mass * s)
            .sum();
        let total = u.mass().unwrap();
        assert!(
            raw_sum <= total * (1.0 + 1e-12),
            "disjoint annuli hold {raw_sum}, more than the total {total}"
        );
        assert!(matches!(
            annuli_masses(&u, &[0.5, 0.4], m),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn five_point_stencil_differentiates_quartics_exactly() {
        let h = 0.1;
        let f = |t: f64| 2.0 + t - 3.0 * t * t + 0.5 * t * t * t + 0.25 * t * t * t * t;
        let fpp = |t: f64| -6.0 + 3.0 * t + 3.0 * t * t;
        let t0 = 0.7;
        let ys = [
            f(t0 - 2.0 * h),
            f(t0 - h),
            f(t0),
            f(t0 + h),
            f(t0 + 2.0 * h),
        ];
        let got = second_derivative_5pt(&ys, h);
        assert!(
            (got - fpp(t0)).abs() < 1e-10,
            "stencil {got} vs exact {}",
            fpp(t0)
        );
    }

    #[test]
    fn blowup_time_recovered_exactly_from_linear_scale_law() {
        // lambda = sqrt(T - t) means h1dot_sq = (T - t)^{-1/2}.
        let t_true = 1.25;
        let samples: Vec<ScaleSample> = (0..40)
            .map(|i| {
                let t = 0.5 + 0.7 * (i as f64) / 40.0;
                ScaleSample {
                    t,
                    h1dot_sq: 1.0 / (t_true - t).sqrt(),
                    tail_fraction: 0.0,
                    healthy: true,
                }
            })
            .collect();
        let t_est = estimate_blowup_time(&samples).unwrap();
        assert!(
            (t_est - t_true).abs() < 1e-10,
            "extrapolated {t_est} vs true {t_true}"
        );
    }

    #[test]
    fn blowup_time_fit_refuses_flat_histories() {
        let samples: Vec<ScaleSample> = (0..20)
            .map(|i| ScaleSample {
                t: i as f64 * 0.1,
                h1dot_sq: 2.0,
                tail_fraction: 0.0,
                healthy: true,
            })
            .collect();
        assert!(matches!(
            estimate_blowup_time(&samples),
            Err(Error::FitRefused(_))
        ));
    }

    #[test]
    fn concavity_bound_closed_form_and_guards() {
        let y0 = 2.0;
        let e = -0.5;
        let t = concavity_blowup_bound(y0, 0.0, e).unwrap();
        let want = (y0 / (8.0 * e.abs())).sqrt();
        assert!((t - want).abs() < 1e-14, "bound {t} vs {want}");
        // With initial growth the root satisfies the quadratic exactly.
        let yp = 1.5;
        let t2 = concavity_blowup_bound(y0, yp, e).unwrap();
        let resid = y0 + yp * t2 + 8.0 * e * t2 * t2;
        assert!(resid.abs() < 1e-12, "root leaves residual {resid}");
        assert!(t2 > t, "outward-moving data must buy time");
        assert!(matches!(
            concavity_blowup_bound(y0, 0.0, 0.3),
            Err(Error::FitRefused(_))
        ));
    }

    #[test]
    fn rate_fit_recovers_synthetic_exponents() {
        let t_true = 1.0;
        let samples: Vec<RateSample> = (0..60)
            .map(|i| {
                // Geometric approach: gap from 0.3 down to ~1e-7.
                let gap = 0.3 * (0.77f64).powi(i);
                let t = t_true - gap;
                RateSample {
                    t,
                    l3: (1.0 / gap).ln().powf(0.1),
                    h1dot: gap.powf(-0.25),
                }
            })
            .collect();
        let fit = rate_fit(&samples, t_true).unwrap();
        assert!(
            (fit.gamma_hat - 0.1).abs() < 0.02,
            "gamma_hat {} should be near 0.1",
            fit.gamma_hat
        );
        assert!(
            (fit.c_quarter - 1.0).abs() < 1e-6,
            "c_quarter {} should be 1",
            fit.c_quarter
        );
        assert!(fit.c_quarter_min > 0.0);
        assert!(fit.n_samples >= 8);
    }

    #[test]
    fn rate_fit_refuses_thin_windows() {
        let samples: Vec<RateSample> = (0..5)
            .map(|i| RateSample {
                t: 0.9 + 0.01 * i as f64,
                l3: 1.0,
                h1dot: 1.0,
            })
            .collect();
        assert!(matches!(rate_fit(&samples, 1.0), Err(Error::FitRefused(_))));
    }

    #[test]
    fn coercivity_constant_closed_form() {
        let c1 = coercivity_constant(1.0).unwrap();
        let s_sq = sharp_l6_constant_sq();
        assert!((c1 - (2.0 / s_sq).sqrt()).abs() < 1e-14);
        // Stronger kernels lower the threshold.
        let c4 = coercivity_constant(4.0).unwrap();
        assert!((c4 - c1 / 2.0).abs() < 1e-14);
        assert!(coercivity_constant(0.0).is_err());
    }

    #[test]
    fn regime_report_thresholds() {
        let r = regime_report(1.0, 1.0, -0.5, 100.0, 1e-3);
        assert!(r.m0_large, "M0 = 4 here");
        assert!(r.tau_energy_small, "negative energy passes trivially");
        assert!(r.depth_energy_small);
        let r2 = regime_report(0.1, 1.0, 2.0, 100.0, 1e-3);
        assert!(!r2.m0_large);
        assert!(!r2.tau_energy_small, "sqrt(100)*2 = 20 >= 1");
    }

    #[test]
    fn csv_rows_round_trip_bit_exactly() {
        let row = DiagRow {
            t: 0.1 + 0.2,
            dt: 1e-3,
            mass: 49.21875,
            energy: -3.0000000000000004,
            h1: 2.220446049250313e-16,
            l3: 1.7320508075688772,
            lambda: f64::INFINITY,
            rho_at_sqrt_t: f64::NAN,
            va: 0.0,
            pa: -0.0,
            kv: 12345.678901234567,
            local_mass: 6.02e23,
            status: "running",
        };
        let line = row.to_csv_line();
        assert_eq!(line.matches(',').count(), 12, "13 columns exactly");
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[12], "running");
        // Shortest round-trip formatting restores every bit.
        assert_eq!(fields[0].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(
            fields[3].parse::<f64>().unwrap(),
            -3.0000000000000004f64
        );
        assert_eq!(fields[6], "inf");
        assert!(fields[7].parse::<f64>().unwrap().is_nan());
        assert_eq!(
            CSV_HEADER.split(',').count(),
            13,
            "header names every column"
        );
    }

    #[test]
    fn rho_norm_is_scale_covariant_and_dyadically_monotone() {
        // rescaled halves every length, so the dyadic ladders of the two
        // fields align node for node and the sup transports exactly:
        // rho(u_lambda, R) = rho(u, lambda R) at lambda = 2.
        let grid = RadialGrid::new(512, 12.0).unwrap();
        let u = RadialField::gaussian(grid, 2.0, 1.0).unwrap();
        let v = u.rescaled(2.0, false).unwrap();
        for j in 0..4 {
            let r_scale = 0.375 * 2f64.powi(j);
            let lhs = rho_norm(&v, r_scale).unwrap();
            let rhs = rho_norm(&u, 2.0 * r_scale).unwrap();
            assert!(
                ((lhs - rhs) / rhs).abs() < 1e-12,
                "covariance broken at R = {r_scale}: {lhs} vs {rhs}"
            );
        }
        let tight = rho_norm(&u, 0.375).unwrap();
        let loose = rho_norm(&u, 3.0).unwrap();
        assert!(
            loose <= tight * (1.0 + 1e-12),
            "dyadic sup must shrink as the base scale grows: {loose} vs {tight}"
        );
    }
}
