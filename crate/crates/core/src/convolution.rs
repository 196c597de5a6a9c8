//! Radial convolution and pair-interaction engine.
//!
//! For radial f and rho the 3D convolution collapses to the bipolar form
//!
//!   (f * rho)(r) = (2 pi / r) int_0^inf s rho(s) [ C(r+s) - C(|r-s|) ] ds,
//!
//!   C(t) = int^t gamma,   gamma(t) = t f(t).
//!
//! Two profiles share the engine: the kernel itself (gamma = t V) for the
//! nonlinear potential, and the derivative weight (gamma = t^2 V') whose
//! convolution gives the pair term of the virial identity. Both cumulative
//! functions may diverge at t = 0 for the singular kernel, but only
//! differences enter, and every r_i +- s_j lands exactly on the ladder
//! t_l = l dr, so the steep factor C is never interpolated.
//!
//! The direct path integrates, per grid segment, a cubic interpolant of
//! rho against C exactly, via per-cell moment tables
//!
//!   K_m[l] = int_cell eta^m C dx = dr/(m+1) ( C(t_{l+1}) - G_{m+1}[l] ),
//!
//! with G the local gamma moments; the identity follows from integration
//! by parts and makes the quadrature exact in C. The spectral path applies
//! the multiplier f_hat(k_m) = (4 pi / k) int gamma(t) sin(k t) dt in the
//! sine basis; for the scaled kernel f_hat_eps(k) = f_hat(eps k) exactly,
//! so the table is built in natural units.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::potential::{gauss_legendre, gauss_legendre_log, Potential, PotentialKind};
use crate::spectral::SineTransform;

use std::f64::consts::PI;

/// Which radial profile is convolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// gamma(t) = t V(t); (V * rho) for the nonlinear potential.
    Kernel,
    /// gamma(t) = t^2 V'(t); (tV' * rho) for the virial pair term.
    VirialWeight,
}

/// Nonlinearity selector: full pair interaction or its local limit.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearMode {
    Hartree(Potential),
    CubicNls,
}

fn phi_nat(pot: &Potential, profile: Profile, y: f64) -> f64 {
    match profile {
        Profile::Kernel => pot.eval_nat(y),
        Profile::VirialWeight => pot.radial_weight_nat(y),
    }
}

fn gamma_scaled(pot: &Potential, profile: Profile, x: f64) -> f64 {
    match profile {
        Profile::Kernel => x * pot.evaluate(x),
        Profile::VirialWeight => x * pot.radial_weight(x),
    }
}

/// Radii (in physical units) where the kernel profile loses smoothness.
fn knot_radii(pot: &Potential) -> [f64; 2] {
    match *pot.kind() {
        PotentialKind::LogCore { delta, .. } => [delta * pot.eps(), 2.0 * delta * pot.eps()],
        _ => [f64::INFINITY; 2],
    }
}

/// Precomputed convolution tables for one (kernel, grid, profile) triple.
pub struct BipolarPlan {
    grid: RadialGrid,
    profile: Profile,
    /// Per ladder cell l: [K_0..K_4], K_m = int_cell eta^m C dx.
    k_cells: Vec<[f64; 5]>,
    /// Spectral multiplier at the grid wavenumbers k_m.
    hat: Vec<f64>,
}

impl BipolarPlan {
    pub fn new(pot: &Potential, grid: RadialGrid, profile: Profile) -> Result<Self> {
        if pot.is_delta() {
            return Err(Error::UnsupportedKernel(
                "the point-mass kernel needs no convolution tables; use the local mode".into(),
            ));
        }
        if let PotentialKind::LogCore { alpha_log, .. } = *pot.kind() {
            if alpha_log <= 1.0 {
                return Err(Error::DivergentIntegral(format!(
                    "singular core with log exponent {alpha_log} is not integrable"
                )));
            }
        }
        let n = grid.n();
        let dr = grid.dr();
        let ncell = 2 * (n + 1);
        let sup = pot.support_radius();
        let singular = pot.has_singular_core();

        // Local gamma moments G_m[l] = int_cell (x/dr - l)^m gamma dx.
        let mut gmom = vec![[0.0f64; 6]; ncell];
        for (l, gm) in gmom.iter_mut().enumerate() {
            let lo = l as f64 * dr;
            if lo >= sup {
                continue;
            }
            let hi = (lo + dr).min(sup);
            if l == 0 && singular {
                // The gamma mass in the first cell is singular at 0; the
                // eta^m moments (m >= 1) converge and come from the core
                // closed forms. G_0[0] is never used.
                for m in 1..=5 {
                    gm[m] = singular_moment_head(pot, profile, m as i32, hi) / dr.powi(m as i32);
                }
            } else {
                let f = |x: f64| gamma_scaled(pot, profile, x);
                let quad = |g: &mut [f64; 6], a: f64, b: f64| {
                    if singular {
                        cell_moments_log(&f, a, b, dr, l as f64, g);
                    } else {
                        cell_moments_linear(&f, a, b, dr, l as f64, g);
                    }
                };
                if l == 0 {
                    // Regular kernels: split the first cell so the Gauss
                    // nodes resolve the gamma ~ t growth near 0.
                    quad(gm, 0.0, hi * 0.5);
                    quad(gm, hi * 0.5, hi);
                } else {
                    // Quadrature panels must not straddle the blending
                    // joints, where the profile is only finitely smooth.
                    let mut cuts = [lo, hi, hi, hi];
                    let mut m = 1;
                    for knot in knot_radii(pot) {
                        if knot > lo * (1.0 + 1e-14) && knot < hi * (1.0 - 1e-14) {
                            cuts[m] = knot;
                            m += 1;
                        }
                    }
                    cuts[m] = hi;
                    for w in cuts[..=m].windows(2) {
                        quad(gm, w[0], w[1]);
                    }
                }
            }
        }

        // Cumulative C on the ladder, referenced at t_1 (the reference
        // cancels between the two bipolar terms).
        let mut cum = vec![0.0f64; ncell + 1];
        cum[0] = f64::NAN; // singular endpoint, never read
        cum[1] = 0.0;
        for l in 1..ncell {
            cum[l + 1] = cum[l] + gmom[l][0];
        }

        let mut k_cells = vec![[0.0f64; 5]; ncell];
        for (l, kc) in k_cells.iter_mut().enumerate() {
            for m in 0..5 {
                kc[m] = dr / (m as f64 + 1.0) * (cum[l + 1] - gmom[l][m + 1]);
            }
        }

        let ks: Vec<f64> = (0..n).map(|m| grid.k(m)).collect();
        let hat = hat_batch(pot, profile, &ks);

        Ok(BipolarPlan {
            grid,
            profile,
            k_cells,
            hat,
        })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn hat(&self) -> &[f64] {
        &self.hat
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// Segment-exact bipolar convolution on the grid nodes.
    pub fn apply_direct(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        if rho.len() != n {
            return Err(Error::GridMismatch(format!(
                "plan sized for {n} nodes, density has {}",
                rho.len()
            )));
        }
        let dr = self.grid.dr();

        // Nodal values with the even-extension origin estimate and the
        // Dirichlet end; index m means s = m dr.
        let mut ext = vec![0.0f64; n + 2];
        ext[0] = (4.0 * rho[0] - rho[1]) / 3.0;
        ext[1..=n].copy_from_slice(rho);

        // Cubic coefficients of rho on each segment [j dr, (j+1) dr] in the
        // local variable eta, plus the eta -> 1 - eta flip used when the
        // bipolar distance runs backwards through the segment.
        let mut coef = vec![[0.0f64; 4]; n + 1];
        let mut flip = vec![[0.0f64; 4]; n + 1];
        for j in 0..=n {
            let m0 = if j == 0 { 0 } else { (j - 1).min(n - 2) };
            let e = m0 as f64 - j as f64;
            let xs = [e, e + 1.0, e + 2.0, e + 3.0];
            let ys = [ext[m0], ext[m0 + 1], ext[m0 + 2], ext[m0 + 3]];
            let c = cubic_through(&xs, &ys);
            coef[j] = c;
            flip[j] = [
                c[0] + c[1] + c[2] + c[3],
                -(c[1] + 2.0 * c[2] + 3.0 * c[3]),
                c[2] + 3.0 * c[3],
                -c[3],
            ];
        }

        let kc = &self.k_cells;
        let mut out = vec![0.0f64; n];
        for i in 1..=n {
            let mut acc = 0.0;
            for j in 0..=n {
                let c = &coef[j];
                let jf = j as f64;
                // C(r+s): s = dr (j + eta), x = r_i + s lands in cell i+j.
                let ka = &kc[i + j];
                acc += c[0] * (jf * ka[0] + ka[1])
                    + c[1] * (jf * ka[1] + ka[2])
                    + c[2] * (jf * ka[2] + ka[3])
                    + c[3] * (jf * ka[3] + ka[4]);
                // C(|r-s|): cell j-i ascending for s > r, cell i-j-1 with
                // the flipped polynomial for s < r.
                let b = if j >= i {
                    let kb = &kc[j - i];
                    c[0] * (jf * kb[0] + kb[1])
                        + c[1] * (jf * kb[1] + kb[2])
                        + c[2] * (jf * kb[2] + kb[3])
                        + c[3] * (jf * kb[3] + kb[4])
                } else {
                    let f = &flip[j];
                    let kb = &kc[i - j - 1];
                    let j1 = jf + 1.0;
                    f[0] * (j1 * kb[0] - kb[1])
                        + f[1] * (j1 * kb[1] - kb[2])
                        + f[2] * (j1 * kb[2] - kb[3])
                        + f[3] * (j1 * kb[3] - kb[4])
                };
                acc -= b;
            }
            out[i - 1] = 2.0 * PI * dr * acc / self.grid.r(i - 1);
        }
        Ok(out)
    }

    /// Convolution through the sine basis: multiply the modes of r*rho by
    /// the tabulated profile transform.
    pub fn apply_spectral(&self, st: &SineTransform, rho: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        if rho.len() != n {
            return Err(Error::GridMismatch(format!(
                "plan sized for {n} nodes, density has {}",
                rho.len()
            )));
        }
        let w: Vec<Complex64> = rho
            .iter()
            .enumerate()
            .map(|(i, &v)| Complex64::new(v * self.grid.r(i), 0.0))
            .collect();
        let mut s = st.forward(&w)?;
        for (m, sm) in s.iter_mut().enumerate() {
            *sm *= self.hat[m];
        }
        let back = st.inverse(&s)?;
        Ok(back
            .iter()
            .enumerate()
            .map(|(i, v)| v.re / self.grid.r(i))
            .collect())
    }
}

/// Monomial coefficients of the cubic through (xs[t], ys[t]).
fn cubic_through(xs: &[f64; 4], ys: &[f64; 4]) -> [f64; 4] {
    let mut d = *ys;
    for k in 1..4 {
        for m in (k..4).rev() {
            d[m] = (d[m] - d[m - 1]) / (xs[m] - xs[m - k]);
        }
    }
    let mut c = [0.0f64; 4];
    c[0] = d[3];
    for k in (0..3).rev() {
        let a = xs[k];
        let mut nc = [0.0f64; 4];
        for m in (1..4).rev() {
            nc[m] = c[m - 1];
        }
        for m in 0..4 {
            nc[m] -= a * c[m];
        }
        nc[0] += d[k];
        c = nc;
    }
    c
}

/// Accumulate int_a^b eta^m gamma dx for m = 0..=5, eta = x/dr - l.
fn cell_moments_linear<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, dr: f64, l: f64, g: &mut [f64; 6]) {
    gl16_accumulate(f, a, b, dr, l, g, false);
}

fn cell_moments_log<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, dr: f64, l: f64, g: &mut [f64; 6]) {
    gl16_accumulate(f, a, b, dr, l, g, true);
}

fn gl16_accumulate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    dr: f64,
    l: f64,
    g: &mut [f64; 6],
    log_space: bool,
) {
    const NODES: [f64; 16] = [
        -0.9894009349916499,
        -0.9445750230732326,
        -0.8656312023878318,
        -0.7554044083550030,
        -0.6178762444026438,
        -0.4580167776572274,
        -0.2816035507792589,
        -0.0950125098376374,
        0.0950125098376374,
        0.2816035507792589,
        0.4580167776572274,
        0.6178762444026438,
        0.7554044083550030,
        0.8656312023878318,
        0.9445750230732326,
        0.9894009349916499,
    ];
    const WEIGHTS: [f64; 16] = [
        0.0271524594117541,
        0.0622535239386479,
        0.0951585116824928,
        0.1246289712555339,
        0.1495959888165767,
        0.1691565193950025,
        0.1826034150449236,
        0.1894506104550685,
        0.1894506104550685,
        0.1826034150449236,
        0.1691565193950025,
        0.1495959888165767,
        0.1246289712555339,
        0.0951585116824928,
        0.0622535239386479,
        0.0271524594117541,
    ];
    let (lo, hi) = if log_space { (a.ln(), b.ln()) } else { (a, b) };
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    for (t, w) in NODES.iter().zip(&WEIGHTS) {
        let y = mid + half * t;
        let (x, jac) = if log_space { (y.exp(), y.exp()) } else { (y, 1.0) };
        let base = w * half * jac * f(x);
        let eta = x / dr - l;
        let mut p = 1.0;
        for gm in g.iter_mut() {
            *gm += base * p;
            p *= eta;
        }
    }
}

/// int_0^t x^q gamma(x) dx for the singular kernel, q >= 1. In natural
/// units the integrand is y^{q+1} phi(y); on the pure core phi is exactly
/// y^{-3} s^{-alpha} (or its derivative weight), giving elementary forms
/// in s = -log y for q = 1 and exponentially convergent s-integrals above.
fn singular_moment_head(pot: &Potential, profile: Profile, q: i32, t: f64) -> f64 {
    let (al, delta) = match *pot.kind() {
        PotentialKind::LogCore { alpha_log, delta } => (alpha_log, delta),
        _ => unreachable!("singular head is only built for the log-core kernel"),
    };
    let eps = pot.eps();
    let amp = pot.amplitude();
    let y_hi = (t / eps).min(2.0 * delta);
    let p = q + 1;
    let yc = y_hi.min(delta);
    let mut acc = n_core(al, profile, p, yc);
    if y_hi > delta {
        acc += gauss_legendre_log(
            |y| y.powi(p) * phi_nat(pot, profile, y),
            delta,
            y_hi,
            16,
        );
    }
    amp * eps.powi(q - 1) * acc
}

/// int_0^y u^p phi(u) du on the pure core (chi = 1), y <= delta.
fn n_core(al: f64, profile: Profile, p: i32, y: f64) -> f64 {
    let s0 = -y.ln();
    debug_assert!(s0 > 0.0, "core moment evaluated outside (0, 1)");
    match (profile, p) {
        (Profile::Kernel, 2) => s0.powf(1.0 - al) / (al - 1.0),
        (Profile::VirialWeight, 2) => -3.0 * s0.powf(1.0 - al) / (al - 1.0) + s0.powf(-al),
        _ => {
            let decay = (p - 2) as f64;
            debug_assert!(decay > 0.0);
            let span = 45.0 / decay;
            let w = |s: f64| match profile {
                Profile::Kernel => s.powf(-al),
                Profile::VirialWeight => -3.0 * s.powf(-al) + al * s.powf(-al - 1.0),
            };
            let mut acc = 0.0;
            let panels = 6;
            for i in 0..panels {
                let a = s0 + span * i as f64 / panels as f64;
                let b = s0 + span * (i + 1) as f64 / panels as f64;
                acc += gauss_legendre(|s| (-decay * (s - s0)).exp() * w(s), a, b, 16);
            }
            // The e^{-decay s0} prefactor is y^{p-2}.
            acc * y.powi(p - 2)
        }
    }
}

/// Profile transform f_hat(k) = (4 pi / k) int_0^inf gamma(t) sin(k t) dt
/// at a batch of wavenumbers. The point-mass kernel has the constant
/// transforms amp (kernel) and -3 amp (virial weight).
pub fn hat_batch(pot: &Potential, profile: Profile, ks: &[f64]) -> Vec<f64> {
    if pot.is_delta() {
        let v = match profile {
            Profile::Kernel => pot.amplitude(),
            Profile::VirialWeight => -3.0 * pot.amplitude(),
        };
        return vec![v; ks.len()];
    }
    let eps = pot.eps();
    let amp = pot.amplitude();
    if pot.has_singular_core() {
        ks.iter()
            .map(|&k| amp * hat_log_nat(pot, profile, eps * k))
            .collect()
    } else {
        hat_smooth_batch(pot, profile, ks)
    }
}

/// Single-wavenumber convenience wrapper.
pub fn profile_hat(pot: &Potential, profile: Profile, k: f64) -> f64 {
    hat_batch(pot, profile, &[k])[0]
}

/// Oscillation-resolved transform for the singular kernel, natural units.
/// The head (0, x_split] uses the two-term Taylor expansion of sin with
/// the exact core moments; past it, octaves are split into panels sized
/// by the local oscillation count.
fn hat_log_nat(pot: &Potential, profile: Profile, kappa: f64) -> f64 {
    let delta = match *pot.kind() {
        PotentialKind::LogCore { delta, .. } => delta,
        _ => unreachable!(),
    };
    let al = match *pot.kind() {
        PotentialKind::LogCore { alpha_log, .. } => alpha_log,
        _ => unreachable!(),
    };
    let sup = 2.0 * delta;
    let x_split = (1e-4 / kappa).min(delta);
    let n2 = n_core(al, profile, 2, x_split);
    let n4 = n_core(al, profile, 4, x_split);
    let mut acc = kappa * n2 - kappa.powi(3) / 6.0 * n4;
    let f = |t: f64| t * phi_nat(pot, profile, t) * (kappa * t).sin();
    let mut lo = x_split;
    while lo < sup * (1.0 - 1e-12) {
        let mut hi = (2.0 * lo).min(sup);
        // The smoothstep joint at delta bounds a panel, never sits inside one.
        if lo < delta * (1.0 - 1e-12) && hi > delta {
            hi = delta;
        }
        let n_osc = kappa * (hi - lo) / PI;
        if n_osc <= 1.0 {
            acc += gauss_legendre_log(f, lo, hi, 16);
        } else {
            let panels = (n_osc * 2.0).ceil() as usize + 1;
            let step = (hi - lo) / panels as f64;
            for i in 0..panels {
                acc += gauss_legendre(f, lo + step * i as f64, lo + step * (i + 1) as f64, 16);
            }
        }
        lo = hi;
    }
    4.0 * PI * acc / kappa
}

/// Filon quadrature for regular kernels: gamma is sampled on a fine
/// uniform grid in natural units, interpolated by cubics per cell, and
/// each cell is integrated against sin(kappa t) exactly. The error is
/// O(h^4) uniformly in kappa, so one table serves every mode.
fn hat_smooth_batch(pot: &Potential, profile: Profile, ks: &[f64]) -> Vec<f64> {
    const NF: usize = 8192;
    let eps = pot.eps();
    let amp = pot.amplitude();
    let r_nat = pot.support_radius() / eps;
    let h = r_nat / NF as f64;
    let mut g = vec![0.0f64; NF + 1];
    for (p, gp) in g.iter_mut().enumerate().skip(1) {
        let t = p as f64 * h;
        *gp = t * phi_nat(pot, profile, t);
    }
    // gamma(0) = 0 for regular kernels.
    let mut coef = vec![[0.0f64; 4]; NF];
    for (p, cp) in coef.iter_mut().enumerate() {
        let m0 = if p == 0 { 0 } else { (p - 1).min(NF - 3) };
        let e = m0 as f64 - p as f64;
        let xs = [e, e + 1.0, e + 2.0, e + 3.0];
        let ys = [g[m0], g[m0 + 1], g[m0 + 2], g[m0 + 3]];
        *cp = cubic_through(&xs, &ys);
    }
    ks.iter()
        .map(|&k| {
            let kappa = eps * k;
            let theta = kappa * h;
            let mu = filon_mu(theta);
            let rot = Complex64::from_polar(1.0, theta);
            let mut phase = Complex64::new(1.0, 0.0);
            let mut s = 0.0;
            for (p, c) in coef.iter().enumerate() {
                if p % 256 == 0 {
                    phase = Complex64::from_polar(1.0, theta * p as f64);
                }
                let z = c[0] * mu[0] + c[1] * mu[1] + c[2] * mu[2] + c[3] * mu[3];
                s += (phase * z).im;
                phase *= rot;
            }
            amp * 4.0 * PI * h * s / kappa
        })
        .collect()
}

/// mu_j(theta) = int_0^1 xi^j e^{i theta xi} d xi, j = 0..3.
fn filon_mu(theta: f64) -> [Complex64; 4] {
    let it = Complex64::new(0.0, theta);
    if theta.abs() < 1.0 {
        let mut mu = [Complex64::new(0.0, 0.0); 4];
        for (j, m) in mu.iter_mut().enumerate() {
            let mut pow = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..32 {
                acc += pow / (j + l + 1) as f64;
                pow = pow * it / (l as f64 + 1.0);
            }
            *m = acc;
        }
        mu
    } else {
        let e = Complex64::from_polar(1.0, theta);
        let one = Complex64::new(1.0, 0.0);
        let mut mu = [Complex64::new(0.0, 0.0); 4];
        mu[0] = (e - one) / it;
        for j in 1..4 {
            mu[j] = (e - (j as f64) * mu[j - 1]) / it;
        }
        mu
    }
}

enum CtxInner {
    Pair {
        pot: Potential,
        conv: BipolarPlan,
        vir: BipolarPlan,
        l1: f64,
    },
    Local {
        coupling: f64,
    },
}

/// Resolved nonlinearity for one grid: either a pair interaction with its
/// convolution plans or the local cubic limit.
pub struct NonlinearCtx {
    grid: RadialGrid,
    inner: CtxInner,
}

impl NonlinearCtx {
    pub fn new(mode: &NonlinearMode, grid: RadialGrid) -> Result<Self> {
        let inner = match mode {
            NonlinearMode::CubicNls => CtxInner::Local { coupling: 1.0 },
            NonlinearMode::Hartree(pot) if pot.is_delta() => CtxInner::Local {
                coupling: pot.amplitude(),
            },
            NonlinearMode::Hartree(pot) => {
                let l1 = pot.l1_norm()?;
                let conv = BipolarPlan::new(pot, grid, Profile::Kernel)?;
                let vir = BipolarPlan::new(pot, grid, Profile::VirialWeight)?;
                CtxInner::Pair {
                    pot: pot.clone(),
                    conv,
                    vir,
                    l1,
                }
            }
        };
        Ok(NonlinearCtx { grid, inner })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn is_local(&self) -> bool {
        matches!(self.inner, CtxInner::Local { .. })
    }

    pub fn potential(&self) -> Option<&Potential> {
        match &self.inner {
            CtxInner::Pair { pot, .. } => Some(pot),
            CtxInner::Local { .. } => None,
        }
    }

    /// || V ||_{L^1} for the pair interaction, the coupling for the local
    /// limit (the L^1 mass of the implied point kernel).
    pub fn coupling_l1(&self) -> f64 {
        match &self.inner {
            CtxInner::Pair { l1, .. } => *l1,
            CtxInner::Local { coupling } => *coupling,
        }
    }

    /// W = (V * rho) through the sine basis, or the local coupling * rho.
    pub fn potential_field(&self, st: &SineTransform, rho: &[f64]) -> Result<Vec<f64>> {
        match &self.inner {
            CtxInner::Pair { conv, .. } => conv.apply_spectral(st, rho),
            CtxInner::Local { coupling } => Ok(rho.iter().map(|&v| coupling * v).collect()),
        }
    }

    /// W by the segment-exact bipolar path (cross-check route).
    pub fn potential_field_direct(&self, rho: &[f64]) -> Result<Vec<f64>> {
        match &self.inner {
            CtxInner::Pair { conv, .. } => conv.apply_direct(rho),
            CtxInner::Local { coupling } => Ok(rho.iter().map(|&v| coupling * v).collect()),
        }
    }

    /// int rho (V * rho) dx; the quartic interaction term.
    pub fn interaction_integral(&self, st: &SineTransform, rho: &[f64]) -> Result<f64> {
        let w = self.potential_field(st, rho)?;
        let prod: Vec<f64> = rho.iter().zip(&w).map(|(a, b)| a * b).collect();
        self.grid.integrate(&prod)
    }

    /// Pair term of the virial identity:
    /// D = int int (x-y) . grad V (x-y) rho(x) rho(y) = int rho ((tV') * rho).
    /// Local limit: -3 c int rho^2.
    pub fn virial_pair(&self, st: &SineTransform, rho: &[f64]) -> Result<f64> {
        match &self.inner {
            CtxInner::Pair { vir, .. } => {
                let w = vir.apply_spectral(st, rho)?;
                let prod: Vec<f64> = rho.iter().zip(&w).map(|(a, b)| a * b).collect();
                self.grid.integrate(&prod)
            }
            CtxInner::Local { coupling } => {
                let sq: Vec<f64> = rho.iter().map(|&v| v * v).collect();
                Ok(-3.0 * coupling * self.grid.integrate(&sq)?)
            }
        }
    }

    pub fn virial_pair_direct(&self, rho: &[f64]) -> Result<f64> {
        match &self.inner {
            CtxInner::Pair { vir, .. } => {
                let w = vir.apply_direct(rho)?;
                let prod: Vec<f64> = rho.iter().zip(&w).map(|(a, b)| a * b).collect();
                self.grid.integrate(&prod)
            }
            CtxInner::Local { .. } => self.virial_pair_local(rho),
        }
    }

    fn virial_pair_local(&self, rho: &[f64]) -> Result<f64> {
        match &self.inner {
            CtxInner::Local { coupling } => {
                let sq: Vec<f64> = rho.iter().map(|&v| v * v).collect();
                Ok(-3.0 * coupling * self.grid.integrate(&sq)?)
            }
            _ => unreachable!(),
        }
    }
}
