//! Built-in self-check suites behind `hartree-lab verify <suite>`.
//!
//! Each suite prints one pass/fail line per check to stderr and the whole
//! command exits 0 only when every check passes. The checks are sized to
//! finish in seconds; they probe the same invariants the test suite pins
//! down, against closed forms and cross-route comparisons.

use hartree_core::convolution::{BipolarPlan, NonlinearCtx, NonlinearMode, Profile};
use hartree_core::diagnostics::{conserved, rate_fit, second_derivative_5pt, virial, RateSample};
use hartree_core::error::{Error, Result};
use hartree_core::evolution::{evolve, EvolveParams, Propagator, SolverState, Status, TimePolicy};
use hartree_core::field::RadialField;
use hartree_core::grid::RadialGrid;
use hartree_core::norms::{
    ball_mass_over_r, norm, rho_norm, NormKind, GN_BALL_CONSTANT, GN_SHELL_CONSTANT,
};
use hartree_core::potential::Potential;
use hartree_core::spectral::SineTransform;
use hartree_core::testkit;

pub struct CheckResult {
    name: &'static str,
    pass: bool,
    detail: String,
}

impl CheckResult {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        CheckResult { name, pass, detail }
    }
}

const SUITE_NAMES: [&str; 7] = [
    "conservation",
    "convolution",
    "virial",
    "admissibility",
    "scaling",
    "gn",
    "rate",
];

pub fn run_suite(name: &str) -> Result<u8> {
    let selected: Vec<&str> = if name == "all" {
        SUITE_NAMES.to_vec()
    } else if SUITE_NAMES.contains(&name) {
        vec![name]
    } else {
        return Err(Error::InvalidConfig(format!(
            "unknown verify suite '{name}'; known: {}, all",
            SUITE_NAMES.join(", ")
        )));
    };
    let mut total = 0usize;
    let mut failed = 0usize;
    for suite in selected {
        let results = match suite {
            "conservation" => suite_conservation()?,
            "convolution" => suite_convolution()?,
            "virial" => suite_virial()?,
            "admissibility" => suite_admissibility()?,
            "scaling" => suite_scaling()?,
            "gn" => suite_gn()?,
            "rate" => suite_rate()?,
            _ => unreachable!(),
        };
        eprintln!("suite {suite}");
        for r in results {
            total += 1;
            if r.pass {
                eprintln!("  pass  {:<26} {}", r.name, r.detail);
            } else {
                failed += 1;
                eprintln!("  FAIL  {:<26} {}", r.name, r.detail);
            }
        }
    }
    eprintln!("{} of {total} checks passed", total - failed);
    Ok(if failed == 0 { 0 } else { 2 })
}

/// Fixed-step run of weak data on the singular kernel; returns
/// (mass drift, energy drift), both relative.
fn drift_at(dt: f64) -> Result<(f64, f64)> {
    let grid = RadialGrid::new(256, 8.0)?;
    let pot = Potential::log_core(2.0, 0.01)?.with_amplitude(5.0)?;
    let prop = Propagator::new(&NonlinearMode::Hartree(pot), grid)?;
    let st = prop.transform();
    let ctx = prop.ctx();
    let u0 = RadialField::gaussian(grid, 0.5, 1.0)?;
    let c0 = conserved(&u0, st, ctx)?;
    let mut params = EvolveParams::new(0.3);
    params.policy = TimePolicy::Fixed(dt);
    let out = evolve(&prop, SolverState::new(u0, 0.0), &params, |_, _| Ok(()))?;
    if out.state.status != Status::Completed {
        return Err(Error::ExperimentRefused(format!(
            "conservation probe ended {}",
            out.state.status.as_str()
        )));
    }
    let c1 = conserved(&out.state.u, st, ctx)?;
    Ok((
        ((c1.mass - c0.mass) / c0.mass).abs(),
        ((c1.energy - c0.energy) / c0.energy).abs(),
    ))
}

fn suite_conservation() -> Result<Vec<CheckResult>> {
    let (_, e_coarse) = drift_at(1e-3)?;
    let (m_fine, e_fine) = drift_at(5e-4)?;
    let ratio = e_coarse / e_fine;
    Ok(vec![
        CheckResult::new(
            "mass-conservation",
            m_fine < 1e-10,
            format!("relative drift {m_fine:.2e} (tolerance 1e-10)"),
        ),
        CheckResult::new(
            "energy-conservation",
            e_fine < 1e-6,
            format!("relative drift {e_fine:.2e} (tolerance 1e-6)"),
        ),
        CheckResult::new(
            "energy-drift-order",
            ratio >= 3.5,
            format!("halving dt shrank the drift {ratio:.2}x (need >= 3.5)"),
        ),
    ])
}

fn suite_convolution() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // Closed form: e^{-r^2} * e^{-r^2} = (pi/2)^{3/2} e^{-r^2/2}.
    {
        let grid = RadialGrid::new(4095, 10.0)?;
        let st = SineTransform::new(grid.n());
        let pot = Potential::gaussian(1.0)?;
        let plan = BipolarPlan::new(&pot, grid, Profile::Kernel)?;
        let rho: Vec<f64> = grid.radii().iter().map(|&r| (-r * r).exp()).collect();
        let direct = plan.apply_direct(&rho)?;
        let spectral = plan.apply_spectral(&st, &rho)?;
        let peak = (std::f64::consts::PI / 2.0).powf(1.5);
        let mut worst = 0.0f64;
        for k in 1..=10 {
            let r_want = 0.5 * k as f64;
            let i = (r_want / grid.dr()).round() as usize - 1;
            let want = peak * (-grid.r(i) * grid.r(i) / 2.0).exp();
            worst = worst
                .max((direct[i] - want).abs() / peak)
                .max((spectral[i] - want).abs() / peak);
        }
        out.push(CheckResult::new(
            "gaussian-closed-form",
            worst < 1e-8,
            format!("worst of both routes at 10 radii: {worst:.2e} (tolerance 1e-8)"),
        ));
    }

    // Spectral and direct quadrature agree on random smooth densities.
    {
        let grid = RadialGrid::new(4095, 10.0)?;
        let st = SineTransform::new(grid.n());
        let kernels = [
            Potential::gaussian(0.9)?,
            Potential::inverse_cube_reg(0.6)?.scaled(0.3)?,
        ];
        let mut worst = 0.0f64;
        for pot in &kernels {
            let plan = BipolarPlan::new(pot, grid, Profile::Kernel)?;
            for seed in 0..5 {
                let rho = testkit::random_density(&grid, &mut testkit::seeded_rng(seed));
                let direct = plan.apply_direct(&rho)?;
                let spectral = plan.apply_spectral(&st, &rho)?;
                let scale = direct.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
                let gap = direct
                    .iter()
                    .zip(&spectral)
                    .fold(0.0f64, |a, (d, s)| a.max((d - s).abs()));
                worst = worst.max(gap / scale);
            }
        }
        out.push(CheckResult::new(
            "route-agreement",
            worst < 1e-8,
            format!("worst relative gap over 10 runs: {worst:.2e} (tolerance 1e-8)"),
        ));
    }

    // int (V * rho) = ||V||_1 int rho, exact for the cumulative tables.
    {
        let grid = RadialGrid::new(1023, 12.0)?;
        let pot = Potential::log_core(2.0, 0.01)?;
        let plan = BipolarPlan::new(&pot, grid, Profile::Kernel)?;
        let rho: Vec<f64> = grid
            .radii()
            .iter()
            .map(|&r| (-(r / 1.3) * (r / 1.3)).exp())
            .collect();
        let conv = plan.apply_direct(&rho)?;
        let lhs = grid.integrate(&conv)?;
        let rhs = pot.l1_norm()? * grid.integrate(&rho)?;
        let err = ((lhs - rhs) / rhs).abs();
        out.push(CheckResult::new(
            "mass-identity",
            err < 1e-8,
            format!("relative defect {err:.2e} (tolerance 1e-8)"),
        ));
    }

    Ok(out)
}

/// Capture the bare second moment (2 V_a, since psi = x^2/2 on the core)
/// at the five times `t0 + k h`, stepping with a fixed dt that divides h,
/// plus the full virial right side at the stencil center.
fn virial_stencil(dt: f64, h: f64, t0: f64) -> Result<(f64, f64)> {
    let grid = RadialGrid::new(256, 8.0)?;
    let radius = 2.5;
    let pot = Potential::log_core(2.0, 0.01)?.with_amplitude(5.0)?;
    let prop = Propagator::new(&NonlinearMode::Hartree(pot), grid)?;
    let st = prop.transform();
    let ctx = prop.ctx();
    let per = (h / dt).round() as usize;
    let lead = (t0 / dt).round() as usize;
    let mut u = RadialField::gaussian(grid, 0.5, 1.0)?;
    for _ in 0..lead {
        u = prop.step(&u, dt)?;
    }
    let mut va = [0.0f64; 5];
    let mut rhs_center = 0.0;
    for (k, slot) in va.iter_mut().enumerate() {
        if k > 0 {
            for _ in 0..per {
                u = prop.step(&u, dt)?;
            }
        }
        let v = virial(&u, st, ctx, radius)?;
        *slot = 2.0 * v.v_a;
        if k == 2 {
            rhs_center = v.rhs_full;
        }
    }
    let d2 = second_derivative_5pt(&va, h);
    Ok((((d2 - rhs_center) / rhs_center).abs(), rhs_center))
}

fn suite_virial() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    {
        let grid = RadialGrid::new(256, 10.0)?;
        let st = SineTransform::new(grid.n());
        let pot = Potential::log_core(2.0, 0.01)?;
        let ctx = NonlinearCtx::new(&NonlinearMode::Hartree(pot), grid)?;
        let mut worst = 0.0f64;
        for seed in 0..10 {
            let u = testkit::random_complex_field(grid, &mut testkit::seeded_rng(seed));
            let v = virial(&u, &st, &ctx, 2.0)?;
            worst = worst.max(((v.rhs_full - 16.0 * v.k_v) / v.rhs_full).abs());
        }
        out.push(CheckResult::new(
            "virial-closure",
            worst < 1e-12,
            format!("worst |rhs - 16 K_V| / rhs: {worst:.2e} (tolerance 1e-12)"),
        ));
    }
    {
        // Both stencils center on t = 0.01; spacing h halves.
        let (err_h, _) = virial_stencil(5e-4, 5e-3, 0.0)?;
        let (err_h2, _) = virial_stencil(2.5e-4, 2.5e-3, 5e-3)?;
        let ratio = err_h / err_h2;
        out.push(CheckResult::new(
            "virial-fd-match",
            err_h < 1e-3,
            format!("relative error {err_h:.2e} at h = 5e-3 (tolerance 1e-3)"),
        ));
        out.push(CheckResult::new(
            "virial-fd-order",
            (2.5..6.5).contains(&ratio),
            format!("halving h shrank the error {ratio:.2}x (expect ~4)"),
        ));
    }
    Ok(out)
}

fn suite_admissibility() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let log_pot = Potential::log_core(2.0, 0.01)?;
    let report = log_pot.check_conditions(2.5, 4096)?;
    out.push(CheckResult::new(
        "log-kernel-passes",
        report.connection_ok && report.integrable_ok && report.pointwise_ok && report.focusing,
        format!(
            "connection {} (alpha_meas {:.3}), integrable {}, pointwise {}",
            report.connection_ok, report.alpha_meas, report.integrable_ok, report.pointwise_ok
        ),
    ));
    let g_report = Potential::gaussian(1.0)?.check_conditions(2.5, 4096)?;
    out.push(CheckResult::new(
        "gaussian-fails-connection",
        !g_report.connection_ok,
        format!(
            "connection_ok {} (alpha_meas {:.3}, flat near 0)",
            g_report.connection_ok, g_report.alpha_meas
        ),
    ));
    {
        let base = log_pot.check_conditions(2.5, 4096)?;
        let mut worst = 0.0f64;
        let mut flags_stable = true;
        for eps in [0.1, 0.01] {
            let rep = log_pot.scaled(eps)?.check_conditions(2.5, 4096)?;
            flags_stable &= rep.connection_ok == base.connection_ok
                && rep.integrable_ok == base.integrable_ok
                && rep.pointwise_ok == base.pointwise_ok;
            for (a, b) in [
                (rep.alpha_meas, base.alpha_meas),
                (rep.l1_v, base.l1_v),
                (rep.l1_rv_prime, base.l1_rv_prime),
                (rep.c_meas, base.c_meas),
            ] {
                worst = worst.max(((a - b) / b).abs());
            }
        }
        out.push(CheckResult::new(
            "eps-invariance",
            flags_stable && worst < 1e-8,
            format!("worst relative shift across eps {{1, 0.1, 0.01}}: {worst:.2e}"),
        ));
    }
    Ok(out)
}

fn suite_scaling() -> Result<Vec<CheckResult>> {
    let grid = RadialGrid::new(512, 12.0)?;
    let st = SineTransform::new(grid.n());
    let pot = Potential::log_core(2.0, 0.01)?.with_amplitude(4.0)?;
    let u = RadialField::gaussian(grid, 0.8, 1.0)?;
    let energy = |field: &RadialField, kernel: &Potential| -> Result<f64> {
        let ctx = NonlinearCtx::new(&NonlinearMode::Hartree(kernel.clone()), *field.grid())?;
        let h1 = norm(field, NormKind::H1dot, &st)?.powi(2);
        let quartic = ctx.interaction_integral(&st, &field.density())?;
        Ok(0.5 * h1 - 0.25 * quartic)
    };
    let e_u = energy(&u, &pot)?;
    let l3_u = norm(&u, NormKind::L3, &st)?;
    let mut worst_e = 0.0f64;
    let mut worst_l3 = 0.0f64;
    for lambda in [2.0, 4.0] {
        let v = u.rescaled(lambda, false)?;
        let e_v = energy(&v, &pot.scaled(1.0 / lambda)?)?;
        let l3_v = norm(&v, NormKind::L3, &st)?;
        worst_e = worst_e.max(((e_v - lambda * e_u) / (lambda * e_u)).abs());
        worst_l3 = worst_l3.max(((l3_v - l3_u) / l3_u).abs());
    }
    Ok(vec![
        CheckResult::new(
            "energy-scaling",
            worst_e < 1e-4,
            format!("worst relative defect of E(v_lambda) = lambda E(u): {worst_e:.2e}"),
        ),
        CheckResult::new(
            "l3-invariance",
            worst_l3 < 1e-4,
            format!("worst relative defect of |v_lambda|_L3 = |u|_L3: {worst_l3:.2e}"),
        ),
    ])
}

fn suite_gn() -> Result<Vec<CheckResult>> {
    let grid = RadialGrid::new(511, 12.0)?;
    let st = SineTransform::new(grid.n());
    let mut bound_ok = true;
    let mut mono_ok = true;
    let mut worst_margin = f64::INFINITY;
    for seed in 0..20 {
        let u = if seed % 2 == 0 {
            testkit::random_smooth_field(grid, &mut testkit::seeded_rng(seed))
        } else {
            testkit::random_complex_field(grid, &mut testkit::seeded_rng(seed))
        };
        let l3sq = norm(&u, NormKind::L3, &st)?.powi(2);
        let mut r_scale = grid.dr() * 4.0;
        let mut prev = f64::INFINITY;
        while r_scale <= grid.r_max() / 2.0 {
            let rho = rho_norm(&u, r_scale)?;
            let ball = ball_mass_over_r(&u, r_scale)?;
            bound_ok &= rho <= GN_SHELL_CONSTANT * l3sq * (1.0 + 1e-6);
            bound_ok &= ball <= GN_BALL_CONSTANT * l3sq * (1.0 + 1e-6);
            mono_ok &= rho <= prev * (1.0 + 1e-12);
            worst_margin = worst_margin.min(GN_SHELL_CONSTANT * l3sq / rho.max(1e-300));
            prev = rho;
            r_scale *= 2.0;
        }
    }
    Ok(vec![
        CheckResult::new(
            "shell-and-ball-bounds",
            bound_ok,
            format!("20 seeded fields, all dyadic R; tightest margin {worst_margin:.2}x"),
        ),
        CheckResult::new(
            "rho-dyadic-monotone",
            mono_ok,
            "rho(u, 2R) <= rho(u, R) at every tested scale".into(),
        ),
    ])
}

fn suite_rate() -> Result<Vec<CheckResult>> {
    let t_true = 1.0;
    let samples: Vec<RateSample> = (0..60)
        .map(|i| {
            let gap = 0.3 * (0.77f64).powi(i);
            RateSample {
                t: t_true - gap,
                l3: (1.0 / gap).ln().powf(0.1),
                h1dot: gap.powf(-0.25),
            }
        })
        .collect();
    let fit = rate_fit(&samples, t_true)?;
    let gamma_err = (fit.gamma_hat - 0.1).abs();

    // Quarter-power law: the log-log slope of h1dot against the gap.
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| ((t_true - s.t).ln(), s.h1dot.ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let quarter_err = (slope + 0.25).abs();

    Ok(vec![
        CheckResult::new(
            "log-exponent-recovery",
            gamma_err < 0.02,
            format!("gamma_hat {:.4} vs 0.1 (tolerance 0.02)", fit.gamma_hat),
        ),
        CheckResult::new(
            "quarter-power-recovery",
            quarter_err < 1e-6,
            format!("fitted exponent {:.8} vs -0.25 (tolerance 1e-6)", slope),
        ),
    ])
}
