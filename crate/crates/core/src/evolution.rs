//! Strang split-step integrator for i u_t + Lap u = -W(u) u with
//! W(u) = (V * |u|^2) (or the local coupling in the cubic limit).
//!
//! Each step is
//!
//!   u <- e^{+i (dt/2) W}  F^{-1} e^{-i k^2 dt} F  e^{+i (dt/2) W} u,
//!
//! where both substeps are exactly unitary: mass is conserved to round-off
//! unconditionally, and the scheme is second order in dt. The potential W
//! at the end of one step equals the one opening the next (a pure phase
//! leaves |u|^2 unchanged), so only one convolution per step is paid.
//!
//! Adaptive stepping follows the intrinsic scale lambda_u = 1 / |grad u|^2:
//! dt = clamp(cfl * lambda_u, dt_min, dt_max), which keeps the renormalized
//! step size roughly constant along self-similar focusing.
//!
//! Blow-up on a fixed grid is detected, not reached: the run is declared
//! blown up when the field goes non-finite, the H^1 seminorm grows past a
//! large factor of its initial value, or the kinetic spectrum pushes mass
//! into the top quarter of resolved modes (resolution exhausted). The
//! estimated blow-up time extrapolates lambda^2, which is asymptotically
//! linear in t, to zero over the last healthy decade of scales.

use num_complex::Complex64;

use crate::convolution::{NonlinearCtx, NonlinearMode};
use crate::diagnostics::estimate_blowup_time;
use crate::error::{Error, Result};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::spectral::{sine_coefficients, weighted_mode_sum, SineTransform};

/// H^1 growth factor that declares blow-up.
pub const BLOWUP_NORM_FACTOR: f64 = 1e4;
/// Fraction of kinetic spectral mass in the top quarter of modes that
/// declares the run under-resolved (counted as blown up).
pub const TAIL_BLOWUP_FRACTION: f64 = 1e-2;
/// Tail fraction below which a sample is clean enough to enter fits.
pub const TAIL_HEALTHY_FRACTION: f64 = 1e-4;
/// Boundary mass fraction (beyond 0.9 r_max) that invalidates the run.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;
pub const BOUNDARY_WINDOW_FRACTION: f64 = 0.9;
/// Admissible range for the renormalization scale.
pub const RESCALE_MIN: f64 = 1e-8;
pub const RESCALE_MAX: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Running,
    Completed,
    BlownUp { t_est: f64 },
    BoundaryContaminated,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Completed => "completed",
            Status::BlownUp { .. } => "blown-up",
            Status::BoundaryContaminated => "boundary-contaminated",
        }
    }

    pub fn is_blown_up(&self) -> bool {
        matches!(self, Status::BlownUp { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptivePolicy {
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for AdaptivePolicy {
    fn default() -> Self {
        AdaptivePolicy {
            cfl: 0.1,
            dt_min: 1e-10,
            dt_max: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimePolicy {
    Fixed(f64),
    Adaptive(AdaptivePolicy),
}

#[derive(Debug, Clone)]
pub struct EvolveParams {
    pub policy: TimePolicy,
    pub t_end: f64,
    pub max_steps: u64,
    /// Diagnostics (and trigger checks) every this many steps.
    pub sample_stride: u64,
    pub blowup_factor: f64,
    pub boundary_limit: f64,
}

impl EvolveParams {
    pub fn new(t_end: f64) -> Self {
        EvolveParams {
            policy: TimePolicy::Adaptive(AdaptivePolicy::default()),
            t_end,
            max_steps: 2_000_000,
            sample_stride: 4,
            blowup_factor: BLOWUP_NORM_FACTOR,
            boundary_limit: BOUNDARY_MASS_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be positive and finite, got {}",
                self.t_end
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be >= 1".into()));
        }
        match self.policy {
            TimePolicy::Fixed(dt) => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::InvalidConfig(format!("fixed dt must be positive, got {dt}")));
                }
            }
            TimePolicy::Adaptive(p) => {
                if !(p.cfl > 0.0 && p.dt_min > 0.0 && p.dt_max >= p.dt_min) {
                    return Err(Error::InvalidConfig(format!(
                        "adaptive policy needs cfl > 0 and 0 < dt_min <= dt_max, got {p:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub u: RadialField,
    pub t: f64,
    pub dt: f64,
    pub step_count: u64,
    pub status: Status,
}

impl SolverState {
    pub fn new(u: RadialField, t: f64) -> Self {
        SolverState {
            u,
            t,
            dt: 0.0,
            step_count: 0,
            status: Status::Running,
        }
    }
}

/// One scale measurement along a run; the raw material for blow-up time
/// extrapolation and rate fits.
#[derive(Debug, Clone, Copy)]
pub struct ScaleSample {
    pub t: f64,
    pub h1dot_sq: f64,
    pub tail_fraction: f64,
    pub healthy: bool,
}

pub struct EvolveOutcome {
    pub state: SolverState,
    pub samples: Vec<ScaleSample>,
    pub initial_h1dot_sq: f64,
    pub budget_exhausted: bool,
}

pub struct Propagator {
    ctx: NonlinearCtx,
    st: SineTransform,
}

impl Propagator {
    pub fn new(mode: &NonlinearMode, grid: RadialGrid) -> Result<Self> {
        let ctx = NonlinearCtx::new(mode, grid)?;
        let st = SineTransform::new(grid.n());
        Ok(Propagator { ctx, st })
    }

    pub fn ctx(&self) -> &NonlinearCtx {
        &self.ctx
    }

    pub fn transform(&self) -> &SineTransform {
        &self.st
    }

    pub fn step(&self, u: &RadialField, dt: f64) -> Result<RadialField> {
        Ok(self.step_cached(u, dt, None)?.0)
    }

    /// One Strang step. Returns the new field, the potential W evaluated on
    /// the new field's density (valid as the opening W of the next step),
    /// and the H^1 seminorm squared of the mid-step field (free for dt
    /// control; pure phases do not change it during the flight).
    pub fn step_cached(
        &self,
        u: &RadialField,
        dt: f64,
        w_start: Option<&[f64]>,
    ) -> Result<(RadialField, Vec<f64>, f64)> {
        let grid = *u.grid();
        let n = grid.n();
        let owned;
        let w0: &[f64] = match w_start {
            Some(w) if w.len() == n => w,
            _ => {
                owned = self.ctx.potential_field(&self.st, &u.density())?;
                &owned
            }
        };
        let half = 0.5 * dt;
        let mut vals: Vec<Complex64> = u
            .values()
            .iter()
            .zip(w0)
            .enumerate()
            .map(|(i, (&v, &wv))| v * Complex64::from_polar(1.0, half * wv) * grid.r(i))
            .collect();
        let mut s = self.st.forward(&vals)?;
        let h1_mid = weighted_mode_sum(&grid, &s, |k| k * k);
        for (m, sm) in s.iter_mut().enumerate() {
            let k = grid.k(m);
            *sm *= Complex64::from_polar(1.0, -k * k * dt);
        }
        vals = self.st.inverse(&s)?;
        let rho1: Vec<f64> = vals
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let u = v / grid.r(i);
                u.norm_sqr()
            })
            .collect();
        let w1 = self.ctx.potential_field(&self.st, &rho1)?;
        for (i, (v, &wv)) in vals.iter_mut().zip(&w1).enumerate() {
            *v = *v / grid.r(i) * Complex64::from_polar(1.0, half * wv);
        }
        let out = RadialField::from_values(grid, vals)?;
        Ok((out, w1, h1_mid))
    }

    /// Full kinetic measurement of a field: (h1dot_sq, tail_fraction).
    pub fn kinetic_profile(&self, u: &RadialField) -> Result<(f64, f64)> {
        let grid = u.grid();
        let coeffs = sine_coefficients(&self.st, u)?;
        let total = weighted_mode_sum(grid, &coeffs, |k| k * k);
        let k_cut = grid.k(3 * grid.n() / 4);
        let tail = weighted_mode_sum(grid, &coeffs, |k| if k >= k_cut { k * k } else { 0.0 });
        Ok((total, tail / total))
    }
}

/// March a state to t_end under the given policy. `on_sample` sees every
/// recorded sample, including the initial one and the terminal one (whose
/// state already carries the final status).
pub fn evolve<F>(
    prop: &Propagator,
    start: SolverState,
    params: &EvolveParams,
    mut on_sample: F,
) -> Result<EvolveOutcome>
where
    F: FnMut(&SolverState, &ScaleSample) -> Result<()>,
{
    params.validate()?;
    if !prop.ctx().grid().same_as(start.u.grid()) {
        return Err(Error::GridMismatch(
            "solver state lives on a different grid than the propagator".into(),
        ));
    }
    let mut state = start;
    state.status = Status::Running;
    let mut samples: Vec<ScaleSample> = Vec::new();

    let (h1_0, tail_0) = prop.kinetic_profile(&state.u)?;
    let initial_h1 = h1_0;
    let mut h1_ctrl = h1_0;
    let mut budget_exhausted = false;

    let record = |state: &SolverState, samples: &mut Vec<ScaleSample>, h1: f64, tail: f64| {
        let healthy = h1.is_finite() && tail.is_finite() && tail < TAIL_HEALTHY_FRACTION;
        let s = ScaleSample {
            t: state.t,
            h1dot_sq: h1,
            tail_fraction: tail,
            healthy,
        };
        samples.push(s);
        s
    };

    // Terminal checks on a freshly measured field. Returns true when the
    // run must stop.
    let check = |state: &mut SolverState,
                 samples: &[ScaleSample],
                 h1: f64,
                 tail: f64,
                 boundary: f64,
                 limit_boundary: f64,
                 blowup_factor: f64|
     -> bool {
        if !state.u.is_finite() || !h1.is_finite() {
            let t_est = estimate_blowup_time(samples).unwrap_or(state.t);
            state.status = Status::BlownUp { t_est };
            return true;
        }
        if boundary > limit_boundary {
            state.status = Status::BoundaryContaminated;
            return true;
        }
        if h1 > blowup_factor * blowup_factor * initial_h1 && initial_h1 > 0.0 {
            let t_est = estimate_blowup_time(samples).unwrap_or(state.t);
            state.status = Status::BlownUp { t_est };
            return true;
        }
        if tail.is_finite() && tail > TAIL_BLOWUP_FRACTION {
            let t_est = estimate_blowup_time(samples).unwrap_or(state.t);
            state.status = Status::BlownUp { t_est };
            return true;
        }
        false
    };

    // Initial sample.
    let boundary = state.u.boundary_mass_fraction(BOUNDARY_WINDOW_FRACTION)?;
    let s0 = record(&state, &mut samples, h1_0, tail_0);
    let stopped = check(
        &mut state,
        &samples,
        h1_0,
        tail_0,
        boundary,
        params.boundary_limit,
        params.blowup_factor,
    );
    on_sample(&state, &s0)?;
    if stopped {
        return Ok(EvolveOutcome {
            state,
            samples,
            initial_h1dot_sq: initial_h1,
            budget_exhausted,
        });
    }

    let mut w_cache: Option<Vec<f64>> = None;
    loop {
        if state.t >= params.t_end * (1.0 - 1e-12) {
            state.status = Status::Completed;
            break;
        }
        if state.step_count >= params.max_steps {
            budget_exhausted = true;
            break;
        }
        let mut dt = match params.policy {
            TimePolicy::Fixed(dt) => dt,
            TimePolicy::Adaptive(p) => {
                let scale = if h1_ctrl > 0.0 { p.cfl / h1_ctrl } else { p.dt_max };
                scale.clamp(p.dt_min, p.dt_max)
            }
        };
        dt = dt.min(params.t_end - state.t);
        match prop.step_cached(&state.u, dt, w_cache.as_deref()) {
            Ok((u_next, w_next, h1_mid)) => {
                state.u = u_next;
                state.t += dt;
                state.dt = dt;
                state.step_count += 1;
                w_cache = Some(w_next);
                if h1_mid.is_finite() {
                    h1_ctrl = h1_mid;
                } else {
                    // Contaminated spectrum: flag now rather than marching on.
                    let t_est = estimate_blowup_time(&samples).unwrap_or(state.t);
                    state.status = Status::BlownUp { t_est };
                    break;
                }
            }
            Err(Error::NonFiniteSample(_)) => {
                // The step produced non-finite values; the previous field
                // stays in the state as the last usable snapshot.
                let t_est = estimate_blowup_time(&samples).unwrap_or(state.t);
                state.status = Status::BlownUp { t_est };
                break;
            }
            Err(e) => return Err(e),
        }

        if state.step_count % params.sample_stride == 0 || state.t >= params.t_end * (1.0 - 1e-12) {
            let (h1, tail) = prop.kinetic_profile(&state.u)?;
            h1_ctrl = h1;
            let boundary = state.u.boundary_mass_fraction(BOUNDARY_WINDOW_FRACTION)?;
            let s = record(&state, &mut samples, h1, tail);
            let stop = check(
                &mut state,
                &samples,
                h1,
                tail,
                boundary,
                params.boundary_limit,
                params.blowup_factor,
            );
            if state.t >= params.t_end * (1.0 - 1e-12) && state.status == Status::Running {
                state.status = Status::Completed;
            }
            on_sample(&state, &s)?;
            if stop || state.status != Status::Running {
                break;
            }
        }
    }

    // A terminal status decided between samples still deserves a final row.
    if samples.last().map(|s| s.t) != Some(state.t) {
        let (h1, tail) = match prop.kinetic_profile(&state.u) {
            Ok(v) => v,
            Err(_) => (f64::NAN, f64::NAN),
        };
        let s = record(&state, &mut samples, h1, tail);
        on_sample(&state, &s)?;
    }

    Ok(EvolveOutcome {
        state,
        samples,
        initial_h1dot_sq: initial_h1,
        budget_exhausted,
    })
}

/// The zoomed view v(x) = lambda conj(u)(lambda x) with
/// lambda = 1 / |grad u|^2, which normalizes |grad v| = 1 exactly on the
/// aligned grid (outer radius r_max / lambda, same node count).
#[derive(Debug, Clone)]
pub struct RenormalizedView {
    pub v: RadialField,
    pub lambda: f64,
    pub source_time: f64,
}

pub fn renormalize(u: &RadialField, st: &SineTransform, source_time: f64) -> Result<RenormalizedView> {
    let coeffs = sine_coefficients(st, u)?;
    let h1 = weighted_mode_sum(u.grid(), &coeffs, |k| k * k);
    let lambda = 1.0 / h1;
    if !(RESCALE_MIN..=RESCALE_MAX).contains(&lambda) {
        return Err(Error::ScaleOutOfRange {
            lambda,
            lo: RESCALE_MIN,
            hi: RESCALE_MAX,
        });
    }
    let v = u.rescaled(lambda, true)?;
    Ok(RenormalizedView {
        v,
        lambda,
        source_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{norm, NormKind};
    use crate::potential::Potential;

    fn l2_diff(a: &RadialField, b: &RadialField) -> f64 {
        let d: Vec<f64> = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm_sqr())
            .collect();
        a.grid().integrate(&d).unwrap().sqrt()
    }

    #[test]
    fn linear_flow_is_unitary_and_exact_on_eigenmodes() {
        let grid = RadialGrid::new(128, 6.0).unwrap();
        // Zero-amplitude kernel: W = 0, pure free flight.
        let mode = NonlinearMode::Hartree(
            Potential::gaussian(1.0).unwrap().with_amplitude(0.0).unwrap(),
        );
        let prop = Propagator::new(&mode, grid).unwrap();
        let k1 = grid.k(0);
        let u0 = RadialField::from_fn(grid, |r| {
            Complex64::new((k1 * r).sin() / r, 0.0)
        })
        .unwrap();
        let mass0 = u0.mass().unwrap();
        let mut u = u0.clone();
        let dt = 1e-3;
        let steps = 1000;
        for _ in 0..steps {
            u = prop.step(&u, dt).unwrap();
        }
        let mass1 = u.mass().unwrap();
        assert!(
            ((mass1 - mass0) / mass0).abs() < 1e-12,
            "mass drifted: {mass0} -> {mass1}"
        );
        // The lowest sine mode evolves by a global phase e^{-i k1^2 t}.
        let t = dt * steps as f64;
        let phase = Complex64::from_polar(1.0, -k1 * k1 * t);
        for (i, (got, want0)) in u.values().iter().zip(u0.values()).enumerate() {
            let want = want0 * phase;
            assert!(
                (got - want).norm() < 1e-10,
                "eigenmode node {i}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn strang_self_convergence_is_second_order() {
        let grid = RadialGrid::new(256, 8.0).unwrap();
        let mode = NonlinearMode::CubicNls;
        let prop = Propagator::new(&mode, grid).unwrap();
        let u0 = RadialField::gaussian(grid, 0.8, 1.2).unwrap();
        let t_end = 0.25;
        let run = |dt: f64| {
            let mut u = u0.clone();
            let steps = (t_end / dt).round() as usize;
            for _ in 0..steps {
                u = prop.step(&u, dt).unwrap();
            }
            u
        };
        let a = run(2e-3);
        let b = run(1e-3);
        let c = run(5e-4);
        let ratio = l2_diff(&a, &b) / l2_diff(&b, &c);
        assert!(
            (3.6..=4.4).contains(&ratio),
            "self-convergence ratio {ratio} outside the order-2 window"
        );
    }

    #[test]
    fn small_data_energy_drift_is_tiny() {
        let grid = RadialGrid::new(256, 8.0).unwrap();
        let mode = NonlinearMode::CubicNls;
        let prop = Propagator::new(&mode, grid).unwrap();
        let st = prop.transform();
        let u0 = RadialField::gaussian(grid, 0.01, 1.0).unwrap();
        let energy = |u: &RadialField| {
            let h1 = norm(u, NormKind::H1dot, st).unwrap().powi(2);
            let rho = u.density();
            let quartic = prop.ctx().interaction_integral(st, &rho).unwrap();
            0.5 * h1 - 0.25 * quartic
        };
        let e0 = energy(&u0);
        let mut u = u0;
        for _ in 0..1000 {
            u = prop.step(&u, 1e-3).unwrap();
        }
        let e1 = energy(&u);
        assert!(
            ((e1 - e0) / e0).abs() < 1e-8,
            "near-linear energy drifted: {e0} -> {e1}"
        );
    }

    #[test]
    fn hartree_run_conserves_mass_and_energy() {
        let grid = RadialGrid::new(256, 8.0).unwrap();
        let pot = Potential::log_core(2.0, 0.01).unwrap().with_amplitude(5.0).unwrap();
        let mode = NonlinearMode::Hartree(pot);
        let prop = Propagator::new(&mode, grid).unwrap();
        let st = prop.transform();
        let u0 = RadialField::gaussian(grid, 0.5, 1.0).unwrap();
        let energy = |u: &RadialField| {
            let h1 = norm(u, NormKind::H1dot, st).unwrap().powi(2);
            let quartic = prop.ctx().interaction_integral(st, &u.density()).unwrap();
            0.5 * h1 - 0.25 * quartic
        };
        let m0 = u0.mass().unwrap();
        let e0 = energy(&u0);
        let mut params = EvolveParams::new(0.3);
        params.policy = TimePolicy::Fixed(2.5e-4);
        let out = evolve(&prop, SolverState::new(u0, 0.0), &params, |_, _| Ok(())).unwrap();
        assert_eq!(out.state.status, Status::Completed, "run should complete");
        let m1 = out.state.u.mass().unwrap();
        let e1 = energy(&out.state.u);
        // Splitting conserves mass identically; the budget is FFT round-off
        // accumulated over the 1200 steps.
        assert!(((m1 - m0) / m0).abs() < 1e-11, "mass drift {m0} -> {m1}");
        assert!(((e1 - e0) / e0).abs() < 1e-7, "energy drift {e0} -> {e1}");
    }

    #[test]
    fn focusing_run_reaches_blowup_with_finite_estimate() {
        let grid = RadialGrid::new(256, 6.0).unwrap();
        let mode = NonlinearMode::CubicNls;
        let prop = Propagator::new(&mode, grid).unwrap();
        // Amplitude 5 gaussian has strongly negative cubic-NLS energy.
        let u0 = RadialField::gaussian(grid, 5.0, 1.0).unwrap();
        let mut params = EvolveParams::new(2.0);
        params.sample_stride = 2;
        let out = evolve(&prop, SolverState::new(u0, 0.0), &params, |_, _| Ok(())).unwrap();
        match out.state.status {
            Status::BlownUp { t_est } => {
                assert!(
                    t_est.is_finite() && t_est > 0.0 && t_est < 2.0,
                    "implausible blow-up estimate {t_est}"
                );
                assert!(
                    t_est >= out.state.t * 0.9,
                    "estimate {t_est} far before the last computed time {}",
                    out.state.t
                );
            }
            s => panic!("expected blow-up, got {s:?}"),
        }
        assert!(
            out.samples.iter().filter(|s| s.healthy).count() >= 8,
            "too few healthy samples for downstream fits"
        );
    }

    #[test]
    fn wide_data_flags_boundary_contamination() {
        let grid = RadialGrid::new(128, 8.0).unwrap();
        let mode = NonlinearMode::CubicNls;
        let prop = Propagator::new(&mode, grid).unwrap();
        let u0 = RadialField::gaussian(grid, 0.5, 6.0).unwrap();
        let params = EvolveParams::new(1.0);
        let out = evolve(&prop, SolverState::new(u0, 0.0), &params, |_, _| Ok(())).unwrap();
        assert_eq!(
            out.state.status,
            Status::BoundaryContaminated,
            "wide data must be rejected at the boundary check"
        );
    }

    #[test]
    fn zero_field_completes_quietly() {
        let grid = RadialGrid::new(64, 4.0).unwrap();
        let mode = NonlinearMode::CubicNls;
        let prop = Propagator::new(&mode, grid).unwrap();
        let u0 = RadialField::zero(grid);
        let params = EvolveParams::new(0.05);
        let mut rows = 0;
        let out = evolve(&prop, SolverState::new(u0, 0.0), &params, |_, _| {
            rows += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(out.state.status, Status::Completed);
        assert!(rows >= 2, "expected initial and terminal samples");
        assert_eq!(out.state.u.mass().unwrap(), 0.0);
    }

    #[test]
    fn renormalize_normalizes_h1_and_preserves_l3() {
        let grid = RadialGrid::new(512, 10.0).unwrap();
        let st = SineTransform::new(grid.n());
        let u = RadialField::gaussian(grid, 3.0, 1.2).unwrap();
        let l3_before = norm(&u, NormKind::L3, &st).unwrap();
        let view = renormalize(&u, &st, 0.7).unwrap();
        let st2 = SineTransform::new(view.v.grid().n());
        let h1 = norm(&view.v, NormKind::H1dot, &st2).unwrap();
        assert!(
            (h1 - 1.0).abs() < 1e-12,
            "renormalized H^1 seminorm is {h1}, not 1"
        );
        let l3_after = norm(&view.v, NormKind::L3, &st2).unwrap();
        assert!(
            ((l3_after - l3_before) / l3_before).abs() < 1e-12,
            "critical norm moved: {l3_before} -> {l3_after}"
        );
        assert_eq!(view.source_time, 0.7);
    }

    #[test]
    fn renormalize_rejects_extreme_scales() {
        let grid = RadialGrid::new(64, 4.0).unwrap();
        let st = SineTransform::new(grid.n());
        let u = RadialField::gaussian(grid, 1e5, 1.0).unwrap();
        match renormalize(&u, &st, 0.0) {
            Err(Error::ScaleOutOfRange { lambda, .. }) => {
                assert!(lambda < RESCALE_MIN, "lambda {lambda} should be tiny");
            }
            other => panic!("expected scale-out-of-range, got {other:?}"),
        }
    }
}
