//! Scenario construction and orchestration: run configs, persisted run
//! records, negative-energy data, the kernel-narrowing stability study,
//! blow-up rate tables, and parallel sweeps.
//!
//! Every persisted artifact embeds a hash of the canonical config text,
//! so records are traceable to the exact inputs that produced them. Runs
//! are deterministic functions of their config; a sweep executed on a
//! worker pool produces bitwise the same diagnostics as a serial loop.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convolution::{NonlinearCtx, NonlinearMode};
use crate::diagnostics::{
    coercivity_constant, conserved, estimate_blowup_time, local_mass, rate_fit, regime_report,
    virial, write_csv, DiagRow, RateFit, RateSample,
};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve, AdaptivePolicy, EvolveOutcome, EvolveParams, Propagator, SolverState, Status,
    TimePolicy,
};
use crate::field::RadialField;
use crate::grid::RadialGrid;
use crate::norms::{norm, rho_norm, NormKind};
use crate::potential::Potential;
use crate::snapshot::{read_snapshot, write_checkpoint, write_snapshot, CheckpointMeta};
use crate::spectral::SineTransform;
use crate::CONFIG_SCHEMA_VERSION;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub r_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Gaussian { amplitude: f64, width: f64 },
    Snapshot { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    /// Fixed step when set; otherwise the adaptive policy below.
    pub fixed_dt: Option<f64>,
    pub cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Blow-up declared when |grad u|^2 exceeds threshold^2 times its
    /// initial value.
    pub blowup_threshold: f64,
    pub sample_stride: u64,
    pub max_steps: u64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let p = AdaptivePolicy::default();
        IntegratorSection {
            fixed_dt: None,
            cfl: p.cfl,
            dt_min: p.dt_min,
            dt_max: p.dt_max,
            blowup_threshold: crate::evolution::BLOWUP_NORM_FACTOR,
            sample_stride: 4,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// Virial cutoff radius; default r_max / 3.2 keeps 3R inside the box.
    pub virial_radius: Option<f64>,
    /// Ball parameter for the weighted local-mass column.
    pub local_mass_d: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            virial_radius: None,
            local_mass_d: 1.0,
        }
    }
}

fn default_schema() -> u32 {
    CONFIG_SCHEMA_VERSION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    /// Default output directory; callers may override.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub grid: GridSection,
    pub mode: NonlinearMode,
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Parse(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                Error::ConfigNotFound(path.display().to_string())
            }
            _ => Error::Io(e),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(format!("run config: {e}")))
    }

    /// Hex SHA-256 of the canonical (re-serialized) config text, so two
    /// documents naming the same run hash identically.
    pub fn hash(&self) -> Result<String> {
        let canon = self.to_toml_string()?;
        let mut h = Sha256::new();
        h.update(canon.as_bytes());
        Ok(format!("{:x}", h.finalize()))
    }

    pub fn grid_spec(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.grid.n, self.grid.r_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "config schema {} not supported (this build expects {})",
                self.schema, CONFIG_SCHEMA_VERSION
            )));
        }
        let grid = self.grid_spec()?;
        if let NonlinearMode::Hartree(pot) = &self.mode {
            validate_potential(pot)?;
        }
        match &self.initial {
            InitialSpec::Gaussian { amplitude, width } => {
                if !(amplitude.is_finite() && *amplitude > 0.0 && width.is_finite() && *width > 0.0)
                {
                    return Err(Error::InvalidConfig(format!(
                        "gaussian initial data needs positive amplitude and width, got {amplitude}, {width}"
                    )));
                }
            }
            InitialSpec::Snapshot { .. } => {}
        }
        self.evolve_params().validate()?;
        if let Some(radius) = self.diagnostics.virial_radius {
            if !(radius > 0.0 && 3.0 * radius < grid.r_max()) {
                return Err(Error::InvalidConfig(format!(
                    "virial radius {radius} needs 0 < 3R < r_max = {}",
                    grid.r_max()
                )));
            }
        }
        if !(self.diagnostics.local_mass_d > 0.0 && self.diagnostics.local_mass_d.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "local_mass_d must be positive and finite, got {}",
                self.diagnostics.local_mass_d
            )));
        }
        Ok(())
    }

    pub fn evolve_params(&self) -> EvolveParams {
        let mut params = EvolveParams::new(self.t_end);
        params.policy = match self.integrator.fixed_dt {
            Some(dt) => TimePolicy::Fixed(dt),
            None => TimePolicy::Adaptive(AdaptivePolicy {
                cfl: self.integrator.cfl,
                dt_min: self.integrator.dt_min,
                dt_max: self.integrator.dt_max,
            }),
        };
        params.sample_stride = self.integrator.sample_stride;
        params.max_steps = self.integrator.max_steps;
        params.blowup_factor = self.integrator.blowup_threshold;
        params
    }

    pub fn virial_radius(&self) -> f64 {
        self.diagnostics
            .virial_radius
            .unwrap_or(self.grid.r_max / 3.2)
    }

    pub fn initial_field(&self) -> Result<RadialField> {
        let grid = self.grid_spec()?;
        match &self.initial {
            InitialSpec::Gaussian { amplitude, width } => {
                RadialField::gaussian(grid, *amplitude, *width)
            }
            InitialSpec::Snapshot { path } => {
                let (u, _) = read_snapshot(path)?;
                if !u.grid().same_as(&grid) {
                    return Err(Error::GridMismatch(format!(
                        "snapshot grid ({}, {}) does not match config grid ({}, {})",
                        u.grid().n(),
                        u.grid().r_max(),
                        grid.n(),
                        grid.r_max()
                    )));
                }
                Ok(u)
            }
        }
    }
}

/// Re-run the constructors so hand-written documents get the same
/// parameter screening as code-built kernels.
fn validate_potential(pot: &Potential) -> Result<()> {
    use crate::potential::PotentialKind;
    let base = match pot.kind() {
        PotentialKind::LogCore { alpha_log, delta } => Potential::log_core(*alpha_log, *delta)?,
        PotentialKind::Gaussian { width } => Potential::gaussian(*width)?,
        PotentialKind::InverseCubeReg { core_radius } => {
            Potential::inverse_cube_reg(*core_radius)?
        }
        PotentialKind::Delta => Potential::delta(),
    };
    base.with_amplitude(pot.amplitude())?.scaled(pot.eps())?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub status: String,
    pub t_final: f64,
    pub steps: u64,
    pub budget_exhausted: bool,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// Extrapolated blow-up time, when the scale history supports a fit.
    pub t_est: Option<f64>,
    pub gamma_hat: Option<f64>,
    pub c_quarter: Option<f64>,
    /// Regime predicates: initial-size, time-horizon and depth checks.
    pub m0: f64,
    pub m0_large: bool,
    pub tau_energy_small: bool,
    pub depth_energy_small: bool,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config_hash: String,
    pub status: String,
    pub csv_path: PathBuf,
    pub snapshot_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub summary: RunSummary,
}

/// Reconstruct the record of a finished run from its output directory.
pub fn load_record(out_dir: &Path) -> Result<RunRecord> {
    let summary_path = out_dir.join("summary.toml");
    let text = std::fs::read_to_string(&summary_path)?;
    let summary: RunSummary =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("run summary: {e}")))?;
    let mut snapshot_paths = vec![out_dir.join("initial.snap")];
    let final_snap = out_dir.join("final.snap");
    if final_snap.exists() {
        snapshot_paths.push(final_snap);
    }
    Ok(RunRecord {
        config_hash: summary.config_hash.clone(),
        status: summary.status.clone(),
        csv_path: out_dir.join("diagnostics.csv"),
        snapshot_paths,
        summary_path,
        summary,
    })
}

/// Execute one configured run into `out_dir`, persisting the diagnostic
/// CSV, initial/final snapshots and a summary. Re-running an unchanged
/// config against existing outputs returns the stored record; `force`
/// recomputes and overwrites. A changed config refuses to clobber a
/// foreign output directory unless forced.
pub fn run_scenario(config: &RunConfig, out_dir: &Path, force: bool) -> Result<RunRecord> {
    config.validate()?;
    let hash = config.hash()?;
    let summary_path = out_dir.join("summary.toml");
    if summary_path.exists() && !force {
        let existing = load_record(out_dir)?;
        if existing.config_hash == hash {
            return Ok(existing);
        }
        return Err(Error::InvalidConfig(format!(
            "output directory {} holds results for config {}; pass force to overwrite",
            out_dir.display(),
            &existing.config_hash[..12.min(existing.config_hash.len())]
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let marker = out_dir.join("INCOMPLETE");
    std::fs::write(&marker, format!("config {hash}\n"))?;
    if summary_path.exists() {
        std::fs::remove_file(&summary_path)?;
    }

    std::fs::write(out_dir.join("config.toml"), config.to_toml_string()?)?;
    let grid = config.grid_spec()?;
    let prop = Propagator::new(&config.mode, grid)?;
    let st = prop.transform();
    let ctx = prop.ctx();
    let u0 = config.initial_field()?;
    let radius = config.virial_radius();
    let d_ball = config.diagnostics.local_mass_d;

    let initial_path = out_dir.join("initial.snap");
    write_snapshot(&initial_path, &u0, 0.0)?;
    let c0 = conserved(&u0, st, ctx)?;

    let mut rows: Vec<DiagRow> = Vec::new();
    let params = config.evolve_params();
    let outcome: EvolveOutcome = evolve(
        &prop,
        SolverState::new(u0, 0.0),
        &params,
        |state, sample| {
            let c = conserved(&state.u, st, ctx)?;
            let v = virial(&state.u, st, ctx, radius)?;
            let l3 = norm(&state.u, NormKind::L3, st)?;
            let lambda = 1.0 / sample.h1dot_sq;
            let sqrt_t = state.t.max(0.0).sqrt();
            let rho_col = if state.t > 0.0 && sqrt_t <= grid.r_max() / 2.0 {
                rho_norm(&state.u, sqrt_t)?
            } else {
                f64::NAN
            };
            let lm_col = if lambda.is_finite() && lambda > 0.0 && d_ball * lambda < grid.r_max()
            {
                local_mass(&state.u, d_ball, lambda)?
            } else {
                f64::NAN
            };
            rows.push(DiagRow {
                t: state.t,
                dt: state.dt,
                mass: c.mass,
                energy: c.energy,
                h1: sample.h1dot_sq.max(0.0).sqrt(),
                l3,
                lambda,
                rho_at_sqrt_t: rho_col,
                va: v.v_a,
                pa: v.p_a,
                kv: v.k_v,
                local_mass: lm_col,
                status: state.status.as_str(),
            });
            Ok(())
        },
    )?;

    let csv_path = out_dir.join("diagnostics.csv");
    write_csv(&csv_path, &rows)?;

    let final_path = out_dir.join("final.snap");
    write_checkpoint(
        &final_path,
        &outcome.state.u,
        &CheckpointMeta {
            t: outcome.state.t,
            dt: outcome.state.dt,
            step_count: outcome.state.step_count,
            mode: config.mode.clone(),
        },
    )?;

    // Rate fit against each run's own scale history, when it supports one.
    let t_est = match outcome.state.status {
        Status::BlownUp { t_est } => Some(t_est),
        _ => estimate_blowup_time(&outcome.samples).ok(),
    };
    let fit = t_est.and_then(|t| {
        let rate_samples: Vec<RateSample> = outcome
            .samples
            .iter()
            .zip(rows.iter())
            .filter(|(s, _)| s.healthy)
            .map(|(s, row)| RateSample {
                t: s.t,
                l3: row.l3,
                h1dot: s.h1dot_sq.max(0.0).sqrt(),
            })
            .collect();
        rate_fit(&rate_samples, t).ok()
    });

    let (mass_drift, energy_drift) = {
        let c1 = conserved(&outcome.state.u, st, ctx)?;
        (
            (c1.mass - c0.mass).abs() / c0.mass.max(f64::MIN_POSITIVE),
            (c1.energy - c0.energy).abs() / c0.energy.abs().max(1.0),
        )
    };

    let healthy: Vec<_> = outcome.samples.iter().filter(|s| s.healthy).collect();
    let tau_star = healthy
        .windows(2)
        .map(|p| 0.5 * (p[0].h1dot_sq + p[1].h1dot_sq) * (p[1].t - p[0].t))
        .sum::<f64>();
    let lambda_min = healthy
        .iter()
        .map(|s| 1.0 / s.h1dot_sq)
        .fold(f64::INFINITY, f64::min);
    let c_v = coercivity_constant(ctx.coupling_l1()).unwrap_or(f64::NAN);
    let l3_initial = rows.first().map(|r| r.l3).unwrap_or(f64::NAN);
    let regime = regime_report(
        l3_initial,
        c_v,
        c0.energy,
        tau_star,
        lambda_min.clamp(f64::MIN_POSITIVE, 1.0),
    );

    let summary = RunSummary {
        config_hash: hash.clone(),
        status: outcome.state.status.as_str().to_string(),
        t_final: outcome.state.t,
        steps: outcome.state.step_count,
        budget_exhausted: outcome.budget_exhausted,
        mass_drift,
        energy_drift,
        t_est,
        gamma_hat: fit.as_ref().map(|f| f.gamma_hat),
        c_quarter: fit.as_ref().map(|f| f.c_quarter),
        m0: regime.m0,
        m0_large: regime.m0_large,
        tau_energy_small: regime.tau_energy_small,
        depth_energy_small: regime.depth_energy_small,
    };
    let text = toml::to_string_pretty(&summary)
        .map_err(|e| Error::Parse(format!("run summary: {e}")))?;
    std::fs::write(&summary_path, text)?;
    std::fs::remove_file(&marker)?;

    Ok(RunRecord {
        config_hash: hash,
        status: summary.status.clone(),
        csv_path,
        snapshot_paths: vec![initial_path, final_path],
        summary_path,
        summary,
    })
}

/// Run a batch of configs on up to `workers` threads (capped at 4).
/// Output lands under `out_root/run-<hash12>`. Results come back in
/// input order and are bitwise identical to a serial execution.
pub fn sweep(
    configs: &[RunConfig],
    out_root: &Path,
    workers: usize,
    force: bool,
) -> Result<Vec<RunRecord>> {
    use rayon::prelude::*;
    let workers = workers.clamp(1, 4);
    let jobs: Vec<(usize, &RunConfig, PathBuf)> = configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let hash = c.hash()?;
            Ok((i, c, out_root.join(format!("run-{}", &hash[..12]))))
        })
        .collect::<Result<_>>()?;
    {
        let mut dirs: Vec<&PathBuf> = jobs.iter().map(|(_, _, d)| d).collect();
        dirs.sort();
        dirs.dedup();
        if dirs.len() != jobs.len() {
            return Err(Error::InvalidConfig(
                "sweep contains duplicate configs (identical hashes)".into(),
            ));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let mut results: Vec<(usize, Result<RunRecord>)> = pool.install(|| {
        jobs.par_iter()
            .map(|(i, c, dir)| (*i, run_scenario(c, dir, force)))
            .collect()
    });
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}

/// Smallest-amplitude Gaussian bump (times a 1.5 safety factor) whose
/// interaction energy beats its kinetic energy. The threshold exists for
/// any kernel with positive mass because the kinetic term is quadratic
/// in the amplitude while the interaction term is quartic.
pub fn make_negative_energy_data(
    pot: &Potential,
    width: f64,
    grid: RadialGrid,
) -> Result<RadialField> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "data width must be positive, got {width}"
        )));
    }
    let st = SineTransform::new(grid.n());
    let ctx = NonlinearCtx::new(&NonlinearMode::Hartree(pot.clone()), grid)?;
    let energy_at = |amp: f64| -> Result<f64> {
        let u = RadialField::gaussian(grid, amp, width)?;
        Ok(conserved(&u, &st, &ctx)?.energy)
    };
    let mut lo = 1e-2;
    if energy_at(lo)? < 0.0 {
        // Already negative at tiny amplitude: walk the bracket down.
        while lo > 1e-12 && energy_at(lo)? < 0.0 {
            lo /= 2.0;
        }
    }
    let mut hi = lo;
    let mut doublings = 0;
    while energy_at(hi)? >= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::KernelTooWeak(format!(
                "no negative-energy amplitude below {hi:e} for width {width}"
            )));
        }
    }
    let mut lo = hi / 2.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if energy_at(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let amp = 1.5 * hi;
    let u = RadialField::gaussian(grid, amp, width)?;
    let e = conserved(&u, &st, &ctx)?.energy;
    if !(e < 0.0) {
        return Err(Error::KernelTooWeak(format!(
            "amplitude search converged to {amp} but energy is {e}"
        )));
    }
    Ok(u)
}

#[derive(Debug, Clone)]
pub struct StabilityRow {
    pub eps: f64,
    /// max over shared sample times of the H1dot distance to the local
    /// reference run.
    pub sup_h1_err: f64,
}

/// Compare the pair-interaction flow against its local limit as the
/// kernel narrows. The base kernel is rescaled to unit mass, every run
/// shares one grid and one fixed step, and errors are read at shared
/// sample times only.
pub fn stability_experiment(
    u0: &RadialField,
    base: &Potential,
    eps_list: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Vec<StabilityRow>> {
    if eps_list.is_empty() {
        return Err(Error::InvalidConfig("empty eps list".into()));
    }
    let grid = *u0.grid();
    let unit = base.normalized_l1()?;
    let mut params = EvolveParams::new(t_end);
    params.policy = TimePolicy::Fixed(dt);
    params.validate()?;

    let reference = Propagator::new(&NonlinearMode::CubicNls, grid)?;
    let mut ref_fields: Vec<(f64, RadialField)> = Vec::new();
    let ref_outcome = evolve(
        &reference,
        SolverState::new(u0.clone(), 0.0),
        &params,
        |state, sample| {
            ref_fields.push((sample.t, state.u.clone()));
            Ok(())
        },
    )?;
    if ref_outcome.state.status != Status::Completed {
        return Err(Error::ExperimentRefused(format!(
            "local reference run ended {} at t = {}; stability comparison needs a full interval",
            ref_outcome.state.status.as_str(),
            ref_outcome.state.t
        )));
    }

    let st = SineTransform::new(grid.n());
    let mut table = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let pot = unit.scaled(eps)?;
        let prop = Propagator::new(&NonlinearMode::Hartree(pot), grid)?;
        let mut sup_err: f64 = 0.0;
        let mut idx = 0usize;
        let outcome = evolve(
            &prop,
            SolverState::new(u0.clone(), 0.0),
            &params,
            |state, sample| {
                let (t_ref, u_ref) = &ref_fields[idx];
                debug_assert_eq!(sample.t.to_bits(), t_ref.to_bits(), "shared sample clocks");
                let diff: Vec<_> = state
                    .u
                    .values()
                    .iter()
                    .zip(u_ref.values())
                    .map(|(a, b)| a - b)
                    .collect();
                let d = RadialField::from_values(grid, diff)?;
                sup_err = sup_err.max(norm(&d, NormKind::H1dot, &st)?);
                idx += 1;
                Ok(())
            },
        )?;
        if outcome.state.status != Status::Completed {
            return Err(Error::ExperimentRefused(format!(
                "narrowed-kernel run at eps = {eps} ended {} before t_end",
                outcome.state.status.as_str()
            )));
        }
        table.push(StabilityRow {
            eps,
            sup_h1_err: sup_err,
        });
    }
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct RateTableRow {
    pub amplitude: f64,
    pub status: String,
    pub t_est: Option<f64>,
    pub fit: Option<RateFit>,
    /// BoundaryContaminated runs stay in the table but are marked invalid.
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct RateTable {
    pub rows: Vec<RateTableRow>,
    /// Relative shift of the first amplitude's blow-up estimate under a
    /// node-doubling rerun.
    pub t_est_shift: Option<f64>,
}

fn rate_run(
    pot: &Potential,
    amplitude: f64,
    width: f64,
    grid: RadialGrid,
    t_horizon: f64,
) -> Result<(Status, Option<f64>, Option<RateFit>)> {
    let prop = Propagator::new(&NonlinearMode::Hartree(pot.clone()), grid)?;
    let st = prop.transform();
    let u0 = RadialField::gaussian(grid, amplitude, width)?;
    let e0 = conserved(&u0, st, prop.ctx())?.energy;
    if !(e0 < 0.0) {
        return Err(Error::ExperimentRefused(format!(
            "amplitude {amplitude} has energy {e0} >= 0; rate study needs negative energy"
        )));
    }
    let mut params = EvolveParams::new(t_horizon);
    // A fast collapse leaves few healthy steps; sample every one of them.
    params.sample_stride = 1;
    let mut rate_samples: Vec<RateSample> = Vec::new();
    let outcome = evolve(
        &prop,
        SolverState::new(u0, 0.0),
        &params,
        |state, sample| {
            if sample.healthy {
                rate_samples.push(RateSample {
                    t: sample.t,
                    l3: norm(&state.u, NormKind::L3, st)?,
                    h1dot: sample.h1dot_sq.max(0.0).sqrt(),
                });
            }
            Ok(())
        },
    )?;
    let t_est = match outcome.state.status {
        Status::BlownUp { t_est } => Some(t_est),
        _ => None,
    };
    let fit = t_est.and_then(|t| rate_fit(&rate_samples, t).ok());
    Ok((outcome.state.status, t_est, fit))
}

/// One blow-up run per amplitude with a common data profile; the first
/// amplitude is rerun at doubled resolution to report the stability of
/// the extrapolated time.
pub fn blowup_rate_experiment(
    pot: &Potential,
    amplitudes: &[f64],
    width: f64,
    grid: RadialGrid,
    t_horizon: f64,
) -> Result<RateTable> {
    if amplitudes.is_empty() {
        return Err(Error::InvalidConfig("empty amplitude list".into()));
    }
    let mut rows = Vec::with_capacity(amplitudes.len());
    for &amp in amplitudes {
        let (status, t_est, fit) = rate_run(pot, amp, width, grid, t_horizon)?;
        let valid = status != Status::BoundaryContaminated;
        rows.push(RateTableRow {
            amplitude: amp,
            status: status.as_str().to_string(),
            t_est,
            fit,
            valid,
        });
    }
    let t_est_shift = match rows.first().and_then(|r| if r.valid { r.t_est } else { None }) {
        Some(t_coarse) => {
            // Node doubling n -> 2n + 1 halves dr exactly.
            let fine = RadialGrid::new(2 * grid.n() + 1, grid.r_max())?;
            let (_, t_fine, _) = rate_run(pot, amplitudes[0], width, fine, t_horizon)?;
            t_fine.map(|tf| (tf - t_coarse).abs() / t_coarse)
        }
        None => None,
    };
    Ok(RateTable { rows, t_est_shift })
}
