//! End-to-end pipelines: blow-up rate reproduction and the boundedness probe.

use std::collections::BTreeMap;
use std::sync::Arc;

use hartree_blowup_core::ground_state::GroundStateBundle;
use hartree_blowup_core::hartree::{RadialConvolver, RieszKernel};
use hartree_blowup_core::law::{init_params, BlowupLawConstants, InitialParams};
use hartree_blowup_core::modulation::{
    assign_rescaled_time, fit_blowup, fit_exponent, unwrap_phase, DecomposeOptions, ModParams, PowerFit,
};
use hartree_blowup_core::profile::{solve_all, ProfileCoeffs};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::config::{Config, Initial};
use crate::error::{LabError, LabResult, StageExt};
use crate::field::CartesianField;
use crate::snapshot::{radial_to_cartesian, rescale_profile};
use crate::solver::{run, Evolution, EvolutionParams, RunControls, Sign, StopReason, Tracker, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Measured and reported without a verdict.
    Report,
}

/// A graded measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub name: String,
    pub status: Status,
    /// `None` when the quantity could not be measured.
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl CriterionOutcome {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        let status = if measured <= threshold { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, measured: finite(measured), threshold: finite(threshold), detail: detail.into() }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        let status = if measured >= threshold { Status::Pass } else { Status::Fail };
        Self { name: name.into(), status, measured: finite(measured), threshold: finite(threshold), detail: detail.into() }
    }

    pub fn report_only(mut self) -> Self {
        self.status = Status::Report;
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub script_c: f64,
    pub c_lambda: f64,
    pub c_b: f64,
    pub lambda_exponent: f64,
    pub b_exponent: f64,
}

impl From<&BlowupLawConstants> for ConstantsTable {
    fn from(c: &BlowupLawConstants) -> Self {
        Self {
            alpha: c.alpha,
            beta: c.beta,
            kappa: c.kappa(),
            script_c: c.script_c,
            c_lambda: c.c_lambda,
            c_b: c.c_b,
            lambda_exponent: c.lambda_exponent(),
            b_exponent: c.b_exponent(),
        }
    }
}

/// A power law `y = C (t_star - t)^p` fitted to a tracked series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub exponent: f64,
    /// Standard error of the slope of the log-log regression.
    pub stderr: Option<f64>,
    pub prefactor: f64,
    pub r2: f64,
    pub t_star: f64,
    pub samples: usize,
    pub expected_exponent: f64,
    pub relative_error: f64,
}

impl FitSummary {
    fn new(fit: &PowerFit, t_star: f64, samples: usize, expected: f64) -> Self {
        let stderr = (samples > 2 && fit.r2 > 0.0)
            .then(|| fit.exponent.abs() * ((1.0 / fit.r2 - 1.0).max(0.0) / (samples - 2) as f64).sqrt());
        Self {
            exponent: fit.exponent,
            stderr,
            prefactor: fit.prefactor,
            r2: fit.r2,
            t_star,
            samples,
            expected_exponent: expected,
            relative_error: (fit.exponent - expected).abs() / expected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stop: StopReason,
    pub steps: usize,
    pub samples: usize,
    pub t_start: f64,
    pub t_stop: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub max_grad_ratio: f64,
    pub note: Option<String>,
}

impl RunSummary {
    pub fn of(traj: &Trajectory) -> Self {
        let d = &traj.diagnostics;
        let g0 = d.first().map_or(f64::NAN, |x| x.grad_norm);
        Self {
            stop: traj.stop,
            steps: traj.steps,
            samples: d.len(),
            t_start: d.first().map_or(f64::NAN, |x| x.t),
            t_stop: d.last().map_or(f64::NAN, |x| x.t),
            mass_drift: traj.mass_drift(),
            energy_drift: traj.energy_drift(),
            max_grad_ratio: d.iter().map(|x| x.grad_norm / g0).fold(0.0, f64::max),
            note: traj.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub constants: Option<ConstantsTable>,
    pub initial: Option<InitialSummary>,
    pub lambda_fit: Option<FitSummary>,
    pub b_fit: Option<FitSummary>,
    pub run: RunSummary,
    pub criteria: Vec<CriterionOutcome>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(CriterionOutcome::passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSummary {
    pub lambda1: Option<f64>,
    pub b1: Option<f64>,
    pub t1: f64,
    pub s1: Option<f64>,
    pub energy: f64,
    pub mass: f64,
    pub extent: f64,
}

/// A report together with the series it was computed from.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub trajectory: Trajectory,
    /// Rescaled time and unwrapped phase of the tracked states.
    pub s: Vec<f64>,
    pub gamma_unwrapped: Vec<f64>,
}

pub fn config_echo(config: &Config) -> BTreeMap<String, String> {
    config.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Ground state and radial convolver of the configuration.
pub fn build_bundle(config: &Config) -> LabResult<(Arc<GroundStateBundle>, Arc<RadialConvolver>)> {
    let kernel = RieszKernel::new(config.sigma, config.dim).stage("hartree")?;
    let bundle = Arc::new(GroundStateBundle::standard(config.dim).stage("ground_state")?);
    let conv = Arc::new(RadialConvolver::new(bundle.grid().clone(), kernel).stage("hartree")?);
    Ok((bundle, conv))
}

pub fn build_profile(config: &Config) -> LabResult<ProfileCoeffs> {
    let (bundle, conv) = build_bundle(config)?;
    solve_all(config.k, bundle, conv).stage("profile")
}

pub fn evolution_params(config: &Config, extent: f64) -> EvolutionParams {
    EvolutionParams {
        dim: config.dim,
        sigma: config.sigma,
        sign: config.sign,
        hartree_weight: config.hartree_weight,
        extent,
        cells: config.cells,
        nonlinear: true,
        dealias: config.dealias,
    }
}

pub fn run_controls(config: &Config, t_end: Option<f64>, lambda_min: Option<f64>) -> RunControls {
    RunControls {
        c_dt: config.c_dt,
        dt_min: config.dt_min,
        dt_fixed: (config.dt > 0.0).then_some(config.dt),
        t_end,
        lambda_min,
        cadence: config.cadence,
        boundary_threshold: config.boundary_threshold,
        min_core_cells: config.min_core_cells,
        max_steps: config.max_steps,
        snapshot_every: config.snapshot_every,
    }
}

/// Multiplies by `1 + noise * w(x)` with `w` a seeded sum of low box modes.
fn perturb(field: &mut CartesianField, noise: f64, seed: u64) {
    if noise == 0.0 {
        return;
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let modes = 4;
    let coef: Vec<[f64; 4]> = (0..modes * field.dim()).map(|_| rng.gen::<[f64; 4]>()).collect();
    let xs = field.coords();
    let n = field.cells();
    let dim = field.dim();
    let w = std::f64::consts::TAU / field.extent();
    let axis_sum = |axis: usize, x: f64| -> Complex64 {
        (0..modes)
            .map(|m| {
                let c = coef[axis * modes + m];
                let k = w * (m + 1) as f64;
                Complex64::new(c[0] - 0.5, c[1] - 0.5) * (k * x).cos()
                    + Complex64::new(c[2] - 0.5, c[3] - 0.5) * (k * x).sin()
            })
            .sum()
    };
    for (idx, v) in field.values_mut().iter_mut().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        if dim == 1 {
            s += axis_sum(0, xs[idx]);
        } else {
            s += axis_sum(0, xs[idx / n]) + axis_sum(1, xs[idx % n]);
        }
        *v *= 1.0 + noise * s;
    }
}

/// Initial data of a configuration and, for profile data, its parameters.
pub struct InitialData {
    pub field: CartesianField,
    pub params: Option<(InitialParams, f64)>,
    pub constants: Option<BlowupLawConstants>,
}

pub fn initial_data(config: &Config, profile: Option<&ProfileCoeffs>, seed: u64) -> LabResult<InitialData> {
    match config.initial {
        Initial::Profile => {
            let profile = profile.ok_or_else(|| LabError::Shape("profile initial data needs a profile".into()))?;
            let constants = BlowupLawConstants::from_profile(profile).stage("blowup_law")?;
            let init = init_params(config.e0, config.s1, &constants, profile, config.lambda0).stage("blowup_law")?;
            let t1 = constants.t_of_s(config.s1).stage("blowup_law")?;
            let extent = config.box_cores * init.lambda;
            let mut field = rescale_profile(
                profile,
                ModParams::new(init.lambda, init.b, 0.0),
                config.dim,
                extent,
                config.cells,
                t1,
            )
            .stage("rescale_profile")?;
            perturb(&mut field, config.noise, seed);
            Ok(InitialData { field, params: Some((init, t1)), constants: Some(constants) })
        }
        Initial::GroundState => {
            let (bundle, _) = build_bundle(config)?;
            let q = bundle.field(bundle.q());
            let mut center = vec![0.0; config.dim];
            center[0] = config.shift;
            let mut field = radial_to_cartesian(&q, &center, config.box_extent, config.cells).stage("initial_data")?;
            perturb(&mut field, config.noise, seed);
            let scale = (bundle.mass / field.mass()).sqrt() * config.amplitude;
            field.values_mut().iter_mut().for_each(|v| *v *= scale);
            Ok(InitialData { field, params: None, constants: None })
        }
    }
}

/// Blow-up rate reproduction.
pub fn experiment_blowup(config: &Config, seed: u64) -> LabResult<ExperimentOutcome> {
    if config.sign != Sign::Plus {
        return Err(LabError::Shape("the blow-up experiment needs sign = +".into()));
    }
    RieszKernel::new(config.sigma, config.dim).and_then(|k| k.require_h2()).stage("hartree")?;
    let mut cfg = config.clone();
    cfg.initial = Initial::Profile;
    let profile = build_profile(&cfg)?;
    let init = initial_data(&cfg, Some(&profile), seed)?;
    let (params, t1) = init.params.unwrap();
    let constants = init.constants.unwrap();
    let extent = init.field.extent();
    let evolution = Evolution::new(evolution_params(&cfg, extent)).stage("nls_solver")?;
    let lambda_min = (cfg.lambda_decades > 0.0).then(|| params.lambda * 10f64.powf(-cfg.lambda_decades));
    let controls = run_controls(&cfg, None, lambda_min);
    let mass = init.field.mass();
    let tracker = Tracker::Modulation {
        profile: &profile,
        opts: DecomposeOptions::default(),
        guess: ModParams::new(params.lambda, params.b, 0.0),
    };
    let mut traj = run(&evolution, init.field, &controls, &tracker).stage("nls_solver")?;
    assign_rescaled_time(&mut traj.states, cfg.s1);
    let s: Vec<f64> = traj.states.iter().map(|x| x.s).collect();
    let gamma_unwrapped = unwrap_phase(&traj.states.iter().map(|x| x.gamma).collect::<Vec<_>>());

    let t: Vec<f64> = traj.states.iter().map(|x| x.t).collect();
    let lam: Vec<f64> = traj.states.iter().map(|x| x.lambda).collect();
    let b: Vec<f64> = traj.states.iter().map(|x| x.b).collect();
    let mut criteria = Vec::new();
    let (lambda_fit, b_fit) = match fit_blowup(&t, &lam) {
        Ok(f) => {
            let lf = FitSummary::new(&f.fit, f.t_star, t.len(), constants.lambda_exponent());
            let shifted: Vec<f64> = t.iter().map(|x| x - f.t_star).collect();
            let bf = fit_exponent(&shifted, &b)
                .ok()
                .map(|g| FitSummary::new(&g, f.t_star, t.len(), constants.b_exponent()));
            (Some(lf), bf)
        }
        Err(e) => {
            traj.note.get_or_insert_with(|| e.to_string());
            (None, None)
        }
    };
    let nan = f64::NAN;
    criteria.push(CriterionOutcome::at_most(
        "blowup_lambda_exponent",
        lambda_fit.as_ref().map_or(nan, |f| f.relative_error),
        0.10,
        format!(
            "fitted lambda exponent {:.4} vs 1/(1+sigma) = {:.4}",
            lambda_fit.as_ref().map_or(nan, |f| f.exponent),
            constants.lambda_exponent()
        ),
    ));
    criteria.push(CriterionOutcome::at_most(
        "blowup_b_exponent",
        b_fit.as_ref().map_or(nan, |f| f.relative_error),
        0.15,
        format!(
            "fitted b exponent {:.4} vs (1-sigma)/(1+sigma) = {:.4}",
            b_fit.as_ref().map_or(nan, |f| f.exponent),
            constants.b_exponent()
        ),
    ));
    criteria.push(CriterionOutcome::at_least(
        "blowup_fit_r2",
        lambda_fit.as_ref().map_or(nan, |f| f.r2),
        0.999,
        "r^2 of the lambda fit",
    ));
    let run_summary = RunSummary::of(&traj);
    criteria.push(CriterionOutcome::at_most(
        "blowup_mass_drift",
        run_summary.mass_drift,
        1e-10,
        "relative mass drift",
    ));
    let eps_max = traj.states.iter().map(|x| x.eps_h1).fold(0.0, f64::max);
    criteria.push(CriterionOutcome::at_most("blowup_eps_h1", eps_max, 0.1, "max ||eps||_H1 over the window"));
    let decades = match (lam.first(), lam.last()) {
        (Some(a), Some(z)) => (a / z).log10(),
        _ => 0.0,
    };
    criteria.push(CriterionOutcome::at_least(
        "blowup_window",
        decades,
        cfg.lambda_decades.min(1.0) * 0.999,
        format!("decades of lambda tracked; stop = {:?}", traj.stop),
    ));
    if let Some(f) = &lambda_fit {
        criteria.push(
            CriterionOutcome::at_most(
                "blowup_prefactor",
                (f.prefactor / constants.c_lambda - 1.0).abs(),
                f64::INFINITY,
                format!("fitted prefactor {:.4} vs C_lambda = {:.4}", f.prefactor, constants.c_lambda),
            )
            .report_only(),
        );
    }
    let report = ExperimentReport {
        experiment: "blowup".into(),
        seed,
        config: config_echo(&cfg),
        constants: Some(ConstantsTable::from(&constants)),
        initial: Some(InitialSummary {
            lambda1: Some(params.lambda),
            b1: Some(params.b),
            t1,
            s1: Some(cfg.s1),
            energy: params.energy,
            mass,
            extent,
        }),
        lambda_fit,
        b_fit,
        run: run_summary,
        criteria,
    };
    Ok(ExperimentOutcome { report, trajectory: traj, s, gamma_unwrapped })
}

/// Boundedness probe for the defocusing sign at critical mass.
pub fn experiment_global(config: &Config, seed: u64) -> LabResult<ExperimentOutcome> {
    if config.sign != Sign::Minus {
        return Err(LabError::Shape("the boundedness probe needs sign = -".into()));
    }
    let mut cfg = config.clone();
    cfg.initial = Initial::GroundState;
    let init = initial_data(&cfg, None, seed)?;
    let (bundle, _) = build_bundle(&cfg)?;
    let evolution = Evolution::new(evolution_params(&cfg, cfg.box_extent)).stage("nls_solver")?;
    let controls = run_controls(&cfg, Some(cfg.t_end), None);
    let mass = init.field.mass();
    let tracker = Tracker::Proxy { grad_q: bundle.grad_sq.sqrt() };
    let traj = run(&evolution, init.field, &controls, &tracker).stage("nls_solver")?;
    let run_summary = RunSummary::of(&traj);
    let critical = (cfg.amplitude - 1.0).abs() < 1e-12;
    let finish = |c: CriterionOutcome| if critical { c } else { c.report_only() };
    let mut ratio = CriterionOutcome::at_most(
        "global_grad_ratio",
        run_summary.max_grad_ratio,
        3.0,
        format!("max ||grad u(t)|| / ||grad u(0)||; stop = {:?}", traj.stop),
    );
    if traj.stop != StopReason::TimeReached {
        ratio.status = Status::Fail;
    }
    let criteria = vec![
        finish(ratio),
        finish(CriterionOutcome::at_most(
            "global_energy_drift",
            run_summary.energy_drift,
            1e-6,
            "relative energy drift",
        )),
        finish(CriterionOutcome::at_most("global_mass_drift", run_summary.mass_drift, 1e-10, "relative mass drift")),
    ];
    let report = ExperimentReport {
        experiment: "global".into(),
        seed,
        config: config_echo(&cfg),
        constants: None,
        initial: Some(InitialSummary {
            lambda1: None,
            b1: None,
            t1: cfg_t0(&traj),
            s1: None,
            energy: traj.diagnostics.first().map_or(f64::NAN, |d| d.energy),
            mass,
            extent: cfg.box_extent,
        }),
        lambda_fit: None,
        b_fit: None,
        run: run_summary,
        criteria,
    };
    Ok(ExperimentOutcome { report, trajectory: traj, s: Vec::new(), gamma_unwrapped: Vec::new() })
}

fn cfg_t0(traj: &Trajectory) -> f64 {
    traj.diagnostics.first().map_or(0.0, |d| d.t)
}
