//! The work behind each command-line subcommand. Every command writes its
//! files into an existing output directory and returns whether all of its
//! graded criteria passed.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use hartree_blowup_core::law::{init_params, BlowupLawConstants};
use hartree_blowup_core::modulation::DecomposeOptions;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Initial};
use crate::error::{LabError, LabResult, StageExt};
use crate::experiments::{
    build_bundle, build_profile, config_echo, evolution_params, experiment_blowup, experiment_global,
    initial_data, run_controls, ConstantsTable, ExperimentOutcome, RunSummary,
};
use crate::field::Fft2;
use crate::io::{require_dir, write_diagnostics_csv, write_json, write_radial_csv, write_snapshot};
use crate::snapshot::{decompose_field, initial_guess};
use crate::solver::{run, Evolution, Tracker};

fn text_file(path: &Path, text: &str) -> LabResult<()> {
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub dim: usize,
    pub q0: f64,
    pub mass: f64,
    pub variance: f64,
    pub grad_sq: f64,
    pub residual: f64,
    pub rho_residual: f64,
    pub iterations: usize,
    pub radius: f64,
    pub intervals: usize,
}

pub fn ground_state(config: &Config, out: &Path) -> LabResult<bool> {
    require_dir(out)?;
    let (bundle, _) = build_bundle(config)?;
    write_radial_csv(&out.join("ground_state.csv"), &bundle.field(bundle.q()))?;
    write_radial_csv(&out.join("rho.csv"), &bundle.field(bundle.rho()))?;
    let g = bundle.grid();
    let summary = GroundStateSummary {
        dim: bundle.dim(),
        q0: bundle.q()[0],
        mass: bundle.mass,
        variance: bundle.variance,
        grad_sq: bundle.grad_sq,
        residual: bundle.residual,
        rho_residual: bundle.rho_residual,
        iterations: bundle.iterations,
        radius: g.radius(),
        intervals: g.intervals(),
    };
    write_json(&out.join("ground_state.json"), &summary)?;
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSummary {
    pub j: usize,
    pub k: usize,
    pub beta: f64,
    pub solvability: f64,
    pub dropped_row: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub dim: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub truncation: usize,
    pub beta: f64,
    pub beta_by_orthogonality: f64,
    pub formal_residual: f64,
    pub terms: Vec<TermSummary>,
}

pub fn profile(config: &Config, out: &Path) -> LabResult<bool> {
    require_dir(out)?;
    let p = build_profile(config)?;
    let b = p.bundle();
    for t in p.terms() {
        write_radial_csv(&out.join(format!("p_plus_{}_{}.csv", t.j, t.k)), &b.field(&t.plus))?;
        write_radial_csv(&out.join(format!("p_minus_{}_{}.csv", t.j, t.k)), &b.field(&t.minus))?;
    }
    let summary = ProfileSummary {
        dim: p.dim(),
        sigma: p.sigma(),
        alpha: p.alpha(),
        truncation: p.truncation(),
        beta: p.beta(),
        beta_by_orthogonality: p.beta_by_orthogonality(),
        formal_residual: p.formal_residual(),
        terms: p
            .terms()
            .iter()
            .map(|t| TermSummary { j: t.j, k: t.k, beta: t.beta, solvability: t.solvability, dropped_row: t.dropped_row })
            .collect(),
    };
    write_json(&out.join("profile.json"), &summary)?;
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawSummary {
    pub constants: ConstantsTable,
    pub e0: f64,
    pub s1: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub b1: f64,
    pub t1: f64,
    pub energy: f64,
}

pub fn law(config: &Config, out: &Path) -> LabResult<bool> {
    require_dir(out)?;
    let p = build_profile(config)?;
    let c = BlowupLawConstants::from_profile(&p).stage("blowup_law")?;
    let init = init_params(config.e0, config.s1, &c, &p, config.lambda0).stage("blowup_law")?;
    let t1 = c.t_of_s(config.s1).stage("blowup_law")?;
    let mut csv = String::from("s,t,lambda_app,b_app\n");
    for i in 0..=200 {
        let s = config.s1 * 10f64.powf(2.0 * i as f64 / 200.0);
        let (l, b) = c.app_law(s);
        let _ = writeln!(csv, "{s:e},{:e},{l:e},{b:e}", c.t_of_s(s)?);
    }
    text_file(&out.join("law.csv"), &csv)?;
    let summary = LawSummary {
        constants: ConstantsTable::from(&c),
        e0: config.e0,
        s1: config.s1,
        lambda0: config.lambda0,
        lambda1: init.lambda,
        b1: init.b,
        t1,
        energy: init.energy,
    };
    write_json(&out.join("law.json"), &summary)?;
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub seed: u64,
    pub config: std::collections::BTreeMap<String, String>,
    pub run: RunSummary,
    pub snapshots: Vec<String>,
}

pub fn simulate(config: &Config, out: &Path, seed: u64) -> LabResult<bool> {
    require_dir(out)?;
    let profile = match config.initial {
        Initial::Profile => Some(build_profile(config)?),
        Initial::GroundState => None,
    };
    let init = initial_data(config, profile.as_ref(), seed)?;
    let t_end = match config.initial {
        Initial::Profile => None,
        Initial::GroundState => Some(config.t_end),
    };
    let lambda_min = init
        .params
        .filter(|_| config.lambda_decades > 0.0)
        .map(|(p, _)| p.lambda * 10f64.powf(-config.lambda_decades));
    let evolution = Evolution::new(evolution_params(config, init.field.extent())).stage("nls_solver")?;
    let controls = run_controls(config, t_end, lambda_min);
    let (bundle, _) = build_bundle(config)?;
    let tracker = match (&profile, init.params) {
        (Some(p), Some((ip, _))) if config.tracking => Tracker::Modulation {
            profile: p,
            opts: DecomposeOptions::default(),
            guess: hartree_blowup_core::modulation::ModParams::new(ip.lambda, ip.b, 0.0),
        },
        _ => Tracker::Proxy { grad_q: bundle.grad_sq.sqrt() },
    };
    let traj = run(&evolution, init.field, &controls, &tracker).stage("nls_solver")?;
    write_diagnostics_csv(&out.join("diagnostics.csv"), &traj.diagnostics)?;
    let mut names = Vec::new();
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let stem = format!("snapshot_{i:04}");
        write_snapshot(&out.join(&stem), snap)?;
        names.push(stem);
    }
    write_snapshot(&out.join("snapshot_last"), &traj.last)?;
    names.push("snapshot_last".into());
    let summary = SimulationSummary { seed, config: config_echo(config), run: RunSummary::of(&traj), snapshots: names };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(!traj.stop.is_failure())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub snapshot: String,
    pub t: f64,
    pub lambda: f64,
    pub b: f64,
    pub gamma: f64,
    pub eps_h1: f64,
    pub eps_var: f64,
    pub nonradial: f64,
    pub residuals: [f64; 3],
    pub iterations: usize,
    pub in_tube: bool,
}

pub fn decompose(config: &Config, out: &Path) -> LabResult<bool> {
    require_dir(out)?;
    if config.snapshot.is_empty() {
        return Err(LabError::Config { line: 0, msg: "decompose needs the snapshot key".into() });
    }
    let field = crate::io::read_snapshot(Path::new(&config.snapshot))?;
    let profile = build_profile(config)?;
    let fft = Fft2::new(field.dim(), field.cells());
    let guess = initial_guess(&field, &fft, &profile);
    // single-precision input limits the attainable residual
    let scale = field.mass().max(1.0);
    let opts = DecomposeOptions { tol: 1e-6 * scale, ..DecomposeOptions::default() };
    let s = decompose_field(&field, &fft, &profile, guess, &opts).stage("modulation")?;
    write_radial_csv(&out.join("epsilon.csv"), &s.epsilon)?;
    let summary = DecompositionSummary {
        snapshot: config.snapshot.clone(),
        t: s.t,
        lambda: s.lambda,
        b: s.b,
        gamma: s.gamma,
        eps_h1: s.eps_h1,
        eps_var: s.eps_var,
        nonradial: s.nonradial,
        residuals: s.residuals,
        iterations: s.iterations,
        in_tube: s.in_tube,
    };
    write_json(&out.join("decomposition.json"), &summary)?;
    Ok(s.in_tube)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

/// Writes `report.json`, `diagnostics.csv`, `modulation.csv` and `timing.json`.
pub fn emit_outcome(outcome: &ExperimentOutcome, out: &Path, seconds: f64) -> LabResult<()> {
    require_dir(out)?;
    emit_report(&outcome.report, &out.join("report.json"))?;
    write_diagnostics_csv(&out.join("diagnostics.csv"), &outcome.trajectory.diagnostics)?;
    let mut csv = String::from("t,s,lambda,b,gamma,eps_h1,eps_var,nonradial\n");
    for (i, st) in outcome.trajectory.states.iter().enumerate() {
        let s = outcome.s.get(i).copied().unwrap_or(f64::NAN);
        let g = outcome.gamma_unwrapped.get(i).copied().unwrap_or(st.gamma);
        let _ = writeln!(
            csv,
            "{:e},{s:e},{:e},{:e},{g:e},{:e},{:e},{:e}",
            st.t, st.lambda, st.b, st.eps_h1, st.eps_var, st.nonradial
        );
    }
    text_file(&out.join("modulation.csv"), &csv)?;
    write_json(&out.join("timing.json"), &Timing { wall_clock_seconds: seconds })
}

pub fn emit_report(report: &crate::experiments::ExperimentReport, path: &Path) -> LabResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        require_dir(dir)?;
    }
    write_json(path, report)
}

pub fn blowup(config: &Config, out: &Path, seed: u64) -> LabResult<bool> {
    require_dir(out)?;
    let start = Instant::now();
    let outcome = experiment_blowup(config, seed)?;
    emit_outcome(&outcome, out, start.elapsed().as_secs_f64())?;
    Ok(outcome.report.passed())
}

pub fn global(config: &Config, out: &Path, seed: u64) -> LabResult<bool> {
    require_dir(out)?;
    let start = Instant::now();
    let outcome = experiment_global(config, seed)?;
    emit_outcome(&outcome, out, start.elapsed().as_secs_f64())?;
    Ok(outcome.report.passed())
}
