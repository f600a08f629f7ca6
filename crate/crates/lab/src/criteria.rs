//! The ten acceptance checks, each reduced to graded measurements.

use std::sync::Arc;
use std::time::Instant;

use hartree_blowup_core::ground_state::GroundStateBundle;
use hartree_blowup_core::hartree::{RadialConvolver, RieszKernel};
use hartree_blowup_core::law::{init_params, BlowupLawConstants, LAMBDA0};
use hartree_blowup_core::modulation::{DecomposeOptions, ModParams};
use hartree_blowup_core::profile::{solve_s00, ProfileCoeffs, EPS_WEIGHT};
use hartree_blowup_core::radial::{interpolate, Parity, RadialField, RadialGrid};

use crate::config::Config;
use crate::convolution::CartesianHartree;
use crate::error::{LabResult, StageExt};
use crate::experiments::{build_profile, experiment_blowup, experiment_global, CriterionOutcome};
use crate::field::Fft2;
use crate::snapshot::{decompose_field, radial_to_cartesian, rescale_profile};

pub const COUNT: usize = 10;

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<CriterionOutcome>,
    pub seconds: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CriterionOutcome::passed)
    }

    /// One summary line: verdict, title, then every measurement.
    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let m = c.measured.map_or("n/a".into(), |v| format!("{v:.3e}"));
                let t = c.threshold.map_or(String::new(), |v| format!(" (limit {v:.3e})"));
                format!("{} = {m}{t} {:?}", c.name, c.status)
            })
            .collect();
        format!(
            "criterion {:>2} {verdict} {} [{:.1} s]: {}",
            self.id,
            self.title,
            self.seconds,
            parts.join("; ")
        )
    }
}

pub fn title(id: usize) -> &'static str {
    match id {
        1 => "ground-state exactness",
        2 => "operator identities",
        3 => "profile solvability",
        4 => "energy expansion",
        5 => "approximate law",
        6 => "residual scaling",
        7 => "modulation round trip",
        8 => "blow-up rate",
        9 => "boundedness probe",
        10 => "Hartree correctness",
        _ => "unknown",
    }
}

/// Runs criterion `id` in `1..=COUNT`.
pub fn evaluate(id: usize) -> LabResult<Criterion> {
    let start = Instant::now();
    let mut checks = match id {
        1 => ground_state_exactness()?,
        2 => operator_identities()?,
        3 => profile_solvability()?,
        4 => energy_expansion()?,
        5 => approximate_law()?,
        6 => residual_scaling()?,
        7 => modulation_round_trip()?,
        8 => blowup_rate()?,
        9 => boundedness()?,
        10 => hartree_correctness()?,
        _ => return Err(crate::LabError::Shape(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    if let Some(limit) = runtime_limit(id) {
        checks.push(CriterionOutcome::at_most("runtime_seconds", seconds, limit, "wall clock"));
    }
    Ok(Criterion { id, title: title(id), checks, seconds })
}

fn runtime_limit(id: usize) -> Option<f64> {
    match id {
        1 => Some(10.0),
        4 => Some(60.0),
        8 => Some(600.0),
        9 => Some(300.0),
        _ => None,
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn profile_1d() -> LabResult<ProfileCoeffs> {
    build_profile(&Config::default())
}

fn ground_state_exactness() -> LabResult<Vec<CriterionOutcome>> {
    let b = GroundStateBundle::standard(1).stage("ground_state")?;
    let exact: Vec<f64> = b.grid().nodes().iter().map(|&r| 3f64.powf(0.25) / (2.0 * r).cosh().sqrt()).collect();
    let err = max_abs_diff(b.q(), &exact);
    let mass = 3f64.sqrt() * std::f64::consts::PI / 2.0;
    Ok(vec![
        CriterionOutcome::at_most("q_max_error", err, 1e-8, "max |Q - 3^(1/4) sech^(1/2)(2x)|"),
        CriterionOutcome::at_most("mass_error", (b.mass - mass).abs(), 1e-8, "| ||Q||^2 - sqrt(3) pi / 2 |"),
    ])
}

/// `||L- Q||`, `||L+ Lambda Q + 2Q||`, `||L- |x|^2 Q + 4 Lambda Q||`, `||L+ rho - |x|^2 Q||`
/// on `r <= R - 1`, away from the Dirichlet closure at the truncation radius.
fn identity_residuals(b: &GroundStateBundle) -> LabResult<[f64; 4]> {
    let g = b.grid();
    let field = |v: &[f64]| b.field(v);
    let inner = g.radius() - 1.0;
    let norm = |f: &RadialField, shift: &[f64], c: f64| {
        let d: Vec<f64> = f
            .re()
            .iter()
            .zip(shift)
            .zip(g.nodes())
            .map(|((x, s), &r)| if r <= inner { x + c * s } else { 0.0 })
            .collect();
        g.norm_sq(&d).sqrt()
    };
    let q = b.q();
    let lq = b.lambda_q();
    let r1 = norm(&b.apply_lminus(&field(q))?, q, 0.0);
    let r2 = norm(&b.apply_lplus(&field(lq))?, q, 2.0);
    let r3 = norm(&b.apply_lminus(&field(b.r2q()))?, lq, 4.0);
    let r4 = norm(&b.apply_lplus(&field(b.rho()))?, b.r2q(), -1.0);
    Ok([r1, r2, r3, r4])
}

fn operator_identities() -> LabResult<Vec<CriterionOutcome>> {
    let coarse = GroundStateBundle::standard(1).stage("ground_state")?;
    let fine =
        GroundStateBundle::solve(Arc::new(coarse.grid().refined()), 1e-10).stage("ground_state")?;
    let a = identity_residuals(&coarse).stage("ground_state")?;
    let b = identity_residuals(&fine).stage("ground_state")?;
    let names = ["lminus_q", "lplus_lambda_q", "lminus_r2q", "lplus_rho"];
    let mut out = Vec::new();
    for ((name, ra), rb) in names.iter().zip(a).zip(b) {
        out.push(CriterionOutcome::at_most(&format!("{name}_residual"), ra, 1e-6, "L2 residual at default resolution"));
        out.push(CriterionOutcome::at_least(
            &format!("{name}_shrink"),
            ra / rb,
            3.5,
            format!("residual {ra:.3e} -> {rb:.3e} under grid doubling"),
        ));
    }
    Ok(out)
}

fn profile_solvability() -> LabResult<Vec<CriterionOutcome>> {
    let p = profile_1d()?;
    let t = p.term(0, 0).expect("the profile always has the (0,0) term");
    let g = p.bundle().grid();
    let orth = g.dot(&t.plus, p.bundle().q()).abs();
    let beta = |n: usize| -> LabResult<f64> {
        let grid = Arc::new(RadialGrid::new(1, g.radius(), n).stage("radial_core")?);
        let b = GroundStateBundle::solve(grid.clone(), 1e-10).stage("ground_state")?;
        let c = RadialConvolver::new(grid, RieszKernel::new(0.3, 1).stage("hartree")?).stage("hartree")?;
        Ok(solve_s00(&b, &c).stage("profile")?.beta)
    };
    let (b1, b2) = (beta(g.intervals())?, beta(2 * g.intervals())?);
    Ok(vec![
        CriterionOutcome::at_most("p00_orthogonality", orth, 1e-8, "|(P+_00, Q)|"),
        CriterionOutcome::at_least("beta00", t.beta, f64::MIN_POSITIVE, "beta_00 must be positive"),
        CriterionOutcome::at_most(
            "beta00_convergence",
            (b1 / b2 - 1.0).abs(),
            5e-5,
            format!("beta_00 = {b1:.8} at n = {}, {b2:.8} at 2n", g.intervals()),
        ),
    ])
}

fn energy_expansion() -> LabResult<Vec<CriterionOutcome>> {
    let p = profile_1d()?;
    let alpha = p.alpha();
    let mut scaled = Vec::new();
    let mut logs = Vec::new();
    for e in [-1.5, -2.0, -2.5] {
        let lambda = 10f64.powf(e);
        let (_, _, gap) = p.energy_expansion(lambda, 0.0);
        scaled.push(gap * lambda * lambda / lambda.powf(2.0 * alpha));
        logs.push((lambda.ln(), gap.ln()));
    }
    let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().copied().fold(0.0, f64::max);
    let slope = (logs[2].1 - logs[0].1) / (logs[2].0 - logs[0].0);
    let expected = 2.0 * alpha - 2.0;
    Ok(vec![
        CriterionOutcome::at_most(
            "scaled_gap_spread",
            hi / lo,
            2.0,
            format!("gap lambda^2 / lambda^(2 alpha) = {scaled:.4?}"),
        ),
        CriterionOutcome::at_most(
            "gap_slope",
            (slope - expected).abs(),
            0.3,
            format!("log-log slope {slope:.4} vs 2 alpha - 2 = {expected:.4}"),
        ),
    ])
}

fn approximate_law() -> LabResult<Vec<CriterionOutcome>> {
    let p = profile_1d()?;
    let c = BlowupLawConstants::from_profile(&p).stage("blowup_law")?;
    // both laws are pure powers of s, so the local exponent is exact from a ratio
    let mut worst = 0.0f64;
    for i in 0..100 {
        let s = 10f64.powf(0.5 + 3.0 * i as f64 / 99.0);
        let (l, b) = c.app_law(s);
        let (l2, b2) = c.app_law(2.0 * s);
        let pl = (l2 / l).ln() / 2f64.ln();
        let pb = (b2 / b).ln() / 2f64.ln();
        let first = (pl / s + b).abs() / b;
        let second = (pb * b / s + b * b - c.beta * l.powf(c.alpha)).abs() / (b * b);
        worst = worst.max(first).max(second);
    }
    let half = 0.5 * c.alpha;
    let mut inversion = 0.0f64;
    for s1 in [100.0, 400.0, 1600.0] {
        let init = init_params(0.0, s1, &c, &p, LAMBDA0).stage("blowup_law")?;
        let exact = (s1 * c.alpha * c.kappa().sqrt() / 2.0 + LAMBDA0.powf(-half)).powf(-1.0 / half);
        inversion = inversion.max((init.lambda / exact - 1.0).abs());
    }
    Ok(vec![
        CriterionOutcome::at_most("ode_residual", worst, 1e-12, "relative residual of the reduced flow at 100 points"),
        CriterionOutcome::at_most("lambda_inversion", inversion, 1e-9, "init_params at E0 = 0 vs the closed form"),
    ])
}

fn residual_scaling() -> LabResult<Vec<CriterionOutcome>> {
    let p = profile_1d()?;
    let alpha = p.alpha();
    let mut logs = Vec::new();
    for mu in [0.02f64, 0.01, 0.005] {
        let lambda = mu.powf(1.0 / alpha);
        let (_, n) = p.residual(lambda, mu.sqrt(), EPS_WEIGHT).stage("profile")?;
        logs.push((mu.ln(), n.ln()));
    }
    let slope = (logs[2].1 - logs[0].1) / (logs[2].0 - logs[0].0);
    let expected = p.truncation() as f64 + 2.0;
    Ok(vec![CriterionOutcome::at_most(
        "psi_slope",
        (slope - expected).abs(),
        0.3,
        format!("slope of ||Psi|| along b^2 = lambda^alpha: {slope:.4} vs K + 2 = {expected}"),
    )])
}

fn modulation_round_trip() -> LabResult<Vec<CriterionOutcome>> {
    let p = profile_1d()?;
    let n = 4096;
    let fft = Fft2::new(1, n);
    let (mut param_err, mut eps, mut outside) = (0.0f64, 0.0f64, 0usize);
    for lambda in [0.03, 0.07, 0.12] {
        for b in [0.0, 0.05, 0.15] {
            if !p.in_validity_cone(lambda, b) {
                outside += 1;
            }
            for gamma in [0.3, 2.0, 5.5] {
                let truth = ModParams::new(lambda, b, gamma);
                let u = rescale_profile(&p, truth, 1, 64.0 * lambda, n, 0.0)?;
                let guess = ModParams::new(lambda * 1.03, b + 0.01, gamma - 0.04);
                let s = decompose_field(&u, &fft, &p, guess, &DecomposeOptions::default())?;
                let dg = (s.gamma - gamma + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU)
                    - std::f64::consts::PI;
                param_err = param_err.max((s.lambda / lambda - 1.0).abs()).max((s.b - b).abs()).max(dg.abs());
                eps = eps.max(s.eps_h1);
            }
        }
    }
    Ok(vec![
        CriterionOutcome::at_most("parameter_error", param_err, 1e-10, "worst of |dlambda/lambda|, |db|, |dgamma| over 27 triples"),
        CriterionOutcome::at_most("eps_h1", eps, 1e-9, "worst ||eps||_H1"),
        CriterionOutcome::at_most("outside_cone", outside as f64, 0.0, "(lambda, b) pairs outside the validity cone"),
    ])
}

fn blowup_rate() -> LabResult<Vec<CriterionOutcome>> {
    Ok(experiment_blowup(&Config::default(), 0)?.report.criteria)
}

/// Distance of the shifted ground state from the origin.
pub const PROBE_SHIFT: f64 = 7.0;

fn boundedness() -> LabResult<Vec<CriterionOutcome>> {
    let mut out = Vec::new();
    for shift in [0.0, PROBE_SHIFT] {
        let cfg = Config { shift, ..Config::global_default() };
        for mut c in experiment_global(&cfg, 0)?.report.criteria {
            c.name = format!("{}_shift_{shift}", c.name);
            out.push(c);
        }
    }
    Ok(out)
}

/// Relative sup-norm mismatch between the radial potential of `Q^2` and the
/// Cartesian one on `|x| < window`.
fn radial_vs_cartesian(dim: usize, n: usize, extent: f64, window: f64) -> LabResult<f64> {
    let bundle = GroundStateBundle::standard(dim).stage("ground_state")?;
    let g = bundle.grid().clone();
    let kernel = RieszKernel::new(0.3, dim).stage("hartree")?;
    let conv = RadialConvolver::new(g.clone(), kernel).stage("hartree")?;
    let dens: Vec<f64> = bundle.q().iter().map(|x| x * x).collect();
    let radial_pot = conv.apply(&dens);
    let field = radial_to_cartesian(&bundle.field(&dens), &vec![0.0; dim], extent, n)?;
    let cart = CartesianHartree::new(kernel, n, extent)?;
    let density: Vec<f64> = field.values().iter().map(|v| v.re).collect();
    let pot = cart.apply(&density);
    let coords = field.coords();
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for (idx, v) in pot.iter().enumerate() {
        let r = field.radius_at(idx, &coords);
        if r < window {
            let exact = interpolate(&g, &radial_pot, Parity::Even, r);
            err = err.max((v - exact).abs());
            scale = scale.max(exact.abs());
        }
    }
    Ok(err / scale)
}

fn hartree_correctness() -> LabResult<Vec<CriterionOutcome>> {
    // box spacings unrelated to the radial step, so the two quadratures differ
    let line = radial_vs_cartesian(1, 4096, 60.0, 10.0)?;
    let plane = radial_vs_cartesian(2, 512, 40.0, 10.0)?;
    let mut scaling = Vec::new();
    for (dim, sigma) in [(1usize, 0.3), (2, 0.3), (3, 0.5)] {
        let g = Arc::new(RadialGrid::new(dim, 30.0, 3000).stage("radial_core")?);
        let conv = RadialConvolver::new(g.clone(), RieszKernel::new(sigma, dim).stage("hartree")?).stage("hartree")?;
        let v = |l: f64| {
            let c = l.powf(-0.5 * dim as f64);
            RadialField::from_fn(g.clone(), move |r| c * (-(r / l) * (r / l)).exp() * (1.0 + 0.5 * (r / l) * (r / l)))
        };
        let base = conv.energy_of(&v(1.0));
        let mut worst = 0.0f64;
        for l in [0.5, 1.0, 2.0] {
            let got = conv.energy_of(&v(l));
            worst = worst.max((got / (l.powf(-2.0 * sigma) * base) - 1.0).abs());
        }
        scaling.push(worst);
    }
    Ok(vec![
        CriterionOutcome::at_most("line_radial_vs_cartesian", line, 1e-4, "N = 1, potential of Q^2 on |x| < 10"),
        CriterionOutcome::at_most("plane_radial_vs_cartesian", plane, 1e-4, "N = 2, potential of Q^2 on |x| < 10"),
        CriterionOutcome::at_most("scaling_identity_n1", scaling[0], 1e-8, "G(v_lambda) = lambda^(-2 sigma) G(v), lambda in {1/2, 1, 2}"),
        CriterionOutcome::at_most("scaling_identity_n2", scaling[1], 1e-6, "plane quadrature, sigma = 0.3"),
        CriterionOutcome::at_most("scaling_identity_n3", scaling[2], 1e-8, "sphere quadrature, sigma = 0.5"),
    ])
}
