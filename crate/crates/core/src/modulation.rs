//! Modulation: extraction of `(lambda, b, gamma, eps)` from a solution by the
//! orthogonality conditions against `i Lambda P`, `|y|^2 P` and `i rho`, the
//! deviation `Mod(s)` from the ideal flow, the functional `H`, and power-law
//! fits of the tracked parameters.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::ground_state::{critical_power, pow_4n};
use crate::profile::ProfileCoeffs;
use crate::radial::{self, lagrange_weights, Norms, Parity, RadialField, RadialGrid};

/// Modulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModParams {
    pub lambda: f64,
    pub b: f64,
    pub gamma: f64,
}

impl ModParams {
    pub fn new(lambda: f64, b: f64, gamma: f64) -> Self {
        Self { lambda, b, gamma }
    }
}

/// `P` and the directions `i Lambda P`, `|y|^2 P`, `i rho` at fixed parameters,
/// ready to be transported to physical coordinates.
#[derive(Debug, Clone)]
pub struct ProfileFrame {
    params: ModParams,
    grid: Arc<RadialGrid>,
    fields: Vec<[Complex64; 4]>,
}

impl ProfileFrame {
    pub fn new(profile: &ProfileCoeffs, params: ModParams) -> Result<Self> {
        if !(params.lambda > 0.0) || !params.b.is_finite() || !params.gamma.is_finite() {
            return Err(Error::domain("modulation parameters need lambda > 0 and finite b, gamma"));
        }
        let p = profile.assemble(params.lambda, params.b);
        let lp = radial::apply_lambda(&p)?;
        let grid = p.grid().clone();
        let i = Complex64::new(0.0, 1.0);
        let rho = profile.bundle().rho();
        let fields = (0..grid.len())
            .map(|k| {
                let y = grid.nodes()[k];
                let v = p.values()[k];
                [v, i * lp.values()[k], v * (y * y), i * rho[k]]
            })
            .collect();
        Ok(Self { params, grid, fields })
    }

    pub fn params(&self) -> ModParams {
        self.params
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// The four fields at rescaled radius `y`.
    pub fn rescaled(&self, y: f64) -> [Complex64; 4] {
        let zero = Complex64::new(0.0, 0.0);
        // absorb rounding in r / lambda at the outer node
        let y = y.abs();
        let edge = self.grid.radius();
        let y = if y > edge && y <= edge * (1.0 + 1e-12) { edge } else { y };
        let Some((base, w)) = lagrange_weights(&self.grid, y) else {
            return [zero; 4];
        };
        let mut out = [zero; 4];
        let n = self.fields.len() as isize;
        for (k, wk) in w.iter().enumerate() {
            // every field is even
            let j = (base + k as isize - 2).unsigned_abs() as isize;
            if j >= n {
                continue;
            }
            let f = &self.fields[j as usize];
            for (o, v) in out.iter_mut().zip(f) {
                *o += v * *wk;
            }
        }
        out
    }

    /// `lambda^{-N/2} phi(r/lambda) e^{-i b r^2/(4 lambda^2) + i gamma}` for each field.
    pub fn physical(&self, r: f64) -> [Complex64; 4] {
        let ModParams { lambda, b, gamma } = self.params;
        let y = r / lambda;
        let scale = lambda.powf(-0.5 * self.grid.dim() as f64);
        let phase = Complex64::from_polar(scale, gamma - 0.25 * b * y * y);
        let mut v = self.rescaled(y);
        v.iter_mut().for_each(|x| *x *= phase);
        v
    }
}

/// `eps` in rescaled coordinates.
#[derive(Debug, Clone)]
pub struct Epsilon {
    /// Radial part on the profile grid.
    pub radial: RadialField,
    /// Norms of the full field.
    pub norms: Norms,
    /// `||eps - radial part||_2`.
    pub nonradial: f64,
}

/// A solution sample that can be projected onto transported profile fields.
pub trait Snapshot {
    fn dim(&self) -> usize;

    fn time(&self) -> f64;

    /// `(u - P_{lambda,b,gamma}, phi_{lambda,b,gamma})_2` for the three directions.
    fn orthogonality(&self, frame: &ProfileFrame) -> [f64; 3];

    fn epsilon(&self, frame: &ProfileFrame) -> Result<Epsilon>;
}

/// A radial solution sampled on a physical radial grid.
#[derive(Debug, Clone)]
pub struct RadialSnapshot {
    pub field: RadialField,
    pub t: f64,
}

impl RadialSnapshot {
    /// `P_{lambda,b,gamma}` sampled on `grid`.
    pub fn from_frame(frame: &ProfileFrame, grid: Arc<RadialGrid>, t: f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| frame.physical(r)[0]).collect();
        Ok(Self { field: RadialField::new(grid, values)?, t })
    }
}

impl Snapshot for RadialSnapshot {
    fn dim(&self) -> usize {
        self.field.grid().dim()
    }

    fn time(&self) -> f64 {
        self.t
    }

    fn orthogonality(&self, frame: &ProfileFrame) -> [f64; 3] {
        let g = self.field.grid();
        let mut acc = [0.0; 3];
        for ((&r, &w), &u) in g.nodes().iter().zip(g.weights()).zip(self.field.values()) {
            let s = frame.physical(r);
            let e = u - s[0];
            for (a, d) in acc.iter_mut().zip(&s[1..]) {
                *a += w * (e * d.conj()).re;
            }
        }
        acc
    }

    fn epsilon(&self, frame: &ProfileFrame) -> Result<Epsilon> {
        let ModParams { lambda, b, gamma } = frame.params();
        let pg = frame.grid().clone();
        let g = self.field.grid();
        let (re, im) = (self.field.re(), self.field.im());
        let scale = lambda.powf(0.5 * pg.dim() as f64);
        let values: Vec<Complex64> = pg
            .nodes()
            .iter()
            .map(|&y| {
                let x = lambda * y;
                let u = Complex64::new(
                    radial::interpolate(g, &re, Parity::Even, x),
                    radial::interpolate(g, &im, Parity::Even, x),
                );
                u * Complex64::from_polar(scale, 0.25 * b * y * y - gamma) - frame.rescaled(y)[0]
            })
            .collect();
        let radial = RadialField::new(pg, values)?;
        let norms = radial::norms(&radial);
        Ok(Epsilon { radial, norms, nonradial: 0.0 })
    }
}

/// Newton controls for the decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Required bound on each orthogonality residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Step reduction factor when the residual grows.
    pub damping: f64,
    /// `||eps||_{H^1}` above which the sample is flagged as outside the tube.
    pub tube: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, damping: 0.5, tube: 0.5 }
    }
}

/// Converged parameters of one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub params: ModParams,
    pub residuals: [f64; 3],
    pub iterations: usize,
    pub trace: Vec<f64>,
}

fn max_abs(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c] == 0.0 || !a[p][c].is_finite() {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let m = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn params_of(x: [f64; 3]) -> ModParams {
    ModParams::new(x[0].exp(), x[1], x[2])
}

/// Newton iteration on `(ln lambda, b, gamma)` with a finite-difference Jacobian.
pub fn solve_parameters<S: Snapshot + ?Sized>(
    snap: &S,
    profile: &ProfileCoeffs,
    guess: ModParams,
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    if snap.dim() != profile.dim() {
        return Err(Error::usage("snapshot and profile dimensions differ"));
    }
    let eval = |x: [f64; 3]| -> Result<[f64; 3]> {
        Ok(snap.orthogonality(&ProfileFrame::new(profile, params_of(x))?))
    };
    let mut x = [guess.lambda.ln(), guess.b, guess.gamma];
    let mut f = eval(x)?;
    let mut trace = vec![max_abs(&f)];
    let steps = [1e-6, 1e-6, 1e-6];
    for it in 0..opts.max_iter {
        let res = max_abs(&f);
        if res <= 1e-3 * opts.tol {
            return Ok(Decomposition { params: params_of(x), residuals: f, iterations: it, trace });
        }
        let mut jac = [[0.0; 3]; 3];
        for c in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[c] += steps[c];
            xm[c] -= steps[c];
            let (fp, fm) = (eval(xp)?, eval(xm)?);
            for r in 0..3 {
                jac[r][c] = (fp[r] - fm[r]) / (2.0 * steps[c]);
            }
        }
        let Some(dx) = solve3(jac, [-f[0], -f[1], -f[2]]) else {
            return Err(Error::Singular("modulation Jacobian"));
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let xn = [x[0] + t * dx[0], x[1] + t * dx[1], x[2] + t * dx[2]];
            let fn_ = eval(xn)?;
            if max_abs(&fn_) < res {
                accepted = Some((xn, fn_));
                break;
            }
            t *= opts.damping;
        }
        let Some((xn, fn_)) = accepted else {
            // no further decrease: converged to round-off or stuck
            if res <= opts.tol {
                return Ok(Decomposition { params: params_of(x), residuals: f, iterations: it, trace });
            }
            break;
        };
        x = xn;
        f = fn_;
        trace.push(max_abs(&f));
    }
    if max_abs(&f) <= opts.tol {
        return Ok(Decomposition { params: params_of(x), residuals: f, iterations: opts.max_iter, trace });
    }
    Err(Error::SolverFailure {
        what: "modulation Newton",
        iterations: trace.len(),
        last: max_abs(&f),
        history: trace,
    })
}

/// Decomposition of one snapshot.
#[derive(Debug, Clone)]
pub struct ModulationState {
    pub t: f64,
    /// Rescaled time; assigned by [`assign_rescaled_time`].
    pub s: f64,
    pub lambda: f64,
    pub b: f64,
    /// Principal value in `[0, 2 pi)`.
    pub gamma: f64,
    pub eps_h1: f64,
    /// `|| |y| eps ||_2`
    pub eps_var: f64,
    pub nonradial: f64,
    pub residuals: [f64; 3],
    pub iterations: usize,
    pub in_tube: bool,
    pub epsilon: RadialField,
}

fn wrap_angle(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).floor();
    if r >= TAU { 0.0 } else { r }
}

pub fn decompose<S: Snapshot + ?Sized>(
    snap: &S,
    profile: &ProfileCoeffs,
    guess: ModParams,
    opts: &DecomposeOptions,
) -> Result<ModulationState> {
    let d = solve_parameters(snap, profile, guess, opts)?;
    let params = ModParams::new(d.params.lambda, d.params.b, wrap_angle(d.params.gamma));
    let eps = snap.epsilon(&ProfileFrame::new(profile, params)?)?;
    let eps_h1 = eps.norms.h1_sq().sqrt();
    Ok(ModulationState {
        t: snap.time(),
        s: f64::NAN,
        lambda: params.lambda,
        b: params.b,
        gamma: params.gamma,
        eps_h1,
        eps_var: eps.norms.var_sq.sqrt(),
        nonradial: eps.nonradial,
        residuals: d.residuals,
        iterations: d.iterations,
        in_tube: eps_h1 < opts.tube,
        epsilon: eps.radial,
    })
}

/// `s_i = s_1 + int_{t_1}^{t_i} dt / lambda^2` by the trapezoid rule.
pub fn assign_rescaled_time(states: &mut [ModulationState], s1: f64) {
    let mut s = s1;
    for i in 0..states.len() {
        if i > 0 {
            let (a, b) = (&states[i - 1], &states[i]);
            s += 0.5 * (b.t - a.t) * (a.lambda.powi(-2) + b.lambda.powi(-2));
        }
        states[i].s = s;
    }
}

/// Continuous phase from principal values.
pub fn unwrap_phase(gamma: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(gamma.len());
    let mut shift = 0.0;
    for (i, &g) in gamma.iter().enumerate() {
        if i > 0 {
            let d: f64 = g + shift - out[i - 1];
            shift -= TAU * (d / TAU).round();
        }
        out.push(g + shift);
    }
    out
}

/// `Mod = (lambda_s/lambda + b, b_s + b^2 - theta, 1 - gamma_s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModSample {
    pub s: f64,
    pub values: [f64; 3],
}

impl ModSample {
    pub fn magnitude(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Centered differences in `s` at every interior state.
pub fn mod_series(states: &[ModulationState], profile: &ProfileCoeffs) -> Result<Vec<ModSample>> {
    if states.len() < 3 {
        return Err(Error::usage("Mod(s) needs at least three states"));
    }
    if states.windows(2).any(|w| !(w[1].s > w[0].s)) {
        return Err(Error::usage("rescaled times must increase strictly"));
    }
    let gamma = unwrap_phase(&states.iter().map(|s| s.gamma).collect::<Vec<_>>());
    let ln_l: Vec<f64> = states.iter().map(|s| s.lambda.ln()).collect();
    let b: Vec<f64> = states.iter().map(|s| s.b).collect();
    let s: Vec<f64> = states.iter().map(|s| s.s).collect();
    let diff = |v: &[f64], i: usize| {
        // second-order derivative on a nonuniform three-point stencil
        let (h0, h1) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        (-h1 / (h0 * (h0 + h1))) * v[i - 1] + ((h1 - h0) / (h0 * h1)) * v[i] + (h0 / (h1 * (h0 + h1))) * v[i + 1]
    };
    Ok((1..states.len() - 1)
        .map(|i| {
            let st = &states[i];
            let theta = profile.theta(st.lambda, st.b);
            ModSample {
                s: s[i],
                values: [
                    diff(&ln_l, i) + st.b,
                    diff(&b, i) + st.b * st.b - theta,
                    1.0 - diff(&gamma, i),
                ],
            }
        })
        .collect())
}

/// `H(s, eps)`: the quadratic part of the energy around `P` plus the virial
/// correction `b^2 || |y| eps ||^2`.
pub fn h_diagnostic(profile: &ProfileCoeffs, lambda: f64, b: f64, eps: &RadialField) -> Result<f64> {
    let p = profile.assemble(lambda, b);
    let g = p.grid();
    if **eps.grid() != **g {
        return Err(Error::GridMismatch);
    }
    let dim = profile.dim();
    let power = 2.0 + critical_power(dim);
    let big_f = |z: Complex64| pow_4n(dim, z.norm()) * z.norm_sqr() / power;
    let pv = p.values();
    let ev = eps.values();
    let local: Vec<f64> = (0..pv.len())
        .map(|i| {
            let (a, e) = (pv[i], ev[i]);
            let f = a * pow_4n(dim, a.norm());
            big_f(a + e) - big_f(a) - (f * e.conj()).re
        })
        .collect();
    let conv = profile.convolver();
    let sum: Vec<Complex64> = pv.iter().zip(ev).map(|(a, e)| a + e).collect();
    let (sre, sim): (Vec<f64>, Vec<f64>) = sum.iter().map(|v| (v.re, v.im)).unzip();
    let (pre, pim) = (p.re(), p.im());
    let dens: Vec<f64> = pv.iter().map(|v| v.norm_sqr()).collect();
    let pot = conv.apply(&dens);
    let dg: Vec<f64> = (0..pv.len()).map(|i| pot[i] * (pv[i] * ev[i].conj()).re).collect();
    let g_part = conv.energy(&sre, &sim) - conv.energy(&pre, &pim) - g.integrate(&dg);
    let n = radial::norms(eps);
    let mu = lambda.powf(profile.alpha());
    Ok(0.5 * n.h1_sq() + b * b * n.var_sq - g.integrate(&local) - mu * g_part)
}

/// `y = C |t|^p` fitted in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
}

fn linear_fit(x: &[f64], y: &[f64]) -> PowerFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    PowerFit { exponent: slope, prefactor: intercept.exp(), r2 }
}

fn check_span(y: &[f64], required: f64) -> Result<()> {
    let hi = y.iter().fold(0.0f64, |m, v| m.max(*v));
    let lo = y.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let span = hi / lo;
    if !(span >= required) {
        return Err(Error::InsufficientSpan { span, required });
    }
    Ok(())
}

/// Least squares of `ln y` against `ln |t|` for samples with `t < 0`.
pub fn fit_exponent(t: &[f64], y: &[f64]) -> Result<PowerFit> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::usage("need at least three paired samples"));
    }
    if t.iter().any(|&v| !(v < 0.0)) || y.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::usage("samples need t < 0 and y > 0"));
    }
    check_span(y, 3.0)?;
    let lx: Vec<f64> = t.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&lx, &ly))
}

/// Power law with an unknown blow-up time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupFit {
    pub t_star: f64,
    pub fit: PowerFit,
}

/// Fits `y = C (T - t)^p` with `T > max t` chosen to maximize `r^2`.
pub fn fit_blowup(t: &[f64], y: &[f64]) -> Result<BlowupFit> {
    if t.len() != y.len() || t.len() < 4 {
        return Err(Error::usage("need at least four paired samples"));
    }
    check_span(y, 3.0)?;
    let last = t.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let width = last - t.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    if !(width > 0.0) {
        return Err(Error::usage("times must not coincide"));
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let score = |u: f64| {
        let ts = last + width * u.exp();
        let lx: Vec<f64> = t.iter().map(|v| (ts - v).ln()).collect();
        linear_fit(&lx, &ly)
    };
    // coarse scan over the log-offset of T past the last sample, then golden section
    let (lo, hi) = (-18.0f64, 3.0f64);
    let m = 211;
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..m {
        let u = lo + (hi - lo) * k as f64 / (m - 1) as f64;
        let r2 = score(u).r2;
        if r2 > best.1 {
            best = (u, r2);
        }
    }
    let step = (hi - lo) / (m - 1) as f64;
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if score(c).r2 > score(d).r2 {
            b = d;
        } else {
            a = c;
        }
    }
    let u = 0.5 * (a + b);
    Ok(BlowupFit { t_star: last + width * u.exp(), fit: score(u) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::GroundStateBundle;
    use crate::hartree::{RadialConvolver, RieszKernel};
    use crate::profile::solve_all;
    use std::sync::OnceLock;

    fn profile(k: usize) -> &'static ProfileCoeffs {
        static P: [OnceLock<ProfileCoeffs>; 2] = [OnceLock::new(), OnceLock::new()];
        P[k].get_or_init(|| {
            let bundle = Arc::new(GroundStateBundle::standard(1).unwrap());
            let kernel = RieszKernel::new(0.3, 1).unwrap();
            let conv = Arc::new(RadialConvolver::new(bundle.grid().clone(), kernel).unwrap());
            solve_all(k, bundle, conv).unwrap()
        })
    }

    fn physical_grid(lambda: f64) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(1, 26.0 * lambda, 6500).unwrap())
    }

    #[test]
    fn radial_round_trip() {
        let p = profile(1);
        let truth = ModParams::new(0.1, 0.05, 0.7);
        let frame = ProfileFrame::new(p, truth).unwrap();
        let snap = RadialSnapshot::from_frame(&frame, physical_grid(0.1), 0.0).unwrap();
        let guess = ModParams::new(0.11, 0.03, 0.6);
        let st = decompose(&snap, p, guess, &DecomposeOptions::default()).unwrap();
        assert!((st.lambda / truth.lambda - 1.0).abs() < 1e-10, "{st:?}");
        assert!((st.b - truth.b).abs() < 1e-10);
        assert!((st.gamma - truth.gamma).abs() < 1e-10);
        assert!(st.residuals.iter().all(|r| r.abs() <= 1e-10));
        assert!(st.eps_h1 < 1e-9, "{}", st.eps_h1);
        assert!(st.in_tube);
    }

    #[test]
    fn phase_rotation_shifts_gamma() {
        let p = profile(1);
        let truth = ModParams::new(0.08, 0.1, 6.0);
        let frame = ProfileFrame::new(p, truth).unwrap();
        let snap = RadialSnapshot::from_frame(&frame, physical_grid(0.08), 0.0).unwrap();
        let rotated = RadialSnapshot { field: snap.field.scale(Complex64::from_polar(1.0, 0.5)), t: 0.0 };
        let opts = DecomposeOptions::default();
        let a = decompose(&snap, p, truth, &opts).unwrap();
        let b = decompose(&rotated, p, truth, &opts).unwrap();
        let shift = (b.gamma - a.gamma - 0.5).rem_euclid(TAU);
        assert!(shift.min(TAU - shift) < 1e-10, "{shift}");
        assert!(b.gamma < 1.0);
        assert!((a.lambda - b.lambda).abs() < 1e-12 && (a.b - b.b).abs() < 1e-12);
    }

    #[test]
    fn ideal_flow_has_vanishing_mod() {
        let p = profile(0);
        let beta = p.beta();
        let alpha = p.alpha();
        let a = 0.5 * alpha * (2.0 * beta / (2.0 - alpha)).sqrt();
        let zero = RadialField::zeros(p.bundle().grid().clone());
        let states = |ds: f64| -> Vec<ModulationState> {
            (0..41)
                .map(|k| {
                    let s = 20.0 + ds * k as f64;
                    ModulationState {
                        t: 0.0,
                        s,
                        lambda: (a * s).powf(-2.0 / alpha),
                        b: 2.0 / (alpha * s),
                        gamma: s.rem_euclid(TAU),
                        eps_h1: 0.0,
                        eps_var: 0.0,
                        nonradial: 0.0,
                        residuals: [0.0; 3],
                        iterations: 0,
                        in_tube: true,
                        epsilon: zero.clone(),
                    }
                })
                .collect()
        };
        let coarse = mod_series(&states(0.2), p).unwrap();
        let fine = mod_series(&states(0.1), p).unwrap();
        let worst = |v: &[ModSample]| v.iter().map(|m| m.magnitude()).fold(0.0, f64::max);
        assert!(worst(&coarse) < 1e-5, "{}", worst(&coarse));
        // second order: halving the step quarters the error at a shared time
        let c = coarse[10];
        let f = fine.iter().find(|m| (m.s - c.s).abs() < 1e-9).unwrap();
        let ratio = c.magnitude() / f.magnitude();
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn mod_series_rejects_bad_input() {
        let p = profile(0);
        let zero = RadialField::zeros(p.bundle().grid().clone());
        let mk = |s: f64| ModulationState {
            t: 0.0,
            s,
            lambda: 0.1,
            b: 0.1,
            gamma: 0.0,
            eps_h1: 0.0,
            eps_var: 0.0,
            nonradial: 0.0,
            residuals: [0.0; 3],
            iterations: 0,
            in_tube: true,
            epsilon: zero.clone(),
        };
        assert!(mod_series(&[mk(0.0), mk(1.0)], p).is_err());
        assert!(mod_series(&[mk(0.0), mk(2.0), mk(1.0)], p).is_err());
    }

    #[test]
    fn unwrap_restores_continuity() {
        let raw: Vec<f64> = (0..50).map(|k| (0.4 * k as f64).rem_euclid(TAU)).collect();
        let u = unwrap_phase(&raw);
        for (k, v) in u.iter().enumerate() {
            assert!((v - 0.4 * k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn h_is_quadratic_and_vanishes_at_zero() {
        let p = profile(1);
        let g = p.bundle().grid().clone();
        let zero = RadialField::zeros(g.clone());
        assert_eq!(h_diagnostic(p, 0.05, 0.1, &zero).unwrap(), 0.0);
        let eps = RadialField::from_parts(
            g.clone(),
            &g.nodes().iter().map(|r| (-(r - 1.0).powi(2)).exp()).collect::<Vec<_>>(),
            &g.nodes().iter().map(|r| 0.5 * (-r * r / 3.0).exp()).collect::<Vec<_>>(),
        )
        .unwrap();
        let ratio = |t: f64| h_diagnostic(p, 0.05, 0.1, &eps.scale(Complex64::new(t, 0.0))).unwrap() / (t * t);
        let (a, b, c) = (ratio(1e-1), ratio(1e-2), ratio(1e-3));
        // H(t eps)/t^2 = H2 + O(t): differences shrink tenfold per decade
        let q = (a - b) / (b - c);
        assert!((q - 10.0).abs() < 1.0, "{a} {b} {c}");
    }

    #[test]
    fn exponent_fits() {
        let t: Vec<f64> = (0..40).map(|k| -1e-3 * 1.2f64.powi(k)).collect();
        let y: Vec<f64> = t.iter().map(|v| 2.5 * v.abs().powf(1.0 / 1.3)).collect();
        let f = fit_exponent(&t, &y).unwrap();
        assert!((f.exponent - 1.0 / 1.3).abs() < 1e-12);
        assert!((f.prefactor - 2.5).abs() < 1e-10);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(matches!(fit_exponent(&t, &vec![1.0; 40]), Err(Error::InsufficientSpan { .. })));
        // unknown blow-up time
        let ts: Vec<f64> = t.iter().map(|v| v + 0.37).collect();
        let bf = fit_blowup(&ts, &y).unwrap();
        assert!((bf.t_star - 0.37).abs() < 1e-6, "{bf:?}");
        assert!((bf.fit.exponent - 1.0 / 1.3).abs() < 1e-5);
    }
}
