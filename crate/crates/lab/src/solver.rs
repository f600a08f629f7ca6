//! Strang split-step evolution of
//! `i u_t + Delta u + |u|^{4/N} u +- (|x|^{-2 sigma} * |u|^2) u = 0`
//! on the periodic box.

use std::fmt;

use hartree_blowup_core::hartree::RieszKernel;
use hartree_blowup_core::modulation::{DecomposeOptions, ModParams, ModulationState};
use hartree_blowup_core::profile::ProfileCoeffs;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::convolution::CartesianHartree;
use crate::error::{LabError, LabResult};
use crate::field::{grad_sq, wavenumber_sq, CartesianField, Fft2};
use crate::snapshot::decompose_field;

/// Sign in front of the Hartree term of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionParams {
    pub dim: usize,
    pub sigma: f64,
    pub sign: Sign,
    /// Multiplies the Hartree term; 0 switches it off.
    pub hartree_weight: f64,
    pub extent: f64,
    pub cells: usize,
    /// Off: linear Schrodinger flow.
    pub nonlinear: bool,
    pub dealias: bool,
}

/// Precomputed transforms, multipliers and the convolution for one box.
#[derive(Debug, Clone)]
pub struct Evolution {
    params: EvolutionParams,
    fft: Fft2,
    k2: Vec<f64>,
    mask: Vec<bool>,
    hartree: Option<CartesianHartree>,
}

impl Evolution {
    pub fn new(params: EvolutionParams) -> LabResult<Self> {
        let kernel = RieszKernel::new(params.sigma, params.dim)?;
        // validates the box too
        CartesianField::zeros(params.dim, params.extent, params.cells)?;
        let n = params.cells;
        let fft = Fft2::new(params.dim, n);
        let k2 = wavenumber_sq(params.dim, n, params.extent);
        let keep = |k: usize| {
            let m = if k < n / 2 { k } else { n - k };
            3 * m <= n
        };
        let mask = (0..k2.len())
            .map(|idx| match params.dim {
                1 => keep(idx),
                _ => keep(idx / n) && keep(idx % n),
            })
            .collect();
        let hartree = if params.hartree_weight != 0.0 && params.nonlinear {
            Some(CartesianHartree::new(kernel, n, params.extent)?)
        } else {
            None
        };
        Ok(Self { params, fft, k2, mask, hartree })
    }

    pub fn params(&self) -> &EvolutionParams {
        &self.params
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    fn check(&self, field: &CartesianField) {
        assert!(
            field.dim() == self.params.dim
                && field.cells() == self.params.cells
                && field.extent() == self.params.extent,
            "field does not live on the evolution box"
        );
    }

    fn kinetic(&self, u: &mut [Complex64], tau: f64) {
        self.fft.forward(u);
        for ((v, k2), keep) in u.iter_mut().zip(&self.k2).zip(&self.mask) {
            if self.params.dealias && !keep {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::from_polar(1.0, -k2 * tau);
            }
        }
        self.fft.inverse(u);
    }

    /// `(K * |u|^2)` at every node, without the weight and sign.
    pub fn hartree_potential(&self, field: &CartesianField) -> Option<Vec<f64>> {
        let h = self.hartree.as_ref()?;
        let rho: Vec<f64> = field.values().iter().map(|v| v.norm_sqr()).collect();
        Some(h.apply(&rho))
    }

    /// `V = |u|^{4/N} +- w K * |u|^2`.
    pub fn potential(&self, field: &CartesianField) -> Vec<f64> {
        let half_power = 2.0 / self.params.dim as f64;
        let mut v: Vec<f64> = field.values().iter().map(|u| u.norm_sqr().powf(half_power)).collect();
        if let Some(vh) = self.hartree_potential(field) {
            let c = self.params.sign.value() * self.params.hartree_weight;
            v.iter_mut().zip(&vh).for_each(|(a, b)| *a += c * b);
        }
        v
    }

    /// One Strang step; `dt` may be negative.
    pub fn step(&self, field: &mut CartesianField, dt: f64) {
        self.check(field);
        self.kinetic(field.values_mut(), 0.5 * dt);
        if self.params.nonlinear {
            let v = self.potential(field);
            for (u, p) in field.values_mut().iter_mut().zip(&v) {
                *u *= Complex64::from_polar(1.0, p * dt);
            }
        }
        self.kinetic(field.values_mut(), 0.5 * dt);
        field.t += dt;
    }

    pub fn mass(&self, field: &CartesianField) -> f64 {
        field.mass()
    }

    pub fn grad_norm(&self, field: &CartesianField) -> f64 {
        grad_sq(field, &self.fft).sqrt()
    }

    /// `1/2 ||grad u||^2 - ||u||_p^p / p -+ w/4 int (K * |u|^2) |u|^2`.
    pub fn energy(&self, field: &CartesianField) -> f64 {
        self.check(field);
        let dv = field.cell_volume();
        let kinetic = 0.5 * grad_sq(field, &self.fft);
        if !self.params.nonlinear {
            return kinetic;
        }
        let p = 2.0 + 4.0 / self.params.dim as f64;
        let power: f64 = field.values().iter().map(|u| u.norm_sqr().powf(0.5 * p)).sum::<f64>() * dv / p;
        let hartree = match self.hartree_potential(field) {
            Some(vh) => {
                let g: f64 = vh.iter().zip(field.values()).map(|(a, u)| a * u.norm_sqr()).sum::<f64>() * dv;
                self.params.sign.value() * self.params.hartree_weight * 0.25 * g
            }
            None => 0.0,
        };
        kinetic - power - hartree
    }
}

/// One row of the diagnostics series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub lambda: f64,
    pub b: f64,
    pub gamma: f64,
    pub eps_h1: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TimeReached,
    LambdaMin,
    /// Core narrower than the configured number of cells.
    Unresolved,
    BoundaryMass,
    StepLimit,
    DtMin,
    TrackingLost,
}

impl StopReason {
    /// Whether the run ended on a resolution or tracking failure.
    pub fn is_failure(self) -> bool {
        matches!(self, StopReason::Unresolved | StopReason::BoundaryMass | StopReason::TrackingLost)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunControls {
    pub c_dt: f64,
    pub dt_min: f64,
    /// Overrides the controller when set.
    pub dt_fixed: Option<f64>,
    pub t_end: Option<f64>,
    pub lambda_min: Option<f64>,
    /// Steps between diagnostics.
    pub cadence: usize,
    pub boundary_threshold: f64,
    pub min_core_cells: f64,
    pub max_steps: usize,
    /// Keep every this many diagnostic samples as a snapshot; 0 keeps none.
    pub snapshot_every: usize,
}

impl Default for RunControls {
    fn default() -> Self {
        Self {
            c_dt: 0.05,
            dt_min: 1e-14,
            dt_fixed: None,
            t_end: None,
            lambda_min: None,
            cadence: 20,
            boundary_threshold: 1e-3,
            min_core_cells: 16.0,
            max_steps: 2_000_000,
            snapshot_every: 0,
        }
    }
}

/// Source of the scale `lambda~` driving the step size.
#[derive(Debug, Clone)]
pub enum Tracker<'a> {
    /// `lambda~ = ||grad Q|| / ||grad u||`.
    Proxy { grad_q: f64 },
    /// Full decomposition at every diagnostic.
    Modulation { profile: &'a ProfileCoeffs, opts: DecomposeOptions, guess: ModParams },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub diagnostics: Vec<Diagnostic>,
    pub states: Vec<ModulationState>,
    pub snapshots: Vec<CartesianField>,
    pub stop: StopReason,
    pub steps: usize,
    pub last: CartesianField,
    /// Error text when tracking was lost.
    pub note: Option<String>,
}

impl Trajectory {
    /// `max |m(t) - m(0)| / m(0)` over the recorded series.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.diagnostics.iter().map(|d| d.mass))
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.diagnostics.iter().map(|d| d.energy))
    }
}

/// `max |x_i - x_0| / max(|x_0|, 1e-300)`.
pub fn relative_drift(mut xs: impl Iterator<Item = f64>) -> f64 {
    let Some(x0) = xs.next() else { return 0.0 };
    xs.fold(0.0f64, |m, x| m.max((x - x0).abs())) / x0.abs().max(1e-300)
}

/// Evolves `field` until a stop criterion fires.
pub fn run(
    evolution: &Evolution,
    mut field: CartesianField,
    controls: &RunControls,
    tracker: &Tracker<'_>,
) -> LabResult<Trajectory> {
    if controls.cadence == 0 {
        return Err(LabError::Shape("diagnostic cadence must be at least 1".into()));
    }
    let mut traj = Trajectory {
        diagnostics: Vec::new(),
        states: Vec::new(),
        snapshots: Vec::new(),
        stop: StopReason::StepLimit,
        steps: 0,
        last: field.clone(),
        note: None,
    };
    let mut guess = match tracker {
        Tracker::Modulation { guess, .. } => Some(*guess),
        Tracker::Proxy { .. } => None,
    };
    let dx = field.dx();
    let mut step = 0usize;
    let stop = loop {
        // sample
        let grad_norm = evolution.grad_norm(&field);
        let (lambda, b, gamma, eps_h1) = match tracker {
            Tracker::Proxy { grad_q } => (grad_q / grad_norm, f64::NAN, f64::NAN, f64::NAN),
            Tracker::Modulation { profile, opts, .. } => {
                match decompose_field(&field, evolution.fft(), profile, guess.unwrap(), opts) {
                    Ok(state) => {
                        guess = Some(ModParams::new(state.lambda, state.b, state.gamma));
                        let out = (state.lambda, state.b, state.gamma, state.eps_h1);
                        traj.states.push(state);
                        out
                    }
                    Err(e) => {
                        traj.note = Some(e.to_string());
                        break StopReason::TrackingLost;
                    }
                }
            }
        };
        traj.diagnostics.push(Diagnostic {
            t: field.t,
            mass: evolution.mass(&field),
            energy: evolution.energy(&field),
            lambda,
            b,
            gamma,
            eps_h1,
            grad_norm,
        });
        if controls.snapshot_every > 0 && (traj.diagnostics.len() - 1).is_multiple_of(controls.snapshot_every) {
            traj.snapshots.push(field.clone());
        }
        if controls.t_end.is_some_and(|t| field.t >= t - 1e-12 * t.abs().max(1.0)) {
            break StopReason::TimeReached;
        }
        if controls.lambda_min.is_some_and(|l| lambda <= l) {
            break StopReason::LambdaMin;
        }
        if lambda / dx < controls.min_core_cells {
            break StopReason::Unresolved;
        }
        if field.boundary_mass_fraction() > controls.boundary_threshold {
            break StopReason::BoundaryMass;
        }
        if step >= controls.max_steps {
            break StopReason::StepLimit;
        }
        let mut dt = controls.dt_fixed.unwrap_or(controls.c_dt * lambda * lambda);
        if !(dt >= controls.dt_min) {
            break StopReason::DtMin;
        }
        for _ in 0..controls.cadence {
            if let Some(t_end) = controls.t_end {
                let left = t_end - field.t;
                if left <= 1e-12 * t_end.abs().max(1.0) {
                    break;
                }
                dt = dt.min(left);
            }
            evolution.step(&mut field, dt);
            step += 1;
        }
    };
    traj.stop = stop;
    traj.steps = step;
    traj.last = field;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize, n: usize, extent: f64) -> EvolutionParams {
        EvolutionParams {
            dim,
            sigma: 0.3,
            sign: Sign::Plus,
            hartree_weight: 1.0,
            extent,
            cells: n,
            nonlinear: true,
            dealias: true,
        }
    }

    #[test]
    fn zero_stays_zero() {
        let ev = Evolution::new(params(1, 64, 10.0)).unwrap();
        let mut u = CartesianField::zeros(1, 10.0, 64).unwrap();
        ev.step(&mut u, 0.1);
        assert!(u.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn plane_wave_dispersion() {
        let (n, extent) = (64, 2.0 * std::f64::consts::PI);
        let mut p = params(1, n, extent);
        p.nonlinear = false;
        let ev = Evolution::new(p).unwrap();
        let k = 3.0;
        let mut u = CartesianField::from_fn(1, extent, n, |x| Complex64::from_polar(1.0, k * x[0])).unwrap();
        let dt = 0.37;
        ev.step(&mut u, dt);
        let xs = u.coords();
        let err = u
            .values()
            .iter()
            .zip(&xs)
            .map(|(v, x)| (v - Complex64::from_polar(1.0, k * x - k * k * dt)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn time_reversal() {
        let (n, extent) = (256, 40.0);
        let ev = Evolution::new(params(1, n, extent)).unwrap();
        let u0 = CartesianField::from_fn(1, extent, n, |x| {
            Complex64::new((-x[0] * x[0]).exp(), 0.3 * x[0] * (-x[0] * x[0]).exp())
        })
        .unwrap();
        let mut u = u0.clone();
        ev.step(&mut u, 1e-3);
        ev.step(&mut u, -1e-3);
        let err = u.values().iter().zip(u0.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn phase_rotation_leaves_mass_bitwise() {
        let u = CartesianField::from_fn(2, 10.0, 16, |x| Complex64::new((-x[0] * x[0] - x[1] * x[1]).exp(), 0.0))
            .unwrap();
        let mut v = u.clone();
        // rotation by i swaps real and imaginary parts exactly
        v.values_mut().iter_mut().for_each(|z| *z *= Complex64::i());
        let w: Vec<f64> = u.values().iter().map(|z| z.norm_sqr()).collect();
        let x: Vec<f64> = v.values().iter().map(|z| z.norm_sqr()).collect();
        assert_eq!(w, x);
    }
}
