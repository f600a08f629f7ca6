//! Transport between radial profiles and the Cartesian box, and the
//! modulation decomposition of Cartesian solutions.

use hartree_blowup_core::modulation::{
    decompose, DecomposeOptions, Epsilon, ModParams, ModulationState, ProfileFrame, Snapshot,
};
use hartree_blowup_core::profile::ProfileCoeffs;
use hartree_blowup_core::radial::{Norms, RadialField};
use num_complex::Complex64;

use crate::error::{LabError, LabResult};
use crate::field::{wavenumbers, CartesianField, Fft2};

/// Cells per unit of `lambda` below which a profile counts as unresolved.
pub const MIN_CORE_CELLS: f64 = 16.0;

/// Angles used for the angular average in two dimensions.
const ANGLES: usize = 64;

/// `P_{lambda,b,gamma}` sampled on the box.
pub fn rescale_profile(
    profile: &ProfileCoeffs,
    params: ModParams,
    dim: usize,
    extent: f64,
    n: usize,
    t: f64,
) -> LabResult<CartesianField> {
    if profile.dim() != dim {
        return Err(LabError::Shape(format!("profile has N = {}, box has N = {dim}", profile.dim())));
    }
    let dx = extent / n as f64;
    let cells = params.lambda / dx;
    if cells < MIN_CORE_CELLS {
        let need = (MIN_CORE_CELLS * extent / params.lambda).log2().ceil().exp2();
        return Err(LabError::Unresolved(format!(
            "lambda = {:.3e} spans {cells:.1} cells of width {dx:.3e}; use at least {need} cells or a box narrower than {:.3e}",
            params.lambda,
            params.lambda * n as f64 / MIN_CORE_CELLS
        )));
    }
    let frame = ProfileFrame::new(profile, params)?;
    let mut field = CartesianField::from_fn(dim, extent, n, |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        frame.physical(r)[0]
    })?;
    field.t = t;
    Ok(field)
}

/// A radial field placed at `center` on the box, zero beyond its radius.
pub fn radial_to_cartesian(
    f: &RadialField,
    center: &[f64],
    extent: f64,
    n: usize,
) -> LabResult<CartesianField> {
    let dim = f.grid().dim();
    if center.len() != dim {
        return Err(LabError::Shape("center has the wrong dimension".into()));
    }
    let (re, im) = (f.re(), f.im());
    let g = f.grid().clone();
    CartesianField::from_fn(dim, extent, n, |x| {
        let r = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        Complex64::new(
            hartree_blowup_core::radial::interpolate(&g, &re, f.parity(), r),
            hartree_blowup_core::radial::interpolate(&g, &im, f.parity(), r),
        )
    })
}

/// Six-point Lagrange weights at offset `theta` in `[0, 1)` for nodes `-2..=3`.
fn lagrange6(theta: f64) -> [f64; 6] {
    let mut w = [0.0; 6];
    for (k, wk) in w.iter_mut().enumerate() {
        let xk = k as f64 - 2.0;
        let mut p = 1.0;
        for m in 0..6 {
            if m != k {
                let xm = m as f64 - 2.0;
                p *= (theta - xm) / (xk - xm);
            }
        }
        *wk = p;
    }
    w
}

/// A Cartesian solution seen through the modulation machinery.
#[derive(Debug, Clone)]
pub struct CartesianSnapshot<'a> {
    field: &'a CartesianField,
    fft: &'a Fft2,
    coords: Vec<f64>,
}

impl<'a> CartesianSnapshot<'a> {
    pub fn new(field: &'a CartesianField, fft: &'a Fft2) -> Self {
        assert_eq!(fft.len(), field.values().len(), "transform size does not match the field");
        Self { coords: field.coords(), field, fft }
    }

    /// Periodic interpolation of the field at a point.
    pub fn sample(&self, x: &[f64]) -> Complex64 {
        let n = self.field.cells();
        let dx = self.field.dx();
        let x0 = -0.5 * self.field.extent();
        let locate = |v: f64| {
            let s = (v - x0) / dx;
            let base = s.floor();
            (base as i64, lagrange6(s - base))
        };
        let wrap = |i: i64| i.rem_euclid(n as i64) as usize;
        let u = self.field.values();
        match self.field.dim() {
            1 => {
                let (b, w) = locate(x[0]);
                w.iter().enumerate().map(|(k, wk)| u[wrap(b + k as i64 - 2)] * wk).sum()
            }
            _ => {
                let (b0, w0) = locate(x[0]);
                let (b1, w1) = locate(x[1]);
                let mut acc = Complex64::new(0.0, 0.0);
                for (k0, a) in w0.iter().enumerate() {
                    let row = wrap(b0 + k0 as i64 - 2) * n;
                    let mut inner = Complex64::new(0.0, 0.0);
                    for (k1, c) in w1.iter().enumerate() {
                        inner += u[row + wrap(b1 + k1 as i64 - 2)] * c;
                    }
                    acc += inner * a;
                }
                acc
            }
        }
    }

    /// Average of the field over the sphere of radius `r`.
    fn spherical_mean(&self, r: f64) -> Complex64 {
        match self.field.dim() {
            1 => 0.5 * (self.sample(&[r]) + self.sample(&[-r])),
            _ => {
                let s: Complex64 = (0..ANGLES)
                    .map(|k| {
                        let a = std::f64::consts::TAU * k as f64 / ANGLES as f64;
                        self.sample(&[r * a.cos(), r * a.sin()])
                    })
                    .sum();
                s / ANGLES as f64
            }
        }
    }

    /// `u - P_{lambda,b,gamma}` at every node.
    fn difference(&self, frame: &ProfileFrame) -> Vec<Complex64> {
        self.field
            .values()
            .iter()
            .enumerate()
            .map(|(idx, &u)| u - frame.physical(self.field.radius_at(idx, &self.coords))[0])
            .collect()
    }
}

impl Snapshot for CartesianSnapshot<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn time(&self) -> f64 {
        self.field.t
    }

    fn orthogonality(&self, frame: &ProfileFrame) -> [f64; 3] {
        let reach = frame.grid().radius() * frame.params().lambda;
        let dv = self.field.cell_volume();
        let mut acc = [0.0; 3];
        for (idx, &u) in self.field.values().iter().enumerate() {
            let r = self.field.radius_at(idx, &self.coords);
            if r >= reach {
                continue;
            }
            let s = frame.physical(r);
            let e = u - s[0];
            for (a, d) in acc.iter_mut().zip(&s[1..]) {
                *a += dv * (e * d.conj()).re;
            }
        }
        acc
    }

    fn epsilon(&self, frame: &ProfileFrame) -> LabCoreResult<Epsilon> {
        let ModParams { lambda, b, gamma } = frame.params();
        let dim = self.field.dim();
        let n = self.field.cells();
        let dv = self.field.cell_volume();
        let diff = self.difference(frame);

        // gradient in rescaled variables: lambda^2 || grad e + i b x e / (2 lambda^2) ||^2
        let k = wavenumbers(n, self.field.extent());
        let mut hat = diff.clone();
        self.fft.forward(&mut hat);
        let chirp = 0.5 * b / (lambda * lambda);
        let mut grad = 0.0;
        for axis in 0..dim {
            let mut g: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let kk = match (dim, axis) {
                        (1, _) => k[idx],
                        (_, 0) => k[idx / n],
                        _ => k[idx % n],
                    };
                    v * Complex64::new(0.0, kk)
                })
                .collect();
            self.fft.inverse(&mut g);
            for (idx, (gv, e)) in g.iter().zip(&diff).enumerate() {
                let x = match (dim, axis) {
                    (1, _) => self.coords[idx],
                    (_, 0) => self.coords[idx / n],
                    _ => self.coords[idx % n],
                };
                grad += (gv + Complex64::new(0.0, chirp * x) * e).norm_sqr();
            }
        }
        let mut l2 = 0.0;
        let mut var = 0.0;
        for (idx, e) in diff.iter().enumerate() {
            let r = self.field.radius_at(idx, &self.coords);
            l2 += e.norm_sqr();
            var += r * r * e.norm_sqr();
        }
        let norms = Norms {
            l2_sq: l2 * dv,
            grad_sq: grad * dv * lambda * lambda,
            var_sq: var * dv / (lambda * lambda),
        };

        let pg = frame.grid().clone();
        let half = 0.5 * self.field.extent() - 3.0 * self.field.dx();
        let scale = lambda.powf(0.5 * dim as f64);
        let values: Vec<Complex64> = pg
            .nodes()
            .iter()
            .map(|&y| {
                let r = lambda * y;
                let u = if r < half { self.spherical_mean(r) } else { Complex64::new(0.0, 0.0) };
                u * Complex64::from_polar(scale, 0.25 * b * y * y - gamma) - frame.rescaled(y)[0]
            })
            .collect();
        let radial = RadialField::new(pg, values)?;

        let nonradial = if dim == 1 {
            // odd part, pairing x_j with x_{n-j}
            let odd: f64 = (1..n).map(|j| (0.5 * (diff[j] - diff[n - j])).norm_sqr()).sum();
            (odd * dv).sqrt()
        } else {
            let rad = hartree_blowup_core::radial::norms(&radial).l2_sq;
            (norms.l2_sq - rad).max(0.0).sqrt()
        };
        Ok(Epsilon { radial, norms, nonradial })
    }
}

type LabCoreResult<T> = hartree_blowup_core::Result<T>;

/// Decomposition of a Cartesian field.
pub fn decompose_field(
    field: &CartesianField,
    fft: &Fft2,
    profile: &ProfileCoeffs,
    guess: ModParams,
    opts: &DecomposeOptions,
) -> LabResult<ModulationState> {
    let snap = CartesianSnapshot::new(field, fft);
    Ok(decompose(&snap, profile, guess, opts)?)
}

/// Rough parameters of a field: `lambda` from the gradient norm, `b = 0`,
/// `gamma` from the phase at the peak.
pub fn initial_guess(field: &CartesianField, fft: &Fft2, profile: &ProfileCoeffs) -> ModParams {
    let q = profile.bundle();
    let grad_q = q.grad_sq.sqrt();
    let g = crate::field::grad_sq(field, fft).sqrt();
    let peak = field
        .values()
        .iter()
        .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    ModParams::new(grad_q / g, 0.0, peak.arg().rem_euclid(std::f64::consts::TAU))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hartree_blowup_core::ground_state::GroundStateBundle;
    use hartree_blowup_core::hartree::{RadialConvolver, RieszKernel};
    use hartree_blowup_core::profile::solve_all;
    use std::sync::{Arc, OnceLock};

    fn profile() -> &'static ProfileCoeffs {
        static P: OnceLock<ProfileCoeffs> = OnceLock::new();
        P.get_or_init(|| {
            let b = Arc::new(GroundStateBundle::standard(1).unwrap());
            let c = Arc::new(RadialConvolver::new(b.grid().clone(), RieszKernel::new(0.3, 1).unwrap()).unwrap());
            solve_all(1, b, c).unwrap()
        })
    }

    #[test]
    fn lagrange_reproduces_quintics() {
        let w = lagrange6(0.37);
        let p = |x: f64| 1.0 - 2.0 * x + x.powi(3) - 0.5 * x.powi(5);
        let got: f64 = w.iter().enumerate().map(|(k, wk)| wk * p(k as f64 - 2.0)).sum();
        assert!((got - p(0.37)).abs() < 1e-12);
    }

    #[test]
    fn under_resolved_profile_is_rejected() {
        let e = rescale_profile(profile(), ModParams::new(0.01, 0.0, 0.0), 1, 10.0, 1024, 0.0).unwrap_err();
        assert!(matches!(e, LabError::Unresolved(_)), "{e}");
    }

    #[test]
    fn cartesian_round_trip() {
        let lambda = 0.05;
        let params = ModParams::new(lambda, 0.08, 1.3);
        let n = 4096;
        let u = rescale_profile(profile(), params, 1, 64.0 * lambda, n, -1.0).unwrap();
        let fft = Fft2::new(1, n);
        let guess = ModParams::new(lambda * 1.05, 0.06, 1.25);
        let s = decompose_field(&u, &fft, profile(), guess, &DecomposeOptions::default()).unwrap();
        assert!((s.lambda / lambda - 1.0).abs() < 1e-10, "{}", s.lambda);
        assert!((s.b - 0.08).abs() < 1e-10, "{}", s.b);
        assert!((s.gamma - 1.3).abs() < 1e-10, "{}", s.gamma);
        assert!(s.eps_h1 < 1e-9, "{}", s.eps_h1);
        assert!(s.nonradial < 1e-12);
    }
}
