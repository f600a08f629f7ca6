//! Periodic Cartesian boxes in one and two dimensions.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, LabResult};

/// Complex samples on the periodic box `[-L/2, L/2)^N`, `x_j = -L/2 + j L/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CartesianField {
    dim: usize,
    extent: f64,
    n: usize,
    values: Vec<Complex64>,
    pub t: f64,
}

impl CartesianField {
    pub fn new(dim: usize, extent: f64, n: usize, values: Vec<Complex64>, t: f64) -> LabResult<Self> {
        check_shape(dim, extent, n)?;
        if values.len() != n.pow(dim as u32) {
            return Err(LabError::Shape(format!(
                "{} values for a {dim}-dimensional box with {n} cells per axis",
                values.len()
            )));
        }
        Ok(Self { dim, extent, n, values, t })
    }

    pub fn zeros(dim: usize, extent: f64, n: usize) -> LabResult<Self> {
        check_shape(dim, extent, n)?;
        Ok(Self { dim, extent, n, values: vec![Complex64::new(0.0, 0.0); n.pow(dim as u32)], t: 0.0 })
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(dim: usize, extent: f64, n: usize, f: impl Fn(&[f64]) -> Complex64) -> LabResult<Self> {
        let mut out = Self::zeros(dim, extent, n)?;
        let xs = out.coords();
        let mut p = [0.0; 2];
        for (idx, v) in out.values.iter_mut().enumerate() {
            let (i, j) = (idx / n, idx % n);
            if dim == 1 {
                p[0] = xs[idx];
            } else {
                p[0] = xs[i];
                p[1] = xs[j];
            }
            *v = f(&p[..dim]);
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Node coordinates along one axis.
    pub fn coords(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|j| -0.5 * self.extent + j as f64 * dx).collect()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `|x|` of node `idx`.
    pub fn radius_at(&self, idx: usize, coords: &[f64]) -> f64 {
        match self.dim {
            1 => coords[idx].abs(),
            _ => coords[idx / self.n].hypot(coords[idx % self.n]),
        }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    /// Fraction of the mass in the outer tenth of the box along any axis.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let xs = self.coords();
        let edge = 0.4 * self.extent;
        let outer = |i: usize| xs[i].abs() > edge;
        let mut total = 0.0;
        let mut near = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            total += m;
            let hit = match self.dim {
                1 => outer(idx),
                _ => outer(idx / self.n) || outer(idx % self.n),
            };
            if hit {
                near += m;
            }
        }
        if total > 0.0 {
            near / total
        } else {
            0.0
        }
    }

    /// Multiplies by `e^{i gamma}`.
    pub fn rotate(&mut self, gamma: f64) {
        let c = Complex64::from_polar(1.0, gamma);
        self.values.iter_mut().for_each(|v| *v *= c);
    }
}

fn check_shape(dim: usize, extent: f64, n: usize) -> LabResult<()> {
    if !(dim == 1 || dim == 2) {
        return Err(LabError::Shape(format!("Cartesian evolution supports N = 1, 2, not {dim}")));
    }
    if !n.is_power_of_two() || n < 8 {
        return Err(LabError::Shape(format!("cell count {n} must be a power of two >= 8")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(LabError::Shape(format!("box extent {extent} must be positive")));
    }
    Ok(())
}

/// Angular wavenumbers `2 pi k / L` in FFT order.
pub fn wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            TAU * m / extent
        })
        .collect()
}

/// Unnormalized forward and inverse transforms on an `n^N` box.
#[derive(Clone)]
pub struct Fft2 {
    dim: usize,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2 {{ dim: {}, n: {} }}", self.dim, self.n)
    }
}

impl Fft2 {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { dim, n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Inverse transform including the `1/n^N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        // rows are contiguous; in 2D the columns go through a gather buffer
        plan.process(data);
        if self.dim == 2 {
            let n = self.n;
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                plan.process(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }
}

/// `|xi|^2` for every mode of an `n^N` box, in FFT order.
pub fn wavenumber_sq(dim: usize, n: usize, extent: f64) -> Vec<f64> {
    let k = wavenumbers(n, extent);
    match dim {
        1 => k.iter().map(|v| v * v).collect(),
        _ => (0..n * n).map(|idx| k[idx / n].powi(2) + k[idx % n].powi(2)).collect(),
    }
}

/// `||grad u||_2^2` by the spectral derivative.
pub fn grad_sq(field: &CartesianField, fft: &Fft2) -> f64 {
    let mut w = field.values().to_vec();
    fft.forward(&mut w);
    let k2 = wavenumber_sq(field.dim(), field.cells(), field.extent());
    let s: f64 = w.iter().zip(&k2).map(|(v, k)| v.norm_sqr() * k).sum();
    s * field.cell_volume() / fft.len() as f64
}
