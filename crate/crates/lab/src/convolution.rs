//! Free-space Riesz potentials on the Cartesian box by zero-padded FFT
//! convolution with a singularity-corrected kernel table.

use hartree_blowup_core::hartree::{singular_table, RieszKernel};
use hartree_blowup_core::special::{dirichlet_beta, zeta};
use num_complex::Complex64;

use crate::error::{LabError, LabResult};
use crate::field::Fft2;

/// `sum'_{m in Z^2} |m|^{-s}`, continued analytically.
pub fn lattice_zeta(s: f64) -> f64 {
    4.0 * zeta(0.5 * s) * dirichlet_beta(0.5 * s)
}

/// Quadrature weights `W_m` with `sum_m W_m g(m h) ~ int |x|^{-2 sigma} g(x) dx`
/// on the plane, indexed by `(m1, m2)` with `|m_i| <= len`.
pub fn plane_table(sigma: f64, h: f64, len: usize) -> impl Fn(i64, i64) -> f64 {
    let p = -2.0 * sigma;
    let hp = h.powf(2.0 + p);
    let c0 = -lattice_zeta(2.0 * sigma) * hp;
    // five-point Laplacian term of the generalized Euler-Maclaurin expansion
    let c2 = -0.25 * lattice_zeta(2.0 * sigma - 2.0) * hp;
    move |m1: i64, m2: i64| {
        debug_assert!(m1.unsigned_abs() as usize <= len && m2.unsigned_abs() as usize <= len);
        let r2 = (m1 * m1 + m2 * m2) as f64;
        match (m1.abs(), m2.abs()) {
            (0, 0) => c0 - 4.0 * c2,
            (1, 0) | (0, 1) => h * h * (r2.sqrt() * h).powf(p) + c2,
            _ => h * h * (r2.sqrt() * h).powf(p),
        }
    }
}

/// `(|x|^{-2 sigma} * rho)` at every node of an `n^N` box of extent `L`,
/// computed without periodic wrap.
#[derive(Debug, Clone)]
pub struct CartesianHartree {
    kernel: RieszKernel,
    dim: usize,
    n: usize,
    extent: f64,
    fft: Fft2,
    kernel_hat: Vec<Complex64>,
}

impl CartesianHartree {
    pub fn new(kernel: RieszKernel, n: usize, extent: f64) -> LabResult<Self> {
        let dim = kernel.dim();
        if dim > 2 {
            return Err(LabError::Shape("Cartesian convolution supports N = 1, 2".into()));
        }
        let m = 2 * n;
        let h = extent / n as f64;
        let sigma = kernel.sigma();
        let wrap = |k: usize| if k <= n { k as i64 } else { k as i64 - m as i64 };
        let mut table = vec![Complex64::new(0.0, 0.0); m.pow(dim as u32)];
        if dim == 1 {
            let t = singular_table(-2.0 * sigma, h, n + 1);
            for (k, v) in table.iter_mut().enumerate() {
                *v = Complex64::new(t[wrap(k).unsigned_abs() as usize], 0.0);
            }
        } else {
            let w = plane_table(sigma, h, n);
            for (idx, v) in table.iter_mut().enumerate() {
                *v = Complex64::new(w(wrap(idx / m), wrap(idx % m)), 0.0);
            }
        }
        let fft = Fft2::new(dim, m);
        fft.forward(&mut table);
        Ok(Self { kernel, dim, n, extent, fft, kernel_hat: table })
    }

    pub fn kernel(&self) -> &RieszKernel {
        &self.kernel
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn apply(&self, density: &[f64]) -> Vec<f64> {
        let (n, m) = (self.n, 2 * self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); m.pow(self.dim as u32)];
        if self.dim == 1 {
            for (b, d) in buf.iter_mut().zip(density) {
                b.re = *d;
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    buf[i * m + j].re = density[i * n + j];
                }
            }
        }
        self.fft.forward(&mut buf);
        buf.iter_mut().zip(&self.kernel_hat).for_each(|(b, k)| *b *= k);
        self.fft.inverse(&mut buf);
        if self.dim == 1 {
            buf[..n].iter().map(|v| v.re).collect()
        } else {
            (0..n * n).map(|idx| buf[(idx / n) * m + idx % n].re).collect()
        }
    }
}
