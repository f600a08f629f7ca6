//! Uniform radial grids, finite-difference operators and the real inner product.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::banded::BandMatrix;
use crate::error::{Error, Result};

/// Surface measure of the unit sphere in dimension `dim` (with `|S^0| = 2`).
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("unsupported dimension"),
    }
}

/// Nodes `r_i = i h`, `i = 0..=n`, on `[0, R]` with weights for `int_{R^N} f(|y|) dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: usize, radius: f64, intervals: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain("dimension must be 1, 2 or 3"));
        }
        if !(radius > 0.0 && radius.is_finite()) || intervals < 16 {
            return Err(Error::domain("grid needs R > 0 and at least 16 intervals"));
        }
        let h = radius / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
        let omega = sphere_area(dim);
        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|&r| omega * r.powi(dim as i32 - 1) * h)
            .collect();
        weights[0] *= 0.5;
        weights[intervals] *= 0.5;
        if dim == 2 {
            // r f(r) is odd: Euler-Maclaurin corrections at the origin
            let c = 2.0 * PI * h * h;
            weights[0] += c * (1.0 / 12.0 + 30.0 / 2880.0 + 6.0 / 6048.0);
            weights[1] += c * (-32.0 / 2880.0 - 8.0 / 6048.0);
            weights[2] += c * (2.0 / 2880.0 + 2.0 / 6048.0);
        }
        Ok(Self { dim, radius, h, nodes, weights })
    }

    /// Default resolution used throughout: `R = 25`, 4096 intervals (2048 for `N = 2`,
    /// whose Hartree matrix is dense).
    pub fn standard(dim: usize) -> Result<Self> {
        match dim {
            2 => Self::new(2, 20.0, 2048),
            _ => Self::new(dim, 25.0, 4096),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of nodes (`intervals + 1`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The same geometry with twice as many intervals.
    pub fn refined(&self) -> Self {
        Self::new(self.dim, self.radius, 2 * self.intervals()).expect("refinement of a valid grid")
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm_sq(&self, f: &[f64]) -> f64 {
        self.dot(f, f)
    }
}

/// Finite-difference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Fourth,
    Sixth,
}

impl Stencil {
    pub fn half_width(self) -> usize {
        match self {
            Stencil::Fourth => 2,
            Stencil::Sixth => 3,
        }
    }

    /// First-derivative weights for offsets `-s..=s` (to be divided by `h`).
    fn first(self) -> &'static [f64] {
        const D4: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
        const D6: [f64; 7] = [
            -1.0 / 60.0,
            9.0 / 60.0,
            -45.0 / 60.0,
            0.0,
            45.0 / 60.0,
            -9.0 / 60.0,
            1.0 / 60.0,
        ];
        match self {
            Stencil::Fourth => &D4,
            Stencil::Sixth => &D6,
        }
    }

    /// Second-derivative weights for offsets `-s..=s` (to be divided by `h^2`).
    fn second(self) -> &'static [f64] {
        const D4: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
        const D6: [f64; 7] = [
            2.0 / 180.0,
            -27.0 / 180.0,
            270.0 / 180.0,
            -490.0 / 180.0,
            270.0 / 180.0,
            -27.0 / 180.0,
            2.0 / 180.0,
        ];
        match self {
            Stencil::Fourth => &D4,
            Stencil::Sixth => &D6,
        }
    }
}

/// Symmetry of the extension to negative `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Value at signed node index `i`: reflected through the origin, zero beyond `R`.
#[inline]
pub fn extended(values: &[f64], i: isize, parity: Parity) -> f64 {
    let j = i.unsigned_abs();
    if j >= values.len() {
        return 0.0;
    }
    if i < 0 && parity == Parity::Odd {
        -values[j]
    } else {
        values[j]
    }
}

fn apply_stencil(values: &[f64], parity: Parity, weights: &[f64], scale: f64) -> Vec<f64> {
    let s = (weights.len() / 2) as isize;
    (0..values.len() as isize)
        .map(|i| {
            let mut acc = 0.0;
            for (k, w) in weights.iter().enumerate() {
                if *w != 0.0 {
                    acc += w * extended(values, i + k as isize - s, parity);
                }
            }
            acc * scale
        })
        .collect()
}

/// `d/dr` of a field with the given parity; the result has the opposite parity.
pub fn derivative(grid: &RadialGrid, values: &[f64], parity: Parity, stencil: Stencil) -> Vec<f64> {
    apply_stencil(values, parity, stencil.first(), 1.0 / grid.h)
}

pub fn second_derivative(
    grid: &RadialGrid,
    values: &[f64],
    parity: Parity,
    stencil: Stencil,
) -> Vec<f64> {
    apply_stencil(values, parity, stencil.second(), 1.0 / (grid.h * grid.h))
}

/// Radial Laplacian `f'' + (N-1) f'/r` of an even field (`N f''(0)` at the origin).
pub fn laplacian(grid: &RadialGrid, values: &[f64], stencil: Stencil) -> Vec<f64> {
    let d1 = derivative(grid, values, Parity::Even, stencil);
    let mut d2 = second_derivative(grid, values, Parity::Even, stencil);
    let nm1 = (grid.dim - 1) as f64;
    if grid.dim > 1 {
        d2[0] *= grid.dim as f64;
        for i in 1..d2.len() {
            d2[i] += nm1 * d1[i] / grid.nodes[i];
        }
    }
    d2
}

/// Band matrix of [`laplacian`] acting on even fields.
pub fn laplacian_matrix(grid: &RadialGrid, stencil: Stencil) -> BandMatrix {
    let s = stencil.half_width();
    let n = grid.len();
    let mut m = BandMatrix::zeros(n, s, s);
    let d1 = stencil.first();
    let d2 = stencil.second();
    let (ih, ih2) = (1.0 / grid.h, 1.0 / (grid.h * grid.h));
    let nm1 = (grid.dim - 1) as f64;
    for i in 0..n {
        for k in 0..=2 * s {
            let off = i as isize + k as isize - s as isize;
            let col = off.unsigned_abs();
            if col >= n {
                continue;
            }
            let c = if i == 0 {
                grid.dim as f64 * d2[k] * ih2
            } else {
                d2[k] * ih2 + nm1 * d1[k] * ih / grid.nodes[i]
            };
            if c != 0.0 {
                m.add(i, col, c);
            }
        }
    }
    m
}

/// `(N/2) f + r f'` of an even real field.
pub fn lambda_real(grid: &RadialGrid, values: &[f64], stencil: Stencil) -> Vec<f64> {
    let d = derivative(grid, values, Parity::Even, stencil);
    let half = grid.dim as f64 / 2.0;
    values
        .iter()
        .zip(&d)
        .zip(&grid.nodes)
        .map(|((f, df), r)| half * f + r * df)
        .collect()
}

/// Base node and six-point Lagrange weights for nodes `base - 2 ..= base + 3`
/// at radius `0 <= r <= R`.
pub fn lagrange_weights(grid: &RadialGrid, r: f64) -> Option<(isize, [f64; 6])> {
    if !(r >= 0.0 && r <= grid.radius) {
        return None;
    }
    let x = r / grid.h;
    let i = (x.floor() as isize).min(grid.intervals() as isize - 1);
    let t = x - i as f64;
    let mut w = [0.0; 6];
    for (slot, a) in w.iter_mut().zip(-2..=3isize) {
        let mut l = 1.0;
        for b in -2..=3isize {
            if b != a {
                l *= (t - b as f64) / (a - b) as f64;
            }
        }
        *slot = l;
    }
    Some((i, w))
}

/// Six-point Lagrange interpolation at radius `r` (`r < 0` uses the parity).
pub fn interpolate(grid: &RadialGrid, values: &[f64], parity: Parity, r: f64) -> f64 {
    let (r, sign) = if r < 0.0 {
        (-r, if parity == Parity::Odd { -1.0 } else { 1.0 })
    } else {
        (r, 1.0)
    };
    let Some((i, w)) = lagrange_weights(grid, r) else { return 0.0 };
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        acc += wk * extended(values, i + k as isize - 2, parity);
    }
    sign * acc
}

/// Complex field sampled on a shared radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
    parity: Parity,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::domain("field has non-finite values"));
        }
        Ok(Self { grid, values, parity: Parity::Even })
    }

    pub fn from_real(grid: Arc<RadialGrid>, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_parts(grid: Arc<RadialGrid>, re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::GridMismatch);
        }
        Self::new(grid, re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| Complex64::new(f(r), 0.0)).collect();
        Self { grid, values, parity: Parity::Even }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values, parity: Parity::Even }
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            parity: self.parity,
        }
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// `(f, g)_2 = Re int f conj(g)`.
pub fn inner(f: &RadialField, g: &RadialField) -> Result<f64> {
    f.check_grid(g)?;
    Ok(f.grid
        .weights()
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(w, (a, b))| w * (a.re * b.re + a.im * b.im))
        .sum())
}

/// The scaling generator `(N/2) f + r f'`, applied to both channels.
pub fn apply_lambda(f: &RadialField) -> Result<RadialField> {
    if f.parity != Parity::Even {
        return Err(Error::usage("apply_lambda expects an even radial field"));
    }
    let g = &f.grid;
    let re = lambda_real(g, &f.re(), Stencil::Sixth);
    let im = lambda_real(g, &f.im(), Stencil::Sixth);
    RadialField::from_parts(g.clone(), &re, &im)
}

/// Squared norms `||f||_2^2`, `||grad f||_2^2`, `|| |y| f ||_2^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub var_sq: f64,
}

impl Norms {
    pub fn h1_sq(&self) -> f64 {
        self.l2_sq + self.grad_sq
    }
}

pub fn real_norms(grid: &RadialGrid, values: &[f64]) -> Norms {
    let d = derivative(grid, values, Parity::Even, Stencil::Sixth);
    let var: Vec<f64> = values.iter().zip(grid.nodes()).map(|(v, r)| v * r).collect();
    Norms {
        l2_sq: grid.norm_sq(values),
        grad_sq: grid.norm_sq(&d),
        var_sq: grid.norm_sq(&var),
    }
}

pub fn norms(f: &RadialField) -> Norms {
    let a = real_norms(&f.grid, &f.re());
    let b = real_norms(&f.grid, &f.im());
    Norms {
        l2_sq: a.l2_sq + b.l2_sq,
        grad_sq: a.grad_sq + b.grad_sq,
        var_sq: a.var_sq + b.var_sq,
    }
}

/// Fitted envelope `|f| <= C (1 + r)^kappa Q` used as the finite stand-in for
/// membership in the rapidly decaying class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub c: f64,
    pub kappa: f64,
    pub passed: bool,
}

const MAX_KAPPA: f64 = 12.0;

fn envelope(grid: &RadialGrid, f: &[f64], q: &[f64]) -> (f64, f64) {
    let cut = 1e-9 * q[0];
    let last = q.iter().rposition(|&x| x > cut).unwrap_or(0);
    let r_cut = grid.nodes()[last];
    let ratio = |i: usize, kappa: f64| f[i].abs() / (q[i] * (1.0 + grid.nodes()[i]).powf(kappa));
    let start = grid.nodes().iter().position(|&r| r >= 0.8 * r_cut).unwrap_or(0);
    let mut kappa = 0.0;
    loop {
        let whole = (0..=last).map(|i| ratio(i, kappa)).fold(0.0, f64::max);
        let tail = (start..=last).map(|i| ratio(i, kappa)).fold(0.0, f64::max);
        // the envelope must stop growing in the tail
        if tail <= ratio(start, kappa) * (1.0 + 1e-9) || kappa > MAX_KAPPA {
            return (whole, kappa);
        }
        kappa += 1.0;
    }
}

/// Checks the field and its first two derivatives against `(1 + r)^kappa Q`.
pub fn decay_fit(grid: &RadialGrid, f: &[f64], q: &[f64]) -> DecayFit {
    let d1 = derivative(grid, f, Parity::Even, Stencil::Sixth);
    let d2 = second_derivative(grid, f, Parity::Even, Stencil::Sixth);
    let mut worst = (0.0f64, 0.0f64);
    for g in [f, &d1[..], &d2[..]] {
        let (c, k) = envelope(grid, g, q);
        worst = (worst.0.max(c), worst.1.max(k));
    }
    DecayFit {
        c: worst.0,
        kappa: worst.1,
        passed: worst.1 <= MAX_KAPPA && worst.0.is_finite(),
    }
}
