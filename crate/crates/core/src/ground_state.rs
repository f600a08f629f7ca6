//! The ground state `Q`, its companions `Lambda Q`, `|y|^2 Q`, `rho`, and the
//! linearized operators `L+`, `L-`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::radial::{self, laplacian_matrix, RadialField, RadialGrid, Stencil};

/// Power `4/N` of the mass-critical nonlinearity.
pub fn critical_power(dim: usize) -> f64 {
    4.0 / dim as f64
}

pub(crate) fn pow_4n(dim: usize, q: f64) -> f64 {
    match dim {
        1 => {
            let q2 = q * q;
            q2 * q2
        }
        2 => q * q,
        _ => q.abs().powf(4.0 / 3.0),
    }
}

/// `-Delta + 1 - c V` as a band matrix.
fn schrodinger_matrix(grid: &RadialGrid, stencil: Stencil, potential: &[f64], c: f64) -> BandMatrix {
    let mut m = laplacian_matrix(grid, stencil);
    let n = grid.len();
    let s = stencil.half_width();
    for i in 0..n {
        for j in i.saturating_sub(s)..=(i + s).min(n - 1) {
            let v = m.get(i, j);
            if v != 0.0 {
                m.set(i, j, -v);
            }
        }
        m.add(i, i, 1.0 - c * potential[i]);
    }
    m
}

fn stationary_residual(grid: &RadialGrid, a: &BandMatrix, q: &[f64]) -> Vec<f64> {
    let dim = grid.dim();
    let aq = a.mul_vec(q);
    aq.iter().zip(q).map(|(x, &qi)| x - pow_4n(dim, qi) * qi).collect()
}

#[derive(Debug, Clone)]
pub struct GroundStateBundle {
    grid: Arc<RadialGrid>,
    q: Vec<f64>,
    lambda_q: Vec<f64>,
    r2q: Vec<f64>,
    rho: Vec<f64>,
    /// `||Q||_2^2`
    pub mass: f64,
    /// `|| |y| Q ||_2^2`
    pub variance: f64,
    /// `||grad Q||_2^2`
    pub grad_sq: f64,
    /// `||-Delta Q + Q - Q^{1+4/N}||_2` with the solver's discretization.
    pub residual: f64,
    /// Relative residual of `L+ rho = |y|^2 Q` with the solver's discretization.
    pub rho_residual: f64,
    pub iterations: usize,
    lplus: BandMatrix,
    lminus: BandMatrix,
    lplus_lu: BandLu,
    lminus_lu: BandLu,
    pin: usize,
}

/// Result of a solve with `L-`, whose kernel is spanned by `Q`.
#[derive(Debug, Clone)]
pub struct LminusSolution {
    /// Solution normalized by `(x, Q)_2 = 0`.
    pub x: Vec<f64>,
    /// `(rhs, Q)_2`: must vanish for the equation to be solvable.
    pub orthogonality: f64,
    /// Residual of the equation dropped to fix the kernel direction.
    pub dropped_row: f64,
}

impl GroundStateBundle {
    /// Spectral renormalization (Petviashvili) from a Gaussian seed, then Newton
    /// polishing with `L+`.
    pub fn solve(grid: Arc<RadialGrid>, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        if grid.radius() < 15.0 {
            return Err(Error::domain("ground state needs R >= 15"));
        }
        let dim = grid.dim();
        let p = 1.0 + critical_power(dim);
        let gamma = p / (p - 1.0);
        let st = Stencil::Sixth;
        let zero = vec![0.0; grid.len()];
        let a = schrodinger_matrix(&grid, st, &zero, 0.0);
        let a_lu = a.lu()?;
        let mut q: Vec<f64> = grid.nodes().iter().map(|r| 2.0 * (-r * r / 4.0).exp()).collect();
        let mut history = Vec::new();
        let mut iterations = 0;
        for it in 0..400 {
            iterations = it + 1;
            let nl: Vec<f64> = q.iter().map(|&x| pow_4n(dim, x) * x).collect();
            let num = grid.dot(&a.mul_vec(&q), &q);
            let den = grid.dot(&nl, &q);
            let m = num / den;
            let v = a_lu.solve(&nl);
            let fac = m.powf(gamma);
            let next: Vec<f64> = v.iter().map(|x| fac * x).collect();
            let change = next
                .iter()
                .zip(&q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            q = next;
            history.push(change);
            if change < 1e-10 {
                break;
            }
        }
        for _ in 0..8 {
            let res = stationary_residual(&grid, &a, &q);
            let rn = grid.norm_sq(&res).sqrt();
            history.push(rn);
            if rn < 1e-3 * tol {
                break;
            }
            let pot: Vec<f64> = q.iter().map(|&x| pow_4n(dim, x)).collect();
            let lp = schrodinger_matrix(&grid, st, &pot, p);
            let delta = lp.lu()?.solve(&res);
            q.iter_mut().zip(&delta).for_each(|(x, d)| *x -= d);
            iterations += 1;
        }
        let res = grid.norm_sq(&stationary_residual(&grid, &a, &q)).sqrt();
        if !(res <= tol) || q.iter().any(|&x| x < -1e-10) {
            return Err(Error::SolverFailure {
                what: "ground state iteration",
                iterations,
                last: res,
                history,
            });
        }
        Self::assemble(grid, q, res, iterations)
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::solve(Arc::new(RadialGrid::standard(dim)?), 1e-10)
    }

    fn assemble(grid: Arc<RadialGrid>, q: Vec<f64>, residual: f64, iterations: usize) -> Result<Self> {
        let dim = grid.dim();
        let p = 1.0 + critical_power(dim);
        let st = Stencil::Sixth;
        let pot: Vec<f64> = q.iter().map(|&x| pow_4n(dim, x)).collect();
        let lplus = schrodinger_matrix(&grid, st, &pot, p);
        let lminus = schrodinger_matrix(&grid, st, &pot, 1.0);
        let lplus_lu = lplus.lu()?;
        let pin = (0..grid.len())
            .max_by(|&i, &j| {
                (grid.weights()[i] * q[i])
                    .partial_cmp(&(grid.weights()[j] * q[j]))
                    .unwrap()
            })
            .unwrap();
        let mut pinned = lminus.clone();
        pinned.clear_row(pin);
        pinned.set(pin, pin, 1.0);
        let lminus_lu = pinned.lu()?;
        let lambda_q = radial::lambda_real(&grid, &q, st);
        let r2q: Vec<f64> = q.iter().zip(grid.nodes()).map(|(v, r)| r * r * v).collect();
        let rho = lplus_lu.solve(&r2q);
        let lr = lplus.mul_vec(&rho);
        let diff: Vec<f64> = lr.iter().zip(&r2q).map(|(a, b)| a - b).collect();
        let rho_residual = (grid.norm_sq(&diff) / grid.norm_sq(&r2q)).sqrt();
        if !(rho_residual < 1e-6) {
            return Err(Error::Singular("L+ rho = |y|^2 Q"));
        }
        let norms = radial::real_norms(&grid, &q);
        Ok(Self {
            grid,
            q,
            lambda_q,
            r2q,
            rho,
            mass: norms.l2_sq,
            variance: norms.var_sq,
            grad_sq: norms.grad_sq,
            residual,
            rho_residual,
            iterations,
            lplus,
            lminus,
            lplus_lu,
            lminus_lu,
            pin,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn lambda_q(&self) -> &[f64] {
        &self.lambda_q
    }

    pub fn r2q(&self) -> &[f64] {
        &self.r2q
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn field(&self, values: &[f64]) -> RadialField {
        RadialField::from_real(self.grid.clone(), values).expect("bundle arrays match the grid")
    }

    /// `L+` with the solver discretization.
    pub fn lplus_apply(&self, f: &[f64]) -> Vec<f64> {
        self.lplus.mul_vec(f)
    }

    /// `L-` with the solver discretization.
    pub fn lminus_apply(&self, f: &[f64]) -> Vec<f64> {
        self.lminus.mul_vec(f)
    }

    pub fn solve_lplus(&self, rhs: &[f64]) -> Vec<f64> {
        self.lplus_lu.solve(rhs)
    }

    /// Solves `L- x = rhs` on the complement of `Q`.
    pub fn solve_lminus(&self, rhs: &[f64]) -> LminusSolution {
        let g = &self.grid;
        let orthogonality = g.dot(rhs, &self.q);
        let mut b = rhs.to_vec();
        b[self.pin] = 0.0;
        let mut x = self.lminus_lu.solve(&b);
        let c = g.dot(&x, &self.q) / self.mass;
        x.iter_mut().zip(&self.q).for_each(|(v, q)| *v -= c * q);
        let lx = self.lminus.mul_vec(&x);
        let dropped_row = (lx[self.pin] - rhs[self.pin]).abs() * g.weights()[self.pin].sqrt();
        LminusSolution { x, orthogonality, dropped_row }
    }

    fn operator(&self, f: &RadialField, c: f64) -> Result<RadialField> {
        if !(Arc::ptr_eq(f.grid(), &self.grid) || **f.grid() == *self.grid) {
            return Err(Error::GridMismatch);
        }
        let st = Stencil::Fourth;
        let dim = self.dim();
        let apply = |v: &[f64]| -> Vec<f64> {
            let lap = radial::laplacian(&self.grid, v, st);
            lap.iter()
                .zip(v)
                .zip(&self.q)
                .map(|((l, x), &q)| -l + x - c * pow_4n(dim, q) * x)
                .collect()
        };
        RadialField::from_parts(self.grid.clone(), &apply(&f.re()), &apply(&f.im()))
    }

    /// `L+ = -Delta + 1 - (1 + 4/N) Q^{4/N}` (fourth-order stencil).
    pub fn apply_lplus(&self, f: &RadialField) -> Result<RadialField> {
        self.operator(f, 1.0 + critical_power(self.dim()))
    }

    /// `L- = -Delta + 1 - Q^{4/N}` (fourth-order stencil).
    pub fn apply_lminus(&self, f: &RadialField) -> Result<RadialField> {
        self.operator(f, 1.0)
    }
}

/// Outcome of the shooting cross-check.
#[derive(Debug, Clone, Copy)]
pub struct Shooting {
    pub q0: f64,
    pub mass: f64,
}

fn shoot_once(dim: usize, a: f64, step: f64, r_max: f64) -> (bool, f64) {
    let p = 1.0 + critical_power(dim);
    let nm1 = (dim - 1) as f64;
    let omega = radial::sphere_area(dim);
    let c = (a - a.powf(p)) / (2.0 * dim as f64);
    let d = (1.0 - p * a.powf(p - 1.0)) * c / (4.0 * (dim as f64 + 2.0));
    let r0 = 1e-2;
    let q = a + c * r0 * r0 + d * r0.powi(4);
    let dq = 2.0 * c * r0 + 4.0 * d * r0.powi(3);
    // mass of the ball of radius r0
    let nf = dim as f64;
    let m0 = omega * (a * a * r0.powf(nf) / nf + 2.0 * a * c * r0.powf(nf + 2.0) / (nf + 2.0));
    let rhs = |r: f64, y: [f64; 3]| -> [f64; 3] {
        let qq = y[0];
        [
            y[1],
            -nm1 / r * y[1] + qq - pow_4n(dim, qq) * qq,
            omega * r.powi(dim as i32 - 1) * qq * qq,
        ]
    };
    let mut y = [q, dq, m0];
    let mut r = r0;
    while r < r_max {
        let k1 = rhs(r, y);
        let k2 = rhs(r + step / 2.0, core::array::from_fn(|i| y[i] + step / 2.0 * k1[i]));
        let k3 = rhs(r + step / 2.0, core::array::from_fn(|i| y[i] + step / 2.0 * k2[i]));
        let k4 = rhs(r + step, core::array::from_fn(|i| y[i] + step * k3[i]));
        for i in 0..3 {
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += step;
        if y[0] < 0.0 {
            return (true, y[2]);
        }
        if y[1] > 0.0 {
            return (false, y[2]);
        }
    }
    (false, y[2])
}

/// Independent ground state by shooting on `Q(0)`: RK4 from a series start,
/// bisection between overshoot (sign change) and undershoot (turning point).
pub fn shoot(dim: usize) -> Result<Shooting> {
    if !(1..=3).contains(&dim) {
        return Err(Error::domain("dimension must be 1, 2 or 3"));
    }
    let step = 1e-3;
    let r_max = 40.0;
    let (mut lo, mut hi) = (1.01, 10.0);
    if shoot_once(dim, lo, step, r_max).0 || !shoot_once(dim, hi, step, r_max).0 {
        return Err(Error::NoBracket { what: "shooting on Q(0)", lo, hi });
    }
    let mut mass = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (over, m) = shoot_once(dim, mid, step, r_max);
        mass = m;
        if over {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Shooting { q0: 0.5 * (lo + hi), mass })
}
