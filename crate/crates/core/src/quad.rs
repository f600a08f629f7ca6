//! One-dimensional quadrature and root bracketing.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) with global bisection of the worst panel.
/// Returns `(value, error estimate)`.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: usize,
) -> Result<(f64, f64)> {
    let (v, e) = kronrod_panel(&mut f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64, usize)> = alloc::vec![(a, b, v, e, 0)];
    let max_panels = 4000;
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Consistency(alloc::format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (pa, pb, _, _, depth) = panels.swap_remove(idx);
        if depth >= max_depth || panels.len() > max_panels {
            return Err(Error::SolverFailure {
                what: "adaptive quadrature",
                iterations: panels.len(),
                last: err,
                history: Vec::new(),
            });
        }
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = kronrod_panel(&mut f, pa, mid);
        let (v2, e2) = kronrod_panel(&mut f, mid, pb);
        panels.push((pa, mid, v1, e1, depth + 1));
        panels.push((mid, pb, v2, e2, depth + 1));
    }
}

/// Double-exponential (tanh-sinh) quadrature; tolerates integrable endpoint
/// singularities. `f` receives `(x, distance to a, distance to b)` so that
/// singular factors can be evaluated without cancellation.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    use core::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let mut step = 1.0;
    let mut sum = FRAC_PI_2 * f(0.5 * (a + b), half, half);
    let mut prev = f64::NAN;
    let tmax = 4.5;
    for level in 0..12 {
        let mut k = 1usize;
        loop {
            // at refined levels only odd multiples are new
            if level > 0 && k.is_multiple_of(2) {
                k += 1;
                continue;
            }
            let t = k as f64 * step;
            if t > tmax {
                break;
            }
            let u = FRAC_PI_2 * t.sinh();
            let cu = u.cosh();
            let w = FRAC_PI_2 * t.cosh() / (cu * cu);
            // distance from each endpoint: half * (1 - tanh u) = half * 2 / (1 + e^{2u})
            let d = half * 2.0 / (1.0 + (2.0 * u).exp());
            let xl = a + d;
            let xr = b - d;
            let fl = f(xl, d, b - a - d);
            let fr = f(xr, b - a - d, d);
            let contrib = w * (fl + fr);
            if contrib.is_finite() {
                sum += contrib;
            }
            k += 1;
        }
        let estimate = sum * step * half;
        if level > 2 && (estimate - prev).abs() <= tol * estimate.abs().max(1e-300) {
            return estimate;
        }
        prev = estimate;
        step *= 0.5;
    }
    prev
}

/// Fixed tanh-sinh rule on `[0, 1]`: `(distance to 0, distance to 1, weight)`.
pub fn tanh_sinh_rule(step: f64) -> Vec<(f64, f64, f64)> {
    use core::f64::consts::FRAC_PI_2;
    let mut rule = alloc::vec![(0.5, 0.5, 0.5 * FRAC_PI_2 * step)];
    let mut k = 1;
    loop {
        let t = k as f64 * step;
        if t > 4.5 {
            break;
        }
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = 0.5 * step * FRAC_PI_2 * t.cosh() / (cu * cu);
        let d = 1.0 / (1.0 + (2.0 * u).exp());
        rule.push((d, 1.0 - d, w));
        rule.push((1.0 - d, d, w));
        k += 1;
    }
    rule
}

/// Brent's method on a sign-changing bracket.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    what: &'static str,
) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { what, lo: a, hi: b });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Err(Error::SolverFailure {
        what,
        iterations: 300,
        last: fb.abs(),
        history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn kronrod_integrates_gaussian() {
        let (v, _) = gauss_kronrod(|x| (-x * x).exp(), -8.0, 8.0, 1e-15, 1e-14, 40).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        // int_0^1 x^{-0.6} dx = 2.5
        let v = tanh_sinh(|_, da, _| da.powf(-0.6), 0.0, 1.0, 1e-13);
        assert!((v - 2.5).abs() < 1e-10, "{v}");
        // int_0^1 ln(x) dx = -1
        let v = tanh_sinh(|_, da, _| da.ln(), 0.0, 1.0, 1e-13);
        assert!((v + 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn fixed_rule_integrates_endpoint_singularity() {
        let rule = tanh_sinh_rule(1.0 / 16.0);
        let v: f64 = rule.iter().map(|&(da, _, w)| w * da.powf(-0.6)).sum();
        assert!((v - 2.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn brent_finds_cubic_root() {
        let root = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, "cubic").unwrap();
        assert!((root - 2f64.cbrt()).abs() < 1e-14);
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, "none"),
            Err(Error::NoBracket { .. })
        ));
    }
}
