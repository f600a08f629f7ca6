//! Special functions needed by the Riesz-potential quadratures: Hurwitz and
//! Riemann zeta, Dirichlet beta, digamma, the Gauss hypergeometric series and
//! the planar ring kernel.

use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

const BERNOULLI_2K: [f64; 15] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
];

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Hurwitz zeta by Euler–Maclaurin summation. Valid for `s != 1`, `a > 0`;
/// accurate for `s > -1` (use the reflection formulas below further left).
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const M: usize = 24;
    let mut sum = 0.0;
    for k in 0..M {
        sum += (k as f64 + a).powf(-s);
    }
    let x = M as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) times x^{-s-2j+1} / (2j)!
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    let mut fact = 2.0;
    for (j, b) in BERNOULLI_2K.iter().enumerate() {
        let term = b / fact * rising * xpow;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let m = (2 * j) as f64 + 2.0;
        rising *= (s + m - 1.0) * (s + m);
        xpow /= x * x;
        fact *= (m + 1.0) * (m + 2.0);
    }
    sum
}

/// `zeta(s, a) - zeta(s, b)`, finite at `s = 1`.
pub fn hurwitz_zeta_diff(s: f64, a: f64, b: f64) -> f64 {
    const M: usize = 24;
    let mut sum = 0.0;
    for k in 0..M {
        sum += (k as f64 + a).powf(-s) - (k as f64 + b).powf(-s);
    }
    let (xa, xb) = (M as f64 + a, M as f64 + b);
    let t = 1.0 - s;
    let ratio = (xa / xb).ln();
    sum += if t.abs() < 1e-300 {
        -ratio
    } else {
        -xb.powf(t) * libm::expm1(t * ratio) / t
    };
    sum += 0.5 * (xa.powf(-s) - xb.powf(-s));
    sum + em_tail(s, xa) - em_tail(s, xb)
}

fn em_tail(s: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut rising = s;
    let mut xpow = x.powf(-s - 1.0);
    let mut fact = 2.0;
    for (j, b) in BERNOULLI_2K.iter().enumerate() {
        let term = b / fact * rising * xpow;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
        let m = (2 * j) as f64 + 2.0;
        rising *= (s + m - 1.0) * (s + m);
        xpow /= x * x;
        fact *= (m + 1.0) * (m + 2.0);
    }
    sum
}

/// Riemann zeta for real `s != 1`.
pub fn zeta(s: f64) -> f64 {
    if s < 0.0 {
        // functional equation
        let t = 1.0 - s;
        2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(t) * zeta(t)
    } else {
        hurwitz_zeta(s, 1.0)
    }
}

/// Dirichlet beta function.
pub fn dirichlet_beta(s: f64) -> f64 {
    if s < 0.0 {
        let z = 1.0 - s;
        (PI / 2.0).powf(-z) * (PI * z / 2.0).sin() * gamma(z) * dirichlet_beta(z)
    } else {
        4f64.powf(-s) * hurwitz_zeta_diff(s, 0.25, 0.75)
    }
}

pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 8.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    let mut p = inv2;
    for (k, b) in BERNOULLI_2K.iter().take(8).enumerate() {
        series += b / (2.0 * (k as f64 + 1.0)) * p;
        p *= inv2;
    }
    acc + x.ln() - 0.5 / x - series
}

/// Gauss hypergeometric series, intended for `|z| <= 0.6`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..4000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `2F1(a, a; 2a; z)` at `a = 1/2` near `z = 1` (logarithmic case), `w = 1 - z`.
fn hyp2f1_half_log(w: f64) -> f64 {
    let a = 0.5;
    let mut sum = 0.0;
    let mut coeff = 1.0; // (a)_k^2 / (k!)^2
    let mut wk = 1.0;
    let lnw = w.ln();
    for k in 0..4000 {
        let kf = k as f64;
        let bracket = 2.0 * digamma(kf + 1.0) - 2.0 * digamma(a + kf) - lnw;
        let term = coeff * bracket * wk;
        sum += term;
        if k > 2 && term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        coeff *= (a + kf) * (a + kf) / ((kf + 1.0) * (kf + 1.0));
        wk *= w;
    }
    sum / PI
}

/// Angular integral `int_0^{2 pi} (r^2 + s^2 - 2 r s cos phi)^{-sigma} dphi`
/// with the `sigma`-dependent constants precomputed.
#[derive(Debug, Clone, Copy)]
pub struct RingKernel {
    sigma: f64,
    log_case: bool,
    c_regular: f64,
    c_singular: f64,
}

impl RingKernel {
    pub fn new(sigma: f64) -> Self {
        let e = 1.0 - 2.0 * sigma;
        let log_case = e.abs() < 1e-7;
        let (c_regular, c_singular) = if log_case {
            (0.0, 0.0)
        } else {
            (
                gamma(e) / (gamma(1.0 - sigma) * gamma(1.0 - sigma)),
                gamma(-e) / (gamma(sigma) * gamma(sigma)),
            )
        };
        Self { sigma, log_case, c_regular, c_singular }
    }

    pub fn eval(&self, r: f64, s: f64) -> f64 {
        let (big, small) = if r >= s { (r, s) } else { (s, r) };
        self.eval_ordered(big, small, (big - small) * (big + small) / (big * big))
    }

    /// Evaluates at `s = r + d`, taking `1 - (s/r)^2` from the offset so that
    /// points within rounding distance of the diagonal stay finite.
    pub fn eval_offset(&self, r: f64, d: f64) -> f64 {
        let s = r + d;
        let (big, small) = if d >= 0.0 { (s, r) } else { (r, s) };
        let w = d.abs() * (big + small) / (big * big);
        self.eval_ordered(big, small, w)
    }

    fn eval_ordered(&self, big: f64, small: f64, w: f64) -> f64 {
        let sigma = self.sigma;
        if big == 0.0 {
            return f64::INFINITY;
        }
        let t = small / big;
        let z = t * t;
        let scale = 2.0 * PI * big.powf(-2.0 * sigma);
        if z <= 0.5 {
            return scale * hyp2f1_series(sigma, sigma, 1.0, z);
        }
        if w == 0.0 {
            return if sigma < 0.5 {
                scale * gamma(1.0 - 2.0 * sigma) / (gamma(1.0 - sigma) * gamma(1.0 - sigma))
            } else {
                f64::INFINITY
            };
        }
        if self.log_case {
            return scale * hyp2f1_half_log(w);
        }
        let e = 1.0 - 2.0 * sigma;
        // connection formula around z = 1
        let first = self.c_regular * hyp2f1_series(sigma, sigma, 2.0 * sigma, w);
        let second =
            w.powf(e) * self.c_singular * hyp2f1_series(1.0 - sigma, 1.0 - sigma, 2.0 - 2.0 * sigma, w);
        scale * (first + second)
    }
}

/// See [`RingKernel`]; returns `+inf` on the diagonal when `sigma >= 1/2`.
pub fn ring_kernel(sigma: f64, r: f64, s: f64) -> f64 {
    RingKernel::new(sigma).eval(r, s)
}
