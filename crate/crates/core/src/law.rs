//! Approximate blow-up law: the reduced flow `b_s + b^2 - beta lambda^alpha = 0`,
//! `lambda_s / lambda + b = 0`, its initial data, and the map between the
//! rescaled time `s` and physical time `t`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::profile::ProfileCoeffs;
use crate::quad::{brent, gauss_kronrod};

/// Default upper limit of the integral defining `F`.
pub const LAMBDA0: f64 = 0.1;

/// `alpha = 2 - 2 sigma` after checking `0 < sigma < min(N/2, 1)`.
pub fn alpha_of(sigma: f64, dim: usize) -> Result<f64> {
    if !(1..=3).contains(&dim) {
        return Err(Error::domain(alloc::format!("dimension {dim} is not supported")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(alloc::format!("sigma = {sigma} violates 0 < sigma")));
    }
    let half = dim as f64 / 2.0;
    if sigma >= half.min(1.0) {
        let bound = if half < 1.0 { "sigma < N/2" } else { "sigma < 1" };
        return Err(Error::domain(alloc::format!("sigma = {sigma} violates {bound} for N = {dim}")));
    }
    Ok(2.0 - 2.0 * sigma)
}

/// Constants of the blow-up law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupLawConstants {
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `|| |y| Q ||_2^2`
    pub variance: f64,
    /// `(alpha/2) sqrt(2 beta / (2 - alpha))`
    pub a: f64,
    pub script_c: f64,
    pub c_lambda: f64,
    pub c_b: f64,
}

impl BlowupLawConstants {
    pub fn new(sigma: f64, dim: usize, beta: f64, variance: f64) -> Result<Self> {
        let alpha = alpha_of(sigma, dim)?;
        if !(beta > 0.0) || !(variance > 0.0) {
            return Err(Error::domain("beta and the variance of Q must be positive"));
        }
        let a = 0.5 * alpha * (2.0 * beta / (2.0 - alpha)).sqrt();
        let script_c = alpha / (4.0 - alpha) * a.powf(-4.0 / alpha);
        let c_lambda = script_c.powf(-2.0 / (4.0 - alpha)) * a.powf(-2.0 / alpha);
        let c_b = 2.0 / alpha * script_c.powf(-alpha / (4.0 - alpha));
        Ok(Self { sigma, alpha, beta, variance, a, script_c, c_lambda, c_b })
    }

    pub fn from_profile(p: &ProfileCoeffs) -> Result<Self> {
        Self::new(p.sigma(), p.dim(), p.beta(), p.bundle().variance)
    }

    /// `2 beta / (2 - alpha)`
    pub fn kappa(&self) -> f64 {
        2.0 * self.beta / (2.0 - self.alpha)
    }

    /// Exponent of `|t|` in `lambda(t)`: `2/(4 - alpha) = 1/(1 + sigma)`.
    pub fn lambda_exponent(&self) -> f64 {
        2.0 / (4.0 - self.alpha)
    }

    /// Exponent of `|t|` in `b(t)`: `alpha/(4 - alpha) = (1 - sigma)/(1 + sigma)`.
    pub fn b_exponent(&self) -> f64 {
        self.alpha / (4.0 - self.alpha)
    }

    /// `(lambda_app(s), b_app(s))`.
    pub fn app_law(&self, s: f64) -> (f64, f64) {
        ((self.a * s).powf(-2.0 / self.alpha), 2.0 / (self.alpha * s))
    }

    /// `F(lambda) = int_lambda^lambda0 mu^{-alpha/2 - 1} (kappa + C0 mu^{2-alpha})^{-1/2} dmu`
    /// with `C0 = 8 E0 / || |y| Q ||^2`.
    pub fn script_f(&self, lambda: f64, e0: f64, lambda0: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda <= lambda0) {
            return Err(Error::domain(alloc::format!("need 0 < lambda <= lambda0, got {lambda}")));
        }
        let c0 = 8.0 * e0 / self.variance;
        let kappa = self.kappa();
        let radicand = |mu: f64| kappa + c0 * mu.powf(2.0 - self.alpha);
        if radicand(lambda) <= 0.0 || radicand(lambda0) <= 0.0 {
            return Err(Error::domain("radicand of F is not positive on [lambda, lambda0]"));
        }
        if lambda == lambda0 {
            return Ok(0.0);
        }
        // mu = lambda e^tau removes the growth at the lower limit
        let half = 0.5 * self.alpha;
        let top = (lambda0 / lambda).ln();
        let (v, _) = gauss_kronrod(
            |tau| {
                let mu = lambda * tau.exp();
                mu.powf(-half) / radicand(mu).sqrt()
            },
            0.0,
            top,
            0.0,
            1e-14,
            60,
        )?;
        Ok(v)
    }

    /// Closed form of `F` when `E0 = 0`.
    pub fn script_f_critical(&self, lambda: f64, lambda0: f64) -> f64 {
        let half = 0.5 * self.alpha;
        2.0 / (self.alpha * self.kappa().sqrt()) * (lambda.powf(-half) - lambda0.powf(-half))
    }

    /// Solves `F(lambda1) = s1`.
    pub fn lambda_for(&self, s1: f64, e0: f64, lambda0: f64) -> Result<f64> {
        if !(s1 > 0.0) {
            return Err(Error::domain("s1 must be positive"));
        }
        // F grows without bound as lambda -> 0; bracket in log lambda
        let mut lo = lambda0;
        let mut found = false;
        for _ in 0..60 {
            lo *= 0.1;
            if self.script_f(lo, e0, lambda0)? > s1 {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::NoBracket { what: "F(lambda) = s1", lo, hi: lambda0 });
        }
        let x = brent(
            |x| self.script_f(x.exp(), e0, lambda0).map_or(f64::NAN, |v| v - s1),
            lo.ln(),
            lambda0.ln(),
            1e-13,
            "F(lambda) = s1",
        )?;
        Ok(x.exp())
    }

    /// `s(t) = |t / C|^{-alpha/(4 - alpha)}` for `t < 0`.
    pub fn s_of_t(&self, t: f64) -> Result<f64> {
        if !(t < 0.0) {
            return Err(Error::domain(alloc::format!("t = {t} is not before blow-up")));
        }
        Ok((t / self.script_c).abs().powf(-self.b_exponent()))
    }

    /// Inverse of [`Self::s_of_t`].
    pub fn t_of_s(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::domain("s must be positive"));
        }
        Ok(-self.script_c * s.powf(-1.0 / self.b_exponent()))
    }
}

/// Initial modulation parameters at rescaled time `s1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialParams {
    pub lambda: f64,
    pub b: f64,
    /// `E(P_{lambda, b, 0})` at the returned parameters.
    pub energy: f64,
}

/// `F(lambda1) = s1`, then `b1 > 0` with `E(P_{lambda1, b1, 0}) = E0`.
pub fn init_params(
    e0: f64,
    s1: f64,
    constants: &BlowupLawConstants,
    profile: &ProfileCoeffs,
    lambda0: f64,
) -> Result<InitialParams> {
    let lambda = constants.lambda_for(s1, e0, lambda0)?;
    let energy = |b: f64| profile.energy(lambda, b) - e0;
    let e_at_zero = energy(0.0);
    if e_at_zero >= 0.0 {
        return Err(Error::NoBracket { what: "E(P) = E0 in b", lo: 0.0, hi: 0.0 });
    }
    let guess = (constants.kappa() * lambda.powf(constants.alpha) + 8.0 * e0.max(0.0) * lambda * lambda
        / constants.variance)
        .sqrt();
    let mut hi = guess.max(1e-8);
    let mut found = false;
    for _ in 0..40 {
        if energy(hi) > 0.0 {
            found = true;
            break;
        }
        hi *= 1.5;
    }
    if !found {
        return Err(Error::NoBracket { what: "E(P) = E0 in b", lo: 0.0, hi });
    }
    let lo = {
        let mut lo = hi;
        while lo > 1e-300 && energy(lo) > 0.0 {
            lo *= 0.5;
        }
        lo
    };
    let b = brent(energy, lo, hi, 0.0, "E(P) = E0 in b")?;
    Ok(InitialParams { lambda, b, energy: profile.energy(lambda, b) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> BlowupLawConstants {
        BlowupLawConstants::new(0.3, 1, 0.8, 1.7).unwrap()
    }

    #[test]
    fn alpha_domain() {
        assert!((alpha_of(0.3, 1).unwrap() - 1.4).abs() < 1e-15);
        assert!((alpha_of(1e-9, 2).unwrap() - 2.0).abs() < 1e-8);
        let err = alpha_of(0.5, 1).unwrap_err();
        assert!(matches!(&err, Error::Domain(m) if m.contains("N/2")), "{err}");
        assert!(matches!(alpha_of(1.0, 3), Err(Error::Domain(m)) if m.contains("sigma < 1")));
        assert!(alpha_of(0.0, 2).is_err());
        assert!(alpha_of(0.2, 4).is_err());
    }

    #[test]
    fn app_law_instances() {
        let c = synthetic();
        assert!((c.app_law(10.0).1 - 2.0 / 14.0).abs() < 1e-15);
        // alpha = 1, beta = 0.5: A = 0.5 sqrt(1) = 1/2, lambda = (s/2)^{-2}
        let c = BlowupLawConstants::new(0.5, 2, 0.5, 1.0).unwrap();
        assert!((c.app_law(10.0).0 - 0.04).abs() < 1e-15);
    }

    #[test]
    fn app_law_solves_reduced_flow() {
        let c = synthetic();
        for i in 0..100 {
            let s = 10f64.powf(0.5 + 3.0 * i as f64 / 99.0);
            let (l, b) = c.app_law(s);
            // exact derivatives of the power laws
            let ls = -2.0 / (c.alpha * s) * l;
            let bs = -2.0 / (c.alpha * s * s);
            assert!((ls / l + b).abs() < 1e-12 * b);
            assert!((bs + b * b - c.beta * l.powf(c.alpha)).abs() < 1e-12 * b * b);
        }
    }

    #[test]
    fn script_f_matches_closed_form() {
        let c = synthetic();
        assert_eq!(c.script_f(LAMBDA0, 0.0, LAMBDA0).unwrap(), 0.0);
        for l in [1e-2, 1e-4, 1e-6] {
            let q = c.script_f(l, 0.0, LAMBDA0).unwrap();
            let e = c.script_f_critical(l, LAMBDA0);
            assert!((q / e - 1.0).abs() < 1e-12, "{q} {e}");
        }
        // decreasing, and asymptotic to 2 / (alpha lambda^{alpha/2} sqrt(kappa))
        let mut prev = f64::INFINITY;
        for l in [1e-8, 1e-6, 1e-4, 1e-2] {
            let v = c.script_f(l, 0.3, LAMBDA0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let l = 1e-10;
        let ratio = c.script_f(l, 0.3, LAMBDA0).unwrap() * c.alpha * l.powf(0.5 * c.alpha) * c.kappa().sqrt() / 2.0;
        assert!((ratio - 1.0).abs() < 1e-3, "{ratio}");
        assert!(matches!(c.script_f(0.05, -1e3, LAMBDA0), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda_inverts_closed_form() {
        let c = synthetic();
        for s1 in [50.0, 500.0, 5000.0] {
            let l = c.lambda_for(s1, 0.0, LAMBDA0).unwrap();
            let half = 0.5 * c.alpha;
            let exact = (s1 * c.alpha * c.kappa().sqrt() / 2.0 + LAMBDA0.powf(-half)).powf(-1.0 / half);
            assert!((l / exact - 1.0).abs() < 1e-9, "{l} {exact}");
        }
    }

    #[test]
    fn time_maps() {
        let c = synthetic();
        assert!((c.lambda_exponent() - 1.0 / 1.3).abs() < 1e-15);
        assert!((c.b_exponent() - 0.7 / 1.3).abs() < 1e-15);
        for t in [-1e-6, -1e-3, -0.5] {
            let s = c.s_of_t(t).unwrap();
            assert!((c.t_of_s(s).unwrap() / t - 1.0).abs() < 1e-12);
            let (l, b) = c.app_law(s);
            let tt = t.abs();
            assert!((l / (c.c_lambda * tt.powf(c.lambda_exponent())) - 1.0).abs() < 1e-12);
            assert!((b / (c.c_b * tt.powf(c.b_exponent())) - 1.0).abs() < 1e-12);
        }
        assert!(c.s_of_t(0.0).is_err());
    }
}
