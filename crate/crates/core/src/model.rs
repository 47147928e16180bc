//! Stellar coefficient profiles on a radius interval `[a, b]`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative tolerance for the adiabatic check |N²| ≈ 0.
pub const TOL_MODEL: f64 = 1e-12;
/// Absolute guard on |N² − σ²| below which ℋ is undefined.
pub const TOL_TURNING: f64 = 1e-6;
const VALIDATION_SAMPLES: usize = 201;

/// Immutable equilibrium model. Cheap to clone (profiles are shared).
#[derive(Clone)]
pub struct StellarModel {
    pub name: String,
    pub a: f64,
    pub b: f64,
    rho: Profile,
    rho_prime: Profile,
    c: Profile,
    g: Profile,
    pub kappa: f64,
    pub adiabatic: bool,
}

impl fmt::Debug for StellarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StellarModel")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("kappa", &self.kappa)
            .field("adiabatic", &self.adiabatic)
            .finish()
    }
}

/// Everything the matrices need at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoefficientSample {
    pub r: f64,
    pub rho: f64,
    pub rho_prime: f64,
    pub c: f64,
    pub g: f64,
    pub nsq: f64,
    pub h: f64,
    pub curly_h_exp: Option<f64>,
    pub curly_h_osc: Option<f64>,
}

fn sample_points(a: f64, b: f64) -> impl Iterator<Item = f64> {
    let n = VALIDATION_SAMPLES - 1;
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

fn check_interval(a: f64, b: f64, kappa: f64) -> Result<()> {
    if !(a > 0.0 && b > a && a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("need 0 < a < b, got a={a}, b={b}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

fn check_derivative(rho: &Profile, rho_prime: &Profile, a: f64, b: f64) -> Result<()> {
    // Central difference with a step balanced for truncation vs rounding.
    let step = 1e-5 * (b - a);
    for r in sample_points(a, b) {
        if r - step < a || r + step > b {
            continue;
        }
        let fd = (rho(r + step) - rho(r - step)) / (2.0 * step);
        let exact = rho_prime(r);
        let scale = exact.abs().max(rho(r).abs() * 1e-3);
        if (fd - exact).abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Domain(format!(
                "rho_prime disagrees with finite difference at r={r}: {exact} vs {fd}"
            )));
        }
    }
    Ok(())
}

/// Builds an adiabatic model, with gravity fixed by g = −c²ρ′/ρ so that N² ≡ 0.
pub fn make_adiabatic_model(
    rho: Profile,
    rho_prime: Profile,
    c: Profile,
    a: f64,
    b: f64,
    kappa: f64,
) -> Result<StellarModel> {
    check_interval(a, b, kappa)?;
    for r in sample_points(a, b) {
        if !(rho(r) > 0.0) || !(c(r) > 0.0) {
            return Err(Error::Domain(format!("rho and c must be positive (r={r})")));
        }
        if !(rho_prime(r) < 0.0) {
            return Err(Error::Domain(format!(
                "adiabatic model needs rho' < 0 so that g > 0 (r={r}, rho'={})",
                rho_prime(r)
            )));
        }
    }
    check_derivative(&rho, &rho_prime, a, b)?;
    let (rh, rp, cc) = (rho.clone(), rho_prime.clone(), c.clone());
    let g: Profile = Arc::new(move |r| -cc(r) * cc(r) * rp(r) / rh(r));
    let m = StellarModel { name: "custom-adiabatic".into(), a, b, rho, rho_prime, c, g, kappa, adiabatic: true };
    for r in sample_points(a, b) {
        let s = m.coefficients(r);
        let scale = s.g * s.g / (s.c * s.c);
        if s.nsq.abs() > TOL_MODEL * scale.max(1.0) {
            return Err(Error::Domain(format!("N² = {} is not negligible at r={r}", s.nsq)));
        }
    }
    Ok(m)
}

pub fn make_nonadiabatic_model(
    rho: Profile,
    rho_prime: Profile,
    c: Profile,
    g: Profile,
    a: f64,
    b: f64,
    kappa: f64,
) -> Result<StellarModel> {
    check_interval(a, b, kappa)?;
    for r in sample_points(a, b) {
        if !(rho(r) > 0.0) || !(c(r) > 0.0) || !(g(r) > 0.0) {
            return Err(Error::Domain(format!("rho, c and g must be positive (r={r})")));
        }
    }
    check_derivative(&rho, &rho_prime, a, b)?;
    let m = StellarModel { name: "custom".into(), a, b, rho, rho_prime, c, g, kappa, adiabatic: false };
    for r in sample_points(a, b) {
        if !m.nsq(r).is_finite() {
            return Err(Error::Domain(format!("N² is not finite at r={r}")));
        }
    }
    Ok(m)
}

/// ρ = e^{−(r−1)}, c ≡ 1 on [1, 2]; gives g ≡ 1 and N² ≡ 0.
pub fn adia_exp() -> StellarModel {
    let mut m = make_adiabatic_model(
        Arc::new(|r: f64| (-(r - 1.0)).exp()),
        Arc::new(|r: f64| -(-(r - 1.0)).exp()),
        Arc::new(|_| 1.0),
        1.0,
        2.0,
        1.0,
    )
    .expect("adia-exp preset is valid");
    m.name = "adia-exp".into();
    m
}

/// ρ = e^{−2(r−1)}, c ≡ 1, g ≡ 1 on [1, 2]; gives N² ≡ 1.
pub fn nonadia_exp() -> StellarModel {
    let mut m = make_nonadiabatic_model(
        Arc::new(|r: f64| (-2.0 * (r - 1.0)).exp()),
        Arc::new(|r: f64| -2.0 * (-2.0 * (r - 1.0)).exp()),
        Arc::new(|_| 1.0),
        Arc::new(|_| 1.0),
        1.0,
        2.0,
        1.0,
    )
    .expect("nonadia-exp preset is valid");
    m.name = "nonadia-exp".into();
    m
}

pub fn preset(name: &str) -> Result<StellarModel> {
    match name {
        "adia-exp" => Ok(adia_exp()),
        "nonadia-exp" => Ok(nonadia_exp()),
        other => Err(Error::Config(format!("unknown preset '{other}'"))),
    }
}

/// Parametric profile families loadable from config.
///
/// `Exponential`: ρ = ρ₀e^{−s(r−a)}, c = c₀e^{q(r−a)}.
/// `PowerLaw`: ρ = ρ₀(r/a)^{−s}, c = c₀(r/a)^{q}.
/// With `g = None` the model is adiabatic; otherwise g = g₀(r/a)^{m}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProfileFamily {
    Exponential { a: f64, b: f64, rho0: f64, s: f64, c0: f64, q: f64, g: Option<(f64, f64)>, kappa: f64 },
    PowerLaw { a: f64, b: f64, rho0: f64, s: f64, c0: f64, q: f64, g: Option<(f64, f64)>, kappa: f64 },
}

impl ProfileFamily {
    pub fn build(&self) -> Result<StellarModel> {
        let (a, b, rho, rho_prime, c, g, kappa, tag) = match *self {
            ProfileFamily::Exponential { a, b, rho0, s, c0, q, g, kappa } => {
                let rho: Profile = Arc::new(move |r| rho0 * (-s * (r - a)).exp());
                let rp: Profile = Arc::new(move |r| -s * rho0 * (-s * (r - a)).exp());
                let c: Profile = Arc::new(move |r| c0 * (q * (r - a)).exp());
                (a, b, rho, rp, c, g, kappa, "exponential")
            }
            ProfileFamily::PowerLaw { a, b, rho0, s, c0, q, g, kappa } => {
                let rho: Profile = Arc::new(move |r| rho0 * (r / a).powf(-s));
                let rp: Profile = Arc::new(move |r| -s * rho0 * (r / a).powf(-s) / r);
                let c: Profile = Arc::new(move |r| c0 * (r / a).powf(q));
                (a, b, rho, rp, c, g, kappa, "power-law")
            }
        };
        let mut m = match g {
            None => make_adiabatic_model(rho, rho_prime, c, a, b, kappa)?,
            Some((g0, m)) => {
                let g: Profile = Arc::new(move |r| g0 * (r / a).powf(m));
                make_nonadiabatic_model(rho, rho_prime, c, g, a, b, kappa)?
            }
        };
        m.name = tag.into();
        Ok(m)
    }
}

impl StellarModel {
    #[inline]
    pub fn rho(&self, r: f64) -> f64 {
        (self.rho)(r)
    }
    #[inline]
    pub fn rho_prime(&self, r: f64) -> f64 {
        (self.rho_prime)(r)
    }
    #[inline]
    pub fn c(&self, r: f64) -> f64 {
        (self.c)(r)
    }
    #[inline]
    pub fn g(&self, r: f64) -> f64 {
        (self.g)(r)
    }
    /// Brunt–Väisälä frequency squared, N² = −g(g/c² + ρ′/ρ).
    #[inline]
    pub fn nsq(&self, r: f64) -> f64 {
        let (g, c) = (self.g(r), self.c(r));
        -g * (g / (c * c) + self.rho_prime(r) / self.rho(r))
    }
    /// h = r²ρ/c².
    #[inline]
    pub fn h(&self, r: f64) -> f64 {
        let c = self.c(r);
        r * r * self.rho(r) / (c * c)
    }

    /// Raw coefficients without the ℋ fields (no σ needed).
    pub fn coefficients(&self, r: f64) -> CoefficientSample {
        let (rho, rho_prime, c) = (self.rho(r), self.rho_prime(r), self.c(r));
        let g = self.g(r);
        CoefficientSample {
            r,
            rho,
            rho_prime,
            c,
            g,
            nsq: self.nsq(r),
            h: r * r * rho / (c * c),
            curly_h_exp: None,
            curly_h_osc: None,
        }
    }

    pub fn sample(&self, sigma: f64, r: f64) -> Result<CoefficientSample> {
        if !(r >= self.a && r <= self.b) {
            return Err(Error::Domain(format!("r={r} outside [{}, {}]", self.a, self.b)));
        }
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        let mut s = self.coefficients(r);
        let gap = s.nsq - sigma * sigma;
        if gap.abs() < TOL_TURNING {
            return Err(Error::Degeneracy { r, gap: gap.abs() });
        }
        let ratio = s.nsq / (sigma * sigma);
        if gap < 0.0 {
            s.curly_h_exp = Some((1.0 - ratio).sqrt() / r);
        } else {
            s.curly_h_osc = Some((ratio - 1.0).sqrt() / r);
        }
        Ok(s)
    }

    /// Min and max of N² over a uniform validation grid.
    pub fn nsq_range(&self) -> (f64, f64) {
        sample_points(self.a, self.b)
            .map(|r| self.nsq(r))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// ∫_a^b dt/c, the acoustic length.
    pub fn acoustic_length(&self) -> f64 {
        crate::propagate::integrate(|t| 1.0 / self.c(t), self.a, self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adia_preset_has_unit_gravity() {
        let m = adia_exp();
        for r in [1.0, 1.3, 2.0] {
            assert!((m.g(r) - 1.0).abs() < 1e-15);
            assert!(m.nsq(r).abs() < 1e-15);
        }
    }

    #[test]
    fn steeper_density_doubles_gravity() {
        let m = make_adiabatic_model(
            Arc::new(|r: f64| (-2.0 * (r - 1.0)).exp()),
            Arc::new(|r: f64| -2.0 * (-2.0 * (r - 1.0)).exp()),
            Arc::new(|_| 1.0),
            1.0,
            2.0,
            1.0,
        )
        .unwrap();
        assert!((m.g(1.7) - 2.0).abs() < 1e-14);
        assert!(m.coefficients(1.7).nsq.abs() < 1e-14);
    }

    #[test]
    fn constant_density_is_rejected() {
        let r = make_adiabatic_model(Arc::new(|_| 1.0), Arc::new(|_| 0.0), Arc::new(|_| 1.0), 1.0, 2.0, 1.0);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn wrong_derivative_is_rejected() {
        let r = make_adiabatic_model(
            Arc::new(|r: f64| (-(r - 1.0)).exp()),
            Arc::new(|r: f64| -1.1 * (-(r - 1.0)).exp()),
            Arc::new(|_| 1.0),
            1.0,
            2.0,
            1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn nonadia_preset_buoyancy() {
        let m = nonadia_exp();
        assert!((m.nsq(1.4) - 1.0).abs() < 1e-14);
        let s = m.sample(2.0, 1.5).unwrap();
        assert!(s.curly_h_exp.is_some() && s.curly_h_osc.is_none());
        let s = m.sample(0.5, 1.5).unwrap();
        assert!(s.curly_h_osc.is_some() && s.curly_h_exp.is_none());
        assert!(matches!(m.sample(1.0, 1.5), Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn sample_h_and_domain() {
        let m = adia_exp();
        let s = m.sample(3.0, 1.5).unwrap();
        assert!((s.h - 2.25 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((s.curly_h_exp.unwrap() - 1.0 / 1.5).abs() < 1e-15);
        assert!(m.sample(1.0, 2.5).is_err());
    }

    #[test]
    fn families_build() {
        let f = ProfileFamily::PowerLaw { a: 1.0, b: 2.0, rho0: 1.0, s: 3.0, c0: 1.0, q: 0.5, g: None, kappa: 1.0 };
        let m = f.build().unwrap();
        assert!(m.adiabatic && m.g(1.5) > 0.0);
        let f = ProfileFamily::Exponential { a: 1.0, b: 2.0, rho0: 1.0, s: 2.0, c0: 1.0, q: 0.0, g: Some((1.0, 0.0)), kappa: 1.0 };
        let m = f.build().unwrap();
        assert!((m.nsq(1.2) - 1.0).abs() < 1e-14);
    }
}
