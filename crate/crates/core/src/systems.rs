//! Coefficient matrices of the full ES system, the residual block and the LW form.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::model::StellarModel;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    HighDegreeAdiabatic,
    HighDegreeExp,
    HighDegreeOsc,
    HighFrequency,
    MixedI,
    MixedII,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::HighDegreeAdiabatic => "high-degree-adiabatic",
            Regime::HighDegreeExp => "high-degree-exp",
            Regime::HighDegreeOsc => "high-degree-osc",
            Regime::HighFrequency => "high-frequency",
            Regime::MixedI => "mixed-i",
            Regime::MixedII => "mixed-ii",
        }
    }
}

/// Which form of the LW coupling entries to use. See the crate README.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LwVariant {
    /// (1,3) = λΛ²/σ², (2,4) = +λ.
    AsPrinted,
    /// (1,3) = λΛ/σ², (2,4) = −λ: the exact image of the ES matrix at λ = μ = 1.
    Conjugate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub zeta: f64,
    /// Λ as placed in the matrices.
    pub lambda_cap: f64,
    pub sigma: f64,
    /// λ, multiplies G.
    pub lambda: f64,
    /// μ, multiplies C.
    pub mu: f64,
    pub regime: Regime,
    pub z: f64,
    pub alpha: f64,
}

impl ModeParams {
    /// Λ = ζ^power (power 2 unless configured otherwise).
    pub fn high_degree(zeta: f64, sigma: f64, regime: Regime, power: f64) -> Self {
        ModeParams { zeta, lambda_cap: zeta.powf(power), sigma, lambda: 1.0, mu: 1.0, regime, z: 1.0, alpha: 1.0 }
    }

    /// Fixed degree ℓ (Λ = ℓ(ℓ+1)); σ is the large parameter.
    pub fn high_frequency(ell: f64, sigma: f64) -> Self {
        ModeParams {
            zeta: sigma,
            lambda_cap: ell * (ell + 1.0),
            sigma,
            lambda: 1.0,
            mu: 1.0,
            regime: Regime::HighFrequency,
            z: 1.0,
            alpha: 1.0,
        }
    }

    /// Λ = ζ², σ² = zζ.
    pub fn mixed_i(zeta: f64, z: f64) -> Self {
        ModeParams {
            zeta,
            lambda_cap: zeta * zeta,
            sigma: (z * zeta).sqrt(),
            lambda: 1.0,
            mu: 1.0,
            regime: Regime::MixedI,
            z,
            alpha: 1.0,
        }
    }

    /// Λ = zζ^{3/2}, σ² = ζ².
    pub fn mixed_ii(zeta: f64, z: f64) -> Self {
        ModeParams {
            zeta,
            lambda_cap: z * zeta.powf(1.5),
            sigma: zeta,
            lambda: 1.0,
            mu: 1.0,
            regime: Regime::MixedII,
            z,
            alpha: 1.5,
        }
    }

    pub fn with_switches(mut self, lambda: f64, mu: f64) -> Self {
        self.lambda = lambda;
        self.mu = mu;
        self
    }

    /// Checks positivity and the N² sign condition of the regime on the model grid.
    pub fn validate(&self, model: &StellarModel) -> Result<()> {
        if !(self.sigma > 0.0 && self.zeta > 0.0 && self.lambda_cap >= 0.0) {
            return Err(Error::Domain(format!(
                "need sigma > 0, zeta > 0, Lambda >= 0 (got {}, {}, {})",
                self.sigma, self.zeta, self.lambda_cap
            )));
        }
        let (lo, hi) = model.nsq_range();
        let s2 = self.sigma * self.sigma;
        match self.regime {
            Regime::HighDegreeAdiabatic if !model.adiabatic => {
                Err(Error::Regime("adiabatic regime on a non-adiabatic model".into()))
            }
            Regime::HighDegreeExp if hi >= s2 => {
                Err(Error::Regime(format!("exponential regime needs N² < σ², max N² = {hi}, σ² = {s2}")))
            }
            Regime::HighDegreeOsc if lo <= s2 => {
                Err(Error::Regime(format!("oscillatory regime needs N² > σ², min N² = {lo}, σ² = {s2}")))
            }
            _ => Ok(()),
        }
    }
}

/// Full state X = (u, η, Φ, Φ′).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub u: f64,
    pub eta: f64,
    pub phi: f64,
    pub dphi: f64,
}

impl StateVector {
    pub fn from_vector(v: &Vector4<f64>) -> Self {
        StateVector { u: v[0], eta: v[1], phi: v[2], dphi: v[3] }
    }
    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.u, self.eta, self.phi, self.dphi)
    }
    pub fn y(&self) -> Vector2<f64> {
        Vector2::new(self.u, self.eta)
    }
    pub fn phi_vec(&self) -> Vector2<f64> {
        Vector2::new(self.phi, self.dphi)
    }
}

/// η slot replaced by y = σ²η − Φ.
pub fn es_to_lw(x: StateVector, sigma: f64) -> StateVector {
    StateVector { eta: sigma * sigma * x.eta - x.phi, ..x }
}

pub fn lw_to_es(x: StateVector, sigma: f64) -> StateVector {
    StateVector { eta: (x.eta + x.phi) / (sigma * sigma), ..x }
}

/// The residual block 𝒜.
pub fn residual_matrix(m: &StellarModel, p: &ModeParams, r: f64) -> Matrix2<f64> {
    let (c, g, nsq) = (m.c(r), m.g(r), m.nsq(r));
    let s2 = p.sigma * p.sigma;
    Matrix2::new(
        g / (c * c),
        p.lambda_cap - s2 * r * r / (c * c),
        (1.0 - nsq / s2) / (r * r),
        nsq / g,
    )
}

/// G = (r²/c², −N²/(σ²g)).
pub fn g_vector(m: &StellarModel, p: &ModeParams, r: f64) -> Vector2<f64> {
    let (c, g, nsq) = (m.c(r), m.g(r), m.nsq(r));
    Vector2::new(r * r / (c * c), -nsq / (p.sigma * p.sigma * g))
}

/// C = (κN²ρ/g, σ²κh).
pub fn c_vector(m: &StellarModel, p: &ModeParams, r: f64) -> Vector2<f64> {
    let (g, nsq) = (m.g(r), m.nsq(r));
    Vector2::new(m.kappa * nsq * m.rho(r) / g, p.sigma * p.sigma * m.kappa * m.h(r))
}

/// A_{λ,μ}. Row 4 is written so that X′ = AX is equivalent to
/// (r²Φ′)′ − (Λ − κh)Φ = μ C·Y.
pub fn full_matrix(m: &StellarModel, p: &ModeParams, r: f64) -> Matrix4<f64> {
    let a = residual_matrix(m, p, r);
    let gv = g_vector(m, p, r) * p.lambda;
    let cv = c_vector(m, p, r) * (p.mu / (r * r));
    let kh = m.kappa * m.h(r);
    #[rustfmt::skip]
    let out = Matrix4::new(
        a[(0, 0)], a[(0, 1)], gv[0], 0.0,
        a[(1, 0)], a[(1, 1)], gv[1], 0.0,
        0.0, 0.0, 0.0, 1.0,
        cv[0], cv[1], (p.lambda_cap - kh) / (r * r), -2.0 / r,
    );
    out
}

/// The Ledoux–Walraven matrix acting on (u, y, Φ, Φ′).
pub fn lw_matrix(m: &StellarModel, p: &ModeParams, r: f64, variant: LwVariant) -> Matrix4<f64> {
    let (c, g, nsq, rho) = (m.c(r), m.g(r), m.nsq(r), m.rho(r));
    let s2 = p.sigma * p.sigma;
    let lam = p.lambda_cap;
    let (e13, e24) = match variant {
        LwVariant::AsPrinted => (p.lambda * lam * lam / s2, p.lambda),
        LwVariant::Conjugate => (p.lambda * lam / s2, -p.lambda),
    };
    let k = m.kappa * p.mu;
    #[rustfmt::skip]
    let out = Matrix4::new(
        g / (c * c), lam / s2 - r * r / (c * c), e13, 0.0,
        (s2 - nsq) / (r * r), nsq / g, 0.0, e24,
        0.0, 0.0, 0.0, 1.0,
        k * nsq * rho / (r * r * g), k * rho / (c * c), lam / (r * r), -2.0 / r,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{adia_exp, nonadia_exp};

    #[test]
    fn residual_block_values() {
        let m = adia_exp();
        let p = ModeParams { lambda_cap: 2.0, ..ModeParams::high_degree(1.0, 1.0, Regime::HighDegreeAdiabatic, 2.0) };
        let a = full_matrix(&m, &p, 1.0);
        assert!((a[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((a[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((a[(1, 0)] - 1.0).abs() < 1e-15);
        assert!(a[(1, 1)].abs() < 1e-15);
        let p = ModeParams::high_degree(10.0, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let a = residual_matrix(&m, &p, 1.0);
        assert!((a[(0, 1)] - 99.0).abs() < 1e-13);
    }

    #[test]
    fn decoupled_when_switches_off() {
        let m = nonadia_exp();
        let p = ModeParams::high_degree(5.0, 2.0, Regime::HighDegreeExp, 2.0).with_switches(0.0, 0.0);
        let a = full_matrix(&m, &p, 1.3);
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(a[(i, j)], 0.0);
                assert_eq!(a[(j, i)], 0.0);
            }
        }
        assert_eq!(a.row(2).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn lw_entries() {
        let m = adia_exp();
        let p = ModeParams { lambda_cap: 2.0, ..ModeParams::high_frequency(1.0, 10.0) };
        let a = lw_matrix(&m, &p, 1.0, LwVariant::AsPrinted);
        assert!((a[(1, 0)] - 100.0).abs() < 1e-12);
        assert!((a[(3, 3)] + 2.0).abs() < 1e-15);
        assert!((a[(0, 2)] - 0.04).abs() < 1e-15);
        let b = lw_matrix(&m, &p, 1.0, LwVariant::Conjugate);
        assert!((b[(0, 2)] - 0.02).abs() < 1e-15);
        assert_eq!(b[(1, 3)], -1.0);
    }

    #[test]
    fn lw_round_trip() {
        let x = StateVector { u: 0.3, eta: 1.0, phi: 0.0, dphi: -2.0 };
        assert_eq!(es_to_lw(x, 2.0).eta, 4.0);
        let x = StateVector { u: 0.3, eta: -0.7, phi: 1.9, dphi: -2.0 };
        let back = lw_to_es(es_to_lw(x, 3.7), 3.7);
        assert!((back.eta - x.eta).abs() < 1e-15);
    }

    #[test]
    fn conjugate_variant_is_exact_similarity() {
        // T A T⁻¹ + T′T⁻¹ with constant T = LW change of variables.
        let m = nonadia_exp();
        let p = ModeParams::high_frequency(2.0, 7.0);
        let s2 = p.sigma * p.sigma;
        let mut t = Matrix4::identity();
        t[(1, 1)] = s2;
        t[(1, 2)] = -1.0;
        for r in [1.0, 1.25, 1.8] {
            let a = full_matrix(&m, &p, r);
            let lw = t * a * t.try_inverse().unwrap();
            let d = lw - lw_matrix(&m, &p, r, LwVariant::Conjugate);
            assert!(d.amax() < 1e-12, "{d}");
        }
    }

    #[test]
    fn regime_validation() {
        let m = nonadia_exp();
        assert!(ModeParams::high_degree(10.0, 2.0, Regime::HighDegreeExp, 2.0).validate(&m).is_ok());
        assert!(ModeParams::high_degree(10.0, 0.5, Regime::HighDegreeExp, 2.0).validate(&m).is_err());
        assert!(ModeParams::high_degree(10.0, 0.5, Regime::HighDegreeOsc, 2.0).validate(&m).is_ok());
        assert!(ModeParams::high_degree(10.0, 2.0, Regime::HighDegreeAdiabatic, 2.0).validate(&m).is_err());
    }
}
