//! Model parameters, states, the SIR vector field and its conserved quantity.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SirError};

/// Infection rate `beta`, recovery rate `gamma` and infected threshold `mu`.
///
/// All three are validated once, at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    beta: f64,
    gamma: f64,
    mu: f64,
}

impl ModelParams {
    pub fn new(beta: f64, gamma: f64, mu: f64) -> Result<Self> {
        for (name, v) in [("beta", beta), ("gamma", gamma), ("mu", mu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SirError::InvalidParams(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        let rho = gamma / beta;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(SirError::InvalidParams(format!(
                "gamma/beta must be finite and > 0, got {rho}"
            )));
        }
        Ok(Self { beta, gamma, mu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Critical susceptible level `gamma / beta`: infections decrease iff `S <= rho`.
    pub fn rho(&self) -> f64 {
        self.gamma / self.beta
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            beta: f64,
            gamma: f64,
            mu: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        ModelParams::new(raw.beta, raw.gamma, raw.mu).map_err(serde::de::Error::custom)
    }
}

/// A point `(s, i)` of the susceptible/infected plane at time `t`.
///
/// The recovered compartment `N - s - i` is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub t: f64,
    pub s: f64,
    pub i: f64,
}

impl SirState {
    pub fn new(t: f64, s: f64, i: f64) -> Result<Self> {
        if !(t >= 0.0 && s >= 0.0 && i >= 0.0) || !(t.is_finite() && s.is_finite() && i.is_finite())
        {
            return Err(SirError::Domain(format!(
                "state requires finite t, s, i >= 0, got t={t}, s={s}, i={i}"
            )));
        }
        Ok(Self { t, s, i })
    }

    pub fn initial(s: f64, i: f64) -> Result<Self> {
        Self::new(0.0, s, i)
    }

    /// `S + I`, the part of the population not yet recovered.
    pub fn mass(&self) -> f64 {
        self.s + self.i
    }
}

/// Selects one of the two hitting times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalTime {
    /// First time `I <= mu`.
    U,
    /// First time `S <= gamma/beta`.
    V,
}

impl std::fmt::Display for CriticalTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CriticalTime::U => "u",
            CriticalTime::V => "v",
        })
    }
}

/// Value of the conserved quantity along one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LevelSetValue(pub f64);

impl LevelSetValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Right-hand side `(dS/dt, dI/dt)` of the SIR system.
pub fn vector_field(p: &ModelParams, state: &SirState) -> (f64, f64) {
    rhs(p, state.s, state.i)
}

#[inline]
pub(crate) fn rhs(p: &ModelParams, s: f64, i: f64) -> (f64, f64) {
    let infection = p.beta * s * i;
    (-infection, infection - p.gamma * i)
}

/// `psi(x, y) = x + y - (gamma/beta) ln x`, constant along every trajectory with `x > 0`.
pub fn psi(p: &ModelParams, x: f64, y: f64) -> Result<LevelSetValue> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SirError::Domain(format!("psi requires x > 0, got {x}")));
    }
    if !(y >= 0.0) {
        return Err(SirError::Domain(format!("psi requires y >= 0, got {y}")));
    }
    Ok(LevelSetValue(x + y - p.rho() * x.ln()))
}

/// `u(0, y) = ln(y / mu) / gamma`: with no susceptibles `I(t) = y e^{-gamma t}`.
pub fn exact_u_at_x0(p: &ModelParams, y: f64) -> Result<f64> {
    if !(y >= p.mu) {
        return Err(SirError::Domain(format!(
            "exact u(0, y) requires y >= mu = {}, got {y}",
            p.mu
        )));
    }
    Ok((y / p.mu).ln() / p.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, gamma: f64, mu: f64) -> ModelParams {
        ModelParams::new(beta, gamma, mu).unwrap()
    }

    #[test]
    fn rejects_nonpositive_params() {
        assert!(ModelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1e-320, 1e10, 1.0).is_err());
        let p = params(2.0, 3.0, 1.0);
        assert_eq!(p.rho(), 1.5);
    }

    #[test]
    fn params_deserialize_validates() {
        let ok: ModelParams = serde_json::from_str(r#"{"beta":2,"gamma":3,"mu":1}"#).unwrap();
        assert_eq!(ok, params(2.0, 3.0, 1.0));
        assert!(serde_json::from_str::<ModelParams>(r#"{"beta":0,"gamma":3,"mu":1}"#).is_err());
    }

    #[test]
    fn vector_field_examples() {
        let p = params(2.0, 3.0, 1.0);
        let f = |s, i| vector_field(&p, &SirState::initial(s, i).unwrap());
        assert_eq!(f(0.0, 5.0), (0.0, -15.0));
        assert_eq!(f(1.5, 4.0), (-12.0, 0.0));
        assert_eq!(f(3.0, 1.0), (-6.0, 3.0));
        let (ds, di) = f(2.7, 0.9);
        assert!((ds + di + 3.0 * 0.9).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&params(2.0, 3.0, 1.0), 1.0, 2.0).unwrap().value(), 3.0);
        let e = std::f64::consts::E;
        let v = psi(&params(1.0, 1.0, 1.0), e, 0.0).unwrap().value();
        assert!((v - 1.718281828459045).abs() < 1e-15);
        // 5 - 1.5 ln 4
        let v = psi(&params(2.0, 3.0, 1.0), 4.0, 1.0).unwrap().value();
        assert!((v - 2.920558458320164).abs() < 1e-14);
    }

    #[test]
    fn psi_domain() {
        let p = params(2.0, 3.0, 1.0);
        assert!(matches!(psi(&p, 0.0, 1.0), Err(SirError::Domain(_))));
        assert!(matches!(psi(&p, -1.0, 1.0), Err(SirError::Domain(_))));
        assert!(matches!(psi(&p, 1.0, -1.0), Err(SirError::Domain(_))));
    }

    #[test]
    fn exact_u_examples() {
        let p = params(1.0, 3.0, 1.0);
        assert!((exact_u_at_x0(&p, 3f64.exp()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(exact_u_at_x0(&p, 1.0).unwrap(), 0.0);
        assert!(exact_u_at_x0(&p, 0.5).is_err());
        let p = params(1.0, 0.5, 2.0);
        assert!((exact_u_at_x0(&p, 8.0).unwrap() - 2.772588722239781).abs() < 1e-14);
    }

    #[test]
    fn state_validation() {
        assert!(SirState::new(-1.0, 1.0, 1.0).is_err());
        assert!(SirState::initial(1.0, -0.1).is_err());
        assert_eq!(SirState::initial(1.0, 2.0).unwrap().mass(), 3.0);
    }
}
