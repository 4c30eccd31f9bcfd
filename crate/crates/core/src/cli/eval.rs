//! Method routing shared by every subcommand.

use serde::Serialize;

use crate::analytic::{asymptotic_u, asymptotic_v, bounds_u, bounds_v, u_integral, v_integral};
use crate::error::{Result, SirError};
use crate::model::{exact_u_at_x0, CriticalTime, ModelParams};
use crate::ode::{hitting_time_u, hitting_time_v, CriticalTimeResult, IntegratorConfig, Method};

use super::config::MethodChoice;

/// Outcome of evaluating one time at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    /// Reported value: the quadrature result when both methods ran.
    pub primary: CriticalTimeResult,
    pub ode: Option<CriticalTimeResult>,
    pub integral: Option<CriticalTimeResult>,
    /// `|ode - integral| / max(1e-300, |ode|)` when both ran.
    pub rel_discrepancy: Option<f64>,
}

/// Event detection for `which` at `(x, y)`.
pub fn by_ode(p: &ModelParams, which: CriticalTime, x: f64, y: f64, cfg: &IntegratorConfig) -> Result<CriticalTimeResult> {
    match which {
        CriticalTime::U => hitting_time_u(p, x, y, cfg),
        CriticalTime::V => hitting_time_v(p, x, y, cfg),
    }
}

/// Integral representation, routed to the closed forms where they apply:
/// `u = 0` for `y < mu`, and `u(0, y) = ln(y/mu)/gamma`.
pub fn by_integral(p: &ModelParams, which: CriticalTime, x: f64, y: f64) -> Result<CriticalTimeResult> {
    match which {
        CriticalTime::U if y < p.mu() && y >= 0.0 && x >= 0.0 => Ok(CriticalTimeResult::boundary_zero()),
        CriticalTime::U if x == 0.0 => {
            let value = exact_u_at_x0(p, y)?;
            let method = if value == 0.0 { Method::BoundaryZero } else { Method::ExactX0 };
            Ok(CriticalTimeResult { value, method, err_estimate: 0.0 })
        }
        CriticalTime::U => u_integral(p, x, y),
        CriticalTime::V => v_integral(p, x, y),
    }
}

pub fn evaluate(
    p: &ModelParams,
    which: CriticalTime,
    method: MethodChoice,
    x: f64,
    y: f64,
    cfg: &IntegratorConfig,
) -> Result<Evaluation> {
    let ode = match method {
        MethodChoice::Ode | MethodChoice::Both => Some(by_ode(p, which, x, y, cfg)?),
        MethodChoice::Integral => None,
    };
    let integral = match method {
        MethodChoice::Integral | MethodChoice::Both => Some(by_integral(p, which, x, y)?),
        MethodChoice::Ode => None,
    };
    let (primary, rel_discrepancy) = match (ode, integral) {
        (Some(o), Some(i)) => {
            let diff = (o.value - i.value).abs();
            let rel = if diff == 0.0 { 0.0 } else { diff / o.value.abs().max(1e-300) };
            let merged = CriticalTimeResult { err_estimate: i.err_estimate.max(diff), ..i };
            (merged, Some(rel))
        }
        (Some(o), None) => (o, None),
        (None, Some(i)) => (i, None),
        (None, None) => unreachable!("at least one method always runs"),
    };
    Ok(Evaluation { primary, ode, integral, rel_discrepancy })
}

/// Lower bound and smallest applicable upper bound, where defined.
pub fn bound_pair(p: &ModelParams, which: CriticalTime, x: f64, y: f64) -> Option<Result<(f64, f64)>> {
    match which {
        CriticalTime::U if y >= p.mu() => Some(bounds_u(p, x, y).map(|b| (b.lower, b.upper()))),
        CriticalTime::V if x > p.rho() && y > 0.0 => {
            Some(bounds_v(p, x, y).map(|b| (b.lower, b.min_upper())))
        }
        _ => None,
    }
}

pub fn asymptotic(p: &ModelParams, which: CriticalTime, x: f64, y: f64) -> Option<f64> {
    match which {
        CriticalTime::U => asymptotic_u(p, x, y).ok(),
        CriticalTime::V => asymptotic_v(p, x, y).ok(),
    }
}

/// Exit code for a numeric error: 4 for an infinite time, 2 for bad input, 3 otherwise.
pub fn exit_code(err: &SirError) -> i32 {
    match err {
        SirError::NeverReached => 4,
        SirError::Domain(_) | SirError::InvalidParams(_) => 2,
        _ => 3,
    }
}

/// Short, comma-free tag naming the error variant.
pub fn error_tag(err: &SirError) -> &'static str {
    match err {
        SirError::InvalidParams(_) => "InvalidParams",
        SirError::Domain(_) => "Domain",
        SirError::IntegrationStall { .. } => "IntegrationStall",
        SirError::TimeCapExceeded { .. } => "TimeCapExceeded",
        SirError::NeverReached => "NeverReached",
        SirError::QuadratureFailure { .. } => "QuadratureFailure",
        SirError::NoBracket { .. } => "NoBracket",
        SirError::StencilOutOfDomain { .. } => "StencilOutOfDomain",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_closed_forms() {
        let p = ModelParams::new(2.0, 3.0, 1.0).unwrap();
        let r = by_integral(&p, CriticalTime::U, 0.0, 3f64.exp()).unwrap();
        assert_eq!(r.method, Method::ExactX0);
        assert!((r.value - 1.0).abs() < 1e-15);
        let r = by_integral(&p, CriticalTime::U, 3.0, 0.5).unwrap();
        assert_eq!(r.method, Method::BoundaryZero);
        let r = by_integral(&p, CriticalTime::U, 0.0, 1.0).unwrap();
        assert_eq!(r.method, Method::BoundaryZero);
    }

    #[test]
    fn both_methods_report_discrepancy() {
        let p = ModelParams::new(2.0, 3.0, 1.0).unwrap();
        let e = evaluate(&p, CriticalTime::U, MethodChoice::Both, 4.0, 2.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(e.primary.method, Method::Integral);
        assert!(e.rel_discrepancy.unwrap() < 1e-6);
        assert!(e.primary.err_estimate >= (e.ode.unwrap().value - e.integral.unwrap().value).abs());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&SirError::NeverReached), 4);
        assert_eq!(exit_code(&SirError::Domain("x".into())), 2);
        assert_eq!(exit_code(&SirError::IntegrationStall { t: 1.0 }), 3);
        assert_eq!(exit_code(&SirError::QuadratureFailure { estimate: 1.0, error: 1.0 }), 3);
    }
}
