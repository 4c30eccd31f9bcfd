//! Finite-difference checks of the transport equation
//! `beta x y du/dx + (gamma - beta x) y du/dy = 1`, its boundary conditions,
//! and the identity `u(S(t), I(t)) = u(x, y) - t` along the flow.

use serde::Serialize;

use crate::analytic::{u_integral, v_integral};
use crate::error::{Result, SirError};
use crate::model::{CriticalTime, ModelParams};
use crate::ode::{hitting_time_u, hitting_time_v, integrate, IntegratorConfig};

/// Residual differences below this are treated as evaluation noise.
pub const NOISE_FLOOR: f64 = 1e-9;

/// Open region on which a field is smooth; stencils must stay inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothDomain {
    /// `(0, inf) x (mu, inf)`, where `u` is smooth.
    U,
    /// `(gamma/beta, inf) x (0, inf)`, where `v` is smooth.
    V,
    /// `x + y > 0`, for closed-form test fields.
    PositiveMass,
}

impl SmoothDomain {
    fn contains(self, p: &ModelParams, x: f64, y: f64) -> bool {
        match self {
            SmoothDomain::U => x > 0.0 && y > p.mu(),
            SmoothDomain::V => x > p.rho() && y > 0.0,
            SmoothDomain::PositiveMass => x >= 0.0 && y >= 0.0 && x + y > 0.0,
        }
    }
}

impl From<CriticalTime> for SmoothDomain {
    fn from(which: CriticalTime) -> Self {
        match which {
            CriticalTime::U => SmoothDomain::U,
            CriticalTime::V => SmoothDomain::V,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub point: (f64, f64),
    pub h: f64,
    /// Residual at steps `h`, `h/2`, `h/4`.
    pub residuals: [f64; 3],
    /// Richardson-extrapolated `h -> 0` limit of the residual.
    pub extrapolated: f64,
    /// Observed convergence order; `None` when the differences sit in the noise.
    pub order_estimate: Option<f64>,
}

impl ResidualReport {
    /// Residual at the coarsest step `h`.
    pub fn residual(&self) -> f64 {
        self.residuals[0]
    }

    pub fn finest(&self) -> f64 {
        self.residuals[2]
    }
}

/// Default step: `1e-4 max(1, |x|, |y|)`.
pub fn default_step(x: f64, y: f64) -> f64 {
    1e-4 * x.abs().max(y.abs()).max(1.0)
}

fn residual_at<F>(field: &F, p: &ModelParams, x: f64, y: f64, h: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let dx = (field(x + h, y)? - field(x - h, y)?) / (2.0 * h);
    let dy = (field(x, y + h)? - field(x, y - h)?) / (2.0 * h);
    let (beta, gamma) = (p.beta(), p.gamma());
    Ok(beta * x * y * dx + (gamma - beta * x) * y * dy - 1.0)
}

/// Central-difference residual of the transport equation at `(x, y)` for
/// steps `h`, `h/2` and `h/4`, with an observed order of convergence.
pub fn pde_residual<F>(
    field: F,
    p: &ModelParams,
    x: f64,
    y: f64,
    h: f64,
    domain: SmoothDomain,
) -> Result<ResidualReport>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(SirError::Domain(format!("step must be > 0, got {h}")));
    }
    let stencil = [(x + h, y), (x - h, y), (x, y + h), (x, y - h)];
    if !stencil.iter().all(|&(sx, sy)| domain.contains(p, sx, sy)) {
        return Err(SirError::StencilOutOfDomain { x, y });
    }

    let mut residuals = [0.0; 3];
    for (k, r) in residuals.iter_mut().enumerate() {
        *r = residual_at(&field, p, x, y, h / f64::from(1u32 << k))?;
    }
    let d1 = residuals[0] - residuals[1];
    let d2 = residuals[1] - residuals[2];
    let ratio = (d1 / d2).abs();
    let (extrapolated, order_estimate) = if d2 != 0.0 && ratio > 1.0 && ratio.is_finite() {
        let limit = residuals[2] - d2 / (ratio - 1.0);
        let e_coarse = (residuals[0] - limit).abs();
        let e_mid = (residuals[1] - limit).abs();
        let order = (e_coarse > NOISE_FLOOR && e_mid > NOISE_FLOOR).then(|| (e_coarse / e_mid).log2());
        (limit, order)
    } else {
        (residuals[2], None)
    };

    Ok(ResidualReport { point: (x, y), h, residuals, extrapolated, order_estimate })
}

fn equispaced(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
}

/// Largest `|u(x, mu)|` over `n_points` equispaced `x` in `[0, gamma/beta]`,
/// by event detection and (for `x > 0`) by the integral.
pub fn check_boundary_u(p: &ModelParams, n_points: usize, cfg: &IntegratorConfig) -> Result<f64> {
    if n_points < 2 {
        return Err(SirError::Domain(format!("need at least 2 boundary points, got {n_points}")));
    }
    let mut worst = 0.0f64;
    for x in equispaced(0.0, p.rho(), n_points) {
        worst = worst.max(hitting_time_u(p, x, p.mu(), cfg)?.value.abs());
        if x > 0.0 {
            worst = worst.max(u_integral(p, x, p.mu())?.value.abs());
        }
    }
    Ok(worst)
}

/// Largest `|v(gamma/beta, y)|` over the given `y` values.
pub fn check_boundary_v(p: &ModelParams, y_values: &[f64], cfg: &IntegratorConfig) -> Result<f64> {
    let mut worst = 0.0f64;
    for &y in y_values {
        if !(y > 0.0) {
            return Err(SirError::Domain(format!("boundary y must be > 0, got {y}")));
        }
        worst = worst.max(hitting_time_v(p, p.rho(), y, cfg)?.value.abs());
        worst = worst.max(v_integral(p, p.rho(), y)?.value.abs());
    }
    Ok(worst)
}

/// For each fraction `f`, compare the integral value at `(S(t), I(t))`,
/// `t = f T`, with `T - t`, where `T` is the event-detected time from `(x, y)`.
/// Returns the largest error relative to `max(1, T)`.
pub fn check_characteristic_identity(
    p: &ModelParams,
    which: CriticalTime,
    x: f64,
    y: f64,
    fractions: &[f64],
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let total = match which {
        CriticalTime::U => {
            if !(x > 0.0 && y > p.mu()) {
                return Err(SirError::Domain(format!(
                    "identity for u needs x > 0, y > mu, got ({x}, {y})"
                )));
            }
            hitting_time_u(p, x, y, cfg)?.value
        }
        CriticalTime::V => {
            if !(x > p.rho() && y > 0.0) {
                return Err(SirError::Domain(format!(
                    "identity for v needs x > gamma/beta, y > 0, got ({x}, {y})"
                )));
            }
            hitting_time_v(p, x, y, cfg)?.value
        }
    };
    if let Some(f) = fractions.iter().find(|f| !(**f >= 0.0 && **f < 1.0)) {
        return Err(SirError::Domain(format!("fractions must lie in [0, 1), got {f}")));
    }
    let t_max = fractions.iter().fold(0.0f64, |m, f| m.max(f * total));
    let traj = integrate(p, x, y, t_max, cfg)?;
    let scale = total.max(1.0);
    let mut worst = 0.0f64;
    for &f in fractions {
        let t = f * total;
        let st = traj.state_at(t.min(traj.t_end())).expect("t within trajectory span");
        let remaining = match which {
            CriticalTime::U => u_integral(p, st.s, st.i)?.value,
            CriticalTime::V => v_integral(p, st.s, st.i)?.value,
        };
        worst = worst.max((remaining - (total - t)).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, gamma: f64, mu: f64) -> ModelParams {
        ModelParams::new(beta, gamma, mu).unwrap()
    }

    #[test]
    fn lower_bound_field_has_known_residual() {
        // w = ln((x + y)/(rho + mu)) / gamma satisfies the operator = y / (x + y)
        let p = params(2.0, 3.0, 1.0);
        let w = |x: f64, y: f64| Ok(((x + y) / (p.rho() + p.mu())).ln() / p.gamma());
        let (x, y) = (3.0, 2.0);
        let rep = pde_residual(w, &p, x, y, 1e-3, SmoothDomain::PositiveMass).unwrap();
        let expected = y / (x + y) - 1.0;
        assert!((rep.finest() - expected).abs() < 1e-7);
        assert!((rep.extrapolated - expected).abs() < 1e-9);
    }

    #[test]
    fn exact_solution_has_zero_residual() {
        // on x = 0 the operator reduces to gamma y d/dy; ln(y/mu)/gamma solves it
        let p = params(2.0, 3.0, 1.0);
        let f = |_x: f64, y: f64| Ok((y / p.mu()).ln() / p.gamma());
        let r = residual_at(&f, &p, 0.0, 2.0, 1e-3).unwrap();
        assert!(r.abs() < 1e-6);
    }

    #[test]
    fn stencil_leaving_domain_is_rejected() {
        let p = params(2.0, 3.0, 1.0);
        let f = |_: f64, _: f64| Ok(0.0);
        let err = pde_residual(f, &p, 2.0, 1.0005, 1e-3, SmoothDomain::U).unwrap_err();
        assert!(matches!(err, SirError::StencilOutOfDomain { .. }));
        let p = params(3.0, 3.0, 1.0);
        let err = pde_residual(f, &p, 1.0005, 2.0, 1e-3, SmoothDomain::V).unwrap_err();
        assert!(matches!(err, SirError::StencilOutOfDomain { .. }));
    }

    #[test]
    fn perturbed_field_fails_residual() {
        let p = params(2.0, 3.0, 1.0);
        let field = |x: f64, y: f64| u_integral(&p, x, y).map(|r| r.value + 0.01 * x);
        let rep = pde_residual(field, &p, 4.0, 2.0, 1e-3, SmoothDomain::U).unwrap();
        assert!(rep.finest().abs() > 1e-3);
    }

    #[test]
    fn boundaries_are_exactly_zero() {
        let cfg = IntegratorConfig::default();
        assert_eq!(check_boundary_u(&params(2.0, 3.0, 1.0), 10, &cfg).unwrap(), 0.0);
        assert_eq!(check_boundary_u(&params(1.0, 1.0, 2.0), 5, &cfg).unwrap(), 0.0);
        assert!(check_boundary_u(&params(1.0, 1.0, 2.0), 1, &cfg).is_err());
        let p = params(3.0, 3.0, 1.0);
        assert_eq!(check_boundary_v(&p, &[0.1, 1.0, 10.0], &cfg).unwrap(), 0.0);
        let p = params(2.0, 3.0, 1.0);
        assert_eq!(check_boundary_v(&p, &[0.5], &cfg).unwrap(), 0.0);
        assert_eq!(check_boundary_v(&p, &[1e6], &cfg).unwrap(), 0.0);
        assert!(check_boundary_v(&p, &[0.0], &cfg).is_err());
    }

    #[test]
    fn corner_is_zero_for_both_methods() {
        let p = params(2.0, 3.0, 1.0);
        let cfg = IntegratorConfig::default();
        assert_eq!(hitting_time_u(&p, 1.5, 1.0, &cfg).unwrap().value, 0.0);
        assert_eq!(u_integral(&p, 1.5, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn characteristic_identity_zero_fraction() {
        let p = params(2.0, 3.0, 1.0);
        let err = check_characteristic_identity(
            &p,
            CriticalTime::U,
            4.0,
            2.0,
            &[0.0],
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert!(err <= 1e-6);
        assert!(check_characteristic_identity(
            &p,
            CriticalTime::U,
            4.0,
            2.0,
            &[1.0],
            &IntegratorConfig::default()
        )
        .is_err());
    }
}
