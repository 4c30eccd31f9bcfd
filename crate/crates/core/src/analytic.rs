//! Integral representations of `u` and `v`, the level-set anchor, closed-form
//! bounds and large-population asymptotics.
//!
//! Both times are integrals of `1 / (beta z g(z))` along the level curve
//! `g(z) = (gamma/beta) ln z - z + psi(x, y)` of the trajectory through `(x, y)`.
//! The quadrature runs in `L = ln z`, where `dz / z = dL` and the integrand
//! becomes `1 / (beta g(e^L))`. Along the `u` path `g >= mu`, so the
//! transformed integrand is bounded by `1 / (beta mu)` even when the anchor
//! is far below the smallest positive double.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SirError};
use crate::model::{psi, ModelParams};
use crate::ode::{CriticalTimeResult, Method};
use crate::quadrature::{graded_breaks, integrate_with_breaks, QuadConfig, QuadResult};
use crate::roots::{brent, Tolerance};

/// The point `a(x, y)` in `(0, gamma/beta]` with `psi(a, mu) = psi(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorResult {
    /// `a` itself; `0.0` when it underflows, in which case use `ln_a`.
    pub a: f64,
    pub ln_a: f64,
    /// `|psi(a, mu) - psi(x, y)|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsU {
    pub lower: f64,
    pub crude_upper: f64,
    /// Present iff `beta x < gamma`.
    pub subcritical_upper: Option<f64>,
}

impl BoundsU {
    /// Smallest applicable upper bound.
    pub fn upper(&self) -> f64 {
        self.subcritical_upper
            .map_or(self.crude_upper, |s| s.min(self.crude_upper))
    }
}

/// Bounds on `v`. `upper` and `crude_upper` are not ordered in general.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsV {
    pub lower: f64,
    pub upper: f64,
    pub crude_upper: f64,
}

impl BoundsV {
    pub fn min_upper(&self) -> f64 {
        self.upper.min(self.crude_upper)
    }
}

/// A quadrature-based time together with diagnostics from the integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralDetail {
    pub result: CriticalTimeResult,
    pub anchor: Option<AnchorResult>,
    /// Smallest `g` seen at any quadrature node (`+inf` if the interval was empty).
    pub min_g: f64,
    pub evaluations: usize,
}

fn domain(msg: String) -> SirError {
    SirError::Domain(msg)
}

/// `g(z) = (gamma/beta) ln z - z + psi(x, y)`, the infected level on the
/// trajectory through `(x, y)` when the susceptible level is `z`.
pub fn level_curve(p: &ModelParams, x: f64, y: f64, z: f64) -> f64 {
    // same function as rho ln z - z + psi, written relative to (x, y)
    let s = x.ln() - z.ln();
    level_curve_log(p, x, y, s)
}

/// `g` at `z = x e^{-s}`.
fn level_curve_log(p: &ModelParams, x: f64, y: f64, s: f64) -> f64 {
    y - x * (-s).exp_m1() - p.rho() * s
}

/// Chord of the concave `g` through `z = gamma/beta` and `z = x`: a lower bound on `g` there.
pub fn chord_lower(p: &ModelParams, x: f64, y: f64, z: f64) -> f64 {
    let rho = p.rho();
    (rho * (x.ln() - rho.ln()) / (x - rho) - 1.0) * (z - x) + y
}

/// Tangent of `g` at `z = x`: an upper bound on `g`.
pub fn tangent_upper(p: &ModelParams, x: f64, y: f64, z: f64) -> f64 {
    (p.rho() / x - 1.0) * (z - x) + y
}

pub fn solve_anchor(p: &ModelParams, x: f64, y: f64) -> Result<AnchorResult> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("anchor requires x > 0, got {x}")));
    }
    let mu = p.mu();
    if !(y >= mu && y.is_finite()) {
        return Err(domain(format!("anchor requires y >= mu = {mu}, got {y}")));
    }
    let rho = p.rho();
    let target = psi(p, x, y)?.value();
    if y == mu && x <= rho {
        return Ok(AnchorResult { a: x, ln_a: x.ln(), residual: 0.0 });
    }

    // phi(L) = psi(e^L, mu) - psi(x, y), strictly decreasing for L < ln rho
    let phi = |l: f64| l.exp() + mu - rho * l - target;
    let hi = rho.ln();
    let f_hi = phi(hi);
    if f_hi > 0.0 {
        return Err(domain(format!(
            "psi(x, y) = {target} is below psi(gamma/beta, mu); no anchor exists"
        )));
    }
    let mut lo = hi.min(-target / rho - 10.0);
    let mut width = (hi - lo).max(1.0);
    while phi(lo) <= 0.0 {
        width *= 2.0;
        lo = hi - width;
        if !lo.is_finite() {
            return Err(domain(format!("anchor bracket expansion failed for psi = {target}")));
        }
    }
    let tol = Tolerance { abs: 0.0, rel: 0.0, max_iter: 400 };
    let root = brent(phi, lo, hi, tol)?;
    let ln_a = root.x.min(hi);
    let a = ln_a.exp();
    Ok(AnchorResult { a, ln_a, residual: phi(ln_a).abs() })
}

fn quad_config() -> QuadConfig {
    QuadConfig::default()
}

/// Integrate `1 / (beta g)` over `L = ln z` in `[ln_lo, ln x]`.
///
/// `lo_scale` is the width in `L` over which `g` changes appreciably at the
/// lower end; at the upper end that width is `y / |x - gamma/beta|`.
fn level_integral(
    p: &ModelParams,
    x: f64,
    y: f64,
    ln_lo: f64,
    lo_scale: f64,
) -> Result<(QuadResult, f64)> {
    let ln_x = x.ln();
    let beta = p.beta();
    let hi_scale = (y / (x - p.rho()).abs()).min(1.0);
    let breaks = graded_breaks(ln_lo, ln_x, lo_scale.min(1.0), hi_scale);
    let mut min_g = f64::INFINITY;
    let q = integrate_with_breaks(
        |l| {
            let g = level_curve_log(p, x, y, ln_x - l);
            min_g = min_g.min(g);
            1.0 / (beta * g)
        },
        &breaks,
        &quad_config(),
    )?;
    Ok((q, min_g))
}

/// `u(x, y)` from its integral representation, with diagnostics.
pub fn u_integral_detailed(p: &ModelParams, x: f64, y: f64) -> Result<IntegralDetail> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("u integral requires x > 0, got {x}")));
    }
    if !(y >= p.mu() && y.is_finite()) {
        return Err(domain(format!("u integral requires y >= mu = {}, got {y}", p.mu())));
    }
    if y == p.mu() && x <= p.rho() {
        return Ok(IntegralDetail {
            result: CriticalTimeResult::boundary_zero(),
            anchor: Some(AnchorResult { a: x, ln_a: x.ln(), residual: 0.0 }),
            min_g: f64::INFINITY,
            evaluations: 0,
        });
    }
    let anchor = solve_anchor(p, x, y)?;
    // near the anchor g ~ mu + (rho - a)(L - ln a)
    let lo_scale = p.mu() / (p.rho() - anchor.a).abs();
    let (q, min_g) = level_integral(p, x, y, anchor.ln_a, lo_scale)?;
    if !(min_g > 0.0) {
        return Err(domain(format!("level curve left the positive half-plane (min g = {min_g})")));
    }
    Ok(IntegralDetail {
        result: CriticalTimeResult {
            value: q.value,
            method: Method::Integral,
            err_estimate: q.error,
        },
        anchor: Some(anchor),
        min_g,
        evaluations: q.evaluations,
    })
}

pub fn u_integral(p: &ModelParams, x: f64, y: f64) -> Result<CriticalTimeResult> {
    u_integral_detailed(p, x, y).map(|d| d.result)
}

/// `v(x, y)` from its integral representation, with diagnostics.
pub fn v_integral_detailed(p: &ModelParams, x: f64, y: f64) -> Result<IntegralDetail> {
    if !(x >= 0.0 && x.is_finite() && y >= 0.0 && y.is_finite()) {
        return Err(domain(format!("v integral requires finite x, y >= 0, got ({x}, {y})")));
    }
    let rho = p.rho();
    if x <= rho {
        return Ok(IntegralDetail {
            result: CriticalTimeResult::boundary_zero(),
            anchor: None,
            min_g: f64::INFINITY,
            evaluations: 0,
        });
    }
    if y == 0.0 {
        return Err(SirError::NeverReached);
    }
    // g is stationary in L at z = rho, so the lower end has no narrow feature
    let (q, min_g) = level_integral(p, x, y, rho.ln(), 1.0)?;
    if !(min_g > 0.0) {
        return Err(domain(format!("level curve left the positive half-plane (min g = {min_g})")));
    }
    Ok(IntegralDetail {
        result: CriticalTimeResult {
            value: q.value,
            method: Method::Integral,
            err_estimate: q.error,
        },
        anchor: None,
        min_g,
        evaluations: q.evaluations,
    })
}

pub fn v_integral(p: &ModelParams, x: f64, y: f64) -> Result<CriticalTimeResult> {
    v_integral_detailed(p, x, y).map(|d| d.result)
}

pub fn bounds_u(p: &ModelParams, x: f64, y: f64) -> Result<BoundsU> {
    if !(x >= 0.0 && y >= p.mu()) {
        return Err(domain(format!(
            "u bounds require x >= 0 and y >= mu = {}, got ({x}, {y})",
            p.mu()
        )));
    }
    let (beta, gamma, mu, rho) = (p.beta(), p.gamma(), p.mu(), p.rho());
    let lower = (((x + y) / (rho + mu)).ln() / gamma).max(0.0);
    let crude_upper = (x + y) / (gamma * mu);
    let subcritical_upper = (beta * x < gamma).then(|| (y / mu).ln() / (gamma - beta * x));
    Ok(BoundsU { lower, crude_upper, subcritical_upper })
}

fn checked_ln(arg: f64, what: &str) -> Result<f64> {
    if arg > 0.0 {
        Ok(arg.ln())
    } else {
        Err(domain(format!("{what}: logarithm argument {arg} is not positive")))
    }
}

pub fn bounds_v(p: &ModelParams, x: f64, y: f64) -> Result<BoundsV> {
    let (beta, rho) = (p.beta(), p.rho());
    if !(x > rho && y > 0.0) {
        return Err(domain(format!(
            "v bounds require x > gamma/beta = {rho} and y > 0, got ({x}, {y})"
        )));
    }
    let log_ratio = x.ln() - rho.ln();

    let upper_num = log_ratio - y.ln() + checked_ln(x - rho + y - rho * log_ratio, "v upper bound")?;
    let upper_den = beta * (y + x * (1.0 - rho * log_ratio / (x - rho)));
    if !(upper_den > 1e-12) {
        return Err(domain(format!("v upper bound denominator {upper_den} is degenerate")));
    }
    let upper = upper_num / upper_den;

    let lower_num =
        log_ratio - y.ln() + checked_ln(x - rho + y + rho * (rho / x - 1.0), "v lower bound")?;
    let lower = lower_num / (beta * (x - rho + y));

    let crude_upper = log_ratio / (beta * y);
    Ok(BoundsV { lower, upper, crude_upper })
}

/// `ln((x + y) / mu) / gamma`, the large-population limit of `u`.
pub fn asymptotic_u(p: &ModelParams, x: f64, y: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= p.mu()) {
        return Err(domain(format!(
            "asymptotic u requires x >= 0 and y >= mu = {}, got ({x}, {y})",
            p.mu()
        )));
    }
    Ok(((x + y) / p.mu()).ln() / p.gamma())
}

/// `ln[(x/rho)((x - rho)/y + 1)] / (beta (x - rho + y))`, the large-population limit of `v`.
pub fn asymptotic_v(p: &ModelParams, x: f64, y: f64) -> Result<f64> {
    let (beta, rho) = (p.beta(), p.rho());
    if !(x > rho && y > 0.0) {
        return Err(domain(format!(
            "asymptotic v requires x > gamma/beta = {rho} and y > 0, got ({x}, {y})"
        )));
    }
    Ok(((x / rho) * ((x - rho) / y + 1.0)).ln() / (beta * (x - rho + y)))
}
