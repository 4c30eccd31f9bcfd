//! Adaptive Dormand–Prince 5(4) integration of the SIR system with dense
//! output, and location of the two hitting times by event detection.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SirError};
use crate::model::{rhs, ModelParams, SirState};
use crate::roots::{brent, Tolerance};

/// Step-size and event-location tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    /// Absolute tolerance on `I`; `S` is always controlled relatively.
    pub abs_tol: f64,
    /// Largest allowed step; `f64::INFINITY` for no limit.
    pub max_step: f64,
    /// Relative tolerance on refined event times.
    pub event_time_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            event_time_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.rel_tol, self.abs_tol, self.max_step, self.event_time_tol]
            .iter()
            .all(|v| *v > 0.0 && !v.is_nan());
        if !all_positive || self.max_steps == 0 {
            return Err(SirError::InvalidParams(format!(
                "integrator tolerances must be > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Which threshold an event records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// `I(t)` falls to `mu` (the time `u`).
    InfectedBelowMu,
    /// `S(t)` falls to `gamma/beta` (the time `v`, the epidemic peak).
    SusceptibleBelowRho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub t: f64,
    pub state: SirState,
}

/// How a critical time was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    OdeEvent,
    Integral,
    AsymptoticU,
    AsymptoticV,
    ExactX0,
    BoundaryZero,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::OdeEvent => "OdeEvent",
            Method::Integral => "Integral",
            Method::AsymptoticU => "AsymptoticU",
            Method::AsymptoticV => "AsymptoticV",
            Method::ExactX0 => "ExactX0",
            Method::BoundaryZero => "BoundaryZero",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A value of `u` or `v` with the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalTimeResult {
    pub value: f64,
    pub method: Method,
    pub err_estimate: f64,
}

impl CriticalTimeResult {
    pub fn boundary_zero() -> Self {
        Self { value: 0.0, method: Method::BoundaryZero, err_estimate: 0.0 }
    }
}

// Dormand–Prince 5(4) tableau. The system is autonomous, so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Shampine's continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type Vec2 = [f64; 2];

/// Continuous solution on one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    coeffs: [Vec2; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// `(S, I)` at time `t` (meaningful for `t` inside the step).
    pub fn eval(&self, t: f64) -> Vec2 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.coeffs;
        std::array::from_fn(|k| {
            r[0][k] + th * (r[1][k] + th1 * (r[2][k] + th * (r[3][k] + th1 * r[4][k])))
        })
    }

    pub fn start(&self) -> Vec2 {
        self.coeffs[0]
    }

    pub fn end(&self) -> Vec2 {
        [self.coeffs[0][0] + self.coeffs[1][0], self.coeffs[0][1] + self.coeffs[1][1]]
    }
}

fn f(p: &ModelParams, y: &Vec2) -> Vec2 {
    let (ds, di) = rhs(p, y[0], y[1]);
    [ds, di]
}

fn axpy(y: &Vec2, h: f64, terms: &[(f64, &Vec2)]) -> Vec2 {
    std::array::from_fn(|k| y[k] + h * terms.iter().map(|(c, v)| c * v[k]).sum::<f64>())
}

/// Step-by-step Dormand–Prince driver.
struct Stepper<'a> {
    p: &'a ModelParams,
    cfg: &'a IntegratorConfig,
    t: f64,
    y: Vec2,
    k1: Vec2,
    h: f64,
    fac_old: f64,
    last_rejected: bool,
    steps: usize,
}

impl<'a> Stepper<'a> {
    fn new(p: &'a ModelParams, cfg: &'a IntegratorConfig, y0: Vec2, horizon: f64) -> Self {
        let k1 = f(p, &y0);
        let h = initial_step(p, cfg, &y0, &k1, horizon);
        Self { p, cfg, t: 0.0, y: y0, k1, h, fac_old: 1e-4, last_rejected: false, steps: 0 }
    }

    fn norm_weights(&self, y0: &Vec2, y1: &Vec2) -> Vec2 {
        weights(self.cfg, &[y0[0].abs().max(y1[0].abs()), y0[1].abs().max(y1[1].abs())])
    }

    /// Advance one accepted step, never passing `t_stop`.
    fn step(&mut self, t_stop: f64) -> Result<DenseSegment> {
        const EXPO1: f64 = 0.2 - 0.04 * 0.75;
        let p = self.p;
        loop {
            if self.steps >= self.cfg.max_steps {
                return Err(SirError::IntegrationStall { t: self.t });
            }
            let mut h = self.h.min(self.cfg.max_step);
            let remaining = t_stop - self.t;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h <= 16.0 * f64::EPSILON * self.t.abs().max(1e-300) {
                return Err(SirError::IntegrationStall { t: self.t });
            }

            let y = self.y;
            let k1 = self.k1;
            let k2 = f(p, &axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(p, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(p, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(p, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let ysti = axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            let k6 = f(p, &ysti);
            let y1 = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let k7 = f(p, &y1);
            self.steps += 1;

            let sk = self.norm_weights(&y, &y1);
            let err = {
                let sum: f64 = (0..2)
                    .map(|k| {
                        let e = h
                            * (E1 * k1[k] + E3 * k3[k] + E4 * k4[k] + E5 * k5[k] + E6 * k6[k]
                                + E7 * k7[k]);
                        (e / sk[k]).powi(2)
                    })
                    .sum();
                (sum / 2.0).sqrt()
            };
            if !err.is_finite() {
                self.h = 0.1 * h;
                self.last_rejected = true;
                continue;
            }

            let fac11 = err.powf(EXPO1);
            let fac = (fac11 / self.fac_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
            if err <= 1.0 {
                self.fac_old = err.max(1e-4);
                let mut h_new = h / fac;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                self.last_rejected = false;

                let ydiff: Vec2 = std::array::from_fn(|k| y1[k] - y[k]);
                let bspl: Vec2 = std::array::from_fn(|k| h * k1[k] - ydiff[k]);
                let coeffs = [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|k| ydiff[k] - h * k7[k] - bspl[k]),
                    std::array::from_fn(|k| {
                        h * (D1 * k1[k] + D3 * k3[k] + D4 * k4[k] + D5 * k5[k] + D6 * k6[k]
                            + D7 * k7[k])
                    }),
                ];
                let t0 = self.t;
                self.t = if last { t_stop } else { t0 + h };
                self.y = y1;
                self.k1 = k7;
                self.h = h_new;
                return Ok(DenseSegment { t0, h: self.t - t0, coeffs });
            }
            self.h = h / (fac11 / 0.9).min(5.0);
            self.last_rejected = true;
        }
    }
}

/// Error weights. `S` is positive and decays over many decades, so it is
/// controlled relatively; `abs_tol` only applies to `I`.
fn weights(cfg: &IntegratorConfig, scale: &Vec2) -> Vec2 {
    [
        (cfg.rel_tol * scale[0]).max(f64::MIN_POSITIVE),
        cfg.abs_tol + cfg.rel_tol * scale[1],
    ]
}

fn initial_step(p: &ModelParams, cfg: &IntegratorConfig, y0: &Vec2, f0: &Vec2, horizon: f64) -> f64 {
    let sk = weights(cfg, &[y0[0].abs(), y0[1].abs()]);
    let rms = |v: &Vec2| ((0..2).map(|k| (v[k] / sk[k]).powi(2)).sum::<f64>() / 2.0).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(horizon.max(1e-6)).min(cfg.max_step);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = f(p, &y1);
    let d2 = rms(&std::array::from_fn(|k| f1[k] - f0[k])) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dmax).powf(0.2) };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Solution path on `[0, t_end]` with dense output and first-crossing events.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub initial: SirState,
    pub samples: Vec<SirState>,
    pub events: Vec<Event>,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    /// State at any `t` in `[0, t_end]`, from the dense output.
    pub fn state_at(&self, t: f64) -> Option<SirState> {
        if !(t >= 0.0 && t <= self.t_end()) {
            return None;
        }
        if self.segments.is_empty() {
            return Some(SirState { t, ..self.initial });
        }
        let idx = self.segments.partition_point(|seg| seg.t1() < t);
        let seg = self.segments.get(idx).unwrap_or_else(|| self.segments.last().unwrap());
        let [s, i] = seg.eval(t);
        Some(SirState { t, s, i })
    }

    pub fn event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }
}

fn check_initial(x: f64, y: f64) -> Result<()> {
    if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
        return Err(SirError::Domain(format!(
            "initial data must be finite and >= 0, got x={x}, y={y}"
        )));
    }
    Ok(())
}

struct Crossing {
    t: f64,
    state: Vec2,
    bracket_width: f64,
}

/// Refine a downward crossing of `component - level` inside one step.
fn refine_crossing(
    seg: &DenseSegment,
    component: usize,
    level: f64,
    cfg: &IntegratorConfig,
) -> Result<Crossing> {
    let g = |t: f64| seg.eval(t)[component] - level;
    let tol = Tolerance { abs: 0.0, rel: cfg.event_time_tol, max_iter: 200 };
    let root = brent(g, seg.t0, seg.t1(), tol)?;
    Ok(Crossing { t: root.x, state: seg.eval(root.x), bracket_width: root.bracket_width })
}

fn crosses_down(seg: &DenseSegment, component: usize, level: f64) -> bool {
    seg.start()[component] > level && seg.end()[component] <= level
}

/// Integrate from `S(0) = x`, `I(0) = y` to `t_end`, recording the first
/// downward crossings of `I = mu` and `S = gamma/beta`.
pub fn integrate(
    p: &ModelParams,
    x: f64,
    y: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_initial(x, y)?;
    cfg.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SirError::Domain(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    let initial = SirState { t: 0.0, s: x, i: y };
    let mut traj = Trajectory {
        params: *p,
        initial,
        samples: vec![initial],
        events: Vec::new(),
        segments: Vec::new(),
    };
    if t_end == 0.0 {
        return Ok(traj);
    }

    let watched = [
        (EventKind::InfectedBelowMu, 1, p.mu()),
        (EventKind::SusceptibleBelowRho, 0, p.rho()),
    ];
    let mut stepper = Stepper::new(p, cfg, [x, y], t_end);
    while stepper.t < t_end {
        let seg = stepper.step(t_end)?;
        for (kind, component, level) in watched {
            if traj.event(kind).is_none() && crosses_down(&seg, component, level) {
                let c = refine_crossing(&seg, component, level, cfg)?;
                traj.events.push(Event {
                    kind,
                    t: c.t,
                    state: SirState { t: c.t, s: c.state[0], i: c.state[1] },
                });
            }
        }
        let [s, i] = seg.end();
        traj.samples.push(SirState { t: seg.t1(), s, i });
        traj.segments.push(seg);
    }
    traj.events.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(traj)
}

/// Run until the first downward crossing of `component - level`, giving up at `cap`.
fn first_crossing(
    p: &ModelParams,
    y0: Vec2,
    component: usize,
    level: f64,
    cap: f64,
    cfg: &IntegratorConfig,
) -> Result<CriticalTimeResult> {
    cfg.validate()?;
    let mut stepper = Stepper::new(p, cfg, y0, cap);
    while stepper.t < cap {
        let seg = stepper.step(cap)?;
        if crosses_down(&seg, component, level) {
            let c = refine_crossing(&seg, component, level, cfg)?;
            let (ds, di) = rhs(p, c.state[0], c.state[1]);
            let rate = if component == 0 { ds } else { di }.abs();
            let level_err = (cfg.abs_tol + cfg.rel_tol * level.abs()) * (stepper.steps as f64).sqrt();
            let err_estimate = c.bracket_width + level_err / rate.max(f64::MIN_POSITIVE);
            return Ok(CriticalTimeResult { value: c.t, method: Method::OdeEvent, err_estimate });
        }
    }
    Err(SirError::TimeCapExceeded { cap })
}

/// `u(x, y)`: first time `I(t) <= mu`, by event detection.
///
/// On `y = mu` with `x > rho` the epidemic first grows, and the value is the
/// time of the return to `mu`; this keeps `u` continuous up to the line `y = mu`.
pub fn hitting_time_u(
    p: &ModelParams,
    x: f64,
    y: f64,
    cfg: &IntegratorConfig,
) -> Result<CriticalTimeResult> {
    check_initial(x, y)?;
    if y < p.mu() || (y == p.mu() && x <= p.rho()) {
        return Ok(CriticalTimeResult::boundary_zero());
    }
    let cap = (x + y) / (p.gamma() * p.mu()) * (1.0 + 1e-6);
    first_crossing(p, [x, y], 1, p.mu(), cap, cfg)
}

/// `v(x, y)`: first time `S(t) <= gamma/beta`, by event detection.
pub fn hitting_time_v(
    p: &ModelParams,
    x: f64,
    y: f64,
    cfg: &IntegratorConfig,
) -> Result<CriticalTimeResult> {
    check_initial(x, y)?;
    let rho = p.rho();
    if x <= rho {
        return Ok(CriticalTimeResult::boundary_zero());
    }
    if y == 0.0 {
        return Err(SirError::NeverReached);
    }
    let cap = (x.ln() - rho.ln()) / (p.beta() * y) * (1.0 + 1e-6);
    first_crossing(p, [x, y], 0, rho, cap, cfg)
}
