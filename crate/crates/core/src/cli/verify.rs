//! The `verify` suite: numerical invariants checked end to end.

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{
    asymptotic_u, asymptotic_v, bounds_u, bounds_v, chord_lower, level_curve, tangent_upper, u_integral,
    v_integral,
};
use crate::error::Result;
use crate::model::{psi, CriticalTime, ModelParams};
use crate::ode::{hitting_time_u, integrate, IntegratorConfig};
use crate::pde::{check_boundary_u, check_boundary_v, check_characteristic_identity, pde_residual};

use super::eval::{by_integral, by_ode};

const CROSS_METHOD_TOL: f64 = 1e-6;
const SANDWICH_SLACK: f64 = 1e-9;
const DRIFT_TOL: f64 = 1e-8;
const PDE_STEP: f64 = 1e-3;
const PDE_RESIDUAL_TOL: f64 = 1e-5;
const PDE_ORDER: (f64, f64) = (1.7, 2.3);
const IDENTITY_TOL: f64 = 1e-6;
const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Overrides both default parameter sets when given.
    pub params: Option<ModelParams>,
    pub tolerances: IntegratorConfig,
    pub quick: bool,
    /// Adds `eps * x` to the `u` field before the residual check.
    pub perturb: Option<f64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Domain rectangles `[x0, x1] x [y0, y1]` used for sweeps.
#[derive(Debug, Clone, Copy)]
struct Rect {
    x: (f64, f64),
    y: (f64, f64),
}

impl Rect {
    fn grid(&self, nx: usize, ny: usize) -> Vec<(f64, f64)> {
        let lin = |(a, b): (f64, f64), n: usize, k: usize| {
            if k + 1 == n {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        };
        (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (lin(self.x, nx, i), lin(self.y, ny, j))))
            .collect()
    }

    fn sample(&self, rng: &mut StdRng) -> (f64, f64) {
        (rng.gen_range(self.x.0..=self.x.1), rng.gen_range(self.y.0..=self.y.1))
    }
}

struct Suite {
    pu: ModelParams,
    pv: ModelParams,
    cfg: IntegratorConfig,
    quick: bool,
    perturb: Option<f64>,
}

impl Suite {
    /// Region of the `u` surface plot: `[0, 4 rho] x [mu, 5 mu]`.
    fn u_plot(&self) -> Rect {
        Rect { x: (0.0, 4.0 * self.pu.rho()), y: (self.pu.mu(), 5.0 * self.pu.mu()) }
    }

    /// Region of the `v` surface plot: `[rho, 20 rho] x [1/2, 5]`.
    fn v_plot(&self) -> Rect {
        Rect { x: (self.pv.rho(), 20.0 * self.pv.rho()), y: (0.5, 5.0) }
    }

    fn u_interior(&self) -> Rect {
        let r = self.u_plot();
        Rect { x: (0.1, r.x.1), y: (1.01 * r.y.0, r.y.1) }
    }

    fn v_interior(&self) -> Rect {
        let r = self.v_plot();
        Rect { x: (1.01 * r.x.0, r.x.1), y: r.y }
    }

    fn pick(&self, full: usize, quick: usize) -> usize {
        if self.quick {
            quick
        } else {
            full
        }
    }

    fn conservation(&self) -> Result<(bool, String)> {
        let p = &self.pu;
        let mut rng = StdRng::seed_from_u64(7);
        let n = self.pick(20, 5);
        let mut worst_drift = 0.0f64;
        let mut monotone = true;
        for _ in 0..n {
            let (x, y) = (rng.gen_range(0.1..10.0), rng.gen_range(0.01..10.0));
            let t_end = 20.0 / p.gamma();
            let traj = integrate(p, x, y, t_end, &self.cfg)?;
            let psi0 = psi(p, x, y)?.value();
            for k in 1..=50 {
                let st = traj.state_at(t_end * (k as f64 / 50.0)).expect("inside span");
                let drift = (psi(p, st.s, st.i)?.value() - psi0).abs() / psi0.abs().max(1.0);
                worst_drift = worst_drift.max(drift);
            }
            for w in traj.samples.windows(2) {
                let (a, b) = (w[0], w[1]);
                let slack = 1e-12 * a.mass().max(1.0);
                monotone &= b.s <= a.s + slack && b.mass() <= a.mass() + slack && b.s >= 0.0 && b.i >= 0.0;
            }
        }
        Ok((
            worst_drift <= DRIFT_TOL && monotone,
            format!("max relative drift {worst_drift:.2e}, S and S+I monotone and positive: {monotone} ({n} trajectories)"),
        ))
    }

    fn boundaries(&self) -> Result<(bool, String)> {
        let bu = check_boundary_u(&self.pu, 10, &self.cfg)?;
        let bv = check_boundary_v(&self.pv, &[0.1, 1.0, 10.0, 1e6], &self.cfg)?;
        Ok((bu == 0.0 && bv == 0.0, format!("max |u(x, mu)| = {bu:e}, max |v(rho, y)| = {bv:e}")))
    }

    fn pde(&self, which: CriticalTime) -> Result<(bool, String)> {
        let (p, rect) = match which {
            CriticalTime::U => (&self.pu, self.u_interior()),
            CriticalTime::V => (&self.pv, self.v_interior()),
        };
        let fractions: &[f64] = if self.quick { &[0.5] } else { &[0.15, 0.5, 0.85] };
        let eps = if which == CriticalTime::U { self.perturb.unwrap_or(0.0) } else { 0.0 };
        let field = |x: f64, y: f64| -> Result<f64> {
            Ok(match which {
                CriticalTime::U => u_integral(p, x, y)?.value + eps * x,
                CriticalTime::V => v_integral(p, x, y)?.value,
            })
        };
        let mut worst_residual = 0.0f64;
        let mut orders = Vec::new();
        let mut ok = true;
        for &fy in fractions {
            for &fx in fractions {
                let x = rect.x.0 + fx * (rect.x.1 - rect.x.0);
                let y = rect.y.0 + fy * (rect.y.1 - rect.y.0);
                let rep = pde_residual(field, p, x, y, PDE_STEP, which.into())?;
                worst_residual = worst_residual.max(rep.finest().abs());
                match rep.order_estimate {
                    Some(q) => {
                        ok &= (PDE_ORDER.0..=PDE_ORDER.1).contains(&q);
                        orders.push(q);
                    }
                    // differences already in the noise: only a tiny residual is acceptable
                    None => ok &= rep.finest().abs() <= 1e-7,
                }
            }
        }
        ok &= worst_residual <= PDE_RESIDUAL_TOL;
        let (lo, hi) = orders.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &q| (a.min(q), b.max(q)));
        Ok((
            ok,
            format!("orders in [{lo:.3}, {hi:.3}], max finest residual {worst_residual:.2e}"),
        ))
    }

    fn cross_method(&self, which: CriticalTime) -> Result<(bool, String)> {
        let (p, nodes) = match which {
            CriticalTime::U => (&self.pu, self.u_interior().grid(self.pick(61, 13), self.pick(41, 9))),
            CriticalTime::V => (&self.pv, self.v_interior().grid(self.pick(77, 20), self.pick(19, 6))),
        };
        let diffs: Vec<f64> = nodes
            .par_iter()
            .map(|&(x, y)| {
                let a = by_ode(p, which, x, y, &self.cfg)?.value;
                let b = by_integral(p, which, x, y)?.value;
                Ok(if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) })
            })
            .collect::<Result<_>>()?;
        let worst = diffs.iter().fold(0.0f64, |m, &d| m.max(d));
        Ok((worst <= CROSS_METHOD_TOL, format!("max relative discrepancy {worst:.2e} over {} nodes", nodes.len())))
    }

    fn sandwich(&self, which: CriticalTime) -> Result<(bool, String)> {
        let (p, nodes) = match which {
            CriticalTime::U => (&self.pu, self.u_plot().grid(self.pick(61, 13), self.pick(41, 9))),
            CriticalTime::V => (&self.pv, self.v_plot().grid(self.pick(77, 20), self.pick(19, 6))),
        };
        let violations: Vec<usize> = nodes
            .par_iter()
            .map(|&(x, y)| -> Result<usize> {
                let value = by_integral(p, which, x, y)?.value;
                let slack = SANDWICH_SLACK * value.abs().max(1.0);
                let (lower, uppers) = match which {
                    CriticalTime::U => {
                        let b = bounds_u(p, x, y)?;
                        (b.lower, vec![Some(b.crude_upper), b.subcritical_upper])
                    }
                    CriticalTime::V if x > p.rho() => {
                        let b = bounds_v(p, x, y)?;
                        (b.lower, vec![Some(b.upper), Some(b.crude_upper)])
                    }
                    CriticalTime::V => return Ok(0),
                };
                let bad = usize::from(lower > value + slack)
                    + uppers.into_iter().flatten().filter(|&u| value > u + slack).count();
                Ok(bad)
            })
            .collect::<Result<_>>()?;
        let total: usize = violations.iter().sum();
        Ok((total == 0, format!("{total} violations over {} nodes", nodes.len())))
    }

    fn ordering(&self) -> Result<(bool, String)> {
        let p = &self.pu;
        let mut rng = StdRng::seed_from_u64(11);
        let n = self.pick(200, 40);
        let rect = Rect { x: (0.0, 10.0), y: (p.mu(), 10.0 * p.mu()) };
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..n {
            let (x, y) = rect.sample(&mut rng);
            let u = by_integral(p, CriticalTime::U, x, y)?.value;
            let v = by_integral(p, CriticalTime::V, x, y)?.value;
            worst = worst.max(v - u);
        }
        Ok((worst <= SANDWICH_SLACK, format!("max(v - u) = {worst:.2e} over {n} points")))
    }

    fn identity(&self, which: CriticalTime) -> Result<(bool, String)> {
        let (p, rect, seed) = match which {
            CriticalTime::U => (&self.pu, self.u_interior(), 13),
            CriticalTime::V => (&self.pv, self.v_interior(), 17),
        };
        let mut rng = StdRng::seed_from_u64(seed);
        let n = self.pick(10, 3);
        let mut worst = 0.0f64;
        for _ in 0..n {
            let (x, y) = rect.sample(&mut rng);
            worst = worst.max(check_characteristic_identity(p, which, x, y, &[0.25, 0.5, 0.75], &self.cfg)?);
        }
        Ok((worst <= IDENTITY_TOL, format!("max scaled error {worst:.2e} over {n} points")))
    }

    fn asymptotics(&self) -> Result<(bool, String)> {
        let p = &self.pu;
        let ratio_u = |r: f64| -> Result<f64> {
            let (x, y) = (r / 2.0, r / 2.0);
            Ok(u_integral(p, x, y)?.value / asymptotic_u(p, x, y)?)
        };
        let (r3, r6) = (ratio_u(1e3)?, ratio_u(1e6)?);
        let q = &self.pv;
        let ratio_v = v_integral(q, 1e6, 1.0)?.value / asymptotic_v(q, 1e6, 1.0)?;
        let within = |r: f64| (0.9..=1.1).contains(&r);
        Ok((
            within(r6) && (r6 - 1.0).abs() < (r3 - 1.0).abs() && within(ratio_v),
            format!("u ratio {r3:.6} at r=1e3, {r6:.8} at r=1e6; v ratio {ratio_v:.8} at (1e6, 1)"),
        ))
    }

    fn vanishing_v(&self) -> Result<(bool, String)> {
        let p = &self.pv;
        let mut rng = StdRng::seed_from_u64(19);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let r = 10f64.powf(rng.gen_range(4.0..6.0));
            let y = if rng.gen_bool(0.5) { rng.gen_range(0.5..5.0) } else { rng.gen_range(0.5..r) };
            let x = (r - y).max(0.0);
            worst = worst.max(by_integral(p, CriticalTime::V, x, y)?.value);
        }
        Ok((worst <= 0.05, format!("max v = {worst:.3e} over 20 points with x + y >= 1e4")))
    }

    fn log_inequalities(&self) -> Result<(bool, String)> {
        let p = &self.pv;
        let rho = p.rho();
        let mut rng = StdRng::seed_from_u64(23);
        let mut ok = true;
        for _ in 0..self.pick(500, 100) {
            let x = rho * 10f64.powf(rng.gen_range(1e-6..6.0));
            let mid = (x.ln() - rho.ln()) / (x - rho);
            ok &= 1.0 / x <= mid * (1.0 + 1e-12) && mid <= (p.beta() / p.gamma()) * (1.0 + 1e-12);
            let y = rng.gen_range(0.01..10.0);
            let z = rng.gen_range(rho..=x);
            let g = level_curve(p, x, y, z);
            let tol = 1e-9 * (x + y);
            ok &= chord_lower(p, x, y, z) <= g + tol && g <= tangent_upper(p, x, y, z) + tol;
        }
        Ok((ok, "1/x <= ln(x/rho)/(x-rho) <= beta/gamma and chord <= g <= tangent".into()))
    }

    fn exact_x0(&self) -> Result<(bool, String)> {
        let p = &self.pu;
        let mut worst = 0.0f64;
        for k in [2.0, 10.0, 1e3] {
            let y = k * p.mu();
            let exact = (y / p.mu()).ln() / p.gamma();
            let got = hitting_time_u(p, 0.0, y, &self.cfg)?.value;
            worst = worst.max((got - exact).abs() / exact);
        }
        Ok((worst <= EXACT_TOL, format!("max relative error {worst:.2e}")))
    }
}

pub fn run_suite(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let suite = Suite {
        pu: opts.params.unwrap_or_else(|| ModelParams::new(2.0, 3.0, 1.0).expect("valid")),
        pv: opts.params.unwrap_or_else(|| ModelParams::new(3.0, 3.0, 1.0).expect("valid")),
        cfg: opts.tolerances,
        quick: opts.quick,
        perturb: opts.perturb,
    };
    type Check<'a> = (&'static str, Box<dyn Fn() -> Result<(bool, String)> + Sync + 'a>);
    let s = &suite;
    let checks: Vec<Check> = vec![
        ("conservation", Box::new(|| s.conservation())),
        ("boundaries", Box::new(|| s.boundaries())),
        ("pde-residual-u", Box::new(|| s.pde(CriticalTime::U))),
        ("pde-residual-v", Box::new(|| s.pde(CriticalTime::V))),
        ("cross-method-u", Box::new(|| s.cross_method(CriticalTime::U))),
        ("cross-method-v", Box::new(|| s.cross_method(CriticalTime::V))),
        ("bounds-u", Box::new(|| s.sandwich(CriticalTime::U))),
        ("bounds-v", Box::new(|| s.sandwich(CriticalTime::V))),
        ("v-le-u", Box::new(|| s.ordering())),
        ("characteristic-u", Box::new(|| s.identity(CriticalTime::U))),
        ("characteristic-v", Box::new(|| s.identity(CriticalTime::V))),
        ("asymptotics", Box::new(|| s.asymptotics())),
        ("vanishing-v", Box::new(|| s.vanishing_v())),
        ("log-inequalities", Box::new(|| s.log_inequalities())),
        ("exact-x0", Box::new(|| s.exact_x0())),
    ];
    let run = || {
        checks
            .iter()
            .map(|(name, check)| {
                let start = Instant::now();
                let (passed, detail) = match check() {
                    Ok(r) => r,
                    Err(e) => (false, format!("error: {e}")),
                };
                CheckOutcome { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
            })
            .collect()
    };
    match rayon::ThreadPoolBuilder::new().num_threads(opts.threads.unwrap_or(0)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}
