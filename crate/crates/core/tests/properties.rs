use proptest::prelude::*;

use sir_times::analytic::{
    bounds_u, bounds_v, chord_lower, level_curve, solve_anchor, tangent_upper, u_integral, v_integral,
};
use sir_times::ode::{hitting_time_u, hitting_time_v, integrate, IntegratorConfig};
use sir_times::{psi, ModelParams};

fn params() -> impl Strategy<Value = ModelParams> {
    (0.5f64..5.0, 0.5f64..5.0, 0.2f64..2.0).prop_map(|(b, g, m)| ModelParams::new(b, g, m).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_is_conserved_and_populations_decay(p in params(), x in 0.01f64..20.0, y in 0.01f64..10.0) {
        let horizon = 10.0 / p.gamma();
        let traj = integrate(&p, x, y, horizon, &IntegratorConfig::default()).unwrap();
        let psi0 = psi(&p, x, y).unwrap().value();
        for k in 1..=20 {
            let st = traj.state_at(horizon * (k as f64 / 20.0)).unwrap();
            prop_assert!(st.s > 0.0 && st.i > 0.0);
            prop_assert!(close(psi(&p, st.s, st.i).unwrap().value(), psi0, 1e-8));
        }
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].s <= w[0].s);
            prop_assert!(w[1].mass() <= w[0].mass() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn methods_agree(p in params(), x in 0.05f64..10.0, y in 0.0f64..8.0) {
        let cfg = IntegratorConfig::default();
        let y_u = p.mu() * (1.0 + y);
        let a = hitting_time_u(&p, x, y_u, &cfg).unwrap().value;
        let b = u_integral(&p, x, y_u).unwrap().value;
        prop_assert!(close(a, b, 1e-6), "u: ode {} integral {}", a, b);
        let x_v = p.rho() * (1.0 + x);
        let y_v = y + 0.05;
        let a = hitting_time_v(&p, x_v, y_v, &cfg).unwrap().value;
        let b = v_integral(&p, x_v, y_v).unwrap().value;
        prop_assert!(close(a, b, 1e-6), "v: ode {} integral {}", a, b);
    }

    #[test]
    fn u_lies_between_its_bounds(p in params(), x in 0.01f64..30.0, dy in 0.0f64..20.0) {
        let y = p.mu() + dy;
        let u = u_integral(&p, x, y).unwrap().value;
        let b = bounds_u(&p, x, y).unwrap();
        let slack = 1e-9 * u.max(1.0);
        prop_assert!(b.lower <= u + slack);
        prop_assert!(u <= b.crude_upper + slack);
        if let Some(s) = b.subcritical_upper {
            prop_assert!(u <= s + slack);
        }
    }

    #[test]
    fn v_lies_between_its_bounds(p in params(), fx in 1.001f64..50.0, y in 0.05f64..20.0) {
        let x = p.rho() * fx;
        let v = v_integral(&p, x, y).unwrap().value;
        let b = bounds_v(&p, x, y).unwrap();
        let slack = 1e-9 * v.max(1.0);
        prop_assert!(b.lower <= v + slack, "lower {} > v {}", b.lower, v);
        prop_assert!(v <= b.upper + slack, "v {} > upper {}", v, b.upper);
        prop_assert!(v <= b.crude_upper + slack);
    }

    #[test]
    fn v_never_exceeds_u(p in params(), x in 0.0f64..20.0, dy in 0.0f64..10.0) {
        let y = p.mu() + dy;
        let u = if x == 0.0 { (y / p.mu()).ln() / p.gamma() } else { u_integral(&p, x, y).unwrap().value };
        let v = v_integral(&p, x, y).unwrap().value;
        prop_assert!(v <= u + 1e-9);
    }

    #[test]
    fn anchor_is_on_the_level_set(p in params(), x in 0.01f64..50.0, dy in 0.0f64..50.0) {
        let y = p.mu() + dy;
        let a = solve_anchor(&p, x, y).unwrap();
        prop_assert!(a.ln_a <= p.rho().ln() + 1e-12);
        let target = psi(&p, x, y).unwrap().value();
        prop_assert!(a.residual <= 1e-12 * target.abs().max(1.0) * 8.0);
    }

    #[test]
    fn logarithmic_mean_inequalities(p in params(), f in 1e-6f64..1e6) {
        let rho = p.rho();
        let x = rho * (1.0 + f);
        let m = (x.ln() - rho.ln()) / (x - rho);
        prop_assert!(1.0 / x <= m * (1.0 + 1e-12));
        prop_assert!(m <= p.beta() / p.gamma() * (1.0 + 1e-12));
    }

    #[test]
    fn level_curve_between_chord_and_tangent(p in params(), f in 0.01f64..100.0, y in 0.0f64..10.0, t in 0.0f64..=1.0) {
        let rho = p.rho();
        let x = rho * (1.0 + f);
        let z = rho + t * (x - rho);
        let g = level_curve(&p, x, y, z);
        let tol = 1e-12 * (x + y + 1.0);
        prop_assert!(chord_lower(&p, x, y, z) <= g + tol);
        prop_assert!(g <= tangent_upper(&p, x, y, z) + tol);
    }
}
