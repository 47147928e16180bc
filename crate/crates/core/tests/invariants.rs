//! Property tests for the algebraic and numerical invariants.
use nalgebra::{Matrix4, Vector2};
use proptest::prelude::*;

use stellar_cowling::bvp::{Chain, Condition, PiBc};
use stellar_cowling::cowling::{rate_fit, sharp_f, strong_modulus, weak_modulus};
use stellar_cowling::model::ProfileFamily;
use stellar_cowling::propagate::{second_compound, Grid, OdeOptions, PAIRS4};
use stellar_cowling::systems::{es_to_lw, full_matrix, lw_to_es, residual_matrix, ModeParams, Regime, StateVector};

fn minor(x: &Matrix4<f64>, rows: (usize, usize)) -> f64 {
    x[(rows.0, 0)] * x[(rows.1, 1)] - x[(rows.0, 1)] * x[(rows.1, 0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rate_fit_recovers_power_laws(c in 0.01f64..100.0, k in -4.0f64..4.0, x0 in 1.0f64..50.0) {
        let xs: Vec<f64> = (0..6).map(|i| x0 * 2f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(k)).collect();
        let f = rate_fit(&xs, &ys).unwrap();
        prop_assert!((f.slope - k).abs() < 1e-9);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-8);
        prop_assert!(f.half_width < 1e-8);
    }

    #[test]
    fn lw_change_of_variables_roundtrips(u in -10.0f64..10.0, eta in -10.0f64..10.0, phi in -10.0f64..10.0,
                                        dphi in -10.0f64..10.0, sigma in 0.1f64..100.0) {
        let x = StateVector { u, eta, phi, dphi };
        let back = lw_to_es(es_to_lw(x, sigma), sigma);
        prop_assert!((back.eta - eta).abs() <= 1e-12 * (1.0 + eta.abs() + phi.abs() / (sigma * sigma)));
        prop_assert_eq!((back.u, back.phi, back.dphi), (u, phi, dphi));
    }

    #[test]
    fn second_compound_is_derivative_of_minors(entries in prop::collection::vec(-2.0f64..2.0, 32), h in 1e-4f64..1e-3) {
        let a = Matrix4::from_column_slice(&entries[..16]);
        let x = Matrix4::from_column_slice(&entries[16..]);
        let c = second_compound(&a);
        // d/dt minors(X + tAX) at t = 0, by central differences.
        let xp = x + a * x * h;
        let xm = x - a * x * h;
        for (row, &p) in PAIRS4.iter().enumerate() {
            let fd = (minor(&xp, p) - minor(&xm, p)) / (2.0 * h);
            let exact: f64 = (0..6).map(|col| c[(row, col)] * minor(&x, PAIRS4[col])).sum();
            prop_assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "pair {:?}: {} vs {}", p, fd, exact);
        }
    }

    #[test]
    fn weak_modulus_is_scale_invariant(scale in 1e-6f64..1e6, seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let grid = Grid::gauss(1.0, 2.0, 4, 8);
        let phi: Vec<f64> = grid.nodes.iter().map(|r| seed[0] * r.sin() + seed[1] * r * r).collect();
        let cy: Vec<f64> = grid.nodes.iter().map(|r| 1.0 + seed[2].abs() + seed[3] * r).collect();
        let base = weak_modulus(&phi, &cy, &grid).unwrap();
        let ps: Vec<f64> = phi.iter().map(|v| v * scale).collect();
        let cs: Vec<f64> = cy.iter().map(|v| v * scale).collect();
        prop_assert!((weak_modulus(&ps, &cs, &grid).unwrap() - base).abs() <= 1e-12 * base.max(1e-300));
        prop_assert_eq!(strong_modulus(&cs, &cs).unwrap(), 0.0);
    }

    #[test]
    fn sharp_f_decreases_on_unit_interval(x in 0.0f64..0.999, dx in 1e-3f64..0.5) {
        let y = (x + dx).min(1.0);
        prop_assert!(sharp_f(y) < sharp_f(x));
        prop_assert!(sharp_f(x) <= 1.0 && sharp_f(y) >= 0.0);
    }

    #[test]
    fn residual_trace_matches_coefficients(s in 0.5f64..3.0, zeta in 1.0f64..50.0, r in 1.0f64..2.0) {
        let m = ProfileFamily::Exponential { a: 1.0, b: 2.0, rho0: 1.0, s, c0: 1.0, q: 0.0, g: Some((1.0, 0.0)), kappa: 1.0 }
            .build()
            .unwrap();
        let p = ModeParams::high_degree(zeta, 3.0, Regime::HighDegreeExp, 2.0);
        let a = residual_matrix(&m, &p, r);
        // tr 𝒜 = g/c² + N²/g.
        let expect = m.g(r) / m.c(r).powi(2) + m.nsq(r) / m.g(r);
        prop_assert!((a.trace() - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        let full = full_matrix(&m, &p, r);
        prop_assert!((full.trace() - (expect - 2.0 / r)).abs() < 1e-12 * (1.0 + expect.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn residual_bvp_is_linear_in_data(d1 in -5.0f64..5.0, d2 in -5.0f64..5.0, zeta in 2.0f64..40.0) {
        let m = stellar_cowling::model::nonadia_exp();
        let p = ModeParams::high_degree(zeta, 2.0, Regime::HighDegreeExp, 2.0);
        let nodes: Vec<f64> = (0..=16).map(|i| 1.0 + i as f64 / 16.0).collect();
        let f = |r: f64| residual_matrix(&m, &p, r);
        let chain = Chain::new(&f, &nodes, &OdeOptions::default()).unwrap();
        let solve = |x: f64, y: f64| chain.solve(&PiBc::new(1, 2, x, y, 1.0, 2.0).unwrap().conditions()).unwrap();
        let s1 = solve(1.0, 0.0);
        let s2 = solve(0.0, 1.0);
        let s = solve(d1, d2);
        for i in 0..nodes.len() {
            let combo: Vector2<f64> = s1.states[i] * d1 + s2.states[i] * d2;
            let scale = 1.0 + combo.amax();
            prop_assert!((s.states[i] - combo).amax() < 1e-8 * scale);
        }
        prop_assert!(s.condition_residual < 1e-10);
        let c = Condition::<2>::component(1.0, 0, d1);
        prop_assert!((c.row.dot(&s.states[0]) - d1).abs() < 1e-9 * (1.0 + d1.abs()));
    }
}
