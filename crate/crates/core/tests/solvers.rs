//! Cross-checks between independent numerical routes.
use std::f64::consts::FRAC_PI_2;

use stellar_cowling::bvp::{choose_sigma_bc, sl_eigenvalues, sl_operator, OperatorTag, PiBc, Slbc};
use stellar_cowling::cowling::{coupled_point, sharp_construction, CoupledBc, DatumSlot, PhiBc, PointOptions};
use stellar_cowling::greens::{greens_matrix, max_asymmetry, PanelGrid};
use stellar_cowling::model::{adia_exp, nonadia_exp};
use stellar_cowling::propagate::OdeOptions;
use stellar_cowling::systems::{ModeParams, Regime};

#[test]
fn integral_equation_and_full_system_agree() {
    let m = adia_exp();
    let opts = OdeOptions::default();
    let bc = CoupledBc { pi: PiBc::new(2, 1, 1.0, -0.5, m.a, m.b).unwrap(), phi: PhiBc::slbc(&Slbc::dirichlet(), m.a, m.b) };
    let popts = PointOptions { cross_check: true, ..Default::default() };
    for z in [8.0, 30.0] {
        let p = ModeParams::high_degree(z, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let row = coupled_point(&m, &p, &bc, m.b, &opts, &popts).unwrap();
        assert!(row.route_gap.unwrap() < 1e-7, "route gap {:?}", row.route_gap);
        assert!(row.ys_defect.unwrap() < 1e-7, "decomposition defect {:?}", row.ys_defect);
        assert!(row.weak > 0.0 && row.weak < 1.0);
    }
}

#[test]
fn scalar_kernel_is_symmetric() {
    let m = nonadia_exp();
    let p = ModeParams::high_degree(20.0, 2.0, Regime::HighDegreeExp, 2.0);
    let g = greens_matrix(&m, &p, 1, 2, PanelGrid::uniform(m.a, m.b, 16, 6), &OdeOptions::default()).unwrap();
    let k = g.kernel_matrix();
    assert!(max_asymmetry(&k) < 1e-9 * k.amax());
}

#[test]
fn eigenvalues_increase_and_avoid_sigma_squared() {
    let m = adia_exp();
    let op = sl_operator(&m, OperatorTag::J, 0.0);
    let eig = sl_eigenvalues(&op, &Slbc::new(0.0, FRAC_PI_2).unwrap(), 0..10).unwrap();
    assert!(eig.windows(2).all(|w| w[1].value > w[0].value));
    for sigma in [7.3, 19.0, 33.3] {
        let s = choose_sigma_bc(&m, sigma, (FRAC_PI_2, FRAC_PI_2)).unwrap();
        assert!(s.gap >= s.bound);
    }
}

#[test]
fn construction_modulus_tracks_closed_form() {
    let m = adia_exp();
    let p = ModeParams::high_degree(80.0, 1.0, Regime::HighDegreeAdiabatic, 2.0);
    let s = sharp_construction(&m, &p, m.b, DatumSlot::DphiB, &OdeOptions::default()).unwrap();
    assert!((s.zeta0 / s.oracle - 1.0).abs() < 0.03, "ratio {}", s.zeta0 / s.oracle);
}
