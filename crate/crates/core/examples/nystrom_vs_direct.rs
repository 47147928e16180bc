//! The coupled problem solved twice: as a 4×4 boundary problem by multiple
//! shooting, and as a Green's-kernel integral equation for Φ alone.
use stellar_cowling::bvp::{PiBc, Slbc};
use stellar_cowling::cowling::{coupled_point, CoupledBc, PhiBc, PointOptions};
use stellar_cowling::model::nonadia_exp;
use stellar_cowling::propagate::OdeOptions;
use stellar_cowling::systems::{ModeParams, Regime};

fn main() -> stellar_cowling::Result<()> {
    let m = nonadia_exp();
    let opts = OdeOptions::with_tol(1e-11);
    let bc = CoupledBc { pi: PiBc::new(1, 2, 1.0, 1.0, m.a, m.b)?, phi: PhiBc::slbc(&Slbc::dirichlet(), m.a, m.b) };
    let popts = PointOptions { cross_check: true, ..Default::default() };
    for z in [10.0, 40.0, 160.0] {
        let p = ModeParams::high_degree(z, 2.0, Regime::HighDegreeExp, 2.0);
        let row = coupled_point(&m, &p, &bc, m.b, &opts, &popts)?;
        println!(
            "zeta = {z:>5}: weak {:.4e}  route gap {:.2e}  Y = Y_p + Y0 defect {:.2e}",
            row.weak,
            row.route_gap.unwrap_or(f64::NAN),
            row.ys_defect.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
