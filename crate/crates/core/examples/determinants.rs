//! Multi-point determinants of the full system, kept in log scale.
use stellar_cowling::bvp::MultiPointSpec;
use stellar_cowling::cowling::{multipoint_numeric, w_det_numeric};
use stellar_cowling::model::adia_exp;
use stellar_cowling::propagate::OdeOptions;
use stellar_cowling::systems::{ModeParams, Regime};

fn main() -> stellar_cowling::Result<()> {
    let m = adia_exp();
    let opts = OdeOptions::with_tol(1e-11);
    for z in [20.0, 80.0, 160.0] {
        let p = ModeParams::high_degree(z, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let w = w_det_numeric(&m, &p, m.a, m.b, &opts)?;
        println!("zeta = {z:>5}: sign {:+} log|det W| {:.4}", w.sign, w.log_abs);
    }
    let p = ModeParams::high_frequency(2.0, 40.0);
    for zz in [0.01, 0.1, 1.0] {
        let spec = MultiPointSpec::V { r: [m.a, m.a + zz / 40.0, m.a, m.a + zz / 40.0] };
        let v = multipoint_numeric(&m, &p, &spec, &opts)?;
        println!("V at z = {zz}: sign {:+} log|det| {:.4}", v.sign, v.log_abs);
    }
    Ok(())
}
