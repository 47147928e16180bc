//! Numeric fundamental matrices against the closed-form leading-order ones.
//! The worst column deviation should fall roughly like 1/ζ.
use stellar_cowling::asymptotics::{compare_asymptotic, full_asymptotic_matrix, FullFamily};
use stellar_cowling::cowling::rate_fit;
use stellar_cowling::model::nonadia_exp;
use stellar_cowling::propagate::OdeOptions;
use stellar_cowling::systems::{ModeParams, Regime};

fn main() -> stellar_cowling::Result<()> {
    let m = nonadia_exp();
    let opts = OdeOptions::with_tol(1e-11);
    let nodes: Vec<f64> = (0..=128).map(|i| m.a + (m.b - m.a) * i as f64 / 128.0).collect();
    let zetas = [20.0, 40.0, 80.0, 160.0];
    let mut devs = Vec::new();
    for &z in &zetas {
        let p = ModeParams::high_degree(z, 2.0, Regime::HighDegreeExp, 2.0);
        let basis = full_asymptotic_matrix(&m, &p, FullFamily::FirstMtx)?;
        let c = compare_asymptotic(&basis, &nodes, &opts, z)?;
        println!("zeta = {z:>5}: deviation {:.3e}", c.deviation);
        devs.push(c.deviation);
    }
    let fit = rate_fit(&zetas, &devs)?;
    println!("slope {:.3} ± {:.3}", fit.slope, fit.half_width);
    Ok(())
}
