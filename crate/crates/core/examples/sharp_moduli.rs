//! The explicit construction whose modulus matches a closed form:
//! 1/(2√2ζ²) for the adiabatic preset, √F(ℋ(a))/ζ² for the exponential one.
use stellar_cowling::cowling::{sharp_construction, DatumSlot};
use stellar_cowling::model::{adia_exp, nonadia_exp};
use stellar_cowling::propagate::OdeOptions;
use stellar_cowling::systems::{ModeParams, Regime};

fn main() -> stellar_cowling::Result<()> {
    let opts = OdeOptions::with_tol(1e-11);
    let cases = [(adia_exp(), 1.0, Regime::HighDegreeAdiabatic), (nonadia_exp(), 2.0, Regime::HighDegreeExp)];
    for (m, sigma, regime) in cases {
        println!("{}", m.name);
        for z in [20.0, 80.0, 160.0] {
            let p = ModeParams::high_degree(z, sigma, regime, 2.0);
            let s = sharp_construction(&m, &p, m.b, DatumSlot::DphiB, &opts)?;
            println!("  zeta = {z:>5}: modulus {:.5e}  {} = {:.5e}  ratio {:.4}", s.zeta0, s.oracle_label, s.oracle, s.zeta0 / s.oracle);
        }
    }
    Ok(())
}
