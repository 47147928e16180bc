//! Inputs of the a priori bound on the coupled problem: the extreme
//! eigenvalues ν₀, μ₀ and the resulting γ.
use stellar_cowling::bvp::Slbc;
use stellar_cowling::cowling::gamma_estimate;
use stellar_cowling::model::nonadia_exp;
use stellar_cowling::systems::{ModeParams, Regime};

fn main() -> stellar_cowling::Result<()> {
    let m = nonadia_exp();
    for z in [5.0, 20.0, 80.0] {
        let p = ModeParams::high_degree(z, 2.0, Regime::HighDegreeExp, 2.0);
        let g = gamma_estimate(&m, &p, &Slbc::dirichlet(), &Slbc::dirichlet())?;
        println!("zeta = {z:>4}: nu0 {:.4} mu0 {:.4} f {:.4e} gamma {:.4e}", g.nu0, g.mu0, g.f_bound, g.gamma);
    }
    Ok(())
}
