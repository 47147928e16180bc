//! Prüfer eigenvalues of 𝒥 with mixed conditions against ((n − ½)π/L)², and
//! the σ-dependent choice of conditions that keeps σ² away from the spectrum.
use std::f64::consts::{FRAC_PI_2, PI};

use stellar_cowling::bvp::{choose_sigma_bc, sl_eigenvalues, sl_operator, OperatorTag, Slbc};
use stellar_cowling::model::adia_exp;

fn main() -> stellar_cowling::Result<()> {
    let m = adia_exp();
    let op = sl_operator(&m, OperatorTag::J, 0.0);
    let len = op.length();
    let bc = Slbc::new(0.0, FRAC_PI_2)?;
    for e in sl_eigenvalues(&op, &bc, 4..12)? {
        let n = (e.index + 1) as f64;
        let lead = (n - 0.5) * PI / len;
        println!("n = {n:>2}: {:>12.5} vs {:>12.5}   n·gap {:.4}", e.value, lead * lead, n * (e.value.sqrt() - lead).abs());
    }
    for sigma in [10.0, 25.0, 50.0] {
        let s = choose_sigma_bc(&m, sigma, (FRAC_PI_2, FRAC_PI_2))?;
        println!("sigma = {sigma}: generic {} gap {:.3} bound {:.3}", s.generic, s.gap, s.bound);
    }
    Ok(())
}
