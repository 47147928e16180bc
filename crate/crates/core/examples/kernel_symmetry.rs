//! Numeric scalar kernel F against its asymptotic symmetric part.
use stellar_cowling::asymptotics::residual_basis;
use stellar_cowling::greens::{greens_matrix, AjkForm, KernelGrid, PanelGrid};
use stellar_cowling::model::nonadia_exp;
use stellar_cowling::propagate::OdeOptions;
use stellar_cowling::systems::{ModeParams, Regime};

fn main() -> stellar_cowling::Result<()> {
    let m = nonadia_exp();
    let opts = OdeOptions::with_tol(1e-11);
    for z in [20.0, 40.0, 80.0] {
        let p = ModeParams::high_degree(z, 2.0, Regime::HighDegreeExp, 2.0);
        let grid = PanelGrid::uniform(m.a, m.b, z as usize, 6);
        let g = greens_matrix(&m, &p, 1, 2, grid, &opts)?;
        let k = KernelGrid::numeric(&g).with_symmetric(&residual_basis(&m, &p, 1, 2)?, AjkForm::Derived)?;
        println!(
            "zeta = {z:>4}: |F - F^s|/|F^s| {:.3e}  asymmetry {:.1e}",
            k.relative_gap().unwrap_or(f64::NAN),
            k.numeric_asymmetry().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
