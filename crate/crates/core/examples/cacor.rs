//! ‖Φ‖/‖η₀‖ on a fixed interval as σ grows, in the two normalizations.
use stellar_cowling::cowling::cacor_demo;
use stellar_cowling::model::adia_exp;
use stellar_cowling::propagate::OdeOptions;

fn main() -> stellar_cowling::Result<()> {
    let m = adia_exp();
    let opts = OdeOptions::with_tol(1e-11);
    let sigmas = [20.0, 40.0, 80.0, 160.0, 200.0];
    for lw in [true, false] {
        println!("normalized by 1/sigma^2: {lw}");
        for r in cacor_demo(&m, 2.0, &sigmas, lw, (1.0, 1.0), &opts)? {
            println!("  sigma = {:>5}: ratio {:.4e} (k = {})", r.sigma, r.ratio, r.k);
        }
    }
    Ok(())
}
