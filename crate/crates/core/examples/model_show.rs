//! Coefficient profiles of the two presets and where N²/σ² sits relative to 1.
use stellar_cowling::model::{adia_exp, nonadia_exp};

fn main() {
    for m in [adia_exp(), nonadia_exp()] {
        println!("{} on [{}, {}], kappa = {}", m.name, m.a, m.b, m.kappa);
        println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}", "r", "rho", "c", "g", "N^2", "h");
        for i in 0..=4 {
            let r = m.a + (m.b - m.a) * i as f64 / 4.0;
            let s = m.coefficients(r);
            println!("{:>6.3} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e}", r, s.rho, s.c, s.g, s.nsq, s.h);
        }
        let (lo, hi) = m.nsq_range();
        for sigma in [0.5, 2.0] {
            let q = (lo / (sigma * sigma) + 0.0, hi / (sigma * sigma) + 0.0);
            println!("sigma = {sigma}: N^2/sigma^2 in [{:.3}, {:.3}]", q.0, q.1);
        }
        println!();
    }
}
