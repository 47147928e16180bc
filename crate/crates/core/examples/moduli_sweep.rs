//! Weak and strong Cowling moduli over ζ for the adiabatic preset, written as
//! JSON and CSV.
use stellar_cowling::bvp::{PiBc, Slbc};
use stellar_cowling::cowling::{coupled_point, CoupledBc, ModuliReport, PhiBc, PointOptions};
use stellar_cowling::model::adia_exp;
use stellar_cowling::propagate::OdeOptions;
use stellar_cowling::systems::{ModeParams, Regime};

fn main() -> stellar_cowling::Result<()> {
    let m = adia_exp();
    let opts = OdeOptions::with_tol(1e-11);
    let bc = CoupledBc { pi: PiBc::new(1, 2, 1.0, 1.0, m.a, m.b)?, phi: PhiBc::slbc(&Slbc::dirichlet(), m.a, m.b) };
    let mut rows = Vec::new();
    for z in [20.0, 40.0, 80.0, 160.0] {
        let p = ModeParams::high_degree(z, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let mut row = coupled_point(&m, &p, &bc, m.b, &opts, &PointOptions::default())?;
        row.parameter = z;
        rows.push(row);
    }
    let report = ModuliReport::new(&m.name, Regime::HighDegreeAdiabatic, "zeta", rows);
    for (k, f) in &report.slopes {
        println!("{k:>8}: slope {:.3} ± {:.3}", f.slope, f.half_width);
    }
    let dir = std::env::temp_dir();
    std::fs::write(dir.join("moduli.json"), report.to_json()?)?;
    report.write_csv(&dir.join("moduli.csv"))?;
    println!("wrote {}", dir.join("moduli.{json,csv}").display());
    Ok(())
}
