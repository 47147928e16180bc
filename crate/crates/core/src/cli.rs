//! Command-line front end: config loading, sweep orchestration and report
//! files. The `cowling` binary is a thin wrapper around [`run`].

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{compare_asymptotic, full_asymptotic_matrix, residual_basis, FullFamily};
use crate::bvp::{sl_eigenvalues, sl_operator, OperatorTag, PiBc, Slbc};
use crate::cowling::{
    cacor_demo, coupled_point, rate_fit, sharp_construction, sharp_oracle, sharp_f, CoupledBc, DatumSlot,
    ModuliReport, PhiBc, PointOptions,
};
use crate::greens::{greens_matrix, AjkForm, KernelGrid, PanelGrid};
use crate::model::{preset, ProfileFamily, StellarModel};
use crate::propagate::OdeOptions;
use crate::systems::{LwVariant, ModeParams, Regime};
use crate::{Error, Result};

pub const CONFIG_SCHEMA: &str = "cowling-run/1";
pub const REPORT_SCHEMA: &str = "cowling-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAND: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "cowling", version, about = "Cowling-approximation checks for nonradial stellar pulsation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for report.json and CSV files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Integration tolerance, overriding the config.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Coefficient samples and regime classification.
    ModelShow,
    /// Numeric vs asymptotic fundamental matrices over the sweep.
    AsymptoticCheck,
    /// Weak/strong moduli and gap rates over the sweep.
    ModuliSweep,
    /// Sturm–Liouville eigenvalues and their asymptotic gaps.
    Eigs,
    /// Closed-form modulus comparisons.
    SharpCheck,
    /// Growth of ‖Φ‖/‖η₀‖ with σ on a fixed interval.
    Cacor,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ModelShow => "model-show",
            Command::AsymptoticCheck => "asymptotic-check",
            Command::ModuliSweep => "moduli-sweep",
            Command::Eigs => "eigs",
            Command::SharpCheck => "sharp-check",
            Command::Cacor => "cacor",
        }
    }
}

// ------------------------------------------------------------------ config

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Preset { preset: String },
    Family(ProfileFamily),
}

impl ModelSpec {
    pub fn build(&self) -> Result<StellarModel> {
        match self {
            ModelSpec::Preset { preset: name } => preset(name),
            ModelSpec::Family(f) => f.build(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sweep {
    Values(Vec<f64>),
    Geometric { start: f64, stop: f64, count: usize },
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Sweep::Values(ref v) => v.clone(),
            Sweep::Geometric { start, stop, count } => {
                if count < 2 {
                    return vec![start];
                }
                let q = (stop / start).powf(1.0 / (count - 1) as f64);
                (0..count).map(|i| start * q.powi(i as i32)).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcConfig {
    /// (j, k) of Π_{j,k}: component j at a, k at b (1 = u, 2 = η).
    pub pi: [usize; 2],
    pub pi_data: [f64; 2],
    /// (θ₁, θ₂) of the separated Φ conditions.
    pub phi_theta: [f64; 2],
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig { pi: [1, 2], pi_data: [1.0, 1.0], phi_theta: [0.0, PI] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    pub lw_entry_as_printed: bool,
    pub degree_power: f64,
}

impl Default for Flags {
    fn default() -> Self {
        Flags { lw_entry_as_printed: true, degree_power: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigsConfig {
    pub operator: OperatorTag,
    pub theta: [f64; 2],
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for EigsConfig {
    fn default() -> Self {
        EigsConfig { operator: OperatorTag::J, theta: [0.0, FRAC_PI_2], n_min: 5, n_max: 40 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacorConfig {
    pub lw_normalized: bool,
    pub switches: [f64; 2],
}

impl Default for CacorConfig {
    fn default() -> Self {
        CacorConfig { lw_normalized: true, switches: [1.0, 1.0] }
    }
}

fn default_sigma() -> f64 {
    1.0
}
fn default_ell() -> f64 {
    2.0
}
fn default_z() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    OdeOptions::default().tol
}
fn default_slot() -> DatumSlot {
    DatumSlot::DphiB
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub model: ModelSpec,
    pub regime: Regime,
    /// σ for the high-degree regimes.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// ℓ for the high-frequency regime.
    #[serde(default = "default_ell")]
    pub ell: f64,
    /// z for the mixed parametrizations.
    #[serde(default = "default_z")]
    pub z: f64,
    pub sweep: Sweep,
    #[serde(default)]
    pub bc: BcConfig,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub cross_check: bool,
    #[serde(default)]
    pub kernel_csv: bool,
    #[serde(default = "default_slot")]
    pub datum_slot: DatumSlot,
    #[serde(default)]
    pub eigs: EigsConfig,
    #[serde(default)]
    pub cacor: CacorConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != CONFIG_SCHEMA {
            return Err(Error::Config(format!("schema must be '{CONFIG_SCHEMA}', got '{}'", cfg.schema)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn params(&self, x: f64) -> ModeParams {
        match self.regime {
            Regime::HighFrequency => ModeParams::high_frequency(self.ell, x),
            Regime::MixedI => ModeParams::mixed_i(x, self.z),
            Regime::MixedII => ModeParams::mixed_ii(x, self.z),
            r => ModeParams::high_degree(x, self.sigma, r, self.flags.degree_power),
        }
    }

    /// Builds the model and checks the sweep, tolerance and regime.
    pub fn validate(&self) -> Result<StellarModel> {
        let values = self.sweep.values();
        if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Config("sweep must be nonempty and positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if !(1..=2).contains(&self.bc.pi[0]) || !(1..=2).contains(&self.bc.pi[1]) {
            return Err(Error::Config("bc.pi entries must be 1 or 2".into()));
        }
        let m = self.model.build().map_err(|e| Error::Config(e.to_string()))?;
        for &x in &values {
            self.params(x).validate(&m).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(m)
    }
}

// ---------------------------------------------------------------- reports

#[derive(Clone, Debug, Serialize)]
pub struct CommandReport {
    pub schema: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub pass: bool,
    pub failures: Vec<String>,
    pub data: Value,
}

pub struct Outcome {
    pub report: CommandReport,
    /// Extra files (name, contents) written next to report.json.
    pub files: Vec<(String, String)>,
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_text(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt17(*v)))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn band(failures: &mut Vec<String>, label: &str, value: f64, target: f64, half: f64) {
    if !((value - target).abs() <= half) {
        failures.push(format!("{label} = {value:.4} outside {target} ± {half}"));
    }
}

/// Maps an error to the exit-code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Io(_) | Error::Csv(_) | Error::Regime(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn in_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs.and_then(|j| rayon::ThreadPoolBuilder::new().num_threads(j).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

// --------------------------------------------------------------- commands

pub fn cmd_model_show(cfg: &RunConfig, m: &StellarModel) -> Result<Outcome> {
    let samples: Vec<_> = (0..=8).map(|i| m.coefficients(m.a + (m.b - m.a) * i as f64 / 8.0)).collect();
    let (lo, hi) = m.nsq_range();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for x in cfg.sweep.values() {
        let p = cfg.params(x);
        let s2 = p.sigma * p.sigma;
        let (qlo, qhi) = (lo / s2, hi / s2);
        let label = if m.adiabatic {
            "adiabatic (N² ≡ 0)".to_string()
        } else if qhi < 1.0 {
            "high-degree-exp (0 < N²/σ² < 1), tags: first matrix, exponential rates, F(ℋ(a)) sharp modulus".to_string()
        } else if qlo > 1.0 {
            "high-degree-osc (N²/σ² > 1), tags: oscillatory matrix, 𝔷₀ ≤ max σ²/N²".to_string()
        } else {
            "mixed sign of 1 − N²/σ²".to_string()
        };
        if qlo <= 1.0 && qhi >= 1.0 && !m.adiabatic {
            warnings.push(format!("turning point N² = σ² inside [a, b] at parameter {x}"));
        }
        rows.push(json!({ "parameter": x, "sigma": p.sigma, "nsq_over_sigma2": [qlo, qhi], "regime": label }));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let data = json!({
        "model": m.name,
        "interval": [m.a, m.b],
        "kappa": m.kappa,
        "samples": samples,
        "classification": rows,
        "warnings": warnings,
    });
    Ok(Outcome {
        report: CommandReport { schema: REPORT_SCHEMA, command: "model-show", config: cfg.clone(), pass: true, failures: vec![], data },
        files: vec![],
    })
}

fn full_family(regime: Regime) -> Result<FullFamily> {
    Ok(match regime {
        Regime::HighDegreeAdiabatic => FullFamily::Adiabatic,
        Regime::HighDegreeExp => FullFamily::FirstMtx,
        Regime::HighDegreeOsc => FullFamily::Oscillatory,
        Regime::HighFrequency => FullFamily::Lw,
        r => return Err(Error::Config(format!("no asymptotic matrix for regime {}", r.label()))),
    })
}

pub fn cmd_asymptotic_check(cfg: &RunConfig, m: &StellarModel, opts: &OdeOptions, jobs: Option<usize>) -> Result<Outcome> {
    let fam = full_family(cfg.regime)?;
    let nodes: Vec<f64> = (0..=128).map(|i| m.a + (m.b - m.a) * i as f64 / 128.0).collect();
    let xs = cfg.sweep.values();
    let results: Vec<Result<f64>> = in_pool(jobs, || {
        xs.par_iter()
            .map(|&x| {
                let mut basis = full_asymptotic_matrix(m, &cfg.params(x), fam)?;
                basis.lw_variant = if cfg.flags.lw_entry_as_printed { LwVariant::AsPrinted } else { LwVariant::Conjugate };
                Ok(compare_asymptotic(&basis, &nodes, opts, x)?.deviation)
            })
            .collect()
    });
    let devs: Vec<f64> = results.into_iter().collect::<Result<_>>()?;
    let mut failures = Vec::new();
    let fit = rate_fit(&xs, &devs).ok();
    match fit {
        Some(f) => band(&mut failures, "deviation slope", f.slope, -1.0, 0.3),
        None => failures.push("slope needs at least 4 sweep values".into()),
    }
    let rows: Vec<Vec<f64>> = xs.iter().zip(&devs).map(|(x, d)| vec![*x, *d]).collect();
    let csv = csv_text(&["parameter", "deviation"], &rows)?;
    let data = json!({ "family": fam, "parameters": xs, "deviations": devs, "fit": fit });
    Ok(Outcome {
        report: CommandReport {
            schema: REPORT_SCHEMA,
            command: "asymptotic-check",
            config: cfg.clone(),
            pass: failures.is_empty(),
            failures,
            data,
        },
        files: vec![("asymptotic.csv".into(), csv)],
    })
}

fn coupled_bc(cfg: &RunConfig, m: &StellarModel) -> Result<CoupledBc> {
    Ok(CoupledBc {
        pi: PiBc::new(cfg.bc.pi[0], cfg.bc.pi[1], cfg.bc.pi_data[0], cfg.bc.pi_data[1], m.a, m.b)?,
        phi: PhiBc::slbc(&Slbc::new(cfg.bc.phi_theta[0], cfg.bc.phi_theta[1])?, m.a, m.b),
    })
}

/// Claimed (η-gap, u-gap) slopes per regime.
fn claimed_rates(regime: Regime) -> Option<(f64, f64)> {
    match regime {
        Regime::HighDegreeAdiabatic => Some((-3.0, -2.0)),
        Regime::HighDegreeExp => Some((-2.0, -1.0)),
        _ => None,
    }
}

pub fn cmd_moduli_sweep(cfg: &RunConfig, m: &StellarModel, opts: &OdeOptions, jobs: Option<usize>) -> Result<Outcome> {
    let bc = coupled_bc(cfg, m)?;
    let popts = PointOptions { cross_check: cfg.cross_check, ..Default::default() };
    let xs = cfg.sweep.values();
    let results: Vec<Result<_>> = in_pool(jobs, || {
        xs.par_iter()
            .map(|&x| {
                let p = cfg.params(x);
                let mut row = coupled_point(m, &p, &bc, m.b, opts, &popts)?;
                row.parameter = x;
                row.oracle = match cfg.regime {
                    Regime::HighDegreeAdiabatic | Regime::HighDegreeExp | Regime::HighDegreeOsc => {
                        Some(sharp_oracle(m, &p)?.0)
                    }
                    _ => None,
                };
                Ok(row)
            })
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut report = ModuliReport::new(&m.name, cfg.regime, if cfg.regime == Regime::HighFrequency { "sigma" } else { "zeta" }, rows);
    if cfg.regime == Regime::HighDegreeAdiabatic {
        report.oracle_label = Some("1/(2*sqrt(2)*zeta^2)".into());
    } else if let Some(r) = report.rows.first() {
        if r.oracle.is_some() {
            report.oracle_label = Some(sharp_oracle(m, &cfg.params(r.parameter))?.1);
        }
    }
    let mut failures = Vec::new();
    if let Some((eta, u)) = claimed_rates(cfg.regime) {
        match (report.slopes.get("eta_gap"), report.slopes.get("u_gap")) {
            (Some(a), Some(b)) => {
                band(&mut failures, "eta-gap slope", a.slope, eta, 0.3);
                band(&mut failures, "u-gap slope", b.slope, u, 0.3);
            }
            _ => failures.push("slope needs at least 4 sweep values".into()),
        }
    }
    for r in &report.rows {
        if let Some(g) = r.route_gap {
            if !(g < 1e-6) {
                failures.push(format!("route gap {g:.2e} at {}", r.parameter));
            }
        }
        if let Some(d) = r.ys_defect {
            if !(d < 1e-6) {
                failures.push(format!("decomposition defect {d:.2e} at {}", r.parameter));
            }
        }
    }
    let mut files = vec![("moduli.csv".to_string(), report.to_csv_string()?)];
    if cfg.kernel_csv {
        let x = *xs.last().expect("validated nonempty");
        let p = cfg.params(x);
        let grid = PanelGrid::uniform(m.a, m.b, (x as usize).clamp(16, 256), 6);
        let g = greens_matrix(m, &p, bc.pi.j, bc.pi.k, grid, opts)?;
        let mut k = KernelGrid::numeric(&g);
        if let Ok(b) = residual_basis(m, &p, bc.pi.j, bc.pi.k) {
            k = k.with_symmetric(&b, AjkForm::Derived)?;
        }
        let path = std::env::temp_dir().join(format!("cowling-kernel-{}.csv", std::process::id()));
        k.write_csv(&path)?;
        files.push(("kernel.csv".into(), fs::read_to_string(&path)?));
        let _ = fs::remove_file(&path);
    }
    let data = serde_json::to_value(&report)?;
    Ok(Outcome {
        report: CommandReport {
            schema: REPORT_SCHEMA,
            command: "moduli-sweep",
            config: cfg.clone(),
            pass: failures.is_empty(),
            failures,
            data,
        },
        files,
    })
}

pub fn cmd_eigs(cfg: &RunConfig, m: &StellarModel) -> Result<Outcome> {
    let e = cfg.eigs;
    if !(e.n_min >= 1 && e.n_max >= e.n_min) {
        return Err(Error::Config("eigs needs 1 ≤ n_min ≤ n_max".into()));
    }
    let lambda_cap = cfg.params(cfg.sweep.values()[0]).lambda_cap;
    let op = sl_operator(m, e.operator, lambda_cap);
    let len = op.length();
    let bc = Slbc::new(e.theta[0], e.theta[1])?;
    let eig = sl_eigenvalues(&op, &bc, e.n_min - 1..e.n_max)?;
    // Leading-order spacing offset for the chosen family.
    let offset = match (bc.theta1 == 0.0, bc.theta2 == PI) {
        (true, true) => 0.0,
        (false, false) => 1.0,
        _ => 0.5,
    };
    let rows: Vec<Vec<f64>> = eig
        .iter()
        .map(|v| {
            let n = (v.index + 1) as f64;
            let pred = (n - offset) * PI / len;
            vec![n, v.value, pred * pred, n * (v.value.max(0.0).sqrt() - pred).abs()]
        })
        .collect();
    let csv = csv_text(&["n", "eigenvalue", "leading_order", "n_times_root_gap"], &rows)?;
    let data = json!({ "operator": e.operator, "length": len, "offset": offset, "rows": rows });
    Ok(Outcome {
        report: CommandReport { schema: REPORT_SCHEMA, command: "eigs", config: cfg.clone(), pass: true, failures: vec![], data },
        files: vec![("eigs.csv".into(), csv)],
    })
}

pub fn cmd_sharp_check(cfg: &RunConfig, m: &StellarModel, opts: &OdeOptions, jobs: Option<usize>) -> Result<Outcome> {
    let xs = cfg.sweep.values();
    let results: Vec<Result<_>> = in_pool(jobs, || {
        xs.par_iter().map(|&x| sharp_construction(m, &cfg.params(x), m.b, cfg.datum_slot, opts)).collect()
    });
    let s4 = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (x, s) in xs.iter().zip(&s4) {
        // Ratio that the closed form predicts to be 1.
        let ratio = match cfg.regime {
            Regime::HighDegreeAdiabatic => s.zeta0 / s.oracle,
            Regime::HighDegreeExp => (s.zeta0 / s.oracle).powi(2),
            Regime::HighDegreeOsc => s.zeta0,
            _ => s.zeta0 * x * x,
        };
        rows.push(vec![*x, s.zeta0, s.oracle, ratio, s.w_det.log_abs]);
    }
    let last = rows.last().expect("validated nonempty");
    match cfg.regime {
        Regime::HighDegreeAdiabatic | Regime::HighDegreeExp => band(&mut failures, "modulus ratio", last[3], 1.0, 0.15),
        Regime::HighDegreeOsc => {
            for r in &rows {
                if !(r[1] < 1.0) {
                    failures.push(format!("𝔷₀ = {} ≥ 1 at {}", r[1], r[0]));
                }
            }
        }
        _ => {}
    }
    let csv = csv_text(&["parameter", "zeta0", "oracle", "ratio", "log_abs_w_det"], &rows)?;
    let f_a = if cfg.regime == Regime::HighDegreeExp {
        Some(sharp_f(crate::asymptotics::curly_h(m, &cfg.params(xs[0]), m.a)?))
    } else {
        None
    };
    let data = json!({ "datum_slot": cfg.datum_slot, "oracle_label": s4[0].oracle_label, "F_at_a": f_a, "rows": rows });
    Ok(Outcome {
        report: CommandReport {
            schema: REPORT_SCHEMA,
            command: "sharp-check",
            config: cfg.clone(),
            pass: failures.is_empty(),
            failures,
            data,
        },
        files: vec![("sharp.csv".into(), csv)],
    })
}

pub fn cmd_cacor(cfg: &RunConfig, m: &StellarModel, opts: &OdeOptions) -> Result<Outcome> {
    let xs = cfg.sweep.values();
    let c = cfg.cacor;
    let rows = cacor_demo(m, cfg.ell, &xs, c.lw_normalized, (c.switches[0], c.switches[1]), opts)?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let growth = ratios[ratios.len() - 1] / ratios[0];
    let fit = rate_fit(&xs, &ratios).ok();
    let mut failures = Vec::new();
    if !(growth >= 10.0) {
        failures.push(format!("growth ×{growth:.2} below 10"));
    }
    if !fit.is_some_and(|f| f.slope > 0.0) {
        failures.push("fitted slope not positive".into());
    }
    let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.sigma, r.ratio, r.k as f64]).collect();
    let csv = csv_text(&["sigma", "phi_over_eta0", "k"], &table)?;
    let data = json!({ "rows": rows, "growth": growth, "fit": fit });
    Ok(Outcome {
        report: CommandReport { schema: REPORT_SCHEMA, command: "cacor", config: cfg.clone(), pass: failures.is_empty(), failures, data },
        files: vec![("cacor.csv".into(), csv)],
    })
}

/// Runs one command and writes its files; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match cli.config.as_deref().map(RunConfig::load) {
        Some(Ok(c)) => c,
        Some(Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        None => {
            eprintln!("error: --config PATH is required");
            return EXIT_CONFIG;
        }
    };
    let mut cfg = cfg;
    if let Some(t) = cli.tol {
        cfg.tolerance = t;
    }
    let m = match cfg.validate() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let opts = OdeOptions::with_tol(cfg.tolerance);
    let outcome = match cli.command {
        Command::ModelShow => cmd_model_show(&cfg, &m),
        Command::AsymptoticCheck => cmd_asymptotic_check(&cfg, &m, &opts, cli.jobs),
        Command::ModuliSweep => cmd_moduli_sweep(&cfg, &m, &opts, cli.jobs),
        Command::Eigs => cmd_eigs(&cfg, &m),
        Command::SharpCheck => cmd_sharp_check(&cfg, &m, &opts, cli.jobs),
        Command::Cacor => cmd_cacor(&cfg, &m, &opts),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = write_outcome(&cli.out, &outcome) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    for f in &outcome.report.failures {
        eprintln!("band violation: {f}");
    }
    println!("{}: {}", cli.command.name(), if outcome.report.pass { "pass" } else { "FAIL" });
    if outcome.report.pass {
        EXIT_OK
    } else {
        EXIT_BAND
    }
}

fn write_outcome(dir: &Path, o: &Outcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&o.report)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    for (name, body) in &o.files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> &'static str {
        r#"{"schema":"cowling-run/1","model":{"preset":"adia-exp"},"regime":"high-degree-adiabatic","sweep":{"values":[20,40,80,160]}}"#
    }

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_json(base()).unwrap();
        assert_eq!(c.bc, BcConfig::default());
        assert_eq!(c.sweep.values().len(), 4);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad_schema = base().replace("cowling-run/1", "v0");
        assert!(matches!(RunConfig::from_json(&bad_schema), Err(Error::Config(_))));
        let c = RunConfig::from_json(&base().replace("[20,40,80,160]", "[]")).unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_json(&base().replace("adia-exp", "nonadia-exp")).unwrap();
        assert!(c.validate().is_err(), "adiabatic regime on a nonadiabatic model");
        assert!(RunConfig::from_json(&base().replace("\"regime\"", "\"bogus\":1,\"regime\"")).is_err());
    }

    #[test]
    fn geometric_sweep() {
        let s = Sweep::Geometric { start: 20.0, stop: 160.0, count: 4 };
        let v = s.values();
        assert!((v[3] - 160.0).abs() < 1e-12 && (v[1] - 40.0).abs() < 1e-12);
    }

    #[test]
    fn model_show_classifies() {
        let text = r#"{"schema":"cowling-run/1","model":{"preset":"nonadia-exp"},"regime":"high-degree-exp","sigma":2.0,"sweep":{"values":[20]}}"#;
        let c = RunConfig::from_json(text).unwrap();
        let m = c.validate().unwrap();
        let o = cmd_model_show(&c, &m).unwrap();
        let label = o.report.data["classification"][0]["regime"].as_str().unwrap();
        assert!(label.starts_with("high-degree-exp"));
    }
}
