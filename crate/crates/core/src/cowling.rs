//! The coupled problem: residual solutions Y₀, the Nyström and direct solution
//! routes, the weak and strong moduli, rate fits and the closed-form oracles.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{curly_h, ScaledMatrix};
use crate::bvp::{
    det_full_multipoint, node_index, sl_eigenvalues, Chain, ChainSolution, Condition, MultiPointSpec, PiBc, ScaledDet,
    SlOperator, Slbc,
};
use crate::greens::{greens_matrix, rate_scale, GreensMatrix, PanelGrid};
use crate::model::StellarModel;
use crate::propagate::{
    chebyshev_diff, chebyshev_nodes, integrate, integrate_fundamental, second_compound, solve_ivp, Grid, OdeOptions,
};
use crate::systems::{c_vector, full_matrix, residual_matrix, ModeParams, Regime};
use crate::{Error, Result};

/// Default number of Chebyshev collocation nodes for the Nyström route.
pub const NYSTROM_NODES: usize = 257;
const NYSTROM_PIVOT_FLOOR: f64 = 1e-15;

/// Two scalar conditions `row·(Φ, Φ′)(r) = value` on Φ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiBc {
    pub r1: f64,
    pub row1: [f64; 2],
    pub value1: f64,
    pub r2: f64,
    pub row2: [f64; 2],
    pub value2: f64,
}

impl PhiBc {
    /// Homogeneous separated conditions for 𝓛 (p = r²) at r1 and r2.
    pub fn slbc(bc: &Slbc, r1: f64, r2: f64) -> Self {
        let (ra, rb) = bc.rows(r1 * r1, r2 * r2);
        PhiBc { r1, row1: [ra[0], ra[1]], value1: 0.0, r2, row2: [rb[0], rb[1]], value2: 0.0 }
    }

    /// Φ(r1) = v1, Φ(r2) = v2.
    pub fn values(r1: f64, v1: f64, r2: f64, v2: f64) -> Self {
        PhiBc { r1, row1: [1.0, 0.0], value1: v1, r2, row2: [1.0, 0.0], value2: v2 }
    }

    pub fn conditions(&self) -> [Condition<4>; 2] {
        [
            Condition { r: self.r1, row: Vector4::new(0.0, 0.0, self.row1[0], self.row1[1]), value: self.value1 },
            Condition { r: self.r2, row: Vector4::new(0.0, 0.0, self.row2[0], self.row2[1]), value: self.value2 },
        ]
    }
}

/// Π_{j,k} data on Y together with conditions on Φ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledBc {
    pub pi: PiBc,
    pub phi: PhiBc,
}

impl CoupledBc {
    pub fn conditions(&self) -> [Condition<4>; 4] {
        let e = |i: usize| {
            let mut v = Vector4::zeros();
            v[i - 1] = 1.0;
            v
        };
        let [c3, c4] = self.phi.conditions();
        [
            Condition { r: self.pi.r1, row: e(self.pi.j), value: self.pi.a_value },
            Condition { r: self.pi.r2, row: e(self.pi.k), value: self.pi.b_value },
            c3,
            c4,
        ]
    }

    pub fn points(&self) -> Vec<f64> {
        vec![self.pi.r1, self.pi.r2, self.phi.r1, self.phi.r2]
    }
}

/// Sorted union of `nodes` and `extra`, with near-duplicates removed.
pub fn merge_points(nodes: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = nodes.iter().chain(extra).copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1.0));
    v
}

/// Y₀ solving Y′ = 𝒜Y with Π_{j,k} data. `nodes` must contain both condition points.
pub fn residual_solution(m: &StellarModel, p: &ModeParams, pi: &PiBc, nodes: &[f64], opts: &OdeOptions) -> Result<ChainSolution<2>> {
    let f = |r: f64| residual_matrix(m, p, r);
    Chain::new(&f, nodes, opts)?.solve(&pi.conditions())
}

/// The full 4×4 system by multiple shooting.
pub fn solve_coupled_direct(
    m: &StellarModel,
    p: &ModeParams,
    bc: &CoupledBc,
    nodes: &[f64],
    opts: &OdeOptions,
) -> Result<ChainSolution<4>> {
    let f = |r: f64| full_matrix(m, p, r);
    Chain::new(&f, nodes, opts)?.solve(&bc.conditions())
}

/// The full system with arbitrary conditions (e.g. the 𝔚 rows).
pub fn solve_full(m: &StellarModel, p: &ModeParams, conds: &[Condition<4>], nodes: &[f64], opts: &OdeOptions) -> Result<ChainSolution<4>> {
    let f = |r: f64| full_matrix(m, p, r);
    Chain::new(&f, nodes, opts)?.solve(conds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NystromSolution {
    pub nodes: Vec<f64>,
    pub phi: Vec<f64>,
    /// ‖AΦ − rhs‖∞ / (‖A‖∞‖Φ‖∞ + ‖rhs‖∞).
    pub residual: f64,
    pub pivot_ratio: f64,
}

/// Solves 𝓛[Φ] = 𝓕[Φ] + μC·Y₀ by Chebyshev collocation for 𝓛 and Nyström
/// quadrature for 𝓕. `cheb` are the collocation nodes (breaks of the Green's
/// grid, first and last equal to the Φ condition points) and `y0` is Y₀ there.
pub fn solve_coupled_nystrom(
    m: &StellarModel,
    p: &ModeParams,
    phi_bc: &PhiBc,
    greens: &GreensMatrix,
    cheb: &[f64],
    y0: &[Vector2<f64>],
) -> Result<NystromSolution> {
    let n = cheb.len();
    let (a, b) = (cheb[0], cheb[n - 1]);
    if (phi_bc.r1 - a).abs() > 1e-13 || (phi_bc.r2 - b).abs() > 1e-13 {
        return Err(Error::Domain("Nyström route needs Φ conditions at the ends of the collocation interval".into()));
    }
    let d = chebyshev_diff(a, b, n);
    let d2 = &d * &d;
    let mut op = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let r = cheb[i];
        let pot = p.lambda_cap - m.kappa * m.h(r);
        for c in 0..n {
            op[(i, c)] = r * r * d2[(i, c)] + 2.0 * r * d[(i, c)];
        }
        op[(i, i)] -= pot;
    }
    op -= greens.nystrom_rows(cheb)?;
    let mut rhs = DVector::<f64>::from_fn(n, |i, _| c_vector(m, p, cheb[i]).dot(&y0[i]) * p.mu);
    for (row, (cov, val)) in [(0, (phi_bc.row1, phi_bc.value1)), (n - 1, (phi_bc.row2, phi_bc.value2))] {
        for c in 0..n {
            op[(row, c)] = cov[1] * d[(row, c)];
        }
        op[(row, row)] += cov[0];
        rhs[row] = val;
    }
    // Equilibrate rows before factoring.
    for i in 0..n {
        let s = op.row(i).amax();
        if s > 0.0 {
            op.row_mut(i).scale_mut(1.0 / s);
            rhs[i] /= s;
        }
    }
    let lu = op.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        lo = lo.min(u[(i, i)].abs());
        hi = hi.max(u[(i, i)].abs());
    }
    let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(pivot_ratio > NYSTROM_PIVOT_FLOOR) {
        return Err(Error::SingularOperator { ratio: pivot_ratio });
    }
    let phi = lu.solve(&rhs).ok_or(Error::SingularOperator { ratio: 0.0 })?;
    let res = (&op * &phi - &rhs).amax();
    let norm_a = (0..n).map(|i| op.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let residual = res / (norm_a * phi.amax() + rhs.amax()).max(f64::MIN_POSITIVE);
    Ok(NystromSolution { nodes: cheb.to_vec(), phi: phi.iter().copied().collect(), residual, pivot_ratio })
}

// ------------------------------------------------------------------ moduli

/// 𝔷 = ‖Φ‖/‖C·Y₀‖ in L² on the grid.
pub fn weak_modulus(phi: &[f64], cy0: &[f64], grid: &Grid) -> Result<f64> {
    let num = crate::propagate::l2_norm(phi, grid);
    let den = crate::propagate::l2_norm(cy0, grid);
    if !(den > 1e-300) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(num / den)
}

/// 𝒵 = ‖C·(Y − Y₀)‖∞ / ‖C·Y₀‖∞ from sampled values.
pub fn strong_modulus(cy: &[f64], cy0: &[f64]) -> Result<f64> {
    let den = crate::propagate::sup_norm(cy0);
    if !(den > 1e-300) {
        return Err(Error::DegenerateDenominator);
    }
    let num = cy.iter().zip(cy0).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(num / den)
}

/// (‖η − η₀‖∞, ‖u − u₀‖∞), both relative to ‖η₀‖∞.
pub fn component_gaps(y: &[Vector2<f64>], y0: &[Vector2<f64>]) -> Result<(f64, f64)> {
    let eta0 = y0.iter().fold(0.0f64, |acc, v| acc.max(v[1].abs()));
    if !(eta0 > 1e-300) {
        return Err(Error::DegenerateDenominator);
    }
    let (mut ge, mut gu) = (0.0f64, 0.0f64);
    for (a, b) in y.iter().zip(y0) {
        ge = ge.max((a[1] - b[1]).abs());
        gu = gu.max((a[0] - b[0]).abs());
    }
    Ok((ge / eta0, gu / eta0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Twice the standard error of the slope.
    pub half_width: f64,
}

impl RateFit {
    pub fn within(&self, target: f64, band: f64) -> bool {
        (self.slope - target).abs() <= band
    }
}

/// Least squares of log(value) against log(parameter).
pub fn rate_fit(params: &[f64], values: &[f64]) -> Result<RateFit> {
    if params.len() != values.len() || params.len() < 4 {
        return Err(Error::Domain(format!("rate fit needs ≥ 4 matching points, got {} and {}", params.len(), values.len())));
    }
    if params.iter().chain(values).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("rate fit needs positive parameters and values".into()));
    }
    let x: Vec<f64> = params.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, intercept, half_width: 2.0 * se })
}

/// F(x) = (1−x)(1+3x+x²)/(1+x)².
pub fn sharp_f(x: f64) -> f64 {
    (1.0 - x) * (1.0 + 3.0 * x + x * x) / ((1.0 + x) * (1.0 + x))
}

// ------------------------------------------------------------- γ estimate

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaEstimate {
    /// Greatest eigenvalue of (r²Φ′)′ + κhΦ under the Φ conditions.
    pub nu0: f64,
    /// Greatest eigenvalue of (r²ρy′)′ with weight ρ under the η conditions.
    pub mu0: f64,
    /// Bound σ²κ‖h‖∞²/ρ₋/(ζ² − |μ₀|) on ‖𝓕‖.
    pub f_bound: f64,
    /// γ = ζ² − |ν₀| − ‖𝓕‖ bound.
    pub gamma: f64,
}

pub fn gamma_estimate(m: &StellarModel, p: &ModeParams, phi_bc: &Slbc, eta_bc: &Slbc) -> Result<GammaEstimate> {
    let (m1, m2, m3) = (m.clone(), m.clone(), m.clone());
    let l0 = SlOperator {
        a: m.a,
        b: m.b,
        p: std::sync::Arc::new(|r| r * r),
        q: std::sync::Arc::new(move |r| m1.kappa * m1.h(r)),
        w: std::sync::Arc::new(|_| 1.0),
    };
    let j0 = SlOperator {
        a: m.a,
        b: m.b,
        p: std::sync::Arc::new(move |r| r * r * m2.rho(r)),
        q: std::sync::Arc::new(|_| 0.0),
        w: std::sync::Arc::new(move |r| m3.rho(r)),
    };
    let nu0 = -sl_eigenvalues(&l0, phi_bc, 0..1)?[0].value;
    let mu0 = -sl_eigenvalues(&j0, eta_bc, 0..1)?[0].value;
    let (mut hmax, mut rho_min) = (0.0f64, f64::INFINITY);
    for i in 0..=256 {
        let r = m.a + (m.b - m.a) * i as f64 / 256.0;
        hmax = hmax.max(m.h(r).abs());
        rho_min = rho_min.min(m.rho(r));
    }
    let z2 = p.zeta * p.zeta;
    let f_bound = p.sigma * p.sigma * m.kappa * hmax * hmax / rho_min / (z2 - mu0.abs());
    Ok(GammaEstimate { nu0, mu0, f_bound, gamma: z2 - nu0.abs() - f_bound })
}

// ----------------------------------------------------------- coupled sweep

/// One parameter point of a coupled solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuliRow {
    pub parameter: f64,
    pub weak: f64,
    pub strong: f64,
    pub eta_gap: f64,
    pub u_gap: f64,
    /// ‖Φ_direct − Φ_Nyström‖∞/‖Φ‖∞ at the collocation nodes.
    pub route_gap: Option<f64>,
    /// max‖Y − Y_p − Y₀‖/max‖Y₀‖ at the panel breaks.
    pub ys_defect: Option<f64>,
    pub oracle: Option<f64>,
    pub phi_norm: f64,
    pub cy0_norm: f64,
    pub eta0_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointOptions {
    /// Run the Nyström route and the decomposition check.
    pub cross_check: bool,
    pub nystrom_nodes: usize,
    pub panel_order: usize,
}

impl Default for PointOptions {
    fn default() -> Self {
        PointOptions { cross_check: false, nystrom_nodes: NYSTROM_NODES, panel_order: 8 }
    }
}

/// Solves the coupled problem and Y₀ with the same Π data, and evaluates the
/// moduli on [a, norm_end].
pub fn coupled_point(
    m: &StellarModel,
    p: &ModeParams,
    bc: &CoupledBc,
    norm_end: f64,
    opts: &OdeOptions,
    popts: &PointOptions,
) -> Result<ModuliRow> {
    let (a, b) = (bc.pi.r1.min(bc.phi.r1), bc.pi.r2.max(bc.phi.r2));
    let width = 0.5 / rate_scale(m, p).max(p.lambda_cap.sqrt() / a);
    let cheb = if popts.cross_check { chebyshev_nodes(a, b, popts.nystrom_nodes) } else { vec![a, b] };
    let must = merge_points(&cheb, &[bc.pi.r1, bc.pi.r2, bc.phi.r1, bc.phi.r2, norm_end]);
    let grid = PanelGrid::refined(&must, width, popts.panel_order);
    let x = solve_coupled_direct(m, p, bc, &grid.nodes, opts)?;
    let y0 = residual_solution(m, p, &bc.pi, &grid.nodes, opts)?;

    let inside: Vec<usize> = (0..grid.nodes.len()).filter(|&i| grid.nodes[i] <= norm_end + 1e-13).collect();
    let sub = Grid {
        nodes: inside.iter().map(|&i| grid.nodes[i]).collect(),
        weights: inside
            .iter()
            .map(|&i| if grid.nodes[i] <= norm_end + 1e-13 { grid.weights[i] } else { 0.0 })
            .collect(),
    };
    let phi: Vec<f64> = inside.iter().map(|&i| x.states[i][2]).collect();
    let ys: Vec<Vector2<f64>> = inside.iter().map(|&i| Vector2::new(x.states[i][0], x.states[i][1])).collect();
    let y0s: Vec<Vector2<f64>> = inside.iter().map(|&i| y0.states[i]).collect();
    let cy: Vec<f64> = inside.iter().zip(&ys).map(|(&i, y)| c_vector(m, p, grid.nodes[i]).dot(y)).collect();
    let cy0: Vec<f64> = inside.iter().zip(&y0s).map(|(&i, y)| c_vector(m, p, grid.nodes[i]).dot(y)).collect();
    let eta0: Vec<f64> = y0s.iter().map(|v| v[1]).collect();
    let weak = weak_modulus(&phi, &cy0, &sub)?;
    let strong = strong_modulus(&cy, &cy0)?;
    let (eta_gap, u_gap) = component_gaps(&ys, &y0s)?;
    let mut row = ModuliRow {
        parameter: p.zeta,
        weak,
        strong,
        eta_gap,
        u_gap,
        route_gap: None,
        ys_defect: None,
        oracle: None,
        phi_norm: crate::propagate::l2_norm(&phi, &sub),
        cy0_norm: crate::propagate::l2_norm(&cy0, &sub),
        eta0_norm: crate::propagate::l2_norm(&eta0, &sub),
    };
    if popts.cross_check {
        let g = greens_matrix(m, p, bc.pi.j, bc.pi.k, grid.clone(), opts)?;
        let y0_cheb: Vec<Vector2<f64>> =
            cheb.iter().map(|&r| y0.at(r).ok_or_else(|| Error::Domain(format!("missing node {r}")))).collect::<Result<_>>()?;
        let nys = solve_coupled_nystrom(m, p, &bc.phi, &g, &cheb, &y0_cheb)?;
        let phi_direct: Vec<f64> = cheb.iter().map(|&r| x.at(r).map(|s| s[2]).unwrap_or(f64::NAN)).collect();
        let scale = phi_direct.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let gap = phi_direct.iter().zip(&nys.phi).fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs()));
        row.route_gap = Some(gap / scale);
        let phi_all: Vec<f64> = x.states.iter().map(|s| s[2]).collect();
        let yp = g.particular(&phi_all);
        let y0max = y0.states.iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
        let mut worst = 0.0f64;
        for (r, ypv) in &yp {
            let i = node_index(&grid.nodes, *r).expect("break is a node");
            let y = Vector2::new(x.states[i][0], x.states[i][1]);
            worst = worst.max((y - ypv - y0.states[i]).norm());
        }
        row.ys_defect = Some(worst / y0max);
    }
    Ok(row)
}

/// Indices (1, k) for Π(σ)-type agreement on a trigonometric basis: k = 1
/// when |sin σL| ≥ |cos σL| (so |Δ| ≥ 1/√2), else k = 2.
pub fn pi_sigma_indices(j: usize, omega_length: f64) -> (usize, usize) {
    let (s, c) = omega_length.sin_cos();
    let same = s.abs() >= c.abs();
    (j, if same { j } else { 3 - j })
}

// ----------------------------------------------------------------- reports

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuliReport {
    pub schema: String,
    pub model: String,
    pub regime: Regime,
    pub parameter_name: String,
    pub rows: Vec<ModuliRow>,
    pub slopes: BTreeMap<String, RateFit>,
    pub oracle_label: Option<String>,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "parameter",
    "weak",
    "strong",
    "eta_gap",
    "u_gap",
    "route_gap",
    "ys_defect",
    "oracle",
    "phi_norm",
    "cy0_norm",
    "eta0_norm",
    "weak_times_param_sq",
];

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl ModuliReport {
    pub fn new(model: &str, regime: Regime, parameter_name: &str, mut rows: Vec<ModuliRow>) -> Self {
        rows.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
        let mut slopes = BTreeMap::new();
        let params: Vec<f64> = rows.iter().map(|r| r.parameter).collect();
        let series: [(&str, Vec<f64>); 4] = [
            ("weak", rows.iter().map(|r| r.weak).collect()),
            ("strong", rows.iter().map(|r| r.strong).collect()),
            ("eta_gap", rows.iter().map(|r| r.eta_gap).collect()),
            ("u_gap", rows.iter().map(|r| r.u_gap).collect()),
        ];
        for (name, vals) in series {
            if let Ok(fit) = rate_fit(&params, &vals) {
                slopes.insert(name.to_string(), fit);
            }
        }
        ModuliReport {
            schema: "moduli-report/1".into(),
            model: model.into(),
            regime,
            parameter_name: parameter_name.into(),
            rows,
            slopes,
            oracle_label: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        self.csv_records(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.csv_records(&mut w)?;
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    fn csv_records<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(CSV_COLUMNS)?;
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                fmt17(r.parameter),
                fmt17(r.weak),
                fmt17(r.strong),
                fmt17(r.eta_gap),
                fmt17(r.u_gap),
                opt(r.route_gap),
                opt(r.ys_defect),
                opt(r.oracle),
                fmt17(r.phi_norm),
                fmt17(r.cy0_norm),
                fmt17(r.eta0_norm),
                fmt17(r.weak * r.parameter * r.parameter),
            ])?;
        }
        Ok(())
    }
}

// ------------------------------------------------------ closed-form checks

/// Which entry of (Φ(a), Φ(b), Φ′(a), Φ′(b)) carries the datum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumSlot {
    PhiA,
    PhiB,
    DphiA,
    DphiB,
}

impl DatumSlot {
    fn index(self) -> usize {
        match self {
            DatumSlot::PhiA => 0,
            DatumSlot::PhiB => 1,
            DatumSlot::DphiA => 2,
            DatumSlot::DphiB => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpConstruction {
    pub parameter: f64,
    pub phi_norm: f64,
    pub cy_norm: f64,
    /// ‖Φ‖/‖C·Y‖.
    pub zeta0: f64,
    pub w_det: ScaledDet,
    /// Closed-form comparison value for this regime (see [`sharp_oracle`]).
    pub oracle: f64,
    pub oracle_label: String,
}

/// Leading-order prediction and its label:
/// adiabatic 1/(2√2ζ²); exponential 𝔷₀ = √F(ℋ(a))/ζ²; oscillatory the bound
/// max σ²/N²; high frequency none (the product 𝔷σ² is reported).
pub fn sharp_oracle(m: &StellarModel, p: &ModeParams) -> Result<(f64, String)> {
    Ok(match p.regime {
        Regime::HighDegreeAdiabatic => (1.0 / (2.0 * 2f64.sqrt() * p.zeta * p.zeta), "1/(2*sqrt(2)*zeta^2)".into()),
        Regime::HighDegreeExp => {
            let h = curly_h(m, p, m.a)?;
            (sharp_f(h).sqrt() / (p.zeta * p.zeta), "sqrt(F(H(a)))/zeta^2".into())
        }
        Regime::HighDegreeOsc => {
            let s2 = p.sigma * p.sigma;
            let worst = (0..=64)
                .map(|i| s2 / m.nsq(m.a + (m.b - m.a) * i as f64 / 64.0))
                .fold(0.0, f64::max);
            (worst, "max sigma^2/N^2 (upper bound)".into())
        }
        _ => (f64::NAN, "none".into()),
    })
}

/// Builds the solution with a single unit datum among the 𝔚 rows on
/// [a, end] and measures ‖Φ‖/‖C·Y‖ there.
pub fn sharp_construction(
    m: &StellarModel,
    p: &ModeParams,
    end: f64,
    slot: DatumSlot,
    opts: &OdeOptions,
) -> Result<SharpConstruction> {
    let a = m.a;
    let width = 0.5 / rate_scale(m, p).max(p.lambda_cap.sqrt() / a);
    let grid = PanelGrid::refined(&[a, end], width, 16).as_grid();
    let rows = MultiPointSpec::W { a, b: end }.rows();
    let mut conds = [Condition::<4>::component(a, 0, 0.0); 4];
    for (i, (r, idx)) in rows.iter().enumerate() {
        conds[i] = Condition::component(*r, *idx, if i == slot.index() { 1.0 } else { 0.0 });
    }
    let x = solve_full(m, p, &conds, &grid.nodes, opts)?;
    let phi: Vec<f64> = x.states.iter().map(|s| s[2]).collect();
    let cy: Vec<f64> = x
        .states
        .iter()
        .zip(&grid.nodes)
        .map(|(s, &r)| c_vector(m, p, r).dot(&Vector2::new(s[0], s[1])))
        .collect();
    let phi_norm = crate::propagate::l2_norm(&phi, &grid);
    let cy_norm = crate::propagate::l2_norm(&cy, &grid);
    if !(cy_norm > 1e-300) {
        return Err(Error::DegenerateDenominator);
    }
    let w_det = w_det_numeric(m, p, a, end, opts)?;
    let (oracle, oracle_label) = sharp_oracle(m, p)?;
    Ok(SharpConstruction { parameter: p.zeta, phi_norm, cy_norm, zeta0: phi_norm / cy_norm, w_det, oracle, oracle_label })
}

/// det 𝔚_{a,end} of the numeric fundamental matrix that is I at a.
///
/// With X(a) = I the determinant is −(the (Φ, Φ′) minor of the first two
/// columns at `end`). That minor is integrated directly through the second
/// compound system, so it stays accurate when both columns are swept onto
/// the same growing mode. `normalized` is |minor| over the norm of all six
/// minors.
pub fn w_det_numeric(m: &StellarModel, p: &ModeParams, a: f64, end: f64, opts: &OdeOptions) -> Result<ScaledDet> {
    let f = |r: f64| second_compound(&full_matrix(m, p, r));
    let mut u0 = nalgebra::SVector::<f64, 6>::zeros();
    u0[0] = 1.0;
    let sol = solve_ivp(&f, &[a, end], u0, opts)?;
    let dir = sol.dirs[1].column(0);
    let minor = dir[5];
    Ok(ScaledDet {
        sign: -minor.signum(),
        log_abs: minor.abs().ln() + sol.logmag[1][0],
        normalized: minor.abs() / dir.norm(),
    })
}

/// Determinant of the given rows of the numeric fundamental matrix (I at a).
pub fn multipoint_numeric(m: &StellarModel, p: &ModeParams, spec: &MultiPointSpec, opts: &OdeOptions) -> Result<ScaledDet> {
    let pts: Vec<f64> = spec.rows().iter().map(|(r, _)| *r).collect();
    let nodes = merge_points(&[m.a], &pts);
    let f = |r: f64| full_matrix(m, p, r);
    let sol = integrate_fundamental(&f, &nodes, nalgebra::Matrix4::identity(), opts)?;
    det_full_multipoint(
        |r| {
            let i = sol.index_of(r).ok_or_else(|| Error::Domain(format!("point {r} not integrated")))?;
            Ok(ScaledMatrix { dir: sol.dirs[i], logmag: sol.logmag[i] })
        },
        spec,
    )
}

// --------------------------------------------------------- negative result

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CacorRow {
    pub sigma: f64,
    pub ratio: f64,
    pub k: usize,
}

/// ‖Φ‖/‖η₀‖ on the fixed interval for the family η(a) = d, Φ(a) = 1, Φ(b) = 0
/// and a Π(σ)-chosen condition at b, with d = σ⁻² (LW scale) or 1.
pub fn cacor_demo(
    m: &StellarModel,
    ell: f64,
    sigmas: &[f64],
    lw_normalized: bool,
    switches: (f64, f64),
    opts: &OdeOptions,
) -> Result<Vec<CacorRow>> {
    let length = integrate(|r| 1.0 / m.c(r), m.a, m.b);
    let mut out = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let p = ModeParams::high_frequency(ell, sigma).with_switches(switches.0, switches.1);
        let (_, k) = pi_sigma_indices(2, sigma * length);
        let d = if lw_normalized { 1.0 / (sigma * sigma) } else { 1.0 };
        let bc = CoupledBc { pi: PiBc::new(2, k, d, 0.0, m.a, m.b)?, phi: PhiBc::values(m.a, 1.0, m.b, 0.0) };
        let row = coupled_point(m, &p, &bc, m.b, opts, &PointOptions::default())?;
        out.push(CacorRow { sigma, ratio: row.phi_norm / row.eta0_norm, k });
    }
    Ok(out)
}

/// Convenience: fundamental-matrix eigenvalue check of 𝓛 Dirichlet spectrum
/// sizes; returns `n` nodes on [a,b] as used by the Nyström route.
pub fn collocation_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    chebyshev_nodes(a, b, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{adia_exp, nonadia_exp};

    #[test]
    fn rate_fit_exact_power() {
        let z = [20.0, 40.0, 80.0, 160.0];
        let v: Vec<f64> = z.iter().map(|x: &f64| 3.0 * x.powi(-2)).collect();
        let f = rate_fit(&z, &v).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        let c = rate_fit(&z, &[1.0; 4]).unwrap();
        assert!(c.slope.abs() < 1e-12);
        assert!(rate_fit(&z[..3], &v[..3]).is_err());
    }

    #[test]
    fn sharp_f_values() {
        assert_eq!(sharp_f(0.0), 1.0);
        assert_eq!(sharp_f(1.0), 0.0);
        assert!((sharp_f(0.5) - 0.5 * 2.75 / 2.25).abs() < 1e-15);
    }

    #[test]
    fn moduli_trivia() {
        let g = Grid::gauss(1.0, 2.0, 4, 8);
        let zero = vec![0.0; g.nodes.len()];
        let one = vec![1.0; g.nodes.len()];
        assert_eq!(weak_modulus(&zero, &one, &g).unwrap(), 0.0);
        assert!(matches!(weak_modulus(&one, &zero, &g), Err(Error::DegenerateDenominator)));
        let phi: Vec<f64> = g.nodes.iter().map(|r| r.sin()).collect();
        let cy: Vec<f64> = g.nodes.iter().map(|r| r.exp()).collect();
        let s = |v: &[f64], c: f64| v.iter().map(|x| x * c).collect::<Vec<_>>();
        let w1 = weak_modulus(&phi, &cy, &g).unwrap();
        let w2 = weak_modulus(&s(&phi, 7.0), &s(&cy, 7.0), &g).unwrap();
        assert!((w1 - w2).abs() < 1e-14 * w1);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let m = adia_exp();
        let p = ModeParams::high_degree(20.0, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let pi = PiBc::new(1, 2, 0.0, 0.0, 1.0, 2.0).unwrap();
        let nodes: Vec<f64> = (0..=10).map(|i| 1.0 + i as f64 / 10.0).collect();
        let y0 = residual_solution(&m, &p, &pi, &nodes, &OdeOptions::default()).unwrap();
        assert!(y0.states.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn adiabatic_residual_relation() {
        // u₀ = r²η₀′ when N² = 0.
        let m = adia_exp();
        let p = ModeParams::high_degree(20.0, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let pi = PiBc::new(1, 2, 1.0, 1.0, 1.0, 2.0).unwrap();
        let h = 1e-3;
        let nodes: Vec<f64> = (0..=1000).map(|i| 1.0 + i as f64 * h).collect();
        let y0 = residual_solution(&m, &p, &pi, &nodes, &OdeOptions::with_tol(1e-12)).unwrap();
        let sup = y0.states.iter().map(|s| s[0].abs()).fold(0.0, f64::max);
        for i in 2..nodes.len() - 2 {
            let f = |k: usize| y0.states[k][1];
            let d = nodes[i] * nodes[i] * (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * h);
            assert!((d - y0.states[i][0]).abs() < 1e-8 * sup, "r={}", nodes[i]);
        }
    }

    #[test]
    fn decoupled_phi_solves_l() {
        let m = nonadia_exp();
        let p = ModeParams::high_degree(10.0, 2.0, Regime::HighDegreeExp, 2.0).with_switches(0.0, 0.0);
        let bc = CoupledBc {
            pi: PiBc::new(1, 2, 1.0, 1.0, 1.0, 2.0).unwrap(),
            phi: PhiBc::values(1.0, 1.0, 2.0, 0.0),
        };
        let row = coupled_point(&m, &p, &bc, 2.0, &OdeOptions::default(), &PointOptions::default()).unwrap();
        assert!(row.eta_gap < 1e-10 && row.u_gap < 1e-10);
    }

    #[test]
    fn nystrom_linear_and_homogeneous() {
        let m = adia_exp();
        let p = ModeParams::high_degree(20.0, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let cheb = chebyshev_nodes(1.0, 2.0, 65);
        let grid = PanelGrid::refined(&cheb, 0.02, 8);
        let g = greens_matrix(&m, &p, 1, 2, grid, &OdeOptions::default()).unwrap();
        let bc = PhiBc::slbc(&Slbc::dirichlet(), 1.0, 2.0);
        let zero = vec![Vector2::zeros(); cheb.len()];
        let s0 = solve_coupled_nystrom(&m, &p, &bc, &g, &cheb, &zero).unwrap();
        assert!(s0.phi.iter().all(|v| *v == 0.0));
        let y: Vec<Vector2<f64>> = cheb.iter().map(|r| Vector2::new(r.sin(), r.cos())).collect();
        let y2: Vec<Vector2<f64>> = y.iter().map(|v| v * 2.0).collect();
        let s1 = solve_coupled_nystrom(&m, &p, &bc, &g, &cheb, &y).unwrap();
        let s2 = solve_coupled_nystrom(&m, &p, &bc, &g, &cheb, &y2).unwrap();
        let sc = s1.phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in s1.phi.iter().zip(&s2.phi) {
            assert!((2.0 * a - b).abs() < 1e-10 * sc);
        }
        assert!(s1.residual < 1e-8);
    }

    #[test]
    fn w_det_compound_matches_direct_minor() {
        let m = adia_exp();
        let p = ModeParams::high_degree(10.0, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let opts = OdeOptions::with_tol(1e-12);
        let a = w_det_numeric(&m, &p, 1.0, 1.3, &opts).unwrap();
        let b = multipoint_numeric(&m, &p, &MultiPointSpec::W { a: 1.0, b: 1.3 }, &opts).unwrap();
        assert_eq!(a.sign, b.sign);
        assert!((a.log_abs - b.log_abs).abs() < 1e-7, "{} vs {}", a.log_abs, b.log_abs);
    }
}
