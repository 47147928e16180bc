//! Boundary conditions, multiple shooting, multi-point determinants and
//! Sturm–Liouville eigenvalues by Prüfer shooting.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::asymptotics::ScaledMatrix;
use crate::model::StellarModel;
use crate::propagate::{integrate, piecewise_fundamental, OdeOptions, Piecewise, DEFAULT_GROWTH_CAP};
use crate::{Error, Result};

/// Normalized determinants below this are treated as singular.
pub const DET_FLOOR: f64 = 1e-10;
const PIVOT_FLOOR: f64 = 1e-10;

/// One scalar condition `row · X(r) = value`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition<const N: usize> {
    pub r: f64,
    pub row: SVector<f64, N>,
    pub value: f64,
}

impl<const N: usize> Condition<N> {
    /// Component `idx` (0-based) of X at r equals `value`.
    pub fn component(r: f64, idx: usize, value: f64) -> Self {
        let mut row = SVector::zeros();
        row[idx] = 1.0;
        Condition { r, row, value }
    }
}

/// Multiple-shooting solver for linear BVPs: segment transfer matrices with
/// bounded growth, assembled into one block-bidiagonal system.
#[derive(Clone, Debug)]
pub struct Chain<const N: usize> {
    pub pw: Piecewise<N>,
}

#[derive(Clone, Debug)]
pub struct ChainSolution<const N: usize> {
    pub nodes: Vec<f64>,
    pub states: Vec<SVector<f64, N>>,
    /// min/max |pivot| of the assembled LU.
    pub pivot_ratio: f64,
    /// Largest relative violation of the imposed conditions.
    pub condition_residual: f64,
}

impl<const N: usize> ChainSolution<N> {
    pub fn at(&self, r: f64) -> Option<SVector<f64, N>> {
        node_index(&self.nodes, r).map(|i| self.states[i])
    }
    pub fn component(&self, idx: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[idx]).collect()
    }
}

pub fn node_index(nodes: &[f64], r: f64) -> Option<usize> {
    let tol = 1e-12 * r.abs().max(1.0);
    let k = nodes.partition_point(|&x| x < r - tol);
    (k < nodes.len() && (nodes[k] - r).abs() <= tol).then_some(k)
}

impl<const N: usize> Chain<N> {
    /// `nodes` must be increasing and contain every point at which conditions
    /// or output values will be requested.
    pub fn new<F>(f: &F, nodes: &[f64], opts: &OdeOptions) -> Result<Self>
    where
        F: Fn(f64) -> SMatrix<f64, N, N>,
    {
        Ok(Chain { pw: piecewise_fundamental(f, nodes, opts, DEFAULT_GROWTH_CAP)? })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.pw.nodes
    }

    pub fn solve(&self, conds: &[Condition<N>]) -> Result<ChainSolution<N>> {
        self.solve_with_floor(conds, PIVOT_FLOOR)
    }

    /// As [`Chain::solve`] with a caller-chosen pivot-ratio floor. A floor of 0
    /// only rejects exactly singular or non-finite systems; callers doing so
    /// should check `condition_residual`.
    pub fn solve_with_floor(&self, conds: &[Condition<N>], floor: f64) -> Result<ChainSolution<N>> {
        if conds.len() != N {
            return Err(Error::Domain(format!("need {N} conditions, got {}", conds.len())));
        }
        let pw = &self.pw;
        let m = pw.segments();
        let n = N * (m + 1);
        let mut located = Vec::with_capacity(N);
        for c in conds {
            let i = node_index(&pw.nodes, c.r)
                .ok_or_else(|| Error::Domain(format!("condition point {} is not a chain node", c.r)))?;
            located.push((pw.node_segment[i], i, c));
        }
        located.sort_by_key(|(s, i, _)| (*s, *i));
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        let mut row = 0;
        let mut next = 0;
        for k in 0..m {
            while next < located.len() && located[next].0 == k {
                let (s, i, c) = located[next];
                let coeff = c.row.transpose() * pw.node_local[i];
                let scale = coeff.amax().max(f64::MIN_POSITIVE);
                for q in 0..N {
                    a[(row, N * s + q)] = coeff[q] / scale;
                }
                rhs[row] = c.value / scale;
                row += 1;
                next += 1;
            }
            let t = &pw.transfer[k];
            for p in 0..N {
                let scale = t.row(p).amax().max(1.0);
                for q in 0..N {
                    a[(row, N * k + q)] = t[(p, q)] / scale;
                }
                a[(row, N * (k + 1) + p)] = -1.0 / scale;
                row += 1;
            }
        }
        debug_assert_eq!(row, n);
        // Column equilibration so the pivot ratio does not mix up the scale
        // of the state components with near-singularity.
        let mut col_scale = vec![1.0; n];
        for q in 0..n {
            let c = a.column(q).amax();
            if c > 0.0 {
                col_scale[q] = 1.0 / c;
                a.column_mut(q).scale_mut(1.0 / c);
            }
        }
        let lu = a.lu();
        let u = lu.u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = u[(i, i)].abs();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if !(pivot_ratio > floor) {
            return Err(Error::SingularBvp { det: pivot_ratio });
        }
        let mut x = lu.solve(&rhs).ok_or(Error::SingularBvp { det: 0.0 })?;
        for q in 0..n {
            x[q] *= col_scale[q];
        }
        let block = |k: usize| SVector::<f64, N>::from_iterator((0..N).map(|q| x[N * k + q]));
        let states: Vec<SVector<f64, N>> =
            (0..pw.nodes.len()).map(|i| pw.node_local[i] * block(pw.node_segment[i])).collect();
        let mut condition_residual: f64 = 0.0;
        for (_, i, c) in &located {
            let v = c.row.dot(&states[*i]);
            let denom = c.value.abs() + c.row.norm() * states[*i].norm();
            if denom > 0.0 {
                condition_residual = condition_residual.max((v - c.value).abs() / denom);
            }
        }
        Ok(ChainSolution { nodes: pw.nodes.clone(), states, pivot_ratio, condition_residual })
    }
}

// ------------------------------------------------------------- conditions

/// Self-adjoint separated conditions on w:
/// −cos θ₁ w(a) + p(a) sin θ₁ w′(a) = 0, and the same with θ₂ at b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slbc {
    pub theta1: f64,
    pub theta2: f64,
}

impl Slbc {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !((0.0..PI).contains(&theta1) && theta2 > 0.0 && theta2 <= PI) {
            return Err(Error::Domain(format!("need 0 ≤ θ₁ < π and 0 < θ₂ ≤ π, got ({theta1}, {theta2})")));
        }
        Ok(Slbc { theta1, theta2 })
    }
    pub fn dirichlet() -> Self {
        Slbc { theta1: 0.0, theta2: PI }
    }
    /// Covectors on (w, w′) at the two ends for leading coefficient p.
    pub fn rows(&self, pa: f64, pb: f64) -> (Vector2<f64>, Vector2<f64>) {
        (
            Vector2::new(-self.theta1.cos(), pa * self.theta1.sin()),
            Vector2::new(-self.theta2.cos(), pb * self.theta2.sin()),
        )
    }
}

/// E_j·Y(r1) = A, E_k·Y(r2) = B (indices 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiBc {
    pub j: usize,
    pub k: usize,
    pub a_value: f64,
    pub b_value: f64,
    pub r1: f64,
    pub r2: f64,
}

impl PiBc {
    pub fn new(j: usize, k: usize, a_value: f64, b_value: f64, r1: f64, r2: f64) -> Result<Self> {
        if !(1..=2).contains(&j) || !(1..=2).contains(&k) {
            return Err(Error::Domain(format!("Π indices must be 1 or 2, got ({j},{k})")));
        }
        Ok(PiBc { j, k, a_value, b_value, r1, r2 })
    }
    pub fn homogeneous(&self) -> Self {
        PiBc { a_value: 0.0, b_value: 0.0, ..*self }
    }
    pub fn conditions(&self) -> [Condition<2>; 2] {
        [
            Condition::component(self.r1, self.j - 1, self.a_value),
            Condition::component(self.r2, self.k - 1, self.b_value),
        ]
    }
}

/// 𝒲_{j,k}: det [u₁(r_j) u₂(r_j); η₁(r_k) η₂(r_k)] with r₁ = a, r₂ = b, in
/// scaled form. `y1`, `y2` hold the basis at a and b.
pub fn residual_bvp_det(at_a: &ScaledMatrix<2>, at_b: &ScaledMatrix<2>, j: usize, k: usize) -> (f64, f64) {
    let pick = |idx: usize| if idx == 1 { at_a } else { at_b };
    rows_det([(pick(j), 0), (pick(k), 1)])
}

/// det [E_j·Y(a); E_k·Y(b)], the determinant that governs Π_{j,k}.
pub fn pi_det(at_a: &ScaledMatrix<2>, at_b: &ScaledMatrix<2>, j: usize, k: usize) -> (f64, f64) {
    rows_det([(at_a, j - 1), (at_b, k - 1)])
}

/// Result of a scaled determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledDet {
    pub sign: f64,
    pub log_abs: f64,
    /// |det| after per-column scaling and unit-row normalization (in [0,1]).
    pub normalized: f64,
}

fn rows_det_full<const N: usize>(rows: [(&ScaledMatrix<N>, usize); N]) -> ScaledDet {
    let mut shift = SVector::<f64, N>::repeat(f64::NEG_INFINITY);
    for (s, _) in rows.iter() {
        for j in 0..N {
            shift[j] = shift[j].max(s.logmag[j]);
        }
    }
    let mut m = SMatrix::<f64, N, N>::zeros();
    for (i, (s, idx)) in rows.iter().enumerate() {
        for j in 0..N {
            m[(i, j)] = s.dir[(*idx, j)] * (s.logmag[j] - shift[j]).exp();
        }
    }
    let d = DMatrix::from_column_slice(N, N, m.as_slice()).determinant();
    let mut prod = 1.0;
    for i in 0..N {
        prod *= m.row(i).norm();
    }
    let normalized = if prod > 0.0 { (d / prod).abs() } else { 0.0 };
    if d == 0.0 {
        return ScaledDet { sign: 0.0, log_abs: f64::NEG_INFINITY, normalized };
    }
    ScaledDet { sign: d.signum(), log_abs: d.abs().ln() + shift.sum(), normalized }
}

fn rows_det<const N: usize>(rows: [(&ScaledMatrix<N>, usize); N]) -> (f64, f64) {
    let d = rows_det_full(rows);
    (d.sign, d.log_abs)
}

/// Points and rows for the 4×4 multi-point determinants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MultiPointSpec {
    /// Rows (Φ(a), Φ(b), Φ′(a), Φ′(b)).
    W { a: f64, b: f64 },
    /// Rows (u(r₁), η(r₂), Φ(r₃), Φ′(r₄)).
    V { r: [f64; 4] },
}

impl MultiPointSpec {
    pub fn rows(&self) -> [(f64, usize); 4] {
        match *self {
            MultiPointSpec::W { a, b } => [(a, 2), (b, 2), (a, 3), (b, 3)],
            MultiPointSpec::V { r } => [(r[0], 0), (r[1], 1), (r[2], 2), (r[3], 3)],
        }
    }
}

/// Determinant of the spec's rows of a 4×4 fundamental matrix (numeric or
/// asymptotic), evaluated through `eval`.
pub fn det_full_multipoint(eval: impl Fn(f64) -> Result<ScaledMatrix<4>>, spec: &MultiPointSpec) -> Result<ScaledDet> {
    let rows = spec.rows();
    let mats: Vec<ScaledMatrix<4>> = rows.iter().map(|(r, _)| eval(*r)).collect::<Result<_>>()?;
    Ok(rows_det_full([(&mats[0], rows[0].1), (&mats[1], rows[1].1), (&mats[2], rows[2].1), (&mats[3], rows[3].1)]))
}

/// q(ε) = r^{α₁}(r+ε)^{α₂} − (r+ε)^{α₁}r^{α₂}.
pub fn proddiff_q(r: f64, alpha1: f64, alpha2: f64, eps: f64) -> f64 {
    r.powf(alpha1) * (r + eps).powf(alpha2) - (r + eps).powf(alpha1) * r.powf(alpha2)
}

// ---------------------------------------------------------- eigenvalues

/// (p y′)′ + q y = −λ w y on [a, b].
#[derive(Clone)]
pub struct SlOperator {
    pub a: f64,
    pub b: f64,
    pub p: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub q: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub w: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    /// 𝒥₀[y] = (r²ρy′)′ with weight h.
    J,
    /// 𝓛[y] = (r²y′)′ − (Λ − κh)y with weight 1.
    L,
}

pub fn sl_operator(m: &StellarModel, tag: OperatorTag, lambda_cap: f64) -> SlOperator {
    let (m1, m2, m3) = (m.clone(), m.clone(), m.clone());
    match tag {
        OperatorTag::J => SlOperator {
            a: m.a,
            b: m.b,
            p: Arc::new(move |r| r * r * m1.rho(r)),
            q: Arc::new(|_| 0.0),
            w: Arc::new(move |r| m2.h(r)),
        },
        OperatorTag::L => SlOperator {
            a: m.a,
            b: m.b,
            p: Arc::new(|r| r * r),
            q: Arc::new(move |r| -(lambda_cap - m3.kappa * m3.h(r))),
            w: Arc::new(|_| 1.0),
        },
    }
}

impl SlOperator {
    /// ∫√(w/p), the length that sets eigenvalue spacing.
    pub fn length(&self) -> f64 {
        integrate(|r| ((self.w)(r) / (self.p)(r)).sqrt(), self.a, self.b)
    }

    /// Prüfer angle ψ(b) for y = R sin ψ, p y′ = R cos ψ with ψ(a) = θ₁.
    pub fn prufer_end(&self, lambda: f64, theta1: f64, tol: f64) -> Result<f64> {
        let rhs = |r: f64, psi: f64| {
            let (s, c) = psi.sin_cos();
            c * c / (self.p)(r) + (lambda * (self.w)(r) + (self.q)(r)) * s * s
        };
        rk45_scalar(rhs, self.a, self.b, theta1, tol)
    }
}

/// Dormand–Prince on a scalar nonlinear ODE; returns y(b).
fn rk45_scalar(f: impl Fn(f64, f64) -> f64, a: f64, b: f64, y0: f64, tol: f64) -> Result<f64> {
    let (mut r, mut y) = (a, y0);
    let mut h = 1e-3 * (b - a);
    let mut k1 = f(r, y);
    let mut steps = 0usize;
    while r < b {
        if steps > 50_000_000 {
            return Err(Error::StepFailure { r, h });
        }
        let hits = r + h >= b;
        let hh = if hits { b - r } else { h };
        let k2 = f(r + hh / 5.0, y + hh * k1 / 5.0);
        let k3 = f(r + 0.3 * hh, y + hh * (3.0 * k1 + 9.0 * k2) / 40.0);
        let k4 = f(r + 0.8 * hh, y + hh * (44.0 * k1 / 45.0 - 56.0 * k2 / 15.0 + 32.0 * k3 / 9.0));
        let k5 = f(
            r + 8.0 * hh / 9.0,
            y + hh * (19372.0 * k1 / 6561.0 - 25360.0 * k2 / 2187.0 + 64448.0 * k3 / 6561.0 - 212.0 * k4 / 729.0),
        );
        let k6 = f(
            r + hh,
            y + hh
                * (9017.0 * k1 / 3168.0 - 355.0 * k2 / 33.0 + 46732.0 * k3 / 5247.0 + 49.0 * k4 / 176.0
                    - 5103.0 * k5 / 18656.0),
        );
        let y5 = y + hh * (35.0 * k1 / 384.0 + 500.0 * k3 / 1113.0 + 125.0 * k4 / 192.0 - 2187.0 * k5 / 6784.0 + 11.0 * k6 / 84.0);
        let k7 = f(r + hh, y5);
        let e = hh
            * (71.0 * k1 / 57600.0 - 71.0 * k3 / 16695.0 + 71.0 * k4 / 1920.0 - 17253.0 * k5 / 339200.0
                + 22.0 * k6 / 525.0
                - k7 / 40.0);
        let err = e.abs() / (tol * (1.0 + y.abs().max(y5.abs())));
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            r = if hits { b } else { r + hh };
            y = y5;
            k1 = k7;
            steps += 1;
            if !hits {
                h = hh * factor;
            }
        } else {
            h = hh * factor;
            if h < 1e-15 * (b - a) {
                return Err(Error::StepFailure { r, h });
            }
        }
    }
    Ok(y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    /// 0-based oscillation index; the n-th eigenvalue in 1-based counting is index n−1.
    pub index: usize,
    pub value: f64,
    /// |ψ(b; λ) − θ₂ − kπ| at the returned λ.
    pub residual: f64,
}

const PRUFER_TOL: f64 = 1e-12;

/// Eigenvalues with 0-based indices in `range`.
pub fn sl_eigenvalues(op: &SlOperator, bc: &Slbc, range: std::ops::Range<usize>) -> Result<Vec<Eigenvalue>> {
    let len = op.length();
    let (mut qmax, mut wmin): (f64, f64) = (0.0, f64::INFINITY);
    for i in 0..=64 {
        let r = op.a + (op.b - op.a) * i as f64 / 64.0;
        qmax = qmax.max(((op.q)(r) / (op.w)(r)).abs());
        wmin = wmin.min((op.w)(r));
    }
    if !(wmin > 0.0) {
        return Err(Error::Domain("weight must be positive".into()));
    }
    range
        .map(|k| {
            let target = bc.theta2 + k as f64 * PI;
            let g = |lam: f64| op.prufer_end(lam, bc.theta1, PRUFER_TOL).map(|v| v - target);
            let mut lo = -(qmax + 1.0);
            let mut glo = g(lo)?;
            let mut tries = 0;
            while glo >= 0.0 {
                lo = 2.0 * lo - 1.0;
                glo = g(lo)?;
                tries += 1;
                if tries > 60 {
                    return Err(Error::BracketFailure { index: k });
                }
            }
            let mut hi = ((k as f64 + 1.0) * PI / len).powi(2) + qmax + 1.0;
            let mut ghi = g(hi)?;
            tries = 0;
            while ghi <= 0.0 {
                hi *= 2.0;
                ghi = g(hi)?;
                tries += 1;
                if tries > 60 {
                    return Err(Error::BracketFailure { index: k });
                }
            }
            // Illinois regula falsi.
            let mut side = 0;
            let mut x = lo;
            let mut gx = glo;
            for _ in 0..200 {
                x = (lo * ghi - hi * glo) / (ghi - glo);
                gx = g(x)?;
                if gx.abs() < 1e-13 || (hi - lo) < 1e-14 * x.abs().max(1.0) {
                    break;
                }
                if gx > 0.0 {
                    hi = x;
                    ghi = gx;
                    if side == 1 {
                        glo *= 0.5;
                    }
                    side = 1;
                } else {
                    lo = x;
                    glo = gx;
                    if side == -1 {
                        ghi *= 0.5;
                    }
                    side = -1;
                }
            }
            Ok(Eigenvalue { index: k, value: x, residual: gx.abs() })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaBc {
    pub bc: Slbc,
    /// True when the generic pair was kept (σ close to a √μ_k).
    pub generic: bool,
    pub gap: f64,
    pub bound: f64,
}

/// The σ-dependent choice of conditions for 𝒥: keep the generic pair
/// (θ₁, θ₂) when σ is within π/(4L) of some √μ_k (eigenvalues for (0, θ₂)),
/// otherwise use (0, θ₂). The gap min_k |σ² − λ_k| is verified against σπ/(12L).
pub fn choose_sigma_bc(m: &StellarModel, sigma: f64, theta_pair: (f64, f64)) -> Result<SigmaBc> {
    let op = sl_operator(m, OperatorTag::J, 0.0);
    let len = op.length();
    let mixed = Slbc::new(0.0, theta_pair.1)?;
    let generic = Slbc::new(theta_pair.0, theta_pair.1)?;
    let centre = (sigma * len / PI).floor() as usize;
    let window = centre.saturating_sub(3)..centre + 4;
    let mu = sl_eigenvalues(&op, &mixed, window.clone())?;
    let near = mu.iter().any(|e| (sigma - e.value.max(0.0).sqrt()).abs() < PI / (4.0 * len));
    let (bc, eigs) = if near { (generic, sl_eigenvalues(&op, &generic, window)?) } else { (mixed, mu) };
    let gap = eigs.iter().map(|e| (sigma * sigma - e.value).abs()).fold(f64::INFINITY, f64::min);
    let bound = sigma * PI / (12.0 * len);
    if gap < bound {
        return Err(Error::GapFailure { gap, bound });
    }
    Ok(SigmaBc { bc, generic: near, gap, bound })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TildeLSpectrum {
    /// Υ(β) = 1/a − 1/β.
    pub upsilon: f64,
    pub eigenvalues: Vec<f64>,
    /// τ_β = λ_{β,1}.
    pub tau: f64,
}

/// λ_{β,j} = (jπ/Υ(β))² for j = 1..=j_max.
pub fn tilde_l_spectrum(a: f64, beta: f64, j_max: usize) -> Result<TildeLSpectrum> {
    if !(beta > a && a > 0.0) {
        return Err(Error::Domain(format!("need 0 < a < β, got a={a}, β={beta}")));
    }
    let upsilon = 1.0 / a - 1.0 / beta;
    let eigenvalues: Vec<f64> = (1..=j_max).map(|j| (j as f64 * PI / upsilon).powi(2)).collect();
    let tau = (PI / upsilon).powi(2);
    Ok(TildeLSpectrum { upsilon, eigenvalues, tau })
}

/// β_σ = a + zσ^{−α}.
pub fn beta_interval(a: f64, b: f64, z: f64, alpha: f64, sigma: f64) -> Result<f64> {
    if !(z > 0.0 && sigma > 0.0) {
        return Err(Error::Domain(format!("need z > 0 and σ > 0, got z={z}, σ={sigma}")));
    }
    let beta = a + z * sigma.powf(-alpha);
    if beta > b {
        return Err(Error::Domain(format!("β_σ = {beta} exceeds b = {b}")));
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::adia_exp;
    use nalgebra::{Matrix2, Vector2};

    fn toy() -> SlOperator {
        SlOperator { a: 0.0, b: 1.0, p: Arc::new(|_| 1.0), q: Arc::new(|_| 0.0), w: Arc::new(|_| 1.0) }
    }

    #[test]
    fn toy_dirichlet_spectrum() {
        let e = sl_eigenvalues(&toy(), &Slbc::dirichlet(), 0..5).unwrap();
        for ev in e {
            let n = ev.index as f64 + 1.0;
            assert!((ev.value - (n * PI).powi(2)).abs() < 1e-8 * ev.value, "{ev:?}");
            assert!(ev.residual < 1e-9);
        }
    }

    #[test]
    fn chain_solves_two_point_problem() {
        // y″ = 900 y, y(0) = 1, y(1) = 0 → y = sinh(30(1−r))/sinh(30).
        let f = |_r: f64| Matrix2::new(0.0, 1.0, 900.0, 0.0);
        let nodes: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let chain = Chain::new(&f, &nodes, &OdeOptions::default()).unwrap();
        let sol = chain
            .solve(&[Condition::component(0.0, 0, 1.0), Condition::component(1.0, 0, 0.0)])
            .unwrap();
        for (r, s) in sol.nodes.iter().zip(&sol.states) {
            let exact = (30.0 * (1.0 - r)).sinh() / 30f64.sinh();
            assert!((s[0] - exact).abs() < 1e-10 * exact.abs().max(1e-12) + 1e-14, "r={r}");
        }
        assert!(sol.condition_residual < 1e-12);
    }

    #[test]
    fn chain_detects_singular_problem() {
        // y″ = −π² y with y(0) = y(1) = 0 is singular.
        let f = |_r: f64| Matrix2::new(0.0, 1.0, -PI * PI, 0.0);
        let chain = Chain::new(&f, &[0.0, 0.5, 1.0], &OdeOptions::default()).unwrap();
        let r = chain.solve(&[Condition::component(0.0, 0, 0.0), Condition::component(1.0, 0, 0.0)]);
        assert!(matches!(r, Err(Error::SingularBvp { .. })), "{:?}", r.map(|s| s.pivot_ratio));
    }

    #[test]
    fn residual_det_trivial_cases() {
        let a = ScaledMatrix::from_columns([Vector2::new(1.0, 0.3), Vector2::new(0.0, 0.7)], [0.0, 0.0]);
        let b = ScaledMatrix::from_columns([Vector2::new(0.4, 0.0), Vector2::new(0.2, 1.0)], [0.0, 0.0]);
        let (s, l) = residual_bvp_det(&a, &b, 1, 2);
        assert_eq!(s, 1.0);
        assert!(l.abs() < 1e-15);
        let same = ScaledMatrix::from_columns([Vector2::new(1.0, 2.0), Vector2::new(1.0, 2.0)], [0.0, 0.0]);
        assert_eq!(residual_bvp_det(&same, &same, 1, 2).0, 0.0);
        let _ = Matrix2::<f64>::identity();
    }

    #[test]
    fn tilde_l_values() {
        let s = tilde_l_spectrum(1.0, 2.0, 3).unwrap();
        assert!((s.upsilon - 0.5).abs() < 1e-15);
        assert!((s.tau - 39.47841760435743).abs() < 1e-10);
        let closer = tilde_l_spectrum(1.0, 1.5, 1).unwrap();
        assert!(closer.tau > s.tau);
    }

    #[test]
    fn beta_values() {
        assert!((beta_interval(1.0, 2.0, 1.0, 1.0, 100.0).unwrap() - 1.01).abs() < 1e-15);
        assert!((beta_interval(1.0, 2.0, 0.5, 0.5, 100.0).unwrap() - 1.05).abs() < 1e-15);
        assert!(beta_interval(1.0, 2.0, 5.0, 0.5, 4.0).is_err());
    }

    #[test]
    fn q_lemma() {
        for eps in [1e-1, 1e-3] {
            assert!((proddiff_q(1.0, 0.0, 1.0, eps) - eps).abs() < 1e-15);
        }
    }

    #[test]
    fn sigma_bc_gap_at_30() {
        let m = adia_exp();
        let s = choose_sigma_bc(&m, 30.0, (PI / 2.0, PI / 2.0)).unwrap();
        assert!(s.gap >= 30.0 * PI / 12.0);
    }
}
