//! Green's matrix of the residual system under Π_{j,k} agreement, the scalar
//! kernel F(r,t) = C(r)ᵀM(r,t)G(t) and its leading-order symmetric part.
//!
//! Everything is held in scaled form: a solution is a unit direction times
//! e^{log-magnitude}, and only differences of log-magnitudes are exponentiated.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{AsymptoticBasis, ResidualBasis};
use crate::bvp::DET_FLOOR;
use crate::model::StellarModel;
use crate::propagate::{barycentric_row, gauss_legendre, solve_ivp, Grid, OdeOptions};
use crate::systems::{c_vector, g_vector, residual_matrix, ModeParams};
use crate::{Error, Result};

/// Composite Gauss grid whose panel endpoints ("breaks") are nodes with zero
/// weight. Kernels jump only on the diagonal, so putting every evaluation
/// point at a break keeps each panel integrand smooth.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Indices of the panel endpoints in `nodes`.
    pub breaks: Vec<usize>,
}

impl PanelGrid {
    /// `breaks` must be increasing.
    pub fn new(breaks: &[f64], order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(breaks.len() * (order + 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut idx = Vec::with_capacity(breaks.len());
        for (p, &lo) in breaks.iter().enumerate() {
            idx.push(nodes.len());
            nodes.push(lo);
            weights.push(0.0);
            if let Some(&hi) = breaks.get(p + 1) {
                let h = hi - lo;
                for (xi, wi) in x.iter().zip(&w) {
                    nodes.push(lo + 0.5 * h * (xi + 1.0));
                    weights.push(0.5 * h * wi);
                }
            }
        }
        PanelGrid { nodes, weights, breaks: idx }
    }

    /// Breaks at every point of `must` (which should contain both ends), with
    /// gaps subdivided uniformly so that no panel is wider than `max_width`.
    pub fn refined(must: &[f64], max_width: f64, order: usize) -> Self {
        let mut br = vec![must[0]];
        for w in must.windows(2) {
            let n = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
            for i in 1..=n {
                br.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
            }
        }
        PanelGrid::new(&br, order)
    }

    /// Uniform panels on [a, b].
    pub fn uniform(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let br: Vec<f64> = (0..=panels).map(|i| if i == panels { b } else { a + (b - a) * i as f64 / panels as f64 }).collect();
        PanelGrid::new(&br, order)
    }

    pub fn break_points(&self) -> Vec<f64> {
        self.breaks.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn as_grid(&self) -> Grid {
        Grid { nodes: self.nodes.clone(), weights: self.weights.clone() }
    }
}

/// Largest |eigenvalue| of the residual matrix over [a, b]: the fastest
/// exponential or oscillation rate of residual solutions.
pub fn rate_scale(m: &StellarModel, p: &ModeParams) -> f64 {
    (0..=64)
        .map(|i| {
            let r = m.a + (m.b - m.a) * i as f64 / 64.0;
            let a = residual_matrix(m, p, r);
            let tr = a.trace();
            let disc = 0.25 * tr * tr - a.determinant();
            if disc >= 0.0 {
                0.5 * tr.abs() + disc.sqrt()
            } else {
                a.determinant().abs().sqrt()
            }
        })
        .fold(1.0, f64::max)
}

/// Green's matrix built from two numerically integrated residual solutions:
/// N₁ from a with E_j·N₁(a) = 0 and N₂ from b with E_k·N₂(b) = 0. Then
/// Y_p(r) = −N₁(r)∫_r^b ρ₁Φ + N₂(r)∫_a^r ρ₂Φ with (ρ₁, ρ₂) = [N₁ N₂]⁻¹λG.
#[derive(Clone, Debug)]
pub struct GreensMatrix {
    pub j: usize,
    pub k: usize,
    pub grid: PanelGrid,
    d1: Vec<Vector2<f64>>,
    l1: Vec<f64>,
    d2: Vec<Vector2<f64>>,
    l2: Vec<f64>,
    /// det[d₁, d₂] at each node.
    det: Vec<f64>,
    /// λG and μC at each node.
    gv: Vec<Vector2<f64>>,
    cv: Vec<Vector2<f64>>,
}

pub fn greens_matrix(
    m: &StellarModel,
    p: &ModeParams,
    j: usize,
    k: usize,
    grid: PanelGrid,
    opts: &OdeOptions,
) -> Result<GreensMatrix> {
    if !(1..=2).contains(&j) || !(1..=2).contains(&k) {
        return Err(Error::Domain(format!("Π indices must be 1 or 2, got ({j},{k})")));
    }
    let f = |r: f64| residual_matrix(m, p, r);
    let other = |i: usize| if i == 1 { Vector2::new(0.0, 1.0) } else { Vector2::new(1.0, 0.0) };
    let fwd = solve_ivp(&f, &grid.nodes, other(j), opts)?;
    let rev: Vec<f64> = grid.nodes.iter().rev().copied().collect();
    let bwd = solve_ivp(&f, &rev, other(k), opts)?;
    let n = grid.nodes.len();
    let d1: Vec<Vector2<f64>> = fwd.dirs.iter().map(|d| d.column(0).into_owned()).collect();
    let l1: Vec<f64> = fwd.logmag.iter().map(|l| l[0]).collect();
    let d2: Vec<Vector2<f64>> = bwd.dirs.iter().rev().map(|d| d.column(0).into_owned()).collect();
    let l2: Vec<f64> = bwd.logmag.iter().rev().map(|l| l[0]).collect();
    let det: Vec<f64> = (0..n).map(|i| d1[i][0] * d2[i][1] - d1[i][1] * d2[i][0]).collect();
    if det[0].abs() < DET_FLOOR {
        return Err(Error::SingularBvp { det: det[0] });
    }
    let gv = grid.nodes.iter().map(|&r| g_vector(m, p, r) * p.lambda).collect();
    let cv = grid.nodes.iter().map(|&r| c_vector(m, p, r) * p.mu).collect();
    Ok(GreensMatrix { j, k, grid, d1, l1, d2, l2, det, gv, cv })
}

impl GreensMatrix {
    pub fn len(&self) -> usize {
        self.grid.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.nodes.is_empty()
    }

    /// Row covectors ρ̂₁, ρ̂₂ of [d₁ d₂]⁻¹ at node q (without the e^{−ℓ} factors).
    fn inv_rows(&self, q: usize) -> (Vector2<f64>, Vector2<f64>) {
        let (a, b, dd) = (self.d1[q], self.d2[q], self.det[q]);
        (Vector2::new(b[1], -b[0]) / dd, Vector2::new(-a[1], a[0]) / dd)
    }

    /// M(r_i, t_q), the 2×2 kernel; on the diagonal the two one-sided limits are averaged.
    pub fn m(&self, i: usize, q: usize) -> Matrix2<f64> {
        let (r1, r2) = self.inv_rows(q);
        let upper = || -(self.d1[i] * r1.transpose()) * (self.l1[i] - self.l1[q]).exp();
        let lower = || (self.d2[i] * r2.transpose()) * (self.l2[i] - self.l2[q]).exp();
        match i.cmp(&q) {
            std::cmp::Ordering::Less => upper(),
            std::cmp::Ordering::Greater => lower(),
            std::cmp::Ordering::Equal => 0.5 * (upper() + lower()),
        }
    }

    /// F(r_i, t_q) = μC(r_i)ᵀ M(r_i, t_q) λG(t_q).
    pub fn kernel(&self, i: usize, q: usize) -> f64 {
        let (r1, r2) = self.inv_rows(q);
        let g = self.gv[q];
        let c = self.cv[i];
        let up = || -c.dot(&self.d1[i]) * r1.dot(&g) * (self.l1[i] - self.l1[q]).exp();
        let lo = || c.dot(&self.d2[i]) * r2.dot(&g) * (self.l2[i] - self.l2[q]).exp();
        match i.cmp(&q) {
            std::cmp::Ordering::Less => up(),
            std::cmp::Ordering::Greater => lo(),
            std::cmp::Ordering::Equal => 0.5 * (up() + lo()),
        }
    }

    /// F on all node pairs.
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (0..n).map(|q| self.kernel(i, q)).collect()).collect();
        DMatrix::from_fn(n, n, |i, q| rows[i][q])
    }

    /// Y_p at every break, given Φ at every node. Exact up to the panel
    /// quadrature, since the kernel is smooth inside each panel.
    pub fn particular(&self, phi: &[f64]) -> Vec<(f64, Vector2<f64>)> {
        let n = self.len();
        assert_eq!(phi.len(), n);
        let w = &self.grid.weights;
        let s: Vec<(f64, f64)> = (0..n)
            .map(|q| {
                let (r1, r2) = self.inv_rows(q);
                let g = self.gv[q] * phi[q];
                (r1.dot(&g), r2.dot(&g))
            })
            .collect();
        let mut right = vec![0.0; n];
        for i in (0..n - 1).rev() {
            right[i] = (self.l1[i] - self.l1[i + 1]).exp() * (right[i + 1] + w[i + 1] * s[i + 1].0);
        }
        let mut left = vec![0.0; n];
        for i in 1..n {
            left[i] = (self.l2[i] - self.l2[i - 1]).exp() * (left[i - 1] + w[i - 1] * s[i - 1].1);
        }
        self.grid
            .breaks
            .iter()
            .map(|&i| (self.grid.nodes[i], -self.d1[i] * right[i] + self.d2[i] * left[i]))
            .collect()
    }

    /// Nyström rows for collocation points `cheb` (each must be a break):
    /// row i maps Chebyshev values of Φ to ∫F(r_i,t)Φ(t)dt, Φ being the
    /// barycentric interpolant.
    pub fn nystrom_rows(&self, cheb: &[f64]) -> Result<DMatrix<f64>> {
        let at: Vec<usize> = cheb
            .iter()
            .map(|&r| {
                self.grid
                    .breaks
                    .iter()
                    .copied()
                    .find(|&i| (self.grid.nodes[i] - r).abs() <= 1e-13 * r.abs().max(1.0))
                    .ok_or_else(|| Error::Domain(format!("collocation point {r} is not a panel break")))
            })
            .collect::<Result<_>>()?;
        let pts: Vec<usize> = (0..self.len()).filter(|&q| self.grid.weights[q] != 0.0).collect();
        let nc = cheb.len();
        let bary: Vec<Vec<f64>> = pts.par_iter().map(|&q| barycentric_row(cheb, self.grid.nodes[q])).collect();
        let b = DMatrix::from_fn(pts.len(), nc, |q, c| bary[q][c]);
        let krows: Vec<Vec<f64>> = at
            .par_iter()
            .map(|&i| pts.iter().map(|&q| self.grid.weights[q] * self.kernel(i, q)).collect())
            .collect();
        let kmat = DMatrix::from_fn(nc, pts.len(), |i, q| krows[i][q]);
        Ok(kmat * b)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }
}

/// How the (1,2) coefficient of the leading-order kernel is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AjkForm {
    /// From Cᵀ𝒫 and 𝒫⁻¹G directly.
    Derived,
    /// With the extra factor r·t in A₁,₂ (w = rN²√(ρ/ℋ)/g).
    Printed,
}

/// Leading-order kernel F⁽ˢ⁾(r,t) = (1/Δ)Σ a_j(r) F^{(j,k)}(r,t) b_k(t) with
/// a = 𝒫ᵀμC, b = 𝒫⁻¹λG and F^{(j,k)} = E_jᵀ𝔐(r)𝔛(r,t)adj(𝔐)(t)E_k.
pub struct SymmetricKernel<'a> {
    pub basis: &'a ResidualBasis,
    pub form: AjkForm,
}

/// Per-node data of a residual basis used to assemble F⁽ˢ⁾.
#[derive(Clone, Copy, Debug)]
struct BasisSample {
    m1: Vector2<f64>,
    l1: f64,
    m2: Vector2<f64>,
    l2: f64,
    a: Vector2<f64>,
    b: Vector2<f64>,
    r: f64,
}

fn basis_samples(basis: &ResidualBasis, nodes: &[f64]) -> Result<Vec<BasisSample>> {
    let (m, p) = (&basis.model, &basis.params);
    nodes
        .par_iter()
        .map(|&r| {
            let mm = basis.m_matrix(r)?;
            let pd = basis.p_diag(r);
            let c = c_vector(m, p, r) * p.mu;
            let g = g_vector(m, p, r) * p.lambda;
            Ok(BasisSample {
                m1: mm.dir.column(0).into_owned(),
                l1: mm.logmag[0],
                m2: mm.dir.column(1).into_owned(),
                l2: mm.logmag[1],
                a: c.component_mul(&pd),
                b: g.component_div(&pd),
                r,
            })
        })
        .collect()
}

/// The four F^{(j,k)}(r,t)/Δ values, as a matrix indexed (j,k).
fn f_jk(x: &BasisSample, y: &BasisSample, log_delta: f64, chi_rt: f64, chi_tr: f64) -> Matrix2<f64> {
    // adj(𝔐)(t) rows: (m₂[1], −m₂[0])e^{l₂}, (−m₁[1], m₁[0])e^{l₁}.
    let row1 = Vector2::new(y.m2[1], -y.m2[0]);
    let row2 = Vector2::new(-y.m1[1], y.m1[0]);
    let mut out = Matrix2::zeros();
    if chi_rt != 0.0 {
        out -= x.m1 * row1.transpose() * (chi_rt * (x.l1 + y.l2 - log_delta).exp());
    }
    if chi_tr != 0.0 {
        out += x.m2 * row2.transpose() * (chi_tr * (x.l2 + y.l1 - log_delta).exp());
    }
    out
}

impl<'a> SymmetricKernel<'a> {
    pub fn new(basis: &'a ResidualBasis, form: AjkForm) -> Self {
        SymmetricKernel { basis, form }
    }

    /// F⁽ˢ⁾ on the product grid `nodes × nodes`; χ(r,r) = ½.
    pub fn tabulate(&self, nodes: &[f64]) -> Result<DMatrix<f64>> {
        let samples = basis_samples(self.basis, nodes)?;
        let (sgn, log_delta) = self.basis.delta();
        if sgn == 0.0 {
            return Err(Error::SingularBvp { det: 0.0 });
        }
        let n = nodes.len();
        let printed = self.form == AjkForm::Printed;
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|q| {
                        let (x, y) = (&samples[i], &samples[q]);
                        let (crt, ctr) = match i.cmp(&q) {
                            std::cmp::Ordering::Less => (1.0, 0.0),
                            std::cmp::Ordering::Greater => (0.0, 1.0),
                            std::cmp::Ordering::Equal => (0.5, 0.5),
                        };
                        let fj = f_jk(x, y, log_delta, crt, ctr);
                        let mut s = 0.0;
                        for j in 0..2 {
                            for k in 0..2 {
                                let mut a = x.a[j] * y.b[k];
                                if printed && j == 0 && k == 1 {
                                    a *= x.r * y.r;
                                }
                                s += a * fj[(j, k)];
                            }
                        }
                        s * sgn
                    })
                    .collect()
            })
            .collect();
        Ok(DMatrix::from_fn(n, n, |i, q| rows[i][q]))
    }

    /// F^{(j,k)} (1-based) on the grid, without the 1/Δ factor applied to
    /// the sign; used to check the component identities.
    pub fn component(&self, nodes: &[f64], j: usize, k: usize) -> Result<DMatrix<f64>> {
        let samples = basis_samples(self.basis, nodes)?;
        let (_, log_delta) = self.basis.delta();
        let n = nodes.len();
        Ok(DMatrix::from_fn(n, n, |i, q| {
            let (crt, ctr) = match i.cmp(&q) {
                std::cmp::Ordering::Less => (1.0, 0.0),
                std::cmp::Ordering::Greater => (0.0, 1.0),
                std::cmp::Ordering::Equal => (0.5, 0.5),
            };
            f_jk(&samples[i], &samples[q], log_delta, crt, ctr)[(j - 1, k - 1)]
        }))
    }
}

/// Coefficient functions of the leading-order kernel in the buoyancy
/// (ℋ) or high-frequency (c/r²) form: u = N²√(ρ/ℋ)/g, v = f = h√(ℋ/ρ) and the
/// printed w = rN²√(ρ/ℋ)/g.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelCoefficients {
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub w_printed: f64,
    pub f: f64,
}

pub fn kernel_coefficients(m: &StellarModel, curly_h: f64, r: f64) -> KernelCoefficients {
    let (rho, g, nsq, h) = (m.rho(r), m.g(r), m.nsq(r), m.h(r));
    let u = nsq / g * (rho / curly_h).sqrt();
    let f = h * (curly_h / rho).sqrt();
    KernelCoefficients { r, u, v: f, w_printed: r * u, f }
}

/// Tabulated kernels on a quadrature grid.
#[derive(Clone, Debug)]
pub struct KernelGrid {
    pub grid: Grid,
    pub f: Option<DMatrix<f64>>,
    pub fs: Option<DMatrix<f64>>,
    /// (sign, log|Δ|) of the basis used for F⁽ˢ⁾.
    pub delta: Option<(f64, f64)>,
}

impl KernelGrid {
    /// Numeric F on the grid of a [`GreensMatrix`].
    pub fn numeric(g: &GreensMatrix) -> Self {
        KernelGrid { grid: g.grid.as_grid(), f: Some(g.kernel_matrix()), fs: None, delta: None }
    }

    pub fn with_symmetric(mut self, basis: &ResidualBasis, form: AjkForm) -> Result<Self> {
        self.fs = Some(SymmetricKernel::new(basis, form).tabulate(&self.grid.nodes)?);
        self.delta = Some(basis.delta());
        Ok(self)
    }

    /// Weighted L² norm over the square.
    pub fn l2(&self, k: &DMatrix<f64>) -> f64 {
        let w = &self.grid.weights;
        let mut s = 0.0;
        for i in 0..w.len() {
            for q in 0..w.len() {
                s += w[i] * w[q] * k[(i, q)] * k[(i, q)];
            }
        }
        s.sqrt()
    }

    /// ‖F − F⁽ˢ⁾‖/‖F⁽ˢ⁾‖ on the square.
    pub fn relative_gap(&self) -> Option<f64> {
        let (f, fs) = (self.f.as_ref()?, self.fs.as_ref()?);
        Some(self.l2(&(f - fs)) / self.l2(fs))
    }

    /// ‖F − Fᵀ‖/‖F‖ of the numeric kernel.
    pub fn numeric_asymmetry(&self) -> Option<f64> {
        let f = self.f.as_ref()?;
        Some(self.l2(&(f - f.transpose())) / self.l2(f))
    }

    /// max|F⁽ˢ⁾ − F⁽ˢ⁾ᵀ| / max|F⁽ˢ⁾|.
    pub fn symmetric_defect(&self) -> Option<f64> {
        let fs = self.fs.as_ref()?;
        Some(max_asymmetry(fs))
    }

    /// Rows `r,t,F,Fs` for inspection.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "r,t,F,Fs")?;
        let n = self.grid.nodes.len();
        for i in 0..n {
            for q in 0..n {
                let f = self.f.as_ref().map(|m| m[(i, q)]);
                let fs = self.fs.as_ref().map(|m| m[(i, q)]);
                writeln!(
                    w,
                    "{:.17e},{:.17e},{},{}",
                    self.grid.nodes[i],
                    self.grid.nodes[q],
                    f.map(|v| format!("{v:.17e}")).unwrap_or_default(),
                    fs.map(|v| format!("{v:.17e}")).unwrap_or_default()
                )?;
            }
        }
        Ok(())
    }
}

pub fn max_asymmetry(k: &DMatrix<f64>) -> f64 {
    let scale = k.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (k - k.transpose()).amax() / scale
}

/// The leading-order Green's matrix 𝒫𝔐𝔛adj(𝔐)𝒫⁻¹/Δ of an asymptotic basis at (r, t).
pub fn asymptotic_m(basis: &ResidualBasis, r: f64, t: f64) -> Result<Matrix2<f64>> {
    let x = basis.eval(r)?;
    let y = basis.eval(t)?;
    let (sgn, log_delta) = basis.delta();
    let (x1, x2) = (x.dir.column(0).into_owned(), x.dir.column(1).into_owned());
    let (y1, y2) = (y.dir.column(0).into_owned(), y.dir.column(1).into_owned());
    let row1 = Vector2::new(y2[1], -y2[0]);
    let row2 = Vector2::new(-y1[1], y1[0]);
    let (crt, ctr) = if r < t {
        (1.0, 0.0)
    } else if r > t {
        (0.0, 1.0)
    } else {
        (0.5, 0.5)
    };
    let mut out = Matrix2::zeros();
    if crt != 0.0 {
        out -= x1 * row1.transpose() * (crt * (x.logmag[0] + y.logmag[1] - log_delta).exp());
    }
    if ctr != 0.0 {
        out += x2 * row2.transpose() * (ctr * (x.logmag[1] + y.logmag[0] - log_delta).exp());
    }
    Ok(out * sgn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::residual_basis;
    use crate::model::{adia_exp, nonadia_exp};
    use crate::systems::Regime;

    fn smooth_phi(r: f64) -> f64 {
        (3.0 * r).sin() + 0.5 * r * r
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let m = adia_exp();
        let p = ModeParams::high_degree(20.0, 1.0, Regime::HighDegreeAdiabatic, 2.0);
        let g = greens_matrix(&m, &p, 1, 2, PanelGrid::uniform(1.0, 2.0, 40, 8), &OdeOptions::default()).unwrap();
        let yp = g.particular(&vec![0.0; g.len()]);
        assert!(yp.iter().all(|(_, v)| v.norm() == 0.0));
    }

    #[test]
    fn boundary_agreement_and_ode_defect() {
        let m = nonadia_exp();
        let p = ModeParams::high_degree(20.0, 2.0, Regime::HighDegreeExp, 2.0);
        let h = 1.0 / 400.0;
        let g = greens_matrix(&m, &p, 1, 2, PanelGrid::uniform(1.0, 2.0, 400, 8), &OdeOptions::default()).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|&r| smooth_phi(r)).collect();
        let yp = g.particular(&phi);
        let sup = yp.iter().map(|(_, v)| v.amax()).fold(0.0, f64::max);
        assert!(yp[0].1[0].abs() < 1e-8 * sup);
        assert!(yp.last().unwrap().1[1].abs() < 1e-8 * sup);
        // Fourth-order central differences against 𝒜Y_p + λGΦ.
        let mut worst: f64 = 0.0;
        for i in 2..yp.len() - 2 {
            let d = (yp[i - 2].1 - yp[i - 1].1 * 8.0 + yp[i + 1].1 * 8.0 - yp[i + 2].1) / (12.0 * h);
            let r = yp[i].0;
            let rhs = residual_matrix(&m, &p, r) * yp[i].1 + g_vector(&m, &p, r) * smooth_phi(r);
            worst = worst.max((d - rhs).amax() / rhs.amax().max(sup));
        }
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn kernel_vanishes_without_g() {
        let m = nonadia_exp();
        let p = ModeParams::high_degree(10.0, 2.0, Regime::HighDegreeExp, 2.0).with_switches(0.0, 1.0);
        let g = greens_matrix(&m, &p, 1, 2, PanelGrid::uniform(1.0, 2.0, 8, 4), &OdeOptions::default()).unwrap();
        assert_eq!(g.kernel_matrix().amax(), 0.0);
    }

    #[test]
    fn kernel_reproduces_c_dot_yp() {
        let m = nonadia_exp();
        let p = ModeParams::high_degree(15.0, 2.0, Regime::HighDegreeExp, 2.0);
        let g = greens_matrix(&m, &p, 2, 1, PanelGrid::uniform(1.0, 2.0, 60, 8), &OdeOptions::default()).unwrap();
        let phi: Vec<f64> = g.nodes().iter().map(|&r| smooth_phi(r)).collect();
        let yp = g.particular(&phi);
        for (bi, &i) in g.grid.breaks.iter().enumerate().step_by(7) {
            let via_kernel: f64 = (0..g.len()).map(|q| g.grid.weights[q] * g.kernel(i, q) * phi[q]).sum();
            let direct = c_vector(&m, &p, yp[bi].0).dot(&yp[bi].1);
            assert!((via_kernel - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn symmetric_kernel_is_symmetric() {
        for (m, p) in [
            (adia_exp(), ModeParams::high_degree(40.0, 1.0, Regime::HighDegreeAdiabatic, 2.0)),
            (nonadia_exp(), ModeParams::high_degree(40.0, 2.0, Regime::HighDegreeExp, 2.0)),
            (nonadia_exp(), ModeParams::high_frequency(2.0, 40.0)),
        ] {
            let basis = residual_basis(&m, &p, 1, 2).unwrap();
            let nodes = Grid::gauss(1.0, 2.0, 8, 8).nodes;
            let fs = SymmetricKernel::new(&basis, AjkForm::Derived).tabulate(&nodes).unwrap();
            assert!(max_asymmetry(&fs) < 1e-10, "{}", max_asymmetry(&fs));
            let k = SymmetricKernel::new(&basis, AjkForm::Derived);
            let f12 = k.component(&nodes, 1, 2).unwrap();
            assert!(max_asymmetry(&f12) < 1e-10);
            let f11 = k.component(&nodes, 1, 1).unwrap();
            let f22 = k.component(&nodes, 2, 2).unwrap();
            assert!((&f11 + f22.transpose()).amax() < 1e-10 * f11.amax().max(1e-300));
        }
    }

    #[test]
    fn adiabatic_kernel_is_single_term() {
        let m = adia_exp();
        let c = kernel_coefficients(&m, 1.0, 1.5);
        assert_eq!(c.u, 0.0);
        assert_eq!(c.w_printed, 0.0);
        assert!(c.f > 0.0);
    }
}
