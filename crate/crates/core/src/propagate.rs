//! Adaptive integration of linear systems X′ = A(r)X in log-scaled form,
//! piecewise fundamental matrices for multiple shooting, quadrature and norms.

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    /// Relative tolerance, measured against each column's magnitude.
    pub tol: f64,
    pub max_steps: usize,
    pub renorm_lo: f64,
    pub renorm_hi: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { tol: 1e-11, max_steps: 20_000_000, renorm_lo: 1e-4, renorm_hi: 1e4 }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions { tol, ..Default::default() }
    }
}

// Dormand–Prince 5(4).
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One DOPRI5 integration in progress. Columns are renormalized in place
/// (when `renormalize` is set) and the factors accumulated in `logmag`.
struct Stepper<'f, F, const N: usize, const M: usize> {
    f: &'f F,
    r: f64,
    y: SMatrix<f64, N, M>,
    k1: SMatrix<f64, N, M>,
    logmag: SVector<f64, M>,
    h: f64,
    opts: OdeOptions,
    renormalize: bool,
    steps: usize,
    renorms: usize,
}

impl<'f, F, const N: usize, const M: usize> Stepper<'f, F, N, M>
where
    F: Fn(f64) -> SMatrix<f64, N, N>,
{
    fn new(f: &'f F, r0: f64, y0: SMatrix<f64, N, M>, span: f64, opts: OdeOptions, renormalize: bool) -> Self {
        let a0 = f(r0);
        let scale = a0.amax().max(1e-3);
        let h = (0.05 * opts.tol.powf(0.2) / scale).min(span.abs().max(f64::MIN_POSITIVE));
        Stepper {
            f,
            r: r0,
            y: y0,
            k1: a0 * y0,
            logmag: SVector::zeros(),
            h,
            opts,
            renormalize,
            steps: 0,
            renorms: 0,
        }
    }

    fn column_scale(&self, y5: &SMatrix<f64, N, M>, j: usize) -> f64 {
        let s = self.y.column(j).amax().max(y5.column(j).amax());
        self.opts.tol * s + 1e-300
    }

    /// Advances to `target`. With `stop_log`, returns early (Ok(false)) after
    /// the first accepted step at which some column norm exceeds e^{stop_log}.
    fn advance_to(&mut self, target: f64, stop_log: Option<f64>) -> Result<bool> {
        let dir = if target >= self.r { 1.0 } else { -1.0 };
        let span_scale = target.abs().max(self.r.abs()).max(1.0);
        let h_min = 1e-14 * span_scale;
        while (target - self.r) * dir > 0.0 {
            if self.steps >= self.opts.max_steps {
                return Err(Error::StepFailure { r: self.r, h: self.h });
            }
            let remaining = (target - self.r).abs();
            let mut h = self.h.abs().min(remaining);
            let hits = remaining - h <= 1e-13 * span_scale;
            if hits {
                h = remaining;
            }
            let hs = h * dir;
            let f = self.f;
            let r = self.r;
            let y = self.y;
            let k1 = self.k1;
            let k2 = f(r + C2 * hs) * (y + k1 * (A21 * hs));
            let k3 = f(r + C3 * hs) * (y + (k1 * A31 + k2 * A32) * hs);
            let k4 = f(r + C4 * hs) * (y + (k1 * A41 + k2 * A42 + k3 * A43) * hs);
            let k5 = f(r + C5 * hs) * (y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hs);
            let r_new = if hits { target } else { r + hs };
            let a7 = f(r_new);
            let k6 = f(r + hs) * (y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hs);
            let y5 = y + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * hs;
            let k7 = a7 * y5;
            let e = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hs;
            let mut err: f64 = 0.0;
            for j in 0..M {
                let sc = self.column_scale(&y5, j);
                err = err.max(e.column(j).amax() / sc);
            }
            if !err.is_finite() {
                err = 1e10;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                self.r = r_new;
                self.y = y5;
                self.k1 = k7;
                self.steps += 1;
                // A step truncated to land on the target says little about the next one.
                if !(hits && h < self.h) {
                    self.h = h * factor;
                }
                if self.renormalize {
                    self.renorm();
                }
                if let Some(cap) = stop_log {
                    let big = (0..M).map(|j| self.y.column(j).norm()).fold(0.0, f64::max);
                    if big.ln() > cap && (target - self.r) * dir > 0.0 {
                        return Ok(false);
                    }
                }
            } else {
                self.h = h * factor;
                if self.h < h_min {
                    return Err(Error::StepFailure { r: self.r, h: self.h });
                }
            }
        }
        Ok(true)
    }

    fn renorm(&mut self) {
        for j in 0..M {
            let n = self.y.column(j).norm();
            if n > 0.0 && (n < self.opts.renorm_lo || n > self.opts.renorm_hi) {
                self.y.column_mut(j).scale_mut(1.0 / n);
                self.k1.column_mut(j).scale_mut(1.0 / n);
                self.logmag[j] += n.ln();
                self.renorms += 1;
            }
        }
    }

    /// Unit-column snapshot of the current state.
    fn snapshot(&self) -> (SMatrix<f64, N, M>, SVector<f64, M>) {
        let mut d = self.y;
        let mut l = self.logmag;
        for j in 0..M {
            let n = d.column(j).norm();
            if n > 0.0 {
                d.column_mut(j).scale_mut(1.0 / n);
                l[j] += n.ln();
            } else {
                l[j] = f64::NEG_INFINITY;
            }
        }
        (d, l)
    }
}

/// Solution stored per node as unit-norm columns times e^{log-magnitude}.
#[derive(Clone, Debug)]
pub struct ScaledSolution<const N: usize, const M: usize> {
    pub nodes: Vec<f64>,
    pub dirs: Vec<SMatrix<f64, N, M>>,
    pub logmag: Vec<SVector<f64, M>>,
    pub renormalizations: usize,
    pub steps: usize,
}

pub type ScaledMatrixSolution<const N: usize> = ScaledSolution<N, N>;
pub type ScaledTrajectory<const N: usize> = ScaledSolution<N, 1>;

impl<const N: usize, const M: usize> ScaledSolution<N, M> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reconstructed value at node i (may overflow for huge magnitudes).
    pub fn value(&self, i: usize) -> SMatrix<f64, N, M> {
        let mut v = self.dirs[i];
        for j in 0..M {
            let s = self.logmag[i][j].exp();
            v.column_mut(j).scale_mut(if s.is_finite() { s } else { f64::INFINITY });
        }
        v
    }

    /// Value at node i with column j divided by e^{shift[j]}.
    pub fn value_shifted(&self, i: usize, shift: &SVector<f64, M>) -> SMatrix<f64, N, M> {
        let mut v = self.dirs[i];
        for j in 0..M {
            v.column_mut(j).scale_mut((self.logmag[i][j] - shift[j]).exp());
        }
        v
    }

    pub fn index_of(&self, r: f64) -> Option<usize> {
        self.nodes.iter().position(|&x| (x - r).abs() <= 1e-13 * r.abs().max(1.0))
    }
}

impl<const N: usize> ScaledSolution<N, N> {
    /// Signed log|det| of the reconstructed matrix at node i.
    pub fn log_det(&self, i: usize) -> (f64, f64) {
        let d = crate::propagate::log_det_dyn(&DMatrix::from_column_slice(N, N, self.dirs[i].as_slice()));
        (d.0, d.1 + self.logmag[i].sum())
    }
}

/// Integrates X′ = A X through `nodes` (monotone; the first is the start).
pub fn integrate_scaled<F, const N: usize, const M: usize>(
    f: &F,
    nodes: &[f64],
    init: SMatrix<f64, N, M>,
    opts: &OdeOptions,
) -> Result<ScaledSolution<N, M>>
where
    F: Fn(f64) -> SMatrix<f64, N, N>,
{
    assert!(!nodes.is_empty(), "need at least one node");
    let span = nodes[nodes.len() - 1] - nodes[0];
    let mut st = Stepper::new(f, nodes[0], init, span, *opts, true);
    let mut out = ScaledSolution {
        nodes: Vec::with_capacity(nodes.len()),
        dirs: Vec::with_capacity(nodes.len()),
        logmag: Vec::with_capacity(nodes.len()),
        renormalizations: 0,
        steps: 0,
    };
    for &r in nodes {
        st.advance_to(r, None)?;
        let (d, l) = st.snapshot();
        out.nodes.push(r);
        out.dirs.push(d);
        out.logmag.push(l);
    }
    out.renormalizations = st.renorms;
    out.steps = st.steps;
    Ok(out)
}

/// Fundamental matrix through `nodes` starting from `init`.
pub fn integrate_fundamental<F, const N: usize>(
    f: &F,
    nodes: &[f64],
    init: SMatrix<f64, N, N>,
    opts: &OdeOptions,
) -> Result<ScaledMatrixSolution<N>>
where
    F: Fn(f64) -> SMatrix<f64, N, N>,
{
    integrate_scaled(f, nodes, init, opts)
}

/// Single trajectory through `nodes` starting from `x0`.
pub fn solve_ivp<F, const N: usize>(f: &F, nodes: &[f64], x0: SVector<f64, N>, opts: &OdeOptions) -> Result<ScaledTrajectory<N>>
where
    F: Fn(f64) -> SMatrix<f64, N, N>,
{
    integrate_scaled(f, nodes, x0, opts)
}

/// max over nodes of |Σ logmag + log|det dirs| − log|det init| − ∫ tr A|.
pub fn liouville_defect<const N: usize>(sol: &ScaledMatrixSolution<N>, trace: impl Fn(f64) -> f64) -> f64 {
    let base = sol.log_det(0).1;
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for i in 1..sol.len() {
        acc += integrate(&trace, sol.nodes[i - 1], sol.nodes[i]);
        worst = worst.max((sol.log_det(i).1 - base - acc).abs());
    }
    worst
}

/// Row pairs (i < j) of a 4×4 matrix in lexicographic order.
pub const PAIRS4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Additive second compound of A: if the columns of X solve X′ = AX, the
/// vector of 2×2 row minors of any two columns solves u′ = A⁽²⁾u.
pub fn second_compound(a: &SMatrix<f64, 4, 4>) -> SMatrix<f64, 6, 6> {
    let idx = |i: usize, j: usize| -> Option<(usize, f64)> {
        if i == j {
            return None;
        }
        let (lo, hi, s) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        PAIRS4.iter().position(|&p| p == (lo, hi)).map(|k| (k, s))
    };
    let mut out = SMatrix::<f64, 6, 6>::zeros();
    for (row, &(i, j)) in PAIRS4.iter().enumerate() {
        for k in 0..4 {
            if let Some((col, s)) = idx(k, j) {
                out[(row, col)] += s * a[(i, k)];
            }
            if let Some((col, s)) = idx(i, k) {
                out[(row, col)] += s * a[(j, k)];
            }
        }
    }
    out
}

/// Worst per-segment |log|det T_k| − ∫tr A| over a piecewise fundamental
/// matrix. Each transfer matrix has bounded growth, so its determinant is
/// computed without the column collapse a single long integration suffers.
pub fn piecewise_liouville_defect<const N: usize>(pw: &Piecewise<N>, trace: impl Fn(f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, t) in pw.transfer.iter().enumerate() {
        let (_, logdet) = log_det_dyn(&DMatrix::from_column_slice(N, N, t.as_slice()));
        let expect = integrate(&trace, pw.breaks[k], pw.breaks[k + 1]);
        worst = worst.max((logdet - expect).abs());
    }
    worst
}

/// Piecewise fundamental matrix on a forward node list: on each segment
/// [b_k, b_{k+1}] the local solution starts from I and its columns grow by at
/// most about e^{growth_cap}, which keeps every transfer matrix well conditioned.
#[derive(Clone, Debug)]
pub struct Piecewise<const N: usize> {
    pub breaks: Vec<f64>,
    pub transfer: Vec<SMatrix<f64, N, N>>,
    pub nodes: Vec<f64>,
    pub node_segment: Vec<usize>,
    pub node_local: Vec<SMatrix<f64, N, N>>,
    pub steps: usize,
}

pub const DEFAULT_GROWTH_CAP: f64 = 9.2;

pub fn piecewise_fundamental<F, const N: usize>(f: &F, nodes: &[f64], opts: &OdeOptions, growth_cap: f64) -> Result<Piecewise<N>>
where
    F: Fn(f64) -> SMatrix<f64, N, N>,
{
    assert!(nodes.len() >= 2, "need at least two nodes");
    debug_assert!(nodes.windows(2).all(|w| w[1] >= w[0]), "nodes must be nondecreasing");
    let span = nodes[nodes.len() - 1] - nodes[0];
    let mut st = Stepper::new(f, nodes[0], SMatrix::<f64, N, N>::identity(), span, *opts, false);
    let mut pw = Piecewise {
        breaks: vec![nodes[0]],
        transfer: Vec::new(),
        nodes: Vec::with_capacity(nodes.len()),
        node_segment: Vec::with_capacity(nodes.len()),
        node_local: Vec::with_capacity(nodes.len()),
        steps: 0,
    };
    for &r in nodes {
        loop {
            if st.advance_to(r, Some(growth_cap))? {
                pw.nodes.push(r);
                pw.node_segment.push(pw.transfer.len());
                pw.node_local.push(st.y);
                break;
            }
            pw.transfer.push(st.y);
            pw.breaks.push(st.r);
            st.y = SMatrix::identity();
            st.k1 = f(st.r);
        }
    }
    // Close the last segment at the final node.
    pw.transfer.push(st.y);
    pw.breaks.push(st.r);
    pw.steps = st.steps;
    Ok(pw)
}

impl<const N: usize> Piecewise<N> {
    pub fn segments(&self) -> usize {
        self.transfer.len()
    }
}

// ---------------------------------------------------------------- quadrature

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

thread_local! {
    static GL16: (Vec<f64>, Vec<f64>) = gauss_legendre(16);
}

fn gl16(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    GL16.with(|(x, w)| {
        let (m, hw) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(w).map(|(xi, wi)| wi * f(m + hw * xi)).sum::<f64>() * hw
    })
}

/// Adaptive Gauss–Legendre quadrature of a smooth integrand (about 1e−14 relative).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gl16(f, a, m), gl16(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= 1e-14 * (l.abs() + r.abs()).max(1e-300) {
            l + r
        } else {
            rec(f, a, m, l, depth - 1) + rec(f, m, b, r, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    rec(&f, a, b, gl16(&f, a, b), 30)
}

/// Quadrature grid on an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid {
    /// Composite Gauss–Legendre, endpoints appended with zero weight so that
    /// nodes[0] = a and nodes[last] = b.
    pub fn gauss(a: f64, b: f64, panels: usize, order: usize) -> Grid {
        let (x, w) = gauss_legendre(order);
        let mut nodes = vec![a];
        let mut weights = vec![0.0];
        let hp = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * hp;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * hp * (xi + 1.0));
                weights.push(0.5 * hp * wi);
            }
        }
        nodes.push(b);
        weights.push(0.0);
        Grid { nodes, weights }
    }

    /// Default norm grid: 64-point Gauss–Legendre, composite.
    pub fn default_on(a: f64, b: f64) -> Grid {
        Grid::gauss(a, b, 16, 64)
    }

    /// Chebyshev–Lobatto nodes (increasing) with Clenshaw–Curtis weights.
    pub fn chebyshev(a: f64, b: f64, n: usize) -> Grid {
        assert!(n >= 2);
        let nn = n - 1;
        let nodes = chebyshev_nodes(a, b, n);
        let mut weights = vec![0.0; n];
        let pi = std::f64::consts::PI;
        for (k, wk) in weights.iter_mut().enumerate() {
            let theta = pi * k as f64 / nn as f64;
            let mut s = 1.0;
            for j in 1..=nn / 2 {
                let bj = if 2 * j == nn { 1.0 } else { 2.0 };
                s -= bj * (2.0 * j as f64 * theta).cos() / (4.0 * (j * j) as f64 - 1.0);
            }
            let ck = if k == 0 || k == nn { 1.0 } else { 2.0 };
            *wk = ck * s / nn as f64 * 0.5 * (b - a);
        }
        weights.reverse();
        Grid { nodes, weights }
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }
    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

/// Chebyshev–Lobatto points on [a, b] in increasing order.
pub fn chebyshev_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let nn = (n - 1) as f64;
    (0..n)
        .map(|j| {
            let x = -(std::f64::consts::PI * j as f64 / nn).cos();
            let r = a + 0.5 * (b - a) * (x + 1.0);
            if j == 0 {
                a
            } else if j == n - 1 {
                b
            } else {
                r
            }
        })
        .collect()
}

/// Spectral differentiation matrix on [`chebyshev_nodes`].
pub fn chebyshev_diff(a: f64, b: f64, n: usize) -> DMatrix<f64> {
    let nn = n - 1;
    let x: Vec<f64> = (0..n).map(|j| -(std::f64::consts::PI * j as f64 / nn as f64).cos()).collect();
    let c = |i: usize| if i == 0 || i == nn { 2.0 } else { 1.0 };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = c(i) / c(j) * sign / (x[i] - x[j]);
            }
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d * (2.0 / (b - a))
}

/// Barycentric interpolation row: values at Chebyshev nodes → value at t.
pub fn barycentric_row(nodes: &[f64], t: f64) -> Vec<f64> {
    let n = nodes.len();
    let wts = |j: usize| {
        let s = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n - 1 {
            0.5 * s
        } else {
            s
        }
    };
    if let Some(k) = nodes.iter().position(|&x| x == t) {
        let mut row = vec![0.0; n];
        row[k] = 1.0;
        return row;
    }
    let mut row: Vec<f64> = (0..n).map(|j| wts(j) / (t - nodes[j])).collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= s);
    row
}

pub fn l2_inner(f: &[f64], g: &[f64], grid: &Grid) -> f64 {
    f.iter().zip(g).zip(&grid.weights).map(|((a, b), w)| a * b * w).sum()
}

pub fn l2_norm(f: &[f64], grid: &Grid) -> f64 {
    l2_inner(f, f, grid).max(0.0).sqrt()
}

/// Max |f| over sampled values.
pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Max |f| over the grid, refined by golden-section search around the argmax.
pub fn sup_norm_fn(f: impl Fn(f64) -> f64, grid: &Grid) -> f64 {
    let vals: Vec<f64> = grid.nodes.iter().map(|&r| f(r).abs()).collect();
    let (k, &best) = vals.iter().enumerate().fold((0, &0.0), |acc, (i, v)| if *v > *acc.1 { (i, v) } else { acc });
    let lo = grid.nodes[k.saturating_sub(1)];
    let hi = grid.nodes[(k + 1).min(grid.nodes.len() - 1)];
    let g = |r: f64| -f(r).abs();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut x0, mut x3) = (lo, hi);
    let mut x1 = x3 - phi * (x3 - x0);
    let mut x2 = x0 + phi * (x3 - x0);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..60 {
        if f1 < f2 {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - phi * (x3 - x0);
            f1 = g(x1);
        } else {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + phi * (x3 - x0);
            f2 = g(x2);
        }
    }
    best.max(-f1).max(-f2)
}

/// Sign and log|det| via LU with partial pivoting.
pub fn log_det_dyn(m: &DMatrix<f64>) -> (f64, f64) {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut sign = 1.0;
    let mut logabs = 0.0;
    for i in 0..m.nrows() {
        let d = u[(i, i)];
        if d == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if d < 0.0 {
            sign = -sign;
        }
        logabs += d.abs().ln();
    }
    let p = lu.p();
    if p.determinant::<f64>() < 0.0 {
        sign = -sign;
    }
    (sign, logabs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix1, Matrix2, Vector2};

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-15);
        let (_, w) = gauss_legendre(64);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_integral() {
        let v = integrate(|t: f64| 1.0 / t, 1.0, 2.0);
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_system_keeps_init() {
        let f = |_r: f64| Matrix2::<f64>::zeros();
        let init = Matrix2::new(1.0, 2.0, 3.0, 4.0);
        let s = integrate_fundamental(&f, &[1.0, 1.5, 2.0], init, &OdeOptions::default()).unwrap();
        assert!((s.value(2) - init).amax() < 1e-14);
    }

    #[test]
    fn scalar_power_growth() {
        let f = |r: f64| Matrix1::new(100.0 / r);
        let s = integrate_fundamental(&f, &[1.0, 2.0], Matrix1::new(1.0), &OdeOptions::default()).unwrap();
        assert!((s.logmag[1][0] - 100.0 * 2f64.ln()).abs() < 1e-8, "{}", s.logmag[1][0]);
        assert!(s.renormalizations > 0);
    }

    #[test]
    fn liouville_on_rotation_plus_growth() {
        let f = |r: f64| Matrix2::new(1.0 / r, 30.0, -30.0, 2.0);
        let nodes: Vec<f64> = (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect();
        let s = integrate_fundamental(&f, &nodes, Matrix2::identity(), &OdeOptions::default()).unwrap();
        assert!(liouville_defect(&s, |r| 1.0 / r + 2.0) < 1e-9);
    }

    #[test]
    fn backward_integration_reverses() {
        let f = |r: f64| Matrix2::new(0.0, 1.0, -r, 0.0);
        let x0 = Vector2::new(1.0, 0.5);
        let fwd = solve_ivp(&f, &[0.0, 3.0], x0, &OdeOptions::default()).unwrap();
        let back = solve_ivp(&f, &[3.0, 0.0], fwd.value(1).column(0).into_owned(), &OdeOptions::default()).unwrap();
        assert!((back.value(1).column(0) - x0).amax() < 1e-9);
    }

    #[test]
    fn piecewise_matches_direct() {
        let f = |r: f64| Matrix2::new(0.0, 400.0, 1.0 / (r * r), 0.0);
        let nodes = [1.0, 1.3, 1.7, 2.0];
        let pw = piecewise_fundamental(&f, &nodes, &OdeOptions::default(), DEFAULT_GROWTH_CAP).unwrap();
        assert!(pw.segments() > 2);
        let mut prod = Matrix2::identity();
        for t in &pw.transfer {
            prod = t * prod;
        }
        let s = integrate_fundamental(&f, &nodes, Matrix2::identity(), &OdeOptions::default()).unwrap();
        let v = s.value(3);
        assert!(((prod - v).amax() / v.amax()) < 1e-9);
    }

    #[test]
    fn chebyshev_grid_weights() {
        let g = Grid::chebyshev(1.0, 2.0, 33);
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let f: Vec<f64> = g.nodes.iter().map(|r| r * r).collect();
        assert!((l2_inner(&f, &vec![1.0; 33], &g) - 7.0 / 3.0).abs() < 1e-13);
        let d = chebyshev_diff(1.0, 2.0, 33);
        let v = nalgebra::DVector::from_vec(g.nodes.iter().map(|r| r.sin()).collect());
        let dv = d * v;
        for (i, r) in g.nodes.iter().enumerate() {
            assert!((dv[i] - r.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn norms() {
        let g = Grid::gauss(0.0, 1.0, 4, 16);
        let f: Vec<f64> = g.nodes.to_vec();
        assert!((l2_norm(&f, &g) - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        let g = Grid::default_on(1.0, 2.0);
        let one = vec![1.0; g.nodes.len()];
        assert!((l2_norm(&one, &g) - 1.0).abs() < 1e-13);
        assert_eq!(sup_norm(&one), 1.0);
        let s = sup_norm_fn(|r| (10.0 * r).sin(), &Grid::gauss(0.0, 1.0, 2, 4));
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barycentric_reproduces_polynomial() {
        let nodes = chebyshev_nodes(1.0, 2.0, 9);
        let row = barycentric_row(&nodes, 1.234);
        let v: f64 = row.iter().zip(&nodes).map(|(w, x)| w * x.powi(5)).sum();
        assert!((v - 1.234f64.powi(5)).abs() < 1e-13);
    }

    #[test]
    fn second_compound_tracks_minors() {
        let a = |r: f64| {
            SMatrix::<f64, 4, 4>::from_fn(|i, j| ((i * 4 + j) as f64 * 0.37 + r).sin() * if i == j { 2.0 } else { 1.0 })
        };
        let nodes = [0.0, 0.5, 1.0];
        let opts = OdeOptions::with_tol(1e-12);
        let x = integrate_fundamental(&a, &nodes, SMatrix::<f64, 4, 4>::identity(), &opts).unwrap().value(2);
        let b = |r: f64| second_compound(&a(r));
        let mut u0 = SVector::<f64, 6>::zeros();
        u0[0] = 1.0;
        let u = solve_ivp(&b, &nodes, u0, &opts).unwrap().value(2);
        for (k, &(i, j)) in PAIRS4.iter().enumerate() {
            let minor = x[(i, 0)] * x[(j, 1)] - x[(i, 1)] * x[(j, 0)];
            assert!((u[k] - minor).abs() < 1e-9, "{k}: {} vs {minor}", u[k]);
        }
    }
}
