//! Backward integration of the boundary-referenced reflection and
//! transmission blocks over one segment.
//!
//! With the free solutions written as φ₂ = E·p and φ₁ = q/E, E = e^{iKy},
//! the quasi-amplitudes ρ = E r E and τ give
//!
//! r' = −i(K r + r K) − (P + rQ) C w (P + Q r)
//! t' = −t [iK + Q C w (P + Q r)]
//!
//! where r(y) is the reflection referenced at y and t (started at the identity)
//! maps the incident amplitude at y to the amplitude leaving the far end.
//! The linear part is removed with an integrating factor (Lawson form of the
//! Dormand–Prince 5(4) pair). In reference media without a step the Born term
//! −C w, which oscillates with the sum of two wave numbers, can be integrated
//! exactly against a polynomial interpolant of w instead of being resolved.

use std::sync::OnceLock;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};

use super::channels::{step_coefficients, ChannelGrid};
use crate::c64;
use crate::error::{Error, IntegrationFailure, Result};

/// Source of the coupling harmonics w_j(y) = 2μ W_j(y), j = 0..=2N.
pub(crate) trait Coupling {
    fn harmonics(&self, y: f64, out: &mut [f64]) -> Result<()>;
}

/// Free solutions used as the reference for a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Medium {
    /// Step from k_n to k_n^R at y = 0.
    Step,
    /// Plane waves of the left level everywhere.
    Uniform,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Upper bound on κ|h| for closed channels (overflow guard).
    pub decay_cap: f64,
    /// Use the exact moment treatment of the Born term (uniform media only).
    pub filon: bool,
}

/// Reflection and transmission blocks of one segment, referenced at its ends.
#[derive(Debug, Clone)]
pub(crate) struct SegmentBlocks {
    pub reflection: Mat<c64>,
    pub transmission: Mat<c64>,
    pub steps: usize,
    pub rejected: usize,
    /// Sum of the accepted local error estimates (max norm).
    pub error: f64,
}

// Dormand–Prince 5(4)
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Distinct stage abscissae used as interpolation nodes for w.
const NODES: usize = 6;

/// Inverse Vandermonde matrices mapping node values to monomial
/// coefficients: full set (degree 5) and without the node 1/5 (degree 4).
fn interpolation_maps() -> &'static ([[f64; NODES]; NODES], [[f64; NODES]; NODES]) {
    static MAPS: OnceLock<([[f64; NODES]; NODES], [[f64; NODES]; NODES])> = OnceLock::new();
    MAPS.get_or_init(|| {
        let full = invert_vandermonde(&[0, 1, 2, 3, 4, 5]);
        let reduced = invert_vandermonde(&[0, 2, 3, 4, 5]);
        (full, reduced)
    })
}

/// Rows: monomial power p; columns: node index (unused nodes get 0).
fn invert_vandermonde(used: &[usize]) -> [[f64; NODES]; NODES] {
    let m = used.len();
    let mut a = vec![vec![0.0; 2 * m]; m];
    for (r, &k) in used.iter().enumerate() {
        for p in 0..m {
            a[r][p] = C[k].powi(p as i32);
        }
        a[r][m + r] = 1.0;
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..m {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    let mut out = [[0.0; NODES]; NODES];
    for p in 0..m {
        for (r, &k) in used.iter().enumerate() {
            out[p][k] = a[p][m + r];
        }
    }
    out
}

/// Below this |ζ| the moments are summed as a power series.
const SERIES_RADIUS: f64 = 2.0;
/// 2^m/m! < 1e-17 beyond this many terms.
const SERIES_TERMS: usize = 26;

/// μ_p(ζ) = ∫₀¹ u^p e^{ζu} du for p = 0..NODES, given e^ζ.
fn exponential_moments(z: c64, ez: c64, out: &mut [c64; NODES]) {
    if z.norm() <= SERIES_RADIUS {
        for (p, o) in out.iter_mut().enumerate() {
            let mut term = c64::new(1.0, 0.0);
            let mut sum = term / (p + 1) as f64;
            for k in 1..60 {
                term = term * z / k as f64;
                let add = term / (p + k + 1) as f64;
                sum += add;
                if add.norm() < 1e-17 * sum.norm() {
                    break;
                }
            }
            *o = sum;
        }
    } else {
        let inv = 1.0 / z;
        out[0] = (ez - 1.0) * inv;
        for p in 1..NODES {
            out[p] = (ez - p as f64 * out[p - 1]) * inv;
        }
    }
}

struct Workspace {
    n: usize,
    harm: Vec<Vec<f64>>,
    ex: Vec<Vec<c64>>,
    wmat: Mat<c64>,
    amat: Mat<c64>,
    bmat: Mat<c64>,
    gmat: Mat<c64>,
    xmat: Mat<c64>,
    dr: Vec<Mat<c64>>,
    dt: Vec<Mat<c64>>,
    zr: Mat<c64>,
    zt: Mat<c64>,
    sr: Mat<c64>,
    st: Mat<c64>,
    born: Vec<Mat<c64>>,
    born_err: Mat<c64>,
    p: Vec<c64>,
    q: Vec<c64>,
    /// Channels whose Born term is integrated by moments.
    hard: Vec<bool>,
}

impl Workspace {
    fn new(n: usize, nh: usize) -> Self {
        let z = || Mat::<c64>::zeros(n, n);
        Self {
            n,
            harm: vec![vec![0.0; nh]; 7],
            ex: vec![vec![c64::new(1.0, 0.0); n]; 7],
            wmat: z(),
            amat: z(),
            bmat: z(),
            gmat: z(),
            xmat: z(),
            dr: (0..7).map(|_| z()).collect(),
            dt: (0..7).map(|_| z()).collect(),
            zr: z(),
            zt: z(),
            sr: z(),
            st: z(),
            born: (0..7).map(|_| z()).collect(),
            born_err: z(),
            p: vec![c64::new(1.0, 0.0); n],
            q: vec![c64::new(1.0, 0.0); n],
            hard: vec![false; n],
        }
    }
}

pub(crate) struct Propagator<'a> {
    grid: &'a ChannelGrid,
    medium: Medium,
    coupling: &'a dyn Coupling,
    control: StepControl,
    matching: Vec<c64>,
    coefficients: Vec<(c64, c64, c64, c64)>,
}

impl<'a> Propagator<'a> {
    pub fn new(grid: &'a ChannelGrid, medium: Medium, coupling: &'a dyn Coupling, control: StepControl) -> Self {
        let n = grid.len();
        let matching = (0..n)
            .map(|i| match medium {
                Medium::Step => grid.matching_constant(i),
                Medium::Uniform => -c64::i() / (2.0 * grid.k_left[i]),
            })
            .collect();
        let coefficients = (0..n)
            .map(|i| step_coefficients(grid.k_left[i], grid.k_right[i]))
            .collect();
        Self {
            grid,
            medium,
            coupling,
            control: StepControl {
                filon: control.filon && medium == Medium::Uniform,
                ..control
            },
            matching,
            coefficients,
        }
    }

    fn wave_numbers(&self, right: bool) -> &[c64] {
        if right && self.medium == Medium::Step {
            &self.grid.k_right
        } else {
            &self.grid.k_left
        }
    }

    fn reference(&self, y: f64, right: bool, p: &mut [c64], q: &mut [c64]) {
        match self.medium {
            Medium::Uniform => {
                p.iter_mut().for_each(|v| *v = c64::new(1.0, 0.0));
                q.iter_mut().for_each(|v| *v = c64::new(1.0, 0.0));
            }
            Medium::Step => {
                for (i, &(a, b, c, d)) in self.coefficients.iter().enumerate() {
                    if right {
                        p[i] = c64::new(1.0, 0.0);
                        q[i] = d + c * (2.0 * c64::i() * self.grid.k_right[i] * y).exp();
                    } else {
                        p[i] = a + b * (-2.0 * c64::i() * self.grid.k_left[i] * y).exp();
                        q[i] = c64::new(1.0, 0.0);
                    }
                }
            }
        }
    }

    /// Right-hand side in r-space for stage `s`; result goes to ws.dr[s], ws.dt[s].
    fn rhs(&self, ws: &mut Workspace, s: usize, y: f64, right: bool, r: &Mat<c64>, t: &Mat<c64>) {
        let n = ws.n;
        let mut p = std::mem::take(&mut ws.p);
        let mut q = std::mem::take(&mut ws.q);
        self.reference(y, right, &mut p, &mut q);
        {
            let h = &ws.harm[s];
            for j in 0..n {
                let col = ws.wmat.col_as_slice_mut(j);
                for (i, v) in col.iter_mut().enumerate() {
                    *v = c64::new(h[i.abs_diff(j)], 0.0);
                }
            }
        }
        // A = P + Q r, B = P + r Q
        for j in 0..n {
            let rc = r.col_as_slice(j);
            let ac = ws.amat.col_as_slice_mut(j);
            for i in 0..n {
                ac[i] = q[i] * rc[i];
            }
            ac[j] += p[j];
            let bc = ws.bmat.col_as_slice_mut(j);
            for i in 0..n {
                bc[i] = rc[i] * q[j];
            }
            bc[j] += p[j];
        }
        matmul(&mut ws.xmat, Accum::Replace, &ws.wmat, &ws.amat, c64::new(1.0, 0.0), Par::Seq);
        for j in 0..n {
            let xc = ws.xmat.col_as_slice(j);
            let gc = ws.gmat.col_as_slice_mut(j);
            for i in 0..n {
                gc[i] = self.matching[i] * xc[i];
            }
        }
        matmul(&mut ws.dr[s], Accum::Replace, &ws.bmat, &ws.gmat, c64::new(-1.0, 0.0), Par::Seq);
        if self.control.filon {
            // remove the Born term −C w (P = Q = 1), integrated separately
            for j in (0..n).filter(|&j| ws.hard[j]) {
                let wc = ws.wmat.col_as_slice(j);
                let dc = ws.dr[s].col_as_slice_mut(j);
                for i in (0..n).filter(|&i| ws.hard[i]) {
                    dc[i] += self.matching[i] * wc[i];
                }
            }
        }
        // Q G reuses the G buffer
        for j in 0..n {
            let gc = ws.gmat.col_as_slice_mut(j);
            for i in 0..n {
                gc[i] *= q[i];
            }
        }
        matmul(&mut ws.dt[s], Accum::Replace, t, &ws.gmat, c64::new(-1.0, 0.0), Par::Seq);
        ws.p = p;
        ws.q = q;
    }

    /// Integrate from `y_end` (r = 0, t = I) back to `y_start`, never stepping
    /// across `breaks`.
    pub fn run(&self, y_start: f64, y_end: f64, breaks: &[f64]) -> Result<SegmentBlocks> {
        let n = self.grid.len();
        let nh = 2 * self.grid.cutoff + 1;
        let mut ws = Workspace::new(n, nh);
        let mut r = Mat::<c64>::zeros(n, n);
        let mut t = Mat::<c64>::identity(n, n);
        let mut stops: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&b| b > y_start && b < y_end)
            .collect();
        if self.medium == Medium::Step && 0.0 > y_start && 0.0 < y_end {
            stops.push(0.0);
        }
        stops.push(y_start);
        stops.sort_by(|a, b| b.total_cmp(a));
        stops.dedup();

        let kmax = self
            .grid
            .k_left
            .iter()
            .chain(&self.grid.k_right)
            .map(|k| k.norm())
            .fold(0.0, f64::max);
        let kappa_max = self
            .grid
            .k_left
            .iter()
            .chain(&self.grid.k_right)
            .map(|k| k.im)
            .fold(0.0, f64::max);
        let cap = if kappa_max > 0.0 {
            self.control.decay_cap / kappa_max
        } else {
            f64::INFINITY
        };
        if self.control.filon {
            // Near-threshold channels couple with C ~ 1/k; their Born term
            // must stay with the rest of the right-hand side so that the
            // large pieces cancel inside each stage.
            let mut w_scale: f64 = 0.0;
            let buf = &mut ws.harm[0];
            for y in [y_start, 0.5 * (y_start + y_end), y_end] {
                self.coupling.harmonics(y, buf)?;
                w_scale = w_scale.max(2.0 * self.grid.mass * buf[0].abs());
            }
            for (h, k) in ws.hard.iter_mut().zip(&self.grid.k_left) {
                *h = k.norm_sqr() >= w_scale;
            }
        }
        let mut h_abs = ((y_end - y_start) * 1e-2).min(0.5 / kmax.max(f64::MIN_POSITIVE)).min(cap);
        let mut y = y_end;
        let mut steps = 0usize;
        let mut rejected = 0usize;
        let mut error_sum = 0.0;
        let mut fresh = true;
        let mut at_break = true;
        let mut next_stop = 0usize;

        while y > y_start {
            let target = stops[next_stop];
            let mut h = -h_abs.min(cap);
            let mut hits = false;
            if y + h <= target || (y - target) <= 1e-12 * h_abs.max((y - target).abs()) {
                h = target - y;
                hits = true;
            }
            let right = self.medium == Medium::Step && y + 0.5 * h >= 0.0;
            let k = self.wave_numbers(right);
            if steps + rejected >= self.control.max_steps {
                return Err(self.failure(y, IntegrationFailure::TooManySteps, &r));
            }
            if h.abs() <= 1e-15 * y.abs().max((y_end - y_start).abs()) && !hits {
                return Err(self.failure(y, IntegrationFailure::StepUnderflow, &r));
            }

            // stage abscissae and integrating factors
            for s in 0..7 {
                let tau = C[s] * h;
                for (e, kk) in ws.ex[s].iter_mut().zip(k) {
                    *e = (c64::i() * kk * tau).exp();
                }
            }
            for s in 0..6 {
                if s == 0 && !fresh {
                    continue;
                }
                let mut pos = y + C[s] * h;
                // one-sided limits at segment ends and breakpoints
                if s == 0 && at_break {
                    pos = y + 1e-12 * h;
                } else if s == 5 && hits {
                    pos = y + h * (1.0 - 1e-12);
                }
                let buf = &mut ws.harm[s];
                self.coupling.harmonics(pos, buf)?;
                let scale = 2.0 * self.grid.mass;
                buf.iter_mut().for_each(|v| *v *= scale);
            }
            ws.harm[6] = ws.harm[5].clone();
            if fresh {
                self.rhs(&mut ws, 0, y, right, &r, &t);
            }
            if self.control.filon {
                self.born_moments(&mut ws, h);
            }

            for s in 1..7 {
                ws.zr.copy_from(&r);
                ws.zt.copy_from(&t);
                for j in 0..s {
                    let a = A[s][j];
                    if a == 0.0 {
                        continue;
                    }
                    let f = c64::new(a * h, 0.0);
                    axpy(&mut ws.zr, f, &ws.dr[j]);
                    axpy(&mut ws.zt, f, &ws.dt[j]);
                }
                if self.control.filon {
                    axpy(&mut ws.zr, c64::new(1.0, 0.0), &ws.born[s]);
                }
                // back to r-space at τ = c_s h
                let ex = &ws.ex[s];
                for j in 0..n {
                    let zc = ws.zr.col_as_slice(j);
                    let sc = ws.sr.col_as_slice_mut(j);
                    for i in 0..n {
                        sc[i] = zc[i] / (ex[i] * ex[j]);
                    }
                    let zc = ws.zt.col_as_slice(j);
                    let sc = ws.st.col_as_slice_mut(j);
                    for i in 0..n {
                        sc[i] = zc[i] / ex[j];
                    }
                }
                let (sr, st) = (ws.sr.clone(), ws.st.clone());
                self.rhs(&mut ws, s, y + C[s] * h, right, &sr, &st);
                // to z-space
                let ex = &ws.ex[s];
                for j in 0..n {
                    let dc = ws.dr[s].col_as_slice_mut(j);
                    for i in 0..n {
                        dc[i] *= ex[i] * ex[j];
                    }
                    let dc = ws.dt[s].col_as_slice_mut(j);
                    for v in dc.iter_mut() {
                        *v *= ex[j];
                    }
                }
                if s == 6 {
                    ws.zr = sr;
                    ws.zt = st;
                }
            }

            // error estimate in r-space at the end of the step
            let ex = &ws.ex[6];
            let mut err: f64 = 0.0;
            let mut err_abs: f64 = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let mut dr = c64::new(0.0, 0.0);
                    let mut dt = c64::new(0.0, 0.0);
                    for (s, &e) in E.iter().enumerate() {
                        if e != 0.0 {
                            dr += e * ws.dr[s].col_as_slice(j)[i];
                            dt += e * ws.dt[s].col_as_slice(j)[i];
                        }
                    }
                    if self.control.filon {
                        dr = dr * h + ws.born_err.col_as_slice(j)[i];
                    } else {
                        dr *= h;
                    }
                    let dr = (dr / (ex[i] * ex[j])).norm();
                    let dt = (dt * h / ex[j]).norm();
                    let sr = self.control.abs_tol
                        + self.control.rel_tol
                            * r.col_as_slice(j)[i].norm().max(ws.zr.col_as_slice(j)[i].norm());
                    let st = self.control.abs_tol
                        + self.control.rel_tol
                            * t.col_as_slice(j)[i].norm().max(ws.zt.col_as_slice(j)[i].norm());
                    let local = (dr / sr).max(dt / st);
                    // f64::max drops NaN; keep it so the step is rejected
                    err = if local.is_nan() || err.is_nan() { f64::NAN } else { err.max(local) };
                    err_abs = err_abs.max(dr).max(dt);
                }
            }
            if !err.is_finite() {
                if h.abs() <= 1e-15 * y.abs().max(1e-300) {
                    return Err(self.failure(y, IntegrationFailure::NonFinite, &r));
                }
                h_abs = 0.1 * h.abs();
                rejected += 1;
                fresh = false;
                // stage 0 data stays valid for a retry from the same point
                continue;
            }
            if err <= 1.0 {
                steps += 1;
                error_sum += err_abs;
                y += h;
                r = ws.zr.clone();
                t = ws.zt.clone();
                if !finite(&r) || !finite(&t) {
                    return Err(self.failure(y, IntegrationFailure::NonFinite, &r));
                }
                if hits {
                    y = target;
                    next_stop += 1;
                    fresh = true;
                    at_break = true;
                } else {
                    // FSAL: stage 6 derivative, moved to the new origin
                    let ex = &ws.ex[6];
                    let (dr6, dt6) = (ws.dr[6].clone(), ws.dt[6].clone());
                    for j in 0..n {
                        let src = dr6.col_as_slice(j);
                        let dst = ws.dr[0].col_as_slice_mut(j);
                        for i in 0..n {
                            dst[i] = src[i] / (ex[i] * ex[j]);
                        }
                        let src = dt6.col_as_slice(j);
                        let dst = ws.dt[0].col_as_slice_mut(j);
                        for i in 0..n {
                            dst[i] = src[i] / ex[j];
                        }
                    }
                    ws.harm[0] = ws.harm[6].clone();
                    fresh = false;
                    at_break = false;
                }
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h_abs = h.abs() * grow;
            } else {
                rejected += 1;
                h_abs = h.abs() * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                fresh = false;
                if h_abs <= 1e-15 * y.abs().max((y_end - y_start).abs()) {
                    return Err(self.failure(y, IntegrationFailure::StepUnderflow, &r));
                }
            }
        }
        Ok(SegmentBlocks {
            reflection: r,
            transmission: t,
            steps,
            rejected,
            error: error_sum,
        })
    }

    /// β_s = −∫₀^{c_s h} e^{iKσ} C w(σ) e^{iKσ} dσ with w interpolated on the
    /// stage nodes; also the difference to the lower-degree interpolant at h.
    fn born_moments(&self, ws: &mut Workspace, h: f64) {
        let n = ws.n;
        let nh = ws.harm[0].len();
        let (full, reduced) = interpolation_maps();
        let mut coef = vec![[0.0; NODES]; nh];
        let mut coef_lo = vec![[0.0; NODES]; nh];
        for j in 0..nh {
            for p in 0..NODES {
                let (mut a, mut b) = (0.0, 0.0);
                for node in 0..NODES {
                    let v = ws.harm[node][j];
                    a += full[p][node] * v;
                    b += reduced[p][node] * v;
                }
                coef[j][p] = a;
                coef_lo[j][p] = b;
            }
        }
        let k = &self.grid.k_left;
        let mut mom = [c64::new(0.0, 0.0); NODES];
        let mut series = vec![[0.0; SERIES_TERMS]; nh];
        let mut series_lo = vec![[0.0; SERIES_TERMS]; nh];
        for s in 1..7 {
            let c = C[s];
            let mut cp = [0.0; NODES];
            let mut acc = c;
            for v in cp.iter_mut() {
                *v = acc;
                acc *= c;
            }
            // Σ_p c^{p+1} a_p μ_p(z) = Σ_m z^m/m! · g_m with g_m = Σ_p c^{p+1} a_p/(p+m+1)
            for harm in 0..nh {
                for m in 0..SERIES_TERMS {
                    let (mut g, mut g_lo) = (0.0, 0.0);
                    for p in 0..NODES {
                        let d = cp[p] / (p + m + 1) as f64;
                        g += d * coef[harm][p];
                        g_lo += d * coef_lo[harm][p];
                    }
                    series[harm][m] = g;
                    series_lo[harm][m] = g_lo;
                }
            }
            for jcol in 0..n {
                for i in 0..=jcol {
                    if !(ws.hard[i] && ws.hard[jcol]) {
                        for (a, b) in [(i, jcol), (jcol, i)] {
                            ws.born[s].col_as_slice_mut(b)[a] = c64::new(0.0, 0.0);
                            if s == 6 {
                                ws.born_err.col_as_slice_mut(b)[a] = c64::new(0.0, 0.0);
                            }
                        }
                        continue;
                    }
                    let harm = jcol - i;
                    let z = c64::i() * (k[i] + k[jcol]) * (c * h);
                    let (sum, sum_lo) = if z.norm() <= SERIES_RADIUS {
                        // Horner in z/m
                        let (g, g_lo) = (&series[harm], &series_lo[harm]);
                        let mut a = c64::new(g[SERIES_TERMS - 1], 0.0);
                        let mut b = c64::new(g_lo[SERIES_TERMS - 1], 0.0);
                        for m in (1..SERIES_TERMS).rev() {
                            let zm = z / m as f64;
                            a = a * zm + g[m - 1];
                            b = b * zm + g_lo[m - 1];
                        }
                        (a, b)
                    } else {
                        let ez = ws.ex[s][i] * ws.ex[s][jcol];
                        exponential_moments(z, ez, &mut mom);
                        let mut sum = c64::new(0.0, 0.0);
                        let mut sum_lo = c64::new(0.0, 0.0);
                        for p in 0..NODES {
                            let m = mom[p] * cp[p];
                            sum += m * coef[harm][p];
                            sum_lo += m * coef_lo[harm][p];
                        }
                        (sum, sum_lo)
                    };
                    for (a, b) in [(i, jcol), (jcol, i)] {
                        let f = -self.matching[a] * h;
                        ws.born[s].col_as_slice_mut(b)[a] = f * sum;
                        if s == 6 {
                            ws.born_err.col_as_slice_mut(b)[a] = f * (sum - sum_lo);
                        }
                    }
                }
            }
        }
    }

    fn failure(&self, y: f64, reason: IntegrationFailure, r: &Mat<c64>) -> Error {
        let n = r.nrows();
        let mut worst = (0usize, 0usize);
        let mut big = -1.0;
        for j in 0..n {
            for i in 0..n {
                let v = r.col_as_slice(j)[i];
                let m = if v.re.is_finite() && v.im.is_finite() {
                    v.norm()
                } else {
                    f64::INFINITY
                };
                if m > big {
                    big = m;
                    worst = (i, j);
                }
            }
        }
        Error::Integration {
            y,
            reason,
            worst: (self.grid.sideband(worst.0), self.grid.sideband(worst.1)),
        }
    }
}

fn axpy(dst: &mut Mat<c64>, f: c64, src: &Mat<c64>) {
    for j in 0..dst.ncols() {
        let s = src.col_as_slice(j);
        for (d, v) in dst.col_as_slice_mut(j).iter_mut().zip(s) {
            *d += f * v;
        }
    }
}

fn finite(m: &Mat<c64>) -> bool {
    (0..m.ncols()).all(|j| m.col_as_slice(j).iter().all(|v| v.re.is_finite() && v.im.is_finite()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_maps_reproduce_monomials() {
        let (full, reduced) = interpolation_maps();
        for deg in 0..NODES {
            let vals: Vec<f64> = (0..NODES).map(|k| C[k].powi(deg as i32)).collect();
            for p in 0..NODES {
                let c: f64 = (0..NODES).map(|k| full[p][k] * vals[k]).sum();
                let expect = if p == deg { 1.0 } else { 0.0 };
                assert!((c - expect).abs() < 1e-10, "deg {deg} p {p}: {c}");
                if deg < NODES - 1 {
                    let c: f64 = (0..NODES).map(|k| reduced[p][k] * vals[k]).sum();
                    assert!((c - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn exponential_moments_match_quadrature() {
        let rule = crate::quadrature::GaussLegendre::new(40);
        for z in [
            c64::new(0.3, -0.8),
            c64::new(0.0, 1.99),
            c64::new(0.0, 2.01),
            c64::new(-3.0, 17.0),
            c64::new(25.0, 0.0),
            c64::new(0.0, -60.0),
        ] {
            let mut m = [c64::new(0.0, 0.0); NODES];
            exponential_moments(z, z.exp(), &mut m);
            for (p, v) in m.iter().enumerate() {
                let re = rule.integrate(0.0, 1.0, |u| (u.powi(p as i32) * (z * u).exp()).re);
                let im = rule.integrate(0.0, 1.0, |u| (u.powi(p as i32) * (z * u).exp()).im);
                let exact = c64::new(re, im);
                assert!((v - exact).norm() < 1e-12 * exact.norm().max(1.0), "z={z} p={p}");
            }
        }
    }
}
