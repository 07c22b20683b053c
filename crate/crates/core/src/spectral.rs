//! Per-mode radial operators.
//!
//! The `m`-th angular mode of `(i∇ + A)² - V` in the Poincaré gauge reduces to
//! the form `q_m[u] = ∫ (|u_t|² + (m - α)²|u|² - e^{2t} V |u|²) dt`, with
//! Dirichlet conditions at the ends of a finite window. The form is
//! discretized by continuous piecewise-linear elements in the stretched
//! coordinate `s` and then rescaled by the diagonal congruence
//! `diag(e^{g_i/2})`, which leaves the inertia untouched while keeping every
//! entry in floating-point range at extreme depths. Galerkin discretization
//! makes every discrete eigenvalue an upper bound for its continuum
//! counterpart, so counts never exceed the Dirichlet count on the window and
//! Rayleigh minima decrease under nested refinement.

use rayon::prelude::*;
use serde::Serialize;

use crate::coords::{scaled_square, stretch, Point};
use crate::error::{Error, Result, Warning};
use crate::profiles::{Potential, RadialField};
use crate::quad::{bisect, integrate, integrate_with_breaks, Tolerance, GAUSS3_NODES, GAUSS3_WEIGHTS};
use crate::weights::Weight;

/// Nodes of a Dirichlet grid in the stretched coordinate `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub nodes: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    /// Depth `ln|t|` of the lower end, when it lies below `t = -1`.
    pub depth_min: Option<f64>,
    pub max_step_s: f64,
}

impl Grid {
    pub fn from_s(mut s: Vec<f64>) -> Result<Self> {
        if s.len() < 3 {
            return Err(Error::ParameterError("a grid needs at least three nodes".into()));
        }
        if s.iter().any(|x| !x.is_finite()) || s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::ParameterError("grid nodes must be finite and strictly increasing".into()));
        }
        let (lo, hi) = (s[0], s[s.len() - 1]);
        if lo < -1.0 && hi > -1.0 && !s.contains(&-1.0) {
            let k = s.partition_point(|&x| x < -1.0);
            s.insert(k, -1.0);
        }
        Ok(Self { s })
    }

    /// `n` nodes uniform in `t`.
    pub fn uniform_t(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        if !(t_max > t_min) || n < 3 {
            return Err(Error::ParameterError("uniform grid needs t_max > t_min and n >= 3".into()));
        }
        let s = (0..n).map(|k| stretch(t_min + (t_max - t_min) * k as f64 / (n - 1) as f64)).collect();
        Self::from_s(s)
    }

    /// `n` nodes uniform in `s`; geometric in `|t|` below `t = -1`.
    pub fn uniform_s(s_min: f64, s_max: f64, n: usize) -> Result<Self> {
        if !(s_max > s_min) || n < 3 {
            return Err(Error::ParameterError("uniform grid needs s_max > s_min and n >= 3".into()));
        }
        let s = (0..n).map(|k| s_min + (s_max - s_min) * k as f64 / (n - 1) as f64).collect();
        Self::from_s(s)
    }

    /// `n` nodes between `t_min` and `t_max`, geometric in `|t|` where `t < -1`.
    pub fn geometric_t(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        Self::uniform_s(stretch(t_min), stretch(t_max), n)
    }

    /// Nodes from `s_min` to `s_max` with local spacing `step(s)`.
    pub fn graded<F: Fn(f64) -> f64>(s_min: f64, s_max: f64, step: F) -> Result<Self> {
        if !(s_max > s_min) {
            return Err(Error::ParameterError("graded grid needs s_max > s_min".into()));
        }
        let mut s = vec![s_min];
        let mut x = s_min;
        while x < s_max {
            let h = step(x);
            if !(h > 0.0) {
                return Err(Error::ParameterError(format!("non-positive grid step at s = {x}")));
            }
            x = (x + h).min(s_max);
            if s_max - x < 0.25 * h {
                x = s_max;
            }
            s.push(x);
        }
        if s.len() < 3 {
            let last = s.pop().unwrap();
            s.push(0.5 * (s_min + last));
            s.push(last);
        }
        Self::from_s(s)
    }

    /// Nested refinement: one midpoint per cell.
    pub fn refined(&self) -> Self {
        let mut s = Vec::with_capacity(2 * self.s.len() - 1);
        for w in self.s.windows(2) {
            s.push(w[0]);
            s.push(0.5 * (w[0] + w[1]));
        }
        s.push(*self.s.last().unwrap());
        Self { s }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_min(&self) -> f64 {
        self.s[0]
    }

    pub fn s_max(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        self.s.iter().map(|&s| Point::from_s(s).t).collect()
    }

    pub fn max_step(&self) -> f64 {
        self.s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn meta(&self) -> GridMeta {
        let lo = Point::from_s(self.s_min());
        GridMeta {
            nodes: self.len(),
            s_min: self.s_min(),
            s_max: self.s_max(),
            t_min: lo.t,
            t_max: Point::from_s(self.s_max()).t,
            depth_min: lo.depth(),
            max_step_s: self.max_step(),
        }
    }
}

/// Symmetric tridiagonal matrix on the interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeOperator {
    pub m: i64,
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl ModeOperator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }
}

#[derive(Debug, Clone, Copy)]
struct QuadPoint {
    g: f64,
    alpha: f64,
    /// `e^{2g} e^{2t} V`.
    pot: f64,
    /// Basis values of the left and right hat functions.
    phi: [f64; 2],
    /// Gauss weight times half the element length.
    w: f64,
}

/// Coefficient samples of one grid, reusable across modes and couplings.
pub struct ModeData {
    grid: Grid,
    g_nodes: Vec<f64>,
    quad: Vec<[QuadPoint; 3]>,
}

impl ModeData {
    pub fn new(field: &RadialField, v: &Potential, grid: &Grid) -> Result<Self> {
        field.validate()?;
        v.validate()?;
        let s = grid.nodes();
        let g_nodes: Vec<f64> = s.iter().map(|&x| Point::from_s(x).g).collect();
        let quad = s
            .par_windows(2)
            .map(|w| -> Result<[QuadPoint; 3]> {
                let (a, b) = (w[0], w[1]);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                let mut out = [QuadPoint { g: 0.0, alpha: 0.0, pot: 0.0, phi: [0.0; 2], w: 0.0 }; 3];
                for q in 0..3 {
                    let x = mid + half * GAUSS3_NODES[q];
                    let p = Point::from_s(x);
                    let xi = (x - a) / (b - a);
                    out[q] = QuadPoint {
                        g: p.g,
                        alpha: field.alpha(&p)?,
                        pot: v.coupled_jac(&p),
                        phi: [1.0 - xi, xi],
                        w: GAUSS3_WEIGHTS[q] * half,
                    };
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: grid.clone(), g_nodes, quad })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Tridiagonal assembly of `∫ e^{-g}(|u'|² + c|u|²) ds` on the interior
    /// nodes after congruence; `c` is indexed by element and Gauss point.
    fn assemble<F: Fn(usize, usize, &QuadPoint) -> f64>(&self, stiffness: bool, coeff: F) -> ModeOperator {
        let n = self.g_nodes.len();
        let mut d = vec![0.0; n];
        let mut o = vec![0.0; n - 1];
        let s = self.grid.nodes();
        for (e, pts) in self.quad.iter().enumerate() {
            let h = s[e + 1] - s[e];
            let (gi, gj) = (self.g_nodes[e], self.g_nodes[e + 1]);
            for (k, q) in pts.iter().enumerate() {
                let fii = (gi - q.g).exp();
                let fjj = (gj - q.g).exp();
                let fij = (0.5 * (gi + gj) - q.g).exp();
                if stiffness {
                    let w = q.w / (h * h);
                    d[e] += w * fii;
                    d[e + 1] += w * fjj;
                    o[e] -= w * fij;
                }
                let c = coeff(e, k, q);
                if c != 0.0 {
                    let [pi, pj] = q.phi;
                    d[e] += q.w * c * pi * pi * fii;
                    d[e + 1] += q.w * c * pj * pj * fjj;
                    o[e] += q.w * c * pi * pj * fij;
                }
            }
        }
        ModeOperator { m: 0, diag: d[1..n - 1].to_vec(), offdiag: o[1..n - 2].to_vec() }
    }

    /// Operator of mode `m` for the coupling `λ`.
    pub fn operator(&self, m: i64, lambda: f64) -> ModeOperator {
        let mf = m as f64;
        let mut op = self.assemble(true, |_, _, q| {
            let pot = if lambda == 0.0 { 0.0 } else { lambda * q.pot };
            scaled_square(mf - q.alpha, q.g) - pot
        });
        op.m = m;
        op
    }

    /// Operator with the magnetic term dropped.
    pub fn operator_nonmagnetic(&self, lambda: f64) -> ModeOperator {
        self.assemble(true, |_, _, q| -lambda * q.pot)
    }

    /// Mass matrix of the weight.
    pub fn mass(&self, w: &Weight) -> Result<ModeOperator> {
        let s = self.grid.nodes();
        let vals = (0..self.quad.len())
            .into_par_iter()
            .map(|e| {
                let mut out = [0.0; 3];
                for (q, x) in GAUSS3_NODES.iter().enumerate() {
                    let p = Point::from_s(0.5 * (s[e] + s[e + 1]) + 0.5 * (s[e + 1] - s[e]) * x);
                    out[q] = w.scaled_jac(&p)?;
                }
                Ok(out)
            })
            .collect::<Result<Vec<[f64; 3]>>>()?;
        Ok(self.assemble(false, |e, k, _| vals[e][k]))
    }

    /// Largest value of `α + √(λW)` and `√(λW) - α` over quadrature points.
    fn truncation_extent(&self, lambda: f64) -> (f64, f64) {
        let mut up = f64::NEG_INFINITY;
        let mut down = f64::NEG_INFINITY;
        for q in self.quad.iter().flatten() {
            if q.pot * lambda <= 0.0 {
                continue;
            }
            let root = ((q.pot * lambda).ln() * 0.5 - q.g).exp();
            up = up.max(q.alpha + root);
            down = down.max(root - q.alpha);
        }
        (up, down)
    }

    /// Margin `(A - B)/A` at the two ends, minimized over `|m| <= m_max`.
    fn forbidden_margin(&self, lambda: f64, m_max: i64) -> f64 {
        let mut worst = f64::INFINITY;
        let ends = [self.quad.first().map(|p| p[0]), self.quad.last().map(|p| p[2])];
        for q in ends.into_iter().flatten() {
            let b = lambda * q.pot;
            if b <= 0.0 {
                continue;
            }
            let langer = if q.g > 0.0 { 0.25 } else { 0.0 };
            for m in -m_max..=m_max {
                let a = scaled_square(m as f64 - q.alpha, q.g) + langer;
                let margin = if a > 0.0 { (a - b) / a } else { f64::NEG_INFINITY };
                worst = worst.min(margin);
            }
        }
        if worst == f64::INFINITY {
            1.0
        } else {
            worst
        }
    }
}

/// Build the mode operator of `q_m` for the potential `V` on a grid.
pub fn assemble_mode(field: &RadialField, v: &Potential, m: i64, grid: &Grid) -> Result<ModeOperator> {
    Ok(ModeData::new(field, v, grid)?.operator(m, 1.0))
}

/// Negative-eigenvalue count with any zero-pivot events.
pub fn inertia(op: &ModeOperator) -> (usize, Vec<Warning>) {
    ldl_negatives(&op.diag, &op.offdiag, |_| 0.0, |_| 0.0, 0.0)
}

/// Number of negative eigenvalues of a mode operator.
pub fn count_negative(op: &ModeOperator) -> usize {
    inertia(op).0
}

fn ldl_negatives<D: Fn(usize) -> f64, O: Fn(usize) -> f64>(
    diag: &[f64],
    off: &[f64],
    mass_d: D,
    mass_o: O,
    mu: f64,
) -> (usize, Vec<Warning>) {
    let scale = diag.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    let eps = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut warnings = Vec::new();
    let mut count = 0;
    let mut prev = 1.0;
    for i in 0..diag.len() {
        let a = diag[i] - mu * mass_d(i);
        let mut d = if i == 0 {
            a
        } else {
            let b = off[i - 1] - mu * mass_o(i - 1);
            a - b * (b / prev)
        };
        if d == 0.0 {
            d = eps;
            warnings.push(Warning::ZeroPivot { index: i, perturbation: eps });
        }
        if d < 0.0 {
            count += 1;
        }
        prev = d;
    }
    (count, warnings)
}

/// Number of eigenvalues of `K u = μ M u` below `mu`.
fn count_below(k: &ModeOperator, m: &ModeOperator, mu: f64) -> usize {
    ldl_negatives(&k.diag, &k.offdiag, |i| m.diag[i], |i| m.offdiag[i], mu).0
}

/// Smallest generalized eigenvalue of `K u = μ M u` by inertia bisection.
pub fn smallest_generalized(k: &ModeOperator, m: &ModeOperator, rel_tol: f64) -> Result<f64> {
    if count_below(k, m, 0.0) > 0 {
        return Err(Error::PreconditionError("stiffness matrix is not positive".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    if count_below(k, m, hi) > 0 {
        while count_below(k, m, 0.5 * hi) > 0 {
            hi *= 0.5;
            if hi < 1e-300 {
                return Ok(0.0);
            }
        }
        lo = 0.5 * hi;
    } else {
        while count_below(k, m, hi) == 0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::PreconditionError("weight vanishes on the grid".into()));
            }
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if count_below(k, m, mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Relative bisection tolerance on Hardy minima.
pub const HARDY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyEstimate {
    /// `(m, min_u q_m[u] / ∫ w |u|²)` on the finest grid.
    pub per_mode_minima: Vec<(i64, f64)>,
    pub mu_star: f64,
    pub grid_meta: GridMeta,
    /// `(nodes, mu_star)` for the grid and its nested refinement.
    pub refinement_history: Vec<(usize, f64)>,
}

fn hardy_on_grid(field: &RadialField, w: &Weight, grid: &Grid, modes: &[i64]) -> Result<Vec<(i64, f64)>> {
    let data = ModeData::new(field, &Potential::Zero, grid)?;
    let mass = data.mass(w)?;
    modes
        .par_iter()
        .map(|&m| Ok((m, smallest_generalized(&data.operator(m, 0.0), &mass, HARDY_REL_TOL)?)))
        .collect()
}

/// Best Hardy constant for the weight `w` over the given modes.
pub fn hardy_constant(
    field: &RadialField,
    w: &Weight,
    grid: &Grid,
    m_range: std::ops::RangeInclusive<i64>,
) -> Result<HardyEstimate> {
    let modes: Vec<i64> = m_range.collect();
    if modes.is_empty() {
        return Err(Error::ParameterError("empty mode range".into()));
    }
    let fine = grid.refined();
    let mut history = Vec::new();
    let mut last = Vec::new();
    for g in [grid, &fine] {
        let minima = hardy_on_grid(field, w, g, &modes)?;
        let mu = minima.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        history.push((g.len(), mu));
        last = minima;
    }
    let mu_star = history.last().unwrap().1;
    Ok(HardyEstimate { per_mode_minima: last, mu_star, grid_meta: fine.meta(), refinement_history: history })
}

/// Largest mode index that can carry negative eigenvalues at coupling `λ`.
pub const MODE_LIMIT: i64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truncation {
    pub m_max: i64,
    pub forbidden_margin: f64,
}

/// Smallest `M` with `(m - α)² >= e^{2t} V` on the grid for all `|m| > M`.
pub fn mode_truncation(field: &RadialField, v: &Potential, grid: &Grid) -> Result<i64> {
    truncate(&ModeData::new(field, v, grid)?, 1.0).map(|t| t.m_max)
}

pub(crate) fn truncate(data: &ModeData, lambda: f64) -> Result<Truncation> {
    let (up, down) = data.truncation_extent(lambda);
    let need = |x: f64| if x.is_finite() { x.ceil() - 1.0 } else { 0.0 };
    let m = need(up).max(need(down)).max(0.0);
    if m > MODE_LIMIT as f64 {
        return Err(Error::NoTruncation { needed: m, limit: MODE_LIMIT });
    }
    let m_max = m as i64;
    Ok(Truncation { m_max, forbidden_margin: data.forbidden_margin(lambda, m_max) })
}

/// `Q̂(s) = e^{2g}((m - α)² - e^{2t} V)`, the zero-energy coefficient in `s`.
fn q_hat(field: &RadialField, v: &Potential, m: f64, s: f64) -> Result<f64> {
    let p = Point::from_s(s);
    Ok(scaled_square(m - field.alpha(&p)?, p.g) - v.coupled_jac(&p))
}

const PIN_THRESHOLD: f64 = 1e8;
const PRUFER_TOL: f64 = 1e-6;

/// Zero count of the zero-energy solution on `s_range` by the modified Prüfer angle.
///
/// With the scale `e^{-g}` the angle obeys
/// `θ' = cos²θ - Q̂ sin²θ - g' sinθ cosθ`, so every zero of the solution is a
/// forward crossing of a multiple of π.
pub fn prufer_count(field: &RadialField, v: &Potential, m: i64, s_range: (f64, f64)) -> Result<usize> {
    field.validate()?;
    v.validate()?;
    let (a, b) = s_range;
    if !(b > a) {
        return Err(Error::ParameterError("Prüfer range must be increasing".into()));
    }
    let mf = m as f64;
    let mut breaks: Vec<f64> = field.kinks().into_iter().chain(v.kinks()).map(stretch).collect();
    breaks.push(-1.0);
    breaks.retain(|&x| x > a && x < b);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks.push(b);
    let rhs = |s: f64, th: f64| -> Result<f64> {
        let q = q_hat(field, v, mf, s)?;
        let (sn, cs) = th.sin_cos();
        let drift = if s < -1.0 { sn * cs } else { 0.0 };
        Ok(cs * cs - q * sn * sn + drift)
    };
    let mut theta = 0.0f64;
    let mut s = a;
    let mut h: f64 = 1e-3;
    let mut pin_step: f64 = 1e-3;
    for &end in &breaks {
        while s < end {
            h = h.min(end - s);
            let q = q_hat(field, v, mf, s)?;
            if q > PIN_THRESHOLD {
                let star = (1.0 / q.sqrt()).atan();
                let k = ((theta + star) / std::f64::consts::PI).floor();
                theta = k * std::f64::consts::PI + star;
                // stride through the forbidden region while it stays forbidden
                let mut step = pin_step.min(end - s);
                while step > 1e-3 && q_hat(field, v, mf, s + step)? <= PIN_THRESHOLD {
                    step *= 0.5;
                }
                pin_step = if step >= pin_step { 2.0 * pin_step } else { step.max(1e-3) };
                s += step.max(1e-3).min(end - s);
                continue;
            }
            pin_step = 1e-3;
            let (next, err) = dopri_step(&rhs, s, theta, h)?;
            if err <= PRUFER_TOL {
                s += h;
                theta = next;
                if end - s < 1e-14 * (1.0 + end.abs()) {
                    s = end;
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * (PRUFER_TOL / err).powf(0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h < 1e-12 * (1.0 + s.abs()) {
                return Err(Error::StiffnessFailure { s });
            }
        }
    }
    Ok((theta / std::f64::consts::PI).floor().max(0.0) as usize)
}

fn dopri_step<F: Fn(f64, f64) -> Result<f64>>(f: &F, s: f64, y: f64, h: f64) -> Result<(f64, f64)> {
    let k1 = f(s, y)?;
    let k2 = f(s + h / 5.0, y + h * k1 / 5.0)?;
    let k3 = f(s + 3.0 * h / 10.0, y + h * (3.0 * k1 + 9.0 * k2) / 40.0)?;
    let k4 = f(s + 4.0 * h / 5.0, y + h * (44.0 * k1 / 45.0 - 56.0 * k2 / 15.0 + 32.0 * k3 / 9.0))?;
    let k5 = f(
        s + 8.0 * h / 9.0,
        y + h * (19372.0 * k1 / 6561.0 - 25360.0 * k2 / 2187.0 + 64448.0 * k3 / 6561.0 - 212.0 * k4 / 729.0),
    )?;
    let k6 = f(
        s + h,
        y + h
            * (9017.0 * k1 / 3168.0 - 355.0 * k2 / 33.0 + 46732.0 * k3 / 5247.0 + 49.0 * k4 / 176.0
                - 5103.0 * k5 / 18656.0),
    )?;
    let y5 = y + h * (35.0 * k1 / 384.0 + 500.0 * k3 / 1113.0 + 125.0 * k4 / 192.0 - 2187.0 * k5 / 6784.0
        + 11.0 * k6 / 84.0);
    let k7 = f(s + h, y5)?;
    let y4 = y + h
        * (5179.0 * k1 / 57600.0 + 7571.0 * k3 / 16695.0 + 393.0 * k4 / 640.0 - 92097.0 * k5 / 339200.0
            + 187.0 * k6 / 2100.0
            + k7 / 40.0);
    Ok((y5, (y5 - y4).abs()))
}

/// Phase integral `(1/π) ∫ √max(k², 0)` of mode `m` at coupling `λ`.
///
/// Above `t = -1` the wavenumber is `k² = λ e^{2t} V - (m - α)²` per unit
/// `t`. With `liouville` set, the region below `t = -1` is written in the
/// depth `ℓ = ln|t|`, where the Liouville normal form of the mode equation
/// reads `k² = λ t² e^{2t} V - t²(m - α)² - 1/4` per unit `ℓ`; without it the
/// first expression is used throughout.
pub fn phase_integral(field: &RadialField, v: &Potential, m: i64, lambda: f64, liouville: bool) -> Result<f64> {
    field.validate()?;
    v.validate()?;
    if lambda <= 0.0 || v.is_zero() {
        return Ok(0.0);
    }
    let upper = v.support_upper();
    if !upper.is_finite() {
        return Ok(0.0);
    }
    let mf = m as f64;
    let deep_shift = if liouville { 0.25 } else { 0.0 };
    // k² per unit s, which is per unit t above -1 and per unit ℓ below
    let k2 = |s: f64| -> Result<f64> {
        let p = Point::from_s(s);
        let base = lambda * v.coupled_jac(&p) - scaled_square(mf - field.alpha(&p)?, p.g);
        Ok(if p.is_deep() { base - deep_shift } else { base })
    };
    let s_hi = stretch(upper) + 1e-9;
    let mut nodes: Vec<f64> = Vec::new();
    // depth ℓ sampled geometrically over (1e-6, 1e300), shallow part uniformly
    let n_deep = 6000;
    for k in 0..n_deep {
        let w = 300.0 * std::f64::consts::LN_10 * (1.0 - k as f64 / n_deep as f64)
            - 6.0 * std::f64::consts::LN_10 * (k as f64 / n_deep as f64);
        nodes.push(-1.0 - w.exp());
    }
    if s_hi > -1.0 {
        let n = ((s_hi + 1.0) / 0.005).ceil().max(2.0) as usize;
        for k in 0..=n {
            nodes.push(-1.0 + (s_hi + 1.0) * k as f64 / n as f64);
        }
    }
    for kink in field.kinks().into_iter().chain(v.kinks()) {
        let sk = stretch(kink);
        if sk > nodes[0] && sk < s_hi {
            nodes.push(sk);
        }
    }
    nodes.retain(|&s| s < s_hi);
    nodes.push(s_hi);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let vals: Vec<f64> = nodes.par_iter().map(|&s| k2(s)).collect::<Result<Vec<_>>>()?;
    let root = |a: f64, b: f64| bisect(|s| k2(s).unwrap_or(f64::NAN), a, b, 1e-14 * (1.0 + a.abs().max(b.abs())));
    let mut intervals = Vec::new();
    let mut open: Option<f64> = if vals[0] > 0.0 { Some(nodes[0]) } else { None };
    for i in 1..nodes.len() {
        let (inside, was) = (vals[i] > 0.0, vals[i - 1] > 0.0);
        if inside == was {
            continue;
        }
        let x = root(nodes[i - 1], nodes[i]);
        if inside {
            open = Some(x);
        } else if let Some(lo) = open.take() {
            intervals.push((lo, x));
        }
    }
    if let Some(lo) = open {
        intervals.push((lo, *nodes.last().unwrap()));
    }
    let tol = Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 4000 };
    let sqrt_k2 = |s: f64| k2(s).map(|x| x.max(0.0).sqrt()).unwrap_or(f64::NAN);
    let mut total = 0.0;
    for (a, b) in intervals {
        // deep part in ℓ near the junction and in w = ln ℓ further down
        if a < -1.0 {
            let la = -1.0 - a;
            let le = (-1.0 - b.min(-1.0)).max(0.0);
            let in_depth = |l: f64| sqrt_k2(-1.0 - l);
            if le < 1.0 {
                total += integrate(in_depth, le, la.min(1.0), tol)?.value;
            }
            if la > 1.0 {
                let f = |w: f64| in_depth(w.exp()) * w.exp();
                total += integrate(f, le.max(1.0).ln(), la.ln(), tol)?.value;
            }
        }
        if b > -1.0 {
            let start = a.max(-1.0);
            let kinks: Vec<f64> = field.kinks().into_iter().chain(v.kinks()).map(stretch).collect();
            total += integrate_with_breaks(sqrt_k2, start, b, &kinks, tol)?.value;
        }
    }
    Ok(total / std::f64::consts::PI)
}

/// Phase-integral estimate of the mode-`m` count, before rounding.
pub fn phase_integral_count(field: &RadialField, v: &Potential, m: i64, lambda: f64) -> Result<f64> {
    phase_integral(field, v, m, lambda, true)
}
