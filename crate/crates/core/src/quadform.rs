//! Quadratic-form evaluation on single angular modes and the test-function
//! probes built on it.
//!
//! For `u(r, θ) = v(ln r) e^{imθ}` the magnetic form and the weighted norm are
//! `Q = 2π ∫ (|v'|² + (m - α)²|v|²) dt` and `2π ∫ e^{2t} w |v|² dt`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coords::{stretch, Point};
use crate::error::{Error, Result};
use crate::profiles::RadialField;
use crate::quad::{integrate_with_breaks, linear_fit, Tolerance};
use crate::spectral::Grid;
use crate::weights::Weight;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Width of the linear ramp that closes `UAlpha` at `r = 1`.
pub const UALPHA_RAMP: f64 = 0.01;
/// Width of the linear ramp that opens `UN` at `r = 1`.
pub const UN_RAMP: f64 = 0.01;

/// Radial profile of a single-mode test function `v(t) e^{imθ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `|t|^α` on `[t_cut, -ε]`, closed by linear ramps on `[2 t_cut, t_cut]`
    /// and `[-ε, 0]`; mode 0.
    UAlpha { alpha: f64, t_cut: f64 },
    /// `t^{α/2}` (linear on `[0, ε]`) times `(ln n - t)/ln n` on `[0, ln n]`.
    UN { n: u64, alpha_exp: f64, m: i64 },
    /// Plateau of height one on `[t_lo + edge, t_hi - edge]` with `sin²` shoulders.
    ModeBump { m: i64, t_lo: f64, t_hi: f64, edge: f64 },
    /// Piecewise-linear complex amplitude.
    Custom { m: i64, t: Vec<f64>, re: Vec<f64>, im: Vec<f64> },
}

impl TestFunction {
    pub fn u_alpha(alpha: f64, t_cut: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::ParameterError(format!("UAlpha needs 0 < alpha < 1/2, got {alpha}")));
        }
        if !(t_cut < -UALPHA_RAMP) {
            return Err(Error::ParameterError(format!("UAlpha cutoff must lie below -{UALPHA_RAMP}")));
        }
        Ok(Self::UAlpha { alpha, t_cut })
    }

    pub fn u_n(n: u64, alpha_exp: f64, m: i64) -> Result<Self> {
        if n < 2 || !(alpha_exp > 0.0 && alpha_exp < 1.0) {
            return Err(Error::ParameterError("UN needs n >= 2 and 0 < alpha_exp < 1".into()));
        }
        if (n as f64).ln() <= UN_RAMP {
            return Err(Error::ParameterError("UN support shorter than its ramp".into()));
        }
        Ok(Self::UN { n, alpha_exp, m })
    }

    pub fn mode_bump(m: i64, t_lo: f64, t_hi: f64, edge: f64) -> Result<Self> {
        if !(t_hi > t_lo && edge > 0.0 && 2.0 * edge <= t_hi - t_lo) {
            return Err(Error::ParameterError("ModeBump needs t_lo < t_hi and 0 < edge <= (t_hi - t_lo)/2".into()));
        }
        Ok(Self::ModeBump { m, t_lo, t_hi, edge })
    }

    pub fn custom(m: i64, t: Vec<f64>, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || re.len() != t.len() || im.len() != t.len() {
            return Err(Error::ParameterError("custom test function needs matching columns".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::ParameterError("custom test function t must increase".into()));
        }
        Ok(Self::Custom { m, t, re, im })
    }

    pub fn m(&self) -> i64 {
        match self {
            Self::UAlpha { .. } => 0,
            Self::UN { m, .. } | Self::ModeBump { m, .. } | Self::Custom { m, .. } => *m,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::UAlpha { t_cut, .. } => (2.0 * t_cut, 0.0),
            Self::UN { n, .. } => (0.0, (*n as f64).ln()),
            Self::ModeBump { t_lo, t_hi, .. } => (*t_lo, *t_hi),
            Self::Custom { t, .. } => (t[0], t[t.len() - 1]),
        }
    }

    /// Points where the profile is only piecewise smooth.
    pub fn breaks(&self) -> Vec<f64> {
        match self {
            Self::UAlpha { t_cut, .. } => vec![2.0 * t_cut, *t_cut, -UALPHA_RAMP, 0.0],
            Self::UN { n, .. } => vec![0.0, UN_RAMP, (*n as f64).ln()],
            Self::ModeBump { t_lo, t_hi, edge, .. } => vec![*t_lo, t_lo + edge, t_hi - edge, *t_hi],
            Self::Custom { t, .. } => t.clone(),
        }
    }

    /// `(v(t), v'(t))`.
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        }
        let real = |v: f64, d: f64| (Complex64::new(v, 0.0), Complex64::new(d, 0.0));
        match self {
            Self::UAlpha { alpha, t_cut } => {
                let k = -t_cut;
                if t < *t_cut {
                    let top = k.powf(*alpha);
                    real(top * (t - 2.0 * t_cut) / k, top / k)
                } else if t <= -UALPHA_RAMP {
                    let x = -t;
                    real(x.powf(*alpha), -alpha * x.powf(alpha - 1.0))
                } else {
                    let top = UALPHA_RAMP.powf(*alpha);
                    real(-top * t / UALPHA_RAMP, -top / UALPHA_RAMP)
                }
            }
            Self::UN { n, alpha_exp, .. } => {
                let l = (*n as f64).ln();
                let a = 0.5 * alpha_exp;
                let (g, dg) = if t < UN_RAMP {
                    let c = UN_RAMP.powf(a - 1.0);
                    (c * t, c)
                } else {
                    (t.powf(a), a * t.powf(a - 1.0))
                };
                let cut = (l - t) / l;
                real(g * cut, dg * cut - g / l)
            }
            Self::ModeBump { t_lo, t_hi, edge, .. } => {
                let half_pi = std::f64::consts::FRAC_PI_2;
                if t < t_lo + edge {
                    let x = half_pi * (t - t_lo) / edge;
                    real(x.sin().powi(2), 2.0 * x.sin() * x.cos() * half_pi / edge)
                } else if t > t_hi - edge {
                    let x = half_pi * (t_hi - t) / edge;
                    real(x.sin().powi(2), -2.0 * x.sin() * x.cos() * half_pi / edge)
                } else {
                    real(1.0, 0.0)
                }
            }
            Self::Custom { t: ts, re, im, .. } => {
                let i = ts.partition_point(|&x| x <= t).clamp(1, ts.len() - 1) - 1;
                let h = ts[i + 1] - ts[i];
                let w = (t - ts[i]) / h;
                let v = Complex64::new(re[i] * (1.0 - w) + re[i + 1] * w, im[i] * (1.0 - w) + im[i + 1] * w);
                let d = Complex64::new((re[i + 1] - re[i]) / h, (im[i + 1] - im[i]) / h);
                (v, d)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadFormValue {
    /// `2π ∫ |v'|² dt`.
    pub radial_part: f64,
    /// `2π ∫ (m - α)² |v|² dt`.
    pub angular_part: f64,
    pub total: f64,
}

const RICHARDSON_TOL: f64 = 1e-6;
const MAX_HALVINGS: usize = 14;

/// Composite trapezoid on `nodes`, halved until two levels agree.
///
/// Nodes listed in `breaks` split the range into pieces; endpoint values of
/// each piece are taken from inside the piece so jumps in the derivative
/// cost nothing.
fn richardson<F: Fn(f64) -> Result<[f64; 2]> + Sync>(f: F, mut nodes: Vec<f64>, breaks: &[f64]) -> Result<[f64; 2]> {
    let eval = |nodes: &[f64]| -> Result<[f64; 2]> {
        let n = nodes.len();
        let vals = (0..n)
            .into_par_iter()
            .map(|i| {
                let t = nodes[i];
                let left = if i > 0 { nodes[i - 1] } else { t };
                let right = if i + 1 < n { nodes[i + 1] } else { t };
                if i > 0 && i + 1 < n && breaks.contains(&t) {
                    let a = f(t - 1e-12 * (t - left))?;
                    let b = f(t + 1e-12 * (right - t))?;
                    Ok((a, b))
                } else {
                    let v = f(t)?;
                    Ok((v, v))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut acc = [0.0; 2];
        for i in 1..n {
            let h = 0.5 * (nodes[i] - nodes[i - 1]);
            for (c, a) in acc.iter_mut().enumerate() {
                *a += h * (vals[i].0[c] + vals[i - 1].1[c]);
            }
        }
        Ok(acc)
    };
    let mut prev = eval(&nodes)?;
    for _ in 0..MAX_HALVINGS {
        let mut finer = Vec::with_capacity(2 * nodes.len());
        for w in nodes.windows(2) {
            finer.push(w[0]);
            finer.push(0.5 * (w[0] + w[1]));
        }
        finer.push(*nodes.last().unwrap());
        nodes = finer;
        let next = eval(&nodes)?;
        let total = next[0] + next[1];
        let diff = (next[0] - prev[0]).abs() + (next[1] - prev[1]).abs();
        if diff <= RICHARDSON_TOL * total.abs() || diff <= 1e-300 {
            return Ok(next);
        }
        prev = next;
    }
    let total = prev[0] + prev[1];
    Err(Error::QuadratureFailure { estimate: total, error: f64::NAN })
}

fn support_nodes(u: &TestFunction, grid: &Grid) -> Result<Vec<f64>> {
    let (lo, hi) = u.support();
    let (g_lo, g_hi) = (Point::from_s(grid.s_min()).t, Point::from_s(grid.s_max()).t);
    let slack = |x: f64| 1e-12 * (1.0 + x.abs());
    if lo < g_lo - slack(g_lo) || hi > g_hi + slack(g_hi) {
        return Err(Error::SupportError { lo, hi, grid_lo: g_lo, grid_hi: g_hi });
    }
    let mut nodes: Vec<f64> = grid.t_nodes().into_iter().filter(|t| *t >= lo && *t <= hi).collect();
    nodes.extend(u.breaks().into_iter().filter(|t| *t >= lo && *t <= hi));
    nodes.push(lo);
    nodes.push(hi);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    Ok(nodes)
}

/// Single-mode magnetic form `Q_A[v e^{imθ}]`.
pub fn qform(field: &RadialField, u: &TestFunction, grid: &Grid) -> Result<QuadFormValue> {
    field.validate()?;
    let nodes = support_nodes(u, grid)?;
    let breaks: Vec<f64> = u.breaks().into_iter().chain(field.kinks()).collect();
    let m = u.m() as f64;
    let [radial, angular] = richardson(
        |t| {
            let (v, d) = u.eval(t);
            let a = field.alpha(&Point::from_t(t))?;
            Ok([d.norm_sqr(), (m - a).powi(2) * v.norm_sqr()])
        },
        nodes,
        &breaks,
    )?;
    let (radial_part, angular_part) = (TWO_PI * radial, TWO_PI * angular);
    Ok(QuadFormValue { radial_part, angular_part, total: radial_part + angular_part })
}

/// `2π ∫ e^{2t} w |v|² dt`.
pub fn weighted_norm(u: &TestFunction, w: &Weight, grid: &Grid) -> Result<f64> {
    weighted_norm_below(u, w, grid, f64::INFINITY)
}

/// Weighted norm restricted to `t <= t_max`.
pub fn weighted_norm_below(u: &TestFunction, w: &Weight, grid: &Grid, t_max: f64) -> Result<f64> {
    let mut nodes = support_nodes(u, grid)?;
    let breaks: Vec<f64> = u.breaks().into_iter().chain(w.kinks()).collect();
    if t_max.is_finite() {
        nodes.retain(|t| *t <= t_max);
        if nodes.last().is_some_and(|t| *t < t_max) && u.support().1 > t_max {
            nodes.push(t_max);
        }
        if nodes.len() < 2 {
            return Ok(0.0);
        }
    }
    let [v, _] = richardson(
        |t| {
            let (val, _) = u.eval(t);
            let n = val.norm_sqr();
            Ok([if n == 0.0 { 0.0 } else { w.scaled(&Point::from_t(t))? * n }, 0.0])
        },
        nodes,
        &breaks,
    )?;
    Ok(TWO_PI * v)
}

/// Largest relative residual of `f' + f/r - f² = 1/(4 r² ln²(r/r0))` for
/// `f = -1/(2 r ln(r/r0))` over the grid radii.
pub fn check_f_identity(r0: f64, grid: &Grid) -> f64 {
    grid.t_nodes()
        .into_iter()
        .filter(|t| t.is_finite())
        .filter_map(|t| {
            let r = t.exp();
            let l = (r / r0).ln();
            if l == 0.0 {
                return None;
            }
            let f = -1.0 / (2.0 * r * l);
            let df = (l + 1.0) / (2.0 * r * r * l * l);
            let lhs = df + f / r - f * f;
            let rhs = 1.0 / (4.0 * r * r * l * l);
            Some(((lhs - rhs) / rhs).abs())
        })
        .fold(0.0, f64::max)
}

/// `½(m² + α²) <= (m - α)² <= 2(m² + α²)`, valid for `|α| <= 1/4`.
pub fn lambda_bounds_check(m: i64, alpha: f64) -> Result<bool> {
    if !(alpha.abs() <= 0.25) {
        return Err(Error::PreconditionError(format!("|alpha| = {} exceeds 1/4", alpha.abs())));
    }
    let m = m as f64;
    let s = m * m + alpha * alpha;
    let l = (m - alpha).powi(2);
    Ok(0.5 * s <= l && l <= 2.0 * s)
}

/// Nodes for `UAlpha`: geometric towards the ramp at `r = 1`.
fn u_alpha_grid(t_cut: f64) -> Result<Grid> {
    let k = -t_cut;
    let mut t: Vec<f64> = (0..=64).map(|i| 2.0 * t_cut + k * i as f64 / 64.0).collect();
    let n = 400;
    t.extend((1..=n).map(|i| -k * (UALPHA_RAMP / k).powf(i as f64 / n as f64)));
    t.extend((1..=4).map(|i| -UALPHA_RAMP + UALPHA_RAMP * i as f64 / 4.0));
    let mut s: Vec<f64> = t.into_iter().map(stretch).collect();
    s.dedup();
    Grid::from_s(s)
}

/// Nodes for `UN`: geometric away from `r = 1`.
fn u_n_grid(log_n: f64) -> Result<Grid> {
    let mut t: Vec<f64> = (0..=4).map(|i| UN_RAMP * i as f64 / 4.0).collect();
    let n = 400;
    t.extend((1..=n).map(|i| UN_RAMP * (log_n / UN_RAMP).powf(i as f64 / n as f64)));
    Grid::from_s(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub cut: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroProbe {
    pub rows: Vec<ProbeRow>,
    /// Least-squares slope of `ln ratio` against `ln k`.
    pub raw_slope: f64,
    /// Slope of `ln(ratio_{i+1} - ratio_i)` against `ln k_{i+1}`; `None`
    /// when the ratio stops increasing.
    pub growth_exponent: Option<f64>,
    /// Whether `(b - 1)/2 < α`, the regime where the weighted norm diverges.
    pub divergent_regime: bool,
}

/// `‖u_α‖²_{w_b, B_{1/e}} / Q_A[u_α]` along the inner cutoffs `t_cut = -k`.
pub fn hardy_probe_at_zero(field: &RadialField, b: f64, alpha: f64, cut_list: &[f64]) -> Result<ZeroProbe> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::ParameterError(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if cut_list.len() < 2 || cut_list.iter().any(|k| !(*k > 1.0)) {
        return Err(Error::ParameterError("need at least two cutoffs k > 1".into()));
    }
    let w = Weight::LogPower { b };
    let rows = cut_list
        .par_iter()
        .map(|&k| {
            let u = TestFunction::u_alpha(alpha, -k)?;
            let grid = u_alpha_grid(-k)?;
            let numerator = weighted_norm_below(&u, &w, &grid, -1.0)?;
            let denominator = qform(field, &u, &grid)?.total;
            Ok(ProbeRow { cut: k, numerator, denominator, ratio: numerator / denominator })
        })
        .collect::<Result<Vec<_>>>()?;
    let lk: Vec<f64> = rows.iter().map(|r| r.cut.ln()).collect();
    let lr: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
    let raw_slope = linear_fit(&lk, &lr).0;
    let growth_exponent = growth_exponent(&rows);
    Ok(ZeroProbe { rows, raw_slope, growth_exponent, divergent_regime: (b - 1.0) / 2.0 < alpha })
}

fn growth_exponent(rows: &[ProbeRow]) -> Option<f64> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for w in rows.windows(2) {
        let inc = w[1].ratio - w[0].ratio;
        if !(inc > 0.0) {
            return None;
        }
        x.push(w[1].cut.ln());
        y.push(inc.ln());
    }
    if x.len() < 2 {
        let dk = (rows[1].cut / rows[0].cut).ln();
        return Some((rows[1].ratio / rows[0].ratio).ln() / dk);
    }
    Some(linear_fit(&x, &y).0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinityRow {
    pub n: u64,
    pub q: f64,
    pub weighted_norm: f64,
    pub ratio: f64,
}

/// `Q_A[u_n]` and `‖u_n‖²_w` along a ladder of `n` in the mode given by the total flux.
pub fn infinity_probe(
    field: &RadialField,
    bad_weight: &Weight,
    alpha_exp: f64,
    n_list: &[u64],
) -> Result<Vec<InfinityRow>> {
    field.validate()?;
    let flux = field
        .total_flux()
        .ok_or_else(|| Error::PreconditionError("field has no finite total flux".into()))?;
    if (flux - flux.round()).abs() > 1e-9 || !field.support_upper().is_finite() {
        return Err(Error::FluxNotInteger { flux });
    }
    let m = flux.round() as i64;
    n_list
        .par_iter()
        .map(|&n| {
            let u = TestFunction::u_n(n, alpha_exp, m)?;
            let grid = u_n_grid((n as f64).ln())?;
            let q = qform(field, &u, &grid)?.total;
            let wn = weighted_norm(&u, bad_weight, &grid)?;
            Ok(InfinityRow { n, q, weighted_norm: wn, ratio: wn / q })
        })
        .collect()
}

/// Smooth compactly supported radial profile in `t = ln r`: a sum of bumps
/// `a · exp(1 - 1/(1 - x²))`, `x = (t - c)/h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSample {
    /// `(center, half_width, amplitude)` of each bump.
    pub bumps: Vec<(f64, f64, f64)>,
}

impl RadialSample {
    fn eval(&self, t: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for &(c, h, a) in &self.bumps {
            let x = (t - c) / h;
            if x.abs() < 1.0 {
                let q = 1.0 - x * x;
                let phi = (1.0 - 1.0 / q).exp();
                v += a * phi;
                d += a * phi * (-2.0 * x / (q * q)) / h;
            }
        }
        (v, d)
    }

    fn breaks(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.bumps.iter().flat_map(|&(c, h, _)| [c - h, c, c + h]).collect();
        b.push(1.0);
        b.sort_by(f64::total_cmp);
        b
    }
}

/// `min [∫|f_t|² dt + ½ ∫_{t<1} f² e^{2t} dt] / ∫_{t>1} f²/t² dt` over the samples.
///
/// Samples with a vanishing denominator are skipped; `+inf` if all are.
pub fn radial_1d_inequality_check(samples: &[RadialSample]) -> Result<f64> {
    let tol = Tolerance { abs: 1e-300, rel: 1e-10, max_intervals: 2000 };
    let ratios = samples
        .par_iter()
        .map(|f| {
            let br = f.breaks();
            let (lo, hi) = (br[0].min(1.0), br[br.len() - 1].max(1.0));
            let grad = integrate_with_breaks(|t| f.eval(t).1.powi(2), lo, hi, &br, tol)?.value;
            let inner = integrate_with_breaks(|t| f.eval(t).0.powi(2) * (2.0 * t).exp(), lo, 1.0, &br, tol)?.value;
            let outer = integrate_with_breaks(|t| (f.eval(t).0 / t).powi(2), 1.0, hi, &br, tol)?.value;
            Ok(if outer > 0.0 { (grad + 0.5 * inner) / outer } else { f64::INFINITY })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(f64::INFINITY, f64::min))
}
