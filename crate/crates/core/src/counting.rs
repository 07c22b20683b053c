//! Negative-eigenvalue counting for `(i∇ + A)² - λV` by summing angular modes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::Point;
use crate::error::{Error, Result, Warning};
use crate::profiles::{Potential, RadialField};
use crate::quad::{integrate_with_breaks, linear_fit, Tolerance};
use crate::spectral::{inertia, phase_integral_count, prufer_count, truncate, Grid, GridMeta, ModeData};
use crate::weights::v_norm_a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Inertia,
    Prufer,
    PhaseIntegral,
}

/// Margin below which the truncated ends are reported as not forbidden enough.
pub const MARGIN_WARNING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub lambda: f64,
    /// `(m, count)` for `|m| <= m_max`.
    pub per_mode: Vec<(i64, u64)>,
    pub m_max: i64,
    pub total: u64,
    pub method: Method,
    pub grid_meta: GridMeta,
    pub forbidden_margin: f64,
    /// Unrounded sum of the per-mode phase integrals.
    pub phase_sum: Option<f64>,
    pub warnings: Vec<Warning>,
}

/// Number of negative eigenvalues of `(i∇ + A)² - λV`.
pub fn count_total(field: &RadialField, v: &Potential, lambda: f64, grid: &Grid, method: Method) -> Result<CountReport> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::ParameterError(format!("coupling must be finite and non-negative, got {lambda}")));
    }
    let data = ModeData::new(field, v, grid)?;
    let empty = |margin: f64| CountReport {
        lambda,
        per_mode: vec![(0, 0)],
        m_max: 0,
        total: 0,
        method,
        grid_meta: grid.meta(),
        forbidden_margin: margin,
        phase_sum: (method == Method::PhaseIntegral).then_some(0.0),
        warnings: vec![],
    };
    if lambda == 0.0 || v.is_zero() {
        return Ok(empty(1.0));
    }
    let trunc = truncate(&data, lambda)?;
    let modes: Vec<i64> = (-trunc.m_max..=trunc.m_max).collect();
    let scaled = v.scaled(lambda);
    let results: Vec<(u64, Option<f64>, Vec<Warning>)> = modes
        .par_iter()
        .map(|&m| match method {
            Method::Inertia => {
                let (n, w) = inertia(&data.operator(m, lambda));
                Ok((n as u64, None, w))
            }
            Method::Prufer => {
                let n = prufer_count(field, &scaled, m, (grid.s_min(), grid.s_max()))?;
                Ok((n as u64, None, vec![]))
            }
            Method::PhaseIntegral => {
                let phase = phase_integral_count(field, v, m, lambda)?;
                Ok(((phase + 0.5).floor() as u64, Some(phase), vec![]))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    if trunc.forbidden_margin < MARGIN_WARNING {
        warnings.push(Warning::ForbiddenMargin { margin: trunc.forbidden_margin });
    }
    let mut per_mode = Vec::with_capacity(modes.len());
    let mut phase_sum = None;
    for (m, (n, phase, w)) in modes.iter().zip(results) {
        per_mode.push((*m, n));
        if let Some(p) = phase {
            *phase_sum.get_or_insert(0.0) += p;
        }
        warnings.extend(w);
    }
    let total = per_mode.iter().map(|x| x.1).sum();
    Ok(CountReport {
        lambda,
        per_mode,
        m_max: trunc.m_max,
        total,
        method,
        grid_meta: grid.meta(),
        forbidden_margin: trunc.forbidden_margin,
        phase_sum,
        warnings,
    })
}

fn counts_along(
    field: &RadialField,
    v: &Potential,
    lambdas: &[f64],
    grid: &Grid,
    method: Method,
) -> Result<Vec<CountReport>> {
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.par_iter().map(|&l| count_total(field, v, l, grid, method)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub reports: Vec<CountReport>,
    pub fitted_exponent: f64,
    pub fit_window: (f64, f64),
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Power-law exponent of `N(λ)` over the top decade of the ladder.
pub fn sweep_exponent(
    field: &RadialField,
    v: &Potential,
    lambda_list: &[f64],
    grid: &Grid,
    method: Method,
) -> Result<SweepResult> {
    if lambda_list.len() < 5 || lambda_list.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::ParameterError("sweep needs at least five positive couplings".into()));
    }
    let reports = counts_along(field, v, lambda_list, grid, method)?;
    let (fitted_exponent, fit_window, residual) = fit_top_decade(&reports)?;
    Ok(SweepResult { reports, fitted_exponent, fit_window, residual })
}

fn fit_top_decade(reports: &[CountReport]) -> Result<(f64, (f64, f64), f64)> {
    let hi = reports.iter().map(|r| r.lambda).fold(f64::NEG_INFINITY, f64::max);
    let lo = hi / 10.0;
    let pts: Vec<&CountReport> =
        reports.iter().filter(|r| r.total >= 10 && r.lambda >= lo * (1.0 - 1e-12)).collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientGrowth);
    }
    let x: Vec<f64> = pts.iter().map(|r| r.lambda.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|r| (r.total as f64).ln()).collect();
    let (slope, _, rms) = linear_fit(&x, &y);
    Ok((slope, (lo, hi), rms))
}

/// Cap depths of the saturation protocol in [`bound_jst`].
const JST_CAPS: [f64; 7] = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

/// `∫ V (1 + |ln r|) r dr`, with divergence reported as [`Error::Unbounded`].
pub fn bound_jst(v: &Potential) -> Result<f64> {
    v.validate()?;
    let upper = v.support_upper();
    if v.is_zero() || !upper.is_finite() {
        return Ok(0.0);
    }
    let tol = Tolerance { abs: 1e-300, rel: 1e-13, max_intervals: 4000 };
    let kinks = v.kinks();
    let shallow = if upper > -1.0 {
        integrate_with_breaks(|t| v.coupled(&Point::from_t(t)) * (1.0 + t.abs()), -1.0, upper, &kinks, tol)?.value
    } else {
        0.0
    };
    let deep_kinks: Vec<f64> = kinks.iter().filter(|k| **k < -1.0).map(|k| (-k).ln()).collect();
    // e^{2t} V (1 + |t|) dt = coupled_jac (1 + e^{-ℓ}) dℓ
    let deep = |d: f64| v.coupled_jac(&Point::from_s(-1.0 - d)) * (1.0 + (-d).exp());
    let mut caps = Vec::new();
    let mut acc = 0.0;
    let mut from = 0.0;
    for &cap in &JST_CAPS {
        acc += integrate_with_breaks(deep, from, cap, &deep_kinks, tol)?.value;
        from = cap;
        caps.push((cap, shallow + acc));
    }
    let n = caps.len();
    let (last, prev) = (caps[n - 1].1, caps[n - 2].1);
    if (last - prev).abs() > 1e-9 * last.abs() {
        return Err(Error::Unbounded { caps });
    }
    Ok(last)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub lambda: f64,
    pub count: u64,
    /// `[λV]_a^a` evaluated directly.
    pub v_norm_pow_a: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub a: f64,
    pub cap_depth: f64,
    pub rows: Vec<BoundRow>,
    pub max_ratio: f64,
    /// Largest relative gap between `[λV]_a^a` and `λ^a [V]_a^a`.
    pub homogeneity_error: f64,
    /// Whether the ratios increase strictly over the top decade of λ.
    pub monotone_growth: bool,
    pub warnings: Vec<Warning>,
}

/// `N(λ) / [λV]_a^a` along a coupling ladder.
#[allow(clippy::too_many_arguments)]
pub fn verify_counting_bound(
    field: &RadialField,
    v: &Potential,
    a: f64,
    lambda_list: &[f64],
    grid: &Grid,
    method: Method,
    cap_depth: f64,
) -> Result<BoundCheck> {
    let base = v_norm_a(v, a, cap_depth)?;
    if !base.saturated {
        return Err(Error::PreconditionError(format!("[V]_a is not saturated at a = {a}")));
    }
    let reports = counts_along(field, v, lambda_list, grid, method)?;
    let mut warnings: Vec<Warning> = base.warnings.clone();
    let rows = reports
        .par_iter()
        .map(|r| {
            let direct = v_norm_a(&v.scaled(r.lambda), a, cap_depth)?.value_pow_a;
            let ratio = if r.total == 0 && direct == 0.0 { 0.0 } else { r.total as f64 / direct };
            Ok(BoundRow { lambda: r.lambda, count: r.total, v_norm_pow_a: direct, ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    for r in &reports {
        warnings.extend(r.warnings.iter().cloned());
    }
    let homogeneity_error = rows
        .iter()
        .filter(|r| r.v_norm_pow_a > 0.0)
        .map(|r| {
            let scaled = r.lambda.powf(a) * base.value_pow_a;
            ((r.v_norm_pow_a - scaled) / scaled).abs()
        })
        .fold(0.0, f64::max);
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let top = rows.last().map(|r| r.lambda).unwrap_or(0.0);
    let last_decade: Vec<f64> = rows.iter().filter(|r| r.lambda >= top / 10.0 * (1.0 - 1e-12)).map(|r| r.ratio).collect();
    let monotone_growth = last_decade.len() >= 2 && last_decade.windows(2).all(|w| w[1] > w[0]);
    Ok(BoundCheck { a, cap_depth, rows, max_ratio, homogeneity_error, monotone_growth, warnings })
}
