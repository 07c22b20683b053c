//! Hardy weights, level sets of `V/ρ₀`, and the `[V]_a` functional.
//!
//! Weights are evaluated through `ln(e^{2g} e^{2t} w)`, the logarithm of the
//! weight density against `ds`, so that they stay meaningful at depths where
//! `r²` and `t²` both leave floating-point range.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{stretch, LogRadius, Point, BIG};
use crate::error::{Error, Result, Warning};
use crate::profiles::{Potential, RadialField, Tabulated};
use crate::quad::{bisect, golden_max, integrate_with_breaks, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    /// `1 / (r² (1 + ln² r))`.
    Rho0,
    /// `1 / (r² |ln r|^b)`.
    LogPower { b: f64 },
    /// `ρ₀ + Φ²` for `t <= log_eta`, `ρ₀` above.
    SingularRho { field: RadialField, log_eta: f64 },
    /// `1 / (r² (1 + ln₊²(r0/r)))`.
    Cfkp { r0: f64 },
    /// `dist(μ, ℤ)² / r²`.
    AharonovBohm { mu: f64 },
    /// Tabulated `e^{2t} w` against `t`, zero outside the table.
    Custom { scaled: Tabulated },
}

impl Weight {
    /// `ρ₀ + Φ²` with `η` chosen by [`eta_quarter_rule`].
    pub fn singular_rho(field: RadialField) -> Result<Self> {
        let log_eta = eta_quarter_rule(&field)?;
        Ok(Self::SingularRho { field, log_eta })
    }

    /// Custom weight from `(t, w)` samples.
    pub fn custom(samples: &Tabulated) -> Self {
        Self::Custom { scaled: crate::profiles::tabulate_weight(samples) }
    }

    /// Custom weight from `(t, e^{2t} w)` samples.
    pub fn custom_scaled(scaled: Tabulated) -> Self {
        Self::Custom { scaled }
    }

    /// `ln(e^{2g} e^{2t} w)` at a point; `-inf` where the weight vanishes.
    pub fn ln_scaled_jac(&self, p: &Point) -> Result<f64> {
        let deep = p.depth();
        match self {
            Self::Rho0 => Ok(ln_rho0_jac(p)),
            Self::LogPower { b } => match deep {
                Some(depth) => Ok((2.0 - b) * depth),
                None if p.t == 0.0 => Err(Error::DomainError { what: "LogPower weight", t: p.t }),
                None => Ok(-b * p.t.abs().ln()),
            },
            Self::Cfkp { r0 } => {
                let lr0 = r0.ln();
                match deep {
                    Some(depth) => {
                        let e = (-depth).exp();
                        let q = 1.0 + lr0 * e;
                        Ok(-(e * e + q * q).ln())
                    }
                    None => {
                        let l = (lr0 - p.t).max(0.0);
                        Ok(-(l * l).ln_1p())
                    }
                }
            }
            Self::AharonovBohm { mu } => {
                let d = (mu - mu.round()).abs();
                Ok(if d == 0.0 { f64::NEG_INFINITY } else { 2.0 * (d.ln() + p.g) })
            }
            Self::SingularRho { field, log_eta } => {
                let base = ln_rho0_jac(p);
                if p.s > stretch(*log_eta) {
                    return Ok(base);
                }
                let a = field.alpha(p)?;
                if a == 0.0 {
                    return Ok(base);
                }
                let extra = 2.0 * (a.abs().ln() + p.g);
                Ok(log_add(base, extra))
            }
            Self::Custom { scaled } => {
                let v = scaled.eval(p.t);
                if v < 0.0 {
                    return Err(Error::DomainError { what: "custom weight (negative sample)", t: p.t });
                }
                Ok(if v == 0.0 { f64::NEG_INFINITY } else { v.ln() + 2.0 * p.g })
            }
        }
    }

    /// `e^{2g} e^{2t} w`, clamped to [`BIG`].
    pub fn scaled_jac(&self, p: &Point) -> Result<f64> {
        Ok(clamp_exp(self.ln_scaled_jac(p)?))
    }

    /// `e^{2t} w`: the weight density against `dt`.
    pub fn scaled(&self, p: &Point) -> Result<f64> {
        Ok(clamp_exp(self.ln_scaled_jac(p)? - 2.0 * p.g))
    }

    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::LogPower { .. } => vec![0.0],
            Self::Cfkp { r0 } => vec![r0.ln()],
            Self::SingularRho { field, log_eta } => {
                let mut k = field.kinks();
                k.push(*log_eta);
                k
            }
            Self::Custom { scaled } => scaled.t.clone(),
            _ => vec![],
        }
    }
}

fn ln_rho0_jac(p: &Point) -> f64 {
    match p.depth() {
        Some(depth) => -(-2.0 * depth).exp().ln_1p(),
        None => -(p.t * p.t).ln_1p(),
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn clamp_exp(x: f64) -> f64 {
    if x > BIG.ln() {
        BIG
    } else {
        x.exp()
    }
}

/// Weight value `w(r)` at `r = eᵗ`.
pub fn eval_weight(w: &Weight, t: LogRadius) -> Result<f64> {
    let p = Point::from_t(t.t());
    let ln = w.ln_scaled_jac(&p)? - 2.0 * p.g - 2.0 * p.t;
    let v = ln.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DomainError { what: "weight (overflow)", t: t.t() })
    }
}

/// `ln η` for `ρ₀ + Φ²`: the largest `η` with `|α| <= 1/4` on `(0, 2η]`.
///
/// Returns `+inf` when `|α|` never exceeds one quarter.
pub fn eta_quarter_rule(field: &RadialField) -> Result<f64> {
    let exceeds = |s: f64| -> Result<bool> { Ok(field.alpha(&Point::from_s(s))?.abs() > 0.25) };
    let s_top = field.support_upper().max(0.0) + 1.0;
    let mut samples: Vec<f64> = (0..=400).map(|k| -1.0 - 1e12f64.powf(1.0 - k as f64 / 400.0)).collect();
    let n_shallow = ((s_top + 2.0) / 0.01).ceil() as usize;
    samples.extend((1..=n_shallow).map(|k| -2.0 + (s_top + 2.0) * k as f64 / n_shallow as f64));
    if exceeds(samples[0])? {
        return Err(Error::PreconditionError(
            "|alpha| exceeds 1/4 arbitrarily close to the origin; the flux does not vanish".into(),
        ));
    }
    for w in samples.windows(2) {
        if exceeds(w[1])? {
            let mut lo = w[0];
            let mut hi = w[1];
            while hi - lo > 1e-12 * (1.0 + lo.abs()) {
                let mid = 0.5 * (lo + hi);
                if exceeds(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let t_c = Point::from_s(hi).t;
            return Ok(t_c - std::f64::consts::LN_2);
        }
    }
    Ok(f64::INFINITY)
}

/// Disjoint sorted intervals of the stretched coordinate `s` on which
/// `V/ρ₀ > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub threshold: f64,
    pub intervals: Vec<(f64, f64)>,
    pub warnings: Vec<Warning>,
}

impl LevelSet {
    /// Intervals in `t = ln r`; deep ends may be `-inf`.
    pub fn t_intervals(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|&(a, b)| (Point::from_s(a).t, Point::from_s(b).t)).collect()
    }

    /// Intervals as depths `ln|t|` (only meaningful for `s < -1`).
    pub fn depth_intervals(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|&(a, b)| (-1.0 - b, -1.0 - a)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Precomputed scan of `V/ρ₀` over `s`.
struct RatioScan<'a> {
    v: &'a Potential,
    s: Vec<f64>,
    ratio: Vec<f64>,
}

/// Default depth `ln|t|` of the lowest point scanned by [`level_set`].
pub const DEFAULT_CAP_DEPTH: f64 = 1e6;

fn scan_nodes(s_lo: f64, s_hi: f64) -> Vec<f64> {
    let mut nodes = Vec::new();
    // geometric in depth below depth 64, uniform in s above
    let d_lo = -1.0 - s_lo;
    if d_lo > 64.0 {
        let n = ((d_lo / 64.0).ln() * 200.0).ceil().max(1.0) as usize;
        for k in 0..n {
            let d = d_lo * (64.0 / d_lo).powf(k as f64 / n as f64);
            nodes.push(-1.0 - d);
        }
    }
    let start = s_lo.max(-65.0);
    let n = ((s_hi - start) / 0.02).ceil().max(1.0) as usize;
    for k in 0..=n {
        nodes.push(start + (s_hi - start) * k as f64 / n as f64);
    }
    nodes
}

impl<'a> RatioScan<'a> {
    fn new(v: &'a Potential, s_lo: f64) -> Self {
        let upper = v.support_upper();
        if !upper.is_finite() || stretch(upper) <= s_lo {
            return Self { v, s: vec![], ratio: vec![] };
        }
        let mut s = scan_nodes(s_lo, stretch(upper) + 0.01);
        for k in v.kinks() {
            let sk = stretch(k);
            if sk > s_lo && sk < *s.last().unwrap() {
                s.push(sk);
                s.push(sk - 1e-12 * (1.0 + sk.abs()));
            }
        }
        s.sort_by(f64::total_cmp);
        s.dedup();
        let ratio = s.par_iter().map(|&x| v.rho0_ratio(&Point::from_s(x))).collect();
        Self { v, s, ratio }
    }

    fn max_ratio(&self) -> f64 {
        self.ratio.iter().copied().fold(0.0, f64::max)
    }

    fn ratio_at(&self, s: f64) -> f64 {
        self.v.rho0_ratio(&Point::from_s(s))
    }

    fn crossing(&self, tau: f64, a: f64, b: f64) -> f64 {
        bisect(|s| self.ratio_at(s) - tau, a, b, 1e-13 * (1.0 + a.abs().max(b.abs())))
    }

    fn level_set(&self, tau: f64) -> LevelSet {
        let mut intervals = Vec::new();
        let mut warnings = Vec::new();
        let n = self.s.len();
        let mut open: Option<f64> = None;
        for i in 0..n {
            let inside = self.ratio[i] > tau;
            if i == 0 {
                if inside {
                    open = Some(self.s[0]);
                }
                continue;
            }
            let was = self.ratio[i - 1] > tau;
            let (a, b) = (self.s[i - 1], self.s[i]);
            if inside != was {
                let x = self.crossing(tau, a, b);
                if inside {
                    open = Some(x);
                } else if let Some(lo) = open.take() {
                    intervals.push((lo, x));
                }
            } else {
                let mid = 0.5 * (a + b);
                if (self.ratio_at(mid) > tau) != was {
                    warnings.push(Warning::ScanResolution { s_lo: a, s_hi: b });
                    let x1 = self.crossing(tau, a, mid);
                    let x2 = self.crossing(tau, mid, b);
                    if was {
                        if let Some(lo) = open.take() {
                            intervals.push((lo, x1));
                        }
                        open = Some(x2);
                    } else {
                        intervals.push((x1, x2));
                    }
                }
            }
        }
        if let Some(lo) = open {
            intervals.push((lo, self.s[n - 1]));
        }
        LevelSet { threshold: tau, intervals, warnings }
    }
}

/// Level set `{V/ρ₀ > threshold}` above the stretched cap `s_min`.
pub fn level_set_capped(v: &Potential, threshold: f64, s_min: f64) -> Result<LevelSet> {
    if !(threshold > 0.0) {
        return Err(Error::ParameterError(format!("threshold must be positive, got {threshold}")));
    }
    v.validate()?;
    Ok(RatioScan::new(v, s_min).level_set(threshold))
}

/// Level set `{V/ρ₀ > threshold}` down to depth [`DEFAULT_CAP_DEPTH`].
pub fn level_set(v: &Potential, threshold: f64) -> Result<LevelSet> {
    level_set_capped(v, threshold, -1.0 - DEFAULT_CAP_DEPTH)
}

/// `F(t) = ∫ (1+|t|)/(1+t²) dt`, continuous, evaluated at a point of any depth.
fn measure_antiderivative(p: &Point) -> f64 {
    match p.depth() {
        Some(depth) => {
            let e = (-depth).exp();
            -std::f64::consts::FRAC_PI_2 + e.atan() - depth - 0.5 * (e * e).ln_1p()
        }
        None => {
            let half_log = 0.5 * (p.t * p.t).ln_1p();
            p.t.atan() + if p.t < 0.0 { -half_log } else { half_log }
        }
    }
}

/// `∫ ρ₀ (1+|ln r|) r dr` over a level set.
pub fn level_set_measure(ls: &LevelSet) -> f64 {
    ls.intervals
        .iter()
        .map(|&(a, b)| measure_antiderivative(&Point::from_s(b)) - measure_antiderivative(&Point::from_s(a)))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VNorm {
    /// `[V]_a`.
    pub value: f64,
    /// `[V]_a^a = sup_τ τ^a I(τ)`.
    pub value_pow_a: f64,
    /// Maximizing threshold `τ`.
    pub arg_t: f64,
    pub saturated: bool,
    pub unbounded: bool,
    /// `(cap depth, value)` pairs of the saturation check.
    pub cap_sequence: Vec<(f64, f64)>,
    /// `(τ, τ^a I(τ))` on the search grid at the final cap.
    pub profile: Vec<(f64, f64)>,
    pub warnings: Vec<Warning>,
}

struct SupResult {
    pow_a: f64,
    tau: f64,
    at_lower_edge: bool,
    profile: Vec<(f64, f64)>,
    warnings: Vec<Warning>,
}

const TAU_GRID: usize = 512;

fn sup_tau(v: &Potential, a: f64, s_min: f64) -> SupResult {
    let scan = RatioScan::new(v, s_min);
    let max_ratio = scan.max_ratio();
    if !(max_ratio > 0.0) {
        return SupResult { pow_a: 0.0, tau: 0.0, at_lower_edge: false, profile: vec![], warnings: vec![] };
    }
    let lo = (max_ratio * 1e-8).ln();
    let hi = (max_ratio * 1e8).ln();
    let objective = |ln_tau: f64| -> (f64, Vec<Warning>) {
        let ls = scan.level_set(ln_tau.exp());
        ((a * ln_tau).exp() * level_set_measure(&ls), ls.warnings)
    };
    let grid: Vec<f64> = (0..TAU_GRID).map(|k| lo + (hi - lo) * k as f64 / (TAU_GRID - 1) as f64).collect();
    let values: Vec<(f64, Vec<Warning>)> = grid.par_iter().map(|&x| objective(x)).collect();
    let mut warnings: Vec<Warning> = Vec::new();
    for (_, w) in &values {
        for item in w {
            if !warnings.contains(item) {
                warnings.push(item.clone());
            }
        }
    }
    // deterministic argmax, lowest τ wins ties
    let mut best = 0;
    for (k, (val, _)) in values.iter().enumerate() {
        if *val > values[best].0 {
            best = k;
        }
    }
    let profile: Vec<(f64, f64)> = grid.iter().zip(&values).map(|(x, (v, _))| (x.exp(), *v)).collect();
    if values[best].0 <= 0.0 {
        return SupResult { pow_a: 0.0, tau: 0.0, at_lower_edge: false, profile, warnings };
    }
    let a_lo = grid[best.saturating_sub(1)];
    let a_hi = grid[(best + 1).min(TAU_GRID - 1)];
    let (x, fx) = golden_max(|x| objective(x).0, a_lo, a_hi, 1e-12);
    let (tau, pow_a) = if fx >= values[best].0 { (x.exp(), fx) } else { (grid[best].exp(), values[best].0) };
    SupResult { pow_a, tau, at_lower_edge: best == 0, profile, warnings }
}

/// `[V]_a` with the saturation protocol.
///
/// `cap_depth` is the depth `ln|t|` of the lower cutoff of the level-set
/// measure, i.e. `t_min_cap = -e^{cap_depth}`; saturation means the value
/// moves by less than 1% when `cap_depth` doubles.
pub fn v_norm_a(v: &Potential, a: f64, cap_depth: f64) -> Result<VNorm> {
    if !(a > 1.0) {
        return Err(Error::ParameterError(format!("a must exceed 1, got {a}")));
    }
    if !(cap_depth > 0.0) {
        return Err(Error::ParameterError(format!("cap depth must be positive, got {cap_depth}")));
    }
    v.validate()?;
    let s_cap = |d: f64| -1.0 - d;
    let first = sup_tau(v, a, s_cap(cap_depth));
    let second = sup_tau(v, a, s_cap(2.0 * cap_depth));
    let v1 = first.pow_a.powf(1.0 / a);
    let v2 = second.pow_a.powf(1.0 / a);
    let saturated = v2 == v1 || (v2 - v1).abs() < 0.01 * v1.abs().max(v2.abs());
    let unbounded = second.at_lower_edge;
    let mut warnings = second.warnings;
    if !saturated {
        warnings.push(Warning::Unbounded {
            detail: format!("[V]_a changed from {v1:e} to {v2:e} when the cap depth doubled to {}", 2.0 * cap_depth),
        });
    }
    Ok(VNorm {
        value: v2,
        value_pow_a: second.pow_a,
        arg_t: second.tau,
        saturated,
        unbounded,
        cap_sequence: vec![(cap_depth, v1), (2.0 * cap_depth, v2)],
        profile: second.profile,
        warnings,
    })
}

/// `2π ∫₁^R w(r) (ln r)^α r dr`, with `R = e^{log_r}`.
pub fn log_moment(w: &Weight, alpha: f64, log_r: f64) -> Result<f64> {
    if !(log_r > 0.0) {
        return Err(Error::ParameterError("log_moment needs R > 1".into()));
    }
    let kinks: Vec<f64> = w.kinks().into_iter().filter(|k| *k > 0.0 && *k < log_r).collect();
    let f = |t: f64| -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        w.scaled(&Point::from_t(t)).unwrap_or(f64::NAN) * t.powf(alpha)
    };
    let r = integrate_with_breaks(f, 0.0, log_r, &kinks, Tolerance { abs: 1e-300, rel: 1e-12, max_intervals: 4000 })?;
    Ok(2.0 * std::f64::consts::PI * r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lr(t: f64) -> LogRadius {
        LogRadius::new(t).unwrap()
    }

    #[test]
    fn rho0_spot_values() {
        assert!((eval_weight(&Weight::Rho0, lr(0.0)).unwrap() - 1.0).abs() < 1e-15);
        let v = eval_weight(&Weight::Rho0, lr(1.0)).unwrap();
        assert!((v - 0.5 * (-2f64).exp()).abs() < 1e-15);
        assert!((v - 0.067668).abs() < 1e-6);
    }

    #[test]
    fn singular_rho_spot_value() {
        let w = Weight::SingularRho { field: RadialField::example1(1.0, 2.0), log_eta: -1.0 };
        let v = eval_weight(&w, lr(-2.0)).unwrap();
        let e4 = 4f64.exp();
        // independent summands: ρ₀ = e⁴/5 and Φ = 0.5 e²
        let oracle = e4 / 5.0 + (0.5 * 2f64.exp()).powi(2);
        assert!((v - oracle).abs() < 1e-12 * oracle);
        assert!((v - 0.45 * e4).abs() < 1e-12 * oracle);
    }

    #[test]
    fn log_power_rejects_unit_radius() {
        assert!(matches!(
            eval_weight(&Weight::LogPower { b: 1.5 }, lr(0.0)),
            Err(Error::DomainError { .. })
        ));
    }

    #[test]
    fn aharonov_bohm_distance() {
        let w = Weight::AharonovBohm { mu: 2.3 };
        let v = eval_weight(&w, lr(0.0)).unwrap();
        assert!((v - 0.09).abs() < 1e-12);
    }

    #[test]
    fn cfkp_matches_rho0_shape() {
        let w = Weight::Cfkp { r0: std::f64::consts::E };
        let v = eval_weight(&w, lr(-1.0)).unwrap();
        assert!((v - 2f64.exp() / 5.0).abs() < 1e-12);
        assert!((eval_weight(&w, lr(3.0)).unwrap() - (-6f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn deep_weights_stay_finite() {
        let p = Point::from_s(-1.0 - 1e5);
        assert!((Weight::Rho0.scaled_jac(&p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(Weight::LogPower { b: 1.5 }.scaled_jac(&p).unwrap(), BIG);
    }

    #[test]
    fn eta_rule_for_example1() {
        let log_eta = eta_quarter_rule(&RadialField::example1(1.0, 1.2)).unwrap();
        // |α| = 5|t|^{-0.2} reaches 1/4 at |t| = 20⁵
        let oracle = -(20f64.powi(5)) - std::f64::consts::LN_2;
        assert!(((log_eta - oracle) / oracle).abs() < 1e-9, "{log_eta} vs {oracle}");
        let bump = eta_quarter_rule(&RadialField::bump(0.5, 1.0)).unwrap();
        // α = 0.5 x (3 - 3x + x²) = 1/4 solves x ≈ 0.2063
        let x = crate::quad::bisect(|x| 0.5 * x * (3.0 - 3.0 * x + x * x) - 0.25, 0.0, 1.0, 1e-15);
        assert!((bump - (0.5 * x.ln() - std::f64::consts::LN_2)).abs() < 1e-9);
        assert_eq!(eta_quarter_rule(&RadialField::bump(0.2, 1.0)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn zero_potential_has_empty_level_sets() {
        for tau in [1e-6, 1.0, 1e3] {
            assert!(level_set(&Potential::Zero, tau).unwrap().is_empty());
        }
        let n = v_norm_a(&Potential::Zero, 2.0, 16.0).unwrap();
        assert_eq!(n.value, 0.0);
    }

    #[test]
    fn vsigma_level_set_crossing() {
        let ls = level_set(&Potential::VSigma { sigma: 2.0 }, 0.1).unwrap();
        assert_eq!(ls.intervals.len(), 1);
        let (d_lo, d_hi) = ls.depth_intervals()[0];
        // closed-form ratio ℓ^{-1/2}(1 + e^{-2ℓ}) = 0.1
        let oracle = crate::quad::bisect(|l: f64| l.powf(-0.5) * (1.0 + (-2.0 * l).exp()) - 0.1, 50.0, 200.0, 1e-13);
        assert!((d_hi - oracle).abs() < 1e-9, "{d_hi} vs {oracle}");
        assert!((d_lo - std::f64::consts::LN_2).abs() < 1e-9);
        assert!((ls.t_intervals()[0].1 + 2.0).abs() < 1e-8);
    }

    #[test]
    fn measure_antiderivative_is_continuous_at_junction() {
        let a = measure_antiderivative(&Point::from_s(-1.0 - 1e-12));
        let b = measure_antiderivative(&Point::from_s(-1.0));
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn log_moment_rho0_oracles() {
        let v = log_moment(&Weight::Rho0, 0.0, 50.0).unwrap();
        assert!((v - 2.0 * std::f64::consts::PI * 50f64.atan()).abs() < 1e-10);
        let a = log_moment(&Weight::Rho0, 1.0, 2f64.exp()).unwrap();
        let b = log_moment(&Weight::Rho0, 1.0, 4f64.exp()).unwrap();
        let oracle = |x: f64| std::f64::consts::PI * (x * x).ln_1p();
        assert!((b - a - (oracle(4f64.exp()) - oracle(2f64.exp()))).abs() < 1e-9);
    }
}
