//! Radial magnetic fields, their flux functions, and radial potentials.
//!
//! Fields are described by `B(r)`; the flux function is
//! `α(r) = ∫₀^r B(s) s ds`, i.e. the field integrated over the disc of
//! radius `r` divided by 2π. In the log coordinate `t = ln r` its derivative
//! is `dα/dt = B(eᵗ) e^{2t}`, which is the quantity every quadrature below
//! integrates.

use serde::{Deserialize, Serialize};

use crate::coords::{LogRadius, Point};
use crate::error::{Error, Result};
use crate::quad::{integrate_tail, integrate_with_breaks, Tolerance};

const LN2: f64 = std::f64::consts::LN_2;

/// Relative tolerance of quadrature-backed flux evaluation.
pub const FLUX_REL_TOL: f64 = 1e-10;

/// Piecewise-linear profile sampled on strictly increasing `t`, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

impl Tabulated {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() || t.len() < 2 {
            return Err(Error::ParameterError(
                "tabulated profile needs at least two (t, value) rows of equal length".into(),
            ));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::ParameterError("tabulated t must be strictly increasing".into()));
        }
        if t.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::ParameterError("tabulated profile contains non-finite entries".into()));
        }
        Ok(Self { t, values })
    }

    /// Parse two whitespace- or comma-separated columns; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut v = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::ParameterError(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |c: &str| {
                c.parse::<f64>()
                    .map_err(|_| Error::ParameterError(format!("line {}: cannot parse {c:?}", lineno + 1)))
            };
            t.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::new(t, v)
    }

    /// Build a table from samples of `f` on `n` uniform nodes.
    pub fn sample<F: Fn(f64) -> f64>(f: F, t_lo: f64, t_hi: f64, n: usize) -> Result<Self> {
        let n = n.max(2);
        let t: Vec<f64> = (0..n).map(|i| t_lo + (t_hi - t_lo) * i as f64 / (n - 1) as f64).collect();
        let v = t.iter().map(|&x| f(x)).collect();
        Self::new(t, v)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.t.len();
        if !(t >= self.t[0] && t <= self.t[n - 1]) {
            return 0.0;
        }
        let i = match self.t.partition_point(|&x| x <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let w = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn lo(&self) -> f64 {
        self.t[0]
    }

    pub fn hi(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// Rescale every value by `e^{2t}`.
    fn times_e2t(&self) -> Self {
        let values = self.t.iter().zip(&self.values).map(|(t, v)| v * (2.0 * t).exp()).collect();
        Self { t: self.t.clone(), values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SingularityClass {
    Regular,
    Singular,
    NotLocallyIntegrable,
}

/// Radial magnetic field `B(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialField {
    Zero,
    /// `b0 / (r² |ln r|^γ)` for `r <= 1/e`.
    Example1 { b0: f64, gamma: f64 },
    /// `b0 / (r² |ln r| (ln|ln r|)^γ)` for `r <= e^{-2}`.
    Example2 { b0: f64, gamma: f64 },
    /// `c (1 - (r/r1)²)²` on `r < r1`, normalised to the given flux.
    Bump { total_flux: f64, r1: f64 },
    Sum { parts: Vec<RadialField> },
    /// Tabulated `(ln r, B)` samples; `flux_density` holds `B e^{2t}`.
    Custom { flux_density: Tabulated, class: Option<SingularityClass> },
}

impl RadialField {
    pub fn example1(b0: f64, gamma: f64) -> Self {
        Self::Example1 { b0, gamma }
    }

    pub fn example2(b0: f64, gamma: f64) -> Self {
        Self::Example2 { b0, gamma }
    }

    pub fn bump(total_flux: f64, r1: f64) -> Self {
        Self::Bump { total_flux, r1 }
    }

    /// Custom field from `(t, B)` samples with an explicit integrability class.
    pub fn custom(samples: Tabulated, class: Option<SingularityClass>) -> Self {
        Self::Custom { flux_density: samples.times_e2t(), class }
    }

    /// Check parameters; non-integrable examples are rejected here.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Example1 { b0, gamma } | Self::Example2 { b0, gamma } => {
                if !(b0.is_finite() && *b0 != 0.0) {
                    return Err(Error::ParameterError("b0 must be finite and non-zero".into()));
                }
                if !(*gamma > 1.0) {
                    return Err(Error::NonIntegrableField(format!("gamma = {gamma} <= 1")));
                }
                Ok(())
            }
            Self::Bump { total_flux, r1 } => {
                if !(r1.is_finite() && *r1 > 0.0 && total_flux.is_finite()) {
                    return Err(Error::ParameterError("bump needs r1 > 0 and a finite flux".into()));
                }
                Ok(())
            }
            Self::Sum { parts } => parts.iter().try_for_each(Self::validate),
            Self::Custom { class, .. } => match class {
                Some(SingularityClass::NotLocallyIntegrable) => {
                    Err(Error::NonIntegrableField("custom field declared not locally integrable".into()))
                }
                _ => Ok(()),
            },
        }
    }

    pub fn has_closed_form(&self) -> bool {
        match self {
            Self::Custom { .. } => false,
            Self::Sum { parts } => parts.iter().all(Self::has_closed_form),
            _ => true,
        }
    }

    /// `dα/dt = B(eᵗ) e^{2t}`.
    pub fn flux_density(&self, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Example1 { b0, gamma } => {
                if t <= -1.0 {
                    b0 * (-t).powf(-gamma)
                } else {
                    0.0
                }
            }
            Self::Example2 { b0, gamma } => {
                if t <= -2.0 {
                    let l = (-t).ln();
                    b0 / ((-t) * l.powf(*gamma))
                } else {
                    0.0
                }
            }
            Self::Bump { total_flux, r1 } => {
                let x = (2.0 * (t - r1.ln())).exp();
                if x < 1.0 {
                    6.0 * total_flux * x * (1.0 - x).powi(2)
                } else {
                    0.0
                }
            }
            Self::Sum { parts } => parts.iter().map(|p| p.flux_density(t)).sum(),
            Self::Custom { flux_density, .. } => flux_density.eval(t),
        }
    }

    /// `dα/dℓ` at `t = -e^ℓ`, finite for arbitrarily large depth `ℓ`.
    pub fn flux_density_at_depth(&self, depth: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Example1 { b0, gamma } => {
                if depth >= 0.0 {
                    b0 * ((1.0 - gamma) * depth).exp()
                } else {
                    0.0
                }
            }
            Self::Example2 { b0, gamma } => {
                if depth >= LN2 {
                    b0 * depth.powf(-gamma)
                } else {
                    0.0
                }
            }
            Self::Sum { parts } => parts.iter().map(|p| p.flux_density_at_depth(depth)).sum(),
            Self::Bump { total_flux, r1 } => {
                let t = -depth.exp();
                let x = (2.0 * (t - r1.ln())).exp();
                if x < 1.0 {
                    6.0 * total_flux * (2.0 * (t - r1.ln()) + depth).exp() * (1.0 - x).powi(2)
                } else {
                    0.0
                }
            }
            Self::Custom { .. } => {
                let t = -depth.exp();
                self.flux_density(t) * depth.exp()
            }
        }
    }

    /// Field value `B(r)` at `r = eᵗ`.
    pub fn b_value(&self, t: f64) -> f64 {
        self.flux_density(t) * (-2.0 * t).exp()
    }

    /// Points in `t` where the profile is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::Zero => vec![],
            Self::Example1 { .. } => vec![-1.0],
            Self::Example2 { .. } => vec![-2.0],
            Self::Bump { r1, .. } => vec![r1.ln()],
            Self::Sum { parts } => {
                let mut k: Vec<f64> = parts.iter().flat_map(Self::kinks).collect();
                k.sort_by(f64::total_cmp);
                k.dedup();
                k
            }
            Self::Custom { flux_density, .. } => flux_density.t.clone(),
        }
    }

    /// Flux through the whole plane, when finite and known.
    pub fn total_flux(&self) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Example1 { b0, gamma } => Some(b0 / (gamma - 1.0)),
            Self::Example2 { b0, gamma } => Some(b0 * LN2.powf(1.0 - gamma) / (gamma - 1.0)),
            Self::Bump { total_flux, .. } => Some(*total_flux),
            Self::Sum { parts } => parts.iter().map(Self::total_flux).sum(),
            Self::Custom { flux_density, .. } => {
                Some(crate::quad::trapezoid(&flux_density.t, &flux_density.values))
            }
        }
    }

    /// Supremum of the support in `t` (`-inf` for the zero field).
    pub fn support_upper(&self) -> f64 {
        match self {
            Self::Zero => f64::NEG_INFINITY,
            Self::Example1 { .. } => -1.0,
            Self::Example2 { .. } => -2.0,
            Self::Bump { r1, .. } => r1.ln(),
            Self::Sum { parts } => parts.iter().map(Self::support_upper).fold(f64::NEG_INFINITY, f64::max),
            Self::Custom { flux_density, .. } => flux_density.hi(),
        }
    }

    /// Whether `B >= 0` everywhere.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Example1 { b0, .. } | Self::Example2 { b0, .. } => *b0 > 0.0,
            Self::Bump { total_flux, .. } => *total_flux >= 0.0,
            Self::Sum { parts } => parts.iter().all(Self::is_nonnegative),
            Self::Custom { flux_density, .. } => flux_density.values.iter().all(|v| *v >= 0.0),
        }
    }

    fn closed_form_alpha(&self, p: &Point) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::Example1 { b0, gamma } => Some(match p.depth() {
                Some(depth) => b0 * ((1.0 - gamma) * depth).exp() / (gamma - 1.0),
                None => b0 / (gamma - 1.0),
            }),
            Self::Example2 { b0, gamma } => {
                let depth = p.depth().unwrap_or(0.0).max(LN2);
                Some(b0 * depth.powf(1.0 - gamma) / (gamma - 1.0))
            }
            Self::Bump { total_flux, r1 } => {
                let x = (2.0 * (p.t - r1.ln())).exp();
                Some(if x >= 1.0 {
                    *total_flux
                } else {
                    total_flux * x * (3.0 - 3.0 * x + x * x)
                })
            }
            Self::Sum { parts } => parts.iter().map(|f| f.closed_form_alpha(p)).sum(),
            Self::Custom { .. } => None,
        }
    }

    /// Flux function by adaptive quadrature of `dα/dt` from the origin.
    pub fn alpha_by_quadrature(&self, p: &Point) -> Result<f64> {
        self.validate()?;
        let tol = Tolerance { abs: 1e-300, rel: FLUX_REL_TOL * 1e-2, max_intervals: 4000 };
        let kinks = self.kinks();
        // depth of the shallowest point the tail covers
        let depth0 = p.depth().unwrap_or(0.0);
        let mut deep_breaks: Vec<f64> =
            kinks.iter().filter(|&&k| k < -1.0).map(|k| (-k).ln()).filter(|&d| d > depth0).collect();
        deep_breaks.sort_by(f64::total_cmp);
        let head_end = deep_breaks.last().copied().unwrap_or(depth0);
        let head = integrate_with_breaks(
            |d| self.flux_density_at_depth(d),
            depth0,
            head_end,
            &deep_breaks,
            tol,
        )?;
        let tail = integrate_tail(|d| self.flux_density_at_depth(d), head_end, tol)?;
        let mut total = head.value + tail.value;
        if !p.is_deep() && p.t > -1.0 {
            let fwd = integrate_with_breaks(|t| self.flux_density(t), -1.0, p.t, &kinks, tol)?;
            total += fwd.value;
        }
        Ok(total)
    }

    /// Flux function at a point: closed form when available.
    pub fn alpha(&self, p: &Point) -> Result<f64> {
        self.validate()?;
        match self.closed_form_alpha(p) {
            Some(a) => Ok(a),
            None => self.alpha_by_quadrature(p),
        }
    }

    /// Integrability class from closed-form criteria only.
    pub fn singularity_class(&self) -> Result<SingularityClass> {
        match self {
            Self::Zero | Self::Bump { .. } => Ok(SingularityClass::Regular),
            Self::Example1 { gamma, .. } | Self::Example2 { gamma, .. } => Ok(if *gamma > 1.0 {
                SingularityClass::Singular
            } else {
                SingularityClass::NotLocallyIntegrable
            }),
            Self::Sum { parts } => parts
                .iter()
                .map(Self::singularity_class)
                .try_fold(SingularityClass::Regular, |acc, c| c.map(|c| acc.max(c))),
            Self::Custom { class, .. } => class.ok_or(Error::UnknownClass),
        }
    }
}

/// Flux function `α` attached to a field.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxProfile {
    field: RadialField,
    has_closed_form: bool,
}

impl FluxProfile {
    pub fn new(field: RadialField) -> Result<Self> {
        field.validate()?;
        let has_closed_form = field.has_closed_form();
        Ok(Self { field, has_closed_form })
    }

    pub fn field(&self) -> &RadialField {
        &self.field
    }

    pub fn has_closed_form(&self) -> bool {
        self.has_closed_form
    }

    pub fn alpha(&self, p: &Point) -> Result<f64> {
        self.field.alpha(p)
    }

    pub fn alpha_t(&self, t: f64) -> Result<f64> {
        self.field.alpha(&Point::from_t(t))
    }

    /// `Φ = α / r`.
    pub fn phi_t(&self, t: f64) -> Result<f64> {
        Ok(self.alpha_t(t)? * (-t).exp())
    }
}

/// `α(r)` at `r = eᵗ`.
pub fn flux(field: &RadialField, t: LogRadius) -> Result<f64> {
    field.alpha(&Point::from_t(t.t()))
}

/// `Φ(r) = α(r)/r`.
pub fn phi(field: &RadialField, t: LogRadius) -> Result<f64> {
    Ok(flux(field, t)? * (-t.t()).exp())
}

/// Azimuthal component of the Poincaré-gauge vector potential of a radial field.
pub fn azimuthal_gauge(field: &RadialField, t: LogRadius) -> Result<f64> {
    phi(field, t)
}

pub fn singularity_class(field: &RadialField) -> Result<SingularityClass> {
    field.singularity_class()
}

/// Radial electric potential `V(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Zero,
    /// `r^{-2} |ln r|^{-2} (ln|ln r|)^{-1/σ}` for `r < e^{-2}`.
    VSigma { sigma: f64 },
    /// `depth · exp(-r²/width²)`.
    GaussianWell { depth: f64, width: f64 },
    /// `depth` on `r < radius`.
    StepWell { depth: f64, radius: f64 },
    /// Tabulated `(ln r, V)`; `coupled` holds `e^{2t} V`.
    Custom { coupled: Tabulated },
    /// `factor · inner`.
    Scaled { factor: f64, inner: Box<Potential> },
}

impl Potential {
    pub fn custom(samples: Tabulated) -> Self {
        Self::Custom { coupled: samples.times_e2t() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Zero => Self::Zero,
            Self::Scaled { factor: f, inner } => Self::Scaled { factor: f * factor, inner: inner.clone() },
            other => Self::Scaled { factor, inner: Box::new(other.clone()) },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::VSigma { sigma } if !(*sigma > 1.0) => {
                Err(Error::ParameterError(format!("sigma must exceed 1, got {sigma}")))
            }
            Self::GaussianWell { depth, width } if !(depth.is_finite() && *width > 0.0) => {
                Err(Error::ParameterError("gaussian well needs finite depth and width > 0".into()))
            }
            Self::StepWell { depth, radius } if !(depth.is_finite() && *radius > 0.0) => {
                Err(Error::ParameterError("step well needs finite depth and radius > 0".into()))
            }
            Self::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return Err(Error::ParameterError("non-finite potential factor".into()));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// `e^{2t} V(eᵗ)`: the potential felt by the radial mode equation in `t`.
    pub fn coupled(&self, p: &Point) -> f64 {
        self.coupled_jac(p) * (-2.0 * p.g).exp()
    }

    /// `(dt/ds)² e^{2t} V`, finite at any depth.
    pub fn coupled_jac(&self, p: &Point) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::VSigma { sigma } => match p.depth() {
                Some(depth) if depth > LN2 => depth.powf(-1.0 / sigma),
                _ => 0.0,
            },
            Self::GaussianWell { depth, width } => {
                if p.t == f64::NEG_INFINITY {
                    return 0.0;
                }
                let e2t = (2.0 * p.t).exp();
                depth * (2.0 * p.t + 2.0 * p.g - e2t / (width * width)).exp()
            }
            Self::StepWell { depth, radius } => {
                if p.t == f64::NEG_INFINITY || p.t >= radius.ln() {
                    return 0.0;
                }
                depth * (2.0 * p.t + 2.0 * p.g).exp()
            }
            Self::Custom { coupled } => {
                let v = coupled.eval(p.t);
                v * (2.0 * p.g).exp()
            }
            Self::Scaled { factor, inner } => factor * inner.coupled_jac(p),
        }
    }

    /// `V / ρ₀ = e^{2t} V (1 + t²)`.
    pub fn rho0_ratio(&self, p: &Point) -> f64 {
        let cj = self.coupled_jac(p);
        if cj == 0.0 {
            return 0.0;
        }
        match p.depth() {
            // (1 + t²)/t² with t² = e^{2ℓ}
            Some(depth) => cj * (1.0 + (-2.0 * depth).exp()),
            None => cj * (1.0 + p.t * p.t),
        }
    }

    /// `V(r)` at `r = eᵗ`.
    pub fn value(&self, t: f64) -> f64 {
        self.coupled(&Point::from_t(t)) * (-2.0 * t).exp()
    }

    /// Supremum in `t` of the support.
    pub fn support_upper(&self) -> f64 {
        match self {
            Self::Zero => f64::NEG_INFINITY,
            Self::VSigma { .. } => -2.0,
            Self::GaussianWell { width, .. } => width.ln() + 0.5 * 1500f64.ln(),
            Self::StepWell { radius, .. } => radius.ln(),
            Self::Custom { coupled } => coupled.hi(),
            Self::Scaled { inner, .. } => inner.support_upper(),
        }
    }

    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::VSigma { .. } => vec![-2.0],
            Self::StepWell { radius, .. } => vec![radius.ln()],
            Self::Custom { coupled } => coupled.t.clone(),
            Self::Scaled { inner, .. } => inner.kinks(),
            _ => vec![],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Scaled { factor, inner } => *factor == 0.0 || inner.is_zero(),
            Self::Custom { coupled } => coupled.values.iter().all(|v| *v == 0.0),
            Self::GaussianWell { depth, .. } | Self::StepWell { depth, .. } => *depth == 0.0,
            Self::VSigma { .. } => false,
        }
    }
}

/// Tabulated weight in `(t, w)` samples, stored as `e^{2t} w`.
pub(crate) fn tabulate_weight(samples: &Tabulated) -> Tabulated {
    samples.times_e2t()
}
