//! Subcommand execution on a resolved configuration.

use std::f64::consts::E;

use magnetic_hardy::counting::{bound_jst, count_total, sweep_exponent, verify_counting_bound, Method};
use magnetic_hardy::profiles::{
    azimuthal_gauge, flux, phi, singularity_class, Potential, RadialField, SingularityClass, Tabulated,
};
use magnetic_hardy::quadform::{check_f_identity, hardy_probe_at_zero, infinity_probe};
use magnetic_hardy::spectral::{hardy_constant, Grid};
use magnetic_hardy::weights::{eval_weight, log_moment, v_norm_a, Weight};
use magnetic_hardy::{Error, LogRadius, Warning};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{FieldSpec, GridSpec, Num, Params, PotentialSpec, RunConfig, WeightSpec};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sub {
    Flux,
    Weight,
    Vnorm,
    IdentityCheck,
    ProbeZero,
    ProbeInfinity,
    Hardy,
    Count,
    Sweep,
    Bound,
}

impl Sub {
    pub fn name(self) -> &'static str {
        match self {
            Self::Flux => "flux",
            Self::Weight => "weight",
            Self::Vnorm => "vnorm",
            Self::IdentityCheck => "identity-check",
            Self::ProbeZero => "probe-zero",
            Self::ProbeInfinity => "probe-infinity",
            Self::Hardy => "hardy",
            Self::Count => "count",
            Self::Sweep => "sweep",
            Self::Bound => "bound",
        }
    }
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

pub struct Table {
    /// Appended to the report file stem; empty for the main table.
    pub suffix: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub struct Outcome {
    pub payload: Value,
    pub tables: Vec<Table>,
    pub warnings: Vec<Warning>,
}

fn kind(k: &Option<String>) -> String {
    k.as_deref().unwrap_or("").trim().to_ascii_lowercase().replace('-', "_")
}

fn set<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}

fn n(x: f64) -> Num {
    Num(x)
}

fn default_lambdas() -> Vec<Num> {
    (0..10).map(|k| n(10.0 * 1000f64.powf(k as f64 / 9.0))).collect()
}

fn resolve_field(f: &mut FieldSpec, sub: Sub) {
    if f.kind.is_none() {
        f.kind = Some("bump".into());
        if sub == Sub::ProbeInfinity {
            set(&mut f.total_flux, n(1.0));
        }
    }
    f.kind = Some(kind(&f.kind));
    match f.kind.as_deref() {
        Some("example1" | "example2") => {
            set(&mut f.b0, n(1.0));
            set(&mut f.gamma, n(2.0));
        }
        Some("bump") => {
            set(&mut f.total_flux, n(0.5));
            set(&mut f.r1, n(1.0));
        }
        _ => {}
    }
}

fn resolve_potential(p: &mut PotentialSpec) {
    set(&mut p.kind, "vsigma".into());
    p.kind = Some(match kind(&p.kind).as_str() {
        "gaussian" => "gaussian_well".into(),
        "step" => "step_well".into(),
        other => other.to_string(),
    });
    match p.kind.as_deref() {
        Some("vsigma") => set(&mut p.sigma, n(2.0)),
        Some("gaussian_well") => {
            set(&mut p.depth, n(1.0));
            set(&mut p.width, n(1.0));
        }
        Some("step_well") => {
            set(&mut p.depth, n(1.0));
            set(&mut p.radius, n(1.0));
        }
        _ => {}
    }
    set(&mut p.scale, n(1.0));
}

fn resolve_weight(w: &mut WeightSpec) {
    set(&mut w.kind, "rho0".into());
    w.kind = Some(kind(&w.kind));
    match w.kind.as_deref() {
        Some("log_power") => set(&mut w.b, n(1.5)),
        Some("cfkp") => set(&mut w.r0, n(E)),
        Some("aharonov_bohm") => set(&mut w.mu, n(0.5)),
        _ => {}
    }
}

fn resolve_grid(g: &mut GridSpec, sub: Sub, p: &Params) {
    if sub == Sub::IdentityCheck {
        let r0 = p.r0.map_or(E, |x| x.0);
        set(&mut g.t_min, n(-6.0));
        set(&mut g.t_max, n(r0.ln() - 0.1));
        set(&mut g.n, 1000);
    } else {
        set(&mut g.t_min, n(-8.0));
        set(&mut g.t_max, n(8.0));
        set(&mut g.n, 641);
    }
    set(&mut g.spacing, "t".into());
}

/// Fill every default the subcommand uses so the echoed config is complete.
pub fn resolve(cfg: &mut RunConfig, sub: Sub) {
    cfg.subcommand = Some(sub.name().to_string());
    set(&mut cfg.seed, 0);
    let p = cfg.params.get_or_insert_with(Params::default);
    match sub {
        Sub::Flux | Sub::Weight => {
            if p.r.is_none() {
                set(&mut p.t, n(-1.0));
            }
        }
        Sub::Vnorm => {
            set(&mut p.a, n(2.0));
            set(&mut p.cap_depth, n(64.0));
        }
        Sub::IdentityCheck => set(&mut p.r0, n(E)),
        Sub::ProbeZero => {
            set(&mut p.b, n(1.5));
            set(&mut p.alpha, n(0.4));
            set(&mut p.cuts, vec![n(8.0), n(16.0), n(32.0), n(64.0)]);
        }
        Sub::ProbeInfinity => {
            set(&mut p.alpha_exp, n(0.5));
            set(&mut p.n_list, vec![100, 1000, 10_000]);
        }
        Sub::Hardy => {
            set(&mut p.m_min, -3);
            set(&mut p.m_max, 3);
        }
        Sub::Count => {
            set(&mut p.lambda, n(1.0));
            set(&mut p.method, "inertia".into());
        }
        Sub::Sweep => {
            set(&mut p.lambdas, default_lambdas());
            set(&mut p.method, "phase_integral".into());
        }
        Sub::Bound => {
            set(&mut p.lambdas, default_lambdas());
            set(&mut p.method, "phase_integral".into());
            set(&mut p.a, n(2.0));
            set(&mut p.cap_depth, n(64.0));
        }
    }
    if p.method.is_some() {
        p.method = Some(kind(&p.method));
    }
    let params = p.clone();
    let uses_field = !matches!(sub, Sub::Vnorm | Sub::IdentityCheck);
    let uses_potential = matches!(sub, Sub::Vnorm | Sub::Count | Sub::Sweep | Sub::Bound);
    let uses_weight = matches!(sub, Sub::Weight | Sub::Hardy | Sub::ProbeInfinity);
    let uses_grid = matches!(sub, Sub::IdentityCheck | Sub::Hardy | Sub::Count | Sub::Sweep | Sub::Bound);
    if uses_field {
        resolve_field(cfg.field.get_or_insert_with(FieldSpec::default), sub);
    }
    if uses_potential {
        resolve_potential(cfg.potential.get_or_insert_with(PotentialSpec::default));
    }
    if uses_weight {
        resolve_weight(cfg.weight.get_or_insert_with(WeightSpec::default));
    }
    if uses_grid {
        resolve_grid(cfg.grid.get_or_insert_with(GridSpec::default), sub, &params);
    }
}

fn need(x: Option<Num>, key: &str) -> Result<f64, CliError> {
    x.map(|v| v.0).ok_or_else(|| CliError::value(key, "missing"))
}

fn read_table(path: &str) -> Result<Tabulated, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_string(), source })?;
    Ok(Tabulated::parse(&text)?)
}

fn build_field(f: &FieldSpec) -> Result<RadialField, CliError> {
    let field = match f.kind.as_deref().unwrap_or("") {
        "zero" => RadialField::Zero,
        "example1" => RadialField::example1(need(f.b0, "field.b0")?, need(f.gamma, "field.gamma")?),
        "example2" => RadialField::example2(need(f.b0, "field.b0")?, need(f.gamma, "field.gamma")?),
        "bump" => RadialField::bump(need(f.total_flux, "field.total_flux")?, need(f.r1, "field.r1")?),
        "custom" => {
            let path = f.file.as_deref().ok_or_else(|| CliError::value("field.file", "custom field needs a table"))?;
            let class = match f.class.as_deref().map(|c| c.to_ascii_lowercase().replace('-', "_")) {
                None => None,
                Some(c) if c == "regular" => Some(SingularityClass::Regular),
                Some(c) if c == "singular" => Some(SingularityClass::Singular),
                Some(c) if c == "not_locally_integrable" => Some(SingularityClass::NotLocallyIntegrable),
                Some(c) => return Err(CliError::value("field.class", format!("unknown class `{c}`"))),
            };
            RadialField::custom(read_table(path)?, class)
        }
        other => return Err(CliError::value("field.kind", format!("unknown field `{other}`"))),
    };
    field.validate()?;
    Ok(field)
}

fn build_potential(p: &PotentialSpec) -> Result<Potential, CliError> {
    let v = match p.kind.as_deref().unwrap_or("") {
        "zero" => Potential::Zero,
        "vsigma" => Potential::VSigma { sigma: need(p.sigma, "potential.sigma")? },
        "gaussian_well" => Potential::GaussianWell {
            depth: need(p.depth, "potential.depth")?,
            width: need(p.width, "potential.width")?,
        },
        "step_well" => Potential::StepWell {
            depth: need(p.depth, "potential.depth")?,
            radius: need(p.radius, "potential.radius")?,
        },
        "custom" => {
            let path = p.file.as_deref().ok_or_else(|| CliError::value("potential.file", "custom potential needs a table"))?;
            Potential::custom(read_table(path)?)
        }
        other => return Err(CliError::value("potential.kind", format!("unknown potential `{other}`"))),
    };
    let scale = p.scale.map_or(1.0, |s| s.0);
    let v = if scale == 1.0 { v } else { v.scaled(scale) };
    v.validate()?;
    Ok(v)
}

fn build_weight(w: &WeightSpec, field: Option<&RadialField>) -> Result<Weight, CliError> {
    Ok(match w.kind.as_deref().unwrap_or("") {
        "rho0" => Weight::Rho0,
        "log_power" => Weight::LogPower { b: need(w.b, "weight.b")? },
        "singular_rho" => {
            let field = field.ok_or_else(|| CliError::value("weight.kind", "singular_rho needs a field"))?;
            Weight::singular_rho(field.clone())?
        }
        "cfkp" => Weight::Cfkp { r0: need(w.r0, "weight.r0")? },
        "aharonov_bohm" => Weight::AharonovBohm { mu: need(w.mu, "weight.mu")? },
        "custom" => {
            let path = w.file.as_deref().ok_or_else(|| CliError::value("weight.file", "custom weight needs a table"))?;
            Weight::custom(&read_table(path)?)
        }
        other => return Err(CliError::value("weight.kind", format!("unknown weight `{other}`"))),
    })
}

fn build_grid(g: &GridSpec) -> Result<Grid, CliError> {
    let (lo, hi) = (need(g.t_min, "grid.t_min")?, need(g.t_max, "grid.t_max")?);
    let count = g.n.ok_or_else(|| CliError::value("grid.n", "missing"))?;
    Ok(match g.spacing.as_deref().unwrap_or("t") {
        "t" => Grid::uniform_t(lo, hi, count)?,
        "s" => Grid::uniform_s(magnetic_hardy::coords::stretch(lo), magnetic_hardy::coords::stretch(hi), count)?,
        other => return Err(CliError::value("grid.spacing", format!("expected `t` or `s`, got `{other}`"))),
    })
}

fn build_method(p: &Params) -> Result<Method, CliError> {
    match p.method.as_deref().unwrap_or("") {
        "inertia" => Ok(Method::Inertia),
        "prufer" => Ok(Method::Prufer),
        "phase_integral" => Ok(Method::PhaseIntegral),
        other => Err(CliError::value("params.method", format!("unknown method `{other}`"))),
    }
}

fn log_radius(p: &Params) -> Result<LogRadius, CliError> {
    Ok(match (p.r, p.t) {
        (Some(r), _) => LogRadius::from_radius(r.0)?,
        (None, Some(t)) => LogRadius::new(t.0)?,
        (None, None) => return Err(CliError::value("params.r", "give a radius or a log radius")),
    })
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("payload serializes")
}

fn nums(xs: &Option<Vec<Num>>, key: &str) -> Result<Vec<f64>, CliError> {
    xs.as_ref().map(|v| v.iter().map(|x| x.0).collect()).ok_or_else(|| CliError::value(key, "missing"))
}

/// Run a resolved configuration.
pub fn execute(cfg: &RunConfig, sub: Sub) -> Result<Outcome, CliError> {
    let p = cfg.params.clone().unwrap_or_default();
    let field = cfg.field.as_ref().map(build_field).transpose()?;
    let potential = cfg.potential.as_ref().map(build_potential).transpose()?;
    let weight = cfg.weight.as_ref().map(|w| build_weight(w, field.as_ref())).transpose()?;
    let grid = cfg.grid.as_ref().map(build_grid).transpose()?;
    let field = field.unwrap_or(RadialField::Zero);
    let potential = potential.unwrap_or(Potential::Zero);
    let weight = weight.unwrap_or(Weight::Rho0);
    let grid = || grid.clone().ok_or_else(|| CliError::value("grid", "missing"));
    let mut warnings = Vec::new();
    let mut tables = Vec::new();
    let payload = match sub {
        Sub::Flux => {
            let lr = log_radius(&p)?;
            json!({
                "t": lr.t(),
                "r": lr.radius(),
                "alpha": flux(&field, lr)?,
                "phi": phi(&field, lr)?,
                "gauge": azimuthal_gauge(&field, lr)?,
                "class": to_value(&singularity_class(&field)?),
            })
        }
        Sub::Weight => {
            let lr = log_radius(&p)?;
            let mut out = json!({ "t": lr.t(), "r": lr.radius(), "weight": eval_weight(&weight, lr)? });
            if let (Some(a), Some(l)) = (p.moment_alpha, p.log_r) {
                out["log_moment"] = json!(log_moment(&weight, a.0, l.0)?);
            }
            out
        }
        Sub::Vnorm => {
            let r = v_norm_a(&potential, need(p.a, "params.a")?, need(p.cap_depth, "params.cap_depth")?)?;
            warnings.extend(r.warnings.iter().cloned());
            tables.push(Table {
                suffix: "",
                header: vec!["tau", "tau_pow_a_measure"],
                rows: r.profile.iter().map(|&(t, v)| vec![Cell::Num(t), Cell::Num(v)]).collect(),
            });
            let mut out = to_value(&r);
            out.as_object_mut().unwrap().remove("profile");
            out
        }
        Sub::IdentityCheck => {
            let g = grid()?;
            let r0 = need(p.r0, "params.r0")?;
            json!({ "r0": r0, "nodes": g.len(), "max_residual": check_f_identity(r0, &g) })
        }
        Sub::ProbeZero => {
            let r = hardy_probe_at_zero(&field, need(p.b, "params.b")?, need(p.alpha, "params.alpha")?, &nums(&p.cuts, "params.cuts")?)?;
            tables.push(Table {
                suffix: "",
                header: vec!["k", "numerator", "denominator", "ratio"],
                rows: r
                    .rows
                    .iter()
                    .map(|x| vec![Cell::Num(x.cut), Cell::Num(x.numerator), Cell::Num(x.denominator), Cell::Num(x.ratio)])
                    .collect(),
            });
            to_value(&r)
        }
        Sub::ProbeInfinity => {
            let list = p.n_list.clone().ok_or_else(|| CliError::value("params.n_list", "missing"))?;
            let rows = infinity_probe(&field, &weight, need(p.alpha_exp, "params.alpha_exp")?, &list)?;
            tables.push(Table {
                suffix: "",
                header: vec!["n", "q", "weighted_norm", "ratio"],
                rows: rows
                    .iter()
                    .map(|x| vec![Cell::Int(x.n as i64), Cell::Num(x.q), Cell::Num(x.weighted_norm), Cell::Num(x.ratio)])
                    .collect(),
            });
            json!({ "rows": to_value(&rows) })
        }
        Sub::Hardy => {
            let (lo, hi) = (p.m_min.unwrap_or(-3), p.m_max.unwrap_or(3));
            let r = hardy_constant(&field, &weight, &grid()?, lo..=hi)?;
            tables.push(Table {
                suffix: "",
                header: vec!["m", "mu"],
                rows: r.per_mode_minima.iter().map(|&(m, mu)| vec![Cell::Int(m), Cell::Num(mu)]).collect(),
            });
            to_value(&r)
        }
        Sub::Count => {
            let r = count_total(&field, &potential, need(p.lambda, "params.lambda")?, &grid()?, build_method(&p)?)?;
            warnings.extend(r.warnings.iter().cloned());
            tables.push(Table {
                suffix: "",
                header: vec!["m", "count"],
                rows: r.per_mode.iter().map(|&(m, c)| vec![Cell::Int(m), Cell::Int(c as i64)]).collect(),
            });
            to_value(&r)
        }
        Sub::Sweep => {
            let method = build_method(&p)?;
            let r = sweep_exponent(&field, &potential, &nums(&p.lambdas, "params.lambdas")?, &grid()?, method)?;
            for rep in &r.reports {
                warnings.extend(rep.warnings.iter().cloned());
            }
            tables.push(Table {
                suffix: "",
                header: vec!["lambda", "N", "method", "m_max"],
                rows: r
                    .reports
                    .iter()
                    .map(|x| {
                        vec![
                            Cell::Num(x.lambda),
                            Cell::Int(x.total as i64),
                            Cell::Text(p.method.clone().unwrap_or_default()),
                            Cell::Int(x.m_max),
                        ]
                    })
                    .collect(),
            });
            to_value(&r)
        }
        Sub::Bound => {
            let jst = match bound_jst(&potential) {
                Ok(v) => json!({ "value": v, "unbounded": false }),
                Err(Error::Unbounded { caps }) => {
                    warnings.push(Warning::Unbounded {
                        detail: format!("weighted integral of V grows along the cap sequence {caps:?}"),
                    });
                    json!({ "value": null, "unbounded": true, "caps": caps })
                }
                Err(e) => return Err(e.into()),
            };
            let r = verify_counting_bound(
                &field,
                &potential,
                need(p.a, "params.a")?,
                &nums(&p.lambdas, "params.lambdas")?,
                &grid()?,
                build_method(&p)?,
                need(p.cap_depth, "params.cap_depth")?,
            )?;
            warnings.extend(r.warnings.iter().cloned());
            tables.push(Table {
                suffix: "",
                header: vec!["lambda", "N", "v_norm_pow_a", "ratio"],
                rows: r
                    .rows
                    .iter()
                    .map(|x| vec![Cell::Num(x.lambda), Cell::Int(x.count as i64), Cell::Num(x.v_norm_pow_a), Cell::Num(x.ratio)])
                    .collect(),
            });
            json!({ "jst": jst, "counting_bound": to_value(&r) })
        }
    };
    let mut unique: Vec<Warning> = Vec::new();
    for w in warnings {
        if !unique.contains(&w) {
            unique.push(w);
        }
    }
    Ok(Outcome { payload, tables, warnings: unique })
}
