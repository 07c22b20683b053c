//! Run configuration: file schema, flag overrides and defaults.

use std::f64::consts::{E, PI};
use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// A real number that may be written as a float, `e` or `pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

pub fn parse_number(text: &str) -> Result<f64, String> {
    let s = text.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, s.strip_prefix('+').unwrap_or(s).trim()),
    };
    let value = match body.to_ascii_lowercase().as_str() {
        "e" => E,
        "pi" | "π" => PI,
        "inf" | "infinity" => f64::INFINITY,
        other => other.parse::<f64>().map_err(|_| format!("not a number: `{text}`"))?,
    };
    Ok(sign * value)
}

pub fn parse_num(text: &str) -> Result<Num, String> {
    parse_number(text).map(Num)
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct NumVisitor;
        impl Visitor<'_> for NumVisitor {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, `e` or `pi`")
            }
            fn visit_f64<E2: de::Error>(self, v: f64) -> Result<Num, E2> {
                Ok(Num(v))
            }
            fn visit_i64<E2: de::Error>(self, v: i64) -> Result<Num, E2> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E2: de::Error>(self, v: u64) -> Result<Num, E2> {
                Ok(Num(v as f64))
            }
            fn visit_str<E2: de::Error>(self, v: &str) -> Result<Num, E2> {
                parse_num(v).map_err(E2::custom)
            }
        }
        d.deserialize_any(NumVisitor)
    }
}

macro_rules! overlay {
    ($self:ident, $other:ident; $($f:ident),* $(,)?) => {
        $( if $other.$f.is_some() { $self.$f = $other.$f.clone(); } )*
    };
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_flux: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<Num>,
    /// Two-column `(t, B)` table for `custom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
}

impl FieldSpec {
    pub fn overlay(&mut self, o: &Self) {
        overlay!(self, o; kind, b0, gamma, total_flux, r1, file, class);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<Num>,
    /// Two-column `(t, V)` table for `custom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Num>,
}

impl PotentialSpec {
    pub fn overlay(&mut self, o: &Self) {
        overlay!(self, o; kind, sigma, depth, width, radius, file, scale);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Num>,
    /// Two-column `(t, w)` table for `custom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

impl WeightSpec {
    pub fn overlay(&mut self, o: &Self) {
        overlay!(self, o; kind, b, r0, mu, file);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `t` for nodes uniform in `ln r`, `s` for nodes uniform in the stretched coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<String>,
}

impl GridSpec {
    pub fn overlay(&mut self, o: &Self) {
        overlay!(self, o; t_min, t_max, n, spacing);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap_depth: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cuts: Option<Vec<Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_exp: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_min: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<Num>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_alpha: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_r: Option<Num>,
}

impl Params {
    pub fn overlay(&mut self, o: &Self) {
        overlay!(self, o; r, t, r0, a, cap_depth, b, alpha, cuts, alpha_exp, n_list, m_min, m_max,
            lambda, lambdas, method, moment_alpha, log_r);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Params>,
}

fn overlay_section<T: Clone + Default>(base: &mut Option<T>, top: &Option<T>, f: impl Fn(&mut T, &T)) {
    if let Some(t) = top {
        f(base.get_or_insert_with(T::default), t);
    }
}

impl RunConfig {
    /// Read TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        let config_err = |message: String| CliError::Config { path: path.display().to_string(), message };
        if path.extension().is_some_and(|e| e == "json") {
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
            // a full report carries the run config under `config`
            let inner = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(inner).map_err(|e| config_err(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| config_err(e.to_string()))
        }
    }

    /// Apply `top` over `self`; values present in `top` win.
    pub fn overlay(&mut self, top: &Self) {
        overlay!(self, top; subcommand, seed, output);
        overlay_section(&mut self.field, &top.field, FieldSpec::overlay);
        overlay_section(&mut self.potential, &top.potential, PotentialSpec::overlay);
        overlay_section(&mut self.weight, &top.weight, WeightSpec::overlay);
        overlay_section(&mut self.grid, &top.grid, GridSpec::overlay);
        overlay_section(&mut self.params, &top.params, Params::overlay);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_accept_constants() {
        assert_eq!(parse_number("e").unwrap(), E);
        assert_eq!(parse_number("-pi").unwrap(), -PI);
        assert_eq!(parse_number("1e-3").unwrap(), 1e-3);
        assert!(parse_number("ee").is_err());
    }

    #[test]
    fn toml_numbers_may_be_strings() {
        let c: RunConfig = toml::from_str("[params]\nr0 = \"e\"\nlambda = 3\n").unwrap();
        let p = c.params.unwrap();
        assert_eq!(p.r0, Some(Num(E)));
        assert_eq!(p.lambda, Some(Num(3.0)));
    }

    #[test]
    fn unknown_keys_are_reported() {
        let err = toml::from_str::<RunConfig>("[field]\nkind = \"bump\"\nflux = 1\n").unwrap_err().to_string();
        assert!(err.contains("flux"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn overlay_prefers_top() {
        let mut base: RunConfig = toml::from_str("[field]\nkind = \"bump\"\ntotal_flux = 0.5\n").unwrap();
        let top: RunConfig = toml::from_str("[field]\ntotal_flux = 1.0\n").unwrap();
        base.overlay(&top);
        let f = base.field.unwrap();
        assert_eq!(f.kind.as_deref(), Some("bump"));
        assert_eq!(f.total_flux, Some(Num(1.0)));
    }
}
