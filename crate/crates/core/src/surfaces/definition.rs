//! JSON surface definitions: a catalog-like surface described in a file.
//!
//! ```json
//! {
//!   "name": "my_surface",
//!   "base": "example1",
//!   "sigma": "log(a * sech(x))",
//!   "params": {"a": 2.0},
//!   "domain": {"x": [null, null], "y": [null, null]},
//!   "claims_lightcone": true,
//!   "expected_k": 0.25
//! }
//! ```
//!
//! `base` is one of `example1`, `unit_sphere`, `cylinder` or `custom`; a
//! custom base takes `coords`, four expressions in the chart variables.
//! `domain` is `"sphere"` or a rectangle whose `null` bounds are unbounded.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::{parse_with, Base, BoundExpr, ChartDomain, Expected, Surface, SurfaceFlags};
use crate::error::{Error, Result};

fn err(path: &str, message: impl Into<String>) -> Error {
    Error::Definition { path: path.to_string(), message: message.into() }
}

fn known_keys(obj: &Map<String, Value>) -> Result<()> {
    const KEYS: &[&str] = &[
        "name",
        "base",
        "sigma",
        "params",
        "domain",
        "coords",
        "claims_lightcone",
        "compact",
        "expected_k",
        "umbilical",
    ];
    for k in obj.keys() {
        if !KEYS.contains(&k.as_str()) {
            return Err(err(&format!("$.{k}"), "unknown key"));
        }
    }
    Ok(())
}

fn bound(v: &Value, path: &str, default: f64) -> Result<f64> {
    match v {
        Value::Null => Ok(default),
        Value::Number(n) => n.as_f64().ok_or_else(|| err(path, "not a finite number")),
        _ => Err(err(path, "expected a number or null")),
    }
}

fn range(obj: &Map<String, Value>, key: &str) -> Result<(f64, f64)> {
    let path = format!("$.domain.{key}");
    match obj.get(key) {
        None => Ok((f64::NEG_INFINITY, f64::INFINITY)),
        Some(Value::Array(a)) if a.len() == 2 => {
            let lo = bound(&a[0], &format!("{path}[0]"), f64::NEG_INFINITY)?;
            let hi = bound(&a[1], &format!("{path}[1]"), f64::INFINITY)?;
            if lo >= hi {
                return Err(err(&path, "lower bound must be below upper bound"));
            }
            Ok((lo, hi))
        }
        Some(_) => Err(err(&path, "expected [lower, upper]")),
    }
}

fn domain(v: Option<&Value>, base: &str) -> Result<ChartDomain> {
    let sphere_base = matches!(base, "unit_sphere" | "cylinder");
    match v {
        None if sphere_base => Ok(ChartDomain::SphereAtlas),
        None => Ok(ChartDomain::PLANE),
        Some(Value::String(s)) if s == "sphere" => Ok(ChartDomain::SphereAtlas),
        Some(Value::Object(o)) => {
            for k in o.keys() {
                if k != "x" && k != "y" {
                    return Err(err(&format!("$.domain.{k}"), "unknown key"));
                }
            }
            Ok(ChartDomain::Rectangle { x: range(o, "x")?, y: range(o, "y")? })
        }
        Some(_) => Err(err("$.domain", "expected \"sphere\" or {\"x\": [lo, hi], \"y\": [lo, hi]}")),
    }
}

fn expression(
    src: &Value,
    path: &str,
    names: &[&str],
    variables: &[&str],
    params: &BTreeMap<String, f64>,
) -> Result<(BoundExpr, String)> {
    let s = src.as_str().ok_or_else(|| err(path, "expected an expression string"))?;
    let e = parse_with(s, names).map_err(|e| err(path, e.to_string()))?;
    let b = e.bind(variables, params).map_err(|e| err(path, e.to_string()))?;
    Ok((b, e.to_string()))
}

/// Parses and validates a surface definition document.
pub fn from_json(text: &str) -> Result<Surface> {
    let value: Value = serde_json::from_str(text).map_err(|e| err("$", e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| err("$", "expected an object"))?;
    known_keys(obj)?;

    let name = match obj.get("name") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(err("$.name", "expected a non-empty string")),
        None => return Err(err("$.name", "missing")),
    };
    let base_name = match obj.get("base") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => return Err(err("$.base", "expected a string")),
        None => return Err(err("$.base", "missing")),
    };

    let mut params = BTreeMap::new();
    match obj.get("params") {
        None => {}
        Some(Value::Object(p)) => {
            for (k, v) in p {
                let path = format!("$.params.{k}");
                if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                    || k.starts_with(|c: char| c.is_ascii_digit())
                {
                    return Err(err(&path, "invalid parameter name"));
                }
                let x = v.as_f64().ok_or_else(|| err(&path, "expected a number"))?;
                params.insert(k.clone(), x);
            }
        }
        Some(_) => return Err(err("$.params", "expected an object")),
    }
    let names: Vec<&str> = params.keys().map(String::as_str).collect();

    let domain = domain(obj.get("domain"), base_name)?;
    let variables: &[&str] = if domain.is_sphere() { &["x", "y", "z"] } else { &["x", "y"] };

    let base = match base_name {
        "example1" | "unit_sphere" | "cylinder" if obj.contains_key("coords") => {
            return Err(err("$.coords", "only a custom base takes coordinates"))
        }
        "example1" if domain.is_sphere() => return Err(err("$.domain", "example1 is a plane surface")),
        "unit_sphere" | "cylinder" if !domain.is_sphere() => {
            return Err(err("$.domain", "this base lives on the sphere"))
        }
        "example1" => Base::Example1,
        "unit_sphere" => Base::UnitSphere,
        "cylinder" => Base::Cylinder,
        "custom" => {
            let coords = match obj.get("coords") {
                Some(Value::Array(a)) if a.len() == 4 => a,
                Some(_) => return Err(err("$.coords", "expected four expressions")),
                None => return Err(err("$.coords", "missing")),
            };
            let mut bound = Vec::with_capacity(4);
            for (i, c) in coords.iter().enumerate() {
                bound.push(expression(c, &format!("$.coords[{i}]"), &names, variables, &params)?.0);
            }
            Base::Custom(Box::new(bound.try_into().expect("four coordinates")))
        }
        _ => {
            return Err(err(
                "$.base",
                format!("unknown base `{base_name}` (expected example1, unit_sphere, cylinder, custom)"),
            ))
        }
    };

    let sigma = obj
        .get("sigma")
        .map(|s| expression(s, "$.sigma", &names, variables, &params))
        .transpose()?;

    let flag = |key: &str, default: bool| -> Result<bool> {
        match obj.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(err(&format!("$.{key}"), "expected a boolean")),
        }
    };
    let claims_lightcone = flag("claims_lightcone", matches!(base, Base::Example1 | Base::UnitSphere))?;
    let compact = flag("compact", domain.is_sphere())?;
    if compact && !domain.is_sphere() {
        return Err(err("$.compact", "only sphere surfaces are compact"));
    }
    let expected_k = match obj.get("expected_k") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_f64().ok_or_else(|| err("$.expected_k", "expected a number"))?),
    };
    let umbilical = match obj.get("umbilical") {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => return Err(err("$.umbilical", "expected a boolean")),
    };

    Ok(Surface {
        name,
        domain,
        base,
        sigma,
        params,
        flags: SurfaceFlags { claims_lightcone, compact },
        expected: Expected {
            k: expected_k,
            constant_k: expected_k.is_some(),
            umbilical,
            h_sq_integral: None,
            reilly_violation: false,
        },
    })
}

/// Reads a definition from disk.
pub fn load(path: &std::path::Path) -> Result<Surface> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{instantiate, ChartPoint};

    #[test]
    fn matches_catalog_surface() {
        let s = from_json(
            r#"{"name": "sech", "base": "example1", "sigma": "log(a * sech(x))",
                "params": {"a": 2}, "expected_k": 0.25}"#,
        )
        .unwrap();
        let params = [("a".to_string(), 2.0)].into();
        let c = instantiate("example1_sech_x", &params, None).unwrap();
        let p = ChartPoint::plane(0.4, -1.1);
        assert_eq!(s.evaluate(&p).unwrap(), c.evaluate(&p).unwrap());
        assert_eq!(s.expected.k, Some(0.25));
        assert!(s.flags.claims_lightcone);
    }

    #[test]
    fn sphere_and_custom() {
        let s = from_json(r#"{"name": "s", "base": "unit_sphere", "sigma": "0.1 * z"}"#).unwrap();
        assert!(s.domain.is_sphere() && s.flags.compact);
        let c = from_json(
            r#"{"name": "c", "base": "custom", "coords": ["cosh(x)", "sinh(x)", "y", "0"],
                "domain": {"x": [null, null], "y": [-1, 1]}}"#,
        )
        .unwrap();
        assert!(!c.flags.claims_lightcone);
        assert_eq!(c.domain, ChartDomain::Rectangle { x: (f64::NEG_INFINITY, f64::INFINITY), y: (-1.0, 1.0) });
    }

    fn path_of(text: &str) -> String {
        match from_json(text) {
            Err(Error::Definition { path, .. }) => path,
            other => panic!("expected a definition error, got {other:?}"),
        }
    }

    #[test]
    fn error_paths() {
        assert_eq!(path_of("[]"), "$");
        assert_eq!(path_of(r#"{"base": "example1"}"#), "$.name");
        assert_eq!(path_of(r#"{"name": "n", "base": "torus"}"#), "$.base");
        assert_eq!(path_of(r#"{"name": "n", "base": "example1", "sigma": "x +"}"#), "$.sigma");
        assert_eq!(path_of(r#"{"name": "n", "base": "example1", "sigma": "q * x"}"#), "$.sigma");
        assert_eq!(path_of(r#"{"name": "n", "base": "example1", "params": {"a": "one"}}"#), "$.params.a");
        assert_eq!(
            path_of(r#"{"name": "n", "base": "example1", "domain": {"x": [1, 0]}}"#),
            "$.domain.x"
        );
        assert_eq!(
            path_of(r#"{"name": "n", "base": "custom", "coords": ["x", "y", "1"]}"#),
            "$.coords"
        );
        assert_eq!(
            path_of(r#"{"name": "n", "base": "custom", "coords": ["x", "y", "1", "w"]}"#),
            "$.coords[3]"
        );
        assert_eq!(path_of(r#"{"name": "n", "base": "example1", "colour": 1}"#), "$.colour");
    }
}
