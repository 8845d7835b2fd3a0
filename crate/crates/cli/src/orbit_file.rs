//! Orbit-model JSON files.
//!
//! ```json
//! { "name": "demo", "lambda": 2, "S": [0.0, 6.283185307179586], "w": [0.5], "T": [6.283185307179586] }
//! ```
//!
//! Coefficient arrays are in ascending powers of `E`. `T` may be left out
//! when `S` is at most linear; it is then taken as `dS/dE`.

use std::path::Path;

use anyhow::{Context, Result};
use semiclassical::gutzwiller::OrbitModel;
use semiclassical::poly::Polynomial;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitFile {
    name: String,
    lambda: u32,
    #[serde(rename = "S")]
    action: Vec<f64>,
    w: Vec<f64>,
    #[serde(rename = "T", default)]
    period: Option<Vec<f64>>,
}

pub fn parse_orbit(text: &str) -> Result<OrbitModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: OrbitFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            anyhow::anyhow!("invalid orbit file: {inner}")
        } else {
            anyhow::anyhow!("invalid orbit file: field `{path}`: {inner}")
        }
    })?;
    let orbit = OrbitModel::new(
        file.name,
        Polynomial::new(file.action),
        Polynomial::new(file.w),
        file.period.map(Polynomial::new),
        file.lambda,
    )
    .context("invalid orbit model")?;
    Ok(orbit)
}

pub fn load_orbit(path: &Path) -> Result<OrbitModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_orbit(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_files_parse() {
        let lin = parse_orbit(include_str!("../data/linear_orbit.json")).unwrap();
        assert_eq!(lin.period().coeffs(), &[std::f64::consts::TAU]);
        assert_eq!(lin.focal_points(), 2);
        parse_orbit(include_str!("../data/quadratic_orbit.json")).unwrap();
    }

    #[test]
    fn errors_name_the_field() {
        let missing = parse_orbit(r#"{"name":"a","S":[0,1],"w":[1]}"#).unwrap_err();
        assert!(format!("{missing:#}").contains("lambda"));
        let negative = parse_orbit(r#"{"name":"a","lambda":-1,"S":[0,1],"w":[1]}"#).unwrap_err();
        assert!(format!("{negative:#}").contains("lambda"));
        let wrong = parse_orbit(r#"{"name":"a","lambda":1,"S":[0,"x"],"w":[1]}"#).unwrap_err();
        assert!(format!("{wrong:#}").contains("S"));
        let no_t = parse_orbit(r#"{"name":"a","lambda":1,"S":[0,1,1],"w":[1]}"#).unwrap_err();
        assert!(format!("{no_t:#}").contains("`T`"));
        let extra = parse_orbit(r#"{"name":"a","lambda":1,"S":[0,1],"w":[1],"q":1}"#).unwrap_err();
        assert!(format!("{extra:#}").contains("q"));
    }
}
