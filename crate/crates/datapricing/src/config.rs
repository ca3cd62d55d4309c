//! Parameter files: a flat JSON object with the model constants and,
//! optionally, the numerical controls.

use std::path::Path;

use datapricing_core::params::FIELD_NAMES;
use datapricing_core::{MarketParams, NumericalControls};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

const CONTROL_NAMES: [&str; 5] = ["n_steps", "n_paths", "seed", "ode_tol", "det_floor"];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config must be a JSON object")]
    NotObject,
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("missing model key {0:?}")]
    Missing(&'static str),
    #[error("key {key:?}: {message}")]
    BadValue { key: String, message: String },
}

/// Model parameters plus numerical controls after defaults and overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedConfig {
    pub params: MarketParams,
    pub controls: NumericalControls,
}

#[derive(Serialize)]
struct Canonical {
    alpha: f64,
    beta: f64,
    sigma: f64,
    sigma0: f64,
    q0: f64,
    a: f64,
    b: f64,
    c: f64,
    kappa: f64,
    rho: f64,
    lambda: f64,
    nu: f64,
    #[serde(rename = "T")]
    horizon: f64,
    n: usize,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    ode_tol: f64,
    det_floor: f64,
}

impl ResolvedConfig {
    pub fn baseline() -> Self {
        Self {
            params: MarketParams::baseline(),
            controls: NumericalControls::default(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text)?;
        let map = value.as_object().ok_or(ConfigError::NotObject)?;
        Self::from_map(map)
    }

    fn from_map(map: &Map<String, Value>) -> Result<Self, ConfigError> {
        if let Some(key) = map
            .keys()
            .find(|k| !FIELD_NAMES.contains(&k.as_str()) && !CONTROL_NAMES.contains(&k.as_str()))
        {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        let mut params = MarketParams::baseline();
        for name in FIELD_NAMES {
            let v = map.get(name).ok_or(ConfigError::Missing(name))?;
            let x = number(name, v)?;
            params.set(name, x).map_err(|e| ConfigError::BadValue {
                key: name.into(),
                message: e.to_string(),
            })?;
        }
        let mut controls = NumericalControls::default();
        if let Some(v) = map.get("n_steps") {
            controls.n_steps = count("n_steps", v)? as usize;
        }
        if let Some(v) = map.get("n_paths") {
            controls.n_paths = count("n_paths", v)? as usize;
        }
        if let Some(v) = map.get("seed") {
            controls.seed = count("seed", v)?;
        }
        if let Some(v) = map.get("ode_tol") {
            controls.ode_tol = number("ode_tol", v)?;
        }
        if let Some(v) = map.get("det_floor") {
            controls.det_floor = number("det_floor", v)?;
        }
        Ok(Self { params, controls })
    }

    /// Pretty JSON with a fixed key order; the hash input of the manifest.
    pub fn canonical_json(&self) -> String {
        let p = &self.params;
        let c = &self.controls;
        let canon = Canonical {
            alpha: p.alpha,
            beta: p.beta,
            sigma: p.sigma,
            sigma0: p.sigma0,
            q0: p.q0,
            a: p.a,
            b: p.b,
            c: p.c,
            kappa: p.kappa,
            rho: p.rho,
            lambda: p.lambda,
            nu: p.nu,
            horizon: p.horizon,
            n: p.n,
            n_steps: c.n_steps,
            n_paths: c.n_paths,
            seed: c.seed,
            ode_tol: c.ode_tol,
            det_floor: c.det_floor,
        };
        let mut s = serde_json::to_string_pretty(&canon).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn number(key: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_f64().ok_or_else(|| ConfigError::BadValue {
        key: key.into(),
        message: format!("expected a number, got {v}"),
    })
}

fn count(key: &str, v: &Value) -> Result<u64, ConfigError> {
    if let Some(u) = v.as_u64() {
        return Ok(u);
    }
    match v.as_f64() {
        Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as u64),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            message: format!("expected a non-negative integer, got {v}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"{"alpha":0.12,"beta":0.4,"sigma":0.5,"sigma0":0.2,"q0":-1,"a":0.5,"b":0.4,
        "c":0.03,"kappa":0.3,"rho":0.25,"lambda":0.6,"nu":0.7,"T":1,"n":30}"#;

    #[test]
    fn table1_with_defaults() {
        let c = ResolvedConfig::from_json(TABLE1).unwrap();
        assert_eq!(c, ResolvedConfig::baseline());
    }

    #[test]
    fn round_trips_through_canonical_form() {
        let c = ResolvedConfig::from_json(TABLE1).unwrap();
        let again = ResolvedConfig::from_json(&c.canonical_json()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn controls_override_defaults() {
        let text = TABLE1.replace("\"n\":30", "\"n\":30,\"n_steps\":200,\"seed\":7,\"ode_tol\":1e-8");
        let c = ResolvedConfig::from_json(&text).unwrap();
        assert_eq!(
            (c.controls.n_steps, c.controls.seed, c.controls.ode_tol),
            (200, 7, 1e-8)
        );
        assert_eq!(c.controls.n_paths, 256);
    }

    #[test]
    fn rejects_missing_unknown_and_malformed() {
        let missing = TABLE1.replace("\"kappa\":0.3,", "");
        assert!(matches!(
            ResolvedConfig::from_json(&missing),
            Err(ConfigError::Missing("kappa"))
        ));
        let unknown = TABLE1.replace("\"n\":30", "\"n\":30,\"gamma\":1");
        assert!(matches!(
            ResolvedConfig::from_json(&unknown),
            Err(ConfigError::UnknownKey(_))
        ));
        let frac = TABLE1.replace("\"n\":30", "\"n\":30.5");
        assert!(matches!(
            ResolvedConfig::from_json(&frac),
            Err(ConfigError::BadValue { .. })
        ));
        let text = TABLE1.replace("\"q0\":-1", "\"q0\":\"low\"");
        assert!(matches!(
            ResolvedConfig::from_json(&text),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(ResolvedConfig::from_json("[1]"), Err(ConfigError::NotObject)));
        assert!(matches!(ResolvedConfig::from_json("{"), Err(ConfigError::Json(_))));
    }
}
