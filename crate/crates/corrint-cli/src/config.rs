//! Run configuration: one JSON document whose keys command-line flags may
//! override.

use std::path::PathBuf;

use corrint_core::convexint::{DeltaRule, LambdaSearch};
use corrint_core::models::ModelParams;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: String,
    pub model_params: ModelParams,
    pub eps: f64,
    pub tol: f64,
    pub max_stages: usize,
    pub delta_rule: DeltaRule,
    pub search: LambdaSearch,
    pub seed: u64,
    pub report: Option<PathBuf>,
    pub obj: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub export_grid: usize,
}

/// A schema violation, located by its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at {}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

fn field<T: DeserializeOwned>(path: &str, v: &Value) -> Result<T, ConfigError> {
    serde_json::from_value(v.clone()).map_err(|e| err(path, e.to_string()))
}

/// Apply the keys of `obj` to `target` one at a time, so that errors name
/// the offending key.
fn merge_struct<T: Serialize + DeserializeOwned>(path: &str, target: &mut T, obj: &Value) -> Result<(), ConfigError> {
    let Value::Object(src) = obj else {
        return Err(err(path, "expected an object"));
    };
    let mut cur = serde_json::to_value(&*target).expect("serializable");
    let Value::Object(dst) = &mut cur else { unreachable!() };
    for (k, v) in src {
        let p = format!("{path}.{k}");
        let Some(slot) = dst.get_mut(k) else {
            return Err(err(&p, "unknown key"));
        };
        *slot = v.clone();
        // Type-check this key on its own.
        let _: T = field(&p, &Value::Object(dst.clone()))?;
    }
    *target = field(path, &cur)?;
    Ok(())
}

impl RunConfig {
    /// Defaults for everything except the model name.
    pub fn defaults(model: String) -> Self {
        Self {
            model,
            model_params: ModelParams::default(),
            eps: 0.5,
            tol: 0.01,
            max_stages: 8,
            delta_rule: DeltaRule::default(),
            search: LambdaSearch::default(),
            seed: 0,
            report: None,
            obj: None,
            csv: None,
            export_grid: 256,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let v: Value = serde_json::from_str(text).map_err(|e| err("config", e.to_string()))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> Result<Self, ConfigError> {
        let Value::Object(obj) = v else {
            return Err(err("config", "expected an object"));
        };
        let model = match obj.get("model") {
            Some(m) => field::<String>("config.model", m)?,
            None => return Err(err("config.model", "missing required key")),
        };
        let mut cfg = Self::defaults(model);
        for (k, v) in obj {
            let p = format!("config.{k}");
            match k.as_str() {
                "model" => {}
                "model_params" => merge_struct(&p, &mut cfg.model_params, v)?,
                "search" => merge_struct(&p, &mut cfg.search, v)?,
                "eps" => cfg.eps = field(&p, v)?,
                "tol" => cfg.tol = field(&p, v)?,
                "max_stages" => cfg.max_stages = field(&p, v)?,
                "delta_rule" => cfg.delta_rule = field(&p, v)?,
                "seed" => cfg.seed = field(&p, v)?,
                "report" => cfg.report = field(&p, v)?,
                "obj" => cfg.obj = field(&p, v)?,
                "csv" => cfg.csv = field(&p, v)?,
                "export_grid" => cfg.export_grid = field(&p, v)?,
                _ => return Err(err(&p, "unknown key")),
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.model.is_empty() {
            return Err(err("config.model", "must not be empty"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(err("config.eps", "must be > 0"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(err("config.tol", "must be > 0"));
        }
        if self.max_stages == 0 {
            return Err(err("config.max_stages", "must be ≥ 1"));
        }
        if self.export_grid < 2 {
            return Err(err("config.export_grid", "must be ≥ 2"));
        }
        if self.search.samples_per_period < 8.0 {
            return Err(err("config.search.samples_per_period", "must be ≥ 8"));
        }
        self.search.validate().map_err(|e| err("config.search", e.to_string()))
    }

    /// The search parameters with the configured seed.
    pub fn effective_search(&self) -> LambdaSearch {
        LambdaSearch { seed: self.seed, ..self.search }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_model_is_reported() {
        let e = RunConfig::from_json(r#"{"eps": 0.5}"#).unwrap_err();
        assert_eq!(e.path, "config.model");
    }

    #[test]
    fn nested_errors_carry_paths() {
        let e = RunConfig::from_json(r#"{"model": "coin", "model_params": {"a": "x"}}"#).unwrap_err();
        assert_eq!(e.path, "config.model_params.a");
        let e = RunConfig::from_json(r#"{"model": "coin", "search": {"bogus": 1}}"#).unwrap_err();
        assert_eq!(e.path, "config.search.bogus");
        let e = RunConfig::from_json(r#"{"model": "coin", "tol": -1}"#).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "config.tol");
        let e = RunConfig::from_json(r#"{"model": "coin", "search": {"samples_per_period": 4}}"#)
            .unwrap()
            .validate()
            .unwrap_err();
        assert_eq!(e.path, "config.search.samples_per_period");
    }

    #[test]
    fn keys_override_defaults() {
        let c = RunConfig::from_json(r#"{"model": "coin", "model_params": {"a": 0.5}, "eps": 0.2, "seed": 7}"#).unwrap();
        assert_eq!(c.model_params.a, 0.5);
        assert_eq!(c.model_params.eps_band, ModelParams::default().eps_band);
        assert_eq!(c.eps, 0.2);
        assert_eq!(c.effective_search().seed, 7);
    }
}
