//! JSON scenario configuration: schema, validation, defaults.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::damage1d::{
    BodyForce, DamageScenario, EndProgram, Grid1D, LoadingProgram, MaterialParams, PhiTag,
};
use crate::error::{Error, Result};

pub const DEFAULT_CFL_FACTOR: f64 = 0.5;
pub const DEFAULT_SNAPSHOT_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Oscillator,
    DamageDynamic,
    DamageQuasistatic,
    Sweep,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Oscillator => "oscillator",
            Kind::DamageDynamic => "damage_dynamic",
            Kind::DamageQuasistatic => "damage_quasistatic",
            Kind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_nodes: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadingType {
    Ramp,
    Hold,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingConfig {
    #[serde(rename = "type")]
    pub loading_type: LoadingType,
    pub amplitude: f64,
    #[serde(default)]
    pub rate: f64,
}

/// Time step: a positive number or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Fixed(f64),
    Keyword(String),
}

impl DtSpec {
    pub fn auto() -> Self {
        DtSpec::Keyword("auto".into())
    }

    pub fn resolve(&self) -> Option<f64> {
        match self {
            DtSpec::Fixed(v) => Some(*v),
            DtSpec::Keyword(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    #[serde(default = "DtSpec::auto")]
    pub dt: DtSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_snapshot_every() -> usize {
    DEFAULT_SNAPSHOT_EVERY
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: String,
    pub values: Vec<f64>,
}

/// A validated scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: Kind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<LoadingConfig>,
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Parse and validate a UTF-8 JSON configuration document, filling defaults
/// (`cfl_factor = 0.5`, `snapshot_every = 100`).
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut cfg: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    validate(&mut cfg)?;
    Ok(cfg)
}

/// Serialize a configuration back to JSON.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serialization")
}

const OSCILLATOR_PARAMS: &[&str] = &["m", "k", "mu", "q0"];
const DAMAGE_PARAMS: &[&str] = &["k_e", "gamma", "c", "beta", "rho", "cfl_factor"];

fn require(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| Error::SchemaError(format!("missing required param: {key}")))
}

fn require_positive(params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = require(params, key)?;
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::SchemaError(format!("{key} must be positive")));
    }
    Ok(v)
}

fn reject_unknown_params(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::SchemaError(format!("unknown param: {key}")));
        }
    }
    Ok(())
}

fn validate_time(time: &TimeConfig) -> Result<()> {
    if !time.t_end.is_finite() || time.t_end <= 0.0 {
        return Err(Error::SchemaError("t_end must be positive".into()));
    }
    match &time.dt {
        DtSpec::Fixed(v) => {
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::SchemaError("dt must be positive".into()));
            }
        }
        DtSpec::Keyword(s) => {
            if s != "auto" {
                return Err(Error::SchemaError(format!(
                    "dt must be a positive number or \"auto\", got \"{s}\""
                )));
            }
        }
    }
    Ok(())
}

fn validate_damage_sections(cfg: &mut ScenarioConfig) -> Result<()> {
    reject_unknown_params(&cfg.params, DAMAGE_PARAMS)?;
    for key in ["k_e", "gamma", "c", "rho"] {
        require_positive(&cfg.params, key)?;
    }
    let beta = require(&cfg.params, "beta")?;
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::SchemaError("beta must be nonnegative".into()));
    }
    let cfl = *cfg
        .params
        .entry("cfl_factor".into())
        .or_insert(DEFAULT_CFL_FACTOR);
    if !(0.0..=1.0).contains(&cfl) || cfl == 0.0 {
        return Err(Error::SchemaError("cfl_factor must lie in (0, 1]".into()));
    }

    let grid = cfg
        .grid
        .ok_or_else(|| Error::SchemaError("missing required section: grid".into()))?;
    if grid.n_nodes < 3 {
        return Err(Error::SchemaError("n_nodes must be at least 3".into()));
    }
    if !grid.length.is_finite() || grid.length <= 0.0 {
        return Err(Error::SchemaError("length must be positive".into()));
    }

    let loading = cfg
        .loading
        .ok_or_else(|| Error::SchemaError("missing required section: loading".into()))?;
    if !loading.amplitude.is_finite() || loading.amplitude < 0.0 {
        return Err(Error::SchemaError("amplitude must be nonnegative".into()));
    }
    match loading.loading_type {
        LoadingType::Hold => {}
        LoadingType::Ramp | LoadingType::Sine => {
            if !loading.rate.is_finite() || loading.rate <= 0.0 {
                return Err(Error::SchemaError(
                    "rate must be positive for ramp and sine loading".into(),
                ));
            }
        }
    }
    Ok(())
}

fn validate(cfg: &mut ScenarioConfig) -> Result<()> {
    validate_time(&cfg.time)?;
    if cfg.output.snapshot_every == 0 {
        return Err(Error::SchemaError("snapshot_every must be at least 1".into()));
    }
    match cfg.kind {
        Kind::Oscillator => {
            reject_unknown_params(&cfg.params, OSCILLATOR_PARAMS)?;
            require_positive(&cfg.params, "m")?;
            require_positive(&cfg.params, "k")?;
            let mu = require(&cfg.params, "mu")?;
            if !mu.is_finite() || mu < 0.0 {
                return Err(Error::SchemaError("mu must be nonnegative".into()));
            }
            if let Some(q0) = cfg.params.get("q0") {
                if !q0.is_finite() || *q0 < 0.0 {
                    return Err(Error::SchemaError("q0 must be nonnegative".into()));
                }
            }
            for (present, name) in [
                (cfg.grid.is_some(), "grid"),
                (cfg.loading.is_some(), "loading"),
                (cfg.sweep.is_some(), "sweep"),
            ] {
                if present {
                    return Err(Error::SchemaError(format!(
                        "section {name} is not used by the oscillator kind"
                    )));
                }
            }
        }
        Kind::DamageDynamic | Kind::DamageQuasistatic => {
            validate_damage_sections(cfg)?;
            if cfg.sweep.is_some() {
                return Err(Error::SchemaError(
                    "section sweep requires kind = \"sweep\"".into(),
                ));
            }
        }
        Kind::Sweep => {
            validate_damage_sections(cfg)?;
            let sweep = cfg
                .sweep
                .as_ref()
                .ok_or_else(|| Error::SchemaError("missing required section: sweep".into()))?;
            if !DAMAGE_PARAMS.contains(&sweep.param.as_str()) || sweep.param == "cfl_factor" {
                return Err(Error::SchemaError(format!(
                    "sweep param must be a material parameter, got {}",
                    sweep.param
                )));
            }
            if sweep.values.is_empty() {
                return Err(Error::SchemaError("sweep values must be nonempty".into()));
            }
            for v in &sweep.values {
                if !v.is_finite() || *v <= 0.0 {
                    return Err(Error::SchemaError(
                        "sweep values must be positive".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Material parameters from a validated damage config.
pub fn material_params(cfg: &ScenarioConfig) -> Result<MaterialParams> {
    MaterialParams::new(
        require(&cfg.params, "k_e")?,
        require(&cfg.params, "gamma")?,
        require(&cfg.params, "c")?,
        require(&cfg.params, "beta")?,
        require(&cfg.params, "rho")?,
    )
}

/// Build the library scenario from a validated damage config.
pub fn damage_scenario(cfg: &ScenarioConfig, dt_override: Option<f64>) -> Result<DamageScenario> {
    let grid_cfg = cfg
        .grid
        .ok_or_else(|| Error::SchemaError("missing required section: grid".into()))?;
    let loading_cfg = cfg
        .loading
        .ok_or_else(|| Error::SchemaError("missing required section: loading".into()))?;
    let end_displacement = match loading_cfg.loading_type {
        LoadingType::Ramp => EndProgram::Ramp {
            amplitude: loading_cfg.amplitude,
            rate: loading_cfg.rate,
        },
        LoadingType::Hold => EndProgram::Hold {
            amplitude: loading_cfg.amplitude,
        },
        LoadingType::Sine => EndProgram::Sine {
            amplitude: loading_cfg.amplitude,
            rate: loading_cfg.rate,
        },
    };
    let dt = dt_override.or_else(|| cfg.time.dt.resolve());
    if let Some(v) = dt {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::SchemaError("dt must be positive".into()));
        }
    }
    Ok(DamageScenario {
        grid: Grid1D::new(grid_cfg.n_nodes, grid_cfg.length)?,
        params: material_params(cfg)?,
        phi: PhiTag::Quadratic,
        loading: LoadingProgram {
            end_displacement,
            body_force: BodyForce::Zero,
        },
        t_end: cfg.time.t_end,
        dt,
        cfl_factor: cfg.params["cfl_factor"],
        snapshot_every: cfg.output.snapshot_every,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator_json() -> &'static str {
        r#"{
            "kind": "oscillator",
            "params": {"m": 1.0, "k": 1.0, "mu": 0.1},
            "time": {"t_end": 10.0}
        }"#
    }

    fn damage_json() -> String {
        r#"{
            "kind": "damage_dynamic",
            "params": {"k_e": 1.0, "gamma": 0.5, "c": 0.4, "beta": 0.1, "rho": 1.0},
            "grid": {"n_nodes": 41, "length": 1.0},
            "loading": {"type": "ramp", "amplitude": 0.5, "rate": 0.2},
            "time": {"t_end": 2.0, "dt": "auto"},
            "output": {"snapshot_every": 50}
        }"#
        .to_string()
    }

    #[test]
    fn minimal_oscillator_gets_defaults() {
        let cfg = parse_config(oscillator_json()).unwrap();
        assert_eq!(cfg.kind, Kind::Oscillator);
        assert_eq!(cfg.output.snapshot_every, DEFAULT_SNAPSHOT_EVERY);
        assert_eq!(cfg.time.dt, DtSpec::auto());
    }

    #[test]
    fn damage_defaults_fill_cfl() {
        let cfg = parse_config(&damage_json()).unwrap();
        assert_eq!(cfg.params["cfl_factor"], DEFAULT_CFL_FACTOR);
        let scenario = damage_scenario(&cfg, None).unwrap();
        assert_eq!(scenario.dt, None);
        assert_eq!(scenario.snapshot_every, 50);
    }

    #[test]
    fn missing_gamma_names_the_key() {
        let text = damage_json().replace("\"gamma\": 0.5, ", "");
        let err = parse_config(&text).unwrap_err();
        match err {
            Error::SchemaError(msg) => assert!(msg.contains("gamma"), "{msg}"),
            other => panic!("expected SchemaError, got {other:?}"),
        }
    }

    #[test]
    fn negative_c_is_rejected_with_message() {
        let text = damage_json().replace("\"c\": 0.4", "\"c\": -0.4");
        let err = parse_config(&text).unwrap_err();
        match err {
            Error::SchemaError(msg) => assert_eq!(msg, "c must be positive"),
            other => panic!("expected SchemaError, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = damage_json().replace("\"rho\": 1.0", "\"rho\": 1.0, \"bogus\": 2.0");
        assert!(matches!(parse_config(&text), Err(Error::SchemaError(_))));

        let text = r#"{"kind": "oscillator", "params": {"m":1,"k":1,"mu":0}, "time": {"t_end": 1}, "extra": 1}"#;
        assert!(matches!(parse_config(text), Err(Error::ParseError(_))));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_config("{ not json").unwrap_err();
        match err {
            Error::ParseError(msg) => {
                assert!(msg.contains("line") && msg.contains("column"), "{msg}")
            }
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_config() {
        for text in [oscillator_json().to_string(), damage_json()] {
            let cfg = parse_config(&text).unwrap();
            let reparsed = parse_config(&serialize_config(&cfg)).unwrap();
            assert_eq!(cfg, reparsed);
        }
    }

    #[test]
    fn sweep_requires_values() {
        let text = damage_json()
            .replace("damage_dynamic", "sweep")
            .replace("\"output\"", "\"sweep\": {\"param\": \"c\", \"values\": []}, \"output\"");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, Error::SchemaError(_)));
    }
}
