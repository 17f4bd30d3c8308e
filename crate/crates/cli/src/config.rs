//! Run configuration: a flat JSON object naming a command plus overrides of
//! that command's experiment parameters.
//!
//! Each command starts from the harness defaults for its experiment. Keys in
//! the file and `--set` overrides are merged on top, so a minimal file only
//! names what differs.

use std::fmt;
use std::path::{Path, PathBuf};

use rbffd_core::harness::{ConvergenceConfig, GreenConfig, HeterogeneousConfig, PlaneWaveConfig, PollutionConfig, SolveConfig, TruncationConfig};
use rbffd_core::{Raster, SpeedModel};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Truncation,
    Pollution,
    Convergence,
    Planewave,
    Green,
    Heterogeneous,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Truncation => "truncation",
            Command::Pollution => "pollution",
            Command::Convergence => "convergence",
            Command::Planewave => "planewave",
            Command::Green => "green",
            Command::Heterogeneous => "heterogeneous",
        }
    }

    fn defaults(self) -> Value {
        let v = match self {
            Command::Solve => serde_json::to_value(SolveConfig::default()),
            Command::Truncation => serde_json::to_value(TruncationConfig::default()),
            Command::Pollution => serde_json::to_value(PollutionConfig::default()),
            Command::Convergence => serde_json::to_value(ConvergenceConfig::default()),
            Command::Planewave => serde_json::to_value(PlaneWaveConfig::default()),
            Command::Green => serde_json::to_value(GreenConfig::default()),
            Command::Heterogeneous => serde_json::to_value(HeterogeneousConfig::default()),
        };
        v.expect("default configurations serialize")
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Configuration problem; reported with exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// A fully resolved run: every experiment parameter is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub quiet: bool,
    /// Experiment parameters in the shape of the harness configuration.
    #[serde(default)]
    pub params: Map<String, Value>,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// Settings that come from flags rather than the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub command: Option<Command>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
    pub set: Vec<String>,
}

const RUN_KEYS: [&str; 4] = ["command", "out", "quiet", "params"];

/// Builds a resolved configuration from optional file text and flags.
pub fn parse_config(text: Option<&str>, ov: &Overrides) -> Result<RunConfig, ConfigError> {
    let mut raw = match text {
        Some(t) => match serde_json::from_str::<Value>(t) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return err("configuration must be a JSON object"),
            Err(e) => return err(format!("malformed configuration: {e}")),
        },
        None => Map::new(),
    };
    for s in &ov.set {
        let (key, value) = parse_assignment(s)?;
        set_dotted(&mut raw, &key, value)?;
    }
    let command = match ov.command {
        Some(c) => c,
        None => match raw.get("command") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|_| ConfigError(format!("unknown command {v}")))?,
            None => return err("no command given; pass one as an argument or set \"command\" in the configuration"),
        },
    };
    let out = match (&ov.out, raw.get("out")) {
        (Some(p), _) => p.clone(),
        (None, Some(Value::String(s))) => PathBuf::from(s),
        (None, Some(v)) => return err(format!("invalid value for `out`: {v}")),
        (None, None) => default_out(),
    };
    let quiet = ov.quiet
        || match raw.get("quiet") {
            Some(Value::Bool(b)) => *b,
            Some(v) => return err(format!("invalid value for `quiet`: {v}")),
            None => false,
        };

    // Parameters may sit at the top level or under "params".
    let mut user = match raw.remove("params") {
        Some(Value::Object(m)) => m,
        Some(v) => return err(format!("invalid value for `params`: {v}")),
        None => Map::new(),
    };
    for (k, v) in raw {
        if !RUN_KEYS.contains(&k.as_str()) {
            user.insert(k, v);
        }
    }
    let params = resolve_params(command, user, ov.seed)?;
    let mut cfg = RunConfig { command, out, quiet, params };
    cfg.validate()?;
    // Canonical form, so that re-parsing the serialized config is exact.
    let Value::Object(m) = cfg.experiment()?.to_value() else {
        unreachable!("configurations serialize to objects")
    };
    cfg.params = m;
    Ok(cfg)
}

/// `key=value`, where the value is JSON if it parses as JSON and a string
/// otherwise.
pub fn parse_assignment(s: &str) -> Result<(String, Value), ConfigError> {
    let Some((k, v)) = s.split_once('=') else {
        return err(format!("--set expects key=value, got `{s}`"));
    };
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return err(format!("--set has an empty key in `{s}`"));
    }
    let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), v))
}

fn set_dotted(map: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts = key.split('.').peekable();
    let mut cur = map;
    while let Some(p) = parts.next() {
        if parts.peek().is_none() {
            cur.insert(p.to_string(), value);
            return Ok(());
        }
        let next = cur.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
        cur = match next {
            Value::Object(m) => m,
            _ => return err(format!("--set `{key}`: `{p}` is not an object")),
        };
    }
    Ok(())
}

/// Merges user parameters into the command defaults. Unknown keys are
/// collected and reported together.
/// `--seed` only applies to commands with randomized input.
fn resolve_params(command: Command, mut user: Map<String, Value>, seed: Option<u64>) -> Result<Map<String, Value>, ConfigError> {
    let Value::Object(mut base) = command.defaults() else {
        unreachable!("configurations serialize to objects")
    };
    if let (Some(seed), true) = (seed, base.contains_key("seed")) {
        user.insert("seed".into(), Value::from(seed));
    }
    if let Some(v) = user.remove("grid") {
        if base.contains_key("lattice") {
            user.insert("lattice".into(), v);
        } else {
            user.insert("grid".into(), v);
        }
    }
    if let Some(v) = user.remove("speed_file") {
        if !base.contains_key("speed") {
            return err(format!("`speed_file` is not used by the {command} command"));
        }
        let Value::String(path) = v else {
            return err("`speed_file` must be a path");
        };
        user.insert("speed".into(), load_speed(Path::new(&path))?);
    }
    let mut unknown: Vec<String> = user.keys().filter(|k| !base.contains_key(*k)).cloned().collect();
    if !unknown.is_empty() {
        unknown.sort();
        let mut known: Vec<&String> = base.keys().collect();
        known.sort();
        return err(format!(
            "unknown keys for the {command} command: {}; expected some of: {}",
            unknown.join(", "),
            known.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        ));
    }
    for (k, v) in user {
        let slot = base.get_mut(&k).expect("checked above");
        merge(slot, v);
    }
    Ok(base)
}

/// Objects merge key by key; a scalar given where a list is expected becomes
/// a one-element list; anything else replaces the default.
fn merge(slot: &mut Value, v: Value) {
    match (slot, v) {
        (Value::Object(dst), Value::Object(src)) if !is_tagged(dst) => {
            for (k, x) in src {
                match dst.get_mut(&k) {
                    Some(d) => merge(d, x),
                    None => {
                        dst.insert(k, x);
                    }
                }
            }
        }
        (slot @ Value::Array(_), v) if !v.is_array() && !v.is_null() => *slot = Value::Array(vec![v]),
        (slot, v) => *slot = v,
    }
}

/// Internally tagged enums are replaced wholesale, since another variant has
/// other fields.
fn is_tagged(m: &Map<String, Value>) -> bool {
    m.contains_key("kind")
}

fn load_speed(path: &Path) -> Result<Value, ConfigError> {
    if !path.exists() {
        return err(format!("speed file {} does not exist", path.display()));
    }
    let raster = Raster::read(path).map_err(|e| ConfigError(format!("cannot read speed file: {e}")))?;
    Ok(serde_json::to_value(SpeedModel::Raster(raster)).expect("raster serializes"))
}

fn numbers(v: &Value) -> Vec<f64> {
    match v {
        Value::Number(n) => n.as_f64().into_iter().collect(),
        Value::Array(a) => a.iter().filter_map(Value::as_f64).collect(),
        _ => Vec::new(),
    }
}

impl RunConfig {
    /// Range checks that apply across commands; the harness validates the rest.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        for key in ["omega", "omega_over_2pi", "k_over_2pi", "k", "h"] {
            if let Some(v) = p.get(key) {
                if let Some(bad) = numbers(v).into_iter().find(|x| !(*x > 0.0 && x.is_finite())) {
                    return err(format!("invalid `{key}`: must be positive, got {bad}"));
                }
            }
        }
        if let Some(v) = p.get("ng") {
            if let Some(bad) = numbers(v).into_iter().find(|x| !(*x >= 4.0 && x.is_finite())) {
                return err(format!("invalid `ng`: need at least 4 nodes per wavelength, got {bad}"));
            }
        }
        for key in ["n_interior", "n_boundary"] {
            if let Some(v) = p.get(key) {
                match v.as_u64() {
                    Some(n) if n >= 5 => {}
                    _ => return err(format!("invalid `{key}`: stencil size must be an integer >= 5, got {v}")),
                }
            }
        }
        if let Some(v) = p.get("sizes") {
            if numbers(v).into_iter().any(|x| x < 5.0) {
                return err(format!("invalid `sizes`: stencil sizes must be >= 5, got {v}"));
            }
        }
        // Type errors surface here, naming the offending field.
        self.experiment().map(|_| ())
    }

    pub fn experiment(&self) -> Result<Experiment, ConfigError> {
        let v = Value::Object(self.params.clone());
        let bad = |e: serde_json::Error| ConfigError(format!("invalid {} configuration: {e}", self.command));
        Ok(match self.command {
            Command::Solve => Experiment::Solve(serde_json::from_value(v).map_err(bad)?),
            Command::Truncation => Experiment::Truncation(serde_json::from_value(v).map_err(bad)?),
            Command::Pollution => Experiment::Pollution(serde_json::from_value(v).map_err(bad)?),
            Command::Convergence => Experiment::Convergence(serde_json::from_value(v).map_err(bad)?),
            Command::Planewave => Experiment::PlaneWave(serde_json::from_value(v).map_err(bad)?),
            Command::Green => Experiment::Green(serde_json::from_value(v).map_err(bad)?),
            Command::Heterogeneous => Experiment::Heterogeneous(serde_json::from_value(v).map_err(bad)?),
        })
    }
}

pub enum Experiment {
    Solve(SolveConfig),
    Truncation(TruncationConfig),
    Pollution(PollutionConfig),
    Convergence(ConvergenceConfig),
    PlaneWave(PlaneWaveConfig),
    Green(GreenConfig),
    Heterogeneous(HeterogeneousConfig),
}

impl Experiment {
    fn to_value(&self) -> Value {
        match self {
            Experiment::Solve(c) => serde_json::to_value(c),
            Experiment::Truncation(c) => serde_json::to_value(c),
            Experiment::Pollution(c) => serde_json::to_value(c),
            Experiment::Convergence(c) => serde_json::to_value(c),
            Experiment::PlaneWave(c) => serde_json::to_value(c),
            Experiment::Green(c) => serde_json::to_value(c),
            Experiment::Heterogeneous(c) => serde_json::to_value(c),
        }
        .expect("configurations serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(Some(text), &Overrides::default())
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(r#"{"command": "pollution", "k_over_2pi": [10], "grid": "square"}"#).unwrap();
        let Experiment::Pollution(p) = cfg.experiment().unwrap() else { panic!() };
        assert_eq!(p.k_over_2pi, vec![10.0]);
        assert_eq!(p.ng, 6.0);
        assert_eq!((p.n_interior, p.n_boundary), (13, 15));
        assert_eq!(cfg.out, PathBuf::from("results"));
    }

    #[test]
    fn negative_omega_names_the_field() {
        let e = parse(r#"{"command": "solve", "omega": -1.0}"#).unwrap_err();
        assert!(e.0.contains("omega"), "{e}");
    }

    #[test]
    fn unknown_keys_are_listed() {
        let e = parse(r#"{"command": "green", "bogus": 1, "also_bogus": 2}"#).unwrap_err();
        assert!(e.0.contains("also_bogus, bogus"), "{e}");
    }

    #[test]
    fn round_trip() {
        let cfg = parse(r#"{"command": "heterogeneous", "omega_over_2pi": 5, "out": "o"}"#).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again = parse(&text).unwrap();
        assert_eq!(cfg, again);
        let direct: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, direct);
    }

    #[test]
    fn scalar_becomes_list() {
        let cfg = parse(r#"{"command": "heterogeneous", "omega_over_2pi": 5}"#).unwrap();
        assert_eq!(cfg.params["omega_over_2pi"], serde_json::json!([5.0]));
    }

    #[test]
    fn dotted_set_and_flags() {
        let ov = Overrides {
            command: Some(Command::Truncation),
            seed: Some(9),
            set: vec!["solver.kind=ldlt".into(), "sizes=[9,13]".into(), "center.x=0.25".into()],
            ..Default::default()
        };
        let cfg = parse_config(None, &ov).unwrap();
        let Experiment::Truncation(t) = cfg.experiment().unwrap() else { panic!() };
        assert_eq!(t.sizes, vec![9, 13]);
        assert_eq!(t.seed, 9);
        assert_eq!(t.center.x, 0.25);
        assert_eq!(t.solver, rbffd_core::harness::SolverPath::Ldlt);
    }

    #[test]
    fn seed_ignored_without_randomness() {
        let ov = Overrides {
            command: Some(Command::Pollution),
            seed: Some(4),
            ..Default::default()
        };
        let cfg = parse_config(None, &ov).unwrap();
        assert!(!cfg.params.contains_key("seed"));
    }

    #[test]
    fn range_checks() {
        assert!(parse(r#"{"command": "pollution", "ng": 3}"#).unwrap_err().0.contains("ng"));
        assert!(parse(r#"{"command": "pollution", "n_interior": 4}"#).unwrap_err().0.contains("n_interior"));
        assert!(parse(r#"{"command": "pollution", "n_boundary": "x"}"#).is_err());
        assert!(parse(r#"{"command": "nope"}"#).unwrap_err().0.contains("nope"));
        assert!(parse(r#"{"ng": 6}"#).unwrap_err().0.contains("no command"));
        assert!(parse_assignment("novalue").is_err());
    }

    #[test]
    fn missing_speed_file() {
        let e = parse(r#"{"command": "heterogeneous", "speed_file": "/nonexistent/model.txt"}"#).unwrap_err();
        assert!(e.0.contains("/nonexistent/model.txt"), "{e}");
    }
}
