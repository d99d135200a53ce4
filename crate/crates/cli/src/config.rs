//! Layered configuration: built-in defaults, a TOML file, environment variables, flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use toml::Value;

/// Configuration problems; always reported with exit code 2.
#[derive(Debug)]
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

pub const ENV_PREFIX: &str = "TWOFLUID";

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Env,
    Flag,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Env => "env",
            Source::Flag => "flag",
        }
    }
}

struct KeySpec {
    section: &'static str,
    key: &'static str,
    default: fn() -> Value,
    doc: &'static str,
}

macro_rules! keys {
    ($( $section:literal . $key:literal = $default:expr ; $doc:literal )*) => {
        &[ $( KeySpec { section: $section, key: $key, default: || Value::from($default), doc: $doc }, )* ]
    };
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

static KEYS: &[KeySpec] = keys! {
    "grid"."dim" = 2i64; "spatial dimension N"
    "grid"."points" = 64i64; "grid points per axis (even)"
    "grid"."length" = std::f64::consts::TAU; "torus side length L"
    "grid"."allow_3d" = false; "permit N = 3 runs"
    "grid"."dealias" = true; "two-thirds dealiasing of state and forcing"
    "grid"."j0" = 0i64; "low/high frequency threshold"
    "physics"."gamma_plus" = 2.0; "adiabatic exponent of phase +"
    "physics"."gamma_minus" = 2.0; "adiabatic exponent of phase -"
    "physics"."a_plus" = 1.0; "pressure amplitude A+"
    "physics"."a_minus" = 1.0; "pressure amplitude A-"
    "physics"."mu_plus" = 1.0; "shear viscosity of phase +"
    "physics"."mu_minus" = 1.0; "shear viscosity of phase -"
    "physics"."lambda_plus" = 0.0; "bulk viscosity of phase +"
    "physics"."lambda_minus" = 0.0; "bulk viscosity of phase -"
    "physics"."closure_tol" = 1e-13; "tolerance of the pressure-equilibrium root solve"
    "physics"."nonlinear" = true; "include the nonlinear source terms"
    "init"."kind" = "gaussian-bump"; "gaussian-bump, random-band or oscillating"
    "init"."amplitude" = 0.01; "perturbation amplitude"
    "init"."width" = 1.0; "Gaussian standard deviation"
    "init"."band_lo" = 0i64; "lowest dyadic shell of random-band data"
    "init"."band_hi" = 2i64; "highest dyadic shell of random-band data"
    "init"."epsilon_osc" = 0.0625; "oscillation length of oscillating data"
    "init"."bump_radius" = 2.0; "support radius of the oscillating-data bump"
    "init"."weights" = floats(&[1.0, 1.0, 1.0, 1.0]); "multipliers of (c+, u+, c-, u-)"
    "init"."seed" = 0i64; "random seed"
    "time"."dt" = 0.01; "time step"
    "time"."t_end" = 1.0; "final time"
    "time"."output_every" = 10i64; "record norms every this many steps"
    "output"."norm_p" = 2.0; "Lebesgue exponent of the recorded high-frequency norms"
    "output"."snapshots" = false; "write binary snapshots of recorded states"
    "closure"."r_values" = floats(&[0.5, 1.0, 2.0]); "partial densities tabulated by the closure command"
    "green"."nus" = floats(&[1.0, 2.0, 3.0]); "viscosities of the Green-matrix sweep"
    "green"."ks" = floats(&[0.5, 1.0, 2.0]); "wavenumbers compared against the ODE oracle"
    "green"."ts" = floats(&[0.0, 0.5, 1.0, 2.0, 5.0]); "times compared against the ODE oracle"
    "green"."tolerance" = 1e-8; "largest accepted entry error"
    "green"."k_min" = 0.25; "smallest wavenumber of the envelope fit"
    "green"."k_max" = 4.0; "largest wavenumber of the envelope fit"
    "green"."k_samples" = 61i64; "log-spaced wavenumbers of the envelope fit"
    "green"."t_max" = 10.0; "largest time of the envelope fit"
    "green"."t_step" = 0.1; "time spacing of the envelope fit"
    "green"."prefactor_limit" = 10.0; "largest accepted envelope prefactor"
    "decay"."p" = 2.0; "Lebesgue exponent p"
    "decay"."epsilon" = 0.05; "loss epsilon in the high-frequency weight exponent"
    "decay"."s_values" = floats(&[0.0, 1.0, 2.0]); "regularities whose decay rates are fitted"
    "decay"."t_min" = 1.0; "first sample time of the linear quadrature"
    "decay"."t_max" = 1e4; "last sample time of the linear quadrature"
    "decay"."per_decade" = 10i64; "sample times per decade"
    "decay"."window_lo" = 0.0; "fit window start (0 = automatic)"
    "decay"."window_hi" = 0.0; "fit window end (0 = automatic)"
    "decay"."tolerance" = 0.05; "accepted slope error"
    "decay"."tolerance_top" = 0.07; "accepted slope error at s = N/2 + 1"
    "decay"."source" = "linear"; "linear (radial quadrature) or simulate"
    "lp"."samples" = 20i64; "random field pairs per estimate"
    "lp"."ratio_limit" = 100.0; "largest accepted estimate ratio"
};

/// Resolved configuration with provenance.
#[derive(Debug, Clone)]
pub struct Settings {
    values: BTreeMap<(String, String), (Value, Source)>,
}

/// Environment variable overriding `section.key`.
pub fn env_name(section: &str, key: &str) -> String {
    format!("{ENV_PREFIX}_{}_{}", section.to_uppercase(), key.to_uppercase())
}

fn same_kind(default: &Value, v: Value) -> Option<Value> {
    match (default, v) {
        (Value::Float(_), Value::Integer(i)) => Some(Value::Float(i as f64)),
        (Value::Array(_), Value::Array(a)) => {
            let out: Option<Vec<Value>> = a
                .into_iter()
                .map(|x| match x {
                    Value::Float(f) => Some(Value::Float(f)),
                    Value::Integer(i) => Some(Value::Float(i as f64)),
                    _ => None,
                })
                .collect();
            out.map(Value::Array)
        }
        (d, v) if std::mem::discriminant(d) == std::mem::discriminant(&v) => Some(v),
        _ => None,
    }
}

fn parse_env(default: &Value, raw: &str) -> Option<Value> {
    let raw = raw.trim();
    let v = match default {
        Value::String(_) => Value::String(raw.to_string()),
        Value::Boolean(_) => Value::Boolean(raw.parse().ok()?),
        Value::Integer(_) => Value::Integer(raw.parse().ok()?),
        Value::Float(_) => Value::Float(raw.parse().ok()?),
        Value::Array(_) => {
            let inner = raw.trim_start_matches('[').trim_end_matches(']');
            let xs: Option<Vec<Value>> = inner
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>().ok().map(Value::Float))
                .collect();
            Value::Array(xs?)
        }
        _ => return None,
    };
    Some(v)
}

impl Settings {
    pub fn defaults() -> Settings {
        let values = KEYS
            .iter()
            .map(|k| ((k.section.to_string(), k.key.to_string()), ((k.default)(), Source::Default)))
            .collect();
        Settings { values }
    }

    /// Defaults, then `file`, then environment variables from `env`.
    pub fn load(file: Option<&Path>, env: impl IntoIterator<Item = (String, String)>) -> Result<Settings, ConfigError> {
        let mut s = Settings::defaults();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
            s.merge_toml(&text)?;
        }
        s.merge_env(env)?;
        Ok(s)
    }

    pub fn merge_toml(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: toml::Table = text.parse().map_err(|e| ConfigError(format!("config is not valid TOML: {e}")))?;
        for (section, body) in table {
            let Value::Table(body) = body else {
                return err(format!("top-level key '{section}' must be a [section]"));
            };
            for (key, v) in body {
                let Some(default) = spec_default(&section, &key) else {
                    return err(format!("unknown config key '{section}.{key}'"));
                };
                let Some(v) = same_kind(&default, v) else {
                    return err(format!("config key '{section}.{key}' has the wrong type"));
                };
                self.values.insert((section.clone(), key), (v, Source::File));
            }
        }
        Ok(())
    }

    pub fn merge_env(&mut self, env: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        let prefix = format!("{ENV_PREFIX}_");
        for (name, raw) in env {
            if !name.starts_with(&prefix) {
                continue;
            }
            let Some(spec) = KEYS.iter().find(|k| env_name(k.section, k.key) == name) else {
                return err(format!("unknown environment override '{name}'"));
            };
            let default = (spec.default)();
            let Some(v) = parse_env(&default, &raw) else {
                return err(format!("environment override {name} = '{raw}' has the wrong type"));
            };
            self.values.insert((spec.section.into(), spec.key.into()), (v, Source::Env));
        }
        Ok(())
    }

    pub fn set_flag(&mut self, section: &str, key: &str, v: Value) {
        self.values.insert((section.into(), key.into()), (v, Source::Flag));
    }

    fn get(&self, section: &str, key: &str) -> &Value {
        &self
            .values
            .get(&(section.to_string(), key.to_string()))
            .unwrap_or_else(|| panic!("unregistered key {section}.{key}"))
            .0
    }

    pub fn f64(&self, section: &str, key: &str) -> f64 {
        self.get(section, key).as_float().expect("float key")
    }

    pub fn i64(&self, section: &str, key: &str) -> i64 {
        self.get(section, key).as_integer().expect("integer key")
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<usize, ConfigError> {
        let v = self.i64(section, key);
        usize::try_from(v).map_err(|_| ConfigError(format!("{section}.{key} must be non-negative, got {v}")))
    }

    pub fn bool(&self, section: &str, key: &str) -> bool {
        self.get(section, key).as_bool().expect("boolean key")
    }

    pub fn str(&self, section: &str, key: &str) -> &str {
        self.get(section, key).as_str().expect("string key")
    }

    pub fn floats(&self, section: &str, key: &str) -> Vec<f64> {
        self.get(section, key)
            .as_array()
            .expect("array key")
            .iter()
            .map(|v| v.as_float().expect("float entry"))
            .collect()
    }

    /// All resolved keys as `(section, key, value, source, env name, doc)`.
    pub fn entries(&self) -> Vec<(String, String, Value, Source, String, &'static str)> {
        KEYS.iter()
            .map(|k| {
                let (v, src) = &self.values[&(k.section.to_string(), k.key.to_string())];
                (k.section.to_string(), k.key.to_string(), v.clone(), *src, env_name(k.section, k.key), k.doc)
            })
            .collect()
    }
}

fn spec_default(section: &str, key: &str) -> Option<Value> {
    KEYS.iter().find(|k| k.section == section && k.key == key).map(|k| (k.default)())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let mut s = Settings::defaults();
        let e = s.merge_toml("[grid]\npoints = 32\nbogus = 1\n").unwrap_err();
        assert!(e.0.contains("grid.bogus"), "{e}");
        let e = Settings::defaults().merge_toml("[nosuch]\nx = 1\n").unwrap_err();
        assert!(e.0.contains("nosuch.x"));
    }

    #[test]
    fn precedence_is_env_over_file_over_default() {
        let mut s = Settings::defaults();
        s.merge_toml("[grid]\npoints = 32\nlength = 3\n").unwrap();
        s.merge_env(vec![("TWOFLUID_GRID_POINTS".to_string(), "16".to_string()), ("HOME".into(), "/x".into())])
            .unwrap();
        assert_eq!(s.i64("grid", "points"), 16);
        assert_eq!(s.f64("grid", "length"), 3.0);
        assert_eq!(s.i64("grid", "j0"), 0);
        s.set_flag("init", "seed", Value::Integer(9));
        assert_eq!(s.i64("init", "seed"), 9);
    }

    #[test]
    fn env_lists_and_type_errors() {
        let mut s = Settings::defaults();
        s.merge_env(vec![("TWOFLUID_GREEN_NUS".to_string(), "[1, 2.5]".to_string())]).unwrap();
        assert_eq!(s.floats("green", "nus"), vec![1.0, 2.5]);
        assert!(s.merge_env(vec![("TWOFLUID_GRID_POINTS".to_string(), "many".to_string())]).is_err());
        assert!(s.merge_env(vec![("TWOFLUID_GRID_NOPE".to_string(), "1".to_string())]).is_err());
        assert!(Settings::defaults().merge_toml("[grid]\npoints = \"x\"\n").is_err());
    }

    #[test]
    fn every_key_has_an_env_name() {
        for (section, key, _, src, env, _) in Settings::defaults().entries() {
            assert_eq!(src, Source::Default);
            assert_eq!(env, format!("TWOFLUID_{}_{}", section.to_uppercase(), key.to_uppercase()));
        }
    }
}
