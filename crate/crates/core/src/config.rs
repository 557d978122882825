//! Experiment configuration: a TOML document whose keys are read in dotted
//! form (`params.j`, `time.T`, ...). Tables and dotted keys are equivalent.
//! Unknown keys are rejected; every default is written back by
//! [`ExperimentConfig::to_toml`], so the echo reproduces the run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::{Error, Result};
use crate::lifespan::{m_of_alpha, min_regularity};
use crate::nonlinearity::GuardPolicy;
use crate::params::{Params, Sign};
use crate::picard::{BallRadius, PicardConfig};
use crate::profiles::Profile;
use crate::spectral::{Field, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BandChoice {
    Auto,
    None,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryFormat {
    Text,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: Params,
    /// Whether s came from "auto".
    pub s_auto: bool,
    pub n_points: usize,
    pub half_width: f64,
    pub band: BandChoice,
    pub t_final: f64,
    pub n_time_steps: usize,
    pub data: Profile,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub ball_radius: BallRadius,
    pub c_constant: f64,
    pub guard: GuardPolicy,
    pub nonlinear: bool,
    pub substeps: usize,
    pub lifespan_delta: Option<f64>,
    pub lifespan_lambda: Option<f64>,
    pub lifespan_grid_delta: Vec<f64>,
    pub lifespan_grid_lambda: Vec<f64>,
    pub ratio_ceiling: f64,
    pub output_directory: String,
    pub formats: Vec<TrajectoryFormat>,
}

/// Dotted keys with their values.
type Flat = BTreeMap<String, Value>;

fn flatten(prefix: &str, table: &toml::Table, out: &mut Flat) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

/// Parses a sweep or override value as a TOML literal, falling back to a
/// bare string.
pub fn parse_value(text: &str) -> Value {
    let text = text.trim();
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.into())),
        Err(_) => Value::String(text.into()),
    }
}

struct Reader {
    flat: Flat,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<Value> {
        self.flat.remove(key)
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(f)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(v) => Err(Error::config(key, format!("expected a number, got {v}"))),
        }
    }

    fn f64_req(&mut self, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn uint_opt(&mut self, key: &str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if i >= 0 => Ok(Some(i as u64)),
            Some(v) => Err(Error::config(key, format!("expected a nonnegative integer, got {v}"))),
        }
    }

    fn uint_req(&mut self, key: &str) -> Result<u64> {
        self.uint_opt(key)?
            .ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn uint_or(&mut self, key: &str, default: u64) -> Result<u64> {
        Ok(self.uint_opt(key)?.unwrap_or(default))
    }

    fn str_opt(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Error::config(key, format!("expected a string, got {v}"))),
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(b),
            Some(v) => Err(Error::config(key, format!("expected true or false, got {v}"))),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(Vec::new()),
            Some(Value::Array(a)) => a
                .into_iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(f),
                    Value::Integer(i) => Ok(i as f64),
                    other => Err(Error::config(key, format!("expected numbers, got {other}"))),
                })
                .collect(),
            Some(v) => Err(Error::config(key, format!("expected an array of numbers, got {v}"))),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, &[])
    }

    /// Loads `path`, then applies `overrides` as (dotted key, value text).
    pub fn load_with(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::parse_with(&text, overrides)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[])
    }

    pub fn parse_with(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let at = e.span().map(|s| format!(" at byte {}", s.start)).unwrap_or_default();
            Error::config("<document>", format!("not valid TOML{at}: {}", e.message()))
        })?;
        let mut flat = Flat::new();
        flatten("", &table, &mut flat);
        for (key, value) in overrides {
            flat.insert(key.clone(), parse_value(value));
        }
        Self::from_flat(flat)
    }

    fn from_flat(flat: Flat) -> Result<Self> {
        let mut r = Reader { flat };

        let j = r.uint_req("params.j")?;
        if j == 0 || j > 8 {
            return Err(Error::config("params.j", format!("must lie in 1..=8, got {j}")));
        }
        let j = j as u32;
        let alpha = r.f64_req("params.alpha")?;
        let m = m_of_alpha(alpha)
            .map_err(|_| Error::config("params.alpha", format!("alpha must lie in (0,1), got {alpha}")))?;
        let sign = match r.take("params.sign") {
            None => Sign::Plus,
            Some(Value::String(s)) if s == "plus" || s == "+" => Sign::Plus,
            Some(Value::String(s)) if s == "minus" || s == "-" => Sign::Minus,
            Some(Value::Integer(i)) if Sign::from_value(i).is_some() => Sign::from_value(i).expect("checked"),
            Some(v) => {
                return Err(Error::config(
                    "params.sign",
                    format!("expected \"plus\" or \"minus\", got {v}"),
                ))
            }
        };
        let (s, s_auto) = match r.take("params.s") {
            None => (min_regularity(j, m), true),
            Some(Value::String(t)) if t == "auto" => (min_regularity(j, m), true),
            Some(Value::Integer(i)) if i >= 0 => (i as u32, false),
            Some(v) => {
                return Err(Error::config(
                    "params.s",
                    format!("expected an integer or \"auto\", got {v}"),
                ))
            }
        };
        let params = Params::new(j, alpha, sign, s).map_err(|e| match e {
            Error::Domain(msg) => Error::config("params.s", msg),
            other => other,
        })?;

        let n_points = r.uint_req("grid.n_points")? as usize;
        let half_width = positive("grid.half_width", r.f64_req("grid.half_width")?)?;
        Grid::new(n_points, half_width).map_err(|e| Error::config("grid.n_points", e.to_string()))?;
        let band = match r.take("grid.band_limit") {
            None => BandChoice::Auto,
            Some(Value::String(t)) if t == "auto" => BandChoice::Auto,
            Some(Value::String(t)) if t == "none" => BandChoice::None,
            Some(Value::Float(f)) => BandChoice::Fixed(positive("grid.band_limit", f)?),
            Some(Value::Integer(i)) => BandChoice::Fixed(positive("grid.band_limit", i as f64)?),
            Some(v) => {
                return Err(Error::config(
                    "grid.band_limit",
                    format!("expected \"auto\", \"none\" or a number, got {v}"),
                ))
            }
        };

        let t_final = positive("time.T", r.f64_req("time.T")?)?;
        let n_time_steps = r.uint_req("time.n_time_steps")? as usize;

        let kind = r
            .str_opt("data.profile")?
            .ok_or_else(|| Error::config("data.profile", "missing required key"))?;
        let amplitude = r.f64_req("data.amplitude")?;
        let data = match kind.as_str() {
            "bracket" | "periodic_bracket" => {
                let decay = r.f64_or("data.decay", m as f64)?;
                let perturbation = r.f64_or("data.perturbation", 0.0)?;
                if kind == "bracket" {
                    Profile::Bracket {
                        amplitude,
                        decay,
                        perturbation,
                    }
                } else {
                    Profile::PeriodicBracket {
                        amplitude,
                        decay,
                        perturbation,
                    }
                }
            }
            "gaussian" => Profile::Gaussian {
                amplitude,
                width: r.f64_or("data.width", 1.0)?,
            },
            "gaussian_floor" => Profile::GaussianFloor {
                amplitude,
                width: r.f64_or("data.width", 1.0)?,
                floor: r.f64_req("data.floor")?,
                decay: r.f64_or("data.decay", m as f64)?,
            },
            other => {
                return Err(Error::config(
                    "data.profile",
                    format!(
                        "unknown profile {other:?}; expected bracket, periodic_bracket, gaussian or gaussian_floor"
                    ),
                ))
            }
        };
        data.validate()?;

        let max_iterations = r.uint_or("solver.max_iterations", 30)? as usize;
        let tolerance = r.f64_or("solver.tolerance", 1e-3)?;
        let ball_radius = match r.take("solver.ball_radius") {
            None => BallRadius::Auto { c1: 1.0 },
            Some(Value::String(t)) if t == "auto" => BallRadius::Auto { c1: 1.0 },
            Some(Value::Float(f)) => BallRadius::Fixed { value: f },
            Some(Value::Integer(i)) => BallRadius::Fixed { value: i as f64 },
            Some(v) => {
                return Err(Error::config(
                    "solver.ball_radius",
                    format!("expected \"auto\" or a number, got {v}"),
                ))
            }
        };
        let ball_radius = match (ball_radius, r.f64_opt("solver.c1")?) {
            (BallRadius::Auto { .. }, Some(c1)) => BallRadius::Auto { c1 },
            (b, _) => b,
        };
        let c_constant = r.f64_or("solver.c_constant", 1.0)?;
        if !(c_constant > 0.0 && c_constant <= 1.0) {
            return Err(Error::config(
                "solver.c_constant",
                format!("must lie in (0, 1], got {c_constant}"),
            ));
        }
        let guard = match r.str_opt("solver.guard")?.as_deref() {
            None | Some("warn") => GuardPolicy::Warn,
            Some("error") => GuardPolicy::Error,
            Some("off") => GuardPolicy::Off,
            Some(other) => {
                return Err(Error::config(
                    "solver.guard",
                    format!("expected warn, error or off, got {other:?}"),
                ))
            }
        };
        let nonlinear = r.bool_or("solver.nonlinear", true)?;
        let substeps = r.uint_or("solver.substeps", 1)? as usize;
        if substeps == 0 {
            return Err(Error::config("solver.substeps", "must be positive"));
        }

        let lifespan_delta = r.f64_opt("lifespan.delta")?;
        let lifespan_lambda = r.f64_opt("lifespan.lambda")?;
        if lifespan_delta.is_some() != lifespan_lambda.is_some() {
            return Err(Error::config(
                "lifespan.delta",
                "lifespan.delta and lifespan.lambda must be given together",
            ));
        }
        let lifespan_grid_delta = r.f64_list("lifespan.grid_delta")?;
        let lifespan_grid_lambda = r.f64_list("lifespan.grid_lambda")?;
        let ratio_ceiling = positive("verify.ratio_ceiling", r.f64_or("verify.ratio_ceiling", 100.0)?)?;

        let output_directory = r.str_opt("outputs.directory")?.unwrap_or_else(|| "out".into());
        let formats = match r.take("outputs.formats") {
            None => vec![TrajectoryFormat::Text, TrajectoryFormat::Binary],
            Some(Value::Array(a)) => a
                .into_iter()
                .map(|v| match v.as_str() {
                    Some("text") => Ok(TrajectoryFormat::Text),
                    Some("binary") => Ok(TrajectoryFormat::Binary),
                    _ => Err(Error::config(
                        "outputs.formats",
                        format!("expected \"text\" or \"binary\", got {v}"),
                    )),
                })
                .collect::<Result<_>>()?,
            Some(v) => return Err(Error::config("outputs.formats", format!("expected an array, got {v}"))),
        };

        if let Some(key) = r.flat.keys().next() {
            return Err(Error::config(key.clone(), "unknown key"));
        }

        let config = Self {
            params,
            s_auto,
            n_points,
            half_width,
            band,
            t_final,
            n_time_steps,
            data,
            max_iterations,
            tolerance,
            ball_radius,
            c_constant,
            guard,
            nonlinear,
            substeps,
            lifespan_delta,
            lifespan_lambda,
            lifespan_grid_delta,
            lifespan_grid_lambda,
            ratio_ceiling,
            output_directory,
            formats,
        };
        config.picard().validate()?;
        Ok(config)
    }

    pub fn grid(&self) -> Result<Grid> {
        let grid = Grid::new(self.n_points, self.half_width)?;
        match self.band {
            BandChoice::Fixed(b) => grid.with_band_limit(b),
            _ => Ok(grid),
        }
    }

    /// Sampled initial data on the configured grid and band.
    pub fn initial_data(&self) -> Result<Field> {
        let raw = self.data.sample(self.grid()?);
        Ok(match self.band {
            BandChoice::Auto => raw.auto_banded(),
            BandChoice::None => raw,
            BandChoice::Fixed(_) => raw.rebanded(*raw.grid()),
        })
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            t_final: self.t_final,
            n_time_steps: self.n_time_steps,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            ball_radius: self.ball_radius,
            c_constant: self.c_constant,
            guard_policy: self.guard,
            nonlinear: self.nonlinear,
        }
    }

    /// The resolved configuration as TOML; loading it yields `self`.
    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let num = |v: f64| format!("{v:?}");
        let list = |v: &[f64]| {
            format!(
                "[{}]",
                v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
            )
        };
        line("params.j", p.j().to_string());
        line("params.alpha", num(p.alpha()));
        line(
            "params.sign",
            format!("\"{}\"", if p.sign() == Sign::Plus { "plus" } else { "minus" }),
        );
        line("params.s", p.s().to_string());
        line("grid.n_points", self.n_points.to_string());
        line("grid.half_width", num(self.half_width));
        line(
            "grid.band_limit",
            match self.band {
                BandChoice::Auto => "\"auto\"".into(),
                BandChoice::None => "\"none\"".into(),
                BandChoice::Fixed(b) => num(b),
            },
        );
        line("time.T", num(self.t_final));
        line("time.n_time_steps", self.n_time_steps.to_string());
        line("data.profile", format!("\"{}\"", self.data.name()));
        match self.data {
            Profile::Bracket {
                amplitude,
                decay,
                perturbation,
            }
            | Profile::PeriodicBracket {
                amplitude,
                decay,
                perturbation,
            } => {
                line("data.amplitude", num(amplitude));
                line("data.decay", num(decay));
                line("data.perturbation", num(perturbation));
            }
            Profile::Gaussian { amplitude, width } => {
                line("data.amplitude", num(amplitude));
                line("data.width", num(width));
            }
            Profile::GaussianFloor {
                amplitude,
                width,
                floor,
                decay,
            } => {
                line("data.amplitude", num(amplitude));
                line("data.width", num(width));
                line("data.floor", num(floor));
                line("data.decay", num(decay));
            }
        }
        line("solver.max_iterations", self.max_iterations.to_string());
        line("solver.tolerance", num(self.tolerance));
        match self.ball_radius {
            BallRadius::Auto { c1 } => {
                line("solver.ball_radius", "\"auto\"".into());
                line("solver.c1", num(c1));
            }
            BallRadius::Fixed { value } => line("solver.ball_radius", num(value)),
        }
        line("solver.c_constant", num(self.c_constant));
        let guard = match self.guard {
            GuardPolicy::Warn => "warn",
            GuardPolicy::Error => "error",
            GuardPolicy::Off => "off",
        };
        line("solver.guard", format!("\"{guard}\""));
        line("solver.nonlinear", self.nonlinear.to_string());
        line("solver.substeps", self.substeps.to_string());
        if let (Some(d), Some(l)) = (self.lifespan_delta, self.lifespan_lambda) {
            line("lifespan.delta", num(d));
            line("lifespan.lambda", num(l));
        }
        line("lifespan.grid_delta", list(&self.lifespan_grid_delta));
        line("lifespan.grid_lambda", list(&self.lifespan_grid_lambda));
        line("verify.ratio_ceiling", num(self.ratio_ceiling));
        line("outputs.directory", format!("{:?}", self.output_directory));
        let formats: Vec<String> = self
            .formats
            .iter()
            .map(|f| match f {
                TrajectoryFormat::Text => "\"text\"".to_string(),
                TrajectoryFormat::Binary => "\"binary\"".to_string(),
            })
            .collect();
        line("outputs.formats", format!("[{}]", formats.join(", ")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[params]
j = 1
alpha = 0.5
s = "auto"

[grid]
n_points = 256
half_width = 16.0

[time]
T = 0.01
n_time_steps = 16

[data]
profile = "periodic_bracket"
amplitude = 0.2
"#;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_resolves_s() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.params.s(), 10);
        assert!(c.s_auto);
        assert_eq!(c.params.m(), 3);
        assert_eq!(
            c.data,
            Profile::PeriodicBracket {
                amplitude: 0.2,
                decay: 3.0,
                perturbation: 0.0
            }
        );
    }

    #[test]
    fn alpha_out_of_range() {
        let text = MINIMAL.replace("alpha = 0.5", "alpha = 1.5");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert!(e.to_string().contains("alpha must lie in (0,1)"), "{e}");
        assert_eq!(key_of(e), "params.alpha");
    }

    #[test]
    fn regularity_below_minimum() {
        let text = MINIMAL.replace("s = \"auto\"", "s = 9");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        assert!(e.to_string().contains("s - j + 1 >= 2jm + 2j + 2"), "{e}");
        assert_eq!(key_of(e), "params.s");
    }

    #[test]
    fn missing_and_unknown_keys() {
        let text = MINIMAL.replace("n_time_steps = 16", "");
        assert_eq!(key_of(ExperimentConfig::parse(&text).unwrap_err()), "time.n_time_steps");
        let text = format!("{MINIMAL}\n[extra]\nfoo = 1\n");
        assert_eq!(key_of(ExperimentConfig::parse(&text).unwrap_err()), "extra.foo");
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let dotted = "params.j = 1\nparams.alpha = 0.5\ngrid.n_points = 256\ngrid.half_width = 16.0\n\
                      time.T = 0.01\ntime.n_time_steps = 16\ndata.profile = \"periodic_bracket\"\ndata.amplitude = 0.2\n";
        assert_eq!(
            ExperimentConfig::parse(dotted).unwrap(),
            ExperimentConfig::parse(MINIMAL).unwrap()
        );
    }

    #[test]
    fn overrides_apply_before_validation() {
        let o = vec![
            ("time.T".to_string(), "0.04".to_string()),
            ("params.s".to_string(), "auto".to_string()),
        ];
        let c = ExperimentConfig::parse_with(MINIMAL, &o).unwrap();
        assert_eq!(c.t_final, 0.04);
        let bad = vec![("time.n_time_steps".to_string(), "2".to_string())];
        assert_eq!(
            key_of(ExperimentConfig::parse_with(MINIMAL, &bad).unwrap_err()),
            "time.n_time_steps"
        );
    }

    #[test]
    fn echo_round_trips() {
        let text =
            format!("{MINIMAL}\n[solver]\ntolerance = 1e-7\nc_constant = 0.05\n[lifespan]\ngrid_delta = [1, 2.5]\n");
        let c = ExperimentConfig::parse(&text).unwrap();
        let mut again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        // The echo records the resolved s.
        assert!(!again.s_auto);
        again.s_auto = true;
        assert_eq!(again, c);
        assert_eq!(again.to_toml(), c.to_toml());
    }

    #[test]
    fn invalid_toml_is_a_config_error() {
        assert_eq!(
            key_of(ExperimentConfig::parse("params.j = ").unwrap_err()),
            "<document>"
        );
    }
}
