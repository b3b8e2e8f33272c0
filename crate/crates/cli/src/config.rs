//! Experiment configuration: a flat `key=value` map assembled from an optional
//! config file and command-line overrides, then validated in one place.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pdrelax_core::problems::parse_key_values;
use pdrelax_core::{Algorithm, Error, InstanceRecipe, Result};

pub type Settings = BTreeMap<String, String>;

/// A stepsize given either directly or as a multiple of its default
/// (`"1.19x"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepValue {
    Value(f64),
    Multiple(f64),
}

impl StepValue {
    pub fn resolve(self, default: f64) -> f64 {
        match self {
            StepValue::Value(v) => v,
            StepValue::Multiple(k) => k * default,
        }
    }
}

impl FromStr for StepValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, multiple) = match s.strip_suffix(['x', 'X']) {
            Some(b) => (b, true),
            None => (s, false),
        };
        let v: f64 = body
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("stepsize {s:?} is neither a number nor a multiple like 1.19x")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("stepsize {s:?} must be positive")));
        }
        Ok(if multiple { StepValue::Multiple(v) } else { StepValue::Value(v) })
    }
}

impl fmt::Display for StepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepValue::Value(v) => write!(f, "{v}"),
            StepValue::Multiple(k) => write!(f, "{k}x"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Generated(InstanceRecipe),
    /// Directory written by `gen-problem`.
    Stored(PathBuf),
}

impl ProblemSource {
    pub fn describe(&self) -> String {
        match self {
            ProblemSource::Generated(r) => format!("{} ({} design, seed {})", r.kind, r.design, r.seed),
            ProblemSource::Stored(p) => p.display().to_string(),
        }
    }
}

/// Built-in desk-scale recipes, by name.
pub fn preset(name: &str, seed: u64) -> Option<InstanceRecipe> {
    match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
        "lasso" => Some(InstanceRecipe::desk_lasso(seed)),
        "fused_lasso" | "fused" => Some(InstanceRecipe::desk_fused(seed)),
        "fused_identity" => Some(InstanceRecipe::desk_fused_identity(seed)),
        _ => None,
    }
}

pub const PRESETS: &str = "lasso, fused_lasso, fused_identity";

const RECIPE_KEYS: [&str; 9] = ["design", "n", "m", "m_data", "nnz", "noise", "mu", "mu1", "mu2"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: Option<String>,
    pub problem: ProblemSource,
    pub algorithm: Algorithm,
    pub r: Option<StepValue>,
    pub lambda: Option<StepValue>,
    pub theta: Option<f64>,
    pub auto_theta: bool,
    pub max_iter: usize,
    pub tol: f64,
    pub record_every: usize,
    /// Stop, and count the run as converged, once the relative gap reaches this.
    pub gap_target: Option<f64>,
    /// Iterations for the reference objective; 0 skips it.
    pub reference_budget: usize,
    pub out: Option<PathBuf>,
    pub phi: bool,
    pub override_check: bool,
    pub timing: bool,
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.trim().parse().map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("{key}={v}: expected true or false"))),
    }
}

impl ExperimentConfig {
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        let problem_name = settings.get("problem").map(String::as_str).unwrap_or("lasso");
        let mut problem = match preset(problem_name, 0) {
            Some(r) => ProblemSource::Generated(r),
            None if Path::new(problem_name).is_dir() => ProblemSource::Stored(PathBuf::from(problem_name)),
            None => {
                return Err(Error::Usage(format!(
                    "problem {problem_name:?} is neither a preset ({PRESETS}) nor an instance directory"
                )))
            }
        };

        let mut cfg = ExperimentConfig {
            label: None,
            problem: problem.clone(),
            algorithm: Algorithm::Base,
            r: None,
            lambda: None,
            theta: None,
            auto_theta: false,
            max_iter: 10_000,
            tol: 1e-9,
            record_every: 1,
            gap_target: None,
            reference_budget: 100_000,
            out: None,
            phi: false,
            override_check: false,
            timing: false,
        };
        for (key, value) in settings {
            let key = key.as_str();
            match key {
                "problem" => {}
                "label" => cfg.label = Some(value.clone()),
                "algo" | "algorithm" => cfg.algorithm = value.parse()?,
                "r" => cfg.r = Some(value.parse()?),
                "lambda" => cfg.lambda = Some(value.parse()?),
                "theta" => cfg.theta = Some(parse_num(key, value)?),
                "auto_theta" => cfg.auto_theta = parse_bool(key, value)?,
                "max_iter" => cfg.max_iter = parse_num(key, value)?,
                "tol" => cfg.tol = parse_num(key, value)?,
                "record_every" => cfg.record_every = parse_num(key, value)?,
                "gap_target" => cfg.gap_target = Some(parse_num(key, value)?),
                "reference_budget" => cfg.reference_budget = parse_num(key, value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                "phi" => cfg.phi = parse_bool(key, value)?,
                "override_check" => cfg.override_check = parse_bool(key, value)?,
                "timing" => cfg.timing = parse_bool(key, value)?,
                _ if key == "seed" || RECIPE_KEYS.contains(&key) => match &mut problem {
                    ProblemSource::Generated(recipe) => recipe.set(key, value)?,
                    ProblemSource::Stored(dir) => {
                        return Err(Error::Usage(format!(
                            "{key} cannot be changed for the stored instance {}",
                            dir.display()
                        )))
                    }
                },
                _ => return Err(Error::Usage(format!("unknown setting {key:?}"))),
            }
        }
        if let ProblemSource::Generated(recipe) = &problem {
            recipe.validate()?;
        }
        cfg.problem = problem;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.theta.is_some() && self.auto_theta {
            return Err(Error::Usage("theta and auto_theta are mutually exclusive".into()));
        }
        if let Some(t) = self.theta {
            if !(t > 0.75 && t <= 1.0) {
                return Err(Error::Parameter(format!("theta must lie in (3/4, 1], got {t}")));
            }
        }
        if self.phi && self.algorithm != Algorithm::Base {
            return Err(Error::Usage(format!(
                "the Lyapunov diagnostic needs algo=base, not {}",
                self.algorithm
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Parameter(format!("tol must be nonnegative, got {}", self.tol)));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be at least 1".into()));
        }
        if let Some(g) = self.gap_target {
            if !(g > 0.0) {
                return Err(Error::Parameter(format!("gap_target must be positive, got {g}")));
            }
            if self.reference_budget == 0 {
                return Err(Error::Usage("gap_target needs a reference (reference_budget > 0)".into()));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let mut s = self.algorithm.to_string();
            if let Some(r) = self.r {
                s.push_str(&format!(" r={r}"));
            }
            if let Some(l) = self.lambda {
                s.push_str(&format!(" lambda={l}"));
            }
            s
        })
    }
}

/// Reads a config file into `settings`.
pub fn read_config_file(path: &Path, settings: &mut Settings) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
    settings.extend(parse_key_values(&text)?);
    Ok(())
}

/// Parses `key=value` from a `--set` argument.
pub fn parse_assignment(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("expected key=value, got {s:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
