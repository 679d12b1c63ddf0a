use std::path::{Path, PathBuf};

use bmo_core::approximation::Scheme;
use bmo_core::geometry::{Cube, DomainKind, DomainSpec, RectSpec};
use bmo_core::gridfield::TestFunctionSpec;
use bmo_core::oscillation::AverageMode;
use bmo_core::scenarios::LengthRule;
use bmo_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Every setting of a run. Fields left empty fall back to the defaults of
/// the command; flags override a config file field by field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    /// Preset name, domain JSON document, or path to one.
    pub domain: Option<Value>,
    /// Preset (`name[:arg]`), test-function JSON document, or path to one.
    pub function: Option<Value>,
    pub resolution: Option<f64>,
    pub lambda: Option<f64>,
    pub window: Option<Cube<2>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub mode: Option<AverageMode>,
    pub ts: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub smooth: Option<bool>,
    pub c_n: Option<f64>,
    pub scheme: Option<Scheme>,
    pub steps: Option<usize>,
    pub start: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub pairs: Option<usize>,
    pub which: Option<u8>,
    pub ln: Option<LengthRule>,
    /// Strip indices probed by the first example.
    pub ns: Option<Vec<usize>>,
    pub functional: Option<String>,
    pub t: Option<f64>,
    pub max_cubes: Option<u64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::validation("config", e.to_string()))
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &ExperimentConfig) -> Self {
        overlay!(self, top; domain, function, resolution, lambda, window, out, seed, workers, mode, ts, betas,
            smooth, c_n, scheme, steps, start, eps, delta, pairs, which, ln, ns, functional, t, max_cubes);
        self
    }

    pub fn resolution(&self) -> Result<f64> {
        let h = self.resolution.unwrap_or(1.0 / 64.0);
        if !(h > 0.0) {
            return Err(Error::validation("resolution", "must be positive"));
        }
        Ok(h)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(0.25)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        let spec = match &self.domain {
            None => preset_domain("square")?,
            Some(Value::String(s)) => match document(s)? {
                Some(v) => DomainSpec::from_value(v)?,
                None => preset_domain(s)?,
            },
            Some(v) => DomainSpec::from_value(v.clone())?,
        };
        Ok(match self.window {
            Some(w) => spec.with_window(w),
            None => spec,
        })
    }

    pub fn function_spec(&self) -> Result<TestFunctionSpec> {
        match &self.function {
            None => preset_function("coordinate:0"),
            Some(Value::String(s)) => match document(s)? {
                Some(v) => serde_json::from_value(v).map_err(|e| Error::validation("function", e.to_string())),
                None => preset_function(s),
            },
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::validation("function", e.to_string())),
        }
    }
}

/// Inline JSON, a JSON file, or `None` for a preset name.
fn document(s: &str) -> Result<Option<Value>> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else if Path::new(s).is_file() {
        std::fs::read_to_string(s)?
    } else {
        return Ok(None);
    };
    Ok(Some(serde_json::from_str(&text)?))
}

fn preset_domain(name: &str) -> Result<DomainSpec> {
    let kind = match name {
        "square" => DomainKind::Square { corner: [0.0, 0.0], side: 1.0 },
        "disk" => DomainKind::Disk { center: [0.0, 0.0], radius: 1.0 },
        "half-plane" => DomainKind::HalfPlane { offset: 0.0 },
        "l-shape" => DomainKind::RectUnion {
            rects: vec![
                RectSpec { lo: [Some(0.0), Some(0.0)], hi: [Some(1.0), Some(0.5)] },
                RectSpec { lo: [Some(0.0), Some(0.0)], hi: [Some(0.5), Some(1.0)] },
            ],
        },
        _ => {
            return Err(Error::validation(
                "domain",
                format!("unknown preset `{name}`; use square, disk, half-plane, l-shape, a JSON document or a file"),
            ))
        }
    };
    Ok(DomainSpec::new(kind))
}

fn preset_function(s: &str) -> Result<TestFunctionSpec> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let num = |default: f64| -> Result<f64> {
        arg.map_or(Ok(default), |a| {
            a.parse().map_err(|_| Error::validation("function", format!("bad argument `{a}`")))
        })
    };
    let spec = match name {
        "constant" => TestFunctionSpec::Constant { value: num(1.0)? },
        "coordinate" => TestFunctionSpec::Coordinate { axis: num(0.0)? as usize },
        "log-distance" => TestFunctionSpec::LogDistance,
        "indicator-half" => TestFunctionSpec::IndicatorHalf { axis: 0, at: num(0.5)? },
        "distance" => TestFunctionSpec::Distance { cap: num(0.2)? },
        "random-whitney-step" => TestFunctionSpec::RandomWhitneyStep {
            seed: num(0.0)? as u64,
            amplitude: 1.0,
            levels: 10,
        },
        "example-1" => TestFunctionSpec::Example1,
        _ => {
            return Err(Error::validation(
                "function",
                format!("unknown preset `{name}`; use constant[:c], coordinate[:axis], log-distance, indicator-half[:at], distance[:cap], random-whitney-step[:seed], example-1, a JSON document or a file"),
            ))
        }
    };
    spec.validate()?;
    Ok(spec)
}
