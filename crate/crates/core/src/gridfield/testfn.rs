use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Grid, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{norm, DomainKind, DomainModel, DyadicCube, OpenSet, Point};
use crate::whitney;

fn half() -> f64 {
    0.5
}

fn default_levels() -> i32 {
    10
}

/// Closed-form test functions. JSON form: `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFunctionSpec {
    Constant { value: f64 },
    /// `f(x) = x_axis`.
    Coordinate { axis: usize },
    /// `f(x) = log(1/d(x))`.
    LogDistance,
    /// `n·x` on the n-th strip, 0 on the half-plane.
    #[serde(rename = "example-1")]
    Example1,
    /// `c_j·x` with `c_j = j^exponent` on strips of height `1/j ≤ lambda`, 0 elsewhere.
    #[serde(rename = "example-2")]
    Example2 {
        #[serde(default = "half")]
        exponent: f64,
        lambda: f64,
    },
    /// An independent uniform value in `[-amplitude, amplitude]` on each Whitney cube of the domain.
    RandomWhitneyStep {
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
        /// Subdivision depth below the root level.
        #[serde(default = "default_levels")]
        levels: i32,
    },
    /// Indicator of `{x_axis < at}`.
    IndicatorHalf { axis: usize, at: f64 },
    /// Radial cutoff: 1 on `B(center, inner)`, 0 outside `B(center, outer)`, linear in between.
    Cutoff {
        center: Point,
        inner: f64,
        outer: f64,
    },
    /// `min(d(x), cap)`.
    Distance { cap: f64 },
}

fn one() -> f64 {
    1.0
}

impl TestFunctionSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TestFunctionSpec::Constant { .. } => "constant",
            TestFunctionSpec::Coordinate { .. } => "coordinate",
            TestFunctionSpec::LogDistance => "log-distance",
            TestFunctionSpec::Example1 => "example-1",
            TestFunctionSpec::Example2 { .. } => "example-2",
            TestFunctionSpec::RandomWhitneyStep { .. } => "random-whitney-step",
            TestFunctionSpec::IndicatorHalf { .. } => "indicator-half",
            TestFunctionSpec::Cutoff { .. } => "cutoff",
            TestFunctionSpec::Distance { .. } => "distance",
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TestFunctionSpec =
            serde_json::from_str(text).map_err(|e| Error::validation("function", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(field, "must be finite"))
            }
        };
        match self {
            TestFunctionSpec::Constant { value } => finite("params.value", *value),
            TestFunctionSpec::Coordinate { axis } | TestFunctionSpec::IndicatorHalf { axis, .. } if *axis > 1 => {
                Err(Error::validation("params.axis", "must be 0 or 1"))
            }
            TestFunctionSpec::IndicatorHalf { at, .. } => finite("params.at", *at),
            TestFunctionSpec::Example2 { exponent, lambda } => {
                finite("params.exponent", *exponent)?;
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::validation("params.lambda", "must be positive"));
                }
                Ok(())
            }
            TestFunctionSpec::RandomWhitneyStep { amplitude, levels, .. } => {
                finite("params.amplitude", *amplitude)?;
                if !(1..=24).contains(levels) {
                    return Err(Error::validation("params.levels", "must lie in 1..=24"));
                }
                Ok(())
            }
            TestFunctionSpec::Cutoff { center, inner, outer } => {
                finite("params.center", center[0])?;
                finite("params.center", center[1])?;
                if !(*inner >= 0.0 && outer > inner && outer.is_finite()) {
                    return Err(Error::validation("params.outer", "need 0 <= inner < outer"));
                }
                Ok(())
            }
            TestFunctionSpec::Distance { cap } => {
                if !(*cap > 0.0) {
                    return Err(Error::validation("params.cap", "must be positive"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Mix a seed with a Whitney cube into a per-cube RNG seed (splitmix64 finaliser).
fn cube_seed(seed: u64, q: &DyadicCube<2>) -> u64 {
    let mut z = seed;
    for v in [q.level as i64, q.index[0], q.index[1]] {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(v as u64);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Sample a test function at the cell centres of the domain's window.
pub fn sample(spec: &TestFunctionSpec, d: &DomainModel, h: f64) -> Result<GridFunction> {
    spec.validate()?;
    let grid = Grid::for_window(d.window(), h)?;
    let mask = GridFunction::domain_mask(&grid, d);
    let strips_kind = matches!(d.kind(), DomainKind::StripsExample1 { .. } | DomainKind::StripsExample2 { .. });
    match spec {
        TestFunctionSpec::Constant { value } => GridFunction::from_fn(grid, mask, |_| *value),
        TestFunctionSpec::Coordinate { axis } => GridFunction::from_fn(grid, mask, |p| p[*axis]),
        TestFunctionSpec::LogDistance => GridFunction::from_fn(grid, mask, |p| -d.distance(p).ln()),
        TestFunctionSpec::Example1 => {
            if !matches!(d.kind(), DomainKind::StripsExample1 { .. }) {
                return Err(Error::validation("function", "example-1 needs a strips-example-1 domain"));
            }
            GridFunction::from_fn(grid, mask, |p| {
                d.strip_at(p).map_or(0.0, |s| s.group as f64 * p[0])
            })
        }
        TestFunctionSpec::Example2 { exponent, lambda } => {
            if !strips_kind {
                return Err(Error::validation("function", "example-2 needs a strip domain"));
            }
            GridFunction::from_fn(grid, mask, |p| match d.strip_at(p) {
                Some(s) if 1.0 / (s.index as f64) <= *lambda => (s.index as f64).powf(*exponent) * p[0],
                _ => 0.0,
            })
        }
        TestFunctionSpec::RandomWhitneyStep { seed, amplitude, levels } => {
            let root = whitney::root_level(d.window())?;
            GridFunction::from_fn(grid, mask, |p| {
                match whitney::locate(d, OpenSet::Interior, p, root, root + levels) {
                    Some(q) => {
                        let mut rng = ChaCha8Rng::seed_from_u64(cube_seed(*seed, &q));
                        amplitude * rng.gen_range(-1.0..=1.0)
                    }
                    None => 0.0,
                }
            })
        }
        TestFunctionSpec::IndicatorHalf { axis, at } => {
            GridFunction::from_fn(grid, mask, |p| if p[*axis] < *at { 1.0 } else { 0.0 })
        }
        TestFunctionSpec::Cutoff { center, inner, outer } => GridFunction::from_fn(grid, mask, |p| {
            let r = norm(&[p[0] - center[0], p[1] - center[1]]);
            ((outer - r) / (outer - inner)).clamp(0.0, 1.0)
        }),
        TestFunctionSpec::Distance { cap } => GridFunction::from_fn(grid, mask, |p| d.distance(p).min(*cap)),
    }
}
