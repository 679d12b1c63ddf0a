use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bounded_approximant, grid_smooth, h_j_of_distance, psi_k_at};
use crate::error::{Error, Result};
use crate::extension::lipschitz_estimate;
use crate::geometry::DomainModel;
use crate::gridfield::GridFunction;
use crate::oscillation::{domain_norm_families, norm_on, NormSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `f·h_j`, `j = 1, 2, …`.
    Boundary,
    /// `f·ψ_k`, `k = 1, 2, 4, …`.
    Infinity,
    /// The bounded approximant at `ℓ, ℓ/2, …`.
    Bounded,
    /// Grid smoothing with tile and radius `δ, δ/2, …`.
    Lipschitz,
    /// `f·h_j·ψ_k` with `j = 1, 2, …` and `k = 1, 2, 4, …`.
    Compact,
}

impl Scheme {
    pub fn parameter_name(self) -> &'static str {
        match self {
            Scheme::Boundary => "j",
            Scheme::Infinity => "k",
            Scheme::Bounded => "ell",
            Scheme::Lipschitz => "delta",
            Scheme::Compact => "j,k",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverOptions {
    pub steps: usize,
    /// First parameter: `j`, `k`, `ℓ` or `δ`. Defaults: 1, 1, `λ/16`, `λ/2`.
    pub start: Option<f64>,
    /// Random pairs for the Lipschitz estimate of each approximant.
    pub lip_pairs: usize,
    pub seed: u64,
    pub settings: NormSettings,
    /// Require the support margin in the grid smoothing.
    pub restricted: bool,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            steps: 5,
            start: None,
            lip_pairs: 2000,
            seed: 0,
            settings: NormSettings::default(),
            restricted: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ApproxPoint {
    pub index: usize,
    /// `j`, `k`, `ℓ` or `δ`; `j` for the compact scheme.
    pub parameter: f64,
    /// `‖f − f_i‖_{bmo_λ}`.
    pub error: f64,
    pub sup_norm: f64,
    pub lip: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxCurve {
    pub scheme: Scheme,
    pub lambda: f64,
    pub points: Vec<ApproxPoint>,
}

impl ApproxCurve {
    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.error).collect()
    }

    /// `true` when the last error is at most `factor` times the first.
    pub fn decreased_by(&self, factor: f64) -> bool {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.error <= factor * a.error,
            _ => false,
        }
    }
}

fn integer_start(start: Option<f64>) -> Result<u32> {
    let s = start.unwrap_or(1.0);
    if s < 1.0 || s.fract() != 0.0 || s > u32::MAX as f64 {
        return Err(Error::validation("start", "must be a positive integer for this scheme"));
    }
    Ok(s as u32)
}

fn power_of_two(base: u32, i: usize) -> Result<u32> {
    u32::try_from(i)
        .ok()
        .and_then(|i| 2u32.checked_pow(i))
        .and_then(|p| p.checked_mul(base))
        .ok_or_else(|| Error::validation("steps", "cutoff radius overflows"))
}

/// The `i`-th approximant of the scheme, with its parameter.
pub fn approximant(f: &GridFunction, d: &DomainModel, lambda: f64, scheme: Scheme, i: usize, opts: &DriverOptions) -> Result<(f64, GridFunction)> {
    let grid = *f.grid();
    let halve = |x: f64| x / 2f64.powi(i as i32);
    match scheme {
        Scheme::Boundary | Scheme::Compact => {
            let j = match scheme {
                Scheme::Boundary => integer_start(opts.start)? + i as u32,
                _ => 1 + i as u32,
            };
            let k = match scheme {
                Scheme::Compact => Some(power_of_two(integer_start(opts.start)?, i)?),
                _ => None,
            };
            let cut: Vec<f64> = (0..grid.len())
                .into_par_iter()
                .map(|c| {
                    if !f.mask()[c] {
                        return Ok(0.0);
                    }
                    let p = grid.center_of(c);
                    let hj = h_j_of_distance(d.distance(&p), j, lambda)?;
                    Ok(hj * k.map_or(1.0, |k| psi_k_at(&p, k)))
                })
                .collect::<Result<_>>()?;
            let g = GridFunction::new(grid, f.values().iter().zip(&cut).map(|(v, c)| v * c).collect(), f.mask().to_vec())?;
            Ok((j as f64, g))
        }
        Scheme::Infinity => {
            let k = power_of_two(integer_start(opts.start)?, i)?;
            Ok((k as f64, f.map_with_point(|p, v| v * psi_k_at(p, k))))
        }
        Scheme::Bounded => {
            let ell = halve(opts.start.unwrap_or(lambda / 16.0));
            Ok((ell, bounded_approximant(f, d, ell, lambda)?.g))
        }
        Scheme::Lipschitz => {
            let start = opts.start.unwrap_or_else(|| ((lambda / 2.0) / grid.h).floor() * grid.h);
            let delta = halve(start);
            Ok((delta, grid_smooth(f, d, delta, delta, opts.restricted)?))
        }
    }
}

/// Error curve `‖f − f_i‖_{bmo_λ(Ω)}` of a scheme over `opts.steps` indices.
/// Curves that fail to decrease are returned as measured.
pub fn approximation_driver(f: &GridFunction, d: &DomainModel, lambda: f64, scheme: Scheme, opts: &DriverOptions) -> Result<ApproxCurve> {
    if opts.steps == 0 {
        return Err(Error::validation("steps", "must be at least 1"));
    }
    let fams = domain_norm_families(d, f.grid(), lambda, opts.settings)?;
    let points = (0..opts.steps)
        .into_par_iter()
        .map(|i| {
            let (parameter, g) = approximant(f, d, lambda, scheme, i, opts)?;
            let diff = f.linear_combination(1.0, &g, -1.0)?;
            let error = norm_on(&diff, &fams)?.total;
            let lip = lipschitz_estimate(&g, |k| g.mask()[k], opts.lip_pairs, opts.seed).lipschitz;
            Ok(ApproxPoint {
                index: i,
                parameter,
                error,
                sup_norm: g.sup_norm(),
                lip,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ApproxCurve { scheme, lambda, points })
}
