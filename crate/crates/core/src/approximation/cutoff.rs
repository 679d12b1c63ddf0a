use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm, DomainModel, Point};
use crate::gridfield::{Grid, GridFunction};

/// Relative tolerance of the `Φ_λ` quadrature.
pub const PHI_RTOL: f64 = 1e-8;

/// `φ_λ(t) = 1 + log₊(λ/4t)`.
pub fn phi_lambda(t: f64, lambda: f64) -> f64 {
    1.0 + crate::numeric::log_plus(lambda / (4.0 * t))
}

/// The weight in `Φ_λ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weight {
    /// `1 + log₊(λ/4t)`.
    #[default]
    Logarithmic,
    /// `φ ≡ 1`.
    Constant,
}

impl Weight {
    /// The weight as a function of `w = log(λ/4t) ≥ 0`.
    fn at(self, w: f64) -> f64 {
        match self {
            Weight::Logarithmic => 1.0 + w,
            Weight::Constant => 1.0,
        }
    }
}

/// Adaptive midpoint rule with Richardson correction on `[a, b]`.
fn adaptive_midpoint(g: &impl Fn(f64) -> f64, a: f64, b: f64, rtol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let coarse = (b - a) * g(m);
    let fine = 0.5 * (b - a) * (g(0.5 * (a + m)) + g(0.5 * (m + b)));
    if (fine - coarse).abs() <= 3.0 * rtol * fine.abs() {
        return Ok(fine + (fine - coarse) / 3.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!("no convergence on [{a}, {b}]")));
    }
    Ok(adaptive_midpoint(g, a, m, rtol, depth - 1)? + adaptive_midpoint(g, m, b, rtol, depth - 1)?)
}

/// `∫_0^W dw/φ(w)` in the variable `w = log(λ/4t)`, on geometric panels
/// `[0,1], [1,2], [2,4], …`.
fn log_integral(w_max: f64, weight: Weight) -> Result<f64> {
    if w_max <= 0.0 {
        return Ok(0.0);
    }
    let g = |w: f64| 1.0 / weight.at(w);
    let mut total = 0.0;
    let (mut a, mut b) = (0.0, 1.0f64.min(w_max));
    loop {
        total += adaptive_midpoint(&g, a, b, PHI_RTOL, 40)?;
        if b >= w_max {
            return Ok(total);
        }
        a = b;
        b = (2.0 * b).min(w_max);
    }
}

/// `Φ_λ` at distance `e^{log_d}`: `∫_d^{λ/4} dt/(t φ_λ(t))`, and 0 for `d ≥ λ/4`.
pub fn big_phi_log(log_d: f64, lambda: f64, weight: Weight) -> Result<f64> {
    log_integral((lambda / 4.0).ln() - log_d, weight)
}

/// `Φ_λ(d) = ∫_d^{λ/4} dt/(t φ_λ(t))`, clamped to 0 for `d ≥ λ/4`.
pub fn big_phi(d: f64, lambda: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Ok(f64::INFINITY);
    }
    big_phi_log(d.ln(), lambda, Weight::Logarithmic)
}

/// `log α_j`, where `Φ_λ(α_j) = j`, by bisection in `log d` to `1e-10`
/// relative accuracy. The logarithm is returned because `α_j` underflows
/// from `j = 7` on.
pub fn log_alpha(j: u32, lambda: f64, weight: Weight) -> Result<f64> {
    if j == 0 {
        return Err(Error::validation("j", "must be at least 1"));
    }
    let top = (lambda / 4.0).ln();
    let target = j as f64;
    // Φ grows at least like log(1 + w), so w = e^j bounds the root.
    let (mut lo, mut hi) = (top - target.exp() - 1.0, top);
    while big_phi_log(lo, lambda, weight)? < target {
        lo = top - 2.0 * (top - lo);
    }
    while hi - lo > 1e-10 * lo.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if big_phi_log(mid, lambda, weight)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `h_j(x) = (1 − Φ_λ(d(x))/j)₊` as a function of the boundary distance.
pub fn h_j_of_distance(d: f64, j: u32, lambda: f64) -> Result<f64> {
    Ok((1.0 - big_phi(d, lambda)? / j as f64).max(0.0))
}

/// `ψ_k(x)`: 1 on `B(0, k)`, 0 outside `B(0, 2k)`, linear in `|x|` between.
pub fn psi_k_at(p: &Point, k: u32) -> f64 {
    let k = k as f64;
    (2.0 - norm(p) / k).clamp(0.0, 1.0)
}

/// The two cutoff families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CutoffSpec {
    PsiK { k: u32 },
    HJ { j: u32, lambda: f64 },
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CutoffSpec::PsiK { k } if k == 0 => Err(Error::validation("k", "must be at least 1")),
            CutoffSpec::HJ { j, .. } if j == 0 => Err(Error::validation("j", "must be at least 1")),
            CutoffSpec::HJ { lambda, .. } if !(lambda > 0.0) => Err(Error::validation("lambda", "must be positive")),
            _ => Ok(()),
        }
    }

    /// The cutoff sampled on the cells of `grid` with the domain's mask.
    pub fn sample(&self, d: &DomainModel, grid: &Grid) -> Result<GridFunction> {
        self.validate()?;
        let mask = GridFunction::domain_mask(grid, d);
        match *self {
            CutoffSpec::PsiK { k } => GridFunction::from_fn(*grid, mask, |p| psi_k_at(p, k)),
            CutoffSpec::HJ { j, lambda } => {
                let mut values = vec![0.0; grid.len()];
                for (k, v) in values.iter_mut().enumerate() {
                    if mask[k] {
                        *v = h_j_of_distance(d.distance(&grid.center_of(k)), j, lambda)?;
                    }
                }
                GridFunction::new(*grid, values, mask)
            }
        }
    }
}
