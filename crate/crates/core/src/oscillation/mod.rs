//! Sup-type functionals over families of cubes inside the domain: mean
//! oscillation, the modulus `ω(f, t)`, the local bmo norm, the `γ` functional,
//! the vanishing measures and the logarithmic growth probe.
//!
//! Every functional is a maximum over a [`CubeFamily`], so enlarging the
//! family can only increase it. Values are computed per cube in parallel and
//! reduced with a deterministic arg-max.

mod family;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

pub use family::{dyadic_sides, enumerate_cubes, CubeCertifier, CubeFamily, FamilyStats, Lattice, Layer};

use crate::error::{Error, Result};
use crate::geometry::{Cube, DomainModel};
use crate::gridfield::{Grid, GridFunction};
use crate::numeric::ArgMax;

/// Which large cubes enter the average part of the norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageMode {
    /// All cubes with `ℓ(Q) ≥ λ`.
    #[default]
    AtLeast,
    /// Only cubes with `ℓ(Q) = λ`.
    Exactly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSettings {
    pub mode: AverageMode,
    /// Lattice pitch is `ℓ/pitch_divisor`, snapped to the grid.
    pub pitch_divisor: u32,
}

impl Default for NormSettings {
    fn default() -> Self {
        NormSettings {
            mode: AverageMode::AtLeast,
            pitch_divisor: 4,
        }
    }
}

/// A functional value, or the marker that no cube qualified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Measure {
    Value(f64),
    NotEvaluable,
}

impl Measure {
    pub fn value(self) -> Option<f64> {
        match self {
            Measure::Value(v) => Some(v),
            Measure::NotEvaluable => None,
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Measure::Value(v) => s.serialize_f64(*v),
            Measure::NotEvaluable => s.serialize_str("not-evaluable"),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Measure::Value(v) => write!(f, "{v}"),
            Measure::NotEvaluable => f.write_str("not-evaluable"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub lambda: f64,
    pub h: f64,
    pub mode: AverageMode,
    /// Discretised `ω(f, λ)`.
    pub oscillation_part: f64,
    /// Sup of `|f|_Q` over the large cubes.
    pub average_part: f64,
    pub total: f64,
    pub oscillation_argmax: Option<Cube<2>>,
    pub average_argmax: Option<Cube<2>>,
    pub small_family: FamilyStats,
    pub large_family: FamilyStats,
}

/// `⨏_Q |f − f_Q|`.
pub fn mean_oscillation(f: &GridFunction, q: &Cube<2>) -> Result<f64> {
    let b = f.cells(q)?;
    let m = f.block_mean(&b);
    Ok(f.block_deviation(&b, m))
}

/// `|f|_Q = ⨏_Q |f|`.
pub fn abs_average(f: &GridFunction, q: &Cube<2>) -> Result<f64> {
    Ok(f.block_abs_mean(&f.cells(q)?))
}

/// Mean oscillation of every cube of the family, in family order.
pub fn oscillation_values(f: &GridFunction, fam: &CubeFamily) -> Result<Vec<f64>> {
    (0..fam.len())
        .into_par_iter()
        .map(|i| mean_oscillation(f, &fam.cube(i)))
        .collect()
}

/// `|f|_Q` for every cube of the family, in family order.
pub fn average_values(f: &GridFunction, fam: &CubeFamily) -> Result<Vec<f64>> {
    (0..fam.len())
        .into_par_iter()
        .map(|i| abs_average(f, &fam.cube(i)))
        .collect()
}

/// Arg-max over the entries selected by `keep`.
fn sup_where(values: &[f64], keep: impl Fn(usize) -> bool) -> ArgMax {
    values
        .iter()
        .enumerate()
        .filter(|&(i, _)| keep(i))
        .fold(ArgMax::EMPTY, |acc, (i, &v)| acc.merge(ArgMax { value: v, index: i }))
}

/// `ω(f, t)`: the largest mean oscillation over the family, whose sides must all be below `t`.
pub fn omega(f: &GridFunction, t: f64, fam: &CubeFamily) -> Result<f64> {
    match fam.scale_bounds() {
        None => Err(Error::EmptyFamily("omega needs at least one cube".into())),
        Some((_, max)) if max >= t => Err(Error::validation(
            "family",
            format!("cube side {max} is not below t = {t}"),
        )),
        Some(_) => Ok(sup_where(&oscillation_values(f, fam)?, |_| true).value),
    }
}

/// `ω(f, t)` for several `t`, from one family of sides in `[4h, max t)`.
pub fn omega_curve(f: &GridFunction, d: &DomainModel, ts: &[f64]) -> Result<Vec<(f64, Measure)>> {
    let grid = f.grid();
    let t_max = ts.iter().copied().fold(0.0, f64::max);
    let cert = CubeCertifier::new(d, *grid);
    let fam = Lattice {
        window: grid.window(),
        sides: grid_sides(grid, 4.0 * grid.h, t_max).into_iter().filter(|&s| s < t_max).collect(),
        divisor: NormSettings::default().pitch_divisor,
        snap: Some(grid.h),
    }
    .enumerate(|q| cert.inside(q));
    let vals = oscillation_values(f, &fam)?;
    let sides: Vec<f64> = (0..fam.len()).map(|i| fam.cube(i).side()).collect();
    Ok(ts
        .iter()
        .map(|&t| {
            let best = sup_where(&vals, |i| sides[i] < t);
            (t, if best.is_empty() { Measure::NotEvaluable } else { Measure::Value(best.value) })
        })
        .collect())
}

/// Sides `h·2^k` (k ≥ 2) within `[lo, hi]`; dyadic whenever `h` is.
pub(crate) fn grid_sides(grid: &Grid, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut s = 4.0 * grid.h;
    while s <= hi * (1.0 + 1e-12) {
        if s >= lo * (1.0 - 1e-12) {
            out.push(s);
        }
        s *= 2.0;
    }
    out
}

/// Smallest multiple of the spacing that is at least `lambda`.
pub(crate) fn snap_up(grid: &Grid, lambda: f64) -> f64 {
    (lambda / grid.h - 1e-9).ceil() * grid.h
}

/// The two families of a local bmo norm.
#[derive(Clone, Debug)]
pub struct NormFamilies {
    pub lambda: f64,
    pub settings: NormSettings,
    /// Sides in `[4h, λ)`.
    pub small: CubeFamily,
    /// Sides at least `λ` (or exactly `λ`, snapped up to the grid).
    pub large: CubeFamily,
}

/// Grid-aligned norm families over the grid window, keeping the cubes accepted by `keep`.
pub fn norm_families(grid: &Grid, lambda: f64, settings: NormSettings, keep: impl Fn(&Cube<2>) -> bool) -> Result<NormFamilies> {
    let w = grid.window();
    if !(lambda > 4.0 * grid.h && lambda < w.side()) {
        return Err(Error::validation(
            "lambda",
            format!("need 4h = {} < λ < window side {}, got {lambda}", 4.0 * grid.h, w.side()),
        ));
    }
    if ![2, 4, 8].contains(&settings.pitch_divisor) {
        return Err(Error::validation("pitch_divisor", "must be 2, 4 or 8"));
    }
    let small_sides: Vec<f64> = grid_sides(grid, 0.0, lambda).into_iter().filter(|&s| s < lambda).collect();
    let top = snap_up(grid, lambda);
    let large_sides = match settings.mode {
        AverageMode::Exactly => vec![top],
        AverageMode::AtLeast => {
            let mut v: Vec<f64> = grid_sides(grid, top, w.side());
            if v.first().is_none_or(|&s| (s - top).abs() > 1e-9 * grid.h) {
                v.insert(0, top);
            }
            v
        }
    };
    let lattice = |sides: Vec<f64>| Lattice {
        window: w,
        sides,
        divisor: settings.pitch_divisor,
        snap: Some(grid.h),
    };
    let small = lattice(small_sides).enumerate(&keep);
    let large = lattice(large_sides).enumerate(&keep);
    if small.is_empty() {
        return Err(Error::EmptyFamily(format!(
            "no cube with side in [4h, λ) = [{}, {lambda}) fits inside the domain",
            4.0 * grid.h
        )));
    }
    if large.is_empty() {
        return Err(Error::EmptyFamily(format!(
            "no cube with side at least λ = {lambda} fits inside the domain within the window"
        )));
    }
    Ok(NormFamilies {
        lambda,
        settings,
        small,
        large,
    })
}

/// Norm families of cubes certified inside `d`.
pub fn domain_norm_families(d: &DomainModel, grid: &Grid, lambda: f64, settings: NormSettings) -> Result<NormFamilies> {
    let cert = CubeCertifier::new(d, *grid);
    norm_families(grid, lambda, settings, |q| cert.inside(q))
}

/// The local bmo norm evaluated on precomputed families.
pub fn norm_on(f: &GridFunction, fams: &NormFamilies) -> Result<NormReport> {
    let osc = sup_where(&oscillation_values(f, &fams.small)?, |_| true);
    let avg = sup_where(&average_values(f, &fams.large)?, |_| true);
    Ok(NormReport {
        lambda: fams.lambda,
        h: f.grid().h,
        mode: fams.settings.mode,
        oscillation_part: osc.value,
        average_part: avg.value,
        total: osc.value + avg.value,
        oscillation_argmax: Some(fams.small.cube(osc.index)),
        average_argmax: Some(fams.large.cube(avg.index)),
        small_family: fams.small.stats(),
        large_family: fams.large.stats(),
    })
}

/// `‖f‖_{bmo_λ(Ω)} = ω(f, λ) + sup_{ℓ(Q) ≥ λ} |f|_Q`.
pub fn bmo_norm(f: &GridFunction, d: &DomainModel, lambda: f64) -> Result<NormReport> {
    bmo_norm_with(f, d, lambda, NormSettings::default())
}

pub fn bmo_norm_with(f: &GridFunction, d: &DomainModel, lambda: f64, settings: NormSettings) -> Result<NormReport> {
    norm_on(f, &domain_norm_families(d, f.grid(), lambda, settings)?)
}

/// Per-cube values of both norm parts with a scalar key per cube, for
/// evaluating restricted norms at many thresholds.
struct KeyedParts {
    osc: Vec<f64>,
    osc_key: Vec<f64>,
    avg: Vec<f64>,
    avg_key: Vec<f64>,
}

impl KeyedParts {
    fn new(f: &GridFunction, fams: &NormFamilies, key: impl Fn(&Cube<2>) -> f64) -> Result<Self> {
        Ok(KeyedParts {
            osc: oscillation_values(f, &fams.small)?,
            osc_key: fams.small.iter().map(|q| key(&q)).collect(),
            avg: average_values(f, &fams.large)?,
            avg_key: fams.large.iter().map(|q| key(&q)).collect(),
        })
    }

    fn restricted(&self, keep: impl Fn(f64) -> bool) -> Measure {
        let a = sup_where(&self.osc, |i| keep(self.osc_key[i]));
        let b = sup_where(&self.avg, |i| keep(self.avg_key[i]));
        if a.is_empty() && b.is_empty() {
            return Measure::NotEvaluable;
        }
        let part = |m: ArgMax| if m.is_empty() { 0.0 } else { m.value };
        Measure::Value(part(a) + part(b))
    }
}

/// Set distance from the cube to the origin.
fn origin_distance(q: &Cube<2>) -> f64 {
    q.distance_to_point(&[0.0, 0.0])
}

/// `γ(f, β)` for several `β`: oscillation over cubes with `ℓ < λ` and
/// averages over cubes with `ℓ = λ`, both restricted to `dist(Q, 0) > β`.
pub fn gamma_curve(f: &GridFunction, d: &DomainModel, betas: &[f64], lambda: f64) -> Result<Vec<(f64, Measure)>> {
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::validation("beta", format!("must be non-negative, got {b}")));
    }
    let settings = NormSettings {
        mode: AverageMode::Exactly,
        ..NormSettings::default()
    };
    let fams = domain_norm_families(d, f.grid(), lambda, settings)?;
    let parts = KeyedParts::new(f, &fams, origin_distance)?;
    Ok(betas.iter().map(|&b| (b, parts.restricted(|k| k > b))).collect())
}

pub fn gamma(f: &GridFunction, d: &DomainModel, beta: f64, lambda: f64) -> Result<Measure> {
    Ok(gamma_curve(f, d, &[beta], lambda)?[0].1)
}

/// Upper bound for `max_{x∈Q} d(x)`.
fn max_boundary_distance_bound(d: &DomainModel, q: &Cube<2>) -> f64 {
    d.distance(&q.center()) + 0.5 * q.diam()
}

/// The local bmo norm restricted to cubes near the boundary, for several `t`.
/// A cube counts when `d(center) + diam/2 < t`, so that it lies in
/// `Ω ∖ Ω̊_t`.
pub fn vanishing_at_boundary_curve(
    f: &GridFunction,
    d: &DomainModel,
    ts: &[f64],
    lambda: f64,
) -> Result<Vec<(f64, Measure)>> {
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::validation("t", format!("must be positive, got {t}")));
    }
    let fams = domain_norm_families(d, f.grid(), lambda, NormSettings::default())?;
    let parts = KeyedParts::new(f, &fams, |q| max_boundary_distance_bound(d, q))?;
    Ok(ts.iter().map(|&t| (t, parts.restricted(|k| k < t))).collect())
}

pub fn vanishing_at_boundary_norm(f: &GridFunction, d: &DomainModel, t: f64, lambda: f64) -> Result<Measure> {
    Ok(vanishing_at_boundary_curve(f, d, &[t], lambda)?[0].1)
}

/// The local bmo norm restricted to cubes outside the closed ball `B(0, R)`, for several `R`.
pub fn vanishing_at_infinity_curve(
    f: &GridFunction,
    d: &DomainModel,
    radii: &[f64],
    lambda: f64,
) -> Result<Vec<(f64, Measure)>> {
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::validation("R", format!("must be positive, got {r}")));
    }
    let fams = domain_norm_families(d, f.grid(), lambda, NormSettings::default())?;
    let parts = KeyedParts::new(f, &fams, origin_distance)?;
    Ok(radii.iter().map(|&r| (r, parts.restricted(|k| k > r))).collect())
}

pub fn vanishing_at_infinity_norm(f: &GridFunction, d: &DomainModel, r: f64, lambda: f64) -> Result<Measure> {
    Ok(vanishing_at_infinity_curve(f, d, &[r], lambda)?[0].1)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbePoint {
    pub ell: f64,
    pub sup_average: f64,
    /// `sup_{ℓ(Q)=ℓ} |f|_Q / ((1 + log(λ/ℓ))·total)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogProbe {
    pub lambda: f64,
    pub total: f64,
    pub points: Vec<ProbePoint>,
}

/// Normalised growth of cube averages towards small scales, at the grid
/// sides `4h·2^k ≤ λ`.
pub fn log_estimate_probe(f: &GridFunction, d: &DomainModel, lambda: f64) -> Result<LogProbe> {
    let scales = grid_sides(f.grid(), 0.0, lambda);
    log_estimate_probe_at(f, d, lambda, &scales)
}

/// As [`log_estimate_probe`], at the given scales (each snapped up to the grid).
pub fn log_estimate_probe_at(f: &GridFunction, d: &DomainModel, lambda: f64, scales: &[f64]) -> Result<LogProbe> {
    let grid = f.grid();
    let cert = CubeCertifier::new(d, *grid);
    let fams = norm_families(grid, lambda, NormSettings::default(), |q| cert.inside(q))?;
    let total = norm_on(f, &fams)?.total;
    if !(total > 0.0) {
        return Err(Error::validation("function", "the probe needs a nonzero norm"));
    }
    let mut points = Vec::new();
    for &ell in scales {
        let side = snap_up(grid, ell);
        if side < 4.0 * grid.h * (1.0 - 1e-12) || side > lambda * (1.0 + 1e-12) {
            return Err(Error::validation(
                "scale",
                format!("probe scale {ell} must lie in [4h, λ] = [{}, {lambda}]", 4.0 * grid.h),
            ));
        }
        let fam = Lattice {
            window: grid.window(),
            sides: vec![side],
            divisor: NormSettings::default().pitch_divisor,
            snap: Some(grid.h),
        }
        .enumerate(|q| cert.inside(q));
        if fam.is_empty() {
            continue;
        }
        let sup = sup_where(&average_values(f, &fam)?, |_| true).value;
        points.push(ProbePoint {
            ell: side,
            sup_average: sup,
            ratio: sup / ((1.0 + (lambda / side).ln()) * total),
        });
    }
    Ok(LogProbe { lambda, total, points })
}

/// `λ_{ε,δ} = ε²δ / (320 n (1 + √n ε))`.
pub fn lambda_eps_delta(eps: f64, delta: f64, n: u32) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::validation("eps", format!("must lie in (0, 1], got {eps}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::validation("delta", format!("must be positive, got {delta}")));
    }
    if n == 0 {
        return Err(Error::validation("n", "dimension must be at least 1"));
    }
    let n = n as f64;
    Ok(eps * eps * delta / (320.0 * n * (1.0 + n.sqrt() * eps)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainKind, DomainSpec};
    use crate::gridfield::{sample, TestFunctionSpec};
    use approx::assert_relative_eq;

    fn square() -> DomainModel {
        build_domain(&DomainSpec::new(DomainKind::Square { corner: [0.0, 0.0], side: 1.0 })).unwrap()
    }

    /// Exhaustive reference: every grid-aligned cube of side `k·h` (k ≥ 4)
    /// inside the unit square, evaluated cell by cell.
    fn brute_norm(h: f64, lambda: f64, f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
        let n = (1.0 / h).round() as usize;
        let value = |i: usize, j: usize| f((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
        let (mut osc, mut avg) = (0.0f64, 0.0f64);
        // Closed cubes must avoid the boundary, so corners run over 1..n-k.
        for k in 4..n {
            let side = k as f64 * h;
            for a in 1..n - k {
                for b in 1..n - k {
                    let mut s = 0.0;
                    let mut sa = 0.0;
                    for i in a..a + k {
                        for j in b..b + k {
                            s += value(i, j);
                            sa += value(i, j).abs();
                        }
                    }
                    let m = s / (k * k) as f64;
                    if side < lambda {
                        let mut dev = 0.0;
                        for i in a..a + k {
                            for j in b..b + k {
                                dev += (value(i, j) - m).abs();
                            }
                        }
                        osc = osc.max(dev / (k * k) as f64);
                    } else {
                        avg = avg.max(sa / (k * k) as f64);
                    }
                }
            }
        }
        (osc, avg)
    }

    #[test]
    fn mean_oscillation_of_coordinate() {
        let d = square();
        let f = sample(&TestFunctionSpec::Coordinate { axis: 0 }, &d, 1.0 / 64.0).unwrap();
        let q = Cube::new([0.0, 0.0], 1.0).unwrap();
        assert_relative_eq!(mean_oscillation(&f, &q).unwrap(), 0.25, epsilon = 1.0 / 64.0);
        let ind = sample(&TestFunctionSpec::IndicatorHalf { axis: 0, at: 0.5 }, &d, 1.0 / 64.0).unwrap();
        assert_relative_eq!(mean_oscillation(&ind, &q).unwrap(), 0.5, epsilon = 1e-12);
        let c = sample(&TestFunctionSpec::Constant { value: 3.0 }, &d, 1.0 / 64.0).unwrap();
        assert_eq!(mean_oscillation(&c, &q).unwrap(), 0.0);
    }

    #[test]
    fn norm_of_coordinate_against_exhaustive_reference() {
        let d = square();
        let h = 1.0 / 32.0;
        let f = sample(&TestFunctionSpec::Coordinate { axis: 0 }, &d, h).unwrap();
        let r = bmo_norm(&f, &d, 0.5).unwrap();
        let (osc, avg) = brute_norm(h, 0.5, |x, _| x);
        assert!(r.oscillation_part <= osc + 1e-12);
        assert!(r.average_part <= avg + 1e-12);
        // The exhaustive value approaches 1/8 + 3/4; the sampled family,
        // with dyadic sides and pitch ℓ/4, stays within a factor 1.5 below it.
        assert_relative_eq!(osc + avg, 0.875, epsilon = 3.0 * h);
        assert!(r.total * 1.5 >= osc + avg);
        assert_relative_eq!(r.total, r.oscillation_part + r.average_part);
    }

    #[test]
    fn constant_norm_is_exact() {
        let d = square();
        let f = sample(&TestFunctionSpec::Constant { value: -2.5 }, &d, 1.0 / 32.0).unwrap();
        let r = bmo_norm(&f, &d, 0.25).unwrap();
        assert_eq!(r.oscillation_part, 0.0);
        assert!((r.total - 2.5).abs() <= 1e-12);
        let exact = bmo_norm_with(
            &f,
            &d,
            0.25,
            NormSettings {
                mode: AverageMode::Exactly,
                pitch_divisor: 8,
            },
        )
        .unwrap();
        assert!((exact.total - 2.5).abs() <= 1e-12);
    }

    #[test]
    fn argmax_cubes_are_family_members() {
        let d = square();
        let f = sample(&TestFunctionSpec::LogDistance, &d, 1.0 / 32.0).unwrap();
        let fams = domain_norm_families(&d, f.grid(), 0.25, NormSettings::default()).unwrap();
        let r = norm_on(&f, &fams).unwrap();
        let a = r.oscillation_argmax.unwrap();
        assert!(fams.small.iter().any(|q| q == a));
        let b = r.average_argmax.unwrap();
        assert!(fams.large.iter().any(|q| q == b));
    }

    #[test]
    fn omega_monotone_and_checked() {
        let d = square();
        let f = sample(&TestFunctionSpec::LogDistance, &d, 1.0 / 64.0).unwrap();
        let curve = omega_curve(&f, &d, &[0.1, 0.2, 0.5, 1.0]).unwrap();
        let vals: Vec<f64> = curve.iter().map(|c| c.1.value().unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let fam = enumerate_cubes(&d, 0.125, 0.25, 4).unwrap();
        assert!(omega(&f, 0.25, &fam).is_err());
        assert!(omega(&f, 0.3, &fam).unwrap() > 0.0);
    }

    #[test]
    fn gamma_states() {
        let d = square();
        let c = sample(&TestFunctionSpec::Constant { value: 2.0 }, &d, 1.0 / 32.0).unwrap();
        let curve = gamma_curve(&c, &d, &[0.0, 0.5, 5.0], 0.25).unwrap();
        assert!((curve[0].1.value().unwrap() - 2.0).abs() < 1e-12);
        assert!((curve[1].1.value().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(curve[2].1, Measure::NotEvaluable);
        assert!(gamma(&c, &d, -1.0, 0.25).is_err());
    }

    #[test]
    fn compact_support_vanishes_far_out() {
        let d = build_domain(&DomainSpec::new(DomainKind::HalfPlane { offset: 0.0 })).unwrap();
        let f = sample(
            &TestFunctionSpec::Cutoff { center: [-1.0, 0.0], inner: 0.25, outer: 0.5 },
            &d,
            1.0 / 32.0,
        )
        .unwrap();
        let g = gamma(&f, &d, 1.6, 0.25).unwrap();
        assert_eq!(g, Measure::Value(0.0));
        let inf = vanishing_at_infinity_norm(&f, &d, 1.6, 0.25).unwrap();
        assert_eq!(inf, Measure::Value(0.0));
        assert!(gamma(&f, &d, 0.0, 0.25).unwrap().value().unwrap() > 0.0);
    }

    #[test]
    fn boundary_norm_of_interior_bump() {
        let d = square();
        let f = sample(
            &TestFunctionSpec::Cutoff { center: [0.5, 0.5], inner: 0.1, outer: 0.2 },
            &d,
            1.0 / 64.0,
        )
        .unwrap();
        assert_eq!(vanishing_at_boundary_norm(&f, &d, 0.2, 0.125).unwrap(), Measure::Value(0.0));
        let c = sample(&TestFunctionSpec::Constant { value: 1.5 }, &d, 1.0 / 64.0).unwrap();
        let curve = vanishing_at_boundary_curve(&c, &d, &[0.5, 1.0], 0.125).unwrap();
        for (_, m) in curve {
            assert!((m.value().unwrap() - 1.5).abs() < 1e-12);
        }
        assert_eq!(vanishing_at_boundary_norm(&c, &d, 0.01, 0.125).unwrap(), Measure::NotEvaluable);
    }

    #[test]
    fn probe_of_constant() {
        let d = square();
        let c = sample(&TestFunctionSpec::Constant { value: 1.0 }, &d, 1.0 / 64.0).unwrap();
        let p = log_estimate_probe(&c, &d, 0.5).unwrap();
        assert!(!p.points.is_empty());
        for pt in &p.points {
            assert_relative_eq!(pt.ratio, 1.0 / (1.0 + (0.5 / pt.ell).ln()), max_relative = 1e-12);
            assert!(pt.ratio <= 1.0 + 1e-12);
        }
        let zero = sample(&TestFunctionSpec::Constant { value: 0.0 }, &d, 1.0 / 64.0).unwrap();
        assert!(log_estimate_probe(&zero, &d, 0.5).is_err());
    }

    #[test]
    fn lambda_formula() {
        let v = lambda_eps_delta(1.0, 640.0 * (1.0 + 2f64.sqrt()), 2).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-15);
        let a = lambda_eps_delta(0.5, 1.0, 2).unwrap();
        assert_relative_eq!(a, 0.25 / (640.0 * (1.0 + 2f64.sqrt() * 0.5)), max_relative = 1e-15);
        assert_relative_eq!(lambda_eps_delta(0.5, 3.0, 2).unwrap(), 3.0 * a, max_relative = 1e-15);
        assert!(lambda_eps_delta(0.0, 1.0, 2).is_err());
        assert!(lambda_eps_delta(1.5, 1.0, 2).is_err());
        assert!(lambda_eps_delta(0.5, -1.0, 2).is_err());
        assert!(lambda_eps_delta(0.5, 1.0, 0).is_err());
    }

    #[test]
    fn lambda_range_checked() {
        let d = square();
        let f = sample(&TestFunctionSpec::Constant { value: 1.0 }, &d, 1.0 / 32.0).unwrap();
        assert!(bmo_norm(&f, &d, 0.1).is_err());
        assert!(bmo_norm(&f, &d, 3.0).is_err());
    }
}
