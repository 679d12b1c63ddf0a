//! Extension of grid functions from the domain to the whole window.
//!
//! The step extension copies `f` on `Ω`, puts `f_{Q*}` on every small
//! exterior Whitney cube `Q` with a matched interior cube `Q*`, and 0 on large
//! or unmatched cubes. The smoothed extension replaces each exterior value by
//! its average over the ball `B(x, c_n·d(x))`.
//!
//! [`Extender`] holds everything that depends only on the geometry, so the
//! same decompositions, matching and radii serve many functions.

mod lipschitz;

use std::collections::VecDeque;

use serde::Serialize;

pub use lipschitz::{lipschitz_estimate, LipschitzEstimate};

use crate::error::{Error, Result};
use crate::geometry::{Cube, DomainModel};
use crate::gridfield::{Grid, GridFunction};
use crate::numeric::CompensatedSum;
use crate::oscillation::{lambda_eps_delta, norm_families, norm_on, NormReport, NormSettings};
use crate::whitney::{
    default_finest_level, match_cubes, whitney_decompose_auto, CubeMatching, MatchOptions, WhitneyDecomposition,
    DEFAULT_RADIUS_FACTOR,
};

/// `1/(16√2)`: small enough for the averaging ball to stay within the
/// Whitney cube of its centre and the cubes adjacent to it.
pub const DEFAULT_CN: f64 = 0.044_194_173_824_159_22;

/// Per-cell flags of an extension.
pub mod flags {
    /// Centre on or within `h` of the boundary, or in the Whitney residue.
    /// Such cells are excluded from norm suprema.
    pub const BOUNDARY: u8 = 1;
    /// Cell of a small exterior cube without a matching cube; set to 0.
    pub const UNMATCHED: u8 = 2;
    /// Exterior cell with `R(x) < 2h`, left at its step value.
    pub const UNAVERAGED: u8 = 4;
}

const NO_CUBE: u32 = u32::MAX;

/// Levels tried beyond the first finest level before giving up on the residue.
const EXTRA_LEVELS: i32 = 4;

/// Largest fraction of exterior cells that may stay unaveraged.
const MAX_UNAVERAGED_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionOptions {
    pub lambda: f64,
    pub c_n: f64,
    pub radius_factor: f64,
    /// `(ε, δ)` the domain is known to satisfy; a `λ` above `λ_{ε,δ}` is logged.
    pub nominal_eps_delta: Option<(f64, f64)>,
    /// Halvings of `c_n` allowed when the neighbourhood check fails.
    pub max_halvings: u32,
}

impl ExtensionOptions {
    pub fn new(lambda: f64) -> Self {
        ExtensionOptions {
            lambda,
            c_n: DEFAULT_CN,
            radius_factor: DEFAULT_RADIUS_FACTOR,
            nominal_eps_delta: None,
            max_halvings: 6,
        }
    }
}

/// Geometry of an extension: Whitney decompositions, matching, cell
/// assignment and averaging radii.
pub struct Extender {
    grid: Grid,
    mask: Vec<bool>,
    pub lambda: f64,
    pub exterior: WhitneyDecomposition,
    pub interior: WhitneyDecomposition,
    pub matching: CubeMatching,
    /// Exterior cube holding each cell centre.
    cube_of: Vec<u32>,
    /// Cells without a cube copy the value of their nearest cube cell, in this order.
    inherit: Vec<(u32, u32)>,
    flags: Vec<u8>,
    /// `c_n·d(x)` for cells that get averaged, 0 otherwise.
    radius: Vec<f64>,
    pub c_n: f64,
    pub c_n_halvings: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionSummary {
    pub lambda: f64,
    pub c_n: f64,
    pub c_n_halvings: u32,
    pub exterior_cubes: usize,
    pub interior_cubes: usize,
    pub matched: usize,
    pub unmatched: Vec<Cube<2>>,
    pub zero_cubes: usize,
    pub boundary_cells: usize,
    pub unaveraged_cells: usize,
    /// Realised `sup dist(Q, Q*)/ℓ(Q)` over matched pairs.
    pub distance_constant: f64,
    /// Matched cubes with side below `λ/(40√2)` and below `λ/4`.
    pub matched_below_lambda_over_40_sqrt_n: usize,
    pub matched_below_lambda_over_4: usize,
}

/// Result of applying an [`Extender`] to one function.
#[derive(Clone, Debug)]
pub struct ExtensionResult {
    pub lambda: f64,
    pub c_n: f64,
    /// `T_λ f` over the full window.
    pub step: GridFunction,
    /// `T̃_λ f` over the full window (equal to `step` when only the step stage ran).
    pub extended: GridFunction,
    pub flags: Vec<u8>,
    /// Exterior cube ids on which the extension vanishes identically.
    pub zero_region: Vec<u32>,
}

impl Extender {
    pub fn new(d: &DomainModel, grid: Grid, opts: &ExtensionOptions) -> Result<Extender> {
        if !(opts.lambda > 0.0 && opts.lambda.is_finite()) {
            return Err(Error::validation("lambda", "must be positive"));
        }
        if !(opts.c_n > 0.0 && opts.c_n < 1.0) {
            return Err(Error::validation("c_n", "must lie in (0, 1)"));
        }
        if (grid.window().side() - d.window().side()).abs() > 1e-9 || grid.origin != d.window().corner() {
            return Err(Error::validation("grid", "grid must cover the domain window"));
        }
        if let Some((eps, delta)) = opts.nominal_eps_delta {
            let bound = lambda_eps_delta(eps, delta, 2)?;
            if opts.lambda > bound {
                log::warn!(
                    "λ = {} exceeds λ_(ε,δ) = {bound:.3e} for ε = {eps}, δ = {delta}; boundedness is not guaranteed",
                    opts.lambda
                );
            }
        }
        let start = default_finest_level(grid.h);
        let exterior = whitney_decompose_auto(d, crate::geometry::OpenSet::Exterior, start, start + EXTRA_LEVELS)?;
        let interior = whitney_decompose_auto(d, crate::geometry::OpenSet::Interior, start, start + EXTRA_LEVELS)?;
        let matching = match_cubes(
            &exterior,
            &interior,
            MatchOptions {
                lambda: opts.lambda,
                radius_factor: opts.radius_factor,
            },
        )?;

        let n = grid.len();
        let mask = GridFunction::domain_mask(&grid, d);
        let mut cube_of = vec![NO_CUBE; n];
        let mut flags = vec![0u8; n];
        for id in 0..exterior.len() {
            let (cols, rows) = grid
                .cube_cells(&exterior.cube(id))
                .expect("Whitney cubes lie in the window");
            for j in rows {
                for i in cols.clone() {
                    cube_of[grid.index(i, j)] = id as u32;
                }
            }
        }
        for &q in &matching.unmatched {
            let (cols, rows) = grid.cube_cells(&exterior.cube(q as usize)).unwrap();
            for j in rows {
                for i in cols.clone() {
                    flags[grid.index(i, j)] |= flags::UNMATCHED;
                }
            }
        }

        // Distance of every exterior cell centre, and the boundary flag.
        let mut dist = vec![0.0; n];
        for k in 0..n {
            if mask[k] {
                continue;
            }
            let c = grid.center_of(k);
            dist[k] = d.distance(&c);
            if cube_of[k] == NO_CUBE || dist[k] < grid.h || d.in_closure(&c) {
                flags[k] |= flags::BOUNDARY;
            }
        }
        let inherit = nearest_cube_cells(&grid, &mask, &cube_of);

        let mut ext = Extender {
            grid,
            mask,
            lambda: opts.lambda,
            exterior,
            interior,
            matching,
            cube_of,
            inherit,
            flags,
            radius: vec![0.0; n],
            c_n: opts.c_n,
            c_n_halvings: 0,
        };
        loop {
            let violations = ext.set_radii(&dist);
            if violations == 0 {
                break;
            }
            if ext.c_n_halvings == opts.max_halvings {
                return Err(Error::validation(
                    "c_n",
                    format!("averaging balls still leave the neighbouring Whitney cubes at c_n = {}", ext.c_n),
                ));
            }
            log::info!("{violations} averaging balls leave the neighbouring cubes; halving c_n = {}", ext.c_n);
            ext.c_n /= 2.0;
            ext.c_n_halvings += 1;
        }

        Ok(ext)
    }

    /// Smoothing is refused when almost no exterior cell gets a ball of radius at least `2h`.
    fn check_smoothing_resolution(&self) -> Result<()> {
        let exterior_cells = self.mask.iter().filter(|m| !**m).count();
        let unaveraged = self.flags.iter().filter(|f| **f & flags::UNAVERAGED != 0).count();
        if exterior_cells > 0 && unaveraged as f64 > MAX_UNAVERAGED_FRACTION * exterior_cells as f64 {
            return Err(Error::resolution(
                format!(
                    "{unaveraged} of {exterior_cells} exterior cells have averaging radius below 2h at c_n = {}",
                    self.c_n
                ),
                Some(self.grid.h / 2.0),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn flags(&self) -> &[u8] {
        &self.flags
    }

    /// Sets averaging radii for the current `c_n` and counts balls that
    /// reach beyond the cube of their centre and its neighbours.
    fn set_radii(&mut self, dist: &[f64]) -> usize {
        let h = self.grid.h;
        let mut violations = 0;
        for k in 0..self.grid.len() {
            self.flags[k] &= !flags::UNAVERAGED;
            self.radius[k] = 0.0;
            if self.mask[k] || self.flags[k] & flags::BOUNDARY != 0 {
                continue;
            }
            let r = self.c_n * dist[k];
            if r < 2.0 * h {
                self.flags[k] |= flags::UNAVERAGED;
                continue;
            }
            self.radius[k] = r;
            if !self.ball_in_neighbourhood(k, r) {
                violations += 1;
            }
        }
        violations
    }

    /// Whether `B(x, r)` stays in the cube containing `x` and its neighbours:
    /// exact when the ball is inside the cube, otherwise checked at 16
    /// points of the circle.
    fn ball_in_neighbourhood(&self, k: usize, r: f64) -> bool {
        let id = self.cube_of[k] as usize;
        let q = self.exterior.cube(id);
        let x = self.grid.center_of(k);
        let inner = (0..2)
            .map(|a| (x[a] - q.lo(a)).min(q.hi(a) - x[a]))
            .fold(f64::INFINITY, f64::min);
        if r <= inner {
            return true;
        }
        let level = self.exterior.dyadic(id).level;
        let window = self.grid.window();
        (0..16).all(|s| {
            let t = s as f64 * std::f64::consts::TAU / 16.0;
            let p = [x[0] + r * t.cos(), x[1] + r * t.sin()];
            if !window.contains_point(&p) {
                return true;
            }
            match self.exterior.locate_near(&p, level) {
                Some(other) => other == id || self.exterior.neighbors(id).contains(&(other as u32)),
                None => false,
            }
        })
    }

    fn check_input(&self, f: &GridFunction) -> Result<()> {
        if f.grid() != &self.grid || f.mask() != self.mask.as_slice() {
            return Err(Error::validation(
                "function",
                "must be sampled on the extender's grid with the domain mask",
            ));
        }
        Ok(())
    }

    /// `T_λ f`, and the exterior cubes where it vanishes.
    fn step_values(&self, f: &GridFunction) -> (Vec<f64>, Vec<u32>) {
        let mut cube_value = vec![0.0; self.exterior.len()];
        for &(q, s) in &self.matching.pairs {
            cube_value[q as usize] = interior_average(f, &self.interior.cube(s as usize));
        }
        let values: Vec<f64> = (0..self.grid.len())
            .map(|k| {
                if self.mask[k] {
                    f.values()[k]
                } else if self.cube_of[k] != NO_CUBE {
                    cube_value[self.cube_of[k] as usize]
                } else {
                    0.0
                }
            })
            .collect();
        let mut values = values;
        for &(cell, src) in &self.inherit {
            values[cell as usize] = values[src as usize];
        }
        let zero = (0..self.exterior.len() as u32)
            .filter(|&q| cube_value[q as usize] == 0.0)
            .collect();
        (values, zero)
    }

    /// The step extension `T_λ f`.
    pub fn step(&self, f: &GridFunction) -> Result<ExtensionResult> {
        self.check_input(f)?;
        let (values, zero_region) = self.step_values(f);
        let step = GridFunction::new(self.grid, values, vec![true; self.grid.len()])?;
        Ok(ExtensionResult {
            lambda: self.lambda,
            c_n: self.c_n,
            extended: step.clone(),
            step,
            flags: self.flags.clone(),
            zero_region,
        })
    }

    /// The smoothed extension `T̃_λ f`: `f` on `Ω`, ball averages of `T_λ f` on the exterior.
    pub fn smooth(&self, f: &GridFunction) -> Result<ExtensionResult> {
        self.check_smoothing_resolution()?;
        let mut r = self.step(f)?;
        let step = r.step.values();
        let g = &self.grid;
        let mut out = step.to_vec();
        for (k, v) in out.iter_mut().enumerate() {
            let radius = self.radius[k];
            if radius > 0.0 {
                *v = ball_average(g, step, &g.center_of(k), radius);
            }
        }
        r.extended = GridFunction::new(*g, out, vec![true; g.len()])?;
        Ok(r)
    }

    pub fn summary(&self) -> ExtensionSummary {
        let sides: Vec<f64> = self
            .matching
            .pairs
            .iter()
            .map(|&(q, _)| self.exterior.cube(q as usize).side())
            .collect();
        let count_flag = |bit: u8| self.flags.iter().filter(|f| **f & bit != 0).count();
        ExtensionSummary {
            lambda: self.lambda,
            c_n: self.c_n,
            c_n_halvings: self.c_n_halvings,
            exterior_cubes: self.exterior.len(),
            interior_cubes: self.interior.len(),
            matched: self.matching.pairs.len(),
            unmatched: self
                .matching
                .unmatched
                .iter()
                .map(|&q| self.exterior.cube(q as usize))
                .collect(),
            zero_cubes: self.exterior.len() - self.matching.pairs.len(),
            boundary_cells: count_flag(flags::BOUNDARY),
            unaveraged_cells: count_flag(flags::UNAVERAGED),
            distance_constant: self.matching.distance_constant,
            matched_below_lambda_over_40_sqrt_n: sides
                .iter()
                .filter(|&&s| s < self.lambda / (40.0 * std::f64::consts::SQRT_2))
                .count(),
            matched_below_lambda_over_4: sides.iter().filter(|&&s| s < self.lambda / 4.0).count(),
        }
    }
}

/// `A(φ)(x)`: mean of `phi` over cells with centre in the closed ball
/// `B(x, r)`, clamped to the range of those values. Cells outside the grid are ignored.
pub fn ball_average(grid: &Grid, phi: &[f64], x: &[f64; 2], r: f64) -> f64 {
    let h = grid.h;
    let rows = grid.span(x[1] - r, x[1] + r + 1e-12 * h, 1);
    let mut sum = CompensatedSum::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut count = 0usize;
    for j in rows.start.max(0)..rows.end.min(grid.ny as isize) {
        let y = grid.origin[1] + (j as f64 + 0.5) * h;
        let dy = y - x[1];
        let w2 = r * r - dy * dy;
        if w2 < 0.0 {
            continue;
        }
        let w = w2.sqrt();
        let cols = grid.span(x[0] - w, x[0] + w + 1e-12 * h, 0);
        let row = j as usize * grid.nx;
        for i in cols.start.max(0)..cols.end.min(grid.nx as isize) {
            let v = phi[row + i as usize];
            sum.add(v);
            lo = lo.min(v);
            hi = hi.max(v);
            count += 1;
        }
    }
    if count == 0 {
        return f64::NAN;
    }
    (sum.total() / count as f64).clamp(lo, hi)
}

/// `A(φ)(x)` at an arbitrary exterior point, with `R(x) = c_n·d(x)`;
/// returns the cell value unaveraged (and `false`) when `R(x) < 2h`.
pub fn average_at(phi: &GridFunction, x: &[f64; 2], d: &DomainModel, c_n: f64) -> Result<(f64, bool)> {
    let grid = phi.grid();
    let r = c_n * d.distance(x);
    if r < 2.0 * grid.h {
        let v = phi
            .value_at(x)
            .ok_or_else(|| Error::validation("x", "point outside the grid"))?;
        return Ok((v, false));
    }
    Ok((ball_average(grid, phi.values(), x, r), true))
}

/// `f_Q` for an interior cube; cubes holding no cell centre take the
/// nearest masked cell to their centre.
fn interior_average(f: &GridFunction, q: &Cube<2>) -> f64 {
    let g = f.grid();
    if let Some((cols, rows)) = g.cube_cells(q) {
        if !cols.is_empty() && !rows.is_empty() {
            let block = crate::gridfield::CellBlock { cols, rows };
            return f.block_mean(&block);
        }
    }
    let c = q.center();
    let (ci, cj) = g.cell_of(&c).expect("interior cubes lie in the window");
    let mut best: Option<(f64, usize)> = None;
    for j in cj.saturating_sub(1)..(cj + 2).min(g.ny) {
        for i in ci.saturating_sub(1)..(ci + 2).min(g.nx) {
            let k = g.index(i, j);
            if f.mask()[k] {
                let dist = crate::geometry::dist(&g.center(i, j), &c);
                if best.is_none_or(|b| dist < b.0) {
                    best = Some((dist, k));
                }
            }
        }
    }
    best.map_or(0.0, |(_, k)| f.values()[k])
}

/// Multi-source breadth-first search from the cube cells over exterior cells
/// without a cube; each reached cell records the cube cell it copies.
fn nearest_cube_cells(grid: &Grid, mask: &[bool], cube_of: &[u32]) -> Vec<(u32, u32)> {
    let n = grid.len();
    let mut source = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for k in 0..n {
        if !mask[k] && cube_of[k] != NO_CUBE {
            source[k] = k as u32;
            queue.push_back(k);
        }
    }
    let mut order = Vec::new();
    while let Some(k) = queue.pop_front() {
        let (i, j) = (k % grid.nx, k / grid.nx);
        let mut visit = |ni: usize, nj: usize| {
            let m = grid.index(ni, nj);
            if !mask[m] && source[m] == u32::MAX {
                source[m] = source[k];
                order.push((m as u32, source[k]));
                queue.push_back(m);
            }
        };
        if i > 0 {
            visit(i - 1, j);
        }
        if i + 1 < grid.nx {
            visit(i + 1, j);
        }
        if j > 0 {
            visit(i, j - 1);
        }
        if j + 1 < grid.ny {
            visit(i, j + 1);
        }
    }
    order
}

/// Step extension of `f` with a fresh [`Extender`].
pub fn extend_step(f: &GridFunction, d: &DomainModel, lambda: f64) -> Result<ExtensionResult> {
    Extender::new(d, *f.grid(), &ExtensionOptions::new(lambda))?.step(f)
}

/// Smoothed extension of `f` with a fresh [`Extender`].
pub fn extend_smooth(f: &GridFunction, d: &DomainModel, lambda: f64, c_n: f64) -> Result<ExtensionResult> {
    let opts = ExtensionOptions {
        c_n,
        ..ExtensionOptions::new(lambda)
    };
    Extender::new(d, *f.grid(), &opts)?.smooth(f)
}

impl ExtensionResult {
    /// Local bmo norm of the extension over the window, on cubes free of boundary cells.
    pub fn norm(&self, lambda: f64, settings: NormSettings) -> Result<NormReport> {
        let grid = *self.extended.grid();
        let flagged = cell_sat(&grid, |k| self.flags[k] & flags::BOUNDARY != 0);
        let fams = norm_families(&grid, lambda, settings, |q| match grid.cube_cells(q) {
            Some((cols, rows)) if !cols.is_empty() => sat_count(&grid, &flagged, &cols, &rows) == 0,
            _ => false,
        })?;
        norm_on(&self.extended, &fams)
    }

    /// Smallest `R′` with the extension vanishing outside `B(0, R′)`, or
    /// `None` if it vanishes everywhere.
    pub fn support_radius(&self) -> Option<f64> {
        support_radius(&self.extended)
    }
}

/// Radius of the smallest origin-centred ball holding every cell where `f ≠ 0`.
pub fn support_radius(f: &GridFunction) -> Option<f64> {
    let g = f.grid();
    let half_diag = 0.5 * std::f64::consts::SQRT_2 * g.h;
    (0..g.len())
        .filter(|&k| f.mask()[k] && f.values()[k] != 0.0)
        .map(|k| crate::geometry::norm(&g.center_of(k)) + half_diag)
        .reduce(f64::max)
}

fn cell_sat(grid: &Grid, pred: impl Fn(usize) -> bool) -> Vec<u32> {
    let stride = grid.nx + 1;
    let mut sat = vec![0u32; stride * (grid.ny + 1)];
    for j in 0..grid.ny {
        let mut row = 0;
        for i in 0..grid.nx {
            row += pred(grid.index(i, j)) as u32;
            sat[(j + 1) * stride + i + 1] = sat[j * stride + i + 1] + row;
        }
    }
    sat
}

fn sat_count(grid: &Grid, sat: &[u32], cols: &std::ops::Range<usize>, rows: &std::ops::Range<usize>) -> u32 {
    let s = grid.nx + 1;
    sat[rows.end * s + cols.end] + sat[rows.start * s + cols.start] - sat[rows.start * s + cols.end] - sat[rows.end * s + cols.start]
}
