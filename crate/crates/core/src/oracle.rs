//! Exhaustive ground truth: every grid-aligned cube with at least four cells
//! per side that lies inside the domain. The sampled families are subsets of
//! this universe, so their suprema can only be smaller.
//!
//! Mean oscillations are evaluated directly. For the large-cube averages a
//! summed-area table screens the candidates and the survivors are evaluated
//! with the same compensated sums as the sampled functionals, so the subset
//! inequality holds bit for bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, DomainModel};
use crate::gridfield::{CellBlock, Grid, GridFunction, MIN_CELLS_PER_AXIS};
use crate::numeric::ArgMax;
use crate::oscillation::{domain_norm_families, enumerate_cubes, norm_on, omega, snap_up, AverageMode, CubeCertifier, NormSettings};

/// Default budget on the number of enumerated cubes.
pub const DEFAULT_MAX_CUBES: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    /// The local bmo norm at scale `lambda`.
    BmoNorm { lambda: f64, #[serde(default)] mode: AverageMode },
    /// `ω(f, t)`.
    Omega { t: f64 },
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::BmoNorm { .. } => "bmo-norm",
            Functional::Omega { .. } => "omega",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub functional: Functional,
    pub h: f64,
    pub oracle: f64,
    pub sampled: f64,
    /// `oracle / sampled` (1 when both vanish).
    pub ratio: f64,
    pub oracle_cubes: u64,
    pub sampled_cubes: u64,
    pub oracle_argmax: Option<Cube<2>>,
}

/// Cell-index bounding box of the masked cells.
fn mask_box(f: &GridFunction) -> Option<(usize, usize, usize, usize)> {
    let g = f.grid();
    let mut b: Option<(usize, usize, usize, usize)> = None;
    for (k, &m) in f.mask().iter().enumerate() {
        if m {
            let (i, j) = (k % g.nx, k / g.nx);
            b = Some(match b {
                None => (i, i + 1, j, j + 1),
                Some((a, c, e, h)) => (a.min(i), c.max(i + 1), e.min(j), h.max(j + 1)),
            });
        }
    }
    b
}

/// Enumerates the grid-aligned cubes of `m` cells per side, `m ∈ sides`, in the box.
struct Universe<'a> {
    grid: Grid,
    cert: CubeCertifier<'a>,
    mask_sat: Vec<u32>,
    bbox: (usize, usize, usize, usize),
}

impl<'a> Universe<'a> {
    fn new(f: &GridFunction, d: &'a DomainModel) -> Result<Self> {
        let grid = *f.grid();
        let bbox = mask_box(f).ok_or_else(|| Error::EmptyFamily("the domain covers no cell".into()))?;
        let stride = grid.nx + 1;
        let mut mask_sat = vec![0u32; stride * (grid.ny + 1)];
        for j in 0..grid.ny {
            let mut row = 0;
            for i in 0..grid.nx {
                row += f.mask()[grid.index(i, j)] as u32;
                mask_sat[(j + 1) * stride + i + 1] = mask_sat[j * stride + i + 1] + row;
            }
        }
        Ok(Universe {
            grid,
            cert: CubeCertifier::new(d, grid),
            mask_sat,
            bbox,
        })
    }

    fn count(&self, m: usize) -> u64 {
        let (i0, i1, j0, j1) = self.bbox;
        let (w, h) = (i1 - i0, j1 - j0);
        if m > w || m > h {
            0
        } else {
            ((w - m + 1) * (h - m + 1)) as u64
        }
    }

    fn sides(&self, lo: usize, hi: usize) -> std::ops::RangeInclusive<usize> {
        let (i0, i1, j0, j1) = self.bbox;
        lo.max(MIN_CELLS_PER_AXIS)..=hi.min(i1 - i0).min(j1 - j0)
    }

    fn full(&self, b: &CellBlock) -> bool {
        let s = self.grid.nx + 1;
        let sat = &self.mask_sat;
        let n = sat[b.rows.end * s + b.cols.end] + sat[b.rows.start * s + b.cols.start]
            - sat[b.rows.start * s + b.cols.end]
            - sat[b.rows.end * s + b.cols.start];
        n as usize == b.count()
    }

    fn cube(&self, b: &CellBlock) -> Cube<2> {
        let g = &self.grid;
        Cube::new(
            [g.origin[0] + b.cols.start as f64 * g.h, g.origin[1] + b.rows.start as f64 * g.h],
            b.cols.len() as f64 * g.h,
        )
        .expect("positive side")
    }

    /// Blocks of side `m` inside the domain, in a fixed order.
    fn blocks(&self, m: usize) -> Vec<CellBlock> {
        let (i0, i1, j0, j1) = self.bbox;
        if m > i1 - i0 || m > j1 - j0 {
            return Vec::new();
        }
        (j0..=j1 - m)
            .into_par_iter()
            .flat_map_iter(|j| {
                (i0..=i1 - m).filter_map(move |i| {
                    let b = CellBlock { cols: i..i + m, rows: j..j + m };
                    (self.full(&b) && self.cert.inside(&self.cube(&b))).then_some(b)
                })
            })
            .collect()
    }
}

fn check_budget(u: &Universe, sides: &std::ops::RangeInclusive<usize>, max_cubes: u64) -> Result<u64> {
    let total: u64 = sides.clone().map(|m| u.count(m)).sum();
    if total > max_cubes {
        let factor = (total as f64 / max_cubes as f64).cbrt();
        return Err(Error::resolution(
            format!("{total} grid-aligned cubes exceed the budget of {max_cubes}"),
            Some(u.grid.h * factor.max(2.0)),
        ));
    }
    Ok(total)
}

/// Largest mean oscillation over all blocks with side in `sides`.
fn sup_oscillation(f: &GridFunction, u: &Universe, sides: std::ops::RangeInclusive<usize>) -> (ArgMax, Vec<CellBlock>) {
    let blocks: Vec<CellBlock> = sides.flat_map(|m| u.blocks(m)).collect();
    let best = blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| ArgMax {
            value: f.block_deviation(b, f.block_mean(b)),
            index: i,
        })
        .reduce(|| ArgMax::EMPTY, ArgMax::merge);
    (best, blocks)
}

/// Largest `|f|_Q` over all blocks with side in `sides`: screened with a
/// summed-area table, then evaluated exactly on the candidates.
fn sup_average(f: &GridFunction, u: &Universe, sides: std::ops::RangeInclusive<usize>) -> (ArgMax, Vec<CellBlock>) {
    let g = f.grid();
    let stride = g.nx + 1;
    let mut sat = vec![0.0f64; stride * (g.ny + 1)];
    for j in 0..g.ny {
        let mut row = 0.0;
        for i in 0..g.nx {
            row += f.values()[g.index(i, j)].abs();
            sat[(j + 1) * stride + i + 1] = sat[j * stride + i + 1] + row;
        }
    }
    let approx = |b: &CellBlock| {
        (sat[b.rows.end * stride + b.cols.end] + sat[b.rows.start * stride + b.cols.start]
            - sat[b.rows.start * stride + b.cols.end]
            - sat[b.rows.end * stride + b.cols.start])
            / b.count() as f64
    };
    let blocks: Vec<CellBlock> = sides.flat_map(|m| u.blocks(m)).collect();
    let screened: Vec<f64> = blocks.par_iter().map(approx).collect();
    let top = screened.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Rounding in the table is far below this margin for any grid that fits in memory.
    let tol = 1e-9 * (1.0 + f.sup_norm());
    let best = screened
        .par_iter()
        .enumerate()
        .filter(|(_, &v)| v >= top - 2.0 * tol)
        .map(|(i, _)| ArgMax {
            value: f.block_abs_mean(&blocks[i]),
            index: i,
        })
        .reduce(|| ArgMax::EMPTY, ArgMax::merge);
    (best, blocks)
}

/// Evaluates the functional over the exhaustive family and over the sampled one.
pub fn exhaustive_sup(f: &GridFunction, d: &DomainModel, functional: Functional, max_cubes: u64) -> Result<OracleReport> {
    let u = Universe::new(f, d)?;
    let h = f.grid().h;
    match functional {
        Functional::BmoNorm { lambda, mode } => {
            let settings = NormSettings { mode, ..NormSettings::default() };
            let fams = domain_norm_families(d, f.grid(), lambda, settings)?;
            let sampled = norm_on(f, &fams)?;
            let top = (snap_up(f.grid(), lambda) / h).round() as usize;
            let small = u.sides(0, top - 1);
            let large = match mode {
                AverageMode::AtLeast => u.sides(top, usize::MAX),
                AverageMode::Exactly => u.sides(top, top),
            };
            check_budget(&u, &(*small.start()..=*large.end()), max_cubes)?;
            let (osc, small_blocks) = sup_oscillation(f, &u, small);
            let (avg, large_blocks) = sup_average(f, &u, large);
            if osc.is_empty() || avg.is_empty() {
                return Err(Error::EmptyFamily("exhaustive family has no small or no large cube".into()));
            }
            let oracle = osc.value + avg.value;
            Ok(OracleReport {
                functional,
                h,
                oracle,
                sampled: sampled.total,
                ratio: ratio(oracle, sampled.total),
                oracle_cubes: (small_blocks.len() + large_blocks.len()) as u64,
                sampled_cubes: (fams.small.len() + fams.large.len()) as u64,
                oracle_argmax: Some(u.cube(&small_blocks[osc.index])),
            })
        }
        Functional::Omega { t } => {
            let fam = enumerate_cubes(d, MIN_CELLS_PER_AXIS as f64 * h, t * (1.0 - 1e-12), 4)?;
            let sampled = omega(f, t, &fam)?;
            let top = (t / h - 1e-9).ceil() as usize;
            let sides = u.sides(0, top - 1);
            check_budget(&u, &sides, max_cubes)?;
            let (osc, blocks) = sup_oscillation(f, &u, sides);
            if osc.is_empty() {
                return Err(Error::EmptyFamily(format!("no grid-aligned cube of side below {t}")));
            }
            Ok(OracleReport {
                functional,
                h,
                oracle: osc.value,
                sampled,
                ratio: ratio(osc.value, sampled),
                oracle_cubes: blocks.len() as u64,
                sampled_cubes: fam.len() as u64,
                oracle_argmax: Some(u.cube(&blocks[osc.index])),
            })
        }
    }
}

fn ratio(oracle: f64, sampled: f64) -> f64 {
    if sampled == 0.0 {
        if oracle == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        oracle / sampled
    }
}
