//! Functions sampled at cell centres of a uniform grid over the window.

mod io;
mod testfn;

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::{Cube, DomainModel, Point};
use crate::numeric::CompensatedSum;

pub use io::{read_grid, write_grid, MAGIC};
pub use testfn::{sample, TestFunctionSpec};

/// Fewest cells a cube must cover on each axis before its mean is trusted.
pub const MIN_CELLS_PER_AXIS: usize = 4;

/// Uniform grid of square cells covering a window; cell `(i, j)` has centre
/// `origin + ((i + 1/2) h, (j + 1/2) h)` and storage index `j * nx + i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// Grid of spacing `h` over `window`; `h` must divide the side.
    pub fn for_window(window: &Cube<2>, h: f64) -> Result<Grid> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::validation("resolution", format!("spacing must be positive, got {h}")));
        }
        let n = window.side() / h;
        if (n - n.round()).abs() > 1e-6 {
            return Err(Error::validation(
                "resolution",
                format!("spacing {h} does not divide the window side {}", window.side()),
            ));
        }
        let n = n.round() as usize;
        if n < 8 {
            return Err(Error::resolution(
                format!("only {n} cells across the window, at least 8 needed"),
                Some(window.side() / 8.0),
            ));
        }
        Ok(Grid {
            origin: window.corner(),
            h,
            nx: n,
            ny: n,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    #[inline]
    pub fn center_of(&self, k: usize) -> Point {
        self.center(k % self.nx, k / self.nx)
    }

    pub fn window(&self) -> Cube<2> {
        Cube::new_unchecked(self.origin, self.h * self.nx as f64)
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: &Point) -> Option<(usize, usize)> {
        let i = ((p[0] - self.origin[0]) / self.h).floor();
        let j = ((p[1] - self.origin[1]) / self.h).floor();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny).then(|| (i as usize, j as usize))
    }

    /// Cells whose centres lie in `[lo, hi)` along `axis`.
    #[inline]
    pub fn span(&self, lo: f64, hi: f64, axis: usize) -> Range<isize> {
        let o = self.origin[axis];
        let a = ((lo - o) / self.h - 0.5).ceil() as isize;
        let b = ((hi - o) / self.h - 0.5).ceil() as isize;
        a..b
    }

    /// Cells with centres in the half-open cube, or `None` if that block leaves the grid.
    pub fn cube_cells(&self, q: &Cube<2>) -> Option<(Range<usize>, Range<usize>)> {
        let x = self.span(q.lo(0), q.hi(0), 0);
        let y = self.span(q.lo(1), q.hi(1), 1);
        if x.start < 0 || y.start < 0 || x.end > self.nx as isize || y.end > self.ny as isize {
            return None;
        }
        Some((x.start as usize..x.end.max(x.start) as usize, y.start as usize..y.end.max(y.start) as usize))
    }
}

/// A function sampled on a grid, with a mask of the cells whose centre lies
/// in the domain. Values of unmasked cells are kept at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    mask: Vec<bool>,
}

/// Cells of a cube: column range and row range.
#[derive(Clone, Debug)]
pub struct CellBlock {
    pub cols: Range<usize>,
    pub rows: Range<usize>,
}

impl CellBlock {
    pub fn count(&self) -> usize {
        self.cols.len() * self.rows.len()
    }
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::validation("values", "length does not match the grid"));
        }
        if let Some(k) = (0..values.len()).find(|&k| mask[k] && !values[k].is_finite()) {
            return Err(Error::validation("values", format!("non-finite value at masked cell {k}")));
        }
        Ok(GridFunction { grid, values, mask })
    }

    /// Evaluate `f` at the centre of every masked cell.
    pub fn from_fn(grid: Grid, mask: Vec<bool>, f: impl Fn(&Point) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| if mask[k] { f(&grid.center_of(k)) } else { 0.0 })
            .collect();
        GridFunction::new(grid, values, mask)
    }

    /// The mask of cell centres inside the domain.
    pub fn domain_mask(grid: &Grid, d: &DomainModel) -> Vec<bool> {
        (0..grid.len()).map(|k| d.inside(&grid.center_of(k))).collect()
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Value at the cell containing `p` if that cell is masked.
    pub fn value_at(&self, p: &Point) -> Option<f64> {
        let (i, j) = self.grid.cell_of(p)?;
        let k = self.grid.index(i, j);
        self.mask[k].then(|| self.values[k])
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Pointwise map over masked cells.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let values = self
            .values
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { f(v) } else { 0.0 })
            .collect();
        GridFunction {
            grid: self.grid,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Pointwise map that also sees the cell centre.
    pub fn map_with_point(&self, f: impl Fn(&Point, f64) -> f64) -> GridFunction {
        let values = (0..self.values.len())
            .map(|k| if self.mask[k] { f(&self.grid.center_of(k), self.values[k]) } else { 0.0 })
            .collect();
        GridFunction {
            grid: self.grid,
            values,
            mask: self.mask.clone(),
        }
    }

    /// Pointwise combination of two functions on the same grid and mask.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if self.grid != other.grid || self.mask != other.mask {
            return Err(Error::validation("function", "grids or masks differ"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .zip(&self.mask)
            .map(|((&a, &b), &m)| if m { f(a, b) } else { 0.0 })
            .collect();
        Ok(GridFunction {
            grid: self.grid,
            values,
            mask: self.mask.clone(),
        })
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    /// Maximum of |f| over masked cells.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .fold(0.0, |acc, (&v, _)| acc.max(v.abs()))
    }

    /// Checked cell block of a cube: inside the grid, at least `4×4` cells, all masked.
    pub fn cells(&self, q: &Cube<2>) -> Result<CellBlock> {
        let block = self.block_unmasked(q)?;
        for j in block.rows.clone() {
            let row = self.grid.index(0, j);
            if self.mask[row + block.cols.start..row + block.cols.end].iter().any(|m| !m) {
                return Err(Error::validation(
                    "cube",
                    format!("cube at {:?} with side {} leaves the domain mask", q.corner(), q.side()),
                ));
            }
        }
        Ok(block)
    }

    /// Cell block of a cube without the mask check.
    pub fn block_unmasked(&self, q: &Cube<2>) -> Result<CellBlock> {
        let (cols, rows) = self.grid.cube_cells(q).ok_or_else(|| {
            Error::validation("cube", format!("cube at {:?} leaves the grid window", q.corner()))
        })?;
        if cols.len() < MIN_CELLS_PER_AXIS || rows.len() < MIN_CELLS_PER_AXIS {
            return Err(Error::resolution(
                format!(
                    "cube of side {} covers {}x{} cells, at least {MIN_CELLS_PER_AXIS} per axis needed",
                    q.side(),
                    cols.len(),
                    rows.len()
                ),
                Some(q.side() / MIN_CELLS_PER_AXIS as f64),
            ));
        }
        Ok(CellBlock { cols, rows })
    }

    #[inline]
    fn fold_block(&self, b: &CellBlock, mut f: impl FnMut(f64)) {
        for j in b.rows.clone() {
            let row = self.grid.index(0, j);
            for &v in &self.values[row + b.cols.start..row + b.cols.end] {
                f(v);
            }
        }
    }

    /// Mean of the cell values of a block.
    pub fn block_mean(&self, b: &CellBlock) -> f64 {
        let mut s = CompensatedSum::default();
        self.fold_block(b, |v| s.add(v));
        s.total() / b.count() as f64
    }

    /// Mean of |f| over a block.
    pub fn block_abs_mean(&self, b: &CellBlock) -> f64 {
        let mut s = CompensatedSum::default();
        self.fold_block(b, |v| s.add(v.abs()));
        s.total() / b.count() as f64
    }

    /// Mean of |f − c| over a block.
    pub fn block_deviation(&self, b: &CellBlock, c: f64) -> f64 {
        let mut s = CompensatedSum::default();
        self.fold_block(b, |v| s.add((v - c).abs()));
        s.total() / b.count() as f64
    }

    /// Midpoint-rule mean over the cube.
    pub fn cube_mean(&self, q: &Cube<2>) -> Result<f64> {
        Ok(self.block_mean(&self.cells(q)?))
    }
}
