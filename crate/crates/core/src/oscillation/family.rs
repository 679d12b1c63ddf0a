use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{cube_inside, Cube, DomainModel, Point};
use crate::gridfield::Grid;

/// Cubes of one side on a translation lattice anchored at the family origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub side: f64,
    pub pitch: f64,
    pub positions: Vec<[u32; 2]>,
}

/// A finite family of axis-parallel cubes, stored layer by layer.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFamily {
    origin: Point,
    layers: Vec<Layer>,
    offsets: Vec<usize>,
    pub generator: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyStats {
    pub cubes: usize,
    pub layers: usize,
    pub min_side: f64,
    pub max_side: f64,
}

impl CubeFamily {
    pub fn from_layers(origin: Point, layers: Vec<Layer>, generator: impl Into<String>) -> Self {
        let layers: Vec<Layer> = layers.into_iter().filter(|l| !l.positions.is_empty()).collect();
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for l in &layers {
            acc += l.positions.len();
            offsets.push(acc);
        }
        CubeFamily {
            origin,
            layers,
            offsets,
            generator: generator.into(),
        }
    }

    pub fn empty(origin: Point) -> Self {
        CubeFamily::from_layers(origin, Vec::new(), "empty")
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    #[inline]
    pub fn cube(&self, i: usize) -> Cube<2> {
        let l = self.offsets.partition_point(|&o| o <= i) - 1;
        let layer = &self.layers[l];
        let [a, b] = layer.positions[i - self.offsets[l]];
        Cube::new_unchecked(
            [
                self.origin[0] + a as f64 * layer.pitch,
                self.origin[1] + b as f64 * layer.pitch,
            ],
            layer.side,
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = Cube<2>> + '_ {
        (0..self.len()).map(|i| self.cube(i))
    }

    /// (min side, max side).
    pub fn scale_bounds(&self) -> Option<(f64, f64)> {
        let mut sides = self.layers.iter().map(|l| l.side);
        let first = sides.next()?;
        Some(sides.fold((first, first), |(a, b), s| (a.min(s), b.max(s))))
    }

    pub fn stats(&self) -> FamilyStats {
        let (min_side, max_side) = self.scale_bounds().unwrap_or((0.0, 0.0));
        FamilyStats {
            cubes: self.len(),
            layers: self.layers.len(),
            min_side,
            max_side,
        }
    }

    /// Sub-family of the cubes satisfying `keep`.
    pub fn filter(&self, keep: impl Fn(&Cube<2>) -> bool) -> CubeFamily {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let positions = l
                    .positions
                    .iter()
                    .copied()
                    .filter(|&[a, b]| {
                        keep(&Cube::new_unchecked(
                            [self.origin[0] + a as f64 * l.pitch, self.origin[1] + b as f64 * l.pitch],
                            l.side,
                        ))
                    })
                    .collect();
                Layer {
                    side: l.side,
                    pitch: l.pitch,
                    positions,
                }
            })
            .collect();
        CubeFamily::from_layers(self.origin, layers, format!("{} (filtered)", self.generator))
    }

    /// Layers with side in the given range.
    pub fn sides_within(&self, lo: f64, hi: f64) -> CubeFamily {
        let layers = self
            .layers
            .iter()
            .filter(|l| l.side >= lo && l.side <= hi)
            .cloned()
            .collect();
        CubeFamily::from_layers(self.origin, layers, self.generator.clone())
    }
}

/// How cube sides and lattice pitches are generated.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub window: Cube<2>,
    /// Sides to use, ascending.
    pub sides: Vec<f64>,
    /// Pitch is `side / divisor`, rounded to a positive multiple of `snap` when given.
    pub divisor: u32,
    pub snap: Option<f64>,
}

impl Lattice {
    fn pitch(&self, side: f64) -> f64 {
        let raw = side / self.divisor as f64;
        match self.snap {
            Some(h) => (raw / h).round().max(1.0) * h,
            None => raw,
        }
    }

    /// All lattice cubes inside the window that satisfy `keep`.
    pub fn enumerate(&self, keep: impl Fn(&Cube<2>) -> bool) -> CubeFamily {
        let w = &self.window;
        let layers = self
            .sides
            .iter()
            .filter(|&&s| s <= w.side() * (1.0 + 1e-12))
            .map(|&side| {
                let pitch = self.pitch(side);
                let count = (((w.side() - side) / pitch) + 1e-9).floor() as u32 + 1;
                let mut positions = Vec::new();
                for b in 0..count {
                    for a in 0..count {
                        let q = Cube::new_unchecked([w.lo(0) + a as f64 * pitch, w.lo(1) + b as f64 * pitch], side);
                        if keep(&q) {
                            positions.push([a, b]);
                        }
                    }
                }
                Layer { side, pitch, positions }
            })
            .collect();
        CubeFamily::from_layers(
            w.corner(),
            layers,
            format!("lattice sides {:?}, pitch side/{}", self.sides, self.divisor),
        )
    }
}

/// Fast certification of grid-aligned cubes.
///
/// A cube whose block holds a cell centre outside the domain is rejected; a
/// cube made only of cells at distance more than half a cell diagonal from
/// the boundary is accepted. Everything else, and any cube that is not a
/// union of grid cells, goes to [`cube_inside`].
pub struct CubeCertifier<'a> {
    domain: &'a DomainModel,
    grid: Grid,
    outside: Vec<u32>,
    shallow: Vec<u32>,
}

impl<'a> CubeCertifier<'a> {
    pub fn new(domain: &'a DomainModel, grid: Grid) -> Self {
        let deep = 0.5 * std::f64::consts::SQRT_2 * grid.h * (1.0 + 1e-12);
        let (nx, ny) = (grid.nx, grid.ny);
        let stride = nx + 1;
        let mut outside = vec![0u32; stride * (ny + 1)];
        let mut shallow = vec![0u32; stride * (ny + 1)];
        for j in 0..ny {
            let (mut row_out, mut row_shallow) = (0u32, 0u32);
            for i in 0..nx {
                let c = grid.center(i, j);
                let (is_out, is_shallow) = if domain.in_closure(&c) {
                    let dc = domain.distance(&c);
                    (dc <= 0.0, dc <= deep)
                } else {
                    (true, true)
                };
                row_out += is_out as u32;
                row_shallow += is_shallow as u32;
                let k = (j + 1) * stride + i + 1;
                outside[k] = outside[k - stride] + row_out;
                shallow[k] = shallow[k - stride] + row_shallow;
            }
        }
        CubeCertifier {
            domain,
            grid,
            outside,
            shallow,
        }
    }

    #[inline]
    fn count(&self, sat: &[u32], cols: &std::ops::Range<usize>, rows: &std::ops::Range<usize>) -> u32 {
        let s = self.grid.nx + 1;
        sat[rows.end * s + cols.end] + sat[rows.start * s + cols.start]
            - sat[rows.start * s + cols.end]
            - sat[rows.end * s + cols.start]
    }

    pub fn inside(&self, q: &Cube<2>) -> bool {
        let g = &self.grid;
        let tol = 1e-9 * g.h;
        if let Some((cols, rows)) = g.cube_cells(q) {
            let aligned = (cols.len() as f64 * g.h - q.side()).abs() < tol
                && (rows.len() as f64 * g.h - q.side()).abs() < tol
                && (g.origin[0] + cols.start as f64 * g.h - q.lo(0)).abs() < tol
                && (g.origin[1] + rows.start as f64 * g.h - q.lo(1)).abs() < tol;
            if aligned && !cols.is_empty() {
                if self.count(&self.outside, &cols, &rows) > 0 {
                    return false;
                }
                if self.count(&self.shallow, &cols, &rows) == 0 {
                    return true;
                }
            }
        }
        cube_inside(q, self.domain)
    }
}

/// Dyadic sides `2^{-k}` within `[t_min, t_max]`, ascending.
pub fn dyadic_sides(t_min: f64, t_max: f64) -> Vec<f64> {
    let mut k = t_max.log2().floor() as i32;
    let mut out = Vec::new();
    loop {
        let s = (2.0f64).powi(k);
        if s < t_min {
            break;
        }
        if s <= t_max {
            out.push(s);
        }
        k -= 1;
    }
    out.reverse();
    out
}

/// Cubes of dyadic side in `[t_min, t_max]` on a lattice of pitch
/// `ℓ/pitch_divisor` from the window corner, keeping only those certified inside.
pub fn enumerate_cubes(d: &DomainModel, t_min: f64, t_max: f64, pitch_divisor: u32) -> Result<CubeFamily> {
    if !(t_min > 0.0 && t_min < t_max) {
        return Err(Error::validation("t_min", "need 0 < t_min < t_max"));
    }
    if ![2, 4, 8].contains(&pitch_divisor) {
        return Err(Error::validation("pitch_divisor", "must be 2, 4 or 8"));
    }
    let sides = dyadic_sides(t_min, t_max);
    if sides.is_empty() {
        return Err(Error::EmptyFamily(format!("no dyadic side in [{t_min}, {t_max}]")));
    }
    let lattice = Lattice {
        window: *d.window(),
        sides,
        divisor: pitch_divisor,
        snap: None,
    };
    let fam = lattice.enumerate(|q| cube_inside(q, d));
    if fam.is_empty() {
        return Err(Error::EmptyFamily(format!(
            "no cube of side in [{t_min}, {t_max}] fits inside the domain within the window"
        )));
    }
    Ok(fam)
}
