//! Whitney decompositions of the domain and of the exterior of its closure.
//!
//! A dyadic cube is accepted as soon as `diam(Q) ≤ dist(Q, complement)`.
//! Because the parent of every non-root cube was rejected, accepted cubes
//! also satisfy `dist ≤ 4·diam`; root cubes far from the boundary are the
//! only exception and are flagged as window-limited.

mod matching;

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dyadic_roots, Cube, DomainModel, DyadicCube, OpenSet, Point};

pub use matching::{match_cubes, CubeMatching, MatchOptions, DEFAULT_RADIUS_FACTOR};

/// Largest tolerated residue, as a fraction of the open set's volume in the window.
pub const MAX_RESIDUE_FRACTION: f64 = 0.01;

/// Level of the coarsest dyadic cubes that tile the window.
pub fn root_level(window: &Cube<2>) -> Result<i32> {
    Ok(dyadic_roots(window)?[0].level)
}

/// Dyadic level whose side equals `h` (rounded).
pub fn level_of(h: f64) -> i32 {
    (-h.log2()).round() as i32
}

/// First finest level tried for a grid of spacing `h`: a quarter cell.
pub fn default_finest_level(h: f64) -> i32 {
    level_of(h) + 2
}

#[inline]
fn accepts(d: &DomainModel, open: OpenSet, q: &DyadicCube<2>) -> Option<f64> {
    let c = q.to_cube();
    d.clearance(&c, open).filter(|&dist| dist >= c.diam())
}

/// The Whitney cube containing `p`, found by walking down from the root level.
pub fn locate(d: &DomainModel, open: OpenSet, p: &Point, root: i32, finest: i32) -> Option<DyadicCube<2>> {
    (root..=finest)
        .map(|level| DyadicCube::containing(level, p))
        .find(|q| accepts(d, open, q).is_some())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubeStatus {
    Accepted,
    /// Root cube whose clearance exceeds `4·diam`; the window cut it off.
    WindowLimited,
}

/// Accepted cubes, residue and adjacency of one open set.
#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    pub open: OpenSet,
    pub window: Cube<2>,
    pub root_level: i32,
    pub finest_level: i32,
    cubes: Vec<DyadicCube<2>>,
    clearance: Vec<f64>,
    status: Vec<CubeStatus>,
    residue: Vec<DyadicCube<2>>,
    adjacency: Vec<Vec<u32>>,
    lookup: HashMap<DyadicCube<2>, u32>,
    pub accepted_volume: f64,
    pub residue_volume: f64,
}

impl WhitneyDecomposition {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn cubes(&self) -> &[DyadicCube<2>] {
        &self.cubes
    }

    pub fn cube(&self, id: usize) -> Cube<2> {
        self.cubes[id].to_cube()
    }

    pub fn dyadic(&self, id: usize) -> DyadicCube<2> {
        self.cubes[id]
    }

    /// `dist(Q, complement)` as computed during acceptance.
    pub fn clearance(&self, id: usize) -> f64 {
        self.clearance[id]
    }

    pub fn status(&self, id: usize) -> CubeStatus {
        self.status[id]
    }

    pub fn residue(&self) -> &[DyadicCube<2>] {
        &self.residue
    }

    pub fn neighbors(&self, id: usize) -> &[u32] {
        &self.adjacency[id]
    }

    pub fn residue_fraction(&self) -> f64 {
        let total = self.accepted_volume + self.residue_volume;
        if total > 0.0 {
            self.residue_volume / total
        } else {
            0.0
        }
    }

    pub fn id_of(&self, q: &DyadicCube<2>) -> Option<usize> {
        self.lookup.get(q).map(|&i| i as usize)
    }

    /// Accepted cube whose half-open extent contains `p`.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        self.locate_near(p, self.root_level)
    }

    /// As [`locate`](Self::locate), trying levels outward from `hint` first.
    pub fn locate_near(&self, p: &Point, hint: i32) -> Option<usize> {
        if !self.window.contains_point(p) {
            return None;
        }
        let hint = hint.clamp(self.root_level, self.finest_level);
        let span = (hint - self.root_level).max(self.finest_level - hint);
        for step in 0..=span {
            let below = hint - step;
            let above = hint + step;
            for level in [below, above] {
                if level < self.root_level || level > self.finest_level {
                    continue;
                }
                if let Some(&i) = self.lookup.get(&DyadicCube::containing(level, p)) {
                    return Some(i as usize);
                }
            }
        }
        None
    }

    /// Per-level index of cube ids, used by the matcher.
    pub(crate) fn level_index(&self) -> HashMap<i32, HashMap<[i64; 2], u32>> {
        let mut out: HashMap<i32, HashMap<[i64; 2], u32>> = HashMap::new();
        for (i, q) in self.cubes.iter().enumerate() {
            out.entry(q.level).or_default().insert(q.index, i as u32);
        }
        out
    }
}

/// Top-down Whitney decomposition of `open` within the window, subdividing
/// down to `finest_level` at most.
pub fn whitney_decompose(d: &DomainModel, open: OpenSet, finest_level: i32) -> Result<WhitneyDecomposition> {
    let window = *d.window();
    let roots = dyadic_roots(&window)?;
    let root_level = roots[0].level;
    if finest_level < root_level {
        return Err(Error::validation(
            "finest_level",
            format!("must be at least the root level {root_level}"),
        ));
    }
    let other = match open {
        OpenSet::Interior => OpenSet::Exterior,
        OpenSet::Exterior => OpenSet::Interior,
    };

    let mut cubes = Vec::new();
    let mut clearance = Vec::new();
    let mut status = Vec::new();
    let mut residue = Vec::new();
    let mut residue_volume = 0.0;
    let mut stack: Vec<DyadicCube<2>> = roots.into_iter().rev().collect();
    while let Some(q) = stack.pop() {
        let c = q.to_cube();
        if let Some(dist) = d.clearance(&c, open) {
            if dist >= c.diam() {
                cubes.push(q);
                clearance.push(dist);
                status.push(if dist > 4.0 * c.diam() {
                    CubeStatus::WindowLimited
                } else {
                    CubeStatus::Accepted
                });
                continue;
            }
        } else if d.clearance(&c, other).is_some() {
            // Entirely in the complement of the open set.
            continue;
        }
        if q.level >= finest_level {
            residue_volume += c.volume() * open_fraction(d, open, &c);
            residue.push(q);
        } else {
            let mut children = q.children();
            children.reverse();
            stack.extend(children);
        }
    }
    let accepted_volume: f64 = cubes.iter().map(|q| q.to_cube().volume()).sum();
    let lookup: HashMap<DyadicCube<2>, u32> = cubes.iter().enumerate().map(|(i, q)| (*q, i as u32)).collect();

    let mut dec = WhitneyDecomposition {
        open,
        window,
        root_level,
        finest_level,
        cubes,
        clearance,
        status,
        residue,
        adjacency: Vec::new(),
        lookup,
        accepted_volume,
        residue_volume,
    };
    dec.adjacency = build_adjacency(&dec);

    let fraction = dec.residue_fraction();
    if fraction > MAX_RESIDUE_FRACTION {
        return Err(Error::resolution(
            format!(
                "Whitney residue is {:.2}% of the open set at finest level {finest_level}; use level {} or deeper",
                100.0 * fraction,
                finest_level + 1
            ),
            Some(crate::geometry::dyadic_side(finest_level + 1)),
        ));
    }
    log::debug!(
        "whitney {:?}: {} cubes, residue {:.3}%",
        open,
        dec.cubes.len(),
        100.0 * fraction
    );
    Ok(dec)
}

/// Fraction of a 4×4 sub-sample of the cube lying in the open set.
fn open_fraction(d: &DomainModel, open: OpenSet, c: &Cube<2>) -> f64 {
    let mut hits = 0;
    for a in 0..4 {
        for b in 0..4 {
            let p = [c.lo(0) + (a as f64 + 0.5) * c.side() / 4.0, c.lo(1) + (b as f64 + 0.5) * c.side() / 4.0];
            let inside = match open {
                OpenSet::Interior => d.inside(&p),
                OpenSet::Exterior => d.outside(&p),
            };
            hits += inside as usize;
        }
    }
    hits as f64 / 16.0
}

/// Smallest finest level in `start..=max` whose residue is within bounds.
pub fn whitney_decompose_auto(d: &DomainModel, open: OpenSet, start: i32, max: i32) -> Result<WhitneyDecomposition> {
    let mut level = start.max(root_level(d.window())?);
    loop {
        match whitney_decompose(d, open, level) {
            Err(Error::Resolution { .. }) if level < max => level += 1,
            other => return other,
        }
    }
}

/// Adjacency by probing just outside every edge midpoint and corner.
///
/// A larger or equal neighbour across an edge contains the whole edge
/// (dyadic nesting), so the midpoint probe finds it; smaller neighbours
/// find this cube from their side, and corner contacts are caught by the
/// diagonal probes. The probe offset is a quarter of the finest side.
fn build_adjacency(dec: &WhitneyDecomposition) -> Vec<Vec<u32>> {
    let eps = crate::geometry::dyadic_side(dec.finest_level) / 4.0;
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); dec.cubes.len()];
    for (i, q) in dec.cubes.iter().enumerate() {
        let c = q.to_cube();
        let (x0, y0, x1, y1) = (c.lo(0), c.lo(1), c.hi(0), c.hi(1));
        let (mx, my) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let probes = [
            [x0 - eps, my],
            [x1 + eps, my],
            [mx, y0 - eps],
            [mx, y1 + eps],
            [x0 - eps, y0 - eps],
            [x1 + eps, y0 - eps],
            [x0 - eps, y1 + eps],
            [x1 + eps, y1 + eps],
        ];
        for p in probes {
            if let Some(j) = dec.locate_near(&p, q.level) {
                if j != i && c.closures_meet(&dec.cube(j)) {
                    adj[i].push(j as u32);
                    adj[j].push(i as u32);
                }
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adj
}
