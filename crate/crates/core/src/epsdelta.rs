//! Sampled verification of the (ε,δ) condition: a pair `x, y` passes when a
//! polyline through the lattice of cell centres joins them with arclength at
//! most `|x−y|/ε` while every vertex `z` keeps
//! `d(z) ≥ ε|z−x||z−y|/|x−y| − 2h`.
//!
//! The search is A* in the 8-connected lattice, pruned to the ellipse
//! `|z−x| + |z−y| ≤ bound + slack` that contains every qualifying path.
//! An edge is used only when the balls `B(a, d(a))` and `B(b, d(b))` cover
//! it, so paths stay inside the domain.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dist, Cube, DomainModel, Point};

/// Slack on the arclength bound: the two connectors from the endpoints to the lattice.
fn length_slack(h: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * h
}

/// Slack on the clearance bound.
fn clearance_slack(h: f64) -> f64 {
    2.0 * h
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CigarQuery {
    pub x: Point,
    pub y: Point,
    pub eps: f64,
    pub delta: f64,
}

impl CigarQuery {
    fn validate(&self, d: &DomainModel) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::validation("eps", "must be positive"));
        }
        let r = dist(&self.x, &self.y);
        if !(r > 0.0 && r < self.delta) {
            return Err(Error::validation("y", format!("need 0 < |x−y| < δ = {}, got {r}", self.delta)));
        }
        for (name, p) in [("x", &self.x), ("y", &self.y)] {
            if !d.inside(p) {
                return Err(Error::validation(name, format!("{p:?} is not inside the domain")));
            }
        }
        Ok(())
    }

    /// `|x−y|/ε`.
    pub fn bound(&self) -> f64 {
        dist(&self.x, &self.y) / self.eps
    }

    /// `ε|z−x||z−y|/|x−y|`.
    pub fn required_clearance(&self, z: &Point) -> f64 {
        self.eps * dist(z, &self.x) * dist(z, &self.y) / dist(&self.x, &self.y)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CigarCertificate {
    pub path: Vec<Point>,
    pub arclength: f64,
    /// `min_z d(z) − ε|z−x||z−y|/|x−y|` over the vertices.
    pub clearance_margin: f64,
}

impl CigarCertificate {
    /// Arclength and clearance margin recomputed from the polyline alone.
    pub fn measure(path: &[Point], q: &CigarQuery, d: &DomainModel) -> (f64, f64) {
        let arclength = path.windows(2).fold(0.0, |acc, w| acc + dist(&w[0], &w[1]));
        let margin = path
            .iter()
            .map(|z| d.distance(z) - q.required_clearance(z))
            .fold(f64::INFINITY, f64::min);
        (arclength, margin)
    }

    pub fn verify(&self, q: &CigarQuery, d: &DomainModel) -> bool {
        let (len, margin) = Self::measure(&self.path, q, d);
        len == self.arclength && margin == self.clearance_margin
    }
}

/// The constraint that failed.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Failure {
    /// Paths exist inside the length ellipse, but none keeps the clearance.
    /// `margin` is the clearance margin of the shortest unconstrained one.
    Clearance { margin: f64 },
    /// The shortest admissible path is too long, or every path leaves the ellipse.
    Length { arclength: Option<f64> },
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum Outcome {
    Pass(CigarCertificate),
    Fail(Failure),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Pass(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Entry {
    f: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A rectangle of the lattice of cell centres with lazily cached node data.
struct Space<'a> {
    d: &'a DomainModel,
    q: &'a CigarQuery,
    origin: Point,
    h: f64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    constrained: bool,
    /// Ellipse budget on `|z−x| + |z−y|`, if pruning.
    ellipse: Option<f64>,
    /// 0 unknown, 1 usable, 2 not.
    state: Vec<u8>,
    dist: Vec<f64>,
}

const NODE_X: usize = usize::MAX - 1;
const NODE_Y: usize = usize::MAX;

impl<'a> Space<'a> {
    fn new(d: &'a DomainModel, q: &'a CigarQuery, h: f64, region: &Cube<2>, constrained: bool, ellipse: Option<f64>) -> Option<Self> {
        let w = d.window();
        let origin = w.corner();
        let lo = |a: usize| ((region.lo(a).max(w.lo(a)) - origin[a]) / h - 0.5).ceil() as i64;
        let hi = |a: usize| ((region.hi(a).min(w.hi(a)) - origin[a]) / h - 0.5).floor() as i64;
        let (i0, i1, j0, j1) = (lo(0).max(0), hi(0), lo(1).max(0), hi(1));
        let n_max = (w.side() / h).round() as i64 - 1;
        let (i1, j1) = (i1.min(n_max), j1.min(n_max));
        if i1 < i0 || j1 < j0 {
            return None;
        }
        let (nx, ny) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
        Some(Space {
            d,
            q,
            origin,
            h,
            i0,
            j0,
            nx,
            ny,
            constrained,
            ellipse,
            state: vec![0; nx * ny],
            dist: vec![f64::NAN; nx * ny],
        })
    }

    fn point(&self, node: usize) -> Point {
        match node {
            NODE_X => self.q.x,
            NODE_Y => self.q.y,
            _ => {
                let (i, j) = ((node % self.nx) as i64 + self.i0, (node / self.nx) as i64 + self.j0);
                [self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + (j as f64 + 0.5) * self.h]
            }
        }
    }

    fn boundary_distance(&mut self, node: usize) -> f64 {
        match node {
            NODE_X => self.d.distance(&self.q.x),
            NODE_Y => self.d.distance(&self.q.y),
            _ => {
                if self.dist[node].is_nan() {
                    self.dist[node] = self.d.distance(&self.point(node));
                }
                self.dist[node]
            }
        }
    }

    fn usable(&mut self, node: usize) -> bool {
        if node >= NODE_X {
            return true;
        }
        if self.state[node] == 0 {
            let z = self.point(node);
            let mut ok = self.d.inside(&z);
            if ok {
                if let Some(budget) = self.ellipse {
                    ok = dist(&z, &self.q.x) + dist(&z, &self.q.y) <= budget;
                }
            }
            if ok && self.constrained {
                ok = self.boundary_distance(node) >= self.q.required_clearance(&z) - clearance_slack(self.h);
            }
            self.state[node] = if ok { 1 } else { 2 };
        }
        self.state[node] == 1
    }

    fn edge_ok(&mut self, a: usize, b: usize) -> bool {
        let len = dist(&self.point(a), &self.point(b));
        self.boundary_distance(a) + self.boundary_distance(b) >= len
    }

    /// Lattice nodes at the corners of the lattice square holding `p`.
    fn corners(&self, p: &Point) -> Vec<usize> {
        let fi = ((p[0] - self.origin[0]) / self.h - 0.5).floor() as i64;
        let fj = ((p[1] - self.origin[1]) / self.h - 0.5).floor() as i64;
        let mut out = Vec::with_capacity(4);
        for dj in 0..2 {
            for di in 0..2 {
                let (i, j) = (fi + di - self.i0, fj + dj - self.j0);
                if i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny {
                    out.push(j as usize * self.nx + i as usize);
                }
            }
        }
        out
    }

    /// Shortest path from `x` to `y`, as node list and length.
    fn search(&mut self) -> Option<(Vec<usize>, f64)> {
        let y_corners = self.corners(&self.q.y);
        let n = self.nx * self.ny;
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut heap = BinaryHeap::new();
        let target = self.q.y;
        let heur = |p: &Point| dist(p, &target);
        let mut best_y = f64::INFINITY;
        let mut parent_y = usize::MAX;

        let x_point = self.q.x;
        for c in self.corners(&x_point) {
            if self.usable(c) && self.edge_ok(NODE_X, c) {
                let gc = 0.0 + dist(&x_point, &self.point(c));
                if gc < g[c] {
                    g[c] = gc;
                    parent[c] = NODE_X;
                    heap.push(Entry { f: gc + heur(&self.point(c)), node: c });
                }
            }
        }
        while let Some(Entry { f, node }) = heap.pop() {
            if f >= best_y {
                break;
            }
            if closed[node] {
                continue;
            }
            closed[node] = true;
            let p = self.point(node);
            if y_corners.contains(&node) && self.edge_ok(node, NODE_Y) {
                let gy = g[node] + dist(&p, &target);
                if gy < best_y {
                    best_y = gy;
                    parent_y = node;
                }
            }
            let (i, j) = ((node % self.nx) as i64, (node / self.nx) as i64);
            for dj in -1..=1i64 {
                for di in -1..=1i64 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= self.nx as i64 || b >= self.ny as i64 {
                        continue;
                    }
                    let m = b as usize * self.nx + a as usize;
                    if closed[m] || !self.usable(m) || !self.edge_ok(node, m) {
                        continue;
                    }
                    let gm = g[node] + dist(&p, &self.point(m));
                    if gm < g[m] {
                        g[m] = gm;
                        parent[m] = node;
                        heap.push(Entry { f: gm + heur(&self.point(m)), node: m });
                    }
                }
            }
        }
        if parent_y == usize::MAX {
            return None;
        }
        let mut nodes = vec![NODE_Y];
        let mut cur = parent_y;
        while cur != NODE_X {
            nodes.push(cur);
            cur = parent[cur];
        }
        nodes.push(NODE_X);
        nodes.reverse();
        Some((nodes, best_y))
    }
}

fn ellipse_box(q: &CigarQuery, budget: f64) -> Cube<2> {
    let c = [(q.x[0] + q.y[0]) / 2.0, (q.x[1] + q.y[1]) / 2.0];
    Cube::new_unchecked([c[0] - budget / 2.0, c[1] - budget / 2.0], budget)
}

/// Checks one pair at lattice pitch `h`.
///
/// Endpoints that no lattice path joins inside the window raise
/// [`Error::DifferentComponents`].
pub fn check_pair(q: &CigarQuery, d: &DomainModel, h: f64) -> Result<Outcome> {
    q.validate(d)?;
    if !(h > 0.0) {
        return Err(Error::validation("h", "must be positive"));
    }
    let bound = q.bound() + length_slack(h);
    let region = ellipse_box(q, bound);
    let run = |constrained: bool, ellipse: Option<f64>, region: &Cube<2>| {
        Space::new(d, q, h, region, constrained, ellipse).and_then(|mut s| {
            let found = s.search()?;
            let path: Vec<Point> = found.0.iter().map(|&n| s.point(n)).collect();
            Some((path, found.1))
        })
    };

    if let Some((path, length)) = run(true, Some(bound), &region) {
        let (arclength, clearance_margin) = CigarCertificate::measure(&path, q, d);
        debug_assert_eq!(arclength, length);
        if arclength <= bound {
            return Ok(Outcome::Pass(CigarCertificate {
                path,
                arclength,
                clearance_margin,
            }));
        }
        return Ok(Outcome::Fail(Failure::Length { arclength: Some(arclength) }));
    }
    if let Some((path, _)) = run(false, Some(bound), &region) {
        let (_, margin) = CigarCertificate::measure(&path, q, d);
        return Ok(Outcome::Fail(Failure::Clearance { margin }));
    }
    if run(false, None, d.window()).is_some() {
        return Ok(Outcome::Fail(Failure::Length { arclength: None }));
    }
    Err(Error::DifferentComponents(format!(
        "no lattice path at pitch {h} joins {:?} and {:?}",
        q.x, q.y
    )))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairRecord {
    pub x: Point,
    pub y: Point,
    pub outcome: Outcome,
    pub bound: f64,
}

impl PairRecord {
    pub fn arclength(&self) -> Option<f64> {
        match &self.outcome {
            Outcome::Pass(c) => Some(c.arclength),
            Outcome::Fail(Failure::Length { arclength }) => *arclength,
            Outcome::Fail(Failure::Clearance { .. }) => None,
        }
    }

    pub fn clearance_margin(&self) -> Option<f64> {
        match &self.outcome {
            Outcome::Pass(c) => Some(c.clearance_margin),
            Outcome::Fail(Failure::Clearance { margin }) => Some(*margin),
            Outcome::Fail(Failure::Length { .. }) => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match &self.outcome {
            Outcome::Pass(_) => "pass",
            Outcome::Fail(Failure::Clearance { .. }) => "fail-clearance",
            Outcome::Fail(Failure::Length { .. }) => "fail-length",
        }
    }

    /// Lower is worse: failures first, then passes by relative length slack.
    fn severity(&self) -> (u8, f64) {
        match &self.outcome {
            Outcome::Fail(_) => (0, self.clearance_margin().unwrap_or(f64::NEG_INFINITY)),
            Outcome::Pass(c) => (1, (self.bound - c.arclength) / self.bound),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub eps: f64,
    pub delta: f64,
    pub h: f64,
    pub samples: usize,
    pub failures: usize,
    /// Pairs the lattice could not join at all.
    pub resolution_limited: usize,
    pub failure_rate: f64,
    /// The worst pairs, failures first.
    pub witnesses: Vec<PairRecord>,
}

/// Number of witnesses kept by [`scan_domain`].
pub const WITNESSES: usize = 10;

/// Uniform random pairs `x, y` in the domain (within its window) with `|x−y| < δ`.
pub fn sample_pairs(d: &DomainModel, delta: f64, samples: usize, seed: u64) -> Result<Vec<(Point, Point)>> {
    let w = *d.window();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut tries = 0usize;
    while out.len() < samples {
        tries += 1;
        if tries > 1000 * samples + 10_000 {
            return Err(Error::validation("domain", "rejection sampling found too few pairs in the window"));
        }
        let x = [w.lo(0) + rng.gen::<f64>() * w.side(), w.lo(1) + rng.gen::<f64>() * w.side()];
        if !d.inside(&x) {
            continue;
        }
        let r = delta * rng.gen::<f64>().sqrt();
        let a = rng.gen::<f64>() * std::f64::consts::TAU;
        let y = [x[0] + r * a.cos(), x[1] + r * a.sin()];
        if r > 0.0 && dist(&x, &y) < delta && d.inside(&y) && w.contains_point(&y) {
            out.push((x, y));
        }
    }
    Ok(out)
}

/// Checks seeded random pairs in parallel.
pub fn scan_domain(d: &DomainModel, eps: f64, delta: f64, samples: usize, seed: u64, h: f64) -> Result<ScanReport> {
    if samples == 0 {
        return Err(Error::validation("samples", "must be at least 1"));
    }
    let pairs = sample_pairs(d, delta, samples, seed)?;
    scan_pairs(d, eps, delta, &pairs, h)
}

/// Checks the given pairs in parallel.
pub fn scan_pairs(d: &DomainModel, eps: f64, delta: f64, pairs: &[(Point, Point)], h: f64) -> Result<ScanReport> {
    let results: Vec<Option<PairRecord>> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let q = CigarQuery { x, y, eps, delta };
            match check_pair(&q, d, h) {
                Ok(outcome) => Ok(Some(PairRecord {
                    x,
                    y,
                    outcome,
                    bound: q.bound(),
                })),
                Err(Error::DifferentComponents(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let resolution_limited = results.iter().filter(|r| r.is_none()).count();
    let mut records: Vec<PairRecord> = results.into_iter().flatten().collect();
    let failures = records.iter().filter(|r| !r.outcome.passed()).count();
    records.sort_by(|a, b| {
        let (sa, sb) = (a.severity(), b.severity());
        sa.0.cmp(&sb.0).then(sa.1.total_cmp(&sb.1))
    });
    records.truncate(WITNESSES);
    Ok(ScanReport {
        eps,
        delta,
        h,
        samples: pairs.len(),
        failures,
        resolution_limited,
        failure_rate: failures as f64 / pairs.len() as f64,
        witnesses: records,
    })
}
