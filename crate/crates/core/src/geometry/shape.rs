//! Exact boundary geometry for the analytic domain kinds.

use super::cube::{Cube, Point};

/// Closed axis-parallel rectangle; bounds may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    pub fn contains(&self, p: &Point) -> bool {
        p[0] >= self.lo[0] && p[0] <= self.hi[0] && p[1] >= self.lo[1] && p[1] <= self.hi[1]
    }
}

/// Axis-parallel boundary piece: `fixed` is the constant coordinate on `axis`,
/// `[a, b]` the extent along the other axis (possibly unbounded).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Segment {
    fixed: f64,
    a: f64,
    b: f64,
}

impl Segment {
    /// Distance from a point given as (along, across) coordinates.
    #[inline]
    fn point_distance(&self, along: f64, across: f64) -> f64 {
        let d_along = (self.a - along).max(along - self.b).max(0.0);
        let d_across = (across - self.fixed).abs();
        d_along.hypot(d_across)
    }

    /// Distance to the box `[along_lo, along_hi] × [across_lo, across_hi]`.
    #[inline]
    fn box_distance(&self, along_lo: f64, along_hi: f64, across_lo: f64, across_hi: f64) -> f64 {
        let d_along = (self.a - along_hi).max(along_lo - self.b).max(0.0);
        let d_across = (across_lo - self.fixed).max(self.fixed - across_hi).max(0.0);
        d_along.hypot(d_across)
    }
}

/// Segments of one orientation, sorted by their fixed coordinate.
#[derive(Clone, Debug, Default)]
struct SegmentSet {
    segs: Vec<Segment>,
}

impl SegmentSet {
    fn new(mut segs: Vec<Segment>) -> Self {
        segs.sort_by(|s, t| s.fixed.total_cmp(&t.fixed).then(s.a.total_cmp(&t.a)));
        SegmentSet { segs }
    }

    /// Minimum distance, scanning outward from `across` and stopping once the
    /// across-gap alone exceeds the running best.
    fn min_distance(&self, along: f64, across: f64, mut best: f64) -> f64 {
        let start = self.segs.partition_point(|s| s.fixed < across);
        for s in self.segs[start..].iter() {
            if s.fixed - across >= best {
                break;
            }
            best = best.min(s.point_distance(along, across));
        }
        for s in self.segs[..start].iter().rev() {
            if across - s.fixed >= best {
                break;
            }
            best = best.min(s.point_distance(along, across));
        }
        best
    }

    fn min_box_distance(&self, along: (f64, f64), across: (f64, f64), mut best: f64) -> f64 {
        let start = self.segs.partition_point(|s| s.fixed < across.0);
        for s in self.segs[start..].iter() {
            if s.fixed - across.1 >= best {
                break;
            }
            best = best.min(s.box_distance(along.0, along.1, across.0, across.1));
        }
        for s in self.segs[..start].iter().rev() {
            if across.0 - s.fixed >= best {
                break;
            }
            best = best.min(s.box_distance(along.0, along.1, across.0, across.1));
        }
        best
    }
}

/// Union of closed rectangles. The associated open set is the interior of
/// the union; its boundary is extracted once on a compressed coordinate grid.
#[derive(Clone, Debug)]
pub struct RectUnion {
    rects: Vec<Rect>,
    /// Vertical boundary segments (fixed x, extent in y).
    vertical: SegmentSet,
    /// Horizontal boundary segments (fixed y, extent in x).
    horizontal: SegmentSet,
}

fn coords(rects: &[Rect], axis: usize) -> Vec<f64> {
    let mut v = vec![f64::NEG_INFINITY, f64::INFINITY];
    for r in rects {
        v.push(r.lo[axis]);
        v.push(r.hi[axis]);
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn midpoint(a: f64, b: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (false, true) => b - 1.0,
        (true, false) => a + 1.0,
        (false, false) => 0.0,
    }
}

/// Merge collinear, touching segments.
fn merge(mut segs: Vec<Segment>) -> Vec<Segment> {
    segs.sort_by(|s, t| s.fixed.total_cmp(&t.fixed).then(s.a.total_cmp(&t.a)));
    let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
    for s in segs {
        if let Some(last) = out.last_mut() {
            if last.fixed == s.fixed && last.b >= s.a {
                last.b = last.b.max(s.b);
                continue;
            }
        }
        out.push(s);
    }
    out
}

impl RectUnion {
    pub fn new(rects: Vec<Rect>) -> Self {
        let xs = coords(&rects, 0);
        let ys = coords(&rects, 1);
        let (nx, ny) = (xs.len() - 1, ys.len() - 1);
        let mut covered = vec![false; nx * ny];
        for i in 0..nx {
            let cx = midpoint(xs[i], xs[i + 1]);
            for j in 0..ny {
                let cy = midpoint(ys[j], ys[j + 1]);
                covered[i * ny + j] = rects.iter().any(|r| r.contains(&[cx, cy]));
            }
        }
        let cov = |i: usize, j: usize| covered[i * ny + j];
        let mut vertical = Vec::new();
        for i in 1..nx {
            for j in 0..ny {
                if cov(i - 1, j) != cov(i, j) {
                    vertical.push(Segment {
                        fixed: xs[i],
                        a: ys[j],
                        b: ys[j + 1],
                    });
                }
            }
        }
        let mut horizontal = Vec::new();
        for j in 1..ny {
            for i in 0..nx {
                if cov(i, j - 1) != cov(i, j) {
                    horizontal.push(Segment {
                        fixed: ys[j],
                        a: xs[i],
                        b: xs[i + 1],
                    });
                }
            }
        }
        RectUnion {
            rects,
            vertical: SegmentSet::new(merge(vertical)),
            horizontal: SegmentSet::new(merge(horizontal)),
        }
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn boundary_segment_count(&self) -> usize {
        self.vertical.segs.len() + self.horizontal.segs.len()
    }

    pub fn in_closure(&self, p: &Point) -> bool {
        self.rects.iter().any(|r| r.contains(p))
    }

    /// Distance to the boundary of the union.
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        let best = self.vertical.min_distance(p[1], p[0], f64::INFINITY);
        self.horizontal.min_distance(p[0], p[1], best)
    }

    /// Minimum over the closed cube of the boundary distance.
    pub fn boundary_distance_to_cube(&self, q: &Cube<2>) -> f64 {
        let best = self
            .vertical
            .min_box_distance((q.lo(1), q.hi(1)), (q.lo(0), q.hi(0)), f64::INFINITY);
        self.horizontal
            .min_box_distance((q.lo(0), q.hi(0)), (q.lo(1), q.hi(1)), best)
    }
}

/// Open disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        (super::cube::dist(p, &self.center) - self.radius).abs()
    }

    pub fn in_closure(&self, p: &Point) -> bool {
        super::cube::dist(p, &self.center) <= self.radius
    }

    pub fn boundary_distance_to_cube(&self, q: &Cube<2>) -> f64 {
        let near = q.distance_to_point(&self.center);
        let far = q.farthest_distance(&self.center);
        if far < self.radius {
            self.radius - far
        } else if near > self.radius {
            near - self.radius
        } else {
            0.0
        }
    }
}
