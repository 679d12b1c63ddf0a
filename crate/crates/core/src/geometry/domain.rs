use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cube::{Cube, Point};
use super::shape::{Disk, Rect, RectUnion};
use crate::error::{Error, Result};

/// Rectangle of a `rect-union` spec; `null` bounds are infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub lo: [Option<f64>; 2],
    pub hi: [Option<f64>; 2],
}

fn default_corner() -> [f64; 2] {
    [0.0, 0.0]
}

fn one() -> f64 {
    1.0
}

/// Builder parameters, one variant per supported kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainKind {
    #[serde(rename_all = "kebab-case")]
    Square {
        #[serde(default = "default_corner")]
        corner: [f64; 2],
        #[serde(default = "one")]
        side: f64,
    },
    Disk {
        #[serde(default = "default_corner")]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
    },
    /// The open half-plane `{x < offset}`.
    HalfPlane {
        #[serde(default)]
        offset: f64,
    },
    RectUnion { rects: Vec<RectSpec> },
    /// Left half-plane with strips `[0, L_n] × [y_n, y_n + 1/n]`.
    #[serde(rename = "strips-example-1")]
    StripsExample1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        lengths: Vec<f64>,
    },
    /// Left half-plane with groups `n = 1..=groups` of strips of height `1/j`
    /// (`j = 1..=n`) and length `n`.
    #[serde(rename = "strips-example-2")]
    StripsExample2 { groups: usize },
}

impl DomainKind {
    pub fn name(&self) -> &'static str {
        match self {
            DomainKind::Square { .. } => "square",
            DomainKind::Disk { .. } => "disk",
            DomainKind::HalfPlane { .. } => "half-plane",
            DomainKind::RectUnion { .. } => "rect-union",
            DomainKind::StripsExample1 { .. } => "strips-example-1",
            DomainKind::StripsExample2 { .. } => "strips-example-2",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(field, "must be finite"))
            }
        };
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(field, format!("must be positive and finite, got {v}")))
            }
        };
        match self {
            DomainKind::Square { corner, side } => {
                finite("params.corner", corner[0])?;
                finite("params.corner", corner[1])?;
                positive("params.side", *side)
            }
            DomainKind::Disk { center, radius } => {
                finite("params.center", center[0])?;
                finite("params.center", center[1])?;
                positive("params.radius", *radius)
            }
            DomainKind::HalfPlane { offset } => finite("params.offset", *offset),
            DomainKind::RectUnion { rects } => {
                if rects.is_empty() {
                    return Err(Error::validation("params.rects", "at least one rectangle required"));
                }
                for (i, r) in rects.iter().enumerate() {
                    for a in 0..2 {
                        let lo = r.lo[a].unwrap_or(f64::NEG_INFINITY);
                        let hi = r.hi[a].unwrap_or(f64::INFINITY);
                        if lo.is_nan() || hi.is_nan() || lo >= hi {
                            return Err(Error::validation(
                                format!("params.rects[{i}]"),
                                "each rectangle needs lo < hi on both axes",
                            ));
                        }
                    }
                }
                Ok(())
            }
            DomainKind::StripsExample1 { count, lengths } => {
                if lengths.is_empty() {
                    return Err(Error::validation("params.lengths", "N >= 1 strip lengths required"));
                }
                if let Some(c) = count {
                    if *c != lengths.len() {
                        return Err(Error::validation(
                            "params.count",
                            format!("count {c} disagrees with {} lengths", lengths.len()),
                        ));
                    }
                }
                for (i, l) in lengths.iter().enumerate() {
                    positive(&format!("params.lengths[{i}]"), *l)?;
                }
                Ok(())
            }
            DomainKind::StripsExample2 { groups } => {
                if *groups == 0 {
                    return Err(Error::validation("params.groups", "N >= 1 required"));
                }
                Ok(())
            }
        }
    }
}

/// Domain document: `{"kind": ..., "params": {...}, "window": {"corner": [x, y], "side": s}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub window: Option<Cube<2>>,
}

impl DomainSpec {
    pub fn new(kind: DomainKind) -> Self {
        DomainSpec { kind, window: None }
    }

    pub fn with_window(mut self, window: Cube<2>) -> Self {
        self.window = Some(window);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(mut map) = value else {
            return Err(Error::validation("domain", "expected a JSON object"));
        };
        if let Some(k) = map.keys().find(|k| !matches!(k.as_str(), "kind" | "params" | "window")) {
            return Err(Error::validation(k.clone(), "unknown field"));
        }
        let window = match map.remove("window") {
            None | Some(Value::Null) => None,
            Some(w) => Some(
                serde_json::from_value::<Cube<2>>(w).map_err(|e| Error::validation("window", e.to_string()))?,
            ),
        };
        if !map.contains_key("params") {
            map.insert("params".into(), Value::Object(Default::default()));
        }
        let kind: DomainKind = serde_json::from_value(Value::Object(map)).map_err(|e| {
            Error::validation("params", e.to_string())
        })?;
        kind.validate()?;
        Ok(DomainSpec { kind, window })
    }

    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.kind).expect("domain kinds serialize");
        if let (Value::Object(map), Some(w)) = (&mut v, &self.window) {
            map.insert("window".into(), serde_json::to_value(w).expect("cubes serialize"));
        }
        v
    }
}

/// One strip of the strip domains: `[0, length] × [y0, y1]` with height `1/index`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StripInfo {
    pub group: usize,
    pub index: usize,
    pub length: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Base ordinates of the strips: the first strip sits on `y = 0` and each
/// next one starts a unit gap above the previous top.
pub fn stack_strips(shapes: &[(usize, usize, f64)]) -> Vec<StripInfo> {
    let mut y = 0.0;
    shapes
        .iter()
        .map(|&(group, index, length)| {
            let height = 1.0 / index as f64;
            let s = StripInfo {
                group,
                index,
                length,
                y0: y,
                y1: y + height,
            };
            y = s.y1 + 1.0;
            s
        })
        .collect()
}

#[derive(Clone, Debug)]
enum Shape {
    Disk(Disk),
    Rects(RectUnion),
}

/// A planar domain with exact membership and boundary distance.
#[derive(Clone, Debug)]
pub struct DomainModel {
    name: String,
    kind: DomainKind,
    window: Cube<2>,
    shape: Shape,
    strips: Vec<StripInfo>,
}

fn integer_window(lo: Point, hi: Point) -> Cube<2> {
    let lo = [lo[0].floor(), lo[1].floor()];
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]).ceil().max(1.0);
    Cube::new_unchecked(lo, side)
}

fn default_window(kind: &DomainKind, strips: &[StripInfo]) -> Cube<2> {
    match kind {
        DomainKind::Square { corner, side } => {
            Cube::new_unchecked([corner[0] - side, corner[1] - side], 3.0 * side)
        }
        DomainKind::Disk { center, radius } => {
            Cube::new_unchecked([center[0] - 2.0 * radius, center[1] - 2.0 * radius], 4.0 * radius)
        }
        DomainKind::HalfPlane { offset } => Cube::new_unchecked([offset - 2.0, -2.0], 4.0),
        DomainKind::RectUnion { rects } => {
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for r in rects {
                for a in 0..2 {
                    for v in [r.lo[a], r.hi[a]].into_iter().flatten() {
                        lo[a] = lo[a].min(v);
                        hi[a] = hi[a].max(v);
                    }
                }
            }
            for a in 0..2 {
                if !lo[a].is_finite() {
                    lo[a] = -1.0;
                    hi[a] = 1.0;
                }
                let pad = 0.5 * (hi[a] - lo[a]).max(1.0);
                lo[a] -= pad;
                hi[a] += pad;
            }
            integer_window(lo, hi)
        }
        DomainKind::StripsExample1 { .. } | DomainKind::StripsExample2 { .. } => {
            let top = strips.last().map_or(1.0, |s| s.y1);
            let right = strips.iter().map(|s| s.length).fold(0.0, f64::max);
            integer_window([-4.0, -1.0], [right + 1.0, top + 1.0])
        }
    }
}

/// Build the domain model for `spec`, using the spec's window or the kind's default.
pub fn build_domain(spec: &DomainSpec) -> Result<DomainModel> {
    spec.kind.validate()?;
    let inf = f64::INFINITY;
    let half_plane = |offset: f64| Rect {
        lo: [-inf, -inf],
        hi: [offset, inf],
    };
    let strip_rects = |strips: &[StripInfo]| {
        let mut rects = vec![half_plane(0.0)];
        rects.extend(strips.iter().map(|s| Rect {
            lo: [0.0, s.y0],
            hi: [s.length, s.y1],
        }));
        RectUnion::new(rects)
    };
    let mut strips = Vec::new();
    let shape = match &spec.kind {
        DomainKind::Square { corner, side } => Shape::Rects(RectUnion::new(vec![Rect {
            lo: *corner,
            hi: [corner[0] + side, corner[1] + side],
        }])),
        DomainKind::Disk { center, radius } => Shape::Disk(Disk {
            center: *center,
            radius: *radius,
        }),
        DomainKind::HalfPlane { offset } => Shape::Rects(RectUnion::new(vec![half_plane(*offset)])),
        DomainKind::RectUnion { rects } => Shape::Rects(RectUnion::new(
            rects
                .iter()
                .map(|r| Rect {
                    lo: [r.lo[0].unwrap_or(-inf), r.lo[1].unwrap_or(-inf)],
                    hi: [r.hi[0].unwrap_or(inf), r.hi[1].unwrap_or(inf)],
                })
                .collect(),
        )),
        DomainKind::StripsExample1 { lengths, .. } => {
            let shapes: Vec<_> = lengths.iter().enumerate().map(|(i, &l)| (i + 1, i + 1, l)).collect();
            strips = stack_strips(&shapes);
            Shape::Rects(strip_rects(&strips))
        }
        DomainKind::StripsExample2 { groups } => {
            let mut shapes = Vec::new();
            for n in 1..=*groups {
                for j in 1..=n {
                    shapes.push((n, j, n as f64));
                }
            }
            strips = stack_strips(&shapes);
            Shape::Rects(strip_rects(&strips))
        }
    };
    let window = match spec.window {
        Some(w) => w,
        None => default_window(&spec.kind, &strips),
    };
    Ok(DomainModel {
        name: spec.kind.name().to_string(),
        kind: spec.kind.clone(),
        window,
        shape,
        strips,
    })
}

impl DomainModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn spec(&self) -> DomainSpec {
        DomainSpec {
            kind: self.kind.clone(),
            window: Some(self.window),
        }
    }

    pub fn window(&self) -> &Cube<2> {
        &self.window
    }

    /// Same domain restricted to a different window.
    pub fn with_window(&self, window: Cube<2>) -> Self {
        DomainModel {
            window,
            ..self.clone()
        }
    }

    /// Strips of the strip kinds, ordered bottom to top.
    pub fn strips(&self) -> &[StripInfo] {
        &self.strips
    }

    /// The strip whose open interior (away from the attaching line) holds `p`.
    pub fn strip_at(&self, p: &Point) -> Option<&StripInfo> {
        if p[0] <= 0.0 {
            return None;
        }
        let i = self.strips.partition_point(|s| s.y1 <= p[1]);
        self.strips
            .get(i)
            .filter(|s| p[1] > s.y0 && p[1] < s.y1 && p[0] < s.length)
    }

    /// True when the domain extends beyond every window (window-limited quantities).
    pub fn is_unbounded(&self) -> bool {
        !matches!(self.kind, DomainKind::Square { .. } | DomainKind::Disk { .. })
            && !matches!(&self.kind, DomainKind::RectUnion { rects } if rects.iter().all(|r| r.lo.iter().chain(r.hi.iter()).all(Option::is_some)))
    }

    /// Distance to the boundary, `d(x) = dist(x, ∂Ω)`.
    #[inline]
    pub fn distance(&self, p: &Point) -> f64 {
        match &self.shape {
            Shape::Disk(d) => d.boundary_distance(p),
            Shape::Rects(r) => r.boundary_distance(p),
        }
    }

    #[inline]
    pub fn in_closure(&self, p: &Point) -> bool {
        match &self.shape {
            Shape::Disk(d) => d.in_closure(p),
            Shape::Rects(r) => r.in_closure(p),
        }
    }

    #[inline]
    pub fn inside(&self, p: &Point) -> bool {
        self.in_closure(p) && self.distance(p) > 0.0
    }

    /// Exterior of the closure.
    #[inline]
    pub fn outside(&self, p: &Point) -> bool {
        !self.in_closure(p)
    }

    /// Minimum of the boundary distance over a closed cube.
    pub fn cube_distance(&self, q: &Cube<2>) -> f64 {
        match &self.shape {
            Shape::Disk(d) => d.boundary_distance_to_cube(q),
            Shape::Rects(r) => r.boundary_distance_to_cube(q),
        }
    }

    /// `dist(Q, complement of the chosen open set)` when `Q` lies in it.
    pub fn clearance(&self, q: &Cube<2>, open: OpenSet) -> Option<f64> {
        let c = q.center();
        let centre_in = match open {
            OpenSet::Interior => self.inside(&c),
            OpenSet::Exterior => self.outside(&c),
        };
        if !centre_in {
            return None;
        }
        let d = self.cube_distance(q);
        (d > 0.0).then_some(d)
    }
}

/// Which of the two open sets determined by the domain: `Ω` or the exterior
/// of its closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpenSet {
    Interior,
    Exterior,
}

/// Certificate that the closed cube lies in the open domain.
///
/// Uses the exact minimum of the boundary distance over the cube, so it is
/// exact up to floating point rather than sampled.
pub fn cube_inside(q: &Cube<2>, d: &DomainModel) -> bool {
    let c = q.center();
    let dc = d.distance(&c);
    if dc > 0.5 * q.diam() {
        return d.in_closure(&c);
    }
    d.clearance(q, OpenSet::Interior).is_some()
}

/// Connected components of a cell mask (`nx` columns, row-major).
/// Returns per-cell labels (0 = not in mask, components numbered from 1) and the count.
pub fn label_components(nx: usize, ny: usize, mask: &[bool], diagonal: bool) -> (Vec<u32>, u32) {
    assert_eq!(mask.len(), nx * ny);
    let mut labels = vec![0u32; nx * ny];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = ((k % nx) as isize, (k / nx) as isize);
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    if (di == 0 && dj == 0) || (!diagonal && di != 0 && dj != 0) {
                        continue;
                    }
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                        continue;
                    }
                    let m = b as usize * nx + a as usize;
                    if mask[m] && labels[m] == 0 {
                        labels[m] = count;
                        stack.push(m);
                    }
                }
            }
        }
    }
    (labels, count)
}

/// Number of 4-connected components of the domain within its window at
/// cell pitch `h`.
pub fn component_count(d: &DomainModel, h: f64) -> Result<u32> {
    let w = d.window();
    let n = (w.side() / h).round();
    if !(n >= 1.0) || (n * h - w.side()).abs() > 1e-9 * w.side() {
        return Err(Error::validation("resolution", "spacing must divide the window side"));
    }
    let n = n as usize;
    let mut mask = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let p = [w.lo(0) + (i as f64 + 0.5) * h, w.lo(1) + (j as f64 + 0.5) * h];
            mask.push(d.inside(&p));
        }
    }
    Ok(label_components(n, n, &mask, false).1)
}
