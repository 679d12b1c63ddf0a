use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of the plane.
pub type Point = [f64; 2];

/// Closed axis-parallel cube `corner + [0, side]^N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cube<const N: usize = 2> {
    corner: [f64; N],
    side: f64,
}

impl<const N: usize> Cube<N> {
    pub fn new(corner: [f64; N], side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::validation("side", format!("must be positive and finite, got {side}")));
        }
        if corner.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("corner", "coordinates must be finite"));
        }
        Ok(Cube { corner, side })
    }

    /// Cube with the given center and side.
    pub fn centered(center: [f64; N], side: f64) -> Result<Self> {
        let mut corner = center;
        for c in corner.iter_mut() {
            *c -= side / 2.0;
        }
        Cube::new(corner, side)
    }

    pub(crate) fn new_unchecked(corner: [f64; N], side: f64) -> Self {
        debug_assert!(side > 0.0);
        Cube { corner, side }
    }

    #[inline]
    pub fn corner(&self) -> [f64; N] {
        self.corner
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }

    #[inline]
    pub fn lo(&self, axis: usize) -> f64 {
        self.corner[axis]
    }

    #[inline]
    pub fn hi(&self, axis: usize) -> f64 {
        self.corner[axis] + self.side
    }

    pub fn center(&self) -> [f64; N] {
        let mut c = self.corner;
        for v in c.iter_mut() {
            *v += self.side / 2.0;
        }
        c
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(N as i32)
    }

    pub fn diam(&self) -> f64 {
        self.side * (N as f64).sqrt()
    }

    /// Concentric cube scaled by `factor` (`2Q` for factor 2).
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        let side = self.side * factor;
        let mut corner = c;
        for v in corner.iter_mut() {
            *v -= side / 2.0;
        }
        Cube::new_unchecked(corner, side)
    }

    /// Closed containment of a point.
    pub fn contains_point(&self, p: &[f64; N]) -> bool {
        (0..N).all(|a| p[a] >= self.lo(a) && p[a] <= self.hi(a))
    }

    /// `other ⊂ self` (closed cubes).
    pub fn contains_cube(&self, other: &Cube<N>) -> bool {
        (0..N).all(|a| other.lo(a) >= self.lo(a) && other.hi(a) <= self.hi(a))
    }

    /// Interiors intersect.
    pub fn interiors_meet(&self, other: &Cube<N>) -> bool {
        (0..N).all(|a| self.lo(a) < other.hi(a) && other.lo(a) < self.hi(a))
    }

    /// Closures intersect.
    pub fn closures_meet(&self, other: &Cube<N>) -> bool {
        (0..N).all(|a| self.lo(a) <= other.hi(a) && other.lo(a) <= self.hi(a))
    }

    /// Euclidean set distance from a point to the cube.
    pub fn distance_to_point(&self, p: &[f64; N]) -> f64 {
        (0..N)
            .map(|a| {
                let d = (self.lo(a) - p[a]).max(p[a] - self.hi(a)).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest distance from `p` to a point of the cube.
    pub fn farthest_distance(&self, p: &[f64; N]) -> f64 {
        (0..N)
            .map(|a| {
                let d = (p[a] - self.lo(a)).abs().max((self.hi(a) - p[a]).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean set distance between two cubes.
    pub fn distance_to_cube(&self, other: &Cube<N>) -> f64 {
        (0..N)
            .map(|a| {
                let d = (other.lo(a) - self.hi(a)).max(self.lo(a) - other.hi(a)).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn center_distance(&self, other: &Cube<N>) -> f64 {
        let (a, b) = (self.center(), other.center());
        (0..N).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CubeDoc {
    corner: [f64; 2],
    side: f64,
}

impl Serialize for Cube<2> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CubeDoc {
            corner: self.corner,
            side: self.side,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cube<2> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CubeDoc::deserialize(d)?;
        Cube::new(doc.corner, doc.side).map_err(serde::de::Error::custom)
    }
}

/// Dyadic cube `index·2^{-level} + [0, 2^{-level}]^N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube<const N: usize = 2> {
    pub level: i32,
    pub index: [i64; N],
}

/// Side of a dyadic cube at `level`.
#[inline]
pub fn dyadic_side(level: i32) -> f64 {
    (2.0f64).powi(-level)
}

impl<const N: usize> DyadicCube<N> {
    pub fn new(level: i32, index: [i64; N]) -> Self {
        DyadicCube { level, index }
    }

    /// The dyadic cube of `level` whose half-open extent contains `p`.
    pub fn containing(level: i32, p: &[f64; N]) -> Self {
        let side = dyadic_side(level);
        let mut index = [0i64; N];
        for a in 0..N {
            index[a] = (p[a] / side).floor() as i64;
        }
        DyadicCube { level, index }
    }

    #[inline]
    pub fn side(&self) -> f64 {
        dyadic_side(self.level)
    }

    pub fn to_cube(&self) -> Cube<N> {
        let side = self.side();
        let mut corner = [0.0; N];
        for a in 0..N {
            corner[a] = self.index[a] as f64 * side;
        }
        Cube::new_unchecked(corner, side)
    }

    pub fn parent(&self) -> Self {
        let mut index = self.index;
        for v in index.iter_mut() {
            *v = v.div_euclid(2);
        }
        DyadicCube {
            level: self.level - 1,
            index,
        }
    }

    /// The `2^N` children in lexicographic index order.
    pub fn children(&self) -> Vec<Self> {
        (0..(1usize << N))
            .map(|mask| {
                let mut index = self.index;
                for (a, v) in index.iter_mut().enumerate() {
                    *v = 2 * *v + ((mask >> (N - 1 - a)) & 1) as i64;
                }
                DyadicCube {
                    level: self.level + 1,
                    index,
                }
            })
            .collect()
    }

    /// Ancestor at a coarser (or equal) level.
    pub fn ancestor(&self, level: i32) -> Self {
        assert!(level <= self.level);
        let shift = (self.level - level) as u32;
        let mut index = self.index;
        for v in index.iter_mut() {
            *v = v.div_euclid(1i64 << shift);
        }
        DyadicCube { level, index }
    }

    pub fn contains(&self, other: &DyadicCube<N>) -> bool {
        other.level >= self.level && other.ancestor(self.level) == *self
    }
}

/// Coarsest dyadic level whose cubes tile `window` exactly, together with the tiles.
pub fn dyadic_roots(window: &Cube<2>) -> Result<Vec<DyadicCube<2>>> {
    let coarsest = -(window.side().log2().floor() as i32);
    for level in coarsest..=coarsest + 48 {
        let side = dyadic_side(level);
        let n = window.side() / side;
        let c0 = window.lo(0) / side;
        let c1 = window.lo(1) / side;
        let integral = |v: f64| v.abs() < 1e12 && (v - v.round()).abs() <= 1e-9;
        if integral(n) && integral(c0) && integral(c1) {
            if n > 4096.0 {
                break;
            }
            let (n, c0, c1) = (n.round() as i64, c0.round() as i64, c1.round() as i64);
            let mut roots = Vec::with_capacity((n * n) as usize);
            for i in 0..n {
                for j in 0..n {
                    roots.push(DyadicCube::new(level, [c0 + i, c1 + j]));
                }
            }
            return Ok(roots);
        }
    }
    Err(Error::validation(
        "window",
        "corner and side must be dyadic rationals so the window can be tiled by dyadic cubes",
    ))
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_sides() {
        assert!(Cube::new([0.0, 0.0], 0.0).is_err());
        assert!(Cube::new([0.0, 0.0], -1.0).is_err());
        assert!(Cube::new([0.0, f64::NAN], 1.0).is_err());
        assert!(Cube::new([0.0, 0.0], f64::INFINITY).is_err());
    }

    #[test]
    fn volume_and_diameter() {
        let q = Cube::new([1.0, 2.0], 0.5).unwrap();
        assert_eq!(q.volume(), 0.25);
        assert!((q.diam() - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let q3: Cube<3> = Cube::new([0.0; 3], 2.0).unwrap();
        assert_eq!(q3.volume(), 8.0);
    }

    #[test]
    fn set_distances() {
        let a = Cube::new([0.0, 0.0], 1.0).unwrap();
        let b = Cube::new([2.0, 0.0], 1.0).unwrap();
        assert_eq!(a.distance_to_cube(&b), 1.0);
        let c = Cube::new([2.0, 2.0], 1.0).unwrap();
        assert!((a.distance_to_cube(&c) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.distance_to_point(&[0.5, 0.5]), 0.0);
        assert!((a.farthest_distance(&[0.0, 0.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn roots_tile_window() {
        let w = Cube::new([-1.0, -1.0], 3.0).unwrap();
        let roots = dyadic_roots(&w).unwrap();
        assert_eq!(roots.len(), 9);
        assert!(roots.iter().all(|r| r.level == 0));
        let w = Cube::new([-4.0, -4.0], 8.0).unwrap();
        let roots = dyadic_roots(&w).unwrap();
        assert_eq!(roots.len(), 4);
        assert_eq!(roots[0].side(), 4.0);
        assert!(dyadic_roots(&Cube::new([0.1, 0.0], 1.0).unwrap()).is_err());
    }

    #[test]
    fn parent_contains_child() {
        let q = DyadicCube::new(3, [-5i64, 7]);
        for c in q.children() {
            assert_eq!(c.parent(), q);
            assert!(q.contains(&c));
            assert!(q.to_cube().contains_cube(&c.to_cube()));
        }
    }

    proptest! {
        #[test]
        fn dyadic_cubes_nested_or_disjoint(
            l1 in 0i32..6, l2 in 0i32..6,
            i1 in -40i64..40, j1 in -40i64..40,
            i2 in -40i64..40, j2 in -40i64..40,
        ) {
            let a = DyadicCube::new(l1, [i1, j1]);
            let b = DyadicCube::new(l2, [i2, j2]);
            let (ca, cb) = (a.to_cube(), b.to_cube());
            let nested = ca.contains_cube(&cb) || cb.contains_cube(&ca);
            prop_assert!(nested || !ca.interiors_meet(&cb));
            prop_assert_eq!(nested, a.contains(&b) || b.contains(&a));
        }

        #[test]
        fn parent_contains(l in -3i32..8, i in -1000i64..1000, j in -1000i64..1000) {
            let q = DyadicCube::new(l, [i, j]);
            prop_assert!(q.parent().to_cube().contains_cube(&q.to_cube()));
        }
    }
}
