use serde::Serialize;

use super::WhitneyDecomposition;
use crate::error::{Error, Result};
use crate::geometry::{dyadic_side, Cube, OpenSet};

/// Default search radius for a matching cube, in units of `ℓ(Q)`.
pub const DEFAULT_RADIUS_FACTOR: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchOptions {
    pub lambda: f64,
    /// Candidates must have centre distance at most `radius_factor·ℓ(Q)`.
    pub radius_factor: f64,
}

impl MatchOptions {
    pub fn new(lambda: f64) -> Self {
        MatchOptions {
            lambda,
            radius_factor: DEFAULT_RADIUS_FACTOR,
        }
    }
}

/// Partial map from small exterior Whitney cubes to interior Whitney cubes.
#[derive(Clone, Debug, Serialize)]
pub struct CubeMatching {
    pub lambda: f64,
    pub radius_factor: f64,
    /// `(exterior id, interior id)`, ordered by exterior id.
    pub pairs: Vec<(u32, u32)>,
    /// Exterior cubes with `ℓ ≤ λ` and no candidate in range.
    pub unmatched: Vec<u32>,
    /// Realised `sup dist(Q, Q*)/ℓ(Q)` over the pairs (set distance).
    pub distance_constant: f64,
    /// Realised `sup |c(Q) − c(Q*)|/ℓ(Q)` over the pairs.
    pub center_constant: f64,
}

impl CubeMatching {
    pub fn partner(&self, exterior: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&(exterior as u32), |p| p.0)
            .ok()
            .map(|i| self.pairs[i].1 as usize)
    }

    pub fn eligible_count(&self) -> usize {
        self.pairs.len() + self.unmatched.len()
    }
}

/// For every `Q ∈ E′` with `ℓ(Q) ≤ λ`, the cube of `E` with side in
/// `[ℓ(Q), 4ℓ(Q)]` nearest by centre distance; ties go to the smaller
/// `(level, index)`.
pub fn match_cubes(
    exterior: &WhitneyDecomposition,
    interior: &WhitneyDecomposition,
    opts: MatchOptions,
) -> Result<CubeMatching> {
    if !(opts.lambda > 0.0 && opts.lambda.is_finite()) {
        return Err(Error::validation("lambda", "must be positive"));
    }
    if !(opts.radius_factor > 0.0) {
        return Err(Error::validation("radius_factor", "must be positive"));
    }
    if exterior.open != OpenSet::Exterior || interior.open != OpenSet::Interior || exterior.window != interior.window
    {
        return Err(Error::validation(
            "decompositions",
            "need the exterior and interior decompositions over the same window",
        ));
    }
    let index = interior.level_index();
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    let mut distance_constant: f64 = 0.0;
    let mut center_constant: f64 = 0.0;

    for (qi, q) in exterior.cubes().iter().enumerate() {
        let ell = q.side();
        if ell > opts.lambda {
            continue;
        }
        let cq = q.to_cube();
        let center = cq.center();
        let radius = opts.radius_factor * ell;
        // Best candidate: (distance, level, index, id).
        let mut best: Option<(f64, i32, [i64; 2], u32)> = None;
        for level in [q.level, q.level - 1, q.level - 2] {
            let Some(cells) = index.get(&level) else { continue };
            let s = dyadic_side(level);
            let ci = (center[0] / s).floor() as i64;
            let cj = (center[1] / s).floor() as i64;
            let max_ring = (radius / s).ceil() as i64 + 1;
            for r in 0..=max_ring {
                // Every centre in ring r is at least (r − 1/2)·s away.
                let lower = (r as f64 - 0.5).max(0.0) * s;
                if lower > radius || best.is_some_and(|b| lower > b.0) {
                    break;
                }
                let mut visit = |a: i64, b: i64| {
                    if let Some(&id) = cells.get(&[a, b]) {
                        let cand = interior.cube(id as usize);
                        let dist = cq.center_distance(&cand);
                        if dist > radius {
                            return;
                        }
                        let key = (dist, level, [a, b], id);
                        let better = match best {
                            None => true,
                            Some(b) => (key.0, key.1, key.2) < (b.0, b.1, b.2),
                        };
                        if better {
                            best = Some(key);
                        }
                    }
                };
                if r == 0 {
                    visit(ci, cj);
                    continue;
                }
                for a in ci - r..=ci + r {
                    visit(a, cj - r);
                    visit(a, cj + r);
                }
                for b in cj - r + 1..cj + r {
                    visit(ci - r, b);
                    visit(ci + r, b);
                }
            }
        }
        match best {
            Some((dist, _, _, id)) => {
                let partner: Cube<2> = interior.cube(id as usize);
                distance_constant = distance_constant.max(cq.distance_to_cube(&partner) / ell);
                center_constant = center_constant.max(dist / ell);
                pairs.push((qi as u32, id));
            }
            None => unmatched.push(qi as u32),
        }
    }
    if !unmatched.is_empty() {
        log::warn!(
            "{} of {} small exterior cubes have no matching cube within {}·ℓ(Q)",
            unmatched.len(),
            pairs.len() + unmatched.len(),
            opts.radius_factor
        );
    }
    Ok(CubeMatching {
        lambda: opts.lambda,
        radius_factor: opts.radius_factor,
        pairs,
        unmatched,
        distance_constant,
        center_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, DomainKind, DomainSpec};
    use crate::whitney::whitney_decompose_auto;

    fn both(kind: DomainKind, window: Option<Cube<2>>, finest: i32) -> (WhitneyDecomposition, WhitneyDecomposition) {
        let mut spec = DomainSpec::new(kind);
        spec.window = window;
        let d = build_domain(&spec).unwrap();
        (
            whitney_decompose_auto(&d, OpenSet::Exterior, finest, finest + 4).unwrap(),
            whitney_decompose_auto(&d, OpenSet::Interior, finest, finest + 4).unwrap(),
        )
    }

    /// Exhaustive reference: scan every interior cube.
    fn brute(ext: &WhitneyDecomposition, int: &WhitneyDecomposition, qi: usize, radius_factor: f64) -> Option<u32> {
        let q = ext.cube(qi);
        let mut best: Option<(f64, i32, [i64; 2], u32)> = None;
        for j in 0..int.len() {
            let c = int.cube(j);
            let ratio = c.side() / q.side();
            if !(1.0..=4.0).contains(&ratio) {
                continue;
            }
            let d = q.center_distance(&c);
            if d > radius_factor * q.side() {
                continue;
            }
            let dq = int.dyadic(j);
            let key = (d, dq.level, dq.index, j as u32);
            if best.is_none_or(|b| (key.0, key.1, key.2) < (b.0, b.1, b.2)) {
                best = Some(key);
            }
        }
        best.map(|b| b.3)
    }

    #[test]
    fn half_plane_matches_nearby() {
        let w = Cube::new([-4.0, -4.0], 8.0).unwrap();
        let (ext, int) = both(DomainKind::HalfPlane { offset: 0.0 }, Some(w), 9);
        let m = match_cubes(&ext, &int, MatchOptions::new(1.0)).unwrap();
        assert!(m.unmatched.is_empty());
        for &(q, s) in &m.pairs {
            let (a, b) = (ext.cube(q as usize), int.cube(s as usize));
            assert!(a.side() <= b.side() && b.side() <= 4.0 * a.side());
            assert!(a.distance_to_cube(&b) <= m.distance_constant * a.side() + 1e-12);
            assert_eq!(Some(s), brute(&ext, &int, q as usize, DEFAULT_RADIUS_FACTOR));
        }
        // [1,2]x[0,1] meets the boundary at distance 1 < diam, so check one of its children.
        let q = ext.locate(&[1.5, 0.5]).unwrap();
        let partner = m.partner(q).unwrap();
        assert!(ext.cube(q).distance_to_cube(&int.cube(partner)) <= 6.0 * ext.cube(q).side());
    }

    #[test]
    fn small_lambda_gives_empty_matching() {
        let (ext, int) = both(DomainKind::Square { corner: [0.0, 0.0], side: 1.0 }, None, 8);
        let m = match_cubes(&ext, &int, MatchOptions::new(1e-6)).unwrap();
        assert!(m.pairs.is_empty() && m.unmatched.is_empty());
    }

    #[test]
    fn deterministic() {
        let (ext, int) = both(DomainKind::Disk { center: [0.0, 0.0], radius: 1.0 }, None, 8);
        let a = match_cubes(&ext, &int, MatchOptions::new(0.5)).unwrap();
        let b = match_cubes(&ext, &int, MatchOptions::new(0.5)).unwrap();
        assert_eq!(a.pairs, b.pairs);
    }

    #[test]
    fn strips_leave_deep_gap_cubes_unmatched() {
        let (ext, int) = both(
            DomainKind::StripsExample1 { count: None, lengths: vec![1.0; 24] },
            None,
            8,
        );
        let m = match_cubes(&ext, &int, MatchOptions::new(0.5)).unwrap();
        assert!(m.pairs.iter().all(|&(q, s)| {
            let (a, b) = (ext.cube(q as usize), int.cube(s as usize));
            a.side() <= b.side() && b.side() <= 4.0 * a.side()
        }));
        // Strip n only holds interior cubes of side below 1/((2√2 + 1)n), while
        // exterior cubes beside it grow to the gap scale; from the tip the
        // half-plane is a unit away, beyond 64ℓ once n is in the teens. None of
        // the lower strips may produce unmatched cubes.
        assert!(!m.unmatched.is_empty());
        let tall = m.unmatched.iter().map(|&q| ext.cube(q as usize).center()[1]).fold(f64::INFINITY, f64::min);
        let y8 = 7.0 + (1..=7).map(|n| 1.0 / n as f64).sum::<f64>();
        assert!(tall > y8, "first unmatched cube at height {tall}");
    }
}
