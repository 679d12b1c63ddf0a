use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::dist;
use crate::gridfield::GridFunction;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzEstimate {
    /// Largest quotient over horizontal and vertical grid edges.
    pub local: f64,
    /// Largest quotient over the sampled long-range pairs.
    pub long_range: f64,
    pub lipschitz: f64,
    pub sup: f64,
    /// `sup + lipschitz`.
    pub bounded: f64,
}

/// Measured Lipschitz constant of `f` over the cells selected by `include`:
/// forward differences between neighbouring cells plus `pairs` random pairs.
pub fn lipschitz_estimate(
    f: &GridFunction,
    include: impl Fn(usize) -> bool,
    pairs: usize,
    seed: u64,
) -> LipschitzEstimate {
    let g = f.grid();
    let v = f.values();
    let mut local: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let mut cells = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.index(i, j);
            if !include(k) {
                continue;
            }
            cells.push(k);
            sup = sup.max(v[k].abs());
            if i + 1 < g.nx && include(k + 1) {
                local = local.max((v[k + 1] - v[k]).abs() / g.h);
            }
            if j + 1 < g.ny && include(k + g.nx) {
                local = local.max((v[k + g.nx] - v[k]).abs() / g.h);
            }
        }
    }
    let mut long_range: f64 = 0.0;
    if cells.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pairs {
            let a = cells[rng.gen_range(0..cells.len())];
            let b = cells[rng.gen_range(0..cells.len())];
            if a != b {
                let r = dist(&g.center_of(a), &g.center_of(b));
                long_range = long_range.max((v[a] - v[b]).abs() / r);
            }
        }
    }
    let lipschitz = local.max(long_range);
    LipschitzEstimate {
        local,
        long_range,
        lipschitz,
        sup,
        bounded: sup + lipschitz,
    }
}
