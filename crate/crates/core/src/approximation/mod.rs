//! Approximation constructions: the cutoffs `ψ_k` and `h_j`, truncation,
//! grid smoothing, the bounded approximant built from cube averages, and the
//! driver that turns a scheme into an error curve.

mod cutoff;
mod driver;

use rayon::prelude::*;

pub use cutoff::{big_phi, big_phi_log, h_j_of_distance, log_alpha, phi_lambda, psi_k_at, CutoffSpec, Weight, PHI_RTOL};
pub use driver::{approximant, approximation_driver, ApproxCurve, ApproxPoint, DriverOptions, Scheme};

use crate::error::{Error, Result};
use crate::geometry::{Cube, DomainModel};
use crate::gridfield::{CellBlock, Grid, GridFunction};
use crate::numeric::CompensatedSum;
use crate::oscillation::{grid_sides, snap_up, CubeCertifier, Lattice};

/// `f^t = max(min(f, t), −t)`.
pub fn truncate(f: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t > 0.0) {
        return Err(Error::validation("t", "must be positive"));
    }
    Ok(f.map(|v| v.clamp(-t, t)))
}

/// `(⨏_Q|fg − f_Q g_Q|, ‖g‖_∞ ⨏_Q|f − f_Q| + 2|f_Q| ⨏_Q|g − g_Q|)`.
pub fn leibniz_bound_check(f: &GridFunction, g: &GridFunction, q: &Cube<2>) -> Result<(f64, f64)> {
    if f.grid() != g.grid() {
        return Err(Error::validation("g", "grid differs from f"));
    }
    let b = f.cells(q)?;
    g.cells(q)?;
    let (fq, gq) = (f.block_mean(&b), g.block_mean(&b));
    let (fv, gv) = (f.values(), g.values());
    let mut lhs = CompensatedSum::default();
    for k in block_indices(f.grid(), &b) {
        lhs.add((fv[k] * gv[k] - fq * gq).abs());
    }
    let lhs = lhs.total() / b.count() as f64;
    let rhs = g.sup_norm() * f.block_deviation(&b, fq) + 2.0 * fq.abs() * g.block_deviation(&b, gq);
    Ok((lhs, rhs))
}

fn block_indices<'a>(grid: &'a Grid, b: &'a CellBlock) -> impl Iterator<Item = usize> + 'a {
    b.rows.clone().flat_map(move |j| b.cols.clone().map(move |i| grid.index(i, j)))
}

/// Inclusive prefix sums along each row, one extra leading zero per row.
fn row_prefix(grid: &Grid, v: impl Fn(usize) -> f64) -> Vec<f64> {
    let stride = grid.nx + 1;
    let mut out = vec![0.0; stride * grid.ny];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            out[j * stride + i + 1] = out[j * stride + i] + v(grid.index(i, j));
        }
    }
    out
}

/// Grid smoothing: means over tiles of side `tile`, then the average over
/// the ball of radius `radius` around each cell, both over masked cells only.
///
/// With `restricted`, the support of `f` must keep a distance `tile·√2` from
/// the boundary, which keeps the output supported away from it.
pub fn grid_smooth(f: &GridFunction, d: &DomainModel, tile: f64, radius: f64, restricted: bool) -> Result<GridFunction> {
    let grid = *f.grid();
    let h = grid.h;
    let t = (tile / h).round();
    if !(t >= 4.0) || (t * h - tile).abs() > 1e-9 * h {
        return Err(Error::validation("tile", format!("must be a multiple of h at least 4h = {}", 4.0 * h)));
    }
    if !(radius >= 0.0) {
        return Err(Error::validation("radius", "must be nonnegative"));
    }
    let t = t as usize;
    let (v, mask) = (f.values(), f.mask());
    if restricted {
        let margin = tile * std::f64::consts::SQRT_2;
        if let Some(k) = (0..grid.len()).find(|&k| mask[k] && v[k] != 0.0 && d.distance(&grid.center_of(k)) <= margin) {
            return Err(Error::validation(
                "support",
                format!("f is nonzero at {:?}, within {margin} of the boundary", grid.center_of(k)),
            ));
        }
    }

    let (tx, ty) = (grid.nx.div_ceil(t), grid.ny.div_ceil(t));
    let mut sums = vec![CompensatedSum::default(); tx * ty];
    let mut counts = vec![0usize; tx * ty];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if mask[k] {
                let tk = (j / t) * tx + i / t;
                sums[tk].add(v[k]);
                counts[tk] += 1;
            }
        }
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s.total() / c as f64 } else { 0.0 }).collect();
    let step: Vec<f64> = (0..grid.len())
        .map(|k| {
            if !mask[k] {
                return 0.0;
            }
            let (i, j) = (k % grid.nx, k / grid.nx);
            means[(j / t) * tx + i / t]
        })
        .collect();
    let (lo, hi) = (0..grid.len())
        .filter(|&k| mask[k])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(step[k]), hi.max(step[k])));

    let sum_prefix = row_prefix(&grid, |k| step[k]);
    let count_prefix = row_prefix(&grid, |k| if mask[k] { 1.0 } else { 0.0 });
    let stride = grid.nx + 1;
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row_out)| {
        for (i, o) in row_out.iter_mut().enumerate() {
            let k = grid.index(i, j);
            if !mask[k] {
                continue;
            }
            let x = grid.center(i, j);
            let rows = grid.span(x[1] - radius, x[1] + radius + 1e-12 * h, 1);
            let (mut s, mut c) = (0.0, 0.0);
            for jj in rows.start.max(0)..rows.end.min(grid.ny as isize) {
                let dy = grid.origin[1] + (jj as f64 + 0.5) * h - x[1];
                let w2 = radius * radius - dy * dy;
                if w2 < 0.0 {
                    continue;
                }
                let w = w2.sqrt();
                let cols = grid.span(x[0] - w, x[0] + w + 1e-12 * h, 0);
                let (a, b) = (cols.start.max(0) as usize, cols.end.min(grid.nx as isize).max(0) as usize);
                if a >= b {
                    continue;
                }
                let base = jj as usize * stride;
                s += sum_prefix[base + b] - sum_prefix[base + a];
                c += count_prefix[base + b] - count_prefix[base + a];
            }
            *o = if c > 0.0 { (s / c).clamp(lo, hi) } else { step[k] };
        }
    });
    GridFunction::new(grid, out, mask.to_vec())
}

/// Output of [`bounded_approximant`].
#[derive(Clone, Debug)]
pub struct BoundedApproximant {
    pub ell: f64,
    /// `C_ℓ = sup |f|_Q` over `2Q ⊂ Ω`, `ℓ(Q) ≥ ℓ`.
    pub c_ell: f64,
    /// `f̃(x) = ⨏_{Q_x} f`.
    pub f_tilde: GridFunction,
    /// `f̃` clamped to `±C_ℓ`.
    pub g: GridFunction,
}

/// Summed-area table with one leading zero row and column.
struct Sat {
    stride: usize,
    data: Vec<f64>,
}

impl Sat {
    fn new(grid: &Grid, v: impl Fn(usize) -> f64) -> Sat {
        let stride = grid.nx + 1;
        let mut data = vec![0.0; stride * (grid.ny + 1)];
        for j in 0..grid.ny {
            let mut row = 0.0;
            for i in 0..grid.nx {
                row += v(grid.index(i, j));
                data[(j + 1) * stride + i + 1] = data[j * stride + i + 1] + row;
            }
        }
        Sat { stride, data }
    }

    /// Sum over cells `[i0, i1) × [j0, j1)`.
    fn sum(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
        let s = self.stride;
        self.data[j1 * s + i1] - self.data[j0 * s + i1] - self.data[j1 * s + i0] + self.data[j0 * s + i0]
    }
}

/// The bounded approximant of scale `ell`.
///
/// `Q_x` is the `(2m+1)×(2m+1)` cell block centred at the cell of `x` with
/// `m = ⌊ℓ(x)/2h⌋`, `ℓ(x) = min(d(x)/2√2, ℓ)`. The `C_ℓ` family holds the
/// lattice cubes with `2Q ⊂ Ω` and `ℓ(Q) ≥ ℓ`, together with the blocks
/// `Q_x` of full side, so that `g = f̃` wherever `d(x) ≥ 2√2·ℓ`.
pub fn bounded_approximant(f: &GridFunction, d: &DomainModel, ell: f64, lambda: f64) -> Result<BoundedApproximant> {
    let limit = lambda / (8.0 * std::f64::consts::SQRT_2);
    if !(ell > 0.0 && ell < limit) {
        return Err(Error::validation("ell", format!("need 0 < ℓ < λ/(8√2) = {limit}, got {ell}")));
    }
    let grid = *f.grid();
    let h = grid.h;
    let (v, mask) = (f.values(), f.mask());
    let sat_f = Sat::new(&grid, |k| if mask[k] { v[k] } else { 0.0 });
    let sat_abs = Sat::new(&grid, |k| if mask[k] { v[k].abs() } else { 0.0 });
    let sat_n = Sat::new(&grid, |k| if mask[k] { 1.0 } else { 0.0 });
    let deep = 2.0 * std::f64::consts::SQRT_2 * ell;

    // (f̃, ⨏|f| over Q_x when Q_x has full side, else -1)
    let per_cell: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !mask[k] {
                return (0.0, -1.0);
            }
            let (i, j) = (k % grid.nx, k / grid.nx);
            let dist = d.distance(&grid.center(i, j));
            let side = (dist / (2.0 * std::f64::consts::SQRT_2)).min(ell);
            let m = (side / (2.0 * h) + 1e-9).floor() as usize;
            let (i0, i1) = (i.saturating_sub(m), (i + m + 1).min(grid.nx));
            let (j0, j1) = (j.saturating_sub(m), (j + m + 1).min(grid.ny));
            let n = sat_n.sum(i0, i1, j0, j1);
            let mean = sat_f.sum(i0, i1, j0, j1) / n;
            let abs = if dist >= deep { sat_abs.sum(i0, i1, j0, j1) / n } else { -1.0 };
            (mean, abs)
        })
        .collect();

    let cert = CubeCertifier::new(d, grid);
    let lo = snap_up(&grid, ell.max(4.0 * h));
    let w = grid.window();
    let mut sides = grid_sides(&grid, lo, w.side());
    if sides.first().is_none_or(|&s| (s - lo).abs() > 1e-9 * h) {
        sides.insert(0, lo);
    }
    sides.retain(|&s| s <= w.side());
    let family = Lattice {
        window: w,
        sides,
        divisor: 4,
        snap: Some(h),
    }
    .enumerate(|q| cert.inside(&q.scaled(2.0)));
    let lattice_sup = (0..family.len())
        .into_par_iter()
        .map(|i| {
            let q = family.cube(i);
            let (cols, rows) = grid.cube_cells(&q).expect("lattice cubes lie in the window");
            let n = sat_n.sum(cols.start, cols.end, rows.start, rows.end);
            sat_abs.sum(cols.start, cols.end, rows.start, rows.end) / n
        })
        .reduce(|| -1.0, f64::max);
    let c_ell = per_cell.iter().map(|p| p.1).fold(lattice_sup, f64::max);
    if c_ell < 0.0 {
        return Err(Error::EmptyFamily(format!("no cube Q with 2Q inside the domain and side at least {ell}")));
    }
    let f_tilde = GridFunction::new(grid, per_cell.iter().map(|p| p.0).collect(), mask.to_vec())?;
    let g = f_tilde.map(|x| x.clamp(-c_ell, c_ell));
    Ok(BoundedApproximant { ell, c_ell, f_tilde, g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extension::lipschitz_estimate;
    use crate::geometry::{build_domain, DomainKind, DomainSpec};
    use crate::oscillation::{enumerate_cubes, mean_oscillation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> DomainModel {
        build_domain(&DomainSpec::new(DomainKind::Square { corner: [0.0, 0.0], side: 1.0 })).unwrap()
    }

    fn disk() -> DomainModel {
        build_domain(&DomainSpec::new(DomainKind::Disk { center: [0.0, 0.0], radius: 1.0 })).unwrap()
    }

    fn sample(d: &DomainModel, h: f64, f: impl Fn(&[f64; 2]) -> f64) -> GridFunction {
        let grid = Grid::for_window(d.window(), h).unwrap();
        GridFunction::from_fn(grid, GridFunction::domain_mask(&grid, d), f).unwrap()
    }

    #[test]
    fn t_phi_increasing() {
        let lambda = 0.7;
        let ts: Vec<f64> = (0..200).map(|i| lambda / 2.0 * (-(i as f64) * 0.1).exp()).collect();
        for w in ts.windows(2) {
            // ts descend, so t·φ must descend too.
            assert!(w[1] * phi_lambda(w[1], lambda) < w[0] * phi_lambda(w[0], lambda));
        }
    }

    #[test]
    fn truncation_clamps_and_reduces_oscillation() {
        let d = square();
        let f = sample(&d, 1.0 / 32.0, |p| (p[0] * 9.0).sin() * 3.0 + p[1] * 2.0);
        assert!(truncate(&f, 0.0).is_err());
        let big = truncate(&f, 10.0).unwrap();
        assert_eq!(big.values(), f.values());
        let t = 1.1;
        let ft = truncate(&f, t).unwrap();
        assert!(ft.sup_norm() <= t);
        let fam = enumerate_cubes(&d, 4.0 / 32.0, 1.0, 4).unwrap();
        for q in fam.iter() {
            assert!(mean_oscillation(&ft, &q).unwrap() <= mean_oscillation(&f, &q).unwrap());
        }
    }

    #[test]
    fn leibniz_trivial_cases_and_random_cubes() {
        let d = square();
        let h = 1.0 / 64.0;
        let f = sample(&d, h, |p| p[0] - 2.0 * p[1] * p[1]);
        let one = sample(&d, h, |_| 1.0);
        let q = Cube::new([0.25, 0.25], 0.5).unwrap();
        let (lhs, rhs) = leibniz_bound_check(&f, &one, &q).unwrap();
        assert!((lhs - mean_oscillation(&f, &q).unwrap()).abs() < 1e-12);
        assert!(lhs <= rhs + 1e-12);

        let c = sample(&d, h, |_| -3.0);
        let g = sample(&d, h, |p| psi_k_at(&[p[0] - 0.5, p[1] - 0.5], 1) * (p[0] * 4.0).cos());
        let (lhs, rhs) = leibniz_bound_check(&c, &g, &q).unwrap();
        let b = g.cells(&q).unwrap();
        assert!((lhs - 3.0 * g.block_deviation(&b, g.block_mean(&b))).abs() < 1e-12);
        assert!(lhs <= rhs + 1e-12);

        // Random step function on dyadic squares against a ψ_k cutoff.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let levels: Vec<f64> = (0..64).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let step = sample(&d, h, |p| levels[(p[0] * 8.0) as usize % 8 + 8 * ((p[1] * 8.0) as usize % 8)]);
        let psi = sample(&d, h, |p| psi_k_at(&[p[0] - 0.3, p[1] - 0.6], 1));
        for _ in 0..1000 {
            let cells = rng.gen_range(4..=64usize);
            let i = rng.gen_range(0..=64 - cells);
            let j = rng.gen_range(0..=64 - cells);
            let q = Cube::new([i as f64 * h, j as f64 * h], cells as f64 * h).unwrap();
            let (lhs, rhs) = leibniz_bound_check(&step, &psi, &q).unwrap();
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn smoothing_keeps_constants() {
        let d = disk();
        let f = sample(&d, 1.0 / 32.0, |_| 2.5);
        let g = grid_smooth(&f, &d, 0.25, 0.2, false).unwrap();
        assert!(g.values().iter().zip(g.mask()).all(|(&v, &m)| !m || v == 2.5));
        assert!(grid_smooth(&f, &d, 2.0 / 32.0, 0.1, false).is_err());
    }

    #[test]
    fn restricted_smoothing_rejects_support_near_boundary() {
        let d = square();
        let f = sample(&d, 1.0 / 64.0, |p| if (p[0] - 0.5).abs() < 0.1 && (p[1] - 0.5).abs() < 0.1 { 1.0 } else { 0.0 });
        assert!(grid_smooth(&f, &d, 0.125, 0.1, true).is_ok());
        assert!(grid_smooth(&f, &d, 20.0 / 64.0, 0.1, true).is_err());
    }

    #[test]
    fn smoothed_step_lipschitz_scales_inversely_with_radius() {
        let d = square();
        let h = 1.0 / 128.0;
        let f = sample(&d, h, |p| if p[0] < 0.5 { 0.0 } else { 1.0 });
        let lip = |r: f64| {
            let g = grid_smooth(&f, &d, 4.0 * h, r, false).unwrap();
            lipschitz_estimate(&g, |k| g.mask()[k], 0, 0).lipschitz
        };
        let (a, b) = (lip(0.05), lip(0.1));
        assert!(a.is_finite() && b.is_finite());
        let ratio = a / b;
        assert!((1.6..2.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bounded_approximant_properties() {
        let d = disk();
        let h = 1.0 / 64.0;
        let f = sample(&d, h, |p| (p[0] * 5.0).sin() + if p[1] > 0.0 { 1.0 } else { -1.0 });
        let m = f.sup_norm();
        let lambda = 1.0;
        let ell = 1.0 / 16.0;
        let a = bounded_approximant(&f, &d, ell, lambda).unwrap();
        assert!(a.c_ell <= m + 1e-12);
        assert!(a.g.sup_norm() <= a.c_ell);
        let deep = 2.0 * std::f64::consts::SQRT_2 * ell;
        let grid = *f.grid();
        for k in 0..grid.len() {
            if f.mask()[k] && d.distance(&grid.center_of(k)) > deep {
                assert_eq!(a.g.values()[k], a.f_tilde.values()[k]);
            }
        }
        assert!(bounded_approximant(&f, &d, lambda / 8.0, lambda).is_err());
    }

    #[test]
    fn bounded_approximant_of_constant() {
        let d = square();
        let f = sample(&d, 1.0 / 64.0, |_| -0.75);
        let a = bounded_approximant(&f, &d, 1.0 / 32.0, 0.5).unwrap();
        assert!((a.c_ell - 0.75).abs() < 1e-12);
        assert!(a.g.values().iter().zip(a.g.mask()).all(|(v, &m)| !m || (v + 0.75).abs() < 1e-12));
    }

    #[test]
    fn cutoff_sampling() {
        let d = square();
        let grid = Grid::for_window(d.window(), 1.0 / 32.0).unwrap();
        let h = CutoffSpec::HJ { j: 2, lambda: 1.0 }.sample(&d, &grid).unwrap();
        let centre = grid.cell_of(&[0.5, 0.5]).unwrap();
        assert_eq!(h.value(centre.0, centre.1), 1.0);
        assert!(h.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(CutoffSpec::PsiK { k: 0 }.sample(&d, &grid).is_err());
    }
}
