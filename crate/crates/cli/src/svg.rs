//! Static SVG 1.1 figures.

use std::fmt::Write as _;

use bmo_core::epsdelta::{Outcome, PairRecord};
use bmo_core::geometry::{Cube, DomainModel, Point};
use bmo_core::whitney::WhitneyDecomposition;

const SIZE: f64 = 800.0;
/// Raster cells per side for domain backgrounds.
const RASTER: usize = 200;

/// Window-to-canvas transform with the y axis pointing up.
struct View {
    window: Cube<2>,
    scale: f64,
}

impl View {
    fn new(window: Cube<2>) -> Self {
        View { window, scale: SIZE / window.side() }
    }

    fn x(&self, x: f64) -> f64 {
        (x - self.window.lo(0)) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        SIZE - (y - self.window.lo(1)) * self.scale
    }

    fn rect(&self, out: &mut String, q: &Cube<2>, style: &str) {
        let _ = writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" {style}/>"#,
            self.x(q.lo(0)),
            self.y(q.hi(1)),
            q.side() * self.scale,
            q.side() * self.scale
        );
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, "<title>{title}</title>");
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
}

/// Domain cells on a coarse raster, merged along rows.
fn domain_raster(out: &mut String, view: &View, d: &DomainModel) {
    let w = view.window;
    let step = w.side() / RASTER as f64;
    for j in 0..RASTER {
        let y = w.lo(1) + (j as f64 + 0.5) * step;
        let mut i = 0;
        while i < RASTER {
            let inside = |i: usize| d.inside(&[w.lo(0) + (i as f64 + 0.5) * step, y]);
            if !inside(i) {
                i += 1;
                continue;
            }
            let start = i;
            while i < RASTER && inside(i) {
                i += 1;
            }
            let _ = writeln!(
                out,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#dde6f0"/>"##,
                view.x(w.lo(0) + start as f64 * step),
                view.y(w.lo(1) + (j + 1) as f64 * step),
                (i - start) as f64 * step * view.scale,
                step * view.scale
            );
        }
    }
}

pub fn whitney(d: &DomainModel, w: &WhitneyDecomposition) -> String {
    let view = View::new(w.window);
    let mut out = String::new();
    header(&mut out, &format!("Whitney cubes of {}", d.name()));
    domain_raster(&mut out, &view, d);
    let levels: Vec<i32> = w.cubes().iter().map(|c| c.level).collect();
    let (lo, hi) = (levels.iter().min().copied().unwrap_or(0), levels.iter().max().copied().unwrap_or(0));
    for id in 0..w.len() {
        let t = if hi > lo { (levels[id] - lo) as f64 / (hi - lo) as f64 } else { 0.0 };
        let shade = (230.0 - 150.0 * t) as u8;
        let style = format!(r#"fill="rgb({shade},{shade},255)" fill-opacity="0.5" stroke="black" stroke-width="0.4""#);
        view.rect(&mut out, &w.cube(id), &style);
    }
    for r in w.residue() {
        view.rect(&mut out, &r.to_cube(), r##"fill="#e04040" stroke="none""##);
    }
    out.push_str("</svg>\n");
    out
}

fn polyline(out: &mut String, view: &View, path: &[Point], style: &str) {
    let pts: Vec<String> = path.iter().map(|p| format!("{:.3},{:.3}", view.x(p[0]), view.y(p[1]))).collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" {style}/>"#, pts.join(" "));
}

/// Domain raster with the witness pairs: the length ellipse of each pair,
/// the certified path of passing pairs and the chord of failing ones.
pub fn eps_delta(d: &DomainModel, witnesses: &[PairRecord]) -> String {
    let view = View::new(*d.window());
    let mut out = String::new();
    header(&mut out, &format!("Cigar witnesses on {}", d.name()));
    domain_raster(&mut out, &view, d);
    for r in witnesses {
        let c = [(r.x[0] + r.y[0]) / 2.0, (r.x[1] + r.y[1]) / 2.0];
        let focal = ((r.x[0] - r.y[0]).hypot(r.x[1] - r.y[1])) / 2.0;
        let a = r.bound / 2.0;
        let b = (a * a - focal * focal).max(0.0).sqrt();
        let angle = -(r.y[1] - r.x[1]).atan2(r.y[0] - r.x[0]).to_degrees();
        let _ = writeln!(
            out,
            r##"<ellipse cx="0" cy="0" rx="{:.3}" ry="{:.3}" transform="translate({:.3} {:.3}) rotate({angle:.3})" fill="none" stroke="#888888" stroke-width="0.5"/>"##,
            a * view.scale,
            b * view.scale,
            view.x(c[0]),
            view.y(c[1])
        );
        match &r.outcome {
            Outcome::Pass(cert) => polyline(&mut out, &view, &cert.path, r##"stroke="#208020" stroke-width="1""##),
            Outcome::Fail(_) => polyline(&mut out, &view, &[r.x, r.y], r##"stroke="#d02020" stroke-width="1.5""##),
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmo_core::geometry::{build_domain, DomainKind, DomainSpec, OpenSet};
    use bmo_core::whitney::whitney_decompose_auto;

    #[test]
    fn whitney_svg_is_well_formed() {
        let d = build_domain(&DomainSpec::new(DomainKind::Disk { center: [0.0, 0.0], radius: 1.0 })).unwrap();
        let w = whitney_decompose_auto(&d, OpenSet::Interior, 6, 10).unwrap();
        let s = whitney(&d, &w);
        assert!(s.starts_with("<?xml"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(s.matches("<rect").count() >= w.len());
    }
}
