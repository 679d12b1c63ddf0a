use std::collections::BTreeMap;
use std::path::Path;

use bmo_core::approximation::{approximation_driver, DriverOptions, Scheme};
use bmo_core::epsdelta::scan_domain;
use bmo_core::extension::{ExtensionOptions, Extender};
use bmo_core::geometry::{build_domain, DomainModel, OpenSet};
use bmo_core::gridfield::{sample, write_grid, GridFunction};
use bmo_core::oracle::{exhaustive_sup, Functional, DEFAULT_MAX_CUBES};
use bmo_core::oscillation::{bmo_norm, bmo_norm_with, gamma_curve, omega_curve, Measure, NormSettings};
use bmo_core::scenarios::{scale_dependence, strip_probe, LengthRule, ScaleOptions, StripProbeOptions};
use bmo_core::whitney::{default_finest_level, whitney_decompose_auto};
use bmo_core::{Error, Result};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{num, print_json, write_csv, write_json};
use crate::svg;

/// Extra refinement levels tried when the residue is too large.
const EXTRA_LEVELS: i32 = 4;

fn domain(cfg: &ExperimentConfig) -> Result<DomainModel> {
    build_domain(&cfg.domain_spec()?)
}

/// Domain, sampled function and `λ`, with `4h < λ < window side`.
fn setup(cfg: &ExperimentConfig) -> Result<(DomainModel, GridFunction, f64)> {
    let d = domain(cfg)?;
    let h = cfg.resolution()?;
    let lambda = cfg.lambda();
    check_lambda(lambda, h, d.window().side())?;
    let f = sample(&cfg.function_spec()?, &d, h)?;
    Ok((d, f, lambda))
}

fn check_lambda(lambda: f64, h: f64, side: f64) -> Result<()> {
    if !(lambda > 4.0 * h && lambda < side) {
        return Err(Error::validation(
            "lambda",
            format!("need 4h < λ < window side, i.e. {} < λ < {side}, got {lambda}", 4.0 * h),
        ));
    }
    Ok(())
}

fn measure_field(m: Measure) -> String {
    m.to_string()
}

pub fn whitney(cfg: &ExperimentConfig, open: OpenSet, out: &Path) -> Result<()> {
    let d = domain(cfg)?;
    let h = cfg.resolution()?;
    let start = default_finest_level(h);
    let w = whitney_decompose_auto(&d, open, start, start + EXTRA_LEVELS)?;
    let mut levels: BTreeMap<i32, usize> = BTreeMap::new();
    for c in w.cubes() {
        *levels.entry(c.level).or_default() += 1;
    }
    let summary = json!({
        "domain": d.name(),
        "open": w.open,
        "window": w.window,
        "root_level": w.root_level,
        "finest_level": w.finest_level,
        "cubes": w.len(),
        "residue_cells": w.residue().len(),
        "accepted_volume": w.accepted_volume,
        "residue_volume": w.residue_volume,
        "residue_fraction": w.residue_fraction(),
        "cubes_per_level": levels.iter().map(|(l, n)| json!({"level": l, "side": 2f64.powi(-l), "count": n})).collect::<Vec<_>>(),
    });
    write_json(&out.join("whitney.json"), &summary)?;
    write_csv(
        &out.join("whitney_cubes.csv"),
        &["x", "y", "side", "clearance"],
        (0..w.len()).map(|id| {
            let q = w.cube(id);
            [q.lo(0), q.lo(1), q.side(), w.clearance(id)].map(|v| v.to_string())
        }),
    )?;
    std::fs::write(out.join("whitney.svg"), svg::whitney(&d, &w))?;
    print_json(&summary)
}

pub fn norm(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (d, f, lambda) = setup(cfg)?;
    let settings = NormSettings {
        mode: cfg.mode.unwrap_or_default(),
        ..NormSettings::default()
    };
    let report = bmo_norm_with(&f, &d, lambda, settings)?;
    write_json(&out.join("norm.json"), &report)?;
    print_json(&report)
}

pub fn omega(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (d, f, lambda) = setup(cfg)?;
    let ts = cfg.ts.clone().unwrap_or_else(|| vec![lambda / 4.0, lambda / 2.0, lambda]);
    let curve = omega_curve(&f, &d, &ts)?;
    write_csv(
        &out.join("omega.csv"),
        &["t", "omega"],
        curve.iter().map(|(t, m)| [t.to_string(), measure_field(*m)]),
    )?;
    print_json(&curve.iter().map(|(t, m)| json!({"t": t, "omega": m})).collect::<Vec<_>>())
}

pub fn gamma(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (d, f, lambda) = setup(cfg)?;
    let betas = cfg.betas.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]);
    let curve = gamma_curve(&f, &d, &betas, lambda)?;
    write_csv(
        &out.join("gamma.csv"),
        &["beta", "gamma"],
        curve.iter().map(|(b, m)| [b.to_string(), measure_field(*m)]),
    )?;
    print_json(&curve.iter().map(|(b, m)| json!({"beta": b, "gamma": m})).collect::<Vec<_>>())
}

pub fn extend(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (d, f, lambda) = setup(cfg)?;
    let mut opts = ExtensionOptions::new(lambda);
    if let Some(c) = cfg.c_n {
        opts.c_n = c;
    }
    let ext = Extender::new(&d, *f.grid(), &opts)?;
    let smooth = cfg.smooth.unwrap_or(true);
    let r = if smooth { ext.smooth(&f)? } else { ext.step(&f)? };

    let restriction_mismatches = (0..f.grid().len())
        .filter(|&k| f.mask()[k] && r.extended.values()[k] != f.values()[k])
        .count();
    let input_norm = bmo_norm(&f, &d, lambda)?.total;
    let extended_norm = r.norm(lambda, NormSettings::default())?.total;
    let doc = json!({
        "lambda": r.lambda,
        "c_n": r.c_n,
        "smoothed": smooth,
        "summary": ext.summary(),
        "input_sup": f.sup_norm(),
        "extended_sup": r.extended.sup_norm(),
        "restriction_mismatches": restriction_mismatches,
        "input_norm": input_norm,
        "extended_norm": extended_norm,
        "norm_ratio": if input_norm > 0.0 { Some(extended_norm / input_norm) } else { None },
        "support_radius": r.support_radius(),
        "zero_region_cubes": r.zero_region.len(),
    });
    write_json(&out.join("extend.json"), &doc)?;
    write_grid(&r.extended, std::io::BufWriter::new(std::fs::File::create(out.join("extended.grid"))?))?;
    print_json(&doc)
}

pub fn approximate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (d, f, lambda) = setup(cfg)?;
    let scheme = cfg.scheme.unwrap_or(Scheme::Lipschitz);
    let opts = DriverOptions {
        steps: cfg.steps.unwrap_or(5),
        start: cfg.start,
        seed: cfg.seed.unwrap_or(0),
        ..DriverOptions::default()
    };
    let curve = approximation_driver(&f, &d, lambda, scheme, &opts)?;
    let name = serde_json::to_value(scheme)?.as_str().unwrap_or_default().to_string();
    write_csv(
        &out.join("approx.csv"),
        &["scheme", "index_or_param", "bmo_error", "sup_norm", "lip_const"],
        curve.points.iter().map(|p| {
            [name.clone(), p.parameter.to_string(), p.error.to_string(), p.sup_norm.to_string(), p.lip.to_string()]
        }),
    )?;
    write_json(&out.join("approx.json"), &curve)?;
    print_json(&curve)
}

pub fn check_eps_delta(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let d = domain(cfg)?;
    let h = cfg.resolution()?;
    let eps = cfg.eps.unwrap_or(0.1);
    let delta = cfg.delta.unwrap_or(2.0);
    let report = scan_domain(&d, eps, delta, cfg.pairs.unwrap_or(64), cfg.seed.unwrap_or(0), h)?;
    write_csv(
        &out.join("witnesses.csv"),
        &["x", "y", "result", "arclength", "bound", "clearance_margin"],
        report.witnesses.iter().map(|r| {
            [
                format!("{} {}", r.x[0], r.x[1]),
                format!("{} {}", r.y[0], r.y[1]),
                r.label().to_string(),
                num(r.arclength()),
                r.bound.to_string(),
                num(r.clearance_margin()),
            ]
        }),
    )?;
    std::fs::write(out.join("eps_delta.svg"), svg::eps_delta(&d, &report.witnesses))?;
    let doc = json!({
        "domain": d.name(),
        "eps": report.eps,
        "delta": report.delta,
        "h": report.h,
        "samples": report.samples,
        "failures": report.failures,
        "resolution_limited": report.resolution_limited,
        "failure_rate": report.failure_rate,
    });
    write_json(&out.join("eps_delta.json"), &report)?;
    print_json(&doc)
}

pub fn example(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    match cfg.which.unwrap_or(1) {
        1 => {
            let defaults = StripProbeOptions::default();
            let opts = StripProbeOptions {
                h: cfg.resolution.unwrap_or(defaults.h),
                lambda: cfg.lambda.unwrap_or(defaults.lambda),
                window: cfg.window.or(defaults.window),
                ns: cfg.ns.clone().unwrap_or(defaults.ns.clone()),
                ..defaults
            };
            let rule = cfg.ln.unwrap_or(LengthRule::Constant);
            let r = strip_probe(rule, &opts)?;
            write_csv(
                &out.join("example1.csv"),
                &["n", "scale", "sup_average", "ratio"],
                r.rows.iter().map(|row| {
                    [row.n.to_string(), row.scale.to_string(), row.sup_average.to_string(), row.ratio.to_string()]
                }),
            )?;
            let doc = json!({ "report": r, "growth": r.growth() });
            write_json(&out.join("example1.json"), &doc)?;
            print_json(&doc)
        }
        2 => {
            let defaults = ScaleOptions::default();
            let opts = ScaleOptions {
                h: cfg.resolution.unwrap_or(defaults.h),
                lambda: cfg.lambda.unwrap_or(defaults.lambda),
                betas: cfg.betas.clone().unwrap_or(defaults.betas.clone()),
                ..defaults
            };
            let r = scale_dependence(&opts)?;
            write_csv(
                &out.join("example2.csv"),
                &["groups", "total", "average_part", "total_small", "average_part_small"],
                r.rows.iter().map(|row| {
                    [
                        row.groups.to_string(),
                        row.total.to_string(),
                        row.average_part.to_string(),
                        row.total_small.to_string(),
                        row.average_part_small.to_string(),
                    ]
                }),
            )?;
            write_csv(
                &out.join("example2_gamma.csv"),
                &["beta", "gamma"],
                r.gamma.iter().map(|(b, m)| [b.to_string(), measure_field(*m)]),
            )?;
            write_json(&out.join("example2.json"), &r)?;
            print_json(&r)
        }
        w => Err(Error::validation("which", format!("expected 1 or 2, got {w}"))),
    }
}

pub fn oracle_compare(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let (d, f, lambda) = setup(cfg)?;
    let functional = match cfg.functional.as_deref().unwrap_or("bmo-norm") {
        "bmo-norm" => Functional::BmoNorm {
            lambda,
            mode: cfg.mode.unwrap_or_default(),
        },
        "omega" => Functional::Omega { t: cfg.t.unwrap_or(lambda) },
        other => return Err(Error::validation("functional", format!("unknown functional `{other}`"))),
    };
    let report = exhaustive_sup(&f, &d, functional, cfg.max_cubes.unwrap_or(DEFAULT_MAX_CUBES))?;
    write_json(&out.join("oracle.json"), &report)?;
    print_json(&report)
}
