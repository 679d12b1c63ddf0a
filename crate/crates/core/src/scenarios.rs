//! The two strip-domain pipelines: growth of cube averages along strips of
//! shrinking height, and the dependence of the local norm on its scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_domain, Cube, DomainKind, DomainModel, DomainSpec, OpenSet};
use crate::gridfield::{sample, TestFunctionSpec};
use crate::oscillation::{bmo_norm, gamma_curve, log_estimate_probe_at, Measure};
use crate::whitney::{default_finest_level, match_cubes, whitney_decompose_auto, MatchOptions};

/// Strip lengths `L_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthRule {
    /// `L_n = 1`.
    Constant,
    /// `L_n = (1 + log n)/n`, which is `O(log n/n)` and positive at `n = 1`.
    Logarithmic,
}

impl LengthRule {
    pub fn length(self, n: usize) -> f64 {
        match self {
            LengthRule::Constant => 1.0,
            LengthRule::Logarithmic => (1.0 + (n as f64).ln()) / n as f64,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripProbeOptions {
    pub strips: usize,
    pub h: f64,
    pub lambda: f64,
    /// Probe at scale `1/(2n)` for each `n`.
    pub ns: Vec<usize>,
    pub window: Option<Cube<2>>,
    /// Also count unmatched exterior Whitney cubes (costly on large windows).
    pub matching: bool,
}

impl Default for StripProbeOptions {
    fn default() -> Self {
        StripProbeOptions {
            strips: 26,
            h: 1.0 / 128.0,
            lambda: 4.0,
            ns: vec![4, 8, 16],
            window: Some(Cube::new([-8.0, -1.0], 32.0).expect("positive side")),
            matching: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StripProbeRow {
    pub n: usize,
    pub scale: f64,
    pub sup_average: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StripProbeReport {
    pub rule: LengthRule,
    pub lambda: f64,
    pub h: f64,
    pub total: f64,
    pub rows: Vec<StripProbeRow>,
    /// Exterior cubes with `ℓ ≤ λ` left without an interior partner.
    pub unmatched: Option<usize>,
    /// Lowest strip index next to an unmatched exterior cube.
    pub first_unmatched_strip: Option<usize>,
}

impl StripProbeReport {
    /// `ratio(last n) / ratio(first n)`.
    pub fn growth(&self) -> Option<f64> {
        Some(self.rows.last()?.ratio / self.rows.first()?.ratio)
    }
}

pub fn strip_domain(rule: LengthRule, strips: usize, window: Option<Cube<2>>) -> Result<DomainModel> {
    if strips == 0 {
        return Err(Error::validation("strips", "must be at least 1"));
    }
    let kind = DomainKind::StripsExample1 {
        count: None,
        lengths: (1..=strips).map(|n| rule.length(n)).collect(),
    };
    let spec = DomainSpec::new(kind);
    build_domain(&match window {
        Some(w) => spec.with_window(w),
        None => spec,
    })
}

/// Log-probe ratios of `f = n·x` on the `n`-th strip at scales `1/(2n)`.
pub fn strip_probe(rule: LengthRule, opts: &StripProbeOptions) -> Result<StripProbeReport> {
    let d = strip_domain(rule, opts.strips, opts.window)?;
    if let Some(top) = d.strips().last() {
        if top.y1 >= d.window().hi(1) || top.length >= d.window().hi(0) {
            return Err(Error::validation("window", "the strips must fit inside the window"));
        }
    }
    let f = sample(&TestFunctionSpec::Example1, &d, opts.h)?;
    let scales: Vec<f64> = opts.ns.iter().map(|&n| 1.0 / (2.0 * n as f64)).collect();
    let probe = log_estimate_probe_at(&f, &d, opts.lambda, &scales)?;
    let rows = opts
        .ns
        .iter()
        .zip(&scales)
        .filter_map(|(&n, &s)| {
            let p = probe.points.iter().find(|p| (p.ell - s).abs() < opts.h)?;
            Some(StripProbeRow {
                n,
                scale: p.ell,
                sup_average: p.sup_average,
                ratio: p.ratio,
            })
        })
        .collect();

    let (unmatched, first_unmatched_strip) = if opts.matching {
        let start = default_finest_level(opts.h);
        let ext = whitney_decompose_auto(&d, OpenSet::Exterior, start, start + 4)?;
        let int = whitney_decompose_auto(&d, OpenSet::Interior, start, start + 4)?;
        let m = match_cubes(&ext, &int, MatchOptions::new(opts.lambda))?;
        let first = m
            .unmatched
            .iter()
            .filter_map(|&id| {
                let c = ext.cube(id as usize).center();
                d.strips()
                    .iter()
                    .filter(|s| c[0] > 0.0 && c[1] > s.y0 - 0.5 && c[1] < s.y1 + 0.5)
                    .map(|s| s.index)
                    .next()
            })
            .min();
        (Some(m.unmatched.len()), first)
    } else {
        (None, None)
    };
    Ok(StripProbeReport {
        rule,
        lambda: opts.lambda,
        h: opts.h,
        total: probe.total,
        rows,
        unmatched,
        first_unmatched_strip,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleOptions {
    pub groups: Vec<usize>,
    pub h: f64,
    pub lambda: f64,
    pub lambda_small: f64,
    pub exponent: f64,
    pub betas: Vec<f64>,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            groups: (2..=6).collect(),
            h: 1.0 / 32.0,
            lambda: 2.0,
            lambda_small: 0.25,
            exponent: 0.5,
            betas: vec![1.0, 2.0, 4.0, 8.0],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleRow {
    pub groups: usize,
    pub total: f64,
    pub average_part: f64,
    pub total_small: f64,
    pub average_part_small: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScaleReport {
    pub lambda: f64,
    pub lambda_small: f64,
    pub rows: Vec<ScaleRow>,
    /// `γ(f, β)` on the largest domain.
    pub gamma: Vec<(f64, Measure)>,
}

/// Norms of `c_j·x` (`c_j = j^exponent`) on the grouped strips at two scales,
/// for a growing number of groups.
pub fn scale_dependence(opts: &ScaleOptions) -> Result<ScaleReport> {
    if opts.groups.is_empty() {
        return Err(Error::validation("groups", "need at least one group count"));
    }
    let spec = TestFunctionSpec::Example2 {
        exponent: opts.exponent,
        lambda: opts.lambda,
    };
    let mut rows = Vec::new();
    let mut gamma = Vec::new();
    for (i, &groups) in opts.groups.iter().enumerate() {
        let d = build_domain(&DomainSpec::new(DomainKind::StripsExample2 { groups }))?;
        let f = sample(&spec, &d, opts.h)?;
        let large = bmo_norm(&f, &d, opts.lambda)?;
        let small = bmo_norm(&f, &d, opts.lambda_small)?;
        rows.push(ScaleRow {
            groups,
            total: large.total,
            average_part: large.average_part,
            total_small: small.total,
            average_part_small: small.average_part,
        });
        if i + 1 == opts.groups.len() {
            gamma = gamma_curve(&f, &d, &opts.betas, opts.lambda)?;
        }
    }
    Ok(ScaleReport {
        lambda: opts.lambda,
        lambda_small: opts.lambda_small,
        rows,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_rules() {
        assert_eq!(LengthRule::Constant.length(7), 1.0);
        assert_eq!(LengthRule::Logarithmic.length(1), 1.0);
        assert!((LengthRule::Logarithmic.length(4) - (1.0 + 4f64.ln()) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn small_strip_probe_runs() {
        let opts = StripProbeOptions {
            strips: 6,
            h: 1.0 / 32.0,
            lambda: 2.0,
            ns: vec![1, 2],
            window: None,
            matching: true,
        };
        let r = strip_probe(LengthRule::Constant, &opts).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.ratio > 0.0));
        assert!(r.unmatched.is_some());
    }

    #[test]
    fn small_scale_run() {
        let opts = ScaleOptions {
            groups: vec![2, 3],
            h: 1.0 / 32.0,
            betas: vec![1.0],
            ..Default::default()
        };
        let r = scale_dependence(&opts).unwrap();
        assert_eq!(r.rows.len(), 2);
        // Cubes of side at least λ = 2 lie in the half-plane, where f vanishes.
        assert!(r.rows.iter().all(|row| row.average_part == 0.0));
        assert!(r.rows[1].average_part_small > r.rows[0].average_part_small);
    }
}
