//! Spectral coefficients of the coordinate map, coincidences of
//! constant-length rules, and numerical diagnostics built on powers of the
//! approximants.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::iet::{build_approximant, FiniteIet};
use crate::numfmt::g17;
use crate::partition::PhiConfig;
use crate::subst::{Letter, SubstitutionRule};

/// Error bound required of the approximant used by the diagnostic.
pub const DIAGNOSTIC_BOUND: f64 = 1e-3;
/// Radius used when counting accumulation clusters.
pub const CLUSTER_RADIUS: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub j: u64,
    pub value: f64,
    pub error_bound: f64,
    pub level: usize,
}

/// `∫₀¹ x·f(x) dx`, or `∫₀¹ (x−½)(f(x)−½) dx` when centered, in closed form.
pub fn integrate_against_identity(f: &FiniteIet, centered: bool) -> f64 {
    let shift = if centered { 0.5 } else { 0.0 };
    f.pieces()
        .iter()
        .map(|p| {
            let c = p.translation;
            let anti = |u: f64| u * u * u / 3.0 + c * u * u / 2.0;
            let a = p.left - shift;
            let b = p.right() - shift;
            anti(b) - anti(a)
        })
        .sum()
}

/// Propagated error of using `𝔉ₙ` in place of `𝔉` for the `j`-th coefficient.
pub fn spectral_error_bound(lambda: f64, level: usize, j: u64) -> f64 {
    2.0 * j as f64 * lambda.powi(-(level as i32))
}

pub fn spectral_coefficient(
    config: &PhiConfig,
    level: usize,
    j: u64,
    centered: bool,
    piece_cap: usize,
) -> Result<SpectralEstimate> {
    let f = build_approximant(config, level).power(j, piece_cap)?;
    Ok(SpectralEstimate {
        j,
        value: integrate_against_identity(&f, centered),
        error_bound: spectral_error_bound(config.lambda(), level, j),
        level,
    })
}

/// CSV with header `j,value,error_bound,level`.
pub fn spectral_csv(estimates: &[SpectralEstimate]) -> String {
    let mut s = String::from("j,value,error_bound,level\n");
    for e in estimates {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            e.j,
            g17(e.value),
            g17(e.error_bound),
            e.level
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoincidenceWitness {
    pub power: usize,
    /// 1-based position inside `S^power(α)`.
    pub position: u128,
    pub letter: Letter,
}

/// Breadth-first search over letter subsets under the position maps
/// `f_j(S) = { S(α)_j : α ∈ S }`. The first singleton reached gives the
/// shortest coincidence, with the smallest position at that power.
pub fn coincidence_check(rule: &SubstitutionRule) -> Result<Option<CoincidenceWitness>> {
    let k = rule
        .constant_length()
        .ok_or_else(|| Error::Assumption("coincidence requires a constant-length rule".into()))?;
    let s = rule.size();
    let full: u64 = if s == 64 { u64::MAX } else { (1u64 << s) - 1 };
    let step = |mask: u64, j: usize| -> u64 {
        (0..s)
            .filter(|&a| mask >> a & 1 == 1)
            .fold(0u64, |m, a| m | 1u64 << rule.image(a)[j])
    };
    if full.count_ones() == 1 {
        return Ok(Some(CoincidenceWitness {
            power: 1,
            position: 1,
            letter: rule.image(0)[0],
        }));
    }
    let mut seen = HashSet::from([full]);
    let mut queue: VecDeque<(u64, Vec<usize>)> = VecDeque::from([(full, Vec::new())]);
    while let Some((mask, word)) = queue.pop_front() {
        for j in 0..k {
            let next = step(mask, j);
            let mut w = word.clone();
            w.push(j);
            if next.count_ones() == 1 {
                let position = w.iter().fold(0u128, |acc, &d| acc * k as u128 + d as u128) + 1;
                return Ok(Some(CoincidenceWitness {
                    power: w.len(),
                    position,
                    letter: next.trailing_zeros() as Letter,
                }));
            }
            if seen.insert(next) {
                queue.push_back((next, w));
            }
        }
    }
    Ok(None)
}

/// Which shifts the convergence diagnostic applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `Kᵉ` for a constant-length rule.
    ConstantLength,
    /// `|Sᵉ(α)|`.
    SupertileLength(Letter),
}

impl Schedule {
    /// Constant length when available, else supertile lengths of the first letter.
    pub fn for_rule(rule: &SubstitutionRule) -> Self {
        if rule.constant_length().is_some() {
            Schedule::ConstantLength
        } else {
            Schedule::SupertileLength(0)
        }
    }

    pub fn value(self, rule: &SubstitutionRule, e: u32) -> Result<u64> {
        let v: Option<u128> = match self {
            Schedule::ConstantLength => {
                let k = rule.constant_length().ok_or_else(|| {
                    Error::Assumption("constant-length schedule on a non-constant rule".into())
                })?;
                (k as u128).checked_pow(e)
            }
            Schedule::SupertileLength(a) => rule.supertile_lengths(e as usize).map(|l| l[a]),
        };
        v.and_then(|v| u64::try_from(v).ok())
            .ok_or(Error::CapExceeded {
                what: "schedule value",
                requested: u128::MAX,
                cap: u64::MAX as u128,
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub x: f64,
    pub exponent: u32,
    pub power: u64,
    pub value: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub level: usize,
    pub samples: Vec<f64>,
    pub rows: Vec<DiagnosticRow>,
    /// Clusters of `{𝔉^{schedule(e)}(x)}` per sample at [`CLUSTER_RADIUS`].
    pub clusters: Vec<usize>,
    /// `(exponent, median distance)`.
    pub medians: Vec<(u32, f64)>,
}

impl ConvergenceTable {
    pub fn distances_for_sample(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        let stride = self.medians.len();
        self.rows[i * stride..(i + 1) * stride]
            .iter()
            .map(|r| r.distance)
    }

    /// CSV with header `x,exponent,power,value,distance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,exponent,power,value,distance\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                g17(r.x),
                r.exponent,
                r.power,
                g17(r.value),
                g17(r.distance)
            );
        }
        s
    }
}

/// Number of groups after splitting sorted values at gaps wider than `radius`.
pub fn cluster_count(values: &[f64], radius: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    1 + v.windows(2).filter(|w| w[1] - w[0] > radius).count()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Smallest level whose spectral error bound for `j` is below `bound`.
pub fn level_for_bound(lambda: f64, j: u64, bound: f64) -> usize {
    let mut n = 1;
    while spectral_error_bound(lambda, n, j) >= bound {
        n += 1;
    }
    n
}

/// Samples `x = (2i+1)/(2·samples)` and tabulates `|𝔉_N^{schedule(e)}(x) − x|`.
pub fn convergence_diagnostic(
    config: &PhiConfig,
    samples: usize,
    exponents: RangeInclusive<u32>,
    schedule: Schedule,
    piece_cap: usize,
) -> Result<ConvergenceTable> {
    let rule = config.rule();
    let powers: Vec<(u32, u64)> = exponents
        .clone()
        .map(|e| schedule.value(rule, e).map(|j| (e, j)))
        .collect::<Result<_>>()?;
    let max_power = powers.iter().map(|&(_, j)| j).max().unwrap_or(1);
    let level = level_for_bound(config.lambda(), max_power, DIAGNOSTIC_BOUND);
    let base = build_approximant(config, level);
    let cuts = base.breakpoints();

    let xs: Vec<f64> = (0..samples)
        .map(|i| {
            let x = (2 * i + 1) as f64 / (2 * samples) as f64;
            if cuts.contains(&x) {
                x + 1e-12
            } else {
                x
            }
        })
        .collect();

    let mut maps = Vec::with_capacity(powers.len());
    for &(_, j) in &powers {
        maps.push(base.power(j, piece_cap)?);
    }

    let mut rows = Vec::with_capacity(xs.len() * powers.len());
    let mut clusters = Vec::with_capacity(xs.len());
    for &x in &xs {
        let mut values = Vec::with_capacity(powers.len());
        for (&(e, j), f) in powers.iter().zip(&maps) {
            let value = f.evaluate(x);
            values.push(value);
            rows.push(DiagnosticRow {
                x,
                exponent: e,
                power: j,
                value,
                distance: (value - x).abs(),
            });
        }
        clusters.push(cluster_count(&values, CLUSTER_RADIUS));
    }

    let medians = powers
        .iter()
        .enumerate()
        .map(|(k, &(e, _))| {
            let mut d: Vec<f64> = rows
                .iter()
                .skip(k)
                .step_by(powers.len())
                .map(|r| r.distance)
                .collect();
            (e, median(&mut d))
        })
        .collect();

    Ok(ConvergenceTable {
        level,
        samples: xs,
        rows,
        clusters,
        medians,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSimilarityReport {
    pub kappa: f64,
    pub level: usize,
    pub points_used: usize,
    /// Max of `|𝔉(x) − λ(𝔉(x/λ) + κ)|`.
    pub plus_deviation: f64,
    /// Max of `|𝔉(x) − λ(𝔉(x/λ) − κ)|`.
    pub minus_deviation: f64,
    pub tolerance: f64,
}

impl SelfSimilarityReport {
    pub fn passing(&self) -> Vec<Sign> {
        let mut out = Vec::new();
        if self.plus_deviation <= self.tolerance {
            out.push(Sign::Plus);
        }
        if self.minus_deviation <= self.tolerance {
            out.push(Sign::Minus);
        }
        out
    }
}

/// Tests both candidate self-similarity relations of `𝔉ₙ` on a grid in
/// `[1/λ, 1)`, skipping points within `1e-6` of a breakpoint at `x` or `x/λ`.
pub fn self_similarity_check(
    config: &PhiConfig,
    kappa: f64,
    level: usize,
    grid: usize,
    tol: f64,
) -> SelfSimilarityReport {
    const GUARD: f64 = 1e-6;
    let lambda = config.lambda();
    let f = build_approximant(config, level);
    let cuts = f.breakpoints();
    let near_cut = |y: f64| {
        let i = cuts.partition_point(|&b| b < y);
        let below = i
            .checked_sub(1)
            .map(|k| y - cuts[k])
            .unwrap_or(f64::INFINITY);
        let above = cuts.get(i).map(|&b| b - y).unwrap_or(f64::INFINITY);
        below.min(above) < GUARD
    };
    let lo = 1.0 / lambda;
    let mut plus: f64 = 0.0;
    let mut minus: f64 = 0.0;
    let mut used = 0;
    for i in 0..grid {
        let x = lo + (i as f64 + 0.5) / grid as f64 * (1.0 - lo);
        let y = x / lambda;
        if near_cut(x) || near_cut(y) {
            continue;
        }
        used += 1;
        let fx = f.evaluate(x);
        let fy = f.evaluate(y);
        plus = plus.max((fx - lambda * (fy + kappa)).abs());
        minus = minus.max((fx - lambda * (fy - kappa)).abs());
    }
    SelfSimilarityReport {
        kappa,
        level,
        points_used: used,
        plus_deviation: plus,
        minus_deviation: minus,
        tolerance: tol,
    }
}
