//! Sweeps over every initial order and dual order of a rule, recording how
//! many pieces each merged approximant needs.

use itertools::Itertools;

use crate::address::first_increasable;
use crate::error::{Error, Result};
use crate::iet::{build_approximant, FiniteIet};
use crate::partition::{enumerate_dual_orders, DualOrder, PhiConfig};
use crate::subst::{Letter, System};

/// Merge tolerance used by the two-interval search.
pub const SEARCH_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchEntry {
    pub initial_order: Vec<Letter>,
    pub dual_order: DualOrder,
    /// Merged piece counts of `𝔉₁ … 𝔉ₙ`.
    pub merged_counts: Vec<usize>,
    /// Merged piece counts of the part of `𝔉ₙ` that already agrees with `𝔉`,
    /// i.e. with the wrap-around slivers removed.
    pub settled_counts: Vec<usize>,
}

impl SearchEntry {
    pub fn final_count(&self) -> usize {
        *self.merged_counts.last().expect("at least one level")
    }

    pub fn min_count(&self) -> usize {
        *self.merged_counts.iter().min().expect("at least one level")
    }

    pub fn final_settled_count(&self) -> usize {
        *self.settled_counts.last().expect("at least one level")
    }

    pub fn describe(&self, system: &System) -> String {
        let rule = &system.rule;
        let init: String = self
            .initial_order
            .iter()
            .map(|&a| rule.letter_char(a))
            .collect();
        let dual: Vec<String> = rule
            .letters()
            .map(|a| {
                let labels: Vec<String> =
                    self.dual_order[a].iter().map(|l| l.display(rule)).collect();
                format!("{}:{}", rule.letter_char(a), labels.join(","))
            })
            .collect();
        format!("initial={init} dual={}", dual.join(";"))
    }
}

/// Every (initial order, dual order) pair with merged approximant piece
/// counts for levels `1..=level`.
pub fn search_configurations(
    system: &System,
    level: usize,
    tol: f64,
    cap: usize,
) -> Result<Vec<SearchEntry>> {
    let rule = &system.rule;
    let (dual_count, duals) = enumerate_dual_orders(rule, cap)?;
    let initial_count = (1..=rule.size() as u128).product::<u128>();
    let total = dual_count.saturating_mul(initial_count);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: "configuration count",
            requested: total,
            cap: cap as u128,
        });
    }
    let duals: Vec<DualOrder> = duals.collect();
    let mut out = Vec::with_capacity(total as usize);
    for init in rule.letters().permutations(rule.size()) {
        for dual in &duals {
            let config = PhiConfig::new(system.clone(), Some(init.clone()), Some(dual.clone()))?;
            let mut merged_counts = Vec::with_capacity(level);
            let mut settled_counts = Vec::with_capacity(level);
            for n in 1..=level {
                let f = build_approximant(&config, n);
                merged_counts.push(f.merge_adjacent(tol).len());
                settled_counts.push(settled_runs(system, &f, tol));
            }
            out.push(SearchEntry {
                initial_order: init.clone(),
                dual_order: dual.clone(),
                merged_counts,
                settled_counts,
            });
        }
    }
    Ok(out)
}

/// Runs of consecutive non-wrap pieces with translations equal within `tol`.
fn settled_runs(system: &System, f: &FiniteIet, tol: f64) -> usize {
    let rule = &system.rule;
    let mut runs = 0;
    let mut last: Option<f64> = None;
    for p in f.pieces() {
        let wraps = p
            .address
            .as_ref()
            .is_some_and(|a| first_increasable(rule, a).is_none());
        if wraps {
            last = None;
            continue;
        }
        match last {
            Some(t) if (t - p.translation).abs() <= tol => {}
            _ => runs += 1,
        }
        last = Some(p.translation);
    }
    runs
}
