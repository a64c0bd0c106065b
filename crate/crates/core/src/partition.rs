//! The canonical partition sequence of `[0,1)`.
//!
//! A [`PhiConfig`] fixes the initial partition (an order of the letters) and
//! the dual order (an order of every parent set). Left endpoints of level-`n`
//! intervals are `Φₙ(p) = Φ₀(S(a₁)₀) + Σ φ(a_k) / λ^{k-1}`.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::address::{domain, parent_set, validate_address, Address, Label};
use crate::error::{Error, Result};
use crate::subst::{Letter, PerronData, SubstitutionRule, System};

/// Default cap on the number of enumerated addresses.
pub const DEFAULT_ADDRESS_CAP: usize = 100_000;

/// One ordering of `T_α` per letter.
pub type DualOrder = Vec<Vec<Label>>;

#[derive(Debug, Clone)]
pub struct PhiConfig {
    system: System,
    initial_order: Vec<Letter>,
    dual_order: DualOrder,
    phi0: Vec<f64>,
    /// φ indexed by domain index.
    phi: Vec<f64>,
    label_base: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AddressedInterval {
    pub left: f64,
    pub length: f64,
    pub address: Address,
}

impl AddressedInterval {
    pub fn right(&self) -> f64 {
        self.left + self.length
    }

    pub fn contains(&self, x: f64) -> bool {
        self.left <= x && x < self.right()
    }
}

fn canonical_dual_order(rule: &SubstitutionRule) -> DualOrder {
    rule.letters().map(|a| parent_set(rule, a)).collect()
}

fn check_dual_order(rule: &SubstitutionRule, order: &DualOrder) -> Result<()> {
    if order.len() != rule.size() {
        return Err(Error::Config("dual order must list every letter".into()));
    }
    for a in rule.letters() {
        let mut want = parent_set(rule, a);
        let mut got = order[a].clone();
        want.sort();
        got.sort();
        if want != got {
            return Err(Error::Config(format!(
                "dual order for '{}' is not a permutation of its parent set",
                rule.letter_char(a)
            )));
        }
    }
    Ok(())
}

impl PhiConfig {
    /// Builds `Φ₀` by cumulative sums in `initial_order` (default: alphabet
    /// order) and `φ` by cumulative sums in `dual_order` (default: canonical).
    pub fn new(
        system: System,
        initial_order: Option<Vec<Letter>>,
        dual_order: Option<DualOrder>,
    ) -> Result<Self> {
        let rule = &system.rule;
        let initial_order = initial_order.unwrap_or_else(|| rule.letters().collect());
        let mut sorted = initial_order.clone();
        sorted.sort_unstable();
        if sorted != rule.letters().collect::<Vec<_>>() {
            return Err(Error::Config(
                "initial order is not a permutation of the alphabet".into(),
            ));
        }
        let dual_order = dual_order.unwrap_or_else(|| canonical_dual_order(rule));
        check_dual_order(rule, &dual_order)?;

        let perron = &system.perron;
        let mut phi0 = vec![0.0; rule.size()];
        let mut acc = 0.0;
        for &a in &initial_order {
            phi0[a] = acc;
            acc += perron.measure(a);
        }

        let mut label_base = Vec::with_capacity(rule.size());
        let mut base = 0;
        for a in rule.letters() {
            label_base.push(base);
            base += rule.image_len(a);
        }
        let mut phi = vec![0.0; base];
        for labels in &dual_order {
            let mut acc = 0.0;
            for b in labels {
                phi[label_base[b.letter] + b.position - 1] = acc;
                acc += perron.measure(b.letter) / perron.lambda;
            }
        }

        Ok(PhiConfig {
            system,
            initial_order,
            dual_order,
            phi0,
            phi,
            label_base,
        })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn rule(&self) -> &SubstitutionRule {
        &self.system.rule
    }

    pub fn perron(&self) -> &PerronData {
        &self.system.perron
    }

    pub fn lambda(&self) -> f64 {
        self.system.perron.lambda
    }

    pub fn initial_order(&self) -> &[Letter] {
        &self.initial_order
    }

    pub fn dual_order(&self) -> &DualOrder {
        &self.dual_order
    }

    pub fn phi0(&self, letter: Letter) -> f64 {
        self.phi0[letter]
    }

    pub fn phi(&self, label: Label) -> f64 {
        self.phi[self.label_base[label.letter] + label.position - 1]
    }

    /// Children of a supertile of type `letter`, in dual order.
    pub fn children(&self, letter: Letter) -> &[Label] {
        &self.dual_order[letter]
    }

    /// Left endpoint and length for digits assumed valid.
    pub(crate) fn interval_unchecked(&self, digits: &[Label]) -> (f64, f64) {
        let rule = self.rule();
        let lambda = self.lambda();
        let mut left = self.phi0[digits[0].origin_letter(rule)];
        let mut scale = 1.0;
        for &d in digits {
            left += self.phi(d) * scale;
            scale /= lambda;
        }
        let length = self.perron().measure(digits[digits.len() - 1].letter) * scale;
        (left, length)
    }

    /// `Φₙ(p)`.
    pub fn phi_n(&self, address: &Address) -> Result<f64> {
        self.check(address)?;
        Ok(self.interval_unchecked(address.digits()).0)
    }

    pub fn interval_of(&self, address: &Address) -> Result<AddressedInterval> {
        self.check(address)?;
        let (left, length) = self.interval_unchecked(address.digits());
        Ok(AddressedInterval {
            left,
            length,
            address: address.clone(),
        })
    }

    fn check(&self, address: &Address) -> Result<()> {
        if address.is_empty() || !validate_address(self.rule(), address.digits()) {
            return Err(Error::InvalidAddress(address.display(self.rule())));
        }
        Ok(())
    }

    /// The letter whose level-0 interval holds `x`.
    pub fn locate_letter(&self, x: f64) -> Letter {
        let mut best = self.initial_order[0];
        for &a in &self.initial_order {
            if self.phi0[a] <= x {
                best = a;
            }
        }
        best
    }

    /// Picks the child of a node at `left` (scaled by `scale`) containing `x`.
    fn pick_child(&self, parent: Letter, left: f64, scale: f64, x: f64) -> (Label, f64) {
        let kids = &self.dual_order[parent];
        let mut chosen = (kids[0], left + self.phi(kids[0]) * scale);
        for &b in &kids[1..] {
            let l = left + self.phi(b) * scale;
            if l <= x {
                chosen = (b, l);
            } else {
                break;
            }
        }
        chosen
    }

    /// The depth-`depth` address whose half-open interval contains `x`.
    pub fn locate(&self, x: f64, depth: usize) -> Address {
        let mut walker = Locator::new(self, x);
        let mut address = Address::from_digits(Vec::with_capacity(depth));
        for _ in 0..depth {
            address.push(walker.next_digit());
        }
        address
    }

    /// All level-`n` intervals.
    pub fn intervals(&self, n: usize, cap: usize) -> Result<Vec<AddressedInterval>> {
        enumerate_addresses(self.rule(), n, cap)?
            .into_iter()
            .map(|p| self.interval_of(&p))
            .collect()
    }
}

/// Lazy descent through the partition towards a point.
pub(crate) struct Locator<'a> {
    config: &'a PhiConfig,
    x: f64,
    left: f64,
    scale: f64,
    parent: Letter,
}

impl<'a> Locator<'a> {
    pub(crate) fn new(config: &'a PhiConfig, x: f64) -> Self {
        let parent = config.locate_letter(x);
        Locator {
            config,
            x,
            left: config.phi0[parent],
            scale: 1.0,
            parent,
        }
    }

    pub(crate) fn next_digit(&mut self) -> Label {
        let (b, l) = self
            .config
            .pick_child(self.parent, self.left, self.scale, self.x);
        self.left = l;
        self.scale /= self.config.lambda();
        self.parent = b.letter;
        b
    }
}

/// Number of valid addresses of length `n`, saturating.
pub fn address_count(rule: &SubstitutionRule, n: usize) -> u128 {
    if n == 0 {
        return rule.size() as u128;
    }
    // counts by type letter of the last digit
    let mut counts: Vec<u128> = rule.letters().map(|a| rule.image_len(a) as u128).collect();
    for _ in 1..n {
        counts = rule
            .letters()
            .map(|a| {
                rule.image(a)
                    .iter()
                    .fold(0u128, |s, &b| s.saturating_add(counts[b]))
            })
            .collect();
    }
    counts.iter().fold(0u128, |s, &c| s.saturating_add(c))
}

/// All valid addresses of length `n` in canonical order.
pub fn enumerate_addresses(rule: &SubstitutionRule, n: usize, cap: usize) -> Result<Vec<Address>> {
    assert!(n >= 1, "address length must be positive");
    let count = address_count(rule, n);
    if count > cap as u128 {
        return Err(Error::CapExceeded {
            what: "address count",
            requested: count,
            cap: cap as u128,
        });
    }
    let parents: Vec<Vec<Label>> = rule.letters().map(|a| parent_set(rule, a)).collect();
    let mut level: Vec<Address> = domain(rule)
        .into_iter()
        .map(|d| Address::from_digits(vec![d]))
        .collect();
    for _ in 1..n {
        level = level
            .iter()
            .flat_map(|p| parents[p.type_letter()].iter().map(move |&b| p.extended(b)))
            .collect();
    }
    Ok(level)
}

fn factorial_saturating(k: usize) -> u128 {
    (1..=k as u128).fold(1u128, |f, i| f.saturating_mul(i))
}

/// Number of dual orders and an iterator yielding each exactly once.
pub fn enumerate_dual_orders(
    rule: &SubstitutionRule,
    cap: usize,
) -> Result<(u128, impl Iterator<Item = DualOrder>)> {
    let parents = canonical_dual_order(rule);
    let count = parents.iter().fold(1u128, |c, t| {
        c.saturating_mul(factorial_saturating(t.len()))
    });
    if count > cap as u128 {
        return Err(Error::CapExceeded {
            what: "dual order count",
            requested: count,
            cap: cap as u128,
        });
    }
    let iter = parents
        .into_iter()
        .map(|t| {
            let k = t.len();
            t.into_iter().permutations(k).collect::<Vec<_>>()
        })
        .multi_cartesian_product();
    Ok((count, iter))
}

/// Configuration whose IIET is self-similar, together with `κ`.
///
/// Requires every image to begin with one letter `β` and end with one letter
/// `γ`. `I(γ)` is placed first; inside `T_γ` the last-position labels come first
/// as a scaled copy of the initial partition, and inside `T_β` the
/// first-position labels come last as another scaled copy starting at `κ`.
pub fn self_similar_config(system: System) -> Result<(PhiConfig, f64)> {
    let rule = &system.rule;
    let firsts: Vec<Letter> = rule.letters().map(|a| rule.image(a)[0]).collect();
    let lasts: Vec<Letter> = rule
        .letters()
        .map(|a| *rule.image(a).last().unwrap())
        .collect();
    let beta = firsts[0];
    let gamma = lasts[0];
    if firsts.iter().any(|&b| b != beta) || lasts.iter().any(|&g| g != gamma) {
        return Err(Error::NotApplicable(
            "images do not share a common first and last letter".into(),
        ));
    }
    if rule.letters().any(|a| rule.image_len(a) == 1) {
        return Err(Error::NotApplicable(
            "a length-1 image is both first and last position".into(),
        ));
    }

    let mut initial_order = vec![gamma];
    initial_order.extend(rule.letters().filter(|&a| a != gamma));

    let maxima: Vec<Label> = initial_order
        .iter()
        .map(|&d| Label::new(d, rule.image_len(d)))
        .collect();
    let minima: Vec<Label> = initial_order.iter().map(|&d| Label::new(d, 1)).collect();

    let mut dual = canonical_dual_order(rule);
    for (a, labels) in dual.iter_mut().enumerate() {
        let mut head = Vec::new();
        let mut tail = Vec::new();
        if a == gamma {
            head = maxima.clone();
        }
        if a == beta {
            tail = minima.clone();
        }
        let middle: Vec<Label> = labels
            .iter()
            .copied()
            .filter(|l| !head.contains(l) && !tail.contains(l))
            .collect();
        *labels = head.into_iter().chain(middle).chain(tail).collect();
    }

    let config = PhiConfig::new(system, Some(initial_order), Some(dual))?;
    let kappa = config.phi0(beta) + config.phi(minima[0]);
    Ok((config, kappa))
}

/// JSON configuration file contents.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub initial_order: Option<Vec<String>>,
    #[serde(default)]
    pub dual_order: Option<BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    pub assume_minimal: Option<bool>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn letter(rule: &SubstitutionRule, s: &str) -> Result<Letter> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => rule
                .letter_index(c)
                .ok_or_else(|| Error::Config(format!("unknown letter `{s}`"))),
            _ => Err(Error::Config(format!("`{s}` is not a single letter"))),
        }
    }

    /// Resolves letter and label names against `rule`. Letters missing from
    /// `dual_order` keep their canonical parent-set order.
    pub fn resolve(
        &self,
        rule: &SubstitutionRule,
    ) -> Result<(Option<Vec<Letter>>, Option<DualOrder>)> {
        let initial = self
            .initial_order
            .as_ref()
            .map(|v| {
                v.iter()
                    .map(|s| Self::letter(rule, s))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let dual = match &self.dual_order {
            None => None,
            Some(map) => {
                let mut order = canonical_dual_order(rule);
                for (k, labels) in map {
                    let a = Self::letter(rule, k)?;
                    order[a] = labels
                        .iter()
                        .map(|s| Label::parse(rule, s).map_err(|e| Error::Config(e.to_string())))
                        .collect::<Result<Vec<_>>>()?;
                }
                Some(order)
            }
        };
        Ok((initial, dual))
    }
}
