//! Finite interval exchanges: the approximants `𝔉ₙ`, exact evaluation of the
//! infinite exchange, and the algebra (composition, powers, merging) used by
//! the spectral diagnostics.

use std::fmt::Write as _;

use crate::address::{extremal_address, first_increasable, vershik, Address, Extremal};
use crate::error::{Error, Result};
use crate::numfmt::g17;
use crate::partition::{Locator, PhiConfig};
use crate::subst::SubstitutionRule;

/// Default cap on piece counts produced by powers.
pub const DEFAULT_PIECE_CAP: usize = 1_000_000;
/// Default digit budget for exact evaluation.
pub const DEFAULT_MAX_DEPTH: usize = 64;

const SLIVER: f64 = 1e-14;
const SLIVER_BUDGET: f64 = 1e-10;
const COMPOSE_MERGE_TOL: f64 = 1e-15;
const DISAGREE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub left: f64,
    pub length: f64,
    pub translation: f64,
    /// Address of the partition interval this piece came from, if any.
    pub address: Option<Address>,
}

impl Piece {
    pub fn new(left: f64, length: f64, translation: f64) -> Self {
        Piece {
            left,
            length,
            translation,
            address: None,
        }
    }

    pub fn right(&self) -> f64 {
        self.left + self.length
    }

    pub fn image_left(&self) -> f64 {
        self.left + self.translation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteIet {
    pieces: Vec<Piece>,
    level: Option<usize>,
}

impl FiniteIet {
    pub fn identity() -> Self {
        FiniteIet {
            pieces: vec![Piece::new(0.0, 1.0, 0.0)],
            level: None,
        }
    }

    /// Sorts the pieces by left endpoint.
    pub fn from_pieces(mut pieces: Vec<Piece>, level: Option<usize>) -> Self {
        assert!(!pieces.is_empty(), "an exchange needs at least one piece");
        pieces.sort_by(|a, b| a.left.total_cmp(&b.left));
        FiniteIet { pieces, level }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn level(&self) -> Option<usize> {
        self.level
    }

    /// Interior breakpoints (left endpoints after the first).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.left).collect()
    }

    /// Index of the half-open piece containing `x`.
    pub fn piece_index(&self, x: f64) -> usize {
        self.pieces
            .partition_point(|p| p.left <= x)
            .saturating_sub(1)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        x + self.pieces[self.piece_index(x)].translation
    }

    /// Largest gap or overlap found when checking that the pieces and their
    /// images both tile `[0,1)`, returned as `(domain, range)`.
    pub fn tiling_defects(&self) -> (f64, f64) {
        fn defect(mut spans: Vec<(f64, f64)>) -> f64 {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut worst = spans[0].0.abs();
            let mut total = 0.0;
            for w in spans.windows(2) {
                worst = worst.max((w[0].0 + w[0].1 - w[1].0).abs());
            }
            for s in &spans {
                total += s.1;
            }
            let last = spans[spans.len() - 1];
            worst
                .max((last.0 + last.1 - 1.0).abs())
                .max((total - 1.0).abs())
        }
        let domain = defect(self.pieces.iter().map(|p| (p.left, p.length)).collect());
        let range = defect(
            self.pieces
                .iter()
                .map(|p| (p.image_left(), p.length))
                .collect(),
        );
        (domain, range)
    }

    pub fn is_exchange(&self, tol: f64) -> bool {
        let (d, r) = self.tiling_defects();
        d <= tol && r <= tol && self.pieces.iter().all(|p| p.length > 0.0)
    }

    /// `x ↦ other(self(x))`.
    pub fn then(&self, other: &FiniteIet) -> FiniteIet {
        let g = &other.pieces;
        let mut out: Vec<Piece> = Vec::with_capacity(self.pieces.len() + g.len());
        let mut skipped = 0.0;
        for p in &self.pieces {
            let t = p.translation;
            let img_lo = p.image_left();
            let img_hi = img_lo + p.length;
            let mut i = other.piece_index(img_lo);
            let mut seg_left = p.left;
            loop {
                let boundary = g.get(i + 1).map(|q| q.left);
                match boundary {
                    Some(b) if b < img_hi => {
                        let cut = b - t;
                        let tail = p.right() - cut;
                        if tail < SLIVER {
                            skipped += tail.max(0.0);
                            push_merged(
                                &mut out,
                                Piece::new(seg_left, p.right() - seg_left, t + g[i].translation),
                            );
                            break;
                        }
                        let len = cut - seg_left;
                        if len < SLIVER {
                            skipped += len.max(0.0);
                            i += 1;
                            continue;
                        }
                        push_merged(&mut out, Piece::new(seg_left, len, t + g[i].translation));
                        seg_left = cut;
                        i += 1;
                    }
                    _ => {
                        push_merged(
                            &mut out,
                            Piece::new(seg_left, p.right() - seg_left, t + g[i].translation),
                        );
                        break;
                    }
                }
            }
        }
        assert!(
            skipped < SLIVER_BUDGET,
            "composition dropped {skipped} of measure in slivers"
        );
        FiniteIet {
            pieces: out,
            level: None,
        }
    }

    /// `self^j` by repeated squaring.
    pub fn power(&self, j: u64, cap: usize) -> Result<FiniteIet> {
        let mut result = FiniteIet::identity();
        let mut base = self.clone();
        let mut e = j;
        while e > 0 {
            if e & 1 == 1 {
                result = result.then(&base);
                check_cap(&result, cap)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.then(&base);
                check_cap(&base, cap)?;
            }
        }
        result.level = if j == 1 { self.level } else { None };
        Ok(result)
    }

    /// Merges abutting neighbours whose translations agree within `tol`.
    pub fn merge_adjacent(&self, tol: f64) -> FiniteIet {
        let mut out: Vec<Piece> = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            match out.last_mut() {
                Some(q) if (q.translation - p.translation).abs() <= tol => {
                    q.length = p.right() - q.left;
                    q.address = None;
                }
                _ => out.push(p.clone()),
            }
        }
        FiniteIet {
            pieces: out,
            level: self.level,
        }
    }

    /// Lebesgue measure of the set where the two exchanges differ.
    pub fn disagreement(&self, other: &FiniteIet) -> f64 {
        let mut cuts: Vec<f64> = self
            .pieces
            .iter()
            .chain(&other.pieces)
            .map(|p| p.left)
            .chain([0.0, 1.0])
            .filter(|&x| (0.0..=1.0).contains(&x))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .filter(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let a = self.pieces[self.piece_index(mid)].translation;
                let b = other.pieces[other.piece_index(mid)].translation;
                (a - b).abs() > DISAGREE_TOL
            })
            .map(|w| w[1] - w[0])
            .sum()
    }

    /// CSV with header `left,length,translation,level,address`.
    pub fn to_csv(&self, rule: Option<&SubstitutionRule>) -> String {
        let mut s = String::from("left,length,translation,level,address\n");
        let level = self.level.map(|l| l.to_string()).unwrap_or_default();
        for p in &self.pieces {
            let addr = match (rule, &p.address) {
                (Some(r), Some(a)) => a.display(r),
                _ => String::new(),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                g17(p.left),
                g17(p.length),
                g17(p.translation),
                level,
                addr
            );
        }
        s
    }
}

fn push_merged(out: &mut Vec<Piece>, p: Piece) {
    if let Some(q) = out.last_mut() {
        if (q.translation - p.translation).abs() <= COMPOSE_MERGE_TOL {
            q.length = p.right() - q.left;
            return;
        }
    }
    out.push(p);
}

fn check_cap(f: &FiniteIet, cap: usize) -> Result<()> {
    if f.len() > cap {
        return Err(Error::CapExceeded {
            what: "piece count",
            requested: f.len() as u128,
            cap: cap as u128,
        });
    }
    Ok(())
}

/// `h = g ∘ f`.
pub fn compose(f: &FiniteIet, g: &FiniteIet) -> FiniteIet {
    f.then(g)
}

/// The level-`n` approximant `𝔉ₙ`.
///
/// Level-`k` pieces are the addresses whose first `k-1` digits are maximal and
/// whose `k`-th digit can still be increased; the `|𝒜|` maximal level-`n`
/// intervals wrap around to the matching minimal intervals.
pub fn build_approximant(config: &PhiConfig, n: usize) -> FiniteIet {
    assert!(n >= 1, "approximant level must be positive");
    let rule = config.rule();
    let mut pieces = Vec::with_capacity(n * 8);
    for k in 1..=n {
        for a in rule.letters() {
            for j in 1..rule.image_len(a) {
                let top = crate::address::Label::new(a, j);
                let below = top.origin_letter(rule);
                let p = extremal_address(rule, k - 1, below, Extremal::Max).extended(top);
                let next = vershik(rule, &p).expect("non-final digit has a successor");
                let (left, length) = config.interval_unchecked(p.digits());
                let (target, _) = config.interval_unchecked(next.digits());
                pieces.push(Piece {
                    left,
                    length,
                    translation: target - left,
                    address: Some(p),
                });
            }
        }
    }
    for a in rule.letters() {
        let max = extremal_address(rule, n, a, Extremal::Max);
        let min = extremal_address(rule, n, a, Extremal::Min);
        let (left, length) = config.interval_unchecked(max.digits());
        let (target, _) = config.interval_unchecked(min.digits());
        pieces.push(Piece {
            left,
            length,
            translation: target - left,
            address: Some(max),
        });
    }
    FiniteIet::from_pieces(pieces, Some(n))
}

/// Expected piece count `n(|𝖠| − |𝒜|) + |𝒜|`.
pub fn approximant_piece_count(rule: &SubstitutionRule, n: usize) -> usize {
    let domain: usize = rule.letters().map(|a| rule.image_len(a)).sum();
    n * (domain - rule.size()) + rule.size()
}

/// Result of one exact step of the infinite exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStep {
    pub value: f64,
    /// First level at which the address of `x` can be increased.
    pub level: usize,
    pub address: Address,
}

/// Evaluates `𝔉(x)` by reading digits of `x` until one can be increased.
pub fn exact_step(config: &PhiConfig, x: f64, max_depth: usize) -> Result<ExactStep> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Config(format!("x = {x} is outside [0,1)")));
    }
    let rule = config.rule();
    let mut walker = Locator::new(config, x);
    let mut address = Address::from_digits(Vec::new());
    for _ in 0..max_depth {
        address.push(walker.next_digit());
        if first_increasable(rule, &address).is_some() {
            let next = vershik(rule, &address)?;
            let (from, _) = config.interval_unchecked(address.digits());
            let (to, _) = config.interval_unchecked(next.digits());
            return Ok(ExactStep {
                value: x - from + to,
                level: address.len(),
                address,
            });
        }
    }
    Err(Error::MaxDepthExceeded {
        x,
        depth: max_depth,
    })
}

pub fn evaluate_exact(config: &PhiConfig, x: f64, max_depth: usize) -> Result<f64> {
    exact_step(config, x, max_depth).map(|s| s.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subst::System;

    fn config(text: &str) -> PhiConfig {
        let sys = System::new(SubstitutionRule::parse(text).unwrap(), true).unwrap();
        PhiConfig::new(sys, None, None).unwrap()
    }

    fn pd() -> PhiConfig {
        config("A -> AB\nB -> AA")
    }

    #[test]
    fn period_doubling_level_one() {
        let f = build_approximant(&pd(), 1);
        let expected = [
            (0.0, 1.0 / 3.0, 2.0 / 3.0),
            (1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0),
            (0.5, 1.0 / 6.0, -1.0 / 6.0),
            (2.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0),
        ];
        assert_eq!(f.len(), 4);
        for (p, (l, len, t)) in f.pieces().iter().zip(expected) {
            assert!((p.left - l).abs() < 1e-12);
            assert!((p.length - len).abs() < 1e-12);
            assert!((p.translation - t).abs() < 1e-12);
        }
        assert!(f.is_exchange(1e-12));
    }

    #[test]
    fn piece_counts() {
        assert_eq!(build_approximant(&pd(), 3).len(), 8);
        let fib = config("a -> ab\nb -> a");
        assert_eq!(build_approximant(&fib, 7).len(), 9);
        let one = config("A -> A");
        assert_eq!(build_approximant(&one, 4).len(), 1);
    }

    #[test]
    fn evaluation() {
        let f = build_approximant(&pd(), 1);
        assert!((f.evaluate(0.1) - (0.1 + 2.0 / 3.0)).abs() < 1e-12);
        assert!((f.evaluate(1.0 / 3.0) - 0.5).abs() < 1e-12);
        assert_eq!(FiniteIet::identity().evaluate(0.3), 0.3);
    }

    #[test]
    fn exact_evaluation() {
        let c = pd();
        let v = evaluate_exact(&c, 0.7, DEFAULT_MAX_DEPTH).unwrap();
        assert!((v - (0.7 - 1.0 / 3.0)).abs() < 1e-12);
        let v = evaluate_exact(&c, 0.1, DEFAULT_MAX_DEPTH).unwrap();
        assert!((v - (0.1 + 2.0 / 3.0)).abs() < 1e-12);
        let top = extremal_address(c.rule(), 25, 0, Extremal::Max);
        let x = c.phi_n(&top).unwrap();
        assert!(matches!(
            evaluate_exact(&c, x, 20),
            Err(Error::MaxDepthExceeded { .. })
        ));
        assert!(evaluate_exact(&c, 1.0, 20).is_err());
    }

    #[test]
    fn composition() {
        let f = build_approximant(&pd(), 1);
        let id = FiniteIet::identity();
        assert_eq!(f.then(&id).disagreement(&f), 0.0);
        assert_eq!(id.then(&f).disagreement(&f), 0.0);
        let sq = f.then(&f);
        assert!((sq.evaluate(0.1) - 0.1).abs() < 1e-12);
        assert!(sq.len() <= 2 * f.len());
        assert!(sq.is_exchange(1e-12));
    }

    #[test]
    fn large_power_is_exchange() {
        let f = build_approximant(&pd(), 20);
        let p = f.power(256, DEFAULT_PIECE_CAP).unwrap();
        assert!(p.is_exchange(1e-10));
        assert!(matches!(f.power(256, 10), Err(Error::CapExceeded { .. })));
        assert_eq!(f.power(0, 10).unwrap(), FiniteIet::identity());
    }

    #[test]
    fn merging() {
        let flat = FiniteIet::from_pieces(
            vec![Piece::new(0.0, 0.5, 0.0), Piece::new(0.5, 0.5, 0.0)],
            None,
        );
        assert_eq!(flat.merge_adjacent(0.0).len(), 1);
        let f = build_approximant(&pd(), 1);
        assert_eq!(f.merge_adjacent(1e-9).len(), 4);
    }

    #[test]
    fn disagreements() {
        let c = pd();
        let f1 = build_approximant(&c, 1);
        assert_eq!(f1.disagreement(&f1), 0.0);
        let f3 = build_approximant(&c, 3);
        assert!(f1.disagreement(&f3) <= 0.5 + 1e-12);
        for n in 1..8 {
            let a = build_approximant(&c, n);
            let b = build_approximant(&c, n + 1);
            assert!(a.disagreement(&b) <= 0.5f64.powi(n as i32) + 1e-12);
        }
    }

    #[test]
    fn csv_output() {
        let c = pd();
        let csv = build_approximant(&c, 1).to_csv(Some(c.rule()));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("left,length,translation,level,address"));
        assert_eq!(
            lines.next(),
            Some("0,0.33333333333333331,0.66666666666666663,1,A1")
        );
        assert_eq!(csv.lines().count(), 5);
    }
}
