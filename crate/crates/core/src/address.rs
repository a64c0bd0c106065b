//! Labels, addresses and the Vershik successor map.
//!
//! A label `(α, j)` names position `j` (1-based) inside the image of `α`. An
//! address lists labels from the lowest level up: digit `k` says where the
//! `(k-1)`-supertile at the origin sits inside its `k`-supertile.

use std::fmt;

use crate::error::{Error, Result};
use crate::subst::{Letter, SubstitutionRule, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub letter: Letter,
    /// 1-based position inside the image of `letter`.
    pub position: usize,
}

impl Label {
    pub fn new(letter: Letter, position: usize) -> Self {
        Label { letter, position }
    }

    /// The letter at this position, `S(a)₀`.
    pub fn origin_letter(self, rule: &SubstitutionRule) -> Letter {
        rule.image(self.letter)[self.position - 1]
    }

    pub fn is_first(self) -> bool {
        self.position == 1
    }

    pub fn is_last(self, rule: &SubstitutionRule) -> bool {
        self.position == rule.image_len(self.letter)
    }

    pub fn is_in_domain(self, rule: &SubstitutionRule) -> bool {
        self.letter < rule.size()
            && self.position >= 1
            && self.position <= rule.image_len(self.letter)
    }

    pub fn display(self, rule: &SubstitutionRule) -> String {
        format!("{}{}", rule.letter_char(self.letter), self.position)
    }

    /// Parses labels such as `B2` or `a10`.
    pub fn parse(rule: &SubstitutionRule, text: &str) -> Result<Self> {
        let text = text.trim();
        let mut chars = text.chars();
        let c = chars
            .next()
            .ok_or_else(|| Error::InvalidAddress("empty label".into()))?;
        let letter = rule
            .letter_index(c)
            .ok_or_else(|| Error::InvalidAddress(format!("unknown letter in label `{text}`")))?;
        let position: usize = chars
            .as_str()
            .parse()
            .map_err(|_| Error::InvalidAddress(format!("bad position in label `{text}`")))?;
        let label = Label::new(letter, position);
        if !label.is_in_domain(rule) {
            return Err(Error::InvalidAddress(format!(
                "label `{text}` is outside the domain"
            )));
        }
        Ok(label)
    }
}

/// All labels `(α, j)`, ordered by alphabet order then position.
pub fn domain(rule: &SubstitutionRule) -> Vec<Label> {
    rule.letters()
        .flat_map(|a| (1..=rule.image_len(a)).map(move |j| Label::new(a, j)))
        .collect()
}

/// `T_α`: the labels whose position holds `letter`, in canonical order.
pub fn parent_set(rule: &SubstitutionRule, letter: Letter) -> Vec<Label> {
    domain(rule)
        .into_iter()
        .filter(|b| b.origin_letter(rule) == letter)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    digits: Vec<Label>,
}

impl Address {
    /// Wraps digits without checking validity.
    pub fn from_digits(digits: Vec<Label>) -> Self {
        Address { digits }
    }

    /// Wraps digits after checking the parent-set chain.
    pub fn new(rule: &SubstitutionRule, digits: Vec<Label>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::InvalidAddress("empty address".into()));
        }
        if digits.iter().any(|d| !d.is_in_domain(rule)) {
            return Err(Error::InvalidAddress("label outside the domain".into()));
        }
        if !validate_address(rule, &digits) {
            let a = Address { digits };
            return Err(Error::InvalidAddress(a.display(rule)));
        }
        Ok(Address { digits })
    }

    pub fn digits(&self) -> &[Label] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Letter of the last digit: the type of the addressed supertile.
    pub fn type_letter(&self) -> Letter {
        self.digits.last().expect("nonempty address").letter
    }

    pub fn push(&mut self, label: Label) {
        self.digits.push(label);
    }

    pub fn extended(&self, label: Label) -> Address {
        let mut digits = self.digits.clone();
        digits.push(label);
        Address { digits }
    }

    pub fn prefix(&self, k: usize) -> Address {
        Address {
            digits: self.digits[..k].to_vec(),
        }
    }

    pub fn display(&self, rule: &SubstitutionRule) -> String {
        let parts: Vec<String> = self.digits.iter().map(|d| d.display(rule)).collect();
        parts.join(".")
    }

    /// Parses the dot-separated form, e.g. `B2.A2.A1`.
    pub fn parse(rule: &SubstitutionRule, text: &str) -> Result<Self> {
        let digits = text
            .split('.')
            .map(|t| Label::parse(rule, t))
            .collect::<Result<Vec<_>>>()?;
        Address::new(rule, digits)
    }
}

impl From<Vec<Label>> for Address {
    fn from(digits: Vec<Label>) -> Self {
        Address { digits }
    }
}

/// Displays an address together with the rule that names its letters.
pub struct Displayed<'a>(pub &'a SubstitutionRule, pub &'a Address);

impl fmt::Display for Displayed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.1.display(self.0))
    }
}

/// `a_k ∈ T_{letter(a_{k-1})}` for every `k ≥ 2`; the first digit is free.
pub fn validate_address(rule: &SubstitutionRule, digits: &[Label]) -> bool {
    digits.iter().all(|d| d.is_in_domain(rule))
        && digits
            .windows(2)
            .all(|w| w[1].origin_letter(rule) == w[0].letter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    Min,
    Max,
}

/// The address of the first (`Min`) or last (`Max`) position of the
/// `n`-supertile of `letter`.
pub fn extremal_address(
    rule: &SubstitutionRule,
    n: usize,
    letter: Letter,
    which: Extremal,
) -> Address {
    let mut digits = Vec::with_capacity(n);
    let mut current = letter;
    for _ in 0..n {
        let position = match which {
            Extremal::Min => 1,
            Extremal::Max => rule.image_len(current),
        };
        digits.push(Label::new(current, position));
        current = rule.image(current)[position - 1];
    }
    digits.reverse();
    Address { digits }
}

/// Smallest level whose prefix is not a maximal address, or `None` when every
/// known prefix is maximal.
///
/// For a valid address the `k`-prefix is maximal exactly when digits `1..=k`
/// all sit at the last position of their images.
pub fn first_increasable(rule: &SubstitutionRule, address: &Address) -> Option<usize> {
    address
        .digits
        .iter()
        .position(|d| !d.is_last(rule))
        .map(|i| i + 1)
}

/// One step of the Vershik map: the address of the shifted point.
pub fn vershik(rule: &SubstitutionRule, address: &Address) -> Result<Address> {
    let n =
        first_increasable(rule, address).ok_or_else(|| Error::Saturated(address.display(rule)))?;
    let top = address.digits[n - 1];
    let next = Label::new(top.letter, top.position + 1);
    let beta = next.origin_letter(rule);
    let mut digits = extremal_address(rule, n - 1, beta, Extremal::Min).digits;
    digits.push(next);
    digits.extend_from_slice(&address.digits[n..]);
    Ok(Address { digits })
}

/// Lengths of `S^k(α)` for `k = 0..levels`, indexed `[k][α]`.
fn length_table(rule: &SubstitutionRule, levels: usize) -> Result<Vec<Vec<u128>>> {
    let mut table = Vec::with_capacity(levels);
    let mut lens = vec![1u128; rule.size()];
    for _ in 0..levels {
        let next: Option<Vec<u128>> = rule
            .letters()
            .map(|a| {
                rule.image(a)
                    .iter()
                    .try_fold(0u128, |s, &b| s.checked_add(lens[b]))
            })
            .collect();
        table.push(lens);
        lens = next.ok_or(Error::CapExceeded {
            what: "supertile length",
            requested: u128::MAX,
            cap: u128::MAX,
        })?;
    }
    Ok(table)
}

/// The supertile named by `address` with the origin marked.
pub fn address_to_word(rule: &SubstitutionRule, address: &Address, cap: usize) -> Result<Word> {
    if address.is_empty() || !validate_address(rule, &address.digits) {
        return Err(Error::InvalidAddress(address.display(rule)));
    }
    let n = address.len();
    let word = rule.supertile(address.type_letter(), n, cap)?;
    let lens = length_table(rule, n)?;
    let mut offset: u128 = 0;
    for k in (1..=n).rev() {
        let d = address.digits[k - 1];
        offset += rule.image(d.letter)[..d.position - 1]
            .iter()
            .map(|&b| lens[k - 1][b])
            .sum::<u128>();
    }
    Ok(Word::with_origin(word.letters, offset as usize + 1))
}

/// Recomputes the shifted address by moving the origin one step to the right
/// inside the supertile word and reading the block structure back off.
pub fn shift_oracle(rule: &SubstitutionRule, address: &Address, cap: usize) -> Result<Address> {
    let word = address_to_word(rule, address, cap)?;
    let origin = word.origin_index.expect("origin set");
    if origin == word.len() {
        return Err(Error::Saturated(address.display(rule)));
    }
    let n = address.len();
    let lens = length_table(rule, n)?;
    let mut pos = origin as u128; // 0-based index of the new origin
    let mut current = address.type_letter();
    let mut digits = Vec::with_capacity(n);
    for k in (1..=n).rev() {
        let mut start = 0u128;
        let mut found = None;
        for (idx, &b) in rule.image(current).iter().enumerate() {
            let len = lens[k - 1][b];
            if pos < start + len {
                found = Some((idx + 1, b));
                break;
            }
            start += len;
        }
        let (j, child) = found.expect("position inside supertile");
        digits.push(Label::new(current, j));
        pos -= start;
        current = child;
    }
    digits.reverse();
    debug_assert_eq!(
        word.letters[origin],
        digits[0].origin_letter(rule),
        "origin letter mismatch"
    );
    Ok(Address { digits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subst::DEFAULT_WORD_CAP;

    fn pd() -> SubstitutionRule {
        SubstitutionRule::parse("A -> AB\nB -> AA").unwrap()
    }

    fn addr(rule: &SubstitutionRule, s: &str) -> Address {
        Address::parse(rule, s).unwrap()
    }

    fn show(rule: &SubstitutionRule, labels: &[Label]) -> Vec<String> {
        labels.iter().map(|l| l.display(rule)).collect()
    }

    #[test]
    fn domains() {
        let r = pd();
        assert_eq!(show(&r, &domain(&r)), ["A1", "A2", "B1", "B2"]);
        let fib = SubstitutionRule::parse("a -> ab\nb -> a").unwrap();
        assert_eq!(show(&fib, &domain(&fib)), ["a1", "a2", "b1"]);
        let one = SubstitutionRule::parse("A -> A").unwrap();
        assert_eq!(show(&one, &domain(&one)), ["A1"]);
    }

    #[test]
    fn parent_sets() {
        let r = pd();
        assert_eq!(show(&r, &parent_set(&r, 0)), ["A1", "B1", "B2"]);
        assert_eq!(show(&r, &parent_set(&r, 1)), ["A2"]);
        let one = SubstitutionRule::parse("A -> A").unwrap();
        assert_eq!(show(&one, &parent_set(&one, 0)), ["A1"]);
    }

    #[test]
    fn validation() {
        let r = pd();
        let l = |s: &str| Label::parse(&r, s).unwrap();
        assert!(validate_address(&r, &[l("B2"), l("A2"), l("A1")]));
        assert!(!validate_address(&r, &[l("A1"), l("A2")]));
        assert!(validate_address(&r, &[l("B1")]));
        assert!(Address::parse(&r, "A1.A2").is_err());
        assert!(Label::parse(&r, "A3").is_err());
        assert!(Label::parse(&r, "C1").is_err());
    }

    #[test]
    fn extremal() {
        let r = pd();
        assert_eq!(
            extremal_address(&r, 2, 0, Extremal::Max).display(&r),
            "B2.A2"
        );
        assert_eq!(
            extremal_address(&r, 2, 0, Extremal::Min).display(&r),
            "A1.A1"
        );
        assert_eq!(extremal_address(&r, 1, 1, Extremal::Max).display(&r), "B2");
        assert!(extremal_address(&r, 0, 1, Extremal::Max).is_empty());
    }

    #[test]
    fn words_from_addresses() {
        let r = pd();
        let w = address_to_word(&r, &addr(&r, "B2.A2.A1"), DEFAULT_WORD_CAP).unwrap();
        assert_eq!(r.word_string(&w.letters), "ABAAABAB");
        assert_eq!(w.origin_index, Some(4));
        let w = address_to_word(&r, &addr(&r, "A1"), DEFAULT_WORD_CAP).unwrap();
        assert_eq!(
            (r.word_string(&w.letters).as_str(), w.origin_index),
            ("AB", Some(1))
        );
        let w = address_to_word(&r, &addr(&r, "A2"), DEFAULT_WORD_CAP).unwrap();
        assert_eq!(w.origin_index, Some(2));
        let bad = Address::from_digits(vec![Label::new(0, 1), Label::new(0, 2)]);
        assert!(address_to_word(&r, &bad, DEFAULT_WORD_CAP).is_err());
    }

    #[test]
    fn first_increasable_levels() {
        let r = pd();
        assert_eq!(first_increasable(&r, &addr(&r, "B2.A2.A1")), Some(3));
        assert_eq!(first_increasable(&r, &addr(&r, "A1.A1")), Some(1));
        assert_eq!(first_increasable(&r, &addr(&r, "B2.A2")), None);
    }

    #[test]
    fn vershik_cases() {
        let r = pd();
        let v = vershik(&r, &addr(&r, "B2.A2.A1")).unwrap();
        assert_eq!(v.display(&r), "A1.B1.A2");
        assert_eq!(vershik(&r, &addr(&r, "A1")).unwrap().display(&r), "A2");
        assert!(matches!(
            vershik(&r, &addr(&r, "B2.A2")),
            Err(Error::Saturated(_))
        ));
    }

    #[test]
    fn oracle_cases() {
        let r = pd();
        let o = shift_oracle(&r, &addr(&r, "B2.A2.A1"), DEFAULT_WORD_CAP).unwrap();
        assert_eq!(o.display(&r), "A1.B1.A2");
        assert_eq!(
            shift_oracle(&r, &addr(&r, "A1"), DEFAULT_WORD_CAP)
                .unwrap()
                .display(&r),
            "A2"
        );
        assert!(shift_oracle(&r, &addr(&r, "B2.A2"), DEFAULT_WORD_CAP).is_err());

        let fib = SubstitutionRule::parse("a -> ab\nb -> a").unwrap();
        let o = shift_oracle(&fib, &addr(&fib, "a1.a1"), DEFAULT_WORD_CAP).unwrap();
        assert_eq!(o.display(&fib), "a2.a1");
    }
}
