//! Substitution rules, their transition matrices and Perron–Frobenius data.
//!
//! Letters are stored as indices into the rule's alphabet; the alphabet keeps
//! the order of first appearance on the left-hand sides of the rule source.

use std::fmt;

use crate::error::{Error, Result};

/// Index of a letter in its rule's alphabet.
pub type Letter = usize;

/// Default cap on the length of materialized supertiles.
pub const DEFAULT_WORD_CAP: usize = 10_000_000;

const POWER_TOL: f64 = 1e-14;
const POWER_MAX_ITER: usize = 1_000_000;
const RESIDUAL_TOL: f64 = 1e-12;
const POLISH_STEPS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionRule {
    alphabet: Vec<char>,
    images: Vec<Vec<Letter>>,
}

impl SubstitutionRule {
    /// Builds a rule from an alphabet and one image word per letter.
    pub fn new(alphabet: Vec<char>, images: Vec<Vec<Letter>>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty alphabet".into(),
            });
        }
        for (i, c) in alphabet.iter().enumerate() {
            if alphabet[..i].contains(c) {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("duplicate letter '{c}'"),
                });
            }
        }
        if images.len() != alphabet.len() {
            return Err(Error::Parse {
                line: 0,
                msg: "one image per letter required".into(),
            });
        }
        for (a, img) in images.iter().enumerate() {
            if img.is_empty() {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("empty image for '{}'", alphabet[a]),
                });
            }
            if img.iter().any(|&b| b >= alphabet.len()) {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("image of '{}' uses an undeclared letter", alphabet[a]),
                });
            }
        }
        Ok(SubstitutionRule { alphabet, images })
    }

    /// Parses the line-oriented `LETTER -> WORD` format.
    ///
    /// `#` starts a comment, blank lines are ignored and whitespace inside a
    /// word is dropped, so `1 -> 1 3 2` and `1 -> 132` are the same rule.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lhs: Vec<(char, usize)> = Vec::new();
        let mut rhs: Vec<Vec<char>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (left, right) = line.split_once("->").ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "expected `LETTER -> WORD`".into(),
            })?;
            let left = left.trim();
            let mut chars = left.chars();
            let letter = match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_alphanumeric() => c,
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("left-hand side `{left}` is not a single letter"),
                    })
                }
            };
            if lhs.iter().any(|&(c, _)| c == letter) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate left-hand letter '{letter}'"),
                });
            }
            let word: Vec<char> = right.chars().filter(|c| !c.is_whitespace()).collect();
            if word.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("empty image for '{letter}'"),
                });
            }
            if let Some(bad) = word.iter().find(|c| !c.is_ascii_alphanumeric()) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("invalid letter '{bad}'"),
                });
            }
            lhs.push((letter, line_no));
            rhs.push(word);
        }
        if lhs.is_empty() {
            return Err(Error::Parse {
                line: 0,
                msg: "empty input".into(),
            });
        }
        let alphabet: Vec<char> = lhs.iter().map(|&(c, _)| c).collect();
        let mut images = Vec::with_capacity(rhs.len());
        for (word, &(_, line_no)) in rhs.iter().zip(&lhs) {
            let mut img = Vec::with_capacity(word.len());
            for c in word {
                let l = alphabet
                    .iter()
                    .position(|a| a == c)
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("image uses undeclared letter '{c}'"),
                    })?;
                img.push(l);
            }
            images.push(img);
        }
        SubstitutionRule::new(alphabet, images)
    }

    /// Convenience constructor from `(letter, image)` pairs.
    pub fn from_pairs(pairs: &[(char, &str)]) -> Result<Self> {
        let text: String = pairs.iter().map(|(c, w)| format!("{c} -> {w}\n")).collect();
        Self::parse(&text)
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        0..self.alphabet.len()
    }

    pub fn image(&self, letter: Letter) -> &[Letter] {
        &self.images[letter]
    }

    pub fn image_len(&self, letter: Letter) -> usize {
        self.images[letter].len()
    }

    pub fn letter_index(&self, c: char) -> Option<Letter> {
        self.alphabet.iter().position(|&a| a == c)
    }

    pub fn letter_char(&self, letter: Letter) -> char {
        self.alphabet[letter]
    }

    pub fn word_string(&self, word: &[Letter]) -> String {
        word.iter().map(|&l| self.alphabet[l]).collect()
    }

    /// `Some(K)` when every image has length `K`.
    pub fn constant_length(&self) -> Option<usize> {
        let k = self.images[0].len();
        self.images.iter().all(|w| w.len() == k).then_some(k)
    }

    /// Applies the rule letter by letter to a word.
    pub fn apply(&self, word: &[Letter]) -> Vec<Letter> {
        word.iter()
            .flat_map(|&l| self.images[l].iter().copied())
            .collect()
    }

    /// The `k`-th power of the rule on the same alphabet.
    pub fn power(&self, k: usize) -> SubstitutionRule {
        assert!(k >= 1, "rule power must be positive");
        let images = self
            .letters()
            .map(|a| {
                let mut w = vec![a];
                for _ in 0..k {
                    w = self.apply(&w);
                }
                w
            })
            .collect();
        SubstitutionRule {
            alphabet: self.alphabet.clone(),
            images,
        }
    }

    /// Lengths `|Sⁿ(α)|` for every letter, or `None` on `u128` overflow.
    pub fn supertile_lengths(&self, n: usize) -> Option<Vec<u128>> {
        let mut lens = vec![1u128; self.size()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(lens.len());
            for a in self.letters() {
                let mut s: u128 = 0;
                for &b in &self.images[a] {
                    s = s.checked_add(lens[b])?;
                }
                next.push(s);
            }
            lens = next;
        }
        Some(lens)
    }

    /// The `n`-supertile of `letter`, refusing words longer than `cap`.
    pub fn supertile(&self, letter: Letter, n: usize, cap: usize) -> Result<Word> {
        let predicted = self
            .supertile_lengths(n)
            .map(|l| l[letter])
            .unwrap_or(u128::MAX);
        if predicted > cap as u128 {
            return Err(Error::CapExceeded {
                what: "supertile length",
                requested: predicted,
                cap: cap as u128,
            });
        }
        let mut w = vec![letter];
        for _ in 0..n {
            w = self.apply(&w);
        }
        Ok(Word::new(w))
    }
}

impl fmt::Display for SubstitutionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.letters() {
            writeln!(
                f,
                "{} -> {}",
                self.alphabet[a],
                self.word_string(&self.images[a])
            )?;
        }
        Ok(())
    }
}

/// A finite word, optionally marking which letter sits at coordinate 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub letters: Vec<Letter>,
    /// 1-based position of the origin letter.
    pub origin_index: Option<usize>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word {
            letters,
            origin_index: None,
        }
    }

    pub fn with_origin(letters: Vec<Letter>, origin_index: usize) -> Self {
        debug_assert!(origin_index >= 1 && origin_index <= letters.len());
        Word {
            letters,
            origin_index: Some(origin_index),
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn origin_letter(&self) -> Option<Letter> {
        self.origin_index.map(|i| self.letters[i - 1])
    }
}

/// `M[i][j]` counts occurrences of letter `i` in the image of letter `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    entries: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    pub fn from_rule(rule: &SubstitutionRule) -> Self {
        let s = rule.size();
        let mut entries = vec![vec![0u64; s]; s];
        for j in rule.letters() {
            for &i in rule.image(j) {
                entries[i][j] += 1;
            }
        }
        TransitionMatrix { entries }
    }

    pub fn from_rows(entries: Vec<Vec<u64>>) -> Self {
        assert!(entries.iter().all(|r| r.len() == entries.len()));
        TransitionMatrix { entries }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.entries
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.size())
            .map(|j| self.entries.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Smallest `k <= (s-1)^2 + 1` with `M^k` entrywise positive.
    pub fn primitivity(&self) -> Option<usize> {
        let s = self.size();
        let base: Vec<Vec<bool>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&v| v > 0).collect())
            .collect();
        let mut pow = base.clone();
        let bound = (s - 1) * (s - 1) + 1;
        for k in 1..=bound {
            if pow.iter().all(|r| r.iter().all(|&b| b)) {
                return Some(k);
            }
            let mut next = vec![vec![false; s]; s];
            for i in 0..s {
                for j in 0..s {
                    next[i][j] = (0..s).any(|m| pow[i][m] && base[m][j]);
                }
            }
            pow = next;
        }
        None
    }

    pub fn is_primitive(&self) -> bool {
        self.primitivity().is_some()
    }

    fn as_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    }

    fn transpose_f64(&self) -> Vec<Vec<f64>> {
        let s = self.size();
        (0..s)
            .map(|i| (0..s).map(|j| self.entries[j][i] as f64).collect())
            .collect()
    }
}

impl fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|r| {
                let cells: Vec<String> = r.iter().map(u64::to_string).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        write!(f, "[{}]", rows.join(","))
    }
}

/// Expansion factor with right (frequency) and left (natural length) eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub lambda: f64,
    /// Probability eigenvector: `right[α] = μ([α])`.
    pub right: Vec<f64>,
    /// Left eigenvector scaled so that `left · right = 1`.
    pub left: Vec<f64>,
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Power iteration from the uniform vector; returns the eigenvalue estimate
/// and the eigenvector normalized to sum 1.
fn power_iterate(m: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let s = m.len();
    let mut v = vec![1.0 / s as f64; s];
    for _ in 0..POWER_MAX_ITER {
        let mut w = mat_vec(m, &v);
        let total: f64 = w.iter().sum();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::NonConvergence { iterations: 0 });
        }
        w.iter_mut().for_each(|x| *x /= total);
        let diff = v
            .iter()
            .zip(&w)
            .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        v = w;
        if diff <= POWER_TOL * max_abs(&v) {
            polish(m, &mut v, diff);
            let lambda: f64 = mat_vec(m, &v).iter().sum();
            return Ok((lambda, v));
        }
    }
    Err(Error::NonConvergence {
        iterations: POWER_MAX_ITER,
    })
}

/// Keeps iterating past the tolerance while the step size still shrinks, so
/// the vector settles at rounding level.
fn polish(m: &[Vec<f64>], v: &mut Vec<f64>, mut last: f64) {
    for _ in 0..POLISH_STEPS {
        if last == 0.0 {
            return;
        }
        let mut w = mat_vec(m, v);
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let diff = v
            .iter()
            .zip(w.iter())
            .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        if diff >= last {
            return;
        }
        *v = w;
        last = diff;
    }
}

impl PerronData {
    pub fn compute(matrix: &TransitionMatrix) -> Result<Self> {
        let m = matrix.as_f64();
        let (lambda, right) = power_iterate(&m)?;
        if let Some(i) = right.iter().position(|&x| x <= RESIDUAL_TOL) {
            return Err(Error::Assumption(format!(
                "letter {i} has zero frequency; the subshift is not minimal"
            )));
        }
        let mt = matrix.transpose_f64();
        let (_, mut left) = power_iterate(&mt)?;
        let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
        left.iter_mut().for_each(|x| *x /= dot);

        let data = PerronData {
            lambda,
            right,
            left,
        };
        let (rr, lr) = data.residuals(matrix);
        if rr >= RESIDUAL_TOL || lr >= RESIDUAL_TOL * max_abs(&data.left).max(1.0) {
            return Err(Error::NonConvergence {
                iterations: POWER_MAX_ITER,
            });
        }
        Ok(data)
    }

    /// `(‖M r − λ r‖∞, ‖lᵀM − λ lᵀ‖∞)`.
    pub fn residuals(&self, matrix: &TransitionMatrix) -> (f64, f64) {
        let m = matrix.as_f64();
        let mr = mat_vec(&m, &self.right);
        let r_res = mr
            .iter()
            .zip(&self.right)
            .fold(0.0f64, |d, (a, b)| d.max((a - self.lambda * b).abs()));
        let lm = mat_vec(&matrix.transpose_f64(), &self.left);
        let l_res = lm
            .iter()
            .zip(&self.left)
            .fold(0.0f64, |d, (a, b)| d.max((a - self.lambda * b).abs()));
        (r_res, l_res)
    }

    /// `μ(Sⁿ([α])) = r(α) / λⁿ`.
    pub fn cylinder_measure(&self, letter: Letter, n: usize) -> f64 {
        self.right[letter] / self.lambda.powi(n as i32)
    }

    pub fn measure(&self, letter: Letter) -> f64 {
        self.right[letter]
    }
}

/// Rule plus derived matrix and Perron data, checked against the standing
/// assumptions (primitive, or explicitly asserted minimal).
#[derive(Debug, Clone)]
pub struct System {
    pub rule: SubstitutionRule,
    pub matrix: TransitionMatrix,
    pub perron: PerronData,
}

impl System {
    pub fn new(rule: SubstitutionRule, assume_minimal: bool) -> Result<Self> {
        let matrix = TransitionMatrix::from_rule(&rule);
        if !assume_minimal && !matrix.is_primitive() {
            return Err(Error::Assumption(
                "transition matrix is not primitive; pass assume-minimal to proceed".into(),
            ));
        }
        let perron = PerronData::compute(&matrix)?;
        Ok(System {
            rule,
            matrix,
            perron,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.perron.lambda
    }
}
