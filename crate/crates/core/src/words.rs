//! Finite multi-indices over the alphabet `{1..n}`.
//!
//! Words label basis vectors of the word-indexed representations. The two
//! elementary transformations are [`sigma`] (drop the first letter) and
//! [`sigma_k`] (prepend a letter); [`m_k`] measures the leading run of a
//! letter, which controls the eigenvalues of the number operators.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("letter {value} is outside the alphabet 1..={n}")]
    InvalidLetter { value: u32, n: u32 },
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,
    #[error("malformed word {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// A generator index, `1 <= value`.
///
/// The upper bound depends on the ambient alphabet, so it is checked by
/// [`Alphabet::letter`] rather than by the type itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(u32);

impl Letter {
    pub fn new(value: u32, n: u32) -> Result<Self, WordError> {
        if value == 0 || value > n {
            return Err(WordError::InvalidLetter { value, n });
        }
        Ok(Letter(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position, for indexing per-generator tables.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The alphabet `{1..n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    n: u32,
}

impl Alphabet {
    pub fn new(n: u32) -> Result<Self, WordError> {
        if n == 0 {
            return Err(WordError::EmptyAlphabet);
        }
        Ok(Alphabet { n })
    }

    pub fn size(self) -> u32 {
        self.n
    }

    pub fn letter(self, value: u32) -> Result<Letter, WordError> {
        Letter::new(value, self.n)
    }

    pub fn letters(self) -> impl Iterator<Item = Letter> {
        (1..=self.n).map(Letter)
    }

    /// Checked prepend: rejects `k` outside the alphabet.
    pub fn sigma_k(self, k: u32, w: &Word) -> Result<Word, WordError> {
        Ok(sigma_k(self.letter(k)?, w))
    }

    pub fn word(self, letters: &[u32]) -> Result<Word, WordError> {
        letters
            .iter()
            .map(|&l| self.letter(l))
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    /// Every word of length at most `max_len`, in length-then-lex order.
    pub fn enumerate(self, max_len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        let mut level = vec![Word::empty()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(level.len() * self.n as usize);
            for w in &level {
                for l in self.letters() {
                    let mut letters = w.0.clone();
                    letters.push(l);
                    next.push(Word(letters));
                }
            }
            // appending to lex-sorted prefixes keeps the level lex-sorted
            out.extend(next.iter().cloned());
            level = next;
        }
        out
    }

    /// Words of `Λ_j` (empty, or last letter different from `j`) of length
    /// at most `max_len`, in length-then-lex order.
    pub fn enumerate_lambda_j(self, j: Letter, max_len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        if self.n == 1 {
            return out;
        }
        // Words of Λ_j of length l are (any word of length l-1) · (letter != j).
        let mut prefixes = vec![Word::empty()];
        for _ in 0..max_len {
            let mut level = Vec::new();
            for p in &prefixes {
                for l in self.letters().filter(|&l| l != j) {
                    let mut letters = p.0.clone();
                    letters.push(l);
                    level.push(Word(letters));
                }
            }
            level.sort();
            out.extend(level);
            let mut next = Vec::with_capacity(prefixes.len() * self.n as usize);
            for p in &prefixes {
                for l in self.letters() {
                    let mut letters = p.0.clone();
                    letters.push(l);
                    next.push(Word(letters));
                }
            }
            prefixes = next;
        }
        out
    }
}

/// A finite word over the alphabet; the empty word is `∅`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn max_letter(&self) -> Option<u32> {
        self.0.iter().map(|l| l.0).max()
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", l.0)?;
        }
        f.write_str("]")
    }
}

impl FromStr for Word {
    type Err = WordError;

    /// Parses `"[2,2,1]"`; `"[]"` is the empty word. The alphabet bound is
    /// not known here, only positivity is checked.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| WordError::Parse {
            text: s.to_string(),
            reason: reason.to_string(),
        };
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| err("expected brackets"))?;
        if inner.trim().is_empty() {
            return Ok(Word::empty());
        }
        inner
            .split(',')
            .map(|tok| {
                let v: u32 = tok.trim().parse().map_err(|_| err("non-integer letter"))?;
                if v == 0 {
                    return Err(err("letters start at 1"));
                }
                Ok(Letter(v))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Drops the first letter. Totalized with `σ(∅) = ∅`.
pub fn sigma(w: &Word) -> Word {
    match w.0.split_first() {
        Some((_, rest)) => Word(rest.to_vec()),
        None => Word::empty(),
    }
}

/// Prepends `k`.
pub fn sigma_k(k: Letter, w: &Word) -> Word {
    let mut letters = Vec::with_capacity(w.len() + 1);
    letters.push(k);
    letters.extend_from_slice(&w.0);
    Word(letters)
}

/// Length of the maximal leading run of `k` in `w`; `m_k(∅) = 0`.
pub fn m_k(k: Letter, w: &Word) -> usize {
    w.0.iter().take_while(|&&l| l == k).count()
}

/// Membership in `Λ_j`: empty, or the last letter differs from `j`.
pub fn is_in_lambda_j(w: &Word, j: Letter) -> bool {
    w.last().is_none_or(|l| l != j)
}

/// Number of words of length at most `max_len` in `Λ_j` over `n` letters.
pub fn lambda_j_count(n: u32, max_len: usize) -> usize {
    let n = n as usize;
    let mut total = 1;
    let mut pow = 1;
    for _ in 1..=max_len {
        total += (n - 1) * pow;
        pow *= n;
    }
    total
}
