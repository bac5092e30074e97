//! Symbolic Wick ordering for `a_i^* a_i = 1 + q a_i a_i^*`, `a_i^* a_j = 0`.
//!
//! Coefficients are polynomials in `q` with integer coefficients, so the
//! normal form is exact; reals only enter in [`evaluate`].

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rep::{OperatorFamily, SparseOperator, C64};
use crate::words::{Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WickError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("expression uses {expr_n} generators but the family has {family_n}")]
    AlphabetMismatch { expr_n: u32, family_n: u32 },
}

/// `a_k` or `a_k^*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenSymbol {
    pub index: Letter,
    pub starred: bool,
}

impl GenSymbol {
    pub fn new(index: Letter, starred: bool) -> Self {
        GenSymbol { index, starred }
    }
}

impl fmt::Display for GenSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}{}", self.index, if self.starred { "*" } else { "" })
    }
}

/// Polynomial in `q` with integer coefficients; zero coefficients are never
/// stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QPoly(BTreeMap<u32, i64>);

impl QPoly {
    pub fn zero() -> Self {
        QPoly(BTreeMap::new())
    }

    pub fn one() -> Self {
        Self::monomial(0, 1)
    }

    pub fn monomial(exp: u32, coeff: i64) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, coeff);
        p
    }

    pub fn from_coeffs(coeffs: &[i64]) -> Self {
        let mut p = Self::zero();
        for (e, &c) in coeffs.iter().enumerate() {
            p.add_term(e as u32, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, exp: u32) -> i64 {
        self.0.get(&exp).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, i64)> + '_ {
        self.0.iter().map(|(&e, &c)| (e, c))
    }

    fn add_term(&mut self, exp: u32, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let c = self.0.entry(exp).or_insert(0);
        *c += coeff;
        if *c == 0 {
            self.0.remove(&exp);
        }
    }

    pub fn add(&self, other: &QPoly) -> QPoly {
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e, c);
        }
        out
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        let mut out = QPoly::zero();
        for (e1, c1) in self.terms() {
            for (e2, c2) in other.terms() {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }

    /// Multiplies by `q`.
    pub fn shift(&self) -> QPoly {
        QPoly(self.0.iter().map(|(&e, &c)| (e + 1, c)).collect())
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.terms().fold(0.0, |acc, (e, c)| acc + c as f64 * q.powi(e as i32))
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (e, c)) in self.terms().enumerate() {
            let (sign, abs) = if c < 0 { ("-", -c) } else { ("+", c) };
            match (i, sign) {
                (0, "-") => f.write_str("-")?,
                (0, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            match (e, abs) {
                (0, a) => write!(f, "{a}")?,
                (_, 1) => {}
                (_, a) => write!(f, "{a} ")?,
            }
            match e {
                0 => {}
                1 => f.write_str("q")?,
                _ => write!(f, "q^{e}")?,
            }
        }
        Ok(())
    }
}

/// One summand of a parsed expression: a scalar times a product of symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coeff: QPoly,
    pub symbols: Vec<GenSymbol>,
}

/// A parsed, not yet ordered expression over `n` generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExpr {
    pub n: u32,
    pub terms: Vec<Term>,
}

impl RawExpr {
    pub fn word(n: u32, symbols: Vec<GenSymbol>) -> Self {
        RawExpr { n, terms: vec![Term { coeff: QPoly::one(), symbols }] }
    }
}

/// Parses `"a1* a1 + 3q^2 a2"`-style input.
///
/// Tokens are separated by whitespace; `+` separates summands. A token is a
/// symbol `aK` or `aK*`, or a scalar: an optional integer followed by an
/// optional `q` or `q^E`.
pub fn parse_expr(text: &str, n: u32) -> Result<RawExpr, WickError> {
    let mut terms = Vec::new();
    let mut cur = Term { coeff: QPoly::one(), symbols: Vec::new() };
    let mut cur_empty = true;
    let mut summand_start = 0;
    for (offset, tok) in tokens(text) {
        if tok == "+" {
            if cur_empty {
                return Err(parse_err(offset, "empty summand before '+'"));
            }
            terms.push(std::mem::replace(&mut cur, Term { coeff: QPoly::one(), symbols: Vec::new() }));
            cur_empty = true;
            summand_start = offset + 1;
            continue;
        }
        cur_empty = false;
        if let Some(rest) = tok.strip_prefix('a') {
            let (digits, starred) = match rest.strip_suffix('*') {
                Some(d) => (d, true),
                None => (rest, false),
            };
            let k: u32 = digits
                .parse()
                .map_err(|_| parse_err(offset, format!("unknown token {tok:?}")))?;
            let index = Letter::new(k, n)
                .map_err(|_| parse_err(offset + 1, format!("generator index {k} outside 1..={n}")))?;
            cur.symbols.push(GenSymbol { index, starred });
        } else {
            let s = parse_scalar(tok).ok_or_else(|| parse_err(offset, format!("unknown token {tok:?}")))?;
            cur.coeff = cur.coeff.mul(&s);
        }
    }
    if cur_empty {
        let at = if terms.is_empty() { 0 } else { summand_start };
        return Err(parse_err(at.min(text.len()), "empty summand"));
    }
    terms.push(cur);
    Ok(RawExpr { n, terms })
}

fn parse_err(offset: usize, message: impl Into<String>) -> WickError {
    WickError::Parse { offset, message: message.into() }
}

/// Splits on whitespace, with `+` always a token of its own.
fn tokens(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() || ch == '+' {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
            if ch == '+' {
                out.push((i, "+"));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

fn parse_scalar(tok: &str) -> Option<QPoly> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, tok),
    };
    let split = body.find('q').unwrap_or(body.len());
    let (num, qpart) = body.split_at(split);
    let mut c: i64 = if num.is_empty() { 1 } else { num.parse().ok()? };
    if num.is_empty() && qpart.is_empty() {
        return None;
    }
    if neg {
        c = -c;
    }
    let exp = match qpart {
        "" => 0,
        "q" => 1,
        _ => qpart.strip_prefix("q^")?.parse().ok()?,
    };
    Some(QPoly::monomial(exp, c))
}

/// `coeff · a_α (a_β)^*` with `a_α = a_{α_1} ··· a_{α_k}`; in operator order
/// the starred factors read `a_{β_k}^* ··· a_{β_1}^*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalMonomial {
    pub creators: Word,
    pub annihilators: Word,
    pub coeff: QPoly,
}

impl NormalMonomial {
    /// The factors in operator order.
    pub fn symbols(&self) -> Vec<GenSymbol> {
        let mut out: Vec<GenSymbol> = self.creators.letters().iter().map(|&l| GenSymbol::new(l, false)).collect();
        out.extend(self.annihilators.letters().iter().rev().map(|&l| GenSymbol::new(l, true)));
        out
    }
}

/// A normal form: all creators left of all annihilators, keyed by
/// (creator word, annihilator word).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WickExpr {
    n: u32,
    terms: BTreeMap<(Word, Word), QPoly>,
}

impl WickExpr {
    pub fn zero(n: u32) -> Self {
        WickExpr { n, terms: BTreeMap::new() }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, creators: &Word, annihilators: &Word) -> QPoly {
        self.terms.get(&(creators.clone(), annihilators.clone())).cloned().unwrap_or_default()
    }

    pub fn monomials(&self) -> Vec<NormalMonomial> {
        self.terms
            .iter()
            .map(|((a, b), c)| NormalMonomial {
                creators: a.clone(),
                annihilators: b.clone(),
                coeff: c.clone(),
            })
            .collect()
    }

    fn insert_normal(&mut self, symbols: &[GenSymbol], coeff: &QPoly) {
        let split = symbols.iter().position(|s| s.starred).unwrap_or(symbols.len());
        let creators = Word::from_letters(symbols[..split].iter().map(|s| s.index).collect());
        let annihilators = Word::from_letters(symbols[split..].iter().rev().map(|s| s.index).collect());
        let key = (creators, annihilators);
        let sum = self.terms.get(&key).map_or_else(|| coeff.clone(), |c| c.add(coeff));
        if sum.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, sum);
        }
    }

    /// Operator-order rendering, e.g. `(1 + q) + q^4 a1 a1 a1* a1*`.
    pub fn operator_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .monomials()
            .iter()
            .map(|m| {
                let c = &m.coeff;
                let syms: Vec<String> = m.symbols().iter().map(ToString::to_string).collect();
                let scalar = if c.terms().count() > 1 { format!("({c})") } else { c.to_string() };
                match (syms.is_empty(), *c == QPoly::one()) {
                    (true, _) => scalar,
                    (false, true) => syms.join(" "),
                    (false, false) => format!("{scalar} {}", syms.join(" ")),
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for WickExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, ((a, b), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({c}) · a{a} a*{b}")?;
        }
        Ok(())
    }
}

/// Which adjacent `a_i^* a_j` pair is rewritten first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewriteOrder {
    Leftmost,
    Rightmost,
}

/// Number of (starred, unstarred) pairs with the starred symbol to the
/// left, adjacent or not. Every rewrite strictly lowers it.
pub fn inversions(symbols: &[GenSymbol]) -> usize {
    let mut stars = 0;
    let mut count = 0;
    for s in symbols {
        if s.starred {
            stars += 1;
        } else {
            count += stars;
        }
    }
    count
}

/// One rewrite step, or `None` if the word is already normal. The result
/// lists the replacement words with their scalar factors.
pub fn rewrite_once(symbols: &[GenSymbol], strategy: RewriteOrder) -> Option<Vec<(QPoly, Vec<GenSymbol>)>> {
    let mut pairs = (0..symbols.len().saturating_sub(1)).filter(|&i| symbols[i].starred && !symbols[i + 1].starred);
    let i = match strategy {
        RewriteOrder::Leftmost => pairs.next()?,
        RewriteOrder::Rightmost => pairs.next_back()?,
    };
    let (l, r) = (symbols[i], symbols[i + 1]);
    if l.index != r.index {
        return Some(Vec::new());
    }
    let mut unit = symbols[..i].to_vec();
    unit.extend_from_slice(&symbols[i + 2..]);
    let mut swapped = symbols.to_vec();
    swapped[i] = r;
    swapped[i + 1] = l;
    Some(vec![(QPoly::one(), unit), (QPoly::monomial(1, 1), swapped)])
}

pub fn normal_form(expr: &RawExpr) -> WickExpr {
    normal_form_with(expr, RewriteOrder::Leftmost)
}

pub fn normal_form_with(expr: &RawExpr, strategy: RewriteOrder) -> WickExpr {
    let mut out = WickExpr::zero(expr.n);
    // Pending words, merged so that repeated intermediates are rewritten once.
    let mut pending: BTreeMap<Vec<GenSymbol>, QPoly> = BTreeMap::new();
    for t in &expr.terms {
        merge(&mut pending, t.symbols.clone(), &t.coeff);
    }
    while let Some((word, coeff)) = pending.pop_first() {
        match rewrite_once(&word, strategy) {
            None => out.insert_normal(&word, &coeff),
            Some(parts) => {
                for (c, w) in parts {
                    merge(&mut pending, w, &coeff.mul(&c));
                }
            }
        }
    }
    out
}

fn merge(map: &mut BTreeMap<Vec<GenSymbol>, QPoly>, word: Vec<GenSymbol>, coeff: &QPoly) {
    let sum = map.get(&word).map_or_else(|| coeff.clone(), |c| c.add(coeff));
    if sum.is_zero() {
        map.remove(&word);
    } else {
        map.insert(word, sum);
    }
}

/// Product of generator matrices in symbol order; the empty product is the
/// identity.
pub fn evaluate_symbols(symbols: &[GenSymbol], family: &OperatorFamily) -> SparseOperator {
    let mut acc = SparseOperator::identity(family.dim());
    for s in symbols.iter().rev() {
        let m = if s.starred { family.adjoint(s.index.get()) } else { family.generator(s.index.get()) };
        acc = m.matmul(&acc).expect("square operators of equal size");
    }
    acc
}

pub fn evaluate_raw(expr: &RawExpr, family: &OperatorFamily, q: f64) -> Result<SparseOperator, WickError> {
    check_alphabet(expr.n, family)?;
    let mut acc = SparseOperator::zeros(family.dim(), family.dim());
    for t in &expr.terms {
        acc = acc.axpy(C64::new(t.coeff.eval(q), 0.0), &evaluate_symbols(&t.symbols, family)).expect("same shape");
    }
    Ok(acc)
}

/// Substitutes `A_k` for `a_k`, adjoints for `a_k^*` and `q` into the
/// coefficients.
pub fn evaluate(expr: &WickExpr, family: &OperatorFamily, q: f64) -> Result<SparseOperator, WickError> {
    check_alphabet(expr.n, family)?;
    let mut acc = SparseOperator::zeros(family.dim(), family.dim());
    for m in expr.monomials() {
        acc = acc.axpy(C64::new(m.coeff.eval(q), 0.0), &evaluate_symbols(&m.symbols(), family)).expect("same shape");
    }
    Ok(acc)
}

/// Largest difference between a word and its normal form, both evaluated
/// on `family`, over the interior labels at depth `max(1, len)`.
///
/// Each column difference is scaled by `max(1, ||W v||, Σ |c| ||T v||)`,
/// `T` running over the normal-form terms. Returns the residual and the
/// number of columns compared.
pub fn oracle_residual(symbols: &[GenSymbol], family: &OperatorFamily) -> Result<(f64, usize), WickError> {
    let q = family.q();
    let raw = RawExpr::word(family.n(), symbols.to_vec());
    check_alphabet(raw.n, family)?;
    let word = evaluate_symbols(symbols, family);
    let terms: Vec<(f64, SparseOperator)> = normal_form(&raw)
        .monomials()
        .iter()
        .map(|m| (m.coeff.eval(q), evaluate_symbols(&m.symbols(), family)))
        .collect();
    let mut diff = word.clone();
    for (c, t) in &terms {
        diff = diff.axpy(C64::new(-c, 0.0), t).expect("same shape");
    }
    let interior = family.interior(symbols.len().max(1));
    let worst = interior
        .iter()
        .map(|&v| {
            let spread = terms.iter().fold(0.0, |acc, (c, t)| acc + c.abs() * t.column_norm(v));
            diff.column_norm(v) / spread.max(word.column_norm(v)).max(1.0)
        })
        .fold(0.0, f64::max);
    Ok((worst, interior.len()))
}

fn check_alphabet(expr_n: u32, family: &OperatorFamily) -> Result<(), WickError> {
    if expr_n != family.n() {
        return Err(WickError::AlphabetMismatch { expr_n, family_n: family.n() });
    }
    Ok(())
}

/// Uniformly random symbol string of length `0..=max_len`.
pub fn random_word<R: Rng>(rng: &mut R, n: u32, max_len: usize) -> Vec<GenSymbol> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let index = Letter::new(rng.gen_range(1..=n), n).expect("in range");
            GenSymbol::new(index, rng.gen_bool(0.5))
        })
        .collect()
}

pub fn symbols_to_string(symbols: &[GenSymbol]) -> String {
    if symbols.is_empty() {
        return "1".into();
    }
    symbols.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfluenceReport {
    pub n: u32,
    pub max_len: usize,
    pub trials: usize,
    pub seed: u64,
    pub mismatches: usize,
    /// Up to ten offending words, in operator order.
    pub examples: Vec<String>,
}

/// Compares leftmost-first and rightmost-first rewriting on random words.
pub fn confluence_probe(n: u32, max_len: usize, trials: usize, seed: u64) -> ConfluenceReport {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    let mut examples = Vec::new();
    for _ in 0..trials {
        let w = random_word(&mut rng, n, max_len);
        let e = RawExpr::word(n, w.clone());
        if normal_form_with(&e, RewriteOrder::Leftmost) != normal_form_with(&e, RewriteOrder::Rightmost) {
            mismatches += 1;
            if examples.len() < 10 {
                examples.push(symbols_to_string(&w));
            }
        }
    }
    ConfluenceReport { n, max_len, trials, seed, mismatches, examples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::{build_generators, RepSpec, Truncation};
    use crate::words::Alphabet;
    use proptest::prelude::*;

    fn nf(text: &str, n: u32) -> WickExpr {
        normal_form(&parse_expr(text, n).unwrap())
    }

    fn w(l: &[u32]) -> Word {
        Alphabet::new(3).unwrap().word(l).unwrap()
    }

    #[test]
    fn parse_examples() {
        let e = parse_expr("a1* a1", 2).unwrap();
        assert_eq!(e.terms.len(), 1);
        assert_eq!(symbols_to_string(&e.terms[0].symbols), "a1* a1");
        assert_eq!(symbols_to_string(&parse_expr("a1 a2*", 2).unwrap().terms[0].symbols), "a1 a2*");
        assert!(matches!(parse_expr("a0", 2), Err(WickError::Parse { offset: 1, .. })));
        assert!(matches!(parse_expr("a1 b2", 2), Err(WickError::Parse { offset: 3, .. })));
        assert!(matches!(parse_expr("a1 a3", 2), Err(WickError::Parse { offset: 4, .. })));
        assert!(parse_expr("a1 + + a2", 2).is_err());
        assert!(parse_expr("", 2).is_err());
        assert!(parse_expr("a1 +", 2).is_err());
    }

    #[test]
    fn parse_scalars() {
        let e = parse_expr("3q^2 a1 + q a2* + -2 + 1", 2).unwrap();
        assert_eq!(e.terms[0].coeff, QPoly::monomial(2, 3));
        assert_eq!(e.terms[1].coeff, QPoly::monomial(1, 1));
        assert_eq!(e.terms[2].coeff, QPoly::monomial(0, -2));
        assert!(e.terms[3].symbols.is_empty());
        assert_eq!(parse_expr("2 q a1", 1).unwrap().terms[0].coeff, QPoly::monomial(1, 2));
        assert!(parse_expr("q^x a1", 1).is_err());
    }

    #[test]
    fn qpoly_display() {
        assert_eq!(QPoly::from_coeffs(&[1, 1]).to_string(), "1 + q");
        assert_eq!(QPoly::from_coeffs(&[0, 1, 2, 1]).to_string(), "q + 2 q^2 + q^3");
        assert_eq!(QPoly::from_coeffs(&[-1, 0, -3]).to_string(), "-1 - 3 q^2");
        assert_eq!(QPoly::zero().to_string(), "0");
        assert_eq!(QPoly::from_coeffs(&[1, 1]).mul(&QPoly::from_coeffs(&[1, 1])), QPoly::from_coeffs(&[1, 2, 1]));
    }

    #[test]
    fn orthogonality_kills() {
        assert!(nf("a1* a2", 2).is_zero());
        assert!(nf("a1* a2 a1", 2).is_zero());
        assert!(normal_form_with(&parse_expr("a1* a2 a1", 2).unwrap(), RewriteOrder::Rightmost).is_zero());
    }

    #[test]
    fn basic_relation() {
        let e = nf("a1* a1", 1);
        assert_eq!(e.len(), 2);
        assert_eq!(e.coeff(&Word::empty(), &Word::empty()), QPoly::one());
        assert_eq!(e.coeff(&w(&[1]), &w(&[1])), QPoly::monomial(1, 1));
    }

    #[test]
    fn double_relation_by_hand() {
        // y y x x with y = a1*, x = a1, rewritten by hand:
        // (1+q) + q(1+q)^2 x y + q^4 x x y y
        let e = nf("a1* a1* a1 a1", 1);
        assert_eq!(e.len(), 3);
        assert_eq!(e.coeff(&Word::empty(), &Word::empty()), QPoly::from_coeffs(&[1, 1]));
        assert_eq!(e.coeff(&w(&[1]), &w(&[1])), QPoly::from_coeffs(&[0, 1, 2, 1]));
        assert_eq!(e.coeff(&w(&[1, 1]), &w(&[1, 1])), QPoly::monomial(4, 1));
        assert_eq!(e.operator_string(), "(1 + q) + (q + 2 q^2 + q^3) a1 a1* + q^4 a1 a1 a1* a1*");
        assert_eq!(
            e.to_string(),
            "(1 + q) · a[] a*[] + (q + 2 q^2 + q^3) · a[1] a*[1] + (q^4) · a[1,1] a*[1,1]"
        );
    }

    #[test]
    fn annihilator_word_is_reversed_operator_order() {
        let e = nf("a1 a2* a1*", 2);
        let m = &e.monomials()[0];
        assert_eq!(m.annihilators, Alphabet::new(2).unwrap().word(&[1, 2]).unwrap());
        assert_eq!(symbols_to_string(&m.symbols()), "a1 a2* a1*");
    }

    #[test]
    fn normal_words_are_fixed() {
        let e = nf("a2 a1 a1 a2* a1*", 2);
        assert_eq!(e.len(), 1);
        assert_eq!(e.operator_string(), "a2 a1 a1 a2* a1*");
    }

    #[test]
    fn cancellation_removes_monomials() {
        assert!(nf("a1* a1 + -1 + -1 q a1 a1*", 1).is_zero());
    }

    #[test]
    fn q_zero_isometry() {
        for m in 1..=5 {
            let text = format!("{} {}", vec!["a2*"; m].join(" "), vec!["a2"; m].join(" "));
            let e = nf(&text, 3);
            for mono in e.monomials() {
                let c = mono.coeff.eval(0.0);
                let expect = if mono.creators.is_empty() && mono.annihilators.is_empty() { 1.0 } else { 0.0 };
                assert_eq!(c, expect, "{text}");
            }
        }
    }

    #[test]
    fn matches_dense_fock_oracle() {
        // independent oracle: dense matrices of the Fock weights
        let q: f64 = 0.5;
        let size = 12;
        let mut a = nalgebra::DMatrix::<f64>::zeros(size, size);
        for m in 0..size - 1 {
            a[(m + 1, m)] = ((1.0 - q.powi(m as i32 + 1)) / (1.0 - q)).sqrt();
        }
        let ad = a.transpose();
        let lhs = &ad * &ad * &a * &a;
        let rhs = nalgebra::DMatrix::<f64>::identity(size, size) * (1.0 + q)
            + (&a * &ad) * (q + 2.0 * q * q + q * q * q)
            + (&a * &a * &ad * &ad) * q.powi(4);
        for c in 0..size - 2 {
            for r in 0..size {
                assert!((lhs[(r, c)] - rhs[(r, c)]).abs() < 1e-12);
            }
        }
        let f = build_generators(&RepSpec::FockQ1 { q }, &Truncation::new(0, 0, size as i64 - 1)).unwrap();
        let e = evaluate(&nf("a1* a1* a1 a1", 1), &f, q).unwrap();
        for c in 0..size - 2 {
            assert!((e.get(c, c).re - rhs[(c, c)]).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_basics() {
        let f = build_generators(&RepSpec::FockQn { q: 0.3, n: 2 }, &Truncation::new(3, 0, 0)).unwrap();
        assert_eq!(evaluate_symbols(&[], &f), SparseOperator::identity(f.dim()));
        let z = evaluate_raw(&parse_expr("a1* a2", 2).unwrap(), &f, 0.3).unwrap();
        for &v in f.basis().interior(2) {
            assert!(z.column(v).is_empty());
        }
        assert!(matches!(
            evaluate_raw(&parse_expr("a1", 1).unwrap(), &f, 0.3),
            Err(WickError::AlphabetMismatch { .. })
        ));
        let rel = evaluate(&nf("a1* a1", 2), &f, 0.3).unwrap();
        let direct = f.adjoint(1).matmul(f.generator(1)).unwrap();
        for &v in f.basis().interior(2) {
            assert!((rel.get(v, v) - direct.get(v, v)).norm() < 1e-12);
        }
    }

    #[test]
    fn probe_finds_no_mismatch() {
        let r = confluence_probe(2, 6, 200, 7);
        assert_eq!(r.mismatches, 0, "{:?}", r.examples);
        assert_eq!(r.trials, 200);
    }

    fn arb_word(n: u32, max_len: usize) -> impl Strategy<Value = Vec<GenSymbol>> {
        prop::collection::vec((1..=n, any::<bool>()), 0..=max_len).prop_map(move |v| {
            v.into_iter().map(|(k, s)| GenSymbol::new(Letter::new(k, n).unwrap(), s)).collect()
        })
    }

    proptest! {
        #[test]
        fn rewriting_lowers_inversions(word in arb_word(3, 12)) {
            let mut frontier = vec![word];
            while let Some(w) = frontier.pop() {
                if let Some(parts) = rewrite_once(&w, RewriteOrder::Leftmost) {
                    for (_, p) in parts {
                        prop_assert!(inversions(&p) < inversions(&w));
                        frontier.push(p);
                    }
                } else {
                    prop_assert_eq!(inversions(&w), 0);
                }
            }
        }

        #[test]
        fn strategies_agree(word in arb_word(3, 8)) {
            let e = RawExpr::word(3, word);
            prop_assert_eq!(normal_form_with(&e, RewriteOrder::Leftmost), normal_form_with(&e, RewriteOrder::Rightmost));
        }

        #[test]
        fn normal_form_is_idempotent(word in arb_word(2, 7)) {
            let e = normal_form(&RawExpr::word(2, word));
            let again = RawExpr {
                n: 2,
                terms: e.monomials().iter().map(|m| Term { coeff: m.coeff.clone(), symbols: m.symbols() }).collect(),
            };
            prop_assert_eq!(normal_form(&again), e);
        }
    }
}
