//! Representation families and their generator action on basis labels.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::sparse::C64;
use super::RepError;
use crate::words::{m_k, sigma, sigma_k, Alphabet, Letter, Word};

/// `[m]_q = (1 - q^m) / (1 - q)`.
pub fn q_integer(m: usize, q: f64) -> f64 {
    (1.0 - q.powi(m as i32)) / (1.0 - q)
}

/// Weight squared of the level-`s` step in the unbounded one-generator
/// family: `(1 - q^s)/(1 - q) + q^s x`.
pub fn level_weight_sq(s: i64, q: f64, x: f64) -> f64 {
    let qs = q.powi(s as i32);
    (1.0 - qs) / (1.0 - q) + qs * x
}

/// Validated deformation parameter `0 <= q < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QParam(f64);

impl QParam {
    pub fn new(q: f64) -> Result<Self, RepError> {
        if !(0.0..1.0).contains(&q) {
            return Err(RepError::InvalidSpec(format!("q = {q} outside [0, 1)")));
        }
        Ok(QParam(q))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 / (1 - q)`, the accumulation point of the orbits.
    pub fn limit(self) -> f64 {
        1.0 / (1.0 - self.0)
    }
}

impl TryFrom<f64> for QParam {
    type Error = RepError;
    fn try_from(q: f64) -> Result<Self, Self::Error> {
        QParam::new(q)
    }
}

impl From<QParam> for f64 {
    fn from(q: QParam) -> f64 {
        q.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FamilyTag {
    #[serde(rename = "fock1")]
    FockQ1,
    #[serde(rename = "circle")]
    Circle,
    #[serde(rename = "linez")]
    LineZ,
    #[serde(rename = "fockn")]
    FockQn,
    #[serde(rename = "unbounded")]
    UnboundedXJ,
    #[serde(rename = "bounded")]
    BoundedPhiJ,
}

impl FamilyTag {
    /// Name used on the command line and in spec strings.
    pub fn cli_name(self) -> &'static str {
        match self {
            FamilyTag::FockQ1 => "fock1",
            FamilyTag::Circle => "circle",
            FamilyTag::LineZ => "linez",
            FamilyTag::FockQn => "fockn",
            FamilyTag::UnboundedXJ => "unbounded",
            FamilyTag::BoundedPhiJ => "bounded",
        }
    }

    pub fn from_cli_name(s: &str) -> Option<Self> {
        Some(match s {
            "fock1" => FamilyTag::FockQ1,
            "circle" => FamilyTag::Circle,
            "linez" => FamilyTag::LineZ,
            "fockn" => FamilyTag::FockQn,
            "unbounded" => FamilyTag::UnboundedXJ,
            "bounded" => FamilyTag::BoundedPhiJ,
            _ => return None,
        })
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, FamilyTag::LineZ | FamilyTag::UnboundedXJ)
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

/// One irreducible family with its parameters.
///
/// `Circle` carries an angle in radians, `BoundedPhiJ` a phase in turns
/// (`A_j e_∅ = exp(2πiφ) (1-q)^{-1/2} e_∅`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum RepSpec {
    #[serde(rename = "fock1")]
    FockQ1 { q: f64 },
    #[serde(rename = "circle")]
    Circle { q: f64, phi: f64 },
    #[serde(rename = "linez")]
    LineZ { q: f64, x: f64 },
    #[serde(rename = "fockn")]
    FockQn { q: f64, n: u32 },
    #[serde(rename = "unbounded")]
    UnboundedXJ { q: f64, n: u32, j: u32, x: f64 },
    #[serde(rename = "bounded")]
    BoundedPhiJ { q: f64, n: u32, j: u32, phi: f64 },
}

impl RepSpec {
    pub fn tag(&self) -> FamilyTag {
        match self {
            RepSpec::FockQ1 { .. } => FamilyTag::FockQ1,
            RepSpec::Circle { .. } => FamilyTag::Circle,
            RepSpec::LineZ { .. } => FamilyTag::LineZ,
            RepSpec::FockQn { .. } => FamilyTag::FockQn,
            RepSpec::UnboundedXJ { .. } => FamilyTag::UnboundedXJ,
            RepSpec::BoundedPhiJ { .. } => FamilyTag::BoundedPhiJ,
        }
    }

    pub fn q(&self) -> f64 {
        match *self {
            RepSpec::FockQ1 { q }
            | RepSpec::Circle { q, .. }
            | RepSpec::LineZ { q, .. }
            | RepSpec::FockQn { q, .. }
            | RepSpec::UnboundedXJ { q, .. }
            | RepSpec::BoundedPhiJ { q, .. } => q,
        }
    }

    /// Number of generators.
    pub fn n(&self) -> u32 {
        match *self {
            RepSpec::FockQ1 { .. } | RepSpec::Circle { .. } | RepSpec::LineZ { .. } => 1,
            RepSpec::FockQn { n, .. }
            | RepSpec::UnboundedXJ { n, .. }
            | RepSpec::BoundedPhiJ { n, .. } => n,
        }
    }

    /// The distinguished generator, for families that have one.
    pub fn j(&self) -> Option<u32> {
        match *self {
            RepSpec::UnboundedXJ { j, .. } | RepSpec::BoundedPhiJ { j, .. } => Some(j),
            RepSpec::Circle { .. } | RepSpec::LineZ { .. } => Some(1),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), RepError> {
        let q = QParam::new(self.q())?;
        let n = self.n();
        if n == 0 {
            return Err(RepError::InvalidSpec("n must be at least 1".into()));
        }
        if let Some(j) = self.j() {
            if j == 0 || j > n {
                return Err(RepError::InvalidSpec(format!("j = {j} outside 1..={n}")));
            }
        }
        match *self {
            RepSpec::LineZ { x, .. } | RepSpec::UnboundedXJ { x, .. } => {
                if q.get() == 0.0 {
                    return Err(RepError::InvalidSpec(
                        "q = 0 is not admitted for unbounded families".into(),
                    ));
                }
                if !x.is_finite() || x <= q.limit() {
                    return Err(RepError::InvalidSpec(format!(
                        "x = {x} must exceed 1/(1-q) = {}",
                        q.limit()
                    )));
                }
            }
            RepSpec::Circle { phi, .. } if !(0.0..2.0 * PI).contains(&phi) => {
                return Err(RepError::InvalidSpec(format!("phi = {phi} outside [0, 2π)")));
            }
            RepSpec::BoundedPhiJ { phi, .. } if !(0.0..1.0).contains(&phi) => {
                return Err(RepError::InvalidSpec(format!("phi = {phi} outside [0, 1)")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Collapses one-generator word families onto the single-generator
    /// families they coincide with.
    pub fn canonical(&self) -> RepSpec {
        match *self {
            RepSpec::FockQn { q, n: 1 } => RepSpec::FockQ1 { q },
            RepSpec::UnboundedXJ { q, n: 1, x, .. } => RepSpec::LineZ { q, x },
            RepSpec::BoundedPhiJ { q, n: 1, phi, .. } => RepSpec::Circle {
                q,
                phi: 2.0 * PI * phi,
            },
            other => other,
        }
    }

    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.n().max(1)).expect("n >= 1")
    }

    fn j_letter(&self) -> Letter {
        Letter::new(self.j().unwrap_or(1), self.n()).expect("validated j")
    }

    /// Action of `A_k` (or `A_k^*` when `adjoint`) on a basis vector of the
    /// untruncated representation. `k` is 1-based.
    pub fn step(&self, label: &BasisLabel, k: u32, adjoint: bool) -> Step {
        let q = self.q();
        let kl = Letter::new(k, self.n()).expect("generator index in range");
        match (*self, label) {
            (RepSpec::FockQ1 { .. }, BasisLabel::FockLevel { m }) => {
                let m = *m;
                if !adjoint {
                    Step::to(BasisLabel::FockLevel { m: m + 1 }, q_integer(m as usize + 1, q).sqrt())
                } else if m == 0 {
                    Step::Zero
                } else {
                    Step::to(BasisLabel::FockLevel { m: m - 1 }, q_integer(m as usize, q).sqrt())
                }
            }
            (RepSpec::Circle { phi, .. }, l @ BasisLabel::WordOnly { .. }) => {
                let w = C64::from_polar((1.0 / (1.0 - q)).sqrt(), phi);
                Step::To(l.clone(), if adjoint { w.conj() } else { w })
            }
            (RepSpec::LineZ { x, .. }, BasisLabel::ZLevel { s }) => {
                let s = *s;
                if !adjoint {
                    Step::to(BasisLabel::ZLevel { s: s + 1 }, level_weight_sq(s, q, x).sqrt())
                } else {
                    Step::to(BasisLabel::ZLevel { s: s - 1 }, level_weight_sq(s - 1, q, x).sqrt())
                }
            }
            (RepSpec::FockQn { .. }, BasisLabel::WordOnly { word }) => {
                word_step(word, kl, q, adjoint).map_or(Step::Zero, |(w, c)| {
                    Step::to(BasisLabel::WordOnly { word: w }, c)
                })
            }
            (RepSpec::UnboundedXJ { x, .. }, BasisLabel::WordLevel { word, s }) => {
                let s = *s;
                if word.is_empty() && kl == self.j_letter() {
                    if !adjoint {
                        Step::to(BasisLabel::WordLevel { word: Word::empty(), s: s + 1 }, level_weight_sq(s, q, x).sqrt())
                    } else {
                        Step::to(BasisLabel::WordLevel { word: Word::empty(), s: s - 1 }, level_weight_sq(s - 1, q, x).sqrt())
                    }
                } else {
                    word_step(word, kl, q, adjoint).map_or(Step::Zero, |(w, c)| {
                        Step::to(BasisLabel::WordLevel { word: w, s }, c)
                    })
                }
            }
            (RepSpec::BoundedPhiJ { phi, .. }, BasisLabel::WordOnly { word }) => {
                if word.is_empty() && kl == self.j_letter() {
                    let w = C64::from_polar((1.0 / (1.0 - q)).sqrt(), 2.0 * PI * phi);
                    Step::To(label.clone(), if adjoint { w.conj() } else { w })
                } else {
                    word_step(word, kl, q, adjoint).map_or(Step::Zero, |(w, c)| {
                        Step::to(BasisLabel::WordOnly { word: w }, c)
                    })
                }
            }
            (spec, label) => panic!("label {label} does not belong to family {}", spec.tag()),
        }
    }

    /// Enumerates the truncated basis labels in their canonical order.
    pub fn labels(&self, trunc: &Truncation) -> Result<Vec<BasisLabel>, RepError> {
        self.validate()?;
        let window = || -> Result<std::ops::RangeInclusive<i64>, RepError> {
            if trunc.s_min > trunc.s_max {
                return Err(RepError::InvalidTruncation(format!(
                    "empty level window [{}, {}]",
                    trunc.s_min, trunc.s_max
                )));
            }
            Ok(trunc.s_min..=trunc.s_max)
        };
        Ok(match *self {
            RepSpec::FockQ1 { .. } => {
                if trunc.s_max < 0 {
                    return Err(RepError::InvalidTruncation(format!(
                        "Fock window [0, {}] is empty",
                        trunc.s_max
                    )));
                }
                (0..=trunc.s_max as u64).map(|m| BasisLabel::FockLevel { m }).collect()
            }
            RepSpec::Circle { .. } => vec![BasisLabel::WordOnly { word: Word::empty() }],
            RepSpec::LineZ { .. } => window()?.map(|s| BasisLabel::ZLevel { s }).collect(),
            RepSpec::FockQn { .. } => self
                .alphabet()
                .enumerate(trunc.max_len)
                .into_iter()
                .map(|word| BasisLabel::WordOnly { word })
                .collect(),
            RepSpec::UnboundedXJ { .. } => {
                let words = self.alphabet().enumerate_lambda_j(self.j_letter(), trunc.max_len);
                let levels = window()?;
                words
                    .iter()
                    .flat_map(|w| levels.clone().map(move |s| BasisLabel::WordLevel { word: w.clone(), s }))
                    .collect()
            }
            RepSpec::BoundedPhiJ { .. } => self
                .alphabet()
                .enumerate_lambda_j(self.j_letter(), trunc.max_len)
                .into_iter()
                .map(|word| BasisLabel::WordOnly { word })
                .collect(),
        })
    }
}

/// Weighted-shift action on words shared by the word-indexed families.
fn word_step(word: &Word, k: Letter, q: f64, adjoint: bool) -> Option<(Word, f64)> {
    if !adjoint {
        let target = sigma_k(k, word);
        let w = q_integer(m_k(k, &target), q).sqrt();
        Some((target, w))
    } else if word.first() == Some(k) {
        Some((sigma(word), q_integer(m_k(k, word), q).sqrt()))
    } else {
        None
    }
}

impl fmt::Display for RepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RepSpec::FockQ1 { q } => write!(f, "fock1(q={q})"),
            RepSpec::Circle { q, phi } => write!(f, "circle(q={q}, phi={phi})"),
            RepSpec::LineZ { q, x } => write!(f, "linez(q={q}, x={x})"),
            RepSpec::FockQn { q, n } => write!(f, "fockn(q={q}, n={n})"),
            RepSpec::UnboundedXJ { q, n, j, x } => write!(f, "unbounded(q={q}, n={n}, j={j}, x={x})"),
            RepSpec::BoundedPhiJ { q, n, j, phi } => write!(f, "bounded(q={q}, n={n}, j={j}, phi={phi})"),
        }
    }
}

/// Finite window of the infinite basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// Maximum word length, for word-indexed families.
    pub max_len: usize,
    /// Level window, for level-indexed families. Fock levels use `[0, s_max]`.
    pub s_min: i64,
    pub s_max: i64,
}

impl Truncation {
    pub fn new(max_len: usize, s_min: i64, s_max: i64) -> Self {
        Truncation { max_len, s_min, s_max }
    }
}

/// Label of one basis vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisLabel {
    WordLevel { word: Word, s: i64 },
    WordOnly { word: Word },
    ZLevel { s: i64 },
    FockLevel { m: u64 },
}

impl BasisLabel {
    pub fn word(&self) -> Option<&Word> {
        match self {
            BasisLabel::WordLevel { word, .. } | BasisLabel::WordOnly { word } => Some(word),
            _ => None,
        }
    }

    pub fn level(&self) -> Option<i64> {
        match *self {
            BasisLabel::WordLevel { s, .. } | BasisLabel::ZLevel { s } => Some(s),
            BasisLabel::FockLevel { m } => Some(m as i64),
            BasisLabel::WordOnly { .. } => None,
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::FockLevel { m } => write!(f, "e_{m}"),
            BasisLabel::ZLevel { s } => write!(f, "e_{{{s}}}"),
            BasisLabel::WordOnly { word } => write!(f, "e{word}"),
            BasisLabel::WordLevel { word, s } => write!(f, "e{word}^{{{s}}}"),
        }
    }
}

/// Image of a basis vector under one generator or adjoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Zero,
    To(BasisLabel, C64),
}

impl Step {
    fn to(label: BasisLabel, weight: f64) -> Step {
        Step::To(label, C64::new(weight, 0.0))
    }
}
