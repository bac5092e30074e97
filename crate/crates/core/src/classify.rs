//! Orbit normalization of the unbounded parameter, the `Δ_x` invariant,
//! equivalence of listed representations and parameter detection from
//! generator matrices.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{q_wold, AnalysisError};
use crate::rep::{FamilyTag, GeneratorSet, RepSpec};

/// Rounding guard for the half-open fundamental domain.
pub const BOUNDARY_GUARD: f64 = 1e-14;
/// Tolerance for comparing normalized `x` values.
pub const X_MATCH_TOL: f64 = 1e-12;
/// Tolerance for reading a phase off a matrix.
pub const PHASE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("y = {y} is not above 1/(1-q) = {limit}")]
    OutOfRange { y: f64, limit: f64 },
    #[error("invalid fundamental domain: need q in (0,1) and x0 > 1/(1-q), got q = {q}, x0 = {x0}")]
    InvalidDomain { q: f64, x0: f64 },
    #[error("window [{lo}, {hi}] contains the accumulation point 1/(1-q) = {limit} or is unbounded")]
    InfiniteWindow { lo: f64, hi: f64, limit: f64 },
    #[error("incomparable specs: {0}")]
    Incomparable(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("unrecognized structure: {0}")]
    Unrecognized(String),
    #[error("decomposition of generator {generator} failed: {source}")]
    Decomposition { generator: usize, source: Box<AnalysisError> },
}

/// The interval `(1 + q x0, x0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub q: f64,
    pub x0: f64,
}

impl FundamentalDomain {
    pub fn new(q: f64, x0: f64) -> Result<Self, ClassifyError> {
        if !(q > 0.0 && q < 1.0) || !x0.is_finite() || x0 <= 1.0 / (1.0 - q) {
            return Err(ClassifyError::InvalidDomain { q, x0 });
        }
        Ok(FundamentalDomain { q, x0 })
    }

    /// `x0 = 2/(1-q)`.
    pub fn default_for(q: f64) -> Result<Self, ClassifyError> {
        Self::new(q, 2.0 / (1.0 - q))
    }

    pub fn lower(&self) -> f64 {
        1.0 + self.q * self.x0
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower() < x && x <= self.x0
    }
}

/// Orbit representative of an input value, with `f^shift(x) = input` for
/// `f(t) = 1 + q t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedParam {
    pub x: f64,
    pub shift: i64,
    pub input: f64,
}

impl NormalizedParam {
    /// `f^shift(x)`.
    pub fn reconstruct(&self, q: f64) -> f64 {
        orbit_step(self.x, q, self.shift)
    }
}

impl fmt::Display for NormalizedParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x={} (shift {:+} from {})", short(self.x), self.shift, short(self.input))
    }
}

/// Twelve significant digits, trailing zeros dropped.
fn short(v: f64) -> String {
    let exp = if v == 0.0 { 0 } else { v.abs().log10().floor() as i32 };
    let fixed = format!("{:.*}", (11 - exp).max(0) as usize, v);
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

/// `f^k(t)` for `f(t) = 1 + q t`, any integer `k`.
pub fn orbit_step(t: f64, q: f64, k: i64) -> f64 {
    let c = 1.0 / (1.0 - q);
    c + q.powi(k as i32) * (t - c)
}

pub fn normalize_x(y: f64, q: f64, x0: f64) -> Result<NormalizedParam, ClassifyError> {
    let dom = FundamentalDomain::new(q, x0)?;
    let c = 1.0 / (1.0 - q);
    if !y.is_finite() || y <= c {
        return Err(ClassifyError::OutOfRange { y, limit: c });
    }
    let (u, u0) = (y - c, x0 - c);
    let mut k = ((u / u0).ln() / q.ln()).floor() as i64;
    let at = |k: i64| c + u * q.powi(-(k as i32));
    let mut x = at(k);
    // the floor can land one step off after rounding
    while x > x0 * (1.0 + BOUNDARY_GUARD) {
        k += 1;
        x = at(k);
    }
    while x <= dom.lower() * (1.0 - BOUNDARY_GUARD) {
        k -= 1;
        x = at(k);
    }
    let guard = BOUNDARY_GUARD * x0.abs().max(1.0);
    if (x - x0).abs() <= guard {
        x = x0;
    } else if (x - dom.lower()).abs() <= guard {
        x = x0;
        k += 1;
    }
    Ok(NormalizedParam { x, shift: k, input: y })
}

/// Points of `Δ_x = {1/(1-q) + q^m (x - 1/(1-q)) : m ∈ Z}` in `[lo, hi]`,
/// ascending.
///
/// A window reaching down to `1/(1-q)` would hold infinitely many points
/// and is an error.
pub fn delta_set(x: f64, q: f64, lo: f64, hi: f64) -> Result<Vec<f64>, ClassifyError> {
    let c = 1.0 / (1.0 - q);
    if !(q > 0.0 && q < 1.0) {
        return Err(ClassifyError::InvalidDomain { q, x0: x });
    }
    if !x.is_finite() || x <= c {
        return Err(ClassifyError::OutOfRange { y: x, limit: c });
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(ClassifyError::InfiniteWindow { lo, hi, limit: c });
    }
    if hi < lo || hi <= c {
        return Ok(Vec::new());
    }
    if lo <= c {
        return Err(ClassifyError::InfiniteWindow { lo, hi, limit: c });
    }
    let u = x - c;
    let m_lo = ((hi - c) / u).ln() / q.ln();
    let m_hi = ((lo - c) / u).ln() / q.ln();
    let mut out: Vec<f64> = ((m_lo.floor() as i64 - 1)..=(m_hi.ceil() as i64 + 1))
        .rev()
        .map(|m| c + q.powi(m as i32) * u)
        .filter(|v| lo <= *v && *v <= hi)
        .collect();
    out.dedup();
    Ok(out)
}

/// Why two specs are or are not equivalent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    Fock { family: String },
    MatchedX { j: u32, x: f64 },
    MatchedPhi { j: u32, phi: f64 },
    Distinct { invariant: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceDecision {
    pub equivalent: bool,
    pub certificate: Certificate,
}

fn distinct(invariant: String) -> EquivalenceDecision {
    EquivalenceDecision { equivalent: false, certificate: Certificate::Distinct { invariant } }
}

/// Decides unitary equivalence of two listed irreducible representations.
/// `x0` defaults to `2/(1-q)`.
pub fn same_rep(a: &RepSpec, b: &RepSpec, x0: Option<f64>) -> Result<EquivalenceDecision, ClassifyError> {
    for s in [a, b] {
        s.validate().map_err(|e| ClassifyError::InvalidSpec(e.to_string()))?;
    }
    let (a, b) = (a.canonical(), b.canonical());
    if a.q() != b.q() {
        return Err(ClassifyError::Incomparable(format!("q = {} vs q = {}", a.q(), b.q())));
    }
    if a.n() != b.n() {
        return Err(ClassifyError::Incomparable(format!("n = {} vs n = {}", a.n(), b.n())));
    }
    if a.tag() != b.tag() {
        return Ok(distinct(format!("family {} vs {}", a.tag(), b.tag())));
    }
    let q = a.q();
    let decision = match (a, b) {
        (RepSpec::FockQ1 { .. }, _) | (RepSpec::FockQn { .. }, _) => EquivalenceDecision {
            equivalent: true,
            certificate: Certificate::Fock { family: a.tag().to_string() },
        },
        (RepSpec::Circle { phi: p1, .. }, RepSpec::Circle { phi: p2, .. }) => phi_decision(1, p1, 1, p2),
        (RepSpec::BoundedPhiJ { j: j1, phi: p1, .. }, RepSpec::BoundedPhiJ { j: j2, phi: p2, .. }) => {
            phi_decision(j1, p1, j2, p2)
        }
        (RepSpec::LineZ { x: x1, .. }, RepSpec::LineZ { x: x2, .. }) => x_decision(q, x0, 1, x1, 1, x2)?,
        (RepSpec::UnboundedXJ { j: j1, x: x1, .. }, RepSpec::UnboundedXJ { j: j2, x: x2, .. }) => {
            x_decision(q, x0, j1, x1, j2, x2)?
        }
        _ => unreachable!("tags compared equal"),
    };
    Ok(decision)
}

fn phi_decision(j1: u32, p1: f64, j2: u32, p2: f64) -> EquivalenceDecision {
    if j1 != j2 {
        distinct(format!("j = {j1} vs j = {j2}"))
    } else if p1 != p2 {
        distinct(format!("phi = {p1} vs phi = {p2}"))
    } else {
        EquivalenceDecision { equivalent: true, certificate: Certificate::MatchedPhi { j: j1, phi: p1 } }
    }
}

fn x_decision(q: f64, x0: Option<f64>, j1: u32, x1: f64, j2: u32, x2: f64) -> Result<EquivalenceDecision, ClassifyError> {
    let dom = match x0 {
        Some(x0) => FundamentalDomain::new(q, x0)?,
        None => FundamentalDomain::default_for(q)?,
    };
    if j1 != j2 {
        return Ok(distinct(format!("j = {j1} vs j = {j2}")));
    }
    let n1 = normalize_x(x1, q, dom.x0)?;
    let n2 = normalize_x(x2, q, dom.x0)?;
    Ok(if (n1.x - n2.x).abs() <= X_MATCH_TOL * n1.x.abs().max(1.0) {
        EquivalenceDecision { equivalent: true, certificate: Certificate::MatchedX { j: j1, x: n1.x } }
    } else {
        distinct(format!("normalized x = {} vs x = {}", n1.x, n2.x))
    })
}

/// Recovers the listed family and its parameters from generator matrices,
/// possibly in a permuted or rephased basis. An unbounded `x` comes back
/// normalized into `(1 + q x0, x0]`, `x0` defaulting to `2/(1-q)`.
pub fn detect_parameters(gs: &GeneratorSet, tol: f64, x0: Option<f64>) -> Result<RepSpec, ClassifyError> {
    let q = gs.q;
    let n = gs.n() as u32;
    if n == 0 {
        return Err(ClassifyError::Unrecognized("no generators".into()));
    }
    // q = 0 has no unbounded families; any valid x0 keeps q_wold happy there
    let x0 = match x0 {
        Some(x0) => x0,
        None if q > 0.0 => FundamentalDomain::default_for(q)?.x0,
        None => 2.0,
    };
    let mut unbounded = Vec::new();
    let mut phases = Vec::new();
    let mut other = Vec::new();
    for k in 0..gs.n() {
        let w = q_wold(&gs.generators[k], &gs.interior[k], q, tol, x0)
            .map_err(|e| ClassifyError::Decomposition { generator: k + 1, source: Box::new(e) })?;
        if !w.unbounded_blocks.is_empty() {
            unbounded.push((k as u32 + 1, w));
        } else if w.unitary_block.present {
            phases.push((k as u32 + 1, w));
        } else if w.fock_blocks.is_empty() {
            other.push(k + 1);
        }
    }
    if !other.is_empty() {
        return Err(ClassifyError::Unrecognized(format!("generators {other:?} show no block structure")));
    }
    match (unbounded.as_slice(), phases.as_slice()) {
        ([], []) => Ok(if n == 1 { RepSpec::FockQ1 { q } } else { RepSpec::FockQn { q, n } }),
        ([(j, w)], []) => {
            if w.unbounded_blocks.len() != 1 {
                return Err(ClassifyError::Unrecognized(format!(
                    "generator {j} has {} unbounded orbits",
                    w.unbounded_blocks.len()
                )));
            }
            let x = w.unbounded_blocks[0].x;
            Ok(if n == 1 { RepSpec::LineZ { q, x } } else { RepSpec::UnboundedXJ { q, n, j: *j, x } })
        }
        ([], [(j, w)]) => {
            let theta = w.unitary_block.phase.ok_or_else(|| {
                ClassifyError::Unrecognized(format!(
                    "generator {j} has a {}-dimensional unitary block",
                    w.unitary_block.ordinals.len()
                ))
            })?;
            let mut phi = theta / TAU;
            if !(0.0..1.0 - PHASE_TOL).contains(&phi) {
                phi = 0.0;
            }
            Ok(if n == 1 { RepSpec::Circle { q, phi: phi * TAU } } else { RepSpec::BoundedPhiJ { q, n, j: *j, phi } })
        }
        _ => Err(ClassifyError::Unrecognized(format!(
            "unbounded blocks on generators {:?}, unitary blocks on generators {:?}",
            unbounded.iter().map(|u| u.0).collect::<Vec<_>>(),
            phases.iter().map(|u| u.0).collect::<Vec<_>>()
        ))),
    }
}

/// Whether a detected spec matches an expected one, comparing unbounded
/// parameters through [`same_rep`] and phases within [`PHASE_TOL`].
pub fn detection_matches(expected: &RepSpec, detected: &RepSpec, x0: Option<f64>) -> bool {
    let (e, d) = (expected.canonical(), detected.canonical());
    if e.tag() != d.tag() || e.n() != d.n() || e.q() != d.q() || e.j() != d.j() {
        return false;
    }
    match (e, d) {
        (RepSpec::Circle { phi: a, .. }, RepSpec::Circle { phi: b, .. }) => {
            let diff = (a - b).rem_euclid(TAU);
            diff.min(TAU - diff) <= PHASE_TOL * TAU
        }
        (RepSpec::BoundedPhiJ { phi: a, .. }, RepSpec::BoundedPhiJ { phi: b, .. }) => {
            let diff = (a - b).rem_euclid(1.0);
            diff.min(1.0 - diff) <= PHASE_TOL
        }
        (RepSpec::LineZ { x: a, .. }, RepSpec::LineZ { x: b, .. })
        | (RepSpec::UnboundedXJ { x: a, .. }, RepSpec::UnboundedXJ { x: b, .. }) => {
            let (Some(x0), q) = (x0.or_else(|| FundamentalDomain::default_for(e.q()).ok().map(|d| d.x0)), e.q()) else {
                return false;
            };
            match (normalize_x(a, q, x0), normalize_x(b, q, x0)) {
                (Ok(na), Ok(nb)) => (na.x - nb.x).abs() <= 1e-10 * na.x.abs().max(1.0),
                _ => false,
            }
        }
        _ => e.tag() == FamilyTag::FockQ1 || e.tag() == FamilyTag::FockQn,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::{build_generators, Truncation};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(1.0)
    }

    #[test]
    fn normalize_examples() {
        let p = normalize_x(2.8, 0.5, 3.0).unwrap();
        assert!(close(p.x, 2.8) && p.shift == 0);
        let p = normalize_x(2.2, 0.5, 3.0).unwrap();
        assert!(close(p.x, 2.8) && p.shift == 2);
        let p = normalize_x(3.6, 0.5, 3.0).unwrap();
        assert!(close(p.x, 2.8) && p.shift == -1);
        assert!(matches!(normalize_x(2.0, 0.5, 3.0), Err(ClassifyError::OutOfRange { .. })));
        assert!(matches!(normalize_x(2.2, 0.5, 1.5), Err(ClassifyError::InvalidDomain { .. })));
    }

    #[test]
    fn normalize_display() {
        let p = NormalizedParam { x: 2.8, shift: 2, input: 2.2 };
        assert_eq!(p.to_string(), "x=2.8 (shift +2 from 2.2)");
    }

    #[test]
    fn display_rounds_representation_noise() {
        let p = normalize_x(2.2, 0.5, 3.0).unwrap();
        assert_eq!(p.to_string(), "x=2.8 (shift +2 from 2.2)");
        assert_eq!(short(1234.5), "1234.5");
        assert_eq!(short(0.001), "0.001");
    }

    #[test]
    fn domain_ends() {
        // the closed end stays, the open end moves up one step
        let p = normalize_x(3.0, 0.5, 3.0).unwrap();
        assert_eq!((p.x, p.shift), (3.0, 0));
        let p = normalize_x(2.5, 0.5, 3.0).unwrap();
        assert_eq!((p.x, p.shift), (3.0, 1));
    }

    #[test]
    fn delta_examples() {
        let d = delta_set(2.8, 0.5, 2.04, 4.0).unwrap();
        let want = [2.05, 2.1, 2.2, 2.4, 2.8, 3.6];
        assert_eq!(d.len(), want.len());
        assert!(d.iter().zip(want).all(|(a, b)| close(*a, b)));
        assert!(delta_set(2.8, 0.5, 0.0, 1.9).unwrap().is_empty());
        assert!(matches!(delta_set(2.8, 0.5, 2.0, 4.0), Err(ClassifyError::InfiniteWindow { .. })));
    }

    #[test]
    fn same_rep_examples() {
        let u = |j, x| RepSpec::UnboundedXJ { q: 0.5, n: 2, j, x };
        assert!(same_rep(&u(1, 2.2), &u(1, 2.8), Some(3.0)).unwrap().equivalent);
        assert!(!same_rep(&u(1, 2.8), &u(2, 2.8), Some(3.0)).unwrap().equivalent);
        assert!(!same_rep(&u(1, 2.8), &u(1, 2.9), Some(3.0)).unwrap().equivalent);
        let other_q = RepSpec::UnboundedXJ { q: 0.25, n: 2, j: 1, x: 2.8 };
        assert!(matches!(same_rep(&u(1, 2.8), &other_q, None), Err(ClassifyError::Incomparable(_))));
        let fock = RepSpec::FockQn { q: 0.5, n: 2 };
        assert!(same_rep(&fock, &fock, None).unwrap().equivalent);
        assert!(!same_rep(&fock, &u(1, 2.8), None).unwrap().equivalent);
    }

    #[test]
    fn decision_json() {
        let u = |x| RepSpec::LineZ { q: 0.5, x };
        let d = same_rep(&u(2.2), &u(2.8), Some(3.0)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["equivalent"], true);
        assert_eq!(v["certificate"]["kind"], "matched_x");
    }

    #[test]
    fn detects_bounded_phase() {
        let spec = RepSpec::BoundedPhiJ { q: 0.5, n: 2, j: 1, phi: 0.25 };
        let f = build_generators(&spec, &Truncation::new(4, 0, 0)).unwrap();
        let got = detect_parameters(&f.generator_set(), 1e-8, None).unwrap();
        match got {
            RepSpec::BoundedPhiJ { j, phi, .. } => {
                assert_eq!(j, 1);
                assert!((phi - 0.25).abs() < 1e-10);
            }
            other => panic!("detected {other:?}"),
        }
    }

    #[test]
    fn detects_permuted_unbounded() {
        let spec = RepSpec::UnboundedXJ { q: 0.5, n: 2, j: 2, x: 2.8 };
        let f = build_generators(&spec, &Truncation::new(4, -6, 6)).unwrap();
        let gs = f.generator_set();
        let perm: Vec<usize> = (0..gs.dim()).map(|i| (i * 7 + 3) % gs.dim()).collect();
        let mut seen = perm.clone();
        seen.sort_unstable();
        assert!(seen.iter().enumerate().all(|(i, &p)| i == p), "not a permutation");
        let got = detect_parameters(&gs.permuted(&perm), 1e-8, Some(3.0)).unwrap();
        match got {
            RepSpec::UnboundedXJ { j, x, .. } => {
                assert_eq!(j, 2);
                assert!((x - 2.8).abs() < 1e-10, "x = {x}");
            }
            other => panic!("detected {other:?}"),
        }
    }

    #[test]
    fn detects_fock() {
        let f = build_generators(&RepSpec::FockQn { q: 0.3, n: 3 }, &Truncation::new(3, 0, 0)).unwrap();
        assert_eq!(detect_parameters(&f.generator_set(), 1e-8, None).unwrap(), RepSpec::FockQn { q: 0.3, n: 3 });
    }
}
