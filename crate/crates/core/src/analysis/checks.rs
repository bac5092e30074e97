use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ResidualReport;
use crate::rep::{q_integer, BasisLabel, Interval, IntervalSet, OperatorFamily, RepSpec, SparseOperator, C64};
use crate::words::{m_k, Letter};

fn rel(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

/// `A_i^* A_i = 1 + q A_i A_i^*` and `A_i^* A_j = 0` on interior_depth_2.
///
/// The pass test uses residuals relative to `max(1, ||A_i^* A_i v||)`; the
/// absolute maximum is reported under `max_abs_residual`.
pub fn relation_residuals(family: &OperatorFamily, tol: f64) -> ResidualReport {
    let n = family.n();
    let q = family.q();
    let dim = family.dim();
    let interior = family.interior(2);
    let id = SparseOperator::identity(dim);
    let c2: Vec<SparseOperator> =
        (1..=n).map(|k| family.adjoint(k).matmul(family.generator(k)).expect("square")).collect();
    let (mut diag_rel, mut cross_rel, mut max_abs) = (0.0f64, 0.0f64, 0.0f64);
    for i in 1..=n {
        let d2 = family.generator(i).matmul(family.adjoint(i)).expect("square");
        let r = c2[i as usize - 1]
            .sub(&id)
            .and_then(|m| m.axpy(C64::new(-q, 0.0), &d2))
            .expect("square");
        for &v in &interior {
            let abs = r.column_norm(v);
            max_abs = max_abs.max(abs);
            diag_rel = diag_rel.max(rel(abs, c2[i as usize - 1].column_norm(v)));
        }
        for j in (1..=n).filter(|&j| j != i) {
            let x = family.adjoint(i).matmul(family.generator(j)).expect("square");
            for &v in &interior {
                let abs = x.column_norm(v);
                max_abs = max_abs.max(abs);
                cross_rel = cross_rel.max(rel(abs, c2[j as usize - 1].column_norm(v)));
            }
        }
    }
    ResidualReport::new("relations", tol, diag_rel.max(cross_rel), interior.len())
        .detail("max_abs_residual", max_abs)
        .detail("same_index", diag_rel)
        .detail("cross_index", cross_rel)
}

/// Commutators of the diagonal `C_i^2` and `||(S_i^* S_j - δ_ij) v||` on
/// interior_depth_1.
pub fn check_structure_bc(family: &OperatorFamily, tol: f64) -> ResidualReport {
    let n = family.n();
    let interior = family.interior(1);
    let diag: Vec<SparseOperator> = (1..=n).map(|k| SparseOperator::from_real_diagonal(family.c_sq(k))).collect();
    let mut commutator = 0.0f64;
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            let ab = diag[i].matmul(&diag[j]).expect("square");
            let ba = diag[j].matmul(&diag[i]).expect("square");
            commutator = commutator.max(ab.sub(&ba).expect("square").max_abs());
        }
    }
    let id = SparseOperator::identity(family.dim());
    let mut isometry = 0.0f64;
    for i in 1..=n {
        for j in 1..=n {
            let mut p = family.isometry(i).adjoint().matmul(family.isometry(j)).expect("square");
            if i == j {
                p = p.sub(&id).expect("square");
            }
            for &v in &interior {
                isometry = isometry.max(p.column_norm(v));
            }
        }
    }
    ResidualReport::new("structure_bc", tol, commutator.max(isometry), interior.len())
        .detail("commutator", commutator)
        .detail("isometry", isometry)
}

/// `E_k(δ) S_k = S_k E_k((δ - 1)/q)` on interior_depth_1 for each `δ`, and
/// the indicator form `1_δ(D_k^2) S_k = S_k 1_δ(1 + q D_k^2)`.
///
/// At `q = 0` the shifted set is undefined; the check becomes
/// `E(δ) S = S` when `1 ∈ δ` and `E(δ) S = 0` otherwise, and `δ = {1}` is
/// always included.
pub fn check_shift_identity(family: &OperatorFamily, k: u32, intervals: &[IntervalSet], tol: f64) -> ResidualReport {
    let q = family.q();
    let s = family.isometry(k);
    let res = family.resolution(k);
    let d = family.d_sq(k);
    let interior = family.interior(1);
    let mut worst = 0.0f64;
    let mut indicator_form = 0.0f64;
    let column_diff = |a: &SparseOperator, b: &SparseOperator| -> f64 {
        let diff = a.sub(b).expect("square");
        interior.iter().map(|&v| diff.column_norm(v)).fold(0.0, f64::max)
    };
    let mut sets: Vec<IntervalSet> = intervals.to_vec();
    if q == 0.0 {
        sets.push(IntervalSet::single(Interval::point(1.0)));
    }
    for delta in &sets {
        let lhs = res.apply_e(delta).matmul(s).expect("square");
        if q == 0.0 {
            let rhs = if delta.contains(1.0) { s.clone() } else { SparseOperator::zeros(s.nrows(), s.ncols()) };
            worst = worst.max(column_diff(&lhs, &rhs));
            continue;
        }
        let rhs = s.matmul(&res.apply_e(&delta.preimage_affine(q, 1.0))).expect("square");
        worst = worst.max(column_diff(&lhs, &rhs));
        let ind: Vec<f64> = d.iter().map(|&t| if delta.contains(1.0 + q * t) { 1.0 } else { 0.0 }).collect();
        let rhs2 = s.matmul(&SparseOperator::from_real_diagonal(&ind)).expect("square");
        indicator_form = indicator_form.max(column_diff(&lhs, &rhs2));
    }
    let report = ResidualReport::new(format!("shift_identity[k={k}]"), tol, worst.max(indicator_form), interior.len())
        .detail("intervals", sets.len() as f64)
        .detail("projection_form", worst)
        .detail("indicator_form", indicator_form);
    if q == 0.0 {
        report.note("q = 0: checked E(δ)S = S for 1 ∈ δ and E(δ)S = 0 otherwise")
    } else {
        report
    }
}

/// Random bounded interval sets around the spectrum of `D_k^2`: plain
/// intervals, `[0, t]`, single eigenvalues and two-piece unions, with random
/// open or closed ends.
pub fn sample_intervals(family: &OperatorFamily, k: u32, count: usize, seed: u64) -> Vec<IntervalSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(k).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let eig = family.resolution(k).eigenvalues();
    let lo = eig.first().copied().unwrap_or(0.0) - 1.0;
    let hi = eig.last().copied().unwrap_or(0.0) + 1.0;
    let random_interval = |rng: &mut ChaCha8Rng| {
        let a = rng.gen_range(lo..hi);
        let b = rng.gen_range(lo..hi);
        Interval { lo: a.min(b), hi: a.max(b), lo_closed: rng.gen(), hi_closed: rng.gen() }
    };
    (0..count)
        .map(|i| match i % 4 {
            0 => IntervalSet::single(random_interval(&mut rng)),
            1 => IntervalSet::single(Interval::closed(0.0, rng.gen_range(0.0..hi))),
            2 => IntervalSet::single(Interval::point(eig[rng.gen_range(0..eig.len())])),
            _ => {
                let a = random_interval(&mut rng);
                IntervalSet::new(vec![a, random_interval(&mut rng)])
            }
        })
        .collect()
}

/// Closed-form `D_k^2` eigenvalue on a label of the untruncated
/// representation.
pub fn predicted_d_sq(spec: &RepSpec, label: &BasisLabel, k: u32) -> f64 {
    let q = spec.q();
    let c = 1.0 / (1.0 - q);
    let orbit = |s: i64, x: f64| c + q.powi(s as i32) * (x - c);
    match (*spec, label) {
        (RepSpec::FockQ1 { .. }, BasisLabel::FockLevel { m }) => q_integer(*m as usize, q),
        (RepSpec::LineZ { x, .. }, BasisLabel::ZLevel { s }) => orbit(s - 1, x),
        (RepSpec::Circle { .. }, _) => c,
        (_, BasisLabel::WordOnly { word } | BasisLabel::WordLevel { word, .. }) if !word.is_empty() => {
            q_integer(m_k(Letter::new(k, spec.n()).expect("k in range"), word), q)
        }
        (RepSpec::UnboundedXJ { j, x, .. }, BasisLabel::WordLevel { s, .. }) if j == k => orbit(s - 1, x),
        (RepSpec::BoundedPhiJ { j, .. }, _) if j == k => c,
        _ => 0.0,
    }
}

/// Closed-form `C_k^2` eigenvalue.
pub fn predicted_c_sq(spec: &RepSpec, label: &BasisLabel, k: u32) -> f64 {
    let q = spec.q();
    let c = 1.0 / (1.0 - q);
    let orbit = |s: i64, x: f64| c + q.powi(s as i32) * (x - c);
    match (*spec, label) {
        (RepSpec::FockQ1 { .. }, BasisLabel::FockLevel { m }) => q_integer(*m as usize + 1, q),
        (RepSpec::LineZ { x, .. }, BasisLabel::ZLevel { s }) => orbit(*s, x),
        (RepSpec::Circle { .. }, _) => c,
        (RepSpec::UnboundedXJ { j, x, .. }, BasisLabel::WordLevel { word, s }) if j == k && word.is_empty() => orbit(*s, x),
        (RepSpec::BoundedPhiJ { j, .. }, BasisLabel::WordOnly { word }) if j == k && word.is_empty() => c,
        (_, l) => {
            let word = l.word().expect("word-labelled family");
            q_integer(m_k(Letter::new(k, spec.n()).expect("k in range"), word) + 1, q)
        }
    }
}

/// `D_k^2` against its closed form on every basis label and every `k`.
pub fn check_eigenvalue_laws(family: &OperatorFamily, tol: f64) -> ResidualReport {
    let spec = family.spec();
    let mut worst = 0.0f64;
    for k in 1..=family.n() {
        for (v, label) in family.basis().labels().iter().enumerate() {
            let expect = predicted_d_sq(spec, label, k);
            worst = worst.max(rel((family.d_sq(k)[v] - expect).abs(), expect.abs()));
        }
    }
    ResidualReport::new("eigenvalue_laws", tol, worst, family.dim())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    #[serde(flatten)]
    pub report: ResidualReport,
    pub generator: u32,
    /// Distinct eigenvalues of `C_k^2` over the whole truncated basis.
    pub eigenvalues: Vec<f64>,
    /// Distinct closed-form values for the same labels.
    pub predicted: Vec<f64>,
}

fn distinct(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= tol * b.abs().max(1.0));
    v
}

/// Eigenvalues of `C_k^2` against the closed forms: Fock-type values
/// `[m]_q`, orbit values of the unbounded direction, and `1/(1-q)` on the
/// unitary part.
///
/// Compares the stored diagonal on every label, and the truncated product
/// `A_k^* A_k` on interior_depth_1, where it must be diagonal; the sorted
/// interior multisets are compared as well.
pub fn spectrum_check(family: &OperatorFamily, k: u32, tol: f64) -> SpectrumReport {
    let spec = family.spec();
    let labels = family.basis().labels();
    let predicted: Vec<f64> = labels.iter().map(|l| predicted_c_sq(spec, l, k)).collect();
    let c_sq = family.c_sq(k);
    let mut worst = 0.0f64;
    for (v, &p) in predicted.iter().enumerate() {
        worst = worst.max(rel((c_sq[v] - p).abs(), p));
    }
    let product = family.adjoint(k).matmul(family.generator(k)).expect("square");
    let interior = family.interior(1);
    let mut off_diagonal = 0.0f64;
    let mut computed = Vec::with_capacity(interior.len());
    let mut expected = Vec::with_capacity(interior.len());
    for &v in &interior {
        for &(r, x) in product.column(v) {
            if r != v {
                off_diagonal = off_diagonal.max(x.norm());
            }
        }
        computed.push(product.get(v, v).re);
        expected.push(predicted[v]);
    }
    computed.sort_by(f64::total_cmp);
    expected.sort_by(f64::total_cmp);
    let multiset = computed
        .iter()
        .zip(&expected)
        .map(|(a, b)| rel((a - b).abs(), *b))
        .fold(0.0, f64::max);
    worst = worst.max(off_diagonal).max(multiset);
    let report = ResidualReport::new(format!("spectrum[k={k}]"), tol, worst, labels.len())
        .detail("interior_multiset", multiset)
        .detail("interior_off_diagonal", off_diagonal);
    SpectrumReport {
        report,
        generator: k,
        eigenvalues: distinct(c_sq.to_vec(), 1e-12),
        predicted: distinct(predicted, 1e-12),
    }
}

/// `Σ_{i=0..K} q^i S^i S^{*i}`.
pub fn series_number_operator(s: &SparseOperator, q: f64, terms: usize) -> SparseOperator {
    let dim = s.nrows();
    let s_adj = s.adjoint();
    let mut power = SparseOperator::identity(dim);
    let mut acc = SparseOperator::identity(dim);
    let mut left = SparseOperator::identity(dim);
    for i in 1..=terms {
        power = power.matmul(&s_adj).expect("square");
        left = left.matmul(s).expect("square");
        let term = left.matmul(&power).expect("square");
        acc = acc.axpy(C64::new(q.powi(i as i32), 0.0), &term).expect("square");
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    #[serde(flatten)]
    pub report: ResidualReport,
    pub terms: usize,
    /// `q^{K+1} / (1 - q)`.
    pub tail_bound: f64,
    /// `max ||(A - S (Σ)^{1/2}) v||`.
    pub sqrt_form_residual: f64,
    /// `max ||(A - S Σ) v||`, the form without the square root.
    pub plain_form_residual: f64,
    /// Set when the form without the square root misses `A` by more than
    /// the tail bound.
    pub plain_form_discrepancy: bool,
}

/// Compares the series against `C_k^2` and `S_k (series)^{1/2}` against
/// `A_k`, for every generator.
///
/// Labels qualify when every adjoint chain of length up to `K` from them
/// stays inside the window (so the truncated series is exact there). The
/// empty-word column of the unbounded direction is excluded: the series
/// converges to `1/(1-q)` there, not to the unbounded weight.
pub fn series_check(family: &OperatorFamily, terms: usize, slack: f64) -> SeriesReport {
    let q = family.q();
    let spec = family.spec();
    let tail = q.powi(terms as i32 + 1) / (1.0 - q);
    let tol = tail + slack;
    let (mut series_res, mut sqrt_res, mut plain_res) = (0.0f64, 0.0f64, 0.0f64);
    let mut checked = 0;
    for k in 1..=family.n() {
        let s = family.isometry(k);
        let series = series_number_operator(s, q, terms);
        let a = family.generator(k);
        for (v, label) in family.basis().labels().iter().enumerate() {
            if unbounded_direction(spec, label, k) || !adjoint_chain_inside(family, label, k, terms) {
                continue;
            }
            checked += 1;
            let sv = series.get(v, v).re;
            series_res = series_res.max((sv - family.c_sq(k)[v]).abs());
            let av = a.column(v).first().map(|&(r, w)| (r, w));
            let shifted = s.column(v).first().copied();
            let (d_sqrt, d_plain) = match (av, shifted) {
                (Some((r, w)), Some((r2, ph))) => {
                    debug_assert_eq!(r, r2);
                    ((w - ph * sv.sqrt()).norm(), (w - ph * sv).norm())
                }
                _ => (0.0, 0.0),
            };
            sqrt_res = sqrt_res.max(d_sqrt);
            plain_res = plain_res.max(d_plain);
        }
    }
    let discrepancy = plain_res > tol;
    let mut report = ResidualReport::new("series", tol, series_res.max(sqrt_res), checked)
        .detail("series_vs_c_sq", series_res)
        .detail("sqrt_form", sqrt_res)
        .detail("plain_form", plain_res)
        .detail("tail_bound", tail);
    if discrepancy {
        report = report.note("A = S·Σ q^n S^n S*^n (no square root) does not hold; A = S·(Σ q^n S^n S*^n)^(1/2) does");
    }
    SeriesReport {
        report,
        terms,
        tail_bound: tail,
        sqrt_form_residual: sqrt_res,
        plain_form_residual: plain_res,
        plain_form_discrepancy: discrepancy,
    }
}

fn unbounded_direction(spec: &RepSpec, label: &BasisLabel, k: u32) -> bool {
    match (*spec, label) {
        (RepSpec::LineZ { .. }, _) => true,
        (RepSpec::UnboundedXJ { j, .. }, BasisLabel::WordLevel { word, .. }) => j == k && word.is_empty(),
        _ => false,
    }
}

fn adjoint_chain_inside(family: &OperatorFamily, label: &BasisLabel, k: u32, steps: usize) -> bool {
    let spec = family.spec();
    let mut cur = label.clone();
    for _ in 0..steps {
        match spec.step(&cur, k, true) {
            crate::rep::Step::Zero => return true,
            crate::rep::Step::To(t, _) => {
                if family.basis().ordinal(&t).is_none() {
                    return false;
                }
                if t == cur {
                    return true;
                }
                cur = t;
            }
        }
    }
    true
}
